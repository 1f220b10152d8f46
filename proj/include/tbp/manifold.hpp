#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "tbp/errors.hpp"
#include "tbp/linalg.hpp"

namespace tbp {

// Coefficient slots of the 3x3 unit array U, rows (alpha | beta | lambda),
// columns = subscript 1..3. Slot index is row * 3 + column.
constexpr int slot_index(int row, int column) { return row * 3 + column; }
constexpr int slot_row(int slot) { return slot / 3; }
constexpr int slot_column(int slot) { return slot % 3; }
std::string slot_name(int slot);  // "a1" .. "l3"

enum class Family { A, B, C, D, Other };
std::string_view family_name(Family f);

/// Three coefficient slots held fixed as the manifold's free parameters.
class TripleId {
 public:
  TripleId() = default;
  /// Slots may be given in any order; they must be distinct and in [0, 9).
  explicit TripleId(std::array<int, 3> slots);

  /// Accepts "A1".."A6", "B1".."B6" or an explicit slot list like "b1,l2,b3".
  static TripleId parse(std::string_view text);

  const std::array<int, 3>& slots() const { return slots_; }
  /// The six remaining slots in ascending order: the solver's unknowns.
  const std::array<int, 6>& unknowns() const { return unknowns_; }
  Family family() const { return family_; }
  /// "A1" style label for listed family members, empty otherwise.
  const std::string& label() const { return label_; }
  /// "a1,a2,a3" style slot list, in the order the slots were given.
  std::string slot_list() const;
  std::string display_name() const;

  bool operator==(const TripleId& other) const { return sorted_ == other.sorted_; }

 private:
  std::array<int, 3> slots_{0, 1, 2};
  std::array<int, 3> sorted_{0, 1, 2};
  std::array<int, 6> unknowns_{3, 4, 5, 6, 7, 8};
  Family family_ = Family::A;
  std::string label_ = "A1";
};

/// All C(9,3) = 84 triples in lexicographic slot order.
std::vector<TripleId> enumerate_triples();

/// Members of family A or B in their listed order (index 1..6).
TripleId family_member(Family family, int index);

/// The manifold followed by its two companions (A1 and B1 only).
std::array<TripleId, 3> complete_member(const TripleId& triple);

// Residual contract of an accepted frame.
inline constexpr double kNormResidualTol = 1e-15;
inline constexpr double kOrthogonalityResidualTol = 1e-9;

/// Places fixed values and the six unknowns into the 3x3 array.
Mat3 assemble(const Vec6& unknowns, const TripleId& triple, const Vec3& fixed);
Vec6 unknowns_of(const Mat3& u, const TripleId& triple);
Vec3 fixed_of(const Mat3& u, const TripleId& triple);

/// g1..g3: column-norm defects, g4..g6: orthogonality of columns (1,2),
/// (1,3), (2,3).
Vec6 residuals(const Vec6& x, const TripleId& triple, const Vec3& fixed);
/// dg/dx, one row per residual.
Mat6 residual_jacobian(const Vec6& x, const TripleId& triple, const Vec3& fixed);
double objective(const Vec6& x, const TripleId& triple, const Vec3& fixed);
Vec6 objective_gradient(const Vec6& x, const TripleId& triple, const Vec3& fixed);

bool meets_residual_contract(const Vec6& g);

struct SolverConfig {
  double eps_inner = 1e-9;
  double eps_outer = 1e-18;
  int max_inner = 20000;
  int max_restarts = 16;
  std::uint64_t seed = 0;
  /// Largest change of the fixed values the refinement step may make.
  double max_fixed_shift = 1e-3;

  void validate() const;
};

/// Starting point: in each column the unknown entries split the column's
/// remaining unit budget evenly. Signs are random, with neither the first
/// three nor the last three all equal.
Vec6 initial_guess(const TripleId& triple, const Vec3& fixed, std::mt19937_64& rng);
Vec6 initial_guess(const TripleId& triple, const Vec3& fixed, std::uint64_t seed);

struct UnitFrame {
  Mat3 coefficients = Mat3::Identity();
  Vec6 residuals = Vec6::Zero();
  TripleId triple;
  Vec3 fixed = Vec3::Zero();  // fixed values actually used, after refinement
  int iterations = 0;         // total descent iterations
  int restarts = 0;

  Vec6 unknowns() const { return unknowns_of(coefficients, triple); }
  double residual_inf() const { return residuals.cwiseAbs().maxCoeff(); }
};

class NonConvergence : public Error {
 public:
  NonConvergence(const std::string& what, UnitFrame best) : Error(what), best_(std::move(best)) {}
  const UnitFrame& best() const { return best_; }

 private:
  UnitFrame best_;
};

/// Conjugate-direction solve of the dimensionless system for the given fixed
/// values. Throws DegenerateFixedTriple when no real solution lies within
/// max_fixed_shift of the request, NonConvergence when the caps run out.
UnitFrame conjugate_direction_solve(const TripleId& triple, const Vec3& fixed, const SolverConfig& cfg);

/// Fixed values read off a Haar-random orthogonal matrix, so that a real
/// solution exists. All values lie in (-1+margin, 1-margin).
Vec3 random_feasible_fixed(const TripleId& triple, std::mt19937_64& rng, double margin = 1e-3);

struct ManifoldSample {
  std::size_t index = 0;
  std::optional<UnitFrame> frame;  // empty on failure
  std::string error;
};

/// n independent solves at random feasible fixed values; sample i uses
/// seeds derived from (seed, i) only.
std::vector<ManifoldSample> sample_manifold(const TripleId& triple, std::size_t n, const SolverConfig& cfg,
                                            std::uint64_t seed);

/// CSV `fixed1,fixed2,fixed3,v1,...,v6,res_inf,iters`, one row per sample in
/// index order. Failed samples carry `nan` values.
std::string point_cloud_csv(const std::vector<ManifoldSample>& samples);

}  // namespace tbp
