#include "tbp/manifold.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/QR>
#include <Eigen/SVD>
#include <fmt/format.h>

#include "tbp/io.hpp"
#include "tbp/rng.hpp"

namespace tbp {

namespace {

constexpr std::array<char, 3> kRowLetters{'a', 'b', 'l'};

// Family members in their listed order.
const std::array<std::array<int, 3>, 6> kFamilyA{{
    {slot_index(0, 0), slot_index(0, 1), slot_index(0, 2)},
    {slot_index(1, 0), slot_index(1, 1), slot_index(1, 2)},
    {slot_index(2, 0), slot_index(2, 1), slot_index(2, 2)},
    {slot_index(0, 0), slot_index(1, 0), slot_index(2, 0)},
    {slot_index(0, 1), slot_index(1, 1), slot_index(2, 1)},
    {slot_index(0, 2), slot_index(1, 2), slot_index(2, 2)},
}};

const std::array<std::array<int, 3>, 6> kFamilyB{{
    {slot_index(0, 0), slot_index(1, 1), slot_index(2, 2)},
    {slot_index(0, 0), slot_index(1, 2), slot_index(2, 1)},
    {slot_index(0, 1), slot_index(1, 0), slot_index(2, 2)},
    {slot_index(0, 1), slot_index(1, 2), slot_index(2, 0)},
    {slot_index(0, 2), slot_index(1, 0), slot_index(2, 1)},
    {slot_index(0, 2), slot_index(1, 1), slot_index(2, 0)},
}};

std::array<int, 3> sorted3(std::array<int, 3> s) {
  std::sort(s.begin(), s.end());
  return s;
}

int parse_slot(std::string_view s) {
  auto trim = [](std::string_view v) {
    while (!v.empty() && (v.front() == ' ' || v.front() == '\t')) v.remove_prefix(1);
    while (!v.empty() && (v.back() == ' ' || v.back() == '\t')) v.remove_suffix(1);
    return v;
  };
  s = trim(s);
  if (s.size() != 2) throw std::invalid_argument("bad slot name '" + std::string(s) + "'");
  int row = -1;
  for (int r = 0; r < 3; ++r) {
    if (std::tolower(static_cast<unsigned char>(s[0])) == kRowLetters[r]) row = r;
  }
  const int col = s[1] - '1';
  if (row < 0 || col < 0 || col > 2) throw std::invalid_argument("bad slot name '" + std::string(s) + "'");
  return slot_index(row, col);
}

}  // namespace

std::string slot_name(int slot) {
  return fmt::format("{}{}", kRowLetters.at(static_cast<std::size_t>(slot_row(slot))), slot_column(slot) + 1);
}

std::string_view family_name(Family f) {
  switch (f) {
    case Family::A: return "A";
    case Family::B: return "B";
    case Family::C: return "C";
    case Family::D: return "D";
    case Family::Other: return "other";
  }
  return "other";
}

TripleId::TripleId(std::array<int, 3> slots) : slots_(slots), sorted_(sorted3(slots)) {
  for (int s : sorted_) {
    if (s < 0 || s > 8) throw std::invalid_argument("slot index out of range");
  }
  if (sorted_[0] == sorted_[1] || sorted_[1] == sorted_[2])
    throw std::invalid_argument("triple slots must be distinct");

  std::size_t k = 0;
  for (int s = 0; s < 9; ++s) {
    if (std::find(sorted_.begin(), sorted_.end(), s) == sorted_.end()) unknowns_[k++] = s;
  }

  family_ = Family::Other;
  label_.clear();
  for (std::size_t i = 0; i < 6; ++i) {
    if (sorted3(kFamilyA[i]) == sorted_) {
      family_ = Family::A;
      label_ = fmt::format("A{}", i + 1);
    }
    if (sorted3(kFamilyB[i]) == sorted_) {
      family_ = Family::B;
      label_ = fmt::format("B{}", i + 1);
    }
  }
}

TripleId TripleId::parse(std::string_view text) {
  if (text.size() == 2 && (text[0] == 'A' || text[0] == 'B') && text[1] >= '1' && text[1] <= '6') {
    return family_member(text[0] == 'A' ? Family::A : Family::B, text[1] - '0');
  }
  std::array<int, 3> slots{};
  std::size_t n = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto piece = text.substr(start, comma == std::string_view::npos ? text.size() - start : comma - start);
    if (n == 3) throw std::invalid_argument("triple needs exactly three slots: '" + std::string(text) + "'");
    slots[n++] = parse_slot(piece);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  if (n != 3) throw std::invalid_argument("triple needs exactly three slots: '" + std::string(text) + "'");
  return TripleId(slots);
}

std::string TripleId::slot_list() const {
  return slot_name(slots_[0]) + "," + slot_name(slots_[1]) + "," + slot_name(slots_[2]);
}

std::string TripleId::display_name() const { return label_.empty() ? slot_list() : label_; }

std::vector<TripleId> enumerate_triples() {
  std::vector<TripleId> out;
  out.reserve(84);
  for (int i = 0; i < 9; ++i)
    for (int j = i + 1; j < 9; ++j)
      for (int k = j + 1; k < 9; ++k) out.emplace_back(std::array<int, 3>{i, j, k});
  return out;
}

TripleId family_member(Family family, int index) {
  if (index < 1 || index > 6) throw std::invalid_argument("family member index must be 1..6");
  if (family == Family::A) return TripleId(kFamilyA[static_cast<std::size_t>(index - 1)]);
  if (family == Family::B) return TripleId(kFamilyB[static_cast<std::size_t>(index - 1)]);
  throw std::invalid_argument("only families A and B have listed members");
}

std::array<TripleId, 3> complete_member(const TripleId& triple) {
  const auto s = [](int r, int c) { return slot_index(r, c); };
  if (triple == family_member(Family::A, 1)) {
    return {triple, TripleId({s(1, 0), s(2, 1), s(1, 2)}), TripleId({s(2, 0), s(1, 1), s(2, 2)})};
  }
  if (triple == family_member(Family::B, 1)) {
    return {triple, TripleId({s(0, 1), s(1, 2), s(2, 0)}), TripleId({s(0, 2), s(1, 0), s(2, 1)})};
  }
  throw std::invalid_argument("complete members are defined for A1 and B1 only");
}

Mat3 assemble(const Vec6& unknowns, const TripleId& triple, const Vec3& fixed) {
  Mat3 u;
  for (int k = 0; k < 3; ++k) {
    const int s = triple.slots()[static_cast<std::size_t>(k)];
    u(slot_row(s), slot_column(s)) = fixed[k];
  }
  for (int k = 0; k < 6; ++k) {
    const int s = triple.unknowns()[static_cast<std::size_t>(k)];
    u(slot_row(s), slot_column(s)) = unknowns[k];
  }
  return u;
}

Vec6 unknowns_of(const Mat3& u, const TripleId& triple) {
  Vec6 x;
  for (int k = 0; k < 6; ++k) {
    const int s = triple.unknowns()[static_cast<std::size_t>(k)];
    x[k] = u(slot_row(s), slot_column(s));
  }
  return x;
}

Vec3 fixed_of(const Mat3& u, const TripleId& triple) {
  Vec3 f;
  for (int k = 0; k < 3; ++k) {
    const int s = triple.slots()[static_cast<std::size_t>(k)];
    f[k] = u(slot_row(s), slot_column(s));
  }
  return f;
}

namespace {

constexpr std::array<std::array<int, 2>, 3> kColumnPairs{{{0, 1}, {0, 2}, {1, 2}}};

Vec6 residuals_of(const Mat3& u) {
  Vec6 g;
  for (int i = 0; i < 3; ++i) g[i] = u.col(i).squaredNorm() - 1.0;
  for (int k = 0; k < 3; ++k) {
    const auto [i, j] = kColumnPairs[static_cast<std::size_t>(k)];
    g[3 + k] = u.col(i).dot(u.col(j));
  }
  return g;
}

}  // namespace

Vec6 residuals(const Vec6& x, const TripleId& triple, const Vec3& fixed) {
  return residuals_of(assemble(x, triple, fixed));
}

Mat6 residual_jacobian(const Vec6& x, const TripleId& triple, const Vec3& fixed) {
  const Mat3 u = assemble(x, triple, fixed);
  Mat6 w = Mat6::Zero();
  for (int k = 0; k < 6; ++k) {
    const int s = triple.unknowns()[static_cast<std::size_t>(k)];
    const int r = slot_row(s);
    const int c = slot_column(s);
    w(c, k) = 2.0 * u(r, c);
    for (int p = 0; p < 3; ++p) {
      const auto [i, j] = kColumnPairs[static_cast<std::size_t>(p)];
      if (c == i) w(3 + p, k) += u(r, j);
      if (c == j) w(3 + p, k) += u(r, i);
    }
  }
  return w;
}

double objective(const Vec6& x, const TripleId& triple, const Vec3& fixed) {
  return residuals(x, triple, fixed).squaredNorm();
}

Vec6 objective_gradient(const Vec6& x, const TripleId& triple, const Vec3& fixed) {
  return 2.0 * residual_jacobian(x, triple, fixed).transpose() * residuals(x, triple, fixed);
}

bool meets_residual_contract(const Vec6& g) {
  for (int i = 0; i < 3; ++i) {
    if (!(std::abs(g[i]) <= kNormResidualTol)) return false;
  }
  for (int i = 3; i < 6; ++i) {
    if (!(std::abs(g[i]) <= kOrthogonalityResidualTol)) return false;
  }
  return true;
}

void SolverConfig::validate() const {
  if (!(eps_inner > 0.0)) throw ValidationError("manifold.eps_inner", "must be > 0");
  if (!(eps_outer > 0.0)) throw ValidationError("manifold.eps_outer", "must be > 0");
  if (!(eps_outer <= eps_inner * eps_inner)) throw ValidationError("manifold.eps_outer", "must be <= eps_inner^2");
  if (max_inner < 1) throw ValidationError("manifold.max_inner", "must be >= 1");
  if (max_restarts < 1) throw ValidationError("manifold.max_restarts", "must be >= 1");
  if (!(max_fixed_shift >= 0.0)) throw ValidationError("manifold.max_fixed_shift", "must be >= 0");
}

namespace {

void check_interior(const Vec3& fixed) {
  for (int k = 0; k < 3; ++k) {
    if (!(std::abs(fixed[k]) < 1.0))
      throw std::invalid_argument(fmt::format("fixed value {} must lie in (-1, 1)", fixed[k]));
  }
}

// Necessary conditions from unit rows and columns of an orthogonal array.
void check_budgets(const TripleId& triple, const Vec3& fixed, double max_shift) {
  const double slack = 6.0 * max_shift + 1e-12;
  for (int axis = 0; axis < 2; ++axis) {
    for (int line = 0; line < 3; ++line) {
      double sum = 0.0;
      int count = 0;
      for (int k = 0; k < 3; ++k) {
        const int s = triple.slots()[static_cast<std::size_t>(k)];
        if ((axis == 0 ? slot_row(s) : slot_column(s)) == line) {
          sum += fixed[k] * fixed[k];
          ++count;
        }
      }
      const char* what = axis == 0 ? "row" : "column";
      if (sum > 1.0 + slack) {
        throw DegenerateFixedTriple(
            fmt::format("fixed values of {} {} have squared sum {} > 1; no real solution", what, line + 1, sum));
      }
      if (count == 3 && std::abs(sum - 1.0) > slack) {
        throw DegenerateFixedTriple(
            fmt::format("a full {} of an orthogonal array must have unit norm, got squared sum {}", what, sum));
      }
    }
  }
}

std::array<int, 3> unknowns_per_column(const TripleId& triple) {
  std::array<int, 3> n{0, 0, 0};
  for (int s : triple.unknowns()) ++n[static_cast<std::size_t>(slot_column(s))];
  return n;
}

}  // namespace

Vec6 initial_guess(const TripleId& triple, const Vec3& fixed, std::mt19937_64& rng) {
  std::array<double, 3> budget{1.0, 1.0, 1.0};
  for (int k = 0; k < 3; ++k) {
    budget[static_cast<std::size_t>(slot_column(triple.slots()[static_cast<std::size_t>(k)]))] -= fixed[k] * fixed[k];
  }
  const auto per_column = unknowns_per_column(triple);

  std::array<int, 6> signs{};
  std::uniform_int_distribution<int> coin(0, 1);
  auto uniform = [](const int* s) { return s[0] == s[1] && s[1] == s[2]; };
  do {
    for (auto& s : signs) s = coin(rng) ? 1 : -1;
  } while (uniform(signs.data()) || uniform(signs.data() + 3));

  Vec6 x;
  for (int k = 0; k < 6; ++k) {
    const auto c = static_cast<std::size_t>(slot_column(triple.unknowns()[static_cast<std::size_t>(k)]));
    x[k] = signs[static_cast<std::size_t>(k)] * std::sqrt(std::max(budget[c], 0.0) / per_column[c]);
  }
  return x;
}

Vec6 initial_guess(const TripleId& triple, const Vec3& fixed, std::uint64_t seed) {
  auto rng = make_rng(seed);
  return initial_guess(triple, fixed, rng);
}

namespace {

constexpr int kMaxHalvings = 60;
constexpr int kMaxRefinements = 6;

// Conjugate directions with Polak-Ribiere coefficients and a halving line
// search that accepts the first decrease. Returns the iterations used.
int descend(Vec6& x, const TripleId& triple, const Vec3& fixed, double tol, int max_iter) {
  double k_cur = objective(x, triple, fixed);
  Vec6 grad = objective_gradient(x, triple, fixed);
  if (grad.norm() <= tol) return 0;
  Vec6 p = -grad;
  bool steepest = true;

  int it = 0;
  while (it < max_iter) {
    if (p.dot(grad) >= 0.0) {
      p = -grad;
      steepest = true;
    }
    double delta = 1.0;
    bool decreased = false;
    Vec6 x_new;
    double k_new = k_cur;
    for (int h = 0; h <= kMaxHalvings; ++h) {
      x_new = x + delta * p;
      k_new = objective(x_new, triple, fixed);
      if (k_new < k_cur) {
        decreased = true;
        break;
      }
      delta *= 0.5;
    }
    if (!decreased) {
      if (steepest) break;  // stalled at rounding level
      p = -grad;
      steepest = true;
      continue;
    }
    ++it;
    x = x_new;
    k_cur = k_new;
    const Vec6 grad_new = objective_gradient(x, triple, fixed);
    if (grad_new.norm() <= tol) break;
    const double gamma = grad_new.dot(grad_new - grad) / grad.squaredNorm();
    p = -grad_new + gamma * p;
    steepest = false;
    grad = grad_new;
  }
  return it;
}

Mat3 nearest_orthogonal(const Mat3& u) {
  Eigen::JacobiSVD<Mat3> svd(u, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().transpose();
}

struct Attempt {
  Vec6 x;
  Vec3 fixed;
  Vec6 g;
  int iterations = 0;
  double shift_needed = 0.0;  // projection distance of the last unaccepted iterate
};

}  // namespace

UnitFrame conjugate_direction_solve(const TripleId& triple, const Vec3& fixed, const SolverConfig& cfg) {
  cfg.validate();
  check_interior(fixed);
  check_budgets(triple, fixed, cfg.max_fixed_shift);

  auto rng = make_rng(derive_seed(cfg.seed, kStreamSolver));
  int total_iterations = 0;
  std::optional<Attempt> best;
  double min_shift = std::numeric_limits<double>::infinity();

  for (int restart = 0; restart < cfg.max_restarts; ++restart) {
    Attempt a;
    a.fixed = fixed;
    a.x = initial_guess(triple, fixed, rng);
    a.iterations = descend(a.x, triple, a.fixed, cfg.eps_inner, cfg.max_inner);
    a.g = residuals(a.x, triple, a.fixed);

    // Refine the fixed data: move the whole array to the nearest orthogonal
    // one and continue descending toward the outer tolerance.
    for (int r = 0; r < kMaxRefinements && !meets_residual_contract(a.g); ++r) {
      const Mat3 projected = nearest_orthogonal(assemble(a.x, triple, a.fixed));
      const Vec3 refined = fixed_of(projected, triple);
      const double shift = (refined - fixed).cwiseAbs().maxCoeff();
      a.shift_needed = shift;
      if (shift > cfg.max_fixed_shift || !(refined.cwiseAbs().maxCoeff() < 1.0)) break;
      a.fixed = refined;
      a.x = unknowns_of(projected, triple);
      a.iterations += descend(a.x, triple, a.fixed, cfg.eps_outer, cfg.max_inner);
      a.g = residuals(a.x, triple, a.fixed);
    }
    total_iterations += a.iterations;

    if (meets_residual_contract(a.g)) {
      UnitFrame frame;
      frame.coefficients = assemble(a.x, triple, a.fixed);
      frame.residuals = a.g;
      frame.triple = triple;
      frame.fixed = a.fixed;
      frame.iterations = total_iterations;
      frame.restarts = restart;
      return frame;
    }
    min_shift = std::min(min_shift, a.shift_needed);
    if (!best || a.g.squaredNorm() < best->g.squaredNorm()) best = a;
  }

  UnitFrame frame;
  frame.coefficients = assemble(best->x, triple, best->fixed);
  frame.residuals = best->g;
  frame.triple = triple;
  frame.fixed = best->fixed;
  frame.iterations = total_iterations;
  frame.restarts = cfg.max_restarts;
  if (min_shift > cfg.max_fixed_shift) {
    throw DegenerateFixedTriple(fmt::format(
        "no real solution within {} of the fixed values (nearest needs a shift of {})", cfg.max_fixed_shift, min_shift));
  }
  throw NonConvergence(fmt::format("solver caps exhausted after {} restarts, best |g|_inf = {}", cfg.max_restarts,
                                   frame.residual_inf()),
                       frame);
}

Vec3 random_feasible_fixed(const TripleId& triple, std::mt19937_64& rng, double margin) {
  std::normal_distribution<double> normal;
  for (;;) {
    Mat3 m;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) m(i, j) = normal(rng);
    Eigen::HouseholderQR<Mat3> qr(m);
    Mat3 q = qr.householderQ();
    const Mat3 r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < 3; ++j) {
      if (r(j, j) < 0.0) q.col(j) = -q.col(j);
    }
    const Vec3 f = fixed_of(q, triple);
    if (f.cwiseAbs().maxCoeff() < 1.0 - margin) return f;
  }
}

std::vector<ManifoldSample> sample_manifold(const TripleId& triple, std::size_t n, const SolverConfig& cfg,
                                            std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("sample count must be >= 1");
  cfg.validate();
  std::vector<ManifoldSample> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i].index = i;
    auto rng = make_rng(derive_seed(seed, kStreamFixed, i));
    const Vec3 fixed = random_feasible_fixed(triple, rng);
    SolverConfig local = cfg;
    local.seed = derive_seed(seed, kStreamSample, i);
    try {
      out[i].frame = conjugate_direction_solve(triple, fixed, local);
    } catch (const Error& e) {
      out[i].error = e.what();
    }
  }
  return out;
}

std::string point_cloud_csv(const std::vector<ManifoldSample>& samples) {
  std::string text = "fixed1,fixed2,fixed3,v1,v2,v3,v4,v5,v6,res_inf,iters\n";
  for (const auto& s : samples) {
    if (!s.frame) {
      text += "nan,nan,nan,nan,nan,nan,nan,nan,nan,nan,-1\n";
      continue;
    }
    const auto& f = *s.frame;
    const Vec6 x = f.unknowns();
    for (int k = 0; k < 3; ++k) text += io::format_double(f.fixed[k]) + ",";
    for (int k = 0; k < 6; ++k) text += io::format_double(x[k]) + ",";
    text += io::format_double(f.residual_inf()) + "," + std::to_string(f.iterations) + "\n";
  }
  return text;
}

}  // namespace tbp
