#include "tbp/stochastic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <thread>

#include <boost/geometry.hpp>
#include <boost/geometry/index/rtree.hpp>
#include <boost/math/special_functions/digamma.hpp>
#include <fmt/format.h>

#include "tbp/io.hpp"
#include "tbp/rng.hpp"

namespace tbp {

void NoiseSpec::validate() const {
  switch (kind) {
    case Kind::Zero:
      break;
    case Kind::Constant:
      if (!(intensity >= 0.0) || !std::isfinite(intensity))
        throw ValidationError("ensemble.intensity", "must be finite and >= 0");
      break;
    case Kind::Tabulated:
      if (table_t.empty() || table_t.size() != table_eps.size())
        throw ValidationError("ensemble.table", "needs matching, non-empty t and eps columns");
      for (std::size_t i = 0; i < table_t.size(); ++i) {
        if (!std::isfinite(table_t[i]) || !std::isfinite(table_eps[i]))
          throw ValidationError("ensemble.table", "values must be finite");
        if (i > 0 && !(table_t[i] > table_t[i - 1]))
          throw ValidationError("ensemble.table", "times must be strictly increasing");
      }
      break;
  }
  if (kind != Kind::Zero && std::none_of(mask.begin(), mask.end(), [](bool b) { return b; }))
    throw ValidationError("ensemble.mask", "must select at least one component");
}

double NoiseSpec::at(double t, bool* clamped) const {
  double eps = 0.0;
  switch (kind) {
    case Kind::Zero:
      return 0.0;
    case Kind::Constant:
      return intensity;
    case Kind::Tabulated: {
      if (t <= table_t.front()) {
        eps = table_eps.front();
      } else if (t >= table_t.back()) {
        eps = table_eps.back();
      } else {
        const auto hi = static_cast<std::size_t>(std::upper_bound(table_t.begin(), table_t.end(), t) - table_t.begin());
        const std::size_t lo = hi - 1;
        const double w = (t - table_t[lo]) / (table_t[hi] - table_t[lo]);
        eps = table_eps[lo] + w * (table_eps[hi] - table_eps[lo]);
      }
      break;
    }
  }
  if (eps < 0.0) {
    if (clamped) *clamped = true;
    return 0.0;
  }
  return eps;
}

double NoiseSpec::mean_over(double horizon) const {
  if (!(horizon > 0.0)) throw std::invalid_argument("averaging horizon must be > 0");
  if (kind != Kind::Tabulated) return at(0.0);
  std::vector<double> nodes{0.0};
  for (double t : table_t) {
    if (t > 0.0 && t < horizon) nodes.push_back(t);
  }
  nodes.push_back(horizon);
  double integral = 0.0;
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    integral += 0.5 * (at(nodes[i - 1]) + at(nodes[i])) * (nodes[i] - nodes[i - 1]);
  }
  return integral / horizon;
}

Vec6 langevin_increment(const Vec6& drift, double dt, double eps, const std::array<bool, 6>& mask,
                        std::mt19937_64& rng) {
  Vec6 dz = dt * drift;
  if (eps > 0.0) {
    std::normal_distribution<double> normal;
    const double amplitude = std::sqrt(2.0 * eps * dt);
    for (int i = 0; i < 6; ++i) {
      if (mask[static_cast<std::size_t>(i)]) dz[i] += amplitude * normal(rng);
    }
  }
  return dz;
}

void langevin_step(FlowPoint& p, const GeodesicFlow& flow, double t, double dt, const NoiseSpec& noise,
                   std::mt19937_64& rng, std::size_t* clamp_count) {
  bool clamped = false;
  const double eps = noise.at(t, &clamped);
  if (clamped && clamp_count) ++*clamp_count;
  const TransformFrame base = flow.frame_at(p.jacobi.rho);
  const Vec6 drift = flow.field(p.y, p.jacobi.rho, base, 1);
  flow.apply_increment(p, langevin_increment(drift, dt, eps, noise.mask, rng), base);
}

void EnsembleConfig::validate() const {
  sim.validate();
  noise.validate();
  if (members < 2) throw ValidationError("ensemble.members", "must be >= 2");
  for (double t : snapshot_times) {
    if (!(t >= 0.0) || !std::isfinite(t)) throw ValidationError("ensemble.snapshots", "times must be >= 0");
    if (t > static_cast<double>(sim.steps) * sim.dt * (1.0 + 1e-12))
      throw ValidationError("ensemble.snapshots", fmt::format("time {} lies beyond the run horizon", t));
  }
}

namespace {

bool diverged(const FlowPoint& p) {
  const auto bad = [](const auto& v) { return !v.allFinite() || v.cwiseAbs().maxCoeff() > kDivergenceBound; };
  return bad(p.y) || bad(p.jacobi.rho) || bad(p.jacobi.rho_dot);
}

struct MemberOutput {
  std::vector<Vec6> states;   // one per snapshot
  std::vector<char> alive;    // one per snapshot
  Termination termination = Termination::Completed;
  std::size_t clamps = 0;
};

}  // namespace

EnsembleResult run_ensemble(const EnsembleConfig& cfg, const UnitFrame& unit) {
  cfg.validate();
  const GeodesicFlow flow(cfg.sim.model, unit.coefficients, unit.triple);
  const FlowPoint start = flow.start(cfg.sim.initial, cfg.sim.time_origin);

  std::vector<std::size_t> snap_steps;
  for (double t : cfg.snapshot_times) {
    snap_steps.push_back(std::min<std::size_t>(static_cast<std::size_t>(std::llround(t / cfg.sim.dt)), cfg.sim.steps));
  }
  std::vector<std::size_t> order(snap_steps.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return snap_steps[a] < snap_steps[b]; });
  const std::size_t last_step = snap_steps.empty() ? cfg.sim.steps : snap_steps[order.back()];

  std::vector<MemberOutput> out(cfg.members);
  const auto run_member = [&](std::size_t m) {
    MemberOutput& mo = out[m];
    mo.states.assign(snap_steps.size(), Vec6::Constant(std::numeric_limits<double>::quiet_NaN()));
    mo.alive.assign(snap_steps.size(), 0);
    auto rng = make_rng(derive_seed(cfg.noise.seed, kStreamNoise, m));
    FlowPoint p = start;
    std::size_t next = 0;
    const auto record = [&](std::size_t step) {
      while (next < order.size() && snap_steps[order[next]] == step) {
        mo.states[order[next]] = p.y;
        mo.alive[order[next]] = 1;
        ++next;
      }
    };
    record(0);
    for (std::size_t step = 0; step < last_step; ++step) {
      const double t = static_cast<double>(step) * cfg.sim.dt;
      try {
        if (cfg.drift == DriftModel::Geodesic) {
          langevin_step(p, flow, t, cfg.sim.dt, cfg.noise, rng, &mo.clamps);
        } else {
          bool clamped = false;
          const double eps = cfg.noise.at(t, &clamped);
          if (clamped) ++mo.clamps;
          p.y += langevin_increment(Vec6::Zero(), cfg.sim.dt, eps, cfg.noise.mask, rng);
        }
      } catch (const ForbiddenRegion&) {
        mo.termination = Termination::ForbiddenRegion;
        return;
      }
      if (diverged(p)) {
        mo.termination = Termination::Diverged;
        return;
      }
      record(step + 1);
    }
  };

  unsigned threads = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, cfg.members));
  if (threads <= 1) {
    for (std::size_t m = 0; m < cfg.members; ++m) run_member(m);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t m = w; m < cfg.members; m += threads) run_member(m);
      });
    }
    for (auto& th : pool) th.join();
  }

  EnsembleResult result;
  result.unit = unit;
  result.snapshots.resize(snap_steps.size());
  for (std::size_t k = 0; k < snap_steps.size(); ++k) {
    auto& snap = result.snapshots[k];
    snap.step = snap_steps[k];
    snap.t = static_cast<double>(snap_steps[k]) * cfg.sim.dt;
    for (const auto& mo : out) {
      if (mo.alive[k]) snap.points.push_back(mo.states[k]);
    }
  }
  for (const auto& mo : out) {
    result.terminations.push_back(mo.termination);
    result.clamp_count += mo.clamps;
  }
  return result;
}

EnsembleResult run_ensemble(const EnsembleConfig& cfg) {
  cfg.validate();
  return run_ensemble(cfg, conjugate_direction_solve(cfg.sim.triple, resolve_fixed(cfg.sim), cfg.sim.solver));
}

namespace {

namespace bg = boost::geometry;
namespace bgi = boost::geometry::index;
using Point6 = bg::model::point<double, 6, bg::cs::cartesian>;
using Entry = std::pair<Point6, std::size_t>;

Point6 to_point(const Vec6& v) {
  Point6 p;
  bg::set<0>(p, v[0]);
  bg::set<1>(p, v[1]);
  bg::set<2>(p, v[2]);
  bg::set<3>(p, v[3]);
  bg::set<4>(p, v[4]);
  bg::set<5>(p, v[5]);
  return p;
}

void require_sample(const std::vector<Vec6>& points, const char* what) {
  if (points.size() < kMinFunctionalSample)
    throw DegenerateSample(fmt::format("{} needs at least {} points, got {}", what, kMinFunctionalSample, points.size()));
  for (const auto& p : points) {
    if (!p.allFinite()) throw DegenerateSample(fmt::format("{}: sample holds a non-finite point", what));
  }
}

Vec6 spread(const std::vector<Vec6>& points) {
  Vec6 lo = points.front();
  Vec6 hi = points.front();
  for (const auto& p : points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  return hi - lo;
}

}  // namespace

double entropy(const std::vector<Vec6>& points) {
  require_sample(points, "entropy");
  const Vec6 range = spread(points);
  for (int i = 0; i < 6; ++i) {
    if (!(range[i] > 0.0)) throw DegenerateSample(fmt::format("coordinate {} has zero spread", i + 1));
  }

  std::vector<Entry> entries;
  entries.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) entries.emplace_back(to_point(points[i]), i);
  const bgi::rtree<Entry, bgi::rstar<16>> tree(entries.begin(), entries.end());

  const auto n = static_cast<double>(points.size());
  constexpr int k = kEntropyNeighbours;
  double sum_log = 0.0;
  std::vector<Entry> found;
  for (std::size_t i = 0; i < points.size(); ++i) {
    found.clear();
    tree.query(bgi::nearest(entries[i].first, k + 1), std::back_inserter(found));
    if (found.size() < static_cast<std::size_t>(k + 1)) throw DegenerateSample("too few neighbours");
    // The query point itself sits at distance zero among the hits.
    std::array<double, k + 1> d{};
    for (std::size_t j = 0; j < d.size(); ++j) d[j] = (points[found[j].second] - points[i]).norm();
    std::sort(d.begin(), d.end());
    const double radius = d[k];
    if (!(radius > 0.0)) throw DegenerateSample("coincident points: nearest-neighbour distance is zero");
    sum_log += std::log(radius);
  }
  const double log_unit_ball = 3.0 * std::log(M_PI) - std::log(6.0);  // pi^3 / 3!
  return boost::math::digamma(n) - boost::math::digamma(static_cast<double>(k)) + log_unit_ball + 6.0 * sum_log / n;
}

namespace {

struct Labelled {
  Vec6 z;
  bool reference;
};

void partition_tv(std::vector<Labelled>& pts, std::size_t lo, std::size_t hi, std::size_t leaf, double wp, double wq,
                  double& tv) {
  const std::size_t n = hi - lo;
  const auto leaf_tv = [&] {
    std::size_t nq = 0;
    for (std::size_t i = lo; i < hi; ++i) nq += pts[i].reference ? 1 : 0;
    tv += std::abs(static_cast<double>(n - nq) * wp - static_cast<double>(nq) * wq);
  };
  if (n < 2 * leaf) {
    leaf_tv();
    return;
  }
  Vec6 mean = Vec6::Zero();
  for (std::size_t i = lo; i < hi; ++i) mean += pts[i].z;
  mean /= static_cast<double>(n);
  Vec6 var = Vec6::Zero();
  for (std::size_t i = lo; i < hi; ++i) var += (pts[i].z - mean).cwiseAbs2();
  int axis = 0;
  var.maxCoeff(&axis);
  if (!(var[axis] > 0.0)) {
    leaf_tv();
    return;
  }
  const auto first = pts.begin() + static_cast<std::ptrdiff_t>(lo);
  const auto last = pts.begin() + static_cast<std::ptrdiff_t>(hi);
  const auto mid = first + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(first, mid, last, [axis](const Labelled& a, const Labelled& b) { return a.z[axis] < b.z[axis]; });
  const double v = mid->z[axis];
  // Split geometrically, so equal values never land on both sides.
  auto cut = std::partition(first, last, [&](const Labelled& p) { return p.z[axis] < v; });
  auto n_left = static_cast<std::size_t>(cut - first);
  if (n_left < leaf || n - n_left < leaf) {
    cut = std::partition(first, last, [&](const Labelled& p) { return p.z[axis] <= v; });
    n_left = static_cast<std::size_t>(cut - first);
  }
  if (n_left < leaf || n - n_left < leaf) {
    leaf_tv();
    return;
  }
  partition_tv(pts, lo, lo + n_left, leaf, wp, wq, tv);
  partition_tv(pts, lo + n_left, hi, leaf, wp, wq, tv);
}

}  // namespace

double disequilibrium(const std::vector<Vec6>& sample, const std::vector<Vec6>& reference, std::size_t leaf_size) {
  require_sample(sample, "disequilibrium");
  require_sample(reference, "disequilibrium reference");
  if (leaf_size < 1) throw std::invalid_argument("leaf size must be >= 1");
  std::vector<Labelled> pooled;
  pooled.reserve(sample.size() + reference.size());
  for (const auto& z : sample) pooled.push_back({z, false});
  for (const auto& z : reference) pooled.push_back({z, true});
  double tv = 0.0;
  partition_tv(pooled, 0, pooled.size(), leaf_size, 1.0 / static_cast<double>(sample.size()),
               1.0 / static_cast<double>(reference.size()), tv);
  const double half = std::clamp(0.5 * tv, 0.0, 1.0);
  return half * half;
}

double phase_volume(const std::vector<Vec6>& points) {
  require_sample(points, "phase volume");
  const auto n = static_cast<double>(points.size());
  Vec6 lo = points.front();
  for (const auto& p : points) lo = lo.cwiseMin(p);
  const Vec6 range = spread(points);
  Vec6 mean = Vec6::Zero();
  for (const auto& p : points) mean += p;
  mean /= n;
  Vec6 var = Vec6::Zero();
  for (const auto& p : points) var += (p - mean).cwiseAbs2();
  var /= n - 1.0;

  std::array<double, 6> width{};
  std::array<long long, 6> cells{};
  for (int i = 0; i < 6; ++i) {
    const double sigma = std::sqrt(var[i]);
    const auto u = static_cast<std::size_t>(i);
    if (!(sigma > 0.0) || !(range[i] > 0.0)) {
      width[u] = 0.0;
      cells[u] = 1;
      continue;
    }
    const double h = 3.49 * sigma * std::pow(n, -1.0 / 8.0);
    cells[u] = std::max<long long>(1, static_cast<long long>(std::ceil(range[i] / h)));
    width[u] = range[i] / static_cast<double>(cells[u]);
  }

  std::vector<std::array<long long, 6>> index;
  index.reserve(points.size());
  for (const auto& p : points) {
    std::array<long long, 6> c{};
    for (int i = 0; i < 6; ++i) {
      const auto u = static_cast<std::size_t>(i);
      if (width[u] > 0.0) {
        c[u] = std::min(cells[u] - 1, static_cast<long long>(std::floor((p[i] - lo[i]) / width[u])));
      }
    }
    index.push_back(c);
  }
  std::sort(index.begin(), index.end());
  const auto occupied = static_cast<double>(std::unique(index.begin(), index.end()) - index.begin());
  double cell_volume = 1.0;
  for (double w : width) cell_volume *= w;
  return occupied * cell_volume;
}

std::vector<FunctionalRow> flow_functionals(const EnsembleResult& run, const EnsembleResult& reference,
                                            std::size_t leaf_size) {
  if (run.snapshots.size() != reference.snapshots.size())
    throw std::invalid_argument("run and reference need the same snapshot times");
  std::vector<FunctionalRow> rows;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t k = 0; k < run.snapshots.size(); ++k) {
    const auto& snap = run.snapshots[k];
    FunctionalRow row;
    row.t = snap.t;
    row.survivors = snap.points.size();
    std::vector<std::string> notes;
    const auto guarded = [&](const char* name, auto&& f) {
      try {
        return f();
      } catch (const DegenerateSample& e) {
        notes.push_back(fmt::format("{}: {}", name, e.what()));
        return nan;
      }
    };
    row.s = guarded("S", [&] { return entropy(snap.points); });
    row.k = guarded("K", [&] { return disequilibrium(snap.points, reference.snapshots[k].points, leaf_size); });
    row.c = complexity(row.s, row.k);
    row.i0 = guarded("I0", [&] { return phase_volume(snap.points); });
    for (const auto& n : notes) row.note += (row.note.empty() ? "" : "; ") + n;
    rows.push_back(row);
  }
  return rows;
}

std::string functionals_csv(const std::vector<FunctionalRow>& rows) {
  std::string text = "t,N_survive,S,K,C,I0\n";
  const auto f = [](double v) { return std::isnan(v) ? std::string("nan") : io::format_double(v); };
  for (const auto& r : rows) {
    text += fmt::format("{},{},{},{},{},{}\n", f(r.t), r.survivors, f(r.s), f(r.k), f(r.c), f(r.i0));
  }
  return text;
}

std::string snapshot_csv(const EnsembleSnapshot& snap) {
  std::string text = "z1,z2,z3,z4,z5,z6\n";
  for (const auto& z : snap.points) {
    text += fmt::format("{},{},{},{},{},{}\n", io::format_double(z[0]), io::format_double(z[1]),
                        io::format_double(z[2]), io::format_double(z[3]), io::format_double(z[4]),
                        io::format_double(z[5]));
  }
  return text;
}

}  // namespace tbp
