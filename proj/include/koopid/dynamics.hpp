#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "koopid/edmd.hpp"
#include "koopid/errors.hpp"
#include "koopid/types.hpp"
#include "koopid/vector_field.hpp"

namespace koopid {

// Counter-based pseudo-random stream (splitmix64). Every trajectory and
// noise source gets its own stream derived from (seed, index), so simulated
// datasets are reproducible independently of scheduling.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform on [0, 1) with 53-bit resolution.
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Standard normal via Box-Muller (no state carried between draws).
  double normal() {
    double u1 = uniform01();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  // Uniform integer in [0, bound), rejection-sampled to avoid modulo bias.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t limit =
        std::numeric_limits<std::uint64_t>::max() -
        std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t v = next();
    while (v >= limit) v = next();
    return v % bound;
  }

 private:
  std::uint64_t state_;
};

inline std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t index) {
  SplitMix64 mix(seed ^ (0x9e3779b97f4a7c15ull * (index + 1)));
  return mix.next();
}

struct Interval {
  double lo = -1.0;
  double hi = 1.0;
};

// How a synthetic dataset is produced: initial conditions, snapshot grid,
// integrator resolution, and the noise model.
struct SimulationProtocol {
  std::vector<Interval> initial_box;   // per state dimension
  int trajectories = 10;
  std::vector<double> snapshot_times;  // increasing, constant spacing
  int substeps = 100;                  // integrator steps per sampling period
  std::uint64_t seed = 0;
  double sigma_meas = 0.0;             // multiplicative measurement noise on y
  double sigma_proc = 0.0;             // white-noise intensity (SDE path)
  std::vector<int> noise_dims;         // 1-based dims driven by noise; empty = all
  std::string input_signal;            // "", "cos", "sin", "const"

  double sampling_period() const {
    if (snapshot_times.size() < 2)
      throw ConfigError("protocol: at least two snapshot times required");
    return (snapshot_times.back() - snapshot_times.front()) /
           static_cast<double>(snapshot_times.size() - 1);
  }

  void validate(int state_dim) const {
    if (static_cast<int>(initial_box.size()) != state_dim)
      throw ConfigError("protocol: initial box must have one interval per state dimension");
    for (const auto& iv : initial_box)
      if (!(iv.lo <= iv.hi)) throw ConfigError("protocol: empty initial-box interval");
    if (trajectories < 1) throw ConfigError("protocol: trajectory count must be >= 1");
    if (substeps < 1) throw ConfigError("protocol: substeps must be >= 1");
    if (sigma_meas < 0.0 || sigma_proc < 0.0)
      throw ConfigError("protocol: noise levels must be nonnegative");
    const double ts = sampling_period();
    if (!(ts > 0.0)) throw ConfigError("protocol: snapshot times must increase");
    for (std::size_t s = 0; s + 1 < snapshot_times.size(); ++s) {
      const double dt = snapshot_times[s + 1] - snapshot_times[s];
      if (std::abs(dt - ts) > 1e-9 * std::max(1.0, ts))
        throw ConfigError("protocol: snapshot spacing must be constant");
    }
    for (int d : noise_dims)
      if (d < 1 || d > state_dim)
        throw ConfigError("protocol: noise dimension out of range");
  }
};

struct InputSignal {
  int dim = 0;
  std::function<Vector(double)> eval;
};

inline InputSignal input_signal(const std::string& name) {
  if (name.empty() || name == "none") return {};
  if (name == "cos")
    return {1, [](double t) { return Vector::Constant(1, std::cos(t)); }};
  if (name == "sin")
    return {1, [](double t) { return Vector::Constant(1, std::sin(t)); }};
  if (name == "const")
    return {1, [](double) { return Vector::Constant(1, 1.0); }};
  throw ConfigError("unknown input signal '" + name +
                    "' (available: cos, sin, const, none)");
}

// States beyond this magnitude mark a trajectory as divergent.
inline constexpr double kDivergenceGuard = 1e6;

struct SimulationSummary {
  SnapshotDataset dataset;
  int divergent_trajectories = 0;
  std::vector<std::string> warnings;
};

namespace detail {

struct Rhs {
  const PolynomialVectorField& field;
  const InputSignal& input;
  mutable Vector point;

  Rhs(const PolynomialVectorField& f, const InputSignal& in)
      : field(f), input(in), point(f.n_vars) {}

  Vector operator()(const Eigen::Ref<const Vector>& x, double t) const {
    point.head(field.dim) = x;
    if (input.dim > 0) point.tail(input.dim) = input.eval(t);
    return evaluate_field(field, point);
  }
};

inline bool diverged(const Vector& x) {
  return !x.allFinite() || x.cwiseAbs().maxCoeff() > kDivergenceGuard;
}

inline SimulationSummary simulate_impl(const PolynomialVectorField& field,
                                       const SimulationProtocol& protocol,
                                       bool stochastic) {
  const InputSignal input = input_signal(protocol.input_signal);
  const int n = field.dim;
  const int p = input.dim;
  if (field.n_vars != n + p) {
    std::ostringstream msg;
    msg << "simulate: field has " << field.n_vars << " variables but state ("
        << n << ") plus input (" << p << ") gives " << n + p;
    throw ConfigError(msg.str());
  }
  protocol.validate(n);

  const std::size_t snaps = protocol.snapshot_times.size();
  const double ts = protocol.sampling_period();
  const double h = ts / protocol.substeps;

  std::vector<int> noise_dims = protocol.noise_dims;
  if (stochastic && noise_dims.empty())
    for (int d = 1; d <= n; ++d) noise_dims.push_back(d);

  const Rhs rhs(field, input);
  const Index pairs_per_traj = static_cast<Index>(snaps) - 1;

  std::vector<Matrix> kept_x, kept_y, kept_u;
  std::vector<Vector> kept_t0;
  int divergent = 0;

  for (int traj = 0; traj < protocol.trajectories; ++traj) {
    const std::uint64_t traj_seed =
        derive_stream(protocol.seed, static_cast<std::uint64_t>(traj));
    SplitMix64 ic_rng(derive_stream(traj_seed, 0));
    SplitMix64 proc_rng(derive_stream(traj_seed, 1));
    SplitMix64 meas_rng(derive_stream(traj_seed, 2));

    Vector x(n);
    for (int i = 0; i < n; ++i)
      x[i] = ic_rng.uniform(protocol.initial_box[static_cast<std::size_t>(i)].lo,
                            protocol.initial_box[static_cast<std::size_t>(i)].hi);

    Matrix snapshots(snaps, n);
    snapshots.row(0) = x;
    bool bad = false;
    for (std::size_t s = 0; s + 1 < snaps && !bad; ++s) {
      const double t_start = protocol.snapshot_times[s];
      for (int step = 0; step < protocol.substeps; ++step) {
        const double t = t_start + step * h;
        if (stochastic) {
          x += h * rhs(x, t);
          if (protocol.sigma_proc > 0.0) {
            const double amp = protocol.sigma_proc * std::sqrt(h);
            for (int d : noise_dims) x[d - 1] += amp * proc_rng.normal();
          }
        } else {
          const Vector k1 = rhs(x, t);
          const Vector k2 = rhs(x + 0.5 * h * k1, t + 0.5 * h);
          const Vector k3 = rhs(x + 0.5 * h * k2, t + 0.5 * h);
          const Vector k4 = rhs(x + h * k3, t + h);
          x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        if (diverged(x)) {
          bad = true;
          break;
        }
      }
      if (!bad) snapshots.row(s + 1) = x;
    }
    if (bad) {
      ++divergent;
      continue;
    }

    Matrix px(pairs_per_traj, n), py(pairs_per_traj, n);
    Matrix pu(pairs_per_traj, p);
    Vector pt(pairs_per_traj);
    for (Index s = 0; s < pairs_per_traj; ++s) {
      px.row(s) = snapshots.row(s);
      Vector y = snapshots.row(s + 1);
      if (protocol.sigma_meas > 0.0)
        for (int i = 0; i < n; ++i)
          y[i] *= 1.0 + protocol.sigma_meas * meas_rng.normal();
      py.row(s) = y;
      if (p > 0)
        pu.row(s) = input.eval(protocol.snapshot_times[static_cast<std::size_t>(s)]);
      pt[s] = protocol.snapshot_times[static_cast<std::size_t>(s)];
    }
    kept_x.push_back(std::move(px));
    kept_y.push_back(std::move(py));
    kept_u.push_back(std::move(pu));
    kept_t0.push_back(std::move(pt));
  }

  if (kept_x.empty()) {
    std::ostringstream msg;
    msg << "simulate: all " << protocol.trajectories
        << " trajectories exceeded |x| = " << kDivergenceGuard
        << " and were discarded";
    throw NumericalError(msg.str());
  }

  const Index k_total = static_cast<Index>(kept_x.size()) * pairs_per_traj;
  Matrix x_all(k_total, n), y_all(k_total, n), u_all(k_total, p);
  Vector t_all(k_total);
  Index at = 0;
  for (std::size_t i = 0; i < kept_x.size(); ++i) {
    x_all.middleRows(at, pairs_per_traj) = kept_x[i];
    y_all.middleRows(at, pairs_per_traj) = kept_y[i];
    if (p > 0) u_all.middleRows(at, pairs_per_traj) = kept_u[i];
    t_all.segment(at, pairs_per_traj) = kept_t0[i];
    at += pairs_per_traj;
  }

  SimulationSummary out;
  out.dataset = make_dataset(std::move(x_all), std::move(y_all), ts,
                             std::move(u_all), std::move(t_all));
  out.divergent_trajectories = divergent;
  if (divergent > 0) {
    std::ostringstream msg;
    msg << divergent << " of " << protocol.trajectories
        << " trajectories diverged (|x| > " << kDivergenceGuard
        << ") and were excluded";
    out.warnings.push_back(msg.str());
  }
  return out;
}

}  // namespace detail

// Classical fixed-step RK4 integration of the polynomial ODE; snapshot pairs
// chain consecutive snapshots of each trajectory and multiplicative
// measurement noise is applied to the y side only.
inline SimulationSummary simulate_ode(const PolynomialVectorField& field,
                                      const SimulationProtocol& protocol) {
  return detail::simulate_impl(field, protocol, false);
}

// Euler-Maruyama integration of the polynomial SDE: each substep adds
// independent Gaussian increments of standard deviation
// sigma_proc * sqrt(step) to the driven dimensions.
inline SimulationSummary simulate_sde(const PolynomialVectorField& field,
                                      const SimulationProtocol& protocol) {
  return detail::simulate_impl(field, protocol, true);
}

inline SimulationSummary simulate(const PolynomialVectorField& field,
                                  const SimulationProtocol& protocol) {
  return protocol.sigma_proc > 0.0 ? simulate_sde(field, protocol)
                                   : simulate_ode(field, protocol);
}

// --- Built-in benchmark systems -------------------------------------------

struct BuiltinSystem {
  std::string name;
  PolynomialVectorField field;
  SimulationProtocol protocol;
  bool stochastic = false;
};

inline const std::vector<std::string>& builtin_system_names() {
  static const std::vector<std::string> names = {
      "vdp", "vdp-standard", "unstable", "lorenz", "duffing", "duffing-noise"};
  return names;
}

namespace detail {

inline std::vector<double> time_grid(double t0, double dt, int count) {
  std::vector<double> t(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) t[static_cast<std::size_t>(i)] = t0 + i * dt;
  return t;
}

inline SimulationProtocol base_protocol(int dim, double box_half,
                                        std::vector<double> times,
                                        int trajectories) {
  SimulationProtocol p;
  p.initial_box.assign(static_cast<std::size_t>(dim), {-box_half, box_half});
  p.trajectories = trajectories;
  p.snapshot_times = std::move(times);
  p.sigma_meas = 0.01;
  return p;
}

}  // namespace detail

inline BuiltinSystem builtin_system(const std::string& name) {
  if (name == "vdp") {
    // x1' = x2, x2' = (1 - x1^2) x2 - x2; net coefficient table.
    auto field = FieldBuilder(2, 2, 3)
                     .add(1, {0, 1}, 1.0)
                     .add(2, {0, 1}, 1.0)
                     .add(2, {2, 1}, -1.0)
                     .add(2, {0, 1}, -1.0)
                     .build();
    return {name, std::move(field),
            detail::base_protocol(2, 1.0, {0.0, 0.5, 1.0}, 10), false};
  }
  if (name == "vdp-standard") {
    // Classical Van der Pol oscillator: x2' = (1 - x1^2) x2 - x1.
    auto field = FieldBuilder(2, 2, 3)
                     .add(1, {0, 1}, 1.0)
                     .add(2, {0, 1}, 1.0)
                     .add(2, {2, 1}, -1.0)
                     .add(2, {1, 0}, -1.0)
                     .build();
    return {name, std::move(field),
            detail::base_protocol(2, 1.0, {0.0, 0.5, 1.0}, 10), false};
  }
  if (name == "unstable") {
    auto field = FieldBuilder(2, 2, 3)
                     .add(1, {1, 0}, 3.0)
                     .add(1, {0, 1}, 0.5)
                     .add(1, {1, 1}, -1.0)
                     .add(1, {0, 2}, 1.0)
                     .add(1, {3, 0}, 2.0)
                     .add(2, {1, 0}, 0.5)
                     .add(2, {0, 1}, 4.0)
                     .build();
    return {name, std::move(field),
            detail::base_protocol(2, 1.0, {0.0, 0.1}, 20), false};
  }
  if (name == "lorenz") {
    auto field = FieldBuilder(3, 3, 3)
                     .add(1, {0, 1, 0}, 10.0)
                     .add(1, {1, 0, 0}, -10.0)
                     .add(2, {1, 0, 0}, 28.0)
                     .add(2, {1, 0, 1}, -1.0)
                     .add(2, {0, 1, 0}, -1.0)
                     .add(3, {1, 1, 0}, 1.0)
                     .add(3, {0, 0, 1}, -8.0 / 3.0)
                     .build();
    return {name, std::move(field),
            detail::base_protocol(3, 20.0, detail::time_grid(0.0, 1.0 / 30.0, 31), 10),
            false};
  }
  if (name == "duffing") {
    // Forced Duffing with u as a frozen extra state:
    // x1' = x2, x2' = x1 - x1^3 - 0.2 x2 + 0.2 x1^2 u.
    auto field = FieldBuilder(2, 3, 3)
                     .add(1, {0, 1, 0}, 1.0)
                     .add(2, {1, 0, 0}, 1.0)
                     .add(2, {3, 0, 0}, -1.0)
                     .add(2, {0, 1, 0}, -0.2)
                     .add(2, {2, 0, 1}, 0.2)
                     .build();
    auto protocol =
        detail::base_protocol(2, 1.0, detail::time_grid(0.0, 0.2, 51), 5);
    protocol.input_signal = "cos";
    return {name, std::move(field), std::move(protocol), false};
  }
  if (name == "duffing-noise") {
    // Duffing with the forcing term replaced by white noise on x2.
    auto field = FieldBuilder(2, 2, 3)
                     .add(1, {0, 1}, 1.0)
                     .add(2, {1, 0}, 1.0)
                     .add(2, {3, 0}, -1.0)
                     .add(2, {0, 1}, -0.2)
                     .build();
    auto protocol =
        detail::base_protocol(2, 1.0, detail::time_grid(0.0, 0.2, 51), 10);
    protocol.sigma_proc = 1.0;
    protocol.noise_dims = {2};
    return {name, std::move(field), std::move(protocol), true};
  }
  std::ostringstream msg;
  msg << "unknown system '" << name << "'; available:";
  for (const auto& s : builtin_system_names()) msg << " " << s;
  throw ConfigError(msg.str());
}

// --- Random interaction network (12-dimensional) ---------------------------

struct NetworkSystem {
  PolynomialVectorField field;
  Adjacency adjacency;  // (j, l) true iff a directed link x_l -> x_j exists
};

// x_j' = -xi_j x_j + sum_{k=1}^3 zeta_{j,k} x_{nu1}^{s1} x_{nu2}^{s2} with
// xi_j ~ U[0,1], zeta ~ N(0,1), nu uniform on {1..12} and exponents uniform
// on {0..3} conditioned on s1 + s2 in {2, 3}. The stabilizing linear
// self-term is not an interaction and never enters the adjacency.
inline NetworkSystem random_network_system(std::uint64_t seed) {
  constexpr int n = 12;
  SplitMix64 rng(derive_stream(seed, 0x6e6574ull));
  FieldBuilder fb(n, n, 3);
  Adjacency adj = Adjacency::Constant(n, n, false);
  for (int j = 1; j <= n; ++j) {
    MultiIndex lin(n, 0);
    lin[static_cast<std::size_t>(j - 1)] = 1;
    fb.add(j, lin, -rng.uniform(0.0, 1.0));
    for (int k = 0; k < 3; ++k) {
      const double zeta = rng.normal();
      const int nu1 = 1 + static_cast<int>(rng.below(n));
      const int nu2 = 1 + static_cast<int>(rng.below(n));
      int s1 = 0, s2 = 0;
      do {
        s1 = static_cast<int>(rng.below(4));
        s2 = static_cast<int>(rng.below(4));
      } while (s1 + s2 < 2 || s1 + s2 > 3);
      MultiIndex e(n, 0);
      e[static_cast<std::size_t>(nu1 - 1)] += s1;
      e[static_cast<std::size_t>(nu2 - 1)] += s2;
      fb.add(j, e, zeta);
      if (s1 > 0) adj(j - 1, nu1 - 1) = true;
      if (s2 > 0) adj(j - 1, nu2 - 1) = true;
    }
  }
  return {fb.build(), std::move(adj)};
}

inline SimulationProtocol default_network_protocol() {
  return detail::base_protocol(12, 1.0, {0.0, 0.5, 1.0}, 500);
}

}  // namespace koopid
