#pragma once

// Monte Carlo convergence studies with coupled refinements: every level of
// a ladder is driven by the same sample path, and errors are the RMS L2
// distance between successive levels at t = T.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Core>

#include "fracsde/conv_quadrature.hpp"
#include "fracsde/fem1d.hpp"
#include "fracsde/oracle.hpp"
#include "fracsde/rng.hpp"
#include "fracsde/spectral_noise.hpp"
#include "fracsde/time_stepper.hpp"

namespace fracsde {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class InitialData { zero, parabola };

struct StudyConfig {
  std::vector<double> alphas{0.5};
  std::vector<double> hursts{0.75};
  double m = 0.0;
  std::size_t K = 1000;
  std::size_t trajectories = 100;
  double T = 0.01;
  std::optional<std::uint64_t> seed;
  /// Levels that receive an error entry (N for time ladders, 1/h for mesh ladders).
  std::vector<std::size_t> grids;
  std::size_t fixed_inverse_h = 128;  // temporal studies
  std::size_t fixed_N = 1024;         // spatial studies
  InitialData g0 = InitialData::zero;
  unsigned threads = 0;  // 0: hardware concurrency
  /// Oracle modes for the deterministic spatial reference; 0 means max(K, 1000).
  std::size_t oracle_modes = 0;
};

struct RateRow {
  double hurst = NAN;
  double alpha = NAN;
  double m = NAN;
  std::vector<std::size_t> grid;
  std::vector<double> errors;
  std::vector<double> rates;  // rates[i] between errors[i] and errors[i+1]
  double mean_rate = NAN;
  double predicted_rate = NAN;
  std::optional<std::uint64_t> seed;
};

struct RateTable {
  std::vector<RateRow> rows;
  std::vector<std::string> warnings;
};

/// log2(e_coarse / e_fine).
inline double rate(double e_coarse, double e_fine) {
  if (!(e_coarse > 0.0) || !(e_fine > 0.0)) throw std::domain_error("rate: errors must be positive");
  return std::log(e_coarse / e_fine) / std::log(2.0);
}

inline std::vector<double> successive_rates(std::span<const double> errors) {
  std::vector<double> r;
  for (std::size_t i = 0; i + 1 < errors.size(); ++i) r.push_back(rate(errors[i], errors[i + 1]));
  return r;
}

/// Arithmetic mean of successive rates, the aggregate reported per row.
inline double mean_rate(std::span<const double> errors) {
  const auto r = successive_rates(errors);
  if (r.empty()) throw std::domain_error("mean_rate: need at least two errors");
  double s = 0.0;
  for (double v : r) s += v;
  return s / static_cast<double>(r.size());
}

/// Coarse increment n is the sum of the fine increments in block n.
inline FgnTrajectory coarsen_increments(const FgnTrajectory& fine, std::size_t factor) {
  if (factor == 0 || fine.n_steps() % factor != 0)
    throw std::invalid_argument("coarsen_increments: factor " + std::to_string(factor) + " does not divide " +
                                std::to_string(fine.n_steps()));
  const auto coarse_n = static_cast<Eigen::Index>(fine.n_steps() / factor);
  const auto f = static_cast<Eigen::Index>(factor);
  FgnTrajectory out{Eigen::MatrixXd::Zero(fine.increments.rows(), coarse_n)};
  for (Eigen::Index n = 0; n < coarse_n; ++n)
    for (Eigen::Index j = 0; j < f; ++j) out.increments.col(n) += fine.increments.col(n * f + j);
  return out;
}

inline void validate_ladder(std::span<const std::size_t> grids, std::size_t min_levels = 2) {
  if (grids.size() < min_levels)
    throw ConfigError("grid ladder needs at least " + std::to_string(min_levels) + " levels");
  for (std::size_t i = 0; i < grids.size(); ++i) {
    if (grids[i] == 0) throw ConfigError("grid entries must be positive");
    if (i > 0 && grids[i] != 2 * grids[i - 1])
      throw ConfigError("grid ladder must double at every step: " + std::to_string(grids[i - 1]) + " -> " +
                        std::to_string(grids[i]));
  }
}

namespace detail {

inline unsigned resolve_threads(unsigned requested, std::size_t work) {
  unsigned t = requested != 0 ? requested : std::max(1u, std::thread::hardware_concurrency());
  return static_cast<unsigned>(std::min<std::size_t>(t, std::max<std::size_t>(work, 1)));
}

/// Runs body(worker_state, i) for i in [0, count) on `threads` workers; each
/// worker owns one state from make_state(). Results are written by index so
/// the caller reduces them in a fixed order.
template <typename MakeState, typename Body>
void parallel_for(std::size_t count, unsigned threads, MakeState make_state, Body body) {
  const unsigned nt = resolve_threads(threads, count);
  std::vector<std::exception_ptr> errors(nt);
  auto worker = [&](unsigned w) {
    try {
      auto state = make_state();
      for (std::size_t i = w; i < count; i += nt) body(state, i);
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  if (nt == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < nt; ++w) pool.emplace_back(worker, w);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

inline FemFunction initial_state(const Mesh& mesh, InitialData g0) {
  if (g0 == InitialData::zero) return FemFunction(mesh);
  return l2_project(mesh, [](double x) { return x * (1.0 - x); });
}

inline SineExpansion initial_expansion(InitialData g0, std::size_t modes) {
  if (g0 == InitialData::zero) return SineExpansion{Vector::Zero(static_cast<Eigen::Index>(modes))};
  return parabola_expansion(modes);
}

/// Fixed-order RMS over trajectories of per-trajectory squared errors.
inline std::vector<double> rms_by_level(const std::vector<std::vector<double>>& squared) {
  const std::size_t levels = squared.empty() ? 0 : squared.front().size();
  std::vector<double> out(levels, 0.0);
  for (const auto& per_traj : squared)
    for (std::size_t l = 0; l < levels; ++l) out[l] += per_traj[l];
  for (double& v : out) v = std::sqrt(v / static_cast<double>(squared.size()));
  return out;
}

inline void finish_row(RateRow& row, RateTable& table) {
  row.rates = successive_rates(row.errors);
  row.mean_rate = mean_rate(row.errors);
  for (std::size_t i = 0; i + 1 < row.errors.size(); ++i) {
    if (!(row.errors[i + 1] < row.errors[i])) {
      std::ostringstream os;
      os << "error did not decrease between grid " << row.grid[i] << " and " << row.grid[i + 1]
         << " (H=" << row.hurst << ", alpha=" << row.alpha << ")";
      table.warnings.push_back(os.str());
    }
  }
}

inline void validate_stochastic(const StudyConfig& cfg) {
  if (!cfg.seed) throw ConfigError("stochastic studies require --seed");
  if (cfg.trajectories < 1) throw ConfigError("trajectories must be >= 1");
  if (cfg.K < 1) throw ConfigError("K must be >= 1");
  if (!(cfg.T > 0.0)) throw ConfigError("T must be positive");
  if (cfg.alphas.empty() || cfg.hursts.empty()) throw ConfigError("need at least one alpha and one hurst value");
  for (double a : cfg.alphas)
    if (!(a > 0.0 && a < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
  for (double h : cfg.hursts)
    if (!(h >= 0.5 && h < 1.0)) throw ConfigError("hurst must lie in [0.5, 1)");
  validate_ladder(cfg.grids);
}

}  // namespace detail

/// One (H, alpha) cell of a temporal self-convergence study. Noise is drawn at
/// the finest step 2*grids.back() and block-summed to every coarser level.
inline RateRow temporal_cell(const StudyConfig& cfg, double hurst, double alpha, std::uint64_t cell_seed) {
  const Mesh mesh(cfg.fixed_inverse_h);
  std::vector<std::size_t> levels = cfg.grids;
  levels.push_back(2 * cfg.grids.back());
  const std::size_t n_fine = levels.back();
  const NoiseSpec spec{hurst, cfg.m, cfg.K};
  const LoadOperator loads(cfg.K, mesh);
  const FemFunction g0 = detail::initial_state(mesh, cfg.g0);

  std::vector<SolverConfig> configs;
  std::vector<CqWeights> weights;
  for (std::size_t n : levels) {
    configs.push_back(SolverConfig{alpha, cfg.T, n, mesh, g0});
    weights.push_back(weights_for(configs.back()));
  }

  struct Worker {
    TrajectorySampler sampler;
    std::vector<Stepper> steppers;
  };
  std::vector<std::vector<double>> squared(cfg.trajectories);
  detail::parallel_for(
      cfg.trajectories, cfg.threads,
      [&] {
        Worker w{TrajectorySampler(spec, n_fine, cfg.T / static_cast<double>(n_fine)), {}};
        for (std::size_t l = 0; l < levels.size(); ++l) w.steppers.emplace_back(configs[l], weights[l]);
        return w;
      },
      [&](Worker& w, std::size_t i) {
        const FgnTrajectory fine = w.sampler.sample(cell_seed, i);
        std::vector<Vector> finals;
        for (std::size_t l = 0; l < levels.size(); ++l) {
          const FgnTrajectory coarse = coarsen_increments(fine, n_fine / levels[l]);
          const Eigen::MatrixXd b = loads.all_loads(coarse);
          finals.push_back(w.steppers[l].run(&b).final_state().coeffs);
        }
        std::vector<double> sq(cfg.grids.size());
        for (std::size_t l = 0; l < cfg.grids.size(); ++l) {
          const double d = l2_norm(FemFunction(mesh, finals[l] - finals[l + 1]));
          sq[l] = d * d;
        }
        squared[i] = std::move(sq);
      });

  RateRow row;
  row.hurst = hurst;
  row.alpha = alpha;
  row.m = cfg.m;
  row.grid = cfg.grids;
  row.errors = detail::rms_by_level(squared);
  row.predicted_rate = predicted_temporal_rate(hurst, alpha, spec.theoretical_rho());
  row.seed = cfg.seed;
  return row;
}

/// One (H, alpha) cell of a spatial self-convergence study. The same mode
/// increments drive every mesh; coarse solutions are interpolated onto the
/// next finer mesh before differencing.
inline RateRow spatial_cell(const StudyConfig& cfg, double hurst, double alpha, std::uint64_t cell_seed) {
  std::vector<std::size_t> levels = cfg.grids;
  levels.push_back(2 * cfg.grids.back());
  const std::size_t n_steps = cfg.fixed_N;
  const NoiseSpec spec{hurst, cfg.m, cfg.K};

  std::vector<Mesh> meshes;
  std::vector<LoadOperator> loads;
  std::vector<SolverConfig> configs;
  for (std::size_t inv_h : levels) {
    meshes.emplace_back(inv_h);
    loads.emplace_back(cfg.K, meshes.back());
    configs.push_back(SolverConfig{alpha, cfg.T, n_steps, meshes.back(), detail::initial_state(meshes.back(), cfg.g0)});
  }
  const CqWeights weights = weights_for(configs.front());

  struct Worker {
    TrajectorySampler sampler;
    std::vector<Stepper> steppers;
  };
  std::vector<std::vector<double>> squared(cfg.trajectories);
  detail::parallel_for(
      cfg.trajectories, cfg.threads,
      [&] {
        Worker w{TrajectorySampler(spec, n_steps, cfg.T / static_cast<double>(n_steps)), {}};
        for (const auto& c : configs) w.steppers.emplace_back(c, weights);
        return w;
      },
      [&](Worker& w, std::size_t i) {
        const FgnTrajectory traj = w.sampler.sample(cell_seed, i);
        std::vector<FemFunction> finals;
        for (std::size_t l = 0; l < levels.size(); ++l) {
          const Eigen::MatrixXd b = loads[l].all_loads(traj);
          finals.push_back(w.steppers[l].run(&b).final_state());
        }
        std::vector<double> sq(cfg.grids.size());
        for (std::size_t l = 0; l < cfg.grids.size(); ++l) {
          const double d = l2_distance(finals[l + 1], finals[l]);
          sq[l] = d * d;
        }
        squared[i] = std::move(sq);
      });

  RateRow row;
  row.hurst = hurst;
  row.alpha = alpha;
  row.m = cfg.m;
  row.grid = cfg.grids;
  row.errors = detail::rms_by_level(squared);
  row.predicted_rate = predicted_spatial_rate(hurst, alpha, spec.theoretical_rho());
  row.seed = cfg.seed;
  return row;
}

namespace detail {

template <typename Cell>
RateTable run_cells(const StudyConfig& cfg, Cell cell) {
  validate_stochastic(cfg);
  RateTable table;
  std::uint64_t cell_index = 0;
  for (double h : cfg.hursts) {
    for (double a : cfg.alphas) {
      RateRow row = cell(cfg, h, a, derive_cell_seed(*cfg.seed, cell_index++));
      finish_row(row, table);
      table.rows.push_back(std::move(row));
    }
  }
  return table;
}

}  // namespace detail

inline RateTable temporal_study(const StudyConfig& cfg) {
  if (cfg.fixed_inverse_h < 2) throw ConfigError("temporal study needs a mesh with at least 2 intervals");
  return detail::run_cells(cfg, temporal_cell);
}

inline RateTable spatial_study(const StudyConfig& cfg) {
  if (cfg.fixed_N < 1) throw ConfigError("spatial study needs N >= 1");
  return detail::run_cells(cfg, spatial_cell);
}

/// Noise-free time ladder: error at each N against the exact space-semidiscrete
/// solution on the fixed mesh, so only the time discretization is measured.
inline RateTable deterministic_temporal_study(const StudyConfig& cfg) {
  validate_ladder(cfg.grids);
  const Mesh mesh(cfg.fixed_inverse_h);
  const FemFunction g0 = detail::initial_state(mesh, cfg.g0);
  RateTable table;
  for (double alpha : cfg.alphas) {
    const FemFunction reference = semidiscrete_deterministic(g0, alpha, cfg.T);
    RateRow row;
    row.alpha = alpha;
    row.grid = cfg.grids;
    for (std::size_t n : cfg.grids) {
      const SolverConfig sc{alpha, cfg.T, n, mesh, g0};
      const FemFunction u = run(sc, weights_for(sc)).final_state();
      row.errors.push_back(l2_distance(u, reference));
    }
    row.predicted_rate = 1.0;
    detail::finish_row(row, table);
    table.rows.push_back(std::move(row));
  }
  return table;
}

/// Noise-free mesh ladder: error at each h against the exact-in-space per-mode
/// CQ recursion at the same tau, so only the spatial discretization is measured.
inline RateTable deterministic_spatial_study(const StudyConfig& cfg) {
  validate_ladder(cfg.grids);
  const std::size_t modes = cfg.oracle_modes != 0 ? cfg.oracle_modes : std::max<std::size_t>(cfg.K, 1000);
  const SineExpansion g0 = detail::initial_expansion(cfg.g0, modes);
  RateTable table;
  for (double alpha : cfg.alphas) {
    const SineExpansion reference = spectral_cq_reference(alpha, cfg.T, cfg.fixed_N, g0, nullptr);
    RateRow row;
    row.alpha = alpha;
    row.grid = cfg.grids;
    for (std::size_t inv_h : cfg.grids) {
      const Mesh mesh(inv_h);
      const SolverConfig sc{alpha, cfg.T, cfg.fixed_N, mesh, detail::initial_state(mesh, cfg.g0)};
      const FemFunction u = run(sc, weights_for(sc)).final_state();
      row.errors.push_back(l2_distance(u, reference));
    }
    row.predicted_rate = 2.0;
    detail::finish_row(row, table);
    table.rows.push_back(std::move(row));
  }
  return table;
}

namespace detail {
inline std::string format_number(double v, const char* fmt) {
  if (std::isnan(v)) return "";
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}
}  // namespace detail

inline constexpr const char* kCsvHeader = "H,alpha,m,level,grid,error,rate,mean_rate,predicted_rate,seed";

/// One row per (H, alpha, level); `rate` is empty on the last level.
inline void write_csv(std::ostream& os, const RateTable& table) {
  os << kCsvHeader << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t l = 0; l < row.errors.size(); ++l) {
      os << detail::format_number(row.hurst, "%.4g") << ',' << detail::format_number(row.alpha, "%.4g") << ','
         << detail::format_number(row.m, "%.4g") << ',' << (l + 1) << ',' << row.grid[l] << ','
         << detail::format_number(row.errors[l], "%.6e") << ','
         << (l < row.rates.size() ? detail::format_number(row.rates[l], "%.4f") : std::string{}) << ','
         << detail::format_number(row.mean_rate, "%.4f") << ',' << detail::format_number(row.predicted_rate, "%.4f")
         << ',' << (row.seed ? std::to_string(*row.seed) : std::string{}) << '\n';
    }
  }
}

}  // namespace fracsde
