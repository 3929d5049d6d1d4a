// Command-line front end: convergence studies, noise dumps, predicted rates.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fracsde/conv_quadrature.hpp"
#include "fracsde/fgn.hpp"
#include "fracsde/rng.hpp"
#include "fracsde/study.hpp"

namespace {

using fracsde::ConfigError;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
std::vector<T> parse_list(const std::string& text, const char* what) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    std::istringstream is(item);
    T v{};
    if (!(is >> v) || !is.eof()) throw ConfigError(std::string("cannot parse ") + what + " entry '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError(std::string("empty list for ") + what);
  return out;
}

/// Reads key=value lines; '#' starts a comment.
std::vector<std::string> read_config_args(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::vector<std::string> args;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key=value");
    std::string key = trim(line.substr(0, eq));
    while (!key.empty() && key.front() == '-') key.erase(key.begin());
    args.push_back("--" + key);
    args.push_back(trim(line.substr(eq + 1)));
  }
  return args;
}

/// Splices config-file options right after the subcommand so that explicit
/// flags, which come later, take precedence.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> in(argv + 1, argv + argc);
  std::optional<std::string> path;
  std::vector<std::string> rest;
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (in[i] == "--config") {
      if (i + 1 >= in.size()) throw ConfigError("--config needs a path");
      path = in[++i];
    } else if (in[i].rfind("--config=", 0) == 0) {
      path = in[i].substr(9);
    } else {
      rest.push_back(in[i]);
    }
  }
  std::vector<std::string> out{argv[0]};
  if (!path) {
    out.insert(out.end(), rest.begin(), rest.end());
    return out;
  }
  if (rest.empty() || rest.front().rfind("-", 0) == 0)
    throw ConfigError("--config requires the subcommand to come first");
  out.push_back(rest.front());
  const auto file_args = read_config_args(*path);
  out.insert(out.end(), file_args.begin(), file_args.end());
  out.insert(out.end(), rest.begin() + 1, rest.end());
  return out;
}

struct Options {
  std::string alpha = "0.5";
  std::string hurst = "0.75";
  double m = 0.0;
  std::size_t K = 1000;
  double T = 0.01;
  std::string grids;
  std::string grids_h;
  std::size_t inverse_h = 128;
  std::optional<std::size_t> n_time;
  std::size_t trajectories = 100;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<std::string> g0;
  unsigned threads = 0;
  std::size_t oracle_modes = 0;
  // sample-noise
  std::size_t n = 0;
  double dt = 1.0;
  std::uint64_t trajectory = 0;
  std::uint64_t mode = 1;
};

fracsde::InitialData parse_g0(const std::optional<std::string>& g0, fracsde::InitialData fallback) {
  if (!g0) return fallback;
  if (*g0 == "zero") return fracsde::InitialData::zero;
  if (*g0 == "parabola") return fracsde::InitialData::parabola;
  throw ConfigError("--g0 must be 'zero' or 'parabola'");
}

fracsde::StudyConfig study_config(const Options& o, const std::string& grids, fracsde::InitialData g0_default,
                                  std::size_t n_time_default) {
  fracsde::StudyConfig cfg;
  cfg.alphas = parse_list<double>(o.alpha, "--alpha");
  cfg.hursts = parse_list<double>(o.hurst, "--hurst");
  cfg.m = o.m;
  cfg.K = o.K;
  cfg.T = o.T;
  cfg.seed = o.seed;
  cfg.grids = parse_list<std::size_t>(grids, "grid");
  cfg.fixed_inverse_h = o.inverse_h;
  cfg.fixed_N = o.n_time.value_or(n_time_default);
  cfg.trajectories = o.trajectories;
  cfg.g0 = parse_g0(o.g0, g0_default);
  cfg.threads = o.threads;
  cfg.oracle_modes = o.oracle_modes;
  return cfg;
}

class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw ConfigError("cannot open output file " + path);
    }
  }
  std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

 private:
  std::ofstream file_;
};

void emit(const fracsde::RateTable& table, const std::string& path) {
  for (const auto& w : table.warnings) std::cerr << "warning: " << w << '\n';
  Output out(path);
  fracsde::write_csv(out.stream(), table);
}

void add_study_options(CLI::App* cmd, Options& o) {
  cmd->add_option("--alpha", o.alpha, "fractional order(s), comma separated");
  cmd->add_option("--hurst", o.hurst, "Hurst index(es), comma separated");
  cmd->add_option("--m", o.m, "eigenvalue exponent, Lambda_k = k^m");
  cmd->add_option("--K", o.K, "noise mode truncation");
  cmd->add_option("--T", o.T, "final time");
  cmd->add_option("--grids", o.grids, "doubling ladder, comma separated");
  cmd->add_option("--h", o.inverse_h, "fixed mesh as 1/h (temporal studies)");
  cmd->add_option("--n-time", o.n_time, "fixed number of time steps (spatial studies)");
  cmd->add_option("--trajectories", o.trajectories, "Monte Carlo sample paths per cell");
  cmd->add_option("--seed", o.seed, "master seed");
  cmd->add_option("--out", o.out, "CSV output path (stdout if absent)");
  cmd->add_option("--g0", o.g0, "initial data: zero or parabola");
  cmd->add_option("--threads", o.threads, "worker threads (0: all cores)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fully discrete solver for subdiffusion driven by fractional Gaussian noise"};
  app.set_help_flag("--help", "print help");
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  Options o;

  auto* temporal = app.add_subcommand("temporal", "temporal self-convergence study");
  add_study_options(temporal, o);
  auto* spatial = app.add_subcommand("spatial", "spatial self-convergence study");
  add_study_options(spatial, o);

  auto* deterministic = app.add_subcommand("deterministic", "noise-free convergence against exact references");
  deterministic->add_option("--alpha", o.alpha, "fractional order(s)");
  deterministic->add_option("--T", o.T, "final time");
  deterministic->add_option("--grids", o.grids, "time ladder N values");
  deterministic->add_option("--grids-h", o.grids_h, "mesh ladder 1/h values");
  deterministic->add_option("--h", o.inverse_h, "fixed mesh as 1/h for a time ladder");
  deterministic->add_option("--n-time", o.n_time, "fixed N for a mesh ladder (default 4096)");
  deterministic->add_option("--g0", o.g0, "initial data: zero or parabola (default parabola)");
  deterministic->add_option("--oracle-modes", o.oracle_modes, "sine modes in the spatial reference");
  deterministic->add_option("--out", o.out, "CSV output path");

  auto* noise = app.add_subcommand("sample-noise", "dump one fGn increment sequence as CSV");
  noise->add_option("--hurst", o.hurst, "Hurst index");
  noise->add_option("--n", o.n, "number of increments")->required();
  noise->add_option("--dt", o.dt, "time step");
  noise->add_option("--seed", o.seed, "master seed");
  noise->add_option("--trajectory", o.trajectory, "trajectory index of the stream");
  noise->add_option("--mode", o.mode, "mode index of the stream");
  noise->add_option("--out", o.out, "CSV output path");

  auto* predict = app.add_subcommand("predict-rates", "theoretical temporal and spatial orders");
  predict->add_option("--alpha", o.alpha, "fractional order(s)");
  predict->add_option("--hurst", o.hurst, "Hurst index(es)");
  predict->add_option("--m", o.m, "eigenvalue exponent");
  predict->add_option("--out", o.out, "CSV output path");

  try {
    auto args = expand_config(argc, argv);
    std::vector<const char*> cargs;
    for (const auto& a : args) cargs.push_back(a.c_str());
    app.parse(static_cast<int>(cargs.size()), cargs.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    if (temporal->parsed()) {
      if (o.grids.empty()) throw ConfigError("--grids is required");
      emit(fracsde::temporal_study(study_config(o, o.grids, fracsde::InitialData::zero, 1024)), o.out);
    } else if (spatial->parsed()) {
      if (o.grids.empty()) throw ConfigError("--grids is required");
      emit(fracsde::spatial_study(study_config(o, o.grids, fracsde::InitialData::parabola, 1024)), o.out);
    } else if (deterministic->parsed()) {
      if (o.grids.empty() == o.grids_h.empty()) throw ConfigError("give exactly one of --grids or --grids-h");
      if (!o.grids.empty())
        emit(fracsde::deterministic_temporal_study(study_config(o, o.grids, fracsde::InitialData::parabola, 4096)),
             o.out);
      else
        emit(fracsde::deterministic_spatial_study(study_config(o, o.grids_h, fracsde::InitialData::parabola, 4096)),
             o.out);
    } else if (noise->parsed()) {
      if (!o.seed) throw ConfigError("sample-noise requires --seed");
      const auto hurst = parse_list<double>(o.hurst, "--hurst");
      if (hurst.size() != 1) throw ConfigError("sample-noise takes a single --hurst value");
      fracsde::Stream stream = fracsde::make_stream(*o.seed, o.trajectory, o.mode);
      const auto inc = fracsde::sample_fgn({hurst.front(), o.n, o.dt}, stream);
      Output out(o.out);
      auto& os = out.stream();
      os << "step_index,increment\n";
      char buf[64];
      for (std::size_t j = 0; j < inc.size(); ++j) {
        std::snprintf(buf, sizeof buf, "%.17g", inc[j]);
        os << (j + 1) << ',' << buf << '\n';
      }
    } else if (predict->parsed()) {
      Output out(o.out);
      auto& os = out.stream();
      const double rho = (1.0 + o.m) / 4.0;
      os << "H,alpha,m,rho,temporal_rate,spatial_rate\n";
      char buf[160];
      for (double h : parse_list<double>(o.hurst, "--hurst"))
        for (double a : parse_list<double>(o.alpha, "--alpha")) {
          std::snprintf(buf, sizeof buf, "%.4g,%.4g,%.4g,%.4f,%.4f,%.4f", h, a, o.m, rho,
                        fracsde::predicted_temporal_rate(h, a, rho), fracsde::predicted_spatial_rate(h, a, rho));
          os << buf << '\n';
        }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
