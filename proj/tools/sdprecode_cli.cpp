// Batch runner: ser, spectrum, scatter and solve subcommands writing CSV artifacts
// plus a manifest.json into the output directory.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <locale>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sdprecode/config.hpp"
#include "sdprecode/precoder.hpp"
#include "sdprecode/sim.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;

struct Options {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  int threads = 0;
  std::optional<int> trials;
};

class Run {
 public:
  Run(std::string command, const Options& opts, sdp::SimConfig config)
      : command_(std::move(command)), out_(opts.out_dir), config_(std::move(config)) {
    fs::create_directories(out_);
  }

  const sdp::SimConfig& config() const { return config_; }

  template <typename Fn>
  auto stage(const std::string& name, Fn&& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    auto result = fn();
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    stages_.push_back({{"name", name}, {"seconds", secs}});
    return result;
  }

  void write(const std::string& name, const std::string& contents) {
    atomic_write(out_ / name, contents);
    artifacts_.push_back((out_ / name).string());
  }

  void flag(const std::string& what) { flags_.push_back(what); }

  // The manifest lists every other artifact, so it is always written last.
  void finish() {
    json m;
    m["command"] = command_;
    m["library_version"] = sdp::kLibraryVersion;
    m["seed"] = config_.seed;
    m["config"] = sdp::config_to_json(config_);
    m["artifacts"] = artifacts_;
    m["stages"] = stages_;
    m["flags"] = flags_;
    atomic_write(out_ / "manifest.json", m.dump(2) + "\n");
  }

  bool flagged() const { return !flags_.empty(); }

 private:
  static void atomic_write(const fs::path& path, const std::string& contents) {
    const fs::path tmp = path.string() + ".tmp";
    {
      std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
      if (!os) throw std::runtime_error("cannot write " + tmp.string());
      os << contents;
      if (!os.flush()) throw std::runtime_error("write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
  }

  std::string command_;
  fs::path out_;
  sdp::SimConfig config_;
  std::vector<std::string> artifacts_;
  json stages_ = json::array();
  std::vector<std::string> flags_;
};

int thread_count(const Options& o) {
  if (o.threads > 0) return o.threads;
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

sdp::SimConfig load(const Options& o) {
  sdp::SimConfig c = sdp::load_config(o.config_path, false);
  if (o.seed) c.seed = *o.seed;
  if (o.trials) c.trials = *o.trials;
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw sdp::ConfigError(o.config_path + ": /: " + e.what());
  }
  return c;
}

int cmd_ser(const Options& o) {
  Run run("ser", o, load(o));
  const auto curve = run.stage("simulate", [&] { return sdp::run_ser(run.config(), thread_count(o)); });
  long long failures = 0;
  for (const auto& p : curve.points) failures += p.solver_failures;
  run.write("ser.csv", sdp::ser_csv(curve));
  if (failures > 0) run.flag("solver_not_converged: " + std::to_string(failures) + " precoder solves hit the cap");
  run.finish();
  return run.flagged() ? kExitSolver : kExitOk;
}

int cmd_spectrum(const Options& o) {
  Run run("spectrum", o, load(o));
  const auto& c = run.config();
  std::vector<double> grid;
  if (c.spectrum_grid_deg.empty()) {
    for (int i = -180; i <= 180; ++i) grid.push_back(0.5 * i);
  } else {
    grid = c.spectrum_grid_deg;
  }
  for (double& g : grid) g *= sdp::kPi / 180.0;
  const auto spec = run.stage("spectrum", [&] { return sdp::run_spectrum(c, grid, c.spectrum_trials); });
  run.write("spectrum.csv", sdp::spectrum_csv(spec));
  run.finish();
  return kExitOk;
}

int cmd_scatter(const Options& o) {
  Run run("scatter", o, load(o));
  const auto& c = run.config();
  const auto pts = run.stage("scatter", [&] { return sdp::run_iq_scatter(c, c.scatter_realizations, thread_count(o)); });
  run.write("scatter.csv", sdp::scatter_csv(pts));
  run.finish();
  return kExitOk;
}

int cmd_solve(const Options& o) {
  Run run("solve", o, load(o));
  const auto& c = run.config();
  if (c.scheme.kind != sdp::SchemeKind::slp_primal && c.scheme.kind != sdp::SchemeKind::slp_dual) {
    throw sdp::ConfigError(o.config_path + ": /scheme/name: solve needs slp_primal or slp_dual");
  }
  if (c.snr_db.empty()) throw sdp::ConfigError(o.config_path + ": /snr_db: solve needs one SNR point");
  const auto inst = sdp::draw_instance(c, 0);
  sdp::SlpOptions opts;
  opts.solver = c.scheme.kind == sdp::SchemeKind::slp_primal ? sdp::SlpSolver::primal : sdp::SlpSolver::dual;
  opts.params = sdp::solver_params(c.scheme);
  const auto out = run.stage("solve", [&] { return sdp::slp_psk(inst.scene, inst.symbols, c.order, opts); });

  const auto zf = sdp::zf_precode(inst.scene, inst.symbols);
  const auto problem = sdp::build_slp_problem(inst.scene.channel_matrix(), sdp::user_noise_std(inst.scene),
                                              inst.symbols, c.order);
  const double zf_obj = sdp::minimax_objective(problem, sdp::stack_iq(zf.xbar));
  const auto& d = out.diagnostics;

  std::cout << "scheme          " << out.scheme << "\n"
            << "iterations      " << d.iterations << "\n"
            << "restarts        " << d.restarts << "\n"
            << "objective       " << d.objective << "\n";
  if (opts.solver == sdp::SlpSolver::dual) {
    std::cout << "dual_objective  " << d.dual_objective << "\n"
              << "duality_gap     " << d.objective + 0.5 * opts.params.regularization * sdp::stack_iq(out.xbar).squaredNorm() - d.dual_objective << "\n";
  }
  std::cout << "zf_objective    " << zf_obj << "\n"
            << "converged       " << (d.converged ? "yes" : "no") << "\n";

  std::ostringstream csv;
  csv.imbue(std::locale::classic());
  csv.precision(12);
  csv << "scheme,iterations,restarts,objective,dual_objective,zf_objective,converged\n"
      << out.scheme << ',' << d.iterations << ',' << d.restarts << ',' << d.objective << ','
      << d.dual_objective << ',' << zf_obj << ',' << (d.converged ? 1 : 0) << '\n';
  run.write("solve.csv", csv.str());
  if (!d.converged) run.flag("solver_not_converged: iteration cap reached");
  run.finish();
  return run.flagged() ? kExitSolver : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"One-bit spatial sigma-delta precoding simulator"};
  app.require_subcommand(1);
  Options opts;
  const char* env_out = std::getenv("SDPRECODE_OUT");
  opts.out_dir = env_out && *env_out ? env_out : "out";

  auto add_common = [&opts](CLI::App* sub) {
    sub->add_option("--config", opts.config_path, "JSON experiment config")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", opts.out_dir, "output directory (default: $SDPRECODE_OUT or ./out)");
    sub->add_option("--seed", opts.seed, "master seed override");
    sub->add_option("--threads", opts.threads, "worker threads (default: hardware concurrency)")
        ->check(CLI::NonNegativeNumber);
    sub->add_option("--trials", opts.trials, "trials per SNR point override")->check(CLI::PositiveNumber);
  };
  auto* ser = app.add_subcommand("ser", "Monte Carlo SER/BER curve");
  auto* spectrum = app.add_subcommand("spectrum", "angular power spectrum of the transmit signal");
  auto* scatter = app.add_subcommand("scatter", "noiseless IQ scatter of normalized received points");
  auto* solve = app.add_subcommand("solve", "one SLP instance with solver diagnostics");
  for (auto* s : {ser, spectrum, scatter, solve}) add_common(s);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*ser) return cmd_ser(opts);
    if (*spectrum) return cmd_spectrum(opts);
    if (*scatter) return cmd_scatter(opts);
    return cmd_solve(opts);
  } catch (const sdp::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
