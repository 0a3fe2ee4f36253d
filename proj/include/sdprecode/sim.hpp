#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sdprecode/analysis.hpp"
#include "sdprecode/channel.hpp"
#include "sdprecode/optim.hpp"
#include "sdprecode/precoder.hpp"

namespace sdp {

inline constexpr const char* kLibraryVersion = "0.1.0";

enum class ChannelModel {
  single_path,   // one user, |alpha| from the gain model, fixed or random angle
  iid_gaussian,  // one user, h ~ CN(0, I)
  multi_user,    // K single-path users
};

enum class GainModel {
  unit,       // |alpha| = 1
  path_loss,  // |alpha| = r0 / r, r uniform on [r_min, r_max]
};

enum class SchemeKind { mrt, mrt_steered, mrt_generalized, zf, zf_block, nullspace_zf, slp_primal, slp_dual };

enum class ModulatorKind { basic, dithered, steered, generalized, unquantized, direct };

struct ChannelConfig {
  ChannelModel model = ChannelModel::single_path;
  int n_users = 1;
  bool random_angles = false;      // draw angles per trial instead of using angles_deg
  std::vector<double> angles_deg;  // fixed user angles, one per user
  double angle_min_deg = -30.0;
  double angle_max_deg = 30.0;
  double min_separation_deg = 1.0;
  GainModel gain = GainModel::unit;
  double r0 = 30.0;
  double r_min = 20.0;
  double r_max = 100.0;

  friend bool operator==(const ChannelConfig&, const ChannelConfig&) = default;
};

/// Zero fields select the scheme defaults.
struct SolverConfig {
  double smoothing = 0.0;
  double regularization = 0.0;
  double tolerance = 0.0;
  int max_iters = 0;
  int continuation_stages = 0;

  friend bool operator==(const SolverConfig&, const SolverConfig&) = default;
};

struct SchemeConfig {
  SchemeKind kind = SchemeKind::mrt;
  ModulatorKind modulator = ModulatorKind::basic;
  double dither = 0.0;          // dithered modulator level delta
  bool unit_amplitude = false;  // mrt_generalized: A_n = 1
  bool clamp = false;           // mrt_generalized: enforce the per-element box
  SolverConfig solver;

  friend bool operator==(const SchemeConfig&, const SchemeConfig&) = default;
};

struct SimConfig {
  int n_antennas = 256;
  double spacing = 0.125;  // d / lambda
  ChannelConfig channel;
  ConstellationKind constellation = ConstellationKind::psk;
  int order = 8;
  SchemeConfig scheme;
  double total_power = 1.0;
  std::vector<double> snr_db;  // P / sigma_v^2
  int trials = 100000;         // per SNR point; one trial is one channel draw and one block
  int block_length = 1;        // T symbol times per trial
  int max_errors = 500;        // early stop once this many symbol errors are seen; 0 disables
  int batch_size = 200;        // trials between early-stop checks
  std::uint64_t seed = 1;

  // Spectrum and scatter runs.
  std::vector<double> spectrum_grid_deg;
  int spectrum_trials = 200;
  int scatter_realizations = 1000;

  friend bool operator==(const SimConfig&, const SimConfig&) = default;

  /// Throws std::invalid_argument describing the first inconsistency.
  void validate() const;
  Constellation make_constellation() const;
};

std::string to_string(ChannelModel v);
std::string to_string(GainModel v);
std::string to_string(SchemeKind v);
std::string to_string(ModulatorKind v);
ChannelModel parse_channel_model(const std::string& s);
GainModel parse_gain_model(const std::string& s);
SchemeKind parse_scheme(const std::string& s);
ModulatorKind parse_modulator(const std::string& s);

struct SerPoint {
  double snr_db = 0.0;
  double ser = 0.0;
  double ber = 0.0;
  double theory_ser = 0.0;  // NaN where no closed form applies
  double ci_halfwidth = 0.0;
  long long trials = 0;
  long long symbols = 0;
  long long symbol_errors = 0;
  long long bits = 0;
  long long bit_errors = 0;
  long long solver_failures = 0;  // precoder solves that hit the iteration cap
};

struct SerCurve {
  std::vector<SerPoint> points;
};

/// Monte Carlo SER/BER over the configured SNR grid. Trial t at SNR index k draws from
/// the generator seeded by substream_seed(seed, k, t); partial counts are reduced in trial
/// order and early stopping is checked only at batch boundaries, so results do not
/// depend on `threads`.
SerCurve run_ser(const SimConfig& config, int threads = 1);

struct ScatterPoint {
  cplx sent;
  cplx received;  // y / c
};

/// Noiseless received points normalized by the receive gain, for single-user schemes.
std::vector<ScatterPoint> run_iq_scatter(const SimConfig& config, int n_realizations, int threads = 1);

/// Angular spectrum of the one-bit transmit vector for single-path schemes.
AngularSpectrum run_spectrum(const SimConfig& config, const std::vector<double>& grid_rad, int n_trials);

struct SlpInstance {
  MultiUserScene scene;
  CVec symbols;
  std::vector<std::size_t> indices;
};

/// The scene and symbols that run_ser would draw for trial 0 at the given SNR index.
SlpInstance draw_instance(const SimConfig& config, std::size_t snr_index = 0);

/// Rail-wise one-bit quantization of a transmit vector.
CVec direct_quantize(const CVec& xbar);

/// ApgParams for the configured SLP solver or nullspace solver.
ApgParams solver_params(const SchemeConfig& scheme);

std::string ser_csv(const SerCurve& curve);
std::string scatter_csv(const std::vector<ScatterPoint>& points);
std::string spectrum_csv(const AngularSpectrum& spectrum);

}  // namespace sdp
