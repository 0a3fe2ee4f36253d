#include "sdprecode/sim.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <iomanip>
#include <limits>
#include <locale>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "sdprecode/modulator.hpp"
#include "sdprecode/random.hpp"

namespace sdp {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double deg2rad(double d) { return d * kPi / 180.0; }

[[noreturn]] void config_error(const std::string& msg) { throw std::invalid_argument(msg); }

template <typename E>
struct NameTable {
  E value;
  const char* name;
};

constexpr NameTable<ChannelModel> kChannelNames[] = {
    {ChannelModel::single_path, "single_path"},
    {ChannelModel::iid_gaussian, "iid_gaussian"},
    {ChannelModel::multi_user, "multi_user"},
};
constexpr NameTable<GainModel> kGainNames[] = {{GainModel::unit, "unit"}, {GainModel::path_loss, "path_loss"}};
constexpr NameTable<SchemeKind> kSchemeNames[] = {
    {SchemeKind::mrt, "mrt"},
    {SchemeKind::mrt_steered, "mrt_steered"},
    {SchemeKind::mrt_generalized, "mrt_generalized"},
    {SchemeKind::zf, "zf"},
    {SchemeKind::zf_block, "zf_block"},
    {SchemeKind::nullspace_zf, "nullspace_zf"},
    {SchemeKind::slp_primal, "slp_primal"},
    {SchemeKind::slp_dual, "slp_dual"},
};
constexpr NameTable<ModulatorKind> kModulatorNames[] = {
    {ModulatorKind::basic, "basic"},
    {ModulatorKind::dithered, "dithered"},
    {ModulatorKind::steered, "steered"},
    {ModulatorKind::generalized, "generalized"},
    {ModulatorKind::unquantized, "unquantized"},
    {ModulatorKind::direct, "direct"},
};

template <typename E, std::size_t K>
std::string name_of(const NameTable<E> (&table)[K], E v) {
  for (const auto& e : table) {
    if (e.value == v) return e.name;
  }
  throw std::logic_error("unnamed enum value");
}

template <typename E, std::size_t K>
E value_of(const NameTable<E> (&table)[K], const std::string& s, const char* what) {
  for (const auto& e : table) {
    if (s == e.name) return e.value;
  }
  std::string known;
  for (const auto& e : table) known += std::string(known.empty() ? "" : ", ") + e.name;
  config_error(std::string("unknown ") + what + " '" + s + "' (expected one of: " + known + ")");
}

bool single_user_scheme(SchemeKind k) {
  return k == SchemeKind::mrt || k == SchemeKind::mrt_steered || k == SchemeKind::mrt_generalized;
}

bool slp_scheme(SchemeKind k) { return k == SchemeKind::slp_primal || k == SchemeKind::slp_dual; }

void require_modulator(const SchemeConfig& s, std::initializer_list<ModulatorKind> allowed) {
  for (auto m : allowed) {
    if (s.modulator == m) return;
  }
  config_error("scheme '" + to_string(s.kind) + "' cannot use modulator '" + to_string(s.modulator) + "'");
}

// ---------------------------------------------------------------------------
// Per-trial pipeline

struct Counts {
  long long symbols = 0;
  long long symbol_errors = 0;
  long long bits = 0;
  long long bit_errors = 0;
  long long solver_failures = 0;
  double theory = kNaN;  // per-trial closed-form SEP, NaN when unavailable

  void count(const Constellation& c, std::size_t sent, std::size_t decided) {
    ++symbols;
    bits += c.bits_per_symbol();
    if (sent != decided) {
      ++symbol_errors;
      bit_errors += c.bit_errors(sent, decided);
    }
  }
};

struct Context {
  const SimConfig& cfg;
  Constellation constellation;
  ArrayGeometry geometry;
  double noise_variance;
  double amp_scale;  // sqrt(P / 2N)
};

cplx draw_noise(std::mt19937_64& rng, double variance) {
  if (variance == 0.0) return {0.0, 0.0};
  std::normal_distribution<double> nd(0.0, std::sqrt(0.5 * variance));
  const double re = nd(rng);
  const double im = nd(rng);
  return {re, im};
}

std::size_t draw_symbol(std::mt19937_64& rng, const Constellation& c) {
  std::uniform_int_distribution<std::size_t> ud(0, static_cast<std::size_t>(c.order()) - 1);
  return ud(rng);
}

double draw_uniform(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> ud(lo, hi);
  return ud(rng);
}

cplx draw_gain(std::mt19937_64& rng, const ChannelConfig& ch) {
  const double phase = draw_uniform(rng, -kPi, kPi);
  double mag = 1.0;
  if (ch.gain == GainModel::path_loss) mag = ch.r0 / draw_uniform(rng, ch.r_min, ch.r_max);
  return std::polar(mag, phase);
}

std::vector<double> draw_angles(std::mt19937_64& rng, const ChannelConfig& ch, int k) {
  if (!ch.random_angles) {
    std::vector<double> out;
    for (double a : ch.angles_deg) out.push_back(deg2rad(a));
    return out;
  }
  // Sequential rejection: each new angle is redrawn until it clears the minimum separation.
  std::vector<double> deg;
  while (static_cast<int>(deg.size()) < k) {
    const double a = draw_uniform(rng, ch.angle_min_deg, ch.angle_max_deg);
    const bool clear = std::all_of(deg.begin(), deg.end(),
                                   [&](double b) { return std::abs(a - b) >= ch.min_separation_deg; });
    if (clear) deg.push_back(a);
  }
  std::vector<double> out;
  for (double a : deg) out.push_back(deg2rad(a));
  return out;
}

CVec modulate(const CVec& xbar, ModulatorKind kind, double dither, double phi, std::mt19937_64& rng) {
  switch (kind) {
    case ModulatorKind::basic:
      return sd_basic(xbar).output;
    case ModulatorKind::dithered:
      return sd_dithered(xbar, DitherSpec{dither, rng()}).output;
    case ModulatorKind::steered:
      return sd_angle_steered(xbar, phi).output;
    case ModulatorKind::unquantized:
      return xbar;
    case ModulatorKind::direct:
      return direct_quantize(xbar);
    case ModulatorKind::generalized:
      break;
  }
  throw std::logic_error("modulate: generalized modulation needs the channel");
}

struct SingleTransmit {
  CVec h;  // in the same antenna order as x
  CVec x;
  double gain;
  double theory_snr = kNaN;
};

SingleTransmit single_user_transmit(const Context& ctx, cplx s, std::mt19937_64& rng) {
  const auto& cfg = ctx.cfg;
  const auto& sch = cfg.scheme;
  const int n = cfg.n_antennas;
  SingleTransmit out;

  if (cfg.channel.model == ChannelModel::iid_gaussian) {
    std::normal_distribution<double> nd(0.0, std::sqrt(0.5));
    CVec h(n);
    for (int i = 0; i < n; ++i) {
      const double re = nd(rng);
      const double im = nd(rng);
      h[i] = {re, im};
    }
    const auto canon = CanonicalChannel::from_physical(h);
    GeneralizedOptions opts;
    opts.unit_amplitude = sch.unit_amplitude;
    opts.clamp = sch.clamp;
    const auto pre = mrt_generalized(canon, s, opts);
    out.h = canon.coefficients();
    out.gain = pre.gains[0];
    if (sch.modulator == ModulatorKind::generalized) {
      out.x = sd_generalized(pre.xbar, canon).output;
    } else {
      out.x = modulate(pre.xbar, sch.modulator, sch.dither, 0.0, rng);
    }
    return out;
  }

  const SinglePath ch{draw_gain(rng, cfg.channel), draw_angles(rng, cfg.channel, 1).front()};
  out.h = realize_channel(ch, ctx.geometry);
  const double p = cfg.total_power;
  if (sch.kind == SchemeKind::mrt_steered) {
    const auto st = mrt_angle_steered(ch, ctx.geometry, s);
    out.gain = st.output.gains[0];
    out.x = modulate(st.output.xbar, sch.modulator, sch.dither, st.phi, rng);
    if (sch.modulator != ModulatorKind::direct && ctx.noise_variance > 0.0) {
      out.theory_snr = effective_snr_steered(st.output.bound, ch.gain, p, ctx.noise_variance, n);
    }
  } else {
    const auto pre = mrt_single(ch, ctx.geometry, s);
    out.gain = pre.gains[0];
    out.x = modulate(pre.xbar, sch.modulator, sch.dither, 0.0, rng);
    if (ctx.noise_variance > 0.0) {
      if (sch.modulator == ModulatorKind::basic) {
        out.theory_snr = effective_snr_mrt(ch.gain, ch.angle, p, ctx.noise_variance, cfg.spacing, n);
      } else if (sch.modulator == ModulatorKind::unquantized) {
        out.theory_snr = effective_snr_steered(1.0, ch.gain, p, ctx.noise_variance, n);
      }
    }
  }
  return out;
}

Counts single_user_trial(const Context& ctx, std::mt19937_64& rng) {
  Counts c;
  double theory_sum = 0.0;
  bool have_theory = true;
  for (int t = 0; t < ctx.cfg.block_length; ++t) {
    const std::size_t sent = draw_symbol(rng, ctx.constellation);
    const cplx s = ctx.constellation.point(sent);
    const auto tx = single_user_transmit(ctx, s, rng);
    const cplx y = ctx.amp_scale * tx.h.cwiseProduct(tx.x).sum() + draw_noise(rng, ctx.noise_variance);
    c.count(ctx.constellation, sent, ctx.constellation.decide(y, ctx.amp_scale * tx.gain));
    if (std::isnan(tx.theory_snr)) {
      have_theory = false;
    } else {
      theory_sum += sep_bound(tx.theory_snr, ctx.constellation);
    }
  }
  if (have_theory) c.theory = theory_sum / ctx.cfg.block_length;
  return c;
}

MultiUserScene draw_scene(const Context& ctx, std::mt19937_64& rng) {
  const auto& ch = ctx.cfg.channel;
  const auto angles = draw_angles(rng, ch, ch.n_users);
  MultiUserScene scene{ctx.geometry, {}, ctx.cfg.total_power, ctx.noise_variance};
  for (int i = 0; i < ch.n_users; ++i) {
    scene.channels.emplace_back(SinglePath{draw_gain(rng, ch), angles[static_cast<std::size_t>(i)]});
  }
  return scene;
}

Counts multi_user_trial(const Context& ctx, std::mt19937_64& rng) {
  const auto& cfg = ctx.cfg;
  const auto& sch = cfg.scheme;
  const int k = cfg.channel.n_users;
  const int t_len = cfg.block_length;
  const MultiUserScene scene = draw_scene(ctx, rng);
  const ZfOperator op(scene);

  std::vector<std::vector<std::size_t>> sent(static_cast<std::size_t>(t_len));
  CMat symbols(k, t_len);
  for (int t = 0; t < t_len; ++t) {
    for (int i = 0; i < k; ++i) {
      sent[static_cast<std::size_t>(t)].push_back(draw_symbol(rng, ctx.constellation));
      symbols(i, t) = ctx.constellation.point(sent[static_cast<std::size_t>(t)].back());
    }
  }

  std::vector<PrecodeOutput> pre;
  switch (sch.kind) {
    case SchemeKind::zf:
      for (int t = 0; t < t_len; ++t) pre.push_back(zf_precode(op, symbols.col(t)));
      break;
    case SchemeKind::zf_block:
      pre = zf_precode_qam_block(op, symbols);
      break;
    case SchemeKind::nullspace_zf: {
      NullspaceOptions opts;
      opts.params = solver_params(sch);
      pre = nullspace_zf(op, symbols, opts);
      break;
    }
    case SchemeKind::slp_primal:
    case SchemeKind::slp_dual: {
      SlpOptions opts;
      opts.solver = sch.kind == SchemeKind::slp_primal ? SlpSolver::primal : SlpSolver::dual;
      opts.params = solver_params(sch);
      for (int t = 0; t < t_len; ++t) {
        pre.push_back(slp_psk(op.channel(), op.noise_std(), symbols.col(t), cfg.order, opts));
      }
      break;
    }
    default:
      throw std::logic_error("multi_user_trial: single-user scheme");
  }

  Counts c;
  double theory_sum = 0.0;
  const bool zf_theory = (sch.kind == SchemeKind::zf || sch.kind == SchemeKind::zf_block) &&
                         sch.modulator == ModulatorKind::basic && ctx.noise_variance > 0.0;
  for (int t = 0; t < t_len; ++t) {
    const auto& p = pre[static_cast<std::size_t>(t)];
    if (!p.diagnostics.converged) ++c.solver_failures;
    const CVec x = modulate(p.xbar, sch.modulator, sch.dither, 0.0, rng);
    const CVec rx = ctx.amp_scale * (op.channel() * x);
    for (int i = 0; i < k; ++i) {
      const cplx y = rx[i] + draw_noise(rng, ctx.noise_variance);
      const double scale = ctx.amp_scale * std::max(p.gains[i], 0.0);
      const std::size_t decided =
          scale > 0.0 ? ctx.constellation.decide(y, scale) : ctx.constellation.decide(y, 1.0);
      c.count(ctx.constellation, sent[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)], decided);
    }
    if (zf_theory) {
      // gamma = gains_i / sigma_w,i for every user.
      const double gamma = p.gains[0] / op.noise_std()[0];
      theory_sum += sep_bound(effective_snr_zf(gamma, cfg.total_power, cfg.n_antennas), ctx.constellation);
    }
  }
  if (zf_theory) c.theory = theory_sum / t_len;
  return c;
}

Counts run_trial(const Context& ctx, std::mt19937_64& rng) {
  if (single_user_scheme(ctx.cfg.scheme.kind)) return single_user_trial(ctx, rng);
  return multi_user_trial(ctx, rng);
}

// Runs fn(i) for i in [begin, end) on up to `threads` workers; the first exception is rethrown.
template <typename Fn>
void parallel_for(long long begin, long long end, int threads, Fn&& fn) {
  const long long count = end - begin;
  if (count <= 0) return;
  const int workers = static_cast<int>(std::min<long long>(std::max(threads, 1), count));
  if (workers == 1) {
    for (long long i = begin; i < end; ++i) fn(i);
    return;
  }
  std::exception_ptr failure;
  std::mutex mtx;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (long long i = begin + w; i < end; i += workers) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mtx);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

std::ostringstream csv_stream() {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << std::setprecision(10);
  return os;
}

}  // namespace

std::string to_string(ChannelModel v) { return name_of(kChannelNames, v); }
std::string to_string(GainModel v) { return name_of(kGainNames, v); }
std::string to_string(SchemeKind v) { return name_of(kSchemeNames, v); }
std::string to_string(ModulatorKind v) { return name_of(kModulatorNames, v); }
ChannelModel parse_channel_model(const std::string& s) { return value_of(kChannelNames, s, "channel model"); }
GainModel parse_gain_model(const std::string& s) { return value_of(kGainNames, s, "gain model"); }
SchemeKind parse_scheme(const std::string& s) { return value_of(kSchemeNames, s, "scheme"); }
ModulatorKind parse_modulator(const std::string& s) { return value_of(kModulatorNames, s, "modulator"); }

Constellation SimConfig::make_constellation() const { return Constellation::make(constellation, order); }

void SimConfig::validate() const {
  if (n_antennas < 1) config_error("n_antennas must be >= 1");
  if (!(spacing > 0.0 && spacing <= 0.5)) config_error("spacing must lie in (0, 0.5]");
  if (!(total_power > 0.0) || !std::isfinite(total_power)) config_error("total_power must be positive");
  if (trials < 1) config_error("trials must be >= 1");
  if (block_length < 1) config_error("block_length must be >= 1");
  if (max_errors < 0) config_error("max_errors must be >= 0");
  if (batch_size < 1) config_error("batch_size must be >= 1");
  if (spectrum_trials < 1) config_error("spectrum_trials must be >= 1");
  if (scatter_realizations < 1) config_error("scatter_realizations must be >= 1");
  for (double s : snr_db) {
    if (!std::isfinite(s)) config_error("snr_db entries must be finite");
  }
  for (double g : spectrum_grid_deg) {
    if (!(g >= -90.0 && g <= 90.0)) config_error("spectrum grid angles must lie in [-90, 90] degrees");
  }
  try {
    (void)make_constellation();
  } catch (const std::invalid_argument& e) {
    config_error(std::string("constellation: ") + e.what());
  }

  const auto& ch = channel;
  const auto& sch = scheme;
  if (ch.n_users < 1) config_error("n_users must be >= 1");
  if (ch.random_angles) {
    if (!(ch.angle_min_deg >= -90.0 && ch.angle_max_deg <= 90.0 && ch.angle_min_deg <= ch.angle_max_deg)) {
      config_error("angle range must be an ordered interval within [-90, 90] degrees");
    }
    if (ch.min_separation_deg < 0.0) config_error("min_separation_deg must be >= 0");
    if ((ch.n_users - 1) * ch.min_separation_deg > ch.angle_max_deg - ch.angle_min_deg) {
      config_error("angle range too narrow for the requested users and minimum separation");
    }
  } else if (ch.model != ChannelModel::iid_gaussian) {
    if (ch.angles_deg.empty()) config_error("angles_deg is empty; give one angle per user or set random_angles");
    if (static_cast<int>(ch.angles_deg.size()) != ch.n_users) config_error("angles_deg must list one angle per user");
    for (double a : ch.angles_deg) {
      if (!(a >= -90.0 && a <= 90.0)) config_error("angles must lie in [-90, 90] degrees");
    }
  }
  if (ch.gain == GainModel::path_loss && !(ch.r0 > 0.0 && ch.r_min > 0.0 && ch.r_min <= ch.r_max)) {
    config_error("path_loss gain needs r0 > 0 and 0 < r_min <= r_max");
  }
  if (sch.modulator == ModulatorKind::dithered && !(sch.dither > 0.0)) {
    config_error("dithered modulator needs dither > 0");
  }

  switch (sch.kind) {
    case SchemeKind::mrt:
      if (ch.model != ChannelModel::single_path) config_error("scheme 'mrt' needs the single_path channel");
      require_modulator(sch, {ModulatorKind::basic, ModulatorKind::dithered, ModulatorKind::unquantized,
                              ModulatorKind::direct});
      break;
    case SchemeKind::mrt_steered:
      if (ch.model != ChannelModel::single_path) config_error("scheme 'mrt_steered' needs the single_path channel");
      require_modulator(sch, {ModulatorKind::steered, ModulatorKind::unquantized, ModulatorKind::direct});
      break;
    case SchemeKind::mrt_generalized:
      if (ch.model != ChannelModel::iid_gaussian) {
        config_error("scheme 'mrt_generalized' needs the iid_gaussian channel");
      }
      require_modulator(sch, {ModulatorKind::generalized, ModulatorKind::unquantized, ModulatorKind::direct});
      break;
    default:
      if (ch.model != ChannelModel::multi_user) {
        config_error("scheme '" + to_string(sch.kind) + "' needs the multi_user channel");
      }
      require_modulator(sch, {ModulatorKind::basic, ModulatorKind::dithered, ModulatorKind::unquantized,
                              ModulatorKind::direct});
      if (ch.n_users > n_antennas) config_error("n_users must not exceed n_antennas");
      break;
  }
  if (single_user_scheme(sch.kind) && ch.n_users != 1) config_error("single-user schemes need n_users = 1");
  if ((sch.kind == SchemeKind::zf || slp_scheme(sch.kind)) && constellation != ConstellationKind::psk) {
    config_error("scheme '" + to_string(sch.kind) + "' supports PSK only; QAM needs zf_block or nullspace_zf");
  }
}

ApgParams solver_params(const SchemeConfig& scheme) {
  ApgParams p;
  if (slp_scheme(scheme.kind)) {
    p = default_slp_params(scheme.kind == SchemeKind::slp_primal ? SlpSolver::primal : SlpSolver::dual);
  } else if (scheme.kind == SchemeKind::nullspace_zf) {
    p = NullspaceOptions{}.params;
  }
  const auto& s = scheme.solver;
  if (s.smoothing > 0.0) p.smoothing = s.smoothing;
  if (s.regularization > 0.0) p.regularization = s.regularization;
  if (s.tolerance > 0.0) p.tolerance = s.tolerance;
  if (s.max_iters > 0) p.max_iters = s.max_iters;
  if (s.continuation_stages > 0) p.continuation_stages = s.continuation_stages;
  return p;
}

SlpInstance draw_instance(const SimConfig& config, std::size_t snr_index) {
  config.validate();
  if (config.channel.model != ChannelModel::multi_user) config_error("instances need the multi_user channel");
  if (snr_index >= config.snr_db.size()) config_error("snr index out of range");
  const ArrayGeometry geometry(config.n_antennas, config.spacing);
  const double snr_db = config.snr_db[snr_index];
  const Context ctx{config, config.make_constellation(), geometry,
                    config.total_power * std::pow(10.0, -snr_db / 10.0),
                    std::sqrt(config.total_power / (2.0 * config.n_antennas))};
  std::mt19937_64 rng(substream_seed(config.seed, snr_index, 0));
  SlpInstance out{draw_scene(ctx, rng), CVec(config.channel.n_users), {}};
  for (int i = 0; i < config.channel.n_users; ++i) {
    out.indices.push_back(draw_symbol(rng, ctx.constellation));
    out.symbols[i] = ctx.constellation.point(out.indices.back());
  }
  return out;
}

CVec direct_quantize(const CVec& xbar) { return xbar.unaryExpr([](cplx v) { return one_bit(v); }); }

SerCurve run_ser(const SimConfig& config, int threads) {
  config.validate();
  if (config.snr_db.empty()) config_error("snr_db must list at least one point");
  const ArrayGeometry geometry(config.n_antennas, config.spacing);
  const double amp_scale = std::sqrt(config.total_power / (2.0 * config.n_antennas));

  SerCurve curve;
  for (std::size_t k = 0; k < config.snr_db.size(); ++k) {
    const double snr_db = config.snr_db[k];
    const Context ctx{config, config.make_constellation(), geometry,
                      config.total_power * std::pow(10.0, -snr_db / 10.0), amp_scale};
    SerPoint pt;
    pt.snr_db = snr_db;
    double theory_sum = 0.0;
    bool have_theory = true;
    std::vector<Counts> partial;

    for (long long start = 0; start < config.trials; start += config.batch_size) {
      const long long stop = std::min<long long>(start + config.batch_size, config.trials);
      partial.assign(static_cast<std::size_t>(stop - start), Counts{});
      parallel_for(start, stop, threads, [&](long long t) {
        std::mt19937_64 rng(substream_seed(config.seed, k, static_cast<std::uint64_t>(t)));
        partial[static_cast<std::size_t>(t - start)] = run_trial(ctx, rng);
      });
      for (const auto& c : partial) {
        ++pt.trials;
        pt.symbols += c.symbols;
        pt.symbol_errors += c.symbol_errors;
        pt.bits += c.bits;
        pt.bit_errors += c.bit_errors;
        pt.solver_failures += c.solver_failures;
        if (std::isnan(c.theory)) {
          have_theory = false;
        } else {
          theory_sum += c.theory;
        }
      }
      if (config.max_errors > 0 && pt.symbol_errors >= config.max_errors) break;
    }
    pt.ser = static_cast<double>(pt.symbol_errors) / static_cast<double>(pt.symbols);
    pt.ber = static_cast<double>(pt.bit_errors) / static_cast<double>(pt.bits);
    pt.theory_ser = have_theory ? theory_sum / static_cast<double>(pt.trials) : kNaN;
    pt.ci_halfwidth = 1.96 * std::sqrt(pt.ser * (1.0 - pt.ser) / static_cast<double>(pt.symbols));
    curve.points.push_back(pt);
  }
  return curve;
}

std::vector<ScatterPoint> run_iq_scatter(const SimConfig& config, int n_realizations, int threads) {
  config.validate();
  if (!single_user_scheme(config.scheme.kind)) config_error("scatter runs need a single-user scheme");
  if (n_realizations < 1) config_error("scatter needs at least one realization");
  const ArrayGeometry geometry(config.n_antennas, config.spacing);
  const Context ctx{config, config.make_constellation(), geometry, 0.0, 1.0};
  std::vector<ScatterPoint> out(static_cast<std::size_t>(n_realizations));
  parallel_for(0, n_realizations, threads, [&](long long r) {
    std::mt19937_64 rng(substream_seed(config.seed, 0, static_cast<std::uint64_t>(r)));
    const cplx s = ctx.constellation.point(draw_symbol(rng, ctx.constellation));
    const auto tx = single_user_transmit(ctx, s, rng);
    const cplx y = tx.h.cwiseProduct(tx.x).sum();
    out[static_cast<std::size_t>(r)] = {s, y / tx.gain};
  });
  return out;
}

AngularSpectrum run_spectrum(const SimConfig& config, const std::vector<double>& grid_rad, int n_trials) {
  config.validate();
  if (config.channel.model != ChannelModel::single_path) config_error("spectrum runs need the single_path channel");
  const ArrayGeometry geometry(config.n_antennas, config.spacing);
  const Context ctx{config, config.make_constellation(), geometry, 0.0, 1.0};
  const SignalSource source = [&ctx](std::mt19937_64& rng) {
    const cplx s = ctx.constellation.point(draw_symbol(rng, ctx.constellation));
    return single_user_transmit(ctx, s, rng).x;
  };
  return angular_spectrum(source, geometry, grid_rad, n_trials, config.seed);
}

std::string ser_csv(const SerCurve& curve) {
  auto os = csv_stream();
  os << "snr_db,ser,ber,theory_ser,ci_halfwidth,trials\n";
  for (const auto& p : curve.points) {
    os << p.snr_db << ',' << p.ser << ',' << p.ber << ',' << p.theory_ser << ',' << p.ci_halfwidth << ','
       << p.trials << '\n';
  }
  return os.str();
}

std::string scatter_csv(const std::vector<ScatterPoint>& points) {
  auto os = csv_stream();
  os << "re_true,im_true,re_rx,im_rx\n";
  for (const auto& p : points) {
    os << p.sent.real() << ',' << p.sent.imag() << ',' << p.received.real() << ',' << p.received.imag() << '\n';
  }
  return os.str();
}

std::string spectrum_csv(const AngularSpectrum& spectrum) {
  auto os = csv_stream();
  os << "theta_deg,value_db\n";
  for (std::size_t g = 0; g < spectrum.angles.size(); ++g) {
    os << spectrum.angles[g] * 180.0 / kPi << ',' << spectrum.power_db[g] << '\n';
  }
  return os.str();
}

}  // namespace sdp
