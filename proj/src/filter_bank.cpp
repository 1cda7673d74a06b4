#include "igsf/filter_bank.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>
#include <numeric>
#include <string>

#include "igsf/errors.hpp"
#include "igsf/log.hpp"

namespace igsf {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// FNV-1a over the raw particle bytes; used to assert that the predicted
// ensemble stays untouched while iterations run.
std::uint64_t ensemble_checksum(const Ensemble& e) {
  std::uint64_t h = 14695981039346656037ULL;
  const auto* bytes = reinterpret_cast<const unsigned char*>(e.data());
  const std::size_t n = sizeof(double) * static_cast<std::size_t>(e.size());
  for (std::size_t i = 0; i < n; ++i) {
    h ^= bytes[i];
    h *= 1099511628211ULL;
  }
  return h;
}

double logsumexp(const std::vector<double>& v) {
  double m = kNegInf;
  for (const double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (const double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

void check_gamma(const Ensemble& particles, const char* who) {
  if (particles.cols() < 2)
    throw ParameterError(std::string(who) + ": need at least two particles, got " +
                         std::to_string(particles.cols()));
}

void check_bank(const FilterBank& bank, const char* who) {
  if (bank.mixands.empty()) throw ParameterError(std::string(who) + ": empty bank");
  const int dim = bank.dim();
  const int gamma = bank.gamma();
  for (const Mixand& m : bank.mixands)
    if (m.particles.rows() != dim || m.particles.cols() != gamma)
      throw DimensionError(std::string(who) + ": mixands disagree on ensemble shape");
  if (gamma < 2) throw ParameterError(std::string(who) + ": mixands need at least two particles");
}

}  // namespace

double AdpSchedule::value(int l) const { return adp_value(*this, l); }

std::vector<double> AdpSchedule::values() const {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(std::max(iterations, 0)));
  for (int l = 1; l <= iterations; ++l) out.push_back(value(l));
  return out;
}

double adp_value(const AdpSchedule& schedule, int l) {
  if (schedule.iterations < 0) throw ParameterError("adp_value: negative iteration count");
  if (l < 1 || l > schedule.iterations)
    throw ParameterError("adp_value: iteration " + std::to_string(l) + " outside [1, " +
                         std::to_string(schedule.iterations) + "]");
  if (!(schedule.alpha1 >= 0.0)) throw ParameterError("adp_value: alpha1 must be nonnegative");
  switch (schedule.kind) {
    case AdpKind::ExpDecay:
      // alpha_{l+1} = alpha_l / exp(l) telescopes to exp(-l(l-1)/2).
      return schedule.alpha1 * std::exp(-0.5 * static_cast<double>(l) *
                                        static_cast<double>(l - 1));
    case AdpKind::ConstantThenZero:
      return (l == schedule.iterations) ? 0.0 : schedule.alpha1;
  }
  throw ParameterError("adp_value: unknown schedule kind");
}

Vector sample_mean(const Ensemble& particles) {
  if (particles.cols() < 1) throw ParameterError("sample_mean: empty ensemble");
  return particles.rowwise().mean();
}

Matrix prediction_anomaly(const Ensemble& particles, const Vector& mean) {
  check_gamma(particles, "prediction_anomaly");
  if (mean.size() != particles.rows())
    throw DimensionError("prediction_anomaly: mean size mismatch");
  const double scale = 1.0 / std::sqrt(static_cast<double>(particles.cols()) - 1.0);
  return (particles.colwise() - mean) * scale;
}

Matrix map_observations(const Ensemble& particles, const MeasurementModel& mm, double t) {
  Matrix out(mm.obs_dim, particles.cols());
  for (Eigen::Index u = 0; u < particles.cols(); ++u)
    out.col(u) = measure(mm, particles.col(u), t);
  return out;
}

Matrix measurement_anomaly_pred(const Ensemble& particles, const MeasurementModel& mm, double t) {
  check_gamma(particles, "measurement_anomaly_pred");
  const Matrix mapped = map_observations(particles, mm, t);
  const Vector mean = mapped.rowwise().mean();
  const double scale = 1.0 / std::sqrt(static_cast<double>(particles.cols()) - 1.0);
  return (mapped.colwise() - mean) * scale;
}

Matrix gain_zeroth(const Matrix& s, const Matrix& sz, const Matrix& noise_cov) {
  if (s.cols() != sz.cols()) throw DimensionError("gain_zeroth: anomaly column counts differ");
  if (noise_cov.rows() != sz.rows() || noise_cov.cols() != sz.rows())
    throw DimensionError("gain_zeroth: noise covariance shape mismatch");
  Matrix a = sz * sz.transpose() + noise_cov;
  const CholResult chol = chol_psd(a, default_jitter(a));
  // K = S Sz^T A^{-1}; solve on the transposed system since A is symmetric.
  return psd_solve(chol.lower, sz * s.transpose()).transpose();
}

Ensemble update_zeroth(const Ensemble& predicted, const Vector& z, const Matrix& gain,
                       const MeasurementModel& mm, double t) {
  Ensemble out(predicted.rows(), predicted.cols());
  for (Eigen::Index u = 0; u < predicted.cols(); ++u) {
    const Vector innovation = z - measure(mm, predicted.col(u), t);
    out.col(u) = predicted.col(u) + gain * innovation;
  }
  return out;
}

IterAnomalies anomalies_iter(const Ensemble& current, const Ensemble& predicted, const Vector& z,
                             const MeasurementModel& mm, double t) {
  check_gamma(current, "anomalies_iter");
  if (current.rows() != predicted.rows() || current.cols() != predicted.cols())
    throw DimensionError("anomalies_iter: iterate and prediction shapes differ");
  const double scale = 1.0 / std::sqrt(static_cast<double>(current.cols()) - 1.0);
  IterAnomalies out;
  out.state = (current - predicted) * scale;
  const Matrix mapped = map_observations(current, mm, t);
  out.obs = (mapped.colwise() - z) * scale;
  return out;
}

Matrix gain_iter(const Matrix& s_hat, const Matrix& sz_hat, const Matrix& regularizer) {
  if (s_hat.cols() != sz_hat.cols()) throw DimensionError("gain_iter: anomaly column counts differ");
  if (regularizer.rows() != sz_hat.rows() || regularizer.cols() != sz_hat.rows())
    throw DimensionError("gain_iter: regularizer shape mismatch");
  if (sz_hat.isZero(0.0)) return Matrix::Zero(s_hat.rows(), sz_hat.rows());
  Matrix a = sz_hat * sz_hat.transpose() + regularizer;
  const CholResult chol = chol_psd(a, 0.0);
  return psd_solve(chol.lower, sz_hat * s_hat.transpose()).transpose();
}

Matrix gain_iter(const Matrix& s_hat, const Matrix& sz_hat, double epsilon) {
  if (epsilon < 0.0) throw ParameterError("gain_iter: negative epsilon");
  const Matrix reg = epsilon * Matrix::Identity(sz_hat.rows(), sz_hat.rows());
  return gain_iter(s_hat, sz_hat, reg);
}

Ensemble update_iter(const Ensemble& predicted, const Ensemble& previous, const Vector& z,
                     const Matrix& gain, double alpha, const MeasurementModel& mm, double t) {
  if (predicted.rows() != previous.rows() || predicted.cols() != previous.cols())
    throw DimensionError("update_iter: iterate and prediction shapes differ");
  Ensemble out(predicted.rows(), predicted.cols());
  for (Eigen::Index u = 0; u < predicted.cols(); ++u) {
    const Vector innovation = z - measure(mm, previous.col(u), t);
    out.col(u) = predicted.col(u) + (1.0 + alpha) * (gain * innovation);
  }
  return out;
}

MixandUpdateResult igsf_mixand_update(const Ensemble& predicted, const Vector& z,
                                      const MeasurementModel& mm, double t,
                                      const AdpSchedule& schedule, const IgsfOptions& opt) {
  check_gamma(predicted, "igsf_mixand_update");
  if (z.size() != mm.obs_dim) throw DimensionError("igsf_mixand_update: observation size mismatch");
  const double gamma1 = std::sqrt(static_cast<double>(predicted.cols()) - 1.0);
  const std::uint64_t before = ensemble_checksum(predicted);

  const Vector pred_mean = sample_mean(predicted);
  const Matrix s = prediction_anomaly(predicted, pred_mean);
  const Matrix sz = measurement_anomaly_pred(predicted, mm, t);
  const Matrix k0 = gain_zeroth(s, sz, mm.noise_cov);
  Ensemble current = update_zeroth(predicted, z, k0, mm, t);

  // The iterated update always reaches back to the predicted particles; this
  // is the anchor it uses (optionally collapsed to the predicted mean).
  Ensemble anchor;
  if (opt.average_prediction_term)
    anchor = pred_mean.replicate(1, predicted.cols());
  const Ensemble& base = opt.average_prediction_term ? anchor : predicted;

  for (int l = 1; l <= schedule.iterations; ++l) {
    Matrix s_hat;
    Matrix sz_hat;
    if (l == 1) {
      // First iteration runs on the prediction anomalies by convention.
      s_hat = s;
      sz_hat = sz;
    } else {
      IterAnomalies a = anomalies_iter(current, predicted, z, mm, t);
      s_hat = std::move(a.state);
      sz_hat = std::move(a.obs);
    }
    const double epsilon =
        opt.strict_epsilon_zero
            ? 0.0
            : opt.epsilon_scale * sz_hat.squaredNorm() / static_cast<double>(mm.obs_dim);
    const Matrix k = gain_iter(s_hat, sz_hat, epsilon);
    current = update_iter(base, current, z, k, schedule.value(l), mm, t);
  }

  if (ensemble_checksum(predicted) != before)
    throw NumericalError("igsf_mixand_update: predicted ensemble was modified during iterations");

  MixandUpdateResult out;
  const Matrix mapped = map_observations(current, mm, t);
  out.stats.predicted_obs_mean = mapped.rowwise().mean();
  out.stats.obs_anomaly =
      (schedule.iterations == 0) ? sz : Matrix((mapped.colwise() - z) / gamma1);
  out.particles = std::move(current);
  return out;
}

std::vector<double> weight_update(const std::vector<double>& weights, const Vector& z,
                                  const std::vector<MixandObsStats>& stats,
                                  const Matrix& noise_cov) {
  if (weights.empty() || weights.size() != stats.size())
    throw DimensionError("weight_update: weight and stats counts differ");

  std::vector<double> loglik(weights.size());
  bool any_finite = false;
  for (std::size_t i = 0; i < stats.size(); ++i) {
    const Matrix cov = stats[i].obs_anomaly * stats[i].obs_anomaly.transpose() + noise_cov;
    double ll;
    try {
      ll = gauss_logpdf(z, stats[i].predicted_obs_mean, cov);
    } catch (const NumericalError&) {
      ll = kNegInf;
    }
    if (std::isnan(ll)) ll = kNegInf;
    loglik[i] = ll;
    any_finite = any_finite || std::isfinite(ll);
  }
  if (!any_finite) {
    log_warning("weight_update: all mixand likelihoods degenerate, resetting to uniform");
    return std::vector<double>(weights.size(), 1.0 / static_cast<double>(weights.size()));
  }

  // First normalization: likelihoods against their own sum. Second: the
  // reweighted values against theirs. Both in log space.
  const double den1 = logsumexp(loglik);
  std::vector<double> lt(weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] < 0.0) throw ParameterError("weight_update: negative weight");
    lt[i] = std::log(weights[i]) + loglik[i] - den1;
  }
  const double den2 = logsumexp(lt);
  if (!std::isfinite(den2)) {
    log_warning("weight_update: weighted likelihoods degenerate, resetting to uniform");
    return std::vector<double>(weights.size(), 1.0 / static_cast<double>(weights.size()));
  }
  std::vector<double> out(weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i) out[i] = std::exp(lt[i] - den2);
  return out;
}

Vector bank_estimate(const FilterBank& bank) {
  check_bank(bank, "bank_estimate");
  Vector out = Vector::Zero(bank.dim());
  for (const Mixand& m : bank.mixands) out += m.weight * sample_mean(m.particles);
  return out;
}

namespace {

bool trips_guard(const Ensemble& particles, double guard) {
  if (guard <= 0.0) return false;
  return !particles.allFinite() || particles.cwiseAbs().maxCoeff() > guard;
}

std::string short_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

// Shared stepping skeleton for the full and zeroth-only banks. Mixands that
// diverge (non-finite particles, magnitudes past the guard, or a failed gain
// factorization) are frozen with their pre-step particles and zero weight;
// strict mode (guard disabled) propagates the failure instead.
FilterBank bank_step_impl(const FilterBank& bank, const ProcessModel& model,
                          const MeasurementModel& mm, const Vector& z, double t_from, double t_to,
                          int step_index, const AdpSchedule* schedule, const IgsfOptions& opt,
                          std::span<RngStream> streams) {
  check_bank(bank, "igsf_bank_step");
  if (static_cast<int>(streams.size()) != bank.size())
    throw ParameterError("igsf_bank_step: need one stream per mixand");

  const bool guarded = opt.divergence_guard > 0.0;
  const PropagateOptions prop_opt{opt.anchor};
  FilterBank next;
  next.step = bank.step + 1;
  next.mixands.resize(bank.mixands.size());
  std::vector<MixandObsStats> stats(bank.mixands.size());

  const auto freeze = [&](int k, const char* why) {
    next.mixands[k].particles = bank.mixands[k].particles;
    next.mixands[k].frozen = true;
    log_warning("igsf_bank_step: mixand " + std::to_string(k) + " diverged (" + why +
                ") at step " + std::to_string(step_index) + "; frozen with zero weight");
  };

  for (int k = 0; k < bank.size(); ++k) {
    if (bank.mixands[k].frozen) {
      next.mixands[k].particles = bank.mixands[k].particles;
      next.mixands[k].frozen = true;
      continue;  // no stream consumption, no update
    }
    try {
      const Ensemble predicted = propagate_subensemble(model, bank.mixands[k].particles, t_from,
                                                       t_to, step_index, streams[k], prop_opt);
      if (trips_guard(predicted, opt.divergence_guard)) {
        freeze(k, "prediction out of range");
        continue;
      }
      Ensemble updated;
      if (schedule != nullptr) {
        MixandUpdateResult r = igsf_mixand_update(predicted, z, mm, t_to, *schedule, opt);
        updated = std::move(r.particles);
        stats[k] = std::move(r.stats);
      } else {
        const Vector mean = sample_mean(predicted);
        const Matrix s = prediction_anomaly(predicted, mean);
        const Matrix sz = measurement_anomaly_pred(predicted, mm, t_to);
        const Matrix k0 = gain_zeroth(s, sz, mm.noise_cov);
        updated = update_zeroth(predicted, z, k0, mm, t_to);
        const Matrix mapped = map_observations(updated, mm, t_to);
        stats[k].predicted_obs_mean = mapped.rowwise().mean();
        stats[k].obs_anomaly = sz;
      }
      if (trips_guard(updated, opt.divergence_guard)) {
        freeze(k, "update out of range");
        continue;
      }
      next.mixands[k].particles = std::move(updated);
    } catch (NumericalError& e) {
      if (!guarded) rethrow_with_context(e, step_index, k);
      freeze(k, e.what());
    }
  }

  // Weight bookkeeping runs over the live mixands only; frozen ones hold zero.
  std::vector<int> alive;
  for (int k = 0; k < bank.size(); ++k)
    if (!next.mixands[k].frozen) alive.push_back(k);

  if (alive.empty()) {
    // Degenerate bank: every mixand has been retired. Keep uniform weights so
    // the bank estimate remains the (frozen) mixture mean instead of zero.
    bool fresh = false;
    for (const Mixand& m : bank.mixands) fresh = fresh || !m.frozen;
    if (fresh)
      log_warning("igsf_bank_step: all mixands frozen at step " + std::to_string(step_index));
    for (auto& m : next.mixands) m.weight = 1.0 / static_cast<double>(bank.size());
    return next;
  }

  std::vector<double> prior;
  std::vector<MixandObsStats> live_stats;
  prior.reserve(alive.size());
  live_stats.reserve(alive.size());
  for (const int k : alive) {
    prior.push_back(bank.mixands[k].weight);
    live_stats.push_back(std::move(stats[k]));
  }
  // Weights of freshly frozen mixands are lost mass; renormalize the rest.
  const double total = std::accumulate(prior.begin(), prior.end(), 0.0);
  if (total <= 0.0) {
    for (double& w : prior) w = 1.0 / static_cast<double>(prior.size());
  } else {
    for (double& w : prior) w /= total;
  }

  std::vector<double> posterior;
  try {
    posterior = weight_update(prior, z, live_stats, mm.noise_cov);
  } catch (NumericalError& e) {
    rethrow_with_context(e, step_index);
  }
  int floored = 0;
  for (std::size_t j = 0; j < alive.size(); ++j) {
    next.mixands[alive[j]].weight = posterior[j];
    if (posterior[j] < opt.weight_floor) ++floored;
  }
  if (floored > 0)
    log_warning("igsf_bank_step: " + std::to_string(floored) + " mixand weight(s) below " +
                short_real(opt.weight_floor) + " at step " + std::to_string(step_index));
  return next;
}

}  // namespace

FilterBank igsf_bank_step(const FilterBank& bank, const ProcessModel& model,
                          const MeasurementModel& mm, const Vector& z, double t_from, double t_to,
                          int step_index, const AdpSchedule& schedule, const IgsfOptions& opt,
                          std::span<RngStream> streams) {
  return bank_step_impl(bank, model, mm, z, t_from, t_to, step_index, &schedule, opt, streams);
}

FilterBank zeroth_bank_step(const FilterBank& bank, const ProcessModel& model,
                            const MeasurementModel& mm, const Vector& z, double t_from,
                            double t_to, int step_index, const IgsfOptions& opt,
                            std::span<RngStream> streams) {
  return bank_step_impl(bank, model, mm, z, t_from, t_to, step_index, nullptr, opt, streams);
}

FilterBank init_bank(const BankInit& init, std::span<RngStream> streams) {
  if (init.n_mixands < 1) throw ParameterError("init_bank: need at least one mixand");
  if (init.particles_per_mixand < 2)
    throw ParameterError("init_bank: need at least two particles per mixand");
  if (static_cast<int>(streams.size()) != init.n_mixands)
    throw ParameterError("init_bank: need one stream per mixand");
  const int dim = static_cast<int>(init.prior_mean.size());
  if (init.prior_cov.rows() != dim || init.prior_cov.cols() != dim)
    throw DimensionError("init_bank: prior covariance shape mismatch");

  const Matrix lower = chol_psd(init.prior_cov, default_jitter(init.prior_cov)).lower;
  const Vector stddev = init.prior_cov.diagonal().cwiseMax(0.0).cwiseSqrt();

  FilterBank bank;
  bank.mixands.resize(static_cast<std::size_t>(init.n_mixands));
  for (int k = 0; k < init.n_mixands; ++k) {
    Vector center = init.prior_mean;
    if (init.spread == BankInit::Spread::Stratified && dim > 0) {
      const int axis = (k / 2) % dim;
      const double sign = (k % 2 == 0) ? 1.0 : -1.0;
      center[axis] += sign * init.stratify_scale * stddev[axis];
    }
    Ensemble particles(dim, init.particles_per_mixand);
    for (int u = 0; u < init.particles_per_mixand; ++u)
      particles.col(u) = center + lower * streams[k].normals(dim);
    bank.mixands[static_cast<std::size_t>(k)] =
        Mixand{std::move(particles), 1.0 / static_cast<double>(init.n_mixands)};
  }
  return bank;
}

namespace {

std::vector<RngStream> make_mixand_streams(std::uint64_t seed, std::string_view prefix,
                                           const char* purpose, int count) {
  std::vector<RngStream> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    const std::string tag =
        std::string(prefix) + "/" + purpose + "/mixand=" + std::to_string(k);
    out.emplace_back(seed, stream_tag(tag));
  }
  return out;
}

void check_observation_times(const std::vector<Observation>& obs, double t0) {
  double prev = t0;
  for (const Observation& o : obs) {
    if (!(o.t > prev))
      throw ParameterError("run_filter: observation times must be strictly increasing from t0");
    prev = o.t;
  }
}

BankDiagnostics bank_diagnostics(const FilterBank& bank) {
  BankDiagnostics d;
  d.weights.reserve(bank.mixands.size());
  d.mixand_means.reserve(bank.mixands.size());
  for (const Mixand& m : bank.mixands) {
    d.weights.push_back(m.weight);
    d.mixand_means.push_back(sample_mean(m.particles));
  }
  return d;
}

}  // namespace

FilterRunResult run_filter(const ProcessModel& model, const MeasurementModel& mm,
                           const std::vector<Observation>& observations, const BankInit& init,
                           const AdpSchedule& schedule, const IgsfOptions& opt,
                           std::uint64_t seed, std::string_view stream_prefix,
                           bool collect_diagnostics) {
  check_observation_times(observations, init.t0);
  std::vector<RngStream> init_streams =
      make_mixand_streams(seed, stream_prefix, "init", init.n_mixands);
  std::vector<RngStream> prop_streams =
      make_mixand_streams(seed, stream_prefix, "prop", init.n_mixands);

  FilterBank bank = init_bank(init, init_streams);
  FilterRunResult out;
  out.estimates.reserve(observations.size());
  double t_prev = init.t0;
  for (std::size_t i = 0; i < observations.size(); ++i) {
    bank = igsf_bank_step(bank, model, mm, observations[i].z, t_prev, observations[i].t,
                          static_cast<int>(i), schedule, opt, prop_streams);
    out.estimates.push_back(bank_estimate(bank));
    if (collect_diagnostics) out.diagnostics.push_back(bank_diagnostics(bank));
    t_prev = observations[i].t;
  }
  return out;
}

FilterRunResult run_igsf_single(const ProcessModel& model, const MeasurementModel& mm,
                                const std::vector<Observation>& observations,
                                const BankInit& init, const AdpSchedule& schedule,
                                const IgsfOptions& opt, std::uint64_t seed,
                                std::string_view stream_prefix) {
  if (init.n_mixands != 1)
    throw ParameterError("run_igsf_single: single-filter driver requires n_mixands == 1");
  check_observation_times(observations, init.t0);
  std::vector<RngStream> init_streams = make_mixand_streams(seed, stream_prefix, "init", 1);
  std::vector<RngStream> prop_streams = make_mixand_streams(seed, stream_prefix, "prop", 1);

  FilterBank bank = init_bank(init, init_streams);
  Ensemble particles = std::move(bank.mixands[0].particles);
  const PropagateOptions prop_opt{opt.anchor};
  const bool guarded = opt.divergence_guard > 0.0;
  bool frozen = false;

  FilterRunResult out;
  out.estimates.reserve(observations.size());
  double t_prev = init.t0;
  for (std::size_t i = 0; i < observations.size(); ++i) {
    // The freeze handling mirrors the bank path exactly so that a bank with
    // one mixand stays bitwise identical even through a divergence.
    const auto freeze = [&](const char* why) {
      frozen = true;
      log_warning("igsf_bank_step: mixand 0 diverged (" + std::string(why) + ") at step " +
                  std::to_string(i) + "; frozen with zero weight");
      log_warning("igsf_bank_step: all mixands frozen at step " + std::to_string(i));
    };
    if (!frozen) {
      try {
        const Ensemble predicted = propagate_subensemble(model, particles, t_prev,
                                                         observations[i].t, static_cast<int>(i),
                                                         prop_streams[0], prop_opt);
        if (trips_guard(predicted, opt.divergence_guard)) {
          freeze("prediction out of range");
        } else {
          MixandUpdateResult r = igsf_mixand_update(predicted, observations[i].z, mm,
                                                    observations[i].t, schedule, opt);
          if (trips_guard(r.particles, opt.divergence_guard)) {
            freeze("update out of range");
          } else {
            particles = std::move(r.particles);
          }
        }
      } catch (NumericalError& e) {
        if (!guarded) rethrow_with_context(e, static_cast<int>(i), 0);
        freeze(e.what());
      }
    }
    // Matches bank_estimate for a single unit-weight mixand bit for bit.
    Vector estimate = Vector::Zero(particles.rows());
    estimate += 1.0 * sample_mean(particles);
    out.estimates.push_back(std::move(estimate));
    t_prev = observations[i].t;
  }
  return out;
}

FilterRunResult run_zeroth_filter(const ProcessModel& model, const MeasurementModel& mm,
                                  const std::vector<Observation>& observations,
                                  const BankInit& init, const IgsfOptions& opt,
                                  std::uint64_t seed, std::string_view stream_prefix) {
  check_observation_times(observations, init.t0);
  std::vector<RngStream> init_streams =
      make_mixand_streams(seed, stream_prefix, "init", init.n_mixands);
  std::vector<RngStream> prop_streams =
      make_mixand_streams(seed, stream_prefix, "prop", init.n_mixands);

  FilterBank bank = init_bank(init, init_streams);
  FilterRunResult out;
  out.estimates.reserve(observations.size());
  double t_prev = init.t0;
  for (std::size_t i = 0; i < observations.size(); ++i) {
    bank = zeroth_bank_step(bank, model, mm, observations[i].z, t_prev, observations[i].t,
                            static_cast<int>(i), opt, prop_streams);
    out.estimates.push_back(bank_estimate(bank));
    t_prev = observations[i].t;
  }
  return out;
}

}  // namespace igsf
