#include "igsf/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "igsf/errors.hpp"

namespace igsf {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double logsumexp(const std::vector<double>& v) {
  double m = kNegInf;
  for (const double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (const double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

std::vector<double> particle_loglik(const Ensemble& particles, const MeasurementModel& mm,
                                    const Vector& z, double t) {
  std::vector<double> out(static_cast<std::size_t>(particles.cols()));
  for (Eigen::Index u = 0; u < particles.cols(); ++u) {
    double ll;
    try {
      ll = gauss_logpdf(z, measure(mm, particles.col(u), t), mm.noise_cov);
    } catch (const NumericalError&) {
      ll = kNegInf;
    }
    out[static_cast<std::size_t>(u)] = std::isnan(ll) ? kNegInf : ll;
  }
  return out;
}

// Normalizes log weights in place; throws on collective underflow.
std::vector<double> normalize_log_weights(std::vector<double> lw, const char* who) {
  const double den = logsumexp(lw);
  if (!std::isfinite(den))
    throw DegeneracyError(std::string(who) + ": importance weights underflowed to zero");
  std::vector<double> out(lw.size());
  for (std::size_t i = 0; i < lw.size(); ++i) out[i] = std::exp(lw[i] - den);
  return out;
}

void check_weighted(const WeightedEnsemble& state, const char* who) {
  if (state.particles.cols() < 2)
    throw ParameterError(std::string(who) + ": need at least two particles");
  if (state.weights.size() != static_cast<std::size_t>(state.particles.cols()))
    throw DimensionError(std::string(who) + ": weight count does not match particle count");
}

}  // namespace

double effective_sample_size(const std::vector<double>& weights) {
  double s = 0.0;
  for (const double w : weights) s += w * w;
  if (s <= 0.0) throw ParameterError("effective_sample_size: all weights zero");
  return 1.0 / s;
}

std::vector<int> systematic_resample(const std::vector<double>& weights, int count,
                                     RngStream& stream) {
  if (weights.empty() || count < 1) throw ParameterError("systematic_resample: empty input");
  const double u = stream.uniform();
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(count));
  double cum = weights[0];
  int j = 0;
  const int last = static_cast<int>(weights.size()) - 1;
  for (int k = 0; k < count; ++k) {
    const double position = (static_cast<double>(k) + u) / static_cast<double>(count);
    while (cum < position && j < last) {
      ++j;
      cum += weights[static_cast<std::size_t>(j)];
    }
    out.push_back(j);
  }
  return out;
}

Ensemble enkf_step(const Ensemble& particles, const ProcessModel& model,
                   const MeasurementModel& mm, const Vector& z, double t_from, double t_to,
                   int step_index, RngStream& prop, RngStream& perturb,
                   const PropagateOptions& opt) {
  const Ensemble predicted =
      propagate_subensemble(model, particles, t_from, t_to, step_index, prop, opt);
  const Vector mean = sample_mean(predicted);
  const Matrix s = prediction_anomaly(predicted, mean);
  const Matrix sz = measurement_anomaly_pred(predicted, mm, t_to);
  const Matrix gain = gain_zeroth(s, sz, mm.noise_cov);
  const Matrix noise_chol = chol_psd(mm.noise_cov, default_jitter(mm.noise_cov)).lower;

  Ensemble out(predicted.rows(), predicted.cols());
  for (Eigen::Index u = 0; u < predicted.cols(); ++u) {
    const Vector perturbed = z + noise_chol * perturb.normals(mm.obs_dim);
    const Vector innovation = perturbed - measure(mm, predicted.col(u), t_to);
    out.col(u) = predicted.col(u) + gain * innovation;
  }
  return out;
}

WeightedEnsemble sir_step(const WeightedEnsemble& state, const ProcessModel& model,
                          const MeasurementModel& mm, const Vector& z, double t_from, double t_to,
                          int step_index, RngStream& prop, RngStream& resample,
                          const PropagateOptions& opt) {
  check_weighted(state, "sir_step");
  const int count = static_cast<int>(state.particles.cols());

  WeightedEnsemble next;
  next.particles =
      propagate_subensemble(model, state.particles, t_from, t_to, step_index, prop, opt);
  const std::vector<double> loglik = particle_loglik(next.particles, mm, z, t_to);
  std::vector<double> lw(loglik.size());
  for (std::size_t u = 0; u < loglik.size(); ++u)
    lw[u] = std::log(state.weights[u]) + loglik[u];
  next.weights = normalize_log_weights(std::move(lw), "sir_step");

  if (effective_sample_size(next.weights) < 0.5 * static_cast<double>(count)) {
    const std::vector<int> parents = systematic_resample(next.weights, count, resample);
    Ensemble resampled(next.particles.rows(), count);
    for (int k = 0; k < count; ++k) resampled.col(k) = next.particles.col(parents[k]);
    next.particles = std::move(resampled);
    next.weights.assign(static_cast<std::size_t>(count), 1.0 / static_cast<double>(count));
  }
  return next;
}

WeightedEnsemble asir_step(const WeightedEnsemble& state, const ProcessModel& model,
                           const MeasurementModel& mm, const Vector& z, double t_from,
                           double t_to, int step_index, RngStream& prop, RngStream& resample,
                           const PropagateOptions& opt) {
  check_weighted(state, "asir_step");
  const int count = static_cast<int>(state.particles.cols());

  // Stage one: score by the likelihood of the noise-free point prediction.
  const Ensemble points =
      propagate_deterministic(model, state.particles, t_from, t_to, step_index, opt);
  const std::vector<double> point_loglik = particle_loglik(points, mm, z, t_to);
  std::vector<double> lw(point_loglik.size());
  for (std::size_t u = 0; u < point_loglik.size(); ++u)
    lw[u] = std::log(state.weights[u]) + point_loglik[u];
  const std::vector<double> stage_one = normalize_log_weights(std::move(lw), "asir_step");
  const std::vector<int> parents = systematic_resample(stage_one, count, resample);

  Ensemble selected(state.particles.rows(), count);
  for (int k = 0; k < count; ++k) selected.col(k) = state.particles.col(parents[k]);

  // Stage two: propagate the selected parents with noise and compensate by
  // the parent's point likelihood.
  WeightedEnsemble next;
  next.particles = propagate_subensemble(model, selected, t_from, t_to, step_index, prop, opt);
  const std::vector<double> loglik = particle_loglik(next.particles, mm, z, t_to);
  std::vector<double> lw2(loglik.size());
  for (int k = 0; k < count; ++k)
    lw2[static_cast<std::size_t>(k)] =
        loglik[static_cast<std::size_t>(k)] - point_loglik[static_cast<std::size_t>(parents[k])];
  next.weights = normalize_log_weights(std::move(lw2), "asir_step");
  return next;
}

FilterBank gspf_step(const FilterBank& bank, const ProcessModel& model,
                     const MeasurementModel& mm, const Vector& z, double t_from, double t_to,
                     int step_index, std::span<RngStream> prop, std::span<RngStream> redraw,
                     const PropagateOptions& opt) {
  if (bank.mixands.empty()) throw ParameterError("gspf_step: empty bank");
  if (static_cast<int>(prop.size()) != bank.size() ||
      static_cast<int>(redraw.size()) != bank.size())
    throw ParameterError("gspf_step: need one prop and one redraw stream per mixand");

  const int dim = bank.dim();
  const int gamma = bank.gamma();
  FilterBank next;
  next.step = bank.step + 1;
  next.mixands.resize(bank.mixands.size());
  std::vector<double> log_weight(bank.mixands.size());

  for (int k = 0; k < bank.size(); ++k) {
    try {
      const Ensemble predicted = propagate_subensemble(model, bank.mixands[k].particles, t_from,
                                                       t_to, step_index, prop[k], opt);
      const std::vector<double> loglik = particle_loglik(predicted, mm, z, t_to);
      const double log_total = logsumexp(loglik);
      if (!std::isfinite(log_total))
        throw DegeneracyError("gspf_step: all particle likelihoods underflowed");

      // Condense the likelihood-weighted cloud to its first two moments.
      Vector omega(gamma);
      for (int u = 0; u < gamma; ++u) omega[u] = std::exp(loglik[static_cast<std::size_t>(u)] - log_total);
      const Vector mean = predicted * omega;
      const Ensemble centered = predicted.colwise() - mean;
      const Matrix cov = centered * omega.asDiagonal() * centered.transpose();
      const Matrix lower = chol_psd(cov, default_jitter(cov)).lower;

      Ensemble redrawn(dim, gamma);
      for (int u = 0; u < gamma; ++u) redrawn.col(u) = mean + lower * redraw[k].normals(dim);
      next.mixands[k].particles = std::move(redrawn);

      // Average likelihood of the mixand scales its weight.
      log_weight[k] =
          std::log(bank.mixands[k].weight) + log_total - std::log(static_cast<double>(gamma));
    } catch (NumericalError& e) {
      rethrow_with_context(e, step_index, k);
    }
  }

  const double den = logsumexp(log_weight);
  if (!std::isfinite(den)) throw DegeneracyError("gspf_step: mixand weights underflowed");
  for (int k = 0; k < bank.size(); ++k) next.mixands[k].weight = std::exp(log_weight[k] - den);
  return next;
}

namespace {

RngStream tagged_stream(std::uint64_t seed, std::string_view prefix, const std::string& suffix) {
  return RngStream(seed, stream_tag(std::string(prefix) + suffix));
}

BankInit single_cloud(const BankInit& init, const char* who) {
  if (init.n_mixands != 1)
    throw ParameterError(std::string(who) + ": expected a single-cloud init (n_mixands == 1)");
  return init;
}

Vector weighted_mean(const WeightedEnsemble& state) {
  Vector out = Vector::Zero(state.particles.rows());
  for (Eigen::Index u = 0; u < state.particles.cols(); ++u)
    out += state.weights[static_cast<std::size_t>(u)] * state.particles.col(u);
  return out;
}

}  // namespace

FilterRunResult run_enkf(const ProcessModel& model, const MeasurementModel& mm,
                         const std::vector<Observation>& observations, const BankInit& init,
                         std::uint64_t seed, std::string_view stream_prefix,
                         const PropagateOptions& opt) {
  const BankInit cloud = single_cloud(init, "run_enkf");
  std::vector<RngStream> init_streams{tagged_stream(seed, stream_prefix, "/init/mixand=0")};
  RngStream prop = tagged_stream(seed, stream_prefix, "/prop/mixand=0");
  RngStream perturb = tagged_stream(seed, stream_prefix, "/perturb");

  FilterBank bank = init_bank(cloud, init_streams);
  Ensemble particles = std::move(bank.mixands[0].particles);
  FilterRunResult out;
  out.estimates.reserve(observations.size());
  double t_prev = cloud.t0;
  for (std::size_t i = 0; i < observations.size(); ++i) {
    try {
      particles = enkf_step(particles, model, mm, observations[i].z, t_prev, observations[i].t,
                            static_cast<int>(i), prop, perturb, opt);
    } catch (NumericalError& e) {
      rethrow_with_context(e, static_cast<int>(i));
    }
    out.estimates.push_back(sample_mean(particles));
    t_prev = observations[i].t;
  }
  return out;
}

namespace {

FilterRunResult run_particle_filter(bool auxiliary, const ProcessModel& model,
                                    const MeasurementModel& mm,
                                    const std::vector<Observation>& observations,
                                    const BankInit& init, std::uint64_t seed,
                                    std::string_view stream_prefix, const PropagateOptions& opt) {
  const BankInit cloud = single_cloud(init, auxiliary ? "run_asir" : "run_sir");
  std::vector<RngStream> init_streams{tagged_stream(seed, stream_prefix, "/init/mixand=0")};
  RngStream prop = tagged_stream(seed, stream_prefix, "/prop/mixand=0");
  RngStream resample = tagged_stream(seed, stream_prefix, "/resample");

  FilterBank bank = init_bank(cloud, init_streams);
  WeightedEnsemble state;
  state.particles = std::move(bank.mixands[0].particles);
  state.weights.assign(static_cast<std::size_t>(state.particles.cols()),
                       1.0 / static_cast<double>(state.particles.cols()));

  FilterRunResult out;
  out.estimates.reserve(observations.size());
  double t_prev = cloud.t0;
  for (std::size_t i = 0; i < observations.size(); ++i) {
    try {
      state = auxiliary ? asir_step(state, model, mm, observations[i].z, t_prev,
                                    observations[i].t, static_cast<int>(i), prop, resample, opt)
                        : sir_step(state, model, mm, observations[i].z, t_prev,
                                   observations[i].t, static_cast<int>(i), prop, resample, opt);
    } catch (NumericalError& e) {
      rethrow_with_context(e, static_cast<int>(i));
    }
    out.estimates.push_back(weighted_mean(state));
    t_prev = observations[i].t;
  }
  return out;
}

}  // namespace

FilterRunResult run_sir(const ProcessModel& model, const MeasurementModel& mm,
                        const std::vector<Observation>& observations, const BankInit& init,
                        std::uint64_t seed, std::string_view stream_prefix,
                        const PropagateOptions& opt) {
  return run_particle_filter(false, model, mm, observations, init, seed, stream_prefix, opt);
}

FilterRunResult run_asir(const ProcessModel& model, const MeasurementModel& mm,
                         const std::vector<Observation>& observations, const BankInit& init,
                         std::uint64_t seed, std::string_view stream_prefix,
                         const PropagateOptions& opt) {
  return run_particle_filter(true, model, mm, observations, init, seed, stream_prefix, opt);
}

FilterRunResult run_gspf(const ProcessModel& model, const MeasurementModel& mm,
                         const std::vector<Observation>& observations, const BankInit& init,
                         std::uint64_t seed, std::string_view stream_prefix,
                         const PropagateOptions& opt) {
  std::vector<RngStream> init_streams;
  std::vector<RngStream> prop_streams;
  std::vector<RngStream> redraw_streams;
  for (int k = 0; k < init.n_mixands; ++k) {
    const std::string suffix = "/mixand=" + std::to_string(k);
    init_streams.push_back(tagged_stream(seed, stream_prefix, "/init" + suffix));
    prop_streams.push_back(tagged_stream(seed, stream_prefix, "/prop" + suffix));
    redraw_streams.push_back(tagged_stream(seed, stream_prefix, "/redraw" + suffix));
  }

  FilterBank bank = init_bank(init, init_streams);
  FilterRunResult out;
  out.estimates.reserve(observations.size());
  double t_prev = init.t0;
  for (std::size_t i = 0; i < observations.size(); ++i) {
    bank = gspf_step(bank, model, mm, observations[i].z, t_prev, observations[i].t,
                     static_cast<int>(i), prop_streams, redraw_streams, opt);
    out.estimates.push_back(bank_estimate(bank));
    t_prev = observations[i].t;
  }
  return out;
}

}  // namespace igsf
