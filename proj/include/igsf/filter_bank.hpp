// Gaussian-sum ensemble filter with annealed iterated gain updates.
//
// The bank holds N_G mixands, each a sub-ensemble of gamma particles with a
// scalar weight. One assimilation step per mixand:
//
//   1. propagate the sub-ensemble through the process model;
//   2. zeroth update: Kalman-style gain from the prediction anomalies
//      (square-root flavor, no observation perturbation);
//   3. Gamma annealed iterations: anomalies of the current iterate are taken
//      about the predicted particles and about the observation itself, the
//      gain is rebuilt from them, and the update is re-applied from the
//      predicted particles with an amplification (1 + alpha_l);
//   4. mixand weights are scaled by the likelihood of the observation under
//      each mixand's predicted-observation statistics and normalized.
//
// The bank estimate is the weight-averaged mixand mean. With one mixand the
// bank degenerates to a single iterated-gain filter; with zero iterations it
// degenerates to the plain zeroth-update filter.
#pragma once

#include <span>
#include <string>
#include <vector>

#include "igsf/models.hpp"

namespace igsf {

struct Mixand {
  Ensemble particles;  // dim x gamma, gamma >= 2
  double weight = 0.0;
  // Set when the divergence guard retired this mixand (see IgsfOptions). A
  // frozen mixand keeps its last finite particles, holds weight zero and is
  // skipped by propagation and updates.
  bool frozen = false;
};

struct FilterBank {
  std::vector<Mixand> mixands;
  int step = 0;

  int size() const { return static_cast<int>(mixands.size()); }
  int gamma() const { return mixands.empty() ? 0 : static_cast<int>(mixands[0].particles.cols()); }
  int dim() const { return mixands.empty() ? 0 : static_cast<int>(mixands[0].particles.rows()); }
};

enum class AdpKind {
  // alpha_{l+1} = alpha_l / exp(l), i.e. alpha_l = alpha_1 * exp(-l(l-1)/2).
  ExpDecay,
  // alpha_l = alpha_1 for l < Gamma, and exactly 0 at the final iteration.
  ConstantThenZero,
};

struct AdpSchedule {
  double alpha1 = 0.0;
  AdpKind kind = AdpKind::ExpDecay;
  int iterations = 0;  // Gamma >= 0

  double value(int l) const;          // l in [1, iterations]
  std::vector<double> values() const;
};

double adp_value(const AdpSchedule& schedule, int l);

// --- Per-ensemble primitives -------------------------------------------------

Vector sample_mean(const Ensemble& particles);

// Columns (x_u - mean) / sqrt(gamma - 1); gamma >= 2.
Matrix prediction_anomaly(const Ensemble& particles, const Vector& mean);

// Observation map applied to every particle, one column each.
Matrix map_observations(const Ensemble& particles, const MeasurementModel& mm, double t);

// Anomalies of the mapped particles about their own sample mean.
Matrix measurement_anomaly_pred(const Ensemble& particles, const MeasurementModel& mm, double t);

// K = S Sz^T (Sz Sz^T + noise_cov)^{-1}.
Matrix gain_zeroth(const Matrix& s, const Matrix& sz, const Matrix& noise_cov);

// x_u <- x_u + K (z - H(x_u)); no observation perturbation.
Ensemble update_zeroth(const Ensemble& predicted, const Vector& z, const Matrix& gain,
                       const MeasurementModel& mm, double t);

// Iteration anomalies: the state block is anchored at the predicted
// particles, the observation block at the observation itself.
struct IterAnomalies {
  Matrix state;  // (x_u - predicted_u) / sqrt(gamma - 1)
  Matrix obs;    // (H(x_u) - z) / sqrt(gamma - 1)
};
IterAnomalies anomalies_iter(const Ensemble& current, const Ensemble& predicted, const Vector& z,
                             const MeasurementModel& mm, double t);

// K = S Sz^T (Sz Sz^T + regularizer)^{-1}. The scalar overload uses
// regularizer = epsilon * I; a zero observation anomaly yields a zero gain.
Matrix gain_iter(const Matrix& s_hat, const Matrix& sz_hat, const Matrix& regularizer);
Matrix gain_iter(const Matrix& s_hat, const Matrix& sz_hat, double epsilon);

// x_u <- predicted_u + (1 + alpha) K (z - H(previous_u)). The additive term
// always starts from the predicted particle; the previous iterate enters only
// through the innovation.
Ensemble update_iter(const Ensemble& predicted, const Ensemble& previous, const Vector& z,
                     const Matrix& gain, double alpha, const MeasurementModel& mm, double t);

// --- Mixand update and weights ----------------------------------------------

struct IgsfOptions {
  // Ridge added to Sz Sz^T in the iterated gain: epsilon_scale * trace / d.
  // strict_epsilon_zero drops the ridge entirely (the written form), at the
  // cost of a hard failure when Sz Sz^T is singular.
  double epsilon_scale = 1e-8;
  bool strict_epsilon_zero = false;
  // Replace the per-particle predicted anchor in the iterated update with the
  // sub-ensemble predicted mean. Experimental variant, off by default.
  bool average_prediction_term = false;
  AnchorPolicy anchor = AnchorPolicy::PerParticle;
  double weight_floor = 1e-12;  // below this a warning is logged
  // A mixand whose particles go non-finite, exceed this magnitude, or defeat
  // the gain factorization is frozen: it keeps its pre-step particles, its
  // weight drops to zero and it takes no further part in the run. Unstable
  // process models can push a low-weight mixand into overflow territory;
  // without the guard that one dead component would abort the whole bank.
  // Non-positive disables the guard and lets such failures propagate.
  double divergence_guard = 1e40;
};

// Predicted-observation statistics a mixand contributes to the weight update.
struct MixandObsStats {
  Vector predicted_obs_mean;  // <H(x_u)> over the final iterate
  Matrix obs_anomaly;         // final-iterate observation anomaly
};

struct MixandUpdateResult {
  Ensemble particles;
  MixandObsStats stats;
};

// Zeroth update plus `schedule.iterations` annealed iterations for one
// sub-ensemble of predicted particles.
MixandUpdateResult igsf_mixand_update(const Ensemble& predicted, const Vector& z,
                                      const MeasurementModel& mm, double t,
                                      const AdpSchedule& schedule, const IgsfOptions& opt);

// Multiplies each weight by N(z; stats) and applies the double normalization
// in log space. All-degenerate likelihoods reset the weights to uniform with
// a warning instead of failing the run.
std::vector<double> weight_update(const std::vector<double>& weights, const Vector& z,
                                  const std::vector<MixandObsStats>& stats,
                                  const Matrix& noise_cov);

// Weighted average of mixand sample means.
Vector bank_estimate(const FilterBank& bank);

// --- Stepping and driving ----------------------------------------------------

// One full assimilation step. `streams` supplies one propagation stream per
// mixand so execution order cannot affect the draws.
FilterBank igsf_bank_step(const FilterBank& bank, const ProcessModel& model,
                          const MeasurementModel& mm, const Vector& z, double t_from, double t_to,
                          int step_index, const AdpSchedule& schedule, const IgsfOptions& opt,
                          std::span<RngStream> streams);

// Zeroth-update-only variant: propagation, zeroth gain/update and the weight
// update, with the iteration stage absent.
FilterBank zeroth_bank_step(const FilterBank& bank, const ProcessModel& model,
                            const MeasurementModel& mm, const Vector& z, double t_from,
                            double t_to, int step_index, const IgsfOptions& opt,
                            std::span<RngStream> streams);

struct Observation {
  double t = 0.0;
  Vector z;
};

struct BankInit {
  Vector prior_mean;
  Matrix prior_cov;
  int n_mixands = 1;
  int particles_per_mixand = 0;
  // Shared: every mixand draws about the prior mean. Stratified: mixand means
  // are offset by +/- stratify_scale standard deviations along coordinate
  // axes in turn.
  enum class Spread { Shared, Stratified } spread = Spread::Shared;
  double stratify_scale = 1.0;
  double t0 = 0.0;
};

// Draws the initial bank with uniform weights, one init stream per mixand.
FilterBank init_bank(const BankInit& init, std::span<RngStream> streams);

struct BankDiagnostics {
  std::vector<double> weights;
  std::vector<Vector> mixand_means;
};

struct FilterRunResult {
  std::vector<Vector> estimates;          // one per observation
  std::vector<BankDiagnostics> diagnostics;  // filled when requested
};

// Stream naming shared by every driver: streams are derived from
// stream_tag(prefix + "/init/mixand=<k>") and stream_tag(prefix +
// "/prop/mixand=<k>"), seeded with `seed`. Two runs with equal seed and
// prefix are bitwise identical.
FilterRunResult run_filter(const ProcessModel& model, const MeasurementModel& mm,
                           const std::vector<Observation>& observations, const BankInit& init,
                           const AdpSchedule& schedule, const IgsfOptions& opt,
                           std::uint64_t seed, std::string_view stream_prefix,
                           bool collect_diagnostics = false);

// Single-filter driver: one sub-ensemble, no weight bookkeeping. Matches
// run_filter with n_mixands == 1 bit for bit on the same seed and prefix.
FilterRunResult run_igsf_single(const ProcessModel& model, const MeasurementModel& mm,
                                const std::vector<Observation>& observations,
                                const BankInit& init, const AdpSchedule& schedule,
                                const IgsfOptions& opt, std::uint64_t seed,
                                std::string_view stream_prefix);

// Bank driver without the iteration stage (schedule ignored entirely).
FilterRunResult run_zeroth_filter(const ProcessModel& model, const MeasurementModel& mm,
                                  const std::vector<Observation>& observations,
                                  const BankInit& init, const IgsfOptions& opt,
                                  std::uint64_t seed, std::string_view stream_prefix);

}  // namespace igsf
