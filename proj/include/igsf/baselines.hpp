// Reference filters the bank is benchmarked against: a stochastic
// (perturbed-observation) ensemble Kalman filter, a bootstrap particle filter
// with systematic resampling, an auxiliary particle filter, and a
// Gaussian-sum particle filter.
#pragma once

#include <span>
#include <vector>

#include "igsf/filter_bank.hpp"
#include "igsf/models.hpp"

namespace igsf {

struct WeightedEnsemble {
  Ensemble particles;
  std::vector<double> weights;  // normalized
};

double effective_sample_size(const std::vector<double>& weights);

// Systematic resampling: N equally spaced positions with one shared uniform
// offset. Returns parent indices in nondecreasing order.
std::vector<int> systematic_resample(const std::vector<double>& weights, int count,
                                     RngStream& stream);

// Perturbed-observation EnKF step. Propagation draws come from `prop`,
// observation perturbations from `perturb`, so the update stage can be
// compared against the bank's zeroth path without disturbing its draws.
Ensemble enkf_step(const Ensemble& particles, const ProcessModel& model,
                   const MeasurementModel& mm, const Vector& z, double t_from, double t_to,
                   int step_index, RngStream& prop, RngStream& perturb,
                   const PropagateOptions& opt = {});

// Bootstrap filter: blind proposal, likelihood reweighting, systematic
// resampling when the effective sample size drops below count/2.
WeightedEnsemble sir_step(const WeightedEnsemble& state, const ProcessModel& model,
                          const MeasurementModel& mm, const Vector& z, double t_from, double t_to,
                          int step_index, RngStream& prop, RngStream& resample,
                          const PropagateOptions& opt = {});

// Auxiliary (two-stage) particle filter. Stage one scores each particle by
// the likelihood of its noise-free propagation and resamples; stage two
// propagates the selected parents with noise and compensates the weights by
// the stage-one likelihood of the parent.
WeightedEnsemble asir_step(const WeightedEnsemble& state, const ProcessModel& model,
                           const MeasurementModel& mm, const Vector& z, double t_from,
                           double t_to, int step_index, RngStream& prop, RngStream& resample,
                           const PropagateOptions& opt = {});

// Gaussian-sum particle filter step. Each mixand propagates its particles,
// condenses the likelihood-weighted cloud to a Gaussian, redraws from it, and
// scales its weight by the average likelihood.
FilterBank gspf_step(const FilterBank& bank, const ProcessModel& model,
                     const MeasurementModel& mm, const Vector& z, double t_from, double t_to,
                     int step_index, std::span<RngStream> prop, std::span<RngStream> redraw,
                     const PropagateOptions& opt = {});

// Drivers mirroring run_filter: stream tags live under the given prefix
// ("/prop/mixand=<k>", "/perturb", "/resample", "/redraw/mixand=<k>", with
// the whole ensemble treated as mixand 0 for the single-cloud filters).
FilterRunResult run_enkf(const ProcessModel& model, const MeasurementModel& mm,
                         const std::vector<Observation>& observations, const BankInit& init,
                         std::uint64_t seed, std::string_view stream_prefix,
                         const PropagateOptions& opt = {});

FilterRunResult run_sir(const ProcessModel& model, const MeasurementModel& mm,
                        const std::vector<Observation>& observations, const BankInit& init,
                        std::uint64_t seed, std::string_view stream_prefix,
                        const PropagateOptions& opt = {});

FilterRunResult run_asir(const ProcessModel& model, const MeasurementModel& mm,
                         const std::vector<Observation>& observations, const BankInit& init,
                         std::uint64_t seed, std::string_view stream_prefix,
                         const PropagateOptions& opt = {});

FilterRunResult run_gspf(const ProcessModel& model, const MeasurementModel& mm,
                         const std::vector<Observation>& observations, const BankInit& init,
                         std::uint64_t seed, std::string_view stream_prefix,
                         const PropagateOptions& opt = {});

}  // namespace igsf
