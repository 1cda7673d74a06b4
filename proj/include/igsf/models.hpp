// Process and measurement model types plus sub-ensemble propagation.
//
// Continuous models are Ito SDEs dX = F(X, t) dt + G(t) dB handled through a
// derivative-free local linearization: the drift builder returns the
// coefficient matrix Q(anchor, t) such that Q*x reproduces the drift exactly
// at the anchor, and the step over (t_i, t_{i+1}] uses the exact solution of
// the frozen linear system (matrix exponential transition plus the Ito noise
// integral). Discrete models supply the one-step map directly.
//
// State augmentation turns unknown static parameters into extra coordinates
// with zero drift and a small Brownian pseudo-noise, which is what lets the
// ensemble filters do joint state/parameter estimation.
#pragma once

#include <functional>
#include <variant>

#include "igsf/linalg.hpp"
#include "igsf/rng.hpp"

namespace igsf {

// One particle per column, dimension x ensemble size.
using Ensemble = Eigen::MatrixXd;

struct ContinuousModel {
  int state_dim = 0;
  // Q(anchor, t): state_dim x state_dim drift coefficient at the anchor.
  std::function<Matrix(const Vector& anchor, double t)> drift_coeff;
  // G(t): state_dim x q diffusion.
  std::function<Matrix(double t)> diffusion;
  // f(t): additive forcing; empty function means zero forcing.
  std::function<Vector(double t)> forcing;
  // Number of trailing coordinates with zero drift rows/columns and diffusion
  // independent of the leading block (as produced by augment()). Propagation
  // discretizes the leading block only and handles the tail in closed form;
  // zero disables the split.
  int brownian_tail_dim = 0;
};

struct DiscreteModel {
  int state_dim = 0;
  int noise_dim = 0;
  // x_{i+1} = map(x_i, i, w) with w a vector of standard normals.
  std::function<Vector(const Vector& x, int step, const Vector& noise)> map;
};

using ProcessModel = std::variant<ContinuousModel, DiscreteModel>;

struct MeasurementModel {
  int obs_dim = 0;
  std::function<Vector(const Vector& x, double t)> observe;
  Matrix noise_cov;  // obs_dim x obs_dim, positive definite
};

// Static parameters appended to the state as zero-drift Brownian coordinates.
struct AugmentedSpec {
  int base_dim = 0;
  int param_dim = 0;
  Vector pseudo_noise;  // diagonal diffusion intensity for the parameters
  Vector prior_mean;    // parameter prior, consumed by experiment setup
  Vector prior_std;
};

// Wraps a base model into the (base_dim + param_dim)-dimensional augmented
// model. The base drift builder receives the full augmented anchor so it can
// read parameter values from the tail. param_dim == 0 returns the base model.
ContinuousModel augment(const ContinuousModel& base, const AugmentedSpec& spec);

// Drift coefficient at an anchor, with shape checks.
Matrix psl_linearize(const ContinuousModel& m, const Vector& anchor, double t);

Vector measure(const MeasurementModel& mm, const Vector& x, double t);

enum class AnchorPolicy {
  // One linearization per sub-ensemble, anchored at the sample mean.
  MixandMean,
  // One linearization per particle. Required for joint parameter estimation:
  // with a shared anchor the transition no longer depends on each particle's
  // parameter values, the parameter/state cross covariance stays at its
  // initial zero and parameters never receive updates.
  PerParticle,
};

struct PropagateOptions {
  AnchorPolicy anchor = AnchorPolicy::PerParticle;
};

// Advances every particle over (t_from, t_to]. Continuous models use the
// linearized exact step; the process noise covariance (and its Cholesky
// factor) always comes from the sample-mean anchor, only the transition is
// per-particle under AnchorPolicy::PerParticle. Discrete models apply the map
// with step_index. Each particle consumes its own noise draw from `stream`
// in column order.
Ensemble propagate_subensemble(const ProcessModel& model, const Ensemble& particles,
                               double t_from, double t_to, int step_index, RngStream& stream,
                               const PropagateOptions& opt = {});

// Same transition with the noise term omitted (and no stream consumption).
Ensemble propagate_deterministic(const ProcessModel& model, const Ensemble& particles,
                                 double t_from, double t_to, int step_index,
                                 const PropagateOptions& opt = {});

}  // namespace igsf
