// Benchmark problems and Monte Carlo evaluation: a scalar nonstationary
// growth model with quadratic observations, maneuvering-target tracking from
// bearing/range data, and joint state/parameter identification of multi-story
// shear frames. Each problem contributes a truth/observation generator and
// the process/measurement models consumed by the filters; run_experiment ties
// them together into paired multi-run comparisons with RMSE bookkeeping.
#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "igsf/baselines.hpp"
#include "igsf/filter_bank.hpp"
#include "igsf/models.hpp"

namespace igsf {

// --- Scalar growth model -----------------------------------------------------

struct GrowthModelParams {
  double gamma1 = 0.2;
  double gamma2 = 0.01;
  double theta = 1.2;
  double h = 1.0;            // step size (s)
  double process_var = 10.0;  // variance rate of the additive Brownian term
  double meas_var = 10.0;     // observation noise variance
  int steps = 50;
};

struct GrowthData {
  std::vector<double> truth;       // X_1 .. X_T
  std::vector<Observation> obs;    // quadratic observations at t_1 .. t_T
};

// Truth recursion X_{i+1} = (g1 X_i + g2 X_i^2 + 8 cos(theta i)) h + noise with
// X_0 ~ Uniform[0,1]; observations Z = X^2 + noise. Streams are derived from
// stream_tag(prefix + "/truth-init"), "/truth-process" and "/truth-obs".
GrowthData gen_growth(const GrowthModelParams& p, std::uint64_t seed,
                      std::string_view stream_prefix);

ProcessModel growth_process_model(const GrowthModelParams& p);
MeasurementModel growth_measurement_model(const GrowthModelParams& p);

// --- Bearing/range target tracking -------------------------------------------

struct Maneuver {
  double time = 0.0;  // instant at which the acceleration impulse applies
  double ax = 0.0;
  double ay = 0.0;
};

struct TrackingScenario {
  double dt = 0.1;       // sampling interval (s)
  double horizon = 80.0;  // trajectory end time (s)
  Vector init_state;     // true initial [X, X_v, Y, Y_v]
  std::vector<Maneuver> maneuvers;
  Matrix truth_accel_cov;   // 2x2 random-acceleration covariance of the truth
  Matrix filter_accel_cov;  // 2x2 process noise assumed by the tracking model
  double sensor_x = 0.0;
  double sensor_y = 0.0;
  Matrix meas_cov;  // 2x2, diag(bearing variance, range variance)
};

// Scenario with the benchmark values: start [0.5, 3, 1, 1], velocity-jump
// maneuvers at 20/30/60 s, noise-free truth dynamics, filter acceleration
// covariance diag(8, 8) and measurement covariance diag(0.2, 35).
TrackingScenario default_tracking_scenario();

Matrix tracking_transition(double dt);  // constant-velocity transition
Matrix tracking_input(double dt);       // acceleration-to-state input map

struct TrackingData {
  Ensemble truth;                // 4 x T, one state per column
  std::vector<Observation> obs;  // bearing/range pairs
};

// Truth per the scenario dynamics; maneuvers apply at the step whose start
// time matches the maneuver instant. Observed bearing is wrapped to (-pi, pi]
// and observed range clamped to >= 0. A truth state within 1e-9 of the sensor
// makes the bearing undefined and raises FilterError.
TrackingData gen_tracking(const TrackingScenario& sc, std::uint64_t seed,
                          std::string_view stream_prefix);

ProcessModel tracking_process_model(const TrackingScenario& sc);
MeasurementModel tracking_measurement_model(const TrackingScenario& sc);

// --- Shear frame identification ----------------------------------------------

struct ShearFrameSpec {
  int floors = 5;    // n
  Vector stiffness;  // n true stiffness values
  Vector damping;    // n true damping values
  double force_amp = 30.0;
  double force_freq = 5.0;
  double process_noise = 0.05;       // diagonal diffusion intensity on accelerations
  double meas_noise_fraction = 0.005;  // obs std as a fraction of clean RMS
  double h = 0.01;
  double horizon = 10.0;
  Vector param_prior_mean;  // 2n filter prior for [stiffness, damping]
  Vector param_prior_std;   // 2n
  double param_pseudo_noise_scale = 0.01;  // intensity = scale * |prior mean|
  double state_prior_std = 0.01;
};

// Uniform nominal parameters (stiffness 100, damping 5) with the filter prior
// centered at 1.3x nominal, std 0.2x nominal.
ShearFrameSpec default_frame_spec(int floors);

// Stiffness/damping pattern matrices: tridiagonal, diagonal s_i + s_{i+1}
// (last entry s_n), off-diagonal -s_{i+1}.
std::pair<Matrix, Matrix> build_shear_frame(int n, const Vector& s, const Vector& c);

struct FrameData {
  Ensemble truth;                // 2n x T displacement/velocity states
  std::vector<Observation> obs;  // n-dim noisy displacements
  Vector meas_noise_std;         // per-coordinate std applied to displacements
};

// Observation noise std: meas_noise_fraction times the per-coordinate RMS of
// the deterministic (noise-free) response over the same time grid.
Vector frame_meas_noise_std(const ShearFrameSpec& spec);

// Truth by exact integration of the linear dynamics with the true parameters,
// zero initial state and cosine forcing at every floor.
FrameData gen_frame(const ShearFrameSpec& spec, std::uint64_t seed,
                    std::string_view stream_prefix);

// True-parameter state-space model (dimension 2n), used for truth synthesis.
ContinuousModel frame_state_model(const ShearFrameSpec& spec);

// Augmented filter model (dimension 4n: displacements, velocities, stiffness
// and damping coordinates) with the matching Gaussian prior.
struct FrameFilterSetup {
  ContinuousModel model;
  MeasurementModel meas;
  Vector prior_mean;  // 4n
  Matrix prior_cov;   // 4n x 4n
};
FrameFilterSetup frame_filter_setup(const ShearFrameSpec& spec);

// --- Evaluation --------------------------------------------------------------

// Per-step RMSE across runs for the selected state components:
// out(i, j) = sqrt(mean over runs of squared error of component j at step i).
Matrix rmse_series(const std::vector<std::vector<Vector>>& estimates,
                   const std::vector<std::vector<Vector>>& truths,
                   const std::vector<int>& components);

// Time-averaged RMSE of a single run per component: sqrt of the time mean of
// the squared error.
Vector run_time_avg_rmse(const std::vector<Vector>& estimates,
                         const std::vector<Vector>& truth,
                         const std::vector<int>& components);

// --- Experiments -------------------------------------------------------------

enum class ExperimentKind { Growth, Tracking, Frame5, Frame20 };

struct FilterDefaults {
  int ensemble = 0;    // N
  int n_mixands = 1;   // N_G
  int iterations = 0;  // number of iterated updates
  double alpha1 = 0.0;
  AdpKind schedule = AdpKind::ExpDecay;
};

struct ExperimentSetup {
  ExperimentKind kind = ExperimentKind::Growth;
  std::string name;
  GrowthModelParams growth;
  TrackingScenario tracking;
  ShearFrameSpec frame;
  FilterDefaults defaults;
  BankInit::Spread spread = BankInit::Spread::Stratified;
  double stratify_scale = 1.0;
  int default_runs = 1;
  std::vector<int> report_components;  // state indices carried into CSV output
  // Filter prior; empty means derived from the problem (frame experiments
  // build it from the ShearFrameSpec prior fields).
  Vector prior_mean;
  Matrix prior_cov;
};

// Named benchmark configurations: "growth", "tracking", "frame5", "frame20".
// Unknown names raise ParameterError.
ExperimentSetup make_experiment(std::string_view name);

enum class FilterKind { IgsfBank, IgsfAdp, Igsf, Zeroth, Enkf, Sir, Asir, Gspf };

std::string_view filter_kind_name(FilterKind kind);
FilterKind parse_filter_kind(std::string_view name);  // ParameterError on unknown
// Stream-tag family: the iterated-gain variants share one family so that
// degenerate configurations consume identical random draws.
std::string_view filter_stream_kind(FilterKind kind);

struct FilterSpec {
  FilterKind kind = FilterKind::IgsfBank;
  std::string label;  // output directory name, defaults to the kind name
  int ensemble = 0;
  int n_mixands = 1;
  int iterations = 0;
  double alpha1 = 0.0;
  AdpKind schedule = AdpKind::ExpDecay;
  bool strict_epsilon_zero = false;
};

// Fills a FilterSpec with the experiment defaults for the given kind.
FilterSpec resolve_filter(FilterKind kind, const ExperimentSetup& setup);

struct FilterArtifacts {
  FilterSpec spec;
  std::vector<std::vector<Vector>> estimates;  // [run][step], full state
  Matrix rmse;                                 // steps x report_components
};

struct RunArtifacts {
  ExperimentSetup setup;
  int runs = 0;
  std::uint64_t seed = 0;
  std::vector<double> times;                          // t_1 .. t_T
  std::vector<std::vector<Vector>> truths;            // [run][step], full state
  std::vector<std::vector<Observation>> observations;  // [run]
  std::vector<FilterArtifacts> filters;
};

// Runs M independent repetitions: per run, fresh truth and observations from
// run-scoped streams ("exp=<name>/run=<m>/..."), then every filter on the
// identical observation sequence. Parallel execution over runs reproduces the
// sequential result bitwise.
RunArtifacts run_experiment(const ExperimentSetup& setup,
                            const std::vector<FilterSpec>& filters, int runs,
                            std::uint64_t seed, int threads = 1);

}  // namespace igsf
