#include "igsf/experiments.hpp"

#include <atomic>
#include <cmath>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>

#include "igsf/errors.hpp"

namespace igsf {
namespace {

constexpr double kPi = 3.14159265358979323846;

double wrap_angle(double a) {  // into (-pi, pi]
  while (a <= -kPi) a += 2.0 * kPi;
  while (a > kPi) a -= 2.0 * kPi;
  return a;
}

RngStream tagged(std::uint64_t seed, std::string_view prefix, const char* suffix) {
  return RngStream(seed, stream_tag(std::string(prefix) + suffix));
}

}  // namespace

// --- Scalar growth model -----------------------------------------------------

namespace {

double growth_drift(const GrowthModelParams& p, double x, int step) {
  return (p.gamma1 * x + p.gamma2 * x * x + 8.0 * std::cos(p.theta * step)) * p.h;
}

void check_growth(const GrowthModelParams& p) {
  if (!(p.h > 0.0)) throw ParameterError("growth: step size h must be positive");
  if (p.process_var < 0.0 || p.meas_var < 0.0)
    throw ParameterError("growth: noise variances must be nonnegative");
  if (p.steps < 1) throw ParameterError("growth: need at least one step");
}

}  // namespace

GrowthData gen_growth(const GrowthModelParams& p, std::uint64_t seed,
                      std::string_view stream_prefix) {
  check_growth(p);
  RngStream init = tagged(seed, stream_prefix, "/truth-init");
  RngStream process = tagged(seed, stream_prefix, "/truth-process");
  RngStream obs_noise = tagged(seed, stream_prefix, "/truth-obs");
  const double proc_std = std::sqrt(p.process_var * p.h);
  const double meas_std = std::sqrt(p.meas_var);

  GrowthData out;
  out.truth.reserve(static_cast<std::size_t>(p.steps));
  out.obs.reserve(static_cast<std::size_t>(p.steps));
  double x = init.uniform();
  for (int i = 0; i < p.steps; ++i) {
    x = growth_drift(p, x, i) + proc_std * process.normal();
    const double z = x * x + meas_std * obs_noise.normal();
    out.truth.push_back(x);
    out.obs.push_back({static_cast<double>(i + 1) * p.h, Vector::Constant(1, z)});
  }
  return out;
}

ProcessModel growth_process_model(const GrowthModelParams& p) {
  check_growth(p);
  const double proc_std = std::sqrt(p.process_var * p.h);
  DiscreteModel m;
  m.state_dim = 1;
  m.noise_dim = 1;
  m.map = [p, proc_std](const Vector& x, int step, const Vector& noise) {
    return Vector::Constant(1, growth_drift(p, x[0], step) + proc_std * noise[0]);
  };
  return m;
}

MeasurementModel growth_measurement_model(const GrowthModelParams& p) {
  check_growth(p);
  MeasurementModel mm;
  mm.obs_dim = 1;
  mm.observe = [](const Vector& x, double) { return Vector::Constant(1, x[0] * x[0]); };
  mm.noise_cov = Matrix::Constant(1, 1, p.meas_var);
  return mm;
}

// --- Bearing/range target tracking -------------------------------------------

Matrix tracking_transition(double dt) {
  if (!(dt > 0.0)) throw ParameterError("tracking_transition: dt must be positive");
  Matrix u = Matrix::Identity(4, 4);
  u(0, 1) = dt;
  u(2, 3) = dt;
  return u;
}

Matrix tracking_input(double dt) {
  if (!(dt > 0.0)) throw ParameterError("tracking_input: dt must be positive");
  Matrix l = Matrix::Zero(4, 2);
  l(0, 0) = 0.5 * dt * dt;
  l(1, 0) = dt;
  l(2, 1) = 0.5 * dt * dt;
  l(3, 1) = dt;
  return l;
}

TrackingScenario default_tracking_scenario() {
  TrackingScenario sc;
  sc.dt = 0.1;
  sc.horizon = 80.0;
  sc.init_state = (Vector(4) << 0.5, 3.0, 1.0, 1.0).finished();
  sc.maneuvers = {{20.0, -40.0, 40.0}, {30.0, 25.0, -25.0}, {60.0, 25.0, -25.0}};
  sc.truth_accel_cov = Matrix::Zero(2, 2);
  sc.filter_accel_cov = (Matrix(2, 2) << 8.0, 0.0, 0.0, 8.0).finished();
  sc.sensor_x = 0.0;
  sc.sensor_y = 0.0;
  sc.meas_cov = (Matrix(2, 2) << 0.2, 0.0, 0.0, 35.0).finished();
  return sc;
}

namespace {

void check_tracking(const TrackingScenario& sc) {
  if (!(sc.dt > 0.0)) throw ParameterError("tracking: dt must be positive");
  if (!(sc.horizon > 0.0)) throw ParameterError("tracking: horizon must be positive");
  if (sc.init_state.size() != 4) throw DimensionError("tracking: init_state must have size 4");
  if (sc.truth_accel_cov.rows() != 2 || sc.truth_accel_cov.cols() != 2 ||
      sc.filter_accel_cov.rows() != 2 || sc.filter_accel_cov.cols() != 2)
    throw DimensionError("tracking: acceleration covariances must be 2x2");
  if (sc.meas_cov.rows() != 2 || sc.meas_cov.cols() != 2)
    throw DimensionError("tracking: measurement covariance must be 2x2");
  for (const Maneuver& m : sc.maneuvers)
    if (m.time < 0.0 || m.time > sc.horizon)
      throw ParameterError("tracking: maneuver time outside [0, horizon]");
}

int tracking_steps(const TrackingScenario& sc) {
  return static_cast<int>(std::llround(sc.horizon / sc.dt));
}

Vector sensor_sight(const TrackingScenario& sc, double x, double y, const char* who) {
  const double rx = x - sc.sensor_x;
  const double ry = y - sc.sensor_y;
  const double range = std::hypot(rx, ry);
  if (range < 1e-9)
    throw FilterError(std::string(who) + ": target coincides with the sensor, bearing undefined");
  return (Vector(2) << std::atan2(ry, rx), range).finished();
}

}  // namespace

TrackingData gen_tracking(const TrackingScenario& sc, std::uint64_t seed,
                          std::string_view stream_prefix) {
  check_tracking(sc);
  RngStream process = tagged(seed, stream_prefix, "/truth-process");
  RngStream obs_noise = tagged(seed, stream_prefix, "/truth-obs");

  const int steps = tracking_steps(sc);
  const Matrix u = tracking_transition(sc.dt);
  const Matrix l = tracking_input(sc.dt);
  const bool noisy_truth = !sc.truth_accel_cov.isZero(0.0);
  const Matrix accel_chol =
      noisy_truth ? chol_psd(sc.truth_accel_cov, default_jitter(sc.truth_accel_cov)).lower
                  : Matrix::Zero(2, 2);
  const Matrix meas_chol = chol_psd(sc.meas_cov, default_jitter(sc.meas_cov)).lower;

  TrackingData out;
  out.truth.resize(4, steps);
  out.obs.reserve(static_cast<std::size_t>(steps));
  Vector state = sc.init_state;
  for (int i = 0; i < steps; ++i) {
    const double t_i = static_cast<double>(i) * sc.dt;
    Vector accel = Vector::Zero(2);
    for (const Maneuver& m : sc.maneuvers)
      if (std::abs(m.time - t_i) < 0.5 * sc.dt) {
        accel[0] += m.ax;
        accel[1] += m.ay;
      }
    if (noisy_truth) accel += accel_chol * process.normals(2);
    state = u * state + l * accel;

    const Vector sight = sensor_sight(sc, state[0], state[2], "gen_tracking");
    const Vector noise = meas_chol * obs_noise.normals(2);
    Vector z(2);
    z[0] = wrap_angle(sight[0] + noise[0]);
    z[1] = std::max(0.0, sight[1] + noise[1]);
    out.truth.col(i) = state;
    out.obs.push_back({static_cast<double>(i + 1) * sc.dt, z});
  }
  return out;
}

ProcessModel tracking_process_model(const TrackingScenario& sc) {
  check_tracking(sc);
  const Matrix u = tracking_transition(sc.dt);
  const Matrix l = tracking_input(sc.dt);
  const Matrix accel_chol =
      chol_psd(sc.filter_accel_cov, default_jitter(sc.filter_accel_cov)).lower;
  DiscreteModel m;
  m.state_dim = 4;
  m.noise_dim = 2;
  m.map = [u, l, accel_chol](const Vector& x, int, const Vector& noise) -> Vector {
    return u * x + l * (accel_chol * noise);
  };
  return m;
}

MeasurementModel tracking_measurement_model(const TrackingScenario& sc) {
  check_tracking(sc);
  const TrackingScenario local = sc;
  MeasurementModel mm;
  mm.obs_dim = 2;
  // Plain atan2 (no unwrapping): the innovation is a direct difference, which
  // is adequate while the geometry keeps bearings away from the branch cut.
  mm.observe = [local](const Vector& x, double) -> Vector {
    const double rx = x[0] - local.sensor_x;
    const double ry = x[2] - local.sensor_y;
    return (Vector(2) << std::atan2(ry, rx), std::hypot(rx, ry)).finished();
  };
  mm.noise_cov = sc.meas_cov;
  return mm;
}

// --- Shear frame identification ----------------------------------------------

ShearFrameSpec default_frame_spec(int floors) {
  if (floors < 1) throw ParameterError("default_frame_spec: need at least one floor");
  ShearFrameSpec spec;
  spec.floors = floors;
  spec.stiffness = Vector::Constant(floors, 100.0);
  spec.damping = Vector::Constant(floors, 5.0);
  Vector nominal(2 * floors);
  nominal << spec.stiffness, spec.damping;
  spec.param_prior_mean = 1.3 * nominal;
  spec.param_prior_std = 0.2 * nominal;
  return spec;
}

std::pair<Matrix, Matrix> build_shear_frame(int n, const Vector& s, const Vector& c) {
  if (n < 1) throw ParameterError("build_shear_frame: need at least one floor");
  if (s.size() != n || c.size() != n)
    throw ParameterError("build_shear_frame: parameter vectors must have length n");
  auto pattern = [n](const Vector& v) {
    Matrix m = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = (i + 1 < n) ? v[i] + v[i + 1] : v[i];
    for (int i = 0; i + 1 < n; ++i) {
      m(i, i + 1) = -v[i + 1];
      m(i + 1, i) = -v[i + 1];
    }
    return m;
  };
  return {pattern(s), pattern(c)};
}

namespace {

void check_frame(const ShearFrameSpec& spec) {
  if (spec.floors < 1) throw ParameterError("frame: need at least one floor");
  if (spec.stiffness.size() != spec.floors || spec.damping.size() != spec.floors)
    throw DimensionError("frame: stiffness/damping vectors must have length n");
  if (spec.param_prior_mean.size() != 2 * spec.floors ||
      spec.param_prior_std.size() != 2 * spec.floors)
    throw DimensionError("frame: parameter prior vectors must have length 2n");
  if (!(spec.h > 0.0) || !(spec.horizon > 0.0))
    throw ParameterError("frame: time step and horizon must be positive");
  if (spec.meas_noise_fraction < 0.0 || spec.process_noise < 0.0)
    throw ParameterError("frame: noise levels must be nonnegative");
}

int frame_steps(const ShearFrameSpec& spec) {
  return static_cast<int>(std::llround(spec.horizon / spec.h));
}

// First-order drift for displacement/velocity coordinates given parameters.
Matrix frame_drift_matrix(int n, const Vector& s, const Vector& c) {
  const auto [stiff, damp] = build_shear_frame(n, s, c);
  Matrix a = Matrix::Zero(2 * n, 2 * n);
  a.topRightCorner(n, n) = Matrix::Identity(n, n);
  a.bottomLeftCorner(n, n) = -stiff;
  a.bottomRightCorner(n, n) = -damp;
  return a;
}

std::function<Matrix(double)> frame_diffusion(int n, double intensity) {
  Matrix g = Matrix::Zero(2 * n, n);
  g.bottomRows(n) = intensity * Matrix::Identity(n, n);
  return [g](double) { return g; };
}

std::function<Vector(double)> frame_forcing(int n, double amp, double freq) {
  return [n, amp, freq](double t) {
    Vector f = Vector::Zero(2 * n);
    f.tail(n) = Vector::Constant(n, amp * std::cos(freq * t));
    return f;
  };
}

}  // namespace

ContinuousModel frame_state_model(const ShearFrameSpec& spec) {
  check_frame(spec);
  const int n = spec.floors;
  const Matrix a = frame_drift_matrix(n, spec.stiffness, spec.damping);
  ContinuousModel m;
  m.state_dim = 2 * n;
  m.drift_coeff = [a](const Vector&, double) { return a; };
  m.diffusion = frame_diffusion(n, spec.process_noise);
  m.forcing = frame_forcing(n, spec.force_amp, spec.force_freq);
  return m;
}

Vector frame_meas_noise_std(const ShearFrameSpec& spec) {
  check_frame(spec);
  const int n = spec.floors;
  const ContinuousModel model = frame_state_model(spec);
  const int steps = frame_steps(spec);
  Ensemble x = Ensemble::Zero(2 * n, 1);
  Vector sumsq = Vector::Zero(n);
  for (int i = 0; i < steps; ++i) {
    const double t_i = static_cast<double>(i) * spec.h;
    x = propagate_deterministic(model, x, t_i, t_i + spec.h, i);
    sumsq += x.col(0).head(n).cwiseAbs2();
  }
  return spec.meas_noise_fraction * (sumsq / static_cast<double>(steps)).cwiseSqrt();
}

FrameData gen_frame(const ShearFrameSpec& spec, std::uint64_t seed,
                    std::string_view stream_prefix) {
  check_frame(spec);
  const int n = spec.floors;
  const ContinuousModel model = frame_state_model(spec);
  const Vector noise_std = frame_meas_noise_std(spec);
  RngStream process = tagged(seed, stream_prefix, "/truth-process");
  RngStream obs_noise = tagged(seed, stream_prefix, "/truth-obs");

  const int steps = frame_steps(spec);
  FrameData out;
  out.meas_noise_std = noise_std;
  out.truth.resize(2 * n, steps);
  out.obs.reserve(static_cast<std::size_t>(steps));
  Ensemble x = Ensemble::Zero(2 * n, 1);
  for (int i = 0; i < steps; ++i) {
    const double t_i = static_cast<double>(i) * spec.h;
    x = propagate_subensemble(model, x, t_i, t_i + spec.h, i, process);
    const Vector z = x.col(0).head(n) + noise_std.cwiseProduct(obs_noise.normals(n));
    out.truth.col(i) = x.col(0);
    out.obs.push_back({t_i + spec.h, z});
  }
  return out;
}

FrameFilterSetup frame_filter_setup(const ShearFrameSpec& spec) {
  check_frame(spec);
  const int n = spec.floors;

  ContinuousModel base;
  base.state_dim = 2 * n;
  // The anchor is the full augmented state: stiffness values sit in
  // [2n, 3n) and damping values in [3n, 4n).
  base.drift_coeff = [n](const Vector& anchor, double) {
    return frame_drift_matrix(n, anchor.segment(2 * n, n), anchor.segment(3 * n, n));
  };
  base.diffusion = frame_diffusion(n, spec.process_noise);
  base.forcing = frame_forcing(n, spec.force_amp, spec.force_freq);

  AugmentedSpec aug;
  aug.base_dim = 2 * n;
  aug.param_dim = 2 * n;
  aug.pseudo_noise = spec.param_pseudo_noise_scale * spec.param_prior_mean.cwiseAbs();
  aug.prior_mean = spec.param_prior_mean;
  aug.prior_std = spec.param_prior_std;

  FrameFilterSetup out;
  out.model = augment(base, aug);

  const Vector noise_std = frame_meas_noise_std(spec);
  out.meas.obs_dim = n;
  out.meas.observe = [n](const Vector& x, double) -> Vector { return x.head(n); };
  out.meas.noise_cov = noise_std.cwiseAbs2().asDiagonal();

  out.prior_mean = Vector::Zero(4 * n);
  out.prior_mean.tail(2 * n) = spec.param_prior_mean;
  Vector prior_var(4 * n);
  prior_var.head(2 * n) = Vector::Constant(2 * n, spec.state_prior_std * spec.state_prior_std);
  prior_var.tail(2 * n) = spec.param_prior_std.cwiseAbs2();
  out.prior_cov = prior_var.asDiagonal();
  return out;
}

// --- Evaluation --------------------------------------------------------------

namespace {

void check_series(const std::vector<std::vector<Vector>>& estimates,
                  const std::vector<std::vector<Vector>>& truths,
                  const std::vector<int>& components, const char* who) {
  if (estimates.empty()) throw ParameterError(std::string(who) + ": no runs");
  if (truths.size() != estimates.size())
    throw DimensionError(std::string(who) + ": estimate/truth run counts differ");
  if (components.empty()) throw ParameterError(std::string(who) + ": empty component set");
  const std::size_t steps = estimates[0].size();
  if (steps == 0) throw ParameterError(std::string(who) + ": empty series");
  for (std::size_t m = 0; m < estimates.size(); ++m)
    if (estimates[m].size() != steps || truths[m].size() != steps)
      throw DimensionError(std::string(who) + ": series lengths differ across runs");
}

void check_components(const Vector& v, const std::vector<int>& components, const char* who) {
  for (const int c : components)
    if (c < 0 || c >= v.size())
      throw DimensionError(std::string(who) + ": component index out of range");
}

}  // namespace

Matrix rmse_series(const std::vector<std::vector<Vector>>& estimates,
                   const std::vector<std::vector<Vector>>& truths,
                   const std::vector<int>& components) {
  check_series(estimates, truths, components, "rmse_series");
  const std::size_t runs = estimates.size();
  const std::size_t steps = estimates[0].size();
  check_components(estimates[0][0], components, "rmse_series");
  check_components(truths[0][0], components, "rmse_series");

  Matrix out(static_cast<Eigen::Index>(steps), static_cast<Eigen::Index>(components.size()));
  for (std::size_t i = 0; i < steps; ++i)
    for (std::size_t j = 0; j < components.size(); ++j) {
      const int c = components[j];
      double acc = 0.0;
      for (std::size_t m = 0; m < runs; ++m) {
        const double e = estimates[m][i][c] - truths[m][i][c];
        acc += e * e;
      }
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          std::sqrt(acc / static_cast<double>(runs));
    }
  return out;
}

Vector run_time_avg_rmse(const std::vector<Vector>& estimates, const std::vector<Vector>& truth,
                         const std::vector<int>& components) {
  if (estimates.empty() || estimates.size() != truth.size())
    throw DimensionError("run_time_avg_rmse: series lengths differ");
  if (components.empty()) throw ParameterError("run_time_avg_rmse: empty component set");
  check_components(estimates[0], components, "run_time_avg_rmse");
  check_components(truth[0], components, "run_time_avg_rmse");

  Vector out = Vector::Zero(static_cast<Eigen::Index>(components.size()));
  for (std::size_t i = 0; i < estimates.size(); ++i)
    for (std::size_t j = 0; j < components.size(); ++j) {
      const double e = estimates[i][components[j]] - truth[i][components[j]];
      out[static_cast<Eigen::Index>(j)] += e * e;
    }
  return (out / static_cast<double>(estimates.size())).cwiseSqrt();
}

// --- Experiments -------------------------------------------------------------

ExperimentSetup make_experiment(std::string_view name) {
  ExperimentSetup setup;
  setup.name = std::string(name);
  if (name == "growth") {
    setup.kind = ExperimentKind::Growth;
    setup.growth = GrowthModelParams{};
    setup.defaults = {1000, 10, 5, 1.0, AdpKind::ExpDecay};
    setup.default_runs = 100;
    setup.report_components = {0};
    setup.prior_mean = Vector::Constant(1, 0.5);
    setup.prior_cov = Matrix::Constant(1, 1, 2.0);
  } else if (name == "tracking") {
    setup.kind = ExperimentKind::Tracking;
    setup.tracking = default_tracking_scenario();
    setup.defaults = {200, 5, 10, 10.0, AdpKind::ExpDecay};
    setup.default_runs = 50;
    setup.report_components = {0, 2};
    setup.prior_mean = (Vector(4) << 0.0, 40.0, 0.2, 0.075).finished();
    setup.prior_cov = 100.0 * Matrix::Identity(4, 4);
  } else if (name == "frame5" || name == "frame20") {
    const int n = (name == "frame5") ? 5 : 20;
    setup.kind = (n == 5) ? ExperimentKind::Frame5 : ExperimentKind::Frame20;
    setup.frame = default_frame_spec(n);
    if (n == 20) {
      // Two top floors carry a small stiffness reduction; the filter prior
      // stays at the nominal (undamaged) values.
      setup.frame.stiffness[18] = 98.0;
      setup.frame.stiffness[19] = 98.0;
      setup.defaults = {400, 10, 8, 3.0, AdpKind::ConstantThenZero};
    } else {
      setup.defaults = {400, 10, 10, 2.0, AdpKind::ConstantThenZero};
    }
    setup.default_runs = 10;
    setup.report_components.resize(static_cast<std::size_t>(2 * n));
    for (int j = 0; j < 2 * n; ++j) setup.report_components[static_cast<std::size_t>(j)] = 2 * n + j;
  } else {
    throw ParameterError("make_experiment: unknown experiment \"" + std::string(name) + "\"");
  }
  return setup;
}

std::string_view filter_kind_name(FilterKind kind) {
  switch (kind) {
    case FilterKind::IgsfBank: return "igsf-bank";
    case FilterKind::IgsfAdp: return "igsf-adp";
    case FilterKind::Igsf: return "igsf";
    case FilterKind::Zeroth: return "zeroth";
    case FilterKind::Enkf: return "enkf";
    case FilterKind::Sir: return "sir";
    case FilterKind::Asir: return "asir";
    case FilterKind::Gspf: return "gspf";
  }
  throw ParameterError("filter_kind_name: unknown kind");
}

FilterKind parse_filter_kind(std::string_view name) {
  for (const FilterKind kind :
       {FilterKind::IgsfBank, FilterKind::IgsfAdp, FilterKind::Igsf, FilterKind::Zeroth,
        FilterKind::Enkf, FilterKind::Sir, FilterKind::Asir, FilterKind::Gspf})
    if (name == filter_kind_name(kind)) return kind;
  throw ParameterError("parse_filter_kind: unknown filter \"" + std::string(name) + "\"");
}

std::string_view filter_stream_kind(FilterKind kind) {
  switch (kind) {
    case FilterKind::IgsfBank:
    case FilterKind::IgsfAdp:
    case FilterKind::Igsf:
    case FilterKind::Zeroth:
      return "igsf";
    default:
      return filter_kind_name(kind);
  }
}

namespace {

bool bank_family(FilterKind kind) {
  return kind == FilterKind::IgsfBank || kind == FilterKind::Zeroth || kind == FilterKind::Gspf;
}

bool iterated_family(FilterKind kind) {
  return kind == FilterKind::IgsfBank || kind == FilterKind::IgsfAdp || kind == FilterKind::Igsf;
}

}  // namespace

FilterSpec resolve_filter(FilterKind kind, const ExperimentSetup& setup) {
  FilterSpec f;
  f.kind = kind;
  f.label = std::string(filter_kind_name(kind));
  f.ensemble = setup.defaults.ensemble;
  f.n_mixands = bank_family(kind) ? setup.defaults.n_mixands : 1;
  f.iterations = iterated_family(kind) ? setup.defaults.iterations : 0;
  f.alpha1 = (kind == FilterKind::IgsfBank || kind == FilterKind::IgsfAdp)
                 ? setup.defaults.alpha1
                 : 0.0;
  f.schedule = setup.defaults.schedule;
  return f;
}

// --- run_experiment ----------------------------------------------------------

namespace {

// Everything one Monte Carlo run needs, shared read-only across workers.
struct ProblemContext {
  ProcessModel process;
  MeasurementModel meas;
  Vector prior_mean;
  Matrix prior_cov;
  std::vector<double> times;
  std::function<void(std::uint64_t seed, const std::string& run_prefix,
                     std::vector<Vector>& truth, std::vector<Observation>& obs)>
      generate;
};

ProblemContext make_context(const ExperimentSetup& setup) {
  ProblemContext ctx;
  switch (setup.kind) {
    case ExperimentKind::Growth: {
      const GrowthModelParams p = setup.growth;
      ctx.process = growth_process_model(p);
      ctx.meas = growth_measurement_model(p);
      ctx.times.resize(static_cast<std::size_t>(p.steps));
      for (int i = 0; i < p.steps; ++i)
        ctx.times[static_cast<std::size_t>(i)] = static_cast<double>(i + 1) * p.h;
      ctx.generate = [p](std::uint64_t seed, const std::string& prefix,
                         std::vector<Vector>& truth, std::vector<Observation>& obs) {
        GrowthData data = gen_growth(p, seed, prefix);
        truth.resize(data.truth.size());
        for (std::size_t i = 0; i < data.truth.size(); ++i)
          truth[i] = Vector::Constant(1, data.truth[i]);
        obs = std::move(data.obs);
      };
      break;
    }
    case ExperimentKind::Tracking: {
      const TrackingScenario sc = setup.tracking;
      ctx.process = tracking_process_model(sc);
      ctx.meas = tracking_measurement_model(sc);
      const int steps = tracking_steps(sc);
      ctx.times.resize(static_cast<std::size_t>(steps));
      for (int i = 0; i < steps; ++i)
        ctx.times[static_cast<std::size_t>(i)] = static_cast<double>(i + 1) * sc.dt;
      ctx.generate = [sc](std::uint64_t seed, const std::string& prefix,
                          std::vector<Vector>& truth, std::vector<Observation>& obs) {
        TrackingData data = gen_tracking(sc, seed, prefix);
        truth.resize(static_cast<std::size_t>(data.truth.cols()));
        for (Eigen::Index i = 0; i < data.truth.cols(); ++i)
          truth[static_cast<std::size_t>(i)] = data.truth.col(i);
        obs = std::move(data.obs);
      };
      break;
    }
    case ExperimentKind::Frame5:
    case ExperimentKind::Frame20: {
      const ShearFrameSpec spec = setup.frame;
      const int n = spec.floors;
      FrameFilterSetup ffs = frame_filter_setup(spec);
      ctx.process = std::move(ffs.model);
      ctx.meas = std::move(ffs.meas);
      ctx.prior_mean = std::move(ffs.prior_mean);
      ctx.prior_cov = std::move(ffs.prior_cov);
      const int steps = frame_steps(spec);
      ctx.times.resize(static_cast<std::size_t>(steps));
      for (int i = 0; i < steps; ++i)
        ctx.times[static_cast<std::size_t>(i)] = static_cast<double>(i + 1) * spec.h;
      Vector params(2 * n);
      params << spec.stiffness, spec.damping;
      ctx.generate = [spec, params, n](std::uint64_t seed, const std::string& prefix,
                                       std::vector<Vector>& truth,
                                       std::vector<Observation>& obs) {
        FrameData data = gen_frame(spec, seed, prefix);
        truth.resize(static_cast<std::size_t>(data.truth.cols()));
        for (Eigen::Index i = 0; i < data.truth.cols(); ++i) {
          Vector full(4 * n);
          full.head(2 * n) = data.truth.col(i);
          full.tail(2 * n) = params;
          truth[static_cast<std::size_t>(i)] = full;
        }
        obs = std::move(data.obs);
      };
      break;
    }
  }
  if (ctx.prior_mean.size() == 0) {
    ctx.prior_mean = setup.prior_mean;
    ctx.prior_cov = setup.prior_cov;
  }
  if (ctx.prior_mean.size() == 0)
    throw ParameterError("run_experiment: experiment setup has no filter prior");
  return ctx;
}

void validate_filter_spec(const FilterSpec& f) {
  const std::string where = "filter \"" + f.label + "\"";
  if (f.ensemble < 2) throw ParameterError(where + ": ensemble must be at least 2");
  if (f.n_mixands < 1) throw ParameterError(where + ": n_mixands must be at least 1");
  if (f.ensemble % f.n_mixands != 0)
    throw ParameterError(where + ": ensemble must be divisible by n_mixands");
  if (f.iterations < 0) throw ParameterError(where + ": iterations must be nonnegative");
  if (!bank_family(f.kind) && f.n_mixands != 1)
    throw ParameterError(where + ": this filter runs a single ensemble (n_mixands must be 1)");
}

std::vector<Vector> execute_filter(const FilterSpec& f, const ProblemContext& ctx,
                                   const ExperimentSetup& setup,
                                   const std::vector<Observation>& obs, std::uint64_t seed,
                                   const std::string& run_prefix) {
  const std::string prefix =
      run_prefix + "/filter=" + std::string(filter_stream_kind(f.kind));

  BankInit init;
  init.prior_mean = ctx.prior_mean;
  init.prior_cov = ctx.prior_cov;
  init.n_mixands = f.n_mixands;
  init.particles_per_mixand = f.ensemble / f.n_mixands;
  init.spread = (f.n_mixands > 1) ? setup.spread : BankInit::Spread::Shared;
  init.stratify_scale = setup.stratify_scale;
  init.t0 = 0.0;

  const AdpSchedule schedule{f.alpha1, f.schedule, f.iterations};
  IgsfOptions opt;
  opt.strict_epsilon_zero = f.strict_epsilon_zero;

  switch (f.kind) {
    case FilterKind::IgsfBank:
      return run_filter(ctx.process, ctx.meas, obs, init, schedule, opt, seed, prefix).estimates;
    case FilterKind::IgsfAdp:
    case FilterKind::Igsf:
      return run_igsf_single(ctx.process, ctx.meas, obs, init, schedule, opt, seed, prefix)
          .estimates;
    case FilterKind::Zeroth:
      return run_zeroth_filter(ctx.process, ctx.meas, obs, init, opt, seed, prefix).estimates;
    case FilterKind::Enkf:
      return run_enkf(ctx.process, ctx.meas, obs, init, seed, prefix).estimates;
    case FilterKind::Sir:
      return run_sir(ctx.process, ctx.meas, obs, init, seed, prefix).estimates;
    case FilterKind::Asir:
      return run_asir(ctx.process, ctx.meas, obs, init, seed, prefix).estimates;
    case FilterKind::Gspf:
      return run_gspf(ctx.process, ctx.meas, obs, init, seed, prefix).estimates;
  }
  throw ParameterError("run_experiment: unknown filter kind");
}

}  // namespace

RunArtifacts run_experiment(const ExperimentSetup& setup, const std::vector<FilterSpec>& filters,
                            int runs, std::uint64_t seed, int threads) {
  if (runs < 1) throw ParameterError("run_experiment: runs must be at least 1");
  if (threads < 1) throw ParameterError("run_experiment: threads must be at least 1");
  if (filters.empty()) throw ParameterError("run_experiment: no filters selected");
  for (const FilterSpec& f : filters) validate_filter_spec(f);
  for (std::size_t a = 0; a < filters.size(); ++a)
    for (std::size_t b = a + 1; b < filters.size(); ++b)
      if (filters[a].label == filters[b].label)
        throw ParameterError("run_experiment: duplicate filter label \"" + filters[a].label +
                             "\"");

  const ProblemContext ctx = make_context(setup);

  RunArtifacts art;
  art.setup = setup;
  art.runs = runs;
  art.seed = seed;
  art.times = ctx.times;
  art.truths.resize(static_cast<std::size_t>(runs));
  art.observations.resize(static_cast<std::size_t>(runs));
  art.filters.resize(filters.size());
  for (std::size_t fi = 0; fi < filters.size(); ++fi) {
    art.filters[fi].spec = filters[fi];
    art.filters[fi].estimates.resize(static_cast<std::size_t>(runs));
  }

  std::atomic<int> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto worker = [&]() {
    while (!failed.load()) {
      const int m = next.fetch_add(1);
      if (m >= runs) return;
      try {
        const std::string run_prefix = "exp=" + setup.name + "/run=" + std::to_string(m);
        const std::size_t mi = static_cast<std::size_t>(m);
        ctx.generate(seed, run_prefix, art.truths[mi], art.observations[mi]);
        for (std::size_t fi = 0; fi < filters.size(); ++fi)
          art.filters[fi].estimates[mi] = execute_filter(filters[fi], ctx, setup,
                                                         art.observations[mi], seed, run_prefix);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        failed.store(true);
        return;
      }
    }
  };

  const int pool = std::min(threads, runs);
  if (pool <= 1) {
    worker();
  } else {
    std::vector<std::thread> team;
    team.reserve(static_cast<std::size_t>(pool));
    for (int i = 0; i < pool; ++i) team.emplace_back(worker);
    for (std::thread& t : team) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  for (FilterArtifacts& fa : art.filters)
    fa.rmse = rmse_series(fa.estimates, art.truths, setup.report_components);
  return art;
}

}  // namespace igsf
