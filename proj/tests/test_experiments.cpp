// Benchmark problem generators and the Monte Carlo experiment driver:
// truth recursions replayed step by step, worked scalar examples, noise-free
// degenerations, structural properties of the shear-frame matrices, RMSE
// summaries against hand-computed values, and the seeding policy of
// run_experiment (bitwise reruns, shared observations, order invariance).
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "igsf/errors.hpp"
#include "igsf/experiments.hpp"
#include "igsf/rng.hpp"

namespace {

constexpr double kPi = 3.14159265358979323846;

igsf::RngStream cloned(std::uint64_t seed, const std::string& prefix, const char* suffix) {
  return igsf::RngStream(seed, igsf::stream_tag(prefix + suffix));
}

double growth_step(const igsf::GrowthModelParams& p, double x, int step) {
  return (p.gamma1 * x + p.gamma2 * x * x + 8.0 * std::cos(p.theta * step)) * p.h;
}

}  // namespace

// --- Scalar growth model -----------------------------------------------------

TEST_CASE("growth transition reproduces the worked scalar example") {
  igsf::GrowthModelParams p;
  p.process_var = 0.0;
  const igsf::ProcessModel model = igsf::growth_process_model(p);
  const auto& dm = std::get<igsf::DiscreteModel>(model);
  CHECK(dm.state_dim == 1);
  CHECK(dm.noise_dim == 1);

  // From x = 0.5 at step 0: (0.2*0.5 + 0.01*0.25 + 8*cos(0)) * 1 = 8.1025.
  const igsf::Vector x1 =
      dm.map(igsf::Vector::Constant(1, 0.5), 0, igsf::Vector::Zero(1));
  CHECK(x1[0] == doctest::Approx(8.1025).epsilon(1e-15));

  // The cosine argument advances with the step index, not with time.
  const igsf::Vector x2 = dm.map(x1, 1, igsf::Vector::Zero(1));
  const double expect2 = (0.2 * x1[0] + 0.01 * x1[0] * x1[0] + 8.0 * std::cos(1.2)) * 1.0;
  CHECK(x2[0] == doctest::Approx(expect2).epsilon(1e-14));
}

TEST_CASE("growth truth replays from the documented streams") {
  igsf::GrowthModelParams p;
  p.steps = 6;
  const std::uint64_t seed = 41;
  const std::string prefix = "gx";
  const igsf::GrowthData data = igsf::gen_growth(p, seed, prefix);
  REQUIRE(data.truth.size() == 6);
  REQUIRE(data.obs.size() == 6);

  igsf::RngStream init = cloned(seed, prefix, "/truth-init");
  igsf::RngStream process = cloned(seed, prefix, "/truth-process");
  igsf::RngStream obs_noise = cloned(seed, prefix, "/truth-obs");
  const double proc_std = std::sqrt(p.process_var * p.h);
  const double meas_std = std::sqrt(p.meas_var);

  double x = init.uniform();
  CHECK(x >= 0.0);
  CHECK(x <= 1.0);
  for (int i = 0; i < p.steps; ++i) {
    x = growth_step(p, x, i) + proc_std * process.normal();
    const double z = x * x + meas_std * obs_noise.normal();
    CHECK(data.truth[static_cast<std::size_t>(i)] == x);
    REQUIRE(data.obs[static_cast<std::size_t>(i)].z.size() == 1);
    CHECK(data.obs[static_cast<std::size_t>(i)].z[0] == z);
    CHECK(data.obs[static_cast<std::size_t>(i)].t ==
          doctest::Approx((i + 1) * p.h).epsilon(1e-15));
  }
}

TEST_CASE("zero observation noise makes the quadratic observation exact") {
  igsf::GrowthModelParams p;
  p.meas_var = 0.0;
  p.steps = 8;
  const igsf::GrowthData data = igsf::gen_growth(p, 7, "gz");
  for (int i = 0; i < p.steps; ++i) {
    const double x = data.truth[static_cast<std::size_t>(i)];
    CHECK(data.obs[static_cast<std::size_t>(i)].z[0] == x * x);
  }
}

TEST_CASE("growth process noise has the advertised variance") {
  // One-step residuals X_1 - drift(X_0) across many independent seeds must
  // have variance process_var * h.
  igsf::GrowthModelParams p;
  p.steps = 1;
  p.h = 0.5;
  p.process_var = 10.0;
  const std::string prefix = "gv";
  const int reps = 100000;
  double sum = 0.0;
  double sumsq = 0.0;
  for (int r = 0; r < reps; ++r) {
    const std::uint64_t seed = 100000 + static_cast<std::uint64_t>(r);
    const igsf::GrowthData data = igsf::gen_growth(p, seed, prefix);
    const double x0 = cloned(seed, prefix, "/truth-init").uniform();
    const double resid = data.truth[0] - growth_step(p, x0, 0);
    sum += resid;
    sumsq += resid * resid;
  }
  const double mean = sum / reps;
  const double var = sumsq / reps - mean * mean;
  CHECK(std::abs(mean) < 0.03);
  CHECK(var == doctest::Approx(p.process_var * p.h).epsilon(0.03));
}

TEST_CASE("growth generator rejects bad parameters") {
  igsf::GrowthModelParams p;
  p.h = 0.0;
  CHECK_THROWS_AS(igsf::gen_growth(p, 1, "g"), igsf::ParameterError);
  p = {};
  p.steps = 0;
  CHECK_THROWS_AS(igsf::gen_growth(p, 1, "g"), igsf::ParameterError);
  p = {};
  p.meas_var = -1.0;
  CHECK_THROWS_AS(igsf::growth_process_model(p), igsf::ParameterError);
}

// --- Bearing/range tracking --------------------------------------------------

namespace {

igsf::TrackingScenario quiet_scenario() {
  igsf::TrackingScenario sc;
  sc.dt = 0.1;
  sc.horizon = 0.5;
  sc.init_state = (igsf::Vector(4) << 0.0, 3.0, 0.0, 1.0).finished();
  sc.truth_accel_cov = igsf::Matrix::Zero(2, 2);
  sc.filter_accel_cov = igsf::Matrix::Identity(2, 2);
  sc.meas_cov = igsf::Matrix::Zero(2, 2);
  return sc;
}

}  // namespace

TEST_CASE("constant-velocity truth advances linearly") {
  const igsf::TrackingScenario sc = quiet_scenario();
  const igsf::TrackingData data = igsf::gen_tracking(sc, 3, "cv");
  REQUIRE(data.truth.cols() == 5);
  for (int i = 0; i < 5; ++i) {
    const double t = 0.1 * (i + 1);
    CHECK(data.truth(0, i) == doctest::Approx(3.0 * t).epsilon(1e-14));
    CHECK(data.truth(1, i) == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(data.truth(2, i) == doctest::Approx(1.0 * t).epsilon(1e-14));
    CHECK(data.truth(3, i) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(data.obs[static_cast<std::size_t>(i)].t == doctest::Approx(t).epsilon(1e-15));
  }
}

TEST_CASE("a maneuver applies an acceleration impulse at its start time") {
  igsf::TrackingScenario sc = quiet_scenario();
  sc.maneuvers = {{0.2, -40.0, 40.0}};
  const igsf::TrackingData data = igsf::gen_tracking(sc, 3, "mv");

  // Steps 0 and 1 coast; the step starting at t = 0.2 carries the impulse:
  // velocity jumps by dt * a and position picks up the dt^2/2 term.
  CHECK(data.truth(0, 1) == doctest::Approx(0.6).epsilon(1e-14));
  CHECK(data.truth(2, 1) == doctest::Approx(0.2).epsilon(1e-14));

  CHECK(data.truth(0, 2) == doctest::Approx(0.6 + 0.3 - 0.2).epsilon(1e-13));
  CHECK(data.truth(1, 2) == doctest::Approx(3.0 - 4.0).epsilon(1e-13));
  CHECK(data.truth(2, 2) == doctest::Approx(0.2 + 0.1 + 0.2).epsilon(1e-13));
  CHECK(data.truth(3, 2) == doctest::Approx(1.0 + 4.0).epsilon(1e-13));

  // Afterwards the trajectory coasts at the new velocity.
  CHECK(data.truth(0, 3) == doctest::Approx(0.7 - 0.1).epsilon(1e-13));
  CHECK(data.truth(1, 3) == doctest::Approx(-1.0).epsilon(1e-13));
  CHECK(data.truth(2, 3) == doctest::Approx(0.5 + 0.5).epsilon(1e-13));
}

TEST_CASE("noise-free bearing and range are exact for a diagonal sightline") {
  igsf::TrackingScenario sc = quiet_scenario();
  sc.horizon = 0.3;
  sc.init_state = (igsf::Vector(4) << 1.0, 0.0, 1.0, 0.0).finished();
  const igsf::TrackingData data = igsf::gen_tracking(sc, 5, "dg");
  REQUIRE(data.obs.size() == 3);
  for (const igsf::Observation& o : data.obs) {
    CHECK(o.z[0] == doctest::Approx(kPi / 4.0).epsilon(1e-15));
    CHECK(o.z[1] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  }

  const igsf::MeasurementModel mm = igsf::tracking_measurement_model(sc);
  const igsf::Vector y = mm.observe(sc.init_state, 0.0);
  CHECK(y[0] == doctest::Approx(kPi / 4.0).epsilon(1e-15));
  CHECK(y[1] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  CHECK((mm.noise_cov - sc.meas_cov).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("observed bearings stay wrapped and ranges stay nonnegative") {
  // Huge observation noise on a target close to the sensor forces both the
  // angle wrap and the range clamp to fire.
  igsf::TrackingScenario sc = quiet_scenario();
  sc.horizon = 5.0;
  sc.init_state = (igsf::Vector(4) << 0.3, 0.0, 0.4, 0.0).finished();
  sc.meas_cov = (igsf::Matrix(2, 2) << 25.0, 0.0, 0.0, 1e4).finished();
  const igsf::TrackingData data = igsf::gen_tracking(sc, 11, "wr");
  REQUIRE(data.obs.size() == 50);
  int clamped = 0;
  for (const igsf::Observation& o : data.obs) {
    CHECK(o.z[0] > -kPi);
    CHECK(o.z[0] <= kPi);
    CHECK(o.z[1] >= 0.0);
    if (o.z[1] == 0.0) ++clamped;
  }
  CHECK(clamped > 0);
}

TEST_CASE("a target on the sensor raises an error") {
  igsf::TrackingScenario sc = quiet_scenario();
  sc.init_state = igsf::Vector::Zero(4);
  CHECK_THROWS_AS(igsf::gen_tracking(sc, 1, "s0"), igsf::FilterError);
}

TEST_CASE("default tracking scenario carries the benchmark values") {
  const igsf::TrackingScenario sc = igsf::default_tracking_scenario();
  CHECK(sc.dt == 0.1);
  CHECK(sc.horizon == 80.0);
  REQUIRE(sc.init_state.size() == 4);
  CHECK(sc.init_state[0] == 0.5);
  CHECK(sc.init_state[1] == 3.0);
  CHECK(sc.init_state[2] == 1.0);
  CHECK(sc.init_state[3] == 1.0);
  REQUIRE(sc.maneuvers.size() == 3);
  CHECK(sc.maneuvers[0].time == 20.0);
  CHECK(sc.maneuvers[0].ax == -40.0);
  CHECK(sc.maneuvers[0].ay == 40.0);
  CHECK(sc.maneuvers[1].time == 30.0);
  CHECK(sc.maneuvers[1].ax == 25.0);
  CHECK(sc.maneuvers[1].ay == -25.0);
  CHECK(sc.maneuvers[2].time == 60.0);
  CHECK(sc.truth_accel_cov.isZero(0.0));
  CHECK((sc.filter_accel_cov - 8.0 * igsf::Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() == 0.0);
  CHECK(sc.meas_cov(0, 0) == 0.2);
  CHECK(sc.meas_cov(1, 1) == 35.0);
  CHECK(sc.meas_cov(0, 1) == 0.0);

  const igsf::TrackingData data = igsf::gen_tracking(sc, 2, "dflt");
  CHECK(data.truth.cols() == 800);
  CHECK(data.truth.allFinite());
}

TEST_CASE("maneuvers outside the horizon are rejected") {
  igsf::TrackingScenario sc = quiet_scenario();
  sc.maneuvers = {{9.0, 1.0, 1.0}};
  CHECK_THROWS_AS(igsf::gen_tracking(sc, 1, "mx"), igsf::ParameterError);
}

// --- Shear frame -------------------------------------------------------------

TEST_CASE("shear pattern matrices have the stacked-spring structure") {
  const igsf::Vector s2 = igsf::Vector::Constant(2, 100.0);
  const auto [stiff2, damp2] = igsf::build_shear_frame(2, s2, igsf::Vector::Constant(2, 5.0));
  CHECK(stiff2(0, 0) == 200.0);
  CHECK(stiff2(0, 1) == -100.0);
  CHECK(stiff2(1, 0) == -100.0);
  CHECK(stiff2(1, 1) == 100.0);
  CHECK(damp2(0, 0) == 10.0);
  CHECK(damp2(1, 1) == 5.0);

  igsf::Vector s4(4);
  s4 << 1.0, 2.0, 3.0, 4.0;
  const auto [stiff4, unused] = igsf::build_shear_frame(4, s4, s4);
  (void)unused;
  CHECK(stiff4(0, 0) == 3.0);
  CHECK(stiff4(1, 1) == 5.0);
  CHECK(stiff4(2, 2) == 7.0);
  CHECK(stiff4(3, 3) == 4.0);
  CHECK(stiff4(0, 1) == -2.0);
  CHECK(stiff4(1, 2) == -3.0);
  CHECK(stiff4(2, 3) == -4.0);
  CHECK(stiff4(0, 2) == 0.0);
  CHECK(stiff4(0, 3) == 0.0);
  CHECK((stiff4 - stiff4.transpose()).cwiseAbs().maxCoeff() == 0.0);

  // The 20-floor benchmark pattern (two softened top floors) stays positive
  // definite.
  igsf::Vector s20 = igsf::Vector::Constant(20, 100.0);
  s20[18] = 98.0;
  s20[19] = 98.0;
  const auto [stiff20, damp20] = igsf::build_shear_frame(20, s20, igsf::Vector::Constant(20, 5.0));
  (void)damp20;
  Eigen::SelfAdjointEigenSolver<igsf::Matrix> eig(stiff20);
  CHECK(eig.eigenvalues().minCoeff() > 0.0);

  CHECK_THROWS_AS(igsf::build_shear_frame(3, s2, s2), igsf::ParameterError);
}

TEST_CASE("frame response is identically zero without forcing or noise") {
  igsf::ShearFrameSpec spec = igsf::default_frame_spec(3);
  spec.force_amp = 0.0;
  spec.process_noise = 0.0;
  spec.horizon = 0.5;
  const igsf::FrameData data = igsf::gen_frame(spec, 4, "fz");
  REQUIRE(data.truth.cols() == 50);
  CHECK(data.truth.isZero(0.0));
  CHECK(data.meas_noise_std.isZero(0.0));
  for (const igsf::Observation& o : data.obs) CHECK(o.z.isZero(0.0));
}

TEST_CASE("unforced frame motion dissipates energy") {
  igsf::ShearFrameSpec spec = igsf::default_frame_spec(3);
  spec.force_amp = 0.0;
  spec.process_noise = 0.0;
  const igsf::ContinuousModel model = igsf::frame_state_model(spec);
  const auto [stiff, damp] = igsf::build_shear_frame(3, spec.stiffness, spec.damping);
  (void)damp;

  igsf::Ensemble x(6, 1);
  x.col(0) << 0.1, -0.05, 0.02, 0.0, 0.0, 0.0;
  auto energy = [&stiff](const igsf::Vector& state) {
    const igsf::Vector d = state.head(3);
    const igsf::Vector v = state.tail(3);
    return 0.5 * v.squaredNorm() + 0.5 * d.dot(stiff * d);
  };

  const double e0 = energy(x.col(0));
  double prev = e0;
  for (int i = 0; i < 200; ++i) {
    const double t = 0.01 * i;
    x = igsf::propagate_deterministic(model, x, t, t + 0.01, i);
    const double e = energy(x.col(0));
    CHECK(e <= prev * (1.0 + 1e-12));
    prev = e;
  }
  CHECK(prev < 0.5 * e0);
}

TEST_CASE("frame observation noise scale follows the deterministic response") {
  igsf::ShearFrameSpec spec = igsf::default_frame_spec(2);
  spec.horizon = 1.0;
  const igsf::Vector std_half = igsf::frame_meas_noise_std(spec);
  REQUIRE(std_half.size() == 2);
  CHECK(std_half.minCoeff() > 0.0);

  // Doubling the fraction doubles the std exactly.
  igsf::ShearFrameSpec spec2 = spec;
  spec2.meas_noise_fraction = 2.0 * spec.meas_noise_fraction;
  const igsf::Vector std_full = igsf::frame_meas_noise_std(spec2);
  CHECK((std_full - 2.0 * std_half).cwiseAbs().maxCoeff() == 0.0);

  // Independent Runge-Kutta integration of dx = A x + f(t) reproduces the
  // clean-response RMS the noise scale is built from.
  const auto [stiff, damp] = igsf::build_shear_frame(2, spec.stiffness, spec.damping);
  igsf::Matrix a = igsf::Matrix::Zero(4, 4);
  a.topRightCorner(2, 2) = igsf::Matrix::Identity(2, 2);
  a.bottomLeftCorner(2, 2) = -stiff;
  a.bottomRightCorner(2, 2) = -damp;
  auto force = [&spec](double t) {
    igsf::Vector f = igsf::Vector::Zero(4);
    f.tail(2).setConstant(spec.force_amp * std::cos(spec.force_freq * t));
    return f;
  };
  auto deriv = [&](const igsf::Vector& state, double t) -> igsf::Vector {
    return a * state + force(t);
  };

  const int steps = 100;
  const int sub = 50;
  const double h = spec.h / sub;
  igsf::Vector state = igsf::Vector::Zero(4);
  igsf::Vector sumsq = igsf::Vector::Zero(2);
  double t = 0.0;
  for (int i = 0; i < steps; ++i) {
    for (int k = 0; k < sub; ++k) {
      const igsf::Vector k1 = deriv(state, t);
      const igsf::Vector k2 = deriv(state + 0.5 * h * k1, t + 0.5 * h);
      const igsf::Vector k3 = deriv(state + 0.5 * h * k2, t + 0.5 * h);
      const igsf::Vector k4 = deriv(state + h * k3, t + h);
      state += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      t += h;
    }
    sumsq += state.head(2).cwiseAbs2();
  }
  const igsf::Vector rms = (sumsq / static_cast<double>(steps)).cwiseSqrt();
  const igsf::Vector expect = spec.meas_noise_fraction * rms;
  for (int j = 0; j < 2; ++j)
    CHECK(std_half[j] == doctest::Approx(expect[j]).epsilon(0.02));
}

TEST_CASE("frame observations are noisy displacements from the documented streams") {
  igsf::ShearFrameSpec spec = igsf::default_frame_spec(2);
  spec.horizon = 0.3;
  const std::uint64_t seed = 17;
  const std::string prefix = "fr";
  const igsf::FrameData data = igsf::gen_frame(spec, seed, prefix);
  REQUIRE(data.truth.cols() == 30);
  CHECK((data.meas_noise_std - igsf::frame_meas_noise_std(spec)).cwiseAbs().maxCoeff() == 0.0);

  // Replay the observation noise: truth carries the process noise, and the
  // observation is head(n) plus std-scaled normals from "/truth-obs".
  igsf::RngStream obs_noise = cloned(seed, prefix, "/truth-obs");
  for (int i = 0; i < 30; ++i) {
    const igsf::Vector z_expect =
        data.truth.col(i).head(2) + data.meas_noise_std.cwiseProduct(obs_noise.normals(2));
    CHECK((data.obs[static_cast<std::size_t>(i)].z - z_expect).cwiseAbs().maxCoeff() == 0.0);
    CHECK(data.obs[static_cast<std::size_t>(i)].t ==
          doctest::Approx((i + 1) * spec.h).epsilon(1e-12));
  }

  // A zero fraction removes the noise entirely.
  igsf::ShearFrameSpec clean = spec;
  clean.meas_noise_fraction = 0.0;
  const igsf::FrameData exact = igsf::gen_frame(clean, seed, prefix);
  for (int i = 0; i < 30; ++i)
    CHECK((exact.obs[static_cast<std::size_t>(i)].z - exact.truth.col(i).head(2))
              .cwiseAbs()
              .maxCoeff() == 0.0);
}

TEST_CASE("frame filter setup augments states with the parameter prior") {
  const igsf::ShearFrameSpec spec = igsf::default_frame_spec(2);
  const igsf::FrameFilterSetup setup = igsf::frame_filter_setup(spec);
  const igsf::ContinuousModel& cm = setup.model;
  CHECK(cm.state_dim == 8);
  CHECK(cm.brownian_tail_dim == 4);

  REQUIRE(setup.prior_mean.size() == 8);
  CHECK(setup.prior_mean.head(4).isZero(0.0));
  CHECK(setup.prior_mean[4] == doctest::Approx(130.0).epsilon(1e-15));
  CHECK(setup.prior_mean[6] == doctest::Approx(6.5).epsilon(1e-15));
  CHECK(setup.prior_cov(0, 0) == doctest::Approx(1e-4).epsilon(1e-12));
  CHECK(setup.prior_cov(4, 4) == doctest::Approx(400.0).epsilon(1e-12));
  CHECK(setup.prior_cov(6, 6) == doctest::Approx(1.0).epsilon(1e-12));

  CHECK(setup.meas.obs_dim == 2);
  const igsf::Vector probe = igsf::Vector::LinSpaced(8, 1.0, 8.0);
  const igsf::Vector y = setup.meas.observe(probe, 0.0);
  CHECK(y[0] == 1.0);
  CHECK(y[1] == 2.0);
  const igsf::Vector noise_std = igsf::frame_meas_noise_std(spec);
  CHECK(setup.meas.noise_cov(0, 0) == doctest::Approx(noise_std[0] * noise_std[0]).epsilon(1e-14));

  // The drift builder reads stiffness/damping off the anchor tail.
  igsf::Vector anchor = igsf::Vector::Zero(8);
  anchor.segment(4, 2) << 100.0, 100.0;
  anchor.segment(6, 2) << 5.0, 5.0;
  const igsf::Matrix q = igsf::psl_linearize(cm, anchor, 0.0);
  CHECK(q(2, 0) == doctest::Approx(-200.0).epsilon(1e-14));
  CHECK(q(2, 1) == doctest::Approx(100.0).epsilon(1e-14));
  CHECK(q(2, 2) == doctest::Approx(-10.0).epsilon(1e-14));
}

// --- RMSE summaries ----------------------------------------------------------

TEST_CASE("rmse summaries match hand-computed values") {
  auto v3 = [](double a, double b, double c) {
    return (igsf::Vector(3) << a, b, c).finished();
  };
  const std::vector<std::vector<igsf::Vector>> estimates = {
      {v3(1, 0, 2), v3(2, 0, 0)},
      {v3(3, 0, 0), v3(0, 0, 4)},
  };
  const std::vector<std::vector<igsf::Vector>> truths = {
      {v3(0, 0, 0), v3(0, 0, 0)},
      {v3(0, 0, 0), v3(0, 0, 0)},
  };

  const igsf::Matrix rm = igsf::rmse_series(estimates, truths, {0, 2});
  REQUIRE(rm.rows() == 2);
  REQUIRE(rm.cols() == 2);
  CHECK(rm(0, 0) == doctest::Approx(std::sqrt(5.0)).epsilon(1e-15));
  CHECK(rm(1, 0) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  CHECK(rm(0, 1) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  CHECK(rm(1, 1) == doctest::Approx(std::sqrt(8.0)).epsilon(1e-15));

  const igsf::Vector ta = igsf::run_time_avg_rmse(estimates[0], truths[0], {0});
  CHECK(ta[0] == doctest::Approx(std::sqrt(2.5)).epsilon(1e-15));
}

TEST_CASE("rmse summaries validate their inputs") {
  const std::vector<std::vector<igsf::Vector>> one_run = {
      {igsf::Vector::Zero(2), igsf::Vector::Zero(2)}};
  const std::vector<std::vector<igsf::Vector>> two_runs = {
      {igsf::Vector::Zero(2), igsf::Vector::Zero(2)},
      {igsf::Vector::Zero(2), igsf::Vector::Zero(2)}};
  const std::vector<std::vector<igsf::Vector>> ragged = {
      {igsf::Vector::Zero(2)},
      {igsf::Vector::Zero(2), igsf::Vector::Zero(2)}};

  CHECK_THROWS_AS(igsf::rmse_series({}, {}, {0}), igsf::ParameterError);
  CHECK_THROWS_AS(igsf::rmse_series(one_run, one_run, {}), igsf::ParameterError);
  CHECK_THROWS_AS(igsf::rmse_series(one_run, two_runs, {0}), igsf::DimensionError);
  CHECK_THROWS_AS(igsf::rmse_series(two_runs, ragged, {0}), igsf::DimensionError);
  CHECK_THROWS_AS(igsf::rmse_series(one_run, one_run, {5}), igsf::DimensionError);
  CHECK_THROWS_AS(igsf::run_time_avg_rmse({igsf::Vector::Zero(2)}, {}, {0}),
                  igsf::DimensionError);
  CHECK_THROWS_AS(
      igsf::run_time_avg_rmse({igsf::Vector::Zero(2)}, {igsf::Vector::Zero(2)}, {3}),
      igsf::DimensionError);
}

// --- Experiment setups -------------------------------------------------------

TEST_CASE("named experiments carry their benchmark defaults") {
  const igsf::ExperimentSetup growth = igsf::make_experiment("growth");
  CHECK(growth.kind == igsf::ExperimentKind::Growth);
  CHECK(growth.defaults.ensemble == 1000);
  CHECK(growth.defaults.n_mixands == 10);
  CHECK(growth.defaults.iterations == 5);
  CHECK(growth.defaults.alpha1 == 1.0);
  CHECK(growth.defaults.schedule == igsf::AdpKind::ExpDecay);
  CHECK(growth.default_runs == 100);
  CHECK(growth.report_components == std::vector<int>{0});
  CHECK(growth.growth.process_var == 10.0);
  CHECK(growth.growth.meas_var == 10.0);
  CHECK(growth.growth.steps == 50);
  CHECK(growth.prior_mean[0] == 0.5);
  CHECK(growth.prior_cov(0, 0) == 2.0);

  const igsf::ExperimentSetup tracking = igsf::make_experiment("tracking");
  CHECK(tracking.kind == igsf::ExperimentKind::Tracking);
  CHECK(tracking.defaults.ensemble == 200);
  CHECK(tracking.defaults.n_mixands == 5);
  CHECK(tracking.defaults.iterations == 10);
  CHECK(tracking.defaults.alpha1 == 10.0);
  CHECK(tracking.default_runs == 50);
  CHECK((tracking.report_components == std::vector<int>{0, 2}));
  CHECK(tracking.prior_mean[1] == 40.0);
  CHECK(tracking.prior_mean[3] == 0.075);
  CHECK((tracking.prior_cov - 100.0 * igsf::Matrix::Identity(4, 4)).cwiseAbs().maxCoeff() ==
        0.0);

  const igsf::ExperimentSetup frame5 = igsf::make_experiment("frame5");
  CHECK(frame5.kind == igsf::ExperimentKind::Frame5);
  CHECK(frame5.frame.floors == 5);
  CHECK(frame5.frame.stiffness.isConstant(100.0));
  CHECK(frame5.defaults.ensemble == 400);
  CHECK(frame5.defaults.n_mixands == 10);
  CHECK(frame5.defaults.iterations == 10);
  CHECK(frame5.defaults.alpha1 == 2.0);
  CHECK(frame5.defaults.schedule == igsf::AdpKind::ConstantThenZero);
  REQUIRE(frame5.report_components.size() == 10);
  CHECK(frame5.report_components.front() == 10);
  CHECK(frame5.report_components.back() == 19);

  const igsf::ExperimentSetup frame20 = igsf::make_experiment("frame20");
  CHECK(frame20.frame.floors == 20);
  CHECK(frame20.frame.stiffness[17] == 100.0);
  CHECK(frame20.frame.stiffness[18] == 98.0);
  CHECK(frame20.frame.stiffness[19] == 98.0);
  CHECK(frame20.frame.param_prior_mean[18] == doctest::Approx(130.0).epsilon(1e-15));
  CHECK(frame20.defaults.iterations == 8);
  CHECK(frame20.defaults.alpha1 == 3.0);
  REQUIRE(frame20.report_components.size() == 40);
  CHECK(frame20.report_components.front() == 40);
  CHECK(frame20.report_components.back() == 79);

  CHECK_THROWS_AS(igsf::make_experiment("lorenz"), igsf::ParameterError);
}

TEST_CASE("filter kind names round-trip") {
  using FK = igsf::FilterKind;
  for (const FK kind : {FK::IgsfBank, FK::IgsfAdp, FK::Igsf, FK::Zeroth, FK::Enkf, FK::Sir,
                        FK::Asir, FK::Gspf})
    CHECK(igsf::parse_filter_kind(igsf::filter_kind_name(kind)) == kind);
  CHECK(igsf::filter_kind_name(FK::IgsfBank) == "igsf-bank");
  CHECK(igsf::filter_kind_name(FK::Enkf) == "enkf");
  CHECK_THROWS_AS(igsf::parse_filter_kind("EnKF"), igsf::ParameterError);
  CHECK_THROWS_AS(igsf::parse_filter_kind("kalman"), igsf::ParameterError);

  // The iterated-gain variants share one stream family so degenerate
  // configurations consume identical draws.
  CHECK(igsf::filter_stream_kind(FK::IgsfBank) == "igsf");
  CHECK(igsf::filter_stream_kind(FK::IgsfAdp) == "igsf");
  CHECK(igsf::filter_stream_kind(FK::Igsf) == "igsf");
  CHECK(igsf::filter_stream_kind(FK::Zeroth) == "igsf");
  CHECK(igsf::filter_stream_kind(FK::Sir) == "sir");
}

TEST_CASE("experiment defaults resolve per filter family") {
  const igsf::ExperimentSetup setup = igsf::make_experiment("growth");
  using FK = igsf::FilterKind;

  const igsf::FilterSpec bank = igsf::resolve_filter(FK::IgsfBank, setup);
  CHECK(bank.ensemble == 1000);
  CHECK(bank.n_mixands == 10);
  CHECK(bank.iterations == 5);
  CHECK(bank.alpha1 == 1.0);
  CHECK(bank.label == "igsf-bank");

  const igsf::FilterSpec zeroth = igsf::resolve_filter(FK::Zeroth, setup);
  CHECK(zeroth.n_mixands == 10);
  CHECK(zeroth.iterations == 0);
  CHECK(zeroth.alpha1 == 0.0);

  const igsf::FilterSpec gspf = igsf::resolve_filter(FK::Gspf, setup);
  CHECK(gspf.n_mixands == 10);
  CHECK(gspf.iterations == 0);

  const igsf::FilterSpec adp = igsf::resolve_filter(FK::IgsfAdp, setup);
  CHECK(adp.n_mixands == 1);
  CHECK(adp.iterations == 5);
  CHECK(adp.alpha1 == 1.0);

  const igsf::FilterSpec plain = igsf::resolve_filter(FK::Igsf, setup);
  CHECK(plain.n_mixands == 1);
  CHECK(plain.iterations == 5);
  CHECK(plain.alpha1 == 0.0);

  const igsf::FilterSpec enkf = igsf::resolve_filter(FK::Enkf, setup);
  CHECK(enkf.n_mixands == 1);
  CHECK(enkf.iterations == 0);
  CHECK(enkf.alpha1 == 0.0);
}

// --- run_experiment ----------------------------------------------------------

namespace {

igsf::ExperimentSetup small_growth() {
  igsf::ExperimentSetup setup = igsf::make_experiment("growth");
  setup.growth.steps = 5;
  return setup;
}

igsf::FilterSpec small_filter(igsf::FilterKind kind, const igsf::ExperimentSetup& setup,
                              int ensemble, int n_mixands) {
  igsf::FilterSpec f = igsf::resolve_filter(kind, setup);
  f.ensemble = ensemble;
  f.n_mixands = n_mixands;
  return f;
}

bool same_series(const std::vector<std::vector<igsf::Vector>>& a,
                 const std::vector<std::vector<igsf::Vector>>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t m = 0; m < a.size(); ++m) {
    if (a[m].size() != b[m].size()) return false;
    for (std::size_t i = 0; i < a[m].size(); ++i)
      if ((a[m][i] - b[m][i]).cwiseAbs().maxCoeff() != 0.0) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("run_experiment reruns bitwise and is independent of the filter list") {
  const igsf::ExperimentSetup setup = small_growth();
  const std::vector<igsf::FilterSpec> pair = {
      small_filter(igsf::FilterKind::Gspf, setup, 60, 3),
      small_filter(igsf::FilterKind::Sir, setup, 60, 1)};
  const std::uint64_t seed = 9090;

  const igsf::RunArtifacts a = igsf::run_experiment(setup, pair, 3, seed);
  const igsf::RunArtifacts b = igsf::run_experiment(setup, pair, 3, seed);

  REQUIRE(a.filters.size() == 2);
  CHECK(a.runs == 3);
  CHECK(a.times.size() == 5);
  CHECK(a.times[0] == 1.0);
  CHECK(a.times[4] == 5.0);
  REQUIRE(a.truths.size() == 3);
  REQUIRE(a.truths[0].size() == 5);
  CHECK(a.truths[0][0].size() == 1);

  CHECK(same_series(a.truths, b.truths));
  CHECK(same_series(a.filters[0].estimates, b.filters[0].estimates));
  CHECK(same_series(a.filters[1].estimates, b.filters[1].estimates));

  // Truth streams are run-scoped: distinct runs draw distinct trajectories.
  CHECK(a.truths[0][0][0] != a.truths[1][0][0]);

  // Every filter sees the identical observation sequence per run.
  REQUIRE(a.observations.size() == 3);
  for (const auto& obs : a.observations) CHECK(obs.size() == 5);

  // Filter order does not change any filter's output ...
  const std::vector<igsf::FilterSpec> swapped = {pair[1], pair[0]};
  const igsf::RunArtifacts c = igsf::run_experiment(setup, swapped, 3, seed);
  CHECK(same_series(c.filters[0].estimates, a.filters[1].estimates));
  CHECK(same_series(c.filters[1].estimates, a.filters[0].estimates));

  // ... and neither does dropping the other filter from the list.
  const igsf::RunArtifacts solo =
      igsf::run_experiment(setup, {pair[1]}, 3, seed);
  CHECK(same_series(solo.truths, a.truths));
  CHECK(same_series(solo.filters[0].estimates, a.filters[1].estimates));

  // A different master seed changes the truth.
  const igsf::RunArtifacts other = igsf::run_experiment(setup, {pair[1]}, 3, seed + 1);
  CHECK(other.truths[0][0][0] != a.truths[0][0][0]);

  // The recorded RMSE is exactly rmse_series of estimates versus truths.
  const igsf::Matrix recomputed =
      igsf::rmse_series(a.filters[0].estimates, a.truths, setup.report_components);
  CHECK((recomputed - a.filters[0].rmse).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.filters[0].rmse.rows() == 5);
  CHECK(a.filters[0].rmse.cols() == 1);
}

TEST_CASE("parallel runs reproduce the sequential result bitwise") {
  const igsf::ExperimentSetup setup = small_growth();
  const std::vector<igsf::FilterSpec> filters = {
      small_filter(igsf::FilterKind::Gspf, setup, 40, 2)};
  const igsf::RunArtifacts seq = igsf::run_experiment(setup, filters, 4, 77, 1);
  const igsf::RunArtifacts par = igsf::run_experiment(setup, filters, 4, 77, 3);
  CHECK(same_series(seq.truths, par.truths));
  CHECK(same_series(seq.filters[0].estimates, par.filters[0].estimates));
}

TEST_CASE("run_experiment validates its configuration") {
  const igsf::ExperimentSetup setup = small_growth();
  const igsf::FilterSpec ok = small_filter(igsf::FilterKind::Gspf, setup, 40, 2);

  CHECK_THROWS_AS(igsf::run_experiment(setup, {}, 1, 1), igsf::ParameterError);
  CHECK_THROWS_AS(igsf::run_experiment(setup, {ok}, 0, 1), igsf::ParameterError);

  CHECK_THROWS_WITH_AS(
      igsf::run_experiment(setup, {small_filter(igsf::FilterKind::Gspf, setup, 7, 3)}, 1, 1),
      doctest::Contains("divisible"), igsf::ParameterError);

  // Single-ensemble baselines reject a mixand split.
  igsf::FilterSpec bad = small_filter(igsf::FilterKind::Enkf, setup, 40, 2);
  CHECK_THROWS_AS(igsf::run_experiment(setup, {bad}, 1, 1), igsf::ParameterError);

  igsf::FilterSpec dup = ok;
  CHECK_THROWS_AS(igsf::run_experiment(setup, {ok, dup}, 1, 1), igsf::ParameterError);

  igsf::FilterSpec tiny = ok;
  tiny.ensemble = 1;
  tiny.n_mixands = 1;
  CHECK_THROWS_AS(igsf::run_experiment(setup, {tiny}, 1, 1), igsf::ParameterError);
}

TEST_CASE("frame experiments carry the true parameters in the truth vectors") {
  igsf::ExperimentSetup setup = igsf::make_experiment("frame5");
  setup.frame = igsf::default_frame_spec(2);
  setup.frame.horizon = 0.2;
  setup.report_components = {4, 5, 6, 7};

  const std::vector<igsf::FilterSpec> filters = {
      small_filter(igsf::FilterKind::Enkf, setup, 40, 1)};
  const igsf::RunArtifacts art = igsf::run_experiment(setup, filters, 1, 5);

  REQUIRE(art.truths[0].size() == 20);
  for (const igsf::Vector& truth : art.truths[0]) {
    REQUIRE(truth.size() == 8);
    CHECK(truth[4] == 100.0);
    CHECK(truth[5] == 100.0);
    CHECK(truth[6] == 5.0);
    CHECK(truth[7] == 5.0);
  }
  REQUIRE(art.filters[0].estimates[0].size() == 20);
  CHECK(art.filters[0].estimates[0][0].size() == 8);
  CHECK(art.filters[0].rmse.rows() == 20);
  CHECK(art.filters[0].rmse.cols() == 4);
  CHECK(art.filters[0].rmse.allFinite());
}
