#include "igsf/config.hpp"

#include <cmath>
#include <set>
#include <string_view>

#include <json.hpp>

#include "igsf/errors.hpp"

namespace igsf {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& message) { throw ConfigError("config: " + message); }

void require_keys(const json& obj, const char* where, const std::set<std::string>& allowed) {
  for (const auto& item : obj.items())
    if (allowed.find(item.key()) == allowed.end())
      fail(std::string(where) + ": unknown field \"" + item.key() + "\"");
}

template <typename T>
T get_field(const json& obj, const char* key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    fail(std::string("field \"") + key + "\" has the wrong type");
  }
}

Vector get_vector(const json& obj, const char* key, const Vector& fallback, int size) {
  if (!obj.contains(key)) return fallback;
  std::vector<double> values;
  try {
    values = obj.at(key).get<std::vector<double>>();
  } catch (const json::exception&) {
    fail(std::string("field \"") + key + "\" must be an array of numbers");
  }
  if (size >= 0 && static_cast<int>(values.size()) != size)
    fail(std::string("field \"") + key + "\" must have length " + std::to_string(size));
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

Matrix get_matrix(const json& obj, const char* key, const Matrix& fallback, int rows, int cols) {
  if (!obj.contains(key)) return fallback;
  std::vector<std::vector<double>> values;
  try {
    values = obj.at(key).get<std::vector<std::vector<double>>>();
  } catch (const json::exception&) {
    fail(std::string("field \"") + key + "\" must be an array of numeric rows");
  }
  const int r = static_cast<int>(values.size());
  if (rows >= 0 && r != rows)
    fail(std::string("field \"") + key + "\" must have " + std::to_string(rows) + " rows");
  const int c = r > 0 ? static_cast<int>(values[0].size()) : 0;
  if (cols >= 0 && c != cols)
    fail(std::string("field \"") + key + "\" must have " + std::to_string(cols) + " columns");
  Matrix out(r, c);
  for (int i = 0; i < r; ++i) {
    if (static_cast<int>(values[static_cast<std::size_t>(i)].size()) != c)
      fail(std::string("field \"") + key + "\" has ragged rows");
    for (int j = 0; j < c; ++j)
      out(i, j) = values[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  return out;
}

json vector_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

json matrix_json(const Matrix& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    out.push_back(row);
  }
  return out;
}

AdpKind parse_schedule(const std::string& text) {
  if (text == "exp-decay") return AdpKind::ExpDecay;
  if (text == "constant-then-zero") return AdpKind::ConstantThenZero;
  fail("field \"schedule\" must be \"exp-decay\" or \"constant-then-zero\"");
}

std::string schedule_name(AdpKind kind) {
  return kind == AdpKind::ExpDecay ? "exp-decay" : "constant-then-zero";
}

void apply_growth_overrides(const json& model, GrowthModelParams& p) {
  require_keys(model, "model", {"family", "gamma1", "gamma2", "theta", "h", "process_var",
                                "meas_var", "steps"});
  p.gamma1 = get_field(model, "gamma1", p.gamma1);
  p.gamma2 = get_field(model, "gamma2", p.gamma2);
  p.theta = get_field(model, "theta", p.theta);
  p.h = get_field(model, "h", p.h);
  p.process_var = get_field(model, "process_var", p.process_var);
  p.meas_var = get_field(model, "meas_var", p.meas_var);
  p.steps = get_field(model, "steps", p.steps);
  if (!(p.h > 0.0)) fail("field \"h\" must be positive");
  if (p.process_var < 0.0) fail("field \"process_var\" must be nonnegative");
  if (p.meas_var < 0.0) fail("field \"meas_var\" must be nonnegative");
  if (p.steps < 1) fail("field \"steps\" must be at least 1");
}

void apply_tracking_overrides(const json& model, TrackingScenario& sc) {
  require_keys(model, "model",
               {"family", "dt", "horizon", "init_state", "maneuvers", "truth_accel_cov",
                "filter_accel_cov", "sensor", "meas_cov"});
  sc.dt = get_field(model, "dt", sc.dt);
  sc.horizon = get_field(model, "horizon", sc.horizon);
  sc.init_state = get_vector(model, "init_state", sc.init_state, 4);
  if (model.contains("maneuvers")) {
    if (!model.at("maneuvers").is_array()) fail("field \"maneuvers\" must be an array");
    sc.maneuvers.clear();
    for (const json& entry : model.at("maneuvers")) {
      if (!entry.is_object()) fail("field \"maneuvers\" entries must be objects");
      require_keys(entry, "maneuvers entry", {"time", "ax", "ay"});
      Maneuver m;
      m.time = get_field(entry, "time", 0.0);
      m.ax = get_field(entry, "ax", 0.0);
      m.ay = get_field(entry, "ay", 0.0);
      sc.maneuvers.push_back(m);
    }
  }
  sc.truth_accel_cov = get_matrix(model, "truth_accel_cov", sc.truth_accel_cov, 2, 2);
  sc.filter_accel_cov = get_matrix(model, "filter_accel_cov", sc.filter_accel_cov, 2, 2);
  if (model.contains("sensor")) {
    const Vector sensor = get_vector(model, "sensor", Vector(), 2);
    sc.sensor_x = sensor[0];
    sc.sensor_y = sensor[1];
  }
  sc.meas_cov = get_matrix(model, "meas_cov", sc.meas_cov, 2, 2);
  if (!(sc.dt > 0.0)) fail("field \"dt\" must be positive");
  if (!(sc.horizon > 0.0)) fail("field \"horizon\" must be positive");
}

void set_frame_floors(ExperimentSetup& setup, int floors) {
  if (floors < 1) fail("field \"floors\" must be at least 1");
  setup.frame = default_frame_spec(floors);
  setup.report_components.resize(static_cast<std::size_t>(2 * floors));
  for (int j = 0; j < 2 * floors; ++j)
    setup.report_components[static_cast<std::size_t>(j)] = 2 * floors + j;
}

// "frame<k>" for k other than the named benchmarks selects a k-floor frame
// with the frame5 defaults.
int custom_frame_floors(const std::string& experiment) {
  if (experiment.rfind("frame", 0) != 0 || experiment.size() == 5) return -1;
  int floors = 0;
  for (std::size_t i = 5; i < experiment.size(); ++i) {
    const char ch = experiment[i];
    if (ch < '0' || ch > '9') return -1;
    floors = floors * 10 + (ch - '0');
    if (floors > 1000) return -1;
  }
  return floors >= 1 ? floors : -1;
}

void apply_frame_overrides(const json& model, ExperimentSetup& setup) {
  require_keys(model, "model",
               {"family", "floors", "stiffness", "damping", "force_amp", "force_freq",
                "process_noise", "meas_noise_fraction", "h", "horizon", "param_prior_mean",
                "param_prior_std", "param_pseudo_noise_scale", "state_prior_std"});
  ShearFrameSpec& spec = setup.frame;
  if (model.contains("floors")) {
    const int floors = get_field(model, "floors", spec.floors);
    if (floors != spec.floors) set_frame_floors(setup, floors);
  }
  const int n = spec.floors;
  auto scalar_or_vector = [&](const char* key, const Vector& fallback) {
    if (!model.contains(key)) return fallback;
    if (model.at(key).is_number())
      return Vector(Vector::Constant(n, model.at(key).get<double>()));
    return get_vector(model, key, fallback, n);
  };
  const bool params_touched = model.contains("stiffness") || model.contains("damping");
  spec.stiffness = scalar_or_vector("stiffness", spec.stiffness);
  spec.damping = scalar_or_vector("damping", spec.damping);
  if (params_touched) {
    // Re-center the parameter prior on the (possibly new) true values.
    Vector nominal(2 * n);
    nominal << spec.stiffness, spec.damping;
    spec.param_prior_mean = 1.3 * nominal;
    spec.param_prior_std = 0.2 * nominal;
  }
  spec.force_amp = get_field(model, "force_amp", spec.force_amp);
  spec.force_freq = get_field(model, "force_freq", spec.force_freq);
  spec.process_noise = get_field(model, "process_noise", spec.process_noise);
  spec.meas_noise_fraction = get_field(model, "meas_noise_fraction", spec.meas_noise_fraction);
  spec.h = get_field(model, "h", spec.h);
  spec.horizon = get_field(model, "horizon", spec.horizon);
  spec.param_prior_mean = get_vector(model, "param_prior_mean", spec.param_prior_mean, 2 * n);
  spec.param_prior_std = get_vector(model, "param_prior_std", spec.param_prior_std, 2 * n);
  spec.param_pseudo_noise_scale =
      get_field(model, "param_pseudo_noise_scale", spec.param_pseudo_noise_scale);
  spec.state_prior_std = get_field(model, "state_prior_std", spec.state_prior_std);
  if (!(spec.h > 0.0)) fail("field \"h\" must be positive");
  if (!(spec.horizon > 0.0)) fail("field \"horizon\" must be positive");
  if (spec.meas_noise_fraction < 0.0) fail("field \"meas_noise_fraction\" must be nonnegative");
}

FilterSpec parse_filter_entry(const json& entry, const ExperimentSetup& setup) {
  std::string name;
  const json* obj = nullptr;
  if (entry.is_string()) {
    name = entry.get<std::string>();
  } else if (entry.is_object()) {
    if (!entry.contains("name")) fail("filter entry is missing field \"name\"");
    name = get_field(entry, "name", std::string());
    obj = &entry;
  } else {
    fail("filter entries must be names or objects");
  }

  FilterKind kind;
  try {
    kind = parse_filter_kind(name);
  } catch (const ParameterError&) {
    fail("field \"name\": unknown filter \"" + name + "\"");
  }
  FilterSpec f = resolve_filter(kind, setup);
  if (obj != nullptr) {
    require_keys(*obj, "filter entry",
                 {"name", "label", "ensemble", "mixands", "iterations", "alpha1", "schedule",
                  "epsilon"});
    f.label = get_field(*obj, "label", f.label);
    f.ensemble = get_field(*obj, "ensemble", f.ensemble);
    f.n_mixands = get_field(*obj, "mixands", f.n_mixands);
    f.iterations = get_field(*obj, "iterations", f.iterations);
    f.alpha1 = get_field(*obj, "alpha1", f.alpha1);
    if (obj->contains("schedule"))
      f.schedule = parse_schedule(get_field(*obj, "schedule", std::string()));
    if (obj->contains("epsilon")) {
      const std::string mode = get_field(*obj, "epsilon", std::string());
      if (mode == "ridge")
        f.strict_epsilon_zero = false;
      else if (mode == "zero")
        f.strict_epsilon_zero = true;
      else
        fail("field \"epsilon\" must be \"ridge\" or \"zero\"");
    }
  }

  const std::string where = "filter \"" + f.label + "\"";
  if (f.label.empty()) fail("field \"label\" must not be empty");
  if (f.ensemble < 2) fail(where + ": field \"ensemble\" must be at least 2");
  if (f.n_mixands < 1) fail(where + ": field \"mixands\" must be at least 1");
  if (f.ensemble % f.n_mixands != 0)
    fail(where + ": field \"ensemble\" (N) must be divisible by field \"mixands\" (N_G)");
  if (f.iterations < 0) fail(where + ": field \"iterations\" must be nonnegative");
  if (!(f.alpha1 >= 0.0) || !std::isfinite(f.alpha1))
    fail(where + ": field \"alpha1\" must be a nonnegative number");
  return f;
}

const char* experiment_family(const ExperimentSetup& setup) {
  switch (setup.kind) {
    case ExperimentKind::Growth: return "growth";
    case ExperimentKind::Tracking: return "tracking";
    default: return "frame";
  }
}

}  // namespace

Config parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(std::string("syntax error: ") + e.what());
  }
  if (!root.is_object()) fail("top level must be an object");
  require_keys(root, "top level",
               {"experiment", "model", "runs", "seed", "out", "threads", "filters", "spread",
                "stratify_scale", "prior_mean", "prior_cov"});

  std::string experiment = get_field(root, "experiment", std::string());
  const json model = root.contains("model") ? root.at("model") : json::object();
  if (!model.is_object()) fail("field \"model\" must be an object");

  if (experiment.empty()) {
    if (!model.contains("family"))
      fail("either field \"experiment\" or field \"model.family\" is required");
    const std::string family = get_field(model, "family", std::string());
    if (family == "growth" || family == "tracking") {
      experiment = family;
    } else if (family == "frame") {
      experiment = "frame" + std::to_string(get_field(model, "floors", 5));
    } else {
      fail("field \"model.family\" must be \"growth\", \"tracking\" or \"frame\"");
    }
  }

  Config config;
  try {
    config.setup = make_experiment(experiment);
  } catch (const ParameterError&) {
    const int floors = custom_frame_floors(experiment);
    if (floors < 1) fail("field \"experiment\": unknown experiment \"" + experiment + "\"");
    config.setup = make_experiment("frame5");
    config.setup.name = experiment;
    set_frame_floors(config.setup, floors);
  }
  if (model.contains("family")) {
    const std::string family = get_field(model, "family", std::string());
    if (family != experiment_family(config.setup))
      fail("field \"model.family\" does not match the selected experiment");
  }

  switch (config.setup.kind) {
    case ExperimentKind::Growth:
      apply_growth_overrides(model, config.setup.growth);
      break;
    case ExperimentKind::Tracking:
      apply_tracking_overrides(model, config.setup.tracking);
      break;
    case ExperimentKind::Frame5:
    case ExperimentKind::Frame20: {
      apply_frame_overrides(model, config.setup);
      if (root.contains("experiment") == false)
        config.setup.name = "frame" + std::to_string(config.setup.frame.floors);
      break;
    }
  }

  if (root.contains("spread")) {
    const std::string spread = get_field(root, "spread", std::string());
    if (spread == "shared")
      config.setup.spread = BankInit::Spread::Shared;
    else if (spread == "stratified")
      config.setup.spread = BankInit::Spread::Stratified;
    else
      fail("field \"spread\" must be \"shared\" or \"stratified\"");
  }
  config.setup.stratify_scale = get_field(root, "stratify_scale", config.setup.stratify_scale);
  if (config.setup.prior_mean.size() > 0) {
    const int dim = static_cast<int>(config.setup.prior_mean.size());
    config.setup.prior_mean = get_vector(root, "prior_mean", config.setup.prior_mean, dim);
    config.setup.prior_cov = get_matrix(root, "prior_cov", config.setup.prior_cov, dim, dim);
  } else if (root.contains("prior_mean") || root.contains("prior_cov")) {
    fail("fields \"prior_mean\"/\"prior_cov\" are derived for this experiment");
  }

  config.runs = get_field(root, "runs", config.setup.default_runs);
  if (config.runs < 1) fail("field \"runs\" must be at least 1");
  config.seed = get_field(root, "seed", static_cast<std::uint64_t>(12345));
  config.out_dir = get_field(root, "out", std::string("out"));
  if (config.out_dir.empty()) fail("field \"out\" must not be empty");
  config.threads = get_field(root, "threads", 1);
  if (config.threads < 1) fail("field \"threads\" must be at least 1");

  if (root.contains("filters")) {
    if (!root.at("filters").is_array() || root.at("filters").empty())
      fail("field \"filters\" must be a non-empty array");
    for (const json& entry : root.at("filters"))
      config.filters.push_back(parse_filter_entry(entry, config.setup));
  } else {
    config.filters.push_back(resolve_filter(FilterKind::IgsfBank, config.setup));
  }
  for (std::size_t a = 0; a < config.filters.size(); ++a)
    for (std::size_t b = a + 1; b < config.filters.size(); ++b)
      if (config.filters[a].label == config.filters[b].label)
        fail("duplicate filter label \"" + config.filters[a].label +
             "\"; set distinct \"label\" fields");
  return config;
}

std::string serialize_config(const Config& config) {
  json root;
  root["experiment"] = config.setup.name;
  root["runs"] = config.runs;
  root["seed"] = config.seed;
  root["out"] = config.out_dir;
  root["threads"] = config.threads;
  root["spread"] =
      config.setup.spread == BankInit::Spread::Shared ? "shared" : "stratified";
  root["stratify_scale"] = config.setup.stratify_scale;
  if (config.setup.prior_mean.size() > 0) {
    root["prior_mean"] = vector_json(config.setup.prior_mean);
    root["prior_cov"] = matrix_json(config.setup.prior_cov);
  }

  json model;
  switch (config.setup.kind) {
    case ExperimentKind::Growth: {
      const GrowthModelParams& p = config.setup.growth;
      model["family"] = "growth";
      model["gamma1"] = p.gamma1;
      model["gamma2"] = p.gamma2;
      model["theta"] = p.theta;
      model["h"] = p.h;
      model["process_var"] = p.process_var;
      model["meas_var"] = p.meas_var;
      model["steps"] = p.steps;
      break;
    }
    case ExperimentKind::Tracking: {
      const TrackingScenario& sc = config.setup.tracking;
      model["family"] = "tracking";
      model["dt"] = sc.dt;
      model["horizon"] = sc.horizon;
      model["init_state"] = vector_json(sc.init_state);
      json maneuvers = json::array();
      for (const Maneuver& m : sc.maneuvers)
        maneuvers.push_back({{"time", m.time}, {"ax", m.ax}, {"ay", m.ay}});
      model["maneuvers"] = maneuvers;
      model["truth_accel_cov"] = matrix_json(sc.truth_accel_cov);
      model["filter_accel_cov"] = matrix_json(sc.filter_accel_cov);
      model["sensor"] = json::array({sc.sensor_x, sc.sensor_y});
      model["meas_cov"] = matrix_json(sc.meas_cov);
      break;
    }
    case ExperimentKind::Frame5:
    case ExperimentKind::Frame20: {
      const ShearFrameSpec& spec = config.setup.frame;
      model["family"] = "frame";
      model["floors"] = spec.floors;
      model["stiffness"] = vector_json(spec.stiffness);
      model["damping"] = vector_json(spec.damping);
      model["force_amp"] = spec.force_amp;
      model["force_freq"] = spec.force_freq;
      model["process_noise"] = spec.process_noise;
      model["meas_noise_fraction"] = spec.meas_noise_fraction;
      model["h"] = spec.h;
      model["horizon"] = spec.horizon;
      model["param_prior_mean"] = vector_json(spec.param_prior_mean);
      model["param_prior_std"] = vector_json(spec.param_prior_std);
      model["param_pseudo_noise_scale"] = spec.param_pseudo_noise_scale;
      model["state_prior_std"] = spec.state_prior_std;
      break;
    }
  }
  root["model"] = model;

  json filters = json::array();
  for (const FilterSpec& f : config.filters) {
    json entry;
    entry["name"] = std::string(filter_kind_name(f.kind));
    entry["label"] = f.label;
    entry["ensemble"] = f.ensemble;
    entry["mixands"] = f.n_mixands;
    entry["iterations"] = f.iterations;
    entry["alpha1"] = f.alpha1;
    entry["schedule"] = schedule_name(f.schedule);
    entry["epsilon"] = f.strict_epsilon_zero ? "zero" : "ridge";
    filters.push_back(entry);
  }
  root["filters"] = filters;
  return root.dump(2) + "\n";
}

bool config_equal(const Config& a, const Config& b) {
  return serialize_config(a) == serialize_config(b);
}

}  // namespace igsf
