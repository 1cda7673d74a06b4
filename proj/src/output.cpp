#include "igsf/output.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <string>

#include <json.hpp>

#include "igsf/errors.hpp"

namespace igsf {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

void write_atomic(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("output: cannot open \"" + tmp.string() + "\" for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw ConfigError("output: write to \"" + tmp.string() + "\" failed");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw ConfigError("output: renaming \"" + tmp.string() + "\" failed: " + ec.message());
}

void append_row(std::string& out, std::initializer_list<std::string> cells) {
  bool first = true;
  for (const std::string& cell : cells) {
    if (!first) out += ',';
    out += cell;
    first = false;
  }
  out += '\n';
}

std::string istr(long long v) { return std::to_string(v); }

std::string rmse_csv(const RunArtifacts& art, const FilterArtifacts& fa) {
  std::string out = "step,time,component,rmse\n";
  const std::vector<int>& comps = art.setup.report_components;
  for (Eigen::Index i = 0; i < fa.rmse.rows(); ++i)
    for (std::size_t j = 0; j < comps.size(); ++j)
      append_row(out, {istr(i + 1), format_number(art.times[static_cast<std::size_t>(i)]),
                       istr(comps[j]),
                       format_number(fa.rmse(i, static_cast<Eigen::Index>(j)))});
  return out;
}

std::string estimates_csv(const RunArtifacts& art, const FilterArtifacts& fa) {
  std::string out = "step,time,run,component,estimate,truth\n";
  const std::vector<int>& comps = art.setup.report_components;
  for (int m = 0; m < art.runs; ++m) {
    const auto& est = fa.estimates[static_cast<std::size_t>(m)];
    const auto& truth = art.truths[static_cast<std::size_t>(m)];
    for (std::size_t i = 0; i < est.size(); ++i)
      for (const int c : comps)
        append_row(out, {istr(static_cast<long long>(i) + 1), format_number(art.times[i]),
                         istr(m), istr(c), format_number(est[i][c]),
                         format_number(truth[i][c])});
  }
  return out;
}

std::string observations_csv(const RunArtifacts& art) {
  std::string out = "step,time,run,component,value\n";
  for (int m = 0; m < art.runs; ++m) {
    const auto& obs = art.observations[static_cast<std::size_t>(m)];
    for (std::size_t i = 0; i < obs.size(); ++i)
      for (Eigen::Index c = 0; c < obs[i].z.size(); ++c)
        append_row(out, {istr(static_cast<long long>(i) + 1), format_number(obs[i].t), istr(m),
                         istr(c), format_number(obs[i].z[c])});
  }
  return out;
}

std::string meta_json(const RunArtifacts& art, const Config& config, const FilterSpec& f) {
  json meta;
  meta["config"] = json::parse(serialize_config(config));
  meta["experiment"] = art.setup.name;
  meta["seed"] = art.seed;
  meta["runs"] = art.runs;
  json filter;
  filter["name"] = std::string(filter_kind_name(f.kind));
  filter["label"] = f.label;
  filter["ensemble"] = f.ensemble;
  filter["mixands"] = f.n_mixands;
  filter["iterations"] = f.iterations;
  filter["alpha1"] = f.alpha1;
  filter["schedule"] =
      f.schedule == AdpKind::ExpDecay ? "exp-decay" : "constant-then-zero";
  filter["epsilon"] = f.strict_epsilon_zero ? "zero" : "ridge";
  meta["filter"] = filter;
  json schedule_values = json::array();
  if (f.iterations > 0) {
    const AdpSchedule schedule{f.alpha1, f.schedule, f.iterations};
    for (int l = 1; l <= f.iterations; ++l) schedule_values.push_back(adp_value(schedule, l));
  }
  meta["schedule_values"] = schedule_values;
  meta["stream_prefix"] =
      "exp=" + art.setup.name + "/run=<m>/filter=" + std::string(filter_stream_kind(f.kind));
  meta["report_components"] = art.setup.report_components;
  return meta.dump(2) + "\n";
}

}  // namespace

std::string format_number(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof buffer, "%.17g", value);
  return buffer;
}

std::filesystem::path write_artifacts(const RunArtifacts& art, const Config& config) {
  const fs::path exp_dir = fs::path(config.out_dir) / art.setup.name;
  for (const FilterArtifacts& fa : art.filters) {
    const fs::path dir = exp_dir / fa.spec.label;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec)
      throw ConfigError("output: cannot create directory \"" + dir.string() +
                        "\": " + ec.message());
    write_atomic(dir / "rmse.csv", rmse_csv(art, fa));
    write_atomic(dir / "estimates.csv", estimates_csv(art, fa));
    write_atomic(dir / "observations.csv", observations_csv(art));
    write_atomic(dir / "meta", meta_json(art, config, fa.spec));
  }
  return exp_dir;
}

std::filesystem::path write_summary(const RunArtifacts& art, const Config& config) {
  const fs::path exp_dir = fs::path(config.out_dir) / art.setup.name;
  std::error_code ec;
  fs::create_directories(exp_dir, ec);
  if (ec)
    throw ConfigError("output: cannot create directory \"" + exp_dir.string() +
                      "\": " + ec.message());

  const std::vector<int>& comps = art.setup.report_components;
  std::string out = "kind,filter_a,filter_b,component,value\n";

  for (const FilterArtifacts& fa : art.filters)
    for (std::size_t j = 0; j < comps.size(); ++j) {
      double acc = 0.0;
      for (Eigen::Index i = 0; i < fa.rmse.rows(); ++i) {
        const double r = fa.rmse(i, static_cast<Eigen::Index>(j));
        acc += r * r;
      }
      const double value = std::sqrt(acc / static_cast<double>(fa.rmse.rows()));
      append_row(out, {"time_avg_rmse", fa.spec.label, "", istr(comps[j]),
                       format_number(value)});
    }

  // Per-run per-component time-averaged RMSE feeding the win rates.
  std::vector<std::vector<Vector>> per_run(art.filters.size());
  for (std::size_t fi = 0; fi < art.filters.size(); ++fi) {
    per_run[fi].resize(static_cast<std::size_t>(art.runs));
    for (int m = 0; m < art.runs; ++m)
      per_run[fi][static_cast<std::size_t>(m)] =
          run_time_avg_rmse(art.filters[fi].estimates[static_cast<std::size_t>(m)],
                            art.truths[static_cast<std::size_t>(m)], comps);
  }

  for (std::size_t a = 0; a < art.filters.size(); ++a)
    for (std::size_t b = 0; b < art.filters.size(); ++b) {
      if (a == b) continue;
      for (std::size_t j = 0; j < comps.size(); ++j) {
        double wins = 0.0;
        for (int m = 0; m < art.runs; ++m) {
          const double ra = per_run[a][static_cast<std::size_t>(m)][static_cast<Eigen::Index>(j)];
          const double rb = per_run[b][static_cast<std::size_t>(m)][static_cast<Eigen::Index>(j)];
          if (ra < rb)
            wins += 1.0;
          else if (ra == rb)
            wins += 0.5;
        }
        append_row(out, {"win_rate", art.filters[a].spec.label, art.filters[b].spec.label,
                         istr(comps[j]), format_number(wins / static_cast<double>(art.runs))});
      }
    }

  write_atomic(exp_dir / "summary.csv", out);
  return exp_dir;
}

}  // namespace igsf
