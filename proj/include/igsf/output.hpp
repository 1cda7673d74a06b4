// Artifact writing: per-filter CSV files (RMSE series, per-run estimates,
// observations) plus a resolved-config meta record, and the cross-filter
// summary table. All files are written atomically (temp file + rename) with a
// platform-stable numeric format.
#pragma once

#include <filesystem>

#include "igsf/config.hpp"

namespace igsf {

// Writes, under <out>/<experiment>/<filter label>/:
//   rmse.csv          step,time,component,rmse
//   estimates.csv     step,time,run,component,estimate,truth
//   observations.csv  step,time,run,component,value
//   meta              resolved config, seed, stream naming, schedule values
// Returns the experiment directory. Unwritable paths raise ConfigError.
std::filesystem::path write_artifacts(const RunArtifacts& art, const Config& config);

// Writes <out>/<experiment>/summary.csv with rows
//   kind,filter_a,filter_b,component,value
// where kind is "time_avg_rmse" (filter_b empty; value = sqrt of the
// step-mean of squared RMSE) or "win_rate" (fraction of paired runs in which
// filter_a's per-run time-averaged RMSE is lower; exact ties count 0.5).
std::filesystem::path write_summary(const RunArtifacts& art, const Config& config);

// 17-significant-digit decimal formatting used by every CSV writer.
std::string format_number(double value);

}  // namespace igsf
