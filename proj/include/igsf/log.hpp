#pragma once

#include <string>

namespace igsf {

// Writes one warning line to stderr. Thread safe; never throws.
void log_warning(const std::string& message);

// Enables or disables warning output (on by default). Long Monte Carlo
// sweeps that expect and tolerate per-step warnings can switch them off.
void set_log_warnings(bool enabled);

}  // namespace igsf
