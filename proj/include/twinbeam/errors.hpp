#pragma once

#include <stdexcept>
#include <string>

namespace twinbeam {

/// Invalid argument or configuration value (CLI exit code 2).
class parameter_error : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed input data: config files, dataset CSV (CLI exit code 1).
class data_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Numerical guard tripped, e.g. beam intensity leaking into the window
/// edge, or a diagnostic requested on a zero field (CLI exit code 3).
class guard_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A hitching onset could not be located (separation still growing at the
/// end of the medium). A scientific outcome, not a tool failure.
class onset_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace twinbeam
