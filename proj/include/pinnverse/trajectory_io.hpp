#pragma once

#include "pinnverse/lindblad.hpp"

#include <iosfwd>
#include <stdexcept>
#include <string>

namespace pinnverse {

/// Malformed trajectory file. `line()` is the 1-based line number (0 when not tied to a line).
class IngestionError : public std::runtime_error {
 public:
  IngestionError(const std::string& what, int line)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

/// Header `t,<obs...>` (S_mu_nu for two qubits, sx,sy,sz for one), 17 significant digits.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);
void write_trajectory_csv(const std::string& path, const Trajectory& traj);

/// Columns are matched by name, so any column order is accepted. Extra columns are rejected.
Trajectory read_trajectory_csv(std::istream& in);
Trajectory read_trajectory_csv(const std::string& path);

}  // namespace pinnverse
