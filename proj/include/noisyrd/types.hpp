#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace noisyrd {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;
using VectorRef = Eigen::Ref<const Eigen::VectorXd>;

/// Error in user-provided data (bad CSV, inconsistent treatment column, ...).
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Error raised by the interior-point solver (infeasible, unbounded, ...).
class SolverError : public std::runtime_error {
 public:
  explicit SolverError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Pipeline error tagged with the stage that raised it.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& msg)
      : std::runtime_error("[" + stage + "] " + msg), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
  double length() const { return upper - lower; }
  bool contains(double x) const { return x >= lower && x <= upper; }
};

}  // namespace noisyrd
