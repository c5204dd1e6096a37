#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace lmopt {

/// A landmark coincides (or nearly coincides) with an evaluation point while
/// the bearing model is unsmoothed; carries the offending landmark index.
class DegenerateGeometryError : public std::domain_error {
 public:
  DegenerateGeometryError(const std::string& what, int landmark_index)
      : std::domain_error(what), landmark_index(landmark_index) {}
  int landmark_index;
};

class InvalidScenarioError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class InfeasibleScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NonConvergenceError : public std::runtime_error {
 public:
  NonConvergenceError(const std::string& what, std::vector<std::string> trace)
      : std::runtime_error(what), trace(std::move(trace)) {}
  std::vector<std::string> trace;
};

}  // namespace lmopt
