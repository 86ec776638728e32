#pragma once

#include <stdexcept>
#include <string>

namespace tdcgl {

/// Field values or steps grew without bound during forward evolution.
class NumericalBlowup : public std::runtime_error {
 public:
  NumericalBlowup(const std::string& what, long step = -1)
      : std::runtime_error(what), step_(step) {}
  long step() const { return step_; }

 private:
  long step_;
};

/// An iterative solver stopped without meeting its tolerance.
class NonConvergence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed files, configs or mismatched inputs read from disk.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace tdcgl
