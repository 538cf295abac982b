// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace radmot {

/// Input data violates a documented invariant (bad pose, NaN coordinate, duplicate id).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A file could not be opened, read, or parsed. The message names the file.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller broke an API precondition (shape mismatch, bad index).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Training produced a non-finite loss.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, int stage, int epoch, long step)
      : std::runtime_error(what), stage_(stage), epoch_(epoch), step_(step) {}

  int stage() const noexcept { return stage_; }
  int epoch() const noexcept { return epoch_; }
  long step() const noexcept { return step_; }

 private:
  int stage_;
  int epoch_;
  long step_;
};

#define RADMOT_EXPECT(cond, msg)                            \
  do {                                                       \
    if (!(cond)) throw ::radmot::ContractViolation(msg);    \
  } while (false)

}  // namespace radmot
