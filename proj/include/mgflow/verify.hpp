#pragma once

// Acceptance suite: twelve numbered criteria, each reported on one line.

#include "mgflow/scenario.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace mgflow {

enum class Suite { Fast, Full };

Suite suite_from_string(std::string_view name);

struct CriterionResult {
  int id = 0;
  std::string title;
  bool pass = false;
  std::string measured;
  std::string expected;
  double seconds = 0.0;
};

struct VerifyOptions {
  Suite suite = Suite::Fast;
  std::vector<int> only;           ///< empty runs all twelve
  std::ostream* progress = nullptr;  ///< one line per criterion as it finishes
};

std::vector<CriterionResult> run_verification(const VerifyOptions& options);

/// "[PASS] 1 torus convergence threshold | measured ... | expected ... | 12.3 s"
std::string format_result(const CriterionResult& r);

/// Torus threshold criterion with the field multiplied by `field_sign`; -1
/// emulates a sign error in the Lorentz term and must fail.
CriterionResult check_torus_threshold(double field_sign = 1.0);

/// Prints the report and returns kExitOk or kExitVerify.
int cmd_verify(Suite suite, std::ostream& os);

}  // namespace mgflow
