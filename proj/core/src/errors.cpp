#include "adx3/errors.h"

namespace adx3 {

std::string describe(const std::vector<Violation>& violations) {
  std::string out;
  for (const auto& v : violations) {
    if (!out.empty()) out += "; ";
    out += v.rule;
    if (!v.event_id.empty()) out += " [" + v.event_id + "]";
    if (!v.message.empty()) out += ": " + v.message;
  }
  return out;
}

ValidationFailed::ValidationFailed(std::vector<Violation> violations)
    : Error("validation failed: " + describe(violations)), violations_(std::move(violations)) {}

RejectedWithViolations::RejectedWithViolations(std::vector<Violation> violations)
    : Error("revision rejected: " + describe(violations)), violations_(std::move(violations)) {}

}  // namespace adx3
