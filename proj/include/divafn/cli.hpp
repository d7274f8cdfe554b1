#ifndef DIVAFN_CLI_HPP
#define DIVAFN_CLI_HPP

#include <string>
#include <vector>

#include "json.hpp"

namespace divafn {

/// Runs one CLI invocation (args exclude the program name) and returns the
/// process exit code: 0 success, 2 configuration problem, 3 divergence,
/// 4 data or solver failure, 5 gradient-check failure.
int run_cli(const std::vector<std::string>& args);

/// Validates the metrics JSON schema: accuracy in [0, 1], per_class numbers,
/// a square confusion matrix consistent with accuracy. Throws FormatError.
void validate_metrics_json(const nlohmann::json& metrics);

}  // namespace divafn

#endif  // DIVAFN_CLI_HPP
