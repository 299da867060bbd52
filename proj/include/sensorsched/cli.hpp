#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "sensorsched/errors.hpp"
#include "sensorsched/scheduler.hpp"
#include "sensorsched/baselines.hpp"

namespace sensorsched::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInfeasible = 2;
inline constexpr int kExitValidation = 3;
inline constexpr int kExitNumeric = 4;

int exit_code_for(ErrorKind kind);

/// Runs one command line (without the program name). Results that have no
/// output path go to `out`; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Non-finite numbers become the strings "inf" / "-inf".
nlohmann::json number(double value);
nlohmann::json report_to_json(const PerformanceReport& report);
nlohmann::json selection_to_json(const SelectionResult& result, const Matrix& A);

}  // namespace sensorsched::cli
