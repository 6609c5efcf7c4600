#pragma once

#include "pxgen/validation.hpp"

#include <json.hpp>

#include <iosfwd>
#include <string>
#include <vector>

namespace pxgen::toolkit {

// args excludes the program name. Exit status: 0 success, 1 usage error,
// 2 data/format/io error.
int cli_dispatch(const std::vector<std::string>& args);
int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Final-step and per-step medians over seeds, as printed by `report`.
nlohmann::json summarize_report(const ValidationReport& report);

}  // namespace pxgen::toolkit
