#pragma once

#include <string>

#include <nlohmann/json.hpp>

namespace flaresim {

// Parses the TOML subset used by scenario files into a json tree: [table]
// headers, [[array-of-table]] headers, dotted keys, strings with the common
// escapes, integers, floats, booleans, and (nested) single-line arrays.
// Errors carry line numbers. JSON scenarios bypass this entirely, so both
// formats validate through one code path.
nlohmann::json toml_lite_parse(const std::string& text);

}  // namespace flaresim
