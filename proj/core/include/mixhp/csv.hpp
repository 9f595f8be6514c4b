#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mixhp/dataset.hpp"

namespace mixhp {

// Strict numeric CSV: header row required, comma separated, '.' decimal,
// UTF-8, no quoting. Non-numeric and non-finite cells are rejected with
// their row/column position rather than dropped.
Dataset read_csv(const std::filesystem::path& path, const std::string& response_column,
                 const std::vector<std::string>& exempt_columns = {},
                 bool intercept = false);

// Response column first, then the predictors, in order; values written with
// full round-trip precision.
void write_csv(const Dataset& data, const std::filesystem::path& path,
               const std::string& response_name = "y");

}  // namespace mixhp
