#pragma once

#include <string>
#include <vector>

#include "ipmlab/types.hpp"

namespace ipmlab::measures {

// Comma-separated numeric table, one row per point.  A leading line whose
// first field does not parse as a number is treated as a header and
// skipped on read.
Mat read_csv_matrix(const std::string& path);

// Doubles are written with %.17g so a write/read round trip is exact.
void write_csv_matrix(const std::string& path, const Mat& m,
                      const std::vector<std::string>& header = {});

std::string format_double(double v);  // %.17g, locale independent

}  // namespace ipmlab::measures
