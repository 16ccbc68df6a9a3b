// Copyright 2026 The Availscope Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// availctl subcommands. Exit codes: 0 success, 1 domain error, 2 usage.

#ifndef AVAILSCOPE_CLI_HPP_
#define AVAILSCOPE_CLI_HPP_

#include <iosfwd>
#include <string>
#include <vector>

#include "availscope/model.hpp"

namespace availscope {

// args[0] is the program name.
int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Numeric CSV helpers shared with the tests. A first line whose first
// field is not a number is taken as the header. Empty cells are missing.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::optional<double>>> rows;
};
CsvTable read_csv(const std::string& path);

// One column (or the named one) as a series; a two-column file without a
// name is read as (ts_ms, value). Missing cells are skipped.
MetricSeries series_from_csv(const CsvTable& table, const std::string& column = {});
// Every column becomes a metric of one anonymous service; rows map 1:1.
MetricMatrix matrix_from_csv(const CsvTable& table);

}  // namespace availscope

#endif  // AVAILSCOPE_CLI_HPP_
