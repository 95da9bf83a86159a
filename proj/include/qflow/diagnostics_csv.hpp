#pragma once

#include <string>
#include <vector>

#include "qflow/flow.hpp"

namespace qflow {

// diagnostics.csv serialization: header
//   t,dt,E,E_f,alpha,residual_l2,max_u,min_u,volume_err,theta_0..theta_n,r_star
// with one row per recorded step, numbers at 17 significant digits, and an
// empty r_star field on rows without a concentration scan.
std::string diagnostics_csv_header(int n);
std::string diagnostics_csv_row(const DiagnosticsRecord& rec);
void write_diagnostics_csv(const std::string& path,
                           const std::vector<DiagnosticsRecord>& records, int n);

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows; // NaN for empty fields
  int column(const std::string& name) const;
};

CsvTable read_csv(const std::string& path);

} // namespace qflow
