#include <cmath>
#include <fstream>
#include <sstream>

#include "qflow/diagnostics_csv.hpp"
#include "qflow/errors.hpp"
#include "qflow/io.hpp"

namespace qflow {

std::string diagnostics_csv_header(int n) {
  std::string h = "t,dt,E,E_f,alpha,residual_l2,max_u,min_u,volume_err";
  for (int d = 0; d <= n; ++d) h += ",theta_" + std::to_string(d);
  h += ",r_star";
  return h;
}

std::string diagnostics_csv_row(const DiagnosticsRecord& rec) {
  std::string out;
  out += format_g17(rec.t);
  out += ',' + format_g17(rec.dt);
  out += ',' + format_g17(rec.E);
  out += ',' + format_g17(rec.E_f);
  out += ',' + format_g17(rec.alpha);
  out += ',' + format_g17(rec.residual_l2);
  out += ',' + format_g17(rec.max_u);
  out += ',' + format_g17(rec.min_u);
  out += ',' + format_g17(rec.volume_err);
  for (double th : rec.theta) out += ',' + format_g17(th);
  out += ',';
  if (rec.r_star) out += format_g17(*rec.r_star);
  return out;
}

void write_diagnostics_csv(const std::string& path,
                           const std::vector<DiagnosticsRecord>& records, int n) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) fail(Errc::CorruptPayload, "cannot open '" + path + "'");
  os << diagnostics_csv_header(n) << '\n';
  for (const auto& rec : records) os << diagnostics_csv_row(rec) << '\n';
}

int CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return static_cast<int>(i);
  fail(Errc::TypeError, "csv column '" + name + "' not found");
}

CsvTable read_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) fail(Errc::CorruptPayload, "cannot open '" + path + "'");
  CsvTable t;
  std::string line;
  if (!std::getline(is, line)) fail(Errc::CorruptPayload, "empty csv");
  std::istringstream hs(line);
  std::string cell;
  while (std::getline(hs, cell, ',')) t.columns.push_back(cell);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::size_t pos = 0;
    while (pos <= line.size()) {
      std::size_t comma = line.find(',', pos);
      std::string field = line.substr(
          pos, comma == std::string::npos ? std::string::npos : comma - pos);
      row.push_back(field.empty() ? std::nan("") : std::stod(field));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

} // namespace qflow
