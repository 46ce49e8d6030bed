#pragma once

#include <cstddef>
#include <sstream>
#include <string>
#include <vector>

#include "nubox/error.hpp"
#include "nubox/matrix.hpp"

namespace nubox {

/// One row of a certification report.
struct ReportRow {
  std::size_t index = 0;
  std::size_t label = 0;
  bool feasible = false;
  double gamma_uniform = 0.0;
  double geo_mean = 0.0;  // non-uniform geometric mean (equals gamma in uniform mode)
  double ratio = 0.0;     // geo_mean / gamma_uniform
  Vector eps;
};

inline std::string report_header(std::size_t n_features) {
  std::string h = "index,label,feasible,gamma_uniform,geo_mean_nonuniform,ratio";
  for (std::size_t j = 0; j < n_features; ++j) h += ",eps_" + std::to_string(j);
  return h;
}

inline std::string format_report(const std::vector<ReportRow>& rows, std::size_t n_features) {
  std::ostringstream out;
  out.precision(17);
  out << report_header(n_features) << '\n';
  for (const auto& r : rows) {
    out << r.index << ',' << r.label << ',' << (r.feasible ? 1 : 0) << ',' << r.gamma_uniform << ','
        << r.geo_mean << ',' << r.ratio;
    for (std::size_t j = 0; j < n_features; ++j) out << ',' << (j < r.eps.size() ? r.eps[j] : 0.0);
    out << '\n';
  }
  return out.str();
}

inline std::vector<ReportRow> parse_report(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("index,label,feasible", 0) != 0) {
    throw FormatError("report: missing header line");
  }
  std::vector<ReportRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string cell;
    std::vector<double> v;
    try {
      while (std::getline(fields, cell, ',')) v.push_back(std::stod(cell));
    } catch (const std::exception&) {
      throw FormatError("report line " + std::to_string(line_no) + ": bad number");
    }
    if (v.size() < 6) throw FormatError("report line " + std::to_string(line_no) + ": too few columns");
    ReportRow r;
    r.index = static_cast<std::size_t>(v[0]);
    r.label = static_cast<std::size_t>(v[1]);
    r.feasible = v[2] != 0.0;
    r.gamma_uniform = v[3];
    r.geo_mean = v[4];
    r.ratio = v[5];
    r.eps.assign(v.begin() + 6, v.end());
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace nubox
