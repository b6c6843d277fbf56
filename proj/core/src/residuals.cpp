#include <istream>
#include <ostream>
#include <string>

#include "csv.hpp"
#include "driftbench/ensemble.hpp"
#include "driftbench/errors.hpp"

namespace driftbench {

namespace {
constexpr std::string_view kResidualHeader = "timestamp,actual,predicted,residual,n_members";
}

void write_residuals_csv(std::ostream& out, const ResidualSeries& residuals) {
  out << kResidualHeader << '\n';
  for (const auto& e : residuals.entries) {
    out << format_rfc3339(e.timestamp) << ',' << csv::format_double(e.actual) << ',';
    if (e.predicted) out << csv::format_double(*e.predicted);
    out << ',';
    if (e.residual) out << csv::format_double(*e.residual);
    out << ',' << e.n_members << '\n';
  }
}

ResidualSeries read_residuals_csv(std::istream& in, const std::string& turbine_id) {
  ResidualSeries out;
  out.turbine_id = turbine_id;
  std::string line;
  if (!std::getline(in, line) || csv::trim(line) != kResidualHeader) {
    throw Error(ErrorCode::format, "expected header '" + std::string(kResidualHeader) + "'");
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    auto text = csv::trim(line);
    if (text.empty()) continue;
    auto fields = csv::split(text);
    auto fail = [&](const char* what) {
      throw Error(ErrorCode::format, "residual CSV line " + std::to_string(line_no) + ": " + what);
    };
    if (fields.size() != 5) fail("expected 5 fields");
    ResidualEntry e;
    e.timestamp = parse_rfc3339(csv::trim(fields[0]));
    auto actual = csv::parse_finite(fields[1]);
    if (!actual) fail("bad actual");
    e.actual = *actual;
    if (!csv::trim(fields[2]).empty()) {
      e.predicted = csv::parse_finite(fields[2]);
      if (!e.predicted) fail("bad predicted");
    }
    if (!csv::trim(fields[3]).empty()) {
      e.residual = csv::parse_finite(fields[3]);
      if (!e.residual) fail("bad residual");
    }
    auto n = csv::parse_finite(fields[4]);
    if (!n || *n < 0) fail("bad n_members");
    e.n_members = static_cast<std::size_t>(*n);
    if (!out.entries.empty() && !(out.entries.back().timestamp < e.timestamp)) fail("timestamps not increasing");
    out.entries.push_back(e);
  }
  return out;
}

}  // namespace driftbench
