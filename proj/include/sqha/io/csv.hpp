#pragma once

#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "sqha/dynamics.hpp"
#include "sqha/error.hpp"
#include "sqha/io/config.hpp"

namespace sqha::io {

inline constexpr std::string_view csv_header = "time,norm,mean_q,variance,E_kin,E_pot,E_qu";

/// One row per observable record, LF endings, shortest round-trip numbers.
inline void write_csv(std::ostream& os, const std::vector<Observables>& rows) {
  os << csv_header << '\n';
  for (const auto& o : rows) {
    os << format_double(o.time) << ',' << format_double(o.norm) << ',' << format_double(o.mean_q)
       << ',' << format_double(o.variance) << ',' << format_double(o.kinetic) << ','
       << format_double(o.potential) << ',' << format_double(o.quantum) << '\n';
  }
}

inline void write_csv(std::ostream& os, const Trajectory& t) {
  std::vector<Observables> rows;
  rows.reserve(t.snapshots.size());
  for (const auto& s : t.snapshots) rows.push_back(s.observables);
  write_csv(os, rows);
}

/// Writes `content` to a sibling temporary and renames it over `path`, so a
/// failed write never leaves a truncated file behind.
inline void write_file_atomically(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open '" + tmp.string() + "' for writing");
    f << content;
    f.flush();
    if (!f) throw std::runtime_error("write to '" + tmp.string() + "' failed");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw std::runtime_error("cannot move output into '" + path.string() + "'");
  }
}

inline void write_outputs(const Trajectory& t, const std::filesystem::path& csv_path) {
  std::ostringstream os;
  write_csv(os, t);
  write_file_atomically(csv_path, os.str());
}

/// CSV rows back into observables; the header must match exactly.
inline std::vector<Observables> read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != csv_header) {
    throw ValidationError("CSV header does not match '" + std::string(csv_header) + "'");
  }
  std::vector<Observables> rows;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<double> cols;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      const std::string_view cell(line.data() + start,
                                  (comma == std::string::npos ? line.size() : comma) - start);
      cols.push_back(parse_quantity(cell, detail::Quantity::none));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (cols.size() != 7) throw ValidationError("CSV line " + std::to_string(line_no) + ": expected 7 columns");
    rows.push_back({cols[0], cols[1], cols[2], cols[3], cols[4], cols[5], cols[6]});
  }
  return rows;
}

}  // namespace sqha::io
