#include "esmppt/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "esmppt/errors.hpp"

namespace esmppt {

std::string format_number(double value) {
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.12g", value);
  return buf;
}

namespace {

std::vector<std::vector<double>> parse_numeric_csv(const std::string& text,
                                                   const std::string& expected_header) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("csv: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != expected_header) {
    throw ParseError("csv: header mismatch, expected '" + expected_header + "', got '" +
                     line + "'");
  }
  const size_t n_cols = static_cast<size_t>(
      std::count(expected_header.begin(), expected_header.end(), ',')) + 1;
  std::vector<std::vector<double>> columns(n_cols);
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    size_t col = 0;
    while (std::getline(row, cell, ',')) {
      if (col >= n_cols) throw ParseError("csv:" + std::to_string(line_no) + ": too many cells");
      char* end = nullptr;
      if (cell == "inf") {
        columns[col].push_back(std::numeric_limits<double>::infinity());
      } else if (cell == "-inf") {
        columns[col].push_back(-std::numeric_limits<double>::infinity());
      } else {
        const double v = std::strtod(cell.c_str(), &end);
        if (end == cell.c_str() || *end != '\0') {
          throw ParseError("csv:" + std::to_string(line_no) + ": bad number '" + cell + "'");
        }
        columns[col].push_back(v);
      }
      ++col;
    }
    if (col != n_cols) throw ParseError("csv:" + std::to_string(line_no) + ": too few cells");
  }
  return columns;
}

}  // namespace

std::string pv_curve_csv(const std::vector<IvPoint>& points) {
  std::string out = "voltage,current,power\n";
  for (const auto& p : points) {
    out += format_number(p.voltage) + "," + format_number(p.current) + "," +
           format_number(p.power) + "\n";
  }
  return out;
}

std::string duty_power_csv(const std::vector<DutyPower>& points) {
  std::string out = "duty,power\n";
  for (const auto& p : points) {
    out += format_number(p.duty) + "," + format_number(p.power) + "\n";
  }
  return out;
}

std::string trace_csv(const SimTrace& trace) {
  std::string header;
  for (size_t c = 0; c < SimTrace::kColumnNames.size(); ++c) {
    if (c) header += ",";
    header += SimTrace::kColumnNames[c];
  }
  std::string out = header + "\n";
  for (size_t i = 0; i < trace.rows(); ++i) {
    std::string row;
    for (size_t c = 0; c < SimTrace::kColumnNames.size(); ++c) {
      if (c) row += ",";
      row += format_number(trace.column(c)[i]);
    }
    out += row + "\n";
  }
  return out;
}

std::vector<IvPoint> parse_pv_curve_csv(const std::string& text) {
  const auto cols = parse_numeric_csv(text, "voltage,current,power");
  std::vector<IvPoint> points(cols[0].size());
  for (size_t i = 0; i < points.size(); ++i) {
    points[i] = {cols[0][i], cols[1][i], cols[2][i]};
  }
  return points;
}

std::vector<DutyPower> parse_duty_power_csv(const std::string& text) {
  const auto cols = parse_numeric_csv(text, "duty,power");
  std::vector<DutyPower> points(cols[0].size());
  for (size_t i = 0; i < points.size(); ++i) {
    points[i] = {cols[0][i], cols[1][i]};
  }
  return points;
}

SimTrace parse_trace_csv(const std::string& text) {
  std::string header;
  for (size_t c = 0; c < SimTrace::kColumnNames.size(); ++c) {
    if (c) header += ",";
    header += SimTrace::kColumnNames[c];
  }
  const auto cols = parse_numeric_csv(text, header);
  SimTrace trace;
  for (size_t c = 0; c < cols.size(); ++c) {
    trace.column(c) = cols[c];
  }
  return trace;
}

std::string metrics_json(const MetricsReport& report) {
  nlohmann::ordered_json j;
  j["epsilon"] = report.epsilon;
  if (std::isinf(report.convergence_time)) {
    j["convergence_time"] = nullptr;
  } else {
    j["convergence_time"] = report.convergence_time;
  }
  j["steady_bias"] = report.steady_bias;
  j["dither_amplitude_final"] = report.dither_amplitude_final;
  j["tracking_rmse"] = report.tracking_rmse;
  j["energy_captured_ratio"] = report.energy_captured_ratio;
  return j.dump(2);
}

std::string tuning_report_json(const TuningReport& report) {
  nlohmann::ordered_json j;
  j["cond_13_ok"] = report.cond_13_ok;
  j["cond_14_ok"] = report.cond_14_ok;
  j["degeneracy_warnings"] = report.degeneracy_warnings;
  j["h_used"] = report.h_used;
  nlohmann::ordered_json eigs = nlohmann::ordered_json::array();
  for (const auto& z : report.jacobian_eigenvalues) {
    nlohmann::ordered_json e;
    e["re"] = z.real();
    e["im"] = z.imag();
    eigs.push_back(e);
  }
  j["jacobian_eigenvalues"] = eigs;
  j["hurwitz"] = report.hurwitz;
  return j.dump(2);
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + path);
  out << contents;
  if (!out) throw Error("write failed: " + path);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open for reading: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace esmppt
