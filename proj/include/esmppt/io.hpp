#ifndef ESMPPT_IO_HPP
#define ESMPPT_IO_HPP

#include <string>
#include <vector>

#include "esmppt/analysis.hpp"
#include "esmppt/pv_model.hpp"
#include "esmppt/power_stage.hpp"
#include "esmppt/sim_engine.hpp"

namespace esmppt {

// CSV headers are fixed and documented:
//   pv curve:   voltage,current,power
//   duty curve: duty,power
//   trace:      the SimTrace column names in order
std::string pv_curve_csv(const std::vector<IvPoint>& points);
std::string duty_power_csv(const std::vector<DutyPower>& points);
std::string trace_csv(const SimTrace& trace);

std::vector<IvPoint> parse_pv_curve_csv(const std::string& text);
std::vector<DutyPower> parse_duty_power_csv(const std::string& text);
SimTrace parse_trace_csv(const std::string& text);

// JSON reports with stable key order; convergence_time serializes as null
// when the band is never held.
std::string metrics_json(const MetricsReport& report);
std::string tuning_report_json(const TuningReport& report);

void write_file(const std::string& path, const std::string& contents);
std::string read_file(const std::string& path);

// fixed numeric formatting shared by all CSV output
std::string format_number(double value);

}  // namespace esmppt

#endif
