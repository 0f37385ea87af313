// Report and plot emission: JSON report, per-table CSV, standalone SVG charts.
#pragma once

#include <string>
#include <vector>

#include "percept/evaluate.hpp"

namespace percept {

struct NamedCurve {
    std::string label;
    std::vector<CurvePoint> points;
};

// Line chart with one polyline per curve; axes labelled in years.
void emit_curve_svg(const std::string& path, const std::string& title,
                    const std::vector<NamedCurve>& curves);

// Bar chart of one histogram.
void emit_histogram_svg(const std::string& path, const std::string& title,
                        const std::vector<HistogramBin>& bins);

std::string report_to_json(const EvalReport& report);
EvalReport report_from_json(const std::string& json_text);

// Writes report.json, attribute_table.csv and the SVG plots into dir.
void emit_report(const EvalReport& report, const std::string& dir);

void save_attribute_table_csv(const std::string& path,
                              const std::map<std::string, std::vector<StratumRow>>& tables);

}  // namespace percept
