#include "percept/report.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

namespace percept {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kW = 640, kH = 420;
constexpr int kMarginL = 60, kMarginR = 20, kMarginT = 40, kMarginB = 50;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};

struct Axis {
    double lo, hi;
    double map(double v, int pix_lo, int pix_hi) const {
        const double f = hi > lo ? (v - lo) / (hi - lo) : 0.5;
        return pix_lo + f * (pix_hi - pix_lo);
    }
};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

void svg_header(std::ofstream& os, const std::string& title) {
    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
       << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
       << "\" viewBox=\"0 0 " << kW << " " << kH << "\">\n"
       << "<rect width=\"" << kW << "\" height=\"" << kH << "\" fill=\"white\"/>\n"
       << "<text x=\"" << kW / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << title
       << "</text>\n";
}

void svg_axes(std::ofstream& os, const Axis& x, const Axis& y, const std::string& x_label,
              const std::string& y_label) {
    os << "<line x1=\"" << kMarginL << "\" y1=\"" << kH - kMarginB << "\" x2=\"" << kW - kMarginR
       << "\" y2=\"" << kH - kMarginB << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << kMarginL << "\" y1=\"" << kMarginT << "\" x2=\"" << kMarginL << "\" y2=\""
       << kH - kMarginB << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 5; ++i) {
        const double xv = x.lo + (x.hi - x.lo) * i / 5.0;
        const double yv = y.lo + (y.hi - y.lo) * i / 5.0;
        const double xp = x.map(xv, kMarginL, kW - kMarginR);
        const double yp = y.map(yv, kH - kMarginB, kMarginT);
        os << "<text x=\"" << xp << "\" y=\"" << kH - kMarginB + 18
           << "\" text-anchor=\"middle\" font-size=\"11\">" << fmt(xv) << "</text>\n";
        os << "<text x=\"" << kMarginL - 8 << "\" y=\"" << yp + 4
           << "\" text-anchor=\"end\" font-size=\"11\">" << fmt(yv) << "</text>\n";
    }
    os << "<text x=\"" << (kMarginL + kW - kMarginR) / 2 << "\" y=\"" << kH - 12
       << "\" text-anchor=\"middle\" font-size=\"13\">" << x_label << "</text>\n";
    os << "<text x=\"16\" y=\"" << (kMarginT + kH - kMarginB) / 2
       << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 16 "
       << (kMarginT + kH - kMarginB) / 2 << ")\">" << y_label << "</text>\n";
}

}  // namespace

void emit_curve_svg(const std::string& path, const std::string& title,
                    const std::vector<NamedCurve>& curves) {
    std::ofstream os(path);
    if (!os) throw EvalError("cannot write " + path);
    Axis x{0.0, kAgeMax}, y{0.0, 1.0};
    for (const auto& c : curves)
        for (const auto& p : c.points) y.hi = std::max(y.hi, p.mean_abs_error);
    y.hi = std::ceil(y.hi * 1.05);

    svg_header(os, title);
    svg_axes(os, x, y, "age (years)", "mean absolute error (years)");
    int ci = 0;
    for (const auto& c : curves) {
        const char* color = kPalette[ci % 5];
        os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (const auto& p : c.points)
            os << x.map(p.center, kMarginL, kW - kMarginR) << ","
               << y.map(p.mean_abs_error, kH - kMarginB, kMarginT) << " ";
        os << "\"/>\n";
        os << "<text x=\"" << kW - kMarginR - 8 << "\" y=\"" << kMarginT + 16 + 16 * ci
           << "\" text-anchor=\"end\" font-size=\"12\" fill=\"" << color << "\">" << c.label
           << "</text>\n";
        ++ci;
    }
    os << "</svg>\n";
}

void emit_histogram_svg(const std::string& path, const std::string& title,
                        const std::vector<HistogramBin>& bins) {
    std::ofstream os(path);
    if (!os) throw EvalError("cannot write " + path);
    Axis x{0.0, kAgeMax}, y{0.0, 1.0};
    double bin_w = 1.0;
    for (std::size_t i = 0; i + 1 < bins.size(); ++i)
        bin_w = std::min(bin_w, bins[i + 1].age - bins[i].age);
    for (const auto& b : bins) {
        x.hi = std::max(x.hi, b.age + bin_w);
        y.hi = std::max(y.hi, static_cast<double>(b.count));
    }
    y.hi = std::ceil(y.hi * 1.05);

    svg_header(os, title);
    svg_axes(os, x, y, "age (years)", "count");
    for (const auto& b : bins) {
        const double x0 = x.map(b.age, kMarginL, kW - kMarginR);
        const double x1 = x.map(b.age + bin_w, kMarginL, kW - kMarginR);
        const double y0 = y.map(0.0, kH - kMarginB, kMarginT);
        const double y1 = y.map(b.count, kH - kMarginB, kMarginT);
        os << "<rect x=\"" << x0 << "\" y=\"" << y1 << "\" width=\"" << std::max(0.5, x1 - x0 - 0.5)
           << "\" height=\"" << y0 - y1 << "\" fill=\"#1f77b4\"/>\n";
    }
    os << "</svg>\n";
}

namespace {

json stratum_to_json(const StratumRow& r) {
    json j;
    j["category"] = r.category;
    j["train_pct"] = r.train_pct;
    j["n"] = r.n;
    j["mae_real"] = r.mae_real ? json(*r.mae_real) : json(nullptr);
    j["mae_apparent"] = r.mae_apparent ? json(*r.mae_apparent) : json(nullptr);
    return j;
}

StratumRow stratum_from_json(const json& j) {
    StratumRow r;
    r.category = j.at("category").get<std::string>();
    r.train_pct = j.at("train_pct").get<double>();
    r.n = j.at("n").get<int>();
    if (!j.at("mae_real").is_null()) r.mae_real = j.at("mae_real").get<double>();
    if (!j.at("mae_apparent").is_null()) r.mae_apparent = j.at("mae_apparent").get<double>();
    return r;
}

json curve_to_json(const std::vector<CurvePoint>& c) {
    json arr = json::array();
    for (const auto& p : c)
        arr.push_back({{"center", p.center}, {"mean_abs_error", p.mean_abs_error}, {"count", p.count}});
    return arr;
}

std::vector<CurvePoint> curve_from_json(const json& arr) {
    std::vector<CurvePoint> c;
    for (const auto& p : arr)
        c.push_back({p.at("center").get<double>(), p.at("mean_abs_error").get<double>(),
                     p.at("count").get<int>()});
    return c;
}

json hist_to_json(const std::vector<HistogramBin>& h) {
    json arr = json::array();
    for (const auto& b : h) arr.push_back({{"age", b.age}, {"count", b.count}});
    return arr;
}

std::vector<HistogramBin> hist_from_json(const json& arr) {
    std::vector<HistogramBin> h;
    for (const auto& b : arr) h.push_back({b.at("age").get<double>(), b.at("count").get<int>()});
    return h;
}

}  // namespace

std::string report_to_json(const EvalReport& report) {
    json j;
    j["n"] = report.n;
    j["mae_real"] = report.mae_real;
    j["mae_apparent"] = report.mae_apparent;
    json tables;
    for (const auto& [attr, rows] : report.attribute_tables) {
        json arr = json::array();
        for (const auto& r : rows) arr.push_back(stratum_to_json(r));
        tables[attr] = arr;
    }
    j["attribute_tables"] = tables;
    j["error_curve_real"] = curve_to_json(report.error_curve_real);
    j["error_curve_apparent"] = curve_to_json(report.error_curve_apparent);
    j["histogram_real"] = hist_to_json(report.histogram_real);
    j["histogram_apparent"] = hist_to_json(report.histogram_apparent);
    if (report.observer) {
        j["observer"] = {{"mae_female", report.observer->mae_female},
                         {"mae_male", report.observer->mae_male},
                         {"mae_female_crossed", report.observer->mae_female_crossed},
                         {"mae_male_crossed", report.observer->mae_male_crossed}};
    } else {
        j["observer"] = nullptr;
    }
    return j.dump(2);
}

EvalReport report_from_json(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw EvalError(std::string("bad report JSON: ") + e.what());
    }
    EvalReport r;
    r.n = j.at("n").get<int>();
    r.mae_real = j.at("mae_real").get<double>();
    r.mae_apparent = j.at("mae_apparent").get<double>();
    for (const auto& [attr, arr] : j.at("attribute_tables").items()) {
        std::vector<StratumRow> rows;
        for (const auto& e : arr) rows.push_back(stratum_from_json(e));
        r.attribute_tables[attr] = std::move(rows);
    }
    r.error_curve_real = curve_from_json(j.at("error_curve_real"));
    r.error_curve_apparent = curve_from_json(j.at("error_curve_apparent"));
    r.histogram_real = hist_from_json(j.at("histogram_real"));
    r.histogram_apparent = hist_from_json(j.at("histogram_apparent"));
    if (!j.at("observer").is_null()) {
        const auto& o = j.at("observer");
        ObserverEvalResult obs;
        obs.mae_female = o.at("mae_female").get<double>();
        obs.mae_male = o.at("mae_male").get<double>();
        obs.mae_female_crossed = o.at("mae_female_crossed").get<double>();
        obs.mae_male_crossed = o.at("mae_male_crossed").get<double>();
        r.observer = obs;
    }
    return r;
}

void save_attribute_table_csv(const std::string& path,
                              const std::map<std::string, std::vector<StratumRow>>& tables) {
    std::ofstream os(path);
    if (!os) throw EvalError("cannot write " + path);
    os << "attribute,category,train_pct,n,mae_real,mae_apparent\n";
    os.precision(17);
    for (const auto& [attr, rows] : tables) {
        for (const auto& r : rows) {
            os << attr << ',' << r.category << ',' << r.train_pct << ',' << r.n << ',';
            if (r.mae_real) os << *r.mae_real;
            os << ',';
            if (r.mae_apparent) os << *r.mae_apparent;
            os << "\n";
        }
    }
}

void emit_report(const EvalReport& report, const std::string& dir) {
    fs::create_directories(dir);
    {
        std::ofstream os(fs::path(dir) / "report.json");
        if (!os) throw EvalError("cannot write report.json under " + dir);
        os << report_to_json(report) << "\n";
    }
    save_attribute_table_csv((fs::path(dir) / "attribute_table.csv").string(), report.attribute_tables);
    emit_curve_svg((fs::path(dir) / "error_curve_real.svg").string(),
                   "Real age estimation: mean absolute error by age",
                   {{"real", report.error_curve_real}});
    emit_curve_svg((fs::path(dir) / "error_curve_apparent.svg").string(),
                   "Apparent age estimation: mean absolute error by age",
                   {{"apparent", report.error_curve_apparent}});
    emit_histogram_svg((fs::path(dir) / "age_histogram_real.svg").string(),
                       "Real age distribution (train split)", report.histogram_real);
    emit_histogram_svg((fs::path(dir) / "age_histogram_apparent.svg").string(),
                       "Apparent age distribution (train split)", report.histogram_apparent);
}

}  // namespace percept
