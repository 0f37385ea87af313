#include "percept/dataset.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace percept {

const std::array<std::string, 2>& gender_names() {
    static const std::array<std::string, 2> n{"female", "male"};
    return n;
}
const std::array<std::string, 3>& race_names() {
    static const std::array<std::string, 3> n{"asian", "afroamerican", "caucasian"};
    return n;
}
const std::array<std::string, 4>& happiness_names() {
    static const std::array<std::string, 4> n{"happy", "slightly_happy", "neutral", "other"};
    return n;
}
const std::array<std::string, 4>& makeup_names() {
    static const std::array<std::string, 4> n{"makeup", "no_makeup", "not_clear", "very_subtle"};
    return n;
}
const std::array<std::string, 2>& observer_names() {
    static const std::array<std::string, 2> n{"female", "male"};
    return n;
}
const std::array<std::string, 3>& split_names() {
    static const std::array<std::string, 3> n{"train", "validation", "test"};
    return n;
}

std::string to_string(Gender g) { return gender_names()[static_cast<std::size_t>(g)]; }
std::string to_string(Race r) { return race_names()[static_cast<std::size_t>(r)]; }
std::string to_string(Happiness h) { return happiness_names()[static_cast<std::size_t>(h)]; }
std::string to_string(Makeup m) { return makeup_names()[static_cast<std::size_t>(m)]; }
std::string to_string(ObserverGender o) { return observer_names()[static_cast<std::size_t>(o)]; }
std::string to_string(Split s) { return split_names()[static_cast<std::size_t>(s)]; }

AttributeVector encode_attributes(const AnnotationRecord& r, std::optional<ObserverGender> observer) {
    AttributeVector v;
    v.values.assign(observer ? 15 : 13, 0.0);
    // Block offsets: gender 0, race 2, happiness 5, makeup 9, observer 13.
    v.values[static_cast<std::size_t>(r.gender)] = 1.0;
    v.values[2 + static_cast<std::size_t>(r.race)] = 1.0;
    v.values[5 + static_cast<std::size_t>(r.happiness)] = 1.0;
    v.values[9 + static_cast<std::size_t>(r.makeup)] = 1.0;
    if (observer) v.values[13 + static_cast<std::size_t>(*observer)] = 1.0;
    return v;
}

double normalize_age(double years) {
    if (!(years >= 0.0 && years <= kAgeMax))
        throw DatasetError("age " + std::to_string(years) + " outside [0, " + std::to_string(kAgeMax) + "]");
    return years / kAgeMax;
}

double denormalize_age(double unit) { return unit * kAgeMax; }

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    fields.push_back(cur);
    return fields;
}

double parse_age(const std::string& s, int row, const char* column) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw DatasetError("row " + std::to_string(row) + ": cannot parse " + column + " value '" + s + "'");
    if (!(v >= 0.0 && v <= kAgeMax))
        throw DatasetError("row " + std::to_string(row) + ": " + column + " " + s + " outside [0, " +
                           std::to_string(kAgeMax) + "]");
    return v;
}

template <std::size_t N>
int parse_category(const std::string& s, const std::array<std::string, N>& names, int row,
                   const char* column) {
    for (std::size_t i = 0; i < N; ++i)
        if (s == names[i]) return static_cast<int>(i);
    throw DatasetError("row " + std::to_string(row) + ": unknown " + column + " '" + s + "'");
}

const char* kBaseHeader = "image_id,split,real_age,apparent_mean,apparent_std,gender,race,happiness,makeup";
const char* kObserverHeader =
    "image_id,split,real_age,apparent_mean,apparent_std,gender,race,happiness,makeup,"
    "apparent_female_obs,apparent_male_obs";

}  // namespace

std::vector<AnnotationRecord> load_annotations(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw DatasetError("cannot open annotation file " + path);
    std::string line;
    if (!std::getline(is, line)) throw DatasetError(path + ": empty file, expected header");
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();

    bool with_observer;
    if (line == kBaseHeader) {
        with_observer = false;
    } else if (line == kObserverHeader) {
        with_observer = true;
    } else {
        throw DatasetError(path + ": unrecognized header '" + line + "'");
    }
    const std::size_t n_cols = with_observer ? 11 : 9;

    std::vector<AnnotationRecord> records;
    int row = 1;
    while (std::getline(is, line)) {
        ++row;
        if (line.empty() || line == "\r") continue;
        const auto f = split_csv_line(line);
        if (f.size() != n_cols)
            throw DatasetError("row " + std::to_string(row) + ": expected " + std::to_string(n_cols) +
                               " columns, got " + std::to_string(f.size()));
        AnnotationRecord r;
        r.image_id = f[0];
        r.split = static_cast<Split>(parse_category(f[1], split_names(), row, "split"));
        r.real_age = parse_age(f[2], row, "real_age");
        r.apparent_mean = parse_age(f[3], row, "apparent_mean");
        r.apparent_std = parse_age(f[4], row, "apparent_std");
        r.gender = static_cast<Gender>(parse_category(f[5], gender_names(), row, "gender"));
        r.race = static_cast<Race>(parse_category(f[6], race_names(), row, "race"));
        r.happiness = static_cast<Happiness>(parse_category(f[7], happiness_names(), row, "happiness"));
        r.makeup = static_cast<Makeup>(parse_category(f[8], makeup_names(), row, "makeup"));
        if (with_observer) {
            r.apparent_by_observer = std::array<double, 2>{
                parse_age(f[9], row, "apparent_female_obs"),
                parse_age(f[10], row, "apparent_male_obs"),
            };
        }
        records.push_back(std::move(r));
    }
    return records;
}

std::vector<AnnotationRecord> load_annotations(const std::string& path, Split split) {
    auto all = load_annotations(path);
    std::vector<AnnotationRecord> out;
    for (auto& r : all)
        if (r.split == split) out.push_back(std::move(r));
    return out;
}

void save_annotations(const std::string& path, const std::vector<AnnotationRecord>& records) {
    const bool with_observer =
        !records.empty() && records.front().apparent_by_observer.has_value();
    std::ofstream os(path);
    if (!os) throw DatasetError("cannot open " + path + " for writing");
    os << (with_observer ? kObserverHeader : kBaseHeader) << "\n";
    os.precision(17);
    for (const auto& r : records) {
        if (r.apparent_by_observer.has_value() != with_observer)
            throw DatasetError("mixed observer annotations while writing " + path);
        os << r.image_id << ',' << to_string(r.split) << ',' << r.real_age << ',' << r.apparent_mean
           << ',' << r.apparent_std << ',' << to_string(r.gender) << ',' << to_string(r.race) << ','
           << to_string(r.happiness) << ',' << to_string(r.makeup);
        if (with_observer)
            os << ',' << (*r.apparent_by_observer)[0] << ',' << (*r.apparent_by_observer)[1];
        os << "\n";
    }
    if (!os) throw DatasetError("short write to " + path);
}

}  // namespace percept
