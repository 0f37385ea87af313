#include "percept/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include <json.hpp>

#include "percept/image_io.hpp"

namespace percept {

namespace fs = std::filesystem;
using nlohmann::json;

std::map<std::string, double> SyntheticSpec::default_bias_table() {
    return {{"female", 4.0}, {"happy", -2.0}, {"slightly_happy", -1.0}, {"makeup", -2.0}};
}

std::array<double, 2> SyntheticSpec::default_observer_offsets() { return {1.0, -1.0}; }

void SyntheticSpec::validate() const {
    if (sample_count <= 0) throw DatasetError("synthetic spec: sample_count must be positive");
    if (noise_std < 0.0) throw DatasetError("synthetic spec: noise_std must be >= 0");
    if (looks_std < 0.0) throw DatasetError("synthetic spec: looks_std must be >= 0");
    if (!(looks_skew >= 0.0 && looks_skew <= 1.0))
        throw DatasetError("synthetic spec: looks_skew must be in [0, 1]");
    if (pixel_noise_std < 0.0) throw DatasetError("synthetic spec: pixel_noise_std must be >= 0");
    if (!(age_min >= 0.0 && age_max <= kAgeMax && age_min < age_max))
        throw DatasetError("synthetic spec: age_range must satisfy 0 <= min < max <= " +
                           std::to_string(kAgeMax));
    if (image_side < 8) throw DatasetError("synthetic spec: image_side must be >= 8");
    if (!(train_fraction > 0.0 && val_fraction >= 0.0 && train_fraction + val_fraction < 1.0))
        throw DatasetError("synthetic spec: bad split fractions");
    // Unknown category keys in the bias table are almost certainly typos.
    for (const auto& [key, _] : bias_table) {
        bool known = false;
        for (const auto& n : gender_names()) known = known || key == n;
        for (const auto& n : race_names()) known = known || key == n;
        for (const auto& n : happiness_names()) known = known || key == n;
        for (const auto& n : makeup_names()) known = known || key == n;
        if (!known) throw DatasetError("synthetic spec: unknown bias_table category '" + key + "'");
    }
}

double bias_for(const std::map<std::string, double>& bias_table, const AnnotationRecord& r) {
    double b = 0.0;
    auto add = [&](const std::string& key) {
        auto it = bias_table.find(key);
        if (it != bias_table.end()) b += it->second;
    };
    add(to_string(r.gender));
    add(to_string(r.race));
    add(to_string(r.happiness));
    add(to_string(r.makeup));
    return b;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

// Corner patch intensity levels: (index+1)/(count+1), distinct per category.
void draw_marker(std::vector<double>& pix, int side, int corner, int index, int count) {
    const int m = 3;  // patch side
    const int y0 = (corner / 2 == 0) ? 0 : side - m;
    const int x0 = (corner % 2 == 0) ? 0 : side - m;
    const double level = static_cast<double>(index + 1) / (count + 1);
    for (int y = y0; y < y0 + m; ++y)
        for (int x = x0; x < x0 + m; ++x) pix[static_cast<std::size_t>(y) * side + x] = level;
}

}  // namespace

std::vector<SyntheticSample> generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    const int side = spec.image_side;
    const int n_train = static_cast<int>(spec.sample_count * spec.train_fraction);
    const int n_val = static_cast<int>(spec.sample_count * spec.val_fraction);

    std::vector<SyntheticSample> samples;
    samples.reserve(static_cast<std::size_t>(spec.sample_count));

    for (int i = 0; i < spec.sample_count; ++i) {
        std::mt19937_64 rng(splitmix64(spec.seed ^ (0x517CC1B727220A95ull * (i + 1))));
        std::uniform_real_distribution<double> age_dist(spec.age_min, spec.age_max);
        std::uniform_int_distribution<int> g2(0, 1), r3(0, 2), c4(0, 3);

        AnnotationRecord rec;
        char id[32];
        std::snprintf(id, sizeof(id), "synth_%06d", i);
        rec.image_id = id;
        rec.split = i < n_train ? Split::Train : (i < n_train + n_val ? Split::Validation : Split::Test);
        rec.real_age = age_dist(rng);
        rec.gender = static_cast<Gender>(g2(rng));
        rec.race = static_cast<Race>(r3(rng));
        rec.happiness = static_cast<Happiness>(c4(rng));
        rec.makeup = static_cast<Makeup>(c4(rng));

        // Clamp to the hard validity bound, not the sampling range: category
        // offsets must survive intact for the bias analyses.
        auto clamp_age = [&](double a) { return std::clamp(a, 0.0, kAgeMax); };
        double looks = rec.real_age;
        if (spec.looks_std > 0.0) {
            // Zero-mean, unit-variance mix of a Gaussian and a centered
            // exponential, scaled to looks_std.
            std::normal_distribution<double> gauss(0.0, 1.0);
            std::exponential_distribution<double> expo(1.0);
            const double s = spec.looks_skew;
            const double norm = std::sqrt((1.0 - s) * (1.0 - s) + s * s);
            const double d = ((1.0 - s) * gauss(rng) + s * (expo(rng) - 1.0)) / norm;
            looks = clamp_age(rec.real_age + spec.looks_std * d);
        }
        double apparent = looks + bias_for(spec.bias_table, rec);
        if (spec.noise_std > 0.0) {
            std::normal_distribution<double> noise(0.0, spec.noise_std);
            apparent += noise(rng);
        }
        rec.apparent_mean = clamp_age(apparent);
        rec.apparent_std = spec.noise_std;
        if (spec.observer_offsets) {
            rec.apparent_by_observer = std::array<double, 2>{
                std::clamp(rec.apparent_mean + (*spec.observer_offsets)[0], 0.0, kAgeMax),
                std::clamp(rec.apparent_mean + (*spec.observer_offsets)[1], 0.0, kAgeMax),
            };
        }

        // Intensity ramp: background gray tracks the rendered age, plus a
        // brighter centered disk whose radius grows with it.
        const double level = looks / kAgeMax;
        std::vector<double> pix(static_cast<std::size_t>(side) * side, level);
        const double radius = 0.45 * side * level;
        const double cy = 0.5 * (side - 1), cx = 0.5 * (side - 1);
        for (int y = 0; y < side; ++y) {
            for (int x = 0; x < side; ++x) {
                const double dy = y - cy, dx = x - cx;
                if (dy * dy + dx * dx <= radius * radius)
                    pix[static_cast<std::size_t>(y) * side + x] = std::min(level + 0.3, 1.0);
            }
        }
        if (spec.render_attribute_markers) {
            draw_marker(pix, side, 0, static_cast<int>(rec.gender), 2);
            draw_marker(pix, side, 1, static_cast<int>(rec.race), 3);
            draw_marker(pix, side, 2, static_cast<int>(rec.happiness), 4);
            draw_marker(pix, side, 3, static_cast<int>(rec.makeup), 4);
        }
        if (spec.pixel_noise_std > 0.0) {
            std::normal_distribution<double> pn(0.0, spec.pixel_noise_std);
            for (double& v : pix) v = std::clamp(v + pn(rng), 0.0, 1.0);
        }

        samples.push_back({std::move(rec), Tensor({side, side, 1}, std::move(pix))});
    }
    return samples;
}

void write_synthetic_dataset(const std::string& dir, const SyntheticSpec& spec,
                             const std::vector<SyntheticSample>& samples) {
    fs::create_directories(fs::path(dir) / "images");
    std::vector<AnnotationRecord> records;
    records.reserve(samples.size());
    for (const auto& s : samples) {
        save_image((fs::path(dir) / "images" / (s.record.image_id + ".pgm")).string(), s.pixels);
        records.push_back(s.record);
    }
    save_annotations((fs::path(dir) / "annotations.csv").string(), records);
    std::ofstream os(fs::path(dir) / "synthetic_spec.json");
    os << synthetic_spec_to_json(spec) << "\n";
    if (!os) throw DatasetError("cannot write synthetic_spec.json under " + dir);
}

std::string synthetic_spec_to_json(const SyntheticSpec& spec) {
    json j;
    j["sample_count"] = spec.sample_count;
    j["seed"] = spec.seed;
    j["bias_table"] = spec.bias_table;
    j["noise_std"] = spec.noise_std;
    if (spec.observer_offsets)
        j["observer_offsets"] = {{"female", (*spec.observer_offsets)[0]},
                                 {"male", (*spec.observer_offsets)[1]}};
    j["age_range"] = {spec.age_min, spec.age_max};
    j["image_side"] = spec.image_side;
    j["looks_std"] = spec.looks_std;
    j["looks_skew"] = spec.looks_skew;
    j["render_attribute_markers"] = spec.render_attribute_markers;
    j["pixel_noise_std"] = spec.pixel_noise_std;
    j["train_fraction"] = spec.train_fraction;
    j["val_fraction"] = spec.val_fraction;
    return j.dump(2);
}

SyntheticSpec synthetic_spec_from_json(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw DatasetError(std::string("bad synthetic spec JSON: ") + e.what());
    }
    SyntheticSpec spec;
    const std::vector<std::string> known = {
        "sample_count", "seed", "bias_table", "noise_std", "observer_offsets", "age_range",
        "image_side", "looks_std", "looks_skew", "render_attribute_markers", "pixel_noise_std",
        "train_fraction", "val_fraction"};
    for (const auto& [key, _] : j.items())
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw DatasetError("synthetic spec: unknown key '" + key + "'");
    try {
        if (j.contains("sample_count")) spec.sample_count = j["sample_count"].get<int>();
        if (j.contains("seed")) spec.seed = j["seed"].get<std::uint64_t>();
        if (j.contains("bias_table")) spec.bias_table = j["bias_table"].get<std::map<std::string, double>>();
        if (j.contains("noise_std")) spec.noise_std = j["noise_std"].get<double>();
        if (j.contains("observer_offsets")) {
            const auto& o = j["observer_offsets"];
            spec.observer_offsets = std::array<double, 2>{o.at("female").get<double>(),
                                                          o.at("male").get<double>()};
        }
        if (j.contains("age_range")) {
            spec.age_min = j["age_range"].at(0).get<double>();
            spec.age_max = j["age_range"].at(1).get<double>();
        }
        if (j.contains("image_side")) spec.image_side = j["image_side"].get<int>();
        if (j.contains("looks_std")) spec.looks_std = j["looks_std"].get<double>();
        if (j.contains("looks_skew")) spec.looks_skew = j["looks_skew"].get<double>();
        if (j.contains("render_attribute_markers"))
            spec.render_attribute_markers = j["render_attribute_markers"].get<bool>();
        if (j.contains("pixel_noise_std")) spec.pixel_noise_std = j["pixel_noise_std"].get<double>();
        if (j.contains("train_fraction")) spec.train_fraction = j["train_fraction"].get<double>();
        if (j.contains("val_fraction")) spec.val_fraction = j["val_fraction"].get<double>();
    } catch (const json::exception& e) {
        throw DatasetError(std::string("bad synthetic spec JSON: ") + e.what());
    }
    spec.validate();
    return spec;
}

}  // namespace percept
