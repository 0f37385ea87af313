// Synthetic biased-perception dataset: images that encode an age signal,
// attributes drawn uniformly per block, and apparent-age labels shifted by
// a configurable per-category bias table.
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "percept/dataset.hpp"
#include "percept/tensor.hpp"

namespace percept {

struct SyntheticSpec {
    int sample_count = 1000;
    std::uint64_t seed = 0;

    // Apparent-age offsets in years, keyed by category string ("female",
    // "happy", ...). Categories absent from the map contribute 0.
    std::map<std::string, double> bias_table = default_bias_table();
    double noise_std = 2.0;  // annotator noise on the apparent mean, years

    // Per-observer-gender offsets [female, male] applied on top of the
    // apparent mean; enables the 15-D observer-conditioned mode.
    std::optional<std::array<double, 2>> observer_offsets;

    double age_min = 1.0;
    double age_max = 90.0;
    int image_side = 32;

    // Hidden per-sample appearance deviation: the image renders
    // clamp(real_age + D) instead of real_age itself, and the apparent mean
    // follows the rendered appearance. looks_std = 0 disables it (the image
    // then encodes real_age exactly). looks_skew blends the deviation from
    // symmetric Gaussian (0) toward an exponential tail (1): most people
    // look slightly young for their age, a few look much older.
    double looks_std = 0.0;
    double looks_skew = 0.0;

    // Draw one corner patch per attribute whose intensity encodes the
    // category, so attributes are recoverable from pixels.
    bool render_attribute_markers = false;

    double pixel_noise_std = 0.02;

    double train_fraction = 0.7;
    double val_fraction = 0.15;  // remainder is the test split

    static std::map<std::string, double> default_bias_table();
    static std::array<double, 2> default_observer_offsets();  // {+1, -1} years
    void validate() const;
};

struct SyntheticSample {
    AnnotationRecord record;
    Tensor pixels;  // [side x side x 1], values in [0, 1]
};

// Fully reproducible from spec.seed; sample i depends only on (seed, i).
std::vector<SyntheticSample> generate_synthetic(const SyntheticSpec& spec);

// Per-record bias offset implied by a bias table.
double bias_for(const std::map<std::string, double>& bias_table, const AnnotationRecord& r);

// Writes images/<id>.pgm plus annotations.csv and synthetic_spec.json.
void write_synthetic_dataset(const std::string& dir, const SyntheticSpec& spec,
                             const std::vector<SyntheticSample>& samples);

std::string synthetic_spec_to_json(const SyntheticSpec& spec);
SyntheticSpec synthetic_spec_from_json(const std::string& json_text);

}  // namespace percept
