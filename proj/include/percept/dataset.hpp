// APPA-REAL-style annotation records, categorical attribute encoding and
// age normalization.
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace percept {

constexpr double kAgeMax = 100.0;

struct DatasetError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Gender { Female, Male };
enum class Race { Asian, Afroamerican, Caucasian };
enum class Happiness { Happy, SlightlyHappy, Neutral, Other };
enum class Makeup { Makeup, NoMakeup, NotClear, VerySubtle };
enum class ObserverGender { Female, Male };
enum class Split { Train, Validation, Test };

// Category strings as used in annotation CSVs (lowercase snake case), in
// one-hot block order.
const std::array<std::string, 2>& gender_names();
const std::array<std::string, 3>& race_names();
const std::array<std::string, 4>& happiness_names();
const std::array<std::string, 4>& makeup_names();
const std::array<std::string, 2>& observer_names();
const std::array<std::string, 3>& split_names();

std::string to_string(Gender g);
std::string to_string(Race r);
std::string to_string(Happiness h);
std::string to_string(Makeup m);
std::string to_string(ObserverGender o);
std::string to_string(Split s);

struct AnnotationRecord {
    std::string image_id;
    Split split = Split::Train;
    double real_age = 0.0;       // G_r, years
    double apparent_mean = 0.0;  // G_a, years
    double apparent_std = 0.0;   // carried but unused by training
    Gender gender = Gender::Female;
    Race race = Race::Asian;
    Happiness happiness = Happiness::Happy;
    Makeup makeup = Makeup::Makeup;
    // Per-observer-gender apparent means: [female observer, male observer].
    std::optional<std::array<double, 2>> apparent_by_observer;
};

// Concatenated one-hot blocks gender(2) | race(3) | happiness(4) | makeup(4)
// [| observer(2)]; 13-D base, 15-D with observer gender.
struct AttributeVector {
    std::vector<double> values;
    int size() const { return static_cast<int>(values.size()); }
};

AttributeVector encode_attributes(const AnnotationRecord& record,
                                  std::optional<ObserverGender> observer = std::nullopt);

double normalize_age(double years);    // years / kAgeMax, domain-checked
double denormalize_age(double unit);   // inverse

// Annotation CSV: image_id,split,real_age,apparent_mean,apparent_std,
// gender,race,happiness,makeup[,apparent_female_obs,apparent_male_obs]
std::vector<AnnotationRecord> load_annotations(const std::string& path);
std::vector<AnnotationRecord> load_annotations(const std::string& path, Split split);
void save_annotations(const std::string& path, const std::vector<AnnotationRecord>& records);

}  // namespace percept
