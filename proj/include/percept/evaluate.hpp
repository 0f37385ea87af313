// Evaluation protocol: MAE, attribute-stratified tables, five-year-window
// error curves, age histograms, observer-gender analysis.
#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "percept/network.hpp"
#include "percept/train.hpp"

namespace percept {

struct EvalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

double mae(const std::vector<double>& preds, const std::vector<double>& truths);

struct PredictionRow {
    std::string image_id;
    double apparent_pred = 0.0;              // years
    std::optional<double> real_pred;         // dual-head models only
    // Single-head models estimate real age through their one output.
    double effective_real_pred() const { return real_pred ? *real_pred : apparent_pred; }
};

struct PredictionSet {
    std::vector<PredictionRow> rows;
};

void save_predictions_csv(const std::string& path, const PredictionSet& preds);
PredictionSet load_predictions_csv(const std::string& path);

// Runs the model over a dataset; honors PERCEPT_AGE_THREADS for per-sample
// fan-out with index-ordered, deterministic results.
PredictionSet predict_all(const NetworkSpec& spec, const ModelParams& params,
                          const RawDataset& data,
                          std::optional<ObserverGender> observer = std::nullopt);

enum class AttributeKind { Gender, Race, Happiness, Makeup };
const std::vector<AttributeKind>& all_attributes();
std::string to_string(AttributeKind a);
int category_count(AttributeKind a);
std::string category_name(AttributeKind a, int index);
int category_index(AttributeKind a, const AnnotationRecord& r);

struct StratumRow {
    std::string category;
    double train_pct = 0.0;  // share of the training split, percent
    int n = 0;               // test samples in the category
    std::optional<double> mae_real;      // empty category -> no value
    std::optional<double> mae_apparent;
};

// Categories partition the prediction set; train percentages come from the
// training annotations.
std::vector<StratumRow> stratify(const PredictionSet& preds,
                                 const std::vector<AnnotationRecord>& records, AttributeKind attr,
                                 const std::vector<AnnotationRecord>& train_records);

enum class HeadLabel { Real, Apparent };

struct CurvePoint {
    double center = 0.0;
    double mean_abs_error = 0.0;
    int count = 0;
};

// Sliding window over ground-truth age, centers at integer ages 0..AGE_MAX,
// half-width window/2; empty windows are omitted.
std::vector<CurvePoint> error_by_age_window(const PredictionSet& preds,
                                            const std::vector<AnnotationRecord>& records,
                                            HeadLabel head, double window = 5.0);

struct HistogramBin {
    double age = 0.0;  // bin start
    int count = 0;
};

std::vector<HistogramBin> age_histogram(const std::vector<AnnotationRecord>& records,
                                        HeadLabel label, double bin = 1.0);

struct ObserverEvalResult {
    double mae_female = 0.0;  // female-observer inputs vs female-observer labels
    double mae_male = 0.0;
    double mae_female_crossed = 0.0;  // female-observer inputs vs male-observer labels
    double mae_male_crossed = 0.0;
};

ObserverEvalResult observer_eval(const PredictionSet& preds_female_input,
                                 const PredictionSet& preds_male_input,
                                 const std::vector<AnnotationRecord>& records);

struct EvalReport {
    int n = 0;
    double mae_real = 0.0;
    double mae_apparent = 0.0;
    std::map<std::string, std::vector<StratumRow>> attribute_tables;
    std::vector<CurvePoint> error_curve_real;
    std::vector<CurvePoint> error_curve_apparent;
    std::vector<HistogramBin> histogram_real;      // train split
    std::vector<HistogramBin> histogram_apparent;  // train split
    std::optional<ObserverEvalResult> observer;
};

EvalReport build_report(const PredictionSet& preds, const std::vector<AnnotationRecord>& test_records,
                        const std::vector<AnnotationRecord>& train_records);

}  // namespace percept
