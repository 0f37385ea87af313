// Two-stage training: stage 1 fine-tunes only the new layers against cached
// backbone features, stage 2 trains end-to-end. Mini-batch Adam, equal-weight
// dual MSE, early stopping on the monitored validation quantity, best
// checkpoint by validation MAE.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "percept/adam.hpp"
#include "percept/checkpoint.hpp"
#include "percept/network.hpp"
#include "percept/synthetic.hpp"

namespace percept {

struct TrainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class TargetLabel { Apparent, Real, Dual };
enum class Monitor { ApparentMAE, RealLoss, DualLoss };

std::string to_string(TargetLabel t);
std::string to_string(Monitor m);
TargetLabel target_from_string(const std::string& s);
Monitor monitor_from_string(const std::string& s);

struct TrainConfig {
    double lr_stage1 = 1e-4;
    double lr_stage2 = -1.0;  // < 0: same as lr_stage1
    int max_epochs_stage1 = 3000;
    int max_epochs_stage2 = 1500;
    int patience = 50;
    int batch_size = 32;
    double w_apparent = 1.0;
    double w_real = 1.0;
    Monitor monitor = Monitor::ApparentMAE;
    TargetLabel target_label = TargetLabel::Apparent;
    std::uint64_t seed = 0;  // shuffle generator, independent of weight init

    double stage_lr(int stage) const { return stage == 1 || lr_stage2 < 0.0 ? lr_stage1 : lr_stage2; }
    void validate() const;
};

// Paper learning-rate defaults: 1e-6 for Case1, 1e-4 otherwise; monitor and
// target follow the variant (dual-head trains both losses).
TrainConfig default_train_config(ModelVariant variant, TargetLabel target);

struct EpochRecord {
    int stage = 0;
    int epoch = 0;  // 1-based within the stage
    double train_loss = 0.0;
    double val_loss = 0.0;
    double val_mae_apparent = -1.0;
    double val_mae_real = -1.0;
    double wall_seconds = 0.0;
};

struct TrainLog {
    std::vector<EpochRecord> epochs;
};

void save_train_log_csv(const std::string& path, const TrainLog& log);

// Strict-improvement (>= min_delta) early stopping with patience.
class EarlyStopper {
public:
    explicit EarlyStopper(int patience, double min_delta = 1e-6);
    bool observe(double value);  // true when the value improved on the best
    bool should_stop() const { return since_improve_ >= patience_; }
    int best_epoch() const { return best_epoch_; }
    double best_value() const { return best_value_; }

private:
    int patience_;
    double min_delta_;
    double best_value_;
    int best_epoch_ = 0;
    int seen_ = 0;
    int since_improve_ = 0;
};

// One training instance: image, optional attribute vector, normalized labels.
struct TrainSample {
    Tensor image;
    Tensor attrs;  // invalid() when the variant takes no attributes
    double label_apparent_norm = 0.0;
    double label_real_norm = 0.0;
};

struct RawDataset {
    std::vector<AnnotationRecord> records;
    std::vector<Tensor> images;  // aligned with records
};

RawDataset to_raw(const std::vector<SyntheticSample>& samples);
RawDataset filter_split(const RawDataset& data, Split split);
RawDataset load_dataset_dir(const std::string& dir);
RawDataset load_dataset_dir(const std::string& dir, Split split);

// Observer-conditioned variants expand each record into one instance per
// observer gender, labelled with that observer's apparent mean.
std::vector<TrainSample> prepare_samples(const NetworkSpec& spec, const RawDataset& data);

Tensor sample_loss(const ForwardOutput& out, const TrainSample& sample, const TrainConfig& cfg,
                   Tape* tape);

struct ValMetrics {
    double loss = 0.0;
    double mae_apparent = -1.0;  // vs the apparent labels the run trains on
    double mae_real = -1.0;      // vs real-age labels
    double monitored(const TrainConfig& cfg) const;
    double selection_mae(const TrainConfig& cfg) const;
};

ValMetrics evaluate_on(const NetworkSpec& spec, const ModelParams& params,
                       const std::vector<TrainSample>& samples, const TrainConfig& cfg);

struct StageResult {
    ModelParams best_params;
    CheckpointMeta best_meta;
    double best_selection_mae = 0.0;
};

StageResult train_stage(const NetworkSpec& spec, ModelParams& params, int stage,
                        const std::vector<TrainSample>& train,
                        const std::vector<TrainSample>& val, const TrainConfig& cfg,
                        TrainLog& log);

struct RunCaseResult {
    NetworkSpec spec;
    ModelParams params;  // best checkpoint
    CheckpointMeta meta;
    TrainLog log;
};

RunCaseResult run_case(ModelVariant variant, Scale scale, const RawDataset& train,
                       const RawDataset& val, const TrainConfig& cfg, std::uint64_t init_seed);

}  // namespace percept
