#include "percept/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>

#include "percept/image_io.hpp"
#include "percept/ops.hpp"

namespace percept {

namespace fs = std::filesystem;

std::string to_string(TargetLabel t) {
    switch (t) {
        case TargetLabel::Apparent: return "apparent";
        case TargetLabel::Real: return "real";
        case TargetLabel::Dual: return "dual";
    }
    throw TrainError("bad target label");
}

std::string to_string(Monitor m) {
    switch (m) {
        case Monitor::ApparentMAE: return "apparent_mae";
        case Monitor::RealLoss: return "real_loss";
        case Monitor::DualLoss: return "dual_loss";
    }
    throw TrainError("bad monitor");
}

TargetLabel target_from_string(const std::string& s) {
    for (TargetLabel t : {TargetLabel::Apparent, TargetLabel::Real, TargetLabel::Dual})
        if (s == to_string(t)) return t;
    throw TrainError("unknown target label '" + s + "' (want apparent|real|dual)");
}

Monitor monitor_from_string(const std::string& s) {
    for (Monitor m : {Monitor::ApparentMAE, Monitor::RealLoss, Monitor::DualLoss})
        if (s == to_string(m)) return m;
    throw TrainError("unknown monitor '" + s + "' (want apparent_mae|real_loss|dual_loss)");
}

void TrainConfig::validate() const {
    if (!(lr_stage1 > 0.0)) throw TrainError("lr_stage1 must be > 0");
    if (lr_stage2 >= 0.0 && !(lr_stage2 > 0.0)) throw TrainError("lr_stage2 must be > 0");
    if (max_epochs_stage1 < 1 || max_epochs_stage2 < 1) throw TrainError("max epochs must be >= 1");
    if (patience < 1) throw TrainError("patience must be >= 1");
    if (batch_size < 1) throw TrainError("batch_size must be >= 1");
    if (w_apparent < 0.0 || w_real < 0.0 || (w_apparent == 0.0 && w_real == 0.0))
        throw TrainError("loss weights must be >= 0 and not both zero");
}

TrainConfig default_train_config(ModelVariant variant, TargetLabel target) {
    TrainConfig cfg;
    cfg.lr_stage1 = variant == ModelVariant::Case1 ? 1e-6 : 1e-4;
    cfg.target_label = target;
    switch (target) {
        case TargetLabel::Apparent: cfg.monitor = Monitor::ApparentMAE; break;
        case TargetLabel::Real: cfg.monitor = Monitor::RealLoss; break;
        case TargetLabel::Dual: cfg.monitor = Monitor::DualLoss; break;
    }
    return cfg;
}

void save_train_log_csv(const std::string& path, const TrainLog& log) {
    std::ofstream os(path);
    if (!os) throw TrainError("cannot write " + path);
    os << "stage,epoch,train_loss,val_loss,val_mae_apparent,val_mae_real,wall_seconds\n";
    os.precision(17);
    for (const auto& e : log.epochs) {
        os << e.stage << ',' << e.epoch << ',' << e.train_loss << ',' << e.val_loss << ',';
        if (e.val_mae_apparent >= 0.0) os << e.val_mae_apparent;
        os << ',';
        if (e.val_mae_real >= 0.0) os << e.val_mae_real;
        os << ',' << e.wall_seconds << "\n";
    }
}

EarlyStopper::EarlyStopper(int patience, double min_delta)
    : patience_(patience), min_delta_(min_delta), best_value_(std::numeric_limits<double>::infinity()) {
    if (patience < 1) throw TrainError("patience must be >= 1");
}

bool EarlyStopper::observe(double value) {
    ++seen_;
    if (value <= best_value_ - min_delta_ || seen_ == 1) {
        best_value_ = value;
        best_epoch_ = seen_;
        since_improve_ = 0;
        return true;
    }
    ++since_improve_;
    return false;
}

RawDataset to_raw(const std::vector<SyntheticSample>& samples) {
    RawDataset d;
    d.records.reserve(samples.size());
    d.images.reserve(samples.size());
    for (const auto& s : samples) {
        d.records.push_back(s.record);
        d.images.push_back(s.pixels);
    }
    return d;
}

RawDataset filter_split(const RawDataset& data, Split split) {
    RawDataset d;
    for (std::size_t i = 0; i < data.records.size(); ++i) {
        if (data.records[i].split == split) {
            d.records.push_back(data.records[i]);
            d.images.push_back(data.images[i]);
        }
    }
    return d;
}

RawDataset load_dataset_dir(const std::string& dir) {
    RawDataset d;
    d.records = load_annotations((fs::path(dir) / "annotations.csv").string());
    d.images.reserve(d.records.size());
    for (const auto& r : d.records) {
        const fs::path base = fs::path(dir) / "images" / r.image_id;
        Tensor img;
        bool found = false;
        for (const char* ext : {".pgm", ".ppm", ".ptns"}) {
            const fs::path p = base.string() + ext;
            if (fs::exists(p)) {
                img = load_image(p.string());
                found = true;
                break;
            }
        }
        if (!found) throw DatasetError("no image for " + r.image_id + " under " + dir);
        d.images.push_back(std::move(img));
    }
    return d;
}

RawDataset load_dataset_dir(const std::string& dir, Split split) {
    return filter_split(load_dataset_dir(dir), split);
}

std::vector<TrainSample> prepare_samples(const NetworkSpec& spec, const RawDataset& data) {
    if (data.records.size() != data.images.size())
        throw TrainError("records and images are misaligned");
    const bool observer = spec.variant == ModelVariant::Case3Observer;
    std::vector<TrainSample> out;
    out.reserve(data.records.size() * (observer ? 2 : 1));
    for (std::size_t i = 0; i < data.records.size(); ++i) {
        const auto& r = data.records[i];
        if (observer) {
            if (!r.apparent_by_observer)
                throw TrainError(r.image_id + ": observer-conditioned run needs per-observer labels");
            for (ObserverGender g : {ObserverGender::Female, ObserverGender::Male}) {
                TrainSample s;
                s.image = data.images[i];
                s.attrs = attribute_tensor(encode_attributes(r, g));
                s.label_apparent_norm =
                    normalize_age((*r.apparent_by_observer)[static_cast<std::size_t>(g)]);
                s.label_real_norm = normalize_age(r.real_age);
                out.push_back(std::move(s));
            }
        } else {
            TrainSample s;
            s.image = data.images[i];
            if (spec.attribute_dim > 0) s.attrs = attribute_tensor(encode_attributes(r));
            s.label_apparent_norm = normalize_age(r.apparent_mean);
            s.label_real_norm = normalize_age(r.real_age);
            out.push_back(std::move(s));
        }
    }
    return out;
}

Tensor sample_loss(const ForwardOutput& out, const TrainSample& sample, const TrainConfig& cfg,
                   Tape* tape) {
    switch (cfg.target_label) {
        case TargetLabel::Apparent:
            return ops::mse(tape, out.apparent_norm, Tensor::scalar(sample.label_apparent_norm));
        case TargetLabel::Real: {
            // Single-head variants regress real age through their one head.
            const Tensor& head = out.real_norm ? *out.real_norm : out.apparent_norm;
            return ops::mse(tape, head, Tensor::scalar(sample.label_real_norm));
        }
        case TargetLabel::Dual: {
            if (!out.real_norm)
                throw TrainError("dual loss requires a dual-head variant");
            Tensor la = ops::mse(tape, out.apparent_norm, Tensor::scalar(sample.label_apparent_norm));
            Tensor lr = ops::mse(tape, *out.real_norm, Tensor::scalar(sample.label_real_norm));
            return ops::add(tape, ops::scale(tape, la, cfg.w_apparent),
                            ops::scale(tape, lr, cfg.w_real));
        }
    }
    throw TrainError("bad target label");
}

double ValMetrics::monitored(const TrainConfig& cfg) const {
    return cfg.monitor == Monitor::ApparentMAE ? mae_apparent : loss;
}

double ValMetrics::selection_mae(const TrainConfig& cfg) const {
    if (cfg.monitor == Monitor::ApparentMAE) return mae_apparent;
    return mae_real >= 0.0 ? mae_real : mae_apparent;
}

namespace {

// Forward pass shared by stage-1 (cached features) and full evaluation.
ForwardOutput forward_sample(const NetworkSpec& spec, const ModelParams& params,
                             const TrainSample& s, const Tensor* features, Tape* tape) {
    const Tensor* attrs = s.attrs.valid() ? &s.attrs : nullptr;
    if (features) return head_forward(spec, params, *features, attrs, tape);
    return forward(spec, params, s.image, attrs, tape);
}

ValMetrics metrics_over(const NetworkSpec& spec, const ModelParams& params,
                        const std::vector<TrainSample>& samples,
                        const std::vector<Tensor>* features, const TrainConfig& cfg) {
    if (samples.empty()) throw TrainError("empty evaluation set");
    double loss_sum = 0.0, abs_app = 0.0, abs_real = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& s = samples[i];
        ForwardOutput out =
            forward_sample(spec, params, s, features ? &(*features)[i] : nullptr, nullptr);
        loss_sum += sample_loss(out, s, cfg, nullptr).value();
        abs_app += std::abs(out.apparent_years() - denormalize_age(s.label_apparent_norm));
        const double real_pred = out.real_norm ? denormalize_age(out.real_norm->value())
                                               : out.apparent_years();
        abs_real += std::abs(real_pred - denormalize_age(s.label_real_norm));
    }
    ValMetrics m;
    const double n = static_cast<double>(samples.size());
    m.loss = loss_sum / n;
    m.mae_apparent = abs_app / n;
    m.mae_real = abs_real / n;
    return m;
}

std::vector<Tensor> cache_features(const NetworkSpec& spec, const ModelParams& params,
                                   const std::vector<TrainSample>& samples) {
    std::vector<Tensor> features;
    features.reserve(samples.size());
    for (const auto& s : samples) features.push_back(backbone_features(spec, params, s.image, nullptr));
    return features;
}

}  // namespace

ValMetrics evaluate_on(const NetworkSpec& spec, const ModelParams& params,
                       const std::vector<TrainSample>& samples, const TrainConfig& cfg) {
    return metrics_over(spec, params, samples, nullptr, cfg);
}

StageResult train_stage(const NetworkSpec& spec, ModelParams& params, int stage,
                        const std::vector<TrainSample>& train,
                        const std::vector<TrainSample>& val, const TrainConfig& cfg,
                        TrainLog& log) {
    cfg.validate();
    if (stage != 1 && stage != 2) throw TrainError("stage must be 1 or 2");
    if (train.empty() || val.empty()) throw TrainError("empty train or validation set");

    const std::vector<std::string> mask = freeze_mask(spec, stage);
    const int max_epochs = stage == 1 ? cfg.max_epochs_stage1 : cfg.max_epochs_stage2;

    // Stage 1 leaves the backbone untouched: freeze it on the tape and train
    // the head against cached features.
    std::vector<Tensor> train_features, val_features;
    const bool cached = stage == 1;
    for (auto& [name, t] : params.tensors) t.set_requires_grad(true);
    if (cached) {
        for (const auto& l : spec.layers)
            if (l.group == FreezeGroup::Backbone) {
                params.tensors.at(l.name + ".w").set_requires_grad(false);
                if (l.has_bias) params.tensors.at(l.name + ".b").set_requires_grad(false);
            }
        train_features = cache_features(spec, params, train);
        val_features = cache_features(spec, params, val);
    }

    AdamState adam;
    adam.lr = cfg.stage_lr(stage);
    std::mt19937_64 shuffle_rng(cfg.seed);
    std::vector<std::size_t> order(train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    EarlyStopper stopper(cfg.patience);
    StageResult best;
    double best_mae = std::numeric_limits<double>::infinity();
    const auto t0 = std::chrono::steady_clock::now();

    for (int epoch = 1; epoch <= max_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        double loss_sum = 0.0;
        try {
            for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
                const std::size_t end = std::min(order.size(), start + cfg.batch_size);
                params.zero_grad();
                Tape tape;
                Tensor batch_loss;
                for (std::size_t k = start; k < end; ++k) {
                    const std::size_t i = order[k];
                    ForwardOutput out = forward_sample(spec, params, train[i],
                                                       cached ? &train_features[i] : nullptr, &tape);
                    Tensor l = sample_loss(out, train[i], cfg, &tape);
                    batch_loss = batch_loss.valid() ? ops::add(&tape, batch_loss, l) : l;
                }
                loss_sum += batch_loss.value();
                Tensor mean_loss =
                    ops::scale(&tape, batch_loss, 1.0 / static_cast<double>(end - start));
                tape.backward(mean_loss);
                adam_step(params.tensors, mask, adam);
            }
        } catch (const TensorError& e) {
            throw TrainError("stage " + std::to_string(stage) + " epoch " + std::to_string(epoch) +
                             ": diverged (" + e.what() + ")");
        }

        ValMetrics vm = metrics_over(spec, params, val, cached ? &val_features : nullptr, cfg);
        EpochRecord rec;
        rec.stage = stage;
        rec.epoch = epoch;
        rec.train_loss = loss_sum / static_cast<double>(train.size());
        rec.val_loss = vm.loss;
        rec.val_mae_apparent = vm.mae_apparent;
        rec.val_mae_real = vm.mae_real;
        rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        log.epochs.push_back(rec);

        stopper.observe(vm.monitored(cfg));
        const double sel = vm.selection_mae(cfg);
        if (sel < best_mae) {
            best_mae = sel;
            best.best_params = params;
            best.best_params.tensors.clear();
            for (const auto& [name, t] : params.tensors) {
                Tensor c = t.detached();
                c.set_requires_grad(true);
                best.best_params.tensors.emplace(name, std::move(c));
            }
            best.best_meta.stage = stage;
            best.best_meta.epoch = epoch;
            best.best_meta.val_mae_apparent = vm.mae_apparent;
            best.best_meta.val_mae_real = vm.mae_real;
            best.best_selection_mae = sel;
        }
        if (stopper.should_stop()) break;
    }

    for (auto& [name, t] : params.tensors) t.set_requires_grad(true);
    if (!best.best_params.tensors.empty()) {
        best.best_params.variant = params.variant;
        best.best_params.scale = params.scale;
        best.best_params.seed = params.seed;
    }
    return best;
}

RunCaseResult run_case(ModelVariant variant, Scale scale, const RawDataset& train,
                       const RawDataset& val, const TrainConfig& cfg, std::uint64_t init_seed) {
    auto [spec, params] = build(variant, scale, init_seed);
    const auto train_samples = prepare_samples(spec, train);
    const auto val_samples = prepare_samples(spec, val);

    RunCaseResult result;
    result.spec = spec;

    StageResult s1 = train_stage(spec, params, 1, train_samples, val_samples, cfg, result.log);
    params = s1.best_params;  // stage 2 starts from the stage-1 best
    StageResult s2 = train_stage(spec, params, 2, train_samples, val_samples, cfg, result.log);

    const bool use_s2 = s2.best_selection_mae <= s1.best_selection_mae;
    const StageResult& chosen = use_s2 ? s2 : s1;
    result.params = chosen.best_params;
    result.meta = chosen.best_meta;
    return result;
}

}  // namespace percept
