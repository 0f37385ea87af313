#include "percept/experiment.hpp"

#include <ostream>

namespace percept {

namespace {

constexpr std::uint64_t kSweepSeeds[5] = {101, 102, 103, 104, 105};

double test_real_mae(const RunCaseResult& run, const RawDataset& test) {
    PredictionSet preds = predict_all(run.spec, run.params, test);
    std::vector<double> p, t;
    p.reserve(preds.rows.size());
    t.reserve(preds.rows.size());
    for (std::size_t i = 0; i < preds.rows.size(); ++i) {
        p.push_back(preds.rows[i].effective_real_pred());
        t.push_back(test.records[i].real_age);
    }
    return mae(p, t);
}

double test_apparent_mae(const RunCaseResult& run, const RawDataset& test) {
    PredictionSet preds = predict_all(run.spec, run.params, test);
    std::vector<double> p, t;
    for (std::size_t i = 0; i < preds.rows.size(); ++i) {
        p.push_back(preds.rows[i].apparent_pred);
        t.push_back(test.records[i].apparent_mean);
    }
    return mae(p, t);
}

}  // namespace

int OrderingExperimentResult::count_a() const {
    int n = 0;
    for (const auto& s : seeds) n += s.a_holds();
    return n;
}
int OrderingExperimentResult::count_b() const {
    int n = 0;
    for (const auto& s : seeds) n += s.b_holds();
    return n;
}
int OrderingExperimentResult::count_c() const {
    int n = 0;
    for (const auto& s : seeds) n += s.c_holds();
    return n;
}
bool OrderingExperimentResult::pass() const {
    return seeds.size() == 5 && count_a() >= 4 && count_b() >= 4 && count_c() >= 4;
}

SyntheticSpec ordering_dataset_spec(std::uint64_t seed) {
    SyntheticSpec spec;
    spec.sample_count = 3000;  // 2000 train / 500 val / 500 test
    spec.train_fraction = 2.0 / 3.0;
    spec.val_fraction = 1.0 / 6.0;
    spec.seed = seed;
    spec.noise_std = 2.0;
    // Real labels must be noisy with respect to the image for apparent
    // labels to stand a chance (the images render looks, not real age), the
    // deviation is skewed so MSE-trained real regressors sit off the MAE
    // optimum, and attribute markers give pixels-only models information
    // parity with the attribute-fed ones.
    spec.looks_std = 6.0;
    spec.looks_skew = 1.0;
    spec.render_attribute_markers = true;
    return spec;
}

TrainConfig ordering_train_config(ModelVariant variant, TargetLabel target, std::uint64_t seed) {
    TrainConfig cfg = default_train_config(variant, target);
    cfg.lr_stage1 = 2e-3;  // desk-scale budget; paper lrs assume a pretrained backbone
    cfg.lr_stage2 = 2e-3;
    cfg.max_epochs_stage1 = 12;
    cfg.max_epochs_stage2 = 24;
    cfg.patience = 6;
    cfg.batch_size = 32;
    cfg.seed = seed * 13 + 5;
    return cfg;
}

OrderingExperimentResult run_case_ordering_experiment(std::ostream* progress) {
    OrderingExperimentResult result;
    for (std::uint64_t seed : kSweepSeeds) {
        const auto samples = generate_synthetic(ordering_dataset_spec(seed));
        const RawDataset all = to_raw(samples);
        const RawDataset train = filter_split(all, Split::Train);
        const RawDataset val = filter_split(all, Split::Validation);
        const RawDataset test = filter_split(all, Split::Test);
        const std::uint64_t init_seed = seed * 7 + 1;

        OrderingOutcome o;
        o.seed = seed;
        auto run = [&](ModelVariant v, TargetLabel t) {
            return run_case(v, Scale::Desk, train, val, ordering_train_config(v, t, seed), init_seed);
        };
        o.case1_app_to_real = test_real_mae(run(ModelVariant::Case1, TargetLabel::Apparent), test);
        if (progress) *progress << "  seed " << seed << " case1 app->real  " << o.case1_app_to_real << "\n";
        o.case1_real_to_real = test_real_mae(run(ModelVariant::Case1, TargetLabel::Real), test);
        if (progress) *progress << "  seed " << seed << " case1 real->real " << o.case1_real_to_real << "\n";
        o.case2_app_to_real = test_real_mae(run(ModelVariant::Case2, TargetLabel::Apparent), test);
        if (progress) *progress << "  seed " << seed << " case2 app->real  " << o.case2_app_to_real << "\n";
        o.case3_real = test_real_mae(run(ModelVariant::Case3, TargetLabel::Dual), test);
        if (progress) *progress << "  seed " << seed << " case3 dual real  " << o.case3_real << "\n";
        result.seeds.push_back(o);
    }
    return result;
}

std::vector<SanityOutcome> run_learning_sanity_experiment(std::ostream* progress) {
    std::vector<SanityOutcome> out;
    for (std::uint64_t seed : kSweepSeeds) {
        SyntheticSpec spec;
        spec.sample_count = 1200;  // 800 train / 200 val / 200 test
        spec.train_fraction = 2.0 / 3.0;
        spec.val_fraction = 1.0 / 6.0;
        spec.seed = seed;
        spec.bias_table.clear();
        spec.noise_std = 0.0;
        const auto samples = generate_synthetic(spec);
        const RawDataset all = to_raw(samples);

        TrainConfig cfg = ordering_train_config(ModelVariant::Case2, TargetLabel::Apparent, seed);
        cfg.max_epochs_stage1 = 10;
        cfg.max_epochs_stage2 = 20;
        RunCaseResult run = run_case(ModelVariant::Case2, Scale::Desk, filter_split(all, Split::Train),
                                     filter_split(all, Split::Validation), cfg, seed * 7 + 1);
        SanityOutcome s;
        s.seed = seed;
        s.test_apparent_mae = test_apparent_mae(run, filter_split(all, Split::Test));
        if (progress) *progress << "  seed " << seed << " case2 apparent MAE " << s.test_apparent_mae << "\n";
        out.push_back(s);
    }
    return out;
}

std::vector<ObserverOutcome> run_observer_experiment(std::ostream* progress) {
    std::vector<ObserverOutcome> out;
    for (std::uint64_t seed : kSweepSeeds) {
        SyntheticSpec spec;
        spec.sample_count = 1200;
        spec.train_fraction = 2.0 / 3.0;
        spec.val_fraction = 1.0 / 6.0;
        spec.seed = seed;
        spec.observer_offsets = SyntheticSpec::default_observer_offsets();
        const auto samples = generate_synthetic(spec);
        const RawDataset all = to_raw(samples);
        const RawDataset test = filter_split(all, Split::Test);

        TrainConfig cfg = ordering_train_config(ModelVariant::Case3Observer, TargetLabel::Dual, seed);
        cfg.max_epochs_stage1 = 10;
        cfg.max_epochs_stage2 = 20;
        RunCaseResult run =
            run_case(ModelVariant::Case3Observer, Scale::Desk, filter_split(all, Split::Train),
                     filter_split(all, Split::Validation), cfg, seed * 7 + 1);

        ObserverOutcome o;
        o.seed = seed;
        o.eval = observer_eval(predict_all(run.spec, run.params, test, ObserverGender::Female),
                               predict_all(run.spec, run.params, test, ObserverGender::Male),
                               test.records);
        if (progress)
            *progress << "  seed " << seed << " matched f/m " << o.eval.mae_female << "/"
                      << o.eval.mae_male << "  crossed f/m " << o.eval.mae_female_crossed << "/"
                      << o.eval.mae_male_crossed << "\n";
        out.push_back(o);
    }
    return out;
}

}  // namespace percept
