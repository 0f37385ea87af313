// Seed-sweep experiments behind the `repro` CLI commands and the acceptance
// suite. Budgets and dataset settings are pinned here.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "percept/evaluate.hpp"
#include "percept/synthetic.hpp"
#include "percept/train.hpp"

namespace percept {

// Case-ordering sweep (Tables I-II qualitative analog): per seed, four desk
// runs on the same biased synthetic dataset.
struct OrderingOutcome {
    std::uint64_t seed = 0;
    double case1_app_to_real = 0.0;  // Case1-analog trained on apparent labels, test real MAE
    double case1_real_to_real = 0.0;
    double case2_app_to_real = 0.0;
    double case3_real = 0.0;  // dual-head real head

    bool a_holds() const { return case1_app_to_real < case1_real_to_real; }
    bool b_holds() const { return case2_app_to_real < case1_app_to_real; }
    bool c_holds() const { return case3_real <= case2_app_to_real + 0.1; }
};

struct OrderingExperimentResult {
    std::vector<OrderingOutcome> seeds;
    int count_a() const;
    int count_b() const;
    int count_c() const;
    // Each ordering must hold in >= 4 of 5 seeds.
    bool pass() const;
};

SyntheticSpec ordering_dataset_spec(std::uint64_t seed);
TrainConfig ordering_train_config(ModelVariant variant, TargetLabel target, std::uint64_t seed);
OrderingExperimentResult run_case_ordering_experiment(std::ostream* progress);

// Learning sanity: Case2 on zero-noise, zero-bias data reaches test apparent
// MAE < 3 years.
struct SanityOutcome {
    std::uint64_t seed = 0;
    double test_apparent_mae = 0.0;
    bool holds() const { return test_apparent_mae < 3.0; }
};

std::vector<SanityOutcome> run_learning_sanity_experiment(std::ostream* progress);

// Observer-gender proof of concept: matched observer MAE beats cross-matched.
struct ObserverOutcome {
    std::uint64_t seed = 0;
    ObserverEvalResult eval;
    bool holds() const {
        return eval.mae_female < eval.mae_female_crossed && eval.mae_male < eval.mae_male_crossed;
    }
};

std::vector<ObserverOutcome> run_observer_experiment(std::ostream* progress);

}  // namespace percept
