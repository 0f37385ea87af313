// Adam with bias correction; conventional defaults except the learning rate.
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "percept/tensor.hpp"

namespace percept {

struct AdamState {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::int64_t step = 0;

    struct Moments {
        std::vector<double> m;
        std::vector<double> v;
    };
    std::map<std::string, Moments> moments;
};

// One update over the named parameters from their accumulated gradients.
// Parameters without a populated gradient are treated as zero-gradient.
// Increments the step counter once per call.
void adam_step(std::map<std::string, Tensor>& params, const std::vector<std::string>& names,
               AdamState& state);

}  // namespace percept
