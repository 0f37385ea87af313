#include "percept/adam.hpp"

#include <cmath>

namespace percept {

void adam_step(std::map<std::string, Tensor>& params, const std::vector<std::string>& names,
               AdamState& state) {
    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));

    for (const std::string& name : names) {
        auto it = params.find(name);
        if (it == params.end()) throw TensorError("adam_step: unknown parameter " + name);
        Tensor& p = it->second;
        const std::size_t n = static_cast<std::size_t>(p.size());

        auto& mom = state.moments[name];
        if (mom.m.empty()) {
            mom.m.assign(n, 0.0);
            mom.v.assign(n, 0.0);
        } else if (mom.m.size() != n) {
            throw TensorError("adam_step: moment shape mismatch for " + name);
        }

        const bool has_g = p.has_grad();
        const double* g = has_g ? p.grad().data() : nullptr;
        double* pd = p.data().data();
        for (std::size_t i = 0; i < n; ++i) {
            const double gi = has_g ? g[i] : 0.0;
            mom.m[i] = state.beta1 * mom.m[i] + (1.0 - state.beta1) * gi;
            mom.v[i] = state.beta2 * mom.v[i] + (1.0 - state.beta2) * gi * gi;
            const double mhat = mom.m[i] / bc1;
            const double vhat = mom.v[i] / bc2;
            pd[i] -= state.lr * mhat / (std::sqrt(vhat) + state.epsilon);
        }
    }
}

}  // namespace percept
