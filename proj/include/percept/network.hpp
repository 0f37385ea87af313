// Network variants: declarative parameter specs plus forward evaluation.
// Full scale reproduces the published layer dimensions exactly (used for
// parameter accounting); desk scale keeps the topology at sizes trainable
// on one CPU core.
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "percept/dataset.hpp"
#include "percept/tensor.hpp"

namespace percept {

enum class ModelVariant { Case1, Case2Prime, Case2, Case3, Case3Observer };
enum class Scale { FullVGG16, Desk };
enum class FreezeGroup { Backbone, NewLayers };
enum class LayerKind { Conv, Dense };

std::string to_string(ModelVariant v);
std::string to_string(Scale s);
ModelVariant variant_from_string(const std::string& s);
Scale scale_from_string(const std::string& s);

struct LayerSpec {
    std::string name;
    LayerKind kind = LayerKind::Dense;
    Shape weight_shape;  // conv: [kh x kw x c_in x c_out]; dense: [n_in x n_out]
    bool has_bias = true;
    FreezeGroup group = FreezeGroup::NewLayers;

    std::int64_t param_count() const;
};

struct NetworkSpec {
    ModelVariant variant = ModelVariant::Case1;
    Scale scale = Scale::Desk;
    int image_side = 32;
    int image_channels = 1;
    int attribute_dim = 0;  // 0 (image-only), 13, or 15
    bool dual_head = false;
    std::vector<LayerSpec> layers;

    const LayerSpec& layer(const std::string& name) const;
    bool has_layer(const std::string& name) const;
};

using ParamMap = std::map<std::string, Tensor>;  // "<layer>.w", "<layer>.b"

struct ModelParams {
    ModelVariant variant = ModelVariant::Case1;
    Scale scale = Scale::Desk;
    std::uint64_t seed = 0;
    ParamMap tensors;

    void set_requires_grad(bool v);
    void zero_grad();
};

struct ForwardOutput {
    Tensor apparent_norm;               // sigmoid output in [0, 1]
    std::optional<Tensor> real_norm;    // dual-head variants only
    double apparent_years() const { return denormalize_age(apparent_norm.value()); }
    std::optional<double> real_years() const {
        if (!real_norm) return std::nullopt;
        return denormalize_age(real_norm->value());
    }
};

NetworkSpec make_spec(ModelVariant variant, Scale scale);

// Glorot-uniform weights, zero biases; deterministic in the seed.
ModelParams init_params(const NetworkSpec& spec, std::uint64_t seed);
std::pair<NetworkSpec, ModelParams> build(ModelVariant variant, Scale scale, std::uint64_t seed);

std::int64_t count_trainable_params(const NetworkSpec& spec);

// Convolutional feature extractor (everything in the Backbone group).
Tensor backbone_features(const NetworkSpec& spec, const ModelParams& params, const Tensor& image,
                         Tape* tape);

// Everything after the backbone; attrs required iff spec.attribute_dim > 0.
ForwardOutput head_forward(const NetworkSpec& spec, const ModelParams& params,
                           const Tensor& features, const Tensor* attrs, Tape* tape);

ForwardOutput forward(const NetworkSpec& spec, const ModelParams& params, const Tensor& image,
                      const Tensor* attrs, Tape* tape);

// Stage 1 trains only the new layers; stage 2 trains everything.
std::vector<std::string> freeze_mask(const NetworkSpec& spec, int stage);

Tensor attribute_tensor(const AttributeVector& v);

}  // namespace percept
