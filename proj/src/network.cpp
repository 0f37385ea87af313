#include "percept/network.hpp"

#include <cmath>
#include <random>

#include "percept/ops.hpp"

namespace percept {

std::string to_string(ModelVariant v) {
    switch (v) {
        case ModelVariant::Case1: return "case1";
        case ModelVariant::Case2Prime: return "case2prime";
        case ModelVariant::Case2: return "case2";
        case ModelVariant::Case3: return "case3";
        case ModelVariant::Case3Observer: return "case3observer";
    }
    throw TensorError("bad variant");
}

std::string to_string(Scale s) { return s == Scale::FullVGG16 ? "full" : "desk"; }

ModelVariant variant_from_string(const std::string& s) {
    for (ModelVariant v : {ModelVariant::Case1, ModelVariant::Case2Prime, ModelVariant::Case2,
                           ModelVariant::Case3, ModelVariant::Case3Observer})
        if (s == to_string(v)) return v;
    throw TensorError("unknown variant '" + s + "' (want case1|case2prime|case2|case3|case3observer)");
}

Scale scale_from_string(const std::string& s) {
    if (s == "full") return Scale::FullVGG16;
    if (s == "desk") return Scale::Desk;
    throw TensorError("unknown scale '" + s + "' (want full|desk)");
}

std::int64_t LayerSpec::param_count() const {
    std::int64_t n = numel(weight_shape);
    if (has_bias) n += weight_shape.back();
    return n;
}

const LayerSpec& NetworkSpec::layer(const std::string& name) const {
    for (const auto& l : layers)
        if (l.name == name) return l;
    throw TensorError("no layer named '" + name + "' in " + to_string(variant));
}

bool NetworkSpec::has_layer(const std::string& name) const {
    for (const auto& l : layers)
        if (l.name == name) return true;
    return false;
}

void ModelParams::set_requires_grad(bool v) {
    for (auto& [_, t] : tensors) t.set_requires_grad(v);
}

void ModelParams::zero_grad() {
    for (auto& [_, t] : tensors) t.zero_grad();
}

namespace {

void add_conv(NetworkSpec& s, const std::string& name, int kh, int kw, int ci, int co, bool bias,
              FreezeGroup group) {
    s.layers.push_back({name, LayerKind::Conv, {kh, kw, ci, co}, bias, group});
}

void add_dense(NetworkSpec& s, const std::string& name, int n_in, int n_out, FreezeGroup group) {
    s.layers.push_back({name, LayerKind::Dense, {n_in, n_out}, true, group});
}

void add_vgg16_backbone(NetworkSpec& s) {
    const int widths[5] = {64, 128, 256, 512, 512};
    const int depths[5] = {2, 2, 3, 3, 3};
    int ci = 3;
    for (int b = 0; b < 5; ++b) {
        for (int c = 0; c < depths[b]; ++c) {
            const std::string name = "block" + std::to_string(b + 1) + "_conv" + std::to_string(c + 1);
            add_conv(s, name, 3, 3, ci, widths[b], true, FreezeGroup::Backbone);
            ci = widths[b];
        }
    }
}

void add_desk_backbone(NetworkSpec& s) {
    add_conv(s, "conv1", 3, 3, 1, 8, true, FreezeGroup::Backbone);
    add_conv(s, "conv2", 3, 3, 8, 16, true, FreezeGroup::Backbone);
    add_conv(s, "conv3", 3, 3, 16, 32, true, FreezeGroup::Backbone);
}

}  // namespace

NetworkSpec make_spec(ModelVariant variant, Scale scale) {
    NetworkSpec s;
    s.variant = variant;
    s.scale = scale;
    s.dual_head = variant == ModelVariant::Case3 || variant == ModelVariant::Case3Observer;
    const bool with_attrs = variant != ModelVariant::Case1 && variant != ModelVariant::Case2Prime;
    s.attribute_dim = with_attrs ? (variant == ModelVariant::Case3Observer ? 15 : 13) : 0;

    if (scale == Scale::FullVGG16) {
        s.image_side = 224;
        s.image_channels = 3;
        add_vgg16_backbone(s);
        if (variant == ModelVariant::Case1) {
            // Standard VGG16 with the 1000-way classifier replaced by one
            // sigmoid unit; the two 4096-D fc layers are retained.
            add_dense(s, "fc1", 7 * 7 * 512, 4096, FreezeGroup::NewLayers);
            add_dense(s, "fc2", 4096, 4096, FreezeGroup::NewLayers);
            add_dense(s, "predict_app", 4096, 1, FreezeGroup::NewLayers);
        } else {
            // Reduction conv collapses block5_pool to 512-D. It carries a
            // bias: 7*7*512*512 + 512 is the only sum that lands on the
            // published 27,694,541.
            add_conv(s, "reduction_conv", 7, 7, 512, 512, true, FreezeGroup::NewLayers);
            if (with_attrs) add_dense(s, "hidden_layer", s.attribute_dim, 10, FreezeGroup::NewLayers);
            add_dense(s, "fc2", with_attrs ? 512 + 10 : 512, 256, FreezeGroup::NewLayers);
            add_dense(s, "predict_app", 256, 1, FreezeGroup::NewLayers);
            if (s.dual_head) {
                add_dense(s, "hidden_layer_2", s.attribute_dim, 5, FreezeGroup::NewLayers);
                add_dense(s, "fc3", 1 + 5, 6, FreezeGroup::NewLayers);
                add_dense(s, "predict_real", 6, 1, FreezeGroup::NewLayers);
            }
        }
    } else {
        s.image_side = 32;
        s.image_channels = 1;
        add_desk_backbone(s);
        if (variant == ModelVariant::Case1) {
            // Keeps the published capacity ratio: the retained fc head is
            // roughly an order of magnitude larger than the reduction-conv
            // heads of the other variants.
            add_dense(s, "fc1", 4 * 4 * 32, 384, FreezeGroup::NewLayers);
            add_dense(s, "fc2", 384, 384, FreezeGroup::NewLayers);
            add_dense(s, "predict_app", 384, 1, FreezeGroup::NewLayers);
        } else {
            add_conv(s, "reduction_conv", 4, 4, 32, 64, true, FreezeGroup::NewLayers);
            if (with_attrs) add_dense(s, "hidden_layer", s.attribute_dim, 10, FreezeGroup::NewLayers);
            add_dense(s, "fc2", with_attrs ? 64 + 10 : 64, 32, FreezeGroup::NewLayers);
            add_dense(s, "predict_app", 32, 1, FreezeGroup::NewLayers);
            if (s.dual_head) {
                add_dense(s, "hidden_layer_2", s.attribute_dim, 5, FreezeGroup::NewLayers);
                add_dense(s, "fc3", 1 + 5, 6, FreezeGroup::NewLayers);
                add_dense(s, "predict_real", 6, 1, FreezeGroup::NewLayers);
            }
        }
    }
    return s;
}

ModelParams init_params(const NetworkSpec& spec, std::uint64_t seed) {
    ModelParams p;
    p.variant = spec.variant;
    p.scale = spec.scale;
    p.seed = seed;
    std::mt19937_64 rng(seed);
    for (const auto& l : spec.layers) {
        double fan_in, fan_out;
        if (l.kind == LayerKind::Conv) {
            const auto& w = l.weight_shape;
            fan_in = static_cast<double>(w[0]) * w[1] * w[2];
            fan_out = static_cast<double>(w[0]) * w[1] * w[3];
        } else {
            fan_in = l.weight_shape[0];
            fan_out = l.weight_shape[1];
        }
        const double s = std::sqrt(6.0 / (fan_in + fan_out));
        std::uniform_real_distribution<double> dist(-s, s);
        Tensor w = Tensor::zeros(l.weight_shape, true);
        for (double& v : w.data()) v = dist(rng);
        p.tensors.emplace(l.name + ".w", std::move(w));
        if (l.has_bias)
            p.tensors.emplace(l.name + ".b", Tensor::zeros({l.weight_shape.back()}, true));
    }
    return p;
}

std::pair<NetworkSpec, ModelParams> build(ModelVariant variant, Scale scale, std::uint64_t seed) {
    NetworkSpec spec = make_spec(variant, scale);
    ModelParams params = init_params(spec, seed);
    return {std::move(spec), std::move(params)};
}

std::int64_t count_trainable_params(const NetworkSpec& spec) {
    std::int64_t n = 0;
    for (const auto& l : spec.layers) n += l.param_count();
    return n;
}

namespace {

const Tensor& param(const ParamMap& m, const std::string& name) {
    auto it = m.find(name);
    if (it == m.end()) throw TensorError("missing parameter " + name);
    return it->second;
}

const Tensor* param_ptr(const ParamMap& m, const std::string& name) {
    auto it = m.find(name);
    return it == m.end() ? nullptr : &it->second;
}

Tensor conv_block(Tape* tape, const ParamMap& m, const std::string& name, const Tensor& x) {
    Tensor y = ops::conv2d(tape, x, param(m, name + ".w"), param_ptr(m, name + ".b"), 1,
                           ops::Padding::Same);
    y = ops::relu(tape, y);
    return ops::maxpool2(tape, y);
}

Tensor dense_relu(Tape* tape, const ParamMap& m, const std::string& name, const Tensor& x) {
    return ops::relu(tape, ops::dense(tape, x, param(m, name + ".w"), param_ptr(m, name + ".b")));
}

Tensor dense_sigmoid(Tape* tape, const ParamMap& m, const std::string& name, const Tensor& x) {
    return ops::sigmoid(tape, ops::dense(tape, x, param(m, name + ".w"), param_ptr(m, name + ".b")));
}

}  // namespace

Tensor backbone_features(const NetworkSpec& spec, const ModelParams& params, const Tensor& image,
                         Tape* tape) {
    if (image.shape().size() != 3 || image.shape()[0] != spec.image_side ||
        image.shape()[1] != spec.image_side || image.shape()[2] != spec.image_channels)
        throw TensorError("forward: image shape " + shape_str(image.shape()) + " does not match " +
                          to_string(spec.scale) + " scale (" + std::to_string(spec.image_side) + "x" +
                          std::to_string(spec.image_side) + "x" + std::to_string(spec.image_channels) +
                          ")");
    const ParamMap& m = params.tensors;
    Tensor x = image;
    if (spec.scale == Scale::FullVGG16) {
        const int depths[5] = {2, 2, 3, 3, 3};
        for (int b = 0; b < 5; ++b) {
            for (int c = 0; c < depths[b]; ++c) {
                const std::string name =
                    "block" + std::to_string(b + 1) + "_conv" + std::to_string(c + 1);
                x = ops::relu(tape, ops::conv2d(tape, x, param(m, name + ".w"),
                                                param_ptr(m, name + ".b"), 1, ops::Padding::Same));
            }
            x = ops::maxpool2(tape, x);
        }
    } else {
        x = conv_block(tape, m, "conv1", x);
        x = conv_block(tape, m, "conv2", x);
        x = conv_block(tape, m, "conv3", x);
    }
    return x;
}

ForwardOutput head_forward(const NetworkSpec& spec, const ModelParams& params,
                           const Tensor& features, const Tensor* attrs, Tape* tape) {
    if (spec.attribute_dim == 0) {
        if (attrs)
            throw TensorError("forward: " + to_string(spec.variant) + " takes no attribute vector");
    } else {
        if (!attrs)
            throw TensorError("forward: " + to_string(spec.variant) + " requires an attribute vector");
        if (attrs->shape() != Shape{spec.attribute_dim})
            throw TensorError("forward: attribute vector " + shape_str(attrs->shape()) + " must be [" +
                              std::to_string(spec.attribute_dim) + "]");
    }

    const ParamMap& m = params.tensors;
    ForwardOutput out;
    if (spec.variant == ModelVariant::Case1) {
        Tensor flat = ops::reshape(tape, features, {static_cast<int>(features.size())});
        Tensor h = dense_relu(tape, m, "fc1", flat);
        h = dense_relu(tape, m, "fc2", h);
        out.apparent_norm = dense_sigmoid(tape, m, "predict_app", h);
        return out;
    }

    Tensor r = ops::conv2d(tape, features, param(m, "reduction_conv.w"),
                           param_ptr(m, "reduction_conv.b"), 1, ops::Padding::Valid);
    r = ops::relu(tape, r);
    Tensor flat = ops::reshape(tape, r, {static_cast<int>(r.size())});

    Tensor fused = flat;
    if (spec.attribute_dim > 0) {
        Tensor a = dense_relu(tape, m, "hidden_layer", *attrs);
        fused = ops::concat(tape, {flat, a});
    }
    Tensor h = dense_relu(tape, m, "fc2", fused);
    out.apparent_norm = dense_sigmoid(tape, m, "predict_app", h);

    if (spec.dual_head) {
        // The real head consumes the normalized apparent output; gradients
        // flow through it end-to-end.
        Tensor a2 = dense_relu(tape, m, "hidden_layer_2", *attrs);
        Tensor c = ops::concat(tape, {out.apparent_norm, a2});
        Tensor h2 = dense_relu(tape, m, "fc3", c);
        out.real_norm = dense_sigmoid(tape, m, "predict_real", h2);
    }
    return out;
}

ForwardOutput forward(const NetworkSpec& spec, const ModelParams& params, const Tensor& image,
                      const Tensor* attrs, Tape* tape) {
    Tensor features = backbone_features(spec, params, image, tape);
    return head_forward(spec, params, features, attrs, tape);
}

std::vector<std::string> freeze_mask(const NetworkSpec& spec, int stage) {
    if (stage != 1 && stage != 2) throw TensorError("freeze_mask: stage must be 1 or 2");
    std::vector<std::string> names;
    for (const auto& l : spec.layers) {
        if (stage == 1 && l.group != FreezeGroup::NewLayers) continue;
        names.push_back(l.name + ".w");
        if (l.has_bias) names.push_back(l.name + ".b");
    }
    return names;
}

Tensor attribute_tensor(const AttributeVector& v) {
    return Tensor({v.size()}, v.values);
}

}  // namespace percept
