#include "percept/checkpoint.hpp"

#include <filesystem>
#include <fstream>

#include <json.hpp>

namespace percept {

namespace fs = std::filesystem;
using nlohmann::json;

void save_checkpoint(const std::string& dir, const NetworkSpec& spec, const ModelParams& params,
                     const CheckpointMeta& meta) {
    fs::create_directories(dir);
    json manifest;
    manifest["format"] = "percept-age-checkpoint";
    manifest["version"] = 1;
    manifest["variant"] = to_string(spec.variant);
    manifest["scale"] = to_string(spec.scale);
    manifest["init_seed"] = params.seed;
    json layers = json::array();
    for (const auto& l : spec.layers) {
        layers.push_back({{"name", l.name},
                          {"kind", l.kind == LayerKind::Conv ? "conv" : "dense"},
                          {"weight_shape", l.weight_shape},
                          {"bias", l.has_bias},
                          {"group", l.group == FreezeGroup::Backbone ? "backbone" : "new_layers"}});
    }
    manifest["layers"] = layers;
    json tensors = json::array();
    for (const auto& [name, t] : params.tensors) {
        tensors.push_back({{"name", name}, {"file", name + ".ptns"}, {"shape", t.shape()}});
        save_tensor((fs::path(dir) / (name + ".ptns")).string(), t);
    }
    manifest["params"] = tensors;
    manifest["training"] = {{"stage", meta.stage},
                            {"epoch", meta.epoch},
                            {"val_mae_apparent", meta.val_mae_apparent},
                            {"val_mae_real", meta.val_mae_real}};
    std::ofstream os(fs::path(dir) / "manifest.json");
    if (!os) throw CheckpointError("cannot write manifest under " + dir);
    os << manifest.dump(2) << "\n";
}

LoadedCheckpoint load_checkpoint(const std::string& dir) {
    std::ifstream is(fs::path(dir) / "manifest.json");
    if (!is) throw CheckpointError("no manifest.json under " + dir);
    json manifest;
    try {
        is >> manifest;
    } catch (const json::exception& e) {
        throw CheckpointError(std::string("bad manifest: ") + e.what());
    }
    if (manifest.value("format", "") != "percept-age-checkpoint")
        throw CheckpointError(dir + ": not a checkpoint directory");

    LoadedCheckpoint out;
    out.spec = make_spec(variant_from_string(manifest.at("variant").get<std::string>()),
                         scale_from_string(manifest.at("scale").get<std::string>()));
    out.params.variant = out.spec.variant;
    out.params.scale = out.spec.scale;
    out.params.seed = manifest.value("init_seed", 0ull);
    for (const auto& entry : manifest.at("params")) {
        const std::string name = entry.at("name").get<std::string>();
        Tensor t = load_tensor((fs::path(dir) / entry.at("file").get<std::string>()).string());
        const Shape expect = entry.at("shape").get<Shape>();
        if (t.shape() != expect)
            throw CheckpointError(name + ": shape " + shape_str(t.shape()) + " != manifest " +
                                  shape_str(expect));
        t.set_requires_grad(true);
        out.params.tensors.emplace(name, std::move(t));
    }
    // Every spec layer must be present with the spec's shape.
    for (const auto& l : out.spec.layers) {
        auto it = out.params.tensors.find(l.name + ".w");
        if (it == out.params.tensors.end()) throw CheckpointError("missing tensor " + l.name + ".w");
        if (it->second.shape() != l.weight_shape)
            throw CheckpointError(l.name + ".w: shape does not match the architecture");
        if (l.has_bias && !out.params.tensors.count(l.name + ".b"))
            throw CheckpointError("missing tensor " + l.name + ".b");
    }
    const auto& tr = manifest.at("training");
    out.meta.stage = tr.value("stage", 0);
    out.meta.epoch = tr.value("epoch", 0);
    out.meta.val_mae_apparent = tr.value("val_mae_apparent", -1.0);
    out.meta.val_mae_real = tr.value("val_mae_real", -1.0);
    return out;
}

}  // namespace percept
