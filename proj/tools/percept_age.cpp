// Command-line front end: synthesize data, train case studies, evaluate,
// analyze predictions, count parameters, predict single samples.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "percept/checkpoint.hpp"
#include "percept/evaluate.hpp"
#include "percept/experiment.hpp"
#include "percept/image_io.hpp"
#include "percept/report.hpp"
#include "percept/synthetic.hpp"
#include "percept/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace percept;

namespace {

// Exit codes: 0 success, 2 config error, 3 unsupported operation, 4 I/O error.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct UnsupportedError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

struct TrainRunConfig {
    std::string variant = "case3";
    std::string scale = "desk";
    std::uint64_t init_seed = 1;
    std::string data_dir;
    std::string out_dir;
    TrainConfig train;
    bool target_set = false;
    bool monitor_set = false;
    bool lr_set = false;
};

TrainRunConfig parse_train_config_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad config JSON: ") + e.what());
    }
    TrainRunConfig cfg;
    const std::vector<std::string> known = {"variant", "scale", "init_seed", "data", "out", "train"};
    for (const auto& [key, _] : j.items())
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw ConfigError("config: unknown key '" + key + "'");
    try {
        if (j.contains("variant")) cfg.variant = j["variant"].get<std::string>();
        if (j.contains("scale")) cfg.scale = j["scale"].get<std::string>();
        if (j.contains("init_seed")) cfg.init_seed = j["init_seed"].get<std::uint64_t>();
        if (j.contains("data")) cfg.data_dir = j["data"].get<std::string>();
        if (j.contains("out")) cfg.out_dir = j["out"].get<std::string>();
        if (j.contains("train")) {
            const auto& t = j["train"];
            const std::vector<std::string> tk = {"lr_stage1", "lr_stage2", "max_epochs_stage1",
                                                 "max_epochs_stage2", "patience", "batch_size",
                                                 "loss_weights", "monitor", "target_label", "seed"};
            for (const auto& [key, _] : t.items())
                if (std::find(tk.begin(), tk.end(), key) == tk.end())
                    throw ConfigError("config: unknown train key '" + key + "'");
            if (t.contains("lr_stage1")) {
                cfg.train.lr_stage1 = t["lr_stage1"].get<double>();
                cfg.lr_set = true;
            }
            if (t.contains("lr_stage2")) cfg.train.lr_stage2 = t["lr_stage2"].get<double>();
            if (t.contains("max_epochs_stage1"))
                cfg.train.max_epochs_stage1 = t["max_epochs_stage1"].get<int>();
            if (t.contains("max_epochs_stage2"))
                cfg.train.max_epochs_stage2 = t["max_epochs_stage2"].get<int>();
            if (t.contains("patience")) cfg.train.patience = t["patience"].get<int>();
            if (t.contains("batch_size")) cfg.train.batch_size = t["batch_size"].get<int>();
            if (t.contains("loss_weights")) {
                cfg.train.w_apparent = t["loss_weights"].at(0).get<double>();
                cfg.train.w_real = t["loss_weights"].at(1).get<double>();
            }
            if (t.contains("monitor")) {
                cfg.train.monitor = monitor_from_string(t["monitor"].get<std::string>());
                cfg.monitor_set = true;
            }
            if (t.contains("target_label")) {
                cfg.train.target_label = target_from_string(t["target_label"].get<std::string>());
                cfg.target_set = true;
            }
            if (t.contains("seed")) cfg.train.seed = t["seed"].get<std::uint64_t>();
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad config JSON: ") + e.what());
    }
    return cfg;
}

json train_config_to_json(const TrainRunConfig& cfg) {
    json j;
    j["variant"] = cfg.variant;
    j["scale"] = cfg.scale;
    j["init_seed"] = cfg.init_seed;
    j["data"] = cfg.data_dir;
    j["out"] = cfg.out_dir;
    j["train"] = {{"lr_stage1", cfg.train.lr_stage1},
                  {"lr_stage2", cfg.train.stage_lr(2)},
                  {"max_epochs_stage1", cfg.train.max_epochs_stage1},
                  {"max_epochs_stage2", cfg.train.max_epochs_stage2},
                  {"patience", cfg.train.patience},
                  {"batch_size", cfg.train.batch_size},
                  {"loss_weights", {cfg.train.w_apparent, cfg.train.w_real}},
                  {"monitor", to_string(cfg.train.monitor)},
                  {"target_label", to_string(cfg.train.target_label)},
                  {"seed", cfg.train.seed},
                  {"adam", {{"beta1", 0.9}, {"beta2", 0.999}, {"epsilon", 1e-8}}}};
    return j;
}

AnnotationRecord parse_attribute_list(const std::string& spec) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : spec + ",") {
        if (c == ',') {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (parts.size() != 4)
        throw ConfigError("attributes must be 'gender,race,happiness,makeup', got '" + spec + "'");
    AnnotationRecord r;
    auto find = [&](const auto& names, const std::string& s, const char* what) -> int {
        for (std::size_t i = 0; i < names.size(); ++i)
            if (names[i] == s) return static_cast<int>(i);
        throw ConfigError(std::string("unknown ") + what + " '" + s + "'");
    };
    r.gender = static_cast<Gender>(find(gender_names(), parts[0], "gender"));
    r.race = static_cast<Race>(find(race_names(), parts[1], "race"));
    r.happiness = static_cast<Happiness>(find(happiness_names(), parts[2], "happiness"));
    r.makeup = static_cast<Makeup>(find(makeup_names(), parts[3], "makeup"));
    return r;
}

int cmd_synth(const std::string& config_path, const std::string& out_dir,
              std::optional<int> samples, std::optional<std::uint64_t> seed, bool observer) {
    SyntheticSpec spec;
    try {
        if (!config_path.empty()) spec = synthetic_spec_from_json(read_file(config_path));
        if (samples) spec.sample_count = *samples;
        if (seed) spec.seed = *seed;
        if (observer && !spec.observer_offsets)
            spec.observer_offsets = SyntheticSpec::default_observer_offsets();
        spec.validate();
    } catch (const DatasetError& e) {
        throw ConfigError(e.what());
    }
    const auto generated = generate_synthetic(spec);
    write_synthetic_dataset(out_dir, spec, generated);
    std::cout << "wrote " << generated.size() << " samples to " << out_dir << "\n";
    return 0;
}

int cmd_train(TrainRunConfig cfg) {
    ModelVariant variant;
    Scale scale;
    try {
        variant = variant_from_string(cfg.variant);
        scale = scale_from_string(cfg.scale);
        if (cfg.data_dir.empty() || cfg.out_dir.empty())
            throw ConfigError("train needs --data and --out (or config keys)");
        if (!cfg.target_set) {
            cfg.train.target_label = variant == ModelVariant::Case3 ||
                                             variant == ModelVariant::Case3Observer
                                         ? TargetLabel::Dual
                                         : TargetLabel::Apparent;
        }
        if (!cfg.monitor_set)
            cfg.train.monitor = default_train_config(variant, cfg.train.target_label).monitor;
        if (!cfg.lr_set)
            cfg.train.lr_stage1 = default_train_config(variant, cfg.train.target_label).lr_stage1;
        cfg.train.validate();
    } catch (const TensorError& e) {
        throw ConfigError(e.what());
    } catch (const TrainError& e) {
        throw ConfigError(e.what());
    }
    if (scale == Scale::FullVGG16)
        throw UnsupportedError(
            "training the full-scale VGG16 variants is not supported: the published models start "
            "from ImageNet-pretrained weights, which are not bundled, and CPU training at that "
            "size is impractical. Use --scale desk.");

    const RawDataset train = load_dataset_dir(cfg.data_dir, Split::Train);
    const RawDataset val = load_dataset_dir(cfg.data_dir, Split::Validation);
    RunCaseResult result = run_case(variant, scale, train, val, cfg.train, cfg.init_seed);

    fs::create_directories(cfg.out_dir);
    save_checkpoint((fs::path(cfg.out_dir) / "checkpoint").string(), result.spec, result.params,
                    result.meta);
    save_train_log_csv((fs::path(cfg.out_dir) / "train_log.csv").string(), result.log);
    {
        std::ofstream os(fs::path(cfg.out_dir) / "resolved_config.json");
        os << train_config_to_json(cfg).dump(2) << "\n";
        if (!os) throw TrainError("cannot write resolved_config.json");
    }
    std::cout << "best checkpoint: stage " << result.meta.stage << " epoch " << result.meta.epoch
              << ", val MAE apparent " << result.meta.val_mae_apparent << "y, real "
              << result.meta.val_mae_real << "y\n";
    return 0;
}

int cmd_eval(const std::string& checkpoint_dir, const std::string& data_dir,
             const std::string& out_dir, const std::string& split_name) {
    Split split;
    try {
        bool ok = false;
        for (std::size_t i = 0; i < split_names().size(); ++i)
            if (split_names()[i] == split_name) {
                split = static_cast<Split>(i);
                ok = true;
            }
        if (!ok) throw ConfigError("unknown split '" + split_name + "'");
    } catch (const DatasetError& e) {
        throw ConfigError(e.what());
    }

    LoadedCheckpoint ckpt = load_checkpoint(checkpoint_dir);
    const RawDataset data = load_dataset_dir(data_dir, split);
    const auto train_records =
        load_annotations((fs::path(data_dir) / "annotations.csv").string(), Split::Train);

    EvalReport report;
    PredictionSet preds;
    if (ckpt.spec.variant == ModelVariant::Case3Observer) {
        PredictionSet pf = predict_all(ckpt.spec, ckpt.params, data, ObserverGender::Female);
        PredictionSet pm = predict_all(ckpt.spec, ckpt.params, data, ObserverGender::Male);
        report = build_report(pf, data.records, train_records);
        report.observer = observer_eval(pf, pm, data.records);
        preds = pf;
        fs::create_directories(out_dir);
        save_predictions_csv((fs::path(out_dir) / "predictions_male_observer.csv").string(), pm);
    } else {
        preds = predict_all(ckpt.spec, ckpt.params, data);
        report = build_report(preds, data.records, train_records);
        fs::create_directories(out_dir);
    }
    save_predictions_csv((fs::path(out_dir) / "predictions.csv").string(), preds);
    emit_report(report, out_dir);
    std::cout << "n=" << report.n << " MAE real " << report.mae_real << "y apparent "
              << report.mae_apparent << "y\n";
    return 0;
}

int cmd_analyze(const std::string& predictions_path, const std::string& annotations_path,
                const std::string& out_dir) {
    const PredictionSet preds = load_predictions_csv(predictions_path);
    const auto records = load_annotations(annotations_path);
    std::vector<AnnotationRecord> train_records;
    for (const auto& r : records)
        if (r.split == Split::Train) train_records.push_back(r);
    EvalReport report = build_report(preds, records, train_records);
    emit_report(report, out_dir);
    std::cout << "n=" << report.n << " MAE real " << report.mae_real << "y apparent "
              << report.mae_apparent << "y\n";
    return 0;
}

int cmd_params(const std::string& variant, const std::string& scale) {
    NetworkSpec spec;
    try {
        spec = make_spec(variant_from_string(variant), scale_from_string(scale));
    } catch (const TensorError& e) {
        throw ConfigError(e.what());
    }
    std::cout << count_trainable_params(spec) << "\n";
    return 0;
}

int cmd_predict(const std::string& checkpoint_dir, const std::string& image_path,
                const std::string& attributes, const std::string& observer) {
    LoadedCheckpoint ckpt = load_checkpoint(checkpoint_dir);
    std::optional<ObserverGender> obs;
    AnnotationRecord rec;
    try {
        if (!observer.empty()) {
            if (observer == "female") obs = ObserverGender::Female;
            else if (observer == "male") obs = ObserverGender::Male;
            else throw ConfigError("unknown observer '" + observer + "' (want female|male)");
        }
        if (ckpt.spec.attribute_dim > 0 && attributes.empty())
            throw ConfigError(to_string(ckpt.spec.variant) + " needs --attributes");
        if (ckpt.spec.variant == ModelVariant::Case3Observer && !obs)
            throw ConfigError("case3observer needs --observer female|male");
        if (ckpt.spec.variant != ModelVariant::Case3Observer && obs)
            throw ConfigError(to_string(ckpt.spec.variant) + " takes no --observer");
        if (!attributes.empty()) rec = parse_attribute_list(attributes);
    } catch (const DatasetError& e) {
        throw ConfigError(e.what());
    }

    const Tensor image = load_image(image_path);
    Tensor attrs;
    const Tensor* attrs_ptr = nullptr;
    if (ckpt.spec.attribute_dim > 0) {
        attrs = attribute_tensor(encode_attributes(rec, obs));
        attrs_ptr = &attrs;
    }
    ForwardOutput out = forward(ckpt.spec, ckpt.params, image, attrs_ptr, nullptr);
    std::cout << "apparent: " << out.apparent_years() << "\n";
    if (auto real = out.real_years()) std::cout << "real: " << *real << "\n";
    return 0;
}

int cmd_repro_case_ordering() {
    std::cout << "case-ordering sweep (5 seeds, 4 desk runs each; this takes a while)\n";
    OrderingExperimentResult r = run_case_ordering_experiment(&std::cout);
    std::cout << "\nseed  c1 app->real  c1 real->real  c2 app->real  c3 real\n";
    for (const auto& s : r.seeds) {
        std::printf("%4llu  %12.3f  %13.3f  %12.3f  %7.3f\n",
                    static_cast<unsigned long long>(s.seed), s.case1_app_to_real,
                    s.case1_real_to_real, s.case2_app_to_real, s.case3_real);
    }
    std::cout << "(a) apparent->real < real->real : " << r.count_a() << "/5 "
              << (r.count_a() >= 4 ? "PASS" : "FAIL") << "\n";
    std::cout << "(b) case2 < case1 (real MAE)    : " << r.count_b() << "/5 "
              << (r.count_b() >= 4 ? "PASS" : "FAIL") << "\n";
    std::cout << "(c) case3 <= case2 + 0.1y       : " << r.count_c() << "/5 "
              << (r.count_c() >= 4 ? "PASS" : "FAIL") << "\n";
    return r.pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"attribute-conditioned apparent/real age estimation"};
    app.require_subcommand(1);

    auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
    std::string synth_config, synth_out;
    int synth_samples = -1;
    std::int64_t synth_seed = -1;
    bool synth_observer = false;
    synth->add_option("--config", synth_config, "SyntheticSpec JSON");
    synth->add_option("--out", synth_out, "output directory")->required();
    synth->add_option("--samples", synth_samples, "sample count override");
    synth->add_option("--seed", synth_seed, "seed override");
    synth->add_flag("--observer", synth_observer, "include per-observer-gender labels");

    auto* train = app.add_subcommand("train", "train a case-study model");
    std::string train_config, train_variant, train_scale, train_data, train_out, train_target,
        train_monitor;
    double lr1 = -1, lr2 = -1;
    int epochs1 = -1, epochs2 = -1, patience = -1, batch = -1;
    std::int64_t t_seed = -1, t_init_seed = -1;
    train->add_option("--config", train_config, "RunConfig JSON (flags win)");
    train->add_option("--variant", train_variant, "case1|case2prime|case2|case3|case3observer");
    train->add_option("--scale", train_scale, "desk|full");
    train->add_option("--data", train_data, "dataset directory");
    train->add_option("--out", train_out, "run directory");
    train->add_option("--target", train_target, "apparent|real|dual");
    train->add_option("--monitor", train_monitor, "apparent_mae|real_loss|dual_loss");
    train->add_option("--lr1", lr1, "stage-1 learning rate");
    train->add_option("--lr2", lr2, "stage-2 learning rate");
    train->add_option("--epochs1", epochs1, "stage-1 max epochs");
    train->add_option("--epochs2", epochs2, "stage-2 max epochs");
    train->add_option("--patience", patience, "early-stopping patience");
    train->add_option("--batch", batch, "batch size");
    train->add_option("--seed", t_seed, "shuffle seed");
    train->add_option("--init-seed", t_init_seed, "weight-init seed");

    auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a dataset split");
    std::string eval_ckpt, eval_data, eval_out, eval_split = "test";
    eval->add_option("--checkpoint", eval_ckpt, "checkpoint directory")->required();
    eval->add_option("--data", eval_data, "dataset directory")->required();
    eval->add_option("--out", eval_out, "output directory")->required();
    eval->add_option("--split", eval_split, "train|validation|test (default test)");

    auto* analyze = app.add_subcommand("analyze", "reports and plots from a prediction CSV");
    std::string an_preds, an_annot, an_out;
    analyze->add_option("--predictions", an_preds, "prediction CSV")->required();
    analyze->add_option("--annotations", an_annot, "annotation CSV")->required();
    analyze->add_option("--out", an_out, "output directory")->required();

    auto* params = app.add_subcommand("params", "print the trainable-parameter count");
    std::string p_variant, p_scale = "full";
    params->add_option("--variant", p_variant, "model variant")->required();
    params->add_option("--scale", p_scale, "desk|full (default full)");

    auto* predict = app.add_subcommand("predict", "predict one image");
    std::string pr_ckpt, pr_image, pr_attrs, pr_observer;
    predict->add_option("--checkpoint", pr_ckpt, "checkpoint directory")->required();
    predict->add_option("--image", pr_image, "PGM/PPM/PTNS image")->required();
    predict->add_option("--attributes", pr_attrs, "gender,race,happiness,makeup");
    predict->add_option("--observer", pr_observer, "female|male (observer-conditioned models)");

    auto* repro = app.add_subcommand("repro_case_ordering",
                                     "run the case-ordering seed sweep and print pass/fail");
    auto* repro_sanity = app.add_subcommand("repro_sanity", "run the learning-sanity seed sweep");
    auto* repro_observer = app.add_subcommand("repro_observer", "run the observer-gender seed sweep");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*synth) {
            return cmd_synth(synth_config, synth_out,
                             synth_samples >= 0 ? std::optional<int>(synth_samples) : std::nullopt,
                             synth_seed >= 0 ? std::optional<std::uint64_t>(synth_seed) : std::nullopt,
                             synth_observer);
        }
        if (*train) {
            TrainRunConfig cfg;
            if (!train_config.empty()) cfg = parse_train_config_json(read_file(train_config));
            if (!train_variant.empty()) cfg.variant = train_variant;
            if (!train_scale.empty()) cfg.scale = train_scale;
            if (!train_data.empty()) cfg.data_dir = train_data;
            if (!train_out.empty()) cfg.out_dir = train_out;
            if (!train_target.empty()) {
                try {
                    cfg.train.target_label = target_from_string(train_target);
                } catch (const TrainError& e) {
                    throw ConfigError(e.what());
                }
                cfg.target_set = true;
            }
            if (!train_monitor.empty()) {
                try {
                    cfg.train.monitor = monitor_from_string(train_monitor);
                } catch (const TrainError& e) {
                    throw ConfigError(e.what());
                }
                cfg.monitor_set = true;
            }
            if (lr1 > 0) {
                cfg.train.lr_stage1 = lr1;
                cfg.lr_set = true;
            }
            if (lr2 > 0) cfg.train.lr_stage2 = lr2;
            if (epochs1 > 0) cfg.train.max_epochs_stage1 = epochs1;
            if (epochs2 > 0) cfg.train.max_epochs_stage2 = epochs2;
            if (patience > 0) cfg.train.patience = patience;
            if (batch > 0) cfg.train.batch_size = batch;
            if (t_seed >= 0) cfg.train.seed = static_cast<std::uint64_t>(t_seed);
            if (t_init_seed >= 0) cfg.init_seed = static_cast<std::uint64_t>(t_init_seed);
            return cmd_train(std::move(cfg));
        }
        if (*eval) return cmd_eval(eval_ckpt, eval_data, eval_out, eval_split);
        if (*analyze) return cmd_analyze(an_preds, an_annot, an_out);
        if (*params) return cmd_params(p_variant, p_scale);
        if (*predict) return cmd_predict(pr_ckpt, pr_image, pr_attrs, pr_observer);
        if (*repro) return cmd_repro_case_ordering();
        if (*repro_sanity) {
            auto outcomes = run_learning_sanity_experiment(&std::cout);
            int ok = 0;
            for (const auto& o : outcomes) ok += o.holds();
            std::cout << "apparent MAE < 3y: " << ok << "/5 " << (ok >= 4 ? "PASS" : "FAIL") << "\n";
            return ok >= 4 ? 0 : 1;
        }
        if (*repro_observer) {
            auto outcomes = run_observer_experiment(&std::cout);
            int ok = 0;
            for (const auto& o : outcomes) ok += o.holds();
            std::cout << "matched < crossed: " << ok << "/5 " << (ok >= 4 ? "PASS" : "FAIL") << "\n";
            return ok >= 4 ? 0 : 1;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const UnsupportedError& e) {
        std::cerr << "unsupported: " << e.what() << "\n";
        return 3;
    } catch (const ImageError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return 4;
    } catch (const CheckpointError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return 4;
    } catch (const DatasetError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return 4;
    } catch (const EvalError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
