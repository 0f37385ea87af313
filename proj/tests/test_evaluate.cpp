#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "percept/evaluate.hpp"
#include "percept/report.hpp"
#include "percept/synthetic.hpp"

using namespace percept;
namespace fs = std::filesystem;

namespace {

// Seeded fake prediction set over a synthetic annotation pool.
struct Fixture {
    std::vector<AnnotationRecord> test_records;
    std::vector<AnnotationRecord> train_records;
    PredictionSet preds;
};

Fixture make_fixture(std::uint64_t seed, int n_test = 120, bool dual = true) {
    SyntheticSpec spec;
    spec.sample_count = n_test * 3;
    spec.seed = seed;
    auto samples = generate_synthetic(spec);
    Fixture f;
    std::mt19937_64 rng(seed * 91 + 7);
    std::normal_distribution<double> err(0.0, 5.0);
    for (const auto& s : samples) {
        if (s.record.split == Split::Train) f.train_records.push_back(s.record);
        if (s.record.split != Split::Test) continue;
        if (static_cast<int>(f.test_records.size()) == n_test) continue;
        f.test_records.push_back(s.record);
        PredictionRow row;
        row.image_id = s.record.image_id;
        row.apparent_pred = std::clamp(s.record.apparent_mean + err(rng), 0.0, kAgeMax);
        if (dual) row.real_pred = std::clamp(s.record.real_age + err(rng), 0.0, kAgeMax);
        f.preds.rows.push_back(row);
    }
    return f;
}

}  // namespace

TEST_CASE("mae examples and brute force") {
    CHECK(mae({3, 4, 5}, {3, 4, 5}) == 0.0);
    CHECK(mae({1, 3}, {2, 5}) == 1.5);
    CHECK_THROWS_AS(mae({}, {}), EvalError);
    CHECK_THROWS_AS(mae({1.0}, {1.0, 2.0}), EvalError);

    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> d(0.0, 100.0);
    std::vector<double> p(100), t(100);
    for (int i = 0; i < 100; ++i) {
        p[i] = d(rng);
        t[i] = d(rng);
    }
    double brute = 0;
    for (int i = 0; i < 100; ++i) brute += std::abs(p[i] - t[i]);
    brute /= 100.0;
    CHECK(std::abs(mae(p, t) - brute) < 1e-12);
}

TEST_CASE("mae detects a uniform translation exactly on a perfect set") {
    std::vector<double> truth{10, 20, 30, 40};
    std::vector<double> shifted;
    for (double v : truth) shifted.push_back(v + 2.5);
    CHECK(mae(truth, truth) == 0.0);
    CHECK(mae(shifted, truth) == 2.5);
}

TEST_CASE("stratification partitions and reweights to the overall MAE") {
    Fixture f = make_fixture(3);
    std::vector<double> pr, tr;
    for (std::size_t i = 0; i < f.preds.rows.size(); ++i) {
        pr.push_back(f.preds.rows[i].effective_real_pred());
        tr.push_back(f.test_records[i].real_age);
    }
    const double overall = mae(pr, tr);

    for (AttributeKind a : all_attributes()) {
        auto rows = stratify(f.preds, f.test_records, a, f.train_records);
        CHECK(static_cast<int>(rows.size()) == category_count(a));
        int n_total = 0;
        double weighted = 0.0, pct_total = 0.0;
        for (const auto& r : rows) {
            n_total += r.n;
            pct_total += r.train_pct;
            if (r.n > 0) weighted += r.n * *r.mae_real;
        }
        CHECK(n_total == static_cast<int>(f.preds.rows.size()));
        CHECK(pct_total == doctest::Approx(100.0).epsilon(1e-9));
        CHECK(std::abs(weighted / n_total - overall) < 1e-9);
    }
}

TEST_CASE("stratify matches brute-force per-subset MAE on the gender split") {
    Fixture f = make_fixture(7);
    auto rows = stratify(f.preds, f.test_records, AttributeKind::Gender, f.train_records);
    for (int g = 0; g < 2; ++g) {
        std::vector<double> p, t;
        for (std::size_t i = 0; i < f.preds.rows.size(); ++i) {
            if (static_cast<int>(f.test_records[i].gender) != g) continue;
            p.push_back(f.preds.rows[i].effective_real_pred());
            t.push_back(f.test_records[i].real_age);
        }
        REQUIRE(rows[g].n == static_cast<int>(p.size()));
        if (!p.empty()) CHECK(std::abs(*rows[g].mae_real - mae(p, t)) < 1e-12);
    }
}

TEST_CASE("empty strata are reported as empty, not zero") {
    Fixture f = make_fixture(11);
    // force everything male
    for (auto& r : f.test_records) r.gender = Gender::Male;
    auto rows = stratify(f.preds, f.test_records, AttributeKind::Gender, f.train_records);
    CHECK(rows[0].category == "female");
    CHECK(rows[0].n == 0);
    CHECK_FALSE(rows[0].mae_real.has_value());
    CHECK(rows[1].n == static_cast<int>(f.preds.rows.size()));

    std::vector<double> p, t;
    for (std::size_t i = 0; i < f.preds.rows.size(); ++i) {
        p.push_back(f.preds.rows[i].effective_real_pred());
        t.push_back(f.test_records[i].real_age);
    }
    CHECK(*rows[1].mae_real == doctest::Approx(mae(p, t)).epsilon(1e-12));
}

TEST_CASE("window curve: single sample occupies exactly its window") {
    AnnotationRecord rec;
    rec.image_id = "x";
    rec.real_age = 30.0;
    rec.apparent_mean = 30.0;
    PredictionSet preds;
    preds.rows.push_back({"x", 32.0, 32.0});
    auto curve = error_by_age_window(preds, {rec}, HeadLabel::Real, 5.0);
    REQUIRE(curve.size() == 5);  // centers 28..32
    for (std::size_t i = 0; i < curve.size(); ++i) {
        CHECK(curve[i].center == 28.0 + i);
        CHECK(curve[i].mean_abs_error == 2.0);
        CHECK(curve[i].count == 1);
    }
}

TEST_CASE("window curve: constant error gives a flat curve") {
    Fixture f = make_fixture(13);
    for (std::size_t i = 0; i < f.preds.rows.size(); ++i) {
        f.preds.rows[i].real_pred = f.test_records[i].real_age + 3.0;
    }
    for (const auto& p : error_by_age_window(f.preds, f.test_records, HeadLabel::Real))
        CHECK(p.mean_abs_error == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("window curve matches a brute-force double loop") {
    Fixture f = make_fixture(17);
    auto curve = error_by_age_window(f.preds, f.test_records, HeadLabel::Apparent, 5.0);
    for (const auto& pt : curve) {
        double acc = 0;
        int n = 0;
        for (std::size_t i = 0; i < f.preds.rows.size(); ++i) {
            if (std::abs(f.test_records[i].apparent_mean - pt.center) <= 2.5) {
                acc += std::abs(f.preds.rows[i].apparent_pred - f.test_records[i].apparent_mean);
                ++n;
            }
        }
        REQUIRE(n == pt.count);
        CHECK(std::abs(acc / n - pt.mean_abs_error) < 1e-12);
    }
    // every sample is inside some window; empty centers are omitted
    for (const auto& pt : curve) CHECK(pt.count > 0);
}

TEST_CASE("window curve with a huge window reproduces the overall MAE everywhere") {
    Fixture f = make_fixture(19);
    std::vector<double> p, t;
    for (std::size_t i = 0; i < f.preds.rows.size(); ++i) {
        p.push_back(f.preds.rows[i].effective_real_pred());
        t.push_back(f.test_records[i].real_age);
    }
    const double overall = mae(p, t);
    for (const auto& pt : error_by_age_window(f.preds, f.test_records, HeadLabel::Real, 1e6))
        CHECK(pt.mean_abs_error == doctest::Approx(overall).epsilon(1e-12));
}

TEST_CASE("age histogram examples and brute force") {
    std::vector<AnnotationRecord> recs(3);
    recs[0].real_age = 10;
    recs[1].real_age = 10;
    recs[2].real_age = 20;
    auto bins = age_histogram(recs, HeadLabel::Real);
    REQUIRE(bins.size() == 2);
    CHECK(bins[0].age == 10.0);
    CHECK(bins[0].count == 2);
    CHECK(bins[1].age == 20.0);
    CHECK(bins[1].count == 1);

    Fixture f = make_fixture(23);
    auto hist = age_histogram(f.train_records, HeadLabel::Apparent);
    int total = 0;
    for (const auto& b : hist) total += b.count;
    CHECK(total == static_cast<int>(f.train_records.size()));
    for (const auto& b : hist) {
        int brute = 0;
        for (const auto& r : f.train_records)
            if (std::floor(r.apparent_mean) == b.age) ++brute;
        CHECK(brute == b.count);
    }
}

TEST_CASE("observer eval matches brute force and the zero-weight identity") {
    SyntheticSpec spec;
    spec.sample_count = 90;
    spec.seed = 41;
    spec.observer_offsets = {{1.0, -1.0}};
    auto samples = generate_synthetic(spec);
    std::vector<AnnotationRecord> recs;
    PredictionSet pf, pm;
    std::mt19937_64 rng(4);
    std::normal_distribution<double> e(0.0, 2.0);
    for (const auto& s : samples) {
        recs.push_back(s.record);
        const double base = std::clamp(s.record.apparent_mean + e(rng), 0.0, kAgeMax);
        pf.rows.push_back({s.record.image_id, std::clamp(base + 0.8, 0.0, kAgeMax), {}});
        pm.rows.push_back({s.record.image_id, std::clamp(base - 0.8, 0.0, kAgeMax), {}});
    }
    ObserverEvalResult r = observer_eval(pf, pm, recs);
    double acc = 0;
    for (std::size_t i = 0; i < recs.size(); ++i)
        acc += std::abs(pf.rows[i].apparent_pred - (*recs[i].apparent_by_observer)[0]);
    CHECK(std::abs(r.mae_female - acc / recs.size()) < 1e-12);
    CHECK(r.mae_female < r.mae_female_crossed);
    CHECK(r.mae_male < r.mae_male_crossed);

    // a model with zeroed observer-block weights predicts identically for both
    auto [nspec, nparams] = build(ModelVariant::Case3Observer, Scale::Desk, 13);
    for (const char* layer : {"hidden_layer.w", "hidden_layer_2.w"}) {
        Tensor& w = nparams.tensors.at(layer);
        const int n_out = w.shape()[1];
        for (int row = 13; row < 15; ++row)
            for (int j = 0; j < n_out; ++j) w.data()[row * n_out + j] = 0.0;
    }
    RawDataset data = to_raw(samples);
    PredictionSet qf = predict_all(nspec, nparams, data, ObserverGender::Female);
    PredictionSet qm = predict_all(nspec, nparams, data, ObserverGender::Male);
    for (std::size_t i = 0; i < qf.rows.size(); ++i)
        CHECK(qf.rows[i].apparent_pred == qm.rows[i].apparent_pred);

    // missing labels are an error
    for (auto& r2 : recs) r2.apparent_by_observer.reset();
    CHECK_THROWS_AS(observer_eval(pf, pm, recs), EvalError);
}

TEST_CASE("prediction csv round trip") {
    PredictionSet preds;
    preds.rows.push_back({"a", 31.25, 29.5});
    preds.rows.push_back({"b", 62.125, std::nullopt});
    const std::string path = "test_preds.csv";
    save_predictions_csv(path, preds);
    PredictionSet back = load_predictions_csv(path);
    REQUIRE(back.rows.size() == 2);
    CHECK(back.rows[0].image_id == "a");
    CHECK(back.rows[0].apparent_pred == 31.25);
    CHECK(*back.rows[0].real_pred == 29.5);
    CHECK_FALSE(back.rows[1].real_pred.has_value());
    std::remove(path.c_str());
}

TEST_CASE("report emission contract") {
    Fixture f = make_fixture(29);
    EvalReport report = build_report(f.preds, f.test_records, f.train_records);
    const std::string dir = "test_report_dir";
    emit_report(report, dir);

    // Table-IV-analog CSV header
    std::ifstream csv(fs::path(dir) / "attribute_table.csv");
    std::string header;
    std::getline(csv, header);
    CHECK(header == "attribute,category,train_pct,n,mae_real,mae_apparent");

    // JSON round trip preserves the numbers
    std::ifstream jf(fs::path(dir) / "report.json");
    std::stringstream ss;
    ss << jf.rdbuf();
    EvalReport back = report_from_json(ss.str());
    CHECK(back.n == report.n);
    CHECK(std::abs(back.mae_real - report.mae_real) < 1e-9);
    CHECK(std::abs(back.mae_apparent - report.mae_apparent) < 1e-9);
    REQUIRE(back.attribute_tables.count("gender"));
    CHECK(std::abs(*back.attribute_tables["gender"][0].mae_real -
                   *report.attribute_tables["gender"][0].mae_real) < 1e-9);
    CHECK(back.error_curve_real.size() == report.error_curve_real.size());

    // SVG plots: well-formed enough to count polylines
    std::ifstream svg(fs::path(dir) / "error_curve_real.svg");
    std::stringstream s2;
    s2 << svg.rdbuf();
    const std::string text = s2.str();
    CHECK(text.find("<svg") != std::string::npos);
    CHECK(text.find("</svg>") != std::string::npos);
    std::size_t polylines = 0;
    for (std::size_t pos = 0; (pos = text.find("<polyline", pos)) != std::string::npos; ++pos)
        ++polylines;
    CHECK(polylines == 1);
    CHECK(text.find("years") != std::string::npos);

    fs::remove_all(dir);
}

TEST_CASE("prediction fan-out is deterministic across thread counts") {
    SyntheticSpec spec;
    spec.sample_count = 60;
    spec.seed = 55;
    RawDataset data = to_raw(generate_synthetic(spec));
    auto [nspec, nparams] = build(ModelVariant::Case2, Scale::Desk, 5);

    PredictionSet sequential = predict_all(nspec, nparams, data);
    setenv("PERCEPT_AGE_THREADS", "3", 1);
    PredictionSet threaded = predict_all(nspec, nparams, data);
    unsetenv("PERCEPT_AGE_THREADS");
    REQUIRE(threaded.rows.size() == sequential.rows.size());
    for (std::size_t i = 0; i < sequential.rows.size(); ++i) {
        CHECK(threaded.rows[i].image_id == sequential.rows[i].image_id);
        CHECK(threaded.rows[i].apparent_pred == sequential.rows[i].apparent_pred);
    }
}

TEST_CASE("duplicate or unresolvable prediction ids are rejected") {
    Fixture f = make_fixture(31, 10);
    PredictionSet dup = f.preds;
    dup.rows.push_back(dup.rows.front());
    CHECK_THROWS_AS(stratify(dup, f.test_records, AttributeKind::Gender, f.train_records), EvalError);
    PredictionSet unknown;
    unknown.rows.push_back({"missing_id", 30.0, {}});
    CHECK_THROWS_AS(build_report(unknown, f.test_records, f.train_records), EvalError);
}
