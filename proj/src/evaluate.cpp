#include "percept/evaluate.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <thread>
#include <unordered_map>
#include <unordered_set>

namespace percept {

double mae(const std::vector<double>& preds, const std::vector<double>& truths) {
    if (preds.empty()) throw EvalError("mae: empty input");
    if (preds.size() != truths.size())
        throw EvalError("mae: length mismatch " + std::to_string(preds.size()) + " vs " +
                        std::to_string(truths.size()));
    double acc = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) acc += std::abs(preds[i] - truths[i]);
    return acc / static_cast<double>(preds.size());
}

void save_predictions_csv(const std::string& path, const PredictionSet& preds) {
    std::ofstream os(path);
    if (!os) throw EvalError("cannot write " + path);
    os << "image_id,apparent_pred,real_pred\n";
    os.precision(17);
    for (const auto& r : preds.rows) {
        os << r.image_id << ',' << r.apparent_pred << ',';
        if (r.real_pred) os << *r.real_pred;
        os << "\n";
    }
}

PredictionSet load_predictions_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw EvalError("cannot open " + path);
    std::string line;
    if (!std::getline(is, line)) throw EvalError(path + ": empty file");
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
    if (line != "image_id,apparent_pred,real_pred")
        throw EvalError(path + ": unrecognized header '" + line + "'");
    PredictionSet out;
    std::unordered_set<std::string> seen;
    int row = 1;
    auto parse_num = [&](const std::string& s) {
        double v = 0.0;
        const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
            throw EvalError(path + " row " + std::to_string(row) + ": bad number '" + s + "'");
        return v;
    };
    while (std::getline(is, line)) {
        ++row;
        while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
        if (line.empty()) continue;
        const auto c1 = line.find(',');
        const auto c2 = line.find(',', c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos)
            throw EvalError(path + " row " + std::to_string(row) + ": expected 3 columns");
        PredictionRow r;
        r.image_id = line.substr(0, c1);
        r.apparent_pred = parse_num(line.substr(c1 + 1, c2 - c1 - 1));
        const std::string real = line.substr(c2 + 1);
        if (!real.empty()) r.real_pred = parse_num(real);
        if (!seen.insert(r.image_id).second)
            throw EvalError(path + " row " + std::to_string(row) + ": duplicate image_id " + r.image_id);
        out.rows.push_back(std::move(r));
    }
    return out;
}

PredictionSet predict_all(const NetworkSpec& spec, const ModelParams& params, const RawDataset& data,
                          std::optional<ObserverGender> observer) {
    if (spec.variant == ModelVariant::Case3Observer && !observer)
        throw EvalError("observer-conditioned model needs an observer gender for prediction");
    if (spec.variant != ModelVariant::Case3Observer && observer)
        throw EvalError(to_string(spec.variant) + " takes no observer gender");

    PredictionSet preds;
    preds.rows.resize(data.records.size());
    auto run_range = [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            const auto& r = data.records[i];
            Tensor attrs;
            const Tensor* attrs_ptr = nullptr;
            if (spec.attribute_dim > 0) {
                attrs = attribute_tensor(encode_attributes(r, observer));
                attrs_ptr = &attrs;
            }
            ForwardOutput out = forward(spec, params, data.images[i], attrs_ptr, nullptr);
            PredictionRow& row = preds.rows[i];
            row.image_id = r.image_id;
            row.apparent_pred = out.apparent_years();
            row.real_pred = out.real_years();
        }
    };

    int threads = 1;
    if (const char* env = std::getenv("PERCEPT_AGE_THREADS")) threads = std::max(1, std::atoi(env));
    if (threads <= 1 || data.records.size() < 2) {
        run_range(0, data.records.size());
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (data.records.size() + threads - 1) / threads;
        for (int t = 0; t < threads; ++t) {
            const std::size_t lo = std::min(data.records.size(), t * chunk);
            const std::size_t hi = std::min(data.records.size(), lo + chunk);
            if (lo < hi) pool.emplace_back(run_range, lo, hi);
        }
        for (auto& th : pool) th.join();
    }
    return preds;
}

const std::vector<AttributeKind>& all_attributes() {
    static const std::vector<AttributeKind> a{AttributeKind::Gender, AttributeKind::Race,
                                              AttributeKind::Happiness, AttributeKind::Makeup};
    return a;
}

std::string to_string(AttributeKind a) {
    switch (a) {
        case AttributeKind::Gender: return "gender";
        case AttributeKind::Race: return "race";
        case AttributeKind::Happiness: return "happiness";
        case AttributeKind::Makeup: return "makeup";
    }
    throw EvalError("bad attribute");
}

int category_count(AttributeKind a) {
    switch (a) {
        case AttributeKind::Gender: return 2;
        case AttributeKind::Race: return 3;
        case AttributeKind::Happiness: return 4;
        case AttributeKind::Makeup: return 4;
    }
    throw EvalError("bad attribute");
}

std::string category_name(AttributeKind a, int index) {
    switch (a) {
        case AttributeKind::Gender: return gender_names().at(index);
        case AttributeKind::Race: return race_names().at(index);
        case AttributeKind::Happiness: return happiness_names().at(index);
        case AttributeKind::Makeup: return makeup_names().at(index);
    }
    throw EvalError("bad attribute");
}

int category_index(AttributeKind a, const AnnotationRecord& r) {
    switch (a) {
        case AttributeKind::Gender: return static_cast<int>(r.gender);
        case AttributeKind::Race: return static_cast<int>(r.race);
        case AttributeKind::Happiness: return static_cast<int>(r.happiness);
        case AttributeKind::Makeup: return static_cast<int>(r.makeup);
    }
    throw EvalError("bad attribute");
}

namespace {

// Pairs predictions with their annotation records, in prediction order.
std::vector<const AnnotationRecord*> resolve_records(const PredictionSet& preds,
                                                     const std::vector<AnnotationRecord>& records) {
    std::unordered_map<std::string, const AnnotationRecord*> by_id;
    for (const auto& r : records) {
        if (!by_id.emplace(r.image_id, &r).second)
            throw EvalError("duplicate annotation for " + r.image_id);
    }
    std::vector<const AnnotationRecord*> out;
    out.reserve(preds.rows.size());
    std::unordered_set<std::string> seen;
    for (const auto& p : preds.rows) {
        if (!seen.insert(p.image_id).second) throw EvalError("duplicate prediction for " + p.image_id);
        auto it = by_id.find(p.image_id);
        if (it == by_id.end()) throw EvalError("no annotation for predicted image " + p.image_id);
        out.push_back(it->second);
    }
    return out;
}

}  // namespace

std::vector<StratumRow> stratify(const PredictionSet& preds,
                                 const std::vector<AnnotationRecord>& records, AttributeKind attr,
                                 const std::vector<AnnotationRecord>& train_records) {
    const auto recs = resolve_records(preds, records);
    const int k = category_count(attr);

    std::vector<std::vector<double>> pr(k), tr(k), pa(k), ta(k);
    for (std::size_t i = 0; i < preds.rows.size(); ++i) {
        const int c = category_index(attr, *recs[i]);
        pr[c].push_back(preds.rows[i].effective_real_pred());
        tr[c].push_back(recs[i]->real_age);
        pa[c].push_back(preds.rows[i].apparent_pred);
        ta[c].push_back(recs[i]->apparent_mean);
    }
    std::vector<int> train_counts(k, 0);
    for (const auto& r : train_records) ++train_counts[category_index(attr, r)];
    const double train_total = static_cast<double>(std::max<std::size_t>(1, train_records.size()));

    std::vector<StratumRow> rows;
    for (int c = 0; c < k; ++c) {
        StratumRow row;
        row.category = category_name(attr, c);
        row.train_pct = 100.0 * train_counts[c] / train_total;
        row.n = static_cast<int>(pr[c].size());
        if (row.n > 0) {
            row.mae_real = mae(pr[c], tr[c]);
            row.mae_apparent = mae(pa[c], ta[c]);
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<CurvePoint> error_by_age_window(const PredictionSet& preds,
                                            const std::vector<AnnotationRecord>& records,
                                            HeadLabel head, double window) {
    if (!(window > 0.0)) throw EvalError("window must be > 0");
    const auto recs = resolve_records(preds, records);
    std::vector<double> gt(preds.rows.size()), err(preds.rows.size());
    for (std::size_t i = 0; i < preds.rows.size(); ++i) {
        if (head == HeadLabel::Real) {
            gt[i] = recs[i]->real_age;
            err[i] = std::abs(preds.rows[i].effective_real_pred() - gt[i]);
        } else {
            gt[i] = recs[i]->apparent_mean;
            err[i] = std::abs(preds.rows[i].apparent_pred - gt[i]);
        }
    }
    std::vector<CurvePoint> curve;
    const double half = window / 2.0;
    for (int center = 0; center <= static_cast<int>(kAgeMax); ++center) {
        double acc = 0.0;
        int n = 0;
        for (std::size_t i = 0; i < gt.size(); ++i) {
            if (std::abs(gt[i] - center) <= half) {
                acc += err[i];
                ++n;
            }
        }
        if (n > 0) curve.push_back({static_cast<double>(center), acc / n, n});
    }
    return curve;
}

std::vector<HistogramBin> age_histogram(const std::vector<AnnotationRecord>& records,
                                        HeadLabel label, double bin) {
    if (!(bin > 0.0)) throw EvalError("bin width must be > 0");
    std::map<int, int> counts;
    for (const auto& r : records) {
        const double age = label == HeadLabel::Real ? r.real_age : r.apparent_mean;
        ++counts[static_cast<int>(std::floor(age / bin))];
    }
    std::vector<HistogramBin> bins;
    for (const auto& [idx, n] : counts) bins.push_back({idx * bin, n});
    return bins;
}

ObserverEvalResult observer_eval(const PredictionSet& preds_female_input,
                                 const PredictionSet& preds_male_input,
                                 const std::vector<AnnotationRecord>& records) {
    const auto rf = resolve_records(preds_female_input, records);
    const auto rm = resolve_records(preds_male_input, records);
    auto collect = [&](const PredictionSet& preds, const std::vector<const AnnotationRecord*>& recs,
                       ObserverGender label_gender) {
        std::vector<double> p, t;
        for (std::size_t i = 0; i < preds.rows.size(); ++i) {
            if (!recs[i]->apparent_by_observer)
                throw EvalError(recs[i]->image_id + ": missing per-observer apparent labels");
            p.push_back(preds.rows[i].apparent_pred);
            t.push_back((*recs[i]->apparent_by_observer)[static_cast<std::size_t>(label_gender)]);
        }
        return mae(p, t);
    };
    ObserverEvalResult r;
    r.mae_female = collect(preds_female_input, rf, ObserverGender::Female);
    r.mae_male = collect(preds_male_input, rm, ObserverGender::Male);
    r.mae_female_crossed = collect(preds_female_input, rf, ObserverGender::Male);
    r.mae_male_crossed = collect(preds_male_input, rm, ObserverGender::Female);
    return r;
}

EvalReport build_report(const PredictionSet& preds, const std::vector<AnnotationRecord>& test_records,
                        const std::vector<AnnotationRecord>& train_records) {
    const auto recs = resolve_records(preds, test_records);
    EvalReport rep;
    rep.n = static_cast<int>(preds.rows.size());
    std::vector<double> pr, tr, pa, ta;
    for (std::size_t i = 0; i < preds.rows.size(); ++i) {
        pr.push_back(preds.rows[i].effective_real_pred());
        tr.push_back(recs[i]->real_age);
        pa.push_back(preds.rows[i].apparent_pred);
        ta.push_back(recs[i]->apparent_mean);
    }
    rep.mae_real = mae(pr, tr);
    rep.mae_apparent = mae(pa, ta);
    for (AttributeKind a : all_attributes())
        rep.attribute_tables[to_string(a)] = stratify(preds, test_records, a, train_records);
    rep.error_curve_real = error_by_age_window(preds, test_records, HeadLabel::Real);
    rep.error_curve_apparent = error_by_age_window(preds, test_records, HeadLabel::Apparent);
    rep.histogram_real = age_histogram(train_records, HeadLabel::Real);
    rep.histogram_apparent = age_histogram(train_records, HeadLabel::Apparent);
    return rep;
}

}  // namespace percept
