#include "gridres/training.hpp"

#include "gridres/csv.hpp"
#include "gridres/errors.hpp"
#include "gridres/simulator.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

namespace gridres {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void column_stats(const std::vector<const Matrix*>& mats, std::size_t cols, std::vector<double>& mean,
                  std::vector<double>& scale)
{
    mean.assign(cols, 0.0);
    scale.assign(cols, 1.0);
    double count = 0.0;
    for (const Matrix* m : mats) {
        for (std::size_t r = 0; r < m->rows(); ++r)
            for (std::size_t c = 0; c < cols; ++c) mean[c] += (*m)(r, c);
        count += static_cast<double>(m->rows());
    }
    if (count == 0.0) return;
    for (double& v : mean) v /= count;
    std::vector<double> var(cols, 0.0);
    for (const Matrix* m : mats)
        for (std::size_t r = 0; r < m->rows(); ++r)
            for (std::size_t c = 0; c < cols; ++c) {
                const double d = (*m)(r, c) - mean[c];
                var[c] += d * d;
            }
    for (std::size_t c = 0; c < cols; ++c) {
        const double sd = std::sqrt(var[c] / count);
        scale[c] = sd > 1e-12 ? sd : 1.0;
    }
}

Matrix standardize(const Matrix& m, const std::vector<double>& mean, const std::vector<double>& scale,
                   const char* what)
{
    if (m.cols() != mean.size())
        throw ShapeMismatch(std::string("feature scaler: ") + what + " width " + std::to_string(m.cols()) +
                            " != " + std::to_string(mean.size()));
    Matrix out = m;
    for (std::size_t r = 0; r < out.rows(); ++r)
        for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) = (out(r, c) - mean[c]) / scale[c];
    return out;
}

std::vector<double> softmax(std::span<const double> logits)
{
    const double top = *std::max_element(logits.begin(), logits.end());
    std::vector<double> p(logits.size());
    double total = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) total += p[i] = std::exp(logits[i] - top);
    for (double& v : p) v /= total;
    return p;
}

int argmax(std::span<const double> values)
{
    return static_cast<int>(std::max_element(values.begin(), values.end()) - values.begin());
}

void shuffle(std::vector<std::size_t>& items, Rng& rng)
{
    for (std::size_t i = items.size(); i > 1; --i) std::swap(items[i - 1], items[rng.below(i)]);
}

/// Scaled copy of every sample referenced by `indices`; regression targets
/// are replaced by their standardized value.
std::vector<PlanSample> prepare(const TrainedModel& trained, std::span<const PlanSample> samples)
{
    std::vector<PlanSample> out;
    out.reserve(samples.size());
    for (const PlanSample& s : samples) {
        PlanSample p = trained.features.apply(s);
        p.target = trained.targets.to_standard(s.target);
        out.push_back(std::move(p));
    }
    return out;
}

double evaluate_prepared(HyperGcnn& model, std::span<const PlanSample> prepared,
                         std::span<const std::size_t> indices)
{
    if (indices.empty()) throw EmptyDataset();
    std::mt19937_64 unused(0);
    const Task task = model.config().task;
    double correct = 0.0;
    double squared = 0.0;
    for (std::size_t i : indices) {
        const PlanSample& s = prepared[i];
        ad::Tape tape;
        const Matrix& out = model.forward(tape, s, false, unused).value();
        if (task == Task::Classify) {
            if (argmax(out.data()) == s.label) correct += 1.0;
        } else {
            const double d = out(0, 0) - s.target;
            squared += d * d;
        }
    }
    const double n = static_cast<double>(indices.size());
    return task == Task::Classify ? correct / n : std::sqrt(squared / n);
}

std::vector<std::vector<std::size_t>> groups_by_label(std::span<const PlanSample> samples, Task task)
{
    if (task == Task::Regress) {
        std::vector<std::size_t> all(samples.size());
        std::iota(all.begin(), all.end(), std::size_t{0});
        return {all};
    }
    std::map<int, std::vector<std::size_t>> by_label;
    for (std::size_t i = 0; i < samples.size(); ++i) by_label[samples[i].label].push_back(i);
    std::vector<std::vector<std::size_t>> out;
    for (auto& [label, idx] : by_label) out.push_back(std::move(idx));
    return out;
}

} // namespace

FeatureScaler FeatureScaler::fit(std::span<const PlanSample> samples, std::span<const std::size_t> indices)
{
    if (indices.empty()) throw EmptyDataset();
    std::vector<const Matrix*> nodes, edges;
    for (std::size_t i : indices) {
        nodes.push_back(&samples[i].node_features);
        edges.push_back(&samples[i].edge_features);
    }
    FeatureScaler s;
    column_stats(nodes, nodes.front()->cols(), s.node_mean, s.node_scale);
    column_stats(edges, edges.front()->cols(), s.edge_mean, s.edge_scale);
    return s;
}

FeatureScaler FeatureScaler::identity(std::size_t node_dim, std::size_t edge_dim)
{
    return {std::vector<double>(node_dim, 0.0), std::vector<double>(node_dim, 1.0),
            std::vector<double>(edge_dim, 0.0), std::vector<double>(edge_dim, 1.0)};
}

PlanSample FeatureScaler::apply(const PlanSample& sample) const
{
    PlanSample out = sample;
    out.node_features = standardize(sample.node_features, node_mean, node_scale, "node");
    out.edge_features = standardize(sample.edge_features, edge_mean, edge_scale, "edge");
    return out;
}

TargetScaler TargetScaler::fit(std::span<const PlanSample> samples, std::span<const std::size_t> indices)
{
    if (indices.empty()) throw EmptyDataset();
    double mean = 0.0;
    for (std::size_t i : indices) mean += samples[i].target;
    mean /= static_cast<double>(indices.size());
    double var = 0.0;
    for (std::size_t i : indices) var += (samples[i].target - mean) * (samples[i].target - mean);
    const double sd = std::sqrt(var / static_cast<double>(indices.size()));
    return {mean, sd > 1e-12 ? sd : 1.0};
}

Prediction predict(TrainedModel& trained, const PlanSample& sample)
{
    const PlanSample scaled = trained.features.apply(sample);
    std::mt19937_64 unused(0);
    ad::Tape tape;
    const Matrix& out = trained.model.forward(tape, scaled, false, unused).value();
    Prediction p;
    p.plan_id = sample.plan_id;
    if (trained.model.config().task == Task::Classify) {
        p.probabilities = softmax(out.data());
        p.predicted_class = argmax(out.data());
        double expected = 0.0;
        for (std::size_t k = 0; k < p.probabilities.size(); ++k) expected += static_cast<double>(k) * p.probabilities[k];
        p.score = static_cast<double>(p.predicted_class) * static_cast<double>(p.probabilities.size()) + expected;
    } else {
        p.predicted_cvar = trained.targets.from_standard(out(0, 0));
        p.score = p.predicted_cvar;
    }
    return p;
}

bool metric_improves(Task task, double candidate, double incumbent)
{
    if (std::isnan(incumbent)) return !std::isnan(candidate);
    return task == Task::Classify ? candidate > incumbent : candidate < incumbent;
}

double accuracy(std::span<const int> predicted, std::span<const int> actual)
{
    if (predicted.size() != actual.size()) throw ValidationError("accuracy: length mismatch");
    if (actual.empty()) throw EmptyDataset();
    std::size_t hits = 0;
    for (std::size_t i = 0; i < actual.size(); ++i) hits += predicted[i] == actual[i];
    return static_cast<double>(hits) / static_cast<double>(actual.size());
}

double rmse(std::span<const double> predicted, std::span<const double> actual)
{
    if (predicted.size() != actual.size()) throw ValidationError("rmse: length mismatch");
    if (actual.empty()) throw EmptyDataset();
    double total = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) total += (predicted[i] - actual[i]) * (predicted[i] - actual[i]);
    return std::sqrt(total / static_cast<double>(actual.size()));
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>>
split_indices(std::span<const PlanSample> samples, Task task, double test_fraction, std::uint64_t seed)
{
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw ValidationError("split: test fraction must lie in (0, 1)");
    if (samples.empty()) throw EmptyDataset();
    Rng rng(seed);
    std::vector<std::size_t> train_idx, test_idx;
    for (auto& group : groups_by_label(samples, task)) {
        if (group.size() < 2)
            throw DegenerateSplit(task == Task::Classify
                                      ? "split: class " + std::to_string(samples[group.front()].label) +
                                            " has fewer than 2 samples"
                                      : std::string("split: need at least 2 samples"));
        auto t = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(group.size())));
        t = std::clamp<std::size_t>(t, 1, group.size() - 1);
        shuffle(group, rng);
        test_idx.insert(test_idx.end(), group.begin(), group.begin() + static_cast<std::ptrdiff_t>(t));
        train_idx.insert(train_idx.end(), group.begin() + static_cast<std::ptrdiff_t>(t), group.end());
    }
    std::sort(train_idx.begin(), train_idx.end());
    std::sort(test_idx.begin(), test_idx.end());
    return {train_idx, test_idx};
}

TrainResult fit(std::span<const PlanSample> samples, std::span<const std::size_t> train_idx,
                std::span<const std::size_t> test_idx, const ModelConfig& config, std::uint64_t seed,
                const FitOptions& options)
{
    config.validate();
    if (train_idx.empty()) throw EmptyDataset();
    for (std::size_t i : train_idx) {
        const int label = samples[i].label;
        if (config.task == Task::Classify && (label < 0 || label >= config.n_classes))
            throw ValidationError("sample '" + samples[i].plan_id + "' label " + std::to_string(label) +
                                  " outside 0.." + std::to_string(config.n_classes - 1));
    }

    const PlanSample& first = samples[train_idx.front()];
    TrainResult result{
        TrainedModel{HyperGcnn(config, first.node_features.cols(), first.edge_features.cols(), mix_seed(seed, 1)),
                     FeatureScaler::fit(samples, train_idx),
                     config.task == Task::Regress ? TargetScaler::fit(samples, train_idx) : TargetScaler{}},
        {}, 0, kNaN, {train_idx.begin(), train_idx.end()}, {test_idx.begin(), test_idx.end()}};
    TrainedModel& trained = result.trained;
    HyperGcnn& model = trained.model;
    const std::vector<PlanSample> prepared = prepare(trained, samples);

    const auto params = model.parameters();
    ad::Adam adam(config.lr);
    Rng order_rng(mix_seed(seed, 2));
    std::mt19937_64 dropout_rng(mix_seed(seed, 3));
    const bool track = options.evaluate_each_epoch && !test_idx.empty();

    std::vector<Matrix> best_values;
    if (track && options.select_best) {
        result.best_metric = evaluate_prepared(model, prepared, test_idx);
        for (const auto* p : params) best_values.push_back(p->value);
    }

    std::vector<std::size_t> order(train_idx.begin(), train_idx.end());
    const auto batch = static_cast<std::size_t>(config.batch_size);
    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        shuffle(order, order_rng);
        double total = 0.0;
        for (std::size_t start = 0; start < order.size(); start += batch) {
            const std::size_t stop = std::min(order.size(), start + batch);
            const double weight = 1.0 / static_cast<double>(stop - start);
            for (auto* p : params) p->zero_grad();
            for (std::size_t k = start; k < stop; ++k) {
                const PlanSample& s = prepared[order[k]];
                ad::Tape tape;
                const ad::Var out = model.forward(tape, s, true, dropout_rng);
                ad::Var loss = config.task == Task::Classify
                                   ? ad::cross_entropy(out, static_cast<std::size_t>(s.label))
                                   : ad::mse(out, Matrix(1, 1, s.target));
                total += loss.value()(0, 0);
                tape.backward(ad::scale(loss, weight));
            }
            adam.step(params);
        }
        EpochRecord rec{epoch, total / static_cast<double>(order.size()), kNaN};
        if (track) rec.test_metric = evaluate_prepared(model, prepared, test_idx);
        result.history.push_back(rec);

        if (track && options.select_best) {
            if (metric_improves(config.task, rec.test_metric, result.best_metric)) {
                result.best_metric = rec.test_metric;
                result.best_epoch = epoch;
                for (std::size_t i = 0; i < params.size(); ++i) best_values[i] = params[i]->value;
            }
        } else {
            result.best_epoch = epoch;
            result.best_metric = rec.test_metric;
        }
    }
    if (track && options.select_best)
        for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = best_values[i];
    for (auto* p : params) p->zero_grad();
    return result;
}

TrainResult train(std::span<const PlanSample> samples, const ModelConfig& config, std::uint64_t seed,
                  double test_fraction)
{
    auto [train_idx, test_idx] = split_indices(samples, config.task, test_fraction, mix_seed(seed, 0));
    return fit(samples, train_idx, test_idx, config, seed);
}

double evaluate(TrainedModel& trained, std::span<const PlanSample> samples, std::span<const std::size_t> indices)
{
    if (indices.empty()) throw EmptyDataset();
    std::vector<PlanSample> subset;
    for (std::size_t i : indices) subset.push_back(samples[i]);
    return evaluate(trained, subset);
}

double evaluate(TrainedModel& trained, std::span<const PlanSample> samples)
{
    if (samples.empty()) throw EmptyDataset();
    const std::vector<PlanSample> prepared = prepare(trained, samples);
    std::vector<std::size_t> all(samples.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    return evaluate_prepared(trained.model, prepared, all);
}

std::vector<std::vector<std::size_t>> make_folds(std::span<const PlanSample> samples, Task task,
                                                 std::size_t folds, std::uint64_t seed)
{
    if (folds < 2) throw ValidationError("cross-validation needs at least 2 folds");
    if (samples.size() < folds)
        throw DegenerateSplit("cross-validation: " + std::to_string(samples.size()) + " samples for " +
                              std::to_string(folds) + " folds");
    Rng rng(seed);
    std::vector<std::vector<std::size_t>> out(folds);
    std::size_t next = 0;
    for (auto& group : groups_by_label(samples, task)) {
        shuffle(group, rng);
        for (std::size_t i : group) out[next++ % folds].push_back(i);
    }
    for (auto& f : out) std::sort(f.begin(), f.end());
    return out;
}

std::pair<double, double> mean_stderr(std::span<const double> values)
{
    if (values.empty()) throw EmptyDataset();
    const double n = static_cast<double>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    if (values.size() < 2) return {mean, 0.0};
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    return {mean, std::sqrt(var / (n - 1.0)) / std::sqrt(n)};
}

CvResult cross_validate(std::span<const PlanSample> samples, const ModelConfig& config, std::size_t folds,
                        std::uint64_t seed)
{
    const auto parts = make_folds(samples, config.task, folds, mix_seed(seed, 0));
    CvResult cv;
    for (std::size_t f = 0; f < parts.size(); ++f) {
        std::vector<std::size_t> train_idx;
        for (std::size_t g = 0; g < parts.size(); ++g)
            if (g != f) train_idx.insert(train_idx.end(), parts[g].begin(), parts[g].end());
        std::sort(train_idx.begin(), train_idx.end());
        TrainResult r = fit(samples, train_idx, parts[f], config, mix_seed(seed, f + 1),
                            FitOptions{false, false});
        cv.fold_metrics.push_back(evaluate(r.trained, samples, parts[f]));
        cv.fold_epochs.push_back(config.epochs);
    }
    std::tie(cv.mean, cv.stderr_) = mean_stderr(cv.fold_metrics);
    return cv;
}

std::vector<Prediction> rank_predictions(std::vector<Prediction> predictions)
{
    std::sort(predictions.begin(), predictions.end(), [](const Prediction& a, const Prediction& b) {
        if (a.score != b.score) return a.score < b.score;
        return a.plan_id < b.plan_id;
    });
    return predictions;
}

std::vector<Prediction> rank_plans(TrainedModel& trained, std::span<const PlanSample> samples)
{
    std::vector<Prediction> out;
    out.reserve(samples.size());
    for (const PlanSample& s : samples) out.push_back(predict(trained, s));
    return rank_predictions(std::move(out));
}

std::string to_string(Task task)
{
    return task == Task::Classify ? "classify" : "regress";
}

Task parse_task(std::string_view text)
{
    if (text == "classify") return Task::Classify;
    if (text == "regress") return Task::Regress;
    throw ParseError("unknown task '" + std::string(text) + "' (expected classify or regress)");
}

namespace {

json config_json(const ModelConfig& c)
{
    return {{"layers", c.layers},
            {"hidden_dim", c.hidden_dim},
            {"mlp_blocks", c.mlp_blocks},
            {"d_out", c.d_out},
            {"lr", c.lr},
            {"dropout", c.dropout},
            {"batch_size", c.batch_size},
            {"epochs", c.epochs},
            {"task", to_string(c.task)},
            {"n_classes", c.n_classes},
            {"no_uscores", c.ablation.no_uscores},
            {"no_hyperedge", c.ablation.no_hyperedge},
            {"no_hypernode", c.ablation.no_hypernode},
            {"no_attention", c.ablation.no_attention}};
}

ModelConfig config_from_json(const json& j)
{
    ModelConfig c;
    c.layers = j.at("layers").get<int>();
    c.hidden_dim = j.at("hidden_dim").get<int>();
    c.mlp_blocks = j.at("mlp_blocks").get<int>();
    c.d_out = j.at("d_out").get<int>();
    c.lr = j.at("lr").get<double>();
    c.dropout = j.at("dropout").get<double>();
    c.batch_size = j.at("batch_size").get<int>();
    c.epochs = j.at("epochs").get<int>();
    c.task = parse_task(j.at("task").get<std::string>());
    c.n_classes = j.at("n_classes").get<int>();
    c.ablation.no_uscores = j.at("no_uscores").get<bool>();
    c.ablation.no_hyperedge = j.at("no_hyperedge").get<bool>();
    c.ablation.no_hypernode = j.at("no_hypernode").get<bool>();
    c.ablation.no_attention = j.at("no_attention").get<bool>();
    return c;
}

} // namespace

void save_checkpoint(std::ostream& out, const TrainedModel& trained)
{
    json doc;
    doc["format"] = "gridres-checkpoint";
    doc["version"] = 1;
    doc["config"] = config_json(trained.model.config());
    doc["node_feature_dim"] = trained.model.node_feature_dim();
    doc["edge_feature_dim"] = trained.model.edge_feature_dim();
    doc["feature_scaler"] = {{"node_mean", trained.features.node_mean},
                             {"node_scale", trained.features.node_scale},
                             {"edge_mean", trained.features.edge_mean},
                             {"edge_scale", trained.features.edge_scale}};
    doc["target_scaler"] = {{"mean", trained.targets.mean}, {"scale", trained.targets.scale}};
    json params = json::array();
    for (const ad::Parameter* p : trained.model.parameters())
        params.push_back({{"name", p->name},
                          {"rows", p->value.rows()},
                          {"cols", p->value.cols()},
                          {"data", p->value.data()}});
    doc["parameters"] = std::move(params);
    out << doc.dump(1) << '\n';
}

TrainedModel load_checkpoint(std::string_view text, const std::string& context)
{
    json doc;
    try {
        doc = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& err) {
        throw ParseError(context + ": " + err.what());
    }
    try {
        if (doc.at("format") != "gridres-checkpoint") throw ParseError(context + ": not a gridres checkpoint");
        TrainedModel trained{HyperGcnn(config_from_json(doc.at("config")),
                                       doc.at("node_feature_dim").get<std::size_t>(),
                                       doc.at("edge_feature_dim").get<std::size_t>(), 0),
                             {}, {}};
        const json& fs = doc.at("feature_scaler");
        trained.features.node_mean = fs.at("node_mean").get<std::vector<double>>();
        trained.features.node_scale = fs.at("node_scale").get<std::vector<double>>();
        trained.features.edge_mean = fs.at("edge_mean").get<std::vector<double>>();
        trained.features.edge_scale = fs.at("edge_scale").get<std::vector<double>>();
        trained.targets.mean = doc.at("target_scaler").at("mean").get<double>();
        trained.targets.scale = doc.at("target_scaler").at("scale").get<double>();

        std::map<std::string, const json*> stored;
        for (const json& p : doc.at("parameters")) stored[p.at("name").get<std::string>()] = &p;
        for (ad::Parameter* p : trained.model.parameters()) {
            auto it = stored.find(p->name);
            if (it == stored.end()) throw ParseError(context + ": missing parameter '" + p->name + "'");
            const json& j = *it->second;
            if (j.at("rows").get<std::size_t>() != p->value.rows() || j.at("cols").get<std::size_t>() != p->value.cols())
                throw ParseError(context + ": parameter '" + p->name + "' has the wrong shape");
            auto data = j.at("data").get<std::vector<double>>();
            if (data.size() != p->value.size())
                throw ParseError(context + ": parameter '" + p->name + "' has the wrong length");
            p->value.data() = std::move(data);
        }
        if (stored.size() != trained.model.parameters().size())
            throw ParseError(context + ": unexpected extra parameters");
        return trained;
    } catch (const json::exception& err) {
        throw ParseError(context + ": " + err.what());
    }
}

void save_checkpoint_file(const std::string& path, const TrainedModel& trained)
{
    std::ostringstream out;
    save_checkpoint(out, trained);
    write_text_file(path, out.str());
}

TrainedModel load_checkpoint_file(const std::string& path)
{
    return load_checkpoint(read_text_file(path), path);
}

} // namespace gridres
