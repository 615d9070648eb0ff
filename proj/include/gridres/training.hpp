#pragma once

#include "gridres/model.hpp"

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gridres {

/// Per-column standardization of X_V and X_E, fitted on a training fold.
struct FeatureScaler {
    std::vector<double> node_mean, node_scale;
    std::vector<double> edge_mean, edge_scale;

    static FeatureScaler fit(std::span<const PlanSample> samples, std::span<const std::size_t> indices);
    /// Identity scaler for the given widths.
    static FeatureScaler identity(std::size_t node_dim, std::size_t edge_dim);
    PlanSample apply(const PlanSample& sample) const;
};

/// z = (cvar - mean) / scale.
struct TargetScaler {
    double mean = 0.0;
    double scale = 1.0;

    static TargetScaler fit(std::span<const PlanSample> samples, std::span<const std::size_t> indices);
    double to_standard(double cvar) const { return (cvar - mean) / scale; }
    double from_standard(double z) const { return z * scale + mean; }
};

/// A network together with the normalization it was trained under.
struct TrainedModel {
    HyperGcnn model;
    FeatureScaler features;
    TargetScaler targets;
};

struct Prediction {
    std::string plan_id;
    int predicted_class = 0;
    std::vector<double> probabilities; ///< classification only
    double predicted_cvar = 0.0;        ///< regression only, in kWh
    double score = 0.0;                 ///< ranking key, lower is more resilient
};

/// Inference (dropout off) on one raw sample.
Prediction predict(TrainedModel& trained, const PlanSample& sample);

struct EpochRecord {
    int epoch = 0;
    double train_loss = 0.0;
    double test_metric = 0.0;
};

struct TrainResult {
    TrainedModel trained;
    std::vector<EpochRecord> history;
    int best_epoch = 0;
    double best_metric = 0.0;
    std::vector<std::size_t> train_indices;
    std::vector<std::size_t> test_indices;
};

/// Accuracy is higher-is-better, RMSE lower-is-better.
bool metric_improves(Task task, double candidate, double incumbent);

double accuracy(std::span<const int> predicted, std::span<const int> actual);
double rmse(std::span<const double> predicted, std::span<const double> actual);

/// Stratified by label: each class contributes round(fraction * count) test
/// samples, at least one. Throws DegenerateSplit when a class has < 2 samples.
/// Regression splits ignore labels.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>>
split_indices(std::span<const PlanSample> samples, Task task, double test_fraction, std::uint64_t seed);

struct FitOptions {
    /// Evaluate on the held-out indices every epoch and keep the best epoch.
    bool select_best = true;
    /// Skip per-epoch evaluation entirely (history carries NaN test metrics).
    bool evaluate_each_epoch = true;
};

/// Trains on `train` and tracks the metric on `test`.
TrainResult fit(std::span<const PlanSample> samples, std::span<const std::size_t> train,
                std::span<const std::size_t> test, const ModelConfig& config, std::uint64_t seed,
                const FitOptions& options = {});

/// 80/20 stratified split, then fit with best-epoch selection.
TrainResult train(std::span<const PlanSample> samples, const ModelConfig& config, std::uint64_t seed,
                  double test_fraction = 0.2);

/// Accuracy (classification) or RMSE on standardized targets (regression).
double evaluate(TrainedModel& trained, std::span<const PlanSample> samples,
                std::span<const std::size_t> indices);
double evaluate(TrainedModel& trained, std::span<const PlanSample> samples);

/// Stratified k-fold partition. Classes are shuffled then dealt round-robin,
/// so every sample lands in exactly one fold.
std::vector<std::vector<std::size_t>> make_folds(std::span<const PlanSample> samples, Task task,
                                                 std::size_t folds, std::uint64_t seed);

struct CvResult {
    std::vector<double> fold_metrics;
    std::vector<int> fold_epochs;
    double mean = 0.0;
    double stderr_ = 0.0;
};

/// Mean and standard error (sample sd / sqrt(k)).
std::pair<double, double> mean_stderr(std::span<const double> values);

/// Each fold trains from scratch on the other folds for config.epochs and
/// reports the final-epoch metric on the held-out fold.
CvResult cross_validate(std::span<const PlanSample> samples, const ModelConfig& config,
                        std::size_t folds, std::uint64_t seed);

/// Ascending by score, ties broken by plan_id.
std::vector<Prediction> rank_predictions(std::vector<Prediction> predictions);
std::vector<Prediction> rank_plans(TrainedModel& trained, std::span<const PlanSample> samples);

void save_checkpoint(std::ostream& out, const TrainedModel& trained);
TrainedModel load_checkpoint(std::string_view text, const std::string& context);
void save_checkpoint_file(const std::string& path, const TrainedModel& trained);
TrainedModel load_checkpoint_file(const std::string& path);

std::string to_string(Task task);
Task parse_task(std::string_view text);

} // namespace gridres
