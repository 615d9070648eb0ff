#pragma once

#include "gridres/features.hpp"
#include "gridres/grid.hpp"
#include "gridres/hyperstruct.hpp"
#include "gridres/model.hpp"
#include "gridres/simulator.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace gridres {

inline constexpr std::string_view kVersion = "0.1.0";

// ---- synthetic grids -------------------------------------------------------

/// Shape of a generated 54-bus-style system.
struct GeneratorConfig {
    int nodes = 54;
    int substations = 4;
    int nonload = 0;
    int candidates = 22;
    double min_demand = 50.0;  ///< kWh/h
    double max_demand = 250.0;
    double extent = 10.0;      ///< side of the square the nodes are placed in

    /// system 1: 4 substations, 50 loads, 22 candidates.
    /// system 2: 2 substations, 50 loads, 2 non-load nodes, 20 candidates.
    static GeneratorConfig system(int which);
    void validate() const;
};

/// Nodes b01..bNN at random points; existing lines form a forest rooted at
/// the substations (each node joins its nearest already-placed node), so
/// there are nodes - substations existing lines. Candidates join short
/// non-adjacent pairs. Weights are Euclidean lengths.
Grid generate_grid(const GeneratorConfig& config, std::uint64_t seed);

// ---- per-plan features -----------------------------------------------------

struct FeatureOptions {
    PathCaps caps;
    std::size_t k = 10;
};

struct PlanFeatures {
    std::string plan_id;
    Grid grid; ///< combined grid
    Matrix node_features;
    Matrix edge_features;
    Hyperstructure hyper;
    std::size_t substations = 0;
};

PlanFeatures featurize_plan(const Grid& base, const ExpansionPlan& plan, const FeatureOptions& options);

/// Builds the network input from computed features.
PlanSample make_sample(const PlanFeatures& features, int label = 0, double target = 0.0);

/// <dir>/<plan>.nodes.csv and <plan>.edges.csv
void write_feature_files(const std::filesystem::path& dir, const PlanFeatures& features);
/// <dir>/<plan>.qe.csv and <plan>.qv.csv
void write_hyperstructure_files(const std::filesystem::path& dir, const PlanFeatures& features);

/// Node features as written by write_feature_files, rows in grid node order.
Matrix read_node_features(const std::filesystem::path& dir, const Grid& combined, const std::string& plan_id);

/// Reassembles a sample from the four per-plan files.
PlanSample read_sample(const std::filesystem::path& dir, const std::string& plan_id);

/// Samples for every labeled plan, with label and CVaR target attached.
std::vector<PlanSample> load_samples(const std::filesystem::path& dir, const std::vector<LabeledPlan>& labels);

// ---- graph-metric report ---------------------------------------------------

struct MetricRow {
    std::string plan_id;
    double apl = 0.0;
    double diameter = 0.0;
    double avg_betweenness = 0.0;
    double uscore_sum = 0.0;
    double cvar_kwh = 0.0;
};

MetricRow plan_metrics(const Grid& base, const ExpansionPlan& plan, const PathCaps& caps);

struct MetricCorrelations {
    double apl = 0.0;
    double diameter = 0.0;
    double avg_betweenness = 0.0;
    double uscore_sum = 0.0;
};

/// Pearson r of each metric against 1 / CVaR; NaN where a column is constant.
MetricCorrelations correlate_metrics(const std::vector<MetricRow>& rows);

/// plan_id,apl,diameter,avg_betweenness,uscore_sum,cvar_kwh
void write_report_csv(std::ostream& out, const std::vector<MetricRow>& rows);
/// metric,pearson_r_inverse_cvar; undefined correlations are written as nan.
void write_correlations_csv(std::ostream& out, const MetricCorrelations& r);

// ---- configuration ---------------------------------------------------------

struct PipelineConfig {
    std::uint64_t seed = 7;
    int system = 1;

    std::string grid_path = "grid.json";
    std::string plans_path = "plans.json";
    std::string labels_path = "labels.csv";
    std::string features_dir = "features";
    std::string checkpoint_dir = "ckpt";

    GeneratorConfig generator = GeneratorConfig::system(1);
    std::size_t plan_count = 200;

    FailureConfig failures;
    double alpha = 0.95;
    std::string binning = "preset"; ///< "preset" or "quantile"
    int classes = 3;

    FeatureOptions features;

    ModelConfig model = ModelConfig::system1_classification();
    std::size_t folds = 10;
    double test_fraction = 0.2;

    BinningScheme binning_scheme(std::span<const double> cvars) const;
    void validate() const;
};

/// TOML subset: [section] headers, key = value lines, '#' comments; values
/// are numbers, true/false or double-quoted strings. Unknown keys are errors.
PipelineConfig parse_config(std::string_view text, const std::string& context);
PipelineConfig load_config(const std::filesystem::path& path);

/// Applies one dotted key ("model.lr") as if it came from the config file.
void set_config_value(PipelineConfig& config, std::string_view key, std::string_view value);

/// Canonical text form; parse_config(render_config(c)) == c.
std::string render_config(const PipelineConfig& config);
std::uint64_t config_hash(const PipelineConfig& config);

// ---- manifests -------------------------------------------------------------

struct Manifest {
    std::string command;
    std::uint64_t seed = 0;
    std::string config_hash;
    std::string config_text;
    std::map<std::string, std::string> inputs;  ///< path -> content hash
    std::map<std::string, std::string> outputs; ///< path -> content hash
};

std::string hex64(std::uint64_t value);
std::string file_hash(const std::filesystem::path& path);
/// JSON with no timestamps, so reruns produce identical manifests.
void write_manifest(const std::filesystem::path& path, const Manifest& manifest);

/// "full", the four single-component ablations, then "plain_gcn".
std::vector<std::pair<std::string, Ablation>> ablation_variants();

} // namespace gridres
