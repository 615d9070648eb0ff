// gridres: resilience ranking of distribution-grid expansion plans.

#include "gridres/csv.hpp"
#include "gridres/errors.hpp"
#include "gridres/features.hpp"
#include "gridres/grid.hpp"
#include "gridres/pipeline.hpp"
#include "gridres/simulator.hpp"
#include "gridres/training.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace gridres;

namespace {

struct Overrides {
    std::string config_path;
    std::vector<std::pair<std::string, std::string>> values;
    bool cv = false;
};

/// Flag that overrides a config key.
void keyed(CLI::App* sub, Overrides& o, const std::string& flag, const std::string& key, const std::string& help)
{
    sub->add_option_function<std::string>(
        flag, [&o, key](const std::string& v) { o.values.emplace_back(key, v); }, help + " [" + key + "]");
}

void common(CLI::App* sub, Overrides& o)
{
    sub->add_option("--config", o.config_path, "TOML-style config file");
    sub->add_option_function<std::vector<std::string>>(
        "--set",
        [&o](const std::vector<std::string>& items) {
            for (const auto& item : items) {
                const auto eq = item.find('=');
                if (eq == std::string::npos) throw ValidationError("--set expects key=value, got '" + item + "'");
                o.values.emplace_back(item.substr(0, eq), item.substr(eq + 1));
            }
        },
        "override any config key, e.g. --set model.lr=0.01");
    keyed(sub, o, "--seed", "seed", "global seed");
}

PipelineConfig resolve(const Overrides& o)
{
    PipelineConfig c = o.config_path.empty() ? PipelineConfig{} : load_config(o.config_path);
    for (const auto& [key, value] : o.values) set_config_value(c, key, value);
    c.validate();
    return c;
}

Manifest manifest_for(const std::string& command, const PipelineConfig& c)
{
    Manifest m;
    m.command = command;
    m.seed = c.seed;
    m.config_hash = hex64(config_hash(c));
    m.config_text = render_config(c);
    return m;
}

void add_input(Manifest& m, const fs::path& p)
{
    m.inputs[p.generic_string()] = file_hash(p);
}

void add_output(Manifest& m, const fs::path& p)
{
    m.outputs[p.generic_string()] = file_hash(p);
}

std::vector<LabeledPlan> read_labels(const std::string& path)
{
    return parse_labels_csv(read_text_file(path), path);
}

double seconds_since(std::chrono::steady_clock::time_point start)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// ---- commands --------------------------------------------------------------

void cmd_gen_grid(const PipelineConfig& c)
{
    const Grid grid = generate_grid(c.generator, c.seed);
    const auto report = validate_grid(grid);
    if (!report.ok()) throw std::runtime_error("generated grid is invalid: " + report.violations.front());
    save_grid(grid, c.grid_path);
    Manifest m = manifest_for("gen-grid", c);
    add_output(m, c.grid_path);
    write_manifest(c.grid_path + ".manifest.json", m);
    std::cout << "wrote " << c.grid_path << ": " << grid.node_count() << " nodes, "
              << grid.count_edges(EdgeStatus::Existing) << " existing and "
              << grid.count_edges(EdgeStatus::Candidate) << " candidate lines\n";
}

void cmd_gen_plans(const PipelineConfig& c)
{
    const Grid grid = load_grid(c.grid_path);
    const auto plans = generate_plans(grid, c.plan_count, c.seed);
    save_plans(plans, c.plans_path);
    Manifest m = manifest_for("gen-plans", c);
    add_input(m, c.grid_path);
    add_output(m, c.plans_path);
    write_manifest(c.plans_path + ".manifest.json", m);
    std::cout << "wrote " << plans.size() << " plans to " << c.plans_path << '\n';
}

void cmd_simulate(const PipelineConfig& c)
{
    const Grid grid = load_grid(c.grid_path);
    const auto plans = load_plans(c.plans_path);
    const auto risks = evaluate_plans(grid, plans, c.failures, c.alpha, c.seed);
    std::vector<double> cvars;
    for (const auto& r : risks) cvars.push_back(r.cvar_kwh);
    const BinningScheme scheme = c.binning_scheme(cvars);
    const auto labels = label_risks(risks, static_cast<std::size_t>(c.failures.scenarios), scheme);
    std::ostringstream out;
    write_labels_csv(out, labels);
    write_text_file(c.labels_path, out.str());

    Manifest m = manifest_for("simulate", c);
    add_input(m, c.grid_path);
    add_input(m, c.plans_path);
    add_output(m, c.labels_path);
    write_manifest(c.labels_path + ".manifest.json", m);

    std::vector<std::size_t> counts(scheme.classes(), 0);
    for (const auto& l : labels) ++counts[static_cast<std::size_t>(l.label)];
    std::cout << "wrote " << labels.size() << " labels to " << c.labels_path << " (" << scheme.name
              << " breakpoints:";
    for (double b : scheme.breakpoints) std::cout << ' ' << format_double(b);
    std::cout << "; class counts:";
    for (auto n : counts) std::cout << ' ' << n;
    std::cout << ")\n";
}

void cmd_featurize(const PipelineConfig& c)
{
    const Grid grid = load_grid(c.grid_path);
    const auto plans = load_plans(c.plans_path);
    Manifest m = manifest_for("featurize", c);
    add_input(m, c.grid_path);
    add_input(m, c.plans_path);
    const fs::path dir = c.features_dir;
    const auto start = std::chrono::steady_clock::now();
    for (const auto& plan : plans) {
        const PlanFeatures f = featurize_plan(grid, plan, c.features);
        write_feature_files(dir, f);
        add_output(m, dir / (plan.plan_id + ".nodes.csv"));
        add_output(m, dir / (plan.plan_id + ".edges.csv"));
    }
    write_manifest(dir / "manifest.featurize.json", m);
    std::cerr << "featurized " << plans.size() << " plans in " << seconds_since(start) << " s\n";
}

void cmd_hyperstruct(const PipelineConfig& c)
{
    const Grid grid = load_grid(c.grid_path);
    const auto plans = load_plans(c.plans_path);
    Manifest m = manifest_for("hyperstruct", c);
    add_input(m, c.grid_path);
    add_input(m, c.plans_path);
    const fs::path dir = c.features_dir;
    for (const auto& plan : plans) {
        const CombinedGrid combined = combine_plan(grid, plan);
        add_input(m, dir / (plan.plan_id + ".nodes.csv"));
        PlanFeatures f;
        f.plan_id = plan.plan_id;
        f.grid = combined.grid;
        f.node_features = read_node_features(dir, combined.grid, plan.plan_id);
        f.hyper = build_hyperstructure(combined.topology, f.node_features, c.features.k);
        write_hyperstructure_files(dir, f);
        add_output(m, dir / (plan.plan_id + ".qe.csv"));
        add_output(m, dir / (plan.plan_id + ".qv.csv"));
    }
    write_manifest(dir / "manifest.hyperstruct.json", m);
    std::cout << "wrote hyperstructures for " << plans.size() << " plans to " << dir.string() << '\n';
}

void write_metrics(const fs::path& path, const std::vector<std::string>& folds, const std::vector<double>& metrics,
                   int epochs)
{
    std::ostringstream out;
    out << "fold,accuracy_or_rmse,epochs\n";
    for (std::size_t i = 0; i < folds.size(); ++i)
        out << folds[i] << ',' << format_double(metrics[i]) << ',' << epochs << '\n';
    write_text_file(path, out.str());
}

void cmd_train(const PipelineConfig& c, bool cv)
{
    const auto labels = read_labels(c.labels_path);
    const auto samples = load_samples(c.features_dir, labels);
    const fs::path dir = c.checkpoint_dir;
    Manifest m = manifest_for("train", c);
    add_input(m, c.labels_path);

    std::ostringstream timing;
    timing << "stage,wall_seconds\n";
    auto start = std::chrono::steady_clock::now();
    TrainResult result = train(samples, c.model, c.seed, c.test_fraction);
    timing << "train," << seconds_since(start) << '\n';
    save_checkpoint_file((dir / "model.json").string(), result.trained);

    std::ostringstream history;
    history << "epoch,train_loss,test_metric\n";
    for (const auto& h : result.history)
        history << h.epoch << ',' << format_double(h.train_loss) << ',' << format_double(h.test_metric) << '\n';
    write_text_file(dir / "history.csv", history.str());

    std::vector<std::string> folds{"holdout"};
    std::vector<double> metrics{result.best_metric};
    if (cv) {
        start = std::chrono::steady_clock::now();
        const CvResult r = cross_validate(samples, c.model, c.folds, c.seed);
        timing << "cross_validate," << seconds_since(start) << '\n';
        folds.clear();
        metrics.clear();
        for (std::size_t f = 0; f < r.fold_metrics.size(); ++f) {
            folds.push_back(std::to_string(f + 1));
            metrics.push_back(r.fold_metrics[f]);
        }
        folds.insert(folds.end(), {"mean", "stderr"});
        metrics.insert(metrics.end(), {r.mean, r.stderr_});
        std::cout << "cross-validation: " << format_double(r.mean) << " +/- " << format_double(r.stderr_) << '\n';
    }
    write_metrics(dir / "metrics.csv", folds, metrics, c.model.epochs);
    write_text_file(dir / "timing.csv", timing.str());
    for (const char* name : {"model.json", "history.csv", "metrics.csv"}) add_output(m, dir / name);
    write_manifest(dir / "manifest.train.json", m);
    std::cout << "best epoch " << result.best_epoch << ", held-out "
              << (c.model.task == Task::Classify ? "accuracy " : "rmse ") << format_double(result.best_metric)
              << "; checkpoint in " << dir.string() << '\n';
}

void cmd_eval(const PipelineConfig& c)
{
    TrainedModel trained = load_checkpoint_file((fs::path(c.checkpoint_dir) / "model.json").string());
    const auto samples = load_samples(c.features_dir, read_labels(c.labels_path));
    const double metric = evaluate(trained, samples);
    std::cout << (trained.model.config().task == Task::Classify ? "accuracy," : "rmse,") << format_double(metric)
              << '\n';
}

void cmd_rank(const PipelineConfig& c, const std::string& out_path)
{
    TrainedModel trained = load_checkpoint_file((fs::path(c.checkpoint_dir) / "model.json").string());
    const auto plans = load_plans(c.plans_path);
    std::vector<PlanSample> samples;
    for (const auto& p : plans) samples.push_back(read_sample(c.features_dir, p.plan_id));
    const auto ranked = rank_plans(trained, samples);
    std::ostringstream out;
    const bool classify = trained.model.config().task == Task::Classify;
    out << "rank,plan_id," << (classify ? "predicted_class,probability" : "predicted_cvar_kwh") << '\n';
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        const auto& p = ranked[i];
        out << i + 1 << ',' << p.plan_id << ',';
        if (classify)
            out << p.predicted_class << ',' << format_double(p.probabilities[static_cast<std::size_t>(p.predicted_class)]);
        else
            out << format_double(p.predicted_cvar);
        out << '\n';
    }
    if (out_path.empty()) {
        std::cout << out.str();
    } else {
        write_text_file(out_path, out.str());
        std::cout << "wrote ranking of " << ranked.size() << " plans to " << out_path << '\n';
    }
}

void cmd_ablate(const PipelineConfig& c, const std::string& out_path)
{
    const auto samples = load_samples(c.features_dir, read_labels(c.labels_path));
    std::ostringstream out;
    out << "variant,mean,stderr,folds\n";
    for (const auto& [name, ablation] : ablation_variants()) {
        ModelConfig mc = c.model;
        mc.ablation = ablation;
        const CvResult r = cross_validate(samples, mc, c.folds, c.seed);
        out << name << ',' << format_double(r.mean) << ',' << format_double(r.stderr_) << ',' << c.folds << '\n';
        std::cerr << name << ": " << format_double(r.mean) << " +/- " << format_double(r.stderr_) << '\n';
    }
    const std::string path = out_path.empty() ? (fs::path(c.checkpoint_dir) / "ablation.csv").string() : out_path;
    write_text_file(path, out.str());
    Manifest m = manifest_for("ablate", c);
    add_input(m, c.labels_path);
    add_output(m, path);
    write_manifest(path + ".manifest.json", m);
    std::cout << "wrote " << path << '\n';
}

void cmd_report(const PipelineConfig& c, const std::string& out_dir)
{
    const Grid grid = load_grid(c.grid_path);
    const auto plans = load_plans(c.plans_path);
    std::map<std::string, double> cvar;
    for (const auto& l : read_labels(c.labels_path)) cvar[l.plan_id] = l.cvar_kwh;
    std::vector<MetricRow> rows;
    for (const auto& plan : plans) {
        auto it = cvar.find(plan.plan_id);
        if (it == cvar.end()) continue;
        MetricRow row = plan_metrics(grid, plan, c.features.caps);
        row.cvar_kwh = it->second;
        rows.push_back(row);
    }
    if (rows.empty()) throw ValidationError("report: no plan has a label");
    const fs::path dir = out_dir.empty() ? fs::path(".") : fs::path(out_dir);
    std::ostringstream report, corr;
    write_report_csv(report, rows);
    const MetricCorrelations r = correlate_metrics(rows);
    write_correlations_csv(corr, r);
    write_text_file(dir / "report.csv", report.str());
    write_text_file(dir / "correlations.csv", corr.str());
    Manifest m = manifest_for("report", c);
    add_input(m, c.grid_path);
    add_input(m, c.plans_path);
    add_input(m, c.labels_path);
    add_output(m, dir / "report.csv");
    add_output(m, dir / "correlations.csv");
    write_manifest(dir / "report.manifest.json", m);
    std::cout << corr.str();
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Resilience ranking of distribution-grid expansion plans"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    Overrides o;
    std::string out_path;

    auto* gen_grid = app.add_subcommand("gen-grid", "generate a synthetic 54-bus-style grid");
    common(gen_grid, o);
    keyed(gen_grid, o, "--system", "system", "1 (4 substations) or 2 (2 substations)");
    keyed(gen_grid, o, "--out", "paths.grid", "output grid JSON");

    auto* gen_plans = app.add_subcommand("gen-plans", "draw random expansion plans");
    common(gen_plans, o);
    keyed(gen_plans, o, "--grid", "paths.grid", "grid JSON");
    keyed(gen_plans, o, "--count", "plans.count", "number of plans");
    keyed(gen_plans, o, "--out", "paths.plans", "output plans JSON");

    auto* simulate = app.add_subcommand("simulate", "Monte Carlo outages, CVaR and class labels");
    common(simulate, o);
    keyed(simulate, o, "--grid", "paths.grid", "grid JSON");
    keyed(simulate, o, "--plans", "paths.plans", "plans JSON");
    keyed(simulate, o, "--scenarios", "simulator.scenarios", "scenarios per plan");
    keyed(simulate, o, "--alpha", "simulator.alpha", "CVaR confidence level");
    keyed(simulate, o, "--system", "system", "binning preset system");
    keyed(simulate, o, "--binning", "binning.mode", "preset or quantile");
    keyed(simulate, o, "--classes", "binning.classes", "3, 4 or 5");
    keyed(simulate, o, "--out", "paths.labels", "output labels CSV");

    auto* featurize = app.add_subcommand("featurize", "node and edge features per plan");
    common(featurize, o);
    keyed(featurize, o, "--grid", "paths.grid", "grid JSON");
    keyed(featurize, o, "--plans", "paths.plans", "plans JSON");
    keyed(featurize, o, "--out", "paths.features", "feature directory");

    auto* hyper = app.add_subcommand("hyperstruct", "hyperedge and hypernode incidence per plan");
    common(hyper, o);
    keyed(hyper, o, "--grid", "paths.grid", "grid JSON");
    keyed(hyper, o, "--plans", "paths.plans", "plans JSON");
    keyed(hyper, o, "--features", "paths.features", "feature directory (read and written)");
    keyed(hyper, o, "--k", "features.k", "nearest neighbours per hyperstructure");

    auto* train_cmd = app.add_subcommand("train", "train a model on labeled plans");
    common(train_cmd, o);
    keyed(train_cmd, o, "--data", "paths.labels", "labels CSV");
    keyed(train_cmd, o, "--features", "paths.features", "feature directory");
    keyed(train_cmd, o, "--epochs", "model.epochs", "training epochs");
    keyed(train_cmd, o, "--task", "model.task", "classify or regress");
    keyed(train_cmd, o, "--out", "paths.checkpoint", "checkpoint directory");
    train_cmd->add_flag("--cv", o.cv, "also run k-fold cross-validation into metrics.csv");

    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on labeled plans");
    common(eval_cmd, o);
    keyed(eval_cmd, o, "--checkpoint", "paths.checkpoint", "checkpoint directory");
    keyed(eval_cmd, o, "--data", "paths.labels", "labels CSV");
    keyed(eval_cmd, o, "--features", "paths.features", "feature directory");

    auto* rank = app.add_subcommand("rank", "rank plans by predicted risk");
    common(rank, o);
    keyed(rank, o, "--checkpoint", "paths.checkpoint", "checkpoint directory");
    keyed(rank, o, "--plans", "paths.plans", "plans JSON");
    keyed(rank, o, "--features", "paths.features", "feature directory");
    rank->add_option("--out", out_path, "ranking CSV (stdout when omitted)");

    auto* ablate = app.add_subcommand("ablate", "cross-validate the full model and its ablations");
    common(ablate, o);
    keyed(ablate, o, "--data", "paths.labels", "labels CSV");
    keyed(ablate, o, "--features", "paths.features", "feature directory");
    keyed(ablate, o, "--folds", "train.folds", "cross-validation folds");
    keyed(ablate, o, "--epochs", "model.epochs", "training epochs");
    ablate->add_option("--out", out_path, "ablation CSV");

    auto* report = app.add_subcommand("report", "graph metrics per plan and correlation with 1/CVaR");
    common(report, o);
    keyed(report, o, "--grid", "paths.grid", "grid JSON");
    keyed(report, o, "--plans", "paths.plans", "plans JSON");
    keyed(report, o, "--data", "paths.labels", "labels CSV");
    report->add_option("--out", out_path, "output directory");

    try {
        app.parse(argc, argv);
        const PipelineConfig c = resolve(o);
        if (*gen_grid) cmd_gen_grid(c);
        else if (*gen_plans) cmd_gen_plans(c);
        else if (*simulate) cmd_simulate(c);
        else if (*featurize) cmd_featurize(c);
        else if (*hyper) cmd_hyperstruct(c);
        else if (*train_cmd) cmd_train(c, o.cv);
        else if (*eval_cmd) cmd_eval(c);
        else if (*rank) cmd_rank(c, out_path);
        else if (*ablate) cmd_ablate(c, out_path);
        else if (*report) cmd_report(c, out_path);
        return 0;
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
}
