// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit when any
// criterion fails. Tolerances and sizes are fixed here and not tuned per run.

#include "gridres/csv.hpp"
#include "gridres/features.hpp"
#include "gridres/model.hpp"
#include "gridres/pipeline.hpp"
#include "gridres/simulator.hpp"
#include "gridres/training.hpp"

#include "oracles.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

using namespace gridres;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kSeed = 7;

struct Outcome {
    bool pass = false;
    std::string detail;
};

double elapsed(std::chrono::steady_clock::time_point start)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(double x, int digits = 4)
{
    std::ostringstream s;
    s.precision(digits);
    s << x;
    return s.str();
}

// ---- 1: gradient fidelity --------------------------------------------------

Outcome gradient_fidelity()
{
    const auto start = std::chrono::steady_clock::now();
    std::mt19937_64 rng(kSeed);
    double worst = 0.0;
    std::size_t coords = 0;
    for (int i = 0; i < 20; ++i) {
        GeneratorConfig gen;
        gen.nodes = 4 + static_cast<int>(rng() % 3);
        gen.substations = 1 + static_cast<int>(rng() % 2);
        gen.candidates = 1 + static_cast<int>(rng() % 2);
        const Grid base = generate_grid(gen, rng());
        const auto plans = generate_plans(base, 2, rng());
        FeatureOptions opts;
        opts.k = 1 + rng() % 3;
        const PlanSample s = make_sample(featurize_plan(base, plans[rng() % 2], opts), static_cast<int>(rng() % 3), 0.0);

        ModelConfig cfg;
        cfg.layers = 1 + static_cast<int>(rng() % 3);
        cfg.hidden_dim = 3 + static_cast<int>(rng() % 4);
        cfg.mlp_blocks = 1 + static_cast<int>(rng() % 2);
        cfg.dropout = i % 2 ? 0.3 : 0.0;
        cfg.task = i % 4 == 3 ? Task::Regress : Task::Classify;
        HyperGcnn model(cfg, s.node_features.cols(), s.edge_features.cols(), rng());
        auto params = model.parameters();
        const std::uint64_t drop_seed = rng();
        const auto r = ad::gradient_check(
            [&](ad::Tape& tape) {
                std::mt19937_64 drop(drop_seed);
                const ad::Var y = model.forward(tape, s, true, drop);
                return cfg.task == Task::Classify ? ad::cross_entropy(y, static_cast<std::size_t>(s.label))
                                                  : ad::mse(y, Matrix{{0.3}});
            },
            params);
        worst = std::max(worst, r.max_relative_error);
        coords += r.coordinates_checked;
    }
    const double t = elapsed(start);
    return {worst < 1e-3 && t < 30.0,
            "20 samples, " + std::to_string(coords) + " coordinates, max rel err " + fmt(worst) + " (< 1e-3), " +
                fmt(t, 3) + " s (< 30)"};
}

// ---- 2: oracle equivalence -------------------------------------------------

Outcome oracle_equivalence()
{
    const auto start = std::chrono::steady_clock::now();
    std::mt19937_64 rng(kSeed);
    const std::vector<double> weights{0.25, 0.5, 1.0, 1.5, 2.0};
    double worst = 0.0;
    std::size_t checks = 0;
    auto compare = [&](double got, double want) {
        worst = std::max(worst, std::abs(got - want));
        ++checks;
    };
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + rng() % 7;
        const double p = 0.3 + 0.5 * static_cast<double>(rng() % 100) / 100.0;
        const oracle::Graph g = oracle::random_graph(rng, n, p, weights);
        std::set<std::size_t> subs{rng() % n};
        if (n > 3 && rng() % 2) subs.insert(rng() % n);
        const Topology t(oracle::to_grid(g, subs));

        for (const PathCaps caps : {PathCaps{}, PathCaps::none()}) {
            const Matrix table = u_score_table(t, caps);
            for (std::size_t i = 0; i < t.loads().size(); ++i)
                for (std::size_t j = 0; j < t.substations().size(); ++j)
                    compare(table(i, j), oracle::u_score(g, t.loads()[i], t.substations()[j], caps.max_paths));
        }
        const auto want = oracle::classical(g);
        const auto got = classical_metrics(t);
        compare(got.average_path_length, want.apl);
        compare(got.diameter, want.diameter);
        compare(got.average_betweenness, want.avg_bc);
        const auto bc = betweenness(t);
        const auto bc_want = oracle::betweenness(g);
        for (std::size_t v = 0; v < n; ++v) compare(bc[v], bc_want[v]);
    }
    const double t = elapsed(start);
    return {worst <= 1e-9 && t < 60.0,
            "200 graphs, " + std::to_string(checks) + " values, max abs diff " + fmt(worst) + " (<= 1e-9), " +
                fmt(t, 3) + " s (< 60)"};
}

// ---- 3: CVaR correctness ---------------------------------------------------

Outcome cvar_correctness()
{
    std::mt19937_64 rng(kSeed);
    std::uniform_real_distribution<double> loss(0.0, 6.0e4);
    const int levels[] = {90, 95, 99};
    std::size_t mismatches = 0;
    for (int i = 0; i < 1000; ++i) {
        std::vector<double> v(1 + rng() % 2000);
        for (double& x : v) x = rng() % 5 == 0 ? 0.0 : loss(rng);
        const int pct = levels[i % 3];
        if (compute_cvar(v, pct / 100.0) != oracle::cvar(v, pct)) ++mismatches;
    }
    const int c1 = assign_class(28679.76, BinningScheme::preset(1, 3));
    const int c2 = assign_class(16736.37, BinningScheme::preset(2, 3));
    return {mismatches == 0 && c1 == 2 && c2 == 0,
            "1000 vectors, " + std::to_string(mismatches) + " mismatches; 28679.76 -> class " + std::to_string(c1) +
                " (want 2), 16736.37 -> class " + std::to_string(c2) + " (want 0)"};
}

// ---- shared generated system ----------------------------------------------

struct Dataset {
    Grid base;
    std::vector<ExpansionPlan> plans;
    std::vector<PlanRisk> risks;
};

Dataset simulate_system(std::size_t plan_count)
{
    const PipelineConfig c;
    Dataset d;
    d.base = generate_grid(c.generator, c.seed);
    d.plans = generate_plans(d.base, plan_count, c.seed);
    d.risks = evaluate_plans(d.base, d.plans, c.failures, c.alpha, c.seed);
    return d;
}

// ---- 4: direction of signal ------------------------------------------------

Outcome signal_direction()
{
    const auto start = std::chrono::steady_clock::now();
    const Dataset d = simulate_system(100);
    std::vector<MetricRow> rows;
    for (std::size_t i = 0; i < d.plans.size(); ++i) {
        MetricRow row = plan_metrics(d.base, d.plans[i], {});
        row.cvar_kwh = d.risks[i].cvar_kwh;
        rows.push_back(row);
    }
    const MetricCorrelations r = correlate_metrics(rows);
    const double t = elapsed(start);
    std::cout << "  metric correlations with 1/CVaR: uscore_sum " << fmt(r.uscore_sum) << ", avg_betweenness "
              << fmt(r.avg_betweenness) << ", apl " << fmt(r.apl) << ", diameter " << fmt(r.diameter) << '\n';
    const bool ok = r.uscore_sum > 0.0 && r.uscore_sum > r.avg_betweenness && t < 900.0;
    return {ok, "100 plans x " + std::to_string(PipelineConfig{}.failures.scenarios) + " scenarios: r(U-sum) " +
                    fmt(r.uscore_sum) + " vs r(avg BC) " + fmt(r.avg_betweenness) + " (need r(U-sum) > 0 and > r(BC)), " +
                    fmt(t, 3) + " s (< 900)"};
}

// ---- 5 and 6: learning and ablations --------------------------------------

struct LearningRun {
    std::vector<PlanSample> samples;
    double majority = 0.0;
    std::vector<std::pair<std::string, CvResult>> variants;
    double full_and_plain_seconds = 0.0;
};

LearningRun run_learning()
{
    PipelineConfig c;
    c.binning = "quantile";
    c.classes = 3;
    c.model.epochs = 50;
    const Dataset d = simulate_system(200);
    std::vector<double> cvars;
    for (const auto& r : d.risks) cvars.push_back(r.cvar_kwh);
    const auto labels = label_risks(d.risks, static_cast<std::size_t>(c.failures.scenarios), c.binning_scheme(cvars));

    LearningRun run;
    std::vector<std::size_t> counts(3, 0);
    for (std::size_t i = 0; i < d.plans.size(); ++i) {
        run.samples.push_back(make_sample(featurize_plan(d.base, d.plans[i], c.features), labels[i].label, labels[i].cvar_kwh));
        ++counts[static_cast<std::size_t>(labels[i].label)];
    }
    run.majority = static_cast<double>(*std::max_element(counts.begin(), counts.end())) / static_cast<double>(labels.size());
    std::cout << "  class counts:";
    for (auto n : counts) std::cout << ' ' << n;
    std::cout << '\n';

    for (const auto& [name, ablation] : ablation_variants()) {
        const auto start = std::chrono::steady_clock::now();
        ModelConfig mc = c.model;
        mc.ablation = ablation;
        const CvResult r = cross_validate(run.samples, mc, c.folds, c.seed);
        const double t = elapsed(start);
        if (name == "full" || name == "plain_gcn") run.full_and_plain_seconds += t;
        std::cout << "  " << name << ": " << fmt(r.mean) << " +/- " << fmt(r.stderr_) << " (" << fmt(t, 3) << " s)\n"
                  << std::flush;
        run.variants.emplace_back(name, r);
    }
    return run;
}

const CvResult& variant(const LearningRun& run, const std::string& name)
{
    for (const auto& [n, r] : run.variants)
        if (n == name) return r;
    throw std::logic_error("missing variant " + name);
}

Outcome learning(const LearningRun& run)
{
    const CvResult& full = variant(run, "full");
    const CvResult& plain = variant(run, "plain_gcn");
    const bool ok = full.mean >= run.majority + 0.15 && full.mean >= plain.mean && run.full_and_plain_seconds < 1200.0;
    return {ok, "10-fold CV accuracy " + fmt(full.mean) + " vs majority " + fmt(run.majority) + " + 0.15 and plain GCN " +
                    fmt(plain.mean) + "; full + plain " + fmt(run.full_and_plain_seconds, 4) + " s (< 1200)"};
}

Outcome ablations(const LearningRun& run)
{
    const CvResult& full = variant(run, "full");
    bool ok = true;
    std::string detail = "full " + fmt(full.mean) + " +/- " + fmt(full.stderr_);
    for (const char* name : {"no_uscores", "no_hyperedge", "no_hypernode", "no_attention"}) {
        const CvResult& r = variant(run, name);
        const bool beaten = r.mean > full.mean + full.stderr_;
        ok = ok && !beaten;
        detail += std::string("; ") + name + " " + fmt(r.mean) + (beaten ? " (higher)" : "");
    }
    return {ok, detail};
}

// ---- 7: performance envelope ----------------------------------------------

Outcome performance()
{
    const PipelineConfig c;
    const Grid base = generate_grid(c.generator, c.seed);
    ExpansionPlan all{"all", {}};
    for (const auto& e : base.edges())
        if (e.status == EdgeStatus::Candidate) all.edge_ids.push_back(e.id);
    const CombinedGrid combined = combine_plan(base, all);

    auto start = std::chrono::steady_clock::now();
    const Matrix xv = node_feature_matrix(combined.topology, c.features.caps);
    const double uscore_seconds = elapsed(start);

    const auto plans = generate_plans(base, 200, c.seed);
    std::vector<PlanSample> samples;
    for (std::size_t i = 0; i < plans.size(); ++i)
        samples.push_back(make_sample(featurize_plan(base, plans[i], c.features), static_cast<int>(i % 3)));
    std::vector<std::size_t> train_idx(180);
    std::iota(train_idx.begin(), train_idx.end(), std::size_t{0});
    ModelConfig mc = c.model;
    mc.epochs = 1;
    start = std::chrono::steady_clock::now();
    fit(samples, train_idx, {}, mc, c.seed);
    const double epoch_seconds = elapsed(start);

    return {uscore_seconds < 5.0 && epoch_seconds < 5.0 && xv.all_finite(),
            "U-scores for the densest plan " + fmt(uscore_seconds, 3) + " s (< 5); one epoch over 180 plans " +
                fmt(epoch_seconds, 3) + " s (< 5)"};
}

// ---- 8: determinism --------------------------------------------------------

int run_cli(const fs::path& dir, const std::string& args)
{
    const std::string cmd = "cd '" + dir.string() + "' && '" GRIDRES_CLI "' " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome determinism()
{
    const std::vector<std::string> steps{
        "gen-grid --seed 11 --out grid.json",
        "gen-plans --seed 11 --grid grid.json --count 40 --out plans.json",
        "simulate --seed 11 --grid grid.json --plans plans.json --scenarios 200 --binning quantile --out labels.csv",
        "featurize --seed 11 --grid grid.json --plans plans.json --out features",
        "hyperstruct --seed 11 --grid grid.json --plans plans.json --features features",
        "train --seed 11 --data labels.csv --features features --epochs 5 --out ckpt --cv --set train.folds=4",
        "report --seed 11 --grid grid.json --plans plans.json --data labels.csv --out report",
    };
    std::vector<fs::path> dirs;
    for (const char* name : {"gridres_accept_a", "gridres_accept_b"}) {
        const fs::path dir = fs::temp_directory_path() / name;
        fs::remove_all(dir);
        fs::create_directories(dir);
        for (const auto& step : steps)
            if (run_cli(dir, step) != 0) return {false, "step failed: gridres " + step};
        dirs.push_back(dir);
    }
    std::size_t files = 0, differing = 0;
    std::string first_diff;
    for (const auto& entry : fs::recursive_directory_iterator(dirs[0])) {
        if (!entry.is_regular_file()) continue;
        const fs::path rel = fs::relative(entry.path(), dirs[0]);
        const std::string ext = rel.extension().string();
        if (ext != ".csv" && ext != ".json") continue;
        if (rel.filename() == "timing.csv") continue;
        ++files;
        const fs::path other = dirs[1] / rel;
        if (!fs::exists(other) || read_text_file(entry.path()) != read_text_file(other)) {
            ++differing;
            if (first_diff.empty()) first_diff = rel.string();
        }
    }
    for (const auto& d : dirs) fs::remove_all(d);
    return {files > 100 && differing == 0,
            std::to_string(files) + " CSV/JSON outputs compared, " + std::to_string(differing) + " differ" +
                (first_diff.empty() ? "" : " (first: " + first_diff + ")")};
}

} // namespace

int main(int argc, char** argv)
{
    // Optional argument: comma-separated criterion numbers to run.
    std::set<int> only;
    if (argc > 1) {
        std::stringstream list(argv[1]);
        for (std::string item; std::getline(list, item, ',');) only.insert(std::stoi(item));
    }
    auto wanted = [&](int n) { return only.empty() || only.count(n) > 0; };

    int failures = 0;
    auto report = [&](int n, const char* name, const Outcome& o) {
        std::cout << (o.pass ? "PASS" : "FAIL") << " [" << n << "] " << name << ": " << o.detail << '\n' << std::flush;
        failures += o.pass ? 0 : 1;
    };
    auto guarded = [&](int n, const char* name, const std::function<Outcome()>& f) {
        if (!wanted(n)) return;
        try {
            report(n, name, f());
        } catch (const std::exception& e) {
            report(n, name, {false, std::string("error: ") + e.what()});
        }
    };

    guarded(1, "gradient fidelity", gradient_fidelity);
    guarded(2, "oracle equivalence", oracle_equivalence);
    guarded(3, "CVaR correctness", cvar_correctness);
    guarded(4, "U-score vs betweenness signal", signal_direction);
    if (wanted(5) || wanted(6)) {
        try {
            const LearningRun run = run_learning();
            if (wanted(5)) report(5, "learning above baseline", learning(run));
            if (wanted(6)) report(6, "ablation pattern", ablations(run));
        } catch (const std::exception& e) {
            if (wanted(5)) report(5, "learning above baseline", {false, std::string("error: ") + e.what()});
            if (wanted(6)) report(6, "ablation pattern", {false, std::string("error: ") + e.what()});
        }
    }
    guarded(7, "performance envelope", performance);
    guarded(8, "pipeline determinism", determinism);
    return failures == 0 ? 0 : 1;
}
