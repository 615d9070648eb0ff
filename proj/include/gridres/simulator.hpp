#pragma once

#include "gridres/grid.hpp"

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gridres {

/// Outage process parameters. Rates are events per year; a per-hour event
/// probability is rate / hours_per_year.
struct FailureConfig {
    double routine_rate = 0.4;
    double hilp_rate = 0.01;
    int routine_repair_hours = 4;
    int hilp_repair_hours = 48;
    int hilp_min_lines = 2;
    int hilp_max_lines = 5;
    int hours_per_year = 8760;
    int scenarios = 2000;
    /// false: routine_rate is a system-wide rate and each event fails one
    /// uniformly chosen line. true: every line fails independently at that rate.
    bool routine_per_line = false;
    /// true: scenario draws ignore the plan id and are sampled on the base
    /// grid's full line set, so plans share failures on common lines.
    bool common_draws = false;

    /// Throws ValidationError on out-of-range values.
    void validate() const;
};

struct OutageEvent {
    int start_hour = 0;
    int duration_hours = 0;
    bool hilp = false;
    std::vector<std::size_t> edges; ///< edge indices into the sampled topology
};

struct ScenarioResult {
    std::size_t index = 0;
    double loss_kwh = 0.0;
    std::vector<OutageEvent> events;
};

/// Deterministic 64-bit seed mixing (splitmix64 finalizer).
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);
/// Stable FNV-1a hash of text.
std::uint64_t hash_text(std::string_view text);
/// Seed for one scenario of one plan.
std::uint64_t scenario_seed(std::uint64_t base_seed, std::string_view plan_id, std::size_t index);

/// Small deterministic draws on top of mt19937_64 (identical on every platform).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    double uniform();                       ///< [0, 1)
    std::size_t below(std::size_t n);       ///< uniform in [0, n)
    int between(int lo, int hi);            ///< uniform in [lo, hi]
    /// Failures before the first success of Bernoulli(p) trials.
    std::uint64_t geometric(double p);
    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

/// Samples one year of outages on `topo`.
std::vector<OutageEvent> sample_outages(const Topology& topo, const FailureConfig& cfg,
                                        std::uint64_t seed);

/// Annual loss of load: every hour, each load with no path over in-service
/// lines to any substation sheds its hourly demand.
double loss_of_load(const Topology& topo, std::span<const OutageEvent> events, int hours);

/// Demand (kWh/h) of loads cut off from every substation when `failed` lines are out.
double shed_demand(const Topology& topo, std::span<const char> failed);

ScenarioResult simulate_scenario(const Topology& topo, const FailureConfig& cfg, std::uint64_t seed,
                                 std::size_t index = 0);

/// Mean of the worst ceil((1 - alpha) n) losses.
double compute_cvar(std::span<const double> losses, double alpha);

/// Class ranges [0, b1], (b1, b2], ..., (bk, inf) with label = range index.
struct BinningScheme {
    std::string name;
    std::vector<double> breakpoints;

    std::size_t classes() const { return breakpoints.size() + 1; }
    void validate() const;

    /// Fixed kWh ranges; system is 1 or 2, classes 3..5.
    static BinningScheme preset(int system, int classes);
    /// Breakpoints at the j/classes empirical quantiles of `cvars`.
    static BinningScheme quantile(std::span<const double> cvars, int classes);
};

int assign_class(double cvar, const BinningScheme& scheme);

/// `count` distinct uniformly random subsets of the base grid's candidates.
std::vector<ExpansionPlan> generate_plans(const Grid& base, std::size_t count, std::uint64_t seed);

struct PlanRisk {
    std::string plan_id;
    std::vector<double> losses;
    double cvar_kwh = 0.0;
    double mean_loss = 0.0;
};

struct LabeledPlan {
    std::string plan_id;
    double cvar_kwh = 0.0;
    double mean_loss = 0.0;
    std::size_t scenario_count = 0;
    int label = 0;
    std::vector<double> losses;
};

/// Runs cfg.scenarios scenarios for one plan and returns its loss distribution.
PlanRisk evaluate_plan(const Grid& base, const ExpansionPlan& plan, const FailureConfig& cfg,
                       double alpha, std::uint64_t seed);

std::vector<PlanRisk> evaluate_plans(const Grid& base, std::span<const ExpansionPlan> plans,
                                     const FailureConfig& cfg, double alpha, std::uint64_t seed);

std::vector<LabeledPlan> label_risks(std::span<const PlanRisk> risks, std::size_t scenarios,
                                     const BinningScheme& scheme);

std::vector<LabeledPlan> label_dataset(const Grid& base, std::span<const ExpansionPlan> plans,
                                       const FailureConfig& cfg, const BinningScheme& scheme,
                                       double alpha, std::uint64_t seed);

/// CSV columns: plan_id, cvar_kwh, label, mean_loss, scenario_count.
void write_labels_csv(std::ostream& out, std::span<const LabeledPlan> labels);
std::vector<LabeledPlan> parse_labels_csv(std::string_view text, const std::string& context);

} // namespace gridres
