#include "gridres/simulator.hpp"

#include "gridres/csv.hpp"
#include "gridres/errors.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <set>

namespace gridres {

void FailureConfig::validate() const
{
    if (!(routine_rate >= 0.0) || !(hilp_rate >= 0.0))
        throw ValidationError("failure config: rates must be nonnegative");
    if (routine_repair_hours < 1 || hilp_repair_hours < 1)
        throw ValidationError("failure config: repair hours must be at least 1");
    if (hilp_min_lines < 2 || hilp_max_lines < hilp_min_lines)
        throw ValidationError("failure config: HILP size range must satisfy 2 <= min <= max");
    if (hours_per_year < 1) throw ValidationError("failure config: hours_per_year must be positive");
    if (scenarios < 1) throw ValidationError("failure config: scenarios must be positive");
    if (routine_rate >= hours_per_year || hilp_rate >= hours_per_year)
        throw ValidationError("failure config: rate exceeds one event per hour");
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b)
{
    std::uint64_t z = a + 0x9e3779b97f4a7c15ULL + (b * 0xbf58476d1ce4e5b9ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t hash_text(std::string_view text)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t scenario_seed(std::uint64_t base_seed, std::string_view plan_id, std::size_t index)
{
    return mix_seed(mix_seed(base_seed, hash_text(plan_id)), static_cast<std::uint64_t>(index));
}

double Rng::uniform()
{
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::size_t Rng::below(std::size_t n)
{
    if (n == 0) throw std::invalid_argument("Rng::below: empty range");
    const std::uint64_t bound = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x;
    do {
        x = engine_();
    } while (x >= limit);
    return static_cast<std::size_t>(x % bound);
}

int Rng::between(int lo, int hi)
{
    return lo + static_cast<int>(below(static_cast<std::size_t>(hi - lo) + 1));
}

std::uint64_t Rng::geometric(double p)
{
    if (p <= 0.0) return std::numeric_limits<std::uint64_t>::max();
    if (p >= 1.0) return 0;
    const double u = uniform();
    const double k = std::floor(std::log1p(-u) / std::log1p(-p));
    if (!(k < 1e18)) return std::numeric_limits<std::uint64_t>::max();
    return static_cast<std::uint64_t>(k);
}

namespace {

/// Hours in [0, hours) at which a Bernoulli(p) event fires.
std::vector<int> event_hours(Rng& rng, double p, int hours)
{
    std::vector<int> out;
    std::uint64_t t = rng.geometric(p);
    while (t < static_cast<std::uint64_t>(hours)) {
        out.push_back(static_cast<int>(t));
        const std::uint64_t skip = rng.geometric(p);
        if (skip >= static_cast<std::uint64_t>(hours)) break;
        t += 1 + skip;
    }
    return out;
}

std::vector<std::size_t> connected_footprint(const Topology& topo, Rng& rng, std::size_t size)
{
    const std::size_t m = topo.edge_count();
    std::vector<char> chosen(m, 0);
    std::vector<std::size_t> footprint{rng.below(m)};
    chosen[footprint[0]] = 1;
    while (footprint.size() < size) {
        std::set<std::size_t> frontier;
        for (std::size_t e : footprint) {
            const auto& link = topo.link(e);
            for (std::size_t end : {link.u, link.v})
                for (const auto& inc : topo.incident(end))
                    if (!chosen[inc.edge]) frontier.insert(inc.edge);
        }
        if (frontier.empty()) break;
        auto it = frontier.begin();
        std::advance(it, static_cast<std::ptrdiff_t>(rng.below(frontier.size())));
        chosen[*it] = 1;
        footprint.push_back(*it);
    }
    std::sort(footprint.begin(), footprint.end());
    return footprint;
}

} // namespace

std::vector<OutageEvent> sample_outages(const Topology& topo, const FailureConfig& cfg,
                                        std::uint64_t seed)
{
    Rng rng(seed);
    std::vector<OutageEvent> events;
    const std::size_t m = topo.edge_count();
    const int hours = cfg.hours_per_year;
    if (m == 0) return events;

    const double routine_p = cfg.routine_rate / hours;
    if (cfg.routine_per_line) {
        for (std::size_t e = 0; e < m; ++e)
            for (int t : event_hours(rng, routine_p, hours))
                events.push_back({t, cfg.routine_repair_hours, false, {e}});
    } else {
        for (int t : event_hours(rng, routine_p, hours))
            events.push_back({t, cfg.routine_repair_hours, false, {rng.below(m)}});
    }

    const double hilp_p = cfg.hilp_rate / hours;
    const int max_lines = std::min<int>(cfg.hilp_max_lines, static_cast<int>(m));
    const int min_lines = std::min(cfg.hilp_min_lines, max_lines);
    for (int t : event_hours(rng, hilp_p, hours)) {
        const auto size = static_cast<std::size_t>(rng.between(min_lines, max_lines));
        events.push_back({t, cfg.hilp_repair_hours, true, connected_footprint(topo, rng, size)});
    }
    std::stable_sort(events.begin(), events.end(),
                     [](const OutageEvent& a, const OutageEvent& b) { return a.start_hour < b.start_hour; });
    return events;
}

double shed_demand(const Topology& topo, std::span<const char> failed)
{
    const std::size_t n = topo.node_count();
    std::vector<char> energized(n, 0);
    std::deque<std::size_t> queue;
    for (std::size_t s : topo.substations()) {
        energized[s] = 1;
        queue.push_back(s);
    }
    while (!queue.empty()) {
        const std::size_t u = queue.front();
        queue.pop_front();
        for (const auto& inc : topo.incident(u)) {
            if (failed[inc.edge] || energized[inc.neighbor]) continue;
            energized[inc.neighbor] = 1;
            queue.push_back(inc.neighbor);
        }
    }
    double shed = 0.0;
    for (std::size_t l : topo.loads())
        if (!energized[l]) shed += topo.demand(l);
    return shed;
}

double loss_of_load(const Topology& topo, std::span<const OutageEvent> events, int hours)
{
    if (events.empty()) return 0.0;
    std::vector<int> marks{0, hours};
    for (const auto& ev : events) {
        marks.push_back(std::clamp(ev.start_hour, 0, hours));
        marks.push_back(std::clamp(ev.start_hour + ev.duration_hours, 0, hours));
    }
    std::sort(marks.begin(), marks.end());
    marks.erase(std::unique(marks.begin(), marks.end()), marks.end());

    std::vector<char> failed(topo.edge_count(), 0);
    double loss = 0.0;
    for (std::size_t i = 0; i + 1 < marks.size(); ++i) {
        const int begin = marks[i];
        std::fill(failed.begin(), failed.end(), 0);
        bool any = false;
        for (const auto& ev : events) {
            if (ev.start_hour <= begin && begin < ev.start_hour + ev.duration_hours) {
                for (std::size_t e : ev.edges) failed[e] = 1;
                any = any || !ev.edges.empty();
            }
        }
        if (any) loss += shed_demand(topo, failed) * static_cast<double>(marks[i + 1] - begin);
    }
    return loss;
}

ScenarioResult simulate_scenario(const Topology& topo, const FailureConfig& cfg, std::uint64_t seed,
                                 std::size_t index)
{
    ScenarioResult result;
    result.index = index;
    result.events = sample_outages(topo, cfg, seed);
    result.loss_kwh = loss_of_load(topo, result.events, cfg.hours_per_year);
    return result;
}

double compute_cvar(std::span<const double> losses, double alpha)
{
    if (losses.empty()) throw EmptyLossList();
    if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("cvar: alpha must lie in (0, 1)");
    std::vector<double> sorted(losses.begin(), losses.end());
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    const double n = static_cast<double>(sorted.size());
    // The epsilon absorbs representation error in 1 - alpha (1 - 0.95 > 0.05).
    auto tail = static_cast<std::size_t>(std::ceil((1.0 - alpha) * n - 1e-9));
    tail = std::clamp<std::size_t>(tail, 1, sorted.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < tail; ++i) sum += sorted[i];
    return sum / static_cast<double>(tail);
}

void BinningScheme::validate() const
{
    if (breakpoints.empty()) throw ValidationError("binning: need at least one breakpoint");
    for (std::size_t i = 0; i < breakpoints.size(); ++i) {
        if (!std::isfinite(breakpoints[i]) || breakpoints[i] < 0.0)
            throw ValidationError("binning: breakpoints must be finite and nonnegative");
        if (i > 0 && !(breakpoints[i] > breakpoints[i - 1]))
            throw ValidationError("binning: breakpoints must be strictly increasing");
    }
}

BinningScheme BinningScheme::preset(int system, int classes)
{
    BinningScheme s;
    s.name = "system" + std::to_string(system) + "-" + std::to_string(classes);
    if (system == 1) {
        switch (classes) {
        case 3: s.breakpoints = {1.0e4, 2.0e4}; break;
        case 4: s.breakpoints = {1.0e4, 2.0e4, 3.0e4}; break;
        case 5: s.breakpoints = {1.0e4, 1.5e4, 2.0e4, 2.5e4}; break;
        default: throw ValidationError("binning: classes must be 3, 4 or 5");
        }
    } else if (system == 2) {
        switch (classes) {
        case 3: s.breakpoints = {3.0e4, 4.0e4}; break;
        case 4: s.breakpoints = {3.0e4, 3.5e4, 4.0e4}; break;
        case 5: s.breakpoints = {3.0e4, 3.5e4, 4.0e4, 4.5e4}; break;
        default: throw ValidationError("binning: classes must be 3, 4 or 5");
        }
    } else {
        throw ValidationError("binning: unknown preset system " + std::to_string(system));
    }
    return s;
}

BinningScheme BinningScheme::quantile(std::span<const double> cvars, int classes)
{
    if (classes < 2) throw ValidationError("binning: need at least 2 classes");
    if (cvars.size() < static_cast<std::size_t>(classes))
        throw ValidationError("binning: fewer values than classes");
    std::vector<double> sorted(cvars.begin(), cvars.end());
    std::sort(sorted.begin(), sorted.end());
    BinningScheme s;
    s.name = "quantile-" + std::to_string(classes);
    const std::size_t n = sorted.size();
    for (int j = 1; j < classes; ++j) {
        const std::size_t pos = (static_cast<std::size_t>(j) * n + static_cast<std::size_t>(classes) - 1) /
                                    static_cast<std::size_t>(classes) - 1;
        s.breakpoints.push_back(sorted[pos]);
    }
    s.validate();
    return s;
}

int assign_class(double cvar, const BinningScheme& scheme)
{
    int label = 0;
    for (double b : scheme.breakpoints)
        if (cvar > b) ++label;
    return label;
}

std::vector<ExpansionPlan> generate_plans(const Grid& base, std::size_t count, std::uint64_t seed)
{
    std::vector<std::string> candidates;
    for (const Edge& e : base.edges())
        if (e.status == EdgeStatus::Candidate) candidates.push_back(e.id);
    if (candidates.empty()) throw ValidationError("generate_plans: base grid has no candidate edges");
    const std::size_t c = candidates.size();
    if (c < 63 && count > (std::size_t{1} << c))
        throw CountExceedsSubsetSpace("generate_plans: " + std::to_string(count) +
                                      " plans requested but only 2^" + std::to_string(c) +
                                      " subsets exist");

    Rng rng(seed);
    std::set<std::vector<char>> seen;
    std::vector<ExpansionPlan> plans;
    const std::size_t width = std::max<std::size_t>(3, std::to_string(count).size());
    while (plans.size() < count) {
        std::vector<char> mask(c);
        for (std::size_t i = 0; i < c; ++i) mask[i] = static_cast<char>(rng.engine()() >> 63);
        if (!seen.insert(mask).second) continue;
        std::string id = std::to_string(plans.size());
        id = "plan_" + std::string(width - id.size(), '0') + id;
        ExpansionPlan plan{id, {}};
        for (std::size_t i = 0; i < c; ++i)
            if (mask[i]) plan.edge_ids.push_back(candidates[i]);
        plans.push_back(std::move(plan));
    }
    return plans;
}

PlanRisk evaluate_plan(const Grid& base, const ExpansionPlan& plan, const FailureConfig& cfg,
                       double alpha, std::uint64_t seed)
{
    cfg.validate();
    const CombinedGrid combined = combine_plan(base, plan);
    const Topology& topo = combined.topology;

    PlanRisk risk;
    risk.plan_id = plan.plan_id;
    risk.losses.reserve(static_cast<std::size_t>(cfg.scenarios));

    if (!cfg.common_draws) {
        for (int i = 0; i < cfg.scenarios; ++i) {
            const auto idx = static_cast<std::size_t>(i);
            risk.losses.push_back(
                simulate_scenario(topo, cfg, scenario_seed(seed, plan.plan_id, idx), idx).loss_kwh);
        }
    } else {
        // Sample on every base line, then keep the lines this plan builds.
        const Topology universe(base);
        std::vector<std::size_t> to_plan(base.edge_count(), std::numeric_limits<std::size_t>::max());
        for (std::size_t e = 0; e < base.edge_count(); ++e)
            if (auto idx = combined.grid.find_edge(base.edges()[e].id)) to_plan[e] = *idx;
        for (int i = 0; i < cfg.scenarios; ++i) {
            auto events = sample_outages(universe, cfg, scenario_seed(seed, "", static_cast<std::size_t>(i)));
            for (auto& ev : events) {
                std::vector<std::size_t> kept;
                for (std::size_t e : ev.edges)
                    if (to_plan[e] != std::numeric_limits<std::size_t>::max()) kept.push_back(to_plan[e]);
                ev.edges = std::move(kept);
            }
            risk.losses.push_back(loss_of_load(topo, events, cfg.hours_per_year));
        }
    }
    risk.cvar_kwh = compute_cvar(risk.losses, alpha);
    risk.mean_loss = std::accumulate(risk.losses.begin(), risk.losses.end(), 0.0) /
                     static_cast<double>(risk.losses.size());
    return risk;
}

std::vector<PlanRisk> evaluate_plans(const Grid& base, std::span<const ExpansionPlan> plans,
                                     const FailureConfig& cfg, double alpha, std::uint64_t seed)
{
    std::vector<PlanRisk> out;
    out.reserve(plans.size());
    for (const auto& plan : plans) out.push_back(evaluate_plan(base, plan, cfg, alpha, seed));
    return out;
}

std::vector<LabeledPlan> label_risks(std::span<const PlanRisk> risks, std::size_t scenarios,
                                     const BinningScheme& scheme)
{
    scheme.validate();
    std::vector<LabeledPlan> out;
    out.reserve(risks.size());
    for (const auto& r : risks)
        out.push_back({r.plan_id, r.cvar_kwh, r.mean_loss, scenarios, assign_class(r.cvar_kwh, scheme),
                       r.losses});
    return out;
}

std::vector<LabeledPlan> label_dataset(const Grid& base, std::span<const ExpansionPlan> plans,
                                       const FailureConfig& cfg, const BinningScheme& scheme,
                                       double alpha, std::uint64_t seed)
{
    const auto risks = evaluate_plans(base, plans, cfg, alpha, seed);
    return label_risks(risks, static_cast<std::size_t>(cfg.scenarios), scheme);
}

void write_labels_csv(std::ostream& out, std::span<const LabeledPlan> labels)
{
    out << "plan_id,cvar_kwh,label,mean_loss,scenario_count\n";
    for (const auto& l : labels)
        out << l.plan_id << ',' << format_double(l.cvar_kwh) << ',' << l.label << ','
            << format_double(l.mean_loss) << ',' << l.scenario_count << '\n';
}

std::vector<LabeledPlan> parse_labels_csv(std::string_view text, const std::string& context)
{
    const CsvTable table = parse_csv(text, context);
    const std::size_t id = table.column("plan_id");
    const std::size_t cvar = table.column("cvar_kwh");
    const std::size_t label = table.column("label");
    const std::size_t mean = table.column("mean_loss");
    const std::size_t count = table.column("scenario_count");
    std::vector<LabeledPlan> out;
    for (const auto& row : table.rows) {
        LabeledPlan l;
        l.plan_id = row[id];
        l.cvar_kwh = parse_double(row[cvar], context);
        l.label = static_cast<int>(parse_integer(row[label], context));
        l.mean_loss = parse_double(row[mean], context);
        l.scenario_count = static_cast<std::size_t>(parse_integer(row[count], context));
        out.push_back(std::move(l));
    }
    return out;
}

} // namespace gridres
