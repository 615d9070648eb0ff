#include "gridres/pipeline.hpp"

#include "gridres/csv.hpp"
#include "gridres/errors.hpp"
#include "gridres/training.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>
#include <sstream>

namespace gridres {

namespace fs = std::filesystem;
using nlohmann::json;

// ---- synthetic grids -------------------------------------------------------

GeneratorConfig GeneratorConfig::system(int which)
{
    GeneratorConfig c;
    if (which == 1) return c;
    if (which == 2) {
        c.substations = 2;
        c.nonload = 2;
        c.candidates = 20;
        return c;
    }
    throw ValidationError("system must be 1 or 2, got " + std::to_string(which));
}

void GeneratorConfig::validate() const
{
    if (nodes < 2) throw ValidationError("generator: need at least 2 nodes");
    if (substations < 1) throw ValidationError("generator: need at least one substation");
    if (nonload < 0 || candidates < 0) throw ValidationError("generator: counts must be nonnegative");
    if (substations + nonload >= nodes) throw ValidationError("generator: no nodes left for loads");
    if (!(min_demand >= 0.0 && max_demand >= min_demand)) throw ValidationError("generator: bad demand range");
    if (!(extent > 0.0)) throw ValidationError("generator: extent must be positive");
}

namespace {

std::string padded(char prefix, std::size_t value, std::size_t total)
{
    const std::size_t width = std::max<std::size_t>(2, std::to_string(total).size());
    std::string digits = std::to_string(value);
    return prefix + std::string(width - std::min(width, digits.size()), '0') + digits;
}

double round_to(double x, double unit)
{
    return std::round(x / unit) * unit;
}

} // namespace

Grid generate_grid(const GeneratorConfig& config, std::uint64_t seed)
{
    config.validate();
    Rng rng(seed);
    const auto n = static_cast<std::size_t>(config.nodes);
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = round_to(rng.uniform() * config.extent, 1e-3);
        y[i] = round_to(rng.uniform() * config.extent, 1e-3);
    }
    auto dist = [&](std::size_t a, std::size_t b) { return std::hypot(x[a] - x[b], y[a] - y[b]); };

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    const auto s = static_cast<std::size_t>(config.substations);
    const auto nl = static_cast<std::size_t>(config.nonload);

    std::vector<Node> nodes(n);
    for (std::size_t i = 0; i < n; ++i) {
        nodes[i].id = padded('b', i + 1, n);
        nodes[i].kind = NodeKind::Load;
        nodes[i].demand = round_to(config.min_demand + rng.uniform() * (config.max_demand - config.min_demand), 0.1);
    }
    for (std::size_t j = 0; j < s + nl; ++j) {
        Node& node = nodes[order[j]];
        node.kind = j < s ? NodeKind::Substation : NodeKind::NonLoad;
        node.demand = 0.0;
    }

    // Forest: substations are placed first, every other node hooks onto the
    // nearest node already placed.
    std::vector<std::size_t> placed(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(s));
    std::set<std::pair<std::size_t, std::size_t>> pairs;
    std::vector<Edge> edges;
    const std::size_t existing = n - s;
    for (std::size_t j = s; j < n; ++j) {
        const std::size_t v = order[j];
        std::size_t best = placed.front();
        for (std::size_t u : placed)
            if (dist(u, v) < dist(best, v) || (dist(u, v) == dist(best, v) && u < best)) best = u;
        placed.push_back(v);
        pairs.insert({std::min(best, v), std::max(best, v)});
        edges.push_back({padded('e', edges.size() + 1, existing), nodes[best].id, nodes[v].id,
                         round_to(dist(best, v), 1e-3), EdgeStatus::Existing});
    }

    // Candidates: drawn from the shortest non-adjacent pairs.
    std::vector<std::pair<std::size_t, std::size_t>> pool;
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = a + 1; b < n; ++b)
            if (!pairs.count({a, b})) pool.emplace_back(a, b);
    std::stable_sort(pool.begin(), pool.end(),
                     [&](const auto& p, const auto& q) { return dist(p.first, p.second) < dist(q.first, q.second); });
    const auto want = static_cast<std::size_t>(config.candidates);
    pool.resize(std::min(pool.size(), 4 * want));
    if (pool.size() < want) throw ValidationError("generator: not enough node pairs for the candidates");
    for (std::size_t i = 0; i < want; ++i) {
        std::swap(pool[i], pool[i + rng.below(pool.size() - i)]);
        const auto [a, b] = pool[i];
        edges.push_back({padded('c', i + 1, want), nodes[a].id, nodes[b].id, round_to(dist(a, b), 1e-3),
                         EdgeStatus::Candidate});
    }
    return Grid(std::move(nodes), std::move(edges));
}

// ---- per-plan features -----------------------------------------------------

PlanFeatures featurize_plan(const Grid& base, const ExpansionPlan& plan, const FeatureOptions& options)
{
    const CombinedGrid combined = combine_plan(base, plan);
    const Topology& topo = combined.topology;
    PlanFeatures f;
    f.plan_id = plan.plan_id;
    f.grid = combined.grid;
    f.node_features = node_feature_matrix(topo, options.caps);
    f.edge_features = edge_feature_matrix(topo, f.node_features);
    f.hyper = build_hyperstructure(topo, f.node_features, options.k);
    f.substations = topo.substations().size();
    return f;
}

namespace {

SparseMatrix adjacency_of(const Grid& grid)
{
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (const Edge& e : grid.edges()) pairs.emplace_back(*grid.find_node(e.u), *grid.find_node(e.v));
    return normalized_adjacency(grid.node_count(), pairs);
}

fs::path plan_file(const fs::path& dir, const std::string& plan_id, const char* suffix)
{
    return dir / (plan_id + suffix);
}

} // namespace

PlanSample make_sample(const PlanFeatures& features, int label, double target)
{
    PlanSample s;
    s.plan_id = features.plan_id;
    s.norm_adjacency = adjacency_of(features.grid);
    s.node_features = features.node_features;
    s.edge_features = features.edge_features;
    s.hyperedges = features.hyper.hyperedges.to_sparse();
    s.hypernodes = features.hyper.hypernodes.to_sparse();
    s.substations = features.substations;
    s.label = label;
    s.target = target;
    s.check();
    return s;
}

void write_feature_files(const fs::path& dir, const PlanFeatures& features)
{
    std::ostringstream nodes, edges;
    write_node_features_csv(nodes, features.grid, features.node_features);
    write_edge_features_csv(edges, features.grid, features.edge_features);
    write_text_file(plan_file(dir, features.plan_id, ".nodes.csv"), nodes.str());
    write_text_file(plan_file(dir, features.plan_id, ".edges.csv"), edges.str());
}

void write_hyperstructure_files(const fs::path& dir, const PlanFeatures& features)
{
    std::ostringstream qe, qv;
    write_incidence_csv(qe, features.hyper.hyperedges);
    write_incidence_csv(qv, features.hyper.hypernodes);
    write_text_file(plan_file(dir, features.plan_id, ".qe.csv"), qe.str());
    write_text_file(plan_file(dir, features.plan_id, ".qv.csv"), qv.str());
}

namespace {

struct NodeTable {
    std::vector<std::string> ids;
    Matrix features;
    std::size_t substations = 0;
};

NodeTable parse_node_table(const fs::path& path)
{
    const CsvTable table = read_csv(path);
    const std::string ctx = path.string();
    if (table.header.size() < 3 || table.header.front() != "node_id")
        throw ParseError(ctx + ": expected node_id followed by feature columns");
    NodeTable out;
    for (std::size_t c = 1; c < table.header.size(); ++c)
        if (table.header[c].rfind("uscore_", 0) == 0) ++out.substations;
    const std::size_t width = table.header.size() - 1;
    out.features = Matrix(table.rows.size(), width);
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        out.ids.push_back(table.rows[r][0]);
        for (std::size_t c = 0; c < width; ++c)
            out.features(r, c) = parse_double(table.rows[r][c + 1], ctx + " row " + std::to_string(r + 2));
    }
    return out;
}

} // namespace

Matrix read_node_features(const fs::path& dir, const Grid& combined, const std::string& plan_id)
{
    const fs::path path = plan_file(dir, plan_id, ".nodes.csv");
    NodeTable table = parse_node_table(path);
    if (table.ids.size() != combined.node_count())
        throw ParseError(path.string() + ": node count does not match the grid");
    for (std::size_t i = 0; i < table.ids.size(); ++i)
        if (table.ids[i] != combined.nodes()[i].id)
            throw ParseError(path.string() + ": row " + std::to_string(i + 2) + " is '" + table.ids[i] +
                             "', expected '" + combined.nodes()[i].id + "'");
    return std::move(table.features);
}

PlanSample read_sample(const fs::path& dir, const std::string& plan_id)
{
    const NodeTable nodes = parse_node_table(plan_file(dir, plan_id, ".nodes.csv"));
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < nodes.ids.size(); ++i) index[nodes.ids[i]] = i;

    const fs::path edge_path = plan_file(dir, plan_id, ".edges.csv");
    const CsvTable edges = read_csv(edge_path);
    const std::size_t fc = edges.column("from"), tc = edges.column("to"), cc = edges.column("cosine");
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    Matrix edge_features(edges.rows.size(), 1);
    for (std::size_t r = 0; r < edges.rows.size(); ++r) {
        const auto& row = edges.rows[r];
        auto u = index.find(row[fc]), v = index.find(row[tc]);
        if (u == index.end() || v == index.end())
            throw ParseError(edge_path.string() + " row " + std::to_string(r + 2) + ": unknown endpoint");
        pairs.emplace_back(u->second, v->second);
        edge_features(r, 0) = parse_double(row[cc], edge_path.string());
    }

    PlanSample s;
    s.plan_id = plan_id;
    s.norm_adjacency = normalized_adjacency(nodes.ids.size(), pairs);
    s.node_features = nodes.features;
    s.edge_features = std::move(edge_features);
    const fs::path qe = plan_file(dir, plan_id, ".qe.csv"), qv = plan_file(dir, plan_id, ".qv.csv");
    s.hyperedges = parse_incidence_csv(read_text_file(qe), nodes.ids.size(), qe.string()).to_sparse();
    s.hypernodes = parse_incidence_csv(read_text_file(qv), pairs.size(), qv.string()).to_sparse();
    s.substations = nodes.substations;
    s.check();
    return s;
}

std::vector<PlanSample> load_samples(const fs::path& dir, const std::vector<LabeledPlan>& labels)
{
    std::vector<PlanSample> out;
    out.reserve(labels.size());
    for (const LabeledPlan& l : labels) {
        PlanSample s = read_sample(dir, l.plan_id);
        s.label = l.label;
        s.target = l.cvar_kwh;
        out.push_back(std::move(s));
    }
    return out;
}

// ---- graph-metric report ---------------------------------------------------

MetricRow plan_metrics(const Grid& base, const ExpansionPlan& plan, const PathCaps& caps)
{
    const CombinedGrid combined = combine_plan(base, plan);
    const ClassicalMetrics m = classical_metrics(combined.topology);
    return {plan.plan_id, m.average_path_length, m.diameter, m.average_betweenness,
            u_score_summary(combined.topology, caps), 0.0};
}

MetricCorrelations correlate_metrics(const std::vector<MetricRow>& rows)
{
    std::vector<double> cvar, apl, diam, bc, us;
    for (const MetricRow& r : rows) {
        cvar.push_back(r.cvar_kwh);
        apl.push_back(r.apl);
        diam.push_back(r.diameter);
        bc.push_back(r.avg_betweenness);
        us.push_back(r.uscore_sum);
    }
    auto r_or_nan = [&](const std::vector<double>& metric) {
        try {
            return metric_cvar_correlation(metric, cvar);
        } catch (const DegenerateVariance&) {
            return std::numeric_limits<double>::quiet_NaN();
        }
    };
    return {r_or_nan(apl), r_or_nan(diam), r_or_nan(bc), r_or_nan(us)};
}

void write_report_csv(std::ostream& out, const std::vector<MetricRow>& rows)
{
    out << "plan_id,apl,diameter,avg_betweenness,uscore_sum,cvar_kwh\n";
    for (const MetricRow& r : rows)
        out << r.plan_id << ',' << format_double(r.apl) << ',' << format_double(r.diameter) << ','
            << format_double(r.avg_betweenness) << ',' << format_double(r.uscore_sum) << ','
            << format_double(r.cvar_kwh) << '\n';
}

void write_correlations_csv(std::ostream& out, const MetricCorrelations& r)
{
    auto text = [](double v) { return std::isnan(v) ? std::string("nan") : format_double(v); };
    out << "metric,pearson_r_inverse_cvar\n"
        << "apl," << text(r.apl) << '\n'
        << "diameter," << text(r.diameter) << '\n'
        << "avg_betweenness," << text(r.avg_betweenness) << '\n'
        << "uscore_sum," << text(r.uscore_sum) << '\n';
}

// ---- configuration ---------------------------------------------------------

BinningScheme PipelineConfig::binning_scheme(std::span<const double> cvars) const
{
    if (binning == "preset") return BinningScheme::preset(system, classes);
    if (binning == "quantile") return BinningScheme::quantile(cvars, classes);
    throw ValidationError("binning.mode must be preset or quantile, got '" + binning + "'");
}

void PipelineConfig::validate() const
{
    if (system != 1 && system != 2) throw ValidationError("system must be 1 or 2");
    generator.validate();
    failures.validate();
    if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("simulator.alpha must lie in (0, 1)");
    if (binning != "preset" && binning != "quantile")
        throw ValidationError("binning.mode must be preset or quantile");
    if (classes < 3 || classes > 5) throw ValidationError("binning.classes must lie in 3..5");
    if (features.k < 1) throw ValidationError("features.k must be at least 1");
    model.validate();
    if (model.task == Task::Classify && model.n_classes != classes)
        throw ValidationError("model class count differs from binning.classes");
    if (folds < 2) throw ValidationError("train.folds must be at least 2");
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ValidationError("train.test_fraction must lie in (0, 1)");
}

namespace {

std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::string unquote(std::string_view raw)
{
    std::string v = trim(raw);
    if (v.size() >= 2 && v.front() == '"' && v.back() == '"') return v.substr(1, v.size() - 2);
    return v;
}

bool parse_bool(const std::string& v, const std::string& key)
{
    if (v == "true") return true;
    if (v == "false") return false;
    throw ParseError("config key '" + key + "': expected true or false, got '" + v + "'");
}

int parse_int(const std::string& v, const std::string& key)
{
    const long long x = parse_integer(v, "config key '" + key + "'");
    if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max())
        throw ParseError("config key '" + key + "': value out of range");
    return static_cast<int>(x);
}

std::size_t parse_count(const std::string& v, const std::string& key)
{
    const long long x = parse_integer(v, "config key '" + key + "'");
    if (x < 0) throw ParseError("config key '" + key + "': must be nonnegative");
    return static_cast<std::size_t>(x);
}

std::uint64_t parse_seed(const std::string& v, const std::string& key)
{
    std::uint64_t out = 0;
    if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos)
        throw ParseError("config key '" + key + "': expected an unsigned integer, got '" + v + "'");
    try {
        out = std::stoull(v);
    } catch (const std::exception&) {
        throw ParseError("config key '" + key + "': value out of range");
    }
    return out;
}

ModelConfig model_preset(const std::string& name)
{
    if (name == "system1_classification") return ModelConfig::system1_classification();
    if (name == "system2_classification") return ModelConfig::system2_classification();
    if (name == "system1_regression") return ModelConfig::system1_regression();
    if (name == "system2_regression") return ModelConfig::system2_regression();
    throw ParseError("unknown model preset '" + name + "'");
}

} // namespace

void set_config_value(PipelineConfig& c, std::string_view key_view, std::string_view raw)
{
    const std::string key(key_view);
    const std::string v = unquote(raw);
    auto num = [&] { return parse_double(v, "config key '" + key + "'"); };

    if (key == "seed") c.seed = parse_seed(v, key);
    else if (key == "system") {
        c.system = parse_int(v, key);
        c.generator = GeneratorConfig::system(c.system);
        const Task task = c.model.task;
        const Ablation ablation = c.model.ablation;
        c.model = c.system == 1 ? (task == Task::Classify ? ModelConfig::system1_classification()
                                                          : ModelConfig::system1_regression())
                                : (task == Task::Classify ? ModelConfig::system2_classification()
                                                          : ModelConfig::system2_regression());
        c.model.ablation = ablation;
        c.model.n_classes = c.classes;
    }
    else if (key == "paths.grid") c.grid_path = v;
    else if (key == "paths.plans") c.plans_path = v;
    else if (key == "paths.labels") c.labels_path = v;
    else if (key == "paths.features") c.features_dir = v;
    else if (key == "paths.checkpoint") c.checkpoint_dir = v;
    else if (key == "generator.nodes") c.generator.nodes = parse_int(v, key);
    else if (key == "generator.substations") c.generator.substations = parse_int(v, key);
    else if (key == "generator.nonload") c.generator.nonload = parse_int(v, key);
    else if (key == "generator.candidates") c.generator.candidates = parse_int(v, key);
    else if (key == "generator.min_demand") c.generator.min_demand = num();
    else if (key == "generator.max_demand") c.generator.max_demand = num();
    else if (key == "generator.extent") c.generator.extent = num();
    else if (key == "plans.count") c.plan_count = parse_count(v, key);
    else if (key == "simulator.routine_rate") c.failures.routine_rate = num();
    else if (key == "simulator.hilp_rate") c.failures.hilp_rate = num();
    else if (key == "simulator.routine_repair_hours") c.failures.routine_repair_hours = parse_int(v, key);
    else if (key == "simulator.hilp_repair_hours") c.failures.hilp_repair_hours = parse_int(v, key);
    else if (key == "simulator.hilp_min_lines") c.failures.hilp_min_lines = parse_int(v, key);
    else if (key == "simulator.hilp_max_lines") c.failures.hilp_max_lines = parse_int(v, key);
    else if (key == "simulator.hours_per_year") c.failures.hours_per_year = parse_int(v, key);
    else if (key == "simulator.scenarios") c.failures.scenarios = parse_int(v, key);
    else if (key == "simulator.routine_per_line") c.failures.routine_per_line = parse_bool(v, key);
    else if (key == "simulator.common_draws") c.failures.common_draws = parse_bool(v, key);
    else if (key == "simulator.alpha") c.alpha = num();
    else if (key == "binning.mode") c.binning = v;
    else if (key == "binning.classes") {
        c.classes = parse_int(v, key);
        c.model.n_classes = c.classes;
    }
    else if (key == "features.k") c.features.k = parse_count(v, key);
    else if (key == "features.max_paths") c.features.caps.max_paths = parse_count(v, key);
    else if (key == "features.max_hops") c.features.caps.max_hops = parse_count(v, key);
    else if (key == "model.preset") {
        const Ablation ablation = c.model.ablation;
        c.model = model_preset(v);
        c.model.ablation = ablation;
        c.model.n_classes = c.classes;
    }
    else if (key == "model.layers") c.model.layers = parse_int(v, key);
    else if (key == "model.hidden_dim") c.model.hidden_dim = parse_int(v, key);
    else if (key == "model.mlp_blocks") c.model.mlp_blocks = parse_int(v, key);
    else if (key == "model.d_out") c.model.d_out = parse_int(v, key);
    else if (key == "model.lr") c.model.lr = num();
    else if (key == "model.dropout") c.model.dropout = num();
    else if (key == "model.batch_size") c.model.batch_size = parse_int(v, key);
    else if (key == "model.epochs") c.model.epochs = parse_int(v, key);
    else if (key == "model.task") c.model.task = parse_task(v);
    else if (key == "model.no_uscores") c.model.ablation.no_uscores = parse_bool(v, key);
    else if (key == "model.no_hyperedge") c.model.ablation.no_hyperedge = parse_bool(v, key);
    else if (key == "model.no_hypernode") c.model.ablation.no_hypernode = parse_bool(v, key);
    else if (key == "model.no_attention") c.model.ablation.no_attention = parse_bool(v, key);
    else if (key == "train.folds") c.folds = parse_count(v, key);
    else if (key == "train.test_fraction") c.test_fraction = num();
    else throw ParseError("unknown config key '" + key + "'");
}

PipelineConfig parse_config(std::string_view text, const std::string& context)
{
    PipelineConfig c;
    std::string section;
    std::size_t line_no = 0;
    std::istringstream in{std::string(text)};
    for (std::string line; std::getline(in, line);) {
        ++line_no;
        const std::string where = context + ":" + std::to_string(line_no);
        // Strip comments outside quotes.
        bool quoted = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (line[i] == '"') quoted = !quoted;
            if (line[i] == '#' && !quoted) {
                line.resize(i);
                break;
            }
        }
        const std::string t = trim(line);
        if (t.empty()) continue;
        if (t.front() == '[') {
            if (t.back() != ']') throw ParseError(where + ": unterminated section header");
            section = trim(std::string_view(t).substr(1, t.size() - 2));
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos) throw ParseError(where + ": expected key = value");
        const std::string key = trim(std::string_view(t).substr(0, eq));
        const std::string value = trim(std::string_view(t).substr(eq + 1));
        if (key.empty() || value.empty()) throw ParseError(where + ": expected key = value");
        try {
            set_config_value(c, section.empty() ? key : section + "." + key, value);
        } catch (const ValidationError& err) {
            throw ParseError(where + ": " + err.what());
        }
    }
    return c;
}

PipelineConfig load_config(const fs::path& path)
{
    return parse_config(read_text_file(path), path.string());
}

std::string render_config(const PipelineConfig& c)
{
    auto b = [](bool v) { return v ? "true" : "false"; };
    auto q = [](const std::string& s) { return "\"" + s + "\""; };
    std::ostringstream o;
    o << "seed = " << c.seed << "\n"
      << "system = " << c.system << "\n\n"
      << "[paths]\n"
      << "grid = " << q(c.grid_path) << "\n"
      << "plans = " << q(c.plans_path) << "\n"
      << "labels = " << q(c.labels_path) << "\n"
      << "features = " << q(c.features_dir) << "\n"
      << "checkpoint = " << q(c.checkpoint_dir) << "\n\n"
      << "[generator]\n"
      << "nodes = " << c.generator.nodes << "\n"
      << "substations = " << c.generator.substations << "\n"
      << "nonload = " << c.generator.nonload << "\n"
      << "candidates = " << c.generator.candidates << "\n"
      << "min_demand = " << format_double(c.generator.min_demand) << "\n"
      << "max_demand = " << format_double(c.generator.max_demand) << "\n"
      << "extent = " << format_double(c.generator.extent) << "\n\n"
      << "[plans]\n"
      << "count = " << c.plan_count << "\n\n"
      << "[simulator]\n"
      << "routine_rate = " << format_double(c.failures.routine_rate) << "\n"
      << "hilp_rate = " << format_double(c.failures.hilp_rate) << "\n"
      << "routine_repair_hours = " << c.failures.routine_repair_hours << "\n"
      << "hilp_repair_hours = " << c.failures.hilp_repair_hours << "\n"
      << "hilp_min_lines = " << c.failures.hilp_min_lines << "\n"
      << "hilp_max_lines = " << c.failures.hilp_max_lines << "\n"
      << "hours_per_year = " << c.failures.hours_per_year << "\n"
      << "scenarios = " << c.failures.scenarios << "\n"
      << "routine_per_line = " << b(c.failures.routine_per_line) << "\n"
      << "common_draws = " << b(c.failures.common_draws) << "\n"
      << "alpha = " << format_double(c.alpha) << "\n\n"
      << "[binning]\n"
      << "mode = " << q(c.binning) << "\n"
      << "classes = " << c.classes << "\n\n"
      << "[features]\n"
      << "k = " << c.features.k << "\n"
      << "max_paths = " << c.features.caps.max_paths << "\n"
      << "max_hops = " << c.features.caps.max_hops << "\n\n"
      << "[model]\n"
      << "layers = " << c.model.layers << "\n"
      << "hidden_dim = " << c.model.hidden_dim << "\n"
      << "mlp_blocks = " << c.model.mlp_blocks << "\n"
      << "d_out = " << c.model.d_out << "\n"
      << "lr = " << format_double(c.model.lr) << "\n"
      << "dropout = " << format_double(c.model.dropout) << "\n"
      << "batch_size = " << c.model.batch_size << "\n"
      << "epochs = " << c.model.epochs << "\n"
      << "task = " << q(to_string(c.model.task)) << "\n"
      << "no_uscores = " << b(c.model.ablation.no_uscores) << "\n"
      << "no_hyperedge = " << b(c.model.ablation.no_hyperedge) << "\n"
      << "no_hypernode = " << b(c.model.ablation.no_hypernode) << "\n"
      << "no_attention = " << b(c.model.ablation.no_attention) << "\n\n"
      << "[train]\n"
      << "folds = " << c.folds << "\n"
      << "test_fraction = " << format_double(c.test_fraction) << "\n";
    return o.str();
}

std::uint64_t config_hash(const PipelineConfig& config)
{
    return hash_text(render_config(config));
}

// ---- manifests -------------------------------------------------------------

std::string hex64(std::uint64_t value)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
    return buf;
}

std::string file_hash(const fs::path& path)
{
    return hex64(hash_text(read_text_file(path)));
}

void write_manifest(const fs::path& path, const Manifest& m)
{
    json doc;
    doc["command"] = m.command;
    doc["gridres_version"] = std::string(kVersion);
    doc["seed"] = m.seed;
    doc["config_hash"] = m.config_hash;
    doc["config"] = m.config_text;
    doc["inputs"] = m.inputs;
    doc["outputs"] = m.outputs;
    write_text_file(path, doc.dump(2) + "\n");
}

std::vector<std::pair<std::string, Ablation>> ablation_variants()
{
    return {{"full", Ablation{}},
            {"no_uscores", Ablation{true, false, false, false}},
            {"no_hyperedge", Ablation{false, true, false, false}},
            {"no_hypernode", Ablation{false, false, true, false}},
            {"no_attention", Ablation{false, false, false, true}},
            {"plain_gcn", Ablation::plain_gcn()}};
}

} // namespace gridres
