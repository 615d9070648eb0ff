#include "gridres/grid.hpp"

#include "gridres/csv.hpp"
#include "gridres/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <utility>

namespace gridres {

using nlohmann::json;

std::string_view to_string(NodeKind kind)
{
    switch (kind) {
    case NodeKind::Substation: return "substation";
    case NodeKind::Load: return "load";
    case NodeKind::NonLoad: return "nonload";
    }
    return "?";
}

std::string_view to_string(EdgeStatus status)
{
    return status == EdgeStatus::Existing ? "existing" : "candidate";
}

std::optional<NodeKind> parse_node_kind(std::string_view token)
{
    if (token == "substation") return NodeKind::Substation;
    if (token == "load") return NodeKind::Load;
    if (token == "nonload") return NodeKind::NonLoad;
    return std::nullopt;
}

std::optional<EdgeStatus> parse_edge_status(std::string_view token)
{
    if (token == "existing") return EdgeStatus::Existing;
    if (token == "candidate") return EdgeStatus::Candidate;
    return std::nullopt;
}

Grid::Grid(std::vector<Node> nodes, std::vector<Edge> edges)
    : nodes_(std::move(nodes)), edges_(std::move(edges))
{
    std::stable_sort(nodes_.begin(), nodes_.end(),
                     [](const Node& a, const Node& b) { return a.id < b.id; });
    std::stable_sort(edges_.begin(), edges_.end(),
                     [](const Edge& a, const Edge& b) { return a.id < b.id; });
}

std::optional<std::size_t> Grid::find_node(std::string_view id) const
{
    auto it = std::lower_bound(nodes_.begin(), nodes_.end(), id,
                               [](const Node& n, std::string_view key) { return n.id < key; });
    if (it == nodes_.end() || it->id != id) return std::nullopt;
    return static_cast<std::size_t>(it - nodes_.begin());
}

std::optional<std::size_t> Grid::find_edge(std::string_view id) const
{
    auto it = std::lower_bound(edges_.begin(), edges_.end(), id,
                               [](const Edge& e, std::string_view key) { return e.id < key; });
    if (it == edges_.end() || it->id != id) return std::nullopt;
    return static_cast<std::size_t>(it - edges_.begin());
}

std::size_t Grid::count_edges(EdgeStatus status) const
{
    return static_cast<std::size_t>(std::count_if(
        edges_.begin(), edges_.end(), [&](const Edge& e) { return e.status == status; }));
}

Topology::Topology(const Grid& grid)
{
    const std::size_t n = grid.node_count();
    kinds_.reserve(n);
    demands_.reserve(n);
    adjacency_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Node& node = grid.nodes()[i];
        kinds_.push_back(node.kind);
        demands_.push_back(node.kind == NodeKind::Load ? node.demand : 0.0);
        if (node.kind == NodeKind::Substation) substations_.push_back(i);
        if (node.kind == NodeKind::Load) loads_.push_back(i);
    }
    links_.reserve(grid.edge_count());
    for (const Edge& edge : grid.edges()) {
        auto u = grid.find_node(edge.u);
        auto v = grid.find_node(edge.v);
        if (!u || !v) {
            throw ValidationError("edge '" + edge.id + "' references unknown node '" +
                                  (u ? edge.v : edge.u) + "'");
        }
        const std::size_t e = links_.size();
        links_.push_back({*u, *v, edge.weight});
        adjacency_[*u].push_back({*v, e});
        if (*u != *v) adjacency_[*v].push_back({*u, e});
    }
}

void check_plan(const Grid& base, const ExpansionPlan& plan)
{
    std::set<std::string_view> seen;
    for (const auto& id : plan.edge_ids) {
        auto e = base.find_edge(id);
        if (!e || base.edges()[*e].status != EdgeStatus::Candidate) throw UnknownCandidateId(id);
        if (!seen.insert(id).second) throw DuplicateSelection(id);
    }
}

CombinedGrid combine_plan(const Grid& base, const ExpansionPlan& plan)
{
    check_plan(base, plan);
    std::set<std::string_view> selected(plan.edge_ids.begin(), plan.edge_ids.end());
    std::vector<Edge> edges;
    edges.reserve(base.count_edges(EdgeStatus::Existing) + selected.size());
    for (const Edge& edge : base.edges()) {
        if (edge.status == EdgeStatus::Existing || selected.count(edge.id)) {
            Edge active = edge;
            active.status = EdgeStatus::Existing;
            edges.push_back(std::move(active));
        }
    }
    std::vector<Node> nodes(base.nodes().begin(), base.nodes().end());
    return CombinedGrid(plan.plan_id, Grid(std::move(nodes), std::move(edges)));
}

ValidationReport validate_grid(const Grid& grid)
{
    ValidationReport report;
    auto& out = report.violations;

    std::set<std::string_view> node_ids;
    std::size_t substations = 0;
    for (const Node& node : grid.nodes()) {
        if (!node_ids.insert(node.id).second) out.push_back("duplicate node id '" + node.id + "'");
        if (node.kind == NodeKind::Substation) ++substations;
        if (node.kind == NodeKind::Load && !(node.demand >= 0.0 && std::isfinite(node.demand)))
            out.push_back("negative demand at node '" + node.id + "'");
    }
    if (substations == 0) out.push_back("no substation");

    std::set<std::string_view> edge_ids;
    std::set<std::pair<std::string_view, std::string_view>> pairs;
    std::set<std::string_view> touched;
    for (const Edge& edge : grid.edges()) {
        if (!edge_ids.insert(edge.id).second) out.push_back("duplicate edge id '" + edge.id + "'");
        if (!(edge.weight >= 0.0) || !std::isfinite(edge.weight))
            out.push_back("negative weight on edge '" + edge.id + "'");
        if (edge.u == edge.v) out.push_back("self-loop on edge '" + edge.id + "'");
        for (const auto* end : {&edge.u, &edge.v}) {
            if (!grid.find_node(*end))
                out.push_back("edge '" + edge.id + "' references unknown node '" + *end + "'");
        }
        const std::string_view a = edge.u, b = edge.v;
        const auto key = a < b ? std::pair{a, b} : std::pair{b, a};
        if (edge.u != edge.v && !pairs.insert(key).second)
            out.push_back("duplicate edge between '" + edge.u + "' and '" + edge.v + "'");
        touched.insert(edge.u);
        touched.insert(edge.v);
    }
    for (const Node& node : grid.nodes()) {
        if (node.kind == NodeKind::Substation && !touched.count(node.id))
            out.push_back("isolated substation '" + node.id + "'");
    }
    return report;
}

// ---------------------------------------------------------------------------
// JSON serialization

namespace {

std::size_t line_of_offset(std::string_view text, std::size_t offset)
{
    offset = std::min(offset, text.size());
    return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + offset, '\n'));
}

json parse_document(std::string_view text, std::string_view what)
{
    try {
        return json::parse(text.begin(), text.end());
    } catch (const json::parse_error& err) {
        std::ostringstream msg;
        msg << what << ": line " << line_of_offset(text, err.byte) << ": " << err.what();
        throw ParseError(msg.str());
    }
}

const json& require(const json& obj, const char* field, const std::string& context)
{
    if (!obj.is_object() || !obj.contains(field))
        throw ParseError(context + ": missing field '" + field + "'");
    return obj.at(field);
}

std::string require_string(const json& obj, const char* field, const std::string& context)
{
    const json& value = require(obj, field, context);
    if (!value.is_string()) throw ParseError(context + ": field '" + field + "' must be a string");
    return value.get<std::string>();
}

double require_number(const json& value, const char* field, const std::string& context)
{
    if (!value.is_number()) throw ParseError(context + ": field '" + field + "' must be a number");
    return value.get<double>();
}

} // namespace

Grid grid_from_json_text(std::string_view text)
{
    const json doc = parse_document(text, "grid");
    const json& nodes_json = require(doc, "nodes", "grid");
    const json& edges_json = require(doc, "edges", "grid");
    if (!nodes_json.is_array() || !edges_json.is_array())
        throw ParseError("grid: 'nodes' and 'edges' must be arrays");

    std::vector<Node> nodes;
    for (std::size_t i = 0; i < nodes_json.size(); ++i) {
        const json& item = nodes_json[i];
        const std::string ctx = "nodes[" + std::to_string(i) + "]";
        Node node;
        node.id = require_string(item, "id", ctx);
        const std::string kind = require_string(item, "kind", ctx);
        auto parsed = parse_node_kind(kind);
        if (!parsed) throw ParseError(ctx + ": unknown node kind '" + kind + "'");
        node.kind = *parsed;
        if (item.contains("demand"))
            node.demand = require_number(item.at("demand"), "demand", ctx);
        else
            node.demand = node.kind == NodeKind::Load ? 1.0 : 0.0;
        nodes.push_back(std::move(node));
    }

    std::vector<Edge> edges;
    for (std::size_t i = 0; i < edges_json.size(); ++i) {
        const json& item = edges_json[i];
        const std::string ctx = "edges[" + std::to_string(i) + "]";
        Edge edge;
        edge.id = require_string(item, "id", ctx);
        edge.u = require_string(item, "from", ctx);
        edge.v = require_string(item, "to", ctx);
        edge.weight = require_number(require(item, "weight", ctx), "weight", ctx);
        if (item.contains("status")) {
            const std::string status = require_string(item, "status", ctx);
            auto parsed = parse_edge_status(status);
            if (!parsed) throw ParseError(ctx + ": unknown edge status '" + status + "'");
            edge.status = *parsed;
        }
        edges.push_back(std::move(edge));
    }
    return Grid(std::move(nodes), std::move(edges));
}

std::string grid_to_json_text(const Grid& grid)
{
    json doc;
    doc["nodes"] = json::array();
    for (const Node& node : grid.nodes()) {
        doc["nodes"].push_back(
            {{"id", node.id}, {"kind", std::string(to_string(node.kind))}, {"demand", node.demand}});
    }
    doc["edges"] = json::array();
    for (const Edge& edge : grid.edges()) {
        doc["edges"].push_back({{"id", edge.id},
                                {"from", edge.u},
                                {"to", edge.v},
                                {"weight", edge.weight},
                                {"status", std::string(to_string(edge.status))}});
    }
    return doc.dump(2) + "\n";
}

Grid load_grid(const std::filesystem::path& path)
{
    return grid_from_json_text(read_text_file(path));
}

void save_grid(const Grid& grid, const std::filesystem::path& path)
{
    write_text_file(path, grid_to_json_text(grid));
}

std::vector<ExpansionPlan> plans_from_json_text(std::string_view text)
{
    const json doc = parse_document(text, "plans");
    if (!doc.is_object()) throw ParseError("plans: expected an object of plan id -> edge id array");
    std::vector<ExpansionPlan> plans;
    for (const auto& [id, edges] : doc.items()) {
        if (!edges.is_array()) throw ParseError("plans['" + id + "']: expected an array of edge ids");
        ExpansionPlan plan{id, {}};
        for (const json& e : edges) {
            if (!e.is_string()) throw ParseError("plans['" + id + "']: edge ids must be strings");
            plan.edge_ids.push_back(e.get<std::string>());
        }
        plans.push_back(std::move(plan));
    }
    return plans;
}

std::string plans_to_json_text(const std::vector<ExpansionPlan>& plans)
{
    json doc = json::object();
    for (const auto& plan : plans) doc[plan.plan_id] = plan.edge_ids;
    return doc.dump(2) + "\n";
}

std::vector<ExpansionPlan> load_plans(const std::filesystem::path& path)
{
    return plans_from_json_text(read_text_file(path));
}

void save_plans(const std::vector<ExpansionPlan>& plans, const std::filesystem::path& path)
{
    write_text_file(path, plans_to_json_text(plans));
}

} // namespace gridres
