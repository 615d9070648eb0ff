#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gridres {

enum class NodeKind { Substation, Load, NonLoad };
enum class EdgeStatus { Existing, Candidate };

std::string_view to_string(NodeKind kind);
std::string_view to_string(EdgeStatus status);
std::optional<NodeKind> parse_node_kind(std::string_view token);
std::optional<EdgeStatus> parse_edge_status(std::string_view token);

struct Node {
    std::string id;
    NodeKind kind = NodeKind::Load;
    double demand = 0.0; ///< hourly demand, kWh/h

    bool operator==(const Node&) const = default;
};

struct Edge {
    std::string id;
    std::string u;
    std::string v;
    double weight = 1.0;
    EdgeStatus status = EdgeStatus::Existing;

    bool operator==(const Edge&) const = default;
};

/// Undirected distribution grid. Nodes and edges are stored sorted by id;
/// that lexicographic order is the row order of every matrix derived from
/// the grid. Construction does not validate; see validate_grid().
class Grid {
public:
    Grid() = default;
    Grid(std::vector<Node> nodes, std::vector<Edge> edges);

    std::span<const Node> nodes() const { return nodes_; }
    std::span<const Edge> edges() const { return edges_; }
    std::size_t node_count() const { return nodes_.size(); }
    std::size_t edge_count() const { return edges_.size(); }

    std::optional<std::size_t> find_node(std::string_view id) const;
    std::optional<std::size_t> find_edge(std::string_view id) const;

    std::size_t count_edges(EdgeStatus status) const;

    bool operator==(const Grid& other) const
    {
        return nodes_ == other.nodes_ && edges_ == other.edges_;
    }

private:
    std::vector<Node> nodes_;
    std::vector<Edge> edges_;
};

struct ExpansionPlan {
    std::string plan_id;
    std::vector<std::string> edge_ids; ///< selected candidate edges

    bool operator==(const ExpansionPlan&) const = default;
};

/// Index-based adjacency view of a grid whose endpoints all resolve.
class Topology {
public:
    struct Link {
        std::size_t u;
        std::size_t v;
        double weight;
    };
    struct Incidence {
        std::size_t neighbor;
        std::size_t edge;
    };

    /// Throws ValidationError when an edge endpoint is missing.
    explicit Topology(const Grid& grid);

    std::size_t node_count() const { return kinds_.size(); }
    std::size_t edge_count() const { return links_.size(); }

    const Link& link(std::size_t e) const { return links_[e]; }
    std::span<const Link> links() const { return links_; }
    std::span<const Incidence> incident(std::size_t node) const { return adjacency_[node]; }
    std::size_t degree(std::size_t node) const { return adjacency_[node].size(); }

    NodeKind kind(std::size_t node) const { return kinds_[node]; }
    double demand(std::size_t node) const { return demands_[node]; }

    /// Substation / load indices in ascending (canonical) order.
    std::span<const std::size_t> substations() const { return substations_; }
    std::span<const std::size_t> loads() const { return loads_; }

private:
    std::vector<Link> links_;
    std::vector<std::vector<Incidence>> adjacency_;
    std::vector<NodeKind> kinds_;
    std::vector<double> demands_;
    std::vector<std::size_t> substations_;
    std::vector<std::size_t> loads_;
};

/// Existing edges plus the plan's selected candidates, all marked Existing.
struct CombinedGrid {
    std::string plan_id;
    Grid grid;
    Topology topology;

    explicit CombinedGrid(std::string id, Grid g)
        : plan_id(std::move(id)), grid(std::move(g)), topology(grid) {}
};

CombinedGrid combine_plan(const Grid& base, const ExpansionPlan& plan);

/// Throws UnknownCandidateId or DuplicateSelection.
void check_plan(const Grid& base, const ExpansionPlan& plan);

struct ValidationReport {
    std::vector<std::string> violations;
    bool ok() const { return violations.empty(); }
};

ValidationReport validate_grid(const Grid& grid);

Grid load_grid(const std::filesystem::path& path);
void save_grid(const Grid& grid, const std::filesystem::path& path);
Grid grid_from_json_text(std::string_view text);
std::string grid_to_json_text(const Grid& grid);

/// Plans file: a JSON object mapping plan id to an array of edge ids.
std::vector<ExpansionPlan> load_plans(const std::filesystem::path& path);
void save_plans(const std::vector<ExpansionPlan>& plans, const std::filesystem::path& path);
std::vector<ExpansionPlan> plans_from_json_text(std::string_view text);
std::string plans_to_json_text(const std::vector<ExpansionPlan>& plans);

} // namespace gridres
