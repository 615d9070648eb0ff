#pragma once

#include "gridres/grid.hpp"
#include "gridres/matrix.hpp"

#include <cstddef>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace gridres {

/// Limits on simple-path enumeration between a load and a substation.
struct PathCaps {
    static constexpr std::size_t unlimited = std::numeric_limits<std::size_t>::max();

    std::size_t max_paths = 100;
    /// 0 means "number of nodes in the grid".
    std::size_t max_hops = 0;

    static PathCaps none() { return {unlimited, unlimited}; }
};

struct SimplePath {
    std::vector<std::size_t> nodes; ///< load first, substation last
    std::vector<std::size_t> edges;
    double weight = 0.0;            ///< sum of edge weights, accumulated load -> substation

    std::size_t hops() const { return edges.size(); }
};

/// Total order used to sort paths: weighted length, then hop count, then the
/// node-index sequence. The last two keys only matter for exact weight ties.
bool path_precedes(const SimplePath& a, const SimplePath& b);

/// The `caps.max_paths` lightest simple paths from `load` to `substation`
/// (each at most `caps.max_hops` edges), sorted by path_precedes. Pairs in
/// different components yield an empty list.
std::vector<SimplePath> simple_paths(const Topology& topo, std::size_t load, std::size_t substation,
                                     const PathCaps& caps = {});
std::vector<SimplePath> simple_paths(const Grid& grid, std::string_view load,
                                     std::string_view substation, const PathCaps& caps = {});

/// Per-path uniqueness scores for an already sorted path list:
/// score_k = 1 - |E(p_k) & U_{k-1}| / |E(p_k)|, U_{k-1} = union of earlier edge sets.
std::vector<double> uniqueness_scores(std::span<const SimplePath> sorted_paths,
                                      std::size_t edge_count);

/// Sum of uniqueness scores divided by the total hop length of the paths;
/// 0 when the pair is disconnected.
double u_score(std::span<const SimplePath> sorted_paths, std::size_t edge_count);
double u_score(const Topology& topo, std::size_t load, std::size_t substation,
               const PathCaps& caps = {});

/// U-scores for every (load, substation) pair: rows follow topo.loads(),
/// columns follow topo.substations().
Matrix u_score_table(const Topology& topo, const PathCaps& caps = {});

/// Sum of all load/substation U-scores. Higher means more route diversity.
double u_score_summary(const Topology& topo, const PathCaps& caps = {});

/// Node betweenness over shortest weighted paths; each unordered pair
/// contributes once, split evenly among equal-cost shortest paths. Assumes
/// strictly positive weights on any edge lying on a shortest path.
std::vector<double> betweenness(const Topology& topo);

/// Single-source shortest weighted distances; unreachable nodes get +inf.
std::vector<double> shortest_distances(const Topology& topo, std::size_t source);

struct ClassicalMetrics {
    double average_path_length = 0.0; ///< over connected unordered pairs
    double diameter = 0.0;            ///< max shortest distance over connected pairs
    double average_betweenness = 0.0;
};

ClassicalMetrics classical_metrics(const Topology& topo);

/// Node feature matrix X_V with columns
/// [uscore_<substation>... | degree | betweenness]. U-score entries of
/// non-load rows are 0.
Matrix node_feature_matrix(const Topology& topo, const PathCaps& caps = {});
std::vector<std::string> node_feature_columns(const Grid& grid);

/// X_E: one row per edge, the cosine similarity of its endpoints' X_V rows.
/// A zero row has similarity 0 with anything.
Matrix edge_feature_matrix(const Topology& topo, const Matrix& node_features);

double cosine_similarity(std::span<const double> a, std::span<const double> b);

/// Pearson correlation of `metric` against 1 / `cvars`.
double metric_cvar_correlation(std::span<const double> metric, std::span<const double> cvars);
double pearson(std::span<const double> x, std::span<const double> y);

void write_node_features_csv(std::ostream& out, const Grid& grid, const Matrix& node_features);
void write_edge_features_csv(std::ostream& out, const Grid& grid, const Matrix& edge_features);

} // namespace gridres
