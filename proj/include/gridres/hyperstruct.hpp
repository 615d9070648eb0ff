#pragma once

#include "gridres/grid.hpp"
#include "gridres/matrix.hpp"

#include <cstddef>
#include <ostream>
#include <span>
#include <vector>

namespace gridres {

/// Binary incidence matrix stored column-wise: column j lists the member
/// rows (ascending) of hyperstructure j.
class Incidence {
public:
    Incidence() = default;
    Incidence(std::size_t rows, std::vector<std::vector<std::size_t>> columns);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return columns_.size(); }
    std::span<const std::size_t> members(std::size_t col) const { return columns_[col]; }
    bool contains(std::size_t row, std::size_t col) const;

    /// delta(h) = |h|
    std::size_t column_degree(std::size_t col) const { return columns_[col].size(); }

    Matrix to_dense() const;
    SparseMatrix to_sparse() const;

    bool operator==(const Incidence&) const = default;

private:
    std::size_t rows_ = 0;
    std::vector<std::vector<std::size_t>> columns_;
};

struct Hyperstructure {
    Incidence hyperedges;              ///< Q_E, nodes x hyperedges
    Incidence hypernodes;              ///< Q_V, edges x hypernodes
    std::vector<double> hyperedge_weights;
    std::vector<double> hypernode_weights;
    std::vector<std::size_t> hyperedge_seeds; ///< substation node per column
    std::vector<std::size_t> hypernode_seeds; ///< substation-incident edge per column
};

/// Indices of the k rows nearest to `seed` in Euclidean distance (seed
/// excluded), ties broken by ascending index.
std::vector<std::size_t> nearest_rows(const Matrix& points, std::size_t seed, std::size_t k);

/// One hyperedge per substation: the substation plus its k nearest nodes in
/// node-feature space.
Incidence build_hyperedges(const Topology& topo, const Matrix& node_features, std::size_t k);

/// Edge feature used for hypernode clustering: [X_V(lo) | X_V(hi)] with the
/// endpoints in ascending index order.
Matrix edge_endpoint_features(const Topology& topo, const Matrix& node_features);

/// One hypernode per substation-incident edge: the edge plus its k nearest
/// edges in concatenated endpoint-feature space.
Incidence build_hypernodes(const Topology& topo, const Matrix& node_features, std::size_t k);

Hyperstructure build_hyperstructure(const Topology& topo, const Matrix& node_features,
                                    std::size_t k = 10);

/// L = I - 1/2 D^{-1/2} Q W D_E^{-1} Q^T D^{-1/2}, with node degree
/// d(v) = sum_h w(h) q(v, h). Throws ZeroDegreeNode for uncovered nodes.
Matrix hypergraph_laplacian(const Incidence& incidence, std::span<const double> weights);

/// Sparse triplet CSV: header "row,col,value" and one line per nonzero.
void write_incidence_csv(std::ostream& out, const Incidence& incidence);
Incidence parse_incidence_csv(std::string_view text, std::size_t rows, const std::string& context);

} // namespace gridres
