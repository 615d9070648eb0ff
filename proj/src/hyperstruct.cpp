#include "gridres/hyperstruct.hpp"

#include "gridres/csv.hpp"
#include "gridres/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace gridres {

Incidence::Incidence(std::size_t rows, std::vector<std::vector<std::size_t>> columns)
    : rows_(rows), columns_(std::move(columns))
{
    for (auto& col : columns_) {
        std::sort(col.begin(), col.end());
        col.erase(std::unique(col.begin(), col.end()), col.end());
        if (!col.empty() && col.back() >= rows_)
            throw ShapeMismatch("incidence member out of range");
    }
}

bool Incidence::contains(std::size_t row, std::size_t col) const
{
    const auto& members = columns_[col];
    return std::binary_search(members.begin(), members.end(), row);
}

Matrix Incidence::to_dense() const
{
    Matrix q(rows_, columns_.size());
    for (std::size_t c = 0; c < columns_.size(); ++c)
        for (std::size_t r : columns_[c]) q(r, c) = 1.0;
    return q;
}

SparseMatrix Incidence::to_sparse() const
{
    std::vector<SparseMatrix::Entry> entries;
    for (std::size_t c = 0; c < columns_.size(); ++c)
        for (std::size_t r : columns_[c]) entries.push_back({r, c, 1.0});
    return SparseMatrix(rows_, columns_.size(), std::move(entries));
}

std::vector<std::size_t> nearest_rows(const Matrix& points, std::size_t seed, std::size_t k)
{
    std::vector<std::pair<double, std::size_t>> ranked;
    ranked.reserve(points.rows());
    const auto origin = points.row(seed);
    for (std::size_t r = 0; r < points.rows(); ++r) {
        if (r == seed) continue;
        double d2 = 0.0;
        const auto row = points.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) d2 += (row[c] - origin[c]) * (row[c] - origin[c]);
        ranked.push_back({d2, r});
    }
    const std::size_t take = std::min(k, ranked.size());
    std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(take), ranked.end());
    std::vector<std::size_t> out;
    out.reserve(take);
    for (std::size_t i = 0; i < take; ++i) out.push_back(ranked[i].second);
    return out;
}

Incidence build_hyperedges(const Topology& topo, const Matrix& node_features, std::size_t k)
{
    if (k == 0) throw ValidationError("hyperedges: k must be at least 1");
    if (node_features.rows() != topo.node_count())
        throw ShapeMismatch("hyperedges: feature rows do not match the grid");
    std::vector<std::vector<std::size_t>> columns;
    for (std::size_t s : topo.substations()) {
        auto members = nearest_rows(node_features, s, k);
        members.push_back(s);
        columns.push_back(std::move(members));
    }
    return Incidence(topo.node_count(), std::move(columns));
}

Matrix edge_endpoint_features(const Topology& topo, const Matrix& node_features)
{
    const std::size_t c = node_features.cols();
    Matrix out(topo.edge_count(), 2 * c);
    for (std::size_t e = 0; e < topo.edge_count(); ++e) {
        const auto& link = topo.link(e);
        const std::size_t lo = std::min(link.u, link.v);
        const std::size_t hi = std::max(link.u, link.v);
        auto row = out.row(e);
        std::copy_n(node_features.row(lo).begin(), c, row.begin());
        std::copy_n(node_features.row(hi).begin(), c, row.begin() + static_cast<std::ptrdiff_t>(c));
    }
    return out;
}

Incidence build_hypernodes(const Topology& topo, const Matrix& node_features, std::size_t k)
{
    if (k == 0) throw ValidationError("hypernodes: k must be at least 1");
    if (node_features.rows() != topo.node_count())
        throw ShapeMismatch("hypernodes: feature rows do not match the grid");
    const Matrix concat = edge_endpoint_features(topo, node_features);
    std::vector<std::vector<std::size_t>> columns;
    for (std::size_t e = 0; e < topo.edge_count(); ++e) {
        const auto& link = topo.link(e);
        if (topo.kind(link.u) != NodeKind::Substation && topo.kind(link.v) != NodeKind::Substation)
            continue;
        auto members = nearest_rows(concat, e, k);
        members.push_back(e);
        columns.push_back(std::move(members));
    }
    return Incidence(topo.edge_count(), std::move(columns));
}

Hyperstructure build_hyperstructure(const Topology& topo, const Matrix& node_features, std::size_t k)
{
    Hyperstructure h;
    h.hyperedges = build_hyperedges(topo, node_features, k);
    h.hypernodes = build_hypernodes(topo, node_features, k);
    h.hyperedge_weights.assign(h.hyperedges.cols(), 1.0);
    h.hypernode_weights.assign(h.hypernodes.cols(), 1.0);
    h.hyperedge_seeds.assign(topo.substations().begin(), topo.substations().end());
    for (std::size_t e = 0; e < topo.edge_count(); ++e) {
        const auto& link = topo.link(e);
        if (topo.kind(link.u) == NodeKind::Substation || topo.kind(link.v) == NodeKind::Substation)
            h.hypernode_seeds.push_back(e);
    }
    return h;
}

Matrix hypergraph_laplacian(const Incidence& q, std::span<const double> weights)
{
    if (weights.size() != q.cols()) throw ShapeMismatch("laplacian: one weight per hyperedge");
    const std::size_t n = q.rows();
    std::vector<double> node_degree(n, 0.0);
    for (std::size_t h = 0; h < q.cols(); ++h) {
        if (q.column_degree(h) == 0) throw ValidationError("laplacian: empty hyperedge");
        for (std::size_t v : q.members(h)) node_degree[v] += weights[h];
    }
    for (std::size_t v = 0; v < n; ++v)
        if (!(node_degree[v] > 0.0))
            throw ZeroDegreeNode("laplacian: node " + std::to_string(v) + " has zero degree");

    Matrix lap = Matrix::identity(n);
    for (std::size_t h = 0; h < q.cols(); ++h) {
        const double scale = 0.5 * weights[h] / static_cast<double>(q.column_degree(h));
        for (std::size_t a : q.members(h))
            for (std::size_t b : q.members(h))
                lap(a, b) -= scale / std::sqrt(node_degree[a] * node_degree[b]);
    }
    return lap;
}

void write_incidence_csv(std::ostream& out, const Incidence& incidence)
{
    out << "row,col,value\n";
    for (std::size_t c = 0; c < incidence.cols(); ++c)
        for (std::size_t r : incidence.members(c)) out << r << ',' << c << ",1\n";
}

Incidence parse_incidence_csv(std::string_view text, std::size_t rows, const std::string& context)
{
    const CsvTable table = parse_csv(text, context);
    const std::size_t rc = table.column("row");
    const std::size_t cc = table.column("col");
    std::vector<std::vector<std::size_t>> columns;
    for (const auto& line : table.rows) {
        const auto r = parse_integer(line[rc], context);
        const auto c = parse_integer(line[cc], context);
        if (r < 0 || c < 0 || static_cast<std::size_t>(r) >= rows)
            throw ParseError(context + ": incidence index out of range");
        if (static_cast<std::size_t>(c) >= columns.size()) columns.resize(static_cast<std::size_t>(c) + 1);
        columns[static_cast<std::size_t>(c)].push_back(static_cast<std::size_t>(r));
    }
    return Incidence(rows, std::move(columns));
}

} // namespace gridres
