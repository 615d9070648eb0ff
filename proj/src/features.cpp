#include "gridres/features.hpp"

#include "gridres/csv.hpp"
#include "gridres/errors.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <numeric>
#include <queue>

namespace gridres {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kNoHops = std::numeric_limits<std::size_t>::max();

std::vector<std::size_t> hop_distances(const Topology& topo, std::size_t source)
{
    std::vector<std::size_t> hops(topo.node_count(), kNoHops);
    std::deque<std::size_t> queue{source};
    hops[source] = 0;
    while (!queue.empty()) {
        const std::size_t u = queue.front();
        queue.pop_front();
        for (const auto& inc : topo.incident(u)) {
            if (hops[inc.neighbor] == kNoHops) {
                hops[inc.neighbor] = hops[u] + 1;
                queue.push_back(inc.neighbor);
            }
        }
    }
    return hops;
}

/// Lower bounds toward one substation, shared by all loads.
struct TargetBounds {
    std::size_t target;
    std::vector<double> distance;
    std::vector<std::size_t> hops;

    TargetBounds(const Topology& topo, std::size_t t)
        : target(t), distance(shortest_distances(topo, t)), hops(hop_distances(topo, t)) {}
};

// Depth-first enumeration with branch and bound: once `max_paths` paths are
// held, partial paths whose weight plus the remaining shortest distance
// exceeds the current worst kept path are cut.
class PathSearch {
public:
    PathSearch(const Topology& topo, const TargetBounds& bounds, std::size_t max_paths,
               std::size_t max_hops)
        : topo_(topo), bounds_(bounds), max_paths_(max_paths), max_hops_(max_hops),
          on_path_(topo.node_count(), 0) {}

    std::vector<SimplePath> run(std::size_t source)
    {
        if (max_paths_ == 0 || source == bounds_.target) return {};
        if (bounds_.hops[source] == kNoHops || bounds_.hops[source] > max_hops_) return {};
        nodes_.push_back(source);
        on_path_[source] = 1;
        visit(source, 0.0);
        std::sort(kept_.begin(), kept_.end(), path_precedes);
        return std::move(kept_);
    }

private:
    bool full() const { return kept_.size() >= max_paths_; }

    void visit(std::size_t node, double weight)
    {
        for (const auto& inc : topo_.incident(node)) {
            const std::size_t next = inc.neighbor;
            if (on_path_[next]) continue;
            const std::size_t hops = edges_.size() + 1;
            if (bounds_.hops[next] == kNoHops || hops + bounds_.hops[next] > max_hops_) continue;
            const double w = weight + topo_.link(inc.edge).weight;
            if (full()) {
                const double worst = kept_.front().weight;
                const double slack = 1e-12 * std::max(1.0, std::abs(worst));
                if (w + bounds_.distance[next] > worst + slack) continue;
            }

            nodes_.push_back(next);
            edges_.push_back(inc.edge);
            if (next == bounds_.target) {
                offer(w);
            } else {
                on_path_[next] = 1;
                visit(next, w);
                on_path_[next] = 0;
            }
            nodes_.pop_back();
            edges_.pop_back();
        }
    }

    void offer(double weight)
    {
        SimplePath path{nodes_, edges_, weight};
        if (!full()) {
            kept_.push_back(std::move(path));
            if (max_paths_ != PathCaps::unlimited)
                std::push_heap(kept_.begin(), kept_.end(), path_precedes);
            return;
        }
        if (!path_precedes(path, kept_.front())) return;
        std::pop_heap(kept_.begin(), kept_.end(), path_precedes);
        kept_.back() = std::move(path);
        std::push_heap(kept_.begin(), kept_.end(), path_precedes);
    }

    const Topology& topo_;
    const TargetBounds& bounds_;
    std::size_t max_paths_;
    std::size_t max_hops_;
    std::vector<char> on_path_;
    std::vector<std::size_t> nodes_;
    std::vector<std::size_t> edges_;
    std::vector<SimplePath> kept_;
};

std::size_t effective_hops(const Topology& topo, const PathCaps& caps)
{
    return caps.max_hops == 0 ? topo.node_count() : caps.max_hops;
}

std::vector<SimplePath> paths_with_bounds(const Topology& topo, const TargetBounds& bounds,
                                          std::size_t load, const PathCaps& caps)
{
    PathSearch search(topo, bounds, caps.max_paths, effective_hops(topo, caps));
    return search.run(load);
}

std::size_t require_node(const Grid& grid, std::string_view id)
{
    auto idx = grid.find_node(id);
    if (!idx) throw ValidationError("unknown node '" + std::string(id) + "'");
    return *idx;
}

} // namespace

bool path_precedes(const SimplePath& a, const SimplePath& b)
{
    if (a.weight != b.weight) return a.weight < b.weight;
    if (a.edges.size() != b.edges.size()) return a.edges.size() < b.edges.size();
    return a.nodes < b.nodes;
}

std::vector<SimplePath> simple_paths(const Topology& topo, std::size_t load, std::size_t substation,
                                     const PathCaps& caps)
{
    TargetBounds bounds(topo, substation);
    return paths_with_bounds(topo, bounds, load, caps);
}

std::vector<SimplePath> simple_paths(const Grid& grid, std::string_view load,
                                     std::string_view substation, const PathCaps& caps)
{
    Topology topo(grid);
    return simple_paths(topo, require_node(grid, load), require_node(grid, substation), caps);
}

std::vector<double> uniqueness_scores(std::span<const SimplePath> sorted_paths,
                                      std::size_t edge_count)
{
    std::vector<double> scores;
    scores.reserve(sorted_paths.size());
    std::vector<char> seen(edge_count, 0);
    for (const SimplePath& path : sorted_paths) {
        std::size_t shared = 0;
        for (std::size_t e : path.edges) shared += seen[e] ? 1 : 0;
        const double hops = static_cast<double>(path.hops());
        scores.push_back(hops > 0 ? 1.0 - static_cast<double>(shared) / hops : 0.0);
        for (std::size_t e : path.edges) seen[e] = 1;
    }
    return scores;
}

double u_score(std::span<const SimplePath> sorted_paths, std::size_t edge_count)
{
    if (sorted_paths.empty()) return 0.0;
    const auto scores = uniqueness_scores(sorted_paths, edge_count);
    const double total_score = std::accumulate(scores.begin(), scores.end(), 0.0);
    std::size_t total_hops = 0;
    for (const auto& p : sorted_paths) total_hops += p.hops();
    return total_hops > 0 ? total_score / static_cast<double>(total_hops) : 0.0;
}

double u_score(const Topology& topo, std::size_t load, std::size_t substation, const PathCaps& caps)
{
    return u_score(simple_paths(topo, load, substation, caps), topo.edge_count());
}

Matrix u_score_table(const Topology& topo, const PathCaps& caps)
{
    const auto loads = topo.loads();
    const auto subs = topo.substations();
    Matrix table(loads.size(), subs.size());
    for (std::size_t s = 0; s < subs.size(); ++s) {
        TargetBounds bounds(topo, subs[s]);
        for (std::size_t l = 0; l < loads.size(); ++l)
            table(l, s) = u_score(paths_with_bounds(topo, bounds, loads[l], caps), topo.edge_count());
    }
    return table;
}

double u_score_summary(const Topology& topo, const PathCaps& caps)
{
    const Matrix table = u_score_table(topo, caps);
    return std::accumulate(table.data().begin(), table.data().end(), 0.0);
}

std::vector<double> shortest_distances(const Topology& topo, std::size_t source)
{
    std::vector<double> dist(topo.node_count(), kInf);
    using Item = std::pair<double, std::size_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    dist[source] = 0.0;
    heap.push({0.0, source});
    while (!heap.empty()) {
        auto [d, u] = heap.top();
        heap.pop();
        if (d > dist[u]) continue;
        for (const auto& inc : topo.incident(u)) {
            const double nd = d + topo.link(inc.edge).weight;
            if (nd < dist[inc.neighbor]) {
                dist[inc.neighbor] = nd;
                heap.push({nd, inc.neighbor});
            }
        }
    }
    return dist;
}

std::vector<double> betweenness(const Topology& topo)
{
    const std::size_t n = topo.node_count();
    std::vector<double> centrality(n, 0.0);
    std::vector<double> dist(n);
    std::vector<double> sigma(n);
    std::vector<double> delta(n);
    std::vector<std::vector<std::size_t>> preds(n);
    std::vector<std::size_t> order;
    using Item = std::pair<double, std::size_t>;

    for (std::size_t s = 0; s < n; ++s) {
        std::fill(dist.begin(), dist.end(), kInf);
        std::fill(sigma.begin(), sigma.end(), 0.0);
        std::fill(delta.begin(), delta.end(), 0.0);
        for (auto& p : preds) p.clear();
        order.clear();

        std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
        std::vector<char> settled(n, 0);
        dist[s] = 0.0;
        sigma[s] = 1.0;
        heap.push({0.0, s});
        while (!heap.empty()) {
            auto [d, u] = heap.top();
            heap.pop();
            if (settled[u] || d > dist[u]) continue;
            settled[u] = 1;
            order.push_back(u);
            for (const auto& inc : topo.incident(u)) {
                const std::size_t v = inc.neighbor;
                if (settled[v]) continue;
                const double nd = d + topo.link(inc.edge).weight;
                if (nd < dist[v]) {
                    dist[v] = nd;
                    sigma[v] = sigma[u];
                    preds[v].assign(1, u);
                    heap.push({nd, v});
                } else if (nd == dist[v]) {
                    sigma[v] += sigma[u];
                    preds[v].push_back(u);
                }
            }
        }
        for (auto it = order.rbegin(); it != order.rend(); ++it) {
            const std::size_t w = *it;
            for (std::size_t v : preds[w]) delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
            if (w != s) centrality[w] += delta[w];
        }
    }
    for (double& c : centrality) c *= 0.5;
    return centrality;
}

ClassicalMetrics classical_metrics(const Topology& topo)
{
    ClassicalMetrics m;
    const std::size_t n = topo.node_count();
    double total = 0.0;
    std::size_t pairs = 0;
    for (std::size_t s = 0; s < n; ++s) {
        const auto dist = shortest_distances(topo, s);
        for (std::size_t t = s + 1; t < n; ++t) {
            if (!std::isfinite(dist[t])) continue;
            total += dist[t];
            ++pairs;
            m.diameter = std::max(m.diameter, dist[t]);
        }
    }
    m.average_path_length = pairs ? total / static_cast<double>(pairs) : 0.0;
    const auto bc = betweenness(topo);
    m.average_betweenness =
        n ? std::accumulate(bc.begin(), bc.end(), 0.0) / static_cast<double>(n) : 0.0;
    return m;
}

Matrix node_feature_matrix(const Topology& topo, const PathCaps& caps)
{
    const auto subs = topo.substations();
    const auto loads = topo.loads();
    const std::size_t n = topo.node_count();
    const std::size_t s = subs.size();
    Matrix x(n, s + 2);

    const Matrix table = u_score_table(topo, caps);
    for (std::size_t l = 0; l < loads.size(); ++l)
        for (std::size_t j = 0; j < s; ++j) x(loads[l], j) = table(l, j);

    const auto bc = betweenness(topo);
    for (std::size_t v = 0; v < n; ++v) {
        x(v, s) = static_cast<double>(topo.degree(v));
        x(v, s + 1) = bc[v];
    }
    return x;
}

std::vector<std::string> node_feature_columns(const Grid& grid)
{
    std::vector<std::string> cols;
    for (const Node& node : grid.nodes())
        if (node.kind == NodeKind::Substation) cols.push_back("uscore_" + node.id);
    cols.emplace_back("degree");
    cols.emplace_back("betweenness");
    return cols;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b)
{
    if (a.size() != b.size()) throw ShapeMismatch("cosine: vectors differ in length");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

Matrix edge_feature_matrix(const Topology& topo, const Matrix& node_features)
{
    if (node_features.rows() != topo.node_count())
        throw ShapeMismatch("edge features: node feature rows do not match the grid");
    Matrix x(topo.edge_count(), 1);
    for (std::size_t e = 0; e < topo.edge_count(); ++e) {
        const auto& link = topo.link(e);
        x(e, 0) = cosine_similarity(node_features.row(link.u), node_features.row(link.v));
    }
    return x;
}

double pearson(std::span<const double> x, std::span<const double> y)
{
    if (x.size() != y.size()) throw ValidationError("correlation: lists differ in length");
    if (x.size() < 3) throw ValidationError("correlation: need at least 3 values");
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx <= 0.0 || syy <= 0.0) throw DegenerateVariance("correlation: zero variance");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double metric_cvar_correlation(std::span<const double> metric, std::span<const double> cvars)
{
    std::vector<double> inverse;
    inverse.reserve(cvars.size());
    for (double c : cvars) {
        if (!(c > 0.0)) throw ValidationError("correlation: CVaR values must be positive");
        inverse.push_back(1.0 / c);
    }
    return pearson(metric, inverse);
}

void write_node_features_csv(std::ostream& out, const Grid& grid, const Matrix& node_features)
{
    out << "node_id";
    for (const auto& col : node_feature_columns(grid)) out << ',' << col;
    out << '\n';
    for (std::size_t v = 0; v < node_features.rows(); ++v) {
        out << grid.nodes()[v].id;
        for (double x : node_features.row(v)) out << ',' << format_double(x);
        out << '\n';
    }
}

void write_edge_features_csv(std::ostream& out, const Grid& grid, const Matrix& edge_features)
{
    out << "edge_id,from,to,cosine\n";
    for (std::size_t e = 0; e < edge_features.rows(); ++e) {
        const Edge& edge = grid.edges()[e];
        out << edge.id << ',' << edge.u << ',' << edge.v << ',' << format_double(edge_features(e, 0))
            << '\n';
    }
}

} // namespace gridres
