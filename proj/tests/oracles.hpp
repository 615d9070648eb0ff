#pragma once

// Brute-force reference implementations used by the unit and acceptance
// tests. They share no code with the library beyond plain data types.

#include "gridres/grid.hpp"
#include "gridres/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <queue>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace oracle {

struct Edge {
    std::size_t u, v;
    double w;
};

struct Graph {
    std::size_t n = 0;
    std::vector<Edge> edges;
};

struct Path {
    std::vector<std::size_t> nodes;
    std::vector<std::size_t> edges;
    double weight = 0.0;
};

inline std::size_t edge_between(const Graph& g, std::size_t a, std::size_t b)
{
    for (std::size_t e = 0; e < g.edges.size(); ++e)
        if ((g.edges[e].u == a && g.edges[e].v == b) || (g.edges[e].u == b && g.edges[e].v == a)) return e;
    return g.edges.size();
}

/// Every simple path from s to t: each subset of the other nodes, in every
/// order, checked for adjacency.
inline std::vector<Path> all_simple_paths(const Graph& g, std::size_t s, std::size_t t)
{
    std::vector<Path> out;
    std::vector<std::size_t> others;
    for (std::size_t v = 0; v < g.n; ++v)
        if (v != s && v != t) others.push_back(v);
    const std::size_t m = others.size();
    for (std::uint32_t mask = 0; mask < (1u << m); ++mask) {
        std::vector<std::size_t> mid;
        for (std::size_t i = 0; i < m; ++i)
            if (mask & (1u << i)) mid.push_back(others[i]);
        std::sort(mid.begin(), mid.end());
        do {
            std::vector<std::size_t> seq{s};
            seq.insert(seq.end(), mid.begin(), mid.end());
            seq.push_back(t);
            Path p;
            p.nodes = seq;
            bool ok = true;
            for (std::size_t i = 0; i + 1 < seq.size() && ok; ++i) {
                const std::size_t e = edge_between(g, seq[i], seq[i + 1]);
                if (e == g.edges.size()) ok = false;
                else {
                    p.edges.push_back(e);
                    p.weight += g.edges[e].w;
                }
            }
            if (ok) out.push_back(p);
        } while (std::next_permutation(mid.begin(), mid.end()));
    }
    return out;
}

inline bool before(const Path& a, const Path& b)
{
    if (a.weight != b.weight) return a.weight < b.weight;
    if (a.edges.size() != b.edges.size()) return a.edges.size() < b.edges.size();
    return a.nodes < b.nodes;
}

/// U-score over the `max_paths` lightest paths of the full path list.
inline double u_score(const Graph& g, std::size_t load, std::size_t sub,
                      std::size_t max_paths = std::numeric_limits<std::size_t>::max())
{
    auto paths = all_simple_paths(g, load, sub);
    if (paths.empty()) return 0.0;
    std::sort(paths.begin(), paths.end(), before);
    if (paths.size() > max_paths) paths.resize(max_paths);
    std::set<std::size_t> seen;
    double total = 0.0;
    double hops = 0.0;
    for (const Path& p : paths) {
        std::size_t overlap = 0;
        for (std::size_t e : p.edges) overlap += seen.count(e);
        total += 1.0 - static_cast<double>(overlap) / static_cast<double>(p.edges.size());
        hops += static_cast<double>(p.edges.size());
        seen.insert(p.edges.begin(), p.edges.end());
    }
    return total / hops;
}

/// Shortest distance by minimizing over all simple paths (+inf if none).
inline double distance(const Graph& g, std::size_t s, std::size_t t)
{
    if (s == t) return 0.0;
    double best = std::numeric_limits<double>::infinity();
    for (const Path& p : all_simple_paths(g, s, t)) best = std::min(best, p.weight);
    return best;
}

/// Betweenness from explicit shortest-path enumeration; each unordered pair once.
/// Weights must be exactly representable so equal-cost paths compare equal.
inline std::vector<double> betweenness(const Graph& g)
{
    std::vector<double> bc(g.n, 0.0);
    for (std::size_t s = 0; s < g.n; ++s)
        for (std::size_t t = s + 1; t < g.n; ++t) {
            const auto paths = all_simple_paths(g, s, t);
            if (paths.empty()) continue;
            double best = std::numeric_limits<double>::infinity();
            for (const Path& p : paths) best = std::min(best, p.weight);
            std::vector<const Path*> shortest;
            for (const Path& p : paths)
                if (p.weight == best) shortest.push_back(&p);
            for (const Path* p : shortest)
                for (std::size_t i = 1; i + 1 < p->nodes.size(); ++i)
                    bc[p->nodes[i]] += 1.0 / static_cast<double>(shortest.size());
        }
    return bc;
}

struct Classical {
    double apl = 0.0;
    double diameter = 0.0;
    double avg_bc = 0.0;
};

inline Classical classical(const Graph& g)
{
    Classical c;
    double total = 0.0;
    std::size_t pairs = 0;
    for (std::size_t s = 0; s < g.n; ++s)
        for (std::size_t t = s + 1; t < g.n; ++t) {
            const double d = distance(g, s, t);
            if (!std::isfinite(d)) continue;
            total += d;
            ++pairs;
            c.diameter = std::max(c.diameter, d);
        }
    c.apl = pairs ? total / static_cast<double>(pairs) : 0.0;
    const auto bc = betweenness(g);
    c.avg_bc = g.n ? std::accumulate(bc.begin(), bc.end(), 0.0) / static_cast<double>(g.n) : 0.0;
    return c;
}

/// CVaR with the tail size computed in integer arithmetic: alpha = pct / 100.
/// The tail is summed worst first.
inline double cvar(std::vector<double> losses, int alpha_pct)
{
    std::sort(losses.begin(), losses.end());
    const std::size_t n = losses.size();
    const std::size_t tail = (static_cast<std::size_t>(100 - alpha_pct) * n + 99) / 100;
    double total = 0.0;
    for (std::size_t i = 0; i < tail; ++i) total += losses[n - 1 - i];
    return total / static_cast<double>(tail);
}

/// Hour-by-hour loss: BFS from every substation over lines that are up.
inline double hourly_loss(const gridres::Topology& topo, const std::vector<gridres::OutageEvent>& events, int hours)
{
    double loss = 0.0;
    for (int h = 0; h < hours; ++h) {
        std::vector<char> down(topo.edge_count(), 0);
        for (const auto& ev : events)
            if (ev.start_hour <= h && h < ev.start_hour + ev.duration_hours)
                for (std::size_t e : ev.edges) down[e] = 1;
        std::vector<char> reached(topo.node_count(), 0);
        std::queue<std::size_t> q;
        for (std::size_t s : topo.substations()) {
            reached[s] = 1;
            q.push(s);
        }
        while (!q.empty()) {
            const std::size_t v = q.front();
            q.pop();
            for (std::size_t e = 0; e < topo.edge_count(); ++e) {
                if (down[e]) continue;
                const auto& l = topo.link(e);
                std::size_t w = topo.node_count();
                if (l.u == v) w = l.v;
                else if (l.v == v) w = l.u;
                if (w < topo.node_count() && !reached[w]) {
                    reached[w] = 1;
                    q.push(w);
                }
            }
        }
        for (std::size_t v : topo.loads())
            if (!reached[v]) loss += topo.demand(v);
    }
    return loss;
}

/// Random connected-or-not simple graph with `n` nodes and edge probability p.
/// Weights are drawn from `weights`.
inline Graph random_graph(std::mt19937_64& rng, std::size_t n, double p, const std::vector<double>& weights)
{
    Graph g;
    g.n = n;
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> pick(0, weights.size() - 1);
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = a + 1; b < n; ++b)
            if (coin(rng) < p) g.edges.push_back({a, b, weights[pick(rng)]});
    return g;
}

/// Same graph as a gridres::Grid. Node i gets id "n<i>" (single digit for
/// n <= 10, so id order equals index order); `subs` become substations, the
/// rest loads.
inline gridres::Grid to_grid(const Graph& g, const std::set<std::size_t>& subs)
{
    std::vector<gridres::Node> nodes;
    for (std::size_t i = 0; i < g.n; ++i)
        nodes.push_back({"n" + std::to_string(i), subs.count(i) ? gridres::NodeKind::Substation : gridres::NodeKind::Load,
                         subs.count(i) ? 0.0 : 1.0});
    std::vector<gridres::Edge> edges;
    for (std::size_t e = 0; e < g.edges.size(); ++e) {
        const std::string id = "e" + std::string(e < 10 ? "0" : "") + std::to_string(e);
        edges.push_back({id, "n" + std::to_string(g.edges[e].u), "n" + std::to_string(g.edges[e].v), g.edges[e].w,
                         gridres::EdgeStatus::Existing});
    }
    return gridres::Grid(std::move(nodes), std::move(edges));
}

} // namespace oracle
