#include "gridres/errors.hpp"
#include "gridres/features.hpp"
#include "gridres/hyperstruct.hpp"
#include "gridres/pipeline.hpp"

#include <doctest.h>

#include <random>
#include <sstream>

using namespace gridres;

namespace {

Edge line(const char* id, const char* u, const char* v) { return {id, u, v, 1.0, EdgeStatus::Existing}; }

} // namespace

TEST_CASE("nearest_rows breaks ties by index")
{
    const Matrix pts{{0, 0}, {1, 0}, {0, 1}, {2, 0}, {0, 0}};
    CHECK(nearest_rows(pts, 0, 1) == std::vector<std::size_t>{4});
    CHECK(nearest_rows(pts, 0, 3) == std::vector<std::size_t>{4, 1, 2});
    CHECK(nearest_rows(pts, 0, 99).size() == 4);
}

TEST_CASE("hyperedges on a generated system")
{
    const Grid base = generate_grid(GeneratorConfig::system(1), 1);
    const CombinedGrid c = combine_plan(base, {"p", {}});
    const Matrix xv = node_feature_matrix(c.topology);
    const Incidence qe = build_hyperedges(c.topology, xv, 10);
    REQUIRE(qe.cols() == 4);
    for (std::size_t h = 0; h < 4; ++h) {
        CHECK(qe.column_degree(h) == 11);
        CHECK(qe.contains(c.topology.substations()[h], h));
    }

    const Incidence all = build_hyperedges(c.topology, xv, c.topology.node_count() - 1);
    for (std::size_t h = 0; h < all.cols(); ++h) CHECK(all.column_degree(h) == c.topology.node_count());
    CHECK(build_hyperedges(c.topology, xv, 500) == all);
}

TEST_CASE("substations with identical features pick the same neighbour")
{
    const Grid g({{"a", NodeKind::Load, 1}, {"b", NodeKind::Load, 1}, {"s1", NodeKind::Substation, 0}, {"s2", NodeKind::Substation, 0}},
                 {line("e1", "s1", "a"), line("e2", "s2", "b")});
    const Topology t(g);
    const Matrix xv{{1, 0}, {1, 0}, {0, 0}, {0, 0}};
    const Incidence qe = build_hyperedges(t, xv, 1);
    REQUIRE(qe.cols() == 2);
    // s1 and s2 are at distance 0 from each other, so each picks the other.
    CHECK(qe.members(0).size() == 2);
    CHECK(qe.members(0)[0] == 2);
    CHECK(qe.members(0)[1] == 3);
    CHECK(qe.members(1)[0] == 2);
    CHECK(qe.members(1)[1] == 3);

    const Matrix same{{1, 0}, {1, 0}, {5, 5}, {5, 5}};
    const Incidence q2 = build_hyperedges(t, same, 2);
    // nearest to each substation: the other substation, then the lowest index load.
    CHECK(std::vector<std::size_t>(q2.members(0).begin(), q2.members(0).end()) == std::vector<std::size_t>{0, 2, 3});
    CHECK(std::vector<std::size_t>(q2.members(1).begin(), q2.members(1).end()) == std::vector<std::size_t>{0, 2, 3});
}

TEST_CASE("hypernodes")
{
    SUBCASE("single edge")
    {
        const Grid g({{"l", NodeKind::Load, 1}, {"s", NodeKind::Substation, 0}}, {line("e", "l", "s")});
        const Topology t(g);
        const Incidence qv = build_hypernodes(t, node_feature_matrix(t), 10);
        REQUIRE(qv.cols() == 1);
        CHECK(qv.column_degree(0) == 1);
        CHECK(qv.rows() == 1);
    }
    SUBCASE("star with k = 2")
    {
        const Grid g({{"a", NodeKind::Load, 1}, {"b", NodeKind::Load, 1}, {"c", NodeKind::Load, 1}, {"s", NodeKind::Substation, 0}},
                     {line("e1", "s", "a"), line("e2", "s", "b"), line("e3", "s", "c")});
        const Topology t(g);
        const Incidence qv = build_hypernodes(t, node_feature_matrix(t), 2);
        REQUIRE(qv.cols() == 3);
        for (std::size_t h = 0; h < 3; ++h) CHECK(qv.column_degree(h) == 3);
    }
    SUBCASE("one column per substation-incident edge")
    {
        const Grid base = generate_grid(GeneratorConfig::system(1), 4);
        const CombinedGrid c = combine_plan(base, {"p", {}});
        std::size_t incident = 0;
        for (std::size_t s : c.topology.substations()) incident += c.topology.degree(s);
        const Hyperstructure h = build_hyperstructure(c.topology, node_feature_matrix(c.topology), 10);
        CHECK(h.hypernodes.cols() == incident);
        CHECK(h.hypernode_seeds.size() == incident);
        CHECK(h.hyperedge_weights == std::vector<double>(4, 1.0));
        for (std::size_t j = 0; j < h.hypernodes.cols(); ++j) {
            CHECK(h.hypernodes.contains(h.hypernode_seeds[j], j));
            CHECK(h.hypernodes.column_degree(j) == 11);
        }
    }
}

TEST_CASE("hypergraph laplacian")
{
    SUBCASE("one hyperedge over two nodes")
    {
        const Matrix l = hypergraph_laplacian(Incidence(2, {{0, 1}}), std::vector<double>{1.0});
        CHECK(l(0, 0) == doctest::Approx(0.75));
        CHECK(l(0, 1) == doctest::Approx(-0.25));
        CHECK(l(1, 0) == doctest::Approx(-0.25));
        CHECK(l(1, 1) == doctest::Approx(0.75));
    }
    SUBCASE("singletons give half the identity")
    {
        const Matrix l = hypergraph_laplacian(Incidence(3, {{0}, {1}, {2}}), std::vector<double>(3, 1.0));
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = 0; j < 3; ++j) CHECK(l(i, j) == doctest::Approx(i == j ? 0.5 : 0.0));
    }
    SUBCASE("symmetric on random incidence")
    {
        std::mt19937_64 rng(3);
        std::uniform_real_distribution<double> w(0.5, 2.0);
        for (int trial = 0; trial < 20; ++trial) {
            const std::size_t n = 6;
            std::vector<std::vector<std::size_t>> cols;
            std::vector<double> weights;
            for (std::size_t v = 0; v < n; ++v) {
                std::vector<std::size_t> col{v};
                for (std::size_t u = 0; u < n; ++u)
                    if (rng() % 3 == 0) col.push_back(u);
                cols.push_back(col);
                weights.push_back(w(rng));
            }
            const Matrix l = hypergraph_laplacian(Incidence(n, cols), weights);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) CHECK(l(i, j) == l(j, i));
        }
    }
    SUBCASE("uncovered node")
    {
        CHECK_THROWS_AS(hypergraph_laplacian(Incidence(3, {{0, 1}}), std::vector<double>{1.0}), ZeroDegreeNode);
    }
}

TEST_CASE("incidence CSV round trip")
{
    const Incidence q(5, {{0, 3}, {1, 2, 4}});
    std::ostringstream out;
    write_incidence_csv(out, q);
    CHECK(out.str() == "row,col,value\n0,0,1\n3,0,1\n1,1,1\n2,1,1\n4,1,1\n");
    CHECK(parse_incidence_csv(out.str(), 5, "q") == q);
    CHECK_THROWS_AS(parse_incidence_csv(out.str(), 4, "q"), ParseError);
    CHECK(q.to_dense() == q.to_sparse().to_dense());
}
