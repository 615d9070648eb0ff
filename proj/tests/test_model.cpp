#include "gridres/errors.hpp"
#include "gridres/model.hpp"
#include "gridres/pipeline.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>

using namespace gridres;

namespace {

ModelConfig tiny_config(int width, int layers = 1)
{
    ModelConfig c;
    c.layers = layers;
    c.hidden_dim = width;
    c.mlp_blocks = 1;
    c.dropout = 0.0;
    return c;
}

void set_identity(std::vector<MlpBlock>& blocks)
{
    for (auto& b : blocks) {
        b.weight.value = Matrix::identity(b.weight.value.rows());
        b.bias.value.fill(0.0);
    }
}

Grid toy_grid()
{
    return Grid({{"a", NodeKind::Load, 3}, {"b", NodeKind::Load, 1}, {"c", NodeKind::Load, 2}, {"s", NodeKind::Substation, 0},
                 {"t", NodeKind::Substation, 0}},
                {{"e1", "s", "a", 1.0, EdgeStatus::Existing},
                 {"e2", "a", "b", 2.0, EdgeStatus::Existing},
                 {"e3", "b", "t", 1.5, EdgeStatus::Existing},
                 {"e4", "a", "c", 1.0, EdgeStatus::Existing},
                 {"c1", "c", "t", 0.5, EdgeStatus::Candidate}});
}

PlanSample toy_sample(const std::vector<std::string>& plan = {"c1"})
{
    FeatureOptions opts;
    opts.k = 2;
    return make_sample(featurize_plan(toy_grid(), {"p", plan}, opts), 1, 1234.0);
}

double output(HyperGcnn& m, const PlanSample& s, AttentionWeights* att = nullptr)
{
    ad::Tape tape;
    std::mt19937_64 rng(0);
    const ad::Var y = m.forward(tape, s, false, rng, att);
    double total = 0.0;
    for (std::size_t i = 0; i < y.value().cols(); ++i) total += y.value()(0, i) * static_cast<double>(i + 1);
    return total;
}

SparseMatrix permute(const SparseMatrix& m, const std::vector<std::size_t>& rows, const std::vector<std::size_t>* cols)
{
    const Matrix d = m.to_dense();
    Matrix out(d.rows(), d.cols());
    for (std::size_t r = 0; r < d.rows(); ++r)
        for (std::size_t c = 0; c < d.cols(); ++c) out(rows[r], cols ? (*cols)[c] : c) = d(r, c);
    return SparseMatrix::from_dense(out);
}

Matrix permute_rows(const Matrix& m, const std::vector<std::size_t>& rows)
{
    Matrix out(m.rows(), m.cols());
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t c = 0; c < m.cols(); ++c) out(rows[r], c) = m(r, c);
    return out;
}

} // namespace

TEST_CASE("normalized adjacency")
{
    const Matrix a = normalized_adjacency(3, {{0, 1}, {1, 2}}).to_dense();
    CHECK(a(0, 0) == doctest::Approx(0.5));
    CHECK(a(1, 1) == doctest::Approx(1.0 / 3.0));
    CHECK(a(0, 1) == doctest::Approx(1.0 / std::sqrt(6.0)));
    CHECK(a(0, 2) == 0.0);
    CHECK(a == a.transposed());
}

TEST_CASE("GCN branch by hand")
{
    SUBCASE("isolated node")
    {
        HyperGcnn m(tiny_config(3), 3, 1, 1);
        m.gcn_weights()[0].value = Matrix::identity(3);
        ad::Tape tape;
        const Matrix x{{0.2, 1.5, 4.0}};
        const ad::Var z = m.gcn_branch(tape, tape.constant(x), normalized_adjacency(1, {}));
        CHECK(z.value() == x);
    }
    SUBCASE("single edge")
    {
        HyperGcnn m(tiny_config(2), 2, 1, 1);
        m.gcn_weights()[0].value = Matrix::identity(2);
        ad::Tape tape;
        const ad::Var z = m.gcn_branch(tape, tape.constant(Matrix::identity(2)), normalized_adjacency(2, {{0, 1}}));
        CHECK(z.value()(0, 0) == doctest::Approx(0.5));
        CHECK(z.value()(0, 1) == doctest::Approx(0.5));
    }
}

TEST_CASE("hyper branches by hand")
{
    SUBCASE("one all-ones hyperedge")
    {
        HyperGcnn m(tiny_config(2), 2, 1, 1);
        set_identity(m.hyperedge_inner());
        set_identity(m.hyperedge_outer());
        ad::Tape tape;
        const Matrix x{{1, 2}, {3, 0}, {0.5, 1}};
        const SparseMatrix q = SparseMatrix::from_dense(Matrix{{1}, {1}, {1}});
        const ad::Var z = m.hyperedge_branch(tape, tape.constant(x), q);
        CHECK(z.value() == Matrix{{4.5, 3}});
    }
    SUBCASE("single hypernode over the only edge")
    {
        HyperGcnn m(tiny_config(1), 1, 1, 1);
        set_identity(m.hypernode_inner());
        set_identity(m.hypernode_outer());
        ad::Tape tape;
        const ad::Var z = m.hypernode_branch(tape, tape.constant(Matrix{{0.7}}), SparseMatrix::from_dense(Matrix{{1}}));
        CHECK(z.value() == Matrix{{0.7}});
    }
    SUBCASE("two singleton hypernodes")
    {
        HyperGcnn m(tiny_config(1), 1, 1, 1);
        set_identity(m.hypernode_inner());
        set_identity(m.hypernode_outer());
        ad::Tape tape;
        const ad::Var z = m.hypernode_branch(tape, tape.constant(Matrix{{1}, {3}}), SparseMatrix::from_dense(Matrix::identity(2)));
        CHECK(z.value() == Matrix{{3}});
    }
    SUBCASE("empty incidence is rejected")
    {
        HyperGcnn m(tiny_config(2), 2, 1, 1);
        ad::Tape tape;
        CHECK_THROWS_AS(m.hyperedge_branch(tape, tape.constant(Matrix{{1, 2}}), SparseMatrix(1, 0, {})), ShapeMismatch);
    }
}

TEST_CASE("attention fusion")
{
    SUBCASE("identical embeddings")
    {
        HyperGcnn m(tiny_config(3), 3, 1, 4);
        ad::Tape tape;
        const ad::Var z = tape.constant(Matrix{{0.3, -1, 2}});
        const ad::Var parts[] = {z, z, z};
        AttentionWeights att;
        const ad::Var fused = m.attention_fuse(tape, parts, &att);
        for (double a : att.alpha) CHECK(a == doctest::Approx(1.0 / 3.0));
        for (std::size_t i = 0; i < 3; ++i) CHECK(fused.value()(0, i) == doctest::Approx(z.value()(0, i)));
    }
    SUBCASE("zero attention vector")
    {
        HyperGcnn m(tiny_config(2), 2, 1, 4);
        m.attention_vector().value.fill(0.0);
        ad::Tape tape;
        const ad::Var parts[] = {tape.constant(Matrix{{1, 2}}), tape.constant(Matrix{{-4, 0}}), tape.constant(Matrix{{9, 9}})};
        AttentionWeights att;
        m.attention_fuse(tape, parts, &att);
        for (double a : att.alpha) CHECK(a == doctest::Approx(1.0 / 3.0));
    }
    SUBCASE("one-dimensional closed form")
    {
        HyperGcnn m(tiny_config(1), 1, 1, 4);
        m.attention_projection().value = Matrix{{1}};
        m.attention_vector().value = Matrix{{1}};
        ad::Tape tape;
        const ad::Var parts[] = {tape.constant(Matrix{{0}}), tape.constant(Matrix{{1}}), tape.constant(Matrix{{-1}})};
        AttentionWeights att;
        const ad::Var fused = m.attention_fuse(tape, parts, &att);
        const double t = std::tanh(1.0);
        const double denom = 1.0 + std::exp(t) + std::exp(-t);
        REQUIRE(att.alpha.size() == 3);
        CHECK(att.alpha[0] == doctest::Approx(1.0 / denom));
        CHECK(att.alpha[1] == doctest::Approx(std::exp(t) / denom));
        CHECK(att.alpha[2] == doctest::Approx(std::exp(-t) / denom));
        CHECK(fused.value()(0, 0) == doctest::Approx((std::exp(t) - std::exp(-t)) / denom));
    }
}

TEST_CASE("forward shapes and ablations")
{
    const PlanSample s = toy_sample();
    const std::size_t dim = s.node_features.cols();

    SUBCASE("classification and regression outputs")
    {
        HyperGcnn c(tiny_config(8, 2), dim, 1, 3);
        ad::Tape t1;
        std::mt19937_64 rng(0);
        CHECK(c.forward(t1, s, false, rng).value().cols() == 3);
        ModelConfig rc = tiny_config(8, 2);
        rc.task = Task::Regress;
        HyperGcnn r(rc, dim, 1, 3);
        ad::Tape t2;
        CHECK(r.forward(t2, s, false, rng).value().cols() == 1);
    }
    SUBCASE("no_attention averages the branches")
    {
        ModelConfig cfg = tiny_config(6, 2);
        cfg.ablation.no_attention = true;
        HyperGcnn m(cfg, dim, 1, 5);
        ad::Tape tape;
        std::mt19937_64 rng(0);
        AttentionWeights att;
        const Matrix got = m.forward(tape, s, false, rng, &att).value();
        CHECK(att.alpha == std::vector<double>(3, 1.0 / 3.0));

        ad::Tape t2;
        const ad::Var xv = t2.constant(s.node_features);
        const ad::Var a = m.gcn_branch(t2, xv, s.norm_adjacency);
        const ad::Var b = m.hyperedge_branch(t2, xv, s.hyperedges);
        const ad::Var c = m.hypernode_branch(t2, t2.constant(s.edge_features), s.hypernodes);
        Matrix mean(1, 6);
        for (std::size_t i = 0; i < 6; ++i) mean(0, i) = (a.value()(0, i) + b.value()(0, i) + c.value()(0, i)) / 3.0;
        const Matrix want = m.head(t2, t2.constant(mean), false, rng).value();
        for (std::size_t i = 0; i < got.cols(); ++i) CHECK(got(0, i) == doctest::Approx(want(0, i)).epsilon(1e-12));
    }
    SUBCASE("dropping one branch renormalizes attention")
    {
        ModelConfig cfg = tiny_config(6, 2);
        cfg.ablation.no_hyperedge = true;
        HyperGcnn m(cfg, dim, 1, 5);
        AttentionWeights att;
        output(m, s, &att);
        REQUIRE(att.alpha.size() == 2);
        CHECK(att.alpha[0] + att.alpha[1] == doctest::Approx(1.0));
    }
    SUBCASE("plain GCN equals the GCN branch plus head of the full model")
    {
        ModelConfig cfg = tiny_config(6, 2);
        HyperGcnn full(cfg, dim, 1, 21);
        cfg.ablation = Ablation::plain_gcn();
        HyperGcnn plain(cfg, dim, 1, 21);
        ad::Tape t1, t2;
        std::mt19937_64 r1(0), r2(0);
        const Matrix got = plain.forward(t1, s, false, r1).value();
        const ad::Var z = full.gcn_branch(t2, t2.constant(s.node_features), s.norm_adjacency);
        const Matrix want = full.head(t2, z, false, r2).value();
        CHECK(got == want);
    }
    SUBCASE("no_uscores drops the leading columns")
    {
        ModelConfig cfg = tiny_config(4, 1);
        cfg.ablation.no_uscores = true;
        HyperGcnn m(cfg, dim, 1, 2);
        const Matrix x = m.model_node_features(s);
        CHECK(x.cols() == 2);
        CHECK(x(0, 0) == s.node_features(0, s.substations));
        CHECK(m.gcn_weights()[0].value.rows() == 2);
        CHECK(std::isfinite(output(m, s)));
    }
    SUBCASE("mismatched widths are rejected")
    {
        HyperGcnn m(tiny_config(4, 1), dim + 1, 1, 2);
        CHECK_THROWS_AS(output(m, s), ShapeMismatch);
    }
}

TEST_CASE("forward is deterministic")
{
    const PlanSample s = toy_sample();
    HyperGcnn a(ModelConfig::system1_classification(), s.node_features.cols(), 1, 99);
    HyperGcnn b(ModelConfig::system1_classification(), s.node_features.cols(), 1, 99);
    CHECK(output(a, s) == output(b, s));
    CHECK(output(a, s) == output(a, s));
    const auto pa = a.parameters();
    const auto pb = b.parameters();
    REQUIRE(pa.size() == pb.size());
    for (std::size_t i = 0; i < pa.size(); ++i) {
        CHECK(pa[i]->name == pb[i]->name);
        CHECK(pa[i]->value == pb[i]->value);
    }
    CHECK(pa.front()->name == "gcn.0");
    CHECK(pa.back()->name == "attention.upsilon");
}

TEST_CASE("output is invariant to node and edge relabeling")
{
    const PlanSample s = toy_sample();
    const std::size_t n = s.node_features.rows();
    const std::size_t m = s.edge_features.rows();
    std::vector<std::size_t> pn(n), pe(m);
    for (std::size_t i = 0; i < n; ++i) pn[i] = (i * 3 + 1) % n;
    for (std::size_t i = 0; i < m; ++i) pe[i] = m - 1 - i;

    PlanSample p = s;
    p.node_features = permute_rows(s.node_features, pn);
    p.edge_features = permute_rows(s.edge_features, pe);
    p.norm_adjacency = permute(s.norm_adjacency, pn, &pn);
    p.hyperedges = permute(s.hyperedges, pn, nullptr);
    p.hypernodes = permute(s.hypernodes, pe, nullptr);

    for (const Ablation& ab : {Ablation{}, Ablation::plain_gcn(), Ablation{true, false, false, false}}) {
        ModelConfig cfg = ModelConfig::system1_classification();
        cfg.ablation = ab;
        HyperGcnn model(cfg, s.node_features.cols(), 1, 17);
        CHECK(output(model, p) == doctest::Approx(output(model, s)).epsilon(1e-9));
    }
}

TEST_CASE("end-to-end gradient check on a five-node grid")
{
    const PlanSample s = toy_sample();
    for (Task task : {Task::Classify, Task::Regress}) {
        ModelConfig cfg = tiny_config(5, 2);
        cfg.task = task;
        cfg.mlp_blocks = 2;
        cfg.dropout = 0.3;
        HyperGcnn m(cfg, s.node_features.cols(), 1, 8);
        auto params = m.parameters();
        const auto r = ad::gradient_check(
            [&](ad::Tape& tape) {
                std::mt19937_64 rng(123);
                const ad::Var y = m.forward(tape, s, true, rng);
                return task == Task::Classify ? ad::cross_entropy(y, 1) : ad::mse(y, Matrix{{0.4}});
            },
            params);
        CHECK(r.max_relative_error < 1e-3);
        CHECK(r.coordinates_checked > 50);
    }
}

TEST_CASE("config validation")
{
    ModelConfig c;
    CHECK_NOTHROW(c.validate());
    c.n_classes = 6;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c = {};
    c.dropout = 1.0;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    CHECK(ModelConfig::system2_classification().hidden_dim == 16);
    CHECK(ModelConfig::system2_regression().dropout == 0.8);
    CHECK(ModelConfig::system1_regression().batch_size == 8);
}

TEST_CASE("attention weights stay inside the simplex")
{
    const PlanSample s = toy_sample();
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        HyperGcnn m(tiny_config(6, 2), s.node_features.cols(), 1, seed);
        AttentionWeights att;
        output(m, s, &att);
        REQUIRE(att.alpha.size() == 3);
        double total = 0.0;
        for (double a : att.alpha) {
            CHECK(a > 0.0);
            CHECK(a < 1.0);
            total += a;
        }
        CHECK(total == doctest::Approx(1.0));
    }
}
