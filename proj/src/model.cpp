#include "gridres/model.hpp"

#include "gridres/errors.hpp"

#include <algorithm>
#include <cmath>

namespace gridres {

void ModelConfig::validate() const
{
    if (layers < 1) throw ValidationError("model: layers must be at least 1");
    if (hidden_dim < 1 || embedding_dim() < 1) throw ValidationError("model: widths must be positive");
    if (mlp_blocks < 1) throw ValidationError("model: mlp_blocks must be at least 1");
    if (!(lr >= 0.0)) throw ValidationError("model: learning rate must be nonnegative");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ValidationError("model: dropout must lie in [0, 1)");
    if (batch_size < 1) throw ValidationError("model: batch_size must be at least 1");
    if (epochs < 0) throw ValidationError("model: epochs must be nonnegative");
    if (task == Task::Classify && (n_classes < 3 || n_classes > 5))
        throw ValidationError("model: n_classes must lie in 3..5");
}

ModelConfig ModelConfig::system1_classification()
{
    ModelConfig c;
    c.layers = 3;
    c.hidden_dim = 64;
    c.lr = 0.01;
    c.dropout = 0.5;
    c.batch_size = 16;
    return c;
}

ModelConfig ModelConfig::system2_classification()
{
    ModelConfig c;
    c.layers = 3;
    c.hidden_dim = 16;
    c.lr = 0.05;
    c.dropout = 0.0;
    c.batch_size = 8;
    return c;
}

ModelConfig ModelConfig::system1_regression()
{
    ModelConfig c = system1_classification();
    c.batch_size = 8;
    c.task = Task::Regress;
    return c;
}

ModelConfig ModelConfig::system2_regression()
{
    ModelConfig c;
    c.layers = 2;
    c.hidden_dim = 8;
    c.lr = 0.0001;
    c.dropout = 0.8;
    c.batch_size = 8;
    c.task = Task::Regress;
    return c;
}

void PlanSample::check() const
{
    const std::size_t n = node_features.rows();
    const std::size_t m = edge_features.rows();
    if (norm_adjacency.rows() != n || norm_adjacency.cols() != n)
        throw ShapeMismatch("sample '" + plan_id + "': adjacency does not match node count");
    if (hyperedges.rows() != n) throw ShapeMismatch("sample '" + plan_id + "': Q_E rows != nodes");
    if (hypernodes.rows() != m) throw ShapeMismatch("sample '" + plan_id + "': Q_V rows != edges");
    if (substations > node_features.cols())
        throw ShapeMismatch("sample '" + plan_id + "': more U-score columns than features");
}

SparseMatrix normalized_adjacency(std::size_t nodes,
                                  const std::vector<std::pair<std::size_t, std::size_t>>& edges)
{
    std::vector<double> degree(nodes, 1.0);
    for (auto [u, v] : edges) {
        if (u == v) continue;
        degree[u] += 1.0;
        degree[v] += 1.0;
    }
    std::vector<SparseMatrix::Entry> entries;
    for (std::size_t i = 0; i < nodes; ++i) entries.push_back({i, i, 1.0 / degree[i]});
    for (auto [u, v] : edges) {
        if (u == v) continue;
        const double w = 1.0 / std::sqrt(degree[u] * degree[v]);
        entries.push_back({u, v, w});
        entries.push_back({v, u, w});
    }
    return SparseMatrix(nodes, nodes, std::move(entries));
}

namespace {

MlpBlock make_block(const std::string& name, std::size_t in, std::size_t out, std::mt19937_64& rng)
{
    return {ad::Parameter(name + ".weight", ad::glorot_uniform(in, out, rng)),
            ad::Parameter(name + ".bias", Matrix(1, out))};
}

std::vector<MlpBlock> make_mlp(const std::string& name, std::size_t in, std::size_t hidden,
                               std::size_t out, int blocks, std::mt19937_64& rng)
{
    std::vector<MlpBlock> mlp;
    for (int b = 0; b < blocks; ++b) {
        const std::size_t fan_in = b == 0 ? in : hidden;
        const std::size_t fan_out = b + 1 == blocks ? out : hidden;
        mlp.push_back(make_block(name + "." + std::to_string(b), fan_in, fan_out, rng));
    }
    return mlp;
}

} // namespace

HyperGcnn::HyperGcnn(const ModelConfig& config, std::size_t node_feature_dim,
                     std::size_t edge_feature_dim, std::uint64_t seed)
    : config_(config), node_dim_(node_feature_dim), edge_dim_(edge_feature_dim)
{
    config_.validate();
    std::mt19937_64 rng(seed);
    const std::size_t in = config_.ablation.no_uscores ? 2 : node_dim_;
    const auto hidden = static_cast<std::size_t>(config_.hidden_dim);
    const auto d = static_cast<std::size_t>(config_.embedding_dim());

    for (int l = 0; l < config_.layers; ++l) {
        const std::size_t fan_in = l == 0 ? in : hidden;
        const std::size_t fan_out = l + 1 == config_.layers ? d : hidden;
        gcn_.emplace_back("gcn." + std::to_string(l), ad::glorot_uniform(fan_in, fan_out, rng));
    }
    he_inner_ = make_mlp("hyperedge.inner", in, hidden, hidden, config_.mlp_blocks, rng);
    he_outer_ = make_mlp("hyperedge.outer", hidden, hidden, d, config_.mlp_blocks, rng);
    hn_inner_ = make_mlp("hypernode.inner", edge_dim_, hidden, hidden, config_.mlp_blocks, rng);
    hn_outer_ = make_mlp("hypernode.outer", hidden, hidden, d, config_.mlp_blocks, rng);
    xi_ = ad::Parameter("attention.xi", ad::glorot_uniform(d, d, rng));
    upsilon_ = ad::Parameter("attention.upsilon", ad::glorot_uniform(d, 1, rng));
    const std::size_t out = config_.task == Task::Classify ? static_cast<std::size_t>(config_.n_classes) : 1;
    head_.push_back(make_block("head.0", d, hidden, rng));
    head_.push_back(make_block("head.1", hidden, out, rng));
}

std::vector<ad::Parameter*> HyperGcnn::parameters()
{
    std::vector<ad::Parameter*> out;
    for (auto& p : gcn_) out.push_back(&p);
    for (auto* group : {&he_inner_, &he_outer_, &hn_inner_, &hn_outer_, &head_})
        for (auto& b : *group) {
            out.push_back(&b.weight);
            out.push_back(&b.bias);
        }
    out.push_back(&xi_);
    out.push_back(&upsilon_);
    return out;
}

std::vector<const ad::Parameter*> HyperGcnn::parameters() const
{
    auto mutable_params = const_cast<HyperGcnn*>(this)->parameters();
    return {mutable_params.begin(), mutable_params.end()};
}

Matrix HyperGcnn::model_node_features(const PlanSample& sample) const
{
    if (!config_.ablation.no_uscores) return sample.node_features;
    return sample.node_features.columns(sample.substations, sample.node_features.cols() - sample.substations);
}

ad::Var HyperGcnn::mlp(ad::Tape& tape, ad::Var x, std::vector<MlpBlock>& blocks)
{
    for (auto& block : blocks) {
        x = ad::relu(ad::add_row(ad::matmul(x, tape.param(block.weight)), tape.param(block.bias)));
    }
    return x;
}

ad::Var HyperGcnn::gcn_branch(ad::Tape& tape, ad::Var x, const SparseMatrix& norm_adjacency)
{
    ad::Var z = x;
    for (auto& theta : gcn_) z = ad::relu(ad::spmm(norm_adjacency, ad::matmul(z, tape.param(theta))));
    return ad::max_pool_rows(z);
}

ad::Var HyperGcnn::hyper_branch(ad::Tape& tape, ad::Var x, const SparseMatrix& incidence,
                                std::vector<MlpBlock>& inner, std::vector<MlpBlock>& outer)
{
    if (incidence.cols() == 0) throw ShapeMismatch("hyper branch: incidence has no columns");
    ad::Var pooled = ad::spmm_t(incidence, x);          // H x c
    ad::Var inner_out = mlp(tape, pooled, inner);       // H x hidden
    ad::Var spread = ad::spmm(incidence, inner_out);    // rows x hidden
    return ad::max_pool_rows(mlp(tape, spread, outer)); // 1 x d
}

ad::Var HyperGcnn::hyperedge_branch(ad::Tape& tape, ad::Var x_nodes, const SparseMatrix& q_e)
{
    return hyper_branch(tape, x_nodes, q_e, he_inner_, he_outer_);
}

ad::Var HyperGcnn::hypernode_branch(ad::Tape& tape, ad::Var x_edges, const SparseMatrix& q_v)
{
    return hyper_branch(tape, x_edges, q_v, hn_inner_, hn_outer_);
}

ad::Var HyperGcnn::attention_fuse(ad::Tape& tape, std::span<const ad::Var> embeddings,
                                  AttentionWeights* attention)
{
    ad::Var stacked = ad::concat_rows(embeddings);                           // k x d
    ad::Var scores = ad::matmul(ad::tanh(ad::matmul(stacked, tape.param(xi_))),
                                tape.param(upsilon_));                       // k x 1
    ad::Var alpha = ad::softmax_rows(ad::transpose(scores));                 // 1 x k
    if (attention) attention->alpha = alpha.value().data();
    return ad::matmul(alpha, stacked);                                       // 1 x d
}

ad::Var HyperGcnn::head(ad::Tape& tape, ad::Var z, bool train, std::mt19937_64& rng)
{
    ad::Var h = ad::dropout(z, config_.dropout, train, rng);
    h = ad::relu(ad::add_row(ad::matmul(h, tape.param(head_[0].weight)), tape.param(head_[0].bias)));
    h = ad::dropout(h, config_.dropout, train, rng);
    return ad::add_row(ad::matmul(h, tape.param(head_[1].weight)), tape.param(head_[1].bias));
}

ad::Var HyperGcnn::forward(ad::Tape& tape, const PlanSample& sample, bool train, std::mt19937_64& rng,
                           AttentionWeights* attention)
{
    sample.check();
    const Matrix x = model_node_features(sample);
    const std::size_t expected = config_.ablation.no_uscores ? 2 : node_dim_;
    if (x.cols() != expected || sample.edge_features.cols() != edge_dim_)
        throw ShapeMismatch("forward: sample feature widths do not match the model");

    const ad::Var xv = tape.constant(x);
    std::vector<ad::Var> branches;
    branches.push_back(gcn_branch(tape, xv, sample.norm_adjacency));
    if (!config_.ablation.no_hyperedge) branches.push_back(hyperedge_branch(tape, xv, sample.hyperedges));
    if (!config_.ablation.no_hypernode)
        branches.push_back(hypernode_branch(tape, tape.constant(sample.edge_features), sample.hypernodes));

    ad::Var z = branches.front();
    if (branches.size() > 1) {
        if (config_.ablation.no_attention) {
            for (std::size_t i = 1; i < branches.size(); ++i) z = ad::add(z, branches[i]);
            z = ad::scale(z, 1.0 / static_cast<double>(branches.size()));
            if (attention) attention->alpha.assign(branches.size(), 1.0 / static_cast<double>(branches.size()));
        } else {
            z = attention_fuse(tape, branches, attention);
        }
    } else if (attention) {
        attention->alpha = {1.0};
    }
    return head(tape, z, train, rng);
}

} // namespace gridres
