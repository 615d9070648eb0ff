#pragma once

#include "gridres/autodiff.hpp"
#include "gridres/matrix.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace gridres {

enum class Task { Classify, Regress };

struct Ablation {
    bool no_uscores = false;
    bool no_hyperedge = false;
    bool no_hypernode = false;
    bool no_attention = false;

    /// GCN branch + head only.
    static Ablation plain_gcn() { return {false, true, true, true}; }
    bool operator==(const Ablation&) const = default;
};

struct ModelConfig {
    int layers = 3;
    int hidden_dim = 64;
    int mlp_blocks = 2;
    int d_out = 0; ///< fused embedding width; 0 means hidden_dim
    double lr = 0.01;
    double dropout = 0.5;
    int batch_size = 16;
    int epochs = 100;
    Task task = Task::Classify;
    int n_classes = 3;
    Ablation ablation;

    int embedding_dim() const { return d_out > 0 ? d_out : hidden_dim; }
    void validate() const;

    /// Hyperparameters reported for the two 54-bus systems.
    static ModelConfig system1_classification();
    static ModelConfig system2_classification();
    static ModelConfig system1_regression();
    static ModelConfig system2_regression();
};

/// Everything the network consumes for one expansion plan.
struct PlanSample {
    std::string plan_id;
    SparseMatrix norm_adjacency;  ///< D~^{-1/2} (I + A) D~^{-1/2}, N x N
    Matrix node_features;         ///< X_V, N x (S + 2)
    Matrix edge_features;         ///< X_E, M x 1
    SparseMatrix hyperedges;      ///< Q_E, N x H_E
    SparseMatrix hypernodes;      ///< Q_V, M x H_V
    std::size_t substations = 0;  ///< leading U-score columns of X_V
    int label = 0;
    double target = 0.0;          ///< CVaR for regression

    void check() const;
};

/// Renormalized adjacency of an undirected edge list.
SparseMatrix normalized_adjacency(std::size_t nodes,
                                  const std::vector<std::pair<std::size_t, std::size_t>>& edges);

/// Dense layer followed by ReLU.
struct MlpBlock {
    ad::Parameter weight;
    ad::Parameter bias;
};

struct AttentionWeights {
    std::vector<double> alpha; ///< one per active branch, in branch order GC, E, V
};

/// Hyper-GCNN: GCN branch, hyperedge branch and hypernode branch fused by
/// attention and fed to an MLP head.
class HyperGcnn {
public:
    HyperGcnn(const ModelConfig& config, std::size_t node_feature_dim, std::size_t edge_feature_dim,
              std::uint64_t seed);

    const ModelConfig& config() const { return config_; }
    std::size_t node_feature_dim() const { return node_dim_; }
    std::size_t edge_feature_dim() const { return edge_dim_; }

    /// Node features after the no_uscores ablation drops the U-score columns.
    Matrix model_node_features(const PlanSample& sample) const;

    /// Logits (1 x n_classes) or a 1 x 1 regression output.
    ad::Var forward(ad::Tape& tape, const PlanSample& sample, bool train, std::mt19937_64& rng,
                    AttentionWeights* attention = nullptr);

    /// `layers` steps of Z <- relu(A_hat Z Theta), then max over nodes.
    ad::Var gcn_branch(ad::Tape& tape, ad::Var x, const SparseMatrix& norm_adjacency);
    /// GMP(MLP2(Q * MLP1(Q^T X))).
    ad::Var hyper_branch(ad::Tape& tape, ad::Var x, const SparseMatrix& incidence,
                         std::vector<MlpBlock>& inner, std::vector<MlpBlock>& outer);
    ad::Var hyperedge_branch(ad::Tape& tape, ad::Var x_nodes, const SparseMatrix& q_e);
    ad::Var hypernode_branch(ad::Tape& tape, ad::Var x_edges, const SparseMatrix& q_v);
    /// alpha_i = softmax_i(Upsilon tanh(Xi z_i)); returns sum_i alpha_i z_i.
    ad::Var attention_fuse(ad::Tape& tape, std::span<const ad::Var> embeddings,
                           AttentionWeights* attention = nullptr);
    ad::Var head(ad::Tape& tape, ad::Var z, bool train, std::mt19937_64& rng);

    /// Fixed order: gcn, hyperedge, hypernode, head blocks, then attention.
    std::vector<ad::Parameter*> parameters();
    std::vector<const ad::Parameter*> parameters() const;

    std::vector<ad::Parameter>& gcn_weights() { return gcn_; }
    std::vector<MlpBlock>& hyperedge_inner() { return he_inner_; }
    std::vector<MlpBlock>& hyperedge_outer() { return he_outer_; }
    std::vector<MlpBlock>& hypernode_inner() { return hn_inner_; }
    std::vector<MlpBlock>& hypernode_outer() { return hn_outer_; }
    ad::Parameter& attention_projection() { return xi_; }
    ad::Parameter& attention_vector() { return upsilon_; }

private:
    ad::Var mlp(ad::Tape& tape, ad::Var x, std::vector<MlpBlock>& blocks);

    ModelConfig config_;
    std::size_t node_dim_;
    std::size_t edge_dim_;
    std::vector<ad::Parameter> gcn_;
    std::vector<MlpBlock> he_inner_, he_outer_;
    std::vector<MlpBlock> hn_inner_, hn_outer_;
    ad::Parameter xi_;
    ad::Parameter upsilon_;
    std::vector<MlpBlock> head_;
};

} // namespace gridres
