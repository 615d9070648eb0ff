#pragma once

#include "gridres/matrix.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace gridres::ad {

/// A learnable matrix with its accumulated gradient.
struct Parameter {
    std::string name;
    Matrix value;
    Matrix grad;

    Parameter() = default;
    Parameter(std::string n, Matrix v) : name(std::move(n)), value(std::move(v)), grad(value.rows(), value.cols()) {}

    void zero_grad() { grad = Matrix(value.rows(), value.cols()); }
};

/// Glorot-uniform initialization, U(-a, a) with a = sqrt(6 / (rows + cols)).
Matrix glorot_uniform(std::size_t rows, std::size_t cols, std::mt19937_64& rng);

class Tape;

/// Handle to a value recorded on a Tape.
struct Var {
    Tape* tape = nullptr;
    std::size_t id = 0;

    const Matrix& value() const;
    const Matrix& grad() const;
    std::size_t rows() const { return value().rows(); }
    std::size_t cols() const { return value().cols(); }
};

/// Reverse-mode recording of one computation. Values are kept until the tape
/// is destroyed; backward() propagates from a 1x1 output and adds parameter
/// gradients into Parameter::grad.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var constant(Matrix value);
    Var param(Parameter& p);

    void backward(Var output);

    const Matrix& value(std::size_t id) const { return nodes_[id].value; }
    const Matrix& grad(std::size_t id) const { return nodes_[id].grad; }
    std::size_t size() const { return nodes_.size(); }

    // Used by op implementations.
    using Backward = std::function<void(Tape&, std::size_t self)>;
    Var record(Matrix value, Backward backward, const char* op);
    Matrix& grad_mut(std::size_t id);

private:
    struct Node {
        Matrix value;
        Matrix grad;
        Backward backward;
        Parameter* param = nullptr;
    };
    std::vector<Node> nodes_;
};

Var matmul(Var a, Var b);
/// Constant sparse operator times a variable. `op` must outlive the tape.
Var spmm(const SparseMatrix& op, Var x);
/// op^T * x
Var spmm_t(const SparseMatrix& op, Var x);
Var add(Var a, Var b);
/// a + bias, with `bias` a 1 x cols row broadcast over every row of `a`.
Var add_row(Var a, Var bias);
Var scale(Var a, double s);
Var transpose(Var a);
Var relu(Var a);
Var tanh(Var a);
/// Row-wise softmax.
Var softmax_rows(Var a);
/// Inverted dropout; identity when !train or p == 0.
Var dropout(Var a, double p, bool train, std::mt19937_64& rng);
/// Column-wise max over rows: (r x c) -> (1 x c). Gradient goes to the
/// lowest-index maximizer.
Var max_pool_rows(Var a);
Var concat_rows(std::span<const Var> parts);
Var concat_cols(std::span<const Var> parts);
Var sum(Var a);

/// Softmax cross-entropy of a 1 x C logit row against `label`.
Var cross_entropy(Var logits, std::size_t label);
/// Mean squared error against a constant target of the same shape.
Var mse(Var prediction, const Matrix& target);

struct GradCheckResult {
    double max_relative_error = 0.0;
    std::size_t coordinates_checked = 0;
    std::size_t kinks_skipped = 0;
};

/// Compares reverse-mode gradients of `loss` with central differences.
/// Relative error per coordinate is |g - fd| / (|g| + |fd| + 1e-12).
/// Coordinates where the one-sided differences disagree (a ReLU or max kink
/// within delta) are skipped and counted. `max_coords_per_param` limits the
/// number of sampled coordinates per parameter (0 = all).
GradCheckResult gradient_check(const std::function<Var(Tape&)>& loss,
                               std::span<Parameter* const> params, double delta = 1e-5,
                               std::size_t max_coords_per_param = 0, std::uint64_t seed = 0);

/// Bias-corrected Adam.
class Adam {
public:
    explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

    /// Applies one update using each parameter's grad.
    void step(std::span<Parameter* const> params);

    std::size_t steps() const { return step_; }
    double learning_rate() const { return lr_; }

private:
    double lr_;
    double beta1_;
    double beta2_;
    double eps_;
    std::size_t step_ = 0;
    std::vector<Matrix> m_;
    std::vector<Matrix> v_;
};

} // namespace gridres::ad
