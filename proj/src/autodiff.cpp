#include "gridres/autodiff.hpp"

#include "gridres/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace gridres::ad {

Matrix glorot_uniform(std::size_t rows, std::size_t cols, std::mt19937_64& rng)
{
    const double a = std::sqrt(6.0 / static_cast<double>(rows + cols));
    Matrix m(rows, cols);
    for (double& x : m.data()) x = (static_cast<double>(rng() >> 11) * 0x1.0p-53 * 2.0 - 1.0) * a;
    return m;
}

const Matrix& Var::value() const { return tape->value(id); }
const Matrix& Var::grad() const { return tape->grad(id); }

Var Tape::constant(Matrix value)
{
    return record(std::move(value), nullptr, "constant");
}

Var Tape::param(Parameter& p)
{
    Var v = record(p.value, nullptr, "param");
    nodes_[v.id].param = &p;
    return v;
}

Var Tape::record(Matrix value, Backward backward, const char* op)
{
    if (!value.all_finite()) throw NonFiniteValue(std::string(op) + ": non-finite value");
    nodes_.push_back({std::move(value), Matrix(), std::move(backward), nullptr});
    return Var{this, nodes_.size() - 1};
}

Matrix& Tape::grad_mut(std::size_t id)
{
    Node& node = nodes_[id];
    if (node.grad.empty() && !node.value.empty()) node.grad = Matrix(node.value.rows(), node.value.cols());
    return node.grad;
}

void Tape::backward(Var output)
{
    if (output.tape != this) throw std::invalid_argument("backward: variable from another tape");
    if (value(output.id).size() != 1) throw ShapeMismatch("backward: output must be 1x1");
    grad_mut(output.id)(0, 0) = 1.0;
    for (std::size_t i = output.id + 1; i-- > 0;) {
        Node& node = nodes_[i];
        if (node.grad.empty()) continue;
        if (node.backward) node.backward(*this, i);
        if (node.param) {
            Matrix& acc = node.param->grad;
            if (!acc.same_shape(node.grad)) acc = Matrix(node.grad.rows(), node.grad.cols());
            for (std::size_t k = 0; k < acc.size(); ++k) acc.data()[k] += node.grad.data()[k];
        }
    }
}

namespace {

void require_same_tape(Var a, Var b)
{
    if (a.tape != b.tape || a.tape == nullptr) throw std::invalid_argument("variables on different tapes");
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* op)
{
    if (!a.same_shape(b))
        throw ShapeMismatch(std::string(op) + ": " + shape_string(a) + " vs " + shape_string(b));
}

void accumulate(Matrix& into, const Matrix& g, double factor = 1.0)
{
    for (std::size_t k = 0; k < into.size(); ++k) into.data()[k] += factor * g.data()[k];
}

} // namespace

Var matmul(Var a, Var b)
{
    require_same_tape(a, b);
    Matrix out;
    gemm(a.value(), false, b.value(), false, out);
    const std::size_t ia = a.id, ib = b.id;
    return a.tape->record(std::move(out), [ia, ib](Tape& t, std::size_t self) {
        const Matrix& g = t.grad(self);
        Matrix& ga = t.grad_mut(ia);
        gemm(g, false, t.value(ib), true, ga, true);
        Matrix& gb = t.grad_mut(ib);
        gemm(t.value(ia), true, g, false, gb, true);
    }, "matmul");
}

Var spmm(const SparseMatrix& op, Var x)
{
    if (op.cols() != x.rows()) throw ShapeMismatch("spmm: operator columns do not match input rows");
    const std::size_t ix = x.id;
    const SparseMatrix* p = &op;
    return x.tape->record(op.multiply(x.value()), [ix, p](Tape& t, std::size_t self) {
        p->transpose_multiply_add(t.grad(self), t.grad_mut(ix));
    }, "spmm");
}

Var spmm_t(const SparseMatrix& op, Var x)
{
    if (op.rows() != x.rows()) throw ShapeMismatch("spmm_t: operator rows do not match input rows");
    const std::size_t ix = x.id;
    const SparseMatrix* p = &op;
    return x.tape->record(op.transpose_multiply(x.value()), [ix, p](Tape& t, std::size_t self) {
        p->multiply_add(t.grad(self), t.grad_mut(ix));
    }, "spmm_t");
}

Var add(Var a, Var b)
{
    require_same_tape(a, b);
    require_same_shape(a.value(), b.value(), "add");
    Matrix out = a.value();
    accumulate(out, b.value());
    const std::size_t ia = a.id, ib = b.id;
    return a.tape->record(std::move(out), [ia, ib](Tape& t, std::size_t self) {
        accumulate(t.grad_mut(ia), t.grad(self));
        accumulate(t.grad_mut(ib), t.grad(self));
    }, "add");
}

Var add_row(Var a, Var bias)
{
    require_same_tape(a, bias);
    if (bias.rows() != 1 || bias.cols() != a.cols())
        throw ShapeMismatch("add_row: bias " + shape_string(bias.value()) + " for " + shape_string(a.value()));
    Matrix out = a.value();
    const Matrix& b = bias.value();
    for (std::size_t r = 0; r < out.rows(); ++r)
        for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) += b(0, c);
    const std::size_t ia = a.id, ib = bias.id;
    return a.tape->record(std::move(out), [ia, ib](Tape& t, std::size_t self) {
        const Matrix& g = t.grad(self);
        accumulate(t.grad_mut(ia), g);
        Matrix& gb = t.grad_mut(ib);
        for (std::size_t r = 0; r < g.rows(); ++r)
            for (std::size_t c = 0; c < g.cols(); ++c) gb(0, c) += g(r, c);
    }, "add_row");
}

Var scale(Var a, double s)
{
    Matrix out = a.value();
    for (double& x : out.data()) x *= s;
    const std::size_t ia = a.id;
    return a.tape->record(std::move(out), [ia, s](Tape& t, std::size_t self) {
        accumulate(t.grad_mut(ia), t.grad(self), s);
    }, "scale");
}

Var transpose(Var a)
{
    const std::size_t ia = a.id;
    return a.tape->record(a.value().transposed(), [ia](Tape& t, std::size_t self) {
        accumulate(t.grad_mut(ia), t.grad(self).transposed());
    }, "transpose");
}

Var relu(Var a)
{
    Matrix out = a.value();
    for (double& x : out.data()) x = x > 0.0 ? x : 0.0;
    const std::size_t ia = a.id;
    return a.tape->record(std::move(out), [ia](Tape& t, std::size_t self) {
        const Matrix& g = t.grad(self);
        const Matrix& x = t.value(ia);
        Matrix& ga = t.grad_mut(ia);
        for (std::size_t k = 0; k < g.size(); ++k)
            if (x.data()[k] > 0.0) ga.data()[k] += g.data()[k];
    }, "relu");
}

Var tanh(Var a)
{
    Matrix out = a.value();
    for (double& x : out.data()) x = std::tanh(x);
    const std::size_t ia = a.id;
    return a.tape->record(std::move(out), [ia](Tape& t, std::size_t self) {
        const Matrix& g = t.grad(self);
        const Matrix& y = t.value(self);
        Matrix& ga = t.grad_mut(ia);
        for (std::size_t k = 0; k < g.size(); ++k) {
            const double yk = y.data()[k];
            ga.data()[k] += g.data()[k] * (1.0 - yk * yk);
        }
    }, "tanh");
}

Var softmax_rows(Var a)
{
    Matrix out = a.value();
    for (std::size_t r = 0; r < out.rows(); ++r) {
        auto row = out.row(r);
        const double mx = *std::max_element(row.begin(), row.end());
        double total = 0.0;
        for (double& x : row) {
            x = std::exp(x - mx);
            total += x;
        }
        for (double& x : row) x /= total;
    }
    const std::size_t ia = a.id;
    return a.tape->record(std::move(out), [ia](Tape& t, std::size_t self) {
        const Matrix& g = t.grad(self);
        const Matrix& y = t.value(self);
        Matrix& ga = t.grad_mut(ia);
        for (std::size_t r = 0; r < y.rows(); ++r) {
            double dot = 0.0;
            for (std::size_t c = 0; c < y.cols(); ++c) dot += g(r, c) * y(r, c);
            for (std::size_t c = 0; c < y.cols(); ++c) ga(r, c) += y(r, c) * (g(r, c) - dot);
        }
    }, "softmax_rows");
}

Var dropout(Var a, double p, bool train, std::mt19937_64& rng)
{
    if (!(p >= 0.0 && p < 1.0)) throw std::invalid_argument("dropout: p must lie in [0, 1)");
    if (!train || p == 0.0) return a;
    const double keep_scale = 1.0 / (1.0 - p);
    Matrix mask(a.rows(), a.cols());
    for (double& m : mask.data())
        m = (static_cast<double>(rng() >> 11) * 0x1.0p-53) < p ? 0.0 : keep_scale;
    Matrix out = a.value();
    for (std::size_t k = 0; k < out.size(); ++k) out.data()[k] *= mask.data()[k];
    const std::size_t ia = a.id;
    return a.tape->record(std::move(out), [ia, mask = std::move(mask)](Tape& t, std::size_t self) {
        const Matrix& g = t.grad(self);
        Matrix& ga = t.grad_mut(ia);
        for (std::size_t k = 0; k < g.size(); ++k) ga.data()[k] += g.data()[k] * mask.data()[k];
    }, "dropout");
}

Var max_pool_rows(Var a)
{
    const Matrix& x = a.value();
    if (x.rows() == 0) throw ShapeMismatch("max_pool_rows: no rows to pool");
    Matrix out(1, x.cols());
    std::vector<std::size_t> argmax(x.cols(), 0);
    for (std::size_t c = 0; c < x.cols(); ++c) {
        double best = x(0, c);
        for (std::size_t r = 1; r < x.rows(); ++r) {
            if (x(r, c) > best) {
                best = x(r, c);
                argmax[c] = r;
            }
        }
        out(0, c) = best;
    }
    const std::size_t ia = a.id;
    return a.tape->record(std::move(out), [ia, argmax = std::move(argmax)](Tape& t, std::size_t self) {
        const Matrix& g = t.grad(self);
        Matrix& ga = t.grad_mut(ia);
        for (std::size_t c = 0; c < g.cols(); ++c) ga(argmax[c], c) += g(0, c);
    }, "max_pool_rows");
}

Var concat_rows(std::span<const Var> parts)
{
    if (parts.empty()) throw ShapeMismatch("concat_rows: nothing to concatenate");
    const std::size_t cols = parts[0].cols();
    std::size_t rows = 0;
    for (const Var& p : parts) {
        require_same_tape(parts[0], p);
        if (p.cols() != cols) throw ShapeMismatch("concat_rows: column counts differ");
        rows += p.rows();
    }
    Matrix out(rows, cols);
    std::vector<std::size_t> ids;
    std::size_t r0 = 0;
    for (const Var& p : parts) {
        std::copy(p.value().data().begin(), p.value().data().end(),
                  out.data().begin() + static_cast<std::ptrdiff_t>(r0 * cols));
        r0 += p.rows();
        ids.push_back(p.id);
    }
    return parts[0].tape->record(std::move(out), [ids = std::move(ids)](Tape& t, std::size_t self) {
        const Matrix& g = t.grad(self);
        std::size_t offset = 0;
        for (std::size_t id : ids) {
            Matrix& gp = t.grad_mut(id);
            for (std::size_t k = 0; k < gp.size(); ++k) gp.data()[k] += g.data()[offset + k];
            offset += gp.size();
        }
    }, "concat_rows");
}

Var concat_cols(std::span<const Var> parts)
{
    if (parts.empty()) throw ShapeMismatch("concat_cols: nothing to concatenate");
    const std::size_t rows = parts[0].rows();
    std::size_t cols = 0;
    for (const Var& p : parts) {
        require_same_tape(parts[0], p);
        if (p.rows() != rows) throw ShapeMismatch("concat_cols: row counts differ");
        cols += p.cols();
    }
    Matrix out(rows, cols);
    std::vector<std::size_t> ids;
    std::size_t c0 = 0;
    for (const Var& p : parts) {
        const Matrix& v = p.value();
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < v.cols(); ++c) out(r, c0 + c) = v(r, c);
        c0 += v.cols();
        ids.push_back(p.id);
    }
    return parts[0].tape->record(std::move(out), [ids = std::move(ids)](Tape& t, std::size_t self) {
        const Matrix& g = t.grad(self);
        std::size_t offset = 0;
        for (std::size_t id : ids) {
            Matrix& gp = t.grad_mut(id);
            for (std::size_t r = 0; r < gp.rows(); ++r)
                for (std::size_t c = 0; c < gp.cols(); ++c) gp(r, c) += g(r, offset + c);
            offset += gp.cols();
        }
    }, "concat_cols");
}

Var sum(Var a)
{
    const auto& d = a.value().data();
    Matrix out(1, 1, std::accumulate(d.begin(), d.end(), 0.0));
    const std::size_t ia = a.id;
    return a.tape->record(std::move(out), [ia](Tape& t, std::size_t self) {
        const double g = t.grad(self)(0, 0);
        for (double& x : t.grad_mut(ia).data()) x += g;
    }, "sum");
}

Var cross_entropy(Var logits, std::size_t label)
{
    const Matrix& z = logits.value();
    if (z.rows() != 1) throw ShapeMismatch("cross_entropy: logits must be a single row");
    if (label >= z.cols()) throw ShapeMismatch("cross_entropy: label out of range");
    const double mx = *std::max_element(z.data().begin(), z.data().end());
    double total = 0.0;
    for (double x : z.data()) total += std::exp(x - mx);
    const double log_norm = mx + std::log(total);
    Matrix out(1, 1, log_norm - z(0, label));
    const std::size_t il = logits.id;
    return logits.tape->record(std::move(out), [il, label, log_norm](Tape& t, std::size_t self) {
        const double g = t.grad(self)(0, 0);
        const Matrix& zz = t.value(il);
        Matrix& gz = t.grad_mut(il);
        for (std::size_t c = 0; c < zz.cols(); ++c) {
            const double p = std::exp(zz(0, c) - log_norm);
            gz(0, c) += g * (p - (c == label ? 1.0 : 0.0));
        }
    }, "cross_entropy");
}

Var mse(Var prediction, const Matrix& target)
{
    require_same_shape(prediction.value(), target, "mse");
    const Matrix& p = prediction.value();
    double total = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
        const double d = p.data()[k] - target.data()[k];
        total += d * d;
    }
    const double n = static_cast<double>(p.size());
    Matrix out(1, 1, total / n);
    const std::size_t ip = prediction.id;
    return prediction.tape->record(std::move(out), [ip, target, n](Tape& t, std::size_t self) {
        const double g = t.grad(self)(0, 0);
        const Matrix& pv = t.value(ip);
        Matrix& gp = t.grad_mut(ip);
        for (std::size_t k = 0; k < pv.size(); ++k)
            gp.data()[k] += g * 2.0 * (pv.data()[k] - target.data()[k]) / n;
    }, "mse");
}

GradCheckResult gradient_check(const std::function<Var(Tape&)>& loss,
                               std::span<Parameter* const> params, double delta,
                               std::size_t max_coords_per_param, std::uint64_t seed)
{
    for (Parameter* p : params) p->zero_grad();
    {
        Tape tape;
        Var out = loss(tape);
        tape.backward(out);
    }
    std::vector<Matrix> analytic;
    for (Parameter* p : params) analytic.push_back(p->grad);

    auto evaluate = [&]() {
        Tape tape;
        return loss(tape).value()(0, 0);
    };

    GradCheckResult result;
    std::mt19937_64 rng(seed);
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Parameter& p = *params[pi];
        std::vector<std::size_t> coords(p.value.size());
        std::iota(coords.begin(), coords.end(), 0);
        if (max_coords_per_param != 0 && coords.size() > max_coords_per_param) {
            std::shuffle(coords.begin(), coords.end(), rng);
            coords.resize(max_coords_per_param);
        }
        for (std::size_t k : coords) {
            double& x = p.value.data()[k];
            const double original = x;
            x = original + delta;
            const double up = evaluate();
            x = original - delta;
            const double down = evaluate();
            x = original;
            const double mid = evaluate();

            const double fd = (up - down) / (2.0 * delta);
            const double g = analytic[pi].data()[k];
            const double err = std::abs(g - fd) / (std::abs(g) + std::abs(fd) + 1e-12);
            const double forward = (up - mid) / delta;
            const double backward = (mid - down) / delta;
            const double asym = std::abs(forward - backward);
            if (asym > std::abs(g - fd) && asym > 1e-3 * (std::abs(forward) + std::abs(backward)) &&
                err > 1e-6) {
                ++result.kinks_skipped;
                continue;
            }
            result.max_relative_error = std::max(result.max_relative_error, err);
            ++result.coordinates_checked;
        }
    }
    for (std::size_t pi = 0; pi < params.size(); ++pi) params[pi]->grad = analytic[pi];
    return result;
}

void Adam::step(std::span<Parameter* const> params)
{
    if (m_.empty()) {
        for (Parameter* p : params) {
            m_.emplace_back(p->value.rows(), p->value.cols());
            v_.emplace_back(p->value.rows(), p->value.cols());
        }
    }
    if (m_.size() != params.size()) throw ShapeMismatch("adam: parameter list changed between steps");
    ++step_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(step_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        Parameter& p = *params[i];
        if (!p.grad.same_shape(p.value) || !m_[i].same_shape(p.value))
            throw ShapeMismatch("adam: gradient shape differs from parameter '" + p.name + "'");
        auto& m = m_[i].data();
        auto& v = v_[i].data();
        auto& w = p.value.data();
        const auto& g = p.grad.data();
        for (std::size_t k = 0; k < w.size(); ++k) {
            m[k] = beta1_ * m[k] + (1.0 - beta1_) * g[k];
            v[k] = beta2_ * v[k] + (1.0 - beta2_) * g[k] * g[k];
            const double mhat = m[k] / bc1;
            const double vhat = v[k] / bc2;
            w[k] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
        }
    }
}

} // namespace gridres::ad
