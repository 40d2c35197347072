#pragma once

// Reverse-mode automatic differentiation on a flat tape.
//
// A Tape records primitive ops in execution order; backward() walks the
// nodes once in reverse, accumulating vector-Jacobian products into parent
// gradients and finally into the ParamStore gradient buffers. Tapes are
// single-owner during a forward/backward pass; several tapes may share one
// read-only ParamStore as long as gradient merging is serialized.

#include "mhgin/tensor.hpp"

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace mhgin {

/// Named learnable tensors plus their gradient / optimizer-moment buffers.
/// Insertion order is the canonical (checkpoint) order.
class ParamStore {
public:
    int add(const std::string& name, Tensor value) {
        if (index_.count(name))
            throw std::invalid_argument("param already registered: " + name);
        const int id = static_cast<int>(values_.size());
        index_.emplace(name, id);
        names_.push_back(name);
        grads_.emplace_back(value.rows, value.cols);
        m_.emplace_back(value.rows, value.cols);
        v_.emplace_back(value.rows, value.cols);
        values_.push_back(std::move(value));
        return id;
    }

    int id(const std::string& name) const {
        auto it = index_.find(name);
        if (it == index_.end()) throw std::invalid_argument("unknown param: " + name);
        return it->second;
    }
    bool contains(const std::string& name) const { return index_.count(name) != 0; }

    int count() const { return static_cast<int>(values_.size()); }
    const std::string& name(int id) const { return names_[id]; }
    Tensor& value(int id) { return values_[id]; }
    const Tensor& value(int id) const { return values_[id]; }
    Tensor& value(const std::string& name) { return values_[id(name)]; }
    const Tensor& value(const std::string& name) const { return values_[id(name)]; }
    Tensor& grad(int id) { return grads_[id]; }
    const Tensor& grad(int id) const { return grads_[id]; }
    Tensor& moment1(int id) { return m_[id]; }
    Tensor& moment2(int id) { return v_[id]; }

    void zero_grads() {
        for (auto& g : grads_) std::fill(g.data.begin(), g.data.end(), 0.0);
    }

    std::size_t scalar_count() const {
        std::size_t n = 0;
        for (const auto& t : values_) n += t.data.size();
        return n;
    }

private:
    std::vector<std::string> names_;
    std::unordered_map<std::string, int> index_;
    std::vector<Tensor> values_, grads_, m_, v_;
};

struct Var {
    int idx = -1;
    bool valid() const { return idx >= 0; }
};

class Tape {
public:
    enum class Op : std::uint8_t {
        Const, Param,
        MatMul, Add, Sub, Mul, Div,
        ScaleC, AddC, ScaleV,
        Concat, Slice, StackRows, Row, Transpose, Reshape,
        Tanh, Sigmoid, Relu, Silu, Softplus, Softmax,
        L2Norm, Sum, Mean,
        Log, Exp, Sin, Cos, Sqrt, Asin, Atan2,
        Clamp, Wrap,
    };

    explicit Tape(ParamStore* params = nullptr, bool record_grads = true)
        : params_(params), record_grads_(record_grads) {}

    void reset() {
        nodes_.clear();
        nary_.clear();
    }

    std::size_t node_count() const { return nodes_.size(); }
    const Tensor& value(Var v) const { return nodes_[v.idx].value; }
    double scalar(Var v) const {
        const Tensor& t = nodes_[v.idx].value;
        if (t.size() != 1)
            throw std::invalid_argument("scalar() on tensor of shape " + t.shape_str());
        return t.data[0];
    }
    const Tensor& grad(Var v) const { return nodes_[v.idx].grad; }

    // ---- leaves ------------------------------------------------------

    Var constant(Tensor t) { return push(Op::Const, std::move(t), -1, -1, false); }
    Var scalar_const(double v) { return constant(Tensor::scalar(v)); }

    Var param(int param_id) {
        if (!params_) throw std::logic_error("tape has no parameter store");
        Var v = push(Op::Param, params_->value(param_id), -1, -1, record_grads_);
        nodes_[v.idx].i0 = param_id;
        return v;
    }
    Var param(const std::string& name) { return param(params_->id(name)); }

    // ---- arithmetic --------------------------------------------------

    Var matmul(Var a, Var b) {
        Tensor out = mhgin::matmul(val(a), val(b));
        return push(Op::MatMul, std::move(out), a.idx, b.idx);
    }
    Var add(Var a, Var b) {
        require_same_shape(val(a), val(b), "add");
        Tensor out = val(a);
        for (int i = 0; i < out.size(); ++i) out[i] += val(b)[i];
        return push(Op::Add, std::move(out), a.idx, b.idx);
    }
    Var sub(Var a, Var b) {
        require_same_shape(val(a), val(b), "sub");
        Tensor out = val(a);
        for (int i = 0; i < out.size(); ++i) out[i] -= val(b)[i];
        return push(Op::Sub, std::move(out), a.idx, b.idx);
    }
    Var mul(Var a, Var b) {
        require_same_shape(val(a), val(b), "mul");
        Tensor out = val(a);
        for (int i = 0; i < out.size(); ++i) out[i] *= val(b)[i];
        return push(Op::Mul, std::move(out), a.idx, b.idx);
    }
    Var div(Var a, Var b) {
        require_same_shape(val(a), val(b), "div");
        Tensor out = val(a);
        for (int i = 0; i < out.size(); ++i) out[i] /= val(b)[i];
        return push(Op::Div, std::move(out), a.idx, b.idx);
    }
    Var scale(Var a, double c) {
        Tensor out = val(a);
        for (double& x : out.data) x *= c;
        Var v = push(Op::ScaleC, std::move(out), a.idx, -1);
        nodes_[v.idx].a0 = c;
        return v;
    }
    Var add_const(Var a, double c) {
        Tensor out = val(a);
        for (double& x : out.data) x += c;
        Var v = push(Op::AddC, std::move(out), a.idx, -1);
        nodes_[v.idx].a0 = c;
        return v;
    }
    /// Multiplies tensor `a` by the 1x1 variable `s`.
    Var scale_by(Var a, Var s) {
        if (val(s).size() != 1)
            throw std::invalid_argument("scale_by: scalar operand has shape " +
                                        val(s).shape_str());
        const double sv = val(s)[0];
        Tensor out = val(a);
        for (double& x : out.data) x *= sv;
        return push(Op::ScaleV, std::move(out), a.idx, s.idx);
    }

    // ---- structure ---------------------------------------------------

    Var concat(std::span<const Var> parts) {
        int n = 0;
        for (Var p : parts) {
            if (val(p).cols != 1)
                throw std::invalid_argument("concat expects column vectors, got " +
                                            val(p).shape_str());
            n += val(p).rows;
        }
        Tensor out(n, 1);
        int off = 0;
        bool ng = false;
        for (Var p : parts) {
            const Tensor& t = val(p);
            std::copy(t.data.begin(), t.data.end(), out.data.begin() + off);
            off += t.rows;
            ng = ng || needs(p);
        }
        Var v = push_nary(Op::Concat, std::move(out), parts, ng);
        return v;
    }
    Var concat(std::initializer_list<Var> parts) {
        return concat(std::span<const Var>(parts.begin(), parts.size()));
    }

    Var slice(Var a, int offset, int len) {
        const Tensor& t = val(a);
        if (t.cols != 1 || offset < 0 || offset + len > t.rows)
            throw std::invalid_argument("slice [" + std::to_string(offset) + ", +" +
                                        std::to_string(len) + ") out of range for " +
                                        t.shape_str());
        Tensor out(len, 1);
        std::copy(t.data.begin() + offset, t.data.begin() + offset + len, out.data.begin());
        Var v = push(Op::Slice, std::move(out), a.idx, -1);
        nodes_[v.idx].i0 = offset;
        return v;
    }

    /// Stacks column vectors as the rows of a new matrix.
    Var stack_rows(std::span<const Var> rows) {
        if (rows.empty()) throw std::invalid_argument("stack_rows: no rows");
        const int d = val(rows[0]).rows;
        Tensor out(static_cast<int>(rows.size()), d);
        bool ng = false;
        for (std::size_t r = 0; r < rows.size(); ++r) {
            const Tensor& t = val(rows[r]);
            if (t.cols != 1 || t.rows != d)
                throw std::invalid_argument("stack_rows: row " + std::to_string(r) +
                                            " has shape " + t.shape_str());
            std::copy(t.data.begin(), t.data.end(), out.data.begin() + r * d);
            ng = ng || needs(rows[r]);
        }
        return push_nary(Op::StackRows, std::move(out), rows, ng);
    }
    Var stack_rows(std::initializer_list<Var> rows) {
        return stack_rows(std::span<const Var>(rows.begin(), rows.size()));
    }

    /// Extracts row r of a matrix as a column vector.
    Var row(Var m, int r) {
        const Tensor& t = val(m);
        if (r < 0 || r >= t.rows)
            throw std::invalid_argument("row " + std::to_string(r) + " out of range for " +
                                        t.shape_str());
        Tensor out(t.cols, 1);
        for (int j = 0; j < t.cols; ++j) out[j] = t.at(r, j);
        Var v = push(Op::Row, std::move(out), m.idx, -1);
        nodes_[v.idx].i0 = r;
        return v;
    }

    Var transpose(Var a) {
        const Tensor& t = val(a);
        Tensor out(t.cols, t.rows);
        for (int i = 0; i < t.rows; ++i)
            for (int j = 0; j < t.cols; ++j) out.at(j, i) = t.at(i, j);
        return push(Op::Transpose, std::move(out), a.idx, -1);
    }

    Var reshape(Var a, int rows, int cols) {
        const Tensor& t = val(a);
        if (rows * cols != t.size())
            throw std::invalid_argument("reshape " + t.shape_str() + " -> " +
                                        std::to_string(rows) + "x" + std::to_string(cols));
        Tensor out(rows, cols, t.data);
        return push(Op::Reshape, std::move(out), a.idx, -1);
    }

    // ---- nonlinearities ----------------------------------------------

    Var tanh_(Var a) { return map(Op::Tanh, a, [](double x) { return std::tanh(x); }); }
    Var sigmoid(Var a) { return map(Op::Sigmoid, a, stable_sigmoid); }
    Var relu(Var a) { return map(Op::Relu, a, [](double x) { return x > 0 ? x : 0.0; }); }
    Var silu(Var a) { return map(Op::Silu, a, [](double x) { return x * stable_sigmoid(x); }); }
    Var softplus(Var a) { return map(Op::Softplus, a, stable_softplus); }
    Var log_(Var a) { return map(Op::Log, a, [](double x) { return std::log(x); }); }
    Var exp_(Var a) { return map(Op::Exp, a, [](double x) { return std::exp(x); }); }
    Var sin_(Var a) { return map(Op::Sin, a, [](double x) { return std::sin(x); }); }
    Var cos_(Var a) { return map(Op::Cos, a, [](double x) { return std::cos(x); }); }
    Var sqrt_(Var a) { return map(Op::Sqrt, a, [](double x) { return std::sqrt(x); }); }
    Var asin_(Var a) { return map(Op::Asin, a, [](double x) { return std::asin(x); }); }

    Var atan2_(Var y, Var x) {
        require_same_shape(val(y), val(x), "atan2");
        Tensor out = val(y);
        for (int i = 0; i < out.size(); ++i) {
            const double yy = val(y)[i], xx = val(x)[i];
            if (yy == 0.0 && xx == 0.0)
                throw std::domain_error("atan2 undefined at the origin");
            out[i] = std::atan2(yy, xx);
        }
        return push(Op::Atan2, std::move(out), y.idx, x.idx);
    }

    Var softmax(Var a) {
        const Tensor& t = val(a);
        if (t.cols != 1) throw std::invalid_argument("softmax expects a column vector");
        Tensor out(t.rows, 1);
        double mx = t[0];
        for (int i = 1; i < t.rows; ++i) mx = std::max(mx, t[i]);
        double z = 0.0;
        for (int i = 0; i < t.rows; ++i) {
            out[i] = std::exp(t[i] - mx);
            z += out[i];
        }
        for (int i = 0; i < t.rows; ++i) out[i] /= z;
        return push(Op::Softmax, std::move(out), a.idx, -1);
    }

    Var l2norm(Var a) {
        Tensor out = Tensor::scalar(frobenius_norm(val(a)));
        return push(Op::L2Norm, std::move(out), a.idx, -1);
    }

    Var sum(Var a) {
        double s = 0.0;
        for (double x : val(a).data) s += x;
        return push(Op::Sum, Tensor::scalar(s), a.idx, -1);
    }
    Var mean(Var a) {
        double s = 0.0;
        for (double x : val(a).data) s += x;
        return push(Op::Mean, Tensor::scalar(s / val(a).size()), a.idx, -1);
    }

    Var clamp(Var a, double lo, double hi) {
        Tensor out = val(a);
        for (double& x : out.data) x = std::min(hi, std::max(lo, x));
        Var v = push(Op::Clamp, std::move(out), a.idx, -1);
        nodes_[v.idx].a0 = lo;
        nodes_[v.idx].a1 = hi;
        return v;
    }

    /// Wraps into [low, low + period). The subtracted multiple of `period` is
    /// locally constant, so the gradient passes through unchanged.
    Var wrap(Var a, double low, double period) {
        Tensor out = val(a);
        for (double& x : out.data) {
            x = std::fmod(x - low, period);
            if (x < 0) x += period;
            x += low;
        }
        Var v = push(Op::Wrap, std::move(out), a.idx, -1);
        nodes_[v.idx].a0 = low;
        nodes_[v.idx].a1 = period;
        return v;
    }

    // ---- backward ----------------------------------------------------

    /// Seeds d(loss)/d(loss) = 1 and accumulates parameter gradients into the
    /// ParamStore. The reverse sweep visits each node exactly once.
    void backward(Var loss) {
        if (val(loss).size() != 1)
            throw std::invalid_argument("backward expects a scalar loss, got " +
                                        val(loss).shape_str());
        for (double x : val(loss).data)
            if (!std::isfinite(x)) throw std::runtime_error("backward: non-finite loss");
        ensure_grad(loss.idx);
        nodes_[loss.idx].grad[0] = 1.0;
        for (int i = loss.idx; i >= 0; --i) {
            Node& n = nodes_[i];
            if (!n.needs_grad || n.grad.empty()) continue;
            dispatch_backward(i);
        }
    }

private:
    struct Node {
        Tensor value;
        Tensor grad; // lazily allocated
        Op op;
        bool needs_grad = false;
        int p0 = -1, p1 = -1;
        int i0 = 0;          // aux: param id / slice offset / row / nary index
        double a0 = 0, a1 = 0;
    };

    static double stable_sigmoid(double x) {
        if (x >= 0) {
            const double e = std::exp(-x);
            return 1.0 / (1.0 + e);
        }
        const double e = std::exp(x);
        return e / (1.0 + e);
    }
    static double stable_softplus(double x) {
        if (x > 30.0) return x;
        if (x < -30.0) return std::exp(x);
        return std::log1p(std::exp(x));
    }

    const Tensor& val(Var v) const { return nodes_[v.idx].value; }
    bool needs(Var v) const { return nodes_[v.idx].needs_grad; }

    Var push(Op op, Tensor value, int p0, int p1, bool force_needs = false) {
        Node n;
        n.value = std::move(value);
        n.op = op;
        n.p0 = p0;
        n.p1 = p1;
        n.needs_grad = force_needs || (p0 >= 0 && nodes_[p0].needs_grad) ||
                       (p1 >= 0 && nodes_[p1].needs_grad);
        nodes_.push_back(std::move(n));
        return Var{static_cast<int>(nodes_.size()) - 1};
    }

    Var push_nary(Op op, Tensor value, std::span<const Var> parents, bool needs_grad) {
        Node n;
        n.value = std::move(value);
        n.op = op;
        n.needs_grad = needs_grad;
        n.i0 = static_cast<int>(nary_.size());
        nary_.emplace_back();
        nary_.back().reserve(parents.size());
        for (Var p : parents) nary_.back().push_back(p.idx);
        nodes_.push_back(std::move(n));
        return Var{static_cast<int>(nodes_.size()) - 1};
    }

    template <class F>
    Var map(Op op, Var a, F f) {
        Tensor out = val(a);
        for (double& x : out.data) x = f(x);
        return push(op, std::move(out), a.idx, -1);
    }

    Tensor& ensure_grad(int idx) {
        Node& n = nodes_[idx];
        if (n.grad.empty()) n.grad = Tensor(n.value.rows, n.value.cols);
        return n.grad;
    }
    // Gradient sink for a parent: allocated only if that parent participates.
    Tensor* parent_grad(int idx) {
        if (idx < 0 || !nodes_[idx].needs_grad) return nullptr;
        return &ensure_grad(idx);
    }

    void dispatch_backward(int i) {
        Node& n = nodes_[i];
        const Tensor& g = n.grad;
        switch (n.op) {
        case Op::Const:
            break;
        case Op::Param: {
            Tensor& pg = params_->grad(n.i0);
            for (int k = 0; k < g.size(); ++k) pg[k] += g[k];
            break;
        }
        case Op::MatMul: {
            const Tensor& a = nodes_[n.p0].value;
            const Tensor& b = nodes_[n.p1].value;
            if (Tensor* ga = parent_grad(n.p0)) matmul_into(*ga, g, b, false, true, true);
            if (Tensor* gb = parent_grad(n.p1)) matmul_into(*gb, a, g, true, false, true);
            break;
        }
        case Op::Add: {
            if (Tensor* ga = parent_grad(n.p0))
                for (int k = 0; k < g.size(); ++k) (*ga)[k] += g[k];
            if (Tensor* gb = parent_grad(n.p1))
                for (int k = 0; k < g.size(); ++k) (*gb)[k] += g[k];
            break;
        }
        case Op::Sub: {
            if (Tensor* ga = parent_grad(n.p0))
                for (int k = 0; k < g.size(); ++k) (*ga)[k] += g[k];
            if (Tensor* gb = parent_grad(n.p1))
                for (int k = 0; k < g.size(); ++k) (*gb)[k] -= g[k];
            break;
        }
        case Op::Mul: {
            const Tensor& a = nodes_[n.p0].value;
            const Tensor& b = nodes_[n.p1].value;
            if (Tensor* ga = parent_grad(n.p0))
                for (int k = 0; k < g.size(); ++k) (*ga)[k] += g[k] * b[k];
            if (Tensor* gb = parent_grad(n.p1))
                for (int k = 0; k < g.size(); ++k) (*gb)[k] += g[k] * a[k];
            break;
        }
        case Op::Div: {
            const Tensor& a = nodes_[n.p0].value;
            const Tensor& b = nodes_[n.p1].value;
            if (Tensor* ga = parent_grad(n.p0))
                for (int k = 0; k < g.size(); ++k) (*ga)[k] += g[k] / b[k];
            if (Tensor* gb = parent_grad(n.p1))
                for (int k = 0; k < g.size(); ++k) (*gb)[k] -= g[k] * a[k] / (b[k] * b[k]);
            break;
        }
        case Op::ScaleC: {
            if (Tensor* ga = parent_grad(n.p0))
                for (int k = 0; k < g.size(); ++k) (*ga)[k] += g[k] * n.a0;
            break;
        }
        case Op::AddC: {
            if (Tensor* ga = parent_grad(n.p0))
                for (int k = 0; k < g.size(); ++k) (*ga)[k] += g[k];
            break;
        }
        case Op::ScaleV: {
            const Tensor& a = nodes_[n.p0].value;
            const double s = nodes_[n.p1].value[0];
            if (Tensor* ga = parent_grad(n.p0))
                for (int k = 0; k < g.size(); ++k) (*ga)[k] += g[k] * s;
            if (Tensor* gs = parent_grad(n.p1)) {
                double acc = 0.0;
                for (int k = 0; k < g.size(); ++k) acc += g[k] * a[k];
                (*gs)[0] += acc;
            }
            break;
        }
        case Op::Concat: {
            int off = 0;
            for (int pidx : nary_[n.i0]) {
                const int len = nodes_[pidx].value.rows;
                if (Tensor* gp = parent_grad(pidx))
                    for (int k = 0; k < len; ++k) (*gp)[k] += g[off + k];
                off += len;
            }
            break;
        }
        case Op::Slice: {
            if (Tensor* ga = parent_grad(n.p0))
                for (int k = 0; k < g.size(); ++k) (*ga)[n.i0 + k] += g[k];
            break;
        }
        case Op::StackRows: {
            const int d = n.value.cols;
            int r = 0;
            for (int pidx : nary_[n.i0]) {
                if (Tensor* gp = parent_grad(pidx))
                    for (int k = 0; k < d; ++k) (*gp)[k] += g[r * d + k];
                ++r;
            }
            break;
        }
        case Op::Row: {
            if (Tensor* ga = parent_grad(n.p0))
                for (int k = 0; k < g.size(); ++k) ga->at(n.i0, k) += g[k];
            break;
        }
        case Op::Transpose: {
            if (Tensor* ga = parent_grad(n.p0))
                for (int i2 = 0; i2 < g.rows; ++i2)
                    for (int j = 0; j < g.cols; ++j) ga->at(j, i2) += g.at(i2, j);
            break;
        }
        case Op::Reshape: {
            if (Tensor* ga = parent_grad(n.p0))
                for (int k = 0; k < g.size(); ++k) (*ga)[k] += g[k];
            break;
        }
        case Op::Tanh: {
            if (Tensor* ga = parent_grad(n.p0))
                for (int k = 0; k < g.size(); ++k)
                    (*ga)[k] += g[k] * (1.0 - n.value[k] * n.value[k]);
            break;
        }
        case Op::Sigmoid: {
            if (Tensor* ga = parent_grad(n.p0))
                for (int k = 0; k < g.size(); ++k)
                    (*ga)[k] += g[k] * n.value[k] * (1.0 - n.value[k]);
            break;
        }
        case Op::Relu: {
            const Tensor& a = nodes_[n.p0].value;
            if (Tensor* ga = parent_grad(n.p0))
                for (int k = 0; k < g.size(); ++k) (*ga)[k] += a[k] > 0 ? g[k] : 0.0;
            break;
        }
        case Op::Silu: {
            const Tensor& a = nodes_[n.p0].value;
            if (Tensor* ga = parent_grad(n.p0))
                for (int k = 0; k < g.size(); ++k) {
                    const double s = stable_sigmoid(a[k]);
                    (*ga)[k] += g[k] * s * (1.0 + a[k] * (1.0 - s));
                }
            break;
        }
        case Op::Softplus: {
            const Tensor& a = nodes_[n.p0].value;
            if (Tensor* ga = parent_grad(n.p0))
                for (int k = 0; k < g.size(); ++k) (*ga)[k] += g[k] * stable_sigmoid(a[k]);
            break;
        }
        case Op::Softmax: {
            if (Tensor* ga = parent_grad(n.p0)) {
                double dot = 0.0;
                for (int k = 0; k < g.size(); ++k) dot += g[k] * n.value[k];
                for (int k = 0; k < g.size(); ++k)
                    (*ga)[k] += n.value[k] * (g[k] - dot);
            }
            break;
        }
        case Op::L2Norm: {
            if (Tensor* ga = parent_grad(n.p0)) {
                const Tensor& a = nodes_[n.p0].value;
                const double norm = std::max(n.value[0], 1e-12);
                const double gs = g[0] / norm;
                for (int k = 0; k < a.size(); ++k) (*ga)[k] += gs * a[k];
            }
            break;
        }
        case Op::Sum: {
            if (Tensor* ga = parent_grad(n.p0))
                for (int k = 0; k < ga->size(); ++k) (*ga)[k] += g[0];
            break;
        }
        case Op::Mean: {
            if (Tensor* ga = parent_grad(n.p0)) {
                const double gs = g[0] / ga->size();
                for (int k = 0; k < ga->size(); ++k) (*ga)[k] += gs;
            }
            break;
        }
        case Op::Log: {
            const Tensor& a = nodes_[n.p0].value;
            if (Tensor* ga = parent_grad(n.p0))
                for (int k = 0; k < g.size(); ++k) (*ga)[k] += g[k] / a[k];
            break;
        }
        case Op::Exp: {
            if (Tensor* ga = parent_grad(n.p0))
                for (int k = 0; k < g.size(); ++k) (*ga)[k] += g[k] * n.value[k];
            break;
        }
        case Op::Sin: {
            const Tensor& a = nodes_[n.p0].value;
            if (Tensor* ga = parent_grad(n.p0))
                for (int k = 0; k < g.size(); ++k) (*ga)[k] += g[k] * std::cos(a[k]);
            break;
        }
        case Op::Cos: {
            const Tensor& a = nodes_[n.p0].value;
            if (Tensor* ga = parent_grad(n.p0))
                for (int k = 0; k < g.size(); ++k) (*ga)[k] -= g[k] * std::sin(a[k]);
            break;
        }
        case Op::Sqrt: {
            if (Tensor* ga = parent_grad(n.p0))
                for (int k = 0; k < g.size(); ++k)
                    (*ga)[k] += g[k] * 0.5 / std::max(n.value[k], 1e-12);
            break;
        }
        case Op::Asin: {
            const Tensor& a = nodes_[n.p0].value;
            if (Tensor* ga = parent_grad(n.p0))
                for (int k = 0; k < g.size(); ++k) {
                    const double x = std::min(1.0 - 1e-12, std::max(-1.0 + 1e-12, a[k]));
                    (*ga)[k] += g[k] / std::sqrt(1.0 - x * x);
                }
            break;
        }
        case Op::Atan2: {
            const Tensor& y = nodes_[n.p0].value;
            const Tensor& x = nodes_[n.p1].value;
            if (Tensor* gy = parent_grad(n.p0))
                for (int k = 0; k < g.size(); ++k)
                    (*gy)[k] += g[k] * x[k] / (x[k] * x[k] + y[k] * y[k]);
            if (Tensor* gx = parent_grad(n.p1))
                for (int k = 0; k < g.size(); ++k)
                    (*gx)[k] -= g[k] * y[k] / (x[k] * x[k] + y[k] * y[k]);
            break;
        }
        case Op::Clamp: {
            const Tensor& a = nodes_[n.p0].value;
            if (Tensor* ga = parent_grad(n.p0))
                for (int k = 0; k < g.size(); ++k)
                    if (a[k] >= n.a0 && a[k] <= n.a1) (*ga)[k] += g[k];
            break;
        }
        case Op::Wrap: {
            if (Tensor* ga = parent_grad(n.p0))
                for (int k = 0; k < g.size(); ++k) (*ga)[k] += g[k];
            break;
        }
        }
    }

    ParamStore* params_;
    bool record_grads_;
    std::vector<Node> nodes_;
    std::vector<std::vector<int>> nary_;
};

} // namespace mhgin
