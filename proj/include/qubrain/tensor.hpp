#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstddef>
#include <deque>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qubrain/random.hpp"

// Reverse-mode automatic differentiation over dense row-major double tensors.
// A Tape records operations in topological order; backward() traverses the
// record once in reverse.  Trainable values live in Parameter objects that
// persist across tapes; gradients accumulate there until zero_grad().

namespace qubrain::autodiff {

using Shape = std::vector<std::size_t>;

inline std::size_t numel(const Shape& s) {
    std::size_t n = 1;
    for (std::size_t d : s) n *= d;
    return n;
}

inline std::string shape_str(const Shape& s) {
    std::string out = "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += "x";
        out += std::to_string(s[i]);
    }
    return out + "]";
}

[[noreturn]] inline void dim_error(const std::string& op, const Shape& a, const Shape& b) {
    throw std::invalid_argument(op + ": incompatible shapes " + shape_str(a) + " and " + shape_str(b));
}

/// Persistent trainable value.  Gradients accumulate across backward passes.
struct Parameter {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;

    Parameter() = default;
    explicit Parameter(Shape s) : shape(std::move(s)), value(numel(shape), 0.0), grad(numel(shape), 0.0) {}
    Parameter(Shape s, std::vector<double> v) : shape(std::move(s)), value(std::move(v)), grad(value.size(), 0.0) {
        if (value.size() != numel(shape))
            throw std::invalid_argument("Parameter: data length does not match shape " + shape_str(shape));
    }

    static Parameter uniform(Shape s, double lo, double hi, Rng& rng) {
        Parameter p(std::move(s));
        for (double& v : p.value) v = rng.uniform(lo, hi);
        return p;
    }

    std::size_t size() const { return value.size(); }
    void zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }
};

class Tape;

/// Lightweight handle to a node on a Tape; valid only while the tape lives.
class Tensor {
  public:
    Tensor() = default;
    bool valid() const { return tape_ != nullptr; }
    std::size_t id() const { return id_; }
    Tape* tape() const { return tape_; }

    const Shape& shape() const;
    const std::vector<double>& value() const;
    const std::vector<double>& grad() const;

  private:
    friend class Tape;
    Tensor(Tape* t, std::size_t id) : tape_(t), id_(id) {}
    Tape* tape_ = nullptr;
    std::size_t id_ = 0;
};

class Tape {
  public:
    struct Node {
        Shape shape;
        std::vector<double> value;
        std::vector<double> grad;  // sized during backward
        bool requires_grad = false;
        Parameter* param = nullptr;
        std::function<void(Tape&, const std::vector<double>& upstream)> backward;
    };

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Tensor constant(std::vector<double> v, Shape s) {
        check_size(v, s);
        return emplace(std::move(s), std::move(v), false, nullptr, nullptr);
    }
    Tensor constant(double v) { return constant(std::vector<double>{v}, Shape{1}); }
    Tensor zeros(Shape s) {
        const std::size_t n = numel(s);
        return constant(std::vector<double>(n, 0.0), std::move(s));
    }

    /// Differentiable leaf (for gradient checks against inputs).
    Tensor input(std::vector<double> v, Shape s) {
        check_size(v, s);
        return emplace(std::move(s), std::move(v), true, nullptr, nullptr);
    }

    /// Leaf bound to a Parameter; backward() adds into p.grad.
    Tensor param(Parameter& p) {
        return emplace(p.shape, p.value, true, nullptr, &p);
    }

    /// Low-level node construction; `bw` receives this node's upstream gradient.
    Tensor make_node(Shape s, std::vector<double> v, bool requires_grad,
                     std::function<void(Tape&, const std::vector<double>&)> bw) {
        check_size(v, s);
        return emplace(std::move(s), std::move(v), requires_grad, std::move(bw), nullptr);
    }

    Node& node(std::size_t id) { return nodes_[id]; }
    const Node& node(std::size_t id) const { return nodes_[id]; }
    std::size_t size() const { return nodes_.size(); }

    /// Adds `g` into the gradient buffer of node `id` if it participates in
    /// differentiation.  Buffers are prepared by backward().
    void add_grad(std::size_t id, const std::vector<double>& g) {
        Node& n = nodes_[id];
        if (!n.requires_grad) return;
        for (std::size_t i = 0; i < g.size(); ++i) n.grad[i] += g[i];
    }

    /// Reverse sweep from a scalar loss.  Node gradients are recomputed from
    /// scratch; Parameter gradients accumulate across calls.
    void backward(const Tensor& loss) {
        if (loss.tape() != this) throw std::logic_error("backward: loss is not on this tape");
        if (numel(node(loss.id()).shape) != 1)
            throw std::logic_error("backward: loss must be scalar, got " + shape_str(node(loss.id()).shape));
        for (Node& n : nodes_) {
            if (n.requires_grad)
                n.grad.assign(n.value.size(), 0.0);
            else
                n.grad.clear();
        }
        Node& top = nodes_[loss.id()];
        if (!top.requires_grad) return;  // loss does not depend on any trainable leaf
        top.grad[0] = 1.0;
        for (std::size_t i = loss.id() + 1; i-- > 0;) {
            Node& n = nodes_[i];
            if (n.requires_grad && n.backward) n.backward(*this, n.grad);
        }
        for (Node& n : nodes_) {
            if (n.param != nullptr)
                for (std::size_t i = 0; i < n.grad.size(); ++i) n.param->grad[i] += n.grad[i];
        }
    }

  private:
    static void check_size(const std::vector<double>& v, const Shape& s) {
        if (v.size() != numel(s))
            throw std::invalid_argument("tensor data length " + std::to_string(v.size()) +
                                        " does not match shape " + shape_str(s));
    }

    Tensor emplace(Shape s, std::vector<double> v, bool rg,
                   std::function<void(Tape&, const std::vector<double>&)> bw, Parameter* p) {
        Node n;
        n.shape = std::move(s);
        n.value = std::move(v);
        n.requires_grad = rg;
        n.backward = std::move(bw);
        n.param = p;
        nodes_.push_back(std::move(n));
        return Tensor(this, nodes_.size() - 1);
    }

    // deque: node references stay valid while the tape grows
    std::deque<Node> nodes_;
};

inline const Shape& Tensor::shape() const { return tape_->node(id_).shape; }
inline const std::vector<double>& Tensor::value() const { return tape_->node(id_).value; }
inline const std::vector<double>& Tensor::grad() const { return tape_->node(id_).grad; }

namespace detail {

inline Tape& same_tape(const Tensor& a, const Tensor& b, const char* op) {
    if (!a.valid() || !b.valid() || a.tape() != b.tape())
        throw std::logic_error(std::string(op) + ": operands belong to different tapes");
    return *a.tape();
}

// c[m x n] += a[m x k] * b[k x n]
inline void gemm_nn(const double* a, const double* b, double* c,
                    std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        double* crow = c + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = a[i * k + p];
            const double* brow = b + p * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
        }
    }
}

// c[m x k] += a[m x n] * b[k x n]^T   (row-by-row dot products)
inline void gemm_nt(const double* a, const double* b, double* c,
                    std::size_t m, std::size_t n, std::size_t k) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double* brow = b + p * n;
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += arow[j] * brow[j];
            c[i * k + p] += acc;
        }
    }
}

// c[k x n] += a[m x k]^T * b[m x n]
inline void gemm_tn(const double* a, const double* b, double* c,
                    std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* brow = b + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = a[i * k + p];
            double* crow = c + p * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
        }
    }
}

}  // namespace detail

/// Standard matrix product [m x k]*[k x n] -> [m x n].
inline Tensor matmul(const Tensor& a, const Tensor& b) {
    Tape& t = detail::same_tape(a, b, "matmul");
    const Shape& sa = a.shape();
    const Shape& sb = b.shape();
    if (sa.size() != 2 || sb.size() != 2 || sa[1] != sb[0]) dim_error("matmul", sa, sb);
    const std::size_t m = sa[0], k = sa[1], n = sb[1];
    std::vector<double> out(m * n, 0.0);
    detail::gemm_nn(a.value().data(), b.value().data(), out.data(), m, k, n);
    const bool rg = t.node(a.id()).requires_grad || t.node(b.id()).requires_grad;
    if (!rg) return t.constant(std::move(out), Shape{m, n});
    const std::size_t ia = a.id(), ib = b.id();
    return t.make_node(Shape{m, n}, std::move(out), true,
                       [ia, ib, m, k, n](Tape& tp, const std::vector<double>& g) {
                           Tape::Node& na = tp.node(ia);
                           Tape::Node& nb = tp.node(ib);
                           if (na.requires_grad)  // dA += G * B^T
                               detail::gemm_nt(g.data(), nb.value.data(), na.grad.data(), m, n, k);
                           if (nb.requires_grad)  // dB += A^T * G
                               detail::gemm_tn(na.value.data(), g.data(), nb.grad.data(), m, k, n);
                       });
}

/// a * b^T with a [m x n], b [k x n] -> [m x k]; the natural layout for
/// linear layers whose weights are stored [out x in].
inline Tensor matmul_nt(const Tensor& a, const Tensor& b) {
    Tape& t = detail::same_tape(a, b, "matmul_nt");
    const Shape& sa = a.shape();
    const Shape& sb = b.shape();
    if (sa.size() != 2 || sb.size() != 2 || sa[1] != sb[1]) dim_error("matmul_nt", sa, sb);
    const std::size_t m = sa[0], n = sa[1], k = sb[0];
    std::vector<double> out(m * k, 0.0);
    detail::gemm_nt(a.value().data(), b.value().data(), out.data(), m, n, k);
    const bool rg = t.node(a.id()).requires_grad || t.node(b.id()).requires_grad;
    if (!rg) return t.constant(std::move(out), Shape{m, k});
    const std::size_t ia = a.id(), ib = b.id();
    return t.make_node(Shape{m, k}, std::move(out), true,
                       [ia, ib, m, n, k](Tape& tp, const std::vector<double>& g) {
                           Tape::Node& na = tp.node(ia);
                           Tape::Node& nb = tp.node(ib);
                           if (na.requires_grad)  // dA += G * B
                               detail::gemm_nn(g.data(), nb.value.data(), na.grad.data(), m, k, n);
                           if (nb.requires_grad)  // dB += G^T * A
                               detail::gemm_tn(g.data(), na.value.data(), nb.grad.data(), m, k, n);
                       });
}

/// Fused affine map y = x * w^T + b with w [out x in], b [out]; equal to
/// add(matmul_nt(x, w), b) with one tape node instead of two.
inline Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
    Tape& t = detail::same_tape(x, w, "linear");
    const Shape& sx = x.shape();
    const Shape& sw = w.shape();
    if (sx.size() != 2 || sw.size() != 2 || sx[1] != sw[1]) dim_error("linear", sx, sw);
    if (b.shape().size() != 1 || b.shape()[0] != sw[0]) dim_error("linear", sw, b.shape());
    const std::size_t batch = sx[0], in = sx[1], out = sw[0];
    std::vector<double> value(batch * out);
    for (std::size_t r = 0; r < batch; ++r)
        std::copy(b.value().begin(), b.value().end(), value.begin() + static_cast<std::ptrdiff_t>(r * out));
    detail::gemm_nt(x.value().data(), w.value().data(), value.data(), batch, in, out);
    const bool rg = t.node(x.id()).requires_grad || t.node(w.id()).requires_grad || t.node(b.id()).requires_grad;
    if (!rg) return t.constant(std::move(value), Shape{batch, out});
    const std::size_t ix = x.id(), iw = w.id(), ib = b.id();
    return t.make_node(Shape{batch, out}, std::move(value), true,
                       [ix, iw, ib, batch, in, out](Tape& tp, const std::vector<double>& g) {
                           Tape::Node& nx = tp.node(ix);
                           Tape::Node& nw = tp.node(iw);
                           Tape::Node& nb = tp.node(ib);
                           if (nx.requires_grad)  // dX += G * W
                               detail::gemm_nn(g.data(), nw.value.data(), nx.grad.data(), batch, out, in);
                           if (nw.requires_grad)  // dW += G^T * X
                               detail::gemm_tn(g.data(), nx.value.data(), nw.grad.data(), batch, out, in);
                           if (nb.requires_grad)
                               for (std::size_t r = 0; r < batch; ++r)
                                   for (std::size_t j = 0; j < out; ++j) nb.grad[j] += g[r * out + j];
                       });
}

namespace detail {

enum class EwKind { Add, Sub, Mul };

// Elementwise ops accept identical shapes, or a 1-D `b` broadcast over the
// trailing dimension of `a` (the bias case).
inline Tensor elementwise(EwKind kind, const Tensor& a, const Tensor& b, const char* name) {
    Tape& t = same_tape(a, b, name);
    const Shape& sa = a.shape();
    const Shape& sb = b.shape();
    const bool same = sa == sb;
    const bool bcast = !same && sb.size() == 1 && !sa.empty() && sa.back() == sb[0];
    if (!same && !bcast) dim_error(name, sa, sb);
    const std::size_t n = numel(sa);
    const std::size_t w = bcast ? sb[0] : n;
    const std::vector<double>& av = a.value();
    const std::vector<double>& bv = b.value();
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double bi = bv[i % w];
        switch (kind) {
            case EwKind::Add: out[i] = av[i] + bi; break;
            case EwKind::Sub: out[i] = av[i] - bi; break;
            case EwKind::Mul: out[i] = av[i] * bi; break;
        }
    }
    const bool rg = t.node(a.id()).requires_grad || t.node(b.id()).requires_grad;
    if (!rg) return t.constant(std::move(out), sa);
    const std::size_t ia = a.id(), ib = b.id();
    return t.make_node(sa, std::move(out), true,
                       [kind, ia, ib, n, w](Tape& tp, const std::vector<double>& g) {
                           Tape::Node& na = tp.node(ia);
                           Tape::Node& nb = tp.node(ib);
                           if (na.requires_grad) {
                               for (std::size_t i = 0; i < n; ++i)
                                   na.grad[i] += (kind == EwKind::Mul) ? g[i] * nb.value[i % w] : g[i];
                           }
                           if (nb.requires_grad) {
                               for (std::size_t i = 0; i < n; ++i) {
                                   double gi = g[i];
                                   if (kind == EwKind::Sub) gi = -gi;
                                   if (kind == EwKind::Mul) gi = g[i] * na.value[i];
                                   nb.grad[i % w] += gi;
                               }
                           }
                       });
}

}  // namespace detail

inline Tensor add(const Tensor& a, const Tensor& b) { return detail::elementwise(detail::EwKind::Add, a, b, "add"); }
inline Tensor sub(const Tensor& a, const Tensor& b) { return detail::elementwise(detail::EwKind::Sub, a, b, "sub"); }
inline Tensor mul(const Tensor& a, const Tensor& b) { return detail::elementwise(detail::EwKind::Mul, a, b, "mul"); }

/// y = f(x) elementwise; backward multiplies upstream by df(x) evaluated at
/// the input.  `df` need not be the true derivative of `f` (surrogate
/// gradients substitute a smooth stand-in).
template <class F, class DF>
inline Tensor map_unary(const Tensor& x, F f, DF df) {
    Tape& t = *x.tape();
    const std::vector<double>& xv = x.value();
    std::vector<double> out(xv.size());
    for (std::size_t i = 0; i < xv.size(); ++i) out[i] = f(xv[i]);
    if (!t.node(x.id()).requires_grad) return t.constant(std::move(out), x.shape());
    const std::size_t ix = x.id();
    return t.make_node(x.shape(), std::move(out), true,
                       [ix, df](Tape& tp, const std::vector<double>& g) {
                           Tape::Node& nx = tp.node(ix);
                           for (std::size_t i = 0; i < g.size(); ++i) nx.grad[i] += g[i] * df(nx.value[i]);
                       });
}

namespace detail {
// Saturated activations are nudged back inside their open ranges so that
// downstream logs and score comparisons never see exact 0/1 (or +-1).
inline double sigmoid_val(double v) {
    const double s = 1.0 / (1.0 + std::exp(-v));
    if (s <= 0.0) return std::numeric_limits<double>::min();
    if (s >= 1.0) return 1.0 - std::numeric_limits<double>::epsilon() / 2.0;
    return s;
}
inline double tanh_val(double v) {
    const double one_in = 1.0 - std::numeric_limits<double>::epsilon() / 2.0;
    return std::clamp(std::tanh(v), -one_in, one_in);
}
}  // namespace detail

inline Tensor sigmoid(const Tensor& x) {
    return map_unary(x, detail::sigmoid_val, [](double v) {
        const double s = detail::sigmoid_val(v);
        return s * (1.0 - s);
    });
}

inline Tensor tanh(const Tensor& x) {
    return map_unary(x, detail::tanh_val, [](double v) {
        const double th = std::tanh(v);
        return 1.0 - th * th;
    });
}

inline Tensor relu(const Tensor& x) {
    return map_unary(
        x, [](double v) { return v > 0.0 ? v : 0.0; },
        [](double v) { return v > 0.0 ? 1.0 : 0.0; });
}

/// c * x for a plain scalar c.
inline Tensor scale(const Tensor& x, double c) {
    return map_unary(
        x, [c](double v) { return c * v; }, [c](double) { return c; });
}

/// x + c elementwise.
inline Tensor offset(const Tensor& x, double c) {
    return map_unary(
        x, [c](double v) { return v + c; }, [](double) { return 1.0; });
}

/// Concatenation along `axis`; 1-D tensors use axis 0, 2-D tensors axis 0 or 1.
inline Tensor concat(const std::vector<Tensor>& parts, std::size_t axis = 0) {
    if (parts.empty()) throw std::invalid_argument("concat: no parts");
    Tape& t = *parts[0].tape();
    const std::size_t rank = parts[0].shape().size();
    if (rank == 0 || rank > 2 || axis >= rank)
        throw std::invalid_argument("concat: unsupported rank/axis");
    for (const Tensor& p : parts) {
        if (p.tape() != &t) throw std::logic_error("concat: operands belong to different tapes");
        if (p.shape().size() != rank) dim_error("concat", parts[0].shape(), p.shape());
        for (std::size_t d = 0; d < rank; ++d)
            if (d != axis && p.shape()[d] != parts[0].shape()[d]) dim_error("concat", parts[0].shape(), p.shape());
    }
    Shape out_shape = parts[0].shape();
    out_shape[axis] = 0;
    for (const Tensor& p : parts) out_shape[axis] += p.shape()[axis];

    std::vector<double> out(numel(out_shape));
    bool rg = false;
    std::vector<std::size_t> ids;
    ids.reserve(parts.size());
    const std::size_t rows = rank == 2 ? out_shape[0] : 1;
    const std::size_t out_cols = rank == 2 ? out_shape[1] : out_shape[0];
    if (axis == 0 && rank <= 2) {
        std::size_t off = 0;
        for (const Tensor& p : parts) {
            std::copy(p.value().begin(), p.value().end(), out.begin() + static_cast<std::ptrdiff_t>(off));
            off += p.value().size();
        }
    } else {  // rank 2, axis 1
        std::size_t col_off = 0;
        for (const Tensor& p : parts) {
            const std::size_t pc = p.shape()[1];
            for (std::size_t r = 0; r < rows; ++r)
                std::copy(p.value().begin() + static_cast<std::ptrdiff_t>(r * pc),
                          p.value().begin() + static_cast<std::ptrdiff_t>((r + 1) * pc),
                          out.begin() + static_cast<std::ptrdiff_t>(r * out_cols + col_off));
            col_off += pc;
        }
    }
    for (const Tensor& p : parts) {
        rg = rg || t.node(p.id()).requires_grad;
        ids.push_back(p.id());
    }
    if (!rg) return t.constant(std::move(out), std::move(out_shape));
    std::vector<std::size_t> widths;
    for (const Tensor& p : parts) widths.push_back(p.shape()[axis]);
    return t.make_node(out_shape, std::move(out), true,
                       [ids, widths, axis, rank, rows, out_cols](Tape& tp, const std::vector<double>& g) {
                           std::size_t off = 0;
                           for (std::size_t pi = 0; pi < ids.size(); ++pi) {
                               Tape::Node& np = tp.node(ids[pi]);
                               const std::size_t w = widths[pi];
                               if (np.requires_grad) {
                                   if (axis == 0) {
                                       const std::size_t count = np.value.size();
                                       for (std::size_t i = 0; i < count; ++i) np.grad[i] += g[off + i];
                                   } else {
                                       for (std::size_t r = 0; r < rows; ++r)
                                           for (std::size_t c = 0; c < w; ++c)
                                               np.grad[r * w + c] += g[r * out_cols + off + c];
                                   }
                               }
                               off += (axis == 0) ? np.value.size() : w;
                           }
                           (void)rank;
                       });
}

/// Extracts [begin, end) along `axis`.
inline Tensor slice(const Tensor& x, std::size_t begin, std::size_t end, std::size_t axis = 0) {
    Tape& t = *x.tape();
    const Shape& s = x.shape();
    const std::size_t rank = s.size();
    if (rank == 0 || rank > 2 || axis >= rank)
        throw std::invalid_argument("slice: unsupported rank/axis");
    if (begin > end || end > s[axis])
        throw std::out_of_range("slice: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                                ") out of bounds for axis extent " + std::to_string(s[axis]));
    Shape out_shape = s;
    out_shape[axis] = end - begin;
    const std::size_t rows = rank == 2 ? s[0] : 1;
    const std::size_t cols = rank == 2 ? s[1] : s[0];
    std::vector<double> out(numel(out_shape));
    if (axis == 0 && rank == 1) {
        std::copy(x.value().begin() + static_cast<std::ptrdiff_t>(begin),
                  x.value().begin() + static_cast<std::ptrdiff_t>(end), out.begin());
    } else if (axis == 0) {
        std::copy(x.value().begin() + static_cast<std::ptrdiff_t>(begin * cols),
                  x.value().begin() + static_cast<std::ptrdiff_t>(end * cols), out.begin());
    } else {
        for (std::size_t r = 0; r < rows; ++r)
            std::copy(x.value().begin() + static_cast<std::ptrdiff_t>(r * cols + begin),
                      x.value().begin() + static_cast<std::ptrdiff_t>(r * cols + end),
                      out.begin() + static_cast<std::ptrdiff_t>(r * (end - begin)));
    }
    if (!t.node(x.id()).requires_grad) return t.constant(std::move(out), std::move(out_shape));
    const std::size_t ix = x.id();
    const std::size_t width = end - begin;
    return t.make_node(out_shape, std::move(out), true,
                       [ix, begin, width, axis, rank, rows, cols](Tape& tp, const std::vector<double>& g) {
                           Tape::Node& nx = tp.node(ix);
                           if (axis == 0 && rank == 1) {
                               for (std::size_t i = 0; i < width; ++i) nx.grad[begin + i] += g[i];
                           } else if (axis == 0) {
                               for (std::size_t i = 0; i < width * cols; ++i) nx.grad[begin * cols + i] += g[i];
                           } else {
                               for (std::size_t r = 0; r < rows; ++r)
                                   for (std::size_t c = 0; c < width; ++c)
                                       nx.grad[r * cols + begin + c] += g[r * width + c];
                           }
                       });
}

namespace detail {

inline Tensor reduce_all(const Tensor& x, bool mean_of) {
    Tape& t = *x.tape();
    const std::size_t n = numel(x.shape());
    double acc = 0.0;
    for (double v : x.value()) acc += v;
    const double scale_f = mean_of ? 1.0 / static_cast<double>(n) : 1.0;
    if (!t.node(x.id()).requires_grad) return t.constant(acc * scale_f);
    const std::size_t ix = x.id();
    return t.make_node(Shape{1}, {acc * scale_f}, true,
                       [ix, n, scale_f](Tape& tp, const std::vector<double>& g) {
                           Tape::Node& nx = tp.node(ix);
                           const double gv = g[0] * scale_f;
                           for (std::size_t i = 0; i < n; ++i) nx.grad[i] += gv;
                       });
}

inline Tensor reduce_axis(const Tensor& x, std::size_t axis, bool mean_of) {
    Tape& t = *x.tape();
    const Shape& s = x.shape();
    if (s.size() != 2 || axis > 1) throw std::invalid_argument("reduce: axis form requires a 2-D tensor");
    const std::size_t rows = s[0], cols = s[1];
    const std::size_t out_n = axis == 0 ? cols : rows;
    const std::size_t count = axis == 0 ? rows : cols;
    const double scale_f = mean_of ? 1.0 / static_cast<double>(count) : 1.0;
    std::vector<double> out(out_n, 0.0);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) out[axis == 0 ? c : r] += x.value()[r * cols + c];
    for (double& v : out) v *= scale_f;
    if (!t.node(x.id()).requires_grad) return t.constant(std::move(out), Shape{out_n});
    const std::size_t ix = x.id();
    return t.make_node(Shape{out_n}, std::move(out), true,
                       [ix, rows, cols, axis, scale_f](Tape& tp, const std::vector<double>& g) {
                           Tape::Node& nx = tp.node(ix);
                           for (std::size_t r = 0; r < rows; ++r)
                               for (std::size_t c = 0; c < cols; ++c)
                                   nx.grad[r * cols + c] += g[axis == 0 ? c : r] * scale_f;
                       });
}

}  // namespace detail

inline Tensor sum(const Tensor& x) { return detail::reduce_all(x, false); }
inline Tensor mean(const Tensor& x) { return detail::reduce_all(x, true); }
inline Tensor sum(const Tensor& x, std::size_t axis) { return detail::reduce_axis(x, axis, false); }
inline Tensor mean(const Tensor& x, std::size_t axis) { return detail::reduce_axis(x, axis, true); }

/// Binary cross-entropy, mean over elements.  Probabilities are clamped into
/// [eps, 1-eps] so an early saturated prediction cannot produce a non-finite
/// loss; the gradient is zero where the clamp engages.
inline Tensor bce_loss(const Tensor& p, const Tensor& y, double eps = 1e-7) {
    Tape& t = detail::same_tape(p, y, "bce_loss");
    if (p.shape() != y.shape()) dim_error("bce_loss", p.shape(), y.shape());
    const std::size_t n = numel(p.shape());
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double pc = std::clamp(p.value()[i], eps, 1.0 - eps);
        const double yi = y.value()[i];
        acc -= yi * std::log(pc) + (1.0 - yi) * std::log(1.0 - pc);
    }
    acc /= static_cast<double>(n);
    if (!t.node(p.id()).requires_grad) return t.constant(acc);
    const std::size_t ip = p.id(), iy = y.id();
    return t.make_node(Shape{1}, {acc}, true,
                       [ip, iy, n, eps](Tape& tp, const std::vector<double>& g) {
                           Tape::Node& np = tp.node(ip);
                           const Tape::Node& ny = tp.node(iy);
                           const double gv = g[0] / static_cast<double>(n);
                           for (std::size_t i = 0; i < n; ++i) {
                               const double pv = np.value[i];
                               if (pv <= eps || pv >= 1.0 - eps) continue;
                               np.grad[i] += gv * (pv - ny.value[i]) / (pv * (1.0 - pv));
                           }
                       });
}

/// Mean negative log-softmax of the target class; logits [batch x C].
inline Tensor cross_entropy(const Tensor& logits, const std::vector<int>& targets) {
    Tape& t = *logits.tape();
    const Shape& s = logits.shape();
    if (s.size() != 2 || s[1] < 2) throw std::invalid_argument("cross_entropy: logits must be [batch x C], C >= 2");
    const std::size_t batch = s[0], classes = s[1];
    if (targets.size() != batch)
        throw std::invalid_argument("cross_entropy: got " + std::to_string(targets.size()) + " targets for batch " +
                                    std::to_string(batch));
    for (int y : targets)
        if (y < 0 || static_cast<std::size_t>(y) >= classes)
            throw std::out_of_range("cross_entropy: class index " + std::to_string(y) + " out of range");

    std::vector<double> softmax(batch * classes);
    double acc = 0.0;
    for (std::size_t r = 0; r < batch; ++r) {
        const double* row = logits.value().data() + r * classes;
        const double mx = *std::max_element(row, row + classes);
        double z = 0.0;
        for (std::size_t c = 0; c < classes; ++c) z += std::exp(row[c] - mx);
        const double logz = std::log(z) + mx;
        for (std::size_t c = 0; c < classes; ++c) softmax[r * classes + c] = std::exp(row[c] - logz);
        acc -= row[static_cast<std::size_t>(targets[r])] - logz;
    }
    acc /= static_cast<double>(batch);
    if (!t.node(logits.id()).requires_grad) return t.constant(acc);
    const std::size_t il = logits.id();
    return t.make_node(Shape{1}, {acc}, true,
                       [il, batch, classes, softmax = std::move(softmax), targets](Tape& tp,
                                                                                   const std::vector<double>& g) {
                           Tape::Node& nl = tp.node(il);
                           const double gv = g[0] / static_cast<double>(batch);
                           for (std::size_t r = 0; r < batch; ++r)
                               for (std::size_t c = 0; c < classes; ++c) {
                                   const double onehot = (static_cast<std::size_t>(targets[r]) == c) ? 1.0 : 0.0;
                                   nl.grad[r * classes + c] += gv * (softmax[r * classes + c] - onehot);
                               }
                       });
}

struct GradCheckReport {
    double max_rel_err = 0.0;
    bool pass = false;
};

namespace detail {
inline double rel_err(double a, double b) {
    return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}
}  // namespace detail

/// Compares backward() against central finite differences for a scalar-valued
/// function of one input tensor.
template <class F>
GradCheckReport grad_check(F&& f, const std::vector<double>& x0, Shape shape, double tol, double step = 1e-5) {
    std::vector<double> analytic(x0.size(), 0.0);
    {
        Tape tape;
        Tensor x = tape.input(x0, shape);
        Tensor loss = f(tape, x);
        tape.backward(loss);
        analytic = tape.node(x.id()).grad;
    }
    GradCheckReport report;
    for (std::size_t i = 0; i < x0.size(); ++i) {
        std::vector<double> xp = x0, xm = x0;
        xp[i] += step;
        xm[i] -= step;
        double fp, fm;
        {
            Tape tape;
            fp = f(tape, tape.input(xp, shape)).value()[0];
        }
        {
            Tape tape;
            fm = f(tape, tape.input(xm, shape)).value()[0];
        }
        const double numeric = (fp - fm) / (2.0 * step);
        report.max_rel_err = std::max(report.max_rel_err, detail::rel_err(analytic[i], numeric));
    }
    report.pass = report.max_rel_err < tol;
    return report;
}

/// Finite-difference check of Parameter gradients for a scalar-valued model
/// function.  Rebuilds the forward pass per perturbation.
template <class F>
GradCheckReport param_grad_check(F&& loss_fn, const std::vector<Parameter*>& params, double tol,
                                 double step = 1e-5) {
    for (Parameter* p : params) p->zero_grad();
    {
        Tape tape;
        Tensor loss = loss_fn(tape);
        tape.backward(loss);
    }
    std::vector<std::vector<double>> analytic;
    analytic.reserve(params.size());
    for (Parameter* p : params) analytic.push_back(p->grad);

    GradCheckReport report;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Parameter& p = *params[pi];
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double saved = p.value[i];
            p.value[i] = saved + step;
            double fp, fm;
            {
                Tape tape;
                fp = loss_fn(tape).value()[0];
            }
            p.value[i] = saved - step;
            {
                Tape tape;
                fm = loss_fn(tape).value()[0];
            }
            p.value[i] = saved;
            const double numeric = (fp - fm) / (2.0 * step);
            report.max_rel_err = std::max(report.max_rel_err, detail::rel_err(analytic[pi][i], numeric));
        }
    }
    report.pass = report.max_rel_err < tol;
    return report;
}

}  // namespace qubrain::autodiff
