#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "errors.hpp"

namespace dfpl {

using Shape = std::vector<std::int64_t>;

inline std::int64_t shape_numel(const Shape& s) {
    std::int64_t n = 1;
    for (auto e : s) n *= e;
    return n;
}

inline std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
    os << ']';
    return os.str();
}

namespace detail {

struct Node {
    Shape shape;
    std::vector<double> val;
    std::vector<double> grad; // allocated lazily during backward
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    // Accumulates into parents' grad, reading this node's grad.
    std::function<void(Node&)> backfn;

    std::int64_t size() const { return static_cast<std::int64_t>(val.size()); }
    void ensure_grad() {
        if (grad.size() != val.size()) grad.assign(val.size(), 0.0);
    }
};

} // namespace detail

// Dense n-d tensor of 64-bit reals with a reverse-mode tape. Value-like handle:
// copies share the underlying node. The tape (parent links) lives only as long
// as the result tensors of a forward pass; backward() releases it.
class Tensor {
  public:
    Tensor() = default;

    static Tensor zeros(Shape shape, bool requires_grad = false) {
        return filled(std::move(shape), 0.0, requires_grad);
    }
    static Tensor filled(Shape shape, double v, bool requires_grad = false) {
        auto n = std::make_shared<detail::Node>();
        n->val.assign(static_cast<std::size_t>(shape_numel(shape)), v);
        n->shape = std::move(shape);
        n->requires_grad = requires_grad;
        return Tensor(std::move(n));
    }
    static Tensor from(Shape shape, std::vector<double> data, bool requires_grad = false) {
        if (shape_numel(shape) != static_cast<std::int64_t>(data.size()))
            throw ShapeError("tensor data length " + std::to_string(data.size()) +
                             " does not match shape " + shape_str(shape));
        auto n = std::make_shared<detail::Node>();
        n->shape = std::move(shape);
        n->val = std::move(data);
        n->requires_grad = requires_grad;
        return Tensor(std::move(n));
    }
    static Tensor scalar(double v, bool requires_grad = false) {
        return from({}, {v}, requires_grad);
    }
    static Tensor vector(std::vector<double> data, bool requires_grad = false) {
        Shape s{static_cast<std::int64_t>(data.size())};
        return from(std::move(s), std::move(data), requires_grad);
    }

    bool defined() const { return static_cast<bool>(n_); }
    const Shape& shape() const { return n_->shape; }
    std::int64_t numel() const { return n_->size(); }
    bool is_scalar() const { return n_->shape.empty(); }

    const std::vector<double>& values() const { return n_->val; }
    std::vector<double>& values() { return n_->val; }
    double item() const {
        if (!is_scalar()) throw ShapeError("item() on non-scalar tensor " + shape_str(shape()));
        return n_->val[0];
    }
    double at(std::int64_t i) const { return n_->val[static_cast<std::size_t>(i)]; }

    bool requires_grad() const { return n_->requires_grad; }
    void set_requires_grad(bool rg) { n_->requires_grad = rg; }
    bool has_grad() const { return n_->grad.size() == n_->val.size(); }
    const std::vector<double>& grad() const { return n_->grad; }
    std::vector<double>& grad() { return n_->grad; }
    void zero_grad() { n_->grad.assign(n_->val.size(), 0.0); }

    // Same values, no history, no grad requirement.
    Tensor detach() const {
        auto m = std::make_shared<detail::Node>();
        m->shape = n_->shape;
        m->val = n_->val;
        return Tensor(std::move(m));
    }

    bool all_finite() const {
        for (double v : n_->val)
            if (!std::isfinite(v)) return false;
        return true;
    }

    detail::Node* node() const { return n_.get(); }
    const std::shared_ptr<detail::Node>& node_ptr() const { return n_; }

    explicit Tensor(std::shared_ptr<detail::Node> n) : n_(std::move(n)) {}

  private:
    std::shared_ptr<detail::Node> n_;
};

namespace detail {

inline bool tracks(const Tensor& t) {
    return t.node()->requires_grad || t.node()->backfn != nullptr;
}

inline Tensor make_op(Shape shape, std::vector<double> val,
                      std::vector<Tensor> parents,
                      std::function<void(Node&)> backfn) {
    auto n = std::make_shared<Node>();
    n->shape = std::move(shape);
    n->val = std::move(val);
    bool any = false;
    for (const auto& p : parents) any = any || tracks(p);
    if (any) {
        for (const auto& p : parents) n->parents.push_back(p.node_ptr());
        n->backfn = std::move(backfn);
    }
    return Tensor(std::move(n));
}

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape())
        throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                         " vs " + shape_str(b.shape()));
}

} // namespace detail

// ---------------------------------------------------------------------------
// elementwise / linear ops
// ---------------------------------------------------------------------------

inline Tensor add(const Tensor& a, const Tensor& b) {
    // Equal shapes, or b broadcast over a leading batch dimension of a.
    const bool batch_bcast =
        a.shape().size() == b.shape().size() + 1 &&
        std::equal(b.shape().begin(), b.shape().end(), a.shape().begin() + 1);
    if (!batch_bcast) detail::require_same_shape(a, b, "add");
    std::vector<double> out(a.values());
    const auto nb = static_cast<std::size_t>(b.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.values()[i % nb];
    auto pa = a.node_ptr();
    auto pb = b.node_ptr();
    return detail::make_op(a.shape(), std::move(out), {a, b}, [pa, pb, nb](detail::Node& self) {
        pa->ensure_grad();
        pb->ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
            pa->grad[i] += self.grad[i];
            pb->grad[i % nb] += self.grad[i];
        }
    });
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
    detail::require_same_shape(a, b, "sub");
    std::vector<double> out(a.values());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.values()[i];
    auto pa = a.node_ptr();
    auto pb = b.node_ptr();
    return detail::make_op(a.shape(), std::move(out), {a, b}, [pa, pb](detail::Node& self) {
        pa->ensure_grad();
        pb->ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
            pa->grad[i] += self.grad[i];
            pb->grad[i] -= self.grad[i];
        }
    });
}

inline Tensor mul(const Tensor& a, const Tensor& b) { // elementwise
    detail::require_same_shape(a, b, "mul");
    std::vector<double> out(a.values());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.values()[i];
    auto pa = a.node_ptr();
    auto pb = b.node_ptr();
    return detail::make_op(a.shape(), std::move(out), {a, b}, [pa, pb](detail::Node& self) {
        pa->ensure_grad();
        pb->ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
            pa->grad[i] += self.grad[i] * pb->val[i];
            pb->grad[i] += self.grad[i] * pa->val[i];
        }
    });
}

inline Tensor smul(const Tensor& a, double c) {
    std::vector<double> out(a.values());
    for (auto& v : out) v *= c;
    auto pa = a.node_ptr();
    return detail::make_op(a.shape(), std::move(out), {a}, [pa, c](detail::Node& self) {
        pa->ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) pa->grad[i] += c * self.grad[i];
    });
}

inline Tensor neg(const Tensor& a) { return smul(a, -1.0); }

// matmul: [m,n]x[n,p] -> [m,p], or [m,n]x[n] -> [m].
inline Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.shape().size() != 2 || b.shape().empty() || b.shape().size() > 2)
        throw ShapeError("matmul: unsupported ranks " + shape_str(a.shape()) + " x " +
                         shape_str(b.shape()));
    const std::int64_t m = a.shape()[0], n = a.shape()[1];
    const bool vec = b.shape().size() == 1;
    const std::int64_t p = vec ? 1 : b.shape()[1];
    if (b.shape()[0] != n)
        throw ShapeError("matmul: inner dimension mismatch " + shape_str(a.shape()) +
                         " x " + shape_str(b.shape()));
    std::vector<double> out(static_cast<std::size_t>(m * p), 0.0);
    const auto& av = a.values();
    const auto& bv = b.values();
    for (std::int64_t i = 0; i < m; ++i)
        for (std::int64_t k = 0; k < n; ++k) {
            const double aik = av[static_cast<std::size_t>(i * n + k)];
            for (std::int64_t j = 0; j < p; ++j)
                out[static_cast<std::size_t>(i * p + j)] +=
                    aik * bv[static_cast<std::size_t>(k * p + j)];
        }
    Shape oshape = vec ? Shape{m} : Shape{m, p};
    auto pa = a.node_ptr();
    auto pb = b.node_ptr();
    return detail::make_op(std::move(oshape), std::move(out), {a, b},
                           [pa, pb, m, n, p](detail::Node& self) {
                               pa->ensure_grad();
                               pb->ensure_grad();
                               for (std::int64_t i = 0; i < m; ++i)
                                   for (std::int64_t k = 0; k < n; ++k) {
                                       double acc = 0.0;
                                       for (std::int64_t j = 0; j < p; ++j) {
                                           const double g = self.grad[static_cast<std::size_t>(i * p + j)];
                                           acc += g * pb->val[static_cast<std::size_t>(k * p + j)];
                                           pb->grad[static_cast<std::size_t>(k * p + j)] +=
                                               pa->val[static_cast<std::size_t>(i * n + k)] * g;
                                       }
                                       pa->grad[static_cast<std::size_t>(i * n + k)] += acc;
                                   }
                           });
}

// concat along the last (only) axis of 1-d tensors
inline Tensor concat(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw ShapeError("concat: empty input list");
    std::vector<double> out;
    for (const auto& t : parts) {
        if (t.shape().size() != 1)
            throw ShapeError("concat: expected rank-1 tensors, got " + shape_str(t.shape()));
        out.insert(out.end(), t.values().begin(), t.values().end());
    }
    Shape oshape{static_cast<std::int64_t>(out.size())};
    std::vector<std::shared_ptr<detail::Node>> ps;
    for (const auto& t : parts) ps.push_back(t.node_ptr());
    return detail::make_op(std::move(oshape), std::move(out), parts,
                           [ps](detail::Node& self) {
                               std::size_t off = 0;
                               for (const auto& p : ps) {
                                   p->ensure_grad();
                                   for (std::size_t i = 0; i < p->val.size(); ++i)
                                       p->grad[i] += self.grad[off + i];
                                   off += p->val.size();
                               }
                           });
}

inline Tensor sum(const Tensor& a) {
    double s = std::accumulate(a.values().begin(), a.values().end(), 0.0);
    auto pa = a.node_ptr();
    return detail::make_op({}, {s}, {a}, [pa](detail::Node& self) {
        pa->ensure_grad();
        for (auto& g : pa->grad) g += self.grad[0];
    });
}

inline Tensor mean(const Tensor& a) {
    if (a.numel() == 0) throw ShapeError("mean: empty tensor");
    const double inv = 1.0 / static_cast<double>(a.numel());
    double s = std::accumulate(a.values().begin(), a.values().end(), 0.0) * inv;
    auto pa = a.node_ptr();
    return detail::make_op({}, {s}, {a}, [pa, inv](detail::Node& self) {
        pa->ensure_grad();
        for (auto& g : pa->grad) g += self.grad[0] * inv;
    });
}

namespace detail {

template <class F, class DF>
Tensor unary_op(const Tensor& a, F f, DF df) {
    std::vector<double> out(a.values());
    for (auto& v : out) v = f(v);
    auto pa = a.node_ptr();
    return make_op(a.shape(), std::move(out), {a}, [pa, df](Node& self) {
        pa->ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i)
            pa->grad[i] += self.grad[i] * df(pa->val[i], self.val[i]);
    });
}

} // namespace detail

inline Tensor sigmoid(const Tensor& a) {
    return detail::unary_op(
        a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
        [](double, double y) { return y * (1.0 - y); });
}

inline Tensor vtanh(const Tensor& a) {
    return detail::unary_op(
        a, [](double x) { return std::tanh(x); },
        [](double, double y) { return 1.0 - y * y; });
}

// relu gradient at exactly 0 is taken as 0 (subgradient choice)
inline Tensor relu(const Tensor& a) {
    return detail::unary_op(
        a, [](double x) { return x > 0.0 ? x : 0.0; },
        [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

// elementwise max(x, c); the hinge building block
inline Tensor max_with(const Tensor& a, double c) {
    return detail::unary_op(
        a, [c](double x) { return x > c ? x : c; },
        [c](double x, double) { return x > c ? 1.0 : 0.0; });
}

inline Tensor vlog(const Tensor& a) {
    for (double v : a.values())
        if (!(v > 0.0))
            throw DomainError("log of non-positive value " + std::to_string(v));
    return detail::unary_op(
        a, [](double x) { return std::log(x); },
        [](double x, double) { return 1.0 / x; });
}

// clamp to [lo, hi]; gradient is zero in the saturated regions
inline Tensor clamp(const Tensor& a, double lo, double hi) {
    if (!(lo <= hi)) throw ShapeError("clamp: lo > hi");
    return detail::unary_op(
        a, [lo, hi](double x) { return std::min(hi, std::max(lo, x)); },
        [lo, hi](double x, double) { return (x > lo && x < hi) ? 1.0 : 0.0; });
}

inline Tensor add_scalar(const Tensor& a, double c) {
    return detail::unary_op(
        a, [c](double x) { return x + c; }, [](double, double) { return 1.0; });
}

// ---------------------------------------------------------------------------
// backward
// ---------------------------------------------------------------------------

// Reverse traversal from a scalar loss. Populates grads of every requires-grad
// leaf, then drops the tape (parent links) so intermediate nodes can be freed.
inline void backward(const Tensor& loss) {
    if (!loss.is_scalar()) throw ShapeError("backward: loss must be scalar, got " +
                                            shape_str(loss.shape()));
    // iterative post-order topological sort
    std::vector<detail::Node*> order;
    std::unordered_set<detail::Node*> seen;
    std::vector<std::pair<detail::Node*, std::size_t>> stack;
    stack.emplace_back(loss.node(), 0);
    seen.insert(loss.node());
    while (!stack.empty()) {
        auto& [n, idx] = stack.back();
        if (idx < n->parents.size()) {
            detail::Node* p = n->parents[idx++].get();
            if (seen.insert(p).second) stack.emplace_back(p, 0);
        } else {
            order.push_back(n);
            stack.pop_back();
        }
    }
    loss.node()->ensure_grad();
    loss.node()->grad[0] = 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        detail::Node* n = *it;
        if (n->backfn) {
            n->ensure_grad();
            n->backfn(*n);
        }
    }
    // release the tape
    for (detail::Node* n : order) {
        n->parents.clear();
        n->backfn = nullptr;
    }
}

// ---------------------------------------------------------------------------
// gradient checking
// ---------------------------------------------------------------------------

// Max relative error between reverse-mode and central finite differences.
// Coordinates where the one-sided differences disagree (kink of relu/hinge/
// clamp within `step` of the evaluation point) are excluded from the max.
inline double grad_check(const std::function<Tensor(const Tensor&)>& f, Tensor x,
                         double step = 1e-5) {
    x.set_requires_grad(true);
    x.zero_grad();
    Tensor loss = f(x);
    if (!loss.is_scalar()) throw ShapeError("grad_check: f must return a scalar");
    backward(loss);
    std::vector<double> ad = x.grad();

    auto eval = [&](std::int64_t i, double delta) {
        Tensor xp = x.detach();
        xp.values()[static_cast<std::size_t>(i)] += delta;
        double v = f(xp).item();
        if (!std::isfinite(v))
            throw NumericError("grad_check: non-finite value at coordinate " +
                               std::to_string(i));
        return v;
    };

    const double f0 = f(x.detach()).item();
    double max_err = 0.0;
    for (std::int64_t i = 0; i < x.numel(); ++i) {
        const double fp = eval(i, step);
        const double fm = eval(i, -step);
        const double central = (fp - fm) / (2.0 * step);
        const double fwd = (fp - f0) / step;
        const double bwd = (f0 - fm) / step;
        // non-smooth within the stencil: not checkable by central differences
        if (std::abs(fwd - bwd) > 1e-3 * (1.0 + std::abs(central))) continue;
        const double err = std::abs(ad[static_cast<std::size_t>(i)] - central) /
                           std::max(1.0, std::abs(central));
        max_err = std::max(max_err, err);
    }
    return max_err;
}

} // namespace dfpl
