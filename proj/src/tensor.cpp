#include "slicecast/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <unordered_set>

namespace slicecast::nn {

namespace {

#ifdef NDEBUG
std::atomic<bool> g_finite_checks{false};
#else
std::atomic<bool> g_finite_checks{true};
#endif

void finite_check(const char* op, const std::vector<double>& v) {
    if (!g_finite_checks.load(std::memory_order_relaxed)) return;
    for (double x : v) {
        if (!std::isfinite(x)) {
            throw NonFiniteError(std::string("op '") + op + "' produced a non-finite value");
        }
    }
}

std::shared_ptr<TensorNode> make_node(int rows, int cols) {
    auto n = std::make_shared<TensorNode>();
    n->rows = rows;
    n->cols = cols;
    n->value.assign(static_cast<std::size_t>(rows) * cols, 0.0);
    return n;
}

void ensure_grad(TensorNode& n) {
    if (n.grad.size() != n.value.size()) n.grad.assign(n.value.size(), 0.0);
}

std::string shape_str(int r, int c) {
    return "(" + std::to_string(r) + "," + std::to_string(c) + ")";
}

[[noreturn]] void shape_fail(const char* op, const TensorNode& a, const TensorNode& b) {
    throw ShapeError(std::string(op) + ": incompatible shapes " + shape_str(a.rows, a.cols) +
                     " and " + shape_str(b.rows, b.cols));
}

void require_defined(const Tensor& t, const char* op) {
    if (!t.defined()) throw GraphError(std::string(op) + ": undefined tensor");
}

// Elementwise binary op with numpy-style broadcasting on both axes.
template <typename Fwd, typename Bwd>
Tensor binary_op(const char* name, const Tensor& ta, const Tensor& tb, Fwd fwd, Bwd bwd) {
    require_defined(ta, name);
    require_defined(tb, name);
    auto a = ta.node();
    auto b = tb.node();
    if ((a->rows != b->rows && a->rows != 1 && b->rows != 1) ||
        (a->cols != b->cols && a->cols != 1 && b->cols != 1)) {
        shape_fail(name, *a, *b);
    }
    const int rows = std::max(a->rows, b->rows);
    const int cols = std::max(a->cols, b->cols);
    auto out = make_node(rows, cols);
    for (int r = 0; r < rows; ++r) {
        const int ar = a->rows == 1 ? 0 : r;
        const int br = b->rows == 1 ? 0 : r;
        for (int c = 0; c < cols; ++c) {
            const int ac = a->cols == 1 ? 0 : c;
            const int bc = b->cols == 1 ? 0 : c;
            out->value[static_cast<std::size_t>(r) * cols + c] =
                fwd(a->value[static_cast<std::size_t>(ar) * a->cols + ac],
                    b->value[static_cast<std::size_t>(br) * b->cols + bc]);
        }
    }
    finite_check(name, out->value);
    if (a->requires_grad || b->requires_grad) {
        out->requires_grad = true;
        out->parents = {a, b};
        TensorNode* ap = a.get();
        TensorNode* bp = b.get();
        out->backprop = [ap, bp, bwd](TensorNode& self) {
            const int rows = self.rows, cols = self.cols;
            if (ap->requires_grad) ensure_grad(*ap);
            if (bp->requires_grad) ensure_grad(*bp);
            for (int r = 0; r < rows; ++r) {
                const int ar = ap->rows == 1 ? 0 : r;
                const int br = bp->rows == 1 ? 0 : r;
                for (int c = 0; c < cols; ++c) {
                    const int ac = ap->cols == 1 ? 0 : c;
                    const int bc = bp->cols == 1 ? 0 : c;
                    const std::size_t ai = static_cast<std::size_t>(ar) * ap->cols + ac;
                    const std::size_t bi = static_cast<std::size_t>(br) * bp->cols + bc;
                    const double g = self.grad[static_cast<std::size_t>(r) * cols + c];
                    double da = 0.0, db = 0.0;
                    bwd(ap->value[ai], bp->value[bi], g, da, db);
                    if (ap->requires_grad) ap->grad[ai] += da;
                    if (bp->requires_grad) bp->grad[bi] += db;
                }
            }
        };
    }
    return Tensor(out);
}

// Elementwise unary op; dfdx receives the input value.
template <typename Fwd, typename Dfdx>
Tensor unary_op(const char* name, const Tensor& ta, Fwd fwd, Dfdx dfdx) {
    require_defined(ta, name);
    auto a = ta.node();
    auto out = make_node(a->rows, a->cols);
    for (std::size_t i = 0; i < a->value.size(); ++i) out->value[i] = fwd(a->value[i]);
    finite_check(name, out->value);
    if (a->requires_grad) {
        out->requires_grad = true;
        out->parents = {a};
        TensorNode* ap = a.get();
        out->backprop = [ap, dfdx](TensorNode& self) {
            ensure_grad(*ap);
            for (std::size_t i = 0; i < self.grad.size(); ++i) {
                ap->grad[i] += self.grad[i] * dfdx(ap->value[i]);
            }
        };
    }
    return Tensor(out);
}

}  // namespace

void set_finite_checks(bool enabled) {
    g_finite_checks.store(enabled, std::memory_order_relaxed);
}

bool finite_checks_enabled() {
    return g_finite_checks.load(std::memory_order_relaxed);
}

Tensor Tensor::zeros(int rows, int cols, bool requires_grad) {
    auto n = make_node(rows, cols);
    n->requires_grad = requires_grad;
    return Tensor(n);
}

Tensor Tensor::full(int rows, int cols, double value) {
    auto n = make_node(rows, cols);
    std::fill(n->value.begin(), n->value.end(), value);
    return Tensor(n);
}

Tensor Tensor::from(int rows, int cols, std::vector<double> data, bool requires_grad) {
    if (data.size() != static_cast<std::size_t>(rows) * cols) {
        throw ShapeError("Tensor::from: data length " + std::to_string(data.size()) +
                         " does not match shape " + shape_str(rows, cols));
    }
    auto n = std::make_shared<TensorNode>();
    n->rows = rows;
    n->cols = cols;
    n->value = std::move(data);
    n->requires_grad = requires_grad;
    return Tensor(n);
}

Tensor Tensor::scalar(double value) {
    return full(1, 1, value);
}

Tensor Tensor::from_matrix(const Matrix& m, bool requires_grad) {
    return from(static_cast<int>(m.rows), static_cast<int>(m.cols), m.a, requires_grad);
}

const std::vector<double>& Tensor::grad() const {
    ensure_grad(*node_);
    return node_->grad;
}

void Tensor::zero_grad() {
    node_->grad.assign(node_->value.size(), 0.0);
}

double Tensor::item() const {
    if (size() != 1) throw ShapeError("Tensor::item: tensor is not a scalar");
    return node_->value[0];
}

Matrix Tensor::to_matrix() const {
    Matrix m(static_cast<std::size_t>(rows()), static_cast<std::size_t>(cols()));
    m.a = node_->value;
    return m;
}

Tensor add(const Tensor& a, const Tensor& b) {
    return binary_op(
        "add", a, b, [](double x, double y) { return x + y; },
        [](double, double, double g, double& da, double& db) {
            da = g;
            db = g;
        });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    return binary_op(
        "sub", a, b, [](double x, double y) { return x - y; },
        [](double, double, double g, double& da, double& db) {
            da = g;
            db = -g;
        });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    return binary_op(
        "mul", a, b, [](double x, double y) { return x * y; },
        [](double x, double y, double g, double& da, double& db) {
            da = g * y;
            db = g * x;
        });
}

Tensor neg(const Tensor& a) {
    return unary_op(
        "neg", a, [](double x) { return -x; }, [](double) { return -1.0; });
}

Tensor scale(const Tensor& a, double c) {
    return unary_op(
        "scale", a, [c](double x) { return x * c; }, [c](double) { return c; });
}

Tensor add_scalar(const Tensor& a, double c) {
    return unary_op(
        "add_scalar", a, [c](double x) { return x + c; }, [](double) { return 1.0; });
}

Tensor relu(const Tensor& a) {
    return unary_op(
        "relu", a, [](double x) { return x > 0.0 ? x : 0.0; },
        [](double x) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor matmul(const Tensor& ta, const Tensor& tb) {
    require_defined(ta, "matmul");
    require_defined(tb, "matmul");
    auto a = ta.node();
    auto b = tb.node();
    if (a->cols != b->rows) shape_fail("matmul", *a, *b);
    const int m = a->rows, k = a->cols, n = b->cols;
    auto out = make_node(m, n);
    const double* pa = a->value.data();
    const double* pb = b->value.data();
    double* pc = out->value.data();
    for (int i = 0; i < m; ++i) {
        for (int l = 0; l < k; ++l) {
            const double av = pa[static_cast<std::size_t>(i) * k + l];
            if (av == 0.0) continue;
            const double* brow = pb + static_cast<std::size_t>(l) * n;
            double* crow = pc + static_cast<std::size_t>(i) * n;
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
    finite_check("matmul", out->value);
    if (a->requires_grad || b->requires_grad) {
        out->requires_grad = true;
        out->parents = {a, b};
        TensorNode* ap = a.get();
        TensorNode* bp = b.get();
        out->backprop = [ap, bp, m, k, n](TensorNode& self) {
            const double* pg = self.grad.data();
            if (ap->requires_grad) {
                ensure_grad(*ap);
                const double* pb2 = bp->value.data();
                for (int i = 0; i < m; ++i) {
                    for (int l = 0; l < k; ++l) {
                        const double* grow = pg + static_cast<std::size_t>(i) * n;
                        const double* brow = pb2 + static_cast<std::size_t>(l) * n;
                        double s = 0.0;
                        for (int j = 0; j < n; ++j) s += grow[j] * brow[j];
                        ap->grad[static_cast<std::size_t>(i) * k + l] += s;
                    }
                }
            }
            if (bp->requires_grad) {
                ensure_grad(*bp);
                const double* pa2 = ap->value.data();
                for (int l = 0; l < k; ++l) {
                    double* brow = bp->grad.data() + static_cast<std::size_t>(l) * n;
                    for (int i = 0; i < m; ++i) {
                        const double av = pa2[static_cast<std::size_t>(i) * k + l];
                        if (av == 0.0) continue;
                        const double* grow = pg + static_cast<std::size_t>(i) * n;
                        for (int j = 0; j < n; ++j) brow[j] += av * grow[j];
                    }
                }
            }
        };
    }
    return Tensor(out);
}

Tensor transpose(const Tensor& ta) {
    require_defined(ta, "transpose");
    auto a = ta.node();
    auto out = make_node(a->cols, a->rows);
    for (int r = 0; r < a->rows; ++r) {
        for (int c = 0; c < a->cols; ++c) {
            out->value[static_cast<std::size_t>(c) * a->rows + r] =
                a->value[static_cast<std::size_t>(r) * a->cols + c];
        }
    }
    if (a->requires_grad) {
        out->requires_grad = true;
        out->parents = {a};
        TensorNode* ap = a.get();
        out->backprop = [ap](TensorNode& self) {
            ensure_grad(*ap);
            for (int r = 0; r < self.rows; ++r) {
                for (int c = 0; c < self.cols; ++c) {
                    ap->grad[static_cast<std::size_t>(c) * ap->cols + r] +=
                        self.grad[static_cast<std::size_t>(r) * self.cols + c];
                }
            }
        };
    }
    return Tensor(out);
}

Tensor softmax(const Tensor& ta, int axis) {
    require_defined(ta, "softmax");
    if (axis != 0 && axis != 1) throw ShapeError("softmax: axis must be 0 or 1");
    auto a = ta.node();
    const int rows = a->rows, cols = a->cols;
    auto out = make_node(rows, cols);
    const int vectors = axis == 1 ? rows : cols;
    const int length = axis == 1 ? cols : rows;
    const std::size_t vstride = axis == 1 ? cols : 1;
    const std::size_t estride = axis == 1 ? 1 : cols;
    for (int v = 0; v < vectors; ++v) {
        const double* src = a->value.data() + v * vstride;
        double* dst = out->value.data() + v * vstride;
        double mx = src[0];
        for (int e = 1; e < length; ++e) mx = std::max(mx, src[e * estride]);
        double denom = 0.0;
        for (int e = 0; e < length; ++e) {
            const double ex = std::exp(src[e * estride] - mx);
            dst[e * estride] = ex;
            denom += ex;
        }
        for (int e = 0; e < length; ++e) dst[e * estride] /= denom;
    }
    finite_check("softmax", out->value);
    if (a->requires_grad) {
        out->requires_grad = true;
        out->parents = {a};
        TensorNode* ap = a.get();
        out->backprop = [ap, vectors, length, vstride, estride](TensorNode& self) {
            ensure_grad(*ap);
            for (int v = 0; v < vectors; ++v) {
                const double* s = self.value.data() + v * vstride;
                const double* g = self.grad.data() + v * vstride;
                double dot = 0.0;
                for (int e = 0; e < length; ++e) dot += g[e * estride] * s[e * estride];
                double* da = ap->grad.data() + v * vstride;
                for (int e = 0; e < length; ++e) {
                    da[e * estride] += s[e * estride] * (g[e * estride] - dot);
                }
            }
        };
    }
    return Tensor(out);
}

Tensor layer_norm(const Tensor& tx, const Tensor& tgamma, const Tensor& tbeta, double eps) {
    require_defined(tx, "layer_norm");
    require_defined(tgamma, "layer_norm");
    require_defined(tbeta, "layer_norm");
    auto x = tx.node();
    auto gamma = tgamma.node();
    auto beta = tbeta.node();
    if (gamma->rows != 1 || gamma->cols != x->cols) shape_fail("layer_norm(gamma)", *x, *gamma);
    if (beta->rows != 1 || beta->cols != x->cols) shape_fail("layer_norm(beta)", *x, *beta);
    const int rows = x->rows, cols = x->cols;
    auto out = make_node(rows, cols);
    std::vector<double> xhat(static_cast<std::size_t>(rows) * cols);
    std::vector<double> inv_sigma(rows);
    for (int r = 0; r < rows; ++r) {
        const double* px = x->value.data() + static_cast<std::size_t>(r) * cols;
        double mu = 0.0;
        for (int c = 0; c < cols; ++c) mu += px[c];
        mu /= cols;
        double var = 0.0;
        for (int c = 0; c < cols; ++c) var += (px[c] - mu) * (px[c] - mu);
        var /= cols;
        const double inv = 1.0 / std::sqrt(var + eps);
        inv_sigma[r] = inv;
        double* ph = xhat.data() + static_cast<std::size_t>(r) * cols;
        double* po = out->value.data() + static_cast<std::size_t>(r) * cols;
        for (int c = 0; c < cols; ++c) {
            ph[c] = (px[c] - mu) * inv;
            po[c] = gamma->value[c] * ph[c] + beta->value[c];
        }
    }
    finite_check("layer_norm", out->value);
    if (x->requires_grad || gamma->requires_grad || beta->requires_grad) {
        out->requires_grad = true;
        out->parents = {x, gamma, beta};
        TensorNode* xp = x.get();
        TensorNode* gp = gamma.get();
        TensorNode* bp = beta.get();
        out->backprop = [xp, gp, bp, rows, cols, xhat = std::move(xhat),
                         inv_sigma = std::move(inv_sigma)](TensorNode& self) {
            if (xp->requires_grad) ensure_grad(*xp);
            if (gp->requires_grad) ensure_grad(*gp);
            if (bp->requires_grad) ensure_grad(*bp);
            for (int r = 0; r < rows; ++r) {
                const double* g = self.grad.data() + static_cast<std::size_t>(r) * cols;
                const double* ph = xhat.data() + static_cast<std::size_t>(r) * cols;
                if (gp->requires_grad || bp->requires_grad) {
                    for (int c = 0; c < cols; ++c) {
                        if (gp->requires_grad) gp->grad[c] += g[c] * ph[c];
                        if (bp->requires_grad) bp->grad[c] += g[c];
                    }
                }
                if (xp->requires_grad) {
                    double mean_gg = 0.0, mean_ggx = 0.0;
                    for (int c = 0; c < cols; ++c) {
                        const double gg = g[c] * gp->value[c];
                        mean_gg += gg;
                        mean_ggx += gg * ph[c];
                    }
                    mean_gg /= cols;
                    mean_ggx /= cols;
                    double* dx = xp->grad.data() + static_cast<std::size_t>(r) * cols;
                    for (int c = 0; c < cols; ++c) {
                        const double gg = g[c] * gp->value[c];
                        dx[c] += inv_sigma[r] * (gg - mean_gg - ph[c] * mean_ggx);
                    }
                }
            }
        };
    }
    return Tensor(out);
}

Tensor mean_all(const Tensor& ta) {
    require_defined(ta, "mean_all");
    auto a = ta.node();
    auto out = make_node(1, 1);
    double s = 0.0;
    for (double v : a->value) s += v;
    const double inv_n = 1.0 / static_cast<double>(a->value.size());
    out->value[0] = s * inv_n;
    finite_check("mean_all", out->value);
    if (a->requires_grad) {
        out->requires_grad = true;
        out->parents = {a};
        TensorNode* ap = a.get();
        out->backprop = [ap, inv_n](TensorNode& self) {
            ensure_grad(*ap);
            const double g = self.grad[0] * inv_n;
            for (double& d : ap->grad) d += g;
        };
    }
    return Tensor(out);
}

Tensor mean_axis0(const Tensor& ta) {
    require_defined(ta, "mean_axis0");
    auto a = ta.node();
    const int rows = a->rows, cols = a->cols;
    auto out = make_node(1, cols);
    const double inv_r = 1.0 / static_cast<double>(rows);
    for (int r = 0; r < rows; ++r) {
        const double* px = a->value.data() + static_cast<std::size_t>(r) * cols;
        for (int c = 0; c < cols; ++c) out->value[c] += px[c];
    }
    for (int c = 0; c < cols; ++c) out->value[c] *= inv_r;
    finite_check("mean_axis0", out->value);
    if (a->requires_grad) {
        out->requires_grad = true;
        out->parents = {a};
        TensorNode* ap = a.get();
        out->backprop = [ap, rows, cols, inv_r](TensorNode& self) {
            ensure_grad(*ap);
            for (int r = 0; r < rows; ++r) {
                double* dx = ap->grad.data() + static_cast<std::size_t>(r) * cols;
                for (int c = 0; c < cols; ++c) dx[c] += self.grad[c] * inv_r;
            }
        };
    }
    return Tensor(out);
}

Tensor mse_loss(const Tensor& tpred, const Tensor& ttarget) {
    require_defined(tpred, "mse_loss");
    require_defined(ttarget, "mse_loss");
    auto p = tpred.node();
    auto t = ttarget.node();
    if (p->rows != t->rows || p->cols != t->cols) shape_fail("mse_loss", *p, *t);
    auto out = make_node(1, 1);
    double s = 0.0;
    for (std::size_t i = 0; i < p->value.size(); ++i) {
        const double d = p->value[i] - t->value[i];
        s += d * d;
    }
    const double inv_n = 1.0 / static_cast<double>(p->value.size());
    out->value[0] = s * inv_n;
    finite_check("mse_loss", out->value);
    if (p->requires_grad || t->requires_grad) {
        out->requires_grad = true;
        out->parents = {p, t};
        TensorNode* pp = p.get();
        TensorNode* tp = t.get();
        out->backprop = [pp, tp, inv_n](TensorNode& self) {
            const double g = self.grad[0] * 2.0 * inv_n;
            if (pp->requires_grad) ensure_grad(*pp);
            if (tp->requires_grad) ensure_grad(*tp);
            for (std::size_t i = 0; i < pp->value.size(); ++i) {
                const double d = (pp->value[i] - tp->value[i]) * g;
                if (pp->requires_grad) pp->grad[i] += d;
                if (tp->requires_grad) tp->grad[i] -= d;
            }
        };
    }
    return Tensor(out);
}

Tensor concat(const std::vector<Tensor>& parts, int axis) {
    if (parts.empty()) throw ShapeError("concat: no inputs");
    if (axis != 0 && axis != 1) throw ShapeError("concat: axis must be 0 or 1");
    for (const auto& p : parts) require_defined(p, "concat");
    int rows = parts[0].rows(), cols = parts[0].cols();
    bool needs_grad = parts[0].requires_grad();
    for (std::size_t i = 1; i < parts.size(); ++i) {
        if (axis == 0) {
            if (parts[i].cols() != cols) shape_fail("concat", *parts[0].node(), *parts[i].node());
            rows += parts[i].rows();
        } else {
            if (parts[i].rows() != rows) shape_fail("concat", *parts[0].node(), *parts[i].node());
            cols += parts[i].cols();
        }
        needs_grad = needs_grad || parts[i].requires_grad();
    }
    auto out = make_node(rows, cols);
    std::vector<std::shared_ptr<TensorNode>> nodes;
    nodes.reserve(parts.size());
    for (const auto& p : parts) nodes.push_back(p.node());
    int offset = 0;
    for (const auto& n : nodes) {
        if (axis == 0) {
            std::copy(n->value.begin(), n->value.end(),
                      out->value.begin() + static_cast<std::size_t>(offset) * cols);
            offset += n->rows;
        } else {
            for (int r = 0; r < rows; ++r) {
                std::copy(n->value.begin() + static_cast<std::size_t>(r) * n->cols,
                          n->value.begin() + static_cast<std::size_t>(r + 1) * n->cols,
                          out->value.begin() + static_cast<std::size_t>(r) * cols + offset);
            }
            offset += n->cols;
        }
    }
    if (needs_grad) {
        out->requires_grad = true;
        out->parents = nodes;
        const int out_cols = cols;
        out->backprop = [axis, out_cols](TensorNode& self) {
            int offset = 0;
            for (const auto& n : self.parents) {
                if (n->requires_grad) {
                    ensure_grad(*n);
                    if (axis == 0) {
                        for (std::size_t i = 0; i < n->value.size(); ++i) {
                            n->grad[i] += self.grad[static_cast<std::size_t>(offset) * out_cols + i];
                        }
                    } else {
                        for (int r = 0; r < n->rows; ++r) {
                            for (int c = 0; c < n->cols; ++c) {
                                n->grad[static_cast<std::size_t>(r) * n->cols + c] +=
                                    self.grad[static_cast<std::size_t>(r) * out_cols + offset + c];
                            }
                        }
                    }
                }
                offset += axis == 0 ? n->rows : n->cols;
            }
        };
    }
    return Tensor(out);
}

Tensor slice(const Tensor& ta, int axis, int begin, int end) {
    require_defined(ta, "slice");
    if (axis != 0 && axis != 1) throw ShapeError("slice: axis must be 0 or 1");
    auto a = ta.node();
    const int extent = axis == 0 ? a->rows : a->cols;
    if (begin < 0 || end > extent || begin >= end) {
        throw ShapeError("slice: range [" + std::to_string(begin) + "," + std::to_string(end) +
                         ") out of bounds for extent " + std::to_string(extent));
    }
    const int rows = axis == 0 ? end - begin : a->rows;
    const int cols = axis == 0 ? a->cols : end - begin;
    auto out = make_node(rows, cols);
    for (int r = 0; r < rows; ++r) {
        const int sr = axis == 0 ? r + begin : r;
        for (int c = 0; c < cols; ++c) {
            const int sc = axis == 0 ? c : c + begin;
            out->value[static_cast<std::size_t>(r) * cols + c] =
                a->value[static_cast<std::size_t>(sr) * a->cols + sc];
        }
    }
    if (a->requires_grad) {
        out->requires_grad = true;
        out->parents = {a};
        TensorNode* ap = a.get();
        out->backprop = [ap, axis, begin](TensorNode& self) {
            ensure_grad(*ap);
            for (int r = 0; r < self.rows; ++r) {
                const int sr = axis == 0 ? r + begin : r;
                for (int c = 0; c < self.cols; ++c) {
                    const int sc = axis == 0 ? c : c + begin;
                    ap->grad[static_cast<std::size_t>(sr) * ap->cols + sc] +=
                        self.grad[static_cast<std::size_t>(r) * self.cols + c];
                }
            }
        };
    }
    return Tensor(out);
}

Tensor roll(const Tensor& ta, int shift, int axis) {
    require_defined(ta, "roll");
    if (axis != 0 && axis != 1) throw ShapeError("roll: axis must be 0 or 1");
    auto a = ta.node();
    const int n = axis == 0 ? a->rows : a->cols;
    int s = shift % n;
    if (s < 0) s += n;
    auto out = make_node(a->rows, a->cols);
    for (int r = 0; r < a->rows; ++r) {
        const int sr = axis == 0 ? (r - s + n) % n : r;
        for (int c = 0; c < a->cols; ++c) {
            const int sc = axis == 1 ? (c - s + n) % n : c;
            out->value[static_cast<std::size_t>(r) * a->cols + c] =
                a->value[static_cast<std::size_t>(sr) * a->cols + sc];
        }
    }
    if (a->requires_grad) {
        out->requires_grad = true;
        out->parents = {a};
        TensorNode* ap = a.get();
        const int ss = s;
        out->backprop = [ap, ss, axis](TensorNode& self) {
            ensure_grad(*ap);
            const int n = axis == 0 ? ap->rows : ap->cols;
            for (int r = 0; r < self.rows; ++r) {
                const int sr = axis == 0 ? (r - ss + n) % n : r;
                for (int c = 0; c < self.cols; ++c) {
                    const int sc = axis == 1 ? (c - ss + n) % n : c;
                    ap->grad[static_cast<std::size_t>(sr) * ap->cols + sc] +=
                        self.grad[static_cast<std::size_t>(r) * self.cols + c];
                }
            }
        };
    }
    return Tensor(out);
}

Tensor moving_average_rows(const Tensor& ta, int kernel) {
    require_defined(ta, "moving_average_rows");
    if (kernel < 1 || kernel % 2 == 0) {
        throw ShapeError("moving_average_rows: kernel must be odd and >= 1, got " +
                         std::to_string(kernel));
    }
    auto a = ta.node();
    const int rows = a->rows, cols = a->cols;
    const int half = kernel / 2;
    const double inv_k = 1.0 / static_cast<double>(kernel);
    auto out = make_node(rows, cols);
    for (int t = 0; t < rows; ++t) {
        double* po = out->value.data() + static_cast<std::size_t>(t) * cols;
        for (int j = -half; j <= half; ++j) {
            const int src = std::clamp(t + j, 0, rows - 1);
            const double* px = a->value.data() + static_cast<std::size_t>(src) * cols;
            for (int c = 0; c < cols; ++c) po[c] += px[c];
        }
        for (int c = 0; c < cols; ++c) po[c] *= inv_k;
    }
    finite_check("moving_average_rows", out->value);
    if (a->requires_grad) {
        out->requires_grad = true;
        out->parents = {a};
        TensorNode* ap = a.get();
        out->backprop = [ap, rows, cols, half, inv_k](TensorNode& self) {
            ensure_grad(*ap);
            for (int t = 0; t < rows; ++t) {
                const double* g = self.grad.data() + static_cast<std::size_t>(t) * cols;
                for (int j = -half; j <= half; ++j) {
                    const int src = std::clamp(t + j, 0, rows - 1);
                    double* dx = ap->grad.data() + static_cast<std::size_t>(src) * cols;
                    for (int c = 0; c < cols; ++c) dx[c] += g[c] * inv_k;
                }
            }
        };
    }
    return Tensor(out);
}

Tensor dropout(const Tensor& ta, double p, Rng& rng, bool training) {
    require_defined(ta, "dropout");
    if (p < 0.0 || p >= 1.0) throw ShapeError("dropout: p must be in [0,1)");
    if (!training || p == 0.0) return ta;
    auto a = ta.node();
    const double keep_scale = 1.0 / (1.0 - p);
    std::vector<double> mask(a->value.size());
    for (auto& m : mask) m = rng.uniform() >= p ? keep_scale : 0.0;
    auto out = make_node(a->rows, a->cols);
    for (std::size_t i = 0; i < mask.size(); ++i) out->value[i] = a->value[i] * mask[i];
    if (a->requires_grad) {
        out->requires_grad = true;
        out->parents = {a};
        TensorNode* ap = a.get();
        out->backprop = [ap, mask = std::move(mask)](TensorNode& self) {
            ensure_grad(*ap);
            for (std::size_t i = 0; i < mask.size(); ++i) ap->grad[i] += self.grad[i] * mask[i];
        };
    }
    return Tensor(out);
}

void backward(const Tensor& loss) {
    if (!loss.defined()) throw GraphError("backward: undefined loss tensor");
    auto root = loss.node();
    if (root->size() != 1) throw ShapeError("backward: loss must be a scalar");
    if (root->backward_done) {
        throw GraphError("backward: already called on this graph; rebuild it or reset first");
    }
    if (!root->requires_grad) {
        throw GraphError("backward: loss does not depend on any parameter");
    }
    root->backward_done = true;

    // Iterative post-order DFS; order then reversed for the backward sweep.
    std::vector<TensorNode*> order;
    std::unordered_set<TensorNode*> visited;
    std::vector<std::pair<TensorNode*, std::size_t>> stack;
    stack.emplace_back(root.get(), 0);
    visited.insert(root.get());
    while (!stack.empty()) {
        auto& [node, idx] = stack.back();
        if (idx < node->parents.size()) {
            TensorNode* parent = node->parents[idx].get();
            ++idx;
            if (parent->requires_grad && !visited.count(parent)) {
                visited.insert(parent);
                stack.emplace_back(parent, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    ensure_grad(*root);
    root->grad[0] = 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        TensorNode* node = *it;
        if (node->backprop) {
            ensure_grad(*node);
            node->backprop(*node);
        }
    }
}

}  // namespace slicecast::nn
