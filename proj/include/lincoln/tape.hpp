#ifndef LINCOLN_TAPE_HPP
#define LINCOLN_TAPE_HPP

#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "lincoln/errors.hpp"
#include "lincoln/tensor.hpp"

namespace lincoln {

class Tape;

// Handle to a node on a Tape. Cheap to copy; valid while the tape lives.
class Var {
public:
    Var() : tape_(nullptr), id_(0) {}
    Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

    const Tensor& value() const;
    Tape* tape() const { return tape_; }
    std::size_t id() const { return id_; }
    std::size_t rows() const { return value().rows(); }
    std::size_t cols() const { return value().cols(); }

private:
    Tape* tape_;
    std::size_t id_;
};

// Append-only computation tape. Creation order is a topological order, so the
// reverse pass is a single reverse sweep. One tape is confined to one thread.
class Tape {
public:
    using BackwardFn =
        std::function<void(Tape&, const Tensor& grad_out, std::vector<Tensor>& grads)>;

    Var constant(Tensor value) { return push(std::move(value), nullptr, "constant"); }

    // Named parameter leaf; reusing a name returns the existing node so that
    // gradients from every use accumulate in one slot.
    Var param(const std::string& name, const Tensor& value) {
        auto it = param_ids_.find(name);
        if (it != param_ids_.end()) return Var(this, it->second);
        Var v = push(value, nullptr, "param");
        param_ids_.emplace(name, v.id());
        return v;
    }

    const Tensor& value(std::size_t id) const { return nodes_[id].value; }
    std::size_t node_count() const { return nodes_.size(); }
    std::size_t next_id() const { return nodes_.size(); }
    const std::map<std::string, std::size_t>& param_ids() const { return param_ids_; }

    Var push(Tensor value, BackwardFn backward, const char* op) {
        value.assert_finite(op);
        nodes_.push_back(Node{std::move(value), std::move(backward)});
        return Var(this, nodes_.size() - 1);
    }

    // Reverse sweep from a scalar output. Returns per-parameter gradients;
    // parameters never reached by the sweep get zeros of their own shape.
    std::map<std::string, Tensor> backward(Var output) {
        if (output.tape() != this) raise(ErrorCode::ShapeMismatch, "output from another tape");
        const Tensor& out = nodes_[output.id()].value;
        if (out.rows() != 1 || out.cols() != 1)
            raise(ErrorCode::NotScalarOutput, "backward needs a 1x1 output");

        std::vector<Tensor> grads(nodes_.size());
        grads[output.id()] = Tensor(1, 1, std::vector<double>{1.0});
        for (std::size_t i = nodes_.size(); i-- > 0;) {
            if (grads[i].size() == 0 || !nodes_[i].backward) continue;
            nodes_[i].backward(*this, grads[i], grads);
        }

        std::map<std::string, Tensor> out_grads;
        for (const auto& [name, id] : param_ids_) {
            if (grads[id].size() != 0)
                out_grads.emplace(name, std::move(grads[id]));
            else
                out_grads.emplace(name, Tensor(nodes_[id].value.rows(), nodes_[id].value.cols(), 0.0));
        }
        return out_grads;
    }

    static Tensor& slot(std::vector<Tensor>& grads, std::size_t id, std::size_t rows, std::size_t cols) {
        if (grads[id].size() == 0) grads[id] = Tensor(rows, cols, 0.0);
        return grads[id];
    }

private:
    struct Node {
        Tensor value;
        BackwardFn backward; // null for leaves
    };
    std::vector<Node> nodes_;
    std::map<std::string, std::size_t> param_ids_;
};

inline const Tensor& Var::value() const { return tape_->value(id_); }

namespace detail {

inline void require_same_tape(Var a, Var b, const char* op) {
    if (a.tape() != b.tape()) raise(ErrorCode::ShapeMismatch, std::string(op) + ": vars on different tapes");
}

} // namespace detail

// ---- primitive operations --------------------------------------------------

inline Var matmul(Var a, Var b) {
    detail::require_same_tape(a, b, "matmul");
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    if (av.cols() != bv.rows()) raise(ErrorCode::ShapeMismatch, "matmul");
    const std::size_t n = av.rows(), m = av.cols(), k = bv.cols();
    Tensor out(n, k, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double* arow = av.data() + i * m;
        double* orow = out.data() + i * k;
        for (std::size_t p = 0; p < m; ++p) {
            const double aip = arow[p];
            if (aip == 0.0) continue;
            const double* brow = bv.data() + p * k;
            for (std::size_t j = 0; j < k; ++j) orow[j] += aip * brow[j];
        }
    }
    const std::size_t ai = a.id(), bi = b.id();
    return a.tape()->push(std::move(out),
        [ai, bi, n, m, k](Tape& t, const Tensor& g, std::vector<Tensor>& grads) {
            const Tensor& av = t.value(ai);
            const Tensor& bv = t.value(bi);
            Tensor& da = Tape::slot(grads, ai, n, m);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < k; ++j) {
                    const double gij = g(i, j);
                    if (gij == 0.0) continue;
                    for (std::size_t p = 0; p < m; ++p) da(i, p) += gij * bv(p, j);
                }
            Tensor& db = Tape::slot(grads, bi, m, k);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t p = 0; p < m; ++p) {
                    const double aip = av(i, p);
                    if (aip == 0.0) continue;
                    for (std::size_t j = 0; j < k; ++j) db(p, j) += aip * g(i, j);
                }
        },
        "matmul");
}

// Sparse-by-dense product with a constant sparse matrix. The node keeps its
// own copy so the matrix may be a temporary.
inline Var spmm(const SparseMatrix& a, Var x) {
    const Tensor& xv = x.value();
    Tensor out = a.multiply(xv);
    auto ap = std::make_shared<const SparseMatrix>(a);
    const std::size_t xi = x.id();
    return x.tape()->push(std::move(out),
        [ap, xi](Tape& t, const Tensor& g, std::vector<Tensor>& grads) {
            Tensor dx = ap->multiply_transposed(g);
            Tape::slot(grads, xi, dx.rows(), dx.cols()).add_in_place(dx);
            (void)t;
        },
        "spmm");
}

inline Var transpose(Var a) {
    const Tensor& av = a.value();
    Tensor out(av.cols(), av.rows());
    for (std::size_t i = 0; i < av.rows(); ++i)
        for (std::size_t j = 0; j < av.cols(); ++j) out(j, i) = av(i, j);
    const std::size_t ai = a.id();
    return a.tape()->push(std::move(out),
        [ai](Tape& t, const Tensor& g, std::vector<Tensor>& grads) {
            Tensor& da = Tape::slot(grads, ai, g.cols(), g.rows());
            for (std::size_t i = 0; i < g.rows(); ++i)
                for (std::size_t j = 0; j < g.cols(); ++j) da(j, i) += g(i, j);
            (void)t;
        },
        "transpose");
}

inline Var add(Var a, Var b) {
    detail::require_same_tape(a, b, "add");
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    if (!av.same_shape(bv)) raise(ErrorCode::ShapeMismatch, "add");
    Tensor out = av;
    out.add_in_place(bv);
    const std::size_t ai = a.id(), bi = b.id();
    return a.tape()->push(std::move(out),
        [ai, bi](Tape& t, const Tensor& g, std::vector<Tensor>& grads) {
            Tape::slot(grads, ai, g.rows(), g.cols()).add_in_place(g);
            Tape::slot(grads, bi, g.rows(), g.cols()).add_in_place(g);
            (void)t;
        },
        "add");
}

inline Var sub(Var a, Var b) {
    detail::require_same_tape(a, b, "sub");
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    if (!av.same_shape(bv)) raise(ErrorCode::ShapeMismatch, "sub");
    Tensor out = av;
    for (std::size_t i = 0; i < out.size(); ++i) out.raw()[i] -= bv.raw()[i];
    const std::size_t ai = a.id(), bi = b.id();
    return a.tape()->push(std::move(out),
        [ai, bi](Tape& t, const Tensor& g, std::vector<Tensor>& grads) {
            Tape::slot(grads, ai, g.rows(), g.cols()).add_in_place(g);
            Tensor& db = Tape::slot(grads, bi, g.rows(), g.cols());
            for (std::size_t i = 0; i < g.size(); ++i) db.raw()[i] -= g.raw()[i];
            (void)t;
        },
        "sub");
}

inline Var mul(Var a, Var b) {
    detail::require_same_tape(a, b, "mul");
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    if (!av.same_shape(bv)) raise(ErrorCode::ShapeMismatch, "mul");
    Tensor out = av;
    for (std::size_t i = 0; i < out.size(); ++i) out.raw()[i] *= bv.raw()[i];
    const std::size_t ai = a.id(), bi = b.id();
    return a.tape()->push(std::move(out),
        [ai, bi](Tape& t, const Tensor& g, std::vector<Tensor>& grads) {
            const Tensor& av = t.value(ai);
            const Tensor& bv = t.value(bi);
            Tensor& da = Tape::slot(grads, ai, g.rows(), g.cols());
            Tensor& db = Tape::slot(grads, bi, g.rows(), g.cols());
            for (std::size_t i = 0; i < g.size(); ++i) {
                da.raw()[i] += g.raw()[i] * bv.raw()[i];
                db.raw()[i] += g.raw()[i] * av.raw()[i];
            }
        },
        "mul");
}

inline Var scalar_mul(double c, Var a) {
    Tensor out = a.value();
    for (double& x : out.raw()) x *= c;
    const std::size_t ai = a.id();
    return a.tape()->push(std::move(out),
        [ai, c](Tape& t, const Tensor& g, std::vector<Tensor>& grads) {
            Tensor& da = Tape::slot(grads, ai, g.rows(), g.cols());
            for (std::size_t i = 0; i < g.size(); ++i) da.raw()[i] += c * g.raw()[i];
            (void)t;
        },
        "scalar_mul");
}

// Stack vertically: [a; b]
inline Var concat_rows(Var a, Var b) {
    detail::require_same_tape(a, b, "concat_rows");
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    if (av.cols() != bv.cols()) raise(ErrorCode::ShapeMismatch, "concat_rows");
    Tensor out(av.rows() + bv.rows(), av.cols());
    std::copy(av.raw().begin(), av.raw().end(), out.raw().begin());
    std::copy(bv.raw().begin(), bv.raw().end(), out.raw().begin() + av.size());
    const std::size_t ai = a.id(), bi = b.id();
    const std::size_t ar = av.rows(), br = bv.rows(), c = av.cols();
    return a.tape()->push(std::move(out),
        [ai, bi, ar, br, c](Tape& t, const Tensor& g, std::vector<Tensor>& grads) {
            Tensor& da = Tape::slot(grads, ai, ar, c);
            Tensor& db = Tape::slot(grads, bi, br, c);
            for (std::size_t i = 0; i < ar * c; ++i) da.raw()[i] += g.raw()[i];
            for (std::size_t i = 0; i < br * c; ++i) db.raw()[i] += g.raw()[ar * c + i];
            (void)t;
        },
        "concat_rows");
}

// Concatenate every row: [a | b]
inline Var concat_cols(Var a, Var b) {
    detail::require_same_tape(a, b, "concat_cols");
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    if (av.rows() != bv.rows()) raise(ErrorCode::ShapeMismatch, "concat_cols");
    const std::size_t n = av.rows(), ca = av.cols(), cb = bv.cols();
    Tensor out(n, ca + cb);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < ca; ++j) out(i, j) = av(i, j);
        for (std::size_t j = 0; j < cb; ++j) out(i, ca + j) = bv(i, j);
    }
    const std::size_t ai = a.id(), bi = b.id();
    return a.tape()->push(std::move(out),
        [ai, bi, n, ca, cb](Tape& t, const Tensor& g, std::vector<Tensor>& grads) {
            Tensor& da = Tape::slot(grads, ai, n, ca);
            Tensor& db = Tape::slot(grads, bi, n, cb);
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < ca; ++j) da(i, j) += g(i, j);
                for (std::size_t j = 0; j < cb; ++j) db(i, j) += g(i, ca + j);
            }
            (void)t;
        },
        "concat_cols");
}

// Mean along each row: n×m -> n×1
inline Var row_mean(Var a) {
    const Tensor& av = a.value();
    if (av.cols() == 0) raise(ErrorCode::ShapeMismatch, "row_mean of empty rows");
    Tensor out(av.rows(), 1);
    for (std::size_t i = 0; i < av.rows(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < av.cols(); ++j) s += av(i, j);
        out(i, 0) = s / static_cast<double>(av.cols());
    }
    const std::size_t ai = a.id(), n = av.rows(), m = av.cols();
    return a.tape()->push(std::move(out),
        [ai, n, m](Tape& t, const Tensor& g, std::vector<Tensor>& grads) {
            Tensor& da = Tape::slot(grads, ai, n, m);
            const double inv = 1.0 / static_cast<double>(m);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < m; ++j) da(i, j) += g(i, 0) * inv;
            (void)t;
        },
        "row_mean");
}

inline Var sigmoid(Var a) {
    Tensor out = a.value();
    for (double& x : out.raw()) x = 1.0 / (1.0 + std::exp(-x));
    const std::size_t ai = a.id();
    const std::size_t self = a.tape()->next_id();
    return a.tape()->push(std::move(out),
        [ai, self](Tape& t, const Tensor& g, std::vector<Tensor>& grads) {
            const Tensor& s = t.value(self);
            Tensor& da = Tape::slot(grads, ai, g.rows(), g.cols());
            for (std::size_t i = 0; i < g.size(); ++i) {
                const double si = s.raw()[i];
                da.raw()[i] += g.raw()[i] * si * (1.0 - si);
            }
        },
        "sigmoid");
}

inline Var tanh_activate(Var a) {
    Tensor out = a.value();
    for (double& x : out.raw()) x = std::tanh(x);
    const std::size_t ai = a.id();
    const std::size_t self = a.tape()->next_id();
    return a.tape()->push(std::move(out),
        [ai, self](Tape& t, const Tensor& g, std::vector<Tensor>& grads) {
            const Tensor& y = t.value(self);
            Tensor& da = Tape::slot(grads, ai, g.rows(), g.cols());
            for (std::size_t i = 0; i < g.size(); ++i) {
                const double yi = y.raw()[i];
                da.raw()[i] += g.raw()[i] * (1.0 - yi * yi);
            }
        },
        "tanh");
}

inline Var relu(Var a) {
    Tensor out = a.value();
    for (double& x : out.raw()) x = x > 0.0 ? x : 0.0;
    const std::size_t ai = a.id();
    return a.tape()->push(std::move(out),
        [ai](Tape& t, const Tensor& g, std::vector<Tensor>& grads) {
            const Tensor& x = t.value(ai);
            Tensor& da = Tape::slot(grads, ai, g.rows(), g.cols());
            for (std::size_t i = 0; i < g.size(); ++i)
                if (x.raw()[i] > 0.0) da.raw()[i] += g.raw()[i];
        },
        "relu");
}

// Elementwise natural log; callers clamp the argument away from zero first.
inline Var natural_log(Var a) {
    Tensor out = a.value();
    for (double& x : out.raw()) x = std::log(x);
    const std::size_t ai = a.id();
    return a.tape()->push(std::move(out),
        [ai](Tape& t, const Tensor& g, std::vector<Tensor>& grads) {
            const Tensor& x = t.value(ai);
            Tensor& da = Tape::slot(grads, ai, g.rows(), g.cols());
            for (std::size_t i = 0; i < g.size(); ++i) da.raw()[i] += g.raw()[i] / x.raw()[i];
        },
        "log");
}

// max(x, floor); gradient passes only where x > floor.
inline Var clamp_below(Var a, double floor) {
    Tensor out = a.value();
    for (double& x : out.raw()) x = x > floor ? x : floor;
    const std::size_t ai = a.id();
    return a.tape()->push(std::move(out),
        [ai, floor](Tape& t, const Tensor& g, std::vector<Tensor>& grads) {
            const Tensor& x = t.value(ai);
            Tensor& da = Tape::slot(grads, ai, g.rows(), g.cols());
            for (std::size_t i = 0; i < g.size(); ++i)
                if (x.raw()[i] > floor) da.raw()[i] += g.raw()[i];
        },
        "clamp_below");
}

// out_i = cos(omega_i * t + phi_i) for column vectors omega, phi.
inline Var cos_affine(Var omega, Var phi, double t) {
    detail::require_same_tape(omega, phi, "cos_affine");
    const Tensor& ov = omega.value();
    const Tensor& pv = phi.value();
    if (!ov.same_shape(pv) || ov.cols() != 1) raise(ErrorCode::ShapeMismatch, "cos_affine");
    Tensor out(ov.rows(), 1);
    for (std::size_t i = 0; i < ov.rows(); ++i) out(i, 0) = std::cos(ov(i, 0) * t + pv(i, 0));
    const std::size_t oi = omega.id(), pi = phi.id(), n = ov.rows();
    return omega.tape()->push(std::move(out),
        [oi, pi, t, n](Tape& tp, const Tensor& g, std::vector<Tensor>& grads) {
            const Tensor& ov = tp.value(oi);
            const Tensor& pv = tp.value(pi);
            Tensor& domega = Tape::slot(grads, oi, n, 1);
            Tensor& dphi = Tape::slot(grads, pi, n, 1);
            for (std::size_t i = 0; i < n; ++i) {
                const double s = std::sin(ov(i, 0) * t + pv(i, 0));
                domega(i, 0) += -g(i, 0) * s * t;
                dphi(i, 0) += -g(i, 0) * s;
            }
        },
        "cos_affine");
}

// Per-row cosine similarity of two n×d matrices -> n×1. Rows where either
// side has zero norm yield 0 with zero gradient.
inline Var rowwise_cosine(Var a, Var b) {
    detail::require_same_tape(a, b, "rowwise_cosine");
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    if (!av.same_shape(bv)) raise(ErrorCode::ShapeMismatch, "rowwise_cosine");
    const std::size_t n = av.rows(), d = av.cols();
    Tensor out(n, 1);
    for (std::size_t i = 0; i < n; ++i) {
        double dot = 0.0, na = 0.0, nb = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            dot += av(i, j) * bv(i, j);
            na += av(i, j) * av(i, j);
            nb += bv(i, j) * bv(i, j);
        }
        out(i, 0) = (na == 0.0 || nb == 0.0) ? 0.0 : dot / (std::sqrt(na) * std::sqrt(nb));
    }
    const std::size_t ai = a.id(), bi = b.id();
    return a.tape()->push(std::move(out),
        [ai, bi, n, d](Tape& t, const Tensor& g, std::vector<Tensor>& grads) {
            const Tensor& av = t.value(ai);
            const Tensor& bv = t.value(bi);
            Tensor& da = Tape::slot(grads, ai, n, d);
            Tensor& db = Tape::slot(grads, bi, n, d);
            for (std::size_t i = 0; i < n; ++i) {
                double dot = 0.0, na2 = 0.0, nb2 = 0.0;
                for (std::size_t j = 0; j < d; ++j) {
                    dot += av(i, j) * bv(i, j);
                    na2 += av(i, j) * av(i, j);
                    nb2 += bv(i, j) * bv(i, j);
                }
                if (na2 == 0.0 || nb2 == 0.0) continue;
                const double na = std::sqrt(na2), nb = std::sqrt(nb2);
                const double c = dot / (na * nb);
                const double gi = g(i, 0);
                for (std::size_t j = 0; j < d; ++j) {
                    da(i, j) += gi * (bv(i, j) / (na * nb) - c * av(i, j) / na2);
                    db(i, j) += gi * (av(i, j) / (na * nb) - c * bv(i, j) / nb2);
                }
            }
        },
        "rowwise_cosine");
}

// Repeat a 1×m row n times -> n×m.
inline Var broadcast_row(Var r, std::size_t n) {
    const Tensor& rv = r.value();
    if (rv.rows() != 1) raise(ErrorCode::ShapeMismatch, "broadcast_row needs a 1×m input");
    Tensor out(n, rv.cols());
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < rv.cols(); ++j) out(i, j) = rv(0, j);
    const std::size_t ri = r.id(), m = rv.cols();
    return r.tape()->push(std::move(out),
        [ri, n, m](Tape& t, const Tensor& g, std::vector<Tensor>& grads) {
            Tensor& dr = Tape::slot(grads, ri, 1, m);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < m; ++j) dr(0, j) += g(i, j);
            (void)t;
        },
        "broadcast_row");
}

// ---- compositions used throughout the model --------------------------------

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(double c, Var a) { return scalar_mul(c, a); }

// Mean of every entry -> 1×1.
inline Var mean_all(Var a) {
    Var rm = row_mean(a);                 // n×1
    if (rm.rows() == 1) return rm;        // already scalar
    return row_mean(transpose(rm));       // 1×1
}

// X·W + b with b broadcast over rows (b is 1×m).
inline Var affine(Var x, Var w, Var b) {
    Var xw = matmul(x, w);
    return add(xw, broadcast_row(b, xw.rows()));
}

enum class Activation { ReLU, Tanh, Sigmoid, Identity };

inline Var activate(Var x, Activation act) {
    switch (act) {
        case Activation::ReLU: return relu(x);
        case Activation::Tanh: return tanh_activate(x);
        case Activation::Sigmoid: return sigmoid(x);
        case Activation::Identity: return x;
    }
    return x;
}

} // namespace lincoln

#endif // LINCOLN_TAPE_HPP
