#pragma once

#include "nbeatsx/numerics/random.hpp"
#include "nbeatsx/numerics/tape.hpp"

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace nbeatsx::ops {

namespace detail {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMatrix>;
using ConstMatMap = Eigen::Map<const RowMatrix>;

inline ConstMatMap as_matrix(const Tensor& t) {
    return ConstMatMap(t.data().data(), static_cast<Eigen::Index>(t.dim(0)),
                       static_cast<Eigen::Index>(t.dim(1)));
}

inline MatMap as_matrix(Tensor& t) {
    return MatMap(t.data().data(), static_cast<Eigen::Index>(t.dim(0)),
                  static_cast<Eigen::Index>(t.dim(1)));
}

[[noreturn]] inline void shape_error(OpKind kind, const std::string& what, const Shape& a) {
    throw ShapeError(std::string(to_string(kind)) + ": " + what + " " + shape_to_string(a));
}

[[noreturn]] inline void shape_error(OpKind kind, const Shape& a, const Shape& b) {
    throw ShapeError(std::string(to_string(kind)) + ": incompatible shapes " + shape_to_string(a) +
                     " and " + shape_to_string(b));
}

inline void check_same_tape(Var a, Var b) {
    if (a.tape != b.tape) throw Error("ops: operands recorded on different tapes");
}

/// Numpy-style broadcast of two shapes (missing leading dims treated as 1).
struct Broadcast {
    Shape out;
    std::vector<std::size_t> a_strides, b_strides;  // per output axis, 0 where broadcast
    bool trivial = false;                            // identical shapes
};

inline std::vector<std::size_t> strides_for(const Shape& padded, const Shape& out) {
    std::vector<std::size_t> strides(out.size(), 0);
    std::size_t s = 1;
    for (std::size_t i = out.size(); i-- > 0;) {
        strides[i] = padded[i] == 1 && out[i] != 1 ? 0 : s;
        s *= padded[i];
    }
    return strides;
}

inline Broadcast broadcast(OpKind kind, const Shape& a, const Shape& b) {
    Broadcast bc;
    if (a == b) {
        bc.out = a;
        bc.trivial = true;
        return bc;
    }
    const std::size_t rank = std::max(a.size(), b.size());
    Shape pa(rank - a.size(), 1), pb(rank - b.size(), 1);
    pa.insert(pa.end(), a.begin(), a.end());
    pb.insert(pb.end(), b.begin(), b.end());
    bc.out.resize(rank);
    for (std::size_t i = 0; i < rank; ++i) {
        if (pa[i] != pb[i] && pa[i] != 1 && pb[i] != 1) shape_error(kind, a, b);
        bc.out[i] = std::max(pa[i], pb[i]);
    }
    bc.a_strides = strides_for(pa, bc.out);
    bc.b_strides = strides_for(pb, bc.out);
    return bc;
}

/// Calls fn(out_index, a_index, b_index) for every output element.
template <class Fn>
void for_each_broadcast(const Broadcast& bc, Fn&& fn) {
    const std::size_t n = shape_size(bc.out);
    if (bc.trivial) {
        for (std::size_t i = 0; i < n; ++i) fn(i, i, i);
        return;
    }
    const std::size_t rank = bc.out.size();
    std::vector<std::size_t> idx(rank, 0);
    std::size_t ia = 0, ib = 0;
    for (std::size_t i = 0; i < n; ++i) {
        fn(i, ia, ib);
        for (std::size_t ax = rank; ax-- > 0;) {
            ++idx[ax];
            ia += bc.a_strides[ax];
            ib += bc.b_strides[ax];
            if (idx[ax] < bc.out[ax]) break;
            ia -= bc.a_strides[ax] * idx[ax];
            ib -= bc.b_strides[ax] * idx[ax];
            idx[ax] = 0;
        }
    }
}

/// Splits a shape around `axis` into (outer, extent, inner) element counts.
struct AxisSplit {
    std::size_t outer = 1, extent = 1, inner = 1;
};

inline AxisSplit split_axis(const Shape& s, std::size_t axis) {
    AxisSplit r;
    for (std::size_t i = 0; i < axis; ++i) r.outer *= s[i];
    r.extent = s[axis];
    for (std::size_t i = axis + 1; i < s.size(); ++i) r.inner *= s[i];
    return r;
}

template <class F, class DF>
Var unary(OpKind kind, Var x, F f, DF df) {
    const Tensor& xv = x.value();
    Tensor y(xv.shape());
    for (std::size_t i = 0; i < xv.size(); ++i) y[i] = f(xv[i]);
    const std::size_t xid = x.id;
    return x.tape->record(kind, {xid}, std::move(y), [xid, df](Tape& tape, std::size_t self) {
        const Tensor& g = tape.grad(self);
        const Tensor& xin = tape.value(xid);
        const Tensor& out = tape.value(self);
        Tensor& gx = tape.grad(xid);
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * df(xin[i], out[i]);
    });
}

inline double stable_sigmoid(double v) {
    if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
    const double e = std::exp(v);
    return e / (1.0 + e);
}

}  // namespace detail

inline constexpr double kLeakyReluSlope = 0.01;
inline constexpr double kSeluLambda = 1.0507009873554804934193349852946;
inline constexpr double kSeluAlpha = 1.6732632423543772848170429916717;

/// Rank-2 matrix product [m,k] x [k,n] -> [m,n].
inline Var matmul(Var a, Var b) {
    detail::check_same_tape(a, b);
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    if (av.rank() != 2 || bv.rank() != 2 || av.dim(1) != bv.dim(0)) {
        detail::shape_error(OpKind::matmul, av.shape(), bv.shape());
    }
    Tensor out({av.dim(0), bv.dim(1)});
    detail::as_matrix(out).noalias() = detail::as_matrix(av) * detail::as_matrix(bv);
    const std::size_t ia = a.id, ib = b.id;
    return a.tape->record(OpKind::matmul, {ia, ib}, std::move(out), [ia, ib](Tape& tape, std::size_t self) {
        const auto g = detail::as_matrix(tape.grad(self));
        if (tape.requires_grad(ia)) {
            detail::as_matrix(tape.grad(ia)).noalias() += g * detail::as_matrix(tape.value(ib)).transpose();
        }
        if (tape.requires_grad(ib)) {
            detail::as_matrix(tape.grad(ib)).noalias() += detail::as_matrix(tape.value(ia)).transpose() * g;
        }
    });
}

namespace detail {

enum class BinaryKind { add, sub, mul };

inline Var binary(OpKind kind, BinaryKind op, Var a, Var b) {
    check_same_tape(a, b);
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    Broadcast bc = broadcast(kind, av.shape(), bv.shape());
    Tensor out(bc.out);
    for_each_broadcast(bc, [&](std::size_t o, std::size_t i, std::size_t j) {
        switch (op) {
            case BinaryKind::add: out[o] = av[i] + bv[j]; break;
            case BinaryKind::sub: out[o] = av[i] - bv[j]; break;
            case BinaryKind::mul: out[o] = av[i] * bv[j]; break;
        }
    });
    const std::size_t ia = a.id, ib = b.id;
    return a.tape->record(kind, {ia, ib}, std::move(out), [ia, ib, op, bc](Tape& tape, std::size_t self) {
        const Tensor& g = tape.grad(self);
        const bool need_a = tape.requires_grad(ia), need_b = tape.requires_grad(ib);
        Tensor* ga = need_a ? &tape.grad(ia) : nullptr;
        Tensor* gb = need_b ? &tape.grad(ib) : nullptr;
        const Tensor& av2 = tape.value(ia);
        const Tensor& bv2 = tape.value(ib);
        for_each_broadcast(bc, [&](std::size_t o, std::size_t i, std::size_t j) {
            switch (op) {
                case BinaryKind::add:
                    if (ga) (*ga)[i] += g[o];
                    if (gb) (*gb)[j] += g[o];
                    break;
                case BinaryKind::sub:
                    if (ga) (*ga)[i] += g[o];
                    if (gb) (*gb)[j] -= g[o];
                    break;
                case BinaryKind::mul:
                    if (ga) (*ga)[i] += g[o] * bv2[j];
                    if (gb) (*gb)[j] += g[o] * av2[i];
                    break;
            }
        });
    });
}

}  // namespace detail

/// Elementwise sum with numpy-style broadcasting.
inline Var add(Var a, Var b) { return detail::binary(OpKind::add, detail::BinaryKind::add, a, b); }
inline Var sub(Var a, Var b) { return detail::binary(OpKind::sub, detail::BinaryKind::sub, a, b); }
inline Var hadamard(Var a, Var b) { return detail::binary(OpKind::hadamard, detail::BinaryKind::mul, a, b); }

/// Concatenation along `axis`; all other dimensions must agree.
inline Var concat(const std::vector<Var>& parts, std::size_t axis) {
    if (parts.empty()) throw ShapeError("concat: no inputs");
    const Shape& first = parts[0].shape();
    if (axis >= first.size()) detail::shape_error(OpKind::concat, "axis out of range for", first);
    Shape out_shape = first;
    out_shape[axis] = 0;
    for (const Var& p : parts) {
        detail::check_same_tape(parts[0], p);
        const Shape& s = p.shape();
        if (s.size() != first.size()) detail::shape_error(OpKind::concat, first, s);
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (i != axis && s[i] != first[i]) detail::shape_error(OpKind::concat, first, s);
        }
        out_shape[axis] += s[axis];
    }
    Tensor out(out_shape);
    const auto os = detail::split_axis(out_shape, axis);
    std::vector<std::size_t> ids, offsets;
    std::size_t offset = 0;
    for (const Var& p : parts) {
        const Tensor& v = p.value();
        const auto ps = detail::split_axis(v.shape(), axis);
        for (std::size_t o = 0; o < os.outer; ++o) {
            std::copy_n(v.data().data() + o * ps.extent * ps.inner, ps.extent * ps.inner,
                        out.data().data() + (o * os.extent + offset) * os.inner);
        }
        ids.push_back(p.id);
        offsets.push_back(offset);
        offset += ps.extent;
    }
    Tape* tape = parts[0].tape;
    return tape->record(OpKind::concat, ids, std::move(out), [ids, offsets, axis](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        const auto os2 = detail::split_axis(g.shape(), axis);
        for (std::size_t k = 0; k < ids.size(); ++k) {
            if (!t.requires_grad(ids[k])) continue;
            Tensor& gi = t.grad(ids[k]);
            const auto ps = detail::split_axis(gi.shape(), axis);
            for (std::size_t o = 0; o < os2.outer; ++o) {
                const double* src = g.data().data() + (o * os2.extent + offsets[k]) * os2.inner;
                double* dst = gi.data().data() + o * ps.extent * ps.inner;
                for (std::size_t i = 0; i < ps.extent * ps.inner; ++i) dst[i] += src[i];
            }
        }
    });
}

/// Half-open range [begin, end) along `axis`.
inline Var slice(Var x, std::size_t axis, std::size_t begin, std::size_t end) {
    const Shape& s = x.shape();
    if (axis >= s.size() || begin >= end || end > s[axis]) {
        detail::shape_error(OpKind::slice,
                            "range [" + std::to_string(begin) + "," + std::to_string(end) + ") on axis " +
                                std::to_string(axis) + " invalid for",
                            s);
    }
    Shape out_shape = s;
    out_shape[axis] = end - begin;
    Tensor out(out_shape);
    const auto in = detail::split_axis(s, axis);
    const std::size_t width = (end - begin) * in.inner;
    for (std::size_t o = 0; o < in.outer; ++o) {
        std::copy_n(x.value().data().data() + (o * in.extent + begin) * in.inner, width,
                    out.data().data() + o * width);
    }
    const std::size_t ix = x.id;
    return x.tape->record(OpKind::slice, {ix}, std::move(out), [ix, in, begin, width](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        Tensor& gx = t.grad(ix);
        for (std::size_t o = 0; o < in.outer; ++o) {
            double* dst = gx.data().data() + (o * in.extent + begin) * in.inner;
            const double* src = g.data().data() + o * width;
            for (std::size_t i = 0; i < width; ++i) dst[i] += src[i];
        }
    });
}

/// Sum of all entries, shape [1].
inline Var sum(Var x) {
    double total = 0.0;
    for (double v : x.value().data()) total += v;
    const std::size_t ix = x.id;
    return x.tape->record(OpKind::sum, {ix}, Tensor::scalar(total), [ix](Tape& t, std::size_t self) {
        const double g = t.grad(self)[0];
        for (double& v : t.grad(ix).data()) v += g;
    });
}

/// Sum over one axis, which is removed from the shape (a rank-1 input yields [1]).
inline Var sum(Var x, std::size_t axis) {
    const Shape& s = x.shape();
    if (axis >= s.size()) detail::shape_error(OpKind::sum, "axis out of range for", s);
    if (s.size() == 1) return sum(x);
    Shape out_shape = s;
    out_shape.erase(out_shape.begin() + static_cast<std::ptrdiff_t>(axis));
    const auto sp = detail::split_axis(s, axis);
    Tensor out(out_shape);
    const Tensor& xv = x.value();
    for (std::size_t o = 0; o < sp.outer; ++o)
        for (std::size_t e = 0; e < sp.extent; ++e)
            for (std::size_t i = 0; i < sp.inner; ++i)
                out[o * sp.inner + i] += xv[(o * sp.extent + e) * sp.inner + i];
    const std::size_t ix = x.id;
    return x.tape->record(OpKind::sum, {ix}, std::move(out), [ix, sp](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        Tensor& gx = t.grad(ix);
        for (std::size_t o = 0; o < sp.outer; ++o)
            for (std::size_t e = 0; e < sp.extent; ++e)
                for (std::size_t i = 0; i < sp.inner; ++i)
                    gx[(o * sp.extent + e) * sp.inner + i] += g[o * sp.inner + i];
    });
}

/// Mean of all entries, shape [1].
inline Var mean(Var x) {
    const double n = static_cast<double>(x.value().size());
    double total = 0.0;
    for (double v : x.value().data()) total += v;
    const std::size_t ix = x.id;
    return x.tape->record(OpKind::mean, {ix}, Tensor::scalar(total / n), [ix, n](Tape& t, std::size_t self) {
        const double g = t.grad(self)[0] / n;
        for (double& v : t.grad(ix).data()) v += g;
    });
}

/// x[B,in] * w[in,out] + b[out].
inline Var affine(Var x, Var w, Var b) {
    detail::check_same_tape(x, w);
    detail::check_same_tape(x, b);
    const Tensor& xv = x.value();
    const Tensor& wv = w.value();
    const Tensor& bv = b.value();
    if (xv.rank() != 2 || wv.rank() != 2 || xv.dim(1) != wv.dim(0)) {
        detail::shape_error(OpKind::affine, xv.shape(), wv.shape());
    }
    if (bv.size() != wv.dim(1)) detail::shape_error(OpKind::affine, wv.shape(), bv.shape());
    Tensor out({xv.dim(0), wv.dim(1)});
    auto om = detail::as_matrix(out);
    om.noalias() = detail::as_matrix(xv) * detail::as_matrix(wv);
    const Eigen::Map<const Eigen::RowVectorXd> bias(bv.data().data(), static_cast<Eigen::Index>(bv.size()));
    om.rowwise() += bias;
    const std::size_t ix = x.id, iw = w.id, ib = b.id;
    return x.tape->record(OpKind::affine, {ix, iw, ib}, std::move(out), [ix, iw, ib](Tape& t, std::size_t self) {
        const auto g = detail::as_matrix(t.grad(self));
        if (t.requires_grad(ix)) detail::as_matrix(t.grad(ix)).noalias() += g * detail::as_matrix(t.value(iw)).transpose();
        if (t.requires_grad(iw)) detail::as_matrix(t.grad(iw)).noalias() += detail::as_matrix(t.value(ix)).transpose() * g;
        if (t.requires_grad(ib)) {
            Tensor& gb = t.grad(ib);
            Eigen::Map<Eigen::RowVectorXd>(gb.data().data(), static_cast<Eigen::Index>(gb.size())) += g.colwise().sum();
        }
    });
}

inline Var relu(Var x) {
    return detail::unary(OpKind::relu, x, [](double v) { return v > 0 ? v : 0.0; },
                         [](double v, double) { return v > 0 ? 1.0 : 0.0; });
}

inline Var lrelu(Var x, double slope = kLeakyReluSlope) {
    return detail::unary(OpKind::lrelu, x, [slope](double v) { return v > 0 ? v : slope * v; },
                         [slope](double v, double) { return v > 0 ? 1.0 : slope; });
}

/// Parametric ReLU with a single learnable negative slope `alpha` (shape [1]).
inline Var prelu(Var x, Var alpha) {
    detail::check_same_tape(x, alpha);
    if (alpha.value().size() != 1) detail::shape_error(OpKind::prelu, "alpha must be scalar, got", alpha.shape());
    const double a = alpha.value()[0];
    const Tensor& xv = x.value();
    Tensor out(xv.shape());
    for (std::size_t i = 0; i < xv.size(); ++i) out[i] = xv[i] > 0 ? xv[i] : a * xv[i];
    const std::size_t ix = x.id, ia = alpha.id;
    return x.tape->record(OpKind::prelu, {ix, ia}, std::move(out), [ix, ia](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        const Tensor& xin = t.value(ix);
        const double av = t.value(ia)[0];
        if (t.requires_grad(ix)) {
            Tensor& gx = t.grad(ix);
            for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * (xin[i] > 0 ? 1.0 : av);
        }
        if (t.requires_grad(ia)) {
            double acc = 0.0;
            for (std::size_t i = 0; i < g.size(); ++i)
                if (xin[i] <= 0) acc += g[i] * xin[i];
            t.grad(ia)[0] += acc;
        }
    });
}

inline Var selu(Var x) {
    return detail::unary(
        OpKind::selu, x,
        [](double v) { return v > 0 ? kSeluLambda * v : kSeluLambda * kSeluAlpha * std::expm1(v); },
        [](double v, double) { return v > 0 ? kSeluLambda : kSeluLambda * kSeluAlpha * std::exp(v); });
}

inline Var softplus(Var x) {
    return detail::unary(
        OpKind::softplus, x, [](double v) { return std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v))); },
        [](double v, double) { return detail::stable_sigmoid(v); });
}

inline Var sigmoid(Var x) {
    return detail::unary(OpKind::sigmoid, x, detail::stable_sigmoid,
                         [](double, double y) { return y * (1.0 - y); });
}

inline Var tanh(Var x) {
    return detail::unary(OpKind::tanh, x, [](double v) { return std::tanh(v); },
                         [](double, double y) { return 1.0 - y * y; });
}

/// Absolute value; the subgradient at 0 is 0.
inline Var abs(Var x) {
    return detail::unary(OpKind::abs, x, [](double v) { return std::abs(v); },
                         [](double v, double) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); });
}

inline Var reshape(Var x, Shape shape) {
    Tensor out = x.value().reshaped(std::move(shape));
    const std::size_t ix = x.id;
    return x.tape->record(OpKind::reshape, {ix}, std::move(out), [ix](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        Tensor& gx = t.grad(ix);
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    });
}

/// Inverted dropout. In training mode each entry is zeroed with probability
/// `p` and survivors are scaled by 1/(1-p); in inference mode (or p == 0)
/// the input is returned unchanged.
inline Var dropout(Var x, double p, std::uint64_t seed) {
    if (!(p >= 0.0 && p < 1.0)) throw ConfigError("dropout: probability must lie in [0,1), got " + std::to_string(p));
    if (!x.tape->training() || p == 0.0) return x;
    Rng rng(seed);
    const Tensor& xv = x.value();
    std::vector<double> mask(xv.size());
    const double keep = 1.0 / (1.0 - p);
    for (double& m : mask) m = uniform01(rng) >= p ? keep : 0.0;
    Tensor out(xv.shape());
    for (std::size_t i = 0; i < xv.size(); ++i) out[i] = xv[i] * mask[i];
    const std::size_t ix = x.id;
    return x.tape->record(OpKind::dropout, {ix}, std::move(out),
                          [ix, mask = std::move(mask)](Tape& t, std::size_t self) {
                              const Tensor& g = t.grad(self);
                              Tensor& gx = t.grad(ix);
                              for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * mask[i];
                          });
}

/// Per-feature statistics of a batch, reported so callers can keep running averages.
struct BatchMoments {
    std::vector<double> mean;
    std::vector<double> var;
};

inline constexpr double kBatchNormEps = 1e-5;

/// Batch normalisation over axis 0 of x[B,N] with scale/shift of shape [N].
///
/// Training tapes normalise with the batch moments (written to `observed`
/// when given); inference tapes use `running_mean` / `running_var`.
inline Var batch_norm(Var x, Var gamma, Var beta, const Tensor& running_mean, const Tensor& running_var,
                      BatchMoments* observed = nullptr) {
    const Tensor& xv = x.value();
    if (xv.rank() != 2) detail::shape_error(OpKind::batch_norm, "expected rank 2, got", xv.shape());
    const std::size_t B = xv.dim(0), N = xv.dim(1);
    if (gamma.value().size() != N || beta.value().size() != N || running_mean.size() != N ||
        running_var.size() != N) {
        detail::shape_error(OpKind::batch_norm, xv.shape(), gamma.shape());
    }
    const bool train = x.tape->training();
    std::vector<double> mu(N, 0.0), var(N, 0.0);
    if (train) {
        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t j = 0; j < N; ++j) mu[j] += xv.at(b, j);
        for (double& m : mu) m /= static_cast<double>(B);
        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t j = 0; j < N; ++j) {
                const double d = xv.at(b, j) - mu[j];
                var[j] += d * d;
            }
        for (double& v : var) v /= static_cast<double>(B);
        if (observed) *observed = BatchMoments{mu, var};
    } else {
        for (std::size_t j = 0; j < N; ++j) {
            mu[j] = running_mean[j];
            var[j] = running_var[j];
        }
    }
    std::vector<double> inv_std(N);
    for (std::size_t j = 0; j < N; ++j) inv_std[j] = 1.0 / std::sqrt(var[j] + kBatchNormEps);
    Tensor xhat(xv.shape()), out(xv.shape());
    const Tensor& gv = gamma.value();
    const Tensor& bv = beta.value();
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t j = 0; j < N; ++j) {
            xhat.at(b, j) = (xv.at(b, j) - mu[j]) * inv_std[j];
            out.at(b, j) = gv[j] * xhat.at(b, j) + bv[j];
        }
    const std::size_t ix = x.id, ig = gamma.id, ib = beta.id;
    return x.tape->record(
        OpKind::batch_norm, {ix, ig, ib}, std::move(out),
        [ix, ig, ib, B, N, train, inv_std = std::move(inv_std), xhat = std::move(xhat)](Tape& t, std::size_t self) {
            const Tensor& g = t.grad(self);
            const Tensor& gam = t.value(ig);
            if (t.requires_grad(ig)) {
                Tensor& gg = t.grad(ig);
                for (std::size_t b = 0; b < B; ++b)
                    for (std::size_t j = 0; j < N; ++j) gg[j] += g.at(b, j) * xhat.at(b, j);
            }
            if (t.requires_grad(ib)) {
                Tensor& gb = t.grad(ib);
                for (std::size_t b = 0; b < B; ++b)
                    for (std::size_t j = 0; j < N; ++j) gb[j] += g.at(b, j);
            }
            if (!t.requires_grad(ix)) return;
            Tensor& gx = t.grad(ix);
            if (!train) {
                for (std::size_t b = 0; b < B; ++b)
                    for (std::size_t j = 0; j < N; ++j) gx.at(b, j) += g.at(b, j) * gam[j] * inv_std[j];
                return;
            }
            const double n = static_cast<double>(B);
            for (std::size_t j = 0; j < N; ++j) {
                double sum_d = 0.0, sum_dx = 0.0;
                for (std::size_t b = 0; b < B; ++b) {
                    const double d = g.at(b, j) * gam[j];
                    sum_d += d;
                    sum_dx += d * xhat.at(b, j);
                }
                for (std::size_t b = 0; b < B; ++b) {
                    const double d = g.at(b, j) * gam[j];
                    gx.at(b, j) += inv_std[j] / n * (n * d - sum_d - xhat.at(b, j) * sum_dx);
                }
            }
        });
}

/// Causal dilated 1-D convolution.
///
/// x[B,Cin,T], w[Cout,Cin,K], b[Cout] -> y[B,Cout,T] with
/// y[b,o,t] = b[o] + sum_{c,k} w[o,c,k] * x[b,c,t - (K-1-k)*dilation].
/// The input is zero-padded on the past side only, so y at time t never
/// depends on inputs after t.
inline Var causal_dilated_conv1d(Var x, Var w, Var b, std::size_t dilation) {
    detail::check_same_tape(x, w);
    detail::check_same_tape(x, b);
    const Tensor& xv = x.value();
    const Tensor& wv = w.value();
    if (xv.rank() != 3 || wv.rank() != 3 || wv.dim(1) != xv.dim(1)) {
        detail::shape_error(OpKind::causal_dilated_conv1d, xv.shape(), wv.shape());
    }
    if (b.value().size() != wv.dim(0)) detail::shape_error(OpKind::causal_dilated_conv1d, wv.shape(), b.shape());
    if (dilation == 0) throw ShapeError("causal_dilated_conv1d: dilation must be positive");
    const std::size_t B = xv.dim(0), Cin = xv.dim(1), T = xv.dim(2), Cout = wv.dim(0), K = wv.dim(2);
    Tensor out({B, Cout, T});
    const Tensor& bv = b.value();
    for (std::size_t bi = 0; bi < B; ++bi)
        for (std::size_t o = 0; o < Cout; ++o) {
            double* y = out.data().data() + (bi * Cout + o) * T;
            std::fill_n(y, T, bv[o]);
            for (std::size_t c = 0; c < Cin; ++c) {
                const double* xr = xv.data().data() + (bi * Cin + c) * T;
                for (std::size_t k = 0; k < K; ++k) {
                    const std::size_t shift = (K - 1 - k) * dilation;
                    if (shift >= T) continue;
                    const double wk = wv[(o * Cin + c) * K + k];
                    for (std::size_t tt = shift; tt < T; ++tt) y[tt] += wk * xr[tt - shift];
                }
            }
        }
    const std::size_t ix = x.id, iw = w.id, ib = b.id;
    return x.tape->record(
        OpKind::causal_dilated_conv1d, {ix, iw, ib}, std::move(out),
        [ix, iw, ib, B, Cin, T, Cout, K, dilation](Tape& t, std::size_t self) {
            const Tensor& g = t.grad(self);
            const Tensor& xin = t.value(ix);
            const Tensor& win = t.value(iw);
            const bool need_x = t.requires_grad(ix), need_w = t.requires_grad(iw), need_b = t.requires_grad(ib);
            Tensor* gx = need_x ? &t.grad(ix) : nullptr;
            Tensor* gw = need_w ? &t.grad(iw) : nullptr;
            Tensor* gb = need_b ? &t.grad(ib) : nullptr;
            for (std::size_t bi = 0; bi < B; ++bi)
                for (std::size_t o = 0; o < Cout; ++o) {
                    const double* gy = g.data().data() + (bi * Cout + o) * T;
                    if (gb) {
                        double acc = 0.0;
                        for (std::size_t tt = 0; tt < T; ++tt) acc += gy[tt];
                        (*gb)[o] += acc;
                    }
                    for (std::size_t c = 0; c < Cin; ++c) {
                        const double* xr = xin.data().data() + (bi * Cin + c) * T;
                        for (std::size_t k = 0; k < K; ++k) {
                            const std::size_t shift = (K - 1 - k) * dilation;
                            if (shift >= T) continue;
                            const std::size_t widx = (o * Cin + c) * K + k;
                            if (gw) {
                                double acc = 0.0;
                                for (std::size_t tt = shift; tt < T; ++tt) acc += gy[tt] * xr[tt - shift];
                                (*gw)[widx] += acc;
                            }
                            if (gx) {
                                double* gxr = gx->data().data() + (bi * Cin + c) * T;
                                const double wk = win[widx];
                                for (std::size_t tt = shift; tt < T; ++tt) gxr[tt - shift] += wk * gy[tt];
                            }
                        }
                    }
                }
        });
}

/// WaveNet gate: tanh(a) * sigmoid(b).
inline Var gated_unit(Var a, Var b) {
    detail::check_same_tape(a, b);
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    if (av.shape() != bv.shape()) detail::shape_error(OpKind::gated_unit, av.shape(), bv.shape());
    Tensor out(av.shape());
    std::vector<double> ta(av.size()), sb(av.size());
    for (std::size_t i = 0; i < av.size(); ++i) {
        ta[i] = std::tanh(av[i]);
        sb[i] = detail::stable_sigmoid(bv[i]);
        out[i] = ta[i] * sb[i];
    }
    const std::size_t ia = a.id, ib = b.id;
    return a.tape->record(OpKind::gated_unit, {ia, ib}, std::move(out),
                          [ia, ib, ta = std::move(ta), sb = std::move(sb)](Tape& t, std::size_t self) {
                              const Tensor& g = t.grad(self);
                              if (t.requires_grad(ia)) {
                                  Tensor& ga = t.grad(ia);
                                  for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (1.0 - ta[i] * ta[i]) * sb[i];
                              }
                              if (t.requires_grad(ib)) {
                                  Tensor& gb = t.grad(ib);
                                  for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * ta[i] * sb[i] * (1.0 - sb[i]);
                              }
                          });
}

/// Attributes consumed by the generic dispatcher; each op reads only its own.
struct OpAttrs {
    std::size_t axis = 0;
    std::size_t begin = 0;
    std::size_t end = 0;
    std::size_t dilation = 1;
    double probability = 0.0;
    std::uint64_t seed = 0;
    double slope = kLeakyReluSlope;
    Shape shape;
    bool reduce_axis = false;  // sum: reduce `axis` instead of everything
    const Tensor* running_mean = nullptr;
    const Tensor* running_var = nullptr;
};

inline std::size_t arity(OpKind kind) {
    switch (kind) {
        case OpKind::matmul:
        case OpKind::add:
        case OpKind::sub:
        case OpKind::hadamard:
        case OpKind::prelu:
        case OpKind::gated_unit: return 2;
        case OpKind::affine:
        case OpKind::batch_norm:
        case OpKind::causal_dilated_conv1d: return 3;
        case OpKind::concat: return 0;  // variadic
        default: return 1;
    }
}

/// Applies `kind` to `inputs` by name; the typed functions above are the primary interface.
inline Var forward_op(OpKind kind, std::span<const Var> inputs, const OpAttrs& attrs = {}) {
    const std::size_t need = arity(kind);
    if (kind == OpKind::concat ? inputs.empty() : inputs.size() != need) {
        throw ShapeError(std::string(to_string(kind)) + ": expected " + std::to_string(need) + " inputs, got " +
                         std::to_string(inputs.size()));
    }
    switch (kind) {
        case OpKind::matmul: return matmul(inputs[0], inputs[1]);
        case OpKind::add: return add(inputs[0], inputs[1]);
        case OpKind::sub: return sub(inputs[0], inputs[1]);
        case OpKind::hadamard: return hadamard(inputs[0], inputs[1]);
        case OpKind::concat: return concat(std::vector<Var>(inputs.begin(), inputs.end()), attrs.axis);
        case OpKind::slice: return slice(inputs[0], attrs.axis, attrs.begin, attrs.end);
        case OpKind::sum: return attrs.reduce_axis ? sum(inputs[0], attrs.axis) : sum(inputs[0]);
        case OpKind::mean: return mean(inputs[0]);
        case OpKind::affine: return affine(inputs[0], inputs[1], inputs[2]);
        case OpKind::relu: return relu(inputs[0]);
        case OpKind::lrelu: return lrelu(inputs[0], attrs.slope);
        case OpKind::prelu: return prelu(inputs[0], inputs[1]);
        case OpKind::selu: return selu(inputs[0]);
        case OpKind::softplus: return softplus(inputs[0]);
        case OpKind::sigmoid: return sigmoid(inputs[0]);
        case OpKind::tanh: return tanh(inputs[0]);
        case OpKind::dropout: return dropout(inputs[0], attrs.probability, attrs.seed);
        case OpKind::batch_norm: {
            const std::size_t n = inputs[1].value().size();
            const Tensor zeros({n}, 0.0), ones({n}, 1.0);
            return batch_norm(inputs[0], inputs[1], inputs[2], attrs.running_mean ? *attrs.running_mean : zeros,
                              attrs.running_var ? *attrs.running_var : ones);
        }
        case OpKind::causal_dilated_conv1d: return causal_dilated_conv1d(inputs[0], inputs[1], inputs[2], attrs.dilation);
        case OpKind::gated_unit: return gated_unit(inputs[0], inputs[1]);
        case OpKind::abs: return abs(inputs[0]);
        case OpKind::reshape: return reshape(inputs[0], attrs.shape);
        case OpKind::leaf:
        case OpKind::constant: break;
    }
    throw Error(std::string("forward_op: '") + std::string(to_string(kind)) + "' is not an operation");
}

}  // namespace nbeatsx::ops
