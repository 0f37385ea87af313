#include "percept/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace percept::ops {

namespace {

bool wants_grad(std::initializer_list<const Tensor*> inputs) {
    for (const Tensor* t : inputs)
        if (t && t->requires_grad()) return true;
    return false;
}

}  // namespace

Tensor dense(Tape* tape, const Tensor& input, const Tensor& weight, const Tensor* bias) {
    if (input.shape().size() != 1)
        throw TensorError("dense: input must be rank-1, got " + shape_str(input.shape()));
    if (weight.shape().size() != 2)
        throw TensorError("dense: weight must be rank-2, got " + shape_str(weight.shape()));
    const int n_in = input.shape()[0];
    const int n_out = weight.shape()[1];
    if (weight.shape()[0] != n_in)
        throw TensorError("dense: weight rows " + std::to_string(weight.shape()[0]) +
                          " != input length " + std::to_string(n_in));
    if (bias && bias->shape() != Shape{n_out})
        throw TensorError("dense: bias shape " + shape_str(bias->shape()) + " != [" +
                          std::to_string(n_out) + "]");

    std::vector<double> y(static_cast<std::size_t>(n_out), 0.0);
    const double* x = input.data().data();
    const double* w = weight.data().data();
    for (int i = 0; i < n_in; ++i) {
        const double xv = x[i];
        const double* wrow = w + static_cast<std::size_t>(i) * n_out;
        for (int j = 0; j < n_out; ++j) y[static_cast<std::size_t>(j)] += xv * wrow[j];
    }
    if (bias) {
        const double* b = bias->data().data();
        for (int j = 0; j < n_out; ++j) y[static_cast<std::size_t>(j)] += b[j];
    }
    check_finite(y, "dense");

    const bool rec = tape && wants_grad({&input, &weight, bias});
    Tensor out({n_out}, std::move(y), rec);
    if (rec) {
        Tensor in = input, wt = weight, ot = out;
        Tensor bt = bias ? *bias : Tensor();
        tape->record([in, wt, bt, ot, n_in, n_out]() mutable {
            const double* g = ot.grad().data();
            const double* x = in.data().data();
            const double* w = wt.data().data();
            if (in.requires_grad()) {
                auto& gx = in.grad();
                for (int i = 0; i < n_in; ++i) {
                    const double* wrow = w + static_cast<std::size_t>(i) * n_out;
                    double s = 0.0;
                    for (int j = 0; j < n_out; ++j) s += g[j] * wrow[j];
                    gx[static_cast<std::size_t>(i)] += s;
                }
            }
            if (wt.requires_grad()) {
                auto& gw = wt.grad();
                for (int i = 0; i < n_in; ++i) {
                    const double xv = x[i];
                    double* grow = gw.data() + static_cast<std::size_t>(i) * n_out;
                    for (int j = 0; j < n_out; ++j) grow[j] += xv * g[j];
                }
            }
            if (bt.valid() && bt.requires_grad()) bt.accumulate_grad(g, n_out);
        });
    }
    return out;
}

Tensor conv2d(Tape* tape, const Tensor& input, const Tensor& kernel, const Tensor* bias,
              int stride, Padding padding) {
    if (input.shape().size() != 3)
        throw TensorError("conv2d: input must be [h x w x c], got " + shape_str(input.shape()));
    if (kernel.shape().size() != 4)
        throw TensorError("conv2d: kernel must be [kh x kw x c_in x c_out], got " +
                          shape_str(kernel.shape()));
    if (stride < 1) throw TensorError("conv2d: stride must be >= 1");
    const int h = input.shape()[0], w = input.shape()[1], ci = input.shape()[2];
    const int kh = kernel.shape()[0], kw = kernel.shape()[1];
    const int kci = kernel.shape()[2], co = kernel.shape()[3];
    if (kci != ci)
        throw TensorError("conv2d: kernel expects " + std::to_string(kci) + " input channels, image has " +
                          std::to_string(ci));
    if (bias && bias->shape() != Shape{co})
        throw TensorError("conv2d: bias shape " + shape_str(bias->shape()) + " != [" + std::to_string(co) + "]");

    int ho, wo, pad_top, pad_left;
    if (padding == Padding::Same) {
        ho = (h + stride - 1) / stride;
        wo = (w + stride - 1) / stride;
        const int pad_h = std::max((ho - 1) * stride + kh - h, 0);
        const int pad_w = std::max((wo - 1) * stride + kw - w, 0);
        pad_top = pad_h / 2;
        pad_left = pad_w / 2;
    } else {
        if (kh > h || kw > w)
            throw TensorError("conv2d: kernel " + shape_str(kernel.shape()) + " larger than input " +
                              shape_str(input.shape()));
        ho = (h - kh) / stride + 1;
        wo = (w - kw) / stride + 1;
        pad_top = pad_left = 0;
    }

    std::vector<double> y(static_cast<std::size_t>(ho) * wo * co, 0.0);
    const double* x = input.data().data();
    const double* k = kernel.data().data();
    const double* b = bias ? bias->data().data() : nullptr;

    for (int oy = 0; oy < ho; ++oy) {
        for (int ox = 0; ox < wo; ++ox) {
            double* acc = y.data() + (static_cast<std::size_t>(oy) * wo + ox) * co;
            if (b)
                for (int c = 0; c < co; ++c) acc[c] = b[c];
            for (int ky = 0; ky < kh; ++ky) {
                const int iy = oy * stride - pad_top + ky;
                if (iy < 0 || iy >= h) continue;
                for (int kx = 0; kx < kw; ++kx) {
                    const int ix = ox * stride - pad_left + kx;
                    if (ix < 0 || ix >= w) continue;
                    const double* xp = x + (static_cast<std::size_t>(iy) * w + ix) * ci;
                    const double* kp = k + (static_cast<std::size_t>(ky) * kw + kx) * ci * co;
                    for (int c = 0; c < ci; ++c) {
                        const double xv = xp[c];
                        const double* krow = kp + static_cast<std::size_t>(c) * co;
                        for (int oc = 0; oc < co; ++oc) acc[oc] += xv * krow[oc];
                    }
                }
            }
        }
    }
    check_finite(y, "conv2d");

    const bool rec = tape && wants_grad({&input, &kernel, bias});
    Tensor out({ho, wo, co}, std::move(y), rec);
    if (rec) {
        Tensor in = input, kt = kernel, ot = out;
        Tensor bt = bias ? *bias : Tensor();
        tape->record([in, kt, bt, ot, h, w, ci, kh, kw, co, ho, wo, stride, pad_top, pad_left]() mutable {
            const double* g = ot.grad().data();
            const double* x = in.data().data();
            const double* k = kt.data().data();
            const bool need_dx = in.requires_grad();
            const bool need_dk = kt.requires_grad();
            double* gx = need_dx ? in.grad().data() : nullptr;
            double* gk = need_dk ? kt.grad().data() : nullptr;
            for (int oy = 0; oy < ho; ++oy) {
                for (int ox = 0; ox < wo; ++ox) {
                    const double* go = g + (static_cast<std::size_t>(oy) * wo + ox) * co;
                    for (int ky = 0; ky < kh; ++ky) {
                        const int iy = oy * stride - pad_top + ky;
                        if (iy < 0 || iy >= h) continue;
                        for (int kx = 0; kx < kw; ++kx) {
                            const int ix = ox * stride - pad_left + kx;
                            if (ix < 0 || ix >= w) continue;
                            const std::size_t xoff = (static_cast<std::size_t>(iy) * w + ix) * ci;
                            const std::size_t koff = (static_cast<std::size_t>(ky) * kw + kx) * ci * co;
                            for (int c = 0; c < ci; ++c) {
                                const double* krow = k + koff + static_cast<std::size_t>(c) * co;
                                if (need_dx) {
                                    double s = 0.0;
                                    for (int oc = 0; oc < co; ++oc) s += go[oc] * krow[oc];
                                    gx[xoff + static_cast<std::size_t>(c)] += s;
                                }
                                if (need_dk) {
                                    const double xv = x[xoff + static_cast<std::size_t>(c)];
                                    double* grow = gk + koff + static_cast<std::size_t>(c) * co;
                                    for (int oc = 0; oc < co; ++oc) grow[oc] += xv * go[oc];
                                }
                            }
                        }
                    }
                }
            }
            if (bt.valid() && bt.requires_grad()) {
                auto& gb = bt.grad();
                for (std::int64_t p = 0; p < static_cast<std::int64_t>(ho) * wo; ++p) {
                    const double* go = g + p * co;
                    for (int oc = 0; oc < co; ++oc) gb[static_cast<std::size_t>(oc)] += go[oc];
                }
            }
        });
    }
    return out;
}

Tensor maxpool2(Tape* tape, const Tensor& input) {
    if (input.shape().size() != 3)
        throw TensorError("maxpool2: input must be [h x w x c], got " + shape_str(input.shape()));
    const int h = input.shape()[0], w = input.shape()[1], c = input.shape()[2];
    if (h % 2 != 0 || w % 2 != 0)
        throw TensorError("maxpool2: spatial dims must be even, got " + shape_str(input.shape()));
    const int ho = h / 2, wo = w / 2;

    std::vector<double> y(static_cast<std::size_t>(ho) * wo * c);
    std::vector<std::int32_t> argmax(y.size());
    const double* x = input.data().data();
    for (int oy = 0; oy < ho; ++oy) {
        for (int ox = 0; ox < wo; ++ox) {
            const std::size_t out_base = (static_cast<std::size_t>(oy) * wo + ox) * c;
            // Window elements in row-major order; strict > keeps the first on ties.
            const std::size_t i00 = (static_cast<std::size_t>(2 * oy) * w + 2 * ox) * c;
            const std::size_t i01 = i00 + c;
            const std::size_t i10 = i00 + static_cast<std::size_t>(w) * c;
            const std::size_t i11 = i10 + c;
            for (int ch = 0; ch < c; ++ch) {
                double best = x[i00 + ch];
                std::size_t best_i = i00 + ch;
                if (x[i01 + ch] > best) { best = x[i01 + ch]; best_i = i01 + ch; }
                if (x[i10 + ch] > best) { best = x[i10 + ch]; best_i = i10 + ch; }
                if (x[i11 + ch] > best) { best = x[i11 + ch]; best_i = i11 + ch; }
                y[out_base + ch] = best;
                argmax[out_base + ch] = static_cast<std::int32_t>(best_i);
            }
        }
    }
    check_finite(y, "maxpool2");

    const bool rec = tape && input.requires_grad();
    Tensor out({ho, wo, c}, std::move(y), rec);
    if (rec) {
        Tensor in = input, ot = out;
        tape->record([in, ot, argmax = std::move(argmax)]() mutable {
            const double* g = ot.grad().data();
            auto& gx = in.grad();
            for (std::size_t i = 0; i < argmax.size(); ++i)
                gx[static_cast<std::size_t>(argmax[i])] += g[i];
        });
    }
    return out;
}

Tensor relu(Tape* tape, const Tensor& x) {
    std::vector<double> y(x.data());
    for (double& v : y) v = v > 0.0 ? v : 0.0;
    check_finite(y, "relu");
    const bool rec = tape && x.requires_grad();
    Tensor out(x.shape(), std::move(y), rec);
    if (rec) {
        Tensor in = x, ot = out;
        tape->record([in, ot]() mutable {
            const double* g = ot.grad().data();
            const double* xv = in.data().data();
            auto& gx = in.grad();
            for (std::size_t i = 0; i < gx.size(); ++i)
                if (xv[i] > 0.0) gx[i] += g[i];
        });
    }
    return out;
}

Tensor sigmoid(Tape* tape, const Tensor& x) {
    std::vector<double> y(x.data());
    for (double& v : y) v = 1.0 / (1.0 + std::exp(-v));
    check_finite(y, "sigmoid");
    const bool rec = tape && x.requires_grad();
    Tensor out(x.shape(), std::move(y), rec);
    if (rec) {
        Tensor in = x, ot = out;
        tape->record([in, ot]() mutable {
            const double* g = ot.grad().data();
            const double* yv = ot.data().data();
            auto& gx = in.grad();
            for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[i] * yv[i] * (1.0 - yv[i]);
        });
    }
    return out;
}

Tensor concat(Tape* tape, const std::vector<Tensor>& parts) {
    if (parts.empty()) throw TensorError("concat: empty input list");
    std::int64_t total = 0;
    bool rg = false;
    for (const Tensor& p : parts) {
        if (p.shape().size() != 1)
            throw TensorError("concat: inputs must be rank-1, got " + shape_str(p.shape()));
        total += p.size();
        rg = rg || p.requires_grad();
    }
    std::vector<double> y;
    y.reserve(static_cast<std::size_t>(total));
    for (const Tensor& p : parts) y.insert(y.end(), p.data().begin(), p.data().end());
    check_finite(y, "concat");

    const bool rec = tape && rg;
    Tensor out({static_cast<int>(total)}, std::move(y), rec);
    if (rec) {
        std::vector<Tensor> ins = parts;
        Tensor ot = out;
        tape->record([ins, ot]() mutable {
            const double* g = ot.grad().data();
            std::int64_t off = 0;
            for (Tensor& p : ins) {
                if (p.requires_grad()) p.accumulate_grad(g + off, p.size());
                off += p.size();
            }
        });
    }
    return out;
}

Tensor mse(Tape* tape, const Tensor& pred, const Tensor& target) {
    if (pred.shape() != target.shape())
        throw TensorError("mse: shape mismatch " + shape_str(pred.shape()) + " vs " +
                          shape_str(target.shape()));
    const std::int64_t n = pred.size();
    double acc = 0.0;
    const double* p = pred.data().data();
    const double* t = target.data().data();
    for (std::int64_t i = 0; i < n; ++i) {
        const double d = p[i] - t[i];
        acc += d * d;
    }
    const double m = acc / static_cast<double>(n);
    std::vector<double> y{m};
    check_finite(y, "mse");

    const bool rec = tape && wants_grad({&pred, &target});
    Tensor out({1}, std::move(y), rec);
    if (rec) {
        Tensor pt = pred, tt = target, ot = out;
        tape->record([pt, tt, ot, n]() mutable {
            const double g = ot.grad()[0];
            const double* p = pt.data().data();
            const double* t = tt.data().data();
            const double c = 2.0 * g / static_cast<double>(n);
            if (pt.requires_grad()) {
                auto& gp = pt.grad();
                for (std::int64_t i = 0; i < n; ++i) gp[static_cast<std::size_t>(i)] += c * (p[i] - t[i]);
            }
            if (tt.requires_grad()) {
                auto& gt = tt.grad();
                for (std::int64_t i = 0; i < n; ++i) gt[static_cast<std::size_t>(i)] -= c * (p[i] - t[i]);
            }
        });
    }
    return out;
}

Tensor add(Tape* tape, const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape())
        throw TensorError("add: shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    std::vector<double> y(a.data());
    const double* bp = b.data().data();
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += bp[i];
    check_finite(y, "add");
    const bool rec = tape && wants_grad({&a, &b});
    Tensor out(a.shape(), std::move(y), rec);
    if (rec) {
        Tensor at = a, bt = b, ot = out;
        tape->record([at, bt, ot]() mutable {
            const auto& g = ot.grad();
            if (at.requires_grad()) at.accumulate_grad(g.data(), at.size());
            if (bt.requires_grad()) bt.accumulate_grad(g.data(), bt.size());
        });
    }
    return out;
}

Tensor scale(Tape* tape, const Tensor& x, double c) {
    std::vector<double> y(x.data());
    for (double& v : y) v *= c;
    check_finite(y, "scale");
    const bool rec = tape && x.requires_grad();
    Tensor out(x.shape(), std::move(y), rec);
    if (rec) {
        Tensor in = x, ot = out;
        tape->record([in, ot, c]() mutable {
            const auto& g = ot.grad();
            auto& gx = in.grad();
            for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += c * g[i];
        });
    }
    return out;
}

Tensor reshape(Tape* tape, const Tensor& x, Shape new_shape) {
    if (numel(new_shape) != x.size())
        throw TensorError("reshape: cannot view " + shape_str(x.shape()) + " as " + shape_str(new_shape));
    const bool rec = tape && x.requires_grad();
    Tensor out(std::move(new_shape), x.data(), rec);
    if (rec) {
        Tensor in = x, ot = out;
        tape->record([in, ot]() mutable { in.accumulate_grad(ot.grad().data(), in.size()); });
    }
    return out;
}

}  // namespace percept::ops
