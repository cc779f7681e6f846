// Copyright Contributors to the splatstyle Project
// SPDX-License-Identifier: Apache-2.0
//
#include "splatstyle/ops.hpp"

#include "splatstyle/errors.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>

namespace splatstyle {
namespace {

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

int reflect(int i, int n) {
    if (n == 1) {
        return 0;
    }
    if (i < 0) {
        return -i;
    }
    if (i >= n) {
        return 2 * n - 2 - i;
    }
    return i;
}

/// Reflection-padded patches: row (ci * 9 + ky * 3 + kx), column (y * W + x).
void im2col(const Grid& x, std::vector<float>& col) {
    const int cin = x.channels();
    const int h = x.height();
    const int w = x.width();
    const std::size_t hw = x.shape().plane();
    col.resize(static_cast<std::size_t>(cin) * 9 * hw);
    std::vector<int> rx(static_cast<std::size_t>(3 * w));
    for (int kx = 0; kx < 3; ++kx) {
        for (int xx = 0; xx < w; ++xx) {
            rx[static_cast<std::size_t>(kx * w + xx)] = reflect(xx + kx - 1, w);
        }
    }
    for (int ci = 0; ci < cin; ++ci) {
        for (int ky = 0; ky < 3; ++ky) {
            for (int kx = 0; kx < 3; ++kx) {
                float* row = col.data() + (static_cast<std::size_t>(ci) * 9 + ky * 3 + kx) * hw;
                const int* rxk = rx.data() + kx * w;
                for (int y = 0; y < h; ++y) {
                    const float* src = x.ptr(ci, reflect(y + ky - 1, h), 0);
                    float* dst = row + static_cast<std::size_t>(y) * w;
                    for (int xx = 0; xx < w; ++xx) {
                        dst[xx] = src[rxk[xx]];
                    }
                }
            }
        }
    }
}

/// Adjoint of im2col: scatters patch gradients back onto the unpadded input.
void col2im(const RowMat& dcol, Grid& dx) {
    const int cin = dx.channels();
    const int h = dx.height();
    const int w = dx.width();
    const std::size_t hw = dx.shape().plane();
    for (int ci = 0; ci < cin; ++ci) {
        for (int ky = 0; ky < 3; ++ky) {
            for (int kx = 0; kx < 3; ++kx) {
                const float* row = dcol.data() + (static_cast<std::size_t>(ci) * 9 + ky * 3 + kx) * hw;
                for (int y = 0; y < h; ++y) {
                    float* dst = dx.ptr(ci, reflect(y + ky - 1, h), 0);
                    const float* src = row + static_cast<std::size_t>(y) * w;
                    for (int xx = 0; xx < w; ++xx) {
                        dst[reflect(xx + kx - 1, w)] += src[xx];
                    }
                }
            }
        }
    }
}

void require_column(const Grid& g, int channels, const char* what) {
    if (g.shape() != Shape3{channels, 1, 1}) {
        throw ShapeError(std::string(what) + ": expected (" + std::to_string(channels) + ", 1, 1), got " +
                         g.shape().str());
    }
}

struct StatsRaw {
    std::vector<double> mean;
    std::vector<double> std;
    std::vector<bool> clamped;
};

StatsRaw raw_stats(const Grid& x) {
    const int c = x.channels();
    const std::size_t n = x.shape().plane();
    if (n == 0) {
        throw ShapeError("channel statistics need at least one spatial position");
    }
    StatsRaw s;
    s.mean.resize(static_cast<std::size_t>(c));
    s.std.resize(static_cast<std::size_t>(c));
    s.clamped.resize(static_cast<std::size_t>(c));
    for (int ch = 0; ch < c; ++ch) {
        auto v = x.channel(ch);
        double sum = 0.0;
        for (float f : v) {
            sum += f;
        }
        const double mean = sum / static_cast<double>(n);
        double sq = 0.0;
        for (float f : v) {
            const double d = f - mean;
            sq += d * d;
        }
        const double sd = std::sqrt(sq / static_cast<double>(n));
        const auto idx = static_cast<std::size_t>(ch);
        s.mean[idx] = mean;
        s.clamped[idx] = sd < kStdEpsilon;
        s.std[idx] = s.clamped[idx] ? static_cast<double>(kStdEpsilon) : sd;
    }
    return s;
}

} // namespace

ChannelStats channel_stats(const Grid& input) {
    const StatsRaw raw = raw_stats(input);
    ChannelStats out;
    out.mean.assign(raw.mean.begin(), raw.mean.end());
    out.std.assign(raw.std.begin(), raw.std.end());
    for (float& s : out.std) {
        s = std::max(s, kStdEpsilon);
    }
    return out;
}

namespace ad {

Var conv2d(Var input, Var kernel, Var bias) {
    const Grid& x = input.value();
    const Grid& k = kernel.value();
    const int cin = x.channels();
    const int cout = k.channels();
    if (k.height() != cin || k.width() != 9) {
        throw ShapeError("conv2d: kernel " + k.shape().str() + " does not match input channels " +
                         std::to_string(cin) + " (expected (out, " + std::to_string(cin) + ", 9))");
    }
    require_column(bias.value(), cout, "conv2d bias");
    const int h = x.height();
    const int w = x.width();
    const auto hw = static_cast<Eigen::Index>(x.shape().plane());

    std::vector<float> col;
    im2col(x, col);
    Grid out(cout, h, w);
    ConstMapMat kmat(k.data(), cout, static_cast<Eigen::Index>(cin) * 9);
    ConstMapMat cmat(col.data(), static_cast<Eigen::Index>(cin) * 9, hw);
    MapMat omat(out.data(), cout, hw);
    omat.noalias() = kmat * cmat;
    const Grid& b = bias.value();
    for (int o = 0; o < cout; ++o) {
        omat.row(o).array() += b[static_cast<std::size_t>(o)];
    }

    return input.tape().record(
        "conv2d", std::move(out), {input, kernel, bias}, [input, kernel, bias, cin, cout, hw](const Grid& dy) {
            Tape& tape = input.tape();
            ConstMapMat dmat(dy.data(), cout, hw);
            const Grid& k = kernel.value();
            ConstMapMat kmat(k.data(), cout, static_cast<Eigen::Index>(cin) * 9);
            if (kernel.requires_grad() || input.requires_grad()) {
                std::vector<float> col;
                if (kernel.requires_grad()) {
                    im2col(input.value(), col);
                    ConstMapMat cmat(col.data(), static_cast<Eigen::Index>(cin) * 9, hw);
                    Grid& dk = tape.grad_buffer(kernel);
                    MapMat dkmat(dk.data(), cout, static_cast<Eigen::Index>(cin) * 9);
                    dkmat.noalias() += dmat * cmat.transpose();
                }
                if (input.requires_grad()) {
                    RowMat dcol = kmat.transpose() * dmat;
                    col2im(dcol, tape.grad_buffer(input));
                }
            }
            if (bias.requires_grad()) {
                Grid& db = tape.grad_buffer(bias);
                for (int o = 0; o < cout; ++o) {
                    double s = 0.0;
                    for (Eigen::Index i = 0; i < hw; ++i) {
                        s += dmat(o, i);
                    }
                    db[static_cast<std::size_t>(o)] += static_cast<float>(s);
                }
            }
        });
}

Var relu(Var input) {
    const Grid& x = input.value();
    Grid out(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) {
        out[i] = std::max(x[i], 0.0f);
    }
    return input.tape().record("relu", std::move(out), {input}, [input](const Grid& dy) {
        const Grid& x = input.value();
        Grid& dx = input.tape().grad_buffer(input);
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (x[i] > 0.0f) {
                dx[i] += dy[i];
            }
        }
    });
}

StatsVars channel_stats(Var input) {
    const Grid& x = input.value();
    const int c = x.channels();
    auto raw = std::make_shared<StatsRaw>(raw_stats(x));
    Grid mean(c, 1, 1);
    Grid sd(c, 1, 1);
    for (int ch = 0; ch < c; ++ch) {
        const auto i = static_cast<std::size_t>(ch);
        mean[i] = static_cast<float>(raw->mean[i]);
        sd[i] = std::max(static_cast<float>(raw->std[i]), kStdEpsilon);
    }
    const double n = static_cast<double>(x.shape().plane());
    Tape& tape = input.tape();
    Var mv = tape.record("channel_mean", std::move(mean), {input}, [input, n](const Grid& dmean) {
        Grid& dx = input.tape().grad_buffer(input);
        for (int ch = 0; ch < dx.channels(); ++ch) {
            const auto g = static_cast<float>(dmean[static_cast<std::size_t>(ch)] / n);
            for (float& v : dx.channel(ch)) {
                v += g;
            }
        }
    });
    Var sv = tape.record("channel_std", std::move(sd), {input}, [input, raw, n](const Grid& dstd) {
        const Grid& x = input.value();
        Grid& dx = input.tape().grad_buffer(input);
        for (int ch = 0; ch < dx.channels(); ++ch) {
            const auto i = static_cast<std::size_t>(ch);
            if (raw->clamped[i]) {
                continue;
            }
            const double scale = dstd[i] / (n * raw->std[i]);
            auto src = x.channel(ch);
            auto dst = dx.channel(ch);
            for (std::size_t p = 0; p < src.size(); ++p) {
                dst[p] += static_cast<float>(scale * (src[p] - raw->mean[i]));
            }
        }
    });
    return {mv, sv};
}

Var normalize(Var input) {
    const Grid& x = input.value();
    auto raw = std::make_shared<StatsRaw>(raw_stats(x));
    Grid out(x.shape());
    for (int ch = 0; ch < x.channels(); ++ch) {
        const auto i = static_cast<std::size_t>(ch);
        auto src = x.channel(ch);
        auto dst = out.channel(ch);
        for (std::size_t p = 0; p < src.size(); ++p) {
            dst[p] = static_cast<float>((src[p] - raw->mean[i]) / raw->std[i]);
        }
    }
    return input.tape().record("normalize", std::move(out), {input}, [input, raw](const Grid& dy) {
        const Grid& x = input.value();
        Grid& dx = input.tape().grad_buffer(input);
        const double n = static_cast<double>(x.shape().plane());
        for (int ch = 0; ch < x.channels(); ++ch) {
            const auto i = static_cast<std::size_t>(ch);
            auto src = x.channel(ch);
            auto g = dy.channel(ch);
            auto dst = dx.channel(ch);
            const double inv = 1.0 / raw->std[i];
            double mean_g = 0.0;
            double mean_gy = 0.0;
            for (std::size_t p = 0; p < src.size(); ++p) {
                mean_g += g[p];
                mean_gy += g[p] * (src[p] - raw->mean[i]) * inv;
            }
            mean_g /= n;
            mean_gy /= n;
            if (raw->clamped[i]) {
                mean_gy = 0.0;
            }
            for (std::size_t p = 0; p < src.size(); ++p) {
                const double y = (src[p] - raw->mean[i]) * inv;
                dst[p] += static_cast<float>(inv * (g[p] - mean_g - y * mean_gy));
            }
        }
    });
}

Var affine_channel(Var input, Var scale, Var shift) {
    const Grid& x = input.value();
    const int c = x.channels();
    require_column(scale.value(), c, "affine_channel scale");
    require_column(shift.value(), c, "affine_channel shift");
    Grid out(x.shape());
    for (int ch = 0; ch < c; ++ch) {
        const float s = scale.value()[static_cast<std::size_t>(ch)];
        const float m = shift.value()[static_cast<std::size_t>(ch)];
        auto src = x.channel(ch);
        auto dst = out.channel(ch);
        if (m == 0.0f) {
            // Skipping the zero shift keeps a unit scale an exact identity, including -0.
            for (std::size_t p = 0; p < src.size(); ++p) {
                dst[p] = s * src[p];
            }
        } else {
            for (std::size_t p = 0; p < src.size(); ++p) {
                dst[p] = s * src[p] + m;
            }
        }
    }
    return input.tape().record(
        "affine_channel", std::move(out), {input, scale, shift}, [input, scale, shift](const Grid& dy) {
            Tape& tape = input.tape();
            const Grid& x = input.value();
            for (int ch = 0; ch < x.channels(); ++ch) {
                const auto i = static_cast<std::size_t>(ch);
                auto g = dy.channel(ch);
                auto src = x.channel(ch);
                if (input.requires_grad()) {
                    const float s = scale.value()[i];
                    auto dst = tape.grad_buffer(input).channel(ch);
                    for (std::size_t p = 0; p < g.size(); ++p) {
                        dst[p] += s * g[p];
                    }
                }
                if (scale.requires_grad()) {
                    double acc = 0.0;
                    for (std::size_t p = 0; p < g.size(); ++p) {
                        acc += static_cast<double>(g[p]) * src[p];
                    }
                    tape.grad_buffer(scale)[i] += static_cast<float>(acc);
                }
                if (shift.requires_grad()) {
                    double acc = 0.0;
                    for (float v : g) {
                        acc += v;
                    }
                    tape.grad_buffer(shift)[i] += static_cast<float>(acc);
                }
            }
        });
}

Var dense(Var input, Var weights, Var bias) {
    const Grid& x = input.value();
    const Grid& wt = weights.value();
    const int in = x.channels();
    const int out_ch = wt.channels();
    if (wt.height() != in || wt.width() != 1) {
        throw ShapeError("dense: weights " + wt.shape().str() + " do not match input channels " + std::to_string(in));
    }
    require_column(bias.value(), out_ch, "dense bias");
    const auto hw = static_cast<Eigen::Index>(x.shape().plane());
    Grid out(out_ch, x.height(), x.width());
    ConstMapMat wm(wt.data(), out_ch, in);
    ConstMapMat xm(x.data(), in, hw);
    MapMat om(out.data(), out_ch, hw);
    om.noalias() = wm * xm;
    for (int o = 0; o < out_ch; ++o) {
        om.row(o).array() += bias.value()[static_cast<std::size_t>(o)];
    }
    return input.tape().record(
        "dense", std::move(out), {input, weights, bias}, [input, weights, bias, in, out_ch, hw](const Grid& dy) {
            Tape& tape = input.tape();
            ConstMapMat dm(dy.data(), out_ch, hw);
            if (weights.requires_grad()) {
                ConstMapMat xm(input.value().data(), in, hw);
                MapMat dw(tape.grad_buffer(weights).data(), out_ch, in);
                dw.noalias() += dm * xm.transpose();
            }
            if (input.requires_grad()) {
                ConstMapMat wm(weights.value().data(), out_ch, in);
                MapMat dx(tape.grad_buffer(input).data(), in, hw);
                dx.noalias() += wm.transpose() * dm;
            }
            if (bias.requires_grad()) {
                Grid& db = tape.grad_buffer(bias);
                for (int o = 0; o < out_ch; ++o) {
                    double s = 0.0;
                    for (Eigen::Index i = 0; i < hw; ++i) {
                        s += dm(o, i);
                    }
                    db[static_cast<std::size_t>(o)] += static_cast<float>(s);
                }
            }
        });
}

namespace {

Var squared_difference(Var a, Var b, bool mean, const char* name) {
    require_same_shape(a.value(), b.value(), name);
    const Grid& av = a.value();
    const Grid& bv = b.value();
    double acc = 0.0;
    for (std::size_t i = 0; i < av.size(); ++i) {
        const double d = static_cast<double>(av[i]) - bv[i];
        acc += d * d;
    }
    const double n = mean ? static_cast<double>(std::max<std::size_t>(av.size(), 1)) : 1.0;
    return a.tape().record(name, Grid::scalar(static_cast<float>(acc / n)), {a, b}, [a, b, n](const Grid& g) {
        Tape& tape = a.tape();
        const Grid& av = a.value();
        const Grid& bv = b.value();
        const double k = 2.0 * g[0] / n;
        if (a.requires_grad()) {
            Grid& da = tape.grad_buffer(a);
            for (std::size_t i = 0; i < av.size(); ++i) {
                da[i] += static_cast<float>(k * (static_cast<double>(av[i]) - bv[i]));
            }
        }
        if (b.requires_grad()) {
            Grid& db = tape.grad_buffer(b);
            for (std::size_t i = 0; i < av.size(); ++i) {
                db[i] -= static_cast<float>(k * (static_cast<double>(av[i]) - bv[i]));
            }
        }
    });
}

} // namespace

Var mse(Var a, Var b) { return squared_difference(a, b, true, "mse"); }

Var sse(Var a, Var b) { return squared_difference(a, b, false, "sse"); }

Var l1(Var a, Var b) {
    require_same_shape(a.value(), b.value(), "l1");
    const Grid& av = a.value();
    const Grid& bv = b.value();
    double acc = 0.0;
    for (std::size_t i = 0; i < av.size(); ++i) {
        acc += std::abs(static_cast<double>(av[i]) - bv[i]);
    }
    const double n = static_cast<double>(std::max<std::size_t>(av.size(), 1));
    return a.tape().record("l1", Grid::scalar(static_cast<float>(acc / n)), {a, b}, [a, b, n](const Grid& g) {
        Tape& tape = a.tape();
        const Grid& av = a.value();
        const Grid& bv = b.value();
        const auto k = static_cast<float>(g[0] / n);
        for (std::size_t i = 0; i < av.size(); ++i) {
            const float d = av[i] - bv[i];
            const float s = d > 0.0f ? k : (d < 0.0f ? -k : 0.0f);
            if (a.requires_grad()) {
                tape.grad_buffer(a)[i] += s;
            }
            if (b.requires_grad()) {
                tape.grad_buffer(b)[i] -= s;
            }
        }
    });
}

Var add(Var a, Var b) {
    require_same_shape(a.value(), b.value(), "add");
    Grid out(a.value().shape());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = a.value()[i] + b.value()[i];
    }
    return a.tape().record("add", std::move(out), {a, b}, [a, b](const Grid& g) {
        a.tape().accumulate(a, g);
        b.tape().accumulate(b, g);
    });
}

Var scale(Var a, float s) {
    Grid out(a.value().shape());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = s * a.value()[i];
    }
    return a.tape().record("scale", std::move(out), {a}, [a, s](const Grid& g) {
        Grid& da = a.tape().grad_buffer(a);
        for (std::size_t i = 0; i < g.size(); ++i) {
            da[i] += s * g[i];
        }
    });
}

Var max_pool2(Var input) {
    const Grid& x = input.value();
    const int oh = x.height() / 2;
    const int ow = x.width() / 2;
    if (oh == 0 || ow == 0) {
        throw ShapeError("max_pool2: input " + x.shape().str() + " too small to halve");
    }
    Grid out(x.channels(), oh, ow);
    auto argmax = std::make_shared<std::vector<std::uint32_t>>(out.size());
    std::size_t k = 0;
    for (int c = 0; c < x.channels(); ++c) {
        for (int y = 0; y < oh; ++y) {
            for (int xx = 0; xx < ow; ++xx, ++k) {
                float best = x(c, 2 * y, 2 * xx);
                std::uint32_t best_idx = 0;
                for (std::uint32_t t = 1; t < 4; ++t) {
                    const float v = x(c, 2 * y + static_cast<int>(t / 2), 2 * xx + static_cast<int>(t % 2));
                    if (v > best) {
                        best = v;
                        best_idx = t;
                    }
                }
                out[k] = best;
                (*argmax)[k] = best_idx;
            }
        }
    }
    return input.tape().record("max_pool2", std::move(out), {input}, [input, argmax, oh, ow](const Grid& dy) {
        Grid& dx = input.tape().grad_buffer(input);
        std::size_t k = 0;
        for (int c = 0; c < dx.channels(); ++c) {
            for (int y = 0; y < oh; ++y) {
                for (int xx = 0; xx < ow; ++xx, ++k) {
                    const std::uint32_t t = (*argmax)[k];
                    dx(c, 2 * y + static_cast<int>(t / 2), 2 * xx + static_cast<int>(t % 2)) += dy[k];
                }
            }
        }
    });
}

Var upsample2(Var input) {
    const Grid& x = input.value();
    Grid out(x.channels(), x.height() * 2, x.width() * 2);
    for (int c = 0; c < out.channels(); ++c) {
        for (int y = 0; y < out.height(); ++y) {
            for (int xx = 0; xx < out.width(); ++xx) {
                out(c, y, xx) = x(c, y / 2, xx / 2);
            }
        }
    }
    return input.tape().record("upsample2", std::move(out), {input}, [input](const Grid& dy) {
        Grid& dx = input.tape().grad_buffer(input);
        for (int c = 0; c < dy.channels(); ++c) {
            for (int y = 0; y < dy.height(); ++y) {
                for (int xx = 0; xx < dy.width(); ++xx) {
                    dx(c, y / 2, xx / 2) += dy(c, y, xx);
                }
            }
        }
    });
}

Var crop(Var input, int y0, int x0, int height, int width) {
    Grid out = input.value().crop(y0, x0, height, width);
    return input.tape().record("crop", std::move(out), {input}, [input, y0, x0](const Grid& dy) {
        Grid& dx = input.tape().grad_buffer(input);
        for (int c = 0; c < dy.channels(); ++c) {
            for (int y = 0; y < dy.height(); ++y) {
                for (int xx = 0; xx < dy.width(); ++xx) {
                    dx(c, y0 + y, x0 + xx) += dy(c, y, xx);
                }
            }
        }
    });
}

} // namespace ad
} // namespace splatstyle
