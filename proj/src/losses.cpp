// Copyright Contributors to the splatstyle Project
// SPDX-License-Identifier: Apache-2.0
//
#include "splatstyle/losses.hpp"

#include "splatstyle/errors.hpp"

#include <cmath>
#include <vector>

namespace splatstyle {
namespace {

constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

std::array<double, kSsimWindow> gaussian_window() {
    std::array<double, kSsimWindow> w{};
    double sum = 0.0;
    for (int i = 0; i < kSsimWindow; ++i) {
        const double d = i - kSsimWindow / 2;
        w[static_cast<std::size_t>(i)] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
        sum += w[static_cast<std::size_t>(i)];
    }
    for (auto& v : w) {
        v /= sum;
    }
    return w;
}

/// Separable Gaussian blur of an h x w plane with zero padding. The kernel is symmetric, so
/// this is also its own adjoint.
std::vector<double> blur(const std::vector<double>& src, int h, int w) {
    static const auto kWin = gaussian_window();
    constexpr int r = kSsimWindow / 2;
    std::vector<double> tmp(src.size(), 0.0);
    std::vector<double> out(src.size(), 0.0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int k = -r; k <= r; ++k) {
                const int xx = x + k;
                if (xx >= 0 && xx < w) {
                    acc += kWin[static_cast<std::size_t>(k + r)] * src[static_cast<std::size_t>(y * w + xx)];
                }
            }
            tmp[static_cast<std::size_t>(y * w + x)] = acc;
        }
    }
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int k = -r; k <= r; ++k) {
                const int yy = y + k;
                if (yy >= 0 && yy < h) {
                    acc += kWin[static_cast<std::size_t>(k + r)] * tmp[static_cast<std::size_t>(yy * w + x)];
                }
            }
            out[static_cast<std::size_t>(y * w + x)] = acc;
        }
    }
    return out;
}

/// Mean SSIM and, when `grad` is given, d(mean SSIM)/dx.
double ssim_impl(const Grid& xg, const Grid& yg, Grid* grad) {
    require_same_shape(xg, yg, "ssim");
    const int h = xg.height();
    const int w = xg.width();
    const auto plane = static_cast<std::size_t>(h) * w;
    const double n = static_cast<double>(xg.size());
    double total = 0.0;
    for (int c = 0; c < xg.channels(); ++c) {
        std::vector<double> x(plane);
        std::vector<double> y(plane);
        std::vector<double> xx(plane);
        std::vector<double> yy(plane);
        std::vector<double> xy(plane);
        auto xs = xg.channel(c);
        auto ys = yg.channel(c);
        for (std::size_t i = 0; i < plane; ++i) {
            x[i] = xs[i];
            y[i] = ys[i];
            xx[i] = x[i] * x[i];
            yy[i] = y[i] * y[i];
            xy[i] = x[i] * y[i];
        }
        const auto mx = blur(x, h, w);
        const auto my = blur(y, h, w);
        const auto exx = blur(xx, h, w);
        const auto eyy = blur(yy, h, w);
        const auto exy = blur(xy, h, w);
        std::vector<double> d_mx(plane);
        std::vector<double> d_exx(plane);
        std::vector<double> d_exy(plane);
        for (std::size_t i = 0; i < plane; ++i) {
            const double sxx = exx[i] - mx[i] * mx[i];
            const double syy = eyy[i] - my[i] * my[i];
            const double sxy = exy[i] - mx[i] * my[i];
            const double a1 = 2.0 * mx[i] * my[i] + kC1;
            const double a2 = 2.0 * sxy + kC2;
            const double b1 = mx[i] * mx[i] + my[i] * my[i] + kC1;
            const double b2 = sxx + syy + kC2;
            const double s = a1 * a2 / (b1 * b2);
            total += s;
            if (grad != nullptr) {
                const double ds_dmx = 2.0 * my[i] * a2 / (b1 * b2) - s * 2.0 * mx[i] / b1;
                const double ds_dsxx = -s / b2;
                const double ds_dsxy = 2.0 * a1 / (b1 * b2);
                d_mx[i] = (ds_dmx - 2.0 * mx[i] * ds_dsxx - my[i] * ds_dsxy) / n;
                d_exx[i] = ds_dsxx / n;
                d_exy[i] = ds_dsxy / n;
            }
        }
        if (grad != nullptr) {
            const auto g_mx = blur(d_mx, h, w);
            const auto g_exx = blur(d_exx, h, w);
            const auto g_exy = blur(d_exy, h, w);
            auto dst = grad->channel(c);
            for (std::size_t i = 0; i < plane; ++i) {
                dst[i] = static_cast<float>(g_mx[i] + 2.0 * x[i] * g_exx[i] + y[i] * g_exy[i]);
            }
        }
    }
    return total / n;
}

double mse_double(const Grid& a, const Grid& b, const char* what) {
    require_same_shape(a, b, what);
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a[i]) - b[i];
        acc += d * d;
    }
    return a.empty() ? 0.0 : acc / static_cast<double>(a.size());
}

} // namespace

double ssim(const Grid& a, const Grid& b) { return ssim_impl(a, b, nullptr); }

double loss_photometric(const Grid& render, const Grid& target, double ssim_weight) {
    require_same_shape(render, target, "loss_photometric");
    double l1 = 0.0;
    for (std::size_t i = 0; i < render.size(); ++i) {
        l1 += std::abs(static_cast<double>(render[i]) - target[i]);
    }
    l1 /= static_cast<double>(render.size());
    const double s = ssim_weight > 0.0 ? ssim(render, target) : 1.0;
    return (1.0 - ssim_weight) * l1 + ssim_weight * (1.0 - s);
}

Grid align_target(const Grid& content, const ParamGrids& encoder, ScaleMode mode) {
    ad::Tape tape;
    return ad::normalize(ad::encode(tape.constant(content), ad::bind(tape, encoder, false), mode)).value();
}

double loss_align(const Grid& expanded, const Grid& target) { return mse_double(expanded, target, "loss_align"); }

double loss_content(const Grid& output_feature, const Grid& adain_target) {
    return mse_double(output_feature, adain_target, "loss_content");
}

TapStats style_tap_stats(const Grid& style, const ParamGrids& encoder, ScaleMode mode) {
    ad::Tape tape;
    ad::EncoderTaps taps;
    ad::encode(tape.constant(style), ad::bind(tape, encoder, false), mode, &taps);
    TapStats out;
    for (std::size_t i = 0; i < taps.size(); ++i) {
        out[i] = channel_stats(taps[i].value());
    }
    return out;
}

double loss_style(const Grid& decoded, const Grid& style, const ParamGrids& encoder, ScaleMode mode) {
    const TapStats d = style_tap_stats(decoded, encoder, mode);
    const TapStats s = style_tap_stats(style, encoder, mode);
    double total = 0.0;
    for (std::size_t l = 0; l < d.size(); ++l) {
        for (std::size_t c = 0; c < d[l].channels(); ++c) {
            const double dm = static_cast<double>(d[l].mean[c]) - s[l].mean[c];
            const double ds = static_cast<double>(d[l].std[c]) - s[l].std[c];
            total += dm * dm + ds * ds;
        }
    }
    return total;
}

namespace ad {

Var ssim(Var x, const Grid& target) {
    const double value = ssim_impl(x.value(), target, nullptr);
    return x.tape().record("ssim", Grid::scalar(static_cast<float>(value)), {x}, [x, target](const Grid& dy) {
        Grid g(x.shape());
        ssim_impl(x.value(), target, &g);
        const float s = dy.item();
        Grid& buf = x.tape().grad_buffer(x);
        for (std::size_t i = 0; i < g.size(); ++i) {
            buf[i] += s * g[i];
        }
    });
}

Var photometric_loss(Var render, const Grid& target, double ssim_weight) {
    Tape& tape = render.tape();
    Var l1_term = scale(l1(render, tape.constant(target)), static_cast<float>(1.0 - ssim_weight));
    if (ssim_weight <= 0.0) {
        return l1_term;
    }
    Var dissim = add(tape.constant(Grid::scalar(1.0f)), scale(ssim(render, target), -1.0f));
    return add(l1_term, scale(dissim, static_cast<float>(ssim_weight)));
}

Var mse_to(Var a, const Grid& target) { return mse(a, a.tape().constant(target)); }

Var style_loss(const EncoderTaps& taps, const TapStats& style) {
    Var total;
    for (std::size_t l = 0; l < taps.size(); ++l) {
        Tape& tape = taps[l].tape();
        StatsVars st = channel_stats(taps[l]);
        Var term = add(sse(st.mean, tape.constant(Grid::column(style[l].mean))),
                       sse(st.std, tape.constant(Grid::column(style[l].std))));
        total = total.valid() ? add(total, term) : term;
    }
    return total;
}

} // namespace ad
} // namespace splatstyle
