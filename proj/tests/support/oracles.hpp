#pragma once

// Scalar-loop reference implementations used by the unit and acceptance tests.
// They read plain vectors so nothing here shares code paths with the library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <torch/torch.h>

namespace oracle {

inline std::vector<double> values(const torch::Tensor& t) {
    const auto c = t.detach().to(torch::kDouble).contiguous();
    return {c.data_ptr<double>(), c.data_ptr<double>() + c.numel()};
}

/// mean_b -sum_k t[b,k] * log softmax(z[b])_k
inline double cls_loss(const std::vector<double>& logits, const std::vector<double>& targets, int B, int K) {
    double total = 0.0;
    for (int b = 0; b < B; ++b) {
        double m = -std::numeric_limits<double>::infinity();
        for (int k = 0; k < K; ++k) m = std::max(m, logits[b * K + k]);
        double s = 0.0;
        for (int k = 0; k < K; ++k) s += std::exp(logits[b * K + k] - m);
        const double lse = m + std::log(s);
        for (int k = 0; k < K; ++k) total -= targets[b * K + k] * (logits[b * K + k] - lse);
    }
    return total / B;
}

/// Per-pixel cross entropy averaged over the pixels of masked-in elements.
inline double ce_seg(const std::vector<double>& logits, const std::vector<std::int64_t>& labels,
                     const std::vector<bool>& mask, int B, int C, int H, int W) {
    double total = 0.0;
    int count = 0;
    for (int b = 0; b < B; ++b) {
        if (!mask[b]) continue;
        double elem = 0.0;
        for (int y = 0; y < H; ++y) {
            for (int x = 0; x < W; ++x) {
                auto at = [&](int c) { return logits[((b * C + c) * H + y) * W + x]; };
                double m = at(0);
                for (int c = 1; c < C; ++c) m = std::max(m, at(c));
                double s = 0.0;
                for (int c = 0; c < C; ++c) s += std::exp(at(c) - m);
                elem += m + std::log(s) - at(static_cast<int>(labels[(b * H + y) * W + x]));
            }
        }
        total += elem / (H * W);
        ++count;
    }
    return count == 0 ? 0.0 : total / count;
}

/// Per-element mean squared difference, averaged over masked-in elements.
inline double sr(const std::vector<double>& gold, const std::vector<double>& pred, const std::vector<bool>& mask,
                 int B) {
    const std::size_t per = gold.size() / static_cast<std::size_t>(B);
    double total = 0.0;
    int count = 0;
    for (int b = 0; b < B; ++b) {
        if (!mask[b]) continue;
        double e = 0.0;
        for (std::size_t i = 0; i < per; ++i) {
            const double d = gold[b * per + i] - pred[b * per + i];
            e += d * d;
        }
        total += e / static_cast<double>(per);
        ++count;
    }
    return count == 0 ? 0.0 : total / count;
}

inline double mse(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return s / static_cast<double>(a.size());
}

inline double l1(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    return s / static_cast<double>(a.size());
}

/// Quadratic critic D(x) = sum_i w_i x_i^2 over one sample of n pixels.
struct QuadraticCritic {
    std::vector<double> w;

    [[nodiscard]] double score(const double* x) const {
        double s = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * x[i] * x[i];
        return s;
    }
    /// Mean over the batch of (|| 2 w * x_hat || - 1)^2 with x_hat = e real + (1 - e) fake.
    [[nodiscard]] double penalty(const std::vector<double>& real, const std::vector<double>& fake,
                                 const std::vector<double>& eps) const {
        const std::size_t n = w.size();
        double total = 0.0;
        for (std::size_t b = 0; b < eps.size(); ++b) {
            double sq = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double xh = eps[b] * real[b * n + i] + (1.0 - eps[b]) * fake[b * n + i];
                const double g = 2.0 * w[i] * xh;
                sq += g * g;
            }
            total += (std::sqrt(sq) - 1.0) * (std::sqrt(sq) - 1.0);
        }
        return total / static_cast<double>(eps.size());
    }
    [[nodiscard]] double mean_score(const std::vector<double>& x) const {
        const std::size_t n = w.size(), B = x.size() / n;
        double s = 0.0;
        for (std::size_t b = 0; b < B; ++b) s += score(&x[b * n]);
        return s / static_cast<double>(B);
    }
    /// The same critic as a differentiable torch function of [B,1,H,W] images.
    [[nodiscard]] std::function<torch::Tensor(const torch::Tensor&)> as_torch(const std::vector<long>& shape) const {
        auto wt = torch::tensor(w, torch::kDouble).view(shape);
        return [wt](const torch::Tensor& x) { return (wt.to(x.dtype()) * x * x).flatten(1).sum(1); };
    }
};

/// Central finite differences of a scalar function of one double tensor.
inline torch::Tensor numeric_gradient(const std::function<torch::Tensor(const torch::Tensor&)>& f,
                                      const torch::Tensor& x, double h = 1e-6) {
    auto base = x.detach().to(torch::kDouble).clone().contiguous();
    auto grad = torch::zeros_like(base);
    auto* p = base.data_ptr<double>();
    auto* g = grad.data_ptr<double>();
    for (std::int64_t i = 0; i < base.numel(); ++i) {
        const double orig = p[i];
        p[i] = orig + h;
        const double up = f(base).item<double>();
        p[i] = orig - h;
        const double down = f(base).item<double>();
        p[i] = orig;
        g[i] = (up - down) / (2.0 * h);
    }
    return grad;
}

inline torch::Tensor analytic_gradient(const std::function<torch::Tensor(const torch::Tensor&)>& f,
                                       const torch::Tensor& x) {
    auto leaf = x.detach().to(torch::kDouble).clone().requires_grad_(true);
    auto y = f(leaf);
    auto g = torch::autograd::grad({y}, {leaf}, {}, false, false, true)[0];
    return g.defined() ? g : torch::zeros_like(leaf);
}

/// ||a - n|| / max(||a||, ||n||), 0 when both vanish.
inline double relative_error(const torch::Tensor& analytic, const torch::Tensor& numeric) {
    const double denom = std::max(analytic.norm().item<double>(), numeric.norm().item<double>());
    if (denom < 1e-12) return 0.0;
    return (analytic - numeric).norm().item<double>() / denom;
}

inline double gradient_check(const std::function<torch::Tensor(const torch::Tensor&)>& f, const torch::Tensor& x) {
    return relative_error(analytic_gradient(f, x), numeric_gradient(f, x));
}

/// Reference report statistics.
inline double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

inline double sample_std(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace oracle
