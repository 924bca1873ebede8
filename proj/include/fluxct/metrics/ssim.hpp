#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

namespace fluxct {

// Window statistics configuration for SSIM. Defaults follow the standard
// reference settings: Gaussian 11x11 with sigma 1.5, c1=(0.01 L)^2,
// c2=(0.03 L)^2 on a unit dynamic range.
struct SsimParams {
    enum class Window { Gaussian, Uniform };
    Window window = Window::Gaussian;
    int window_size = 11; // odd
    double sigma = 1.5;   // Gaussian only
    double dynamic_range = 1.0;
    double c1 = 0.0001; // (0.01 * L)^2
    double c2 = 0.0009; // (0.03 * L)^2

    static SsimParams defaults(double dynamic_range = 1.0) {
        SsimParams p;
        p.dynamic_range = dynamic_range;
        p.c1 = (0.01 * dynamic_range) * (0.01 * dynamic_range);
        p.c2 = (0.03 * dynamic_range) * (0.03 * dynamic_range);
        return p;
    }

    void validate() const {
        if (window_size <= 0 || window_size % 2 == 0)
            throw std::invalid_argument("SsimParams: window size must be odd and positive");
        if (!(c1 > 0.0) || !(c2 > 0.0))
            throw std::invalid_argument("SsimParams: c1 and c2 must be positive");
        if (window == Window::Gaussian && !(sigma > 0.0))
            throw std::invalid_argument("SsimParams: sigma must be positive");
    }
};

namespace ssim_detail {

// Folds an index into [0, n) by edge-inclusive mirror reflection
// (-1 -> 0, -2 -> 1, n -> n-1, ...).
inline int fold(int i, int n) {
    while (i < 0 || i >= n) {
        if (i < 0) i = -1 - i;
        if (i >= n) i = 2 * n - 1 - i;
    }
    return i;
}

template <typename T>
std::vector<T> make_window(const SsimParams& p) {
    p.validate();
    const int k = p.window_size;
    std::vector<T> w(std::size_t(k) * k);
    const int m = k / 2;
    if (p.window == SsimParams::Window::Uniform) {
        const T v = T(1) / T(k * k);
        std::fill(w.begin(), w.end(), v);
        return w;
    }
    long double sum = 0.0L;
    for (int dy = -m; dy <= m; ++dy)
        for (int dx = -m; dx <= m; ++dx) {
            const long double g =
                std::exp(-(static_cast<long double>(dx) * dx + static_cast<long double>(dy) * dy) /
                         (2.0L * p.sigma * p.sigma));
            w[std::size_t(dy + m) * k + (dx + m)] = static_cast<T>(g);
            sum += g;
        }
    for (auto& v : w) v = static_cast<T>(static_cast<long double>(v) / sum);
    return w;
}

// dst(p) = sum_k win[k] * src(fold(p + k - m)); same-size output with
// mirror-reflected boundaries.
template <typename T>
void window_correlate(int h, int w, const T* src, int k, const T* win, T* dst) {
    const int m = k / 2;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            T acc = T(0);
            if (y >= m && y + m < h && x >= m && x + m < w) {
                const T* wp = win;
                for (int dy = -m; dy <= m; ++dy) {
                    const T* row = src + std::size_t(y + dy) * w + (x - m);
                    for (int dx = 0; dx < k; ++dx) acc += wp[dx] * row[dx];
                    wp += k;
                }
            } else {
                for (int dy = -m; dy <= m; ++dy) {
                    const int yy = fold(y + dy, h);
                    for (int dx = -m; dx <= m; ++dx) {
                        const int xx = fold(x + dx, w);
                        acc += win[std::size_t(dy + m) * k + (dx + m)] *
                               src[std::size_t(yy) * w + xx];
                    }
                }
            }
            dst[std::size_t(y) * w + x] = acc;
        }
    }
}

// Exact adjoint of window_correlate: scatters src(p)*win[k] back to the
// pixels the forward pass read from.
template <typename T>
void window_correlate_adjoint(int h, int w, const T* src, int k, const T* win,
                              T* dst) {
    const int m = k / 2;
    std::fill(dst, dst + std::size_t(h) * w, T(0));
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const T s = src[std::size_t(y) * w + x];
            for (int dy = -m; dy <= m; ++dy) {
                const int yy = fold(y + dy, h);
                for (int dx = -m; dx <= m; ++dx) {
                    const int xx = fold(x + dx, w);
                    dst[std::size_t(yy) * w + xx] +=
                        win[std::size_t(dy + m) * k + (dx + m)] * s;
                }
            }
        }
    }
}

} // namespace ssim_detail

// Per-pixel windowed statistics and the SSIM map derived from them.
template <typename T>
struct SsimFields {
    int height = 0, width = 0;
    std::vector<T> mu_t, mu_r, var_t, var_r, cov, map;
};

template <typename T>
SsimFields<T> ssim_fields(int h, int w, const T* t, const T* r,
                          const SsimParams& params) {
    using namespace ssim_detail;
    const auto win = make_window<T>(params);
    const int k = params.window_size;
    const std::size_t n = std::size_t(h) * w;

    SsimFields<T> f;
    f.height = h;
    f.width = w;
    f.mu_t.resize(n);
    f.mu_r.resize(n);
    f.var_t.resize(n);
    f.var_r.resize(n);
    f.cov.resize(n);
    f.map.resize(n);

    std::vector<T> tmp(n), m_tt(n), m_rr(n), m_tr(n);
    window_correlate(h, w, t, k, win.data(), f.mu_t.data());
    window_correlate(h, w, r, k, win.data(), f.mu_r.data());
    for (std::size_t i = 0; i < n; ++i) tmp[i] = t[i] * t[i];
    window_correlate(h, w, tmp.data(), k, win.data(), m_tt.data());
    for (std::size_t i = 0; i < n; ++i) tmp[i] = r[i] * r[i];
    window_correlate(h, w, tmp.data(), k, win.data(), m_rr.data());
    for (std::size_t i = 0; i < n; ++i) tmp[i] = t[i] * r[i];
    window_correlate(h, w, tmp.data(), k, win.data(), m_tr.data());

    const T c1 = static_cast<T>(params.c1), c2 = static_cast<T>(params.c2);
    for (std::size_t i = 0; i < n; ++i) {
        f.var_t[i] = m_tt[i] - f.mu_t[i] * f.mu_t[i];
        f.var_r[i] = m_rr[i] - f.mu_r[i] * f.mu_r[i];
        f.cov[i] = m_tr[i] - f.mu_t[i] * f.mu_r[i];
        const T n1 = T(2) * f.mu_r[i] * f.mu_t[i] + c1;
        const T n2 = T(2) * f.cov[i] + c2;
        const T d1 = f.mu_r[i] * f.mu_r[i] + f.mu_t[i] * f.mu_t[i] + c1;
        const T d2 = f.var_r[i] + f.var_t[i] + c2;
        f.map[i] = (n1 * n2) / (d1 * d2);
    }
    return f;
}

// Gradient of L = 1 - mean(map) with respect to t, exact through the
// windowed statistics including the mirrored boundaries.
template <typename T>
std::vector<T> ssim_loss_grad(int h, int w, const T* t, const T* r,
                              const SsimFields<T>& f, const SsimParams& params) {
    using namespace ssim_detail;
    const auto win = make_window<T>(params);
    const int k = params.window_size;
    const std::size_t n = std::size_t(h) * w;
    const T c1 = static_cast<T>(params.c1), c2 = static_cast<T>(params.c2);

    // Per-pixel partials of the map wrt (mu_t, var_t, cov), folded into the
    // coefficients of w, w*t(q) and w*r(q) in dS(p)/dt(q).
    std::vector<T> a1(n), a2(n), a3(n);
    for (std::size_t i = 0; i < n; ++i) {
        const T mu_t = f.mu_t[i], mu_r = f.mu_r[i];
        const T n1 = T(2) * mu_r * mu_t + c1;
        const T n2 = T(2) * f.cov[i] + c2;
        const T d1 = mu_r * mu_r + mu_t * mu_t + c1;
        const T d2 = f.var_r[i] + f.var_t[i] + c2;
        const T dS_dmu = T(2) * n2 * (mu_r * d1 - mu_t * n1) / (d1 * d1 * d2);
        const T dS_dvar = -(n1 * n2) / (d1 * d2 * d2);
        const T dS_dcov = T(2) * n1 / (d1 * d2);
        a1[i] = dS_dmu - T(2) * mu_t * dS_dvar - mu_r * dS_dcov;
        a2[i] = T(2) * dS_dvar;
        a3[i] = dS_dcov;
    }

    std::vector<T> b1(n), b2(n), b3(n), grad(n);
    window_correlate_adjoint(h, w, a1.data(), k, win.data(), b1.data());
    window_correlate_adjoint(h, w, a2.data(), k, win.data(), b2.data());
    window_correlate_adjoint(h, w, a3.data(), k, win.data(), b3.data());
    const T scale = T(-1) / static_cast<T>(n);
    for (std::size_t i = 0; i < n; ++i)
        grad[i] = scale * (b1[i] + t[i] * b2[i] + r[i] * b3[i]);
    return grad;
}

} // namespace fluxct
