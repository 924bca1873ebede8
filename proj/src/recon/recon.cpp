#include "fluxct/recon/recon.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <stdexcept>

#include "fluxct/core/parallel.hpp"
#include "fluxct/tomo/projector.hpp"

namespace fluxct {

namespace {

void check_input(const Sinogram& sino) {
    sino.geometry.validate();
    if (sino.stage == SinogramStage::PhotonCounts)
        throw std::invalid_argument("reconstruct: photon counts must be log-transformed first");
    if (sino.data.size() !=
        std::size_t(sino.geometry.n_views) * std::size_t(sino.geometry.n_detectors))
        throw std::invalid_argument("reconstruct: payload size mismatch");
}

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

double l2_norm(const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v) acc += x * x;
    return std::sqrt(acc);
}

double rmse_vs(const std::vector<double>& x, const Image& truth) {
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - double(truth.data[i]);
        acc += d * d;
    }
    return std::sqrt(acc / double(x.size()));
}

void log_row(ResidualLog* log, const Image* truth, int iteration, double residual,
             const std::vector<double>& x) {
    if (!log) return;
    ResidualRow row;
    row.iteration = iteration;
    row.residual_norm = residual;
    if (truth) row.rmse_vs_truth = rmse_vs(x, *truth);
    log->rows.push_back(row);
}

Image to_image(const std::vector<double>& x, int size) {
    Image img(size, size);
    for (std::size_t i = 0; i < x.size(); ++i) img.data[i] = float(x[i]);
    return img;
}

void clamp_nonneg(std::vector<double>& x) {
    for (double& v : x)
        if (v < 0.0) v = 0.0;
}

} // namespace

void ReconConfig::validate() const {
    if (algorithm != ReconAlgorithm::FBP && iterations < 0)
        throw std::invalid_argument("ReconConfig: negative iterations");
    if (algorithm == ReconAlgorithm::SIRT && !(relaxation > 0.0 && relaxation <= 2.0))
        throw std::invalid_argument("ReconConfig: relaxation must be in (0, 2]");
}

void ResidualLog::write_csv(const std::string& path, std::uint64_t seed,
                            const std::string& config_hash) const {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("ResidualLog: cannot open for write: " + path);
    os << "iteration,residual_norm,rmse_vs_truth,seed,config_hash\n";
    os << std::setprecision(17);
    for (const auto& row : rows) {
        os << row.iteration << ',' << row.residual_norm << ',';
        if (row.rmse_vs_truth) os << *row.rmse_vs_truth;
        os << ',' << seed << ',' << config_hash << '\n';
    }
    if (!os) throw std::runtime_error("ResidualLog: write failed: " + path);
}

Image reconstruct_fbp(const Sinogram& sino, const ReconConfig& cfg) {
    check_input(sino);
    const Geometry& g = sino.geometry;
    if (g.n_views < 2) throw std::invalid_argument("reconstruct_fbp: need at least 2 views");

    const int nd = g.n_detectors;
    const std::size_t m = next_pow2(std::size_t(nd) * 2);
    const double ds = g.detector_spacing;

    // Frequency-domain ramp (cycles per unit), optionally rolled off by Hann.
    std::vector<double> gain(m);
    for (std::size_t k = 0; k < m; ++k) {
        const std::size_t folded = std::min(k, m - k);
        double v = double(folded) / (double(m) * ds);
        if (cfg.filter == FbpFilter::Hann)
            v *= 0.5 * (1.0 + std::cos(2.0 * std::numbers::pi * double(folded) / double(m)));
        gain[k] = v;
    }

    std::vector<double> filtered(std::size_t(g.n_views) * std::size_t(nd));
    {
        fftw_complex* buf = fftw_alloc_complex(m);
        fftw_plan fwd = fftw_plan_dft_1d(int(m), buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
        fftw_plan bwd = fftw_plan_dft_1d(int(m), buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);
        for (int v = 0; v < g.n_views; ++v) {
            for (std::size_t k = 0; k < m; ++k) {
                buf[k][0] = k < std::size_t(nd) ? double(sino.at(v, int(k))) : 0.0;
                buf[k][1] = 0.0;
            }
            fftw_execute(fwd);
            for (std::size_t k = 0; k < m; ++k) {
                buf[k][0] *= gain[k];
                buf[k][1] *= gain[k];
            }
            fftw_execute(bwd);
            double* out = filtered.data() + std::size_t(v) * std::size_t(nd);
            for (int b = 0; b < nd; ++b) out[b] = buf[b][0] / double(m);
        }
        fftw_destroy_plan(fwd);
        fftw_destroy_plan(bwd);
        fftw_free(buf);
    }

    const auto ct = detail::view_cosines(g);
    const auto st = detail::view_sines(g);
    const int n = g.image_size;
    const double c = 0.5 * (n - 1);
    const double bin_center = 0.5 * (nd - 1);
    const double scale = std::numbers::pi / g.n_views;

    Image img(n, n);
    parallel_for(std::size_t(n), [&](std::size_t row) {
        const double y = double(row) - c;
        for (int j = 0; j < n; ++j) {
            const double x = j - c;
            double acc = 0.0;
            for (int v = 0; v < g.n_views; ++v) {
                const double u =
                    (x * ct[std::size_t(v)] + y * st[std::size_t(v)]) / ds + bin_center;
                if (u < 0.0 || u > double(nd - 1)) continue;
                const double fl = std::floor(u);
                const int b0 = int(fl);
                const double f = u - fl;
                const double* q = filtered.data() + std::size_t(v) * std::size_t(nd);
                const double hi = b0 + 1 < nd ? q[b0 + 1] : 0.0;
                acc += (1.0 - f) * q[b0] + f * hi;
            }
            img.at(int(row), j) = float(scale * acc);
        }
    });

    if (cfg.nonneg_clamp)
        for (float& v : img.data)
            if (v < 0.0f) v = 0.0f;
    return img;
}

Image reconstruct_sirt(const Sinogram& sino, const ReconConfig& cfg, ResidualLog* log,
                       const Image* truth) {
    check_input(sino);
    cfg.validate();
    const Geometry& g = sino.geometry;
    const std::size_t npix = std::size_t(g.image_size) * std::size_t(g.image_size);
    const std::size_t nray = sino.data.size();

    std::vector<double> b(sino.data.begin(), sino.data.end());

    // Inverse row/column sums of the system matrix; rays that miss the image
    // and pixels no ray touches get weight zero.
    std::vector<double> ones_img(npix, 1.0), row_sum(nray), ones_sino(nray, 1.0),
        col_sum(npix);
    forward_project_into(g, ones_img.data(), row_sum.data());
    backproject_into(g, ones_sino.data(), col_sum.data());
    std::vector<double> row_w(nray), col_w(npix);
    for (std::size_t i = 0; i < nray; ++i) row_w[i] = row_sum[i] > 0.0 ? 1.0 / row_sum[i] : 0.0;
    for (std::size_t i = 0; i < npix; ++i) col_w[i] = col_sum[i] > 0.0 ? 1.0 / col_sum[i] : 0.0;

    std::vector<double> x(npix, 0.0), r(nray), weighted(nray), grad(npix);

    forward_project_into(g, x.data(), r.data());
    for (std::size_t i = 0; i < nray; ++i) r[i] = b[i] - r[i];
    log_row(log, truth, 0, l2_norm(r), x);

    for (int k = 1; k <= cfg.iterations; ++k) {
        for (std::size_t i = 0; i < nray; ++i) weighted[i] = row_w[i] * r[i];
        backproject_into(g, weighted.data(), grad.data());
        for (std::size_t i = 0; i < npix; ++i) x[i] += cfg.relaxation * col_w[i] * grad[i];
        if (cfg.nonneg_clamp) clamp_nonneg(x);

        forward_project_into(g, x.data(), r.data());
        for (std::size_t i = 0; i < nray; ++i) r[i] = b[i] - r[i];
        log_row(log, truth, k, l2_norm(r), x);
    }
    return to_image(x, g.image_size);
}

Image reconstruct_cgls(const Sinogram& sino, const ReconConfig& cfg, ResidualLog* log,
                       const Image* truth, bool* converged) {
    check_input(sino);
    cfg.validate();
    if (converged) *converged = false;
    const Geometry& g = sino.geometry;
    const std::size_t npix = std::size_t(g.image_size) * std::size_t(g.image_size);
    const std::size_t nray = sino.data.size();

    std::vector<double> b(sino.data.begin(), sino.data.end());
    std::vector<double> x(npix, 0.0), r = b, s(npix), p(npix), q(nray);

    backproject_into(g, r.data(), s.data());
    p = s;
    double gamma = 0.0;
    for (double v : s) gamma += v * v;

    log_row(log, truth, 0, l2_norm(r), x);

    if (gamma == 0.0 && converged) *converged = true;
    for (int k = 1; k <= cfg.iterations && gamma > 0.0; ++k) {
        forward_project_into(g, p.data(), q.data());
        double qq = 0.0;
        for (double v : q) qq += v * v;
        if (qq == 0.0) {
            if (converged) *converged = true;
            break;
        }
        const double alpha = gamma / qq;
        for (std::size_t i = 0; i < npix; ++i) x[i] += alpha * p[i];
        for (std::size_t i = 0; i < nray; ++i) r[i] -= alpha * q[i];
        log_row(log, truth, k, l2_norm(r), x);

        backproject_into(g, r.data(), s.data());
        double gamma_next = 0.0;
        for (double v : s) gamma_next += v * v;
        const double beta = gamma_next / gamma;
        gamma = gamma_next;
        if (gamma == 0.0 && converged) *converged = true;
        for (std::size_t i = 0; i < npix; ++i) p[i] = s[i] + beta * p[i];
    }

    // Negative values are only clipped on the returned image; clamping inside
    // the recurrence would break conjugacy.
    if (cfg.nonneg_clamp) clamp_nonneg(x);
    return to_image(x, g.image_size);
}

Image reconstruct(const Sinogram& sino, const ReconConfig& cfg, ResidualLog* log,
                  const Image* truth) {
    switch (cfg.algorithm) {
    case ReconAlgorithm::FBP: return reconstruct_fbp(sino, cfg);
    case ReconAlgorithm::SIRT: return reconstruct_sirt(sino, cfg, log, truth);
    case ReconAlgorithm::CGLS: return reconstruct_cgls(sino, cfg, log, truth, nullptr);
    }
    throw std::invalid_argument("reconstruct: unknown algorithm");
}

} // namespace fluxct
