#pragma once

#include "pxgen/criteria.hpp"
#include "pxgen/model.hpp"
#include "pxgen/numerics.hpp"
#include "pxgen/rng.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace pxtest {

using namespace pxgen;

inline Matrix random_matrix(Rng& rng, std::size_t r, std::size_t c) {
    Matrix m(r, c);
    for (double& v : m.values()) v = rng.normal();
    return m;
}

inline Matrix random_symmetric(Rng& rng, std::size_t n) {
    Matrix a = random_matrix(rng, n, n);
    return a + a.transposed();
}

// A·Aᵀ/n + 0.1·I
inline Matrix random_spd(Rng& rng, std::size_t n) {
    const Matrix a = random_matrix(rng, n, n);
    Matrix s = a * a.transposed();
    for (double& v : s.values()) v /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) s(i, i) += 0.1;
    symmetrize(s);
    return s;
}

inline MomentPair random_moments(Rng& rng, std::size_t d) {
    MomentPair m;
    for (std::size_t i = 0; i < d; ++i) m.mean.push_back(rng.normal());
    m.covariance = random_spd(rng, d);
    return m;
}

inline Image random_image(Rng& rng, int w, int h, double lo = 0.0, double hi = 1.0) {
    std::vector<double> px(static_cast<std::size_t>(w) * h);
    for (double& p : px) p = rng.uniform(lo, hi);
    return Image(w, h, std::move(px));
}

inline std::vector<Image> random_images(Rng& rng, std::size_t n, int w, int h) {
    std::vector<Image> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(random_image(rng, w, h));
    return out;
}

inline VaeParams random_vae(Rng& rng, int w, int h, std::size_t latent,
                            std::vector<std::size_t> hidden, double scale = 0.5) {
    VaeParams p = zero_vae(w, h, latent, std::move(hidden));
    Vector flat(p.parameter_count());
    for (double& v : flat) v = scale * rng.normal();
    p.assign_flat(flat);
    return p;
}

// 2 pixels → 2 hidden → 1 latent, decoder 1 → 2 → 2. Reference values for
// this network come from tests/oracles/tiny_vae.py.
inline VaeParams hand_vae_a() {
    VaeParams p = zero_vae(2, 1, 1, {2});
    p.encoder[0] = {Matrix{{0.5, -0.25}, {0.3, 0.8}}, {0.1, -0.2}};
    p.encoder[1] = {Matrix{{1.0, -0.5}, {0.25, 0.75}}, {0.05, -0.1}};
    p.decoder[0] = {Matrix{{0.6}, {-0.4}}, {0.2, 0.1}};
    p.decoder[1] = {Matrix{{1.5, -1.0}, {-0.7, 0.9}}, {0.0, 0.3}};
    return p;
}

// Layer i: 0.5·W + 0.1·(i+1), bias negated.
inline VaeParams hand_vae_b() {
    VaeParams p = hand_vae_a();
    int i = 0;
    for (auto* layers : {&p.encoder, &p.decoder}) {
        for (auto& l : *layers) {
            ++i;
            for (double& v : l.weights.values()) v = 0.5 * v + 0.1 * i;
            for (double& v : l.bias) v = -v;
        }
    }
    return p;
}

// Max relative error of gradient() against central differences of
// elbo_loss().total, denominator guarded at 1e-8.
inline double max_fd_rel_error(const VaeParams& params, const Image& x, const Vector& noise,
                               double h = 1e-5) {
    const Vector analytic = gradient(params, x, noise).flatten();
    Vector flat = params.flatten();
    VaeParams probe = params;
    double worst = 0.0;
    for (std::size_t i = 0; i < flat.size(); ++i) {
        const double keep = flat[i];
        flat[i] = keep + h;
        probe.assign_flat(flat);
        const double up = elbo_loss(probe, x, noise).total;
        flat[i] = keep - h;
        probe.assign_flat(flat);
        const double down = elbo_loss(probe, x, noise).total;
        flat[i] = keep;
        const double numeric = (up - down) / (2 * h);
        const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-8});
        worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
    }
    return worst;
}

inline Matrix naive_covariance(const std::vector<Vector>& xs, Vector& mean_out) {
    const std::size_t n = xs.size();
    const std::size_t d = xs[0].size();
    mean_out.assign(d, 0.0);
    for (const auto& x : xs)
        for (std::size_t j = 0; j < d; ++j) mean_out[j] += x[j] / static_cast<double>(n);
    Matrix c(d, d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            double s = 0.0;
            for (const auto& x : xs) s += (x[i] - mean_out[i]) * (x[j] - mean_out[j]);
            c(i, j) = s / static_cast<double>(n - 1);
        }
    return c;
}

}  // namespace pxtest
