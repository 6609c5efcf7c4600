#include "pxgen/criteria.hpp"

#include "pxgen/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace pxgen {

std::string_view to_string(Quadrant q) {
    switch (q) {
        case Quadrant::HIHE: return "HIHE";
        case Quadrant::HILE: return "HILE";
        case Quadrant::LIHE: return "LIHE";
        case Quadrant::LILE: return "LILE";
        case Quadrant::UNSET: return "UNSET";
    }
    return "UNSET";
}

Quadrant parse_quadrant(std::string_view s) {
    for (auto q : {Quadrant::HIHE, Quadrant::HILE, Quadrant::LIHE, Quadrant::LILE, Quadrant::UNSET}) {
        if (s == to_string(q)) {
            return q;
        }
    }
    throw InvalidArgument("unknown quadrant '" + std::string(s) + "'");
}

std::string_view to_string(ExtrinsicKind k) {
    return k == ExtrinsicKind::Mse ? "mse" : "frechet_per_anchor";
}

ExtrinsicKind parse_extrinsic_kind(std::string_view s) {
    if (s == "mse") {
        return ExtrinsicKind::Mse;
    }
    if (s == "frechet_per_anchor" || s == "frechet") {
        return ExtrinsicKind::FrechetPerAnchor;
    }
    throw InvalidArgument("unknown extrinsic criterion '" + std::string(s) + "'");
}

std::size_t FeatureMap::output_dim() const {
    if (width <= 0 || height <= 0 || window <= 0) {
        throw InvalidArgument("FeatureMap: width, height and window must be positive");
    }
    const auto cols = static_cast<std::size_t>((width + window - 1) / window);
    const auto rows = static_cast<std::size_t>((height + window - 1) / window);
    return cols * rows;
}

double intrinsic_kld(const LatentGaussian& g) {
    if (g.mean.size() != g.log_variance.size()) {
        throw InvalidArgument("intrinsic_kld: mean and log-variance differ in dimension");
    }
    double sum = 0.0;
    for (std::size_t j = 0; j < g.mean.size(); ++j) {
        const double m = g.mean[j];
        const double lv = g.log_variance[j];
        if (!std::isfinite(m) || !std::isfinite(lv)) {
            throw InvalidArgument("intrinsic_kld: non-finite latent statistics");
        }
        sum += 1.0 + lv - m * m - std::exp(lv);
    }
    double kld = -0.5 * sum;
    if (kld < 0.0 && kld >= -1e-12) {
        kld = 0.0;
    }
    return kld;
}

double extrinsic_mse(const Image& anchor, const Image& reconstruction) {
    if (anchor.width != reconstruction.width || anchor.height != reconstruction.height ||
        anchor.size() != reconstruction.size() || anchor.size() == 0) {
        throw InvalidArgument("extrinsic_mse: images differ in size");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < anchor.size(); ++i) {
        const double d = anchor.pixels[i] - reconstruction.pixels[i];
        s += d * d;
    }
    return s / static_cast<double>(anchor.size());
}

Vector pooled_features(const Image& x, const FeatureMap& fm) {
    const std::size_t dim = fm.output_dim();
    if (x.width != fm.width || x.height != fm.height || x.size() != x.pixels.size() ||
        x.pixels.size() != static_cast<std::size_t>(fm.width) * static_cast<std::size_t>(fm.height)) {
        throw InvalidArgument("pooled_features: image is " + std::to_string(x.width) + "x" +
                              std::to_string(x.height) + ", feature map expects " +
                              std::to_string(fm.width) + "x" + std::to_string(fm.height));
    }
    const int cols = (fm.width + fm.window - 1) / fm.window;
    Vector out(dim, 0.0);
    for (int by = 0; by * fm.window < fm.height; ++by) {
        for (int bx = 0; bx < cols; ++bx) {
            const int y1 = std::min(fm.height, (by + 1) * fm.window);
            const int x1 = std::min(fm.width, (bx + 1) * fm.window);
            double s = 0.0;
            int count = 0;
            for (int y = by * fm.window; y < y1; ++y) {
                for (int xx = bx * fm.window; xx < x1; ++xx) {
                    s += x.at(xx, y);
                    ++count;
                }
            }
            out[static_cast<std::size_t>(by * cols + bx)] = s / count;
        }
    }
    return out;
}

namespace {

Matrix with_ridge(const Matrix& c, double regularizer) {
    Matrix out = c;
    for (std::size_t i = 0; i < out.rows(); ++i) {
        out(i, i) += regularizer;
    }
    return out;
}

}  // namespace

double frechet_distance(const MomentPair& a, const MomentPair& b, double regularizer) {
    const std::size_t d = a.mean.size();
    if (b.mean.size() != d || a.covariance.rows() != d || a.covariance.cols() != d ||
        b.covariance.rows() != d || b.covariance.cols() != d) {
        throw InvalidArgument("frechet_distance: moment dimensions differ");
    }
    if (!(regularizer >= 0.0)) {
        throw InvalidArgument("frechet_distance: regularizer must be non-negative");
    }
    double mean_term = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        const double diff = a.mean[i] - b.mean[i];
        mean_term += diff * diff;
    }
    const Matrix ca = with_ridge(a.covariance, regularizer);
    const Matrix cb = with_ridge(b.covariance, regularizer);

    const Matrix sa = spd_sqrt(ca, 0.0);
    Matrix inner = sa * cb * sa;
    symmetrize(inner);
    const double cross = spd_sqrt(inner, 0.0).trace();

    double fd = mean_term + ca.trace() + cb.trace() - 2.0 * cross;
    if (fd < 0.0 && fd >= -1e-8) {
        fd = 0.0;
    }
    return fd;
}

double frechet_between_sets(std::span<const Image> a, std::span<const Image> b,
                            const FeatureMap& fm, double regularizer) {
    if (a.size() < 2 || b.size() < 2) {
        throw InsufficientData("frechet_between_sets: each set needs at least 2 images");
    }
    auto features = [&](std::span<const Image> set) {
        std::vector<Vector> out;
        out.reserve(set.size());
        for (const auto& img : set) {
            out.push_back(pooled_features(img, fm));
        }
        return out;
    };
    const auto fa = features(a);
    const auto fb = features(b);
    return frechet_distance(mean_cov(fa), mean_cov(fb), regularizer);
}

AnchorScore score_anchor(const GenerativeModel& model, const Image& anchor, std::size_t id,
                         ExtrinsicKind kind, const FeatureMap& fm) {
    const LatentGaussian g = model.encode(anchor);
    const Image recon = model.decode(g.mean);
    AnchorScore s;
    s.id = id;
    s.intrinsic = intrinsic_kld(g);
    if (kind == ExtrinsicKind::Mse) {
        s.extrinsic = extrinsic_mse(anchor, recon);
    } else {
        // Single images as point masses: zero covariances leave only the
        // squared distance between feature vectors.
        const Vector fa = pooled_features(anchor, fm);
        const Vector fr = pooled_features(recon, fm);
        const double dist = euclidean_distance(fa, fr);
        s.extrinsic = dist * dist;
    }
    s.anchor_value = s.intrinsic + s.extrinsic;
    return s;
}

std::vector<AnchorScore> score_anchors(const GenerativeModel& model,
                                       std::span<const Image> anchors, ExtrinsicKind kind,
                                       const FeatureMap& fm) {
    if (anchors.empty()) {
        throw InsufficientData("score_anchors: empty anchor set");
    }
    std::vector<AnchorScore> out;
    out.reserve(anchors.size());
    for (std::size_t i = 0; i < anchors.size(); ++i) {
        out.push_back(score_anchor(model, anchors[i], i, kind, fm));
    }
    return out;
}

std::vector<AnchorScore> score_anchors(const VaeParams& params, std::span<const Image> anchors,
                                       ExtrinsicKind kind, const FeatureMap& fm) {
    return score_anchors(VaeModel(params), anchors, kind, fm);
}

}  // namespace pxgen
