#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "pxgen/criteria.hpp"
#include "pxgen/errors.hpp"
#include "support.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace pxgen;
using doctest::Approx;

namespace {

// Fréchet distance through the non-symmetric product Ca·Cb and a general
// eigensolver: Tr((Ca·Cb)^½) = Σ sqrt(λ).
double eigen_frechet(const MomentPair& a, const MomentPair& b, double reg) {
    const auto d = static_cast<Eigen::Index>(a.mean.size());
    Eigen::MatrixXd ca(d, d), cb(d, d);
    double mean_term = 0;
    for (Eigen::Index i = 0; i < d; ++i) {
        mean_term += (a.mean[i] - b.mean[i]) * (a.mean[i] - b.mean[i]);
        for (Eigen::Index j = 0; j < d; ++j) {
            ca(i, j) = a.covariance(i, j) + (i == j ? reg : 0.0);
            cb(i, j) = b.covariance(i, j) + (i == j ? reg : 0.0);
        }
    }
    Eigen::EigenSolver<Eigen::MatrixXd> es(ca * cb);
    double cross = 0;
    for (Eigen::Index i = 0; i < d; ++i) cross += std::sqrt(std::max(0.0, es.eigenvalues()[i].real()));
    return mean_term + ca.trace() + cb.trace() - 2 * cross;
}

Vector loop_pool(const Image& x, int window) {
    Vector out;
    for (int by = 0; by < x.height; by += window)
        for (int bx = 0; bx < x.width; bx += window) {
            double s = 0;
            int n = 0;
            for (int y = by; y < std::min(x.height, by + window); ++y)
                for (int xx = bx; xx < std::min(x.width, bx + window); ++xx) {
                    s += x.at(xx, y);
                    ++n;
                }
            out.push_back(s / n);
        }
    return out;
}

// Encoder mean = pixels, unit posterior; decoder copies z back.
class IdentityModel final : public GenerativeModel {
public:
    IdentityModel(int w, int h) : w_(w), h_(h) {}
    std::size_t latent_dim() const override { return static_cast<std::size_t>(w_ * h_); }
    LatentGaussian encode(const Image& x) const override {
        return {x.pixels, Vector(x.size(), 0.0)};
    }
    Image decode(std::span<const double> z) const override {
        return Image(w_, h_, Vector(z.begin(), z.end()));
    }

private:
    int w_, h_;
};

}  // namespace

TEST_CASE("intrinsic_kld closed forms") {
    CHECK(intrinsic_kld({Vector(5, 0.0), Vector(5, 0.0)}) == 0.0);
    CHECK(std::abs(intrinsic_kld({{1.0}, {0.0}}) - 0.5) <= 1e-10);
    CHECK(std::abs(intrinsic_kld({{0.0}, {1.0}}) - (std::exp(1.0) - 2) / 2) <= 1e-10);
    Rng rng(1);
    for (int i = 0; i < 200; ++i) {
        CHECK(intrinsic_kld({rng.normals(4), rng.normals(4)}) >= 0.0);
    }
    CHECK_THROWS_AS(intrinsic_kld({{0.0}, {0.0, 1.0}}), InvalidArgument);
}

TEST_CASE("extrinsic_mse") {
    Rng rng(2);
    const Image a = pxtest::random_image(rng, 5, 4);
    const Image b = pxtest::random_image(rng, 5, 4);
    CHECK(extrinsic_mse(a, a) == 0.0);
    CHECK(extrinsic_mse(Image(2, 2, Vector(4, 0.0)), Image(2, 2, Vector(4, 1.0))) == 1.0);
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a.pixels[i] - b.pixels[i]) * (a.pixels[i] - b.pixels[i]);
    CHECK(std::abs(extrinsic_mse(a, b) - s / 20) <= 1e-12);
    CHECK(extrinsic_mse(a, b) == extrinsic_mse(b, a));
    CHECK_THROWS_AS(extrinsic_mse(a, Image(4, 5, a.pixels)), InvalidArgument);
}

TEST_CASE("pooled_features") {
    const FeatureMap fm{"avgpool", 4, 4, 2};
    CHECK(fm.output_dim() == 4);
    for (double v : pooled_features(Image(4, 4, Vector(16, 0.3)), fm)) CHECK(v == Approx(0.3));

    Vector px(16);
    std::iota(px.begin(), px.end(), 0.0);
    for (double& p : px) p /= 15.0;
    const Image x(4, 4, px);
    const Vector f = pooled_features(x, fm);
    // blocks {0,1,4,5}, {2,3,6,7}, {8,9,12,13}, {10,11,14,15}
    CHECK(f[0] == Approx(2.5 / 15));
    CHECK(f[1] == Approx(4.5 / 15));
    CHECK(f[2] == Approx(10.5 / 15));
    CHECK(f[3] == Approx(12.5 / 15));

    CHECK(pooled_features(x, {"avgpool", 4, 4, 1}) == x.pixels);
    CHECK(FeatureMap{}.output_dim() == 49);

    Rng rng(3);
    const Image odd = pxtest::random_image(rng, 7, 5);
    const Vector g = pooled_features(odd, {"avgpool", 7, 5, 3});
    const Vector oracle = loop_pool(odd, 3);
    REQUIRE(g.size() == oracle.size());
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(g[i] == Approx(oracle[i]).epsilon(1e-14));
    CHECK_THROWS_AS(pooled_features(odd, fm), InvalidArgument);
}

TEST_CASE("frechet_distance closed forms") {
    const MomentPair n01{{0.0}, Matrix{{1.0}}};
    CHECK(frechet_distance(n01, n01) == 0.0);
    CHECK(std::abs(frechet_distance(n01, {{1.0}, Matrix{{1.0}}}) - 1.0) <= 1e-10);
    CHECK(std::abs(frechet_distance(n01, {{0.0}, Matrix{{4.0}}}) - 1.0) <= 1e-10);
    CHECK_THROWS_AS(frechet_distance(n01, {{0.0, 0.0}, Matrix::identity(2)}), InvalidArgument);
    CHECK_THROWS_AS(frechet_distance(n01, n01, -1.0), InvalidArgument);
}

TEST_CASE("frechet_distance matches a general-eigensolver oracle") {
    Rng rng(4);
    for (int t = 0; t < 50; ++t) {
        const std::size_t d = 1 + rng.below(12);
        const auto a = pxtest::random_moments(rng, d);
        const auto b = pxtest::random_moments(rng, d);
        const double fd = frechet_distance(a, b, 1e-6);
        CHECK(fd == Approx(eigen_frechet(a, b, 1e-6)).epsilon(1e-8));
        CHECK(std::abs(fd - frechet_distance(b, a, 1e-6)) <= 1e-8);
        CHECK(fd >= 0.0);
        CHECK(std::abs(frechet_distance(a, a)) <= 1e-8);
    }
}

TEST_CASE("frechet_between_sets") {
    Rng rng(5);
    const FeatureMap fm{"avgpool", 8, 8, 2};
    const auto a = pxtest::random_images(rng, 50, 8, 8);
    auto b = pxtest::random_images(rng, 50, 8, 8);
    for (auto& im : b)
        for (double& p : im.pixels) p = p * p;

    CHECK(std::abs(frechet_between_sets(a, a, fm)) <= 1e-8);

    const std::vector<Image> zeros(3, Image(8, 8, Vector(64, 0.0)));
    const std::vector<Image> ones(4, Image(8, 8, Vector(64, 1.0)));
    CHECK(std::abs(frechet_between_sets(zeros, ones, fm) - 16.0) <= 1e-8);

    // compositional oracle: loop pooling, double-loop covariance, Eigen trace term
    auto moments = [&](const std::vector<Image>& set) {
        std::vector<Vector> f;
        for (const auto& im : set) f.push_back(loop_pool(im, 2));
        MomentPair m;
        m.covariance = pxtest::naive_covariance(f, m.mean);
        return m;
    };
    const double oracle = eigen_frechet(moments(a), moments(b), 1e-6);
    CHECK(std::abs(frechet_between_sets(a, b, fm) - oracle) <= 1e-6);

    auto shuffled = b;
    std::reverse(shuffled.begin(), shuffled.end());
    std::swap(shuffled[3], shuffled[17]);
    CHECK(frechet_between_sets(a, shuffled, fm) == Approx(frechet_between_sets(a, b, fm)).epsilon(1e-9));

    CHECK_THROWS_AS(frechet_between_sets(std::vector<Image>{a[0]}, b, fm), InsufficientData);
}

TEST_CASE("score_anchors") {
    const IdentityModel ident(3, 3);
    Rng rng(6);
    const auto anchors = pxtest::random_images(rng, 10, 3, 3);
    for (const auto& s : score_anchors(ident, anchors, ExtrinsicKind::Mse)) {
        CHECK(s.extrinsic == 0.0);
    }

    const VaeParams p = pxtest::random_vae(rng, 3, 3, 2, {5});
    const auto scores = score_anchors(p, anchors, ExtrinsicKind::Mse);
    REQUIRE(scores.size() == 10);
    for (std::size_t i = 0; i < anchors.size(); ++i) {
        const auto g = encode(p, anchors[i]);
        const double in = intrinsic_kld(g);
        const double ex = extrinsic_mse(anchors[i], decode(p, g.mean));
        CHECK(scores[i].id == i);
        CHECK(scores[i].intrinsic == in);
        CHECK(scores[i].extrinsic == ex);
        CHECK(scores[i].anchor_value == in + ex);
        CHECK(scores[i].quadrant == Quadrant::UNSET);
    }

    // permuting anchors permutes the records
    std::vector<Image> perm(anchors.rbegin(), anchors.rend());
    const auto ps = score_anchors(p, perm, ExtrinsicKind::Mse);
    for (std::size_t i = 0; i < anchors.size(); ++i) {
        CHECK(ps[i].intrinsic == scores[9 - i].intrinsic);
        CHECK(ps[i].extrinsic == scores[9 - i].extrinsic);
    }

    const FeatureMap fm{"avgpool", 3, 3, 2};
    const auto fs = score_anchors(p, anchors, ExtrinsicKind::FrechetPerAnchor, fm);
    for (std::size_t i = 0; i < anchors.size(); ++i) {
        const Vector fa = loop_pool(anchors[i], 2);
        const Vector fr = loop_pool(reconstruct(p, anchors[i]), 2);
        double s = 0;
        for (std::size_t j = 0; j < fa.size(); ++j) s += (fa[j] - fr[j]) * (fa[j] - fr[j]);
        CHECK(fs[i].extrinsic == Approx(s).epsilon(1e-12));
        CHECK(fs[i].intrinsic == scores[i].intrinsic);
    }
    CHECK_THROWS_AS(score_anchors(p, std::vector<Image>{}, ExtrinsicKind::Mse), InsufficientData);
}

TEST_CASE("enum names round-trip") {
    for (auto q : {Quadrant::HIHE, Quadrant::HILE, Quadrant::LIHE, Quadrant::LILE, Quadrant::UNSET}) {
        CHECK(parse_quadrant(to_string(q)) == q);
    }
    CHECK(parse_extrinsic_kind("mse") == ExtrinsicKind::Mse);
    CHECK(parse_extrinsic_kind("frechet") == ExtrinsicKind::FrechetPerAnchor);
    CHECK(parse_extrinsic_kind(to_string(ExtrinsicKind::FrechetPerAnchor)) == ExtrinsicKind::FrechetPerAnchor);
    CHECK_THROWS_AS(parse_quadrant("HXHE"), InvalidArgument);
    CHECK_THROWS_AS(parse_extrinsic_kind("fid"), InvalidArgument);
}
