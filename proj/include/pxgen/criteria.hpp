#pragma once

#include "pxgen/model.hpp"
#include "pxgen/numerics.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pxgen {

enum class Quadrant { HIHE, HILE, LIHE, LILE, UNSET };

std::string_view to_string(Quadrant q);
Quadrant parse_quadrant(std::string_view s);

// Per-anchor feature values. Lower is closer to the model on both axes.
struct AnchorScore {
    std::size_t id = 0;
    double intrinsic = 0.0;     // KLD to N(0, I), nats
    double extrinsic = 0.0;     // MSE or per-anchor Fréchet distance
    double anchor_value = 0.0;  // intrinsic + extrinsic
    Quadrant quadrant = Quadrant::UNSET;

    friend bool operator==(const AnchorScore&, const AnchorScore&) = default;
};

enum class ExtrinsicKind { Mse, FrechetPerAnchor };

std::string_view to_string(ExtrinsicKind k);
ExtrinsicKind parse_extrinsic_kind(std::string_view s);

// Non-overlapping average pooling over an image of a fixed size. Stands in for
// a learned embedding inside the Fréchet distance.
struct FeatureMap {
    std::string name = "avgpool";
    int width = 28;
    int height = 28;
    int window = 4;

    std::size_t output_dim() const;
};

double intrinsic_kld(const LatentGaussian& g);
double extrinsic_mse(const Image& anchor, const Image& reconstruction);

Vector pooled_features(const Image& x, const FeatureMap& fm);

// ‖μa − μb‖² + Tr(Ca + Cb − 2(Ca·Cb)^½) with regularizer·I added to both
// covariances. The cross term uses Tr((Sa·Cb·Sa)^½), Sa = Ca^½, which has the
// same eigenvalues as (Ca·Cb)^½ but stays symmetric.
double frechet_distance(const MomentPair& a, const MomentPair& b, double regularizer = 0.0);

double frechet_between_sets(std::span<const Image> a, std::span<const Image> b,
                            const FeatureMap& fm, double regularizer = 1e-6);

AnchorScore score_anchor(const GenerativeModel& model, const Image& anchor, std::size_t id,
                         ExtrinsicKind kind, const FeatureMap& fm = {});

std::vector<AnchorScore> score_anchors(const GenerativeModel& model,
                                       std::span<const Image> anchors, ExtrinsicKind kind,
                                       const FeatureMap& fm = {});

std::vector<AnchorScore> score_anchors(const VaeParams& params, std::span<const Image> anchors,
                                       ExtrinsicKind kind, const FeatureMap& fm = {});

}  // namespace pxgen
