#pragma once

#include "pxgen/criteria.hpp"
#include "pxgen/model.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace pxgen {

enum class ThresholdMode { AvgMax, Percentile };

std::string_view to_string(ThresholdMode m);
ThresholdMode parse_threshold_mode(std::string_view s);

struct Thresholds {
    double intrinsic_cutoff = 0.0;
    double extrinsic_cutoff = 0.0;
    ThresholdMode mode = ThresholdMode::AvgMax;
    double percentile = 100.0;  // used in Percentile mode
    int iterations = 10;
    int samples_per_iteration = 300;
    std::uint64_t seed = 0;
    ExtrinsicKind extrinsic_kind = ExtrinsicKind::Mse;

    friend bool operator==(const Thresholds&, const Thresholds&) = default;
};

struct CalibrationConfig {
    ThresholdMode mode = ThresholdMode::AvgMax;
    int samples_per_iteration = 300;
    int iterations = 10;
    double percentile = 95.0;
    std::uint64_t seed = 0;
    ExtrinsicKind extrinsic_kind = ExtrinsicKind::Mse;
    FeatureMap feature_map{};

    void validate() const;
};

// Per-iteration statistic (max, or nearest-rank percentile) averaged over
// iterations. Each inner span holds one iteration's scores.
double aggregate_cutoff(std::span<const std::vector<double>> per_iteration, ThresholdMode mode,
                        double percentile);

// Scores `samples_per_iteration` generated images per iteration (iteration r
// samples with seed ^ r) and aggregates intrinsic and extrinsic separately.
Thresholds calibrate(const GenerativeModel& model, const CalibrationConfig& config);
Thresholds calibrate(const VaeParams& params, const CalibrationConfig& config);

struct QuadrantPartition {
    std::vector<std::size_t> hihe;
    std::vector<std::size_t> hile;
    std::vector<std::size_t> lihe;
    std::vector<std::size_t> lile;

    const std::vector<std::size_t>& group(Quadrant q) const;
    // LILE ∪ LIHE ∪ HILE, ascending.
    std::vector<std::size_t> others() const;
};

Quadrant quadrant_of(const AnchorScore& s, const Thresholds& t);

// High affinity means value ≤ cutoff. Writes each score's quadrant.
QuadrantPartition classify(std::span<AnchorScore> scores, const Thresholds& t);

// Anchors in the lowest ceil(fraction·n) intrinsic ranks, ordered by extrinsic
// ascending ("model delusion" view).
std::vector<std::size_t> delusion_subset(std::span<const AnchorScore> scores, double fraction = 0.05);

// Anchors in the lowest ceil(fraction·n) extrinsic ranks, ordered by intrinsic
// ascending ("aligned conception" view).
std::vector<std::size_t> conception_subset(std::span<const AnchorScore> scores,
                                           double fraction = 0.05);

// ceil(fraction·n) with a guard against representation error, at least 1.
std::size_t fraction_count(double fraction, std::size_t n);

}  // namespace pxgen
