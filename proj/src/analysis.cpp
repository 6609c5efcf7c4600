#include "pxgen/analysis.hpp"

#include "pxgen/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace pxgen {

std::string_view to_string(ThresholdMode m) {
    return m == ThresholdMode::AvgMax ? "avg_max" : "percentile";
}

ThresholdMode parse_threshold_mode(std::string_view s) {
    if (s == "avg_max") {
        return ThresholdMode::AvgMax;
    }
    if (s == "percentile") {
        return ThresholdMode::Percentile;
    }
    throw InvalidArgument("unknown threshold mode '" + std::string(s) + "'");
}

void CalibrationConfig::validate() const {
    if (samples_per_iteration < 2) {
        throw InvalidArgument("calibrate: need at least 2 samples per iteration");
    }
    if (iterations < 1) {
        throw InvalidArgument("calibrate: need at least 1 iteration");
    }
    if (mode == ThresholdMode::Percentile && !(percentile > 0.0 && percentile <= 100.0)) {
        throw InvalidArgument("calibrate: percentile must lie in (0, 100]");
    }
}

double aggregate_cutoff(std::span<const std::vector<double>> per_iteration, ThresholdMode mode,
                        double p) {
    if (per_iteration.empty()) {
        throw InsufficientData("aggregate_cutoff: no iterations");
    }
    double sum = 0.0;
    for (const auto& values : per_iteration) {
        if (values.empty()) {
            throw InsufficientData("aggregate_cutoff: empty iteration");
        }
        sum += mode == ThresholdMode::AvgMax ? *std::max_element(values.begin(), values.end())
                                             : percentile(values, p);
    }
    return sum / static_cast<double>(per_iteration.size());
}

Thresholds calibrate(const GenerativeModel& model, const CalibrationConfig& config) {
    config.validate();
    std::vector<std::vector<double>> intrinsic(static_cast<std::size_t>(config.iterations));
    std::vector<std::vector<double>> extrinsic(static_cast<std::size_t>(config.iterations));
    for (int r = 0; r < config.iterations; ++r) {
        const auto generated = model.sample(static_cast<std::size_t>(config.samples_per_iteration),
                                            config.seed ^ static_cast<std::uint64_t>(r));
        const auto scores = score_anchors(model, generated, config.extrinsic_kind, config.feature_map);
        for (const auto& s : scores) {
            intrinsic[static_cast<std::size_t>(r)].push_back(s.intrinsic);
            extrinsic[static_cast<std::size_t>(r)].push_back(s.extrinsic);
        }
    }
    Thresholds t;
    t.mode = config.mode;
    t.percentile = config.mode == ThresholdMode::Percentile ? config.percentile : 100.0;
    t.iterations = config.iterations;
    t.samples_per_iteration = config.samples_per_iteration;
    t.seed = config.seed;
    t.extrinsic_kind = config.extrinsic_kind;
    t.intrinsic_cutoff = aggregate_cutoff(intrinsic, config.mode, t.percentile);
    t.extrinsic_cutoff = aggregate_cutoff(extrinsic, config.mode, t.percentile);
    return t;
}

Thresholds calibrate(const VaeParams& params, const CalibrationConfig& config) {
    return calibrate(VaeModel(params), config);
}

const std::vector<std::size_t>& QuadrantPartition::group(Quadrant q) const {
    switch (q) {
        case Quadrant::HIHE: return hihe;
        case Quadrant::HILE: return hile;
        case Quadrant::LIHE: return lihe;
        case Quadrant::LILE: return lile;
        case Quadrant::UNSET: break;
    }
    throw InvalidArgument("QuadrantPartition: UNSET is not a group");
}

std::vector<std::size_t> QuadrantPartition::others() const {
    std::vector<std::size_t> out;
    out.insert(out.end(), lile.begin(), lile.end());
    out.insert(out.end(), lihe.begin(), lihe.end());
    out.insert(out.end(), hile.begin(), hile.end());
    std::sort(out.begin(), out.end());
    return out;
}

Quadrant quadrant_of(const AnchorScore& s, const Thresholds& t) {
    const bool high_intrinsic = s.intrinsic <= t.intrinsic_cutoff;
    const bool high_extrinsic = s.extrinsic <= t.extrinsic_cutoff;
    if (high_intrinsic) {
        return high_extrinsic ? Quadrant::HIHE : Quadrant::HILE;
    }
    return high_extrinsic ? Quadrant::LIHE : Quadrant::LILE;
}

QuadrantPartition classify(std::span<AnchorScore> scores, const Thresholds& t) {
    if (scores.empty()) {
        throw InsufficientData("classify: no scores");
    }
    if (!std::isfinite(t.intrinsic_cutoff) || !std::isfinite(t.extrinsic_cutoff)) {
        throw InvalidArgument("classify: non-finite cutoffs");
    }
    QuadrantPartition p;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        scores[i].quadrant = quadrant_of(scores[i], t);
        switch (scores[i].quadrant) {
            case Quadrant::HIHE: p.hihe.push_back(i); break;
            case Quadrant::HILE: p.hile.push_back(i); break;
            case Quadrant::LIHE: p.lihe.push_back(i); break;
            case Quadrant::LILE: p.lile.push_back(i); break;
            case Quadrant::UNSET: break;
        }
    }
    return p;
}

std::size_t fraction_count(double fraction, std::size_t n) {
    if (!(fraction > 0.0 && fraction <= 1.0)) {
        throw InvalidArgument("subset fraction must lie in (0, 1]");
    }
    auto k = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9));
    return std::clamp<std::size_t>(k, 1, n);
}

namespace {

template <typename RankKey, typename OrderKey>
std::vector<std::size_t> select_then_sort(std::span<const AnchorScore> scores, double fraction,
                                          RankKey rank_key, OrderKey order_key) {
    if (scores.empty()) {
        throw InsufficientData("subset: no scores");
    }
    const std::size_t keep = fraction_count(fraction, scores.size());
    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return rank_key(scores[a]) < rank_key(scores[b]);
    });
    idx.resize(keep);
    std::sort(idx.begin(), idx.end());
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return order_key(scores[a]) < order_key(scores[b]);
    });
    return idx;
}

double intrinsic_of(const AnchorScore& s) { return s.intrinsic; }
double extrinsic_of(const AnchorScore& s) { return s.extrinsic; }

}  // namespace

std::vector<std::size_t> delusion_subset(std::span<const AnchorScore> scores, double fraction) {
    return select_then_sort(scores, fraction, intrinsic_of, extrinsic_of);
}

std::vector<std::size_t> conception_subset(std::span<const AnchorScore> scores, double fraction) {
    return select_then_sort(scores, fraction, extrinsic_of, intrinsic_of);
}

}  // namespace pxgen
