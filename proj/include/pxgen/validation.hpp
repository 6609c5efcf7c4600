#pragma once

#include "pxgen/analysis.hpp"
#include "pxgen/criteria.hpp"
#include "pxgen/model.hpp"

#include <json.hpp>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pxgen {

enum class Scenario { MHihe, MOthers, MRandom, MTracin };

std::string_view to_string(Scenario s);
Scenario parse_scenario(std::string_view s);

struct RemovalStep {
    std::size_t removed = 0;
    std::vector<std::size_t> retained;  // ascending training indices
};

struct RemovalSchedule {
    Scenario scenario = Scenario::MHihe;
    std::vector<RemovalStep> steps;
    // M_OTHERS draws from HIHE only; when HIHE is smaller than the others group
    // the removal count is capped at |HIHE| and this flag is set.
    bool capped = false;
};

struct InfluenceScore {
    std::size_t index = 0;
    double score = 0.0;
};

// Indices sorted by anchor value ascending, ties by index.
std::vector<std::size_t> rank_by_anchor_value(std::span<const AnchorScore> scores);

// ceil(t·m/steps) for t = 1..steps.
std::vector<std::size_t> removal_counts(std::size_t m, int steps);

// Builds M_HIHE, M_OTHERS and M_RANDOM, plus M_TRACIN when influence scores
// are supplied. m = |LILE ∪ LIHE ∪ HILE| sets the removal volume.
std::vector<RemovalSchedule> build_schedules(const QuadrantPartition& partition,
                                             std::span<const AnchorScore> scores, int steps,
                                             std::uint64_t seed,
                                             std::span<const InfluenceScore> influence = {});

// Σ over checkpoints of lr · ⟨∇L(train_point), ∇L(target)⟩ with zero-noise ELBO
// gradients.
double tracin_influence(std::span<const Checkpoint> checkpoints, const Image& train_point,
                        const Image& target);

// Mean influence of each training point over the generated targets.
std::vector<InfluenceScore> tracin_scores(std::span<const Checkpoint> checkpoints,
                                          std::span<const Image> train_set,
                                          std::span<const Image> generated_set);

struct ValidationCell {
    Scenario scenario = Scenario::MHihe;
    int step = 1;  // 1-based
    std::uint64_t seed = 0;
    std::size_t removed = 0;
    std::size_t retained = 0;
    double distance = 0.0;  // Fréchet distance to the original model's samples

    friend bool operator==(const ValidationCell&, const ValidationCell&) = default;
};

struct ValidationReport {
    nlohmann::json config = nlohmann::json::object();
    nlohmann::json seed_details = nlohmann::json::array();
    std::vector<ValidationCell> cells;

    std::vector<Scenario> scenarios() const;
    std::vector<std::uint64_t> seeds() const;
    // Last step recorded for a seed (schedules may have fewer steps than requested).
    int final_step(std::uint64_t seed) const;
    const ValidationCell* find(Scenario s, int step, std::uint64_t seed) const;
    // Median over seeds of the distance at each seed's final step.
    double final_step_median(Scenario s) const;

    nlohmann::json to_json() const;
    static ValidationReport from_json(const nlohmann::json& j);
    // scenario,step,seed,removed,retained,distance
    std::string to_csv() const;
};

inline constexpr std::size_t kReferenceGenerationSize = 3500;
inline constexpr std::size_t kDeskGenerationSize = 500;

// Trains one original model per seed, retrains on every schedule step with the
// same seed, and records the Fréchet distance between the two generated sets
// (both sampled with the same generation seed).
ValidationReport run_validation(std::span<const Image> dataset, const TrainConfig& config,
                                std::span<const RemovalSchedule> schedules,
                                std::span<const std::uint64_t> seeds,
                                std::size_t gen_size = kDeskGenerationSize,
                                const FeatureMap& fm = {}, double regularizer = 1e-6);

struct StudyConfig {
    TrainConfig train{};
    std::vector<std::uint64_t> seeds{1, 2, 3};
    int steps = 5;
    std::size_t gen_size = kDeskGenerationSize;
    FeatureMap feature_map{};
    double regularizer = 1e-6;
    // Avg-max cutoffs leave the others group empty on the bundled synthetic
    // data, so the study calibrates with the 95th percentile instead.
    CalibrationConfig calibration{.mode = ThresholdMode::Percentile, .percentile = 95.0};
    bool include_tracin = true;
    std::size_t tracin_targets = 100;

    void validate() const;
};

// Full representative-sample study: per seed, train the original model, score
// the training set as anchors, calibrate and classify, compute TracIn scores,
// build the removal schedules and evaluate every (scenario, step) cell.
ValidationReport run_study(std::span<const Image> dataset, const StudyConfig& config);

}  // namespace pxgen
