#include "pxgen/validation.hpp"

#include "pxgen/errors.hpp"
#include "pxgen/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

namespace pxgen {

std::string_view to_string(Scenario s) {
    switch (s) {
        case Scenario::MHihe: return "M_HIHE";
        case Scenario::MOthers: return "M_OTHERS";
        case Scenario::MRandom: return "M_RANDOM";
        case Scenario::MTracin: return "M_TRACIN";
    }
    return "M_HIHE";
}

Scenario parse_scenario(std::string_view s) {
    for (auto sc : {Scenario::MHihe, Scenario::MOthers, Scenario::MRandom, Scenario::MTracin}) {
        if (s == to_string(sc)) {
            return sc;
        }
    }
    throw InvalidArgument("unknown scenario '" + std::string(s) + "'");
}

std::vector<std::size_t> rank_by_anchor_value(std::span<const AnchorScore> scores) {
    if (scores.empty()) {
        throw InsufficientData("rank_by_anchor_value: no scores");
    }
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return scores[a].anchor_value < scores[b].anchor_value;
    });
    return order;
}

std::vector<std::size_t> removal_counts(std::size_t m, int steps) {
    if (steps < 1) {
        throw InvalidArgument("removal_counts: steps must be at least 1");
    }
    std::vector<std::size_t> out;
    const auto s = static_cast<std::size_t>(steps);
    for (std::size_t t = 1; t <= s; ++t) {
        out.push_back((t * m + s - 1) / s);
    }
    return out;
}

namespace {

// Retained sets for removing the first counts[t] entries of `removal_order`.
RemovalSchedule make_schedule(Scenario scenario, std::size_t n,
                              std::span<const std::size_t> removal_order,
                              std::span<const std::size_t> counts) {
    RemovalSchedule sched;
    sched.scenario = scenario;
    for (std::size_t c : counts) {
        const std::size_t take = std::min(c, removal_order.size());
        sched.capped = sched.capped || take < c;
        std::vector<bool> gone(n, false);
        for (std::size_t i = 0; i < take; ++i) {
            gone[removal_order[i]] = true;
        }
        RemovalStep step;
        step.removed = take;
        for (std::size_t i = 0; i < n; ++i) {
            if (!gone[i]) {
                step.retained.push_back(i);
            }
        }
        sched.steps.push_back(std::move(step));
    }
    return sched;
}

}  // namespace

std::vector<RemovalSchedule> build_schedules(const QuadrantPartition& partition,
                                             std::span<const AnchorScore> scores, int steps,
                                             std::uint64_t seed,
                                             std::span<const InfluenceScore> influence) {
    if (steps < 1) {
        throw InvalidArgument("build_schedules: steps must be at least 1");
    }
    const std::size_t n = scores.size();
    const std::vector<std::size_t> others = partition.others();
    const std::size_t m = others.size();
    if (m > 0 && static_cast<std::size_t>(steps) > m) {
        throw InvalidArgument("build_schedules: " + std::to_string(steps) +
                              " steps exceed the " + std::to_string(m) + " removable points");
    }
    if (partition.hihe.size() + m != n) {
        throw InvalidArgument("build_schedules: partition does not cover the score table");
    }
    const auto counts = removal_counts(m, steps);
    const auto by_value = rank_by_anchor_value(scores);

    std::vector<bool> is_hihe(n, false);
    for (std::size_t i : partition.hihe) {
        is_hihe[i] = true;
    }

    // Others, highest anchor value first.
    std::vector<std::size_t> others_order;
    for (auto it = by_value.rbegin(); it != by_value.rend(); ++it) {
        if (!is_hihe[*it]) {
            others_order.push_back(*it);
        }
    }
    // Equal anchor values keep ascending index order under the reverse walk.
    std::stable_sort(others_order.begin(), others_order.end(), [&](std::size_t a, std::size_t b) {
        return scores[a].anchor_value > scores[b].anchor_value;
    });

    // HIHE, lowest anchor value first.
    std::vector<std::size_t> hihe_order;
    for (std::size_t i : by_value) {
        if (is_hihe[i]) {
            hihe_order.push_back(i);
        }
    }

    std::vector<std::size_t> random_order(n);
    std::iota(random_order.begin(), random_order.end(), 0);
    Rng rng(derive_seed(seed, 0x52414E44));
    rng.shuffle(random_order);

    std::vector<RemovalSchedule> out;
    out.push_back(make_schedule(Scenario::MHihe, n, others_order, counts));
    out.push_back(make_schedule(Scenario::MOthers, n, hihe_order, counts));
    out.push_back(make_schedule(Scenario::MRandom, n, random_order, counts));

    if (!influence.empty()) {
        if (influence.size() != n) {
            throw InvalidArgument("build_schedules: influence scores do not cover the dataset");
        }
        std::vector<std::size_t> tracin_order(n);
        std::iota(tracin_order.begin(), tracin_order.end(), 0);
        std::vector<double> by_index(n);
        for (const auto& s : influence) {
            if (s.index >= n) {
                throw InvalidArgument("build_schedules: influence index out of range");
            }
            by_index[s.index] = s.score;
        }
        std::stable_sort(tracin_order.begin(), tracin_order.end(),
                         [&](std::size_t a, std::size_t b) { return by_index[a] < by_index[b]; });
        out.push_back(make_schedule(Scenario::MTracin, n, tracin_order, counts));
    }
    return out;
}

double tracin_influence(std::span<const Checkpoint> checkpoints, const Image& train_point,
                        const Image& target) {
    if (checkpoints.empty()) {
        throw InsufficientData("tracin_influence: no checkpoints");
    }
    double total = 0.0;
    for (const auto& ckpt : checkpoints) {
        const Vector zero(ckpt.params.latent_dim, 0.0);
        const Vector a = gradient(ckpt.params, train_point, zero).flatten();
        const Vector b = gradient(ckpt.params, target, zero).flatten();
        total += ckpt.learning_rate * std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
    }
    return total;
}

std::vector<InfluenceScore> tracin_scores(std::span<const Checkpoint> checkpoints,
                                          std::span<const Image> train_set,
                                          std::span<const Image> generated_set) {
    if (checkpoints.empty()) {
        throw InsufficientData("tracin_scores: no checkpoints");
    }
    if (train_set.empty() || generated_set.empty()) {
        throw InsufficientData("tracin_scores: empty training or target set");
    }
    using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    constexpr std::size_t kTargetBlock = 128;
    constexpr std::size_t kTrainBlock = 64;

    std::vector<double> sums(train_set.size(), 0.0);
    for (const auto& ckpt : checkpoints) {
        const std::size_t p = ckpt.params.parameter_count();
        for (std::size_t t0 = 0; t0 < generated_set.size(); t0 += kTargetBlock) {
            const auto targets = generated_set.subspan(t0, std::min(kTargetBlock, generated_set.size() - t0));
            const Matrix tg = per_example_gradients(ckpt.params, targets);
            const Eigen::Map<const RowMat> tmap(tg.data(), static_cast<Eigen::Index>(tg.rows()),
                                                static_cast<Eigen::Index>(p));
            for (std::size_t i0 = 0; i0 < train_set.size(); i0 += kTrainBlock) {
                const auto block = train_set.subspan(i0, std::min(kTrainBlock, train_set.size() - i0));
                const Matrix g = per_example_gradients(ckpt.params, block);
                const Eigen::Map<const RowMat> gmap(g.data(), static_cast<Eigen::Index>(g.rows()),
                                                    static_cast<Eigen::Index>(p));
                RowMat dots(gmap.rows(), tmap.rows());
                dots.noalias() = gmap * tmap.transpose();
                for (Eigen::Index r = 0; r < dots.rows(); ++r) {
                    sums[i0 + static_cast<std::size_t>(r)] += ckpt.learning_rate * dots.row(r).sum();
                }
            }
        }
    }
    std::vector<InfluenceScore> out(train_set.size());
    for (std::size_t i = 0; i < train_set.size(); ++i) {
        out[i] = {i, sums[i] / static_cast<double>(generated_set.size())};
    }
    return out;
}

// ---------------------------------------------------------------------------
// Report

std::vector<Scenario> ValidationReport::scenarios() const {
    std::vector<Scenario> out;
    for (const auto& c : cells) {
        if (std::find(out.begin(), out.end(), c.scenario) == out.end()) {
            out.push_back(c.scenario);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::uint64_t> ValidationReport::seeds() const {
    std::vector<std::uint64_t> out;
    for (const auto& c : cells) {
        if (std::find(out.begin(), out.end(), c.seed) == out.end()) {
            out.push_back(c.seed);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

int ValidationReport::final_step(std::uint64_t seed) const {
    int last = 0;
    for (const auto& c : cells) {
        if (c.seed == seed) {
            last = std::max(last, c.step);
        }
    }
    return last;
}

const ValidationCell* ValidationReport::find(Scenario s, int step, std::uint64_t seed) const {
    for (const auto& c : cells) {
        if (c.scenario == s && c.step == step && c.seed == seed) {
            return &c;
        }
    }
    return nullptr;
}

double ValidationReport::final_step_median(Scenario s) const {
    std::vector<double> values;
    for (std::uint64_t seed : seeds()) {
        if (const auto* c = find(s, final_step(seed), seed)) {
            values.push_back(c->distance);
        }
    }
    if (values.empty()) {
        throw InsufficientData("final_step_median: scenario " + std::string(to_string(s)) +
                               " has no cells");
    }
    std::sort(values.begin(), values.end());
    const std::size_t mid = values.size() / 2;
    return values.size() % 2 == 1 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

nlohmann::json ValidationReport::to_json() const {
    nlohmann::json distances = nlohmann::json::object();
    nlohmann::json removed = nlohmann::json::object();
    nlohmann::json retained = nlohmann::json::object();
    for (const auto& c : cells) {
        const std::string sc(to_string(c.scenario));
        const std::string step = std::to_string(c.step);
        const std::string seed = std::to_string(c.seed);
        distances[sc][step][seed] = c.distance;
        removed[sc][step][seed] = c.removed;
        retained[sc][step][seed] = c.retained;
    }
    return {{"config", config},
            {"seed_details", seed_details},
            {"scenarios", distances},
            {"removed", removed},
            {"retained", retained}};
}

ValidationReport ValidationReport::from_json(const nlohmann::json& j) {
    ValidationReport r;
    try {
        r.config = j.at("config");
        r.seed_details = j.value("seed_details", nlohmann::json::array());
        for (const auto& [sc, steps] : j.at("scenarios").items()) {
            for (const auto& [step, seeds] : steps.items()) {
                for (const auto& [seed, dist] : seeds.items()) {
                    ValidationCell c;
                    c.scenario = parse_scenario(sc);
                    c.step = std::stoi(step);
                    c.seed = std::stoull(seed);
                    c.distance = dist.get<double>();
                    c.removed = j.at("removed").at(sc).at(step).at(seed).get<std::size_t>();
                    c.retained = j.at("retained").at(sc).at(step).at(seed).get<std::size_t>();
                    r.cells.push_back(c);
                }
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("validation report: ") + e.what());
    } catch (const std::logic_error& e) {
        throw FormatError(std::string("validation report: bad key: ") + e.what());
    }
    std::sort(r.cells.begin(), r.cells.end(), [](const ValidationCell& a, const ValidationCell& b) {
        return std::tie(a.scenario, a.step, a.seed) < std::tie(b.scenario, b.step, b.seed);
    });
    return r;
}

std::string ValidationReport::to_csv() const {
    std::ostringstream os;
    os << "scenario,step,seed,removed,retained,distance\n";
    for (const auto& c : cells) {
        os << to_string(c.scenario) << ',' << c.step << ',' << c.seed << ',' << c.removed << ','
           << c.retained << ',' << nlohmann::json(c.distance).dump() << '\n';
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// Retraining

namespace {

std::uint64_t generation_seed(std::uint64_t seed) { return derive_seed(seed, 0x47454E); }

std::vector<Image> gather(std::span<const Image> dataset, std::span<const std::size_t> idx) {
    std::vector<Image> out;
    out.reserve(idx.size());
    for (std::size_t i : idx) {
        out.push_back(dataset[i]);
    }
    return out;
}

// Evaluates every schedule step against one seed's original model. Identical
// retained sets (degenerate schedules, the full dataset) are trained once.
void evaluate_seed(std::span<const Image> dataset, const TrainConfig& config,
                   const VaeParams& original, std::span<const RemovalSchedule> schedules,
                   std::uint64_t seed, std::size_t gen_size, const FeatureMap& fm,
                   double regularizer, std::vector<ValidationCell>& cells) {
    const auto reference = sample(original, gen_size, generation_seed(seed));
    std::vector<std::size_t> everything(dataset.size());
    std::iota(everything.begin(), everything.end(), 0);

    std::map<std::vector<std::size_t>, double> memo;
    TrainConfig cfg = config;
    cfg.seed = seed;
    for (const auto& sched : schedules) {
        for (std::size_t t = 0; t < sched.steps.size(); ++t) {
            const auto& step = sched.steps[t];
            auto it = memo.find(step.retained);
            if (it == memo.end()) {
                double dist = 0.0;
                if (step.retained.size() < 1) {
                    throw InsufficientData("run_validation: a schedule step retains no data");
                }
                if (step.retained == everything) {
                    dist = frechet_between_sets(reference, reference, fm, regularizer);
                } else {
                    const auto subset = gather(dataset, step.retained);
                    const auto retrained = train(subset, cfg).params;
                    const auto generated = sample(retrained, gen_size, generation_seed(seed));
                    dist = frechet_between_sets(reference, generated, fm, regularizer);
                }
                it = memo.emplace(step.retained, dist).first;
            }
            ValidationCell c;
            c.scenario = sched.scenario;
            c.step = static_cast<int>(t) + 1;
            c.seed = seed;
            c.removed = step.removed;
            c.retained = step.retained.size();
            c.distance = it->second;
            cells.push_back(c);
        }
    }
}

nlohmann::json train_config_json(const TrainConfig& c) {
    return {{"epochs", c.epochs},
            {"batch_size", c.batch_size},
            {"learning_rate", c.learning_rate},
            {"checkpoint_interval", c.checkpoint_interval},
            {"latent_dim", c.latent_dim},
            {"hidden_dims", c.hidden_dims}};
}

void sort_cells(std::vector<ValidationCell>& cells) {
    std::sort(cells.begin(), cells.end(), [](const ValidationCell& a, const ValidationCell& b) {
        return std::tie(a.scenario, a.step, a.seed) < std::tie(b.scenario, b.step, b.seed);
    });
}

}  // namespace

ValidationReport run_validation(std::span<const Image> dataset, const TrainConfig& config,
                                std::span<const RemovalSchedule> schedules,
                                std::span<const std::uint64_t> seeds, std::size_t gen_size,
                                const FeatureMap& fm, double regularizer) {
    if (gen_size < 2) {
        throw InvalidArgument("run_validation: gen_size must be at least 2");
    }
    if (seeds.empty()) {
        throw InvalidArgument("run_validation: no seeds");
    }
    config.validate();
    ValidationReport report;
    report.config = {{"dataset_size", dataset.size()},
                     {"seeds", std::vector<std::uint64_t>(seeds.begin(), seeds.end())},
                     {"gen_size", gen_size},
                     {"reference_gen_size", kReferenceGenerationSize},
                     {"feature_window", fm.window},
                     {"feature_dim", fm.output_dim()},
                     {"regularizer", regularizer},
                     {"train", train_config_json(config)}};
    for (std::uint64_t seed : seeds) {
        TrainConfig cfg = config;
        cfg.seed = seed;
        const auto original = train(dataset, cfg).params;
        evaluate_seed(dataset, config, original, schedules, seed, gen_size, fm, regularizer,
                      report.cells);
    }
    sort_cells(report.cells);
    return report;
}

void StudyConfig::validate() const {
    train.validate();
    calibration.validate();
    if (seeds.empty()) {
        throw InvalidArgument("study: no seeds");
    }
    if (steps < 1) {
        throw InvalidArgument("study: steps must be at least 1");
    }
    if (gen_size < 2) {
        throw InvalidArgument("study: gen_size must be at least 2");
    }
    if (include_tracin && tracin_targets < 1) {
        throw InvalidArgument("study: tracin_targets must be positive");
    }
}

ValidationReport run_study(std::span<const Image> dataset, const StudyConfig& config) {
    config.validate();
    if (dataset.size() < 2) {
        throw InsufficientData("run_study: dataset too small");
    }
    ValidationReport report;
    report.config = {
        {"dataset_size", dataset.size()},
        {"seeds", config.seeds},
        {"steps", config.steps},
        {"gen_size", config.gen_size},
        {"reference_gen_size", kReferenceGenerationSize},
        {"feature_window", config.feature_map.window},
        {"feature_dim", config.feature_map.output_dim()},
        {"regularizer", config.regularizer},
        {"train", train_config_json(config.train)},
        {"calibration",
         {{"mode", to_string(config.calibration.mode)},
          {"samples_per_iteration", config.calibration.samples_per_iteration},
          {"iterations", config.calibration.iterations},
          {"percentile", config.calibration.percentile},
          {"extrinsic", to_string(config.calibration.extrinsic_kind)}}},
        {"tracin", config.include_tracin},
        {"tracin_targets", config.include_tracin ? config.tracin_targets : 0},
    };

    for (std::uint64_t seed : config.seeds) {
        TrainConfig cfg = config.train;
        cfg.seed = seed;
        const TrainResult original = train(dataset, cfg);

        auto scores = score_anchors(original.params, dataset, config.calibration.extrinsic_kind,
                                    config.feature_map);
        CalibrationConfig calib = config.calibration;
        calib.seed = derive_seed(seed, 0x43414C);
        const Thresholds thresholds = calibrate(original.params, calib);
        const QuadrantPartition partition = classify(scores, thresholds);
        if (partition.hihe.empty()) {
            throw InsufficientData("run_study: seed " + std::to_string(seed) +
                                   " leaves HIHE empty, so M_HIHE has no training data; "
                                   "loosen the calibration cutoffs");
        }
        const std::size_t m = partition.others().size();
        const int steps = m == 0 ? config.steps
                                 : static_cast<int>(std::min<std::size_t>(
                                       static_cast<std::size_t>(config.steps), m));

        std::vector<InfluenceScore> influence;
        if (config.include_tracin) {
            const auto targets =
                sample(original.params, config.tracin_targets, derive_seed(seed, 0x545241));
            influence = tracin_scores(original.checkpoints, dataset, targets);
        }
        const auto schedules = build_schedules(partition, scores, steps, seed, influence);

        nlohmann::json capped = nlohmann::json::object();
        for (const auto& s : schedules) {
            capped[std::string(to_string(s.scenario))] = s.capped;
        }
        report.seed_details.push_back({
            {"seed", seed},
            {"intrinsic_cutoff", thresholds.intrinsic_cutoff},
            {"extrinsic_cutoff", thresholds.extrinsic_cutoff},
            {"quadrants",
             {{"HIHE", partition.hihe.size()},
              {"HILE", partition.hile.size()},
              {"LIHE", partition.lihe.size()},
              {"LILE", partition.lile.size()}}},
            {"others", m},
            {"steps", steps},
            {"checkpoints", original.checkpoints.size()},
            {"capped", capped},
        });
        evaluate_seed(dataset, config.train, original.params, schedules, seed, config.gen_size,
                      config.feature_map, config.regularizer, report.cells);
    }
    sort_cells(report.cells);
    return report;
}

}  // namespace pxgen
