#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "pxgen/errors.hpp"
#include "pxgen/toolkit/synth.hpp"
#include "pxgen/validation.hpp"
#include "support.hpp"

#include <algorithm>
#include <numeric>
#include <set>

using namespace pxgen;
using doctest::Approx;

namespace {

std::vector<AnchorScore> scores_from(const std::vector<double>& values) {
    std::vector<AnchorScore> s(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        s[i].id = i;
        s[i].intrinsic = values[i];
        s[i].anchor_value = values[i];
    }
    return s;
}

QuadrantPartition random_partition(Rng& rng, std::size_t n) {
    QuadrantPartition p;
    for (std::size_t i = 0; i < n; ++i) {
        switch (rng.below(4)) {
            case 0: p.hihe.push_back(i); break;
            case 1: p.hile.push_back(i); break;
            case 2: p.lihe.push_back(i); break;
            default: p.lile.push_back(i); break;
        }
    }
    return p;
}

std::vector<std::size_t> removed_set(const RemovalStep& s, std::size_t n) {
    std::vector<std::size_t> out;
    std::size_t j = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (j < s.retained.size() && s.retained[j] == i) {
            ++j;
        } else {
            out.push_back(i);
        }
    }
    return out;
}

TrainConfig tiny_train() {
    TrainConfig c;
    c.epochs = 4;
    c.batch_size = 16;
    c.latent_dim = 2;
    c.hidden_dims = {8};
    c.checkpoint_interval = 2;
    return c;
}

}  // namespace

TEST_CASE("rank_by_anchor_value") {
    CHECK(rank_by_anchor_value(scores_from({0.5, 0.1, 0.3})) == std::vector<std::size_t>{1, 2, 0});
    CHECK(rank_by_anchor_value(scores_from({2, 2, 2, 2})) == std::vector<std::size_t>{0, 1, 2, 3});
    Rng rng(1);
    std::vector<double> v(1000);
    for (double& x : v) x = std::floor(rng.uniform(0, 50));  // plenty of ties
    std::vector<std::size_t> oracle(1000);
    std::iota(oracle.begin(), oracle.end(), 0);
    std::sort(oracle.begin(), oracle.end(), [&](auto a, auto b) { return v[a] != v[b] ? v[a] < v[b] : a < b; });
    CHECK(rank_by_anchor_value(scores_from(v)) == oracle);
    CHECK_THROWS_AS(rank_by_anchor_value(std::vector<AnchorScore>{}), InsufficientData);
}

TEST_CASE("removal counts") {
    CHECK(removal_counts(4, 2) == std::vector<std::size_t>{2, 4});
    CHECK(removal_counts(7, 3) == std::vector<std::size_t>{3, 5, 7});
    CHECK(removal_counts(0, 3) == std::vector<std::size_t>{0, 0, 0});
}

TEST_CASE("build_schedules examples") {
    // m = 0: everything degenerate
    QuadrantPartition all;
    for (std::size_t i = 0; i < 6; ++i) all.hihe.push_back(i);
    auto s6 = scores_from({1, 2, 3, 4, 5, 6});
    for (const auto& sched : build_schedules(all, s6, 3, 1)) {
        for (const auto& step : sched.steps) {
            CHECK(step.removed == 0);
            CHECK(step.retained.size() == 6);
        }
    }

    // 10 anchors, 4 others, 2 steps
    QuadrantPartition p;
    p.hihe = {0, 1, 2, 3, 4, 5};
    p.hile = {6};
    p.lihe = {7, 8};
    p.lile = {9};
    auto s = scores_from({0.9, 0.1, 0.5, 0.3, 0.7, 0.2, 1.0, 3.0, 2.0, 5.0});
    const auto scheds = build_schedules(p, s, 2, 7);
    REQUIRE(scheds.size() == 3);
    for (const auto& sc : scheds) {
        CHECK(sc.steps[0].removed == 2);
        CHECK(sc.steps[1].removed == 4);
        CHECK_FALSE(sc.capped);
    }
    // M_HIHE: highest-value others first (9, 7) then (8, 6)
    CHECK(removed_set(scheds[0].steps[0], 10) == std::vector<std::size_t>{7, 9});
    CHECK(scheds[0].steps[1].retained == p.hihe);
    // M_OTHERS: lowest-value HIHE first (1, 5) then (3, 2)
    CHECK(scheds[1].scenario == Scenario::MOthers);
    CHECK(removed_set(scheds[1].steps[0], 10) == std::vector<std::size_t>{1, 5});
    CHECK(removed_set(scheds[1].steps[1], 10) == std::vector<std::size_t>{1, 2, 3, 5});
    CHECK(scheds[2].scenario == Scenario::MRandom);
    CHECK(build_schedules(p, s, 2, 7)[2].steps[1].retained == scheds[2].steps[1].retained);

    CHECK_THROWS_AS(build_schedules(p, s, 5, 1), InvalidArgument);
    CHECK_THROWS_AS(build_schedules(p, s, 0, 1), InvalidArgument);

    // HIHE smaller than the others group: M_OTHERS caps
    QuadrantPartition small;
    small.hihe = {0};
    small.lile = {1, 2, 3};
    const auto capped = build_schedules(small, scores_from({1, 2, 3, 4}), 3, 1);
    CHECK(capped[1].capped);
    CHECK(capped[1].steps.back().removed == 1);
    CHECK(capped[0].steps.back().removed == 3);
}

TEST_CASE("schedule soundness on random partitions") {
    Rng rng(2);
    for (int t = 0; t < 50; ++t) {
        const std::size_t n = 5 + rng.below(60);
        const auto p = random_partition(rng, n);
        std::vector<double> v(n);
        for (double& x : v) x = rng.uniform();
        const auto s = scores_from(v);
        const std::size_t m = p.others().size();
        if (m == 0) continue;
        const int steps = static_cast<int>(1 + rng.below(std::min<std::size_t>(m, 6)));
        std::vector<InfluenceScore> infl(n);
        for (std::size_t i = 0; i < n; ++i) infl[i] = {i, rng.normal()};
        const auto scheds = build_schedules(p, s, steps, 9, infl);
        REQUIRE(scheds.size() == 4);
        CHECK(scheds[3].scenario == Scenario::MTracin);
        CHECK(scheds[0].steps.back().retained == p.hihe);
        for (const auto& sc : scheds) {
            REQUIRE(sc.steps.size() == static_cast<std::size_t>(steps));
            for (std::size_t k = 0; k < sc.steps.size(); ++k) {
                const auto& st = sc.steps[k];
                const auto gone = removed_set(st, n);
                CHECK(gone.size() + st.retained.size() == n);
                CHECK(gone.size() == st.removed);
                CHECK(std::is_sorted(st.retained.begin(), st.retained.end()));
                if (sc.scenario != Scenario::MOthers || !sc.capped) {
                    CHECK(st.removed == scheds[0].steps[k].removed);
                }
                if (k > 0 && !sc.capped) CHECK(st.retained.size() < sc.steps[k - 1].retained.size());
                if (k > 0) {
                    const auto prev = removed_set(sc.steps[k - 1], n);
                    CHECK(std::includes(gone.begin(), gone.end(), prev.begin(), prev.end()));
                }
            }
        }
        // M_TRACIN removes the lowest influence first
        std::vector<std::size_t> by(n);
        std::iota(by.begin(), by.end(), 0);
        std::stable_sort(by.begin(), by.end(), [&](auto a, auto b) { return infl[a].score < infl[b].score; });
        by.resize(scheds[3].steps[0].removed);
        std::sort(by.begin(), by.end());
        CHECK(removed_set(scheds[3].steps[0], n) == by);
    }
}

TEST_CASE("tracin_influence") {
    const Image x(2, 1, {0.2, 0.9});
    const Image t(2, 1, {0.7, 0.1});
    const std::vector<Checkpoint> two{{1, pxtest::hand_vae_a(), 0.01, 0}, {2, pxtest::hand_vae_b(), 0.005, 0}};
    // tests/oracles/tiny_vae.py
    CHECK(tracin_influence(two, x, t) == Approx(-0.0052697402043447045).epsilon(1e-10));

    const Vector g = gradient(pxtest::hand_vae_a(), x, Vector{0.0}).flatten();
    const double sq = std::inner_product(g.begin(), g.end(), g.begin(), 0.0);
    const std::vector<Checkpoint> one{two[0]};
    CHECK(tracin_influence(one, x, x) == Approx(0.01 * sq).epsilon(1e-12));
    CHECK(tracin_influence(one, x, x) >= 0.0);

    // zero network: the only non-zero gradient is the output bias, 0.5 - x
    const VaeParams zero = zero_vae(2, 1, 1, {2});
    const std::vector<Checkpoint> zeros{{1, zero, 0.1, 0}, {2, zero, 0.3, 0}};
    CHECK(tracin_influence(zeros, Image(2, 1, {1.0, 0.5}), Image(2, 1, {0.5, 0.0})) == 0.0);

    CHECK_THROWS_AS(tracin_influence({}, x, t), InsufficientData);
    CHECK_THROWS_AS(tracin_influence(one, Image(1, 1, {0.5}), t), InvalidArgument);
}

TEST_CASE("tracin_scores") {
    Rng rng(3);
    std::vector<Checkpoint> ckpts;
    for (int c = 0; c < 2; ++c) ckpts.push_back({c, pxtest::random_vae(rng, 3, 3, 2, {4}), 0.01 * (c + 1), 0});
    const auto train = pxtest::random_images(rng, 5, 3, 3);
    const auto targets = pxtest::random_images(rng, 3, 3, 3);

    const auto s = tracin_scores(ckpts, train, targets);
    REQUIRE(s.size() == 5);
    for (std::size_t i = 0; i < 5; ++i) {
        double sum = 0;
        for (const auto& t : targets) sum += tracin_influence(ckpts, train[i], t);
        CHECK(s[i].index == i);
        CHECK(s[i].score == Approx(sum / 3).epsilon(1e-10));
    }

    const std::vector<Image> single{targets[1]};
    const auto one = tracin_scores(ckpts, train, single);
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(one[i].score == Approx(tracin_influence(ckpts, train[i], targets[1])).epsilon(1e-10));
    }

    auto doubled = targets;
    doubled.insert(doubled.end(), targets.begin(), targets.end());
    const auto d = tracin_scores(ckpts, train, doubled);
    for (std::size_t i = 0; i < 5; ++i) CHECK(d[i].score == Approx(s[i].score).epsilon(1e-12));

    // more train points than one block
    const auto many = pxtest::random_images(rng, 150, 3, 3);
    const auto big = tracin_scores(ckpts, many, targets);
    CHECK(big[149].score == Approx([&] {
              double sum = 0;
              for (const auto& t : targets) sum += tracin_influence(ckpts, many[149], t);
              return sum / 3;
          }()).epsilon(1e-10));

    CHECK_THROWS_AS(tracin_scores(ckpts, train, std::vector<Image>{}), InsufficientData);
}

TEST_CASE("run_validation") {
    const auto data = toolkit::synth_dataset(40, 0, 5);
    const TrainConfig cfg = tiny_train();
    std::vector<double> values(40);
    for (std::size_t i = 0; i < 40; ++i) values[i] = static_cast<double>((i * 7) % 40);
    const auto s = scores_from(values);
    QuadrantPartition p;
    for (std::size_t i = 0; i < 40; ++i) (i % 3 == 0 ? p.lile : p.hihe).push_back(i);
    const auto scheds = build_schedules(p, s, 2, 3);
    const std::vector<std::uint64_t> seeds{1, 2};
    const FeatureMap fm{"avgpool", 28, 28, 7};

    const auto rep = run_validation(data, cfg, scheds, seeds, 30, fm);
    CHECK(rep.cells.size() == 3 * 2 * 2);
    for (const auto& c : rep.cells) {
        CHECK(c.distance >= 0.0);
        CHECK(c.retained + c.removed == 40);
    }
    CHECK(rep.config["gen_size"] == 30);
    CHECK(rep.config["reference_gen_size"] == 3500);
    CHECK(rep.final_step(1) == 2);
    CHECK(rep.find(Scenario::MHihe, 2, 2) != nullptr);
    CHECK(rep.find(Scenario::MTracin, 1, 1) == nullptr);

    const auto again = run_validation(data, cfg, scheds, seeds, 30, fm);
    CHECK(again.cells == rep.cells);

    const auto parsed = ValidationReport::from_json(nlohmann::json::parse(rep.to_json().dump()));
    CHECK(parsed.cells == rep.cells);
    CHECK(parsed.to_json() == rep.to_json());
    const std::string csv = rep.to_csv();
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 13);

    // keeping every training point reproduces the original model
    RemovalSchedule keep_all;
    keep_all.scenario = Scenario::MRandom;
    RemovalStep step;
    step.retained.resize(40);
    std::iota(step.retained.begin(), step.retained.end(), 0);
    keep_all.steps.push_back(step);
    const std::vector<RemovalSchedule> ka{keep_all};
    const std::vector<std::uint64_t> one_seed{4};
    const auto self = run_validation(data, cfg, ka, one_seed, 30, fm);
    REQUIRE(self.cells.size() == 1);
    CHECK(std::abs(self.cells[0].distance) <= 1e-8);

    CHECK_THROWS_AS(run_validation(data, cfg, scheds, seeds, 1, fm), InvalidArgument);
}

TEST_CASE("run_study on a tiny configuration") {
    const auto data = toolkit::synth_dataset(48, 0, 6);
    StudyConfig sc;
    sc.train = tiny_train();
    // shorter runs reconstruct their own blurry samples better than any
    // training image, which leaves HIHE empty
    sc.train.epochs = 20;
    sc.train.hidden_dims = {32};
    sc.train.checkpoint_interval = 10;
    sc.seeds = {1};
    sc.steps = 2;
    sc.gen_size = 20;
    sc.feature_map = {"avgpool", 28, 28, 7};
    sc.calibration.samples_per_iteration = 20;
    sc.calibration.iterations = 2;
    sc.calibration.mode = ThresholdMode::Percentile;
    sc.calibration.percentile = 100;
    sc.tracin_targets = 5;
    const auto rep = run_study(data, sc);
    CHECK(rep.seed_details.size() == 1);
    const int steps = rep.seed_details[0]["steps"].get<int>();
    CHECK(rep.cells.size() == 4 * static_cast<std::size_t>(steps));
    CHECK(rep.seed_details[0]["checkpoints"] == 2);
    CHECK(rep.to_json()["scenarios"].contains("M_TRACIN"));
    CHECK(run_study(data, sc).cells == rep.cells);

    sc.steps = 0;
    CHECK_THROWS_AS(run_study(data, sc), InvalidArgument);
}

TEST_CASE("scenario names") {
    for (auto s : {Scenario::MHihe, Scenario::MOthers, Scenario::MRandom, Scenario::MTracin}) {
        CHECK(parse_scenario(to_string(s)) == s);
    }
    CHECK(to_string(Scenario::MOthers) == "M_OTHERS");
    CHECK_THROWS_AS(parse_scenario("M_ALL"), InvalidArgument);
}
