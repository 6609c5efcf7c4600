#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "pxgen/analysis.hpp"
#include "pxgen/errors.hpp"
#include "support.hpp"

#include <algorithm>
#include <numeric>
#include <set>

using namespace pxgen;

namespace {

std::vector<AnchorScore> random_scores(Rng& rng, std::size_t n) {
    std::vector<AnchorScore> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        out[i].id = i;
        out[i].intrinsic = rng.uniform(0, 20);
        out[i].extrinsic = rng.uniform(0, 0.2);
        out[i].anchor_value = out[i].intrinsic + out[i].extrinsic;
    }
    return out;
}

Thresholds cutoffs(double in, double ex) {
    Thresholds t;
    t.intrinsic_cutoff = in;
    t.extrinsic_cutoff = ex;
    return t;
}

}  // namespace

TEST_CASE("aggregate_cutoff") {
    const std::vector<std::vector<double>> its{{3, 10, 1}, {12, 0, 5}};
    CHECK(aggregate_cutoff(its, ThresholdMode::AvgMax, 100) == 11.0);

    std::vector<double> v(100);
    std::iota(v.begin(), v.end(), 1.0);
    const std::vector<std::vector<double>> one{v};
    CHECK(aggregate_cutoff(one, ThresholdMode::Percentile, 95) == 95.0);
    // avg_max over one iteration equals the 100th percentile
    CHECK(aggregate_cutoff(one, ThresholdMode::AvgMax, 0) ==
          aggregate_cutoff(one, ThresholdMode::Percentile, 100));

    // mean of per-iteration percentiles
    std::vector<double> w(100);
    std::iota(w.begin(), w.end(), 101.0);
    const std::vector<std::vector<double>> two{v, w};
    CHECK(aggregate_cutoff(two, ThresholdMode::Percentile, 95) == 145.0);

    CHECK_THROWS_AS(aggregate_cutoff(std::vector<std::vector<double>>{}, ThresholdMode::AvgMax, 1),
                    InsufficientData);
}

TEST_CASE("calibrate") {
    Rng rng(1);
    const VaeParams p = pxtest::random_vae(rng, 6, 6, 3, {8}, 0.3);
    CalibrationConfig c;
    c.mode = ThresholdMode::Percentile;
    c.percentile = 95;
    c.samples_per_iteration = 300;
    c.iterations = 1;
    c.seed = 77;
    c.feature_map = {"avgpool", 6, 6, 2};
    const Thresholds t = calibrate(p, c);

    // the 285th smallest of the 300 generated-sample scores
    const auto scores = score_anchors(p, VaeModel(p).sample(300, 77), ExtrinsicKind::Mse);
    std::vector<double> in, ex;
    for (const auto& s : scores) {
        in.push_back(s.intrinsic);
        ex.push_back(s.extrinsic);
    }
    std::sort(in.begin(), in.end());
    std::sort(ex.begin(), ex.end());
    CHECK(t.intrinsic_cutoff == in[284]);
    CHECK(t.extrinsic_cutoff == ex[284]);
    CHECK(t.mode == ThresholdMode::Percentile);
    CHECK(t.percentile == 95);
    CHECK(t.samples_per_iteration == 300);

    CHECK(calibrate(p, c) == t);

    c.mode = ThresholdMode::AvgMax;
    const Thresholds m = calibrate(p, c);
    CHECK(m.intrinsic_cutoff == in.back());
    c.mode = ThresholdMode::Percentile;
    c.percentile = 100;
    CHECK(calibrate(p, c).intrinsic_cutoff == m.intrinsic_cutoff);

    c.mode = ThresholdMode::AvgMax;
    c.iterations = 3;
    c.samples_per_iteration = 40;
    double sum = 0;
    for (std::uint64_t r = 0; r < 3; ++r) {
        double mx = 0;
        for (const auto& s : score_anchors(p, sample(p, 40, 77 ^ r), ExtrinsicKind::Mse)) mx = std::max(mx, s.intrinsic);
        sum += mx;
    }
    CHECK(calibrate(p, c).intrinsic_cutoff == doctest::Approx(sum / 3).epsilon(1e-14));

    c.samples_per_iteration = 1;
    CHECK_THROWS_AS(calibrate(p, c), InvalidArgument);
    c.samples_per_iteration = 10;
    c.iterations = 0;
    CHECK_THROWS_AS(calibrate(p, c), InvalidArgument);
}

TEST_CASE("classify quadrants") {
    std::vector<AnchorScore> s(4);
    s[0].intrinsic = 1;  s[0].extrinsic = 0.1;   // both below
    s[1].intrinsic = 1;  s[1].extrinsic = 0.5;   // intrinsic below only
    s[2].intrinsic = 9;  s[2].extrinsic = 0.1;
    s[3].intrinsic = 9;  s[3].extrinsic = 0.5;
    const auto p = classify(s, cutoffs(2, 0.2));
    CHECK(p.hihe == std::vector<std::size_t>{0});
    CHECK(p.hile == std::vector<std::size_t>{1});
    CHECK(p.lihe == std::vector<std::size_t>{2});
    CHECK(p.lile == std::vector<std::size_t>{3});
    CHECK(s[1].quadrant == Quadrant::HILE);
    CHECK(p.others() == std::vector<std::size_t>{1, 2, 3});
    CHECK(&p.group(Quadrant::LIHE) == &p.lihe);

    std::vector<AnchorScore> edge(1);
    edge[0].intrinsic = 2;
    edge[0].extrinsic = 0.2;
    classify(edge, cutoffs(2, 0.2));
    CHECK(edge[0].quadrant == Quadrant::HIHE);
}

TEST_CASE("partition and monotonicity on random tables") {
    Rng rng(2);
    for (int t = 0; t < 100; ++t) {
        auto s = random_scores(rng, 1 + rng.below(60));
        const double in = rng.uniform(0, 20), ex = rng.uniform(0, 0.2);
        const auto p = classify(s, cutoffs(in, ex));
        std::set<std::size_t> all;
        std::size_t total = 0;
        for (auto q : {Quadrant::HIHE, Quadrant::HILE, Quadrant::LIHE, Quadrant::LILE}) {
            for (std::size_t i : p.group(q)) {
                all.insert(i);
                CHECK(s[i].quadrant == q);
            }
            total += p.group(q).size();
        }
        CHECK(total == s.size());
        CHECK(all.size() == s.size());

        auto s2 = s;
        const auto raised = classify(s2, cutoffs(in + rng.uniform(0, 5), ex));
        CHECK(raised.hihe.size() + raised.hile.size() >= p.hihe.size() + p.hile.size());
        auto s3 = s;
        const auto raised_ex = classify(s3, cutoffs(in, ex + rng.uniform(0, 0.05)));
        CHECK(raised_ex.hihe.size() + raised_ex.lihe.size() >= p.hihe.size() + p.lihe.size());
    }
}

TEST_CASE("fraction_count") {
    CHECK(fraction_count(0.05, 20) == 1);
    CHECK(fraction_count(0.05, 54000) == 2700);
    CHECK(fraction_count(0.05, 300) == 15);
    CHECK(fraction_count(1.0, 7) == 7);
    CHECK(fraction_count(0.01, 5) == 1);
    CHECK_THROWS_AS(fraction_count(0.0, 5), InvalidArgument);
    CHECK_THROWS_AS(fraction_count(1.5, 5), InvalidArgument);
}

TEST_CASE("delusion and conception subsets") {
    Rng rng(3);
    auto s = random_scores(rng, 20);
    const auto one = delusion_subset(s, 0.05);
    REQUIRE(one.size() == 1);
    const auto min_in = std::min_element(s.begin(), s.end(), [](auto& a, auto& b) { return a.intrinsic < b.intrinsic; });
    CHECK(one[0] == static_cast<std::size_t>(min_in - s.begin()));

    const auto all = delusion_subset(s, 1.0);
    CHECK(all.size() == 20);
    CHECK(std::is_sorted(all.begin(), all.end(), [&](auto a, auto b) { return s[a].extrinsic < s[b].extrinsic; }));
    const auto allc = conception_subset(s, 1.0);
    CHECK(std::is_sorted(allc.begin(), allc.end(), [&](auto a, auto b) { return s[a].intrinsic < s[b].intrinsic; }));

    CHECK(conception_subset(std::vector<AnchorScore>(1), 0.05) == std::vector<std::size_t>{0});

    for (int t = 0; t < 20; ++t) {
        auto r = random_scores(rng, 100);
        const double f = rng.uniform(0.01, 1.0);
        // select-then-sort oracle
        std::vector<std::size_t> idx(100);
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return r[a].extrinsic < r[b].extrinsic; });
        idx.resize(fraction_count(f, 100));
        std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return r[a].intrinsic < r[b].intrinsic; });
        const auto got = conception_subset(r, f);
        CHECK(got == idx);
        CHECK(std::set<std::size_t>(got.begin(), got.end()).size() == got.size());
    }
    CHECK_THROWS_AS(delusion_subset(std::vector<AnchorScore>{}, 0.5), InsufficientData);
}

TEST_CASE("threshold mode names") {
    CHECK(parse_threshold_mode("avg_max") == ThresholdMode::AvgMax);
    CHECK(parse_threshold_mode(to_string(ThresholdMode::Percentile)) == ThresholdMode::Percentile);
    CHECK_THROWS_AS(parse_threshold_mode("max"), InvalidArgument);
}
