#include "pxgen/discovery.hpp"

#include "pxgen/errors.hpp"

#include <algorithm>
#include <limits>
#include <string>

namespace pxgen {

std::string_view to_string(SelectionMethod m) {
    switch (m) {
        case SelectionMethod::KDispersion: return "k_dispersion";
        case SelectionMethod::KCenter: return "k_center";
        case SelectionMethod::BruteDispersion: return "brute_dispersion";
        case SelectionMethod::BruteCenter: return "brute_center";
    }
    return "k_dispersion";
}

SelectionMethod parse_selection_method(std::string_view s) {
    for (auto m : {SelectionMethod::KDispersion, SelectionMethod::KCenter,
                   SelectionMethod::BruteDispersion, SelectionMethod::BruteCenter}) {
        if (s == to_string(m)) {
            return m;
        }
    }
    throw InvalidArgument("unknown selection method '" + std::string(s) + "'");
}

std::string_view to_string(DistanceSpace s) {
    return s == DistanceSpace::Pixel ? "pixel" : "latent_mean";
}

DistanceSpace parse_distance_space(std::string_view s) {
    if (s == "pixel") {
        return DistanceSpace::Pixel;
    }
    if (s == "latent_mean") {
        return DistanceSpace::LatentMean;
    }
    throw InvalidArgument("unknown distance space '" + std::string(s) + "'");
}

namespace {

void check_instance(const Matrix& d, std::size_t k, const char* who) {
    if (!d.square()) {
        throw InvalidArgument(std::string(who) + ": distance matrix is not square");
    }
    if (k < 1 || k > d.rows()) {
        throw InvalidArgument(std::string(who) + ": k = " + std::to_string(k) +
                              " outside [1, " + std::to_string(d.rows()) + "]");
    }
}

}  // namespace

double dispersion_objective(const Matrix& d, std::span<const std::size_t> chosen) {
    if (chosen.size() < 2) {
        return 0.0;
    }
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < chosen.size(); ++a) {
        for (std::size_t b = a + 1; b < chosen.size(); ++b) {
            best = std::min(best, d(chosen[a], chosen[b]));
        }
    }
    return best;
}

double center_objective(const Matrix& d, std::span<const std::size_t> chosen) {
    double radius = 0.0;
    for (std::size_t p = 0; p < d.rows(); ++p) {
        double nearest = std::numeric_limits<double>::infinity();
        for (std::size_t c : chosen) {
            nearest = std::min(nearest, d(p, c));
        }
        radius = std::max(radius, nearest);
    }
    return radius;
}

SelectionResult k_dispersion_greedy(const Matrix& d, std::size_t k) {
    check_instance(d, k, "k_dispersion_greedy");
    const std::size_t n = d.rows();
    SelectionResult r;
    r.method = SelectionMethod::KDispersion;

    std::size_t bi = 0;
    std::size_t bj = 0;
    double best = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (d(i, j) > best) {
                best = d(i, j);
                bi = i;
                bj = j;
            }
        }
    }
    r.chosen.push_back(bi);
    if (k >= 2) {
        r.chosen.push_back(bj);
    }

    std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
    std::vector<bool> taken(n, false);
    for (std::size_t c : r.chosen) {
        taken[c] = true;
        for (std::size_t p = 0; p < n; ++p) {
            nearest[p] = std::min(nearest[p], d(p, c));
        }
    }
    while (r.chosen.size() < k) {
        std::size_t pick = n;
        for (std::size_t p = 0; p < n; ++p) {
            if (!taken[p] && (pick == n || nearest[p] > nearest[pick])) {
                pick = p;
            }
        }
        r.chosen.push_back(pick);
        taken[pick] = true;
        for (std::size_t p = 0; p < n; ++p) {
            nearest[p] = std::min(nearest[p], d(p, pick));
        }
    }
    r.objective = dispersion_objective(d, r.chosen);
    return r;
}

SelectionResult k_center_greedy(const Matrix& d, std::size_t k) {
    check_instance(d, k, "k_center_greedy");
    const std::size_t n = d.rows();
    SelectionResult r;
    r.method = SelectionMethod::KCenter;

    std::size_t first = 0;
    double best_eccentricity = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        double ecc = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            ecc = std::max(ecc, d(i, j));
        }
        if (ecc < best_eccentricity) {
            best_eccentricity = ecc;
            first = i;
        }
    }
    r.chosen.push_back(first);
    std::vector<double> nearest(n);
    for (std::size_t p = 0; p < n; ++p) {
        nearest[p] = d(p, first);
    }
    std::vector<bool> taken(n, false);
    taken[first] = true;
    while (r.chosen.size() < k) {
        std::size_t pick = n;
        for (std::size_t p = 0; p < n; ++p) {
            if (!taken[p] && (pick == n || nearest[p] > nearest[pick])) {
                pick = p;
            }
        }
        r.chosen.push_back(pick);
        taken[pick] = true;
        for (std::size_t p = 0; p < n; ++p) {
            nearest[p] = std::min(nearest[p], d(p, pick));
        }
    }
    r.objective = center_objective(d, r.chosen);
    return r;
}

namespace {

constexpr std::size_t kBruteForceLimit = 20;

// Walks all k-subsets in lexicographic order; `better` decides replacement.
template <typename Objective, typename Better>
SelectionResult exhaustive(const Matrix& d, std::size_t k, SelectionMethod method,
                           Objective objective, Better better, const char* who) {
    check_instance(d, k, who);
    const std::size_t n = d.rows();
    if (n > kBruteForceLimit) {
        throw ResourceLimit(std::string(who) + ": n = " + std::to_string(n) + " exceeds " +
                            std::to_string(kBruteForceLimit));
    }
    std::vector<std::size_t> combo(k);
    for (std::size_t i = 0; i < k; ++i) {
        combo[i] = i;
    }
    SelectionResult r;
    r.method = method;
    bool have = false;
    while (true) {
        const double value = objective(d, combo);
        if (!have || better(value, r.objective)) {
            r.objective = value;
            r.chosen = combo;
            have = true;
        }
        std::size_t i = k;
        while (i > 0 && combo[i - 1] == n - k + (i - 1)) {
            --i;
        }
        if (i == 0) {
            break;
        }
        ++combo[i - 1];
        for (std::size_t j = i; j < k; ++j) {
            combo[j] = combo[j - 1] + 1;
        }
    }
    return r;
}

}  // namespace

SelectionResult brute_force_dispersion(const Matrix& d, std::size_t k) {
    return exhaustive(
        d, k, SelectionMethod::BruteDispersion,
        [](const Matrix& m, const std::vector<std::size_t>& c) { return dispersion_objective(m, c); },
        [](double candidate, double incumbent) { return candidate > incumbent; },
        "brute_force_dispersion");
}

SelectionResult brute_force_center(const Matrix& d, std::size_t k) {
    return exhaustive(
        d, k, SelectionMethod::BruteCenter,
        [](const Matrix& m, const std::vector<std::size_t>& c) { return center_objective(m, c); },
        [](double candidate, double incumbent) { return candidate < incumbent; },
        "brute_force_center");
}

SelectionResult select_from_group(std::span<const Image> anchors,
                                  std::span<const std::size_t> group, std::size_t k,
                                  SelectionMethod method, DistanceSpace space,
                                  const GenerativeModel* model) {
    if (group.empty()) {
        throw InvalidArgument("select_from_group: empty group");
    }
    if (k < 1 || k > group.size()) {
        throw InvalidArgument("select_from_group: k = " + std::to_string(k) +
                              " outside [1, " + std::to_string(group.size()) + "]");
    }
    if (space == DistanceSpace::LatentMean && model == nullptr) {
        throw InvalidArgument("select_from_group: latent_mean space needs a model");
    }
    std::vector<Vector> points;
    points.reserve(group.size());
    for (std::size_t id : group) {
        if (id >= anchors.size()) {
            throw InvalidArgument("select_from_group: anchor id " + std::to_string(id) +
                                  " out of range");
        }
        points.push_back(space == DistanceSpace::Pixel ? anchors[id].pixels
                                                       : model->encode(anchors[id]).mean);
    }
    const Matrix d = pairwise_distances(points);

    SelectionResult local;
    switch (method) {
        case SelectionMethod::KDispersion: local = k_dispersion_greedy(d, k); break;
        case SelectionMethod::KCenter: local = k_center_greedy(d, k); break;
        case SelectionMethod::BruteDispersion: local = brute_force_dispersion(d, k); break;
        case SelectionMethod::BruteCenter: local = brute_force_center(d, k); break;
    }
    for (auto& c : local.chosen) {
        c = group[c];
    }
    return local;
}

SelectionResult select_from_group(std::span<const Image> anchors,
                                  std::span<const std::size_t> group, std::size_t k,
                                  SelectionMethod method, DistanceSpace space,
                                  const VaeParams& params) {
    const VaeModel model(params);
    return select_from_group(anchors, group, k, method, space, &model);
}

}  // namespace pxgen
