#pragma once

#include "pxgen/model.hpp"
#include "pxgen/numerics.hpp"

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace pxgen {

enum class SelectionMethod { KDispersion, KCenter, BruteDispersion, BruteCenter };

std::string_view to_string(SelectionMethod m);
SelectionMethod parse_selection_method(std::string_view s);

struct SelectionResult {
    std::vector<std::size_t> chosen;  // in selection order (greedy) or ascending (brute force)
    double objective = 0.0;           // min pairwise distance (dispersion) / covering radius (center)
    SelectionMethod method = SelectionMethod::KDispersion;
};

// Min distance over pairs in `chosen`; 0 when fewer than two points.
double dispersion_objective(const Matrix& d, std::span<const std::size_t> chosen);
// Max over all points of the distance to the nearest chosen point.
double center_objective(const Matrix& d, std::span<const std::size_t> chosen);

// Max-min greedy: start from the farthest pair, then repeatedly add the point
// whose nearest chosen neighbour is farthest. Ties go to the lowest index.
SelectionResult k_dispersion_greedy(const Matrix& d, std::size_t k);

// Farthest-first traversal seeded with the exact 1-center.
SelectionResult k_center_greedy(const Matrix& d, std::size_t k);

// Exhaustive search, n ≤ 20. Returns the lexicographically smallest optimum.
SelectionResult brute_force_dispersion(const Matrix& d, std::size_t k);
SelectionResult brute_force_center(const Matrix& d, std::size_t k);

enum class DistanceSpace { Pixel, LatentMean };

std::string_view to_string(DistanceSpace s);
DistanceSpace parse_distance_space(std::string_view s);

// Selects k representatives from anchors[group]. Returned ids are anchor ids.
SelectionResult select_from_group(std::span<const Image> anchors,
                                  std::span<const std::size_t> group, std::size_t k,
                                  SelectionMethod method, DistanceSpace space,
                                  const GenerativeModel* model = nullptr);

SelectionResult select_from_group(std::span<const Image> anchors,
                                  std::span<const std::size_t> group, std::size_t k,
                                  SelectionMethod method, DistanceSpace space,
                                  const VaeParams& params);

}  // namespace pxgen
