#pragma once

#include "pxgen/model.hpp"

#include <cstddef>
#include <cstdint>
#include <vector>

namespace pxgen::toolkit {

inline constexpr int kSynthSize = 28;

// Shape parameters for one rendering. Class 0 is a ring, class 1 a slanted bar.
struct SynthShape {
    double cx = 14.0;
    double cy = 14.0;
    double radius = 8.0;      // ring radius / bar half-length
    double aspect = 1.0;      // ring x/y axis ratio
    double thickness = 2.5;
    double angle = 0.0;       // radians; ring axis rotation / bar slant from vertical
};

SynthShape nominal_shape(int class_id);
Image render_shape(int class_id, const SynthShape& shape);

// n deterministic 28×28 images of one class. jitter scales every random
// perturbation; 0 reproduces the nominal shape.
std::vector<Image> synth_dataset(std::size_t n, int class_id, std::uint64_t seed,
                                 double jitter = 1.0);

}  // namespace pxgen::toolkit
