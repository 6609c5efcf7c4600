#include "pxgen/toolkit/synth.hpp"

#include "pxgen/errors.hpp"
#include "pxgen/rng.hpp"

#include <algorithm>
#include <cmath>

namespace pxgen::toolkit {

namespace {

void check_class(int class_id) {
    if (class_id != 0 && class_id != 1) {
        throw InvalidArgument("synth: unknown class_id " + std::to_string(class_id) +
                              " (0 = ring, 1 = bar)");
    }
}

// Linear ramp over one pixel around the stroke edge.
double coverage(double dist_to_stroke_centre, double thickness) {
    return std::clamp(0.5 * thickness + 0.5 - dist_to_stroke_centre, 0.0, 1.0);
}

}  // namespace

SynthShape nominal_shape(int class_id) {
    check_class(class_id);
    SynthShape s;
    if (class_id == 1) {
        s.radius = 9.0;
        s.thickness = 2.5;
        s.angle = 0.25;
    }
    return s;
}

Image render_shape(int class_id, const SynthShape& s) {
    check_class(class_id);
    std::vector<double> px(kSynthSize * kSynthSize, 0.0);
    const double c = std::cos(s.angle);
    const double sn = std::sin(s.angle);
    for (int y = 0; y < kSynthSize; ++y) {
        for (int x = 0; x < kSynthSize; ++x) {
            const double dx = x + 0.5 - s.cx;
            const double dy = y + 0.5 - s.cy;
            double d = 0.0;
            if (class_id == 0) {
                // rotate into the ellipse frame, then measure radial offset
                const double u = (c * dx + sn * dy) / s.aspect;
                const double v = -sn * dx + c * dy;
                d = std::abs(std::hypot(u, v) - s.radius);
            } else {
                // segment along (sin a, -cos a) through the centre
                const double ax = sn;
                const double ay = -c;
                const double t = std::clamp(dx * ax + dy * ay, -s.radius, s.radius);
                d = std::hypot(dx - t * ax, dy - t * ay);
            }
            px[static_cast<std::size_t>(y) * kSynthSize + x] = coverage(d, s.thickness);
        }
    }
    return Image(kSynthSize, kSynthSize, std::move(px));
}

std::vector<Image> synth_dataset(std::size_t n, int class_id, std::uint64_t seed, double jitter) {
    check_class(class_id);
    if (n < 1) {
        throw InvalidArgument("synth: n must be at least 1");
    }
    if (!(jitter >= 0.0) || !std::isfinite(jitter)) {
        throw InvalidArgument("synth: jitter must be finite and non-negative");
    }
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(class_id)));
    const SynthShape base = nominal_shape(class_id);
    std::vector<Image> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        SynthShape s = base;
        s.cx += jitter * rng.uniform(-1.5, 1.5);
        s.cy += jitter * rng.uniform(-1.5, 1.5);
        s.radius += jitter * rng.uniform(-1.5, 1.5);
        s.thickness += jitter * rng.uniform(-0.7, 0.7);
        if (class_id == 0) {
            s.aspect += jitter * rng.uniform(-0.25, 0.1);
            s.angle += jitter * rng.uniform(-0.5, 0.5);
        } else {
            s.angle += jitter * rng.uniform(-0.3, 0.3);
        }
        out.push_back(render_shape(class_id, s));
    }
    return out;
}

}  // namespace pxgen::toolkit
