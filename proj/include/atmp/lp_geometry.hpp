#pragma once

#include <cstddef>
#include <string>

#include "atmp/linalg.hpp"
#include "atmp/rng.hpp"

namespace atmp {

enum class NormKind { L1, L2, Linf };

// Feasibility slack for ball-membership checks throughout.
inline constexpr double kFeasibilityTol = 1e-9;

const char* norm_name(NormKind p);
NormKind norm_from_name(const std::string& name);  // "l1" | "l2" | "linf"

// l1 <-> linf, l2 <-> l2.
NormKind dual_norm_kind(NormKind p);

// Throws NumericError on non-finite input.
double norm(const Vec& v, NormKind p);

struct Ball {
    Vec center;
    NormKind kind = NormKind::L2;
    double radius = 0.0;  // >= 0

    bool contains(const Vec& v) const;
};

// Exact Euclidean projection onto the ball. Linf clamps per coordinate, L2
// rescales radially, L1 uses the sort-and-threshold simplex projection in
// O(d log d). Result is feasible within kFeasibilityTol; points already inside
// are returned unchanged.
Vec project_onto_ball(const Vec& v, const Ball& ball);

// step * argmax of <d, grad> over the unit p-ball. Linf: sign(grad) per
// coordinate (0 stays 0). L2: grad normalized, zero gradient gives a zero step.
// L1: mass split over the k largest-|grad| coordinates (ties broken by lowest
// index), sign(grad_i) * step / k each; k = 1 is the true steepest direction.
Vec steepest_ascent_step(const Vec& grad, NormKind p, double step, std::size_t k = 1);

// Uniform sample from the ball. Linf: per-coordinate uniform. L2: Gaussian
// direction scaled by r * U^(1/d). L1: Laplace vector x and z ~ Exp(1) give
// the exact uniform point r * x / (|x|_1 + z). Feasible by construction.
Vec random_point_in_ball(const Ball& ball, Rng& rng);

}  // namespace atmp
