#include "atmp/lp_geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "atmp/errors.hpp"

namespace atmp {

const char* norm_name(NormKind p) {
    switch (p) {
        case NormKind::L1: return "l1";
        case NormKind::L2: return "l2";
        case NormKind::Linf: return "linf";
    }
    return "?";
}

NormKind norm_from_name(const std::string& name) {
    if (name == "l1") return NormKind::L1;
    if (name == "l2") return NormKind::L2;
    if (name == "linf") return NormKind::Linf;
    throw ConfigError("unknown norm '" + name + "' (expected l1, l2 or linf)");
}

NormKind dual_norm_kind(NormKind p) {
    switch (p) {
        case NormKind::L1: return NormKind::Linf;
        case NormKind::L2: return NormKind::L2;
        case NormKind::Linf: return NormKind::L1;
    }
    return NormKind::L2;
}

double norm(const Vec& v, NormKind p) {
    double s = 0.0;
    switch (p) {
        case NormKind::L1:
            for (double x : v) s += std::abs(x);
            break;
        case NormKind::L2:
            for (double x : v) s += x * x;
            s = std::sqrt(s);
            break;
        case NormKind::Linf:
            for (double x : v) s = std::max(s, std::abs(x));
            break;
    }
    if (!std::isfinite(s)) throw NumericError("norm: non-finite input");
    return s;
}

bool Ball::contains(const Vec& v) const {
    return norm(sub(v, center), kind) <= radius + kFeasibilityTol;
}

namespace {

// Projection of a onto the simplex {w : w_i >= 0, sum w_i = r}; a must be
// nonnegative with sum > r. Sort-and-threshold, O(d log d).
Vec project_simplex(const Vec& a, double r) {
    // r == 0 collapses the simplex to the origin; the threshold scan below
    // relies on a strictly positive first prefix term and would skip it.
    if (r == 0.0) return Vec(a.size(), 0.0);
    Vec s = a;
    std::sort(s.begin(), s.end(), std::greater<double>());
    double cum = 0.0;
    double tau = 0.0;
    std::size_t rho = 0;
    for (std::size_t j = 0; j < s.size(); ++j) {
        cum += s[j];
        double t = (cum - r) / static_cast<double>(j + 1);
        if (s[j] - t > 0.0) {
            rho = j + 1;
            tau = t;
        }
    }
    (void)rho;
    Vec w(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) w[i] = std::max(a[i] - tau, 0.0);
    return w;
}

}  // namespace

Vec project_onto_ball(const Vec& v, const Ball& ball) {
    if (v.size() != ball.center.size())
        throw std::invalid_argument("project_onto_ball: dimension mismatch");
    if (ball.radius < 0.0) throw std::invalid_argument("project_onto_ball: negative radius");
    if (!all_finite(v)) throw NumericError("project_onto_ball: non-finite input");

    Vec w = sub(v, ball.center);
    switch (ball.kind) {
        case NormKind::Linf:
            for (double& x : w) x = std::clamp(x, -ball.radius, ball.radius);
            break;
        case NormKind::L2: {
            double n = l2_norm(w);
            if (n > ball.radius) {
                double scale = ball.radius / n;
                for (double& x : w) x *= scale;
            }
            break;
        }
        case NormKind::L1: {
            double n = norm(w, NormKind::L1);
            if (n > ball.radius) {
                Vec a(w.size());
                for (std::size_t i = 0; i < w.size(); ++i) a[i] = std::abs(w[i]);
                Vec p = project_simplex(a, ball.radius);
                for (std::size_t i = 0; i < w.size(); ++i)
                    w[i] = std::copysign(p[i], w[i]);
            }
            break;
        }
    }
    return add(w, ball.center);
}

Vec steepest_ascent_step(const Vec& grad, NormKind p, double step, std::size_t k) {
    if (step < 0.0) throw std::invalid_argument("steepest_ascent_step: negative step");
    if (!all_finite(grad)) throw NumericError("steepest_ascent_step: non-finite gradient");
    Vec d(grad.size(), 0.0);
    switch (p) {
        case NormKind::Linf:
            for (std::size_t i = 0; i < grad.size(); ++i) {
                if (grad[i] > 0.0) d[i] = step;
                else if (grad[i] < 0.0) d[i] = -step;
            }
            break;
        case NormKind::L2: {
            double n = l2_norm(grad);
            if (n > 0.0)
                for (std::size_t i = 0; i < grad.size(); ++i) d[i] = step * grad[i] / n;
            break;
        }
        case NormKind::L1: {
            if (k == 0 || k > grad.size())
                throw std::invalid_argument("steepest_ascent_step: k out of range");
            std::vector<std::size_t> idx(grad.size());
            std::iota(idx.begin(), idx.end(), 0);
            std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
                return std::abs(grad[a]) > std::abs(grad[b]);
            });
            double mass = step / static_cast<double>(k);
            for (std::size_t j = 0; j < k; ++j) {
                std::size_t i = idx[j];
                if (grad[i] > 0.0) d[i] = mass;
                else if (grad[i] < 0.0) d[i] = -mass;
            }
            break;
        }
    }
    return d;
}

Vec random_point_in_ball(const Ball& ball, Rng& rng) {
    if (ball.radius < 0.0) throw std::invalid_argument("random_point_in_ball: negative radius");
    const std::size_t d = ball.center.size();
    Vec w(d, 0.0);
    if (ball.radius > 0.0 && d > 0) {
        switch (ball.kind) {
            case NormKind::Linf:
                for (std::size_t i = 0; i < d; ++i)
                    w[i] = rng.uniform(-ball.radius, ball.radius);
                break;
            case NormKind::L2: {
                double n = 0.0;
                while (n == 0.0) {
                    for (std::size_t i = 0; i < d; ++i) w[i] = rng.normal();
                    n = l2_norm(w);
                }
                double r = ball.radius * std::pow(rng.uniform01(), 1.0 / static_cast<double>(d));
                for (double& x : w) x *= r / n;
                break;
            }
            case NormKind::L1: {
                // Exact uniform sample: Laplace coordinates plus an extra
                // Exp(1) slack variable normalize to the simplex interior.
                double s = 0.0;
                for (std::size_t i = 0; i < d; ++i) {
                    w[i] = rng.laplace();
                    s += std::abs(w[i]);
                }
                double z = rng.exponential();
                double scale = ball.radius / (s + z);
                for (double& x : w) x *= scale;
                break;
            }
        }
    }
    return add(w, ball.center);
}

}  // namespace atmp
