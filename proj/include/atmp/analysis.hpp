#pragma once

#include <array>
#include <functional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "atmp/attacks.hpp"
#include "atmp/models.hpp"
#include "atmp/training.hpp"

namespace atmp {

struct ParameterBox {
    Vec lo, hi;

    void validate() const;  // matching sizes, hi >= lo, positive total width
    Vec sample(Rng& rng) const;
};

// All constants are sample-based lower bounds of the true values.
struct SmoothnessEstimate {
    double lipschitz = 0.0;
    double grad_lipschitz = 0.0;
    double nonsmooth_slope = 0.0;
    double nonsmooth_eta = 0.0;
    int samples = 0;
    ParameterBox box;
};

// max |f(a)-f(b)| / ||a-b|| over random pairs in the box.
double estimate_lipschitz(const std::function<double(const Vec&)>& f, const ParameterBox& box,
                          int samples, const Rng& rng);

// max ||g(a)-g(b)|| / ||a-b|| over random pairs.
double estimate_grad_lipschitz(const std::function<Vec(const Vec&)>& grad,
                               const ParameterBox& box, int samples, const Rng& rng);

// Affine fit ||g(a)-g(b)|| <= slope * ||a-b|| + eta via the upper envelope:
// pairs are binned by distance, the fit runs through per-bin maxima, and the
// intercept is clamped at 0. Smooth surfaces give eta ~ 0; a gradient jump of
// magnitude J across a kink gives eta ~ J.
std::pair<double, double> estimate_nonsmooth_offset(const std::function<Vec(const Vec&)>& grad,
                                                    const ParameterBox& box, int samples,
                                                    const Rng& rng);

SmoothnessEstimate estimate_smoothness(const std::function<double(const Vec&)>& f,
                                       const std::function<Vec(const Vec&)>& grad,
                                       const ParameterBox& box, int samples, const Rng& rng);

enum class Surrogate { P1, P2, Pinf, Wst, Avg };
const char* surrogate_name(Surrogate s);
Surrogate surrogate_from_name(const std::string& name);

struct LandscapeGrid {
    Vec theta1_axis, theta2_axis;
    Mat values;  // values.at(i, j) = f(theta1_axis[i], theta2_axis[j])
    Surrogate surrogate = Surrogate::Wst;
};

// Closed-form adversarial risk of a d=2 linear-regression instance on a
// symmetric square grid [-theta_range, theta_range]^2. epsilons are indexed
// by norm_slot (l1, l2, linf); wst/avg take the max/mean of the three.
LandscapeGrid landscape_grid(const Mat& X, const Vec& y, Surrogate s,
                             const std::array<double, 3>& epsilons, double theta_range,
                             int resolution);

enum class KinkLine { Theta1Zero, Theta2Zero, DiagEqual, DiagOpposite, Origin };

// Flags gradient-discontinuity lines via perpendicular jump statistics: a
// line is reported when its median jump over the outer half of the line
// exceeds `threshold` times the off-line baseline, measured over the same
// outer positions, and the jump scales linearly with stencil spacing the way
// a gradient discontinuity does (a smooth feature's five-point residual
// grows ~16x when the spacing doubles, a kink's only ~2x). The outer-half
// medians keep point singularities at the center, which every candidate line
// passes through, from masquerading as line kinks; the scale probe rejects
// smooth high-curvature impostors such as the valley of the data residual
// near its least-squares minimizer. Origin is reported only
// for point kinks (a spike at the center with no line flagged). Needs an odd
// resolution >= 201 and a symmetric square grid.
std::set<KinkLine> detect_gradient_discontinuity(const LandscapeGrid& grid,
                                                 double threshold = 10.0);

struct StabilityProblem {
    Dataset train;          // S; S' replaces examples[replace_index]
    Example replacement;
    std::size_t replace_index = 0;
    std::vector<Example> probe;  // the sup-loss-gap set
    ToyModel model0;
    MixtureSpec mixture;
    LossKind loss;
};

struct StabilityOptions {
    StrategyKind strategy = StrategyKind::Avg;
    int T = 500;
    double base_alpha = 0.01;
    bool force = false;  // allow non-convex models (bounds don't apply)
    std::uint64_t seed = 1;
    int lipschitz_pairs = 200;
};

struct StabilityTrace {
    std::vector<double> delta;         // T+1 entries, delta[0] = 0
    std::vector<double> alpha_bar;     // per-step mean applied alpha (max over the two runs)
    std::vector<char> differing_step;  // step sampled the differing index
    double final_loss_gap = 0.0;       // sup over probe of |h_avg(theta1) - h_avg(theta2)|
    double lipschitz_estimate = 0.0;
    double theoretical_bound = 0.0;    // 2 * L^2 * sum_t alpha_bar_t / n
};

// Identical-seed single-example SGD on the neighboring datasets S and S'.
// Both runs consume the same random streams, so parameter trajectories only
// separate at steps that sample the differing index.
StabilityTrace stability_probe(const StabilityProblem& problem, const StabilityOptions& opt);

// Thm.-3-style bias term: B * sum_p |alpha_sw - alpha_p| / alpha_sw with
// alpha_sw = mean(alphas).
double optimization_bias_report(const Vec& alphas, double B_estimate);

struct StepsizeRecommendation {
    double alpha_avg_cap = 0.0;  // P / sum(beta)
    double alpha_sw_cap = 0.0;   // (sum 1/beta) / P, always >= alpha_avg_cap
    double alpha_star = 0.0;     // D sqrt(n) / (L sqrt(T (n + 2T)))
};

StepsizeRecommendation stepsize_recommendation(const Vec& betas, double D, double L, int T, int n);

struct RiskReport {
    double empirical_risk = 0.0;
    double held_out_risk = 0.0;
    double gen_gap = 0.0;          // held_out - empirical
    double opt_gap_vs_best = 0.0;  // empirical(model) - empirical(reference), 0 without reference
};

RiskReport excess_risk_report(const ToyModel& m, const Dataset& train, const Dataset& holdout,
                              const MixtureSpec& mixture, const LossKind& loss,
                              const Vec* reference_params, const Rng& rng);

struct GradNormTrace {
    std::vector<std::array<double, kNormSlots>> per_task;
    std::vector<double> avg;
    std::vector<double> wst;
};

// Requires the trajectory to have been recorded with gradient logging on.
GradNormTrace grad_norm_trace(const TrajectoryRecord& trajectory);

}  // namespace atmp
