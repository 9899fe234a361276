#include "atmp/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "atmp/errors.hpp"

namespace atmp {

void ParameterBox::validate() const {
    if (lo.size() != hi.size() || lo.empty())
        throw std::invalid_argument("parameter box: bad bounds");
    double width = 0.0;
    for (std::size_t i = 0; i < lo.size(); ++i) {
        if (hi[i] < lo[i]) throw std::invalid_argument("parameter box: hi < lo");
        width += hi[i] - lo[i];
    }
    if (!(width > 0.0)) throw std::invalid_argument("parameter box: degenerate");
}

Vec ParameterBox::sample(Rng& rng) const {
    Vec v(lo.size());
    for (std::size_t i = 0; i < lo.size(); ++i) v[i] = rng.uniform(lo[i], hi[i]);
    return v;
}

namespace {

constexpr double kMinPairDist = 1e-12;

}  // namespace

double estimate_lipschitz(const std::function<double(const Vec&)>& f, const ParameterBox& box,
                          int samples, const Rng& rng) {
    box.validate();
    if (samples < 2) throw std::invalid_argument("estimate_lipschitz: samples < 2");
    Rng r = rng.child(stream::kAnalysis, 1);
    double best = 0.0;
    for (int s = 0; s < samples; ++s) {
        Vec a = box.sample(r), b = box.sample(r);
        double d = l2_dist(a, b);
        if (d < kMinPairDist) continue;
        best = std::max(best, std::abs(f(a) - f(b)) / d);
    }
    return best;
}

double estimate_grad_lipschitz(const std::function<Vec(const Vec&)>& grad,
                               const ParameterBox& box, int samples, const Rng& rng) {
    box.validate();
    if (samples < 2) throw std::invalid_argument("estimate_grad_lipschitz: samples < 2");
    Rng r = rng.child(stream::kAnalysis, 2);
    double best = 0.0;
    for (int s = 0; s < samples; ++s) {
        Vec a = box.sample(r), b = box.sample(r);
        double d = l2_dist(a, b);
        if (d < kMinPairDist) continue;
        best = std::max(best, l2_dist(grad(a), grad(b)) / d);
    }
    return best;
}

std::pair<double, double> estimate_nonsmooth_offset(const std::function<Vec(const Vec&)>& grad,
                                                    const ParameterBox& box, int samples,
                                                    const Rng& rng) {
    box.validate();
    if (samples < 2) throw std::invalid_argument("estimate_nonsmooth_offset: samples < 2");
    Rng r = rng.child(stream::kAnalysis, 3);
    std::vector<std::pair<double, double>> pts;  // (distance, gradient gap)
    pts.reserve(static_cast<std::size_t>(samples));
    double dmax = 0.0;
    for (int s = 0; s < samples; ++s) {
        Vec a = box.sample(r), b = box.sample(r);
        double d = l2_dist(a, b);
        if (d < kMinPairDist) continue;
        pts.emplace_back(d, l2_dist(grad(a), grad(b)));
        dmax = std::max(dmax, d);
    }
    if (pts.empty() || dmax <= 0.0) return {0.0, 0.0};

    // Upper envelope: max gap per distance bin, then an affine LS fit through
    // the bin maxima. A plain fit over all pairs would wash out kink jumps,
    // since pairs straddling a kink thin out as distance shrinks.
    constexpr int kBins = 20;
    std::vector<double> bin_max(kBins, -1.0);
    for (const auto& [d, g] : pts) {
        int b = std::min(kBins - 1, static_cast<int>(d / dmax * kBins));
        bin_max[b] = std::max(bin_max[b], g);
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int nb = 0;
    for (int b = 0; b < kBins; ++b) {
        if (bin_max[b] < 0.0) continue;
        double x = (b + 0.5) * dmax / kBins;
        sx += x;
        sy += bin_max[b];
        sxx += x * x;
        sxy += x * bin_max[b];
        ++nb;
    }
    if (nb < 2) return {0.0, std::max(0.0, sy)};
    double denom = nb * sxx - sx * sx;
    double slope = (nb * sxy - sx * sy) / denom;
    double intercept = (sy - slope * sx) / nb;
    return {slope, std::max(0.0, intercept)};
}

SmoothnessEstimate estimate_smoothness(const std::function<double(const Vec&)>& f,
                                       const std::function<Vec(const Vec&)>& grad,
                                       const ParameterBox& box, int samples, const Rng& rng) {
    SmoothnessEstimate est;
    est.lipschitz = estimate_lipschitz(f, box, samples, rng);
    est.grad_lipschitz = estimate_grad_lipschitz(grad, box, samples, rng);
    auto [slope, eta] = estimate_nonsmooth_offset(grad, box, samples, rng);
    est.nonsmooth_slope = slope;
    est.nonsmooth_eta = eta;
    est.samples = samples;
    est.box = box;
    return est;
}

const char* surrogate_name(Surrogate s) {
    switch (s) {
        case Surrogate::P1: return "p1";
        case Surrogate::P2: return "p2";
        case Surrogate::Pinf: return "pinf";
        case Surrogate::Wst: return "wst";
        case Surrogate::Avg: return "avg";
    }
    return "?";
}

Surrogate surrogate_from_name(const std::string& name) {
    if (name == "p1") return Surrogate::P1;
    if (name == "p2") return Surrogate::P2;
    if (name == "pinf") return Surrogate::Pinf;
    if (name == "wst") return Surrogate::Wst;
    if (name == "avg") return Surrogate::Avg;
    throw ConfigError("unknown surrogate '" + name + "'");
}

LandscapeGrid landscape_grid(const Mat& X, const Vec& y, Surrogate s,
                             const std::array<double, 3>& epsilons, double theta_range,
                             int resolution) {
    if (X.cols != 2) throw std::invalid_argument("landscape_grid: needs d = 2");
    if (X.rows != y.size()) throw std::invalid_argument("landscape_grid: X/y mismatch");
    if (resolution < 2) throw std::invalid_argument("landscape_grid: resolution < 2");
    if (!(theta_range > 0.0)) throw std::invalid_argument("landscape_grid: range must be > 0");

    LandscapeGrid grid;
    grid.surrogate = s;
    grid.theta1_axis.resize(static_cast<std::size_t>(resolution));
    for (int i = 0; i < resolution; ++i)
        grid.theta1_axis[static_cast<std::size_t>(i)] =
            -theta_range + 2.0 * theta_range * i / (resolution - 1);
    grid.theta2_axis = grid.theta1_axis;
    grid.values = Mat(static_cast<std::size_t>(resolution), static_cast<std::size_t>(resolution));

    auto value = [&](const Vec& theta) {
        switch (s) {
            case Surrogate::P1:
                return adv_loss_closed_form_linreg(theta, X, y, NormKind::L1, epsilons[0]);
            case Surrogate::P2:
                return adv_loss_closed_form_linreg(theta, X, y, NormKind::L2, epsilons[1]);
            case Surrogate::Pinf:
                return adv_loss_closed_form_linreg(theta, X, y, NormKind::Linf, epsilons[2]);
            case Surrogate::Wst:
            case Surrogate::Avg: {
                double a = adv_loss_closed_form_linreg(theta, X, y, NormKind::L1, epsilons[0]);
                double b = adv_loss_closed_form_linreg(theta, X, y, NormKind::L2, epsilons[1]);
                double c = adv_loss_closed_form_linreg(theta, X, y, NormKind::Linf, epsilons[2]);
                return s == Surrogate::Wst ? std::max({a, b, c}) : (a + b + c) / 3.0;
            }
        }
        return 0.0;
    };

    Vec theta(2);
    for (int i = 0; i < resolution; ++i) {
        theta[0] = grid.theta1_axis[static_cast<std::size_t>(i)];
        for (int j = 0; j < resolution; ++j) {
            theta[1] = grid.theta2_axis[static_cast<std::size_t>(j)];
            grid.values.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = value(theta);
        }
    }
    return grid;
}

namespace {

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
    return v[v.size() / 2];
}

}  // namespace

std::set<KinkLine> detect_gradient_discontinuity(const LandscapeGrid& grid, double threshold) {
    const int N = static_cast<int>(grid.theta1_axis.size());
    if (N < 201 || static_cast<int>(grid.theta2_axis.size()) != N)
        throw std::invalid_argument("detect_gradient_discontinuity: needs a square grid, resolution >= 201");
    if (N % 2 == 0)
        throw std::invalid_argument("detect_gradient_discontinuity: needs an odd resolution");
    for (int i = 0; i < N; ++i) {
        if (std::abs(grid.theta1_axis[i] + grid.theta1_axis[N - 1 - i]) > 1e-9 ||
            std::abs(grid.theta2_axis[i] - grid.theta1_axis[i]) > 1e-9)
            throw std::invalid_argument("detect_gradient_discontinuity: needs a symmetric grid");
    }

    const int c = (N - 1) / 2;
    const int W = 5;        // cells excluded around line crossings
    const int off = N / 4;  // parallel offset for baselines
    const auto& v = grid.values;
    // Symmetric five-point jump statistic perpendicular to the line. The
    // stencil annihilates every smooth Taylor term up to the third derivative
    // (residual ~ f''''h^4), while a gradient jump J at the center still
    // contributes ~ 4Jh, so kinks stand out by orders of magnitude.
    auto sd = [&](int i, int j, int di, int dj) {
        return std::abs(4.0 * (v.at(i + di, j + dj) + v.at(i - di, j - dj)) -
                        (v.at(i + 2 * di, j + 2 * dj) + v.at(i - 2 * di, j - 2 * dj)) -
                        6.0 * v.at(i, j));
    };

    double vmax = 0.0;
    for (double x : v.data) vmax = std::max(vmax, std::abs(x));
    const double floor_stat = 1e-12 * (1.0 + vmax);

    // For each candidate line, three medians over the outer half of the
    // positions along it: the perpendicular jump statistic on the line, the
    // same statistic on parallel off-line tracks (baseline), and the on-line
    // statistic at doubled stencil spacing (scale probe). The outer half
    // avoids the center, which every candidate passes through and where a
    // point singularity leaks a slowly decaying ~1/|s|^3 tangential residual.
    std::vector<double> stat(4, 0.0), base(4, 0.0), wide(4, 0.0);
    {
        std::vector<double> on, on2, off1, off2;
        for (int j = 2; j < N - 2; ++j) {
            if (std::abs(j - c) <= off) continue;  // inner half, blind spot of the center
            on.push_back(sd(c, j, 1, 0));
            on2.push_back(sd(c, j, 2, 0));
            for (int o : {c - off, c + off}) {
                if (std::abs(j - o) <= W || std::abs(j - (2 * c - o)) <= W) continue;
                (o < c ? off1 : off2).push_back(sd(o, j, 1, 0));
            }
        }
        stat[0] = median(on);
        wide[0] = median(on2);
        base[0] = std::max(median(off1), median(off2));
    }
    {
        std::vector<double> on, on2, off1, off2;
        for (int i = 2; i < N - 2; ++i) {
            if (std::abs(i - c) <= off) continue;
            on.push_back(sd(i, c, 0, 1));
            on2.push_back(sd(i, c, 0, 2));
            for (int o : {c - off, c + off}) {
                if (std::abs(i - o) <= W || std::abs(i - (2 * c - o)) <= W) continue;
                (o < c ? off1 : off2).push_back(sd(i, o, 0, 1));
            }
        }
        stat[1] = median(on);
        wide[1] = median(on2);
        base[1] = std::max(median(off1), median(off2));
    }
    {
        // diag theta1 == theta2: cells (k, k), perpendicular (1, -1)
        std::vector<double> on, on2, off1, off2;
        for (int k = 4; k < N - 4; ++k) {
            if (std::abs(k - c) <= off) continue;
            on.push_back(sd(k, k, 1, -1));
            on2.push_back(sd(k, k, 2, -2));
            for (int o : {-off, off}) {
                int i = k + o;
                if (i < 2 || i >= N - 2) continue;
                if (std::abs(i - c) <= W) continue;
                if (std::abs(i + k - 2 * c) <= W) continue;  // near the anti-diagonal
                (o < 0 ? off1 : off2).push_back(sd(i, k, 1, -1));
            }
        }
        stat[2] = median(on);
        wide[2] = median(on2);
        base[2] = std::max(median(off1), median(off2));
    }
    {
        // diag theta1 == -theta2: cells (k, 2c - k), perpendicular (1, 1)
        std::vector<double> on, on2, off1, off2;
        for (int k = 4; k < N - 4; ++k) {
            if (std::abs(k - c) <= off) continue;
            on.push_back(sd(k, 2 * c - k, 1, 1));
            on2.push_back(sd(k, 2 * c - k, 2, 2));
            for (int o : {-off, off}) {
                int i = k + o;
                int j = 2 * c - k;
                if (i < 2 || i >= N - 2) continue;
                if (std::abs(i - c) <= W) continue;
                if (std::abs(i - j) <= W) continue;  // near the main diagonal
                (o < 0 ? off1 : off2).push_back(sd(i, j, 1, 1));
            }
        }
        stat[3] = median(on);
        wide[3] = median(on2);
        base[3] = std::max(median(off1), median(off2));
    }

    // A line is flagged when its jump statistic is significant against the
    // baseline AND scales like a gradient jump: doubling the stencil spacing
    // doubles a kink's statistic (~4Jh) but multiplies any smooth feature's
    // by 16 (~f''''h^4). The scale probe rejects smooth impostors, e.g. the
    // sharp valley of |X theta - y| near its minimizer, which can run close
    // to a candidate line and clear the baseline test over a long stretch.
    const double kScaleCut = 8.0;  // between 2 (kink) and 16 (smooth)
    std::set<KinkLine> found;
    const KinkLine lines[4] = {KinkLine::Theta1Zero, KinkLine::Theta2Zero, KinkLine::DiagEqual,
                               KinkLine::DiagOpposite};
    for (int l = 0; l < 4; ++l)
        if (stat[l] > threshold * std::max(base[l], floor_stat) && wide[l] < kScaleCut * stat[l])
            found.insert(lines[l]);

    if (found.empty()) {
        // Point kink: a center spike with every line quiet.
        double center = std::max({sd(c, c, 1, 0), sd(c, c, 0, 1), sd(c, c, 1, 1), sd(c, c, 1, -1)});
        double base_all = std::max({base[0], base[1], base[2], base[3], floor_stat});
        if (center > threshold * base_all) found.insert(KinkLine::Origin);
    }
    return found;
}

StabilityTrace stability_probe(const StabilityProblem& problem, const StabilityOptions& opt) {
    problem.mixture.validate();
    if (problem.train.size() == 0) throw std::invalid_argument("stability_probe: empty dataset");
    if (problem.replace_index >= problem.train.size())
        throw std::invalid_argument("stability_probe: replace_index out of range");
    if (problem.probe.empty()) throw std::invalid_argument("stability_probe: empty probe set");
    if (problem.model0.kind == ModelKind::Mlp && !opt.force)
        throw std::invalid_argument("stability_probe: non-convex model (set force to override)");
    if (opt.T < 0) throw std::invalid_argument("stability_probe: negative T");

    const std::size_t n = problem.train.size();
    Dataset s2 = problem.train;
    s2.examples[problem.replace_index] = problem.replacement;

    ToyModel m1 = problem.model0;
    ToyModel m2 = problem.model0;
    Rng root(opt.seed);

    StabilityTrace trace;
    trace.delta.reserve(static_cast<std::size_t>(opt.T) + 1);
    trace.delta.push_back(0.0);

    Vec box_lo = m1.params, box_hi = m1.params;
    auto widen = [&](const Vec& p) {
        for (std::size_t i = 0; i < p.size(); ++i) {
            box_lo[i] = std::min(box_lo[i], p[i]);
            box_hi[i] = std::max(box_hi[i], p[i]);
        }
    };

    for (int t = 0; t < opt.T; ++t) {
        std::size_t pick =
            root.child(stream::kStabilityPick, static_cast<std::uint64_t>(t)).uniform_index(n);
        Rng step_rng = root.child(stream::kStabilityRun, static_cast<std::uint64_t>(t));
        std::vector<std::size_t> batch{pick};

        auto [p1, d1] = strategy_step(m1, problem.train, batch, problem.mixture, opt.strategy,
                                      opt.base_alpha, problem.loss, step_rng);
        auto [p2, d2] = strategy_step(m2, s2, batch, problem.mixture, opt.strategy,
                                      opt.base_alpha, problem.loss, step_rng);
        m1.params = std::move(p1);
        m2.params = std::move(p2);
        widen(m1.params);
        widen(m2.params);

        auto mean_alpha = [](const StepWeights& w) {
            double s = 0.0;
            for (double a : w.alphas) s += a;
            return s / static_cast<double>(w.alphas.size());
        };
        trace.alpha_bar.push_back(std::max(mean_alpha(d1.weights), mean_alpha(d2.weights)));
        trace.differing_step.push_back(pick == problem.replace_index ? 1 : 0);
        trace.delta.push_back(l2_dist(m1.params, m2.params));
    }

    // L-hat over a box covering both trajectories, probing h_avg as a function
    // of theta at fixed z. Shared attack streams keep the pairs comparable.
    ParameterBox box{box_lo, box_hi};
    for (std::size_t i = 0; i < box.lo.size(); ++i) {
        double margin = 0.1 * (box.hi[i] - box.lo[i]) + 1e-3;
        box.lo[i] -= margin;
        box.hi[i] += margin;
    }
    Rng lrng = root.child(stream::kAnalysis, 7);
    ToyModel probe_model = problem.model0;
    const std::size_t zs = std::min<std::size_t>(problem.probe.size(), 16);
    double lhat = 0.0;
    for (int s = 0; s < opt.lipschitz_pairs; ++s) {
        Vec a = box.sample(lrng), b = box.sample(lrng);
        double d = l2_dist(a, b);
        if (d < kMinPairDist) continue;
        const Example& z = problem.probe[static_cast<std::size_t>(s) % zs];
        Rng arng = root.child(stream::kAnalysis, 8, static_cast<std::uint64_t>(s));
        probe_model.params = a;
        double fa = h_avg(probe_model, z, problem.mixture, problem.loss, arng);
        probe_model.params = b;
        double fb = h_avg(probe_model, z, problem.mixture, problem.loss, arng);
        lhat = std::max(lhat, std::abs(fa - fb) / d);
    }
    trace.lipschitz_estimate = lhat;

    double gap = 0.0;
    for (std::size_t i = 0; i < problem.probe.size(); ++i) {
        Rng arng = root.child(stream::kEval, i);
        probe_model.params = m1.params;
        double f1 = h_avg(probe_model, problem.probe[i], problem.mixture, problem.loss, arng);
        probe_model.params = m2.params;
        double f2 = h_avg(probe_model, problem.probe[i], problem.mixture, problem.loss, arng);
        gap = std::max(gap, std::abs(f1 - f2));
    }
    trace.final_loss_gap = gap;

    double alpha_sum = 0.0;
    for (double a : trace.alpha_bar) alpha_sum += a;
    trace.theoretical_bound = 2.0 * lhat * lhat * alpha_sum / static_cast<double>(n);
    return trace;
}

double optimization_bias_report(const Vec& alphas, double B_estimate) {
    if (alphas.empty()) throw std::invalid_argument("optimization_bias_report: empty alphas");
    double sw = 0.0;
    for (double a : alphas) sw += a;
    sw /= static_cast<double>(alphas.size());
    if (!(sw > 0.0)) throw std::invalid_argument("optimization_bias_report: mean alpha <= 0");
    double dev = 0.0;
    for (double a : alphas) dev += std::abs(sw - a);
    return B_estimate * dev / sw;
}

StepsizeRecommendation stepsize_recommendation(const Vec& betas, double D, double L, int T,
                                               int n) {
    if (betas.empty()) throw std::invalid_argument("stepsize_recommendation: empty betas");
    if (T < 1 || n < 1) throw std::invalid_argument("stepsize_recommendation: T, n must be >= 1");
    if (!(L > 0.0)) throw std::invalid_argument("stepsize_recommendation: L must be > 0");
    double sum_beta = 0.0, sum_inv = 0.0;
    for (double b : betas) {
        if (!(b > 0.0)) throw std::invalid_argument("stepsize_recommendation: beta must be > 0");
        sum_beta += b;
        sum_inv += 1.0 / b;
    }
    const double P = static_cast<double>(betas.size());
    StepsizeRecommendation rec;
    rec.alpha_avg_cap = P / sum_beta;
    rec.alpha_sw_cap = sum_inv / P;
    rec.alpha_star = D * std::sqrt(static_cast<double>(n)) /
                     (L * std::sqrt(static_cast<double>(T) * (static_cast<double>(n) + 2.0 * T)));
    return rec;
}

RiskReport excess_risk_report(const ToyModel& m, const Dataset& train, const Dataset& holdout,
                              const MixtureSpec& mixture, const LossKind& loss,
                              const Vec* reference_params, const Rng& rng) {
    mixture.validate();
    if (train.size() == 0 || holdout.size() == 0)
        throw std::invalid_argument("excess_risk_report: empty dataset");

    auto mean_risk = [&](const ToyModel& model, const Dataset& data) {
        double s = 0.0;
        for (std::size_t i = 0; i < data.size(); ++i)
            s += h_avg(model, data.examples[i], mixture, loss, rng.child(stream::kAnalysis, i));
        return s / static_cast<double>(data.size());
    };

    RiskReport rep;
    rep.empirical_risk = mean_risk(m, train);
    rep.held_out_risk = mean_risk(m, holdout);
    rep.gen_gap = rep.held_out_risk - rep.empirical_risk;
    if (reference_params) {
        ToyModel ref = m;
        if (reference_params->size() != m.params.size())
            throw std::invalid_argument("excess_risk_report: reference params size mismatch");
        ref.params = *reference_params;
        rep.opt_gap_vs_best = rep.empirical_risk - mean_risk(ref, train);
    }
    return rep;
}

GradNormTrace grad_norm_trace(const TrajectoryRecord& trajectory) {
    if (!trajectory.grad_log)
        throw ConfigError("grad_norm_trace: trajectory recorded without gradient logging");
    GradNormTrace t;
    t.per_task.reserve(trajectory.epochs.size());
    for (const EpochRecord& r : trajectory.epochs) {
        t.per_task.push_back(r.gnorm);
        t.avg.push_back(r.gnorm_avg);
        t.wst.push_back(r.gnorm_wst);
    }
    return t;
}

}  // namespace atmp
