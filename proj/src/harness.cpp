#include "atmp/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <thread>

#include "atmp/analysis.hpp"
#include "atmp/datasets.hpp"
#include "atmp/errors.hpp"

namespace atmp {

namespace {

// Harness-private stream tags, disjoint from the library stream namespace.
constexpr std::uint64_t kEvalTag = 901;
constexpr std::uint64_t kRiskTag = 902;
constexpr std::uint64_t kAttackTag = 903;
constexpr std::uint64_t kStabilityTag = 904;
constexpr std::uint64_t kSmoothTag = 905;

struct Instance {
    Dataset train;
    Dataset holdout;
    Vec theta_true;  // linreg generators only
};

// Train and holdout sets share the regression target / class geometry and
// differ only in their sampling streams.
Instance build_data(const ExperimentConfig& cfg) {
    Instance inst;
    Rng droot(cfg.data_seed);
    if (cfg.data.kind == DatasetSpec::Kind::Csv) {
        inst.train = generate_dataset(cfg.data, droot.child(0)).data;
        inst.holdout = inst.train;
        return inst;
    }
    GeneratedData tr = generate_dataset(cfg.data, droot.child(0));
    DatasetSpec ev_spec = cfg.data;
    if (cfg.eval_n > 0) ev_spec.n = cfg.eval_n;
    ev_spec.theta_true = tr.theta_true;
    GeneratedData ev = generate_dataset(ev_spec, droot.child(1));
    inst.train = std::move(tr.data);
    inst.holdout = std::move(ev.data);
    inst.theta_true = std::move(tr.theta_true);
    return inst;
}

ToyModel build_model(const ExperimentConfig& cfg, const Dataset& data) {
    const int d = static_cast<int>(data.dim());
    ToyModel m;
    switch (cfg.model_kind) {
        case ModelKind::LinearRegression:
            if (!data.regression())
                throw ConfigError("model.kind linreg needs regression data (data.kind = linreg)");
            m = make_linear_regression(d);
            break;
        case ModelKind::Logistic:
            if (data.regression())
                throw ConfigError("model.kind logistic needs classification data");
            m = make_logistic(d, data.num_classes, cfg.model_seed);
            break;
        case ModelKind::Mlp: {
            if (data.regression()) throw ConfigError("model.kind mlp needs classification data");
            std::vector<int> arch;
            arch.push_back(d);
            for (int h : cfg.hidden) arch.push_back(h);
            arch.push_back(data.num_classes);
            m = make_mlp(arch, cfg.activation, cfg.model_seed);
            break;
        }
    }
    if (!cfg.params_file.empty()) {
        Vec p = params_from_text(read_text_file(cfg.params_file));
        if (p.size() != m.params.size())
            throw ConfigError("model.params_file '" + cfg.params_file + "': expected " +
                              std::to_string(m.params.size()) + " values, got " +
                              std::to_string(p.size()));
        m.params = std::move(p);
    }
    return m;
}

void check_loss_compatible(const ExperimentConfig& cfg) {
    bool reg_model = cfg.model_kind == ModelKind::LinearRegression;
    bool reg_loss = cfg.loss.family == LossFamily::SquaredError;
    if (reg_model != reg_loss)
        throw ConfigError(reg_model ? "model.kind linreg needs loss.kind = squared"
                                    : "classification models need loss.kind = cross_entropy");
}

void put_metric(RunResult& res, KvConfig& summary, const std::string& key, double v) {
    if (!std::isfinite(v)) throw NumericError("non-finite metric: " + key);
    res.metrics[key] = v;
    summary.set_double(key, v);
}

// One Table-style accuracy row: "<name> = clean,l1,l2,linf,union,mix".
void add_row(RunResult& res, KvConfig& summary, const std::string& name, const RobustReport& rep,
             const MixtureSpec& mixture) {
    std::array<double, 6> row = summary_row(rep, mixture);
    static const char* cols[6] = {"clean", "l1", "l2", "linf", "union", "mix"};
    for (int i = 0; i < 6; ++i) {
        if (!std::isfinite(row[i]))
            throw NumericError("non-finite metric: " + name + "." + cols[i]);
        res.metrics[name + "." + std::string(cols[i])] = row[i];
    }
    summary.set(name, format_row(std::vector<double>(row.begin(), row.end())));
}

void write_artifact(RunResult& res, const std::string& path, const std::string& content) {
    write_text_file(path, content);
    res.artifacts.push_back(path);
}

const char* kink_name(KinkLine k) {
    switch (k) {
        case KinkLine::Theta1Zero: return "theta1_zero";
        case KinkLine::Theta2Zero: return "theta2_zero";
        case KinkLine::DiagEqual: return "diag_equal";
        case KinkLine::DiagOpposite: return "diag_opposite";
        case KinkLine::Origin: return "origin";
    }
    return "?";
}

void regression_matrices(const Dataset& data, Mat& X, Vec& y) {
    const std::size_t n = data.size();
    const std::size_t d = data.dim();
    X.rows = n;
    X.cols = d;
    X.data.resize(n * d);
    y.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) X.data[i * d + j] = data.examples[i].x[j];
        y[i] = data.examples[i].y;
    }
}

double sign_of(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

void cmd_train(const ExperimentConfig& cfg, RunResult& res, KvConfig& summary) {
    check_loss_compatible(cfg);
    Instance inst = build_data(cfg);
    ToyModel model = build_model(cfg, inst.train);
    MixtureSpec eval_mix = cfg.eval_mixture();
    TrainResult tr =
        train(inst.train, inst.holdout, model, cfg.mixture, eval_mix, cfg.train, cfg.loss);
    res.trajectory = tr.trajectory;
    write_artifact(res, res.run_dir + "/trajectory.csv", trajectory_to_csv(tr.trajectory));
    write_artifact(res, res.run_dir + "/params_final.txt", params_to_text(tr.final_model.params));
    if (cfg.train.swa)
        write_artifact(res, res.run_dir + "/params_swa.txt", params_to_text(tr.swa_model.params));
    write_artifact(res, res.run_dir + "/params_best.txt", params_to_text(tr.best_model.params));

    Rng root(cfg.seed);
    if (!inst.holdout.regression()) {
        summary.set("columns", kSummaryColumns);
        add_row(res, summary, "final",
                robust_evaluate(tr.final_model, inst.holdout, eval_mix, cfg.loss,
                                root.child(kEvalTag, 0)),
                eval_mix);
        if (cfg.train.swa)
            add_row(res, summary, "swa",
                    robust_evaluate(tr.swa_model, inst.holdout, eval_mix, cfg.loss,
                                    root.child(kEvalTag, 1)),
                    eval_mix);
        add_row(res, summary, "best",
                robust_evaluate(tr.best_model, inst.holdout, eval_mix, cfg.loss,
                                root.child(kEvalTag, 2)),
                eval_mix);
    } else if (!inst.theta_true.empty()) {
        put_metric(res, summary, "final.theta_error",
                   l2_dist(tr.final_model.params, inst.theta_true));
    }
    if (!tr.trajectory.epochs.empty())
        put_metric(res, summary, "final.loss_agg", tr.trajectory.epochs.back().loss_agg);
    put_metric(res, summary, "best.epoch", tr.best_epoch);
    put_metric(res, summary, "best.metric", tr.best_metric);

    RiskReport risk = excess_risk_report(tr.final_model, inst.train, inst.holdout, eval_mix,
                                         cfg.loss, nullptr, root.child(kRiskTag));
    put_metric(res, summary, "risk.train", risk.empirical_risk);
    put_metric(res, summary, "risk.holdout", risk.held_out_risk);
    put_metric(res, summary, "risk.gap", risk.gen_gap);
}

void cmd_evaluate(const ExperimentConfig& cfg, RunResult& res, KvConfig& summary) {
    if (cfg.params_file.empty()) throw ConfigError("evaluate needs model.params_file");
    check_loss_compatible(cfg);
    Instance inst = build_data(cfg);
    ToyModel model = build_model(cfg, inst.train);
    MixtureSpec eval_mix = cfg.eval_mixture();
    Rng root(cfg.seed);
    if (!inst.holdout.regression()) {
        summary.set("columns", kSummaryColumns);
        add_row(res, summary, "final",
                robust_evaluate(model, inst.holdout, eval_mix, cfg.loss, root.child(kEvalTag, 0)),
                eval_mix);
    }
    RiskReport risk = excess_risk_report(model, inst.train, inst.holdout, eval_mix, cfg.loss,
                                         nullptr, root.child(kRiskTag));
    put_metric(res, summary, "risk.train", risk.empirical_risk);
    put_metric(res, summary, "risk.holdout", risk.held_out_risk);
    put_metric(res, summary, "risk.gap", risk.gen_gap);
}

void cmd_attack(const ExperimentConfig& cfg, RunResult& res, KvConfig& summary) {
    check_loss_compatible(cfg);
    Instance inst = build_data(cfg);
    ToyModel model = build_model(cfg, inst.train);
    MixtureSpec eval_mix = cfg.eval_mixture();
    const Dataset& data = inst.holdout;
    const double n = static_cast<double>(data.size());
    Rng root(cfg.seed);

    bool classify = !data.regression();
    double clean_correct = 0.0;
    if (classify) {
        for (const Example& ex : data.examples)
            if (predict_class(model, ex.x) == ex.label()) clean_correct += 1.0;
        put_metric(res, summary, "clean_acc", clean_correct / n);
    }

    std::string csv = "norm,epsilon,mean_loss,max_loss,mean_delta_norm,success_rate\n";
    for (std::size_t si = 0; si < eval_mix.specs.size(); ++si) {
        const PerturbationSpec& spec = eval_mix.specs[si];
        double sum_loss = 0.0, max_loss = 0.0, sum_delta = 0.0, flips = 0.0;
        for (std::size_t i = 0; i < data.size(); ++i) {
            const Example& ex = data.examples[i];
            AttackResult r = pgd_attack(model, ex, spec, cfg.loss, root.child(kAttackTag, si, i));
            sum_loss += r.achieved_loss;
            if (i == 0 || r.achieved_loss > max_loss) max_loss = r.achieved_loss;
            sum_delta += norm(r.delta, spec.kind);
            if (classify && predict_class(model, ex.x) == ex.label() &&
                predict_class(model, r.adversarial.x) != ex.label())
                flips += 1.0;
        }
        double success = classify && clean_correct > 0.0 ? flips / clean_correct : 0.0;
        std::string prefix = "attack." + std::string(norm_name(spec.kind)) + ".";
        put_metric(res, summary, prefix + "mean_loss", sum_loss / n);
        put_metric(res, summary, prefix + "max_loss", max_loss);
        put_metric(res, summary, prefix + "mean_delta", sum_delta / n);
        put_metric(res, summary, prefix + "success_rate", success);
        csv += norm_name(spec.kind);
        csv += ",";
        csv += format_row({spec.epsilon, sum_loss / n, max_loss, sum_delta / n, success});
        csv += "\n";
    }
    write_artifact(res, res.run_dir + "/attacks.csv", csv);
}

void cmd_landscape(const ExperimentConfig& cfg, RunResult& res, KvConfig& summary) {
    if (cfg.data.kind != DatasetSpec::Kind::Linreg || cfg.data.d != 2)
        throw ConfigError("landscape needs data.kind = linreg and data.d = 2");
    Instance inst = build_data(cfg);
    Mat X;
    Vec y;
    regression_matrices(inst.train, X, y);
    std::array<double, 3> eps{};
    for (const PerturbationSpec& spec : cfg.mixture.specs)
        eps[norm_slot(spec.kind)] = spec.epsilon;
    LandscapeGrid grid = landscape_grid(X, y, cfg.surrogate, eps, cfg.landscape_range,
                                        cfg.landscape_resolution);
    std::set<KinkLine> kinks = detect_gradient_discontinuity(grid, cfg.kink_threshold);
    write_artifact(res, res.run_dir + "/landscape.csv", landscape_to_csv(grid));
    summary.set("surrogate", surrogate_name(cfg.surrogate));
    std::vector<std::string> found;
    for (KinkLine line : {KinkLine::Theta1Zero, KinkLine::Theta2Zero, KinkLine::DiagEqual,
                          KinkLine::DiagOpposite, KinkLine::Origin}) {
        bool hit = kinks.count(line) != 0;
        put_metric(res, summary, "kink." + std::string(kink_name(line)), hit ? 1.0 : 0.0);
        if (hit) found.push_back(kink_name(line));
    }
    summary.set_strings("kinks", found);
}

void cmd_stability(const ExperimentConfig& cfg, RunResult& res, KvConfig& summary) {
    check_loss_compatible(cfg);
    if (cfg.model_kind == ModelKind::Mlp && !cfg.stability_force)
        throw ConfigError(
            "stability needs a convex model (linreg or logistic); set stability.force to "
            "override");
    if (cfg.stability_trials < 1) throw ConfigError("stability.trials must be >= 1");
    if (cfg.data.kind == DatasetSpec::Kind::Csv)
        throw ConfigError("stability resamples data; csv datasets are not supported");

    Rng droot(cfg.data_seed);
    Rng root(cfg.seed);
    std::string csv = "trial,delta_final,loss_gap,lipschitz,bound,violated\n";
    std::string trace_csv = "trial,step,delta,alpha_bar,differing\n";
    double sum_delta = 0.0, sum_gap = 0.0, sum_bound = 0.0, sum_lip = 0.0;
    int violations = 0;
    for (int t = 0; t < cfg.stability_trials; ++t) {
        std::uint64_t tu = static_cast<std::uint64_t>(t);
        GeneratedData base = generate_dataset(cfg.data, droot.child(10, tu));
        DatasetSpec pool_spec = cfg.data;
        pool_spec.n = std::max(8, cfg.data.classes);
        pool_spec.theta_true = base.theta_true;
        GeneratedData pool = generate_dataset(pool_spec, droot.child(11, tu));
        DatasetSpec probe_spec = cfg.data;
        probe_spec.n = std::max(1, cfg.stability_probe);
        probe_spec.theta_true = base.theta_true;
        GeneratedData probe = generate_dataset(probe_spec, droot.child(12, tu));

        StabilityProblem prob;
        prob.train = std::move(base.data);
        Rng pick = root.child(kStabilityTag, tu);
        prob.replacement = pool.data.examples[pick.uniform_index(pool.data.size())];
        prob.replace_index = pick.uniform_index(prob.train.size());
        prob.probe = probe.data.examples;
        prob.model0 = build_model(cfg, prob.train);
        prob.mixture = cfg.mixture;
        prob.loss = cfg.loss;

        StabilityOptions opt;
        opt.strategy = cfg.stability_strategy;
        opt.T = cfg.stability_T;
        opt.base_alpha = cfg.stability_alpha;
        opt.force = cfg.stability_force;
        opt.seed = root.child(kStabilityTag, tu, 99).key();
        opt.lipschitz_pairs = cfg.smoothness_samples;

        StabilityTrace trace = stability_probe(prob, opt);
        bool violated = trace.final_loss_gap > trace.theoretical_bound;
        csv += std::to_string(t);
        csv += ",";
        csv += format_row({trace.delta.back(), trace.final_loss_gap, trace.lipschitz_estimate,
                           trace.theoretical_bound, violated ? 1.0 : 0.0});
        csv += "\n";
        for (std::size_t s = 0; s < trace.delta.size(); ++s) {
            double abar = s > 0 ? trace.alpha_bar[s - 1] : 0.0;
            double diff = s > 0 && trace.differing_step[s - 1] ? 1.0 : 0.0;
            trace_csv += std::to_string(t);
            trace_csv += ",";
            trace_csv += std::to_string(s);
            trace_csv += ",";
            trace_csv += format_row({trace.delta[s], abar, diff});
            trace_csv += "\n";
        }
        sum_delta += trace.delta.back();
        sum_gap += trace.final_loss_gap;
        sum_bound += trace.theoretical_bound;
        sum_lip += trace.lipschitz_estimate;
        violations += violated ? 1 : 0;
    }
    const double trials = static_cast<double>(cfg.stability_trials);
    write_artifact(res, res.run_dir + "/stability.csv", csv);
    write_artifact(res, res.run_dir + "/delta_trace.csv", trace_csv);
    put_metric(res, summary, "stability.trials", trials);
    put_metric(res, summary, "stability.mean_delta", sum_delta / trials);
    put_metric(res, summary, "stability.mean_gap", sum_gap / trials);
    put_metric(res, summary, "stability.mean_bound", sum_bound / trials);
    put_metric(res, summary, "stability.mean_lipschitz", sum_lip / trials);
    put_metric(res, summary, "stability.violations", violations);
}

void cmd_smoothness(const ExperimentConfig& cfg, RunResult& res, KvConfig& summary) {
    if (cfg.data.kind != DatasetSpec::Kind::Linreg)
        throw ConfigError("smoothness probes the closed-form regression surfaces; needs "
                          "data.kind = linreg");
    Instance inst = build_data(cfg);
    Mat X;
    Vec y;
    regression_matrices(inst.train, X, y);
    const std::size_t d = X.cols;

    ParameterBox box;
    box.lo.assign(d, -cfg.smoothness_box);
    box.hi.assign(d, cfg.smoothness_box);

    auto make_f = [&X, &y](NormKind kind, double epsv) {
        double n = static_cast<double>(X.rows);
        return [&X, &y, kind, epsv, n](const Vec& th) {
            return adv_loss_closed_form_linreg(th, X, y, kind, epsv) / n;
        };
    };
    // Subgradient of ((||X th - y|| + sqrt(n) eps ||th||_dual)^2) / n.
    auto make_grad = [&X, &y](NormKind kind, double epsv) {
        double n = static_cast<double>(X.rows);
        return [&X, &y, kind, epsv, n](const Vec& th) {
            Vec r = sub(matvec(X, th), y);
            double base = l2_norm(r);
            NormKind dual = dual_norm_kind(kind);
            double q = norm(th, dual);
            double root = base + std::sqrt(n) * epsv * q;
            Vec g(th.size(), 0.0);
            if (base > 0.0) {
                for (std::size_t j = 0; j < th.size(); ++j) {
                    double acc = 0.0;
                    for (std::size_t i = 0; i < X.rows; ++i) acc += X.at(i, j) * r[i];
                    g[j] = acc / base;
                }
            }
            Vec dq(th.size(), 0.0);
            switch (dual) {
                case NormKind::Linf: {
                    std::size_t jmax = 0;
                    for (std::size_t j = 1; j < th.size(); ++j)
                        if (std::abs(th[j]) > std::abs(th[jmax])) jmax = j;
                    dq[jmax] = sign_of(th[jmax]);
                    break;
                }
                case NormKind::L2:
                    if (q > 0.0)
                        for (std::size_t j = 0; j < th.size(); ++j) dq[j] = th[j] / q;
                    break;
                case NormKind::L1:
                    for (std::size_t j = 0; j < th.size(); ++j) dq[j] = sign_of(th[j]);
                    break;
            }
            for (std::size_t j = 0; j < th.size(); ++j)
                g[j] = 2.0 * root * (g[j] + std::sqrt(n) * epsv * dq[j]) / n;
            return g;
        };
    };

    Rng root(cfg.seed);
    std::vector<std::function<double(const Vec&)>> fs;
    std::vector<std::function<Vec(const Vec&)>> gs;
    Vec betas;
    double max_lip = 0.0;
    for (std::size_t p = 0; p < cfg.mixture.specs.size(); ++p) {
        const PerturbationSpec& spec = cfg.mixture.specs[p];
        fs.push_back(make_f(spec.kind, spec.epsilon));
        gs.push_back(make_grad(spec.kind, spec.epsilon));
        SmoothnessEstimate est = estimate_smoothness(fs.back(), gs.back(), box,
                                                     cfg.smoothness_samples, root.child(kSmoothTag, p));
        std::string prefix = "smoothness." + std::string(norm_name(spec.kind)) + ".";
        put_metric(res, summary, prefix + "lipschitz", est.lipschitz);
        put_metric(res, summary, prefix + "beta", est.grad_lipschitz);
        put_metric(res, summary, prefix + "slope", est.nonsmooth_slope);
        put_metric(res, summary, prefix + "eta", est.nonsmooth_eta);
        betas.push_back(est.grad_lipschitz);
        max_lip = std::max(max_lip, est.lipschitz);
    }

    auto f_wst = [&fs](const Vec& th) {
        double best = fs[0](th);
        for (std::size_t p = 1; p < fs.size(); ++p) best = std::max(best, fs[p](th));
        return best;
    };
    auto g_wst = [&fs, &gs](const Vec& th) {
        std::size_t win = 0;
        double best = fs[0](th);
        for (std::size_t p = 1; p < fs.size(); ++p) {
            double v = fs[p](th);
            if (v > best) {
                best = v;
                win = p;
            }
        }
        return gs[win](th);
    };
    auto f_avg = [&fs](const Vec& th) {
        double s = 0.0;
        for (const auto& f : fs) s += f(th);
        return s / static_cast<double>(fs.size());
    };
    auto g_avg = [&gs](const Vec& th) {
        Vec s(th.size(), 0.0);
        for (const auto& g : gs) axpy(1.0, g(th), s);
        for (double& v : s) v /= static_cast<double>(gs.size());
        return s;
    };
    SmoothnessEstimate est_wst =
        estimate_smoothness(f_wst, g_wst, box, cfg.smoothness_samples, root.child(kSmoothTag, 100));
    SmoothnessEstimate est_avg =
        estimate_smoothness(f_avg, g_avg, box, cfg.smoothness_samples, root.child(kSmoothTag, 101));
    for (auto [name, est] : {std::pair<const char*, const SmoothnessEstimate*>{"wst", &est_wst},
                             {"avg", &est_avg}}) {
        std::string prefix = "smoothness." + std::string(name) + ".";
        put_metric(res, summary, prefix + "lipschitz", est->lipschitz);
        put_metric(res, summary, prefix + "beta", est->grad_lipschitz);
        put_metric(res, summary, prefix + "slope", est->nonsmooth_slope);
        put_metric(res, summary, prefix + "eta", est->nonsmooth_eta);
    }

    double diameter = 2.0 * cfg.smoothness_box * std::sqrt(static_cast<double>(d));
    StepsizeRecommendation rec = stepsize_recommendation(betas, diameter, std::max(max_lip, 1e-12),
                                                         cfg.stability_T, cfg.data.n);
    put_metric(res, summary, "alpha.avg_cap", rec.alpha_avg_cap);
    put_metric(res, summary, "alpha.sw_cap", rec.alpha_sw_cap);
    put_metric(res, summary, "alpha.star", rec.alpha_star);
}

void cmd_suite(const ExperimentConfig& cfg, RunResult& res, KvConfig& summary) {
    std::vector<RunResult> members = run_suite_members(cfg, res.run_dir);
    int failures = 0;
    for (std::size_t i = 0; i < members.size(); ++i) {
        const RunResult& m = members[i];
        std::string prefix = "member." + std::to_string(i) + ".";
        summary.set(prefix + "config", cfg.suite_members[i]);
        summary.set(prefix + "ok", m.ok ? "true" : "false");
        summary.set(prefix + "exit", std::to_string(m.exit_code));
        if (!m.run_dir.empty()) summary.set(prefix + "dir", m.run_dir);
        if (!m.ok) {
            summary.set(prefix + "error", m.error);
            ++failures;
            if (res.exit_code == 0) res.exit_code = m.exit_code;
        }
    }
    put_metric(res, summary, "suite.members", static_cast<double>(members.size()));
    put_metric(res, summary, "suite.failures", static_cast<double>(failures));
    if (failures > 0) {
        res.ok = false;
        res.error = std::to_string(failures) + " suite member(s) failed";
    }
}

}  // namespace

std::string default_output_root() {
    const char* env = std::getenv("ATMP_OUTPUT_ROOT");
    if (env && *env) return env;
    return "runs";
}

std::string resolve_run_dir(const ExperimentConfig& cfg) {
    std::string root = cfg.output_dir.empty() ? default_output_root() : cfg.output_dir;
    return root + "/" + cfg.name;
}

ExperimentConfig parse_config(const KvConfig& kv) {
    ExperimentConfig cfg = ExperimentConfig::from_kv(kv);
    std::vector<std::string> leftover = kv.unconsumed();
    if (!leftover.empty()) {
        std::string msg = "unknown config key(s):";
        for (const std::string& k : leftover) msg += " '" + k + "'";
        throw ConfigError(msg);
    }
    return cfg;
}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e)) return 2;
    if (dynamic_cast<const NumericError*>(&e)) return 3;
    if (dynamic_cast<const IoError*>(&e)) return 4;
    if (dynamic_cast<const std::invalid_argument*>(&e)) return 2;
    return 1;
}

RunResult run_experiment(const ExperimentConfig& cfg) {
    auto t0 = std::chrono::steady_clock::now();
    RunResult res;
    res.command = cfg.command;
    res.run_dir = resolve_run_dir(cfg);
    std::error_code ec;
    std::filesystem::create_directories(res.run_dir, ec);
    if (ec) throw IoError("cannot create run directory " + res.run_dir + ": " + ec.message());

    res.config_echo = cfg.to_kv();
    write_artifact(res, res.run_dir + "/config.cfg", res.config_echo.serialize());

    KvConfig summary;
    summary.set("run.name", cfg.name);
    summary.set("command", command_name(cfg.command));
    switch (cfg.command) {
        case Command::Train: cmd_train(cfg, res, summary); break;
        case Command::Evaluate: cmd_evaluate(cfg, res, summary); break;
        case Command::Attack: cmd_attack(cfg, res, summary); break;
        case Command::Landscape: cmd_landscape(cfg, res, summary); break;
        case Command::Stability: cmd_stability(cfg, res, summary); break;
        case Command::Smoothness: cmd_smoothness(cfg, res, summary); break;
        case Command::Suite: cmd_suite(cfg, res, summary); break;
    }
    res.summary_text = summary.serialize();
    write_artifact(res, res.run_dir + "/summary.txt", res.summary_text);
    res.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

std::vector<RunResult> run_suite_members(const ExperimentConfig& suite_cfg,
                                         const std::string& suite_dir) {
    const std::vector<std::string>& paths = suite_cfg.suite_members;
    std::vector<RunResult> results(paths.size());
    if (paths.empty()) return results;

    std::vector<ExperimentConfig> cfgs(paths.size());
    std::vector<char> runnable(paths.size(), 0);
    std::map<std::string, std::size_t> dirs;
    for (std::size_t i = 0; i < paths.size(); ++i) {
        try {
            KvConfig kv = KvConfig::load(paths[i]);
            if (!kv.contains("run.name"))
                kv.set("run.name", std::filesystem::path(paths[i]).stem().string());
            ExperimentConfig mc = parse_config(kv);
            if (mc.command == Command::Suite)
                throw ConfigError("nested suites are not supported: " + paths[i]);
            if (mc.output_dir.empty()) mc.output_dir = suite_dir;
            std::string dir = resolve_run_dir(mc);
            auto [it, fresh] = dirs.emplace(dir, i);
            if (!fresh)
                throw ConfigError("run directory collides with member " +
                                  std::to_string(it->second) + ": " + dir);
            cfgs[i] = std::move(mc);
            runnable[i] = 1;
        } catch (const std::exception& e) {
            results[i].ok = false;
            results[i].error = e.what();
            results[i].exit_code = exit_code_for(e);
        }
    }

    int jobs = suite_cfg.suite_jobs > 0
                   ? suite_cfg.suite_jobs
                   : static_cast<int>(std::thread::hardware_concurrency());
    if (jobs < 1) jobs = 1;
    jobs = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(jobs), paths.size()));

    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= paths.size()) return;
            if (!runnable[i]) continue;
            try {
                results[i] = run_experiment(cfgs[i]);
            } catch (const std::exception& e) {
                results[i] = RunResult{};
                results[i].command = cfgs[i].command;
                results[i].ok = false;
                results[i].error = e.what();
                results[i].exit_code = exit_code_for(e);
            }
        }
    };
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(jobs));
        for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (std::thread& th : pool) th.join();
    }
    return results;
}

}  // namespace atmp
