#include "atmp/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "atmp/errors.hpp"

namespace atmp {

const char* strategy_name(StrategyKind s) {
    switch (s) {
        case StrategyKind::Max: return "max";
        case StrategyKind::Avg: return "avg";
        case StrategyKind::Msd: return "msd";
        case StrategyKind::Sat: return "sat";
        case StrategyKind::Adt: return "adt";
    }
    return "?";
}

StrategyKind strategy_from_name(const std::string& name) {
    if (name == "max") return StrategyKind::Max;
    if (name == "avg") return StrategyKind::Avg;
    if (name == "msd") return StrategyKind::Msd;
    if (name == "sat") return StrategyKind::Sat;
    if (name == "adt") return StrategyKind::Adt;
    throw ConfigError("unknown strategy '" + name + "'");
}

int norm_slot(NormKind kind) {
    switch (kind) {
        case NormKind::L1: return 0;
        case NormKind::L2: return 1;
        case NormKind::Linf: return 2;
    }
    return 0;
}

double cyclic_lr(double epoch_fraction, const LrSchedule& schedule) {
    if (!(epoch_fraction >= 0.0 && epoch_fraction <= 1.0))
        throw std::invalid_argument("cyclic_lr: fraction outside [0,1]");
    if (schedule.kind == LrSchedule::Kind::Constant) return schedule.peak;
    double total = schedule.phase_epochs[0] + schedule.phase_epochs[1] + schedule.phase_epochs[2];
    if (!(total > 0.0)) throw std::invalid_argument("cyclic_lr: empty schedule");
    double b1 = schedule.phase_epochs[0] / total;
    double b2 = (schedule.phase_epochs[0] + schedule.phase_epochs[1]) / total;
    double xs[4] = {0.0, b1, b2, 1.0};
    double ys[4] = {0.0, schedule.peak, schedule.mid, 0.0};
    for (int s = 0; s < 3; ++s) {
        if (epoch_fraction <= xs[s + 1]) {
            double span = xs[s + 1] - xs[s];
            if (span <= 0.0) continue;  // zero-length phase
            double t = (epoch_fraction - xs[s]) / span;
            return ys[s] + t * (ys[s + 1] - ys[s]);
        }
    }
    return 0.0;
}

bool swa_update(SwaState& state, const Vec& current_params, int epoch) {
    if (state.gamma < 0.0 || state.gamma > 1.0)
        throw std::invalid_argument("swa_update: gamma outside [0,1]");
    if (epoch < state.start_epoch) return false;
    if (!state.started) {
        state.averaged_params = current_params;
        state.started = true;
        return true;
    }
    if (state.averaged_params.size() != current_params.size())
        throw std::invalid_argument("swa_update: parameter size changed");
    for (std::size_t i = 0; i < current_params.size(); ++i)
        state.averaged_params[i] =
            state.gamma * state.averaged_params[i] + (1.0 - state.gamma) * current_params[i];
    return true;
}

StepWeights adt_weights(const Vec& losses, double base_alpha) {
    if (losses.empty()) throw std::invalid_argument("adt_weights: empty losses");
    if (base_alpha < 0.0) throw std::invalid_argument("adt_weights: negative base alpha");
    StepWeights w;
    w.base_alpha = base_alpha;
    Vec clamped = losses;
    for (double& l : clamped) {
        if (!(l > kAdtLossFloor)) {
            l = kAdtLossFloor;
            w.floored = true;
        }
    }
    double total = 0.0;
    for (double l : clamped) total += l;
    const double P = static_cast<double>(clamped.size());
    w.alphas.resize(clamped.size());
    for (std::size_t p = 0; p < clamped.size(); ++p)
        w.alphas[p] = base_alpha * (total / (P * clamped[p]));
    return w;
}

Vec weighted_update(const Vec& params, const std::vector<Vec>& task_gradients,
                    const StepWeights& weights) {
    if (task_gradients.empty()) throw std::invalid_argument("weighted_update: no gradients");
    if (weights.alphas.size() != task_gradients.size())
        throw std::invalid_argument("weighted_update: weight/gradient count mismatch");
    Vec out = params;
    const double P = static_cast<double>(task_gradients.size());
    for (std::size_t p = 0; p < task_gradients.size(); ++p) {
        if (task_gradients[p].size() != params.size())
            throw std::invalid_argument("weighted_update: gradient dim mismatch");
        axpy(-(weights.alphas[p] / P), task_gradients[p], out);
    }
    return out;
}

namespace {

Rng example_stream(const Rng& rng, std::size_t j) { return rng.child(stream::kExample, j); }

void check_batch(const Dataset& data, const std::vector<std::size_t>& batch) {
    if (batch.empty()) throw std::invalid_argument("empty batch");
    for (std::size_t i : batch)
        if (i >= data.size()) throw std::invalid_argument("batch index out of range");
}

struct StepPlan {
    std::vector<Vec> gradients;  // paired with weights.alphas, applied via weighted_update
    StepDiagnostics diag;
};

// Mean parameter gradient over attacked examples, accumulated in batch order.
struct GradAccum {
    Vec sum;
    std::size_t n = 0;
    void add(const Vec& g) {
        if (sum.empty()) sum.assign(g.size(), 0.0);
        axpy(1.0, g, sum);
        ++n;
    }
    Vec mean() const {
        Vec m = sum;
        for (double& v : m) v /= static_cast<double>(n);
        return m;
    }
};

StepPlan plan_step(const ToyModel& m, const Dataset& data, const std::vector<std::size_t>& batch,
                   const MixtureSpec& mixture, StrategyKind strategy, double base_alpha,
                   const LossKind& loss, const Rng& rng, const Vec* alpha_caps) {
    mixture.validate();
    check_batch(data, batch);
    const std::size_t P = mixture.size();
    const double B = static_cast<double>(batch.size());

    StepPlan plan;
    plan.diag.task_losses.assign(P, 0.0);
    plan.diag.task_observed.assign(P, 0);
    plan.diag.weights.base_alpha = base_alpha;

    switch (strategy) {
        case StrategyKind::Max:
        case StrategyKind::Avg:
        case StrategyKind::Adt: {
            std::vector<GradAccum> per_task(P);
            GradAccum winner;
            Vec loss_sum(P, 0.0);
            double max_sum = 0.0;
            for (std::size_t j = 0; j < batch.size(); ++j) {
                const Example& ex = data.examples[batch[j]];
                auto results = attack_all(m, ex, mixture, loss, example_stream(rng, j));
                std::size_t best = 0;
                for (std::size_t p = 0; p < P; ++p) {
                    loss_sum[p] += results[p].achieved_loss;
                    if (results[p].achieved_loss > results[best].achieved_loss) best = p;
                }
                if (strategy == StrategyKind::Max) {
                    winner.add(grad_params(m, results[best].adversarial, loss));
                    max_sum += results[best].achieved_loss;
                } else {
                    for (std::size_t p = 0; p < P; ++p)
                        per_task[p].add(grad_params(m, results[p].adversarial, loss));
                }
            }
            for (std::size_t p = 0; p < P; ++p) {
                plan.diag.task_losses[p] = loss_sum[p] / B;
                plan.diag.task_observed[p] = 1;
            }
            if (strategy == StrategyKind::Max) {
                plan.gradients.push_back(winner.mean());
                plan.diag.weights.alphas = {base_alpha};
                plan.diag.aggregate_loss = max_sum / B;
            } else {
                for (std::size_t p = 0; p < P; ++p) plan.gradients.push_back(per_task[p].mean());
                if (strategy == StrategyKind::Adt) {
                    plan.diag.weights = adt_weights(plan.diag.task_losses, base_alpha);
                } else {
                    plan.diag.weights.alphas.assign(P, base_alpha);
                }
                double agg = 0.0;
                for (std::size_t p = 0; p < P; ++p) agg += plan.diag.task_losses[p];
                plan.diag.aggregate_loss = agg / static_cast<double>(P);
            }
            break;
        }
        case StrategyKind::Sat: {
            std::size_t choice = P == 1 ? 0 : rng.child(stream::kSat).uniform_index(P);
            GradAccum acc;
            double sum = 0.0;
            for (std::size_t j = 0; j < batch.size(); ++j) {
                const Example& ex = data.examples[batch[j]];
                AttackResult r = pgd_attack(m, ex, mixture.specs[choice], loss,
                                            example_stream(rng, j).child(stream::kSpecAttack, choice));
                sum += r.achieved_loss;
                acc.add(grad_params(m, r.adversarial, loss));
            }
            plan.gradients.push_back(acc.mean());
            plan.diag.weights.alphas = {base_alpha};
            plan.diag.sat_choice = static_cast<int>(choice);
            plan.diag.task_losses[choice] = sum / B;
            plan.diag.task_observed[choice] = 1;
            plan.diag.aggregate_loss = sum / B;
            break;
        }
        case StrategyKind::Msd: {
            GradAccum acc;
            Vec loss_sum(P, 0.0);
            std::vector<std::size_t> counts(P, 0);
            double sum = 0.0;
            for (std::size_t j = 0; j < batch.size(); ++j) {
                const Example& ex = data.examples[batch[j]];
                AttackResult r = msd_attack(m, ex, mixture, loss,
                                            example_stream(rng, j).child(stream::kSpecAttack, 0));
                sum += r.achieved_loss;
                acc.add(grad_params(m, r.adversarial, loss));
                loss_sum[static_cast<std::size_t>(r.spec_index)] += r.achieved_loss;
                ++counts[static_cast<std::size_t>(r.spec_index)];
            }
            plan.gradients.push_back(acc.mean());
            plan.diag.weights.alphas = {base_alpha};
            for (std::size_t p = 0; p < P; ++p) {
                if (counts[p] > 0) {
                    plan.diag.task_losses[p] = loss_sum[p] / static_cast<double>(counts[p]);
                    plan.diag.task_observed[p] = 1;
                }
            }
            plan.diag.aggregate_loss = sum / B;
            break;
        }
    }

    if (alpha_caps) {
        if (alpha_caps->size() != P) throw std::invalid_argument("alpha caps size mismatch");
        if (plan.diag.weights.alphas.size() == P) {
            for (std::size_t p = 0; p < P; ++p)
                plan.diag.weights.alphas[p] = std::min(plan.diag.weights.alphas[p], (*alpha_caps)[p]);
        } else {
            // composite-gradient strategies cap at the most conservative task cap
            double cap = *std::min_element(alpha_caps->begin(), alpha_caps->end());
            for (double& a : plan.diag.weights.alphas) a = std::min(a, cap);
        }
    }
    return plan;
}

}  // namespace

Vec task_losses(const ToyModel& m, const Dataset& data, const std::vector<std::size_t>& batch,
                const MixtureSpec& mixture, const LossKind& loss, const Rng& rng) {
    mixture.validate();
    check_batch(data, batch);
    Vec sums(mixture.size(), 0.0);
    for (std::size_t j = 0; j < batch.size(); ++j) {
        auto results = attack_all(m, data.examples[batch[j]], mixture, loss, example_stream(rng, j));
        for (std::size_t p = 0; p < results.size(); ++p) sums[p] += results[p].achieved_loss;
    }
    for (double& s : sums) s /= static_cast<double>(batch.size());
    return sums;
}

std::pair<Vec, StepDiagnostics> strategy_step(const ToyModel& m, const Dataset& data,
                                              const std::vector<std::size_t>& batch,
                                              const MixtureSpec& mixture, StrategyKind strategy,
                                              double base_alpha, const LossKind& loss,
                                              const Rng& rng) {
    StepPlan plan = plan_step(m, data, batch, mixture, strategy, base_alpha, loss, rng, nullptr);
    Vec params = weighted_update(m.params, plan.gradients, plan.diag.weights);
    return {std::move(params), std::move(plan.diag)};
}

namespace {

void eval_epoch(const ToyModel& m, const Dataset& holdout, const MixtureSpec& eval_mixture,
                const LossKind& loss, const Rng& rng, EpochRecord& rec) {
    RobustReport rep = robust_evaluate(m, holdout, eval_mixture, loss, rng);
    rec.acc = {0.0, 0.0, 0.0};
    for (std::size_t p = 0; p < eval_mixture.size(); ++p)
        rec.acc[norm_slot(eval_mixture.specs[p].kind)] = rep.per_attack_acc[p];
    rec.acc_union = rep.union_acc;
    rec.acc_mix = rep.mix_acc;
    rec.acc_clean = rep.clean_acc;
}

void probe_grad_norms(const ToyModel& m, const Dataset& data, std::size_t probe_size,
                      const MixtureSpec& mixture, const LossKind& loss, const Rng& rng,
                      EpochRecord& rec) {
    const std::size_t P = mixture.size();
    const auto [lo, hi] = final_layer_span(m);
    std::vector<GradAccum> per_task(P);
    GradAccum winner;
    for (std::size_t j = 0; j < probe_size; ++j) {
        auto results = attack_all(m, data.examples[j], mixture, loss, example_stream(rng, j));
        std::size_t best = 0;
        for (std::size_t p = 0; p < P; ++p) {
            per_task[p].add(grad_params(m, results[p].adversarial, loss));
            if (results[p].achieved_loss > results[best].achieved_loss) best = p;
        }
        winner.add(grad_params(m, results[best].adversarial, loss));
    }
    auto block_norm = [&](const Vec& g) {
        double s = 0.0;
        for (std::size_t i = lo; i < hi; ++i) s += g[i] * g[i];
        return std::sqrt(s);
    };
    Vec avg;
    for (std::size_t p = 0; p < P; ++p) {
        Vec g = per_task[p].mean();
        rec.gnorm[norm_slot(mixture.specs[p].kind)] = block_norm(g);
        if (avg.empty()) avg.assign(g.size(), 0.0);
        axpy(1.0 / static_cast<double>(P), g, avg);
    }
    rec.gnorm_avg = block_norm(avg);
    rec.gnorm_wst = block_norm(winner.mean());
}

}  // namespace

TrainResult train(const Dataset& train_set, const Dataset& holdout, const ToyModel& model,
                  const MixtureSpec& train_mixture, const MixtureSpec& eval_mixture,
                  const TrainConfig& cfg, const LossKind& loss) {
    train_mixture.validate();
    if (cfg.epochs < 0) throw std::invalid_argument("train: negative epochs");
    if (cfg.batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
    if (train_set.size() == 0) throw std::invalid_argument("train: empty dataset");

    Rng root(cfg.seed);
    Dataset working = train_set;
    if (cfg.label_noise > 0.0 && !working.regression()) {
        for (std::size_t i = 0; i < working.size(); ++i) {
            Rng r = root.child(stream::kLabelNoise, i);
            working.examples[i].y = apply_label_noise(working.examples[i].label(),
                                                      working.num_classes, cfg.label_noise, r);
        }
    }

    TrainResult out;
    out.final_model = model;
    ToyModel& m = out.final_model;

    const std::size_t n = working.size();
    const std::size_t num_batches = (n + cfg.batch_size - 1) / cfg.batch_size;
    const bool can_eval = holdout.size() > 0 && !holdout.regression() && m.output_dim() >= 2;

    SwaState swa;
    swa.gamma = cfg.swa_gamma;
    swa.start_epoch = cfg.swa_start_epoch;

    Vec velocity;
    double best_metric = -std::numeric_limits<double>::infinity();
    Vec best_params = m.params;
    int best_epoch = -1;

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    out.trajectory.grad_log = cfg.grad_log;
    for (int e = 0; e < cfg.epochs; ++e) {
        // Fisher-Yates on the epoch's own stream.
        Rng shuffle_rng = root.child(stream::kShuffle, static_cast<std::uint64_t>(e));
        std::iota(order.begin(), order.end(), 0);
        for (std::size_t i = n; i > 1; --i)
            std::swap(order[i - 1], order[shuffle_rng.uniform_index(i)]);

        EpochRecord rec;
        rec.epoch = e;
        Vec loss_sums(train_mixture.size(), 0.0);
        std::vector<std::size_t> loss_counts(train_mixture.size(), 0);
        double agg_sum = 0.0;

        for (std::size_t b = 0; b < num_batches; ++b) {
            std::size_t begin = b * cfg.batch_size;
            std::size_t end = std::min(n, begin + cfg.batch_size);
            std::vector<std::size_t> batch(order.begin() + begin, order.begin() + end);

            double frac = (e + static_cast<double>(b + 1) / num_batches) / cfg.epochs;
            double alpha = cyclic_lr(std::min(frac, 1.0), cfg.lr);

            Rng step_rng = root.child(stream::kStep, static_cast<std::uint64_t>(e), b);
            StepPlan plan = plan_step(m, working, batch, train_mixture, cfg.strategy, alpha, loss,
                                      step_rng, cfg.clip_alphas ? &cfg.alpha_caps : nullptr);

            Vec direction(m.params.size(), 0.0);
            const double P = static_cast<double>(plan.gradients.size());
            for (std::size_t p = 0; p < plan.gradients.size(); ++p)
                axpy(plan.diag.weights.alphas[p] / P, plan.gradients[p], direction);
            if (cfg.weight_decay > 0.0) axpy(alpha * cfg.weight_decay, m.params, direction);
            if (cfg.momentum > 0.0) {
                if (velocity.empty()) velocity.assign(m.params.size(), 0.0);
                for (std::size_t i = 0; i < velocity.size(); ++i)
                    velocity[i] = cfg.momentum * velocity[i] + direction[i];
                axpy(-1.0, velocity, m.params);
            } else {
                axpy(-1.0, direction, m.params);
            }
            if (!all_finite(m.params)) throw NumericError("train: parameters diverged");

            for (std::size_t p = 0; p < train_mixture.size(); ++p) {
                if (plan.diag.task_observed[p]) {
                    loss_sums[p] += plan.diag.task_losses[p];
                    ++loss_counts[p];
                }
            }
            agg_sum += plan.diag.aggregate_loss;
        }

        rec.lr = cyclic_lr(static_cast<double>(e + 1) / cfg.epochs, cfg.lr);
        for (std::size_t p = 0; p < train_mixture.size(); ++p)
            if (loss_counts[p] > 0)
                rec.task_loss[norm_slot(train_mixture.specs[p].kind)] =
                    loss_sums[p] / static_cast<double>(loss_counts[p]);
        rec.loss_agg = agg_sum / static_cast<double>(num_batches);

        if (cfg.grad_log) {
            probe_grad_norms(m, working, std::min<std::size_t>(n, cfg.batch_size), train_mixture,
                             loss, root.child(stream::kProbe, static_cast<std::uint64_t>(e)), rec);
        }

        if (cfg.swa) swa_update(swa, m.params, e);

        bool eval_now = can_eval && ((cfg.eval_every > 0 && e % cfg.eval_every == 0) ||
                                     e == cfg.epochs - 1);
        if (eval_now) {
            eval_epoch(m, holdout, eval_mixture, loss,
                       root.child(stream::kEval, static_cast<std::uint64_t>(e)), rec);
        } else if (!out.trajectory.epochs.empty()) {
            const EpochRecord& prev = out.trajectory.epochs.back();
            rec.acc = prev.acc;
            rec.acc_union = prev.acc_union;
            rec.acc_mix = prev.acc_mix;
            rec.acc_clean = prev.acc_clean;
        }

        double metric = eval_now ? (cfg.early_stop_metric == EarlyStopMetric::Mix ? rec.acc_mix
                                                                                  : rec.acc_union)
                                 : -std::numeric_limits<double>::infinity();
        if (!can_eval) metric = -rec.loss_agg;  // regression: lower aggregate loss is better
        if (metric > best_metric) {
            best_metric = metric;
            best_params = m.params;
            best_epoch = e;
        }

        out.trajectory.epochs.push_back(rec);
    }

    out.swa_model = m;
    if (cfg.swa && swa.started) out.swa_model.params = swa.averaged_params;

    out.best_model = m;
    if (best_epoch >= 0) {
        out.best_model.params = best_params;
        out.best_epoch = best_epoch;
        out.best_metric = best_metric;
    } else {
        out.best_epoch = cfg.epochs - 1;
        out.best_metric = 0.0;
    }
    return out;
}

}  // namespace atmp
