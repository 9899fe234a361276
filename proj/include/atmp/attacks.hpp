#pragma once

#include <vector>

#include "atmp/lp_geometry.hpp"
#include "atmp/models.hpp"

namespace atmp {

struct PerturbationSpec {
    NormKind kind = NormKind::Linf;
    double epsilon = 0.0;    // >= 0
    int steps = 1;           // >= 1
    double step_size = 0.0;  // > 0
    int restarts = 1;        // total starts; start 0 is always the zero perturbation
    int l1_k = 1;            // coordinates touched per L1 ascent step

    void validate() const;
};

// Default budget per norm: eps 12 / 0.5 / 0.03, 50 steps, inner step sizes
// 1 / 0.05 / 0.003 for l1 / l2 / linf.
PerturbationSpec default_spec(NormKind kind);

struct MixtureSpec {
    std::vector<PerturbationSpec> specs;  // nonempty, kinds distinct

    std::size_t size() const { return specs.size(); }
    void validate() const;
};

struct AttackResult {
    Example adversarial;
    Vec delta;
    double achieved_loss = 0.0;
    int spec_index = 0;  // which spec's ball the perturbation is feasible for
};

// Multi-start PGD maximizing the loss over the spec's ball. Start 0 is the
// zero perturbation, further starts sample the ball uniformly; the best
// iterate ever visited is returned, so achieved_loss >= clean loss.
// Deterministic given (model, example, spec, rng key).
AttackResult pgd_attack(const ToyModel& m, const Example& ex, const PerturbationSpec& spec,
                        const LossKind& loss, const Rng& rng);

// Joint PGD over all balls in the mixture: each inner step takes one candidate
// step per spec and keeps the loss-maximizing one. steps/restarts are the max
// over specs; random starts pick a spec uniformly, then sample its ball.
// With a single spec this is exactly pgd_attack, same random stream included.
AttackResult msd_attack(const ToyModel& m, const Example& ex, const MixtureSpec& mixture,
                        const LossKind& loss, const Rng& rng);

// One pgd_attack per spec, each on its own child stream (index = spec position).
std::vector<AttackResult> attack_all(const ToyModel& m, const Example& ex,
                                     const MixtureSpec& mixture, const LossKind& loss,
                                     const Rng& rng);

// Closed-form adversarial risk for bias-free linear regression under per-row
// perturbations: (||X theta - y||_2 + sqrt(n) * eps * ||theta||_dual)^2.
// This is an upper bound on the separable per-row maximum, tight exactly when
// all residual magnitudes are equal (in particular for n = 1).
double adv_loss_closed_form_linreg(const Vec& theta, const Mat& X, const Vec& y, NormKind p,
                                   double epsilon);

// Worst attack across the mixture (max achieved loss, ties to the lowest index).
AttackResult h_wst(const ToyModel& m, const Example& ex, const MixtureSpec& mixture,
                   const LossKind& loss, const Rng& rng);

// Mean of the per-spec attack losses.
double h_avg(const ToyModel& m, const Example& ex, const MixtureSpec& mixture,
             const LossKind& loss, const Rng& rng);

// x + mean(deltas), label unchanged.
Example mixup_adversarial_example(const Example& ex, const std::vector<Vec>& deltas);

struct RobustReport {
    double clean_acc = 0.0;
    std::vector<double> per_attack_acc;
    double union_acc = 0.0;
    double mix_acc = 0.0;
};

// Classification only. An example counts as correct under an attack when both
// the clean and the attacked prediction match the label (the zero perturbation
// is always available to the adversary). union = correct under every attack
// simultaneously; mix = arithmetic mean of the per-attack accuracies.
RobustReport robust_evaluate(const ToyModel& m, const Dataset& data, const MixtureSpec& mixture,
                             const LossKind& loss, const Rng& rng);

}  // namespace atmp
