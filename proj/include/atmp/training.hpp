#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "atmp/attacks.hpp"
#include "atmp/models.hpp"

namespace atmp {

enum class StrategyKind { Max, Avg, Msd, Sat, Adt };

const char* strategy_name(StrategyKind s);
StrategyKind strategy_from_name(const std::string& name);

struct LrSchedule {
    enum class Kind { Constant, CyclicPiecewiseLinear };
    Kind kind = Kind::CyclicPiecewiseLinear;
    double peak = 0.1;    // also the value of a Constant schedule
    double mid = 0.005;
    std::array<double, 3> phase_epochs = {40.0, 40.0, 20.0};
};

// Piecewise-linear rate through (0,0) -> (b1,peak) -> (b2,mid) -> (1,0) where
// b1, b2 are the cumulative phase fractions. fraction must lie in [0,1].
double cyclic_lr(double epoch_fraction, const LrSchedule& schedule);

struct SwaState {
    Vec averaged_params;
    double gamma = 0.9;
    int start_epoch = 60;  // 0-based epoch index at which averaging begins
    bool started = false;
};

// Exponential parameter average, a no-op (returns false) before start_epoch.
// The first participating epoch seeds the average with the current params.
bool swa_update(SwaState& state, const Vec& current_params, int epoch);

inline constexpr double kAdtLossFloor = 1e-8;

struct StepWeights {
    Vec alphas;              // per task
    double base_alpha = 0.0;
    bool floored = false;    // some loss was clamped to kAdtLossFloor
};

// Loss-proportional weights: alpha_p = base * (sum losses) / (P * loss_p),
// with each loss clamped below at kAdtLossFloor. Preserves the step budget:
// sum_p alpha_p * loss_p == base * sum_p loss_p.
StepWeights adt_weights(const Vec& losses, double base_alpha);

// params - sum_p (alphas[p] / P) * grads[p].
Vec weighted_update(const Vec& params, const std::vector<Vec>& task_gradients,
                    const StepWeights& weights);

// Mean PGD-attacked loss per mixture spec over the batch.
Vec task_losses(const ToyModel& m, const Dataset& data, const std::vector<std::size_t>& batch,
                const MixtureSpec& mixture, const LossKind& loss, const Rng& rng);

struct StepDiagnostics {
    Vec task_losses;                // mixture order; meaningful where observed
    std::vector<char> task_observed;
    double aggregate_loss = 0.0;    // the strategy's own objective on the batch
    StepWeights weights;
    int sat_choice = -1;
};

// One SGD step with the strategy's loss aggregation:
//   Max  backpropagates each example's worst attack,
//   Avg  averages the P per-task attack gradients,
//   Sat  samples one spec uniformly for the whole batch,
//   Msd  runs the joint per-step-worst PGD,
//   Adt  reweights task gradients by adt_weights(task losses).
// All randomness comes from child streams of rng, arranged so that a
// single-spec mixture makes every strategy produce bitwise-identical updates.
std::pair<Vec, StepDiagnostics> strategy_step(const ToyModel& m, const Dataset& data,
                                              const std::vector<std::size_t>& batch,
                                              const MixtureSpec& mixture, StrategyKind strategy,
                                              double base_alpha, const LossKind& loss,
                                              const Rng& rng);

enum class EarlyStopMetric { Mix, Union };

struct TrainConfig {
    StrategyKind strategy = StrategyKind::Adt;
    int epochs = 100;
    int batch_size = 128;
    LrSchedule lr;
    double momentum = 0.0;      // classical SGD momentum, off by default
    double weight_decay = 0.0;  // off by default
    bool swa = false;
    double swa_gamma = 0.9;
    int swa_start_epoch = 60;
    double label_noise = 0.0;   // classification only, applied once up front
    EarlyStopMetric early_stop_metric = EarlyStopMetric::Mix;
    int eval_every = 1;         // holdout eval cadence in epochs; <= 0: final epoch only
    bool grad_log = true;
    bool clip_alphas = false;   // cap per-task alphas (stability theory mode)
    Vec alpha_caps;             // per mixture spec, used when clip_alphas
    std::uint64_t seed = 1;
};

// Fixed per-norm column order used by trajectory records and exports.
inline constexpr int kNormSlots = 3;
int norm_slot(NormKind kind);  // l1 -> 0, l2 -> 1, linf -> 2

struct EpochRecord {
    int epoch = 0;
    double lr = 0.0;
    std::array<double, kNormSlots> task_loss{};  // zero where absent from the mixture
    double loss_agg = 0.0;
    std::array<double, kNormSlots> gnorm{};      // final-layer block norms
    double gnorm_avg = 0.0;
    double gnorm_wst = 0.0;
    std::array<double, kNormSlots> acc{};        // holdout robust accuracies
    double acc_union = 0.0;
    double acc_mix = 0.0;
    double acc_clean = 0.0;
};

struct TrajectoryRecord {
    std::vector<EpochRecord> epochs;
    bool grad_log = true;
};

struct TrainResult {
    ToyModel final_model;
    ToyModel swa_model;    // = final model when SWA is off or never started
    ToyModel best_model;   // best holdout metric; = final model when never evaluated
    int best_epoch = -1;
    double best_metric = 0.0;
    TrajectoryRecord trajectory;
};

// Shuffled mini-batch training with the cyclic schedule, optional SWA and
// best-checkpoint tracking on the holdout metric. Bitwise deterministic for a
// fixed config. holdout may be empty (no accuracy columns, best = final).
TrainResult train(const Dataset& train_set, const Dataset& holdout, const ToyModel& model,
                  const MixtureSpec& train_mixture, const MixtureSpec& eval_mixture,
                  const TrainConfig& cfg, const LossKind& loss);

}  // namespace atmp
