#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "atmp/linalg.hpp"
#include "atmp/rng.hpp"

namespace atmp {

struct Example {
    Vec x;
    double y = 0.0;  // regression target, or integral class index

    int label() const { return static_cast<int>(y); }
};

struct Dataset {
    std::vector<Example> examples;
    int num_classes = 0;  // 0 means regression

    std::size_t size() const { return examples.size(); }
    bool regression() const { return num_classes == 0; }
    std::size_t dim() const { return examples.empty() ? 0 : examples[0].x.size(); }
};

enum class ModelKind { LinearRegression, Logistic, Mlp };
enum class Activation { ReLU, SiLU };

// Flattened-parameter toy models. Layout is per layer: weights row-major
// (out x in), then bias (out). LinearRegression is a single bias-free row,
// params == theta, so the closed-form expressions apply to it verbatim.
struct ToyModel {
    ModelKind kind = ModelKind::LinearRegression;
    std::vector<int> arch;  // {in, hidden..., out}
    Activation activation = Activation::ReLU;
    Vec params;

    int input_dim() const { return arch.front(); }
    int output_dim() const { return arch.back(); }
};

ToyModel make_linear_regression(int dim, const Vec& theta = {});
ToyModel make_logistic(int dim, int classes, std::uint64_t seed);
ToyModel make_mlp(const std::vector<int>& arch, Activation act, std::uint64_t seed);

enum class LossFamily { SquaredError, CrossEntropy };

struct LossKind {
    LossFamily family = LossFamily::SquaredError;
    double label_smoothing = 0.0;  // CrossEntropy only, in [0, 1)
};

// Raw outputs: the prediction for regression, logits for classification.
Vec forward(const ToyModel& m, const Vec& x);

struct LossGrads {
    double value = 0.0;
    Vec wrt_params;
    Vec wrt_input;
};

// One backprop pass; exact gradients (checked against central differences).
LossGrads loss_with_grads(const ToyModel& m, const Example& ex, const LossKind& loss);

double loss_value(const ToyModel& m, const Example& ex, const LossKind& loss);
Vec grad_params(const ToyModel& m, const Example& ex, const LossKind& loss);
Vec grad_input(const ToyModel& m, const Example& ex, const LossKind& loss);

// Soft target vector: 1-gamma on the true class, gamma/(K-1) elsewhere.
Vec smooth_labels(int y, int num_classes, double gamma);

// With probability gamma, replace y by a uniform draw from the other classes.
int apply_label_noise(int y, int num_classes, double gamma, Rng& rng);

// Argmax over outputs; ties resolve to the lowest class index.
int predict_class(const ToyModel& m, const Vec& x);

// [begin, end) parameter range of the last layer (weights + bias); used for
// gradient-norm tracking. The whole vector for LinearRegression.
std::pair<std::size_t, std::size_t> final_layer_span(const ToyModel& m);

}  // namespace atmp
