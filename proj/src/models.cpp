#include "atmp/models.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "atmp/errors.hpp"

namespace atmp {

namespace {

std::size_t param_count(const std::vector<int>& arch, bool bias) {
    std::size_t n = 0;
    for (std::size_t l = 1; l < arch.size(); ++l) {
        n += static_cast<std::size_t>(arch[l]) * arch[l - 1];
        if (bias) n += arch[l];
    }
    return n;
}

void check_arch(const std::vector<int>& arch) {
    if (arch.size() < 2) throw std::invalid_argument("model arch needs >= 2 layers");
    for (int w : arch)
        if (w <= 0) throw std::invalid_argument("model arch widths must be positive");
}

// Uniform weights in [-1/sqrt(fan_in), 1/sqrt(fan_in)], zero bias.
Vec init_params(const std::vector<int>& arch, std::uint64_t seed) {
    Rng rng(seed);
    Vec p(param_count(arch, true));
    std::size_t off = 0;
    for (std::size_t l = 1; l < arch.size(); ++l) {
        int fan_in = arch[l - 1], fan_out = arch[l];
        double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (int i = 0; i < fan_out * fan_in; ++i) p[off++] = rng.uniform(-bound, bound);
        for (int i = 0; i < fan_out; ++i) p[off++] = 0.0;
    }
    return p;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double activate(double z, Activation a) {
    if (a == Activation::ReLU) return z > 0.0 ? z : 0.0;
    return z * sigmoid(z);
}

// ReLU' at 0 is taken as 0.
double activate_grad(double z, Activation a) {
    if (a == Activation::ReLU) return z > 0.0 ? 1.0 : 0.0;
    double s = sigmoid(z);
    return s * (1.0 + z * (1.0 - s));
}

bool has_bias(const ToyModel& m) { return m.kind != ModelKind::LinearRegression; }

}  // namespace

ToyModel make_linear_regression(int dim, const Vec& theta) {
    if (dim <= 0) throw std::invalid_argument("make_linear_regression: dim must be positive");
    ToyModel m;
    m.kind = ModelKind::LinearRegression;
    m.arch = {dim, 1};
    if (theta.empty()) {
        m.params.assign(static_cast<std::size_t>(dim), 0.0);
    } else {
        if (theta.size() != static_cast<std::size_t>(dim))
            throw std::invalid_argument("make_linear_regression: theta size mismatch");
        m.params = theta;
    }
    return m;
}

ToyModel make_logistic(int dim, int classes, std::uint64_t seed) {
    if (dim <= 0 || classes < 2) throw std::invalid_argument("make_logistic: bad shape");
    ToyModel m;
    m.kind = ModelKind::Logistic;
    m.arch = {dim, classes};
    m.params = init_params(m.arch, seed);
    return m;
}

ToyModel make_mlp(const std::vector<int>& arch, Activation act, std::uint64_t seed) {
    check_arch(arch);
    if (arch.size() < 3) throw std::invalid_argument("make_mlp: needs at least one hidden layer");
    ToyModel m;
    m.kind = ModelKind::Mlp;
    m.arch = arch;
    m.activation = act;
    m.params = init_params(arch, seed);
    return m;
}

namespace {

// Forward pass keeping pre-activations and activations for backprop.
struct Trace {
    std::vector<Vec> a;  // a[0] = x, a[L] = outputs
    std::vector<Vec> z;  // z[l] for layers 1..L at index l-1
};

Trace run_forward(const ToyModel& m, const Vec& x) {
    if (x.size() != static_cast<std::size_t>(m.input_dim()))
        throw std::invalid_argument("forward: input dim mismatch");
    const bool bias = has_bias(m);
    const std::size_t L = m.arch.size() - 1;
    Trace t;
    t.a.resize(L + 1);
    t.z.resize(L);
    t.a[0] = x;
    std::size_t off = 0;
    for (std::size_t l = 1; l <= L; ++l) {
        const int in = m.arch[l - 1], out = m.arch[l];
        Vec z(out, 0.0);
        for (int i = 0; i < out; ++i) {
            double s = 0.0;
            const double* w = &m.params[off + static_cast<std::size_t>(i) * in];
            for (int j = 0; j < in; ++j) s += w[j] * t.a[l - 1][j];
            z[i] = s;
        }
        off += static_cast<std::size_t>(out) * in;
        if (bias) {
            for (int i = 0; i < out; ++i) z[i] += m.params[off + i];
            off += out;
        }
        t.z[l - 1] = z;
        if (l < L) {
            Vec a(out);
            for (int i = 0; i < out; ++i) a[i] = activate(z[i], m.activation);
            t.a[l] = std::move(a);
        } else {
            t.a[l] = std::move(z);
        }
    }
    if (!all_finite(t.a[L])) throw NumericError("forward: non-finite output");
    return t;
}

// Loss and dL/d(output) from raw outputs.
std::pair<double, Vec> loss_and_output_grad(const Vec& out, const Example& ex,
                                            const LossKind& loss, const ToyModel& m) {
    if (loss.family == LossFamily::SquaredError) {
        if (out.size() != 1) throw std::invalid_argument("squared error needs scalar output");
        double r = out[0] - ex.y;
        return {r * r, Vec{2.0 * r}};
    }
    const int K = m.output_dim();
    if (K < 2) throw std::invalid_argument("cross entropy needs >= 2 outputs");
    const int y = ex.label();
    if (y < 0 || y >= K || static_cast<double>(y) != ex.y)
        throw std::invalid_argument("cross entropy: label out of range");
    Vec q = smooth_labels(y, K, loss.label_smoothing);
    // L = logsumexp(z) - <q, z>; stable and exact for soft labels.
    double zmax = *std::max_element(out.begin(), out.end());
    double sum = 0.0;
    for (double z : out) sum += std::exp(z - zmax);
    double lse = zmax + std::log(sum);
    double qz = dot(q, out);
    Vec g(out.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        g[i] = std::exp(out[i] - lse) - q[i];
    return {lse - qz, g};
}

}  // namespace

Vec forward(const ToyModel& m, const Vec& x) { return run_forward(m, x).a.back(); }

LossGrads loss_with_grads(const ToyModel& m, const Example& ex, const LossKind& loss) {
    Trace t = run_forward(m, ex.x);
    auto [value, dz] = loss_and_output_grad(t.a.back(), ex, loss, m);

    const bool bias = has_bias(m);
    const std::size_t L = m.arch.size() - 1;
    LossGrads out;
    out.value = value;
    out.wrt_params.assign(m.params.size(), 0.0);

    // Layer offsets for the backward sweep.
    std::vector<std::size_t> offs(L + 1, 0);
    for (std::size_t l = 1; l <= L; ++l) {
        std::size_t sz = static_cast<std::size_t>(m.arch[l]) * m.arch[l - 1];
        if (bias) sz += m.arch[l];
        offs[l] = offs[l - 1] + sz;
    }

    Vec delta = std::move(dz);  // dL/dz_l, starting at l = L
    for (std::size_t l = L; l >= 1; --l) {
        const int in = m.arch[l - 1], out_w = m.arch[l];
        const std::size_t base = offs[l - 1];
        for (int i = 0; i < out_w; ++i) {
            double di = delta[i];
            double* gw = &out.wrt_params[base + static_cast<std::size_t>(i) * in];
            const Vec& prev = t.a[l - 1];
            for (int j = 0; j < in; ++j) gw[j] += di * prev[j];
        }
        if (bias) {
            std::size_t boff = base + static_cast<std::size_t>(out_w) * in;
            for (int i = 0; i < out_w; ++i) out.wrt_params[boff + i] += delta[i];
        }
        // dL/da_{l-1}
        Vec da(in, 0.0);
        for (int i = 0; i < out_w; ++i) {
            double di = delta[i];
            const double* w = &m.params[base + static_cast<std::size_t>(i) * in];
            for (int j = 0; j < in; ++j) da[j] += di * w[j];
        }
        if (l == 1) {
            out.wrt_input = std::move(da);
            break;
        }
        for (int j = 0; j < in; ++j) da[j] *= activate_grad(t.z[l - 2][j], m.activation);
        delta = std::move(da);
    }
    if (!std::isfinite(out.value) || !all_finite(out.wrt_params) || !all_finite(out.wrt_input))
        throw NumericError("loss_with_grads: non-finite result");
    return out;
}

double loss_value(const ToyModel& m, const Example& ex, const LossKind& loss) {
    Trace t = run_forward(m, ex.x);
    return loss_and_output_grad(t.a.back(), ex, loss, m).first;
}

Vec grad_params(const ToyModel& m, const Example& ex, const LossKind& loss) {
    return loss_with_grads(m, ex, loss).wrt_params;
}

Vec grad_input(const ToyModel& m, const Example& ex, const LossKind& loss) {
    return loss_with_grads(m, ex, loss).wrt_input;
}

Vec smooth_labels(int y, int num_classes, double gamma) {
    if (num_classes < 2) throw std::invalid_argument("smooth_labels: need >= 2 classes");
    if (y < 0 || y >= num_classes) throw std::invalid_argument("smooth_labels: label out of range");
    if (gamma < 0.0 || gamma >= 1.0) throw std::invalid_argument("smooth_labels: gamma in [0,1)");
    Vec q(static_cast<std::size_t>(num_classes), gamma / (num_classes - 1));
    q[static_cast<std::size_t>(y)] = 1.0 - gamma;
    return q;
}

int apply_label_noise(int y, int num_classes, double gamma, Rng& rng) {
    if (num_classes < 2) throw std::invalid_argument("apply_label_noise: need >= 2 classes");
    if (y < 0 || y >= num_classes)
        throw std::invalid_argument("apply_label_noise: label out of range");
    if (gamma < 0.0 || gamma > 1.0) throw std::invalid_argument("apply_label_noise: gamma in [0,1]");
    if (rng.uniform01() >= gamma) return y;
    int k = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(num_classes - 1)));
    return (y + 1 + k) % num_classes;
}

int predict_class(const ToyModel& m, const Vec& x) {
    if (m.output_dim() < 2) throw std::invalid_argument("predict_class: not a classifier");
    Vec out = forward(m, x);
    return static_cast<int>(std::max_element(out.begin(), out.end()) - out.begin());
}

std::pair<std::size_t, std::size_t> final_layer_span(const ToyModel& m) {
    if (m.kind == ModelKind::LinearRegression) return {0, m.params.size()};
    std::size_t last = static_cast<std::size_t>(m.arch.back()) * m.arch[m.arch.size() - 2] +
                       m.arch.back();
    return {m.params.size() - last, m.params.size()};
}

}  // namespace atmp
