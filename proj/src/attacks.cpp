#include "atmp/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "atmp/errors.hpp"

namespace atmp {

void PerturbationSpec::validate() const {
    if (epsilon < 0.0) throw std::invalid_argument("spec: epsilon must be >= 0");
    if (steps < 1) throw std::invalid_argument("spec: steps must be >= 1");
    if (step_size <= 0.0) throw std::invalid_argument("spec: step_size must be > 0");
    if (l1_k < 1) throw std::invalid_argument("spec: l1_k must be >= 1");
}

PerturbationSpec default_spec(NormKind kind) {
    PerturbationSpec s;
    s.kind = kind;
    s.steps = 50;
    s.restarts = 1;
    switch (kind) {
        case NormKind::L1:
            s.epsilon = 12.0;
            s.step_size = 1.0;
            break;
        case NormKind::L2:
            s.epsilon = 0.5;
            s.step_size = 0.05;
            break;
        case NormKind::Linf:
            s.epsilon = 0.03;
            s.step_size = 0.003;
            break;
    }
    return s;
}

void MixtureSpec::validate() const {
    if (specs.empty()) throw std::invalid_argument("mixture: needs at least one spec");
    for (const auto& s : specs) s.validate();
    for (std::size_t i = 0; i < specs.size(); ++i)
        for (std::size_t j = i + 1; j < specs.size(); ++j)
            if (specs[i].kind == specs[j].kind)
                throw std::invalid_argument("mixture: norm kinds must be distinct");
}

namespace {

// Shared PGD engine. With one spec this is plain multi-start PGD; with
// several it is the joint attack where every inner step evaluates one
// candidate per spec and keeps the loss-maximizing one.
AttackResult pgd_engine(const ToyModel& m, const Example& ex,
                        const std::vector<PerturbationSpec>& specs, const LossKind& loss,
                        const Rng& rng) {
    const std::size_t d = ex.x.size();
    const std::size_t P = specs.size();
    std::vector<Ball> balls(P);
    int starts = 1, steps = 1;
    for (std::size_t i = 0; i < P; ++i) {
        balls[i] = Ball{Vec(d, 0.0), specs[i].kind, specs[i].epsilon};
        starts = std::max(starts, specs[i].restarts);
        steps = std::max(steps, specs[i].steps);
    }

    AttackResult best;
    best.achieved_loss = -1.0;
    auto consider = [&](const Vec& delta, double value, int spec_index) {
        if (best.achieved_loss < 0.0 || value > best.achieved_loss) {
            best.achieved_loss = value;
            best.delta = delta;
            best.spec_index = spec_index;
        }
    };

    Example probe = ex;
    for (int r = 0; r < starts; ++r) {
        Vec delta(d, 0.0);
        int attrib = 0;
        if (r > 0) {
            std::size_t s = 0;
            if (P > 1)
                s = rng.child(stream::kRestartSpec, static_cast<std::uint64_t>(r))
                        .uniform_index(P);
            Rng start_rng = rng.child(stream::kRestart, static_cast<std::uint64_t>(r));
            delta = random_point_in_ball(balls[s], start_rng);
            attrib = static_cast<int>(s);
        }
        probe.x = add(ex.x, delta);
        consider(delta, loss_value(m, probe, loss), attrib);

        for (int t = 0; t < steps; ++t) {
            probe.x = add(ex.x, delta);
            Vec g = loss_with_grads(m, probe, loss).wrt_input;
            double cand_loss = 0.0;
            Vec cand;
            int cand_spec = -1;
            for (std::size_t si = 0; si < P; ++si) {
                Vec moved = add(delta, steepest_ascent_step(g, specs[si].kind,
                                                            specs[si].step_size,
                                                            static_cast<std::size_t>(specs[si].l1_k)));
                Vec proj = project_onto_ball(moved, balls[si]);
                probe.x = add(ex.x, proj);
                double v = loss_value(m, probe, loss);
                if (cand_spec < 0 || v > cand_loss) {
                    cand_loss = v;
                    cand = std::move(proj);
                    cand_spec = static_cast<int>(si);
                }
            }
            delta = std::move(cand);
            consider(delta, cand_loss, cand_spec);
        }
    }
    best.adversarial = Example{add(ex.x, best.delta), ex.y};
    return best;
}

}  // namespace

AttackResult pgd_attack(const ToyModel& m, const Example& ex, const PerturbationSpec& spec,
                        const LossKind& loss, const Rng& rng) {
    spec.validate();
    return pgd_engine(m, ex, {spec}, loss, rng);
}

AttackResult msd_attack(const ToyModel& m, const Example& ex, const MixtureSpec& mixture,
                        const LossKind& loss, const Rng& rng) {
    mixture.validate();
    return pgd_engine(m, ex, mixture.specs, loss, rng);
}

std::vector<AttackResult> attack_all(const ToyModel& m, const Example& ex,
                                     const MixtureSpec& mixture, const LossKind& loss,
                                     const Rng& rng) {
    mixture.validate();
    std::vector<AttackResult> out;
    out.reserve(mixture.size());
    for (std::size_t si = 0; si < mixture.size(); ++si) {
        AttackResult r =
            pgd_attack(m, ex, mixture.specs[si], loss, rng.child(stream::kSpecAttack, si));
        r.spec_index = static_cast<int>(si);
        out.push_back(std::move(r));
    }
    return out;
}

double adv_loss_closed_form_linreg(const Vec& theta, const Mat& X, const Vec& y, NormKind p,
                                   double epsilon) {
    if (X.cols != theta.size() || X.rows != y.size())
        throw std::invalid_argument("adv_loss_closed_form_linreg: dimension mismatch");
    if (epsilon < 0.0) throw std::invalid_argument("adv_loss_closed_form_linreg: epsilon < 0");
    Vec r = sub(matvec(X, theta), y);
    double base = l2_norm(r);
    double dual = norm(theta, dual_norm_kind(p));
    double root = base + std::sqrt(static_cast<double>(X.rows)) * epsilon * dual;
    return root * root;
}

AttackResult h_wst(const ToyModel& m, const Example& ex, const MixtureSpec& mixture,
                   const LossKind& loss, const Rng& rng) {
    std::vector<AttackResult> all = attack_all(m, ex, mixture, loss, rng);
    std::size_t best = 0;
    for (std::size_t i = 1; i < all.size(); ++i)
        if (all[i].achieved_loss > all[best].achieved_loss) best = i;
    return all[best];
}

double h_avg(const ToyModel& m, const Example& ex, const MixtureSpec& mixture,
             const LossKind& loss, const Rng& rng) {
    std::vector<AttackResult> all = attack_all(m, ex, mixture, loss, rng);
    double s = 0.0;
    for (const auto& r : all) s += r.achieved_loss;
    return s / static_cast<double>(all.size());
}

Example mixup_adversarial_example(const Example& ex, const std::vector<Vec>& deltas) {
    if (deltas.empty()) throw std::invalid_argument("mixup: empty delta list");
    Vec mean(ex.x.size(), 0.0);
    for (const Vec& d : deltas) {
        if (d.size() != ex.x.size()) throw std::invalid_argument("mixup: delta dim mismatch");
        axpy(1.0, d, mean);
    }
    for (double& v : mean) v /= static_cast<double>(deltas.size());
    return Example{add(ex.x, mean), ex.y};
}

RobustReport robust_evaluate(const ToyModel& m, const Dataset& data, const MixtureSpec& mixture,
                             const LossKind& loss, const Rng& rng) {
    mixture.validate();
    if (data.regression() || m.output_dim() < 2)
        throw std::invalid_argument("robust_evaluate: classification models only");
    if (data.size() == 0) throw std::invalid_argument("robust_evaluate: empty dataset");

    const std::size_t P = mixture.size();
    RobustReport rep;
    rep.per_attack_acc.assign(P, 0.0);
    std::size_t clean_ok = 0, union_ok = 0;
    std::vector<std::size_t> attack_ok(P, 0);

    for (std::size_t i = 0; i < data.size(); ++i) {
        const Example& ex = data.examples[i];
        bool clean = predict_class(m, ex.x) == ex.label();
        if (clean) ++clean_ok;
        bool all_ok = clean;
        std::vector<AttackResult> attacks = attack_all(m, ex, mixture, loss, rng.child(i));
        for (std::size_t si = 0; si < P; ++si) {
            bool ok = clean && predict_class(m, attacks[si].adversarial.x) == ex.label();
            if (ok) ++attack_ok[si];
            all_ok = all_ok && ok;
        }
        if (all_ok) ++union_ok;
    }

    const double n = static_cast<double>(data.size());
    rep.clean_acc = clean_ok / n;
    double mix = 0.0;
    for (std::size_t si = 0; si < P; ++si) {
        rep.per_attack_acc[si] = attack_ok[si] / n;
        mix += rep.per_attack_acc[si];
    }
    rep.union_acc = union_ok / n;
    rep.mix_acc = mix / static_cast<double>(P);
    return rep;
}

}  // namespace atmp
