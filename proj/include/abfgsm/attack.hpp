#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "abfgsm/model.hpp"
#include "abfgsm/tensor.hpp"

namespace abfgsm {

enum class AttackMethod { fgsm, ifgsm, mifgsm, nifgsm, aifgsm, abfgsm };

inline const char* to_string(AttackMethod m) {
    switch (m) {
        case AttackMethod::fgsm: return "fgsm";
        case AttackMethod::ifgsm: return "ifgsm";
        case AttackMethod::mifgsm: return "mifgsm";
        case AttackMethod::nifgsm: return "nifgsm";
        case AttackMethod::aifgsm: return "aifgsm";
        case AttackMethod::abfgsm: return "abfgsm";
    }
    throw std::invalid_argument("to_string: unknown attack method");
}

inline AttackMethod attack_method_from_string(const std::string& s) {
    if (s == "fgsm") return AttackMethod::fgsm;
    if (s == "ifgsm") return AttackMethod::ifgsm;
    if (s == "mifgsm") return AttackMethod::mifgsm;
    if (s == "nifgsm") return AttackMethod::nifgsm;
    if (s == "aifgsm") return AttackMethod::aifgsm;
    if (s == "abfgsm") return AttackMethod::abfgsm;
    throw std::invalid_argument("unknown attack method: " + s);
}

inline const std::vector<AttackMethod>& all_attack_methods() {
    static const std::vector<AttackMethod> methods = {
        AttackMethod::fgsm,   AttackMethod::ifgsm,  AttackMethod::mifgsm,
        AttackMethod::nifgsm, AttackMethod::aifgsm, AttackMethod::abfgsm};
    return methods;
}

struct AttackConfig {
    double eps_ball = 16.0 / 255.0;          // L-inf radius, input-domain units
    std::size_t steps = 10;                  // T
    std::optional<double> step_alpha;        // base step size; defaults to eps_ball / T
    double momentum_mu = 1.0;                // MI/NI decay factor
    double beta1 = 0.99;
    double beta2 = 0.999;
    double stabilizer_delta = 1e-14;         // denominator stability term
    bool amsgrad = true;                     // AB-FGSM running-max of s_t
    double domain_lo = 0.0;
    double domain_hi = 1.0;
    AttackMethod method = AttackMethod::abfgsm;
    bool ai_tau_l2 = false;                  // AI-FGSM original tau/||tau||_2 step instead of sign

    bool operator==(const AttackConfig&) const = default;

    double alpha() const {
        if (step_alpha) return *step_alpha;
        return eps_ball / static_cast<double>(steps);
    }

    void validate() const {
        if (eps_ball < 0.0) throw std::invalid_argument("AttackConfig: eps_ball < 0");
        if (steps < 1) throw std::invalid_argument("AttackConfig: steps < 1");
        // beta1 = 0 is admitted: it is well defined in every update and is the
        // documented reduction to plain sign steps
        if (!(beta1 >= 0.0 && beta1 < 1.0)) throw std::invalid_argument("AttackConfig: beta1 out of [0,1)");
        if (!(beta2 > 0.0 && beta2 < 1.0)) throw std::invalid_argument("AttackConfig: beta2 out of (0,1)");
        if (!(stabilizer_delta > 0.0)) throw std::invalid_argument("AttackConfig: stabilizer_delta <= 0");
        if (momentum_mu < 0.0) throw std::invalid_argument("AttackConfig: momentum_mu < 0");
        if (domain_lo > domain_hi) throw std::invalid_argument("AttackConfig: domain_lo > domain_hi");
        if (step_alpha && *step_alpha < 0.0) throw std::invalid_argument("AttackConfig: step_alpha < 0");
    }
};

/// Per-run mutable accumulators.  Never shared between runs.
struct AttackState {
    std::size_t t = 0;
    Tensor m;        // first-moment EMA
    Tensor second;   // v (Adam-style) or s (belief-style)
    Tensor g_accum;  // momentum accumulator for MI/NI
    double gamma = 0.0;
    Tensor x_adv;
};

struct AttackResult {
    Tensor x_adv;
    bool success = false;  // predict(x_adv) != true label
    std::size_t iterations_used = 0;
    double final_loss = 0.0;
    double linf_distance = 0.0;
};

/// One driver iteration, as observed from outside: the iterate it started
/// from, the raw gradient it saw, the direction and scalar step it applied,
/// and the accumulators afterwards.  Used by the verification suite.
struct StepRecord {
    std::size_t t = 0;
    Tensor x_before;
    Tensor gradient;     // raw oracle gradient at the evaluation point
    Tensor direction;    // unit-scale update direction (sign vector or tau/||tau||_2)
    double step_size = 0.0;
    Tensor x_after;      // committed iterate, post-clip
    Tensor m;
    Tensor second;
    Tensor m_hat;
    Tensor s_hat;
    double gamma = 0.0;
    Tensor g_accum;
};

using AttackTrace = std::vector<StepRecord>;

/// One term of the cumulative step-size normalizer, sqrt(1-b2^(i+1))/(1-b1^(i+1)).
inline double gamma_term(std::size_t i, double beta1, double beta2) {
    double e = static_cast<double>(i) + 1.0;
    return std::sqrt(1.0 - std::pow(beta2, e)) / (1.0 - std::pow(beta1, e));
}

/// AB-FGSM normalizer gamma_t = sum_{i=1}^{t} sqrt(1-b2^(i+1))/(1-b1^(i+1)).
/// Cumulative over completed iterations only; exponents start at 2.
inline double gamma_normalizer(std::size_t t, double beta1, double beta2) {
    double g = 0.0;
    for (std::size_t i = 1; i <= t; ++i) g += gamma_term(i, beta1, beta2);
    return g;
}

/// AI-FGSM per-iteration step sizes: alpha_t = alpha * w_t where
/// w_t = [sqrt(1-b2^t)/(1-b1^t)] / sum_{i=1}^{T} [sqrt(1-b2^i)/(1-b1^i)].
/// The weights sum to 1, so the sizes sum to alpha over the horizon.
inline std::vector<double> aifgsm_step_schedule(double alpha, double beta1, double beta2,
                                                std::size_t steps) {
    std::vector<double> terms(steps);
    double z = 0.0;
    for (std::size_t i = 0; i < steps; ++i) {
        double e = static_cast<double>(i) + 1.0;
        terms[i] = std::sqrt(1.0 - std::pow(beta2, e)) / (1.0 - std::pow(beta1, e));
        z += terms[i];
    }
    for (std::size_t i = 0; i < steps; ++i) terms[i] = alpha * terms[i] / z;
    return terms;
}

namespace detail {

/// Gradient scaled to unit L1 norm; the zero gradient maps to the zero
/// tensor so a stationary iterate leaves the momentum term in charge.
inline Tensor l1_normalized(const Tensor& g) {
    double n = l1_norm(g);
    if (n == 0.0) return Tensor::zeros_like(g);
    return scale(g, 1.0 / n);
}

inline void check_gradient(const Tensor& g) {
    if (!all_finite(g)) throw std::runtime_error("attack: non-finite gradient from oracle");
}

// Shared driver: runs `rule` T times, clipping each committed iterate into
// the eps ball and the [lo,hi] box.  `rule` returns (direction, step_size);
// the driver applies x += step_size * direction.
template <typename Rule>
AttackResult run_iterative(const GradientOracle& oracle, const LabeledExample& example,
                           const AttackConfig& cfg, std::size_t total_steps, Rule&& rule,
                           AttackTrace* trace) {
    AttackState st;
    st.x_adv = example.features;
    st.m = Tensor::zeros_like(example.features);
    st.second = Tensor::zeros_like(example.features);
    st.g_accum = Tensor::zeros_like(example.features);

    for (std::size_t step = 0; step < total_steps; ++step) {
        st.t = step + 1;
        StepRecord rec;
        rec.t = st.t;
        rec.x_before = st.x_adv;

        auto [direction, step_size] = rule(st, rec);

        Tensor proposal = add(st.x_adv, scale(direction, step_size));
        st.x_adv = clip_ball(proposal, example.features, cfg.eps_ball, cfg.domain_lo,
                             cfg.domain_hi);

        if (trace) {
            rec.direction = std::move(direction);
            rec.step_size = step_size;
            rec.x_after = st.x_adv;
            rec.m = st.m;
            rec.second = st.second;
            rec.gamma = st.gamma;
            rec.g_accum = st.g_accum;
            trace->push_back(std::move(rec));
        }
    }

    AttackResult result;
    result.x_adv = st.x_adv;
    result.iterations_used = total_steps;
    result.final_loss = oracle.loss_and_input_grad(st.x_adv, example.label).first;
    result.linf_distance = linf_norm(sub(st.x_adv, example.features));
    result.success = predict(oracle, st.x_adv) != example.label;
    return result;
}

}  // namespace detail

/// One-step attack: x' = clip(x + eps * sign(grad J(x))).
inline AttackResult attack_fgsm(const GradientOracle& oracle, const LabeledExample& example,
                                const AttackConfig& cfg, AttackTrace* trace = nullptr) {
    cfg.validate();
    return detail::run_iterative(
        oracle, example, cfg, 1,
        [&](AttackState& st, StepRecord& rec) {
            auto [loss, g] = oracle.loss_and_input_grad(st.x_adv, example.label);
            (void)loss;
            detail::check_gradient(g);
            rec.gradient = g;
            return std::make_pair(sign(g), cfg.eps_ball);
        },
        trace);
}

/// T steps of alpha-sized sign steps, gradient taken at the current iterate.
inline AttackResult attack_ifgsm(const GradientOracle& oracle, const LabeledExample& example,
                                 const AttackConfig& cfg, AttackTrace* trace = nullptr) {
    cfg.validate();
    const double alpha = cfg.alpha();
    return detail::run_iterative(
        oracle, example, cfg, cfg.steps,
        [&](AttackState& st, StepRecord& rec) {
            auto [loss, g] = oracle.loss_and_input_grad(st.x_adv, example.label);
            (void)loss;
            detail::check_gradient(g);
            rec.gradient = g;
            return std::make_pair(sign(g), alpha);
        },
        trace);
}

/// Momentum variant: g_{t+1} = mu * g_t + grad / ||grad||_1, step along sign(g_{t+1}).
inline AttackResult attack_mifgsm(const GradientOracle& oracle, const LabeledExample& example,
                                  const AttackConfig& cfg, AttackTrace* trace = nullptr) {
    cfg.validate();
    const double alpha = cfg.alpha();
    return detail::run_iterative(
        oracle, example, cfg, cfg.steps,
        [&](AttackState& st, StepRecord& rec) {
            auto [loss, g] = oracle.loss_and_input_grad(st.x_adv, example.label);
            (void)loss;
            detail::check_gradient(g);
            rec.gradient = g;
            st.g_accum = add(scale(st.g_accum, cfg.momentum_mu), detail::l1_normalized(g));
            return std::make_pair(sign(st.g_accum), alpha);
        },
        trace);
}

/// Nesterov variant: the gradient is taken at the lookahead point
/// x + alpha * mu * g_t.  The lookahead point itself is never clipped;
/// only the committed iterate is.
inline AttackResult attack_nifgsm(const GradientOracle& oracle, const LabeledExample& example,
                                  const AttackConfig& cfg, AttackTrace* trace = nullptr) {
    cfg.validate();
    const double alpha = cfg.alpha();
    return detail::run_iterative(
        oracle, example, cfg, cfg.steps,
        [&](AttackState& st, StepRecord& rec) {
            Tensor x_nes = add(st.x_adv, scale(st.g_accum, alpha * cfg.momentum_mu));
            auto [loss, g] = oracle.loss_and_input_grad(x_nes, example.label);
            (void)loss;
            detail::check_gradient(g);
            rec.gradient = g;
            st.g_accum = add(scale(st.g_accum, cfg.momentum_mu), detail::l1_normalized(g));
            return std::make_pair(sign(st.g_accum), alpha);
        },
        trace);
}

/// Adam variant with the full-horizon step-size schedule: m and v are EMAs of
/// the L1-normalized gradient, tau = m / (delta + sqrt(v)), and the step size
/// alpha_t comes from the normalized schedule so the sizes sum to alpha.
/// Default direction is sign(tau); cfg.ai_tau_l2 selects the original
/// tau / ||tau||_2 step.
inline AttackResult attack_aifgsm(const GradientOracle& oracle, const LabeledExample& example,
                                  const AttackConfig& cfg, AttackTrace* trace = nullptr) {
    cfg.validate();
    const std::vector<double> schedule =
        aifgsm_step_schedule(cfg.alpha(), cfg.beta1, cfg.beta2, cfg.steps);
    return detail::run_iterative(
        oracle, example, cfg, cfg.steps,
        [&](AttackState& st, StepRecord& rec) {
            auto [loss, g_raw] = oracle.loss_and_input_grad(st.x_adv, example.label);
            (void)loss;
            detail::check_gradient(g_raw);
            rec.gradient = g_raw;
            Tensor g = detail::l1_normalized(g_raw);
            st.m = add(scale(st.m, cfg.beta1), scale(g, 1.0 - cfg.beta1));
            st.second = add(scale(st.second, cfg.beta2), scale(square(g), 1.0 - cfg.beta2));
            Tensor tau = div(st.m, sqrt_elem(st.second), cfg.stabilizer_delta);
            double alpha_t = schedule[st.t - 1];
            if (cfg.ai_tau_l2) {
                double n = l2_norm(tau);
                Tensor dir = (n == 0.0) ? Tensor::zeros_like(tau) : scale(tau, 1.0 / n);
                return std::make_pair(std::move(dir), alpha_t);
            }
            return std::make_pair(sign(tau), alpha_t);
        },
        trace);
}

/// AdaBelief variant.  Per iteration t = 1..T on the raw gradient g_t:
///   gamma_t = sum_{i=1}^{t} sqrt(1-b2^(i+1))/(1-b1^(i+1))
///   m_t = b1 m_{t-1} + (1-b1) g_t
///   s_t = b2 s_{t-1} + (1-b2)(g_t - m_t)^2, then s_t = max(s_{t-1}, s_t) if amsgrad
///   m^ = m_t/(1-b1^t),  s^ = (s_t + delta)/(1-b2^t)
///   x' += (alpha/gamma_t) * sign(m^ / (sqrt(s^) + delta)), then clip.
inline AttackResult attack_abfgsm(const GradientOracle& oracle, const LabeledExample& example,
                                  const AttackConfig& cfg, AttackTrace* trace = nullptr) {
    cfg.validate();
    const double alpha = cfg.alpha();
    return detail::run_iterative(
        oracle, example, cfg, cfg.steps,
        [&](AttackState& st, StepRecord& rec) {
            auto [loss, g] = oracle.loss_and_input_grad(st.x_adv, example.label);
            (void)loss;
            detail::check_gradient(g);
            rec.gradient = g;
            st.gamma += gamma_term(st.t, cfg.beta1, cfg.beta2);
            st.m = add(scale(st.m, cfg.beta1), scale(g, 1.0 - cfg.beta1));
            Tensor s_candidate =
                add(scale(st.second, cfg.beta2), scale(square(sub(g, st.m)), 1.0 - cfg.beta2));
            st.second = cfg.amsgrad ? maximum(st.second, s_candidate) : std::move(s_candidate);
            double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(st.t));
            double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(st.t));
            Tensor m_hat = scale(st.m, 1.0 / bc1);
            Tensor s_hat = Tensor::zeros_like(st.second);
            for (std::size_t i = 0; i < s_hat.size(); ++i)
                s_hat[i] = (st.second[i] + cfg.stabilizer_delta) / bc2;
            Tensor dir = sign(div(m_hat, sqrt_elem(s_hat), cfg.stabilizer_delta));
            rec.m_hat = std::move(m_hat);
            rec.s_hat = std::move(s_hat);
            return std::make_pair(std::move(dir), alpha / st.gamma);
        },
        trace);
}

/// Dispatcher over the method enum.  Re-checks the L-inf invariant on the
/// returned example regardless of method.
inline AttackResult run_attack(const GradientOracle& oracle, const LabeledExample& example,
                               const AttackConfig& cfg, AttackTrace* trace = nullptr) {
    AttackResult result;
    switch (cfg.method) {
        case AttackMethod::fgsm: result = attack_fgsm(oracle, example, cfg, trace); break;
        case AttackMethod::ifgsm: result = attack_ifgsm(oracle, example, cfg, trace); break;
        case AttackMethod::mifgsm: result = attack_mifgsm(oracle, example, cfg, trace); break;
        case AttackMethod::nifgsm: result = attack_nifgsm(oracle, example, cfg, trace); break;
        case AttackMethod::aifgsm: result = attack_aifgsm(oracle, example, cfg, trace); break;
        case AttackMethod::abfgsm: result = attack_abfgsm(oracle, example, cfg, trace); break;
        default: throw std::invalid_argument("run_attack: unknown method");
    }
    if (result.linf_distance > cfg.eps_ball + 1e-12)
        throw std::logic_error("run_attack: L-inf invariant violated");
    return result;
}

}  // namespace abfgsm
