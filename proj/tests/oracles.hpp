#pragma once

// Independent reference implementations used to check the library. Everything
// here is deliberately written in plain scalar arithmetic, separate from the
// code paths under test.

#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "abfgsm/model.hpp"
#include "abfgsm/tensor.hpp"

namespace oracles {

// ---------------------------------------------------------------------------
// Central finite differences of a scalar function of a tensor.
// ---------------------------------------------------------------------------

inline abfgsm::Tensor finite_difference_grad(
    const std::function<double(const abfgsm::Tensor&)>& f, const abfgsm::Tensor& x,
    double h = 1e-5) {
    abfgsm::Tensor g = abfgsm::Tensor::zeros_like(x);
    abfgsm::Tensor probe = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double orig = probe[i];
        probe[i] = orig + h;
        double f_plus = f(probe);
        probe[i] = orig - h;
        double f_minus = f(probe);
        probe[i] = orig;
        g[i] = (f_plus - f_minus) / (2.0 * h);
    }
    return g;
}

inline double relative_error(const abfgsm::Tensor& a, const abfgsm::Tensor& b) {
    double num = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        num += d * d;
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    double denom = std::max(std::sqrt(na), std::sqrt(nb));
    if (denom == 0.0) return 0.0;
    return std::sqrt(num) / denom;
}

// ---------------------------------------------------------------------------
// Scalar trace oracle for the AdaBelief-FGSM update (hand-stepped, 1-D).
// ---------------------------------------------------------------------------

struct AbScalarStep {
    double g = 0.0;
    double gamma = 0.0;
    double m = 0.0;
    double s = 0.0;
    double m_hat = 0.0;
    double s_hat = 0.0;
    double step_size = 0.0;  // alpha / gamma
    double direction = 0.0;  // sign of m_hat / (sqrt(s_hat) + delta)
    double x = 0.0;          // committed iterate, post-clip
};

struct AbScalarParams {
    double eps_ball = 10.0;
    std::size_t steps = 5;
    double alpha = 2.0;
    double beta1 = 0.99;
    double beta2 = 0.999;
    double delta = 1e-14;
    bool amsgrad = true;
    double lo = -1e9;
    double hi = 1e9;
};

/// Hand-stepped 1-D run against an analytic gradient, following the
/// published update verbatim: cumulative gamma with exponents starting at 2,
/// belief second moment with optional running max, stabilizer added both
/// inside s^ and in the final denominator, ascent step of size alpha/gamma.
inline std::vector<AbScalarStep> ab_scalar_trace(
    const std::function<double(double)>& grad_of_x, double x0, const AbScalarParams& p) {
    std::vector<AbScalarStep> trace;
    double m = 0.0, s = 0.0, x = x0, gamma = 0.0;
    for (std::size_t t = 1; t <= p.steps; ++t) {
        AbScalarStep rec;
        rec.g = grad_of_x(x);
        double e = static_cast<double>(t) + 1.0;
        gamma += std::sqrt(1.0 - std::pow(p.beta2, e)) / (1.0 - std::pow(p.beta1, e));
        rec.gamma = gamma;
        m = p.beta1 * m + (1.0 - p.beta1) * rec.g;
        double s_new = p.beta2 * s + (1.0 - p.beta2) * (rec.g - m) * (rec.g - m);
        s = p.amsgrad ? std::max(s, s_new) : s_new;
        rec.m = m;
        rec.s = s;
        double bc1 = 1.0 - std::pow(p.beta1, static_cast<double>(t));
        double bc2 = 1.0 - std::pow(p.beta2, static_cast<double>(t));
        rec.m_hat = m / bc1;
        rec.s_hat = (s + p.delta) / bc2;
        double ratio = rec.m_hat / (std::sqrt(rec.s_hat) + p.delta);
        rec.direction = (ratio > 0.0) ? 1.0 : (ratio < 0.0 ? -1.0 : 0.0);
        rec.step_size = p.alpha / gamma;
        x = x + rec.step_size * rec.direction;
        x = std::min(std::max(x, x0 - p.eps_ball), x0 + p.eps_ball);
        x = std::min(std::max(x, p.lo), p.hi);
        rec.x = x;
        trace.push_back(rec);
    }
    return trace;
}

// ---------------------------------------------------------------------------
// Scalar Adam / AdaBelief steppers (descent convention).
// ---------------------------------------------------------------------------

struct ScalarOptimState {
    double theta = 0.0;
    double m = 0.0;
    double second = 0.0;
    std::size_t t = 0;
};

inline void scalar_adam_step(ScalarOptimState& st, double g, double lr, double b1, double b2,
                             double eps, bool amsgrad = false) {
    st.t += 1;
    st.m = b1 * st.m + (1.0 - b1) * g;
    double v_new = b2 * st.second + (1.0 - b2) * g * g;
    st.second = amsgrad ? std::max(st.second, v_new) : v_new;
    double m_hat = st.m / (1.0 - std::pow(b1, static_cast<double>(st.t)));
    double v_hat = st.second / (1.0 - std::pow(b2, static_cast<double>(st.t)));
    st.theta -= lr * m_hat / (std::sqrt(v_hat) + eps);
}

inline void scalar_adabelief_step(ScalarOptimState& st, double g, double lr, double b1,
                                  double b2, double eps, bool amsgrad = false) {
    st.t += 1;
    st.m = b1 * st.m + (1.0 - b1) * g;
    double diff = g - st.m;
    double s_new = b2 * st.second + (1.0 - b2) * diff * diff;
    st.second = amsgrad ? std::max(st.second, s_new) : s_new;
    double m_hat = st.m / (1.0 - std::pow(b1, static_cast<double>(st.t)));
    double s_hat = (st.second + eps) / (1.0 - std::pow(b2, static_cast<double>(st.t)));
    st.theta -= lr * m_hat / (std::sqrt(s_hat) + eps);
}

// ---------------------------------------------------------------------------
// Scalar step-size schedule for the Adam-based attack, Eq-style:
// alpha_t = alpha * [sqrt(1-b2^t)/(1-b1^t)] / sum_{i=1..T} [sqrt(1-b2^i)/(1-b1^i)].
// ---------------------------------------------------------------------------

inline std::vector<double> ai_schedule_oracle(double alpha, double b1, double b2,
                                              std::size_t steps) {
    double z = 0.0;
    for (std::size_t i = 1; i <= steps; ++i)
        z += std::sqrt(1.0 - std::pow(b2, static_cast<double>(i))) /
             (1.0 - std::pow(b1, static_cast<double>(i)));
    std::vector<double> out;
    for (std::size_t t = 1; t <= steps; ++t)
        out.push_back(alpha *
                      (std::sqrt(1.0 - std::pow(b2, static_cast<double>(t))) /
                       (1.0 - std::pow(b1, static_cast<double>(t)))) /
                      z);
    return out;
}

// ---------------------------------------------------------------------------
// Pluggable analytic oracle: loss and gradient given as callables.  The
// logits are a 2-class stub (loss as the second logit) so predict() works.
// ---------------------------------------------------------------------------

class AnalyticOracle : public abfgsm::GradientOracle {
public:
    using LossFn = std::function<double(const abfgsm::Tensor&)>;
    using GradFn = std::function<abfgsm::Tensor(const abfgsm::Tensor&)>;

    AnalyticOracle(std::vector<std::size_t> shape, LossFn loss, GradFn grad)
        : shape_(std::move(shape)), loss_(std::move(loss)), grad_(std::move(grad)) {}

    std::vector<std::size_t> input_shape() const override { return shape_; }
    std::size_t num_classes() const override { return 2; }

    abfgsm::Tensor logits(const abfgsm::Tensor& x) const override {
        return abfgsm::Tensor::vector({0.0, loss_(x)});
    }

    std::pair<double, abfgsm::Tensor> loss_and_input_grad(const abfgsm::Tensor& x,
                                                          std::size_t) const override {
        return {loss_(x), grad_(x)};
    }

    abfgsm::Tensor logits_vjp(const abfgsm::Tensor& x, const abfgsm::Tensor& cot) const override {
        return abfgsm::scale(grad_(x), cot[1]);
    }

private:
    std::vector<std::size_t> shape_;
    LossFn loss_;
    GradFn grad_;
};

/// Oracle whose gradient stream is a fixed pre-generated sequence,
/// independent of the query point.  Call k returns stream[k] (clamped to the
/// last entry), which ties attack accumulators to a known gradient sequence.
class StreamOracle : public abfgsm::GradientOracle {
public:
    explicit StreamOracle(std::vector<abfgsm::Tensor> stream) : stream_(std::move(stream)) {
        if (stream_.empty()) throw std::invalid_argument("StreamOracle: empty stream");
    }

    std::vector<std::size_t> input_shape() const override { return stream_.front().shape(); }
    std::size_t num_classes() const override { return 2; }

    abfgsm::Tensor logits(const abfgsm::Tensor&) const override {
        return abfgsm::Tensor::vector({0.0, 1.0});
    }

    std::pair<double, abfgsm::Tensor> loss_and_input_grad(const abfgsm::Tensor&,
                                                          std::size_t) const override {
        std::size_t k = std::min(next_++, stream_.size() - 1);
        return {1.0, stream_[k]};
    }

    abfgsm::Tensor logits_vjp(const abfgsm::Tensor&, const abfgsm::Tensor&) const override {
        throw std::logic_error("StreamOracle: vjp not defined");
    }

    std::size_t calls() const { return next_; }

private:
    std::vector<abfgsm::Tensor> stream_;
    mutable std::size_t next_ = 0;
};

}  // namespace oracles
