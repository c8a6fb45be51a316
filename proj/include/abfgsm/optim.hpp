#pragma once

#include <cmath>
#include <fstream>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "abfgsm/tensor.hpp"

namespace abfgsm {

enum class OptimizerVariant { adam, adabelief };

struct OptimizerParams {
    double lr = 0.1;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double stabilizer = 1e-14;
    OptimizerVariant variant = OptimizerVariant::adabelief;
    bool amsgrad = false;

    void validate() const {
        if (!(beta1 > 0.0 && beta1 < 1.0)) throw std::invalid_argument("OptimizerParams: beta1 out of (0,1)");
        if (!(beta2 > 0.0 && beta2 < 1.0)) throw std::invalid_argument("OptimizerParams: beta2 out of (0,1)");
        if (!(stabilizer > 0.0)) throw std::invalid_argument("OptimizerParams: stabilizer <= 0");
        if (!(lr > 0.0)) throw std::invalid_argument("OptimizerParams: lr <= 0");
    }
};

struct OptimState {
    std::size_t t = 0;
    Tensor theta;
    Tensor m;
    Tensor second;  // v for adam, s for adabelief

    static OptimState init(Tensor theta0) {
        OptimState st;
        st.m = Tensor::zeros_like(theta0);
        st.second = Tensor::zeros_like(theta0);
        st.theta = std::move(theta0);
        return st;
    }
};

/// One Adam step (descent convention, theta -= delta):
///   m = b1 m + (1-b1) g,  v = b2 v + (1-b2) g^2
///   m^ = m/(1-b1^t),      v^ = v/(1-b2^t)
///   delta = lr * m^ / (sqrt(v^) + eps)
inline void step_adam(OptimState& st, const Tensor& grad, const OptimizerParams& p) {
    require_same_shape(st.theta, grad, "step_adam");
    st.t += 1;
    st.m = add(scale(st.m, p.beta1), scale(grad, 1.0 - p.beta1));
    Tensor v_candidate = add(scale(st.second, p.beta2), scale(square(grad), 1.0 - p.beta2));
    st.second = p.amsgrad ? maximum(st.second, v_candidate) : std::move(v_candidate);
    double bc1 = 1.0 - std::pow(p.beta1, static_cast<double>(st.t));
    double bc2 = 1.0 - std::pow(p.beta2, static_cast<double>(st.t));
    for (std::size_t i = 0; i < st.theta.size(); ++i) {
        double m_hat = st.m[i] / bc1;
        double v_hat = st.second[i] / bc2;
        st.theta[i] -= p.lr * m_hat / (std::sqrt(v_hat) + p.stabilizer);
    }
}

/// One AdaBelief step.  The second moment tracks (g - m)^2 and its bias
/// correction keeps the stabilizer inside the numerator, s^ = (s + eps)/(1-b2^t),
/// matching the Adam step otherwise.
inline void step_adabelief(OptimState& st, const Tensor& grad, const OptimizerParams& p) {
    require_same_shape(st.theta, grad, "step_adabelief");
    st.t += 1;
    st.m = add(scale(st.m, p.beta1), scale(grad, 1.0 - p.beta1));
    Tensor s_candidate =
        add(scale(st.second, p.beta2), scale(square(sub(grad, st.m)), 1.0 - p.beta2));
    st.second = p.amsgrad ? maximum(st.second, s_candidate) : std::move(s_candidate);
    double bc1 = 1.0 - std::pow(p.beta1, static_cast<double>(st.t));
    double bc2 = 1.0 - std::pow(p.beta2, static_cast<double>(st.t));
    for (std::size_t i = 0; i < st.theta.size(); ++i) {
        double m_hat = st.m[i] / bc1;
        double s_hat = (st.second[i] + p.stabilizer) / bc2;
        st.theta[i] -= p.lr * m_hat / (std::sqrt(s_hat) + p.stabilizer);
    }
}

inline void optimizer_step(OptimState& st, const Tensor& grad, const OptimizerParams& p) {
    if (p.variant == OptimizerVariant::adam)
        step_adam(st, grad, p);
    else
        step_adabelief(st, grad, p);
}

// ---------------------------------------------------------------------------
// Analytic descent objectives and trajectory recording.
// ---------------------------------------------------------------------------

enum class Objective { quadratic, steep_valley, absolute_value };

inline Objective objective_from_string(const std::string& s) {
    if (s == "quadratic") return Objective::quadratic;
    if (s == "steep-valley") return Objective::steep_valley;
    if (s == "absolute-value") return Objective::absolute_value;
    throw std::invalid_argument("unknown objective: " + s);
}

inline double objective_value(Objective obj, const Tensor& theta) {
    switch (obj) {
        case Objective::quadratic: {
            double s = 0.0;
            for (std::size_t i = 0; i < theta.size(); ++i) s += theta[i] * theta[i];
            return s;
        }
        case Objective::steep_valley: {
            // Rosenbrock-style banana valley; needs at least two coordinates
            if (theta.size() < 2)
                throw std::invalid_argument("steep-valley objective needs dim >= 2");
            double s = 0.0;
            for (std::size_t i = 0; i + 1 < theta.size(); ++i) {
                double a = theta[i + 1] - theta[i] * theta[i];
                double b = 1.0 - theta[i];
                s += 100.0 * a * a + b * b;
            }
            return s;
        }
        case Objective::absolute_value: {
            double s = 0.0;
            for (std::size_t i = 0; i < theta.size(); ++i) s += std::abs(theta[i]);
            return s;
        }
    }
    throw std::invalid_argument("objective_value: unknown objective");
}

inline Tensor objective_gradient(Objective obj, const Tensor& theta) {
    Tensor g = Tensor::zeros_like(theta);
    switch (obj) {
        case Objective::quadratic:
            for (std::size_t i = 0; i < theta.size(); ++i) g[i] = 2.0 * theta[i];
            return g;
        case Objective::steep_valley: {
            if (theta.size() < 2)
                throw std::invalid_argument("steep-valley objective needs dim >= 2");
            for (std::size_t i = 0; i + 1 < theta.size(); ++i) {
                double a = theta[i + 1] - theta[i] * theta[i];
                g[i] += -400.0 * a * theta[i] - 2.0 * (1.0 - theta[i]);
                g[i + 1] += 200.0 * a;
            }
            return g;
        }
        case Objective::absolute_value:
            for (std::size_t i = 0; i < theta.size(); ++i)
                g[i] = (theta[i] > 0.0) ? 1.0 : (theta[i] < 0.0 ? -1.0 : 0.0);
            return g;
    }
    throw std::invalid_argument("objective_gradient: unknown objective");
}

struct TrajectoryPoint {
    std::size_t t = 0;
    Tensor theta;
    double loss = 0.0;
    Tensor m;
    Tensor second;
};

struct Trajectory {
    std::vector<TrajectoryPoint> points;  // points[0] is the initial state (t = 0)
};

/// Records the full descent path; throws naming the step if the loss goes
/// non-finite.
inline Trajectory run_descent(Objective obj, const OptimizerParams& params,
                              std::size_t steps, Tensor theta0) {
    params.validate();
    OptimState st = OptimState::init(std::move(theta0));
    Trajectory traj;
    traj.points.push_back({0, st.theta, objective_value(obj, st.theta), st.m, st.second});
    for (std::size_t k = 1; k <= steps; ++k) {
        Tensor grad = objective_gradient(obj, st.theta);
        optimizer_step(st, grad, params);
        double loss = objective_value(obj, st.theta);
        if (!std::isfinite(loss))
            throw std::runtime_error("run_descent: diverged at step " + std::to_string(k));
        traj.points.push_back({k, st.theta, loss, st.m, st.second});
    }
    return traj;
}

/// CSV dump: t, theta_0..theta_{d-1}, loss.
inline void write_trajectory_csv(const Trajectory& traj, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("write_trajectory_csv: cannot open " + path);
    if (traj.points.empty()) throw std::invalid_argument("write_trajectory_csv: empty trajectory");
    std::size_t dim = traj.points.front().theta.size();
    os << "t";
    for (std::size_t i = 0; i < dim; ++i) os << ",theta_" << i;
    os << ",loss\n";
    os.precision(17);
    for (const TrajectoryPoint& p : traj.points) {
        os << p.t;
        for (std::size_t i = 0; i < dim; ++i) os << "," << p.theta[i];
        os << "," << p.loss << "\n";
    }
    if (!os) throw std::runtime_error("write_trajectory_csv: write failed for " + path);
}

}  // namespace abfgsm
