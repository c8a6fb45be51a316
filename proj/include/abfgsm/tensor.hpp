#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace abfgsm {

/// Dense multi-dimensional array of 64-bit reals, row-major flat storage.
/// Shape is metadata only; all arithmetic here is elementwise or a reduction.
/// Tensors are value types: operations return new tensors and never alias.
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<std::size_t> shape)
        : shape_(std::move(shape)), data_(checked_count(shape_), 0.0) {}

    Tensor(std::vector<std::size_t> shape, std::vector<double> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        if (checked_count(shape_) != data_.size())
            throw std::invalid_argument("Tensor: shape/data size mismatch");
    }

    /// 1-D convenience constructor.
    static Tensor vector(std::vector<double> values) {
        std::size_t n = values.size();
        return Tensor({n}, std::move(values));
    }

    static Tensor zeros_like(const Tensor& t) { return Tensor(t.shape_); }

    static Tensor full_like(const Tensor& t, double v) {
        Tensor out(t.shape_);
        std::fill(out.data_.begin(), out.data_.end(), v);
        return out;
    }

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t size() const { return data_.size(); }

    double operator[](std::size_t i) const { return data_[i]; }
    double& operator[](std::size_t i) { return data_[i]; }

    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    bool operator==(const Tensor& other) const {
        return shape_ == other.shape_ && data_ == other.data_;
    }

private:
    static std::size_t checked_count(const std::vector<std::size_t>& shape) {
        std::size_t n = 1;
        for (std::size_t e : shape) {
            if (e == 0) throw std::invalid_argument("Tensor: zero extent in shape");
            n *= e;
        }
        return n;
    }

    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (!a.same_shape(b))
        throw std::invalid_argument(std::string(op) + ": shape mismatch");
}

inline bool all_finite(const Tensor& t) {
    for (std::size_t i = 0; i < t.size(); ++i)
        if (!std::isfinite(t[i])) return false;
    return true;
}

/// Elementwise sign with sign(0) = 0.
inline Tensor sign(const Tensor& t) {
    Tensor out = Tensor::zeros_like(t);
    for (std::size_t i = 0; i < t.size(); ++i)
        out[i] = (t[i] > 0.0) ? 1.0 : (t[i] < 0.0 ? -1.0 : 0.0);
    return out;
}

/// Project x_adv into the L-inf ball of radius eps_ball around x_orig,
/// intersected with the box [lo, hi].  Idempotent.
inline Tensor clip_ball(const Tensor& x_adv, const Tensor& x_orig, double eps_ball,
                        double lo, double hi) {
    require_same_shape(x_adv, x_orig, "clip_ball");
    if (eps_ball < 0.0) throw std::invalid_argument("clip_ball: eps_ball < 0");
    if (lo > hi) throw std::invalid_argument("clip_ball: lo > hi");
    Tensor out = Tensor::zeros_like(x_adv);
    for (std::size_t i = 0; i < x_adv.size(); ++i) {
        double low = std::max(lo, x_orig[i] - eps_ball);
        double high = std::min(hi, x_orig[i] + eps_ball);
        out[i] = std::clamp(x_adv[i], low, high);
    }
    return out;
}

inline double l1_norm(const Tensor& t) {
    double s = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) s += std::abs(t[i]);
    return s;
}

inline double l2_norm(const Tensor& t) {
    double s = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) s += t[i] * t[i];
    return std::sqrt(s);
}

inline double linf_norm(const Tensor& t) {
    double s = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) s = std::max(s, std::abs(t[i]));
    return s;
}

inline Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    Tensor out = Tensor::zeros_like(a);
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
    return out;
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "sub");
    Tensor out = Tensor::zeros_like(a);
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
    return out;
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "mul");
    Tensor out = Tensor::zeros_like(a);
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
    return out;
}

inline Tensor scale(const Tensor& a, double c) {
    Tensor out = Tensor::zeros_like(a);
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * c;
    return out;
}

inline Tensor square(const Tensor& a) {
    Tensor out = Tensor::zeros_like(a);
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * a[i];
    return out;
}

inline Tensor sqrt_elem(const Tensor& a) {
    Tensor out = Tensor::zeros_like(a);
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] < 0.0) throw std::domain_error("sqrt_elem: negative element");
        out[i] = std::sqrt(a[i]);
    }
    return out;
}

/// Elementwise a / (b + stabilizer).  With stabilizer == 0 a zero denominator
/// is an error; callers that can hit zero must supply a positive stabilizer.
inline Tensor div(const Tensor& a, const Tensor& b, double stabilizer = 0.0) {
    require_same_shape(a, b, "div");
    Tensor out = Tensor::zeros_like(a);
    for (std::size_t i = 0; i < a.size(); ++i) {
        double denom = b[i] + stabilizer;
        if (denom == 0.0) throw std::domain_error("div: zero denominator");
        out[i] = a[i] / denom;
    }
    return out;
}

inline Tensor maximum(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "maximum");
    Tensor out = Tensor::zeros_like(a);
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = std::max(a[i], b[i]);
    return out;
}

}  // namespace abfgsm
