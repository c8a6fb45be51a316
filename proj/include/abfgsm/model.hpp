#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "abfgsm/rng.hpp"
#include "abfgsm/tensor.hpp"

namespace abfgsm {

/// The surface any attackable classifier exposes: raw logits, the
/// cross-entropy loss with its gradient w.r.t. the input, and a
/// vector-Jacobian product through the logits so ensembles can backprop
/// a fused-logit cotangent into each member.
class GradientOracle {
public:
    virtual ~GradientOracle() = default;

    virtual std::vector<std::size_t> input_shape() const = 0;
    virtual std::size_t num_classes() const = 0;

    virtual Tensor logits(const Tensor& x) const = 0;

    /// Cross-entropy loss of x against `label` and d(loss)/dx.
    virtual std::pair<double, Tensor> loss_and_input_grad(const Tensor& x,
                                                          std::size_t label) const = 0;

    /// Input gradient of <cotangent, logits(x)>.
    virtual Tensor logits_vjp(const Tensor& x, const Tensor& cotangent) const = 0;
};

/// Numerically stable softmax cross-entropy.
/// Returns the loss and d(loss)/d(logits) = softmax(logits) - onehot(label).
inline std::pair<double, Tensor> softmax_cross_entropy(const Tensor& logits,
                                                       std::size_t label) {
    if (label >= logits.size())
        throw std::invalid_argument("softmax_cross_entropy: label out of range");
    double mx = logits[0];
    for (std::size_t i = 1; i < logits.size(); ++i) mx = std::max(mx, logits[i]);
    double sum = 0.0;
    Tensor probs = Tensor::zeros_like(logits);
    for (std::size_t i = 0; i < logits.size(); ++i) {
        probs[i] = std::exp(logits[i] - mx);
        sum += probs[i];
    }
    double loss = -(logits[label] - mx) + std::log(sum);
    for (std::size_t i = 0; i < logits.size(); ++i) probs[i] /= sum;
    probs[label] -= 1.0;
    return {loss, std::move(probs)};
}

/// Argmax of logits; ties break toward the lowest class index.
inline std::size_t predict(const GradientOracle& oracle, const Tensor& x) {
    Tensor l = oracle.logits(x);
    std::size_t best = 0;
    for (std::size_t i = 1; i < l.size(); ++i)
        if (l[i] > l[best]) best = i;
    return best;
}

struct LabeledExample {
    Tensor features;
    std::size_t label = 0;
};

enum class Activation : std::uint8_t { relu = 0, identity = 1 };

struct Layer {
    Tensor weight;  // shape {out, in}
    Tensor bias;    // shape {out}
    Activation act = Activation::identity;

    std::size_t in_dim() const { return weight.shape()[1]; }
    std::size_t out_dim() const { return weight.shape()[0]; }
};

/// Feedforward classifier with hand-written backprop.  The final layer
/// emits raw logits (identity activation).  Immutable once trained.
class MlpModel : public GradientOracle {
public:
    explicit MlpModel(std::vector<Layer> layers) : layers_(std::move(layers)) {
        if (layers_.empty()) throw std::invalid_argument("MlpModel: no layers");
        for (const Layer& l : layers_) {
            if (l.weight.shape().size() != 2 || l.bias.shape().size() != 1 ||
                l.bias.shape()[0] != l.out_dim())
                throw std::invalid_argument("MlpModel: malformed layer");
        }
        for (std::size_t k = 1; k < layers_.size(); ++k)
            if (layers_[k].in_dim() != layers_[k - 1].out_dim())
                throw std::invalid_argument("MlpModel: layer dimensions do not chain");
    }

    std::vector<std::size_t> input_shape() const override { return {layers_.front().in_dim()}; }
    std::size_t num_classes() const override { return layers_.back().out_dim(); }

    const std::vector<Layer>& layers() const { return layers_; }
    std::vector<Layer>& layers() { return layers_; }

    Tensor logits(const Tensor& x) const override {
        return forward(x).activations.back();
    }

    std::pair<double, Tensor> loss_and_input_grad(const Tensor& x,
                                                  std::size_t label) const override {
        if (label >= num_classes())
            throw std::invalid_argument("loss_and_input_grad: invalid label");
        ForwardCache cache = forward(x);
        auto [loss, delta] = softmax_cross_entropy(cache.activations.back(), label);
        return {loss, backprop_to_input(cache, delta)};
    }

    Tensor logits_vjp(const Tensor& x, const Tensor& cotangent) const override {
        ForwardCache cache = forward(x);
        if (cotangent.size() != num_classes())
            throw std::invalid_argument("logits_vjp: cotangent size mismatch");
        return backprop_to_input(cache, cotangent);
    }

    /// Per-parameter gradients for one example, used by SGD training.
    struct ParamGrads {
        std::vector<Tensor> weight;
        std::vector<Tensor> bias;
    };

    std::pair<double, ParamGrads> loss_and_param_grads(const Tensor& x,
                                                       std::size_t label) const {
        ForwardCache cache = forward(x);
        auto [loss, delta] = softmax_cross_entropy(cache.activations.back(), label);
        ParamGrads grads;
        grads.weight.resize(layers_.size());
        grads.bias.resize(layers_.size());
        Tensor d = delta;  // d(loss)/d(pre-activation of layer k)
        for (std::size_t k = layers_.size(); k-- > 0;) {
            const Layer& layer = layers_[k];
            const Tensor& a_in = cache.activations[k];
            Tensor gw({layer.out_dim(), layer.in_dim()});
            for (std::size_t o = 0; o < layer.out_dim(); ++o)
                for (std::size_t i = 0; i < layer.in_dim(); ++i)
                    gw[o * layer.in_dim() + i] = d[o] * a_in[i];
            grads.weight[k] = std::move(gw);
            grads.bias[k] = d;
            if (k > 0) d = backprop_through_layer(k, cache, d);
        }
        return {loss, std::move(grads)};
    }

private:
    struct ForwardCache {
        // activations[0] is the input; activations[k+1] = act_k(W_k a_k + b_k)
        std::vector<Tensor> activations;
        std::vector<Tensor> pre_activations;  // z_k per layer
    };

    ForwardCache forward(const Tensor& x) const {
        if (x.size() != layers_.front().in_dim())
            throw std::invalid_argument("MlpModel: input size mismatch");
        ForwardCache cache;
        cache.activations.reserve(layers_.size() + 1);
        cache.pre_activations.reserve(layers_.size());
        cache.activations.push_back(x);
        for (const Layer& layer : layers_) {
            const Tensor& a = cache.activations.back();
            Tensor z({layer.out_dim()});
            for (std::size_t o = 0; o < layer.out_dim(); ++o) {
                double acc = layer.bias[o];
                const std::size_t row = o * layer.in_dim();
                for (std::size_t i = 0; i < layer.in_dim(); ++i)
                    acc += layer.weight[row + i] * a[i];
                z[o] = acc;
            }
            cache.pre_activations.push_back(z);
            if (layer.act == Activation::relu)
                for (std::size_t o = 0; o < z.size(); ++o) z[o] = std::max(0.0, z[o]);
            cache.activations.push_back(std::move(z));
        }
        return cache;
    }

    // d(loss)/d(activation into layer k), given d = d(loss)/d(z_k); applies the
    // activation derivative of layer k-1 when k > 0.
    Tensor backprop_through_layer(std::size_t k, const ForwardCache& cache,
                                  const Tensor& d) const {
        const Layer& layer = layers_[k];
        Tensor out({layer.in_dim()});
        for (std::size_t i = 0; i < layer.in_dim(); ++i) {
            double acc = 0.0;
            for (std::size_t o = 0; o < layer.out_dim(); ++o)
                acc += layer.weight[o * layer.in_dim() + i] * d[o];
            out[i] = acc;
        }
        if (k > 0 && layers_[k - 1].act == Activation::relu) {
            const Tensor& z_prev = cache.pre_activations[k - 1];
            for (std::size_t i = 0; i < out.size(); ++i)
                if (z_prev[i] <= 0.0) out[i] = 0.0;
        }
        return out;
    }

    Tensor backprop_to_input(const ForwardCache& cache, const Tensor& delta) const {
        Tensor d = delta;
        for (std::size_t k = layers_.size(); k-- > 0;)
            d = backprop_through_layer(k, cache, d);
        return d;
    }

    std::vector<Layer> layers_;
};

/// Random MLP with the given hidden widths, ReLU activations, and an
/// identity final layer.  Deterministic per seed.
inline MlpModel make_mlp(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                         std::size_t num_classes, std::uint64_t seed) {
    if (input_dim == 0 || num_classes == 0)
        throw std::invalid_argument("make_mlp: zero dimension");
    Rng rng(seed);
    std::vector<std::size_t> dims;
    dims.push_back(input_dim);
    dims.insert(dims.end(), hidden.begin(), hidden.end());
    dims.push_back(num_classes);
    std::vector<Layer> layers;
    for (std::size_t k = 0; k + 1 < dims.size(); ++k) {
        std::size_t in = dims[k], out = dims[k + 1];
        Layer layer;
        layer.weight = Tensor({out, in});
        layer.bias = Tensor({out});
        double limit = std::sqrt(6.0 / static_cast<double>(in + out));
        for (std::size_t i = 0; i < layer.weight.size(); ++i)
            layer.weight[i] = rng.uniform(-limit, limit);
        layer.act = (k + 2 == dims.size()) ? Activation::identity : Activation::relu;
        if (layer.act == Activation::relu) {
            // small positive bias keeps units initially active on [0,1] inputs
            for (std::size_t i = 0; i < layer.bias.size(); ++i) layer.bias[i] = 0.1;
        }
        layers.push_back(std::move(layer));
    }
    return MlpModel(std::move(layers));
}

/// Weighted-logit fusion of member oracles: L(x) = sum_k w_k * l_k(x).
/// Weights are normalized to sum to 1 at construction.  The loss gradient
/// backprops through the fused logits (one softmax-CE on L(x)).
class EnsembleModel : public GradientOracle {
public:
    EnsembleModel(std::vector<std::shared_ptr<const GradientOracle>> members,
                  std::vector<double> weights)
        : members_(std::move(members)), weights_(std::move(weights)) {
        if (members_.empty()) throw std::invalid_argument("EnsembleModel: no members");
        if (weights_.size() != members_.size())
            throw std::invalid_argument("EnsembleModel: weights/members length mismatch");
        double total = 0.0;
        for (double w : weights_) {
            if (w < 0.0) throw std::invalid_argument("EnsembleModel: negative weight");
            total += w;
        }
        if (total <= 0.0) throw std::invalid_argument("EnsembleModel: weights sum to zero");
        for (double& w : weights_) w /= total;
        for (const auto& m : members_) {
            if (!m) throw std::invalid_argument("EnsembleModel: null member");
            if (m->num_classes() != members_.front()->num_classes() ||
                m->input_shape() != members_.front()->input_shape())
                throw std::invalid_argument("EnsembleModel: member shape mismatch");
        }
    }

    /// Uniform 1/K weights.
    static EnsembleModel uniform(std::vector<std::shared_ptr<const GradientOracle>> members) {
        std::vector<double> w(members.size(), 1.0);
        return EnsembleModel(std::move(members), std::move(w));
    }

    std::vector<std::size_t> input_shape() const override { return members_.front()->input_shape(); }
    std::size_t num_classes() const override { return members_.front()->num_classes(); }
    const std::vector<double>& weights() const { return weights_; }
    std::size_t member_count() const { return members_.size(); }

    Tensor logits(const Tensor& x) const override {
        Tensor fused({num_classes()});
        for (std::size_t k = 0; k < members_.size(); ++k) {
            Tensor lk = members_[k]->logits(x);
            for (std::size_t i = 0; i < fused.size(); ++i) fused[i] += weights_[k] * lk[i];
        }
        return fused;
    }

    std::pair<double, Tensor> loss_and_input_grad(const Tensor& x,
                                                  std::size_t label) const override {
        if (label >= num_classes())
            throw std::invalid_argument("loss_and_input_grad: invalid label");
        auto [loss, delta] = softmax_cross_entropy(logits(x), label);
        return {loss, logits_vjp(x, delta)};
    }

    Tensor logits_vjp(const Tensor& x, const Tensor& cotangent) const override {
        Tensor grad(input_shape());
        for (std::size_t k = 0; k < members_.size(); ++k) {
            Tensor gk = members_[k]->logits_vjp(x, cotangent);
            for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += weights_[k] * gk[i];
        }
        return grad;
    }

private:
    std::vector<std::shared_ptr<const GradientOracle>> members_;
    std::vector<double> weights_;
};

inline double accuracy(const GradientOracle& oracle, const std::vector<LabeledExample>& data) {
    if (data.empty()) throw std::invalid_argument("accuracy: empty data");
    std::size_t hits = 0;
    for (const LabeledExample& ex : data)
        if (predict(oracle, ex.features) == ex.label) ++hits;
    return static_cast<double>(hits) / static_cast<double>(data.size());
}

struct TrainResult {
    MlpModel model;
    double final_accuracy = 0.0;
    std::vector<double> epoch_mean_loss;
};

/// Plain per-example SGD.  Deterministic for a fixed seed: the shuffle order
/// is the only randomness.  Throws if the loss goes non-finite, naming the epoch.
inline TrainResult train_sgd(MlpModel model, const std::vector<LabeledExample>& data,
                             std::size_t epochs, double lr, std::uint64_t seed) {
    if (data.empty()) throw std::invalid_argument("train_sgd: empty data");
    if (lr <= 0.0) throw std::invalid_argument("train_sgd: lr must be positive");
    Rng rng(seed);
    std::vector<std::size_t> order(data.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::vector<double> epoch_losses;
    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
        rng.shuffle(order);
        double loss_sum = 0.0;
        for (std::size_t idx : order) {
            const LabeledExample& ex = data[idx];
            auto [loss, grads] = model.loss_and_param_grads(ex.features, ex.label);
            if (!std::isfinite(loss))
                throw std::runtime_error("train_sgd: loss diverged at epoch " +
                                         std::to_string(epoch));
            loss_sum += loss;
            for (std::size_t k = 0; k < model.layers().size(); ++k) {
                Layer& layer = model.layers()[k];
                for (std::size_t i = 0; i < layer.weight.size(); ++i)
                    layer.weight[i] -= lr * grads.weight[k][i];
                for (std::size_t i = 0; i < layer.bias.size(); ++i)
                    layer.bias[i] -= lr * grads.bias[k][i];
            }
        }
        epoch_losses.push_back(loss_sum / static_cast<double>(data.size()));
    }
    double acc = accuracy(model, data);
    return {std::move(model), acc, std::move(epoch_losses)};
}

// ---------------------------------------------------------------------------
// Checkpoint format: "ABFGSMCK" magic, one version byte, u32 layer count,
// then per layer u32 out, u32 in, u8 activation, row-major weights and bias
// as little-endian 64-bit reals.
// ---------------------------------------------------------------------------

namespace detail {

constexpr char kCheckpointMagic[8] = {'A', 'B', 'F', 'G', 'S', 'M', 'C', 'K'};
constexpr std::uint8_t kCheckpointVersion = 1;

inline void write_u32le(std::ostream& os, std::uint32_t v) {
    char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                 static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
    os.write(b, 4);
}

inline void write_f64le(std::ostream& os, double d) {
    std::uint64_t v;
    std::memcpy(&v, &d, 8);
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    os.write(b, 8);
}

inline std::uint32_t read_u32le(std::istream& is, const char* what) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4))
        throw std::runtime_error(std::string("corrupt file: truncated while reading ") + what);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline double read_f64le(std::istream& is, const char* what) {
    unsigned char b[8];
    if (!is.read(reinterpret_cast<char*>(b), 8))
        throw std::runtime_error(std::string("corrupt file: truncated while reading ") + what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    double d;
    std::memcpy(&d, &v, 8);
    return d;
}

}  // namespace detail

inline void save_checkpoint(const MlpModel& model, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("save_checkpoint: cannot open " + path);
    os.write(detail::kCheckpointMagic, 8);
    os.put(static_cast<char>(detail::kCheckpointVersion));
    detail::write_u32le(os, static_cast<std::uint32_t>(model.layers().size()));
    for (const Layer& layer : model.layers()) {
        detail::write_u32le(os, static_cast<std::uint32_t>(layer.out_dim()));
        detail::write_u32le(os, static_cast<std::uint32_t>(layer.in_dim()));
        os.put(static_cast<char>(layer.act));
        for (std::size_t i = 0; i < layer.weight.size(); ++i)
            detail::write_f64le(os, layer.weight[i]);
        for (std::size_t i = 0; i < layer.bias.size(); ++i)
            detail::write_f64le(os, layer.bias[i]);
    }
    if (!os) throw std::runtime_error("save_checkpoint: write failed for " + path);
}

inline MlpModel load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("load_checkpoint: cannot open " + path);
    char magic[8];
    if (!is.read(magic, 8))
        throw std::runtime_error("corrupt file: truncated header in " + path);
    if (std::memcmp(magic, detail::kCheckpointMagic, 8) != 0)
        throw std::runtime_error("version mismatch: bad magic bytes in " + path);
    int version = is.get();
    if (version == std::char_traits<char>::eof())
        throw std::runtime_error("corrupt file: truncated header in " + path);
    if (version != detail::kCheckpointVersion)
        throw std::runtime_error("version mismatch: unsupported checkpoint version " +
                                 std::to_string(version));
    std::uint32_t n_layers = detail::read_u32le(is, "layer count");
    if (n_layers == 0) throw std::runtime_error("corrupt file: zero layers in " + path);
    std::vector<Layer> layers;
    for (std::uint32_t k = 0; k < n_layers; ++k) {
        std::uint32_t out = detail::read_u32le(is, "layer dims");
        std::uint32_t in = detail::read_u32le(is, "layer dims");
        int act = is.get();
        if (act == std::char_traits<char>::eof())
            throw std::runtime_error("corrupt file: truncated layer header in " + path);
        if (act != 0 && act != 1)
            throw std::runtime_error("corrupt file: unknown activation tag in " + path);
        if (out == 0 || in == 0)
            throw std::runtime_error("corrupt file: zero layer dimension in " + path);
        Layer layer;
        layer.weight = Tensor({out, in});
        layer.bias = Tensor({out});
        layer.act = static_cast<Activation>(act);
        for (std::size_t i = 0; i < layer.weight.size(); ++i)
            layer.weight[i] = detail::read_f64le(is, "weights");
        for (std::size_t i = 0; i < layer.bias.size(); ++i)
            layer.bias[i] = detail::read_f64le(is, "bias");
        layers.push_back(std::move(layer));
    }
    return MlpModel(std::move(layers));
}

inline bool models_equal(const MlpModel& a, const MlpModel& b) {
    if (a.layers().size() != b.layers().size()) return false;
    for (std::size_t k = 0; k < a.layers().size(); ++k) {
        if (a.layers()[k].act != b.layers()[k].act) return false;
        if (!(a.layers()[k].weight == b.layers()[k].weight)) return false;
        if (!(a.layers()[k].bias == b.layers()[k].bias)) return false;
    }
    return true;
}

}  // namespace abfgsm
