#pragma once

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "abfgsm/model.hpp"
#include "abfgsm/rng.hpp"
#include "abfgsm/tensor.hpp"

namespace abfgsm {

struct Dataset {
    std::size_t feature_dim = 0;
    std::size_t num_classes = 0;
    std::vector<LabeledExample> examples;
    std::string meta;  // resolved generation config, JSON text
};

struct BlobSpec {
    std::size_t n = 1000;
    std::size_t classes = 3;
    std::size_t features = 8;
    double separation = 0.3;  // per-coordinate center offset between classes
    double noise = 0.03;      // gaussian sigma around the class center
    std::uint64_t seed = 0;
};

/// Gaussian blobs in [0,1]^d.  Class centers sit at 0.5 +- separation/2 per
/// coordinate with signs drawn per class, so any two classes differ by
/// `separation` in roughly half the coordinates.  Points are clamped to [0,1].
/// Labels cycle round-robin; fully deterministic per seed.
inline Dataset make_blobs(const BlobSpec& spec) {
    if (spec.n == 0) throw std::invalid_argument("make_blobs: n == 0");
    if (spec.classes < 2) throw std::invalid_argument("make_blobs: need >= 2 classes");
    if (spec.features == 0) throw std::invalid_argument("make_blobs: features == 0");
    if (spec.noise < 0.0 || spec.separation < 0.0)
        throw std::invalid_argument("make_blobs: negative noise or separation");
    Rng rng(spec.seed);
    std::vector<std::vector<double>> centers;
    for (std::size_t c = 0; c < spec.classes; ++c) {
        std::vector<double> center(spec.features);
        bool fresh = false;
        while (!fresh) {
            for (std::size_t j = 0; j < spec.features; ++j) {
                double s = (rng.uniform() < 0.5) ? -1.0 : 1.0;
                center[j] = 0.5 + 0.5 * spec.separation * s;
            }
            fresh = std::find(centers.begin(), centers.end(), center) == centers.end();
        }
        centers.push_back(center);
    }
    Dataset ds;
    ds.feature_dim = spec.features;
    ds.num_classes = spec.classes;
    for (std::size_t i = 0; i < spec.n; ++i) {
        std::size_t label = i % spec.classes;
        Tensor x({spec.features});
        for (std::size_t j = 0; j < spec.features; ++j)
            x[j] = std::clamp(centers[label][j] + spec.noise * rng.gaussian(), 0.0, 1.0);
        ds.examples.push_back({std::move(x), label});
    }
    return ds;
}

struct RingSpec {
    std::size_t n = 1000;
    std::size_t classes = 2;
    double noise = 0.02;  // radial sigma
    std::uint64_t seed = 0;
};

/// Concentric rings in [0,1]^2 around (0.5, 0.5): class k lives at radius
/// 0.45 * (k+1)/classes with gaussian radial noise.
inline Dataset make_rings(const RingSpec& spec) {
    if (spec.n == 0) throw std::invalid_argument("make_rings: n == 0");
    if (spec.classes < 2) throw std::invalid_argument("make_rings: need >= 2 classes");
    if (spec.noise < 0.0) throw std::invalid_argument("make_rings: negative noise");
    Rng rng(spec.seed);
    Dataset ds;
    ds.feature_dim = 2;
    ds.num_classes = spec.classes;
    for (std::size_t i = 0; i < spec.n; ++i) {
        std::size_t label = i % spec.classes;
        double base_r = 0.45 * static_cast<double>(label + 1) / static_cast<double>(spec.classes);
        double r = base_r + spec.noise * rng.gaussian();
        double angle = rng.uniform(0.0, 2.0 * 3.141592653589793238462643);
        Tensor x({2});
        x[0] = std::clamp(0.5 + r * std::cos(angle), 0.0, 1.0);
        x[1] = std::clamp(0.5 + r * std::sin(angle), 0.0, 1.0);
        ds.examples.push_back({std::move(x), label});
    }
    return ds;
}

// ---------------------------------------------------------------------------
// Dataset file format: "ABFGSMDS" magic, version byte, u32 meta length and
// meta JSON bytes, u32 count, u32 feature dim, u32 class count, then per
// example the features as little-endian 64-bit reals and a u32 label.
// ---------------------------------------------------------------------------

namespace detail {
constexpr char kDatasetMagic[8] = {'A', 'B', 'F', 'G', 'S', 'M', 'D', 'S'};
constexpr std::uint8_t kDatasetVersion = 1;
}  // namespace detail

inline void save_dataset(const Dataset& ds, const std::string& path) {
    if (ds.examples.empty()) throw std::invalid_argument("save_dataset: empty dataset");
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("save_dataset: cannot open " + path);
    os.write(detail::kDatasetMagic, 8);
    os.put(static_cast<char>(detail::kDatasetVersion));
    detail::write_u32le(os, static_cast<std::uint32_t>(ds.meta.size()));
    os.write(ds.meta.data(), static_cast<std::streamsize>(ds.meta.size()));
    detail::write_u32le(os, static_cast<std::uint32_t>(ds.examples.size()));
    detail::write_u32le(os, static_cast<std::uint32_t>(ds.feature_dim));
    detail::write_u32le(os, static_cast<std::uint32_t>(ds.num_classes));
    for (const LabeledExample& ex : ds.examples) {
        if (ex.features.size() != ds.feature_dim)
            throw std::invalid_argument("save_dataset: inconsistent feature dim");
        for (std::size_t i = 0; i < ex.features.size(); ++i)
            detail::write_f64le(os, ex.features[i]);
        detail::write_u32le(os, static_cast<std::uint32_t>(ex.label));
    }
    if (!os) throw std::runtime_error("save_dataset: write failed for " + path);
}

inline Dataset load_dataset(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("load_dataset: cannot open " + path);
    char magic[8];
    if (!is.read(magic, 8)) throw std::runtime_error("corrupt file: truncated header in " + path);
    if (std::memcmp(magic, detail::kDatasetMagic, 8) != 0)
        throw std::runtime_error("version mismatch: bad magic bytes in " + path);
    int version = is.get();
    if (version != detail::kDatasetVersion)
        throw std::runtime_error("version mismatch: unsupported dataset version");
    std::uint32_t meta_len = detail::read_u32le(is, "meta length");
    Dataset ds;
    ds.meta.resize(meta_len);
    if (meta_len > 0 && !is.read(ds.meta.data(), meta_len))
        throw std::runtime_error("corrupt file: truncated meta in " + path);
    std::uint32_t count = detail::read_u32le(is, "example count");
    std::uint32_t dim = detail::read_u32le(is, "feature dim");
    std::uint32_t classes = detail::read_u32le(is, "class count");
    if (count == 0 || dim == 0 || classes == 0)
        throw std::runtime_error("corrupt file: zero-sized dataset field in " + path);
    ds.feature_dim = dim;
    ds.num_classes = classes;
    for (std::uint32_t e = 0; e < count; ++e) {
        Tensor x({dim});
        for (std::uint32_t i = 0; i < dim; ++i) x[i] = detail::read_f64le(is, "features");
        std::uint32_t label = detail::read_u32le(is, "label");
        if (label >= classes)
            throw std::runtime_error("corrupt file: label out of range in " + path);
        ds.examples.push_back({std::move(x), label});
    }
    return ds;
}

// ---------------------------------------------------------------------------
// IDX ingestion (big-endian headers, unsigned byte payloads).
// ---------------------------------------------------------------------------

namespace detail {

inline std::uint32_t read_u32be(std::istream& is, const char* what) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4))
        throw std::runtime_error(std::string("idx: truncated while reading ") + what);
    return (static_cast<std::uint32_t>(b[0]) << 24) | (static_cast<std::uint32_t>(b[1]) << 16) |
           (static_cast<std::uint32_t>(b[2]) << 8) | static_cast<std::uint32_t>(b[3]);
}

inline std::string to_hex(std::uint32_t v) {
    static const char* digits = "0123456789abcdef";
    std::string s(8, '0');
    for (int i = 7; i >= 0; --i) {
        s[static_cast<std::size_t>(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return s;
}

}  // namespace detail

/// Reads an IDX image/label file pair into a dataset: pixels scaled to [0,1],
/// labels validated against num_classes (0 means max label + 1).
inline Dataset load_idx(const std::string& images_path, const std::string& labels_path,
                        std::size_t num_classes = 0) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw std::runtime_error("idx: cannot open " + images_path);
    std::uint32_t magic = detail::read_u32be(img, "image magic");
    if (magic != 0x00000803u)
        throw std::runtime_error("idx: bad image magic 0x" + detail::to_hex(magic) + " in " +
                                 images_path);
    std::uint32_t n_images = detail::read_u32be(img, "image count");
    std::uint32_t rows = detail::read_u32be(img, "rows");
    std::uint32_t cols = detail::read_u32be(img, "cols");

    std::ifstream lab(labels_path, std::ios::binary);
    if (!lab) throw std::runtime_error("idx: cannot open " + labels_path);
    std::uint32_t lmagic = detail::read_u32be(lab, "label magic");
    if (lmagic != 0x00000801u)
        throw std::runtime_error("idx: bad label magic 0x" + detail::to_hex(lmagic) + " in " +
                                 labels_path);
    std::uint32_t n_labels = detail::read_u32be(lab, "label count");

    if (n_images != n_labels)
        throw std::runtime_error("idx: count mismatch: " + std::to_string(n_images) +
                                 " images vs " + std::to_string(n_labels) + " labels");
    if (n_images == 0) throw std::runtime_error("idx: empty image file " + images_path);

    const std::size_t dim = static_cast<std::size_t>(rows) * cols;
    Dataset ds;
    ds.feature_dim = dim;
    std::vector<unsigned char> pixel(dim);
    std::size_t max_label = 0;
    for (std::uint32_t e = 0; e < n_images; ++e) {
        if (!img.read(reinterpret_cast<char*>(pixel.data()), static_cast<std::streamsize>(dim)))
            throw std::runtime_error("idx: truncated image payload in " + images_path);
        int label = lab.get();
        if (label == std::char_traits<char>::eof())
            throw std::runtime_error("idx: truncated label payload in " + labels_path);
        Tensor x({dim});
        for (std::size_t i = 0; i < dim; ++i) x[i] = static_cast<double>(pixel[i]) / 255.0;
        max_label = std::max(max_label, static_cast<std::size_t>(label));
        ds.examples.push_back({std::move(x), static_cast<std::size_t>(label)});
    }
    ds.num_classes = (num_classes > 0) ? num_classes : max_label + 1;
    if (max_label >= ds.num_classes)
        throw std::runtime_error("idx: label " + std::to_string(max_label) +
                                 " out of range for " + std::to_string(ds.num_classes) + " classes");
    return ds;
}

}  // namespace abfgsm
