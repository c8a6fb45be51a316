#include <catch2/catch_amalgamated.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>

#include "abfgsm/config.hpp"
#include "abfgsm/dataset.hpp"

using namespace abfgsm;

namespace {

std::string temp_path(const char* name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

std::string slurp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

void write_be32(std::ostream& os, std::uint32_t v) {
    char b[4] = {static_cast<char>((v >> 24) & 0xff), static_cast<char>((v >> 16) & 0xff),
                 static_cast<char>((v >> 8) & 0xff), static_cast<char>(v & 0xff)};
    os.write(b, 4);
}

// 2 images of 2x2 pixels plus labels, assembled by hand
void write_idx_fixture(const std::string& img_path, const std::string& lab_path,
                       std::uint32_t img_magic = 0x00000803u,
                       std::uint32_t lab_magic = 0x00000801u, std::uint32_t n_labels = 2) {
    std::ofstream img(img_path, std::ios::binary);
    write_be32(img, img_magic);
    write_be32(img, 2);  // count
    write_be32(img, 2);  // rows
    write_be32(img, 2);  // cols
    const unsigned char pixels[8] = {0, 51, 102, 153, 204, 255, 10, 20};
    img.write(reinterpret_cast<const char*>(pixels), 8);
    img.close();

    std::ofstream lab(lab_path, std::ios::binary);
    write_be32(lab, lab_magic);
    write_be32(lab, n_labels);
    const unsigned char labels[2] = {1, 0};
    lab.write(reinterpret_cast<const char*>(labels), std::min<std::uint32_t>(n_labels, 2));
    lab.close();
}

}  // namespace

TEST_CASE("blob generation", "[data]") {
    SECTION("rejects empty or degenerate requests") {
        BlobSpec bad;
        bad.n = 0;
        CHECK_THROWS_AS(make_blobs(bad), std::invalid_argument);
        bad = BlobSpec{};
        bad.classes = 1;
        CHECK_THROWS_AS(make_blobs(bad), std::invalid_argument);
    }
    SECTION("same seed gives identical file bytes") {
        BlobSpec spec;
        spec.n = 50;
        spec.seed = 9;
        Dataset a = make_blobs(spec);
        Dataset b = make_blobs(spec);
        a.meta = b.meta = "{\"kind\":\"blobs\"}";
        std::string pa = temp_path("abfgsm_blobs_a.ds"), pb = temp_path("abfgsm_blobs_b.ds");
        save_dataset(a, pa);
        save_dataset(b, pb);
        CHECK(slurp(pa) == slurp(pb));
        std::filesystem::remove(pa);
        std::filesystem::remove(pb);
    }
    SECTION("features stay in the unit box and labels cycle") {
        BlobSpec spec;
        spec.n = 90;
        spec.classes = 3;
        Dataset ds = make_blobs(spec);
        CHECK(ds.examples.size() == 90);
        for (std::size_t i = 0; i < ds.examples.size(); ++i) {
            CHECK(ds.examples[i].label == i % 3);
            for (std::size_t j = 0; j < ds.feature_dim; ++j) {
                CHECK(ds.examples[i].features[j] >= 0.0);
                CHECK(ds.examples[i].features[j] <= 1.0);
            }
        }
    }
}

TEST_CASE("ring generation", "[data]") {
    RingSpec spec;
    spec.n = 60;
    spec.classes = 2;
    spec.seed = 4;
    Dataset ds = make_rings(spec);
    CHECK(ds.feature_dim == 2);
    CHECK(ds.examples.size() == 60);
    Dataset again = make_rings(spec);
    for (std::size_t i = 0; i < ds.examples.size(); ++i)
        CHECK(ds.examples[i].features == again.examples[i].features);
}

TEST_CASE("dataset file round-trip", "[data]") {
    BlobSpec spec;
    spec.n = 40;
    spec.classes = 2;
    spec.features = 5;
    spec.seed = 17;
    Dataset ds = make_blobs(spec);
    ds.meta = "{\"origin\":\"test\"}";
    std::string path = temp_path("abfgsm_roundtrip.ds");
    save_dataset(ds, path);
    Dataset back = load_dataset(path);
    CHECK(back.feature_dim == ds.feature_dim);
    CHECK(back.num_classes == ds.num_classes);
    CHECK(back.meta == ds.meta);
    REQUIRE(back.examples.size() == ds.examples.size());
    for (std::size_t i = 0; i < ds.examples.size(); ++i) {
        CHECK(back.examples[i].features == ds.examples[i].features);
        CHECK(back.examples[i].label == ds.examples[i].label);
    }
    SECTION("bad magic is a version mismatch") {
        std::ofstream os(path, std::ios::binary);
        os << "GARBAGEGARBAGEGARBAGE";
        os.close();
        CHECK_THROWS_WITH(load_dataset(path), Catch::Matchers::ContainsSubstring("version"));
    }
    std::filesystem::remove(path);
}

TEST_CASE("idx ingestion", "[data]") {
    std::string img = temp_path("abfgsm_images.idx");
    std::string lab = temp_path("abfgsm_labels.idx");

    SECTION("hand-built fixture decodes to bytes/255") {
        write_idx_fixture(img, lab);
        Dataset ds = load_idx(img, lab);
        REQUIRE(ds.examples.size() == 2);
        CHECK(ds.feature_dim == 4);
        CHECK(ds.num_classes == 2);
        const double want0[4] = {0.0, 51.0 / 255.0, 102.0 / 255.0, 153.0 / 255.0};
        const double want1[4] = {204.0 / 255.0, 1.0, 10.0 / 255.0, 20.0 / 255.0};
        for (std::size_t i = 0; i < 4; ++i) {
            CHECK(ds.examples[0].features[i] == want0[i]);
            CHECK(ds.examples[1].features[i] == want1[i]);
        }
        CHECK(ds.examples[0].label == 1);
        CHECK(ds.examples[1].label == 0);
    }
    SECTION("wrong magic names the value read") {
        write_idx_fixture(img, lab, 0x12345678u);
        CHECK_THROWS_WITH(load_idx(img, lab),
                          Catch::Matchers::ContainsSubstring("12345678"));
    }
    SECTION("count mismatch between files") {
        write_idx_fixture(img, lab, 0x00000803u, 0x00000801u, 3);
        CHECK_THROWS_WITH(load_idx(img, lab),
                          Catch::Matchers::ContainsSubstring("count mismatch"));
    }
    SECTION("truncated image payload") {
        write_idx_fixture(img, lab);
        std::filesystem::resize_file(img, 18);  // header + part of image 0
        CHECK_THROWS_WITH(load_idx(img, lab),
                          Catch::Matchers::ContainsSubstring("truncated"));
    }
    SECTION("labels outside the declared class count") {
        write_idx_fixture(img, lab);
        CHECK_THROWS_WITH(load_idx(img, lab, 1),
                          Catch::Matchers::ContainsSubstring("out of range"));
    }
    std::filesystem::remove(img);
    std::filesystem::remove(lab);
}

TEST_CASE("experiment config round-trips", "[config]") {
    ExperimentConfig cfg;
    cfg.seed = 99;
    cfg.dataset.kind = "blobs";
    cfg.dataset.path = "data/train.ds";
    cfg.dataset.n = 1234;
    cfg.dataset.classes = 4;
    cfg.dataset.features = 9;
    cfg.dataset.separation = 0.27;
    cfg.dataset.noise = 0.013;
    cfg.models = {{"alpha", {16, 16}, 1, "ckpt/alpha.bin", 40, 0.05},
                  {"beta", {24}, 2, "ckpt/beta.bin", 35, 0.02}};
    cfg.attack.eps_ball = 0.1;
    cfg.attack.steps = 10;
    cfg.attack.step_alpha = 0.015;
    cfg.attack.momentum_mu = 0.9;
    cfg.attack.beta1 = 0.95;
    cfg.attack.beta2 = 0.9995;
    cfg.attack.stabilizer_delta = 1e-13;
    cfg.attack.amsgrad = false;
    cfg.attack.method = AttackMethod::nifgsm;
    cfg.attack.ai_tau_l2 = true;
    cfg.methods = {AttackMethod::ifgsm, AttackMethod::abfgsm};
    cfg.out_dir = "runs/exp1";

    ExperimentConfig back = parse_config(render_config(cfg));
    CHECK(back == cfg);

    SECTION("absent step_alpha stays absent") {
        cfg.attack.step_alpha.reset();
        ExperimentConfig b2 = parse_config(render_config(cfg));
        CHECK(!b2.attack.step_alpha.has_value());
        CHECK(b2 == cfg);
    }
    SECTION("parse rejects malformed text") {
        CHECK_THROWS(parse_config("not json at all"));
        CHECK_THROWS(parse_config("{\"seed\": 1}"));
    }
}
