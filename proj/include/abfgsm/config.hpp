#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "abfgsm/attack.hpp"

namespace abfgsm {

/// Synthetic dataset parameters or a path to an existing dataset file.
struct DatasetSpec {
    std::string kind = "blobs";  // blobs | rings | file
    std::string path;            // dataset file; output for generators, input for "file"
    std::size_t n = 1000;
    std::size_t classes = 3;
    std::size_t features = 8;
    double separation = 0.3;
    double noise = 0.03;

    bool operator==(const DatasetSpec&) const = default;
};

struct ModelSpec {
    std::string name;
    std::vector<std::size_t> hidden;
    std::uint64_t seed = 0;
    std::string checkpoint;
    std::size_t epochs = 30;
    double lr = 0.1;

    bool operator==(const ModelSpec&) const = default;
};

struct ExperimentConfig {
    std::uint64_t seed = 0;
    DatasetSpec dataset;
    std::vector<ModelSpec> models;
    AttackConfig attack;
    std::vector<AttackMethod> methods;
    std::string out_dir = "out";

    bool operator==(const ExperimentConfig&) const = default;
};

inline nlohmann::json attack_to_json(const AttackConfig& a) {
    nlohmann::json j;
    j["eps_ball"] = a.eps_ball;
    j["steps"] = a.steps;
    if (a.step_alpha)
        j["step_alpha"] = *a.step_alpha;
    else
        j["step_alpha"] = nullptr;
    j["momentum_mu"] = a.momentum_mu;
    j["beta1"] = a.beta1;
    j["beta2"] = a.beta2;
    j["stabilizer_delta"] = a.stabilizer_delta;
    j["amsgrad"] = a.amsgrad;
    j["domain_lo"] = a.domain_lo;
    j["domain_hi"] = a.domain_hi;
    j["method"] = to_string(a.method);
    j["ai_tau_l2"] = a.ai_tau_l2;
    return j;
}

inline AttackConfig attack_from_json(const nlohmann::json& j) {
    AttackConfig a;
    a.eps_ball = j.at("eps_ball").get<double>();
    a.steps = j.at("steps").get<std::size_t>();
    if (j.contains("step_alpha") && !j.at("step_alpha").is_null())
        a.step_alpha = j.at("step_alpha").get<double>();
    a.momentum_mu = j.at("momentum_mu").get<double>();
    a.beta1 = j.at("beta1").get<double>();
    a.beta2 = j.at("beta2").get<double>();
    a.stabilizer_delta = j.at("stabilizer_delta").get<double>();
    a.amsgrad = j.at("amsgrad").get<bool>();
    a.domain_lo = j.at("domain_lo").get<double>();
    a.domain_hi = j.at("domain_hi").get<double>();
    a.method = attack_method_from_string(j.at("method").get<std::string>());
    a.ai_tau_l2 = j.at("ai_tau_l2").get<bool>();
    return a;
}

inline nlohmann::json config_to_json(const ExperimentConfig& c) {
    nlohmann::json j;
    j["seed"] = c.seed;
    j["dataset"] = {{"kind", c.dataset.kind},   {"path", c.dataset.path},
                    {"n", c.dataset.n},         {"classes", c.dataset.classes},
                    {"features", c.dataset.features}, {"separation", c.dataset.separation},
                    {"noise", c.dataset.noise}};
    j["models"] = nlohmann::json::array();
    for (const ModelSpec& m : c.models)
        j["models"].push_back({{"name", m.name},
                               {"hidden", m.hidden},
                               {"seed", m.seed},
                               {"checkpoint", m.checkpoint},
                               {"epochs", m.epochs},
                               {"lr", m.lr}});
    j["attack"] = attack_to_json(c.attack);
    j["methods"] = nlohmann::json::array();
    for (AttackMethod m : c.methods) j["methods"].push_back(to_string(m));
    j["out_dir"] = c.out_dir;
    return j;
}

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
    ExperimentConfig c;
    c.seed = j.at("seed").get<std::uint64_t>();
    const nlohmann::json& d = j.at("dataset");
    c.dataset.kind = d.at("kind").get<std::string>();
    c.dataset.path = d.at("path").get<std::string>();
    c.dataset.n = d.at("n").get<std::size_t>();
    c.dataset.classes = d.at("classes").get<std::size_t>();
    c.dataset.features = d.at("features").get<std::size_t>();
    c.dataset.separation = d.at("separation").get<double>();
    c.dataset.noise = d.at("noise").get<double>();
    for (const nlohmann::json& mj : j.at("models")) {
        ModelSpec m;
        m.name = mj.at("name").get<std::string>();
        m.hidden = mj.at("hidden").get<std::vector<std::size_t>>();
        m.seed = mj.at("seed").get<std::uint64_t>();
        m.checkpoint = mj.at("checkpoint").get<std::string>();
        m.epochs = mj.at("epochs").get<std::size_t>();
        m.lr = mj.at("lr").get<double>();
        c.models.push_back(std::move(m));
    }
    c.attack = attack_from_json(j.at("attack"));
    for (const nlohmann::json& mj : j.at("methods"))
        c.methods.push_back(attack_method_from_string(mj.get<std::string>()));
    c.out_dir = j.at("out_dir").get<std::string>();
    return c;
}

inline std::string render_config(const ExperimentConfig& c) {
    return config_to_json(c).dump(2) + "\n";
}

inline ExperimentConfig parse_config(const std::string& text) {
    return config_from_json(nlohmann::json::parse(text));
}

inline ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("config: cannot open " + path);
    std::ostringstream buf;
    buf << is.rdbuf();
    return parse_config(buf.str());
}

}  // namespace abfgsm
