#pragma once

#include <cstdint>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "abfgsm/attack.hpp"
#include "abfgsm/model.hpp"

namespace abfgsm {

struct NamedModel {
    std::string name;
    std::shared_ptr<const GradientOracle> oracle;
};

/// Fraction of (x_adv, true_label) pairs the oracle misclassifies.
inline double success_rate(const GradientOracle& oracle,
                           const std::vector<std::pair<Tensor, std::size_t>>& adversarials) {
    if (adversarials.empty()) throw std::invalid_argument("success_rate: empty list");
    std::size_t hits = 0;
    for (const auto& [x_adv, label] : adversarials)
        if (predict(oracle, x_adv) != label) ++hits;
    return static_cast<double>(hits) / static_cast<double>(adversarials.size());
}

/// Examples every listed model classifies correctly.  Evaluating attacks on
/// this subset makes success identical to an attack-induced flip, and the
/// eps = 0 rate exactly zero.
inline std::vector<LabeledExample> clean_correct_subset(
    const std::vector<NamedModel>& models, const std::vector<LabeledExample>& examples) {
    std::vector<LabeledExample> kept;
    for (const LabeledExample& ex : examples) {
        bool all_correct = true;
        for (const NamedModel& m : models)
            if (predict(*m.oracle, ex.features) != ex.label) {
                all_correct = false;
                break;
            }
        if (all_correct) kept.push_back(ex);
    }
    return kept;
}

/// method x source x target grid of success rates.  Diagonal entries
/// (source == target) are white-box generation rates; off-diagonal entries
/// are black-box transfer rates.
struct TransferMatrix {
    std::vector<std::string> methods;
    std::vector<std::string> source_models;
    std::vector<std::string> target_models;
    std::vector<std::vector<std::vector<double>>> rates;  // [method][source][target]
    std::size_t n_examples = 0;
    double eps_ball = 0.0;
    std::uint64_t seed = 0;

    bool operator==(const TransferMatrix& o) const {
        return methods == o.methods && source_models == o.source_models &&
               target_models == o.target_models && rates == o.rates &&
               n_examples == o.n_examples && eps_ball == o.eps_ball && seed == o.seed;
    }
};

/// Crafts adversarials on every source model with every method and scores
/// them against every target model.  `dataset` is filtered to the examples
/// all models classify correctly before any attack runs.
inline TransferMatrix build_transfer_matrix(const std::vector<NamedModel>& models,
                                            const std::vector<AttackMethod>& methods,
                                            const std::vector<LabeledExample>& dataset,
                                            const AttackConfig& cfg, std::uint64_t seed = 0) {
    if (models.size() < 2) throw std::invalid_argument("build_transfer_matrix: need >= 2 models");
    if (methods.empty()) throw std::invalid_argument("build_transfer_matrix: empty methods list");
    cfg.validate();

    std::vector<LabeledExample> subset = clean_correct_subset(models, dataset);
    if (subset.empty())
        throw std::invalid_argument("build_transfer_matrix: no example passes the clean filter");

    TransferMatrix out;
    for (const AttackMethod m : methods) out.methods.push_back(to_string(m));
    for (const NamedModel& m : models) {
        out.source_models.push_back(m.name);
        out.target_models.push_back(m.name);
    }
    out.n_examples = subset.size();
    out.eps_ball = cfg.eps_ball;
    out.seed = seed;

    for (const AttackMethod method : methods) {
        AttackConfig run_cfg = cfg;
        run_cfg.method = method;
        std::vector<std::vector<double>> per_source;
        for (const NamedModel& source : models) {
            std::vector<std::pair<Tensor, std::size_t>> adversarials;
            adversarials.reserve(subset.size());
            for (const LabeledExample& ex : subset) {
                AttackResult r = run_attack(*source.oracle, ex, run_cfg);
                adversarials.emplace_back(std::move(r.x_adv), ex.label);
            }
            std::vector<double> row;
            for (const NamedModel& target : models)
                row.push_back(success_rate(*target.oracle, adversarials));
            per_source.push_back(std::move(row));
        }
        out.rates.push_back(std::move(per_source));
    }
    return out;
}

struct HoldoutSpec {
    std::vector<NamedModel> all_models;
    std::string held_out;
    // weights over the remaining members in roster order; uniform if absent
    std::optional<std::vector<double>> ensemble_weights;
};

struct HoldoutResult {
    std::vector<std::string> methods;
    std::vector<double> ensemble_rates;  // white-box rate on the fused-logit ensemble
    std::vector<double> holdout_rates;   // transfer rate to the held-out model
    std::size_t n_examples = 0;
};

/// Crafts adversarials on the ensemble of all models except the held-out one
/// and scores them on both the ensemble (white-box) and the held-out model
/// (transfer).  Filters the dataset to examples all participating models,
/// including the held-out one, classify correctly.
inline HoldoutResult run_holdout_eval(const HoldoutSpec& spec,
                                      const std::vector<AttackMethod>& methods,
                                      const std::vector<LabeledExample>& dataset,
                                      const AttackConfig& cfg) {
    if (methods.empty()) throw std::invalid_argument("run_holdout_eval: empty methods list");
    cfg.validate();

    std::vector<NamedModel> members;
    std::shared_ptr<const GradientOracle> held_out;
    for (const NamedModel& m : spec.all_models) {
        if (m.name == spec.held_out)
            held_out = m.oracle;
        else
            members.push_back(m);
    }
    if (!held_out)
        throw std::invalid_argument("run_holdout_eval: held-out model '" + spec.held_out +
                                    "' not in roster");
    if (members.size() < 2)
        throw std::invalid_argument("run_holdout_eval: fewer than 2 models remain in the ensemble");

    std::vector<std::shared_ptr<const GradientOracle>> oracles;
    for (const NamedModel& m : members) oracles.push_back(m.oracle);
    std::vector<double> weights =
        spec.ensemble_weights ? *spec.ensemble_weights : std::vector<double>(members.size(), 1.0);
    EnsembleModel ensemble(std::move(oracles), std::move(weights));

    std::vector<LabeledExample> subset = clean_correct_subset(spec.all_models, dataset);
    if (subset.empty())
        throw std::invalid_argument("run_holdout_eval: no example passes the clean filter");

    HoldoutResult out;
    out.n_examples = subset.size();
    for (const AttackMethod method : methods) {
        AttackConfig run_cfg = cfg;
        run_cfg.method = method;
        std::vector<std::pair<Tensor, std::size_t>> adversarials;
        adversarials.reserve(subset.size());
        for (const LabeledExample& ex : subset) {
            AttackResult r = run_attack(ensemble, ex, run_cfg);
            adversarials.emplace_back(std::move(r.x_adv), ex.label);
        }
        out.methods.push_back(to_string(method));
        out.ensemble_rates.push_back(success_rate(ensemble, adversarials));
        out.holdout_rates.push_back(success_rate(*held_out, adversarials));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Report rendering.  JSON reports round-trip losslessly and embed the full
// resolved config; CSV reports carry the config as '#' comment lines and the
// per-source blocks follow the usual transfer-table layout.
// ---------------------------------------------------------------------------

inline nlohmann::json matrix_to_json(const TransferMatrix& m) {
    nlohmann::json j;
    j["methods"] = m.methods;
    j["source_models"] = m.source_models;
    j["target_models"] = m.target_models;
    j["rates"] = m.rates;
    j["n_examples"] = m.n_examples;
    j["eps_ball"] = m.eps_ball;
    j["seed"] = m.seed;
    return j;
}

inline TransferMatrix matrix_from_json(const nlohmann::json& j) {
    TransferMatrix m;
    m.methods = j.at("methods").get<std::vector<std::string>>();
    m.source_models = j.at("source_models").get<std::vector<std::string>>();
    m.target_models = j.at("target_models").get<std::vector<std::string>>();
    m.rates = j.at("rates").get<std::vector<std::vector<std::vector<double>>>>();
    m.n_examples = j.at("n_examples").get<std::size_t>();
    m.eps_ball = j.at("eps_ball").get<double>();
    m.seed = j.at("seed").get<std::uint64_t>();
    return m;
}

inline std::string render_matrix_json(const TransferMatrix& m, const nlohmann::json& config) {
    if (m.methods.empty()) throw std::invalid_argument("render_matrix_json: empty methods");
    nlohmann::json j;
    j["config"] = config;
    j["matrix"] = matrix_to_json(m);
    return j.dump(2) + "\n";
}

inline std::string format_rate(double r) {
    std::ostringstream os;
    os.precision(17);
    os << r;
    return os.str();
}

/// One block per source model; each block has a `method` header row plus one
/// row per method, all with 1 + #targets columns.
inline std::string render_matrix_csv(const TransferMatrix& m,
                                     const std::vector<std::string>& config_lines = {}) {
    if (m.methods.empty()) throw std::invalid_argument("render_matrix_csv: empty methods");
    std::ostringstream os;
    for (const std::string& line : config_lines) os << "# " << line << "\n";
    os << "# n_examples=" << m.n_examples << " eps_ball=" << format_rate(m.eps_ball)
       << " seed=" << m.seed << "\n";
    for (std::size_t s = 0; s < m.source_models.size(); ++s) {
        os << "source:" << m.source_models[s];
        for (std::size_t t = 0; t < m.target_models.size(); ++t) os << "," << m.target_models[t];
        os << "\n";
        for (std::size_t k = 0; k < m.methods.size(); ++k) {
            os << m.methods[k];
            for (std::size_t t = 0; t < m.target_models.size(); ++t)
                os << "," << format_rate(m.rates[k][s][t]);
            os << "\n";
        }
    }
    return os.str();
}

/// Table-II-shaped aggregate: one column per held-out model, Ensemble and
/// Hold-out blocks, and a trailing Avg. column.
struct HoldoutTable {
    std::vector<std::string> methods;
    std::vector<std::string> held_out_names;
    std::vector<std::vector<double>> ensemble_rates;  // [method][held_out]
    std::vector<std::vector<double>> holdout_rates;   // [method][held_out]
    std::size_t n_examples = 0;
    double eps_ball = 0.0;
    std::uint64_t seed = 0;

    bool operator==(const HoldoutTable& o) const {
        return methods == o.methods && held_out_names == o.held_out_names &&
               ensemble_rates == o.ensemble_rates && holdout_rates == o.holdout_rates &&
               n_examples == o.n_examples && eps_ball == o.eps_ball && seed == o.seed;
    }
};

inline nlohmann::json holdout_table_to_json(const HoldoutTable& t) {
    nlohmann::json j;
    j["methods"] = t.methods;
    j["held_out_names"] = t.held_out_names;
    j["ensemble_rates"] = t.ensemble_rates;
    j["holdout_rates"] = t.holdout_rates;
    j["n_examples"] = t.n_examples;
    j["eps_ball"] = t.eps_ball;
    j["seed"] = t.seed;
    return j;
}

inline HoldoutTable holdout_table_from_json(const nlohmann::json& j) {
    HoldoutTable t;
    t.methods = j.at("methods").get<std::vector<std::string>>();
    t.held_out_names = j.at("held_out_names").get<std::vector<std::string>>();
    t.ensemble_rates = j.at("ensemble_rates").get<std::vector<std::vector<double>>>();
    t.holdout_rates = j.at("holdout_rates").get<std::vector<std::vector<double>>>();
    t.n_examples = j.at("n_examples").get<std::size_t>();
    t.eps_ball = j.at("eps_ball").get<double>();
    t.seed = j.at("seed").get<std::uint64_t>();
    return t;
}

inline std::string render_holdout_json(const HoldoutTable& t, const nlohmann::json& config) {
    if (t.methods.empty()) throw std::invalid_argument("render_holdout_json: empty methods");
    nlohmann::json j;
    j["config"] = config;
    j["table"] = holdout_table_to_json(t);
    return j.dump(2) + "\n";
}

inline std::string render_holdout_csv(const HoldoutTable& t,
                                      const std::vector<std::string>& config_lines = {}) {
    if (t.methods.empty()) throw std::invalid_argument("render_holdout_csv: empty methods");
    std::ostringstream os;
    for (const std::string& line : config_lines) os << "# " << line << "\n";
    os << "# n_examples=" << t.n_examples << " eps_ball=" << format_rate(t.eps_ball)
       << " seed=" << t.seed << "\n";
    auto block = [&](const char* title, const std::vector<std::vector<double>>& rates) {
        os << title;
        for (const std::string& name : t.held_out_names) os << ",-" << name;
        os << ",avg\n";
        for (std::size_t k = 0; k < t.methods.size(); ++k) {
            os << t.methods[k];
            double sum = 0.0;
            for (std::size_t c = 0; c < t.held_out_names.size(); ++c) {
                os << "," << format_rate(rates[k][c]);
                sum += rates[k][c];
            }
            os << "," << format_rate(sum / static_cast<double>(t.held_out_names.size())) << "\n";
        }
    };
    block("ensemble", t.ensemble_rates);
    block("holdout", t.holdout_rates);
    return os.str();
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("write_text_file: cannot open " + path);
    os.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!os) throw std::runtime_error("write_text_file: write failed for " + path);
}

}  // namespace abfgsm
