// Command-line driver: dataset generation/ingestion, model training, attack
// runs, transfer matrices, and hold-out experiments.  Every output embeds the
// resolved configuration so runs can be reproduced from the artifact alone.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "abfgsm/abfgsm.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonFlags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<double> eps;
    std::optional<std::size_t> steps;
    std::optional<std::string> method;
    std::string out;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_path, "experiment config file (JSON)");
    cmd->add_option("--seed", flags.seed, "override the global seed");
    cmd->add_option("--eps", flags.eps, "override the attack eps ball");
    cmd->add_option("--steps", flags.steps, "override the attack step count");
    cmd->add_option("--method", flags.method, "override the attack method");
    cmd->add_option("--out", flags.out, "output directory or file");
}

abfgsm::ExperimentConfig resolve_config(const CommonFlags& flags) {
    abfgsm::ExperimentConfig cfg;
    if (!flags.config_path.empty()) cfg = abfgsm::load_config_file(flags.config_path);
    if (flags.seed) cfg.seed = *flags.seed;
    if (flags.eps) cfg.attack.eps_ball = *flags.eps;
    if (flags.steps) cfg.attack.steps = *flags.steps;
    if (flags.method) {
        cfg.attack.method = abfgsm::attack_method_from_string(*flags.method);
        cfg.methods = {cfg.attack.method};
    }
    if (!flags.out.empty()) cfg.out_dir = flags.out;
    return cfg;
}

abfgsm::Dataset generate_dataset(const abfgsm::ExperimentConfig& cfg) {
    abfgsm::Dataset ds;
    if (cfg.dataset.kind == "blobs") {
        abfgsm::BlobSpec spec;
        spec.n = cfg.dataset.n;
        spec.classes = cfg.dataset.classes;
        spec.features = cfg.dataset.features;
        spec.separation = cfg.dataset.separation;
        spec.noise = cfg.dataset.noise;
        spec.seed = cfg.seed;
        ds = abfgsm::make_blobs(spec);
    } else if (cfg.dataset.kind == "rings") {
        abfgsm::RingSpec spec;
        spec.n = cfg.dataset.n;
        spec.classes = cfg.dataset.classes;
        spec.noise = cfg.dataset.noise;
        spec.seed = cfg.seed;
        ds = abfgsm::make_rings(spec);
    } else {
        throw std::invalid_argument("gen-data: unknown dataset kind '" + cfg.dataset.kind + "'");
    }
    ds.meta = abfgsm::config_to_json(cfg).dump();
    return ds;
}

abfgsm::Dataset load_dataset_for(const abfgsm::ExperimentConfig& cfg) {
    if (cfg.dataset.path.empty())
        throw std::invalid_argument("no dataset path configured; run gen-data first");
    return abfgsm::load_dataset(cfg.dataset.path);
}

std::vector<abfgsm::NamedModel> load_roster(const abfgsm::ExperimentConfig& cfg) {
    if (cfg.models.empty()) throw std::invalid_argument("config lists no models");
    std::vector<abfgsm::NamedModel> roster;
    for (const abfgsm::ModelSpec& spec : cfg.models) {
        if (spec.checkpoint.empty())
            throw std::invalid_argument("model '" + spec.name + "' has no checkpoint path");
        roster.push_back({spec.name, std::make_shared<abfgsm::MlpModel>(
                                         abfgsm::load_checkpoint(spec.checkpoint))});
    }
    return roster;
}

void ensure_out_dir(const std::string& dir) {
    if (!dir.empty()) fs::create_directories(dir);
}

std::vector<std::string> config_comment_lines(const abfgsm::ExperimentConfig& cfg) {
    return {abfgsm::config_to_json(cfg).dump()};
}

int cmd_gen_data(const CommonFlags& flags) {
    abfgsm::ExperimentConfig cfg = resolve_config(flags);
    if (cfg.dataset.path.empty()) {
        if (flags.out.empty()) throw std::invalid_argument("gen-data: need --out or dataset.path");
        cfg.dataset.path = flags.out;
    }
    abfgsm::Dataset ds = generate_dataset(cfg);
    abfgsm::save_dataset(ds, cfg.dataset.path);
    std::printf("wrote %zu examples (%zu features, %zu classes) to %s\n", ds.examples.size(),
                ds.feature_dim, ds.num_classes, cfg.dataset.path.c_str());
    return 0;
}

int cmd_ingest_idx(const CommonFlags& flags, const std::string& images,
                   const std::string& labels, std::size_t classes) {
    abfgsm::ExperimentConfig cfg = resolve_config(flags);
    std::string out = !flags.out.empty() ? flags.out : cfg.dataset.path;
    if (out.empty()) throw std::invalid_argument("ingest-idx: need --out or dataset.path");
    abfgsm::Dataset ds = abfgsm::load_idx(images, labels, classes);
    json meta;
    meta["config"] = abfgsm::config_to_json(cfg);
    meta["source_images"] = images;
    meta["source_labels"] = labels;
    ds.meta = meta.dump();
    abfgsm::save_dataset(ds, out);
    std::printf("ingested %zu examples (%zu features, %zu classes) to %s\n", ds.examples.size(),
                ds.feature_dim, ds.num_classes, out.c_str());
    return 0;
}

int cmd_train(const CommonFlags& flags) {
    abfgsm::ExperimentConfig cfg = resolve_config(flags);
    abfgsm::Dataset ds = load_dataset_for(cfg);
    if (cfg.models.empty()) throw std::invalid_argument("train: config lists no models");
    ensure_out_dir(cfg.out_dir);

    json report;
    report["config"] = abfgsm::config_to_json(cfg);
    report["models"] = json::array();
    for (const abfgsm::ModelSpec& spec : cfg.models) {
        abfgsm::MlpModel init =
            abfgsm::make_mlp(ds.feature_dim, spec.hidden, ds.num_classes, spec.seed);
        abfgsm::TrainResult tr =
            abfgsm::train_sgd(init, ds.examples, spec.epochs, spec.lr, spec.seed + cfg.seed);
        if (spec.checkpoint.empty())
            throw std::invalid_argument("train: model '" + spec.name + "' has no checkpoint path");
        abfgsm::save_checkpoint(tr.model, spec.checkpoint);
        std::printf("trained %-12s accuracy %.4f -> %s\n", spec.name.c_str(), tr.final_accuracy,
                    spec.checkpoint.c_str());
        report["models"].push_back(
            {{"name", spec.name}, {"accuracy", tr.final_accuracy}, {"checkpoint", spec.checkpoint}});
    }
    abfgsm::write_text_file(cfg.out_dir + "/train_report.json", report.dump(2) + "\n");
    return 0;
}

int cmd_attack(const CommonFlags& flags, const std::string& model_name) {
    abfgsm::ExperimentConfig cfg = resolve_config(flags);
    abfgsm::Dataset ds = load_dataset_for(cfg);
    std::vector<abfgsm::NamedModel> roster = load_roster(cfg);
    const abfgsm::NamedModel* chosen = &roster.front();
    if (!model_name.empty()) {
        chosen = nullptr;
        for (const abfgsm::NamedModel& m : roster)
            if (m.name == model_name) chosen = &m;
        if (!chosen) throw std::invalid_argument("attack: unknown model '" + model_name + "'");
    }
    ensure_out_dir(cfg.out_dir);

    json dump;
    dump["config"] = abfgsm::config_to_json(cfg);
    dump["model"] = chosen->name;
    dump["examples"] = json::array();
    std::size_t flips = 0;
    for (const abfgsm::LabeledExample& ex : ds.examples) {
        abfgsm::AttackResult r = abfgsm::run_attack(*chosen->oracle, ex, cfg.attack);
        if (r.success) ++flips;
        dump["examples"].push_back({{"label", ex.label},
                                    {"x", ex.features.data()},
                                    {"x_adv", r.x_adv.data()},
                                    {"success", r.success},
                                    {"linf_distance", r.linf_distance},
                                    {"final_loss", r.final_loss},
                                    {"iterations", r.iterations_used}});
    }
    dump["success_rate"] =
        static_cast<double>(flips) / static_cast<double>(ds.examples.size());
    std::string out_file = cfg.out_dir + "/attack_" + abfgsm::to_string(cfg.attack.method) +
                           "_" + chosen->name + ".json";
    abfgsm::write_text_file(out_file, dump.dump(2) + "\n");
    std::printf("attack %s on %s: success rate %.4f over %zu examples -> %s\n",
                abfgsm::to_string(cfg.attack.method), chosen->name.c_str(),
                dump["success_rate"].get<double>(), ds.examples.size(), out_file.c_str());
    return 0;
}

int cmd_matrix(const CommonFlags& flags) {
    abfgsm::ExperimentConfig cfg = resolve_config(flags);
    if (cfg.methods.empty()) throw std::invalid_argument("matrix: config lists no methods");
    abfgsm::Dataset ds = load_dataset_for(cfg);
    std::vector<abfgsm::NamedModel> roster = load_roster(cfg);
    ensure_out_dir(cfg.out_dir);

    abfgsm::TransferMatrix m =
        abfgsm::build_transfer_matrix(roster, cfg.methods, ds.examples, cfg.attack, cfg.seed);
    abfgsm::write_text_file(cfg.out_dir + "/matrix.csv",
                            abfgsm::render_matrix_csv(m, config_comment_lines(cfg)));
    abfgsm::write_text_file(cfg.out_dir + "/matrix.json",
                            abfgsm::render_matrix_json(m, abfgsm::config_to_json(cfg)));
    std::printf("transfer matrix over %zu methods x %zu models (%zu examples) -> %s\n",
                m.methods.size(), m.source_models.size(), m.n_examples, cfg.out_dir.c_str());
    return 0;
}

int cmd_holdout(const CommonFlags& flags, const std::string& held_out_only) {
    abfgsm::ExperimentConfig cfg = resolve_config(flags);
    if (cfg.methods.empty()) throw std::invalid_argument("holdout: config lists no methods");
    abfgsm::Dataset ds = load_dataset_for(cfg);
    std::vector<abfgsm::NamedModel> roster = load_roster(cfg);
    ensure_out_dir(cfg.out_dir);

    std::vector<std::string> held_out_names;
    if (!held_out_only.empty())
        held_out_names.push_back(held_out_only);
    else
        for (const abfgsm::NamedModel& m : roster) held_out_names.push_back(m.name);

    abfgsm::HoldoutTable table;
    for (const abfgsm::AttackMethod m : cfg.methods) table.methods.push_back(abfgsm::to_string(m));
    table.held_out_names = held_out_names;
    table.ensemble_rates.assign(cfg.methods.size(), {});
    table.holdout_rates.assign(cfg.methods.size(), {});
    table.eps_ball = cfg.attack.eps_ball;
    table.seed = cfg.seed;
    for (const std::string& name : held_out_names) {
        abfgsm::HoldoutSpec spec{roster, name, std::nullopt};
        abfgsm::HoldoutResult r = abfgsm::run_holdout_eval(spec, cfg.methods, ds.examples, cfg.attack);
        table.n_examples = r.n_examples;
        for (std::size_t k = 0; k < cfg.methods.size(); ++k) {
            table.ensemble_rates[k].push_back(r.ensemble_rates[k]);
            table.holdout_rates[k].push_back(r.holdout_rates[k]);
        }
    }
    abfgsm::write_text_file(cfg.out_dir + "/holdout.csv",
                            abfgsm::render_holdout_csv(table, config_comment_lines(cfg)));
    abfgsm::write_text_file(cfg.out_dir + "/holdout.json",
                            abfgsm::render_holdout_json(table, abfgsm::config_to_json(cfg)));
    std::printf("holdout table over %zu methods x %zu holdouts -> %s\n", table.methods.size(),
                table.held_out_names.size(), cfg.out_dir.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"AB-FGSM adversarial attack benchmark"};
    app.require_subcommand(1);

    CommonFlags gen_flags, idx_flags, train_flags, attack_flags, matrix_flags, holdout_flags;
    std::string idx_images, idx_labels, attack_model, held_out;
    std::size_t idx_classes = 0;

    CLI::App* gen = app.add_subcommand("gen-data", "generate a synthetic dataset");
    add_common(gen, gen_flags);

    CLI::App* idx = app.add_subcommand("ingest-idx", "convert IDX image/label files");
    add_common(idx, idx_flags);
    idx->add_option("--images", idx_images, "IDX image file")->required();
    idx->add_option("--labels", idx_labels, "IDX label file")->required();
    idx->add_option("--classes", idx_classes, "class count (default: max label + 1)");

    CLI::App* train = app.add_subcommand("train", "train the configured model roster");
    add_common(train, train_flags);

    CLI::App* attack = app.add_subcommand("attack", "run one attack over the dataset");
    add_common(attack, attack_flags);
    attack->add_option("--model", attack_model, "model name from the roster (default: first)");

    CLI::App* matrix = app.add_subcommand("matrix", "build the transfer matrix");
    add_common(matrix, matrix_flags);

    CLI::App* holdout = app.add_subcommand("holdout", "ensemble hold-out evaluation");
    add_common(holdout, holdout_flags);
    holdout->add_option("--held-out", held_out, "evaluate a single held-out model");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_gen_data(gen_flags);
        if (idx->parsed()) return cmd_ingest_idx(idx_flags, idx_images, idx_labels, idx_classes);
        if (train->parsed()) return cmd_train(train_flags);
        if (attack->parsed()) return cmd_attack(attack_flags, attack_model);
        if (matrix->parsed()) return cmd_matrix(matrix_flags);
        if (holdout->parsed()) return cmd_holdout(holdout_flags, held_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
