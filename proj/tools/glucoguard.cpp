#include "glucoguard/config.hpp"
#include "glucoguard/datagen.hpp"
#include "glucoguard/detector.hpp"
#include "glucoguard/devices.hpp"
#include "glucoguard/experiments.hpp"
#include "glucoguard/gateway.hpp"
#include "glucoguard/http.hpp"
#include "glucoguard/identity.hpp"
#include "glucoguard/ledger.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace gg = glucoguard;

namespace {

constexpr int kOk = 0;
constexpr int kIntegrity = 1;
constexpr int kUsage = 2;
constexpr int kIo = 3;

/// Carries an exit code out of a subcommand.
struct Exit {
    int code;
    std::string message;
};

gg::detector::Dataset load_dataset(const std::string& path) {
    try {
        return gg::detector::Dataset::from_samples(gg::datagen::read_csv(path));
    } catch (const std::exception& e) {
        throw Exit{kIo, e.what()};
    }
}

gg::detector::RandomForest load_model_or_exit(const std::string& path) {
    try {
        return gg::detector::load_model(path);
    } catch (const std::exception& e) {
        throw Exit{kIo, e.what()};
    }
}

void print_metric(const char* name, double v) { std::printf("%-16s %.4f\n", name, v); }

struct GenArgs {
    std::size_t n = 16969;
    std::uint64_t seed = 42;
    double noise = 0.05;
    std::string out;
};

int gen_data(const GenArgs& a) {
    gg::datagen::GeneratorConfig cfg;
    cfg.n_samples = a.n;
    cfg.seed = a.seed;
    cfg.label_noise = a.noise;
    try {
        gg::datagen::validate(cfg);
    } catch (const gg::datagen::InvalidConfig& e) {
        throw Exit{kUsage, e.what()};
    }
    const auto data = gg::datagen::generate_dataset(cfg);
    try {
        gg::datagen::write_csv(std::filesystem::path(a.out), data);
    } catch (const std::exception& e) {
        throw Exit{kIo, e.what()};
    }
    if (!data.empty()) gg::datagen::print_summary(std::cout, gg::datagen::summarize(data));
    std::cout << "wrote " << data.size() << " rows to " << a.out << '\n';
    return kOk;
}

struct TrainArgs {
    std::string data;
    std::string model_out;
    std::size_t trees = 100;
    std::size_t depth = 4;
    std::uint64_t seed = 42;
    std::size_t cv = 5;
    std::size_t max_features = 3;
    unsigned threads = 0;
};

gg::detector::ForestConfig forest_config(const TrainArgs& a) {
    gg::detector::ForestConfig c;
    c.n_trees = a.trees;
    c.max_depth = a.depth;
    c.seed = a.seed;
    c.features_per_split = a.max_features;
    try {
        c.validate();
    } catch (const std::exception& e) {
        throw Exit{kUsage, e.what()};
    }
    return c;
}

int train(const TrainArgs& a) {
    const auto cfg = forest_config(a);
    const auto data = load_dataset(a.data);
    gg::detector::TrainReport r;
    try {
        r = gg::detector::train_with_report(data, cfg, a.cv, gg::detector::kDefaultTestFraction, a.threads);
    } catch (const std::invalid_argument& e) {
        throw Exit{kIo, e.what()};
    }
    try {
        gg::detector::save_model(a.model_out, r.model);
    } catch (const std::exception& e) {
        throw Exit{kIo, e.what()};
    }
    std::printf("train_rows       %zu\ntest_rows        %zu\n", r.split.train.size(), r.split.test.size());
    print_metric("train_accuracy", r.train_accuracy);
    print_metric("test_accuracy", r.test_accuracy);
    if (!r.cv_accuracies.empty()) print_metric("cv_mean_accuracy", r.cv_mean());
    if (r.test_metrics.roc) print_metric("test_auc", r.test_metrics.roc->auc);
    std::printf("model_id         %s\n", gg::to_hex(gg::detector::model_id(r.model).span()).c_str());
    return kOk;
}

struct EvalArgs {
    std::string model;
    std::string data;
    std::string roc_out;
    std::string split = "all";
};

int evaluate(const EvalArgs& a) {
    const auto model = load_model_or_exit(a.model);
    const auto& order = model.metadata.feature_order;
    if (order.size() != gg::fog::kModelFeatureCount ||
        !std::equal(order.begin(), order.end(), gg::fog::kModelFeatureNames.begin()))
        throw Exit{kIo, "model feature order does not match the data columns"};
    const auto data = load_dataset(a.data);

    gg::detector::Dataset subset = data;
    if (a.split != "all") {
        const auto split =
            gg::detector::train_test_split(data.size(), gg::detector::kDefaultTestFraction, model.config.seed);
        subset = data.subset(a.split == "train" ? split.train : split.test);
    }
    gg::detector::Metrics m;
    try {
        m = gg::detector::evaluate(model, subset);
    } catch (const std::invalid_argument& e) {
        throw Exit{kIo, e.what()};
    }
    std::printf("rows             %zu\n", subset.size());
    print_metric("accuracy", m.accuracy);
    std::printf("tp %zu fp %zu tn %zu fn %zu\n", m.tp, m.fp, m.tn, m.fn);
    if (m.roc) print_metric("auc", m.roc->auc);
    if (!a.roc_out.empty()) {
        if (!m.roc) throw Exit{kIo, "ROC undefined: evaluation labels contain one class"};
        std::ofstream out(a.roc_out);
        if (!out) throw Exit{kIo, "cannot write " + a.roc_out};
        gg::detector::write_roc_csv(out, *m.roc);
    }
    return kOk;
}

int compare(const TrainArgs& a) {
    const auto cfg = forest_config(a);
    const auto data = load_dataset(a.data);
    std::vector<gg::detector::ComparisonRow> rows;
    try {
        rows = gg::detector::compare_models(data, cfg, gg::detector::kDefaultTestFraction, a.threads);
    } catch (const std::invalid_argument& e) {
        throw Exit{kIo, e.what()};
    }
    gg::detector::rank_by_test_accuracy(rows);
    gg::detector::print_comparison(std::cout, rows);
    return kOk;
}

struct GridArgs {
    std::string data;
    std::size_t cv = 5;
    std::uint64_t seed = 42;
    std::size_t limit = 0;
    std::size_t top = 10;
    unsigned threads = 0;
};

int grid(const GridArgs& a) {
    const auto data = load_dataset(a.data);
    auto configs = gg::detector::ForestGrid{}.expand(a.seed);
    if (a.limit > 0 && configs.size() > a.limit) configs.resize(a.limit);
    const auto split = gg::detector::train_test_split(data.size(), gg::detector::kDefaultTestFraction, a.seed);
    auto results = gg::detector::grid_search(data.subset(split.train), configs, a.cv, a.seed, a.threads);
    std::stable_sort(results.begin(), results.end(),
                     [](const auto& x, const auto& y) { return x.cv_accuracy > y.cv_accuracy; });
    std::printf("%-6s %-6s %-6s %-6s %-6s %s\n", "depth", "feat", "leaf", "split", "trees", "cv_acc");
    for (std::size_t i = 0; i < results.size() && i < a.top; ++i) {
        const auto& c = results[i].config;
        std::printf("%-6zu %-6zu %-6zu %-6zu %-6zu %.4f\n", c.max_depth, c.features_per_split, c.min_samples_leaf,
                    c.min_samples_split, c.n_trees, results[i].cv_accuracy);
    }
    return kOk;
}

struct SimArgs {
    std::string scenario;
    std::string model;
    std::string log_out;
    std::string store_out;
};

int simulate(const SimArgs& a) {
    gg::devices::ScenarioScript script;
    try {
        script = gg::devices::load_scenario(a.scenario);
    } catch (const gg::devices::ScenarioError& e) {
        throw Exit{kUsage, e.what()};
    } catch (const std::exception& e) {
        throw Exit{kIo, e.what()};
    }
    auto model = load_model_or_exit(a.model);
    gg::gateway::System system(gg::devices::system_config_for(script), std::move(model));
    const auto who = gg::devices::register_participants(system, script);
    const auto log = gg::devices::run_scenario(script, system, who);
    try {
        log.write(a.log_out);
        if (!a.store_out.empty()) {
            const auto blocks = system.blocks();
            gg::ledger::save_chain(a.store_out, blocks);
        }
    } catch (const std::exception& e) {
        throw Exit{kIo, e.what()};
    }
    std::printf("events %zu doses %zu blocks %zu\n", log.events().size(), log.count("dose"), system.chain_length());
    if (log.count("error") > 0) throw Exit{kIntegrity, "run ended with an error entry; see the event log"};
    return kOk;
}

std::vector<gg::ledger::Block> load_store(const std::string& path) {
    try {
        return gg::ledger::load_chain(path);
    } catch (const std::exception& e) {
        throw Exit{kIo, e.what()};
    }
}

int chain_verify(const std::string& store, const std::string& identities) {
    const auto blocks = load_store(store);
    std::optional<gg::identity::Registry> registry;
    if (!identities.empty()) {
        registry.emplace();
        try {
            registry->load(identities);
        } catch (const std::exception& e) {
            throw Exit{kIo, e.what()};
        }
    }
    if (const auto err = gg::ledger::validate_chain(blocks, registry ? &*registry : nullptr)) {
        std::cerr << "integrity failure at block " << err->block_index << ": " << gg::ledger::to_string(err->reason)
                  << '\n';
        return kIntegrity;
    }
    std::cout << "ok: " << blocks.size() << " blocks verified\n";
    return kOk;
}

int chain_show(const std::string& store, std::uint64_t index) {
    const auto blocks = load_store(store);
    if (index >= blocks.size())
        throw Exit{kUsage, "index " + std::to_string(index) + " beyond tip " + std::to_string(blocks.size())};
    auto j = gg::gateway::block_to_json(blocks[index], [](const gg::UserId&) { return true; });
    auto& txs = j["transactions"];
    for (std::size_t i = 0; i < txs.size(); ++i) {
        try {
            txs[i]["decoded"] = gg::gateway::payload_json(blocks[index].transactions[i]);
        } catch (const std::exception&) {
            txs[i]["decoded"] = nullptr;
        }
    }
    std::cout << j.dump(2) << '\n';
    return kOk;
}

int serve(const std::string& path) {
    gg::config::ServerConfig cfg;
    try {
        if (!path.empty()) cfg = gg::config::load_config(path);
        gg::config::apply_env(cfg, gg::config::process_env);
    } catch (const gg::config::ConfigError& e) {
        throw Exit{kIo, e.what()};
    }
    try {
        return glucoguard::http::serve(cfg);
    } catch (const std::exception& e) {
        throw Exit{kIo, e.what()};
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hypoglycemia detection, rescue dosing and ledger toolkit"};
    app.require_subcommand(1);

    GenArgs gen;
    auto* gen_cmd = app.add_subcommand("gen-data", "Generate a labeled synthetic dataset");
    gen_cmd->add_option("--n", gen.n, "Number of samples")->capture_default_str();
    gen_cmd->add_option("--seed", gen.seed, "Random seed")->capture_default_str();
    gen_cmd->add_option("--noise", gen.noise, "Label flip probability")->capture_default_str();
    gen_cmd->add_option("--out", gen.out, "Output CSV")->required();

    TrainArgs tr;
    auto* train_cmd = app.add_subcommand("train", "Train the random forest and report accuracies");
    train_cmd->add_option("--data", tr.data, "Training CSV")->required();
    train_cmd->add_option("--model-out", tr.model_out, "Model file to write")->required();
    train_cmd->add_option("--trees", tr.trees)->capture_default_str();
    train_cmd->add_option("--depth", tr.depth)->capture_default_str();
    train_cmd->add_option("--seed", tr.seed)->capture_default_str();
    train_cmd->add_option("--cv", tr.cv, "Cross-validation folds (0 to skip)")->capture_default_str();
    train_cmd->add_option("--max-features", tr.max_features)->capture_default_str();
    train_cmd->add_option("--threads", tr.threads, "Worker threads (0 = all cores)")->capture_default_str();

    EvalArgs ev;
    auto* eval_cmd = app.add_subcommand("evaluate", "Score a saved model on a dataset");
    eval_cmd->add_option("--model", ev.model)->required();
    eval_cmd->add_option("--data", ev.data)->required();
    eval_cmd->add_option("--roc-out", ev.roc_out, "ROC curve CSV");
    eval_cmd->add_option("--split", ev.split, "Rows to score: all, train or test (re-derived from the model seed)")
        ->check(CLI::IsMember({"all", "train", "test"}))
        ->capture_default_str();

    TrainArgs cmp;
    auto* cmp_cmd = app.add_subcommand("compare", "Compare RF, DT, KNN-9 and KNN-11 on one split");
    cmp_cmd->add_option("--data", cmp.data)->required();
    cmp_cmd->add_option("--trees", cmp.trees)->capture_default_str();
    cmp_cmd->add_option("--depth", cmp.depth)->capture_default_str();
    cmp_cmd->add_option("--seed", cmp.seed)->capture_default_str();
    cmp_cmd->add_option("--threads", cmp.threads)->capture_default_str();

    GridArgs gr;
    auto* grid_cmd = app.add_subcommand("grid", "Cross-validated hyperparameter grid search");
    grid_cmd->add_option("--data", gr.data)->required();
    grid_cmd->add_option("--cv", gr.cv)->capture_default_str();
    grid_cmd->add_option("--seed", gr.seed)->capture_default_str();
    grid_cmd->add_option("--limit", gr.limit, "Evaluate only the first N grid points (0 = all)")->capture_default_str();
    grid_cmd->add_option("--top", gr.top)->capture_default_str();
    grid_cmd->add_option("--threads", gr.threads)->capture_default_str();

    SimArgs sim;
    auto* sim_cmd = app.add_subcommand("simulate", "Run a scenario through an in-process gateway");
    sim_cmd->add_option("--scenario", sim.scenario)->required();
    sim_cmd->add_option("--model", sim.model)->required();
    sim_cmd->add_option("--log-out", sim.log_out)->required();
    sim_cmd->add_option("--store-out", sim.store_out, "Write the resulting chain store");

    auto* chain_cmd = app.add_subcommand("chain", "Inspect a chain store");
    chain_cmd->require_subcommand(1);
    std::string store, identities;
    std::uint64_t index = 0;
    auto* verify_cmd = chain_cmd->add_subcommand("verify", "Validate every block");
    verify_cmd->add_option("--store", store)->required();
    verify_cmd->add_option("--identities", identities, "Identity file; also re-checks approval signatures");
    auto* show_cmd = chain_cmd->add_subcommand("show", "Print one block as JSON");
    show_cmd->add_option("--store", store)->required();
    show_cmd->add_option("--index", index)->required();

    std::string config_path;
    auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP gateway");
    serve_cmd->add_option("--config", config_path, "Config file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        if (*gen_cmd) return gen_data(gen);
        if (*train_cmd) return train(tr);
        if (*eval_cmd) return evaluate(ev);
        if (*cmp_cmd) return compare(cmp);
        if (*grid_cmd) return grid(gr);
        if (*sim_cmd) return simulate(sim);
        if (*verify_cmd) return chain_verify(store, identities);
        if (*show_cmd) return chain_show(store, index);
        if (*serve_cmd) return serve(config_path);
    } catch (const Exit& e) {
        if (!e.message.empty()) std::cerr << "error: " << e.message << '\n';
        return e.code;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kIo;
    }
    return kUsage;
}
