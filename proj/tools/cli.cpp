#include "cli.hpp"

#include "scopefe/csv.hpp"

#include <CLI11.hpp>
#include <openssl/evp.h>
#include <spdlog/spdlog.h>
#include <toml.hpp>

#include <array>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

namespace scopefe::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void check_keys(const toml::table& tbl, const std::string& where, const std::set<std::string>& allowed) {
    for (const auto& [key, node] : tbl) {
        if (!allowed.contains(std::string(key.str()))) {
            throw ConfigError("config: unknown key '" + std::string(key.str()) + "' in " + where);
        }
    }
}

const toml::table* subtable(const toml::table& tbl, const char* key) {
    const toml::node* node = tbl.get(key);
    if (!node) return nullptr;
    if (!node->is_table()) throw ConfigError(std::string("config: '") + key + "' must be a table");
    return node->as_table();
}

template <typename T>
void read(const toml::table* tbl, const char* key, T& out) {
    if (!tbl) return;
    const toml::node* node = tbl->get(key);
    if (!node) return;
    const std::string where = std::string("config: '") + key + "'";
    if constexpr (std::is_same_v<T, bool>) {
        if (!node->is_boolean()) throw ConfigError(where + " must be a boolean");
        out = node->as_boolean()->get();
    } else if constexpr (std::is_same_v<T, std::string>) {
        if (!node->is_string()) throw ConfigError(where + " must be a string");
        out = node->as_string()->get();
    } else if constexpr (std::is_floating_point_v<T>) {
        if (node->is_integer()) {
            out = static_cast<T>(node->as_integer()->get());
        } else if (node->is_floating_point()) {
            out = static_cast<T>(node->as_floating_point()->get());
        } else {
            throw ConfigError(where + " must be a number");
        }
    } else {
        if (!node->is_integer()) throw ConfigError(where + " must be an integer");
        const std::int64_t v = node->as_integer()->get();
        if constexpr (std::is_unsigned_v<T>) {
            if (v < 0) throw ConfigError(where + " must be non-negative");
        }
        out = static_cast<T>(v);
    }
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << text;
}

void emit(const std::string& out, const std::string& text, std::ostream& os) {
    if (out.empty()) {
        os << text;
    } else {
        write_file(out, text);
    }
}

struct Loaded {
    FileConfig cfg;
    Dataset ds;
};

/// Reads config and data. Config problems raise ConfigError.
Loaded load(const std::string& config, const std::string& data, const Overrides& o) {
    Loaded l;
    l.cfg = load_config(config);
    apply(o, l.cfg);
    try {
        l.cfg.pipeline.validate();
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
    l.ds = load_csv(data, l.cfg.load);
    return l;
}

/// Maps exceptions from a command body to exit codes.
template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
    try {
        return fn();
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kStageFailure;
    }
}

}  // namespace

FileConfig parse_config(const std::string& toml_text) {
    toml::table root;
    try {
        root = toml::parse(toml_text);
    } catch (const toml::parse_error& e) {
        std::ostringstream ss;
        ss << "config: " << e.description() << " at line " << e.source().begin.line;
        throw ConfigError(ss.str());
    }
    check_keys(root, "top level",
               {"target", "task", "valid_ratio", "seed", "categorical_threshold", "folds",
                "blocks_log2", "keep_ratio", "baseline_per_round", "top_k", "workers", "operators",
                "columns", "clustering", "probing", "reliability", "booster"});

    FileConfig cfg;
    PipelineConfig& p = cfg.pipeline;
    read(&root, "target", cfg.load.target);
    if (cfg.load.target.empty()) throw ConfigError("config: 'target' is required");
    std::string task = "regression";
    read(&root, "task", task);
    try {
        cfg.load.task = parse_task(task);
    } catch (const Error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    read(&root, "categorical_threshold", cfg.load.categorical_threshold);
    read(&root, "valid_ratio", p.valid_ratio);
    read(&root, "seed", p.seed);
    read(&root, "folds", p.folds);
    read(&root, "blocks_log2", p.blocks_log2);
    read(&root, "keep_ratio", p.keep_ratio);
    read(&root, "baseline_per_round", p.baseline_per_round);
    read(&root, "top_k", p.top_k);
    read(&root, "workers", p.workers);

    if (const toml::node* ops = root.get("operators")) {
        if (!ops->is_array()) throw ConfigError("config: 'operators' must be an array of names");
        p.operators.clear();
        for (const auto& item : *ops->as_array()) {
            if (!item.is_string()) throw ConfigError("config: 'operators' must be an array of names");
            try {
                p.operators.push_back(operator_by_name(item.as_string()->get()));
            } catch (const Error& e) {
                throw ConfigError(std::string("config: ") + e.what());
            }
        }
    }

    if (const toml::table* cols = subtable(root, "columns")) {
        for (const auto& [name, node] : *cols) {
            if (!node.is_string()) throw ConfigError("config: column kinds must be strings");
            try {
                cfg.load.kind_overrides[std::string(name.str())] = parse_column_kind(node.as_string()->get());
            } catch (const Error& e) {
                throw ConfigError(std::string("config: ") + e.what());
            }
        }
    }

    if (const toml::table* c = subtable(root, "clustering")) {
        check_keys(*c, "[clustering]", {"mode", "tau", "m", "tol", "max_iter", "theta"});
        std::string mode = to_string(p.clustering);
        read(c, "mode", mode);
        try {
            p.clustering = parse_clustering_mode(mode);
        } catch (const Error& e) {
            throw ConfigError(std::string("config: ") + e.what());
        }
        read(c, "tau", p.tau);
        read(c, "m", p.fcm.m);
        read(c, "tol", p.fcm.tol);
        read(c, "max_iter", p.fcm.max_iter);
        read(c, "theta", p.theta);
    }
    if (const toml::table* c = subtable(root, "probing")) {
        check_keys(*c, "[probing]", {"enabled", "r_probe", "min_rows", "n_cand", "k", "n_top"});
        read(c, "enabled", p.probing);
        read(c, "r_probe", p.probe.r_probe);
        read(c, "min_rows", p.probe.min_rows);
        read(c, "n_cand", p.probe.n_cand);
        read(c, "k", p.probe.k);
        read(c, "n_top", p.probe.n_top);
    }
    if (const toml::table* c = subtable(root, "reliability")) {
        check_keys(*c, "[reliability]", {"enabled", "n_sub", "lambda", "r_rel"});
        read(c, "enabled", p.reliability);
        read(c, "n_sub", p.rel.n_sub);
        read(c, "lambda", p.rel.lambda);
        read(c, "r_rel", p.rel.r_rel);
    }
    if (const toml::table* c = subtable(root, "booster")) {
        check_keys(*c, "[booster]",
                   {"rounds", "learning_rate", "max_depth", "min_leaf", "bins", "early_stop_patience"});
        read(c, "rounds", p.booster.rounds);
        read(c, "learning_rate", p.booster.learning_rate);
        read(c, "max_depth", p.booster.max_depth);
        read(c, "min_leaf", p.booster.min_leaf);
        read(c, "bins", p.booster.bins);
        read(c, "early_stop_patience", p.booster.early_stop_patience);
    }
    return cfg;
}

FileConfig load_config(const std::string& path) {
    std::string text;
    try {
        text = read_file(path);
    } catch (const Error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return parse_config(text);
}

json to_json(const FileConfig& cfg) {
    json out = scopefe::to_json(cfg.pipeline);
    out["target"] = cfg.load.target;
    out["task"] = to_string(cfg.load.task);
    out["categorical_threshold"] = cfg.load.categorical_threshold;
    json cols = json::object();
    for (const auto& [name, kind] : cfg.load.kind_overrides) cols[name] = to_string(kind);
    out["columns"] = std::move(cols);
    return out;
}

std::string sha256_file(const std::string& path) {
    const std::string bytes = read_file(path);
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
        throw Error("sha256 failed");
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xf];
    }
    return out;
}

void apply(const Overrides& o, FileConfig& cfg) {
    if (o.seed) cfg.pipeline.seed = *o.seed;
    if (o.workers) cfg.pipeline.workers = *o.workers;
    if (o.clustering) {
        try {
            cfg.pipeline.clustering = parse_clustering_mode(*o.clustering);
        } catch (const Error& e) {
            throw ConfigError(e.what());
        }
    }
}

json without_timings(json report) {
    report.erase("timings");
    return report;
}

int cmd_run(const std::string& config, const std::string& data, const std::string& out_dir,
            const Overrides& o, std::ostream& err) {
    return guarded(err, [&] {
        FileConfig cfg = load_config(config);
        apply(o, cfg);
        try {
            cfg.pipeline.validate();
        } catch (const Error& e) {
            throw ConfigError(e.what());
        }
        const fs::path dir(out_dir);
        fs::create_directories(dir);

        json manifest = {{"tool", "scopefe"},
                         {"version", kToolVersion},
                         {"seed", cfg.pipeline.seed},
                         {"config_path", config},
                         {"config", to_json(cfg)},
                         {"input", {{"path", data}, {"sha256", sha256_file(data)}}},
                         {"outputs",
                          {{"engineered", (dir / "engineered.csv").string()},
                           {"report", (dir / "report.json").string()}}}};
        write_file(dir / "manifest.json", manifest.dump(2) + "\n");

        PipelineResult result;
        Dataset ds;
        try {
            ds = load_csv(data, cfg.load);
        } catch (const std::exception& e) {
            result.report.complete = false;
            result.report.failed_stage = "load";
            result.report.error = e.what();
        }
        if (result.report.complete) result = run(ds, cfg.pipeline);
        write_file(dir / "report.json", scopefe::to_json(result.report).dump(2) + "\n");
        if (!result.report.complete) {
            err << "error: stage '" << result.report.failed_stage << "' failed: " << result.report.error
                << "\n";
            return static_cast<int>(kStageFailure);
        }
        write_file(dir / "engineered.csv", engineered_csv(ds, result));
        return static_cast<int>(kOk);
    });
}

int cmd_assoc(const std::string& config, const std::string& data, const std::string& out,
              const Overrides& o, std::ostream& os, std::ostream& err) {
    return guarded(err, [&] {
        Loaded l = load(config, data, o);
        const auto [train, valid] = split(l.ds, l.cfg.pipeline.valid_ratio, l.ds.task() == Task::Binary,
                                          derive_seed(l.cfg.pipeline.seed, "split"));
        emit(out, to_csv(similarity_matrix(l.ds, train)), os);
        return static_cast<int>(kOk);
    });
}

int cmd_cluster(const std::string& config, const std::string& data, const std::string& out,
                const Overrides& o, std::ostream& os, std::ostream& err) {
    return guarded(err, [&] {
        Loaded l = load(config, data, o);
        PipelineConfig pc = l.cfg.pipeline;
        pc.probing = false;
        if (pc.clustering == ClusteringMode::Off) {
            throw ConfigError("cluster: clustering mode is off");
        }
        const SearchSpace space = build_search_space(l.ds, pc);
        json assignments = json::object();
        int k = 0;
        double theta = 0.0;
        if (space.assignment) {
            const auto sets = label_sets(*space.assignment);
            for (std::size_t i = 0; i < sets.size(); ++i) assignments[l.ds.column(i).name] = sets[i];
            if (const auto* h = std::get_if<HardAssignment>(&*space.assignment)) k = h->k;
            if (const auto* s = std::get_if<SoftAssignment>(&*space.assignment)) {
                k = s->k;
                theta = s->theta;
            }
        }
        const json doc = {{"mode", to_string(pc.clustering)},
                          {"k", k},
                          {"theta", theta},
                          {"assignments", std::move(assignments)}};
        emit(out, doc.dump(2) + "\n", os);
        return static_cast<int>(kOk);
    });
}

int cmd_probe(const std::string& config, const std::string& data, const std::string& out,
              const Overrides& o, std::ostream& os, std::ostream& err) {
    return guarded(err, [&] {
        Loaded l = load(config, data, o);
        PipelineConfig pc = l.cfg.pipeline;
        pc.clustering = ClusteringMode::Off;
        pc.probing = true;
        const SearchSpace space = build_search_space(l.ds, pc);
        emit(out, scopefe::to_json(*space.probe).dump(2) + "\n", os);
        return static_cast<int>(kOk);
    });
}

namespace {

std::string seconds(double s) { return csv::format_double(std::round(s * 1000.0) / 1000.0); }

}  // namespace

int cmd_sweep(const std::string& config, const std::string& data, const std::string& param,
              const std::vector<double>& values, const std::string& out, const Overrides& o,
              std::ostream& os, std::ostream& err) {
    return guarded(err, [&] {
        if (param != "tau" && param != "lambda" && param != "nsub") {
            throw ConfigError("sweep: parameter must be tau, lambda or nsub");
        }
        if (values.empty()) throw ConfigError("sweep: empty value list");
        Loaded l = load(config, data, o);
        std::string text = "value,run_s,eval_s,total_s,generated,selected,metric_name,metric\n";
        for (double v : values) {
            PipelineConfig pc = l.cfg.pipeline;
            if (param == "tau") {
                if (v < 1 || v != std::floor(v)) throw ConfigError("sweep: tau values must be positive integers");
                pc.tau = static_cast<int>(v);
            } else if (param == "lambda") {
                pc.reliability = true;
                pc.rel.lambda = v;
            } else {
                if (v < 1 || v != std::floor(v)) throw ConfigError("sweep: nsub values must be positive integers");
                pc.reliability = true;
                pc.rel.n_sub = static_cast<int>(v);
            }
            const PipelineResult r = run(l.ds, pc);
            if (!r.report.complete) {
                err << "error: value " << v << ": stage '" << r.report.failed_stage
                    << "' failed: " << r.report.error << "\n";
                return static_cast<int>(kStageFailure);
            }
            const auto& rep = r.report;
            text += csv::join({csv::format_double(v), seconds(rep.timings.run()), seconds(rep.timings.eval()),
                               seconds(rep.timings.total()), std::to_string(rep.generated.total()),
                               std::to_string(rep.selected.size()), rep.metric_name,
                               csv::format_double(rep.metric_engineered)});
            text += "\n";
        }
        emit(out, text, os);
        return static_cast<int>(kOk);
    });
}

int cmd_ablate(const std::string& config, const std::string& data, const std::string& out,
               const Overrides& o, std::ostream& os, std::ostream& err) {
    return guarded(err, [&] {
        Loaded l = load(config, data, o);
        const ClusteringMode on_mode = l.cfg.pipeline.clustering == ClusteringMode::Off
                                           ? ClusteringMode::Soft
                                           : l.cfg.pipeline.clustering;
        std::string text =
            "S,O,R,run_s,eval_s,total_s,unconstrained,generated,round0,selected,metric_name,metric\n";
        for (int cell = 0; cell < 8; ++cell) {
            const bool s = cell & 4, op = cell & 2, rel = cell & 1;
            PipelineConfig pc = l.cfg.pipeline;
            pc.clustering = s ? on_mode : ClusteringMode::Off;
            pc.probing = op;
            pc.reliability = rel;
            const PipelineResult r = run(l.ds, pc);
            if (!r.report.complete) {
                err << "error: cell S=" << s << " O=" << op << " R=" << rel << ": stage '"
                    << r.report.failed_stage << "' failed: " << r.report.error << "\n";
                return static_cast<int>(kStageFailure);
            }
            const auto& rep = r.report;
            const std::size_t round0 = rep.round_counts.empty() ? 0 : rep.round_counts.front();
            text += csv::join({s ? "on" : "off", op ? "on" : "off", rel ? "on" : "off",
                               seconds(rep.timings.run()), seconds(rep.timings.eval()),
                               seconds(rep.timings.total()), std::to_string(rep.unconstrained.total()),
                               std::to_string(rep.generated.total()), std::to_string(round0),
                               std::to_string(rep.selected.size()), rep.metric_name,
                               csv::format_double(rep.metric_engineered)});
            text += "\n";
        }
        emit(out, text, os);
        return static_cast<int>(kOk);
    });
}

int main(int argc, char** argv, std::ostream& os, std::ostream& err) {
    CLI::App app{"scopefe: space-controlled automated feature engineering"};
    app.set_version_flag("--version", kToolVersion);
    app.require_subcommand(1);

    std::string config, data, out, param;
    std::vector<double> values;
    Overrides o;
    std::uint64_t seed = 0;
    std::size_t workers = 0;
    std::string clustering;

    auto common = [&](CLI::App* sub, bool out_required, const char* out_help) {
        sub->add_option("--config", config, "TOML configuration file")->required()->check(CLI::ExistingFile);
        sub->add_option("--data", data, "input CSV")->required()->check(CLI::ExistingFile);
        auto* opt = sub->add_option("--out", out, out_help);
        if (out_required) opt->required();
        sub->add_option("--seed", seed, "override the global seed");
        sub->add_option("--workers", workers, "worker threads (0 = all cores)");
        sub->add_option("--clustering", clustering, "override the clustering mode")
            ->check(CLI::IsMember({"off", "hard", "soft"}));
    };

    auto* run_cmd = app.add_subcommand("run", "run the full pipeline");
    common(run_cmd, true, "output directory");
    auto* assoc_cmd = app.add_subcommand("assoc", "feature similarity matrix as CSV");
    common(assoc_cmd, false, "output file (default stdout)");
    auto* cluster_cmd = app.add_subcommand("cluster", "feature cluster assignments as JSON");
    common(cluster_cmd, false, "output file (default stdout)");
    auto* probe_cmd = app.add_subcommand("probe", "operator probing scores as JSON");
    common(probe_cmd, false, "output file (default stdout)");
    auto* sweep_cmd = app.add_subcommand("sweep", "rerun the pipeline over one parameter");
    common(sweep_cmd, false, "output file (default stdout)");
    sweep_cmd->add_option("--param", param, "tau, lambda or nsub")
        ->required()
        ->check(CLI::IsMember({"tau", "lambda", "nsub"}));
    sweep_cmd->add_option("--values", values, "comma-separated values")->required()->delimiter(',');
    auto* ablate_cmd = app.add_subcommand("ablate", "run the 8-cell S/O/R ablation grid");
    common(ablate_cmd, false, "output file (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, os, err);
        return code == 0 ? static_cast<int>(kOk) : static_cast<int>(kUsage);
    }

    init_logging();
    CLI::App* active = app.get_subcommands().front();
    if (active->count("--seed") > 0) o.seed = seed;
    if (active->count("--workers") > 0) o.workers = workers;
    if (active->count("--clustering") > 0) o.clustering = clustering;

    if (*run_cmd) return cmd_run(config, data, out, o, err);
    if (*assoc_cmd) return cmd_assoc(config, data, out, o, os, err);
    if (*cluster_cmd) return cmd_cluster(config, data, out, o, os, err);
    if (*probe_cmd) return cmd_probe(config, data, out, o, os, err);
    if (*sweep_cmd) return cmd_sweep(config, data, param, values, out, o, os, err);
    return cmd_ablate(config, data, out, o, os, err);
}

}  // namespace scopefe::cli
