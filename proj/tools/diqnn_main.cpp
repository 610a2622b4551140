// Command-line front end: train / analyze / xor-verify.
//
// Exit codes: 0 success, 1 usage or input error, 2 training divergence,
// 3 verification failure.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "diqnn/analysis.hpp"
#include "diqnn/checkpoint.hpp"
#include "diqnn/dataset.hpp"
#include "diqnn/error.hpp"
#include "diqnn/margin.hpp"
#include "diqnn/model.hpp"
#include "diqnn/report.hpp"
#include "diqnn/train.hpp"
#include "diqnn/xor_checks.hpp"

namespace fs = std::filesystem;
using namespace diqnn;

namespace {

constexpr const char* kCodeVersion = "diqnn 0.1.0";

std::vector<std::string> split_list(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(item);
    return out;
}

struct DataFlags {
    std::string data;
    std::string test_data;
    double test_fraction = 0.2;
    std::size_t label_column = 0;
    std::string delimiter = ",";
    std::uint64_t seed = 0;
};

Dataset load_one(const std::string& uri, const DataFlags& flags) {
    if (uri == "xor") return make_xor();
    if (uri.rfind("idx:", 0) == 0) {
        const auto parts = split_list(uri.substr(4), ',');
        if (parts.size() != 2)
            throw SpecError("data: idx needs two paths, idx:<images>,<labels>");
        return load_idx(parts[0], parts[1]);
    }
    if (uri.rfind("csv:", 0) == 0) {
        if (flags.delimiter.size() != 1)
            throw SpecError("data: delimiter must be a single character");
        return load_delimited(uri.substr(4), flags.label_column, flags.delimiter[0]);
    }
    throw SpecError("data: expected xor, idx:<img>,<lbl> or csv:<path>, got " + uri);
}

/// Train set plus optional test set from the data flags.
std::pair<Dataset, std::optional<Dataset>> load_data(const DataFlags& flags) {
    Dataset all = load_one(flags.data, flags);
    if (!flags.test_data.empty())
        return {std::move(all), load_one(flags.test_data, flags)};
    if (flags.data == "xor" || flags.data.rfind("idx:", 0) == 0)
        return {std::move(all), std::nullopt}; // idx users pass --test-data
    auto [train, test] = split(all, SplitSpec{flags.test_fraction, flags.seed});
    return {std::move(train), std::move(test)};
}

NetSpec parse_model(const std::string& model, const Dataset& data,
                    const std::string& hidden) {
    NetSpec spec;
    spec.input_dim = data.dim();
    const std::size_t k = std::size_t(data.num_classes);
    if (model == "linear") {
        spec.layers.push_back({LayerKind::Linear, k, 1});
    } else if (model == "quadratic") {
        spec.layers.push_back({LayerKind::Quadratic, k, 1});
    } else if (model.rfind("lowrank:", 0) == 0) {
        const std::size_t r = std::stoul(model.substr(8));
        spec.layers.push_back({LayerKind::LowRank, k, r});
    } else if (model.rfind("lowrank-deep:", 0) == 0) {
        const auto ranks = split_list(model.substr(13), ',');
        std::vector<std::size_t> widths;
        for (const auto& w : split_list(hidden, ','))
            if (!w.empty()) widths.push_back(std::stoul(w));
        if (widths.size() + 1 != ranks.size())
            throw SpecError("model: lowrank-deep with L ranks needs L-1 --hidden widths");
        for (std::size_t i = 0; i < ranks.size(); ++i) {
            const std::size_t out = i + 1 == ranks.size() ? k : widths[i];
            spec.layers.push_back({LayerKind::LowRank, out, std::stoul(ranks[i])});
        }
    } else {
        throw SpecError("model: expected linear, quadratic, lowrank:R or "
                        "lowrank-deep:R,..., got " + model);
    }
    return spec;
}

fs::path resolve_out_dir(const std::string& flag_value, const std::string& fallback) {
    if (!flag_value.empty()) return flag_value;
    const char* root = std::getenv("DIQNN_OUT_ROOT");
    return fs::path(root ? root : "runs") / fallback;
}

std::map<std::string, std::string> config_map(
    std::initializer_list<std::pair<const std::string, std::string>> kv) {
    return {kv.begin(), kv.end()};
}

int cmd_train(const DataFlags& dataflags, const std::string& model,
              const std::string& hidden, const TrainConfig& config,
              bool xor_paper_init, const std::string& out_flag) {
    const fs::path out = resolve_out_dir(out_flag, "train");
    fs::create_directories(out);

    auto [train_set, test_set] = load_data(dataflags);

    NetSpec spec = parse_model(model, train_set, hidden);
    InitOptions init;
    init.xor_paper_init = xor_paper_init;
    Network net = Network::init(spec, config.seed, init);

    RunManifest manifest;
    manifest.command = "train";
    manifest.config = config_map({
        {"model", model},
        {"data", dataflags.data},
        {"test_data", dataflags.test_data},
        {"lr", std::to_string(config.learning_rate)},
        {"batch", std::to_string(config.batch_size)},
        {"epochs", std::to_string(config.epochs)},
        {"lambda_margin", std::to_string(config.lambda_margin)},
        {"optimizer", config.optimizer == Optimizer::GD
                          ? "gd"
                          : config.optimizer == Optimizer::SGD ? "sgd" : "flow"},
        {"flow_step", std::to_string(config.flow_step)},
        {"total_time", std::to_string(config.total_time)},
        {"record_every", std::to_string(config.record_every)},
        {"xor_paper_init", xor_paper_init ? "true" : "false"},
        {"init", "linear std sqrt(1/in), quadratic std 1/in, lowrank std sqrt(1/in)"},
        {"pixel_scaling", "x/255, no centering"},
    });
    manifest.seed = config.seed;
    manifest.dataset_fingerprint = train_set.fingerprint();
    manifest.code_version = kCodeVersion;
    manifest.started_at = iso8601_now();
    manifest.write((out / "manifest.json").string());

    NdjsonWriter margins((out / "margin.ndj").string());
    const Dataset* test_ptr = test_set ? &*test_set : nullptr;

    TrainTrace trace = train(net, train_set, test_ptr, config,
                             [&](long step, const Network&, const TraceRecord&,
                                 const MarginReport& rep) {
                                 margins.write_margin(step, rep);
                             });

    write_trace_csv(trace, (out / "trace.csv").string());
    save_checkpoint(net, (out / "checkpoint.bin").string());
    margins.write_margin(trace.records.empty() ? 0 : trace.records.back().step,
                         compute_margin(net, train_set));

    manifest.finished_at = iso8601_now();
    manifest.write((out / "manifest.json").string());
    std::cout << "run artifacts in " << out.string() << "\n";
    return 0;
}

int cmd_analyze(const DataFlags& dataflags, const std::string& checkpoint,
                const std::string& rank_list, bool sta, bool homogeneity, bool euler,
                bool theorem_diag, std::size_t diag_samples,
                const std::string& out_flag) {
    const fs::path out = resolve_out_dir(out_flag, "analyze");
    fs::create_directories(out / "analysis");

    Network net = load_checkpoint(checkpoint);
    Dataset data = load_one(dataflags.data, dataflags);
    if (data.dim() != net.input_dim())
        throw FormatError("analyze: checkpoint input dimension " +
                          std::to_string(net.input_dim()) +
                          " does not match dataset dimension " +
                          std::to_string(data.dim()));

    RunManifest manifest;
    manifest.command = "analyze";
    manifest.config = config_map({{"checkpoint", checkpoint},
                                  {"data", dataflags.data},
                                  {"rank_curve", rank_list},
                                  {"sta", sta ? "true" : "false"},
                                  {"homogeneity", homogeneity ? "true" : "false"},
                                  {"euler", euler ? "true" : "false"},
                                  {"theorem_diag", theorem_diag ? "true" : "false"},
                                  {"diag_samples", std::to_string(diag_samples)}});
    manifest.seed = 0;
    manifest.dataset_fingerprint = data.fingerprint();
    manifest.code_version = kCodeVersion;
    manifest.started_at = iso8601_now();
    manifest.write((out / "manifest.json").string());

    if (!rank_list.empty()) {
        std::vector<std::size_t> ranks;
        for (const auto& tok : split_list(rank_list, ','))
            ranks.push_back(tok == "full" ? data.dim() : std::stoul(tok));
        const RankCurve curve = truncate_and_eval(net, data, ranks);
        write_rank_curve_csv(curve, (out / "analysis" / "rank_curve.csv").string());
    }
    if (sta) {
        const StaReport rep = spike_triggered_average(net, data);
        write_sta_csv(rep, (out / "analysis" / "sta.csv").string(),
                      (out / "analysis" / "sta_vectors.csv").string());
    }
    if (homogeneity) {
        const Vec scales{0.25, 0.5, 1.0, 2.0, 4.0};
        const HomogeneityReport rep = check_homogeneity(net, data.sample(0), scales);
        write_homogeneity_csv(rep, (out / "analysis" / "homogeneity.csv").string());
        std::cout << "homogeneity worst rel error " << rep.worst_rel_error << "\n";
    }
    if (euler) {
        const EulerReport rep = check_euler_identity(net, data.sample(0));
        write_euler_csv(rep, (out / "analysis" / "euler.csv").string());
        std::cout << "euler worst rel error " << rep.worst_rel_error << "\n";
    }
    if (theorem_diag) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < std::min(diag_samples, data.size()); ++i)
            idx.push_back(i);
        const Dataset sub = data.subset(idx, "/diag");
        const TheoremDiagnostics diag = theorem_diagnostics(net, sub);
        write_diagnostics_json(diag, (out / "analysis" / "theorem_diag.json").string());
        std::cout << "theorem bound " << diag.bound << " (k=" << data.num_classes
                  << ", epsilon=" << diag.epsilon_sep << ")\n";
    }

    manifest.finished_at = iso8601_now();
    manifest.write((out / "manifest.json").string());
    std::cout << "analysis artifacts in " << (out / "analysis").string() << "\n";
    return 0;
}

int cmd_xor_verify(double total_time, double flow_step) {
    const XorFlowChecks checks = run_xor_flow_checks(total_time, flow_step);
    if (checks.vacuous)
        std::cout << "warning: no steps integrated; monotonicity is vacuous\n";
    std::cout << "margin monotone:         " << (checks.monotone ? "pass" : "FAIL")
              << "\n"
              << "terminal margin:         " << (checks.terminal ? "pass" : "FAIL")
              << " (delta_mu = " << checks.final_delta_mu << ")\n"
              << "conserved product:       " << (checks.conserved ? "pass" : "FAIL")
              << " (drift " << checks.worst_product_drift << ")\n"
              << "factor symmetry:         " << (checks.symmetric ? "pass" : "FAIL")
              << " (error " << checks.worst_symmetry_error << ")\n"
              << "margin-rate closed form: " << (checks.rate_matches ? "pass" : "FAIL")
              << " (rel error " << checks.worst_rate_rel_error << ")\n";
    if (checks.all_pass()) return 0;
    std::cout << "failed checks:";
    for (const auto& f : checks.failures()) std::cout << " " << f;
    std::cout << "\n";
    return 3;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Training and analysis toolkit for dendritic-integration "
                 "quadratic networks"};
    app.require_subcommand(1);

    // ---- train ----
    auto* t = app.add_subcommand("train", "Train a model and emit run artifacts");
    DataFlags tdata;
    std::string model = "quadratic", hidden, out;
    TrainConfig config;
    std::string optimizer = "sgd";
    bool xor_paper_init = false;
    t->add_option("--model", model, "linear | quadratic | lowrank:R | lowrank-deep:R,...");
    t->add_option("--hidden", hidden, "hidden widths for lowrank-deep");
    t->add_option("--data", tdata.data, "xor | idx:<img>,<lbl> | csv:<path>")->required();
    t->add_option("--test-data", tdata.test_data, "held-out set, same syntax");
    t->add_option("--test-fraction", tdata.test_fraction, "csv split fraction");
    t->add_option("--label-column", tdata.label_column, "csv label column");
    t->add_option("--delimiter", tdata.delimiter, "csv delimiter");
    t->add_option("--lr", config.learning_rate, "learning rate");
    t->add_option("--batch", config.batch_size, "SGD batch size");
    t->add_option("--epochs", config.epochs, "epochs");
    t->add_option("--lambda-margin", config.lambda_margin, "margin regularization weight");
    t->add_option("--seed", config.seed, "RNG seed");
    t->add_option("--optimizer", optimizer, "gd | sgd | flow");
    auto* fs_opt = t->add_option("--flow-step", config.flow_step, "RK4 step (flow)");
    auto* tt_opt = t->add_option("--total-time", config.total_time, "flow horizon");
    t->add_option("--record-every", config.record_every, "SGD record cadence");
    t->add_flag("--xor-paper-init", xor_paper_init, "start at c1=(1,0), c2=(0,1)");
    t->add_option("--out", out, "output directory");

    // ---- analyze ----
    auto* a = app.add_subcommand("analyze", "Post-hoc analyses of a checkpoint");
    DataFlags adata;
    std::string checkpoint, rank_list, aout;
    bool sta = false, homog = false, euler = false, diag = false;
    std::size_t diag_samples = 256;
    a->add_option("--checkpoint", checkpoint, "checkpoint.bin path")->required();
    a->add_option("--data", adata.data, "dataset to analyze against")->required();
    a->add_option("--label-column", adata.label_column, "csv label column");
    a->add_option("--delimiter", adata.delimiter, "csv delimiter");
    a->add_option("--rank-curve", rank_list, "comma list of ranks, e.g. 1,2,4,full");
    a->add_flag("--sta", sta, "spike-triggered averages vs leading eigenvectors");
    a->add_flag("--homogeneity", homog, "verify the scaling identity");
    a->add_flag("--euler", euler, "verify the differential identity");
    a->add_flag("--theorem-diag", diag, "margin-bound diagnostics");
    a->add_option("--diag-samples", diag_samples, "samples for the diagnostics Gram");
    a->add_option("--out", aout, "output directory");

    // ---- xor-verify ----
    auto* x = app.add_subcommand("xor-verify", "Gradient-flow checks on XOR");
    double total_time = 700.0, flow_step = 1e-2;
    x->add_option("--total-time", total_time, "integration horizon");
    x->add_option("--flow-step", flow_step, "RK4 step");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (t->parsed()) {
            if (optimizer == "gd") config.optimizer = Optimizer::GD;
            else if (optimizer == "sgd") config.optimizer = Optimizer::SGD;
            else if (optimizer == "flow") config.optimizer = Optimizer::GradientFlow;
            else throw SpecError("optimizer: expected gd, sgd or flow");
            if ((fs_opt->count() > 0 || tt_opt->count() > 0) &&
                config.optimizer != Optimizer::GradientFlow)
                throw SpecError("--flow-step/--total-time need --optimizer flow");
            return cmd_train(tdata, model, hidden, config, xor_paper_init, out);
        }
        if (a->parsed()) {
            if (rank_list.empty() && !sta && !homog && !euler && !diag)
                throw SpecError("analyze: pick at least one of --rank-curve, --sta, "
                                "--homogeneity, --euler, --theorem-diag");
            return cmd_analyze(adata, checkpoint, rank_list, sta, homog, euler, diag,
                               diag_samples, aout);
        }
        if (x->parsed()) return cmd_xor_verify(total_time, flow_step);
    } catch (const DivergedTraining& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
