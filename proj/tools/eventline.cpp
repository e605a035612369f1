// eventline: line-detection preprocessing for event-camera classification.
//
// Subcommands: ingest, preprocess, train, eval, sweep, arch, report.
// Exit codes: 0 success, 1 configuration error, 2 sweep finished with failed
// rows, 3 dataset error.

#include <algorithm>
#include <chrono>
#include <cinttypes>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "eventline/binio.hpp"
#include "eventline/classifier.hpp"
#include "eventline/dataset.hpp"
#include "eventline/harness.hpp"
#include "eventline/hash.hpp"
#include "eventline/kernels.hpp"
#include "eventline/metrics.hpp"
#include "eventline/strategy.hpp"

namespace fs = std::filesystem;
using namespace eventline;
using ordered_json = nlohmann::ordered_json;

namespace {

constexpr const char* kVersion = "1.0.0";

// dataset problems exit with a distinct code so callers can tell a missing or
// corrupt data directory from a bad flag
struct DatasetError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

LoadedData must_load(const std::string& dir) {
    try {
        return load_data_dir(dir);
    } catch (const std::exception& e) {
        throw DatasetError(e.what());
    }
}

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::string iso_utc_now() {
    std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

StrategyConfig make_strategy_config(const std::string& strategy, const std::string& polarity,
                                    int k, double omega) {
    StrategyConfig c;
    c.parts = parse_strategy_list(strategy);
    c.polarity = parse_polarity_mode(polarity);
    c.k = k;
    c.omega = omega;
    c.validate();
    return c;
}

std::vector<fs::path> sorted_files(const fs::path& dir, const std::string& ext) {
    if (!fs::is_directory(dir)) throw DatasetError("missing directory " + dir.string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ext)
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    return files;
}

// <split dir>/<label>/ *.<ext>, labels 0 .. n_labels-1. Files are interleaved
// across labels so truncation by `limit` stays stratified.
std::vector<EventSample> load_labelled_split(const fs::path& dir, const DatasetSpec& spec,
                                             const std::string& ext, int64_t limit) {
    std::vector<std::vector<fs::path>> per_label(spec.n_labels);
    for (uint32_t label = 0; label < spec.n_labels; ++label)
        per_label[label] = sorted_files(dir / std::to_string(label), ext);

    std::vector<std::pair<fs::path, int>> order;
    for (size_t i = 0;; ++i) {
        bool any = false;
        for (uint32_t label = 0; label < spec.n_labels; ++label) {
            if (i >= per_label[label].size()) continue;
            order.emplace_back(per_label[label][i], int(label));
            any = true;
        }
        if (!any) break;
    }
    if (limit >= 0 && size_t(limit) < order.size()) order.resize(size_t(limit));
    if (order.empty()) throw DatasetError("no ." + ext + " files under " + dir.string());

    std::vector<EventSample> out;
    out.reserve(order.size());
    for (const auto& [path, label] : order) {
        EventSample raw;
        try {
            raw = ext == ".bin" ? read_atis_bin(path.string(), spec.geometry)
                                : read_events(path.string());
        } catch (const std::exception& e) {
            throw DatasetError(e.what());
        }
        if (!(raw.geometry == spec.geometry))
            throw DatasetError(path.string() + ": geometry does not match dataset " + spec.name);
        EventSample s = canonicalize(raw, spec.denoise_window_us, spec.keep_us);
        s.label = label;
        out.push_back(std::move(s));
    }
    return out;
}

struct IngestOpts {
    std::string dataset, input, out;
    uint64_t seed = 7;
    int64_t limit_train = -1, limit_test = -1;
};

int run_ingest(const IngestOpts& o) {
    if (!has_dataset_spec(o.dataset))
        throw std::invalid_argument("unknown dataset '" + o.dataset + "'");
    const DatasetSpec& spec = dataset_spec(o.dataset);

    std::vector<EventSample> train, test;
    std::string provenance;
    int64_t denoise_applied = spec.denoise_window_us;
    if (o.dataset == "synth-poker" || o.dataset == "synth-nmnist") {
        size_t total = size_t(spec.train_count) + spec.test_count;
        auto all = o.dataset == "synth-poker" ? synth_pip_dataset(total, o.seed)
                                              : synth_digit_dataset(total, o.seed);
        train.assign(all.begin(), all.begin() + spec.train_count);
        test.assign(all.begin() + spec.train_count, all.end());
        provenance = "generated " + o.dataset + " seed " + std::to_string(o.seed);
        denoise_applied = 0; // generated clean, no filtering applied
    } else if (o.dataset == "nmnist") {
        if (o.input.empty()) throw std::invalid_argument("--input required for " + o.dataset);
        train = load_labelled_split(fs::path(o.input) / "Train", spec, ".bin", o.limit_train);
        test = load_labelled_split(fs::path(o.input) / "Test", spec, ".bin", o.limit_test);
        provenance = "ingested from " + o.input;
    } else {
        if (o.input.empty()) throw std::invalid_argument("--input required for " + o.dataset);
        train = load_labelled_split(fs::path(o.input) / "train", spec, ".evt", o.limit_train);
        test = load_labelled_split(fs::path(o.input) / "test", spec, ".evt", o.limit_test);
        provenance = "ingested from " + o.input;
    }

    DataDirInfo info;
    info.name = o.dataset;
    info.kind = "raw";
    info.geometry = spec.geometry;
    info.n_labels = spec.n_labels;
    info.channels = 2;
    info.keep_us = spec.keep_us;
    info.denoise_window_us = denoise_applied;
    info.provenance = provenance;
    save_data_dir(o.out, std::move(info), train, test);
    std::printf("wrote %zu train / %zu test samples to %s\n", train.size(), test.size(),
                o.out.c_str());
    return 0;
}

struct PreprocOpts {
    std::string data, out, strategy = "ws", polarity = "merged";
    int k = 1;
    double omega = 5.0;
};

int run_preprocess(const PreprocOpts& o) {
    StrategyConfig cfg = make_strategy_config(o.strategy, o.polarity, o.k, o.omega);
    LoadedData data = must_load(o.data);
    if (data.info.kind != "raw") throw DatasetError(o.data + " is not a raw data directory");

    PreprocessNetwork net = build_network(data.info.geometry, cfg);
    for (const std::string& w : net.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());

    PreprocessedData pp = preprocess_dataset(net, data);
    save_preprocessed(o.out, preprocess_key(cfg, data), cfg, net, data, pp);

    EnergyReport er = count_se(pp.account, net.pixel_fan_out, data.info.n_labels);
    std::printf("wrote %zu train / %zu test preprocessed samples to %s\n", pp.train.size(),
                pp.test.size(), o.out.c_str());
    std::printf("per-sample means over the test split: se_p=%s wta=%s line-layer output=%s\n",
                fmt_double(er.se_p).c_str(), fmt_double(er.wta).c_str(),
                fmt_double(er.e_pre).c_str());
    return 0;
}

struct TrainEvalOpts {
    std::string data, model, strategy = "none", polarity = "merged";
    int k = 1;
    double omega = 5.0;
    uint64_t seed = 1;
    uint32_t epochs = 10;
    std::optional<uint32_t> batch;
    std::optional<double> threshold;
};

struct PreparedData {
    TrainData train, test;
    uint32_t n_labels = 0;
    std::string dataset_name;
    // set when a strategy was applied here (energy measured on the test split)
    std::optional<EnergyReport> energy;
};

PreparedData prepare(const TrainEvalOpts& o) {
    LoadedData data = must_load(o.data);
    if (data.info.n_labels == 0) throw DatasetError(o.data + " has no labels");
    PreparedData out;
    out.n_labels = data.info.n_labels;
    out.dataset_name = data.info.name;

    if (data.info.kind == "preprocessed") {
        if (o.strategy != "none")
            throw std::invalid_argument("--strategy does not apply to preprocessed data");
        PolarityMode pol =
            data.info.channels == 2 ? PolarityMode::Split : PolarityMode::Merged;
        out.train = make_train_data(data.train, kClassifierBinUs, pol);
        out.test = make_train_data(data.test, kClassifierBinUs, pol);
        return out;
    }
    if (o.strategy == "none") {
        PolarityMode pol = parse_polarity_mode(o.polarity);
        out.train = make_train_data(data.train, kClassifierBinUs, pol);
        out.test = make_train_data(data.test, kClassifierBinUs, pol);
        return out;
    }
    StrategyConfig cfg = make_strategy_config(o.strategy, o.polarity, o.k, o.omega);
    PreprocessNetwork net = build_network(data.info.geometry, cfg);
    for (const std::string& w : net.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
    PreprocessedData pp = preprocess_dataset(net, data);
    out.train = make_train_data(pp.train, kClassifierBinUs, cfg.polarity);
    out.test = make_train_data(pp.test, kClassifierBinUs, cfg.polarity);
    out.energy = count_se(pp.account, net.pixel_fan_out, data.info.n_labels);
    return out;
}

int run_train(const TrainEvalOpts& o) {
    PreparedData pd = prepare(o);

    ClassifierConfig cc;
    cc.input_dim = pd.train.dim;
    cc.n_labels = pd.n_labels;
    cc.epochs = o.epochs;
    // dataset-table defaults when the directory is a known dataset
    if (has_dataset_spec(pd.dataset_name)) {
        const DatasetSpec& spec = dataset_spec(pd.dataset_name);
        cc.batch_size = spec.batch_size;
        cc.threshold = spec.classifier_threshold;
    }
    if (o.batch) cc.batch_size = *o.batch;
    if (o.threshold) cc.threshold = *o.threshold;

    std::vector<EpochStats> stats;
    ClassifierState st = train_classifier(pd.train, cc, o.seed, &stats);
    for (size_t e = 0; e < stats.size(); ++e)
        std::printf("epoch %zu mean loss %s\n", e + 1, fmt_double(stats[e].mean_loss).c_str());
    EvalResult ev = evaluate_classifier(st, pd.test);
    std::printf("test accuracy %s (%" PRIu64 "/%" PRIu64 ")\n", fmt_double(ev.accuracy).c_str(),
                ev.correct, ev.total);
    if (!o.model.empty()) {
        save_checkpoint(st, o.model);
        std::printf("checkpoint written to %s\n", o.model.c_str());
    }
    return 0;
}

int run_eval(const TrainEvalOpts& o) {
    ClassifierState st = load_checkpoint(o.model);
    PreparedData pd = prepare(o);
    if (st.cfg.input_dim != pd.test.dim)
        throw std::invalid_argument("checkpoint expects " + std::to_string(st.cfg.input_dim) +
                                    " inputs but the data provides " +
                                    std::to_string(pd.test.dim));
    EvalResult ev = evaluate_classifier(st, pd.test);
    std::printf("test accuracy %s (%" PRIu64 "/%" PRIu64 ")\n", fmt_double(ev.accuracy).c_str(),
                ev.correct, ev.total);
    if (pd.energy) {
        Efficiency eff = efficiency(ev.accuracy, pd.energy->se);
        std::printf("se_p=%s se_c=%s se=%s efficiency=%s\n", fmt_double(pd.energy->se_p).c_str(),
                    fmt_double(pd.energy->se_c).c_str(), fmt_double(pd.energy->se).c_str(),
                    fmt_double(eff.value).c_str());
    }
    return 0;
}

struct SweepOpts {
    std::string plan_file, data, out;
    std::vector<std::string> strategies, polarities;
    std::vector<int> k_grid;
    std::vector<double> omega_grid;
    std::vector<uint64_t> seeds;
    std::optional<uint32_t> epochs, workers, batch;
    std::optional<double> threshold;
    bool no_cache = false;
};

int run_sweep(const SweepOpts& o) {
    Plan plan;
    if (!o.plan_file.empty()) {
        std::string text;
        try {
            text = binio::read_file(o.plan_file);
        } catch (const std::exception& e) {
            throw std::invalid_argument(e.what());
        }
        plan = parse_plan(text);
    }
    if (!o.data.empty()) plan.data_dir = o.data;
    if (!o.out.empty()) plan.out_dir = o.out;
    if (!o.strategies.empty()) plan.strategies = o.strategies;
    if (!o.polarities.empty()) plan.polarities = o.polarities;
    if (!o.k_grid.empty()) plan.k_grid = o.k_grid;
    if (!o.omega_grid.empty()) plan.omega_grid = o.omega_grid;
    if (!o.seeds.empty()) plan.seeds = o.seeds;
    if (o.epochs) plan.epochs = *o.epochs;
    if (o.workers) plan.workers = *o.workers;
    if (o.batch) plan.batch_size = *o.batch;
    if (o.threshold) plan.threshold = *o.threshold;
    if (o.no_cache) plan.cache = false;
    plan.validate();
    if (plan.data_dir.empty()) throw std::invalid_argument("no data directory (plan or --data)");
    if (plan.out_dir.empty()) throw std::invalid_argument("no output directory (plan or --out)");

    const std::string started = iso_utc_now();
    LoadedData data = must_load(plan.data_dir);
    std::printf("sweeping %s: %" PRIu64 " rows (%zu train / %zu test samples)\n",
                data.info.name.c_str(), plan_row_count(plan), data.train.size(),
                data.test.size());

    Report report = sweep(plan, data);

    fs::create_directories(plan.out_dir);
    emit(report, "csv", (fs::path(plan.out_dir) / "report.csv").string());
    emit(report, "json", (fs::path(plan.out_dir) / "report.json").string());
    emit(report, "plotdata", (fs::path(plan.out_dir) / "plotdata").string());
    binio::write_file((fs::path(plan.out_dir) / "plan.json").string(), plan_to_json(plan));

    // timestamps stay out of the report files so replays compare byte-equal
    ordered_json meta;
    meta["started_utc"] = started;
    meta["finished_utc"] = iso_utc_now();
    meta["version"] = kVersion;
    meta["simd"] = kernels::active().name;
    binio::write_file((fs::path(plan.out_dir) / "run_meta.json").string(), meta.dump(1) + "\n");

    size_t failed = 0;
    for (const ReportRow& r : report.rows)
        if (!r.error.empty()) ++failed;
    std::printf("baseline accuracy %s, gate %s\n", fmt_double(report.baseline_accuracy).c_str(),
                fmt_double(admissibility_threshold(report.baseline_accuracy)).c_str());

    Selection sel = select(report);
    for (const SelectedPoint& p : sel.best_accuracy) {
        const ReportRow& r = report.rows[p.row];
        std::printf("best accuracy  %-10s %-6s k=%-3d omega=%-5s acc=%s se=%s\n",
                    r.strategy.c_str(), r.polarity.c_str(), r.k, fmt_double(r.omega).c_str(),
                    fmt_double(r.accuracy).c_str(), fmt_double(r.se).c_str());
    }
    for (const SelectedPoint& p : sel.best_efficiency) {
        const ReportRow& r = report.rows[p.row];
        std::printf("best efficiency %-10s %-6s k=%-3d omega=%-5s acc=%s se=%s eff=%s\n",
                    r.strategy.c_str(), r.polarity.c_str(), r.k, fmt_double(r.omega).c_str(),
                    fmt_double(r.accuracy).c_str(), fmt_double(r.se).c_str(),
                    fmt_double(r.efficiency).c_str());
    }
    for (const std::string& d : sel.diagnostics) std::printf("%s\n", d.c_str());

    if (failed) {
        std::fprintf(stderr, "%zu of %zu rows failed; see the error column in %s/report.csv\n",
                     failed, report.rows.size(), plan.out_dir.c_str());
        return 2;
    }
    std::printf("report written to %s\n", plan.out_dir.c_str());
    return 0;
}

struct ArchOpts {
    std::string data, strategy = "ws", polarity = "merged";
    int k = 1;
    double omega = 5.0;
    uint32_t side = 0;
    uint32_t labels = 10;
};

int run_arch(const ArchOpts& o) {
    SensorGeometry g;
    uint32_t labels = o.labels;
    if (!o.data.empty()) {
        LoadedData data = must_load(o.data);
        if (data.info.kind != "raw") throw DatasetError(o.data + " is not a raw data directory");
        g = data.info.geometry;
        labels = data.info.n_labels;
    } else if (o.side > 0) {
        g = SensorGeometry{uint16_t(o.side), uint16_t(o.side)};
    } else {
        throw std::invalid_argument("need --side or --data");
    }

    ordered_json j;
    j["strategy"] = o.strategy;
    j["polarity"] = o.polarity;
    j["sensor_side"] = g.width;
    j["n_labels"] = labels;
    if (o.strategy == "none") {
        ArchitectureCensus c =
            census_no_preprocessing(g, parse_polarity_mode(o.polarity), labels);
        j["neurons"] = c.neurons();
        j["synapses"] = c.synapses();
        j["classifier_synapses"] = c.classifier_synapses;
        j["max_fan_in"] = c.max_fan_in;
        j["mean_fan_in"] = c.mean_fan_in;
        j["unique_parameters"] = c.unique_parameters;
    } else {
        StrategyConfig cfg = make_strategy_config(o.strategy, o.polarity, o.k, o.omega);
        PreprocessNetwork net = build_network(g, cfg);
        ArchitectureCensus c = census(net, labels);
        j["k"] = o.k;
        j["omega"] = o.omega;
        j["line_units"] = net.n_units();
        j["units_per_channel"] = net.units_per_channel;
        j["neurons"] = c.neurons();
        j["synapses"] = c.synapses();
        j["pattern_synapses"] = c.pattern_synapses;
        j["wta_synapses"] = c.wta_synapses;
        j["classifier_synapses"] = c.classifier_synapses;
        j["max_fan_in"] = c.max_fan_in;
        j["mean_fan_in"] = c.mean_fan_in;
        j["unique_parameters"] = c.unique_parameters;
        j["warnings"] = net.warnings;
    }
    std::printf("%s\n", j.dump(1).c_str());
    return 0;
}

struct ReportOpts {
    std::string in, format = "csv", out;
    bool selection = false;
};

int run_report(const ReportOpts& o) {
    std::string text;
    try {
        text = binio::read_file(o.in);
    } catch (const std::exception& e) {
        throw std::invalid_argument(e.what());
    }
    Report report = report_from_json(text);
    if (!o.out.empty()) {
        emit(report, o.format, o.out);
        std::printf("wrote %s (%s)\n", o.out.c_str(), o.format.c_str());
    }
    if (o.selection) {
        Selection sel = select(report);
        for (const SelectedPoint& p : sel.best_accuracy) {
            const ReportRow& r = report.rows[p.row];
            std::printf("best_accuracy,%s,%s,%d,%s,%s\n", r.strategy.c_str(), r.polarity.c_str(),
                        r.k, fmt_double(r.omega).c_str(), fmt_double(r.accuracy).c_str());
        }
        for (const SelectedPoint& p : sel.best_efficiency) {
            const ReportRow& r = report.rows[p.row];
            std::printf("best_efficiency,%s,%s,%d,%s,%s\n", r.strategy.c_str(),
                        r.polarity.c_str(), r.k, fmt_double(r.omega).c_str(),
                        fmt_double(r.efficiency).c_str());
        }
        for (const std::string& d : sel.diagnostics) std::printf("gated,%s\n", d.c_str());
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"line-detection preprocessing for event-camera classification"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    std::string simd = "auto";
    app.add_option("--simd", simd, "kernel backend")
        ->check(CLI::IsMember({"auto", "scalar", "avx2"}));

    IngestOpts ingest;
    CLI::App* c_ingest = app.add_subcommand("ingest", "build a canonical data directory");
    c_ingest->add_option("--dataset", ingest.dataset, "dataset name")->required();
    c_ingest->add_option("--input", ingest.input, "raw input directory");
    c_ingest->add_option("--out", ingest.out, "output data directory")->required();
    c_ingest->add_option("--seed", ingest.seed, "seed for generated datasets");
    c_ingest->add_option("--limit-train", ingest.limit_train, "cap train samples (stratified)");
    c_ingest->add_option("--limit-test", ingest.limit_test, "cap test samples (stratified)");

    PreprocOpts preproc;
    CLI::App* c_pre = app.add_subcommand("preprocess", "run the line layer over a data directory");
    c_pre->add_option("--data", preproc.data)->required();
    c_pre->add_option("--out", preproc.out)->required();
    c_pre->add_option("--strategy", preproc.strategy, "ws|ce|cr|cq-ad|cq-id or a+b cumulative");
    c_pre->add_option("--polarity", preproc.polarity)->check(CLI::IsMember({"merged", "split"}));
    c_pre->add_option("--k", preproc.k, "diagonal step");
    c_pre->add_option("--omega", preproc.omega, "total incoming weight per unit");

    TrainEvalOpts train;
    CLI::App* c_train = app.add_subcommand("train", "train the classifier");
    c_train->add_option("--data", train.data)->required();
    c_train->add_option("--model", train.model, "checkpoint output path");
    c_train->add_option("--strategy", train.strategy, "preprocess first (none = raw pixels)");
    c_train->add_option("--polarity", train.polarity)->check(CLI::IsMember({"merged", "split"}));
    c_train->add_option("--k", train.k);
    c_train->add_option("--omega", train.omega);
    c_train->add_option("--seed", train.seed);
    c_train->add_option("--epochs", train.epochs);
    c_train->add_option("--batch", train.batch);
    c_train->add_option("--threshold", train.threshold);

    TrainEvalOpts eval;
    CLI::App* c_eval = app.add_subcommand("eval", "evaluate a checkpoint");
    c_eval->add_option("--data", eval.data)->required();
    c_eval->add_option("--model", eval.model)->required();
    c_eval->add_option("--strategy", eval.strategy);
    c_eval->add_option("--polarity", eval.polarity)->check(CLI::IsMember({"merged", "split"}));
    c_eval->add_option("--k", eval.k);
    c_eval->add_option("--omega", eval.omega);

    SweepOpts sweep_opts;
    CLI::App* c_sweep = app.add_subcommand("sweep", "run the hyperparameter grid");
    c_sweep->add_option("--plan", sweep_opts.plan_file, "plan JSON file");
    c_sweep->add_option("--data", sweep_opts.data, "overrides the plan's data_dir");
    c_sweep->add_option("--out", sweep_opts.out, "overrides the plan's out_dir");
    c_sweep->add_option("--strategies", sweep_opts.strategies)->delimiter(',');
    c_sweep->add_option("--polarities", sweep_opts.polarities)->delimiter(',');
    c_sweep->add_option("--k-grid", sweep_opts.k_grid)->delimiter(',');
    c_sweep->add_option("--omega-grid", sweep_opts.omega_grid)->delimiter(',');
    c_sweep->add_option("--seeds", sweep_opts.seeds)->delimiter(',');
    c_sweep->add_option("--epochs", sweep_opts.epochs);
    c_sweep->add_option("--workers", sweep_opts.workers);
    c_sweep->add_option("--batch", sweep_opts.batch);
    c_sweep->add_option("--threshold", sweep_opts.threshold);
    c_sweep->add_flag("--no-cache", sweep_opts.no_cache, "always re-run preprocessing");

    ArchOpts arch;
    CLI::App* c_arch = app.add_subcommand("arch", "print architecture counts");
    c_arch->add_option("--data", arch.data, "take geometry and labels from a data directory");
    c_arch->add_option("--side", arch.side, "square sensor side");
    c_arch->add_option("--labels", arch.labels);
    c_arch->add_option("--strategy", arch.strategy, "strategy, or none for the raw classifier");
    c_arch->add_option("--polarity", arch.polarity)->check(CLI::IsMember({"merged", "split"}));
    c_arch->add_option("--k", arch.k);
    c_arch->add_option("--omega", arch.omega);

    ReportOpts rep;
    CLI::App* c_rep = app.add_subcommand("report", "re-emit or inspect a report");
    c_rep->add_option("--in", rep.in, "report JSON file")->required();
    c_rep->add_option("--format", rep.format)->check(CLI::IsMember({"csv", "json", "plotdata"}));
    c_rep->add_option("--out", rep.out, "output file or directory");
    c_rep->add_flag("--selection", rep.selection, "print selected grid points");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        kernels::force_backend(simd);
        if (c_ingest->parsed()) return run_ingest(ingest);
        if (c_pre->parsed()) return run_preprocess(preproc);
        if (c_train->parsed()) return run_train(train);
        if (c_eval->parsed()) return run_eval(eval);
        if (c_sweep->parsed()) return run_sweep(sweep_opts);
        if (c_arch->parsed()) return run_arch(arch);
        if (c_rep->parsed()) return run_report(rep);
    } catch (const DatasetError& e) {
        std::fprintf(stderr, "dataset error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
