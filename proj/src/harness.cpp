#include "eventline/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <map>
#include <set>
#include <stdexcept>
#include <thread>

#include "json.hpp"

#include "eventline/binio.hpp"
#include "eventline/classifier.hpp"
#include "eventline/hash.hpp"

namespace eventline {

namespace fs = std::filesystem;
using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::string join_seeds(const std::vector<uint64_t>& seeds) {
    std::string out;
    for (size_t i = 0; i < seeds.size(); ++i) {
        if (i) out += '+';
        out += std::to_string(seeds[i]);
    }
    return out;
}

// batch size / firing threshold: plan override, else the dataset table, else
// generic defaults for data directories we have no table entry for
struct TrainingParams {
    uint32_t batch = 8;
    double threshold = 5.0;
};

TrainingParams resolve_training(const Plan& plan, const DataDirInfo& info) {
    TrainingParams tp;
    if (has_dataset_spec(info.name)) {
        const DatasetSpec& spec = dataset_spec(info.name);
        tp.batch = spec.batch_size;
        tp.threshold = spec.classifier_threshold;
    }
    if (plan.batch_size) tp.batch = *plan.batch_size;
    if (plan.threshold) tp.threshold = *plan.threshold;
    return tp;
}

ClassifierConfig make_classifier_config(uint32_t dim, uint32_t n_labels, const Plan& plan,
                                        const TrainingParams& tp) {
    ClassifierConfig cc;
    cc.input_dim = dim;
    cc.n_labels = n_labels;
    cc.threshold = tp.threshold;
    cc.batch_size = tp.batch;
    cc.epochs = plan.epochs;
    return cc;
}

std::string row_config_string(const std::string& preproc, const Plan& plan,
                              const TrainingParams& tp) {
    std::string s = preproc;
    s += "|bin=" + std::to_string(kClassifierBinUs);
    s += "|epochs=" + std::to_string(plan.epochs);
    s += "|batch=" + std::to_string(tp.batch);
    s += "|theta=" + fmt_double(tp.threshold);
    s += "|seeds=" + join_seeds(plan.seeds);
    return s;
}

double train_and_score(const TrainData& train, const TrainData& test, const ClassifierConfig& cc,
                       const std::vector<uint64_t>& seeds) {
    double sum = 0;
    for (uint64_t seed : seeds) {
        ClassifierState st = train_classifier(train, cc, seed);
        sum += evaluate_classifier(st, test).accuracy;
    }
    return sum / double(seeds.size());
}

void fill_energy(ReportRow& row, const EnergyReport& er) {
    row.se_p = er.se_p;
    row.se_c = er.se_c;
    row.se = er.se;
    row.wta = er.wta;
    row.e_pre = er.e_pre;
    row.e_raw = er.e_raw;
    Efficiency eff = efficiency(row.accuracy, row.se);
    row.efficiency = eff.value;
    row.efficiency_defined = eff.defined;
}

void fill_census(ReportRow& row, const ArchitectureCensus& c) {
    row.neurons = c.neurons();
    row.synapses = c.synapses();
    row.max_fan_in = c.max_fan_in;
    row.mean_fan_in = c.mean_fan_in;
}

ReportRow run_baseline_point(PolarityMode polarity, const LoadedData& data, const Plan& plan) {
    ReportRow row;
    row.dataset = data.info.name;
    row.strategy = "none";
    row.polarity = polarity_name(polarity);
    row.seeds = plan.seeds;
    row.manifest_hash = data.manifest_hash;

    const TrainingParams tp = resolve_training(plan, data.info);
    std::string cfg = "baseline|v1|" + data.manifest_hash + "|" + row.polarity;
    row.config_hash = hex64(fnv1a64(row_config_string(cfg, plan, tp)));

    TrainData train = make_train_data(data.train, kClassifierBinUs, polarity);
    TrainData test = make_train_data(data.test, kClassifierBinUs, polarity);
    ClassifierConfig cc = make_classifier_config(train.dim, data.info.n_labels, plan, tp);
    row.accuracy = train_and_score(train, test, cc, plan.seeds);

    uint64_t raw_total = 0;
    for (const EventSample& s : data.test) raw_total += s.events.size();
    fill_energy(row, count_se_baseline(raw_total, data.test.size(), data.info.n_labels));
    fill_census(row, census_no_preprocessing(data.info.geometry, polarity, data.info.n_labels));
    return row;
}

bool row_key_less(const ReportRow& a, const ReportRow& b) {
    // baselines first, then the grid in (strategy, polarity, k, omega) order
    if (a.is_baseline() != b.is_baseline()) return a.is_baseline();
    return std::tie(a.strategy, a.polarity, a.k, a.omega) <
           std::tie(b.strategy, b.polarity, b.k, b.omega);
}

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

} // namespace

void Plan::validate() const {
    if (schema_version != 1)
        throw std::invalid_argument("unsupported plan schema_version " +
                                    std::to_string(schema_version));
    if (strategies.empty()) throw std::invalid_argument("plan has no strategies");
    for (const std::string& s : strategies) {
        StrategyConfig probe;
        probe.parts = parse_strategy_list(s);
        probe.k = k_grid.empty() ? 1 : k_grid.front();
        probe.omega = omega_grid.empty() ? 1.0 : omega_grid.front();
        probe.validate();
    }
    if (polarities.empty()) throw std::invalid_argument("plan has no polarities");
    for (const std::string& p : polarities) parse_polarity_mode(p);
    if (std::set<std::string>(polarities.begin(), polarities.end()).size() != polarities.size())
        throw std::invalid_argument("duplicate polarity in plan");
    if (k_grid.empty()) throw std::invalid_argument("plan has an empty k grid");
    for (int k : k_grid)
        if (k < 1) throw std::invalid_argument("k must be >= 1");
    if (std::set<int>(k_grid.begin(), k_grid.end()).size() != k_grid.size())
        throw std::invalid_argument("duplicate k in plan");
    if (omega_grid.empty()) throw std::invalid_argument("plan has an empty omega grid");
    for (double w : omega_grid)
        if (!(w > 0)) throw std::invalid_argument("omega must be > 0");
    if (std::set<double>(omega_grid.begin(), omega_grid.end()).size() != omega_grid.size())
        throw std::invalid_argument("duplicate omega in plan");
    if (seeds.empty()) throw std::invalid_argument("plan has no seeds");
    if (epochs == 0) throw std::invalid_argument("epochs must be >= 1");
    if (batch_size && *batch_size == 0) throw std::invalid_argument("batch_size must be >= 1");
    if (threshold && !(*threshold > 0)) throw std::invalid_argument("threshold must be > 0");
    if (workers == 0) throw std::invalid_argument("workers must be >= 1");
}

Plan parse_plan(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("plan is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw std::invalid_argument("plan must be a JSON object");

    static const std::set<std::string> known = {
        "schema_version", "data_dir", "strategies", "polarities", "k_grid", "omega_grid",
        "seeds",          "epochs",   "batch_size", "threshold",  "out_dir", "workers",
        "cache"};
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!known.count(it.key()))
            throw std::invalid_argument("unknown plan field '" + it.key() + "'");

    Plan p;
    try {
        if (j.contains("schema_version")) p.schema_version = j["schema_version"].get<int>();
        if (j.contains("data_dir")) p.data_dir = j["data_dir"].get<std::string>();
        if (j.contains("strategies")) p.strategies = j["strategies"].get<std::vector<std::string>>();
        if (j.contains("polarities")) p.polarities = j["polarities"].get<std::vector<std::string>>();
        if (j.contains("k_grid")) p.k_grid = j["k_grid"].get<std::vector<int>>();
        if (j.contains("omega_grid")) p.omega_grid = j["omega_grid"].get<std::vector<double>>();
        if (j.contains("seeds")) p.seeds = j["seeds"].get<std::vector<uint64_t>>();
        if (j.contains("epochs")) p.epochs = j["epochs"].get<uint32_t>();
        if (j.contains("batch_size") && !j["batch_size"].is_null())
            p.batch_size = j["batch_size"].get<uint32_t>();
        if (j.contains("threshold") && !j["threshold"].is_null())
            p.threshold = j["threshold"].get<double>();
        if (j.contains("out_dir")) p.out_dir = j["out_dir"].get<std::string>();
        if (j.contains("workers")) p.workers = j["workers"].get<uint32_t>();
        if (j.contains("cache")) p.cache = j["cache"].get<bool>();
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("bad plan field type: ") + e.what());
    }
    p.validate();
    return p;
}

std::string plan_to_json(const Plan& p) {
    ordered_json j;
    j["schema_version"] = p.schema_version;
    j["data_dir"] = p.data_dir;
    j["strategies"] = p.strategies;
    j["polarities"] = p.polarities;
    j["k_grid"] = p.k_grid;
    j["omega_grid"] = p.omega_grid;
    j["seeds"] = p.seeds;
    j["epochs"] = p.epochs;
    if (p.batch_size)
        j["batch_size"] = *p.batch_size;
    else
        j["batch_size"] = nullptr;
    if (p.threshold)
        j["threshold"] = *p.threshold;
    else
        j["threshold"] = nullptr;
    j["out_dir"] = p.out_dir;
    j["workers"] = p.workers;
    j["cache"] = p.cache;
    return j.dump(1) + "\n";
}

uint64_t plan_row_count(const Plan& p) {
    return uint64_t(p.strategies.size()) * p.polarities.size() * p.k_grid.size() *
               p.omega_grid.size() +
           p.polarities.size();
}

bool Report::has_errors() const {
    return std::any_of(rows.begin(), rows.end(),
                       [](const ReportRow& r) { return !r.error.empty(); });
}

std::string preprocess_key(const StrategyConfig& config, const LoadedData& data) {
    std::string s = "preproc|v1|";
    s += data.manifest_hash;
    s += '|';
    s += config.name();
    s += '|';
    s += polarity_name(config.polarity);
    s += "|k=" + std::to_string(config.k);
    s += "|omega=" + fmt_double(config.omega);
    s += "|tail=" + std::to_string(kPreprocessTailUs);
    return s;
}

PreprocessedData preprocess_dataset(const PreprocessNetwork& net, const LoadedData& data) {
    PreprocessedData pp;
    pp.train.reserve(data.train.size());
    for (const EventSample& s : data.train) pp.train.push_back(preprocess(s, net).output);
    pp.test.reserve(data.test.size());
    for (const EventSample& s : data.test) {
        PreprocessResult pr = preprocess(s, net);
        pp.account.add(pr, s.events.size());
        pp.test.push_back(std::move(pr.output));
    }
    return pp;
}

void save_preprocessed(const std::string& dir, const std::string& key,
                       const StrategyConfig& config, const PreprocessNetwork& net,
                       const LoadedData& data, const PreprocessedData& pp) {
    DataDirInfo info;
    info.name = data.info.name;
    info.kind = "preprocessed";
    info.geometry = SensorGeometry{uint16_t(net.units_per_channel), 1};
    info.n_labels = data.info.n_labels;
    info.channels = net.channels;
    info.keep_us = pp.train.empty() ? 0 : pp.train.front().duration_us;
    info.denoise_window_us = 0;
    info.provenance = "preprocessed from " + data.info.name;

    ordered_json pj;
    pj["strategy"] = config.name();
    pj["polarity"] = polarity_name(config.polarity);
    pj["k"] = config.k;
    pj["omega"] = config.omega;
    info.preproc_json = pj.dump();

    save_data_dir(dir, std::move(info), pp.train, pp.test);

    ordered_json j;
    j["schema_version"] = 1;
    j["key"] = key;
    j["n_samples"] = pp.account.n_samples;
    j["se_p_total"] = pp.account.se_p_total;
    j["wta_total"] = pp.account.wta_total;
    j["preproc_out_total"] = pp.account.preproc_out_total;
    j["raw_in_total"] = pp.account.raw_in_total;
    j["pixel_counts"] = pp.account.pixel_counts;
    // written last: its presence marks the entry complete
    binio::write_file((fs::path(dir) / "energy.json").string(), j.dump(1) + "\n");
}

bool load_preprocessed(const std::string& dir, const std::string& key, const LoadedData& data,
                       PreprocessedData& out) {
    try {
        const fs::path marker = fs::path(dir) / "energy.json";
        if (!fs::exists(marker)) return false;
        json j = json::parse(binio::read_file(marker.string()));
        if (j.value("schema_version", 0) != 1) return false;
        if (j.value("key", "") != key) return false;

        LoadedData cached = load_data_dir(dir);
        if (cached.train.size() != data.train.size() || cached.test.size() != data.test.size())
            return false;

        out.train = std::move(cached.train);
        out.test = std::move(cached.test);
        out.account = EnergyAccount{};
        out.account.n_samples = j.at("n_samples").get<uint64_t>();
        out.account.se_p_total = j.at("se_p_total").get<uint64_t>();
        out.account.wta_total = j.at("wta_total").get<uint64_t>();
        out.account.preproc_out_total = j.at("preproc_out_total").get<uint64_t>();
        out.account.raw_in_total = j.at("raw_in_total").get<uint64_t>();
        out.account.pixel_counts = j.at("pixel_counts").get<std::vector<uint64_t>>();
        return true;
    } catch (const std::exception&) {
        return false; // stale or torn cache entry: redo the work
    }
}

GridPointResult run_grid_point(const StrategyConfig& config, const LoadedData& data,
                               const Plan& plan, double baseline_accuracy_hint) {
    config.validate();
    if (data.info.kind != "raw")
        throw std::invalid_argument("grid points run on raw data directories, got kind '" +
                                    data.info.kind + "'");

    GridPointResult res;
    ReportRow& row = res.row;
    row.dataset = data.info.name;
    row.strategy = config.name();
    row.polarity = polarity_name(config.polarity);
    row.k = config.k;
    row.omega = config.omega;
    row.seeds = plan.seeds;
    row.manifest_hash = data.manifest_hash;

    const TrainingParams tp = resolve_training(plan, data.info);
    const std::string key = preprocess_key(config, data);
    row.config_hash = hex64(fnv1a64(row_config_string(key, plan, tp)));

    PreprocessNetwork net = build_network(data.info.geometry, config);
    res.pixel_fan_out = net.pixel_fan_out;

    const bool use_cache = plan.cache && !plan.out_dir.empty();
    const fs::path cache_dir = fs::path(plan.out_dir) / "cache" / hex64(fnv1a64(key));

    PreprocessedData cp;
    if (!use_cache || !load_preprocessed(cache_dir.string(), key, data, cp)) {
        cp = preprocess_dataset(net, data);
        if (use_cache) save_preprocessed(cache_dir.string(), key, config, net, data, cp);
    }

    TrainData train = make_train_data(cp.train, kClassifierBinUs, config.polarity);
    TrainData test = make_train_data(cp.test, kClassifierBinUs, config.polarity);
    if (train.dim != net.n_units() || test.dim != net.n_units())
        throw std::runtime_error("preprocessed dimension mismatch: classifier sees " +
                                 std::to_string(train.dim) + " inputs, network has " +
                                 std::to_string(net.n_units()));

    ClassifierConfig cc = make_classifier_config(train.dim, data.info.n_labels, plan, tp);
    row.accuracy = train_and_score(train, test, cc, plan.seeds);

    res.account = cp.account;
    fill_energy(row, count_se(res.account, net.pixel_fan_out, data.info.n_labels));
    fill_census(row, census(net, data.info.n_labels));
    if (baseline_accuracy_hint >= 0)
        row.admissible = admissible(row.accuracy, baseline_accuracy_hint);
    return res;
}

Report sweep(const Plan& plan, const LoadedData& data) {
    plan.validate();
    if (data.info.kind != "raw")
        throw std::invalid_argument("sweep needs a raw data directory, got kind '" +
                                    data.info.kind + "'");
    if (data.train.empty() || data.test.empty())
        throw std::invalid_argument("sweep needs non-empty train and test splits");
    if (data.info.n_labels == 0) throw std::invalid_argument("data directory has no labels");

    Report report;
    report.dataset = data.info.name;
    report.manifest_hash = data.manifest_hash;

    // no-preprocessing reference first; its best accuracy sets the gate
    for (const std::string& pol : plan.polarities) {
        ReportRow row;
        try {
            row = run_baseline_point(parse_polarity_mode(pol), data, plan);
        } catch (const std::exception& e) {
            row.dataset = data.info.name;
            row.strategy = "none";
            row.polarity = pol;
            row.seeds = plan.seeds;
            row.manifest_hash = data.manifest_hash;
            row.error = e.what();
        }
        report.rows.push_back(std::move(row));
    }
    for (const ReportRow& r : report.rows)
        if (r.error.empty()) report.baseline_accuracy = std::max(report.baseline_accuracy, r.accuracy);

    struct Job {
        StrategyConfig config;
    };
    std::vector<Job> jobs;
    for (const std::string& s : plan.strategies)
        for (const std::string& pol : plan.polarities)
            for (int k : plan.k_grid)
                for (double omega : plan.omega_grid) {
                    StrategyConfig c;
                    c.parts = parse_strategy_list(s);
                    c.polarity = parse_polarity_mode(pol);
                    c.k = k;
                    c.omega = omega;
                    jobs.push_back(Job{std::move(c)});
                }

    std::vector<ReportRow> grid_rows(jobs.size());
    std::atomic<size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            size_t i = next.fetch_add(1);
            if (i >= jobs.size()) break;
            const Job& job = jobs[i];
            try {
                grid_rows[i] = run_grid_point(job.config, data, plan).row;
            } catch (const std::exception& e) {
                ReportRow& row = grid_rows[i];
                row.dataset = data.info.name;
                row.strategy = job.config.name();
                row.polarity = polarity_name(job.config.polarity);
                row.k = job.config.k;
                row.omega = job.config.omega;
                row.seeds = plan.seeds;
                row.manifest_hash = data.manifest_hash;
                row.error = e.what();
            }
        }
    };
    const size_t n_threads = std::min<size_t>(std::max<uint32_t>(plan.workers, 1), jobs.size());
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_threads);
        for (size_t i = 0; i < n_threads; ++i) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }

    for (ReportRow& r : grid_rows) report.rows.push_back(std::move(r));
    for (ReportRow& r : report.rows)
        if (r.error.empty()) r.admissible = admissible(r.accuracy, report.baseline_accuracy);
    std::sort(report.rows.begin(), report.rows.end(), row_key_less);
    return report;
}

Selection select(const Report& report) {
    Selection sel;
    const double floor = admissibility_threshold(report.baseline_accuracy);

    std::map<std::pair<std::string, std::string>, std::vector<size_t>> groups;
    for (size_t i = 0; i < report.rows.size(); ++i) {
        const ReportRow& r = report.rows[i];
        if (r.is_baseline() || !r.error.empty()) continue;
        groups[{r.strategy, r.polarity}].push_back(i);
    }

    auto better = [&](size_t a, size_t b, bool by_efficiency) {
        const ReportRow& ra = report.rows[a];
        const ReportRow& rb = report.rows[b];
        double va = by_efficiency ? ra.efficiency : ra.accuracy;
        double vb = by_efficiency ? rb.efficiency : rb.accuracy;
        if (va != vb) return va > vb;
        if (ra.se != rb.se) return ra.se < rb.se;
        if (ra.k != rb.k) return ra.k < rb.k;
        return ra.omega < rb.omega;
    };

    for (const auto& [key, idx] : groups) {
        size_t best_acc = idx.front();
        for (size_t i : idx)
            if (better(i, best_acc, false)) best_acc = i;
        sel.best_accuracy.push_back({key.first, key.second, best_acc});

        bool have = false;
        size_t best_eff = 0;
        double best_seen = 0;
        for (size_t i : idx) {
            const ReportRow& r = report.rows[i];
            best_seen = std::max(best_seen, r.accuracy);
            if (!r.admissible || !r.efficiency_defined) continue;
            if (!have || better(i, best_eff, true)) {
                best_eff = i;
                have = true;
            }
        }
        if (have) {
            sel.best_efficiency.push_back({key.first, key.second, best_eff});
        } else {
            char buf[160];
            std::snprintf(buf, sizeof buf,
                          "%s %s: gated out (best accuracy %.4f below floor %.4f)",
                          key.first.c_str(), key.second.c_str(), best_seen, floor);
            sel.diagnostics.push_back(buf);
        }
    }
    return sel;
}

std::string report_to_csv(const Report& report) {
    std::string out =
        "dataset,strategy,polarity,k,omega,seeds,accuracy,se_p,se_c,se,wta,e_pre,e_raw,"
        "efficiency,efficiency_defined,admissible,neurons,synapses,max_fan_in,mean_fan_in,"
        "config_hash,manifest_hash,error\n";
    for (const ReportRow& r : report.rows) {
        out += csv_escape(r.dataset);
        out += ',';
        out += r.strategy;
        out += ',';
        out += r.polarity;
        out += ',' + std::to_string(r.k);
        out += ',' + fmt_double(r.omega);
        out += ',' + join_seeds(r.seeds);
        out += ',' + fmt_double(r.accuracy);
        out += ',' + fmt_double(r.se_p);
        out += ',' + fmt_double(r.se_c);
        out += ',' + fmt_double(r.se);
        out += ',' + fmt_double(r.wta);
        out += ',' + fmt_double(r.e_pre);
        out += ',' + fmt_double(r.e_raw);
        out += ',' + fmt_double(r.efficiency);
        out += r.efficiency_defined ? ",1" : ",0";
        out += r.admissible ? ",1" : ",0";
        out += ',' + std::to_string(r.neurons);
        out += ',' + std::to_string(r.synapses);
        out += ',' + std::to_string(r.max_fan_in);
        out += ',' + fmt_double(r.mean_fan_in);
        out += ',' + r.config_hash;
        out += ',' + r.manifest_hash;
        out += ',' + csv_escape(r.error);
        out += '\n';
    }
    return out;
}

std::string report_to_json(const Report& report) {
    ordered_json j;
    j["schema_version"] = report.schema_version;
    j["dataset"] = report.dataset;
    j["manifest_hash"] = report.manifest_hash;
    j["baseline_accuracy"] = report.baseline_accuracy;
    j["rows"] = ordered_json::array();
    for (const ReportRow& r : report.rows) {
        ordered_json o;
        o["dataset"] = r.dataset;
        o["strategy"] = r.strategy;
        o["polarity"] = r.polarity;
        o["k"] = r.k;
        o["omega"] = r.omega;
        o["seeds"] = r.seeds;
        o["accuracy"] = r.accuracy;
        o["se_p"] = r.se_p;
        o["se_c"] = r.se_c;
        o["se"] = r.se;
        o["wta"] = r.wta;
        o["e_pre"] = r.e_pre;
        o["e_raw"] = r.e_raw;
        o["efficiency"] = r.efficiency;
        o["efficiency_defined"] = r.efficiency_defined;
        o["admissible"] = r.admissible;
        o["neurons"] = r.neurons;
        o["synapses"] = r.synapses;
        o["max_fan_in"] = r.max_fan_in;
        o["mean_fan_in"] = r.mean_fan_in;
        o["config_hash"] = r.config_hash;
        o["manifest_hash"] = r.manifest_hash;
        o["error"] = r.error;
        j["rows"].push_back(std::move(o));
    }
    return j.dump(1) + "\n";
}

Report report_from_json(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("report is not valid JSON: ") + e.what());
    }
    Report report;
    try {
        report.schema_version = j.at("schema_version").get<int>();
        if (report.schema_version != 1)
            throw std::invalid_argument("unsupported report schema_version");
        report.dataset = j.at("dataset").get<std::string>();
        report.manifest_hash = j.at("manifest_hash").get<std::string>();
        report.baseline_accuracy = j.at("baseline_accuracy").get<double>();
        for (const json& o : j.at("rows")) {
            ReportRow r;
            r.dataset = o.at("dataset").get<std::string>();
            r.strategy = o.at("strategy").get<std::string>();
            r.polarity = o.at("polarity").get<std::string>();
            r.k = o.at("k").get<int>();
            r.omega = o.at("omega").get<double>();
            r.seeds = o.at("seeds").get<std::vector<uint64_t>>();
            r.accuracy = o.at("accuracy").get<double>();
            r.se_p = o.at("se_p").get<double>();
            r.se_c = o.at("se_c").get<double>();
            r.se = o.at("se").get<double>();
            r.wta = o.at("wta").get<double>();
            r.e_pre = o.at("e_pre").get<double>();
            r.e_raw = o.at("e_raw").get<double>();
            r.efficiency = o.at("efficiency").get<double>();
            r.efficiency_defined = o.at("efficiency_defined").get<bool>();
            r.admissible = o.at("admissible").get<bool>();
            r.neurons = o.at("neurons").get<uint64_t>();
            r.synapses = o.at("synapses").get<uint64_t>();
            r.max_fan_in = o.at("max_fan_in").get<uint64_t>();
            r.mean_fan_in = o.at("mean_fan_in").get<double>();
            r.config_hash = o.at("config_hash").get<std::string>();
            r.manifest_hash = o.at("manifest_hash").get<std::string>();
            r.error = o.at("error").get<std::string>();
            report.rows.push_back(std::move(r));
        }
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("bad report field: ") + e.what());
    }
    return report;
}

namespace {

// Long-form tables for external plotting: the accuracy/energy trade-off per
// grid point, fan-in structure per configuration, and the selected points.
void emit_plotdata(const Report& report, const fs::path& dir) {
    fs::create_directories(dir);
    binio::write_file((dir / "report.csv").string(), report_to_csv(report));

    std::string tradeoff = "strategy,polarity,k,omega,accuracy,se,efficiency,admissible\n";
    std::string fanin = "strategy,polarity,k,omega,neurons,synapses,max_fan_in,mean_fan_in\n";
    for (const ReportRow& r : report.rows) {
        if (!r.error.empty()) continue;
        tradeoff += r.strategy + ',' + r.polarity + ',' + std::to_string(r.k) + ',' +
                    fmt_double(r.omega) + ',' + fmt_double(r.accuracy) + ',' + fmt_double(r.se) +
                    ',' + fmt_double(r.efficiency) + (r.admissible ? ",1\n" : ",0\n");
        fanin += r.strategy + ',' + r.polarity + ',' + std::to_string(r.k) + ',' +
                 fmt_double(r.omega) + ',' + std::to_string(r.neurons) + ',' +
                 std::to_string(r.synapses) + ',' + std::to_string(r.max_fan_in) + ',' +
                 fmt_double(r.mean_fan_in) + '\n';
    }
    binio::write_file((dir / "tradeoff.csv").string(), tradeoff);
    binio::write_file((dir / "fanin.csv").string(), fanin);

    Selection sel = select(report);
    std::string chosen = "criterion,strategy,polarity,k,omega,accuracy,se,efficiency\n";
    auto add = [&](const char* criterion, const SelectedPoint& p) {
        const ReportRow& r = report.rows[p.row];
        chosen += std::string(criterion) + ',' + r.strategy + ',' + r.polarity + ',' +
                  std::to_string(r.k) + ',' + fmt_double(r.omega) + ',' + fmt_double(r.accuracy) +
                  ',' + fmt_double(r.se) + ',' + fmt_double(r.efficiency) + '\n';
    };
    for (const SelectedPoint& p : sel.best_accuracy) add("best_accuracy", p);
    for (const SelectedPoint& p : sel.best_efficiency) add("best_efficiency", p);
    binio::write_file((dir / "selection.csv").string(), chosen);

    std::string diag;
    for (const std::string& d : sel.diagnostics) diag += d + '\n';
    binio::write_file((dir / "diagnostics.txt").string(), diag);
}

} // namespace

void emit(const Report& report, const std::string& format, const std::string& path) {
    if (format == "csv") {
        if (fs::path(path).has_parent_path()) fs::create_directories(fs::path(path).parent_path());
        binio::write_file(path, report_to_csv(report));
    } else if (format == "json") {
        if (fs::path(path).has_parent_path()) fs::create_directories(fs::path(path).parent_path());
        binio::write_file(path, report_to_json(report));
    } else if (format == "plotdata") {
        emit_plotdata(report, path);
    } else {
        throw std::invalid_argument("unknown report format '" + format +
                                    "' (expected csv, json or plotdata)");
    }
}

} // namespace eventline
