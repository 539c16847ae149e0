#include "ssnn/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ssnn/mitigation.hpp"
#include "ssnn/mnist.hpp"
#include "ssnn/netio.hpp"
#include "ssnn/rng.hpp"
#include "ssnn/systolic.hpp"
#include "ssnn/train.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace ssnn {

const char* mode_name(ExperimentMode m) {
    switch (m) {
    case ExperimentMode::Train: return "train";
    case ExperimentMode::SweepBit: return "sweep-bit";
    case ExperimentMode::SweepCount: return "sweep-count";
    case ExperimentMode::SweepSize: return "sweep-size";
    case ExperimentMode::Mitigate: return "mitigate";
    case ExperimentMode::ThresholdSweep: return "threshold-sweep";
    }
    return "?";
}

ExperimentMode mode_from_name(const std::string& name) {
    for (ExperimentMode m : {ExperimentMode::Train, ExperimentMode::SweepBit,
                             ExperimentMode::SweepCount, ExperimentMode::SweepSize,
                             ExperimentMode::Mitigate, ExperimentMode::ThresholdSweep})
        if (name == mode_name(m)) return m;
    throw std::runtime_error("experiment config: unknown mode '" + name + "'");
}

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string fmt6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

template <typename T>
std::string join(const std::vector<T>& v) {
    std::ostringstream out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out << ",";
        if constexpr (std::is_same_v<T, double>)
            out << fmt(v[i]);
        else
            out << v[i];
    }
    return out.str();
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : s) {
        if (ch == ',') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

double parse_double(const std::string& v, const std::string& key) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("");
        return d;
    } catch (...) {
        throw std::runtime_error("experiment config: bad number '" + v + "' for key " + key);
    }
}

long long parse_int(const std::string& v, const std::string& key) {
    const double d = parse_double(v, key);
    if (d != static_cast<double>(static_cast<long long>(d)))
        throw std::runtime_error("experiment config: expected integer for key " + key);
    return static_cast<long long>(d);
}

} // namespace

std::uint64_t fnv1a64(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

ExperimentConfig ExperimentConfig::parse(std::istream& in) {
    ExperimentConfig cfg;
    std::string line;
    std::size_t lineno = 0;
    bool have_mode = false;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ls(line);
        std::string key;
        if (!(ls >> key) || key[0] == '#') continue;
        std::string value;
        std::getline(ls, value);
        const std::size_t nb = value.find_first_not_of(" \t");
        value = (nb == std::string::npos) ? std::string() : value.substr(nb);
        const std::size_t ne = value.find_last_not_of(" \t\r");
        if (ne != std::string::npos) value = value.substr(0, ne + 1);
        if (value.empty())
            throw std::runtime_error("experiment config line " + std::to_string(lineno) +
                                     ": key '" + key + "' has no value");

        if (key == "mode") { cfg.mode = mode_from_name(value); have_mode = true; }
        else if (key == "network") cfg.network_path = value;
        else if (key == "checkpoint") cfg.checkpoint_path = value;
        else if (key == "train_images") cfg.train_images = value;
        else if (key == "train_labels") cfg.train_labels = value;
        else if (key == "eval_images") cfg.eval_images = value;
        else if (key == "eval_labels") cfg.eval_labels = value;
        else if (key == "train_subset") cfg.train_subset = static_cast<std::size_t>(parse_int(value, key));
        else if (key == "eval_subset") cfg.eval_subset = static_cast<std::size_t>(parse_int(value, key));
        else if (key == "out_dir") cfg.out_dir = value;
        else if (key == "grid_size") cfg.grid_size = static_cast<int>(parse_int(value, key));
        else if (key == "grid_sizes") {
            cfg.grid_sizes.clear();
            for (const auto& t : split_list(value)) cfg.grid_sizes.push_back(static_cast<int>(parse_int(t, key)));
        }
        else if (key == "trials") cfg.trials = static_cast<std::size_t>(parse_int(value, key));
        else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(parse_int(value, key));
        else if (key == "fraction_bits") cfg.fraction_bits = static_cast<int>(parse_int(value, key));
        else if (key == "long_run") cfg.long_run = parse_int(value, key) != 0;
        else if (key == "bits") {
            cfg.bits.clear();
            for (const auto& t : split_list(value)) cfg.bits.push_back(static_cast<int>(parse_int(t, key)));
        }
        else if (key == "stuck_values") {
            cfg.stuck_values.clear();
            for (const auto& t : split_list(value)) cfg.stuck_values.push_back(static_cast<int>(parse_int(t, key)));
        }
        else if (key == "faulty_pe_percent") cfg.faulty_pe_percent = parse_double(value, key);
        else if (key == "faulty_pe_count") cfg.faulty_pe_count = parse_int(value, key);
        else if (key == "counts") {
            cfg.counts.clear();
            for (const auto& t : split_list(value)) cfg.counts.push_back(parse_int(t, key));
        }
        else if (key == "epochs") cfg.epochs = static_cast<std::size_t>(parse_int(value, key));
        else if (key == "learning_rate") cfg.learning_rate = parse_double(value, key);
        else if (key == "batch_size") cfg.batch_size = static_cast<std::size_t>(parse_int(value, key));
        else if (key == "gamma") cfg.gamma = parse_double(value, key);
        else if (key == "optimize_tau") cfg.optimize_tau = parse_int(value, key) != 0;
        else if (key == "strategies") cfg.strategies = split_list(value);
        else if (key == "retrain_epochs") cfg.retrain_epochs = static_cast<std::size_t>(parse_int(value, key));
        else if (key == "repetitions") cfg.repetitions = static_cast<std::size_t>(parse_int(value, key));
        else if (key == "recovery_tolerance") cfg.recovery_tolerance = parse_double(value, key);
        else if (key == "thresholds") {
            cfg.thresholds.clear();
            for (const auto& t : split_list(value)) cfg.thresholds.push_back(parse_double(t, key));
        }
        else if (key == "fault_percents") {
            cfg.fault_percents.clear();
            for (const auto& t : split_list(value)) cfg.fault_percents.push_back(parse_double(t, key));
        }
        else
            throw std::runtime_error("experiment config line " + std::to_string(lineno) +
                                     ": unknown key '" + key + "'");
    }
    if (!have_mode) throw std::runtime_error("experiment config: missing 'mode'");
    cfg.validate();
    return cfg;
}

ExperimentConfig ExperimentConfig::parse_string(const std::string& text) {
    std::istringstream in(text);
    return parse(in);
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open experiment config '" + path + "'");
    return parse(in);
}

void ExperimentConfig::validate() const {
    if (network_path.empty()) throw std::runtime_error("experiment config: 'network' is required");
    if (trials == 0) throw std::runtime_error("experiment config: trials must be >= 1");
    if (!FixedPointFormat{fraction_bits}.valid())
        throw std::runtime_error("experiment config: fraction_bits outside [0, 31]");
    if (grid_size <= 0) throw std::runtime_error("experiment config: grid_size must be positive");
    int max_grid = grid_size;
    for (int n : grid_sizes) max_grid = std::max(max_grid, n);
    if (max_grid > 64 && !long_run)
        throw std::runtime_error("experiment config: grids larger than 64x64 need long_run 1 "
                                 "(or --long-run)");
    const bool needs_eval = true;
    if (needs_eval && (eval_images.empty() || eval_labels.empty()))
        throw std::runtime_error("experiment config: eval_images/eval_labels are required");
    switch (mode) {
    case ExperimentMode::Train:
        if (train_images.empty() || train_labels.empty())
            throw std::runtime_error("experiment config: train mode needs train_images/train_labels");
        if (checkpoint_path.empty())
            throw std::runtime_error("experiment config: train mode needs checkpoint (output path)");
        break;
    case ExperimentMode::SweepBit:
        if (checkpoint_path.empty())
            throw std::runtime_error("experiment config: sweep needs a pretrained checkpoint");
        if (bits.empty() || stuck_values.empty())
            throw std::runtime_error("experiment config: sweep-bit needs bits and stuck_values");
        if (faulty_pe_percent < 0.0 && faulty_pe_count < 0)
            throw std::runtime_error("experiment config: sweep-bit needs faulty_pe_percent or faulty_pe_count");
        break;
    case ExperimentMode::SweepCount:
        if (checkpoint_path.empty())
            throw std::runtime_error("experiment config: sweep needs a pretrained checkpoint");
        if (counts.empty())
            throw std::runtime_error("experiment config: sweep-count needs counts");
        break;
    case ExperimentMode::SweepSize:
        if (checkpoint_path.empty())
            throw std::runtime_error("experiment config: sweep needs a pretrained checkpoint");
        if (grid_sizes.empty())
            throw std::runtime_error("experiment config: sweep-size needs grid_sizes");
        if (faulty_pe_count < 0)
            throw std::runtime_error("experiment config: sweep-size needs faulty_pe_count");
        break;
    case ExperimentMode::Mitigate:
        if (checkpoint_path.empty())
            throw std::runtime_error("experiment config: mitigate needs a pretrained checkpoint");
        if (train_images.empty() || train_labels.empty())
            throw std::runtime_error("experiment config: mitigate needs train_images/train_labels");
        if (strategies.empty() || fault_percents.empty())
            throw std::runtime_error("experiment config: mitigate needs strategies and fault_percents");
        for (const std::string& s : strategies) strategy_from_name(s);
        break;
    case ExperimentMode::ThresholdSweep:
        if (checkpoint_path.empty())
            throw std::runtime_error("experiment config: threshold-sweep needs a pretrained checkpoint");
        if (train_images.empty() || train_labels.empty())
            throw std::runtime_error("experiment config: threshold-sweep needs train data");
        if (thresholds.empty() || fault_percents.empty())
            throw std::runtime_error("experiment config: threshold-sweep needs thresholds and fault_percents");
        break;
    }
}

std::string ExperimentConfig::canonical() const {
    std::ostringstream out;
    out << "mode " << mode_name(mode) << "\n";
    out << "network " << network_path << "\n";
    out << "checkpoint " << checkpoint_path << "\n";
    out << "train_images " << train_images << "\n";
    out << "train_labels " << train_labels << "\n";
    out << "eval_images " << eval_images << "\n";
    out << "eval_labels " << eval_labels << "\n";
    out << "train_subset " << train_subset << "\n";
    out << "eval_subset " << eval_subset << "\n";
    out << "grid_size " << grid_size << "\n";
    out << "grid_sizes " << join(grid_sizes) << "\n";
    out << "trials " << trials << "\n";
    out << "seed " << seed << "\n";
    out << "fraction_bits " << fraction_bits << "\n";
    out << "long_run " << (long_run ? 1 : 0) << "\n";
    out << "bits " << join(bits) << "\n";
    out << "stuck_values " << join(stuck_values) << "\n";
    out << "faulty_pe_percent " << fmt(faulty_pe_percent) << "\n";
    out << "faulty_pe_count " << faulty_pe_count << "\n";
    out << "counts " << join(counts) << "\n";
    out << "epochs " << epochs << "\n";
    out << "learning_rate " << fmt(learning_rate) << "\n";
    out << "batch_size " << batch_size << "\n";
    out << "gamma " << fmt(gamma) << "\n";
    out << "optimize_tau " << (optimize_tau ? 1 : 0) << "\n";
    out << "strategies " << join(strategies) << "\n";
    out << "retrain_epochs " << retrain_epochs << "\n";
    out << "repetitions " << repetitions << "\n";
    out << "recovery_tolerance " << fmt(recovery_tolerance) << "\n";
    out << "thresholds " << join(thresholds) << "\n";
    out << "fault_percents " << join(fault_percents) << "\n";
    return out.str();
}

std::string ExperimentConfig::hash() const {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(canonical())));
    return buf;
}

namespace {

struct Artifacts {
    const ExperimentConfig& cfg;
    ExperimentOutcome& outcome;

    std::ofstream open_csv(const std::string& name, const std::string& schema) {
        fs::create_directories(cfg.out_dir);
        const std::string path = (fs::path(cfg.out_dir) / name).string();
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write '" + path + "'");
        out << "# schema: " << schema << "\n";
        outcome.csv_files.push_back(path);
        return out;
    }

    void write_json(const std::string& name, const ordered_json& j) {
        fs::create_directories(cfg.out_dir);
        const std::string path = (fs::path(cfg.out_dir) / name).string();
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write '" + path + "'");
        out << j.dump(2) << "\n";
        outcome.json_files.push_back(path);
    }
};

struct LoadedBundle {
    NetworkSpec spec;
    NetworkParams params;
    Dataset eval_set;
    Dataset train_set; // empty unless needed
};

LoadedBundle load_bundle(const ExperimentConfig& cfg, bool need_train, bool need_checkpoint) {
    LoadedBundle b;
    b.spec = load_network_spec(cfg.network_path);
    if (need_checkpoint)
        b.params = load_params(b.spec, cfg.checkpoint_path);
    else
        b.params = init_params(b.spec, cfg.seed);
    b.eval_set = load_mnist(cfg.eval_images, cfg.eval_labels, cfg.eval_subset);
    if (need_train) b.train_set = load_mnist(cfg.train_images, cfg.train_labels, cfg.train_subset);
    return b;
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size()));
}

// One sweep point: evaluates `trials` distinct fault maps and records them.
struct PointResult {
    std::vector<double> accuracies;
    std::vector<std::string> fault_files;
    std::vector<std::uint64_t> seeds;
    std::vector<std::string> errors;
    double wall_seconds = 0.0;
};

PointResult run_sweep_point(const ExperimentConfig& cfg, const LoadedBundle& b, int grid_size,
                            std::size_t faulty_count, const BitPolicy& policy,
                            const std::string& point_tag) {
    PointResult res;
    const auto t0 = std::chrono::steady_clock::now();
    fs::create_directories(fs::path(cfg.out_dir) / "faults");
    for (std::size_t trial = 0; trial < cfg.trials; ++trial) {
        const std::uint64_t trial_seed = mix_seed(cfg.seed, trial);
        res.seeds.push_back(trial_seed);
        try {
            FaultMap map = generate_fault_map(grid_size, faulty_count, policy, trial_seed);
            const std::string fpath =
                (fs::path(cfg.out_dir) / "faults" / (point_tag + "_t" + std::to_string(trial) + ".txt"))
                    .string();
            save_fault_map(map, fpath);
            res.fault_files.push_back(fpath);
            PEGrid grid(grid_size, std::move(map), cfg.format());
            const InferenceResult r = run_inference(b.spec, b.params, grid, b.eval_set);
            res.accuracies.push_back(r.accuracy);
        } catch (const std::exception& e) {
            res.errors.push_back("trial " + std::to_string(trial) + ": " + e.what());
        }
    }
    res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

ordered_json point_record(const ExperimentConfig& cfg, const std::string& sweep_value,
                          const PointResult& res, const ordered_json& extra = {}) {
    ordered_json j;
    j["config_hash"] = cfg.hash();
    j["mode"] = mode_name(cfg.mode);
    j["sweep_value"] = sweep_value;
    j["trial_accuracies"] = res.accuracies;
    j["mean_acc"] = mean_of(res.accuracies);
    j["std_acc"] = std_of(res.accuracies);
    j["n_trials"] = res.accuracies.size();
    j["seeds"] = res.seeds;
    j["fault_map_files"] = res.fault_files;
    j["wall_seconds"] = res.wall_seconds;
    if (!res.errors.empty()) j["errors"] = res.errors;
    if (!extra.empty()) for (auto& [k, v] : extra.items()) j[k] = v;
    return j;
}

void emit_sweep_row(std::ofstream& csv, const std::string& sweep_value, const PointResult& res) {
    csv << sweep_value << "," << fmt6(mean_of(res.accuracies)) << "," << fmt6(std_of(res.accuracies))
        << "," << res.accuracies.size() << "\n";
}

ExperimentOutcome run_train(const ExperimentConfig& cfg) {
    ExperimentOutcome outcome;
    Artifacts art{cfg, outcome};
    LoadedBundle b = load_bundle(cfg, /*need_train=*/true, /*need_checkpoint=*/false);

    TrainConfig tc;
    tc.learning_rate = cfg.learning_rate;
    tc.epochs = cfg.epochs;
    tc.batch_size = cfg.batch_size;
    tc.gamma = cfg.gamma;
    tc.optimize_tau = cfg.optimize_tau;
    tc.optimize_threshold = false; // thresholds move in retraining only
    tc.rng_seed = cfg.seed;

    const std::size_t n_spk = b.spec.spiking_layers().size();
    std::string schema = "epoch,loss,accuracy";
    for (std::size_t i = 0; i < n_spk; ++i) schema += ",v_th" + std::to_string(i);
    std::ofstream curve = art.open_csv("train_curve.csv", schema);

    const auto t0 = std::chrono::steady_clock::now();
    fit(b.spec, b.params, b.train_set, &b.eval_set, tc, [&](const EpochStats& st) {
        curve << st.epoch << "," << fmt6(st.loss) << "," << fmt6(st.accuracy);
        for (double v : st.v_thresholds) curve << "," << fmt6(v);
        curve << "\n";
        curve.flush();
    });
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    save_params(b.spec, b.params, cfg.checkpoint_path);
    const double final_acc = evaluate_accuracy(b.spec, b.params, b.eval_set);

    ordered_json j;
    j["config_hash"] = cfg.hash();
    j["mode"] = mode_name(cfg.mode);
    j["checkpoint"] = cfg.checkpoint_path;
    j["final_accuracy"] = final_acc;
    j["epochs"] = cfg.epochs;
    j["wall_seconds"] = wall;
    art.write_json("run_train.json", j);
    return outcome;
}

ExperimentOutcome run_sweep(const ExperimentConfig& cfg) {
    ExperimentOutcome outcome;
    Artifacts art{cfg, outcome};
    LoadedBundle b = load_bundle(cfg, /*need_train=*/false, /*need_checkpoint=*/true);

    std::ofstream csv = art.open_csv(std::string(mode_name(cfg.mode)) + ".csv",
                                     "sweep_value,mean_acc,std_acc,n_trials");
    std::size_t record_idx = 0;
    auto handle_point = [&](const std::string& sweep_value, const PointResult& res,
                            const ordered_json& extra) {
        emit_sweep_row(csv, sweep_value, res);
        art.write_json("run_" + std::to_string(record_idx++) + ".json",
                       point_record(cfg, sweep_value, res, extra));
        for (const std::string& e : res.errors) outcome.failures.push_back(sweep_value + ": " + e);
        if (!res.errors.empty()) outcome.all_ok = false;
    };

    if (cfg.mode == ExperimentMode::SweepBit) {
        const std::size_t count =
            cfg.faulty_pe_count >= 0
                ? static_cast<std::size_t>(cfg.faulty_pe_count)
                : percent_to_count(cfg.grid_size, cfg.faulty_pe_percent);
        for (int bit : cfg.bits) {
            for (int sv : cfg.stuck_values) {
                const std::string tag = "bit" + std::to_string(bit) + "_sa" + std::to_string(sv);
                PointResult res = run_sweep_point(cfg, b, cfg.grid_size, count,
                                                  BitPolicy::fixed(bit, sv), tag);
                ordered_json extra;
                extra["bit"] = bit;
                extra["stuck_value"] = sv;
                extra["grid_size"] = cfg.grid_size;
                extra["faulty_pe_count"] = count;
                handle_point(tag, res, extra);
            }
        }
    } else if (cfg.mode == ExperimentMode::SweepCount) {
        for (long long count : cfg.counts) {
            const std::string tag = "count" + std::to_string(count);
            PointResult res =
                run_sweep_point(cfg, b, cfg.grid_size, static_cast<std::size_t>(count),
                                BitPolicy::fixed(kWorstCaseBit, kWorstCaseStuckValue), tag);
            ordered_json extra;
            extra["grid_size"] = cfg.grid_size;
            extra["faulty_pe_count"] = count;
            handle_point(tag, res, extra);
        }
    } else { // SweepSize
        for (int n : cfg.grid_sizes) {
            const std::string tag = "grid" + std::to_string(n);
            PointResult res =
                run_sweep_point(cfg, b, n, static_cast<std::size_t>(cfg.faulty_pe_count),
                                BitPolicy::fixed(kWorstCaseBit, kWorstCaseStuckValue), tag);
            ordered_json extra;
            extra["grid_size"] = n;
            extra["faulty_pe_count"] = cfg.faulty_pe_count;
            handle_point(tag, res, extra);
        }
    }
    return outcome;
}

ExperimentOutcome run_mitigate(const ExperimentConfig& cfg) {
    ExperimentOutcome outcome;
    Artifacts art{cfg, outcome};
    LoadedBundle b = load_bundle(cfg, /*need_train=*/true, /*need_checkpoint=*/true);
    fs::create_directories(fs::path(cfg.out_dir) / "faults");

    // fault-free baseline on the same quantized grid model
    FaultMap empty_map(cfg.grid_size, {}, 0);
    PEGrid clean_grid(cfg.grid_size, empty_map, cfg.format());
    const double baseline = run_inference(b.spec, b.params, clean_grid, b.eval_set).accuracy;

    std::ofstream summary = art.open_csv(
        "mitigation_summary.csv",
        "strategy,fault_percent,repetition,final_acc,epochs_to_recovery,baseline");
    std::ofstream curves =
        art.open_csv("mitigation_epochs.csv", "strategy,fault_percent,repetition,epoch,accuracy");
    std::ofstream vths = art.open_csv("mitigation_thresholds.csv",
                                      "strategy,fault_percent,repetition,layer_index,v_threshold");

    std::size_t record_idx = 0;
    for (double percent : cfg.fault_percents) {
        const std::size_t count = percent_to_count(cfg.grid_size, percent);
        for (std::size_t rep = 0; rep < cfg.repetitions; ++rep) {
            // one fault map per repetition, shared by every strategy (paired)
            const std::uint64_t map_seed = mix_seed(cfg.seed, 700000ULL + rep);
            FaultMap map = generate_fault_map(
                cfg.grid_size, count, BitPolicy::fixed(kWorstCaseBit, kWorstCaseStuckValue),
                map_seed);
            const std::string fpath =
                (fs::path(cfg.out_dir) / "faults" /
                 ("mitigate_p" + std::to_string(static_cast<int>(percent)) + "_r" +
                  std::to_string(rep) + ".txt"))
                    .string();
            save_fault_map(map, fpath);

            for (const std::string& sname : cfg.strategies) {
                const Strategy strat = strategy_from_name(sname);
                try {
                    TrainConfig tc;
                    tc.learning_rate = cfg.learning_rate;
                    tc.batch_size = cfg.batch_size;
                    tc.gamma = cfg.gamma;
                    tc.optimize_tau = cfg.optimize_tau;
                    tc.rng_seed = mix_seed(cfg.seed, 900000ULL + rep); // paired across strategies

                    const auto t0 = std::chrono::steady_clock::now();
                    MitigationOutcome mo;
                    if (strat == Strategy::FaP)
                        mo = fap(b.spec, b.params, map, cfg.format(), b.eval_set);
                    else if (strat == Strategy::FaPIT)
                        mo = fapit(b.spec, b.params, map, cfg.format(), b.train_set, b.eval_set,
                                   cfg.retrain_epochs, tc);
                    else
                        mo = falvolt(b.spec, b.params, map, cfg.format(), b.train_set, b.eval_set,
                                     cfg.retrain_epochs, tc);
                    const double wall =
                        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

                    const auto rec = epochs_to_recovery(mo.accuracy_history, baseline,
                                                        cfg.recovery_tolerance);
                    const double final_acc = mo.accuracy_history.back();

                    summary << sname << "," << fmt6(percent) << "," << rep << ","
                            << fmt6(final_acc) << ","
                            << (rec ? std::to_string(*rec) : std::string("none")) << ","
                            << fmt6(baseline) << "\n";
                    for (std::size_t e = 0; e < mo.accuracy_history.size(); ++e)
                        curves << sname << "," << fmt6(percent) << "," << rep << "," << e << ","
                               << fmt6(mo.accuracy_history[e]) << "\n";
                    for (std::size_t li = 0; li < mo.final_v_thresholds.size(); ++li)
                        vths << sname << "," << fmt6(percent) << "," << rep << "," << li << ","
                             << fmt6(mo.final_v_thresholds[li]) << "\n";

                    ordered_json j;
                    j["config_hash"] = cfg.hash();
                    j["mode"] = mode_name(cfg.mode);
                    j["strategy"] = sname;
                    j["fault_percent"] = percent;
                    j["repetition"] = rep;
                    j["fault_map_file"] = fpath;
                    j["map_seed"] = map_seed;
                    j["train_seed"] = tc.rng_seed;
                    j["baseline"] = baseline;
                    j["accuracy_history"] = mo.accuracy_history;
                    j["loss_history"] = mo.loss_history;
                    j["final_v_thresholds"] = mo.final_v_thresholds;
                    j["max_pruned_abs_history"] = mo.max_pruned_abs_history;
                    j["epochs_to_recovery"] = rec ? ordered_json(*rec) : ordered_json(nullptr);
                    j["aborted"] = mo.aborted;
                    if (mo.aborted) j["abort_reason"] = mo.abort_reason;
                    j["wall_seconds"] = wall;
                    art.write_json("run_" + std::to_string(record_idx++) + ".json", j);
                    if (mo.aborted) {
                        outcome.all_ok = false;
                        outcome.failures.push_back(sname + " p=" + fmt6(percent) + " rep=" +
                                                   std::to_string(rep) + ": " + mo.abort_reason);
                    }
                } catch (const std::exception& e) {
                    outcome.all_ok = false;
                    outcome.failures.push_back(sname + " p=" + fmt6(percent) + " rep=" +
                                               std::to_string(rep) + ": " + e.what());
                }
            }
        }
    }
    return outcome;
}

ExperimentOutcome run_threshold_sweep(const ExperimentConfig& cfg) {
    ExperimentOutcome outcome;
    Artifacts art{cfg, outcome};
    LoadedBundle b = load_bundle(cfg, /*need_train=*/true, /*need_checkpoint=*/true);
    fs::create_directories(fs::path(cfg.out_dir) / "faults");

    std::ofstream csv = art.open_csv("threshold-sweep.csv", "sweep_value,mean_acc,std_acc,n_trials");
    std::size_t record_idx = 0;

    for (double percent : cfg.fault_percents) {
        const std::size_t count = percent_to_count(cfg.grid_size, percent);
        for (double vth : cfg.thresholds) {
            PointResult res;
            const auto t0 = std::chrono::steady_clock::now();
            for (std::size_t rep = 0; rep < cfg.repetitions; ++rep) {
                const std::uint64_t map_seed = mix_seed(cfg.seed, 700000ULL + rep);
                res.seeds.push_back(map_seed);
                try {
                    FaultMap map = generate_fault_map(
                        cfg.grid_size, count,
                        BitPolicy::fixed(kWorstCaseBit, kWorstCaseStuckValue), map_seed);
                    // retrain with the threshold pinned at the swept value
                    MitigationPlan plan;
                    plan.strategy = Strategy::FaPIT;
                    plan.retrain_epochs = cfg.retrain_epochs;
                    plan.initial_v_threshold = vth;
                    plan.train.learning_rate = cfg.learning_rate;
                    plan.train.batch_size = cfg.batch_size;
                    plan.train.gamma = cfg.gamma;
                    plan.train.optimize_tau = cfg.optimize_tau;
                    plan.train.optimize_threshold = false;
                    plan.train.rng_seed = mix_seed(cfg.seed, 900000ULL + rep);
                    MitigationOutcome mo = run_mitigation(b.spec, b.params, map, cfg.format(),
                                                          b.train_set, b.eval_set, plan);
                    res.accuracies.push_back(mo.accuracy_history.back());
                } catch (const std::exception& e) {
                    res.errors.push_back("rep " + std::to_string(rep) + ": " + e.what());
                }
            }
            res.wall_seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            const std::string tag = "vth" + fmt6(vth) + "_p" + fmt6(percent);
            emit_sweep_row(csv, tag, res);
            ordered_json extra;
            extra["v_threshold"] = vth;
            extra["fault_percent"] = percent;
            art.write_json("run_" + std::to_string(record_idx++) + ".json",
                           point_record(cfg, tag, res, extra));
            for (const std::string& e : res.errors) outcome.failures.push_back(tag + ": " + e);
            if (!res.errors.empty()) outcome.all_ok = false;
        }
    }
    return outcome;
}

} // namespace

ExperimentOutcome run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    switch (cfg.mode) {
    case ExperimentMode::Train: return run_train(cfg);
    case ExperimentMode::SweepBit:
    case ExperimentMode::SweepCount:
    case ExperimentMode::SweepSize: return run_sweep(cfg);
    case ExperimentMode::Mitigate: return run_mitigate(cfg);
    case ExperimentMode::ThresholdSweep: return run_threshold_sweep(cfg);
    }
    throw std::logic_error("unreachable");
}

std::vector<std::string> emit_report(const std::string& records_dir, const std::string& out_dir) {
    std::vector<ordered_json> records;
    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(records_dir)) {
        if (!entry.is_regular_file()) continue;
        const std::string name = entry.path().filename().string();
        if (name.rfind("run_", 0) != 0 || entry.path().extension() != ".json") continue;
        names.push_back(entry.path().string());
    }
    std::sort(names.begin(), names.end());
    for (const std::string& p : names) {
        std::ifstream in(p);
        records.push_back(ordered_json::parse(in));
    }
    if (records.empty()) throw std::runtime_error("emit_report: no run records in " + records_dir);

    fs::create_directories(out_dir);
    std::vector<std::string> written;
    auto open = [&](const std::string& name, const std::string& schema) {
        const std::string path = (fs::path(out_dir) / name).string();
        std::ofstream out(path, std::ios::binary);
        out << "# schema: " << schema << "\n";
        written.push_back(path);
        return out;
    };

    bool any_bit = false, any_count = false, any_size = false, any_mit = false, any_vth = false;
    for (const auto& r : records) {
        const std::string m = r["mode"];
        any_bit |= m == "sweep-bit";
        any_count |= m == "sweep-count";
        any_size |= m == "sweep-size";
        any_mit |= m == "mitigate";
        any_vth |= m == "threshold-sweep";
    }

    if (any_bit) {
        auto out = open("report_bit_sweep.csv", "bit,stuck_value,mean_acc,std_acc,n_trials");
        for (const auto& r : records)
            if (r["mode"] == "sweep-bit")
                out << r["bit"] << "," << r["stuck_value"] << "," << fmt6(r["mean_acc"]) << ","
                    << fmt6(r["std_acc"]) << "," << r["n_trials"] << "\n";
    }
    if (any_count) {
        auto out = open("report_count_sweep.csv", "faulty_pe_count,mean_acc,std_acc,n_trials");
        for (const auto& r : records)
            if (r["mode"] == "sweep-count")
                out << r["faulty_pe_count"] << "," << fmt6(r["mean_acc"]) << ","
                    << fmt6(r["std_acc"]) << "," << r["n_trials"] << "\n";
    }
    if (any_size) {
        auto out = open("report_size_sweep.csv", "grid_size,mean_acc,std_acc,n_trials");
        for (const auto& r : records)
            if (r["mode"] == "sweep-size")
                out << r["grid_size"] << "," << fmt6(r["mean_acc"]) << "," << fmt6(r["std_acc"])
                    << "," << r["n_trials"] << "\n";
    }
    if (any_mit) {
        auto fin = open("report_mitigation_final.csv",
                        "strategy,fault_percent,repetition,final_acc,epochs_to_recovery,baseline");
        auto cur = open("report_mitigation_epochs.csv",
                        "strategy,fault_percent,repetition,epoch,accuracy");
        auto vth = open("report_layer_thresholds.csv",
                        "strategy,fault_percent,repetition,layer_index,v_threshold");
        for (const auto& r : records) {
            if (r["mode"] != "mitigate") continue;
            const std::string s = r["strategy"];
            const double p = r["fault_percent"];
            const std::size_t rep = r["repetition"];
            const auto& hist = r["accuracy_history"];
            fin << s << "," << fmt6(p) << "," << rep << ","
                << fmt6(hist.back().get<double>()) << ","
                << (r["epochs_to_recovery"].is_null()
                        ? std::string("none")
                        : std::to_string(r["epochs_to_recovery"].get<std::size_t>()))
                << "," << fmt6(r["baseline"]) << "\n";
            for (std::size_t e = 0; e < hist.size(); ++e)
                cur << s << "," << fmt6(p) << "," << rep << "," << e << ","
                    << fmt6(hist[e].get<double>()) << "\n";
            const auto& vt = r["final_v_thresholds"];
            for (std::size_t li = 0; li < vt.size(); ++li)
                vth << s << "," << fmt6(p) << "," << rep << "," << li << ","
                    << fmt6(vt[li].get<double>()) << "\n";
        }
    }
    if (any_vth) {
        auto out = open("report_threshold_sweep.csv",
                        "v_threshold,fault_percent,mean_acc,std_acc,n_trials");
        for (const auto& r : records)
            if (r["mode"] == "threshold-sweep")
                out << fmt6(r["v_threshold"]) << "," << fmt6(r["fault_percent"]) << ","
                    << fmt6(r["mean_acc"]) << "," << fmt6(r["std_acc"]) << "," << r["n_trials"]
                    << "\n";
    }
    return written;
}

} // namespace ssnn
