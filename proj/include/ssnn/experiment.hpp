#ifndef SSNN_EXPERIMENT_HPP
#define SSNN_EXPERIMENT_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ssnn/fixedpoint.hpp"

namespace ssnn {

enum class ExperimentMode { Train, SweepBit, SweepCount, SweepSize, Mitigate, ThresholdSweep };

const char* mode_name(ExperimentMode m);
ExperimentMode mode_from_name(const std::string& name);

// Declarative experiment description, parsed from a line-oriented key/value
// file. Unknown keys fail the parse.
struct ExperimentConfig {
    ExperimentMode mode = ExperimentMode::SweepBit;

    std::string network_path;
    std::string checkpoint_path;
    std::string train_images, train_labels;
    std::string eval_images, eval_labels;
    std::size_t train_subset = 2000;
    std::size_t eval_subset = 256;
    std::string out_dir = "results";

    int grid_size = 64;
    std::vector<int> grid_sizes;     // sweep-size points
    std::size_t trials = 8;          // fault-map iterations per sweep point
    std::uint64_t seed = 1;
    int fraction_bits = 16;
    bool long_run = false;

    // fault policy
    std::vector<int> bits{0, 7, 15, 23, 31}; // sweep-bit points
    std::vector<int> stuck_values{0, 1};
    double faulty_pe_percent = -1.0;         // exactly one of percent/count
    long long faulty_pe_count = -1;
    std::vector<long long> counts;           // sweep-count points

    // training / retraining
    std::size_t epochs = 20;
    double learning_rate = 0.5;
    std::size_t batch_size = 32;
    double gamma = 1.0;
    bool optimize_tau = true;

    // mitigation
    std::vector<std::string> strategies{"fap", "fapit", "falvolt"};
    std::size_t retrain_epochs = 40;
    std::size_t repetitions = 3;
    double recovery_tolerance = 0.01; // accuracy points (fraction)
    std::vector<double> thresholds;   // threshold-sweep values
    std::vector<double> fault_percents{30.0};

    static ExperimentConfig parse(std::istream& in);
    static ExperimentConfig parse_string(const std::string& text);
    static ExperimentConfig load(const std::string& path);

    void validate() const;
    std::string canonical() const; // normalized text used for hashing
    std::string hash() const;      // FNV-1a 64 over canonical(), hex

    FixedPointFormat format() const { return FixedPointFormat{fraction_bits}; }
};

struct ExperimentOutcome {
    bool all_ok = true;
    std::vector<std::string> csv_files;
    std::vector<std::string> json_files;
    std::vector<std::string> failures;
};

// Executes the configured experiment, writing CSV/JSON artifacts under
// cfg.out_dir. Trial failures are recorded and skipped; all_ok reflects them.
ExperimentOutcome run_experiment(const ExperimentConfig& cfg);

// Re-reads run records (JSON) from a results directory and emits one tidy
// CSV per figure-analog view.
std::vector<std::string> emit_report(const std::string& records_dir, const std::string& out_dir);

std::uint64_t fnv1a64(const std::string& text);

} // namespace ssnn

#endif
