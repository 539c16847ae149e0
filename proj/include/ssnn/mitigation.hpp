#ifndef SSNN_MITIGATION_HPP
#define SSNN_MITIGATION_HPP

#include <optional>
#include <string>

#include "ssnn/systolic.hpp"
#include "ssnn/train.hpp"

namespace ssnn {

enum class Strategy { FaP, FaPIT, FalVolt };

const char* strategy_name(Strategy s);
Strategy strategy_from_name(const std::string& name);

struct MitigationPlan {
    Strategy strategy = Strategy::FalVolt;
    std::size_t retrain_epochs = 0;
    TrainConfig train;
    double initial_v_threshold = 1.0; // retraining restarts from this value

    void validate() const;
};

struct MitigationOutcome {
    NetworkParams params;
    PrunedIndices pruned;
    std::vector<double> accuracy_history;       // bypassed-grid accuracy per epoch
    std::vector<double> loss_history;           // training loss per epoch
    std::vector<double> max_pruned_abs_history; // after each epoch's re-zeroing
    std::vector<double> final_v_thresholds;     // per spiking layer
    bool aborted = false;
    std::string abort_reason;
};

// Shared driver for all three strategies: prune, optionally retrain with the
// pruned weights re-zeroed at the end of every epoch, evaluate per epoch on
// the bypassed grid.
MitigationOutcome run_mitigation(const NetworkSpec& spec, const NetworkParams& pretrained,
                                 const FaultMap& fault_map, const FixedPointFormat& format,
                                 const Dataset& train_set, const Dataset& eval_set,
                                 const MitigationPlan& plan);

// Fault-aware pruning: zero the mapped weights, no updates.
MitigationOutcome fap(const NetworkSpec& spec, const NetworkParams& pretrained,
                      const FaultMap& fault_map, const FixedPointFormat& format,
                      const Dataset& eval_set);

// Pruning plus retraining with the threshold voltage fixed at its
// initial-training value.
MitigationOutcome fapit(const NetworkSpec& spec, const NetworkParams& pretrained,
                        const FaultMap& fault_map, const FixedPointFormat& format,
                        const Dataset& train_set, const Dataset& eval_set,
                        std::size_t retrain_epochs, const TrainConfig& config);

// Pruning plus retraining with per-layer threshold-voltage optimization.
MitigationOutcome falvolt(const NetworkSpec& spec, const NetworkParams& pretrained,
                          const FaultMap& fault_map, const FixedPointFormat& format,
                          const Dataset& train_set, const Dataset& eval_set,
                          std::size_t retrain_epochs, const TrainConfig& config);

// Smallest epoch index whose accuracy is within tolerance_points of baseline.
std::optional<std::size_t> epochs_to_recovery(const std::vector<double>& history, double baseline,
                                              double tolerance_points);

} // namespace ssnn

#endif
