#include "ssnn/mitigation.hpp"

#include <stdexcept>

namespace ssnn {

const char* strategy_name(Strategy s) {
    switch (s) {
    case Strategy::FaP: return "fap";
    case Strategy::FaPIT: return "fapit";
    case Strategy::FalVolt: return "falvolt";
    }
    return "?";
}

Strategy strategy_from_name(const std::string& name) {
    if (name == "fap") return Strategy::FaP;
    if (name == "fapit") return Strategy::FaPIT;
    if (name == "falvolt") return Strategy::FalVolt;
    throw std::invalid_argument("unknown mitigation strategy '" + name + "'");
}

void MitigationPlan::validate() const {
    train.validate();
    switch (strategy) {
    case Strategy::FaP:
        if (retrain_epochs != 0)
            throw std::invalid_argument("plan: FaP requires retrain_epochs == 0");
        break;
    case Strategy::FaPIT:
        if (train.optimize_threshold)
            throw std::invalid_argument("plan: FaPIT requires optimize_threshold == false");
        break;
    case Strategy::FalVolt:
        if (retrain_epochs > 0 && !train.optimize_threshold)
            throw std::invalid_argument("plan: FalVolt requires optimize_threshold == true");
        break;
    }
    if (!(initial_v_threshold > 0.0))
        throw std::invalid_argument("plan: initial threshold must be positive");
}

MitigationOutcome run_mitigation(const NetworkSpec& spec, const NetworkParams& pretrained,
                                 const FaultMap& fault_map, const FixedPointFormat& format,
                                 const Dataset& train_set, const Dataset& eval_set,
                                 const MitigationPlan& plan) {
    spec.validate();
    plan.validate();
    eval_set.check();
    if (eval_set.empty()) throw std::invalid_argument("mitigation: empty eval set");

    PEGrid grid(fault_map.grid_size(), fault_map, format);
    grid.bypass_all_faulty();

    MitigationOutcome out;
    out.pruned = find_pruned_indices(spec, fault_map, grid.mapping());
    out.params = pretrained;
    zero_pruned_weights(out.params, out.pruned);

    auto grid_accuracy = [&](const NetworkParams& p) {
        return run_inference(spec, p, grid, eval_set).accuracy;
    };

    if (plan.strategy == Strategy::FaP || plan.retrain_epochs == 0) {
        // pruning only: no parameter updates, single evaluation
        out.accuracy_history.push_back(grid_accuracy(out.params));
        out.max_pruned_abs_history.push_back(max_pruned_abs(out.params, out.pruned));
        for (std::size_t li : spec.spiking_layers())
            out.final_v_thresholds.push_back(out.params.v_threshold[li]);
        return out;
    }

    // retraining restarts every layer threshold from the initial value
    for (std::size_t li : spec.spiking_layers())
        out.params.v_threshold[li] = plan.initial_v_threshold;

    TrainConfig cfg = plan.train;
    cfg.epochs = plan.retrain_epochs;

    NetworkParams last_good = out.params;
    try {
        fit(
            spec, out.params, train_set, nullptr, cfg,
            [&](const EpochStats& st) {
                out.accuracy_history.push_back(st.accuracy);
                out.loss_history.push_back(st.loss);
            },
            [&](NetworkParams& p) {
                zero_pruned_weights(p, out.pruned);
                out.max_pruned_abs_history.push_back(max_pruned_abs(p, out.pruned));
                last_good = p;
            },
            grid_accuracy);
    } catch (const std::domain_error& e) {
        out.aborted = true;
        out.abort_reason = e.what();
        out.params = last_good;
    }

    for (std::size_t li : spec.spiking_layers())
        out.final_v_thresholds.push_back(out.params.v_threshold[li]);
    return out;
}

MitigationOutcome fap(const NetworkSpec& spec, const NetworkParams& pretrained,
                      const FaultMap& fault_map, const FixedPointFormat& format,
                      const Dataset& eval_set) {
    MitigationPlan plan;
    plan.strategy = Strategy::FaP;
    plan.retrain_epochs = 0;
    Dataset empty_train;
    return run_mitigation(spec, pretrained, fault_map, format, empty_train, eval_set, plan);
}

MitigationOutcome fapit(const NetworkSpec& spec, const NetworkParams& pretrained,
                        const FaultMap& fault_map, const FixedPointFormat& format,
                        const Dataset& train_set, const Dataset& eval_set,
                        std::size_t retrain_epochs, const TrainConfig& config) {
    MitigationPlan plan;
    plan.strategy = Strategy::FaPIT;
    plan.retrain_epochs = retrain_epochs;
    plan.train = config;
    plan.train.optimize_threshold = false;
    return run_mitigation(spec, pretrained, fault_map, format, train_set, eval_set, plan);
}

MitigationOutcome falvolt(const NetworkSpec& spec, const NetworkParams& pretrained,
                          const FaultMap& fault_map, const FixedPointFormat& format,
                          const Dataset& train_set, const Dataset& eval_set,
                          std::size_t retrain_epochs, const TrainConfig& config) {
    MitigationPlan plan;
    plan.strategy = Strategy::FalVolt;
    plan.retrain_epochs = retrain_epochs;
    plan.train = config;
    plan.train.optimize_threshold = true;
    return run_mitigation(spec, pretrained, fault_map, format, train_set, eval_set, plan);
}

std::optional<std::size_t> epochs_to_recovery(const std::vector<double>& history, double baseline,
                                              double tolerance_points) {
    if (history.empty()) throw std::invalid_argument("epochs_to_recovery: empty history");
    for (std::size_t i = 0; i < history.size(); ++i)
        if (history[i] >= baseline - tolerance_points) return i;
    return std::nullopt;
}

} // namespace ssnn
