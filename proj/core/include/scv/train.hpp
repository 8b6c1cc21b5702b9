#ifndef SCV_TRAIN_HPP
#define SCV_TRAIN_HPP

#include "scv/checkpoint.hpp"
#include "scv/data.hpp"
#include "scv/hmm.hpp"
#include "scv/nnet.hpp"

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace scv {

enum class Regularizer { none, base, npair };

struct TrainConfig {
    int iterations = 50000;
    double lr_initial = 0.01;
    double lr_reduced = 0.001;
    int lr_drop_iteration = 10000;  // 1-based iteration where the drop lands
    // Loss = ce_weight * CE + (1 - ce_weight) * regularizer. With
    // Regularizer::none the loss is the unweighted CE.
    double ce_weight = 0.5;
    HmmVariant hmm_variant = HmmVariant::Dynamic;
    FeatureMode feature_mode = FeatureMode::hard;
    Regularizer regularizer = Regularizer::npair;
    int hidden_units = 256;
    int l_min = 1;
    bool prune = false;
    std::uint64_t seed = 0;
    // Incremental count updates are re-based on the full bank this often.
    int full_refresh_interval = 1000;
    int checkpoint_interval = 0;  // 0: write only the final checkpoint
    std::string checkpoint_path;  // empty: no intermediate writes
    std::string log_path;         // JSONL, one record per iteration
};

struct IterationReport {
    int iteration = 0;
    double ce = 0.0;
    double npair = 0.0;
    double total = 0.0;
    double lr = 0.0;
    int flips = 0;  // coverage flips spent on the pair's pseudo labels
};

struct TrainState {
    NetworkParams net;
    HmmParams static_params;
    HmmParams params;  // dynamic refresh target; equals static_params at init
    MapAssignmentBank bank;
    DynamicCounts counts{0};
    int iteration = 0;  // completed iterations
    std::mt19937_64 rng;
};

// All unordered video pairs sharing at least one action class. Throws when
// no such pair exists.
std::vector<std::pair<int, int>> sharing_pairs(
    const std::vector<ActionSet>& sets);
std::pair<int, int> sample_pair(const std::vector<std::pair<int, int>>& pairs,
                                std::mt19937_64& rng);

// Static estimates, freshly initialized weights, and a bank filled by
// decoding every video once under the static parameters.
TrainState init_state(const Dataset& dataset, const TrainConfig& config);

// One update: decode the pair into pseudo ground truth, apply the summed
// gradient of both videos' losses, refresh the bank, and (dynamic variant)
// re-estimate the HMM from it.
IterationReport train_iteration(TrainState& state, const Dataset& dataset,
                                std::pair<int, int> pair,
                                const TrainConfig& config);

using IterationCallback = std::function<void(const IterationReport&)>;

Checkpoint fit(const Dataset& dataset, const TrainConfig& config,
               const IterationCallback& on_iteration = {});

}  // namespace scv

#endif
