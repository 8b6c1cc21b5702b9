#ifndef SCV_HMM_HPP
#define SCV_HMM_HPP

#include "scv/types.hpp"

#include <vector>

namespace scv {

enum class HmmVariant { Static, Dynamic };

// Transition, duration and prior parameters shared by training-time decoding
// and test-time inference. Probabilities that enter products are kept in the
// log domain; priors are kept as plain probabilities.
struct HmmParams {
    Matrix log_transitions;  // classes x classes, log p(next|prev), diag -inf
    Vector lambdas;          // expected segment length per class, frames
    Vector priors;           // per-frame class prior p(c), in (0,1]
    int l_min = 1;
    HmmVariant variant = HmmVariant::Static;

    int num_classes() const { return static_cast<int>(lambdas.size()); }
    Vector log_priors() const { return priors.array().log(); }
};

// Latest decoded segmentation per training video, indexed like the dataset.
using MapAssignmentBank = std::vector<Segmentation>;

// log of the Poisson pmf, length >= 1, lambda > 0. Uses log-gamma, so long
// segments do not overflow.
double poisson_log_pmf(int length, double lambda);

// Least-squares fit of expected class lengths: for every video the lengths of
// its label set should sum to the video duration. Normal equations with a
// small ridge, iterative refinement, then projection onto lambda >= l_min
// with one re-solve over the unclamped classes.
Vector solve_expected_lengths(const std::vector<ActionSet>& sets,
                              const std::vector<int>& video_lengths,
                              int num_classes, int l_min);

// Parameters estimated once from the set-level ground truth: transition
// counts from co-occurrence, Poisson means from the length fit, priors from
// footage shares.
HmmParams estimate_static(const std::vector<ActionSet>& sets,
                          const std::vector<int>& video_lengths,
                          int num_classes, int l_min);

// Running count statistics over a bank of segmentations; supports removing a
// video's old segmentation and adding its replacement so the training loop
// can refresh parameters without rescanning every video.
struct DynamicCounts {
    Matrix pair_counts;          // classes x classes, predicted consecutive pairs
    Vector segment_counts;       // predicted segments per class
    Vector segment_length_sums;  // predicted frames per class, by segment
    double total_frames = 0.0;

    explicit DynamicCounts(int num_classes);
    void add(const Segmentation& seg);
    void remove(const Segmentation& seg);
    static DynamicCounts from_bank(const MapAssignmentBank& bank,
                                   int num_classes);

    // Builds parameters; classes never predicted fall back to the static
    // estimates. Transition counts receive additive smoothing.
    HmmParams to_params(const HmmParams& static_params) const;
};

// Parameters re-estimated from the previous round of decoded segmentations.
HmmParams update_dynamic(const MapAssignmentBank& bank,
                         const std::vector<int>& video_lengths,
                         const HmmParams& static_params);

}  // namespace scv

#endif
