#ifndef SCV_VITERBI_HPP
#define SCV_VITERBI_HPP

#include "scv/hmm.hpp"
#include "scv/nnet.hpp"
#include "scv/types.hpp"

#include <cstdint>
#include <vector>

namespace scv {

// Joint log-posterior of a segmentation: transition terms between consecutive
// segments (none for the first), a Poisson duration term per segment, and a
// prior-normalized frame score per frame.
double log_posterior(const Segmentation& seg, const ForwardCache& cache,
                     const HmmParams& params);

struct ViterbiResult {
    Segmentation seg;
    double log_post = 0.0;           // best final table cell
    std::uint64_t cell_updates = 0;  // DP candidate evaluations
};

// Exact segment-level MAP over all segmentations whose classes lie in `set`
// with no adjacent repeats. With prune on, an extension is discarded when the
// accumulated expected length of the predecessor's best path plus the new
// segment's expected length exceeds T (heuristic; off for exactness).
ViterbiResult viterbi_map(const ForwardCache& cache, const HmmParams& params,
                          const ActionSet& set, bool prune = false);

// Half of a decoded segment, split at the frame of minimum consecutive
// hidden-feature cosine similarity. Length-1 segments stay whole.
struct Oversegment {
    int parent = 0;  // index into the source segmentation
    int start = 0;   // first frame
    int length = 0;
    int cls = 0;

    bool operator==(const Oversegment&) const = default;
};

std::vector<Oversegment> oversegment(const Segmentation& seg,
                                     const ForwardCache& cache);

struct FlipEvent {
    int overseg = 0;
    int cls = 0;
    double log_post = 0.0;  // posterior of the whole labeling after the flip
};

struct FlipOutcome {
    Segmentation seg;
    bool covered = false;
    std::vector<FlipEvent> events;
};

// Greedily relabels oversegments to missing classes of `set`, one flip at a
// time, always taking the candidate whose resulting posterior is largest.
// Each oversegment flips at most once and a flip may not erase the only
// remaining piece of a currently present class. Partial progress is returned
// when the pass runs out of candidates before covering `set`.
FlipOutcome flip_to_cover(const Segmentation& seg,
                          const std::vector<Oversegment>& oversegments,
                          const ForwardCache& cache, const HmmParams& params,
                          const ActionSet& set);

struct FlipPass {
    std::vector<Oversegment> oversegments;
    std::vector<FlipEvent> events;
};

struct ScvResult {
    Segmentation seg;
    double viterbi_log_post = 0.0;  // step-1 optimum, before any flips
    double log_post = 0.0;          // posterior of the returned segmentation
    std::uint64_t cell_updates = 0;
    std::vector<FlipPass> passes;

    int flip_count() const;
};

// Two-step decode: exact Viterbi restricted to `set`, then oversegmentation
// and label flipping (repeated up to four passes) until every class of `set`
// appears. Throws CoverageInfeasibleError when T < |set| or when the pass
// budget is exhausted.
ScvResult scv_decode(const ForwardCache& cache, const HmmParams& params,
                     const ActionSet& set, bool prune = false);

}  // namespace scv

#endif
