#ifndef SCV_INFER_HPP
#define SCV_INFER_HPP

#include "scv/hmm.hpp"
#include "scv/nnet.hpp"
#include "scv/types.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

namespace scv {

// Distinct ground-truth action sets observed in training, each with its
// multiplicity (number of training videos carrying it).
class GrammarPool {
public:
    GrammarPool() = default;
    explicit GrammarPool(const std::vector<ActionSet>& sets);

    void add(const ActionSet& set);

    bool empty() const { return sets_.empty(); }
    std::size_t size() const { return sets_.size(); }
    const std::vector<ActionSet>& sets() const { return sets_; }
    const std::vector<int>& multiplicities() const { return multiplicities_; }

    // Uniform over distinct sets by default; weighted draws proportionally
    // to multiplicity instead.
    const ActionSet& sample(std::mt19937_64& rng, bool weighted = false) const;

private:
    std::vector<ActionSet> sets_;
    std::vector<int> multiplicities_;
};

struct CandidateSequence {
    std::vector<int> classes;
    ActionSet source;
};

// One rejection-sampling attempt at a legal sequence for `set`: classes are
// drawn uniformly among those differing from the previous draw, generation
// stops when the next expected length would overflow `frames` (the
// overflowing draw is dropped), and the result is rejected (nullopt) unless
// it covers `set`.
std::optional<CandidateSequence> sample_legal_sequence(const ActionSet& set,
                                                       int frames,
                                                       const HmmParams& params,
                                                       std::mt19937_64& rng);

struct AlignResult {
    Segmentation seg;
    double log_post = 0.0;           // includes the sequence transition terms
    std::uint64_t cell_updates = 0;  // DP candidate evaluations
};

// Exact maximizer over boundary placements for a fixed class sequence; every
// segment gets at least one frame. Boundary ties resolve to the earliest
// placement.
AlignResult align_lengths(const std::vector<int>& sequence,
                          const ForwardCache& cache, const HmmParams& params);

struct McResult {
    Segmentation seg;
    double log_post = 0.0;
    int accepted = 0;
    std::uint64_t rejected = 0;
    std::uint64_t cell_updates = 0;
};

// Monte Carlo inference: draw sets from the pool and legal sequences from
// each set until `k` candidates are accepted, align every distinct candidate,
// and return the highest-posterior segmentation.
McResult mc_segment(const ForwardCache& cache, const HmmParams& params,
                    const GrammarPool& pool, int k, std::uint64_t seed,
                    bool weighted_pool = false);

// Alignment mode: candidates are sampled from the provided ground-truth set.
McResult mc_align(const ForwardCache& cache, const HmmParams& params,
                  const ActionSet& set, int k, std::uint64_t seed);

}  // namespace scv

#endif
