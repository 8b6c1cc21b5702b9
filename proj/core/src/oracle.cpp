#include "scv/oracle.hpp"

#include "detail.hpp"

#include <limits>
#include <stdexcept>
#include <vector>

namespace scv {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

OracleResult oracle_exhaustive_map(const ForwardCache& cache,
                                   const HmmParams& params,
                                   const ActionSet& set, bool cover_required) {
    if (cache.num_classes() != params.num_classes())
        throw std::invalid_argument("network and HMM class counts differ");
    if (set.empty())
        throw std::invalid_argument("action set must be nonempty");
    for (int cls : set.ids())
        if (cls < 0 || cls >= params.num_classes())
            throw std::invalid_argument("class id outside vocabulary");

    const int T = cache.frames();
    const int n = static_cast<int>(set.size());
    if (T > 14 || n > 3)
        throw std::invalid_argument(
            "instance too large for exhaustive enumeration (T <= 14, |C| <= 3)");
    if (cover_required && T < n)
        throw CoverageInfeasibleError(
            "video too short to contain every class of its set");

    const std::vector<int>& ids = set.ids();
    const Matrix terms = detail::frame_terms(cache, params);
    const Matrix pois = detail::poisson_table(params, T);
    const unsigned full_mask = (1u << n) - 1u;

    std::vector<int> choice(static_cast<std::size_t>(T));
    std::vector<int> best_choice;
    double best = kNegInf;
    bool found = false;

    // Depth-first over label indices, keeping the score incrementally. The
    // running total always includes the duration term of the open run, so a
    // leaf needs no extra work. Classes ascend at every position, so the
    // first best found is the lexicographically smallest optimum.
    struct Frame {
        int idx;         // which class index is being tried at depth t
        double score;    // total after placing it
        unsigned mask;   // classes seen so far
        int run;         // open-run length after placing it
    };
    std::vector<Frame> stack(static_cast<std::size_t>(T));

    int t = 0;
    int idx = 0;
    while (true) {
        if (idx == n) {  // exhausted choices at this depth; backtrack
            if (t == 0)
                break;
            --t;
            idx = stack[static_cast<std::size_t>(t)].idx + 1;
            continue;
        }

        const int cls = ids[static_cast<std::size_t>(idx)];
        double score;
        unsigned mask;
        int run;
        if (t == 0) {
            score = terms(cls, 0) + pois(cls, 1);
            mask = 1u << idx;
            run = 1;
        } else {
            const Frame& prev = stack[static_cast<std::size_t>(t - 1)];
            const int prev_cls = ids[static_cast<std::size_t>(prev.idx)];
            if (cls == prev_cls) {
                score = prev.score + terms(cls, t) + pois(cls, prev.run + 1) -
                        pois(cls, prev.run);
                run = prev.run + 1;
            } else {
                score = prev.score + terms(cls, t) +
                        params.log_transitions(prev_cls, cls) + pois(cls, 1);
                run = 1;
            }
            mask = prev.mask | (1u << idx);
        }
        stack[static_cast<std::size_t>(t)] = {idx, score, mask, run};
        choice[static_cast<std::size_t>(t)] = cls;

        if (t + 1 == T) {
            if ((!cover_required || mask == full_mask) && score > best) {
                best = score;
                best_choice = choice;
                found = true;
            }
            ++idx;
        } else {
            ++t;
            idx = 0;
        }
    }

    if (!found)
        throw CoverageInfeasibleError("no labeling satisfies the constraints");

    OracleResult result;
    result.seg = Segmentation::from_framewise(best_choice);
    result.log_post = best;
    return result;
}

}  // namespace scv
