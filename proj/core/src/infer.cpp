#include "scv/infer.hpp"

#include "detail.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>
#include <utility>

namespace scv {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr std::uint64_t kMaxAttempts = 1000000;

double expected_length_sum(const ActionSet& set, const HmmParams& params) {
    double sum = 0.0;
    for (int cls : set.ids())
        sum += params.lambdas(cls);
    return sum;
}

void check_set(const ActionSet& set, int num_classes) {
    if (set.empty())
        throw std::invalid_argument("action set must be nonempty");
    for (int cls : set.ids())
        if (cls < 0 || cls >= num_classes)
            throw std::invalid_argument("class id outside vocabulary");
}

}  // namespace

GrammarPool::GrammarPool(const std::vector<ActionSet>& sets) {
    for (const ActionSet& set : sets)
        add(set);
}

void GrammarPool::add(const ActionSet& set) {
    if (set.empty())
        throw std::invalid_argument("pool sets must be nonempty");
    for (std::size_t i = 0; i < sets_.size(); ++i) {
        if (sets_[i] == set) {
            ++multiplicities_[i];
            return;
        }
    }
    sets_.push_back(set);
    multiplicities_.push_back(1);
}

const ActionSet& GrammarPool::sample(std::mt19937_64& rng,
                                     bool weighted) const {
    if (sets_.empty())
        throw std::invalid_argument("grammar pool is empty");
    if (!weighted) {
        std::uniform_int_distribution<std::size_t> pick(0, sets_.size() - 1);
        return sets_[pick(rng)];
    }
    const long total =
        std::accumulate(multiplicities_.begin(), multiplicities_.end(), 0L);
    std::uniform_int_distribution<long> pick(0, total - 1);
    long ticket = pick(rng);
    for (std::size_t i = 0; i < sets_.size(); ++i) {
        ticket -= multiplicities_[i];
        if (ticket < 0)
            return sets_[i];
    }
    return sets_.back();
}

std::optional<CandidateSequence> sample_legal_sequence(const ActionSet& set,
                                                       int frames,
                                                       const HmmParams& params,
                                                       std::mt19937_64& rng) {
    check_set(set, params.num_classes());
    if (frames < 1)
        throw std::invalid_argument("video must have at least one frame");
    if (expected_length_sum(set, params) > static_cast<double>(frames))
        return std::nullopt;  // no sequence covering the set fits the budget

    const std::vector<int>& ids = set.ids();
    const int n = static_cast<int>(ids.size());
    std::vector<int> sequence;
    double used = 0.0;
    int last = -1;
    while (true) {
        // Uniform over the classes that would not repeat the previous one.
        int cls;
        if (last < 0) {
            std::uniform_int_distribution<int> pick(0, n - 1);
            cls = ids[static_cast<std::size_t>(pick(rng))];
        } else if (n == 1) {
            break;  // only an adjacent repeat is available
        } else {
            const int last_pos = static_cast<int>(
                std::lower_bound(ids.begin(), ids.end(), last) - ids.begin());
            std::uniform_int_distribution<int> pick(0, n - 2);
            int idx = pick(rng);
            if (idx >= last_pos)
                ++idx;  // ids is sorted; skip the previous class's slot
            cls = ids[static_cast<std::size_t>(idx)];
        }
        if (used + params.lambdas(cls) > static_cast<double>(frames))
            break;  // stop rule: the overflowing draw is dropped
        sequence.push_back(cls);
        used += params.lambdas(cls);
        last = cls;
    }

    for (int cls : ids)
        if (std::find(sequence.begin(), sequence.end(), cls) == sequence.end())
            return std::nullopt;
    return CandidateSequence{std::move(sequence), set};
}

AlignResult align_lengths(const std::vector<int>& sequence,
                          const ForwardCache& cache, const HmmParams& params) {
    if (cache.num_classes() != params.num_classes())
        throw std::invalid_argument("network and HMM class counts differ");
    const int T = cache.frames();
    const int N = static_cast<int>(sequence.size());
    if (N < 1)
        throw std::invalid_argument("sequence must be nonempty");
    if (N > T)
        throw std::invalid_argument("sequence longer than the video");
    for (int i = 0; i < N; ++i) {
        if (sequence[static_cast<std::size_t>(i)] < 0 ||
            sequence[static_cast<std::size_t>(i)] >= params.num_classes())
            throw std::invalid_argument("class id outside vocabulary");
        if (i > 0 && sequence[static_cast<std::size_t>(i)] ==
                         sequence[static_cast<std::size_t>(i - 1)])
            throw std::invalid_argument("sequence has an adjacent repeat");
    }

    const Matrix terms = detail::frame_terms(cache, params);
    const Matrix prefix = detail::prefix_sums(terms);
    const Matrix pois = detail::poisson_table(params, T);

    // value(k,t): best duration+frame score of the first k segments spanning
    // frames [0,t). Transition terms are constant for a fixed sequence and
    // are added after the backtrace.
    Matrix value = Matrix::Constant(N + 1, T + 1, kNegInf);
    Eigen::MatrixXi bp = Eigen::MatrixXi::Constant(N + 1, T + 1, -1);
    value(0, 0) = 0.0;

    std::uint64_t cell_updates = 0;
    for (int k = 1; k <= N; ++k) {
        const int cls = sequence[static_cast<std::size_t>(k - 1)];
        // leave at least one frame per remaining segment
        const int t_max = T - (N - k);
        for (int t = k; t <= t_max; ++t) {
            double cell = kNegInf;
            int cell_bp = -1;
            for (int tp = k - 1; tp < t; ++tp) {
                ++cell_updates;
                if (value(k - 1, tp) == kNegInf)
                    continue;
                const double cand = value(k - 1, tp) + pois(cls, t - tp) +
                                    prefix(cls, t) - prefix(cls, tp);
                if (cand > cell) {  // strict: earliest boundary wins ties
                    cell = cand;
                    cell_bp = tp;
                }
            }
            value(k, t) = cell;
            bp(k, t) = cell_bp;
        }
    }

    std::vector<Segment> segments(static_cast<std::size_t>(N));
    int t = T;
    for (int k = N; k >= 1; --k) {
        const int tp = bp(k, t);
        segments[static_cast<std::size_t>(k - 1)] = {
            sequence[static_cast<std::size_t>(k - 1)], t - tp};
        t = tp;
    }

    double log_post = value(N, T);
    for (int i = 1; i < N; ++i)
        log_post += params.log_transitions(sequence[static_cast<std::size_t>(i - 1)],
                                           sequence[static_cast<std::size_t>(i)]);

    AlignResult result;
    result.seg = Segmentation(std::move(segments));
    result.log_post = log_post;
    result.cell_updates = cell_updates;
    return result;
}

namespace {

McResult run_monte_carlo(const ForwardCache& cache, const HmmParams& params,
                         int k, std::uint64_t seed,
                         const std::function<const ActionSet&(std::mt19937_64&)>& draw_set) {
    if (k < 1)
        throw std::invalid_argument("candidate count must be >= 1");

    std::mt19937_64 rng(seed);
    std::map<std::vector<int>, std::pair<double, Segmentation>> aligned;

    McResult best;
    bool have_best = false;
    std::uint64_t attempts = 0;
    int accepted = 0;
    while (accepted < k) {
        if (attempts >= kMaxAttempts)
            throw InfeasibleError(
                "rejection-sampling attempt budget exhausted before " +
                std::to_string(k) + " candidates were accepted");
        ++attempts;
        const ActionSet& set = draw_set(rng);
        auto cand = sample_legal_sequence(set, cache.frames(), params, rng);
        if (!cand) {
            ++best.rejected;
            continue;
        }
        ++accepted;

        auto it = aligned.find(cand->classes);
        if (it == aligned.end()) {
            AlignResult ar = align_lengths(cand->classes, cache, params);
            best.cell_updates += ar.cell_updates;
            it = aligned
                     .emplace(cand->classes,
                              std::make_pair(ar.log_post, std::move(ar.seg)))
                     .first;
        }
        if (!have_best || it->second.first > best.log_post) {
            have_best = true;
            best.log_post = it->second.first;
            best.seg = it->second.second;
        }
    }
    best.accepted = accepted;
    return best;
}

}  // namespace

McResult mc_segment(const ForwardCache& cache, const HmmParams& params,
                    const GrammarPool& pool, int k, std::uint64_t seed,
                    bool weighted_pool) {
    if (pool.empty())
        throw std::invalid_argument("grammar pool is empty");
    bool feasible = false;
    for (const ActionSet& set : pool.sets())
        if (expected_length_sum(set, params) <= static_cast<double>(cache.frames()))
            feasible = true;
    if (!feasible)
        throw InfeasibleError("no action set in the pool fits this video");
    return run_monte_carlo(
        cache, params, k, seed,
        [&pool, weighted_pool](std::mt19937_64& rng) -> const ActionSet& {
            return pool.sample(rng, weighted_pool);
        });
}

McResult mc_align(const ForwardCache& cache, const HmmParams& params,
                  const ActionSet& set, int k, std::uint64_t seed) {
    check_set(set, params.num_classes());
    if (expected_length_sum(set, params) > static_cast<double>(cache.frames()))
        throw InfeasibleError(
            "the action set's expected lengths exceed the video length");
    return run_monte_carlo(cache, params, k, seed,
                           [&set](std::mt19937_64&) -> const ActionSet& {
                               return set;
                           });
}

}  // namespace scv
