#include "scv/viterbi.hpp"

#include "detail.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <utility>

namespace scv {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_cache_params(const ForwardCache& cache, const HmmParams& params) {
    if (cache.num_classes() != params.num_classes())
        throw std::invalid_argument("network and HMM class counts differ");
    if (cache.frames() < 1)
        throw std::invalid_argument("video must have at least one frame");
}

void check_set(const ActionSet& set, int num_classes) {
    if (set.empty())
        throw std::invalid_argument("action set must be nonempty");
    for (int cls : set.ids())
        if (cls < 0 || cls >= num_classes)
            throw std::invalid_argument("class id outside vocabulary");
}

}  // namespace

double log_posterior(const Segmentation& seg, const ForwardCache& cache,
                     const HmmParams& params) {
    check_cache_params(cache, params);
    if (seg.empty())
        throw std::invalid_argument("segmentation must be nonempty");
    if (seg.total_frames() != cache.frames())
        throw std::invalid_argument("segmentation does not span the video");
    const Vector log_pri = params.log_priors();
    double total = 0.0;
    int t = 0;
    int prev = -1;
    for (const Segment& s : seg.segments()) {
        if (s.cls < 0 || s.cls >= params.num_classes())
            throw std::invalid_argument("class id outside vocabulary");
        if (prev >= 0)
            total += params.log_transitions(prev, s.cls);
        total += poisson_log_pmf(s.length, params.lambdas(s.cls));
        for (int i = 0; i < s.length; ++i, ++t)
            total += cache.log_softmax(s.cls, t) - log_pri(s.cls);
        prev = s.cls;
    }
    return total;
}

ViterbiResult viterbi_map(const ForwardCache& cache, const HmmParams& params,
                          const ActionSet& set, bool prune) {
    check_cache_params(cache, params);
    check_set(set, params.num_classes());

    const int T = cache.frames();
    const std::vector<int>& classes = set.ids();
    const int n = static_cast<int>(classes.size());
    const Matrix terms = detail::frame_terms(cache, params);
    const Matrix prefix = detail::prefix_sums(terms);
    const Matrix pois = detail::poisson_table(params, T);

    // value(i,t): best log-posterior over segmentations of frames [0,t) whose
    // last segment has class classes[i]. acc tracks the expected-length sum
    // of the best path per cell for the pruning heuristic.
    Matrix value = Matrix::Constant(n, T + 1, kNegInf);
    Matrix acc = Matrix::Zero(n, T + 1);
    Eigen::MatrixXi bp_time = Eigen::MatrixXi::Constant(n, T + 1, -1);
    Eigen::MatrixXi bp_class = Eigen::MatrixXi::Constant(n, T + 1, -1);

    // best(i,t') = max over j != i of value(j,t') + log p(classes[i] |
    // classes[j]), restricted to prune-admissible predecessors; best_arg
    // records the argmax j, lowest class id on ties.
    Matrix best = Matrix::Constant(n, T + 1, kNegInf);
    Eigen::MatrixXi best_arg = Eigen::MatrixXi::Constant(n, T + 1, -1);

    std::uint64_t cell_updates = 0;

    for (int t = 1; t <= T; ++t) {
        for (int i = 0; i < n; ++i) {
            const int ci = classes[i];
            double cell = kNegInf;
            int cell_pred_class = std::numeric_limits<int>::max();
            int cell_pred_time = std::numeric_limits<int>::max();
            int cell_bp_time = -1;
            int cell_bp_class = -1;
            bool cell_set = false;

            auto consider = [&](double cand, int pred_class, int pred_time,
                                int arg_class) {
                if (cand == kNegInf)
                    return;
                const bool wins =
                    !cell_set || cand > cell ||
                    (cand == cell &&
                     (pred_class < cell_pred_class ||
                      (pred_class == cell_pred_class &&
                       pred_time < cell_pred_time)));
                if (wins) {
                    cell = cand;
                    cell_pred_class = pred_class;
                    cell_pred_time = pred_time;
                    cell_bp_time = pred_time;
                    cell_bp_class = arg_class;
                    cell_set = true;
                }
            };

            // First segment spans [0,t) with no transition term.
            ++cell_updates;
            if (!prune || params.lambdas(ci) <= static_cast<double>(T))
                consider(pois(ci, t) + prefix(ci, t), -1, 0, -1);

            for (int tp = 1; tp < t; ++tp) {
                ++cell_updates;
                const double b = best(i, tp);
                if (b == kNegInf)
                    continue;
                consider(b + pois(ci, t - tp) + prefix(ci, t) - prefix(ci, tp),
                         classes[best_arg(i, tp)], tp, best_arg(i, tp));
            }

            if (cell_set) {
                value(i, t) = cell;
                bp_time(i, t) = cell_bp_time;
                bp_class(i, t) = cell_bp_class;
                acc(i, t) = params.lambdas(ci) +
                            (cell_bp_class >= 0 ? acc(cell_bp_class, cell_bp_time)
                                                : 0.0);
            }
        }

        // Fold the just-finished column into the transition-maximized table.
        for (int i = 0; i < n; ++i) {
            const double budget = static_cast<double>(T) - params.lambdas(classes[i]);
            double b = kNegInf;
            int arg = -1;
            for (int j = 0; j < n; ++j) {
                if (j == i || value(j, t) == kNegInf)
                    continue;
                if (prune && acc(j, t) > budget)
                    continue;
                const double cand =
                    value(j, t) + params.log_transitions(classes[j], classes[i]);
                if (cand > b) {
                    b = cand;
                    arg = j;
                }
            }
            best(i, t) = b;
            best_arg(i, t) = arg;
        }
    }

    int final_i = -1;
    for (int i = 0; i < n; ++i)
        if (value(i, T) != kNegInf && (final_i < 0 || value(i, T) > value(final_i, T)))
            final_i = i;
    if (final_i < 0)
        throw InfeasibleError("pruning removed every admissible segmentation");

    std::vector<Segment> segments;
    int i = final_i;
    int t = T;
    while (t > 0) {
        const int tp = bp_time(i, t);
        segments.push_back({classes[i], t - tp});
        const int j = bp_class(i, t);
        t = tp;
        i = j;
    }
    std::reverse(segments.begin(), segments.end());

    ViterbiResult result;
    result.seg = Segmentation(std::move(segments));
    result.log_post = value(final_i, T);
    result.cell_updates = cell_updates;
    return result;
}

std::vector<Oversegment> oversegment(const Segmentation& seg,
                                     const ForwardCache& cache) {
    if (seg.total_frames() != cache.frames())
        throw std::invalid_argument("segmentation does not span the video");
    const Matrix& h = cache.h;
    auto similarity = [&h](int k) {
        const double nu = h.col(k).norm();
        const double nv = h.col(k + 1).norm();
        if (nu == 0.0 || nv == 0.0)
            return 0.0;
        return h.col(k).dot(h.col(k + 1)) / (nu * nv);
    };

    std::vector<Oversegment> out;
    int start = 0;
    for (std::size_t idx = 0; idx < seg.size(); ++idx) {
        const Segment& s = seg.segments()[idx];
        const int parent = static_cast<int>(idx);
        if (s.length == 1) {
            out.push_back({parent, start, 1, s.cls});
        } else {
            int split = start;
            double lowest = std::numeric_limits<double>::infinity();
            for (int k = start; k < start + s.length - 1; ++k) {
                const double sim = similarity(k);
                if (sim < lowest) {
                    lowest = sim;
                    split = k;
                }
            }
            out.push_back({parent, start, split - start + 1, s.cls});
            out.push_back({parent, split + 1, start + s.length - split - 1, s.cls});
        }
        start += s.length;
    }
    return out;
}

FlipOutcome flip_to_cover(const Segmentation& seg,
                          const std::vector<Oversegment>& oversegments,
                          const ForwardCache& cache, const HmmParams& params,
                          const ActionSet& set) {
    check_cache_params(cache, params);
    check_set(set, params.num_classes());
    const int T = cache.frames();
    if (seg.total_frames() != T)
        throw std::invalid_argument("segmentation does not span the video");
    int spanned = 0;
    for (const Oversegment& o : oversegments)
        spanned += o.length;
    if (spanned != T)
        throw std::invalid_argument("oversegments do not partition the video");
    const ActionSet present = seg.class_set();
    for (int cls : present.ids())
        if (!set.contains(cls))
            throw std::invalid_argument(
                "segmentation uses classes outside the target set");

    const Matrix terms = detail::frame_terms(cache, params);
    const Matrix pois = detail::poisson_table(params, T);

    const int m = static_cast<int>(oversegments.size());
    std::vector<int> label(static_cast<std::size_t>(m));
    std::vector<bool> flipped(static_cast<std::size_t>(m), false);
    std::vector<int> holders(static_cast<std::size_t>(params.num_classes()), 0);
    for (int o = 0; o < m; ++o) {
        label[static_cast<std::size_t>(o)] = oversegments[static_cast<std::size_t>(o)].cls;
        ++holders[static_cast<std::size_t>(oversegments[static_cast<std::size_t>(o)].cls)];
    }

    std::vector<int> frames(static_cast<std::size_t>(T));
    auto render_frames = [&] {
        for (int o = 0; o < m; ++o) {
            const Oversegment& ov = oversegments[static_cast<std::size_t>(o)];
            std::fill_n(frames.begin() + ov.start, ov.length,
                        label[static_cast<std::size_t>(o)]);
        }
    };

    FlipOutcome outcome;
    while (true) {
        std::vector<int> missing;
        for (int cls : set.ids())
            if (holders[static_cast<std::size_t>(cls)] == 0)
                missing.push_back(cls);
        if (missing.empty()) {
            outcome.covered = true;
            break;
        }

        // Candidates scanned by ascending class then position; a strict
        // improvement requirement makes that the tie order.
        bool found = false;
        double best_score = kNegInf;
        int best_o = -1;
        int best_cls = -1;
        for (int cls : missing) {
            for (int o = 0; o < m; ++o) {
                int& cur = label[static_cast<std::size_t>(o)];
                if (flipped[static_cast<std::size_t>(o)] ||
                    holders[static_cast<std::size_t>(cur)] <= 1)
                    continue;
                const int old = cur;
                cur = cls;
                render_frames();
                const double score =
                    detail::score_framewise(frames, terms, pois, params);
                cur = old;
                if (!found || score > best_score) {
                    found = true;
                    best_score = score;
                    best_o = o;
                    best_cls = cls;
                }
            }
        }
        if (!found)
            break;

        --holders[static_cast<std::size_t>(label[static_cast<std::size_t>(best_o)])];
        label[static_cast<std::size_t>(best_o)] = best_cls;
        ++holders[static_cast<std::size_t>(best_cls)];
        flipped[static_cast<std::size_t>(best_o)] = true;
        outcome.events.push_back({best_o, best_cls, best_score});
    }

    render_frames();
    outcome.seg = Segmentation::from_framewise(frames);
    return outcome;
}

int ScvResult::flip_count() const {
    int count = 0;
    for (const FlipPass& pass : passes)
        count += static_cast<int>(pass.events.size());
    return count;
}

ScvResult scv_decode(const ForwardCache& cache, const HmmParams& params,
                     const ActionSet& set, bool prune) {
    check_cache_params(cache, params);
    check_set(set, params.num_classes());
    if (static_cast<int>(set.size()) > cache.frames())
        throw CoverageInfeasibleError(
            "video too short to contain every class of its set");

    ViterbiResult step1 = viterbi_map(cache, params, set, prune);
    ScvResult result;
    result.seg = std::move(step1.seg);
    result.viterbi_log_post = step1.log_post;
    result.log_post = step1.log_post;
    result.cell_updates = step1.cell_updates;

    for (int pass = 0; pass < 4 && !result.seg.covers(set); ++pass) {
        std::vector<Oversegment> pieces = oversegment(result.seg, cache);
        FlipOutcome flips =
            flip_to_cover(result.seg, pieces, cache, params, set);
        result.seg = std::move(flips.seg);
        result.passes.push_back({std::move(pieces), std::move(flips.events)});
        if (flips.covered)
            break;
    }
    if (!result.seg.covers(set))
        throw CoverageInfeasibleError(
            "could not cover the action set within the flip-pass budget");
    if (result.flip_count() > 0)
        result.log_post = log_posterior(result.seg, cache, params);
    return result;
}

}  // namespace scv
