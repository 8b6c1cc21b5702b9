// Release gate: one self-contained check per numbered criterion, each
// printing a single CRITERION <n> PASS/FAIL verdict plus the measurements
// it was judged on. Tolerances are pinned here, not configurable.

#include "scv/checkpoint.hpp"
#include "scv/data.hpp"
#include "scv/eval.hpp"
#include "scv/hmm.hpp"
#include "scv/infer.hpp"
#include "scv/nnet.hpp"
#include "scv/oracle.hpp"
#include "scv/train.hpp"
#include "scv/types.hpp"
#include "scv/viterbi.hpp"

#include "test_util.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace fs = std::filesystem;

namespace {

using namespace scv;

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void note(const std::string& line) { std::cout << "  " << line << "\n"; }

std::string fmt(double value, int precision = 6) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(precision) << value;
    return out.str();
}

double median(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    if (n == 0)
        return 0.0;
    if (n % 2 == 1)
        return values[n / 2];
    return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double seconds_since(const std::chrono::steady_clock::time_point& start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start)
        .count();
}

int rand_int(std::mt19937_64& rng, int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
}

struct TempDir {
    fs::path path;

    TempDir() {
        std::random_device rd;
        path = fs::temp_directory_path() /
               ("scv_acceptance_" + std::to_string(rd()) + "_" +
                std::to_string(rd()));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

// ---------------------------------------------------------------- criterion 1

bool criterion_1() {
    std::mt19937_64 rng(101);
    const auto start = std::chrono::steady_clock::now();
    int agree = 0;
    double worst = 0.0;
    for (int i = 0; i < 200; ++i) {
        const int classes = rand_int(rng, 2, 4);
        const int frames = rand_int(rng, 1, 12);
        const int size = rand_int(rng, 1, std::min(3, classes));
        const HmmParams params = testutil::random_params(classes, rng);
        const ForwardCache cache = testutil::random_cache(classes, frames, rng);
        const ActionSet set = testutil::random_subset(classes, size, rng);

        const ViterbiResult vit = viterbi_map(cache, params, set, false);
        const OracleResult oracle =
            oracle_exhaustive_map(cache, params, set, false);
        const double diff = std::abs(vit.log_post - oracle.log_post);
        worst = std::max(worst, diff);
        if (diff <= 1e-9)
            ++agree;
    }
    const double elapsed = seconds_since(start);
    note("agreement: " + std::to_string(agree) + "/200 instances");
    note("largest |viterbi - oracle|: " + fmt(worst, 12));
    note("elapsed: " + fmt(elapsed, 2) + " s (limit 60)");
    return agree == 200 && elapsed < 60.0;
}

// ---------------------------------------------------------------- criterion 2

// Replays the recorded flip trail: every pass must re-derive the same
// oversegments, and every event must be a legal candidate achieving the best
// enumerable posterior at its point in the sequence.
bool replay_flips(const ScvResult& scv, const ForwardCache& cache,
                  const HmmParams& params, const ActionSet& set) {
    Segmentation cur = viterbi_map(cache, params, set, false).seg;
    if (std::abs(log_posterior(cur, cache, params) - scv.viterbi_log_post) >
        1e-9)
        return false;

    const int frames = cache.frames();
    for (const FlipPass& pass : scv.passes) {
        const std::vector<Oversegment> pieces = oversegment(cur, cache);
        if (pieces != pass.oversegments)
            return false;

        const int m = static_cast<int>(pieces.size());
        std::vector<int> label(static_cast<std::size_t>(m));
        std::vector<bool> spent(static_cast<std::size_t>(m), false);
        for (int o = 0; o < m; ++o)
            label[static_cast<std::size_t>(o)] =
                pieces[static_cast<std::size_t>(o)].cls;

        auto rendered = [&] {
            std::vector<int> framewise(static_cast<std::size_t>(frames));
            for (int o = 0; o < m; ++o) {
                const Oversegment& piece = pieces[static_cast<std::size_t>(o)];
                std::fill_n(framewise.begin() + piece.start, piece.length,
                            label[static_cast<std::size_t>(o)]);
            }
            return Segmentation::from_framewise(framewise);
        };

        for (const FlipEvent& event : pass.events) {
            std::vector<int> holders(
                static_cast<std::size_t>(params.num_classes()), 0);
            for (int o = 0; o < m; ++o)
                ++holders[static_cast<std::size_t>(
                    label[static_cast<std::size_t>(o)])];
            std::vector<int> missing;
            for (int cls : set.ids())
                if (holders[static_cast<std::size_t>(cls)] == 0)
                    missing.push_back(cls);
            if (missing.empty())
                return false;  // event recorded after coverage

            if (event.overseg < 0 || event.overseg >= m)
                return false;
            const std::size_t eo = static_cast<std::size_t>(event.overseg);
            if (spent[eo] ||
                holders[static_cast<std::size_t>(label[eo])] <= 1)
                return false;
            if (std::find(missing.begin(), missing.end(), event.cls) ==
                missing.end())
                return false;

            double best = kNegInf;
            bool found = false;
            for (int cls : missing) {
                for (int o = 0; o < m; ++o) {
                    const std::size_t so = static_cast<std::size_t>(o);
                    if (spent[so] ||
                        holders[static_cast<std::size_t>(label[so])] <= 1)
                        continue;
                    const int old = label[so];
                    label[so] = cls;
                    const double score =
                        log_posterior(rendered(), cache, params);
                    label[so] = old;
                    if (!found || score > best) {
                        found = true;
                        best = score;
                    }
                }
            }
            if (!found)
                return false;

            const int old = label[eo];
            label[eo] = event.cls;
            const double chosen = log_posterior(rendered(), cache, params);
            if (std::abs(chosen - event.log_post) > 1e-9 ||
                chosen < best - 1e-9) {
                label[eo] = old;
                return false;
            }
            spent[eo] = true;  // keep the flip applied
        }
        cur = rendered();
    }
    return cur == scv.seg;
}

bool criterion_2() {
    std::mt19937_64 rng(202);
    int covered = 0;
    int replayed = 0;
    int bounded = 0;
    std::vector<double> gaps;
    for (int i = 0; i < 200; ++i) {
        const int classes = rand_int(rng, 2, 4);
        const int size = rand_int(rng, 1, std::min(3, classes));
        const int frames = rand_int(rng, std::max(size, 2), 12);
        const HmmParams params = testutil::random_params(classes, rng);
        const ForwardCache cache = testutil::random_cache(classes, frames, rng);
        const ActionSet set = testutil::random_subset(classes, size, rng);

        ScvResult scv;
        try {
            scv = scv_decode(cache, params, set, false);
        } catch (const CoverageInfeasibleError& e) {
            note("instance " + std::to_string(i) +
                 " failed to cover: " + e.what());
            continue;
        }
        if (scv.seg.covers(set))
            ++covered;
        if (replay_flips(scv, cache, params, set) &&
            std::abs(log_posterior(scv.seg, cache, params) - scv.log_post) <=
                1e-9)
            ++replayed;

        const OracleResult oracle =
            oracle_exhaustive_map(cache, params, set, true);
        if (scv.log_post <= oracle.log_post + 1e-9)
            ++bounded;
        gaps.push_back((oracle.log_post - scv.log_post) /
                       std::max(1e-12, std::abs(oracle.log_post)));
    }
    const double med = median(gaps);
    note("coverage: " + std::to_string(covered) + "/200");
    note("flip replays verified: " + std::to_string(replayed) + "/200");
    note("never above the covering oracle: " + std::to_string(bounded) +
         "/200");
    note("median relative posterior gap: " + fmt(med, 6) + " (limit 0.15)");
    return covered == 200 && replayed == 200 && bounded == 200 && med <= 0.15;
}

// ---------------------------------------------------------------- criterion 3

bool criterion_3() {
    std::mt19937_64 rng(303);
    int instances_ok = 0;
    double worst_rel = 0.0;
    for (int i = 0; i < 50; ++i) {
        const int mode = i % 4;  // ce, npair hard, npair soft, base variant
        const int dim = rand_int(rng, 2, 4);
        const int hidden = rand_int(rng, 2, 5);
        const int classes = rand_int(rng, 2, 4);
        const int ta = rand_int(rng, 2, 5);
        const int tb = rand_int(rng, 2, 5);

        NetworkParams net = NetworkParams::init(dim, hidden, classes, rng());
        std::normal_distribution<double> gauss(0.0, 1.0);
        FeatureSequence xa(dim, ta), xb(dim, tb);
        for (int r = 0; r < dim; ++r) {
            for (int t = 0; t < ta; ++t)
                xa(r, t) = gauss(rng);
            for (int t = 0; t < tb; ++t)
                xb(r, t) = gauss(rng);
        }

        const int shared = rand_int(rng, 0, classes - 1);
        auto make_set = [&] {
            ActionSet set = testutil::random_subset(
                classes, rand_int(rng, 1, classes), rng);
            set.insert(shared);
            return set;
        };
        const ActionSet sa = make_set();
        const ActionSet sb = make_set();
        auto make_labels = [&](const ActionSet& set, int frames) {
            std::vector<int> labels(static_cast<std::size_t>(frames));
            for (int& l : labels)
                l = set.ids()[static_cast<std::size_t>(
                    rand_int(rng, 0, static_cast<int>(set.size()) - 1))];
            return labels;
        };
        const std::vector<int> la = make_labels(sa, ta);
        const std::vector<int> lb = make_labels(sb, tb);

        const FeatureMode feature_mode =
            mode == 2 ? FeatureMode::soft : FeatureMode::hard;
        const bool base_variant = mode == 3;

        auto loss_of = [&] {
            const ForwardCache ca = forward(net, xa);
            const ForwardCache cb = forward(net, xb);
            if (mode == 0)
                return ce_loss_and_grad(ca, la).loss +
                       ce_loss_and_grad(cb, lb).loss;
            return npair_loss_and_grad(ca, cb, sa, sb, &la, &lb, feature_mode,
                                       base_variant)
                .loss;
        };

        const ForwardCache ca = forward(net, xa);
        const ForwardCache cb = forward(net, xb);
        Gradients analytic;
        if (mode == 0) {
            const CrossEntropyResult ra = ce_loss_and_grad(ca, la);
            const CrossEntropyResult rb = ce_loss_and_grad(cb, lb);
            analytic = backprop(net, xa, ca, ra.grad_f, Matrix());
            analytic += backprop(net, xb, cb, rb.grad_f, Matrix());
        } else {
            const NpairResult np = npair_loss_and_grad(
                ca, cb, sa, sb, &la, &lb, feature_mode, base_variant);
            analytic = backprop(net, xa, ca, np.grad_f_a, np.grad_h_a);
            analytic += backprop(net, xb, cb, np.grad_f_b, np.grad_h_b);
        }

        bool instance_ok = true;
        auto check_entry = [&](double& value, double grad) {
            const double eps = 1e-6 * std::max(1.0, std::abs(value));
            const double original = value;
            value = original + eps;
            const double hi = loss_of();
            value = original - eps;
            const double lo = loss_of();
            value = original;
            const double fd = (hi - lo) / (2.0 * eps);
            const double rel = std::abs(fd - grad) /
                               std::max({1.0, std::abs(fd), std::abs(grad)});
            worst_rel = std::max(worst_rel, rel);
            if (rel >= 1e-4)
                instance_ok = false;
        };
        for (int r = 0; r < hidden; ++r)
            for (int c = 0; c < dim; ++c)
                check_entry(net.w1(r, c), analytic.w1(r, c));
        for (int r = 0; r < hidden; ++r)
            check_entry(net.b1(r), analytic.b1(r));
        for (int r = 0; r < classes; ++r)
            for (int c = 0; c < hidden; ++c)
                check_entry(net.w2(r, c), analytic.w2(r, c));
        for (int r = 0; r < classes; ++r)
            check_entry(net.b2(r), analytic.b2(r));
        if (instance_ok)
            ++instances_ok;
    }
    note("instances within tolerance: " + std::to_string(instances_ok) +
         "/50 (ce, n-pair hard/soft, base; all four parameter blocks)");
    note("worst relative error: " + fmt(worst_rel, 8) + " (limit 1e-4)");
    return instances_ok == 50;
}

// ---------------------------------------------------------------- criterion 4

// Long-double Gaussian elimination with partial pivoting; empty result means
// a near-singular pivot and the caller redraws the corpus.
std::vector<long double> solve_gauss(
    std::vector<std::vector<long double>> a, std::vector<long double> b) {
    const int n = static_cast<int>(b.size());
    for (int col = 0; col < n; ++col) {
        int pivot = col;
        for (int row = col + 1; row < n; ++row)
            if (std::abs(a[static_cast<std::size_t>(row)]
                          [static_cast<std::size_t>(col)]) >
                std::abs(a[static_cast<std::size_t>(pivot)]
                          [static_cast<std::size_t>(col)]))
                pivot = row;
        if (std::abs(a[static_cast<std::size_t>(pivot)]
                      [static_cast<std::size_t>(col)]) < 1e-6L)
            return {};
        std::swap(a[static_cast<std::size_t>(pivot)],
                  a[static_cast<std::size_t>(col)]);
        std::swap(b[static_cast<std::size_t>(pivot)],
                  b[static_cast<std::size_t>(col)]);
        for (int row = col + 1; row < n; ++row) {
            const long double factor =
                a[static_cast<std::size_t>(row)][static_cast<std::size_t>(col)] /
                a[static_cast<std::size_t>(col)][static_cast<std::size_t>(col)];
            for (int k = col; k < n; ++k)
                a[static_cast<std::size_t>(row)][static_cast<std::size_t>(k)] -=
                    factor * a[static_cast<std::size_t>(col)]
                              [static_cast<std::size_t>(k)];
            b[static_cast<std::size_t>(row)] -=
                factor * b[static_cast<std::size_t>(col)];
        }
    }
    std::vector<long double> x(static_cast<std::size_t>(n), 0.0L);
    for (int row = n - 1; row >= 0; --row) {
        long double sum = b[static_cast<std::size_t>(row)];
        for (int k = row + 1; k < n; ++k)
            sum -= a[static_cast<std::size_t>(row)][static_cast<std::size_t>(k)] *
                   x[static_cast<std::size_t>(k)];
        x[static_cast<std::size_t>(row)] =
            sum / a[static_cast<std::size_t>(row)][static_cast<std::size_t>(row)];
    }
    return x;
}

// Normal equations in extended precision with the production clamp schedule:
// full solve, fix under-floor classes at l_min, one refit of the rest against
// the residual footage, floor the refit. Assumes every class is observed.
std::optional<Vector> lambda_oracle(const std::vector<ActionSet>& sets,
                                    const std::vector<int>& lengths,
                                    int classes, int l_min) {
    std::vector<std::vector<long double>> gram(
        static_cast<std::size_t>(classes),
        std::vector<long double>(static_cast<std::size_t>(classes), 0.0L));
    std::vector<long double> rhs(static_cast<std::size_t>(classes), 0.0L);
    for (std::size_t v = 0; v < sets.size(); ++v)
        for (int c : sets[v].ids()) {
            rhs[static_cast<std::size_t>(c)] += lengths[v];
            for (int c2 : sets[v].ids())
                gram[static_cast<std::size_t>(c)]
                    [static_cast<std::size_t>(c2)] += 1.0L;
        }

    auto subsolve = [&](const std::vector<int>& cols,
                        const std::vector<long double>& target) {
        const std::size_t n = cols.size();
        std::vector<std::vector<long double>> sub(
            n, std::vector<long double>(n));
        std::vector<long double> sub_rhs(n);
        for (std::size_t i = 0; i < n; ++i) {
            sub_rhs[i] = target[static_cast<std::size_t>(cols[i])];
            for (std::size_t j = 0; j < n; ++j)
                sub[i][j] = gram[static_cast<std::size_t>(cols[i])]
                                [static_cast<std::size_t>(cols[j])];
        }
        return solve_gauss(std::move(sub), std::move(sub_rhs));
    };

    std::vector<int> all(static_cast<std::size_t>(classes));
    for (int c = 0; c < classes; ++c)
        all[static_cast<std::size_t>(c)] = c;
    const std::vector<long double> fit = subsolve(all, rhs);
    if (fit.empty())
        return std::nullopt;

    std::vector<int> clamped, open;
    for (int c = 0; c < classes; ++c) {
        if (fit[static_cast<std::size_t>(c)] <
            static_cast<long double>(l_min))
            clamped.push_back(c);
        else
            open.push_back(c);
    }

    Vector lambdas = Vector::Constant(classes, static_cast<double>(l_min));
    if (clamped.empty()) {
        for (int c = 0; c < classes; ++c)
            lambdas(c) = static_cast<double>(fit[static_cast<std::size_t>(c)]);
        return lambdas;
    }
    if (!open.empty()) {
        std::vector<long double> adjusted = rhs;
        for (int c : open)
            for (int s : clamped)
                adjusted[static_cast<std::size_t>(c)] -=
                    gram[static_cast<std::size_t>(c)]
                        [static_cast<std::size_t>(s)] *
                    static_cast<long double>(l_min);
        const std::vector<long double> refit = subsolve(open, adjusted);
        if (refit.empty())
            return std::nullopt;
        for (std::size_t i = 0; i < open.size(); ++i)
            lambdas(open[i]) =
                std::max(static_cast<double>(l_min),
                         static_cast<double>(refit[i]));
    }
    return lambdas;
}

bool criterion_4() {
    std::mt19937_64 rng(404);
    const int corpora = 50;
    int solver_ok = 0;
    double worst_rel = 0.0;
    for (int i = 0; i < corpora; ++i) {
        const int classes = rand_int(rng, 2, 6);
        const int l_min = std::array<int, 3>{1, 2, 5}[static_cast<std::size_t>(
            i % 3)];
        std::vector<ActionSet> sets;
        std::vector<int> lengths;
        std::optional<Vector> oracle;
        // redraw until every class is observed and the system is far from
        // singular (the extended-precision oracle refuses tiny pivots)
        while (!oracle) {
            sets.clear();
            lengths.clear();
            const int videos = rand_int(rng, classes, classes + 6);
            for (int v = 0; v < videos; ++v) {
                const int size = rand_int(rng, 1, std::min(3, classes));
                sets.push_back(testutil::random_subset(classes, size, rng));
                lengths.push_back(rand_int(rng, 5, 200));
            }
            bool complete = true;
            for (int c = 0; c < classes && complete; ++c) {
                bool seen = false;
                for (const ActionSet& set : sets)
                    seen = seen || set.contains(c);
                complete = seen;
            }
            if (!complete)
                continue;
            oracle = lambda_oracle(sets, lengths, classes, l_min);
        }

        const Vector solved =
            solve_expected_lengths(sets, lengths, classes, l_min);
        bool corpus_ok = true;
        for (int c = 0; c < classes; ++c) {
            const double rel = std::abs(solved(c) - (*oracle)(c)) /
                               std::max(1.0, std::abs((*oracle)(c)));
            worst_rel = std::max(worst_rel, rel);
            if (rel >= 1e-8)
                corpus_ok = false;
        }
        if (corpus_ok)
            ++solver_ok;
    }
    note("solver vs extended-precision oracle: " + std::to_string(solver_ok) +
         "/" + std::to_string(corpora) + " corpora");
    note("worst relative error: " + fmt(worst_rel, 12) + " (limit 1e-8)");

    bool symmetric_ok = true;
    for (const int classes : {2, 3, 4, 6}) {
        for (const int factor : {7, 13, 33}) {
            const int frames = classes * factor;
            std::vector<int> ids(static_cast<std::size_t>(classes));
            for (int c = 0; c < classes; ++c)
                ids[static_cast<std::size_t>(c)] = c;
            const Vector lambdas = solve_expected_lengths(
                {ActionSet(ids)}, {frames}, classes, 1);
            for (int c = 0; c < classes; ++c)
                if (lambdas(c) != static_cast<double>(factor))
                    symmetric_ok = false;
        }
    }
    note(std::string("symmetric single-video case exact: ") +
         (symmetric_ok ? "yes" : "no"));

    bool poisson_ok = true;
    double worst_mass = 0.0;
    for (const double lambda : {0.5, 1.0, 4.2, 25.0, 100.0}) {
        const int cutoff = static_cast<int>(
            std::ceil(lambda + 40.0 * std::sqrt(lambda)));
        double total = std::exp(-lambda);  // length-zero mass
        for (int l = 1; l <= cutoff; ++l)
            total += std::exp(poisson_log_pmf(l, lambda));
        worst_mass = std::max(worst_mass, std::abs(total - 1.0));
        if (std::abs(total - 1.0) > 1e-9)
            poisson_ok = false;
    }
    note("worst |truncated poisson mass - 1|: " + fmt(worst_mass, 12) +
         " (limit 1e-9)");

    return solver_ok == corpora && symmetric_ok && poisson_ok;
}

// ---------------------------------------------------------------- criterion 5

bool criterion_5() {
    std::mt19937_64 rng(505);

    int accepted = 0;
    int legal = 0;
    std::uint64_t attempts = 0;
    while (accepted < 10000 && attempts < 5000000) {
        const int classes = rand_int(rng, 3, 6);
        const int size = rand_int(rng, 1, std::min(4, classes));
        const HmmParams params = testutil::random_params(classes, rng);
        const ActionSet set = testutil::random_subset(classes, size, rng);
        double budget = 0.0;
        for (int cls : set.ids())
            budget += params.lambdas(cls);
        const int frames =
            static_cast<int>(std::ceil(budget)) + rand_int(rng, 0, 40);

        for (int draw = 0; draw < 200 && accepted < 10000; ++draw) {
            ++attempts;
            const auto candidate =
                sample_legal_sequence(set, frames, params, rng);
            if (!candidate)
                continue;
            ++accepted;
            bool ok = !candidate->classes.empty() && candidate->source == set;
            double used = 0.0;
            ActionSet seen;
            for (std::size_t j = 0; j < candidate->classes.size(); ++j) {
                const int cls = candidate->classes[j];
                ok = ok && set.contains(cls);
                ok = ok && (j == 0 || cls != candidate->classes[j - 1]);
                used += params.lambdas(cls);
                seen.insert(cls);
            }
            ok = ok && seen == set && used <= frames + 1e-9;
            if (ok)
                ++legal;
        }
    }
    note("legal candidates: " + std::to_string(legal) + "/" +
         std::to_string(accepted) + " accepted (" + std::to_string(attempts) +
         " attempts)");

    int align_ok = 0;
    const int align_trials = 40;
    for (int i = 0; i < align_trials; ++i) {
        const int classes = rand_int(rng, 2, 4);
        const int length = rand_int(rng, 1, 3);
        std::vector<int> sequence;
        for (int j = 0; j < length; ++j) {
            int cls = rand_int(rng, 0, classes - 1);
            while (!sequence.empty() && cls == sequence.back())
                cls = rand_int(rng, 0, classes - 1);
            sequence.push_back(cls);
        }
        const int frames = rand_int(rng, length, 12);
        const HmmParams params = testutil::random_params(classes, rng);
        const ForwardCache cache = testutil::random_cache(classes, frames, rng);

        double brute = kNegInf;
        std::vector<Segment> partial;
        auto enumerate = [&](auto&& self, std::size_t pos, int left) -> void {
            if (pos + 1 == sequence.size()) {
                partial.push_back({sequence[pos], left});
                brute = std::max(
                    brute, log_posterior(Segmentation(partial), cache, params));
                partial.pop_back();
                return;
            }
            const int remaining = static_cast<int>(sequence.size() - pos - 1);
            for (int l = 1; left - l >= remaining; ++l) {
                partial.push_back({sequence[pos], l});
                self(self, pos + 1, left - l);
                partial.pop_back();
            }
        };
        enumerate(enumerate, 0, frames);

        const AlignResult aligned = align_lengths(sequence, cache, params);
        if (std::abs(aligned.log_post - brute) <= 1e-9)
            ++align_ok;
    }
    note("alignment matches boundary enumeration: " +
         std::to_string(align_ok) + "/" + std::to_string(align_trials));

    int chains_ok = 0;
    const int chain_trials = 10;
    for (int i = 0; i < chain_trials; ++i) {
        const int classes = rand_int(rng, 3, 5);
        const HmmParams params = testutil::random_params(classes, rng);
        GrammarPool pool;
        for (int s = 0; s < 3; ++s)
            pool.add(testutil::random_subset(
                classes, rand_int(rng, 1, std::min(3, classes)), rng));
        const int frames = 20 + rand_int(rng, 0, 20);
        const ForwardCache cache = testutil::random_cache(classes, frames, rng);

        bool monotone = true;
        double last = kNegInf;
        for (const int k : {1, 2, 5, 10, 25, 50}) {
            const McResult result =
                mc_segment(cache, params, pool, k, 7070 + i);
            if (result.accepted != k || result.log_post < last - 1e-12)
                monotone = false;
            last = std::max(last, result.log_post);
        }
        if (monotone)
            ++chains_ok;
    }
    note("posterior non-decreasing in K: " + std::to_string(chains_ok) + "/" +
         std::to_string(chain_trials) + " chains");

    return accepted == 10000 && legal == accepted &&
           align_ok == align_trials && chains_ok == chain_trials;
}

// ---------------------------------------------------------------- criterion 6

#ifdef SCVSEG_CLI_PATH
std::optional<double> parse_aggregate(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::optional<double> value;
    while (std::getline(in, line))
        if (line.rfind("aggregate:", 0) == 0)
            value = std::stod(line.substr(10));
    return value;
}
#endif

bool criterion_6() {
#ifndef SCVSEG_CLI_PATH
    note("cli binary not built alongside the acceptance tests");
    return false;
#else
    const TempDir dir;
    const std::string cli = SCVSEG_CLI_PATH;
    const fs::path capture = dir.path / "command_output.txt";

    auto run = [&](const std::string& args) -> std::optional<std::string> {
        const std::string command =
            cli + " " + args + " > " + capture.string() + " 2>&1";
        const int rc = std::system(command.c_str());
        std::ifstream in(capture);
        std::ostringstream text;
        text << in.rdbuf();
        if (rc != 0) {
            note("command failed: " + args);
            note(text.str());
            return std::nullopt;
        }
        return text.str();
    };

    const std::string data = (dir.path / "data").string();
    const std::string ckpt = (dir.path / "model.ckpt").string();
    const auto start = std::chrono::steady_clock::now();

    if (!run("synth --out " + data +
             " --videos 60 --test-videos 20 --classes 6 --dim 16"
             " --sigma 1.0 --min-set 2 --max-set 4"
             " --min-frames 60 --max-frames 120 --seed 11"))
        return false;
    if (!run("train --data " + data + "/train --out " + ckpt +
             " --iterations 2000 --seed 11"))
        return false;
    if (!run("segment --ckpt " + ckpt + " --data " + data +
             "/test --grammar " + data + "/train --out " +
             (dir.path / "segment.txt").string() + " --k 1000 --seed 11"))
        return false;
    const auto mof_text = run("eval --pred " +
                              (dir.path / "segment.txt").string() +
                              " --data " + data + "/test --metric mof");
    if (!mof_text)
        return false;
    if (!run("align --ckpt " + ckpt + " --data " + data + "/test --out " +
             (dir.path / "align.txt").string() + " --k 1000 --seed 11"))
        return false;
    const auto iod_text = run("eval --pred " +
                              (dir.path / "align.txt").string() + " --data " +
                              data + "/test --metric iod");
    if (!iod_text)
        return false;

    const double elapsed = seconds_since(start);
    const auto mof_value = parse_aggregate(*mof_text);
    const auto iod_value = parse_aggregate(*iod_text);
    if (!mof_value || !iod_value) {
        note("could not parse an aggregate score from eval output");
        return false;
    }
    note("segmentation MoF: " + fmt(*mof_value) + " (floor 0.80)");
    note("alignment IoD: " + fmt(*iod_value) + " (floor 0.85)");
    note("pipeline wall clock: " + fmt(elapsed, 1) + " s (limit 600)");
    return *mof_value >= 0.80 && *iod_value >= 0.85 && elapsed < 600.0;
#endif
}

// ---------------------------------------------------------------- criterion 7

int config_diffs(const TrainConfig& a, const TrainConfig& b) {
    int diffs = 0;
    diffs += a.iterations != b.iterations;
    diffs += a.lr_initial != b.lr_initial;
    diffs += a.lr_reduced != b.lr_reduced;
    diffs += a.lr_drop_iteration != b.lr_drop_iteration;
    diffs += a.ce_weight != b.ce_weight;
    diffs += a.hmm_variant != b.hmm_variant;
    diffs += a.feature_mode != b.feature_mode;
    diffs += a.regularizer != b.regularizer;
    diffs += a.hidden_units != b.hidden_units;
    diffs += a.l_min != b.l_min;
    diffs += a.prune != b.prune;
    diffs += a.seed != b.seed;
    diffs += a.full_refresh_interval != b.full_refresh_interval;
    diffs += a.checkpoint_interval != b.checkpoint_interval;
    diffs += a.checkpoint_path != b.checkpoint_path;
    diffs += a.log_path != b.log_path;
    return diffs;
}

SynthSpec benchmark_spec(std::uint64_t seed) {
    SynthSpec spec;
    spec.num_classes = 6;
    spec.feature_dim = 16;
    spec.noise_sigma = 1.0;
    spec.mean_separation = 4.0;
    spec.mean_lengths = Vector::Constant(6, 20.0);
    spec.min_set_size = 2;
    spec.max_set_size = 4;
    spec.min_frames = 60;
    spec.max_frames = 120;
    spec.videos = 60;
    spec.seed = seed;
    return spec;
}

// Test videos reuse realized training sets so grammar sampling can recover
// them, mirroring the synth tool.
Dataset benchmark_test_split(const Dataset& train, std::uint64_t seed) {
    std::mt19937_64 rng(seed ^ 0x7e57da7aULL);
    std::uniform_int_distribution<std::size_t> pick(0,
                                                    train.videos.size() - 1);
    std::vector<ActionSet> sets;
    for (int i = 0; i < 20; ++i)
        sets.push_back(train.videos[pick(rng)].set);
    SynthSpec spec = benchmark_spec(seed ^ 0x5eedf00dULL);
    spec.videos = 20;
    spec.id_prefix = "test";
    return generate_synthetic(spec, sets);
}

double benchmark_mof(const Checkpoint& ckpt, const Dataset& test,
                     const GrammarPool& pool, std::uint64_t seed) {
    std::vector<std::vector<int>> predicted, truth;
    for (std::size_t i = 0; i < test.videos.size(); ++i) {
        const Video& video = test.videos[i];
        const ForwardCache cache = forward(ckpt.net, video.features);
        const McResult result =
            mc_segment(cache, ckpt.hmm, pool, 500,
                       seed ^ (0x9E3779B97F4A7C15ULL * (i + 1)));
        predicted.push_back(result.seg.framewise());
        truth.push_back(video.gt_labels);
    }
    return mof(predicted, truth);
}

bool criterion_7() {
    TrainConfig full;
    full.iterations = 2000;
    TrainConfig noreg = full;
    noreg.regularizer = Regularizer::none;
    TrainConfig static_hmm = full;
    static_hmm.hmm_variant = HmmVariant::Static;
    if (config_diffs(full, noreg) != 1 || config_diffs(full, static_hmm) != 1) {
        note("ablation configs must differ from the full model in exactly one "
             "field");
        return false;
    }

    std::vector<double> mof_full, mof_noreg, mof_static;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const Dataset train = generate_synthetic(benchmark_spec(1000 + seed));
        const Dataset test = benchmark_test_split(train, 1000 + seed);
        const GrammarPool pool(train.sets());

        auto run = [&](TrainConfig config) {
            config.seed = seed;
            const Checkpoint ckpt = fit(train, config);
            return benchmark_mof(ckpt, test, pool, seed);
        };
        mof_full.push_back(run(full));
        mof_noreg.push_back(run(noreg));
        mof_static.push_back(run(static_hmm));
        note("seed " + std::to_string(seed) + ": full " +
             fmt(mof_full.back(), 4) + ", no-regularizer " +
             fmt(mof_noreg.back(), 4) + ", static-hmm " +
             fmt(mof_static.back(), 4));
    }

    const double med_full = median(mof_full);
    const double med_noreg = median(mof_noreg);
    const double med_static = median(mof_static);
    note("median MoF: full " + fmt(med_full, 4) + ", no-regularizer " +
         fmt(med_noreg, 4) + ", static-hmm " + fmt(med_static, 4));
    note("trend: full model " +
         std::string(med_full >= med_noreg && med_full >= med_static
                         ? "leads both ablations"
                         : "does not lead both ablations") +
         "; inversion allowance 0.02 MoF");
    return med_full >= med_noreg - 0.02 && med_full >= med_static - 0.02;
}

// ---------------------------------------------------------------- criterion 8

bool criterion_8() {
    bool ok = true;

    const std::vector<std::vector<int>> pred = {{0, 1, 1, 2}, {1, 1}};
    const std::vector<std::vector<int>> truth = {{0, 1, 2, 2}, {1, 0}};
    if (mof(pred, truth) != 4.0 / 6.0) {
        note("pooled MoF hand case mismatch");
        ok = false;
    }

    const Segmentation gt2(std::vector<Segment>{{0, 4}, {1, 4}});
    const Segmentation whole(std::vector<Segment>{{0, 8}});
    if (iod(whole, gt2) != (4.0 / 8.0 + 0.0) / 2.0) {
        note("IoD hand case mismatch");
        ok = false;
    }
    if (iod(gt2, gt2) != 1.0) {
        note("IoD identity case mismatch");
        ok = false;
    }

    const Segmentation gt3(std::vector<Segment>{{0, 5}, {1, 3}});
    const Segmentation three(std::vector<Segment>{{0, 2}, {1, 1}, {0, 5}});
    if (midpoint_hit(three, gt3) != 1.0 / 3.0) {
        note("midpoint hand case mismatch");
        ok = false;
    }
    if (midpoint_hit(gt3, gt3) != 1.0) {
        note("midpoint identity case mismatch");
        ok = false;
    }

    const TempDir dir;
    const Vocabulary vocab({"walk", "run", "jump"});
    const Predictions predictions = {
        {"a", Segmentation(std::vector<Segment>{{0, 3}, {1, 2}})},
        {"b", Segmentation(std::vector<Segment>{{2, 4}})}};
    save_predictions(dir.path / "pred.txt", predictions, vocab);
    const Predictions loaded = load_predictions(dir.path / "pred.txt", vocab);
    if (loaded.size() != predictions.size()) {
        note("prediction round trip lost videos");
        ok = false;
    } else {
        for (std::size_t i = 0; i < loaded.size(); ++i)
            if (loaded[i].first != predictions[i].first ||
                loaded[i].second != predictions[i].second) {
                note("prediction round trip altered video " +
                     predictions[i].first);
                ok = false;
            }
    }

    SynthSpec spec;
    spec.num_classes = 3;
    spec.feature_dim = 4;
    spec.videos = 3;
    spec.min_frames = 12;
    spec.max_frames = 24;
    spec.min_set_size = 2;
    spec.max_set_size = 3;
    spec.seed = 88;
    const Dataset dataset = generate_synthetic(spec);
    save_dataset(dataset, dir.path / "data");
    const Dataset reloaded = load_dataset(dir.path / "data");
    bool dataset_ok = reloaded.vocab.names() == dataset.vocab.names() &&
                      reloaded.videos.size() == dataset.videos.size();
    for (std::size_t i = 0; dataset_ok && i < dataset.videos.size(); ++i) {
        const Video& a = dataset.videos[i];
        const Video& b = reloaded.videos[i];
        dataset_ok = a.id == b.id && a.set == b.set &&
                     a.gt_labels == b.gt_labels &&
                     a.features.rows() == b.features.rows() &&
                     a.features.cols() == b.features.cols() &&
                     (a.features.array() == b.features.array()).all();
    }
    if (!dataset_ok) {
        note("dataset round trip not bit-exact");
        ok = false;
    }

    Checkpoint ckpt;
    ckpt.net = NetworkParams::init(4, 5, 3, 99);
    std::mt19937_64 rng(909);
    ckpt.hmm = testutil::random_params(3, rng);
    save_checkpoint(dir.path / "model.ckpt", ckpt);
    const Checkpoint restored = load_checkpoint(dir.path / "model.ckpt");
    const bool ckpt_ok =
        (restored.net.w1.array() == ckpt.net.w1.array()).all() &&
        (restored.net.b1.array() == ckpt.net.b1.array()).all() &&
        (restored.net.w2.array() == ckpt.net.w2.array()).all() &&
        (restored.net.b2.array() == ckpt.net.b2.array()).all() &&
        (restored.hmm.lambdas.array() == ckpt.hmm.lambdas.array()).all() &&
        (restored.hmm.priors.array() == ckpt.hmm.priors.array()).all() &&
        restored.hmm.l_min == ckpt.hmm.l_min &&
        (restored.hmm.log_transitions.array() ==
         ckpt.hmm.log_transitions.array())
            .all();
    if (!ckpt_ok) {
        note("checkpoint round trip not bit-exact");
        ok = false;
    }

    note(std::string("hand-counted metric cases and round trips: ") +
         (ok ? "all exact" : "mismatches found"));
    return ok;
}

// ---------------------------------------------------------------- criterion 9

bool criterion_9() {
    std::mt19937_64 rng(909);
    bool ok = true;
    // Doubling pairs spanning the video lengths the engine targets (60-240
    // frames); below that the trimmed inner length loop leaves a linear
    // boundary term that dominates the quadratic growth being measured.
    for (const int base_frames : {60, 90, 120}) {
        const int classes = 4;
        const HmmParams params = testutil::random_params(classes, rng);
        const ActionSet set = testutil::random_subset(classes, 3, rng);
        const ForwardCache small =
            testutil::random_cache(classes, base_frames, rng);
        const ForwardCache large =
            testutil::random_cache(classes, 2 * base_frames, rng);

        const std::uint64_t d1 = viterbi_map(small, params, set).cell_updates;
        const std::uint64_t d2 = viterbi_map(large, params, set).cell_updates;
        const double decode_ratio =
            static_cast<double>(d2) / static_cast<double>(d1);

        const std::vector<int> sequence = {set.ids()[0], set.ids()[1],
                                           set.ids()[2], set.ids()[0]};
        const std::uint64_t a1 =
            align_lengths(sequence, small, params).cell_updates;
        const std::uint64_t a2 =
            align_lengths(sequence, large, params).cell_updates;
        const double align_ratio =
            static_cast<double>(a2) / static_cast<double>(a1);

        note("T " + std::to_string(base_frames) + " -> " +
             std::to_string(2 * base_frames) + ": decode x" +
             fmt(decode_ratio, 3) + ", align x" + fmt(align_ratio, 3) +
             " (limit 4.2)");
        ok = ok && decode_ratio <= 4.2 && align_ratio <= 4.2;
    }
    return ok;
}

}  // namespace

int main(int argc, char** argv) {
    int only = 0;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--criterion" && i + 1 < argc) {
            only = std::atoi(argv[++i]);
            if (only < 1 || only > 9) {
                std::cerr << "criterion must lie in 1..9\n";
                return 2;
            }
        } else {
            std::cerr << "usage: acceptance [--criterion N]\n";
            return 2;
        }
    }

    using Criterion = bool (*)();
    const Criterion criteria[] = {criterion_1, criterion_2, criterion_3,
                                  criterion_4, criterion_5, criterion_6,
                                  criterion_7, criterion_8, criterion_9};
    const char* titles[] = {
        "segment-level Viterbi matches exhaustive search",
        "coverage decoding satisfies the set constraint",
        "analytic gradients match finite differences",
        "duration estimators match an extended-precision oracle",
        "sampled grammars are legal and alignment is exact",
        "synthetic end-to-end training and inference quality",
        "ablation ordering across five seeds",
        "metric hand cases and format round trips",
        "DP cell updates scale quadratically in video length",
    };

    bool all_pass = true;
    for (int n = 1; n <= 9; ++n) {
        if (only != 0 && only != n)
            continue;
        std::cout << "criterion " << n << ": " << titles[n - 1] << "\n";
        bool pass = false;
        try {
            pass = criteria[n - 1]();
        } catch (const std::exception& e) {
            note(std::string("unhandled exception: ") + e.what());
        }
        std::cout << "CRITERION " << n << (pass ? " PASS" : " FAIL") << "\n";
        all_pass = all_pass && pass;
    }
    return all_pass ? 0 : 1;
}
