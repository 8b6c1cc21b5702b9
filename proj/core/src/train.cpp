#include "scv/train.hpp"

#include "scv/viterbi.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace scv {

namespace {

// keeps the pair-sampling stream independent of the weight-init stream
constexpr std::uint64_t kLoopSeedSalt = 0xda3e39cb94b95bdbULL;

}  // namespace

std::vector<std::pair<int, int>> sharing_pairs(
    const std::vector<ActionSet>& sets) {
    std::vector<std::pair<int, int>> pairs;
    for (std::size_t i = 0; i < sets.size(); ++i)
        for (std::size_t j = i + 1; j < sets.size(); ++j)
            if (!sets[i].intersect(sets[j]).empty())
                pairs.emplace_back(static_cast<int>(i), static_cast<int>(j));
    if (pairs.empty())
        throw std::invalid_argument(
            "no two videos share an action class; paired training is "
            "impossible");
    return pairs;
}

std::pair<int, int> sample_pair(const std::vector<std::pair<int, int>>& pairs,
                                std::mt19937_64& rng) {
    if (pairs.empty())
        throw std::invalid_argument("no candidate pairs");
    std::uniform_int_distribution<std::size_t> pick(0, pairs.size() - 1);
    return pairs[pick(rng)];
}

TrainState init_state(const Dataset& dataset, const TrainConfig& config) {
    if (dataset.videos.empty())
        throw std::invalid_argument("dataset has no videos");
    if (config.iterations < 0)
        throw std::invalid_argument("iteration count must be >= 0");
    if (!(config.lr_initial > 0.0) || !(config.lr_reduced > 0.0))
        throw std::invalid_argument("learning rates must be positive");
    if (config.ce_weight < 0.0 || config.ce_weight > 1.0)
        throw std::invalid_argument("ce weight must lie in [0, 1]");
    if (config.hidden_units < 1)
        throw std::invalid_argument("hidden width must be >= 1");
    for (const Video& video : dataset.videos)
        if (video.frames() < static_cast<int>(video.set.size()))
            throw CoverageInfeasibleError(
                "video " + video.id + " is shorter than its action set");

    const int num_classes = dataset.vocab.size();
    TrainState state;
    state.static_params = estimate_static(dataset.sets(),
                                          dataset.video_lengths(), num_classes,
                                          config.l_min);
    state.params = state.static_params;
    state.net = NetworkParams::init(dataset.feature_dim(), config.hidden_units,
                                    num_classes, config.seed);
    state.rng.seed(config.seed ^ kLoopSeedSalt);

    state.bank.reserve(dataset.videos.size());
    for (const Video& video : dataset.videos) {
        const ForwardCache cache = forward(state.net, video.features);
        state.bank.push_back(
            scv_decode(cache, state.static_params, video.set, config.prune).seg);
    }
    state.counts = DynamicCounts::from_bank(state.bank, num_classes);
    return state;
}

IterationReport train_iteration(TrainState& state, const Dataset& dataset,
                                std::pair<int, int> pair,
                                const TrainConfig& config) {
    const auto [va, vb] = pair;
    const int count = static_cast<int>(dataset.videos.size());
    if (va < 0 || vb < 0 || va >= count || vb >= count || va == vb)
        throw std::invalid_argument("invalid video pair");

    const Video& a = dataset.videos[static_cast<std::size_t>(va)];
    const Video& b = dataset.videos[static_cast<std::size_t>(vb)];
    const int iteration = state.iteration + 1;
    const double lr = iteration < config.lr_drop_iteration ? config.lr_initial
                                                           : config.lr_reduced;

    const ForwardCache cache_a = forward(state.net, a.features);
    const ForwardCache cache_b = forward(state.net, b.features);
    const ScvResult scv_a = scv_decode(cache_a, state.params, a.set, config.prune);
    const ScvResult scv_b = scv_decode(cache_b, state.params, b.set, config.prune);
    const std::vector<int> labels_a = scv_a.seg.framewise();
    const std::vector<int> labels_b = scv_b.seg.framewise();

    const CrossEntropyResult ce_a = ce_loss_and_grad(cache_a, labels_a);
    const CrossEntropyResult ce_b = ce_loss_and_grad(cache_b, labels_b);

    IterationReport report;
    report.iteration = iteration;
    report.lr = lr;
    report.flips = scv_a.flip_count() + scv_b.flip_count();
    report.ce = ce_a.loss + ce_b.loss;

    Matrix gf_a, gf_b, gh_a, gh_b;
    if (config.regularizer == Regularizer::none) {
        report.total = report.ce;
        gf_a = ce_a.grad_f;
        gf_b = ce_b.grad_f;
    } else {
        const NpairResult np = npair_loss_and_grad(
            cache_a, cache_b, a.set, b.set, &labels_a, &labels_b,
            config.feature_mode, config.regularizer == Regularizer::base);
        report.npair = np.loss;
        report.total = total_loss(report.ce, np.loss, config.ce_weight);
        const double w = config.ce_weight;
        gf_a = w * ce_a.grad_f;
        gf_b = w * ce_b.grad_f;
        // Hard feature mode leaves the softmax-path gradient empty (zero).
        if (np.grad_f_a.size() > 0)
            gf_a += (1.0 - w) * np.grad_f_a;
        if (np.grad_f_b.size() > 0)
            gf_b += (1.0 - w) * np.grad_f_b;
        gh_a = (1.0 - w) * np.grad_h_a;
        gh_b = (1.0 - w) * np.grad_h_b;
    }

    if (!std::isfinite(report.total))
        throw std::runtime_error(
            "non-finite loss at iteration " + std::to_string(iteration) +
            " on videos " + a.id + ", " + b.id + " (ce=" +
            std::to_string(report.ce) + ", npair=" +
            std::to_string(report.npair) + ")");

    Gradients grads = backprop(state.net, a.features, cache_a, gf_a, gh_a);
    grads += backprop(state.net, b.features, cache_b, gf_b, gh_b);
    sgd_step(state.net, grads, lr);

    state.counts.remove(state.bank[static_cast<std::size_t>(va)]);
    state.bank[static_cast<std::size_t>(va)] = scv_a.seg;
    state.counts.add(scv_a.seg);
    state.counts.remove(state.bank[static_cast<std::size_t>(vb)]);
    state.bank[static_cast<std::size_t>(vb)] = scv_b.seg;
    state.counts.add(scv_b.seg);

    if (config.full_refresh_interval > 0 &&
        iteration % config.full_refresh_interval == 0)
        state.counts =
            DynamicCounts::from_bank(state.bank, dataset.vocab.size());
    if (config.hmm_variant == HmmVariant::Dynamic)
        state.params = state.counts.to_params(state.static_params);

    state.iteration = iteration;
    return report;
}

Checkpoint fit(const Dataset& dataset, const TrainConfig& config,
               const IterationCallback& on_iteration) {
    TrainState state = init_state(dataset, config);

    std::ofstream log;
    if (!config.log_path.empty()) {
        log.open(config.log_path, std::ios::trunc);
        if (!log)
            throw LoadError("cannot write training log " + config.log_path);
    }

    std::vector<std::pair<int, int>> pairs;
    if (config.iterations > 0)
        pairs = sharing_pairs(dataset.sets());

    for (int i = 0; i < config.iterations; ++i) {
        const auto pair = sample_pair(pairs, state.rng);
        const IterationReport report =
            train_iteration(state, dataset, pair, config);

        if (log.is_open()) {
            char line[256];
            std::snprintf(line, sizeof(line),
                          "{\"iteration\":%d,\"ce\":%.17g,\"npair\":%.17g,"
                          "\"total\":%.17g,\"lr\":%g,\"flips\":%d}\n",
                          report.iteration, report.ce, report.npair,
                          report.total, report.lr, report.flips);
            log << line;
        }
        if (on_iteration)
            on_iteration(report);
        if (config.checkpoint_interval > 0 && !config.checkpoint_path.empty() &&
            report.iteration % config.checkpoint_interval == 0)
            save_checkpoint(config.checkpoint_path, {state.net, state.params});
    }
    return {state.net, state.params};
}

}  // namespace scv
