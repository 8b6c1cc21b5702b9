#include "scv/checkpoint.hpp"
#include "scv/data.hpp"
#include "scv/eval.hpp"
#include "scv/infer.hpp"
#include "scv/nnet.hpp"
#include "scv/train.hpp"
#include "scv/types.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <random>
#include <string>

namespace fs = std::filesystem;

namespace {

// Bad invocations (including inputs that do not exist) exit with code 2.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void require_exists(const fs::path& path, const std::string& what) {
    if (!fs::exists(path))
        throw UsageError(what + " '" + path.string() + "' does not exist");
}

std::uint64_t video_seed(std::uint64_t seed, std::size_t index) {
    return seed ^ (0x9E3779B97F4A7C15ULL * (index + 1));
}

struct SynthOpts {
    std::string out;
    int videos = 60;
    int test_videos = 20;
    int classes = 6;
    int dim = 16;
    double sigma = 1.0;
    double separation = 0.0;
    double mean_length = 20.0;
    int min_set = 2;
    int max_set = 4;
    int min_frames = 60;
    int max_frames = 120;
    std::uint64_t seed = 0;
};

void run_synth(const SynthOpts& opt) {
    scv::SynthSpec spec;
    spec.num_classes = opt.classes;
    spec.feature_dim = opt.dim;
    spec.noise_sigma = opt.sigma;
    spec.mean_separation = opt.separation;
    spec.mean_lengths = scv::Vector::Constant(opt.classes, opt.mean_length);
    spec.min_set_size = opt.min_set;
    spec.max_set_size = opt.max_set;
    spec.min_frames = opt.min_frames;
    spec.max_frames = opt.max_frames;
    spec.videos = opt.videos;
    spec.seed = opt.seed;

    const scv::Dataset train = scv::generate_synthetic(spec);
    scv::save_dataset(train, fs::path(opt.out) / "train");
    std::cout << "wrote " << train.videos.size() << " training videos to "
              << (fs::path(opt.out) / "train").string() << "\n";

    if (opt.test_videos > 0) {
        // Test sets are drawn from the realized training sets so inference
        // by grammar sampling can recover them.
        std::mt19937_64 rng(opt.seed ^ 0x7e57da7aULL);
        std::uniform_int_distribution<std::size_t> pick(
            0, train.videos.size() - 1);
        std::vector<scv::ActionSet> test_sets;
        test_sets.reserve(static_cast<std::size_t>(opt.test_videos));
        for (int i = 0; i < opt.test_videos; ++i)
            test_sets.push_back(train.videos[pick(rng)].set);

        scv::SynthSpec test_spec = spec;
        test_spec.videos = opt.test_videos;
        test_spec.seed = opt.seed ^ 0x5eedf00dULL;
        test_spec.id_prefix = "test";
        const scv::Dataset test = scv::generate_synthetic(test_spec, test_sets);
        scv::save_dataset(test, fs::path(opt.out) / "test");
        std::cout << "wrote " << test.videos.size() << " test videos to "
                  << (fs::path(opt.out) / "test").string() << "\n";
    }
}

struct TrainOpts {
    std::string data;
    std::string out;
    std::string log;
    int iterations = 50000;
    double lr = 0.01;
    double lr_reduced = 0.001;
    int lr_drop = 10000;
    double ce_weight = 0.5;
    std::string hmm = "dynamic";
    std::string reg = "npair";
    std::string feature_mode = "hard";
    int hidden = 256;
    int lmin = 1;
    bool prune = false;
    std::uint64_t seed = 0;
    int checkpoint_interval = 0;
    int refresh = 1000;
};

void run_train(const TrainOpts& opt) {
    require_exists(opt.data, "dataset");
    const scv::Dataset dataset = scv::load_dataset(opt.data);

    scv::TrainConfig config;
    config.iterations = opt.iterations;
    config.lr_initial = opt.lr;
    config.lr_reduced = opt.lr_reduced;
    config.lr_drop_iteration = opt.lr_drop;
    config.ce_weight = opt.ce_weight;
    config.hmm_variant = opt.hmm == "static" ? scv::HmmVariant::Static
                                             : scv::HmmVariant::Dynamic;
    config.regularizer = opt.reg == "none"   ? scv::Regularizer::none
                         : opt.reg == "base" ? scv::Regularizer::base
                                             : scv::Regularizer::npair;
    config.feature_mode = opt.feature_mode == "soft" ? scv::FeatureMode::soft
                                                     : scv::FeatureMode::hard;
    config.hidden_units = opt.hidden;
    config.l_min = opt.lmin;
    config.prune = opt.prune;
    config.seed = opt.seed;
    config.full_refresh_interval = opt.refresh;
    config.checkpoint_interval = opt.checkpoint_interval;
    config.checkpoint_path = opt.out;
    config.log_path = opt.log;

    const scv::Checkpoint ckpt = scv::fit(dataset, config);
    scv::save_checkpoint(opt.out, ckpt);
    std::cout << "wrote checkpoint " << opt.out << " after "
              << config.iterations << " iterations\n";
}

void check_compatibility(const scv::Checkpoint& ckpt,
                         const scv::Dataset& dataset) {
    if (ckpt.net.input_dim() != dataset.feature_dim())
        throw std::runtime_error(
            "checkpoint expects " + std::to_string(ckpt.net.input_dim()) +
            "-dimensional features, dataset has " +
            std::to_string(dataset.feature_dim()));
    if (ckpt.net.num_classes() != dataset.vocab.size())
        throw std::runtime_error(
            "checkpoint has " + std::to_string(ckpt.net.num_classes()) +
            " classes, dataset has " + std::to_string(dataset.vocab.size()));
}

struct SegmentOpts {
    std::string ckpt;
    std::string data;
    std::string grammar;
    std::string out;
    int k = 1000;
    std::uint64_t seed = 0;
    bool weighted_pool = false;
};

void run_segment(const SegmentOpts& opt) {
    require_exists(opt.ckpt, "checkpoint");
    require_exists(opt.data, "dataset");
    require_exists(opt.grammar, "grammar dataset");
    const scv::Checkpoint ckpt = scv::load_checkpoint(opt.ckpt);
    const scv::Dataset dataset = scv::load_dataset(opt.data);
    const scv::Dataset grammar = scv::load_dataset(opt.grammar);
    check_compatibility(ckpt, dataset);
    if (grammar.vocab.names() != dataset.vocab.names())
        throw std::runtime_error(
            "--grammar and --data declare different vocabularies");

    const scv::GrammarPool pool(grammar.sets());
    scv::Predictions predictions;
    for (std::size_t i = 0; i < dataset.videos.size(); ++i) {
        const scv::Video& video = dataset.videos[i];
        const scv::ForwardCache cache = scv::forward(ckpt.net, video.features);
        const scv::McResult result =
            scv::mc_segment(cache, ckpt.hmm, pool, opt.k,
                            video_seed(opt.seed, i), opt.weighted_pool);
        predictions.emplace_back(video.id, result.seg);
    }
    scv::save_predictions(opt.out, predictions, dataset.vocab);
    std::cout << "wrote " << predictions.size() << " predictions to "
              << opt.out << "\n";
}

struct AlignOpts {
    std::string ckpt;
    std::string data;
    std::string out;
    int k = 1000;
    std::uint64_t seed = 0;
};

void run_align(const AlignOpts& opt) {
    require_exists(opt.ckpt, "checkpoint");
    require_exists(opt.data, "dataset");
    const scv::Checkpoint ckpt = scv::load_checkpoint(opt.ckpt);
    const scv::Dataset dataset = scv::load_dataset(opt.data);
    check_compatibility(ckpt, dataset);

    scv::Predictions predictions;
    for (std::size_t i = 0; i < dataset.videos.size(); ++i) {
        const scv::Video& video = dataset.videos[i];
        const scv::ForwardCache cache = scv::forward(ckpt.net, video.features);
        const scv::McResult result = scv::mc_align(
            cache, ckpt.hmm, video.set, opt.k, video_seed(opt.seed, i));
        predictions.emplace_back(video.id, result.seg);
    }
    scv::save_predictions(opt.out, predictions, dataset.vocab);
    std::cout << "wrote " << predictions.size() << " predictions to "
              << opt.out << "\n";
}

struct EvalOpts {
    std::string pred;
    std::string data;
    std::string metric = "all";
    bool per_video = false;
};

void run_eval(const EvalOpts& opt) {
    require_exists(opt.pred, "predictions file");
    require_exists(opt.data, "dataset");
    const scv::Dataset dataset = scv::load_dataset(opt.data);
    const scv::Predictions predictions =
        scv::load_predictions(opt.pred, dataset.vocab);
    if (predictions.empty())
        throw std::runtime_error("no predictions in " + opt.pred);

    std::vector<std::string> ids;
    std::vector<std::vector<int>> pred_labels, gt_labels;
    std::vector<scv::Segmentation> pred_segs, gt_segs;
    for (const auto& [id, seg] : predictions) {
        const scv::Video* video = dataset.find(id);
        if (!video)
            throw std::runtime_error("prediction for unknown video '" + id +
                                     "'");
        if (video->gt_labels.empty())
            throw std::runtime_error("video '" + id +
                                     "' has no ground-truth labels");
        if (seg.total_frames() != video->frames())
            throw std::runtime_error(
                "prediction for '" + id + "' spans " +
                std::to_string(seg.total_frames()) + " frames, video has " +
                std::to_string(video->frames()));
        ids.push_back(id);
        pred_labels.push_back(seg.framewise());
        gt_labels.push_back(video->gt_labels);
        pred_segs.push_back(seg);
        gt_segs.push_back(scv::Segmentation::from_framewise(video->gt_labels));
    }

    bool first = true;
    auto emit = [&first](const scv::EvalReport& report) {
        if (!first)
            std::cout << "\n";
        std::cout << report.to_text();
        first = false;
    };
    if (opt.metric == "mof" || opt.metric == "all")
        emit(scv::mof_report(ids, pred_labels, gt_labels, opt.per_video));
    if (opt.metric == "iod" || opt.metric == "all")
        emit(scv::iod_report(ids, pred_segs, gt_segs));
    if (opt.metric == "midpoint" || opt.metric == "all")
        emit(scv::midpoint_report(ids, pred_segs, gt_segs));
}

struct RenderOpts {
    std::string pred;
    std::string data;
    std::string out;
    int band_height = 24;
};

void run_render(const RenderOpts& opt) {
    require_exists(opt.pred, "predictions file");
    require_exists(opt.data, "dataset");
    const scv::Dataset dataset = scv::load_dataset(opt.data);
    const scv::Predictions predictions =
        scv::load_predictions(opt.pred, dataset.vocab);
    fs::create_directories(opt.out);

    for (const auto& [id, seg] : predictions) {
        const scv::Video* video = dataset.find(id);
        if (!video)
            throw std::runtime_error("prediction for unknown video '" + id +
                                     "'");
        scv::Segmentation gt;
        const bool have_gt = !video->gt_labels.empty();
        if (have_gt)
            gt = scv::Segmentation::from_framewise(video->gt_labels);
        scv::render_strip(fs::path(opt.out) / (id + ".ppm"), seg,
                          have_gt ? &gt : nullptr, opt.band_height);
    }
    std::cout << "wrote " << predictions.size() << " images to " << opt.out
              << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Set-supervised temporal action segmentation"};
    app.require_subcommand(1);

    SynthOpts sy;
    auto* synth = app.add_subcommand(
        "synth", "Generate a synthetic train/test dataset");
    synth->add_option("--out", sy.out, "Output directory")->required();
    synth->add_option("--videos", sy.videos, "Training videos");
    synth->add_option("--test-videos", sy.test_videos,
                      "Test videos (0 disables the test split)");
    synth->add_option("--classes", sy.classes, "Vocabulary size");
    synth->add_option("--dim", sy.dim, "Feature dimension");
    synth->add_option("--sigma", sy.sigma, "Frame noise scale");
    synth->add_option("--separation", sy.separation,
                      "Pairwise mean distance (0: max(4*sigma, 1))");
    synth->add_option("--mean-length", sy.mean_length,
                      "Expected segment length");
    synth->add_option("--min-set", sy.min_set, "Smallest action set");
    synth->add_option("--max-set", sy.max_set, "Largest action set");
    synth->add_option("--min-frames", sy.min_frames, "Target length lower bound");
    synth->add_option("--max-frames", sy.max_frames, "Target length upper bound");
    synth->add_option("--seed", sy.seed, "Random seed");

    TrainOpts tr;
    auto* train = app.add_subcommand("train", "Train a model on a dataset");
    train->add_option("--data", tr.data, "Dataset directory")->required();
    train->add_option("--out", tr.out, "Checkpoint path")->required();
    train->add_option("--log", tr.log, "JSONL iteration log path");
    train->add_option("--iterations", tr.iterations, "Training iterations");
    train->add_option("--lr", tr.lr, "Initial learning rate");
    train->add_option("--lr-reduced", tr.lr_reduced, "Reduced learning rate");
    train->add_option("--lr-drop", tr.lr_drop,
                      "Iteration at which the rate drops");
    train->add_option("--ce-weight", tr.ce_weight,
                      "Cross-entropy share of the loss");
    train->add_option("--hmm", tr.hmm, "HMM parameter variant")
        ->check(CLI::IsMember({"static", "dynamic"}));
    train->add_option("--reg", tr.reg, "Feature regularizer")
        ->check(CLI::IsMember({"none", "base", "npair"}));
    train->add_option("--feature-mode", tr.feature_mode,
                      "Class feature construction")
        ->check(CLI::IsMember({"hard", "soft"}));
    train->add_option("--hidden", tr.hidden, "Hidden layer width");
    train->add_option("--lmin", tr.lmin, "Minimum expected segment length");
    train->add_flag("--prune", tr.prune, "Prune the decoding DP");
    train->add_option("--seed", tr.seed, "Random seed");
    train->add_option("--checkpoint-interval", tr.checkpoint_interval,
                      "Also write the checkpoint every N iterations");
    train->add_option("--refresh", tr.refresh,
                      "Full dynamic-count rebuild interval");

    SegmentOpts se;
    auto* segment = app.add_subcommand(
        "segment", "Segment videos by Monte Carlo grammar sampling");
    segment->add_option("--ckpt", se.ckpt, "Checkpoint path")->required();
    segment->add_option("--data", se.data, "Dataset directory")->required();
    segment->add_option("--grammar", se.grammar,
                        "Training dataset whose sets form the grammar pool")
        ->required();
    segment->add_option("--out", se.out, "Predictions path")->required();
    segment->add_option("--k", se.k, "Accepted candidates per video");
    segment->add_option("--seed", se.seed, "Random seed");
    segment->add_flag("--weighted-pool", se.weighted_pool,
                      "Sample sets by training multiplicity");

    AlignOpts al;
    auto* align = app.add_subcommand(
        "align", "Segment videos given their ground-truth action sets");
    align->add_option("--ckpt", al.ckpt, "Checkpoint path")->required();
    align->add_option("--data", al.data, "Dataset directory")->required();
    align->add_option("--out", al.out, "Predictions path")->required();
    align->add_option("--k", al.k, "Accepted candidates per video");
    align->add_option("--seed", al.seed, "Random seed");

    EvalOpts ev;
    auto* eval = app.add_subcommand(
        "eval", "Score predictions against ground-truth labels");
    eval->add_option("--pred", ev.pred, "Predictions path")->required();
    eval->add_option("--data", ev.data, "Dataset directory")->required();
    eval->add_option("--metric", ev.metric, "Metric to report")
        ->check(CLI::IsMember({"mof", "iod", "midpoint", "all"}));
    eval->add_flag("--per-video", ev.per_video,
                   "Average frame accuracy per video instead of pooling");

    RenderOpts re;
    auto* render = app.add_subcommand(
        "render", "Render predictions as segmentation strip images");
    render->add_option("--pred", re.pred, "Predictions path")->required();
    render->add_option("--data", re.data, "Dataset directory")->required();
    render->add_option("--out", re.out, "Output directory")->required();
    render->add_option("--band-height", re.band_height,
                       "Pixel height per band");

    synth->callback([&] { run_synth(sy); });
    train->callback([&] { run_train(tr); });
    segment->callback([&] { run_segment(se); });
    align->callback([&] { run_align(al); });
    eval->callback([&] { run_eval(ev); });
    render->callback([&] { run_render(re); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0)
            return app.exit(e);  // --help and friends
        std::cerr << "scvseg: " << e.what() << "\n";
        return 2;
    } catch (const UsageError& e) {
        std::cerr << "scvseg: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "scvseg: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
