#ifndef SCV_DATA_HPP
#define SCV_DATA_HPP

#include "scv/types.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace scv {

struct Video {
    std::string id;
    FeatureSequence features;   // d x T
    ActionSet set;              // ground-truth action set
    std::vector<int> gt_labels; // framewise ground truth; empty when absent

    int frames() const { return static_cast<int>(features.cols()); }
};

struct Dataset {
    Vocabulary vocab;
    std::vector<Video> videos;

    int feature_dim() const {
        return videos.empty() ? 0 : static_cast<int>(videos[0].features.rows());
    }
    std::vector<ActionSet> sets() const;
    std::vector<int> video_lengths() const;
    const Video* find(const std::string& id) const;
};

// Directory layout: classes.txt (one name per line, line order = class id,
// optional "background <name>" directive), sets.txt (video_id TAB
// comma-separated class names), features/<id>.fvec ("FVC1", u32 d, u32 T,
// d*T column-major f32), optional labels/<id>.txt (one name per frame).
// A declared background class is added to every video's set.
Dataset load_dataset(const std::filesystem::path& root);
void save_dataset(const Dataset& dataset, const std::filesystem::path& root);

struct SynthSpec {
    int num_classes = 6;
    int feature_dim = 16;
    double noise_sigma = 1.0;
    // Pairwise distance between auto-generated class means; defaults to
    // max(4*sigma, 1) when <= 0.
    double mean_separation = 0.0;
    Matrix means;           // d x num_classes; auto-generated when empty
    Vector mean_lengths;    // expected frames per segment; default 20 each
    int min_set_size = 2;
    int max_set_size = 4;
    int min_frames = 60;    // target length drawn uniformly from this range;
    int max_frames = 120;   // the realized T may overshoot by one segment
    int videos = 60;
    // Tempo mix: this fraction of videos is cut faster, with segment means
    // scaled by fast_cut_scale. Their many short instances pull the corpus
    // per-class length means below a typical video's realized share, giving
    // budgeted sequence sampling slack on normally cut videos.
    double fast_cut_fraction = 0.15;
    double fast_cut_scale = 0.4;
    std::uint64_t seed = 0;
    std::string id_prefix = "vid";
};

// Deterministic, mutually distant class means: scaled coordinate axes so
// every pair is exactly `separation` apart. Requires num_classes <= dim.
Matrix default_means(int feature_dim, int num_classes, double separation);

// Per video: sample an action set, a ground-truth segmentation covering it
// (random legal order, shifted-Poisson lengths), then one feature per frame
// as class mean + N(0, sigma^2 I), quantized to f32 so saving is lossless.
Dataset generate_synthetic(const SynthSpec& spec);

// Same, but with the action set of every video fixed by the caller.
Dataset generate_synthetic(const SynthSpec& spec,
                           const std::vector<ActionSet>& sets);

}  // namespace scv

#endif
