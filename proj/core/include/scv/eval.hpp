#ifndef SCV_EVAL_HPP
#define SCV_EVAL_HPP

#include "scv/types.hpp"

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace scv {

// Pooled frame accuracy: correctly labeled frames / total frames across all
// videos. Lengths must match per video.
double mof(const std::vector<std::vector<int>>& predicted,
           const std::vector<std::vector<int>>& ground_truth);

// Per ground-truth segment, the same-class detection with the largest
// overlap contributes |GT∩D| / |D| (0 when nothing overlaps); the score is
// the average over ground-truth segments.
double iod(const Segmentation& predicted, const Segmentation& ground_truth);

// Share of detections whose midpoint frame (start + length/2) lies inside a
// same-class ground-truth segment; each ground-truth segment validates at
// most one detection, greedily in detection order.
double midpoint_hit(const Segmentation& predicted,
                    const Segmentation& ground_truth);

struct EvalReport {
    std::string metric;
    std::vector<std::string> video_ids;
    std::vector<double> per_video;
    double aggregate = 0.0;

    std::string to_text() const;
};

// aggregate = pooled frame accuracy, or the frame-unweighted video mean when
// per_video_mean is set.
EvalReport mof_report(const std::vector<std::string>& ids,
                      const std::vector<std::vector<int>>& predicted,
                      const std::vector<std::vector<int>>& ground_truth,
                      bool per_video_mean = false);

// aggregate = mean of per-video scores.
EvalReport iod_report(const std::vector<std::string>& ids,
                      const std::vector<Segmentation>& predicted,
                      const std::vector<Segmentation>& ground_truth);
EvalReport midpoint_report(const std::vector<std::string>& ids,
                           const std::vector<Segmentation>& predicted,
                           const std::vector<Segmentation>& ground_truth);

// One line per video: `video_id<TAB>class:length,class:length,...` with
// class names from the vocabulary.
using Predictions = std::vector<std::pair<std::string, Segmentation>>;
void save_predictions(const std::filesystem::path& file,
                      const Predictions& predictions, const Vocabulary& vocab);
Predictions load_predictions(const std::filesystem::path& file,
                             const Vocabulary& vocab);

// Binary PPM strip, one pixel column per frame, one color per class; when
// ground truth is given the image carries a second band below the prediction.
void render_strip(const std::filesystem::path& file,
                  const Segmentation& predicted,
                  const Segmentation* ground_truth, int band_height = 24);

}  // namespace scv

#endif
