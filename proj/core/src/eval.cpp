#include "scv/eval.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace scv {

namespace {

struct Interval {
    int cls;
    int start;
    int end;  // exclusive
};

std::vector<Interval> intervals(const Segmentation& seg) {
    std::vector<Interval> out;
    out.reserve(seg.size());
    int start = 0;
    for (const Segment& s : seg.segments()) {
        out.push_back({s.cls, start, start + s.length});
        start += s.length;
    }
    return out;
}

int overlap(const Interval& a, const Interval& b) {
    return std::max(0, std::min(a.end, b.end) - std::max(a.start, b.start));
}

std::string format_value(double value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", value);
    return buf;
}

}  // namespace

double mof(const std::vector<std::vector<int>>& predicted,
           const std::vector<std::vector<int>>& ground_truth) {
    if (predicted.size() != ground_truth.size())
        throw std::invalid_argument("one prediction per video required");
    if (predicted.empty())
        throw std::invalid_argument("at least one video required");
    long correct = 0;
    long total = 0;
    for (std::size_t v = 0; v < predicted.size(); ++v) {
        if (predicted[v].size() != ground_truth[v].size())
            throw std::invalid_argument(
                "prediction and ground truth lengths differ");
        total += static_cast<long>(predicted[v].size());
        for (std::size_t t = 0; t < predicted[v].size(); ++t)
            correct += predicted[v][t] == ground_truth[v][t];
    }
    if (total == 0)
        throw std::invalid_argument("no frames to evaluate");
    return static_cast<double>(correct) / static_cast<double>(total);
}

double iod(const Segmentation& predicted, const Segmentation& ground_truth) {
    if (predicted.empty() || ground_truth.empty())
        throw std::invalid_argument("segmentations must be nonempty");
    const std::vector<Interval> pred = intervals(predicted);
    const std::vector<Interval> gt = intervals(ground_truth);

    double sum = 0.0;
    for (const Interval& g : gt) {
        int best_overlap = 0;
        double best_value = 0.0;
        for (const Interval& d : pred) {
            if (d.cls != g.cls)
                continue;
            const int o = overlap(g, d);
            if (o > best_overlap) {
                best_overlap = o;
                best_value = static_cast<double>(o) /
                             static_cast<double>(d.end - d.start);
            }
        }
        sum += best_value;
    }
    return sum / static_cast<double>(gt.size());
}

double midpoint_hit(const Segmentation& predicted,
                    const Segmentation& ground_truth) {
    if (predicted.empty() || ground_truth.empty())
        throw std::invalid_argument("segmentations must be nonempty");
    const std::vector<Interval> pred = intervals(predicted);
    const std::vector<Interval> gt = intervals(ground_truth);

    std::vector<bool> used(gt.size(), false);
    int correct = 0;
    for (const Interval& d : pred) {
        const int mid = d.start + (d.end - d.start) / 2;
        for (std::size_t i = 0; i < gt.size(); ++i) {
            if (used[i] || gt[i].cls != d.cls)
                continue;
            if (mid >= gt[i].start && mid < gt[i].end) {
                used[i] = true;
                ++correct;
                break;
            }
        }
    }
    return static_cast<double>(correct) / static_cast<double>(pred.size());
}

std::string EvalReport::to_text() const {
    std::ostringstream out;
    out << "metric: " << metric << "\n";
    out << "videos: " << video_ids.size() << "\n";
    out << "aggregate: " << format_value(aggregate) << "\n";
    for (std::size_t i = 0; i < video_ids.size(); ++i)
        out << video_ids[i] << ": " << format_value(per_video[i]) << "\n";
    return out.str();
}

EvalReport mof_report(const std::vector<std::string>& ids,
                      const std::vector<std::vector<int>>& predicted,
                      const std::vector<std::vector<int>>& ground_truth,
                      bool per_video_mean) {
    if (ids.size() != predicted.size())
        throw std::invalid_argument("one id per video required");
    EvalReport report;
    report.metric = per_video_mean ? "mof-video-mean" : "mof";
    report.video_ids = ids;
    for (std::size_t v = 0; v < predicted.size(); ++v)
        report.per_video.push_back(mof({predicted[v]}, {ground_truth[v]}));
    if (per_video_mean) {
        double sum = 0.0;
        for (double value : report.per_video)
            sum += value;
        report.aggregate = sum / static_cast<double>(report.per_video.size());
    } else {
        report.aggregate = mof(predicted, ground_truth);
    }
    return report;
}

namespace {

EvalReport segment_metric_report(
    const std::string& name, double (*metric)(const Segmentation&, const Segmentation&),
    const std::vector<std::string>& ids, const std::vector<Segmentation>& predicted,
    const std::vector<Segmentation>& ground_truth) {
    if (ids.size() != predicted.size() || predicted.size() != ground_truth.size())
        throw std::invalid_argument("one prediction per video required");
    if (ids.empty())
        throw std::invalid_argument("at least one video required");
    EvalReport report;
    report.metric = name;
    report.video_ids = ids;
    double sum = 0.0;
    for (std::size_t v = 0; v < predicted.size(); ++v) {
        report.per_video.push_back(metric(predicted[v], ground_truth[v]));
        sum += report.per_video.back();
    }
    report.aggregate = sum / static_cast<double>(predicted.size());
    return report;
}

}  // namespace

EvalReport iod_report(const std::vector<std::string>& ids,
                      const std::vector<Segmentation>& predicted,
                      const std::vector<Segmentation>& ground_truth) {
    return segment_metric_report("iod", iod, ids, predicted, ground_truth);
}

EvalReport midpoint_report(const std::vector<std::string>& ids,
                           const std::vector<Segmentation>& predicted,
                           const std::vector<Segmentation>& ground_truth) {
    return segment_metric_report("midpoint-hit", midpoint_hit, ids, predicted,
                                 ground_truth);
}

void save_predictions(const fs::path& file, const Predictions& predictions,
                      const Vocabulary& vocab) {
    std::ofstream out(file);
    if (!out)
        throw LoadError("cannot write " + file.string());
    for (const auto& [id, seg] : predictions) {
        out << id << '\t';
        const auto& segments = seg.segments();
        for (std::size_t i = 0; i < segments.size(); ++i) {
            out << (i ? "," : "") << vocab.name(segments[i].cls) << ':'
                << segments[i].length;
        }
        out << "\n";
    }
    if (!out)
        throw LoadError("cannot write " + file.string());
}

Predictions load_predictions(const fs::path& file, const Vocabulary& vocab) {
    std::ifstream in(file);
    if (!in)
        throw LoadError("cannot open " + file.string());
    Predictions predictions;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        const std::string where =
            file.filename().string() + ":" + std::to_string(line_no) + ": ";
        const auto tab = line.find('\t');
        if (tab == std::string::npos)
            throw LoadError(where + "expected video_id<TAB>class:length,...");
        const std::string id = line.substr(0, tab);
        for (const auto& existing : predictions)
            if (existing.first == id)
                throw LoadError(where + "duplicate video '" + id + "'");

        std::vector<Segment> segments;
        std::istringstream fields(line.substr(tab + 1));
        std::string field;
        while (std::getline(fields, field, ',')) {
            const auto colon = field.find(':');
            if (colon == std::string::npos)
                throw LoadError(where + "expected class:length in '" + field +
                                "'");
            const auto cls = vocab.find(field.substr(0, colon));
            if (!cls)
                throw LoadError(where + "unknown class '" +
                                field.substr(0, colon) + "'");
            int length = 0;
            try {
                length = std::stoi(field.substr(colon + 1));
            } catch (const std::exception&) {
                throw LoadError(where + "bad length in '" + field + "'");
            }
            if (length < 1)
                throw LoadError(where + "segment lengths must be >= 1");
            segments.push_back({*cls, length});
        }
        if (segments.empty())
            throw LoadError(where + "empty prediction");
        try {
            predictions.emplace_back(id, Segmentation(std::move(segments)));
        } catch (const std::invalid_argument& e) {
            throw LoadError(where + e.what());
        }
    }
    return predictions;
}

namespace {

std::array<unsigned char, 3> class_color(int cls) {
    // golden-ratio hue spacing keeps nearby class ids visually distinct
    const double hue = std::fmod(0.12 + cls * 0.61803398875, 1.0) * 6.0;
    const double sat = 0.65;
    const double val = 0.95;
    const int i = static_cast<int>(hue);
    const double f = hue - i;
    const double p = val * (1.0 - sat);
    const double q = val * (1.0 - sat * f);
    const double u = val * (1.0 - sat * (1.0 - f));
    double r = 0.0, g = 0.0, b = 0.0;
    switch (i % 6) {
        case 0: r = val; g = u; b = p; break;
        case 1: r = q; g = val; b = p; break;
        case 2: r = p; g = val; b = u; break;
        case 3: r = p; g = q; b = val; break;
        case 4: r = u; g = p; b = val; break;
        case 5: r = val; g = p; b = q; break;
    }
    auto byte = [](double x) {
        return static_cast<unsigned char>(std::lround(x * 255.0));
    };
    return {byte(r), byte(g), byte(b)};
}

}  // namespace

void render_strip(const fs::path& file, const Segmentation& predicted,
                  const Segmentation* ground_truth, int band_height) {
    if (band_height < 1)
        throw std::invalid_argument("band height must be >= 1");
    if (predicted.empty())
        throw std::invalid_argument("nothing to render");
    if (ground_truth && ground_truth->total_frames() != predicted.total_frames())
        throw std::invalid_argument(
            "prediction and ground truth lengths differ");

    const int width = predicted.total_frames();
    const int height = ground_truth ? 2 * band_height + 1 : band_height;
    std::vector<unsigned char> pixels(
        static_cast<std::size_t>(width) * height * 3, 255);

    auto paint_band = [&](const Segmentation& seg, int y0) {
        const std::vector<int> labels = seg.framewise();
        for (int x = 0; x < width; ++x) {
            const auto rgb = class_color(labels[static_cast<std::size_t>(x)]);
            for (int y = y0; y < y0 + band_height; ++y) {
                const std::size_t at =
                    (static_cast<std::size_t>(y) * width + x) * 3;
                pixels[at] = rgb[0];
                pixels[at + 1] = rgb[1];
                pixels[at + 2] = rgb[2];
            }
        }
    };
    paint_band(predicted, 0);
    if (ground_truth)
        paint_band(*ground_truth, band_height + 1);

    std::ofstream out(file, std::ios::binary);
    if (!out)
        throw LoadError("cannot write " + file.string());
    out << "P6\n" << width << ' ' << height << "\n255\n";
    out.write(reinterpret_cast<const char*>(pixels.data()),
              static_cast<std::streamsize>(pixels.size()));
    if (!out)
        throw LoadError("cannot write " + file.string());
}

}  // namespace scv
