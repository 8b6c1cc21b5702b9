#include "scv/data.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

static_assert(std::endian::native == std::endian::little,
              "file formats assume a little-endian host");

namespace fs = std::filesystem;

namespace scv {

namespace {

std::string loc(const fs::path& file, std::size_t line) {
    return file.filename().string() + ":" + std::to_string(line) + ": ";
}

std::vector<std::string> read_lines(const fs::path& file) {
    std::ifstream in(file);
    if (!in)
        throw LoadError("cannot open " + file.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t");
    if (begin == std::string::npos)
        return "";
    const auto end = s.find_last_not_of(" \t");
    return s.substr(begin, end - begin + 1);
}

std::uint32_t read_u32(std::istream& in, const fs::path& file) {
    unsigned char bytes[4];
    if (!in.read(reinterpret_cast<char*>(bytes), 4))
        throw LoadError("truncated header in " + file.string());
    std::uint32_t value;
    std::memcpy(&value, bytes, 4);
    return value;
}

void write_u32(std::ostream& out, std::uint32_t value) {
    out.write(reinterpret_cast<const char*>(&value), 4);
}

Vocabulary load_classes(const fs::path& file, std::string* background_name) {
    const std::vector<std::string> lines = read_lines(file);
    Vocabulary vocab;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::string line = trim(lines[i]);
        if (line.empty())
            continue;
        std::istringstream tokens(line);
        std::string first, second, extra;
        tokens >> first >> second >> extra;
        if (!extra.empty())
            throw LoadError(loc(file, i + 1) + "malformed class line");
        if (!second.empty()) {
            if (first != "background")
                throw LoadError(loc(file, i + 1) +
                                "class names must not contain spaces");
            if (!background_name->empty())
                throw LoadError(loc(file, i + 1) +
                                "duplicate background directive");
            *background_name = second;
            continue;
        }
        if (vocab.find(first))
            throw LoadError(loc(file, i + 1) + "duplicate class '" + first +
                            "'");
        vocab.add(first);
    }
    if (vocab.size() == 0)
        throw LoadError(file.string() + ": no classes declared");
    return vocab;
}

FeatureSequence load_features(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in)
        throw LoadError("cannot open " + file.string());
    char magic[4];
    if (!in.read(magic, 4) || std::string_view(magic, 4) != "FVC1")
        throw LoadError(file.string() + ": bad magic, expected FVC1");
    const std::uint32_t d = read_u32(in, file);
    const std::uint32_t frames = read_u32(in, file);
    if (d == 0 || frames == 0)
        throw LoadError(file.string() + ": zero dimension in header");
    std::vector<float> payload(static_cast<std::size_t>(d) * frames);
    if (!in.read(reinterpret_cast<char*>(payload.data()),
                 static_cast<std::streamsize>(payload.size() * sizeof(float))))
        throw LoadError(file.string() +
                        ": truncated payload (header promises " +
                        std::to_string(payload.size()) + " floats)");
    char extra;
    if (in.read(&extra, 1))
        throw LoadError(file.string() + ": trailing bytes after payload");

    FeatureSequence features(d, frames);
    for (std::uint32_t t = 0; t < frames; ++t)
        for (std::uint32_t i = 0; i < d; ++i)
            features(i, t) =
                payload[static_cast<std::size_t>(t) * d + i];
    return features;
}

}  // namespace

std::vector<ActionSet> Dataset::sets() const {
    std::vector<ActionSet> out;
    out.reserve(videos.size());
    for (const Video& v : videos)
        out.push_back(v.set);
    return out;
}

std::vector<int> Dataset::video_lengths() const {
    std::vector<int> out;
    out.reserve(videos.size());
    for (const Video& v : videos)
        out.push_back(v.frames());
    return out;
}

const Video* Dataset::find(const std::string& id) const {
    for (const Video& v : videos)
        if (v.id == id)
            return &v;
    return nullptr;
}

Dataset load_dataset(const fs::path& root) {
    if (!fs::is_directory(root))
        throw LoadError("dataset root " + root.string() +
                        " is not a directory");

    Dataset dataset;
    std::string background_name;
    dataset.vocab = load_classes(root / "classes.txt", &background_name);
    if (!background_name.empty()) {
        const auto cls = dataset.vocab.find(background_name);
        if (!cls)
            throw LoadError("classes.txt: background directive names "
                            "undeclared class '" +
                            background_name + "'");
        dataset.vocab.set_background(*cls);
    }

    const fs::path sets_file = root / "sets.txt";
    const std::vector<std::string> lines = read_lines(sets_file);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (trim(lines[i]).empty())
            continue;
        const auto tab = lines[i].find('\t');
        if (tab == std::string::npos)
            throw LoadError(loc(sets_file, i + 1) +
                            "expected video_id<TAB>class,class,...");
        const std::string id = trim(lines[i].substr(0, tab));
        if (id.empty())
            throw LoadError(loc(sets_file, i + 1) + "empty video id");
        if (dataset.find(id))
            throw LoadError(loc(sets_file, i + 1) + "duplicate video '" + id +
                            "'");

        ActionSet set;
        std::istringstream names(lines[i].substr(tab + 1));
        std::string name;
        while (std::getline(names, name, ',')) {
            name = trim(name);
            if (name.empty())
                throw LoadError(loc(sets_file, i + 1) + "empty class name");
            const auto cls = dataset.vocab.find(name);
            if (!cls)
                throw LoadError(loc(sets_file, i + 1) + "unknown class '" +
                                name + "'");
            set.insert(*cls);
        }
        if (dataset.vocab.background())
            set.insert(*dataset.vocab.background());
        if (set.empty())
            throw LoadError(loc(sets_file, i + 1) + "empty action set");

        Video video;
        video.id = id;
        video.set = std::move(set);
        dataset.videos.push_back(std::move(video));
    }

    for (Video& video : dataset.videos) {
        video.features = load_features(root / "features" / (video.id + ".fvec"));
        if (video.features.rows() != dataset.videos[0].features.rows())
            throw LoadError("features/" + video.id + ".fvec: dimension " +
                            std::to_string(video.features.rows()) +
                            " differs from the dataset's " +
                            std::to_string(dataset.videos[0].features.rows()));

        const fs::path label_file = root / "labels" / (video.id + ".txt");
        if (!fs::exists(label_file))
            continue;
        const std::vector<std::string> label_lines = read_lines(label_file);
        std::vector<int> labels;
        for (std::size_t i = 0; i < label_lines.size(); ++i) {
            const std::string name = trim(label_lines[i]);
            if (name.empty())
                continue;
            const auto cls = dataset.vocab.find(name);
            if (!cls)
                throw LoadError(loc(label_file, i + 1) + "unknown class '" +
                                name + "'");
            labels.push_back(*cls);
        }
        if (static_cast<int>(labels.size()) != video.frames())
            throw LoadError(label_file.string() + ": " +
                            std::to_string(labels.size()) +
                            " labels for a video of " +
                            std::to_string(video.frames()) + " frames");
        video.gt_labels = std::move(labels);
    }
    return dataset;
}

void save_dataset(const Dataset& dataset, const fs::path& root) {
    fs::create_directories(root / "features");
    const bool any_labels =
        std::any_of(dataset.videos.begin(), dataset.videos.end(),
                    [](const Video& v) { return !v.gt_labels.empty(); });
    if (any_labels)
        fs::create_directories(root / "labels");

    {
        std::ofstream out(root / "classes.txt");
        if (dataset.vocab.background())
            out << "background "
                << dataset.vocab.name(*dataset.vocab.background()) << "\n";
        for (const std::string& name : dataset.vocab.names())
            out << name << "\n";
        if (!out)
            throw LoadError("cannot write classes.txt");
    }
    {
        std::ofstream out(root / "sets.txt");
        for (const Video& video : dataset.videos) {
            out << video.id << '\t';
            const auto& ids = video.set.ids();
            for (std::size_t i = 0; i < ids.size(); ++i)
                out << (i ? "," : "") << dataset.vocab.name(ids[i]);
            out << "\n";
        }
        if (!out)
            throw LoadError("cannot write sets.txt");
    }
    for (const Video& video : dataset.videos) {
        std::ofstream out(root / "features" / (video.id + ".fvec"),
                          std::ios::binary);
        out.write("FVC1", 4);
        write_u32(out, static_cast<std::uint32_t>(video.features.rows()));
        write_u32(out, static_cast<std::uint32_t>(video.features.cols()));
        for (int t = 0; t < video.frames(); ++t)
            for (int i = 0; i < video.features.rows(); ++i) {
                const float value = static_cast<float>(video.features(i, t));
                out.write(reinterpret_cast<const char*>(&value), sizeof(float));
            }
        if (!out)
            throw LoadError("cannot write features for " + video.id);

        if (video.gt_labels.empty())
            continue;
        std::ofstream labels(root / "labels" / (video.id + ".txt"));
        for (int cls : video.gt_labels)
            labels << dataset.vocab.name(cls) << "\n";
        if (!labels)
            throw LoadError("cannot write labels for " + video.id);
    }
}

Matrix default_means(int feature_dim, int num_classes, double separation) {
    if (num_classes < 1 || feature_dim < num_classes)
        throw std::invalid_argument(
            "auto-generated means need num_classes <= feature_dim");
    if (!(separation > 0.0))
        throw std::invalid_argument("mean separation must be positive");
    Matrix means = Matrix::Zero(feature_dim, num_classes);
    for (int c = 0; c < num_classes; ++c)
        means(c, c) = separation / std::sqrt(2.0);
    return means;
}

namespace {

void check_spec(const SynthSpec& spec) {
    if (spec.num_classes < 1 || spec.feature_dim < 1)
        throw std::invalid_argument("class count and dimension must be >= 1");
    if (spec.noise_sigma < 0.0)
        throw std::invalid_argument("noise scale must be nonnegative");
    if (spec.min_set_size < 1 || spec.min_set_size > spec.max_set_size ||
        spec.max_set_size > spec.num_classes)
        throw std::invalid_argument("invalid set-size range");
    if (spec.min_frames < 1 || spec.min_frames > spec.max_frames)
        throw std::invalid_argument("invalid frame-count range");
    if (spec.videos < 1)
        throw std::invalid_argument("video count must be >= 1");
    if (spec.fast_cut_fraction < 0.0 || spec.fast_cut_fraction > 1.0)
        throw std::invalid_argument("fast-cut fraction must lie in [0,1]");
    if (!(spec.fast_cut_scale > 0.0 && spec.fast_cut_scale <= 1.0))
        throw std::invalid_argument("fast-cut scale must lie in (0,1]");
}

Matrix resolve_means(const SynthSpec& spec) {
    if (spec.means.size() == 0) {
        const double separation = spec.mean_separation > 0.0
                                      ? spec.mean_separation
                                      : std::max(4.0 * spec.noise_sigma, 1.0);
        return default_means(spec.feature_dim, spec.num_classes, separation);
    }
    if (spec.means.rows() != spec.feature_dim ||
        spec.means.cols() != spec.num_classes)
        throw std::invalid_argument("means must be feature_dim x num_classes");
    for (int a = 0; a < spec.num_classes; ++a)
        for (int b = a + 1; b < spec.num_classes; ++b)
            if ((spec.means.col(a) - spec.means.col(b)).norm() == 0.0)
                throw std::invalid_argument("class means must be distinct");
    return spec.means;
}

Vector resolve_mean_lengths(const SynthSpec& spec) {
    if (spec.mean_lengths.size() == 0)
        return Vector::Constant(spec.num_classes, 20.0);
    if (spec.mean_lengths.size() != spec.num_classes)
        throw std::invalid_argument("one mean length per class required");
    for (int c = 0; c < spec.num_classes; ++c)
        if (!(spec.mean_lengths(c) > 0.0))
            throw std::invalid_argument("mean lengths must be positive");
    return spec.mean_lengths;
}

Dataset generate_with_sets(const SynthSpec& spec,
                           const std::vector<ActionSet>& sets,
                           std::mt19937_64& rng) {
    const Matrix means = resolve_means(spec);
    const Vector mean_lengths = resolve_mean_lengths(spec);

    Dataset dataset;
    for (int c = 0; c < spec.num_classes; ++c)
        dataset.vocab.add("c" + std::to_string(c));

    std::normal_distribution<double> gauss(0.0, 1.0);

    for (std::size_t v = 0; v < sets.size(); ++v) {
        const std::vector<int>& ids = sets[v].ids();
        const int n = static_cast<int>(ids.size());
        if (n < 1)
            throw std::invalid_argument("every video needs a nonempty set");
        double expected_sum = 0.0;
        for (int cls : ids) {
            if (cls < 0 || cls >= spec.num_classes)
                throw std::invalid_argument("class id outside vocabulary");
            expected_sum += mean_lengths(cls);
        }

        // Alignment inference budgets one expected length per set member, so
        // give every video headroom over that sum; otherwise videos drawn
        // short with large sets are unalignable no matter how well the
        // length model is estimated.
        const int floor_frames = static_cast<int>(std::ceil(1.25 * expected_sum));
        const int lo = std::max(spec.min_frames, floor_frames);
        const int hi = std::max(spec.max_frames, lo);
        std::uniform_int_distribution<int> target_pick(lo, hi);
        const int target = target_pick(rng);

        std::bernoulli_distribution fast_cut(spec.fast_cut_fraction);
        const double tempo = fast_cut(rng) ? spec.fast_cut_scale : 1.0;

        std::vector<int> order(ids);
        std::shuffle(order.begin(), order.end(), rng);

        auto draw_length = [&](int cls) {
            std::poisson_distribution<int> pois(tempo * mean_lengths(cls));
            return std::max(1, pois(rng));
        };

        std::vector<int> labels;
        for (int cls : order)
            labels.insert(labels.end(),
                          static_cast<std::size_t>(draw_length(cls)), cls);
        int last = order.back();
        while (static_cast<int>(labels.size()) < target && n > 1) {
            const int last_pos = static_cast<int>(
                std::lower_bound(ids.begin(), ids.end(), last) - ids.begin());
            std::uniform_int_distribution<int> pick(0, n - 2);
            int idx = pick(rng);
            if (idx >= last_pos)
                ++idx;
            const int cls = ids[static_cast<std::size_t>(idx)];
            labels.insert(labels.end(),
                          static_cast<std::size_t>(draw_length(cls)), cls);
            last = cls;
        }

        const int frames = static_cast<int>(labels.size());
        FeatureSequence features(spec.feature_dim, frames);
        for (int t = 0; t < frames; ++t)
            for (int i = 0; i < spec.feature_dim; ++i)
                features(i, t) = static_cast<float>(
                    means(i, labels[static_cast<std::size_t>(t)]) +
                    spec.noise_sigma * gauss(rng));

        Video video;
        video.id = spec.id_prefix + std::to_string(v);
        video.features = std::move(features);
        video.set = sets[v];
        video.gt_labels = std::move(labels);
        dataset.videos.push_back(std::move(video));
    }
    return dataset;
}

}  // namespace

Dataset generate_synthetic(const SynthSpec& spec) {
    check_spec(spec);
    std::mt19937_64 rng(spec.seed);

    std::uniform_int_distribution<int> size_pick(spec.min_set_size,
                                                 spec.max_set_size);
    std::vector<int> all(static_cast<std::size_t>(spec.num_classes));
    std::iota(all.begin(), all.end(), 0);

    std::vector<ActionSet> sets;
    sets.reserve(static_cast<std::size_t>(spec.videos));
    for (int v = 0; v < spec.videos; ++v) {
        const int size = size_pick(rng);
        std::vector<int> chosen(all);
        for (int i = 0; i < size; ++i) {
            std::uniform_int_distribution<int> pick(i, spec.num_classes - 1);
            std::swap(chosen[static_cast<std::size_t>(i)],
                      chosen[static_cast<std::size_t>(pick(rng))]);
        }
        chosen.resize(static_cast<std::size_t>(size));
        sets.emplace_back(std::move(chosen));
    }
    return generate_with_sets(spec, sets, rng);
}

Dataset generate_synthetic(const SynthSpec& spec,
                           const std::vector<ActionSet>& sets) {
    check_spec(spec);
    if (sets.empty())
        throw std::invalid_argument("at least one action set required");
    std::mt19937_64 rng(spec.seed);
    return generate_with_sets(spec, sets, rng);
}

}  // namespace scv
