#ifndef SCV_TYPES_HPP
#define SCV_TYPES_HPP

#include <Eigen/Dense>

#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace scv {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Framewise features for one video, one column per frame (d x T).
using FeatureSequence = Eigen::MatrixXd;

// Dataset files are malformed or inconsistent.
struct LoadError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// The decoder cannot produce a segmentation containing every required class.
struct CoverageInfeasibleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Inference cannot generate any legal candidate for the given video.
struct InfeasibleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Unordered set of class ids; stored sorted and deduplicated.
class ActionSet {
public:
    ActionSet() = default;
    explicit ActionSet(std::vector<int> ids);

    bool contains(int cls) const;
    void insert(int cls);
    bool empty() const { return ids_.empty(); }
    std::size_t size() const { return ids_.size(); }
    const std::vector<int>& ids() const { return ids_; }

    ActionSet intersect(const ActionSet& other) const;
    ActionSet minus(const ActionSet& other) const;

    bool operator==(const ActionSet&) const = default;

private:
    std::vector<int> ids_;
};

struct Segment {
    int cls = 0;
    int length = 0;

    bool operator==(const Segment&) const = default;
};

// Ordered list of (class, length) segments in canonical form: every length is
// positive and adjacent segments carry distinct classes.
class Segmentation {
public:
    Segmentation() = default;

    // Throws std::invalid_argument unless the segments are already canonical.
    explicit Segmentation(std::vector<Segment> segments);

    // Merges runs of equal labels.
    static Segmentation from_framewise(const std::vector<int>& labels);

    // Merges adjacent segments with equal classes, drops zero-length ones.
    static Segmentation canonicalize(const std::vector<Segment>& segments);

    const std::vector<Segment>& segments() const { return segments_; }
    std::size_t size() const { return segments_.size(); }
    bool empty() const { return segments_.empty(); }
    int total_frames() const { return total_frames_; }

    std::vector<int> framewise() const;
    ActionSet class_set() const;
    bool covers(const ActionSet& required) const;

    bool operator==(const Segmentation&) const = default;

private:
    std::vector<Segment> segments_;
    int total_frames_ = 0;
};

// Global class universe: dense ids 0..size()-1, unique names, optional
// designated background class.
class Vocabulary {
public:
    Vocabulary() = default;
    explicit Vocabulary(const std::vector<std::string>& names);

    int add(const std::string& name);
    int id(const std::string& name) const;          // throws LoadError if unknown
    std::optional<int> find(const std::string& name) const;
    const std::string& name(int cls) const;
    int size() const { return static_cast<int>(names_.size()); }

    void set_background(int cls);
    std::optional<int> background() const { return background_; }

    const std::vector<std::string>& names() const { return names_; }

private:
    std::vector<std::string> names_;
    std::unordered_map<std::string, int> index_;
    std::optional<int> background_;
};

}  // namespace scv

#endif
