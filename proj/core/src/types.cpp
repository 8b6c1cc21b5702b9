#include "scv/types.hpp"

#include <algorithm>

namespace scv {

ActionSet::ActionSet(std::vector<int> ids) : ids_(std::move(ids)) {
    std::sort(ids_.begin(), ids_.end());
    ids_.erase(std::unique(ids_.begin(), ids_.end()), ids_.end());
    if (!ids_.empty() && ids_.front() < 0)
        throw std::invalid_argument("class ids must be non-negative");
}

bool ActionSet::contains(int cls) const {
    return std::binary_search(ids_.begin(), ids_.end(), cls);
}

void ActionSet::insert(int cls) {
    if (cls < 0)
        throw std::invalid_argument("class ids must be non-negative");
    auto it = std::lower_bound(ids_.begin(), ids_.end(), cls);
    if (it == ids_.end() || *it != cls)
        ids_.insert(it, cls);
}

ActionSet ActionSet::intersect(const ActionSet& other) const {
    std::vector<int> out;
    std::set_intersection(ids_.begin(), ids_.end(), other.ids_.begin(),
                          other.ids_.end(), std::back_inserter(out));
    ActionSet result;
    result.ids_ = std::move(out);
    return result;
}

ActionSet ActionSet::minus(const ActionSet& other) const {
    std::vector<int> out;
    std::set_difference(ids_.begin(), ids_.end(), other.ids_.begin(),
                        other.ids_.end(), std::back_inserter(out));
    ActionSet result;
    result.ids_ = std::move(out);
    return result;
}

Segmentation::Segmentation(std::vector<Segment> segments)
    : segments_(std::move(segments)) {
    for (std::size_t n = 0; n < segments_.size(); ++n) {
        if (segments_[n].cls < 0)
            throw std::invalid_argument("class ids must be non-negative");
        if (segments_[n].length < 1)
            throw std::invalid_argument("segment length must be positive");
        if (n > 0 && segments_[n].cls == segments_[n - 1].cls)
            throw std::invalid_argument("adjacent segments must differ in class");
        total_frames_ += segments_[n].length;
    }
}

Segmentation Segmentation::from_framewise(const std::vector<int>& labels) {
    if (labels.empty())
        throw std::invalid_argument("framewise labels must be non-empty");
    std::vector<Segment> segs;
    for (int label : labels) {
        if (!segs.empty() && segs.back().cls == label)
            ++segs.back().length;
        else
            segs.push_back({label, 1});
    }
    return Segmentation(std::move(segs));
}

Segmentation Segmentation::canonicalize(const std::vector<Segment>& segments) {
    std::vector<Segment> segs;
    for (const Segment& s : segments) {
        if (s.length <= 0)
            continue;
        if (!segs.empty() && segs.back().cls == s.cls)
            segs.back().length += s.length;
        else
            segs.push_back(s);
    }
    return Segmentation(std::move(segs));
}

std::vector<int> Segmentation::framewise() const {
    std::vector<int> labels;
    labels.reserve(total_frames_);
    for (const Segment& s : segments_)
        labels.insert(labels.end(), s.length, s.cls);
    return labels;
}

ActionSet Segmentation::class_set() const {
    std::vector<int> ids;
    ids.reserve(segments_.size());
    for (const Segment& s : segments_)
        ids.push_back(s.cls);
    return ActionSet(std::move(ids));
}

bool Segmentation::covers(const ActionSet& required) const {
    ActionSet present = class_set();
    for (int cls : required.ids())
        if (!present.contains(cls))
            return false;
    return true;
}

Vocabulary::Vocabulary(const std::vector<std::string>& names) {
    for (const std::string& n : names)
        add(n);
}

int Vocabulary::add(const std::string& name) {
    if (index_.count(name))
        throw LoadError("duplicate class name: " + name);
    int cls = static_cast<int>(names_.size());
    names_.push_back(name);
    index_.emplace(name, cls);
    return cls;
}

int Vocabulary::id(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end())
        throw LoadError("unknown class name: " + name);
    return it->second;
}

std::optional<int> Vocabulary::find(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end())
        return std::nullopt;
    return it->second;
}

const std::string& Vocabulary::name(int cls) const {
    if (cls < 0 || cls >= size())
        throw std::out_of_range("class id out of range");
    return names_[static_cast<std::size_t>(cls)];
}

void Vocabulary::set_background(int cls) {
    if (cls < 0 || cls >= size())
        throw std::out_of_range("background class id out of range");
    background_ = cls;
}

}  // namespace scv
