#include "scv/nnet.hpp"

#include <atomic>
#include <cmath>
#include <iostream>
#include <random>
#include <unordered_map>

namespace scv {

namespace {

bool all_finite(const Matrix& m) { return m.allFinite(); }
bool all_finite(const Vector& v) { return v.allFinite(); }

// Partial derivative of cosine_distance(u, v) with respect to u.
Vector cosine_distance_grad_u(const Vector& u, const Vector& v) {
    const double nu = u.norm();
    const double nv = v.norm();
    if (nu == 0.0 || nv == 0.0)
        return Vector::Zero(u.size());
    const double cos = u.dot(v) / (nu * nv);
    return cos * u / (nu * nu) - v / (nu * nv);
}

void warn_zero_norm_feature() {
    static std::atomic<bool> warned{false};
    if (!warned.exchange(true))
        std::cerr << "scv: zero-norm class feature in cosine distance, "
                     "using distance 1 (reported once)\n";
}

}  // namespace

bool NetworkParams::finite() const {
    return all_finite(w1) && all_finite(b1) && all_finite(w2) && all_finite(b2);
}

NetworkParams NetworkParams::init(int input_dim, int hidden_units,
                                  int num_classes, std::uint64_t seed) {
    if (input_dim < 1 || hidden_units < 1 || num_classes < 1)
        throw std::invalid_argument("network dimensions must be positive");
    std::mt19937_64 rng(seed);
    NetworkParams p;
    p.w1.resize(hidden_units, input_dim);
    p.b1.resize(hidden_units);
    p.w2.resize(num_classes, hidden_units);
    p.b2.resize(num_classes);

    auto fill = [&rng](auto& m, double fan_in) {
        const double bound = 1.0 / std::sqrt(fan_in);
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            for (Eigen::Index j = 0; j < m.cols(); ++j)
                m(i, j) = dist(rng);
    };
    fill(p.w1, input_dim);
    fill(p.b1, input_dim);
    fill(p.w2, hidden_units);
    fill(p.b2, hidden_units);
    return p;
}

ForwardCache forward(const NetworkParams& params, const FeatureSequence& x) {
    if (x.rows() != params.input_dim())
        throw std::invalid_argument("feature dimension does not match network");

    ForwardCache cache;
    cache.h = ((params.w1 * x).colwise() + params.b1).cwiseMax(0.0);
    cache.f = (params.w2 * cache.h).colwise() + params.b2;

    const Eigen::Index classes = cache.f.rows();
    const Eigen::Index frames = cache.f.cols();
    cache.log_softmax.resize(classes, frames);
    for (Eigen::Index t = 0; t < frames; ++t) {
        const double peak = cache.f.col(t).maxCoeff();
        Vector shifted = cache.f.col(t).array() - peak;
        const double lse = std::log(shifted.array().exp().sum());
        cache.log_softmax.col(t) = shifted.array() - lse;
    }
    // Scalar exp so saturated logits flush to an exact 0/1 one-hot; Eigen's
    // vectorized exp clamps deep negatives to ~5.6e-309 instead.
    cache.softmax =
        cache.log_softmax.unaryExpr([](double v) { return std::exp(v); });
    return cache;
}

CrossEntropyResult ce_loss_and_grad(const ForwardCache& cache,
                                    const std::vector<int>& labels) {
    const int frames = cache.frames();
    const int classes = cache.num_classes();
    if (static_cast<int>(labels.size()) != frames)
        throw std::invalid_argument("label count does not match frame count");

    CrossEntropyResult result;
    result.grad_f = cache.softmax;
    for (int t = 0; t < frames; ++t) {
        const int cls = labels[static_cast<std::size_t>(t)];
        if (cls < 0 || cls >= classes)
            throw std::invalid_argument("label outside vocabulary");
        result.loss -= cache.log_softmax(cls, t);
        result.grad_f(cls, t) -= 1.0;
    }
    return result;
}

std::vector<ClassFeature> class_features(const ForwardCache& cache,
                                         FeatureMode mode,
                                         const std::vector<int>* labels) {
    const int frames = cache.frames();
    const int classes = cache.num_classes();
    std::vector<ClassFeature> feats;

    if (mode == FeatureMode::hard) {
        if (labels == nullptr)
            throw std::invalid_argument("hard class features require labels");
        if (static_cast<int>(labels->size()) != frames)
            throw std::invalid_argument("label count does not match frame count");
        std::vector<int> counts(static_cast<std::size_t>(classes), 0);
        Matrix sums = Matrix::Zero(cache.h.rows(), classes);
        for (int t = 0; t < frames; ++t) {
            const int cls = (*labels)[static_cast<std::size_t>(t)];
            if (cls < 0 || cls >= classes)
                throw std::invalid_argument("label outside vocabulary");
            sums.col(cls) += cache.h.col(t);
            ++counts[static_cast<std::size_t>(cls)];
        }
        for (int cls = 0; cls < classes; ++cls)
            if (counts[static_cast<std::size_t>(cls)] > 0)
                feats.push_back(
                    {cls, sums.col(cls) / counts[static_cast<std::size_t>(cls)]});
    } else {
        // Weighted sum over all frames, one feature per class in the universe.
        Matrix weighted = cache.h * cache.softmax.transpose();  // hidden x classes
        feats.reserve(static_cast<std::size_t>(classes));
        for (int cls = 0; cls < classes; ++cls)
            feats.push_back({cls, weighted.col(cls)});
    }
    return feats;
}

double cosine_distance(const Vector& u, const Vector& v) {
    const double nu = u.norm();
    const double nv = v.norm();
    if (nu == 0.0 || nv == 0.0) {
        warn_zero_norm_feature();
        return 1.0;
    }
    double cos = u.dot(v) / (nu * nv);
    cos = std::clamp(cos, -1.0, 1.0);
    return 1.0 - cos;
}

NpairResult npair_loss_and_grad(const ForwardCache& cache_a,
                                const ForwardCache& cache_b,
                                const ActionSet& set_a, const ActionSet& set_b,
                                const std::vector<int>* labels_a,
                                const std::vector<int>* labels_b,
                                FeatureMode mode, bool base_variant) {
    if (cache_a.h.rows() != cache_b.h.rows() ||
        cache_a.num_classes() != cache_b.num_classes())
        throw std::invalid_argument("caches come from different networks");

    const Eigen::Index hidden = cache_a.h.rows();
    NpairResult result;
    result.grad_h_a = Matrix::Zero(hidden, cache_a.frames());
    result.grad_h_b = Matrix::Zero(hidden, cache_b.frames());
    if (mode == FeatureMode::soft) {
        result.grad_f_a = Matrix::Zero(cache_a.num_classes(), cache_a.frames());
        result.grad_f_b = Matrix::Zero(cache_b.num_classes(), cache_b.frames());
    }

    const ActionSet shared = set_a.intersect(set_b);
    if (shared.empty())
        return result;

    auto feats_a = class_features(cache_a, mode, labels_a);
    auto feats_b = class_features(cache_b, mode, labels_b);
    auto index_of = [](const std::vector<ClassFeature>& feats) {
        std::unordered_map<int, int> idx;
        for (std::size_t k = 0; k < feats.size(); ++k)
            idx.emplace(feats[k].cls, static_cast<int>(k));
        return idx;
    };
    const auto idx_a = index_of(feats_a);
    const auto idx_b = index_of(feats_b);

    // Hard assignments may leave a class without frames; such classes drop
    // out of the corresponding sum.
    std::vector<int> kept_shared;
    for (int cls : shared.ids())
        if (idx_a.count(cls) && idx_b.count(cls))
            kept_shared.push_back(cls);
    if (kept_shared.empty())
        return result;

    std::vector<int> only_a, only_b;
    const ActionSet excl_a = set_a.minus(shared);
    const ActionSet excl_b = set_b.minus(shared);
    for (int cls : excl_a.ids())
        if (idx_a.count(cls))
            only_a.push_back(cls);
    for (int cls : excl_b.ids())
        if (idx_b.count(cls))
            only_b.push_back(cls);

    std::vector<Vector> gfeat_a(feats_a.size(), Vector::Zero(hidden));
    std::vector<Vector> gfeat_b(feats_b.size(), Vector::Zero(hidden));
    const double inv_m = 1.0 / static_cast<double>(kept_shared.size());

    for (int cls : kept_shared) {
        const int ka = idx_a.at(cls);
        const int kb = idx_b.at(cls);
        const Vector& fa = feats_a[static_cast<std::size_t>(ka)].vec;
        const Vector& fb = feats_b[static_cast<std::size_t>(kb)].vec;
        const double d_cc = cosine_distance(fa, fb);

        std::vector<double> exp_a(only_a.size()), exp_b(only_b.size());
        double denom = 1.0;
        for (std::size_t i = 0; i < only_a.size(); ++i) {
            const double d_ac =
                base_variant ? 0.0
                             : cosine_distance(
                                   feats_a[static_cast<std::size_t>(
                                               idx_a.at(only_a[i]))].vec,
                                   fb);
            exp_a[i] = std::exp(d_cc - d_ac);
            denom += exp_a[i];
        }
        for (std::size_t i = 0; i < only_b.size(); ++i) {
            const double d_cb =
                base_variant ? 0.0
                             : cosine_distance(
                                   fa, feats_b[static_cast<std::size_t>(
                                                   idx_b.at(only_b[i]))].vec);
            exp_b[i] = std::exp(d_cc - d_cb);
            denom += exp_b[i];
        }
        result.loss += inv_m * std::log(denom);

        double w_cc = 0.0;  // d loss / d d_cc
        for (double e : exp_a)
            w_cc += e;
        for (double e : exp_b)
            w_cc += e;
        w_cc *= inv_m / denom;
        gfeat_a[static_cast<std::size_t>(ka)] +=
            w_cc * cosine_distance_grad_u(fa, fb);
        gfeat_b[static_cast<std::size_t>(kb)] +=
            w_cc * cosine_distance_grad_u(fb, fa);

        if (base_variant)
            continue;
        for (std::size_t i = 0; i < only_a.size(); ++i) {
            const int kn = idx_a.at(only_a[i]);
            const Vector& fn = feats_a[static_cast<std::size_t>(kn)].vec;
            const double w = -inv_m * exp_a[i] / denom;
            gfeat_a[static_cast<std::size_t>(kn)] +=
                w * cosine_distance_grad_u(fn, fb);
            gfeat_b[static_cast<std::size_t>(kb)] +=
                w * cosine_distance_grad_u(fb, fn);
        }
        for (std::size_t i = 0; i < only_b.size(); ++i) {
            const int kn = idx_b.at(only_b[i]);
            const Vector& fn = feats_b[static_cast<std::size_t>(kn)].vec;
            const double w = -inv_m * exp_b[i] / denom;
            gfeat_a[static_cast<std::size_t>(ka)] +=
                w * cosine_distance_grad_u(fa, fn);
            gfeat_b[static_cast<std::size_t>(kn)] +=
                w * cosine_distance_grad_u(fn, fa);
        }
    }

    // Feature gradients flow back to the h columns they were averaged from,
    // and in soft mode additionally through the softmax weights.
    auto scatter = [&](const ForwardCache& cache,
                       const std::vector<ClassFeature>& feats,
                       const std::vector<Vector>& gfeat,
                       const std::vector<int>* labels, Matrix& grad_h,
                       Matrix& grad_f) {
        const int frames = cache.frames();
        if (mode == FeatureMode::hard) {
            std::vector<int> counts(
                static_cast<std::size_t>(cache.num_classes()), 0);
            for (int lab : *labels)
                ++counts[static_cast<std::size_t>(lab)];
            std::unordered_map<int, Vector> per_class;
            for (std::size_t k = 0; k < feats.size(); ++k) {
                if (gfeat[k].isZero(0.0))
                    continue;
                per_class.emplace(
                    feats[k].cls,
                    gfeat[k] / counts[static_cast<std::size_t>(feats[k].cls)]);
            }
            for (int t = 0; t < frames; ++t) {
                auto it = per_class.find((*labels)[static_cast<std::size_t>(t)]);
                if (it != per_class.end())
                    grad_h.col(t) += it->second;
            }
        } else {
            Matrix gs = Matrix::Zero(cache.num_classes(), frames);
            for (std::size_t k = 0; k < feats.size(); ++k) {
                if (gfeat[k].isZero(0.0))
                    continue;
                const int cls = feats[k].cls;
                grad_h += gfeat[k] * cache.softmax.row(cls);
                gs.row(cls) = gfeat[k].transpose() * cache.h;
            }
            for (int t = 0; t < frames; ++t) {
                const double dot = gs.col(t).dot(cache.softmax.col(t));
                grad_f.col(t) += cache.softmax.col(t).cwiseProduct(
                    (gs.col(t).array() - dot).matrix());
            }
        }
    };
    scatter(cache_a, feats_a, gfeat_a, labels_a, result.grad_h_a,
            result.grad_f_a);
    scatter(cache_b, feats_b, gfeat_b, labels_b, result.grad_h_b,
            result.grad_f_b);
    return result;
}

double total_loss(double ce, double npair, double weight) {
    if (!(weight >= 0.0 && weight <= 1.0))
        throw std::invalid_argument("loss weight must lie in [0,1]");
    return weight * ce + (1.0 - weight) * npair;
}

Gradients Gradients::zeros_like(const NetworkParams& params) {
    Gradients g;
    g.w1 = Matrix::Zero(params.w1.rows(), params.w1.cols());
    g.b1 = Vector::Zero(params.b1.size());
    g.w2 = Matrix::Zero(params.w2.rows(), params.w2.cols());
    g.b2 = Vector::Zero(params.b2.size());
    return g;
}

Gradients& Gradients::operator+=(const Gradients& other) {
    w1 += other.w1;
    b1 += other.b1;
    w2 += other.w2;
    b2 += other.b2;
    return *this;
}

bool Gradients::finite() const {
    return all_finite(w1) && all_finite(b1) && all_finite(w2) && all_finite(b2);
}

Gradients backprop(const NetworkParams& params, const FeatureSequence& x,
                   const ForwardCache& cache, const Matrix& grad_f,
                   const Matrix& grad_h) {
    Gradients g = Gradients::zeros_like(params);
    Matrix dh = Matrix::Zero(cache.h.rows(), cache.h.cols());
    if (grad_f.size() > 0) {
        g.w2 = grad_f * cache.h.transpose();
        g.b2 = grad_f.rowwise().sum();
        dh = params.w2.transpose() * grad_f;
    }
    if (grad_h.size() > 0)
        dh += grad_h;
    // ReLU mask: gradient passes only where the unit fired.
    Matrix dpre =
        dh.cwiseProduct((cache.h.array() > 0.0).cast<double>().matrix());
    g.w1 = dpre * x.transpose();
    g.b1 = dpre.rowwise().sum();
    return g;
}

void sgd_step(NetworkParams& params, const Gradients& grads, double lr) {
    if (!(lr > 0.0))
        throw std::invalid_argument("learning rate must be positive");
    if (!grads.finite())
        throw std::runtime_error("non-finite gradients, aborting update");
    params.w1 -= lr * grads.w1;
    params.b1 -= lr * grads.b1;
    params.w2 -= lr * grads.w2;
    params.b2 -= lr * grads.b2;
}

}  // namespace scv
