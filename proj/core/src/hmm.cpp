#include "scv/hmm.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>

namespace scv {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kTransitionSmoothing = 1e-6;
constexpr double kTinyPrior = 1e-8;
constexpr long double kEigenvalueCutoff = 1e-12L;

double log_factorial(int n) {
    static const std::vector<double> table = [] {
        std::vector<double> t(1025);
        for (int i = 0; i < 1025; ++i)
            t[static_cast<std::size_t>(i)] = std::lgamma(i + 1.0);
        return t;
    }();
    if (n < 1025)
        return table[static_cast<std::size_t>(n)];
    return std::lgamma(n + 1.0);
}

void check_videos(const std::vector<ActionSet>& sets,
                  const std::vector<int>& video_lengths, int num_classes) {
    if (sets.size() != video_lengths.size())
        throw std::invalid_argument("one length per video required");
    if (sets.empty())
        throw std::invalid_argument("at least one training video required");
    for (std::size_t v = 0; v < sets.size(); ++v) {
        if (sets[v].empty())
            throw std::invalid_argument("every video needs a nonempty set");
        if (video_lengths[v] < 1)
            throw std::invalid_argument("every video needs positive length");
        for (int cls : sets[v].ids())
            if (cls < 0 || cls >= num_classes)
                throw std::invalid_argument("class id outside vocabulary");
    }
}

using LongMatrix =
    Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
using LongVector = Eigen::Matrix<long double, Eigen::Dynamic, 1>;

// Solves M x = rhs for a symmetric PSD M via a truncated eigendecomposition
// in extended precision. Singular-but-consistent systems (one video whose
// classes all play the same role) land on the minimum-norm solution, which
// stays exact after the cast back to double.
Vector solve_normal_equations(const Matrix& m, const Vector& rhs) {
    const LongMatrix ml = m.cast<long double>();
    const LongVector rl = rhs.cast<long double>();
    Eigen::SelfAdjointEigenSolver<LongMatrix> eig(ml);
    const LongVector& evals = eig.eigenvalues();
    const long double cutoff =
        kEigenvalueCutoff *
        std::max<long double>(1.0L, evals.cwiseAbs().maxCoeff());
    LongVector coef = eig.eigenvectors().transpose() * rl;
    for (Eigen::Index i = 0; i < coef.size(); ++i)
        coef(i) = evals(i) > cutoff ? coef(i) / evals(i) : 0.0L;
    return (eig.eigenvectors() * coef).cast<double>();
}

}  // namespace

double poisson_log_pmf(int length, double lambda) {
    if (length < 1)
        throw std::invalid_argument("segment length must be >= 1");
    if (!(lambda > 0.0))
        throw std::invalid_argument("poisson mean must be positive");
    return length * std::log(lambda) - lambda - log_factorial(length);
}

Vector solve_expected_lengths(const std::vector<ActionSet>& sets,
                              const std::vector<int>& video_lengths,
                              int num_classes, int l_min) {
    check_videos(sets, video_lengths, num_classes);
    if (l_min < 1)
        throw std::invalid_argument("l_min must be >= 1");

    Matrix gram = Matrix::Zero(num_classes, num_classes);
    Vector rhs = Vector::Zero(num_classes);
    for (std::size_t v = 0; v < sets.size(); ++v) {
        const auto& ids = sets[v].ids();
        for (int c : ids) {
            rhs(c) += video_lengths[v];
            for (int c2 : ids)
                gram(c, c2) += 1.0;
        }
    }

    std::vector<int> observed;
    for (int c = 0; c < num_classes; ++c)
        if (gram(c, c) > 0.0)
            observed.push_back(c);

    Vector lambdas = Vector::Constant(num_classes, static_cast<double>(l_min));
    if (observed.empty())
        return lambdas;

    auto subsolve = [&](const std::vector<int>& cols, const Vector& target) {
        const int n = static_cast<int>(cols.size());
        Matrix sub(n, n);
        Vector sub_rhs(n);
        for (int i = 0; i < n; ++i) {
            sub_rhs(i) = target(cols[static_cast<std::size_t>(i)]);
            for (int j = 0; j < n; ++j)
                sub(i, j) = gram(cols[static_cast<std::size_t>(i)],
                                 cols[static_cast<std::size_t>(j)]);
        }
        return solve_normal_equations(sub, sub_rhs);
    };

    Vector fit = subsolve(observed, rhs);
    std::vector<int> clamped, open;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        if (fit(static_cast<Eigen::Index>(i)) < static_cast<double>(l_min))
            clamped.push_back(observed[i]);
        else
            open.push_back(observed[i]);
    }
    if (clamped.empty()) {
        for (std::size_t i = 0; i < observed.size(); ++i)
            lambdas(observed[i]) = fit(static_cast<Eigen::Index>(i));
        return lambdas;
    }

    // One re-solve over the unclamped classes against the residual footage.
    if (!open.empty()) {
        Vector adjusted = rhs;
        for (int c : open)
            for (int s : clamped)
                adjusted(c) -= gram(c, s) * static_cast<double>(l_min);
        Vector refit = subsolve(open, adjusted);
        for (std::size_t i = 0; i < open.size(); ++i)
            lambdas(open[i]) = std::max(static_cast<double>(l_min),
                                        refit(static_cast<Eigen::Index>(i)));
    }
    return lambdas;
}

HmmParams estimate_static(const std::vector<ActionSet>& sets,
                          const std::vector<int>& video_lengths,
                          int num_classes, int l_min) {
    check_videos(sets, video_lengths, num_classes);
    if (num_classes < 1)
        throw std::invalid_argument("vocabulary must be nonempty");

    HmmParams params;
    params.l_min = l_min;
    params.variant = HmmVariant::Static;
    params.lambdas = solve_expected_lengths(sets, video_lengths, num_classes,
                                            l_min);

    // The set-level ground truth carries no ordering, so a transition count
    // is the number of videos whose set contains both classes.
    Matrix cooc = Matrix::Zero(num_classes, num_classes);
    for (const ActionSet& set : sets)
        for (int c : set.ids())
            for (int c2 : set.ids())
                if (c != c2)
                    cooc(c, c2) += 1.0;

    params.log_transitions = Matrix::Constant(num_classes, num_classes, kNegInf);
    for (int c = 0; c < num_classes; ++c) {
        const double total = cooc.row(c).sum();
        if (total > 0.0) {
            for (int c2 = 0; c2 < num_classes; ++c2)
                if (c2 != c && cooc(c, c2) > 0.0)
                    params.log_transitions(c, c2) =
                        std::log(cooc(c, c2) / total);
        } else if (num_classes > 1) {
            const double uniform = -std::log(num_classes - 1.0);
            for (int c2 = 0; c2 < num_classes; ++c2)
                if (c2 != c)
                    params.log_transitions(c, c2) = uniform;
        }
    }

    double total_footage = 0.0;
    Vector class_footage = Vector::Zero(num_classes);
    for (std::size_t v = 0; v < sets.size(); ++v) {
        total_footage += video_lengths[v];
        for (int c : sets[v].ids())
            class_footage(c) += video_lengths[v];
    }
    params.priors.resize(num_classes);
    for (int c = 0; c < num_classes; ++c)
        params.priors(c) = class_footage(c) > 0.0
                               ? class_footage(c) / total_footage
                               : kTinyPrior;
    return params;
}

DynamicCounts::DynamicCounts(int num_classes)
    : pair_counts(Matrix::Zero(num_classes, num_classes)),
      segment_counts(Vector::Zero(num_classes)),
      segment_length_sums(Vector::Zero(num_classes)) {}

void DynamicCounts::add(const Segmentation& seg) {
    const auto& segments = seg.segments();
    for (std::size_t n = 0; n < segments.size(); ++n) {
        segment_counts(segments[n].cls) += 1.0;
        segment_length_sums(segments[n].cls) += segments[n].length;
        if (n > 0)
            pair_counts(segments[n - 1].cls, segments[n].cls) += 1.0;
    }
    total_frames += seg.total_frames();
}

void DynamicCounts::remove(const Segmentation& seg) {
    const auto& segments = seg.segments();
    for (std::size_t n = 0; n < segments.size(); ++n) {
        segment_counts(segments[n].cls) -= 1.0;
        segment_length_sums(segments[n].cls) -= segments[n].length;
        if (n > 0)
            pair_counts(segments[n - 1].cls, segments[n].cls) -= 1.0;
    }
    total_frames -= seg.total_frames();
}

DynamicCounts DynamicCounts::from_bank(const MapAssignmentBank& bank,
                                       int num_classes) {
    DynamicCounts counts(num_classes);
    for (const Segmentation& seg : bank)
        counts.add(seg);
    return counts;
}

HmmParams DynamicCounts::to_params(const HmmParams& static_params) const {
    const int classes = static_params.num_classes();
    HmmParams params;
    params.l_min = static_params.l_min;
    params.variant = HmmVariant::Dynamic;

    params.log_transitions = Matrix::Constant(classes, classes, kNegInf);
    for (int c = 0; c < classes; ++c) {
        double total = 0.0;
        for (int c2 = 0; c2 < classes; ++c2)
            if (c2 != c)
                total += pair_counts(c, c2) + kTransitionSmoothing;
        if (total <= 0.0)
            continue;
        for (int c2 = 0; c2 < classes; ++c2)
            if (c2 != c)
                params.log_transitions(c, c2) = std::log(
                    (pair_counts(c, c2) + kTransitionSmoothing) / total);
    }

    params.lambdas.resize(classes);
    params.priors.resize(classes);
    for (int c = 0; c < classes; ++c) {
        if (segment_counts(c) > 0.0) {
            params.lambdas(c) = segment_length_sums(c) / segment_counts(c);
            params.priors(c) = segment_length_sums(c) / total_frames;
        } else {
            params.lambdas(c) = static_params.lambdas(c);
            params.priors(c) = static_params.priors(c);
        }
    }
    return params;
}

HmmParams update_dynamic(const MapAssignmentBank& bank,
                         const std::vector<int>& video_lengths,
                         const HmmParams& static_params) {
    if (bank.size() != video_lengths.size())
        throw std::invalid_argument("bank must cover every training video");
    for (std::size_t v = 0; v < bank.size(); ++v)
        if (bank[v].total_frames() != video_lengths[v])
            throw std::invalid_argument(
                "bank segmentation does not span its video");
    return DynamicCounts::from_bank(bank, static_params.num_classes())
        .to_params(static_params);
}

}  // namespace scv
