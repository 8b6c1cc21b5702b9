#include "detail.hpp"

#include <limits>

namespace scv::detail {

Matrix frame_terms(const ForwardCache& cache, const HmmParams& params) {
    const Vector log_pri = params.log_priors();
    return cache.log_softmax.colwise() - log_pri;
}

Matrix prefix_sums(const Matrix& terms) {
    Matrix prefix(terms.rows(), terms.cols() + 1);
    prefix.col(0).setZero();
    for (Eigen::Index t = 0; t < terms.cols(); ++t)
        prefix.col(t + 1) = prefix.col(t) + terms.col(t);
    return prefix;
}

Matrix poisson_table(const HmmParams& params, int max_len) {
    const int classes = params.num_classes();
    Matrix pois(classes, max_len + 1);
    pois.col(0).setConstant(-std::numeric_limits<double>::infinity());
    for (int c = 0; c < classes; ++c)
        for (int l = 1; l <= max_len; ++l)
            pois(c, l) = poisson_log_pmf(l, params.lambdas(c));
    return pois;
}

double score_framewise(const std::vector<int>& labels, const Matrix& terms,
                       const Matrix& pois, const HmmParams& params) {
    double total = 0.0;
    int prev = -1;
    int run = 0;
    for (std::size_t t = 0; t < labels.size(); ++t) {
        const int cls = labels[t];
        total += terms(cls, static_cast<Eigen::Index>(t));
        if (cls == prev) {
            ++run;
        } else {
            if (prev >= 0) {
                total += pois(prev, run);
                total += params.log_transitions(prev, cls);
            }
            prev = cls;
            run = 1;
        }
    }
    if (prev >= 0)
        total += pois(prev, run);
    return total;
}

}  // namespace scv::detail
