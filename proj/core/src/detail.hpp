#ifndef SCV_DETAIL_HPP
#define SCV_DETAIL_HPP

#include "scv/hmm.hpp"
#include "scv/nnet.hpp"
#include "scv/types.hpp"

#include <vector>

namespace scv::detail {

// terms(c,t) = log softmax(f)[c,t] - log p(c)
Matrix frame_terms(const ForwardCache& cache, const HmmParams& params);

// prefix(c,t) = sum of terms(c, 0..t-1), so prefix(c,0) = 0; |C| x (T+1).
Matrix prefix_sums(const Matrix& terms);

// pois(c,l) = poisson_log_pmf(l, lambda_c) for l in 1..max_len; column 0 is
// -inf so an accidental zero-length lookup poisons the score.
Matrix poisson_table(const HmmParams& params, int max_len);

// Log-posterior of a framewise labeling from precomputed tables; avoids
// building a Segmentation in enumeration-heavy callers.
double score_framewise(const std::vector<int>& labels, const Matrix& terms,
                       const Matrix& pois, const HmmParams& params);

}  // namespace scv::detail

#endif
