#ifndef SCV_ORACLE_HPP
#define SCV_ORACLE_HPP

#include "scv/hmm.hpp"
#include "scv/nnet.hpp"
#include "scv/types.hpp"

namespace scv {

struct OracleResult {
    Segmentation seg;
    double log_post = 0.0;
};

// Exhaustively enumerates every framewise labeling over `set`, scores its
// canonical segmentation, and returns the best. With cover_required, only
// labelings containing every class of `set` compete. Guarded to T <= 14 and
// |set| <= 3; larger instances are refused.
OracleResult oracle_exhaustive_map(const ForwardCache& cache,
                                   const HmmParams& params,
                                   const ActionSet& set, bool cover_required);

}  // namespace scv

#endif
