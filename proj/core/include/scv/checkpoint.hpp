#ifndef SCV_CHECKPOINT_HPP
#define SCV_CHECKPOINT_HPP

#include "scv/hmm.hpp"
#include "scv/nnet.hpp"

#include <filesystem>

namespace scv {

struct Checkpoint {
    NetworkParams net;
    HmmParams hmm;
};

// Single-file binary container: magic "SCV1"; u32 d, hidden, classes; then
// w1, b1, w2, b2 as row-major little-endian f64; then u32 classes, u32 l_min
// and the log-transition matrix, expected lengths, and priors the same way.
// The write goes to a temporary file that is renamed into place.
void save_checkpoint(const std::filesystem::path& file, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& file);

}  // namespace scv

#endif
