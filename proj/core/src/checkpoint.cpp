#include "scv/checkpoint.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string_view>

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

namespace fs = std::filesystem;

namespace scv {

namespace {

void write_u32(std::ostream& out, std::uint32_t value) {
    out.write(reinterpret_cast<const char*>(&value), 4);
}

std::uint32_t read_u32(std::istream& in, const fs::path& file) {
    std::uint32_t value;
    if (!in.read(reinterpret_cast<char*>(&value), 4))
        throw LoadError("truncated checkpoint " + file.string());
    return value;
}

void write_row_major(std::ostream& out, const Matrix& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            const double value = m(r, c);
            out.write(reinterpret_cast<const char*>(&value), 8);
        }
}

void write_vector(std::ostream& out, const Vector& v) {
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * 8));
}

Matrix read_row_major(std::istream& in, Eigen::Index rows, Eigen::Index cols,
                      const fs::path& file) {
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) {
            double value;
            if (!in.read(reinterpret_cast<char*>(&value), 8))
                throw LoadError("truncated checkpoint " + file.string());
            m(r, c) = value;
        }
    return m;
}

Vector read_vector(std::istream& in, Eigen::Index size, const fs::path& file) {
    Vector v(size);
    if (!in.read(reinterpret_cast<char*>(v.data()),
                 static_cast<std::streamsize>(size * 8)))
        throw LoadError("truncated checkpoint " + file.string());
    return v;
}

}  // namespace

void save_checkpoint(const fs::path& file, const Checkpoint& ckpt) {
    if (!ckpt.net.finite())
        throw std::invalid_argument("refusing to save non-finite weights");
    if (ckpt.net.num_classes() != ckpt.hmm.num_classes())
        throw std::invalid_argument("network and HMM class counts differ");

    const fs::path tmp = file.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw LoadError("cannot write " + tmp.string());
        out.write("SCV1", 4);
        write_u32(out, static_cast<std::uint32_t>(ckpt.net.input_dim()));
        write_u32(out, static_cast<std::uint32_t>(ckpt.net.hidden_units()));
        write_u32(out, static_cast<std::uint32_t>(ckpt.net.num_classes()));
        write_row_major(out, ckpt.net.w1);
        write_vector(out, ckpt.net.b1);
        write_row_major(out, ckpt.net.w2);
        write_vector(out, ckpt.net.b2);
        write_u32(out, static_cast<std::uint32_t>(ckpt.hmm.num_classes()));
        write_u32(out, static_cast<std::uint32_t>(ckpt.hmm.l_min));
        write_row_major(out, ckpt.hmm.log_transitions);
        write_vector(out, ckpt.hmm.lambdas);
        write_vector(out, ckpt.hmm.priors);
        if (!out)
            throw LoadError("cannot write " + tmp.string());
    }
    fs::rename(tmp, file);
}

Checkpoint load_checkpoint(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in)
        throw LoadError("cannot open " + file.string());
    char magic[4];
    if (!in.read(magic, 4) || std::string_view(magic, 4) != "SCV1")
        throw LoadError(file.string() + ": bad magic, expected SCV1");

    const std::uint32_t d = read_u32(in, file);
    const std::uint32_t hidden = read_u32(in, file);
    const std::uint32_t classes = read_u32(in, file);
    if (d == 0 || hidden == 0 || classes == 0)
        throw LoadError(file.string() + ": zero dimension in header");

    Checkpoint ckpt;
    ckpt.net.w1 = read_row_major(in, hidden, d, file);
    ckpt.net.b1 = read_vector(in, hidden, file);
    ckpt.net.w2 = read_row_major(in, classes, hidden, file);
    ckpt.net.b2 = read_vector(in, classes, file);
    if (!ckpt.net.finite())
        throw LoadError(file.string() + ": non-finite network weights");

    const std::uint32_t hmm_classes = read_u32(in, file);
    if (hmm_classes != classes)
        throw LoadError(file.string() + ": HMM class count " +
                        std::to_string(hmm_classes) +
                        " does not match the network's " +
                        std::to_string(classes));
    const std::uint32_t l_min = read_u32(in, file);
    if (l_min == 0)
        throw LoadError(file.string() + ": l_min must be >= 1");
    ckpt.hmm.l_min = static_cast<int>(l_min);
    ckpt.hmm.log_transitions = read_row_major(in, classes, classes, file);
    ckpt.hmm.lambdas = read_vector(in, classes, file);
    ckpt.hmm.priors = read_vector(in, classes, file);

    char extra;
    if (in.read(&extra, 1))
        throw LoadError(file.string() + ": trailing bytes after payload");

    if (ckpt.hmm.log_transitions.hasNaN())
        throw LoadError(file.string() + ": NaN transition scores");
    if (!ckpt.hmm.lambdas.allFinite() || (ckpt.hmm.lambdas.array() <= 0.0).any())
        throw LoadError(file.string() + ": expected lengths must be positive");
    if (!ckpt.hmm.priors.allFinite() || (ckpt.hmm.priors.array() <= 0.0).any())
        throw LoadError(file.string() + ": priors must be positive");
    return ckpt;
}

}  // namespace scv
