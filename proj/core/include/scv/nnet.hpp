#ifndef SCV_NNET_HPP
#define SCV_NNET_HPP

#include "scv/types.hpp"

#include <cstdint>
#include <vector>

namespace scv {

// Two fully connected layers: ReLU hidden features h = max(0, W1 x + b1),
// unnormalized class scores f = W2 h + b2.
struct NetworkParams {
    Matrix w1;  // hidden x input
    Vector b1;  // hidden
    Matrix w2;  // classes x hidden
    Vector b2;  // classes

    int input_dim() const { return static_cast<int>(w1.cols()); }
    int hidden_units() const { return static_cast<int>(w1.rows()); }
    int num_classes() const { return static_cast<int>(w2.rows()); }

    bool finite() const;

    // Uniform init in [-1/sqrt(fan_in), +1/sqrt(fan_in)].
    static NetworkParams init(int input_dim, int hidden_units, int num_classes,
                              std::uint64_t seed);
};

struct ForwardCache {
    Matrix h;            // hidden x T, post-ReLU
    Matrix f;            // classes x T
    Matrix softmax;      // classes x T, column-stochastic
    Matrix log_softmax;  // classes x T

    int frames() const { return static_cast<int>(f.cols()); }
    int num_classes() const { return static_cast<int>(f.rows()); }
};

ForwardCache forward(const NetworkParams& params, const FeatureSequence& x);

struct CrossEntropyResult {
    double loss = 0.0;
    Matrix grad_f;  // classes x T, softmax minus one-hot
};

// Summed negative log softmax of the target class over all frames.
CrossEntropyResult ce_loss_and_grad(const ForwardCache& cache,
                                    const std::vector<int>& labels);

enum class FeatureMode { hard, soft };

struct ClassFeature {
    int cls = 0;
    Vector vec;
};

// hard: mean of h columns labeled with the class; classes with no frames are
// omitted. soft: softmax-weighted sum of h columns, one feature per class.
std::vector<ClassFeature> class_features(const ForwardCache& cache,
                                         FeatureMode mode,
                                         const std::vector<int>* labels);

// 1 - <u,v>/(|u||v|), in [0,2]. Zero-norm inputs map to 1.
double cosine_distance(const Vector& u, const Vector& v);

struct NpairResult {
    double loss = 0.0;
    Matrix grad_h_a;  // hidden x T_a
    Matrix grad_h_b;  // hidden x T_b
    Matrix grad_f_a;  // soft mode only, otherwise 0x0
    Matrix grad_f_b;
};

// N-pair loss over a pair of videos: for every shared class, pulls its class
// features together while pushing them away from the non-shared classes of
// either video. base_variant zeroes the non-shared distances, reducing the
// loss to pure affinity between shared-class features.
NpairResult npair_loss_and_grad(const ForwardCache& cache_a,
                                const ForwardCache& cache_b,
                                const ActionSet& set_a, const ActionSet& set_b,
                                const std::vector<int>* labels_a,
                                const std::vector<int>* labels_b,
                                FeatureMode mode, bool base_variant = false);

// weight * ce + (1 - weight) * npair; weight must lie in [0,1].
double total_loss(double ce, double npair, double weight);

struct Gradients {
    Matrix w1;
    Vector b1;
    Matrix w2;
    Vector b2;

    static Gradients zeros_like(const NetworkParams& params);
    Gradients& operator+=(const Gradients& other);
    bool finite() const;
};

// Backpropagates per-frame gradients on f and h into parameter gradients.
// Either matrix may be empty (treated as zero).
Gradients backprop(const NetworkParams& params, const FeatureSequence& x,
                   const ForwardCache& cache, const Matrix& grad_f,
                   const Matrix& grad_h);

// params -= lr * grads. Throws if lr <= 0 or any gradient is non-finite.
void sgd_step(NetworkParams& params, const Gradients& grads, double lr);

}  // namespace scv

#endif
