#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "icsdet/matrix.hpp"
#include "icsdet/rng.hpp"

namespace icsdet {

enum class Activation : std::uint8_t { ReLU = 0, Sigmoid = 1, Identity = 2 };

struct DenseLayer {
    Matrix weights;            // out x in
    std::vector<double> bias;  // out
    Activation activation = Activation::Identity;

    std::size_t in_dim() const noexcept { return weights.cols(); }
    std::size_t out_dim() const noexcept { return weights.rows(); }

    bool operator==(const DenseLayer&) const = default;
};

// Dense feed-forward network. Inverted dropout is applied to the output of
// every hidden layer during training only.
class Mlp {
public:
    Mlp() = default;
    // Glorot-uniform weights, zero biases. dims = {in, h1, ..., out}.
    Mlp(std::span<const std::size_t> dims, Activation hidden, Activation output,
        double dropout_rate, Rng& rng);
    Mlp(std::vector<DenseLayer> layers, double dropout_rate);

    const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
    // Mutable access invalidates outstanding forward caches.
    std::vector<DenseLayer>& mutable_layers() noexcept {
        ++generation_;
        return layers_;
    }

    double dropout_rate() const noexcept { return dropout_rate_; }
    std::size_t input_dim() const;
    std::size_t output_dim() const;
    std::size_t parameter_count() const;
    std::uint64_t generation() const noexcept { return generation_; }

    bool operator==(const Mlp& other) const {
        return layers_ == other.layers_ && dropout_rate_ == other.dropout_rate_;
    }

private:
    void validate() const;

    std::vector<DenseLayer> layers_;
    double dropout_rate_ = 0.0;
    std::uint64_t generation_ = 0;
};

struct ForwardCache {
    std::vector<Matrix> inputs;  // input to each layer
    std::vector<Matrix> pre;     // pre-activation of each layer
    std::vector<Matrix> masks;   // per layer dropout scale; empty when inactive
    const Mlp* model = nullptr;
    std::uint64_t generation = 0;
};

struct ForwardResult {
    Matrix output;
    ForwardCache cache;
};

// rng is required only when training with a non-zero dropout rate.
ForwardResult forward(const Mlp& model, const Matrix& x, bool training, Rng* rng = nullptr);
Matrix predict(const Mlp& model, const Matrix& x);
// Inference pass through the first `n_layers` layers only.
Matrix forward_prefix(const Mlp& model, const Matrix& x, std::size_t n_layers);

struct Gradients {
    std::vector<Matrix> weights;
    std::vector<std::vector<double>> bias;
};

// output_grad is dL/d(output); the returned gradients are exact for the
// cached forward pass.
Gradients backward(const Mlp& model, const ForwardCache& cache, const Matrix& output_grad);

inline constexpr double kProbClip = 1e-7;

enum class LossKind { Bce, WeightedBce, SquaredError };

struct Loss {
    LossKind kind = LossKind::Bce;
    double w_s = 1.0;  // weight on positive (attack) targets
    double w_l = 1.0;  // weight on negative targets

    static Loss bce() { return {}; }
    static Loss weighted_bce(double w_s, double w_l) { return {LossKind::WeightedBce, w_s, w_l}; }
    static Loss squared_error() { return {LossKind::SquaredError, 1.0, 1.0}; }
};

// Means are taken over every element of the prediction matrix.
double bce_loss(const Matrix& pred, const Matrix& target);
double weighted_bce_loss(const Matrix& pred, const Matrix& target, double w_s, double w_l);
double loss_value(const Loss& loss, const Matrix& pred, const Matrix& target);
Matrix loss_gradient(const Loss& loss, const Matrix& pred, const Matrix& target);

struct AdamHyper {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    AdamHyper hyper;
    std::vector<std::vector<double>> m;  // W0, b0, W1, b1, ...
    std::vector<std::vector<double>> v;
    std::uint64_t t = 0;
};

// One Adam update of a single parameter tensor at (already incremented)
// step t, with bias correction.
void adam_update(std::span<double> params, std::span<const double> grads, std::span<double> m,
                 std::span<double> v, std::uint64_t t, const AdamHyper& hyper);

AdamState adam_init(const Mlp& model, const AdamHyper& hyper = {});
void adam_step(Mlp& model, const Gradients& grads, AdamState& state);

// Central finite differences (h = 1e-5) against backward(); returns the
// maximum relative error |a - n| / max(|a|, |n|, 1e-8). Dropout is ignored.
double grad_check(const Mlp& model, const Loss& loss, const Matrix& x, const Matrix& target);

struct TrainOptions {
    std::size_t epochs = 50;
    std::size_t batch_size = 64;
    std::uint64_t seed = 0;
    AdamHyper adam;
};

struct TrainResult {
    Mlp model;
    std::vector<double> loss_history;  // mean mini-batch loss per epoch
};

TrainResult train_mlp(Mlp model, const Matrix& x, const Matrix& target, const Loss& loss,
                      const TrainOptions& options);

Matrix labels_to_column(std::span<const std::uint8_t> labels);

struct SaeModel {
    Mlp encoder;
    Mlp decoder;

    std::size_t input_dim() const { return encoder.input_dim(); }
    std::size_t representation_dim() const { return encoder.output_dim(); }

    bool operator==(const SaeModel&) const = default;
};

// Encoder {in -> hidden...} with ReLU units; decoder mirrors it and ends in
// a sigmoid reconstruction layer.
SaeModel make_sae(std::size_t input_dim, std::span<const std::size_t> hidden, double dropout_rate,
                  Rng& rng);

struct SaeTrainResult {
    SaeModel model;
    std::vector<double> loss_history;
};

// Minimises BCE between x (in [0,1]) and its reconstruction.
SaeTrainResult train_autoencoder(SaeModel sae, const Matrix& x, const TrainOptions& options);
Matrix encode(const SaeModel& sae, const Matrix& x);
Matrix decode(const SaeModel& sae, const Matrix& representation);
double reconstruction_loss(const SaeModel& sae, const Matrix& x);

}  // namespace icsdet
