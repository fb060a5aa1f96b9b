#include "icsdet/neural.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "icsdet/error.hpp"

namespace icsdet {

namespace {

double activate(Activation a, double z) {
    switch (a) {
        case Activation::ReLU: return z > 0.0 ? z : 0.0;
        case Activation::Sigmoid: return 1.0 / (1.0 + std::exp(-z));
        case Activation::Identity: return z;
    }
    return z;
}

// Derivative with respect to the pre-activation. ReLU'(0) is taken as 0.
double activation_derivative(Activation a, double z) {
    switch (a) {
        case Activation::ReLU: return z > 0.0 ? 1.0 : 0.0;
        case Activation::Sigmoid: {
            const double s = 1.0 / (1.0 + std::exp(-z));
            return s * (1.0 - s);
        }
        case Activation::Identity: return 1.0;
    }
    return 1.0;
}

void check_same_shape(const Matrix& a, const Matrix& b, const char* what) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        fail(ErrorCode::DimensionMismatch, std::string(what) + ": shape " +
                                               std::to_string(a.rows()) + "x" +
                                               std::to_string(a.cols()) + " vs " +
                                               std::to_string(b.rows()) + "x" +
                                               std::to_string(b.cols()));
    }
}

Matrix affine(const DenseLayer& layer, const Matrix& x) {
    Matrix z(x.rows(), layer.out_dim());
    for (std::size_t r = 0; r < x.rows(); ++r) {
        auto in = x.row(r);
        for (std::size_t o = 0; o < layer.out_dim(); ++o) {
            auto w = layer.weights.row(o);
            double acc = layer.bias[o];
            for (std::size_t i = 0; i < in.size(); ++i) acc += w[i] * in[i];
            z(r, o) = acc;
        }
    }
    return z;
}

double clip_prob(double p) { return std::clamp(p, kProbClip, 1.0 - kProbClip); }

}  // namespace

Mlp::Mlp(std::span<const std::size_t> dims, Activation hidden, Activation output,
         double dropout_rate, Rng& rng)
    : dropout_rate_(dropout_rate) {
    if (dims.size() < 2) fail(ErrorCode::InvalidArgument, "Mlp: need at least input and output dims");
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const std::size_t in = dims[l], out = dims[l + 1];
        const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
        std::uniform_real_distribution<double> init(-limit, limit);
        DenseLayer layer;
        layer.weights = Matrix(out, in);
        for (auto& w : layer.weights.data()) w = init(rng);
        layer.bias.assign(out, 0.0);
        layer.activation = l + 2 == dims.size() ? output : hidden;
        layers_.push_back(std::move(layer));
    }
    validate();
}

Mlp::Mlp(std::vector<DenseLayer> layers, double dropout_rate)
    : layers_(std::move(layers)), dropout_rate_(dropout_rate) {
    validate();
}

void Mlp::validate() const {
    if (layers_.empty()) fail(ErrorCode::InvalidArgument, "Mlp: no layers");
    if (!(dropout_rate_ >= 0.0 && dropout_rate_ < 1.0)) {
        fail(ErrorCode::InvalidArgument, "Mlp: dropout rate must lie in [0,1)");
    }
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const auto& layer = layers_[l];
        if (layer.bias.size() != layer.out_dim() || layer.out_dim() == 0 || layer.in_dim() == 0) {
            fail(ErrorCode::ShapeMismatch, "Mlp: layer " + std::to_string(l) + " is malformed");
        }
        if (l > 0 && layers_[l - 1].out_dim() != layer.in_dim()) {
            fail(ErrorCode::ShapeMismatch, "Mlp: layer " + std::to_string(l) +
                                               " input does not match previous output");
        }
    }
}

std::size_t Mlp::input_dim() const { return layers_.front().in_dim(); }
std::size_t Mlp::output_dim() const { return layers_.back().out_dim(); }

std::size_t Mlp::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += l.weights.size() + l.bias.size();
    return n;
}

ForwardResult forward(const Mlp& model, const Matrix& x, bool training, Rng* rng) {
    if (x.cols() != model.input_dim()) {
        fail(ErrorCode::DimensionMismatch, "forward: input has " + std::to_string(x.cols()) +
                                               " columns, model expects " +
                                               std::to_string(model.input_dim()));
    }
    const auto& layers = model.layers();
    const bool dropout = training && model.dropout_rate() > 0.0;
    if (dropout && rng == nullptr) fail(ErrorCode::InvalidArgument, "forward: dropout needs an rng");

    ForwardResult result;
    auto& cache = result.cache;
    cache.model = &model;
    cache.generation = model.generation();
    cache.inputs.reserve(layers.size());
    cache.pre.reserve(layers.size());
    cache.masks.resize(layers.size());

    Matrix current = x;
    const double keep_scale = 1.0 / (1.0 - model.dropout_rate());
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const auto& layer = layers[l];
        Matrix z = affine(layer, current);
        Matrix a(z.rows(), z.cols());
        for (std::size_t i = 0; i < z.size(); ++i) {
            a.data()[i] = activate(layer.activation, z.data()[i]);
            if (!std::isfinite(a.data()[i])) {
                fail(ErrorCode::NonFiniteActivation,
                     "forward: non-finite activation in layer " + std::to_string(l));
            }
        }
        if (dropout && l + 1 < layers.size()) {
            Matrix mask(a.rows(), a.cols());
            for (std::size_t i = 0; i < mask.size(); ++i) {
                mask.data()[i] = unit(*rng) < model.dropout_rate() ? 0.0 : keep_scale;
                a.data()[i] *= mask.data()[i];
            }
            cache.masks[l] = std::move(mask);
        }
        cache.inputs.push_back(std::move(current));
        cache.pre.push_back(std::move(z));
        current = std::move(a);
    }
    result.output = std::move(current);
    return result;
}

Matrix forward_prefix(const Mlp& model, const Matrix& x, std::size_t n_layers) {
    if (x.cols() != model.input_dim()) {
        fail(ErrorCode::DimensionMismatch, "forward: input has " + std::to_string(x.cols()) +
                                               " columns, model expects " +
                                               std::to_string(model.input_dim()));
    }
    const auto& layers = model.layers();
    n_layers = std::min(n_layers, layers.size());
    Matrix current = x;
    for (std::size_t l = 0; l < n_layers; ++l) {
        Matrix z = affine(layers[l], current);
        for (auto& v : z.data()) {
            v = activate(layers[l].activation, v);
            if (!std::isfinite(v)) {
                fail(ErrorCode::NonFiniteActivation,
                     "forward: non-finite activation in layer " + std::to_string(l));
            }
        }
        current = std::move(z);
    }
    return current;
}

Matrix predict(const Mlp& model, const Matrix& x) {
    return forward_prefix(model, x, model.layers().size());
}

Gradients backward(const Mlp& model, const ForwardCache& cache, const Matrix& output_grad) {
    const auto& layers = model.layers();
    if (cache.model != &model || cache.generation != model.generation() ||
        cache.pre.size() != layers.size()) {
        fail(ErrorCode::StaleCache, "backward: cache does not belong to the current model state");
    }
    check_same_shape(output_grad, cache.pre.back(), "backward");

    Gradients g;
    g.weights.resize(layers.size());
    g.bias.resize(layers.size());
    Matrix upstream = output_grad;
    for (std::size_t l = layers.size(); l-- > 0;) {
        const auto& layer = layers[l];
        const auto& z = cache.pre[l];
        const auto& in = cache.inputs[l];
        Matrix delta(z.rows(), z.cols());
        for (std::size_t i = 0; i < z.size(); ++i) {
            double d = upstream.data()[i];
            if (!cache.masks[l].empty()) d *= cache.masks[l].data()[i];
            delta.data()[i] = d * activation_derivative(layer.activation, z.data()[i]);
        }

        Matrix dw(layer.out_dim(), layer.in_dim());
        std::vector<double> db(layer.out_dim(), 0.0);
        for (std::size_t r = 0; r < delta.rows(); ++r) {
            auto x_row = in.row(r);
            for (std::size_t o = 0; o < layer.out_dim(); ++o) {
                const double d = delta(r, o);
                if (d == 0.0) continue;
                db[o] += d;
                auto w_row = dw.row(o);
                for (std::size_t i = 0; i < x_row.size(); ++i) w_row[i] += d * x_row[i];
            }
        }
        if (l > 0) {
            Matrix down(delta.rows(), layer.in_dim());
            for (std::size_t r = 0; r < delta.rows(); ++r) {
                auto out_row = down.row(r);
                for (std::size_t o = 0; o < layer.out_dim(); ++o) {
                    const double d = delta(r, o);
                    if (d == 0.0) continue;
                    auto w = layer.weights.row(o);
                    for (std::size_t i = 0; i < out_row.size(); ++i) out_row[i] += d * w[i];
                }
            }
            upstream = std::move(down);
        }
        g.weights[l] = std::move(dw);
        g.bias[l] = std::move(db);
    }
    return g;
}

double weighted_bce_loss(const Matrix& pred, const Matrix& target, double w_s, double w_l) {
    check_same_shape(pred, target, "bce_loss");
    if (!(w_l > 0.0 && w_s >= w_l) || !std::isfinite(w_s)) {
        fail(ErrorCode::InvalidWeights, "weighted_bce_loss: need w_s >= w_l > 0");
    }
    if (pred.empty()) return 0.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double p = clip_prob(pred.data()[i]);
        const double y = target.data()[i];
        sum += y * std::log(p) * w_s + (1.0 - y) * std::log(1.0 - p) * w_l;
    }
    return -sum / static_cast<double>(pred.size());
}

double bce_loss(const Matrix& pred, const Matrix& target) {
    return weighted_bce_loss(pred, target, 1.0, 1.0);
}

double loss_value(const Loss& loss, const Matrix& pred, const Matrix& target) {
    switch (loss.kind) {
        case LossKind::Bce: return bce_loss(pred, target);
        case LossKind::WeightedBce: return weighted_bce_loss(pred, target, loss.w_s, loss.w_l);
        case LossKind::SquaredError: {
            check_same_shape(pred, target, "squared_error");
            double sum = 0.0;
            for (std::size_t i = 0; i < pred.size(); ++i) {
                const double d = pred.data()[i] - target.data()[i];
                sum += 0.5 * d * d;
            }
            return pred.empty() ? 0.0 : sum / static_cast<double>(pred.size());
        }
    }
    return 0.0;
}

Matrix loss_gradient(const Loss& loss, const Matrix& pred, const Matrix& target) {
    check_same_shape(pred, target, "loss_gradient");
    Matrix g(pred.rows(), pred.cols());
    if (pred.empty()) return g;
    const double n = static_cast<double>(pred.size());
    const bool squared = loss.kind == LossKind::SquaredError;
    const double w_s = loss.kind == LossKind::WeightedBce ? loss.w_s : 1.0;
    const double w_l = loss.kind == LossKind::WeightedBce ? loss.w_l : 1.0;
    if (loss.kind == LossKind::WeightedBce && !(w_l > 0.0 && w_s >= w_l)) {
        fail(ErrorCode::InvalidWeights, "loss_gradient: need w_s >= w_l > 0");
    }
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double p = pred.data()[i];
        const double y = target.data()[i];
        if (squared) {
            g.data()[i] = (p - y) / n;
        } else if (p < kProbClip || p > 1.0 - kProbClip) {
            g.data()[i] = 0.0;  // flat region of the clip
        } else {
            g.data()[i] = (-y * w_s / p + (1.0 - y) * w_l / (1.0 - p)) / n;
        }
    }
    return g;
}

void adam_update(std::span<double> params, std::span<const double> grads, std::span<double> m,
                 std::span<double> v, std::uint64_t t, const AdamHyper& hyper) {
    if (params.size() != grads.size() || params.size() != m.size() || params.size() != v.size()) {
        fail(ErrorCode::ShapeMismatch, "adam_update: parameter/gradient/moment sizes differ");
    }
    if (t == 0) fail(ErrorCode::InvalidArgument, "adam_update: step count starts at 1");
    const double bc1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        m[i] = hyper.beta1 * m[i] + (1.0 - hyper.beta1) * grads[i];
        v[i] = hyper.beta2 * v[i] + (1.0 - hyper.beta2) * grads[i] * grads[i];
        const double m_hat = m[i] / bc1;
        const double v_hat = v[i] / bc2;
        params[i] -= hyper.lr * m_hat / (std::sqrt(v_hat) + hyper.eps);
    }
}

AdamState adam_init(const Mlp& model, const AdamHyper& hyper) {
    AdamState s;
    s.hyper = hyper;
    for (const auto& layer : model.layers()) {
        s.m.emplace_back(layer.weights.size(), 0.0);
        s.v.emplace_back(layer.weights.size(), 0.0);
        s.m.emplace_back(layer.bias.size(), 0.0);
        s.v.emplace_back(layer.bias.size(), 0.0);
    }
    return s;
}

void adam_step(Mlp& model, const Gradients& grads, AdamState& state) {
    const std::size_t n_layers = model.layers().size();
    if (grads.weights.size() != n_layers || grads.bias.size() != n_layers ||
        state.m.size() != 2 * n_layers || state.v.size() != 2 * n_layers) {
        fail(ErrorCode::ShapeMismatch, "adam_step: gradient/state layout does not match the model");
    }
    ++state.t;
    auto& layers = model.mutable_layers();
    for (std::size_t l = 0; l < n_layers; ++l) {
        adam_update(layers[l].weights.data(), grads.weights[l].data(), state.m[2 * l],
                    state.v[2 * l], state.t, state.hyper);
        adam_update(layers[l].bias, grads.bias[l], state.m[2 * l + 1], state.v[2 * l + 1], state.t,
                    state.hyper);
    }
}

double grad_check(const Mlp& model, const Loss& loss, const Matrix& x, const Matrix& target) {
    constexpr double h = 1e-5;
    Mlp probe(model.layers(), 0.0);
    auto fwd = forward(probe, x, false);
    const auto analytic = backward(probe, fwd.cache, loss_gradient(loss, fwd.output, target));

    auto numeric = [&](double& param) {
        const double saved = param;
        param = saved + h;
        const double up = loss_value(loss, predict(probe, x), target);
        param = saved - h;
        const double down = loss_value(loss, predict(probe, x), target);
        param = saved;
        return (up - down) / (2.0 * h);
    };
    auto rel = [](double a, double n) {
        return std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-8});
    };

    double worst = 0.0;
    auto& layers = probe.mutable_layers();
    for (std::size_t l = 0; l < layers.size(); ++l) {
        for (std::size_t i = 0; i < layers[l].weights.size(); ++i) {
            worst = std::max(worst, rel(analytic.weights[l].data()[i],
                                        numeric(layers[l].weights.data()[i])));
        }
        for (std::size_t i = 0; i < layers[l].bias.size(); ++i) {
            worst = std::max(worst, rel(analytic.bias[l][i], numeric(layers[l].bias[i])));
        }
    }
    return worst;
}

TrainResult train_mlp(Mlp model, const Matrix& x, const Matrix& target, const Loss& loss,
                      const TrainOptions& options) {
    if (options.batch_size == 0) fail(ErrorCode::InvalidArgument, "train_mlp: batch_size must be >= 1");
    if (x.rows() != target.rows()) {
        fail(ErrorCode::DimensionMismatch, "train_mlp: inputs and targets differ in row count");
    }
    if (target.cols() != model.output_dim()) {
        fail(ErrorCode::DimensionMismatch, "train_mlp: target width does not match model output");
    }
    TrainResult result;
    if (options.epochs == 0 || x.rows() == 0) {
        result.model = std::move(model);
        return result;
    }

    Rng rng(options.seed);
    AdamState adam = adam_init(model, options.adam);
    std::vector<std::size_t> order(x.rows());
    std::iota(order.begin(), order.end(), std::size_t{0});

    for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double weighted_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
            const std::size_t end = std::min(order.size(), start + options.batch_size);
            std::span<const std::size_t> idx(order.data() + start, end - start);
            const Matrix xb = x.select_rows(idx);
            const Matrix yb = target.select_rows(idx);

            auto fwd = forward(model, xb, true, &rng);
            const double batch_loss = loss_value(loss, fwd.output, yb);
            if (!std::isfinite(batch_loss)) {
                fail(ErrorCode::NonFiniteLoss, "train_mlp: non-finite loss at epoch " +
                                                   std::to_string(epoch) + ", batch starting at " +
                                                   std::to_string(start));
            }
            weighted_sum += batch_loss * static_cast<double>(idx.size());
            const auto grads = backward(model, fwd.cache, loss_gradient(loss, fwd.output, yb));
            adam_step(model, grads, adam);
        }
        result.loss_history.push_back(weighted_sum / static_cast<double>(order.size()));
    }
    for (const auto& layer : model.layers()) {
        for (double w : layer.weights.data()) {
            if (!std::isfinite(w)) fail(ErrorCode::NonFiniteLoss, "train_mlp: parameters diverged");
        }
    }
    result.model = std::move(model);
    return result;
}

Matrix labels_to_column(std::span<const std::uint8_t> labels) {
    Matrix y(labels.size(), 1);
    for (std::size_t i = 0; i < labels.size(); ++i) y(i, 0) = labels[i];
    return y;
}

SaeModel make_sae(std::size_t input_dim, std::span<const std::size_t> hidden, double dropout_rate,
                  Rng& rng) {
    if (hidden.empty()) fail(ErrorCode::InvalidArgument, "make_sae: need at least one hidden width");
    std::vector<std::size_t> enc_dims{input_dim};
    enc_dims.insert(enc_dims.end(), hidden.begin(), hidden.end());
    std::vector<std::size_t> dec_dims(enc_dims.rbegin(), enc_dims.rend());
    SaeModel sae;
    sae.encoder = Mlp(enc_dims, Activation::ReLU, Activation::ReLU, dropout_rate, rng);
    sae.decoder = Mlp(dec_dims, Activation::ReLU, Activation::Sigmoid, dropout_rate, rng);
    return sae;
}

namespace {

Mlp stack_sae(const SaeModel& sae) {
    std::vector<DenseLayer> layers = sae.encoder.layers();
    layers.insert(layers.end(), sae.decoder.layers().begin(), sae.decoder.layers().end());
    return Mlp(std::move(layers), sae.encoder.dropout_rate());
}

}  // namespace

SaeTrainResult train_autoencoder(SaeModel sae, const Matrix& x, const TrainOptions& options) {
    if (x.cols() != sae.input_dim()) {
        fail(ErrorCode::DimensionMismatch, "train_autoencoder: input width does not match the encoder");
    }
    auto trained = train_mlp(stack_sae(sae), x, x, Loss::bce(), options);
    const auto& layers = trained.model.layers();
    const std::size_t n_enc = sae.encoder.layers().size();
    SaeModel out;
    out.encoder = Mlp(std::vector<DenseLayer>(layers.begin(), layers.begin() + static_cast<long>(n_enc)),
                      sae.encoder.dropout_rate());
    out.decoder = Mlp(std::vector<DenseLayer>(layers.begin() + static_cast<long>(n_enc), layers.end()),
                      sae.decoder.dropout_rate());
    return {std::move(out), std::move(trained.loss_history)};
}

Matrix encode(const SaeModel& sae, const Matrix& x) { return predict(sae.encoder, x); }

Matrix decode(const SaeModel& sae, const Matrix& representation) {
    return predict(sae.decoder, representation);
}

double reconstruction_loss(const SaeModel& sae, const Matrix& x) {
    return bce_loss(decode(sae, encode(sae, x)), x);
}

}  // namespace icsdet
