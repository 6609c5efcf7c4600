#include "pxgen/model.hpp"

#include "pxgen/errors.hpp"
#include "pxgen/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace pxgen {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMatMap = Eigen::Map<const RowMat>;
using MatMap = Eigen::Map<RowMat>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;
using VecMap = Eigen::Map<Eigen::VectorXd>;

constexpr double kProbFloor = 1e-7;
constexpr double kProbCeil = 1.0 - 1e-7;

ConstMatMap weights_of(const DenseLayer& layer) {
    return {layer.weights.data(), static_cast<Eigen::Index>(layer.out_dim()),
            static_cast<Eigen::Index>(layer.in_dim())};
}

DenseLayer make_layer(std::size_t in, std::size_t out) {
    return {Matrix(out, in), Vector(out, 0.0)};
}

std::vector<std::span<double>> tensors(VaeParams& p) {
    std::vector<std::span<double>> out;
    for (auto* stack : {&p.encoder, &p.decoder}) {
        for (auto& layer : *stack) {
            out.push_back(layer.weights.values());
            out.emplace_back(layer.bias);
        }
    }
    return out;
}

std::vector<std::span<const double>> tensors(const VaeParams& p) {
    std::vector<std::span<const double>> out;
    for (const auto* stack : {&p.encoder, &p.decoder}) {
        for (const auto& layer : *stack) {
            out.push_back(layer.weights.values());
            out.emplace_back(layer.bias);
        }
    }
    return out;
}

// Inputs seen by each layer of a stack; inputs[l + 1] is the tanh output of
// layer l.
struct StackTrace {
    std::vector<RowMat> inputs;
};

RowMat forward_stack(const std::vector<DenseLayer>& layers, RowMat x, StackTrace* trace) {
    if (trace != nullptr) {
        trace->inputs.clear();
    }
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const auto& layer = layers[l];
        RowMat a(x.rows(), static_cast<Eigen::Index>(layer.out_dim()));
        a.noalias() = x * weights_of(layer).transpose();
        a.rowwise() += ConstVecMap(layer.bias.data(), static_cast<Eigen::Index>(layer.bias.size()))
                           .transpose();
        if (l + 1 < layers.size()) {
            a = a.array().tanh().matrix();
        }
        if (trace != nullptr) {
            trace->inputs.push_back(std::move(x));
        }
        x = std::move(a);
    }
    return x;
}

// Backpropagates `d_out` (gradient w.r.t. the stack's final pre-activation).
// Parameter gradients are summed over rows into `grads`; per-layer
// pre-activation gradients are kept in `deltas`. Returns the gradient w.r.t.
// the stack input when `want_input_grad`.
RowMat backward_stack(const std::vector<DenseLayer>& layers, const StackTrace& trace, RowMat d_out,
                      std::vector<DenseLayer>* grads, std::vector<RowMat>* deltas,
                      bool want_input_grad) {
    if (deltas != nullptr) {
        deltas->assign(layers.size(), RowMat());
    }
    RowMat d = std::move(d_out);
    for (std::size_t l = layers.size(); l-- > 0;) {
        const auto& layer = layers[l];
        const RowMat& in = trace.inputs[l];
        if (grads != nullptr) {
            auto& g = (*grads)[l];
            MatMap(g.weights.data(), static_cast<Eigen::Index>(g.out_dim()),
                   static_cast<Eigen::Index>(g.in_dim()))
                .noalias() += d.transpose() * in;
            // reduce into an aligned temporary; the bias buffer's own alignment
            // would otherwise decide the summation order
            const Eigen::VectorXd bias_grad = d.colwise().sum().transpose();
            VecMap(g.bias.data(), bias_grad.size()) += bias_grad;
        }
        RowMat d_in;
        if (l > 0 || want_input_grad) {
            d_in.noalias() = d * weights_of(layer);
            if (l > 0) {
                d_in.array() *= 1.0 - in.array().square();
            }
        }
        if (deltas != nullptr) {
            (*deltas)[l] = std::move(d);
        }
        d = std::move(d_in);
    }
    return d;
}

struct BatchPass {
    StackTrace enc;
    StackTrace dec;
    std::vector<RowMat> enc_delta;
    std::vector<RowMat> dec_delta;
    Eigen::VectorXd recon;
    Eigen::VectorXd kld;
};

// One ELBO evaluation over the rows of `x`. Gradients (summed over rows) go to
// `grads` when given; `keep_deltas` retains what per-example gradients need.
BatchPass run_batch(const VaeParams& p, const RowMat& x, const RowMat& eps, VaeGradient* grads,
                    bool keep_deltas) {
    const auto latent = static_cast<Eigen::Index>(p.latent_dim);
    BatchPass pass;

    const RowMat enc_out = forward_stack(p.encoder, x, &pass.enc);
    const RowMat mu = enc_out.leftCols(latent);
    const RowMat log_var = enc_out.rightCols(latent);
    const RowMat var = log_var.array().exp().matrix();
    const RowMat sigma = (0.5 * log_var.array()).exp().matrix();
    const RowMat z = mu + sigma.cwiseProduct(eps);

    const RowMat logits = forward_stack(p.decoder, z, &pass.dec);
    const RowMat x_hat = (1.0 / (1.0 + (-logits.array()).exp())).matrix();
    const auto clamped = x_hat.array().max(kProbFloor).min(kProbCeil);
    pass.recon = -(x.array() * clamped.log() + (1.0 - x.array()) * (1.0 - clamped).log())
                      .rowwise()
                      .sum()
                      .matrix();
    pass.kld = (-0.5 * (1.0 + log_var.array() - mu.array().square() - var.array()))
                   .rowwise()
                   .sum()
                   .matrix();

    if (grads == nullptr && !keep_deltas) {
        return pass;
    }

    // d(BCE)/d(logit) = x̂ - x inside the clamp window, 0 where the clamp is active.
    const RowMat d_logits =
        ((x_hat.array() >= kProbFloor) && (x_hat.array() <= kProbCeil))
            .select(x_hat - x, RowMat::Zero(x.rows(), x.cols()));

    const RowMat dz = backward_stack(p.decoder, pass.dec, d_logits,
                                     grads ? &grads->decoder : nullptr,
                                     keep_deltas ? &pass.dec_delta : nullptr, true);

    RowMat d_enc(x.rows(), 2 * latent);
    d_enc.leftCols(latent) = dz + mu;
    d_enc.rightCols(latent) =
        (dz.array() * eps.array() * 0.5 * sigma.array() + 0.5 * (var.array() - 1.0)).matrix();
    backward_stack(p.encoder, pass.enc, std::move(d_enc), grads ? &grads->encoder : nullptr,
                   keep_deltas ? &pass.enc_delta : nullptr, false);
    return pass;
}

void check_image_dim(const VaeParams& p, const Image& x, const char* who) {
    if (x.size() != p.input_dim()) {
        throw InvalidArgument(std::string(who) + ": image has " + std::to_string(x.size()) +
                              " pixels, model expects " + std::to_string(p.input_dim()));
    }
}

void check_latent_dim(const VaeParams& p, std::size_t n, const char* who) {
    if (n != p.latent_dim) {
        throw InvalidArgument(std::string(who) + ": vector has dimension " + std::to_string(n) +
                              ", latent dimension is " + std::to_string(p.latent_dim));
    }
}

RowMat row_of(std::span<const double> v) {
    RowMat m(1, static_cast<Eigen::Index>(v.size()));
    std::copy(v.begin(), v.end(), m.data());
    return m;
}

Image to_image(const VaeParams& p, const double* begin) {
    Image img;
    img.width = p.image_width;
    img.height = p.image_height;
    img.pixels.assign(begin, begin + p.input_dim());
    return img;
}

RowMat decode_rows(const VaeParams& p, RowMat z) {
    const RowMat logits = forward_stack(p.decoder, std::move(z), nullptr);
    return (1.0 / (1.0 + (-logits.array()).exp())).matrix();
}

}  // namespace

Image::Image(int w, int h, std::vector<double> px) : width(w), height(h), pixels(std::move(px)) {
    if (w <= 0 || h <= 0) {
        throw InvalidArgument("Image: width and height must be positive");
    }
    if (pixels.size() != static_cast<std::size_t>(w) * static_cast<std::size_t>(h)) {
        throw InvalidArgument("Image: pixel count does not match width × height");
    }
    for (double v : pixels) {
        if (!(v >= 0.0 && v <= 1.0)) {
            throw InvalidArgument("Image: intensity outside [0, 1]");
        }
    }
}

std::size_t VaeParams::parameter_count() const {
    std::size_t n = 0;
    for (const auto* stack : {&encoder, &decoder}) {
        for (const auto& layer : *stack) {
            n += layer.weights.values().size() + layer.bias.size();
        }
    }
    return n;
}

void VaeParams::validate() const {
    if (image_width <= 0 || image_height <= 0 || latent_dim == 0) {
        throw InvalidArgument("VaeParams: image size and latent dimension must be positive");
    }
    const std::size_t layers = hidden_dims.size() + 1;
    if (encoder.size() != layers || decoder.size() != layers) {
        throw InvalidArgument("VaeParams: layer count does not match hidden dimensions");
    }
    std::vector<std::size_t> enc_dims{input_dim()};
    enc_dims.insert(enc_dims.end(), hidden_dims.begin(), hidden_dims.end());
    enc_dims.push_back(2 * latent_dim);
    std::vector<std::size_t> dec_dims{latent_dim};
    dec_dims.insert(dec_dims.end(), hidden_dims.rbegin(), hidden_dims.rend());
    dec_dims.push_back(input_dim());
    for (std::size_t l = 0; l < layers; ++l) {
        for (const auto& [stack, dims] : {std::pair{&encoder, &enc_dims}, {&decoder, &dec_dims}}) {
            const auto& layer = (*stack)[l];
            if (layer.in_dim() != (*dims)[l] || layer.out_dim() != (*dims)[l + 1] ||
                layer.bias.size() != (*dims)[l + 1]) {
                throw InvalidArgument("VaeParams: layer " + std::to_string(l) +
                                      " has inconsistent shape");
            }
        }
    }
}

Vector VaeParams::flatten() const {
    Vector flat;
    flat.reserve(parameter_count());
    for (auto t : tensors(*this)) {
        flat.insert(flat.end(), t.begin(), t.end());
    }
    return flat;
}

void VaeParams::assign_flat(std::span<const double> flat) {
    if (flat.size() != parameter_count()) {
        throw InvalidArgument("VaeParams::assign_flat: wrong parameter count");
    }
    std::size_t offset = 0;
    for (auto t : tensors(*this)) {
        std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(offset), t.size(), t.begin());
        offset += t.size();
    }
}

VaeParams zero_vae(int image_width, int image_height, std::size_t latent_dim,
                   std::vector<std::size_t> hidden_dims) {
    VaeParams p;
    p.image_width = image_width;
    p.image_height = image_height;
    p.latent_dim = latent_dim;
    p.hidden_dims = std::move(hidden_dims);
    if (image_width <= 0 || image_height <= 0 || latent_dim == 0) {
        throw InvalidArgument("zero_vae: image size and latent dimension must be positive");
    }
    for (std::size_t h : p.hidden_dims) {
        if (h == 0) {
            throw InvalidArgument("zero_vae: hidden dimensions must be positive");
        }
    }
    std::size_t in = p.input_dim();
    for (std::size_t h : p.hidden_dims) {
        p.encoder.push_back(make_layer(in, h));
        in = h;
    }
    p.encoder.push_back(make_layer(in, 2 * latent_dim));
    in = latent_dim;
    for (auto it = p.hidden_dims.rbegin(); it != p.hidden_dims.rend(); ++it) {
        p.decoder.push_back(make_layer(in, *it));
        in = *it;
    }
    p.decoder.push_back(make_layer(in, p.input_dim()));
    return p;
}

VaeParams init_vae(int image_width, int image_height, std::size_t latent_dim,
                   std::vector<std::size_t> hidden_dims, std::uint64_t seed) {
    VaeParams p = zero_vae(image_width, image_height, latent_dim, std::move(hidden_dims));
    Rng rng(seed);
    for (auto* stack : {&p.encoder, &p.decoder}) {
        for (auto& layer : *stack) {
            const double bound =
                std::sqrt(6.0 / static_cast<double>(layer.in_dim() + layer.out_dim()));
            for (double& w : layer.weights.values()) {
                w = rng.uniform(-bound, bound);
            }
        }
    }
    return p;
}

LatentGaussian encode(const VaeParams& params, const Image& x) {
    check_image_dim(params, x, "encode");
    const RowMat out = forward_stack(params.encoder, row_of(x.pixels), nullptr);
    LatentGaussian g;
    g.mean.assign(out.data(), out.data() + params.latent_dim);
    g.log_variance.assign(out.data() + params.latent_dim, out.data() + 2 * params.latent_dim);
    return g;
}

Vector reparameterize(const LatentGaussian& g, std::span<const double> noise) {
    if (g.mean.size() != g.log_variance.size() || noise.size() != g.mean.size()) {
        throw InvalidArgument("reparameterize: dimension mismatch");
    }
    Vector z(noise.size());
    for (std::size_t j = 0; j < z.size(); ++j) {
        z[j] = g.mean[j] + std::exp(0.5 * g.log_variance[j]) * noise[j];
    }
    return z;
}

Image decode(const VaeParams& params, std::span<const double> z) {
    check_latent_dim(params, z.size(), "decode");
    const RowMat x_hat = decode_rows(params, row_of(z));
    return to_image(params, x_hat.data());
}

Image reconstruct(const VaeParams& params, const Image& x) {
    return decode(params, encode(params, x).mean);
}

ElboTerms elbo_loss(const VaeParams& params, const Image& x, std::span<const double> noise) {
    check_image_dim(params, x, "elbo_loss");
    check_latent_dim(params, noise.size(), "elbo_loss");
    const BatchPass pass = run_batch(params, row_of(x.pixels), row_of(noise), nullptr, false);
    ElboTerms t;
    t.recon = pass.recon(0);
    t.kld = pass.kld(0);
    t.total = t.recon + t.kld;
    return t;
}

VaeGradient gradient(const VaeParams& params, const Image& x, std::span<const double> noise) {
    check_image_dim(params, x, "gradient");
    check_latent_dim(params, noise.size(), "gradient");
    VaeGradient g = zero_vae(params.image_width, params.image_height, params.latent_dim,
                             params.hidden_dims);
    run_batch(params, row_of(x.pixels), row_of(noise), &g, false);
    return g;
}

Matrix per_example_gradients(const VaeParams& params, std::span<const Image> images) {
    const std::size_t n = images.size();
    const std::size_t count = params.parameter_count();
    Matrix out(n, count);
    if (n == 0) {
        return out;
    }
    const std::size_t d = params.input_dim();
    RowMat x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < n; ++i) {
        check_image_dim(params, images[i], "per_example_gradients");
        std::copy(images[i].pixels.begin(), images[i].pixels.end(),
                  x.data() + static_cast<std::ptrdiff_t>(i * d));
    }
    const RowMat eps = RowMat::Zero(static_cast<Eigen::Index>(n),
                                    static_cast<Eigen::Index>(params.latent_dim));
    const BatchPass pass = run_batch(params, x, eps, nullptr, true);

    // The weight gradient of one example is the outer product delta ⊗ input.
    for (std::size_t b = 0; b < n; ++b) {
        double* dst = out.row(b).data();
        const auto eb = static_cast<Eigen::Index>(b);
        for (const auto& [trace, deltas] :
             {std::pair{&pass.enc, &pass.enc_delta}, {&pass.dec, &pass.dec_delta}}) {
            for (std::size_t l = 0; l < deltas->size(); ++l) {
                const RowMat& delta = (*deltas)[l];
                const RowMat& in = trace->inputs[l];
                const Eigen::Index outs = delta.cols();
                const Eigen::Index ins = in.cols();
                MatMap(dst, outs, ins).noalias() = delta.row(eb).transpose() * in.row(eb);
                dst += outs * ins;
                VecMap(dst, outs) = delta.row(eb).transpose();
                dst += outs;
            }
        }
    }
    return out;
}

void TrainConfig::validate() const {
    if (epochs <= 0 || batch_size <= 0 || checkpoint_interval <= 0 || latent_dim == 0) {
        throw InvalidArgument("TrainConfig: epochs, batch size, checkpoint interval and latent "
                              "dimension must be positive");
    }
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
        throw InvalidArgument("TrainConfig: learning rate must be positive");
    }
    for (std::size_t h : hidden_dims) {
        if (h == 0) {
            throw InvalidArgument("TrainConfig: hidden dimensions must be positive");
        }
    }
}

std::vector<int> checkpoint_schedule(int epochs, int interval) {
    std::vector<int> out;
    for (int e = 1; e <= epochs; ++e) {
        if (e % interval == 0 || e == epochs) {
            out.push_back(e);
        }
    }
    return out;
}

TrainResult train(std::span<const Image> dataset, const TrainConfig& config) {
    config.validate();
    if (dataset.empty()) {
        throw InsufficientData("train: empty dataset");
    }
    const int width = dataset.front().width;
    const int height = dataset.front().height;
    for (const auto& img : dataset) {
        if (img.width != width || img.height != height || img.size() != img.pixels.size() ||
            img.pixels.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
            throw InvalidArgument("train: images differ in size");
        }
    }

    TrainResult result;
    result.params = init_vae(width, height, config.latent_dim, config.hidden_dims,
                             derive_seed(config.seed, 0));
    VaeParams& params = result.params;
    Rng order_rng(derive_seed(config.seed, 1));
    Rng noise_rng(derive_seed(config.seed, 2));

    VaeGradient grads = zero_vae(width, height, config.latent_dim, config.hidden_dims);
    VaeParams first_moment = grads;
    VaeParams second_moment = grads;
    auto param_t = tensors(params);
    auto grad_t = tensors(grads);
    auto m_t = tensors(first_moment);
    auto v_t = tensors(second_moment);

    constexpr double beta1 = 0.9;
    constexpr double beta2 = 0.999;
    constexpr double adam_eps = 1e-8;
    long step = 0;

    const std::size_t n = dataset.size();
    const std::size_t d = params.input_dim();
    const auto latent = static_cast<Eigen::Index>(config.latent_dim);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    const auto schedule = checkpoint_schedule(config.epochs, config.checkpoint_interval);

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        order_rng.shuffle(order);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t stop = std::min(n, start + static_cast<std::size_t>(config.batch_size));
            const auto rows = static_cast<Eigen::Index>(stop - start);
            RowMat x(rows, static_cast<Eigen::Index>(d));
            for (std::size_t i = start; i < stop; ++i) {
                const auto& px = dataset[order[i]].pixels;
                std::copy(px.begin(), px.end(), x.data() + static_cast<std::ptrdiff_t>((i - start) * d));
            }
            RowMat eps(rows, latent);
            for (Eigen::Index i = 0; i < eps.size(); ++i) {
                eps.data()[i] = noise_rng.normal();
            }

            for (auto t : grad_t) {
                std::fill(t.begin(), t.end(), 0.0);
            }
            const BatchPass pass = run_batch(params, x, eps, &grads, false);
            epoch_loss += pass.recon.sum() + pass.kld.sum();

            ++step;
            const double scale = 1.0 / static_cast<double>(rows);
            const double correction1 = 1.0 - std::pow(beta1, static_cast<double>(step));
            const double correction2 = 1.0 - std::pow(beta2, static_cast<double>(step));
            for (std::size_t t = 0; t < param_t.size(); ++t) {
                auto p = param_t[t];
                auto g = grad_t[t];
                auto m = m_t[t];
                auto v = v_t[t];
                for (std::size_t i = 0; i < p.size(); ++i) {
                    const double gi = g[i] * scale;
                    m[i] = beta1 * m[i] + (1.0 - beta1) * gi;
                    v[i] = beta2 * v[i] + (1.0 - beta2) * gi * gi;
                    const double m_hat = m[i] / correction1;
                    const double v_hat = v[i] / correction2;
                    p[i] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + adam_eps);
                }
            }
        }
        result.loss_curve.push_back(epoch_loss / static_cast<double>(n));
        if (std::find(schedule.begin(), schedule.end(), epoch) != schedule.end()) {
            result.checkpoints.push_back({epoch, params, config.learning_rate, config.seed});
        }
    }
    return result;
}

std::vector<Image> sample(const VaeParams& params, std::size_t n, std::uint64_t seed) {
    if (n == 0) {
        throw InvalidArgument("sample: n must be positive");
    }
    Rng rng(seed);
    const auto latent = static_cast<Eigen::Index>(params.latent_dim);
    RowMat z(static_cast<Eigen::Index>(n), latent);
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        z.data()[i] = rng.normal();
    }
    const RowMat x_hat = decode_rows(params, std::move(z));
    std::vector<Image> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back(to_image(params, x_hat.data() + static_cast<std::ptrdiff_t>(i * params.input_dim())));
    }
    return out;
}

std::vector<Image> GenerativeModel::sample(std::size_t n, std::uint64_t seed) const {
    if (n == 0) {
        throw InvalidArgument("sample: n must be positive");
    }
    Rng rng(seed);
    std::vector<Image> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Vector z = rng.normals(latent_dim());
        out.push_back(decode(z));
    }
    return out;
}

}  // namespace pxgen
