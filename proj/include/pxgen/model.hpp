#pragma once

#include "pxgen/numerics.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace pxgen {

// Row-major grayscale image with intensities in [0, 1].
struct Image {
    int width = 0;
    int height = 0;
    std::vector<double> pixels;

    Image() = default;
    // Throws InvalidArgument when the size or any intensity is out of range.
    Image(int width, int height, std::vector<double> pixels);

    std::size_t size() const { return pixels.size(); }
    double at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }

    friend bool operator==(const Image&, const Image&) = default;
};

struct LatentGaussian {
    Vector mean;
    Vector log_variance;
};

struct DenseLayer {
    Matrix weights;  // out × in
    Vector bias;     // out

    std::size_t in_dim() const { return weights.cols(); }
    std::size_t out_dim() const { return weights.rows(); }

    friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

// MLP VAE: encoder input → hidden... → 2·latent (mean ‖ log-variance),
// decoder latent → reversed hidden... → input. Hidden layers use tanh, the
// decoder output a logistic sigmoid.
//
// The same struct doubles as the gradient container: a gradient has exactly
// the parameter layout.
struct VaeParams {
    int image_width = 0;
    int image_height = 0;
    std::size_t latent_dim = 0;
    std::vector<std::size_t> hidden_dims;
    std::vector<DenseLayer> encoder;
    std::vector<DenseLayer> decoder;

    std::size_t input_dim() const {
        return static_cast<std::size_t>(image_width) * static_cast<std::size_t>(image_height);
    }
    std::size_t parameter_count() const;

    // Throws InvalidArgument unless the layer shapes chain as documented above.
    void validate() const;

    // Encoder layers then decoder layers; each layer is weights (row-major)
    // followed by bias. Checkpoint payloads and TracIn inner products use this
    // order.
    Vector flatten() const;
    void assign_flat(std::span<const double> flat);

    friend bool operator==(const VaeParams&, const VaeParams&) = default;
};

using VaeGradient = VaeParams;

// Zero-filled parameters with the given architecture.
VaeParams zero_vae(int image_width, int image_height, std::size_t latent_dim,
                   std::vector<std::size_t> hidden_dims);

// Xavier-uniform weights, zero biases.
VaeParams init_vae(int image_width, int image_height, std::size_t latent_dim,
                   std::vector<std::size_t> hidden_dims, std::uint64_t seed);

LatentGaussian encode(const VaeParams& params, const Image& x);
Vector reparameterize(const LatentGaussian& g, std::span<const double> noise);
Image decode(const VaeParams& params, std::span<const double> z);

// decode(encode(x).mean): the canonical deterministic reconstruction.
Image reconstruct(const VaeParams& params, const Image& x);

struct ElboTerms {
    double total = 0.0;
    double recon = 0.0;
    double kld = 0.0;
};

// Summed binary cross-entropy (predictions clamped to [1e-7, 1 - 1e-7]) plus
// analytic KLD to N(0, I), evaluated at z = mean + exp(log_var/2)·noise.
ElboTerms elbo_loss(const VaeParams& params, const Image& x, std::span<const double> noise);

// Exact reverse-mode gradient of elbo_loss(...).total for fixed noise.
VaeGradient gradient(const VaeParams& params, const Image& x, std::span<const double> noise);

// Zero-noise gradients of many examples at once, one flattened row per image.
Matrix per_example_gradients(const VaeParams& params, std::span<const Image> images);

struct TrainConfig {
    int epochs = 50;
    int batch_size = 64;
    double learning_rate = 1e-3;
    std::uint64_t seed = 0;
    int checkpoint_interval = 10;
    std::size_t latent_dim = 8;
    std::vector<std::size_t> hidden_dims{256, 64};

    void validate() const;
};

struct Checkpoint {
    int epoch = 0;
    VaeParams params;
    double learning_rate = 0.0;
    std::uint64_t seed = 0;

    friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

struct TrainResult {
    VaeParams params;
    std::vector<Checkpoint> checkpoints;
    std::vector<double> loss_curve;  // per-epoch mean ELBO loss
};

// Epoch numbers (1-based) at which train() stores checkpoints.
std::vector<int> checkpoint_schedule(int epochs, int interval);

// Minibatch Adam (β1 0.9, β2 0.999, ε 1e-8). Initialization, shuffling and
// noise all derive from config.seed; single-threaded and reproducible.
TrainResult train(std::span<const Image> dataset, const TrainConfig& config);

// n images decoded from z ~ N(0, I).
std::vector<Image> sample(const VaeParams& params, std::size_t n, std::uint64_t seed);

// Black-box view of an encoder-decoder generative model. The explanation
// pipeline only needs these three capabilities.
class GenerativeModel {
public:
    virtual ~GenerativeModel() = default;

    virtual std::size_t latent_dim() const = 0;
    virtual LatentGaussian encode(const Image& x) const = 0;
    virtual Image decode(std::span<const double> z) const = 0;

    Image reconstruct(const Image& x) const { return decode(encode(x).mean); }
    std::vector<Image> sample(std::size_t n, std::uint64_t seed) const;
};

class VaeModel final : public GenerativeModel {
public:
    explicit VaeModel(VaeParams params) : params_(std::move(params)) {}

    std::size_t latent_dim() const override { return params_.latent_dim; }
    LatentGaussian encode(const Image& x) const override { return pxgen::encode(params_, x); }
    Image decode(std::span<const double> z) const override { return pxgen::decode(params_, z); }

    const VaeParams& params() const { return params_; }

private:
    VaeParams params_;
};

// Checkpoint file: "PXGENCKP", little-endian u64 header length, JSON header,
// then the flattened parameters as little-endian f64.
std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(std::string_view bytes);
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

// FNV-1a over the serialized parameter payload, as 16 hex digits.
std::string params_checksum(const VaeParams& params);

}  // namespace pxgen
