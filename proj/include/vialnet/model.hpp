#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "vialnet/rng.hpp"
#include "vialnet/tensor.hpp"

namespace vialnet {

// ---------------------------------------------------------------------------
// Architecture plan
// ---------------------------------------------------------------------------

struct ConvSpec {
    int in_channels = 0;
    int out_channels = 0;
    int kernel = 3;
    int stride = 1;
};

struct ModelConfig {
    int input_height = 400;
    int input_width = 400;
    std::vector<ConvSpec> conv_plan;
    std::vector<int> fc_plan;  // flatten width, hidden widths..., n_output_labels
    int n_output_labels = 2;
};

/// Spatial output dims of the conv chain applied to the configured input.
inline std::vector<std::array<int, 3>> conv_output_shapes(const ModelConfig& cfg) {
    std::vector<std::array<int, 3>> shapes;
    int h = cfg.input_height;
    int w = cfg.input_width;
    for (const ConvSpec& c : cfg.conv_plan) {
        h = conv_output_extent(h, c.kernel, c.stride);
        w = conv_output_extent(w, c.kernel, c.stride);
        shapes.push_back({h, w, c.out_channels});
    }
    return shapes;
}

inline int flattened_feature_width(const ModelConfig& cfg) {
    if (cfg.conv_plan.empty()) {
        return cfg.input_height * cfg.input_width * 3;
    }
    const auto shapes = conv_output_shapes(cfg);
    const auto& last = shapes.back();
    return last[0] * last[1] * last[2];
}

inline void validate_config(const ModelConfig& cfg) {
    if (cfg.input_height < 1 || cfg.input_width < 1) {
        throw std::invalid_argument("model input dimensions must be positive");
    }
    if (cfg.n_output_labels < 2) {
        throw std::invalid_argument("model needs at least 2 output labels");
    }
    int prev_channels = 3;
    int h = cfg.input_height;
    int w = cfg.input_width;
    for (std::size_t i = 0; i < cfg.conv_plan.size(); ++i) {
        const ConvSpec& c = cfg.conv_plan[i];
        if (c.in_channels != prev_channels) {
            throw std::invalid_argument("conv layer " + std::to_string(i + 1) +
                                        " breaks the channel chain: expected in_channels " +
                                        std::to_string(prev_channels) + ", got " +
                                        std::to_string(c.in_channels));
        }
        if (c.out_channels < 1 || c.kernel < 1 || c.stride < 1) {
            throw std::invalid_argument("conv layer " + std::to_string(i + 1) + " has invalid parameters");
        }
        h = conv_output_extent(h, c.kernel, c.stride);
        w = conv_output_extent(w, c.kernel, c.stride);
        if (h < 1 || w < 1) {
            throw std::invalid_argument("input too small: conv layer " + std::to_string(i + 1) +
                                        " would produce an empty feature map");
        }
        prev_channels = c.out_channels;
    }
    if (cfg.fc_plan.size() < 2) {
        throw std::invalid_argument("fc plan needs at least input and output widths");
    }
    if (cfg.fc_plan.front() != flattened_feature_width(cfg)) {
        throw std::invalid_argument("first fc width " + std::to_string(cfg.fc_plan.front()) +
                                    " does not match flattened feature size " +
                                    std::to_string(flattened_feature_width(cfg)));
    }
    for (int wdt : cfg.fc_plan) {
        if (wdt < 1) {
            throw std::invalid_argument("fc widths must be positive");
        }
    }
    if (cfg.fc_plan.back() != cfg.n_output_labels) {
        throw std::invalid_argument("last fc width must equal the number of output labels");
    }
}

/// The ConvNet3_4 plan: three 3x3 stride-1 conv layers (3 -> 10 -> 20 -> 30
/// channels) and four fully-connected layers (flatten -> 50 -> 15 -> 10 -> n).
/// The flatten width follows the input resolution; at 400 px it is
/// 394*394*30 = 4,657,080.
inline ModelConfig convnet3_4_config(int n_output_labels, int input_size) {
    if (n_output_labels != 2 && n_output_labels != 4) {
        throw std::invalid_argument("ConvNet3_4 supports 2 or 4 output labels, got " +
                                    std::to_string(n_output_labels));
    }
    if (input_size < 8) {
        throw std::invalid_argument("input too small for three 3x3 valid convolutions: " +
                                    std::to_string(input_size));
    }
    ModelConfig cfg;
    cfg.input_height = cfg.input_width = input_size;
    cfg.conv_plan = {{3, 10, 3, 1}, {10, 20, 3, 1}, {20, 30, 3, 1}};
    cfg.n_output_labels = n_output_labels;
    const int flat = flattened_feature_width(cfg);
    cfg.fc_plan = {flat, 50, 15, 10, n_output_labels};
    validate_config(cfg);
    return cfg;
}

inline std::size_t parameter_count(const ModelConfig& cfg) {
    std::size_t n = 0;
    for (const ConvSpec& c : cfg.conv_plan) {
        n += static_cast<std::size_t>(c.kernel) * c.kernel * c.in_channels * c.out_channels;
        n += static_cast<std::size_t>(c.out_channels);
    }
    for (std::size_t j = 0; j + 1 < cfg.fc_plan.size(); ++j) {
        n += static_cast<std::size_t>(cfg.fc_plan[j + 1]) * static_cast<std::size_t>(cfg.fc_plan[j]);
        n += static_cast<std::size_t>(cfg.fc_plan[j + 1]);
    }
    return n;
}

// ---------------------------------------------------------------------------
// Network
// ---------------------------------------------------------------------------

struct ParamRef {
    std::string name;
    Tensor* value;
    Tensor* grad;
};

using GradStore = std::vector<Tensor>;

struct ForwardResult {
    Tensor logits;
    Tensor probs;
};

class Network;

/// Per-evaluation activation caches. A workspace belongs to one thread of
/// control; concurrent inference over a frozen network takes one workspace
/// per worker.
class Workspace {
public:
    bool has_forward() const { return has_forward_; }
    const Tensor& input() const { return input_; }
    const Tensor& logits() const { return logits_; }
    const Tensor& probs() const { return probs_; }

private:
    friend class Network;
    Tensor input_;
    std::vector<Tensor> conv_out_;  // post-activation feature maps
    std::vector<Tensor> fc_out_;    // post-activation, except the last entry (raw logits)
    Tensor logits_;
    Tensor probs_;
    std::uint64_t seen_version_ = 0;
    bool has_forward_ = false;
};

class Network {
public:
    Network(ModelConfig cfg, std::uint64_t init_seed) : cfg_(std::move(cfg)) {
        validate_config(cfg_);
        build_tensors();
        initialize_weights(init_seed);
    }

    /// Constructs with an existing flat parameter payload (checkpoint load).
    Network(ModelConfig cfg, const std::vector<float>& payload) : cfg_(std::move(cfg)) {
        validate_config(cfg_);
        build_tensors();
        if (payload.size() != parameter_count()) {
            throw std::invalid_argument("parameter payload does not match the model plan");
        }
        std::size_t off = 0;
        for (Tensor& p : params_) {
            std::memcpy(p.data(), payload.data() + off, p.size() * sizeof(float));
            off += p.size();
        }
    }

    const ModelConfig& config() const { return cfg_; }
    int n_labels() const { return cfg_.n_output_labels; }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const Tensor& p : params_) {
            n += p.size();
        }
        return n;
    }

    /// Named parameter/gradient pairs, conv layers first. Mutating a value
    /// through the returned pointers requires mark_params_changed() for the
    /// cache-staleness bookkeeping to stay sound.
    std::vector<ParamRef> params() {
        std::vector<ParamRef> refs;
        refs.reserve(params_.size());
        for (std::size_t i = 0; i < params_.size(); ++i) {
            refs.push_back({param_names_[i], &params_[i], &grads_[i]});
        }
        return refs;
    }

    const std::vector<Tensor>& param_tensors() const { return params_; }
    std::vector<Tensor>& grads() { return grads_; }

    void mark_params_changed() { ++version_; }

    std::vector<Tensor> snapshot_params() const { return params_; }

    void restore_params(const std::vector<Tensor>& snapshot) {
        if (snapshot.size() != params_.size()) {
            throw std::invalid_argument("parameter snapshot does not match the model");
        }
        for (std::size_t i = 0; i < params_.size(); ++i) {
            if (!snapshot[i].same_shape(params_[i])) {
                throw std::invalid_argument("parameter snapshot shape mismatch at " + param_names_[i]);
            }
            params_[i] = snapshot[i];
        }
        mark_params_changed();
    }

    GradStore make_grad_store() const {
        GradStore store;
        store.reserve(params_.size());
        for (const Tensor& p : params_) {
            store.emplace_back(p.shape());
        }
        return store;
    }

    void zero_grads() {
        for (Tensor& g : grads_) {
            g.fill(0.0f);
        }
    }

    /// Forward pass through FEB, flatten, CB and softmax. The workspace
    /// retains activations for a subsequent backward pass.
    ForwardResult forward(const Tensor& image, Workspace& ws) const {
        if (image.rank() != 3 || image.dim(0) != cfg_.input_height || image.dim(1) != cfg_.input_width ||
            image.dim(2) != 3) {
            throw ShapeError("network expects input [" + std::to_string(cfg_.input_height) + "x" +
                             std::to_string(cfg_.input_width) + "x3], got " +
                             shape_to_string(image.shape()));
        }
        for (std::size_t i = 0; i < image.size(); ++i) {
            const float v = image[i];
            if (!(v >= 0.0f && v <= 1.0f)) {
                throw std::invalid_argument("network input must be normalized to [0,1]");
            }
        }

        ws.input_ = image;
        ws.conv_out_.resize(cfg_.conv_plan.size());
        const Tensor* cur = &ws.input_;
        for (std::size_t i = 0; i < cfg_.conv_plan.size(); ++i) {
            ws.conv_out_[i] = conv2d_valid(*cur, params_[2 * i], params_[2 * i + 1], cfg_.conv_plan[i].stride);
            relu_inplace(ws.conv_out_[i]);
            cur = &ws.conv_out_[i];
        }

        const std::size_t n_fc = cfg_.fc_plan.size() - 1;
        ws.fc_out_.resize(n_fc);
        const float* x = cur->data();
        int x_len = static_cast<int>(cur->size());
        for (std::size_t j = 0; j < n_fc; ++j) {
            const Tensor& w = params_[fc_param_base_ + 2 * j];
            const Tensor& b = params_[fc_param_base_ + 2 * j + 1];
            if (w.dim(1) != x_len) {
                throw ShapeError("fc layer " + std::to_string(j) + " input width mismatch");
            }
            ws.fc_out_[j] = Tensor({w.dim(0)});
            detail::matvec(w.data(), x, b.data(), w.dim(0), x_len, ws.fc_out_[j].data());
            if (j + 1 < n_fc) {
                relu_inplace(ws.fc_out_[j]);
            }
            x = ws.fc_out_[j].data();
            x_len = static_cast<int>(ws.fc_out_[j].size());
        }

        ws.logits_ = ws.fc_out_.back();
        ws.probs_ = softmax(ws.logits_);
        ws.seen_version_ = version_;
        ws.has_forward_ = true;
        return ForwardResult{ws.logits_, ws.probs_};
    }

    ForwardResult forward(const Tensor& image) { return forward(image, ws_); }

    int predict(const Tensor& image, Workspace& ws) const {
        const ForwardResult r = forward(image, ws);
        int best = 0;
        for (int i = 1; i < r.probs.dim(0); ++i) {
            if (r.probs[static_cast<std::size_t>(i)] > r.probs[static_cast<std::size_t>(best)]) {
                best = i;  // ties keep the lowest index
            }
        }
        return best;
    }

    int predict(const Tensor& image) { return predict(image, ws_); }

    /// Backward pass from the fused softmax + cross-entropy gradient
    /// (probs - onehot). Accumulates into the network's own gradient slots.
    void backward(int true_label) {
        backward_sample(true_label, ws_, &grads_, nullptr, /*accumulate=*/true);
    }

    /// Per-sample backward with explicit destination. `grads` receives the
    /// parameter gradients (overwritten when accumulate is false, summed
    /// otherwise); `input_grad`, when non-null, receives dLoss/dInput. Either
    /// destination may be null to skip that part of the pass.
    void backward_sample(int true_label, Workspace& ws, GradStore* grads, Tensor* input_grad,
                         bool accumulate) const {
        if (true_label < 0 || true_label >= cfg_.n_output_labels) {
            throw std::invalid_argument("label " + std::to_string(true_label) + " out of range");
        }
        if (!ws.has_forward_) {
            throw std::logic_error("backward without a cached forward pass");
        }
        Tensor seed({cfg_.n_output_labels});
        for (int i = 0; i < cfg_.n_output_labels; ++i) {
            seed[static_cast<std::size_t>(i)] = ws.probs_[static_cast<std::size_t>(i)];
        }
        seed[static_cast<std::size_t>(true_label)] -= 1.0f;
        backward_from_logits(seed, ws, grads, input_grad, accumulate);
    }

    /// Backward pass seeded with an arbitrary gradient w.r.t. the logits
    /// (pre-softmax). Used by the attribution methods.
    void backward_from_logits(const Tensor& dlogits, Workspace& ws, GradStore* grads,
                              Tensor* input_grad, bool accumulate) const {
        if (!ws.has_forward_) {
            throw std::logic_error("backward without a cached forward pass");
        }
        if (ws.seen_version_ != version_) {
            throw std::logic_error("stale forward cache: parameters changed since forward");
        }
        if (dlogits.rank() != 1 || dlogits.dim(0) != cfg_.n_output_labels) {
            throw ShapeError("logit gradient must have " + std::to_string(cfg_.n_output_labels) +
                             " entries");
        }
        if (grads && grads->size() != params_.size()) {
            throw std::invalid_argument("gradient store does not match the parameter list");
        }

        const std::size_t n_fc = cfg_.fc_plan.size() - 1;
        Tensor d = dlogits;
        for (std::size_t jj = n_fc; jj-- > 0;) {
            if (jj + 1 < n_fc) {
                d = relu_backward(ws.fc_out_[jj], d);
            }
            const Tensor& w = params_[fc_param_base_ + 2 * jj];
            const float* x = jj == 0 ? flatten_input_ptr(ws) : ws.fc_out_[jj - 1].data();
            const int in_n = w.dim(1);
            const int out_n = w.dim(0);
            Tensor dx({in_n});
            float* dw = grads ? (*grads)[fc_param_base_ + 2 * jj].data() : nullptr;
            float* db = grads ? (*grads)[fc_param_base_ + 2 * jj + 1].data() : nullptr;
            const bool need_dx = jj > 0 || !cfg_.conv_plan.empty() || input_grad != nullptr;
            detail::matvec_backward(w.data(), x, d.data(), out_n, in_n, need_dx ? dx.data() : nullptr,
                                    dw, db, accumulate);
            d = std::move(dx);
        }

        if (cfg_.conv_plan.empty()) {
            if (input_grad) {
                *input_grad = unflatten(d, {cfg_.input_height, cfg_.input_width, 3});
            }
            return;
        }

        Tensor dmap = unflatten(d, {ws.conv_out_.back().dim(0), ws.conv_out_.back().dim(1),
                                    ws.conv_out_.back().dim(2)});
        for (std::size_t ii = cfg_.conv_plan.size(); ii-- > 0;) {
            dmap = relu_backward(ws.conv_out_[ii], dmap);
            const Tensor& input_act = ii == 0 ? ws.input_ : ws.conv_out_[ii - 1];
            const bool need_dx = ii > 0 || input_grad != nullptr;
            Conv2dGrads g = conv2d_backward_split(input_act, params_[2 * ii], cfg_.conv_plan[ii].stride,
                                                  dmap, grads != nullptr, need_dx);
            if (grads) {
                add_or_assign((*grads)[2 * ii], g.kernels, accumulate);
                add_or_assign((*grads)[2 * ii + 1], g.bias, accumulate);
            }
            dmap = std::move(g.input);
        }
        if (input_grad) {
            *input_grad = std::move(dmap);
        }
    }

private:
    static void relu_inplace(Tensor& t) {
        float* p = t.data();
        for (std::size_t i = 0; i < t.size(); ++i) {
            p[i] = p[i] > 0.0f ? p[i] : 0.0f;
        }
    }

    static void add_or_assign(Tensor& dst, const Tensor& src, bool accumulate) {
        float* d = dst.data();
        const float* s = src.data();
        if (accumulate) {
            for (std::size_t i = 0; i < dst.size(); ++i) {
                d[i] += s[i];
            }
        } else {
            for (std::size_t i = 0; i < dst.size(); ++i) {
                d[i] = s[i];
            }
        }
    }

    const float* flatten_input_ptr(const Workspace& ws) const {
        return cfg_.conv_plan.empty() ? ws.input_.data() : ws.conv_out_.back().data();
    }

    /// conv2d_backward with selectable outputs to avoid wasted work.
    static Conv2dGrads conv2d_backward_split(const Tensor& input, const Tensor& kernels, int stride,
                                             const Tensor& grad_out, bool want_params, bool want_input) {
        const int h = input.dim(0), w = input.dim(1), cin = input.dim(2);
        const int kh = kernels.dim(0), kw = kernels.dim(1), cout = kernels.dim(3);
        const int oh = conv_output_extent(h, kh, stride);
        const int ow = conv_output_extent(w, kw, stride);
        Conv2dGrads g;
        if (want_params) {
            g.kernels = Tensor(kernels.shape());
            g.bias = Tensor(Shape{cout});
            const int k_rows = kh * kw * cin;
            const int cpad = detail::padded_channels(cout);
            std::vector<float> dk_packed(static_cast<std::size_t>(k_rows) * cpad, 0.0f);
            detail::conv_kernel_grad_dispatch(input.data(), w, cin, grad_out.data(), kh, kw, cout, cpad,
                                              stride, oh, ow, dk_packed.data());
            for (int r = 0; r < k_rows; ++r) {
                for (int c = 0; c < cout; ++c) {
                    g.kernels.data()[static_cast<std::size_t>(r) * cout + c] =
                        dk_packed[static_cast<std::size_t>(r) * cpad + c];
                }
            }
            const float* dptr = grad_out.data();
            for (std::size_t p = 0; p < static_cast<std::size_t>(oh) * ow; ++p) {
                for (int n = 0; n < cout; ++n) {
                    g.bias.data()[n] += dptr[p * cout + n];
                }
            }
        }
        if (want_input) {
            g.input = Tensor(input.shape());
            const int k_rows = kh * kw * cin;
            std::vector<float> kt_packed(static_cast<std::size_t>(cout) * k_rows);
            detail::pack_kernels_transposed(kernels.data(), k_rows, cout, kt_packed.data());
            detail::conv_input_grad(grad_out.data(), kt_packed.data(), kh, kw, cin, cout, stride, oh, ow,
                                    w, g.input.data());
        }
        return g;
    }

    void build_tensors() {
        params_.clear();
        grads_.clear();
        param_names_.clear();
        for (std::size_t i = 0; i < cfg_.conv_plan.size(); ++i) {
            const ConvSpec& c = cfg_.conv_plan[i];
            params_.emplace_back(Shape{c.kernel, c.kernel, c.in_channels, c.out_channels});
            params_.emplace_back(Shape{c.out_channels});
            const std::string id = "conv" + std::to_string(i + 1);
            param_names_.push_back(id + ".kernels");
            param_names_.push_back(id + ".bias");
        }
        fc_param_base_ = params_.size();
        for (std::size_t j = 0; j + 1 < cfg_.fc_plan.size(); ++j) {
            params_.emplace_back(Shape{cfg_.fc_plan[j + 1], cfg_.fc_plan[j]});
            params_.emplace_back(Shape{cfg_.fc_plan[j + 1]});
            const std::string id = "fc" + std::to_string(cfg_.conv_plan.size() + j + 1);
            param_names_.push_back(id + ".weights");
            param_names_.push_back(id + ".bias");
        }
        for (const Tensor& p : params_) {
            grads_.emplace_back(p.shape());
        }
    }

    /// Uniform init in +-sqrt(1/fan_in) for weights, zero biases.
    void initialize_weights(std::uint64_t seed) {
        for (std::size_t i = 0; i < params_.size(); ++i) {
            Tensor& p = params_[i];
            if (p.rank() == 1) {
                p.fill(0.0f);
                continue;
            }
            std::size_t fan_in = 1;
            for (int d = 0; d < p.rank() - 1; ++d) {
                fan_in *= static_cast<std::size_t>(p.dim(d));
            }
            if (p.rank() == 2) {
                fan_in = static_cast<std::size_t>(p.dim(1));  // fc weights are out x in
            }
            const float scale = std::sqrt(1.0f / static_cast<float>(fan_in));
            Rng rng = Rng::keyed(seed, {0x111Dull, static_cast<std::uint64_t>(i)});
            for (std::size_t k = 0; k < p.size(); ++k) {
                p[k] = rng.uniform(-scale, scale);
            }
        }
    }

    ModelConfig cfg_;
    std::vector<Tensor> params_;
    GradStore grads_;
    std::vector<std::string> param_names_;
    std::size_t fc_param_base_ = 0;
    std::uint64_t version_ = 1;
    Workspace ws_;
};

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

class CheckpointError : public std::runtime_error {
public:
    enum class Kind { not_a_checkpoint, version_mismatch, truncated, payload_mismatch, bad_config };

    CheckpointError(Kind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
    Kind kind;
};

namespace detail {

inline constexpr char kCheckpointMagic[4] = {'C', 'N', 'V', '3'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

template <typename T>
void write_le(std::ostream& out, T v) {
    static_assert(std::is_integral_v<T>);
    for (std::size_t b = 0; b < sizeof(T); ++b) {
        out.put(static_cast<char>((v >> (8 * b)) & 0xFF));
    }
}

template <typename T>
T read_le(std::istream& in) {
    T v = 0;
    for (std::size_t b = 0; b < sizeof(T); ++b) {
        const int c = in.get();
        if (c == EOF) {
            throw CheckpointError(CheckpointError::Kind::truncated, "checkpoint ends inside header");
        }
        v |= static_cast<T>(static_cast<std::uint8_t>(c)) << (8 * b);
    }
    return v;
}

}  // namespace detail

struct CheckpointMeta {
    std::uint32_t epochs_completed = 0;
    std::uint64_t seed = 0;
};

/// Little-endian binary checkpoint: magic "CNV3", format version, the model
/// plan as a u32 sequence, training metadata, then the raw float32 payload.
inline void save_checkpoint(const Network& net, const std::string& path, CheckpointMeta meta = {}) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open checkpoint for writing: " + path);
    }
    const ModelConfig& cfg = net.config();
    out.write(detail::kCheckpointMagic, 4);
    detail::write_le<std::uint32_t>(out, detail::kCheckpointVersion);
    detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(cfg.input_height));
    detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(cfg.input_width));
    detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(cfg.n_output_labels));
    detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(cfg.conv_plan.size()));
    for (const ConvSpec& c : cfg.conv_plan) {
        detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(c.in_channels));
        detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(c.out_channels));
        detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(c.kernel));
        detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(c.stride));
    }
    detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(cfg.fc_plan.size()));
    for (int w : cfg.fc_plan) {
        detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(w));
    }
    detail::write_le<std::uint32_t>(out, meta.epochs_completed);
    detail::write_le<std::uint64_t>(out, meta.seed);
    detail::write_le<std::uint64_t>(out, static_cast<std::uint64_t>(net.parameter_count()));
    for (const Tensor& p : net.param_tensors()) {
        out.write(reinterpret_cast<const char*>(p.data()),
                  static_cast<std::streamsize>(p.size() * sizeof(float)));
    }
    if (!out) {
        throw std::runtime_error("checkpoint write failed: " + path);
    }
}

struct LoadedCheckpoint {
    Network network;
    CheckpointMeta meta;
};

inline LoadedCheckpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open checkpoint: " + path);
    }
    char magic[4] = {0};
    in.read(magic, 4);
    if (in.gcount() != 4 || std::memcmp(magic, detail::kCheckpointMagic, 4) != 0) {
        throw CheckpointError(CheckpointError::Kind::not_a_checkpoint, "not a checkpoint file: " + path);
    }
    const auto version = detail::read_le<std::uint32_t>(in);
    if (version != detail::kCheckpointVersion) {
        throw CheckpointError(CheckpointError::Kind::version_mismatch,
                              "unsupported checkpoint version " + std::to_string(version));
    }
    ModelConfig cfg;
    cfg.input_height = static_cast<int>(detail::read_le<std::uint32_t>(in));
    cfg.input_width = static_cast<int>(detail::read_le<std::uint32_t>(in));
    cfg.n_output_labels = static_cast<int>(detail::read_le<std::uint32_t>(in));
    const auto n_conv = detail::read_le<std::uint32_t>(in);
    if (n_conv > 64) {
        throw CheckpointError(CheckpointError::Kind::bad_config, "implausible conv layer count");
    }
    for (std::uint32_t i = 0; i < n_conv; ++i) {
        ConvSpec c;
        c.in_channels = static_cast<int>(detail::read_le<std::uint32_t>(in));
        c.out_channels = static_cast<int>(detail::read_le<std::uint32_t>(in));
        c.kernel = static_cast<int>(detail::read_le<std::uint32_t>(in));
        c.stride = static_cast<int>(detail::read_le<std::uint32_t>(in));
        cfg.conv_plan.push_back(c);
    }
    const auto n_fc = detail::read_le<std::uint32_t>(in);
    if (n_fc < 2 || n_fc > 64) {
        throw CheckpointError(CheckpointError::Kind::bad_config, "implausible fc plan length");
    }
    for (std::uint32_t j = 0; j < n_fc; ++j) {
        cfg.fc_plan.push_back(static_cast<int>(detail::read_le<std::uint32_t>(in)));
    }
    CheckpointMeta meta;
    meta.epochs_completed = detail::read_le<std::uint32_t>(in);
    meta.seed = detail::read_le<std::uint64_t>(in);
    const auto declared = detail::read_le<std::uint64_t>(in);

    try {
        validate_config(cfg);
    } catch (const std::invalid_argument& e) {
        throw CheckpointError(CheckpointError::Kind::bad_config, e.what());
    }
    if (declared != parameter_count(cfg)) {
        throw CheckpointError(CheckpointError::Kind::payload_mismatch,
                              "declared parameter count " + std::to_string(declared) +
                                  " does not match the model plan (" +
                                  std::to_string(parameter_count(cfg)) + ")");
    }
    std::vector<float> payload(declared);
    in.read(reinterpret_cast<char*>(payload.data()),
            static_cast<std::streamsize>(declared * sizeof(float)));
    if (static_cast<std::uint64_t>(in.gcount()) != declared * sizeof(float)) {
        throw CheckpointError(CheckpointError::Kind::truncated, "checkpoint payload is truncated");
    }
    in.peek();
    if (!in.eof()) {
        throw CheckpointError(CheckpointError::Kind::payload_mismatch,
                              "checkpoint has trailing bytes beyond the declared payload");
    }
    return LoadedCheckpoint{Network(std::move(cfg), payload), meta};
}

}  // namespace vialnet
