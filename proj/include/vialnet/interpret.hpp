#pragma once

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>

#include "vialnet/image.hpp"
#include "vialnet/model.hpp"

namespace vialnet {

enum class AttributionMethod { saliency, integrated_gradients };

/// Per-pixel attribution of a target class. `raw` keeps the full HxWx3
/// values; `reduced` is the HxW heatmap input (max |.| over channels for
/// saliency, signed channel sum for integrated gradients).
struct AttributionMap {
    Tensor raw;
    Tensor reduced;
    int target_class = 0;
    AttributionMethod method = AttributionMethod::saliency;
    double attribution_sum = 0.0;  // sum of raw values
    double output_delta = 0.0;     // F(x) - F(baseline); integrated gradients only
};

namespace detail {

inline void check_target(const Network& net, int target_class) {
    if (target_class < 0 || target_class >= net.n_labels()) {
        throw std::invalid_argument("attribution target class " + std::to_string(target_class) +
                                    " out of range");
    }
}

inline Tensor logit_input_gradient(const Network& net, const Tensor& image, int target_class,
                                   Workspace& ws, double* logit_out = nullptr) {
    const ForwardResult r = net.forward(image, ws);
    if (logit_out) {
        *logit_out = static_cast<double>(r.logits[static_cast<std::size_t>(target_class)]);
    }
    Tensor seed({net.n_labels()});
    seed[static_cast<std::size_t>(target_class)] = 1.0f;
    Tensor input_grad;
    net.backward_from_logits(seed, ws, nullptr, &input_grad, false);
    return input_grad;
}

}  // namespace detail

/// Gradient of the target-class logit w.r.t. the input pixels. The target
/// is the pre-softmax logit; post-softmax gradients saturate once the model
/// is confident.
inline AttributionMap saliency(const Network& net, const Tensor& image, int target_class) {
    detail::check_target(net, target_class);
    Workspace ws;
    AttributionMap map;
    map.method = AttributionMethod::saliency;
    map.target_class = target_class;
    map.raw = detail::logit_input_gradient(net, image, target_class, ws);

    const int h = map.raw.dim(0), w = map.raw.dim(1);
    map.reduced = Tensor({h, w});
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            float m = 0.0f;
            for (int c = 0; c < 3; ++c) {
                m = std::max(m, std::abs(map.raw.at(y, x, c)));
            }
            map.reduced.at(y, x) = m;
        }
    }
    for (std::size_t i = 0; i < map.raw.size(); ++i) {
        map.attribution_sum += static_cast<double>(map.raw[i]);
    }
    return map;
}

/// Path-integral attribution from `baseline` to `image` along the straight
/// line, using an m-step right-endpoint sum of the target-logit gradient:
/// (x - x') .* (1/m) sum_{k=1..m} dF(x' + (k/m)(x - x')) / dx.
inline AttributionMap integrated_gradients(const Network& net, const Tensor& image,
                                           const Tensor& baseline, int target_class, int steps) {
    detail::check_target(net, target_class);
    if (!baseline.same_shape(image)) {
        throw ShapeError("integrated_gradients baseline shape " + shape_to_string(baseline.shape()) +
                         " does not match image " + shape_to_string(image.shape()));
    }
    if (steps < 1) {
        throw std::invalid_argument("integrated_gradients needs steps >= 1");
    }

    Workspace ws;
    Tensor grad_sum(image.shape());
    Tensor point(image.shape());
    double f_image = 0.0, f_baseline = 0.0;

    for (int k = 1; k <= steps; ++k) {
        const float alpha = static_cast<float>(k) / static_cast<float>(steps);
        for (std::size_t i = 0; i < point.size(); ++i) {
            const float v = baseline[i] + alpha * (image[i] - baseline[i]);
            point[i] = std::clamp(v, 0.0f, 1.0f);
        }
        double logit = 0.0;
        const Tensor g = detail::logit_input_gradient(net, point, target_class, ws, &logit);
        if (k == steps) {
            f_image = logit;
        }
        float* acc = grad_sum.data();
        const float* gp = g.data();
        for (std::size_t i = 0; i < grad_sum.size(); ++i) {
            acc[i] += gp[i];
        }
    }
    {
        const ForwardResult r = net.forward(baseline, ws);
        f_baseline = static_cast<double>(r.logits[static_cast<std::size_t>(target_class)]);
    }

    AttributionMap map;
    map.method = AttributionMethod::integrated_gradients;
    map.target_class = target_class;
    map.raw = Tensor(image.shape());
    const float inv_steps = 1.0f / static_cast<float>(steps);
    for (std::size_t i = 0; i < map.raw.size(); ++i) {
        map.raw[i] = (image[i] - baseline[i]) * inv_steps * grad_sum[i];
        map.attribution_sum += static_cast<double>(map.raw[i]);
    }
    map.output_delta = f_image - f_baseline;

    const int h = map.raw.dim(0), w = map.raw.dim(1);
    map.reduced = Tensor({h, w});
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            float s = 0.0f;
            for (int c = 0; c < 3; ++c) {
                s += map.raw.at(y, x, c);
            }
            map.reduced.at(y, x) = s;
        }
    }
    return map;
}

/// All-black reference input.
inline Tensor black_baseline(const Tensor& image) { return Tensor(image.shape()); }

/// Saliency renders on a white-to-blue ramp scaled to the map maximum;
/// integrated gradients render red (negative) to green (positive) about a
/// white zero. An all-zero map comes out solid white either way, and the
/// rendering is invariant under positive scaling of the map.
inline ImageU8 render_heatmap(const AttributionMap& map) {
    if (!map.reduced.all_finite()) {
        throw std::invalid_argument("attribution map contains non-finite values");
    }
    const int h = map.reduced.dim(0), w = map.reduced.dim(1);
    ImageU8 img(h, w);
    if (map.method == AttributionMethod::saliency) {
        float maxv = 0.0f;
        for (std::size_t i = 0; i < map.reduced.size(); ++i) {
            maxv = std::max(maxv, map.reduced[i]);
        }
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const float t = maxv > 0.0f ? std::clamp(map.reduced.at(y, x) / maxv, 0.0f, 1.0f) : 0.0f;
                const std::uint8_t fade = clamp_u8(255.0f * (1.0f - t));
                img.at(y, x, 0) = fade;
                img.at(y, x, 1) = fade;
                img.at(y, x, 2) = 255;
            }
        }
    } else {
        float maxabs = 0.0f;
        for (std::size_t i = 0; i < map.reduced.size(); ++i) {
            maxabs = std::max(maxabs, std::abs(map.reduced[i]));
        }
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const float t =
                    maxabs > 0.0f ? std::clamp(map.reduced.at(y, x) / maxabs, -1.0f, 1.0f) : 0.0f;
                const std::uint8_t fade = clamp_u8(255.0f * (1.0f - std::abs(t)));
                if (t >= 0.0f) {
                    img.at(y, x, 0) = fade;
                    img.at(y, x, 1) = 255;
                    img.at(y, x, 2) = fade;
                } else {
                    img.at(y, x, 0) = 255;
                    img.at(y, x, 1) = fade;
                    img.at(y, x, 2) = fade;
                }
            }
        }
    }
    return img;
}

/// Companion stats file for a heatmap: extrema of the reduced map plus the
/// completeness diagnostic for integrated gradients.
inline void write_attribution_stats(std::ostream& out, const AttributionMap& map) {
    float lo = map.reduced.size() ? map.reduced[0] : 0.0f;
    float hi = lo;
    for (std::size_t i = 1; i < map.reduced.size(); ++i) {
        lo = std::min(lo, map.reduced[i]);
        hi = std::max(hi, map.reduced[i]);
    }
    out << "method: "
        << (map.method == AttributionMethod::saliency ? "saliency" : "integrated_gradients") << "\n";
    out << "target_class: " << map.target_class << "\n";
    out << "min: " << lo << "\n";
    out << "max: " << hi << "\n";
    out << "attribution_sum: " << map.attribution_sum << "\n";
    if (map.method == AttributionMethod::integrated_gradients) {
        out << "output_delta: " << map.output_delta << "\n";
        out << "completeness_residual: " << std::abs(map.attribution_sum - map.output_delta) << "\n";
    }
}

}  // namespace vialnet
