#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "vialnet/dataset.hpp"
#include "vialnet/image.hpp"
#include "vialnet/rng.hpp"

namespace vialnet {

// ---------------------------------------------------------------------------
// Transform specifications
// ---------------------------------------------------------------------------

struct RotateSpec {
    float min_deg = 0.0f;
    float max_deg = 0.0f;  // angle drawn uniformly from [min,max]
};
struct BlurSpec {
    int kernel = 5;  // odd
    float min_sigma = 0.1f;
    float max_sigma = 5.0f;
};
struct PosterizeSpec {
    int bits = 8;
};
struct SharpnessSpec {
    float factor = 1.0f;  // 0 = smoothed, 1 = identity, 2 = doubled edge enhancement
};
struct InvertSpec {};
struct SolarizeSpec {
    int threshold = 128;  // samples >= threshold are inverted
};
struct EqualizeSpec {};
struct HFlipSpec {};
struct VFlipSpec {};
struct JitterSpec {
    float brightness = 0.0f;
    float contrast = 0.0f;
    float saturation = 0.0f;
    float hue = 0.0f;  // fraction of the hue circle, <= 0.5
};
struct AutocontrastSpec {};
struct CropPadSpec {
    // Sizes are expressed against the 400 px reference frame and
    // scaled to the actual image; crop + 2*pad must restore the original.
    int crop = 400;
    int pad = 0;
};

using TransformSpec =
    std::variant<RotateSpec, BlurSpec, PosterizeSpec, SharpnessSpec, InvertSpec, SolarizeSpec,
                 EqualizeSpec, HFlipSpec, VFlipSpec, JitterSpec, AutocontrastSpec, CropPadSpec>;

/// A pipeline entry: one transform or a left-to-right composition.
using TransformChain = std::vector<TransformSpec>;

struct Pipeline {
    std::vector<TransformChain> entries;
};

inline void validate_spec(const TransformSpec& spec) {
    struct Checker {
        void operator()(const RotateSpec& s) const {
            if (!(s.min_deg <= s.max_deg)) {
                throw std::invalid_argument("rotate: empty angle range");
            }
        }
        void operator()(const BlurSpec& s) const {
            if (s.kernel < 3 || s.kernel % 2 == 0) {
                throw std::invalid_argument("blur: kernel size must be odd and >= 3");
            }
            if (!(s.min_sigma > 0.0f) || !(s.min_sigma <= s.max_sigma)) {
                throw std::invalid_argument("blur: sigma range must be positive and ordered");
            }
        }
        void operator()(const PosterizeSpec& s) const {
            if (s.bits < 1 || s.bits > 8) {
                throw std::invalid_argument("posterize: bits must be in [1,8]");
            }
        }
        void operator()(const SharpnessSpec& s) const {
            if (!(s.factor >= 0.0f)) {
                throw std::invalid_argument("sharpness: factor must be >= 0");
            }
        }
        void operator()(const InvertSpec&) const {}
        void operator()(const SolarizeSpec& s) const {
            if (s.threshold < 0 || s.threshold > 255) {
                throw std::invalid_argument("solarize: threshold must be in [0,255]");
            }
        }
        void operator()(const EqualizeSpec&) const {}
        void operator()(const HFlipSpec&) const {}
        void operator()(const VFlipSpec&) const {}
        void operator()(const JitterSpec& s) const {
            if (s.brightness < 0.0f || s.contrast < 0.0f || s.saturation < 0.0f || s.hue < 0.0f ||
                s.hue > 0.5f) {
                throw std::invalid_argument("jitter: ranges must be >= 0 (hue <= 0.5)");
            }
        }
        void operator()(const AutocontrastSpec&) const {}
        void operator()(const CropPadSpec& s) const {
            if (s.crop < 1 || s.pad < 0 || s.crop + 2 * s.pad != 400) {
                throw std::invalid_argument("crop_pad: crop + 2*pad must equal the 400 px reference");
            }
        }
    };
    std::visit(Checker{}, spec);
}

// ---------------------------------------------------------------------------
// Transform kernels
// ---------------------------------------------------------------------------

namespace detail {

/// Reflect an index into [0, n) without repeating the border sample.
inline int reflect_index(int i, int n) {
    if (n == 1) {
        return 0;
    }
    const int period = 2 * (n - 1);
    i = ((i % period) + period) % period;
    return i < n ? i : period - i;
}

inline std::vector<float> gaussian_taps(int ksize, float sigma) {
    std::vector<float> taps(static_cast<std::size_t>(ksize));
    const int r = ksize / 2;
    float sum = 0.0f;
    for (int i = 0; i < ksize; ++i) {
        const float d = static_cast<float>(i - r);
        taps[static_cast<std::size_t>(i)] = std::exp(-(d * d) / (2.0f * sigma * sigma));
        sum += taps[static_cast<std::size_t>(i)];
    }
    for (float& t : taps) {
        t /= sum;
    }
    return taps;
}

inline float luma(float r, float g, float b) { return 0.299f * r + 0.587f * g + 0.114f * b; }

inline void rgb_to_hsv(float r, float g, float b, float& h, float& s, float& v) {
    const float maxc = std::max({r, g, b});
    const float minc = std::min({r, g, b});
    v = maxc;
    const float d = maxc - minc;
    s = maxc == 0.0f ? 0.0f : d / maxc;
    if (d == 0.0f) {
        h = 0.0f;
        return;
    }
    if (maxc == r) {
        h = (g - b) / d;
    } else if (maxc == g) {
        h = 2.0f + (b - r) / d;
    } else {
        h = 4.0f + (r - g) / d;
    }
    h /= 6.0f;
    if (h < 0.0f) {
        h += 1.0f;
    }
}

inline void hsv_to_rgb(float h, float s, float v, float& r, float& g, float& b) {
    if (s == 0.0f) {
        r = g = b = v;
        return;
    }
    h = h - std::floor(h);
    const float hh = h * 6.0f;
    const int sector = std::min(5, static_cast<int>(hh));
    const float f = hh - static_cast<float>(sector);
    const float p = v * (1.0f - s);
    const float q = v * (1.0f - s * f);
    const float t = v * (1.0f - s * (1.0f - f));
    switch (sector) {
        case 0: r = v; g = t; b = p; break;
        case 1: r = q; g = v; b = p; break;
        case 2: r = p; g = v; b = t; break;
        case 3: r = p; g = q; b = v; break;
        case 4: r = t; g = p; b = v; break;
        default: r = v; g = p; b = q; break;
    }
}

}  // namespace detail

/// Rotation about the image center, bilinear resampling, black fill.
/// Positive angles rotate the content counter-clockwise.
inline ImageU8 rotate_image(const ImageU8& img, float angle_deg) {
    const float rad = angle_deg * 3.14159265358979323846f / 180.0f;
    const float c = std::cos(rad);
    const float s = std::sin(rad);
    const float cx = static_cast<float>(img.width) * 0.5f;
    const float cy = static_cast<float>(img.height) * 0.5f;
    ImageU8 out(img.height, img.width);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            const float dx = static_cast<float>(x) + 0.5f - cx;
            const float dy = static_cast<float>(y) + 0.5f - cy;
            const float sx = cx + c * dx - s * dy;
            const float sy = cy + s * dx + c * dy;
            const float gx = sx - 0.5f;
            const float gy = sy - 0.5f;
            const int x0 = static_cast<int>(std::floor(gx));
            const int y0 = static_cast<int>(std::floor(gy));
            const float fx = gx - static_cast<float>(x0);
            const float fy = gy - static_cast<float>(y0);
            for (int ch = 0; ch < 3; ++ch) {
                float acc = 0.0f;
                for (int oy = 0; oy < 2; ++oy) {
                    for (int ox = 0; ox < 2; ++ox) {
                        const int px = x0 + ox;
                        const int py = y0 + oy;
                        if (px < 0 || px >= img.width || py < 0 || py >= img.height) {
                            continue;  // black outside
                        }
                        const float w = (ox ? fx : 1.0f - fx) * (oy ? fy : 1.0f - fy);
                        acc += w * static_cast<float>(img.at(py, px, ch));
                    }
                }
                out.at(y, x, ch) = clamp_u8(acc);
            }
        }
    }
    return out;
}

/// Separable Gaussian blur with reflected borders.
inline ImageU8 gaussian_blur(const ImageU8& img, int ksize, float sigma) {
    const std::vector<float> taps = detail::gaussian_taps(ksize, sigma);
    const int r = ksize / 2;
    std::vector<float> tmp(img.data.size());
    // horizontal pass
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            for (int ch = 0; ch < 3; ++ch) {
                float acc = 0.0f;
                for (int k = -r; k <= r; ++k) {
                    const int sx = detail::reflect_index(x + k, img.width);
                    acc += taps[static_cast<std::size_t>(k + r)] * static_cast<float>(img.at(y, sx, ch));
                }
                tmp[img.index(y, x, ch)] = acc;
            }
        }
    }
    ImageU8 out(img.height, img.width);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            for (int ch = 0; ch < 3; ++ch) {
                float acc = 0.0f;
                for (int k = -r; k <= r; ++k) {
                    const int sy = detail::reflect_index(y + k, img.height);
                    acc += taps[static_cast<std::size_t>(k + r)] * tmp[img.index(sy, x, ch)];
                }
                out.at(y, x, ch) = clamp_u8(acc);
            }
        }
    }
    return out;
}

/// Keeps the top `bits` bits of every sample.
inline ImageU8 posterize(const ImageU8& img, int bits) {
    const std::uint8_t mask = static_cast<std::uint8_t>(0xFFu << (8 - bits));
    ImageU8 out = img;
    for (std::uint8_t& p : out.data) {
        p = static_cast<std::uint8_t>(p & mask);
    }
    return out;
}

/// Blend between a 3x3-smoothed copy (factor 0) and the original (factor 1);
/// factors above 1 push past the original for edge enhancement. Border pixels
/// are copied from the original.
inline ImageU8 adjust_sharpness(const ImageU8& img, float factor) {
    ImageU8 out = img;
    if (img.height < 3 || img.width < 3) {
        return out;
    }
    static constexpr float kTaps[3][3] = {{1.0f, 1.0f, 1.0f}, {1.0f, 5.0f, 1.0f}, {1.0f, 1.0f, 1.0f}};
    for (int y = 1; y < img.height - 1; ++y) {
        for (int x = 1; x < img.width - 1; ++x) {
            for (int ch = 0; ch < 3; ++ch) {
                float smooth = 0.0f;
                for (int ky = 0; ky < 3; ++ky) {
                    for (int kx = 0; kx < 3; ++kx) {
                        smooth += kTaps[ky][kx] * static_cast<float>(img.at(y + ky - 1, x + kx - 1, ch));
                    }
                }
                smooth /= 13.0f;
                const float orig = static_cast<float>(img.at(y, x, ch));
                out.at(y, x, ch) = clamp_u8(smooth + factor * (orig - smooth));
            }
        }
    }
    return out;
}

inline ImageU8 invert(const ImageU8& img) {
    ImageU8 out = img;
    for (std::uint8_t& p : out.data) {
        p = static_cast<std::uint8_t>(255 - p);
    }
    return out;
}

/// Inverts samples at or above the threshold.
inline ImageU8 solarize(const ImageU8& img, int threshold) {
    ImageU8 out = img;
    for (std::uint8_t& p : out.data) {
        if (p >= threshold) {
            p = static_cast<std::uint8_t>(255 - p);
        }
    }
    return out;
}

/// Per-channel histogram equalization. Uses the cdf-min normalization
/// lut[v] = round(255 * (cdf(v) - cdf_min) / (n - cdf_min)), which maps the
/// lowest occupied level to 0, the highest to 255, and is idempotent up to
/// one quantization level.
inline ImageU8 equalize(const ImageU8& img) {
    ImageU8 out = img;
    const std::size_t npx = static_cast<std::size_t>(img.height) * img.width;
    for (int ch = 0; ch < 3; ++ch) {
        std::array<std::int64_t, 256> hist{};
        for (std::size_t p = 0; p < npx; ++p) {
            ++hist[img.data[p * 3 + ch]];
        }
        std::int64_t cdf_min = 0;
        int occupied = 0;
        for (int v = 0; v < 256; ++v) {
            if (hist[static_cast<std::size_t>(v)] > 0) {
                if (occupied == 0) {
                    cdf_min = hist[static_cast<std::size_t>(v)];
                }
                ++occupied;
            }
        }
        if (occupied <= 1) {
            continue;  // flat channel: identity
        }
        const std::int64_t denom = static_cast<std::int64_t>(npx) - cdf_min;
        std::array<std::uint8_t, 256> lut{};
        std::int64_t cdf = 0;
        for (int v = 0; v < 256; ++v) {
            cdf += hist[static_cast<std::size_t>(v)];
            const std::int64_t num = std::max<std::int64_t>(0, cdf - cdf_min);
            lut[static_cast<std::size_t>(v)] =
                static_cast<std::uint8_t>(std::min<std::int64_t>(255, (num * 255 + denom / 2) / denom));
        }
        for (std::size_t p = 0; p < npx; ++p) {
            out.data[p * 3 + ch] = lut[img.data[p * 3 + ch]];
        }
    }
    return out;
}

inline ImageU8 hflip(const ImageU8& img) {
    ImageU8 out(img.height, img.width);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            for (int ch = 0; ch < 3; ++ch) {
                out.at(y, x, ch) = img.at(y, img.width - 1 - x, ch);
            }
        }
    }
    return out;
}

inline ImageU8 vflip(const ImageU8& img) {
    ImageU8 out(img.height, img.width);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            for (int ch = 0; ch < 3; ++ch) {
                out.at(y, x, ch) = img.at(img.height - 1 - y, x, ch);
            }
        }
    }
    return out;
}

/// Per-channel linear stretch to the full [0,255] range.
inline ImageU8 autocontrast(const ImageU8& img) {
    ImageU8 out = img;
    const std::size_t npx = static_cast<std::size_t>(img.height) * img.width;
    for (int ch = 0; ch < 3; ++ch) {
        std::uint8_t lo = 255, hi = 0;
        for (std::size_t p = 0; p < npx; ++p) {
            lo = std::min(lo, img.data[p * 3 + ch]);
            hi = std::max(hi, img.data[p * 3 + ch]);
        }
        if (hi <= lo) {
            continue;
        }
        const float scale = 255.0f / static_cast<float>(hi - lo);
        std::array<std::uint8_t, 256> lut{};
        for (int v = lo; v <= hi; ++v) {
            lut[static_cast<std::size_t>(v)] = clamp_u8(static_cast<float>(v - lo) * scale);
        }
        for (std::size_t p = 0; p < npx; ++p) {
            out.data[p * 3 + ch] = lut[img.data[p * 3 + ch]];
        }
    }
    return out;
}

inline ImageU8 adjust_brightness(const ImageU8& img, float factor) {
    if (factor == 1.0f) {
        return img;
    }
    ImageU8 out = img;
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        out.data[i] = clamp_u8(static_cast<float>(img.data[i]) * factor);
    }
    return out;
}

inline ImageU8 adjust_contrast(const ImageU8& img, float factor) {
    if (factor == 1.0f) {
        return img;
    }
    double mean = 0.0;
    const std::size_t npx = static_cast<std::size_t>(img.height) * img.width;
    for (std::size_t p = 0; p < npx; ++p) {
        mean += detail::luma(img.data[p * 3], img.data[p * 3 + 1], img.data[p * 3 + 2]);
    }
    mean /= static_cast<double>(npx);
    ImageU8 out = img;
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        out.data[i] = clamp_u8(static_cast<float>(mean + factor * (img.data[i] - mean)));
    }
    return out;
}

inline ImageU8 adjust_saturation(const ImageU8& img, float factor) {
    if (factor == 1.0f) {
        return img;
    }
    ImageU8 out = img;
    const std::size_t npx = static_cast<std::size_t>(img.height) * img.width;
    for (std::size_t p = 0; p < npx; ++p) {
        const float l = detail::luma(img.data[p * 3], img.data[p * 3 + 1], img.data[p * 3 + 2]);
        for (int ch = 0; ch < 3; ++ch) {
            out.data[p * 3 + ch] = clamp_u8(l + factor * (img.data[p * 3 + ch] - l));
        }
    }
    return out;
}

inline ImageU8 adjust_hue(const ImageU8& img, float delta) {
    if (delta == 0.0f) {
        return img;
    }
    ImageU8 out = img;
    const std::size_t npx = static_cast<std::size_t>(img.height) * img.width;
    for (std::size_t p = 0; p < npx; ++p) {
        float r = img.data[p * 3] / 255.0f;
        float g = img.data[p * 3 + 1] / 255.0f;
        float b = img.data[p * 3 + 2] / 255.0f;
        float h, s, v;
        detail::rgb_to_hsv(r, g, b, h, s, v);
        detail::hsv_to_rgb(h + delta, s, v, r, g, b);
        out.data[p * 3] = clamp_u8(r * 255.0f);
        out.data[p * 3 + 1] = clamp_u8(g * 255.0f);
        out.data[p * 3 + 2] = clamp_u8(b * 255.0f);
    }
    return out;
}

/// Center-crop then zero-pad back to the original size. Sizes are given in
/// the 400 px reference frame and scale with the image.
inline ImageU8 crop_pad(const ImageU8& img, int crop_ref) {
    const int crop_h = std::max(1, static_cast<int>(std::lround(crop_ref * img.height / 400.0)));
    const int crop_w = std::max(1, static_cast<int>(std::lround(crop_ref * img.width / 400.0)));
    const int top = (img.height - crop_h) / 2;
    const int left = (img.width - crop_w) / 2;
    ImageU8 out(img.height, img.width);
    for (int y = top; y < top + crop_h; ++y) {
        for (int x = left; x < left + crop_w; ++x) {
            for (int ch = 0; ch < 3; ++ch) {
                out.at(y, x, ch) = img.at(y, x, ch);
            }
        }
    }
    return out;
}

/// Applies one transform. Randomized kinds (rotation angle, blur sigma,
/// jitter factors) consume draws from `rng`; the rest ignore it.
inline ImageU8 apply_transform(const ImageU8& img, const TransformSpec& spec, Rng& rng) {
    validate_spec(spec);
    struct Applier {
        const ImageU8& img;
        Rng& rng;
        ImageU8 operator()(const RotateSpec& s) const {
            return rotate_image(img, rng.uniform(s.min_deg, s.max_deg));
        }
        ImageU8 operator()(const BlurSpec& s) const {
            return gaussian_blur(img, s.kernel, rng.uniform(s.min_sigma, s.max_sigma));
        }
        ImageU8 operator()(const PosterizeSpec& s) const { return posterize(img, s.bits); }
        ImageU8 operator()(const SharpnessSpec& s) const { return adjust_sharpness(img, s.factor); }
        ImageU8 operator()(const InvertSpec&) const { return invert(img); }
        ImageU8 operator()(const SolarizeSpec& s) const { return solarize(img, s.threshold); }
        ImageU8 operator()(const EqualizeSpec&) const { return equalize(img); }
        ImageU8 operator()(const HFlipSpec&) const { return hflip(img); }
        ImageU8 operator()(const VFlipSpec&) const { return vflip(img); }
        ImageU8 operator()(const JitterSpec& s) const {
            const float fb = rng.uniform(std::max(0.0f, 1.0f - s.brightness), 1.0f + s.brightness);
            const float fc = rng.uniform(std::max(0.0f, 1.0f - s.contrast), 1.0f + s.contrast);
            const float fs = rng.uniform(std::max(0.0f, 1.0f - s.saturation), 1.0f + s.saturation);
            const float dh = rng.uniform(-s.hue, s.hue);
            ImageU8 out = adjust_brightness(img, fb);
            out = adjust_contrast(out, fc);
            out = adjust_saturation(out, fs);
            return adjust_hue(out, dh);
        }
        ImageU8 operator()(const AutocontrastSpec&) const { return autocontrast(img); }
        ImageU8 operator()(const CropPadSpec& s) const { return crop_pad(img, s.crop); }
    };
    return std::visit(Applier{img, rng}, spec);
}

inline ImageU8 apply_chain(const ImageU8& img, const TransformChain& chain, Rng& rng) {
    ImageU8 out = img;
    for (const TransformSpec& spec : chain) {
        out = apply_transform(out, spec, rng);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Pipeline text format
// ---------------------------------------------------------------------------

namespace detail {

inline TransformSpec parse_transform_tokens(const std::vector<std::string>& tok) {
    auto argf = [&](std::size_t i) { return std::stof(tok.at(i)); };
    auto argi = [&](std::size_t i) { return std::stoi(tok.at(i)); };
    auto expect_args = [&](std::size_t n) {
        if (tok.size() != n + 1) {
            throw std::invalid_argument("transform '" + tok[0] + "' expects " + std::to_string(n) +
                                        " parameter(s)");
        }
    };
    const std::string& kind = tok.at(0);
    TransformSpec spec;
    if (kind == "rotate") {
        expect_args(2);
        spec = RotateSpec{argf(1), argf(2)};
    } else if (kind == "blur") {
        expect_args(3);
        spec = BlurSpec{argi(1), argf(2), argf(3)};
    } else if (kind == "posterize") {
        expect_args(1);
        spec = PosterizeSpec{argi(1)};
    } else if (kind == "sharpness") {
        expect_args(1);
        spec = SharpnessSpec{argf(1)};
    } else if (kind == "invert") {
        expect_args(0);
        spec = InvertSpec{};
    } else if (kind == "solarize") {
        expect_args(1);
        spec = SolarizeSpec{argi(1)};
    } else if (kind == "equalize") {
        expect_args(0);
        spec = EqualizeSpec{};
    } else if (kind == "hflip") {
        expect_args(0);
        spec = HFlipSpec{};
    } else if (kind == "vflip") {
        expect_args(0);
        spec = VFlipSpec{};
    } else if (kind == "jitter") {
        expect_args(4);
        spec = JitterSpec{argf(1), argf(2), argf(3), argf(4)};
    } else if (kind == "autocontrast") {
        expect_args(0);
        spec = AutocontrastSpec{};
    } else if (kind == "crop_pad") {
        expect_args(2);
        spec = CropPadSpec{argi(1), argi(2)};
    } else {
        throw std::invalid_argument("unknown transform kind '" + kind + "'");
    }
    validate_spec(spec);
    return spec;
}

}  // namespace detail

/// Parses the plain-text pipeline format: one entry per line, tokens
/// separated by whitespace, compositions joined with '+', comments with '#'.
inline Pipeline parse_pipeline(const std::string& text) {
    Pipeline pipe;
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) {
            line.resize(hash);
        }
        std::istringstream words(line);
        std::vector<std::vector<std::string>> parts(1);
        std::string w;
        while (words >> w) {
            if (w == "+") {
                parts.emplace_back();
            } else {
                parts.back().push_back(w);
            }
        }
        if (parts.size() == 1 && parts[0].empty()) {
            continue;  // blank/comment line
        }
        TransformChain chain;
        for (const auto& tok : parts) {
            if (tok.empty()) {
                throw std::invalid_argument("empty transform in composition: '" + line + "'");
            }
            chain.push_back(detail::parse_transform_tokens(tok));
        }
        pipe.entries.push_back(std::move(chain));
    }
    return pipe;
}

inline std::string format_pipeline(const Pipeline& pipe) {
    struct Formatter {
        std::ostringstream& os;
        void operator()(const RotateSpec& s) const { os << "rotate " << s.min_deg << " " << s.max_deg; }
        void operator()(const BlurSpec& s) const {
            os << "blur " << s.kernel << " " << s.min_sigma << " " << s.max_sigma;
        }
        void operator()(const PosterizeSpec& s) const { os << "posterize " << s.bits; }
        void operator()(const SharpnessSpec& s) const { os << "sharpness " << s.factor; }
        void operator()(const InvertSpec&) const { os << "invert"; }
        void operator()(const SolarizeSpec& s) const { os << "solarize " << s.threshold; }
        void operator()(const EqualizeSpec&) const { os << "equalize"; }
        void operator()(const HFlipSpec&) const { os << "hflip"; }
        void operator()(const VFlipSpec&) const { os << "vflip"; }
        void operator()(const JitterSpec& s) const {
            os << "jitter " << s.brightness << " " << s.contrast << " " << s.saturation << " " << s.hue;
        }
        void operator()(const AutocontrastSpec&) const { os << "autocontrast"; }
        void operator()(const CropPadSpec& s) const { os << "crop_pad " << s.crop << " " << s.pad; }
    };
    std::ostringstream os;
    for (const TransformChain& chain : pipe.entries) {
        for (std::size_t i = 0; i < chain.size(); ++i) {
            if (i) {
                os << " + ";
            }
            std::visit(Formatter{os}, chain[i]);
        }
        os << "\n";
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// Built-in pipelines (kept as pipeline-format text, not construction code)
// ---------------------------------------------------------------------------

inline constexpr const char* kTrainingPipelineText = R"(# training set expansion: 22 transforms per source image
rotate 30 150
rotate 30 150
rotate 30 150
rotate 30 150
rotate 30 150
blur 5 0.1 5.0
blur 5 0.1 5.0
blur 5 0.1 5.0
blur 9 0.1 5.0
blur 9 0.1 5.0
blur 9 0.1 5.0
posterize 2
posterize 4
posterize 8
sharpness 2
invert
solarize 63
solarize 127
solarize 192
equalize
hflip
vflip
)";

inline constexpr const char* kValidationPipelineText1 = R"(# validation set 1
rotate 210 330
rotate 210 330
rotate 210 330
rotate 210 330
rotate 210 330
blur 5 0.1 5.0
blur 5 0.1 5.0
blur 9 0.1 5.0
blur 9 0.1 5.0
posterize 6
)";

inline constexpr const char* kValidationPipelineText2 = R"(# validation set 2
jitter 0.0 0.0 0.0 0.0
rotate 30 330 + hflip
rotate 30 330 + hflip
rotate 30 330 + hflip
rotate 30 330 + hflip
rotate 30 330 + vflip
rotate 30 330 + vflip
rotate 30 330 + vflip
rotate 30 330 + vflip
autocontrast
)";

inline constexpr const char* kValidationPipelineText3 = R"(# validation set 3
rotate 5 175
rotate 5 175
rotate 5 175
rotate 185 355
rotate 185 355
rotate 185 355
crop_pad 300 50
crop_pad 350 25
equalize + hflip
equalize + vflip
)";

inline constexpr const char* kValidationPipelineText4 = R"(# validation set 4
sharpness 0.5
sharpness 1.5
sharpness 2.5
sharpness 3
sharpness 4
invert + hflip
invert + vflip
blur 7 0.1 5.0
blur 7 0.1 5.0
blur 7 0.1 5.0
)";

/// The 22-transform training expansion pipeline.
inline Pipeline training_pipeline() {
    Pipeline p = parse_pipeline(kTrainingPipelineText);
    if (p.entries.size() != 22) {
        throw std::logic_error("training pipeline must hold 22 transforms");
    }
    return p;
}

/// One of the four held-out validation pipelines (10 transforms each).
inline Pipeline validation_pipeline(int set_id) {
    const char* text = nullptr;
    switch (set_id) {
        case 1: text = kValidationPipelineText1; break;
        case 2: text = kValidationPipelineText2; break;
        case 3: text = kValidationPipelineText3; break;
        case 4: text = kValidationPipelineText4; break;
        default: throw std::invalid_argument("validation set id must be 1..4");
    }
    Pipeline p = parse_pipeline(text);
    if (p.entries.size() != 10) {
        throw std::logic_error("validation pipelines must hold 10 transforms");
    }
    return p;
}

// ---------------------------------------------------------------------------
// Set builders
// ---------------------------------------------------------------------------

/// All pipeline outputs for one source image, in entry order. The random
/// stream is keyed by (seed, source index, entry index) so results do not
/// depend on processing order.
inline std::vector<ImageU8> expand_source(const ImageU8& img, const Pipeline& pipe,
                                          std::uint64_t seed, std::uint64_t source_index) {
    std::vector<ImageU8> out;
    out.reserve(pipe.entries.size());
    for (std::size_t e = 0; e < pipe.entries.size(); ++e) {
        Rng rng = Rng::keyed(seed, {source_index, static_cast<std::uint64_t>(e)});
        out.push_back(apply_chain(img, pipe.entries[e], rng));
    }
    return out;
}

/// Training-set expansion: each original plus its 22 variants (23x count).
inline Dataset build_training_set(const Dataset& originals, std::uint64_t seed) {
    if (originals.items.empty()) {
        throw std::invalid_argument("build_training_set: no source images");
    }
    const Pipeline pipe = training_pipeline();
    Dataset out;
    out.scenario = originals.scenario;
    out.items.reserve(originals.items.size() * (pipe.entries.size() + 1));
    for (std::size_t i = 0; i < originals.items.size(); ++i) {
        const LabeledImage& src = originals.items[i];
        out.items.push_back(src);
        for (ImageU8& img : expand_source(src.image, pipe, seed, i)) {
            out.items.push_back(LabeledImage{std::move(img), src.fill, src.size});
        }
    }
    return out;
}

/// Post-validation set: 20 class-uniform sources x 10 transforms = 200 images.
inline Dataset build_validation_set(const Dataset& originals, int set_id, std::uint64_t seed) {
    const Pipeline pipe = validation_pipeline(set_id);
    const int n_labels = originals.n_labels();
    const int per_class = 20 / n_labels;

    std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(n_labels));
    for (std::size_t i = 0; i < originals.items.size(); ++i) {
        by_class[static_cast<std::size_t>(label_of(originals.items[i], originals.scenario))].push_back(i);
    }
    std::vector<std::size_t> chosen;
    for (int c = 0; c < n_labels; ++c) {
        auto& pool = by_class[static_cast<std::size_t>(c)];
        if (static_cast<int>(pool.size()) < per_class) {
            throw std::invalid_argument("build_validation_set: class " + std::to_string(c) + " has " +
                                        std::to_string(pool.size()) + " images, needs " +
                                        std::to_string(per_class));
        }
        Rng rng = Rng::keyed(seed, {0xC1A55ull, static_cast<std::uint64_t>(set_id),
                                    static_cast<std::uint64_t>(c)});
        rng.shuffle(pool);
        chosen.insert(chosen.end(), pool.begin(), pool.begin() + per_class);
    }

    Dataset out;
    out.scenario = originals.scenario;
    out.items.reserve(chosen.size() * pipe.entries.size());
    const std::uint64_t set_seed =
        Rng::keyed(seed, {0x5E7ull, static_cast<std::uint64_t>(set_id)}).next_u64();
    for (std::size_t pos = 0; pos < chosen.size(); ++pos) {
        const LabeledImage& src = originals.items[chosen[pos]];
        for (ImageU8& img : expand_source(src.image, pipe, set_seed, pos)) {
            out.items.push_back(LabeledImage{std::move(img), src.fill, src.size});
        }
    }
    return out;
}

}  // namespace vialnet
