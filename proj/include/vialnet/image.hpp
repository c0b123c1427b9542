#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "vialnet/tensor.hpp"

namespace vialnet {

/// 8-bit RGB raster, row-major, channel interleaved.
struct ImageU8 {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> data;  // height * width * 3

    ImageU8() = default;
    ImageU8(int h, int w) : height(h), width(w), data(static_cast<std::size_t>(h) * w * 3, 0) {
        if (h < 1 || w < 1) {
            throw std::invalid_argument("image dimensions must be positive");
        }
    }

    static constexpr int channels = 3;

    std::size_t index(int y, int x, int c) const {
        return (static_cast<std::size_t>(y) * width + x) * 3 + c;
    }
    std::uint8_t& at(int y, int x, int c) { return data[index(y, x, c)]; }
    std::uint8_t at(int y, int x, int c) const { return data[index(y, x, c)]; }

    bool same_dims(const ImageU8& other) const {
        return height == other.height && width == other.width;
    }

    bool operator==(const ImageU8& other) const {
        return height == other.height && width == other.width && data == other.data;
    }
};

inline std::uint8_t clamp_u8(float v) {
    if (v <= 0.0f) return 0;
    if (v >= 255.0f) return 255;
    return static_cast<std::uint8_t>(v + 0.5f);
}

inline std::uint8_t clamp_u8i(int v) {
    if (v <= 0) return 0;
    if (v >= 255) return 255;
    return static_cast<std::uint8_t>(v);
}

/// Pixel bytes scaled to [0,1], as the HxWx3 network input.
inline Tensor image_to_tensor(const ImageU8& img) {
    Tensor t({img.height, img.width, 3});
    float* out = t.data();
    for (std::size_t i = 0; i < img.data.size(); ++i) {
        out[i] = static_cast<float>(img.data[i]) * (1.0f / 255.0f);
    }
    return t;
}

inline ImageU8 tensor_to_image(const Tensor& t) {
    if (t.rank() != 3 || t.dim(2) != 3) {
        throw ShapeError("tensor_to_image expects HxWx3, got " + shape_to_string(t.shape()));
    }
    ImageU8 img(t.dim(0), t.dim(1));
    const float* in = t.data();
    for (std::size_t i = 0; i < img.data.size(); ++i) {
        img.data[i] = clamp_u8(in[i] * 255.0f);
    }
    return img;
}

}  // namespace vialnet
