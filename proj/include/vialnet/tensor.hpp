#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace vialnet {

using Shape = std::vector<int>;

inline std::string shape_to_string(const Shape& s) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
        os << (i ? "x" : "") << s[i];
    }
    os << "]";
    return os.str();
}

/// Thrown when an operation receives tensors of incompatible shape.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Dense row-major float tensor, rank 1 to 4.
///
/// Layout conventions used across the project:
///   images / feature maps : H x W x C
///   conv kernels          : kh x kw x Cin x Cout
///   fully-connected weight: out x in
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(Shape shape) : shape_(std::move(shape)) {
        data_.assign(checked_numel(shape_), 0.0f);
    }

    Tensor(Shape shape, std::vector<float> data) : shape_(std::move(shape)), data_(std::move(data)) {
        if (checked_numel(shape_) != data_.size()) {
            throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                             " does not match shape " + shape_to_string(shape_));
        }
    }

    static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }

    static Tensor full(Shape shape, float value) {
        Tensor t(std::move(shape));
        std::fill(t.data_.begin(), t.data_.end(), value);
        return t;
    }

    const Shape& shape() const { return shape_; }
    int rank() const { return static_cast<int>(shape_.size()); }
    int dim(int i) const { return shape_[static_cast<std::size_t>(i)]; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    float* data() { return data_.data(); }
    const float* data() const { return data_.data(); }

    float& operator[](std::size_t i) { return data_[i]; }
    float operator[](std::size_t i) const { return data_[i]; }

    float& at(int i) { return data_[static_cast<std::size_t>(i)]; }
    float at(int i) const { return data_[static_cast<std::size_t>(i)]; }

    float& at(int i, int j) { return data_[static_cast<std::size_t>(i) * shape_[1] + j]; }
    float at(int i, int j) const { return data_[static_cast<std::size_t>(i) * shape_[1] + j]; }

    float& at(int i, int j, int k) {
        return data_[(static_cast<std::size_t>(i) * shape_[1] + j) * shape_[2] + k];
    }
    float at(int i, int j, int k) const {
        return data_[(static_cast<std::size_t>(i) * shape_[1] + j) * shape_[2] + k];
    }

    float& at(int i, int j, int k, int l) {
        return data_[((static_cast<std::size_t>(i) * shape_[1] + j) * shape_[2] + k) * shape_[3] + l];
    }
    float at(int i, int j, int k, int l) const {
        return data_[((static_cast<std::size_t>(i) * shape_[1] + j) * shape_[2] + k) * shape_[3] + l];
    }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    bool all_finite() const {
        for (float v : data_) {
            if (!std::isfinite(v)) {
                return false;
            }
        }
        return true;
    }

    void fill(float value) { std::fill(data_.begin(), data_.end(), value); }

private:
    static std::size_t checked_numel(const Shape& shape) {
        if (shape.empty() || shape.size() > 4) {
            throw ShapeError("tensor rank must be 1..4, got shape " + shape_to_string(shape));
        }
        std::size_t n = 1;
        for (int d : shape) {
            if (d < 1) {
                throw ShapeError("tensor dimensions must be >= 1, got shape " + shape_to_string(shape));
            }
            n *= static_cast<std::size_t>(d);
        }
        return n;
    }

    Shape shape_;
    std::vector<float> data_;
};

namespace detail {

// Conv kernels below keep the output-channel axis innermost and padded to a
// multiple of the SIMD width so the hot loops have compile-time trip counts.
inline constexpr int kLanePad = 8;

inline int padded_channels(int c) { return ((c + kLanePad - 1) / kLanePad) * kLanePad; }

/// Packs kh x kw x Cin x Cout kernels as rows of length `cpad` (zero padded).
inline void pack_kernels(const float* kernels, int k_rows, int cout, int cpad, float* packed) {
    for (int r = 0; r < k_rows; ++r) {
        for (int c = 0; c < cout; ++c) {
            packed[static_cast<std::size_t>(r) * cpad + c] = kernels[static_cast<std::size_t>(r) * cout + c];
        }
        for (int c = cout; c < cpad; ++c) {
            packed[static_cast<std::size_t>(r) * cpad + c] = 0.0f;
        }
    }
}

/// Transposed packing: cout rows of length k_rows (for input-gradient GEMM).
inline void pack_kernels_transposed(const float* kernels, int k_rows, int cout, float* packed) {
    for (int c = 0; c < cout; ++c) {
        for (int r = 0; r < k_rows; ++r) {
            packed[static_cast<std::size_t>(c) * k_rows + r] = kernels[static_cast<std::size_t>(r) * cout + c];
        }
    }
}

// One output pixel: acc[0..cpad) += window . packed_kernels, window being the
// kh contiguous row segments of length kw*cin starting at `win`.
template <int CPAD>
inline void conv_pixel(const float* __restrict__ win, int row_stride, int kh, int seg,
                       const float* __restrict__ packed, float* __restrict__ out_px,
                       const float* __restrict__ bias_padded) {
    float acc[CPAD];
    for (int n = 0; n < CPAD; ++n) {
        acc[n] = bias_padded[n];
    }
    const float* b = packed;
    for (int ky = 0; ky < kh; ++ky) {
        const float* r = win + static_cast<std::size_t>(ky) * row_stride;
        for (int t = 0; t < seg; ++t) {
            const float a = r[t];
            for (int n = 0; n < CPAD; ++n) {
                acc[n] += a * b[n];
            }
            b += CPAD;
        }
    }
    for (int n = 0; n < CPAD; ++n) {
        out_px[n] = acc[n];
    }
}

template <int CPAD>
inline void conv_forward_t(const float* in, int w, int cin, const float* packed,
                           const float* bias_padded, int kh, int kw, int cout, int stride,
                           int oh, int ow, float* out) {
    const int seg = kw * cin;
    const int row_stride = w * cin;
    std::vector<float> px(static_cast<std::size_t>(CPAD));
    for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
            const float* win = in + (static_cast<std::size_t>(oy) * stride * w + static_cast<std::size_t>(ox) * stride) * cin;
            conv_pixel<CPAD>(win, row_stride, kh, seg, packed, px.data(), bias_padded);
            float* o = out + (static_cast<std::size_t>(oy) * ow + ox) * cout;
            for (int n = 0; n < cout; ++n) {
                o[n] = px[n];
            }
        }
    }
}

inline void conv_forward_dispatch(const float* in, int w, int cin, const float* packed,
                                  const float* bias_padded, int kh, int kw, int cout, int cpad,
                                  int stride, int oh, int ow, float* out) {
    switch (cpad) {
        case 8:
            conv_forward_t<8>(in, w, cin, packed, bias_padded, kh, kw, cout, stride, oh, ow, out);
            break;
        case 16:
            conv_forward_t<16>(in, w, cin, packed, bias_padded, kh, kw, cout, stride, oh, ow, out);
            break;
        case 24:
            conv_forward_t<24>(in, w, cin, packed, bias_padded, kh, kw, cout, stride, oh, ow, out);
            break;
        case 32:
            conv_forward_t<32>(in, w, cin, packed, bias_padded, kh, kw, cout, stride, oh, ow, out);
            break;
        default: {
            // Generic fallback for unusual channel counts.
            const int seg = kw * cin;
            const int row_stride = w * cin;
            std::vector<float> acc(static_cast<std::size_t>(cpad));
            for (int oy = 0; oy < oh; ++oy) {
                for (int ox = 0; ox < ow; ++ox) {
                    for (int n = 0; n < cpad; ++n) {
                        acc[static_cast<std::size_t>(n)] = bias_padded[n];
                    }
                    const float* win = in + (static_cast<std::size_t>(oy) * stride * w +
                                             static_cast<std::size_t>(ox) * stride) * cin;
                    const float* b = packed;
                    for (int ky = 0; ky < kh; ++ky) {
                        const float* r = win + static_cast<std::size_t>(ky) * row_stride;
                        for (int t = 0; t < seg; ++t) {
                            const float a = r[t];
                            for (int n = 0; n < cpad; ++n) {
                                acc[static_cast<std::size_t>(n)] += a * b[n];
                            }
                            b += cpad;
                        }
                    }
                    float* o = out + (static_cast<std::size_t>(oy) * ow + ox) * cout;
                    for (int n = 0; n < cout; ++n) {
                        o[n] = acc[static_cast<std::size_t>(n)];
                    }
                }
            }
        }
    }
}

/// Kernel gradient: dK[r][c] += sum_pixels window[r] * dOut[pixel][c],
/// accumulated in the padded packed layout (small, cache resident).
template <int CPAD>
inline void conv_kernel_grad_t(const float* in, int w, int cin, const float* dout, int kh, int kw,
                               int cout, int stride, int oh, int ow, float* dk_packed) {
    const int seg = kw * cin;
    const int row_stride = w * cin;
    for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
            float g[CPAD];
            const float* d = dout + (static_cast<std::size_t>(oy) * ow + ox) * cout;
            for (int n = 0; n < cout; ++n) {
                g[n] = d[n];
            }
            for (int n = cout; n < CPAD; ++n) {
                g[n] = 0.0f;
            }
            const float* win = in + (static_cast<std::size_t>(oy) * stride * w + static_cast<std::size_t>(ox) * stride) * cin;
            float* dk = dk_packed;
            for (int ky = 0; ky < kh; ++ky) {
                const float* r = win + static_cast<std::size_t>(ky) * row_stride;
                for (int t = 0; t < seg; ++t) {
                    const float a = r[t];
                    for (int n = 0; n < CPAD; ++n) {
                        dk[n] += a * g[n];
                    }
                    dk += CPAD;
                }
            }
        }
    }
}

inline void conv_kernel_grad_dispatch(const float* in, int w, int cin, const float* dout, int kh,
                                      int kw, int cout, int cpad, int stride, int oh, int ow,
                                      float* dk_packed) {
    switch (cpad) {
        case 8: conv_kernel_grad_t<8>(in, w, cin, dout, kh, kw, cout, stride, oh, ow, dk_packed); break;
        case 16: conv_kernel_grad_t<16>(in, w, cin, dout, kh, kw, cout, stride, oh, ow, dk_packed); break;
        case 24: conv_kernel_grad_t<24>(in, w, cin, dout, kh, kw, cout, stride, oh, ow, dk_packed); break;
        case 32: conv_kernel_grad_t<32>(in, w, cin, dout, kh, kw, cout, stride, oh, ow, dk_packed); break;
        default: {
            const int seg = kw * cin;
            const int row_stride = w * cin;
            std::vector<float> g(static_cast<std::size_t>(cpad), 0.0f);
            for (int oy = 0; oy < oh; ++oy) {
                for (int ox = 0; ox < ow; ++ox) {
                    const float* d = dout + (static_cast<std::size_t>(oy) * ow + ox) * cout;
                    for (int n = 0; n < cout; ++n) {
                        g[static_cast<std::size_t>(n)] = d[n];
                    }
                    const float* win = in + (static_cast<std::size_t>(oy) * stride * w +
                                             static_cast<std::size_t>(ox) * stride) * cin;
                    float* dk = dk_packed;
                    for (int ky = 0; ky < kh; ++ky) {
                        const float* r = win + static_cast<std::size_t>(ky) * row_stride;
                        for (int t = 0; t < seg; ++t) {
                            const float a = r[t];
                            for (int n = 0; n < cpad; ++n) {
                                dk[n] += a * g[static_cast<std::size_t>(n)];
                            }
                            dk += cpad;
                        }
                    }
                }
            }
        }
    }
}

/// Input gradient: scatter dWin = dOut[pixel] . K^T back into the input window.
inline void conv_input_grad(const float* dout, const float* kt_packed, int kh, int kw, int cin,
                            int cout, int stride, int oh, int ow, int w, float* din) {
    const int k_rows = kh * kw * cin;
    const int seg = kw * cin;
    const int row_stride = w * cin;
    std::vector<float> dwin(static_cast<std::size_t>(k_rows));
    for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
            const float* d = dout + (static_cast<std::size_t>(oy) * ow + ox) * cout;
            float* __restrict__ dw = dwin.data();
            {
                const float* kt = kt_packed;
                const float d0 = d[0];
                for (int r = 0; r < k_rows; ++r) {
                    dw[r] = d0 * kt[r];
                }
            }
            for (int n = 1; n < cout; ++n) {
                const float* kt = kt_packed + static_cast<std::size_t>(n) * k_rows;
                const float dn = d[n];
                for (int r = 0; r < k_rows; ++r) {
                    dw[r] += dn * kt[r];
                }
            }
            float* base = din + (static_cast<std::size_t>(oy) * stride * w + static_cast<std::size_t>(ox) * stride) * cin;
            for (int ky = 0; ky < kh; ++ky) {
                float* __restrict__ r = base + static_cast<std::size_t>(ky) * row_stride;
                const float* s = dw + static_cast<std::size_t>(ky) * seg;
                for (int t = 0; t < seg; ++t) {
                    r[t] += s[t];
                }
            }
        }
    }
}

inline void matvec(const float* w, const float* x, const float* b, int out_n, int in_n, float* y) {
    for (int m = 0; m < out_n; ++m) {
        const float* __restrict__ row = w + static_cast<std::size_t>(m) * in_n;
        float a0 = 0.0f, a1 = 0.0f, a2 = 0.0f, a3 = 0.0f;
        int n = 0;
        for (; n + 4 <= in_n; n += 4) {
            a0 += row[n] * x[n];
            a1 += row[n + 1] * x[n + 1];
            a2 += row[n + 2] * x[n + 2];
            a3 += row[n + 3] * x[n + 3];
        }
        float acc = (a0 + a1) + (a2 + a3);
        for (; n < in_n; ++n) {
            acc += row[n] * x[n];
        }
        y[m] = acc + b[m];
    }
}

/// dx = W^T dy (overwrites dx), dW = dy x^T, db = dy.
/// Any of the gradient outputs may be null to skip it; `accumulate` selects
/// += or = for the parameter gradients.
inline void matvec_backward(const float* w, const float* x, const float* dy, int out_n, int in_n,
                            float* dx, float* dw, float* db, bool accumulate) {
    if (dx) {
        for (int n = 0; n < in_n; ++n) {
            dx[n] = 0.0f;
        }
        for (int m = 0; m < out_n; ++m) {
            const float g = dy[m];
            const float* __restrict__ row = w + static_cast<std::size_t>(m) * in_n;
            for (int n = 0; n < in_n; ++n) {
                dx[n] += g * row[n];
            }
        }
    }
    if (dw) {
        for (int m = 0; m < out_n; ++m) {
            const float g = dy[m];
            float* __restrict__ row = dw + static_cast<std::size_t>(m) * in_n;
            if (accumulate) {
                for (int n = 0; n < in_n; ++n) {
                    row[n] += g * x[n];
                }
            } else {
                for (int n = 0; n < in_n; ++n) {
                    row[n] = g * x[n];
                }
            }
        }
    }
    if (db) {
        for (int m = 0; m < out_n; ++m) {
            if (accumulate) {
                db[m] += dy[m];
            } else {
                db[m] = dy[m];
            }
        }
    }
}

}  // namespace detail

/// Output spatial extent of a valid (no padding) convolution.
inline int conv_output_extent(int input, int kernel, int stride) {
    return (input - kernel) / stride + 1;
}

/// Valid 2-D convolution: input HxWxCin, kernels kh x kw x Cin x Cout,
/// bias Cout. Output is the pre-activation feature map.
inline Tensor conv2d_valid(const Tensor& input, const Tensor& kernels, const Tensor& bias, int stride = 1) {
    if (input.rank() != 3 || kernels.rank() != 4 || bias.rank() != 1) {
        throw ShapeError("conv2d_valid expects input HxWxC " + shape_to_string(input.shape()) +
                         ", kernels kh x kw x Cin x Cout " + shape_to_string(kernels.shape()) +
                         ", bias Cout " + shape_to_string(bias.shape()));
    }
    const int h = input.dim(0), w = input.dim(1), cin = input.dim(2);
    const int kh = kernels.dim(0), kw = kernels.dim(1);
    if (kernels.dim(2) != cin) {
        throw ShapeError("conv2d_valid kernel channels " + shape_to_string(kernels.shape()) +
                         " do not match input " + shape_to_string(input.shape()));
    }
    const int cout = kernels.dim(3);
    if (bias.dim(0) != cout) {
        throw ShapeError("conv2d_valid bias " + shape_to_string(bias.shape()) + " does not match Cout " +
                         std::to_string(cout));
    }
    if (stride < 1) {
        throw std::invalid_argument("conv2d_valid stride must be >= 1, got " + std::to_string(stride));
    }
    if (kh > h || kw > w) {
        throw ShapeError("conv2d_valid kernel " + shape_to_string(kernels.shape()) +
                         " larger than input " + shape_to_string(input.shape()));
    }
    const int oh = conv_output_extent(h, kh, stride);
    const int ow = conv_output_extent(w, kw, stride);

    const int k_rows = kh * kw * cin;
    const int cpad = detail::padded_channels(cout);
    std::vector<float> packed(static_cast<std::size_t>(k_rows) * cpad);
    detail::pack_kernels(kernels.data(), k_rows, cout, cpad, packed.data());
    std::vector<float> bias_padded(static_cast<std::size_t>(cpad), 0.0f);
    std::copy(bias.data(), bias.data() + cout, bias_padded.begin());

    Tensor out({oh, ow, cout});
    detail::conv_forward_dispatch(input.data(), w, cin, packed.data(), bias_padded.data(), kh, kw,
                                  cout, cpad, stride, oh, ow, out.data());
    return out;
}

struct Conv2dGrads {
    Tensor input;
    Tensor kernels;
    Tensor bias;
};

/// Gradients of conv2d_valid w.r.t. input, kernels and bias.
/// `input` and `kernels` are the cached forward operands.
inline Conv2dGrads conv2d_backward(const Tensor& input, const Tensor& kernels, int stride,
                                   const Tensor& grad_out) {
    if (input.rank() != 3 || kernels.rank() != 4) {
        throw ShapeError("conv2d_backward expects cached input HxWxC and kernels kh x kw x Cin x Cout");
    }
    if (stride < 1) {
        throw std::invalid_argument("conv2d_backward stride must be >= 1");
    }
    const int h = input.dim(0), w = input.dim(1), cin = input.dim(2);
    const int kh = kernels.dim(0), kw = kernels.dim(1), cout = kernels.dim(3);
    if (kernels.dim(2) != cin) {
        throw ShapeError("conv2d_backward kernel/input channel mismatch");
    }
    const int oh = conv_output_extent(h, kh, stride);
    const int ow = conv_output_extent(w, kw, stride);
    if (grad_out.rank() != 3 || grad_out.dim(0) != oh || grad_out.dim(1) != ow || grad_out.dim(2) != cout) {
        throw ShapeError("conv2d_backward upstream gradient " + shape_to_string(grad_out.shape()) +
                         " does not match forward output [" + std::to_string(oh) + "x" +
                         std::to_string(ow) + "x" + std::to_string(cout) + "]");
    }

    Conv2dGrads g{Tensor(input.shape()), Tensor(kernels.shape()), Tensor(Shape{cout})};

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

    std::vector<float> kt_packed(static_cast<std::size_t>(cout) * k_rows);
    detail::pack_kernels_transposed(kernels.data(), k_rows, cout, kt_packed.data());
    detail::conv_input_grad(grad_out.data(), kt_packed.data(), kh, kw, cin, cout, stride, oh, ow, w,
                            g.input.data());

    const float* d = grad_out.data();
    for (std::size_t p = 0; p < static_cast<std::size_t>(oh) * ow; ++p) {
        for (int n = 0; n < cout; ++n) {
            g.bias.data()[n] += d[p * cout + n];
        }
    }
    return g;
}

/// Matrix-vector product plus bias: weights are out x in.
inline Tensor affine(const Tensor& x, const Tensor& weights, const Tensor& bias) {
    if (x.rank() != 1 || weights.rank() != 2 || bias.rank() != 1) {
        throw ShapeError("affine expects x[n], weights[m,n], bias[m]");
    }
    const int in_n = x.dim(0);
    const int out_n = weights.dim(0);
    if (weights.dim(1) != in_n || bias.dim(0) != out_n) {
        throw ShapeError("affine shape mismatch: x " + shape_to_string(x.shape()) + ", weights " +
                         shape_to_string(weights.shape()) + ", bias " + shape_to_string(bias.shape()));
    }
    Tensor y({out_n});
    detail::matvec(weights.data(), x.data(), bias.data(), out_n, in_n, y.data());
    return y;
}

struct AffineGrads {
    Tensor input;
    Tensor weights;
    Tensor bias;
};

inline AffineGrads affine_backward(const Tensor& x, const Tensor& weights, const Tensor& grad_out) {
    if (x.rank() != 1 || weights.rank() != 2 || grad_out.rank() != 1) {
        throw ShapeError("affine_backward expects x[n], weights[m,n], grad_out[m]");
    }
    const int in_n = x.dim(0);
    const int out_n = weights.dim(0);
    if (weights.dim(1) != in_n || grad_out.dim(0) != out_n) {
        throw ShapeError("affine_backward shape mismatch");
    }
    AffineGrads g{Tensor({in_n}), Tensor({out_n, in_n}), Tensor({out_n})};
    detail::matvec_backward(weights.data(), x.data(), grad_out.data(), out_n, in_n, g.input.data(),
                            g.weights.data(), g.bias.data(), /*accumulate=*/false);
    return g;
}

inline Tensor relu(const Tensor& x) {
    Tensor y(x.shape());
    const float* in = x.data();
    float* out = y.data();
    for (std::size_t i = 0; i < x.size(); ++i) {
        out[i] = in[i] > 0.0f ? in[i] : 0.0f;
    }
    return y;
}

/// `forward_input` is the cached pre-activation input of the forward relu.
inline Tensor relu_backward(const Tensor& forward_input, const Tensor& grad_out) {
    if (!forward_input.same_shape(grad_out)) {
        throw ShapeError("relu_backward shape mismatch: cache " + shape_to_string(forward_input.shape()) +
                         " vs upstream " + shape_to_string(grad_out.shape()));
    }
    Tensor g(grad_out.shape());
    const float* x = forward_input.data();
    const float* d = grad_out.data();
    float* out = g.data();
    for (std::size_t i = 0; i < g.size(); ++i) {
        out[i] = x[i] > 0.0f ? d[i] : 0.0f;
    }
    return g;
}

/// Numerically stable softmax over a rank-1 tensor of at least 2 logits.
inline Tensor softmax(const Tensor& logits) {
    if (logits.rank() != 1 || logits.dim(0) < 2) {
        throw ShapeError("softmax expects a rank-1 tensor with n >= 2, got " +
                         shape_to_string(logits.shape()));
    }
    const int n = logits.dim(0);
    Tensor p({n});
    float maxv = logits[0];
    for (int i = 1; i < n; ++i) {
        maxv = std::max(maxv, logits[static_cast<std::size_t>(i)]);
    }
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        const float e = std::exp(logits[static_cast<std::size_t>(i)] - maxv);
        p[static_cast<std::size_t>(i)] = e;
        sum += e;
    }
    const float inv = static_cast<float>(1.0 / sum);
    for (int i = 0; i < n; ++i) {
        p[static_cast<std::size_t>(i)] *= inv;
    }
    return p;
}

inline Tensor flatten(const Tensor& x) {
    return Tensor({static_cast<int>(x.size())}, std::vector<float>(x.data(), x.data() + x.size()));
}

inline Tensor unflatten(const Tensor& x, Shape shape) {
    if (x.rank() != 1) {
        throw ShapeError("unflatten expects a rank-1 tensor");
    }
    return Tensor(std::move(shape), std::vector<float>(x.data(), x.data() + x.size()));
}

}  // namespace vialnet
