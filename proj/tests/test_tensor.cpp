#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "testutil.hpp"
#include "vialnet/tensor.hpp"

using vialnet::Tensor;
using Catch::Approx;

namespace {

// Scalar objective used by the finite-difference checks: a fixed random
// weighting of the op output, so every output element contributes.
double weighted_sum(const Tensor& out, const Tensor& weights) {
    double acc = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) {
        acc += static_cast<double>(out[i]) * static_cast<double>(weights[i]);
    }
    return acc;
}

}  // namespace

TEST_CASE("tensor basics and invariants") {
    Tensor t({2, 3, 4});
    REQUIRE(t.size() == 24);
    REQUIRE(t.rank() == 3);
    CHECK(t.all_finite());

    CHECK_THROWS_AS(Tensor({0, 3}), vialnet::ShapeError);
    CHECK_THROWS_AS(Tensor({2, -1}), vialnet::ShapeError);
    CHECK_THROWS_AS(Tensor({2, 2}, std::vector<float>(3)), vialnet::ShapeError);
}

TEST_CASE("conv2d_valid shape chain matches the valid-convolution formula") {
    // 400x400x3 through a 3x3x3x10 kernel at stride 1 -> 398x398x10.
    Tensor input({400, 400, 3});
    Tensor kernels({3, 3, 3, 10});
    Tensor bias({10});
    Tensor out = vialnet::conv2d_valid(input, kernels, bias, 1);
    REQUIRE(out.shape() == vialnet::Shape{398, 398, 10});

    for (int h : {8, 11, 40}) {
        for (int k : {1, 3, 5}) {
            for (int s : {1, 2}) {
                Tensor in({h, h, 2});
                Tensor kr({k, k, 2, 4});
                Tensor b({4});
                Tensor o = vialnet::conv2d_valid(in, kr, b, s);
                CHECK(o.dim(0) == (h - k) / s + 1);
                CHECK(o.dim(1) == (h - k) / s + 1);
                CHECK(o.dim(2) == 4);
            }
        }
    }
}

TEST_CASE("conv2d_valid identity and all-ones fixtures") {
    SECTION("1x1 identity kernel reproduces the input") {
        Tensor input = testutil::random_tensor({5, 5, 1}, 42);
        Tensor kernels = Tensor::full({1, 1, 1, 1}, 1.0f);
        Tensor bias({1});
        Tensor out = vialnet::conv2d_valid(input, kernels, bias, 1);
        REQUIRE(out.shape() == input.shape());
        for (std::size_t i = 0; i < out.size(); ++i) {
            CHECK(out[i] == input[i]);
        }
    }
    SECTION("all-ones 3x3 input with all-ones 2x2 kernel gives 4 everywhere") {
        Tensor input = Tensor::full({3, 3, 1}, 1.0f);
        Tensor kernels = Tensor::full({2, 2, 1, 1}, 1.0f);
        Tensor bias({1});
        Tensor out = vialnet::conv2d_valid(input, kernels, bias, 1);
        REQUIRE(out.shape() == vialnet::Shape{2, 2, 1});
        for (std::size_t i = 0; i < out.size(); ++i) {
            CHECK(out[i] == Approx(4.0f));
        }
    }
}

TEST_CASE("conv2d_valid matches a naive sliding-window oracle") {
    Tensor input = testutil::random_tensor({9, 7, 3}, 7);
    Tensor kernels = testutil::random_tensor({3, 2, 3, 5}, 8);
    Tensor bias = testutil::random_tensor({5}, 9);
    Tensor out = vialnet::conv2d_valid(input, kernels, bias, 2);
    REQUIRE(out.shape() == vialnet::Shape{4, 3, 5});
    for (int oy = 0; oy < 4; ++oy) {
        for (int ox = 0; ox < 3; ++ox) {
            for (int c = 0; c < 5; ++c) {
                double acc = bias.at(c);
                for (int ky = 0; ky < 3; ++ky) {
                    for (int kx = 0; kx < 2; ++kx) {
                        for (int ci = 0; ci < 3; ++ci) {
                            acc += static_cast<double>(input.at(oy * 2 + ky, ox * 2 + kx, ci)) *
                                   static_cast<double>(kernels.at(ky, kx, ci, c));
                        }
                    }
                }
                CHECK(out.at(oy, ox, c) == Approx(acc).margin(1e-4));
            }
        }
    }
}

TEST_CASE("conv2d_valid rejects bad arguments with shape diagnostics") {
    Tensor input({8, 8, 3});
    Tensor bias({4});
    CHECK_THROWS_AS(vialnet::conv2d_valid(input, Tensor({3, 3, 2, 4}), bias, 1), vialnet::ShapeError);
    CHECK_THROWS_AS(vialnet::conv2d_valid(input, Tensor({9, 9, 3, 4}), bias, 1), vialnet::ShapeError);
    CHECK_THROWS_AS(vialnet::conv2d_valid(input, Tensor({3, 3, 3, 4}), Tensor({5}), 1), vialnet::ShapeError);
    CHECK_THROWS_AS(vialnet::conv2d_valid(input, Tensor({3, 3, 3, 4}), bias, 0), std::invalid_argument);
}

TEST_CASE("affine fixtures") {
    SECTION("identity") {
        Tensor x({2}, {1.0f, 2.0f});
        Tensor w({2, 2}, {1.0f, 0.0f, 0.0f, 1.0f});
        Tensor b({2});
        Tensor y = vialnet::affine(x, w, b);
        CHECK(y[0] == 1.0f);
        CHECK(y[1] == 2.0f);
    }
    SECTION("hand sum") {
        Tensor x({2}, {1.0f, 1.0f});
        Tensor w({1, 2}, {1.0f, 1.0f});
        Tensor b({1}, {3.0f});
        Tensor y = vialnet::affine(x, w, b);
        CHECK(y[0] == Approx(5.0f));
    }
    SECTION("random matches naive dot-product oracle") {
        Tensor x = testutil::random_tensor({10}, 11);
        Tensor w = testutil::random_tensor({6, 10}, 12);
        Tensor b = testutil::random_tensor({6}, 13);
        Tensor y = vialnet::affine(x, w, b);
        for (int m = 0; m < 6; ++m) {
            double acc = b.at(m);
            for (int n = 0; n < 10; ++n) {
                acc += static_cast<double>(w.at(m, n)) * static_cast<double>(x.at(n));
            }
            CHECK(y.at(m) == Approx(acc).margin(1e-5));
        }
    }
    SECTION("dimension mismatch rejected") {
        CHECK_THROWS_AS(vialnet::affine(Tensor({3}), Tensor({2, 4}), Tensor({2})), vialnet::ShapeError);
        CHECK_THROWS_AS(vialnet::affine(Tensor({4}), Tensor({2, 4}), Tensor({3})), vialnet::ShapeError);
    }
}

TEST_CASE("relu fixtures") {
    Tensor x({3}, {-1.0f, 0.0f, 2.0f});
    Tensor y = vialnet::relu(x);
    CHECK(y[0] == 0.0f);
    CHECK(y[1] == 0.0f);
    CHECK(y[2] == 2.0f);

    Tensor neg = Tensor::full({4, 4, 2}, -3.5f);
    Tensor zy = vialnet::relu(neg);
    for (std::size_t i = 0; i < zy.size(); ++i) {
        CHECK(zy[i] == 0.0f);
    }

    Tensor pos = testutil::random_tensor({17}, 21, 0.1f, 2.0f);
    Tensor py = vialnet::relu(pos);
    for (std::size_t i = 0; i < py.size(); ++i) {
        CHECK(py[i] == pos[i]);
    }
}

TEST_CASE("softmax fixtures and properties") {
    SECTION("symmetry") {
        Tensor p = vialnet::softmax(Tensor({2}, {0.0f, 0.0f}));
        CHECK(p[0] == Approx(0.5f));
        CHECK(p[1] == Approx(0.5f));
    }
    SECTION("large logits do not overflow") {
        Tensor p = vialnet::softmax(Tensor({4}, {1000.0f, 1000.0f, 1000.0f, 1000.0f}));
        for (int i = 0; i < 4; ++i) {
            CHECK(p[static_cast<std::size_t>(i)] == Approx(0.25f));
        }
        CHECK(p.all_finite());
    }
    SECTION("analytic ratio") {
        Tensor p = vialnet::softmax(Tensor({2}, {std::log(1.0f), std::log(3.0f)}));
        CHECK(p[0] == Approx(0.25f).epsilon(1e-5));
        CHECK(p[1] == Approx(0.75f).epsilon(1e-5));
    }
    SECTION("probability vector and shift invariance") {
        vialnet::Rng rng(99);
        for (int trial = 0; trial < 50; ++trial) {
            Tensor logits = testutil::random_tensor({5}, 1000 + static_cast<std::uint64_t>(trial), -4.0f, 4.0f);
            Tensor p = vialnet::softmax(logits);
            double sum = 0.0;
            for (int i = 0; i < 5; ++i) {
                CHECK(p[static_cast<std::size_t>(i)] >= 0.0f);
                sum += p[static_cast<std::size_t>(i)];
            }
            CHECK(sum == Approx(1.0).margin(1e-6));

            const float shift = rng.uniform(-50.0f, 50.0f);
            Tensor shifted = logits;
            for (std::size_t i = 0; i < shifted.size(); ++i) {
                shifted[i] += shift;
            }
            Tensor q = vialnet::softmax(shifted);
            for (int i = 0; i < 5; ++i) {
                CHECK(q[static_cast<std::size_t>(i)] == Approx(p[static_cast<std::size_t>(i)]).margin(1e-6));
            }
        }
    }
    SECTION("n < 2 rejected") {
        CHECK_THROWS_AS(vialnet::softmax(Tensor({1}, {1.0f})), vialnet::ShapeError);
    }
}

TEST_CASE("conv2d_backward gradients match central finite differences") {
    Tensor input = testutil::random_tensor({8, 8, 1}, 31);
    Tensor kernels = testutil::random_tensor({3, 3, 1, 4}, 32);
    Tensor bias = testutil::random_tensor({4}, 33);
    const Tensor out0 = vialnet::conv2d_valid(input, kernels, bias, 1);
    const Tensor weighting = testutil::random_tensor(out0.shape(), 34);

    std::vector<double> din = testutil::to_double(input);
    std::vector<double> dker = testutil::to_double(kernels);
    std::vector<double> dbias = testutil::to_double(bias);
    auto eval = [&]() {
        const std::vector<double> out = testutil::ref_conv2d(din, 8, 8, 1, dker, 3, 3, 4, dbias, 1);
        double acc = 0.0;
        for (std::size_t i = 0; i < out.size(); ++i) {
            acc += out[i] * static_cast<double>(weighting[i]);
        }
        return acc;
    };

    vialnet::Conv2dGrads grads = vialnet::conv2d_backward(input, kernels, 1, weighting);
    REQUIRE(grads.input.shape() == input.shape());
    REQUIRE(grads.kernels.shape() == kernels.shape());
    REQUIRE(grads.bias.shape() == bias.shape());

    const double eps = 1e-3;
    vialnet::Rng pick(35);
    int checked = 0;
    // Every kernel coordinate plus sampled input coordinates: > 100 total.
    for (std::size_t i = 0; i < kernels.size(); ++i) {
        const double fd = testutil::central_difference(eval, dker[i], eps);
        CHECK(testutil::relative_error(grads.kernels[i], fd) < 1e-3);
        ++checked;
    }
    for (std::size_t i = 0; i < bias.size(); ++i) {
        const double fd = testutil::central_difference(eval, dbias[i], eps);
        CHECK(testutil::relative_error(grads.bias[i], fd) < 1e-3);
        ++checked;
    }
    for (int n = 0; n < 80; ++n) {
        const std::size_t i = static_cast<std::size_t>(pick.uniform_int(0, static_cast<std::int64_t>(input.size()) - 1));
        const double fd = testutil::central_difference(eval, din[i], eps);
        CHECK(testutil::relative_error(grads.input[i], fd) < 1e-3);
        ++checked;
    }
    CHECK(checked >= 100);
    CHECK(grads.input.all_finite());
    CHECK(grads.kernels.all_finite());
}

TEST_CASE("conv2d_backward with stride matches finite differences") {
    Tensor input = testutil::random_tensor({9, 9, 2}, 41);
    Tensor kernels = testutil::random_tensor({3, 3, 2, 3}, 42);
    Tensor bias = testutil::random_tensor({3}, 43);
    const Tensor out0 = vialnet::conv2d_valid(input, kernels, bias, 2);
    const Tensor weighting = testutil::random_tensor(out0.shape(), 44);

    std::vector<double> din = testutil::to_double(input);
    std::vector<double> dker = testutil::to_double(kernels);
    std::vector<double> dbias = testutil::to_double(bias);
    auto eval = [&]() {
        const std::vector<double> out = testutil::ref_conv2d(din, 9, 9, 2, dker, 3, 3, 3, dbias, 2);
        double acc = 0.0;
        for (std::size_t i = 0; i < out.size(); ++i) {
            acc += out[i] * static_cast<double>(weighting[i]);
        }
        return acc;
    };

    vialnet::Conv2dGrads grads = vialnet::conv2d_backward(input, kernels, 2, weighting);
    const double eps = 1e-3;
    for (std::size_t i = 0; i < kernels.size(); ++i) {
        const double fd = testutil::central_difference(eval, dker[i], eps);
        CHECK(testutil::relative_error(grads.kernels[i], fd) < 1e-3);
    }
    vialnet::Rng pick(45);
    for (int n = 0; n < 40; ++n) {
        const std::size_t i = static_cast<std::size_t>(pick.uniform_int(0, static_cast<std::int64_t>(input.size()) - 1));
        const double fd = testutil::central_difference(eval, din[i], eps);
        CHECK(testutil::relative_error(grads.input[i], fd) < 1e-3);
    }
}

TEST_CASE("conv2d_backward rejects mismatched upstream gradient") {
    Tensor input({8, 8, 1});
    Tensor kernels({3, 3, 1, 4});
    CHECK_THROWS_AS(vialnet::conv2d_backward(input, kernels, 1, Tensor({5, 6, 4})), vialnet::ShapeError);
    CHECK_THROWS_AS(vialnet::conv2d_backward(input, kernels, 1, Tensor({6, 6, 3})), vialnet::ShapeError);
}

TEST_CASE("affine_backward matches finite differences and fixtures") {
    Tensor x = testutil::random_tensor({7}, 51);
    Tensor w = testutil::random_tensor({5, 7}, 52);
    const Tensor weighting = testutil::random_tensor({5}, 53);
    Tensor b = testutil::random_tensor({5}, 54);

    std::vector<double> dx = testutil::to_double(x);
    std::vector<double> dw = testutil::to_double(w);
    std::vector<double> db = testutil::to_double(b);
    auto eval = [&]() {
        const std::vector<double> y = testutil::ref_affine(dx, dw, db, 5, 7);
        double acc = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) {
            acc += y[i] * static_cast<double>(weighting[i]);
        }
        return acc;
    };

    vialnet::AffineGrads grads = vialnet::affine_backward(x, w, weighting);
    const double eps = 1e-3;
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double fd = testutil::central_difference(eval, dw[i], eps);
        CHECK(testutil::relative_error(grads.weights[i], fd) < 1e-3);
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double fd = testutil::central_difference(eval, dx[i], eps);
        CHECK(testutil::relative_error(grads.input[i], fd) < 1e-3);
    }
    // Bias gradient is the upstream gradient itself.
    for (std::size_t i = 0; i < weighting.size(); ++i) {
        CHECK(grads.bias[i] == weighting[i]);
    }
}

TEST_CASE("relu_backward fixtures") {
    Tensor pos = testutil::random_tensor({12}, 61, 0.5f, 2.0f);
    Tensor up = testutil::random_tensor({12}, 62);
    Tensor g = vialnet::relu_backward(pos, up);
    for (std::size_t i = 0; i < g.size(); ++i) {
        CHECK(g[i] == up[i]);
    }

    Tensor mixed({4}, {-1.0f, 2.0f, -0.5f, 3.0f});
    Tensor up2({4}, {10.0f, 20.0f, 30.0f, 40.0f});
    Tensor g2 = vialnet::relu_backward(mixed, up2);
    CHECK(g2[0] == 0.0f);
    CHECK(g2[1] == 20.0f);
    CHECK(g2[2] == 0.0f);
    CHECK(g2[3] == 40.0f);

    CHECK_THROWS_AS(vialnet::relu_backward(Tensor({3}), Tensor({4})), vialnet::ShapeError);
}

TEST_CASE("flatten and unflatten round-trip") {
    Tensor t = testutil::random_tensor({4, 5, 2}, 71);
    Tensor flat = vialnet::flatten(t);
    REQUIRE(flat.shape() == vialnet::Shape{40});
    Tensor back = vialnet::unflatten(flat, {4, 5, 2});
    for (std::size_t i = 0; i < t.size(); ++i) {
        CHECK(back[i] == t[i]);
    }
    CHECK_THROWS_AS(vialnet::unflatten(flat, {3, 5, 2}), vialnet::ShapeError);
}

TEST_CASE("ops are deterministic") {
    Tensor input = testutil::random_tensor({10, 10, 3}, 81);
    Tensor kernels = testutil::random_tensor({3, 3, 3, 10}, 82);
    Tensor bias = testutil::random_tensor({10}, 83);
    Tensor a = vialnet::conv2d_valid(input, kernels, bias, 1);
    Tensor b = vialnet::conv2d_valid(input, kernels, bias, 1);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        REQUIRE(a[i] == b[i]);
    }
    CHECK(a.all_finite());
}
