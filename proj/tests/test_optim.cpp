#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>
#include <sstream>

#include "testutil.hpp"
#include "vialnet/data.hpp"
#include "vialnet/optim.hpp"

using namespace vialnet;
using Catch::Approx;

namespace {

std::vector<int> iota_indices(std::size_t n) {
    std::vector<int> v(n);
    for (std::size_t i = 0; i < n; ++i) {
        v[i] = static_cast<int>(i);
    }
    return v;
}

}  // namespace

TEST_CASE("cross_entropy fixtures") {
    CHECK(cross_entropy(Tensor({2}, {0.5f, 0.5f}), 0) == Approx(std::log(2.0)).epsilon(1e-6));
    CHECK(cross_entropy(Tensor({2}, {1.0f, 0.0f}), 0) == Approx(0.0).margin(1e-9));
    CHECK(cross_entropy(Tensor({4}, {0.25f, 0.25f, 0.25f, 0.25f}), 2) ==
          Approx(std::log(4.0)).epsilon(1e-6));
    // the clamp keeps zero probabilities finite
    CHECK(cross_entropy(Tensor({2}, {0.0f, 1.0f}), 0) == Approx(-std::log(1e-12)).epsilon(1e-6));

    CHECK_THROWS_AS(cross_entropy(Tensor({2}, {0.5f, 0.5f}), 2), std::invalid_argument);
    CHECK_THROWS_AS(cross_entropy(Tensor({2}, {0.5f, 0.5f}), -1), std::invalid_argument);
    CHECK_THROWS_AS(cross_entropy(Tensor({2}, {0.9f, 0.9f}), 0), std::invalid_argument);
}

TEST_CASE("adam analytic first step") {
    Tensor theta({1}, {0.0f});
    Tensor grad({1}, {1.0f});
    std::vector<ParamRef> refs = {{"scalar", &theta, &grad}};
    AdamConfig cfg;
    cfg.lr = 1e-4f;
    cfg.weight_decay = 0.0f;
    Adam adam(refs, cfg);
    adam.step(refs);
    // bias-corrected m^ = g, v^ = g^2, update = -lr * g / (|g| + eps)
    CHECK(theta[0] == Approx(-1e-4).epsilon(1e-3));
}

TEST_CASE("adam zero-gradient behaviour") {
    SECTION("no decay: parameters unchanged") {
        Tensor theta({3}, {1.0f, -2.0f, 0.5f});
        Tensor grad({3});
        std::vector<ParamRef> refs = {{"p", &theta, &grad}};
        AdamConfig cfg;
        cfg.weight_decay = 0.0f;
        Adam adam(refs, cfg);
        adam.step(refs);
        adam.step(refs);
        CHECK(theta[0] == 1.0f);
        CHECK(theta[1] == -2.0f);
        CHECK(theta[2] == 0.5f);
    }
    SECTION("decay only: shrink by (1 - lr*wd) each step") {
        Tensor theta({1}, {1.0f});
        Tensor grad({1});
        std::vector<ParamRef> refs = {{"p", &theta, &grad}};
        AdamConfig cfg;
        cfg.lr = 1e-4f;
        cfg.weight_decay = 1e-2f;
        Adam adam(refs, cfg);
        const float factor = 1.0f - cfg.lr * cfg.weight_decay;
        float expect = 1.0f;
        for (int s = 0; s < 5; ++s) {
            adam.step(refs);
            expect *= factor;
            CHECK(theta[0] == Approx(expect).epsilon(1e-7));
        }
    }
}

TEST_CASE("decoupled decay with wd=0 is bitwise plain Adam") {
    Tensor theta({16});
    Tensor grad({16});
    Rng rng(5);
    for (std::size_t i = 0; i < 16; ++i) {
        theta[i] = rng.uniform(-1.0f, 1.0f);
    }
    Tensor reference = theta;

    std::vector<ParamRef> refs = {{"p", &theta, &grad}};
    AdamConfig cfg;
    cfg.lr = 1e-3f;
    cfg.weight_decay = 0.0f;
    Adam adam(refs, cfg);

    // independent plain-Adam reference with the same operation order
    std::vector<float> m(16, 0.0f), v(16, 0.0f);
    for (int step = 1; step <= 20; ++step) {
        Rng grng(100 + static_cast<std::uint64_t>(step));
        for (std::size_t i = 0; i < 16; ++i) {
            grad[i] = grng.uniform(-2.0f, 2.0f);
        }
        adam.step(refs);
        const double bc1 = 1.0 - std::pow(0.9, step);
        const double bc2 = 1.0 - std::pow(0.999, step);
        for (std::size_t i = 0; i < 16; ++i) {
            m[i] = 0.9f * m[i] + 0.1f * grad[i];
            v[i] = 0.999f * v[i] + 0.001f * grad[i] * grad[i];
            const float mhat = m[i] / static_cast<float>(bc1);
            const float vhat = v[i] / static_cast<float>(bc2);
            reference[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.epsilon);
        }
        for (std::size_t i = 0; i < 16; ++i) {
            REQUIRE(theta[i] == reference[i]);
        }
    }
}

TEST_CASE("adam rejects non-finite gradients naming the layer") {
    Network net(convnet3_4_config(2, 16), 3);
    Adam adam(net.params());
    auto params = net.params();
    (*params[2].grad)[0] = std::numeric_limits<float>::infinity();  // conv2.kernels
    try {
        adam.step(net);
        FAIL("expected a runtime_error");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("conv2.kernels") != std::string::npos);
    }
}

TEST_CASE("shuffle is a permutation") {
    for (int n : {1, 2, 7, 64, 257}) {
        std::vector<int> v = iota_indices(static_cast<std::size_t>(n));
        Rng rng(static_cast<std::uint64_t>(n) * 17);
        rng.shuffle(v);
        std::set<int> seen(v.begin(), v.end());
        CHECK(seen.size() == static_cast<std::size_t>(n));
        CHECK(*seen.begin() == 0);
        CHECK(*seen.rbegin() == n - 1);
    }
}

TEST_CASE("one adam step on a fixed batch strictly decreases that batch's loss") {
    Dataset data = synth_generate(4, 32, 31);  // 16 images
    data.scenario = Scenario::two_label;
    Network net(convnet3_4_config(2, 32), 8);
    Adam adam(net.params(), AdamConfig{1e-4f, 0.9f, 0.999f, 1e-8f, 1e-2f});

    std::vector<Tensor> images;
    std::vector<int> labels;
    for (const LabeledImage& item : data.items) {
        images.push_back(image_to_tensor(item.image));
        labels.push_back(label_of(item, data.scenario));
    }
    auto batch_loss = [&]() {
        double total = 0.0;
        for (std::size_t i = 0; i < images.size(); ++i) {
            total += cross_entropy(net.forward(images[i]).probs, labels[i]);
        }
        return total / static_cast<double>(images.size());
    };

    const double before = batch_loss();
    net.zero_grads();
    for (std::size_t i = 0; i < images.size(); ++i) {
        net.forward(images[i]);
        net.backward(labels[i]);
    }
    for (Tensor& g : net.grads()) {
        for (std::size_t k = 0; k < g.size(); ++k) {
            g[k] /= static_cast<float>(images.size());
        }
    }
    adam.step(net);
    const double after = batch_loss();
    CHECK(after < before);
}

TEST_CASE("repeated-batch loss is monotone non-increasing after warmup") {
    Dataset data = synth_generate(4, 32, 77);
    data.scenario = Scenario::two_label;

    auto run_steps = [&](float lr, int steps) {
        Network net(convnet3_4_config(2, 32), 9);
        AdamConfig acfg;
        acfg.lr = lr;
        Adam adam(net.params(), acfg);
        std::vector<Tensor> images;
        std::vector<int> labels;
        for (const LabeledImage& item : data.items) {
            images.push_back(image_to_tensor(item.image));
            labels.push_back(label_of(item, data.scenario));
        }
        std::vector<double> losses;
        for (int s = 0; s < steps; ++s) {
            net.zero_grads();
            double loss = 0.0;
            for (std::size_t i = 0; i < images.size(); ++i) {
                loss += cross_entropy(net.forward(images[i]).probs, labels[i]);
                net.backward(labels[i]);
            }
            for (Tensor& g : net.grads()) {
                for (std::size_t k = 0; k < g.size(); ++k) {
                    g[k] /= static_cast<float>(images.size());
                }
            }
            adam.step(net);
            losses.push_back(loss / static_cast<double>(images.size()));
        }
        return losses;
    };

    SECTION("strict descent at the default rate 1e-4") {
        const std::vector<double> losses = run_steps(1e-4f, 60);
        int increases = 0;
        for (std::size_t s = 5; s + 1 < losses.size(); ++s) {
            increases += losses[s + 1] > losses[s];
        }
        CHECK(increases <= 3);  // 5% of 60 steps
        CHECK(losses.back() < losses.front());
    }
    SECTION("bounded wobble at 1e-3") {
        // Once the batch is solved (loss < 1e-3) the optimizer bounces in a
        // flat basin; only regressions back above that floor count.
        const std::vector<double> losses = run_steps(1e-3f, 60);
        int increases = 0;
        for (std::size_t s = 5; s + 1 < losses.size(); ++s) {
            increases += losses[s + 1] > losses[s] && losses[s + 1] > 1e-3;
        }
        CHECK(increases <= 3);
        CHECK(losses.back() < losses.front());
        CHECK(losses.back() < 1e-3);
    }
}

TEST_CASE("train runs epochs, records history, returns best network") {
    Dataset data = synth_generate(8, 32, 13);
    data.scenario = Scenario::two_label;
    SplitIndices split = stratified_split(data, 0.25, 4);
    TrainConfig cfg;
    cfg.epochs = 3;
    cfg.batch_size = 8;
    cfg.replications = 1;

    TrainResult res = train(data, split.train, split.test, cfg, 42);
    REQUIRE(res.run.history.size() == 3);
    double best = 0.0;
    for (const EpochStats& s : res.run.history) {
        CHECK(s.train_loss > 0.0);
        CHECK(s.test_accuracy >= 0.0);
        CHECK(s.test_accuracy <= 1.0);
        best = std::max(best, s.test_accuracy);
    }
    CHECK(res.run.best_test_accuracy == best);
    CHECK(res.run.best_epoch >= 0);

    // the returned network reproduces the recorded best accuracy
    std::size_t correct = 0;
    for (int i : split.test) {
        const LabeledImage& item = data.items[static_cast<std::size_t>(i)];
        correct += res.network.predict(image_to_tensor(item.image)) == label_of(item, data.scenario);
    }
    CHECK(static_cast<double>(correct) / static_cast<double>(split.test.size()) ==
          Approx(res.run.best_test_accuracy).margin(1e-12));

    SECTION("identical seeds give identical loss histories") {
        TrainResult again = train(data, split.train, split.test, cfg, 42);
        REQUIRE(again.run.history.size() == res.run.history.size());
        for (std::size_t e = 0; e < res.run.history.size(); ++e) {
            CHECK(again.run.history[e].train_loss == res.run.history[e].train_loss);
            CHECK(again.run.history[e].test_loss == res.run.history[e].test_loss);
            CHECK(again.run.history[e].test_accuracy == res.run.history[e].test_accuracy);
        }
    }
    SECTION("worker count does not change the numbers") {
        TrainConfig threaded = cfg;
        threaded.threads = 3;
        TrainResult par = train(data, split.train, split.test, threaded, 42);
        for (std::size_t e = 0; e < res.run.history.size(); ++e) {
            CHECK(par.run.history[e].train_loss == res.run.history[e].train_loss);
            CHECK(par.run.history[e].test_accuracy == res.run.history[e].test_accuracy);
        }
    }
    SECTION("input validation") {
        CHECK_THROWS_AS(train(data, {}, split.test, cfg, 1), std::invalid_argument);
        CHECK_THROWS_AS(train(Dataset{}, split.train, split.test, cfg, 1), std::invalid_argument);
    }
}

TEST_CASE("replications run independent seeds and keep the best") {
    Dataset data = synth_generate(6, 32, 17);
    data.scenario = Scenario::two_label;
    SplitIndices split = stratified_split(data, 0.25, 5);
    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.batch_size = 8;
    cfg.replications = 3;

    ReplicatedTrainResult rep = train_replicated(data, split.train, split.test, cfg, 7);
    REQUIRE(rep.runs.size() == 3);
    // distinct seeds -> distinct initializations -> (almost surely) distinct histories
    CHECK((rep.runs[0].history[0].train_loss != rep.runs[1].history[0].train_loss ||
           rep.runs[1].history[0].train_loss != rep.runs[2].history[0].train_loss));
    double best = 0.0;
    for (const TrainRun& r : rep.runs) {
        best = std::max(best, r.best_test_accuracy);
    }
    CHECK(rep.best.run.best_test_accuracy == best);
    CHECK(rep.runs[static_cast<std::size_t>(rep.best_replication)].best_test_accuracy == best);
}

TEST_CASE("history csv format") {
    TrainRun run;
    run.history.push_back(EpochStats{0.5, 0.75, 0.25});
    run.history.push_back(EpochStats{0.25, 0.5, 0.875});
    std::ostringstream os;
    write_history_csv(os, run);
    CHECK(os.str() == "epoch,train_loss,test_loss,test_acc\n1,0.5,0.75,0.25\n2,0.25,0.5,0.875\n");
}
