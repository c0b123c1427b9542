#pragma once

#include <atomic>
#include <cmath>
#include <condition_variable>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <mutex>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "vialnet/dataset.hpp"
#include "vialnet/model.hpp"
#include "vialnet/rng.hpp"
#include "vialnet/tensor.hpp"

namespace vialnet {

/// -ln p[label], with probabilities clamped at 1e-12.
inline double cross_entropy(const Tensor& probs, int label) {
    if (probs.rank() != 1) {
        throw ShapeError("cross_entropy expects a rank-1 probability vector");
    }
    const int n = probs.dim(0);
    if (label < 0 || label >= n) {
        throw std::invalid_argument("cross_entropy label " + std::to_string(label) +
                                    " out of range for " + std::to_string(n) + " classes");
    }
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        const float p = probs[static_cast<std::size_t>(i)];
        if (!(p >= -1e-6f && p <= 1.0f + 1e-6f)) {
            throw std::invalid_argument("cross_entropy input is not a probability vector");
        }
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-3) {
        throw std::invalid_argument("cross_entropy input does not sum to 1");
    }
    const double p = std::max(static_cast<double>(probs[static_cast<std::size_t>(label)]), 1e-12);
    return -std::log(p);
}

// ---------------------------------------------------------------------------
// Adam with decoupled weight decay
// ---------------------------------------------------------------------------

struct AdamConfig {
    float lr = 1e-4f;
    float beta1 = 0.9f;
    float beta2 = 0.999f;
    float epsilon = 1e-8f;
    float weight_decay = 1e-2f;
};

/// Decoupled variant: theta <- theta * (1 - lr * wd) is applied before the
/// bias-corrected Adam delta, so wd = 0 reduces bitwise to plain Adam.
class Adam {
public:
    Adam(const std::vector<ParamRef>& params, AdamConfig cfg = {}) : cfg_(cfg) {
        m_.reserve(params.size());
        v_.reserve(params.size());
        for (const ParamRef& p : params) {
            m_.emplace_back(p.value->shape());
            v_.emplace_back(p.value->shape());
        }
    }

    const AdamConfig& config() const { return cfg_; }
    std::int64_t step_count() const { return t_; }

    void step(const std::vector<ParamRef>& params) {
        if (params.size() != m_.size()) {
            throw std::invalid_argument("Adam state does not match the parameter list");
        }
        ++t_;
        const double bc1 = 1.0 - std::pow(static_cast<double>(cfg_.beta1), static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(static_cast<double>(cfg_.beta2), static_cast<double>(t_));
        const float decay = 1.0f - cfg_.lr * cfg_.weight_decay;
        for (std::size_t i = 0; i < params.size(); ++i) {
            Tensor& theta = *params[i].value;
            const Tensor& g = *params[i].grad;
            if (!theta.same_shape(m_[i]) || !g.same_shape(m_[i])) {
                throw ShapeError("Adam state shape mismatch at " + params[i].name);
            }
            if (!g.all_finite()) {
                throw std::runtime_error("non-finite gradient in " + params[i].name);
            }
            float* th = theta.data();
            const float* gr = g.data();
            float* m = m_[i].data();
            float* v = v_[i].data();
            const float b1 = cfg_.beta1, b2 = cfg_.beta2;
            const float lr = cfg_.lr, eps = cfg_.epsilon;
            for (std::size_t k = 0; k < theta.size(); ++k) {
                if (cfg_.weight_decay != 0.0f) {
                    th[k] *= decay;
                }
                m[k] = b1 * m[k] + (1.0f - b1) * gr[k];
                v[k] = b2 * v[k] + (1.0f - b2) * gr[k] * gr[k];
                const float mhat = m[k] / static_cast<float>(bc1);
                const float vhat = v[k] / static_cast<float>(bc2);
                th[k] -= lr * mhat / (std::sqrt(vhat) + eps);
            }
        }
    }

    void step(Network& net) {
        step(net.params());
        net.mark_params_changed();
    }

private:
    AdamConfig cfg_;
    std::vector<Tensor> m_;
    std::vector<Tensor> v_;
    std::int64_t t_ = 0;
};

// ---------------------------------------------------------------------------
// Training driver
// ---------------------------------------------------------------------------

struct EpochStats {
    double train_loss = 0.0;
    double test_loss = 0.0;
    double test_accuracy = 0.0;
};

struct TrainConfig {
    int epochs = 50;
    int batch_size = 64;
    AdamConfig adam{};
    int replications = 10;
    int threads = 1;
    std::function<void(int epoch, const EpochStats&)> on_epoch;  // progress hook
};

struct TrainRun {
    std::uint64_t seed = 0;
    std::vector<EpochStats> history;
    int best_epoch = -1;  // 0-based epoch of the snapshot the run returned
    double best_test_accuracy = 0.0;
};

struct TrainResult {
    Network network;
    TrainRun run;
};

namespace detail {

struct Sample {
    Tensor image;
    int label;
};

inline std::vector<Sample> materialize(const Dataset& data, const std::vector<int>& indices) {
    std::vector<Sample> out;
    out.reserve(indices.size());
    for (int i : indices) {
        if (i < 0 || static_cast<std::size_t>(i) >= data.items.size()) {
            throw std::out_of_range("dataset index " + std::to_string(i) + " out of range");
        }
        const LabeledImage& item = data.items[static_cast<std::size_t>(i)];
        out.push_back(Sample{image_to_tensor(item.image), label_of(item, data.scenario)});
    }
    return out;
}

/// Mean loss and accuracy of the network over a sample list.
inline std::pair<double, double> evaluate(const Network& net, const std::vector<Sample>& samples,
                                          Workspace& ws) {
    double loss = 0.0;
    std::size_t correct = 0;
    for (const Sample& s : samples) {
        const ForwardResult r = net.forward(s.image, ws);
        loss += cross_entropy(r.probs, s.label);
        int best = 0;
        for (int i = 1; i < r.probs.dim(0); ++i) {
            if (r.probs[static_cast<std::size_t>(i)] > r.probs[static_cast<std::size_t>(best)]) {
                best = i;
            }
        }
        correct += best == s.label;
    }
    const double n = static_cast<double>(samples.size());
    return {loss / n, static_cast<double>(correct) / n};
}

/// Forward/backward over one mini-batch. Per-sample gradients are produced
/// in worker scratch stores and folded into `accum` strictly in sample-index
/// order, so results do not depend on the worker count.
inline double process_batch(const Network& net, const std::vector<Sample>& samples,
                            const std::vector<int>& order, std::size_t begin, std::size_t end,
                            GradStore& accum, std::vector<Workspace>& workspaces,
                            std::vector<GradStore>& scratch, int threads) {
    const std::size_t count = end - begin;
    std::atomic<std::size_t> next{0};
    std::size_t next_to_fold = 0;
    std::mutex fold_mutex;
    std::condition_variable fold_cv;
    double loss_sum = 0.0;
    std::exception_ptr failure;

    auto worker = [&](int tid) {
        Workspace& ws = workspaces[static_cast<std::size_t>(tid)];
        GradStore& local = scratch[static_cast<std::size_t>(tid)];
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) {
                break;
            }
            double loss = 0.0;
            bool ok = true;
            std::exception_ptr err;
            try {
                const Sample& s = samples[static_cast<std::size_t>(order[begin + i])];
                const ForwardResult r = net.forward(s.image, ws);
                loss = cross_entropy(r.probs, s.label);
                net.backward_sample(s.label, ws, &local, nullptr, /*accumulate=*/false);
            } catch (...) {
                err = std::current_exception();
                ok = false;
            }
            std::unique_lock<std::mutex> lk(fold_mutex);
            fold_cv.wait(lk, [&] { return next_to_fold == i; });
            if (ok && !failure) {
                for (std::size_t p = 0; p < accum.size(); ++p) {
                    float* a = accum[p].data();
                    const float* l = local[p].data();
                    for (std::size_t k = 0; k < accum[p].size(); ++k) {
                        a[k] += l[k];
                    }
                }
                loss_sum += loss;
            } else if (!failure) {
                failure = err;
            }
            ++next_to_fold;
            fold_cv.notify_all();
        }
    };

    const int n_workers = std::max(1, std::min<int>(threads, static_cast<int>(count)));
    if (n_workers == 1) {
        worker(0);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(n_workers));
        for (int t = 0; t < n_workers; ++t) {
            pool.emplace_back(worker, t);
        }
        for (std::thread& t : pool) {
            t.join();
        }
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
    return loss_sum;
}

}  // namespace detail

/// Trains a freshly initialized ConvNet3_4 on the train indices, evaluating
/// on the test indices after each epoch. Returns the network snapshot with
/// the best test accuracy.
inline TrainResult train(const Dataset& data, const std::vector<int>& train_indices,
                         const std::vector<int>& test_indices, const TrainConfig& cfg,
                         std::uint64_t seed) {
    if (data.items.empty() || train_indices.empty() || test_indices.empty()) {
        throw std::invalid_argument("train: dataset and index lists must be nonempty");
    }
    if (cfg.epochs < 1 || cfg.batch_size < 1) {
        throw std::invalid_argument("train: epochs and batch size must be >= 1");
    }
    const ImageU8& first = data.items[0].image;
    if (first.height != first.width) {
        throw std::invalid_argument("train: expects square input images");
    }

    const std::vector<detail::Sample> train_samples = detail::materialize(data, train_indices);
    const std::vector<detail::Sample> test_samples = detail::materialize(data, test_indices);

    Network net(convnet3_4_config(data.n_labels(), first.height), seed);
    Adam adam(net.params(), cfg.adam);

    const int threads = std::max(1, cfg.threads);
    std::vector<Workspace> workspaces(static_cast<std::size_t>(threads));
    std::vector<GradStore> scratch;
    scratch.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) {
        scratch.push_back(net.make_grad_store());
    }
    Workspace eval_ws;

    TrainRun run;
    run.seed = seed;
    std::vector<Tensor> best_params = net.snapshot_params();
    const std::size_t n = train_samples.size();
    std::vector<int> order(n);
    for (std::size_t i = 0; i < n; ++i) {
        order[i] = static_cast<int>(i);
    }

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng shuffle_rng = Rng::keyed(seed, {0xE90Cull, static_cast<std::uint64_t>(epoch)});
        shuffle_rng.shuffle(order);

        double epoch_loss = 0.0;
        for (std::size_t begin = 0; begin < n; begin += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t end = std::min(n, begin + static_cast<std::size_t>(cfg.batch_size));
            net.zero_grads();
            epoch_loss += detail::process_batch(net, train_samples, order, begin, end, net.grads(),
                                                workspaces, scratch, threads);
            // mean-over-batch gradient
            const float inv = 1.0f / static_cast<float>(end - begin);
            for (Tensor& g : net.grads()) {
                float* p = g.data();
                for (std::size_t k = 0; k < g.size(); ++k) {
                    p[k] *= inv;
                }
            }
            adam.step(net);
        }

        EpochStats stats;
        stats.train_loss = epoch_loss / static_cast<double>(n);
        const auto [test_loss, test_acc] = detail::evaluate(net, test_samples, eval_ws);
        stats.test_loss = test_loss;
        stats.test_accuracy = test_acc;
        run.history.push_back(stats);
        if (cfg.on_epoch) {
            cfg.on_epoch(epoch, stats);
        }

        if (run.best_epoch < 0 || test_acc > run.best_test_accuracy) {
            run.best_epoch = epoch;
            run.best_test_accuracy = test_acc;
            best_params = net.snapshot_params();
        }
    }

    net.restore_params(best_params);
    return TrainResult{std::move(net), std::move(run)};
}

struct ReplicatedTrainResult {
    TrainResult best;
    int best_replication = 0;
    std::vector<TrainRun> runs;
};

/// Repeats training `cfg.replications` times from independent initial
/// weights and keeps the replication with the best test accuracy.
inline ReplicatedTrainResult train_replicated(const Dataset& data,
                                              const std::vector<int>& train_indices,
                                              const std::vector<int>& test_indices,
                                              const TrainConfig& cfg, std::uint64_t seed) {
    if (cfg.replications < 1) {
        throw std::invalid_argument("replications must be >= 1");
    }
    std::optional<TrainResult> best;
    int best_replication = 0;
    std::vector<TrainRun> runs;
    for (int r = 0; r < cfg.replications; ++r) {
        const std::uint64_t rep_seed =
            cfg.replications == 1 ? seed : Rng::keyed(seed, {0x2E9ull, static_cast<std::uint64_t>(r)}).next_u64();
        TrainResult res = train(data, train_indices, test_indices, cfg, rep_seed);
        runs.push_back(res.run);
        if (!best || res.run.best_test_accuracy > best->run.best_test_accuracy) {
            best = std::move(res);
            best_replication = r;
        }
    }
    return ReplicatedTrainResult{std::move(*best), best_replication, std::move(runs)};
}

/// History file: one row per epoch, `epoch,train_loss,test_loss,test_acc`.
inline void write_history_csv(std::ostream& out, const TrainRun& run) {
    out << "epoch,train_loss,test_loss,test_acc\n";
    char buf[128];
    for (std::size_t e = 0; e < run.history.size(); ++e) {
        const EpochStats& s = run.history[e];
        std::snprintf(buf, sizeof(buf), "%zu,%.9g,%.9g,%.9g\n", e + 1, s.train_loss, s.test_loss,
                      s.test_accuracy);
        out << buf;
    }
}

}  // namespace vialnet
