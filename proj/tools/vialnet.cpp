#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include "vialnet/augment.hpp"
#include "vialnet/data.hpp"
#include "vialnet/eval.hpp"
#include "vialnet/interpret.hpp"
#include "vialnet/model.hpp"
#include "vialnet/optim.hpp"
#include "vialnet/png_io.hpp"

namespace fs = std::filesystem;
using namespace vialnet;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitValidation = 4;

int resolve_threads() {
    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) {
        hw = 1;
    }
    int threads = static_cast<int>(hw);
    if (const char* env = std::getenv("VIALNET_THREADS")) {
        const int cap = std::atoi(env);
        if (cap >= 1) {
            threads = std::min(threads, cap);
        }
    }
    return threads;
}

std::string padded_index(std::size_t i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%05zu", i);
    return buf;
}

void ensure_out_dir(const std::string& out) {
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) {
        throw ImageIoError("cannot create output directory: " + out);
    }
}

std::ofstream open_text(const fs::path& path) {
    std::ofstream f(path);
    if (!f) {
        throw ImageIoError("cannot open for writing: " + path.string());
    }
    return f;
}

struct SplitOpts {
    double test_fraction = 0.15;
    bool group_by_source = false;
};

SplitIndices make_split(const Dataset& data, const std::vector<int>& sources, const SplitOpts& opts,
                        std::uint64_t seed) {
    if (opts.group_by_source) {
        for (int s : sources) {
            if (s < 0) {
                throw std::invalid_argument(
                    "--group-by-source requires a manifest with the source column");
            }
        }
        return grouped_split(data, sources, opts.test_fraction, seed);
    }
    return stratified_split(data, opts.test_fraction, seed);
}

void write_test_reports(const Network& net, const Dataset& data, const std::vector<int>& test_idx,
                        const fs::path& out) {
    const Predictions preds = classify(net, data, test_idx);
    const ConfusionMatrix cm = confusion(preds.predicted, preds.truth, data.n_labels());
    {
        auto f = open_text(out / "confusion.csv");
        write_confusion_csv(f, cm);
    }
    auto summary = open_text(out / "summary.txt");
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", accuracy(cm));
    summary << "test_items: " << cm.total() << "\n";
    summary << "test_accuracy: " << buf << "\n";
    if (data.n_labels() == 2) {
        const MetricsReport m = binary_metrics(cm, 0);
        {
            auto f = open_text(out / "metrics.csv");
            write_metrics_csv(f, m);
        }
        std::vector<int> is_positive;
        is_positive.reserve(preds.truth.size());
        for (int t : preds.truth) {
            is_positive.push_back(t == 0 ? 1 : 0);  // class 0 = filled = positive
        }
        const RocCurve roc = roc_auc(preds.positive_score, is_positive);
        {
            auto f = open_text(out / "roc.csv");
            write_roc_csv(f, roc);
        }
        std::snprintf(buf, sizeof(buf), "%.9g", roc.auc);
        summary << "auc: " << buf << "\n";
    }
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

void cmd_synth(int per_class, int res, std::uint64_t seed, const std::string& out) {
    ensure_out_dir(out);
    const Dataset data = synth_generate(per_class, res, seed);
    std::vector<ManifestEntry> entries;
    for (std::size_t i = 0; i < data.items.size(); ++i) {
        const LabeledImage& item = data.items[i];
        const std::string name = "img_" + padded_index(i) + ".png";
        save_raster(item.image, (fs::path(out) / name).string());
        entries.push_back(ManifestEntry{name, item.fill, item.size, static_cast<int>(i)});
    }
    save_manifest(entries, (fs::path(out) / "manifest.txt").string());
    std::cerr << "synth: wrote " << data.items.size() << " images to " << out << "\n";
}

void cmd_augment(const std::string& manifest, int set_id, const std::string& pipeline_file,
                 int scenario_labels, std::uint64_t seed, const std::string& out) {
    ensure_out_dir(out);
    const Scenario scenario = scenario_from_labels(scenario_labels);
    std::vector<ManifestEntry> out_entries;

    if (set_id > 0) {
        // appendix validation set: class-uniform sources, 10 transforms each
        Dataset originals = load_dataset(manifest, scenario);
        Dataset valset = build_validation_set(originals, set_id, seed);
        for (std::size_t i = 0; i < valset.items.size(); ++i) {
            const LabeledImage& item = valset.items[i];
            const std::string name = "val" + std::to_string(set_id) + "_" + padded_index(i) + ".png";
            save_raster(item.image, (fs::path(out) / name).string());
            out_entries.push_back(
                ManifestEntry{name, item.fill, item.size, static_cast<int>(i / 10)});
        }
    } else {
        // training expansion: stream one source at a time
        const Pipeline pipe =
            pipeline_file.empty() ? training_pipeline() : [&] {
                std::ifstream f(pipeline_file);
                if (!f) {
                    throw ImageIoError("cannot open pipeline file: " + pipeline_file);
                }
                std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
                return parse_pipeline(text);
            }();
        const std::vector<ManifestEntry> sources = load_manifest(manifest);
        if (sources.empty()) {
            throw std::invalid_argument("manifest has no entries");
        }
        const fs::path base = fs::path(manifest).parent_path();
        std::size_t written = 0;
        for (std::size_t i = 0; i < sources.size(); ++i) {
            fs::path src_path(sources[i].path);
            if (src_path.is_relative()) {
                src_path = base / src_path;
            }
            const ImageU8 img = load_raster(src_path.string());
            auto emit = [&](const ImageU8& variant) {
                const std::string name = "aug_" + padded_index(written++) + ".png";
                save_raster(variant, (fs::path(out) / name).string());
                out_entries.push_back(
                    ManifestEntry{name, sources[i].fill, sources[i].size, static_cast<int>(i)});
            };
            emit(img);  // the original is part of the expanded set
            for (const ImageU8& variant : expand_source(img, pipe, seed, i)) {
                emit(variant);
            }
        }
    }
    save_manifest(out_entries, (fs::path(out) / "manifest.txt").string());
    std::cerr << "augment: wrote " << out_entries.size() << " images to " << out << "\n";
}

void cmd_train(const std::string& manifest, int scenario_labels, const TrainConfig& cfg,
               const SplitOpts& split_opts, std::uint64_t seed, const std::string& out) {
    ensure_out_dir(out);
    std::vector<int> sources;
    const Dataset data = load_dataset(manifest, scenario_from_labels(scenario_labels), &sources);
    const SplitIndices split = make_split(data, sources, split_opts, seed);
    std::cerr << "train: " << split.train.size() << " train / " << split.test.size()
              << " test items, " << cfg.replications << " replication(s)\n";

    TrainConfig run_cfg = cfg;
    run_cfg.on_epoch = [](int epoch, const EpochStats& s) {
        std::cerr << "  epoch " << epoch + 1 << ": train_loss " << s.train_loss << ", test_loss "
                  << s.test_loss << ", test_acc " << s.test_accuracy << "\n";
    };
    const ReplicatedTrainResult rep = train_replicated(data, split.train, split.test, run_cfg, seed);

    const fs::path out_dir(out);
    save_checkpoint(rep.best.network, (out_dir / "checkpoint.cnv3").string(),
                    CheckpointMeta{static_cast<std::uint32_t>(cfg.epochs), seed});
    {
        auto f = open_text(out_dir / "history.csv");
        write_history_csv(f, rep.best.run);
    }
    if (cfg.replications > 1) {
        for (std::size_t r = 0; r < rep.runs.size(); ++r) {
            auto f = open_text(out_dir / ("history_rep" + std::to_string(r) + ".csv"));
            write_history_csv(f, rep.runs[r]);
        }
    }
    write_test_reports(rep.best.network, data, split.test, out_dir);
    {
        auto f = std::ofstream(out_dir / "summary.txt", std::ios::app);
        f << "best_replication: " << rep.best_replication << "\n";
        f << "best_epoch: " << rep.best.run.best_epoch + 1 << "\n";
        f << "seed: " << seed << "\n";
    }
    std::cerr << "train: best test accuracy " << rep.best.run.best_test_accuracy << " (replication "
              << rep.best_replication << ")\n";
}

void cmd_crossval(const std::string& manifest, int scenario_labels, int k, const TrainConfig& cfg,
                  const SplitOpts& split_opts, std::uint64_t seed, const std::string& out) {
    ensure_out_dir(out);
    std::vector<int> sources;
    const Dataset data = load_dataset(manifest, scenario_from_labels(scenario_labels), &sources);
    const SplitIndices split = make_split(data, sources, split_opts, seed);
    const FoldPlan plan = kfold_plan(static_cast<int>(split.train.size()), k, seed);

    std::vector<double> fold_accuracies;
    for (int f = 0; f < plan.k; ++f) {
        std::vector<int> fold_train;
        for (int pos : fold_training_indices(plan, f)) {
            fold_train.push_back(split.train[static_cast<std::size_t>(pos)]);
        }
        std::vector<int> fold_val;
        for (int pos : plan.folds[static_cast<std::size_t>(f)]) {
            fold_val.push_back(split.train[static_cast<std::size_t>(pos)]);
        }
        TrainConfig fold_cfg = cfg;
        fold_cfg.replications = 1;
        const std::uint64_t fold_seed =
            Rng::keyed(seed, {0xF01Dull, static_cast<std::uint64_t>(f)}).next_u64();
        const TrainResult res = train(data, fold_train, fold_val, fold_cfg, fold_seed);
        fold_accuracies.push_back(res.run.best_test_accuracy);
        std::cerr << "crossval: fold " << f + 1 << "/" << k << " accuracy "
                  << res.run.best_test_accuracy << "\n";
    }
    auto f = open_text(fs::path(out) / "fold_table.csv");
    write_fold_table(f, fold_accuracies);
    std::cerr << "crossval: average accuracy " << fold_average(fold_accuracies) << "\n";
}

void cmd_eval(const std::string& checkpoint, const std::string& manifest, int scenario_labels,
              const SplitOpts& split_opts, const std::string& postval_manifest, std::uint64_t seed,
              const std::string& out) {
    ensure_out_dir(out);
    LoadedCheckpoint loaded = load_checkpoint(checkpoint);
    const Scenario scenario = scenario_from_labels(scenario_labels);
    if (loaded.network.n_labels() != label_count(scenario)) {
        throw std::invalid_argument("checkpoint has " + std::to_string(loaded.network.n_labels()) +
                                    " output labels but --scenario requests " +
                                    std::to_string(label_count(scenario)));
    }
    std::vector<int> sources;
    const Dataset data = load_dataset(manifest, scenario, &sources);
    const SplitIndices split = make_split(data, sources, split_opts, seed);
    write_test_reports(loaded.network, data, split.test, fs::path(out));

    if (!postval_manifest.empty()) {
        const Dataset originals = load_dataset(postval_manifest, scenario);
        std::vector<Dataset> sets;
        for (int s = 1; s <= 4; ++s) {
            sets.push_back(build_validation_set(originals, s, seed));
        }
        const std::vector<double> errors = post_validate(loaded.network, sets);
        auto f = open_text(fs::path(out) / "postval.csv");
        write_postval_csv(f, errors);
    }
    std::cerr << "eval: reports written to " << out << "\n";
}

void cmd_explain(const std::string& checkpoint, const std::vector<std::string>& images, int target,
                 int steps, const std::string& out) {
    ensure_out_dir(out);
    LoadedCheckpoint loaded = load_checkpoint(checkpoint);
    for (const std::string& path : images) {
        const ImageU8 raster = load_raster(path);
        const Tensor input = image_to_tensor(raster);
        const int cls = target >= 0 ? target : loaded.network.predict(input);

        const AttributionMap sal = saliency(loaded.network, input, cls);
        const AttributionMap ig =
            integrated_gradients(loaded.network, input, black_baseline(input), cls, steps);

        const std::string stem = fs::path(path).stem().string();
        save_raster(render_heatmap(sal), (fs::path(out) / (stem + "_saliency.png")).string());
        save_raster(render_heatmap(ig), (fs::path(out) / (stem + "_ig.png")).string());
        auto f = open_text(fs::path(out) / (stem + "_stats.txt"));
        write_attribution_stats(f, sal);
        f << "\n";
        write_attribution_stats(f, ig);
        std::cerr << "explain: " << stem << " -> class " << cls << "\n";
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ConvNet3_4 vial-content classification toolkit"};
    app.require_subcommand(1);
    app.fallthrough();  // --seed/--out may follow the subcommand name

    std::uint64_t seed = 1;
    std::string out = "out";
    app.add_option("--seed", seed, "random seed shared by all stages")->capture_default_str();
    app.add_option("--out", out, "output directory")->capture_default_str();

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic vial dataset + manifest");
    int per_class = 100;
    int res = 64;
    synth->add_option("--per-class", per_class, "images per (fill,size) class")->capture_default_str();
    synth->add_option("--res", res, "square image resolution")->capture_default_str();

    // augment
    auto* augment = app.add_subcommand("augment", "expand a manifest with the training pipeline or "
                                                  "build an appendix validation set");
    std::string manifest;
    int set_id = 0;
    std::string pipeline_file;
    int scenario_labels = 2;
    augment->add_option("--manifest", manifest, "source manifest")->required();
    augment->add_option("--set", set_id, "validation set id")->check(CLI::Range(1, 4));
    augment->add_option("--pipeline", pipeline_file, "custom pipeline spec file");
    augment->add_option("--scenario", scenario_labels, "output labels (2 or 4)")
        ->check(CLI::IsMember({2, 4}))
        ->capture_default_str();

    // shared training knobs
    TrainConfig tcfg;
    tcfg.threads = resolve_threads();
    SplitOpts split_opts;
    auto add_train_flags = [&](CLI::App* cmd) {
        cmd->add_option("--manifest", manifest, "dataset manifest")->required();
        cmd->add_option("--scenario", scenario_labels, "output labels (2 or 4)")
            ->check(CLI::IsMember({2, 4}))
            ->capture_default_str();
        cmd->add_option("--epochs", tcfg.epochs, "training epochs")->capture_default_str();
        cmd->add_option("--batch", tcfg.batch_size, "mini-batch size")->capture_default_str();
        cmd->add_option("--lr", tcfg.adam.lr, "learning rate")->capture_default_str();
        cmd->add_option("--wd", tcfg.adam.weight_decay, "decoupled weight decay")
            ->capture_default_str();
        cmd->add_option("--test-fraction", split_opts.test_fraction, "held-out test fraction")
            ->capture_default_str();
        cmd->add_flag("--group-by-source", split_opts.group_by_source,
                      "split by augmentation source instead of by item");
    };

    auto* train_cmd = app.add_subcommand("train", "split, train with replications, save the best "
                                                  "checkpoint and reports");
    add_train_flags(train_cmd);
    train_cmd->add_option("--replications", tcfg.replications, "independent training runs")
        ->capture_default_str();

    auto* crossval = app.add_subcommand("crossval", "k-fold cross-validation over the training split");
    add_train_flags(crossval);
    int k = 5;
    crossval->add_option("--k", k, "number of folds")->check(CLI::Range(2, 1000))->capture_default_str();

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint: confusion, metrics, ROC, "
                                                "post-validation");
    std::string checkpoint;
    std::string postval_manifest;
    eval_cmd->add_option("--checkpoint", checkpoint, "trained checkpoint")->required();
    eval_cmd->add_option("--manifest", manifest, "dataset manifest")->required();
    eval_cmd->add_option("--scenario", scenario_labels, "output labels (2 or 4)")
        ->check(CLI::IsMember({2, 4}))
        ->capture_default_str();
    eval_cmd->add_option("--test-fraction", split_opts.test_fraction, "held-out test fraction")
        ->capture_default_str();
    eval_cmd->add_flag("--group-by-source", split_opts.group_by_source,
                       "split by augmentation source instead of by item");
    eval_cmd->add_option("--postval-manifest", postval_manifest,
                         "originals manifest for the four post-validation sets");

    // explain
    auto* explain = app.add_subcommand("explain", "saliency and integrated-gradients heatmaps");
    std::vector<std::string> image_paths;
    int target = -1;
    int steps = 50;
    explain->add_option("--checkpoint", checkpoint, "trained checkpoint")->required();
    explain->add_option("--image", image_paths, "input image(s)")->required()->expected(-1);
    explain->add_option("--target", target, "attribution class (default: predicted)");
    explain->add_option("--steps", steps, "integration steps")->check(CLI::Range(1, 100000))
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (synth->parsed()) {
            cmd_synth(per_class, res, seed, out);
        } else if (augment->parsed()) {
            cmd_augment(manifest, set_id, pipeline_file, scenario_labels, seed, out);
        } else if (train_cmd->parsed()) {
            cmd_train(manifest, scenario_labels, tcfg, split_opts, seed, out);
        } else if (crossval->parsed()) {
            cmd_crossval(manifest, scenario_labels, k, tcfg, split_opts, seed, out);
        } else if (eval_cmd->parsed()) {
            cmd_eval(checkpoint, manifest, scenario_labels, split_opts, postval_manifest, seed, out);
        } else if (explain->parsed()) {
            cmd_explain(checkpoint, image_paths, target, steps, out);
        }
    } catch (const ImageIoError& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return kExitIo;
    } catch (const CheckpointError& e) {
        std::cerr << "checkpoint error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::logic_error& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
