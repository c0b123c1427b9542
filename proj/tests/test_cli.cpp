#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "vialnet/data.hpp"
#include "vialnet/model.hpp"

namespace fs = std::filesystem;

namespace {

std::string binary_path() {
    const char* env = std::getenv("VIALNET_BIN");
    REQUIRE(env != nullptr);
    return env;
}

fs::path work_dir() {
    auto dir = fs::temp_directory_path() / "vialnet_cli_test";
    return dir;
}

int run(const std::string& args) {
    const std::string cmd = binary_path() + " " + args + " 2>/dev/null";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::vector<char> slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    REQUIRE(f.good());
    return std::vector<char>((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

std::map<std::string, std::string> read_summary(const fs::path& p) {
    std::map<std::string, std::string> kv;
    std::ifstream f(p);
    std::string line;
    while (std::getline(f, line)) {
        const auto colon = line.find(": ");
        if (colon != std::string::npos) {
            kv[line.substr(0, colon)] = line.substr(colon + 2);
        }
    }
    return kv;
}

/// Recursive byte comparison of two output trees.
bool trees_identical(const fs::path& a, const fs::path& b) {
    std::vector<std::string> names_a, names_b;
    for (const auto& e : fs::recursive_directory_iterator(a)) {
        if (e.is_regular_file()) {
            names_a.push_back(fs::relative(e.path(), a).string());
        }
    }
    for (const auto& e : fs::recursive_directory_iterator(b)) {
        if (e.is_regular_file()) {
            names_b.push_back(fs::relative(e.path(), b).string());
        }
    }
    std::sort(names_a.begin(), names_a.end());
    std::sort(names_b.begin(), names_b.end());
    if (names_a != names_b) {
        return false;
    }
    for (const std::string& name : names_a) {
        if (slurp(a / name) != slurp(b / name)) {
            return false;
        }
    }
    return true;
}

struct Fixture {
    fs::path root;
    fs::path synth_dir;

    Fixture() {
        root = work_dir();
        fs::remove_all(root);
        fs::create_directories(root);
        synth_dir = root / "synth";
        REQUIRE(run("synth --per-class 12 --res 32 --seed 7 --out " + synth_dir.string()) == 0);
    }
};

}  // namespace

TEST_CASE("synth command writes images and a manifest") {
    Fixture fx;
    CHECK(fs::exists(fx.synth_dir / "manifest.txt"));
    std::size_t pngs = 0;
    for (const auto& e : fs::directory_iterator(fx.synth_dir)) {
        pngs += e.path().extension() == ".png";
    }
    CHECK(pngs == 48);  // 12 per class x 4 classes

    SECTION("rerun with identical flags is byte-identical") {
        const fs::path again = fx.root / "synth_again";
        REQUIRE(run("synth --per-class 12 --res 32 --seed 7 --out " + again.string()) == 0);
        CHECK(trees_identical(fx.synth_dir, again));
    }
    SECTION("different seed changes the bytes") {
        const fs::path other = fx.root / "synth_other";
        REQUIRE(run("synth --per-class 12 --res 32 --seed 8 --out " + other.string()) == 0);
        CHECK_FALSE(trees_identical(fx.synth_dir, other));
    }
    SECTION("below-minimum resolution is a validation error") {
        CHECK(run("synth --per-class 4 --res 16 --out " + (fx.root / "too_small").string()) == 4);
    }
}

TEST_CASE("augment command expands manifests") {
    Fixture fx;
    SECTION("training pipeline yields 23x the sources") {
        const fs::path out = fx.root / "aug";
        REQUIRE(run("augment --manifest " + (fx.synth_dir / "manifest.txt").string() + " --seed 5 --out " +
                    out.string()) == 0);
        const auto entries = vialnet::load_manifest((out / "manifest.txt").string());
        CHECK(entries.size() == 48 * 23);
        // every source id appears exactly 23 times
        std::map<int, int> per_source;
        for (const auto& e : entries) {
            ++per_source[e.source];
        }
        CHECK(per_source.size() == 48);
        for (const auto& [src, count] : per_source) {
            CHECK(count == 23);
        }
    }
    SECTION("appendix sets map 20 sources to 200 images") {
        for (int set : {1, 4}) {
            const fs::path out = fx.root / ("val" + std::to_string(set));
            REQUIRE(run("augment --manifest " + (fx.synth_dir / "manifest.txt").string() + " --set " +
                        std::to_string(set) + " --scenario 4 --seed 5 --out " + out.string()) == 0);
            CHECK(vialnet::load_manifest((out / "manifest.txt").string()).size() == 200);
        }
    }
    SECTION("custom pipeline file drives the expansion") {
        const fs::path pipe = fx.root / "pipe.txt";
        std::ofstream(pipe) << "invert\nhflip\nrotate 10 20 + vflip\n";
        const fs::path out = fx.root / "aug_custom";
        REQUIRE(run("augment --manifest " + (fx.synth_dir / "manifest.txt").string() +
                    " --pipeline " + pipe.string() + " --seed 5 --out " + out.string()) == 0);
        CHECK(vialnet::load_manifest((out / "manifest.txt").string()).size() == 48 * 4);
    }
    SECTION("unknown set id is a usage error") {
        CHECK(run("augment --manifest " + (fx.synth_dir / "manifest.txt").string() +
                  " --set 9 --out " + (fx.root / "x").string()) == 2);
    }
    SECTION("missing manifest is an I/O error") {
        CHECK(run("augment --manifest " + (fx.root / "nope.txt").string() + " --out " +
                  (fx.root / "x").string()) == 3);
    }
}

TEST_CASE("train, eval and explain round trip") {
    Fixture fx;
    const fs::path train_out = fx.root / "train";
    REQUIRE(run("train --manifest " + (fx.synth_dir / "manifest.txt").string() +
                " --scenario 2 --epochs 2 --batch 16 --replications 1 --seed 11 --out " +
                train_out.string()) == 0);
    REQUIRE(fs::exists(train_out / "checkpoint.cnv3"));
    REQUIRE(fs::exists(train_out / "history.csv"));
    REQUIRE(fs::exists(train_out / "confusion.csv"));
    REQUIRE(fs::exists(train_out / "roc.csv"));

    SECTION("history rows match the epoch count") {
        std::ifstream f(train_out / "history.csv");
        std::string line;
        int rows = 0;
        while (std::getline(f, line)) {
            ++rows;
        }
        CHECK(rows == 3);  // header + 2 epochs
    }

    SECTION("eval reproduces the train-time test accuracy") {
        const fs::path eval_out = fx.root / "eval";
        REQUIRE(run("eval --checkpoint " + (train_out / "checkpoint.cnv3").string() + " --manifest " +
                    (fx.synth_dir / "manifest.txt").string() + " --scenario 2 --seed 11 --out " +
                    eval_out.string()) == 0);
        const auto train_summary = read_summary(train_out / "summary.txt");
        const auto eval_summary = read_summary(eval_out / "summary.txt");
        REQUIRE(train_summary.count("test_accuracy"));
        REQUIRE(eval_summary.count("test_accuracy"));
        const double a = std::stod(train_summary.at("test_accuracy"));
        const double b = std::stod(eval_summary.at("test_accuracy"));
        CHECK(std::abs(a - b) < 1e-6);
    }

    SECTION("checkpoint/scenario mismatch is a validation error") {
        CHECK(run("eval --checkpoint " + (train_out / "checkpoint.cnv3").string() + " --manifest " +
                  (fx.synth_dir / "manifest.txt").string() + " --scenario 4 --seed 11 --out " +
                  (fx.root / "bad_eval").string()) == 4);
    }

    SECTION("explain emits heatmaps and stats") {
        const fs::path ex_out = fx.root / "explain";
        REQUIRE(run("explain --checkpoint " + (train_out / "checkpoint.cnv3").string() + " --image " +
                    (fx.synth_dir / "img_00000.png").string() + " --steps 8 --out " +
                    ex_out.string()) == 0);
        CHECK(fs::exists(ex_out / "img_00000_saliency.png"));
        CHECK(fs::exists(ex_out / "img_00000_ig.png"));
        CHECK(fs::exists(ex_out / "img_00000_stats.txt"));
        const auto png = vialnet::load_raster((ex_out / "img_00000_saliency.png").string());
        CHECK(png.width == 32);
        CHECK(png.height == 32);
    }

    SECTION("train rerun with identical flags is byte-identical") {
        const fs::path again = fx.root / "train_again";
        REQUIRE(run("train --manifest " + (fx.synth_dir / "manifest.txt").string() +
                    " --scenario 2 --epochs 2 --batch 16 --replications 1 --seed 11 --out " +
                    again.string()) == 0);
        CHECK(trees_identical(train_out, again));
    }
}

TEST_CASE("crossval command emits the fold table") {
    Fixture fx;
    const fs::path out = fx.root / "cv";
    REQUIRE(run("crossval --manifest " + (fx.synth_dir / "manifest.txt").string() +
                " --scenario 2 --epochs 1 --batch 16 --k 3 --seed 5 --out " + out.string()) == 0);
    std::ifstream f(out / "fold_table.csv");
    std::string line;
    std::vector<std::string> lines;
    while (std::getline(f, line)) {
        lines.push_back(line);
    }
    REQUIRE(lines.size() == 6);  // header + 3 folds + average + average_error
    CHECK(lines[0] == "fold,accuracy");
    CHECK(lines[4].rfind("average,", 0) == 0);

    SECTION("k=1 is a usage error") {
        CHECK(run("crossval --manifest " + (fx.synth_dir / "manifest.txt").string() +
                  " --scenario 2 --k 1 --out " + (fx.root / "cv_bad").string()) == 2);
    }
}

TEST_CASE("group-by-source split keeps augmented variants together") {
    Fixture fx;
    const fs::path aug = fx.root / "aug_grouped";
    REQUIRE(run("augment --manifest " + (fx.synth_dir / "manifest.txt").string() + " --seed 5 --out " +
                aug.string()) == 0);
    const fs::path out = fx.root / "train_grouped";
    REQUIRE(run("train --manifest " + (aug / "manifest.txt").string() +
                " --scenario 2 --epochs 1 --batch 32 --replications 1 --group-by-source --seed 3 "
                "--out " +
                out.string()) == 0);
    CHECK(fs::exists(out / "checkpoint.cnv3"));
}
