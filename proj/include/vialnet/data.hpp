#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "vialnet/dataset.hpp"
#include "vialnet/image.hpp"
#include "vialnet/png_io.hpp"
#include "vialnet/rng.hpp"

namespace vialnet {

// ---------------------------------------------------------------------------
// Stratified split and k-fold partitioning
// ---------------------------------------------------------------------------

struct SplitIndices {
    std::vector<int> train;
    std::vector<int> test;
};

namespace detail {

/// Largest-remainder apportionment of round(fraction * total) test slots over
/// the class sizes, clamped so no class loses its train or test side.
inline std::vector<int> test_counts_per_class(const std::vector<std::size_t>& class_sizes,
                                              double fraction) {
    const std::size_t k = class_sizes.size();
    std::size_t total = 0;
    for (std::size_t n : class_sizes) {
        total += n;
    }
    const int want = static_cast<int>(std::lround(fraction * static_cast<double>(total)));

    std::vector<int> counts(k);
    std::vector<std::pair<double, std::size_t>> remainders(k);
    int assigned = 0;
    for (std::size_t c = 0; c < k; ++c) {
        const double quota = fraction * static_cast<double>(class_sizes[c]);
        counts[c] = static_cast<int>(std::floor(quota));
        remainders[c] = {quota - std::floor(quota), c};
        assigned += counts[c];
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t r = 0; assigned < want && r < k; ++r) {
        ++counts[remainders[r].second];
        ++assigned;
    }
    for (std::size_t c = 0; c < k; ++c) {
        counts[c] = std::clamp(counts[c], 1, static_cast<int>(class_sizes[c]) - 1);
    }
    return counts;
}

}  // namespace detail

/// Stratified train/test split: each class is split at `test_fraction`
/// (rounded, but never emptying either side). Item order within the returned
/// index lists is ascending.
inline SplitIndices stratified_split(const Dataset& dataset, double test_fraction, std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw std::invalid_argument("test_fraction must be in (0,1)");
    }
    const int n_labels = dataset.n_labels();
    std::vector<std::vector<int>> by_class(static_cast<std::size_t>(n_labels));
    for (std::size_t i = 0; i < dataset.items.size(); ++i) {
        by_class[static_cast<std::size_t>(label_of(dataset.items[i], dataset.scenario))].push_back(
            static_cast<int>(i));
    }
    std::vector<std::size_t> class_sizes;
    for (const auto& pool : by_class) {
        if (pool.size() < 2) {
            throw std::invalid_argument("every class needs at least 2 items to split");
        }
        class_sizes.push_back(pool.size());
    }
    const std::vector<int> test_counts = detail::test_counts_per_class(class_sizes, test_fraction);

    SplitIndices out;
    for (int c = 0; c < n_labels; ++c) {
        auto& pool = by_class[static_cast<std::size_t>(c)];
        Rng rng = Rng::keyed(seed, {0x5B117ull, static_cast<std::uint64_t>(c)});
        rng.shuffle(pool);
        const int n_test = test_counts[static_cast<std::size_t>(c)];
        out.test.insert(out.test.end(), pool.begin(), pool.begin() + n_test);
        out.train.insert(out.train.end(), pool.begin() + n_test, pool.end());
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

/// Split that keeps all items sharing a group id (e.g. augmentation source)
/// on the same side, stratified over groups per class.
inline SplitIndices grouped_split(const Dataset& dataset, const std::vector<int>& groups,
                                  double test_fraction, std::uint64_t seed) {
    if (groups.size() != dataset.items.size()) {
        throw std::invalid_argument("grouped_split: group list length does not match dataset");
    }
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw std::invalid_argument("test_fraction must be in (0,1)");
    }
    const int n_labels = dataset.n_labels();
    // Group -> (label, item indices). A group inherits the label of its items.
    std::vector<std::vector<int>> group_items;
    std::vector<int> group_label;
    std::vector<int> id_of_group;
    {
        std::vector<std::pair<int, int>> remap;  // (raw id, dense id)
        for (std::size_t i = 0; i < dataset.items.size(); ++i) {
            const int raw = groups[i];
            int dense = -1;
            for (const auto& [r, d] : remap) {
                if (r == raw) {
                    dense = d;
                    break;
                }
            }
            if (dense < 0) {
                dense = static_cast<int>(group_items.size());
                remap.emplace_back(raw, dense);
                group_items.emplace_back();
                group_label.push_back(label_of(dataset.items[i], dataset.scenario));
                id_of_group.push_back(raw);
            }
            group_items[static_cast<std::size_t>(dense)].push_back(static_cast<int>(i));
        }
    }
    std::vector<std::vector<int>> by_class(static_cast<std::size_t>(n_labels));
    for (std::size_t g = 0; g < group_items.size(); ++g) {
        by_class[static_cast<std::size_t>(group_label[g])].push_back(static_cast<int>(g));
    }
    std::vector<std::size_t> class_sizes;
    for (const auto& pool : by_class) {
        if (pool.size() < 2) {
            throw std::invalid_argument("every class needs at least 2 groups to split");
        }
        class_sizes.push_back(pool.size());
    }
    const std::vector<int> test_counts = detail::test_counts_per_class(class_sizes, test_fraction);

    SplitIndices out;
    for (int c = 0; c < n_labels; ++c) {
        auto& pool = by_class[static_cast<std::size_t>(c)];
        Rng rng = Rng::keyed(seed, {0x6B117ull, static_cast<std::uint64_t>(c)});
        rng.shuffle(pool);
        const int n_test = test_counts[static_cast<std::size_t>(c)];
        for (std::size_t p = 0; p < pool.size(); ++p) {
            auto& side = p < static_cast<std::size_t>(n_test) ? out.test : out.train;
            const auto& items = group_items[static_cast<std::size_t>(pool[p])];
            side.insert(side.end(), items.begin(), items.end());
        }
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

struct FoldPlan {
    int k = 0;
    std::vector<std::vector<int>> folds;  // disjoint, covering, sizes within 1
};

/// Partitions item positions 0..n-1 into k shuffled, size-balanced folds.
inline FoldPlan kfold_plan(int n, int k, std::uint64_t seed) {
    if (k < 2) {
        throw std::invalid_argument("kfold requires k >= 2");
    }
    if (n < k) {
        throw std::invalid_argument("kfold requires at least k items, got " + std::to_string(n));
    }
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        order[static_cast<std::size_t>(i)] = i;
    }
    Rng rng = Rng::keyed(seed, {0xF01Dull});
    rng.shuffle(order);

    FoldPlan plan;
    plan.k = k;
    plan.folds.resize(static_cast<std::size_t>(k));
    const int base = n / k;
    const int extra = n % k;  // first `extra` folds get one more item
    std::size_t pos = 0;
    for (int f = 0; f < k; ++f) {
        const int size = base + (f < extra ? 1 : 0);
        auto& fold = plan.folds[static_cast<std::size_t>(f)];
        fold.assign(order.begin() + static_cast<std::ptrdiff_t>(pos),
                    order.begin() + static_cast<std::ptrdiff_t>(pos + static_cast<std::size_t>(size)));
        std::sort(fold.begin(), fold.end());
        pos += static_cast<std::size_t>(size);
    }
    return plan;
}

inline FoldPlan kfold(const Dataset& train, int k, std::uint64_t seed) {
    return kfold_plan(static_cast<int>(train.items.size()), k, seed);
}

/// Training positions for fold `i`: everything not in the held-out fold.
inline std::vector<int> fold_training_indices(const FoldPlan& plan, int fold) {
    std::vector<int> out;
    for (int f = 0; f < plan.k; ++f) {
        if (f == fold) {
            continue;
        }
        const auto& fv = plan.folds[static_cast<std::size_t>(f)];
        out.insert(out.end(), fv.begin(), fv.end());
    }
    std::sort(out.begin(), out.end());
    return out;
}

// ---------------------------------------------------------------------------
// Synthetic vial imagery
// ---------------------------------------------------------------------------

/// Scene parameters for one synthetic top-view vial image. Geometry is
/// sampled from (seed, size class, index) only, so the filled and empty
/// renders of the same scene differ exactly inside the droplet disk.
struct VialScene {
    int res = 64;
    bool large = true;

    float bg_level = 20.0f;
    float grad_amp = 0.0f;
    float grad_dx = 1.0f;
    float grad_dy = 0.0f;

    float cx = 32.0f;
    float cy = 32.0f;
    float ring_radius = 20.0f;
    float ring_thickness = 3.0f;
    float ring_intensity = 220.0f;
    float interior_boost = 10.0f;

    float drop_cx = 32.0f;
    float drop_cy = 32.0f;
    float drop_radius = 6.0f;
    float drop_intensity = 150.0f;

    bool distractor = false;
    float distractor_cx = 32.0f;
    float distractor_cy = 56.0f;
    float distractor_radius = 5.0f;

    std::uint64_t noise_key = 0;

    static VialScene sample(std::uint64_t seed, VialSize size, int index, int res) {
        Rng rng = Rng::keyed(seed, {0x5CEEull, size == VialSize::large ? 1ull : 2ull,
                                    static_cast<std::uint64_t>(index)});
        VialScene s;
        s.res = res;
        s.large = size == VialSize::large;
        const float r = static_cast<float>(res);

        s.bg_level = rng.uniform(16.0f, 26.0f);
        s.grad_amp = rng.uniform(-10.0f, 10.0f);
        const float phi = rng.uniform(0.0f, 6.2831853f);
        s.grad_dx = std::cos(phi);
        s.grad_dy = std::sin(phi);

        s.cx = r * 0.5f + rng.uniform(-0.04f, 0.04f) * r;
        s.cy = r * 0.5f + rng.uniform(-0.04f, 0.04f) * r;
        const float base_radius = (s.large ? 0.336f : 0.224f) * r;
        s.ring_radius = base_radius * rng.uniform(0.92f, 1.08f);
        s.ring_thickness = std::max(1.5f, s.ring_radius * 0.16f);
        s.ring_intensity = rng.uniform(205.0f, 240.0f);
        s.interior_boost = rng.uniform(6.0f, 16.0f);

        const float drop_r = s.ring_radius * rng.uniform(0.38f, 0.52f);
        const float off = rng.uniform(0.0f, 0.35f) * s.ring_radius;
        const float ang = rng.uniform(0.0f, 6.2831853f);
        s.drop_cx = s.cx + off * std::cos(ang);
        s.drop_cy = s.cy + off * std::sin(ang);
        s.drop_radius = drop_r;
        s.drop_intensity = rng.uniform(130.0f, 200.0f);

        s.distractor = rng.next_double() < 0.3;
        s.distractor_cx = r * (0.5f + rng.uniform(-0.3f, 0.3f));
        s.distractor_cy = r * (0.82f + rng.uniform(-0.06f, 0.06f));
        s.distractor_radius = rng.uniform(0.06f, 0.10f) * r;

        s.noise_key = rng.next_u64();
        return s;
    }

    bool in_droplet(int y, int x) const {
        const float dx = static_cast<float>(x) + 0.5f - drop_cx;
        const float dy = static_cast<float>(y) + 0.5f - drop_cy;
        return std::sqrt(dx * dx + dy * dy) < drop_radius;
    }

    ImageU8 render(bool filled) const {
        // Liquid has a faint blue cast; the plastic ring reads slightly warm.
        static constexpr float kDropTint[3] = {0.90f, 1.00f, 1.10f};
        static constexpr float kRingTint[3] = {1.04f, 1.00f, 0.96f};
        ImageU8 img(res, res);
        const float r = static_cast<float>(res);
        for (int y = 0; y < res; ++y) {
            for (int x = 0; x < res; ++x) {
                const float px = static_cast<float>(x) + 0.5f;
                const float py = static_cast<float>(y) + 0.5f;
                const float base =
                    bg_level + grad_amp * ((px - r * 0.5f) * grad_dx + (py - r * 0.5f) * grad_dy) / r;

                const float ddx = px - cx;
                const float ddy = py - cy;
                const float dist = std::sqrt(ddx * ddx + ddy * ddy);
                const float ring_cov =
                    std::clamp((ring_thickness * 0.5f + 0.75f - std::abs(dist - ring_radius)) / 1.5f,
                               0.0f, 1.0f);
                const float inner_cov =
                    std::clamp((ring_radius - ring_thickness * 0.5f - dist) / 1.5f, 0.0f, 1.0f);

                float drop_cov = 0.0f;
                if (filled) {
                    const float dpx = px - drop_cx;
                    const float dpy = py - drop_cy;
                    const float ddist = std::sqrt(dpx * dpx + dpy * dpy);
                    drop_cov = std::clamp((drop_radius - ddist) / 1.5f, 0.0f, 1.0f);
                }

                float distractor_cov = 0.0f;
                if (distractor) {
                    const float qx = px - distractor_cx;
                    const float qy = py - distractor_cy;
                    const float qdist = std::sqrt(qx * qx + qy * qy);
                    distractor_cov = std::clamp((distractor_radius - qdist) / 1.5f, 0.0f, 1.0f);
                }

                Rng noise = Rng::keyed(noise_key, {static_cast<std::uint64_t>(y) * 16384ull +
                                                   static_cast<std::uint64_t>(x)});
                for (int ch = 0; ch < 3; ++ch) {
                    float v = base + interior_boost * inner_cov;
                    v += (ring_intensity * kRingTint[ch] - v) * ring_cov;
                    if (distractor_cov > 0.0f) {
                        v += (242.0f - v) * distractor_cov;
                    }
                    if (drop_cov > 0.0f) {
                        v += (drop_intensity * kDropTint[ch] - v) * drop_cov;
                    }
                    v += static_cast<float>(noise.normal(0.0, 3.0));
                    img.at(y, x, ch) = clamp_u8(v);
                }
            }
        }
        return img;
    }
};

/// Balanced synthetic dataset: n_per_class images for each of the four
/// (fill, size) combinations, rendered at `resolution`.
inline Dataset synth_generate(int n_per_class, int resolution, std::uint64_t seed) {
    if (n_per_class < 1) {
        throw std::invalid_argument("n_per_class must be >= 1");
    }
    if (resolution < 32) {
        throw std::invalid_argument("synthetic resolution must be >= 32, got " +
                                    std::to_string(resolution));
    }
    Dataset out;
    out.scenario = Scenario::four_label;
    out.items.reserve(static_cast<std::size_t>(n_per_class) * 4);
    for (VialSize size : {VialSize::large, VialSize::small}) {
        for (Fill fill : {Fill::filled, Fill::empty}) {
            for (int i = 0; i < n_per_class; ++i) {
                const VialScene scene = VialScene::sample(seed, size, i, resolution);
                out.items.push_back(LabeledImage{scene.render(fill == Fill::filled), fill, size});
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Manifest I/O
// ---------------------------------------------------------------------------

struct ManifestEntry {
    std::string path;  // as written in the manifest
    Fill fill = Fill::filled;
    VialSize size = VialSize::large;
    int source = -1;  // optional augmentation source id
};

inline std::vector<ManifestEntry> parse_manifest(std::istream& in) {
    std::vector<ManifestEntry> entries;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') {
            continue;
        }
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) {
            fields.push_back(field);
        }
        if (fields.size() < 3 || fields.size() > 4) {
            throw std::invalid_argument("manifest line " + std::to_string(line_no) +
                                        ": expected 'path,fill,size[,source]'");
        }
        ManifestEntry e;
        e.path = fields[0];
        if (fields[1] == "filled") {
            e.fill = Fill::filled;
        } else if (fields[1] == "empty") {
            e.fill = Fill::empty;
        } else {
            throw std::invalid_argument("manifest line " + std::to_string(line_no) + ": bad fill '" +
                                        fields[1] + "'");
        }
        if (fields[2] == "large") {
            e.size = VialSize::large;
        } else if (fields[2] == "small") {
            e.size = VialSize::small;
        } else {
            throw std::invalid_argument("manifest line " + std::to_string(line_no) + ": bad size '" +
                                        fields[2] + "'");
        }
        if (fields.size() == 4) {
            e.source = std::stoi(fields[3]);
        }
        entries.push_back(std::move(e));
    }
    return entries;
}

inline std::vector<ManifestEntry> load_manifest(const std::string& path) {
    std::ifstream f(path);
    if (!f) {
        throw ImageIoError("cannot open manifest: " + path);
    }
    return parse_manifest(f);
}

inline void save_manifest(const std::vector<ManifestEntry>& entries, const std::string& path) {
    std::ofstream f(path);
    if (!f) {
        throw ImageIoError("cannot open manifest for writing: " + path);
    }
    for (const ManifestEntry& e : entries) {
        f << e.path << ',' << fill_name(e.fill) << ',' << size_name(e.size);
        if (e.source >= 0) {
            f << ',' << e.source;
        }
        f << '\n';
    }
}

/// Loads a manifest plus its images; paths are resolved against the manifest
/// directory. Optionally returns the per-item source ids.
inline Dataset load_dataset(const std::string& manifest_path, Scenario scenario,
                            std::vector<int>* sources = nullptr) {
    const std::vector<ManifestEntry> entries = load_manifest(manifest_path);
    const std::filesystem::path base = std::filesystem::path(manifest_path).parent_path();
    Dataset out;
    out.scenario = scenario;
    out.items.reserve(entries.size());
    if (sources) {
        sources->clear();
        sources->reserve(entries.size());
    }
    for (const ManifestEntry& e : entries) {
        std::filesystem::path p(e.path);
        if (p.is_relative()) {
            p = base / p;
        }
        out.items.push_back(LabeledImage{load_raster(p.string()), e.fill, e.size});
        if (sources) {
            sources->push_back(e.source);
        }
    }
    return out;
}

}  // namespace vialnet
