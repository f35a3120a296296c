#include "dds/dataset.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>

namespace dds {

namespace {
constexpr int kManifestSchemaVersion = 1;
}

DatasetManifest DatasetManifest::load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw DataError("manifest: cannot open " + path.string());
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("manifest: malformed JSON: " + std::string(e.what()));
  }
  if (!j.contains("schema_version") || j["schema_version"].get<int>() != kManifestSchemaVersion)
    throw DataError("manifest: unsupported schema version");

  DatasetManifest m;
  m.base_dir = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  for (const auto& rj : j.at("records")) {
    ManifestRecord r;
    r.image_path = rj.at("image").get<std::string>();
    r.mask_path = rj.at("mask").get<std::string>();
    r.split = rj.value("split", "");
    r.source = rj.value("source", "");
    if (!r.split.empty() && r.split != "train" && r.split != "test")
      throw DataError("manifest: split tag must be train or test");
    m.records.push_back(std::move(r));
  }
  return m;
}

void DatasetManifest::save(const std::filesystem::path& path) const {
  nlohmann::json j;
  j["schema_version"] = kManifestSchemaVersion;
  j["records"] = nlohmann::json::array();
  for (const ManifestRecord& r : records) {
    nlohmann::json rj;
    rj["image"] = r.image_path;
    rj["mask"] = r.mask_path;
    rj["split"] = r.split;
    rj["source"] = r.source;
    j["records"].push_back(std::move(rj));
  }
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw DataError("manifest: cannot write " + path.string());
  os << j.dump(2) << '\n';
}

std::vector<std::size_t> DatasetManifest::split_indices(const std::string& split) const {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < records.size(); ++i)
    if (records[i].split == split) idx.push_back(i);
  return idx;
}

void DatasetManifest::check_files_exist() const {
  for (const ManifestRecord& r : records) {
    if (!std::filesystem::exists(resolve(r.image_path)))
      throw DataError("manifest: missing image " + r.image_path);
    if (!std::filesystem::exists(resolve(r.mask_path)))
      throw DataError("manifest: missing mask " + r.mask_path);
  }
}

void split_manifest(DatasetManifest& manifest, double ratio, std::uint64_t seed) {
  if (ratio <= 0.0 || ratio >= 1.0) throw SplitError("split: ratio must lie in (0, 1)");
  const std::size_t n = manifest.records.size();
  if (n < 2) throw SplitError("split: need at least two records");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  const std::size_t train_count = static_cast<std::size_t>(ratio * static_cast<double>(n));
  for (std::size_t i = 0; i < n; ++i)
    manifest.records[order[i]].split = (i < train_count) ? "train" : "test";
}

Tensor average_annotation_map(const std::vector<BinaryMask>& masks, int height, int width) {
  if (masks.empty()) throw DataError("average_annotation_map: no masks");
  Tensor sum({height, width});
  for (const BinaryMask& m : masks) {
    const BinaryMask r = resize_nearest(m, height, width);
    for (std::int64_t i = 0; i < sum.size(); ++i) sum[i] += r.values[static_cast<std::size_t>(i)];
  }
  double max = 0.0;
  for (std::int64_t i = 0; i < sum.size(); ++i) max = std::max(max, sum[i]);
  if (max == 0.0) throw DegenerateSpecError("average_annotation_map: all masks are empty");
  for (std::int64_t i = 0; i < sum.size(); ++i) sum[i] /= max;
  return sum;
}

namespace {

// Union-find over provisional labels for the two-pass labeling below.
struct LabelMerger {
  std::vector<int> parent;

  int make() {
    parent.push_back(static_cast<int>(parent.size()));
    return parent.back();
  }
  int find(int a) {
    while (parent[static_cast<std::size_t>(a)] != a) {
      parent[static_cast<std::size_t>(a)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(a)])];
      a = parent[static_cast<std::size_t>(a)];
    }
    return a;
  }
  void merge(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
  }
};

}  // namespace

ObjectStats object_stats(const BinaryMask& mask) {
  const int h = mask.height, w = mask.width;
  std::vector<int> labels(static_cast<std::size_t>(h) * w, -1);
  LabelMerger merger;

  // First pass: scan with the four already-visited 8-neighbors.
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!mask.at(y, x)) continue;
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      int label = -1;
      const int neighbors[4][2] = {{y, x - 1}, {y - 1, x - 1}, {y - 1, x}, {y - 1, x + 1}};
      for (const auto& nb : neighbors) {
        const int ny = nb[0], nx = nb[1];
        if (ny < 0 || nx < 0 || nx >= w) continue;
        const int nl = labels[static_cast<std::size_t>(ny) * w + nx];
        if (nl < 0) continue;
        if (label < 0)
          label = nl;
        else
          merger.merge(label, nl);
      }
      labels[i] = (label < 0) ? merger.make() : label;
    }
  }

  // Second pass: resolve labels, accumulate areas in first-encounter order.
  std::vector<int> compact(merger.parent.size(), -1);
  ObjectStats stats;
  std::vector<std::int64_t> areas;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0) continue;
    const int root = merger.find(labels[i]);
    if (compact[static_cast<std::size_t>(root)] < 0) {
      compact[static_cast<std::size_t>(root)] = static_cast<int>(areas.size());
      areas.push_back(0);
    }
    ++areas[static_cast<std::size_t>(compact[static_cast<std::size_t>(root)])];
  }
  stats.count = static_cast<int>(areas.size());
  const double total = static_cast<double>(h) * w;
  for (std::int64_t a : areas) stats.area_fractions.push_back(static_cast<double>(a) / total);
  return stats;
}

std::vector<std::int64_t> histogram(const std::vector<double>& values,
                                    const std::vector<double>& edges) {
  if (edges.size() < 2) throw DataError("histogram: need at least two edges");
  for (std::size_t i = 1; i < edges.size(); ++i)
    if (edges[i] <= edges[i - 1]) throw DataError("histogram: edges must be strictly increasing");

  std::vector<std::int64_t> counts(edges.size() - 1, 0);
  for (double v : values) {
    if (v < edges.front() || v > edges.back()) continue;
    if (v == edges.back()) {  // last bin is closed
      ++counts.back();
      continue;
    }
    const auto it = std::upper_bound(edges.begin(), edges.end(), v);
    counts[static_cast<std::size_t>(it - edges.begin()) - 1] += 1;
  }
  return counts;
}

}  // namespace dds
