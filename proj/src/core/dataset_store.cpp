#include "core/dataset_store.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <json.hpp>
#include <numeric>
#include <sstream>

#include "core/errors.hpp"
#include "core/image_codec.hpp"

namespace gemix {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kDatasetFormatVersion = 1;

int hard_class(const LabeledSample& s, int classes) {
  require(static_cast<int>(s.label.classes()) == classes,
          "sample label has " + std::to_string(s.label.classes()) +
              " classes, expected " + std::to_string(classes));
  return s.label.argmax();
}

std::vector<std::vector<std::size_t>> indices_by_class(
    const std::vector<LabeledSample>& samples, int classes) {
  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(classes));
  for (std::size_t i = 0; i < samples.size(); ++i)
    by_class[static_cast<std::size_t>(hard_class(samples[i], classes))].push_back(i);
  return by_class;
}

void shuffle(std::vector<std::size_t>& v, Rng& rng) {
  // Fisher-Yates with our own index draws so the permutation does not depend
  // on the standard library's std::shuffle strategy.
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.uniform_index(i)]);
}

std::string image_name(std::size_t index) {
  std::ostringstream name;
  name << "images/" << std::setw(6) << std::setfill('0') << index << ".pfm";
  return name.str();
}

}  // namespace

std::vector<LabeledSample> load_class_folders(const fs::path& root, int classes,
                                              int image_size, int channels,
                                              std::vector<std::string>* class_names) {
  require(classes >= 1, "class count must be >= 1");
  require(image_size >= 1, "image size must be >= 1");
  if (!fs::is_directory(root))
    fail(ErrorCode::io, "dataset root is not a directory: " + root.string());

  std::vector<fs::path> folders;
  for (const auto& entry : fs::directory_iterator(root))
    if (entry.is_directory()) folders.push_back(entry.path());
  std::sort(folders.begin(), folders.end());
  if (static_cast<int>(folders.size()) != classes)
    fail(ErrorCode::format, "expected " + std::to_string(classes) +
                                " class folders under " + root.string() + ", found " +
                                std::to_string(folders.size()));

  std::vector<LabeledSample> samples;
  if (class_names) class_names->clear();
  for (int c = 0; c < classes; ++c) {
    const auto& folder = folders[static_cast<std::size_t>(c)];
    if (class_names) class_names->push_back(folder.filename().string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(folder))
      if (entry.is_regular_file() && is_supported_image(entry.path()))
        files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    if (files.empty())
      fail(ErrorCode::format, "class folder '" + folder.filename().string() +
                                  "' contains no images");
    for (const auto& file : files) {
      LabeledSample s;
      ImageTensor img;
      try {
        img = read_image(file, channels);
      } catch (const Error& e) {
        throw Error(e.code(), std::string("failed to load ") + file.string() + ": " +
                                  e.what());
      }
      s.image = resize_bilinear(img, image_size, image_size);
      for (float& v : s.image.values) v = std::clamp(v, 0.0f, 1.0f);
      s.label = SoftLabel::one_hot(c, classes);
      s.provenance = Provenance::real;
      samples.push_back(std::move(s));
    }
  }
  return samples;
}

std::vector<LabeledSample> balanced_subsample(const std::vector<LabeledSample>& samples,
                                              int classes, std::size_t per_class,
                                              Rng& rng) {
  auto pools = draw_disjoint_pools(samples, classes, {per_class}, rng);
  return std::move(pools.front());
}

std::vector<std::vector<LabeledSample>> draw_disjoint_pools(
    const std::vector<LabeledSample>& samples, int classes,
    const std::vector<std::size_t>& per_class_sizes, Rng& rng) {
  require(classes >= 1, "class count must be >= 1");
  auto by_class = indices_by_class(samples, classes);
  const std::size_t needed =
      std::accumulate(per_class_sizes.begin(), per_class_sizes.end(), std::size_t{0});
  for (int c = 0; c < classes; ++c) {
    const auto have = by_class[static_cast<std::size_t>(c)].size();
    if (have < needed)
      fail(ErrorCode::invalid_argument,
           "class " + std::to_string(c) + " has " + std::to_string(have) +
               " samples, needs " + std::to_string(needed) + " (short by " +
               std::to_string(needed - have) + ")");
  }
  for (auto& idx : by_class) shuffle(idx, rng);

  std::vector<std::vector<LabeledSample>> pools(per_class_sizes.size());
  std::size_t offset = 0;
  for (std::size_t p = 0; p < per_class_sizes.size(); ++p) {
    for (const auto& idx : by_class)
      for (std::size_t k = 0; k < per_class_sizes[p]; ++k)
        pools[p].push_back(samples[idx[offset + k]]);
    offset += per_class_sizes[p];
  }
  return pools;
}

DatasetSplit split_train_val(const std::vector<LabeledSample>& samples, int classes,
                             double train_fraction, Rng& rng) {
  require(!samples.empty(), "split_train_val: empty input");
  require(train_fraction > 0.0 && train_fraction < 1.0,
          "train fraction must lie in (0, 1)");
  auto by_class = indices_by_class(samples, classes);
  DatasetSplit split;
  for (auto& idx : by_class) {
    shuffle(idx, rng);
    const auto n_train = static_cast<std::size_t>(
        std::llround(static_cast<double>(idx.size()) * train_fraction));
    for (std::size_t k = 0; k < idx.size(); ++k)
      (k < n_train ? split.train : split.val).push_back(samples[idx[k]]);
  }
  return split;
}

fs::path save_dataset(const std::vector<LabeledSample>& samples, const fs::path& out,
                      const std::vector<std::string>& class_names) {
  std::error_code ec;
  if (fs::is_directory(out / "images"))
    for (const auto& entry : fs::directory_iterator(out / "images"))
      if (entry.path().extension() == ".pfm") fs::remove(entry.path(), ec);
  fs::create_directories(out / "images", ec);
  if (ec) fail(ErrorCode::io, "cannot create " + (out / "images").string() + ": " + ec.message());

  DatasetManifest manifest;
  manifest.count = samples.size();
  if (!samples.empty()) {
    manifest.classes = static_cast<int>(samples.front().label.classes());
    manifest.image_size = samples.front().image.height;
    manifest.channels = samples.front().image.channels;
  }
  manifest.class_names = class_names;

  const fs::path labels_path = out / "labels.jsonl";
  std::ofstream labels(labels_path, std::ios::binary);
  if (!labels) fail(ErrorCode::io, "cannot write " + labels_path.string());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    require(static_cast<int>(s.label.classes()) == manifest.classes &&
                s.image.height == manifest.image_size &&
                s.image.width == manifest.image_size &&
                s.image.channels == manifest.channels,
            "save_dataset: sample " + std::to_string(i) + " is inconsistent with the first sample");
    const auto rel = image_name(i);
    write_pfm(out / rel, s.image);
    json row = {{"path", rel}, {"weights", s.label.weights},
                {"provenance", std::string(to_string(s.provenance))}};
    labels << row.dump() << '\n';
  }
  if (!labels) fail(ErrorCode::io, "short write to " + labels_path.string());

  const fs::path manifest_path = out / "manifest.json";
  json m = {{"format_version", kDatasetFormatVersion},
            {"classes", manifest.classes},
            {"image_size", manifest.image_size},
            {"channels", manifest.channels},
            {"count", manifest.count},
            {"class_names", manifest.class_names},
            {"labels", "labels.jsonl"}};
  std::ofstream mf(manifest_path, std::ios::binary);
  if (!mf) fail(ErrorCode::io, "cannot write " + manifest_path.string());
  mf << m.dump(2) << '\n';
  if (!mf) fail(ErrorCode::io, "short write to " + manifest_path.string());
  return manifest_path;
}

DatasetManifest read_manifest(const fs::path& dir) {
  const fs::path path = dir / "manifest.json";
  std::ifstream in(path);
  if (!in) fail(ErrorCode::missing_artifact, "dataset manifest not found: " + path.string());
  DatasetManifest m;
  try {
    const json j = json::parse(in);
    m.format_version = j.at("format_version").get<int>();
    m.classes = j.at("classes").get<int>();
    m.image_size = j.at("image_size").get<int>();
    m.channels = j.at("channels").get<int>();
    m.count = j.at("count").get<std::size_t>();
    if (j.contains("class_names"))
      m.class_names = j.at("class_names").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    fail(ErrorCode::format, "malformed manifest " + path.string() + ": " + e.what());
  }
  if (m.format_version != kDatasetFormatVersion)
    fail(ErrorCode::format, "dataset format version " + std::to_string(m.format_version) +
                                " in " + path.string() + " is not supported (expected " +
                                std::to_string(kDatasetFormatVersion) + ")");
  return m;
}

std::vector<LabeledSample> load_dataset(const fs::path& dir, DatasetManifest* manifest) {
  const DatasetManifest m = read_manifest(dir);
  const fs::path labels_path = dir / "labels.jsonl";
  std::ifstream in(labels_path);
  if (!in) fail(ErrorCode::missing_artifact, "label sidecar not found: " + labels_path.string());

  std::vector<LabeledSample> samples;
  samples.reserve(m.count);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    LabeledSample s;
    std::string rel;
    try {
      const json row = json::parse(line);
      rel = row.at("path").get<std::string>();
      s.label.weights = row.at("weights").get<std::vector<double>>();
      s.provenance = provenance_from_string(row.at("provenance").get<std::string>());
    } catch (const json::exception& e) {
      fail(ErrorCode::format, labels_path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (static_cast<int>(s.label.classes()) != m.classes)
      fail(ErrorCode::format, labels_path.string() + ":" + std::to_string(line_no) +
                                  ": label length disagrees with manifest");
    s.image = read_pfm(dir / rel);
    if (s.image.height != m.image_size || s.image.width != m.image_size ||
        s.image.channels != m.channels)
      fail(ErrorCode::format, "image " + (dir / rel).string() + " disagrees with manifest shape");
    samples.push_back(std::move(s));
  }
  if (samples.size() != m.count)
    fail(ErrorCode::format, "manifest lists " + std::to_string(m.count) + " samples, sidecar has " +
                                std::to_string(samples.size()));
  if (manifest) *manifest = m;
  return samples;
}

std::vector<std::size_t> class_histogram(const std::vector<LabeledSample>& samples,
                                         int classes) {
  std::vector<std::size_t> hist(static_cast<std::size_t>(classes), 0);
  for (const auto& s : samples) ++hist[static_cast<std::size_t>(hard_class(s, classes))];
  return hist;
}

}  // namespace gemix
