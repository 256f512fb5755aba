#include "platenet/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>

#include "platenet/errors.hpp"
#include "platenet/image_io.hpp"

namespace platenet {

namespace {

int round_half_up(double v) { return static_cast<int>(std::floor(v + 0.5)); }

}  // namespace

size_t DatasetIndex::count(Split s) const {
  size_t n = 0;
  for (const auto& e : entries) n += e.split == s ? 1 : 0;
  return n;
}

size_t DatasetIndex::count_label(int label) const {
  size_t n = 0;
  for (const auto& e : entries) n += e.label == label ? 1 : 0;
  return n;
}

DatasetIndex scan(const std::filesystem::path& root) {
  if (!std::filesystem::is_directory(root)) {
    throw IoError("dataset root not found: " + root.string());
  }
  DatasetIndex index;
  const std::pair<const char*, int> class_dirs[] = {{"ok", 0}, {"bad", 1}};
  bool any_class_dir = false;
  for (const auto& [name, label] : class_dirs) {
    const auto dir = root / name;
    if (!std::filesystem::is_directory(dir)) continue;
    any_class_dir = true;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
      if (!entry.is_regular_file()) continue;
      if (!has_supported_extension(entry.path())) {
        ++index.skipped_files;
        continue;
      }
      index.entries.push_back({entry.path(), label, Split::kTraining});
    }
  }
  if (!any_class_dir) {
    throw IoError("no ok/ or bad/ subdirectory under " + root.string());
  }
  std::sort(index.entries.begin(), index.entries.end(),
            [](const DatasetEntry& a, const DatasetEntry& b) { return a.path < b.path; });
  if (index.entries.empty()) {
    throw IoError("no images found under " + root.string());
  }
  return index;
}

DatasetIndex split(DatasetIndex index, double validation_fraction, uint64_t seed) {
  if (validation_fraction < 0.0 || validation_fraction >= 1.0) {
    throw ArgumentError("validation fraction must be in [0,1)");
  }
  index.seed = seed;
  for (int label : {0, 1}) {
    std::vector<size_t> ids;
    for (size_t i = 0; i < index.entries.size(); ++i) {
      if (index.entries[i].label == label) ids.push_back(i);
    }
    const size_t n_val = static_cast<size_t>(
        round_half_up(validation_fraction * static_cast<double>(ids.size())));
    for (size_t j = 0; j < ids.size(); ++j) {
      index.entries[ids[j]].split =
          j + n_val >= ids.size() ? Split::kValidation : Split::kTraining;
    }
  }
  if (index.count(Split::kTraining) == 0) {
    throw ArgumentError("validation fraction leaves the training split empty");
  }
  return index;
}

Tensor load_image(const std::filesystem::path& path, int target_h, int target_w) {
  const ImageU8 img = read_image(path);
  // Grayscale first, then resize.
  std::vector<float> gray(static_cast<size_t>(img.width) * img.height);
  if (img.channels == 1) {
    for (size_t i = 0; i < gray.size(); ++i) gray[i] = img.pixels[i];
  } else {
    for (size_t i = 0; i < gray.size(); ++i) {
      const double r = img.pixels[3 * i];
      const double g = img.pixels[3 * i + 1];
      const double b = img.pixels[3 * i + 2];
      gray[i] = static_cast<float>(
          std::floor(0.299 * r + 0.587 * g + 0.114 * b + 0.5));
    }
  }
  Tensor out({target_h, target_w, 1});
  for (int row = 0; row < target_h; ++row) {
    const int src_row = std::min(
        img.height - 1,
        static_cast<int>(std::floor((row + 0.5) * img.height / static_cast<double>(target_h))));
    for (int col = 0; col < target_w; ++col) {
      const int src_col = std::min(
          img.width - 1,
          static_cast<int>(std::floor((col + 0.5) * img.width / static_cast<double>(target_w))));
      out.at(row, col, 0) = gray[static_cast<size_t>(src_row) * img.width + src_col];
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// DirectoryLoader
// ---------------------------------------------------------------------------

DirectoryLoader::DirectoryLoader(DatasetIndex index, std::optional<Split> filter,
                                 LoaderOptions options)
    : index_(std::move(index)), options_(options) {
  if (options_.batch_size < 1) throw ArgumentError("batch size must be >= 1");
  for (size_t i = 0; i < index_.entries.size(); ++i) {
    if (!filter || index_.entries[i].split == *filter) selected_.push_back(i);
  }
  if (selected_.empty()) throw ArgumentError("loader split is empty");
}

void DirectoryLoader::start_epoch(int epoch) {
  epoch_ = epoch;
  order_ = selected_;
  if (options_.shuffle) {
    Rng rng(mix_seed(mix_seed(options_.seed, 0x5u), static_cast<uint64_t>(epoch)));
    for (size_t i = order_.size(); i > 1; --i) {
      std::swap(order_[i - 1], order_[rng.below(static_cast<uint32_t>(i))]);
    }
  }
  pos_ = 0;
  started_ = true;
}

std::optional<Batch> DirectoryLoader::next() {
  if (!started_) throw StateError("loader next() before start_epoch()");
  if (pos_ >= order_.size()) return std::nullopt;
  const int h = options_.image_height;
  const int w = options_.image_width;
  const size_t n = std::min(static_cast<size_t>(options_.batch_size), order_.size() - pos_);
  Batch batch{Tensor({static_cast<int>(n), h, w, 1}), Tensor({static_cast<int>(n)})};
  const size_t pixels = static_cast<size_t>(h) * w;
  for (size_t i = 0; i < n; ++i) {
    const size_t entry_id = order_[pos_ + i];
    const DatasetEntry& entry = index_.entries[entry_id];
    const Tensor raw = load_image(entry.path, h, w);
    Tensor img;
    if (options_.augment) {
      Rng rng(mix_seed(mix_seed(options_.seed, static_cast<uint64_t>(epoch_)),
                       0xA000000ull + entry_id));
      const AugmentParams params = sample_params(*options_.augment, w, h, rng);
      img = apply_augment(raw, params);
    } else {
      img = passthrough(raw, options_.rescale);
    }
    std::memcpy(batch.inputs.data() + i * pixels, img.data(), pixels * sizeof(float));
    batch.labels[i] = static_cast<float>(entry.label);
  }
  pos_ += n;
  return batch;
}

size_t DirectoryLoader::batches_per_epoch() const {
  const auto bs = static_cast<size_t>(options_.batch_size);
  return (selected_.size() + bs - 1) / bs;
}

// ---------------------------------------------------------------------------
// Synthetic corpus
// ---------------------------------------------------------------------------

namespace {

// Float canvas in raw intensity units; quantized to u8 at write time.
struct Canvas {
  int size;
  std::vector<float> px;

  explicit Canvas(int s) : size(s), px(static_cast<size_t>(s) * s, 0.0f) {}
  float& at(int r, int c) { return px[static_cast<size_t>(r) * size + c]; }
};

constexpr float kBackground = 140.0f;
constexpr float kNoiseAmp = 8.0f;
constexpr double kSpeckleDensity = 0.05;  // expected speckles per pixel

int poisson(Rng& rng, double lambda) {
  // Count of unit-rate exponential arrivals inside [0, lambda].
  int count = 0;
  double acc = 0.0;
  while (true) {
    acc += -std::log(1.0 - rng.uniform_double());
    if (acc > lambda) break;
    ++count;
  }
  return count;
}

void paint_background(Canvas& canvas, Rng& rng) {
  for (float& v : canvas.px) v = kBackground + rng.uniform(-kNoiseAmp, kNoiseAmp);
}

void paint_disk(Canvas& canvas, double cx, double cy, double radius, float value,
                bool darker_wins) {
  const int lo_r = std::max(0, static_cast<int>(std::floor(cy - radius)));
  const int hi_r = std::min(canvas.size - 1, static_cast<int>(std::ceil(cy + radius)));
  const int lo_c = std::max(0, static_cast<int>(std::floor(cx - radius)));
  const int hi_c = std::min(canvas.size - 1, static_cast<int>(std::ceil(cx + radius)));
  for (int r = lo_r; r <= hi_r; ++r) {
    for (int c = lo_c; c <= hi_c; ++c) {
      const double dx = c - cx;
      const double dy = r - cy;
      if (dx * dx + dy * dy > radius * radius) continue;
      float& px = canvas.at(r, c);
      px = darker_wins ? std::min(px, value) : std::max(px, value);
    }
  }
}

void paint_speckles(Canvas& canvas, Rng& rng) {
  const double lambda = kSpeckleDensity * canvas.size * canvas.size;
  const int count = poisson(rng, lambda);
  for (int i = 0; i < count; ++i) {
    const double cx = rng.uniform_double() * canvas.size;
    const double cy = rng.uniform_double() * canvas.size;
    const double radius = rng.uniform(0.9f, 2.1f);
    const float value = rng.uniform(210.0f, 255.0f);
    paint_disk(canvas, cx, cy, radius, value, /*darker_wins=*/false);
  }
}

// Dark 1-3 px polylines across the plate.
void paint_scratch(Canvas& canvas, Rng& rng) {
  const int lines = 3 + static_cast<int>(rng.below(4));  // 3..6
  for (int l = 0; l < lines; ++l) {
    double x = rng.uniform_double() * canvas.size;
    double y = rng.uniform_double() * canvas.size;
    double angle = rng.uniform_double() * 2.0 * 3.14159265358979323846;
    const int length =
        static_cast<int>(rng.uniform(0.4f, 0.9f) * static_cast<float>(canvas.size));
    const float width = rng.uniform(1.0f, 3.0f);
    const float dark = rng.uniform(20.0f, 60.0f);
    for (int step = 0; step < length; ++step) {
      paint_disk(canvas, x, y, width / 2.0, dark, /*darker_wins=*/true);
      x += std::cos(angle);
      y += std::sin(angle);
      angle += rng.uniform(-0.06f, 0.06f);
    }
  }
}

// Speckle-free disk: the region is repainted as bare background.
void paint_void(Canvas& canvas, Rng& rng) {
  const double radius = rng.uniform(0.08f, 0.15f) * canvas.size;
  const double cx = rng.uniform_double() * canvas.size;
  const double cy = rng.uniform_double() * canvas.size;
  const int lo_r = std::max(0, static_cast<int>(std::floor(cy - radius)));
  const int hi_r = std::min(canvas.size - 1, static_cast<int>(std::ceil(cy + radius)));
  const int lo_c = std::max(0, static_cast<int>(std::floor(cx - radius)));
  const int hi_c = std::min(canvas.size - 1, static_cast<int>(std::ceil(cx + radius)));
  for (int r = lo_r; r <= hi_r; ++r) {
    for (int c = lo_c; c <= hi_c; ++c) {
      const double dx = c - cx;
      const double dy = r - cy;
      if (dx * dx + dy * dy > radius * radius) continue;
      canvas.at(r, c) = kBackground + rng.uniform(-kNoiseAmp, kNoiseAmp);
    }
  }
}

// +-40 brightness offset inside a rotated ellipse.
void paint_blotch(Canvas& canvas, Rng& rng) {
  const double a = rng.uniform(0.12f, 0.32f) * canvas.size;
  const double b = rng.uniform(0.12f, 0.32f) * canvas.size;
  const double cx = rng.uniform_double() * canvas.size;
  const double cy = rng.uniform_double() * canvas.size;
  const double phi = rng.uniform_double() * 3.14159265358979323846;
  const float offset = rng.coin() ? 40.0f : -40.0f;
  const double cos_p = std::cos(phi);
  const double sin_p = std::sin(phi);
  const double reach = std::max(a, b);
  const int lo_r = std::max(0, static_cast<int>(std::floor(cy - reach)));
  const int hi_r = std::min(canvas.size - 1, static_cast<int>(std::ceil(cy + reach)));
  const int lo_c = std::max(0, static_cast<int>(std::floor(cx - reach)));
  const int hi_c = std::min(canvas.size - 1, static_cast<int>(std::ceil(cx + reach)));
  for (int r = lo_r; r <= hi_r; ++r) {
    for (int c = lo_c; c <= hi_c; ++c) {
      const double dx = c - cx;
      const double dy = r - cy;
      const double u = (dx * cos_p + dy * sin_p) / a;
      const double v = (-dx * sin_p + dy * cos_p) / b;
      if (u * u + v * v <= 1.0) canvas.at(r, c) += offset;
    }
  }
}

std::string render_bad(Canvas& canvas, Rng& rng) {
  paint_background(canvas, rng);
  paint_speckles(canvas, rng);
  const int defects = 3 + static_cast<int>(rng.below(3));  // 3..5
  std::string types;
  for (int d = 0; d < defects; ++d) {
    const uint32_t kind = rng.below(3);
    const char* name = kind == 0 ? "scratch" : kind == 1 ? "void" : "blotch";
    if (kind == 0) {
      paint_scratch(canvas, rng);
    } else if (kind == 1) {
      paint_void(canvas, rng);
    } else {
      paint_blotch(canvas, rng);
    }
    if (types.find(name) == std::string::npos) {
      if (!types.empty()) types += ",";
      types += name;
    }
  }
  return types;
}

void write_canvas(const Canvas& canvas, const std::filesystem::path& path) {
  std::vector<uint8_t> bytes(canvas.px.size());
  for (size_t i = 0; i < bytes.size(); ++i) {
    const float v = std::clamp(canvas.px[i], 0.0f, 255.0f);
    bytes[i] = static_cast<uint8_t>(std::floor(v + 0.5f));
  }
  write_png_gray(path, canvas.size, canvas.size, bytes.data());
}

}  // namespace

SynthCounts synthesize(const SynthConfig& config, const std::filesystem::path& out_root) {
  if (config.n_ok < 0 || config.n_bad < 0 || config.image_size < 1) {
    throw ArgumentError("synthesize counts must be >= 0 and image size >= 1");
  }
  for (const char* split_dir : {"train", "test"}) {
    for (const char* class_dir : {"ok", "bad"}) {
      std::filesystem::create_directories(out_root / split_dir / class_dir);
    }
  }
  std::ofstream manifest(out_root / "manifest.tsv");
  if (!manifest) throw IoError("cannot write manifest under " + out_root.string());

  SynthCounts counts;
  char name[32];
  for (int label = 0; label < 2; ++label) {
    const int total = label == 0 ? config.n_ok : config.n_bad;
    const int n_test = round_half_up(0.2 * total);
    const int n_train = total - n_test;
    for (int i = 0; i < total; ++i) {
      Rng rng(mix_seed(mix_seed(config.seed, static_cast<uint64_t>(label)),
                       0xB000000ull + static_cast<uint64_t>(i)));
      Canvas canvas(config.image_size);
      std::string defect = "none";
      if (label == 0) {
        paint_background(canvas, rng);
        paint_speckles(canvas, rng);
      } else {
        defect = render_bad(canvas, rng);
      }
      const bool is_train = i < n_train;
      const char* split_dir = is_train ? "train" : "test";
      const char* class_dir = label == 0 ? "ok" : "bad";
      std::snprintf(name, sizeof(name), "%s_%04d.png", class_dir, i);
      const auto rel = std::filesystem::path(split_dir) / class_dir / name;
      write_canvas(canvas, out_root / rel);
      manifest << rel.generic_string() << "\t" << label << "\t" << defect << "\n";
      if (label == 0) {
        (is_train ? counts.train_ok : counts.test_ok) += 1;
      } else {
        (is_train ? counts.train_bad : counts.test_bad) += 1;
      }
    }
  }
  manifest.close();
  if (!manifest) throw IoError("manifest write failed under " + out_root.string());
  return counts;
}

}  // namespace platenet
