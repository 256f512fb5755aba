#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "platenet/augment.hpp"
#include "platenet/tensor.hpp"

namespace platenet {

enum class Split { kTraining, kValidation };

struct DatasetEntry {
  std::filesystem::path path;
  int label = 0;  // ok=0, bad=1, from the parent directory name
  Split split = Split::kTraining;
};

struct DatasetIndex {
  std::vector<DatasetEntry> entries;  // lexicographic by path
  int skipped_files = 0;              // unsupported extensions seen during scan
  uint64_t seed = 123;

  size_t count(Split split) const;
  size_t count_label(int label) const;
};

// Scans root/ok and root/bad for .png/.pgm files. All entries start tagged
// kTraining.
DatasetIndex scan(const std::filesystem::path& root);

// Tags the last round(fraction * n) entries of each class (in index order)
// as validation, so both classes appear in both splits.
DatasetIndex split(DatasetIndex index, double validation_fraction = 0.2,
                   uint64_t seed = 123);

// Grayscale (luma 0.299/0.587/0.114, rounded half up) then nearest-neighbor
// resize; returns (target_h, target_w, 1) with raw integer values 0..255.
Tensor load_image(const std::filesystem::path& path, int target_h = 300,
                  int target_w = 300);

struct Batch {
  Tensor inputs;  // (N,H,W,1) in [0,1]
  Tensor labels;  // (N,) in {0,1}
};

struct LoaderOptions {
  int batch_size = 64;
  int image_height = 300;
  int image_width = 300;
  bool shuffle = false;
  std::optional<AugmentConfig> augment;  // nullopt -> rescale-only passthrough
  double rescale = 1.0 / 255.0;
  uint64_t seed = 123;
};

class BatchSource {
 public:
  virtual ~BatchSource() = default;
  virtual void start_epoch(int epoch) = 0;
  virtual std::optional<Batch> next() = 0;
  virtual size_t example_count() const = 0;
  virtual size_t batches_per_epoch() const = 0;
};

// Streams an index's entries as batches; every epoch visits each entry
// exactly once. Shuffle permutations derive from (seed, epoch) and each
// image's augmentation stream from (seed, epoch, entry index), so delivery
// is reproducible regardless of who loads what.
class DirectoryLoader final : public BatchSource {
 public:
  DirectoryLoader(DatasetIndex index, std::optional<Split> filter, LoaderOptions options);

  void start_epoch(int epoch) override;
  std::optional<Batch> next() override;
  size_t example_count() const override { return selected_.size(); }
  size_t batches_per_epoch() const override;

 private:
  DatasetIndex index_;
  LoaderOptions options_;
  std::vector<size_t> selected_;  // entry ids matching the filter
  std::vector<size_t> order_;
  size_t pos_ = 0;
  int epoch_ = 0;
  bool started_ = false;
};

// ---------------------------------------------------------------------------
// Synthetic corpus
// ---------------------------------------------------------------------------

struct SynthConfig {
  int n_ok = 0;
  int n_bad = 0;
  int image_size = 300;
  uint64_t seed = 123;
};

struct SynthCounts {
  int train_ok = 0;
  int test_ok = 0;
  int train_bad = 0;
  int test_bad = 0;
};

// Writes {out_root}/{train|test}/{ok|bad}/*.png (80/20 train/test per
// class) plus manifest.tsv with one `path<TAB>label<TAB>defect_type` line
// per image. "ok" images are speckled gray plates; "bad" images add one or
// more defects (scratch / void / blotch). Byte-identical output per seed.
SynthCounts synthesize(const SynthConfig& config, const std::filesystem::path& out_root);

}  // namespace platenet
