#pragma once

#include <filesystem>
#include <functional>
#include <vector>

#include "platenet/dataset.hpp"
#include "platenet/model.hpp"
#include "platenet/optim.hpp"

namespace platenet {

struct TrainConfig {
  int epochs = 20;
  uint64_t seed = 123;
  std::filesystem::path checkpoint_path;
  float threshold = 0.5f;  // accuracy bookkeeping
  AdamConfig adam;
};

struct EpochRecord {
  int epoch = 0;  // 1-based
  float train_loss = 0.0f;
  float train_accuracy = 0.0f;
  float val_loss = 0.0f;
  float val_accuracy = 0.0f;
  bool checkpointed = false;
};

struct History {
  std::vector<EpochRecord> records;
  std::vector<int> checkpoint_epochs;  // epochs where val loss set a new minimum
};

// Aborted run; carries whatever history was recorded before the failure.
class TrainError : public Error {
 public:
  TrainError(const std::string& what, History partial)
      : Error(what), partial_history(std::move(partial)) {}
  History partial_history;
};

struct EvalResult {
  float loss = 0.0f;      // example-weighted mean over the split
  float accuracy = 0.0f;  // threshold rule: p >= threshold -> 1
};

// Inference mode over one epoch of `data`.
EvalResult evaluate_split(Model& model, BatchSource& data, float threshold = 0.5f,
                          int epoch = 0);

struct TrainResult {
  Model best;  // reloaded from the checkpoint file
  History history;
};

// Invoked after each epoch with the record and the best validation loss
// seen before this epoch (+inf on the first).
using EpochCallback = std::function<void(const EpochRecord&, float previous_best)>;

// The epoch loop: train batches in dropout-training mode with one Adam
// step per batch, evaluate validation in inference mode, checkpoint to
// config.checkpoint_path whenever validation loss strictly improves.
TrainResult train(Model& model, BatchSource& train_data, BatchSource& val_data,
                  const TrainConfig& config, const EpochCallback& on_epoch = {});

// Tab-separated table, one row per epoch, 6 significant digits.
void export_history(const History& history, const std::filesystem::path& path);
History parse_history(const std::filesystem::path& path);

}  // namespace platenet
