#include "platenet/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "platenet/metrics.hpp"

namespace platenet {

namespace {

size_t count_correct(const Tensor& probabilities, const Tensor& labels, float threshold) {
  const std::vector<int> preds = threshold_predict(probabilities, threshold);
  size_t correct = 0;
  for (size_t i = 0; i < preds.size(); ++i) {
    correct += preds[i] == static_cast<int>(labels[i]) ? 1 : 0;
  }
  return correct;
}

}  // namespace

EvalResult evaluate_split(Model& model, BatchSource& data, float threshold, int epoch) {
  data.start_epoch(epoch);
  double loss_sum = 0.0;
  size_t correct = 0;
  size_t seen = 0;
  while (auto batch = data.next()) {
    const Tensor out = model.forward(batch->inputs, Mode::kInference);
    const LossValue lv = bce(out, batch->labels);
    const size_t n = batch->labels.size();
    loss_sum += static_cast<double>(lv.loss) * static_cast<double>(n);
    correct += count_correct(out, batch->labels, threshold);
    seen += n;
  }
  if (seen == 0) throw ArgumentError("evaluate_split on empty data");
  return {static_cast<float>(loss_sum / static_cast<double>(seen)),
          static_cast<float>(static_cast<double>(correct) / static_cast<double>(seen))};
}

TrainResult train(Model& model, BatchSource& train_data, BatchSource& val_data,
                  const TrainConfig& config, const EpochCallback& on_epoch) {
  if (config.epochs < 1) throw ArgumentError("epochs must be >= 1");
  if (config.checkpoint_path.empty()) throw ArgumentError("checkpoint path is required");

  auto params = model.parameters();
  Adam adam(config.adam, params);
  History history;
  float best = std::numeric_limits<float>::infinity();

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    train_data.start_epoch(epoch - 1);
    double loss_sum = 0.0;
    size_t correct = 0;
    size_t seen = 0;
    int batch_index = 0;
    while (auto batch = train_data.next()) {
      ++batch_index;
      const Tensor out = model.forward(batch->inputs, Mode::kTraining);
      const LossValue lv = bce(out, batch->labels);
      if (!std::isfinite(lv.loss)) {
        throw TrainError("non-finite training loss at epoch " + std::to_string(epoch) +
                             ", batch " + std::to_string(batch_index),
                         history);
      }
      model.backward(lv.grad);
      adam.step(params);
      const size_t n = batch->labels.size();
      loss_sum += static_cast<double>(lv.loss) * static_cast<double>(n);
      correct += count_correct(out, batch->labels, config.threshold);
      seen += n;
    }
    if (seen == 0) throw TrainError("training split is empty", history);

    const EvalResult val = evaluate_split(model, val_data, config.threshold, epoch - 1);
    if (!std::isfinite(val.loss)) {
      throw TrainError("non-finite validation loss at epoch " + std::to_string(epoch),
                       history);
    }

    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = static_cast<float>(loss_sum / static_cast<double>(seen));
    record.train_accuracy =
        static_cast<float>(static_cast<double>(correct) / static_cast<double>(seen));
    record.val_loss = val.loss;
    record.val_accuracy = val.accuracy;
    record.checkpointed = val.loss < best;

    const float previous_best = best;
    if (record.checkpointed) {
      try {
        model.save(config.checkpoint_path);
      } catch (const Error& e) {
        history.records.push_back(record);
        throw TrainError(std::string("checkpoint write failed: ") + e.what(), history);
      }
      best = val.loss;
      history.checkpoint_epochs.push_back(epoch);
    }
    history.records.push_back(record);
    if (on_epoch) on_epoch(record, previous_best);
  }

  return {Model::load(config.checkpoint_path), std::move(history)};
}

void export_history(const History& history, const std::filesystem::path& path) {
  if (history.records.empty()) throw ArgumentError("history is empty");
  std::ofstream file(path, std::ios::trunc);
  if (!file) throw IoError("cannot open " + path.string() + " for writing");
  file << "epoch\ttrain_loss\ttrain_acc\tval_loss\tval_acc\tcheckpointed\n";
  char buf[160];
  for (const EpochRecord& r : history.records) {
    std::snprintf(buf, sizeof(buf), "%d\t%.6g\t%.6g\t%.6g\t%.6g\t%d\n", r.epoch,
                  r.train_loss, r.train_accuracy, r.val_loss, r.val_accuracy,
                  r.checkpointed ? 1 : 0);
    file << buf;
  }
  if (!file) throw IoError("history write failed for " + path.string());
}

History parse_history(const std::filesystem::path& path) {
  std::ifstream file(path);
  if (!file) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(file, line) || line != "epoch\ttrain_loss\ttrain_acc\tval_loss\tval_acc\tcheckpointed") {
    throw IoError("bad history header in " + path.string());
  }
  History history;
  while (std::getline(file, line)) {
    if (line.empty()) continue;
    EpochRecord r;
    int flag = 0;
    if (std::sscanf(line.c_str(), "%d\t%f\t%f\t%f\t%f\t%d", &r.epoch, &r.train_loss,
                    &r.train_accuracy, &r.val_loss, &r.val_accuracy, &flag) != 6) {
      throw IoError("bad history row in " + path.string() + ": " + line);
    }
    r.checkpointed = flag != 0;
    if (r.checkpointed) history.checkpoint_epochs.push_back(r.epoch);
    history.records.push_back(r);
  }
  if (history.records.empty()) throw IoError("history file has no rows: " + path.string());
  return history;
}

}  // namespace platenet
