// Acceptance suite: one line per criterion, nonzero exit when any fails.
//
// The long end-to-end training run executes last so the fast checks report
// first; expect a few minutes of total runtime on a desktop CPU.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "platenet/augment.hpp"
#include "platenet/dataset.hpp"
#include "platenet/metrics.hpp"
#include "platenet/model.hpp"
#include "platenet/optim.hpp"
#include "platenet/trainer.hpp"

using namespace platenet;
namespace fs = std::filesystem;

namespace {

struct Check {
  bool ok = true;
  std::string detail;

  void expect(bool condition, const std::string& what) {
    if (!condition) {
      ok = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
  void note(const std::string& what) {
    if (!detail.empty()) detail += "; ";
    detail += what;
  }
};

fs::path fresh_dir(const char* name) {
  const fs::path dir = fs::temp_directory_path() / "platenet_acceptance" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<uint8_t> file_bytes(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), format, v);
  return buf;
}

Tensor random_uniform(const Shape& shape, Rng& rng, float lo, float hi) {
  Tensor t(shape);
  for (float& v : t.values()) v = rng.uniform(lo, hi);
  return t;
}

// ---------------------------------------------------------------------------
// Criteria
// ---------------------------------------------------------------------------

Check architecture_fidelity() {
  Check check;
  const Model model = Model::build(ModelSpec::standard(300), 123);
  const Summary summary = model.summary();
  const size_t params[] = {320, 0, 4624, 0, 0, 663680, 0, 8256, 0, 65};
  const Shape shapes[] = {{149, 149, 32}, {74, 74, 32}, {36, 36, 16}, {18, 18, 16},
                          {5184},         {128},        {128},        {64},
                          {64},           {1}};
  check.expect(summary.rows.size() == 10, "expected 10 rows");
  for (size_t i = 0; i < summary.rows.size() && i < 10; ++i) {
    check.expect(summary.rows[i].param_count == params[i],
                 "row " + std::to_string(i) + " params " +
                     std::to_string(summary.rows[i].param_count));
    check.expect(summary.rows[i].output_shape == shapes[i],
                 "row " + std::to_string(i) + " shape " +
                     summary.rows[i].output_shape.to_string());
  }
  check.expect(summary.total_params == 676945, "total " + std::to_string(summary.total_params));
  check.expect(summary.trainable_params == 676945, "trainable mismatch");
  check.expect(summary.non_trainable_params == 0, "non-trainable mismatch");
  check.note("total params 676,945");
  return check;
}

Check metrics_fidelity() {
  Check check;
  const ClassificationReport rep = report(ConfusionMatrix{94, 1, 0, 91});
  const std::string text = render_report(rep);
  const char* expected[] = {
      "1.0000    0.9895    0.9947        95",  // class 0
      "0.9891    1.0000    0.9945        91",  // class 1
      "0.9946       186",                      // accuracy
      "0.9946    0.9947    0.9946       186",  // macro avg
      "0.9947    0.9946    0.9946       186",  // weighted avg
  };
  for (const char* row : expected) {
    check.expect(text.find(row) != std::string::npos, std::string("missing \"") + row + "\"");
  }
  check.note("all ten displayed values reproduced");
  return check;
}

Check initial_loss_sanity() {
  Check check;
  Model model = Model::build(ModelSpec::standard(300), 123);
  Rng rng(2024);
  const int total = 256;
  const int chunk = 32;
  double loss_sum = 0.0;
  for (int start = 0; start < total; start += chunk) {
    const Tensor batch = random_uniform({chunk, 300, 300, 1}, rng, 0.0f, 1.0f);
    Tensor labels({chunk});
    for (float& y : labels.values()) y = rng.coin() ? 1.0f : 0.0f;
    const LossValue lv = bce(model.forward(batch, Mode::kInference), labels);
    loss_sum += static_cast<double>(lv.loss) * chunk;
  }
  const double mean = loss_sum / total;
  check.expect(std::abs(mean - std::log(2.0)) <= 0.05,
               "mean loss " + fmt("%.4f", mean) + " not within 0.05 of ln 2");
  check.note("mean initial loss " + fmt("%.4f", mean));
  return check;
}

double projection(const Tensor& t, const std::vector<float>& r) {
  double acc = 0.0;
  for (size_t i = 0; i < t.size(); ++i) acc += static_cast<double>(r[i]) * t[i];
  return acc;
}

Check gradient_correctness() {
  Check check;
  Rng rng(31337);

  // Dense layer.
  {
    Tensor input = random_uniform({2, 6}, rng, -1.0f, 1.0f);
    Tensor weights = random_uniform({6, 4}, rng, -1.0f, 1.0f);
    Tensor bias = random_uniform({4}, rng, -1.0f, 1.0f);
    std::vector<float> proj(8);
    for (float& c : proj) c = rng.uniform(-1.0f, 1.0f);
    Tensor grad_out({2, 4}, std::vector<float>(proj));
    const DenseGrads grads = dense_backward(input, weights, grad_out);
    const auto loss = [&] { return projection(dense_forward(input, weights, bias), proj); };
    const GradCheckReport rep = grad_check(
        loss, {{&input, &grads.input}, {&weights, &grads.weights}, {&bias, &grads.bias}});
    check.expect(rep.max_rel_error <= 1e-2,
                 "dense max rel error " + fmt("%.3g", rep.max_rel_error));
  }

  // Conv2D layer.
  {
    Tensor input = random_uniform({1, 8, 8, 2}, rng, -1.0f, 1.0f);
    Tensor weights = random_uniform({3, 3, 2, 3}, rng, -1.0f, 1.0f);
    Tensor bias = random_uniform({3}, rng, -1.0f, 1.0f);
    const Shape out_shape{1, 3, 3, 3};
    std::vector<float> proj(out_shape.element_count());
    for (float& c : proj) c = rng.uniform(-1.0f, 1.0f);
    const Tensor grad_out(out_shape, std::vector<float>(proj));
    const Conv2DGrads grads = conv2d_backward(input, weights, grad_out, 2);
    const auto loss = [&] {
      return projection(conv2d_forward(input, weights, bias, 2), proj);
    };
    const GradCheckReport rep = grad_check(
        loss, {{&input, &grads.input}, {&weights, &grads.weights}, {&bias, &grads.bias}});
    check.expect(rep.max_rel_error <= 1e-2,
                 "conv max rel error " + fmt("%.3g", rep.max_rel_error));
  }

  // MaxPool on tie-free input: a spread lattice keeps every window pair
  // separated by far more than the probe step.
  {
    Tensor input({1, 6, 6, 2});
    for (size_t i = 0; i < input.size(); ++i) {
      input[i] = static_cast<float>((i * 31) % 72) * 0.05f + rng.uniform(-0.005f, 0.005f);
    }
    const Shape out_shape{1, 3, 3, 2};
    std::vector<float> proj(out_shape.element_count());
    for (float& c : proj) c = rng.uniform(-1.0f, 1.0f);
    const MaxPoolOut fwd = maxpool_forward(input, 2, 2);
    const Tensor analytic =
        maxpool_backward(input.shape(), fwd.argmax, Tensor(out_shape, std::vector<float>(proj)));
    const auto loss = [&] { return projection(maxpool_forward(input, 2, 2).output, proj); };
    const GradCheckReport rep = grad_check(loss, {{&input, &analytic}});
    check.expect(rep.max_rel_error <= 1e-2,
                 "maxpool max rel error " + fmt("%.3g", rep.max_rel_error));
  }

  // Sigmoid + BCE composition wrt the logits.
  {
    Tensor logits = random_uniform({8, 1}, rng, -2.0f, 2.0f);
    Tensor labels({8});
    for (float& y : labels.values()) y = rng.coin() ? 1.0f : 0.0f;
    const Tensor probs = sigmoid(logits);
    const LossValue lv = bce(probs, labels);
    const Tensor analytic = sigmoid_backward(logits, lv.grad);
    const auto loss = [&] {
      return static_cast<double>(bce(sigmoid(logits), labels).loss);
    };
    const GradCheckReport rep = grad_check(loss, {{&logits, &analytic}});
    check.expect(rep.max_rel_error <= 1e-2,
                 "sigmoid+bce max rel error " + fmt("%.3g", rep.max_rel_error));
  }

  // Full small model at 32x32. Dropout stays out of the chain and probes
  // that cross a relu/pool decision boundary are excluded: finite
  // differences are invalid over a non-differentiable interval. The loss
  // side runs in widened precision (see oracles.hpp).
  {
    ModelSpec spec = ModelSpec::standard(32);
    std::erase_if(spec.layers, [](const LayerConfig& cfg) {
      return std::holds_alternative<DropoutConfig>(cfg);
    });
    Model model = Model::build(spec, 77);
    const Tensor batch = random_uniform({1, 32, 32, 1}, rng, 0.0f, 1.0f);
    const oracle::ModelGradCheck rep = oracle::model_grad_check(model, batch, 1.0f, 1e-3, 1e-2);
    check.expect(rep.max_rel_error <= 1e-2,
                 "full model max rel error " + fmt("%.3g", rep.max_rel_error));
    const size_t total = rep.checked + rep.skipped_boundary;
    check.expect(rep.skipped_boundary * 50 < total,
                 "too many boundary-crossing probes: " +
                     std::to_string(rep.skipped_boundary));
    check.note("full-model params checked: " + std::to_string(rep.checked) + " (" +
               std::to_string(rep.skipped_boundary) + " on decision boundaries)");
  }
  return check;
}

Check split_fidelity() {
  Check check;
  const fs::path root = fresh_dir("split_fidelity");
  // 465 + 465 images put 372 + 372 = 744 files under train/.
  synthesize({465, 465, 32, 7}, root);
  const DatasetIndex base = scan(root / "train");
  check.expect(base.entries.size() == 744,
               "expected 744 training files, got " + std::to_string(base.entries.size()));

  const DatasetIndex at_20 = split(base, 0.2, 123);
  check.expect(at_20.count(Split::kTraining) == 596,
               "0.2 training " + std::to_string(at_20.count(Split::kTraining)));
  check.expect(at_20.count(Split::kValidation) == 148,
               "0.2 validation " + std::to_string(at_20.count(Split::kValidation)));

  const DatasetIndex at_15 = split(base, 0.15, 123);
  check.expect(at_15.count(Split::kTraining) == 632,
               "0.15 training " + std::to_string(at_15.count(Split::kTraining)));
  check.expect(at_15.count(Split::kValidation) == 112,
               "0.15 validation " + std::to_string(at_15.count(Split::kValidation)));
  check.note("744 -> 596/148 at 0.2 and 632/112 at 0.15");
  return check;
}

Check determinism() {
  Check check;
  const fs::path data = fresh_dir("determinism_data");
  synthesize({20, 20, 64, 11}, data);

  const auto run = [&](const fs::path& dir) {
    DatasetIndex index = split(scan(data / "train"), 0.2, 123);
    LoaderOptions train_opts;
    train_opts.batch_size = 8;
    train_opts.image_height = 64;
    train_opts.image_width = 64;
    train_opts.shuffle = true;
    train_opts.augment = AugmentConfig{};
    train_opts.seed = 123;
    LoaderOptions val_opts = train_opts;
    val_opts.shuffle = false;
    val_opts.augment = std::nullopt;
    DirectoryLoader train_loader(index, Split::kTraining, train_opts);
    DirectoryLoader val_loader(index, Split::kValidation, val_opts);
    Model model = Model::build(ModelSpec::standard(64), 123);
    TrainConfig config;
    config.epochs = 3;
    config.checkpoint_path = dir / "model.pnw";
    const TrainResult result = train(model, train_loader, val_loader, config);
    export_history(result.history, dir / "history.tsv");
  };

  const fs::path a = fresh_dir("determinism_a");
  const fs::path b = fresh_dir("determinism_b");
  run(a);
  run(b);
  check.expect(file_bytes(a / "history.tsv") == file_bytes(b / "history.tsv"),
               "history files differ");
  check.expect(file_bytes(a / "model.pnw") == file_bytes(b / "model.pnw"),
               "checkpoint files differ");
  check.note("identical history and checkpoint bytes across runs");
  return check;
}

Check serialization() {
  Check check;
  Rng rng(4);
  Model model = Model::build(ModelSpec::standard(32), 15);
  const fs::path dir = fresh_dir("serialization");
  const fs::path path = dir / "model.pnw";
  model.save(path);

  Model loaded = Model::load(path);
  const Tensor batch = random_uniform({4, 32, 32, 1}, rng, 0.0f, 1.0f);
  const Tensor a = model.forward(batch, Mode::kInference);
  const Tensor b = loaded.forward(batch, Mode::kInference);
  check.expect(std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0,
               "round-trip outputs differ");

  auto bytes = file_bytes(path);
  auto truncated = bytes;
  truncated.resize(truncated.size() / 3);
  const fs::path bad = dir / "bad.pnw";
  std::ofstream(bad, std::ios::binary)
      .write(reinterpret_cast<const char*>(truncated.data()),
             static_cast<std::streamsize>(truncated.size()));
  bool rejected = false;
  try {
    Model::load(bad);
  } catch (const FormatError&) {
    rejected = true;
  }
  check.expect(rejected, "truncated file was not rejected");

  auto corrupted = bytes;
  corrupted[corrupted.size() / 2] ^= 0x10;
  std::ofstream(bad, std::ios::binary | std::ios::trunc)
      .write(reinterpret_cast<const char*>(corrupted.data()),
             static_cast<std::streamsize>(corrupted.size()));
  rejected = false;
  try {
    Model::load(bad);
  } catch (const FormatError&) {
    rejected = true;
  }
  check.expect(rejected, "corrupted file was not rejected");
  check.note("bit-exact round trip; truncation and corruption rejected");
  return check;
}

Check augmentation_fidelity() {
  Check check;
  Rng rng(8);

  // Degenerate config == passthrough, bit-exact.
  const Tensor image = random_uniform({16, 16, 1}, rng, 0.0f, 255.0f);
  Rng sample_rng(3);
  const AugmentParams identity = sample_params(AugmentConfig::none(), 16, 16, sample_rng);
  const Tensor a = apply_augment(image, identity);
  const Tensor b = passthrough(image);
  check.expect(std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0,
               "degenerate config is not passthrough");

  // 90-degree rotation against the hand-computed 3x3 oracle
  // (transpose, then reverse each row).
  const Tensor marker({3, 3, 1}, {1, 2, 3, 4, 5, 6, 7, 8, 9});
  AugmentParams rot;
  rot.rotation_deg = 90.0f;
  const Tensor rotated = apply_augment(marker, rot);
  const float expected[] = {7, 4, 1, 8, 5, 2, 9, 6, 3};
  for (int i = 0; i < 9; ++i) {
    const float want = static_cast<float>(static_cast<double>(expected[i]) * (1.0 / 255.0));
    check.expect(rotated[i] == want, "rotation mismatch at " + std::to_string(i));
  }

  // Brightness clamp and exact rescale endpoints.
  AugmentParams bright;
  bright.brightness = 1.25f;
  const Tensor clamped = apply_augment(Tensor({1, 1, 1}, {240.0f}), bright);
  check.expect(clamped[0] == 1.0f, "brightness clamp missed 1.0");
  const Tensor ends = passthrough(Tensor({2, 1, 1}, {255.0f, 0.0f}));
  check.expect(ends[0] == 1.0f, "255 -> 1.0 failed");
  check.expect(ends[1] == 0.0f, "0 -> 0.0 failed");
  check.note("identity, rotation oracle, clamp, rescale endpoints all exact");
  return check;
}

Check end_to_end_learnability() {
  Check check;
  const fs::path data = fresh_dir("e2e_data");
  synthesize({200, 200, 300, 123}, data);

  DatasetIndex index = split(scan(data / "train"), 0.2, 123);
  LoaderOptions train_opts;
  train_opts.batch_size = 64;
  train_opts.image_height = 300;
  train_opts.image_width = 300;
  train_opts.shuffle = true;
  train_opts.augment = AugmentConfig{};
  train_opts.seed = 123;
  LoaderOptions val_opts = train_opts;
  val_opts.shuffle = false;
  val_opts.augment = std::nullopt;
  DirectoryLoader train_loader(index, Split::kTraining, train_opts);
  DirectoryLoader val_loader(index, Split::kValidation, val_opts);

  Model model = Model::build(ModelSpec::standard(300), 123);
  TrainConfig config;
  config.epochs = 20;
  config.checkpoint_path = fresh_dir("e2e_run") / "model.pnw";
  TrainResult result = train(model, train_loader, val_loader, config);

  // Checkpointed validation losses must be strictly decreasing.
  float previous = std::numeric_limits<float>::infinity();
  for (int epoch : result.history.checkpoint_epochs) {
    const float loss = result.history.records[static_cast<size_t>(epoch - 1)].val_loss;
    check.expect(loss < previous, "checkpoint sequence not strictly decreasing");
    previous = loss;
  }

  const DatasetIndex test_index = scan(data / "test");
  DirectoryLoader test_loader(test_index, std::nullopt, val_opts);
  const EvalResult test = evaluate_split(result.best, test_loader);
  // Accuracy is a ratio of counts; compare in counts so that exactly 95%
  // clears an inclusive gate.
  const auto n = static_cast<double>(test_loader.example_count());
  const long correct = std::lround(static_cast<double>(test.accuracy) * n);
  check.expect(static_cast<double>(correct) >= 0.95 * n - 1e-9,
               "test accuracy " + fmt("%.4f", test.accuracy) + " below 0.95");
  check.note("test accuracy " + fmt("%.4f", test.accuracy) + " over " +
             std::to_string(test_loader.example_count()) + " images, " +
             std::to_string(result.history.checkpoint_epochs.size()) + " checkpoints");
  return check;
}

}  // namespace

int main() {
  using Clock = std::chrono::steady_clock;
  struct Criterion {
    const char* name;
    std::function<Check()> run;
  };
  const std::vector<Criterion> criteria = {
      {"architecture-fidelity", architecture_fidelity},
      {"metrics-fidelity", metrics_fidelity},
      {"initial-loss-sanity", initial_loss_sanity},
      {"gradient-correctness", gradient_correctness},
      {"split-fidelity", split_fidelity},
      {"determinism", determinism},
      {"serialization", serialization},
      {"augmentation-fidelity", augmentation_fidelity},
      {"end-to-end-learnability", end_to_end_learnability},
  };

  int failures = 0;
  for (const Criterion& criterion : criteria) {
    const auto start = Clock::now();
    Check check;
    try {
      check = criterion.run();
    } catch (const std::exception& e) {
      check.ok = false;
      check.detail = std::string("exception: ") + e.what();
    }
    const double seconds =
        std::chrono::duration<double>(Clock::now() - start).count();
    std::cout << (check.ok ? "[PASS] " : "[FAIL] ") << criterion.name << " ("
              << fmt("%.2f", seconds) << "s)"
              << (check.detail.empty() ? "" : " - " + check.detail) << "\n";
    std::cout.flush();
    failures += check.ok ? 0 : 1;
  }
  return failures;
}
