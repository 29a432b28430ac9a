#pragma once

#include <atomic>
#include <cstdint>
#include <string>
#include <vector>

#include "easter/augment.hpp"
#include "easter/ctc.hpp"
#include "easter/metrics.hpp"
#include "easter/model.hpp"
#include "easter/rng.hpp"
#include "easter/tensor.hpp"

namespace easter {

struct TrainingConfig {
  std::string train_manifest;
  std::string val_manifest;
  ModelConfig model;
  int batch_size = 8;
  std::int64_t max_steps = 1000;
  double step_size = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double grad_clip = 5.0;  // global norm; <= 0 disables clipping
  bool weighted_ctc = false;
  double alpha = 0.5;  // only read when weighted_ctc
  AugmentPipeline augment;
  std::int64_t eval_interval = 200;
  std::string checkpoint_dir;
  std::uint64_t seed = 0;
};

// Schema: train_manifest, val_manifest, model (nested model config), and the
// optional fields above; weighted_ctc_alpha is a number in (0, 1) or "off";
// augment is a pipeline array. Throws std::invalid_argument with the field.
TrainingConfig parse_training_config(const std::string& json_text);
void validate_training_config(const TrainingConfig& config);

struct DatasetSample {
  std::string path;  // resolved, loadable as-is
  std::string transcript;
};

// Reads a manifest and resolves image paths against the manifest's directory.
std::vector<DatasetSample> load_dataset(const std::string& manifest_path);

struct Batch {
  std::vector<Tensor> images;  // [input_height, padded_width] each, in [-1, 1]
  std::vector<std::int64_t> valid_widths;
  std::vector<std::int64_t> input_lengths;  // frames the lattice may use
  std::vector<std::vector<int>> labels;
  std::vector<std::string> ids;
  std::int64_t padded_width = 0;
};

// Loads, optionally augments, rescales to the model height, normalizes, and
// pads every image to the batch maximum width with background. `rng` seeds
// per-sample augmentation; both may be null to disable augmentation.
// Out-of-vocabulary transcripts raise an error naming the sample.
Batch make_batch(const std::vector<DatasetSample>& samples, const ModelConfig& model_config,
                 const AugmentPipeline* augment, Rng* rng);

// Columns [0, width) of a [H, W] tensor; trims batch padding before the
// forward pass so padded and unpadded runs compute identical lattices.
Tensor slice_cols(const Tensor& image, std::int64_t width);

class AdamOptimizer {
 public:
  AdamOptimizer() = default;
  AdamOptimizer(std::vector<Tensor> params, double step_size, double beta1 = 0.9,
                double beta2 = 0.999, double eps = 1e-8);

  void zero_grad();
  // One update from the accumulated gradients; missing gradients are zero.
  void step();
  std::int64_t step_count() const { return t_; }
  double step_size() const { return step_size_; }
  // Supports decay schedules; takes effect from the next step.
  void set_step_size(double step_size) { step_size_ = step_size; }

  // Global gradient norm; clip scales gradients so the norm is at most
  // max_norm and returns the pre-clip value.
  double grad_norm() const;
  double clip_grad_norm(double max_norm);

  void save(const std::string& path) const;
  // Moment shapes must match the current parameters.
  void load(const std::string& path);

 private:
  std::vector<Tensor> params_;
  std::vector<std::vector<float>> m_;
  std::vector<std::vector<float>> v_;
  double step_size_ = 1e-3;
  double beta1_ = 0.9;
  double beta2_ = 0.999;
  double eps_ = 1e-8;
  std::int64_t t_ = 0;
};

struct TrainStepResult {
  double loss = 0.0;       // mean over contributing samples
  double grad_norm = 0.0;  // pre-clip global norm
  int used = 0;
  int skipped = 0;  // infeasible alignments
};

struct FitOptions {
  bool resume = false;
  const std::atomic<bool>* stop = nullptr;  // checked once per step
};

struct FitResult {
  std::int64_t final_step = 0;
  double best_val_cer = 1.0;
  double final_val_cer = 1.0;
  double final_val_wer = 1.0;
  std::int64_t skipped_samples = 0;
  bool stopped_early = false;  // stop flag, not an error
  std::string metrics_csv;
  std::string best_checkpoint;
  std::string last_checkpoint;
};

class Trainer {
 public:
  explicit Trainer(TrainingConfig config);

  EasterModel& model() { return model_; }
  AdamOptimizer& optimizer() { return optimizer_; }
  const TrainingConfig& config() const { return config_; }
  std::int64_t step() const { return step_; }

  // One optimizer update from the mean per-sample loss. Infeasible samples
  // are skipped and counted; a non-finite loss or gradient writes a
  // diagnostics JSON next to the checkpoints and throws.
  TrainStepResult train_step(const Batch& batch);

  // Greedy-decode evaluation with dropout off.
  EvalReport evaluate_on(const std::vector<DatasetSample>& samples);

  FitResult fit(const FitOptions& options = {});

  void save_state(const std::string& dir) const;
  void load_state(const std::string& dir);

 private:
  TrainingConfig config_;
  EasterModel model_;
  AdamOptimizer optimizer_;
  std::int64_t step_ = 0;
  double best_val_cer_ = 1e30;  // sentinel until the first evaluation
};

}  // namespace easter
