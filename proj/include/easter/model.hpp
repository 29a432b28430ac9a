#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "easter/ctc.hpp"
#include "easter/rng.hpp"
#include "easter/tensor.hpp"

namespace easter {

// One row of the architecture table: a stack of Conv1D-BN-ReLU-Dropout
// sub-blocks sharing hyperparameters. The stride applies to the first
// sub-block of the stack; the rest run at stride 1.
struct BlockSpec {
  int sub_blocks = 1;
  int kernel = 1;
  int filters = 1;
  float dropout = 0.0f;
  int dilation = 1;
  int stride = 1;
  bool residual = false;
};

// Ordered blocks: one preprocessing block, the body, then three
// postprocessing blocks, the last of which is the classifier projection that
// feeds log_softmax (no norm or activation after it).
struct ModelConfig {
  std::vector<BlockSpec> blocks;
  int input_height = 40;
  Vocabulary vocab;
};

// Throws std::invalid_argument naming the violated constraint.
void validate_config(const ModelConfig& config);

// The published 14-sub-block table for a given vocabulary.
ModelConfig default_config_3x3(const Vocabulary& vocab);

// Deeper 20-sub-block residual variant. The published description gives only
// depth and parameter count, so the filter/kernel schedule here is this
// project's reconstruction.
ModelConfig config_5x3(const Vocabulary& vocab);

// Scales every filter count except the classifier's by `scale` (minimum 1).
ModelConfig scale_filters(ModelConfig config, double scale);

// JSON round-trip. Parsing accepts either explicit {"blocks": [...]} or the
// shorthand {"arch": "3x3"|"5x3", "vocab": "...", "filter_scale": 0.5}.
ModelConfig parse_model_config(const std::string& json_text);
std::string model_config_to_json(const ModelConfig& config);

class EasterModel {
 public:
  EasterModel() = default;

  static EasterModel build(const ModelConfig& config, Rng& rng);

  const ModelConfig& config() const { return config_; }
  bool training() const { return training_; }
  void set_training(bool flag) { training_ = flag; }

  // image: [input_height, W] tensor normalized to [-1, 1]. In training mode
  // dropout draws from `dropout_rng` (required) and batch norm updates its
  // running stats.
  LogProbLattice forward_sample(const Tensor& image, Rng* dropout_rng = nullptr);

  // Per-sample forward over a batch; padding never leaks across samples
  // because each sample runs at its own width.
  std::vector<LogProbLattice> forward(const std::vector<Tensor>& images,
                                      Rng* dropout_rng = nullptr);

  // Trainable parameters in a stable order (conv weights/biases, batch norm
  // affine, residual projections). Running stats are buffers, not parameters.
  std::vector<std::pair<std::string, Tensor>> named_parameters();
  std::int64_t param_count() const;

  // T' for an input of the given width under this config's strides.
  std::int64_t output_length(std::int64_t width) const;

  void save_checkpoint(const std::string& path) const;
  // expect_vocab, when given, must match the embedded vocabulary.
  static EasterModel load_checkpoint(const std::string& path,
                                     const Vocabulary* expect_vocab = nullptr);

  // Architecture rows for display: name, sub_blocks, kernel, filters,
  // dropout, dilation, stride, residual.
  struct LayerRow {
    std::string name;
    BlockSpec spec;
  };
  std::vector<LayerRow> layer_rows() const;

 private:
  struct SubBlock {
    Tensor weight;  // [out, in, k]
    Tensor bias;
    Tensor gamma;
    Tensor beta;
    BatchNormStats stats;
    int stride = 1;
    int dilation = 1;
    float dropout = 0.0f;
    bool classifier = false;  // no norm, activation, or dropout
  };
  struct Block {
    std::vector<SubBlock> subs;
    bool residual = false;
    // Skip projection when the block is residual and channels change.
    bool has_projection = false;
    Tensor proj_weight;
    Tensor proj_bias;
    int proj_stride = 1;
  };

  ModelConfig config_;
  std::vector<Block> blocks_;
  bool training_ = false;

  friend struct CheckpointCodec;
};

}  // namespace easter
