#include "easter/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <map>
#include <sstream>

namespace easter {

using ordered_json = nlohmann::ordered_json;

void validate_config(const ModelConfig& config) {
  if (config.input_height < 1) throw std::invalid_argument("input_height must be >= 1");
  if (config.vocab.size() < 1) throw std::invalid_argument("vocabulary must be nonempty");
  if (config.blocks.size() < 4) {
    throw std::invalid_argument(
        "config needs one preprocessing block, a body, and three postprocessing blocks");
  }
  for (std::size_t i = 0; i < config.blocks.size(); ++i) {
    const BlockSpec& b = config.blocks[i];
    const std::string where = "block " + std::to_string(i) + ": ";
    if (b.sub_blocks < 1) throw std::invalid_argument(where + "sub_blocks must be >= 1");
    if (b.kernel < 1) throw std::invalid_argument(where + "kernel must be >= 1");
    if (b.filters < 1) throw std::invalid_argument(where + "filters must be >= 1");
    if (b.dropout < 0.0f || b.dropout >= 1.0f) {
      throw std::invalid_argument(where + "dropout must lie in [0, 1)");
    }
    if (b.dilation < 1) throw std::invalid_argument(where + "dilation must be >= 1");
    if (b.stride < 1) throw std::invalid_argument(where + "stride must be >= 1");
  }
  if (config.blocks.back().filters != config.vocab.num_classes()) {
    throw std::invalid_argument("final block filters must equal vocabulary size + 1 (" +
                                std::to_string(config.vocab.num_classes()) + "), got " +
                                std::to_string(config.blocks.back().filters));
  }
}

ModelConfig default_config_3x3(const Vocabulary& vocab) {
  ModelConfig c;
  c.vocab = vocab;
  c.input_height = 40;
  c.blocks = {
      {2, 3, 64, 0.2f, 1, 2, false},                       // preprocess
      {3, 3, 128, 0.2f, 1, 1, false},                      // body 1
      {3, 4, 128, 0.3f, 1, 1, false},                      // body 2
      {3, 6, 128, 0.3f, 1, 1, false},                      // body 3
      {1, 7, 256, 0.4f, 2, 1, false},                      // postprocess I
      {1, 1, 512, 0.4f, 1, 1, false},                      // postprocess II
      {1, 1, vocab.num_classes(), 0.0f, 1, 1, false},      // postprocess III
  };
  return c;
}

ModelConfig config_5x3(const Vocabulary& vocab) {
  ModelConfig c;
  c.vocab = vocab;
  c.input_height = 40;
  c.blocks = {
      {2, 3, 128, 0.2f, 1, 2, false},
      {3, 3, 128, 0.2f, 1, 1, true},
      {3, 4, 128, 0.2f, 1, 1, true},
      {3, 5, 256, 0.3f, 1, 1, true},
      {3, 6, 256, 0.3f, 1, 1, true},
      {3, 7, 512, 0.4f, 1, 1, true},
      {1, 7, 512, 0.4f, 2, 1, false},
      {1, 1, 1024, 0.4f, 1, 1, false},
      {1, 1, vocab.num_classes(), 0.0f, 1, 1, false},
  };
  return c;
}

ModelConfig scale_filters(ModelConfig config, double scale) {
  if (scale <= 0.0) throw std::invalid_argument("filter scale must be positive");
  for (std::size_t i = 0; i + 1 < config.blocks.size(); ++i) {
    const int scaled = static_cast<int>(std::lround(config.blocks[i].filters * scale));
    config.blocks[i].filters = std::max(1, scaled);
  }
  return config;
}

EasterModel EasterModel::build(const ModelConfig& config, Rng& rng) {
  validate_config(config);
  EasterModel model;
  model.config_ = config;

  int in_channels = config.input_height;
  for (std::size_t bi = 0; bi < config.blocks.size(); ++bi) {
    const BlockSpec& spec = config.blocks[bi];
    Block block;
    block.residual = spec.residual;
    const int block_in = in_channels;
    for (int j = 0; j < spec.sub_blocks; ++j) {
      SubBlock sub;
      sub.stride = j == 0 ? spec.stride : 1;
      sub.dilation = spec.dilation;
      sub.dropout = spec.dropout;
      sub.classifier = bi + 1 == config.blocks.size() && j + 1 == spec.sub_blocks;
      const float bound = 1.0f / std::sqrt(static_cast<float>(in_channels * spec.kernel));
      sub.weight =
          Tensor::uniform({spec.filters, in_channels, spec.kernel}, -bound, bound, rng, true);
      sub.bias = Tensor::uniform({spec.filters}, -bound, bound, rng, true);
      if (!sub.classifier) {
        sub.gamma = Tensor::full({spec.filters}, 1.0f, true);
        sub.beta = Tensor::zeros({spec.filters}, true);
        sub.stats = BatchNormStats(spec.filters);
      }
      block.subs.push_back(std::move(sub));
      in_channels = spec.filters;
    }
    if (spec.residual && (block_in != spec.filters || spec.stride != 1)) {
      block.has_projection = true;
      block.proj_stride = spec.stride;
      const float bound = 1.0f / std::sqrt(static_cast<float>(block_in));
      block.proj_weight = Tensor::uniform({spec.filters, block_in, 1}, -bound, bound, rng, true);
      block.proj_bias = Tensor::uniform({spec.filters}, -bound, bound, rng, true);
    }
    model.blocks_.push_back(std::move(block));
  }
  return model;
}

LogProbLattice EasterModel::forward_sample(const Tensor& image, Rng* dropout_rng) {
  if (!image.defined() || image.ndim() != 2 || image.dim(0) != config_.input_height) {
    throw std::invalid_argument("model input must be [" + std::to_string(config_.input_height) +
                                ", W], got " +
                                (image.defined() ? shape_to_string(image.shape()) : "nothing"));
  }
  Tensor x = image;
  for (Block& block : blocks_) {
    const Tensor block_in = x;
    for (std::size_t j = 0; j < block.subs.size(); ++j) {
      SubBlock& sub = block.subs[j];
      x = conv1d(x, sub.weight, sub.bias, sub.stride, sub.dilation);
      if (sub.classifier) continue;
      if (training_) {
        x = batch_norm(x, sub.gamma, sub.beta, sub.stats, true);
      } else {
        // The forward pass is per sample, so training normalizes every sample
        // by its own time-axis statistics; inference must do the same or the
        // activations shift distribution. A scratch copy keeps the tracked
        // running statistics untouched and the model shareable by readers.
        BatchNormStats scratch = sub.stats;
        x = batch_norm(x, sub.gamma, sub.beta, scratch, true);
      }
      if (block.residual && j + 1 == block.subs.size()) {
        Tensor skip = block.has_projection
                          ? conv1d(block_in, block.proj_weight, block.proj_bias,
                                   block.proj_stride, 1)
                          : block_in;
        x = add(x, skip);
      }
      x = relu(x);
      if (sub.dropout > 0.0f && training_) {
        if (!dropout_rng) {
          throw std::invalid_argument("training-mode forward needs a dropout rng");
        }
        x = dropout(x, sub.dropout, true, *dropout_rng);
      }
    }
  }
  Tensor lattice = log_softmax(transpose2d(x));
  return LogProbLattice(lattice, lattice.dim(0));
}

std::vector<LogProbLattice> EasterModel::forward(const std::vector<Tensor>& images,
                                                 Rng* dropout_rng) {
  std::vector<LogProbLattice> out;
  out.reserve(images.size());
  for (const Tensor& img : images) out.push_back(forward_sample(img, dropout_rng));
  return out;
}

std::vector<std::pair<std::string, Tensor>> EasterModel::named_parameters() {
  std::vector<std::pair<std::string, Tensor>> params;
  for (std::size_t bi = 0; bi < blocks_.size(); ++bi) {
    Block& block = blocks_[bi];
    const std::string bp = "block" + std::to_string(bi);
    for (std::size_t j = 0; j < block.subs.size(); ++j) {
      SubBlock& sub = block.subs[j];
      const std::string sp = bp + ".sub" + std::to_string(j);
      params.emplace_back(sp + ".conv.weight", sub.weight);
      params.emplace_back(sp + ".conv.bias", sub.bias);
      if (!sub.classifier) {
        params.emplace_back(sp + ".bn.gamma", sub.gamma);
        params.emplace_back(sp + ".bn.beta", sub.beta);
      }
    }
    if (block.has_projection) {
      params.emplace_back(bp + ".skip.weight", block.proj_weight);
      params.emplace_back(bp + ".skip.bias", block.proj_bias);
    }
  }
  return params;
}

std::int64_t EasterModel::param_count() const {
  std::int64_t count = 0;
  for (const Block& block : blocks_) {
    for (const SubBlock& sub : block.subs) {
      count += sub.weight.numel() + sub.bias.numel();
      if (!sub.classifier) count += sub.gamma.numel() + sub.beta.numel();
    }
    if (block.has_projection) count += block.proj_weight.numel() + block.proj_bias.numel();
  }
  return count;
}

std::int64_t EasterModel::output_length(std::int64_t width) const {
  std::int64_t len = width;
  for (const BlockSpec& spec : config_.blocks) {
    len = (len - 1) / spec.stride + 1;  // only the first sub-block strides
  }
  return len;
}

std::vector<EasterModel::LayerRow> EasterModel::layer_rows() const {
  std::vector<LayerRow> rows;
  const std::size_t n = config_.blocks.size();
  static const char* kRoman[] = {"I", "II", "III"};
  for (std::size_t i = 0; i < n; ++i) {
    LayerRow row;
    if (i == 0) {
      row.name = "Preprocess";
    } else if (i + 3 < n) {
      row.name = "Block-" + std::to_string(i);
    } else {
      row.name = std::string("Postprocess-") + kRoman[i - (n - 3)];
    }
    row.spec = config_.blocks[i];
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

ordered_json config_to_json(const ModelConfig& config) {
  ordered_json j;
  j["input_height"] = config.input_height;
  j["vocab"] = config.vocab.chars();
  j["blocks"] = ordered_json::array();
  for (const BlockSpec& b : config.blocks) {
    ordered_json jb;
    jb["sub_blocks"] = b.sub_blocks;
    jb["kernel"] = b.kernel;
    jb["filters"] = b.filters;
    jb["dropout"] = b.dropout;
    jb["dilation"] = b.dilation;
    jb["stride"] = b.stride;
    jb["residual"] = b.residual;
    j["blocks"].push_back(std::move(jb));
  }
  return j;
}

ModelConfig config_from_json(const ordered_json& j) {
  ModelConfig config;
  config.input_height = j.at("input_height").get<int>();
  config.vocab = Vocabulary(j.at("vocab").get<std::string>());
  for (const auto& jb : j.at("blocks")) {
    BlockSpec b;
    b.sub_blocks = jb.at("sub_blocks").get<int>();
    b.kernel = jb.at("kernel").get<int>();
    b.filters = jb.at("filters").get<int>();
    b.dropout = jb.at("dropout").get<float>();
    b.dilation = jb.at("dilation").get<int>();
    b.stride = jb.at("stride").get<int>();
    b.residual = jb.at("residual").get<bool>();
    config.blocks.push_back(b);
  }
  return config;
}

constexpr char kMagic[4] = {'E', 'S', 'T', 'R'};
constexpr std::uint32_t kVersion = 1;

void write_bytes(std::ostream& out, const void* data, std::size_t n) {
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
}

template <typename T>
void write_pod(std::ostream& out, T value) {
  write_bytes(out, &value, sizeof(T));
}

void read_bytes(std::istream& in, void* data, std::size_t n, const std::string& path) {
  in.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) {
    throw std::runtime_error(path + ": corrupt checkpoint (truncated)");
  }
}

template <typename T>
T read_pod(std::istream& in, const std::string& path) {
  T value;
  read_bytes(in, &value, sizeof(T), path);
  return value;
}

void write_array(std::ostream& out, const std::string& name, const Shape& shape,
                 const std::vector<float>& data) {
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
  write_bytes(out, name.data(), name.size());
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(shape.size()));
  for (std::int64_t d : shape) write_pod<std::int64_t>(out, d);
  write_bytes(out, data.data(), data.size() * sizeof(float));
}

struct NamedArray {
  Shape shape;
  std::vector<float> data;
};

NamedArray read_array(std::istream& in, std::string& name, const std::string& path) {
  const auto name_len = read_pod<std::uint32_t>(in, path);
  if (name_len > 4096) throw std::runtime_error(path + ": corrupt checkpoint (bad name)");
  name.resize(name_len);
  read_bytes(in, name.data(), name_len, path);
  NamedArray arr;
  const auto ndim = read_pod<std::uint32_t>(in, path);
  if (ndim > 8) throw std::runtime_error(path + ": corrupt checkpoint (bad rank)");
  std::int64_t numel = 1;
  for (std::uint32_t i = 0; i < ndim; ++i) {
    const auto d = read_pod<std::int64_t>(in, path);
    if (d < 1 || d > (1 << 30)) throw std::runtime_error(path + ": corrupt checkpoint (bad dim)");
    arr.shape.push_back(d);
    numel *= d;
  }
  arr.data.resize(static_cast<std::size_t>(numel));
  read_bytes(in, arr.data.data(), arr.data.size() * sizeof(float), path);
  return arr;
}

}  // namespace

struct CheckpointCodec {
  // name -> (shape, float storage reference) for every persisted array.
  static std::vector<std::pair<std::string, std::vector<float>*>> buffers(EasterModel& m) {
    std::vector<std::pair<std::string, std::vector<float>*>> out;
    for (std::size_t bi = 0; bi < m.blocks_.size(); ++bi) {
      auto& block = m.blocks_[bi];
      const std::string bp = "block" + std::to_string(bi);
      for (std::size_t j = 0; j < block.subs.size(); ++j) {
        auto& sub = block.subs[j];
        const std::string sp = bp + ".sub" + std::to_string(j);
        out.emplace_back(sp + ".conv.weight", &sub.weight.values());
        out.emplace_back(sp + ".conv.bias", &sub.bias.values());
        if (!sub.classifier) {
          out.emplace_back(sp + ".bn.gamma", &sub.gamma.values());
          out.emplace_back(sp + ".bn.beta", &sub.beta.values());
          out.emplace_back(sp + ".bn.running_mean", &sub.stats.running_mean);
          out.emplace_back(sp + ".bn.running_var", &sub.stats.running_var);
        }
      }
      if (block.has_projection) {
        out.emplace_back(bp + ".skip.weight", &block.proj_weight.values());
        out.emplace_back(bp + ".skip.bias", &block.proj_bias.values());
      }
    }
    return out;
  }

  static Shape shape_of(EasterModel& m, const std::string& name, std::vector<float>* storage) {
    // Tensors know their shapes; raw stat vectors are 1-D.
    for (auto& [pname, tensor] : m.named_parameters()) {
      if (pname == name) return tensor.shape();
    }
    (void)storage;
    return {static_cast<std::int64_t>(storage->size())};
  }
};

void EasterModel::save_checkpoint(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  write_bytes(out, kMagic, 4);
  write_pod<std::uint32_t>(out, kVersion);
  const std::string json_text = config_to_json(config_).dump();
  write_pod<std::uint64_t>(out, json_text.size());
  write_bytes(out, json_text.data(), json_text.size());

  auto& self = const_cast<EasterModel&>(*this);
  auto arrays = CheckpointCodec::buffers(self);
  write_pod<std::uint64_t>(out, arrays.size());
  for (auto& [name, storage] : arrays) {
    write_array(out, name, CheckpointCodec::shape_of(self, name, storage), *storage);
  }
  if (!out) throw std::runtime_error(path + ": write failed");
}

EasterModel EasterModel::load_checkpoint(const std::string& path,
                                         const Vocabulary* expect_vocab) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path + ": cannot open checkpoint");
  char magic[4];
  read_bytes(in, magic, 4, path);
  if (std::memcmp(magic, kMagic, 4) != 0) {
    throw std::runtime_error(path + ": corrupt checkpoint (bad magic)");
  }
  const auto version = read_pod<std::uint32_t>(in, path);
  if (version != kVersion) {
    throw std::runtime_error(path + ": unsupported checkpoint version " +
                             std::to_string(version));
  }
  const auto json_len = read_pod<std::uint64_t>(in, path);
  if (json_len > (1u << 20)) throw std::runtime_error(path + ": corrupt checkpoint (bad header)");
  std::string json_text(json_len, '\0');
  read_bytes(in, json_text.data(), json_len, path);

  ModelConfig config;
  try {
    config = config_from_json(ordered_json::parse(json_text));
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path + ": corrupt checkpoint (config: " + e.what() + ")");
  }
  if (expect_vocab && expect_vocab->chars() != config.vocab.chars()) {
    throw std::runtime_error(path + ": checkpoint vocabulary \"" + config.vocab.chars() +
                             "\" conflicts with requested \"" + expect_vocab->chars() + "\"");
  }

  Rng dummy(0);
  EasterModel model = build(config, dummy);
  auto arrays = CheckpointCodec::buffers(model);
  std::map<std::string, std::vector<float>*> by_name;
  for (auto& [name, storage] : arrays) by_name[name] = storage;

  const auto count = read_pod<std::uint64_t>(in, path);
  if (count != arrays.size()) {
    throw std::runtime_error(path + ": corrupt checkpoint (expected " +
                             std::to_string(arrays.size()) + " arrays, found " +
                             std::to_string(count) + ")");
  }
  for (std::uint64_t i = 0; i < count; ++i) {
    std::string name;
    NamedArray arr = read_array(in, name, path);
    auto it = by_name.find(name);
    if (it == by_name.end()) {
      throw std::runtime_error(path + ": corrupt checkpoint (unknown array " + name + ")");
    }
    if (arr.data.size() != it->second->size()) {
      throw std::runtime_error(path + ": corrupt checkpoint (size mismatch for " + name + ")");
    }
    *it->second = std::move(arr.data);
    by_name.erase(it);
  }
  if (!by_name.empty()) {
    throw std::runtime_error(path + ": corrupt checkpoint (missing array " +
                             by_name.begin()->first + ")");
  }
  return model;
}

ModelConfig parse_model_config(const std::string& json_text) {
  ordered_json j = ordered_json::parse(json_text);
  if (j.contains("blocks")) {
    ModelConfig config = config_from_json(j);
    validate_config(config);
    return config;
  }
  const Vocabulary vocab(j.at("vocab").get<std::string>());
  const std::string arch = j.value("arch", "3x3");
  ModelConfig config;
  if (arch == "3x3") {
    config = default_config_3x3(vocab);
  } else if (arch == "5x3") {
    config = config_5x3(vocab);
  } else {
    throw std::invalid_argument("unknown arch \"" + arch + "\" (expected 3x3 or 5x3)");
  }
  if (j.contains("filter_scale")) {
    config = scale_filters(config, j.at("filter_scale").get<double>());
  }
  if (j.contains("input_height")) config.input_height = j.at("input_height").get<int>();
  validate_config(config);
  return config;
}

std::string model_config_to_json(const ModelConfig& config) {
  return config_to_json(config).dump(2);
}

}  // namespace easter
