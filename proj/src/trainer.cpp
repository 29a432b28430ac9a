#include "easter/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "easter/datagen.hpp"
#include "easter/image.hpp"

namespace easter {
namespace {

namespace fs = std::filesystem;

// Stream tags hashed with the base seed so every consumer of randomness has
// its own reproducible lane.
constexpr std::uint64_t kStreamModelInit = 1;
constexpr std::uint64_t kStreamEpochOrder = 2;
constexpr std::uint64_t kStreamAugment = 3;
constexpr std::uint64_t kStreamDropout = 4;

constexpr std::uint32_t kOptimMagic = 0x4f545345u;  // "ESTO"
constexpr std::uint32_t kOptimVersion = 1;

template <typename T>
void write_pod(std::ostream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in, const std::string& path) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw std::runtime_error(path + ": corrupt optimizer state (truncated)");
  return value;
}

double json_number(const nlohmann::json& j, const std::string& key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number()) {
    throw std::invalid_argument("training config: " + key + " must be a number");
  }
  return j.at(key).get<double>();
}

// T' under the config's strides; each block strides on its first sub-block.
std::int64_t lattice_frames(const ModelConfig& config, std::int64_t width) {
  std::int64_t len = width;
  for (const BlockSpec& spec : config.blocks) len = (len - 1) / spec.stride + 1;
  return len;
}

Tensor load_image_tensor(const DatasetSample& sample, int input_height,
                         const AugmentPipeline* augment, std::uint64_t augment_seed) {
  Image img = read_image(sample.path);
  if (augment && !augment->ops.empty()) img = apply(*augment, img, augment_seed);
  img = resize_to_height(img, input_height);
  return image_to_tensor(img);
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

}  // namespace

TrainingConfig parse_training_config(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("training config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("training config must be a JSON object");

  TrainingConfig cfg;
  for (const char* key : {"train_manifest", "val_manifest", "checkpoint_dir"}) {
    if (!j.contains(key) || !j.at(key).is_string()) {
      throw std::invalid_argument(std::string("training config: missing string field '") + key +
                                  "'");
    }
  }
  cfg.train_manifest = j.at("train_manifest").get<std::string>();
  cfg.val_manifest = j.at("val_manifest").get<std::string>();
  cfg.checkpoint_dir = j.at("checkpoint_dir").get<std::string>();

  if (!j.contains("model")) throw std::invalid_argument("training config: missing 'model'");
  cfg.model = parse_model_config(j.at("model").dump());

  cfg.batch_size = static_cast<int>(json_number(j, "batch_size", cfg.batch_size));
  cfg.max_steps = static_cast<std::int64_t>(json_number(j, "max_steps", static_cast<double>(cfg.max_steps)));
  cfg.step_size = json_number(j, "step_size", cfg.step_size);
  cfg.beta1 = json_number(j, "beta1", cfg.beta1);
  cfg.beta2 = json_number(j, "beta2", cfg.beta2);
  cfg.grad_clip = json_number(j, "grad_clip", cfg.grad_clip);
  cfg.eval_interval = static_cast<std::int64_t>(
      json_number(j, "eval_interval", static_cast<double>(cfg.eval_interval)));
  cfg.seed = j.value("seed", std::uint64_t{0});

  if (j.contains("weighted_ctc_alpha")) {
    const auto& a = j.at("weighted_ctc_alpha");
    if (a.is_string()) {
      if (a.get<std::string>() != "off") {
        throw std::invalid_argument(
            "training config: weighted_ctc_alpha must be a number in (0, 1) or \"off\"");
      }
    } else if (a.is_number()) {
      cfg.weighted_ctc = true;
      cfg.alpha = a.get<double>();
    } else {
      throw std::invalid_argument(
          "training config: weighted_ctc_alpha must be a number in (0, 1) or \"off\"");
    }
  }

  if (j.contains("augment")) cfg.augment = parse_augment_pipeline(j.at("augment").dump());

  validate_training_config(cfg);
  return cfg;
}

void validate_training_config(const TrainingConfig& config) {
  if (config.train_manifest.empty()) {
    throw std::invalid_argument("training config: train_manifest must not be empty");
  }
  if (config.val_manifest.empty()) {
    throw std::invalid_argument("training config: val_manifest must not be empty");
  }
  if (config.checkpoint_dir.empty()) {
    throw std::invalid_argument("training config: checkpoint_dir must not be empty");
  }
  if (config.batch_size < 1) {
    throw std::invalid_argument("training config: batch_size must be >= 1");
  }
  if (!(config.step_size > 0.0)) {
    throw std::invalid_argument("training config: step_size must be > 0");
  }
  if (config.max_steps < 1) {
    throw std::invalid_argument("training config: max_steps must be >= 1");
  }
  if (config.eval_interval < 1) {
    throw std::invalid_argument("training config: eval_interval must be >= 1");
  }
  if (config.weighted_ctc && !(config.alpha > 0.0 && config.alpha < 1.0)) {
    throw std::invalid_argument("training config: weighted_ctc_alpha must lie in (0, 1)");
  }
  validate_config(config.model);
}

std::vector<DatasetSample> load_dataset(const std::string& manifest_path) {
  const auto entries = read_manifest(manifest_path);
  const fs::path base = fs::path(manifest_path).parent_path();
  std::vector<DatasetSample> samples;
  samples.reserve(entries.size());
  for (const auto& e : entries) {
    samples.push_back({(base / e.path).string(), e.transcript});
  }
  return samples;
}

Tensor slice_cols(const Tensor& image, std::int64_t width) {
  if (image.ndim() != 2 || width < 1 || width > image.dim(1)) {
    throw std::invalid_argument("slice_cols: width out of range");
  }
  if (width == image.dim(1)) return image;
  const std::int64_t rows = image.dim(0);
  const std::int64_t full = image.dim(1);
  std::vector<float> data(static_cast<std::size_t>(rows * width));
  const float* src = image.data();
  for (std::int64_t r = 0; r < rows; ++r) {
    std::copy_n(src + r * full, width, data.begin() + r * width);
  }
  return Tensor::from({rows, width}, std::move(data));
}

Batch make_batch(const std::vector<DatasetSample>& samples, const ModelConfig& model_config,
                 const AugmentPipeline* augment, Rng* rng) {
  if (samples.empty()) throw std::invalid_argument("make_batch: no samples");
  Batch batch;
  std::vector<Tensor> raw;
  raw.reserve(samples.size());
  for (const auto& sample : samples) {
    const std::uint64_t aug_seed = rng ? rng->bits() : 0;
    raw.push_back(load_image_tensor(sample, model_config.input_height,
                                    rng ? augment : nullptr, aug_seed));
    try {
      batch.labels.push_back(model_config.vocab.encode(sample.transcript));
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error("sample " + sample.path + ": " + e.what());
    }
    batch.ids.push_back(sample.path);
    const std::int64_t width = raw.back().dim(1);
    batch.valid_widths.push_back(width);
    batch.input_lengths.push_back(lattice_frames(model_config, width));
    batch.padded_width = std::max(batch.padded_width, width);
  }
  for (const Tensor& img : raw) {
    if (img.dim(1) == batch.padded_width) {
      batch.images.push_back(img);
      continue;
    }
    // Background after normalization is +1.
    Tensor padded = Tensor::full({img.dim(0), batch.padded_width}, 1.0f);
    for (std::int64_t r = 0; r < img.dim(0); ++r) {
      std::copy_n(img.data() + r * img.dim(1), img.dim(1),
                  padded.data() + r * batch.padded_width);
    }
    batch.images.push_back(padded);
  }
  return batch;
}

AdamOptimizer::AdamOptimizer(std::vector<Tensor> params, double step_size, double beta1,
                             double beta2, double eps)
    : params_(std::move(params)), step_size_(step_size), beta1_(beta1), beta2_(beta2), eps_(eps) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const Tensor& p : params_) {
    m_.emplace_back(p.numel(), 0.0f);
    v_.emplace_back(p.numel(), 0.0f);
  }
}

void AdamOptimizer::zero_grad() {
  for (Tensor& p : params_) p.zero_grad();
}

double AdamOptimizer::grad_norm() const {
  double total = 0.0;
  for (const Tensor& p : params_) {
    if (!p.has_grad()) continue;
    for (float g : p.impl()->grad) total += static_cast<double>(g) * g;
  }
  return std::sqrt(total);
}

double AdamOptimizer::clip_grad_norm(double max_norm) {
  const double norm = grad_norm();
  if (norm > max_norm && norm > 0.0) {
    const float factor = static_cast<float>(max_norm / norm);
    for (Tensor& p : params_) {
      if (!p.has_grad()) continue;
      for (float& g : p.grad()) g *= factor;
    }
  }
  return norm;
}

void AdamOptimizer::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Tensor& p = params_[i];
    const std::size_t n = static_cast<std::size_t>(p.numel());
    const float* grad = p.has_grad() ? p.impl()->grad.data() : nullptr;
    float* value = p.data();
    for (std::size_t j = 0; j < n; ++j) {
      const double g = grad ? grad[j] : 0.0;
      const double m = beta1_ * m_[i][j] + (1.0 - beta1_) * g;
      const double v = beta2_ * v_[i][j] + (1.0 - beta2_) * g * g;
      m_[i][j] = static_cast<float>(m);
      v_[i][j] = static_cast<float>(v);
      const double update = step_size_ * (m / bc1) / (std::sqrt(v / bc2) + eps_);
      value[j] = static_cast<float>(value[j] - update);
    }
  }
}

void AdamOptimizer::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  write_pod(out, kOptimMagic);
  write_pod(out, kOptimVersion);
  write_pod(out, t_);
  write_pod(out, static_cast<std::uint64_t>(params_.size()));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    write_pod(out, static_cast<std::uint64_t>(m_[i].size()));
    out.write(reinterpret_cast<const char*>(m_[i].data()),
              static_cast<std::streamsize>(m_[i].size() * sizeof(float)));
    out.write(reinterpret_cast<const char*>(v_[i].data()),
              static_cast<std::streamsize>(v_[i].size() * sizeof(float)));
  }
  if (!out) throw std::runtime_error(path + ": failed writing optimizer state");
}

void AdamOptimizer::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path + ": cannot open optimizer state");
  if (read_pod<std::uint32_t>(in, path) != kOptimMagic) {
    throw std::runtime_error(path + ": corrupt optimizer state (bad magic)");
  }
  if (read_pod<std::uint32_t>(in, path) != kOptimVersion) {
    throw std::runtime_error(path + ": unsupported optimizer state version");
  }
  const auto t = read_pod<std::int64_t>(in, path);
  const auto count = read_pod<std::uint64_t>(in, path);
  if (count != params_.size()) {
    throw std::runtime_error(path + ": optimizer state does not match the model (" +
                             std::to_string(count) + " arrays for " +
                             std::to_string(params_.size()) + " parameters)");
  }
  std::vector<std::vector<float>> m(count), v(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto numel = read_pod<std::uint64_t>(in, path);
    if (numel != static_cast<std::uint64_t>(params_[i].numel())) {
      throw std::runtime_error(path + ": optimizer state does not match the model (array " +
                               std::to_string(i) + " size mismatch)");
    }
    m[i].resize(numel);
    v[i].resize(numel);
    in.read(reinterpret_cast<char*>(m[i].data()),
            static_cast<std::streamsize>(numel * sizeof(float)));
    in.read(reinterpret_cast<char*>(v[i].data()),
            static_cast<std::streamsize>(numel * sizeof(float)));
    if (!in) throw std::runtime_error(path + ": corrupt optimizer state (truncated)");
  }
  t_ = t;
  m_ = std::move(m);
  v_ = std::move(v);
}

Trainer::Trainer(TrainingConfig config) : config_(std::move(config)) {
  validate_config(config_.model);
  Rng init_rng = derive_rng(config_.seed, {kStreamModelInit});
  model_ = EasterModel::build(config_.model, init_rng);
  std::vector<Tensor> params;
  for (auto& [name, tensor] : model_.named_parameters()) params.push_back(tensor);
  optimizer_ = AdamOptimizer(params, config_.step_size, config_.beta1, config_.beta2);
}

namespace {

void dump_diagnostics(const std::string& dir, std::int64_t step, const Batch& batch,
                      const std::vector<double>& losses, double grad_norm,
                      const std::string& note, std::string& out_path) {
  nlohmann::ordered_json j;
  j["step"] = step;
  j["note"] = note;
  j["grad_norm"] = grad_norm;
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < batch.ids.size(); ++i) {
    nlohmann::ordered_json row;
    row["sample"] = batch.ids[i];
    row["valid_width"] = batch.valid_widths[i];
    row["frames"] = batch.input_lengths[i];
    row["label_length"] = batch.labels[i].size();
    if (i < losses.size()) row["loss"] = losses[i];
    rows.push_back(std::move(row));
  }
  j["samples"] = std::move(rows);

  const fs::path base = dir.empty() ? fs::path(".") : fs::path(dir);
  fs::create_directories(base);
  out_path = (base / ("diagnostics_step" + std::to_string(step) + ".json")).string();
  std::ofstream out(out_path);
  out << j.dump(2) << "\n";
}

}  // namespace

TrainStepResult Trainer::train_step(const Batch& batch) {
  if (batch.images.empty()) throw std::invalid_argument("train_step: empty batch");
  model_.set_training(true);
  optimizer_.zero_grad();
  Rng dropout_rng = derive_rng(config_.seed, {kStreamDropout, static_cast<std::uint64_t>(step_)});

  TrainStepResult result;
  std::vector<double> losses;
  Tape tape;
  {
    TapeScope scope(tape);
    Tensor total;
    for (std::size_t i = 0; i < batch.images.size(); ++i) {
      if (!ctc_feasible(batch.input_lengths[i], batch.labels[i])) {
        ++result.skipped;
        std::cerr << "warning: step " << step_ << ": skipping " << batch.ids[i] << " (label needs "
                  << min_frames(batch.labels[i]) << " frames, lattice has "
                  << batch.input_lengths[i] << ")\n";
        continue;
      }
      const Tensor image = slice_cols(batch.images[i], batch.valid_widths[i]);
      const LogProbLattice lattice = model_.forward_sample(image, &dropout_rng);
      const Tensor loss = config_.weighted_ctc
                              ? weighted_ctc_loss(lattice, batch.labels[i], {config_.alpha})
                              : ctc_loss(lattice, batch.labels[i]);
      losses.push_back(loss.item());
      total = total.defined() ? add(total, loss) : loss;
      ++result.used;
    }
    if (result.used == 0) {
      ++step_;
      return result;
    }
    const Tensor mean = scale(total, 1.0f / static_cast<float>(result.used));
    result.loss = mean.item();
    if (!std::isfinite(result.loss)) {
      std::string dump_path;
      dump_diagnostics(config_.checkpoint_dir, step_, batch, losses, 0.0,
                       "non-finite training loss", dump_path);
      throw std::runtime_error("non-finite loss at step " + std::to_string(step_) +
                               "; diagnostics written to " + dump_path);
    }
    tape.backward(mean);
  }

  result.grad_norm = optimizer_.grad_norm();
  if (!std::isfinite(result.grad_norm)) {
    std::string dump_path;
    dump_diagnostics(config_.checkpoint_dir, step_, batch, losses, result.grad_norm,
                     "non-finite gradient norm", dump_path);
    throw std::runtime_error("non-finite gradient at step " + std::to_string(step_) +
                             "; diagnostics written to " + dump_path);
  }
  if (config_.grad_clip > 0.0) optimizer_.clip_grad_norm(config_.grad_clip);
  optimizer_.step();
  ++step_;
  return result;
}

EvalReport Trainer::evaluate_on(const std::vector<DatasetSample>& samples) {
  model_.set_training(false);
  std::vector<std::string> refs, hyps;
  refs.reserve(samples.size());
  hyps.reserve(samples.size());
  for (const auto& sample : samples) {
    const Tensor image = load_image_tensor(sample, config_.model.input_height, nullptr, 0);
    const LogProbLattice lattice = model_.forward_sample(image);
    refs.push_back(sample.transcript);
    hyps.push_back(greedy_decode(lattice, config_.model.vocab));
  }
  return evaluate(refs, hyps);
}

void Trainer::save_state(const std::string& dir) const {
  fs::create_directories(dir);
  model_.save_checkpoint((fs::path(dir) / "model.ckpt").string());
  optimizer_.save((fs::path(dir) / "optim.bin").string());
  nlohmann::ordered_json j;
  j["step"] = step_;
  j["best_val_cer"] = best_val_cer_;
  std::ofstream out(fs::path(dir) / "state.json");
  if (!out) throw std::runtime_error(dir + ": cannot write state.json");
  out << j.dump(2) << "\n";
}

void Trainer::load_state(const std::string& dir) {
  model_ = EasterModel::load_checkpoint((fs::path(dir) / "model.ckpt").string(),
                                        &config_.model.vocab);
  model_.set_training(false);
  std::vector<Tensor> params;
  for (auto& [name, tensor] : model_.named_parameters()) params.push_back(tensor);
  optimizer_ = AdamOptimizer(params, config_.step_size, config_.beta1, config_.beta2);
  optimizer_.load((fs::path(dir) / "optim.bin").string());

  std::ifstream in(fs::path(dir) / "state.json");
  if (!in) throw std::runtime_error(dir + ": cannot read state.json");
  nlohmann::json j;
  try {
    in >> j;
    step_ = j.at("step").get<std::int64_t>();
    best_val_cer_ = j.at("best_val_cer").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(dir + ": corrupt state.json: " + e.what());
  }
}

namespace {

// Keeps metrics rows at or before `step` when resuming mid-interval.
void truncate_metrics_csv(const std::string& path, std::int64_t step) {
  std::ifstream in(path);
  if (!in) return;
  std::vector<std::string> kept;
  std::string line;
  while (std::getline(in, line)) {
    if (kept.empty()) {
      kept.push_back(line);  // header
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos) continue;
    if (std::stoll(line.substr(0, comma)) <= step) kept.push_back(line);
  }
  in.close();
  std::ofstream out(path, std::ios::trunc);
  for (const auto& row : kept) out << row << "\n";
}

class EpochOrder {
 public:
  EpochOrder(std::uint64_t seed, std::int64_t count) : seed_(seed), count_(count) {}

  // Sample index for global draw position g, permuted fresh every epoch.
  std::int64_t index(std::int64_t g) {
    const std::int64_t epoch = g / count_;
    if (epoch != epoch_) {
      perm_.resize(static_cast<std::size_t>(count_));
      for (std::int64_t i = 0; i < count_; ++i) perm_[static_cast<std::size_t>(i)] = i;
      Rng rng = derive_rng(seed_, {kStreamEpochOrder, static_cast<std::uint64_t>(epoch)});
      for (std::int64_t i = count_ - 1; i > 0; --i) {
        const std::int64_t j = rng.uniform_int(0, i);
        std::swap(perm_[static_cast<std::size_t>(i)], perm_[static_cast<std::size_t>(j)]);
      }
      epoch_ = epoch;
    }
    return perm_[static_cast<std::size_t>(g % count_)];
  }

 private:
  std::uint64_t seed_;
  std::int64_t count_;
  std::int64_t epoch_ = -1;
  std::vector<std::int64_t> perm_;
};

}  // namespace

FitResult Trainer::fit(const FitOptions& options) {
  validate_training_config(config_);
  const auto train = load_dataset(config_.train_manifest);
  const auto val = load_dataset(config_.val_manifest);
  if (train.empty()) throw std::runtime_error(config_.train_manifest + ": no training samples");
  if (val.empty()) throw std::runtime_error(config_.val_manifest + ": no validation samples");

  // Leakage guard. Pointing both manifests at the same file is an explicit
  // request to evaluate on the training set, so only distinct files are
  // checked for overlap.
  if (fs::weakly_canonical(config_.train_manifest) != fs::weakly_canonical(config_.val_manifest)) {
    std::set<std::string> train_paths;
    for (const auto& s : train) train_paths.insert(fs::weakly_canonical(s.path).string());
    for (const auto& s : val) {
      if (train_paths.count(fs::weakly_canonical(s.path).string())) {
        throw std::runtime_error("validation sample " + s.path +
                                 " also appears in the training set");
      }
    }
  }

  const fs::path dir(config_.checkpoint_dir);
  fs::create_directories(dir);
  const std::string csv_path = (dir / "metrics.csv").string();
  const std::string last_dir = (dir / "last").string();
  const std::string best_ckpt = (dir / "best_model.ckpt").string();

  if (options.resume) {
    load_state(last_dir);
    truncate_metrics_csv(csv_path, step_);
  } else {
    step_ = 0;
    best_val_cer_ = 1e30;
    std::ofstream csv(csv_path, std::ios::trunc);
    if (!csv) throw std::runtime_error(csv_path + ": cannot open for writing");
    csv << "step,train_loss,val_cer,val_wer,wall_time\n";
  }

  std::ofstream csv(csv_path, std::ios::app);
  if (!csv) throw std::runtime_error(csv_path + ": cannot open for writing");

  FitResult result;
  result.metrics_csv = csv_path;
  result.best_checkpoint = best_ckpt;
  result.last_checkpoint = last_dir;

  EpochOrder order(config_.seed, static_cast<std::int64_t>(train.size()));
  const auto t0 = std::chrono::steady_clock::now();
  auto wall_seconds = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };

  while (step_ < config_.max_steps) {
    if (options.stop && options.stop->load()) {
      result.stopped_early = true;
      break;
    }
    std::vector<DatasetSample> picks;
    picks.reserve(static_cast<std::size_t>(config_.batch_size));
    for (int j = 0; j < config_.batch_size; ++j) {
      const std::int64_t g = step_ * config_.batch_size + j;
      picks.push_back(train[static_cast<std::size_t>(order.index(g))]);
    }
    Rng aug_rng = derive_rng(config_.seed, {kStreamAugment, static_cast<std::uint64_t>(step_)});
    const Batch batch = make_batch(picks, config_.model, &config_.augment, &aug_rng);
    const TrainStepResult stepped = train_step(batch);  // advances step_
    result.skipped_samples += stepped.skipped;

    std::string val_cer_field, val_wer_field;
    const bool eval_now = step_ % config_.eval_interval == 0 || step_ == config_.max_steps;
    if (eval_now) {
      const EvalReport report = evaluate_on(val);
      result.final_val_cer = report.cer;
      result.final_val_wer = report.wer;
      val_cer_field = format_double(report.cer);
      val_wer_field = format_double(report.wer);
      if (report.cer < best_val_cer_) {
        best_val_cer_ = report.cer;
        model_.save_checkpoint(best_ckpt);
      }
      save_state(last_dir);
    }
    csv << step_ << ',' << (stepped.used > 0 ? format_double(stepped.loss) : "") << ','
        << val_cer_field << ',' << val_wer_field << ',' << format_double(wall_seconds()) << "\n";
    csv.flush();
  }

  save_state(last_dir);
  result.final_step = step_;
  result.best_val_cer = best_val_cer_;
  return result;
}

}  // namespace easter
