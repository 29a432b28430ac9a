#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "easter/rng.hpp"

namespace easter {

using Shape = std::vector<std::int64_t>;

std::int64_t shape_numel(const Shape& shape);
std::string shape_to_string(const Shape& shape);

struct TensorImpl {
  Shape shape;
  std::vector<float> data;
  std::vector<float> grad;  // same length as data once touched, else empty
  bool requires_grad = false;
};

// Dense float32 array with an attached gradient slot. Copies are shallow:
// a Tensor is a handle, and ops hold handles to keep operands alive for the
// backward pass.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, float value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<float> values, bool requires_grad = false);
  static Tensor scalar(float value, bool requires_grad = false);
  static Tensor uniform(Shape shape, float lo, float hi, Rng& rng, bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  int ndim() const { return static_cast<int>(impl_->shape.size()); }
  std::int64_t dim(int i) const { return impl_->shape[static_cast<std::size_t>(i)]; }
  std::int64_t numel() const { return static_cast<std::int64_t>(impl_->data.size()); }

  float* data() { return impl_->data.data(); }
  const float* data() const { return impl_->data.data(); }
  std::vector<float>& values() { return impl_->data; }
  const std::vector<float>& values() const { return impl_->data; }

  // Scalar accessor; requires numel() == 1.
  float item() const;

  bool requires_grad() const { return impl_->requires_grad; }
  void set_requires_grad(bool flag) { impl_->requires_grad = flag; }

  // Allocates the accumulator on first touch.
  std::vector<float>& grad();
  bool has_grad() const { return impl_ && !impl_->grad.empty(); }
  void zero_grad();

  const std::shared_ptr<TensorImpl>& impl() const { return impl_; }

 private:
  explicit Tensor(std::shared_ptr<TensorImpl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<TensorImpl> impl_;
};

// Records one backward rule per executed op, in execution order. Replaying
// the rules in reverse accumulates d(loss)/d(tensor) exactly once per use of
// every operand. Single-threaded; one tape per training step.
class Tape {
 public:
  Tape();
  ~Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  void record(std::function<void()> backward_rule);
  std::size_t size() const { return entries_.size(); }

  // Seeds d(loss)/d(loss) = 1 and replays the tape in reverse. The tape is
  // consumed. Throws std::invalid_argument when loss is not a scalar.
  void backward(const Tensor& loss);

  // The tape ops record onto, when any. Set for the lifetime of a TapeScope.
  static Tape* current();

 private:
  friend class TapeScope;
  std::vector<std::function<void()>> entries_;
};

// RAII activation of a tape on the current thread. Ops executed outside any
// scope run forward-only.
class TapeScope {
 public:
  explicit TapeScope(Tape& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* previous_;
};

// Running statistics owned by a batch-norm layer; updated in train mode.
struct BatchNormStats {
  std::vector<float> running_mean;
  std::vector<float> running_var;

  explicit BatchNormStats(std::int64_t channels = 0)
      : running_mean(static_cast<std::size_t>(channels), 0.0f),
        running_var(static_cast<std::size_t>(channels), 1.0f) {}
};

// --- Differentiable operations -------------------------------------------
//
// Gradients are recorded on Tape::current() when one is active and any input
// requires a gradient. All shapes are validated; violations raise
// std::invalid_argument.

// input [C_in, T], weight [C_out, C_in, K], bias [C_out].
// "Same"-style zero padding keeps T_out = ceil(T / stride) for any kernel and
// dilation: total pad (K-1)*dilation, split floor-left / ceil-right.
Tensor conv1d(const Tensor& input, const Tensor& weight, const Tensor& bias, int stride = 1,
              int dilation = 1);

// input [C, T]; per-channel statistics over the time axis in train mode,
// running statistics in infer mode.
Tensor batch_norm(const Tensor& input, const Tensor& gamma, const Tensor& beta,
                  BatchNormStats& stats, bool train, float momentum = 0.9f, float eps = 1e-5f);

Tensor relu(const Tensor& input);

// Inverted dropout: train mode zeroes elements with probability rate and
// scales survivors by 1/(1-rate); infer mode is the identity.
Tensor dropout(const Tensor& input, float rate, bool train, Rng& rng);

// Log-softmax over the last axis, stabilized by max subtraction.
Tensor log_softmax(const Tensor& input);

Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, float factor);

// Sum of all elements, accumulated in 64-bit; returns a scalar tensor.
Tensor sum(const Tensor& a);

// [A, B] -> [B, A]
Tensor transpose2d(const Tensor& a);

}  // namespace easter
