#include "easter/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "easter/threading.hpp"

namespace easter {

namespace {

thread_local Tape* g_current_tape = nullptr;

std::vector<float>& ensure_grad(TensorImpl& impl) {
  if (impl.grad.empty()) impl.grad.assign(impl.data.size(), 0.0f);
  return impl.grad;
}

void check_shape(const Shape& shape) {
  for (std::int64_t extent : shape) {
    if (extent <= 0) {
      throw std::invalid_argument("tensor extents must be positive, got shape " +
                                  shape_to_string(shape));
    }
  }
}

}  // namespace

std::int64_t shape_numel(const Shape& shape) {
  std::int64_t n = 1;
  for (std::int64_t extent : shape) n *= extent;
  return n;
}

std::string shape_to_string(const Shape& shape) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  check_shape(shape);
  auto impl = std::make_shared<TensorImpl>();
  impl->data.assign(static_cast<std::size_t>(shape_numel(shape)), 0.0f);
  impl->shape = std::move(shape);
  impl->requires_grad = requires_grad;
  return Tensor(std::move(impl));
}

Tensor Tensor::full(Shape shape, float value, bool requires_grad) {
  Tensor t = zeros(std::move(shape), requires_grad);
  std::fill(t.values().begin(), t.values().end(), value);
  return t;
}

Tensor Tensor::from(Shape shape, std::vector<float> values, bool requires_grad) {
  check_shape(shape);
  if (static_cast<std::int64_t>(values.size()) != shape_numel(shape)) {
    throw std::invalid_argument("data length does not match shape " + shape_to_string(shape));
  }
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = std::move(shape);
  impl->data = std::move(values);
  impl->requires_grad = requires_grad;
  return Tensor(std::move(impl));
}

Tensor Tensor::scalar(float value, bool requires_grad) {
  return from({1}, {value}, requires_grad);
}

Tensor Tensor::uniform(Shape shape, float lo, float hi, Rng& rng, bool requires_grad) {
  Tensor t = zeros(std::move(shape), requires_grad);
  for (float& v : t.values()) v = static_cast<float>(rng.uniform(lo, hi));
  return t;
}

float Tensor::item() const {
  if (numel() != 1) {
    throw std::invalid_argument("item() requires a scalar tensor, got shape " +
                                shape_to_string(shape()));
  }
  return impl_->data[0];
}

std::vector<float>& Tensor::grad() { return ensure_grad(*impl_); }

void Tensor::zero_grad() {
  if (impl_ && !impl_->grad.empty()) std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0f);
}

Tape::Tape() = default;
Tape::~Tape() = default;

void Tape::record(std::function<void()> backward_rule) {
  entries_.push_back(std::move(backward_rule));
}

void Tape::backward(const Tensor& loss) {
  if (!loss.defined() || loss.numel() != 1) {
    throw std::invalid_argument("backward requires a scalar loss tensor");
  }
  ensure_grad(*loss.impl()).assign(1, 1.0f);
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) (*it)();
  entries_.clear();
}

Tape* Tape::current() { return g_current_tape; }

TapeScope::TapeScope(Tape& tape) : previous_(g_current_tape) { g_current_tape = &tape; }

TapeScope::~TapeScope() { g_current_tape = previous_; }

namespace {

bool recording(std::initializer_list<const Tensor*> inputs) {
  if (!Tape::current()) return false;
  for (const Tensor* t : inputs) {
    if ((*t).requires_grad()) return true;
  }
  return false;
}

}  // namespace

Tensor conv1d(const Tensor& input, const Tensor& weight, const Tensor& bias, int stride,
              int dilation) {
  if (input.ndim() != 2) {
    throw std::invalid_argument("conv1d input must be [C_in, T], got " +
                                shape_to_string(input.shape()));
  }
  if (weight.ndim() != 3) {
    throw std::invalid_argument("conv1d weight must be [C_out, C_in, K], got " +
                                shape_to_string(weight.shape()));
  }
  if (bias.ndim() != 1 || bias.dim(0) != weight.dim(0)) {
    throw std::invalid_argument("conv1d bias must be [C_out]");
  }
  if (input.dim(0) != weight.dim(1)) {
    throw std::invalid_argument("conv1d channel mismatch: input has " +
                                std::to_string(input.dim(0)) + " channels, weight expects " +
                                std::to_string(weight.dim(1)));
  }
  if (stride < 1 || dilation < 1) {
    throw std::invalid_argument("conv1d stride and dilation must be >= 1");
  }

  const std::int64_t c_in = input.dim(0);
  const std::int64_t t_in = input.dim(1);
  const std::int64_t c_out = weight.dim(0);
  const std::int64_t kernel = weight.dim(2);
  const std::int64_t t_out = (t_in - 1) / stride + 1;  // == ceil(t_in / stride)
  const std::int64_t pad_left = (kernel - 1) * dilation / 2;

  Tensor out = Tensor::zeros({c_out, t_out});

  const float* in_base = input.data();
  const float* w_base = weight.data();
  const float* b_base = bias.data();
  float* out_base = out.data();

  // For each kernel tap the valid output range is contiguous; everything
  // outside reads zero padding and is skipped.
  auto tap_range = [&](std::int64_t offset, std::int64_t& t_lo, std::int64_t& t_hi) {
    t_lo = offset < 0 ? (-offset + stride - 1) / stride : 0;
    const std::int64_t last = t_in - 1 - offset;  // may be negative: no valid t
    t_hi = last < 0 ? -1 : std::min<std::int64_t>(t_out - 1, last / stride);
  };

  parallel_for(c_out, [&](std::int64_t co_begin, std::int64_t co_end) {
    for (std::int64_t co = co_begin; co < co_end; ++co) {
      float* out_row = out_base + co * t_out;
      std::fill(out_row, out_row + t_out, b_base[co]);
      for (std::int64_t ci = 0; ci < c_in; ++ci) {
        const float* in_row = in_base + ci * t_in;
        const float* w_row = w_base + (co * c_in + ci) * kernel;
        for (std::int64_t k = 0; k < kernel; ++k) {
          const float w = w_row[k];
          const std::int64_t offset = k * dilation - pad_left;
          std::int64_t t_lo, t_hi;
          tap_range(offset, t_lo, t_hi);
          if (stride == 1) {
            const float* src = in_row + offset;
            for (std::int64_t t = t_lo; t <= t_hi; ++t) out_row[t] += w * src[t];
          } else {
            for (std::int64_t t = t_lo; t <= t_hi; ++t) {
              out_row[t] += w * in_row[t * stride + offset];
            }
          }
        }
      }
    }
  });

  if (recording({&input, &weight, &bias})) {
    out.set_requires_grad(true);
    auto in_impl = input.impl();
    auto w_impl = weight.impl();
    auto b_impl = bias.impl();
    auto out_impl = out.impl();
    const int s = stride, d = dilation;
    Tape::current()->record([=] {
      if (out_impl->grad.empty()) return;
      const float* gout = out_impl->grad.data();
      const float* in_d = in_impl->data.data();
      const float* w_d = w_impl->data.data();
      const std::int64_t pad = (kernel - 1) * d / 2;

      auto range_for = [&](std::int64_t offset, std::int64_t& lo, std::int64_t& hi) {
        lo = offset < 0 ? (-offset + s - 1) / s : 0;
        const std::int64_t last = t_in - 1 - offset;
        hi = last < 0 ? -1 : std::min<std::int64_t>(t_out - 1, last / s);
      };

      if (b_impl->requires_grad) {
        float* gb = ensure_grad(*b_impl).data();
        for (std::int64_t co = 0; co < c_out; ++co) {
          double acc = 0.0;
          const float* grow = gout + co * t_out;
          for (std::int64_t t = 0; t < t_out; ++t) acc += grow[t];
          gb[co] += static_cast<float>(acc);
        }
      }
      if (w_impl->requires_grad) {
        float* gw = ensure_grad(*w_impl).data();
        parallel_for(c_out, [&](std::int64_t co_begin, std::int64_t co_end) {
          for (std::int64_t co = co_begin; co < co_end; ++co) {
            const float* grow = gout + co * t_out;
            for (std::int64_t ci = 0; ci < c_in; ++ci) {
              const float* in_row = in_d + ci * t_in;
              float* gw_row = gw + (co * c_in + ci) * kernel;
              for (std::int64_t k = 0; k < kernel; ++k) {
                const std::int64_t offset = k * d - pad;
                std::int64_t t_lo, t_hi;
                range_for(offset, t_lo, t_hi);
                float acc = 0.0f;
                if (s == 1) {
                  const float* src = in_row + offset;
                  for (std::int64_t t = t_lo; t <= t_hi; ++t) acc += grow[t] * src[t];
                } else {
                  for (std::int64_t t = t_lo; t <= t_hi; ++t) {
                    acc += grow[t] * in_row[t * s + offset];
                  }
                }
                gw_row[k] += acc;
              }
            }
          }
        });
      }
      if (in_impl->requires_grad) {
        float* gin = ensure_grad(*in_impl).data();
        parallel_for(c_in, [&](std::int64_t ci_begin, std::int64_t ci_end) {
          for (std::int64_t ci = ci_begin; ci < ci_end; ++ci) {
            float* gin_row = gin + ci * t_in;
            for (std::int64_t co = 0; co < c_out; ++co) {
              const float* grow = gout + co * t_out;
              const float* w_row = w_d + (co * c_in + ci) * kernel;
              for (std::int64_t k = 0; k < kernel; ++k) {
                const float w = w_row[k];
                const std::int64_t offset = k * d - pad;
                std::int64_t t_lo, t_hi;
                range_for(offset, t_lo, t_hi);
                if (s == 1) {
                  float* dst = gin_row + offset;
                  for (std::int64_t t = t_lo; t <= t_hi; ++t) dst[t] += w * grow[t];
                } else {
                  for (std::int64_t t = t_lo; t <= t_hi; ++t) {
                    gin_row[t * s + offset] += w * grow[t];
                  }
                }
              }
            }
          }
        });
      }
    });
  }
  return out;
}

Tensor batch_norm(const Tensor& input, const Tensor& gamma, const Tensor& beta,
                  BatchNormStats& stats, bool train, float momentum, float eps) {
  if (input.ndim() != 2) {
    throw std::invalid_argument("batch_norm input must be [C, T], got " +
                                shape_to_string(input.shape()));
  }
  const std::int64_t channels = input.dim(0);
  const std::int64_t t_len = input.dim(1);
  if (t_len <= 0) throw std::invalid_argument("batch_norm: zero-extent time axis");
  if (gamma.ndim() != 1 || gamma.dim(0) != channels || beta.ndim() != 1 ||
      beta.dim(0) != channels) {
    throw std::invalid_argument("batch_norm gamma/beta must be [C]");
  }
  if (static_cast<std::int64_t>(stats.running_mean.size()) != channels) {
    throw std::invalid_argument("batch_norm running stats have wrong channel count");
  }
  if (eps <= 0.0f) throw std::invalid_argument("batch_norm eps must be positive");

  Tensor out = Tensor::zeros({channels, t_len});
  // Saved for the backward rule.
  auto xhat = std::make_shared<std::vector<float>>(static_cast<std::size_t>(channels * t_len));
  auto inv_std = std::make_shared<std::vector<float>>(static_cast<std::size_t>(channels));

  const float* in_base = input.data();
  const float* g = gamma.data();
  const float* b = beta.data();
  float* out_base = out.data();

  for (std::int64_t c = 0; c < channels; ++c) {
    const float* x = in_base + c * t_len;
    float mean, var;
    if (train) {
      double sum = 0.0;
      for (std::int64_t t = 0; t < t_len; ++t) sum += x[t];
      mean = static_cast<float>(sum / static_cast<double>(t_len));
      double sq = 0.0;
      for (std::int64_t t = 0; t < t_len; ++t) {
        const double dxt = x[t] - mean;
        sq += dxt * dxt;
      }
      var = static_cast<float>(sq / static_cast<double>(t_len));
      stats.running_mean[c] = momentum * stats.running_mean[c] + (1.0f - momentum) * mean;
      stats.running_var[c] = momentum * stats.running_var[c] + (1.0f - momentum) * var;
    } else {
      mean = stats.running_mean[c];
      var = stats.running_var[c];
    }
    const float istd = 1.0f / std::sqrt(var + eps);
    (*inv_std)[static_cast<std::size_t>(c)] = istd;
    float* xh = xhat->data() + c * t_len;
    float* y = out_base + c * t_len;
    const float gc = g[c], bc = b[c];
    for (std::int64_t t = 0; t < t_len; ++t) {
      xh[t] = (x[t] - mean) * istd;
      y[t] = gc * xh[t] + bc;
    }
  }

  if (recording({&input, &gamma, &beta})) {
    out.set_requires_grad(true);
    auto in_impl = input.impl();
    auto g_impl = gamma.impl();
    auto b_impl = beta.impl();
    auto out_impl = out.impl();
    Tape::current()->record([=] {
      if (out_impl->grad.empty()) return;
      const float* gout = out_impl->grad.data();
      const float* xh = xhat->data();
      for (std::int64_t c = 0; c < channels; ++c) {
        const float* gy = gout + c * t_len;
        const float* xhc = xh + c * t_len;
        double sum_gy = 0.0, sum_gy_xh = 0.0;
        for (std::int64_t t = 0; t < t_len; ++t) {
          sum_gy += gy[t];
          sum_gy_xh += gy[t] * xhc[t];
        }
        if (g_impl->requires_grad) {
          ensure_grad(*g_impl)[static_cast<std::size_t>(c)] += static_cast<float>(sum_gy_xh);
        }
        if (b_impl->requires_grad) {
          ensure_grad(*b_impl)[static_cast<std::size_t>(c)] += static_cast<float>(sum_gy);
        }
        if (in_impl->requires_grad) {
          float* gx = ensure_grad(*in_impl).data() + c * t_len;
          const float gc = g_impl->data[static_cast<std::size_t>(c)];
          const float istd = (*inv_std)[static_cast<std::size_t>(c)];
          if (train) {
            const float mean_gy = static_cast<float>(sum_gy / static_cast<double>(t_len));
            const float mean_gy_xh = static_cast<float>(sum_gy_xh / static_cast<double>(t_len));
            for (std::int64_t t = 0; t < t_len; ++t) {
              gx[t] += gc * istd * (gy[t] - mean_gy - xhc[t] * mean_gy_xh);
            }
          } else {
            for (std::int64_t t = 0; t < t_len; ++t) gx[t] += gc * istd * gy[t];
          }
        }
      }
    });
  }
  return out;
}

Tensor relu(const Tensor& input) {
  Tensor out = Tensor::zeros(input.shape());
  const float* x = input.data();
  float* y = out.data();
  const std::int64_t n = input.numel();
  for (std::int64_t i = 0; i < n; ++i) y[i] = x[i] > 0.0f ? x[i] : 0.0f;

  if (recording({&input})) {
    out.set_requires_grad(true);
    auto in_impl = input.impl();
    auto out_impl = out.impl();
    Tape::current()->record([=] {
      if (out_impl->grad.empty() || !in_impl->requires_grad) return;
      const float* gy = out_impl->grad.data();
      const float* xv = in_impl->data.data();
      float* gx = ensure_grad(*in_impl).data();
      // Subgradient at exactly 0 is 0.
      for (std::int64_t i = 0; i < n; ++i) gx[i] += xv[i] > 0.0f ? gy[i] : 0.0f;
    });
  }
  return out;
}

Tensor dropout(const Tensor& input, float rate, bool train, Rng& rng) {
  if (rate < 0.0f || rate >= 1.0f) {
    throw std::invalid_argument("dropout rate must lie in [0, 1)");
  }
  if (!train || rate == 0.0f) return input;

  const std::int64_t n = input.numel();
  const float keep_scale = 1.0f / (1.0f - rate);
  auto mask = std::make_shared<std::vector<float>>(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    (*mask)[static_cast<std::size_t>(i)] = rng.bernoulli(rate) ? 0.0f : keep_scale;
  }

  Tensor out = Tensor::zeros(input.shape());
  const float* x = input.data();
  float* y = out.data();
  for (std::int64_t i = 0; i < n; ++i) y[i] = x[i] * (*mask)[static_cast<std::size_t>(i)];

  if (recording({&input})) {
    out.set_requires_grad(true);
    auto in_impl = input.impl();
    auto out_impl = out.impl();
    Tape::current()->record([=] {
      if (out_impl->grad.empty() || !in_impl->requires_grad) return;
      const float* gy = out_impl->grad.data();
      float* gx = ensure_grad(*in_impl).data();
      for (std::int64_t i = 0; i < n; ++i) gx[i] += gy[i] * (*mask)[static_cast<std::size_t>(i)];
    });
  }
  return out;
}

Tensor log_softmax(const Tensor& input) {
  const std::int64_t v = input.dim(input.ndim() - 1);
  const std::int64_t rows = input.numel() / v;
  Tensor out = Tensor::zeros(input.shape());
  const float* x = input.data();
  float* y = out.data();
  for (std::int64_t r = 0; r < rows; ++r) {
    const float* xr = x + r * v;
    float* yr = y + r * v;
    float m = xr[0];
    for (std::int64_t i = 1; i < v; ++i) m = std::max(m, xr[i]);
    double acc = 0.0;
    for (std::int64_t i = 0; i < v; ++i) acc += std::exp(static_cast<double>(xr[i] - m));
    const float lse = m + static_cast<float>(std::log(acc));
    for (std::int64_t i = 0; i < v; ++i) yr[i] = xr[i] - lse;
  }

  if (recording({&input})) {
    out.set_requires_grad(true);
    auto in_impl = input.impl();
    auto out_impl = out.impl();
    Tape::current()->record([=] {
      if (out_impl->grad.empty() || !in_impl->requires_grad) return;
      const float* gy = out_impl->grad.data();
      const float* yv = out_impl->data.data();
      float* gx = ensure_grad(*in_impl).data();
      for (std::int64_t r = 0; r < rows; ++r) {
        const float* gyr = gy + r * v;
        const float* yr = yv + r * v;
        float* gxr = gx + r * v;
        double total = 0.0;
        for (std::int64_t i = 0; i < v; ++i) total += gyr[i];
        const float tf = static_cast<float>(total);
        for (std::int64_t i = 0; i < v; ++i) gxr[i] += gyr[i] - std::exp(yr[i]) * tf;
      }
    });
  }
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw std::invalid_argument("add shape mismatch: " + shape_to_string(a.shape()) + " vs " +
                                shape_to_string(b.shape()));
  }
  Tensor out = Tensor::zeros(a.shape());
  const std::int64_t n = a.numel();
  const float* av = a.data();
  const float* bv = b.data();
  float* y = out.data();
  for (std::int64_t i = 0; i < n; ++i) y[i] = av[i] + bv[i];

  if (recording({&a, &b})) {
    out.set_requires_grad(true);
    auto a_impl = a.impl();
    auto b_impl = b.impl();
    auto out_impl = out.impl();
    Tape::current()->record([=] {
      if (out_impl->grad.empty()) return;
      const float* gy = out_impl->grad.data();
      if (a_impl->requires_grad) {
        float* ga = ensure_grad(*a_impl).data();
        for (std::int64_t i = 0; i < n; ++i) ga[i] += gy[i];
      }
      if (b_impl->requires_grad) {
        float* gb = ensure_grad(*b_impl).data();
        for (std::int64_t i = 0; i < n; ++i) gb[i] += gy[i];
      }
    });
  }
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw std::invalid_argument("mul shape mismatch: " + shape_to_string(a.shape()) + " vs " +
                                shape_to_string(b.shape()));
  }
  Tensor out = Tensor::zeros(a.shape());
  const std::int64_t n = a.numel();
  const float* av = a.data();
  const float* bv = b.data();
  float* y = out.data();
  for (std::int64_t i = 0; i < n; ++i) y[i] = av[i] * bv[i];

  if (recording({&a, &b})) {
    out.set_requires_grad(true);
    auto a_impl = a.impl();
    auto b_impl = b.impl();
    auto out_impl = out.impl();
    Tape::current()->record([=] {
      if (out_impl->grad.empty()) return;
      const float* gy = out_impl->grad.data();
      if (a_impl->requires_grad) {
        float* ga = ensure_grad(*a_impl).data();
        for (std::int64_t i = 0; i < n; ++i) ga[i] += gy[i] * b_impl->data[i];
      }
      if (b_impl->requires_grad) {
        float* gb = ensure_grad(*b_impl).data();
        for (std::int64_t i = 0; i < n; ++i) gb[i] += gy[i] * a_impl->data[i];
      }
    });
  }
  return out;
}

Tensor scale(const Tensor& a, float factor) {
  Tensor out = Tensor::zeros(a.shape());
  const std::int64_t n = a.numel();
  const float* av = a.data();
  float* y = out.data();
  for (std::int64_t i = 0; i < n; ++i) y[i] = av[i] * factor;

  if (recording({&a})) {
    out.set_requires_grad(true);
    auto a_impl = a.impl();
    auto out_impl = out.impl();
    Tape::current()->record([=] {
      if (out_impl->grad.empty() || !a_impl->requires_grad) return;
      const float* gy = out_impl->grad.data();
      float* ga = ensure_grad(*a_impl).data();
      for (std::int64_t i = 0; i < n; ++i) ga[i] += gy[i] * factor;
    });
  }
  return out;
}

Tensor sum(const Tensor& a) {
  double acc = 0.0;
  const float* av = a.data();
  const std::int64_t n = a.numel();
  for (std::int64_t i = 0; i < n; ++i) acc += av[i];
  Tensor out = Tensor::scalar(static_cast<float>(acc));

  if (recording({&a})) {
    out.set_requires_grad(true);
    auto a_impl = a.impl();
    auto out_impl = out.impl();
    Tape::current()->record([=] {
      if (out_impl->grad.empty() || !a_impl->requires_grad) return;
      const float gy = out_impl->grad[0];
      float* ga = ensure_grad(*a_impl).data();
      for (std::int64_t i = 0; i < n; ++i) ga[i] += gy;
    });
  }
  return out;
}

Tensor transpose2d(const Tensor& a) {
  if (a.ndim() != 2) {
    throw std::invalid_argument("transpose2d requires a 2-D tensor, got " +
                                shape_to_string(a.shape()));
  }
  const std::int64_t rows = a.dim(0);
  const std::int64_t cols = a.dim(1);
  Tensor out = Tensor::zeros({cols, rows});
  const float* av = a.data();
  float* y = out.data();
  for (std::int64_t r = 0; r < rows; ++r) {
    for (std::int64_t c = 0; c < cols; ++c) y[c * rows + r] = av[r * cols + c];
  }

  if (recording({&a})) {
    out.set_requires_grad(true);
    auto a_impl = a.impl();
    auto out_impl = out.impl();
    Tape::current()->record([=] {
      if (out_impl->grad.empty() || !a_impl->requires_grad) return;
      const float* gy = out_impl->grad.data();
      float* ga = ensure_grad(*a_impl).data();
      for (std::int64_t r = 0; r < rows; ++r) {
        for (std::int64_t c = 0; c < cols; ++c) ga[r * cols + c] += gy[c * rows + r];
      }
    });
  }
  return out;
}

}  // namespace easter
