#include "easter/ctc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace easter {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double lse2(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

double lse3(double a, double b, double c) { return lse2(lse2(a, b), c); }

}  // namespace

Vocabulary::Vocabulary(std::string chars) : chars_(std::move(chars)), index_(256, -1) {
  for (std::size_t i = 0; i < chars_.size(); ++i) {
    const auto c = static_cast<unsigned char>(chars_[i]);
    if (index_[c] != -1) {
      throw std::invalid_argument(std::string("duplicate vocabulary character '") + chars_[i] +
                                  "'");
    }
    index_[c] = static_cast<int>(i);
  }
}

char Vocabulary::char_at(int index) const {
  if (index < 0 || index >= size()) {
    throw std::invalid_argument("class index " + std::to_string(index) +
                                " out of range for vocabulary of size " + std::to_string(size()));
  }
  return chars_[static_cast<std::size_t>(index)];
}

std::vector<int> Vocabulary::encode(const std::string& text) const {
  std::vector<int> out;
  out.reserve(text.size());
  for (char ch : text) {
    const int idx = index_.empty() ? -1 : index_[static_cast<unsigned char>(ch)];
    if (idx < 0) {
      throw std::invalid_argument(std::string("character '") + ch + "' is not in the vocabulary");
    }
    out.push_back(idx);
  }
  return out;
}

std::string Vocabulary::decode(const std::vector<int>& indices) const {
  std::string out;
  out.reserve(indices.size());
  for (int idx : indices) out.push_back(char_at(idx));
  return out;
}

LogProbLattice::LogProbLattice(Tensor values_in, std::int64_t valid_length_in)
    : values(std::move(values_in)), valid_length(valid_length_in) {
  if (!values.defined() || values.ndim() != 2) {
    throw std::invalid_argument("lattice values must be a 2-D [T, classes] tensor");
  }
  if (valid_length < 1 || valid_length > values.dim(0)) {
    throw std::invalid_argument("lattice valid_length " + std::to_string(valid_length) +
                                " out of range for " + std::to_string(values.dim(0)) + " rows");
  }
}

std::vector<int> collapse(const std::vector<int>& path, int blank_index) {
  std::vector<int> out;
  int prev = -1;
  for (int idx : path) {
    if (idx != prev && idx != blank_index) out.push_back(idx);
    prev = idx;
  }
  return out;
}

std::int64_t min_frames(const std::vector<int>& label) {
  std::int64_t frames = static_cast<std::int64_t>(label.size());
  for (std::size_t i = 1; i < label.size(); ++i) {
    if (label[i] == label[i - 1]) ++frames;  // a separating blank is required
  }
  return frames;
}

bool ctc_feasible(std::int64_t frames, const std::vector<int>& label) {
  return frames >= min_frames(label);
}

namespace {

void check_loss_inputs(const LogProbLattice& lattice, const std::vector<int>& label) {
  if (!lattice.values.defined() || lattice.values.ndim() != 2 || lattice.valid_length < 1 ||
      lattice.valid_length > lattice.values.dim(0)) {
    throw std::invalid_argument("empty or malformed lattice");
  }
  const std::int64_t blank = lattice.blank();
  if (blank < 0) throw std::invalid_argument("lattice must have at least the blank class");
  for (int idx : label) {
    if (idx < 0 || idx >= blank) {
      throw std::invalid_argument("label index " + std::to_string(idx) +
                                  " outside the non-blank classes [0, " + std::to_string(blank) +
                                  ")");
    }
  }
  if (!ctc_feasible(lattice.valid_length, label)) {
    throw InfeasibleAlignmentError("label needs at least " + std::to_string(min_frames(label)) +
                                   " frames but the lattice has " +
                                   std::to_string(lattice.valid_length));
  }
}

// Forward (and optionally backward) pass over the blank-interleaved label.
// log_alpha[t][j] includes the emission at t for prefixes ending in state j;
// log_beta[t][j] includes the emission at t for suffixes starting there, so
// combining them divides one emission back out.
struct Trellis {
  std::vector<int> ext;
  std::int64_t frames = 0;
  std::int64_t states = 0;
  std::vector<double> log_alpha;
  std::vector<double> log_beta;
  double log_p = kNegInf;
};

Trellis run_trellis(const LogProbLattice& lattice, const std::vector<int>& label,
                    bool need_beta) {
  check_loss_inputs(lattice, label);

  const std::int64_t frames = lattice.valid_length;
  const std::int64_t classes = lattice.num_classes();
  const int blank = static_cast<int>(lattice.blank());
  const float* lp_f = lattice.values.data();
  auto lp = [&](std::int64_t t, int k) {
    return static_cast<double>(lp_f[t * classes + k]);
  };

  Trellis w;
  w.frames = frames;
  const std::int64_t s = static_cast<std::int64_t>(label.size());
  w.states = 2 * s + 1;
  w.ext.resize(static_cast<std::size_t>(w.states));
  for (std::int64_t j = 0; j < w.states; ++j) {
    w.ext[static_cast<std::size_t>(j)] =
        (j % 2 == 0) ? blank : label[static_cast<std::size_t>(j / 2)];
  }

  const std::int64_t S = w.states;
  w.log_alpha.assign(static_cast<std::size_t>(frames * S), kNegInf);
  auto la = [&](std::int64_t t, std::int64_t j) -> double& {
    return w.log_alpha[static_cast<std::size_t>(t * S + j)];
  };

  la(0, 0) = lp(0, w.ext[0]);
  if (S > 1) la(0, 1) = lp(0, w.ext[1]);
  for (std::int64_t t = 1; t < frames; ++t) {
    for (std::int64_t j = 0; j < S; ++j) {
      const int cls = w.ext[static_cast<std::size_t>(j)];
      const double stay = la(t - 1, j);
      const double step = j >= 1 ? la(t - 1, j - 1) : kNegInf;
      const bool can_skip =
          j >= 2 && cls != blank && cls != w.ext[static_cast<std::size_t>(j - 2)];
      const double skip = can_skip ? la(t - 1, j - 2) : kNegInf;
      la(t, j) = lp(t, cls) + lse3(stay, step, skip);
    }
  }
  w.log_p = S > 1 ? lse2(la(frames - 1, S - 1), la(frames - 1, S - 2)) : la(frames - 1, 0);

  if (need_beta) {
    w.log_beta.assign(static_cast<std::size_t>(frames * S), kNegInf);
    auto lb = [&](std::int64_t t, std::int64_t j) -> double& {
      return w.log_beta[static_cast<std::size_t>(t * S + j)];
    };
    lb(frames - 1, S - 1) = lp(frames - 1, w.ext[static_cast<std::size_t>(S - 1)]);
    if (S > 1) lb(frames - 1, S - 2) = lp(frames - 1, w.ext[static_cast<std::size_t>(S - 2)]);
    for (std::int64_t t = frames - 2; t >= 0; --t) {
      for (std::int64_t j = 0; j < S; ++j) {
        const int cls = w.ext[static_cast<std::size_t>(j)];
        const double stay = lb(t + 1, j);
        const double step = j + 1 < S ? lb(t + 1, j + 1) : kNegInf;
        const bool can_skip =
            j + 2 < S && cls != blank && cls != w.ext[static_cast<std::size_t>(j + 2)];
        const double skip = can_skip ? lb(t + 1, j + 2) : kNegInf;
        lb(t, j) = lp(t, cls) + lse3(stay, step, skip);
      }
    }
  }
  return w;
}

// Posterior that an accepting path occupies class k at time t; rows sum to 1.
std::vector<double> class_posteriors(const LogProbLattice& lattice, const Trellis& w) {
  const std::int64_t frames = w.frames;
  const std::int64_t S = w.states;
  const std::int64_t classes = lattice.num_classes();
  const float* lp_f = lattice.values.data();
  std::vector<double> gamma(static_cast<std::size_t>(frames * classes), 0.0);
  std::vector<double> acc(static_cast<std::size_t>(classes));
  for (std::int64_t t = 0; t < frames; ++t) {
    std::fill(acc.begin(), acc.end(), kNegInf);
    for (std::int64_t j = 0; j < S; ++j) {
      const int cls = w.ext[static_cast<std::size_t>(j)];
      const double joint = w.log_alpha[static_cast<std::size_t>(t * S + j)] +
                           w.log_beta[static_cast<std::size_t>(t * S + j)];
      acc[static_cast<std::size_t>(cls)] = lse2(acc[static_cast<std::size_t>(cls)], joint);
    }
    for (std::int64_t k = 0; k < classes; ++k) {
      const double a = acc[static_cast<std::size_t>(k)];
      if (a == kNegInf) continue;
      // alpha*beta double-counts the emission at t; divide it back out.
      const double lp_tk = static_cast<double>(lp_f[t * classes + k]);
      gamma[static_cast<std::size_t>(t * classes + k)] = std::exp(a - w.log_p - lp_tk);
    }
  }
  return gamma;
}

void check_weight_config(const WeightedCtcConfig& cfg) {
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) {
    throw std::invalid_argument("class weight alpha must lie in (0, 1)");
  }
}

}  // namespace

double ctc_loss_value(const LogProbLattice& lattice, const std::vector<int>& label) {
  return -run_trellis(lattice, label, false).log_p;
}

std::vector<double> ctc_lattice_gradient(const LogProbLattice& lattice,
                                         const std::vector<int>& label) {
  const Trellis w = run_trellis(lattice, label, true);
  std::vector<double> grad = class_posteriors(lattice, w);
  for (double& g : grad) g = -g;
  return grad;
}

double weighted_ctc_loss_value(const LogProbLattice& lattice, const std::vector<int>& label,
                               const WeightedCtcConfig& cfg) {
  check_weight_config(cfg);
  const Trellis w = run_trellis(lattice, label, true);
  const std::vector<double> gamma = class_posteriors(lattice, w);
  const std::int64_t classes = lattice.num_classes();
  const std::int64_t blank = lattice.blank();
  double blank_share = 0.0;
  for (std::int64_t t = 0; t < w.frames; ++t) {
    blank_share += gamma[static_cast<std::size_t>(t * classes + blank)];
  }
  blank_share /= static_cast<double>(w.frames);
  // The loss decomposes into per-class posterior shares; blank's share is
  // weighted 1 - alpha and the rest alpha. At alpha = 0.5 the factor below is
  // exactly 0.5 regardless of the posteriors.
  return -w.log_p * (cfg.alpha + (1.0 - 2.0 * cfg.alpha) * blank_share);
}

std::vector<double> weighted_ctc_lattice_gradient(const LogProbLattice& lattice,
                                                  const std::vector<int>& label,
                                                  const WeightedCtcConfig& cfg) {
  check_weight_config(cfg);
  std::vector<double> grad = ctc_lattice_gradient(lattice, label);
  const std::int64_t classes = lattice.num_classes();
  const std::int64_t blank = lattice.blank();
  const std::int64_t frames = static_cast<std::int64_t>(grad.size()) / classes;
  for (std::int64_t t = 0; t < frames; ++t) {
    for (std::int64_t k = 0; k < classes; ++k) {
      grad[static_cast<std::size_t>(t * classes + k)] *= k == blank ? 1.0 - cfg.alpha : cfg.alpha;
    }
  }
  return grad;
}

namespace {

Tensor record_lattice_loss(const LogProbLattice& lattice, double value,
                           std::vector<double> grad) {
  Tensor out = Tensor::scalar(static_cast<float>(value));
  if (Tape::current() && lattice.values.requires_grad()) {
    out.set_requires_grad(true);
    auto values_impl = lattice.values.impl();
    auto out_impl = out.impl();
    auto grad_shared = std::make_shared<std::vector<double>>(std::move(grad));
    Tape::current()->record([=] {
      if (out_impl->grad.empty()) return;
      const float gout = out_impl->grad[0];
      if (values_impl->grad.empty()) {
        values_impl->grad.assign(values_impl->data.size(), 0.0f);
      }
      float* gv = values_impl->grad.data();
      const std::size_t n = grad_shared->size();
      for (std::size_t i = 0; i < n; ++i) {
        gv[i] += gout * static_cast<float>((*grad_shared)[i]);
      }
    });
  }
  return out;
}

}  // namespace

Tensor ctc_loss(const LogProbLattice& lattice, const std::vector<int>& label) {
  const Trellis w = run_trellis(lattice, label, true);
  std::vector<double> grad = class_posteriors(lattice, w);
  for (double& g : grad) g = -g;
  return record_lattice_loss(lattice, -w.log_p, std::move(grad));
}

Tensor weighted_ctc_loss(const LogProbLattice& lattice, const std::vector<int>& label,
                         const WeightedCtcConfig& cfg) {
  const double value = weighted_ctc_loss_value(lattice, label, cfg);
  std::vector<double> grad = weighted_ctc_lattice_gradient(lattice, label, cfg);
  return record_lattice_loss(lattice, value, std::move(grad));
}

std::vector<int> greedy_path(const LogProbLattice& lattice) {
  if (!lattice.values.defined() || lattice.values.ndim() != 2 || lattice.valid_length < 1) {
    throw std::invalid_argument("empty or malformed lattice");
  }
  const std::int64_t classes = lattice.num_classes();
  const float* lp = lattice.values.data();
  std::vector<int> path(static_cast<std::size_t>(lattice.valid_length));
  for (std::int64_t t = 0; t < lattice.valid_length; ++t) {
    const float* row = lp + t * classes;
    int best = 0;
    for (std::int64_t k = 1; k < classes; ++k) {
      if (row[k] > row[best]) best = static_cast<int>(k);
    }
    path[static_cast<std::size_t>(t)] = best;
  }
  return path;
}

std::string greedy_decode(const LogProbLattice& lattice, const Vocabulary& vocab) {
  if (vocab.num_classes() != lattice.num_classes()) {
    throw std::invalid_argument("vocabulary has " + std::to_string(vocab.num_classes()) +
                                " classes but the lattice has " +
                                std::to_string(lattice.num_classes()));
  }
  const std::vector<int> reduced = collapse(greedy_path(lattice), vocab.blank_index());
  return vocab.decode(reduced);
}

}  // namespace easter
