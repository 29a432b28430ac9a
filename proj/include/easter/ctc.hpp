#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "easter/tensor.hpp"

namespace easter {

// Raised when a label cannot be aligned to the available frames, i.e. when
// label length plus the number of adjacent equal label pairs exceeds T'.
class InfeasibleAlignmentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Ordered character set. The blank class is not a character; it always
// occupies the last index so checkpoints agree on the class layout.
class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::string chars);

  int size() const { return static_cast<int>(chars_.size()); }
  int blank_index() const { return size(); }
  int num_classes() const { return size() + 1; }
  const std::string& chars() const { return chars_; }
  char char_at(int index) const;

  // Maps text to class indices; unknown characters are an error that names
  // the offending character.
  std::vector<int> encode(const std::string& text) const;
  std::string decode(const std::vector<int>& indices) const;

 private:
  std::string chars_;
  std::vector<int> index_;  // 256-entry lookup, -1 for absent
};

// Per-timestep log-probabilities over the vocabulary plus blank. Rows beyond
// valid_length are ignored by every consumer.
struct LogProbLattice {
  Tensor values;  // [rows >= valid_length, num_classes]
  std::int64_t valid_length = 0;

  LogProbLattice() = default;
  LogProbLattice(Tensor values, std::int64_t valid_length);

  std::int64_t num_classes() const { return values.dim(1); }
  std::int64_t blank() const { return num_classes() - 1; }
};

struct WeightedCtcConfig {
  double alpha = 0.5;  // weight on non-blank classes; blank gets 1 - alpha
};

// Merges consecutive duplicates, then removes blanks.
std::vector<int> collapse(const std::vector<int>& path, int blank_index);

// Shortest frame count that can emit the label: length plus one separating
// blank per adjacent equal pair.
std::int64_t min_frames(const std::vector<int>& label);
bool ctc_feasible(std::int64_t frames, const std::vector<int>& label);

// Negative log-probability of the label under the lattice, summed over all
// paths that collapse to it. Computed with the log-space forward dynamic
// program over the blank-interleaved label; accumulation is in double.
double ctc_loss_value(const LogProbLattice& lattice, const std::vector<int>& label);

// d(ctc_loss_value)/d(lattice entry), row-major [valid_length x num_classes].
// Each entry is minus the posterior probability that an accepting path passes
// through that class at that timestep.
std::vector<double> ctc_lattice_gradient(const LogProbLattice& lattice,
                                         const std::vector<int>& label);

double weighted_ctc_loss_value(const LogProbLattice& lattice, const std::vector<int>& label,
                               const WeightedCtcConfig& cfg);
std::vector<double> weighted_ctc_lattice_gradient(const LogProbLattice& lattice,
                                                  const std::vector<int>& label,
                                                  const WeightedCtcConfig& cfg);

// Tape-recording wrappers; gradients flow into lattice.values.
Tensor ctc_loss(const LogProbLattice& lattice, const std::vector<int>& label);
Tensor weighted_ctc_loss(const LogProbLattice& lattice, const std::vector<int>& label,
                         const WeightedCtcConfig& cfg);

// Per-timestep argmax with ties broken toward the lowest class index.
std::vector<int> greedy_path(const LogProbLattice& lattice);

// Argmax path, collapsed, mapped to characters.
std::string greedy_decode(const LogProbLattice& lattice, const Vocabulary& vocab);

}  // namespace easter
