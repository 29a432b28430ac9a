#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace easter {

// Levenshtein distance: minimum insertions + deletions + substitutions.
std::int64_t edit_distance(const std::string& a, const std::string& b);
std::int64_t edit_distance(const std::vector<std::string>& a, const std::vector<std::string>& b);

// Whitespace tokenization for word-level scoring.
std::vector<std::string> split_words(const std::string& text);

// Corpus rates: total edit distance over total reference length. Character
// granularity for cer, whitespace-token granularity for wer. The reference
// corpus must be nonempty at the relevant granularity.
double cer(const std::vector<std::string>& refs, const std::vector<std::string>& hyps);
double wer(const std::vector<std::string>& refs, const std::vector<std::string>& hyps);

struct SampleEval {
  std::string reference;
  std::string hypothesis;
  std::int64_t char_distance = 0;
  std::int64_t word_distance = 0;
  std::int64_t ref_chars = 0;
  std::int64_t ref_words = 0;
};

struct EvalReport {
  double cer = 0.0;
  double wer = 0.0;
  double word_accuracy = 0.0;  // 1 - wer
  std::int64_t sample_count = 0;
  std::vector<SampleEval> samples;
};

// case_fold lowercases both sides (ASCII) before comparison.
EvalReport evaluate(const std::vector<std::string>& refs, const std::vector<std::string>& hyps,
                    bool case_fold = false);

// summary as key\tvalue lines; per-sample rows as TSV.
void write_report(const EvalReport& report, const std::string& summary_path,
                  const std::string& samples_path);

}  // namespace easter
