#include "easter/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <stdexcept>

namespace easter {

namespace {

template <typename Seq>
std::int64_t levenshtein(const Seq& a, const Seq& b) {
  const std::size_t n = a.size(), m = b.size();
  if (n == 0) return static_cast<std::int64_t>(m);
  if (m == 0) return static_cast<std::int64_t>(n);
  std::vector<std::int64_t> prev(m + 1), cur(m + 1);
  for (std::size_t j = 0; j <= m; ++j) prev[j] = static_cast<std::int64_t>(j);
  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = static_cast<std::int64_t>(i);
    for (std::size_t j = 1; j <= m; ++j) {
      const std::int64_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

std::string fold(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

void check_same_size(const std::vector<std::string>& refs, const std::vector<std::string>& hyps) {
  if (refs.size() != hyps.size()) {
    throw std::invalid_argument("reference and hypothesis lists differ in length (" +
                                std::to_string(refs.size()) + " vs " +
                                std::to_string(hyps.size()) + ")");
  }
}

}  // namespace

std::int64_t edit_distance(const std::string& a, const std::string& b) {
  return levenshtein(a, b);
}

std::int64_t edit_distance(const std::vector<std::string>& a,
                           const std::vector<std::string>& b) {
  return levenshtein(a, b);
}

std::vector<std::string> split_words(const std::string& text) {
  std::vector<std::string> words;
  std::string word;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!word.empty()) words.push_back(std::move(word));
      word.clear();
    } else {
      word.push_back(c);
    }
  }
  if (!word.empty()) words.push_back(std::move(word));
  return words;
}

double cer(const std::vector<std::string>& refs, const std::vector<std::string>& hyps) {
  check_same_size(refs, hyps);
  std::int64_t dist = 0, len = 0;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    dist += edit_distance(refs[i], hyps[i]);
    len += static_cast<std::int64_t>(refs[i].size());
  }
  if (len == 0) throw std::invalid_argument("reference corpus has no characters");
  return static_cast<double>(dist) / static_cast<double>(len);
}

double wer(const std::vector<std::string>& refs, const std::vector<std::string>& hyps) {
  check_same_size(refs, hyps);
  std::int64_t dist = 0, len = 0;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    const auto rw = split_words(refs[i]);
    dist += edit_distance(rw, split_words(hyps[i]));
    len += static_cast<std::int64_t>(rw.size());
  }
  if (len == 0) throw std::invalid_argument("reference corpus has no words");
  return static_cast<double>(dist) / static_cast<double>(len);
}

EvalReport evaluate(const std::vector<std::string>& refs, const std::vector<std::string>& hyps,
                    bool case_fold) {
  check_same_size(refs, hyps);
  EvalReport report;
  report.sample_count = static_cast<std::int64_t>(refs.size());
  std::int64_t char_dist = 0, char_len = 0, word_dist = 0, word_len = 0;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    SampleEval row;
    row.reference = refs[i];
    row.hypothesis = hyps[i];
    const std::string r = case_fold ? fold(refs[i]) : refs[i];
    const std::string h = case_fold ? fold(hyps[i]) : hyps[i];
    const auto rw = split_words(r);
    row.char_distance = edit_distance(r, h);
    row.word_distance = edit_distance(rw, split_words(h));
    row.ref_chars = static_cast<std::int64_t>(r.size());
    row.ref_words = static_cast<std::int64_t>(rw.size());
    char_dist += row.char_distance;
    char_len += row.ref_chars;
    word_dist += row.word_distance;
    word_len += row.ref_words;
    report.samples.push_back(std::move(row));
  }
  if (char_len == 0) throw std::invalid_argument("reference corpus has no characters");
  if (word_len == 0) throw std::invalid_argument("reference corpus has no words");
  report.cer = static_cast<double>(char_dist) / static_cast<double>(char_len);
  report.wer = static_cast<double>(word_dist) / static_cast<double>(word_len);
  report.word_accuracy = 1.0 - report.wer;
  return report;
}

void write_report(const EvalReport& report, const std::string& summary_path,
                  const std::string& samples_path) {
  {
    std::ofstream out(summary_path);
    if (!out) throw std::runtime_error(summary_path + ": cannot open for writing");
    out << "samples\t" << report.sample_count << "\n";
    out << "cer\t" << report.cer << "\n";
    out << "wer\t" << report.wer << "\n";
    out << "word_accuracy\t" << report.word_accuracy << "\n";
  }
  std::ofstream out(samples_path);
  if (!out) throw std::runtime_error(samples_path + ": cannot open for writing");
  out << "reference\thypothesis\tchar_distance\tref_chars\tword_distance\tref_words\n";
  for (const SampleEval& s : report.samples) {
    out << s.reference << "\t" << s.hypothesis << "\t" << s.char_distance << "\t" << s.ref_chars
        << "\t" << s.word_distance << "\t" << s.ref_words << "\n";
  }
}

}  // namespace easter
