#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "easter/ctc.hpp"
#include "easter/image.hpp"
#include "easter/rng.hpp"

namespace easter {

struct TextStyle {
  bool bold = false;
  bool italic = false;
  bool underline = false;
};

// Built-in dot-matrix glyphs on a 5x9 cell (7 body rows plus 2 descender
// rows). Everything is procedural so generated datasets depend on nothing
// outside this binary.
class GlyphAtlas {
 public:
  static const GlyphAtlas& builtin();

  static constexpr int kCellWidth = 5;
  static constexpr int kCellHeight = 9;

  bool has(char c) const;
  // Row-major kCellHeight x kCellWidth ink mask.
  const std::vector<bool>& glyph(char c) const;  // throws naming the character
  std::string coverage() const;                  // all supported characters

 private:
  GlyphAtlas();
  std::vector<std::vector<bool>> glyphs_;
  std::vector<bool> present_;
};

// One token of a pattern: either a literal or a character class drawn
// min_count..max_count times.
struct PatternToken {
  std::string literal;  // used when charset is empty
  std::string charset;
  int min_count = 1;
  int max_count = 1;
};

struct PatternTemplate {
  std::string name;
  std::string pattern;
  double weight = 1.0;
  std::vector<PatternToken> tokens;
};

// Pattern syntax: literal text plus {class} tokens where class is one of
// d (digit), l (lower), u (upper), a (letter), n (alphanumeric) or an
// explicit set like [0-9X]. A count suffix {d:3} repeats exactly 3 times and
// {d:2-5} draws the count uniformly.
PatternTemplate parse_template(const std::string& name, const std::string& pattern,
                               double weight);

// Every character the template can emit.
std::string template_alphabet(const PatternTemplate& tmpl);

std::string sample_from_template(const PatternTemplate& tmpl, Rng& rng);

// Weighted draw over templates (weights must sum to 1), then sample.
std::string sample_text(const std::vector<PatternTemplate>& templates, Rng& rng);

// Renders dark-on-light text. Height is fixed; width grows with the text.
// scale is the pixel size of one atlas cell unit.
Image render_text(const std::string& text, const TextStyle& style, int scale = 3,
                  int height = 40);

struct GeneratorConfig {
  Vocabulary vocab;
  std::vector<PatternTemplate> templates;
  double p_bold = 0.0;
  double p_italic = 0.0;
  double p_underline = 0.0;
  int height = 40;
  int scale = 3;
  std::int64_t size = 1;
  std::uint64_t seed = 0;
};

// Parses and validates the JSON schema documented in the README: vocab,
// size, seed, styles {bold, italic, underline}, templates [{name, pattern,
// weight}], optional height/scale.
GeneratorConfig parse_generator_config(const std::string& json_text);

struct ManifestEntry {
  std::string path;  // relative to the manifest's directory
  std::string transcript;
};

std::vector<ManifestEntry> read_manifest(const std::string& path);
void write_manifest(const std::string& path, const std::vector<ManifestEntry>& entries);

// Writes size images under out_dir/images plus out_dir/manifest.tsv and a
// config echo; returns the manifest. Every byte is a function of (config,
// seed): sample i draws from a stream derived from (seed, i).
std::vector<ManifestEntry> generate_dataset(const GeneratorConfig& config,
                                            const std::string& out_dir);

}  // namespace easter
