#include "easter/datagen.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace easter {
namespace {

struct GlyphSource {
  char c;
  // 9 rows of 5 columns, '|' separated, '#' marks ink. Rows 0..6 are the
  // body, rows 7..8 hold descenders.
  const char* rows;
};

// Dot-matrix font, cap height 7 with 2 descender rows.
const GlyphSource kGlyphSources[] = {
    {' ', ".....|.....|.....|.....|.....|.....|.....|.....|....."},
    {'0', ".###.|#...#|#..##|#.#.#|##..#|#...#|.###.|.....|....."},
    {'1', "..#..|.##..|..#..|..#..|..#..|..#..|.###.|.....|....."},
    {'2', ".###.|#...#|....#|...#.|..#..|.#...|#####|.....|....."},
    {'3', ".###.|#...#|....#|..##.|....#|#...#|.###.|.....|....."},
    {'4', "...#.|..##.|.#.#.|#..#.|#####|...#.|...#.|.....|....."},
    {'5', "#####|#....|####.|....#|....#|#...#|.###.|.....|....."},
    {'6', "..##.|.#...|#....|####.|#...#|#...#|.###.|.....|....."},
    {'7', "#####|....#|...#.|..#..|..#..|..#..|..#..|.....|....."},
    {'8', ".###.|#...#|#...#|.###.|#...#|#...#|.###.|.....|....."},
    {'9', ".###.|#...#|#...#|.####|....#|...#.|.##..|.....|....."},
    {'A', ".###.|#...#|#...#|#####|#...#|#...#|#...#|.....|....."},
    {'B', "####.|#...#|#...#|####.|#...#|#...#|####.|.....|....."},
    {'C', ".###.|#...#|#....|#....|#....|#...#|.###.|.....|....."},
    {'D', "####.|#...#|#...#|#...#|#...#|#...#|####.|.....|....."},
    {'E', "#####|#....|#....|####.|#....|#....|#####|.....|....."},
    {'F', "#####|#....|#....|####.|#....|#....|#....|.....|....."},
    {'G', ".###.|#...#|#....|#.###|#...#|#...#|.###.|.....|....."},
    {'H', "#...#|#...#|#...#|#####|#...#|#...#|#...#|.....|....."},
    {'I', ".###.|..#..|..#..|..#..|..#..|..#..|.###.|.....|....."},
    {'J', "..###|...#.|...#.|...#.|...#.|#..#.|.##..|.....|....."},
    {'K', "#...#|#..#.|#.#..|##...|#.#..|#..#.|#...#|.....|....."},
    {'L', "#....|#....|#....|#....|#....|#....|#####|.....|....."},
    {'M', "#...#|##.##|#.#.#|#.#.#|#...#|#...#|#...#|.....|....."},
    {'N', "#...#|##..#|#.#.#|#..##|#...#|#...#|#...#|.....|....."},
    {'O', ".###.|#...#|#...#|#...#|#...#|#...#|.###.|.....|....."},
    {'P', "####.|#...#|#...#|####.|#....|#....|#....|.....|....."},
    {'Q', ".###.|#...#|#...#|#...#|#.#.#|#..#.|.##.#|.....|....."},
    {'R', "####.|#...#|#...#|####.|#.#..|#..#.|#...#|.....|....."},
    {'S', ".####|#....|#....|.###.|....#|....#|####.|.....|....."},
    {'T', "#####|..#..|..#..|..#..|..#..|..#..|..#..|.....|....."},
    {'U', "#...#|#...#|#...#|#...#|#...#|#...#|.###.|.....|....."},
    {'V', "#...#|#...#|#...#|#...#|#...#|.#.#.|..#..|.....|....."},
    {'W', "#...#|#...#|#...#|#.#.#|#.#.#|##.##|#...#|.....|....."},
    {'X', "#...#|#...#|.#.#.|..#..|.#.#.|#...#|#...#|.....|....."},
    {'Y', "#...#|#...#|.#.#.|..#..|..#..|..#..|..#..|.....|....."},
    {'Z', "#####|....#|...#.|..#..|.#...|#....|#####|.....|....."},
    {'a', ".....|.....|.###.|....#|.####|#...#|.####|.....|....."},
    {'b', "#....|#....|####.|#...#|#...#|#...#|####.|.....|....."},
    {'c', ".....|.....|.###.|#....|#....|#....|.###.|.....|....."},
    {'d', "....#|....#|.####|#...#|#...#|#...#|.####|.....|....."},
    {'e', ".....|.....|.###.|#...#|#####|#....|.###.|.....|....."},
    {'f', "..##.|.#...|####.|.#...|.#...|.#...|.#...|.....|....."},
    {'g', ".....|.....|.####|#...#|#...#|#...#|.####|....#|.###."},
    {'h', "#....|#....|####.|#...#|#...#|#...#|#...#|.....|....."},
    {'i', "..#..|.....|.##..|..#..|..#..|..#..|.###.|.....|....."},
    {'j', "...#.|.....|..##.|...#.|...#.|...#.|...#.|#..#.|.##.."},
    {'k', "#....|#....|#..#.|#.#..|##...|#.#..|#..#.|.....|....."},
    {'l', ".##..|..#..|..#..|..#..|..#..|..#..|.###.|.....|....."},
    {'m', ".....|.....|##.#.|#.#.#|#.#.#|#.#.#|#.#.#|.....|....."},
    {'n', ".....|.....|####.|#...#|#...#|#...#|#...#|.....|....."},
    {'o', ".....|.....|.###.|#...#|#...#|#...#|.###.|.....|....."},
    {'p', ".....|.....|####.|#...#|#...#|#...#|####.|#....|#...."},
    {'q', ".....|.....|.####|#...#|#...#|#...#|.####|....#|....#"},
    {'r', ".....|.....|#.##.|##..#|#....|#....|#....|.....|....."},
    {'s', ".....|.....|.####|#....|.###.|....#|####.|.....|....."},
    {'t', ".#...|.#...|####.|.#...|.#...|.#..#|..##.|.....|....."},
    {'u', ".....|.....|#...#|#...#|#...#|#..##|.##.#|.....|....."},
    {'v', ".....|.....|#...#|#...#|#...#|.#.#.|..#..|.....|....."},
    {'w', ".....|.....|#...#|#...#|#.#.#|#.#.#|.#.#.|.....|....."},
    {'x', ".....|.....|#...#|.#.#.|..#..|.#.#.|#...#|.....|....."},
    {'y', ".....|.....|#...#|#...#|#...#|#...#|.####|....#|.###."},
    {'z', ".....|.....|#####|...#.|..#..|.#...|#####|.....|....."},
    {'$', "..#..|.####|#.#..|.###.|..#.#|####.|..#..|.....|....."},
    {'.', ".....|.....|.....|.....|.....|.##..|.##..|.....|....."},
    {',', ".....|.....|.....|.....|.....|.##..|..#..|.#...|....."},
    {'-', ".....|.....|.....|.###.|.....|.....|.....|.....|....."},
    {'/', "....#|....#|...#.|..#..|.#...|#....|#....|.....|....."},
    {':', ".....|.....|.##..|.##..|.....|.##..|.##..|.....|....."},
    {'@', ".###.|#...#|#.###|#.#.#|#.###|#....|.###.|.....|....."},
    {'(', "...#.|..#..|.#...|.#...|.#...|..#..|...#.|.....|....."},
    {')', ".#...|..#..|...#.|...#.|...#.|..#..|.#...|.....|....."},
    {'\'', "..#..|..#..|.#...|.....|.....|.....|.....|.....|....."},
    {'&', ".##..|#..#.|#..#.|.##..|#.#.#|#..#.|.##.#|.....|....."},
};

std::string char_name(char c) {
  char buf[32];
  if (std::isprint(static_cast<unsigned char>(c))) {
    std::snprintf(buf, sizeof(buf), "'%c' (0x%02x)", c, static_cast<unsigned char>(c));
  } else {
    std::snprintf(buf, sizeof(buf), "0x%02x", static_cast<unsigned char>(c));
  }
  return buf;
}

std::string class_chars(char cls, std::size_t pos) {
  switch (cls) {
    case 'd':
      return "0123456789";
    case 'l':
      return "abcdefghijklmnopqrstuvwxyz";
    case 'u':
      return "ABCDEFGHIJKLMNOPQRSTUVWXYZ";
    case 'a':
      return "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz";
    case 'n':
      return "0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz";
    default:
      throw std::invalid_argument("unknown character class '" + std::string(1, cls) +
                                  "' at position " + std::to_string(pos) +
                                  "; expected one of d l u a n or [set]");
  }
}

// Expands [..] contents: plain characters plus inclusive x-y ranges, deduped
// so each character is drawn with equal probability.
std::string expand_set(const std::string& body, std::size_t pos) {
  if (body.empty()) throw std::invalid_argument("empty character set at position " + std::to_string(pos));
  std::string out;
  bool seen[256] = {};
  auto push = [&](char c) {
    const auto u = static_cast<unsigned char>(c);
    if (!seen[u]) {
      seen[u] = true;
      out.push_back(c);
    }
  };
  for (std::size_t i = 0; i < body.size(); ++i) {
    if (body[i] == '-' && i > 0 && i + 1 < body.size()) {
      const char lo = body[i - 1];
      const char hi = body[i + 1];
      if (static_cast<unsigned char>(lo) > static_cast<unsigned char>(hi)) {
        throw std::invalid_argument("descending range '" + std::string(1, lo) + "-" +
                                    std::string(1, hi) + "' in character set");
      }
      for (int c = lo + 1; c <= hi; ++c) push(static_cast<char>(c));
      ++i;
    } else {
      push(body[i]);
    }
  }
  return out;
}

double json_prob(const nlohmann::json& j, const std::string& key, double fallback) {
  if (!j.contains(key)) return fallback;
  const double v = j.at(key).get<double>();
  if (!(v >= 0.0 && v <= 1.0)) {
    throw std::invalid_argument("generator config: " + key + " must be in [0, 1]");
  }
  return v;
}

}  // namespace

GlyphAtlas::GlyphAtlas() : glyphs_(256), present_(256, false) {
  for (const auto& src : kGlyphSources) {
    std::vector<bool> mask;
    mask.reserve(kCellWidth * kCellHeight);
    int rows = 0;
    const char* p = src.rows;
    while (*p != '\0') {
      int cols = 0;
      while (*p != '\0' && *p != '|') {
        mask.push_back(*p == '#');
        ++cols;
        ++p;
      }
      if (cols != kCellWidth) throw std::logic_error("malformed glyph row");
      ++rows;
      if (*p == '|') ++p;
    }
    if (rows != kCellHeight) throw std::logic_error("malformed glyph height");
    const auto u = static_cast<unsigned char>(src.c);
    glyphs_[u] = std::move(mask);
    present_[u] = true;
  }
}

const GlyphAtlas& GlyphAtlas::builtin() {
  static const GlyphAtlas atlas;
  return atlas;
}

bool GlyphAtlas::has(char c) const { return present_[static_cast<unsigned char>(c)]; }

const std::vector<bool>& GlyphAtlas::glyph(char c) const {
  if (!has(c)) throw std::invalid_argument("no glyph for character " + char_name(c));
  return glyphs_[static_cast<unsigned char>(c)];
}

std::string GlyphAtlas::coverage() const {
  std::string out;
  for (int c = 0; c < 256; ++c) {
    if (present_[c]) out.push_back(static_cast<char>(c));
  }
  return out;
}

PatternTemplate parse_template(const std::string& name, const std::string& pattern,
                               double weight) {
  if (pattern.empty()) {
    throw std::invalid_argument("template '" + name + "': pattern must not be empty");
  }
  if (!(weight > 0.0)) {
    throw std::invalid_argument("template '" + name + "': weight must be positive");
  }
  PatternTemplate tmpl;
  tmpl.name = name;
  tmpl.pattern = pattern;
  tmpl.weight = weight;

  std::size_t i = 0;
  while (i < pattern.size()) {
    if (pattern[i] != '{') {
      std::size_t j = i;
      while (j < pattern.size() && pattern[j] != '{') ++j;
      PatternToken tok;
      tok.literal = pattern.substr(i, j - i);
      tmpl.tokens.push_back(std::move(tok));
      i = j;
      continue;
    }
    const std::size_t close = pattern.find('}', i);
    if (close == std::string::npos) {
      throw std::invalid_argument("template '" + name + "': unterminated '{' at position " +
                                  std::to_string(i));
    }
    std::string body = pattern.substr(i + 1, close - i - 1);
    PatternToken tok;

    // Split off a ":count" suffix (count is n or n-m).
    std::size_t colon = std::string::npos;
    if (body.size() > 0 && body[0] == '[') {
      const std::size_t set_end = body.find(']');
      if (set_end == std::string::npos) {
        throw std::invalid_argument("template '" + name + "': unterminated '[' at position " +
                                    std::to_string(i + 1));
      }
      colon = body.find(':', set_end + 1);
      tok.charset = expand_set(body.substr(1, set_end - 1), i + 2);
      if (colon == std::string::npos && set_end + 1 != body.size()) {
        throw std::invalid_argument("template '" + name + "': trailing text after ']' at position " +
                                    std::to_string(i + 1 + set_end));
      }
    } else {
      colon = body.find(':');
      const std::string cls = body.substr(0, colon);
      if (cls.size() != 1) {
        throw std::invalid_argument("template '" + name + "': bad class '" + cls +
                                    "' at position " + std::to_string(i + 1));
      }
      tok.charset = class_chars(cls[0], i + 1);
    }

    if (colon != std::string::npos) {
      const std::string count = body.substr(colon + 1);
      const std::size_t dash = count.find('-');
      try {
        if (dash == std::string::npos) {
          tok.min_count = tok.max_count = std::stoi(count);
        } else {
          tok.min_count = std::stoi(count.substr(0, dash));
          tok.max_count = std::stoi(count.substr(dash + 1));
        }
      } catch (const std::exception&) {
        throw std::invalid_argument("template '" + name + "': bad count '" + count + "'");
      }
      if (tok.min_count < 1 || tok.max_count < tok.min_count || tok.max_count > 64) {
        throw std::invalid_argument("template '" + name + "': count must satisfy 1 <= min <= max <= 64, got '" +
                                    count + "'");
      }
    }
    tmpl.tokens.push_back(std::move(tok));
    i = close + 1;
  }
  return tmpl;
}

std::string template_alphabet(const PatternTemplate& tmpl) {
  bool seen[256] = {};
  for (const auto& tok : tmpl.tokens) {
    for (char c : tok.literal) seen[static_cast<unsigned char>(c)] = true;
    for (char c : tok.charset) seen[static_cast<unsigned char>(c)] = true;
  }
  std::string out;
  for (int c = 0; c < 256; ++c) {
    if (seen[c]) out.push_back(static_cast<char>(c));
  }
  return out;
}

std::string sample_from_template(const PatternTemplate& tmpl, Rng& rng) {
  std::string out;
  for (const auto& tok : tmpl.tokens) {
    if (tok.charset.empty()) {
      out += tok.literal;
      continue;
    }
    const int count = tok.min_count == tok.max_count
                          ? tok.min_count
                          : static_cast<int>(rng.uniform_int(tok.min_count, tok.max_count));
    for (int k = 0; k < count; ++k) {
      out.push_back(tok.charset[rng.uniform_int(0, static_cast<std::int64_t>(tok.charset.size()) - 1)]);
    }
  }
  return out;
}

std::string sample_text(const std::vector<PatternTemplate>& templates, Rng& rng) {
  if (templates.empty()) throw std::invalid_argument("no templates to sample from");
  const double u = rng.uniform();
  double cum = 0.0;
  for (const auto& tmpl : templates) {
    cum += tmpl.weight;
    if (u < cum) return sample_from_template(tmpl, rng);
  }
  return sample_from_template(templates.back(), rng);
}

Image render_text(const std::string& text, const TextStyle& style, int scale, int height) {
  if (text.empty()) throw std::invalid_argument("cannot render empty text");
  if (scale < 1) throw std::invalid_argument("scale must be >= 1");
  const int cell_h = GlyphAtlas::kCellHeight * scale;
  if (height < cell_h + scale) {
    throw std::invalid_argument("height " + std::to_string(height) +
                                " is too small for scale " + std::to_string(scale));
  }
  const GlyphAtlas& atlas = GlyphAtlas::builtin();
  for (char c : text) atlas.glyph(c);  // validate up front

  const int margin = scale;
  const int advance = (GlyphAtlas::kCellWidth + 1) * scale;
  const int top = (height - cell_h) / 2;
  const int bottom = top + cell_h - 1;
  // Italic shears rows right by up to a quarter of the glyph box height.
  const int italic_extra = style.italic ? (cell_h - 1) / 4 : 0;
  const int bold_extra = style.bold ? 1 : 0;
  const int width =
      2 * margin + advance * static_cast<int>(text.size()) + italic_extra + bold_extra;

  Image img;
  img.width = width;
  img.height = height;
  img.pixels.assign(static_cast<std::size_t>(width) * height, 255);

  auto blot = [&](int x0, int y0) {
    for (int dy = 0; dy < scale; ++dy) {
      for (int dx = 0; dx < scale + bold_extra; ++dx) {
        const int x = x0 + dx;
        const int y = y0 + dy;
        if (x >= 0 && x < width && y >= 0 && y < height) img.at(y, x) = 0;
      }
    }
  };

  for (std::size_t idx = 0; idx < text.size(); ++idx) {
    const auto& mask = atlas.glyph(text[idx]);
    const int pen_x = margin + advance * static_cast<int>(idx);
    for (int r = 0; r < GlyphAtlas::kCellHeight; ++r) {
      const int y0 = top + r * scale;
      const int shear = style.italic ? (bottom - y0) / 4 : 0;
      for (int c = 0; c < GlyphAtlas::kCellWidth; ++c) {
        if (mask[static_cast<std::size_t>(r) * GlyphAtlas::kCellWidth + c]) {
          blot(pen_x + c * scale + shear, y0);
        }
      }
    }
  }

  if (style.underline) {
    const int y0 = std::min(bottom + 2, height - scale);
    for (int dy = 0; dy < scale; ++dy) {
      for (int x = margin; x < width - margin; ++x) img.at(y0 + dy, x) = 0;
    }
  }
  return img;
}

GeneratorConfig parse_generator_config(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("generator config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("generator config must be a JSON object");

  GeneratorConfig cfg;
  if (!j.contains("vocab") || !j.at("vocab").is_string()) {
    throw std::invalid_argument("generator config: missing string field 'vocab'");
  }
  cfg.vocab = Vocabulary(j.at("vocab").get<std::string>());

  cfg.size = j.value("size", std::int64_t{1});
  if (cfg.size < 1) throw std::invalid_argument("generator config: size must be >= 1");
  cfg.seed = j.value("seed", std::uint64_t{0});
  cfg.height = j.value("height", 40);
  cfg.scale = j.value("scale", 3);
  if (cfg.scale < 1) throw std::invalid_argument("generator config: scale must be >= 1");
  if (cfg.height < GlyphAtlas::kCellHeight * cfg.scale + cfg.scale) {
    throw std::invalid_argument("generator config: height too small for scale");
  }

  if (j.contains("styles")) {
    const auto& s = j.at("styles");
    if (!s.is_object()) throw std::invalid_argument("generator config: styles must be an object");
    cfg.p_bold = json_prob(s, "bold", 0.0);
    cfg.p_italic = json_prob(s, "italic", 0.0);
    cfg.p_underline = json_prob(s, "underline", 0.0);
  }

  if (!j.contains("templates") || !j.at("templates").is_array() || j.at("templates").empty()) {
    throw std::invalid_argument("generator config: 'templates' must be a non-empty array");
  }
  double weight_sum = 0.0;
  for (const auto& t : j.at("templates")) {
    if (!t.is_object() || !t.contains("pattern")) {
      throw std::invalid_argument("generator config: each template needs a 'pattern'");
    }
    const std::string name = t.value("name", std::string("template") +
                                                 std::to_string(cfg.templates.size()));
    const double weight = t.value("weight", 1.0);
    cfg.templates.push_back(parse_template(name, t.at("pattern").get<std::string>(), weight));
    weight_sum += weight;
  }
  if (std::abs(weight_sum - 1.0) > 1e-6) {
    std::ostringstream msg;
    msg << "generator config: template weights must sum to 1, got " << weight_sum;
    throw std::invalid_argument(msg.str());
  }

  // Everything a template can emit must be encodable and renderable.
  const GlyphAtlas& atlas = GlyphAtlas::builtin();
  for (const auto& tmpl : cfg.templates) {
    for (char c : template_alphabet(tmpl)) {
      cfg.vocab.encode(std::string(1, c));  // throws naming the character
      if (!atlas.has(c)) {
        throw std::invalid_argument("template '" + tmpl.name + "' can emit character " +
                                    char_name(c) + " which has no glyph");
      }
    }
  }
  return cfg;
}

std::vector<ManifestEntry> read_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open manifest: " + path);
  std::vector<ManifestEntry> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": expected <path>\\t<transcript>");
    }
    entries.push_back({line.substr(0, tab), line.substr(tab + 1)});
  }
  return entries;
}

void write_manifest(const std::string& path, const std::vector<ManifestEntry>& entries) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write manifest: " + path);
  for (const auto& e : entries) {
    if (e.transcript.find_first_of("\t\n") != std::string::npos) {
      throw std::invalid_argument("transcript for " + e.path + " contains a tab or newline");
    }
    out << e.path << '\t' << e.transcript << '\n';
  }
  if (!out) throw std::runtime_error("failed writing manifest: " + path);
}

std::vector<ManifestEntry> generate_dataset(const GeneratorConfig& config,
                                            const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(out_dir) / "images");

  std::vector<ManifestEntry> entries;
  entries.reserve(static_cast<std::size_t>(config.size));
  for (std::int64_t i = 0; i < config.size; ++i) {
    // One stream per sample keyed by index, so output bytes are independent
    // of iteration order or sharding.
    Rng rng = derive_rng(config.seed, {static_cast<std::uint64_t>(i)});
    const std::string text = sample_text(config.templates, rng);
    TextStyle style;
    style.bold = rng.bernoulli(config.p_bold);
    style.italic = rng.bernoulli(config.p_italic);
    style.underline = rng.bernoulli(config.p_underline);

    const Image img = render_text(text, style, config.scale, config.height);
    char rel[32];
    std::snprintf(rel, sizeof(rel), "images/%06lld.pgm", static_cast<long long>(i));
    write_pgm(img, (fs::path(out_dir) / rel).string());
    entries.push_back({rel, text});
  }
  write_manifest((fs::path(out_dir) / "manifest.tsv").string(), entries);
  return entries;
}

}  // namespace easter
