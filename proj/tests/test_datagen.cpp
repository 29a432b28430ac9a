#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "easter/datagen.hpp"
#include "easter/image.hpp"
#include "easter/rng.hpp"

using namespace easter;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(static_cast<bool>(in));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& name) : path(name) { std::filesystem::remove_all(path); }
  ~TempDir() { std::filesystem::remove_all(path); }
};

int ink_pixels(const Image& img) {
  int count = 0;
  for (unsigned char p : img.pixels) {
    if (p < 128) ++count;
  }
  return count;
}

GeneratorConfig small_config(std::uint64_t seed, std::int64_t size) {
  std::ostringstream json;
  json << "{\n"
       << "  \"vocab\": \"0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZ-\",\n"
       << "  \"size\": " << size << ",\n"
       << "  \"seed\": " << seed << ",\n"
       << "  \"styles\": {\"bold\": 0.3, \"italic\": 0.3, \"underline\": 0.2},\n"
       << "  \"templates\": [\n"
       << "    {\"name\": \"code\", \"pattern\": \"{u:2}-{d:3}\", \"weight\": 0.7},\n"
       << "    {\"name\": \"digits\", \"pattern\": \"{d:4}\", \"weight\": 0.3}\n"
       << "  ]\n"
       << "}\n";
  return parse_generator_config(json.str());
}

}  // namespace

TEST_CASE("atlas covers digits, letters, and the punctuation set") {
  const GlyphAtlas& atlas = GlyphAtlas::builtin();
  const std::string required =
      "0123456789"
      "ABCDEFGHIJKLMNOPQRSTUVWXYZ"
      "abcdefghijklmnopqrstuvwxyz"
      " $.,-/:@()'&";
  for (char c : required) {
    INFO("character: ", c);
    CHECK(atlas.has(c));
    CHECK(atlas.glyph(c).size() == GlyphAtlas::kCellWidth * GlyphAtlas::kCellHeight);
  }
  CHECK(atlas.coverage().size() >= required.size());
  CHECK_FALSE(atlas.has('#'));
  CHECK_THROWS_WITH_AS(atlas.glyph('#'), doctest::Contains("'#'"), std::invalid_argument);
}

TEST_CASE("every visible glyph has ink and space has none") {
  const GlyphAtlas& atlas = GlyphAtlas::builtin();
  for (char c : atlas.coverage()) {
    const auto& mask = atlas.glyph(c);
    const int ink = static_cast<int>(std::count(mask.begin(), mask.end(), true));
    if (c == ' ') {
      CHECK(ink == 0);
    } else {
      INFO("character: ", c);
      CHECK(ink >= 3);
    }
  }
}

TEST_CASE("rendering grows width by one fixed advance per character") {
  const TextStyle plain;
  const Image one = render_text("1", plain);
  const Image two = render_text("11", plain);
  const Image ten = render_text("1111111111", plain);
  CHECK(one.height == 40);
  CHECK(two.width - one.width == 18);  // 6 cells at scale 3
  CHECK(ten.width - one.width == 9 * 18);

  const Image big = render_text("1", plain, 4, 64);
  const Image big2 = render_text("11", plain, 4, 64);
  CHECK(big.height == 64);
  CHECK(big2.width - big.width == 24);
}

TEST_CASE("rendered pixels are pure black on white") {
  const Image img = render_text("A7", TextStyle{});
  std::set<unsigned char> values(img.pixels.begin(), img.pixels.end());
  CHECK(values == std::set<unsigned char>{0, 255});
  CHECK(ink_pixels(img) > 0);
}

TEST_CASE("render rejects empty text, unknown characters, and cramped canvases") {
  CHECK_THROWS_AS(render_text("", TextStyle{}), std::invalid_argument);
  CHECK_THROWS_WITH_AS(render_text("a#b", TextStyle{}), doctest::Contains("'#'"),
                       std::invalid_argument);
  CHECK_THROWS_AS(render_text("a", TextStyle{}, 3, 20), std::invalid_argument);
  CHECK_THROWS_AS(render_text("a", TextStyle{}, 0, 40), std::invalid_argument);
}

TEST_CASE("styles change the rendering in their characteristic way") {
  const std::string text = "Hx3";
  const Image plain = render_text(text, TextStyle{});

  TextStyle bold;
  bold.bold = true;
  CHECK(ink_pixels(render_text(text, bold)) > ink_pixels(plain));

  TextStyle underline;
  underline.underline = true;
  const Image ul = render_text(text, underline);
  CHECK(ul.width == plain.width);
  CHECK(ink_pixels(ul) > ink_pixels(plain));
  int full_rows = 0;
  for (int y = 0; y < ul.height; ++y) {
    int row_ink = 0;
    for (int x = 3; x < ul.width - 3; ++x) row_ink += ul.at(y, x) == 0 ? 1 : 0;
    if (row_ink == ul.width - 6) ++full_rows;
  }
  CHECK(full_rows == 3);  // underline stroke is one scaled cell tall

  TextStyle italic;
  italic.italic = true;
  const Image it = render_text(text, italic);
  CHECK(it.height == plain.height);
  CHECK(it.width > plain.width);
  // Same ink mass, just sheared.
  CHECK(ink_pixels(it) == ink_pixels(plain));
}

TEST_CASE("templates parse into literal and class tokens") {
  const PatternTemplate tmpl = parse_template("t", "AB{d:3}-{u}{[0-9X]:2-4}", 1.0);
  REQUIRE(tmpl.tokens.size() == 5);
  CHECK(tmpl.tokens[0].literal == "AB");
  CHECK(tmpl.tokens[1].charset == "0123456789");
  CHECK(tmpl.tokens[1].min_count == 3);
  CHECK(tmpl.tokens[1].max_count == 3);
  CHECK(tmpl.tokens[2].literal == "-");
  CHECK(tmpl.tokens[3].charset.size() == 26);
  CHECK(tmpl.tokens[4].charset == "0123456789X");
  CHECK(tmpl.tokens[4].min_count == 2);
  CHECK(tmpl.tokens[4].max_count == 4);

  const std::string alphabet = template_alphabet(tmpl);
  CHECK(alphabet.find('A') != std::string::npos);
  CHECK(alphabet.find('-') != std::string::npos);
  CHECK(alphabet.find('X') != std::string::npos);
  CHECK(alphabet.find('z') == std::string::npos);
}

TEST_CASE("malformed templates are rejected with positions") {
  CHECK_THROWS_AS(parse_template("t", "", 1.0), std::invalid_argument);
  CHECK_THROWS_AS(parse_template("t", "abc", 0.0), std::invalid_argument);
  CHECK_THROWS_AS(parse_template("t", "{q}", 1.0), std::invalid_argument);
  CHECK_THROWS_AS(parse_template("t", "{d", 1.0), std::invalid_argument);
  CHECK_THROWS_AS(parse_template("t", "{[abc", 1.0), std::invalid_argument);
  CHECK_THROWS_AS(parse_template("t", "{d:0}", 1.0), std::invalid_argument);
  CHECK_THROWS_AS(parse_template("t", "{d:5-2}", 1.0), std::invalid_argument);
  CHECK_THROWS_AS(parse_template("t", "{d:x}", 1.0), std::invalid_argument);
  CHECK_THROWS_AS(parse_template("t", "{[9-0]}", 1.0), std::invalid_argument);
  CHECK_THROWS_AS(parse_template("t", "{[]}", 1.0), std::invalid_argument);
}

TEST_CASE("sampled strings match their template") {
  const PatternTemplate tmpl = parse_template("code", "{u:2}-{d:3}", 1.0);
  Rng rng(99);
  for (int i = 0; i < 200; ++i) {
    const std::string s = sample_from_template(tmpl, rng);
    REQUIRE(s.size() == 6);
    CHECK(std::isupper(static_cast<unsigned char>(s[0])));
    CHECK(std::isupper(static_cast<unsigned char>(s[1])));
    CHECK(s[2] == '-');
    for (int k = 3; k < 6; ++k) CHECK(std::isdigit(static_cast<unsigned char>(s[k])));
  }

  const PatternTemplate ranged = parse_template("r", "{l:2-5}", 1.0);
  std::set<std::size_t> lengths;
  for (int i = 0; i < 400; ++i) {
    const std::string s = sample_from_template(ranged, rng);
    CHECK(s.size() >= 2);
    CHECK(s.size() <= 5);
    lengths.insert(s.size());
  }
  CHECK(lengths.size() == 4);  // all of 2, 3, 4, 5 appear
}

TEST_CASE("template weights control sampling frequency") {
  std::vector<PatternTemplate> templates = {
      parse_template("a", "A", 0.7),
      parse_template("b", "B", 0.3),
  };
  Rng rng(1234);
  int a_count = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    if (sample_text(templates, rng) == "A") ++a_count;
  }
  CHECK(a_count / static_cast<double>(n) == doctest::Approx(0.7).epsilon(0.03));
}

TEST_CASE("generator config validation catches schema errors") {
  CHECK_THROWS_AS(parse_generator_config("not json"), std::invalid_argument);
  CHECK_THROWS_AS(parse_generator_config("[1,2]"), std::invalid_argument);
  CHECK_THROWS_AS(parse_generator_config(R"({"size": 5})"), std::invalid_argument);

  // Weights summing to 0.9.
  CHECK_THROWS_WITH_AS(parse_generator_config(R"({
    "vocab": "01",
    "templates": [{"pattern": "{[01]}", "weight": 0.9}]
  })"),
                       doctest::Contains("sum to 1"), std::invalid_argument);

  // Template emits 'X' which the vocabulary lacks.
  CHECK_THROWS_AS(parse_generator_config(R"({
    "vocab": "01",
    "templates": [{"pattern": "X{[01]}", "weight": 1.0}]
  })"),
                  std::invalid_argument);

  // Template emits '#' which has no glyph.
  CHECK_THROWS_WITH_AS(parse_generator_config(R"({
    "vocab": "01#",
    "templates": [{"pattern": "#{[01]}", "weight": 1.0}]
  })"),
                       doctest::Contains("glyph"), std::invalid_argument);

  CHECK_THROWS_AS(parse_generator_config(R"({
    "vocab": "01",
    "styles": {"bold": 1.5},
    "templates": [{"pattern": "{[01]}", "weight": 1.0}]
  })"),
                  std::invalid_argument);

  CHECK_THROWS_AS(parse_generator_config(R"({
    "vocab": "01",
    "size": 0,
    "templates": [{"pattern": "{[01]}", "weight": 1.0}]
  })"),
                  std::invalid_argument);
}

TEST_CASE("manifest writing and reading round-trips") {
  TempDir dir("datagen_test_manifest");
  std::filesystem::create_directories(dir.path);
  const std::string path = (dir.path / "manifest.tsv").string();

  const std::vector<ManifestEntry> entries = {
      {"images/000000.pgm", "AB-123"},
      {"images/000001.pgm", "hello world"},
  };
  write_manifest(path, entries);
  const auto back = read_manifest(path);
  REQUIRE(back.size() == 2);
  CHECK(back[0].path == entries[0].path);
  CHECK(back[0].transcript == entries[0].transcript);
  CHECK(back[1].transcript == "hello world");

  CHECK_THROWS_AS(write_manifest(path, {{"a.pgm", "bad\ttab"}}), std::invalid_argument);
  CHECK_THROWS_AS(read_manifest((dir.path / "absent.tsv").string()), std::runtime_error);

  std::ofstream bad(dir.path / "bad.tsv");
  bad << "no-tab-here\n";
  bad.close();
  CHECK_THROWS_AS(read_manifest((dir.path / "bad.tsv").string()), std::runtime_error);
}

TEST_CASE("generated datasets have the requested size and valid transcripts") {
  TempDir dir("datagen_test_gen");
  const GeneratorConfig cfg = small_config(5, 25);
  const auto entries = generate_dataset(cfg, dir.path.string());
  REQUIRE(entries.size() == 25);

  const auto manifest = read_manifest((dir.path / "manifest.tsv").string());
  REQUIRE(manifest.size() == 25);
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    CHECK(manifest[i].path == entries[i].path);
    CHECK(manifest[i].transcript == entries[i].transcript);

    // Transcript must come from one of the two templates.
    const std::string& t = manifest[i].transcript;
    const bool code = t.size() == 6 && t[2] == '-';
    const bool digits = t.size() == 4;
    CHECK((code || digits));
    cfg.vocab.encode(t);  // throws if out of vocabulary

    const Image img = read_image((dir.path / manifest[i].path).string());
    CHECK(img.height == 40);
    CHECK(img.width > 0);
    CHECK(ink_pixels(img) > 0);
  }
}

TEST_CASE("generation is byte-deterministic in the seed") {
  TempDir a("datagen_test_a");
  TempDir b("datagen_test_b");
  TempDir c("datagen_test_c");
  generate_dataset(small_config(42, 12), a.path.string());
  generate_dataset(small_config(42, 12), b.path.string());
  generate_dataset(small_config(43, 12), c.path.string());

  CHECK(slurp((a.path / "manifest.tsv").string()) == slurp((b.path / "manifest.tsv").string()));
  CHECK(slurp((a.path / "manifest.tsv").string()) != slurp((c.path / "manifest.tsv").string()));
  for (int i = 0; i < 12; ++i) {
    char rel[32];
    std::snprintf(rel, sizeof(rel), "images/%06d.pgm", i);
    CHECK(slurp((a.path / rel).string()) == slurp((b.path / rel).string()));
  }
}

TEST_CASE("per-sample streams make samples independent of dataset size") {
  TempDir a("datagen_test_prefix_a");
  TempDir b("datagen_test_prefix_b");
  generate_dataset(small_config(7, 4), a.path.string());
  generate_dataset(small_config(7, 9), b.path.string());

  const auto ma = read_manifest((a.path / "manifest.tsv").string());
  const auto mb = read_manifest((b.path / "manifest.tsv").string());
  for (int i = 0; i < 4; ++i) {
    CHECK(ma[i].transcript == mb[i].transcript);
    CHECK(slurp((a.path / ma[i].path).string()) == slurp((b.path / mb[i].path).string()));
  }
}
