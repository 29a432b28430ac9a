#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <csignal>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "easter/augment.hpp"
#include "easter/ctc.hpp"
#include "easter/datagen.hpp"
#include "easter/image.hpp"
#include "easter/metrics.hpp"
#include "easter/model.hpp"
#include "easter/trainer.hpp"

namespace fs = std::filesystem;
using namespace easter;

namespace {

std::atomic<bool> g_stop{false};

void on_interrupt(int) { g_stop.store(true); }

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string fmt(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", value);
  return buf;
}

// Six significant digits; hides binary float noise in human-scale knobs.
std::string fmt_short(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", value);
  return buf;
}

// Load, rescale to the model height, and greedy-decode one image.
std::string transcribe_image(EasterModel& model, const std::string& path) {
  const Image raw = read_image(path);
  const Image scaled = resize_to_height(raw, model.config().input_height);
  LogProbLattice lattice = model.forward_sample(image_to_tensor(scaled));
  return greedy_decode(lattice, model.config().vocab);
}

int run_gen_data(const std::string& config_path, const std::string& out_dir, bool has_seed,
                 std::uint64_t seed, std::int64_t size) {
  GeneratorConfig config = parse_generator_config(slurp(config_path));
  if (has_seed) config.seed = seed;
  if (size >= 0) config.size = size;
  generate_dataset(config, out_dir);
  std::cout << "manifest\t" << (fs::path(out_dir) / "manifest.tsv").string() << "\n"
            << "samples\t" << config.size << "\n";
  std::cerr << "wrote " << config.size << " samples to " << out_dir << "\n";
  return 0;
}

int run_augment_preview(const std::string& pipeline_path, const std::string& input,
                        const std::string& out, std::uint64_t seed) {
  const AugmentPipeline pipeline = parse_augment_pipeline(slurp(pipeline_path));
  const Image augmented = apply(pipeline, read_image(input), seed);
  write_pgm(augmented, out);
  std::cout << "out\t" << out << "\n"
            << "size\t" << augmented.width << "x" << augmented.height << "\n";
  return 0;
}

int run_train(const std::string& config_path, bool resume) {
  TrainingConfig config = parse_training_config(slurp(config_path));
  std::signal(SIGINT, on_interrupt);
  Trainer trainer(config);
  std::cerr << "training to step " << config.max_steps << " (batch " << config.batch_size
            << ", eval every " << config.eval_interval << ")\n";
  FitOptions options;
  options.resume = resume;
  options.stop = &g_stop;
  const FitResult result = trainer.fit(options);
  std::cout << "final_step\t" << result.final_step << "\n"
            << "best_val_cer\t" << fmt(result.best_val_cer) << "\n"
            << "final_val_cer\t" << fmt(result.final_val_cer) << "\n"
            << "final_val_wer\t" << fmt(result.final_val_wer) << "\n"
            << "skipped_samples\t" << result.skipped_samples << "\n"
            << "stopped_early\t" << (result.stopped_early ? 1 : 0) << "\n"
            << "metrics_csv\t" << result.metrics_csv << "\n"
            << "best_checkpoint\t" << result.best_checkpoint << "\n"
            << "last_checkpoint\t" << result.last_checkpoint << "\n";
  if (result.stopped_early) {
    std::cerr << "interrupted at step " << result.final_step
              << "; rerun with --resume to continue\n";
  } else {
    std::cerr << "finished at step " << result.final_step << ", best val CER "
              << fmt(result.best_val_cer) << "\n";
  }
  return 0;
}

int run_eval(const std::string& checkpoint, const std::string& manifest, const std::string& out_dir,
             bool case_fold) {
  EasterModel model = EasterModel::load_checkpoint(checkpoint);
  model.set_training(false);
  const auto samples = load_dataset(manifest);
  std::vector<std::string> refs, hyps;
  refs.reserve(samples.size());
  hyps.reserve(samples.size());
  for (const auto& sample : samples) {
    refs.push_back(sample.transcript);
    hyps.push_back(transcribe_image(model, sample.path));
  }
  const EvalReport report = evaluate(refs, hyps, case_fold);
  fs::create_directories(out_dir);
  const std::string summary_path = (fs::path(out_dir) / "summary.tsv").string();
  const std::string samples_path = (fs::path(out_dir) / "samples.tsv").string();
  write_report(report, summary_path, samples_path);
  std::cout << "samples\t" << report.sample_count << "\n"
            << "cer\t" << fmt(report.cer) << "\n"
            << "wer\t" << fmt(report.wer) << "\n"
            << "word_accuracy\t" << fmt(report.word_accuracy) << "\n"
            << "summary\t" << summary_path << "\n"
            << "per_sample\t" << samples_path << "\n";
  std::cerr << report.sample_count << " samples: CER " << fmt(report.cer) << ", WER "
            << fmt(report.wer) << ", word accuracy " << fmt(report.word_accuracy) << "\n";
  return 0;
}

int run_transcribe(const std::string& checkpoint, const std::string& input) {
  EasterModel model = EasterModel::load_checkpoint(checkpoint);
  model.set_training(false);
  std::vector<std::string> paths;
  if (fs::is_directory(input)) {
    for (const auto& entry : fs::directory_iterator(input)) {
      if (entry.is_regular_file()) paths.push_back(entry.path().string());
    }
    std::sort(paths.begin(), paths.end());
  } else {
    paths.push_back(input);
  }
  bool failed = false;
  for (const auto& path : paths) {
    try {
      std::cout << path << "\t" << transcribe_image(model, path) << "\n";
    } catch (const std::exception& e) {
      const std::string message = e.what();
      std::cerr << "easter: ";
      if (message.find(path) == std::string::npos) std::cerr << path << ": ";
      std::cerr << message << "\n";
      failed = true;
    }
  }
  return failed ? 1 : 0;
}

int run_inspect(const std::string& checkpoint, const std::string& config_path) {
  EasterModel model;
  if (!checkpoint.empty()) {
    model = EasterModel::load_checkpoint(checkpoint);
  } else {
    const ModelConfig config = parse_model_config(slurp(config_path));
    Rng rng(0);
    model = EasterModel::build(config, rng);
  }
  std::cout << "name\tsub_blocks\tkernel\tfilters\tdropout\tdilation\tstride\tresidual\n";
  std::cerr << "  name            subs  kernel  filters  dropout  dilation  stride  residual\n";
  for (const auto& row : model.layer_rows()) {
    const BlockSpec& s = row.spec;
    std::cout << row.name << "\t" << s.sub_blocks << "\t" << s.kernel << "\t" << s.filters << "\t"
              << fmt_short(s.dropout) << "\t" << s.dilation << "\t" << s.stride << "\t"
              << (s.residual ? "yes" : "no") << "\n";
    char line[160];
    std::snprintf(line, sizeof(line), "  %-15s %4d  %6d  %7d  %7.2f  %8d  %6d  %s", row.name.c_str(),
                  s.sub_blocks, s.kernel, s.filters, s.dropout, s.dilation, s.stride,
                  s.residual ? "yes" : "no");
    std::cerr << line << "\n";
  }
  std::cout << "params\t" << model.param_count() << "\n"
            << "vocab_size\t" << model.config().vocab.size() << "\n";
  std::cerr << "  " << model.param_count() << " trainable parameters, "
            << model.config().vocab.size() << " characters + blank\n";
  return 0;
}

struct MetricSeries {
  std::string label;
  std::vector<std::pair<double, double>> loss;  // (step, train_loss)
  std::vector<std::pair<double, double>> cer;   // (step, val_cer)
};

std::vector<std::string> split_csv_row(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

MetricSeries read_metrics_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string header;
  if (!std::getline(in, header)) throw std::runtime_error(path + ": empty metrics CSV");
  const auto columns = split_csv_row(header);
  auto column_of = [&](const std::string& name) {
    const auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) throw std::runtime_error(path + ": missing column " + name);
    return static_cast<std::size_t>(it - columns.begin());
  };
  const std::size_t step_col = column_of("step");
  const std::size_t loss_col = column_of("train_loss");
  const std::size_t cer_col = column_of("val_cer");

  MetricSeries series;
  const fs::path p(path);
  series.label = p.stem().string() == "metrics" && p.has_parent_path()
                     ? p.parent_path().filename().string()
                     : p.stem().string();
  if (series.label.empty()) series.label = path;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_row(line);
    if (cells.size() <= std::max({step_col, loss_col, cer_col})) {
      throw std::runtime_error(path + ": short row: " + line);
    }
    const double step = std::stod(cells[step_col]);
    series.loss.emplace_back(step, std::stod(cells[loss_col]));
    if (!cells[cer_col].empty()) series.cer.emplace_back(step, std::stod(cells[cer_col]));
  }
  if (series.loss.empty()) throw std::runtime_error(path + ": empty metrics CSV");
  return series;
}

std::string svg_polyline(const std::vector<std::pair<double, double>>& points,
                         const std::string& color, bool dashed, double x0, double x1, double y0,
                         double y1, double px, double pw, double py, double ph) {
  std::ostringstream out;
  out << "  <polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\"";
  if (dashed) out << " stroke-dasharray=\"6 3\"";
  out << " points=\"";
  for (const auto& [x, y] : points) {
    const double sx = x1 > x0 ? (x - x0) / (x1 - x0) : 0.5;
    const double sy = y1 > y0 ? (y - y0) / (y1 - y0) : 0.5;
    out << fmt(px + sx * pw) << "," << fmt(py + (1.0 - sy) * ph) << " ";
  }
  out << "\"/>\n";
  return out.str();
}

int run_export_plot(const std::vector<std::string>& metrics_paths, const std::string& out) {
  static const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                   "#9467bd", "#8c564b"};
  std::vector<MetricSeries> runs;
  for (const auto& path : metrics_paths) runs.push_back(read_metrics_csv(path));

  double x0 = 1e300, x1 = -1e300, loss0 = 1e300, loss1 = -1e300, cer1 = 0.0;
  for (const auto& run : runs) {
    for (const auto& [x, y] : run.loss) {
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      loss0 = std::min(loss0, y);
      loss1 = std::max(loss1, y);
    }
    for (const auto& [x, y] : run.cer) cer1 = std::max(cer1, y);
  }
  cer1 = std::max(cer1, 1.0);

  // Loss against the left axis, validation CER against the right axis.
  const double px = 60, py = 20, pw = 640, ph = 440;
  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"880\" height=\"520\" "
         "viewBox=\"0 0 880 520\">\n"
      << "  <rect x=\"0\" y=\"0\" width=\"880\" height=\"520\" fill=\"white\"/>\n"
      << "  <rect x=\"" << px << "\" y=\"" << py << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const std::string color = kPalette[i % 6];
    svg << svg_polyline(runs[i].loss, color, false, x0, x1, loss0, loss1, px, pw, py, ph);
    if (!runs[i].cer.empty()) {
      svg << svg_polyline(runs[i].cer, color, true, x0, x1, 0.0, cer1, px, pw, py, ph);
    }
  }
  // Axis labels and legend.
  svg << "  <text x=\"" << px << "\" y=\"" << py + ph + 24 << "\" font-size=\"12\">step " << fmt(x0)
      << "</text>\n"
      << "  <text x=\"" << px + pw - 60 << "\" y=\"" << py + ph + 24 << "\" font-size=\"12\">step "
      << fmt(x1) << "</text>\n"
      << "  <text x=\"4\" y=\"" << py + 12 << "\" font-size=\"12\">" << fmt(loss1) << "</text>\n"
      << "  <text x=\"4\" y=\"" << py + ph << "\" font-size=\"12\">" << fmt(loss0) << "</text>\n"
      << "  <text x=\"" << px + pw + 8 << "\" y=\"" << py + 12 << "\" font-size=\"12\">"
      << fmt(cer1) << "</text>\n"
      << "  <text x=\"" << px + pw + 8 << "\" y=\"" << py + ph << "\" font-size=\"12\">0</text>\n";
  double ly = py + 30;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const std::string color = kPalette[i % 6];
    svg << "  <line x1=\"" << px + pw + 40 << "\" y1=\"" << ly - 4 << "\" x2=\"" << px + pw + 64
        << "\" y2=\"" << ly - 4 << "\" stroke=\"" << color << "\" stroke-width=\"1.5\"/>\n"
        << "  <text x=\"" << px + pw + 70 << "\" y=\"" << ly << "\" font-size=\"12\">"
        << runs[i].label << " loss</text>\n";
    ly += 18;
    if (!runs[i].cer.empty()) {
      svg << "  <line x1=\"" << px + pw + 40 << "\" y1=\"" << ly - 4 << "\" x2=\"" << px + pw + 64
          << "\" y2=\"" << ly - 4 << "\" stroke=\"" << color
          << "\" stroke-width=\"1.5\" stroke-dasharray=\"6 3\"/>\n"
          << "  <text x=\"" << px + pw + 70 << "\" y=\"" << ly << "\" font-size=\"12\">"
          << runs[i].label << " val CER</text>\n";
      ly += 18;
    }
  }
  svg << "</svg>\n";

  std::ofstream file(out, std::ios::binary);
  if (!file) throw std::runtime_error("cannot write " + out);
  file << svg.str();
  std::cout << "svg\t" << out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"EASTER: fully convolutional text recognition toolkit"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("gen-data", "Render a synthetic labeled dataset");
  std::string gen_config, gen_out;
  std::uint64_t gen_seed = 0;
  std::int64_t gen_size = -1;
  gen->add_option("--config", gen_config, "generator config JSON")
      ->required()
      ->check(CLI::ExistingFile);
  gen->add_option("--out", gen_out, "output directory")->required();
  gen->add_option("--seed", gen_seed, "override the config seed");
  gen->add_option("--size", gen_size, "override the sample count");

  auto* preview = app.add_subcommand("augment-preview", "Apply an augmentation pipeline to one image");
  std::string pre_pipeline, pre_input, pre_out;
  std::uint64_t pre_seed = 0;
  preview->add_option("--pipeline", pre_pipeline, "pipeline JSON")
      ->required()
      ->check(CLI::ExistingFile);
  preview->add_option("--input", pre_input, "input image (PGM/PPM)")
      ->required()
      ->check(CLI::ExistingFile);
  preview->add_option("--out", pre_out, "output PGM path")->required();
  preview->add_option("--seed", pre_seed, "augmentation draw seed");

  auto* train = app.add_subcommand("train", "Train a model from a training config");
  std::string train_config;
  bool train_resume = false;
  train->add_option("--config", train_config, "training config JSON")
      ->required()
      ->check(CLI::ExistingFile);
  train->add_flag("--resume", train_resume, "continue from the last saved state");

  auto* eval_cmd = app.add_subcommand("eval", "Score a checkpoint against a labeled manifest");
  std::string eval_checkpoint, eval_manifest, eval_out = ".";
  bool eval_case_fold = false;
  eval_cmd->add_option("--checkpoint", eval_checkpoint, "model checkpoint")
      ->required()
      ->check(CLI::ExistingFile);
  eval_cmd->add_option("--manifest", eval_manifest, "TSV manifest of image/transcript pairs")
      ->required()
      ->check(CLI::ExistingFile);
  eval_cmd->add_option("--out", eval_out, "report directory");
  eval_cmd->add_flag("--case-fold", eval_case_fold, "lowercase both sides before scoring");

  auto* transcribe = app.add_subcommand("transcribe", "Decode an image or a directory of images");
  std::string tr_checkpoint, tr_input;
  transcribe->add_option("--checkpoint", tr_checkpoint, "model checkpoint")
      ->required()
      ->check(CLI::ExistingFile);
  transcribe->add_option("--input", tr_input, "image file or directory")
      ->required()
      ->check(CLI::ExistingPath);

  auto* inspect = app.add_subcommand("inspect", "Print the architecture table and parameter count");
  std::string ins_checkpoint, ins_config;
  inspect->add_option("--checkpoint", ins_checkpoint, "model checkpoint")
      ->check(CLI::ExistingFile);
  inspect->add_option("--config", ins_config, "model config JSON")->check(CLI::ExistingFile);

  auto* plot = app.add_subcommand("export-plot", "Render metrics CSVs as an SVG chart");
  std::vector<std::string> plot_metrics;
  std::string plot_out;
  plot->add_option("--metrics", plot_metrics, "metrics CSV (repeat to overlay runs)")
      ->required()
      ->check(CLI::ExistingFile);
  plot->add_option("--out", plot_out, "output SVG path")->required();

  try {
    app.parse(argc, argv);
    if (inspect->parsed() && (ins_checkpoint.empty() == ins_config.empty())) {
      throw CLI::RequiredError("inspect: exactly one of --checkpoint or --config");
    }
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return 2;
  }

  try {
    if (gen->parsed()) {
      return run_gen_data(gen_config, gen_out, gen->count("--seed") > 0, gen_seed, gen_size);
    }
    if (preview->parsed()) return run_augment_preview(pre_pipeline, pre_input, pre_out, pre_seed);
    if (train->parsed()) return run_train(train_config, train_resume);
    if (eval_cmd->parsed()) {
      return run_eval(eval_checkpoint, eval_manifest, eval_out, eval_case_fold);
    }
    if (transcribe->parsed()) return run_transcribe(tr_checkpoint, tr_input);
    if (inspect->parsed()) return run_inspect(ins_checkpoint, ins_config);
    if (plot->parsed()) return run_export_plot(plot_metrics, plot_out);
  } catch (const std::exception& e) {
    std::cerr << "easter: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
