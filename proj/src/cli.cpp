#include "dica/cli.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dica/dataio.hpp"
#include "dica/errors.hpp"
#include "dica/graph.hpp"
#include "dica/learning.hpp"

namespace dica::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class UsageError : public Error {
 public:
  using Error::Error;
};

struct Common {
  std::string model;
  std::string images;
  std::string labels;
  std::string out;
  std::size_t count = 20;
  std::size_t offset = 0;
  int threshold = kDefaultThreshold;
  std::size_t width = 28;
  std::size_t height = 28;
  std::uint64_t seed = 0;
};

struct TrainFlags {
  std::string images;
  std::string labels;
  std::string out;
  std::string report;
  std::size_t count = 500;
  std::size_t num_sources = 8;
  std::size_t source_arity = 2;
  std::size_t epochs = 1;
  std::size_t inner_cycles = 5;
  int threshold = kDefaultThreshold;
  std::uint64_t seed = 0;
  double init_perturbation = 0.01;
  bool supervised = false;
};

struct GenerateFlags {
  std::string model;
  std::string out;
  std::string config;
  std::string soft;
  bool all_configs = false;
  std::size_t width = 28;
  std::size_t height = 28;
};

std::string fixed6(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", x);
  return buf;
}

std::string padded(std::size_t n, int width = 4) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%0*zu", width, n);
  return buf;
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) parts.push_back(item);
  return parts;
}

std::uint8_t checked_threshold(int t) {
  if (t < 0 || t > 255) throw UsageError("--threshold must be in 0..255");
  return static_cast<std::uint8_t>(t);
}

void ensure_dir(const std::string& dir) {
  if (dir.empty()) throw UsageError("--out is required");
  fs::create_directories(dir);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw FormatError("cannot write " + path.string());
  f << text;
}

// Posterior of symbol 1 at every source, the bar-graph view of a code.
std::string code_columns(const std::vector<Message>& posteriors) {
  std::string s;
  for (const auto& p : posteriors) s += "," + fixed6(p.size() > 1 ? p[1] : 0.0);
  return s;
}

std::string code_header(std::size_t m) {
  std::string s;
  for (std::size_t i = 1; i <= m; ++i) s += ",s" + std::to_string(i);
  return s;
}

void check_image_shape(const DicaModel& model, std::size_t width, std::size_t height) {
  if (model.num_visible() != width * height) {
    throw UsageError("model has " + std::to_string(model.num_visible()) + " visible variables, image is " +
                     std::to_string(width) + "x" + std::to_string(height));
  }
  for (auto s : model.visible_sizes()) {
    if (s != 2) throw UsageError("image output needs binary visible variables");
  }
}

std::vector<double> as_means(const BinaryImage& img) {
  return std::vector<double>(img.pixels.begin(), img.pixels.end());
}

// Images [offset, offset + count) of an IDX file; count 0 selects the rest.
LabeledDataset load_selection(const Common& c, bool need_labels) {
  if (c.images.empty()) throw UsageError("--images is required");
  if (need_labels && c.labels.empty()) throw UsageError("--labels is required");
  auto gray = load_idx_images(c.images);
  std::vector<std::size_t> labels;
  if (!c.labels.empty()) labels = load_idx_labels(c.labels);
  LabeledDataset all = make_dataset(gray, checked_threshold(c.threshold), c.labels.empty() ? nullptr : &labels);
  if (c.offset > all.size()) throw UsageError("--offset beyond the end of the image file");
  const std::size_t available = all.size() - c.offset;
  const std::size_t n = c.count == 0 ? available : c.count;
  if (n > available) throw UsageError("--count exceeds the images available after --offset");
  LabeledDataset sel;
  sel.images.assign(all.images.begin() + c.offset, all.images.begin() + c.offset + n);
  if (all.labels) sel.labels.emplace(all.labels->begin() + c.offset, all.labels->begin() + c.offset + n);
  return sel;
}

double agreement(const std::vector<std::uint8_t>& truth, const std::vector<Message>& msgs,
                 const std::vector<std::size_t>& which) {
  if (which.empty()) return 1.0;
  std::size_t hits = 0;
  for (auto j : which) hits += msgs[j].argmax() == truth[j];
  return static_cast<double>(hits) / static_cast<double>(which.size());
}

class Manifest {
 public:
  Manifest(std::string command, int argc, const char* const* argv)
      : command_(std::move(command)), start_(std::chrono::steady_clock::now()) {
    for (int k = 0; k < argc; ++k) argv_.push_back(argv[k]);
  }

  void write(const CLI::App& sub, const fs::path& path) const {
    json flags = json::object();
    for (const CLI::Option* opt : sub.get_options()) {
      const std::string name = opt->get_single_name();
      if (name == "help" || name.empty()) continue;
      if (opt->get_expected_max() == 0) {
        flags[name] = opt->count() > 0;
      } else if (opt->count() > 0) {
        flags[name] = opt->as<std::string>();
      } else {
        flags[name] = opt->get_default_str();
      }
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    json doc = {{"command", command_}, {"argv", argv_}, {"flags", flags}, {"elapsed_seconds", elapsed}};
    write_text(path, doc.dump(2) + "\n");
  }

 private:
  std::string command_;
  std::vector<std::string> argv_;
  std::chrono::steady_clock::time_point start_;
};

int cmd_train(const TrainFlags& f, std::ostream& out) {
  if (f.images.empty()) throw UsageError("--images is required");
  if (f.out.empty()) throw UsageError("--out is required");
  if (f.supervised && f.labels.empty()) throw UsageError("--supervised needs --labels");
  if (f.num_sources == 0 || f.source_arity == 0) throw UsageError("--num-sources and --source-arity must be >= 1");
  if (f.epochs == 0 || f.inner_cycles == 0) throw UsageError("--epochs and --inner-cycles must be >= 1");

  auto gray = load_idx_images(f.images);
  std::vector<std::size_t> labels;
  if (!f.labels.empty()) labels = load_idx_labels(f.labels);
  LabeledDataset all = make_dataset(gray, checked_threshold(f.threshold), f.labels.empty() ? nullptr : &labels);
  if (f.count == 0 || f.count > all.size()) {
    throw UsageError("--count must be in 1.." + std::to_string(all.size()));
  }
  LabeledDataset subset = take_subset(all, f.count, f.seed);

  Topology topo;
  topo.source_sizes.assign(f.num_sources, f.source_arity);
  topo.visible_sizes.assign(subset.images.front().pixels.size(), 2);
  if (f.supervised) topo.label_size = 10;

  TrainConfig config;
  config.epochs = f.epochs;
  config.inner_cycles = f.inner_cycles;
  config.seed = f.seed;
  config.supervised = f.supervised;
  config.init_perturbation = f.init_perturbation;

  DicaModel initial = build(topo, config.seed, config.init_perturbation);
  auto evidence = to_evidence(subset, f.supervised);
  TrainResult result = train(std::move(initial), evidence, config);

  const fs::path model_path(f.out);
  if (model_path.has_parent_path()) fs::create_directories(model_path.parent_path());
  save_model(result.model, model_path);
  std::ostringstream csv;
  write_report_csv(result.report, csv);
  write_text(f.report.empty() ? fs::path(f.out + ".report.csv") : fs::path(f.report), csv.str());

  for (const auto& e : result.report.epochs) {
    out << "epoch " << e.epoch << ": mean local log-likelihood " << e.mean_log_likelihood << ", skipped "
        << e.skipped_examples << "\n";
  }
  out << "model written to " << f.out << "\n";
  return kOk;
}

int cmd_generate(const GenerateFlags& f, std::ostream& out) {
  if (f.model.empty()) throw UsageError("--model is required");
  const int modes = int(f.all_configs) + int(!f.config.empty()) + int(!f.soft.empty());
  if (modes != 1) throw UsageError("exactly one of --all-configs, --config, --soft is required");
  ensure_dir(f.out);
  DicaModel model = load_model(f.model);
  check_image_shape(model, f.width, f.height);
  const auto& sizes = model.source_sizes();

  std::string listing = "file,config\n";
  auto emit = [&](const std::vector<std::size_t>& config, const std::string& name) {
    auto forwards = generate(model, std::span<const std::size_t>(config));
    write_pgm(mean_image(forwards), f.width, f.height, fs::path(f.out) / name);
    std::string cfg;
    for (std::size_t i = 0; i < config.size(); ++i) cfg += (i ? " " : "") + std::to_string(config[i]);
    listing += name + "," + cfg + "\n";
  };

  if (f.all_configs) {
    for (std::size_t s = 0; s < model.product_size(); ++s) emit(product_coords(s, sizes), "config_" + padded(s) + ".pgm");
  } else if (!f.config.empty()) {
    auto parts = split_csv(f.config);
    if (parts.size() != sizes.size()) {
      throw UsageError("--config needs " + std::to_string(sizes.size()) + " comma-separated symbols");
    }
    std::vector<std::size_t> config;
    for (const auto& p : parts) {
      try {
        config.push_back(std::stoul(p));
      } catch (const std::exception&) {
        throw UsageError("--config: bad symbol '" + p + "'");
      }
    }
    product_index(config, sizes);
    emit(config, "config.pgm");
  } else {
    auto parts = split_csv(f.soft);
    if (parts.size() != sizes.size()) {
      throw UsageError("--soft needs " + std::to_string(sizes.size()) + " comma-separated probabilities");
    }
    std::vector<Message> forwards;
    for (std::size_t i = 0; i < parts.size(); ++i) {
      if (sizes[i] != 2) throw UsageError("--soft needs binary sources");
      double p = 0.0;
      try {
        p = std::stod(parts[i]);
      } catch (const std::exception&) {
        throw UsageError("--soft: bad probability '" + parts[i] + "'");
      }
      if (!(p >= 0.0 && p <= 1.0)) throw UsageError("--soft: probabilities must be in [0, 1]");
      forwards.push_back(Message({1.0 - p, p}));
    }
    auto msgs = generate(model, std::span<const Message>(forwards));
    write_pgm(mean_image(msgs), f.width, f.height, fs::path(f.out) / "soft.pgm");
    listing += "soft.pgm," + f.soft + "\n";
  }
  write_text(fs::path(f.out) / "generate.csv", listing);
  out << "images written to " << f.out << "\n";
  return kOk;
}

int cmd_encode(const Common& c, std::ostream& out) {
  if (c.model.empty()) throw UsageError("--model is required");
  ensure_dir(c.out);
  DicaModel model = load_model(c.model);
  check_image_shape(model, c.width, c.height);
  LabeledDataset data = load_selection(c, false);

  std::string csv = "index" + code_header(model.num_sources()) + "\n";
  std::size_t failed = 0;
  for (std::size_t n = 0; n < data.size(); ++n) {
    const auto& img = data.images[n];
    try {
      auto state = propagate(model, Evidence::hard(std::span<const std::uint8_t>(img.pixels)));
      std::vector<Message> forwards;
      for (const auto& b : state.visible) forwards.push_back(b.forward);
      csv += std::to_string(c.offset + n) + code_columns(state.source_posteriors()) + "\n";
      const std::string stem = "encode_" + padded(c.offset + n);
      write_pgm(as_means(img), c.width, c.height, fs::path(c.out) / (stem + "_input.pgm"));
      write_pgm(mean_image(forwards), c.width, c.height, fs::path(c.out) / (stem + "_forward.pgm"));
    } catch (const ContradictoryEvidence&) {
      ++failed;
      csv += std::to_string(c.offset + n) + ",contradiction\n";
    }
  }
  write_text(fs::path(c.out) / "codes.csv", csv);
  out << "encoded " << data.size() - failed << " images, " << failed << " contradictory\n";
  return kOk;
}

int cmd_complete(const Common& c, double erasure, std::ostream& out) {
  if (c.model.empty()) throw UsageError("--model is required");
  if (!(erasure >= 0.0 && erasure < 1.0)) throw UsageError("--erasure must be in [0, 1)");
  ensure_dir(c.out);
  DicaModel model = load_model(c.model);
  check_image_shape(model, c.width, c.height);
  LabeledDataset data = load_selection(c, false);

  const std::size_t n_pix = model.num_visible();
  const auto erased_count = static_cast<std::size_t>(std::floor(erasure * static_cast<double>(n_pix) + 0.5));
  std::string csv = "index,erased,forward_agreement,posterior_agreement\n";
  double sum_forward = 0.0;
  std::size_t done = 0;
  for (std::size_t n = 0; n < data.size(); ++n) {
    const auto& img = data.images[n];
    // One erasure pattern per image, derived from the seed and the image index.
    auto erased = sample_indices(n_pix, erased_count, c.seed + c.offset + n);
    Evidence ev = Evidence::hard(std::span<const std::uint8_t>(img.pixels));
    std::vector<double> shown = as_means(img);
    for (auto j : erased) {
      ev.visible[j] = Absent{};
      shown[j] = 0.5;
    }
    try {
      Completion res = complete(model, ev);
      std::vector<Message> forwards, posts;
      for (auto& v : res.variables) {
        forwards.push_back(v.forward);
        posts.push_back(v.posterior);
      }
      const double af = agreement(img.pixels, forwards, erased);
      const double ap = agreement(img.pixels, posts, erased);
      sum_forward += af;
      ++done;
      csv += std::to_string(c.offset + n) + "," + std::to_string(erased.size()) + "," + fixed6(af) + "," + fixed6(ap) + "\n";
      const std::string stem = "complete_" + padded(c.offset + n);
      write_pgm(shown, c.width, c.height, fs::path(c.out) / (stem + "_input.pgm"));
      write_pgm(mean_image(forwards), c.width, c.height, fs::path(c.out) / (stem + "_forward.pgm"));
      write_pgm(mean_image(posts), c.width, c.height, fs::path(c.out) / (stem + "_posterior.pgm"));
    } catch (const ContradictoryEvidence&) {
      csv += std::to_string(c.offset + n) + ",contradiction,,\n";
    }
  }
  write_text(fs::path(c.out) / "completion.csv", csv);
  out << "completed " << done << " of " << data.size() << " images";
  if (done) out << ", mean erased-pixel agreement " << fixed6(sum_forward / static_cast<double>(done));
  out << "\n";
  return kOk;
}

int cmd_correct(const Common& c, double noise, std::ostream& out) {
  if (c.model.empty()) throw UsageError("--model is required");
  if (!(noise >= 0.0 && noise <= 1.0)) throw UsageError("--noise must be in [0, 1]");
  ensure_dir(c.out);
  DicaModel model = load_model(c.model);
  check_image_shape(model, c.width, c.height);
  LabeledDataset data = load_selection(c, false);

  const std::size_t n_pix = model.num_visible();
  const auto flips = static_cast<std::size_t>(std::floor(noise * static_cast<double>(n_pix) + 0.5));
  std::vector<std::size_t> everything(n_pix);
  for (std::size_t j = 0; j < n_pix; ++j) everything[j] = j;

  std::string csv = "index,flipped,corrupted_agreement,corrected_agreement\n";
  for (std::size_t n = 0; n < data.size(); ++n) {
    const auto& img = data.images[n];
    BinaryImage noisy = img;
    for (auto j : sample_indices(n_pix, flips, c.seed + c.offset + n)) noisy.pixels[j] ^= 1;
    std::size_t same = 0;
    for (std::size_t j = 0; j < n_pix; ++j) same += noisy.pixels[j] == img.pixels[j];
    try {
      auto forwards = correct(model, Evidence::hard(std::span<const std::uint8_t>(noisy.pixels)));
      const double fixed = agreement(img.pixels, forwards, everything);
      csv += std::to_string(c.offset + n) + "," + std::to_string(flips) + "," +
             fixed6(static_cast<double>(same) / static_cast<double>(n_pix)) + "," + fixed6(fixed) + "\n";
      const std::string stem = "correct_" + padded(c.offset + n);
      write_pgm(as_means(noisy), c.width, c.height, fs::path(c.out) / (stem + "_input.pgm"));
      write_pgm(mean_image(forwards), c.width, c.height, fs::path(c.out) / (stem + "_forward.pgm"));
    } catch (const ContradictoryEvidence&) {
      csv += std::to_string(c.offset + n) + ",contradiction,,\n";
    }
  }
  write_text(fs::path(c.out) / "correction.csv", csv);
  out << "corrected " << data.size() << " images\n";
  return kOk;
}

int cmd_classify(const Common& c, std::ostream& out) {
  if (c.model.empty()) throw UsageError("--model is required");
  ensure_dir(c.out);
  DicaModel model = load_model(c.model);
  if (!model.has_label()) throw MissingLabelBlock("classify: model has no label block");
  LabeledDataset data = load_selection(c, false);
  const std::size_t classes = *model.label_size();

  std::string csv = "index,label";
  for (std::size_t k = 0; k < classes; ++k) csv += ",p" + std::to_string(k);
  csv += ",predicted" + code_header(model.num_sources()) + "\n";
  std::size_t correct_count = 0;
  std::size_t scored = 0;
  for (std::size_t n = 0; n < data.size(); ++n) {
    const std::string label = data.labels ? std::to_string((*data.labels)[n]) : "";
    try {
      auto res = classify(model, Evidence::hard(std::span<const std::uint8_t>(data.images[n].pixels)));
      csv += std::to_string(c.offset + n) + "," + label;
      for (double p : res.label_posterior.values()) csv += "," + fixed6(p);
      const std::size_t predicted = res.label_posterior.argmax();
      csv += "," + std::to_string(predicted) + code_columns(res.source_posteriors) + "\n";
      if (data.labels) {
        ++scored;
        correct_count += predicted == (*data.labels)[n];
      }
    } catch (const ContradictoryEvidence&) {
      csv += std::to_string(c.offset + n) + "," + label + ",contradiction\n";
      if (data.labels) ++scored;
    }
  }
  write_text(fs::path(c.out) / "classify.csv", csv);
  std::string summary = "images " + std::to_string(data.size()) + "\n";
  if (scored) {
    summary += "accuracy " + fixed6(static_cast<double>(correct_count) / static_cast<double>(scored)) + " (" +
               std::to_string(correct_count) + "/" + std::to_string(scored) + ")\n";
  }
  write_text(fs::path(c.out) / "summary.txt", summary);
  out << summary;
  return kOk;
}

int cmd_prototypes(const Common& c, std::ostream& out) {
  if (c.model.empty()) throw UsageError("--model is required");
  ensure_dir(c.out);
  DicaModel model = load_model(c.model);
  if (!model.has_label()) throw MissingLabelBlock("prototypes: model has no label block");
  check_image_shape(model, c.width, c.height);

  std::string csv = "class" + code_header(model.num_sources()) + "\n";
  for (std::size_t k = 0; k < *model.label_size(); ++k) {
    Prototype p = prototype(model, k);
    write_pgm(mean_image(p.forwards), c.width, c.height, fs::path(c.out) / ("prototype_" + std::to_string(k) + ".pgm"));
    csv += std::to_string(k) + code_columns(p.source_posteriors) + "\n";
  }
  write_text(fs::path(c.out) / "prototypes.csv", csv);
  out << "prototypes written to " << c.out << "\n";
  return kOk;
}

void add_inference_flags(CLI::App* sub, Common& c, bool images) {
  sub->add_option("--model", c.model, "Trained model file")->required();
  if (images) {
    sub->add_option("--images", c.images, "IDX3 image file")->required();
    sub->add_option("--labels", c.labels, "IDX1 label file");
    sub->add_option("--count", c.count, "Images to process (0 = all after --offset)");
    sub->add_option("--offset", c.offset, "First image index");
    sub->add_option("--threshold", c.threshold, "Binarization threshold");
  }
  sub->add_option("--width", c.width, "Image width");
  sub->add_option("--height", c.height, "Image height");
  sub->add_option("--out", c.out, "Output directory")->required();
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Discrete independent component analysis on a factor graph"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);

  TrainFlags tf;
  auto* train_cmd = app.add_subcommand("train", "Train a model on binarized images");
  train_cmd->add_option("--images", tf.images, "IDX3 image file")->required();
  train_cmd->add_option("--labels", tf.labels, "IDX1 label file");
  train_cmd->add_option("--count", tf.count, "Training images drawn from the file");
  train_cmd->add_option("--num-sources", tf.num_sources, "Number of sources M");
  train_cmd->add_option("--source-arity", tf.source_arity, "Alphabet size of every source");
  train_cmd->add_option("--epochs", tf.epochs, "Passes over the training set");
  train_cmd->add_option("--inner-cycles", tf.inner_cycles, "EM cycles inside each block per pass");
  train_cmd->add_option("--threshold", tf.threshold, "Binarization threshold");
  train_cmd->add_option("--seed", tf.seed, "Seed for subset selection and initialization");
  train_cmd->add_option("--init-perturbation", tf.init_perturbation, "Relative prior perturbation at init");
  train_cmd->add_flag("--supervised", tf.supervised, "Attach and train a 10-class label block");
  train_cmd->add_option("--report", tf.report, "Training report CSV (default: <out>.report.csv)");
  train_cmd->add_option("--out", tf.out, "Model file to write")->required();

  GenerateFlags gf;
  auto* gen_cmd = app.add_subcommand("generate", "Decode source configurations into images");
  gen_cmd->add_option("--model", gf.model, "Trained model file")->required();
  gen_cmd->add_flag("--all-configs", gf.all_configs, "Every product-space configuration");
  gen_cmd->add_option("--config", gf.config, "Comma-separated source symbols");
  gen_cmd->add_option("--soft", gf.soft, "Comma-separated p(s=1) per binary source");
  gen_cmd->add_option("--width", gf.width, "Image width");
  gen_cmd->add_option("--height", gf.height, "Image height");
  gen_cmd->add_option("--out", gf.out, "Output directory")->required();

  Common enc;
  auto* enc_cmd = app.add_subcommand("encode", "Factorial codes of images");
  add_inference_flags(enc_cmd, enc, true);

  Common comp;
  double erasure = 0.5;
  auto* comp_cmd = app.add_subcommand("complete", "Fill in randomly erased pixels");
  add_inference_flags(comp_cmd, comp, true);
  comp_cmd->add_option("--erasure", erasure, "Fraction of pixels erased");
  comp_cmd->add_option("--seed", comp.seed, "Seed for the erasure patterns");

  Common corr;
  double noise = 0.1;
  auto* corr_cmd = app.add_subcommand("correct", "Correct randomly flipped pixels");
  add_inference_flags(corr_cmd, corr, true);
  corr_cmd->add_option("--noise", noise, "Fraction of pixels flipped");
  corr_cmd->add_option("--seed", corr.seed, "Seed for the flip patterns");

  Common cls;
  auto* cls_cmd = app.add_subcommand("classify", "Class posteriors and codes for images");
  add_inference_flags(cls_cmd, cls, true);

  Common proto;
  auto* proto_cmd = app.add_subcommand("prototypes", "Class prototypes from label deltas");
  add_inference_flags(proto_cmd, proto, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  CLI::App* sub = app.get_subcommands().front();
  Manifest manifest(sub->get_name(), argc, argv);
  try {
    int code = kOk;
    fs::path manifest_path;
    if (sub == train_cmd) {
      code = cmd_train(tf, out);
      manifest_path = tf.out + ".manifest.json";
    } else if (sub == gen_cmd) {
      code = cmd_generate(gf, out);
      manifest_path = fs::path(gf.out) / "manifest.json";
    } else {
      const Common* c = nullptr;
      if (sub == enc_cmd) {
        c = &enc;
        code = cmd_encode(enc, out);
      } else if (sub == comp_cmd) {
        c = &comp;
        code = cmd_complete(comp, erasure, out);
      } else if (sub == corr_cmd) {
        c = &corr;
        code = cmd_correct(corr, noise, out);
      } else if (sub == cls_cmd) {
        c = &cls;
        code = cmd_classify(cls, out);
      } else {
        c = &proto;
        code = cmd_prototypes(proto, out);
      }
      manifest_path = fs::path(c->out) / "manifest.json";
    }
    manifest.write(*sub, manifest_path);
    return code;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const InvalidArgument& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const FormatError& e) {
    err << "format error: " << e.what() << "\n";
    return kFormat;
  } catch (const ContradictoryEvidence& e) {
    err << "contradictory evidence: " << e.what() << "\n";
    return kContradiction;
  } catch (const CapacityError& e) {
    err << "capacity error: " << e.what() << "\n";
    return kCapacity;
  } catch (const DimensionError& e) {
    err << "dimension error: " << e.what() << "\n";
    return kDimension;
  } catch (const MissingLabelBlock& e) {
    err << "missing label block: " << e.what() << "\n";
    return kMissingLabel;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
}

}  // namespace dica::cli
