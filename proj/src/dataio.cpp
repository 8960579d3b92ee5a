#include "dica/dataio.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <numeric>
#include <random>

#include <json.hpp>

#include "dica/errors.hpp"

namespace dica {

namespace {

std::uint32_t read_be32(std::span<const std::uint8_t> bytes, std::size_t offset, const char* field) {
  if (bytes.size() < offset + 4) {
    throw FormatError(std::string("IDX: truncated header while reading ") + field, bytes.size());
  }
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void check_magic(std::span<const std::uint8_t> bytes, std::uint32_t expected) {
  const std::uint32_t magic = read_be32(bytes, 0, "magic");
  if (magic != expected) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "IDX: magic 0x%08X, expected 0x%08X", magic, expected);
    throw FormatError(buf, 0);
  }
}

void check_payload(std::span<const std::uint8_t> bytes, std::size_t header, std::uint64_t payload) {
  const std::uint64_t expected = header + payload;
  if (bytes.size() < expected) throw FormatError("IDX: truncated payload", bytes.size());
  if (bytes.size() > expected) throw FormatError("IDX: trailing bytes after payload", static_cast<std::size_t>(expected));
}

void append_double(std::string& out, double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  out += buf;
}

void append_values(std::string& out, std::span<const double> v) {
  out += '[';
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (k) out += ", ";
    append_double(out, v[k]);
  }
  out += ']';
}

void append_sizes(std::string& out, const std::vector<std::size_t>& v) {
  out += '[';
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (k) out += ", ";
    out += std::to_string(v[k]);
  }
  out += ']';
}

using nlohmann::json;

const json& field(const json& doc, const char* name) {
  auto it = doc.find(name);
  if (it == doc.end()) throw FormatError(std::string("model: missing field '") + name + "'");
  return *it;
}

std::vector<double> doubles(const json& j, const char* what) {
  if (!j.is_array()) throw FormatError(std::string("model: ") + what + " is not an array");
  std::vector<double> v;
  v.reserve(j.size());
  for (const auto& x : j) {
    if (!x.is_number()) throw FormatError(std::string("model: non-numeric entry in ") + what);
    v.push_back(x.get<double>());
  }
  return v;
}

std::vector<std::size_t> sizes(const json& j, const char* what) {
  if (!j.is_array()) throw FormatError(std::string("model: ") + what + " is not an array");
  std::vector<std::size_t> v;
  for (const auto& x : j) {
    if (!x.is_number_unsigned()) throw FormatError(std::string("model: bad size in ") + what);
    v.push_back(x.get<std::size_t>());
  }
  return v;
}

Cpt table(const json& j, std::size_t rows, std::size_t cols, const std::string& what) {
  auto v = doubles(j, what.c_str());
  if (v.size() != rows * cols) {
    throw FormatError("model: " + what + " has " + std::to_string(v.size()) + " entries, expected " +
                      std::to_string(rows * cols));
  }
  return Cpt(rows, cols, std::move(v));
}

}  // namespace

std::vector<GrayImage> parse_idx_images(std::span<const std::uint8_t> bytes) {
  check_magic(bytes, kIdxImagesMagic);
  const std::uint64_t count = read_be32(bytes, 4, "image count");
  const std::uint64_t rows = read_be32(bytes, 8, "row count");
  const std::uint64_t cols = read_be32(bytes, 12, "column count");
  check_payload(bytes, 16, count * rows * cols);

  std::vector<GrayImage> images(count);
  const std::size_t pixels = rows * cols;
  auto it = bytes.begin() + 16;
  for (auto& img : images) {
    img.width = cols;
    img.height = rows;
    img.pixels.assign(it, it + pixels);
    it += pixels;
  }
  return images;
}

std::vector<std::size_t> parse_idx_labels(std::span<const std::uint8_t> bytes) {
  check_magic(bytes, kIdxLabelsMagic);
  const std::uint64_t count = read_be32(bytes, 4, "label count");
  check_payload(bytes, 8, count);
  std::vector<std::size_t> labels(count);
  for (std::size_t n = 0; n < count; ++n) {
    const std::uint8_t c = bytes[8 + n];
    if (c > 9) throw FormatError("IDX: label " + std::to_string(c) + " outside 0..9", 8 + n);
    labels[n] = c;
  }
  return labels;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("write failed for " + path.string());
}

std::vector<GrayImage> load_idx_images(const std::filesystem::path& path) { return parse_idx_images(read_file(path)); }

std::vector<std::size_t> load_idx_labels(const std::filesystem::path& path) { return parse_idx_labels(read_file(path)); }

BinaryImage binarize(const GrayImage& image, std::uint8_t threshold) {
  BinaryImage out{image.width, image.height, {}};
  out.pixels.reserve(image.pixels.size());
  for (auto p : image.pixels) out.pixels.push_back(p >= threshold ? 1 : 0);
  return out;
}

LabeledDataset make_dataset(const std::vector<GrayImage>& images, std::uint8_t threshold,
                            const std::vector<std::size_t>* labels) {
  if (labels && labels->size() != images.size()) {
    throw FormatError("dataset: " + std::to_string(images.size()) + " images but " + std::to_string(labels->size()) +
                      " labels");
  }
  LabeledDataset ds;
  ds.images.reserve(images.size());
  for (const auto& img : images) ds.images.push_back(binarize(img, threshold));
  if (labels) ds.labels = *labels;
  return ds;
}

std::vector<std::size_t> sample_indices(std::size_t population, std::size_t count, std::uint64_t seed) {
  if (count > population) {
    throw InvalidArgument("sample_indices: cannot draw " + std::to_string(count) + " from " +
                          std::to_string(population));
  }
  std::vector<std::size_t> idx(population);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  // Partial Fisher-Yates.
  for (std::size_t k = 0; k < count; ++k) {
    std::uniform_int_distribution<std::size_t> pick(k, population - 1);
    std::swap(idx[k], idx[pick(rng)]);
  }
  idx.resize(count);
  return idx;
}

LabeledDataset take_subset(const LabeledDataset& dataset, std::size_t count, std::uint64_t seed) {
  LabeledDataset out;
  auto idx = sample_indices(dataset.size(), count, seed);
  out.images.reserve(count);
  for (auto k : idx) out.images.push_back(dataset.images[k]);
  if (dataset.labels) {
    out.labels.emplace();
    for (auto k : idx) out.labels->push_back((*dataset.labels)[k]);
  }
  return out;
}

std::vector<Evidence> to_evidence(const LabeledDataset& dataset, bool with_label) {
  if (with_label && !dataset.labels) throw InvalidArgument("to_evidence: dataset has no labels");
  std::vector<Evidence> out;
  out.reserve(dataset.size());
  for (std::size_t n = 0; n < dataset.size(); ++n) {
    Evidence e = Evidence::hard(std::span<const std::uint8_t>(dataset.images[n].pixels));
    if (with_label) e.label = Hard{(*dataset.labels)[n]};
    out.push_back(std::move(e));
  }
  return out;
}

std::string serialize_model(const DicaModel& model) {
  std::string s;
  s += "{\n  \"format_version\": " + std::to_string(kModelFormatVersion) + ",\n";
  s += "  \"M\": " + std::to_string(model.num_sources()) + ",\n";
  s += "  \"source_sizes\": ";
  append_sizes(s, model.source_sizes());
  s += ",\n  \"visible_sizes\": ";
  append_sizes(s, model.visible_sizes());
  s += ",\n  \"priors\": [\n";
  for (std::size_t i = 0; i < model.num_sources(); ++i) {
    s += "    ";
    append_values(s, model.priors()[i].values());
    s += i + 1 < model.num_sources() ? ",\n" : "\n";
  }
  s += "  ],\n  \"visible_cpts\": [\n";
  for (std::size_t j = 0; j < model.num_visible(); ++j) {
    s += "    ";
    append_values(s, model.visible_cpts()[j].entries());
    s += j + 1 < model.num_visible() ? ",\n" : "\n";
  }
  s += "  ]";
  if (model.has_label()) {
    s += ",\n  \"label_size\": " + std::to_string(*model.label_size());
    s += ",\n  \"label_cpt\": ";
    append_values(s, model.label_cpt()->entries());
  }
  s += "\n}\n";
  return s;
}

DicaModel deserialize_model(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("model: ") + e.what(), e.byte);
  }
  if (!doc.is_object()) throw FormatError("model: document is not an object");
  const json& version = field(doc, "format_version");
  if (!version.is_number_integer() || version.get<long long>() != kModelFormatVersion) {
    throw FormatError("model: unsupported format_version " + version.dump());
  }
  try {
    auto source_sizes = sizes(field(doc, "source_sizes"), "source_sizes");
    const json& m = field(doc, "M");
    if (!m.is_number_unsigned() || m.get<std::size_t>() != source_sizes.size()) {
      throw FormatError("model: M does not match source_sizes");
    }
    auto visible_sizes = sizes(field(doc, "visible_sizes"), "visible_sizes");
    std::size_t states = 1;
    for (auto s : source_sizes) {
      if (s == 0 || states > kMaxProductSize / s) throw FormatError("model: invalid source sizes");
      states *= s;
    }

    const json& priors_json = field(doc, "priors");
    if (!priors_json.is_array() || priors_json.size() != source_sizes.size()) {
      throw FormatError("model: priors do not match source_sizes");
    }
    std::vector<Message> priors;
    for (const auto& p : priors_json) priors.emplace_back(doubles(p, "priors"));

    const json& cpts_json = field(doc, "visible_cpts");
    if (!cpts_json.is_array() || cpts_json.size() != visible_sizes.size()) {
      throw FormatError("model: visible_cpts do not match visible_sizes");
    }
    std::vector<Cpt> cpts;
    cpts.reserve(visible_sizes.size());
    for (std::size_t j = 0; j < visible_sizes.size(); ++j) {
      cpts.push_back(table(cpts_json[j], states, visible_sizes[j], "visible_cpts[" + std::to_string(j) + "]"));
    }

    std::optional<Cpt> label;
    const bool has_size = doc.contains("label_size");
    const bool has_cpt = doc.contains("label_cpt");
    if (has_size != has_cpt) throw FormatError("model: label_size and label_cpt must appear together");
    if (has_cpt) {
      const json& ls = doc["label_size"];
      if (!ls.is_number_unsigned()) throw FormatError("model: bad label_size");
      label = table(doc["label_cpt"], states, ls.get<std::size_t>(), "label_cpt");
    }
    return DicaModel(std::move(source_sizes), std::move(priors), std::move(cpts), std::move(label));
  } catch (const FormatError&) {
    throw;
  } catch (const Error& e) {
    throw FormatError(std::string("model: invariant violated: ") + e.what());
  }
}

void save_model(const DicaModel& model, const std::filesystem::path& path) {
  const std::string text = serialize_model(model);
  write_file(path, std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

DicaModel load_model(const std::filesystem::path& path) {
  auto bytes = read_file(path);
  return deserialize_model(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

std::vector<std::uint8_t> encode_pgm(std::span<const double> means, std::size_t width, std::size_t height) {
  if (means.size() != width * height) {
    throw DimensionError("PGM: " + std::to_string(means.size()) + " values for a " + std::to_string(width) + "x" +
                         std::to_string(height) + " image");
  }
  const std::string header = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(header.size() + means.size());
  for (double v : means) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) throw InvalidArgument("PGM: value outside [0, 1]");
    // Round half up.
    out.push_back(static_cast<std::uint8_t>(std::floor(255.0 * v + 0.5)));
  }
  return out;
}

void write_pgm(std::span<const double> means, std::size_t width, std::size_t height, const std::filesystem::path& path) {
  write_file(path, encode_pgm(means, width, height));
}

}  // namespace dica
