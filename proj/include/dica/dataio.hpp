#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dica/graph.hpp"

namespace dica {

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;
inline constexpr std::uint8_t kDefaultThreshold = 128;
inline constexpr int kModelFormatVersion = 1;

struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;  // row-major
};

struct BinaryImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;  // row-major symbols in {0, 1}

  friend bool operator==(const BinaryImage&, const BinaryImage&) = default;
};

struct LabeledDataset {
  std::vector<BinaryImage> images;
  std::optional<std::vector<std::size_t>> labels;

  std::size_t size() const { return images.size(); }
};

// IDX3 / IDX1 containers. Parsing is all-or-nothing: malformed input throws
// FormatError carrying the offending byte offset.
std::vector<GrayImage> parse_idx_images(std::span<const std::uint8_t> bytes);
std::vector<std::size_t> parse_idx_labels(std::span<const std::uint8_t> bytes);
std::vector<GrayImage> load_idx_images(const std::filesystem::path& path);
std::vector<std::size_t> load_idx_labels(const std::filesystem::path& path);

BinaryImage binarize(const GrayImage& image, std::uint8_t threshold = kDefaultThreshold);

// Binarizes and pairs images with labels; a count mismatch is a FormatError.
LabeledDataset make_dataset(const std::vector<GrayImage>& images, std::uint8_t threshold = kDefaultThreshold,
                            const std::vector<std::size_t>* labels = nullptr);

// `count` distinct indices out of [0, population), uniformly, in draw order.
std::vector<std::size_t> sample_indices(std::size_t population, std::size_t count, std::uint64_t seed);
LabeledDataset take_subset(const LabeledDataset& dataset, std::size_t count, std::uint64_t seed);

// Hard evidence for every pixel, plus the label when present and `with_label`.
std::vector<Evidence> to_evidence(const LabeledDataset& dataset, bool with_label);

std::string serialize_model(const DicaModel& model);
DicaModel deserialize_model(std::string_view text);
void save_model(const DicaModel& model, const std::filesystem::path& path);
DicaModel load_model(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_pgm(std::span<const double> means, std::size_t width, std::size_t height);
void write_pgm(std::span<const double> means, std::size_t width, std::size_t height, const std::filesystem::path& path);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace dica
