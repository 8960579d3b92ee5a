#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "dica/graph.hpp"

namespace dica {

struct TrainConfig {
  std::size_t epochs = 1;
  std::size_t inner_cycles = 5;
  std::uint64_t seed = 0;  // consumed by build() when the model is initialized
  bool supervised = false;
  double init_perturbation = 0.01;
};

// Per-example local messages seen by one block: f_in over its input alphabet
// and b_out over its output alphabet.
class BlockStats {
 public:
  BlockStats(std::size_t in_size, std::size_t out_size) : in_size_(in_size), out_size_(out_size) {}

  void add(Message f_in, Message b_out);

  std::size_t size() const { return forwards_.size(); }
  bool empty() const { return forwards_.empty(); }
  std::size_t in_size() const { return in_size_; }
  std::size_t out_size() const { return out_size_; }
  const Message& forward(std::size_t n) const { return forwards_[n]; }
  const Message& backward(std::size_t n) const { return backwards_[n]; }

 private:
  std::size_t in_size_;
  std::size_t out_size_;
  std::vector<Message> forwards_;
  std::vector<Message> backwards_;
};

struct CollectedStats {
  // Indexed like the visible variables; blocks outside the requested range stay empty.
  std::vector<BlockStats> visible;
  std::optional<BlockStats> label;
  // source_posteriors[i][n]: posterior at source i for the n-th accepted example.
  std::vector<std::vector<Message>> source_posteriors;
  std::size_t skipped = 0;
  std::vector<std::size_t> skipped_examples;
};

struct BlockRange {
  std::size_t begin = 0;
  std::size_t end = static_cast<std::size_t>(-1);
};

// Runs propagate on every example and records the local messages of each
// block. Examples with contradictory evidence are skipped and listed.
CollectedStats collect_stats(const DicaModel& model, std::span<const Evidence> batch, BlockRange visible_blocks = {});

// L(P) = sum_n log(f_nᵀ P b_n); terms with a zero argument are left out.
double local_log_likelihood(const Cpt& cpt, const BlockStats& stats);

// Positive table entries never drop below the smallest normal double. Their
// exact value is positive; the accumulators only reach zero through underflow
// of sharp diverter messages, and a stored zero could never recover.
inline constexpr double kUnderflowFloor = std::numeric_limits<double>::min();

struct CptUpdate {
  Cpt cpt;
  // log_likelihood[r]: L before cycle r + 1; the last entry is L after the final cycle.
  std::vector<double> log_likelihood;
  std::size_t skipped_terms = 0;
};

// `cycles` multiplicative EM steps on frozen messages:
// P'_kl ∝ P_kl Σ_n f_n(k) b_n(l) / (f_nᵀ P b_n), renormalized per row.
// Exact zeros stay zero; rows that receive no mass are left unchanged.
CptUpdate update_cpt(const Cpt& cpt, const BlockStats& stats, std::size_t cycles);

// Average posterior.
Message update_prior(const Message& prior, std::span<const Message> posteriors);

struct EpochReport {
  std::size_t epoch = 0;
  // Mean per-example local log-likelihood after the update, visible blocks then label.
  std::vector<double> block_log_likelihood;
  double mean_log_likelihood = 0.0;
  std::size_t skipped_examples = 0;
  std::size_t skipped_terms = 0;
};

struct TrainReport {
  std::vector<EpochReport> epochs;
};

struct TrainResult {
  DicaModel model;
  TrainReport report;
};

// Upper bound on stored forward-message entries per statistics pass; larger
// models are trained a slice of visible blocks at a time.
inline constexpr std::size_t kStatsBudget = std::size_t{1} << 24;

// Full-batch localized EM. Every example must observe all visible variables,
// and the label too when config.supervised is set.
TrainResult train(DicaModel model, std::span<const Evidence> dataset, const TrainConfig& config);

void write_report_csv(const TrainReport& report, std::ostream& out);

}  // namespace dica
