#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "dica/message.hpp"

namespace dica {

// Largest product space accepted by build().
inline constexpr std::size_t kMaxProductSize = std::size_t{1} << 20;

// Mixed-radix index into the product space S_1 x ... x S_M, first coordinate
// most significant (the Kronecker factor order of the marginalizers).
std::size_t product_index(std::span<const std::size_t> coords, std::span<const std::size_t> source_sizes);

// Inverse of product_index.
std::vector<std::size_t> product_coords(std::size_t index, std::span<const std::size_t> source_sizes);

// Fixed |S_i| x |S| matrix mapping source i into the product space: row k is
// uniform over the product indices whose i-th coordinate is k.
Cpt marginalizer(std::size_t source, std::span<const std::size_t> source_sizes);

struct Topology {
  std::vector<std::size_t> source_sizes;
  std::vector<std::size_t> visible_sizes;
  std::optional<std::size_t> label_size;
};

// Sources with priors, fixed marginalizers into the product-space diverter,
// one learned table per visible variable and an optional label table.
class DicaModel {
 public:
  DicaModel(std::vector<std::size_t> source_sizes, std::vector<Message> priors, std::vector<Cpt> visible_cpts,
            std::optional<Cpt> label_cpt = std::nullopt);

  std::size_t num_sources() const { return source_sizes_.size(); }
  std::size_t num_visible() const { return visible_cpts_.size(); }
  std::size_t product_size() const { return product_size_; }
  bool has_label() const { return label_cpt_.has_value(); }

  const std::vector<std::size_t>& source_sizes() const { return source_sizes_; }
  std::vector<std::size_t> visible_sizes() const;
  std::optional<std::size_t> label_size() const;
  Topology topology() const;

  const std::vector<Message>& priors() const { return priors_; }
  const std::vector<Cpt>& marginalizers() const { return marginalizers_; }
  const std::vector<Cpt>& visible_cpts() const { return visible_cpts_; }
  const std::optional<Cpt>& label_cpt() const { return label_cpt_; }

  void set_prior(std::size_t i, Message prior);
  void set_visible_cpt(std::size_t j, Cpt cpt);
  void set_label_cpt(Cpt cpt);

  friend bool operator==(const DicaModel&, const DicaModel&) = default;

 private:
  std::vector<std::size_t> source_sizes_;
  std::size_t product_size_;
  std::vector<Message> priors_;
  std::vector<Cpt> marginalizers_;
  std::vector<Cpt> visible_cpts_;
  std::optional<Cpt> label_cpt_;
};

// Fresh model: near-uniform priors (relative perturbation of `perturbation`)
// and strictly positive random learnable tables. Same seed, same model.
DicaModel build(const Topology& topology, std::uint64_t seed, double perturbation = 0.01);

struct Absent {
  friend bool operator==(Absent, Absent) = default;
};
struct Hard {
  std::size_t symbol;
  friend bool operator==(Hard, Hard) = default;
};
// Soft observations are plain Messages.
using Observation = std::variant<Absent, Hard, Message>;

struct Evidence {
  std::vector<Observation> visible;
  Observation label = Absent{};

  static Evidence none(std::size_t num_visible);
  static Evidence hard(std::span<const std::uint8_t> symbols);
  static Evidence hard(std::span<const std::size_t> symbols);
};

// Backward message injected for one observation (uniform when absent).
Message evidence_message(const Observation& obs, std::size_t alphabet_size);

struct Branch {
  Message forward;
  Message backward;
};

// All messages after one inward / diverter / outward sweep. Diverter branches
// are ordered sources, visible variables, then the label.
struct MessageState {
  std::vector<Branch> sources;   // f = injected forward, b = b_{S_i}
  std::vector<Branch> visible;   // f = f_{X_j}, b = evidence
  std::optional<Branch> label;
  std::vector<Message> into_diverter;
  std::vector<Message> out_of_diverter;

  std::size_t visible_branch(std::size_t j) const { return sources.size() + j; }
  std::size_t label_branch() const { return sources.size() + visible.size(); }

  Message source_posterior(std::size_t i) const { return posterior(sources[i].forward, sources[i].backward); }
  Message visible_posterior(std::size_t j) const { return posterior(visible[j].forward, visible[j].backward); }
  std::vector<Message> source_posteriors() const;
};

// Exact three-step propagation on the tree. An empty `source_forwards` uses the priors.
MessageState propagate(const DicaModel& model, const Evidence& evidence,
                       std::span<const Message> source_forwards = {});

// Mode 1: delta forwards at the sources, forwards collected at X.
std::vector<Message> generate(const DicaModel& model, std::span<const std::size_t> source_config);
std::vector<Message> generate(const DicaModel& model, std::span<const Message> source_forwards);

// Mode 2: full observations in, soft factorial code out.
std::vector<Message> encode(const DicaModel& model, const Evidence& evidence);

struct VariableEstimate {
  bool observed;
  Message forward;
  Message posterior;
};

struct Completion {
  std::vector<VariableEstimate> variables;
  std::vector<Message> source_posteriors;
};

// Mode 3: partial observations; erased variables take the forward (and posterior) estimate.
Completion complete(const DicaModel& model, const Evidence& evidence);

// Mode 4: possibly corrupted observations; returns the forwards only.
std::vector<Message> correct(const DicaModel& model, const Evidence& evidence);

struct Classification {
  Message label_posterior;
  std::vector<Message> source_posteriors;
};

Classification classify(const DicaModel& model, const Evidence& evidence);

struct Prototype {
  std::vector<Message> forwards;
  std::vector<Message> source_posteriors;
};

// Backward delta on class `c` at the label, nothing at the visible variables.
Prototype prototype(const DicaModel& model, std::size_t c);

// p(x = 1) for each binary message.
std::vector<double> mean_image(std::span<const Message> msgs);

}  // namespace dica
