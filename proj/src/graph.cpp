#include "dica/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "dica/errors.hpp"

namespace dica {

namespace {

std::size_t checked_product_size(std::span<const std::size_t> source_sizes) {
  if (source_sizes.empty()) throw DimensionError("at least one source is required");
  std::size_t total = 1;
  for (std::size_t s : source_sizes) {
    if (s == 0) throw DimensionError("source alphabet of size 0");
    if (total > kMaxProductSize / s) {
      throw CapacityError("product space exceeds " + std::to_string(kMaxProductSize) + " states");
    }
    total *= s;
  }
  return total;
}

// For every branch t, the normalized product of all inward messages except
// t's own. Products are accumulated as sums of logs (prefix and suffix sums,
// linear in the branch count) so hundreds of sharp messages cannot underflow
// to an all-zero vector; only genuine zeros survive as -inf.
std::vector<Message> diverter_outputs(const std::vector<Message>& inward) {
  const std::size_t branches = inward.size();
  const std::size_t states = inward.front().size();
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();

  std::vector<std::vector<double>> logs(branches, std::vector<double>(states));
  for (std::size_t t = 0; t < branches; ++t) {
    for (std::size_t k = 0; k < states; ++k) {
      const double x = inward[t][k];
      logs[t][k] = x > 0.0 ? std::log(x) : kNegInf;
    }
  }
  std::vector<std::vector<double>> prefix(branches, std::vector<double>(states, 0.0));
  for (std::size_t t = 1; t < branches; ++t) {
    for (std::size_t k = 0; k < states; ++k) prefix[t][k] = prefix[t - 1][k] + logs[t - 1][k];
  }

  std::vector<Message> out(branches, Message::uniform(1));
  std::vector<double> suffix(states, 0.0);
  std::vector<double> v(states);
  for (std::size_t t = branches; t-- > 0;) {
    double top = kNegInf;
    for (std::size_t k = 0; k < states; ++k) {
      v[k] = prefix[t][k] + suffix[k];
      top = std::max(top, v[k]);
    }
    if (top == kNegInf) {
      throw ContradictoryEvidence("diverter: incompatible messages toward branch " + std::to_string(t));
    }
    for (std::size_t k = 0; k < states; ++k) v[k] = std::exp(v[k] - top);
    out[t] = normalize(v);
    for (std::size_t k = 0; k < states; ++k) suffix[k] += logs[t][k];
  }
  return out;
}

void check_observation(const Observation& obs, std::size_t alphabet, const std::string& where) {
  if (const auto* h = std::get_if<Hard>(&obs); h && h->symbol >= alphabet) {
    throw DimensionError(where + ": symbol " + std::to_string(h->symbol) + " outside alphabet of size " +
                         std::to_string(alphabet));
  }
  if (const auto* m = std::get_if<Message>(&obs); m && m->size() != alphabet) {
    throw DimensionError(where + ": soft evidence of size " + std::to_string(m->size()) +
                         " for alphabet of size " + std::to_string(alphabet));
  }
}

bool is_absent(const Observation& obs) { return std::holds_alternative<Absent>(obs); }

}  // namespace

std::size_t product_index(std::span<const std::size_t> coords, std::span<const std::size_t> source_sizes) {
  if (coords.size() != source_sizes.size()) {
    throw DimensionError("product_index: " + std::to_string(coords.size()) + " coordinates for " +
                         std::to_string(source_sizes.size()) + " sources");
  }
  std::size_t index = 0;
  for (std::size_t i = 0; i < coords.size(); ++i) {
    if (coords[i] >= source_sizes[i]) {
      throw DimensionError("product_index: coordinate " + std::to_string(i) + " = " + std::to_string(coords[i]) +
                           " out of range " + std::to_string(source_sizes[i]));
    }
    index = index * source_sizes[i] + coords[i];
  }
  return index;
}

std::vector<std::size_t> product_coords(std::size_t index, std::span<const std::size_t> source_sizes) {
  std::vector<std::size_t> coords(source_sizes.size());
  for (std::size_t i = source_sizes.size(); i-- > 0;) {
    coords[i] = index % source_sizes[i];
    index /= source_sizes[i];
  }
  if (index != 0) throw DimensionError("product_coords: index out of range");
  return coords;
}

Cpt marginalizer(std::size_t source, std::span<const std::size_t> source_sizes) {
  const std::size_t total = checked_product_size(source_sizes);
  if (source >= source_sizes.size()) {
    throw DimensionError("marginalizer: source " + std::to_string(source) + " of " +
                         std::to_string(source_sizes.size()));
  }
  const std::size_t own = source_sizes[source];
  // Stride of coordinate `source` in the mixed-radix index.
  std::size_t stride = 1;
  for (std::size_t i = source + 1; i < source_sizes.size(); ++i) stride *= source_sizes[i];
  const double weight = static_cast<double>(own) / static_cast<double>(total);

  std::vector<double> e(own * total, 0.0);
  for (std::size_t s = 0; s < total; ++s) {
    const std::size_t k = (s / stride) % own;
    e[k * total + s] = weight;
  }
  return Cpt(own, total, std::move(e));
}

DicaModel::DicaModel(std::vector<std::size_t> source_sizes, std::vector<Message> priors,
                     std::vector<Cpt> visible_cpts, std::optional<Cpt> label_cpt)
    : source_sizes_(std::move(source_sizes)),
      product_size_(checked_product_size(source_sizes_)),
      priors_(std::move(priors)),
      visible_cpts_(std::move(visible_cpts)),
      label_cpt_(std::move(label_cpt)) {
  if (priors_.size() != source_sizes_.size()) throw DimensionError("DicaModel: one prior per source required");
  for (std::size_t i = 0; i < priors_.size(); ++i) {
    if (priors_[i].size() != source_sizes_[i]) {
      throw DimensionError("DicaModel: prior " + std::to_string(i) + " has the wrong length");
    }
  }
  if (visible_cpts_.empty()) throw DimensionError("DicaModel: at least one visible variable is required");
  for (std::size_t j = 0; j < visible_cpts_.size(); ++j) {
    if (visible_cpts_[j].rows() != product_size_) {
      throw DimensionError("DicaModel: visible table " + std::to_string(j) + " has " +
                           std::to_string(visible_cpts_[j].rows()) + " rows, product space has " +
                           std::to_string(product_size_));
    }
  }
  if (label_cpt_ && label_cpt_->rows() != product_size_) {
    throw DimensionError("DicaModel: label table rows do not match the product space");
  }
  marginalizers_.reserve(source_sizes_.size());
  for (std::size_t i = 0; i < source_sizes_.size(); ++i) marginalizers_.push_back(marginalizer(i, source_sizes_));
}

std::vector<std::size_t> DicaModel::visible_sizes() const {
  std::vector<std::size_t> sizes;
  sizes.reserve(visible_cpts_.size());
  for (const auto& c : visible_cpts_) sizes.push_back(c.cols());
  return sizes;
}

std::optional<std::size_t> DicaModel::label_size() const {
  if (!label_cpt_) return std::nullopt;
  return label_cpt_->cols();
}

Topology DicaModel::topology() const { return Topology{source_sizes_, visible_sizes(), label_size()}; }

void DicaModel::set_prior(std::size_t i, Message prior) {
  if (i >= priors_.size() || prior.size() != source_sizes_[i]) throw DimensionError("set_prior: shape mismatch");
  priors_[i] = std::move(prior);
}

void DicaModel::set_visible_cpt(std::size_t j, Cpt cpt) {
  if (j >= visible_cpts_.size() || cpt.rows() != visible_cpts_[j].rows() || cpt.cols() != visible_cpts_[j].cols()) {
    throw DimensionError("set_visible_cpt: shape mismatch");
  }
  visible_cpts_[j] = std::move(cpt);
}

void DicaModel::set_label_cpt(Cpt cpt) {
  if (!label_cpt_) throw MissingLabelBlock("set_label_cpt: model has no label block");
  if (cpt.rows() != label_cpt_->rows() || cpt.cols() != label_cpt_->cols()) {
    throw DimensionError("set_label_cpt: shape mismatch");
  }
  label_cpt_ = std::move(cpt);
}

DicaModel build(const Topology& topology, std::uint64_t seed, double perturbation) {
  if (!(perturbation >= 0.0 && perturbation < 1.0)) throw InvalidArgument("build: perturbation must be in [0, 1)");
  if (topology.visible_sizes.empty()) throw DimensionError("build: at least one visible variable is required");
  for (std::size_t x : topology.visible_sizes) {
    if (x < 2) throw InvalidArgument("build: visible alphabets need at least 2 symbols");
  }
  if (topology.label_size && *topology.label_size < 2) throw InvalidArgument("build: label alphabet needs 2 symbols");
  const std::size_t states = checked_product_size(topology.source_sizes);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<Message> priors;
  for (std::size_t size : topology.source_sizes) {
    std::vector<double> p(size);
    for (double& x : p) x = 1.0 + perturbation * (2.0 * unit(rng) - 1.0);
    priors.push_back(normalize(std::move(p)));
  }

  // Entries drawn from (0, 1] so every table starts strictly positive.
  auto random_cpt = [&](std::size_t cols) {
    std::vector<double> e(states * cols);
    for (std::size_t k = 0; k < states; ++k) {
      double total = 0.0;
      for (std::size_t l = 0; l < cols; ++l) {
        e[k * cols + l] = 1.0 - unit(rng);
        total += e[k * cols + l];
      }
      for (std::size_t l = 0; l < cols; ++l) e[k * cols + l] /= total;
    }
    return Cpt(states, cols, std::move(e));
  };

  std::vector<Cpt> visible;
  visible.reserve(topology.visible_sizes.size());
  for (std::size_t x : topology.visible_sizes) visible.push_back(random_cpt(x));
  std::optional<Cpt> label;
  if (topology.label_size) label = random_cpt(*topology.label_size);
  return DicaModel(topology.source_sizes, std::move(priors), std::move(visible), std::move(label));
}

Evidence Evidence::none(std::size_t num_visible) { return Evidence{std::vector<Observation>(num_visible, Absent{})}; }

Evidence Evidence::hard(std::span<const std::uint8_t> symbols) {
  Evidence e;
  e.visible.reserve(symbols.size());
  for (auto s : symbols) e.visible.emplace_back(Hard{s});
  return e;
}

Evidence Evidence::hard(std::span<const std::size_t> symbols) {
  Evidence e;
  e.visible.reserve(symbols.size());
  for (auto s : symbols) e.visible.emplace_back(Hard{s});
  return e;
}

Message evidence_message(const Observation& obs, std::size_t alphabet_size) {
  if (const auto* h = std::get_if<Hard>(&obs)) return Message::delta(alphabet_size, h->symbol);
  if (const auto* m = std::get_if<Message>(&obs)) {
    if (m->size() != alphabet_size) throw DimensionError("evidence_message: soft evidence has the wrong length");
    return *m;
  }
  return Message::uniform(alphabet_size);
}

std::vector<Message> MessageState::source_posteriors() const {
  std::vector<Message> out;
  out.reserve(sources.size());
  for (std::size_t i = 0; i < sources.size(); ++i) out.push_back(source_posterior(i));
  return out;
}

MessageState propagate(const DicaModel& model, const Evidence& evidence, std::span<const Message> source_forwards) {
  const std::size_t m = model.num_sources();
  const std::size_t n = model.num_visible();
  if (evidence.visible.size() != n) {
    throw DimensionError("propagate: evidence for " + std::to_string(evidence.visible.size()) +
                         " variables, model has " + std::to_string(n));
  }
  if (!source_forwards.empty() && source_forwards.size() != m) {
    throw DimensionError("propagate: expected " + std::to_string(m) + " source forwards");
  }
  if (!is_absent(evidence.label) && !model.has_label()) {
    throw MissingLabelBlock("propagate: label evidence given but the model has no label block");
  }

  MessageState state;
  state.into_diverter.reserve(m + n + 1);

  // Step 1: inward.
  for (std::size_t i = 0; i < m; ++i) {
    Message f = source_forwards.empty() ? model.priors()[i] : source_forwards[i];
    if (f.size() != model.source_sizes()[i]) throw DimensionError("propagate: source forward has the wrong length");
    state.into_diverter.push_back(forward_through(model.marginalizers()[i], f));
    const std::size_t size = f.size();
    state.sources.push_back(Branch{std::move(f), Message::uniform(size)});
  }
  for (std::size_t j = 0; j < n; ++j) {
    const Cpt& cpt = model.visible_cpts()[j];
    check_observation(evidence.visible[j], cpt.cols(), "visible variable " + std::to_string(j));
    Message b = evidence_message(evidence.visible[j], cpt.cols());
    state.into_diverter.push_back(backward_through(cpt, b));
    state.visible.push_back(Branch{Message::uniform(cpt.cols()), std::move(b)});
  }
  if (model.has_label()) {
    const Cpt& cpt = *model.label_cpt();
    check_observation(evidence.label, cpt.cols(), "label");
    Message b = evidence_message(evidence.label, cpt.cols());
    state.into_diverter.push_back(backward_through(cpt, b));
    state.label = Branch{Message::uniform(cpt.cols()), std::move(b)};
  }

  // Step 2: diverter.
  state.out_of_diverter = diverter_outputs(state.into_diverter);

  // Step 3: outward.
  for (std::size_t i = 0; i < m; ++i) {
    state.sources[i].backward = backward_through(model.marginalizers()[i], state.out_of_diverter[i]);
  }
  for (std::size_t j = 0; j < n; ++j) {
    state.visible[j].forward = forward_through(model.visible_cpts()[j], state.out_of_diverter[m + j]);
  }
  if (state.label) state.label->forward = forward_through(*model.label_cpt(), state.out_of_diverter[m + n]);
  return state;
}

std::vector<Message> generate(const DicaModel& model, std::span<const Message> source_forwards) {
  if (source_forwards.size() != model.num_sources()) {
    throw DimensionError("generate: expected " + std::to_string(model.num_sources()) + " source forwards");
  }
  auto state = propagate(model, Evidence::none(model.num_visible()), source_forwards);
  std::vector<Message> out;
  out.reserve(state.visible.size());
  for (auto& b : state.visible) out.push_back(std::move(b.forward));
  return out;
}

std::vector<Message> generate(const DicaModel& model, std::span<const std::size_t> source_config) {
  product_index(source_config, model.source_sizes());  // range check
  std::vector<Message> forwards;
  forwards.reserve(source_config.size());
  for (std::size_t i = 0; i < source_config.size(); ++i) {
    forwards.push_back(Message::delta(model.source_sizes()[i], source_config[i]));
  }
  return generate(model, std::span<const Message>(forwards));
}

std::vector<Message> encode(const DicaModel& model, const Evidence& evidence) {
  for (const auto& obs : evidence.visible) {
    if (is_absent(obs)) throw InvalidArgument("encode: every visible variable must be observed");
  }
  return propagate(model, evidence).source_posteriors();
}

Completion complete(const DicaModel& model, const Evidence& evidence) {
  bool any = false;
  for (const auto& obs : evidence.visible) any = any || !is_absent(obs);
  if (!any) throw InvalidArgument("complete: at least one visible variable must be observed");

  auto state = propagate(model, evidence);
  Completion out;
  out.variables.reserve(state.visible.size());
  for (std::size_t j = 0; j < state.visible.size(); ++j) {
    out.variables.push_back(
        VariableEstimate{!is_absent(evidence.visible[j]), state.visible[j].forward, state.visible_posterior(j)});
  }
  out.source_posteriors = state.source_posteriors();
  return out;
}

std::vector<Message> correct(const DicaModel& model, const Evidence& evidence) {
  for (const auto& obs : evidence.visible) {
    if (is_absent(obs)) throw InvalidArgument("correct: every visible variable must be observed");
  }
  auto state = propagate(model, evidence);
  std::vector<Message> out;
  out.reserve(state.visible.size());
  for (auto& b : state.visible) out.push_back(std::move(b.forward));
  return out;
}

Classification classify(const DicaModel& model, const Evidence& evidence) {
  if (!model.has_label()) throw MissingLabelBlock("classify: model has no label block");
  auto state = propagate(model, evidence);
  return Classification{posterior(state.label->forward, state.label->backward), state.source_posteriors()};
}

Prototype prototype(const DicaModel& model, std::size_t c) {
  if (!model.has_label()) throw MissingLabelBlock("prototype: model has no label block");
  if (c >= *model.label_size()) {
    throw DimensionError("prototype: class " + std::to_string(c) + " outside label alphabet");
  }
  Evidence e = Evidence::none(model.num_visible());
  e.label = Hard{c};
  auto state = propagate(model, e);
  Prototype out;
  for (auto& b : state.visible) out.forwards.push_back(b.forward);
  out.source_posteriors = state.source_posteriors();
  return out;
}

std::vector<double> mean_image(std::span<const Message> msgs) {
  std::vector<double> out;
  out.reserve(msgs.size());
  for (const auto& m : msgs) {
    if (m.size() != 2) throw DimensionError("mean_image: non-binary alphabet of size " + std::to_string(m.size()));
    out.push_back(m[1]);
  }
  return out;
}

}  // namespace dica
