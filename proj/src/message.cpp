#include "dica/message.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "dica/errors.hpp"

namespace dica {

namespace {

void check_probability_entries(std::span<const double> v, const char* what) {
  if (v.empty()) throw DimensionError(std::string(what) + ": empty vector");
  for (double x : v) {
    if (!(x >= 0.0) || !std::isfinite(x)) {
      throw InvalidArgument(std::string(what) + ": negative or non-finite entry");
    }
  }
}

}  // namespace

Message::Message(std::vector<double> values) : values_(std::move(values)) {
  check_probability_entries(values_, "Message");
  double total = std::accumulate(values_.begin(), values_.end(), 0.0);
  if (std::abs(total - 1.0) > kNormTolerance) {
    throw InvalidArgument("Message: entries sum to " + std::to_string(total) + ", not 1");
  }
}

Message Message::uniform(std::size_t size) {
  if (size == 0) throw DimensionError("Message::uniform: empty alphabet");
  return Message(std::vector<double>(size, 1.0 / static_cast<double>(size)), Trusted{});
}

Message Message::delta(std::size_t size, std::size_t symbol) {
  if (symbol >= size) {
    throw DimensionError("Message::delta: symbol " + std::to_string(symbol) +
                         " outside alphabet of size " + std::to_string(size));
  }
  std::vector<double> v(size, 0.0);
  v[symbol] = 1.0;
  return Message(std::move(v), Trusted{});
}

std::size_t Message::argmax() const {
  return static_cast<std::size_t>(std::max_element(values_.begin(), values_.end()) - values_.begin());
}

Cpt::Cpt(std::size_t rows, std::size_t cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), entries_(std::move(entries)) {
  if (rows_ == 0 || cols_ == 0) throw DimensionError("Cpt: empty table");
  if (entries_.size() != rows_ * cols_) {
    throw DimensionError("Cpt: " + std::to_string(entries_.size()) + " entries for a " +
                         std::to_string(rows_) + "x" + std::to_string(cols_) + " table");
  }
  for (std::size_t k = 0; k < rows_; ++k) {
    auto r = row(k);
    check_probability_entries(r, "Cpt");
    double total = std::accumulate(r.begin(), r.end(), 0.0);
    if (std::abs(total - 1.0) > kNormTolerance) {
      throw InvalidArgument("Cpt: row " + std::to_string(k) + " sums to " + std::to_string(total));
    }
  }
}

Cpt Cpt::identity(std::size_t size) {
  std::vector<double> e(size * size, 0.0);
  for (std::size_t k = 0; k < size; ++k) e[k * size + k] = 1.0;
  return Cpt(size, size, std::move(e));
}

Cpt Cpt::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) throw DimensionError("Cpt::from_rows: no rows");
  std::vector<double> e;
  e.reserve(rows.size() * rows.front().size());
  for (const auto& r : rows) {
    if (r.size() != rows.front().size()) throw DimensionError("Cpt::from_rows: ragged rows");
    e.insert(e.end(), r.begin(), r.end());
  }
  return Cpt(rows.size(), rows.front().size(), std::move(e));
}

Message normalize(std::vector<double> v) {
  if (v.empty()) throw DimensionError("normalize: empty vector");
  double total = 0.0;
  for (double x : v) {
    if (!(x >= 0.0) || !std::isfinite(x)) throw InvalidArgument("normalize: negative or non-finite entry");
    total += x;
  }
  if (total <= 0.0) throw ContradictoryEvidence("normalize: all-zero vector");
  for (double& x : v) x /= total;
  return Message(std::move(v), Message::Trusted{});
}

Message normalize(std::span<const double> v) { return normalize(std::vector<double>(v.begin(), v.end())); }

Message forward_through(const Cpt& cpt, const Message& f_in) {
  if (f_in.size() != cpt.rows()) {
    throw DimensionError("forward_through: message of size " + std::to_string(f_in.size()) +
                         " into a table with " + std::to_string(cpt.rows()) + " rows");
  }
  std::vector<double> out(cpt.cols(), 0.0);
  for (std::size_t k = 0; k < cpt.rows(); ++k) {
    const double w = f_in[k];
    if (w == 0.0) continue;
    auto r = cpt.row(k);
    for (std::size_t l = 0; l < r.size(); ++l) out[l] += w * r[l];
  }
  return normalize(std::move(out));
}

Message backward_through(const Cpt& cpt, const Message& b_out) {
  if (b_out.size() != cpt.cols()) {
    throw DimensionError("backward_through: message of size " + std::to_string(b_out.size()) +
                         " into a table with " + std::to_string(cpt.cols()) + " columns");
  }
  std::vector<double> out(cpt.rows(), 0.0);
  auto b = b_out.values();
  for (std::size_t k = 0; k < cpt.rows(); ++k) {
    auto r = cpt.row(k);
    double acc = 0.0;
    for (std::size_t l = 0; l < r.size(); ++l) acc += r[l] * b[l];
    out[k] = acc;
  }
  return normalize(std::move(out));
}

Message combine(std::span<const Message> msgs) {
  if (msgs.empty()) throw DimensionError("combine: no messages");
  const std::size_t n = msgs.front().size();
  std::vector<double> out(msgs.front().values().begin(), msgs.front().values().end());
  for (const auto& m : msgs.subspan(1)) {
    if (m.size() != n) throw DimensionError("combine: messages of different lengths");
    for (std::size_t k = 0; k < n; ++k) out[k] *= m[k];
  }
  return normalize(std::move(out));
}

Message posterior(const Message& f, const Message& b) { return combine({f, b}); }

}  // namespace dica
