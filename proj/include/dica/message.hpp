#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace dica {

inline constexpr double kNormTolerance = 1e-9;

// Normalized discrete probability vector over a variable's alphabet.
// Forward, backward and posterior messages all share this type.
class Message {
 public:
  // Validates that `values` is already a probability vector (within kNormTolerance).
  explicit Message(std::vector<double> values);
  Message(std::initializer_list<double> values) : Message(std::vector<double>(values)) {}

  static Message uniform(std::size_t size);
  static Message delta(std::size_t size, std::size_t symbol);

  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t k) const { return values_[k]; }
  std::span<const double> values() const { return values_; }

  std::size_t argmax() const;

  friend bool operator==(const Message&, const Message&) = default;

 private:
  struct Trusted {};
  Message(std::vector<double> values, Trusted) : values_(std::move(values)) {}
  friend Message normalize(std::vector<double> v);

  std::vector<double> values_;
};

// Row-stochastic conditional probability table, entry (k, l) = P(out = l | in = k).
class Cpt {
 public:
  Cpt(std::size_t rows, std::size_t cols, std::vector<double> entries);

  static Cpt identity(std::size_t size);
  static Cpt from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double operator()(std::size_t k, std::size_t l) const { return entries_[k * cols_ + l]; }
  std::span<const double> row(std::size_t k) const {
    return std::span<const double>(entries_).subspan(k * cols_, cols_);
  }
  std::span<const double> entries() const { return entries_; }

  friend bool operator==(const Cpt&, const Cpt&) = default;

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> entries_;
};

// Scales a non-negative vector to unit sum. Throws ContradictoryEvidence on
// an all-zero input.
Message normalize(std::vector<double> v);
Message normalize(std::span<const double> v);

// Sum rule in the variable direction: f_out ∝ Pᵀ f_in.
Message forward_through(const Cpt& cpt, const Message& f_in);

// Sum rule against the variable direction: b_in ∝ P b_out.
Message backward_through(const Cpt& cpt, const Message& b_out);

// Product rule at a diverter: normalized element-wise product.
Message combine(std::span<const Message> msgs);
inline Message combine(std::initializer_list<Message> msgs) {
  return combine(std::span<const Message>(msgs.begin(), msgs.size()));
}

Message posterior(const Message& f, const Message& b);

}  // namespace dica
