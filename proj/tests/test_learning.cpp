#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "dica/errors.hpp"
#include "dica/learning.hpp"
#include "oracle.hpp"
#include "toy_models.hpp"

using namespace dica;

namespace {

BlockStats random_stats(std::size_t rows, std::size_t cols, std::size_t count, std::mt19937_64& rng) {
  BlockStats stats(rows, cols);
  for (std::size_t n = 0; n < count; ++n) {
    stats.add(Message(oracle::random_probabilities(rows, rng, 0.0)), Message(oracle::random_probabilities(cols, rng, 0.0)));
  }
  return stats;
}

void check_row_stochastic(const Cpt& c) {
  for (std::size_t k = 0; k < c.rows(); ++k) {
    double total = 0.0;
    for (double x : c.row(k)) {
      CHECK(x >= 0.0);
      total += x;
    }
    CHECK(std::abs(total - 1.0) <= 1e-9);
  }
}

std::vector<Evidence> pattern_dataset(std::size_t copies) {
  std::vector<Evidence> data;
  for (std::size_t r = 0; r < copies; ++r) {
    for (const auto& p : toy::kPatterns) data.push_back(Evidence::hard(std::span<const std::uint8_t>(p)));
  }
  return data;
}

}  // namespace

TEST_CASE("collect_stats bookkeeping") {
  // One source, one visible block: the only other branch is the source.
  const Message prior{0.2, 0.5, 0.3};
  std::mt19937_64 rng(1);
  DicaModel single({3}, {prior}, {oracle::random_cpt(3, 2, rng)});
  const std::vector<Evidence> one{Evidence::hard(std::vector<std::size_t>{1})};
  auto stats = collect_stats(single, one);
  REQUIRE(stats.visible[0].size() == 1);
  for (std::size_t k = 0; k < 3; ++k) CHECK(std::abs(stats.visible[0].forward(0)[k] - prior[k]) <= 1e-15);
  CHECK(stats.visible[0].backward(0) == Message::delta(2, 1));

  const DicaModel m = toy::patterns(0.1);
  const std::vector<Evidence> two{Evidence::hard(std::span<const std::uint8_t>(toy::kPatterns[0])),
                                  Evidence::hard(std::span<const std::uint8_t>(toy::kPatterns[3]))};
  auto s2 = collect_stats(m, two);
  for (const auto& block : s2.visible) CHECK(block.size() == 2);
  CHECK(s2.source_posteriors.size() == 2);
  CHECK(s2.source_posteriors[0].size() == 2);
  CHECK(s2.skipped == 0);

  auto partial = collect_stats(m, two, BlockRange{2, 5});
  for (std::size_t j = 0; j < 8; ++j) CHECK(partial.visible[j].size() == (j >= 2 && j < 5 ? 2u : 0u));
}

TEST_CASE("collect_stats records the diverter product toward each block") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    auto c = oracle::random_case(rng);
    Evidence ev;
    for (auto x : c.model.visible_sizes()) ev.visible.push_back(Hard{std::uniform_int_distribution<std::size_t>(0, x - 1)(rng)});
    if (c.model.has_label()) ev.label = Hard{0};
    const std::vector<Evidence> batch{ev};
    auto stats = collect_stats(c.model, batch);

    // Recompute every inward message and combine all but the block's own.
    std::vector<Message> inward;
    for (std::size_t i = 0; i < c.model.num_sources(); ++i) {
      inward.push_back(forward_through(c.model.marginalizers()[i], c.model.priors()[i]));
    }
    for (std::size_t j = 0; j < c.model.num_visible(); ++j) {
      inward.push_back(backward_through(c.model.visible_cpts()[j], evidence_message(ev.visible[j], c.model.visible_sizes()[j])));
    }
    if (c.model.has_label()) inward.push_back(backward_through(*c.model.label_cpt(), evidence_message(ev.label, *c.model.label_size())));
    for (std::size_t j = 0; j < c.model.num_visible(); ++j) {
      std::vector<Message> others = inward;
      others.erase(others.begin() + static_cast<std::ptrdiff_t>(c.model.num_sources() + j));
      const Message expected = combine(others);
      const Message& got = stats.visible[j].forward(0);
      for (std::size_t k = 0; k < expected.size(); ++k) CHECK(std::abs(got[k] - expected[k]) <= 1e-12);
    }
  }
}

TEST_CASE("collect_stats skips contradictory examples") {
  const DicaModel m = toy::patterns(0.0);
  std::vector<Evidence> batch = pattern_dataset(1);
  std::vector<std::uint8_t> impossible{1, 1, 1, 1, 1, 1, 1, 1};
  batch.insert(batch.begin() + 1, Evidence::hard(std::span<const std::uint8_t>(impossible)));
  auto stats = collect_stats(m, batch);
  CHECK(stats.skipped == 1);
  CHECK(stats.skipped_examples == std::vector<std::size_t>{1});
  CHECK(stats.visible[0].size() == 4);
}

TEST_CASE("update_cpt with a single delta example") {
  std::mt19937_64 rng(3);
  const Cpt p = oracle::random_cpt(3, 4, rng);
  BlockStats stats(3, 4);
  stats.add(Message::delta(3, 1), Message::delta(4, 2));
  const Cpt q = update_cpt(p, stats, 1).cpt;
  for (std::size_t l = 0; l < 4; ++l) CHECK(std::abs(q(1, l) - (l == 2 ? 1.0 : 0.0)) <= 1e-12);
  for (std::size_t k : {0, 2}) {
    for (std::size_t l = 0; l < 4; ++l) CHECK(q(k, l) == p(k, l));
  }
}

TEST_CASE("update_cpt leaves tables alone when every backward is uniform") {
  std::mt19937_64 rng(4);
  const Cpt p = oracle::random_cpt(5, 3, rng);
  BlockStats stats(5, 3);
  for (int n = 0; n < 20; ++n) stats.add(Message(oracle::random_probabilities(5, rng, 0.0)), Message::uniform(3));
  const Cpt q = update_cpt(p, stats, 5).cpt;
  for (std::size_t i = 0; i < p.entries().size(); ++i) CHECK(std::abs(q.entries()[i] - p.entries()[i]) <= 1e-12);
}

TEST_CASE("update_cpt is monotone and keeps rows stochastic") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t rows = std::uniform_int_distribution<std::size_t>(1, 8)(rng);
    const std::size_t cols = std::uniform_int_distribution<std::size_t>(2, 5)(rng);
    const Cpt p = oracle::random_cpt(rows, cols, rng);
    const BlockStats stats = random_stats(rows, cols, 30, rng);
    const CptUpdate u = update_cpt(p, stats, 5);
    REQUIRE(u.log_likelihood.size() == 6);
    CHECK(u.log_likelihood.front() == doctest::Approx(local_log_likelihood(p, stats)).epsilon(1e-12));
    CHECK(u.log_likelihood.back() == doctest::Approx(local_log_likelihood(u.cpt, stats)).epsilon(1e-12));
    for (std::size_t r = 1; r < u.log_likelihood.size(); ++r) {
      CHECK(u.log_likelihood[r] - u.log_likelihood[r - 1] >= -1e-9);
    }
    check_row_stochastic(u.cpt);
  }
}

TEST_CASE("update_cpt preserves exact zeros and validates its inputs") {
  const Cpt p = Cpt::from_rows({{0.0, 0.4, 0.6}, {0.5, 0.0, 0.5}});
  std::mt19937_64 rng(6);
  const Cpt q = update_cpt(p, random_stats(2, 3, 10, rng), 5).cpt;
  CHECK(q(0, 0) == 0.0);
  CHECK(q(1, 1) == 0.0);
  CHECK(q(0, 1) > 0.0);

  CHECK_THROWS_AS(update_cpt(p, BlockStats(2, 3), 1), InvalidArgument);
  CHECK_THROWS_AS(update_cpt(p, random_stats(3, 3, 2, rng), 1), DimensionError);
  CHECK_THROWS_AS(update_cpt(p, random_stats(2, 3, 2, rng), 0), InvalidArgument);

  // An example the table cannot explain is skipped and counted.
  BlockStats impossible(2, 3);
  impossible.add(Message::delta(2, 0), Message::delta(3, 0));
  impossible.add(Message::delta(2, 0), Message::delta(3, 1));
  const CptUpdate u = update_cpt(p, impossible, 2);
  CHECK(u.skipped_terms == 1);
  CHECK(u.cpt(0, 1) == doctest::Approx(1.0));
}

TEST_CASE("update_prior") {
  const Message prior{0.3, 0.7};
  const std::vector<Message> same(5, prior);
  CHECK(update_prior(prior, same) == prior);

  const std::vector<Message> deltas{Message::delta(2, 0), Message::delta(2, 0), Message::delta(2, 1), Message::delta(2, 0)};
  CHECK(update_prior(prior, deltas) == Message({0.75, 0.25}));

  const std::vector<Message> soft{Message{0.2, 0.8}, Message{0.6, 0.4}};
  const Message avg = update_prior(prior, soft);
  CHECK(avg[0] == doctest::Approx(0.4));
  CHECK(avg[1] == doctest::Approx(0.6));

  // Convex hull: each coordinate lies between the extremes of the inputs.
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Message> posts;
    for (int n = 0; n < 7; ++n) posts.emplace_back(oracle::random_probabilities(4, rng, 0.0));
    const Message q = update_prior(Message::uniform(4), posts);
    for (std::size_t k = 0; k < 4; ++k) {
      double lo = 1.0, hi = 0.0;
      for (const auto& p : posts) {
        lo = std::min(lo, p[k]);
        hi = std::max(hi, p[k]);
      }
      CHECK(q[k] >= lo - 1e-15);
      CHECK(q[k] <= hi + 1e-15);
    }
  }

  CHECK_THROWS_AS(update_prior(prior, std::vector<Message>{}), InvalidArgument);
  CHECK_THROWS_AS(update_prior(prior, std::vector<Message>{Message::uniform(3)}), DimensionError);
}

TEST_CASE("train with a single-state source memorizes the pattern") {
  const std::vector<std::uint8_t> pat{1, 0, 0, 1, 1, 0};
  const std::vector<Evidence> data(5, Evidence::hard(std::span<const std::uint8_t>(pat)));
  DicaModel m = build(Topology{{1}, std::vector<std::size_t>(6, 2), std::nullopt}, 9);
  TrainResult r = train(m, data, TrainConfig{1, 5, 9, false, 0.01});
  for (std::size_t j = 0; j < pat.size(); ++j) CHECK(r.model.visible_cpts()[j](0, pat[j]) >= 1.0 - 1e-12);
  REQUIRE(r.report.epochs.size() == 1);
  CHECK(r.report.epochs[0].mean_log_likelihood == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("train sharpens a noisy pattern model onto the stored patterns") {
  // Started inside the right basin, EM must settle on the exact patterns in
  // their original product states.
  const auto data = pattern_dataset(25);
  const TrainResult r = train(toy::patterns(0.3), data, TrainConfig{10, 5, 0, false, 0.01});
  for (std::size_t s = 0; s < 4; ++s) {
    auto forwards = generate(r.model, std::span<const std::size_t>(product_coords(s, r.model.source_sizes())));
    for (std::size_t j = 0; j < 8; ++j) {
      CHECK(forwards[j].argmax() == toy::kPatterns[s][j]);
      CHECK(forwards[j][toy::kPatterns[s][j]] > 0.999);
    }
  }
  for (const auto& p : r.model.priors()) CHECK(p[0] == doctest::Approx(0.5).epsilon(1e-6));
  for (std::size_t e = 1; e < r.report.epochs.size(); ++e) {
    CHECK(r.report.epochs[e].mean_log_likelihood >= r.report.epochs[e - 1].mean_log_likelihood - 1e-9);
  }
}

TEST_CASE("train is deterministic and reports per epoch") {
  const auto data = pattern_dataset(3);
  const TrainConfig config{3, 5, 12, false, 0.01};
  const DicaModel init = build(Topology{{2, 2}, std::vector<std::size_t>(8, 2), std::nullopt}, config.seed);
  const TrainResult a = train(init, data, config);
  const TrainResult b = train(init, data, config);
  CHECK(a.model == b.model);
  REQUIRE(a.report.epochs.size() == 3);
  for (std::size_t e = 0; e < 3; ++e) {
    CHECK(a.report.epochs[e].epoch == e + 1);
    CHECK(a.report.epochs[e].block_log_likelihood.size() == 8);
    CHECK(a.report.epochs[e].skipped_examples == 0);
  }

  std::ostringstream csv;
  write_report_csv(a.report, csv);
  std::istringstream lines(csv.str());
  std::string line;
  std::getline(lines, line);
  CHECK(line == "epoch,mean_log_likelihood,skipped_examples");
  int rows = 0;
  while (std::getline(lines, line)) ++rows;
  CHECK(rows == 3);
}

TEST_CASE("supervised training learns the label table") {
  std::vector<Evidence> data;
  for (int r = 0; r < 10; ++r) {
    for (std::size_t s = 0; s < 4; ++s) {
      Evidence e = Evidence::hard(std::span<const std::uint8_t>(toy::kPatterns[s]));
      e.label = Hard{s / 2};
      data.push_back(e);
    }
  }
  // Noisy pattern tables and an uninformative label table.
  const DicaModel start({2, 2}, {Message::uniform(2), Message::uniform(2)}, toy::pattern_tables(0.3),
                        Cpt(4, 2, std::vector<double>(8, 0.5)));
  const DicaModel trained = train(start, data, TrainConfig{10, 5, 0, true, 0.01}).model;
  for (std::size_t s = 0; s < 4; ++s) {
    CHECK(trained.label_cpt()->operator()(s, s / 2) > 0.999);
    auto res = classify(trained, Evidence::hard(std::span<const std::uint8_t>(toy::kPatterns[s])));
    CHECK(res.label_posterior.argmax() == s / 2);
  }
}

TEST_CASE("train validates its inputs") {
  const DicaModel plain = build(Topology{{2}, std::vector<std::size_t>(8, 2), std::nullopt}, 1);
  const DicaModel labelled = build(Topology{{2}, std::vector<std::size_t>(8, 2), 2}, 1);
  const auto data = pattern_dataset(1);
  CHECK_THROWS_AS(train(plain, std::vector<Evidence>{}, TrainConfig{}), InvalidArgument);
  CHECK_THROWS_AS(train(plain, data, TrainConfig{1, 5, 0, true, 0.01}), MissingLabelBlock);
  CHECK_THROWS_AS(train(labelled, data, TrainConfig{}), InvalidArgument);
  CHECK_THROWS_AS(train(labelled, data, TrainConfig{1, 5, 0, true, 0.01}), InvalidArgument);
  CHECK_THROWS_AS(train(plain, data, TrainConfig{0, 5, 0, false, 0.01}), InvalidArgument);
  std::vector<Evidence> partial = data;
  partial[0].visible[3] = Absent{};
  CHECK_THROWS_AS(train(plain, partial, TrainConfig{}), InvalidArgument);
}
