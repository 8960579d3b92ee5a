#include "dica/learning.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>

#include "dica/errors.hpp"

namespace dica {

void BlockStats::add(Message f_in, Message b_out) {
  if (f_in.size() != in_size_ || b_out.size() != out_size_) {
    throw DimensionError("BlockStats::add: message sizes do not match the block");
  }
  forwards_.push_back(std::move(f_in));
  backwards_.push_back(std::move(b_out));
}

CollectedStats collect_stats(const DicaModel& model, std::span<const Evidence> batch, BlockRange visible_blocks) {
  const std::size_t m = model.num_sources();
  const std::size_t n = model.num_visible();
  const std::size_t begin = std::min(visible_blocks.begin, n);
  const std::size_t end = std::min(visible_blocks.end, n);

  CollectedStats out;
  out.visible.reserve(n);
  for (const auto& cpt : model.visible_cpts()) out.visible.emplace_back(cpt.rows(), cpt.cols());
  if (model.has_label()) out.label.emplace(model.label_cpt()->rows(), model.label_cpt()->cols());
  out.source_posteriors.resize(m);

  for (std::size_t e = 0; e < batch.size(); ++e) {
    MessageState state = [&]() -> MessageState {
      try {
        return propagate(model, batch[e]);
      } catch (const ContradictoryEvidence&) {
        return {};
      }
    }();
    if (state.out_of_diverter.empty()) {
      ++out.skipped;
      out.skipped_examples.push_back(e);
      continue;
    }
    for (std::size_t j = begin; j < end; ++j) {
      out.visible[j].add(state.out_of_diverter[m + j], state.visible[j].backward);
    }
    if (out.label) out.label->add(state.out_of_diverter[state.label_branch()], state.label->backward);
    for (std::size_t i = 0; i < m; ++i) out.source_posteriors[i].push_back(state.source_posterior(i));
  }
  return out;
}

namespace {

void check_block(const Cpt& cpt, const BlockStats& stats, const char* who) {
  if (stats.in_size() != cpt.rows() || stats.out_size() != cpt.cols()) {
    throw DimensionError(std::string(who) + ": statistics do not match the table shape");
  }
}

// f_nᵀ P b_n for one example.
double example_likelihood(const Cpt& cpt, const Message& f, const Message& b) {
  double d = 0.0;
  for (std::size_t k = 0; k < cpt.rows(); ++k) {
    if (f[k] == 0.0) continue;
    auto r = cpt.row(k);
    double pb = 0.0;
    for (std::size_t l = 0; l < r.size(); ++l) pb += r[l] * b[l];
    d += f[k] * pb;
  }
  return d;
}

}  // namespace

double local_log_likelihood(const Cpt& cpt, const BlockStats& stats) {
  check_block(cpt, stats, "local_log_likelihood");
  double total = 0.0;
  for (std::size_t n = 0; n < stats.size(); ++n) {
    const double d = example_likelihood(cpt, stats.forward(n), stats.backward(n));
    if (d > 0.0) total += std::log(d);
  }
  return total;
}

CptUpdate update_cpt(const Cpt& cpt, const BlockStats& stats, std::size_t cycles) {
  check_block(cpt, stats, "update_cpt");
  if (stats.empty()) throw InvalidArgument("update_cpt: no statistics");
  if (cycles == 0) throw InvalidArgument("update_cpt: at least one cycle is required");

  const std::size_t rows = cpt.rows();
  const std::size_t cols = cpt.cols();
  std::vector<double> p(cpt.entries().begin(), cpt.entries().end());
  std::vector<double> acc(rows * cols);
  std::vector<double> pb(rows);

  CptUpdate out{cpt, {}, 0};
  out.log_likelihood.reserve(cycles + 1);

  auto sweep = [&](bool accumulate) {
    double loglik = 0.0;
    std::size_t skipped = 0;
    for (std::size_t n = 0; n < stats.size(); ++n) {
      const Message& f = stats.forward(n);
      const Message& b = stats.backward(n);
      double d = 0.0;
      for (std::size_t k = 0; k < rows; ++k) {
        double s = 0.0;
        for (std::size_t l = 0; l < cols; ++l) s += p[k * cols + l] * b[l];
        pb[k] = s;
        d += f[k] * s;
      }
      if (!(d > 0.0)) {
        ++skipped;
        continue;
      }
      loglik += std::log(d);
      if (!accumulate) continue;
      for (std::size_t k = 0; k < rows; ++k) {
        if (f[k] == 0.0) continue;
        const double w = f[k] / d;
        for (std::size_t l = 0; l < cols; ++l) acc[k * cols + l] += w * b[l];
      }
    }
    out.skipped_terms = std::max(out.skipped_terms, skipped);
    return loglik;
  };

  for (std::size_t r = 0; r < cycles; ++r) {
    std::fill(acc.begin(), acc.end(), 0.0);
    out.log_likelihood.push_back(sweep(true));
    for (std::size_t k = 0; k < rows; ++k) {
      double total = 0.0;
      for (std::size_t l = 0; l < cols; ++l) total += p[k * cols + l] * acc[k * cols + l];
      if (!(total > 0.0)) continue;  // no mass reached this row
      for (std::size_t l = 0; l < cols; ++l) {
        const double old = p[k * cols + l];
        const double updated = old * acc[k * cols + l] / total;
        p[k * cols + l] = old > 0.0 ? std::max(updated, kUnderflowFloor) : 0.0;
      }
    }
  }
  out.log_likelihood.push_back(sweep(false));
  out.cpt = Cpt(rows, cols, std::move(p));
  return out;
}

Message update_prior(const Message& prior, std::span<const Message> posteriors) {
  if (posteriors.empty()) throw InvalidArgument("update_prior: no posteriors");
  std::vector<double> sum(prior.size(), 0.0);
  for (const auto& q : posteriors) {
    if (q.size() != prior.size()) throw DimensionError("update_prior: posterior has the wrong length");
    for (std::size_t k = 0; k < sum.size(); ++k) sum[k] += q[k];
  }
  return normalize(std::move(sum));
}

TrainResult train(DicaModel model, std::span<const Evidence> dataset, const TrainConfig& config) {
  if (dataset.empty()) throw InvalidArgument("train: empty dataset");
  if (config.epochs == 0 || config.inner_cycles == 0) throw InvalidArgument("train: epochs and inner_cycles must be >= 1");
  if (config.supervised && !model.has_label()) throw MissingLabelBlock("train: supervised training needs a label block");
  if (!config.supervised && model.has_label()) {
    throw InvalidArgument("train: model has a label block but training is unsupervised");
  }
  for (const auto& ev : dataset) {
    if (ev.visible.size() != model.num_visible()) throw DimensionError("train: example has the wrong number of variables");
    for (const auto& obs : ev.visible) {
      if (std::holds_alternative<Absent>(obs)) throw InvalidArgument("train: examples must observe every visible variable");
    }
    if (config.supervised && std::holds_alternative<Absent>(ev.label)) {
      throw InvalidArgument("train: supervised examples need a label");
    }
  }

  const std::size_t n = model.num_visible();
  const std::size_t per_block = dataset.size() * model.product_size();
  const std::size_t slice = std::max<std::size_t>(1, kStatsBudget / std::max<std::size_t>(1, per_block));

  TrainReport report;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    DicaModel next = model;
    EpochReport er;
    er.epoch = epoch + 1;
    er.block_log_likelihood.assign(n + (model.has_label() ? 1 : 0), 0.0);

    for (std::size_t begin = 0; begin < n; begin += slice) {
      const std::size_t end = std::min(n, begin + slice);
      CollectedStats stats = collect_stats(model, dataset, BlockRange{begin, end});
      const double accepted = static_cast<double>(dataset.size() - stats.skipped);
      if (accepted == 0) {
        er.skipped_examples = stats.skipped;
        break;
      }
      for (std::size_t j = begin; j < end; ++j) {
        CptUpdate u = update_cpt(model.visible_cpts()[j], stats.visible[j], config.inner_cycles);
        er.block_log_likelihood[j] = u.log_likelihood.back() / accepted;
        er.skipped_terms += u.skipped_terms;
        next.set_visible_cpt(j, std::move(u.cpt));
      }
      if (begin != 0) continue;

      // Label table and priors only need one pass.
      er.skipped_examples = stats.skipped;
      if (stats.label) {
        CptUpdate u = update_cpt(*model.label_cpt(), *stats.label, config.inner_cycles);
        er.block_log_likelihood[n] = u.log_likelihood.back() / accepted;
        er.skipped_terms += u.skipped_terms;
        next.set_label_cpt(std::move(u.cpt));
      }
      for (std::size_t i = 0; i < model.num_sources(); ++i) {
        next.set_prior(i, update_prior(model.priors()[i], stats.source_posteriors[i]));
      }
    }

    double total = 0.0;
    for (double x : er.block_log_likelihood) total += x;
    er.mean_log_likelihood = total / static_cast<double>(er.block_log_likelihood.size());
    report.epochs.push_back(std::move(er));
    model = std::move(next);
  }
  return TrainResult{std::move(model), std::move(report)};
}

void write_report_csv(const TrainReport& report, std::ostream& out) {
  out << "epoch,mean_log_likelihood,skipped_examples\n";
  char buf[64];
  for (const auto& e : report.epochs) {
    std::snprintf(buf, sizeof buf, "%.9f", e.mean_log_likelihood);
    out << e.epoch << ',' << buf << ',' << e.skipped_examples << '\n';
  }
}

}  // namespace dica
