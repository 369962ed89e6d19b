#include <cmath>
#include <limits>
#include <random>
#include <utility>

#include "volfc/errors.hpp"
#include "volfc/lstm.hpp"

namespace volfc {
namespace {

/// Adam with per-block first/second moment buffers.
class Adam {
 public:
  Adam(const LstmParams& shape, double learning_rate)
      : lr_(learning_rate), m_(LstmParams::zeros(shape.input_dim, shape.hidden_dim)),
        v_(LstmParams::zeros(shape.input_dim, shape.hidden_dim)) {}

  void step(LstmParams& params, const LstmParams& grad) {
    ++t_;
    const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
    auto p = params.blocks();
    const auto g = grad.blocks();
    auto m = m_.blocks();
    auto v = v_.blocks();
    for (std::size_t b = 0; b < p.size(); ++b) {
      for (std::size_t i = 0; i < p[b].data.size(); ++i) {
        const double gi = g[b].data[i];
        double& mi = m[b].data[i];
        double& vi = v[b].data[i];
        mi = kBeta1 * mi + (1.0 - kBeta1) * gi;
        vi = kBeta2 * vi + (1.0 - kBeta2) * gi * gi;
        p[b].data[i] -= lr_ * (mi / c1) / (std::sqrt(vi / c2) + kEps);
      }
    }
  }

 private:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;

  double lr_;
  long t_ = 0;
  LstmParams m_;
  LstmParams v_;
};

struct Windows {
  std::vector<Eigen::MatrixXd> inputs;
  std::vector<double> targets;
};

Windows collect(const SchemeDataset& ds, std::size_t first_row, std::size_t end_row, int lag) {
  Windows w;
  for (std::size_t j = first_row; j < end_row; ++j) {
    w.inputs.push_back(window_at(ds, j, lag));
    w.targets.push_back(ds.target(static_cast<Eigen::Index>(j)));
  }
  return w;
}

double evaluate(const Windows& w, const LstmParams& params, double epsilon) {
  const Eigen::VectorXd pred = forward_batch(w.inputs, params);
  return mape_loss(std::span<const double>(pred.data(), static_cast<std::size_t>(pred.size())), w.targets, epsilon);
}

}  // namespace

void validate(const TrainConfig& c) {
  if (c.lag < 1 || c.batch_size < 1 || c.hidden_dim < 1 || c.epochs < 0) {
    throw ConfigError("lag, batch_size and hidden_dim must be positive and epochs non-negative");
  }
  if (!(c.learning_rate > 0.0) || !(c.mape_epsilon > 0.0)) {
    throw ConfigError("learning_rate and mape_epsilon must be positive");
  }
}

std::size_t train_rows(std::size_t total_rows) {
  return static_cast<std::size_t>(std::floor(kTrainFraction * static_cast<double>(total_rows)));
}

LstmParams init_params(Eigen::Index input_dim, Eigen::Index hidden_dim, std::uint64_t seed) {
  auto p = LstmParams::zeros(input_dim, hidden_dim);
  std::mt19937_64 rng(seed);
  auto fill = [&rng](Eigen::MatrixXd& w, double fan_in, double fan_out) {
    std::uniform_real_distribution<double> dist(-std::sqrt(6.0 / (fan_in + fan_out)),
                                                std::sqrt(6.0 / (fan_in + fan_out)));
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = dist(rng);
  };
  const auto fan_in = static_cast<double>(input_dim + hidden_dim);
  const auto fan_out = static_cast<double>(hidden_dim);
  fill(p.w_forget, fan_in, fan_out);
  fill(p.w_input, fan_in, fan_out);
  fill(p.w_candidate, fan_in, fan_out);
  fill(p.w_output, fan_in, fan_out);
  Eigen::MatrixXd head(hidden_dim, 1);
  fill(head, static_cast<double>(hidden_dim), 1.0);
  p.w_out = head.col(0);
  p.b_forget.setOnes();
  return p;
}

Eigen::MatrixXd window_at(const SchemeDataset& ds, std::size_t last_row, int lag) {
  const auto L = static_cast<std::size_t>(lag);
  if (lag < 1 || last_row + 1 < L || last_row >= ds.rows()) throw DataError("window out of dataset range");
  return ds.features.middleRows(static_cast<Eigen::Index>(last_row + 1 - L), lag);
}

TrainedModel train(const SchemeDataset& dataset, const TrainConfig& config) {
  validate(config);
  const auto lag = static_cast<std::size_t>(config.lag);
  const std::size_t total = dataset.rows();
  const std::size_t n_train = train_rows(total);
  if (total < lag + 10 || n_train < lag || n_train >= total) {
    throw DataError("dataset of " + std::to_string(total) + " rows is too short for lag " + std::to_string(lag));
  }

  TrainedModel model;
  model.config = config;
  model.scheme = dataset.scheme;
  model.train_rows = n_train;
  model.params = init_params(static_cast<Eigen::Index>(dataset.input_dim()), config.hidden_dim, config.seed);

  const Windows train_set = collect(dataset, lag - 1, n_train, config.lag);
  const Windows test_set = collect(dataset, n_train, total, config.lag);

  std::vector<std::size_t> usable;
  for (std::size_t i = 0; i < train_set.targets.size(); ++i) {
    if (std::abs(train_set.targets[i]) >= kMinTrainTarget) usable.push_back(i);
  }
  if (usable.empty() && config.epochs > 0) throw DataError("every training target is too close to zero");

  Adam adam(model.params, config.learning_rate);
  const auto batch = static_cast<std::size_t>(config.batch_size);
  std::vector<Eigen::MatrixXd> xb;
  std::vector<double> yb;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    for (std::size_t start = 0; start < usable.size(); start += batch) {
      xb.clear();
      yb.clear();
      for (std::size_t i = start; i < std::min(start + batch, usable.size()); ++i) {
        xb.push_back(train_set.inputs[usable[i]]);
        yb.push_back(train_set.targets[usable[i]]);
      }
      Gradient g;
      try {
        g = bptt(xb, yb, model.params, config.mape_epsilon);
      } catch (const NumericError& e) {
        throw NumericError("training diverged in epoch " + std::to_string(epoch) + " (last finite epoch " +
                           std::to_string(epoch - 1) + "): " + e.what());
      }
      adam.step(model.params, g.grad);
    }
    const EpochRecord rec{epoch, evaluate(train_set, model.params, config.mape_epsilon),
                          evaluate(test_set, model.params, config.mape_epsilon)};
    if (!std::isfinite(rec.train_mape) || !std::isfinite(rec.test_mape)) {
      throw NumericError("training diverged in epoch " + std::to_string(epoch) + " (last finite epoch " +
                         std::to_string(epoch - 1) + ")");
    }
    model.history.push_back(rec);
  }
  return model;
}

Prediction predict(const TrainedModel& model, const SchemeDataset& dataset) {
  if (static_cast<Eigen::Index>(dataset.input_dim()) != model.params.input_dim) {
    throw DataError("dataset has " + std::to_string(dataset.input_dim()) + " columns, model expects " +
                    std::to_string(model.params.input_dim));
  }
  const auto lag = static_cast<std::size_t>(model.config.lag);
  if (dataset.rows() < lag) throw DataError("dataset shorter than the model lag");

  // Each window is evaluated on its own so no row's rounding depends on which
  // other rows share its batch.
  Prediction out;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t j = lag - 1; j < dataset.rows(); ++j) {
    const auto w = window_at(dataset, j, model.config.lag);
    out.rows.push_back(j);
    if (!w.allFinite()) {
      out.normalized.push_back(nan);
      out.volatility.push_back(nan);
      continue;
    }
    const double norm = forward_batch(std::span<const Eigen::MatrixXd>(&w, 1), model.params)(0);
    out.normalized.push_back(norm);
    out.volatility.push_back(std::max(0.0, denormalize(dataset, j, norm)));
  }
  return out;
}

}  // namespace volfc
