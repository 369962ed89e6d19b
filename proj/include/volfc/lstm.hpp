#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "volfc/preprocess.hpp"

namespace volfc {

/// A named, contiguous view of one parameter tensor (column-major for matrices).
template <typename T>
struct BasicParamBlock {
  std::string_view name;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  std::span<T> data;
};
using ParamBlock = BasicParamBlock<double>;
using ConstParamBlock = BasicParamBlock<const double>;

/// Single-layer LSTM with a linear scalar head.
///
/// Gate pre-activations use the row-vector convention [x, h_prev] * W + b, so
/// every gate matrix is (input_dim + hidden_dim) x hidden_dim.
struct LstmParams {
  Eigen::Index input_dim = 0;
  Eigen::Index hidden_dim = 0;
  Eigen::MatrixXd w_forget, w_input, w_candidate, w_output;
  Eigen::VectorXd b_forget, b_input, b_candidate, b_output;
  Eigen::VectorXd w_out;
  double b_out = 0.0;

  static LstmParams zeros(Eigen::Index input_dim, Eigen::Index hidden_dim);

  std::vector<ParamBlock> blocks();
  std::vector<ConstParamBlock> blocks() const;
  std::size_t parameter_count() const;
};

struct LstmState {
  Eigen::VectorXd s;
  Eigen::VectorXd h;

  static LstmState zeros(Eigen::Index hidden_dim);
};

/// Activations of one time step for a batch (one column per sample).
struct StepCache {
  Eigen::MatrixXd concat;  // (input_dim + hidden_dim) x B
  Eigen::MatrixXd forget, input, candidate, output;
  Eigen::MatrixXd s_prev, s, tanh_s;
};

struct CellOutput {
  LstmState state;
  StepCache cache;
};

/// One step of the recurrence:
///   f = sigmoid([x,h]W_f + b_f), s~ = tanh([x,h]W_s + b_s), i = sigmoid([x,h]W_i + b_i),
///   s = f*s_prev + i*s~, o = sigmoid([x,h]W_o + b_o), h = o*tanh(s).
CellOutput cell_forward(const Eigen::VectorXd& x, const LstmState& prev, const LstmParams& params);

struct SequenceOutput {
  double prediction = 0.0;
  LstmState final_state;
  std::vector<StepCache> caches;
};

/// Unrolls the cell over the rows of `window` (lag x input_dim) from a zero state,
/// then applies the head w_out . h + b_out.
SequenceOutput sequence_forward(const Eigen::MatrixXd& window, const LstmParams& params);

/// Predictions for many windows of equal length, evaluated as one batch.
Eigen::VectorXd forward_batch(std::span<const Eigen::MatrixXd> windows, const LstmParams& params);

/// mean |pred - actual| / max(|actual|, epsilon), as a fraction.
double mape_loss(std::span<const double> pred, std::span<const double> actual, double epsilon);

struct Gradient {
  LstmParams grad;
  double loss = 0.0;
};

/// Analytic gradient of the batch-mean MAPE with respect to every parameter.
/// Uses subgradient 0 where pred == actual. Throws NumericError naming the
/// offending parameter when a gradient is non-finite.
Gradient bptt(std::span<const Eigen::MatrixXd> windows, std::span<const double> targets, const LstmParams& params,
              double epsilon);

struct TrainConfig {
  int lag = 50;
  int batch_size = 5;
  int epochs = 200;
  int hidden_dim = 32;
  double learning_rate = 1e-3;
  std::uint64_t seed = 42;
  double mape_epsilon = 1e-8;
};

void validate(const TrainConfig& config);

/// Fraction of dataset rows used for training (chronological split).
inline constexpr double kTrainFraction = 0.8;
/// Training batches skip samples whose target magnitude is below this.
inline constexpr double kMinTrainTarget = 1e-6;

std::size_t train_rows(std::size_t total_rows);

struct EpochRecord {
  int epoch = 0;
  double train_mape = 0.0;
  double test_mape = 0.0;
};

struct TrainedModel {
  LstmParams params;
  TrainConfig config;
  Scheme scheme;
  std::size_t train_rows = 0;
  std::vector<EpochRecord> history;
};

/// Seeded fan-balanced uniform initialization; biases 0 except the forget bias (1).
LstmParams init_params(Eigen::Index input_dim, Eigen::Index hidden_dim, std::uint64_t seed);

/// The lag x input_dim feature block ending at `last_row` (inclusive).
Eigen::MatrixXd window_at(const SchemeDataset& dataset, std::size_t last_row, int lag);

TrainedModel train(const SchemeDataset& dataset, const TrainConfig& config);

struct Prediction {
  std::vector<std::size_t> rows;
  std::vector<double> normalized;
  /// normalized * norm_std + norm_mean, floored at 0.
  std::vector<double> volatility;
};

/// Predicts every row that has a full window behind it (rows lag-1 .. T-1).
/// Rows whose window holds a non-finite feature are reported as NaN.
Prediction predict(const TrainedModel& model, const SchemeDataset& dataset);

inline constexpr int kModelFormatVersion = 1;

void write_model_json(std::ostream& out, const TrainedModel& model);
TrainedModel read_model_json(std::istream& in);
std::string serialize_model(const TrainedModel& model);
TrainedModel deserialize_model(std::string_view text);

/// `epoch,train_mape,test_mape`.
void write_history_csv(std::ostream& out, const TrainedModel& model);

}  // namespace volfc
