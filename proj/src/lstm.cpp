#include "volfc/lstm.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "volfc/errors.hpp"

namespace volfc {
namespace {

Eigen::MatrixXd sigmoid(const Eigen::MatrixXd& z) {
  return z.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
}

Eigen::MatrixXd gate(const Eigen::MatrixXd& w, const Eigen::VectorXd& b, const Eigen::MatrixXd& concat) {
  Eigen::MatrixXd z = w.transpose() * concat;
  z.colwise() += b;
  return z;
}

void check_shapes(const LstmParams& p) {
  const Eigen::Index rows = p.input_dim + p.hidden_dim;
  auto bad_w = [&](const Eigen::MatrixXd& w) { return w.rows() != rows || w.cols() != p.hidden_dim; };
  auto bad_b = [&](const Eigen::VectorXd& b) { return b.size() != p.hidden_dim; };
  if (p.input_dim < 1 || p.hidden_dim < 1 || bad_w(p.w_forget) || bad_w(p.w_input) || bad_w(p.w_candidate) ||
      bad_w(p.w_output) || bad_b(p.b_forget) || bad_b(p.b_input) || bad_b(p.b_candidate) || bad_b(p.b_output) ||
      bad_b(p.w_out)) {
    throw ConfigError("LSTM parameter shapes are inconsistent");
  }
}

/// One batched step: x is input_dim x B, state matrices hidden_dim x B.
StepCache step(const Eigen::MatrixXd& x, const Eigen::MatrixXd& s_prev, const Eigen::MatrixXd& h_prev,
               const LstmParams& p) {
  StepCache c;
  c.concat.resize(p.input_dim + p.hidden_dim, x.cols());
  c.concat.topRows(p.input_dim) = x;
  c.concat.bottomRows(p.hidden_dim) = h_prev;
  c.forget = sigmoid(gate(p.w_forget, p.b_forget, c.concat));
  c.candidate = gate(p.w_candidate, p.b_candidate, c.concat).array().tanh().matrix();
  c.input = sigmoid(gate(p.w_input, p.b_input, c.concat));
  c.s_prev = s_prev;
  c.s = c.forget.cwiseProduct(s_prev) + c.input.cwiseProduct(c.candidate);
  c.output = sigmoid(gate(p.w_output, p.b_output, c.concat));
  c.tanh_s = c.s.array().tanh().matrix();
  return c;
}

Eigen::MatrixXd hidden_of(const StepCache& c) { return c.output.cwiseProduct(c.tanh_s); }

/// Runs windows[0..B) through the recurrence; returns per-step caches.
std::vector<StepCache> unroll(std::span<const Eigen::MatrixXd> windows, const LstmParams& p) {
  check_shapes(p);
  if (windows.empty()) throw DataError("no windows to evaluate");
  const Eigen::Index lag = windows.front().rows();
  const auto B = static_cast<Eigen::Index>(windows.size());
  if (lag < 1) throw DataError("window must have at least one row");
  for (const auto& w : windows) {
    if (w.rows() != lag) throw DataError("windows must share one length");
    if (w.cols() != p.input_dim) throw DataError("window width does not match input_dim");
    if (!w.allFinite()) throw DataError("non-finite value in input window");
  }

  std::vector<StepCache> caches;
  caches.reserve(static_cast<std::size_t>(lag));
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(p.hidden_dim, B);
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(p.hidden_dim, B);
  Eigen::MatrixXd x(p.input_dim, B);
  for (Eigen::Index t = 0; t < lag; ++t) {
    for (Eigen::Index b = 0; b < B; ++b) x.col(b) = windows[static_cast<std::size_t>(b)].row(t).transpose();
    caches.push_back(step(x, s, h, p));
    s = caches.back().s;
    h = hidden_of(caches.back());
  }
  return caches;
}

}  // namespace

LstmParams LstmParams::zeros(Eigen::Index input_dim, Eigen::Index hidden_dim) {
  LstmParams p;
  p.input_dim = input_dim;
  p.hidden_dim = hidden_dim;
  const Eigen::Index rows = input_dim + hidden_dim;
  for (auto* w : {&p.w_forget, &p.w_input, &p.w_candidate, &p.w_output}) *w = Eigen::MatrixXd::Zero(rows, hidden_dim);
  for (auto* b : {&p.b_forget, &p.b_input, &p.b_candidate, &p.b_output, &p.w_out}) *b = Eigen::VectorXd::Zero(hidden_dim);
  p.b_out = 0.0;
  return p;
}

namespace {

template <typename Block, typename Params>
std::vector<Block> collect_blocks(Params& p) {
  using Span = decltype(Block::data);
  auto mat = [](std::string_view name, auto& m) {
    return Block{name, m.rows(), m.cols(), Span(m.data(), static_cast<std::size_t>(m.size()))};
  };
  return {
      mat("w_forget", p.w_forget),       mat("w_input", p.w_input),   mat("w_candidate", p.w_candidate),
      mat("w_output", p.w_output),       mat("b_forget", p.b_forget), mat("b_input", p.b_input),
      mat("b_candidate", p.b_candidate), mat("b_output", p.b_output), mat("w_out", p.w_out),
      Block{"b_out", 1, 1, Span(&p.b_out, 1)},
  };
}

}  // namespace

std::vector<ParamBlock> LstmParams::blocks() { return collect_blocks<ParamBlock>(*this); }
std::vector<ConstParamBlock> LstmParams::blocks() const { return collect_blocks<ConstParamBlock>(*this); }

std::size_t LstmParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& b : blocks()) n += b.data.size();
  return n;
}

LstmState LstmState::zeros(Eigen::Index hidden_dim) {
  return LstmState{Eigen::VectorXd::Zero(hidden_dim), Eigen::VectorXd::Zero(hidden_dim)};
}

CellOutput cell_forward(const Eigen::VectorXd& x, const LstmState& prev, const LstmParams& params) {
  check_shapes(params);
  if (x.size() != params.input_dim) throw DataError("input vector does not match input_dim");
  if (prev.s.size() != params.hidden_dim || prev.h.size() != params.hidden_dim) {
    throw DataError("state does not match hidden_dim");
  }
  if (!x.allFinite()) throw DataError("non-finite value in input vector");
  CellOutput out;
  out.cache = step(x, prev.s, prev.h, params);
  out.state.s = out.cache.s.col(0);
  out.state.h = hidden_of(out.cache).col(0);
  return out;
}

SequenceOutput sequence_forward(const Eigen::MatrixXd& window, const LstmParams& params) {
  SequenceOutput out;
  out.caches = unroll(std::span<const Eigen::MatrixXd>(&window, 1), params);
  const auto& last = out.caches.back();
  out.final_state.s = last.s.col(0);
  out.final_state.h = hidden_of(last).col(0);
  out.prediction = params.w_out.dot(out.final_state.h) + params.b_out;
  return out;
}

Eigen::VectorXd forward_batch(std::span<const Eigen::MatrixXd> windows, const LstmParams& params) {
  const auto caches = unroll(windows, params);
  const Eigen::MatrixXd h = hidden_of(caches.back());
  Eigen::VectorXd pred = h.transpose() * params.w_out;
  pred.array() += params.b_out;
  return pred;
}

double mape_loss(std::span<const double> pred, std::span<const double> actual, double epsilon) {
  if (pred.size() != actual.size()) throw DataError("mape_loss: length mismatch");
  if (pred.empty()) throw DataError("mape_loss: empty input");
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    sum += std::abs(pred[i] - actual[i]) / std::max(std::abs(actual[i]), epsilon);
  }
  return sum / static_cast<double>(pred.size());
}

Gradient bptt(std::span<const Eigen::MatrixXd> windows, std::span<const double> targets, const LstmParams& params,
              double epsilon) {
  if (windows.size() != targets.size()) throw DataError("bptt: windows and targets differ in length");
  const auto caches = unroll(windows, params);
  const auto B = static_cast<Eigen::Index>(windows.size());
  const Eigen::Index H = params.hidden_dim;
  const Eigen::Index D = params.input_dim;

  const Eigen::MatrixXd h_last = hidden_of(caches.back());
  Eigen::VectorXd pred = h_last.transpose() * params.w_out;
  pred.array() += params.b_out;

  Gradient out;
  out.grad = LstmParams::zeros(D, H);
  auto& g = out.grad;

  // d loss / d pred per sample, with sign(0) = 0.
  Eigen::RowVectorXd dpred(B);
  double loss = 0.0;
  for (Eigen::Index b = 0; b < B; ++b) {
    const double a = targets[static_cast<std::size_t>(b)];
    const double denom = std::max(std::abs(a), epsilon);
    const double diff = pred(b) - a;
    loss += std::abs(diff) / denom;
    const double sign = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
    dpred(b) = sign / denom / static_cast<double>(B);
  }
  out.loss = loss / static_cast<double>(B);

  g.w_out = h_last * dpred.transpose();
  g.b_out = dpred.sum();

  Eigen::MatrixXd dh = params.w_out * dpred;  // H x B
  Eigen::MatrixXd ds_carry = Eigen::MatrixXd::Zero(H, B);
  for (auto it = caches.rbegin(); it != caches.rend(); ++it) {
    const StepCache& c = *it;
    const Eigen::MatrixXd d_out = dh.cwiseProduct(c.tanh_s);
    const Eigen::MatrixXd ds =
        ds_carry + dh.cwiseProduct(c.output).cwiseProduct((1.0 - c.tanh_s.array().square()).matrix());

    const Eigen::MatrixXd dz_f =
        ds.cwiseProduct(c.s_prev).cwiseProduct((c.forget.array() * (1.0 - c.forget.array())).matrix());
    const Eigen::MatrixXd dz_i =
        ds.cwiseProduct(c.candidate).cwiseProduct((c.input.array() * (1.0 - c.input.array())).matrix());
    const Eigen::MatrixXd dz_c =
        ds.cwiseProduct(c.input).cwiseProduct((1.0 - c.candidate.array().square()).matrix());
    const Eigen::MatrixXd dz_o = d_out.cwiseProduct((c.output.array() * (1.0 - c.output.array())).matrix());

    g.w_forget.noalias() += c.concat * dz_f.transpose();
    g.w_input.noalias() += c.concat * dz_i.transpose();
    g.w_candidate.noalias() += c.concat * dz_c.transpose();
    g.w_output.noalias() += c.concat * dz_o.transpose();
    g.b_forget += dz_f.rowwise().sum();
    g.b_input += dz_i.rowwise().sum();
    g.b_candidate += dz_c.rowwise().sum();
    g.b_output += dz_o.rowwise().sum();

    Eigen::MatrixXd d_concat = params.w_forget * dz_f;
    d_concat.noalias() += params.w_input * dz_i;
    d_concat.noalias() += params.w_candidate * dz_c;
    d_concat.noalias() += params.w_output * dz_o;
    dh = d_concat.bottomRows(H);
    ds_carry = ds.cwiseProduct(c.forget);
  }

  for (const auto& block : std::as_const(g).blocks()) {
    for (double v : block.data) {
      if (!std::isfinite(v)) throw NumericError("non-finite gradient in parameter '" + std::string(block.name) + "'");
    }
  }
  return out;
}

}  // namespace volfc
