#include "emsaudit/bilstm.hpp"

namespace emsaudit {
namespace {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

LstmParams LstmParams::zeros(int input_dim, int hidden_dim) {
  LstmParams p;
  p.w_input = RowMatrix::Zero(4 * hidden_dim, input_dim);
  p.w_hidden = RowMatrix::Zero(4 * hidden_dim, hidden_dim);
  p.bias = Eigen::VectorXd::Zero(4 * hidden_dim);
  return p;
}

void LstmParams::set_zero() {
  w_input.setZero();
  w_hidden.setZero();
  bias.setZero();
}

LstmTrace lstm_forward(const LstmParams& params, const Eigen::MatrixXd& inputs, bool reverse) {
  const int H = params.hidden_dim();
  const int T = static_cast<int>(inputs.cols());
  LstmTrace trace;
  trace.gates = params.w_input * inputs;
  trace.gates.colwise() += params.bias;
  trace.cells.resize(H, T);
  trace.tanh_cells.resize(H, T);
  trace.hidden.resize(H, T);

  Eigen::VectorXd h_prev = Eigen::VectorXd::Zero(H);
  Eigen::VectorXd c_prev = Eigen::VectorXd::Zero(H);
  for (int step = 0; step < T; ++step) {
    const int t = reverse ? T - 1 - step : step;
    auto z = trace.gates.col(t);
    z.noalias() += params.w_hidden * h_prev;
    for (int r = 0; r < H; ++r) {
      z(r) = sigmoid(z(r));
      z(H + r) = sigmoid(z(H + r));
      z(2 * H + r) = std::tanh(z(2 * H + r));
      z(3 * H + r) = sigmoid(z(3 * H + r));
    }
    auto c = trace.cells.col(t);
    c = z.segment(H, H).cwiseProduct(c_prev) + z.segment(0, H).cwiseProduct(z.segment(2 * H, H));
    trace.tanh_cells.col(t) = c.array().tanh();
    trace.hidden.col(t) = z.segment(3 * H, H).cwiseProduct(trace.tanh_cells.col(t));
    h_prev = trace.hidden.col(t);
    c_prev = c;
  }
  return trace;
}

Eigen::MatrixXd lstm_backward(const LstmParams& params, const Eigen::MatrixXd& inputs,
                              const LstmTrace& trace, const Eigen::MatrixXd& d_hidden, bool reverse,
                              LstmParams& grad) {
  const int H = params.hidden_dim();
  const int T = static_cast<int>(inputs.cols());
  Eigen::MatrixXd d_pre(4 * H, T);       // gradient w.r.t. gate pre-activations
  Eigen::MatrixXd h_before = Eigen::MatrixXd::Zero(H, T);  // h_{t-1} in processing order
  Eigen::VectorXd dh_next = Eigen::VectorXd::Zero(H);
  Eigen::VectorXd dc_next = Eigen::VectorXd::Zero(H);
  Eigen::VectorXd zero = Eigen::VectorXd::Zero(H);

  for (int step = T - 1; step >= 0; --step) {
    const int t = reverse ? T - 1 - step : step;
    const int prev = reverse ? t + 1 : t - 1;
    const bool has_prev = step > 0;
    const auto gates = trace.gates.col(t);
    const auto i = gates.segment(0, H).array();
    const auto f = gates.segment(H, H).array();
    const auto g = gates.segment(2 * H, H).array();
    const auto o = gates.segment(3 * H, H).array();
    const auto tc = trace.tanh_cells.col(t).array();
    const Eigen::ArrayXd c_prev = has_prev ? Eigen::ArrayXd(trace.cells.col(prev).array()) : zero.array();

    const Eigen::ArrayXd dh = d_hidden.col(t).array() + dh_next.array();
    const Eigen::ArrayXd dc = dh * o * (1.0 - tc * tc) + dc_next.array();

    auto dz = d_pre.col(t);
    dz.segment(0, H) = (dc * g * i * (1.0 - i)).matrix();
    dz.segment(H, H) = (dc * c_prev * f * (1.0 - f)).matrix();
    dz.segment(2 * H, H) = (dc * i * (1.0 - g * g)).matrix();
    dz.segment(3 * H, H) = (dh * tc * o * (1.0 - o)).matrix();

    if (has_prev) h_before.col(t) = trace.hidden.col(prev);
    dh_next.noalias() = params.w_hidden.transpose() * dz;
    dc_next = (dc * f).matrix();
  }

  grad.w_input.noalias() += d_pre * inputs.transpose();
  grad.w_hidden.noalias() += d_pre * h_before.transpose();
  grad.bias += d_pre.rowwise().sum();
  return params.w_input.transpose() * d_pre;
}

}  // namespace emsaudit
