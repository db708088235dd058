#pragma once

#include <Eigen/Dense>

namespace emsaudit {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// One LSTM direction. Gate blocks are stacked [input; forget; cell; output],
// each hidden_dim rows.
struct LstmParams {
  RowMatrix w_input;   // 4H x E
  RowMatrix w_hidden;  // 4H x H
  Eigen::VectorXd bias;  // 4H

  static LstmParams zeros(int input_dim, int hidden_dim);
  int hidden_dim() const { return static_cast<int>(w_hidden.cols()); }
  int input_dim() const { return static_cast<int>(w_input.cols()); }
  void set_zero();
};

// Activations kept for backpropagation, one column per token position.
struct LstmTrace {
  Eigen::MatrixXd gates;   // 4H x T, post-nonlinearity
  Eigen::MatrixXd cells;   // H x T
  Eigen::MatrixXd tanh_cells;  // H x T
  Eigen::MatrixXd hidden;  // H x T
};

// Runs left-to-right, or right-to-left when reverse is set. Column t of every
// trace matrix always refers to token position t.
LstmTrace lstm_forward(const LstmParams& params, const Eigen::MatrixXd& inputs, bool reverse);

// Accumulates parameter gradients into grad and returns d(loss)/d(inputs),
// given d(loss)/d(hidden) per position.
Eigen::MatrixXd lstm_backward(const LstmParams& params, const Eigen::MatrixXd& inputs,
                              const LstmTrace& trace, const Eigen::MatrixXd& d_hidden, bool reverse,
                              LstmParams& grad);

}  // namespace emsaudit
