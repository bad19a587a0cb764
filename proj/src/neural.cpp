#include "fol/neural.hpp"

#include <cmath>
#include <stdexcept>

#include "fol/common.hpp"

namespace fol {

namespace {

// Writes the activation value and its derivative for the pre-activation z.
void apply_activation(Activation act, const Eigen::MatrixXd& z, Eigen::MatrixXd& value,
                      Eigen::MatrixXd& deriv) {
  value.resize(z.rows(), z.cols());
  deriv.resize(z.rows(), z.cols());
  switch (act) {
    case Activation::Linear:
      value = z;
      deriv.setOnes();
      return;
    case Activation::Sigmoid:
      value.array() = ((-z.array()).exp() + 1.0).inverse();
      deriv.array() = value.array() * (1.0 - value.array());
      return;
    case Activation::Tanh:
      value.array() = z.array().tanh();
      deriv.array() = 1.0 - value.array().square();
      return;
    case Activation::Swish:
      // a(z) = z sigmoid(z); a'(z) = sigmoid(z) + z sigmoid(z)(1 - sigmoid(z))
      deriv.array() = ((-z.array()).exp() + 1.0).inverse();  // sigmoid, reused below
      value.array() = z.array() * deriv.array();
      deriv.array() = deriv.array() + value.array() * (1.0 - deriv.array());
      return;
  }
  throw std::invalid_argument("unknown activation");
}

}  // namespace

Activation activation_from_string(const std::string& name) {
  if (name == "linear") return Activation::Linear;
  if (name == "sigmoid") return Activation::Sigmoid;
  if (name == "tanh") return Activation::Tanh;
  if (name == "swish") return Activation::Swish;
  throw std::invalid_argument("unknown activation: " + name);
}

std::string to_string(Activation act) {
  switch (act) {
    case Activation::Linear: return "linear";
    case Activation::Sigmoid: return "sigmoid";
    case Activation::Tanh: return "tanh";
    case Activation::Swish: return "swish";
  }
  throw std::invalid_argument("unknown activation");
}

std::int64_t Mlp::n_params() const {
  std::int64_t n = 0;
  for (int l = 0; l < n_layers(); ++l) n += W[l].size() + b[l].size();
  return n;
}

void MlpGrads::resize_like(const Mlp& params) {
  W.resize(params.W.size());
  b.resize(params.b.size());
  for (std::size_t l = 0; l < W.size(); ++l) {
    W[l].resize(params.W[l].rows(), params.W[l].cols());
    b[l].resize(params.b[l].size());
  }
}

void MlpGrads::set_zero() {
  for (auto& g : W) g.setZero();
  for (auto& g : b) g.setZero();
}

void MlpGrads::add_scaled(const MlpGrads& other, double scale) {
  for (std::size_t l = 0; l < W.size(); ++l) {
    W[l] += scale * other.W[l];
    b[l] += scale * other.b[l];
  }
}

void AdamState::resize_like(const Mlp& params) {
  mW.resize(params.W.size());
  vW.resize(params.W.size());
  mb.resize(params.b.size());
  vb.resize(params.b.size());
  for (std::size_t l = 0; l < mW.size(); ++l) {
    mW[l].setZero(params.W[l].rows(), params.W[l].cols());
    vW[l].setZero(params.W[l].rows(), params.W[l].cols());
    mb[l].setZero(params.b[l].size());
    vb[l].setZero(params.b[l].size());
  }
  step = 0;
}

const Eigen::MatrixXd& forward(const Mlp& params, const Eigen::Ref<const Eigen::MatrixXd>& x,
                               Tape& tape) {
  int n_layers = params.n_layers();
  if (n_layers == 0) throw std::invalid_argument("forward: uninitialized network");
  if (x.rows() != params.input_size())
    throw std::invalid_argument("forward: input dimension mismatch");
  tape.a.resize(n_layers + 1);
  tape.dact.resize(n_layers);
  tape.delta.resize(n_layers);
  tape.a[0] = x;
  for (int l = 0; l < n_layers; ++l) {
    Eigen::MatrixXd& z = tape.delta[l];  // scratch; overwritten during backward
    z.noalias() = params.W[l] * tape.a[l];
    z.colwise() += params.b[l];
    Activation act =
        l + 1 == n_layers ? params.output_activation : params.hidden_activation;
    apply_activation(act, z, tape.a[l + 1], tape.dact[l]);
  }
  return tape.a[n_layers];
}

Eigen::VectorXd forward(const Mlp& params, const Eigen::VectorXd& x) {
  Tape tape;
  return forward(params, x, tape);
}

void backward(const Mlp& params, Tape& tape, const Eigen::Ref<const Eigen::MatrixXd>& dL_dy,
              MlpGrads& grads) {
  int n_layers = params.n_layers();
  if (static_cast<int>(tape.a.size()) != n_layers + 1)
    throw std::invalid_argument("backward: tape does not match network");
  if (dL_dy.rows() != params.output_size() || dL_dy.cols() != tape.a[0].cols())
    throw std::invalid_argument("backward: upstream gradient shape mismatch");
  for (int l = n_layers - 1; l >= 0; --l) {
    Eigen::MatrixXd& delta = tape.delta[l];
    if (l + 1 == n_layers)
      delta.array() = dL_dy.array() * tape.dact[l].array();
    else {
      // delta currently holds W[l+1]^T delta[l+1], written by the previous pass
      delta.array() *= tape.dact[l].array();
    }
    grads.W[l].noalias() += delta * tape.a[l].transpose();
    grads.b[l] += delta.rowwise().sum();
    if (l > 0) tape.delta[l - 1].noalias() = params.W[l].transpose() * delta;
  }
}

void adam_step(Mlp& params, const MlpGrads& grads, AdamState& state, double lr) {
  state.step += 1;
  double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  double scale = lr / bc1;
  for (int l = 0; l < params.n_layers(); ++l) {
    state.mW[l] = state.beta1 * state.mW[l] + (1.0 - state.beta1) * grads.W[l];
    state.vW[l].array() =
        state.beta2 * state.vW[l].array() + (1.0 - state.beta2) * grads.W[l].array().square();
    params.W[l].array() -=
        scale * state.mW[l].array() / ((state.vW[l].array() / bc2).sqrt() + state.eps);
    state.mb[l] = state.beta1 * state.mb[l] + (1.0 - state.beta1) * grads.b[l];
    state.vb[l].array() =
        state.beta2 * state.vb[l].array() + (1.0 - state.beta2) * grads.b[l].array().square();
    params.b[l].array() -=
        scale * state.mb[l].array() / ((state.vb[l].array() / bc2).sqrt() + state.eps);
  }
}

Mlp init_params(const std::vector<int>& layer_sizes, Activation hidden_activation,
                std::uint64_t seed) {
  if (layer_sizes.size() < 2) throw std::invalid_argument("init_params: need at least two layers");
  for (int n : layer_sizes)
    if (n < 1) throw std::invalid_argument("init_params: layer sizes must be positive");
  Mlp params;
  params.layer_sizes = layer_sizes;
  params.hidden_activation = hidden_activation;
  Rng rng(seed);
  int n_layers = static_cast<int>(layer_sizes.size()) - 1;
  params.W.resize(n_layers);
  params.b.resize(n_layers);
  for (int l = 0; l < n_layers; ++l) {
    int fan_in = layer_sizes[l];
    int fan_out = layer_sizes[l + 1];
    double limit = std::sqrt(6.0 / (fan_in + fan_out));
    params.W[l].resize(fan_out, fan_in);
    for (int r = 0; r < fan_out; ++r)
      for (int c = 0; c < fan_in; ++c) params.W[l](r, c) = rng.uniform(-limit, limit);
    params.b[l] = Eigen::VectorXd::Zero(fan_out);
  }
  return params;
}

Eigen::VectorXd forward(const SubnetBank& bank, const Eigen::VectorXd& x) {
  Eigen::VectorXd y(bank.n_outputs());
  Tape tape;
  for (int i = 0; i < bank.n_outputs(); ++i) {
    const Mlp& net = bank.subnets[i];
    if (net.output_size() != 1)
      throw std::invalid_argument("SubnetBank: subnets must have scalar outputs");
    y[i] = forward(net, x, tape)(0, 0);
  }
  return y;
}

}  // namespace fol
