#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace fol {

enum class Activation { Linear, Sigmoid, Tanh, Swish };

Activation activation_from_string(const std::string& name);
std::string to_string(Activation act);

// Dense feed-forward network. W[l] maps layer l to l+1 (rows = fan_out);
// hidden layers share one activation, the output layer is linear unless
// configured otherwise.
struct Mlp {
  std::vector<int> layer_sizes;
  Activation hidden_activation = Activation::Swish;
  Activation output_activation = Activation::Linear;
  std::vector<Eigen::MatrixXd> W;
  std::vector<Eigen::VectorXd> b;

  int n_layers() const { return static_cast<int>(W.size()); }
  int input_size() const { return layer_sizes.front(); }
  int output_size() const { return layer_sizes.back(); }
  std::int64_t n_params() const;
};

// Per-layer records from a forward pass; columns are batch entries. Buffers
// are reused across calls, so the training loop allocates only on the first
// step.
struct Tape {
  std::vector<Eigen::MatrixXd> a;     // a[0] = input, a[l+1] = layer-l output
  std::vector<Eigen::MatrixXd> dact;  // activation derivative at z, per layer
  std::vector<Eigen::MatrixXd> delta;
};

struct MlpGrads {
  std::vector<Eigen::MatrixXd> W;
  std::vector<Eigen::VectorXd> b;

  void resize_like(const Mlp& params);
  void set_zero();
  void add_scaled(const MlpGrads& other, double scale);
};

struct AdamState {
  std::vector<Eigen::MatrixXd> mW, vW;
  std::vector<Eigen::VectorXd> mb, vb;
  std::int64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void resize_like(const Mlp& params);
};

// Batched forward; x columns are samples. Returns the output matrix stored in
// the tape. Throws on input-dimension mismatch.
const Eigen::MatrixXd& forward(const Mlp& params, const Eigen::Ref<const Eigen::MatrixXd>& x,
                               Tape& tape);
Eigen::VectorXd forward(const Mlp& params, const Eigen::VectorXd& x);

// Reverse mode; accumulates (+=) into grads so batch members can share one
// buffer. Throws when the tape does not match the upstream gradient's shape.
void backward(const Mlp& params, Tape& tape, const Eigen::Ref<const Eigen::MatrixXd>& dL_dy,
              MlpGrads& grads);

void adam_step(Mlp& params, const MlpGrads& grads, AdamState& state, double lr);

// Glorot-uniform weights in ±sqrt(6/(fan_in+fan_out)), zero biases.
Mlp init_params(const std::vector<int>& layer_sizes, Activation hidden_activation,
                std::uint64_t seed);

// One independent scalar-output subnet per output variable.
struct SubnetBank {
  std::vector<Mlp> subnets;

  int input_size() const { return subnets.front().input_size(); }
  int n_outputs() const { return static_cast<int>(subnets.size()); }
};

Eigen::VectorXd forward(const SubnetBank& bank, const Eigen::VectorXd& x);

}  // namespace fol
