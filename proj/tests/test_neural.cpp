#include <doctest.h>

#include <cmath>

#include "fol/common.hpp"
#include "fol/neural.hpp"
#include "helpers.hpp"

using namespace fol;

TEST_CASE("activation names round trip") {
  for (Activation act :
       {Activation::Linear, Activation::Sigmoid, Activation::Tanh, Activation::Swish})
    CHECK(activation_from_string(to_string(act)) == act);
  CHECK_THROWS_AS(activation_from_string("relu"), std::invalid_argument);
}

TEST_CASE("glorot initialization") {
  Mlp net = init_params({121, 10}, Activation::Swish, 7);
  REQUIRE(net.n_layers() == 1);
  CHECK(net.W[0].rows() == 10);
  CHECK(net.W[0].cols() == 121);
  const double bound = 0.2140129125019265;  // sqrt(6 / 131)
  CHECK(net.W[0].cwiseAbs().maxCoeff() <= bound);
  CHECK(net.W[0].cwiseAbs().maxCoeff() > 0.5 * bound);  // draws actually fill the range
  CHECK(net.b[0].cwiseAbs().maxCoeff() == 0.0);
  // empirical mean of many draws is near 0
  Mlp wide = init_params({100, 100}, Activation::Swish, 8);
  const double se = bound / std::sqrt(3.0) / 100.0;  // uniform sd / sqrt(n)
  CHECK(std::abs(wide.W[0].mean()) < 3.0 * se);

  Mlp same = init_params({121, 10}, Activation::Swish, 7);
  CHECK((net.W[0] - same.W[0]).cwiseAbs().maxCoeff() == 0.0);
  Mlp other = init_params({121, 10}, Activation::Swish, 9);
  CHECK((net.W[0] - other.W[0]).cwiseAbs().maxCoeff() > 0.0);

  CHECK_THROWS_AS(init_params({5}, Activation::Swish, 1), std::invalid_argument);
  CHECK(net.n_params() == 10 * 121 + 10);
}

TEST_CASE("zero parameters map everything to zero") {
  Mlp net = init_params({3, 4, 2}, Activation::Swish, 1);
  for (auto& W : net.W) W.setZero();
  Eigen::VectorXd y = forward(net, Eigen::VectorXd::Constant(3, 2.5));
  CHECK(y.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("single linear layer is an affine map") {
  Mlp net = init_params({2, 2}, Activation::Swish, 3);
  net.W[0] << 1.0, 2.0, -0.5, 0.25;
  net.b[0] << 0.1, -0.2;
  Eigen::VectorXd x(2);
  x << 3.0, -1.0;
  Eigen::VectorXd y = forward(net, x);
  CHECK(y[0] == doctest::Approx(1.0 * 3.0 + 2.0 * -1.0 + 0.1).epsilon(1e-15));
  CHECK(y[1] == doctest::Approx(-0.5 * 3.0 + 0.25 * -1.0 - 0.2).epsilon(1e-15));
}

TEST_CASE("forward matches the naive evaluator") {
  for (Activation act : {Activation::Swish, Activation::Tanh, Activation::Sigmoid}) {
    Mlp net = init_params({3, 5, 4, 2}, act, 11);
    Rng rng(4);
    Eigen::MatrixXd batch(3, 7);
    for (int i = 0; i < batch.size(); ++i) batch.data()[i] = rng.uniform(-2.0, 2.0);

    Tape tape;
    Eigen::MatrixXd y = forward(net, batch, tape);
    REQUIRE(y.rows() == 2);
    REQUIRE(y.cols() == 7);
    for (int s = 0; s < 7; ++s) {
      Eigen::VectorXd naive = test_helpers::naive_forward(net, batch.col(s));
      CHECK((y.col(s) - naive).cwiseAbs().maxCoeff() < 1e-14);
    }
    // single-vector overload agrees
    CHECK((forward(net, Eigen::VectorXd(batch.col(0))) - y.col(0)).cwiseAbs().maxCoeff() < 1e-14);
  }

  Mlp net = init_params({3, 2}, Activation::Swish, 1);
  Tape tape;
  CHECK_THROWS_AS(forward(net, Eigen::MatrixXd::Zero(4, 1), tape), std::invalid_argument);
}

TEST_CASE("backward matches finite differences") {
  for (Activation act :
       {Activation::Swish, Activation::Tanh, Activation::Sigmoid, Activation::Linear}) {
    Mlp net = init_params({4, 6, 3}, act, 13);
    Rng rng(6);
    Eigen::VectorXd x(4), target(3);
    for (int i = 0; i < 4; ++i) x[i] = rng.uniform(-1.5, 1.5);
    for (int i = 0; i < 3; ++i) target[i] = rng.uniform(-1.0, 1.0);

    Tape tape;
    MlpGrads grads;
    grads.resize_like(net);
    grads.set_zero();
    Eigen::MatrixXd y = forward(net, x, tape);
    Eigen::MatrixXd dL_dy = y.col(0) - target;  // L = 0.5 ||y - t||^2
    backward(net, tape, dL_dy, grads);

    auto loss = [&] {
      Tape t2;
      Eigen::MatrixXd out = forward(net, x, t2);
      return 0.5 * (out.col(0) - target).squaredNorm();
    };
    CHECK(test_helpers::max_grad_mismatch(net, grads, loss, 1e-6, 1e-6) < 1e-6);
  }
}

TEST_CASE("backward with zero upstream gradient leaves grads zero") {
  Mlp net = init_params({3, 4, 2}, Activation::Swish, 5);
  Tape tape;
  MlpGrads grads;
  grads.resize_like(net);
  grads.set_zero();
  forward(net, Eigen::VectorXd::Ones(3), tape);
  backward(net, tape, Eigen::MatrixXd::Zero(2, 1), grads);
  for (const auto& g : grads.W) CHECK(g.cwiseAbs().maxCoeff() == 0.0);
  for (const auto& g : grads.b) CHECK(g.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("batched backward equals the sum of per-sample gradients") {
  Mlp net = init_params({3, 5, 2}, Activation::Swish, 21);
  Rng rng(9);
  Eigen::MatrixXd batch(3, 4), upstream(2, 4);
  for (int i = 0; i < batch.size(); ++i) batch.data()[i] = rng.uniform(-1.0, 1.0);
  for (int i = 0; i < upstream.size(); ++i) upstream.data()[i] = rng.uniform(-1.0, 1.0);

  Tape tape;
  MlpGrads batched;
  batched.resize_like(net);
  batched.set_zero();
  forward(net, batch, tape);
  backward(net, tape, upstream, batched);

  MlpGrads summed;
  summed.resize_like(net);
  summed.set_zero();
  for (int s = 0; s < 4; ++s) {
    forward(net, batch.col(s), tape);
    backward(net, tape, upstream.col(s), summed);
  }
  for (std::size_t l = 0; l < batched.W.size(); ++l) {
    CHECK((batched.W[l] - summed.W[l]).cwiseAbs().maxCoeff() < 1e-13);
    CHECK((batched.b[l] - summed.b[l]).cwiseAbs().maxCoeff() < 1e-13);
  }
}

TEST_CASE("adam converges on the scalar toy problem") {
  // f(w) = (w - 3)^2 from w = 0, lr = 0.1, 100 steps
  Mlp net;
  net.layer_sizes = {1, 1};
  net.W.push_back(Eigen::MatrixXd::Zero(1, 1));
  net.b.push_back(Eigen::VectorXd::Zero(1));
  MlpGrads grads;
  grads.resize_like(net);
  AdamState state;
  state.resize_like(net);
  for (int t = 0; t < 100; ++t) {
    grads.set_zero();
    grads.W[0](0, 0) = 2.0 * (net.W[0](0, 0) - 3.0);
    adam_step(net, grads, state, 0.1);
  }
  CHECK(net.W[0](0, 0) == doctest::Approx(2.9806554375278123).epsilon(1e-14));
  CHECK(state.step == 100);
  CHECK(net.b[0][0] == 0.0);  // zero gradient leaves the bias untouched

  // first step moves by ~lr in the -sign(g) direction
  Mlp fresh;
  fresh.layer_sizes = {1, 1};
  fresh.W.push_back(Eigen::MatrixXd::Zero(1, 1));
  fresh.b.push_back(Eigen::VectorXd::Zero(1));
  MlpGrads g1;
  g1.resize_like(fresh);
  g1.set_zero();
  g1.W[0](0, 0) = -4.2;
  AdamState s1;
  s1.resize_like(fresh);
  adam_step(fresh, g1, s1, 0.01);
  CHECK(fresh.W[0](0, 0) == doctest::Approx(0.01).epsilon(1e-6));
}

TEST_CASE("adam with zero gradients keeps parameters fixed") {
  Mlp net = init_params({2, 3, 1}, Activation::Tanh, 2);
  Mlp before = net;
  MlpGrads grads;
  grads.resize_like(net);
  grads.set_zero();
  AdamState state;
  state.resize_like(net);
  adam_step(net, grads, state, 0.05);
  for (std::size_t l = 0; l < net.W.size(); ++l) {
    CHECK((net.W[l] - before.W[l]).cwiseAbs().maxCoeff() == 0.0);
    CHECK((net.b[l] - before.b[l]).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("subnet bank concatenates scalar outputs") {
  SubnetBank bank;
  for (int k = 0; k < 3; ++k) bank.subnets.push_back(init_params({4, 5, 1}, Activation::Swish, k));
  Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(4, -1.0, 1.0);
  Eigen::VectorXd y = forward(bank, x);
  REQUIRE(y.size() == 3);
  for (int k = 0; k < 3; ++k) CHECK(y[k] == forward(bank.subnets[k], x)[0]);
}
