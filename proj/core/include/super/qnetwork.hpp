#pragma once

// Fully connected Q-network with rectifier hidden layers and an optional
// dueling head, Q(s,a) = V(s) + A(s,a) - mean_a A(s,a).
//
// All parameters live in one flat vector. Each layer stores its weight matrix
// row-major (out x in) followed by its bias. Layer order: hidden layers, then
// either the Q output layer, or the value head followed by the advantage head.
//
// Batches are column-major: one observation per column.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "super/optimizer.hpp"
#include "super/types.hpp"

namespace super {

struct NetworkShape {
  std::size_t input_dim = 1;
  std::size_t action_count = 1;
  std::vector<std::size_t> hidden{128, 128};
  bool dueling = false;

  friend bool operator==(const NetworkShape&, const NetworkShape&) = default;
};

template <typename Scalar>
class BasicQNetwork {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialization from `seed`.
  BasicQNetwork(NetworkShape shape, std::uint64_t seed);

  const NetworkShape& shape() const { return shape_; }
  std::size_t parameter_count() const { return params_.size(); }
  std::span<Scalar> parameters() { return params_; }
  std::span<const Scalar> parameters() const { return params_; }

  /// obs: input_dim x batch. Returns action_count x batch.
  Matrix forward(const Matrix& obs) const;

  struct Heads {
    Matrix q;      // action_count x batch
    Matrix value;  // 1 x batch, empty for non-dueling nets
  };
  Heads forward_heads(const Matrix& obs) const;

  /// Greedy action for one observation; ties go to the lowest index.
  int greedy_action(std::span<const float> obs) const;
  std::vector<Scalar> q_values(std::span<const float> obs) const;

  struct LossResult {
    double loss = 0.0;
    std::vector<double> abs_td;  // |Q(s,a) - target| per sample
  };

  /// Importance-weighted Huber loss sum_i w_i h(Q(s_i,a_i) - y_i) / sum_i w_i
  /// and its gradient with respect to every parameter, written to `grad`.
  LossResult loss_and_gradient(const Matrix& obs, std::span<const int> actions,
                               std::span<const Scalar> targets, std::span<const Scalar> weights,
                               double huber_delta, std::span<Scalar> grad) const;

  /// Loss only (for finite-difference checks).
  double loss(const Matrix& obs, std::span<const int> actions, std::span<const Scalar> targets,
              std::span<const Scalar> weights, double huber_delta) const;

  /// Hard copy of `other`'s parameters; throws ContractViolation on shape mismatch.
  void copy_parameters_from(const BasicQNetwork& other);

  /// Versioned binary checkpoint (see checkpoint format in README).
  void save(std::ostream& os) const;
  static BasicQNetwork load(std::istream& is);

 private:
  struct Layer {
    std::size_t in = 0;
    std::size_t out = 0;
    std::size_t offset = 0;  // weights at offset, bias at offset + in * out
  };
  struct Cache {
    std::vector<Matrix> pre;   // pre-activations of hidden layers
    std::vector<Matrix> post;  // post-activations; post[0] is the input
  };

  void build_layout();
  Matrix affine(const Layer& layer, const Matrix& x) const;
  Heads run(const Matrix& obs, Cache* cache) const;
  void check_input(const Matrix& obs) const;

  NetworkShape shape_;
  std::vector<Layer> hidden_;
  Layer output_;     // Q layer (plain) or advantage head (dueling)
  Layer value_head_;  // dueling only
  std::vector<Scalar> params_;
};

using QNetwork = BasicQNetwork<float>;
using QNetwork64 = BasicQNetwork<double>;

/// Column-stacks observations (or next observations) of a batch.
template <typename Scalar>
typename BasicQNetwork<Scalar>::Matrix stack_observations(std::span<const Experience> batch,
                                                          bool next, std::size_t dim);

struct BootstrapConfig {
  double gamma = 0.99;
  bool double_q = true;
  double huber_delta = 1.0;
};

/// reward if done, otherwise reward + gamma * B where B is max_a Q_target(s',a)
/// or, with double_q, Q_target(s', argmax_a Q_online(s',a)).
template <typename Scalar>
std::vector<Scalar> bootstrap_targets(const BasicQNetwork<Scalar>& online,
                                      const BasicQNetwork<Scalar>& target,
                                      std::span<const Experience> batch, const BootstrapConfig& cfg);

template <typename Scalar>
struct TrainResult {
  double loss = 0.0;
  std::vector<double> td_errors;  // pre-update absolute td-errors
};

/// One optimizer step on the weighted Huber loss. Throws TrainingDivergence
/// if the gradient is not finite; the parameters are left untouched then.
template <typename Scalar>
TrainResult<Scalar> train_on_batch(BasicQNetwork<Scalar>& online, const BasicQNetwork<Scalar>& target,
                                   std::span<const Experience> batch, std::span<const double> weights,
                                   const BootstrapConfig& cfg, Optimizer<Scalar>& optimizer,
                                   double grad_clip_norm = 0.0);

/// Hard target update.
template <typename Scalar>
void sync_target(const BasicQNetwork<Scalar>& online, BasicQNetwork<Scalar>& target) {
  target.copy_parameters_from(online);
}

extern template class BasicQNetwork<float>;
extern template class BasicQNetwork<double>;

}  // namespace super
