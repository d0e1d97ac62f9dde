#include "super/qnetwork.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>

#include "super/errors.hpp"

namespace super {
namespace {

template <typename Scalar>
using RowMajor = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

constexpr std::array<char, 4> kNetMagic{'S', 'P', 'Q', 'N'};
constexpr std::uint32_t kNetVersion = 1;

void write_u32(std::ostream& os, std::uint32_t v) {
  std::array<unsigned char, 4> b{};
  for (int i = 0; i < 4; ++i) b[static_cast<std::size_t>(i)] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b.data()), 4);
}

void write_u64(std::ostream& os, std::uint64_t v) {
  write_u32(os, static_cast<std::uint32_t>(v));
  write_u32(os, static_cast<std::uint32_t>(v >> 32));
}

std::uint32_t read_u32(std::istream& is) {
  std::array<unsigned char, 4> b{};
  if (!is.read(reinterpret_cast<char*>(b.data()), 4)) throw FormatError("truncated network checkpoint");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[static_cast<std::size_t>(i)]) << (8 * i);
  return v;
}

std::uint64_t read_u64(std::istream& is) {
  const std::uint64_t lo = read_u32(is);
  const std::uint64_t hi = read_u32(is);
  return lo | (hi << 32);
}

}  // namespace

template <typename Scalar>
BasicQNetwork<Scalar>::BasicQNetwork(NetworkShape shape, std::uint64_t seed) : shape_(std::move(shape)) {
  if (shape_.input_dim == 0 || shape_.action_count == 0) {
    throw ContractViolation("network input and output sizes must be positive");
  }
  if (shape_.hidden.empty() ||
      std::any_of(shape_.hidden.begin(), shape_.hidden.end(), [](std::size_t n) { return n == 0; })) {
    throw ContractViolation("network needs at least one non-empty hidden layer");
  }
  build_layout();

  std::mt19937_64 rng(seed);
  auto init = [&](const Layer& layer) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer.in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    const std::size_t n = layer.in * layer.out + layer.out;
    for (std::size_t i = 0; i < n; ++i) params_[layer.offset + i] = static_cast<Scalar>(dist(rng));
  };
  for (const auto& layer : hidden_) init(layer);
  if (shape_.dueling) init(value_head_);
  init(output_);
}

template <typename Scalar>
void BasicQNetwork<Scalar>::build_layout() {
  std::size_t offset = 0;
  std::size_t in = shape_.input_dim;
  auto make = [&](std::size_t out) {
    Layer layer{in, out, offset};
    offset += in * out + out;
    in = out;
    return layer;
  };
  hidden_.clear();
  for (std::size_t width : shape_.hidden) hidden_.push_back(make(width));
  const std::size_t last = in;
  if (shape_.dueling) {
    value_head_ = make(1);
    in = last;
  }
  output_ = make(shape_.action_count);
  params_.assign(offset, Scalar{0});
}

template <typename Scalar>
void BasicQNetwork<Scalar>::check_input(const Matrix& obs) const {
  if (obs.cols() < 1) throw ContractViolation("forward: batch must be non-empty");
  if (static_cast<std::size_t>(obs.rows()) != shape_.input_dim) {
    throw ContractViolation("forward: input has " + std::to_string(obs.rows()) + " rows, network expects " +
                            std::to_string(shape_.input_dim));
  }
  if (!obs.allFinite()) throw ContractViolation("forward: non-finite input");
}

template <typename Scalar>
typename BasicQNetwork<Scalar>::Matrix BasicQNetwork<Scalar>::affine(const Layer& layer,
                                                                      const Matrix& x) const {
  Eigen::Map<const RowMajor<Scalar>> w(params_.data() + layer.offset, static_cast<Eigen::Index>(layer.out),
                                       static_cast<Eigen::Index>(layer.in));
  Eigen::Map<const Vector> b(params_.data() + layer.offset + layer.in * layer.out,
                             static_cast<Eigen::Index>(layer.out));
  Matrix z = w * x;
  z.colwise() += b;
  return z;
}

template <typename Scalar>
typename BasicQNetwork<Scalar>::Heads BasicQNetwork<Scalar>::run(const Matrix& obs, Cache* cache) const {
  check_input(obs);
  Matrix h = obs;
  if (cache != nullptr) {
    cache->pre.clear();
    cache->post.clear();
    cache->post.push_back(obs);
  }
  for (const auto& layer : hidden_) {
    Matrix z = affine(layer, h);
    h = z.cwiseMax(Scalar{0});
    if (cache != nullptr) {
      cache->pre.push_back(std::move(z));
      cache->post.push_back(h);
    }
  }
  Heads heads;
  if (!shape_.dueling) {
    heads.q = affine(output_, h);
    return heads;
  }
  heads.value = affine(value_head_, h);
  Matrix adv = affine(output_, h);
  const Eigen::Matrix<Scalar, 1, Eigen::Dynamic> adv_mean = adv.colwise().mean();
  adv.rowwise() -= adv_mean;
  adv.rowwise() += heads.value.row(0);
  heads.q = std::move(adv);
  return heads;
}

template <typename Scalar>
typename BasicQNetwork<Scalar>::Matrix BasicQNetwork<Scalar>::forward(const Matrix& obs) const {
  return run(obs, nullptr).q;
}

template <typename Scalar>
typename BasicQNetwork<Scalar>::Heads BasicQNetwork<Scalar>::forward_heads(const Matrix& obs) const {
  return run(obs, nullptr);
}

template <typename Scalar>
std::vector<Scalar> BasicQNetwork<Scalar>::q_values(std::span<const float> obs) const {
  Matrix x(static_cast<Eigen::Index>(obs.size()), 1);
  for (std::size_t i = 0; i < obs.size(); ++i) x(static_cast<Eigen::Index>(i), 0) = static_cast<Scalar>(obs[i]);
  const Matrix q = forward(x);
  return std::vector<Scalar>(q.data(), q.data() + q.size());
}

template <typename Scalar>
int BasicQNetwork<Scalar>::greedy_action(std::span<const float> obs) const {
  const auto q = q_values(obs);
  int best = 0;
  for (std::size_t a = 1; a < q.size(); ++a) {
    if (q[a] > q[static_cast<std::size_t>(best)]) best = static_cast<int>(a);
  }
  return best;
}

template <typename Scalar>
typename BasicQNetwork<Scalar>::LossResult BasicQNetwork<Scalar>::loss_and_gradient(
    const Matrix& obs, std::span<const int> actions, std::span<const Scalar> targets,
    std::span<const Scalar> weights, double huber_delta, std::span<Scalar> grad) const {
  const auto batch = static_cast<std::size_t>(obs.cols());
  if (actions.size() != batch || targets.size() != batch || weights.size() != batch) {
    throw ContractViolation("loss: actions, targets and weights must match the batch size");
  }
  if (grad.size() != params_.size()) throw ContractViolation("loss: gradient buffer has wrong size");

  Cache cache;
  const Heads heads = run(obs, &cache);

  double weight_sum = 0.0;
  for (Scalar w : weights) {
    if (!(w >= Scalar{0})) throw ContractViolation("loss: importance weights must be >= 0");
    weight_sum += static_cast<double>(w);
  }

  LossResult result;
  result.abs_td.resize(batch);
  Matrix dq = Matrix::Zero(heads.q.rows(), heads.q.cols());
  double loss = 0.0;
  for (std::size_t i = 0; i < batch; ++i) {
    const int a = actions[i];
    if (a < 0 || static_cast<std::size_t>(a) >= shape_.action_count) {
      throw ContractViolation("loss: action index out of range");
    }
    const double diff = static_cast<double>(heads.q(a, static_cast<Eigen::Index>(i))) - static_cast<double>(targets[i]);
    const double ad = std::abs(diff);
    result.abs_td[i] = ad;
    if (weight_sum <= 0.0) continue;
    const double w = static_cast<double>(weights[i]) / weight_sum;
    loss += w * (ad <= huber_delta ? 0.5 * diff * diff : huber_delta * (ad - 0.5 * huber_delta));
    dq(a, static_cast<Eigen::Index>(i)) = static_cast<Scalar>(w * std::clamp(diff, -huber_delta, huber_delta));
  }
  result.loss = loss;

  std::fill(grad.begin(), grad.end(), Scalar{0});
  auto accumulate = [&](const Layer& layer, const Matrix& delta, const Matrix& input) {
    Eigen::Map<RowMajor<Scalar>> gw(grad.data() + layer.offset, static_cast<Eigen::Index>(layer.out),
                                    static_cast<Eigen::Index>(layer.in));
    Eigen::Map<Vector> gb(grad.data() + layer.offset + layer.in * layer.out,
                          static_cast<Eigen::Index>(layer.out));
    gw.noalias() += delta * input.transpose();
    gb += delta.rowwise().sum();
  };
  auto weights_of = [&](const Layer& layer) {
    return Eigen::Map<const RowMajor<Scalar>>(params_.data() + layer.offset,
                                              static_cast<Eigen::Index>(layer.out),
                                              static_cast<Eigen::Index>(layer.in));
  };

  const Matrix& last = cache.post.back();
  Matrix dh;
  if (!shape_.dueling) {
    accumulate(output_, dq, last);
    dh = weights_of(output_).transpose() * dq;
  } else {
    const Matrix dv = dq.colwise().sum();
    Matrix dadv = dq;
    const Eigen::Matrix<Scalar, 1, Eigen::Dynamic> mean = dq.colwise().mean();
    dadv.rowwise() -= mean;
    accumulate(value_head_, dv, last);
    accumulate(output_, dadv, last);
    dh = weights_of(value_head_).transpose() * dv + weights_of(output_).transpose() * dadv;
  }
  for (std::size_t l = hidden_.size(); l-- > 0;) {
    const Matrix dz = (cache.pre[l].array() > Scalar{0}).select(dh, Scalar{0});
    accumulate(hidden_[l], dz, cache.post[l]);
    if (l > 0) dh = weights_of(hidden_[l]).transpose() * dz;
  }
  return result;
}

template <typename Scalar>
double BasicQNetwork<Scalar>::loss(const Matrix& obs, std::span<const int> actions,
                                   std::span<const Scalar> targets, std::span<const Scalar> weights,
                                   double huber_delta) const {
  const Matrix q = forward(obs);
  double weight_sum = 0.0;
  for (Scalar w : weights) weight_sum += static_cast<double>(w);
  if (weight_sum <= 0.0) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < actions.size(); ++i) {
    const double diff = static_cast<double>(q(actions[i], static_cast<Eigen::Index>(i))) - static_cast<double>(targets[i]);
    const double ad = std::abs(diff);
    total += static_cast<double>(weights[i]) / weight_sum *
             (ad <= huber_delta ? 0.5 * diff * diff : huber_delta * (ad - 0.5 * huber_delta));
  }
  return total;
}

template <typename Scalar>
void BasicQNetwork<Scalar>::copy_parameters_from(const BasicQNetwork& other) {
  if (!(other.shape_ == shape_)) throw ContractViolation("network architecture mismatch");
  params_ = other.params_;
}

template <typename Scalar>
void BasicQNetwork<Scalar>::save(std::ostream& os) const {
  os.write(kNetMagic.data(), kNetMagic.size());
  write_u32(os, kNetVersion);
  write_u32(os, sizeof(Scalar));
  write_u32(os, static_cast<std::uint32_t>(shape_.input_dim));
  write_u32(os, static_cast<std::uint32_t>(shape_.action_count));
  write_u32(os, shape_.dueling ? 1U : 0U);
  write_u32(os, static_cast<std::uint32_t>(shape_.hidden.size()));
  for (std::size_t h : shape_.hidden) write_u32(os, static_cast<std::uint32_t>(h));
  write_u64(os, params_.size());
  for (Scalar p : params_) {
    if constexpr (sizeof(Scalar) == 4) {
      write_u32(os, std::bit_cast<std::uint32_t>(p));
    } else {
      write_u64(os, std::bit_cast<std::uint64_t>(p));
    }
  }
  if (!os) throw FormatError("failed to write network checkpoint");
}

template <typename Scalar>
BasicQNetwork<Scalar> BasicQNetwork<Scalar>::load(std::istream& is) {
  std::array<char, 4> magic{};
  if (!is.read(magic.data(), magic.size()) || magic != kNetMagic) {
    throw FormatError("not a network checkpoint");
  }
  const auto version = read_u32(is);
  if (version != kNetVersion) throw FormatError("unsupported network checkpoint version " + std::to_string(version));
  const auto scalar_bytes = read_u32(is);
  if (scalar_bytes != 4 && scalar_bytes != 8) throw FormatError("bad scalar width in network checkpoint");
  NetworkShape shape;
  shape.input_dim = read_u32(is);
  shape.action_count = read_u32(is);
  shape.dueling = read_u32(is) != 0;
  const auto layers = read_u32(is);
  if (layers == 0 || layers > 64) throw FormatError("bad hidden layer count in network checkpoint");
  shape.hidden.resize(layers);
  for (auto& h : shape.hidden) h = read_u32(is);
  BasicQNetwork net(shape, 0);
  const auto count = read_u64(is);
  if (count != net.params_.size()) throw FormatError("network checkpoint parameter count does not match its shape");
  for (auto& p : net.params_) {
    if (scalar_bytes == 4) {
      p = static_cast<Scalar>(std::bit_cast<float>(read_u32(is)));
    } else {
      p = static_cast<Scalar>(std::bit_cast<double>(read_u64(is)));
    }
  }
  return net;
}

template <typename Scalar>
typename BasicQNetwork<Scalar>::Matrix stack_observations(std::span<const Experience> batch, bool next,
                                                          std::size_t dim) {
  typename BasicQNetwork<Scalar>::Matrix x(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(batch.size()));
  for (std::size_t j = 0; j < batch.size(); ++j) {
    const auto& o = next ? batch[j].next_obs : batch[j].obs;
    if (o.size() != dim) throw ContractViolation("experience observation dimension does not match the network");
    for (std::size_t i = 0; i < dim; ++i) {
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = static_cast<Scalar>(o[i]);
    }
  }
  return x;
}

template <typename Scalar>
std::vector<Scalar> bootstrap_targets(const BasicQNetwork<Scalar>& online, const BasicQNetwork<Scalar>& target,
                                      std::span<const Experience> batch, const BootstrapConfig& cfg) {
  const std::size_t dim = online.shape().input_dim;
  const auto next = stack_observations<Scalar>(batch, true, dim);
  const auto q_target = target.forward(next);
  typename BasicQNetwork<Scalar>::Matrix q_online_next;
  if (cfg.double_q) q_online_next = online.forward(next);

  std::vector<Scalar> y(batch.size());
  for (std::size_t j = 0; j < batch.size(); ++j) {
    const auto col = static_cast<Eigen::Index>(j);
    double bootstrap = 0.0;
    if (!batch[j].done) {
      if (cfg.double_q) {
        Eigen::Index best = 0;
        for (Eigen::Index a = 1; a < q_online_next.rows(); ++a) {
          if (q_online_next(a, col) > q_online_next(best, col)) best = a;
        }
        bootstrap = static_cast<double>(q_target(best, col));
      } else {
        bootstrap = static_cast<double>(q_target.col(col).maxCoeff());
      }
    }
    y[j] = static_cast<Scalar>(static_cast<double>(batch[j].reward) + cfg.gamma * bootstrap);
  }
  return y;
}

template <typename Scalar>
TrainResult<Scalar> train_on_batch(BasicQNetwork<Scalar>& online, const BasicQNetwork<Scalar>& target,
                                   std::span<const Experience> batch, std::span<const double> weights,
                                   const BootstrapConfig& cfg, Optimizer<Scalar>& optimizer,
                                   double grad_clip_norm) {
  if (batch.empty()) throw ContractViolation("train_on_batch: empty batch");
  if (weights.size() != batch.size()) throw ContractViolation("train_on_batch: one weight per sample required");
  const std::vector<Scalar> y = bootstrap_targets(online, target, batch, cfg);
  const auto obs = stack_observations<Scalar>(batch, false, online.shape().input_dim);
  std::vector<int> actions(batch.size());
  std::vector<Scalar> w(batch.size());
  for (std::size_t j = 0; j < batch.size(); ++j) {
    actions[j] = batch[j].action;
    w[j] = static_cast<Scalar>(weights[j]);
  }
  std::vector<Scalar> grad(online.parameter_count());
  auto lr = online.loss_and_gradient(obs, actions, y, w, cfg.huber_delta, grad);

  double norm_sq = 0.0;
  for (Scalar g : grad) norm_sq += static_cast<double>(g) * static_cast<double>(g);
  if (!std::isfinite(norm_sq)) {
    throw TrainingDivergence("non-finite gradient", optimizer.step_count() + 1);
  }
  if (grad_clip_norm > 0.0 && norm_sq > grad_clip_norm * grad_clip_norm) {
    const auto scale = static_cast<Scalar>(grad_clip_norm / std::sqrt(norm_sq));
    for (auto& g : grad) g *= scale;
  }
  optimizer.apply(online.parameters(), grad);
  return {lr.loss, std::move(lr.abs_td)};
}

template class BasicQNetwork<float>;
template class BasicQNetwork<double>;

#define SUPER_INSTANTIATE(S)                                                                           \
  template BasicQNetwork<S>::Matrix stack_observations<S>(std::span<const Experience>, bool, std::size_t); \
  template std::vector<S> bootstrap_targets<S>(const BasicQNetwork<S>&, const BasicQNetwork<S>&,        \
                                               std::span<const Experience>, const BootstrapConfig&);   \
  template TrainResult<S> train_on_batch<S>(BasicQNetwork<S>&, const BasicQNetwork<S>&,                 \
                                            std::span<const Experience>, std::span<const double>,       \
                                            const BootstrapConfig&, Optimizer<S>&, double);
SUPER_INSTANTIATE(float)
SUPER_INSTANTIATE(double)
#undef SUPER_INSTANTIATE

}  // namespace super
