// Trainer checkpoints. Layout of a checkpoint directory:
//   trainer.json            configuration, counters, RNG states, env snapshot,
//                           current observations, selection windows, relay counters
//   policy<p>.online.qnet   online network
//   policy<p>.target.qnet   target network
//   policy<p>.optim         optimizer moments
//   agent<i>.replay         leaf priorities, then buffer slots (experience records)
// Everything needed to continue bit-for-bit is stored; resuming and training
// on gives the same trajectory as never stopping.

#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "super/errors.hpp"
#include "super/experience_io.hpp"
#include "super/trainer.hpp"

namespace super {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr int kCheckpointVersion = 1;

template <typename T>
void write_pod(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw FormatError("checkpoint: truncated file");
  return v;
}

template <typename T>
void write_vector(std::ostream& os, const std::vector<T>& v) {
  write_pod<std::uint64_t>(os, v.size());
  os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(T)));
}

template <typename T>
std::vector<T> read_vector(std::istream& is) {
  const auto n = read_pod<std::uint64_t>(is);
  if (n > (std::uint64_t{1} << 34)) throw FormatError("checkpoint: implausible vector length");
  std::vector<T> v(n);
  is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(T)));
  if (!is) throw FormatError("checkpoint: truncated file");
  return v;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  return os;
}

std::ifstream open_in(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  if (!is) throw FormatError("checkpoint: missing " + p.string());
  return is;
}

std::string rng_text(const std::mt19937_64& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

std::mt19937_64 rng_from(const std::string& text) {
  std::mt19937_64 rng;
  std::istringstream is(text);
  is >> rng;
  if (!is) throw FormatError("checkpoint: bad rng state");
  return rng;
}

json to_json(const TrainerConfig& c) {
  const auto& s = c.selection;
  return json{
      {"learning_rate", c.learning_rate},
      {"train_batch_size", c.train_batch_size},
      {"rollout_fragment_length", c.rollout_fragment_length},
      {"target_update_freq", c.target_update_freq},
      {"buffer_capacity", c.buffer_capacity},
      {"gamma", c.gamma},
      {"epsilon_initial", c.epsilon_initial},
      {"epsilon_final", c.epsilon_final},
      {"epsilon_decay_steps", c.epsilon_decay_steps},
      {"priority_alpha", c.priority_alpha},
      {"priority_epsilon", c.priority_epsilon},
      {"importance_sampling", c.importance_sampling},
      {"is_beta_initial", c.is_beta_initial},
      {"is_beta_final", c.is_beta_final},
      {"is_beta_anneal_steps", c.is_beta_anneal_steps},
      {"dueling", c.dueling},
      {"double_q", c.double_q},
      {"hidden_layers", c.hidden_layers},
      {"optimizer", c.optimizer == OptimizerKind::Adam ? "adam" : "sgd"},
      {"adam_epsilon", c.adam_epsilon},
      {"grad_clip_norm", c.grad_clip_norm},
      {"huber_delta", c.huber_delta},
      {"learning_starts", c.learning_starts},
      {"gradient_steps_per_iteration", c.gradient_steps_per_iteration},
      {"relay_priority", c.relay_priority == RelayPriority::SenderTd ? "sender_td" : "max"},
      {"seed", c.seed},
      {"selection",
       {{"strategy", std::string(to_string(s.strategy))},
        {"bandwidth_beta", s.bandwidth_beta},
        {"window_size_k", s.window_size_k},
        {"min_window_fill", s.min_window_fill},
        {"gaussian_use_variance", s.gaussian_use_variance},
        {"stochastic_alpha", s.stochastic_alpha},
        {"priority_epsilon", s.priority_epsilon}}},
  };
}

TrainerConfig config_from_json(const json& j) {
  TrainerConfig c;
  j.at("learning_rate").get_to(c.learning_rate);
  j.at("train_batch_size").get_to(c.train_batch_size);
  j.at("rollout_fragment_length").get_to(c.rollout_fragment_length);
  j.at("target_update_freq").get_to(c.target_update_freq);
  j.at("buffer_capacity").get_to(c.buffer_capacity);
  j.at("gamma").get_to(c.gamma);
  j.at("epsilon_initial").get_to(c.epsilon_initial);
  j.at("epsilon_final").get_to(c.epsilon_final);
  j.at("epsilon_decay_steps").get_to(c.epsilon_decay_steps);
  j.at("priority_alpha").get_to(c.priority_alpha);
  j.at("priority_epsilon").get_to(c.priority_epsilon);
  j.at("importance_sampling").get_to(c.importance_sampling);
  j.at("is_beta_initial").get_to(c.is_beta_initial);
  j.at("is_beta_final").get_to(c.is_beta_final);
  j.at("is_beta_anneal_steps").get_to(c.is_beta_anneal_steps);
  j.at("dueling").get_to(c.dueling);
  j.at("double_q").get_to(c.double_q);
  j.at("hidden_layers").get_to(c.hidden_layers);
  c.optimizer = j.at("optimizer").get<std::string>() == "adam" ? OptimizerKind::Adam : OptimizerKind::Sgd;
  j.at("adam_epsilon").get_to(c.adam_epsilon);
  j.at("grad_clip_norm").get_to(c.grad_clip_norm);
  j.at("huber_delta").get_to(c.huber_delta);
  j.at("learning_starts").get_to(c.learning_starts);
  j.at("gradient_steps_per_iteration").get_to(c.gradient_steps_per_iteration);
  c.relay_priority =
      j.at("relay_priority").get<std::string>() == "sender_td" ? RelayPriority::SenderTd : RelayPriority::MaxPriority;
  j.at("seed").get_to(c.seed);
  const auto& s = j.at("selection");
  c.selection.strategy = parse_selection_strategy(s.at("strategy").get<std::string>());
  s.at("bandwidth_beta").get_to(c.selection.bandwidth_beta);
  s.at("window_size_k").get_to(c.selection.window_size_k);
  s.at("min_window_fill").get_to(c.selection.min_window_fill);
  s.at("gaussian_use_variance").get_to(c.selection.gaussian_use_variance);
  s.at("stochastic_alpha").get_to(c.selection.stochastic_alpha);
  s.at("priority_epsilon").get_to(c.selection.priority_epsilon);
  return c;
}

template <typename Scalar>
void write_optimizer(std::ostream& os, const OptimizerState<Scalar>& s) {
  os.write("SPOP", 4);
  write_pod<std::uint32_t>(os, s.kind == OptimizerKind::Adam ? 0 : 1);
  write_pod(os, s.learning_rate);
  write_pod(os, s.adam_epsilon);
  write_pod(os, s.beta1);
  write_pod(os, s.beta2);
  write_pod<std::uint64_t>(os, s.step);
  write_vector(os, s.first_moment);
  write_vector(os, s.second_moment);
}

template <typename Scalar>
OptimizerState<Scalar> read_optimizer(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "SPOP", 4) != 0) throw FormatError("checkpoint: bad optimizer file");
  OptimizerState<Scalar> s;
  s.kind = read_pod<std::uint32_t>(is) == 0 ? OptimizerKind::Adam : OptimizerKind::Sgd;
  s.learning_rate = read_pod<double>(is);
  s.adam_epsilon = read_pod<double>(is);
  s.beta1 = read_pod<double>(is);
  s.beta2 = read_pod<double>(is);
  s.step = read_pod<std::uint64_t>(is);
  s.first_moment = read_vector<Scalar>(is);
  s.second_moment = read_vector<Scalar>(is);
  return s;
}

std::string policy_file(std::size_t p, const char* suffix) {
  return "policy" + std::to_string(p) + "." + suffix;
}

std::string agent_file(std::size_t i) { return "agent" + std::to_string(i) + ".replay"; }

}  // namespace

struct CheckpointAccess {
  static void save(const Trainer& t, const fs::path& dir) {
    fs::create_directories(dir);
    json j;
    j["version"] = kCheckpointVersion;
    j["mode"] = std::string(to_string(t.mode_));
    j["config"] = to_json(t.config_);
    j["env_steps"] = t.env_steps_;
    j["iterations"] = t.iterations_;
    j["env_state"] = t.env_->save_state();
    j["observations"] = t.observations_;
    j["finished_returns"] = t.finished_returns_;

    json agents = json::array();
    for (std::size_t i = 0; i < t.agents_.size(); ++i) {
      const auto& a = t.agents_[i];
      const auto& w = a.selector.window();
      const auto c = t.channel_->counters(static_cast<AgentId>(i));
      const auto bc = a.buffer.counters();
      agents.push_back({
          {"policy", a.policy},
          {"explore_rng", rng_text(a.explore_rng)},
          {"sample_rng", rng_text(a.sample_rng)},
          {"select_rng", rng_text(a.select_rng)},
          {"episode_return", a.episode_return},
          {"own_insertions", a.own_insertions},
          {"received_insertions", a.received_insertions},
          {"window",
           {{"values", std::vector<double>(w.values().begin(), w.values().end())},
            {"cursor", w.cursor()},
            {"sum", w.sum()},
            {"sum_squares", w.sum_squares()}}},
          {"relay", {{"offered", c.offered}, {"shared", c.shared}, {"bytes_shared", c.bytes_shared}}},
          {"buffer",
           {{"cursor", bc.cursor},
            {"size", bc.size},
            {"max_priority", bc.max_priority},
            {"stale_updates", bc.stale_updates},
            {"inserts", bc.inserts},
            {"generations", bc.generations}}},
      });

      auto os = open_out(dir / agent_file(i));
      std::vector<Experience> slots;
      std::vector<double> leaves;
      slots.reserve(a.buffer.size());
      for (std::size_t s = 0; s < a.buffer.size(); ++s) {
        slots.push_back(a.buffer.at(s));
        leaves.push_back(a.buffer.leaf_priority(s));
      }
      write_vector(os, leaves);
      write_experiences(os, t.env_->spec().observation_dim, slots);
    }
    j["agents"] = std::move(agents);

    for (std::size_t p = 0; p < t.policies_.size(); ++p) {
      const auto& pol = t.policies_[p];
      auto on = open_out(dir / policy_file(p, "online.qnet"));
      pol.online.save(on);
      auto tg = open_out(dir / policy_file(p, "target.qnet"));
      pol.target.save(tg);
      auto op = open_out(dir / policy_file(p, "optim"));
      write_optimizer(op, pol.optimizer.state());
    }

    auto os = open_out(dir / "trainer.json");
    os << j.dump(1) << '\n';
    if (!os) throw std::runtime_error("cannot write checkpoint metadata");
  }

  static Trainer load(const fs::path& dir, std::unique_ptr<MarkovGame> env, TrainerOptions options) {
    json j;
    try {
      auto is = open_in(dir / "trainer.json");
      is >> j;
    } catch (const json::exception& e) {
      throw FormatError(std::string("checkpoint: ") + e.what());
    }
    try {
      if (j.at("version").get<int>() != kCheckpointVersion) throw FormatError("checkpoint: unsupported version");
      Trainer t(std::move(env), config_from_json(j.at("config")), parse_run_mode(j.at("mode").get<std::string>()),
                options);
      const auto& agents = j.at("agents");
      if (agents.size() != t.agents_.size()) throw FormatError("checkpoint: agent count does not match environment");

      t.env_steps_ = j.at("env_steps").get<std::uint64_t>();
      t.iterations_ = j.at("iterations").get<std::uint64_t>();
      t.env_->restore_state(j.at("env_state").get<std::string>());
      t.observations_ = j.at("observations").get<std::vector<Observation>>();
      t.finished_returns_ = j.at("finished_returns").get<std::vector<std::vector<double>>>();

      for (std::size_t p = 0; p < t.policies_.size(); ++p) {
        auto& pol = t.policies_[p];
        auto on = open_in(dir / policy_file(p, "online.qnet"));
        auto online = QNetwork::load(on);
        auto tg = open_in(dir / policy_file(p, "target.qnet"));
        auto target = QNetwork::load(tg);
        if (online.shape() != pol.online.shape() || target.shape() != pol.online.shape()) {
          throw FormatError("checkpoint: network shape does not match configuration");
        }
        pol.online = std::move(online);
        pol.target = std::move(target);
        auto op = open_in(dir / policy_file(p, "optim"));
        pol.optimizer = Optimizer<float>(read_optimizer<float>(op));
        if (pol.optimizer.state().first_moment.size() != pol.online.parameter_count() &&
            pol.optimizer.state().kind == OptimizerKind::Adam) {
          throw FormatError("checkpoint: optimizer state does not match network");
        }
      }

      const ReplayConfig replay{t.config_.buffer_capacity, t.config_.priority_alpha, t.config_.priority_epsilon};
      for (std::size_t i = 0; i < t.agents_.size(); ++i) {
        const auto& ja = agents[i];
        auto& a = t.agents_[i];
        a.explore_rng = rng_from(ja.at("explore_rng").get<std::string>());
        a.sample_rng = rng_from(ja.at("sample_rng").get<std::string>());
        a.select_rng = rng_from(ja.at("select_rng").get<std::string>());
        a.episode_return = ja.at("episode_return").get<double>();
        a.own_insertions = ja.at("own_insertions").get<std::uint64_t>();
        a.received_insertions = ja.at("received_insertions").get<std::uint64_t>();

        const auto& jw = ja.at("window");
        const auto values = jw.at("values").get<std::vector<double>>();
        a.selector.restore_window(WindowStats::restore(t.config_.selection.window_size_k, values,
                                                       jw.at("cursor").get<std::size_t>(),
                                                       jw.at("sum").get<double>(), jw.at("sum_squares").get<double>()));

        const auto& jr = ja.at("relay");
        RelayChannel::AgentCounters rc;
        rc.offered = jr.at("offered").get<std::uint64_t>();
        rc.shared = jr.at("shared").get<std::uint64_t>();
        rc.bytes_shared = jr.at("bytes_shared").get<std::uint64_t>();
        t.channel_->restore_counters(static_cast<AgentId>(i), rc);

        const auto& jb = ja.at("buffer");
        PrioritizedBuffer::Counters bc;
        bc.cursor = jb.at("cursor").get<std::size_t>();
        bc.size = jb.at("size").get<std::size_t>();
        bc.max_priority = jb.at("max_priority").get<double>();
        bc.stale_updates = jb.at("stale_updates").get<std::uint64_t>();
        bc.inserts = jb.at("inserts").get<std::uint64_t>();
        bc.generations = jb.at("generations").get<std::vector<std::uint64_t>>();

        auto is = open_in(dir / agent_file(i));
        auto leaves = read_vector<double>(is);
        std::size_t dim = 0;
        auto slots = read_experiences(is, &dim);
        if (!slots.empty() && dim != t.env_->spec().observation_dim) {
          throw FormatError("checkpoint: replay observation size does not match environment");
        }
        a.buffer = PrioritizedBuffer::restore(replay, std::move(slots), std::move(leaves), bc);
      }
      return t;
    } catch (const json::exception& e) {
      throw FormatError(std::string("checkpoint: ") + e.what());
    }
  }
};

void Trainer::save_checkpoint(const fs::path& dir) const { CheckpointAccess::save(*this, dir); }

Trainer Trainer::load_checkpoint(const fs::path& dir, std::unique_ptr<MarkovGame> env, TrainerOptions options) {
  return CheckpointAccess::load(dir, std::move(env), options);
}

}  // namespace super
