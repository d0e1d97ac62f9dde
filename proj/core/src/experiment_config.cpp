#include "super/experiment_config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>

#include "super/errors.hpp"

namespace super {
namespace {

namespace pt = boost::property_tree;

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& field, const std::string& raw) {
  const std::string s = trim(raw);
  T v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw ConfigError(field + ": expected a number, got '" + raw + "'");
  }
  return v;
}

bool parse_bool(const std::string& field, const std::string& raw) {
  const std::string s = trim(raw);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError(field + ": expected true or false, got '" + raw + "'");
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(text);
  while (std::getline(is, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string fmt(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

template <typename T>
std::string join(const std::vector<T>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

// One settable key: parse from text and format back.
struct Field {
  std::function<void(const std::string& field, const std::string& value)> set;
  std::function<std::string()> get;
};
using Section = std::vector<std::pair<std::string, Field>>;

template <typename T>
Field number(T& ref) {
  return {[&ref](const std::string& f, const std::string& v) { ref = parse_number<T>(f, v); },
          [&ref] {
            if constexpr (std::is_floating_point_v<T>) {
              return fmt(ref);
            } else {
              return std::to_string(ref);
            }
          }};
}

Field boolean(bool& ref) {
  return {[&ref](const std::string& f, const std::string& v) { ref = parse_bool(f, v); },
          [&ref] { return std::string(ref ? "true" : "false"); }};
}

std::map<std::string, Section> schema(ExperimentConfig& c) {
  auto& env = c.environment;
  auto& tr = c.trainer;
  auto& sel = c.trainer.selection;
  std::map<std::string, Section> s;

  s["experiment"] = {
      {"mode",
       {[&c](const std::string&, const std::string& v) { c.mode = parse_run_mode(trim(v)); },
        [&c] { return std::string(to_string(c.mode)); }}},
      {"total_env_steps", number(c.total_env_steps)},
      {"seeds",
       {[&c](const std::string& f, const std::string& v) {
          try {
            c.seeds = parse_seed_list(v);
          } catch (const ConfigError& e) {
            throw ConfigError(f + ": " + e.what());
          }
        },
        [&c] { return join(c.seeds); }}},
      {"report_interval_steps", number(c.report_interval_steps)},
      {"smoothing_alpha", number(c.smoothing_alpha)},
      {"eval_episodes", number(c.eval_episodes)},
      {"parallel_learning", boolean(c.parallel_learning)},
      {"checkpoint", boolean(c.checkpoint)},
  };

  s["environment"] = {
      {"grid_width", number(env.grid_width)},
      {"grid_height", number(env.grid_height)},
      {"num_pursuers", number(env.num_pursuers)},
      {"num_evaders", number(env.num_evaders)},
      {"n_catch", number(env.n_catch)},
      {"obs_range", number(env.obs_range)},
      {"catch_reward", number(env.catch_reward)},
      {"tag_reward", number(env.tag_reward)},
      {"urgency_reward", number(env.urgency_reward)},
      {"max_cycles", number(env.max_cycles)},
      {"obstacles",
       {[&env](const std::string& f, const std::string& v) {
          const auto t = trim(v);
          if (t == "none") {
            env.obstacle_layout = ObstacleLayout::None;
          } else if (t == "center_block") {
            env.obstacle_layout = ObstacleLayout::CenterBlock;
          } else {
            throw ConfigError(f + ": expected none or center_block, got '" + v + "'");
          }
        },
        [&env] { return std::string(env.obstacle_layout == ObstacleLayout::None ? "none" : "center_block"); }}},
      {"surrounded", boolean(env.surrounded)},
  };

  s["trainer"] = {
      {"learning_rate", number(tr.learning_rate)},
      {"train_batch_size", number(tr.train_batch_size)},
      {"rollout_fragment_length", number(tr.rollout_fragment_length)},
      {"target_update_freq", number(tr.target_update_freq)},
      {"buffer_capacity", number(tr.buffer_capacity)},
      {"gamma", number(tr.gamma)},
      {"epsilon_initial", number(tr.epsilon_initial)},
      {"epsilon_final", number(tr.epsilon_final)},
      {"epsilon_decay_steps", number(tr.epsilon_decay_steps)},
      {"priority_alpha", number(tr.priority_alpha)},
      {"priority_epsilon", number(tr.priority_epsilon)},
      {"importance_sampling", boolean(tr.importance_sampling)},
      {"is_beta_initial", number(tr.is_beta_initial)},
      {"is_beta_final", number(tr.is_beta_final)},
      {"is_beta_anneal_steps", number(tr.is_beta_anneal_steps)},
      {"optimizer",
       {[&tr](const std::string& f, const std::string& v) {
          const auto t = trim(v);
          if (t == "adam") {
            tr.optimizer = OptimizerKind::Adam;
          } else if (t == "sgd") {
            tr.optimizer = OptimizerKind::Sgd;
          } else {
            throw ConfigError(f + ": expected adam or sgd, got '" + v + "'");
          }
        },
        [&tr] { return std::string(tr.optimizer == OptimizerKind::Adam ? "adam" : "sgd"); }}},
      {"adam_epsilon", number(tr.adam_epsilon)},
      {"grad_clip_norm", number(tr.grad_clip_norm)},
      {"huber_delta", number(tr.huber_delta)},
      {"learning_starts", number(tr.learning_starts)},
      {"gradient_steps_per_iteration", number(tr.gradient_steps_per_iteration)},
      {"relay_priority",
       {[&tr](const std::string& f, const std::string& v) {
          const auto t = trim(v);
          if (t == "sender_td") {
            tr.relay_priority = RelayPriority::SenderTd;
          } else if (t == "max") {
            tr.relay_priority = RelayPriority::MaxPriority;
          } else {
            throw ConfigError(f + ": expected sender_td or max, got '" + v + "'");
          }
        },
        [&tr] { return std::string(tr.relay_priority == RelayPriority::SenderTd ? "sender_td" : "max"); }}},
  };

  s["network"] = {
      {"hidden_layers",
       {[&tr](const std::string& f, const std::string& v) {
          tr.hidden_layers.clear();
          for (const auto& item : split_list(v)) tr.hidden_layers.push_back(parse_number<std::size_t>(f, item));
        },
        [&tr] { return join(tr.hidden_layers); }}},
      {"dueling", boolean(tr.dueling)},
      {"double_q", boolean(tr.double_q)},
  };

  s["selection"] = {
      {"strategy",
       {[&sel](const std::string& f, const std::string& v) {
          try {
            sel.strategy = parse_selection_strategy(trim(v));
          } catch (const ConfigError&) {
            throw ConfigError(f + ": unknown strategy '" + v + "'");
          }
        },
        [&sel] { return std::string(to_string(sel.strategy)); }}},
      {"bandwidth_beta", number(sel.bandwidth_beta)},
      {"window_size_k", number(sel.window_size_k)},
      {"min_window_fill", number(sel.min_window_fill)},
      {"gaussian_use_variance", boolean(sel.gaussian_use_variance)},
      {"stochastic_alpha", number(sel.stochastic_alpha)},
      {"priority_epsilon", number(sel.priority_epsilon)},
  };
  return s;
}

const Field* find_field(const Section& section, const std::string& key) {
  for (const auto& [name, field] : section) {
    if (name == key) return &field;
  }
  return nullptr;
}

}  // namespace

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> out;
  for (const auto& item : split_list(text)) out.push_back(parse_number<std::uint64_t>("seed", item));
  if (out.empty()) throw ConfigError("expected at least one seed");
  return out;
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  for (const auto& item : split_list(text)) out.push_back(parse_number<double>("value", item));
  if (out.empty()) throw ConfigError("expected at least one value");
  return out;
}

void ExperimentConfig::validate() const {
  if (seeds.empty()) throw ConfigError("experiment.seeds: at least one seed required");
  if (total_env_steps == 0) throw ConfigError("experiment.total_env_steps: must be positive");
  if (report_interval_steps == 0) throw ConfigError("experiment.report_interval_steps: must be positive");
  if (!(smoothing_alpha > 0.0 && smoothing_alpha <= 1.0)) {
    throw ConfigError("experiment.smoothing_alpha: must lie in (0, 1]");
  }
  environment.validate();
  trainer.validate();
}

ExperimentConfig parse_experiment_config(std::istream& is) {
  pt::ptree tree;
  try {
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }

  ExperimentConfig c;
  auto sections = schema(c);
  for (const auto& [name, _] : tree) {
    if (!sections.count(name)) throw ConfigError(name + ": unknown section");
  }

  // The preset replaces the whole environment block, so it goes first.
  if (auto env = tree.get_child_optional("environment")) {
    if (auto preset = env->get_optional<std::string>("preset")) {
      const auto p = trim(*preset);
      if (p == "mini") {
        c.environment = mini_pursuit_config();
      } else if (p == "pursuit") {
        c.environment = PursuitConfig{};
      } else {
        throw ConfigError("environment.preset: expected mini or pursuit, got '" + *preset + "'");
      }
    }
  }

  for (const auto& [section_name, section_tree] : tree) {
    const auto& section = sections.at(section_name);
    for (const auto& [key, value] : section_tree) {
      if (section_name == "environment" && key == "preset") continue;
      const std::string field = section_name + "." + key;
      const Field* f = find_field(section, key);
      if (!f) throw ConfigError(field + ": unknown key");
      f->set(field, value.data());
    }
  }
  c.trainer.seed = c.seeds.front();
  c.validate();
  return c;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file '" + path + "'");
  return parse_experiment_config(is);
}

void write_experiment_config(std::ostream& os, const ExperimentConfig& config) {
  ExperimentConfig copy = config;
  const auto sections = schema(copy);
  for (const char* name : {"experiment", "environment", "trainer", "network", "selection"}) {
    os << '[' << name << "]\n";
    for (const auto& [key, field] : sections.at(name)) os << key << " = " << field.get() << '\n';
    os << '\n';
  }
}

}  // namespace super
