#include "sdsra/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "sdsra/errors.hpp"

namespace sdsra {

bool RunConfig::operator==(const RunConfig& o) const {
  return agent == o.agent && env == o.env && name == o.name && total_steps == o.total_steps &&
         eval_interval == o.eval_interval && eval_episodes == o.eval_episodes && log_interval == o.log_interval &&
         output_dir == o.output_dir && seeds == o.seeds && threshold == o.threshold &&
         threshold_window == o.threshold_window;
}

std::string_view mode_name(Mode mode) { return mode == Mode::kSac ? "sac" : "sdsra"; }

namespace {

// Value errors carry no line number; parse_config attaches it and fills in %KEY%.
struct ValueError {
  std::string message;
};

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

// Shortest text that parses back to the same double.
std::string render_double(double v) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

double parse_double(const std::string& key, const std::string& v) {
  double out = 0;
  const auto* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end || !std::isfinite(out))
    throw ValueError{"cannot parse '" + v + "' as a number for " + key};
  return out;
}

std::uint64_t parse_uint(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end || v.empty())
    throw ValueError{"cannot parse '" + v + "' as a non-negative integer for " + key};
  return out;
}

std::vector<std::uint64_t> parse_uint_list(const std::string& key, const std::string& v) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_uint(key, trim(item)));
  if (out.empty()) throw ValueError{key + " needs at least one entry"};
  return out;
}

template <class T>
std::string render_list(const std::vector<T>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

void require(bool ok, const std::string& key, const std::string& value, const char* range) {
  if (!ok) throw ValueError{key + " = " + value + " is outside the range " + range};
}

struct Field {
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

using FieldTable = std::vector<std::pair<std::string, Field>>;

Field real_field(double AgentConfig::*member, std::function<bool(double)> ok, const char* range) {
  return {[=](RunConfig& c, const std::string& v) {
            const double x = parse_double("%KEY%", v);
            require(ok(x), "%KEY%", v, range);
            c.agent.*member = x;
          },
          [=](const RunConfig& c) { return render_double(c.agent.*member); }};
}

Field count_field(std::size_t AgentConfig::*member, std::uint64_t min, std::uint64_t max, const char* range) {
  return {[=](RunConfig& c, const std::string& v) {
            const auto x = parse_uint("%KEY%", v);
            require(x >= min && x <= max, "%KEY%", v, range);
            c.agent.*member = static_cast<std::size_t>(x);
          },
          [=](const RunConfig& c) { return std::to_string(c.agent.*member); }};
}

Field run_count_field(std::size_t RunConfig::*member, std::uint64_t min, const char* range) {
  return {[=](RunConfig& c, const std::string& v) {
            const auto x = parse_uint("%KEY%", v);
            require(x >= min, "%KEY%", v, range);
            c.*member = static_cast<std::size_t>(x);
          },
          [=](const RunConfig& c) { return std::to_string(c.*member); }};
}

const FieldTable& fields() {
  constexpr auto kHuge = std::uint64_t{1} << 40;
  static const FieldTable table = {
      {"mode",
       {[](RunConfig& c, const std::string& v) {
          if (v == "sdsra") c.agent.mode = Mode::kSdsra;
          else if (v == "sac") c.agent.mode = Mode::kSac;
          else throw ValueError{"mode must be sdsra or sac, got '" + v + "'"};
        },
        [](const RunConfig& c) { return std::string(mode_name(c.agent.mode)); }}},
      {"env",
       {[](RunConfig& c, const std::string& v) {
          if (v != "pendulum" && v != "pointmass") throw ValueError{"env must be pendulum or pointmass, got '" + v + "'"};
          c.env = v;
        },
        [](const RunConfig& c) { return c.env; }}},
      {"name",
       {[](RunConfig& c, const std::string& v) {
          if (v.empty() || v.find_first_of("/\\ \t") != std::string::npos)
            throw ValueError{"name must be a non-empty token without separators"};
          c.name = v;
        },
        [](const RunConfig& c) { return c.name; }}},
      {"n_skills", count_field(&AgentConfig::num_skills, 1, kMaxSkills, "[1, 8]")},
      {"relevance_init", real_field(&AgentConfig::relevance_init, [](double) { return true; }, "(-inf, inf)")},
      {"kappa", real_field(&AgentConfig::temperature, [](double x) { return x > 0; }, "(0, inf)")},
      {"beta", real_field(&AgentConfig::beta, [](double) { return true; }, "(-inf, inf)")},
      {"eta", real_field(&AgentConfig::eta, [](double x) { return x > 0 && x <= 1; }, "(0, 1]")},
      {"skill_update_interval", count_field(&AgentConfig::skill_update_interval, 0, kHuge, "[0, inf)")},
      {"skill_grad_steps", count_field(&AgentConfig::skill_grad_steps, 0, kHuge, "[0, inf)")},
      {"alpha", real_field(&AgentConfig::alpha, [](double x) { return x > 0; }, "(0, inf)")},
      {"gamma", real_field(&AgentConfig::gamma, [](double x) { return x >= 0 && x < 1; }, "[0, 1)")},
      {"tau", real_field(&AgentConfig::tau, [](double x) { return x > 0 && x <= 1; }, "(0, 1]")},
      {"lr", real_field(&AgentConfig::lr, [](double x) { return x > 0; }, "(0, inf)")},
      {"batch_size", count_field(&AgentConfig::batch_size, 1, kHuge, "[1, inf)")},
      {"buffer_capacity", count_field(&AgentConfig::buffer_capacity, 1, kHuge, "[1, inf)")},
      {"warmup_steps", count_field(&AgentConfig::warmup_steps, 0, kHuge, "[0, inf)")},
      {"env_steps_per_iter", count_field(&AgentConfig::env_steps_per_iter, 1, kHuge, "[1, inf)")},
      {"grad_steps_per_iter", count_field(&AgentConfig::grad_steps_per_iter, 0, kHuge, "[0, inf)")},
      {"hidden",
       {[](RunConfig& c, const std::string& v) {
          std::vector<std::size_t> h;
          for (auto x : parse_uint_list("hidden", v)) {
            require(x >= 1, "hidden", v, "[1, inf) per layer");
            h.push_back(static_cast<std::size_t>(x));
          }
          c.agent.hidden = std::move(h);
        },
        [](const RunConfig& c) { return render_list(c.agent.hidden); }}},
      {"policy_loss",
       {[](RunConfig& c, const std::string& v) {
          if (v == "reparam") c.agent.policy_loss = PolicyLossKind::kReparam;
          else if (v == "score_function") c.agent.policy_loss = PolicyLossKind::kScoreFunction;
          else throw ValueError{"policy_loss must be reparam or score_function, got '" + v + "'"};
        },
        [](const RunConfig& c) {
          return std::string(c.agent.policy_loss == PolicyLossKind::kReparam ? "reparam" : "score_function");
        }}},
      {"eval_policy",
       {[](RunConfig& c, const std::string& v) {
          if (v == "best_skill") c.agent.eval_policy = EvalPolicy::kBestSkill;
          else if (v == "mixture") c.agent.eval_policy = EvalPolicy::kMixture;
          else throw ValueError{"eval_policy must be best_skill or mixture, got '" + v + "'"};
        },
        [](const RunConfig& c) {
          return std::string(c.agent.eval_policy == EvalPolicy::kBestSkill ? "best_skill" : "mixture");
        }}},
      {"total_steps", run_count_field(&RunConfig::total_steps, 0, "[0, inf)")},
      {"eval_interval", run_count_field(&RunConfig::eval_interval, 0, "[0, inf)")},
      {"eval_episodes", run_count_field(&RunConfig::eval_episodes, 1, "[1, inf)")},
      {"log_interval", run_count_field(&RunConfig::log_interval, 1, "[1, inf)")},
      {"output_dir",
       {[](RunConfig& c, const std::string& v) {
          if (v.empty()) throw ValueError{"output_dir must not be empty"};
          c.output_dir = v;
        },
        [](const RunConfig& c) { return c.output_dir; }}},
      {"seeds",
       {[](RunConfig& c, const std::string& v) { c.seeds = parse_uint_list("seeds", v); },
        [](const RunConfig& c) { return render_list(c.seeds); }}},
      {"threshold",
       {[](RunConfig& c, const std::string& v) { c.threshold = parse_double("threshold", v); },
        [](const RunConfig& c) { return render_double(c.threshold); }}},
      {"threshold_window", run_count_field(&RunConfig::threshold_window, 1, "[1, inf)")},
  };
  return table;
}

}  // namespace

ParsedConfig parse_config(std::string_view text) {
  const auto& table = fields();
  ParsedConfig out;
  std::set<std::string> seen;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const auto line = trim(std::string_view(raw).substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(line_no, "expected 'key = value', got '" + line + "'");
    const auto key = trim(std::string_view(line).substr(0, eq));
    const auto value = trim(std::string_view(line).substr(eq + 1));
    const auto it = std::find_if(table.begin(), table.end(), [&](const auto& f) { return f.first == key; });
    if (it == table.end()) throw ConfigError(line_no, "unknown key '" + key + "'");
    if (!seen.insert(key).second) throw ConfigError(line_no, "duplicate key '" + key + "'");
    try {
      it->second.set(out.config, value);
    } catch (const ValueError& e) {
      auto msg = e.message;
      for (auto pos = msg.find("%KEY%"); pos != std::string::npos; pos = msg.find("%KEY%")) msg.replace(pos, 5, key);
      throw ConfigError(line_no, msg);
    }
  }
  for (const auto& [key, field] : table)
    if (!seen.count(key)) out.applied_defaults.push_back(key + " = " + field.get(out.config));
  try {
    out.config.agent.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(0, e.what());
  }
  return out;
}

ParsedConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(0, "cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string render_config(const RunConfig& config) {
  std::string out;
  for (const auto& [key, field] : fields()) out += key + " = " + field.get(config) + "\n";
  return out;
}

}  // namespace sdsra
