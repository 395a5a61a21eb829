#include "hrl4pfg/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

extern char** environ;

namespace hrl4pfg {

Json to_json(const RunConfig& c) {
  const auto& e = c.env;
  const auto& t = c.train;
  Json j;
  j["env"] = {{"num_items", e.num_items},   {"dim", e.dim},
              {"num_users", e.num_users},   {"eta", e.eta},
              {"noise", e.noise},           {"exit_w", e.exit_w},
              {"max_len", e.max_len},       {"history_len", e.history_len},
              {"zipf_s", e.zipf_s},         {"pop_cluster", e.pop_cluster},
              {"user_pop_bias", e.user_pop_bias},
              {"catalog_file", c.files.catalog}, {"users_file", c.files.users},
              {"log_file", c.files.log}};
  j["agents"] = {{"high_hidden", t.high_agent.hidden},
                 {"low_hidden", t.low_agent.hidden},
                 {"sigma2_floor", t.high_agent.sigma2_floor},
                 {"init_sigma2", t.high_agent.init_sigma2},
                 {"logit_scale", t.low_agent.logit_scale},
                 {"reduction", to_string(t.high_agent.reduction)},
                 {"L", t.top_l},
                 {"lambda_f", t.lambda_f},
                 {"lambda_g", t.lambda_g},
                 {"gamma_high", t.high.gamma},
                 {"gamma_low", t.low.gamma},
                 {"tau_high", t.high.tau},
                 {"tau_low", t.low.tau},
                 {"lr_high_actor", t.high.lr_actor},
                 {"lr_high_critic", t.high.lr_critic},
                 {"lr_high_tracker", t.high.lr_tracker},
                 {"lr_low_actor", t.low.lr_actor},
                 {"lr_low_critic", t.low.lr_critic},
                 {"lr_low_tracker", t.low.lr_tracker}};
  j["trainer"] = {{"M", t.macro_interval},
                  {"epochs", t.epochs},
                  {"episodes_per_epoch", t.episodes_per_epoch},
                  {"episodes_per_update", t.episodes_per_update},
                  {"eval_episodes", t.eval_episodes},
                  {"variant", to_string(t.variant)},
                  {"workers", t.workers},
                  {"checkpoint_every", c.checkpoint_every}};
  j["seeds"] = c.seeds;
  j["out"] = c.out;
  return j;
}

namespace {

template <typename T>
T get_as(const Json& v, const std::string& path) {
  try {
    if constexpr (std::is_same_v<T, double>) {
      if (!v.is_number()) throw std::invalid_argument("");
    } else if constexpr (std::is_same_v<T, std::size_t> || std::is_same_v<T, std::uint64_t>) {
      if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
        throw std::invalid_argument("");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw std::invalid_argument("");
    }
    return v.get<T>();
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad value for " + path + ": " + v.dump());
  }
}

/// Walks `section` and assigns each known key through `fields`; anything else is rejected.
template <typename Fields>
void read_section(const Json& doc, const std::string& name, Fields&& fields) {
  if (!doc.contains(name)) return;
  const Json& sec = doc.at(name);
  if (!sec.is_object()) throw std::invalid_argument("config: section " + name + " must be an object");
  for (const auto& [key, value] : sec.items()) {
    const std::string path = name + "." + key;
    if (!fields(key, value, path)) throw std::invalid_argument("config: unknown key " + path);
  }
}

}  // namespace

RunConfig config_from_json(const Json& doc) {
  if (!doc.is_object()) throw std::invalid_argument("config: document must be a JSON object");
  for (const auto& [key, _] : doc.items()) {
    static const std::vector<std::string> top{"env", "agents", "trainer", "seeds", "out"};
    if (std::find(top.begin(), top.end(), key) == top.end()) throw std::invalid_argument("config: unknown key " + key);
  }
  RunConfig c;
  auto& e = c.env;
  auto& t = c.train;
  read_section(doc, "env", [&](const std::string& k, const Json& v, const std::string& p) {
    if (k == "num_items") e.num_items = get_as<std::size_t>(v, p);
    else if (k == "dim") e.dim = get_as<std::size_t>(v, p);
    else if (k == "num_users") e.num_users = get_as<std::size_t>(v, p);
    else if (k == "eta") e.eta = get_as<double>(v, p);
    else if (k == "noise") e.noise = get_as<double>(v, p);
    else if (k == "exit_w") e.exit_w = get_as<std::size_t>(v, p);
    else if (k == "max_len") e.max_len = get_as<std::size_t>(v, p);
    else if (k == "history_len") e.history_len = get_as<std::size_t>(v, p);
    else if (k == "zipf_s") e.zipf_s = get_as<double>(v, p);
    else if (k == "pop_cluster") e.pop_cluster = get_as<double>(v, p);
    else if (k == "user_pop_bias") e.user_pop_bias = get_as<double>(v, p);
    else if (k == "catalog_file") c.files.catalog = get_as<std::string>(v, p);
    else if (k == "users_file") c.files.users = get_as<std::string>(v, p);
    else if (k == "log_file") c.files.log = get_as<std::string>(v, p);
    else return false;
    return true;
  });
  read_section(doc, "agents", [&](const std::string& k, const Json& v, const std::string& p) {
    if (k == "high_hidden") t.high_agent.hidden = get_as<std::size_t>(v, p);
    else if (k == "low_hidden") t.low_agent.hidden = get_as<std::size_t>(v, p);
    else if (k == "sigma2_floor") t.high_agent.sigma2_floor = get_as<double>(v, p);
    else if (k == "init_sigma2") t.high_agent.init_sigma2 = get_as<double>(v, p);
    else if (k == "logit_scale") t.low_agent.logit_scale = get_as<double>(v, p);
    else if (k == "reduction") t.high_agent.reduction = t.low_agent.reduction = parse_reduction(get_as<std::string>(v, p));
    else if (k == "L") t.top_l = get_as<std::size_t>(v, p);
    else if (k == "lambda_f") t.lambda_f = get_as<double>(v, p);
    else if (k == "lambda_g") t.lambda_g = get_as<double>(v, p);
    else if (k == "gamma_high") t.high.gamma = get_as<double>(v, p);
    else if (k == "gamma_low") t.low.gamma = get_as<double>(v, p);
    else if (k == "tau_high") t.high.tau = get_as<double>(v, p);
    else if (k == "tau_low") t.low.tau = get_as<double>(v, p);
    else if (k == "lr_high_actor") t.high.lr_actor = get_as<double>(v, p);
    else if (k == "lr_high_critic") t.high.lr_critic = get_as<double>(v, p);
    else if (k == "lr_high_tracker") t.high.lr_tracker = get_as<double>(v, p);
    else if (k == "lr_low_actor") t.low.lr_actor = get_as<double>(v, p);
    else if (k == "lr_low_critic") t.low.lr_critic = get_as<double>(v, p);
    else if (k == "lr_low_tracker") t.low.lr_tracker = get_as<double>(v, p);
    else return false;
    return true;
  });
  read_section(doc, "trainer", [&](const std::string& k, const Json& v, const std::string& p) {
    if (k == "M") t.macro_interval = get_as<std::size_t>(v, p);
    else if (k == "epochs") t.epochs = get_as<std::size_t>(v, p);
    else if (k == "episodes_per_epoch") t.episodes_per_epoch = get_as<std::size_t>(v, p);
    else if (k == "episodes_per_update") t.episodes_per_update = get_as<std::size_t>(v, p);
    else if (k == "eval_episodes") t.eval_episodes = get_as<std::size_t>(v, p);
    else if (k == "variant") t.variant = parse_variant(get_as<std::string>(v, p));
    else if (k == "workers") t.workers = get_as<std::size_t>(v, p);
    else if (k == "checkpoint_every") c.checkpoint_every = get_as<std::size_t>(v, p);
    else return false;
    return true;
  });
  if (doc.contains("seeds")) {
    const Json& s = doc.at("seeds");
    if (!s.is_array() || s.empty()) throw std::invalid_argument("config: seeds must be a non-empty array");
    c.seeds.clear();
    for (const auto& x : s) c.seeds.push_back(get_as<std::uint64_t>(x, "seeds[]"));
  }
  if (doc.contains("out")) c.out = get_as<std::string>(doc.at("out"), "out");
  validate(c.env);
  validate(c.train);
  return c;
}

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  return s;
}

Json parse_value(const std::string& raw) {
  try {
    return Json::parse(raw);
  } catch (const Json::parse_error&) {
    return Json(raw);
  }
}

/// Finds the key in `obj` equal to `want` ignoring case.
std::string match_key(const Json& obj, const std::string& want, const std::string& var) {
  for (const auto& [key, _] : obj.items())
    if (lower(key) == want) return key;
  throw std::invalid_argument("environment override " + var + " names no config key");
}

}  // namespace

void apply_env_overrides(Json& doc, const std::map<std::string, std::string>& vars) {
  const Json defaults = to_json(RunConfig{});
  const std::string prefix = "HRL4PFG_";
  for (const auto& [name, raw] : vars) {
    if (name.rfind(prefix, 0) != 0) continue;
    const std::string rest = lower(name.substr(prefix.size()));
    const auto sep = rest.find("__");
    if (sep == std::string::npos) {
      const std::string key = match_key(defaults, rest, name);
      doc[key] = parse_value(raw);
    } else {
      const std::string section = match_key(defaults, rest.substr(0, sep), name);
      const std::string key = match_key(defaults.at(section), rest.substr(sep + 2), name);
      if (!doc.contains(section)) doc[section] = Json::object();
      doc[section][key] = parse_value(raw);
    }
  }
}

std::map<std::string, std::string> hrl4pfg_environment() {
  std::map<std::string, std::string> out;
  for (char** e = environ; e && *e; ++e) {
    const std::string kv = *e;
    if (kv.rfind("HRL4PFG_", 0) != 0) continue;
    const auto eq = kv.find('=');
    if (eq == std::string::npos) continue;
    out.emplace(kv.substr(0, eq), kv.substr(eq + 1));
  }
  return out;
}

RunConfig load_config(const std::filesystem::path& path, const std::map<std::string, std::string>& vars) {
  Json doc = Json::object();
  if (!path.empty()) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot read config " + path.string());
    try {
      doc = Json::parse(f);
    } catch (const Json::parse_error& e) {
      throw std::invalid_argument("config " + path.string() + ": " + e.what());
    }
  }
  apply_env_overrides(doc, vars);
  return config_from_json(doc);
}

}  // namespace hrl4pfg
