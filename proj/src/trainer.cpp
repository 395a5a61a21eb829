#include "hrl4pfg/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <thread>

#include "hrl4pfg/catalog.hpp"

namespace hrl4pfg {

namespace {

constexpr std::uint64_t kEvalStream = 0x45564131;
constexpr std::uint64_t kTrainStream = 0x54524e31;

/// Runs f(k) for k in [0, n) on up to `workers` threads; each k is handled by exactly one thread.
template <typename F>
void parallel_for(std::size_t n, std::size_t workers, F&& f) {
  workers = std::max<std::size_t>(1, std::min(workers, n));
  if (workers == 1) {
    for (std::size_t k = 0; k < n; ++k) f(k);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t k = w; k < n; k += workers) f(k);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

const UserProfile& pick_user(const UserPopulation& users, std::uint64_t episode_seed) {
  if (users.empty()) throw std::invalid_argument("no users in the population");
  num::Rng rng(num::derive_seed(episode_seed, {0x55}));
  return users[static_cast<std::size_t>(num::uniform01(rng) * static_cast<double>(users.size())) % users.size()];
}

UpdateStats mean_stats(const std::vector<UpdateStats>& xs) {
  UpdateStats m;
  if (xs.empty()) return m;
  for (const auto& s : xs) {
    m.critic_loss += s.critic_loss;
    m.actor_loss += s.actor_loss;
    m.mean_advantage += s.mean_advantage;
    m.batch += s.batch;
  }
  const double n = static_cast<double>(xs.size());
  m.critic_loss /= n;
  m.actor_loss /= n;
  m.mean_advantage /= n;
  return m;
}

}  // namespace

Variant parse_variant(const std::string& name) {
  if (name == "full") return Variant::full;
  if (name == "wo-hie") return Variant::wo_hie;
  if (name == "wo-tc") return Variant::wo_tc;
  if (name == "wo-fm") return Variant::wo_fm;
  if (name == "random") return Variant::random;
  throw std::invalid_argument("unknown variant '" + name + "' (expected full|wo-hie|wo-tc|wo-fm|random)");
}

const char* to_string(Variant v) {
  switch (v) {
    case Variant::full: return "full";
    case Variant::wo_hie: return "wo-hie";
    case Variant::wo_tc: return "wo-tc";
    case Variant::wo_fm: return "wo-fm";
    case Variant::random: return "random";
  }
  return "?";
}

void validate(const TrainConfig& cfg) {
  if (cfg.macro_interval < 1) throw std::invalid_argument("trainer.M must be >= 1");
  if (cfg.episodes_per_update < 1) throw std::invalid_argument("trainer.episodes_per_update must be >= 1");
  if (cfg.eval_episodes < 1) throw std::invalid_argument("trainer.eval_episodes must be >= 1");
  if (cfg.top_l < 1) throw std::invalid_argument("agents.L must be >= 1");
  if (!(cfg.lambda_f >= 0.0) || !(cfg.lambda_g >= 0.0)) throw std::invalid_argument("lambda_f and lambda_g must be >= 0");
  check_settings(cfg.high);
  check_settings(cfg.low);
}

num::Checkpoint Assembly::checkpoint() const {
  num::Checkpoint c;
  if (high) high->append_to(c);
  if (low) low->append_to(c);
  return c;
}

void Assembly::load(const num::Checkpoint& ckpt) {
  if (high) high->load_from(ckpt);
  if (low) low->load_from(ckpt);
}

Assembly make_variant(const TrainConfig& cfg, const ItemCatalog& catalog) {
  validate(cfg);
  Assembly a;
  a.variant = cfg.variant;
  a.lambda_g = cfg.lambda_g;
  if (cfg.variant != Variant::wo_hie) a.high = std::make_unique<HighAgent>(catalog, cfg.high_agent, cfg.seed);
  a.low = std::make_unique<LowAgent>(catalog, cfg.low_agent, cfg.seed);
  switch (cfg.variant) {
    case Variant::full: break;
    case Variant::wo_hie:
      a.force_gate = true;
      a.use_filter = false;
      a.lambda_g = 0.0;
      break;
    case Variant::wo_tc: a.force_gate = true; break;
    case Variant::wo_fm: a.use_filter = false; break;
    case Variant::random: a.uniform_policy = true; break;
  }
  return a;
}

Rollout rollout_episode(const ItemCatalog& catalog, const UserProfile& user, const EnvConfig& env,
                        const Assembly& agents, const TrainConfig& cfg, Mode mode, std::uint64_t episode_seed) {
  if (!agents.low) throw std::invalid_argument("rollout_episode: assembly has no low-level agent");
  const bool eval = mode == Mode::eval;
  const bool collect = mode == Mode::train && !agents.uniform_policy;
  const std::size_t M = cfg.macro_interval;
  const LowAgent& low = *agents.low;

  Session session = reset(catalog, user, env, num::derive_seed(episode_seed, {1}));
  num::Rng rng(num::derive_seed(episode_seed, {2}));

  Rollout out;
  out.log.user_id = user.id;
  out.log.seed = episode_seed;

  FairnessTarget target;
  target.g.assign(catalog.dim(), 0.0);
  bool gate = true;
  CandidateSet cand = all_candidates(catalog.size());
  History window_history;
  std::vector<WindowStep> window_steps;

  std::vector<double> p = low.preference(session.history());
  while (!session.done()) {
    const std::size_t t = session.t();
    if (t % M == 0) {
      if (agents.high) target = agents.high->act(agents.high->state(session.history()), rng, eval);
      target.window_start = t;
      target.window_length = 0;
      gate = agents.force_gate || (agents.high ? target.valid : true);
      cand = agents.use_filter && agents.high ? filter_candidates(target.g, catalog, cfg.top_l)
                                              : all_candidates(catalog.size());
      window_history = session.history();
      window_steps.clear();
      WindowRecord w;
      w.start = t;
      w.g = target.g;
      w.valid = gate;
      out.log.windows.push_back(std::move(w));
    }

    const auto s_l = build_low_state(p, target.g);
    std::size_t item = 0;
    double logprob = 0.0;
    if (agents.uniform_policy) {
      item = static_cast<std::size_t>(num::uniform01(rng) * static_cast<double>(catalog.size())) % catalog.size();
      logprob = -std::log(static_cast<double>(catalog.size()));
    } else {
      const auto choice = low.act(s_l, cand.mask, rng, eval);
      item = choice.item;
      logprob = choice.logprob;
    }

    History before = session.history();
    const StepResult res = session.step(item);
    auto p_next = low.preference(session.history());

    StepRecord rec;
    rec.item = item;
    rec.accuracy = res.feedback.accuracy;
    rec.fairness = fairness_reward(catalog.pop(item));
    rec.guiding = guiding_reward(p, p_next, target.g);
    rec.low = low_reward(rec.accuracy, rec.guiding, gate, agents.lambda_g);
    rec.valid = gate;
    rec.window = out.log.windows.size() - 1;
    out.log.steps.push_back(rec);
    window_steps.push_back({rec.accuracy, rec.fairness});

    if (collect) {
      LowTransition tr;
      tr.history = std::move(before);
      tr.g = target.g;
      tr.mask = cand.mask;
      tr.item = item;
      tr.logprob = logprob;
      tr.reward = rec.low;
      tr.next_history = session.history();
      tr.done = res.done;
      out.low.push_back(std::move(tr));
    }

    if (window_steps.size() == M || res.done) {
      WindowRecord& w = out.log.windows.back();
      w.length = window_steps.size();
      w.reward = high_reward(window_steps, gate, cfg.lambda_f);
      if (collect && agents.high) {
        HighTransition tr;
        tr.history = window_history;
        tr.target = target;
        tr.target.window_length = w.length;
        tr.reward = w.reward;
        tr.next_history = session.history();
        tr.done = res.done;
        out.high.push_back(std::move(tr));
      }
    }
    p = std::move(p_next);
  }
  out.log.cause = session.cause();
  out.log.exposure = session.exposure();
  return out;
}

EvalReport evaluate(const World& world, const EnvConfig& env, const TrainConfig& cfg, const Assembly& agents,
                    std::size_t episodes, std::uint64_t seed, long long epoch) {
  if (episodes == 0) throw std::invalid_argument("evaluate: episodes must be >= 1");
  std::vector<EpisodeLog> logs(episodes);
  parallel_for(episodes, cfg.workers, [&](std::size_t k) {
    const std::uint64_t es = num::derive_seed(seed, {kEvalStream, k});
    logs[k] = rollout_episode(world.catalog, pick_user(world.users, es), env, agents, cfg, Mode::eval, es).log;
  });
  return aggregate(logs, world.catalog.tail_flags(), epoch);
}

TrainResult train(const World& world, const EnvConfig& env, const TrainConfig& cfg, const EpochCallback& on_epoch) {
  validate(cfg);
  validate(env);
  Assembly agents = make_variant(cfg, world.catalog);
  TrainResult result;
  result.initial = agents.checkpoint();
  result.train_exposure.assign(world.catalog.size(), 0);
  const bool learn = !agents.uniform_policy;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<UpdateStats> low_stats, high_stats;
    for (std::size_t first = 0; first < cfg.episodes_per_epoch; first += cfg.episodes_per_update) {
      const std::size_t n = std::min(cfg.episodes_per_update, cfg.episodes_per_epoch - first);
      std::vector<Rollout> rollouts(n);
      parallel_for(n, cfg.workers, [&](std::size_t k) {
        const std::uint64_t es = num::derive_seed(cfg.seed, {kTrainStream, epoch, first + k});
        rollouts[k] = rollout_episode(world.catalog, pick_user(world.users, es), env, agents, cfg, Mode::train, es);
      });
      std::vector<LowTransition> low_batch;
      std::vector<HighTransition> high_batch;
      for (auto& r : rollouts) {
        for (std::size_t i = 0; i < r.log.exposure.size(); ++i) result.train_exposure[i] += r.log.exposure[i];
        std::move(r.low.begin(), r.low.end(), std::back_inserter(low_batch));
        std::move(r.high.begin(), r.high.end(), std::back_inserter(high_batch));
      }
      if (!learn) continue;
      try {
        if (!low_batch.empty()) low_stats.push_back(agents.low->update(low_batch, cfg.low));
        if (agents.high && !high_batch.empty()) high_stats.push_back(agents.high->update(high_batch, cfg.high));
      } catch (const std::runtime_error& e) {
        std::ostringstream msg;
        msg << "training diverged: " << e.what() << " [variant=" << to_string(cfg.variant) << " seed=" << cfg.seed
            << " epoch=" << epoch << " first_episode=" << first << " low_batch=" << low_batch.size()
            << " high_batch=" << high_batch.size() << "]";
        throw TrainingDiverged(msg.str(), agents.checkpoint());
      }
    }
    EpochStats es;
    es.low = mean_stats(low_stats);
    es.high = mean_stats(high_stats);
    es.updates = low_stats.size();
    result.stats.push_back(es);
    result.reports.push_back(
        evaluate(world, env, cfg, agents, cfg.eval_episodes, cfg.seed, static_cast<long long>(epoch)));
    if (on_epoch) on_epoch(epoch, agents, result.reports.back());
  }
  result.final = agents.checkpoint();
  return result;
}

}  // namespace hrl4pfg
