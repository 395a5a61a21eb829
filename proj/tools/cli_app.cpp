#include "cli_app.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "hrl4pfg/csv.hpp"
#include "hrl4pfg/num/checkpoint.hpp"
#include "hrl4pfg/trainer.hpp"

namespace hrl4pfg::app {

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
  if (!f) throw std::runtime_error("write failed for " + path.string());
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw std::runtime_error("cannot create output directory " + dir.string());
}

fs::path seed_dir(const fs::path& out, std::uint64_t seed) { return out / ("seed_" + std::to_string(seed)); }

std::string axis_label(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::string shortest(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::size_t as_count(double v, const std::string& axis) {
  if (!(v >= 1.0) || v != std::floor(v)) throw std::invalid_argument("sweep: " + axis + " values must be integers >= 1");
  return static_cast<std::size_t>(v);
}

}  // namespace

World load_world(const RunConfig& cfg, std::uint64_t seed) {
  const auto& f = cfg.files;
  if (!f.log.empty()) {
    if (f.catalog.empty()) throw std::invalid_argument("env.log_file needs env.catalog_file for item embeddings");
    const ItemCatalog base = load_catalog_csv(f.catalog);
    const auto log = load_interaction_log(f.log);
    return ingest_log(log, base.embeddings(), cfg.env);
  }
  if (!f.catalog.empty() || !f.users.empty()) {
    if (f.catalog.empty() || f.users.empty())
      throw std::invalid_argument("env.catalog_file and env.users_file must be given together");
    World w{load_catalog_csv(f.catalog), load_users_csv(f.users)};
    if (w.catalog.size() != cfg.env.num_items || w.catalog.dim() != cfg.env.dim)
      throw std::invalid_argument("catalog file does not match env.num_items / env.dim");
    return w;
  }
  return generate_world(cfg.env, seed);
}

void write_provenance(const fs::path& dir, const RunConfig& cfg, const std::string& command) {
  ensure_dir(dir);
  RunConfig echoed = cfg;
  echoed.out = dir.string();
  write_text(dir / "config.json", to_json(echoed).dump(2) + "\n");
  Json p;
  p["version"] = kVersion;
  p["command"] = command;
  p["variant"] = to_string(cfg.train.variant);
  p["seeds"] = cfg.seeds;
  write_text(dir / "provenance.json", p.dump(2) + "\n");
}

void cmd_gen_env(const RunConfig& cfg, std::uint64_t seed, const fs::path& out) {
  RunConfig c = cfg;
  c.seeds = {seed};
  const World w = load_world(c, seed);
  write_provenance(out, c, "gen-env");
  save_catalog_csv(out / "catalog.csv", w.catalog);
  save_users_csv(out / "users.csv", w.users);
}

std::vector<EvalReport> cmd_train(const RunConfig& cfg, const fs::path& out) {
  write_provenance(out, cfg, "train");
  const std::string variant = to_string(cfg.train.variant);
  std::vector<EvalReport> finals;
  for (std::uint64_t seed : cfg.seeds) {
    const fs::path dir = seed_dir(out, seed);
    ensure_dir(dir);
    const World world = load_world(cfg, seed);
    TrainConfig tc = cfg.train;
    tc.seed = seed;
    auto on_epoch = [&](std::size_t epoch, const Assembly& agents, const EvalReport&) {
      if (cfg.checkpoint_every > 0 && (epoch + 1) % cfg.checkpoint_every == 0) {
        num::write_checkpoint(dir / ("checkpoint_" + variant + "_epoch" + std::to_string(epoch + 1) + ".bin"),
                              agents.checkpoint());
      }
    };
    TrainResult r;
    try {
      r = train(world, cfg.env, tc, on_epoch);
    } catch (const TrainingDiverged& e) {
      num::write_checkpoint(dir / ("diverged_" + variant + ".bin"), e.state());
      write_text(dir / "diagnostic.txt", std::string(e.what()) + "\n");
      throw;
    }
    write_reports_csv(dir / ("metrics_" + variant + ".csv"), r.reports);
    write_text(dir / ("metrics_" + variant + ".json"), reports_json(r.reports, variant));
    num::write_checkpoint(dir / ("checkpoint_" + variant + ".bin"), r.final);
    finals.push_back(r.reports.empty() ? EvalReport{} : r.reports.back());
  }
  return finals;
}

EvalReport cmd_eval(const RunConfig& cfg, const fs::path& checkpoint, std::uint64_t seed, std::size_t episodes,
                    const fs::path& out) {
  if (episodes == 0) throw std::invalid_argument("eval: episodes must be >= 1");
  RunConfig c = cfg;
  c.seeds = {seed};
  const World world = load_world(c, seed);
  TrainConfig tc = c.train;
  tc.seed = seed;
  Assembly agents = make_variant(tc, world.catalog);
  agents.load(num::read_checkpoint(checkpoint));
  const EvalReport rep = evaluate(world, c.env, tc, agents, episodes, seed);
  write_provenance(out, c, "eval");
  const std::string variant = to_string(tc.variant);
  const EvalReport one[] = {rep};
  write_reports_csv(out / ("eval_" + variant + ".csv"), one);
  write_text(out / ("eval_" + variant + ".json"), report_json(rep, true));
  return rep;
}

std::string sweep_csv_header() { return "axis,axis_value,seed,variant," + report_csv_header(); }

void cmd_sweep(const RunConfig& cfg, const std::string& axis, const std::vector<double>& values, const fs::path& out) {
  if (values.empty()) throw std::invalid_argument("sweep: empty value list");
  if (axis != "lambda_g" && axis != "M" && axis != "W")
    throw std::invalid_argument("sweep: unknown axis '" + axis + "' (expected lambda_g|M|W)");
  write_provenance(out, cfg, "sweep " + axis);
  std::ostringstream table;
  table << sweep_csv_header() << "\r\n";
  for (double v : values) {
    RunConfig c = cfg;
    if (axis == "lambda_g") {
      if (!(v >= 0.0)) throw std::invalid_argument("sweep: lambda_g values must be >= 0");
      c.train.lambda_g = v;
    } else if (axis == "M") {
      c.train.macro_interval = as_count(v, axis);
    } else {
      c.env.exit_w = as_count(v, axis);
    }
    const fs::path cell = out / (axis + "_" + axis_label(v));
    const auto finals = cmd_train(c, cell);
    for (std::size_t k = 0; k < c.seeds.size(); ++k) {
      table << axis << ',' << shortest(v) << ',' << c.seeds[k] << ',' << to_string(c.train.variant) << ','
            << report_csv_row(finals[k]) << "\r\n";
    }
  }
  write_text(out / ("sweep_" + axis + ".csv"), table.str());
}

int run_cli(int argc, char** argv) {
  CLI::App cli{"Hierarchical RL recommender with fairness-guided targets"};
  cli.set_version_flag("--version", std::string(kVersion));
  cli.require_subcommand(1);

  std::string config_path, out_dir, variant, checkpoint, axis, values;
  std::uint64_t seed = 0;
  std::size_t workers = 0, episodes = 0;

  auto common = [&](CLI::App* sub, bool with_variant) {
    sub->add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "Run seed (replaces the configured seed list)");
    sub->add_option("--out", out_dir, "Output directory");
    sub->add_option("--workers", workers, "Parallel rollout workers");
    if (with_variant) sub->add_option("--variant", variant, "full | wo-hie | wo-tc | wo-fm | random");
  };
  auto* gen = cli.add_subcommand("gen-env", "Write a synthetic catalog and user population");
  common(gen, false);
  auto* tr = cli.add_subcommand("train", "Train and write per-epoch metrics and checkpoints");
  common(tr, true);
  auto* ev = cli.add_subcommand("eval", "Evaluate a checkpoint with the deterministic policy");
  common(ev, true);
  ev->add_option("--checkpoint", checkpoint, "Checkpoint file")->required()->check(CLI::ExistingFile);
  ev->add_option("--episodes", episodes, "Evaluation episodes (default: trainer.eval_episodes)");
  auto* sw = cli.add_subcommand("sweep", "Train/evaluate across one hyperparameter axis");
  common(sw, true);
  sw->add_option("--axis", axis, "lambda_g | M | W")->required();
  sw->add_option("--values", values, "Comma-separated axis values")->required();

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return cli.exit(e);
  }

  try {
    RunConfig cfg = load_config(config_path, hrl4pfg_environment());
    const bool seed_given = cli.get_subcommands().front()->count("--seed") > 0;
    if (seed_given) cfg.seeds = {seed};
    if (!variant.empty()) cfg.train.variant = parse_variant(variant);
    if (workers > 0) cfg.train.workers = workers;
    if (!out_dir.empty()) cfg.out = out_dir;
    const fs::path out = cfg.out;

    if (gen->parsed()) {
      cmd_gen_env(cfg, cfg.seeds.front(), out);
    } else if (tr->parsed()) {
      cmd_train(cfg, out);
    } else if (ev->parsed()) {
      const auto rep = cmd_eval(cfg, checkpoint, cfg.seeds.front(), episodes ? episodes : cfg.train.eval_episodes, out);
      std::cout << report_csv_header() << "\n" << report_csv_row(rep) << "\n";
    } else if (sw->parsed()) {
      std::vector<double> vs;
      std::stringstream ss(values);
      std::string item;
      while (std::getline(ss, item, ',')) {
        if (!item.empty()) vs.push_back(csv::parse_double(item, "--values"));
      }
      cmd_sweep(cfg, axis, vs, out);
    }
    return 0;
  } catch (const TrainingDiverged& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace hrl4pfg::app
