#include <gtest/gtest.h>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iterator>
#include <sstream>

#include "cli_app.hpp"
#include "hrl4pfg/csv.hpp"

using namespace hrl4pfg;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("hrl4pfg_cli_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  EXPECT_TRUE(f.good()) << p;
  return {std::istreambuf_iterator<char>(f), {}};
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

RunConfig tiny_config() {
  RunConfig c = config_from_json(Json::parse(R"({
    "env": {"num_items": 30, "dim": 4, "num_users": 20},
    "agents": {"high_hidden": 8, "low_hidden": 8, "L": 6},
    "trainer": {"epochs": 2, "episodes_per_epoch": 4, "episodes_per_update": 4, "eval_episodes": 4},
    "seeds": [1, 2]
  })"));
  return c;
}

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "hrl4pfg");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return app::run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace

TEST(Config, DefaultsRoundTrip) {
  const Json j = to_json(RunConfig{});
  EXPECT_EQ(to_json(config_from_json(j)), j);
  for (const char* section : {"env", "agents", "trainer", "seeds", "out"}) EXPECT_TRUE(j.contains(section)) << section;
  EXPECT_EQ(j["env"]["num_items"], 200);
  EXPECT_EQ(j["env"]["exit_w"], 3);
  EXPECT_EQ(j["env"]["max_len"], 30);
  EXPECT_EQ(j["trainer"]["M"], 3);
  EXPECT_EQ(j["trainer"]["epochs"], 50);
}

TEST(Config, PartialDocumentKeepsDefaults) {
  const RunConfig c = config_from_json(Json::parse(R"({"trainer": {"M": 10}, "agents": {"lambda_g": 1.0}})"));
  EXPECT_EQ(c.train.macro_interval, 10u);
  EXPECT_EQ(c.train.lambda_g, 1.0);
  EXPECT_EQ(c.env.num_items, RunConfig{}.env.num_items);
}

TEST(Config, UnknownKeyRejectedWithPath) {
  try {
    config_from_json(Json::parse(R"({"agents": {"lamda_g": 0.1}})"));
    FAIL() << "expected rejection";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("agents.lamda_g"), std::string::npos) << e.what();
  }
  EXPECT_THROW(config_from_json(Json::parse(R"({"extra": 1})")), std::invalid_argument);
  EXPECT_THROW(config_from_json(Json::parse(R"({"env": 3})")), std::invalid_argument);
}

TEST(Config, IllTypedValueNamesPath) {
  try {
    config_from_json(Json::parse(R"({"env": {"exit_w": "three"}})"));
    FAIL() << "expected rejection";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("env.exit_w"), std::string::npos) << e.what();
  }
  EXPECT_THROW(config_from_json(Json::parse(R"({"env": {"num_items": -5}})")), std::invalid_argument);
  EXPECT_THROW(config_from_json(Json::parse(R"({"seeds": []})")), std::invalid_argument);
  EXPECT_THROW(config_from_json(Json::parse(R"({"trainer": {"variant": "nope"}})")), std::invalid_argument);
}

TEST(Config, EnvironmentOverrides) {
  Json doc = Json::parse(R"({"trainer": {"M": 5}})");
  apply_env_overrides(doc, {{"HRL4PFG_TRAINER__M", "7"},
                            {"HRL4PFG_agents__LAMBDA_G", "0.25"},
                            {"HRL4PFG_OUT", "runs/x"},
                            {"HRL4PFG_SEEDS", "[9, 10]"},
                            {"HRL4PFG_TRAINER__VARIANT", "wo-hie"},
                            {"OTHER_VAR", "ignored"}});
  const RunConfig c = config_from_json(doc);
  EXPECT_EQ(c.train.macro_interval, 7u);
  EXPECT_EQ(c.train.lambda_g, 0.25);
  EXPECT_EQ(c.out, "runs/x");
  EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{9, 10}));
  EXPECT_EQ(c.train.variant, Variant::wo_hie);
  Json bad = Json::object();
  EXPECT_THROW(apply_env_overrides(bad, {{"HRL4PFG_TRAINER__NOPE", "1"}}), std::invalid_argument);
}

TEST(Config, LoadFromFileAppliesOverrides) {
  const fs::path dir = scratch("load");
  fs::create_directories(dir);
  std::ofstream(dir / "c.json") << R"({"env": {"exit_w": 4}})";
  const RunConfig c = load_config(dir / "c.json", {{"HRL4PFG_ENV__EXIT_W", "5"}});
  EXPECT_EQ(c.env.exit_w, 5u);
  EXPECT_EQ(load_config({}, {}).env.exit_w, 3u);
  fs::remove_all(dir);
}

TEST(GenEnv, ByteIdenticalAndSized) {
  const fs::path a = scratch("gen_a"), b = scratch("gen_b");
  const RunConfig cfg;
  app::cmd_gen_env(cfg, 11, a);
  app::cmd_gen_env(cfg, 11, b);
  for (const char* f : {"catalog.csv", "users.csv", "config.json", "provenance.json"}) {
    EXPECT_TRUE(fs::exists(a / f)) << f;
  }
  EXPECT_EQ(slurp(a / "catalog.csv"), slurp(b / "catalog.csv"));
  EXPECT_EQ(slurp(a / "users.csv"), slurp(b / "users.csv"));
  EXPECT_EQ(lines(slurp(a / "catalog.csv")).size(), 1u + 200u);
  EXPECT_EQ(lines(slurp(a / "users.csv")).size(), 1u + cfg.env.num_users);
  const fs::path c = scratch("gen_c");
  app::cmd_gen_env(cfg, 12, c);
  EXPECT_NE(slurp(a / "catalog.csv"), slurp(c / "catalog.csv"));
  for (const auto& p : {a, b, c}) fs::remove_all(p);
}

TEST(GenEnv, PopularityFollowsZipfRanking) {
  const fs::path dir = scratch("zipf");
  const RunConfig cfg;
  for (std::uint64_t seed : {1, 2, 3}) {
    app::cmd_gen_env(cfg, seed, dir);
    const ItemCatalog cat = load_catalog_csv(dir / "catalog.csv");
    const auto rank = zipf_ranks(cfg.env, seed);
    std::vector<double> by_rank(cat.size());
    for (std::size_t i = 0; i < cat.size(); ++i) by_rank[rank[i]] = cat.pops()[i];
    for (std::size_t r = 1; r < by_rank.size(); ++r) ASSERT_LE(by_rank[r], by_rank[r - 1]) << "rank " << r;
    EXPECT_GT(by_rank.front(), by_rank.back());
  }
  fs::remove_all(dir);
}

TEST(GenEnv, UnwritableOutputErrors) {
  const fs::path dir = scratch("unwritable");
  fs::create_directories(dir.parent_path());
  std::ofstream(dir) << "a file, not a directory";
  EXPECT_ANY_THROW(app::cmd_gen_env(RunConfig{}, 1, dir / "sub"));
  fs::remove_all(dir);
}

TEST(Train, ZeroEpochsHeaderOnly) {
  const fs::path dir = scratch("zero");
  RunConfig cfg = tiny_config();
  cfg.train.epochs = 0;
  cfg.seeds = {3};
  app::cmd_train(cfg, dir);
  const auto csv = lines(slurp(dir / "seed_3" / "metrics_full.csv"));
  ASSERT_EQ(csv.size(), 1u);
  EXPECT_EQ(csv[0], report_csv_header() + "\r");
  EXPECT_TRUE(fs::exists(dir / "seed_3" / "checkpoint_full.bin"));
  fs::remove_all(dir);
}

TEST(Train, VariantTaggedOutputsAndRows) {
  const fs::path dir = scratch("variant");
  RunConfig cfg = tiny_config();
  cfg.train.variant = Variant::wo_hie;
  const auto finals = app::cmd_train(cfg, dir);
  ASSERT_EQ(finals.size(), 2u);
  for (std::uint64_t s : cfg.seeds) {
    const fs::path sd = dir / ("seed_" + std::to_string(s));
    EXPECT_TRUE(fs::exists(sd / "metrics_wo-hie.csv"));
    EXPECT_TRUE(fs::exists(sd / "metrics_wo-hie.json"));
    EXPECT_TRUE(fs::exists(sd / "checkpoint_wo-hie.bin"));
    EXPECT_EQ(lines(slurp(sd / "metrics_wo-hie.csv")).size(), 1u + cfg.train.epochs);
    const Json j = Json::parse(slurp(sd / "metrics_wo-hie.json"));
    EXPECT_EQ(j["variant"], "wo-hie");
    EXPECT_EQ(j["reports"].size(), cfg.train.epochs);
  }
  fs::remove_all(dir);
}

TEST(Train, IntermediateCheckpoints) {
  const fs::path dir = scratch("ckpt_every");
  RunConfig cfg = tiny_config();
  cfg.seeds = {1};
  cfg.train.epochs = 4;
  cfg.checkpoint_every = 2;
  app::cmd_train(cfg, dir);
  EXPECT_TRUE(fs::exists(dir / "seed_1" / "checkpoint_full_epoch2.bin"));
  EXPECT_TRUE(fs::exists(dir / "seed_1" / "checkpoint_full_epoch4.bin"));
  EXPECT_FALSE(fs::exists(dir / "seed_1" / "checkpoint_full_epoch1.bin"));
  EXPECT_EQ(slurp(dir / "seed_1" / "checkpoint_full_epoch4.bin"), slurp(dir / "seed_1" / "checkpoint_full.bin"));
  fs::remove_all(dir);
}

TEST(Train, SmokeConfigUnderSixtySeconds) {
  const fs::path dir = scratch("smoke");
  RunConfig cfg;
  cfg.seeds = {1};
  cfg.train.epochs = 5;
  cfg.train.episodes_per_epoch = 20;
  cfg.train.workers = 1;
  const auto t0 = std::chrono::steady_clock::now();
  const auto finals = app::cmd_train(cfg, dir);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_LT(secs, 60.0);
  ASSERT_EQ(finals.size(), 1u);
  EXPECT_EQ(finals[0].epoch, 4);  // zero-based
  fs::remove_all(dir);
}

TEST(Eval, DeterministicAndSingleEpisodeSd) {
  const fs::path dir = scratch("eval");
  RunConfig cfg = tiny_config();
  cfg.seeds = {1};
  app::cmd_train(cfg, dir / "train");
  const fs::path ckpt = dir / "train" / "seed_1" / "checkpoint_full.bin";
  const EvalReport a = app::cmd_eval(cfg, ckpt, 5, 6, dir / "e1");
  const EvalReport b = app::cmd_eval(cfg, ckpt, 5, 6, dir / "e2");
  EXPECT_EQ(report_csv_row(a), report_csv_row(b));
  EXPECT_EQ(slurp(dir / "e1" / "eval_full.csv"), slurp(dir / "e2" / "eval_full.csv"));
  EXPECT_EQ(slurp(dir / "e1" / "eval_full.json"), slurp(dir / "e2" / "eval_full.json"));
  EXPECT_EQ(Json::parse(slurp(dir / "e1" / "eval_full.json"))["episodes"].size(), 6u);

  const EvalReport one = app::cmd_eval(cfg, ckpt, 5, 1, dir / "e3");
  EXPECT_EQ(one.r_cum.sd, 0.0);
  EXPECT_EQ(one.r_single.sd, 0.0);
  EXPECT_EQ(one.len.sd, 0.0);
  EXPECT_THROW(app::cmd_eval(cfg, ckpt, 5, 0, dir / "e4"), std::invalid_argument);
  fs::remove_all(dir);
}

TEST(Eval, RandomVariantGiniPositive) {
  const fs::path dir = scratch("eval_random");
  RunConfig cfg;
  cfg.seeds = {1};
  cfg.train.variant = Variant::random;
  cfg.train.epochs = 0;
  app::cmd_train(cfg, dir / "train");
  const EvalReport r = app::cmd_eval(cfg, dir / "train" / "seed_1" / "checkpoint_random.bin", 1, 50, dir / "e");
  EXPECT_GT(r.gini, 0.0);
  fs::remove_all(dir);
}

TEST(Eval, CheckpointMismatchNamesTensor) {
  const fs::path dir = scratch("mismatch");
  RunConfig cfg = tiny_config();
  cfg.seeds = {1};
  cfg.train.epochs = 0;
  app::cmd_train(cfg, dir / "train");
  RunConfig wider = cfg;
  wider.train.low_agent.hidden = 16;
  try {
    app::cmd_eval(wider, dir / "train" / "seed_1" / "checkpoint_full.bin", 1, 2, dir / "e");
    FAIL() << "expected mismatch";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("lra.actor.l0.w"), std::string::npos) << e.what();
  }
  RunConfig wo = cfg;
  wo.train.variant = Variant::wo_hie;
  app::cmd_train(wo, dir / "wo");
  try {
    app::cmd_eval(cfg, dir / "wo" / "seed_1" / "checkpoint_wo-hie.bin", 1, 2, dir / "e");
    FAIL() << "expected missing tensor";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("hra."), std::string::npos) << e.what();
  }
  fs::remove_all(dir);
}

TEST(Sweep, RowCountAndValues) {
  const fs::path dir = scratch("sweep");
  RunConfig cfg = tiny_config();
  cfg.train.epochs = 1;
  app::cmd_sweep(cfg, "lambda_g", {0.1}, dir);
  auto rows = lines(slurp(dir / "sweep_lambda_g.csv"));
  ASSERT_EQ(rows.size(), 1u + cfg.seeds.size());
  EXPECT_EQ(rows[0], app::sweep_csv_header() + "\r");
  for (std::size_t k = 1; k < rows.size(); ++k) EXPECT_EQ(rows[k].rfind("lambda_g,0.1,", 0), 0u) << rows[k];

  app::cmd_sweep(cfg, "W", {2, 4, 6}, dir);
  rows = lines(slurp(dir / "sweep_W.csv"));
  EXPECT_EQ(rows.size(), 1u + 3 * cfg.seeds.size());
  EXPECT_TRUE(fs::exists(dir / "W_4" / "seed_2" / "metrics_full.csv"));
  fs::remove_all(dir);
}

TEST(Sweep, RejectsEmptyAndInvalidAxes) {
  const RunConfig cfg = tiny_config();
  const fs::path dir = scratch("sweep_bad");
  EXPECT_THROW(app::cmd_sweep(cfg, "M", {}, dir), std::invalid_argument);
  EXPECT_THROW(app::cmd_sweep(cfg, "eta", {0.1}, dir), std::invalid_argument);
  EXPECT_THROW(app::cmd_sweep(cfg, "M", {0}, dir), std::invalid_argument);
  EXPECT_THROW(app::cmd_sweep(cfg, "M", {1.5}, dir), std::invalid_argument);
  EXPECT_THROW(app::cmd_sweep(cfg, "lambda_g", {-1}, dir), std::invalid_argument);
  fs::remove_all(dir);
}

TEST(Provenance, EveryOutputDirectoryRecordsConfigSeedsVersion) {
  const fs::path dir = scratch("prov");
  RunConfig cfg = tiny_config();
  cfg.train.epochs = 1;
  app::cmd_train(cfg, dir);
  const Json p = Json::parse(slurp(dir / "provenance.json"));
  EXPECT_EQ(p["version"], kVersion);
  EXPECT_EQ(p["command"], "train");
  EXPECT_EQ(p["seeds"], Json(cfg.seeds));
  const RunConfig echoed = config_from_json(Json::parse(slurp(dir / "config.json")));
  EXPECT_EQ(echoed.out, dir.string());
  RunConfig expect = cfg;
  expect.out = dir.string();
  EXPECT_EQ(to_json(echoed), to_json(expect));
  fs::remove_all(dir);
}

TEST(RunCli, ExitCodes) {
  const fs::path dir = scratch("runcli");
  fs::create_directories(dir);
  std::ofstream(dir / "tiny.json") << to_json(tiny_config()).dump();
  std::ofstream(dir / "bad.json") << R"({"trainer": {"bogus": 1}})";
  const std::string cfg = (dir / "tiny.json").string();
  EXPECT_EQ(cli({"gen-env", "--config", cfg, "--seed", "4", "--out", (dir / "g").string()}), 0);
  EXPECT_EQ(Json::parse(slurp(dir / "g" / "provenance.json"))["seeds"], Json::parse("[4]"));
  EXPECT_EQ(cli({"train", "--config", cfg, "--seed", "1", "--variant", "random", "--out", (dir / "t").string()}), 0);
  EXPECT_TRUE(fs::exists(dir / "t" / "seed_1" / "metrics_random.csv"));
  EXPECT_EQ(cli({"eval", "--config", cfg, "--variant", "random", "--seed", "1", "--episodes", "3", "--checkpoint",
                 (dir / "t" / "seed_1" / "checkpoint_random.bin").string(), "--out", (dir / "e").string()}),
            0);
  EXPECT_EQ(cli({"train", "--config", (dir / "bad.json").string(), "--out", (dir / "x").string()}), 2);
  EXPECT_EQ(cli({"train", "--config", cfg, "--variant", "bogus", "--out", (dir / "x").string()}), 2);
  EXPECT_EQ(cli({"sweep", "--config", cfg, "--axis", "M", "--values", "", "--out", (dir / "x").string()}), 2);
  EXPECT_NE(cli({"frobnicate"}), 0);
  EXPECT_NE(cli({}), 0);
  EXPECT_NE(cli({"eval", "--config", cfg}), 0);
  fs::remove_all(dir);
}
