#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "hrl4pfg/env.hpp"
#include "support.hpp"

using namespace hrl4pfg;
namespace testkit = hrl4pfg::testkit;
using num::Rng;
using num::Tensor;

namespace {

EnvConfig small_config(std::size_t w = 3, std::size_t n = 5) {
  EnvConfig cfg;
  cfg.num_items = 20;
  cfg.dim = 4;
  cfg.num_users = 10;
  cfg.exit_w = w;
  cfg.history_len = n;
  return cfg;
}

// Items 0..3 popular (top 20% of 20), the rest tail.
ItemCatalog scripted_catalog(Rng& rng) {
  std::vector<double> emb;
  for (std::size_t i = 0; i < 20; ++i) {
    const auto v = testkit::unit(testkit::random_vector(rng, 4));
    emb.insert(emb.end(), v.begin(), v.end());
  }
  std::vector<double> pop(20);
  for (std::size_t i = 0; i < 20; ++i) pop[i] = i < 4 ? 0.9 - 0.01 * static_cast<double>(i) : 0.1;
  return ItemCatalog(Tensor::matrix(20, 4, std::move(emb)), std::move(pop));
}

UserProfile user_along(std::vector<double> u, double eta = 0.1, double noise = 0.05) {
  return UserProfile{0, testkit::unit(std::move(u)), eta, noise};
}

double norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

TEST(EnvConfigTest, ValidateRejectsBadSettings) {
  EnvConfig c;
  EXPECT_NO_THROW(validate(c));
  c.max_len = 40;
  EXPECT_THROW(validate(c), std::invalid_argument);
  c = {};
  c.exit_w = 0;
  EXPECT_THROW(validate(c), std::invalid_argument);
  c = {};
  c.history_len = 0;
  EXPECT_THROW(validate(c), std::invalid_argument);
  c = {};
  c.eta = 1.0;
  EXPECT_THROW(validate(c), std::invalid_argument);
}

TEST(Reset, SameSeedSameInitialState) {
  const auto w = generate_world(EnvConfig{}, 4);
  const Session a = reset(w.catalog, w.users[7], EnvConfig{}, 99);
  const Session b = reset(w.catalog, w.users[7], EnvConfig{}, 99);
  EXPECT_EQ(a.history(), b.history());
  EXPECT_EQ(a.peek_preference(), b.peek_preference());
  EXPECT_EQ(a.t(), 0u);
  EXPECT_EQ(a.popular_run(), 0u);
}

TEST(Reset, HistoryLengthIsN) {
  Rng rng(1);
  const auto cat = scripted_catalog(rng);
  const Session s = reset(cat, user_along({1, 0, 0, 0}), small_config(3, 3), 5);
  EXPECT_EQ(s.history().size(), 3u);
}

TEST(Reset, BootstrapItemsHavePositiveExpectedFeedback) {
  const auto w = generate_world(EnvConfig{}, 2);
  for (std::size_t u = 0; u < 100; ++u) {
    const Session s = reset(w.catalog, w.users[u], EnvConfig{}, u);
    for (const auto& it : s.history()) {
      EXPECT_TRUE(it.positive);
      EXPECT_GE(expected_feedback(w.users[u].preference, w.catalog.embedding(it.item)), kPositiveThreshold);
    }
  }
}

TEST(Reset, PeekEqualsSeededPreference) {
  const auto w = generate_world(EnvConfig{}, 3);
  const Session s = reset(w.catalog, w.users[0], EnvConfig{}, 1);
  EXPECT_EQ(s.peek_preference(), w.users[0].preference);
}

TEST(Step, ThreeConsecutivePopularItemsExit) {
  Rng rng(1);
  const auto cat = scripted_catalog(rng);
  Session s = reset(cat, user_along({1, 1, 0, 0}), small_config(3), 7);
  EXPECT_FALSE(s.step(0).done);
  EXPECT_FALSE(s.step(1).done);
  EXPECT_TRUE(s.step(2).done);
  EXPECT_EQ(s.cause(), ExitCause::popularity_exit);
  EXPECT_THROW(s.step(5), std::logic_error);
}

TEST(Step, TailItemResetsCounter) {
  Rng rng(1);
  const auto cat = scripted_catalog(rng);
  Session s = reset(cat, user_along({1, 1, 0, 0}), small_config(3), 7);
  s.step(0);
  EXPECT_EQ(s.popular_run(), 1u);
  s.step(1);
  EXPECT_EQ(s.popular_run(), 2u);
  EXPECT_FALSE(s.step(10).done);
  EXPECT_EQ(s.popular_run(), 0u);
}

TEST(Step, PerfectAlignmentWithoutNoiseGivesOne) {
  Rng rng(1);
  const auto cat = scripted_catalog(rng);
  const auto v = cat.embedding(12);
  Session s = reset(cat, user_along({v.begin(), v.end()}, 0.1, 0.0), small_config(), 7);
  EXPECT_DOUBLE_EQ(s.step(12).feedback.accuracy, 1.0);
}

TEST(Step, UnknownItemThrows) {
  Rng rng(1);
  const auto cat = scripted_catalog(rng);
  Session s = reset(cat, user_along({1, 0, 0, 0}), small_config(), 7);
  EXPECT_THROW(s.step(20), std::out_of_range);
}

TEST(Step, DriftClosedForm) {
  Rng rng(1);
  const auto cat = scripted_catalog(rng);
  const auto v = cat.embedding(9);
  // preference close to v so the feedback is positive despite noise
  std::vector<double> u0{v[0] + 0.1, v[1], v[2], v[3]};
  u0 = testkit::unit(u0);
  {
    Session s = reset(cat, user_along(u0, 0.0, 0.0), small_config(), 3);
    ASSERT_TRUE(s.step(9).feedback.positive);
    EXPECT_EQ(s.peek_preference(), u0);
  }
  Session s = reset(cat, user_along(u0, 0.5, 0.0), small_config(), 3);
  ASSERT_TRUE(s.step(9).feedback.positive);
  std::vector<double> expect(4);
  for (std::size_t k = 0; k < 4; ++k) expect[k] = 0.5 * u0[k] + 0.5 * v[k];
  expect = testkit::unit(expect);
  const auto got = s.peek_preference();
  for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(got[k], expect[k], 1e-12);
}

TEST(Step, NegativeFeedbackLeavesPreference) {
  Rng rng(1);
  const auto cat = scripted_catalog(rng);
  const auto v = cat.embedding(9);
  const UserProfile user = user_along({-v[0], -v[1], -v[2], -v[3]}, 0.5, 0.0);
  Session s = reset(cat, user, small_config(), 3);
  ASSERT_FALSE(s.step(9).feedback.positive);
  EXPECT_EQ(s.peek_preference(), user.preference);
}

TEST(EnvProperties, EpisodeInvariants) {
  Rng rng(31);
  EnvConfig cfg;
  const auto w = generate_world(cfg, 6);
  for (int c = 0; c < 150; ++c) {
    cfg.exit_w = 1 + testkit::index_below(rng, 6);
    cfg.max_len = testkit::index_below(rng, 2) ? 30 : 50;
    const auto& user = w.users[testkit::index_below(rng, w.users.size())];
    Session s = reset(w.catalog, user, cfg, c);
    std::size_t len = 0;
    while (!s.done()) {
      const auto item = testkit::index_below(rng, w.catalog.size());
      const auto r = s.step(item);
      ++len;
      ASSERT_GE(r.feedback.accuracy, 0.0);
      ASSERT_LE(r.feedback.accuracy, 1.0);
      ASSERT_LE(s.popular_run(), cfg.exit_w);
      ASSERT_NEAR(norm(s.peek_preference()), 1.0, 1e-12);
    }
    ASSERT_LE(len, cfg.max_len);
    ASSERT_EQ(len < cfg.max_len, s.cause() == ExitCause::popularity_exit);
    ASSERT_EQ(std::accumulate(s.exposure().begin(), s.exposure().end(), std::uint64_t{0}), len);
  }
}

TEST(EnvProperties, TailOnlyNeverExitsEarlyAndStationaryWithoutDrift) {
  Rng rng(32);
  EnvConfig cfg;
  cfg.eta = 0.0;
  const auto w = generate_world(cfg, 7);
  std::vector<std::size_t> tail_items;
  for (std::size_t i = 0; i < w.catalog.size(); ++i)
    if (w.catalog.is_tail(i)) tail_items.push_back(i);
  for (int c = 0; c < 100; ++c) {
    cfg.exit_w = 1 + testkit::index_below(rng, 8);
    const auto& user = w.users[testkit::index_below(rng, w.users.size())];
    Session s = reset(w.catalog, user, cfg, c);
    const auto u0 = s.peek_preference();
    while (!s.done()) {
      s.step(tail_items[testkit::index_below(rng, tail_items.size())]);
      ASSERT_EQ(s.peek_preference(), u0);
    }
    ASSERT_EQ(s.cause(), ExitCause::max_len);
    ASSERT_EQ(s.t(), cfg.max_len);
  }
}

TEST(EnvProperties, FeedbackStrictlyIncreasingInAlignment) {
  Rng rng(33);
  for (int c = 0; c < 200; ++c) {
    const auto u = testkit::unit(testkit::random_vector(rng, 5));
    const auto a = testkit::unit(testkit::random_vector(rng, 5));
    const auto b = testkit::unit(testkit::random_vector(rng, 5));
    const double da = num::dot(u, a), db = num::dot(u, b);
    if (std::abs(da - db) < 1e-9) continue;
    ASSERT_EQ(da < db, expected_feedback(u, a) < expected_feedback(u, b));
  }
}

TEST(World, DeterministicAndSeedSensitive) {
  const auto a = generate_world(EnvConfig{}, 11);
  const auto b = generate_world(EnvConfig{}, 11);
  const auto c = generate_world(EnvConfig{}, 12);
  EXPECT_EQ(a.catalog.embeddings(), b.catalog.embeddings());
  EXPECT_EQ(a.catalog.pops(), b.catalog.pops());
  EXPECT_NE(a.catalog.embeddings(), c.catalog.embeddings());
  ASSERT_EQ(a.users.size(), 1000u);
  for (std::size_t u = 0; u < a.users.size(); ++u) EXPECT_EQ(a.users[u].preference, b.users[u].preference);
}

TEST(World, PopularItemsClusterTogether) {
  const auto w = generate_world(EnvConfig{}, 5);
  const auto& cat = w.catalog;
  double pp = 0.0, tt = 0.0;
  std::size_t npp = 0, ntt = 0;
  for (std::size_t i = 0; i < cat.size(); ++i)
    for (std::size_t j = i + 1; j < cat.size(); ++j) {
      const double s = num::dot(cat.embedding(i), cat.embedding(j));
      if (cat.is_popular(i) && cat.is_popular(j)) pp += s, ++npp;
      if (cat.is_tail(i) && cat.is_tail(j)) tt += s, ++ntt;
    }
  EXPECT_GT(pp / static_cast<double>(npp), tt / static_cast<double>(ntt));
}

TEST(UsersCsv, RoundTrip) {
  const auto w = generate_world(EnvConfig{}, 9);
  const auto path = std::filesystem::temp_directory_path() / "hrl4pfg_users_roundtrip.csv";
  save_users_csv(path, w.users);
  const auto back = load_users_csv(path);
  ASSERT_EQ(back.size(), w.users.size());
  for (std::size_t u = 0; u < back.size(); ++u) {
    EXPECT_EQ(back[u].preference, w.users[u].preference);
    EXPECT_EQ(back[u].eta, w.users[u].eta);
    EXPECT_EQ(back[u].noise, w.users[u].noise);
  }
  std::filesystem::remove(path);
}

TEST(LogIngestion, FitsPopularityAndPreferences) {
  const Tensor emb = Tensor::matrix(5, 2, {1, 0, 0, 1, -1, 0, 0, -1, 0.6, 0.8});
  const std::vector<LogRecord> log{
      {10, 0, 1, 0.9}, {10, 1, 2, 0.8}, {11, 0, 3, 0.7}, {11, 2, 4, 0.1}, {12, 3, 5, 0.2},
  };
  EnvConfig cfg;
  cfg.dim = 2;
  cfg.num_items = 5;
  const World w = ingest_log(log, emb, cfg);
  // three users in the log, N_0 = 2, N_1 = 1, others never liked
  EXPECT_DOUBLE_EQ(w.catalog.pop(0), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(w.catalog.pop(1), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(w.catalog.pop(2), 1.0 / 6.0);
  ASSERT_EQ(w.users.size(), 2u);
  const double r = 1.0 / std::sqrt(2.0);
  EXPECT_NEAR(w.users[0].preference[0], r, 1e-12);
  EXPECT_NEAR(w.users[0].preference[1], r, 1e-12);
  EXPECT_EQ(w.users[1].preference, (std::vector<double>{1.0, 0.0}));
}

TEST(LogIngestion, RejectsBadFeedback) {
  const auto path = std::filesystem::temp_directory_path() / "hrl4pfg_bad_log.csv";
  {
    std::ofstream f(path);
    f << "user_id,item_id,timestamp,feedback\n1,0,0,1.5\n";
  }
  EXPECT_THROW(load_interaction_log(path), std::runtime_error);
  std::filesystem::remove(path);
}
