// SPDX-License-Identifier: Apache-2.0
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "doctest.h"
#include "stratdisc/errors.hpp"
#include "stratdisc/rng.hpp"
#include "stratdisc/trace.hpp"

using namespace stratdisc;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::path(STRATDISC_TEST_TMP) / "trace" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

const std::string kHeader = "pid,block,trial,ground_truth,clicks\n";
const std::string kTruth = "\"[0,4,8,48,24,-2,-4,-48,-24,2,4,24,48]\"";

}  // namespace

TEST_CASE("two-row example") {
  const auto dir = scratch("two");
  write(dir / "test.csv", kHeader + "a,test,0," + kTruth + ",3;4\n" + "a,test,1," + kTruth + ",\n");
  const auto env = Environment::standard();
  const auto rows = read_trials_csv((dir / "test.csv").string(), env);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].pid == "a");
  CHECK(rows[0].block == "test");
  CHECK(rows[0].trial == 0);
  CHECK(rows[0].trajectory.clicks == std::vector<NodeId>{3, 4});
  CHECK(rows[0].trajectory.truth[3] == 48);
  CHECK(rows[1].trajectory.clicks.empty());
  CHECK(replay(env, rows[1].trajectory).size() == 1);
  CHECK(trajectory_score(env, rows[0].trajectory) == doctest::Approx(4 + 8 + 48 - 2));
}

TEST_CASE("CSV round trip of random trajectories") {
  const auto dir = scratch("roundtrip");
  auto env = std::make_shared<const Environment>(Environment::standard());
  const RandomPolicy random;
  const auto d = synthesize_dataset(env, {&random}, {1.0}, 7, 5, 42);
  write_trials_csv(d.trials, (dir / "x.csv").string());
  const auto back = read_trials_csv((dir / "x.csv").string(), *env);
  REQUIRE(back.size() == d.trials.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].pid == d.trials[i].pid);
    CHECK(back[i].block == d.trials[i].block);
    CHECK(back[i].trial == d.trials[i].trial);
    CHECK(back[i].trajectory.truth == d.trials[i].trajectory.truth);
    CHECK(back[i].trajectory.clicks == d.trials[i].trajectory.clicks);
  }
}

TEST_CASE("malformed rows") {
  const auto dir = scratch("bad");
  const auto env = Environment::standard();
  auto expect_line = [&](const std::string& body, std::size_t line) {
    write(dir / "b.csv", body);
    try {
      read_trials_csv((dir / "b.csv").string(), env);
      FAIL("expected MalformedRow");
    } catch (const MalformedRow& e) {
      CHECK(e.line_number == line);
    }
  };
  expect_line(kHeader + "a,test,0," + kTruth + ",1\n" + "a,test,1," + kTruth + ",99\n", 3);
  expect_line(kHeader + "a,test,0," + kTruth + ",1;1\n", 2);
  expect_line(kHeader + "a,test,0,\"[0,1]\",1\n", 2);
  expect_line(kHeader + "a,test,0," + kTruth + ",x\n", 2);
  expect_line("pid,trial,clicks\n", 1);
  CHECK_THROWS_AS(read_trials_csv((dir / "none.csv").string(), env), MissingData);

  Trajectory t{GroundTruth(13, 0), {99}};
  CHECK_THROWS_AS(replay(env, t), InconsistentReplay);
}

TEST_CASE("loading an experiment directory") {
  const auto root = scratch("root");
  fs::create_directories(root / "exp");
  // a two-branch layout next to the data
  write(root / "exp" / "layout.json",
        R"({"branching":[2,1],"rewards":{"1":[-1,1],"2":[-5,5]},"click_cost":1.0})");
  const std::string truth = "\"[0,1,5,-1,-5]\"";
  std::string body = kHeader;
  for (const char* pid : {"p1", "p2", "p3"})
    for (int t = 0; t < 2; ++t) body += std::string(pid) + ",train," + std::to_string(t) + "," + truth + ",1;2\n";
  write(root / "exp" / "train.csv", body);
  write(root / "exp" / "test.csv", kHeader + "p4,test,0," + truth + ",\n");

  const auto all = load_human_data(root.string(), "exp", 0, "all");
  CHECK(all.env->node_count() == 5);
  CHECK(all.trials.size() == 7);
  CHECK(all.participants().size() == 4);

  const auto two = load_human_data(root.string(), "exp", 2, "train");
  CHECK(two.trials.size() == 4);
  CHECK(two.participants() == std::vector<std::string>{"p1", "p2"});
  CHECK(two.trajectories().size() == 4);

  CHECK_THROWS_AS(load_human_data(root.string(), "missing", 0, "all"), MissingData);
  CHECK_THROWS_AS(load_human_data(root.string(), "exp", 0, "nope"), MissingData);
}

TEST_CASE("synthesized datasets") {
  auto env = std::make_shared<const Environment>(Environment::standard());
  const RandomPolicy random;
  class Stop : public StatelessPolicy {
   public:
    void distribution(const BeliefState&, ActionDistribution& out) const override {
      out.actions = {kTerminate};
      out.probs = {1.0};
    }
  } stop;

  const auto d = synthesize_dataset(env, {&random, &stop}, {0.7, 0.3}, 10, 4, 1);
  CHECK(d.trials.size() == 40);
  const auto labels = d.labels();
  CHECK(std::count(labels.begin(), labels.end(), 0) == 28);
  CHECK(std::count(labels.begin(), labels.end(), 1) == 12);
  for (const auto& r : d.trials)
    if (r.label == 1) CHECK(r.trajectory.clicks.empty());
  // each participant keeps one strategy
  std::map<std::string, std::set<int>> per;
  for (const auto& r : d.trials) per[r.pid].insert(r.label);
  for (const auto& [pid, s] : per) CHECK(s.size() == 1);

  const auto again = synthesize_dataset(env, {&random, &stop}, {0.7, 0.3}, 10, 4, 1);
  for (std::size_t i = 0; i < d.trials.size(); ++i)
    CHECK(again.trials[i].trajectory.clicks == d.trials[i].trajectory.clicks);

  // largest remainders: 1/3 each of 10 gives 4,3,3
  const auto thirds = synthesize_dataset(env, {&random, &stop, &random}, {1, 1, 1}, 10, 1, 2);
  const auto tl = thirds.labels();
  CHECK(std::count(tl.begin(), tl.end(), 0) == 4);
  CHECK(std::count(tl.begin(), tl.end(), 1) == 3);

  CHECK(synthesize_dataset(env, {&random}, {1.0}, 0, 3, 1).trials.empty());
  CHECK_THROWS_AS(synthesize_dataset(env, {&random}, {1.0, 2.0}, 3, 3, 1), ConfigError);
  CHECK_THROWS_AS(synthesize_dataset(env, {&random}, {0.0}, 3, 3, 1), ConfigError);
}

TEST_CASE("layout schema") {
  std::ifstream in(std::string(STRATDISC_DATA_DIR) + "/default_layout.json");
  const auto j = nlohmann::json::parse(in);
  CHECK(j.at("branching") == nlohmann::json::array({3, 1, 2}));
  CHECK(j.at("rewards").size() == 3);
  CHECK(j.at("click_cost").get<double>() == 1.0);
  CHECK(Environment::from_json(j).to_json() == j);
}
