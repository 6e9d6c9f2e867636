// SPDX-License-Identifier: Apache-2.0
// Writes a synthetic experiment folder (layout.json plus <block>.csv) that
// the stratdisc CLI can read.
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "stratdisc/errors.hpp"
#include "stratdisc/synthetic.hpp"

int main(int argc, char** argv) {
  using namespace stratdisc;
  std::string out;
  std::string layout;
  std::vector<std::string> names = {"no_planning", "leaves_until_max", "roots_then_stop"};
  std::size_t participants = 60, trials = 10;
  std::uint64_t seed = 0;
  std::string block = "test";

  CLI::App app("Generate click data from reference strategies.", "stratdisc_synth");
  app.add_option("--out", out, "Experiment folder to create")->required();
  app.add_option("--strategies", names, "Reference strategy names");
  app.add_option("--participants", participants, "Number of participants");
  app.add_option("--trials", trials, "Trials per participant");
  app.add_option("--seed", seed, "Seed");
  app.add_option("--layout", layout, "Environment JSON (default: the standard layout)");
  app.add_option("--block", block, "Block name, also the CSV file stem");
  CLI11_PARSE(app, argc, argv);

  try {
    const Environment env = layout.empty() ? Environment::standard() : Environment::load(layout);
    Dataset d = synthetic_dataset(names, participants, trials, seed, env);
    for (auto& t : d.trials) t.block = block;
    std::filesystem::create_directories(out);
    std::ofstream(std::filesystem::path(out) / "layout.json") << env.to_json().dump(2) << "\n";
    write_trials_csv(d.trials, (std::filesystem::path(out) / (block + ".csv")).string());
    std::cout << "wrote " << d.trials.size() << " trials to " << out << "\n";
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
