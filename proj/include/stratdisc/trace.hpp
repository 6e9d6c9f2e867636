// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <string>
#include <vector>

#include "stratdisc/env.hpp"

namespace stratdisc {

/// One row of the click-sequence CSV: pid, block, trial, ground_truth, clicks.
struct TrialRecord {
  std::string pid;
  std::string block;
  int trial = 0;
  Trajectory trajectory;
  int label = -1;  // generating strategy for synthetic data, -1 if unknown
};

struct Dataset {
  std::shared_ptr<const Environment> env;
  std::vector<TrialRecord> trials;

  std::vector<Trajectory> trajectories() const;
  std::vector<std::string> participants() const;
  std::vector<int> labels() const;
};

/// Parse a CSV with the header pid,block,trial,ground_truth,clicks. The
/// ground truth is a JSON array over node ids (start included) and clicks
/// are ';'-separated node ids. Extra columns are ignored.
std::vector<TrialRecord> read_trials_csv(const std::string& path, const Environment& env);
void write_trials_csv(const std::vector<TrialRecord>& trials, const std::string& path);

/// Load <root>/<exp_id>/<block>.csv (every CSV in the directory for block
/// "all"), keeping the first num_participants participants in file order
/// (all when 0). The layout comes from <root>/<exp_id>/layout.json when
/// present. Throws MissingData or MalformedRow.
Dataset load_human_data(const std::string& root, const std::string& exp_id,
                        std::size_t num_participants, const std::string& block);

/// Each participant is assigned one strategy (by proportion) and plays
/// trials_per_participant trials with it.
Dataset synthesize_dataset(std::shared_ptr<const Environment> env,
                           const std::vector<const Policy*>& strategies,
                           const std::vector<double>& proportions, std::size_t num_participants,
                           std::size_t trials_per_participant, std::uint64_t seed,
                           const std::string& block = "test");

}  // namespace stratdisc
