// SPDX-License-Identifier: Apache-2.0
#include "stratdisc/trace.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "stratdisc/errors.hpp"

namespace stratdisc {
namespace fs = std::filesystem;

std::vector<Trajectory> Dataset::trajectories() const {
  std::vector<Trajectory> out;
  out.reserve(trials.size());
  for (const auto& t : trials) out.push_back(t.trajectory);
  return out;
}

std::vector<std::string> Dataset::participants() const {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& t : trials)
    if (seen.insert(t.pid).second) out.push_back(t.pid);
  return out;
}

std::vector<int> Dataset::labels() const {
  std::vector<int> out;
  out.reserve(trials.size());
  for (const auto& t : trials) out.push_back(t.label);
  return out;
}

namespace {

// RFC 4180 record reader; returns false at end of input.
bool read_record(std::istream& in, std::vector<std::string>& fields, std::size_t& line) {
  fields.clear();
  std::string field;
  bool quoted = false, any = false;
  char ch;
  while (in.get(ch)) {
    any = true;
    if (quoted) {
      if (ch == '"') {
        if (in.peek() == '"') {
          field += '"';
          in.get();
        } else {
          quoted = false;
        }
      } else {
        if (ch == '\n') ++line;
        field += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (ch == '\n') {
      ++line;
      fields.push_back(std::move(field));
      return true;
    } else if (ch != '\r') {
      field += ch;
    }
  }
  if (!any) return false;
  fields.push_back(std::move(field));
  return true;
}

std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + '"';
}

std::vector<NodeId> parse_clicks(const std::string& s, std::size_t line) {
  std::vector<NodeId> out;
  std::string tok;
  std::istringstream in(s);
  while (std::getline(in, tok, ';')) {
    if (tok.empty()) continue;
    try {
      std::size_t used = 0;
      out.push_back(std::stoi(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw MalformedRow("bad click id '" + tok + "'", line);
    }
  }
  return out;
}

}  // namespace

std::vector<TrialRecord> read_trials_csv(const std::string& path, const Environment& env) {
  std::ifstream in(path);
  if (!in) throw MissingData("cannot open " + path);
  std::vector<std::string> f;
  std::size_t line = 1;
  if (!read_record(in, f, line)) throw MalformedRow("empty file " + path, 1);
  int c_pid = -1, c_block = -1, c_trial = -1, c_truth = -1, c_clicks = -1;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const std::string& h = f[i];
    if (h == "pid") c_pid = static_cast<int>(i);
    else if (h == "block") c_block = static_cast<int>(i);
    else if (h == "trial") c_trial = static_cast<int>(i);
    else if (h == "ground_truth") c_truth = static_cast<int>(i);
    else if (h == "clicks") c_clicks = static_cast<int>(i);
  }
  if (c_pid < 0 || c_block < 0 || c_trial < 0 || c_truth < 0 || c_clicks < 0)
    throw MalformedRow("header must contain pid,block,trial,ground_truth,clicks", 1);
  const std::size_t need =
      static_cast<std::size_t>(std::max({c_pid, c_block, c_trial, c_truth, c_clicks})) + 1;

  std::vector<TrialRecord> out;
  while (true) {
    const std::size_t row_line = line;
    if (!read_record(in, f, line)) break;
    if (f.size() == 1 && f[0].empty()) continue;
    if (f.size() < need) throw MalformedRow("too few columns", row_line);
    TrialRecord r;
    r.pid = f[static_cast<std::size_t>(c_pid)];
    r.block = f[static_cast<std::size_t>(c_block)];
    try {
      r.trial = std::stoi(f[static_cast<std::size_t>(c_trial)]);
      const auto j = nlohmann::json::parse(f[static_cast<std::size_t>(c_truth)]);
      r.trajectory.truth = j.get<std::vector<int>>();
    } catch (const std::exception& e) {
      throw MalformedRow(std::string("bad trial or ground_truth: ") + e.what(), row_line);
    }
    r.trajectory.clicks = parse_clicks(f[static_cast<std::size_t>(c_clicks)], row_line);
    if (r.trajectory.truth.size() != env.node_count())
      throw MalformedRow("ground_truth length does not match the layout", row_line);
    try {
      (void)replay(env, r.trajectory);
    } catch (const InconsistentReplay& e) {
      throw MalformedRow(e.what(), row_line);
    }
    out.push_back(std::move(r));
  }
  return out;
}

void write_trials_csv(const std::vector<TrialRecord>& trials, const std::string& path) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(path);
  if (!out) throw MissingData("cannot write " + path);
  out << "pid,block,trial,ground_truth,clicks\n";
  for (const auto& t : trials) {
    std::string clicks;
    for (std::size_t i = 0; i < t.trajectory.clicks.size(); ++i) {
      if (i) clicks += ';';
      clicks += std::to_string(t.trajectory.clicks[i]);
    }
    out << quote(t.pid) << ',' << quote(t.block) << ',' << t.trial << ','
        << quote(nlohmann::json(t.trajectory.truth).dump()) << ',' << clicks << '\n';
  }
}

Dataset load_human_data(const std::string& root, const std::string& exp_id,
                        std::size_t num_participants, const std::string& block) {
  const fs::path dir = fs::path(root) / exp_id;
  if (!fs::is_directory(dir)) throw MissingData("no data directory " + dir.string());
  Dataset d;
  const fs::path layout = dir / "layout.json";
  d.env = std::make_shared<const Environment>(
      fs::exists(layout) ? Environment::load(layout.string()) : Environment::standard());

  std::vector<fs::path> files;
  if (block == "all") {
    for (const auto& e : fs::directory_iterator(dir))
      if (e.path().extension() == ".csv") files.push_back(e.path());
    std::sort(files.begin(), files.end());
  } else {
    files.push_back(dir / (block + ".csv"));
  }
  if (files.empty()) throw MissingData("no CSV files in " + dir.string());
  for (const auto& f : files) {
    if (!fs::exists(f)) throw MissingData("missing " + f.string());
    auto rows = read_trials_csv(f.string(), *d.env);
    for (auto& r : rows) d.trials.push_back(std::move(r));
  }
  if (num_participants > 0) {
    std::set<std::string> keep;
    for (const auto& pid : d.participants()) {
      if (keep.size() >= num_participants) break;
      keep.insert(pid);
    }
    std::erase_if(d.trials, [&](const TrialRecord& r) { return !keep.count(r.pid); });
  }
  return d;
}

Dataset synthesize_dataset(std::shared_ptr<const Environment> env,
                           const std::vector<const Policy*>& strategies,
                           const std::vector<double>& proportions, std::size_t num_participants,
                           std::size_t trials_per_participant, std::uint64_t seed,
                           const std::string& block) {
  if (strategies.empty() || strategies.size() != proportions.size())
    throw ConfigError("one proportion per strategy is required");
  double total = 0.0;
  for (double p : proportions) {
    if (p < 0.0) throw ConfigError("proportions must be non-negative");
    total += p;
  }
  if (total <= 0.0) throw ConfigError("proportions must not all be zero");

  // Deterministic apportionment: largest remainders.
  std::vector<std::size_t> counts(strategies.size());
  std::vector<std::pair<double, std::size_t>> rem;
  std::size_t assigned = 0;
  for (std::size_t s = 0; s < strategies.size(); ++s) {
    const double exact = proportions[s] / total * static_cast<double>(num_participants);
    counts[s] = static_cast<std::size_t>(exact);
    assigned += counts[s];
    rem.emplace_back(exact - static_cast<double>(counts[s]), s);
  }
  std::stable_sort(rem.begin(), rem.end(), [](auto a, auto b) { return a.first > b.first; });
  for (std::size_t i = 0; assigned < num_participants; ++i, ++assigned) ++counts[rem[i % rem.size()].second];

  Dataset d;
  d.env = std::move(env);
  std::size_t pid = 0;
  for (std::size_t s = 0; s < strategies.size(); ++s) {
    for (std::size_t p = 0; p < counts[s]; ++p, ++pid) {
      for (std::size_t t = 0; t < trials_per_participant; ++t) {
        Rng truth_rng = Rng::stream(seed, 0x73796e74ULL, pid * 100003 + t);
        Rng action_rng = Rng::stream(seed, 0x73796e61ULL, pid * 100003 + t);
        TrialRecord r;
        r.pid = "p" + std::to_string(pid);
        r.block = block;
        r.trial = static_cast<int>(t);
        r.trajectory = rollout(*d.env, *strategies[s], truth_rng, action_rng).trajectory;
        r.label = static_cast<int>(s);
        d.trials.push_back(std::move(r));
      }
    }
  }
  return d;
}

}  // namespace stratdisc
