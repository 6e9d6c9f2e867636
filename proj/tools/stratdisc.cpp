// SPDX-License-Identifier: Apache-2.0
#include <iostream>

#include "stratdisc/errors.hpp"
#include "stratdisc/pipeline.hpp"

int main(int argc, char** argv) {
  using namespace stratdisc;
  PipelineConfig cfg;
  try {
    cfg = parse_cli(argc, argv);
  } catch (const HelpRequested& h) {
    std::cout << h.what();
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what();
    return 2;
  }
  try {
    const auto result = run_pipeline(cfg, [](const std::string& s) { std::cerr << s << "\n"; });
    const std::string path = write_report(result.report);
    std::cout << path << "\n";
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
