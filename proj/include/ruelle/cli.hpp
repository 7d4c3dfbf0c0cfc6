#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace ruelle::cli {

using json = nlohmann::json;

struct RunOptions {
  std::string out_dir = "out";
  std::uint64_t seed = 1;
  int threads = 0;  // 0 keeps the OpenMP default
  bool quiet = false;
};

struct RunResult {
  int exit_code = 0;  // 0 ok, 2 validation error, 3 numerical error
  json summary;
  json error;  // {error, module, detail} when exit_code != 0
  std::vector<std::string> files;
};

struct Recipe {
  std::string id;
  std::string description;
  int criterion = 0;
  double budget_seconds = 0.0;
  json config;
};

const std::vector<std::string>& commands();
const std::vector<Recipe>& list_experiments();
const Recipe* find_recipe(const std::string& id);

// Parses, validates and executes one experiment, writing outputs under opts.out_dir.
RunResult run(const json& config, const RunOptions& opts);

// "a.b=3" sets config["a"]["b"]; the value is parsed as JSON, falling back to a string.
void apply_override(json& config, const std::string& assignment);

int main_entry(int argc, char** argv);

}  // namespace ruelle::cli
