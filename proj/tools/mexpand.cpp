#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "mexpand/experiments.hpp"

namespace fs = std::filesystem;
using mexpand::cli::json;

namespace {

int fail(const std::string& what, const std::string& msg) {
  std::cerr << "mexpand: " << what << ": " << msg << "\n";
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Differential and falsified sampling expansions with matrix dilations"};
  std::string kind, config_path, out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::string kind_list;
  for (const auto& k : mexpand::cli::kinds()) kind_list += (kind_list.empty() ? "" : " | ") + k;
  app.add_option("kind", kind, "experiment: " + kind_list)->required();
  app.add_option("--config", config_path, "JSON experiment configuration")->required();
  app.add_option("--out", out_dir, "directory for result.json and errors.csv");
  app.add_option("--seed", seed, "seed for Monte Carlo oracles");
  CLI11_PARSE(app, argc, argv);

  std::ifstream in(config_path);
  if (!in) return fail("file error", "cannot read config '" + config_path + "'");
  json config;
  try {
    config = json::parse(in);
  } catch (const json::parse_error& e) {
    return fail("configuration error", std::string("malformed JSON: ") + e.what());
  }

  mexpand::cli::RunResult result;
  try {
    result = mexpand::cli::run(kind, config, seed);
  } catch (const mexpand::cli::ConfigError& e) {
    return fail("configuration error", e.what());
  } catch (const mexpand::InvalidSpec& e) {
    return fail("invalid spec", e.what());
  } catch (const mexpand::ZeroCrossing& e) {
    return fail("zero crossing", e.what());
  } catch (const mexpand::Error& e) {
    return fail("numerical error", e.what());
  }

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  std::ofstream rj(fs::path(out_dir) / "result.json", std::ios::binary);
  std::ofstream csv(fs::path(out_dir) / "errors.csv", std::ios::binary);
  if (!rj || !csv) return fail("file error", "cannot write outputs to '" + out_dir + "'");
  rj << result.document.dump(2) << "\n";
  csv << mexpand::cli::format_csv(result.rows);
  if (!rj || !csv) return fail("file error", "write to '" + out_dir + "' failed");

  std::cout << kind << ": " << (result.status == 0 ? "pass" : "expectation failed") << "\n";
  for (const auto& c : result.document["expectations"])
    std::cout << "  " << c["check"].get<std::string>() << ": observed " << c["observed"].dump() << ", expected "
              << c["expected"].dump() << (c["pass"].get<bool>() ? "" : "  FAIL") << "\n";
  return result.status;
}
