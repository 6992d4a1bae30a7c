#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace mltb {

inline constexpr int kReportSchemaVersion = 1;

/// Config validation failure; `field` is a JSON pointer to the offending entry.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& field, const std::string& what)
      : std::runtime_error(field + ": " + what), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct CsvTable {
  std::string name;  // file name inside the output directory
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

struct ExperimentResult {
  nlohmann::ordered_json report;
  std::vector<CsvTable> tables;
  bool pass = false;
};

std::vector<std::string> subcommands();

/// Validates and runs one experiment.  Throws ConfigError on bad input.
ExperimentResult run_experiment(const std::string& subcommand, const nlohmann::json& config);

/// Serialises the report exactly as written to disk (stable across runs).
std::string dump_report(const nlohmann::ordered_json& report);

/// Writes <subcommand>_report.json and the CSV tables into `out_dir`.
void write_result(const std::string& subcommand, const ExperimentResult& result,
                  const std::string& out_dir);

/// Entry point of the mltb tool; returns the process exit code.
int cli_main(int argc, char** argv);

}  // namespace mltb
