#ifndef TVSTERGM_PIPELINE_HPP
#define TVSTERGM_PIPELINE_HPP

// Batch driver behind the command-line tool. Compiled separately (src/) since
// it pulls in file hashing; the numerical headers stay header-only.

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tvstergm/model.hpp"
#include "tvstergm/synth.hpp"

namespace tvstergm::pipeline {

inline constexpr const char* version = "1.0.0";

struct FpcaConfig {
  int components = 3;
  int grid_points = 100;
  double multiple = 2.0;
  bool center = true;
};

struct RobustnessConfig {
  std::vector<double> thresholds{0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0};
  std::vector<int> windows{1, 2, 3};
};

struct RunConfig {
  std::string edges;
  std::string monadic;
  std::string dyadic;
  std::string registry;  // optional
  double threshold = 0.0;
  int window = 1;
  ModelSpec spec = ModelSpec::defaults(Variant::stergm_re);
  bool select_lambdas = true;
  std::map<std::string, double> fixed_lambdas;
  std::optional<double> fixed_lambda_default;
  std::optional<int> eval_start;
  std::optional<int> eval_end;
  int n_sims = 1000;
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  FpcaConfig fpca;
  RobustnessConfig robustness;
  SynthConfig synth;

  void validate() const;
};

// Relative input paths are resolved against `base_dir`.
RunConfig config_from_json(const nlohmann::json& j, const std::string& base_dir = "");
RunConfig load_config(const std::string& path);

// Echo of every field except the output directory, which is a location
// rather than a parameter.
nlohmann::json config_to_json(const RunConfig& c);

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::string& path);

struct RunOptions {
  unsigned threads = 1;
  std::string fit_path;  // defaults to <out_dir>/fit.json
  std::ostream* log = nullptr;
};

// Subcommands: synth, ingest, fit, curves, fpca, evaluate, simulate, gof,
// robustness, all. Errors are thrown as InputError / ContractError /
// NumericalError.
void run(const std::string& subcommand, const RunConfig& config, const RunOptions& options = {});

const std::vector<std::string>& subcommands();

}  // namespace tvstergm::pipeline

#endif
