// Command-line front end. Exit codes: 0 ok, 1 input error, 2 contract or
// usage error, 3 numerical failure.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "tvstergm/errors.hpp"
#include "tvstergm/parallel.hpp"
#include "tvstergm/pipeline.hpp"

namespace {

std::string quote(std::string s) {
  std::string o;
  for (char c : s) {
    if (c == '"' || c == '\\') o += '\\';
    if (c == '\n') {
      o += "\\n";
      continue;
    }
    o += c;
  }
  return o;
}

int fail(const char* kind, const std::string& msg, int code) {
  std::cerr << "error: kind=" << kind << " message=\"" << quote(msg) << "\"\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace tvstergm;
  namespace pl = tvstergm::pipeline;

  CLI::App app{"Time-varying separable temporal ERGM with smooth actor effects"};
  app.footer(
      "Settings are taken from built-in defaults, then the --config file, then flags;\n"
      "later sources override earlier ones.\n"
      "Exit codes: 0 success, 1 input error, 2 contract/usage error, 3 numerical failure.");

  std::string subcommand;
  std::optional<std::string> config, out, edges, monadic, dyadic, registry, variant, lambda, fit;
  std::optional<double> threshold;
  std::optional<int> window, n_sims, eval_start, eval_end;
  std::optional<std::uint64_t> seed;
  unsigned threads = default_threads();

  std::string names;
  for (const auto& s : pl::subcommands()) names += (names.empty() ? "" : ", ") + s;
  app.add_option("subcommand", subcommand, "One of: " + names)
      ->required()
      ->check(CLI::IsMember(pl::subcommands()));
  app.add_option("--config", config, "JSON run configuration");
  app.add_option("--out", out, "Output directory");
  app.add_option("--edges", edges, "Flow records CSV (period, sender, receiver, value)");
  app.add_option("--monadic", monadic, "Actor-year covariates CSV");
  app.add_option("--dyadic", dyadic, "Dyad-year covariates CSV");
  app.add_option("--registry", registry, "Actor existence spans and predecessors CSV");
  app.add_option("--threshold", threshold, "Edge threshold on the flow value");
  app.add_option("--window", window, "Aggregation window width in years");
  app.add_option("--variant", variant, "Model variant, using that variant's default terms");
  app.add_option("--seed", seed, "Simulation seed");
  app.add_option("--n-sims", n_sims, "Simulated networks per period");
  app.add_option("--lambda", lambda, "\"select\" or a fixed smoothing parameter");
  app.add_option("--eval-start", eval_start, "First period of the rolling evaluation");
  app.add_option("--eval-end", eval_end, "Last period of the rolling evaluation");
  app.add_option("--threads", threads, "Worker threads (results do not depend on this)")
      ->check(CLI::PositiveNumber);
  app.add_option("--fit", fit, "Fit file to write or read (default <out>/fit.json)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), 2);
  }

  try {
    pl::RunConfig cfg = config ? pl::load_config(*config) : pl::RunConfig{};
    if (out) cfg.out_dir = *out;
    if (edges) cfg.edges = *edges;
    if (monadic) cfg.monadic = *monadic;
    if (dyadic) cfg.dyadic = *dyadic;
    if (registry) cfg.registry = *registry;
    if (threshold) cfg.threshold = *threshold;
    if (window) cfg.window = *window;
    if (variant) cfg.spec = ModelSpec::defaults(variant_from_string(*variant));
    if (seed) cfg.seed = *seed;
    if (n_sims) cfg.n_sims = *n_sims;
    if (eval_start) cfg.eval_start = *eval_start;
    if (eval_end) cfg.eval_end = *eval_end;
    if (lambda) {
      if (*lambda == "select") {
        cfg.select_lambdas = true;
      } else {
        std::size_t used = 0;
        double v = 0;
        try {
          v = std::stod(*lambda, &used);
        } catch (const std::exception&) {
          used = 0;
        }
        if (used != lambda->size()) throw ContractError("--lambda must be \"select\" or a number");
        cfg.select_lambdas = false;
        cfg.fixed_lambdas.clear();
        cfg.fixed_lambda_default = v;
      }
    }
    pl::RunOptions opt;
    opt.threads = threads;
    opt.fit_path = fit.value_or("");
    opt.log = &std::cerr;
    pl::run(subcommand, cfg, opt);
  } catch (const InputError& e) {
    return fail("input", e.what(), 1);
  } catch (const ContractError& e) {
    return fail("contract", e.what(), 2);
  } catch (const NumericalError& e) {
    return fail("numerical", e.what(), 3);
  } catch (const std::filesystem::filesystem_error& e) {
    return fail("input", e.what(), 1);
  } catch (const std::exception& e) {
    return fail("numerical", e.what(), 3);
  }
  return 0;
}
