// lcsmt: run one analysis from a JSON config and write report.json plus CSVs.

#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "lcsmt/cli/report.hpp"

using lcsmt::cli::json;

int main(int argc, char** argv) {
  CLI::App app{"Birkhoff averages, admissible sizes and elasticity for conformal dynamics"};
  std::string config_path, command, out, k_range;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> n_max, grid;
  std::optional<double> k;
  bool strict_verdict = false, no_cache = false;
  app.add_option("--config", config_path, "JSON run configuration")->required();
  app.add_option("--command", command, "analyze|admissible|probe|optimize|construct|elasticity|rank");
  app.add_option("--out", out, "output directory");
  app.add_option("--seed", seed, "random seed");
  app.add_option("--n-max", n_max, "maximal Birkhoff order");
  app.add_option("--grid", grid, "grid resolution per dimension");
  app.add_option("--k", k, "size of the Lee form");
  app.add_option("--k-range", k_range, "scan a:b:step");
  app.add_flag("--strict-verdict", strict_verdict, "exit 4 when a probe verdict is Inconclusive");
  app.add_flag("--no-cache", no_cache, "neither read nor write the result cache");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << lcsmt::cli::error_json("validation", e.what(), lcsmt::cli::kValidation).dump() << '\n';
    return lcsmt::cli::kValidation;
  }

  return lcsmt::cli::run_guarded(
      [&] {
        std::ifstream in(config_path);
        if (!in) throw lcsmt::ValidationError("cannot open config file " + config_path);
        json doc;
        try {
          doc = json::parse(in);
        } catch (const json::parse_error& e) {
          throw lcsmt::ValidationError(std::string("config is not valid JSON: ") + e.what());
        }
        if (!doc.is_object()) throw lcsmt::ValidationError("config must be a JSON object");
        auto& params = doc["params"];
        if (params.is_null()) params = json::object();
        if (!command.empty()) doc["command"] = command;
        if (!out.empty()) doc["out"] = out;
        if (seed) params["seed"] = *seed;
        if (n_max) params["n_max"] = *n_max;
        if (grid) params["grid"] = *grid;
        if (k) params["k"] = *k;
        if (!k_range.empty()) params["k_range"] = k_range;
        const auto cfg = lcsmt::cli::load_config(std::move(doc));
        lcsmt::cli::RunOptions opts;
        opts.strict_verdict = strict_verdict;
        opts.use_cache = !no_cache;
        const auto res = lcsmt::cli::run(cfg, opts);
        std::cout << res.report["payload"].dump() << '\n';
        return res.exit_code;
      },
      std::cerr);
}
