// cfmix: synth / verify / dump front end.

#include <iostream>

#include <CLI11.hpp>

#include "cfmix/session.hpp"

int main(int argc, char** argv) {
  CLI::App app{"rank-one cocycle extensions: synthesis and verification"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  auto* synth = app.add_subcommand("synth", "build a session bundle from a config");
  synth->add_option("--config", config_path, "config JSON")->required();
  synth->add_option("--out", out_dir, "output directory")->required();

  std::string bundle_dir, suite = "all";
  auto* verify = app.add_subcommand("verify", "run verification suites on a bundle");
  verify->add_option("--bundle", bundle_dir, "bundle directory")->required();
  verify->add_option("--suite", suite, "algebra|weaklimits|mixing|multiplicity|all")
      ->check(CLI::IsMember({"algebra", "weaklimits", "mixing", "multiplicity", "all"}));

  std::string what, format = "json";
  auto* dump = app.add_subcommand("dump", "write spectra, decay tables or reports");
  dump->add_option("--bundle", bundle_dir, "bundle directory")->required();
  dump->add_option("--what", what, "spectra|decay|report")->required()->check(CLI::IsMember({"spectra", "decay", "report"}));
  dump->add_option("--format", format, "json|csv")->check(CLI::IsMember({"json", "csv"}));

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) {
      const auto cfg = cfmix::parse_json(cfmix::read_file(config_path), "config");
      std::cout << "bundle " << cfmix::synth(cfg, out_dir) << "\n";
      return 0;
    }
    if (*verify) {
      const int code = cfmix::verify(bundle_dir, suite);
      const auto summary = cfmix::parse_json(cfmix::read_file(cfmix::fs::path(bundle_dir) / "reports" / "summary.json"), "summary");
      if (summary.contains("manifest_ok") && !summary["manifest_ok"].get<bool>())
        std::cerr << "warning: bundle.json does not match manifest hash\n";
      if (summary.contains("error")) std::cerr << "error: " << summary["error"].get<std::string>() << "\n";
      if (summary.contains("results"))
        for (const auto& [name, ok] : summary["results"].items()) {
          std::cout << name << ": " << (ok.get<bool>() ? "pass" : "FAIL");
          if (name == "mixing" && !ok.get<bool>()) {
            const auto rep = cfmix::parse_json(cfmix::read_file(cfmix::fs::path(bundle_dir) / "reports" / "mixing.json"), "mixing");
            if (rep.contains("diagnostic")) std::cout << " (" << rep["diagnostic"].get<std::string>() << ")";
          }
          std::cout << "\n";
        }
      return code;
    }
    if (*dump) {
      std::cout << cfmix::dump(bundle_dir, what, format).string() << "\n";
      return 0;
    }
  } catch (const cfmix::Error& e) {
    std::cerr << "error [" << cfmix::to_string(e.kind()) << "]: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
