// deris: fixture generation, non-referent conversion, decoder forward passes,
// evaluation and self-verification from one binary.

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "deris/commands.hpp"

namespace {

using namespace deris;

struct Overrides {
  std::optional<std::size_t> count, height, width, rounds, queries, nw, max_attempts;
  std::optional<double> p_nonreferent, rc, ts, t_ref;
  bool use_pnr = false;
  bool no_use_pnr = false;
};

template <typename T, typename U>
void apply(const std::optional<T>& flag, U& field) {
  if (flag) field = *flag;
}

RunConfig build_config(const std::string& path, const Overrides& o) {
  RunConfig cfg = path.empty() ? RunConfig{} : load_config(path);
  apply(o.count, cfg.count);
  apply(o.height, cfg.fixtures.height);
  apply(o.width, cfg.fixtures.width);
  apply(o.p_nonreferent, cfg.fixtures.p_nonreferent);
  apply(o.rounds, cfg.decoder.rounds);
  apply(o.queries, cfg.decoder.queries);
  apply(o.rc, cfg.nsc.r_c);
  apply(o.nw, cfg.nsc.n_w);
  apply(o.ts, cfg.nsc.t_s);
  apply(o.max_attempts, cfg.nsc.max_attempts);
  apply(o.t_ref, cfg.inference.t_ref);
  if (o.use_pnr && o.no_use_pnr) throw ConfigError("--use-pnr and --no-use-pnr conflict");
  if (o.use_pnr) cfg.inference.use_pnr = true;
  if (o.no_use_pnr) cfg.inference.use_pnr = false;
  validate(cfg);
  return cfg;
}

void emit(const Json& report, const std::string& report_path) {
  const std::string text = report.dump(2) + "\n";
  std::cout << text;
  if (!report_path.empty()) write_text(report_path, text);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Loopback referring-segmentation decoder toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, report_path;
  std::optional<std::uint64_t> seed;
  Overrides o;
  app.add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "Seed (default: config, then DERIS_SEED, then 0)");
  app.add_option("--report", report_path, "Also write the JSON report to this file");

  std::string out, in, annotations, predictions, dump, fault;
  bool gt_oracle = false;
  std::size_t matching_cases = 1000, gradient_cases = 100;

  auto* gen = app.add_subcommand("gen", "Write synthetic annotations");
  gen->add_option("--out", out, "Annotation JSONL to write")->required();
  gen->add_option("--count", o.count, "Number of samples");
  gen->add_option("--height", o.height);
  gen->add_option("--width", o.width);
  gen->add_option("--p-nonreferent", o.p_nonreferent, "Probability of an empty-GT sample");

  auto* augment = app.add_subcommand("augment", "Convert referent samples to non-referent ones");
  augment->add_option("--in", in, "Input annotation JSONL")->required()->check(CLI::ExistingFile);
  augment->add_option("--out", out, "Output annotation JSONL")->required();
  augment->add_option("--rc", o.rc, "Conversion probability");
  augment->add_option("--nw", o.nw, "Replacement sentences need more than this many words");
  augment->add_option("--ts", o.ts, "Replacement similarity must stay below this");
  augment->add_option("--max-attempts", o.max_attempts, "Candidate draws per converted sample");

  auto* forward = app.add_subcommand("forward", "Run the decoder and write predictions");
  forward->add_option("--annotations", annotations)->required()->check(CLI::ExistingFile);
  forward->add_option("--predictions", predictions, "Prediction JSONL to write")->required();
  forward->add_option("--dump", dump, "Per-round JSON dump to write");
  forward->add_option("--rounds", o.rounds);
  forward->add_option("--queries", o.queries);
  forward->add_option("--t-ref", o.t_ref, "Referent score threshold");
  forward->add_flag("--use-pnr", o.use_pnr, "Multiply referent scores by P_nr");
  forward->add_flag("--no-use-pnr", o.no_use_pnr);
  forward->add_flag("--gt-oracle", gt_oracle, "Write GT unions instead of decoder output");
  forward->add_option("--height", o.height);
  forward->add_option("--width", o.width);

  auto* eval = app.add_subcommand("eval", "Score predictions against annotations");
  eval->add_option("--predictions", predictions)->required()->check(CLI::ExistingFile);
  eval->add_option("--annotations", annotations)->required()->check(CLI::ExistingFile);
  eval->add_option("--height", o.height);
  eval->add_option("--width", o.width);

  auto* verify = app.add_subcommand("verify", "Run the oracle suites");
  verify->add_option("--matching-cases", matching_cases)->check(CLI::PositiveNumber);
  verify->add_option("--gradient-cases", gradient_cases)->check(CLI::PositiveNumber);
  verify->add_option("--inject-fault", fault, "Deliberate defect: dice-grad")
      ->check(CLI::IsMember({"none", "dice-grad"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    const RunConfig cfg = build_config(config_path, o);
    const std::uint64_t s = resolve_seed(seed, cfg);
    if (gen->parsed()) {
      emit(cmd_gen(cfg, s, out), report_path);
    } else if (augment->parsed()) {
      emit(cmd_augment(cfg, s, in, out), report_path);
    } else if (forward->parsed()) {
      ForwardPaths paths{annotations, predictions, std::nullopt};
      if (!dump.empty()) paths.dump = dump;
      emit(cmd_forward(cfg, s, paths, gt_oracle), report_path);
    } else if (eval->parsed()) {
      emit(cmd_eval(cfg, predictions, annotations), report_path);
    } else if (verify->parsed()) {
      const VerifyReport report = cmd_verify({s, matching_cases, gradient_cases, parse_fault(fault)});
      emit(report.json, report_path);
      return report.passed ? kExitOk : kExitFailure;
    }
  } catch (const ConfigError& e) {
    std::cerr << "deris: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "deris: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitOk;
}
