#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "qmetro/cli.hpp"

namespace {

constexpr int kUsageError = 2;
constexpr int kNumericalError = 3;

void write_output(const qmetro::cli::RunConfig& cfg, const std::string& text) {
  if (!cfg.output_path) {
    std::cout << text;
    return;
  }
  std::ofstream out(*cfg.output_path, std::ios::binary);
  if (!out) throw qmetro::InputError("cannot write " + *cfg.output_path);
  out << text;
  if (!out) throw qmetro::InputError("failed writing " + *cfg.output_path);
}

}  // namespace

int main(int argc, char** argv) {
  using namespace qmetro::cli;

  CLI::App app{"Multiparameter quantum estimation tradeoff toolkit"};
  app.require_subcommand(1, 1);

  std::string example, input, output, format, sweep;
  std::vector<double> params;
  double kappa = 0.0, varphi = 0.0;
  long long shots = 0;
  int batches = 0;
  std::uint64_t seed = 12345;
  bool construct = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--example", example, "qubit | qutrit | squeezed | radar-sep | radar-ent");
    sub->add_option("--input", input, "state descriptor or radar preset (JSON)");
    sub->add_option("--out", output, "output file (default: stdout)");
    sub->add_option("--format", format, "json | csv");
    sub->add_option("--params", params, "comma-separated fixture parameters")->delimiter(',');
    sub->add_option("--kappa", kappa, "bi-photon correlation in [0, 1)");
    sub->add_option("--varphi", varphi, "free phase of degenerate blocks (radians)");
    sub->add_option("--seed", seed, "random seed")->capture_default_str();
  };

  CLI::App* ex = app.add_subcommand("example", "evaluate a built-in fixture with its optimal measurement");
  CLI::App* bound = app.add_subcommand("bound", "evaluate the tradeoff bound for a state descriptor");
  CLI::App* measure = app.add_subcommand("measure", "emit the optimal measurement basis");
  CLI::App* radar = app.add_subcommand("radar-sim", "Monte Carlo range/velocity estimation");
  CLI::App* sw = app.add_subcommand("sweep", "tabulate bounds over a parameter grid");
  for (CLI::App* sub : {ex, bound, measure, radar, sw}) add_common(sub);
  bound->add_option("--construct", construct, "also build the optimal measurement");
  radar->add_option("--shots", shots, "detections per batch");
  radar->add_option("--batches", batches, "independent batches");
  sw->add_option("--sweep", sweep, "VAR:LO:HI:STEPS with VAR in {kappa, theta, x3}");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageError;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    RunConfig cfg;
    cfg.command = parse_command(sub->get_name());
    auto given = [&](const char* flag) { return sub->get_option_no_throw(flag) && sub->count(flag) > 0; };
    if (given("--example")) cfg.example = example;
    if (given("--input")) cfg.input_path = input;
    if (given("--out")) cfg.output_path = output;
    if (given("--format")) cfg.format = parse_format(format);
    if (given("--params")) cfg.params = params;
    if (given("--kappa")) cfg.kappa = kappa;
    if (given("--varphi")) cfg.varphi = varphi;
    if (given("--shots")) cfg.shots = shots;
    if (given("--batches")) cfg.batches = batches;
    if (given("--sweep")) cfg.sweep = parse_sweep(sweep);
    if (given("--construct")) cfg.construct = construct;
    cfg.seed = seed;
    cfg.tol = tolerance_from_env(std::getenv("QMETRO_TOL"));
    write_output(cfg, run(cfg));
    return 0;
  } catch (const qmetro::SingularFisherError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const qmetro::InputError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kNumericalError;
  }
}
