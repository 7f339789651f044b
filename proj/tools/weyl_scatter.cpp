#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "wscatter/cli.hpp"

namespace {

using namespace wscatter;

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Config, "cannot read " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void emit(const std::string& text, const std::optional<std::string>& path) {
  if (!path || *path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(*path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Config, "cannot write " + *path);
  out << text;
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> v;
  std::istringstream in(s);
  for (std::string cell; std::getline(in, cell, ',');) v.push_back(std::stod(cell));
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Billiard scattering around Weyl tubes and recovery of tube invariants"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> samples;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::optional<std::string> out;
  bool strict = false;
  std::string csv_path;
  std::optional<std::string> foot;
  std::optional<std::string> dir;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "experiment config (JSON)")->required();
    sub->add_option("--samples", samples, "samples per layer (volume points for volume)");
    sub->add_option("--seed", seed, "base seed; layer j uses seed + j");
    sub->add_option("--threads", threads, "worker threads (0 = hardware)");
    sub->add_option("--out", out, "output path ('-' for stdout)");
  };
  auto* scatter = app.add_subcommand("scatter", "trace every layer and write the scatter CSV");
  common(scatter);
  auto* recover = app.add_subcommand("recover", "recover tube invariants from a scatter CSV");
  common(recover);
  recover->add_option("--csv", csv_path, "scatter CSV (defaults to output.scatter_csv)");
  recover->add_flag("--strict", strict, "exit with status 2 when a layer violates hypothesis A");
  auto* volume = app.add_subcommand("volume", "compare Weyl tube volumes with Monte Carlo");
  common(volume);
  auto* trace = app.add_subcommand("trace", "dump the polyline of one trajectory");
  common(trace);
  trace->add_option("--foot", foot, "start foot, comma separated");
  trace->add_option("--dir", dir, "start direction, comma separated");

  CLI11_PARSE(app, argc, argv);

  try {
    auto cfg = cli::parse_config(slurp(config_path));
    if (samples) (volume->parsed() ? cfg.volume_samples : cfg.samples) = *samples;
    if (seed) cfg.seed = *seed;
    if (threads) cfg.threads = *threads;

    if (scatter->parsed()) {
      emit(cli::scatter_csv(cli::run_scatter(cfg)), out ? out : cfg.scatter_csv);
    } else if (recover->parsed()) {
      if (csv_path.empty()) {
        if (!cfg.scatter_csv) throw Error(ErrorCode::Config, "recover needs --csv or output.scatter_csv");
        csv_path = *cfg.scatter_csv;
      }
      const auto result = cli::run_recover(slurp(csv_path), cfg);
      emit(cli::recovery_json(result), out ? out : cfg.recovery_json);
      if (strict && result.hypothesis_a_violated) {
        std::cerr << "hypothesis A violated: a layer's trapped fraction exceeds the threshold\n";
        return cli::kStrictHypothesisA;
      }
    } else if (volume->parsed()) {
      emit(cli::volume_csv(cli::run_volume(cfg)), out ? out : cfg.volume_csv);
    } else if (trace->parsed()) {
      std::optional<std::vector<double>> f;
      std::optional<std::vector<double>> d;
      if (foot) f = parse_list(*foot);
      if (dir) d = parse_list(*dir);
      emit(cli::run_trace(cfg, f, d), out);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::kValidation;
  }
  return cli::kOk;
}
