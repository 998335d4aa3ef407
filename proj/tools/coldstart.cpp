// coldstart: synth | train | predict | evaluate | verify

#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "coldstart/errors.hpp"
#include "coldstart/pipeline.hpp"
#include "coldstart/synth.hpp"

namespace {

using namespace coldstart;

struct InputFlags {
  std::string data_dir;
  std::string episodes, credits, genres, platform, genre_aliases;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--data", data_dir, "Directory holding episodes.csv, credits.csv, genres.csv, platform.csv");
    cmd->add_option("--episodes", episodes, "Episodes CSV");
    cmd->add_option("--credits", credits, "Credits CSV");
    cmd->add_option("--genres", genres, "Genres CSV");
    cmd->add_option("--platform", platform, "Platform metrics CSV");
    cmd->add_option("--genre-aliases", genre_aliases, "Genre alias CSV (alias,canonical)");
  }

  // Flags win over --data, which wins over the config file.
  void apply(InputPaths& paths) const {
    if (!data_dir.empty()) {
      const std::filesystem::path dir(data_dir);
      paths.episodes = (dir / "episodes.csv").string();
      paths.credits = (dir / "credits.csv").string();
      paths.genres = (dir / "genres.csv").string();
      paths.platform = (dir / "platform.csv").string();
      if (std::filesystem::exists(dir / "genre_aliases.csv")) {
        paths.genre_aliases = (dir / "genre_aliases.csv").string();
      }
    }
    if (!episodes.empty()) paths.episodes = episodes;
    if (!credits.empty()) paths.credits = credits;
    if (!genres.empty()) paths.genres = genres;
    if (!platform.empty()) paths.platform = platform;
    if (!genre_aliases.empty()) paths.genre_aliases = genre_aliases;
  }
};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

SynthConfig synth_config_from_json(const Json& j) {
  SynthConfig c;
  for (const auto& [key, v] : j.items()) {
    if (key == "series" || key == "n_series") {
      c.n_series = v.get<int>();
    } else if (key == "min_episodes") {
      c.min_episodes = v.get<int>();
    } else if (key == "max_episodes") {
      c.max_episodes = v.get<int>();
    } else if (key == "seed") {
      c.seed = v.get<std::uint64_t>();
    } else if (key == "noise_sigma") {
      c.noise_sigma = v.get<double>();
    } else if (key == "cold_start_fraction") {
      c.cold_start_fraction = v.get<double>();
    } else if (key == "start_date") {
      c.start_date = parse_iso_date(v.get<std::string>());
    } else {
      throw UsageError("cli_report", "unknown synth config key '" + key + "'");
    }
  }
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cold-start viewership prediction toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset with known ground truth");
  std::optional<int> series, min_eps, max_eps;
  std::optional<double> noise, cold_fraction;
  synth->add_option("--config", config_path, "JSON config");
  synth->add_option("--seed", seed, "Random seed");
  synth->add_option("--series", series, "Number of series");
  synth->add_option("--min-episodes", min_eps, "Minimum episodes per series");
  synth->add_option("--max-episodes", max_eps, "Maximum episodes per series");
  synth->add_option("--noise-sigma", noise, "Log-normal noise sigma");
  synth->add_option("--cold-start-fraction", cold_fraction, "Fraction of series marked cold-start");
  synth->add_option("--out", out_dir, "Output directory")->required();

  // train
  auto* train = app.add_subcommand("train", "Search, select and ensemble models; write bundle and report");
  InputFlags train_inputs;
  std::string reference_date, families, scheme, transform, numeric_impute, categorical_impute;
  std::optional<double> test_fraction;
  std::optional<int> n_iter, folds, repeats;
  std::optional<std::size_t> top_k;
  bool serial = false;
  train->add_option("--config", config_path, "JSON config; flags override it");
  train->add_option("--seed", seed, "Random seed (default 42)");
  train->add_option("--out", out_dir, "Output directory");
  train_inputs.add_to(train);
  train->add_option("--reference-date", reference_date, "Scoring date YYYY-MM-DD (default: latest release)");
  train->add_option("--test-fraction", test_fraction, "Holdout fraction (default 0.2)");
  train->add_option("--families", families, "Comma-separated model families");
  train->add_option("--n-iter", n_iter, "Sampled assignments per family (default 20)");
  train->add_option("--folds", folds, "Cross-validation folds (default 5)");
  train->add_option("--top-k", top_k, "Ensemble size (default 3)");
  train->add_option("--scheme", scheme, "Ensemble weights: inverse_error or equal");
  train->add_option("--target-transform", transform, "none or log1p");
  train->add_option("--numeric-impute", numeric_impute, "mean or median");
  train->add_option("--categorical-impute", categorical_impute, "mode or sentinel");
  train->add_option("--importance-repeats", repeats, "Permutation importance repeats (default 5)");
  train->add_flag("--serial", serial, "Use the serial reference kernels");

  // predict / evaluate / verify
  std::string bundle_path, report_path;
  bool holdout_only = false;
  auto* predict = app.add_subcommand("predict", "Score episodes with a trained bundle");
  InputFlags predict_inputs;
  predict->add_option("--config", config_path, "JSON config supplying input paths");
  predict->add_option("--bundle", bundle_path, "bundle.json")->required();
  predict->add_option("--out", out_dir, "Output directory")->required();
  predict_inputs.add_to(predict);

  auto* evaluate = app.add_subcommand("evaluate", "Score a bundle against episodes with known views");
  InputFlags evaluate_inputs;
  evaluate->add_option("--config", config_path, "JSON config supplying input paths");
  evaluate->add_option("--bundle", bundle_path, "bundle.json")->required();
  evaluate->add_option("--out", out_dir, "Output directory")->required();
  evaluate->add_flag("--holdout-only", holdout_only, "Restrict to the bundle's holdout episodes");
  evaluate_inputs.add_to(evaluate);

  auto* verify = app.add_subcommand("verify", "Recompute a training report's validation numbers");
  InputFlags verify_inputs;
  verify->add_option("--config", config_path, "JSON config supplying input paths");
  verify->add_option("--bundle", bundle_path, "bundle.json")->required();
  verify->add_option("--report", report_path, "training_report.json")->required();
  verify_inputs.add_to(verify);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return static_cast<int>(ExitCode::kUsage);
  }

  try {
    auto load_run_config = [&]() {
      return config_path.empty() ? RunConfig{} : RunConfig::from_json(read_json_file(config_path));
    };
    Json result;
    if (*synth) {
      SynthConfig c = config_path.empty() ? SynthConfig{} : synth_config_from_json(read_json_file(config_path));
      if (seed) c.seed = *seed;
      if (series) c.n_series = *series;
      if (min_eps) c.min_episodes = *min_eps;
      if (max_eps) c.max_episodes = *max_eps;
      if (noise) c.noise_sigma = *noise;
      if (cold_fraction) c.cold_start_fraction = *cold_fraction;
      c.validate();
      const auto output = generate(c);
      write_synth(output, out_dir);
      result = {{"out", out_dir}, {"seed", c.seed}, {"cold_start_series", output.cold_start_series}};
    } else if (*train) {
      RunConfig c = load_run_config();
      train_inputs.apply(c.inputs);
      if (seed) c.seed = *seed;
      if (!out_dir.empty()) c.output_dir = out_dir;
      if (!reference_date.empty()) c.reference_date = parse_iso_date(reference_date);
      if (test_fraction) c.test_fraction = *test_fraction;
      if (!families.empty()) {
        c.families.clear();
        for (const auto& f : split_list(families)) c.families.push_back(model_family_from_string(f));
      }
      if (n_iter) c.n_iter = *n_iter;
      if (folds) c.k = *folds;
      if (top_k) c.top_k = *top_k;
      if (repeats) c.importance_repeats = *repeats;
      if (!scheme.empty()) c.scheme = weight_scheme_from_string(scheme);
      if (!transform.empty()) c.target_transform = target_transform_from_string(transform);
      if (!numeric_impute.empty()) c.preprocess.numeric = numeric_impute_from_string(numeric_impute);
      if (!categorical_impute.empty()) {
        c.preprocess.categorical = categorical_impute_from_string(categorical_impute);
      }
      const Json report = cmd_train(c, serial ? Execution::kSerial : Execution::kParallel);
      result = {{"out", c.output_dir},
                {"seed", c.seed},
                {"selected", report.at("selected")},
                {"ensemble_validation", report.at("ensemble").at("validation")}};
    } else if (*predict) {
      RunConfig c = load_run_config();
      predict_inputs.apply(c.inputs);
      result = cmd_predict(bundle_path, c.inputs, out_dir);
    } else if (*evaluate) {
      RunConfig c = load_run_config();
      evaluate_inputs.apply(c.inputs);
      const Json report = cmd_evaluate(bundle_path, c.inputs, out_dir, holdout_only);
      result = {{"out", out_dir}, {"metrics", report.at("metrics")}, {"n_clamped", report.at("n_clamped")}};
    } else if (*verify) {
      RunConfig c = load_run_config();
      verify_inputs.apply(c.inputs);
      result = cmd_verify(bundle_path, report_path, c.inputs);
    }
    std::cout << result.dump(2) << '\n';
    return static_cast<int>(ExitCode::kOk);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(e.code());
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: cli_report: malformed JSON value: " << e.what() << '\n';
    return static_cast<int>(ExitCode::kUsage);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::kInvariant);
  }
}
