#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "coldstart/ensemble.hpp"
#include "coldstart/ingest.hpp"
#include "coldstart/plots.hpp"
#include "coldstart/preprocess.hpp"
#include "coldstart/serialization.hpp"
#include "coldstart/tuning.hpp"

namespace coldstart {

inline constexpr int kBundleSchemaVersion = 1;

struct InputPaths {
  std::string episodes;
  std::string credits;
  std::string genres;
  std::string platform;
  std::optional<std::string> genre_aliases;

  // Throws UsageError for an empty or repeated path.
  void validate() const;
  Json to_json() const;
  static InputPaths from_json(const Json& j);
};

struct RunConfig {
  InputPaths inputs;
  std::optional<Date> reference_date;  // default: latest release date in the inputs
  double test_fraction = 0.2;
  std::uint64_t seed = 42;
  std::vector<ModelFamily> families = all_model_families();
  int n_iter = 20;
  int k = 5;
  std::size_t top_k = 3;
  WeightScheme scheme = WeightScheme::kInverseError;
  TargetTransform target_transform = TargetTransform::kNone;
  PreprocessOptions preprocess;
  std::map<std::string, ParamGrid> grids;            // family name -> search space override
  std::map<std::string, ParamAssignment> fixed_params;  // family name -> pinned parameters
  int importance_repeats = 5;
  std::string output_dir = "out";

  void validate() const;
  ParamGrid grid_for(ModelFamily f) const;
  Scoring scoring_for(ModelFamily f) const;
  Json to_json() const;
  // Missing keys keep their defaults; unknown keys are a usage error.
  static RunConfig from_json(const Json& j);
};

struct InputData {
  std::vector<EpisodeRow> episodes;
  std::vector<PersonCredit> credits;
  std::vector<GenreRow> genres;
  std::vector<PlatformRow> platform;
  GenreAliases aliases;
};

InputData load_inputs(const InputPaths& paths, bool require_views);

// Consolidated, model-ready rows plus their keys.
struct PreparedData {
  RawTable features;  // id and target columns removed
  std::optional<TargetVector> target;
  std::vector<std::string> series_ids;
  std::vector<std::string> episode_ids;
  std::vector<std::string> warnings;
};

PreparedData prepare_data(const InputData& inputs, const Date& reference_date,
                          const GenreAliases& aliases, bool include_target);

// Everything needed to score new episodes.
struct ModelBundle {
  EnsembleBundle ensemble;
  Date reference_date{};
  GenreAliases genre_aliases;
  std::vector<std::string> feature_names;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> holdout_keys;  // (series_id, episode_id)
  Json config;

  Json to_json() const;
  static ModelBundle from_json(const Json& j);
};

ModelBundle load_bundle(const std::string& path);

struct PredictionResult {
  std::vector<double> raw;        // ensemble output before clamping
  std::vector<double> predicted;  // max(raw, 0)
  std::vector<bool> clamped;
  std::size_t n_clamped = 0;
  std::vector<std::vector<double>> members;
};

PredictionResult predict_bundle(const ModelBundle& bundle, const RawTable& features,
                                Execution exec = Execution::kParallel);

struct SeriesAccuracy {
  std::string series_id;
  std::size_t n_episodes = 0;  // scored (nonzero-target) episodes
  std::optional<double> best_single_accuracy;
  std::optional<double> ensemble_accuracy;
};

// Accuracy = 100 - MAPE within each series, series in first-appearance order.
std::vector<SeriesAccuracy> per_series_accuracy(const std::vector<std::string>& series_ids,
                                                std::span<const double> y,
                                                std::span<const double> best_single,
                                                std::span<const double> ensemble);

struct TrainArtifacts {
  ModelBundle bundle;
  Json report;
  PlotData plots;
};

// Runs search, selection and weighting on prepared data.
TrainArtifacts train_on_data(const RunConfig& config, const PreparedData& data,
                             const Date& reference_date, const GenreAliases& aliases,
                             Execution exec = Execution::kParallel);

// The subcommands. Each writes into `out_dir` and returns the JSON it wrote
// (or a summary for predict).
Json cmd_train(const RunConfig& config, Execution exec = Execution::kParallel);
Json cmd_predict(const std::string& bundle_path, const InputPaths& inputs, const std::string& out_dir);
Json cmd_evaluate(const std::string& bundle_path, const InputPaths& inputs, const std::string& out_dir,
                  bool holdout_only);
// Re-derives the validation numbers of a training report from the bundle and
// inputs. Throws InvariantError on any disagreement.
Json cmd_verify(const std::string& bundle_path, const std::string& report_path,
                const InputPaths& inputs, double tolerance = 1e-9);

Json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const Json& j);

}  // namespace coldstart
