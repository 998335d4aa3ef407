#include "coldstart/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "coldstart/errors.hpp"
#include "coldstart/importance.hpp"
#include "coldstart/kmeans.hpp"
#include "coldstart/metrics.hpp"

namespace coldstart {
namespace {

constexpr const char* kModule = "cli_report";

std::string fnv1a_hex(std::string_view text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

double population_sd(std::span<const double> v) {
  if (v.empty()) return 0.0;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size()));
}

ModelSpec merged_spec(const ModelSpec& base, const ParamAssignment& sampled) {
  ModelSpec spec = base;
  for (const auto& [name, value] : sampled) {
    auto it = std::find_if(spec.params.begin(), spec.params.end(),
                           [&](const auto& kv) { return kv.first == name; });
    if (it == spec.params.end()) {
      spec.params.emplace_back(name, value);
    } else {
      it->second = value;
    }
  }
  return spec;
}

std::vector<double> clamp_nonnegative(std::span<const double> v) {
  std::vector<double> out(v.begin(), v.end());
  for (double& x : out) x = std::max(x, 0.0);
  return out;
}

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

Json series_table_json(const std::vector<SeriesAccuracy>& rows) {
  Json out = Json::array();
  for (const auto& r : rows) {
    out.push_back({{"series_id", r.series_id},
                   {"n_episodes", r.n_episodes},
                   {"best_single_accuracy", optional_number(r.best_single_accuracy)},
                   {"ensemble_accuracy", optional_number(r.ensemble_accuracy)}});
  }
  return out;
}

// Rows of `data` whose keys appear in `keys`, in data order.
std::vector<std::size_t> rows_for_keys(const PreparedData& data,
                                       const std::vector<std::pair<std::string, std::string>>& keys) {
  const std::set<std::pair<std::string, std::string>> wanted(keys.begin(), keys.end());
  std::vector<std::size_t> rows;
  for (std::size_t r = 0; r < data.series_ids.size(); ++r) {
    if (wanted.contains({data.series_ids[r], data.episode_ids[r]})) rows.push_back(r);
  }
  if (rows.size() != wanted.size()) {
    throw DataError(kModule, "inputs contain " + std::to_string(rows.size()) + " of the " +
                                 std::to_string(wanted.size()) + " holdout episodes in the bundle");
  }
  return rows;
}

PreparedData select_prepared(const PreparedData& data, std::span<const std::size_t> rows) {
  PreparedData out;
  out.features = data.features.select_rows(rows);
  if (data.target) out.target = data.target->select_rows(rows);
  for (std::size_t r : rows) {
    out.series_ids.push_back(data.series_ids[r]);
    out.episode_ids.push_back(data.episode_ids[r]);
  }
  out.warnings = data.warnings;
  return out;
}

CorrelationMatrix numeric_correlation(const Preprocessor& pre, const FeatureMatrix& x,
                                      std::span<const double> y) {
  // Standardization is affine, so correlations of the transformed numeric
  // columns equal those of the imputed raw columns.
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;
  for (std::size_t c = 0; c < pre.numeric().size(); ++c) {
    names.push_back(pre.numeric()[c].name);
    columns.push_back(x.column(c));
  }
  names.emplace_back("views");
  columns.emplace_back(y.begin(), y.end());
  return correlation_matrix(std::move(names), columns);
}

Json correlation_json(const CorrelationMatrix& m) {
  Json values = Json::array();
  const std::size_t p = m.names.size();
  for (std::size_t i = 0; i < p; ++i) {
    Json row = Json::array();
    for (std::size_t j = 0; j < p; ++j) row.push_back(optional_number(m.values[i * p + j]));
    values.push_back(row);
  }
  return {{"names", m.names}, {"values", values}};
}

std::optional<std::size_t> index_of(const std::vector<std::string>& names, std::string_view name) {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) return std::nullopt;
  return static_cast<std::size_t>(it - names.begin());
}

// Groups training series by star rating and awards (first episode of each
// series; both values are series-level).
Json cluster_series(const FeatureMatrix& x, const std::vector<std::string>& series_ids,
                    std::uint64_t seed) {
  const auto rating = index_of(x.feature_names(), "best_actor_rating");
  const auto awards = index_of(x.feature_names(), "actor_total_awards");
  if (!rating || !awards) return {{"skipped", "actor rating or awards column not present"}};
  std::vector<std::string> ids;
  std::vector<double> points;
  std::set<std::string> seen;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    if (!seen.insert(series_ids[r]).second) continue;
    ids.push_back(series_ids[r]);
    points.push_back(x(r, *rating));
    points.push_back(x(r, *awards));
  }
  const std::size_t k = std::min<std::size_t>(3, ids.size());
  if (k < 2) return {{"skipped", "fewer than two training series"}};
  const auto result = kmeans_cluster(points, 2, k, seed);
  Json assignments = Json::object();
  for (std::size_t i = 0; i < ids.size(); ++i) assignments[ids[i]] = result.assignments[i];
  Json centroids = Json::array();
  for (std::size_t c = 0; c < k; ++c) {
    centroids.push_back({result.centroids[2 * c], result.centroids[2 * c + 1]});
  }
  return {{"features", {"best_actor_rating", "actor_total_awards"}},
          {"units", "standardized"},
          {"k", k},
          {"centroids", centroids},
          {"inertia", result.inertia},
          {"iterations", result.iterations},
          {"assignments", assignments}};
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  f << text;
  if (!f) throw DataError(kModule, "cannot write '" + path.string() + "'");
}

void ensure_directory(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError(kModule, "cannot create '" + dir + "': " + ec.message());
}

struct Mismatch {
  std::string what;
  double expected;
  double actual;
};

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

void InputPaths::validate() const {
  std::vector<std::pair<std::string, std::string>> named = {
      {"episodes", episodes}, {"credits", credits}, {"genres", genres}, {"platform", platform}};
  if (genre_aliases) named.emplace_back("genre-aliases", *genre_aliases);
  std::set<std::string> seen;
  for (const auto& [flag, path] : named) {
    if (path.empty()) throw UsageError(kModule, "missing input path --" + flag);
    if (!seen.insert(path).second) {
      throw UsageError(kModule, "input path '" + path + "' is given twice (--" + flag + ")");
    }
  }
}

Json InputPaths::to_json() const {
  Json j = {{"episodes", episodes}, {"credits", credits}, {"genres", genres}, {"platform", platform}};
  if (genre_aliases) j["genre_aliases"] = *genre_aliases;
  return j;
}

InputPaths InputPaths::from_json(const Json& j) {
  if (!j.is_object()) throw UsageError(kModule, "'inputs' must be an object");
  InputPaths p;
  for (const auto& [key, value] : j.items()) {
    if (!value.is_string()) throw UsageError(kModule, "inputs." + key + " must be a string");
    const auto s = value.get<std::string>();
    if (key == "episodes") {
      p.episodes = s;
    } else if (key == "credits") {
      p.credits = s;
    } else if (key == "genres") {
      p.genres = s;
    } else if (key == "platform") {
      p.platform = s;
    } else if (key == "genre_aliases") {
      p.genre_aliases = s;
    } else {
      throw UsageError(kModule, "unknown inputs key '" + key + "'");
    }
  }
  return p;
}

void RunConfig::validate() const {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw UsageError(kModule, "--test-fraction must lie strictly between 0 and 1");
  }
  if (families.empty()) throw UsageError(kModule, "--families must name at least one model family");
  std::set<ModelFamily> unique(families.begin(), families.end());
  if (unique.size() != families.size()) throw UsageError(kModule, "--families lists a family twice");
  if (n_iter < 1) throw UsageError(kModule, "--n-iter must be at least 1");
  if (k < 2) throw UsageError(kModule, "--folds must be at least 2");
  if (top_k < 1) throw UsageError(kModule, "--top-k must be at least 1");
  if (importance_repeats < 1) throw UsageError(kModule, "--importance-repeats must be at least 1");
  for (const auto& [name, grid] : grids) {
    model_family_from_string(name);
    grid.validate();
  }
  for (const auto& [name, params] : fixed_params) model_family_from_string(name);
}

ParamGrid RunConfig::grid_for(ModelFamily f) const {
  const auto it = grids.find(std::string(to_string(f)));
  return it == grids.end() ? default_grid(f) : it->second;
}

Scoring RunConfig::scoring_for(ModelFamily f) const {
  return is_tree_family(f) ? Scoring::kNegMape : Scoring::kR2;
}

Json RunConfig::to_json() const {
  Json j;
  j["inputs"] = inputs.to_json();
  j["reference_date"] = reference_date ? Json(format_iso_date(*reference_date)) : Json(nullptr);
  j["test_fraction"] = test_fraction;
  j["seed"] = seed;
  Json fams = Json::array();
  for (auto f : families) fams.push_back(to_string(f));
  j["families"] = fams;
  j["n_iter"] = n_iter;
  j["k"] = k;
  j["top_k"] = top_k;
  j["scheme"] = to_string(scheme);
  j["target_transform"] = to_string(target_transform);
  j["numeric_impute"] = to_string(preprocess.numeric);
  j["categorical_impute"] = to_string(preprocess.categorical);
  Json g = Json::object();
  for (const auto& [name, grid] : grids) g[name] = grid.to_json();
  j["grids"] = g;
  Json fp = Json::object();
  for (const auto& [name, params] : fixed_params) fp[name] = assignment_to_json(params);
  j["fixed_params"] = fp;
  j["importance_repeats"] = importance_repeats;
  j["output_dir"] = output_dir;
  return j;
}

RunConfig RunConfig::from_json(const Json& j) {
  if (!j.is_object()) throw UsageError(kModule, "config must be a JSON object");
  RunConfig c;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "inputs") {
        c.inputs = InputPaths::from_json(v);
      } else if (key == "reference_date") {
        if (!v.is_null()) c.reference_date = parse_iso_date(v.get<std::string>());
      } else if (key == "test_fraction") {
        c.test_fraction = v.get<double>();
      } else if (key == "seed") {
        c.seed = v.get<std::uint64_t>();
      } else if (key == "families") {
        c.families.clear();
        for (const auto& f : v) c.families.push_back(model_family_from_string(f.get<std::string>()));
      } else if (key == "n_iter") {
        c.n_iter = v.get<int>();
      } else if (key == "k") {
        c.k = v.get<int>();
      } else if (key == "top_k") {
        c.top_k = v.get<std::size_t>();
      } else if (key == "scheme") {
        c.scheme = weight_scheme_from_string(v.get<std::string>());
      } else if (key == "target_transform") {
        c.target_transform = target_transform_from_string(v.get<std::string>());
      } else if (key == "numeric_impute") {
        c.preprocess.numeric = numeric_impute_from_string(v.get<std::string>());
      } else if (key == "categorical_impute") {
        c.preprocess.categorical = categorical_impute_from_string(v.get<std::string>());
      } else if (key == "grids") {
        for (const auto& [name, grid] : v.items()) c.grids[name] = ParamGrid::from_json(grid);
      } else if (key == "fixed_params") {
        for (const auto& [name, params] : v.items()) c.fixed_params[name] = assignment_from_json(params);
      } else if (key == "importance_repeats") {
        c.importance_repeats = v.get<int>();
      } else if (key == "output_dir") {
        c.output_dir = v.get<std::string>();
      } else {
        throw UsageError(kModule, "unknown config key '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(kModule, std::string("malformed config: ") + e.what());
  }
  return c;
}

// ---------------------------------------------------------------------------
// Data

InputData load_inputs(const InputPaths& paths, bool require_views) {
  paths.validate();
  InputData d;
  const auto ep = episodes_schema(require_views);
  d.episodes = episodes_from_table(load_csv(paths.episodes, ep));
  const auto cr = credits_schema();
  d.credits = credits_from_table(load_csv(paths.credits, cr));
  const auto ge = genres_schema();
  d.genres = genres_from_table(load_csv(paths.genres, ge));
  const auto pl = platform_schema();
  d.platform = platform_from_table(load_csv(paths.platform, pl));
  if (paths.genre_aliases) {
    const auto al = genre_alias_schema();
    d.aliases = aliases_from_table(load_csv(*paths.genre_aliases, al));
  }
  return d;
}

PreparedData prepare_data(const InputData& inputs, const Date& reference_date,
                          const GenreAliases& aliases, bool include_target) {
  ConsolidationOptions options{reference_date, aliases, include_target};
  auto consolidated =
      consolidate_metadata(inputs.episodes, inputs.credits, inputs.genres, inputs.platform, options);
  PreparedData out;
  out.warnings = std::move(consolidated.warnings);
  const RawTable& table = consolidated.table;
  for (const auto& cell : table.at("series_id").texts()) out.series_ids.push_back(cell.value_or(""));
  for (const auto& cell : table.at("episode_id").texts()) out.episode_ids.push_back(cell.value_or(""));
  if (include_target) {
    const auto schema = consolidated_schema(true);
    auto dataset = build_dataset(table, schema);
    out.features = std::move(dataset.features);
    out.target = std::move(dataset.target);
  } else {
    RawTable features;
    for (const auto& column : table.columns()) {
      if (column.schema.role == ColumnRole::kId || column.schema.role == ColumnRole::kTarget) continue;
      features.add_column(column);
    }
    out.features = std::move(features);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Bundle

Json ModelBundle::to_json() const {
  Json j;
  j["schema_version"] = kBundleSchemaVersion;
  j["seed"] = seed;
  j["reference_date"] = format_iso_date(reference_date);
  j["target_transform"] = to_string(ensemble.target_transform);
  j["scheme"] = to_string(ensemble.scheme);
  Json al = Json::object();
  for (const auto& [alias, canonical] : genre_aliases) al[alias] = canonical;
  j["genre_aliases"] = al;
  j["feature_names"] = feature_names;
  j["preprocessor"] = ensemble.preprocessor.to_json();
  Json members = Json::array();
  for (const auto& m : ensemble.members) {
    members.push_back({{"family", to_string(m.model.family)},
                       {"validation_mape", m.validation_mape},
                       {"validation_smape", m.validation_smape},
                       {"weight", m.weight},
                       {"model", model_to_json(m.model)}});
  }
  j["members"] = members;
  Json holdout = Json::array();
  for (const auto& [s, e] : holdout_keys) holdout.push_back({s, e});
  j["holdout"] = holdout;
  j["config_digest"] = fnv1a_hex(config.dump());
  j["config"] = config;
  return j;
}

ModelBundle ModelBundle::from_json(const Json& j) {
  try {
    const int version = j.at("schema_version").get<int>();
    if (version != kBundleSchemaVersion) {
      throw DataError(kModule, "unsupported bundle schema_version " + std::to_string(version));
    }
    ModelBundle b;
    b.seed = j.at("seed").get<std::uint64_t>();
    b.reference_date = parse_iso_date(j.at("reference_date").get<std::string>());
    b.ensemble.target_transform = target_transform_from_string(j.at("target_transform").get<std::string>());
    b.ensemble.scheme = weight_scheme_from_string(j.at("scheme").get<std::string>());
    for (const auto& [alias, canonical] : j.at("genre_aliases").items()) {
      b.genre_aliases[alias] = canonical.get<std::string>();
    }
    b.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    b.ensemble.preprocessor = Preprocessor::from_json(j.at("preprocessor"));
    if (b.ensemble.preprocessor.feature_names() != b.feature_names) {
      throw DataError(kModule, "bundle feature_names disagree with its preprocessor");
    }
    for (const auto& m : j.at("members")) {
      EnsembleMember member;
      member.model = model_from_json(m.at("model"), b.feature_names.size());
      member.validation_mape = m.at("validation_mape").get<double>();
      member.validation_smape = m.at("validation_smape").get<double>();
      member.weight = m.at("weight").get<double>();
      b.ensemble.members.push_back(std::move(member));
    }
    for (const auto& key : j.at("holdout")) {
      b.holdout_keys.emplace_back(key.at(0).get<std::string>(), key.at(1).get<std::string>());
    }
    b.config = j.at("config");
    b.ensemble.check_invariants();
    return b;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(kModule, std::string("malformed bundle: ") + e.what());
  }
}

ModelBundle load_bundle(const std::string& path) { return ModelBundle::from_json(read_json_file(path)); }

Json read_json_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError(kModule, "cannot open '" + path + "'");
  try {
    return Json::parse(f);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(kModule, "'" + path + "' is not valid JSON: " + e.what());
  }
}

void write_json_file(const std::string& path, const Json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Scoring helpers

PredictionResult predict_bundle(const ModelBundle& bundle, const RawTable& features, Execution exec) {
  const FeatureMatrix x = bundle.ensemble.preprocessor.transform(features);
  PredictionResult out;
  out.members = member_predictions(bundle.ensemble, x, exec);
  const auto weights = bundle.ensemble.weights();
  out.raw = weighted_average(out.members, weights);
  out.predicted = clamp_nonnegative(out.raw);
  out.clamped.resize(out.raw.size());
  for (std::size_t i = 0; i < out.raw.size(); ++i) {
    out.clamped[i] = out.raw[i] < 0.0;
    out.n_clamped += out.clamped[i] ? 1 : 0;
  }
  return out;
}

std::vector<SeriesAccuracy> per_series_accuracy(const std::vector<std::string>& series_ids,
                                                std::span<const double> y,
                                                std::span<const double> best_single,
                                                std::span<const double> ensemble) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<std::size_t>> rows;
  for (std::size_t i = 0; i < series_ids.size(); ++i) {
    auto [it, inserted] = rows.try_emplace(series_ids[i]);
    if (inserted) order.push_back(series_ids[i]);
    it->second.push_back(i);
  }
  std::vector<SeriesAccuracy> out;
  for (const auto& id : order) {
    std::vector<double> ys, bs, es;
    for (std::size_t i : rows[id]) {
      ys.push_back(y[i]);
      bs.push_back(best_single[i]);
      es.push_back(ensemble[i]);
    }
    SeriesAccuracy acc;
    acc.series_id = id;
    const bool scorable = std::any_of(ys.begin(), ys.end(), [](double v) { return v != 0.0; });
    if (scorable) {
      const auto detail = mape_detail(ys, es);
      acc.n_episodes = detail.n_scored;
      acc.ensemble_accuracy = 100.0 - detail.percent;
      acc.best_single_accuracy = 100.0 - mape(ys, bs);
    }
    out.push_back(std::move(acc));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Training

TrainArtifacts train_on_data(const RunConfig& config, const PreparedData& data,
                             const Date& reference_date, const GenreAliases& aliases, Execution exec) {
  config.validate();
  if (!data.target) throw UsageError(kModule, "training needs a views column");
  const auto split = split_holdout(data.features, *data.target, config.test_fraction, config.seed);
  const Preprocessor pre = fit_preprocessor(split.train.features, config.preprocess);
  const FeatureMatrix x_train = pre.transform(split.train.features);
  const FeatureMatrix x_test = pre.transform(split.test.features);
  const std::span<const double> y_test = split.test.target.values();
  const auto y_train_fit = forward_transform(config.target_transform, split.train.target.values());
  // Convergence is judged on coefficient change, which lives on the target's scale.
  const double linear_tol = 1e-6 * std::max(1.0, population_sd(y_train_fit));
  const PipelineContext context{config.preprocess, config.target_transform};

  std::vector<std::string> test_series, train_series;
  for (std::size_t r : split.test_rows) test_series.push_back(data.series_ids[r]);
  for (std::size_t r : split.train_rows) train_series.push_back(data.series_ids[r]);

  Json models = Json::array();
  std::vector<ScoredModel> scored;
  for (const ModelFamily family : config.families) {
    Json entry;
    entry["family"] = to_string(family);
    ModelSpec base;
    base.family = family;
    base.seed = config.seed;
    base.linear_tol = linear_tol;
    if (auto it = config.fixed_params.find(std::string(to_string(family))); it != config.fixed_params.end()) {
      base.params = it->second;
    }
    try {
      const auto search = randomized_search_pipeline(base, config.grid_for(family), config.n_iter,
                                                     split.train.features, split.train.target, config.k,
                                                     config.seed, config.scoring_for(family), context, exec);
      Model model = fit_model(merged_spec(base, search.winner().params), x_train, y_train_fit, exec);
      const auto pred = inverse_transform(config.target_transform, predict(model, x_test));
      const auto validation = compute_metrics(y_test, pred);
      entry["search"] = search.to_json();
      entry["params"] = assignment_to_json(model.params);
      entry["validation"] = validation.to_json();
      scored.push_back({std::move(model), validation.mape, validation.smape});
    } catch (const DataError& e) {
      entry["error"] = e.what();
    }
    models.push_back(entry);
  }
  if (scored.empty()) throw DataError(kModule, "no model family could be fit");

  TrainArtifacts art;
  art.bundle.ensemble =
      build_ensemble(std::move(scored), pre, config.scheme, config.target_transform, config.top_k);
  art.bundle.reference_date = reference_date;
  art.bundle.genre_aliases = aliases;
  art.bundle.feature_names = pre.feature_names();
  art.bundle.seed = config.seed;
  for (std::size_t r : split.test_rows) art.bundle.holdout_keys.emplace_back(data.series_ids[r], data.episode_ids[r]);
  art.bundle.config = config.to_json();

  const auto& ensemble = art.bundle.ensemble;
  const auto members = member_predictions(ensemble, x_test, exec);
  const auto raw = weighted_average(members, ensemble.weights());
  const auto final_pred = clamp_nonnegative(raw);
  std::size_t n_clamped = 0;
  for (double v : raw) n_clamped += v < 0.0 ? 1 : 0;
  const auto ensemble_metrics = compute_metrics(y_test, final_pred);

  Json selected = Json::array();
  Json member_buckets = Json::array();
  for (std::size_t m = 0; m < ensemble.members.size(); ++m) {
    const auto& member = ensemble.members[m];
    selected.push_back({{"family", to_string(member.model.family)},
                        {"params", assignment_to_json(member.model.params)},
                        {"validation_mape", member.validation_mape},
                        {"validation_smape", member.validation_smape},
                        {"weight", member.weight}});
    member_buckets.push_back({{"family", to_string(member.model.family)},
                              {"buckets", error_buckets(y_test, members[m]).to_json()}});
  }
  const auto before = error_buckets(y_test, members.front());
  const auto after = error_buckets(y_test, final_pred);

  Json predictions = Json::array();
  for (std::size_t i = 0; i < final_pred.size(); ++i) {
    Json per_member = Json::array();
    for (const auto& mp : members) per_member.push_back(mp[i]);
    const std::size_t r = split.test_rows[i];
    predictions.push_back({{"series_id", data.series_ids[r]},
                           {"episode_id", data.episode_ids[r]},
                           {"actual", y_test[i]},
                           {"predicted", final_pred[i]},
                           {"clamped", raw[i] < 0.0},
                           {"members", per_member}});
  }

  Json importance;
  {
    const Predictor predictor = [&ensemble](const FeatureMatrix& m) {
      return ensemble_predict(ensemble, m, Execution::kSerial);
    };
    try {
      const auto perm = permutation_importance(predictor, x_test, y_test, ImportanceMetric::kMape,
                                               config.importance_repeats, config.seed, exec);
      importance["permutation"] = {{"metric", "mape"},
                                   {"repeats", config.importance_repeats},
                                   {"data", "holdout"},
                                   {"report", perm.to_json()}};
      art.plots.importance = perm;
    } catch (const DataError& e) {
      importance["permutation"] = {{"skipped", e.what()}};
    }
    Json impurity = Json::object();
    for (const auto& member : ensemble.members) {
      if (is_tree_family(member.model.family)) {
        impurity[std::string(to_string(member.model.family))] =
            impurity_importance(member.model, pre.feature_names()).to_json();
      }
    }
    importance["impurity"] = impurity;
  }

  const auto correlation = numeric_correlation(pre, x_train, split.train.target.values());
  const auto series_table = per_series_accuracy(test_series, y_test, members.front(), final_pred);

  Json report;
  report["schema_version"] = kBundleSchemaVersion;
  report["seed"] = config.seed;
  report["config_digest"] = fnv1a_hex(art.bundle.config.dump());
  report["reference_date"] = format_iso_date(reference_date);
  report["target_transform"] = to_string(config.target_transform);
  report["data"] = {{"n_episodes", data.features.n_rows()},
                    {"n_train", split.train_rows.size()},
                    {"n_holdout", split.test_rows.size()},
                    {"n_features", x_train.cols()},
                    {"warnings", data.warnings}};
  report["models"] = models;
  report["selected"] = selected;
  report["ensemble"] = {{"scheme", to_string(config.scheme)},
                        {"weights", ensemble.weights()},
                        {"validation", ensemble_metrics.to_json()},
                        {"n_clamped", n_clamped}};
  report["error_buckets"] = {{"labels", ErrorBuckets::labels()},
                             {"before", {{"family", to_string(ensemble.members.front().model.family)},
                                         {"buckets", before.to_json()}}},
                             {"after", after.to_json()},
                             {"members", member_buckets}};
  report["per_series"] = series_table_json(series_table);
  report["importance"] = importance;
  report["correlation"] = correlation_json(correlation);
  report["clusters"] = cluster_series(x_train, train_series, config.seed);
  report["validation_predictions"] = predictions;
  art.report = std::move(report);

  art.plots.scatter = ScatterSeries{{y_test.begin(), y_test.end()}, final_pred};
  art.plots.correlation = correlation;
  art.plots.buckets_before = before;
  art.plots.buckets_after = after;
  return art;
}

// ---------------------------------------------------------------------------
// Subcommands

Json cmd_train(const RunConfig& config, Execution exec) {
  config.validate();
  const auto inputs = load_inputs(config.inputs, true);
  const Date reference = config.reference_date ? *config.reference_date : max_release_date(inputs.episodes);
  const auto data = prepare_data(inputs, reference, inputs.aliases, true);
  auto art = train_on_data(config, data, reference, inputs.aliases, exec);
  ensure_directory(config.output_dir);
  const std::filesystem::path out(config.output_dir);
  art.report["plot_notes"] = emit_plots(art.plots, (out / "plots").string());
  // Compact: forest members make the indented form several times larger.
  write_text_file(out / "bundle.json", art.bundle.to_json().dump() + "\n");
  write_json_file((out / "training_report.json").string(), art.report);
  return art.report;
}

Json cmd_predict(const std::string& bundle_path, const InputPaths& inputs, const std::string& out_dir) {
  const auto bundle = load_bundle(bundle_path);
  const auto raw_inputs = load_inputs(inputs, false);
  const auto data = prepare_data(raw_inputs, bundle.reference_date, bundle.genre_aliases, false);
  const auto result = predict_bundle(bundle, data.features);
  ensure_directory(out_dir);
  std::ostringstream csv_text;
  const std::vector<std::string> header = {"series_id", "episode_id", "predicted_views", "clamped"};
  csv::write_row(csv_text, header);
  for (std::size_t i = 0; i < result.predicted.size(); ++i) {
    const std::vector<std::string> row = {data.series_ids[i], data.episode_ids[i],
                                          format_double(result.predicted[i]),
                                          result.clamped[i] ? "1" : "0"};
    csv::write_row(csv_text, row);
  }
  const auto path = std::filesystem::path(out_dir) / "predictions.csv";
  write_text_file(path, csv_text.str());
  return {{"predictions", path.string()},
          {"n_rows", result.predicted.size()},
          {"n_clamped", result.n_clamped},
          {"warnings", data.warnings}};
}

Json cmd_evaluate(const std::string& bundle_path, const InputPaths& inputs, const std::string& out_dir,
                  bool holdout_only) {
  const auto bundle = load_bundle(bundle_path);
  const auto raw_inputs = load_inputs(inputs, true);
  auto data = prepare_data(raw_inputs, bundle.reference_date, bundle.genre_aliases, true);
  if (holdout_only) data = select_prepared(data, rows_for_keys(data, bundle.holdout_keys));
  const auto result = predict_bundle(bundle, data.features);
  const auto y = data.target->values();
  const auto metrics = compute_metrics(y, result.predicted);

  Json members = Json::array();
  for (std::size_t m = 0; m < bundle.ensemble.members.size(); ++m) {
    members.push_back({{"family", to_string(bundle.ensemble.members[m].model.family)},
                       {"weight", bundle.ensemble.members[m].weight},
                       {"metrics", compute_metrics(y, result.members[m]).to_json()},
                       {"buckets", error_buckets(y, result.members[m]).to_json()}});
  }
  const auto before = error_buckets(y, result.members.front());
  const auto after = error_buckets(y, result.predicted);
  const auto table = per_series_accuracy(data.series_ids, y, result.members.front(), result.predicted);

  Json report;
  report["schema_version"] = kBundleSchemaVersion;
  report["seed"] = bundle.seed;
  report["config_digest"] = fnv1a_hex(bundle.config.dump());
  report["holdout_only"] = holdout_only;
  report["n_episodes"] = y.size();
  report["n_clamped"] = result.n_clamped;
  report["metrics"] = metrics.to_json();
  report["members"] = members;
  report["error_buckets"] = {{"labels", ErrorBuckets::labels()},
                             {"before", {{"family", to_string(bundle.ensemble.members.front().model.family)},
                                         {"buckets", before.to_json()}}},
                             {"after", after.to_json()}};
  report["per_series"] = series_table_json(table);
  report["warnings"] = data.warnings;

  PlotData plots;
  plots.scatter = ScatterSeries{{y.begin(), y.end()}, result.predicted};
  plots.correlation = numeric_correlation(bundle.ensemble.preprocessor,
                                          bundle.ensemble.preprocessor.transform(data.features), y);
  plots.buckets_before = before;
  plots.buckets_after = after;
  ensure_directory(out_dir);
  const std::filesystem::path out(out_dir);
  report["plot_notes"] = emit_plots(plots, (out / "plots").string());
  write_json_file((out / "evaluation_report.json").string(), report);
  return report;
}

Json cmd_verify(const std::string& bundle_path, const std::string& report_path, const InputPaths& inputs,
                double tolerance) {
  const auto bundle = load_bundle(bundle_path);
  const Json report = read_json_file(report_path);
  const auto raw_inputs = load_inputs(inputs, true);
  auto data = prepare_data(raw_inputs, bundle.reference_date, bundle.genre_aliases, true);
  data = select_prepared(data, rows_for_keys(data, bundle.holdout_keys));
  const auto result = predict_bundle(bundle, data.features, Execution::kSerial);
  const auto y = data.target->values();

  std::vector<Mismatch> mismatches;
  std::size_t checks = 0;
  auto check = [&](const std::string& what, double expected, double actual) {
    ++checks;
    if (!(std::abs(expected - actual) <= tolerance * std::max(1.0, std::abs(expected)))) {
      mismatches.push_back({what, expected, actual});
    }
  };
  try {
    if (report.at("config_digest").get<std::string>() != fnv1a_hex(bundle.config.dump())) {
      throw InvariantError(kModule, "verify: report and bundle come from different configs");
    }
    const auto& selected = report.at("selected");
    if (selected.size() != bundle.ensemble.members.size()) {
      throw InvariantError(kModule, "verify: report lists a different number of ensemble members");
    }
    std::vector<double> errors;
    for (std::size_t m = 0; m < bundle.ensemble.members.size(); ++m) {
      const auto& member = bundle.ensemble.members[m];
      const auto metrics = compute_metrics(y, result.members[m]);
      const std::string tag = "member " + std::to_string(m) + " (" + std::string(to_string(member.model.family)) + ")";
      check(tag + " validation_mape", member.validation_mape, metrics.mape);
      check(tag + " validation_smape", member.validation_smape, metrics.smape);
      check(tag + " reported validation_mape", selected[m].at("validation_mape").get<double>(), metrics.mape);
      check(tag + " reported weight", selected[m].at("weight").get<double>(), member.weight);
      errors.push_back(metrics.mape);
    }
    const auto weights = compute_weights_or_fallback(errors, bundle.ensemble.scheme);
    for (std::size_t m = 0; m < weights.size(); ++m) {
      check("weight " + std::to_string(m), bundle.ensemble.members[m].weight, weights[m]);
    }
    const auto metrics = compute_metrics(y, result.predicted);
    const auto& validation = report.at("ensemble").at("validation");
    check("ensemble mape", validation.at("mape").get<double>(), metrics.mape);
    check("ensemble smape", validation.at("smape").get<double>(), metrics.smape);
    if (metrics.r2 && !validation.at("r2").is_null()) {
      check("ensemble r2", validation.at("r2").get<double>(), *metrics.r2);
    }
    const auto& rows = report.at("validation_predictions");
    if (rows.size() != result.predicted.size()) {
      throw InvariantError(kModule, "verify: report has a different number of validation predictions");
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].at("series_id").get<std::string>() != data.series_ids[i] ||
          rows[i].at("episode_id").get<std::string>() != data.episode_ids[i]) {
        throw InvariantError(kModule, "verify: validation prediction rows are out of order");
      }
      check("prediction " + data.series_ids[i] + "/" + data.episode_ids[i],
            rows[i].at("predicted").get<double>(), result.predicted[i]);
    }
    const auto after = error_buckets(y, result.predicted);
    const auto& reported = report.at("error_buckets").at("after");
    for (std::size_t b = 0; b < after.counts.size(); ++b) {
      check("bucket " + std::string(ErrorBuckets::labels()[b]), reported.at(b).at("episodes").get<double>(),
            static_cast<double>(after.counts[b]));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(kModule, std::string("verify: malformed report: ") + e.what());
  }
  if (!mismatches.empty()) {
    const auto& first = mismatches.front();
    std::ostringstream msg;
    msg.precision(17);
    msg << "verify: " << mismatches.size() << " of " << checks << " checks failed; first: " << first.what
        << " expected " << first.expected << ", recomputed " << first.actual;
    throw InvariantError(kModule, msg.str());
  }
  return {{"status", "ok"}, {"checks", checks}, {"n_holdout", y.size()}};
}

}  // namespace coldstart
