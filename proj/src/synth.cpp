#include "coldstart/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "coldstart/csv.hpp"
#include "coldstart/errors.hpp"
#include "coldstart/random.hpp"

namespace coldstart {
namespace {

constexpr const char* kModule = "synth_oracle";

const char* const kSources[] = {"imdb", "rotten_tomatoes", "fandango"};

std::string series_label(int s) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "S%03d", s + 1);
  return buf;
}

std::string episode_label(int e) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "E%02d", e + 1);
  return buf;
}

std::string clock_length(int minutes) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02d:%02d", minutes / 60, minutes % 60);
  return buf;
}

int uniform_int(Rng& rng, int lo, int hi) {
  return lo + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(hi - lo + 1)));
}

std::string maybe(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

struct EpisodeDraft {
  std::string episode_id;
  Date release;
  int length_minutes = 0;
  bool clock_format = false;
  double noise = 1.0;
};

struct SeriesDraft {
  std::string id;
  std::set<std::string> genres;
  std::vector<std::pair<std::string, std::string>> genre_rows;  // (genre, source)
  std::vector<PersonCredit> credits;                            // may include exact duplicates
  std::vector<EpisodeDraft> episodes;
};

}  // namespace

double GroundTruth::views(const std::string& primary_genre, double best_actor_rating,
                          double actor_total_awards, int age_days, int day_of_week) const {
  const auto g = genre_multipliers.find(primary_genre);
  if (g == genre_multipliers.end()) throw UsageError(kModule, "no multiplier for genre '" + primary_genre + "'");
  return base_views * g->second *
         std::exp(star_power_weight * best_actor_rating + awards_weight * std::log1p(actor_total_awards)) *
         std::pow(decay_rate, age_days) * weekday_uplift.at(static_cast<std::size_t>(day_of_week));
}

Json GroundTruth::to_json() const {
  Json j;
  j["base_views"] = base_views;
  j["genre_multipliers"] = Json::object();
  for (const auto& [g, m] : genre_multipliers) j["genre_multipliers"][g] = m;
  j["star_power_weight"] = star_power_weight;
  j["awards_weight"] = awards_weight;
  j["decay_rate"] = decay_rate;
  j["weekday_uplift"] = weekday_uplift;
  j["reference_date"] = format_iso_date(reference_date);
  return j;
}

GroundTruth GroundTruth::from_json(const Json& j) {
  GroundTruth t;
  t.base_views = j.at("base_views").get<double>();
  t.genre_multipliers.clear();
  for (const auto& [g, m] : j.at("genre_multipliers").items()) t.genre_multipliers[g] = m.get<double>();
  t.star_power_weight = j.at("star_power_weight").get<double>();
  t.awards_weight = j.at("awards_weight").get<double>();
  t.decay_rate = j.at("decay_rate").get<double>();
  t.weekday_uplift = j.at("weekday_uplift").get<std::array<double, 7>>();
  t.reference_date = parse_iso_date(j.at("reference_date").get<std::string>());
  return t;
}

void SynthConfig::validate() const {
  if (n_series < 1) throw UsageError(kModule, "--series must be at least 1");
  if (min_episodes < 1 || max_episodes < min_episodes) {
    throw UsageError(kModule, "--min-episodes and --max-episodes must satisfy 1 <= min <= max");
  }
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) {
    throw UsageError(kModule, "--noise-sigma must be a nonnegative number");
  }
  if (!(cold_start_fraction >= 0.0 && cold_start_fraction <= 1.0)) {
    throw UsageError(kModule, "--cold-start-fraction must lie in [0, 1]");
  }
  if (!start_date.ok()) throw UsageError(kModule, "start date is not a valid calendar date");
  if (truth.genre_multipliers.empty()) throw UsageError(kModule, "ground truth needs at least one genre");
  if (!(truth.decay_rate > 0.0 && truth.decay_rate <= 1.0)) {
    throw UsageError(kModule, "decay_rate must lie in (0, 1]");
  }
}

Json SynthConfig::to_json() const {
  return {{"n_series", n_series},
          {"min_episodes", min_episodes},
          {"max_episodes", max_episodes},
          {"seed", seed},
          {"noise_sigma", noise_sigma},
          {"cold_start_fraction", cold_start_fraction},
          {"start_date", format_iso_date(start_date)}};
}

SynthOutput generate(const SynthConfig& config) {
  config.validate();
  Rng rng(config.seed);
  using std::chrono::days;
  using std::chrono::sys_days;

  std::vector<std::string> genre_names;
  for (const auto& [g, m] : config.truth.genre_multipliers) genre_names.push_back(g);

  std::vector<SeriesDraft> series(static_cast<std::size_t>(config.n_series));
  Date latest = config.start_date;
  for (int s = 0; s < config.n_series; ++s) {
    auto& draft = series[static_cast<std::size_t>(s)];
    draft.id = series_label(s);

    const int n_genres = uniform_int(rng, 1, std::min<int>(3, static_cast<int>(genre_names.size())));
    while (static_cast<int>(draft.genres.size()) < n_genres) {
      draft.genres.insert(genre_names[rng.uniform_index(genre_names.size())]);
    }
    for (const auto& g : draft.genres) {
      draft.genre_rows.emplace_back(g, kSources[rng.uniform_index(3)]);
      if (rng.uniform01() < 0.3) draft.genre_rows.emplace_back(g, kSources[rng.uniform_index(3)]);
    }

    auto add_people = [&](CreditRole role, int lo, int hi, double rating_lo, double rating_hi) {
      const int count = uniform_int(rng, lo, hi);
      for (int p = 0; p < count; ++p) {
        PersonCredit c;
        c.series_id = draft.id;
        c.name = std::string(to_string(role)) + "_" + draft.id + "_" + std::to_string(p + 1);
        c.role = role;
        // Ratings on a 0.1 grid; the first credit of each role is always rated.
        if (p == 0 || rng.uniform01() >= 0.1) {
          c.imdb_rating = std::round(rng.uniform(rating_lo, rating_hi) * 10.0) / 10.0;
        }
        if (rng.uniform01() >= 0.05) c.awards = static_cast<double>(uniform_int(rng, 0, 12));
        draft.credits.push_back(c);
        if (rng.uniform01() < 0.05) draft.credits.push_back(c);  // exact duplicate row
      }
    };
    add_people(CreditRole::kActor, 2, 6, 4.0, 9.0);
    add_people(CreditRole::kDirector, 1, 2, 5.0, 9.0);
    add_people(CreditRole::kWriter, 1, 3, 5.0, 9.0);

    const int n_episodes = uniform_int(rng, config.min_episodes, config.max_episodes);
    Date release = sys_days{config.start_date} + days{uniform_int(rng, 0, 900)};
    const int base_length = uniform_int(rng, 20, 60);
    const bool clock_format = rng.uniform01() < 0.2;
    for (int e = 0; e < n_episodes; ++e) {
      EpisodeDraft ep;
      ep.episode_id = episode_label(e);
      ep.release = release;
      ep.length_minutes = std::max(1, base_length + uniform_int(rng, -5, 5));
      ep.clock_format = clock_format;
      ep.noise = config.noise_sigma > 0.0 ? std::exp(config.noise_sigma * rng.normal()) : 1.0;
      latest = std::max(latest, release);
      draft.episodes.push_back(ep);
      release = sys_days{release} + days{uniform_int(rng, 3, 10)};
    }
  }

  SynthOutput out;
  out.truth = config.truth;
  out.truth.reference_date = latest;

  std::ostringstream episodes;
  std::ostringstream credits;
  std::ostringstream genres;
  std::ostringstream platform;
  csv::write_row(episodes, std::vector<std::string>{"series_id", "episode_id", "release_date", "length", "views"});
  csv::write_row(credits, std::vector<std::string>{"series_id", "name", "role", "imdb_rating", "awards"});
  csv::write_row(genres, std::vector<std::string>{"series_id", "genre", "source"});
  csv::write_row(platform, std::vector<std::string>{"series_id", "episode_id", "exposures", "minutes_viewed",
                                                    "revenue", "audience_estimate", "impressions"});

  for (const auto& draft : series) {
    // Features exactly as the consolidation step will compute them.
    std::optional<double> best_rating;
    double awards = 0.0;
    const std::set<PersonCredit> unique(draft.credits.begin(), draft.credits.end());
    for (const auto& c : unique) {
      if (c.role != CreditRole::kActor) continue;
      if (c.imdb_rating) best_rating = std::max(best_rating.value_or(*c.imdb_rating), *c.imdb_rating);
      if (c.awards) awards += *c.awards;
    }
    const std::string& primary_genre = *draft.genres.begin();

    for (const auto& c : draft.credits) {
      csv::write_row(credits, std::vector<std::string>{c.series_id, c.name, std::string(to_string(c.role)),
                                                       maybe(c.imdb_rating), maybe(c.awards)});
    }
    for (const auto& [g, source] : draft.genre_rows) {
      csv::write_row(genres, std::vector<std::string>{draft.id, g, source});
    }
    for (const auto& ep : draft.episodes) {
      const auto date = derive_date_features(ep.release, out.truth.reference_date);
      const double views =
          out.truth.views(primary_genre, *best_rating, awards, date.age_days, date.day_of_week) * ep.noise;
      const std::string length =
          ep.clock_format ? clock_length(ep.length_minutes) : format_length(ep.length_minutes);
      csv::write_row(episodes, std::vector<std::string>{draft.id, ep.episode_id, format_iso_date(ep.release),
                                                        length, format_double(views)});

      // Platform metrics are drawn independently of views.
      std::optional<double> audience = std::round(std::exp(rng.uniform(9.0, 12.0)));
      std::optional<double> exposures = std::round(*audience * rng.uniform(0.5, 1.5));
      std::optional<double> impressions = std::round(*exposures * rng.uniform(1.0, 3.0));
      std::optional<double> minutes = std::round(ep.length_minutes * rng.uniform(0.3, 0.95) * 10.0) / 10.0;
      std::optional<double> revenue = std::round(rng.uniform(100.0, 5000.0) * 100.0) / 100.0;
      for (auto* metric : {&audience, &exposures, &impressions, &minutes, &revenue}) {
        if (rng.uniform01() < 0.03) metric->reset();
      }
      csv::write_row(platform, std::vector<std::string>{draft.id, ep.episode_id, maybe(exposures), maybe(minutes),
                                                        maybe(revenue), maybe(audience), maybe(impressions)});
    }
  }

  const auto n_cold = static_cast<std::size_t>(
      std::floor(static_cast<double>(config.n_series) * config.cold_start_fraction + 0.5));
  auto order = seeded_permutation(series.size(), mix_seed(config.seed, 0xC01D));
  order.resize(n_cold);
  std::sort(order.begin(), order.end());
  for (auto s : order) out.cold_start_series.push_back(series[s].id);

  Json truth;
  truth["seed"] = config.seed;
  truth["config"] = config.to_json();
  truth["formula"] =
      "views = base_views * genre_multipliers[primary_genre] * exp(star_power_weight * best_actor_rating"
      " + awards_weight * log1p(actor_total_awards)) * decay_rate^age_days * weekday_uplift[day_of_week]"
      " * lognormal(0, noise_sigma)";
  truth["coefficients"] = out.truth.to_json();
  truth["cold_start_series"] = out.cold_start_series;

  out.episodes_csv = episodes.str();
  out.credits_csv = credits.str();
  out.genres_csv = genres.str();
  out.platform_csv = platform.str();
  out.ground_truth_json = truth.dump(2) + "\n";
  return out;
}

void write_synth(const SynthOutput& output, const std::string& directory) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(directory, ec);
  if (ec) throw DataError(kModule, "cannot create directory '" + directory + "': " + ec.message());
  auto write = [&](const char* name, const std::string& text) {
    const auto path = fs::path(directory) / name;
    std::ofstream f(path, std::ios::binary);
    f << text;
    if (!f) throw DataError(kModule, "cannot write '" + path.string() + "'");
  };
  write("episodes.csv", output.episodes_csv);
  write("credits.csv", output.credits_csv);
  write("genres.csv", output.genres_csv);
  write("platform.csv", output.platform_csv);
  write("ground_truth.json", output.ground_truth_json);
}

}  // namespace coldstart
