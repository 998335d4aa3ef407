#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "coldstart/ingest.hpp"
#include "coldstart/serialization.hpp"

namespace coldstart {

// Coefficients of the generating view function:
//   views = base * genre_mult[primary_genre]
//         * exp(star_power * best_actor_rating + awards_weight * log1p(actor_total_awards))
//         * decay_rate^age_days * weekday_uplift[day_of_week] * eps,
//   eps ~ lognormal(0, noise_sigma).
// primary_genre is the lexicographically smallest genre of the series and
// age_days is measured from the latest release date in the generated data.
struct GroundTruth {
  double base_views = 2000.0;
  std::map<std::string, double> genre_multipliers = {
      {"action", 1.3}, {"comedy", 1.0},  {"crime", 1.15},   {"documentary", 0.6},
      {"drama", 0.9},  {"romance", 0.8}, {"thriller", 1.2}};
  double star_power_weight = 0.45;
  double awards_weight = 0.15;
  double decay_rate = 0.9995;
  std::array<double, 7> weekday_uplift = {1.0, 0.95, 0.95, 1.0, 1.1, 1.25, 1.2};  // Monday first
  Date reference_date{};

  double views(const std::string& primary_genre, double best_actor_rating,
               double actor_total_awards, int age_days, int day_of_week) const;

  Json to_json() const;
  static GroundTruth from_json(const Json& j);
};

struct SynthConfig {
  int n_series = 50;
  int min_episodes = 4;
  int max_episodes = 16;
  std::uint64_t seed = 42;
  double noise_sigma = 0.3;
  double cold_start_fraction = 0.2;
  Date start_date{std::chrono::year{2015}, std::chrono::month{10}, std::chrono::day{1}};
  GroundTruth truth;  // reference_date is filled in by generate()

  void validate() const;
  Json to_json() const;
};

struct SynthOutput {
  std::string episodes_csv;
  std::string credits_csv;
  std::string genres_csv;
  std::string platform_csv;
  std::string ground_truth_json;

  GroundTruth truth;
  std::vector<std::string> cold_start_series;
};

SynthOutput generate(const SynthConfig& config);

// Writes episodes.csv, credits.csv, genres.csv, platform.csv and ground_truth.json.
void write_synth(const SynthOutput& output, const std::string& directory);

}  // namespace coldstart
