#pragma once

#include <chrono>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "coldstart/core_data.hpp"
#include "coldstart/csv.hpp"

namespace coldstart {

using Date = std::chrono::year_month_day;

Date parse_iso_date(std::string_view text);
std::string format_iso_date(const Date& date);

enum class CreditRole { kActor, kDirector, kWriter };
std::string_view to_string(CreditRole role);

struct EpisodeRow {
  std::string series_id;
  std::string episode_id;
  Date release_date;
  double length_minutes = 0.0;
  std::optional<double> views;  // absent at predict time
};

struct PersonCredit {
  std::string series_id;
  std::string name;
  CreditRole role = CreditRole::kActor;
  std::optional<double> imdb_rating;  // [0, 10]
  std::optional<double> awards;       // nonnegative integer count

  friend bool operator==(const PersonCredit&, const PersonCredit&) = default;
  friend auto operator<=>(const PersonCredit&, const PersonCredit&) = default;
};

struct GenreRow {
  std::string series_id;
  std::string genre;
  std::string source;
};

struct PlatformRow {
  std::string series_id;
  std::string episode_id;
  std::optional<double> exposures;
  std::optional<double> minutes_viewed;
  std::optional<double> revenue;
  std::optional<double> audience_estimate;
  std::optional<double> impressions;
};

struct DateFeatures {
  int age_days = 0;
  int day_of_week = 0;  // 0 = Monday
  int month = 1;
  int quarter = 1;
};

// alias -> canonical genre label
using GenreAliases = std::map<std::string, std::string, std::less<>>;

// Input file schemas. Text-valued inputs (length, dates, labels) are loaded
// with non-numeric roles and parsed into the row structs below.
std::vector<ColumnSchema> episodes_schema(bool with_views);
std::vector<ColumnSchema> credits_schema();
std::vector<ColumnSchema> genres_schema();
std::vector<ColumnSchema> platform_schema();
std::vector<ColumnSchema> genre_alias_schema();

// Reads a CSV file and keeps the expected columns (matched by header name).
// Empty cells are missing; numeric columns must parse as plain decimals.
RawTable load_csv(const std::string& path, std::span<const ColumnSchema> expected_schema);
RawTable table_from_csv(const csv::Document& doc, std::span<const ColumnSchema> expected_schema,
                        std::string_view source_name);

std::vector<EpisodeRow> episodes_from_table(const RawTable& table);
std::vector<PersonCredit> credits_from_table(const RawTable& table);
std::vector<GenreRow> genres_from_table(const RawTable& table);
std::vector<PlatformRow> platform_from_table(const RawTable& table);
GenreAliases aliases_from_table(const RawTable& table);

// Accepts "<H>h <M>m", "<H>h", "<M>m" and "HH:MM".
double parse_length_to_minutes(std::string_view raw);
// Canonical "<H>h <M>m" for whole minutes.
std::string format_length(int total_minutes);

DateFeatures derive_date_features(const Date& release_date, const Date& reference_date);

struct ConsolidationOptions {
  Date reference_date;
  GenreAliases genre_aliases;
  bool include_target = true;
};

struct ConsolidatedTable {
  RawTable table;  // one row per episode, input order
  std::vector<std::string> warnings;
};

// Column layout produced by consolidate_metadata.
std::vector<ColumnSchema> consolidated_schema(bool include_target);

ConsolidatedTable consolidate_metadata(std::span<const EpisodeRow> episodes,
                                       std::span<const PersonCredit> credits,
                                       std::span<const GenreRow> genres,
                                       std::span<const PlatformRow> platform,
                                       const ConsolidationOptions& options);

// Latest release date, the default scoring reference.
Date max_release_date(std::span<const EpisodeRow> episodes);

}  // namespace coldstart
