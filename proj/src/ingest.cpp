#include "coldstart/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <regex>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "coldstart/errors.hpp"

namespace coldstart {
namespace {

constexpr const char* kModule = "ingest_features";

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

std::optional<double> parse_decimal(std::string_view raw) {
  const auto s = trim(raw);
  if (s.empty()) return std::nullopt;
  double value = 0.0;
  const char* first = s.data();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(value)) {
    throw std::invalid_argument("not a decimal");
  }
  return value;
}

const std::optional<std::string>& text_cell(const RawTable& t, std::string_view col, std::size_t row) {
  return t.at(col).texts()[row];
}

std::string required_text(const RawTable& t, std::string_view col, std::size_t row) {
  const auto& cell = text_cell(t, col, row);
  if (!cell || cell->empty()) {
    throw DataError(kModule, "column '" + std::string(col) + "' is empty at data row " +
                                 std::to_string(row + 1));
  }
  return *cell;
}

std::optional<double> nonneg_cell(const RawTable& t, std::string_view col, std::size_t row) {
  const auto& cell = t.at(col).numbers()[row];
  if (cell && *cell < 0.0) {
    throw DataError(kModule, "column '" + std::string(col) + "' is negative at data row " +
                                 std::to_string(row + 1));
  }
  return cell;
}

struct RoleAggregate {
  std::optional<double> best_rating;
  double total_awards = 0.0;
  double crew_count = 0.0;
};

struct SeriesAggregate {
  RoleAggregate roles[3];
  std::set<std::string> genres;
};

}  // namespace

Date parse_iso_date(std::string_view text) {
  static const std::regex pattern(R"(^(\d{4})-(\d{2})-(\d{2})$)");
  const std::string s(trim(text));
  std::smatch m;
  if (!std::regex_match(s, m, pattern)) {
    throw DataError(kModule, "date '" + s + "' is not ISO-8601 (YYYY-MM-DD)");
  }
  const Date d{std::chrono::year{std::stoi(m[1])},
               std::chrono::month{static_cast<unsigned>(std::stoi(m[2]))},
               std::chrono::day{static_cast<unsigned>(std::stoi(m[3]))}};
  if (!d.ok()) throw DataError(kModule, "date '" + s + "' is not a valid calendar date");
  return d;
}

std::string format_iso_date(const Date& date) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(date.year()),
                static_cast<unsigned>(date.month()), static_cast<unsigned>(date.day()));
  return buf;
}

std::string_view to_string(CreditRole role) {
  switch (role) {
    case CreditRole::kActor: return "actor";
    case CreditRole::kDirector: return "director";
    case CreditRole::kWriter: return "writer";
  }
  return "unknown";
}

std::vector<ColumnSchema> episodes_schema(bool with_views) {
  std::vector<ColumnSchema> s = {
      {"series_id", ColumnRole::kId},
      {"episode_id", ColumnRole::kId},
      {"release_date", ColumnRole::kDate},
      {"length", ColumnRole::kCategorical},  // raw text, see parse_length_to_minutes
  };
  if (with_views) s.push_back({"views", ColumnRole::kTarget});
  return s;
}

std::vector<ColumnSchema> credits_schema() {
  return {{"series_id", ColumnRole::kId},
          {"name", ColumnRole::kCategorical},
          {"role", ColumnRole::kCategorical},
          {"imdb_rating", ColumnRole::kNumeric},
          {"awards", ColumnRole::kNumeric}};
}

std::vector<ColumnSchema> genres_schema() {
  return {{"series_id", ColumnRole::kId},
          {"genre", ColumnRole::kCategorical},
          {"source", ColumnRole::kCategorical}};
}

std::vector<ColumnSchema> platform_schema() {
  return {{"series_id", ColumnRole::kId},          {"episode_id", ColumnRole::kId},
          {"exposures", ColumnRole::kNumeric},     {"minutes_viewed", ColumnRole::kNumeric},
          {"revenue", ColumnRole::kNumeric},       {"audience_estimate", ColumnRole::kNumeric},
          {"impressions", ColumnRole::kNumeric}};
}

std::vector<ColumnSchema> genre_alias_schema() {
  return {{"alias", ColumnRole::kCategorical}, {"canonical", ColumnRole::kCategorical}};
}

RawTable table_from_csv(const csv::Document& doc, std::span<const ColumnSchema> expected_schema,
                        std::string_view source_name) {
  const std::string source(source_name);
  RawTable table(doc.rows.size());
  for (const auto& schema : expected_schema) {
    const auto it = std::find(doc.header.begin(), doc.header.end(), schema.name);
    if (it == doc.header.end()) {
      throw DataError(kModule, source + ": missing expected header '" + schema.name + "'");
    }
    const auto col = static_cast<std::size_t>(it - doc.header.begin());
    Column column{schema, {}};
    if (holds_numbers(schema.role)) {
      NumericCells cells;
      cells.reserve(doc.rows.size());
      for (std::size_t r = 0; r < doc.rows.size(); ++r) {
        try {
          cells.push_back(parse_decimal(doc.rows[r][col]));
        } catch (const std::invalid_argument&) {
          throw DataError(kModule, source + ": cannot parse '" + doc.rows[r][col] +
                                       "' as a number at data row " + std::to_string(r + 1) +
                                       ", column '" + schema.name + "'");
        }
      }
      column.cells = std::move(cells);
    } else {
      TextCells cells;
      cells.reserve(doc.rows.size());
      for (const auto& row : doc.rows) {
        if (row[col].empty()) {
          cells.emplace_back(std::nullopt);
        } else {
          cells.emplace_back(row[col]);
        }
      }
      column.cells = std::move(cells);
    }
    table.add_column(std::move(column));
  }
  return table;
}

RawTable load_csv(const std::string& path, std::span<const ColumnSchema> expected_schema) {
  return table_from_csv(csv::read_file(path), expected_schema, path);
}

std::vector<EpisodeRow> episodes_from_table(const RawTable& t) {
  const bool with_views = t.find("views") != nullptr;
  std::vector<EpisodeRow> out;
  out.reserve(t.n_rows());
  for (std::size_t r = 0; r < t.n_rows(); ++r) {
    EpisodeRow row;
    row.series_id = required_text(t, "series_id", r);
    row.episode_id = required_text(t, "episode_id", r);
    row.release_date = parse_iso_date(required_text(t, "release_date", r));
    row.length_minutes = parse_length_to_minutes(required_text(t, "length", r));
    if (with_views) row.views = nonneg_cell(t, "views", r);
    out.push_back(std::move(row));
  }
  return out;
}

std::vector<PersonCredit> credits_from_table(const RawTable& t) {
  std::vector<PersonCredit> out;
  out.reserve(t.n_rows());
  for (std::size_t r = 0; r < t.n_rows(); ++r) {
    PersonCredit c;
    c.series_id = required_text(t, "series_id", r);
    c.name = required_text(t, "name", r);
    const std::string role = required_text(t, "role", r);
    if (role == "actor") {
      c.role = CreditRole::kActor;
    } else if (role == "director") {
      c.role = CreditRole::kDirector;
    } else if (role == "writer") {
      c.role = CreditRole::kWriter;
    } else {
      throw DataError(kModule, "credit role '" + role + "' at data row " + std::to_string(r + 1) +
                                   " is not actor, director or writer");
    }
    c.imdb_rating = t.at("imdb_rating").numbers()[r];
    if (c.imdb_rating && (*c.imdb_rating < 0.0 || *c.imdb_rating > 10.0)) {
      throw DataError(kModule, "imdb_rating outside [0, 10] at data row " + std::to_string(r + 1));
    }
    c.awards = nonneg_cell(t, "awards", r);
    if (c.awards && std::floor(*c.awards) != *c.awards) {
      throw DataError(kModule, "awards is not a whole number at data row " + std::to_string(r + 1));
    }
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<GenreRow> genres_from_table(const RawTable& t) {
  std::vector<GenreRow> out;
  out.reserve(t.n_rows());
  for (std::size_t r = 0; r < t.n_rows(); ++r) {
    GenreRow g;
    g.series_id = required_text(t, "series_id", r);
    g.genre = required_text(t, "genre", r);
    g.source = text_cell(t, "source", r).value_or("");
    out.push_back(std::move(g));
  }
  return out;
}

std::vector<PlatformRow> platform_from_table(const RawTable& t) {
  std::vector<PlatformRow> out;
  out.reserve(t.n_rows());
  for (std::size_t r = 0; r < t.n_rows(); ++r) {
    PlatformRow p;
    p.series_id = required_text(t, "series_id", r);
    p.episode_id = required_text(t, "episode_id", r);
    p.exposures = nonneg_cell(t, "exposures", r);
    p.minutes_viewed = nonneg_cell(t, "minutes_viewed", r);
    p.revenue = nonneg_cell(t, "revenue", r);
    p.audience_estimate = nonneg_cell(t, "audience_estimate", r);
    p.impressions = nonneg_cell(t, "impressions", r);
    out.push_back(std::move(p));
  }
  return out;
}

GenreAliases aliases_from_table(const RawTable& t) {
  GenreAliases out;
  for (std::size_t r = 0; r < t.n_rows(); ++r) {
    auto alias = required_text(t, "alias", r);
    auto canonical = required_text(t, "canonical", r);
    auto [it, inserted] = out.emplace(alias, canonical);
    if (!inserted && it->second != canonical) {
      throw DataError(kModule, "genre alias '" + alias + "' maps to two canonical genres");
    }
  }
  return out;
}

double parse_length_to_minutes(std::string_view raw) {
  static const std::regex hours_minutes(R"(^\s*(\d+)\s*h(?:\s*(\d+)\s*m)?\s*$)");
  static const std::regex minutes_only(R"(^\s*(\d+)\s*m\s*$)");
  static const std::regex clock(R"(^\s*(\d{1,3}):([0-5]\d)\s*$)");
  const std::string s(raw);
  std::smatch m;
  if (std::regex_match(s, m, hours_minutes)) {
    const double minutes = m[2].matched ? std::stod(m[2]) : 0.0;
    return 60.0 * std::stod(m[1]) + minutes;
  }
  if (std::regex_match(s, m, minutes_only)) return std::stod(m[1]);
  if (std::regex_match(s, m, clock)) return 60.0 * std::stod(m[1]) + std::stod(m[2]);
  throw DataError(kModule, "unrecognized length format '" + s + "'");
}

std::string format_length(int total_minutes) {
  if (total_minutes < 0) throw UsageError(kModule, "length must be nonnegative");
  return std::to_string(total_minutes / 60) + "h " + std::to_string(total_minutes % 60) + "m";
}

DateFeatures derive_date_features(const Date& release_date, const Date& reference_date) {
  using std::chrono::sys_days;
  const auto age = (sys_days{reference_date} - sys_days{release_date}).count();
  if (age < 0) {
    throw DataError(kModule, "reference date " + format_iso_date(reference_date) +
                                 " precedes release date " + format_iso_date(release_date));
  }
  DateFeatures f;
  f.age_days = static_cast<int>(age);
  f.day_of_week = static_cast<int>(std::chrono::weekday{sys_days{release_date}}.iso_encoding()) - 1;
  f.month = static_cast<int>(static_cast<unsigned>(release_date.month()));
  f.quarter = (f.month - 1) / 3 + 1;
  return f;
}

std::vector<ColumnSchema> consolidated_schema(bool include_target) {
  std::vector<ColumnSchema> s = {
      {"series_id", ColumnRole::kId},
      {"episode_id", ColumnRole::kId},
      {"length_minutes", ColumnRole::kNumeric},
      {"age_days", ColumnRole::kNumeric},
      {"day_of_week", ColumnRole::kNumeric},
      {"month", ColumnRole::kNumeric},
      {"quarter", ColumnRole::kNumeric},
      {"primary_genre", ColumnRole::kCategorical},
      {"genre_count", ColumnRole::kNumeric},
  };
  for (const char* role : {"actor", "director", "writer"}) {
    s.push_back({std::string("best_") + role + "_rating", ColumnRole::kNumeric});
    s.push_back({std::string(role) + "_total_awards", ColumnRole::kNumeric});
    s.push_back({std::string(role) + "_crew_count", ColumnRole::kNumeric});
  }
  for (const char* metric :
       {"exposures", "minutes_viewed", "revenue", "audience_estimate", "impressions"}) {
    s.push_back({metric, ColumnRole::kNumeric});
  }
  if (include_target) s.push_back({"views", ColumnRole::kTarget});
  return s;
}

Date max_release_date(std::span<const EpisodeRow> episodes) {
  if (episodes.empty()) throw DataError(kModule, "no episodes");
  Date best = episodes.front().release_date;
  for (const auto& e : episodes) best = std::max(best, e.release_date);
  return best;
}

ConsolidatedTable consolidate_metadata(std::span<const EpisodeRow> episodes,
                                       std::span<const PersonCredit> credits,
                                       std::span<const GenreRow> genres,
                                       std::span<const PlatformRow> platform,
                                       const ConsolidationOptions& options) {
  ConsolidatedTable out;

  std::unordered_set<std::string> series_ids;
  std::set<std::pair<std::string, std::string>> episode_keys;
  for (const auto& e : episodes) {
    if (!episode_keys.emplace(e.series_id, e.episode_id).second) {
      throw DataError(kModule, "duplicate episode key (" + e.series_id + ", " + e.episode_id + ")");
    }
    series_ids.insert(e.series_id);
  }

  std::map<std::string, SeriesAggregate> series;
  std::set<std::string> unknown_series;

  // Exact duplicate credit rows count once.
  std::set<PersonCredit> unique_credits(credits.begin(), credits.end());
  for (const auto& c : unique_credits) {
    if (!series_ids.contains(c.series_id)) {
      unknown_series.insert(c.series_id);
      continue;
    }
    auto& agg = series[c.series_id].roles[static_cast<int>(c.role)];
    agg.crew_count += 1.0;
    if (c.awards) agg.total_awards += *c.awards;
    if (c.imdb_rating) agg.best_rating = std::max(agg.best_rating.value_or(*c.imdb_rating), *c.imdb_rating);
  }

  for (const auto& g : genres) {
    if (!series_ids.contains(g.series_id)) {
      unknown_series.insert(g.series_id);
      continue;
    }
    const auto alias = options.genre_aliases.find(g.genre);
    series[g.series_id].genres.insert(alias == options.genre_aliases.end() ? g.genre : alias->second);
  }

  std::map<std::pair<std::string, std::string>, const PlatformRow*> platform_by_key;
  std::size_t unmatched_platform = 0;
  for (const auto& p : platform) {
    auto key = std::make_pair(p.series_id, p.episode_id);
    if (!episode_keys.contains(key)) {
      if (!series_ids.contains(p.series_id)) unknown_series.insert(p.series_id);
      ++unmatched_platform;
      continue;
    }
    if (!platform_by_key.emplace(key, &p).second) {
      throw DataError(kModule, "duplicate platform row for (" + p.series_id + ", " + p.episode_id + ")");
    }
  }

  for (const auto& s : unknown_series) {
    out.warnings.push_back("series '" + s + "' appears in metadata but has no episodes");
  }
  if (unmatched_platform > 0) {
    out.warnings.push_back(std::to_string(unmatched_platform) +
                           " platform rows do not match any episode");
  }

  const auto schema = consolidated_schema(options.include_target);
  const std::size_t n = episodes.size();
  std::vector<TextCells> texts;
  std::vector<NumericCells> numbers;
  std::unordered_map<std::string, std::size_t> slot;
  for (const auto& c : schema) {
    if (holds_numbers(c.role)) {
      slot[c.name] = numbers.size();
      numbers.emplace_back(n);
    } else {
      slot[c.name] = texts.size();
      texts.emplace_back(n);
    }
  }
  auto num = [&](const char* name) -> NumericCells& { return numbers[slot.at(name)]; };
  auto txt = [&](const char* name) -> TextCells& { return texts[slot.at(name)]; };

  static const SeriesAggregate kEmpty{};
  static constexpr const char* kRoleNames[3] = {"actor", "director", "writer"};
  for (std::size_t i = 0; i < n; ++i) {
    const auto& e = episodes[i];
    txt("series_id")[i] = e.series_id;
    txt("episode_id")[i] = e.episode_id;
    num("length_minutes")[i] = e.length_minutes;
    const auto date = derive_date_features(e.release_date, options.reference_date);
    num("age_days")[i] = date.age_days;
    num("day_of_week")[i] = date.day_of_week;
    num("month")[i] = date.month;
    num("quarter")[i] = date.quarter;

    const auto it = series.find(e.series_id);
    const SeriesAggregate& agg = it == series.end() ? kEmpty : it->second;
    if (!agg.genres.empty()) txt("primary_genre")[i] = *agg.genres.begin();
    num("genre_count")[i] = static_cast<double>(agg.genres.size());
    for (int r = 0; r < 3; ++r) {
      const std::string role = kRoleNames[r];
      numbers[slot.at("best_" + role + "_rating")][i] = agg.roles[r].best_rating;
      numbers[slot.at(role + "_total_awards")][i] = agg.roles[r].total_awards;
      numbers[slot.at(role + "_crew_count")][i] = agg.roles[r].crew_count;
    }

    const auto p = platform_by_key.find({e.series_id, e.episode_id});
    if (p != platform_by_key.end()) {
      num("exposures")[i] = p->second->exposures;
      num("minutes_viewed")[i] = p->second->minutes_viewed;
      num("revenue")[i] = p->second->revenue;
      num("audience_estimate")[i] = p->second->audience_estimate;
      num("impressions")[i] = p->second->impressions;
    }
    if (options.include_target) num("views")[i] = e.views;
  }

  out.table = RawTable(n);
  for (const auto& c : schema) {
    if (holds_numbers(c.role)) {
      out.table.add_column(Column{c, std::move(numbers[slot.at(c.name)])});
    } else {
      out.table.add_column(Column{c, std::move(texts[slot.at(c.name)])});
    }
  }
  return out;
}

}  // namespace coldstart
