#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <istream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "trafficrisk/errors.hpp"
#include "trafficrisk/inflow.hpp"

namespace trafficrisk {

struct EventRecord {
  double time = 0.0;  // seconds since the epoch, or simulation time units
  std::optional<int> weekday;  // 0 = Sunday ... 6 = Saturday, when known
  std::optional<int> road;
  std::optional<double> severity;
  std::optional<double> duration;
};

struct EventLog {
  std::vector<EventRecord> events;
  // Length of one hour in the units of EventRecord::time.
  double hour = 3600.0;

  void sort() {
    std::stable_sort(events.begin(), events.end(), [](const auto& a, const auto& b) { return a.time < b.time; });
  }
};

inline std::vector<double> intermediate_times(std::span<const double> times) {
  if (times.size() < 2) throw DataError("at least two events are needed for intermediate times");
  std::vector<double> gaps(times.size() - 1);
  for (std::size_t i = 1; i < times.size(); ++i) {
    gaps[i - 1] = times[i] - times[i - 1];
    if (gaps[i - 1] < 0.0) throw DataError("event times are not sorted");
  }
  return gaps;
}

inline std::vector<double> intermediate_times(const EventLog& log) {
  std::vector<double> t;
  t.reserve(log.events.size());
  for (const auto& e : log.events) t.push_back(e.time);
  return intermediate_times(t);
}

// Maximum-likelihood rate of an exponential sample.
inline double fit_exponential(std::span<const double> samples) {
  if (samples.empty()) throw DataError("cannot fit an exponential to an empty sample");
  double sum = 0.0;
  for (double x : samples) {
    if (!(x > 0.0)) throw DataError("exponential samples must be strictly positive");
    sum += x;
  }
  return static_cast<double>(samples.size()) / sum;
}

// Kolmogorov-Smirnov distance between the sample and Exp(rate).
inline double ks_statistic_exponential(std::vector<double> samples, double rate) {
  if (samples.empty()) throw DataError("empty sample");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double cdf = -std::expm1(-rate * samples[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - cdf, cdf - static_cast<double>(i) / n});
  }
  return d;
}

// Asymptotic one-sample KS critical value at the 1% level. Used with a
// fitted rate it is conservative.
inline double ks_critical_value_1pct(std::size_t n) { return 1.62762 / std::sqrt(static_cast<double>(n)); }

struct ExponentialityTest {
  double rate = 0.0;
  double statistic = 0.0;
  double critical = 0.0;
  bool passed = false;
};

inline ExponentialityTest test_exponentiality(std::span<const double> samples) {
  ExponentialityTest r;
  r.rate = fit_exponential(samples);
  r.statistic = ks_statistic_exponential({samples.begin(), samples.end()}, r.rate);
  r.critical = ks_critical_value_1pct(samples.size());
  r.passed = r.statistic <= r.critical;
  return r;
}

struct Histogram {
  double bin_width = 0.0;
  std::vector<std::size_t> counts;  // bin i covers [i w, (i+1) w)
  std::size_t total = 0;

  double share(std::size_t i) const {
    return total == 0 ? 0.0 : static_cast<double>(counts.at(i)) / static_cast<double>(total);
  }
};

inline Histogram histogram(std::span<const double> samples, double bin_width, std::size_t max_bins = 0) {
  if (!(bin_width > 0.0)) throw DataError("histogram bin width must be positive");
  Histogram h;
  h.bin_width = bin_width;
  for (double x : samples) {
    const auto bin = static_cast<std::size_t>(std::floor(x / bin_width));
    if (max_bins && bin >= max_bins) {
      ++h.total;
      continue;
    }
    if (bin >= h.counts.size()) h.counts.resize(bin + 1, 0);
    ++h.counts[bin];
    ++h.total;
  }
  return h;
}

// Probability that an Exp(rate) variable falls in [lo, hi).
inline double exponential_bin_probability(double rate, double lo, double hi) {
  return std::exp(-rate * lo) - std::exp(-rate * hi);
}

struct HourlyProfile {
  std::array<double, 24> values{};

  double sum() const {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
};

enum class DayFilter { all, weekday, sunday };

inline HourlyProfile hourly_profile(const EventLog& log, DayFilter filter = DayFilter::all) {
  std::array<std::size_t, 24> counts{};
  std::size_t total = 0;
  for (const auto& e : log.events) {
    if (filter != DayFilter::all) {
      if (!e.weekday) throw DataError("day filter requires calendar timestamps");
      const bool sunday = *e.weekday == 0;
      const bool weekday = *e.weekday >= 1 && *e.weekday <= 5;
      if ((filter == DayFilter::sunday && !sunday) || (filter == DayFilter::weekday && !weekday)) continue;
    }
    const double hours = e.time / log.hour;
    auto h = static_cast<long long>(std::floor(hours)) % 24;
    if (h < 0) h += 24;
    ++counts[static_cast<std::size_t>(h)];
    ++total;
  }
  if (total == 0) throw DataError("no events left for the hourly profile");
  HourlyProfile p;
  for (std::size_t h = 0; h < 24; ++h) p.values[h] = static_cast<double>(counts[h]) / static_cast<double>(total);
  return p;
}

// Hourly vehicle counts to a repeating piecewise-constant inflow; one time
// unit is `hour`, rates are counts * scale per time unit.
inline InflowProfile build_inflow_profile(std::span<const double> counts, double scale, double hour = 1.0) {
  if (counts.size() != 24) throw DataError("an hourly inflow profile needs 24 counts");
  TableInflow t;
  t.bin_width = hour;
  t.repeat = true;
  for (double c : counts) {
    if (!(c >= 0.0)) throw DataError("hourly vehicle counts must be nonnegative");
    t.rates.push_back(c * scale);
  }
  return InflowProfile(std::move(t));
}

// ---------------------------------------------------------------------------
// CSV input

namespace detail {

inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') {
      quoted = !quoted;
    } else if (c == ',' && !quoted) {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(cur);
  for (auto& f : fields) {
    const auto b = f.find_first_not_of(' ');
    const auto e = f.find_last_not_of(' ');
    f = b == std::string::npos ? std::string{} : f.substr(b, e - b + 1);
  }
  return fields;
}

inline std::optional<double> parse_double(std::string_view s) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc{} || ptr != end) return std::nullopt;
  return v;
}

inline std::optional<int> parse_int(std::string_view s) {
  int v = 0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc{} || ptr != end) return std::nullopt;
  return v;
}

struct CalendarTime {
  double seconds;
  int weekday;
};

// YYYY-MM-DD[T| ]HH:MM[:SS[.fff]][Z]
inline std::optional<CalendarTime> parse_iso8601(std::string_view s) {
  if (s.size() < 16) return std::nullopt;
  auto num = [&](std::size_t pos, std::size_t len) -> std::optional<int> { return parse_int(s.substr(pos, len)); };
  if (s[4] != '-' || s[7] != '-' || (s[10] != 'T' && s[10] != ' ') || s[13] != ':') return std::nullopt;
  const auto y = num(0, 4), mo = num(5, 2), d = num(8, 2), h = num(11, 2), mi = num(14, 2);
  if (!y || !mo || !d || !h || !mi) return std::nullopt;
  double sec = 0.0;
  std::size_t pos = 16;
  if (pos < s.size() && s[pos] == ':') {
    std::size_t end = pos + 1;
    while (end < s.size() && (std::isdigit(static_cast<unsigned char>(s[end])) || s[end] == '.')) ++end;
    const auto v = parse_double(s.substr(pos + 1, end - pos - 1));
    if (!v) return std::nullopt;
    sec = *v;
    pos = end;
  }
  if (pos < s.size() && !(pos + 1 == s.size() && s[pos] == 'Z')) return std::nullopt;
  if (*h > 23 || *mi > 59 || sec >= 61.0) return std::nullopt;
  using namespace std::chrono;
  const year_month_day ymd{year{*y}, month{static_cast<unsigned>(*mo)}, day{static_cast<unsigned>(*d)}};
  if (!ymd.ok()) return std::nullopt;
  const sys_days days{ymd};
  const double secs = static_cast<double>(days.time_since_epoch().count()) * 86400.0 + *h * 3600.0 + *mi * 60.0 + sec;
  return CalendarTime{secs, static_cast<int>(weekday{days}.c_encoding())};
}

}  // namespace detail

// Accident log CSV: header required. Time column `timestamp` (ISO-8601) or
// `time` (numeric, `hour` units per hour; `start` as written by the
// simulator is accepted too); optional `road`, `severity`
// (in [0,1]) and `duration`. Unknown columns are ignored.
inline EventLog read_event_log(std::istream& in, double numeric_hour = 1.0) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \r") != std::string::npos) break;
  }
  if (line.find_first_not_of(" \r") == std::string::npos) throw DataError("accident log is empty");
  const auto header = detail::split_csv_line(line);
  auto column = [&](std::string_view name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    return std::nullopt;
  };
  const auto ts = column("timestamp"), tn = column("time") ? column("time") : column("start"), road = column("road"), sev = column("severity"),
             dur = column("duration");
  if (!ts && !tn) throw DataError("line " + std::to_string(lineno) + ": header needs a 'timestamp' or 'time' column");

  EventLog log;
  log.hour = ts ? 3600.0 : numeric_hour;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \r") == std::string::npos) continue;
    const auto f = detail::split_csv_line(line);
    auto fail = [&](const std::string& what) { throw DataError("line " + std::to_string(lineno) + ": " + what); };
    if (f.size() != header.size()) fail("expected " + std::to_string(header.size()) + " fields");
    EventRecord e;
    if (ts) {
      const auto c = detail::parse_iso8601(f[*ts]);
      if (!c) fail("malformed ISO-8601 timestamp '" + f[*ts] + "'");
      e.time = c->seconds;
      e.weekday = c->weekday;
    } else {
      const auto v = detail::parse_double(f[*tn]);
      if (!v || *v < 0.0) fail("malformed time '" + f[*tn] + "'");
      e.time = *v;
    }
    if (road && !f[*road].empty()) {
      const auto v = detail::parse_int(f[*road]);
      if (!v) fail("malformed road '" + f[*road] + "'");
      e.road = *v;
    }
    if (sev && !f[*sev].empty()) {
      const auto v = detail::parse_double(f[*sev]);
      if (!v || *v < 0.0 || *v > 1.0) fail("severity must be a number in [0,1]");
      e.severity = *v;
    }
    if (dur && !f[*dur].empty()) {
      const auto v = detail::parse_double(f[*dur]);
      if (!v || *v < 0.0) fail("malformed duration '" + f[*dur] + "'");
      e.duration = *v;
    }
    log.events.push_back(e);
  }
  log.sort();
  return log;
}

// Hourly vehicle counts CSV with columns `hour` (0..23) and `count`.
inline std::vector<double> read_hourly_counts(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("hourly counts file is empty");
  const auto header = detail::split_csv_line(line);
  const auto hour_col = std::find(header.begin(), header.end(), "hour") - header.begin();
  const auto count_col = std::find(header.begin(), header.end(), "count") - header.begin();
  if (static_cast<std::size_t>(hour_col) == header.size() || static_cast<std::size_t>(count_col) == header.size())
    throw DataError("line 1: header needs 'hour' and 'count' columns");
  std::vector<double> counts(24, 0.0);
  std::vector<bool> seen(24, false);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \r") == std::string::npos) continue;
    const auto f = detail::split_csv_line(line);
    const auto fail = [&](const std::string& what) { throw DataError("line " + std::to_string(lineno) + ": " + what); };
    if (f.size() != header.size()) fail("expected " + std::to_string(header.size()) + " fields");
    const auto h = detail::parse_int(f[static_cast<std::size_t>(hour_col)]);
    const auto c = detail::parse_double(f[static_cast<std::size_t>(count_col)]);
    if (!h || *h < 0 || *h > 23) fail("hour must be an integer in 0..23");
    if (!c || *c < 0.0) fail("count must be a nonnegative number");
    if (seen[static_cast<std::size_t>(*h)]) fail("duplicate hour " + std::to_string(*h));
    seen[static_cast<std::size_t>(*h)] = true;
    counts[static_cast<std::size_t>(*h)] = *c;
  }
  if (std::find(seen.begin(), seen.end(), false) != seen.end()) throw DataError("hourly counts must cover all 24 hours");
  return counts;
}

}  // namespace trafficrisk
