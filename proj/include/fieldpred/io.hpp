#pragma once

// CSV ingestion: lifetime records, covariate histories, risk-set schedules.

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "fieldpred/covmodels.hpp"
#include "fieldpred/errors.hpp"
#include "fieldpred/likelihood.hpp"
#include "fieldpred/predict.hpp"

namespace fieldpred {

namespace detail {

inline std::string trim(std::string s) {
  auto ws = [](unsigned char c) { return std::isspace(c) != 0; };
  while (!s.empty() && ws(static_cast<unsigned char>(s.back()))) s.pop_back();
  std::size_t i = 0;
  while (i < s.size() && ws(static_cast<unsigned char>(s[i]))) ++i;
  return s.substr(i);
}

/// Splits one CSV line; double-quoted fields may contain commas and "" escapes.
inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

inline std::string at_line(std::size_t line, const std::string& msg) { return "line " + std::to_string(line) + ": " + msg; }

}  // namespace detail

/// A CSV file held as header + rows, each row tagged with its 1-based line.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;

  std::optional<std::size_t> column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
  }
  std::size_t require(const std::string& name) const {
    const auto c = column(name);
    if (!c) fail(ErrorCategory::parse, "line 1: missing required column '" + name + "'");
    return *c;
  }
};

inline CsvTable read_csv(std::istream& is) {
  CsvTable t;
  std::string line;
  std::size_t n = 0;
  while (std::getline(is, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::trim(line).empty() || line[0] == '#') continue;
    auto cells = detail::split_csv(line);
    if (t.header.empty()) {
      t.header = std::move(cells);
      std::vector<std::string> seen = t.header;
      std::sort(seen.begin(), seen.end());
      if (std::adjacent_find(seen.begin(), seen.end()) != seen.end())
        fail(ErrorCategory::parse, detail::at_line(n, "duplicate column name in header"));
      continue;
    }
    if (cells.size() != t.header.size())
      fail(ErrorCategory::parse, detail::at_line(n, "expected " + std::to_string(t.header.size()) + " fields, found " +
                                                        std::to_string(cells.size())));
    t.rows.emplace_back(n, std::move(cells));
  }
  if (t.header.empty()) fail(ErrorCategory::parse, "file has no header line");
  return t;
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCategory::io, "cannot open '" + path + "'");
  return in;
}

namespace detail {

inline double parse_number(const std::string& s, std::size_t line, const std::string& col) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end || !std::isfinite(v))
    fail(ErrorCategory::parse, at_line(line, "column '" + col + "': '" + s + "' is not a number"));
  return v;
}

inline std::uint64_t parse_count(const std::string& s, std::size_t line, const std::string& col) {
  std::uint64_t v = 0;
  const auto* end = s.data() + s.size();
  const auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end)
    fail(ErrorCategory::parse, at_line(line, "column '" + col + "': '" + s + "' is not a non-negative integer"));
  return v;
}

inline Date parse_date_at(const std::string& s, std::size_t line, const std::string& col) {
  try {
    return parse_date(s);
  } catch (const Error&) {
    fail(ErrorCategory::parse, at_line(line, "column '" + col + "': '" + s + "' is not a YYYY-MM-DD date"));
  }
}

}  // namespace detail

/// Data-freeze point: a calendar date, or a number on the same clock as entry_time.
struct FreezePoint {
  std::optional<Date> date;
  std::optional<double> time;

  static FreezePoint parse(const std::string& s) {
    FreezePoint f;
    if (s.size() == 10 && s[4] == '-' && s[7] == '-') {
      f.date = parse_date(s);
    } else {
      double v = 0.0;
      const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v))
        fail(ErrorCategory::config, "freeze point '" + s + "' is neither a YYYY-MM-DD date nor a number");
      f.time = v;
    }
    return f;
  }
  bool empty() const { return !date && !time; }
};

struct LoadSummary {
  std::size_t rows = 0;
  std::uint64_t total = 0;  // sum of multiplicities
  std::array<std::uint64_t, 4> by_censor{};
  std::map<std::string, std::array<std::uint64_t, 4>> by_group;
  std::uint64_t at_risk = 0;
  std::uint64_t withdrawn = 0;  // right-censored before the freeze point
  bool truncated = false;
};

inline void write_load_summary(std::ostream& os, const LoadSummary& s) {
  os << "group,exact,right,left,interval,total\n";
  auto row = [&](const std::string& g, const std::array<std::uint64_t, 4>& c) {
    os << g;
    std::uint64_t t = 0;
    for (auto v : c) {
      os << ',' << v;
      t += v;
    }
    os << ',' << t << '\n';
  };
  for (const auto& [g, c] : s.by_group) row(g, c);
  row("all", s.by_censor);
}

struct LoadedData {
  std::vector<LifetimeRecord> records;
  std::vector<RiskSetEntry> risk;
  LoadSummary summary;
};

/// Reads lifetime records. Columns: unit_id, group_id, censor, and either
/// event_time or (t0, t1); optional entry_date | entry_time, trunc_left,
/// multiplicity, cluster, country. With an entry column and a freeze point,
/// a right-censored row without event_time is censored at its age at the
/// freeze. Right-censored rows still in observation at the freeze form the
/// risk set; a row with multiplicity m contributes m entries.
inline LoadedData load_records(std::istream& is, const FreezePoint& freeze = {}) {
  const auto t = read_csv(is);
  const auto c_unit = t.require("unit_id");
  const auto c_group = t.require("group_id");
  const auto c_censor = t.require("censor");
  const auto c_time = t.column("event_time");
  const auto c_t0 = t.column("t0");
  const auto c_t1 = t.column("t1");
  const auto c_edate = t.column("entry_date");
  const auto c_etime = t.column("entry_time");
  const auto c_trunc = t.column("trunc_left");
  const auto c_mult = t.column("multiplicity");
  if (c_edate && c_etime) fail(ErrorCategory::parse, "line 1: entry_date and entry_time are mutually exclusive");
  if (!c_time && !c_t1) fail(ErrorCategory::parse, "line 1: need an event_time or t0/t1 columns");
  if (c_edate && freeze.time) fail(ErrorCategory::config, "entry_date column needs a calendar freeze date");
  if (c_etime && freeze.date) fail(ErrorCategory::config, "entry_time column needs a numeric freeze point");

  LoadedData out;
  auto& s = out.summary;
  for (const auto& [line, row] : t.rows) {
    auto cell = [&](std::optional<std::size_t> c) { return c ? row[*c] : std::string(); };
    auto num = [&](std::optional<std::size_t> c, const char* name) -> std::optional<double> {
      const auto v = cell(c);
      if (v.empty()) return std::nullopt;
      const double x = detail::parse_number(v, line, name);
      if (x < 0.0) fail(ErrorCategory::parse, detail::at_line(line, std::string("column '") + name + "' is negative"));
      return x;
    };

    LifetimeRecord r;
    r.unit_id = row[c_unit];
    r.group_id = row[c_group];
    if (r.unit_id.empty() || r.group_id.empty())
      fail(ErrorCategory::parse, detail::at_line(line, "unit_id and group_id must be non-empty"));
    const auto code = parse_censor(row[c_censor]);
    if (!code) fail(ErrorCategory::parse, detail::at_line(line, "unknown censor code '" + row[c_censor] + "'"));
    r.censor = *code;
    if (c_mult && !row[*c_mult].empty()) r.multiplicity = detail::parse_count(row[*c_mult], line, "multiplicity");
    if (r.multiplicity == 0) fail(ErrorCategory::parse, detail::at_line(line, "multiplicity must be >= 1"));
    r.trunc_left = num(c_trunc, "trunc_left");

    // Age at the freeze point, when entry is recorded.
    std::optional<double> age;
    if ((c_edate && !cell(c_edate).empty()) || (c_etime && !cell(c_etime).empty())) {
      if (freeze.empty()) fail(ErrorCategory::config, "entry columns require a data-freeze point (--freeze-date)");
      if (c_edate) {
        const Date entry = detail::parse_date_at(row[*c_edate], line, "entry_date");
        age = static_cast<double>(days_between(entry, *freeze.date));
      } else {
        age = *freeze.time - detail::parse_number(row[*c_etime], line, "entry_time");
      }
      if (*age < 0.0) fail(ErrorCategory::domain, detail::at_line(line, "freeze date precedes the entry date"));
    }

    const auto ev = num(c_time, "event_time");
    const auto t0 = num(c_t0, "t0");
    const auto t1 = num(c_t1, "t1");
    bool at_risk = false;
    switch (r.censor) {
      case CensorCode::exact:
        if (!ev) fail(ErrorCategory::parse, detail::at_line(line, "exact record needs event_time"));
        r.time = *ev;
        break;
      case CensorCode::right:
        if (ev) {
          r.time = *ev;
          if (age && *ev > *age + 1e-9)
            fail(ErrorCategory::parse, detail::at_line(line, "censoring time lies beyond the freeze point"));
          at_risk = !age || *ev >= *age - 1e-9;
        } else if (age) {
          r.time = *age;
          at_risk = true;
        } else {
          fail(ErrorCategory::parse, detail::at_line(line, "right-censored record needs event_time or an entry column"));
        }
        break;
      case CensorCode::left:
        if (!t1 && !ev) fail(ErrorCategory::parse, detail::at_line(line, "left-censored record needs t1"));
        r.t1 = t1 ? *t1 : *ev;
        break;
      case CensorCode::interval:
        if (!t0 || !t1) fail(ErrorCategory::parse, detail::at_line(line, "interval record needs t0 and t1"));
        if (*t0 >= *t1) fail(ErrorCategory::parse, detail::at_line(line, "reversed interval (t0 >= t1)"));
        r.t0 = *t0;
        r.t1 = *t1;
        break;
    }
    if (age && r.last_time() > *age + 1e-9)
      fail(ErrorCategory::parse, detail::at_line(line, "observation time lies beyond the freeze point"));
    try {
      r.validate();
    } catch (const Error& e) {
      fail(ErrorCategory::parse, detail::at_line(line, e.what()));
    }

    ++s.rows;
    s.total += r.multiplicity;
    s.by_censor[static_cast<std::size_t>(r.censor)] += r.multiplicity;
    s.by_group[r.group_id][static_cast<std::size_t>(r.censor)] += r.multiplicity;
    if (r.trunc_left && *r.trunc_left > 0.0) s.truncated = true;
    if (r.censor == CensorCode::right) {
      if (at_risk) {
        const double tc = age ? *age : r.time;
        for (std::uint64_t k = 0; k < r.multiplicity; ++k)
          out.risk.push_back({r.multiplicity == 1 ? r.unit_id : r.unit_id + "#" + std::to_string(k + 1), r.group_id,
                              tc, true});
        s.at_risk += r.multiplicity;
      } else {
        s.withdrawn += r.multiplicity;
      }
    }
    out.records.push_back(std::move(r));
  }
  return out;
}

inline LoadedData load_records(const std::string& path, const FreezePoint& freeze = {}) {
  auto in = open_input(path);
  return load_records(in, freeze);
}

// ---------------------------------------------------------------------------
// Covariate histories for the seasonal models.

struct WarrantyData {
  std::vector<WarrantyUnit> units;
  std::vector<std::string> risk_cluster;  // parallel to risk
  std::vector<SeasonalRiskUnit> risk;
  std::vector<std::string> clusters;  // sorted
  Date last_date{};                   // latest observation date in the file
};

inline bool is_canada(std::string c) {
  std::transform(c.begin(), c.end(), c.begin(), [](unsigned char ch) { return std::tolower(ch); });
  return c == "ca" || c == "can" || c == "canada";
}

/// Reads (unit_id, cluster, country, entry_date, event_date_or_censor_date,
/// delta) with an optional expiry_date column. Units with delta = 0 whose
/// censor date is not before their expiry stay at risk.
inline WarrantyData load_warranty_units(std::istream& is) {
  const auto t = read_csv(is);
  const auto c_unit = t.require("unit_id");
  const auto c_cluster = t.require("cluster");
  const auto c_country = t.require("country");
  const auto c_entry = t.require("entry_date");
  const auto c_end = t.require("event_date_or_censor_date");
  const auto c_delta = t.require("delta");
  const auto c_expiry = t.column("expiry_date");
  WarrantyData out;
  bool first = true;
  for (const auto& [line, row] : t.rows) {
    const Date entry = detail::parse_date_at(row[c_entry], line, "entry_date");
    const Date end = detail::parse_date_at(row[c_end], line, "event_date_or_censor_date");
    if (end < entry) fail(ErrorCategory::parse, detail::at_line(line, "end date precedes entry date"));
    if (row[c_delta] != "0" && row[c_delta] != "1")
      fail(ErrorCategory::parse, detail::at_line(line, "delta must be 0 or 1"));
    const bool returned = row[c_delta] == "1";
    if (returned && end == entry)
      fail(ErrorCategory::parse, detail::at_line(line, "a return needs at least one day in service"));
    std::optional<Date> expiry;
    if (c_expiry && !row[*c_expiry].empty()) expiry = detail::parse_date_at(row[*c_expiry], line, "expiry_date");
    const bool canada = is_canada(row[c_country]);
    out.units.push_back({row[c_unit], row[c_cluster], CovariateHistory::build(canada, entry, end), returned});
    if (!returned && (!expiry || end < *expiry)) {
      out.risk.push_back({row[c_unit], canada, entry, expiry, true});
      out.risk_cluster.push_back(row[c_cluster]);
    }
    if (first || end > out.last_date) out.last_date = end;
    first = false;
    if (std::find(out.clusters.begin(), out.clusters.end(), row[c_cluster]) == out.clusters.end())
      out.clusters.push_back(row[c_cluster]);
  }
  std::sort(out.clusters.begin(), out.clusters.end());
  return out;
}

inline WarrantyData load_warranty_units(const std::string& path) {
  auto in = open_input(path);
  return load_warranty_units(in);
}

// ---------------------------------------------------------------------------
// Risk-set event schedule for rolling prediction: (step, unit_id, kind).

struct ScheduledEvent {
  std::size_t step = 1;  // applied at the end of window `step`
  RiskEvent event;
};

inline std::vector<ScheduledEvent> load_schedule(std::istream& is) {
  const auto t = read_csv(is);
  const auto c_step = t.require("step");
  const auto c_unit = t.require("unit_id");
  const auto c_kind = t.require("kind");
  std::vector<ScheduledEvent> out;
  for (const auto& [line, row] : t.rows) {
    ScheduledEvent e;
    e.step = static_cast<std::size_t>(detail::parse_count(row[c_step], line, "step"));
    if (e.step == 0) fail(ErrorCategory::parse, detail::at_line(line, "steps are numbered from 1"));
    e.event.unit_id = row[c_unit];
    if (row[c_kind] == "failure")
      e.event.kind = EventKind::failure;
    else if (row[c_kind] == "retirement")
      e.event.kind = EventKind::retirement;
    else
      fail(ErrorCategory::parse, detail::at_line(line, "event kind must be failure or retirement"));
    out.push_back(std::move(e));
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.step < b.step; });
  return out;
}

inline std::vector<ScheduledEvent> load_schedule(const std::string& path) {
  auto in = open_input(path);
  return load_schedule(in);
}

}  // namespace fieldpred
