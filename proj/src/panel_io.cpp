#include "bivlogit/panel_io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace bivlogit {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
bool parse_int(const std::string& s, T& v) {
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  return r.ec == std::errc() && r.ptr == s.data() + s.size() && !s.empty();
}

bool parse_double(const std::string& s, double& v) {
  if (s.empty()) return false;
  char* end = nullptr;
  v = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size() && std::isfinite(v);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct RowRecord {
  std::size_t line = 0;
  int period = 0;
  int y1 = 0, y2 = 0;
  std::vector<double> x1, x2;
  std::string group;
  long long window_key = 0;
};

}  // namespace

std::string LoadIssue::str() const {
  std::ostringstream os;
  if (row > 0) os << "row " << row;
  if (!column.empty()) os << (row > 0 ? ", " : "") << "column '" << column << "'";
  if (!household.empty()) os << ((row > 0 || !column.empty()) ? ", " : "") << "household " << household;
  os << ": " << message;
  return os.str();
}

std::string LoadReport::summary() const {
  std::ostringstream os;
  os << rows_read << " rows read, " << households_loaded << " households loaded, " << rejected.size()
     << " households rejected";
  return os.str();
}

bool household_id_less(const std::string& a, const std::string& b) {
  long long x = 0, y = 0;
  if (parse_int(a, x) && parse_int(b, y)) {
    if (x != y) return x < y;
  }
  return a < b;
}

LoadedPanel read_panel(std::istream& in, const PanelSchema& schema) {
  std::string line;
  if (!std::getline(in, line)) throw LoadError("missing header row", {});
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  auto header = split_csv(line);
  for (auto& h : header) h = trim(h);

  std::map<std::string, std::size_t> col;
  std::vector<LoadIssue> fatal;
  for (std::size_t i = 0; i < header.size(); ++i)
    if (!col.emplace(header[i], i).second) fatal.push_back({1, header[i], "", "duplicate column"});
  for (const auto* name : {&schema.id, &schema.period, &schema.y1, &schema.y2})
    if (!col.count(*name)) fatal.push_back({1, *name, "", "required column missing"});

  // Covariate pairs keyed by suffix.
  std::vector<std::string> suffixes;
  for (const auto& h : header)
    if (h.rfind(schema.x1_prefix, 0) == 0) suffixes.push_back(h.substr(schema.x1_prefix.size()));
  for (const auto& h : header)
    if (h.rfind(schema.x2_prefix, 0) == 0) {
      const auto s = h.substr(schema.x2_prefix.size());
      if (std::find(suffixes.begin(), suffixes.end(), s) == suffixes.end())
        fatal.push_back({1, h, "", "covariate column has no " + schema.x1_prefix + s + " partner"});
    }
  for (const auto& s : suffixes)
    if (!col.count(schema.x2_prefix + s))
      fatal.push_back({1, schema.x1_prefix + s, "", "covariate column has no " + schema.x2_prefix + s + " partner"});
  if (!fatal.empty()) {
    std::string what = "cannot load panel:";
    for (const auto& f : fatal) what += "\n  " + f.str();
    throw LoadError(what, fatal);
  }
  const bool has_group = col.count(schema.group) > 0;
  const bool has_window = col.count(schema.window_key) > 0;

  LoadedPanel out;
  std::map<std::string, std::vector<RowRecord>> by_id;
  std::map<std::string, std::vector<LoadIssue>> bad;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    ++out.report.rows_read;
    const auto f = split_csv(line);
    if (f.size() != header.size()) {
      const std::string id = f.size() > col[schema.id] ? trim(f[col[schema.id]]) : "";
      LoadIssue is{lineno, "", id,
                   "expected " + std::to_string(header.size()) + " fields, found " + std::to_string(f.size())};
      if (id.empty()) out.report.issues.push_back(is);
      else bad[id].push_back(is);
      continue;
    }
    const std::string id = trim(f[col[schema.id]]);
    if (id.empty()) {
      out.report.issues.push_back({lineno, schema.id, "", "empty household id"});
      continue;
    }
    RowRecord r;
    r.line = lineno;
    std::vector<LoadIssue> row_issues;
    if (!parse_int(trim(f[col[schema.period]]), r.period) || r.period < 0)
      row_issues.push_back({lineno, schema.period, id, "period must be a non-negative integer"});
    for (auto [name, dst] : {std::pair{&schema.y1, &r.y1}, std::pair{&schema.y2, &r.y2}}) {
      const auto v = trim(f[col[*name]]);
      if (v == "0" || v == "1") *dst = v[0] - '0';
      else row_issues.push_back({lineno, *name, id, "outcome must be 0 or 1, found '" + v + "'"});
    }
    for (const auto& s : suffixes) {
      for (auto [name, dst] : {std::pair{schema.x1_prefix + s, &r.x1}, std::pair{schema.x2_prefix + s, &r.x2}}) {
        double v = 0.0;
        const auto txt = trim(f[col[name]]);
        if (!parse_double(txt, v))
          row_issues.push_back({lineno, name, id, txt.empty() ? "missing covariate value" : "covariate is not a finite number"});
        dst->push_back(v);
      }
    }
    if (has_group) r.group = trim(f[col[schema.group]]);
    if (has_window) {
      const auto txt = trim(f[col[schema.window_key]]);
      if (!parse_int(txt, r.window_key))
        row_issues.push_back({lineno, schema.window_key, id, "window key must be an integer"});
    }
    if (!row_issues.empty()) {
      auto& b = bad[id];
      b.insert(b.end(), row_issues.begin(), row_issues.end());
    }
    by_id[id].push_back(std::move(r));
  }

  // Structural checks per household.
  std::map<int, std::size_t> t_count;
  std::map<std::string, int> t_of;
  for (auto& [id, rows] : by_id) {
    if (bad.count(id)) continue;
    std::sort(rows.begin(), rows.end(), [](const RowRecord& a, const RowRecord& b) { return a.period < b.period; });
    std::vector<LoadIssue> issues;
    for (std::size_t k = 0; k < rows.size(); ++k) {
      if (rows[k].period != static_cast<int>(k)) {
        if (rows[k].period < static_cast<int>(k))
          issues.push_back({rows[k].line, schema.period, id, "duplicate period " + std::to_string(rows[k].period)});
        else
          issues.push_back({rows[k].line, schema.period, id, "gap: period " + std::to_string(k) + " is missing"});
        break;
      }
    }
    if (rows.size() < 2) issues.push_back({rows.front().line, schema.period, id, "at least periods 0 and 1 are required"});
    for (const auto& r : rows) {
      if (has_group && r.group != rows.front().group)
        issues.push_back({r.line, schema.group, id, "group changes within the household"});
      if (has_window && r.window_key != rows.front().window_key)
        issues.push_back({r.line, schema.window_key, id, "window key changes within the household"});
    }
    if (!issues.empty()) {
      bad[id] = issues;
      continue;
    }
    const int T = static_cast<int>(rows.size()) - 1;
    t_of[id] = T;
    ++t_count[T];
  }
  int T = -1;
  if (schema.periods) {
    T = *schema.periods;
  } else {
    std::size_t best = 0;
    for (auto [t, c] : t_count)
      if (c > best) {
        best = c;
        T = t;
      }
  }
  for (auto [id, t] : t_of)
    if (t != T)
      bad[id].push_back({by_id[id].front().line, schema.period, id,
                         "household has T = " + std::to_string(t) + ", expected " + std::to_string(T)});

  std::vector<std::string> ids;
  for (const auto& [id, rows] : by_id)
    if (!bad.count(id)) ids.push_back(id);
  std::sort(ids.begin(), ids.end(), household_id_less);
  for (const auto& id : ids) {
    const auto& rows = by_id[id];
    Household h;
    h.id = id;
    std::vector<std::uint8_t> a(rows.size()), b(rows.size());
    for (std::size_t k = 0; k < rows.size(); ++k) {
      a[k] = static_cast<std::uint8_t>(rows[k].y1);
      b[k] = static_cast<std::uint8_t>(rows[k].y2);
    }
    h.seq = PairSequence(std::move(a), std::move(b));
    if (!suffixes.empty()) {
      const auto K = static_cast<Eigen::Index>(suffixes.size());
      h.x1.resize(static_cast<Eigen::Index>(rows.size()), K);
      h.x2.resize(static_cast<Eigen::Index>(rows.size()), K);
      for (std::size_t k = 0; k < rows.size(); ++k)
        for (Eigen::Index j = 0; j < K; ++j) {
          h.x1(static_cast<Eigen::Index>(k), j) = rows[k].x1[j];
          h.x2(static_cast<Eigen::Index>(k), j) = rows[k].x2[j];
        }
    }
    h.group = rows.front().group;
    h.window_key = rows.front().window_key;
    out.panel.households.push_back(std::move(h));
  }

  std::vector<std::string> rejected;
  for (const auto& [id, issues] : bad) {
    rejected.push_back(id);
    out.report.issues.insert(out.report.issues.end(), issues.begin(), issues.end());
  }
  std::sort(rejected.begin(), rejected.end(), household_id_less);
  std::stable_sort(out.report.issues.begin(), out.report.issues.end(),
                   [](const LoadIssue& a, const LoadIssue& b) { return a.row < b.row; });
  out.report.rejected = std::move(rejected);
  out.report.households_loaded = out.panel.size();
  return out;
}

LoadedPanel load_panel(const std::string& path, const PanelSchema& schema) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open " + path, {});
  return read_panel(in, schema);
}

void write_panel(const Panel& panel, std::ostream& out) {
  panel.validate();
  const auto K = panel.covariate_dim();
  bool groups = false, windows = false;
  for (const auto& h : panel.households) {
    groups = groups || !h.group.empty();
    windows = windows || h.window_key != 0;
  }
  out << "household_id,period,y1,y2";
  for (Eigen::Index j = 0; j < K; ++j) out << ",x1_" << j + 1;
  for (Eigen::Index j = 0; j < K; ++j) out << ",x2_" << j + 1;
  if (groups) out << ",group";
  if (windows) out << ",window_key";
  out << '\n';
  for (const auto& h : panel.households) {
    const auto id = csv_field(h.id);
    const auto group = csv_field(h.group);
    for (int t = 0; t <= h.seq.periods(); ++t) {
      const Cell c = h.seq.at(t);
      out << id << ',' << t << ',' << int(c.y1) << ',' << int(c.y2);
      for (Eigen::Index j = 0; j < K; ++j) out << ',' << fmt_double(h.x1(t, j));
      for (Eigen::Index j = 0; j < K; ++j) out << ',' << fmt_double(h.x2(t, j));
      if (groups) out << ',' << group;
      if (windows) out << ',' << h.window_key;
      out << '\n';
    }
  }
}

void write_panel(const Panel& panel, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write " + path);
  write_panel(panel, out);
}

}  // namespace bivlogit
