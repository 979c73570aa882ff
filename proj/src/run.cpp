#include "bivlogit/run.hpp"

#include "bivlogit/bootstrap.hpp"
#include "bivlogit/cmle.hpp"
#include "bivlogit/cre.hpp"
#include "bivlogit/error.hpp"
#include "bivlogit/gmm.hpp"
#include "bivlogit/pooled.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace bivlogit {

namespace {

const std::vector<std::pair<Estimator, std::string>>& estimator_table() {
  static const std::vector<std::pair<Estimator, std::string>> t{
      {Estimator::static_ss, "static-ss"}, {Estimator::dynamic_pooled, "dynamic-pooled"},
      {Estimator::cmle, "cmle"},           {Estimator::cmle_restricted, "cmle-restricted"},
      {Estimator::gmm_rho, "gmm-rho"},     {Estimator::cre, "cre"}};
  return t;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw InvalidInput(key + ": expected a boolean, found '" + v + "'");
}

template <class T>
T parse_number(const std::string& key, const std::string& v) {
  std::istringstream is(v);
  T out{};
  is >> out;
  if (!is || !is.eof()) throw InvalidInput(key + ": cannot parse '" + v + "'");
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string center_str(const CellResult& c) { return c.window ? num(c.window->center) : std::string(); }

FitResult two_step_fit(const Panel& panel, const GmmOptions& opts, double* match_fraction) {
  const auto ts = fit_two_step(panel, opts);
  FitResult fit;
  fit.names = TwoStepResult::names();
  fit.estimates = ts.estimates();
  fit.covariance = Matrix::Zero(6, 6);
  fit.covariance.topLeftCorner(5, 5) = ts.first.covariance;
  fit.covariance(5, 5) = ts.second.se * ts.second.se;
  fit.loglik = ts.first.loglik;
  fit.converged = ts.first.converged && !ts.second.boundary_flag;
  fit.iterations = ts.first.iterations;
  fit.message = ts.second.boundary_flag ? "rho estimate on the search boundary" : ts.first.message;
  fit.diagnostics = ts.first.diagnostics;
  fit.diagnostics["gmm_objective"] = ts.second.objective;
  fit.diagnostics["boundary"] = ts.second.boundary_flag ? 1.0 : 0.0;
  fit.diagnostics["first_stage_converged"] = ts.first.converged ? 1.0 : 0.0;
  fit.diagnostics["dropped_moments"] = ts.second.dropped_moments;
  const double mf = ts.second.match_fraction.mean();
  fit.diagnostics["match_fraction"] = mf;
  if (match_fraction) *match_fraction = mf;
  return fit;
}

}  // namespace

Estimator estimator_from_name(const std::string& name) {
  for (const auto& [e, n] : estimator_table())
    if (n == name) return e;
  throw InvalidInput("unknown estimator '" + name + "'");
}

std::string estimator_name(Estimator e) {
  for (const auto& [x, n] : estimator_table())
    if (x == e) return n;
  return "?";
}

std::vector<std::string> estimator_names() {
  std::vector<std::string> out;
  for (const auto& p : estimator_table()) out.push_back(p.second);
  return out;
}

void RunConfig::validate() const {
  if (window && window->width < 1) throw InvalidInput("window width must be >= 1");
  if (window && window->step < 1) throw InvalidInput("window step must be >= 1");
  if (!(rho_low < rho_high)) throw InvalidInput("rho bounds must satisfy low < high");
  if (bootstrap < 0) throw InvalidInput("bootstrap replicates must be >= 0");
  if (cre_order < 1 || cre_order > 256) throw InvalidInput("cre_order must lie in [1, 256]");
  if (edge_windows && !window) throw InvalidInput("edge_windows requires a window");
}

void RunConfig::set(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  if (key == "estimator") {
    estimator = estimator_from_name(v);
  } else if (key == "by_group") {
    by_group = parse_bool(key, v);
  } else if (key == "window") {
    if (v.empty() || v == "none") {
      window.reset();
    } else {
      const auto comma = v.find(',');
      WindowSpec w;
      w.width = parse_number<long long>(key, trim(v.substr(0, comma)));
      w.step = comma == std::string::npos ? 1 : parse_number<long long>(key, trim(v.substr(comma + 1)));
      if (w.width < 1 || w.step < 1) throw InvalidInput("window width and step must be >= 1");
      window = w;
    }
  } else if (key == "edge_windows") {
    edge_windows = parse_bool(key, v);
  } else if (key == "bootstrap") {
    bootstrap = parse_number<int>(key, v);
  } else if (key == "seed") {
    seed = parse_number<std::uint64_t>(key, v);
  } else if (key == "rho_low") {
    rho_low = parse_number<double>(key, v);
  } else if (key == "rho_high") {
    rho_high = parse_number<double>(key, v);
  } else if (key == "cre_order") {
    cre_order = parse_number<int>(key, v);
  } else if (key == "input") {
    input = v;
  } else if (key == "output") {
    output = v;
  } else {
    throw InvalidInput("unknown configuration key '" + key + "'");
  }
}

void RunConfig::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open config " + path);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw InvalidInput(path + ":" + std::to_string(n) + ": expected key=value");
    try {
      set(trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const InvalidInput& e) {
      throw InvalidInput(path + ":" + std::to_string(n) + ": " + e.what());
    }
  }
}

std::string RunConfig::echo() const {
  std::ostringstream os;
  os << "estimator=" << estimator_name(estimator) << '\n'
     << "by_group=" << (by_group ? "true" : "false") << '\n'
     << "window=" << (window ? std::to_string(window->width) + "," + std::to_string(window->step) : "none") << '\n'
     << "edge_windows=" << (edge_windows ? "true" : "false") << '\n'
     << "bootstrap=" << bootstrap << '\n'
     << "seed=" << seed << '\n'
     << "rho_low=" << num(rho_low) << '\n'
     << "rho_high=" << num(rho_high) << '\n'
     << "cre_order=" << cre_order << '\n'
     << "input=" << input << '\n'
     << "output=" << output << '\n';
  return os.str();
}

std::vector<Window> rolling_windows(long long min_key, long long max_key, const WindowSpec& spec, bool edges) {
  if (spec.width < 1 || spec.step < 1) throw InvalidInput("window width and step must be >= 1");
  std::vector<Window> out;
  if (min_key > max_key) return out;
  const double half = 0.5 * static_cast<double>(spec.width - 1);
  // Starts are aligned to min_key + k * step; negative k only yields edge windows.
  long long k = edges ? -((spec.width - 1) / spec.step + 1) : 0;
  for (;; ++k) {
    const long long lo = min_key + k * spec.step;
    const long long hi = lo + spec.width - 1;
    const double center = static_cast<double>(lo) + half;
    if (center > static_cast<double>(max_key)) break;
    const bool full = lo >= min_key && hi <= max_key;
    if (full) {
      out.push_back({lo, hi, center, false});
    } else if (edges && center >= static_cast<double>(min_key)) {
      out.push_back({std::max(lo, min_key), std::min(hi, max_key), center, true});
    } else if (!edges && hi > max_key) {
      break;
    }
  }
  return out;
}

std::string status_name(CellResult::Status s) {
  switch (s) {
    case CellResult::Status::ok: return "ok";
    case CellResult::Status::not_converged: return "not-converged";
    case CellResult::Status::skipped: return "skipped";
    case CellResult::Status::failed: return "failed";
  }
  return "?";
}

FitResult fit_estimator(const RunConfig& config, const Panel& panel, double* match_fraction) {
  switch (config.estimator) {
    case Estimator::static_ss: return fit_static_ss(panel);
    case Estimator::dynamic_pooled: return fit_dynamic_ss(panel);
    case Estimator::cmle: return fit_cmle(panel, false);
    case Estimator::cmle_restricted: return fit_cmle(panel, true);
    case Estimator::gmm_rho: {
      GmmOptions o;
      o.rho_low = config.rho_low;
      o.rho_high = config.rho_high;
      return two_step_fit(panel, o, match_fraction);
    }
    case Estimator::cre: {
      CreFitOptions o;
      o.order = config.cre_order;
      return fit_cre(panel, o);
    }
  }
  throw InvalidInput("unknown estimator");
}

bool RunReport::all_ok() const {
  return std::all_of(cells.begin(), cells.end(), [](const CellResult& c) {
    return c.status == CellResult::Status::ok || c.status == CellResult::Status::skipped;
  });
}

std::string RunReport::csv() const {
  std::ostringstream os;
  os << "group,window_lo,window_hi,window_center,edge,households,status,parameter,estimate,se,boot_se,"
        "match_fraction,notice\n";
  for (const auto& c : cells) {
    std::ostringstream pre;
    pre << c.group << ',' << (c.window ? std::to_string(c.window->lo) : "") << ','
        << (c.window ? std::to_string(c.window->hi) : "") << ',' << center_str(c) << ','
        << (c.window && c.window->edge ? 1 : 0) << ',' << c.households << ',' << status_name(c.status) << ',';
    std::string notice = c.notice;
    std::replace(notice.begin(), notice.end(), ',', ';');
    if (!c.usable()) {
      os << pre.str() << ",,,,," << notice << '\n';
      continue;
    }
    const Vector se = c.fit.se();
    for (std::size_t k = 0; k < c.fit.names.size(); ++k) {
      const auto i = static_cast<Eigen::Index>(k);
      os << pre.str() << c.fit.names[k] << ',' << num(c.fit.estimates[i]) << ',' << num(se[i]) << ','
         << (c.boot_se.size() > i ? num(c.boot_se[i]) : "") << ','
         << (c.match_fraction >= 0.0 ? num(c.match_fraction) : "") << ',' << notice << '\n';
    }
  }
  return os.str();
}

std::string RunReport::text() const {
  std::ostringstream os;
  os << "estimator: " << estimator_name(config.estimator) << '\n';
  char buf[256];
  for (const auto& c : cells) {
    os << '\n' << "group " << (c.group.empty() ? "-" : c.group);
    if (c.window) {
      os << "  window " << c.window->lo << ".." << c.window->hi << " (center " << num(c.window->center) << ")";
      if (c.window->edge) os << " [edge]";
    }
    os << "  households " << c.households << "  status " << status_name(c.status) << '\n';
    if (!c.notice.empty()) os << "  note: " << c.notice << '\n';
    if (!c.usable()) continue;
    const bool boot = c.boot_se.size() > 0;
    std::snprintf(buf, sizeof buf, "  %-12s %14s %12s%s\n", "parameter", "estimate", "se", boot ? "      boot_se" : "");
    os << buf;
    const Vector se = c.fit.se();
    for (std::size_t k = 0; k < c.fit.names.size(); ++k) {
      const auto i = static_cast<Eigen::Index>(k);
      std::snprintf(buf, sizeof buf, "  %-12s %14.6f %12.6f", c.fit.names[k].c_str(), c.fit.estimates[i], se[i]);
      os << buf;
      if (boot) {
        std::snprintf(buf, sizeof buf, " %12.6f", c.boot_se[i]);
        os << buf;
      }
      os << '\n';
    }
    if (c.match_fraction >= 0.0) os << "  match fraction " << num(c.match_fraction) << '\n';
  }
  return os.str();
}

std::string RunReport::figure_csv() const {
  std::ostringstream os;
  os << "group,window_center,parameter,estimate,se\n";
  for (const auto& c : cells) {
    if (!c.usable()) continue;
    const Vector se = c.boot_se.size() > 0 ? c.boot_se : c.fit.se();
    for (std::size_t k = 0; k < c.fit.names.size(); ++k) {
      const auto i = static_cast<Eigen::Index>(k);
      if (!std::isfinite(c.fit.estimates[i]) || !std::isfinite(se[i])) continue;
      os << c.group << ',' << center_str(c) << ',' << c.fit.names[k] << ',' << num(c.fit.estimates[i]) << ','
         << num(se[i]) << '\n';
    }
  }
  return os.str();
}

std::string emit_figure_data(const RunReport& report) { return report.figure_csv(); }

RunReport run(const RunConfig& config, const Panel& panel) {
  config.validate();
  panel.validate();
  RunReport report;
  report.config = config;

  std::set<std::string> groups;
  for (const auto& h : panel.households) groups.insert(config.by_group ? h.group : std::string("all"));
  if (groups.empty()) groups.insert(config.by_group ? std::string() : std::string("all"));

  std::vector<std::pair<std::string, std::optional<Window>>> plan;
  std::vector<Window> windows;
  if (config.window) {
    long long lo = 0, hi = -1;
    if (!panel.empty()) {
      lo = hi = panel.households.front().window_key;
      for (const auto& h : panel.households) {
        lo = std::min(lo, h.window_key);
        hi = std::max(hi, h.window_key);
      }
    }
    windows = rolling_windows(lo, hi, *config.window, config.edge_windows);
  }
  for (const auto& g : groups) {
    if (config.window) {
      for (const auto& w : windows) plan.emplace_back(g, w);
    } else {
      plan.emplace_back(g, std::nullopt);
    }
  }

  report.cells.resize(plan.size());
  const auto ncell = static_cast<std::ptrdiff_t>(plan.size());
#pragma omp parallel for schedule(dynamic, 1) if (ncell > 1)
  for (std::ptrdiff_t ci = 0; ci < ncell; ++ci) {
    auto& cell = report.cells[ci];
    cell.group = plan[ci].first;
    cell.window = plan[ci].second;
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < panel.size(); ++i) {
      const auto& h = panel.households[i];
      if (config.by_group && h.group != cell.group) continue;
      if (cell.window && (h.window_key < cell.window->lo || h.window_key > cell.window->hi)) continue;
      idx.push_back(i);
    }
    cell.households = idx.size();
    if (idx.empty()) {
      cell.status = CellResult::Status::skipped;
      cell.notice = "empty cell";
      continue;
    }
    const Panel sub = panel.subset(idx);
    try {
      double mf = -1.0;
      cell.fit = fit_estimator(config, sub, &mf);
      cell.match_fraction = mf;
      cell.status = cell.fit.converged ? CellResult::Status::ok : CellResult::Status::not_converged;
      if (!cell.fit.converged) cell.notice = cell.fit.message;
      if (config.bootstrap > 0) {
        BootstrapOptions bo;
        bo.replicates = config.bootstrap;
        bo.seed = config.seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(ci);
        const auto br = bootstrap_se(
            sub,
            [&](const Panel& p) {
              const auto f = fit_estimator(config, p);
              // a clamped rho is still the estimator's value for this resample
              const auto fs = f.diagnostics.find("first_stage_converged");
              const bool clamped = fs != f.diagnostics.end() && fs->second == 1.0;
              if (!f.converged && !clamped) throw NoInformation("replicate did not converge");
              return f.estimates;
            },
            bo);
        cell.boot_se = br.se;
        if (br.warning) cell.notice += (cell.notice.empty() ? "" : "; ") + br.message;
      }
    } catch (const NoInformation& e) {
      cell.status = CellResult::Status::skipped;
      cell.notice = e.what();
    } catch (const std::exception& e) {
      cell.status = CellResult::Status::failed;
      cell.notice = e.what();
    }
  }
  return report;
}

void write_reports(const RunReport& report, const std::string& prefix) {
  auto put = [](const std::string& path, const std::string& body) {
    std::ofstream out(path);
    if (!out) throw InvalidInput("cannot write " + path);
    out << body;
  };
  put(prefix + ".csv", report.csv());
  put(prefix + ".txt", report.text());
  put(prefix + "_figure.csv", report.figure_csv());
  put(prefix + "_config.txt", report.config.echo());
}

}  // namespace bivlogit
