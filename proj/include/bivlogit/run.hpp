#pragma once

#include "bivlogit/fit_result.hpp"
#include "bivlogit/simulate.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace bivlogit {

enum class Estimator { static_ss, dynamic_pooled, cmle, cmle_restricted, gmm_rho, cre };

Estimator estimator_from_name(const std::string& name);
std::string estimator_name(Estimator e);
std::vector<std::string> estimator_names();

struct WindowSpec {
  long long width = 5;
  long long step = 1;
};

struct RunConfig {
  Estimator estimator = Estimator::cmle_restricted;
  bool by_group = false;                // split cells by the household group label
  std::optional<WindowSpec> window;     // rolling windows over window_key
  bool edge_windows = false;            // add truncated windows at both ends, flagged
  int bootstrap = 0;                    // household-resampling replicates per cell; 0 disables
  std::uint64_t seed = 1;
  double rho_low = -2.0;
  double rho_high = 4.0;
  int cre_order = 32;
  std::string input;
  std::string output;                   // report prefix

  void validate() const;
  // key=value assignment; throws InvalidInput on unknown keys or bad values.
  void set(const std::string& key, const std::string& value);
  // Flat key=value file; '#' starts a comment.
  void load_file(const std::string& path);
  // Every key with its resolved value, one per line, in a fixed order.
  std::string echo() const;
};

struct Window {
  long long lo = 0;
  long long hi = 0;
  double center = 0.0;
  bool edge = false;
};

// Full windows [start, start + width - 1] stepping from the smallest key; with
// edges, truncated windows whose nominal center lies inside the key range are added.
std::vector<Window> rolling_windows(long long min_key, long long max_key, const WindowSpec& spec, bool edges);

struct CellResult {
  std::string group;
  std::optional<Window> window;
  std::size_t households = 0;
  enum class Status { ok, not_converged, skipped, failed } status = Status::skipped;
  std::string notice;
  FitResult fit;
  Vector boot_se;
  double match_fraction = -1.0;  // GMM only: mean share of households matching a moment pattern

  bool usable() const { return status == Status::ok || status == Status::not_converged; }
};

std::string status_name(CellResult::Status s);

struct RunReport {
  RunConfig config;
  std::vector<CellResult> cells;

  // True when every cell converged or was skipped as empty.
  bool all_ok() const;
  std::string csv() const;
  std::string text() const;
  // Long format: group,window_center,parameter,estimate,se.
  std::string figure_csv() const;
};

FitResult fit_estimator(const RunConfig& config, const Panel& panel, double* match_fraction = nullptr);

RunReport run(const RunConfig& config, const Panel& panel);
std::string emit_figure_data(const RunReport& report);

// Writes <prefix>.csv, <prefix>.txt, <prefix>_figure.csv and <prefix>_config.txt.
void write_reports(const RunReport& report, const std::string& prefix);

}  // namespace bivlogit
