#pragma once

#include "bivlogit/error.hpp"
#include "bivlogit/simulate.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace bivlogit {

// Column names; covariates are paired columns <x1_prefix>k / <x2_prefix>k.
struct PanelSchema {
  std::string id = "household_id";
  std::string period = "period";
  std::string y1 = "y1";
  std::string y2 = "y2";
  std::string group = "group";            // optional column
  std::string window_key = "window_key";  // optional column
  std::string x1_prefix = "x1_";
  std::string x2_prefix = "x2_";
  std::optional<int> periods;  // required T; otherwise the most common T in the file
};

struct LoadIssue {
  std::size_t row = 0;  // 1-based line number in the file (header is line 1); 0 when not row-specific
  std::string column;
  std::string household;
  std::string message;

  std::string str() const;
};

struct LoadReport {
  std::size_t rows_read = 0;
  std::size_t households_loaded = 0;
  std::vector<LoadIssue> issues;           // every rejected row or household, itemized
  std::vector<std::string> rejected;       // rejected household ids, sorted

  std::string summary() const;
};

// Fatal load failure (unreadable file, missing header or required columns).
class LoadError : public InvalidInput {
 public:
  LoadError(const std::string& what, std::vector<LoadIssue> issues)
      : InvalidInput(what), issues_(std::move(issues)) {}
  const std::vector<LoadIssue>& issues() const { return issues_; }

 private:
  std::vector<LoadIssue> issues_;
};

struct LoadedPanel {
  Panel panel;
  LoadReport report;
};

LoadedPanel read_panel(std::istream& in, const PanelSchema& schema = {});
LoadedPanel load_panel(const std::string& path, const PanelSchema& schema = {});

// Writes the columns household_id, period, y1, y2, x1_*, x2_*, then group and
// window_key when any household carries them.
void write_panel(const Panel& panel, std::ostream& out);
void write_panel(const Panel& panel, const std::string& path);

// Orders ids numerically when both are integers, lexicographically otherwise.
bool household_id_less(const std::string& a, const std::string& b);

}  // namespace bivlogit
