#include "doctest.h"

#include "bivlogit/cmle.hpp"
#include "bivlogit/panel_io.hpp"
#include "bivlogit/run.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace bivlogit;

namespace {

LoadedPanel read(const std::string& text, const PanelSchema& schema = {}) {
  std::istringstream in(text);
  return read_panel(in, schema);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

const CommonParams kTruth = CommonParams::dynamic(2.5, -1.5, -1.5, 2.5, 1.0, 2.0);

// Simulated panel with two groups and window keys spread over 1990..1999.
Panel labelled_panel(std::size_t n, std::uint64_t seed) {
  Panel p = simulate_panel(kTruth, HeterogeneityDist::correctly_specified(), n, 3, true, seed);
  for (std::size_t i = 0; i < p.size(); ++i) {
    p.households[i].group = i % 3 == 0 ? "b" : "a";
    p.households[i].window_key = 1990 + static_cast<long long>(i % 10);
  }
  return p;
}

std::string shuffled_rows(const std::string& csv, std::uint64_t seed) {
  std::istringstream in(csv);
  std::string header, line;
  std::getline(in, header);
  std::vector<std::string> rows;
  while (std::getline(in, line)) rows.push_back(line);
  std::mt19937_64 g(seed);
  std::shuffle(rows.begin(), rows.end(), g);
  std::string out = header + "\n";
  for (const auto& r : rows) out += r + "\n";
  return out;
}

}  // namespace

TEST_CASE("load a small panel") {
  const auto lp = read(
      "household_id,period,y1,y2\n"
      "1,0,0,1\n1,1,1,1\n1,2,0,0\n1,3,1,0\n"
      "2,0,1,1\n2,1,1,1\n2,2,1,0\n2,3,0,0\n");
  CHECK(lp.panel.size() == 2);
  CHECK(lp.report.rows_read == 8);
  CHECK(lp.report.households_loaded == 2);
  CHECK(lp.report.issues.empty());
  CHECK(lp.panel.households[0].id == "1");
  CHECK(lp.panel.households[0].seq.at(0) == Cell{0, 1});
  CHECK(lp.panel.households[1].seq.at(2) == Cell{1, 0});
}

TEST_CASE("rejections are itemized") {
  const auto lp = read(
      "household_id,period,y1,y2\n"
      "1,0,0,1\n1,1,1,1\n1,3,1,0\n"
      "2,0,1,1\n2,1,1,1\n2,2,1,0\n"
      "3,0,1,1\n3,1,2,1\n3,2,1,0\n"
      "4,0,0,0\n4,1,1,1\n4,2,0,1\n");
  CHECK(lp.panel.size() == 2);
  CHECK(lp.report.rejected == std::vector<std::string>{"1", "3"});
  bool gap = false, bad_y = false;
  for (const auto& is : lp.report.issues) {
    if (is.household == "1") gap = true;
    if (is.household == "3") {
      bad_y = true;
      CHECK(is.row == 9);
      CHECK(is.column == "y1");
    }
    CHECK_FALSE(is.str().empty());
  }
  CHECK(gap);
  CHECK(bad_y);
  CHECK(lp.report.summary().find("2") != std::string::npos);

  // a required period count rejects the others
  PanelSchema s;
  s.periods = 3;
  CHECK(read("household_id,period,y1,y2\n1,0,0,1\n1,1,1,1\n1,2,0,0\n", s).panel.size() == 0);

  // empty covariate fields are errors
  const auto cov = read("household_id,period,y1,y2,x1_a,x2_a\n1,0,0,1,0.5,1\n1,1,1,1,,1\n1,2,0,0,1,1\n");
  CHECK(cov.panel.size() == 0);
  REQUIRE(cov.report.issues.size() >= 1);
  CHECK(cov.report.issues[0].column == "x1_a");
}

TEST_CASE("fatal schema errors") {
  CHECK_THROWS_AS(read(""), LoadError);
  CHECK_THROWS_AS(read("household_id,period,y1\n1,0,1\n"), LoadError);
  CHECK_THROWS_AS(read("household_id,period,y1,y2,y2\n"), LoadError);
  CHECK_THROWS_AS(read("household_id,period,y1,y2,x1_a\n1,0,0,0,1\n"), LoadError);
  try {
    read("id,period,y1,y2\n");
    FAIL("expected a load error");
  } catch (const LoadError& e) {
    REQUIRE_FALSE(e.issues().empty());
    CHECK(e.issues()[0].column == "household_id");
  }
  CHECK_THROWS_AS(load_panel("/nonexistent/panel.csv"), InvalidInput);
}

TEST_CASE("write and load round trip") {
  auto p = simulate_panel(kTruth, HeterogeneityDist::correctly_specified(), 500, 3, true, 8);
  std::stringstream ss;
  write_panel(p, ss);
  CHECK(read(ss.str()).panel == p);

  auto pc = kTruth;
  pc.beta1 = Vector::Constant(2, 0.3);
  pc.beta2 = Vector::Constant(2, -0.2);
  SimulationOptions o;
  o.covariate_dim = 2;
  const auto c = simulate_panel(pc, HeterogeneityDist::correctly_specified(), 200, 4, false, 9, o);
  std::stringstream sc;
  write_panel(c, sc);
  const auto back = read(sc.str());
  CHECK(back.report.issues.empty());
  CHECK(back.panel == c);

  const auto labelled = labelled_panel(300, 3);
  const auto dir = std::filesystem::temp_directory_path() / "bivlogit_io_test";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "panel.csv").string();
  write_panel(labelled, path);
  CHECK(load_panel(path).panel == labelled);
}

TEST_CASE("household id ordering") {
  CHECK(household_id_less("2", "10"));
  CHECK_FALSE(household_id_less("10", "2"));
  CHECK(household_id_less("a10", "a2"));
  CHECK(household_id_less("9", "a"));
}

TEST_CASE("rolling windows") {
  const auto w = rolling_windows(1982, 2021, {5, 1}, false);
  REQUIRE(w.size() == 36);
  CHECK(w.front().lo == 1982);
  CHECK(w.front().hi == 1986);
  CHECK(w.front().center == 1984.0);
  CHECK(w.back().hi == 2021);
  CHECK(w.back().center == 2019.0);
  for (const auto& x : w) CHECK_FALSE(x.edge);

  const auto e = rolling_windows(1982, 2021, {5, 1}, true);
  CHECK(e.size() == 40);
  int edges = 0;
  for (const auto& x : e) edges += x.edge;
  CHECK(edges == 4);
  CHECK(rolling_windows(1990, 1999, {5, 5}, false).size() == 2);
  CHECK(rolling_windows(1990, 1992, {5, 1}, false).empty());
}

TEST_CASE("configuration") {
  RunConfig c;
  c.set("estimator", "gmm-rho");
  c.set("window", "5,1");
  c.set("by_group", "1");
  c.set("seed", "42");
  CHECK(c.estimator == Estimator::gmm_rho);
  CHECK(c.window->width == 5);
  CHECK(c.by_group);
  CHECK(c.seed == 42);
  CHECK_THROWS_AS(c.set("nonsense", "1"), InvalidInput);
  CHECK_THROWS_AS(c.set("window", "0,1"), InvalidInput);
  c.rho_low = 3.0;
  c.rho_high = 1.0;
  CHECK_THROWS_AS(c.validate(), InvalidInput);

  RunConfig d;
  const auto dir = std::filesystem::temp_directory_path() / "bivlogit_io_test";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "run.conf").string();
  {
    std::ofstream out(path);
    out << "# comment\nestimator = cre\nbootstrap=10\nwindow=none\n";
  }
  d.load_file(path);
  CHECK(d.estimator == Estimator::cre);
  CHECK(d.bootstrap == 10);
  CHECK_FALSE(d.window.has_value());
  RunConfig e;
  std::istringstream echo(d.echo());
  std::string line;
  while (std::getline(echo, line)) {
    const auto eq = line.find('=');
    REQUIRE(eq != std::string::npos);
    e.set(line.substr(0, eq), line.substr(eq + 1));
  }
  CHECK(e.echo() == d.echo());
  for (const auto& n : estimator_names()) CHECK(estimator_name(estimator_from_name(n)) == n);
}

TEST_CASE("single cell equals the direct estimator") {
  const auto p = simulate_panel(kTruth, HeterogeneityDist::correctly_specified(), 5000, 3, true, 21);
  RunConfig c;
  c.estimator = Estimator::cmle_restricted;
  const auto rep = run(c, p);
  REQUIRE(rep.cells.size() == 1);
  CHECK(rep.cells[0].group == "all");
  CHECK(rep.cells[0].status == CellResult::Status::ok);
  const auto direct = fit_cmle(p, true);
  CHECK(rep.cells[0].fit.estimates == direct.estimates);
  CHECK(rep.cells[0].fit.covariance == direct.covariance);
  CHECK(rep.all_ok());

  // one group by label gives the same fit
  c.by_group = true;
  const auto g = run(c, p);
  REQUIRE(g.cells.size() == 1);
  CHECK(g.cells[0].fit.estimates == direct.estimates);

  // figure data: one row per parameter, no NaN
  const auto fig = rep.figure_csv();
  std::istringstream in(fig);
  std::string line;
  std::getline(in, line);
  CHECK(line == "group,window_center,parameter,estimate,se");
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    CHECK(line.find("nan") == std::string::npos);
  }
  CHECK(rows == static_cast<int>(direct.names.size()));
  CHECK(emit_figure_data(rep) == fig);
}

TEST_CASE("grouped windowed runs") {
  auto p = labelled_panel(6000, 5);
  // an empty cell: group c only in 1990
  Household h = p.households[0];
  h.id = "extra";
  h.group = "c";
  h.window_key = 1990;
  p.households.push_back(h);

  RunConfig c;
  c.estimator = Estimator::dynamic_pooled;
  c.by_group = true;
  c.window = WindowSpec{5, 5};
  const auto rep = run(c, p);
  CHECK(rep.cells.size() == 6);
  int skipped = 0;
  for (const auto& cell : rep.cells) {
    REQUIRE(cell.window.has_value());
    if (cell.group == "c") {
      if (cell.status == CellResult::Status::skipped) ++skipped;
      CHECK(cell.status != CellResult::Status::ok);
    } else {
      CHECK(cell.status == CellResult::Status::ok);
      CHECK(cell.households > 0);
    }
  }
  CHECK(skipped >= 1);
  const auto fig = rep.figure_csv();
  CHECK(fig.find("nan") == std::string::npos);
  CHECK(fig.find("\nc,") == std::string::npos);
}

TEST_CASE("reports do not depend on row order") {
  const auto p = labelled_panel(3000, 6);
  std::stringstream ss;
  write_panel(p, ss);
  const std::string csv = ss.str();
  RunConfig c;
  c.estimator = Estimator::gmm_rho;
  c.by_group = true;
  c.bootstrap = 20;
  c.seed = 9;
  const auto a = run(c, read(csv).panel);
  const auto b = run(c, read(shuffled_rows(csv, 1)).panel);
  CHECK(a.csv() == b.csv());
  CHECK(a.text() == b.text());
  CHECK(a.figure_csv() == b.figure_csv());
  CHECK(a.csv() == run(c, read(csv).panel).csv());
}

TEST_CASE("golden figure data") {
  const auto p = labelled_panel(4000, 11);
  RunConfig c;
  c.estimator = Estimator::cmle_restricted;
  c.by_group = true;
  c.window = WindowSpec{5, 5};
  const auto fig = run(c, p).figure_csv();
  const std::string path = std::string(BIVLOGIT_TEST_DATA) + "/golden_figure.csv";
  if (std::getenv("BIVLOGIT_UPDATE_GOLDEN")) {
    std::ofstream(path, std::ios::binary) << fig;
  }
  REQUIRE(std::filesystem::exists(path));
  CHECK(fig == slurp(path));
}

TEST_CASE("report files") {
  const auto p = labelled_panel(2000, 12);
  RunConfig c;
  c.estimator = Estimator::static_ss;
  const auto rep = run(c, p);
  const auto dir = std::filesystem::temp_directory_path() / "bivlogit_io_test";
  std::filesystem::create_directories(dir);
  const std::string prefix = (dir / "report").string();
  write_reports(rep, prefix);
  CHECK(slurp(prefix + ".csv") == rep.csv());
  CHECK(slurp(prefix + ".txt") == rep.text());
  CHECK(slurp(prefix + "_figure.csv") == rep.figure_csv());
  CHECK(slurp(prefix + "_config.txt") == c.echo());
  CHECK(rep.csv().rfind("group,window_lo,window_hi,window_center,edge,households,status,parameter,estimate,se,boot_se,match_fraction,notice", 0) == 0);
}
