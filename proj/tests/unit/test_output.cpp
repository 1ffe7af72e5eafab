#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "sdsra/run_log.hpp"
#include "sdsra/svg.hpp"

using namespace sdsra;

namespace {

std::size_t count(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

TEST_CASE("csv header lists the fixed columns and eight relevance slots") {
  const auto h = split(csv_header());
  REQUIRE(h.size() == 17);
  CHECK(h[0] == "step");
  CHECK(h[2] == "return");
  CHECK(h[8] == "j_integrated");
  CHECK(h[9] == "r_0");
  CHECK(h[16] == "r_7");
}

TEST_CASE("csv lines pad unused relevance slots and leave absent values empty") {
  LogRecord r;
  r.step = 1000;
  r.episode = 4;
  r.entropy = 0.5;
  r.active_skill = 1;
  r.relevance = {0.25, -0.125};
  const auto cells = split(csv_line(r));
  REQUIRE(cells.size() == 17);
  CHECK(cells[0] == "1000");
  CHECK(cells[2].empty());
  CHECK(cells[5].empty());
  CHECK(cells[8].empty());
  CHECK(cells[9] == "0.25");
  CHECK(cells[10] == "-0.125");
  for (std::size_t i = 11; i < 17; ++i) CHECK(cells[i].empty());
}

TEST_CASE("csv numbers keep nine significant digits") {
  LogRecord r;
  r.episode_return = -123.456789123;
  r.loss_q1 = 1.0 / 3.0;
  const auto cells = split(csv_line(r));
  CHECK(cells[2] == "-123.456789");
  CHECK(cells[5] == "0.333333333");
}

TEST_CASE("eval csv writes one row per evaluation") {
  RunLog log;
  log.evals = {{1000, -500.0, 0.25}, {2000, -200.5, 0.125}};
  std::ostringstream os;
  write_eval_csv(os, log);
  CHECK(os.str() == "step,return,entropy\n1000,-500,0.25\n2000,-200.5,0.125\n");
}

TEST_CASE("atomic writes leave only the final file") {
  const auto dir = std::filesystem::temp_directory_path() / "sdsra_output_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "a.csv";
  write_file_atomically(path, "x,y\n");
  std::ifstream in(path);
  std::string text((std::istreambuf_iterator<char>(in)), {});
  CHECK(text == "x,y\n");
  CHECK_FALSE(std::filesystem::exists(dir / "a.csv.partial"));
  CHECK_THROWS_AS(write_file_atomically(dir / "missing" / "b.csv", "z"), std::runtime_error);
  std::filesystem::remove_all(dir);
}

TEST_CASE("moving average is trailing and partial at the start") {
  const std::vector<std::pair<double, double>> pts{{1, 1}, {2, 3}, {3, 5}, {4, 7}};
  const auto m = moving_average(pts, 2);
  REQUIRE(m.size() == 4);
  CHECK(m[0].second == 1.0);
  CHECK(m[1].second == 2.0);
  CHECK(m[2].second == 4.0);
  CHECK(m[3].second == 6.0);
  CHECK(m[3].first == 4.0);
  CHECK(moving_average(pts, 1) == pts);
}

TEST_CASE("learning curve svg is well formed with two polylines per series") {
  std::vector<CurveSeries> series;
  for (int s = 0; s < 3; ++s) {
    CurveSeries c{"seed <" + std::to_string(s) + "> & co", "#1f77b4", {}};
    for (int i = 0; i < 50; ++i) c.points.push_back({i * 200.0, -1000.0 + i * 10.0 + s});
    series.push_back(c);
  }
  const auto svg = learning_curve_svg("pendulum \"sac\"", series);
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(count(svg, "<polyline") == 6);
  CHECK(count(svg, "class=\"raw\"") == 3);
  CHECK(count(svg, "class=\"smoothed\"") == 3);
  CHECK(count(svg, "<text") == count(svg, "</text>"));
  CHECK(svg.find("&lt;0&gt; &amp; co") != std::string::npos);
  CHECK(svg.find("\"sac\"") == std::string::npos);
  CHECK(svg.find("step") != std::string::npos);
  CHECK(svg.find("return") != std::string::npos);
}

TEST_CASE("svg tolerates empty and single-point series") {
  const auto svg = learning_curve_svg("t", {{"a", "red", {}}, {"b", "blue", {{5, 5}}}});
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(svg.find("nan") == std::string::npos);
  CHECK(xml_escape("a<b>&\"'") == "a&lt;b&gt;&amp;&quot;&apos;");
}
