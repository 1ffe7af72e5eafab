#include "sdsra/run_log.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>
#include <stdexcept>

namespace sdsra {

namespace {

std::string number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string optional_number(const std::optional<double>& v) { return v ? number(*v) : std::string(); }

}  // namespace

std::string csv_header() {
  std::string h = "step,episode,return,entropy,active_skill,loss_q1,loss_q2,loss_pi,j_integrated";
  for (std::size_t i = 0; i < kMaxSkills; ++i) h += ",r_" + std::to_string(i);
  return h;
}

std::string csv_line(const LogRecord& r) {
  std::string line = std::to_string(r.step) + "," + std::to_string(r.episode) + "," +
                     optional_number(r.episode_return) + "," + number(r.entropy) + "," +
                     std::to_string(r.active_skill) + "," + optional_number(r.loss_q1) + "," +
                     optional_number(r.loss_q2) + "," + optional_number(r.loss_pi) + "," +
                     optional_number(r.j_integrated);
  for (std::size_t i = 0; i < kMaxSkills; ++i) {
    line += ",";
    if (i < r.relevance.size()) line += number(r.relevance[i]);
  }
  return line;
}

void write_csv(std::ostream& out, const RunLog& log) {
  out << csv_header() << "\n";
  for (const auto& r : log.records) out << csv_line(r) << "\n";
}

std::string eval_csv_header() { return "step,return,entropy"; }

void write_eval_csv(std::ostream& out, const RunLog& log) {
  out << eval_csv_header() << "\n";
  for (const auto& e : log.evals)
    out << e.step << "," << number(e.mean_return) << "," << number(e.mean_entropy) << "\n";
}

void write_file_atomically(const std::filesystem::path& path, const std::string& contents) {
  auto partial = path;
  partial += ".partial";
  {
    std::ofstream out(partial, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + partial.string() + " for writing");
    out << contents;
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + partial.string());
  }
  std::error_code ec;
  std::filesystem::rename(partial, path, ec);
  if (ec) throw std::runtime_error("cannot rename " + partial.string() + ": " + ec.message());
}

}  // namespace sdsra
