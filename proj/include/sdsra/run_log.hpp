#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "sdsra/agent.hpp"

namespace sdsra {

/// step,episode,return,entropy,active_skill,loss_q1,loss_q2,loss_pi,j_integrated,r_0..r_7
std::string csv_header();
/// Numbers use 9 significant digits; absent values are empty cells.
std::string csv_line(const LogRecord& record);
void write_csv(std::ostream& out, const RunLog& log);

std::string eval_csv_header();
void write_eval_csv(std::ostream& out, const RunLog& log);

/// Writes `path.partial`, then renames it to `path`. On failure the partial
/// file stays behind and std::runtime_error is thrown.
void write_file_atomically(const std::filesystem::path& path, const std::string& contents);

}  // namespace sdsra
