#pragma once

#include "iwz/ba_solver.hpp"
#include "iwz/source_model.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <string_view>

namespace iwz {

/// Parses the model document:
///   { "s_alphabet": [...], "x_alphabet": [...], "y_alphabet": [...],
///     "s_hat_alphabet": [...], "x_hat_alphabet": [...],
///     "p_sxy": [[[...]]]  (indexed [s][x][y]),
///     "d_x": [[...]]      (indexed [x][x_hat]),
///     "d_s": [[...]]      (indexed [s][s_hat]) }
/// Alphabet entries are numbers or strings. Errors name the offending line
/// and JSON pointer.
JointSourceModel parse_model_json(std::string_view text);
JointSourceModel load_model(const std::filesystem::path& path);

nlohmann::json model_to_json(const JointSourceModel& model);

nlohmann::json solution_to_json(const BASolution& solution);
BASolution parse_solution_json(std::string_view text, const JointSourceModel& model);
BASolution load_solution(const std::filesystem::path& path, const JointSourceModel& model);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace iwz
