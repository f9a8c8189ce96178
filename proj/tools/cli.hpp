#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace warpflow::cli {

// Exit codes: 0 success, 2 verdict-negative, 1 error.
inline constexpr int kOk = 0;
inline constexpr int kError = 1;
inline constexpr int kNegative = 2;

// Runs one command; args exclude the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// SVG plots for whichever CSV artifacts exist in `dir`; returns the files written.
std::vector<std::filesystem::path> render_plots(const std::filesystem::path& dir);

}  // namespace warpflow::cli
