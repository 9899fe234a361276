#pragma once

#include <array>
#include <string>
#include <vector>

#include "atmp/analysis.hpp"
#include "atmp/attacks.hpp"
#include "atmp/training.hpp"

namespace atmp {

// All artifact files are UTF-8 with LF line endings; floats are written with
// 17 significant digits so that parsing an export reproduces every numeric
// value bitwise.
std::string format_g17(double v);
std::string format_row(const std::vector<double>& values);  // comma-joined
std::vector<double> parse_row(const std::string& line);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

inline constexpr const char* kTrajectoryHeader =
    "epoch,lr,loss_l1,loss_l2,loss_linf,loss_agg,gnorm_l1,gnorm_l2,gnorm_linf,"
    "acc_l1,acc_l2,acc_linf,acc_union,acc_mix,acc_clean";

std::string trajectory_to_csv(const TrajectoryRecord& trajectory);
TrajectoryRecord trajectory_from_csv(const std::string& text);

// Header "theta1,theta2,value", rows in row-major grid order.
std::string landscape_to_csv(const LandscapeGrid& grid);
LandscapeGrid landscape_from_csv(const std::string& text);

// One parameter per line.
std::string params_to_text(const Vec& params);
Vec params_from_text(const std::string& text);

// Result-summary metric columns, fixed order.
inline constexpr const char* kSummaryColumns = "clean,l1,l2,linf,union,mix";

// Maps a robust report onto the six summary columns; norms missing from the
// mixture contribute 0.
std::array<double, 6> summary_row(const RobustReport& report, const MixtureSpec& mixture);

}  // namespace atmp
