#include "atmp/exports.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "atmp/errors.hpp"

namespace atmp {

namespace {

double parse_field(const std::string& context, const std::string& cell) {
    try {
        std::size_t used = 0;
        double v = std::stod(cell, &used);
        if (used != cell.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw IoError(context + ": invalid number '" + cell + "'");
    }
}

std::vector<std::string> split_cells(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string line;
    while (std::getline(ss, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        out.push_back(line);
    }
    while (!out.empty() && out.back().empty()) out.pop_back();
    return out;
}

}  // namespace

std::string format_g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string format_row(const std::vector<double>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += ",";
        out += format_g17(values[i]);
    }
    return out;
}

std::vector<double> parse_row(const std::string& line) {
    std::vector<double> out;
    for (const std::string& cell : split_cells(line)) out.push_back(parse_field("row", cell));
    return out;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write file: " + path);
    out << content;
    out.flush();
    if (!out) throw IoError("failed writing file: " + path);
}

std::string trajectory_to_csv(const TrajectoryRecord& trajectory) {
    std::string out = kTrajectoryHeader;
    out += "\n";
    for (const EpochRecord& rec : trajectory.epochs) {
        out += std::to_string(rec.epoch);
        const double fields[] = {rec.lr,          rec.task_loss[0], rec.task_loss[1],
                                 rec.task_loss[2], rec.loss_agg,     rec.gnorm[0],
                                 rec.gnorm[1],     rec.gnorm[2],     rec.acc[0],
                                 rec.acc[1],       rec.acc[2],       rec.acc_union,
                                 rec.acc_mix,      rec.acc_clean};
        for (double f : fields) {
            out += ",";
            out += format_g17(f);
        }
        out += "\n";
    }
    return out;
}

TrajectoryRecord trajectory_from_csv(const std::string& text) {
    std::vector<std::string> lines = split_lines(text);
    if (lines.empty() || lines[0] != kTrajectoryHeader)
        throw IoError("trajectory csv: missing or wrong header");
    TrajectoryRecord out;
    for (std::size_t li = 1; li < lines.size(); ++li) {
        std::string context = "trajectory csv line " + std::to_string(li + 1);
        std::vector<std::string> cells = split_cells(lines[li]);
        if (cells.size() != 15) throw IoError(context + ": expected 15 fields");
        EpochRecord rec;
        rec.epoch = static_cast<int>(parse_field(context, cells[0]));
        rec.lr = parse_field(context, cells[1]);
        rec.task_loss = {parse_field(context, cells[2]), parse_field(context, cells[3]),
                         parse_field(context, cells[4])};
        rec.loss_agg = parse_field(context, cells[5]);
        rec.gnorm = {parse_field(context, cells[6]), parse_field(context, cells[7]),
                     parse_field(context, cells[8])};
        rec.acc = {parse_field(context, cells[9]), parse_field(context, cells[10]),
                   parse_field(context, cells[11])};
        rec.acc_union = parse_field(context, cells[12]);
        rec.acc_mix = parse_field(context, cells[13]);
        rec.acc_clean = parse_field(context, cells[14]);
        out.epochs.push_back(rec);
    }
    return out;
}

std::string landscape_to_csv(const LandscapeGrid& grid) {
    std::string out = "theta1,theta2,value\n";
    for (std::size_t i = 0; i < grid.theta1_axis.size(); ++i) {
        for (std::size_t j = 0; j < grid.theta2_axis.size(); ++j) {
            out += format_g17(grid.theta1_axis[i]);
            out += ",";
            out += format_g17(grid.theta2_axis[j]);
            out += ",";
            out += format_g17(grid.values.at(i, j));
            out += "\n";
        }
    }
    return out;
}

LandscapeGrid landscape_from_csv(const std::string& text) {
    std::vector<std::string> lines = split_lines(text);
    if (lines.empty() || lines[0] != "theta1,theta2,value")
        throw IoError("landscape csv: missing or wrong header");
    std::vector<std::array<double, 3>> rows;
    for (std::size_t li = 1; li < lines.size(); ++li) {
        std::string context = "landscape csv line " + std::to_string(li + 1);
        std::vector<std::string> cells = split_cells(lines[li]);
        if (cells.size() != 3) throw IoError(context + ": expected 3 fields");
        rows.push_back({parse_field(context, cells[0]), parse_field(context, cells[1]),
                        parse_field(context, cells[2])});
    }
    if (rows.empty()) throw IoError("landscape csv: no data rows");
    std::size_t n2 = 0;
    while (n2 < rows.size() && rows[n2][0] == rows[0][0]) ++n2;
    if (n2 == 0 || rows.size() % n2 != 0) throw IoError("landscape csv: ragged grid");
    std::size_t n1 = rows.size() / n2;
    LandscapeGrid grid;
    grid.theta2_axis.resize(n2);
    for (std::size_t j = 0; j < n2; ++j) grid.theta2_axis[j] = rows[j][1];
    grid.theta1_axis.resize(n1);
    grid.values.rows = n1;
    grid.values.cols = n2;
    grid.values.data.resize(n1 * n2);
    for (std::size_t i = 0; i < n1; ++i) {
        grid.theta1_axis[i] = rows[i * n2][0];
        for (std::size_t j = 0; j < n2; ++j) {
            const auto& row = rows[i * n2 + j];
            if (row[0] != grid.theta1_axis[i] || row[1] != grid.theta2_axis[j])
                throw IoError("landscape csv: grid rows out of order");
            grid.values.data[i * n2 + j] = row[2];
        }
    }
    return grid;
}

std::string params_to_text(const Vec& params) {
    std::string out;
    for (double p : params) {
        out += format_g17(p);
        out += "\n";
    }
    return out;
}

Vec params_from_text(const std::string& text) {
    Vec out;
    std::vector<std::string> lines = split_lines(text);
    for (std::size_t li = 0; li < lines.size(); ++li) {
        if (lines[li].empty()) continue;
        out.push_back(parse_field("params line " + std::to_string(li + 1), lines[li]));
    }
    if (out.empty()) throw IoError("params file: no values");
    return out;
}

std::array<double, 6> summary_row(const RobustReport& report, const MixtureSpec& mixture) {
    std::array<double, 6> row{};
    row[0] = report.clean_acc;
    for (std::size_t p = 0; p < mixture.specs.size() && p < report.per_attack_acc.size(); ++p)
        row[1 + norm_slot(mixture.specs[p].kind)] = report.per_attack_acc[p];
    row[4] = report.union_acc;
    row[5] = report.mix_acc;
    return row;
}

}  // namespace atmp
