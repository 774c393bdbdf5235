#pragma once

#include "config.hpp"

#include <cstdint>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

namespace pnrsim {

inline constexpr const char* kVersion = "1.0.0";

using Cell = std::variant<double, long, std::string>;

struct ResultTable {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
    std::vector<std::string> metadata; // written as `# ` lines above the header

    void add_row(std::vector<Cell> row);
};

/// 64-bit FNV-1a.
std::uint64_t fnv1a(const std::string& s);

/// Fixed column set of an experiment.
std::vector<std::string> columns_of(Experiment e);

/// Runs a validated config. Library errors propagate.
ResultTable run(const ExperimentConfig& cfg);

/// Shortest round-trip representation.
std::string format_cell(const Cell& c);
void write_csv(std::ostream& out, const ResultTable& table);

} // namespace pnrsim
