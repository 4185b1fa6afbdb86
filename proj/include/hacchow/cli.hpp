#pragma once

#include "hacchow/chowtest.hpp"

#include <json.hpp>

#include <cstddef>
#include <filesystem>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace hacchow::cli {

inline constexpr std::string_view kVersion = "0.1.0";
inline constexpr int kReportSchema = 1;
inline constexpr const char* kCacheEnv = "HACCHOW_CACHE_DIR";

enum ExitCode : int { kOk = 0, kUsage = 2, kNumerical = 3, kIo = 4 };

/// Numeric CSV with a header row. Columns are addressed by name.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> columns;

    [[nodiscard]] std::size_t rows() const noexcept { return columns.empty() ? 0 : columns.front().size(); }
    /// @throws Error(DomainError) for an unknown name
    [[nodiscard]] const std::vector<double>& column(std::string_view name) const;
};

/// @throws Error(DomainError) on ragged rows, non-numeric cells or duplicate headers
[[nodiscard]] CsvTable read_csv(std::istream& in);
/// @throws Error(IoError) if the file cannot be opened
[[nodiscard]] CsvTable read_csv_file(const std::filesystem::path& path);

[[nodiscard]] nlohmann::json matrix_json(const numkit::Matrix& m);
[[nodiscard]] nlohmann::json report_json(const chowtest::TestReport& report);

/// Entry point shared by the executable and the tests. Returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace hacchow::cli
