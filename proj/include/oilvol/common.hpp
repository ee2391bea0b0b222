#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace oilvol {

// ---------------------------------------------------------------------------
// Errors. Every failure the library raises derives from Error and carries a
// kind so the CLI can map it onto an exit code.
// ---------------------------------------------------------------------------
enum class ErrorKind {
    parse,
    validation,
    insufficient_data,
    format,
    provider,
    protocol,
    contract,
    degenerate_training,
    alignment,
    config,
    dependency,
    io,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error(ErrorKind::parse, "line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class ProviderError : public Error {
public:
    ProviderError(const std::string& what, std::optional<int> retry_after_s)
        : Error(ErrorKind::provider, what), retry_after_(retry_after_s) {}
    std::optional<int> retry_after_seconds() const noexcept { return retry_after_; }

private:
    std::optional<int> retry_after_;
};

// ---------------------------------------------------------------------------
// Calendar dates (UTC, day resolution).
// ---------------------------------------------------------------------------
using Date = std::chrono::sys_days;

/// Parses `YYYY-MM-DD`. Returns nullopt on anything else (including invalid days).
std::optional<Date> parse_date(std::string_view text);
std::string format_date(Date d);

// ---------------------------------------------------------------------------
// Dense row-major matrix of doubles.
// ---------------------------------------------------------------------------
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix from_rows(const std::vector<std::vector<double>>& rows);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool empty() const noexcept { return rows_ == 0; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    void append_row(std::span<const double> values);
    /// Rows [begin, end).
    Matrix slice_rows(std::size_t begin, std::size_t end) const;
    Matrix select_rows(std::span<const std::size_t> indices) const;

    const std::vector<double>& data() const noexcept { return data_; }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// ---------------------------------------------------------------------------
// Text and IO helpers.
// ---------------------------------------------------------------------------

/// RFC-4180 CSV reader. Returns records; `line_numbers[i]` is the 1-based line
/// on which record i starts.
struct CsvTable {
    std::vector<std::vector<std::string>> records;
    std::vector<std::size_t> line_numbers;
};
CsvTable parse_csv(std::string_view text);
/// Quotes a field when it contains a comma, quote, or newline.
std::string csv_escape(std::string_view field);

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
std::vector<std::string> split_whitespace(std::string_view s);

/// Shortest decimal text that round-trips the double exactly.
std::string format_double(double v);
/// Strict full-string parse.
std::optional<double> parse_double(std::string_view s);

std::string read_file(const std::filesystem::path& path);
/// Writes atomically (temp file + rename).
void write_file(const std::filesystem::path& path, std::string_view contents);

/// Lowercase hex SHA-256 digest.
std::string sha256_hex(std::string_view bytes);

/// 64-bit FNV-1a; used for seed derivation only.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace oilvol
