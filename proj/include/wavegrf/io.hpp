#ifndef WAVEGRF_IO_HPP
#define WAVEGRF_IO_HPP

//
// Output files: CSV with a '#'-comment metadata header, Matrix Market
// coordinate files, and JSON sidecars. Numbers are printed with %.17g so
// that reruns with the same configuration and seed are byte-identical.
//

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Sparse>
#include <json.hpp>

#include "error.hpp"
#include "spectral.hpp"

namespace wavegrf {

inline constexpr const char* version = "0.1.0";

/// 64-bit FNV-1a hash as 16 hex digits.
inline std::string fnv1a_hex(const std::string& text)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline std::string format_number(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct OutputMeta
{
    std::string command;
    std::string config_hash;
    std::uint64_t seed = 0;
    std::vector<std::pair<std::string, std::string>> fields;

    OutputMeta& set(const std::string& key, const std::string& value)
    {
        for (auto& f : fields)
            if (f.first == key) {
                f.second = value;
                return *this;
            }
        fields.emplace_back(key, value);
        return *this;
    }
    OutputMeta& set(const std::string& key, double value) { return set(key, format_number(value)); }
    OutputMeta& set(const std::string& key, int value) { return set(key, std::to_string(value)); }

    std::vector<std::pair<std::string, std::string>> all() const
    {
        std::vector<std::pair<std::string, std::string>> out{{"command", command},
                                                             {"version", version},
                                                             {"config_hash", config_hash},
                                                             {"seed", std::to_string(seed)}};
        out.insert(out.end(), fields.begin(), fields.end());
        return out;
    }

    nlohmann::ordered_json to_json() const
    {
        nlohmann::ordered_json j;
        for (const auto& [k, v] : all())
            j[k] = v;
        return j;
    }
};

inline std::ofstream open_output(const std::filesystem::path& path)
{
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw ConfigError("cannot write '" + path.string() + "'");
    return out;
}

class CsvWriter
{
public:
    CsvWriter(const std::filesystem::path& path, const OutputMeta& meta, const std::vector<std::string>& columns)
        : out_(open_output(path)), ncol_(columns.size())
    {
        for (const auto& [k, v] : meta.all())
            out_ << "# " << k << ": " << v << '\n';
        for (std::size_t i = 0; i < columns.size(); ++i)
            out_ << (i ? "," : "") << columns[i];
        out_ << '\n';
    }

    /// Cells are numbers or preformatted strings.
    void row(const std::vector<std::string>& cells)
    {
        if (cells.size() != ncol_)
            throw Error("CSV row has " + std::to_string(cells.size()) + " cells, expected " + std::to_string(ncol_));
        for (std::size_t i = 0; i < cells.size(); ++i)
            out_ << (i ? "," : "") << cells[i];
        out_ << '\n';
    }

    void row(const std::vector<double>& cells)
    {
        std::vector<std::string> s;
        s.reserve(cells.size());
        for (double v : cells)
            s.push_back(format_number(v));
        row(s);
    }

private:
    std::ofstream out_;
    std::size_t ncol_;
};

inline void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& j)
{
    auto out = open_output(path);
    out << j.dump(2) << '\n';
}

/// Symmetric sparse matrix, lower triangle, "coordinate real symmetric".
inline void write_matrix_market(const std::filesystem::path& path, const SparseSymMatrix& A, const OutputMeta& meta)
{
    auto out = open_output(path);
    out << "%%MatrixMarket matrix coordinate real symmetric\n";
    for (const auto& [k, v] : meta.all())
        out << "% " << k << ": " << v << '\n';
    const auto& rp = A.row_ptr();
    const auto& cols = A.cols();
    const auto& vals = A.values();
    long lower = 0;
    for (int i = 0; i < A.size(); ++i)
        for (int q = rp[static_cast<std::size_t>(i)]; q < rp[static_cast<std::size_t>(i) + 1]; ++q)
            if (cols[static_cast<std::size_t>(q)] <= i)
                ++lower;
    out << A.size() << ' ' << A.size() << ' ' << lower << '\n';
    for (int i = 0; i < A.size(); ++i)
        for (int q = rp[static_cast<std::size_t>(i)]; q < rp[static_cast<std::size_t>(i) + 1]; ++q)
            if (cols[static_cast<std::size_t>(q)] <= i)
                out << i + 1 << ' ' << cols[static_cast<std::size_t>(q)] + 1 << ' '
                    << format_number(vals[static_cast<std::size_t>(q)]) << '\n';
}

/// General sparse matrix, "coordinate real general".
inline void write_matrix_market(const std::filesystem::path& path,
                                const Eigen::SparseMatrix<double, Eigen::RowMajor>& A, const OutputMeta& meta)
{
    auto out = open_output(path);
    out << "%%MatrixMarket matrix coordinate real general\n";
    for (const auto& [k, v] : meta.all())
        out << "% " << k << ": " << v << '\n';
    out << A.rows() << ' ' << A.cols() << ' ' << A.nonZeros() << '\n';
    for (int i = 0; i < A.outerSize(); ++i)
        for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(A, i); it; ++it)
            out << it.row() + 1 << ' ' << it.col() + 1 << ' ' << format_number(it.value()) << '\n';
}

/// Dense matrix entries above a relative threshold, "coordinate real general".
inline void write_matrix_market(const std::filesystem::path& path, const Matrix& A, const OutputMeta& meta,
                                double rel_threshold = 0.0)
{
    const double cut = rel_threshold * A.cwiseAbs().maxCoeff();
    Eigen::SparseMatrix<double, Eigen::RowMajor> S = A.sparseView(cut > 0.0 ? cut : 0.0, 1.0);
    S.makeCompressed();
    write_matrix_market(path, S, meta);
}

/// Reads "coordinate real symmetric|general" files into a dense matrix.
inline Matrix read_matrix_market(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open '" + path.string() + "'");
    std::string line;
    std::getline(in, line);
    if (line.rfind("%%MatrixMarket matrix coordinate real", 0) != 0)
        throw ConfigError("'" + path.string() + "' is not a real coordinate Matrix Market file");
    const bool symmetric = line.find("symmetric") != std::string::npos;
    while (std::getline(in, line) && !line.empty() && line[0] == '%') {
    }
    long rows = 0, cols = 0, nnz = 0;
    if (std::sscanf(line.c_str(), "%ld %ld %ld", &rows, &cols, &nnz) != 3)
        throw ConfigError("bad Matrix Market size line in '" + path.string() + "'");
    Matrix A = Matrix::Zero(rows, cols);
    for (long n = 0; n < nnz; ++n) {
        long i = 0, j = 0;
        double v = 0.0;
        if (!(in >> i >> j >> v))
            throw ConfigError("truncated Matrix Market file '" + path.string() + "'");
        A(i - 1, j - 1) = v;
        if (symmetric)
            A(j - 1, i - 1) = v;
    }
    return A;
}

/// Machine-readable error record written by the command line tool.
inline nlohmann::ordered_json error_record(const std::string& kind, int exit_code, const std::string& message,
                                           const std::string& command)
{
    nlohmann::ordered_json j;
    j["error"] = kind;
    j["exit_code"] = exit_code;
    j["command"] = command;
    j["message"] = message;
    j["version"] = version;
    return j;
}

} // namespace wavegrf

#endif
