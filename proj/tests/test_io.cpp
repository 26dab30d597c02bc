#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <wavegrf/io.hpp>

using namespace wavegrf;

namespace {

std::string slurp(const std::filesystem::path& p)
{
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::filesystem::path scratch(const std::string& name)
{
    return std::filesystem::temp_directory_path() / "wavegrf_io_test" / name;
}

} // namespace

TEST(Io, Fnv1aKnownValues)
{
    EXPECT_EQ(fnv1a_hex(""), "cbf29ce484222325");
    EXPECT_EQ(fnv1a_hex("a"), "af63dc4c8601ec8c");
    EXPECT_EQ(fnv1a_hex("foobar"), "85944171f73967e8");
}

TEST(Io, NumbersRoundTrip)
{
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23})
        EXPECT_EQ(std::stod(format_number(v)), v);
}

TEST(Io, CsvHeaderAndRows)
{
    OutputMeta meta;
    meta.command = "tables";
    meta.config_hash = "abc";
    meta.seed = 7;
    meta.set("J", 5).set("ell", 0.5).set("J", 6);
    const auto path = scratch("t.csv");
    {
        CsvWriter w(path, meta, {"x", "y"});
        w.row(std::vector<double>{1.0, 0.25});
        w.row(std::vector<std::string>{"a", "b"});
        EXPECT_THROW(w.row(std::vector<double>{1.0}), Error);
    }
    EXPECT_EQ(slurp(path), std::string("# command: tables\n# version: ") + version
                               + "\n# config_hash: abc\n# seed: 7\n# J: 6\n# ell: 0.5\nx,y\n1,0.25\na,b\n");
    EXPECT_EQ(meta.to_json()["J"], "6");
}

TEST(Io, MatrixMarketRoundTrip)
{
    Matrix A(3, 3);
    A << 4, 1, 0, 1, 3, -0.5, 0, -0.5, 2;
    OutputMeta meta;
    meta.command = "test";
    write_matrix_market(scratch("sym.mtx"), SparseSymMatrix::from_dense(A), meta);
    EXPECT_EQ(read_matrix_market(scratch("sym.mtx")), A);
    const std::string text = slurp(scratch("sym.mtx"));
    EXPECT_NE(text.find("coordinate real symmetric"), std::string::npos);
    EXPECT_NE(text.find("\n3 3 5\n"), std::string::npos);

    Matrix B(2, 3);
    B << 1, 0, 2, 0, 1e-20, 3;
    write_matrix_market(scratch("gen.mtx"), B, meta, 1e-12);
    Matrix Bt = B;
    Bt(1, 1) = 0.0;
    EXPECT_EQ(read_matrix_market(scratch("gen.mtx")), Bt);
    EXPECT_THROW(read_matrix_market(scratch("missing.mtx")), ConfigError);
}

TEST(Io, ErrorRecord)
{
    const auto j = error_record("numerical", 3, "CG failed", "sample");
    EXPECT_EQ(j["exit_code"], 3);
    EXPECT_EQ(j["error"], "numerical");
    EXPECT_EQ(j.dump(), R"({"error":"numerical","exit_code":3,"command":"sample","message":"CG failed","version":")"
                            + std::string(version) + "\"}");
}
