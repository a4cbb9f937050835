#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "ffkm/error.hpp"
#include "ffkm/io.hpp"

using namespace ffkm;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        static int counter = 0;
        path = fs::temp_directory_path() /
               ("ffkm_io_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    fs::path write(const std::string& name, const std::string& text) const {
        std::ofstream(path / name, std::ios::binary) << text;
        return path / name;
    }
};

std::vector<io::Row> parse(const std::string& text) {
    std::istringstream in(text);
    return io::read_csv(in);
}

}  // namespace

TEST_CASE("CSV fields with separators, quotes and line breaks round trip") {
    const std::vector<io::Row> rows{{"plain", "with,comma", "say \"hi\"", "two\nlines", ""},
                                    {"a", "b\r\nc", "\"", ",", "end"}};
    std::ostringstream out;
    for (const auto& r : rows) io::write_csv_row(out, r);
    CHECK(parse(out.str()) == rows);
    CHECK(out.str().substr(0, 7) == "plain,\"");
}

TEST_CASE("CSV reader handles line endings and blank lines") {
    CHECK(parse("a,b\r\n\r\n1,2\n\n3,4") == std::vector<io::Row>{{"a", "b"}, {"1", "2"}, {"3", "4"}});
    CHECK(parse("x,,\n") == std::vector<io::Row>{{"x", "", ""}});
    CHECK(parse("\"\"\n") == std::vector<io::Row>{{""}});
    CHECK(parse("").empty());
}

TEST_CASE("malformed quoting is rejected") {
    CHECK_THROWS_AS(parse("ab\"c\n"), InputError);
    CHECK_THROWS_AS(parse("\"open,field\n"), InputError);
}

TEST_CASE("numbers print in shortest round-trip form") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1e6, 1e6);
    for (int i = 0; i < 1000; ++i) {
        const double x = u(rng) * std::pow(10.0, i % 40 - 20);
        CHECK(io::parse_double(io::format_double(x), "x") == x);
    }
    CHECK(io::format_double(0.5) == "0.5");
    CHECK(io::format_double(3.0) == "3");
    CHECK(io::format_double(std::numeric_limits<double>::quiet_NaN()) == "NaN");
    CHECK(io::format_double(std::numeric_limits<double>::infinity()) == "Inf");
    CHECK(io::format_double(-std::numeric_limits<double>::infinity()) == "-Inf");
    CHECK(std::isnan(io::parse_double("NaN", "x")));
    CHECK(io::parse_double(" 2.5 ", "x") == 2.5);
}

TEST_CASE("numeric parsing is strict") {
    CHECK_THROWS_AS(io::parse_double("", "x"), InputError);
    CHECK_THROWS_AS(io::parse_double("1.5abc", "x"), InputError);
    CHECK_THROWS_AS(io::parse_double("one", "x"), InputError);
    CHECK_THROWS_AS(io::parse_integer("1.5", "n"), InputError);
    CHECK(io::parse_integer("-42", "n") == -42);
    try {
        io::parse_double("oops", "grid point");
        FAIL("expected InputError");
    } catch (const InputError& e) {
        CHECK(std::string(e.what()).find("grid point") != std::string::npos);
    }
}

TEST_CASE("dense files give one variable each") {
    TempDir dir;
    const auto a = dir.write("a.csv", "id,0,0.5,1\ns1,1,2,3\ns2,4,5,6\n");
    const auto b = dir.write("b.csv", "id,0,1\ns1,7,8\ns2,9,10\n");
    const CurveSamples s = io::read_dense({{"x", a}, {"y", b}});
    CHECK(s.n_objects() == 2);
    CHECK(s.n_variables() == 2);
    CHECK(s.object_ids == std::vector<std::string>{"s1", "s2"});
    CHECK(s.variables[0].name == "x");
    CHECK(s.variables[0].grid == std::vector<double>{0, 0.5, 1});
    CHECK(s.variables[0].values(1, 2) == 6.0);
    CHECK(s.variables[1].values(0, 1) == 8.0);

    const auto swapped = dir.write("c.csv", "id,0,1\ns2,7,8\ns1,9,10\n");
    CHECK_THROWS_AS(io::read_dense({{"x", a}, {"y", swapped}}), InputError);
    const auto ragged = dir.write("d.csv", "id,0,1\ns1,7\n");
    CHECK_THROWS_AS(io::read_dense({{"x", ragged}}), InputError);
    const auto unsorted = dir.write("e.csv", "id,1,0\ns1,7,8\n");
    CHECK_THROWS_AS(io::read_dense({{"x", unsorted}}), InputError);
    const auto nonfinite = dir.write("f.csv", "id,0,1\ns1,7,Inf\n");
    CHECK_THROWS_AS(io::read_dense({{"x", nonfinite}}), InputError);
    CHECK_THROWS_AS(io::read_dense({{"x", dir.path / "missing.csv"}}), InputError);
    CHECK_THROWS_AS(io::read_dense({}), InputError);
}

TEST_CASE("long files are sorted by t and grouped by first appearance") {
    TempDir dir;
    const auto f = dir.write("long.csv",
                             "value,t,variable,object_id\n"
                             "3,1,x,b\n1,0,x,b\n30,1,x,a\n10,0,x,a\n"
                             "5,2,y,a\n6,2,y,b\n");
    const CurveSamples s = io::read_long(f);
    CHECK(s.object_ids == std::vector<std::string>{"b", "a"});
    REQUIRE(s.n_variables() == 2);
    CHECK(s.variables[0].name == "x");
    CHECK(s.variables[0].grid == std::vector<double>{0, 1});
    CHECK(s.variables[0].values(0, 0) == 1.0);
    CHECK(s.variables[0].values(0, 1) == 3.0);
    CHECK(s.variables[0].values(1, 1) == 30.0);
    CHECK(s.variables[1].values(1, 0) == 5.0);

    const auto mismatch = dir.write("bad.csv", "object_id,variable,t,value\na,x,0,1\na,x,1,2\nb,x,0,3\nb,x,2,4\n");
    CHECK_THROWS_AS(io::read_long(mismatch), InputError);
    const auto missing = dir.write("nocol.csv", "object_id,variable,t\na,x,0\n");
    CHECK_THROWS_AS(io::read_long(missing), InputError);
}

TEST_CASE("sidecar and grid domain") {
    TempDir dir;
    const auto good = dir.write("s.json", R"({"domain": [0, 2], "variable_names": ["u", "v"]})");
    const io::Sidecar s = io::read_sidecar(good);
    CHECK(s.has_domain);
    CHECK(s.domain.lo == 0.0);
    CHECK(s.domain.hi == 2.0);
    CHECK(s.variable_names == std::vector<std::string>{"u", "v"});
    const io::Sidecar empty = io::read_sidecar(dir.write("e.json", "{}"));
    CHECK_FALSE(empty.has_domain);
    CHECK_THROWS_AS(io::read_sidecar(dir.write("b.json", R"({"domain": [2, 1]})")), InputError);
    CHECK_THROWS_AS(io::read_sidecar(dir.write("c.json", "{not json")), InputError);

    CurveSamples samples;
    samples.variables.push_back({"x", {0.5, 1.0, 3.0}, Matrix::Zero(1, 3)});
    samples.variables.push_back({"y", {0.0, 2.0}, Matrix::Zero(1, 2)});
    const Domain d = io::grid_domain(samples);
    CHECK(d.lo == 0.0);
    CHECK(d.hi == 3.0);
}

TEST_CASE("labels map to integers by first appearance") {
    TempDir dir;
    const auto f = dir.write("labels.csv", "label,object_id\nbeta,b\nalpha,a\nbeta,c\n");
    CHECK(io::read_labels(f, {"a", "b", "c"}) == std::vector<int>{1, 0, 0});
    CHECK_THROWS_AS(io::read_labels(f, {"a", "z"}), InputError);
    CHECK_THROWS_AS(io::read_labels(dir.write("bad.csv", "id,label\na,1\n"), {"a"}), InputError);
}
