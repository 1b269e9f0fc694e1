#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "msjlab/cli.hpp"
#include "msjlab/report.hpp"

using namespace msjlab;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result invoke(std::vector<std::string> args) {
    args.insert(args.begin(), "msjlab");
    std::ostringstream out, err;
    const int code = cli::main_entry(args, out, err);
    return {code, out.str(), err.str()};
}

std::string value_of(const std::string& csv, const std::string& metric) {
    std::istringstream in(csv);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() > 9 && cells[8] == metric) return cells[9];
    }
    return {};
}

std::string temp_path(const std::string& name) { return "/tmp/msjlab_test_" + name; }

std::string slurp(const std::string& path) {
    std::ifstream f(path);
    std::stringstream s;
    s << f.rdbuf();
    return s.str();
}

}  // namespace

TEST_CASE("exact subcommand") {
    const auto r = invoke({"exact", "--n", "2", "--pn", "0.5", "--mu1", "1", "--mun", "1"});
    REQUIRE(r.code == 0);
    CHECK(std::stod(value_of(r.out, "mu")) == doctest::Approx(8.0 / 7.0).epsilon(1e-15));
    CHECK(std::stod(value_of(r.out, "mean_delta_yd")) == doctest::Approx(4.0 / 49.0).epsilon(1e-14));
    CHECK(r.out.find(report::kCsvHeader) != std::string::npos);
    CHECK(r.out.find("# config: ") == r.out.find('\n') + 1);
}

TEST_CASE("output is deterministic") {
    const std::vector<std::string> args = {"compare", "--alpha", "2", "--n-grid", "1e2:1e4:log"};
    CHECK(invoke(args).out == invoke(args).out);
    const auto sim = std::vector<std::string>{"simulate", "--n", "2", "--pn", "0.5", "--rho", "0.5", "--jobs", "20000"};
    const auto a = invoke(sim);
    REQUIRE(a.code == 0);
    CHECK(a.out == invoke(sim).out);
    CHECK(a.out.find("\"seed\":1") != std::string::npos);
}

TEST_CASE("malformed config exits 1 with the byte offset") {
    const auto path = temp_path("bad.json");
    {
        std::ofstream f(path);
        f << "{\"n\": 4, \"classes\": [";
    }
    const auto r = invoke({"exact", "--config", path});
    CHECK(r.code == 1);
    CHECK(r.err.find("byte") != std::string::npos);
    std::remove(path.c_str());
}

TEST_CASE("config files are overridden by flags") {
    const auto path = temp_path("cfg.json");
    {
        std::ofstream f(path);
        f << R"({"n": 2, "classes": [{"need": 1, "prob": 0.5, "rate": 1}, {"need": 2, "prob": 0.5, "rate": 1}]})";
    }
    const auto base = invoke({"exact", "--config", path});
    REQUIRE(base.code == 0);
    CHECK(std::stod(value_of(base.out, "mu")) == doctest::Approx(8.0 / 7.0));
    const auto over = invoke({"exact", "--config", path, "--pn", "1"});
    REQUIRE(over.code == 0);
    CHECK(std::stod(value_of(over.out, "mu")) == doctest::Approx(1.0));
    std::remove(path.c_str());
}

TEST_CASE("error exit codes") {
    CHECK(invoke({"exact", "--n", "2", "--pn", "1.5"}).code == 1);
    CHECK(invoke({"exact", "--n", "two", "--pn", "0.5"}).code == 1);
    CHECK(invoke({"bogus"}).code == 1);
    CHECK(invoke({"exact", "--lambda", "1"}).code == 1);
    CHECK(invoke({"saturated-solve", "--n", "40", "--pn", "0.5", "--cap", "5"}).code == 2);
    CHECK(invoke({"exact", "--n", "2", "--pn", "0.5", "--format", "svg"}).code == 1);
}

TEST_CASE("compare writes CSV and SVG") {
    const auto csv = temp_path("compare.csv");
    const auto r = invoke({"compare", "--alpha", "2", "--n-grid", "1e2:1e5:log", "--out", csv, "--format", "both"});
    REQUIRE(r.code == 0);
    const auto text = slurp(csv);
    CHECK(text.find("exact_mu") != std::string::npos);
    const auto svg = slurp(temp_path("compare.svg"));
    CHECK(svg.find("<svg") != std::string::npos);
    CHECK(svg.find("polyline") != std::string::npos);
    CHECK(svg.find("href") == std::string::npos);
    std::remove(csv.c_str());
    std::remove(temp_path("compare.svg").c_str());
}

TEST_CASE("other subcommands run") {
    CHECK(invoke({"asymptotic", "--n", "1e4", "--alpha", "0.5"}).code == 0);
    const auto sat = invoke({"saturated-solve", "--setting", "three_class", "--n", "10", "--alpha", "0.7"});
    REQUIRE(sat.code == 0);
    CHECK(std::stod(value_of(sat.out, "mu")) > 1.0);
    const auto sw = invoke({"sweep", "--setting", "original", "--n", "10", "--alpha-grid", "0.5,1", "--fractions",
                            "0.5", "--jobs", "5000", "--threads", "1"});
    REQUIRE(sw.code == 0);
    CHECK(sw.out.find("mean_q") != std::string::npos);
}

TEST_CASE("grid syntax") {
    CHECK(cli::parse_n_grid("1e2:1e5:log") == std::vector<long long>{100, 1000, 10000, 100000});
    CHECK(cli::parse_n_grid("10,20") == std::vector<long long>{10, 20});
    const auto g = cli::parse_real_grid("0:1:0.25");
    CHECK(g == std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0});
    CHECK(cli::parse_real_grid("0:3:0.1").size() == 31);
    CHECK(cli::parse_real_grid("0:3:0.1")[3] == 0.3);
    CHECK_THROWS(cli::parse_n_grid("1:10:lin"));
}

TEST_CASE("CSV formatting") {
    CHECK(report::format_double(0.1) == "0.10000000000000001");
    CHECK(report::format_double(2.0) == "2");
    std::ostringstream s;
    report::CsvRow row;
    row.setting = "canonical";
    row.n = 2;
    row.metric = "mu";
    row.value = 1.5;
    row.method = "exact1n";
    report::write_csv(s, {"note"}, {row});
    CHECK(s.str() == std::string("# note\n") + report::kCsvHeader + "\ncanonical,2,,,,,,,mu,1.5,,,exact1n,\n");
}
