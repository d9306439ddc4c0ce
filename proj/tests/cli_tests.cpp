#include <doctest.h>

#include <json.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

// Drives the installed binary end to end through a shell; the path is baked
// in by the build so the tests always exercise the freshly built executable.
#ifndef LATTLIGHT_CLI_PATH
#error "LATTLIGHT_CLI_PATH must point at the lattlight executable"
#endif

namespace {

namespace fs = std::filesystem;

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("lattlight-cli-" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

int run(const std::string& args, const std::string& stdout_file = "",
        const std::string& stderr_file = "") {
  std::string cmd = std::string(LATTLIGHT_CLI_PATH) + " " + args;
  if (!stdout_file.empty()) {
    cmd += " > " + stdout_file;
  }
  if (!stderr_file.empty()) {
    cmd += " 2> " + stderr_file;
  }
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  return WEXITSTATUS(status);
}

std::string slurp(const std::string& file) {
  std::ifstream in(file, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

size_t line_count(const std::string& text) {
  size_t lines = 0;
  for (char c : text) {
    if (c == '\n') {
      ++lines;
    }
  }
  return lines;
}

// Field at a column index of a CSV line.
double csv_field(const std::string& line, size_t index) {
  std::istringstream stream(line);
  std::string field;
  for (size_t i = 0; i <= index; ++i) {
    REQUIRE(std::getline(stream, field, ','));
  }
  return std::stod(field);
}

std::string line_at(const std::string& text, size_t index) {
  std::istringstream stream(text);
  std::string line;
  for (size_t i = 0; i <= index; ++i) {
    REQUIRE(std::getline(stream, line));
  }
  return line;
}

}  // namespace

TEST_CASE("scan: writes the requested grid and is byte-stable") {
  TempDir tmp;
  const std::string out1 = tmp.file("a.csv");
  const std::string out2 = tmp.file("b.csv");
  CHECK(run("scan --points 21 --out " + out1) == 0);
  CHECK(run("scan --points 21 --out " + out2) == 0);
  const std::string a = slurp(out1);
  CHECK(line_count(a) == 22);  // header + 21 rows
  CHECK(a == slurp(out2));
  CHECK(line_at(a, 0) ==
        "theta1,classical_intensity,DstarD,R,photon_number,photon_variance,"
        "quad_variance");

  // Same bytes regardless of the worker pool size.
  const std::string w1 = tmp.file("w1.csv");
  const std::string w4 = tmp.file("w4.csv");
  CHECK(run("scan --points 61 --workers 1 --out " + w1) == 0);
  CHECK(run("scan --points 61 --workers 4 --out " + w4) == 0);
  CHECK(slurp(w1) == slurp(w4));
}

TEST_CASE("scan: stdout and JSON output") {
  TempDir tmp;
  const std::string out = tmp.file("scan.json");
  CHECK(run("scan --points 7 --format json", out) == 0);
  const auto parsed = nlohmann::json::parse(slurp(out));
  REQUIRE(parsed.is_array());
  CHECK(parsed.size() == 7);
  CHECK(parsed[0].contains("theta1"));
  CHECK(parsed[0].contains("quad_variance"));
}

TEST_CASE("scan: flags validate and map to exit code 1") {
  TempDir tmp;
  const std::string err = tmp.file("err.txt");
  CHECK(run("scan --points 1", "/dev/null", err) == 1);
  CHECK(slurp(err).find("points") != std::string::npos);
  CHECK(run("scan --bogus-flag 3", "/dev/null", err) == 1);
  CHECK(run("scan --state sf --N 8 --M 20 --K 30", "/dev/null", err) == 1);
  CHECK(slurp(err).find("sites") != std::string::npos);
  // Mott insulator filling must be a whole number per site.
  CHECK(run("scan --state mi --N 3 --M 2", "/dev/null", err) == 1);
}

TEST_CASE("scan: unwritable output maps to exit code 3") {
  CHECK(run("scan --points 5 --out /nonexistent-dir-zzz/out.csv", "/dev/null",
            "/dev/null") == 3);
}

TEST_CASE("scan: LATTLIGHT_OUT_DIR anchors relative outputs") {
  TempDir tmp;
  const int code = std::system(("cd / && LATTLIGHT_OUT_DIR=" +
                                tmp.path.string() + " " + LATTLIGHT_CLI_PATH +
                                " scan --points 5 --out rel.csv >/dev/null")
                                   .c_str());
  CHECK(WEXITSTATUS(code) == 0);
  CHECK(fs::exists(tmp.path / "rel.csv"));
  CHECK(line_count(slurp((tmp.path / "rel.csv").string())) == 6);
}

TEST_CASE("scan: config file supplies defaults, flags override") {
  TempDir tmp;
  const std::string cfg = tmp.file("cfg.json");
  {
    std::ofstream out(cfg);
    out << R"({"points": 7, "state": "mi", "N": 2, "M": 2, "K": 2})";
  }
  const std::string out1 = tmp.file("c1.csv");
  CHECK(run("scan --config " + cfg + " --out " + out1) == 0);
  CHECK(line_count(slurp(out1)) == 8);

  const std::string out2 = tmp.file("c2.csv");
  CHECK(run("scan --config " + cfg + " --points 5 --out " + out2) == 0);
  CHECK(line_count(slurp(out2)) == 6);

  const std::string bad = tmp.file("bad.json");
  {
    std::ofstream out(bad);
    out << R"({"points": 7, "wavelength": 2.0})";
  }
  CHECK(run("scan --config " + bad, "/dev/null", "/dev/null") == 1);
}

TEST_CASE("check: exact agreement on a small superfluid") {
  TempDir tmp;
  const std::string out = tmp.file("check.txt");
  CHECK(run("check --state sf --N 4 --M 4 --K 4 --points 3", out) == 0);
  const std::string text = slurp(out);
  CHECK(text.find("PASS") != std::string::npos);
  CHECK(text.find("E_absD4") != std::string::npos);
}

TEST_CASE("check: detail rows can be captured") {
  TempDir tmp;
  const std::string detail = tmp.file("detail.csv");
  CHECK(run("check --state coherent --N 2 --M 2 --K 2 --points 3 --out " +
                detail,
            "/dev/null") == 0);
  const std::string text = slurp(detail);
  CHECK(line_at(text, 0).find("oracle_DstarD") != std::string::npos);
  CHECK(line_count(text) == 4);
}

TEST_CASE("check: enumeration over the cap suggests Monte Carlo, exit 1") {
  TempDir tmp;
  const std::string err = tmp.file("err.txt");
  CHECK(run("check --state sf --N 30 --M 30 --K 30 --points 2", "/dev/null",
            err) == 1);
  CHECK(slurp(err).find("Monte Carlo") != std::string::npos);
}

TEST_CASE("check: Monte Carlo fallback passes within its error bars") {
  TempDir tmp;
  const std::string out = tmp.file("mc.txt");
  CHECK(run("check --state sf --N 30 --M 30 --K 30 --points 3 --mc 40000 "
            "--seed 3",
            out) == 0);
  CHECK(slurp(out).find("PASS") != std::string::npos);
}

TEST_CASE("check: a one-sample estimate genuinely fails the 4-sigma gate") {
  TempDir tmp;
  const std::string out = tmp.file("fail.txt");
  // Five grid points include theta = +-pi/2, where |D|^2 takes the values
  // {0, 4, 16} across configurations while its mean is 1: a single draw can
  // never land on the mean, so the gate must report a failure.
  CHECK(run("check --state sf --N 4 --M 4 --K 4 --points 5 --mc 1", out) == 2);
  CHECK(slurp(out).find("FAIL") != std::string::npos);
}

TEST_CASE("fig2: per-window columns at the classical maxima") {
  TempDir tmp;
  const std::string out = tmp.file("fig2.csv");
  CHECK(run("fig2 --points 9 --out " + out) == 0);
  const std::string text = slurp(out);
  CHECK(line_at(text, 0).find("R_per_nk") != std::string::npos);
  CHECK(line_count(text) == 10);
  // theta1 = 0 sits at row 5 (1 header + grid index 4): suppressed noise.
  const std::string center = line_at(text, 5);
  CHECK(csv_field(center, 0) == 0.0);
  const size_t r_per_nk_col = 8;
  CHECK(std::abs(csv_field(center, r_per_nk_col)) < 1e-12);
}

TEST_CASE("fig2c: half illumination leaves half the window noise") {
  TempDir tmp;
  const std::string out = tmp.file("fig2c.csv");
  CHECK(run("fig2c --points 9 --out " + out) == 0);
  const std::string center = line_at(slurp(out), 5);
  CHECK(std::abs(csv_field(center, 8) - 0.5) < 1e-12);
}

TEST_CASE("fig3: standing waves, and a quiet number state") {
  TempDir tmp;
  const std::string out = tmp.file("fig3.csv");
  CHECK(run("fig3 --points 13 --state mi --out " + out) == 0);
  const std::string text = slurp(out);
  CHECK(line_count(text) == 14);
  for (size_t j = 1; j <= 13; ++j) {
    CHECK(csv_field(line_at(text, j), 3) == 0.0);  // R column
  }
}

TEST_CASE("table1: prints the occupation statistics row") {
  TempDir tmp;
  const std::string out = tmp.file("table.csv");
  CHECK(run("table1 --state sf --N 30 --M 30 --K 30", out) == 0);
  const std::string text = slurp(out);
  const std::string header = line_at(text, 0);
  CHECK(header.find("n2") != std::string::npos);
  CHECK(header.find("var_NK") != std::string::npos);
  const std::string row = line_at(text, 1);
  // state,N,M,K,mean_filling,n2,var_n,NK2,var_NK,nanb,cov
  CHECK(csv_field(row, 5) == doctest::Approx(59.0 / 30.0).epsilon(1e-14));
  CHECK(csv_field(row, 8) == 0.0);
  CHECK(csv_field(row, 10) == doctest::Approx(-1.0 / 30.0).epsilon(1e-14));
}

TEST_CASE("subcommand is required; help exits cleanly") {
  CHECK(run("", "/dev/null", "/dev/null") == 1);
  CHECK(run("--help", "/dev/null", "/dev/null") == 0);
  CHECK(run("scan --help", "/dev/null", "/dev/null") == 0);
}
