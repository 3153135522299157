#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "ats/cli.hpp"
#include "ats/format.hpp"
#include "json.hpp"

using namespace ats;
namespace fs = std::filesystem;

namespace {

const std::string kFixtures = ATS_FIXTURES;

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "ats");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("ats_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

// Body of a stamped output file: everything after the first line.
std::string body(const std::string& text) { return text.substr(text.find('\n') + 1); }

std::vector<std::vector<double>> numeric_rows(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("strike", 0) == 0) continue;
    std::vector<double> row;
    for (auto f : split_csv_line(line)) row.push_back(parse_number(f).value_or(NAN));
    rows.push_back(row);
  }
  return rows;
}

const std::vector<std::string> kGoldenPrice = {
    "price", "--alpha", "0.5", "--sigma", "0.2", "--k", "0.5", "--eta", "0.5", "--expiry", "0.5",
    "--forward", "100", "--discount", "0.99", "--strikes", "80,85,90,95,100,105,110,115,120"};

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("forwards: fixture chain reproduces the hand-computed report") {
  const auto dir = scratch("forwards");
  const auto r = run({"forwards", "--chain", kFixtures + "/chain.csv", "--curve", kFixtures + "/curve.csv",
                      "--spot", "1805", "--out", dir.string()});
  REQUIRE(r.code == 0);
  const auto text = slurp(dir / "forwards.csv");
  CHECK(text.rfind("# ats 1.0.0 config=", 0) == 0);
  CHECK(body(text) == slurp(kFixtures + "/forwards_expected.csv"));
}

TEST_CASE("exit codes") {
  const auto dir = scratch("codes");
  const auto empty = run({"forwards", "--chain", kFixtures + "/empty_chain.csv", "--curve",
                          kFixtures + "/curve.csv", "--spot", "100", "--out", dir.string()});
  CHECK(empty.code == 2);
  CHECK(empty.err.find("no quotes") != std::string::npos);

  const auto missing = run({"forwards", "--chain", kFixtures + "/chain.csv", "--curve",
                            kFixtures + "/no_such_curve.csv", "--spot", "100", "--out", dir.string()});
  CHECK(missing.code == 3);

  const auto alpha = run({"calibrate", "--chain", kFixtures + "/chain.csv", "--curve",
                          kFixtures + "/curve.csv", "--spot", "1805", "--alpha", "1.2", "--out",
                          dir.string()});
  CHECK(alpha.code == 4);

  CHECK(run({"price", "--strikes", "100", "--family", "GARCH"}).code == 4);
  CHECK(run({"price", "--strikes", "100", "--bogus-flag", "1"}).code == 4);
  CHECK(run({"forwards", "--spot", "100"}).code == 4);
  CHECK(run({"forwards", "--config", kFixtures + "/no_such.ini"}).code == 3);
}

TEST_CASE("price: golden table") {
  const auto dir = scratch("price");
  auto args = kGoldenPrice;
  args.insert(args.end(), {"--out", dir.string()});
  REQUIRE(run(args).code == 0);
  const auto got = numeric_rows(slurp(dir / "prices.csv"));
  const auto want = numeric_rows(slurp(kFixtures + "/price_golden.csv"));
  REQUIRE(got.size() == want.size());
  for (std::size_t i = 0; i < got.size(); ++i) {
    REQUIRE(got[i].size() == 5);
    for (std::size_t j = 0; j < 5; ++j) {
      CAPTURE(i);
      CAPTURE(j);
      CHECK(std::abs(got[i][j] - want[i][j]) <= 1e-8 * std::max(1.0, std::abs(want[i][j])));
    }
    // C - P = B (F - K)
    CHECK(got[i][2] - got[i][3] == doctest::Approx(0.99 * (100.0 - got[i][0])).epsilon(1e-12));
  }
}

TEST_CASE("price: symmetric smile at eta = 0") {
  const auto dir = scratch("price_sym");
  std::string strikes;
  for (double x = -0.3; x <= 0.3001; x += 0.05) {
    strikes += (strikes.empty() ? "" : ",") + format_number(100.0 * std::exp(x));
  }
  REQUIRE(run({"price", "--alpha", "0", "--sigma", "0.25", "--k", "0.3", "--eta", "0", "--expiry", "0.5",
               "--strikes", strikes, "--out", dir.string()})
              .code == 0);
  const auto rows = numeric_rows(slurp(dir / "prices.csv"));
  REQUIRE(rows.size() == 13);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(std::abs(rows[i][4] - rows[rows.size() - 1 - i][4]) < 1e-4);
  }
}

TEST_CASE("outputs are identical across reruns") {
  const auto a = scratch("rerun_a");
  const auto b = scratch("rerun_b");
  for (const auto& dir : {a, b}) {
    REQUIRE(run({"forwards", "--chain", kFixtures + "/chain.csv", "--curve", kFixtures + "/curve.csv",
                 "--spot", "1805", "--out", dir.string()})
                .code == 0);
    auto args = kGoldenPrice;
    args.insert(args.end(), {"--out", dir.string()});
    REQUIRE(run(args).code == 0);
  }
  CHECK(slurp(a / "forwards.csv") == slurp(b / "forwards.csv"));
  CHECK(slurp(a / "prices.csv") == slurp(b / "prices.csv"));
}

TEST_CASE("config file: flags take precedence over the file") {
  const auto dir = scratch("config");
  {
    std::ofstream cfg(dir / "run.ini");
    cfg << "# price settings\nsigma = 0.3\nk = 0.5\neta = 0.5\nexpiry = 0.5\nforward = 100\n"
           "discount = 0.99\nstrikes = 100\n";
  }
  const auto from_file = dir / "file";
  const auto from_flag = dir / "flag";
  REQUIRE(run({"price", "--config", (dir / "run.ini").string(), "--out", from_file.string()}).code == 0);
  REQUIRE(run({"price", "--config", (dir / "run.ini").string(), "--sigma", "0.2", "--out",
               from_flag.string()})
              .code == 0);
  const auto file_row = numeric_rows(slurp(from_file / "prices.csv")).at(0);
  const auto flag_row = numeric_rows(slurp(from_flag / "prices.csv")).at(0);
  // the flag run matches the golden ATM row (sigma 0.2); the file-only run is pricier
  CHECK(flag_row[2] == doctest::Approx(5.0942872409509549).epsilon(1e-9));
  CHECK(file_row[2] > flag_row[2] + 1.0);
  CHECK(body(slurp(from_file / "prices.csv")) != body(slurp(from_flag / "prices.csv")));
}

TEST_CASE("synth, calibrate and scaling pipeline") {
  const auto dir = scratch("pipeline");
  const auto data = dir / "data";
  REQUIRE(run({"synth", "--expiries", "0.1,0.5,1", "--out", data.string()}).code == 0);
  const std::vector<std::string> market = {"--chain", (data / "chain.csv").string(), "--curve",
                                           (data / "curve.csv").string(), "--spot", "100"};

  auto with = [&](std::vector<std::string> head, const fs::path& out) {
    head.insert(head.end(), market.begin(), market.end());
    head.insert(head.end(), {"--out", out.string()});
    return run(head);
  };

  REQUIRE(with({"calibrate", "--family", "ATS"}, dir / "ats").code == 0);
  const auto ats = nlohmann::json::parse(slurp(dir / "ats" / "calibration.json"));
  const auto& slices = ats["slices"];
  REQUIRE(slices.size() == 3);
  for (const auto& s : slices) {
    const double T = s["expiry"].get<double>();
    CHECK(std::abs(s["sigma"].get<double>() / 0.2 - 1.0) < 0.01);
    CHECK(std::abs(s["k"].get<double>() / T - 1.0) < 0.01);
    CHECK(std::abs(s["eta"].get<double>() * std::sqrt(T) - 1.0) < 0.01);
  }

  REQUIRE(with({"calibrate", "--family", "LTS"}, dir / "lts").code == 0);
  const auto lts = nlohmann::json::parse(slurp(dir / "lts" / "calibration.json"));
  CHECK(lts["metrics"]["mse"].get<double>() > ats["metrics"]["mse"].get<double>());

  const auto cal = (dir / "ats" / "calibration.json").string();
  REQUIRE(run({"scaling", "--calibration", cal, "--out", (dir / "s1").string()}).code == 0);
  REQUIRE(run({"scaling", "--calibration", cal, "--out", (dir / "s2").string()}).code == 0);
  const auto sc = nlohmann::json::parse(slurp(dir / "s1" / "scaling.json"));
  CHECK(sc["scaling"]["tests"]["p_beta_eq_1"].get<double>() > 0.05);
  CHECK(sc["scaling"]["tests"]["p_delta_eq_minus_half"].get<double>() > 0.05);
  for (const char* f : {"scaling.json", "scaling_points.csv", "scaling_lines.csv", "moments.csv"}) {
    CAPTURE(f);
    CHECK(fs::exists(dir / "s1" / f));
    CHECK(slurp(dir / "s1" / f) == slurp(dir / "s2" / f));
  }

  // two slices are not enough for a regression
  auto two = ats;
  two["slices"].erase(two["slices"].size() - 1);
  {
    std::ofstream f(dir / "two.json");
    f << two.dump();
  }
  CHECK(run({"scaling", "--calibration", (dir / "two.json").string(), "--out", (dir / "s3").string()}).code == 5);
}

TEST_CASE("version and help") {
  const auto v = run({"--version"});
  CHECK(v.code == 0);
  CHECK(v.out.find("1.0.0") != std::string::npos);
  CHECK(run({"--help"}).code == 0);
}

}  // TEST_SUITE
