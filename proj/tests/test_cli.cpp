#include <doctest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>

#include <json.hpp>

namespace {

struct Result {
  int status;
  std::string out;
};

Result run(const std::string& args) {
  const std::string cmd = std::string(PROBITLR_CLI) + " " + args + " 2>/dev/null";
  std::unique_ptr<FILE, int (*)(FILE*)> pipe(popen(cmd.c_str(), "r"), pclose);
  std::string out;
  std::array<char, 4096> buf{};
  size_t got;
  while ((got = fread(buf.data(), 1, buf.size(), pipe.get())) > 0) out.append(buf.data(), got);
  const int status = pclose(pipe.release());
  return {WEXITSTATUS(status), out};
}

std::filesystem::path tmp(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("probitlr_cli_" + name);
}

}  // namespace

TEST_CASE("calibrate") {
  const Result r = run("calibrate --sigma 0.5");
  REQUIRE(r.status == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["tau_star"].get<double>() == doctest::Approx(3.528090538354056));
  const Result back = run("calibrate --tau-star 3.528090538354056");
  CHECK(nlohmann::json::parse(back.out)["sigma"].get<double>() == doctest::Approx(0.5).epsilon(1e-8));
  CHECK(run("calibrate").status != 0);
}

TEST_CASE("sample then fit") {
  const auto data = tmp("data.csv");
  REQUIRE(run("sample --n 300 --p 3 --sigma 0.5 --seed 4 --out " + data.string()).status == 0);
  const Result r = run("fit --data " + data.string() + " --M 100");
  REQUIRE(r.status == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["converged"].get<bool>());
  CHECK(j["gamma_hat"].size() == 3);
  CHECK(j["tau_hat"].get<double>() > 0.0);
  CHECK_FALSE(j["boundary_active"].get<bool>());
  std::filesystem::remove(data);
}

TEST_CASE("check-bounds with a grid file") {
  const auto grid = tmp("grid.json");
  std::ofstream(grid) << R"([{"lemma_id": "moment_zero", "params": {"tau": 3}},
                             {"lemma_id": "f_dotdot", "params": {"tau_bar": 2}}])";
  const Result r = run("check-bounds --grid " + grid.string());
  CHECK(r.status == 0);
  CHECK(r.out.rfind("lemma_id,param_json,lower,value,upper,method,holds\n", 0) == 0);
  CHECK(r.out.find("moment_zero,\"{\"\"tau\"\":3.0}\"") != std::string::npos);
  CHECK(r.out.find(",quadrature,true\n") != std::string::npos);
  CHECK(r.out.find(",quadrature,false\n") != std::string::npos);  // skipped point
  std::ofstream(grid) << R"([{"lemma_id": "unknown", "params": {}}])";
  CHECK(run("check-bounds --grid " + grid.string()).status == 2);
  std::filesystem::remove(grid);
}

TEST_CASE("separability") {
  const Result r = run("separability --n 20 --p 10 --reps 500 --seed 1 --null");
  REQUIRE(r.status == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["cover_probability"].get<double>() == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(j["ci95"][0].get<double>() <= j["frequency"].get<double>());
  const Result s = run("separability --n 200 --p 2 --reps 20 --seed 1 --sigma 0.5");
  CHECK(nlohmann::json::parse(s.out)["separable"].get<int>() == 0);
  CHECK(run("separability --n 20 --p 3").status != 0);
}

TEST_CASE("simulate then rates") {
  const auto cfg = tmp("cfg.json"), out = tmp("report.csv");
  std::ofstream(cfg) << R"({"cells": [{"n": 200, "p": 2, "sigma": 0.5}, {"n": 400, "p": 2, "sigma": 0.5},
                                      {"n": 800, "p": 2, "sigma": 0.5}, {"n": 1600, "p": 2, "sigma": 0.5}],
                            "replicates": 3, "master_seed": 5})";
  REQUIRE(run("simulate --config " + cfg.string() + " --out " + out.string()).status == 0);
  const Result r = run("rates --report " + out.string() + " --metric beta_err --p 2 --sigma 0.5");
  REQUIRE(r.status == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["n"].size() == 4);
  CHECK(j["slope"].get<double>() < 0.0);
  std::filesystem::remove(cfg);
  std::filesystem::remove(out);
}
