#include <doctest.h>

#include "sib/commands.hpp"
#include "sib/config.hpp"
#include "sib/error.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

using namespace sib;
using namespace sib::cli;

namespace {

const std::string kConfigDir = SIB_CONFIG_DIR;

std::string config(const std::string& name) { return kConfigDir + "/" + name; }

std::filesystem::path temp_file(const std::string& name, const std::string& content) {
  const auto path = std::filesystem::temp_directory_path() / ("sib_test_" + name);
  std::ofstream(path) << content;
  return path;
}

// Runs the installed executable; returns its exit status and captured stdout.
int run(const std::string& args, std::string* output = nullptr) {
  const auto out_path = std::filesystem::temp_directory_path() / "sib_test_cli_out.txt";
  const std::string cmd = std::string(SIB_CLI_PATH) + " " + args + " > " + out_path.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  if (output) {
    std::ifstream in(out_path);
    std::stringstream ss;
    ss << in.rdbuf();
    *output = ss.str();
  }
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::vector<std::vector<double>> parse_csv(const std::string& text, std::string* header) {
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  if (header) *header = line;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    std::vector<double> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

TEST_CASE("config parsing") {
  std::istringstream in(
      "# comment\n"
      "model.m = 2\n"
      "model.T = 2\n"
      "model.sigma_x = 2, 0.5; 0.5, 1   # trailing comment\n"
      "model.sigma_0 = 1\n"
      "model.stages[1].sigma_t = 3\n"
      "model.stages[2].sigma_t = 2\n"
      "model.stages[2].sigma_0t = 0.1, 0; 0, 0.2\n"
      "model.gamma = 0.25\n"
      "chain.omegas[1] = 0.1\n"
      "chain.omegas[2] = 0.2\n"
      "run.samples = 20000\n");
  const auto cfg = parse_config(in);
  CHECK(cfg.spec.sigma_x(0, 1) == 0.5);
  CHECK(cfg.spec.sigma_0 == Matrix::Identity(2, 2));
  CHECK(cfg.spec.stages[0].sigma_0t(0, 0) == doctest::Approx(0.75));
  CHECK(cfg.spec.stages[1].sigma_0t(1, 1) == doctest::Approx(0.2));
  REQUIRE(cfg.chain);
  CHECK(cfg.chain->at(2)(1, 1) == 0.2);
  CHECK(cfg.run_positive("samples", 1) == 20000);
  CHECK(cfg.run_positive("missing", 7) == 7);
}

TEST_CASE("config errors name the line and key") {
  auto parse_error = [](const std::string& text) {
    std::istringstream in(text);
    try {
      parse_config(in);
    } catch (const Error& e) {
      CHECK(e.code() == Errc::parse);
      return std::string(e.what());
    }
    FAIL("expected ParseError");
    return std::string();
  };
  CHECK(parse_error("").find("empty") != std::string::npos);
  CHECK(parse_error("# only comments\n\n").find("empty") != std::string::npos);
  CHECK(parse_error("model.T = 1\nmodel.sigma_x = 3\nmodel.sigma_0 = abc\nmodel.sigma_si = 1\n").find("line 3") !=
        std::string::npos);
  CHECK(parse_error("model.T = 1\nmodel.sigma_x = 3\nmodel.sigma_0 = 1\nmodel.sigma_si = 1\nmodel.bogus = 2\n")
            .find("model.bogus") != std::string::npos);
  CHECK(parse_error("model.T = 1\nmodel.sigma_x = 3\nmodel.sigma_0 = 1\n").find("sigma_t") != std::string::npos);
  CHECK(parse_error("model.m = 2\nmodel.T = 1\nmodel.sigma_x = 1, 2, 3\nmodel.sigma_0 = 1\nmodel.sigma_si = 1\n")
            .find("model.sigma_x") != std::string::npos);
  CHECK(parse_error("model.T = 1\nmodel.T = 2\n").find("duplicate") != std::string::npos);
  CHECK(parse_error("model.T = 1\nno equals sign\n").find("line 2") != std::string::npos);
  CHECK(parse_error("model.T = 0\nmodel.sigma_x = 3\n").find("model.T") != std::string::npos);
  CHECK(parse_error("model.T = 1\nmodel.sigma_x = 3\nmodel.sigma_0 = 1\nmodel.sigma_si = 1\nchain.omegas[2] = 1\n")
            .find("chain.omegas[2]") != std::string::npos);
}

TEST_CASE("validate command") {
  std::ostringstream out, err;
  CHECK(cmd_validate(config("fig2.cfg"), out, err) == 0);
  CHECK(out.str().find("valid model") == 0);

  std::ostringstream out2, err2;
  CHECK(cmd_validate(config("bad_degradedness.cfg"), out2, err2) == 2);
  CHECK(out2.str().find("DegradednessViolated") != std::string::npos);

  const auto empty = temp_file("empty.cfg", "");
  std::ostringstream out3, err3;
  CHECK(cmd_validate(empty.string(), out3, err3) == 1);
  CHECK(err3.str().find("ParseError") != std::string::npos);

  std::ostringstream out4, err4;
  CHECK(cmd_validate(config("vector3.cfg"), out4, err4) == 0);
}

TEST_CASE("fig2 panel a") {
  Fig2Options opt;
  opt.sigma_si = {2.0};
  std::ostringstream csv;
  write_fig2_csv(opt, csv);
  std::string header;
  const auto rows = parse_csv(csv.str(), &header);
  CHECK(header == "sigma_si,R,delta");
  REQUIRE(rows.size() == 200);
  std::size_t nearest = 0;
  for (std::size_t i = 0; i < rows.size(); ++i)
    if (std::abs(rows[i][1] - 1.424) < std::abs(rows[nearest][1] - 1.424)) nearest = i;
  CHECK(std::abs(rows[nearest][2] - 1.78) <= 0.01);
  CHECK(rows.front()[1] == doctest::Approx(1.424).epsilon(1e-3));
}

TEST_CASE("fig2 panel b and range errors") {
  Fig2Options opt;
  opt.panel = 'b';
  opt.sigma_si = {2.0, 4.0};
  std::ostringstream csv;
  write_fig2_csv(opt, csv);
  const auto rows = parse_csv(csv.str(), nullptr);
  REQUIRE(rows.size() == 400);
  CHECK(rows[200][0] == 4.0);
  CHECK(rows[200][1] == doctest::Approx(1.634).epsilon(1e-3));
  CHECK(rows[200][2] == doctest::Approx(1.82).epsilon(0.01));

  Fig2Options low;
  low.sigma_si = {1.0};
  std::ostringstream sink, err;
  CHECK(cmd_fig2(low, sink, err) == 3);
  CHECK(err.str().find("SigmaOutOfRange") != std::string::npos);
}

TEST_CASE("oracle command on the scalar two-stage instance") {
  OracleOptions opt;
  opt.config_path = config("fig2.cfg");
  opt.samples = 1'000'000;
  opt.seed = 0;
  std::ostringstream a, err;
  CHECK(cmd_oracle(opt, a, err) == 0);
  std::string header;
  const std::string text = a.str();
  std::istringstream in(text);
  std::getline(in, header);
  CHECK(header == "quantity,theorem,exact,mc,stderr,pass");
  int rows = 0;
  for (std::string line; std::getline(in, line); ++rows) CHECK(line.substr(line.rfind(',') + 1) == "true");
  CHECK(rows == 4);

  std::ostringstream b, err2;
  CHECK(cmd_oracle(opt, b, err2) == 0);
  CHECK(a.str() == b.str());

  OracleOptions bad = opt;
  bad.omegas = {0.9, 0.5};
  std::ostringstream c, err3;
  CHECK(cmd_oracle(bad, c, err3) == 3);
  CHECK(err3.str().find("InfeasibleChain") != std::string::npos);
}

TEST_CASE("discrete check command") {
  DiscreteCheckOptions opt;
  opt.n_instances = 10;
  opt.q_draws = 20;
  std::ostringstream out, err;
  CHECK(cmd_discrete_check(opt, out, err) == 0);
  CHECK(out.str().find("result: PASS") != std::string::npos);

  opt.n_instances = 0;
  std::ostringstream out2, err2;
  CHECK(cmd_discrete_check(opt, out2, err2) == 1);
}

TEST_CASE("equivalence and fisher commands") {
  EquivalenceOptions eq;
  eq.n_instances = 12;
  std::ostringstream out, err;
  CHECK(cmd_equivalence(eq, out, err) == 0);
  CHECK(out.str().find("false") == std::string::npos);

  FisherOptions f;
  f.seeds = 3;
  std::ostringstream out2, err2;
  CHECK(cmd_fisher(f, out2, err2) == 0);
  CHECK(out2.str().find("false") == std::string::npos);
}

TEST_CASE("region and min-rate commands") {
  std::ostringstream out, err;
  CHECK(cmd_region(config("fig2.cfg"), {}, out, err) == 0);
  CHECK(out.str().find("stage,delta_bound,cum_rate") == 0);

  MinRateOptions opt;
  opt.config_path = config("fig2.cfg");
  opt.targets = {1.6, 1.9};
  std::ostringstream out2, err2;
  CHECK(cmd_min_rate(opt, out2, err2) == 0);
  opt.targets = {1.6, 9.0};
  std::ostringstream out3, err3;
  CHECK(cmd_min_rate(opt, out3, err3) == 3);
}

TEST_CASE("SIB_SEED") {
  ::unsetenv("SIB_SEED");
  CHECK(default_seed() == 0);
  ::setenv("SIB_SEED", "42", 1);
  CHECK(default_seed() == 42);
  ::setenv("SIB_SEED", "-3", 1);
  CHECK_THROWS_AS(default_seed(), Error);
  ::unsetenv("SIB_SEED");
}

TEST_CASE("executable exit codes") {
  std::string output;
  CHECK(run("validate " + config("fig2.cfg"), &output) == 0);
  CHECK(run("validate " + config("bad_degradedness.cfg"), &output) == 2);
  CHECK(output.find("DegradednessViolated") != std::string::npos);
  CHECK(run("validate " + temp_file("empty2.cfg", "").string(), &output) == 1);
  CHECK(output.find("ParseError") != std::string::npos);
  CHECK(run("fig2 --panel a --sigma-si 1.0") == 3);
  CHECK(run("discrete-check --n-instances 0") == 1);
  CHECK(run("no-such-command") == 1);
  CHECK(run("oracle " + config("fig2.cfg") + " --omega 0.9,0.5 --samples 20000", &output) == 3);
  CHECK(output.find("InfeasibleChain") != std::string::npos);

  const auto csv = std::filesystem::temp_directory_path() / "sib_test_fig2.csv";
  const auto gp = std::filesystem::temp_directory_path() / "sib_test_fig2.gp";
  CHECK(run("fig2 --panel b --sigma-si 2,3,4 --out " + csv.string() + " --gnuplot " + gp.string()) == 0);
  CHECK(std::filesystem::exists(gp));
  std::ifstream in(csv);
  std::stringstream ss;
  ss << in.rdbuf();
  CHECK(parse_csv(ss.str(), nullptr).size() == 600);
}

TEST_CASE("seed from the environment reaches the oracle") {
  std::string a, b, c;
  const std::string args = "oracle " + config("fig2.cfg") + " --samples 20000";
  CHECK(run("--help", &a) == 0);
  CHECK(run(args, &a) == 0);
  ::setenv("SIB_SEED", "5", 1);
  CHECK(run(args, &b) == 0);
  ::unsetenv("SIB_SEED");
  CHECK(run(args + " --seed 5", &c) == 0);
  CHECK(a != b);
  CHECK(b == c);
}
