// End-to-end tests for the amid binary. The path to the built tool comes
// from the AMID_CLI environment variable (set by ctest); the fallback
// assumes the default build layout.

#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "support/test_util.hpp"

namespace {

using nlohmann::json;

std::string cli_path() { return amid::testing::cli_binary_path(); }

std::string temp_dir() {
  static const std::string dir = [] {
    std::string d = ::testing::TempDir() + "amid_cli_test_XXXXXX";
    if (mkdtemp(d.data()) == nullptr) {
      ADD_FAILURE() << "mkdtemp failed";
    }
    return d;
  }();
  return dir;
}

int run_cli(const std::string& args, const std::string& env = "") {
  const std::string stderr_file = temp_dir() + "/stderr.log";
  const std::string command =
      env + " " + cli_path() + " " + args + " 2>" + stderr_file;
  const int status = std::system(command.c_str());
  return WEXITSTATUS(status);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  EXPECT_TRUE(in.good()) << "missing file: " << path;
  std::ostringstream body;
  body << in.rdbuf();
  return body.str();
}

json read_json(const std::string& path) { return json::parse(read_file(path)); }

TEST(CliMixture, MatchesHandOracles) {
  const std::string out = temp_dir() + "/mix_arith";
  ASSERT_EQ(run_cli("mixture --p 0.5,0.5 --q 0.9,0.1 --alpha -1 --lambda 0.3 "
                    "--out " + out),
            0);
  const json doc = read_json(out + ".json");
  EXPECT_NEAR(doc["result"]["r"][0].get<double>(), 0.78, 1e-12);
  EXPECT_NEAR(doc["result"]["r"][1].get<double>(), 0.22, 1e-12);

  const std::string out2 = temp_dir() + "/mix_geom";
  ASSERT_EQ(run_cli("mixture --p 0.5,0.5 --q 0.9,0.1 --alpha 1 --lambda 0.5 "
                    "--out " + out2),
            0);
  const json doc2 = read_json(out2 + ".json");
  EXPECT_NEAR(doc2["result"]["r"][0].get<double>(), 0.75, 1e-12);
  EXPECT_NEAR(doc2["result"]["r"][1].get<double>(), 0.25, 1e-12);
}

TEST(CliMixture, EchoesInputWhenEqual) {
  const std::string out = temp_dir() + "/mix_eq";
  ASSERT_EQ(run_cli("mixture --p 0.3,0.7 --q 0.3,0.7 --alpha 2.5 "
                    "--lambda 0.4 --out " + out),
            0);
  const json doc = read_json(out + ".json");
  EXPECT_NEAR(doc["result"]["r"][0].get<double>(), 0.3, 1e-14);
  EXPECT_NEAR(doc["result"]["r"][1].get<double>(), 0.7, 1e-14);
}

TEST(CliDivergence, AllNamesEvaluate) {
  const std::string base = "divergence --p 0.5,0.5 --q 0.9,0.1 ";
  // Expected values from 30-digit arithmetic on the definitions.
  const std::vector<std::pair<std::string, double>> cases{
      {"--divergence kl", 0.51082562376599068},
      {"--divergence rkl", 0.36806420716849707},
      {"--divergence skl --lambda 0.5", 0.087176693572388876},
      {"--divergence srkl --lambda 0.5", 0.11632175658600450},
      {"--divergence gjs --lambda 0.5", 0.10174922507919669},
      {"--divergence alpha:0", 0.42229123600033649},
      {"--divergence ab:0.2,0.7", 0.43677827096110215},
      {"--divergence jeffreys", 0.87888983093448775},
  };
  int index = 0;
  for (const auto& [args, expected] : cases) {
    const std::string out = temp_dir() + "/div_" + std::to_string(index++);
    ASSERT_EQ(run_cli(base + args + " --out " + out), 0) << args;
    const json doc = read_json(out + ".json");
    EXPECT_NEAR(doc["result"]["value"].get<double>(), expected, 1e-12) << args;
    EXPECT_FALSE(doc["result"]["support_violation"].get<bool>()) << args;
  }
  // skew names require the lambda parameter.
  EXPECT_EQ(run_cli(base + "--divergence skl"), 2);
  // Trainable commands reject non-generator divergences.
  EXPECT_EQ(run_cli("fit-simplex --alpha -1 --lambda 0.1 --divergence gjs "
                    "--out " + temp_dir() + "/fit_gjs"),
            2);
}

TEST(CliExitCodes, BadConfigIsTwo) {
  // Missing required key.
  EXPECT_EQ(run_cli("mixture --p 0.5,0.5 --q 0.9,0.1 --alpha -1"), 2);
  // Unknown flag.
  EXPECT_EQ(run_cli("mixture --frobnicate 3"), 2);
  // Unknown config file key.
  const std::string config_path = temp_dir() + "/bad_config.json";
  std::ofstream(config_path) << R"({"alpha": -1.0, "mystery_knob": 3})";
  EXPECT_EQ(run_cli("toy --config " + config_path + " --out " + temp_dir() +
                    "/toy_bad"),
            2);
  // Malformed value.
  EXPECT_EQ(run_cli("mixture --p 0.5,oops --q 0.9,0.1 --alpha -1 --lambda 0.5"),
            2);
  // Bad log level environment variable.
  EXPECT_EQ(run_cli("grad-check", "AMID_LOG_LEVEL=verbose"), 2);
}

TEST(CliExitCodes, NumericalFailureIsThree) {
  // Disjoint supports at alpha >= 1: the mixture has empty support.
  EXPECT_EQ(run_cli("mixture --p 1,0 --q 0,1 --alpha 2 --lambda 0.5"), 3);
}

TEST(CliGradCheck, PassesAndWritesReport) {
  const std::string out = temp_dir() + "/gc";
  ASSERT_EQ(run_cli("grad-check --out " + out), 0);
  const json doc = read_json(out + ".json");
  EXPECT_TRUE(doc["result"]["all_passed"].get<bool>());
  EXPECT_EQ(doc["result"]["cases"].size(), 100u);
}

TEST(CliGradCheck, NegativeControlFails) {
  const std::string out = temp_dir() + "/gc_neg";
  EXPECT_EQ(run_cli("grad-check --negative-control --out " + out), 1);
  const json doc = read_json(out + ".json");
  EXPECT_TRUE(doc["result"]["negative_control_detected"].get<bool>());
  EXPECT_FALSE(doc["result"]["all_passed"].get<bool>());
}

TEST(CliToy, SchemaAndEcho) {
  const std::string out = temp_dir() + "/toy_short";
  ASSERT_EQ(run_cli("toy --steps 40 --out " + out), 0);
  const std::string csv = read_file(out + ".csv");
  std::istringstream lines(csv);
  std::string first, second;
  std::getline(lines, first);
  std::getline(lines, second);
  EXPECT_EQ(first, "# schema: amid.toy.v1 columns=step,loss,mu,sigma");
  EXPECT_EQ(second, "step,loss,mu,sigma");
  int rows = 0;
  for (std::string line; std::getline(lines, line);) ++rows;
  EXPECT_EQ(rows, 41);  // steps + 1 records, final state included

  const json doc = read_json(out + ".json");
  EXPECT_EQ(doc["config"]["gaussian_arg_convention"], "variance");
  EXPECT_EQ(doc["config"]["steps"], 40);
  EXPECT_TRUE(doc["config"].contains("seed"));
}

TEST(CliToy, EchoConfigRerunsIdentically) {
  const std::string out_a = temp_dir() + "/toy_a";
  ASSERT_EQ(run_cli("toy --steps 50 --lambda 0.3 --alpha -2 --out " + out_a),
            0);
  const json doc_a = read_json(out_a + ".json");

  // Feed the echoed config back in; only the out path changes.
  json config = doc_a["config"];
  config.erase("out");
  const std::string config_path = temp_dir() + "/toy_echo_config.json";
  std::ofstream(config_path) << config.dump(2);
  const std::string out_b = temp_dir() + "/toy_b";
  ASSERT_EQ(run_cli("toy --config " + config_path + " --out " + out_b), 0);

  EXPECT_EQ(read_file(out_a + ".csv"), read_file(out_b + ".csv"));
  json doc_b = read_json(out_b + ".json");
  json doc_a_cmp = doc_a;
  doc_a_cmp["config"].erase("out");
  doc_b["config"].erase("out");
  EXPECT_EQ(doc_a_cmp, doc_b);
}

TEST(CliFitSimplex, WritesTrajectory) {
  const std::string out = temp_dir() + "/fit";
  ASSERT_EQ(run_cli("fit-simplex --alpha -1 --lambda 0.1 --steps 400 "
                    "--stop-tv 0.001 --out " + out),
            0);
  const json doc = read_json(out + ".json");
  EXPECT_FALSE(doc["result"]["diverged"].get<bool>());
  EXPECT_LT(doc["result"]["final_tv"].get<double>(), 1e-3);
  const std::string csv = read_file(out + ".csv");
  EXPECT_EQ(csv.rfind("# schema: amid.fit_simplex.v1", 0), 0u);
}

TEST(CliFitSimplex, ExplicitTeacherFromConfig) {
  const std::string config_path = temp_dir() + "/fit_teacher.json";
  std::ofstream(config_path)
      << R"({"teacher": [0.7, 0.2, 0.1], "alpha": -1.0, "lambda": 0.1,)"
      << R"( "steps": 600, "stop_tv": 0.001})";
  const std::string out = temp_dir() + "/fit_teacher";
  ASSERT_EQ(run_cli("fit-simplex --config " + config_path + " --out " + out),
            0);
  const json doc = read_json(out + ".json");
  EXPECT_EQ(doc["result"]["teacher"].size(), 3u);
  EXPECT_NEAR(doc["result"]["teacher"][0].get<double>(), 0.7, 1e-12);
  EXPECT_LT(doc["result"]["final_tv"].get<double>(), 1e-3);
}

TEST(CliSweep, NoParallelFlagWorks) {
  const std::string out = temp_dir() + "/sweep_seq";
  ASSERT_EQ(run_cli("sweep --alphas -1 --lambdas 0.1 --directions teacher "
                    "--teachers-per-cell 1 --steps 200 --no-parallel --out " +
                    out),
            0);
  const json doc = read_json(out + ".json");
  EXPECT_FALSE(doc["config"]["parallel"].get<bool>());
}

TEST(CliSweep, SingleCellMatchesFitSimplex) {
  const std::string sweep_out = temp_dir() + "/sweep_one";
  ASSERT_EQ(run_cli("sweep --alpha -1 --lambda 0.1 --divergence kl "
                    "--direction teacher --teachers-per-cell 1 --steps 400 "
                    "--seed 5 --out " + sweep_out),
            0);
  const std::string csv = read_file(sweep_out + ".csv");
  std::istringstream lines(csv);
  std::string schema, header, row;
  std::getline(lines, schema);
  std::getline(lines, header);
  std::getline(lines, row);
  EXPECT_EQ(header,
            "alpha,lambda,divergence,direction,final_loss,final_tv,"
            "steps_to_threshold,stable_flag");
  EXPECT_NE(row.find("kl,teacher"), std::string::npos);
  EXPECT_NE(row.find("true"), std::string::npos);

  // The same seed feeds the same teacher to a direct fit-simplex run, so
  // the single-cell aggregate must equal the single-run figures exactly.
  const std::string fit_out = temp_dir() + "/sweep_one_direct";
  ASSERT_EQ(run_cli("fit-simplex --alpha -1 --lambda 0.1 --divergence kl "
                    "--direction teacher --steps 400 --stop-tv 0.001 "
                    "--seed 5 --out " + fit_out),
            0);
  const json fit = read_json(fit_out + ".json");
  std::istringstream fields(row);
  std::vector<std::string> cols;
  for (std::string f; std::getline(fields, f, ',');) cols.push_back(f);
  ASSERT_EQ(cols.size(), 8u);
  EXPECT_EQ(std::stod(cols[4]), fit["result"]["final_loss"].get<double>());
  EXPECT_EQ(std::stod(cols[5]), fit["result"]["final_tv"].get<double>());
}

TEST(CliSweep, RklAlphaOneUnstable) {
  const std::string out = temp_dir() + "/sweep_rkl";
  ASSERT_EQ(run_cli("sweep --divergence rkl --alpha 1 --lambda 0.1 "
                    "--direction teacher --teachers-per-cell 2 --steps 1200 "
                    "--out " + out),
            0);
  const std::string csv = read_file(out + ".csv");
  EXPECT_NE(csv.find("false"), std::string::npos);
  const json doc = read_json(out + ".json");
  EXPECT_EQ(doc["result"]["unstable_cells"].get<int>(), 1);
}

TEST(CliDistill, AllStrategiesRoundTrip) {
  for (const std::string strategy :
       {"fixed", "on-policy", "mixed", "adaptive-off-policy"}) {
    const std::string out = temp_dir() + "/distill_" + strategy;
    ASSERT_EQ(run_cli("distill --strategy " + strategy +
                      " --steps 30 --out " + out),
              0)
        << strategy;
    const json doc = read_json(out + ".json");
    EXPECT_FALSE(doc["result"]["diverged"].get<bool>()) << strategy;
    const auto& model = doc["result"]["final_model"];
    EXPECT_EQ(model["vocab_size"].get<int>(), 8);
    EXPECT_EQ(model["start_logits"].size(), 8u);
    EXPECT_EQ(model["transition_logits"].size(), 64u);
    const std::string csv = read_file(out + ".csv");
    EXPECT_EQ(csv.rfind("# schema: amid.distill.v1", 0), 0u);
  }
}

TEST(CliDeterminism, RepeatRunsAreByteIdentical) {
  const std::string out_a = temp_dir() + "/det_a";
  const std::string out_b = temp_dir() + "/det_b";
  ASSERT_EQ(run_cli("distill --steps 40 --seed 11 --out " + out_a), 0);
  ASSERT_EQ(run_cli("distill --steps 40 --seed 11 --out " + out_b), 0);
  EXPECT_EQ(read_file(out_a + ".csv"), read_file(out_b + ".csv"));
  json doc_a = read_json(out_a + ".json");
  json doc_b = read_json(out_b + ".json");
  doc_a["config"].erase("out");
  doc_b["config"].erase("out");
  EXPECT_EQ(doc_a, doc_b);
}

TEST(CliLogging, InfoLevelWritesToStderrOnly) {
  const std::string out = temp_dir() + "/log_info";
  const std::string stderr_file = temp_dir() + "/info_stderr.log";
  const std::string command = std::string("AMID_LOG_LEVEL=info ") + cli_path() +
                              " grad-check --out " + out + " 2>" + stderr_file;
  ASSERT_EQ(WEXITSTATUS(std::system(command.c_str())), 0);
  EXPECT_NE(read_file(stderr_file).find("[amid][info]"), std::string::npos);
  // The JSON artifact stays clean.
  EXPECT_NO_THROW(read_json(out + ".json"));
}

}  // namespace
