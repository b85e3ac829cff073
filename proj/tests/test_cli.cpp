#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

#include "corex/io.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kCli = COREX_CLI_PATH;

fs::path work_dir() {
  static const fs::path dir = [] {
    fs::path p = fs::temp_directory_path() / "corex_cli_tests";
    fs::create_directories(p);
    return p;
  }();
  return dir;
}

std::string wpath(const std::string& name) { return (work_dir() / name).string(); }

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

RunResult run_cli(const std::string& args) {
  const std::string out_path = wpath("stdout.txt");
  const std::string err_path = wpath("stderr.txt");
  const std::string cmd =
      kCli + " " + args + " > " + out_path + " 2> " + err_path;
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = test_support::read_file(out_path);
  r.err = test_support::read_file(err_path);
  return r;
}

std::string make_dense_input() {
  static std::string path;
  if (path.empty()) {
    path = wpath("blocks.csv");
    const corex::DataMatrix data = test_support::block_data(400, 2, 4, 0.75, 3);
    corex::write_dense(path, data);
  }
  return path;
}

std::string make_sparse_input() {
  static std::string path;
  if (path.empty()) {
    path = wpath("docs.sparse");
    corex::Rng rng(11);
    std::ofstream out(path);
    out << "%dims 300 8\n";
    for (int d = 0; d < 300; ++d)
      for (int g = 0; g < 2; ++g) {
        const int coin = rng.uniform() < 0.5 ? 1 : 0;
        for (int k = 0; k < 4; ++k) {
          const int v = rng.uniform() < 0.9 ? coin : 1 - coin;
          if (v == 1) out << d << " " << g * 4 + k << "\n";
        }
      }
  }
  return path;
}

}  // namespace

TEST_CASE("fit-linear is deterministic and reports its bound") {
  const std::string input = make_dense_input();
  const std::string model_a = wpath("linear_a.json");
  const std::string model_b = wpath("linear_b.json");

  const RunResult a = run_cli("fit-linear --input " + input +
                              " --factors 2 --seed 7 --output " + model_a);
  REQUIRE(a.exit_code == 0);
  CHECK(a.out.find("TC lower bound") != std::string::npos);
  CHECK(a.out.find("factor 0") != std::string::npos);

  const RunResult b = run_cli("fit-linear --input " + input +
                              " --factors 2 --seed 7 --output " + model_b);
  REQUIRE(b.exit_code == 0);
  CHECK(test_support::read_file(model_a) == test_support::read_file(model_b));
  // Everything before the output-path echo must match byte for byte.
  CHECK(a.out.substr(0, a.out.find("model written")) ==
        b.out.substr(0, b.out.find("model written")));

  const corex::ModelArchive archive = corex::load_model(model_a);
  CHECK(archive.model_kind == "linear");
  CHECK(archive.seed == 7);
}

TEST_CASE("input problems exit with code 2") {
  SUBCASE("missing file") {
    const RunResult r = run_cli("fit-linear --input " + wpath("nope.csv") +
                                " --factors 2 --output " + wpath("m.json"));
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("error:") != std::string::npos);
    CHECK(r.err.find("cannot open") != std::string::npos);
  }
  SUBCASE("ragged rows") {
    const std::string bad = wpath("ragged.csv");
    std::ofstream(bad) << "1,2,3\n4,5\n";
    const RunResult r = run_cli("fit-linear --input " + bad +
                                " --factors 1 --output " + wpath("m.json"));
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("line 2") != std::string::npos);
  }
  SUBCASE("wrong format for the subcommand") {
    const RunResult r =
        run_cli("fit-linear --input " + make_dense_input() +
                " --format sparse --factors 2 --output " + wpath("m.json"));
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("requires --format dense") != std::string::npos);
  }
  SUBCASE("unknown flag is a parse error") {
    const RunResult r = run_cli("fit-linear --wat");
    CHECK(r.exit_code == 2);
  }
  SUBCASE("missing subcommand") {
    const RunResult r = run_cli("");
    CHECK(r.exit_code == 2);
  }
}

TEST_CASE("help exits zero") {
  const RunResult r = run_cli("--help");
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("fit-linear") != std::string::npos);
}

TEST_CASE("transform and covariance consume a fitted linear model") {
  const std::string input = make_dense_input();
  const std::string model = wpath("linear_tc.json");
  REQUIRE(run_cli("fit-linear --input " + input +
                  " --factors 2 --seed 5 --output " + model)
              .exit_code == 0);

  const std::string scores_path = wpath("scores.csv");
  const RunResult t = run_cli("transform --model " + model + " --input " +
                              input + " --output " + scores_path);
  REQUIRE(t.exit_code == 0);
  corex::DenseLoadOptions opts;
  opts.missing_token = "NA";
  const corex::DataMatrix scores = corex::load_dense(scores_path, opts);
  CHECK(scores.n_rows == 400);
  CHECK(scores.n_cols == 2);

  const std::string cov_path = wpath("cov.csv");
  const RunResult c =
      run_cli("covariance --model " + model + " --output " + cov_path);
  REQUIRE(c.exit_code == 0);
  const corex::DataMatrix cov = corex::load_dense(cov_path, opts);
  CHECK(cov.n_rows == 8);
  CHECK(cov.n_cols == 8);
  for (int i = 0; i < 8; ++i) CHECK(cov.at(i, i) == doctest::Approx(1.0));

  const RunResult wrong =
      run_cli("covariance --model " + model + " --output " + cov_path +
              " --original-units");
  CHECK(wrong.exit_code == 0);
}

TEST_CASE("discrete pipeline: fit, topics, transform") {
  const std::string input = make_sparse_input();
  const std::string model = wpath("discrete.json");
  const RunResult f = run_cli("fit-discrete --input " + input +
                              " --factors 2 --seed 9 --output " + model);
  REQUIRE(f.exit_code == 0);
  CHECK(f.out.find("total bound") != std::string::npos);

  const std::string topics_path = wpath("topics.json");
  const RunResult t = run_cli("topics --model " + model + " --input " + input +
                              " --output " + topics_path);
  REQUIRE(t.exit_code == 0);
  const auto doc = nlohmann::json::parse(test_support::read_file(topics_path));
  REQUIRE(doc.contains("topics"));
  CHECK(doc["topics"].size() == 2);
  CHECK(doc["topics"][0].contains("words"));

  const std::string act_path = wpath("activations.csv");
  const RunResult tr = run_cli("transform --model " + model + " --input " +
                               input + " --output " + act_path);
  REQUIRE(tr.exit_code == 0);
  corex::DenseLoadOptions opts;
  opts.missing_token = "NA";
  const corex::DataMatrix act = corex::load_dense(act_path, opts);
  CHECK(act.n_rows == 300);
  CHECK(act.n_cols == 2);
  for (int r = 0; r < act.n_rows; ++r)
    for (int c = 0; c < act.n_cols; ++c) {
      CHECK(act.at(r, c) >= 0.0);
      CHECK(act.at(r, c) <= 1.0);
    }
}

TEST_CASE("bad anchor files carry their line number") {
  const std::string anchors = wpath("anchors.txt");
  std::ofstream(anchors) << "0 0\nbadword 1\n";
  const RunResult r = run_cli("fit-discrete --input " + make_sparse_input() +
                              " --factors 2 --anchors " + anchors +
                              " --output " + wpath("m.json"));
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("anchors line 2") != std::string::npos);
  CHECK(r.err.find("badword") != std::string::npos);
}

TEST_CASE("hierarchy and tree round-trip through the CLI") {
  const std::string input = make_dense_input();
  const std::string model = wpath("hier.json");
  const RunResult h = run_cli("hierarchy --input " + input +
                              " --widths 2,1 --seed 3 --output " + model);
  REQUIRE(h.exit_code == 0);
  CHECK(h.out.find("layer 0") != std::string::npos);
  CHECK(h.out.find("layer 1") != std::string::npos);

  const std::string tree_path = wpath("tree.json");
  const RunResult t =
      run_cli("tree --model " + model + " --output " + tree_path);
  REQUIRE(t.exit_code == 0);
  const auto doc = nlohmann::json::parse(test_support::read_file(tree_path));
  CHECK(doc.contains("nodes"));
  CHECK(test_support::read_file(tree_path + ".dot").find("digraph") !=
        std::string::npos);

  // tree rejects non-hierarchy archives
  const std::string linear_model = wpath("linear_for_tree.json");
  REQUIRE(run_cli("fit-linear --input " + input +
                  " --factors 2 --seed 5 --output " + linear_model)
              .exit_code == 0);
  const RunResult bad =
      run_cli("tree --model " + linear_model + " --output " + tree_path);
  CHECK(bad.exit_code == 2);
}

TEST_CASE("sieve subcommand writes a loadable archive") {
  const std::string model = wpath("sieve.json");
  const RunResult r = run_cli("sieve --input " + make_dense_input() +
                              " --factors 3 --seed 1 --output " + model);
  REQUIRE(r.exit_code == 0);
  CHECK(r.out.find("component 0") != std::string::npos);
  const corex::ModelArchive archive = corex::load_model(model);
  CHECK(archive.model_kind == "sieve");
  CHECK(!archive.sieve.components.empty());
}

TEST_CASE("info summarizes continuous data in nats or bits") {
  const std::string input = make_dense_input();
  const RunResult nats = run_cli("info --input " + input);
  REQUIRE(nats.exit_code == 0);
  CHECK(nats.out.find("TC estimate") != std::string::npos);
  CHECK(nats.out.find("nats") != std::string::npos);

  const std::string summary = wpath("info.json");
  const RunResult bits =
      run_cli("info --input " + input + " --bits --output " + summary);
  REQUIRE(bits.exit_code == 0);
  CHECK(bits.out.find("bits") != std::string::npos);
  const auto doc = nlohmann::json::parse(test_support::read_file(summary));
  CHECK(doc["kind"] == "gaussian");
  CHECK(doc["n_cols"] == 8);
  // The file always records nats regardless of the display flag.
  CHECK(doc.contains("tc_estimate"));
}

TEST_CASE("info switches to discrete treatment for integer data") {
  const std::string path = wpath("coins.csv");
  {
    std::ofstream out(path);
    corex::Rng rng(21);
    for (int r = 0; r < 200; ++r) {
      const int a = rng.uniform() < 0.5 ? 1 : 0;
      const int b = rng.uniform() < 0.9 ? a : 1 - a;
      out << a << "," << b << "\n";
    }
  }
  const RunResult r = run_cli("info --input " + path);
  REQUIRE(r.exit_code == 0);
  CHECK(r.out.find("discrete treatment") != std::string::npos);
  CHECK(r.out.find("TC estimate") == std::string::npos);
}
