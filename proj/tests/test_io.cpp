#include <doctest.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "corex/common.hpp"
#include "corex/io.hpp"
#include "test_support.hpp"

using namespace corex;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  static const fs::path dir = [] {
    fs::path p = fs::temp_directory_path() / "corex_io_tests";
    fs::create_directories(p);
    return p;
  }();
  return dir;
}

std::string temp_path(const std::string& name) {
  return (temp_dir() / name).string();
}

void write_raw(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

}  // namespace

TEST_CASE("dense matrices round-trip through csv with names and gaps") {
  DataMatrix data(3, 2);
  data.column_names = {"alpha", "beta"};
  data.at(0, 0) = 1.5;
  data.at(0, 1) = -2.25;
  data.at(1, 0) = 0.1;
  data.set_missing(1, 1);
  data.at(2, 0) = 1e-3;
  data.at(2, 1) = 12345.678;

  const std::string path = temp_path("round.csv");
  write_dense(path, data);

  DenseLoadOptions options;
  options.missing_token = "NA";
  const DataMatrix back = load_dense(path, options);
  REQUIRE(back.n_rows == 3);
  REQUIRE(back.n_cols == 2);
  CHECK(back.column_names == data.column_names);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 2; ++c) {
      CHECK(back.is_missing(r, c) == data.is_missing(r, c));
      if (!back.is_missing(r, c)) CHECK(back.at(r, c) == data.at(r, c));
    }
}

TEST_CASE("header detection is automatic but can be forced") {
  const std::string headed = temp_path("headed.csv");
  write_raw(headed, "a,b\n1,2\n3,4\n");
  const std::string bare = temp_path("bare.csv");
  write_raw(bare, "1,2\n3,4\n");

  const DataMatrix h = load_dense(headed);
  CHECK(h.column_names == std::vector<std::string>{"a", "b"});
  CHECK(h.n_rows == 2);

  const DataMatrix b = load_dense(bare);
  CHECK(b.column_names.empty());
  CHECK(b.n_rows == 2);
  CHECK(b.at(0, 0) == 1.0);

  DenseLoadOptions force;
  force.header = DenseLoadOptions::Header::no;
  CHECK_THROWS_AS((void)load_dense(headed, force), input_error);

  force.header = DenseLoadOptions::Header::yes;
  const DataMatrix forced = load_dense(bare, force);
  CHECK(forced.n_rows == 1);
  CHECK(forced.column_names == std::vector<std::string>{"1", "2"});
}

TEST_CASE("dense loader errors carry locations") {
  const std::string ragged = temp_path("ragged.csv");
  write_raw(ragged, "a,b,c\n1,2,3\n4,5\n");
  CHECK_THROWS_WITH_AS((void)load_dense(ragged), doctest::Contains("line 3"),
                       input_error);

  const std::string bad_cell = temp_path("badcell.csv");
  write_raw(bad_cell, "1,2\n3,oops\n");
  try {
    (void)load_dense(bad_cell);
    FAIL("expected input_error");
  } catch (const input_error& e) {
    const std::string what = e.what();
    CHECK(what.find("line 2") != std::string::npos);
    CHECK(what.find("column 2") != std::string::npos);
    CHECK(what.find("oops") != std::string::npos);
  }

  // Without a missing token, NA cells are just unparseable cells. Keep the
  // token off the first row so it cannot pass as a header.
  const std::string has_na = temp_path("hasna.csv");
  write_raw(has_na, "1,2\n3,NA\n");
  CHECK_THROWS_AS((void)load_dense(has_na), input_error);

  CHECK_THROWS_WITH_AS((void)load_dense(temp_path("no_such_file.csv")),
                       doctest::Contains("cannot open"), input_error);

  const std::string empty = temp_path("empty.csv");
  write_raw(empty, "");
  CHECK_THROWS_WITH_AS((void)load_dense(empty), doctest::Contains("no data"),
                       input_error);
}

TEST_CASE("delimiter sniffing covers tab, semicolon, and space") {
  const std::string tabbed = temp_path("tabbed.tsv");
  write_raw(tabbed, "1\t2\t3\n4\t5\t6\n");
  CHECK(load_dense(tabbed).n_cols == 3);

  const std::string semi = temp_path("semi.csv");
  write_raw(semi, "1;2\n3;4\n");
  CHECK(load_dense(semi).n_cols == 2);

  const std::string spaced = temp_path("spaced.txt");
  write_raw(spaced, "1 2 3 4\n5 6 7 8\n");
  CHECK(load_dense(spaced).n_cols == 4);

  // Forcing a delimiter overrides sniffing. The sniffer prefers ',' here,
  // which makes the rows ragged; forcing ';' parses cleanly.
  const std::string mixed = temp_path("mixed.csv");
  write_raw(mixed, "x,1;y,2\n1;2\n3;4\n");
  CHECK_THROWS_AS((void)load_dense(mixed), input_error);
  DenseLoadOptions forced;
  forced.delimiter = ';';
  const DataMatrix two = load_dense(mixed, forced);
  CHECK(two.n_cols == 2);
  CHECK(two.column_names == std::vector<std::string>{"x,1", "y,2"});
}

TEST_CASE("sparse loader reads pairs, dims, and collapses duplicates") {
  const std::string basic = temp_path("basic.sparse");
  write_raw(basic, "0 0\n0 2 1\n3 1\n");
  const SparseBinaryData data = load_sparse(basic);
  CHECK(data.n_docs == 4);
  CHECK(data.n_vars == 3);
  CHECK(data.nnz() == 3);

  const std::string dims = temp_path("dims.sparse");
  write_raw(dims, "%dims 10 7\n0 0\n2 6\n");
  const SparseBinaryData d = load_sparse(dims);
  CHECK(d.n_docs == 10);
  CHECK(d.n_vars == 7);

  const std::string dup = temp_path("dup.sparse");
  write_raw(dup, "0 0\n0 0\n1 1\n");
  std::vector<std::string> warnings;
  const SparseBinaryData u = load_sparse(dup, &warnings);
  CHECK(u.nnz() == 2);
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("duplicate") != std::string::npos);
}

TEST_CASE("sparse loader rejects malformed lines with the line number") {
  const std::string bad_value = temp_path("badval.sparse");
  write_raw(bad_value, "0 0\n1 1 2\n");
  CHECK_THROWS_WITH_AS((void)load_sparse(bad_value),
                       doctest::Contains("value must be 1"), input_error);

  const std::string negative = temp_path("neg.sparse");
  write_raw(negative, "0 0\n-1 2\n");
  try {
    (void)load_sparse(negative);
    FAIL("expected input_error");
  } catch (const input_error& e) {
    const std::string what = e.what();
    CHECK(what.find("line 2") != std::string::npos);
    CHECK(what.find("negative") != std::string::npos);
  }

  const std::string outside = temp_path("outside.sparse");
  write_raw(outside, "%dims 2 2\n0 0\n1 5\n");
  CHECK_THROWS_WITH_AS((void)load_sparse(outside),
                       doctest::Contains("outside declared %dims"),
                       input_error);

  const std::string bad_directive = temp_path("baddir.sparse");
  write_raw(bad_directive, "%shape 2 2\n0 0\n");
  CHECK_THROWS_WITH_AS((void)load_sparse(bad_directive),
                       doctest::Contains("unrecognized directive"),
                       input_error);
}

namespace {

ModelArchive make_linear_archive() {
  const DataMatrix data = test_support::block_data(300, 2, 3, 0.7, 5);
  ModelArchive archive;
  archive.model_kind = "linear";
  archive.linear_config.seed = 5;
  archive.linear_config.n_restarts = 1;
  archive.linear_config.max_iterations = 400;
  archive.seed = archive.linear_config.seed;
  auto [layer, report] = fit_layer(data, 2, archive.linear_config);
  archive.linear = layer;
  archive.linear_report = report;
  return archive;
}

ModelArchive make_discrete_archive() {
  SparseBinaryData data;
  data.n_docs = 200;
  data.n_vars = 6;
  Rng rng(9);
  for (int d = 0; d < 200; ++d)
    for (int g = 0; g < 2; ++g) {
      const int coin = rng.uniform() < 0.5 ? 1 : 0;
      for (int k = 0; k < 3; ++k) {
        const int v = rng.uniform() < 0.9 ? coin : 1 - coin;
        if (v == 1) data.entries.push_back({d, g * 3 + k});
      }
    }
  data.normalize();
  ModelArchive archive;
  archive.model_kind = "discrete";
  archive.discrete_config.seed = 9;
  archive.seed = 9;
  auto [model, report] = fit(data, 2, archive.discrete_config);
  archive.discrete = model;
  archive.discrete_report = report;
  return archive;
}

ModelArchive make_hierarchy_archive() {
  const DataMatrix data = test_support::block_data(300, 2, 4, 0.8, 15);
  ModelArchive archive;
  archive.model_kind = "hierarchy";
  archive.hierarchy_config.seed = 15;
  archive.hierarchy_config.linear.n_restarts = 1;
  archive.seed = 15;
  archive.hierarchy = build_linear(data, {2, 1}, archive.hierarchy_config);
  return archive;
}

ModelArchive make_sieve_archive() {
  const DataMatrix data = test_support::block_data(400, 1, 4, 0.8, 25);
  ModelArchive archive;
  archive.model_kind = "sieve";
  archive.sieve_config.train.seed = 25;
  archive.sieve_config.train.n_restarts = 1;
  archive.seed = 25;
  archive.sieve_k_max = 2;
  archive.sieve_epsilon = 0.05;
  archive.sieve =
      run_sieve(data, archive.sieve_k_max, archive.sieve_epsilon,
                archive.sieve_config);
  return archive;
}

}  // namespace

TEST_CASE("model archives save, load, and resave byte-identically") {
  const std::vector<std::pair<std::string, ModelArchive>> cases = {
      {"linear", make_linear_archive()},
      {"discrete", make_discrete_archive()},
      {"hierarchy", make_hierarchy_archive()},
      {"sieve", make_sieve_archive()},
  };
  for (const auto& [kind, archive] : cases) {
    CAPTURE(kind);
    const std::string first = temp_path(kind + "_first.json");
    const std::string second = temp_path(kind + "_second.json");
    save_model(archive, first);
    const ModelArchive loaded = load_model(first);
    CHECK(loaded.model_kind == kind);
    CHECK(loaded.seed == archive.seed);
    save_model(loaded, second);
    CHECK(test_support::read_file(first) == test_support::read_file(second));
  }
}

TEST_CASE("reloaded linear models reproduce their transforms") {
  const ModelArchive archive = make_linear_archive();
  const std::string path = temp_path("linear_functional.json");
  save_model(archive, path);
  const ModelArchive loaded = load_model(path);

  const DataMatrix probe = test_support::block_data(20, 2, 3, 0.7, 6);
  const DataMatrix a = transform(archive.linear, probe);
  const DataMatrix b = transform(loaded.linear, probe);
  CHECK(a.values == b.values);
  CHECK(loaded.linear_report.tc_lower_bound ==
        archive.linear_report.tc_lower_bound);
}

TEST_CASE("archive corruption names the first broken field") {
  const std::string path = temp_path("corrupt_base.json");
  save_model(make_linear_archive(), path);

  SUBCASE("missing field") {
    auto doc = nlohmann::json::parse(test_support::read_file(path));
    doc["payload"].erase("noise_variance");
    const std::string broken = temp_path("corrupt_missing.json");
    write_raw(broken, doc.dump(2));
    CHECK_THROWS_WITH_AS((void)load_model(broken),
                         doctest::Contains("noise_variance"), input_error);
  }
  SUBCASE("ill-typed field") {
    auto doc = nlohmann::json::parse(test_support::read_file(path));
    doc["seed"] = "not a number";
    const std::string broken = temp_path("corrupt_type.json");
    write_raw(broken, doc.dump(2));
    CHECK_THROWS_WITH_AS((void)load_model(broken), doctest::Contains("seed"),
                         input_error);
  }
  SUBCASE("unknown model kind") {
    auto doc = nlohmann::json::parse(test_support::read_file(path));
    doc["model_kind"] = "quantum";
    const std::string broken = temp_path("corrupt_kind.json");
    write_raw(broken, doc.dump(2));
    CHECK_THROWS_WITH_AS((void)load_model(broken),
                         doctest::Contains("quantum"), input_error);
  }
}

TEST_CASE("unsupported archive versions and non-archives are rejected") {
  const std::string path = temp_path("version_base.json");
  save_model(make_linear_archive(), path);
  auto doc = nlohmann::json::parse(test_support::read_file(path));
  doc["format_version"] = 2;
  const std::string v2 = temp_path("version_two.json");
  write_raw(v2, doc.dump(2));
  try {
    (void)load_model(v2);
    FAIL("expected input_error");
  } catch (const input_error& e) {
    const std::string what = e.what();
    CHECK(what.find("unsupported format_version 2") != std::string::npos);
    CHECK(what.find("reads 1") != std::string::npos);
  }

  const std::string junk = temp_path("junk.json");
  write_raw(junk, "this is not json {");
  CHECK_THROWS_WITH_AS((void)load_model(junk),
                       doctest::Contains("not a valid model archive"),
                       input_error);
}

TEST_CASE("tree exports serialize to json and dot") {
  const DataMatrix data = test_support::block_data(300, 2, 3, 0.8, 35);
  HierarchyConfig cfg;
  cfg.linear.n_restarts = 1;
  const HierarchyModel model = build_linear(data, {2, 1}, cfg);
  const TreeExport tree = export_tree(model);

  const std::string as_json = tree_json(tree);
  const auto doc = nlohmann::json::parse(as_json);
  REQUIRE(doc.contains("nodes"));
  REQUIRE(doc.contains("edges"));
  CHECK(doc["nodes"].size() == tree.nodes.size());
  CHECK(doc["edges"].size() == tree.edges.size());

  const std::string as_dot = tree_dot(tree);
  CHECK(as_dot.find("digraph") != std::string::npos);
  CHECK(as_dot.find("y1_0") != std::string::npos);
}

TEST_CASE("atomic text writes create, replace, and fail cleanly") {
  const std::string path = temp_path("atomic.txt");
  write_text_atomic(path, "first");
  CHECK(test_support::read_file(path) == "first");
  write_text_atomic(path, "second");
  CHECK(test_support::read_file(path) == "second");

  const std::string bad = (temp_dir() / "no_dir" / "file.txt").string();
  CHECK_THROWS_AS(write_text_atomic(bad, "x"), input_error);
}
