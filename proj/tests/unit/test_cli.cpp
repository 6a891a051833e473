#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <sstream>

#include <json.hpp>

#include "commands.hpp"
#include "config.hpp"
#include "manifest.hpp"

using namespace sparsedyn::cli;
namespace fs = std::filesystem;

namespace {

std::vector<KeySpec> schema() {
  return {{"n", KeyType::integer, "3", 1, 10, {}, "count"},
          {"rate", KeyType::real, "0.5", 0, 1, {}, "rate"},
          {"mode", KeyType::text, "a", -1e300, 1e300, {"a", "b"}, "mode"},
          {"flag", KeyType::boolean, "false", -1e300, 1e300, {}, "flag"},
          {"levels", KeyType::reals, "0,1,2", 0, 5, {}, "levels"},
          {"names", KeyType::texts, "", -1e300, 1e300, {}, "names"}};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("sparsedyn_cli_" + name);
  fs::remove_all(p);
  return p;
}

Config command_config(const std::string& command, const std::vector<std::pair<std::string, std::string>>& kv) {
  Config c(command_schema(command));
  for (const auto& [k, v] : kv) c.set(k, v, "--" + k);
  return c;
}

}  // namespace

TEST_CASE("defaults, file values and flags layer in order") {
  Config c(schema());
  CHECK(c.integer("n") == 3);
  CHECK_FALSE(c.has("n"));
  c.load_text("# comment\nn = 7\nmode = b  # trailing\n\n", "run.cfg");
  CHECK(c.integer("n") == 7);
  CHECK(c.text("mode") == "b");
  c.set("n", "9", "--n");
  CHECK(c.integer("n") == 9);
  CHECK(c.has("n"));
  CHECK(c.reals("levels") == std::vector<double>{0, 1, 2});
  CHECK(c.empty("names"));
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("file errors name the line") {
  Config c(schema());
  CHECK_THROWS_WITH_AS(c.load_text("n = 2\nbogus = 1\n", "x.cfg"), "x.cfg:2: unknown key 'bogus'", ConfigError);
  CHECK_THROWS_WITH_AS(c.load_text("n 2\n", "x.cfg"), doctest::Contains("x.cfg:1"), ConfigError);
}

TEST_CASE("validation catches types, bounds and choices") {
  const auto bad = [](const std::string& key, const std::string& value) {
    Config c(schema());
    c.set(key, value, "--" + key);
    CHECK_THROWS_AS(c.validate(), ConfigError);
  };
  bad("n", "0");
  bad("n", "2.5");
  bad("n", "abc");
  bad("rate", "1.5");
  bad("mode", "c");
  bad("flag", "maybe");
  bad("levels", "1,9");
  Config ok(schema());
  ok.set("flag", "true");
  ok.set("names", "x, y");
  CHECK_NOTHROW(ok.validate());
  CHECK(ok.boolean("flag"));
  CHECK(ok.texts("names") == std::vector<std::string>{"x", "y"});
}

TEST_CASE("echo is sorted and includes defaults") {
  Config c(schema());
  c.set("rate", "0.25");
  const auto e = c.echo();
  REQUIRE(e.size() == 6);
  CHECK(std::is_sorted(e.begin(), e.end()));
  CHECK(std::find(e.begin(), e.end(), std::make_pair(std::string("rate"), std::string("0.25"))) != e.end());
}

TEST_CASE("git blob hashes") {
  CHECK(git_blob_sha1("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
  CHECK(git_blob_sha1("hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a");
}

TEST_CASE("atomic writes leave only the target") {
  const fs::path dir = scratch("atomic");
  atomic_write(dir / "sub" / "f.txt", "abc");
  CHECK(read_file(dir / "sub" / "f.txt") == "abc");
  atomic_write(dir / "sub" / "f.txt", "xyz");
  CHECK(read_file(dir / "sub" / "f.txt") == "xyz");
  int files = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir / "sub")) ++files;
  CHECK(files == 1);
  fs::remove_all(dir);
}

TEST_CASE("manifest records outputs and their hashes") {
  const fs::path dir = scratch("manifest");
  Manifest m;
  m.command = "simulate";
  m.seed = 4;
  m.config = {{"a", "1"}};
  m.emit(dir, "out.txt", "hello\n");
  m.write(dir);
  const auto j = nlohmann::json::parse(read_file(dir / "manifest.json"));
  CHECK(j["outputs"]["out.txt"] == "ce013625030ba8dba906f756967f9e9ca394464a");
  CHECK(j["seed"] == 4);
  CHECK(j["config"]["a"] == "1");
  fs::remove_all(dir);
}

TEST_CASE("every command has a schema with the common keys") {
  for (const auto& name : command_names()) {
    const auto keys = command_schema(name);
    for (const char* common : {"seed", "out", "jobs"})
      CHECK(std::any_of(keys.begin(), keys.end(), [&](const KeySpec& k) { return k.name == common; }));
  }
  CHECK_THROWS(command_schema("nope"));
}

TEST_CASE("simulate is reproducible byte for byte") {
  const fs::path a = scratch("sim_a"), b = scratch("sim_b");
  std::ostringstream log;
  for (const fs::path& dir : {a, b})
    run_command("simulate", command_config("simulate", {{"system", "lorenz"}, {"T", "2"}, {"noise", "awgn:2"},
                                                        {"seed", "7"}, {"out", dir.string()}}),
                log);
  CHECK(read_file(a / "data.csv") == read_file(b / "data.csv"));
  CHECK(read_file(a / "manifest.json") == read_file(b / "manifest.json"));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("invalid configurations stop before any work") {
  const fs::path dir = scratch("invalid");
  std::ostringstream log;
  CHECK_THROWS_AS(run_command("lobes", command_config("lobes", {{"omega_count", "0"}, {"out", dir.string()}}), log),
                  ConfigError);
  CHECK_THROWS_AS(run_command("simulate", command_config("simulate", {{"noise", "pink:3"}, {"out", dir.string()}}), log),
                  std::exception);
  CHECK_FALSE(fs::exists(dir / "manifest.json"));
  fs::remove_all(dir);
}

TEST_CASE("identify writes a report that recovers Lorenz") {
  const fs::path dir = scratch("identify");
  std::ostringstream log;
  run_command("identify", command_config("identify", {{"system", "lorenz"}, {"T", "4"}, {"noise", "none"},
                                                      {"estimator", "stls"}, {"out", dir.string()}}),
              log);
  const std::string report = read_file(dir / "report.txt");
  CHECK(report.find("E_S 1") != std::string::npos);
  CHECK(fs::exists(dir / "coefficients.csv"));
  fs::remove_all(dir);
}

TEST_CASE("bench resumes from finished cells") {
  const fs::path dir = scratch("bench");
  std::ostringstream log;
  const auto cfg = [&](const std::string& resume) {
    return command_config("bench", {{"noise", "1"}, {"lengths", "2"}, {"estimators", "stls"}, {"trials", "2"},
                                    {"resume", resume}, {"out", dir.string()}});
  };
  run_command("bench", cfg("false"), log);
  const std::string first = read_file(dir / "heatmap.csv");
  std::ostringstream again;
  run_command("bench", cfg("true"), again);
  CHECK(again.str().find("already complete") != std::string::npos);
  CHECK(read_file(dir / "heatmap.csv") == first);
  fs::remove_all(dir);
}
