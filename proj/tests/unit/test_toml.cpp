#include <string>

#include "doctest.h"
#include "flaresim/errors.hpp"
#include "flaresim/toml_lite.hpp"

using namespace flaresim;
using nlohmann::json;

TEST_CASE("tables, scalars, arrays and comments") {
  json j = toml_lite_parse(R"(
# top comment
name = "demo"          # trailing comment
count = 3
ratio = 0.25
big = 1e6
on = true
off = false
ids = [0, 1, 2]
nested = [[1, 2], [3]]
mixed = ["a", "b"]

[cluster]
initial_nodes = 4

[hpa]
cpu_target = 0.5
)");
  CHECK(j["name"] == "demo");
  CHECK(j["count"] == 3);
  CHECK(j["count"].is_number_integer());
  CHECK(j["ratio"] == 0.25);
  CHECK(j["big"] == 1e6);
  CHECK(j["on"] == true);
  CHECK(j["off"] == false);
  CHECK(j["ids"] == json({0, 1, 2}));
  CHECK(j["nested"][0] == json({1, 2}));
  CHECK(j["mixed"][1] == "b");
  CHECK(j["cluster"]["initial_nodes"] == 4);
  CHECK(j["hpa"]["cpu_target"] == 0.5);
}

TEST_CASE("arrays of tables accumulate in order") {
  json j = toml_lite_parse(R"(
[[service]]
name = "a"

[[service]]
name = "b"
downstream = ["a"]
)");
  REQUIRE(j["service"].is_array());
  REQUIRE(j["service"].size() == 2);
  CHECK(j["service"][0]["name"] == "a");
  CHECK(j["service"][1]["downstream"][0] == "a");
}

TEST_CASE("dotted keys nest") {
  json j = toml_lite_parse("a.b.c = 1\n[t]\nx.y = \"z\"\n");
  CHECK(j["a"]["b"]["c"] == 1);
  CHECK(j["t"]["x"]["y"] == "z");
}

TEST_CASE("string escapes") {
  json j = toml_lite_parse(R"(s = "a\tb\n\"q\" \\")");
  CHECK(j["s"] == "a\tb\n\"q\" \\");
}

static std::string error_of(const std::string& text) {
  try {
    toml_lite_parse(text);
  } catch (const ValidationError& e) {
    return e.what();
  }
  return "";
}

TEST_CASE("errors carry line numbers") {
  CHECK(error_of("x = 1\ny = ?\n").find("line 2") != std::string::npos);
  CHECK(error_of("x = 1\nx = 2\n").find("duplicate key 'x'") != std::string::npos);
  CHECK(error_of("x = 1\n[x]\n").find("already holds a value") != std::string::npos);
  CHECK(error_of("[t]\na = 1\n[[t]]\n").find("not an array of tables") != std::string::npos);
  CHECK(error_of("v = \"a\\q\"\n").find("unsupported escape") != std::string::npos);
  CHECK(error_of("n = 1.2.3\n").find("bad float") != std::string::npos);
}
