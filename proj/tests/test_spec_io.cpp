#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "mkv/catalog.hpp"
#include "mkv/spec_io.hpp"

using namespace mkv;

namespace {

std::string err_of(const std::string& text) {
  try {
    spec_from_json(text);
  } catch (const SpecError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("minimal document loads with a default domain") {
  const ManifoldSpec spec = spec_from_json(
      R"({"name":"m","dimension":2,"coordinates":["x","y"],
          "metric":[["1","0"],["0","1"]]})");
  CHECK(spec.name == "m");
  CHECK(spec.dim == 2);
  REQUIRE(spec.domain.size() == 2);
  CHECK(spec.domain[0].first == -1.0);
  CHECK(spec.domain[0].second == 1.0);
  CHECK_FALSE(spec.structure.has_value());
}

TEST_CASE("schema violations name the offending path") {
  CHECK(err_of("{") .find("not valid JSON") != std::string::npos);
  CHECK(err_of("[1,2]") == "document root must be an object");
  CHECK(err_of(R"({"dimension":1,"coordinates":["x"],"metric":[["1"]]})") ==
        "$: missing \"name\"");
  CHECK(err_of(R"({"name":"m","dimension":0,"coordinates":[],"metric":[]})") ==
        "dimension: expected a positive integer");
  CHECK(err_of(R"({"name":"m","dimension":2,"coordinates":["x"],"metric":[]})") ==
        "coordinates: expected 2 names");
  CHECK(err_of(R"({"name":"m","dimension":1,"coordinates":["x"]})") == "$: missing \"metric\"");
  CHECK(err_of(R"({"name":"m","dimension":2,"coordinates":["x","y"],
                   "metric":[["1","x"],["y","1"]]})") ==
        "metric[1][0]: metric entries must be symmetric");
  CHECK(err_of(R"({"name":"m","dimension":1,"coordinates":["x"],"metric":[["q"]]})")
            .rfind("metric[0][0]:", 0) == 0);
  CHECK(err_of(R"({"name":"m","dimension":1,"coordinates":["x"],"metric":[["1"]],
                   "domain":{"z":[0,1]}})") == "domain.z: unknown coordinate");
  CHECK(err_of(R"({"name":"m","dimension":1,"coordinates":["x"],"metric":[["1"]],
                   "domain":{"x":[1,1]}})") == "domain.x: interval is empty");
  CHECK(err_of(R"({"name":"m","dimension":2,"coordinates":["x","y"],
                   "metric":[["1","0"],["0","1"]],
                   "structure":{"xi":["1","0"],"phi":[["0","0"],["0","0"]]}})") ==
        "structure: contact structure needs odd dimension");
  CHECK(err_of(R"({"name":"m","dimension":1,"coordinates":["x"],"metric":[["1"]],
                   "fields":{"V":["x","x"]}})")
            .rfind("fields.V:", 0) == 0);
}

TEST_CASE("serialization is canonical") {
  const std::string text = spec_to_json(catalog_entry("olszak-halfspace").spec);
  CHECK(spec_to_json(spec_from_json(text)) == text);
  // key order is sorted, independent of construction order
  CHECK(text.find("\"coordinates\"") < text.find("\"dimension\""));
  CHECK(text.find("\"dimension\"") < text.find("\"domain\""));
  CHECK(text.back() == '\n');
}

TEST_CASE("file round trip preserves every field") {
  const std::string path = "/tmp/mkv_test_roundtrip.json";
  const ManifoldSpec spec = catalog_entry("group-H").spec;
  save_spec(spec, path);
  const ManifoldSpec back = load_spec(path);
  CHECK(back.name == spec.name);
  CHECK(back.dim == spec.dim);
  CHECK(back.parameters == spec.parameters);
  CHECK(back.domain == spec.domain);
  REQUIRE(back.structure.has_value());
  CHECK(spec_to_json(back) == spec_to_json(spec));
  std::remove(path.c_str());
  CHECK_THROWS_AS(load_spec(path), SpecError);
}
