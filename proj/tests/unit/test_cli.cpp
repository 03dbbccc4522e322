#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "../../tools/scenario.hpp"

using namespace fradrc;
using namespace fradrc::cli;

namespace {

std::string write_tmp(const std::string& name, const std::string& body) {
  const auto p = std::filesystem::temp_directory_path() / ("fradrc_test_" + name + ".ini");
  std::ofstream(p) << body;
  return p.string();
}

std::string message_of(const std::string& path) {
  try {
    load_scenario(path);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

const char* kBase = R"([scenario]
name = t
[plant]
a = 10, 10
b = 5
[sim]
dt = 0.000125
T = 0.1
[design.ifo]
variant = ifo
omega0 = 1200
b0 = 5
fs = 8000
chi = 6/5
nu = 6/5
kp = 1.2e6
kd = 4000
)";

}  // namespace

TEST_CASE("parse_rational") {
  CHECK(parse_rational("6/5") == Rational(6, 5));
  CHECK(parse_rational("1.2") == Rational(6, 5));
  CHECK(parse_rational("2") == Rational(2));
  CHECK_THROWS(parse_rational("x"));
  CHECK_THROWS(parse_rational("1/0"));
}

TEST_CASE("a valid scenario loads") {
  const auto s = load_scenario(write_tmp("ok", kBase));
  CHECK(s.name == "t");
  REQUIRE(s.designs.size() == 1);
  CHECK(s.designs[0].trk.kp == 1.2e6);
  CHECK(has_tracking(s.designs[0]));
  CHECK(ideal_order(s.designs[0]) == 2.0);
}

TEST_CASE("config diagnostics name the line and field") {
  std::string bad = kBase;
  bad.replace(bad.find("kd = 4000"), 9, "kd = -1");
  const auto msg = message_of(write_tmp("kd", bad));
  CHECK(msg.find(":17:") != std::string::npos);
  CHECK(msg.find("kd") != std::string::npos);

  std::string unk = std::string(kBase) + "colour = red\n";
  CHECK(message_of(write_tmp("unk", unk)).find("colour") != std::string::npos);

  std::string fs = kBase;
  fs.replace(fs.find("fs = 8000"), 9, "fs = 4000");
  CHECK(message_of(write_tmp("fs", fs)).find("fs") != std::string::npos);

  std::string t0 = kBase;
  t0.replace(t0.find("T = 0.1"), 7, "T = 0");
  CHECK_FALSE(message_of(write_tmp("t0", t0)).empty());

  CHECK_FALSE(message_of("/nonexistent/fradrc.ini").empty());
}
