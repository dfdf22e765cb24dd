#include <gtest/gtest.h>

#include "zenosde/config.hpp"
#include "zenosde/error.hpp"

using namespace zenosde;
using nlohmann::json;

namespace {

std::string message_of(const std::string& text) {
  try {
    parse_config_text(text);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ConfigInvalid);
    return e.what();
  }
  ADD_FAILURE() << "accepted: " << text;
  return {};
}

}  // namespace

TEST(Config, PresetsRoundTrip) {
  for (const auto& name : preset_names()) {
    RunConfig a = preset(name);
    json resolved = config_to_json(a);
    RunConfig b = parse_config(resolved);
    EXPECT_EQ(config_to_json(b), resolved) << name;
  }
}

TEST(Config, Case2Coefficients) {
  RunConfig c = preset("case2");
  EXPECT_EQ(c.system.drift.coefficients, (std::vector<double>{-1.0, 0.5}));
  EXPECT_EQ(c.system.diffusion.coefficients, (std::vector<double>{0.3, 2.0}));
  EXPECT_EQ(c.system.x0, std::vector<double>{10.0});
  EXPECT_EQ(c.system.h0, 1);
  EXPECT_DOUBLE_EQ(c.system.jump.alpha, 1.673);
}

TEST(Config, IntroKinds) {
  RunConfig c = preset("intro");
  EXPECT_EQ(c.system.schedule.kind, JumpSchedule::Kind::HarmonicToZero);
  EXPECT_EQ(c.system.jump.kind, JumpFamily::Kind::ScalePoly);
}

TEST(Config, GapFillingValuesAreMarked) {
  json j = preset_json("case1");
  EXPECT_NE(j["xi_generator"]["source"].get<std::string>().find("default-unspecified"), std::string::npos);
  EXPECT_NE(j["eta_transition"]["source"].get<std::string>().find("default-unspecified"), std::string::npos);
}

TEST(Config, UnknownPreset) {
  try {
    preset("nosuch");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnknownPreset);
  }
}

TEST(Config, UnknownKeyNamesField) {
  json j = preset_json("case2");
  j["drift"]["coefficent"] = 1;
  try {
    parse_config(j);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("drift.coefficent"), std::string::npos) << e.what();
  }
}

TEST(Config, SyntaxErrorHasLineAndColumn) {
  std::string msg = message_of("{\n  \"drift\": {\n    \"kind\": \"linear\",,\n  }\n}");
  EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
  EXPECT_NE(msg.find("column"), std::string::npos) << msg;
}

TEST(Config, BadGeneratorIsConfigError) {
  json j = preset_json("case2");
  j["xi_generator"]["rates"] = json::array({json::array({-1.0, 0.5}), json::array({1.0, -1.0})});
  try {
    parse_config(j);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("xi_generator"), std::string::npos) << e.what();
  }
}

TEST(Config, WrongTypeNamesField) {
  json j = preset_json("case2");
  j["initial"]["x0"] = "ten";
  try {
    parse_config(j);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("initial.x0"), std::string::npos) << e.what();
  }
}

TEST(Config, MissingFile) {
  try {
    load_config_file("/nonexistent/zenosde.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Io);
  }
}
