#include "run_config.hpp"

#include <gtest/gtest.h>

namespace wiener::cli {
namespace {

ConfigError::Kind error_kind(const std::function<void()>& fn, std::string* field = nullptr) {
  try {
    fn();
  } catch (const ConfigError& e) {
    if (field != nullptr) *field = e.field();
    return e.kind();
  }
  ADD_FAILURE() << "no ConfigError thrown";
  return ConfigError::Kind::kMalformed;
}

TEST(Config, EmptyFileGivesDefaults) {
  const RunConfig c = parse_config_text("");
  EXPECT_EQ(c, RunConfig{});
  EXPECT_EQ(c.T, 1.0);
  EXPECT_EQ(c.n, 16);
  EXPECT_EQ(c.K, 4);
  EXPECT_EQ(c.m, 100000u);
  EXPECT_NO_THROW(validate(c));
}

TEST(Config, RangeErrorNamesField) {
  std::string field;
  EXPECT_EQ(error_kind([] { apply_overrides({}, {{"n", "0"}}); }, &field), ConfigError::Kind::kRange);
  EXPECT_EQ(field, "grid.n");
  try {
    apply_overrides({}, {{"n", "0"}});
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("grid.n"), std::string::npos);
  }
  EXPECT_EQ(error_kind([] { parse_config_text("[noise]\nrho = 1\n"); }, &field), ConfigError::Kind::kRange);
  EXPECT_EQ(field, "noise.rho");
  EXPECT_EQ(error_kind([] { parse_config_text("[grid]\nn = 8x\n"); }), ConfigError::Kind::kRange);
  EXPECT_EQ(error_kind([] { apply_overrides({}, {{"r_min", "2"}, {"r_max", "1"}}); }), ConfigError::Kind::kRange);
}

TEST(Config, FlagsOverrideFile) {
  const RunConfig file = parse_config_text("[grid]\nn = 8\n[chaos]\nK = 2\n");
  EXPECT_EQ(file.n, 8);
  const RunConfig c = apply_overrides(file, {{"grid.n", "32"}});
  EXPECT_EQ(c.n, 32);
  EXPECT_EQ(c.K, 2);
}

TEST(Config, DistinctDiagnostics) {
  EXPECT_EQ(error_kind([] { parse_config_text("[grid]\nsteps = 4\n"); }), ConfigError::Kind::kUnknownKey);
  EXPECT_EQ(error_kind([] { parse_config_text("[tolerance]\nnot_a_check = 1\n"); }), ConfigError::Kind::kUnknownKey);
  EXPECT_EQ(error_kind([] { parse_config_text("n = 4\n"); }), ConfigError::Kind::kMalformed);
  EXPECT_EQ(error_kind([] { parse_config_text("[grid\nn = 4\n"); }), ConfigError::Kind::kMalformed);
  EXPECT_EQ(error_kind([] { parse_config_text("[grid]\nn 4\n"); }), ConfigError::Kind::kMalformed);
  EXPECT_EQ(error_kind([] { parse_config_file("/nonexistent/run.ini"); }), ConfigError::Kind::kMalformed);
}

TEST(Config, CommentsAndWhitespace) {
  const RunConfig c = parse_config_text("# comment\n[drift]\n  a1 = tanh   ; strength below\neps1=0.25\n\n");
  EXPECT_EQ(c.a1, "tanh");
  EXPECT_EQ(c.eps1, 0.25);
}

TEST(Config, RoundTrip) {
  RunConfig c = apply_overrides({}, {{"n", "12"},
                                     {"rho", "0.1"},
                                     {"correlation", "volterra"},
                                     {"eps1", "0.123456789012345678"},
                                     {"seed", "18446744"},
                                     {"output", "some/dir"},
                                     {"tolerance.chaos_norm", "3.5"}});
  const RunConfig back = parse_config_text(to_text(c));
  EXPECT_EQ(back, c);
  EXPECT_EQ(to_text(back), to_text(c));
}

TEST(Config, ModelConstruction) {
  const RunConfig c = apply_overrides({}, {{"a1", "tanh"}, {"eps1", "0.3"}, {"n", "8"}, {"t_index", "-1"}});
  const SmoothingModel m = make_model(c);
  EXPECT_EQ(m.cov.n(), 8);
  EXPECT_NEAR(m.drift.a1(1.0), 0.3 * std::tanh(1.0), 1e-15);
  EXPECT_EQ(m.drift.a2(1.0), 0.0);
  EXPECT_EQ(effective_t_index(c), 8);
  EXPECT_TRUE(make_drift(RunConfig{}).is_zero());
  EXPECT_EQ(make_spde_options(c).max_degree, 4);
}

}  // namespace
}  // namespace wiener::cli
