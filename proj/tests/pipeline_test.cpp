#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "hlc/errors.hpp"
#include "hlc/evaluation.hpp"
#include "hlc/geometry.hpp"
#include "hlc/io.hpp"
#include "hlc/pipeline.hpp"
#include "hlc/rng.hpp"
#include "hlc/sampling.hpp"
#include "test_util.hpp"

using hlc::BodyMode;
using hlc::CenterMode;
using hlc::ConvexBody;
using hlc::FitConfig;
using hlc::GeneratorFamily;
using hlc::Json;
using hlc::Mat;
using hlc::Model;
using hlc::SimConfig;
using hlc::SplitRng;
using hlc::Vec;

namespace {

Vec vec(std::initializer_list<double> v) {
  Vec out(static_cast<int>(v.size()));
  int i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

Mat gauss_cloud(std::uint64_t seed, int n, int p) {
  SplitRng rng(seed);
  return hlc::sample_density(GeneratorFamily::gauss(), ConvexBody::ball(p, 1.),
                             Vec::Zero(p), n, rng);
}

int count_char(const std::string& s, char c) {
  return static_cast<int>(std::count(s.begin(), s.end(), c));
}

std::vector<std::string> lines_of(const std::string& s) {
  std::vector<std::string> out;
  size_t pos = 0;
  while (pos < s.size()) {
    size_t nl = s.find('\n', pos);
    if (nl == std::string::npos) nl = s.size();
    out.push_back(s.substr(pos, nl - pos));
    pos = nl + 1;
  }
  return out;
}

}  // namespace

TEST(FitKnown, ProducesAValidatedModelSupportedUpToTheLargestRadius) {
  Mat X = gauss_cloud(301, 400, 2);
  FitConfig cfg;
  cfg.body_mode = BodyMode::kKnown;
  cfg.K0 = ConvexBody::ball(2, 1.0);
  cfg.center_mode = CenterMode::kZero;
  Model m = hlc::fit(cfg, X);
  EXPECT_NO_THROW(hlc::validate_model(m));
  EXPECT_EQ(m.p, 2);
  EXPECT_EQ(m.mu, Vec::Zero(2));
  EXPECT_FALSE(m.volume_is_mc);

  double rmax = 0.0;
  for (int i = 0; i < X.rows(); ++i)
    rmax = std::max(rmax, X.row(i).norm());
  const Vec& b = m.generator.breakpoints;
  EXPECT_DOUBLE_EQ(b(b.size() - 1), rmax);

  auto t = hlc::make_truth(GeneratorFamily::gauss(), ConvexBody::ball(2, 1.0),
                           Vec::Zero(2));
  auto d = hlc::dx2(m, t, X);
  EXPECT_EQ(d.n_outside, 0);
  EXPECT_TRUE(std::isfinite(d.value));
  EXPECT_GE(d.value, 0.0);  // the MLE cannot score below the truth on its data
}

TEST(FitKnown, CenterModesAreHonored) {
  Mat X = gauss_cloud(302, 80, 2);
  FitConfig cfg;
  cfg.body_mode = BodyMode::kKnown;
  cfg.K0 = ConvexBody::ball(2, 1.0);

  cfg.center_mode = CenterMode::kKnown;
  cfg.mu = vec({0.3, -0.1});
  EXPECT_EQ(hlc::fit(cfg, X).mu, cfg.mu);

  cfg.center_mode = CenterMode::kSampleMean;
  Vec want = X.colwise().mean();
  EXPECT_EQ(hlc::fit(cfg, X).mu, want);

  cfg.center_mode = CenterMode::kZero;
  EXPECT_EQ(hlc::fit(cfg, X).mu, Vec::Zero(2));
}

TEST(FitScatter, IsAffineEquivariantThroughTheWholePipeline) {
  // fitting B-mapped data must give the B-mapped density:
  // log fhat_B(B x) = log fhat(x) - log|det B|
  Mat X = gauss_cloud(303, 300, 2);
  Mat B(2, 2);
  B << 2.0, 1.0, 0.0, 1.5;
  Mat XB = X * B.transpose();

  FitConfig cfg;
  cfg.body_mode = BodyMode::kScatter;
  cfg.center_mode = CenterMode::kSampleMean;
  Model m0 = hlc::fit(cfg, X);
  Model mB = hlc::fit(cfg, XB);

  const double ldet = std::log(3.0);  // det B = 2 * 1.5
  EXPECT_NEAR(mB.log_volume, m0.log_volume + ldet, 1e-9);

  double rmax = 0.0;
  Vec mu0 = X.colwise().mean();
  for (int i = 0; i < X.rows(); ++i)
    rmax = std::max(rmax,
                    hlc::minkowski(m0.body, X.row(i).transpose() - mu0));
  int checked = 0;
  for (int i = 0; i < X.rows(); ++i) {
    Vec x = X.row(i).transpose();
    if (hlc::minkowski(m0.body, x - mu0) > 0.9 * rmax) continue;
    const double lhs = hlc::log_density(mB, B * x);
    const double rhs = hlc::log_density(m0, x) - ldet;
    ASSERT_TRUE(std::isfinite(lhs));
    EXPECT_NEAR(lhs, rhs, 1e-5);
    ++checked;
  }
  EXPECT_GT(checked, 200);
}

TEST(FitScatter, SampleSplitUsesDisjointHalvesForBodyAndRadii) {
  Mat X = gauss_cloud(304, 100, 2);
  FitConfig cfg;
  cfg.body_mode = BodyMode::kScatter;
  cfg.center_mode = CenterMode::kSampleMean;
  cfg.use_sample_split = true;
  Model m = hlc::fit(cfg, X);

  Vec mu_first_half = X.topRows(50).colwise().mean();
  EXPECT_EQ(m.mu, mu_first_half);

  double rmax = 0.0;
  for (int i = 50; i < 100; ++i)
    rmax = std::max(
        rmax, hlc::minkowski(m.body, (X.row(i).transpose() - m.mu).eval()));
  const Vec& b = m.generator.breakpoints;
  EXPECT_DOUBLE_EQ(b(b.size() - 1), rmax);
}

TEST(FitHull, SplitsRowsBetweenRadiiAndDirections) {
  Mat X = gauss_cloud(305, 810, 2);
  FitConfig cfg;
  cfg.body_mode = BodyMode::kHull;
  cfg.center_mode = CenterMode::kZero;
  cfg.mc_budget = 20000;
  cfg.seed = 9;
  Model m = hlc::fit(cfg, X);
  EXPECT_TRUE(m.volume_is_mc);
  const auto& hull = std::get<ConvexBody::PointHull>(m.body.payload());
  EXPECT_LE(hull.vertices.rows(), 10);  // hull_split(810, 2) = {800, 10}

  double rmax = 0.0;
  for (int i = 0; i < 800; ++i)
    rmax = std::max(rmax,
                    hlc::minkowski(m.body, X.row(i).transpose().eval()));
  const Vec& b = m.generator.breakpoints;
  EXPECT_DOUBLE_EQ(b(b.size() - 1), rmax);
}

TEST(FitHull, OverridesReplaceTheDefaultSplit) {
  Mat X = gauss_cloud(306, 200, 2);
  FitConfig cfg;
  cfg.body_mode = BodyMode::kHull;
  cfg.center_mode = CenterMode::kZero;
  cfg.M_override = 30;
  cfg.k_override = 2;
  cfg.mc_budget = 20000;
  Model m = hlc::fit(cfg, X);
  double rmax = 0.0;
  for (int i = 0; i < 170; ++i)  // N - M rows feed the radial fit
    rmax = std::max(rmax,
                    hlc::minkowski(m.body, X.row(i).transpose().eval()));
  const Vec& b = m.generator.breakpoints;
  EXPECT_DOUBLE_EQ(b(b.size() - 1), rmax);

  cfg.M_override = 200;
  EXPECT_THROW(hlc::fit(cfg, X), hlc::ConfigError);
  cfg.M_override = 30;
  cfg.k_override = 31;
  EXPECT_THROW(hlc::fit(cfg, X), hlc::ConfigError);
}

TEST(Fit, ErrorsArePrefixedWithTheModeAndKeepTheirType) {
  Mat X = gauss_cloud(307, 40, 2);

  FitConfig no_body;
  no_body.body_mode = BodyMode::kKnown;
  EXPECT_TRUE(contains(
      throw_message<hlc::ConfigError>([&] { hlc::fit(no_body, X); }),
      "fit[known]: "));

  FitConfig wrong_dim;
  wrong_dim.body_mode = BodyMode::kScatter;
  wrong_dim.K0 = ConvexBody::ball(3, 1.0);
  EXPECT_TRUE(contains(
      throw_message<hlc::ConfigError>([&] { hlc::fit(wrong_dim, X); }),
      "fit[scatter]: "));

  FitConfig hull;
  hull.body_mode = BodyMode::kHull;
  Mat tiny = X.topRows(1);
  EXPECT_TRUE(contains(
      throw_message<hlc::InputError>([&] { hlc::fit(hull, tiny); }),
      "fit[hull]: "));

  FitConfig known;
  known.body_mode = BodyMode::kKnown;
  known.K0 = ConvexBody::ball(2, 1.0);
  Mat bad = X;
  bad(0, 0) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_TRUE(contains(
      throw_message<hlc::InputError>([&] { hlc::fit(known, bad); }),
      "fit[known]: "));

  known.center_mode = CenterMode::kKnown;  // mu left empty
  EXPECT_TRUE(contains(
      throw_message<hlc::ConfigError>([&] { hlc::fit(known, X); }),
      "requires a p-vector mu"));
}

TEST(Fit, RescalingDataBodyAndTruthLeavesDx2Unchanged) {
  const double alpha = 2.37;
  SplitRng rng(308);
  Mat X = hlc::sample_density(GeneratorFamily::unif(1.0),
                              ConvexBody::ball(2, 1.0), Vec::Zero(2), 250,
                              rng);
  Mat Xs = alpha * X;

  FitConfig cfg;
  cfg.body_mode = BodyMode::kKnown;
  cfg.center_mode = CenterMode::kZero;
  cfg.K0 = ConvexBody::ball(2, 1.0);
  Model m = hlc::fit(cfg, X);
  cfg.K0 = ConvexBody::ball(2, alpha);
  Model ms = hlc::fit(cfg, Xs);

  auto t = hlc::make_truth(GeneratorFamily::unif(1.0), ConvexBody::ball(2, 1.),
                           Vec::Zero(2));
  auto ts = hlc::make_truth(GeneratorFamily::unif(1.0),
                            ConvexBody::ball(2, alpha), Vec::Zero(2));
  const double d = hlc::dx2(m, t, X).value;
  const double ds = hlc::dx2(ms, ts, Xs).value;
  EXPECT_TRUE(std::isfinite(d));
  EXPECT_NEAR(ds, d, 1e-6);
}

TEST(ModelFiles, SaveThenLoadIsBitwiseFaithful) {
  Mat X = gauss_cloud(309, 120, 2);
  FitConfig cfg;
  cfg.body_mode = BodyMode::kKnown;
  cfg.K0 = ConvexBody::ball(2, 1.0);
  cfg.center_mode = CenterMode::kSampleMean;
  Model m = hlc::fit(cfg, X);

  const std::string path = "pipeline_test_model.json";
  hlc::save_model(path, m, 77, "known");
  Model back = hlc::load_model(path);
  std::remove(path.c_str());

  EXPECT_EQ(back.p, m.p);
  EXPECT_EQ(back.mu, m.mu);
  EXPECT_EQ(back.log_volume, m.log_volume);
  EXPECT_EQ(back.generator.breakpoints, m.generator.breakpoints);
  EXPECT_EQ(back.generator.values, m.generator.values);
  SplitRng rng(1);
  for (int t = 0; t < 20; ++t) {
    Vec x = vec({rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)});
    EXPECT_EQ(hlc::log_density(back, x), hlc::log_density(m, x));
  }
}

TEST(Simulate, OutputIsByteIdenticalAcrossThreadCountsAndReruns) {
  SimConfig cfg;
  cfg.ps = {2};
  cfg.ns = {60};
  cfg.families = {"gauss", "unif"};
  cfg.modes = {"known", "scatter"};
  cfg.replicates = 2;
  cfg.seed = 7;
  cfg.n_mc = 2000;
  cfg.volume_budget = 20000;

  cfg.threads = 1;
  const std::string a = hlc::simulate(cfg);
  cfg.threads = 2;
  const std::string b = hlc::simulate(cfg);
  cfg.threads = 1;
  const std::string c = hlc::simulate(cfg);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a, c);

  auto ls = lines_of(a);
  ASSERT_EQ(ls.size(), 1u + 2 * 2 * 2);  // header + cells * replicates
  EXPECT_EQ(ls[0], hlc::kSimHeader);
  for (size_t i = 1; i < ls.size(); ++i) {
    EXPECT_EQ(count_char(ls[i], ','), 11) << ls[i];
    EXPECT_EQ(ls[i].back(), ',');  // error field empty on success
  }
  // known-body cells leave body_err empty, scatter cells fill it
  EXPECT_TRUE(contains(ls[1], ",known,"));
  for (size_t i = 1; i < ls.size(); ++i) {
    const bool known = contains(ls[i], ",known,");
    std::vector<std::string> f;
    size_t pos = 0;
    std::string line = ls[i];
    while (true) {
      size_t c2 = line.find(',', pos);
      if (c2 == std::string::npos) {
        f.push_back(line.substr(pos));
        break;
      }
      f.push_back(line.substr(pos, c2 - pos));
      pos = c2 + 1;
    }
    ASSERT_EQ(f.size(), 12u);
    EXPECT_EQ(f[9].empty(), known) << line;  // body_err column
    EXPECT_EQ(f[10], "0");                   // record_time off
  }
}

TEST(Simulate, FailuresBecomeErrorRowsNotExceptions) {
  SimConfig cfg;
  cfg.ps = {2};
  cfg.ns = {50};
  cfg.families = {"gauss"};
  cfg.modes = {"known"};
  cfg.replicates = 1;
  cfg.K0 = ConvexBody::ball(3, 1.0);  // wrong dimension for p = 2
  const std::string csv = hlc::simulate(cfg);
  auto ls = lines_of(csv);
  ASSERT_EQ(ls.size(), 2u);
  EXPECT_EQ(count_char(ls[1], ','), 11);
  EXPECT_TRUE(contains(ls[1], "dimension"));

  SimConfig bad_fam = cfg;
  bad_fam.K0.reset();
  bad_fam.families = {"weibull"};
  auto ls2 = lines_of(hlc::simulate(bad_fam));
  ASSERT_EQ(ls2.size(), 2u);
  EXPECT_TRUE(contains(ls2[1], "unknown family 'weibull'"));
}

TEST(Simulate, RejectsUnusableConfigurations) {
  SimConfig ok;
  ok.ps = {2};
  ok.ns = {50};
  ok.families = {"gauss"};
  ok.modes = {"known"};

  SimConfig c = ok;
  c.replicates = 0;
  EXPECT_THROW(hlc::simulate(c), hlc::ConfigError);
  c = ok;
  c.threads = 0;
  EXPECT_THROW(hlc::simulate(c), hlc::ConfigError);
  c = ok;
  c.n_mc = 1;
  EXPECT_THROW(hlc::simulate(c), hlc::ConfigError);
  c = ok;
  c.n_dirs = 0;
  EXPECT_THROW(hlc::simulate(c), hlc::ConfigError);
  c = ok;
  c.volume_budget = 0;
  EXPECT_THROW(hlc::simulate(c), hlc::ConfigError);
  c = ok;
  c.families = {};
  EXPECT_THROW(hlc::simulate(c), hlc::ConfigError);
}

TEST(ConfigJson, FitConfigParsesAndValidates) {
  Json j = {{"body_mode", "known"},
            {"body", hlc::body_to_json(ConvexBody::ball(2, 1.0))},
            {"center_mode", "zero"},
            {"mc_budget", 5000},
            {"seed", 11}};
  FitConfig c = hlc::fit_config_from_json(j);
  EXPECT_EQ(c.body_mode, BodyMode::kKnown);
  EXPECT_EQ(c.center_mode, CenterMode::kZero);
  EXPECT_EQ(c.mc_budget, 5000);
  EXPECT_EQ(c.seed, 11u);
  Mat X = gauss_cloud(310, 50, 2);
  EXPECT_NO_THROW(hlc::fit(c, X));

  auto parse_err = [](Json jj) {
    return throw_message<hlc::ParseError>(
        [&] { hlc::fit_config_from_json(jj); });
  };
  EXPECT_TRUE(contains(parse_err(Json{{"body_mode", "magic"}}),
                       "unknown body_mode"));
  EXPECT_TRUE(contains(parse_err(Json{{"body_mode", "known"}}),
                       "requires /body"));
  Json needs_mu = {{"body_mode", "scatter"}, {"center_mode", "known"}};
  EXPECT_TRUE(contains(parse_err(needs_mu), "missing field 'mu'"));
  Json bad_budget = {{"body_mode", "scatter"}, {"mc_budget", 0}};
  EXPECT_TRUE(contains(parse_err(bad_budget), "mc_budget"));
  Json bad_seed = {{"body_mode", "scatter"}, {"seed", 1.5}};
  EXPECT_TRUE(contains(parse_err(bad_seed), "/seed"));
  Json bad_split = {{"body_mode", "scatter"}, {"use_sample_split", 1}};
  EXPECT_TRUE(contains(parse_err(bad_split), "/use_sample_split"));
}

TEST(ConfigJson, SimConfigParsesListsWithPointerPaths) {
  Json j = {{"ps", Json::array({2, 3})},
            {"ns", Json::array({100})},
            {"families", Json::array({"gauss", "exp"})},
            {"modes", Json::array({"known"})},
            {"replicates", 4},
            {"seed", 5},
            {"n_mc", 1000},
            {"threads", 2},
            {"record_time", true},
            {"unif_r0", 1.5}};
  SimConfig c = hlc::sim_config_from_json(j);
  EXPECT_EQ(c.ps, (std::vector<int>{2, 3}));
  EXPECT_EQ(c.families, (std::vector<std::string>{"gauss", "exp"}));
  EXPECT_EQ(c.replicates, 4);
  EXPECT_EQ(c.n_mc, 1000);
  EXPECT_EQ(c.threads, 2);
  EXPECT_TRUE(c.record_time);
  EXPECT_EQ(c.unif_r0, 1.5);

  auto parse_err = [](Json jj) {
    return throw_message<hlc::ParseError>(
        [&] { hlc::sim_config_from_json(jj); });
  };
  Json bad = j;
  bad["ps"] = Json::array({2, "x"});
  EXPECT_TRUE(contains(parse_err(bad), "/ps/1"));
  bad = j;
  bad["families"] = Json::array();
  EXPECT_TRUE(contains(parse_err(bad), "non-empty array at /families"));
  bad = j;
  bad.erase("replicates");
  EXPECT_TRUE(contains(parse_err(bad), "missing field 'replicates'"));
  bad = j;
  bad["record_time"] = "yes";
  EXPECT_TRUE(contains(parse_err(bad), "/record_time"));
}
