#include <CLI11.hpp>
#include <cstdint>
#include <iostream>
#include <string>

#include "hlc/hlc.hpp"

namespace {

void run_fit(const std::string& config_path, const std::string& data_path,
             const std::string& out_path) {
  hlc::Json cfg_json = hlc::read_json_file(config_path);
  hlc::FitConfig cfg = hlc::fit_config_from_json(cfg_json);
  hlc::Mat data = hlc::read_matrix_csv(data_path);
  hlc::Model model = hlc::fit(cfg, data);
  hlc::save_model(out_path, model, cfg.seed,
                  hlc::detail::body_mode_name(cfg.body_mode));
}

void run_density(const std::string& model_path, const std::string& pts_path,
                 const std::string& out_path) {
  hlc::Model model = hlc::load_model(model_path);
  hlc::Mat pts = hlc::read_matrix_csv(pts_path);
  if (pts.cols() != model.p)
    throw hlc::InputError("points dimension does not match the model");
  hlc::Mat out(pts.rows(), 1);
  for (int i = 0; i < pts.rows(); ++i)
    out(i, 0) = hlc::log_density(model, pts.row(i).transpose());
  hlc::write_matrix_csv(out_path, out, {"log_density"});
}

void run_sample(const std::string& family, const std::string& body_path,
                const std::string& mu_path, double r0, int n,
                std::uint64_t seed, const std::string& out_path) {
  hlc::ConvexBody body =
      hlc::body_from_json(hlc::read_json_file(body_path), "");
  const int p = body.dim();
  hlc::Vec mu = hlc::Vec::Zero(p);
  if (!mu_path.empty()) {
    hlc::Mat mm = hlc::read_matrix_csv(mu_path);
    if (mm.size() != p)
      throw hlc::InputError("mu.csv must hold exactly p values");
    mu = Eigen::Map<hlc::Vec>(mm.data(), p);
  }
  hlc::GeneratorFamily fam = [&] {
    if (family == "gauss") return hlc::GeneratorFamily::gauss();
    if (family == "exp") return hlc::GeneratorFamily::exponential();
    if (family == "unif")
      return hlc::GeneratorFamily::unif(r0 > 0.0 ? r0
                                                 : static_cast<double>(p));
    throw hlc::ConfigError("unknown family '" + family + "'");
  }();
  hlc::SplitRng rng(seed);
  hlc::Mat data = hlc::sample_density(fam, body, mu, n, rng);
  hlc::write_matrix_csv(out_path, data);
}

void run_simulate(const std::string& config_path,
                  const std::string& out_path) {
  hlc::SimConfig cfg =
      hlc::sim_config_from_json(hlc::read_json_file(config_path));
  const std::string csv = hlc::simulate(cfg);
  std::ofstream out(out_path);
  if (!out) throw hlc::InputError("cannot open " + out_path + " for writing");
  out << csv;
  if (!out) throw hlc::InputError("failed writing " + out_path);
}

void run_eval(const std::string& model_path, const std::string& truth_path,
              const std::string& data_path, int n_mc, std::uint64_t seed,
              const std::string& out_path) {
  hlc::Model model = hlc::load_model(model_path);
  hlc::TruthSpec truth =
      hlc::truth_from_json(hlc::read_json_file(truth_path));
  hlc::Mat data = hlc::read_matrix_csv(data_path);
  hlc::Dx2 d = hlc::dx2(model, truth, data);
  hlc::SplitRng rng(seed);
  hlc::HellingerMc h = hlc::hellinger_sq_mc(model, truth, n_mc, rng);
  const double berr =
      hlc::body_error(model.body, truth.body, 256, seed);
  hlc::Json j;
  j["dx2"] = std::isfinite(d.value) ? hlc::Json(d.value) : hlc::Json();
  j["dx2_n_outside"] = d.n_outside;
  j["hell2"] = h.estimate;
  j["hell2_se"] = h.std_error;
  j["body_err"] = berr;
  hlc::write_json_file(out_path, j);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"homothetic log-concave density estimation"};
  app.require_subcommand(1);

  std::string config_path, data_path, out_path, model_path, pts_path;
  std::string family, body_path, mu_path, truth_path;
  double r0 = 0.0;
  int n = 0, n_mc = 100000;
  std::uint64_t seed = 0;

  auto* c_fit = app.add_subcommand("fit", "fit a model to data");
  c_fit->add_option("--config", config_path)->required();
  c_fit->add_option("--data", data_path)->required();
  c_fit->add_option("--out", out_path)->required();

  auto* c_den = app.add_subcommand("density", "evaluate log-density at points");
  c_den->add_option("--model", model_path)->required();
  c_den->add_option("--points", pts_path)->required();
  c_den->add_option("--out", out_path)->required();

  auto* c_smp = app.add_subcommand("sample", "draw from a reference density");
  c_smp->add_option("--family", family)->required();
  c_smp->add_option("--body", body_path)->required();
  c_smp->add_option("--mu", mu_path);
  c_smp->add_option("--r0", r0);
  c_smp->add_option("--n", n)->required();
  c_smp->add_option("--seed", seed);
  c_smp->add_option("--out", out_path)->required();

  auto* c_sim = app.add_subcommand("simulate", "run a simulation grid");
  c_sim->add_option("--config", config_path)->required();
  c_sim->add_option("--out", out_path)->required();

  auto* c_evl = app.add_subcommand("eval", "score a model against a truth");
  c_evl->add_option("--model", model_path)->required();
  c_evl->add_option("--truth", truth_path)->required();
  c_evl->add_option("--data", data_path)->required();
  c_evl->add_option("--mc", n_mc);
  c_evl->add_option("--seed", seed);
  c_evl->add_option("--out", out_path)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? 0 : 2;
  }

  try {
    if (c_fit->parsed()) run_fit(config_path, data_path, out_path);
    if (c_den->parsed()) run_density(model_path, pts_path, out_path);
    if (c_smp->parsed())
      run_sample(family, body_path, mu_path, r0, n, seed, out_path);
    if (c_sim->parsed()) run_simulate(config_path, out_path);
    if (c_evl->parsed())
      run_eval(model_path, truth_path, data_path, n_mc, seed, out_path);
  } catch (const hlc::InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const hlc::SolverError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
