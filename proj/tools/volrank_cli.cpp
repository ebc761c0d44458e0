// volrank command-line interface.
//
// Subcommands: simulate, test-rank, test-const-rank, gamma-mc, mc-study,
// oracle-det.  Exit codes: 0 success, 1 degenerate statistics, 2 bad
// configuration or usage.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "volrank/detalg.hpp"
#include "volrank/harness.hpp"
#include "volrank/itosim.hpp"
#include "volrank/limitlaw.hpp"
#include "volrank/ranktest.hpp"
#include "volrank/rng.hpp"

using namespace volrank;
using nlohmann::json;

namespace {

struct GlobalOpts {
  std::uint64_t seed = 1;
  int threads = 0;
  std::string out;
  std::string format = "json";
};

std::string default_out_dir(const GlobalOpts& g) {
  if (!g.out.empty()) return g.out;
  if (const char* env = std::getenv(harness::kOutDirEnvVar)) return env;
  return ".";
}

void emit(const json& j, const GlobalOpts& g, const std::string& file_hint) {
  std::string text;
  if (g.format == "csv") {
    // Flatten top-level scalars to key,value rows.
    text = "key,value\n";
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (it.value().is_primitive()) text += it.key() + "," + it.value().dump() + "\n";
    }
  } else {
    text = j.dump(2) + "\n";
  }
  if (g.out.empty()) {
    std::fputs(text.c_str(), stdout);
  } else {
    std::string file = g.out;
    if (std::filesystem::is_directory(file)) file += "/" + file_hint;
    std::ofstream out(file, std::ios::binary);
    if (!out) throw config_error("cannot open output file " + file);
    out << text;
  }
}

itosim::PathSample load_path(const std::string& file, double delta_n) {
  if (file.size() > 4 && file.substr(file.size() - 4) == ".bin")
    return itosim::read_binary(file);
  return itosim::read_csv(file, delta_n);
}

Matrix theta_from_opts(int d, double scale, const std::string& theta_file) {
  if (!theta_file.empty()) {
    std::ifstream in(theta_file);
    if (!in) throw config_error("cannot open theta file " + theta_file);
    json j = json::parse(in);
    Matrix m(static_cast<int>(j.size()), static_cast<int>(j.at(0).size()));
    for (int i = 0; i < m.rows(); ++i)
      for (int c = 0; c < m.cols(); ++c) m(i, c) = j.at(i).at(c).get<double>();
    return m;
  }
  return scale * Matrix::identity(d);
}

json rank_report_for_file(const std::string& file, double delta_n, double theta_scale,
                          const std::string& theta_file, std::uint64_t wprime_seed,
                          const std::vector<double>& alphas,
                          const std::vector<ranktest::HypothesisSpec>& hyps,
                          const std::string& blocks_out) {
  auto path = load_path(file, delta_n);
  ranktest::PerturbationConfig cfg;
  cfg.theta = theta_from_opts(path.d, theta_scale, theta_file);
  cfg.seed_wprime = wprime_seed;
  auto blocks = ranktest::perturb_and_block(path, cfg);
  if (!blocks_out.empty()) harness::write_blocks_csv(blocks, blocks_out);
  auto report = ranktest::analyze(blocks, hyps, alphas);
  json j = harness::to_json(report);
  j["input"] = file;
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"random-perturbation tests for the maximal rank of the volatility matrix"};
  app.require_subcommand(1);

  GlobalOpts g;
  app.add_option("--seed", g.seed, "master seed");
  app.add_option("--threads", g.threads, "worker threads (0 = default)");
  app.add_option("--out", g.out, "output file or directory");
  app.add_option("--format", g.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));

  // simulate
  auto* sim = app.add_subcommand("simulate", "generate a scenario path");
  itosim::ScenarioParams sp;
  sp.name = "constant_rank";
  int sim_n = 20000;
  double sim_t = 1.0;
  int sim_refine = 8;
  std::string sim_format = "csv";
  sim->add_option("--scenario", sp.name, "scenario name");
  sim->add_option("--d", sp.d, "dimension of X");
  sim->add_option("--q", sp.q, "driving Brownian dimension (0 = default)");
  sim->add_option("--r", sp.r, "target rank");
  sim->add_option("--r-before", sp.r_before, "rank before the switch");
  sim->add_option("--r-after", sp.r_after, "rank after the switch");
  sim->add_option("--switch-time", sp.switch_time, "rank switch time");
  sim->add_option("--vol-modulation", sp.vol_modulation, "deterministic scale amplitude");
  sim->add_option("--n", sim_n, "number of observation intervals");
  sim->add_option("--t", sim_t, "horizon T");
  sim->add_option("--refine", sim_refine, "Euler substeps per observation");
  sim->add_option("--path-format", sim_format, "csv or bin")
      ->check(CLI::IsMember({"csv", "bin"}));

  // test-rank
  auto* tr = app.add_subcommand("test-rank", "maximal-rank tests on a path file or directory");
  std::string tr_path;
  double tr_delta = 0.0, tr_theta_scale = 1.0;
  std::string tr_theta_file, tr_blocks_out;
  std::uint64_t tr_wseed = 0;
  std::vector<double> tr_alphas{0.05};
  std::vector<int> tr_eq, tr_leq, tr_geq;
  tr->add_option("--path", tr_path, "CSV/binary path file or a directory of them")->required();
  tr->add_option("--delta-n", tr_delta, "observation step (default: infer)");
  tr->add_option("--theta-scale", tr_theta_scale, "theta = scale * identity");
  tr->add_option("--theta-file", tr_theta_file, "JSON file with an explicit theta matrix");
  tr->add_option("--wprime-seed", tr_wseed, "perturbation seed (default: derived from --seed)");
  tr->add_option("--alpha", tr_alphas, "test levels");
  tr->add_option("--test-equal", tr_eq, "test H0: R_T = r");
  tr->add_option("--test-leq", tr_leq, "test H0: R_T <= r");
  tr->add_option("--test-geq", tr_geq, "test H0: R_T >= r");
  tr->add_option("--blocks-out", tr_blocks_out, "write per-block f-values (CSV audit)");

  // test-const-rank
  auto* tc = app.add_subcommand("test-const-rank", "homoscedasticity test for the rank process");
  std::string tc_path;
  double tc_delta = 0.0, tc_p = 1.0, tc_theta_scale = 1.0;
  std::string tc_theta_file;
  std::uint64_t tc_wseed = 0;
  int tc_kn = 0;
  std::vector<double> tc_alphas{0.05};
  tc->add_option("--path", tc_path, "CSV/binary path file")->required();
  tc->add_option("--delta-n", tc_delta, "observation step (default: infer)");
  tc->add_option("--p", tc_p, "power parameter");
  tc->add_option("--k-n", tc_kn, "spot window length in blocks (0 = auto)");
  tc->add_option("--theta-scale", tc_theta_scale, "theta = scale * identity");
  tc->add_option("--theta-file", tc_theta_file, "JSON file with an explicit theta matrix");
  tc->add_option("--wprime-seed", tc_wseed, "perturbation seed (default: derived from --seed)");
  tc->add_option("--alpha", tc_alphas, "test levels");

  // gamma-mc
  auto* gm = app.add_subcommand("gamma-mc", "Monte Carlo Gamma_r estimates from a LimitInput JSON");
  std::string gm_input;
  gm->add_option("--input", gm_input, "LimitInput JSON file")->required();

  // mc-study
  auto* ms = app.add_subcommand("mc-study", "Monte Carlo level/power study from a config");
  std::string ms_config;
  bool ms_serial = false;
  ms->add_option("--config", ms_config, "StudyConfig JSON file")->required();
  ms->add_flag("--serial", ms_serial, "run the serial reference implementation");

  // oracle-det
  auto* od = app.add_subcommand("oracle-det", "run the exact determinant-algebra property suite");
  int od_tuples = 200, od_maxd = 4;
  od->add_option("--tuples", od_tuples, "number of random tuples");
  od->add_option("--max-d", od_maxd, "largest matrix dimension");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (sim->parsed()) {
      auto model = itosim::scenario(sp);
      auto path = itosim::simulate(model, sim_t, sim_t / sim_n, sim_refine, g.seed);
      std::string out = g.out.empty() ? ("path." + sim_format) : g.out;
      if (sim_format == "bin") itosim::write_binary(path, out);
      else itosim::write_csv(path, out);
      std::printf("wrote %s (%d observations, d=%d, delta_n=%g)\n", out.c_str(),
                  path.n_increments() + 1, path.d, path.delta_n);
    } else if (tr->parsed()) {
      std::vector<ranktest::HypothesisSpec> hyps;
      for (int r : tr_eq) hyps.push_back({ranktest::HypothesisKind::equal, r});
      for (int r : tr_leq) hyps.push_back({ranktest::HypothesisKind::leq, r});
      for (int r : tr_geq) hyps.push_back({ranktest::HypothesisKind::geq, r});
      if (hyps.empty()) hyps.push_back({ranktest::HypothesisKind::equal, 1});
      std::uint64_t wseed = tr_wseed != 0 ? tr_wseed : substream(g.seed, 1);
      if (std::filesystem::is_directory(tr_path)) {
        std::string dir = default_out_dir(g);
        std::filesystem::create_directories(dir);
        int count = 0;
        for (const auto& entry : std::filesystem::directory_iterator(tr_path)) {
          auto ext = entry.path().extension().string();
          if (ext != ".csv" && ext != ".bin") continue;
          json j = rank_report_for_file(entry.path().string(), tr_delta, tr_theta_scale,
                                        tr_theta_file, wseed, tr_alphas, hyps, "");
          std::ofstream out(dir + "/" + entry.path().stem().string() + ".report.json");
          out << j.dump(2) << "\n";
          ++count;
        }
        std::printf("wrote %d reports to %s\n", count, dir.c_str());
      } else {
        json j = rank_report_for_file(tr_path, tr_delta, tr_theta_scale, tr_theta_file, wseed,
                                      tr_alphas, hyps, tr_blocks_out);
        emit(j, g, "rank_report.json");
      }
    } else if (tc->parsed()) {
      auto path = load_path(tc_path, tc_delta);
      ranktest::PerturbationConfig cfg;
      cfg.theta = theta_from_opts(path.d, tc_theta_scale, tc_theta_file);
      cfg.seed_wprime = tc_wseed != 0 ? tc_wseed : substream(g.seed, 1);
      auto blocks = ranktest::perturb_and_block(path, cfg);
      auto s = ranktest::s_statistics(blocks, path.t_max);
      double r_hat = ranktest::rank_estimate(s.s1, s.s2, path.d);
      int k_n = tc_kn > 0 ? tc_kn : ranktest::default_kn(path.delta_n, path.d);
      auto spot = ranktest::spot_rank_series(blocks, k_n);
      auto rep = ranktest::const_rank_statistics(blocks, spot, tc_p, r_hat, s.s1);
      json j = harness::to_json(rep, /*include_series=*/true);
      j["r_hat"] = r_hat;
      json decs = json::array();
      for (double a : tc_alphas) {
        auto dec = ranktest::test_const_rank(rep, path.delta_n, a);
        decs.push_back(json{{"alpha", dec.alpha}, {"reject", dec.reject}, {"quantile", dec.quantile}});
      }
      j["decisions"] = decs;
      j["input"] = tc_path;
      emit(j, g, "const_rank_report.json");
    } else if (gm->parsed()) {
      std::ifstream in(gm_input);
      if (!in) throw config_error("cannot open " + gm_input);
      json spec = json::parse(in);
      limitlaw::LimitInput u;
      u.d = spec.at("d").get<int>();
      u.q = spec.at("q").get<int>();
      u.alpha = Matrix(u.d, u.q);
      for (int i = 0; i < u.d; ++i)
        for (int c = 0; c < u.q; ++c) u.alpha(i, c) = spec.at("alpha").at(i).at(c).get<double>();
      u.beta = Matrix(u.d, u.d);
      for (int i = 0; i < u.d; ++i)
        for (int c = 0; c < u.d; ++c) u.beta(i, c) = spec.at("beta").at(i).at(c).get<double>();
      u.gamma = Tensor3(u.d, u.q, u.q);
      if (spec.contains("gamma"))
        for (int l = 0; l < u.d; ++l)
          for (int m = 0; m < u.q; ++m)
            for (int k = 0; k < u.q; ++k)
              u.gamma(l, m, k) = spec.at("gamma").at(l).at(m).at(k).get<double>();
      u.a = spec.at("a").get<std::vector<double>>();
      int r = spec.at("r").get<int>();
      int n_samples = spec.value("n_samples", 20000);
      int n_substeps = spec.value("n_substeps", 512);
      std::uint64_t seed = spec.value("seed", g.seed);
      auto est = limitlaw::estimate_gamma(u, r, n_samples, n_substeps, seed,
                                          limitlaw::Exec::parallel, g.threads);
      json j{{"r", r},
             {"gamma_r", est.gamma_r},
             {"gamma_r_prime", est.gamma_r_prime},
             {"gamma_r_dprime", est.gamma_r_dprime},
             {"se_gamma", est.se_gamma},
             {"se_prime", est.se_prime},
             {"se_dprime", est.se_dprime},
             {"se_diff", est.se_diff},
             {"n_samples", est.n_samples},
             {"n_substeps", est.n_substeps},
             {"seed", seed}};
      emit(j, g, "gamma_estimate.json");
    } else if (ms->parsed()) {
      std::ifstream in(ms_config);
      if (!in) throw config_error("cannot open " + ms_config);
      auto cfg = harness::study_config_from_json(json::parse(in));
      if (app.count("--seed") > 0) cfg.master_seed = g.seed;
      auto result = harness::run_study(cfg, ms_serial ? limitlaw::Exec::serial
                                                      : limitlaw::Exec::parallel,
                                       g.threads);
      std::string dir = !g.out.empty() ? g.out
                        : !cfg.out_dir.empty() ? cfg.out_dir
                                               : default_out_dir(g);
      harness::write_study_outputs(result, dir);
      std::printf("study complete: %d paths (%d degenerate), outputs in %s\n",
                  result.aggregates.n_paths, result.aggregates.n_degenerate, dir.c_str());
    } else if (od->parsed()) {
      auto res = detalg::self_test(g.seed, od_tuples, od_maxd);
      for (const auto& msg : res.messages) std::fprintf(stderr, "%s\n", msg.c_str());
      std::printf("determinant oracle suite: %d tuples, %d failures -> %s\n", res.tuples,
                  res.failures, res.ok ? "ok" : "FAILED");
      if (!res.ok) return 1;
    }
  } catch (const degenerate_statistic& e) {
    std::fprintf(stderr, "degenerate statistic: %s\n", e.what());
    return 1;
  } catch (const config_error& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const unsupported_model& e) {
    std::fprintf(stderr, "unsupported: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
