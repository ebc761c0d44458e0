#include "volrank/harness.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>

#include "volrank/rng.hpp"
#include "volrank/stats.hpp"

namespace volrank::harness {

using nlohmann::json;
using ranktest::HypothesisKind;
using ranktest::HypothesisSpec;

void StudyConfig::validate() const {
  if (n_paths < 1) throw config_error("StudyConfig: n_paths must be >= 1");
  if (n_obs < 2 * scenario.d) throw config_error("StudyConfig: n_obs must be >= 2d");
  if (t_max <= 0.0) throw config_error("StudyConfig: t_max must be positive");
  if (refine < 1) throw config_error("StudyConfig: refine must be >= 1");
  for (double a : alphas)
    if (!(a > 0.0 && a < 1.0)) throw config_error("StudyConfig: alphas must lie in (0,1)");
  if (const_rank.enabled && !(const_rank.p > 0.0))
    throw config_error("StudyConfig: const-rank power p must be positive");
}

namespace {

PathOutcome run_one_path(const StudyConfig& cfg, const itosim::ModelSpec& model, int index) {
  PathOutcome out;
  out.index = index;
  const double delta_n = cfg.t_max / cfg.n_obs;
  try {
    auto path = itosim::simulate(model, cfg.t_max, delta_n, cfg.refine,
                                 substream(cfg.master_seed, index, 0));
    ranktest::PerturbationConfig pert;
    pert.theta = cfg.theta;
    pert.seed_wprime = substream(cfg.master_seed, index, 1);
    auto blocks = ranktest::perturb_and_block(path, pert);
    out.report = ranktest::analyze(blocks, cfg.hypotheses, cfg.alphas);
    if (cfg.const_rank.enabled) {
      int k_n = cfg.const_rank.k_n > 0 ? cfg.const_rank.k_n
                                       : ranktest::default_kn(delta_n, blocks.d);
      auto spot = ranktest::spot_rank_series(blocks, k_n);
      out.const_rank = ranktest::const_rank_statistics(blocks, spot, cfg.const_rank.p,
                                                       out.report.r_hat, out.report.s1);
      out.median_spot = spot.median_valid();
      for (double a : cfg.alphas)
        out.const_rank_decisions.push_back(ranktest::test_const_rank(out.const_rank, delta_n, a));
      out.has_const_rank = true;
    }
    out.ok = true;
  } catch (const degenerate_statistic& e) {
    out.ok = false;
    out.error = e.what();
  }
  return out;
}

}  // namespace

StudyResult run_study(const StudyConfig& config, limitlaw::Exec exec, int threads) {
  config.validate();
  const itosim::ModelSpec model = itosim::scenario(config.scenario);

  StudyResult result;
  result.config = config;
  result.version = kVersion;
  result.config_hash = config_hash(config);
  result.paths.resize(config.n_paths);

  if (exec == limitlaw::Exec::serial) {
    for (int i = 0; i < config.n_paths; ++i) result.paths[i] = run_one_path(config, model, i);
  } else {
#ifdef _OPENMP
    if (threads > 0) {
#pragma omp parallel for schedule(dynamic) num_threads(threads)
      for (int i = 0; i < config.n_paths; ++i) result.paths[i] = run_one_path(config, model, i);
    } else {
#pragma omp parallel for schedule(dynamic)
      for (int i = 0; i < config.n_paths; ++i) result.paths[i] = run_one_path(config, model, i);
    }
#else
    for (int i = 0; i < config.n_paths; ++i) result.paths[i] = run_one_path(config, model, i);
#endif
  }
  result.aggregates = aggregate(config, result.paths);
  return result;
}

StudyAggregates aggregate(const StudyConfig& config, const std::vector<PathOutcome>& paths) {
  const itosim::ModelSpec model = itosim::scenario(config.scenario);
  StudyAggregates agg;
  agg.n_paths = static_cast<int>(paths.size());
  agg.true_max_rank = model.rank_profile.max_rank(config.t_max);

  std::vector<double> r_hats;
  std::vector<double> medians;
  std::vector<double> bs, zs;
  int rounded_correct = 0;
  for (const auto& p : paths) {
    if (!p.ok) {
      agg.n_degenerate++;
      continue;
    }
    agg.n_ok++;
    r_hats.push_back(p.report.r_hat);
    if (p.report.r_rounded == agg.true_max_rank) rounded_correct++;
    if (p.has_const_rank) {
      bs.push_back(p.const_rank.b_stat);
      zs.push_back(p.const_rank.z_stat);
      if (std::isfinite(p.median_spot)) medians.push_back(p.median_spot);
    }
  }
  auto rh = stats::summarize(r_hats);
  agg.mean_r_hat = rh.mean;
  agg.sd_r_hat = rh.sd;
  agg.frac_rounded_correct = agg.n_ok > 0 ? static_cast<double>(rounded_correct) / agg.n_ok : 0.0;

  for (const auto& hyp : config.hypotheses) {
    for (double alpha : config.alphas) {
      int n = 0, rejects = 0;
      for (const auto& p : paths) {
        if (!p.ok) continue;
        for (const auto& dec : p.report.decisions)
          if (dec.hypothesis.kind == hyp.kind && dec.hypothesis.r == hyp.r &&
              dec.alpha == alpha) {
            ++n;
            if (dec.reject) ++rejects;
          }
      }
      if (n == 0) continue;
      double f = static_cast<double>(rejects) / n;
      agg.level_power.push_back({hyp.label(), alpha, f, std::sqrt(f * (1.0 - f) / n), n});
    }
    if (hyp.kind == HypothesisKind::equal) {
      std::vector<double> standardized;
      for (const auto& p : paths) {
        if (!p.ok) continue;
        for (const auto& dec : p.report.decisions)
          if (dec.hypothesis.kind == hyp.kind && dec.hypothesis.r == hyp.r &&
              dec.alpha == config.alphas.front() && std::isfinite(dec.standardized)) {
            standardized.push_back(dec.standardized);
            break;
          }
      }
      if (standardized.size() >= 20) {
        auto ks = stats::ks_normal(standardized);
        agg.normality.push_back({hyp.label(), ks.distance, ks.p_value});
      }
    }
  }

  if (config.const_rank.enabled) {
    auto sb = stats::summarize(bs);
    agg.mean_b = sb.mean;
    agg.sd_b = sb.sd;
    agg.mean_z = stats::summarize(zs).mean;
    agg.mean_median_spot = stats::summarize(medians).mean;
    for (double alpha : config.alphas) {
      int n = 0, rejects = 0;
      for (const auto& p : paths) {
        if (!p.ok || !p.has_const_rank) continue;
        for (const auto& dec : p.const_rank_decisions)
          if (dec.alpha == alpha) {
            ++n;
            if (dec.reject) ++rejects;
          }
      }
      if (n == 0) continue;
      double f = static_cast<double>(rejects) / n;
      agg.const_rank_level.push_back({"const-rank", alpha, f, std::sqrt(f * (1.0 - f) / n), n});
    }
  }
  return agg;
}

itosim::PathSample ingest_csv(const std::string& file, double delta_n) {
  return itosim::read_csv(file, delta_n);
}

stats::KsResult ks_normality(const std::vector<double>& samples) {
  return stats::ks_normal(samples);
}

// ---- serialization ----------------------------------------------------------

namespace {

std::string kind_name(HypothesisKind k) {
  switch (k) {
    case HypothesisKind::equal: return "equal";
    case HypothesisKind::leq: return "leq";
    case HypothesisKind::geq: return "geq";
  }
  return "equal";
}

HypothesisKind kind_from_name(const std::string& s) {
  if (s == "equal") return HypothesisKind::equal;
  if (s == "leq") return HypothesisKind::leq;
  if (s == "geq") return HypothesisKind::geq;
  throw config_error("unknown hypothesis kind '" + s + "'");
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

Matrix matrix_from_json(const json& j) {
  if (!j.is_array() || j.empty()) throw config_error("matrix: expected a non-empty 2d array");
  int rows = static_cast<int>(j.size());
  int cols = static_cast<int>(j.at(0).size());
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    if (static_cast<int>(j.at(i).size()) != cols) throw config_error("matrix: ragged rows");
    for (int c = 0; c < cols; ++c) m(i, c) = j.at(i).at(c).get<double>();
  }
  return m;
}

}  // namespace

json to_json(const ranktest::TestDecision& d) {
  return json{{"hypothesis", d.hypothesis.label()},
              {"kind", kind_name(d.hypothesis.kind)},
              {"r", d.hypothesis.r},
              {"alpha", d.alpha},
              {"reject", d.reject},
              {"standardized", d.standardized},
              {"quantile", d.quantile}};
}

json to_json(const ranktest::RankTestReport& r) {
  json decs = json::array();
  for (const auto& d : r.decisions) decs.push_back(to_json(d));
  return json{{"d", r.d},
              {"delta_n", r.delta_n},
              {"t_max", r.t_max},
              {"n_blocks", r.n_blocks},
              {"s1", r.s1},
              {"s2", r.s2},
              {"r_hat", r.r_hat},
              {"r_rounded", r.r_rounded},
              {"v11", r.v11},
              {"v22", r.v22},
              {"v12", r.v12},
              {"v_feasible", r.v_feasible},
              {"v_prime", r.v_prime},
              {"decisions", decs}};
}

json to_json(const ranktest::ConstRankReport& r, bool include_series) {
  json j{{"k_n", r.k_n},
         {"p", r.p},
         {"a_p", r.a_p},
         {"a_n_T", r.a_n_T},
         {"b_stat", r.b_stat},
         {"vbar11", r.vbar11},
         {"vbar22", r.vbar22},
         {"vbar12", r.vbar12},
         {"vbar", r.vbar},
         {"z_stat", r.z_stat},
         {"n_windows", r.n_windows},
         {"n_skipped", r.n_skipped},
         {"n_invalid_spot", r.spot.n_invalid},
         {"null_note", r.null_note}};
  if (include_series) {
    json s = json::array();
    for (size_t i = 0; i < r.spot.r_hat.size(); ++i)
      if (r.spot.valid[i]) s.push_back(r.spot.r_hat[i]);
      else s.push_back(nullptr);
    j["spot_series"] = s;
  }
  return j;
}

json to_json(const PathOutcome& p) {
  json j{{"index", p.index}, {"ok", p.ok}};
  if (!p.ok) {
    j["error"] = p.error;
    return j;
  }
  j["report"] = to_json(p.report);
  if (p.has_const_rank) {
    j["const_rank"] = to_json(p.const_rank);
    j["median_spot"] = p.median_spot;
    json decs = json::array();
    for (const auto& d : p.const_rank_decisions)
      decs.push_back(json{{"alpha", d.alpha}, {"reject", d.reject}, {"quantile", d.quantile}});
    j["const_rank_decisions"] = decs;
  }
  return j;
}

json to_json(const StudyAggregates& a) {
  json lp = json::array();
  for (const auto& c : a.level_power)
    lp.push_back(json{{"hypothesis", c.hypothesis},
                      {"alpha", c.alpha},
                      {"reject_freq", c.reject_freq},
                      {"se", c.se},
                      {"n", c.n}});
  json nm = json::array();
  for (const auto& c : a.normality)
    nm.push_back(json{{"hypothesis", c.hypothesis}, {"ks", c.ks}, {"p", c.p}});
  json crl = json::array();
  for (const auto& c : a.const_rank_level)
    crl.push_back(json{{"alpha", c.alpha}, {"reject_freq", c.reject_freq}, {"se", c.se}, {"n", c.n}});
  return json{{"n_paths", a.n_paths},
              {"n_ok", a.n_ok},
              {"n_degenerate", a.n_degenerate},
              {"true_max_rank", a.true_max_rank},
              {"mean_r_hat", a.mean_r_hat},
              {"sd_r_hat", a.sd_r_hat},
              {"frac_rounded_correct", a.frac_rounded_correct},
              {"level_power", lp},
              {"normality", nm},
              {"mean_b", a.mean_b},
              {"sd_b", a.sd_b},
              {"mean_z", a.mean_z},
              {"const_rank_level", crl},
              {"mean_median_spot", a.mean_median_spot}};
}

json to_json(const StudyConfig& c) {
  json scen{{"name", c.scenario.name},
            {"d", c.scenario.d},
            {"q", c.scenario.q},
            {"r", c.scenario.r},
            {"r_before", c.scenario.r_before},
            {"r_after", c.scenario.r_after},
            {"switch_time", c.scenario.switch_time},
            {"ramp_width", c.scenario.ramp_width},
            {"vol_modulation", c.scenario.vol_modulation},
            {"modulation_period", c.scenario.modulation_period}};
  json hyps = json::array();
  for (const auto& h : c.hypotheses)
    hyps.push_back(json{{"kind", kind_name(h.kind)}, {"r", h.r}});
  json j{{"scenario", scen},
         {"t_max", c.t_max},
         {"n_obs", c.n_obs},
         {"refine", c.refine},
         {"alphas", c.alphas},
         {"hypotheses", hyps},
         {"n_paths", c.n_paths},
         {"master_seed", c.master_seed},
         {"const_rank",
          json{{"enabled", c.const_rank.enabled}, {"p", c.const_rank.p}, {"k_n", c.const_rank.k_n}}}};
  j["theta"] = c.theta.rows() == 0 ? json("identity") : matrix_to_json(c.theta);
  if (!c.out_dir.empty()) j["out_dir"] = c.out_dir;
  return j;
}

json to_json(const StudyResult& r) {
  json paths = json::array();
  for (const auto& p : r.paths) paths.push_back(to_json(p));
  return json{{"version", r.version},
              {"config_hash", r.config_hash},
              {"config", to_json(r.config)},
              {"aggregates", to_json(r.aggregates)},
              {"paths", paths}};
}

StudyConfig study_config_from_json(const json& j) {
  StudyConfig c;
  try {
    const json& scen = j.at("scenario");
    c.scenario.name = scen.at("name").get<std::string>();
    c.scenario.d = scen.value("d", 2);
    c.scenario.q = scen.value("q", 0);
    c.scenario.r = scen.value("r", 1);
    c.scenario.r_before = scen.value("r_before", 1);
    c.scenario.r_after = scen.value("r_after", 2);
    c.scenario.switch_time = scen.value("switch_time", 0.5);
    c.scenario.ramp_width = scen.value("ramp_width", 1e-5);
    c.scenario.vol_modulation = scen.value("vol_modulation", 0.0);
    c.scenario.modulation_period = scen.value("modulation_period", 1.0);
    c.t_max = j.value("t_max", 1.0);
    c.n_obs = j.value("n_obs", 20000);
    c.refine = j.value("refine", 8);
    if (j.contains("theta") && !j.at("theta").is_string()) c.theta = matrix_from_json(j.at("theta"));
    if (j.contains("alphas")) c.alphas = j.at("alphas").get<std::vector<double>>();
    c.hypotheses.clear();
    if (j.contains("hypotheses"))
      for (const auto& h : j.at("hypotheses"))
        c.hypotheses.push_back({kind_from_name(h.at("kind").get<std::string>()), h.at("r").get<int>()});
    if (j.contains("const_rank")) {
      const json& cr = j.at("const_rank");
      c.const_rank.enabled = cr.value("enabled", false);
      c.const_rank.p = cr.value("p", 1.0);
      if (cr.contains("k_n") && !cr.at("k_n").is_string())  // "auto" == 0
        c.const_rank.k_n = cr.at("k_n").get<int>();
    }
    c.n_paths = j.value("n_paths", 100);
    c.master_seed = j.value("master_seed", static_cast<std::uint64_t>(1));
    c.out_dir = j.value("out_dir", std::string());
  } catch (const json::exception& e) {
    throw config_error(std::string("study config: ") + e.what());
  }
  return c;
}

ranktest::RankTestReport rank_report_from_json(const json& j) {
  ranktest::RankTestReport r;
  r.d = j.at("d").get<int>();
  r.delta_n = j.at("delta_n").get<double>();
  r.t_max = j.at("t_max").get<double>();
  r.n_blocks = j.at("n_blocks").get<int>();
  r.s1 = j.at("s1").get<double>();
  r.s2 = j.at("s2").get<double>();
  r.r_hat = j.at("r_hat").get<double>();
  r.r_rounded = j.at("r_rounded").get<int>();
  r.v11 = j.at("v11").get<double>();
  r.v22 = j.at("v22").get<double>();
  r.v12 = j.at("v12").get<double>();
  r.v_feasible = j.at("v_feasible").get<double>();
  r.v_prime = j.at("v_prime").get<double>();
  for (const auto& dj : j.at("decisions")) {
    ranktest::TestDecision d;
    d.hypothesis.kind = kind_from_name(dj.at("kind").get<std::string>());
    d.hypothesis.r = dj.at("r").get<int>();
    d.alpha = dj.at("alpha").get<double>();
    d.reject = dj.at("reject").get<bool>();
    d.standardized = dj.at("standardized").is_number() ? dj.at("standardized").get<double>()
                                                       : std::numeric_limits<double>::infinity();
    d.quantile = dj.at("quantile").get<double>();
    r.decisions.push_back(d);
  }
  return r;
}

PathOutcome path_outcome_from_json(const json& j) {
  PathOutcome p;
  p.index = j.at("index").get<int>();
  p.ok = j.at("ok").get<bool>();
  if (!p.ok) {
    p.error = j.value("error", std::string());
    return p;
  }
  p.report = rank_report_from_json(j.at("report"));
  if (j.contains("const_rank")) {
    p.has_const_rank = true;
    const json& cr = j.at("const_rank");
    p.const_rank.k_n = cr.at("k_n").get<int>();
    p.const_rank.p = cr.at("p").get<double>();
    p.const_rank.a_p = cr.at("a_p").get<double>();
    p.const_rank.a_n_T = cr.at("a_n_T").get<double>();
    p.const_rank.b_stat = cr.at("b_stat").get<double>();
    p.const_rank.vbar11 = cr.at("vbar11").get<double>();
    p.const_rank.vbar22 = cr.at("vbar22").get<double>();
    p.const_rank.vbar12 = cr.at("vbar12").get<double>();
    p.const_rank.vbar = cr.at("vbar").get<double>();
    p.const_rank.z_stat = cr.at("z_stat").is_number()
                              ? cr.at("z_stat").get<double>()
                              : std::copysign(std::numeric_limits<double>::infinity(),
                                              p.const_rank.b_stat);
    p.const_rank.n_windows = cr.at("n_windows").get<int>();
    p.const_rank.n_skipped = cr.at("n_skipped").get<int>();
    p.median_spot = j.contains("median_spot") && j.at("median_spot").is_number()
                        ? j.at("median_spot").get<double>()
                        : std::numeric_limits<double>::quiet_NaN();
    for (const auto& dj : j.at("const_rank_decisions")) {
      ranktest::ConstRankDecision d;
      d.alpha = dj.at("alpha").get<double>();
      d.reject = dj.at("reject").get<bool>();
      d.quantile = dj.at("quantile").get<double>();
      p.const_rank_decisions.push_back(d);
    }
  }
  return p;
}

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string config_hash(const StudyConfig& c) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(to_json(c).dump())));
  return buf;
}

namespace {

void write_text(const std::string& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw config_error("cannot open output file " + file);
  out << text;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_study_outputs(const StudyResult& result, const std::string& dir) {
  std::filesystem::create_directories(dir);
  write_text(dir + "/study_result.json", to_json(result).dump(2) + "\n");

  std::string lp = "hypothesis,alpha,n_obs,reject_freq,se\n";
  for (const auto& c : result.aggregates.level_power)
    lp += c.hypothesis + "," + fmt(c.alpha) + "," + std::to_string(result.config.n_obs) + "," +
          fmt(c.reject_freq) + "," + fmt(c.se) + "\n";
  for (const auto& c : result.aggregates.const_rank_level)
    lp += c.hypothesis + "," + fmt(c.alpha) + "," + std::to_string(result.config.n_obs) + "," +
          fmt(c.reject_freq) + "," + fmt(c.se) + "\n";
  write_text(dir + "/level_power.csv", lp);

  std::string nm = "hypothesis,ks,p\n";
  for (const auto& c : result.aggregates.normality)
    nm += c.hypothesis + "," + fmt(c.ks) + "," + fmt(c.p) + "\n";
  write_text(dir + "/normality.csv", nm);

  for (const auto& p : result.paths) {
    if (!p.ok || !p.has_const_rank) continue;
    std::string sp = "i,t,r_hat_spot\n";
    double span = 2.0 * p.report.d * p.report.delta_n;
    for (size_t i = 0; i < p.const_rank.spot.r_hat.size(); ++i) {
      if (!p.const_rank.spot.valid[i]) continue;
      sp += std::to_string(i) + "," + fmt(i * span) + "," + fmt(p.const_rank.spot.r_hat[i]) + "\n";
    }
    write_text(dir + "/spot_series.csv", sp);
    break;  // first healthy path only
  }
}

void write_blocks_csv(const ranktest::PerturbedBlocks& blocks, const std::string& file) {
  std::string s = "i,f1,f2\n";
  for (int i = 0; i < blocks.n_blocks(); ++i)
    s += std::to_string(i) + "," + fmt(blocks.f1[i]) + "," + fmt(blocks.f2[i]) + "\n";
  write_text(file, s);
}

}  // namespace volrank::harness
