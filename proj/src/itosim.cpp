#include "volrank/itosim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "volrank/detalg.hpp"
#include "volrank/rng.hpp"

namespace volrank::itosim {

int RankProfile::rank_at(double t) const {
  if (segments.empty()) return 0;
  int r = segments.front().r;
  for (const auto& s : segments) {
    if (s.t_from <= t) r = s.r;
    else break;
  }
  return r;
}

int RankProfile::max_rank(double t_max) const {
  int m = 0;
  for (const auto& s : segments)
    if (s.t_from < t_max) m = std::max(m, s.r);
  return m;
}

Matrix ModelSpec::sigma_at(double t, const Vector& x) const {
  if (sigma_explicit) return sigma_explicit(t, x);
  return sigma0;
}
Vector ModelSpec::b_at(double t, const Vector& x) const {
  if (b_explicit) return b_explicit(t, x);
  return b0.empty() ? Vector(d, 0.0) : b0;
}
Tensor3 ModelSpec::v_at(double t, const Vector& x) const {
  if (v_explicit) return v_explicit(t, x);
  return v0.empty() ? Tensor3(d, q, q) : v0;
}

PathSample simulate(const ModelSpec& model, double t_max, double delta_n, int refine,
                    std::uint64_t seed, bool keep_latent) {
  const int d = model.d, q = model.q;
  if (delta_n <= 0.0) throw config_error("simulate: delta_n must be positive");
  if (refine < 1) throw config_error("simulate: refine must be >= 1");
  if (t_max < 2.0 * d * delta_n - 1e-12)
    throw too_short_path("simulate: t_max < 2*d*delta_n leaves no complete block");
  if (static_cast<int>(model.x0.size()) != d) throw config_error("simulate: x0 has wrong dimension");

  const int n_incr = static_cast<int>(std::floor(t_max / delta_n + 1e-9));
  const double h = delta_n / refine;
  const double sqh = std::sqrt(h);

  SimState st;
  st.t = 0.0;
  st.x = model.x0;
  st.sigma = model.sigma_explicit ? model.sigma_explicit(0.0, st.x) : model.sigma0;
  if (st.sigma.rows() != d || st.sigma.cols() != q)
    throw config_error("simulate: sigma has wrong shape");
  st.b = model.b_at(0.0, st.x);
  st.v = model.v_at(0.0, st.x);

  PathSample out;
  out.delta_n = delta_n;
  out.t_max = t_max;
  out.d = d;
  out.seed = seed;
  out.scenario = model.scenario;
  out.obs.reserve(static_cast<size_t>(n_incr + 1) * d);
  auto record = [&](const SimState& s) {
    out.obs.insert(out.obs.end(), s.x.begin(), s.x.end());
    if (keep_latent) {
      out.latent_sigma.push_back(s.sigma);
      out.latent_b.push_back(s.b);
      out.latent_v.push_back(s.v);
    }
  };
  record(st);

  NormalRng rng(substream(seed, 0));
  Vector dw(q);
  for (int i = 1; i <= n_incr; ++i) {
    for (int s = 0; s < refine; ++s) {
      double t = ((static_cast<double>(i) - 1.0) * refine + s) * h;
      for (int m = 0; m < q; ++m) dw[m] = sqh * rng.normal();

      Vector x_new = st.x;
      for (int l = 0; l < d; ++l) {
        double inc = st.b[l] * h;
        for (int m = 0; m < q; ++m) inc += st.sigma(l, m) * dw[m];
        x_new[l] += inc;
      }

      Matrix sigma_new;
      if (model.sigma_explicit) {
        sigma_new = model.sigma_explicit(t + h, x_new);
      } else {
        sigma_new = st.sigma + st.v.contract(dw);
        if (model.sigma_drift) sigma_new = sigma_new + h * model.sigma_drift(t, st);
      }

      Vector b_new;
      if (model.b_explicit) {
        b_new = model.b_explicit(t + h, x_new);
      } else {
        b_new = st.b;
        if (model.b_drift) {
          Vector a = model.b_drift(t, st);
          for (int l = 0; l < d; ++l) b_new[l] += a[l] * h;
        }
        if (model.b_vol) {
          Matrix vp = model.b_vol(t, st);
          for (int l = 0; l < d; ++l)
            for (int m = 0; m < q; ++m) b_new[l] += vp(l, m) * dw[m];
        }
      }

      Tensor3 v_new;
      if (model.v_explicit) {
        v_new = model.v_explicit(t + h, x_new);
      } else {
        v_new = st.v;
        if (model.v_drift) {
          Tensor3 a2 = model.v_drift(t, st);
          for (size_t k = 0; k < v_new.data().size(); ++k) v_new.data()[k] += a2.data()[k] * h;
        }
        if (model.v_vol) {
          Tensor4 v2 = model.v_vol(t, st);
          if (!v2.empty()) v_new = tensor3_add(v_new, v2.contract(dw));
        }
      }

      st.x = std::move(x_new);
      st.sigma = std::move(sigma_new);
      st.b = std::move(b_new);
      st.v = std::move(v_new);
      st.t = t + h;
    }
    record(st);
  }
  if (!std::all_of(out.obs.begin(), out.obs.end(), [](double v) { return std::isfinite(v); }))
    throw config_error("simulate: path exploded (non-finite observations); check coefficients");
  return out;
}

namespace {

constexpr double kTwoPi = 6.283185307179586;

// d x q matrix with ones on the first r diagonal slots.
Matrix rank_pattern(int d, int q, int r) {
  Matrix m(d, q);
  for (int i = 0; i < r; ++i) m(i, i) = 1.0;
  return m;
}

double smoothstep(double u) { return u <= 0.0 ? 0.0 : u >= 1.0 ? 1.0 : u * u * (3.0 - 2.0 * u); }

void probe_rank_consistency(const ModelSpec& model, double horizon) {
  for (int k = 0; k <= 100; ++k) {
    double t = horizon * k / 100.0;
    int want = model.rank_profile.rank_at(t);
    int got = detalg::rank(model.sigma_at(t, model.x0));
    if (got != want)
      throw config_error("scenario: sigma rank " + std::to_string(got) + " at t=" +
                         std::to_string(t) + " does not match declared rank " + std::to_string(want));
  }
}

}  // namespace

ModelSpec scenario(const ScenarioParams& p) {
  ModelSpec m;
  m.scenario = p.name;
  m.d = p.d;
  if (m.d < 1) throw config_error("scenario: d must be >= 1");

  if (p.name == "constant_rank") {
    m.q = p.q > 0 ? p.q : p.d;
    if (p.r > std::min(m.d, m.q) || p.r < 0) throw config_error("scenario: infeasible rank r");
    m.x0 = Vector(m.d, 0.0);
    Matrix base = rank_pattern(m.d, m.q, p.r);
    double amp = p.vol_modulation, period = p.modulation_period;
    if (amp < 0.0 || amp >= 1.0) throw config_error("scenario: vol_modulation must lie in [0,1)");
    m.sigma_explicit = [base, amp, period](double t, const Vector&) {
      double scale = 1.0 + amp * std::sin(kTwoPi * t / period);
      return scale * base;
    };
    m.b_explicit = [d = m.d](double, const Vector&) { return Vector(d, 0.0); };
    m.v_explicit = [d = m.d, q = m.q](double, const Vector&) { return Tensor3(d, q, q); };
    m.coeffs_deterministic = true;
    m.rank_profile.segments = {{0.0, p.r}};
  } else if (p.name == "rank_switch") {
    m.q = p.q > 0 ? p.q : p.d;
    if (p.r_before > std::min(m.d, m.q) || p.r_after > std::min(m.d, m.q) || p.r_before < 0 ||
        p.r_after < 0)
      throw config_error("scenario: infeasible rank");
    if (p.switch_time <= 0.0) throw config_error("scenario: switch_time must be positive");
    m.x0 = Vector(m.d, 0.0);
    Matrix before = rank_pattern(m.d, m.q, p.r_before);
    Matrix after = rank_pattern(m.d, m.q, p.r_after);
    double ts = p.switch_time, w = p.ramp_width;
    if (w <= 0.0) throw config_error("scenario: ramp_width must be positive");
    // C^1 ramp on [ts - w, ts]; the blend reaches its final value exactly at
    // the declared switch time.
    m.sigma_explicit = [before, after, ts, w](double t, const Vector&) {
      double s = smoothstep((t - (ts - w)) / w);
      return (1.0 - s) * before + s * after;
    };
    m.b_explicit = [d = m.d](double, const Vector&) { return Vector(d, 0.0); };
    m.v_explicit = [d = m.d, q = m.q](double, const Vector&) { return Tensor3(d, q, q); };
    m.coeffs_deterministic = true;
    m.rank_profile.segments = {{0.0, p.r_before}, {ts, p.r_after}};
  } else if (p.name == "integrated_diffusion") {
    m.q = p.q > 0 ? p.q : p.d;
    m.x0 = Vector(m.d, 0.0);
    m.sigma_explicit = [d = m.d, q = m.q](double, const Vector&) { return Matrix(d, q); };
    m.v_explicit = [d = m.d, q = m.q](double, const Vector&) { return Tensor3(d, q, q); };
    // b is an Ornstein-Uhlenbeck-type continuous semimartingale.
    m.b0 = Vector(m.d, 0.5);
    m.b_drift = [](double, const SimState& st) {
      Vector a(st.b.size());
      for (size_t l = 0; l < st.b.size(); ++l) a[l] = -1.0 * st.b[l];
      return a;
    };
    m.b_vol = [d = m.d, q = m.q](double, const SimState&) {
      Matrix vp(d, q);
      for (int i = 0; i < std::min(d, q); ++i) vp(i, i) = 0.5;
      return vp;
    };
    m.coeffs_deterministic = false;  // b is random (sigma is still identically 0)
    m.rank_profile.segments = {{0.0, 0}};
  } else if (p.name == "sde_case") {
    m.q = p.q > 0 ? p.q : p.d;
    if (p.r > std::min(m.d, m.q) || p.r < 1) throw config_error("scenario: infeasible rank r");
    m.x0 = Vector(m.d, 0.0);
    Matrix base = rank_pattern(m.d, m.q, p.r);
    // sigma = m(X^1) * base with m smooth and bounded away from 0, so the
    // rank never moves; b = -X/2.  Both are C^2 functions of the state.
    auto scale = [](double x1) { return 1.0 + 0.25 * std::tanh(x1); };
    auto dscale = [](double x1) { double c = std::cosh(x1); return 0.25 / (c * c); };
    m.sigma_explicit = [base, scale](double, const Vector& x) { return scale(x[0]) * base; };
    m.b_explicit = [](double, const Vector& x) {
      Vector b(x.size());
      for (size_t l = 0; l < x.size(); ++l) b[l] = -0.5 * x[l];
      return b;
    };
    // Volatility of sigma implied by Ito's formula on m(X^1).
    m.v_explicit = [base, scale, dscale, d = m.d, q = m.q](double, const Vector& x) {
      Tensor3 v(d, q, q);
      double g = dscale(x[0]) * scale(x[0]);
      for (int l = 0; l < d; ++l)
        for (int mm = 0; mm < q; ++mm)
          for (int k = 0; k < q; ++k) v(l, mm, k) = g * base(l, mm) * base(0, k);
      return v;
    };
    m.coeffs_deterministic = false;
    m.rank_profile.segments = {{0.0, p.r}};
  } else if (p.name == "degenerate_d3q1") {
    m.d = 3;
    m.q = 1;
    m.x0 = Vector(3, 0.0);
    m.sigma0 = Matrix(3, 1);
    m.sigma0(0, 0) = 1.0;
    m.sigma0(1, 0) = 0.6;
    m.sigma0(2, 0) = -0.4;
    Tensor3 v(3, 1, 1);
    v(0, 0, 0) = 0.3;
    v(1, 0, 0) = -0.2;
    v(2, 0, 0) = 0.25;
    m.v_explicit = [v](double, const Vector&) { return v; };
    m.b_explicit = [](double, const Vector&) { return Vector(3, 0.0); };
    m.coeffs_deterministic = false;
    m.rank_profile.segments = {{0.0, 1}};
  } else {
    throw config_error("scenario: unknown name '" + p.name + "'");
  }

  if (m.coeffs_deterministic) {
    probe_rank_consistency(m, p.probe_horizon);
  } else if (!m.sigma_explicit) {
    int got = detalg::rank(m.sigma0);
    if (got != m.rank_profile.rank_at(0.0))
      throw config_error("scenario: rank(sigma0) does not match the declared profile");
  }
  return m;
}

// ---- path files -------------------------------------------------------------

void write_csv(const PathSample& path, const std::string& file) {
  std::ofstream out(file);
  if (!out) throw config_error("write_csv: cannot open " + file);
  out << "t";
  for (int j = 1; j <= path.d; ++j) out << ",x_" << j;
  out << "\n";
  char buf[32];
  const int n = path.n_increments();
  for (int i = 0; i <= n; ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", i * path.delta_n);
    out << buf;
    for (int j = 0; j < path.d; ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", path.at(i, j));
      out << ',' << buf;
    }
    out << "\n";
  }
}

PathSample read_csv(const std::string& file, double delta_n) {
  std::ifstream in(file);
  if (!in) throw config_error("read_csv: cannot open " + file);
  std::string line;
  if (!std::getline(in, line)) throw config_error("read_csv: empty file");
  // header: t,x_1,...,x_d
  int d = 0;
  {
    std::stringstream ss(line);
    std::string field;
    if (!std::getline(ss, field, ',') || field != "t")
      throw config_error("read_csv: header must start with 't'");
    while (std::getline(ss, field, ',')) ++d;
    if (d < 1) throw config_error("read_csv: need at least one coordinate column");
  }
  std::vector<double> ts;
  std::vector<double> obs;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    int col = 0;
    while (std::getline(ss, field, ',')) {
      if (field.empty()) throw config_error("read_csv: missing value");
      size_t pos = 0;
      double v = std::stod(field, &pos);
      if (!std::isfinite(v)) throw config_error("read_csv: non-finite value");
      if (col == 0) ts.push_back(v);
      else obs.push_back(v);
      ++col;
    }
    if (col != d + 1) throw config_error("read_csv: ragged row");
  }
  if (ts.size() < 2) throw config_error("read_csv: need at least two rows");
  double dt = delta_n > 0.0 ? delta_n : ts[1] - ts[0];
  if (dt <= 0.0) throw config_error("read_csv: non-increasing time grid");
  for (size_t i = 1; i < ts.size(); ++i) {
    double gap = ts[i] - ts[i - 1];
    if (std::abs(gap - dt) > 1e-9 * std::abs(dt))
      throw config_error("read_csv: time grid is not equidistant within 1e-9 relative jitter");
  }
  PathSample p;
  p.d = d;
  p.delta_n = dt;
  p.t_max = dt * (ts.size() - 1);
  p.obs = std::move(obs);
  p.scenario = "ingested";
  return p;
}

void write_binary(const PathSample& path, const std::string& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw config_error("write_binary: cannot open " + file);
  const char magic[8] = {'V', 'R', 'P', 'A', 'T', 'H', '0', '1'};
  out.write(magic, 8);
  out.write(reinterpret_cast<const char*>(path.obs.data()),
            static_cast<std::streamsize>(path.obs.size() * sizeof(double)));
  nlohmann::json meta{{"d", path.d},
                      {"delta_n", path.delta_n},
                      {"t_max", path.t_max},
                      {"seed", path.seed},
                      {"scenario", path.scenario},
                      {"rows", path.n_increments() + 1}};
  std::ofstream side(file + ".json");
  if (!side) throw config_error("write_binary: cannot open sidecar for " + file);
  side << meta.dump(2) << "\n";
}

PathSample read_binary(const std::string& file) {
  std::ifstream side(file + ".json");
  if (!side) throw config_error("read_binary: missing sidecar " + file + ".json");
  nlohmann::json meta = nlohmann::json::parse(side);
  PathSample p;
  p.d = meta.at("d").get<int>();
  p.delta_n = meta.at("delta_n").get<double>();
  p.t_max = meta.at("t_max").get<double>();
  p.seed = meta.value("seed", 0ULL);
  p.scenario = meta.value("scenario", std::string());
  const int rows = meta.at("rows").get<int>();

  std::ifstream in(file, std::ios::binary);
  if (!in) throw config_error("read_binary: cannot open " + file);
  char magic[8];
  in.read(magic, 8);
  if (in.gcount() != 8 || std::memcmp(magic, "VRPATH01", 8) != 0)
    throw config_error("read_binary: bad magic in " + file);
  p.obs.resize(static_cast<size_t>(rows) * p.d);
  in.read(reinterpret_cast<char*>(p.obs.data()),
          static_cast<std::streamsize>(p.obs.size() * sizeof(double)));
  if (in.gcount() != static_cast<std::streamsize>(p.obs.size() * sizeof(double)))
    throw config_error("read_binary: truncated payload in " + file);
  return p;
}

}  // namespace volrank::itosim
