#include "noma/sca.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace noma {

namespace {

constexpr double kLn2 = 0.6931471805599453;
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTauMinRel = 1e-9;  // strict-positivity floor, relative to T_max

// Everything the builders need, in solver units: times / T_max, energies /
// max E_max, rates / (W * T_max). gamma_t[n] = gamma[n] * E_ref / T_max is the
// per-unit-energy SNR-seconds contribution.
struct Ctx {
  int n = 0;
  double w_hz = 0.0;
  double t_max = 0.0;
  double e_ref = 0.0;
  double k_scaled = 0.0;
  double tau_min = kTauMinRel;
  std::vector<double> gamma_t;
  std::vector<double> e_max;  // scaled budgets

  double suffix_cap(int from) const {  // sum_{j >= from} gamma_t_j * e_max_j
    double s = 0.0;
    for (int j = from; j < n; ++j) s += gamma_t[j] * e_max[j];
    return s;
  }
};

Ctx make_ctx(const Scenario& sc, const ChannelRealization& ch) {
  Ctx c;
  c.n = sc.n_devices;
  c.w_hz = sc.bandwidth_hz;
  c.t_max = sc.t_max_s;
  c.e_ref = *std::max_element(sc.e_max_j.begin(), sc.e_max_j.end());
  c.k_scaled = sc.k_common_bits / (sc.bandwidth_hz * sc.t_max_s);
  c.gamma_t.resize(c.n);
  c.e_max.resize(c.n);
  for (int i = 0; i < c.n; ++i) {
    c.gamma_t[i] = ch.gamma[i] * c.e_ref / c.t_max;
    c.e_max[i] = sc.e_max_j[i] / c.e_ref;
  }
  return c;
}

double persp(double a, double b) {
  if (a <= 0.0) return 0.0;
  return a * std::log1p(b / a) / kLn2;
}

// Scaled Taylor terms of one expansion pair (tau, s3) with unit bandwidth.
struct Lin {
  std::vector<double> d, q, rhs;  // row reads q(tau,s2) - d*tau - q*s3 >= phi + rhs
};

Lin linearize(double tau, const std::vector<double>& s3) {
  Lin l;
  const SlackPoint pt{tau, s3};
  const TaylorTerms tt = taylor_terms(pt, 1.0);
  const std::size_t m = s3.size();
  l.d.resize(m);
  l.q.resize(m);
  l.rhs.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    l.d[i] = tt.d[i];
    l.q[i] = tt.q[i];
    // Euler identity makes this zero up to roundoff; kept for bit consistency
    // between the rows and the polish step.
    l.rhs[i] = tt.b[i] - tt.d[i] * tau - tt.q[i] * s3[i];
  }
  return l;
}

struct Blocks {
  int phi = -1, tau_c = -1, tau_i = -1, e_c = -1, e_i = -1;
  int s1 = -1, s2 = -1, s3 = -1, t_slot = -1, sigma = -1, u2 = -1, u3 = -1;
  int n_common = 0;  // devices in the e_c block
};

struct Built {
  ConvexSubproblem p;
  Blocks b;
  std::vector<int> common_devices;  // e_c block position -> device id
};

Built build_core(const Ctx& c, const detail::ScaVariant& v,
                 const detail::VariantPoint& pt) {
  const int n = c.n;
  const bool has_stage1 = c.k_scaled > 0.0;
  std::vector<int> common = v.common_devices;
  if (common.empty()) {
    common.resize(n);
    std::iota(common.begin(), common.end(), 0);
  }

  Built out;
  ConvexSubproblem& p = out.p;
  Blocks& b = out.b;
  out.common_devices = common;
  b.n_common = static_cast<int>(common.size());

  int off = 0;
  auto add_block = [&](const std::string& name, int count) {
    p.layout.push_back({name, off, count});
    const int at = count > 0 ? off : -1;
    off += count;
    return at;
  };

  b.phi = add_block("phi", 1);
  b.tau_c = add_block("tau_c", has_stage1 ? 1 : 0);
  b.tau_i = add_block("tau_i", 1);
  b.e_c = add_block("e_c", has_stage1 ? b.n_common : 0);
  b.e_i = add_block("e_i", n);
  if (v.oma_stage2) {
    b.t_slot = add_block("t_slot", n);
    b.sigma = add_block("sigma", n);
  } else {
    b.s2 = add_block("s2", n);
    b.s3 = add_block("s3", n - 1);
  }
  if (has_stage1) {
    if (v.per_device_common) {
      b.u2 = add_block("u2", n);
      b.u3 = add_block("u3", n - 1);
    } else {
      b.s1 = add_block("s1", 1);
    }
  }
  p.n_vars = off;

  p.objective.assign(p.n_vars, 0.0);
  p.objective[b.phi] = 1.0;
  p.lower.assign(p.n_vars, 0.0);
  p.upper.assign(p.n_vars, kInf);
  p.scale_hint.assign(p.n_vars, 1.0);

  const double rate_cap = std::max(1.0, persp(1.0, c.suffix_cap(0)));
  p.scale_hint[b.phi] = rate_cap;
  if (b.tau_c >= 0) p.lower[b.tau_c] = c.tau_min;
  p.lower[b.tau_i] = c.tau_min;
  // Slack scales follow the current expansion point, not the budget caps: a
  // weak device can sit many orders of magnitude below its cap, and cap
  // scaling then destroys the conditioning of the rows it appears in.
  auto slack_scale = [&](const std::vector<double>& carried, int i,
                         double fallback, int cap_from) {
    const double cap = std::max(c.suffix_cap(cap_from), 1e-12);
    const double v = i < static_cast<int>(carried.size()) ? carried[i] : fallback;
    return std::min(std::max({v, 1e-6 * cap, 1e-12}), cap);
  };
  if (b.s1 >= 0) p.scale_hint[b.s1] = std::max(1e-12, c.suffix_cap(0));
  for (int i = 0; b.s2 >= 0 && i < n; ++i)
    p.scale_hint[b.s2 + i] = slack_scale(
        pt.s2_scale, i, i > 0 ? pt.stage2.s3[i - 1] : c.suffix_cap(0), i);
  for (int i = 0; b.s3 >= 0 && i < n - 1; ++i)
    p.scale_hint[b.s3 + i] =
        slack_scale(pt.stage2.s3, i, c.suffix_cap(i + 1), i + 1);
  for (int i = 0; b.u2 >= 0 && i < n; ++i)
    p.scale_hint[b.u2 + i] =
        slack_scale(pt.u2_scale, i, i > 0 ? pt.u3[i - 1] : c.suffix_cap(0), i);
  for (int i = 0; b.u3 >= 0 && i < n - 1; ++i)
    p.scale_hint[b.u3 + i] = slack_scale(pt.u3, i, c.suffix_cap(i + 1), i + 1);
  for (int i = 0; b.t_slot >= 0 && i < n; ++i)
    p.lower[b.t_slot + i] = c.tau_min;
  for (int i = 0; b.sigma >= 0 && i < n; ++i)
    p.scale_hint[b.sigma + i] = std::max(1e-12, c.gamma_t[i] * c.e_max[i]);

  // --- time budget ---
  {
    LinearRow r;
    if (b.tau_c >= 0) r.coeffs.emplace_back(b.tau_c, 1.0);
    r.coeffs.emplace_back(b.tau_i, 1.0);
    r.rhs = 1.0;
    r.label = "time";
    p.linear_rows.push_back(std::move(r));
  }
  if (v.oma_stage2) {
    LinearRow r;
    for (int i = 0; i < n; ++i) r.coeffs.emplace_back(b.t_slot + i, 1.0);
    r.coeffs.emplace_back(b.tau_i, -1.0);
    r.rhs = 0.0;
    r.label = "time";
    p.linear_rows.push_back(std::move(r));
  }

  // --- per-device energy budget ---
  for (int i = 0; i < n; ++i) {
    LinearRow r;
    for (int kpos = 0; b.e_c >= 0 && kpos < b.n_common; ++kpos)
      if (common[static_cast<std::size_t>(kpos)] == i)
        r.coeffs.emplace_back(b.e_c + kpos, 1.0);
    r.coeffs.emplace_back(b.e_i + i, 1.0);
    r.rhs = c.e_max[i];
    r.label = "energy";
    p.linear_rows.push_back(std::move(r));
  }

  // --- stage-1 rows ---
  if (has_stage1 && !v.per_device_common) {
    PerspectiveRow pr;
    pr.a_index = b.tau_c;
    pr.b_index = b.s1;
    pr.weight = 1.0;
    pr.rhs = c.k_scaled;
    pr.label = "common_throughput";
    p.perspective_rows.push_back(std::move(pr));

    LinearRow r;
    r.coeffs.emplace_back(b.s1, 1.0);
    for (int kpos = 0; kpos < b.n_common; ++kpos)
      r.coeffs.emplace_back(b.e_c + kpos,
                            -c.gamma_t[common[static_cast<std::size_t>(kpos)]]);
    r.rhs = 0.0;
    r.label = "s1_coupling";
    p.linear_rows.push_back(std::move(r));
  }
  if (has_stage1 && v.per_device_common) {
    const Lin lin1 = linearize(pt.tau_c, pt.u3);
    for (int i = 0; i < n; ++i) {
      PerspectiveRow pr;
      pr.a_index = b.tau_c;
      pr.b_index = b.u2 + i;
      pr.weight = 1.0;
      pr.rhs = c.k_scaled;
      pr.label = "common_throughput";
      if (i < n - 1) {
        pr.linear.emplace_back(b.tau_c, -lin1.d[i]);
        pr.linear.emplace_back(b.u3 + i, -lin1.q[i]);
        pr.rhs += lin1.rhs[i];
      }
      p.perspective_rows.push_back(std::move(pr));
    }
    for (int i = 0; i < n; ++i) {
      LinearRow r;
      r.coeffs.emplace_back(b.u2 + i, 1.0);
      for (int j = i; j < n; ++j) r.coeffs.emplace_back(b.e_c + j, -c.gamma_t[j]);
      r.rhs = 0.0;
      r.label = "u2_coupling";
      p.linear_rows.push_back(std::move(r));
    }
    for (int i = 0; i < n - 1; ++i) {
      LinearRow r;
      r.coeffs.emplace_back(b.u3 + i, -1.0);
      for (int j = i + 1; j < n; ++j)
        r.coeffs.emplace_back(b.e_c + j, c.gamma_t[j]);
      r.rhs = 0.0;
      r.label = "u3_coupling";
      p.linear_rows.push_back(std::move(r));
    }
  }

  // --- stage-2 rows ---
  if (!v.oma_stage2) {
    const Lin lin2 = linearize(pt.stage2.tau_i, pt.stage2.s3);
    for (int i = 0; i < n; ++i) {
      PerspectiveRow pr;
      pr.a_index = b.tau_i;
      pr.b_index = b.s2 + i;
      pr.weight = 1.0;
      pr.linear.emplace_back(b.phi, -1.0);
      pr.rhs = 0.0;
      pr.label = "min_rate";
      if (i < n - 1) {
        pr.linear.emplace_back(b.tau_i, -lin2.d[i]);
        pr.linear.emplace_back(b.s3 + i, -lin2.q[i]);
        pr.rhs += lin2.rhs[i];
      }
      p.perspective_rows.push_back(std::move(pr));
    }
    for (int i = 0; i < n; ++i) {
      LinearRow r;
      r.coeffs.emplace_back(b.s2 + i, 1.0);
      for (int j = i; j < n; ++j) r.coeffs.emplace_back(b.e_i + j, -c.gamma_t[j]);
      r.rhs = 0.0;
      r.label = "s2_coupling";
      p.linear_rows.push_back(std::move(r));
    }
    for (int i = 0; i < n - 1; ++i) {
      LinearRow r;
      r.coeffs.emplace_back(b.s3 + i, -1.0);
      for (int j = i + 1; j < n; ++j)
        r.coeffs.emplace_back(b.e_i + j, c.gamma_t[j]);
      r.rhs = 0.0;
      r.label = "s3_coupling";
      p.linear_rows.push_back(std::move(r));
    }
  } else {
    for (int i = 0; i < n; ++i) {
      PerspectiveRow pr;
      pr.a_index = b.t_slot + i;
      pr.b_index = b.sigma + i;
      pr.weight = 1.0;
      pr.linear.emplace_back(b.phi, -1.0);
      pr.rhs = 0.0;
      pr.label = "min_rate";
      p.perspective_rows.push_back(std::move(pr));
    }
    for (int i = 0; i < n; ++i) {
      LinearRow r;
      r.coeffs.emplace_back(b.sigma + i, 1.0);
      r.coeffs.emplace_back(b.e_i + i, -c.gamma_t[i]);
      r.rhs = 0.0;
      r.label = "sigma_coupling";
      p.linear_rows.push_back(std::move(r));
    }
  }

  return out;
}

// Tightens the slack couplings exactly, recomputes phi as the smallest rate
// row value, and reports whether the stage-1 requirement still holds.
struct Polished {
  std::vector<double> x;
  double phi = 0.0;  // scaled
  bool stage1_ok = true;
};

Polished polish(const Ctx& c, const detail::ScaVariant& v,
                const detail::VariantPoint& pt, const Built& built,
                const std::vector<double>& x_in) {
  const int n = c.n;
  const Blocks& b = built.b;
  Polished out;
  out.x = x_in;
  std::vector<double>& x = out.x;

  double phi = kInf;
  if (!v.oma_stage2) {
    const Lin lin2 = linearize(pt.stage2.tau_i, pt.stage2.s3);
    const double tau = x[b.tau_i];
    double suffix = 0.0;
    std::vector<double> s2(n), s3(std::max(0, n - 1));
    for (int i = n - 1; i >= 0; --i) {
      if (i < n - 1) s3[i] = suffix;
      suffix += c.gamma_t[i] * x[b.e_i + i];
      s2[i] = suffix;
    }
    for (int i = 0; i < n; ++i) x[b.s2 + i] = s2[i];
    for (int i = 0; i < n - 1; ++i) x[b.s3 + i] = s3[i];
    for (int i = 0; i < n; ++i) {
      double row = persp(tau, s2[i]);
      if (i < n - 1)
        row -= lin2.d[i] * tau + lin2.q[i] * s3[i] + lin2.rhs[i];
      phi = std::min(phi, row);
    }
  } else {
    for (int i = 0; i < n; ++i) {
      const double sig = c.gamma_t[i] * x[b.e_i + i];
      x[b.sigma + i] = sig;
      phi = std::min(phi, persp(x[b.t_slot + i], sig));
    }
  }
  phi = std::max(phi, 0.0);
  out.phi = phi;
  x[b.phi] = phi;

  if (c.k_scaled > 0.0) {
    const double tau_c = x[b.tau_c];
    if (!v.per_device_common) {
      double s1 = 0.0;
      for (int kpos = 0; kpos < b.n_common; ++kpos)
        s1 += c.gamma_t[built.common_devices[static_cast<std::size_t>(kpos)]] *
              x[b.e_c + kpos];
      x[b.s1] = s1;
      out.stage1_ok =
          persp(tau_c, s1) >= c.k_scaled - 1e-9 * std::max(1.0, c.k_scaled);
    } else {
      const Lin lin1 = linearize(pt.tau_c, pt.u3);
      double suffix = 0.0;
      std::vector<double> u2(n), u3(std::max(0, n - 1));
      for (int i = n - 1; i >= 0; --i) {
        if (i < n - 1) u3[i] = suffix;
        suffix += c.gamma_t[i] * x[b.e_c + i];
        u2[i] = suffix;
      }
      for (int i = 0; i < n; ++i) x[b.u2 + i] = u2[i];
      for (int i = 0; i < n - 1; ++i) x[b.u3 + i] = u3[i];
      for (int i = 0; i < n; ++i) {
        double row = persp(tau_c, u2[i]);
        if (i < n - 1)
          row -= lin1.d[i] * tau_c + lin1.q[i] * u3[i] + lin1.rhs[i];
        if (row < c.k_scaled - 1e-9 * std::max(1.0, c.k_scaled))
          out.stage1_ok = false;
      }
    }
  }
  return out;
}

detail::VariantPoint next_point(const Ctx& c, const detail::ScaVariant& v,
                                const Built& built, const std::vector<double>& x) {
  const int n = c.n;
  const Blocks& b = built.b;
  detail::VariantPoint pt;
  pt.stage2.tau_i = x[b.tau_i];
  if (b.s3 >= 0)
    pt.stage2.s3.assign(x.begin() + b.s3, x.begin() + b.s3 + (n - 1));
  if (b.s2 >= 0) pt.s2_scale.assign(x.begin() + b.s2, x.begin() + b.s2 + n);
  if (v.per_device_common && b.tau_c >= 0) {
    pt.tau_c = x[b.tau_c];
    if (b.u3 >= 0) pt.u3.assign(x.begin() + b.u3, x.begin() + b.u3 + (n - 1));
    if (b.u2 >= 0) pt.u2_scale.assign(x.begin() + b.u2, x.begin() + b.u2 + n);
  }
  return pt;
}

Allocation extract_allocation(const Ctx& c, const Built& built,
                              const std::vector<double>& x) {
  const int n = c.n;
  const Blocks& b = built.b;
  Allocation a = Allocation::zeros(n);
  a.tau_i = x[b.tau_i] * c.t_max;
  if (b.tau_c >= 0) a.tau_c = x[b.tau_c] * c.t_max;
  for (int kpos = 0; b.e_c >= 0 && kpos < b.n_common; ++kpos)
    a.e_c[built.common_devices[static_cast<std::size_t>(kpos)]] =
        x[b.e_c + kpos] * c.e_ref;
  for (int i = 0; i < n; ++i) a.e_i[i] = x[b.e_i + i] * c.e_ref;
  return a;
}

detail::VariantPoint initial_point(const Ctx& c, const Scenario& sc,
                                   const ChannelRealization& ch,
                                   const detail::ScaVariant& v,
                                   const std::optional<SlackPoint>& init) {
  detail::VariantPoint pt;
  if (init) {
    if (static_cast<int>(init->s3.size()) != std::max(0, c.n - 1))
      throw std::invalid_argument("sca_solve: init.s3 has wrong length");
    if (!(init->tau_i > 0.0))
      throw std::invalid_argument("sca_solve: init.tau_i must be > 0");
    pt.stage2.tau_i = init->tau_i / c.t_max;
    pt.stage2.s3.resize(init->s3.size());
    for (std::size_t i = 0; i < init->s3.size(); ++i)
      pt.stage2.s3[i] = init->s3[i] / c.t_max;
  } else {
    const SlackPoint d = default_init(sc, ch);
    pt.stage2.tau_i = d.tau_i / c.t_max;
    pt.stage2.s3.resize(d.s3.size());
    for (std::size_t i = 0; i < d.s3.size(); ++i)
      pt.stage2.s3[i] = d.s3[i] / c.t_max;
  }
  pt.s2_scale.assign(c.n, 0.0);
  {
    double suffix = 0.0;
    for (int i = c.n - 1; i >= 0; --i) {
      suffix += c.gamma_t[i] * (0.5 * c.e_max[i]);
      pt.s2_scale[i] = suffix;
    }
  }
  if (v.per_device_common && c.k_scaled > 0.0) {
    pt.tau_c = 0.5;
    pt.u3.assign(std::max(0, c.n - 1), 0.0);
    pt.u2_scale.assign(c.n, 0.0);
    double suffix = 0.0;
    for (int i = c.n - 1; i >= 0; --i) {
      suffix += c.gamma_t[i] * (0.5 * c.e_max[i]);
      pt.u2_scale[i] = suffix;
      if (i >= 1) pt.u3[i - 1] = suffix;
    }
  }
  return pt;
}

}  // namespace

std::vector<double> ScaTrace::phi_series() const {
  std::vector<double> out;
  out.reserve(iterations.size());
  for (const auto& it : iterations) out.push_back(it.phi_bits);
  return out;
}

TaylorTerms taylor_terms(const SlackPoint& point, double w_hz) {
  if (!(point.tau_i > 0.0))
    throw std::domain_error("taylor_terms: tau_i must be > 0");
  TaylorTerms t;
  const std::size_t m = point.s3.size();
  t.b.resize(m);
  t.d.resize(m);
  t.q.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    if (point.s3[i] < 0.0)
      throw std::domain_error("taylor_terms: s3 must be >= 0");
    const double r = point.s3[i] / point.tau_i;
    t.b[i] = w_hz * persp(point.tau_i, point.s3[i]);
    t.d[i] = (w_hz / kLn2) * (std::log1p(r) - r / (1.0 + r));
    t.q[i] = w_hz / (kLn2 * (1.0 + r));
  }
  return t;
}

ConvexSubproblem build_subproblem(const Scenario& sc, const ChannelRealization& ch,
                                  const SlackPoint& point) {
  sc.validate();
  const Ctx c = make_ctx(sc, ch);
  detail::VariantPoint pt;
  pt.stage2.tau_i = point.tau_i / c.t_max;
  pt.stage2.s3.resize(point.s3.size());
  for (std::size_t i = 0; i < point.s3.size(); ++i)
    pt.stage2.s3[i] = point.s3[i] / c.t_max;
  Built built = build_core(c, detail::ScaVariant{}, pt);
  built.p.check_well_formed();
  return std::move(built.p);
}

SlackPoint default_init(const Scenario& sc, const ChannelRealization& ch) {
  SlackPoint pt;
  pt.tau_i = sc.t_max_s / 2.0;
  pt.s3.assign(std::max(0, sc.n_devices - 1), 0.0);
  double suffix = 0.0;
  for (int i = sc.n_devices - 1; i >= 1; --i) {
    suffix += ch.gamma[i] * (sc.e_max_j[i] / 2.0);
    pt.s3[i - 1] = suffix;
  }
  return pt;
}

namespace detail {

double tau_min_floor(const Scenario& sc) { return kTauMinRel * sc.t_max_s; }

ConvexSubproblem build_variant_subproblem(const Scenario& sc,
                                          const ChannelRealization& ch,
                                          const ScaVariant& variant,
                                          const VariantPoint& point) {
  const Ctx c = make_ctx(sc, ch);
  Built built = build_core(c, variant, point);
  built.p.check_well_formed();
  return std::move(built.p);
}

namespace {

VariantResult run_sca_loop(const Scenario& sc, const ChannelRealization& ch,
                           const ScaVariant& variant,
                           const std::optional<SlackPoint>& init, double eps,
                           int n_max) {
  sc.validate();
  const Ctx c = make_ctx(sc, ch);
  const int n = c.n;
  const double bits_scale = c.w_hz * c.t_max;
  const auto t_start = std::chrono::steady_clock::now();

  VariantResult out;
  out.allocation = Allocation::zeros(n);

  // The D.C. machinery only matters when there are linearized rows; otherwise
  // one subproblem solve is exact.
  const bool has_dc =
      (!variant.oma_stage2 && n > 1) ||
      (variant.per_device_common && c.k_scaled > 0.0 && n > 1);

  VariantPoint pt = initial_point(c, sc, ch, variant, init);

  std::vector<double> warm;
  bool have_iterate = false;
  std::vector<double> best_x;
  Built best_built;
  VariantPoint best_pt;
  double phi_prev = -kInf;

  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         t_start)
        .count();
  };

  const bool sca_trace = std::getenv("NOMA_SCA_TRACE") != nullptr;
  for (int m = 0; m <= n_max; ++m) {
    const auto it_start = std::chrono::steady_clock::now();
    Built built = build_core(c, variant, pt);
    const SolveOutcome sol =
        solve_subproblem(built.p, 1e-8, warm.empty() ? nullptr : &warm);
    if (sca_trace)
      std::fprintf(stderr,
                   "[sca] m=%d solver=%d obj=%.9g kkt=%.2e newton=%d %s\n", m,
                   static_cast<int>(sol.status), sol.objective,
                   sol.kkt_residual, sol.newton_steps, sol.diagnosis.c_str());

    if (sol.status == SolveStatus::Infeasible) {
      out.trace.status = have_iterate ? ScaStatus::IterLimit : ScaStatus::Infeasible;
      break;
    }
    if (sol.status == SolveStatus::NumericalFailure && !have_iterate) {
      out.trace.status = ScaStatus::IterLimit;  // no certified iterate exists
      break;
    }

    Polished pol = polish(c, variant, pt, built, sol.x);
    const double phi_bits = pol.phi * bits_scale;

    if (have_iterate &&
        (phi_bits < phi_prev || !pol.stage1_ok ||
         sol.status == SolveStatus::NumericalFailure)) {
      // Keep the last certified iterate; the subproblem value cannot
      // genuinely decrease, so this is solver noise.
      out.trace.status = sol.status == SolveStatus::Optimal
                             ? ScaStatus::Converged
                             : ScaStatus::IterLimit;
      break;
    }
    if (!pol.stage1_ok) {
      out.trace.status = ScaStatus::IterLimit;
      break;
    }

    const double it_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                      it_start)
            .count();
    out.trace.iterations.push_back(
        {phi_bits, sol.status, sol.kkt_residual, it_time});

    best_x = pol.x;
    best_built = built;
    best_pt = pt;
    have_iterate = true;

    if (!has_dc) {
      out.trace.status = ScaStatus::Converged;
      break;
    }
    if (m >= 1 && (phi_bits - phi_prev) <= eps * std::max(1.0, phi_prev)) {
      out.trace.status = ScaStatus::Converged;
      break;
    }
    phi_prev = phi_bits;
    pt = next_point(c, variant, built, pol.x);
    warm = pol.x;
    if (m == n_max) out.trace.status = ScaStatus::IterLimit;
  }

  if (have_iterate) {
    out.allocation = extract_allocation(c, best_built, best_x);
    if (variant.oma_stage2) {
      out.oma_slots.resize(n);
      for (int i = 0; i < n; ++i)
        out.oma_slots[i] = best_x[best_built.b.t_slot + i] * c.t_max;
    }
  } else if (out.trace.status == ScaStatus::Converged) {
    out.trace.status = ScaStatus::Infeasible;
  }
  out.trace.total_time_s = elapsed();
  return out;
}

}  // namespace

VariantResult sca_solve_variant(const Scenario& sc, const ChannelRealization& ch,
                                const ScaVariant& variant, double eps,
                                int n_max) {
  return run_sca_loop(sc, ch, variant, std::nullopt, eps, n_max);
}

}  // namespace detail

std::pair<Allocation, ScaTrace> sca_solve(const Scenario& sc,
                                          const ChannelRealization& ch,
                                          std::optional<SlackPoint> init,
                                          double eps, int n_max) {
  sc.validate();
  if (sc.k_common_bits > 0.0 &&
      max_common_capacity_bits(sc, ch) < sc.k_common_bits) {
    ScaTrace tr;
    tr.status = ScaStatus::Infeasible;
    return {Allocation::zeros(sc.n_devices), tr};
  }
  detail::VariantResult r =
      detail::run_sca_loop(sc, ch, detail::ScaVariant{}, init, eps, n_max);
  return {std::move(r.allocation), std::move(r.trace)};
}

}  // namespace noma
