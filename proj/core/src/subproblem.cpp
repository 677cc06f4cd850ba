#include "noma/subproblem.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <random>
#include <set>
#include <stdexcept>

#include "noma/rng.hpp"

namespace noma {

namespace {

constexpr double kLn2 = 0.6931471805599453;
constexpr double kInf = std::numeric_limits<double>::infinity();

double qval(double a, double b) {
  if (a <= 0.0) return 0.0;
  return a * std::log1p(b / a) / kLn2;
}

// First and second partials of q(a,b) = a*log2(1+b/a).
struct QDeriv {
  double qa, qb, qaa, qab, qbb;
};

QDeriv qderiv(double a, double b) {
  const double r = b / a;
  const double lr = std::log1p(r);
  const double opr = 1.0 + r;
  QDeriv d;
  d.qa = (lr - r / opr) / kLn2;
  d.qb = 1.0 / (kLn2 * opr);
  const double common = 1.0 / (kLn2 * a * opr * opr);
  d.qaa = -r * r * common;
  d.qab = r * common;
  d.qbb = -common;
  return d;
}

using Terms = std::vector<std::pair<int, double>>;

double terms_dot(const Terms& t, const Eigen::VectorXd& x) {
  double s = 0.0;
  for (auto& [j, c] : t) s += c * x[j];
  return s;
}

// The solver's working form. Slack variables that provably bind (they help
// every row they appear in except one defining inequality) are substituted
// out up front; what remains is small and uniformly scaled. Perspective rows
// carry an affine second argument to absorb those substitutions.
struct Prepared {
  int n_full = 0;
  int n = 0;                      // reduced variable count
  std::vector<int> red_of_full;   // -1 for eliminated variables
  std::vector<int> full_of_red;

  struct Sub {
    int var;      // full index
    Terms expr;   // over full indices of surviving variables
    double c0;
  };
  std::vector<Sub> subs;

  Eigen::VectorXd d, lo, hi;  // reduced, scaled bounds
  Eigen::VectorXd gobj;       // normalized objective gradient (maximize)
  double obj_norm = 1.0;

  struct PRow {
    int a = -1;        // reduced index of the time-like variable
    Terms b;           // affine second argument (reduced indices, scaled)
    double bconst = 0.0;
    double w = 0.0;    // normalized weight
    Terms lin;
    double rhs = 0.0;
    int label = 0;
  };
  struct LRow {
    Terms a;
    double rhs = 0.0;
    int label = 0;
  };
  std::vector<PRow> prows;
  std::vector<LRow> lrows;
  std::vector<std::string> labels;

  int n_rows() const { return static_cast<int>(prows.size() + lrows.size()); }

  double row_slack(int i, const Eigen::VectorXd& y) const {
    if (i < static_cast<int>(prows.size())) {
      const PRow& r = prows[i];
      const double b = r.bconst + terms_dot(r.b, y);
      if (b < 0.0) return -kInf;  // outside q's domain
      return r.w * qval(y[r.a], b) + terms_dot(r.lin, y) - r.rhs;
    }
    const LRow& r = lrows[i - prows.size()];
    return r.rhs - terms_dot(r.a, y);
  }

  void add_row_grad(int i, const Eigen::VectorXd& y, double scale,
                    Eigen::VectorXd& grad) const {
    if (i < static_cast<int>(prows.size())) {
      const PRow& r = prows[i];
      const double b = r.bconst + terms_dot(r.b, y);
      const QDeriv dq = qderiv(y[r.a], b);
      grad[r.a] += scale * r.w * dq.qa;
      for (auto& [j, c] : r.b) grad[j] += scale * r.w * dq.qb * c;
      for (auto& [j, c] : r.lin) grad[j] += scale * c;
    } else {
      const LRow& r = lrows[i - prows.size()];
      for (auto& [j, c] : r.a) grad[j] -= scale * c;
    }
  }

  void row_grad(int i, const Eigen::VectorXd& y, Eigen::VectorXd& out) const {
    out.setZero();
    add_row_grad(i, y, 1.0, out);
  }

  // H += scale * (-nabla^2 s_i); only perspective rows curve.
  void add_row_neg_hess(int i, const Eigen::VectorXd& y, double scale,
                        Eigen::Ref<Eigen::MatrixXd> h) const {
    if (i >= static_cast<int>(prows.size())) return;
    const PRow& r = prows[i];
    const double b = r.bconst + terms_dot(r.b, y);
    const QDeriv dq = qderiv(y[r.a], b);
    const double w = scale * r.w;
    h(r.a, r.a) -= w * dq.qaa;
    for (auto& [j, cj] : r.b) {
      h(r.a, j) -= w * dq.qab * cj;
      h(j, r.a) -= w * dq.qab * cj;
      for (auto& [k, ck] : r.b) h(j, k) -= w * dq.qbb * cj * ck;
    }
  }

  int label_of(int i) const {
    return i < static_cast<int>(prows.size())
               ? prows[i].label
               : lrows[i - prows.size()].label;
  }
};

// ---------------------------------------------------------------------------
// Presolve + scaling
// ---------------------------------------------------------------------------

struct FullRows {
  // Internal mutable copy of the problem over full variable indices.
  struct PRow {
    int a;
    Terms b;
    double bconst;
    double w;
    Terms lin;
    double rhs;
    int label;
  };
  struct LRow {
    Terms a;
    double rhs;
    int label;
    bool dropped = false;
  };
  std::vector<PRow> prows;
  std::vector<LRow> lrows;
  std::vector<std::string> labels;
};

void inline_expr(Terms& dst, double coeff, const Terms& expr) {
  for (auto& [j, c] : expr) {
    bool found = false;
    for (auto& [dj, dc] : dst)
      if (dj == j) {
        dc += coeff * c;
        found = true;
        break;
      }
    if (!found) dst.emplace_back(j, coeff * c);
  }
}

void drop_var(Terms& t, int var) {
  t.erase(std::remove_if(t.begin(), t.end(),
                         [var](const auto& p) { return p.first == var; }),
          t.end());
}

double coeff_of(const Terms& t, int var) {
  for (auto& [j, c] : t)
    if (j == var) return c;
  return 0.0;
}

// Substitutes var := (expr, c0) into every surviving row.
void apply_substitution(FullRows& rows, int var, const Terms& expr, double c0) {
  for (auto& r : rows.prows) {
    if (const double cb = coeff_of(r.b, var); cb != 0.0) {
      drop_var(r.b, var);
      inline_expr(r.b, cb, expr);
      r.bconst += cb * c0;
    }
    if (const double cl = coeff_of(r.lin, var); cl != 0.0) {
      drop_var(r.lin, var);
      inline_expr(r.lin, cl, expr);
      r.rhs -= cl * c0;
    }
  }
  for (auto& r : rows.lrows) {
    if (r.dropped) continue;
    if (const double ca = coeff_of(r.a, var); ca != 0.0) {
      drop_var(r.a, var);
      inline_expr(r.a, ca, expr);
      r.rhs -= ca * c0;
    }
  }
}

Prepared prepare(const ConvexSubproblem& p) {
  Prepared out;
  out.n_full = p.n_vars;

  FullRows rows;
  auto label_id = [&](const std::string& l) {
    for (std::size_t i = 0; i < rows.labels.size(); ++i)
      if (rows.labels[i] == l) return static_cast<int>(i);
    rows.labels.push_back(l.empty() ? "unlabeled" : l);
    return static_cast<int>(rows.labels.size() - 1);
  };
  for (const auto& r : p.perspective_rows)
    rows.prows.push_back({r.a_index,
                          Terms{{r.b_index, 1.0}},
                          0.0,
                          r.weight,
                          r.linear,
                          r.rhs,
                          label_id(r.label)});
  for (const auto& r : p.linear_rows)
    rows.lrows.push_back({r.coeffs, r.rhs, label_id(r.label)});

  // --- monotone slack elimination ---------------------------------------
  // A variable with zero objective, bounds [0, inf) and a consistent "wanted
  // direction" in every row except a single linear one binds that row at any
  // optimum, so it can be replaced by the row solved for it.
  std::vector<char> eliminated(static_cast<std::size_t>(p.n_vars), 0);
  bool changed = true;
  while (changed) {
    changed = false;
    for (int j = 0; j < p.n_vars; ++j) {
      if (eliminated[j]) continue;
      if (p.objective[j] != 0.0) continue;
      if (p.lower[j] != 0.0 || std::isfinite(p.upper[j])) continue;

      int dir = 0;  // +1: every appearance wants it large; -1: small
      int def_row = -1;
      bool ok = true;
      for (const auto& r : rows.prows) {
        if (!ok) break;
        if (r.a == j) ok = false;
        const double cb = coeff_of(r.b, j);
        if (cb != 0.0) {
          const int d = (cb * r.w) > 0.0 ? +1 : -1;
          if (dir == 0) dir = d;
          ok = ok && dir == d;
        }
        const double cl = coeff_of(r.lin, j);
        if (cl != 0.0) {
          const int d = cl > 0.0 ? +1 : -1;
          if (dir == 0) dir = d;
          ok = ok && dir == d;
        }
      }
      if (!ok) continue;
      int against = 0;
      for (std::size_t ri = 0; ri < rows.lrows.size(); ++ri) {
        const auto& r = rows.lrows[ri];
        if (r.dropped) continue;
        const double ca = coeff_of(r.a, j);
        if (ca == 0.0) continue;
        const int d = ca > 0.0 ? -1 : +1;  // slack = rhs - a.x
        if (dir == 0) {
          dir = d;
          continue;
        }
        if (d == dir) continue;
        ++against;
        def_row = static_cast<int>(ri);
      }
      if (against != 1 || dir == 0) continue;

      // Solve the defining row for x_j.
      const auto& dr = rows.lrows[static_cast<std::size_t>(def_row)];
      const double aj = coeff_of(dr.a, j);
      Terms expr;
      bool refs_candidate = false;
      for (auto& [k, c] : dr.a) {
        if (k == j) continue;
        expr.emplace_back(k, -c / aj);
        if (!eliminated[k] && p.objective[k] == 0.0 && p.lower[k] == 0.0 &&
            !std::isfinite(p.upper[k]))
          refs_candidate = true;  // postpone until that one settles
      }
      if (refs_candidate) continue;
      const double c0 = dr.rhs / aj;

      // Keep x_j >= 0 when the expression could go negative.
      bool expr_nonneg = c0 >= 0.0;
      for (auto& [k, c] : expr)
        if (c < 0.0 && p.lower[k] >= 0.0) expr_nonneg = false;
      if (!expr_nonneg) {
        FullRows::LRow floor_row;
        for (auto& [k, c] : expr) floor_row.a.emplace_back(k, -c);
        floor_row.rhs = c0;
        floor_row.label = dr.label;
        rows.lrows.push_back(std::move(floor_row));
      }

      rows.lrows[static_cast<std::size_t>(def_row)].dropped = true;
      apply_substitution(rows, j, expr, c0);
      out.subs.push_back({j, expr, c0});
      eliminated[j] = 1;
      changed = true;
    }
  }

  // --- reduced index map --------------------------------------------------
  out.red_of_full.assign(static_cast<std::size_t>(p.n_vars), -1);
  for (int j = 0; j < p.n_vars; ++j)
    if (!eliminated[j]) {
      out.red_of_full[j] = out.n;
      out.full_of_red.push_back(j);
      ++out.n;
    }

  // --- variable scaling ----------------------------------------------------
  out.d.resize(out.n);
  out.lo.resize(out.n);
  out.hi.resize(out.n);
  for (int r = 0; r < out.n; ++r) {
    const int j = out.full_of_red[r];
    double dj = 1.0;
    if (!p.scale_hint.empty()) dj = std::max(p.scale_hint[j], 1e-12);
    out.d[r] = dj;
    out.lo[r] = p.lower[j] / dj;
    out.hi[r] = p.upper[j] / dj;
  }
  out.gobj.resize(out.n);
  for (int r = 0; r < out.n; ++r)
    out.gobj[r] = p.objective[out.full_of_red[r]] * out.d[r];
  out.obj_norm = std::max(out.gobj.cwiseAbs().maxCoeff(), 1e-300);
  out.gobj /= out.obj_norm;

  out.labels = rows.labels;
  auto to_reduced_scaled = [&](const Terms& t) {
    Terms o;
    o.reserve(t.size());
    for (auto& [j, c] : t) {
      const int r = out.red_of_full[j];
      o.emplace_back(r, c * out.d[r]);
    }
    return o;
  };

  for (const auto& r : rows.prows) {
    Prepared::PRow q;
    q.a = out.red_of_full[r.a];
    const double da = out.d[q.a];
    q.w = r.w * da;
    // b argument divided by d_a keeps q homogeneous under the scaling.
    q.bconst = r.bconst / da;
    for (auto& [j, c] : r.b) {
      const int rr = out.red_of_full[j];
      q.b.emplace_back(rr, c * out.d[rr] / da);
    }
    q.lin = to_reduced_scaled(r.lin);
    q.rhs = r.rhs;
    q.label = r.label;

    // Normalize by the perspective term's own magnitude; the affine majorant
    // coefficients can dwarf it far from the expansion point without that
    // saying anything about the row's scale near the feasible region.
    double b_mag = std::abs(q.bconst);
    for (auto& [j, c] : q.b) b_mag += std::abs(c);
    double norm = std::abs(q.w) * std::max(1.0, std::log2(1.0 + b_mag));
    norm = std::max(norm, std::abs(q.rhs));
    norm = std::max(norm, 1e-300);
    q.w /= norm;
    q.rhs /= norm;
    for (auto& [j, c] : q.lin) c /= norm;
    // note: b stays unnormalized, it lives inside q
    out.prows.push_back(std::move(q));
  }
  for (const auto& r : rows.lrows) {
    if (r.dropped) continue;
    Prepared::LRow q;
    q.a = to_reduced_scaled(r.a);
    q.rhs = r.rhs;
    q.label = r.label;
    double norm = std::abs(q.rhs);
    for (auto& [j, c] : q.a) norm = std::max(norm, std::abs(c));
    norm = std::max(norm, 1e-300);
    q.rhs /= norm;
    for (auto& [j, c] : q.a) c /= norm;
    out.lrows.push_back(std::move(q));
  }
  return out;
}

struct BoundList {
  std::vector<int> lo_idx, hi_idx;
};

BoundList collect_bounds(const Prepared& s) {
  BoundList b;
  for (int j = 0; j < s.n; ++j) {
    if (std::isfinite(s.lo[j])) b.lo_idx.push_back(j);
    if (std::isfinite(s.hi[j])) b.hi_idx.push_back(j);
  }
  return b;
}

double min_bound_slack(const Prepared& s, const BoundList& b,
                       const Eigen::VectorXd& y) {
  double m = kInf;
  for (int j : b.lo_idx) m = std::min(m, y[j] - s.lo[j]);
  for (int j : b.hi_idx) m = std::min(m, s.hi[j] - y[j]);
  return m;
}

Eigen::VectorXd interior_box_point(const Prepared& s) {
  Eigen::VectorXd y(s.n);
  for (int j = 0; j < s.n; ++j) {
    const bool lf = std::isfinite(s.lo[j]);
    const bool hf = std::isfinite(s.hi[j]);
    if (lf && hf)
      y[j] = 0.5 * (s.lo[j] + s.hi[j]);
    else if (lf)
      y[j] = s.lo[j] + 1.0;
    else if (hf)
      y[j] = s.hi[j] - 1.0;
    else
      y[j] = 0.0;
  }
  return y;
}

// ---------------------------------------------------------------------------
// Phase I: maximize t subject to row slacks >= t, bounds kept hard (they
// protect the perspective domain). Pure primal log-barrier with Newton
// centering; stops as soon as a comfortably interior point is known, or
// certifies that no strictly feasible point exists.
// ---------------------------------------------------------------------------
struct PhaseOneResult {
  bool feasible = false;
  Eigen::VectorXd y;
  double t = -kInf;
  std::string diagnosis;
  int newton_steps = 0;
};

PhaseOneResult phase_one(const Prepared& s, const BoundList& bnd,
                         const Eigen::VectorXd* seed) {
  const int n = s.n;
  const int m = s.n_rows();
  const double t_go = 1e-3;

  Eigen::VectorXd y = interior_box_point(s);
  if (seed) y = *seed;
  const double box_pad = 1e-3;
  for (int j : bnd.lo_idx) {
    const double hi = std::isfinite(s.hi[j]) ? s.hi[j] : kInf;
    y[j] = std::max(y[j], s.lo[j] + std::min(box_pad, 0.5 * (hi - s.lo[j])));
  }
  for (int j : bnd.hi_idx) {
    const double lo = std::isfinite(s.lo[j]) ? s.lo[j] : -kInf;
    y[j] = std::min(y[j], s.hi[j] - std::min(box_pad, 0.5 * (s.hi[j] - lo)));
  }

  auto min_row_slack = [&](const Eigen::VectorXd& yy) {
    double ms = kInf;
    for (int i = 0; i < m; ++i) ms = std::min(ms, s.row_slack(i, yy));
    return ms;
  };

  double t = min_row_slack(y) - 0.5 * std::max(1.0, std::abs(min_row_slack(y)));

  PhaseOneResult out;
  Eigen::VectorXd grad(n + 1), gi(n);
  Eigen::MatrixXd hess(n + 1, n + 1);

  double inv_sum = 0.0;
  for (int i = 0; i < m; ++i) inv_sum += 1.0 / (s.row_slack(i, y) - t);
  double mu = 1.0 / std::max(1.0, inv_sum);
  const double mu_min = 1e-9;
  int total_newton = 0;

  auto barrier_value = [&](const Eigen::VectorXd& yy, double tt) {
    double v = -tt;
    for (int i = 0; i < m; ++i) {
      const double sl = s.row_slack(i, yy) - tt;
      if (sl <= 0.0) return kInf;
      v -= mu * std::log(sl);
    }
    for (int j : bnd.lo_idx) {
      const double sl = yy[j] - s.lo[j];
      if (sl <= 0.0) return kInf;
      v -= mu * std::log(sl);
    }
    for (int j : bnd.hi_idx) {
      const double sl = s.hi[j] - yy[j];
      if (sl <= 0.0) return kInf;
      v -= mu * std::log(sl);
    }
    return v;
  };

  while (true) {
    for (int it = 0; it < 60; ++it) {
      if (t >= t_go) {
        out.feasible = true;
        out.y = y;
        out.t = t;
        out.newton_steps = total_newton;
        return out;
      }
      grad.setZero();
      hess.setZero();
      grad[n] = -1.0;
      for (int i = 0; i < m; ++i) {
        const double sl = s.row_slack(i, y) - t;
        const double inv = 1.0 / sl;
        s.row_grad(i, y, gi);
        grad.head(n) -= mu * inv * gi;
        grad[n] += mu * inv;
        hess.topLeftCorner(n, n) += mu * inv * inv * gi * gi.transpose();
        hess.col(n).head(n) -= mu * inv * inv * gi;
        hess.row(n).head(n) -= mu * inv * inv * gi.transpose();
        hess(n, n) += mu * inv * inv;
        s.add_row_neg_hess(i, y, mu * inv, hess.topLeftCorner(n, n));
      }
      for (int j : bnd.lo_idx) {
        const double inv = 1.0 / (y[j] - s.lo[j]);
        grad[j] -= mu * inv;
        hess(j, j) += mu * inv * inv;
      }
      for (int j : bnd.hi_idx) {
        const double inv = 1.0 / (s.hi[j] - y[j]);
        grad[j] += mu * inv;
        hess(j, j) += mu * inv * inv;
      }
      hess.diagonal().array() += 1e-12 * (1.0 + hess.trace() / (n + 1));

      Eigen::VectorXd step = -hess.ldlt().solve(grad);
      double decr = -grad.dot(step);
      if (!(decr > 0.0)) {
        hess.diagonal().array() += 1e-6 * (1.0 + hess.trace() / (n + 1));
        step = -hess.ldlt().solve(grad);
        decr = -grad.dot(step);
        if (!(decr > 0.0)) break;
      }
      if (0.5 * decr < 1e-10) break;  // centered at this mu

      const double f0 = barrier_value(y, t);
      double alpha = 1.0;
      bool moved = false;
      for (int ls = 0; ls < 70; ++ls) {
        Eigen::VectorXd yn = y + alpha * step.head(n);
        const double tn = t + alpha * step[n];
        if (barrier_value(yn, tn) <= f0 - 1e-4 * alpha * decr) {
          y = yn;
          t = tn;
          moved = true;
          break;
        }
        alpha *= 0.5;
      }
      ++total_newton;
      if (!moved) break;
    }
    if (mu <= mu_min) break;
    mu = std::max(mu * 0.2, mu_min);
  }

  out.newton_steps = total_newton;
  out.t = t;
  if (t > 1e-7) {
    out.feasible = true;  // thin but nonempty interior
    out.y = y;
    return out;
  }
  std::set<std::string> families;
  for (int i = 0; i < m; ++i)
    if (s.row_slack(i, y) < t_go) families.insert(s.labels[s.label_of(i)]);
  std::string diag = "no strictly feasible point; blocking families:";
  for (const auto& f : families) diag += " " + f;
  out.diagnosis = diag;
  out.feasible = false;
  return out;
}

// Pull the objective variable back up after phase I flattened it: raising it
// only shrinks rows where it appears with negative coefficients, so the
// largest safe increase has a closed form.
void restore_objective_variable(const Prepared& s, Eigen::VectorXd& y) {
  int phi = -1;
  for (int j = 0; j < s.n; ++j)
    if (s.gobj[j] != 0.0) {
      if (phi >= 0) return;
      phi = j;
    }
  if (phi < 0 || s.gobj[phi] < 0.0) return;
  double delta = kInf;
  for (std::size_t i = 0; i < s.prows.size(); ++i) {
    const auto& r = s.prows[i];
    if (r.a == phi || coeff_of(r.b, phi) != 0.0) return;
    const double c = coeff_of(r.lin, phi);
    if (c < 0.0)
      delta = std::min(delta, 0.5 * s.row_slack(static_cast<int>(i), y) / -c);
  }
  for (std::size_t i = 0; i < s.lrows.size(); ++i) {
    const double c = -coeff_of(s.lrows[i].a, phi);  // slack = rhs - a.y
    if (c < 0.0)
      delta = std::min(
          delta,
          0.5 * s.row_slack(static_cast<int>(s.prows.size() + i), y) / -c);
  }
  if (std::isfinite(s.hi[phi])) delta = std::min(delta, s.hi[phi] - y[phi]);
  if (std::isfinite(delta) && delta > 0.0) y[phi] += delta;
}

// ---------------------------------------------------------------------------
// Phase II stage A: primal log-barrier path following down to a moderate mu.
// Very robust (Armijo on the barrier value) but loses accuracy past ~1e-6.
// ---------------------------------------------------------------------------
int primal_center(const Prepared& s, const BoundList& bnd, Eigen::VectorXd& y,
                  double mu_start, double mu_end) {
  const int n = s.n;
  const int m = s.n_rows();
  Eigen::VectorXd grad(n), gi(n);
  Eigen::MatrixXd hess(n, n);
  int total = 0;
  double mu = mu_start;

  auto value = [&](const Eigen::VectorXd& yy) {
    double v = -s.gobj.dot(yy);
    for (int i = 0; i < m; ++i) {
      const double sl = s.row_slack(i, yy);
      if (sl <= 0.0) return kInf;
      v -= mu * std::log(sl);
    }
    for (int j : bnd.lo_idx) {
      const double sl = yy[j] - s.lo[j];
      if (sl <= 0.0) return kInf;
      v -= mu * std::log(sl);
    }
    for (int j : bnd.hi_idx) {
      const double sl = s.hi[j] - yy[j];
      if (sl <= 0.0) return kInf;
      v -= mu * std::log(sl);
    }
    return v;
  };

  while (true) {
    for (int it = 0; it < 50; ++it) {
      grad = -s.gobj;
      hess.setZero();
      for (int i = 0; i < m; ++i) {
        const double sl = s.row_slack(i, y);
        const double inv = 1.0 / sl;
        s.row_grad(i, y, gi);
        grad -= mu * inv * gi;
        hess += mu * inv * inv * gi * gi.transpose();
        s.add_row_neg_hess(i, y, mu * inv, hess);
      }
      for (int j : bnd.lo_idx) {
        const double inv = 1.0 / (y[j] - s.lo[j]);
        grad[j] -= mu * inv;
        hess(j, j) += mu * inv * inv;
      }
      for (int j : bnd.hi_idx) {
        const double inv = 1.0 / (s.hi[j] - y[j]);
        grad[j] += mu * inv;
        hess(j, j) += mu * inv * inv;
      }
      hess.diagonal().array() += 1e-12 * (1.0 + hess.trace() / n);

      Eigen::VectorXd step = -hess.ldlt().solve(grad);
      double decr = -grad.dot(step);
      if (!(decr > 0.0)) {
        hess.diagonal().array() += 1e-6 * (1.0 + hess.trace() / n);
        step = -hess.ldlt().solve(grad);
        decr = -grad.dot(step);
        if (!(decr > 0.0)) break;
      }
      if (0.5 * decr < 1e-11 * std::max(1.0, mu)) break;

      const double f0 = value(y);
      double alpha = 1.0;
      bool moved = false;
      for (int ls = 0; ls < 70; ++ls) {
        Eigen::VectorXd yn = y + alpha * step;
        if (value(yn) <= f0 - 1e-4 * alpha * decr) {
          y = yn;
          moved = true;
          break;
        }
        alpha *= 0.5;
      }
      ++total;
      if (!moved) break;
    }
    if (mu <= mu_end) break;
    mu = std::max(0.2 * mu, mu_end);
  }
  return total;
}

// ---------------------------------------------------------------------------
// Phase II stage B: primal-dual path following endgame from the centered
// stage-A point, with equal fraction-to-boundary steps and anti-stall mu
// control for the last orders of magnitude.
// ---------------------------------------------------------------------------
struct Ineq {
  enum Kind { Row, Lower, Upper } kind;
  int index;
};

struct PhaseTwoResult {
  Eigen::VectorXd y;
  double kkt = kInf;
  bool converged = false;
  int newton_steps = 0;
};

PhaseTwoResult phase_two(const Prepared& s, const BoundList& bnd,
                         Eigen::VectorXd y, double tol) {
  const int n = s.n;
  const double mu_mid = 1e-6;
  PhaseTwoResult out;
  out.newton_steps = primal_center(s, bnd, y, 0.1, mu_mid);

  std::vector<Ineq> ineqs;
  for (int i = 0; i < s.n_rows(); ++i) ineqs.push_back({Ineq::Row, i});
  for (int j : bnd.lo_idx) ineqs.push_back({Ineq::Lower, j});
  for (int j : bnd.hi_idx) ineqs.push_back({Ineq::Upper, j});
  const int m = static_cast<int>(ineqs.size());

  auto slack_of = [&](int k, const Eigen::VectorXd& yy) {
    const Ineq& q = ineqs[k];
    switch (q.kind) {
      case Ineq::Row:
        return s.row_slack(q.index, yy);
      case Ineq::Lower:
        return yy[q.index] - s.lo[q.index];
      default:
        return s.hi[q.index] - yy[q.index];
    }
  };
  auto grad_of = [&](int k, const Eigen::VectorXd& yy, Eigen::VectorXd& g) {
    g.setZero();
    const Ineq& q = ineqs[k];
    switch (q.kind) {
      case Ineq::Row:
        s.add_row_grad(q.index, yy, 1.0, g);
        break;
      case Ineq::Lower:
        g[q.index] = 1.0;
        break;
      default:
        g[q.index] = -1.0;
        break;
    }
  };

  Eigen::VectorXd lam(m), slack(m);
  for (int k = 0; k < m; ++k) slack[k] = slack_of(k, y);
  double mu = mu_mid;
  for (int k = 0; k < m; ++k) lam[k] = mu / slack[k];

  std::vector<Eigen::VectorXd> J(m, Eigen::VectorXd(n));
  Eigen::VectorXd rstat(n);

  const bool trace = std::getenv("NOMA_SOLVER_TRACE") != nullptr;
  Eigen::VectorXd best_y = y;
  double best_kkt = kInf;
  double last_alpha = 1.0;
  int since_best = 0;

  for (int iter = 0; iter < 200; ++iter) {
    for (int k = 0; k < m; ++k) {
      slack[k] = slack_of(k, y);
      grad_of(k, y, J[k]);
    }
    const double gap = slack.dot(lam) / m;
    double comp_inf = 0.0;
    for (int k = 0; k < m; ++k)
      comp_inf = std::max(comp_inf, lam[k] * slack[k]);

    rstat = -s.gobj;
    for (int k = 0; k < m; ++k) rstat -= lam[k] * J[k];
    const double kkt = std::max(rstat.cwiseAbs().maxCoeff(), comp_inf);
    if (kkt < best_kkt) {
      best_kkt = kkt;
      best_y = y;
      since_best = 0;
    } else if (++since_best > 30) {
      break;
    }
    if (trace)
      std::fprintf(stderr,
                   "  [pd] it=%3d kkt=%.3e gap=%.3e mu=%.3e obj=%.9g smin=%.2e\n",
                   iter, kkt, gap, mu, s.gobj.dot(y), slack.minCoeff());
    if (kkt <= tol) break;

    // Shrink mu only while steps are healthy; a blocked step means the
    // iterate drifted off-center and needs a re-centering round first.
    mu = std::max(last_alpha > 0.1 ? 0.2 * gap : gap, tol / (10.0 * m));

    // Full unreduced KKT system; the condensed normal-equation form squares
    // the conditioning near the boundary.
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n + m, n + m);
    Eigen::VectorXd rhs(n + m);
    for (int k = 0; k < m; ++k) {
      if (ineqs[k].kind == Ineq::Row)
        s.add_row_neg_hess(ineqs[k].index, y, lam[k], A.topLeftCorner(n, n));
      A.block(0, n + k, n, 1) = -J[k];
      A.block(n + k, 0, 1, n) = lam[k] * J[k].transpose();
      A(n + k, n + k) = slack[k];
      rhs[n + k] = -(lam[k] * slack[k] - mu);
    }
    A.topLeftCorner(n, n).diagonal().array() +=
        1e-13 * (1.0 + A.topLeftCorner(n, n).trace() / n);
    rhs.head(n) = -rstat;

    Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
    Eigen::VectorXd z = lu.solve(rhs);
    z += lu.solve(rhs - A * z);  // one refinement step
    if (!z.allFinite()) break;
    Eigen::VectorXd dy = z.head(n);
    Eigen::VectorXd dlam = z.tail(m);

    // Equal primal/dual fraction-to-boundary step so the multipliers never
    // run ahead of the primal point and pin a slack. Multiplier limits have
    // a closed form; slack limits backtrack (row concavity means no interior
    // dip hides between positive endpoints).
    double alpha = 1.0;
    for (int k = 0; k < m; ++k)
      if (dlam[k] < 0.0) alpha = std::min(alpha, -0.995 * lam[k] / dlam[k]);
    for (int ls = 0; ls < 60; ++ls) {
      Eigen::VectorXd yn = y + alpha * dy;
      bool ok = true;
      for (int k = 0; k < m && ok; ++k)
        if (slack_of(k, yn) < 0.005 * slack[k]) ok = false;
      if (ok) break;
      alpha *= 0.5;
    }

    y += alpha * dy;
    lam += alpha * dlam;
    last_alpha = alpha;
    ++out.newton_steps;
  }
  out.y = best_y;
  out.kkt = best_kkt;
  out.converged = best_kkt <= tol;
  return out;
}

}  // namespace

int ConvexSubproblem::block_offset(const std::string& name) const {
  for (const auto& b : layout)
    if (b.name == name && b.count > 0) return b.offset;
  return -1;
}

int ConvexSubproblem::block_count(const std::string& name) const {
  for (const auto& b : layout)
    if (b.name == name) return b.count;
  return 0;
}

std::vector<double> ConvexSubproblem::row_slacks(const std::vector<double>& x) const {
  std::vector<double> out;
  out.reserve(perspective_rows.size() + linear_rows.size());
  for (const auto& r : perspective_rows) {
    double s = r.weight * qval(x[r.a_index], x[r.b_index]) - r.rhs;
    for (auto& [j, c] : r.linear) s += c * x[j];
    out.push_back(s);
  }
  for (const auto& r : linear_rows) {
    double s = r.rhs;
    for (auto& [j, c] : r.coeffs) s -= c * x[j];
    out.push_back(s);
  }
  return out;
}

double ConvexSubproblem::max_violation(const std::vector<double>& x) const {
  double v = 0.0;
  for (double s : row_slacks(x)) v = std::max(v, -s);
  for (int j = 0; j < n_vars; ++j) {
    v = std::max(v, lower[j] - x[j]);
    v = std::max(v, x[j] - upper[j]);
  }
  return v;
}

void ConvexSubproblem::check_well_formed() const {
  auto fail = [](const std::string& why) {
    throw std::invalid_argument("subproblem: " + why);
  };
  if (n_vars <= 0) fail("no variables");
  if (static_cast<int>(objective.size()) != n_vars) fail("objective size");
  if (static_cast<int>(lower.size()) != n_vars ||
      static_cast<int>(upper.size()) != n_vars)
    fail("bounds size");
  if (!scale_hint.empty() && static_cast<int>(scale_hint.size()) != n_vars)
    fail("scale_hint size");
  for (int j = 0; j < n_vars; ++j)
    if (lower[j] > upper[j]) fail("empty bound interval");
  std::vector<char> seen(static_cast<std::size_t>(n_vars), 0);
  for (const auto& b : layout)
    for (int j = b.offset; j < b.offset + b.count; ++j) {
      if (j < 0 || j >= n_vars || seen[j]) fail("layout is not a partition");
      seen[j] = 1;
    }
  for (char c : seen)
    if (!c) fail("layout is not a partition");
  for (const auto& r : perspective_rows) {
    if (r.a_index < 0 || r.a_index >= n_vars || r.b_index < 0 ||
        r.b_index >= n_vars)
      fail("perspective row index");
    if (!(lower[r.a_index] > 0.0))
      fail("perspective time variable needs a positive lower bound");
    if (lower[r.b_index] < 0.0)
      fail("perspective slack variable needs a nonnegative lower bound");
  }
}

SolveOutcome solve_subproblem(const ConvexSubproblem& p, double tol,
                              const std::vector<double>* warm_start) {
  p.check_well_formed();
  Prepared s = prepare(p);
  BoundList bnd = collect_bounds(s);

  SolveOutcome out;

  Eigen::VectorXd seed;
  bool have_seed = false;
  if (warm_start && static_cast<int>(warm_start->size()) == p.n_vars) {
    seed.resize(s.n);
    for (int r = 0; r < s.n; ++r)
      seed[r] = (*warm_start)[s.full_of_red[r]] / s.d[r];
    have_seed = true;
  }

  PhaseOneResult p1 = phase_one(s, bnd, have_seed ? &seed : nullptr);
  if (!p1.feasible) {
    out.status = SolveStatus::Infeasible;
    out.diagnosis = p1.diagnosis;
    out.newton_steps = p1.newton_steps;
    return out;
  }
  Eigen::VectorXd y0 = p1.y;
  restore_objective_variable(s, y0);

  PhaseTwoResult p2 = phase_two(s, bnd, y0, tol);
  out.newton_steps = p1.newton_steps + p2.newton_steps;
  out.kkt_residual = p2.kkt;
  out.status = p2.converged ? SolveStatus::Optimal : SolveStatus::NumericalFailure;
  if (!p2.converged)
    out.diagnosis = "barrier centering stalled before reaching tolerance";

  // Back out the full variable vector: surviving variables unscale, the
  // eliminated slacks evaluate their defining expressions (couplings tight).
  out.x.assign(static_cast<std::size_t>(p.n_vars), 0.0);
  for (int r = 0; r < s.n; ++r)
    out.x[s.full_of_red[r]] = p2.y[r] * s.d[r];
  for (const auto& sub : s.subs) {
    double v = sub.c0;
    for (auto& [j, c] : sub.expr) v += c * out.x[j];
    out.x[sub.var] = v;
  }
  out.objective = 0.0;
  for (int j = 0; j < p.n_vars; ++j) out.objective += p.objective[j] * out.x[j];

  // A feasible warm start is a certified lower bound; never return less.
  if (warm_start && static_cast<int>(warm_start->size()) == p.n_vars &&
      p.max_violation(*warm_start) <= 1e-9) {
    double warm_obj = 0.0;
    for (int j = 0; j < p.n_vars; ++j)
      warm_obj += p.objective[j] * (*warm_start)[j];
    if (warm_obj > out.objective) {
      out.x = *warm_start;
      out.objective = warm_obj;
    }
  }
  return out;
}

bool concavity_probe(const ConvexSubproblem& p, int n_samples,
                     std::uint64_t seed) {
  std::mt19937_64 gen(SplitMix64::mix(seed));
  auto sample_pos = [&](double lo_exp, double hi_exp) {
    return std::pow(10.0, lo_exp + (hi_exp - lo_exp) * uniform01(gen));
  };
  for (const auto& row : p.perspective_rows) {
    const double sgn = row.weight >= 0.0 ? 1.0 : -1.0;
    for (int i = 0; i < n_samples; ++i) {
      const double a1 = sample_pos(-3, 3), b1 = sample_pos(-3, 3);
      const double a2 = sample_pos(-3, 3), b2 = sample_pos(-3, 3);
      double lambda = uniform01(gen);
      lambda = std::min(std::max(lambda, 1e-6), 1.0 - 1e-6);
      const double am = lambda * a1 + (1.0 - lambda) * a2;
      const double bm = lambda * b1 + (1.0 - lambda) * b2;
      const double mid = sgn * qval(am, bm);
      const double chord =
          lambda * sgn * qval(a1, b1) + (1.0 - lambda) * sgn * qval(a2, b2);
      if (mid < chord - 1e-10) return false;
    }
  }
  return true;
}

}  // namespace noma
