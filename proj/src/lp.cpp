#include "flexact/lp.hpp"

#include <algorithm>
#include <cmath>

#include "flexact/types.hpp"

namespace flexact::lp {

std::size_t Problem::add_var(double c, double lo, double up) {
  cost.push_back(c);
  lower.push_back(lo);
  upper.push_back(up);
  for (auto& r : rows) r.coef.push_back(0.0);
  return cost.size() - 1;
}

Row& Problem::add_row(Sense sense, double rhs) {
  rows.push_back(Row{std::vector<double>(cost.size(), 0.0), sense, rhs});
  return rows.back();
}

const char* to_string(Status s) {
  switch (s) {
    case Status::Optimal: return "optimal";
    case Status::Infeasible: return "infeasible";
    case Status::Unbounded: return "unbounded";
    case Status::IterationLimit: return "iteration limit";
  }
  return "unknown";
}

namespace {

enum class VarState : unsigned char { Basic, AtLower, AtUpper };

class Tableau {
 public:
  Tableau(std::size_t m, std::size_t n) : m_(m), n_(n), a_(m * n, 0.0) {}
  double* row(std::size_t i) { return a_.data() + i * n_; }
  double& at(std::size_t i, std::size_t j) { return a_[i * n_ + j]; }

  std::size_t m_, n_;
  std::vector<double> a_;
};

struct Simplex {
  const Options& opt;
  std::size_t m, n;  // rows, total columns
  Tableau t;
  std::vector<double> beta;  // basic values
  std::vector<double> ub;    // shifted upper bounds
  std::vector<double> cost;  // active phase cost
  std::vector<double> d;     // reduced costs
  std::vector<std::size_t> basis;
  std::vector<VarState> state;
  std::vector<bool> frozen;  // never enters (artificials in phase 2)
  int iterations = 0;
  int limit = 0;
  bool bland = false;
  int degenerate_run = 0;

  Simplex(const Options& o, std::size_t rows, std::size_t cols)
      : opt(o), m(rows), n(cols), t(rows, cols), beta(rows, 0.0), ub(cols, kInf), cost(cols, 0.0), d(cols, 0.0),
        basis(rows, 0), state(cols, VarState::AtLower), frozen(cols, false) {}

  double nonbasic_value(std::size_t j) const { return state[j] == VarState::AtUpper ? ub[j] : 0.0; }

  void price() {
    d = cost;
    for (std::size_t i = 0; i < m; ++i) {
      const double cb = cost[basis[i]];
      if (cb == 0.0) continue;
      const double* r = t.row(i);
      for (std::size_t j = 0; j < n; ++j) d[j] -= cb * r[j];
    }
    for (std::size_t i = 0; i < m; ++i) d[basis[i]] = 0.0;
  }

  /// Returns the entering column or n when optimal.
  std::size_t choose_entering() const {
    std::size_t best = n;
    double best_score = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (state[j] == VarState::Basic || frozen[j]) continue;
      double score = 0.0;
      if (state[j] == VarState::AtLower && d[j] < -opt.cost_tol && ub[j] > 0.0) score = -d[j];
      if (state[j] == VarState::AtUpper && d[j] > opt.cost_tol) score = d[j];
      if (score <= 0.0) continue;
      if (bland) return j;
      if (score > best_score) {
        best_score = score;
        best = j;
      }
    }
    return best;
  }

  void pivot(std::size_t r, std::size_t q) {
    double* pr = t.row(r);
    const double inv = 1.0 / pr[q];
    for (std::size_t j = 0; j < n; ++j) pr[j] *= inv;
    pr[q] = 1.0;
    std::vector<std::size_t> nz;
    nz.reserve(n);
    for (std::size_t j = 0; j < n; ++j) {
      if (pr[j] != 0.0) nz.push_back(j);
    }
    for (std::size_t i = 0; i < m; ++i) {
      if (i == r) continue;
      double* ri = t.row(i);
      const double f = ri[q];
      if (f == 0.0) continue;
      for (std::size_t j : nz) ri[j] -= f * pr[j];
      ri[q] = 0.0;
    }
    const double fd = d[q];
    if (fd != 0.0) {
      for (std::size_t j : nz) d[j] -= fd * pr[j];
      d[q] = 0.0;
    }
  }

  Status run() {
    while (true) {
      if (iterations >= limit) return Status::IterationLimit;
      const std::size_t q = choose_entering();
      if (q == n) return Status::Optimal;
      ++iterations;
      const double dir = state[q] == VarState::AtLower ? 1.0 : -1.0;

      double step = ub[q];  // bound flip of the entering variable
      std::size_t leave = m;
      for (std::size_t i = 0; i < m; ++i) {
        const double alpha = t.at(i, q) * dir;
        double lim;
        if (alpha > opt.pivot_tol) {
          lim = std::max(beta[i], 0.0) / alpha;
        } else if (alpha < -opt.pivot_tol && std::isfinite(ub[basis[i]])) {
          lim = std::max(ub[basis[i]] - beta[i], 0.0) / -alpha;
        } else {
          continue;
        }
        if (lim < step || (lim == step && leave != m && basis[i] < basis[leave])) {
          step = lim;
          leave = i;
        }
      }
      if (!std::isfinite(step)) return Status::Unbounded;

      if (step <= 1e-12) {
        if (++degenerate_run > opt.degenerate_switch) bland = true;
      } else {
        degenerate_run = 0;
      }

      for (std::size_t i = 0; i < m; ++i) beta[i] -= t.at(i, q) * dir * step;
      if (leave == m) {
        state[q] = state[q] == VarState::AtLower ? VarState::AtUpper : VarState::AtLower;
        continue;
      }
      const double entering_value = nonbasic_value(q) + dir * step;
      const std::size_t out = basis[leave];
      const double alpha = t.at(leave, q) * dir;
      state[out] = alpha > 0.0 ? VarState::AtLower : VarState::AtUpper;
      pivot(leave, q);
      basis[leave] = q;
      state[q] = VarState::Basic;
      beta[leave] = entering_value;
    }
  }

  double objective() const {
    double z = 0.0;
    for (std::size_t i = 0; i < m; ++i) z += cost[basis[i]] * beta[i];
    for (std::size_t j = 0; j < n; ++j) {
      if (state[j] == VarState::AtUpper) z += cost[j] * ub[j];
    }
    return z;
  }
};

}  // namespace

Solution DenseSimplex::solve(const Problem& p) const {
  const std::size_t nv = p.num_vars(), m = p.rows.size();
  if (p.lower.size() != nv || p.upper.size() != nv) throw InputError("LP bound vectors do not match the variable count");
  for (std::size_t j = 0; j < nv; ++j) {
    if (!std::isfinite(p.lower[j])) throw InputError("LP lower bounds must be finite");
    if (p.upper[j] < p.lower[j]) {
      Solution s;
      s.status = Status::Infeasible;
      return s;
    }
  }
  for (const auto& r : p.rows) {
    if (r.coef.size() != nv) throw InputError("LP row width does not match the variable count");
  }

  // Columns: structurals, one slack per inequality row, one artificial per
  // row that lacks a feasible slack.
  std::vector<double> rhs(m);
  std::vector<double> sign(m, 1.0);
  std::vector<Sense> sense(m);
  for (std::size_t i = 0; i < m; ++i) {
    double b = p.rows[i].rhs;
    for (std::size_t j = 0; j < nv; ++j) b -= p.rows[i].coef[j] * p.lower[j];
    Sense s = p.rows[i].sense;
    if (b < 0.0) {
      sign[i] = -1.0;
      b = -b;
      if (s == Sense::LessEqual) {
        s = Sense::GreaterEqual;
      } else if (s == Sense::GreaterEqual) {
        s = Sense::LessEqual;
      }
    }
    rhs[i] = b;
    sense[i] = s;
  }
  std::size_t n_slack = 0, n_art = 0;
  for (auto s : sense) {
    if (s != Sense::Equal) ++n_slack;
    if (s != Sense::LessEqual) ++n_art;
  }
  const std::size_t n = nv + n_slack + n_art;

  Simplex sx(options_, m, n);
  sx.limit = options_.max_iterations > 0 ? options_.max_iterations : static_cast<int>(50 * (m + n));
  for (std::size_t j = 0; j < nv; ++j) sx.ub[j] = p.upper[j] - p.lower[j];

  std::size_t slack = nv, art = nv + n_slack;
  std::vector<std::size_t> artificials;
  for (std::size_t i = 0; i < m; ++i) {
    double* r = sx.t.row(i);
    for (std::size_t j = 0; j < nv; ++j) r[j] = sign[i] * p.rows[i].coef[j];
    sx.beta[i] = rhs[i];
    if (sense[i] == Sense::LessEqual) {
      r[slack] = 1.0;
      sx.basis[i] = slack;
      sx.state[slack++] = VarState::Basic;
    } else {
      if (sense[i] == Sense::GreaterEqual) r[slack++] = -1.0;
      r[art] = 1.0;
      sx.basis[i] = art;
      sx.state[art] = VarState::Basic;
      sx.cost[art] = 1.0;
      artificials.push_back(art++);
    }
  }

  Solution sol;
  if (!artificials.empty()) {
    sx.price();
    const Status s1 = sx.run();
    if (s1 == Status::IterationLimit) {
      sol.status = s1;
      sol.iterations = sx.iterations;
      return sol;
    }
    double infeas = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      if (sx.cost[sx.basis[i]] != 0.0) infeas += sx.beta[i];
    }
    double scale = 1.0;
    for (double b : rhs) scale = std::max(scale, std::abs(b));
    if (infeas > options_.feas_tol * scale) {
      sol.status = Status::Infeasible;
      sol.iterations = sx.iterations;
      return sol;
    }
    for (std::size_t a : artificials) {
      sx.ub[a] = 0.0;
      sx.frozen[a] = true;
      sx.cost[a] = 0.0;
    }
  }

  std::fill(sx.cost.begin(), sx.cost.end(), 0.0);
  for (std::size_t j = 0; j < nv; ++j) sx.cost[j] = p.cost[j];
  sx.price();
  const Status s2 = sx.run();
  sol.status = s2;
  sol.iterations = sx.iterations;
  sol.used_bland = sx.bland;
  if (s2 != Status::Optimal) return sol;

  std::vector<double> y(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    if (sx.state[j] != VarState::Basic) y[j] = sx.nonbasic_value(j);
  }
  for (std::size_t i = 0; i < m; ++i) y[sx.basis[i]] = sx.beta[i];
  sol.x.resize(nv);
  for (std::size_t j = 0; j < nv; ++j) {
    double v = std::clamp(y[j], 0.0, sx.ub[j]);
    sol.x[j] = p.lower[j] + v;
  }
  sol.objective = 0.0;
  for (std::size_t j = 0; j < nv; ++j) sol.objective += p.cost[j] * sol.x[j];
  return sol;
}

std::unique_ptr<Backend> make_backend(const std::string& name) {
  if (name.empty() || name == "dense-simplex") return std::make_unique<DenseSimplex>();
  throw InputError("unknown LP backend: " + name);
}

double max_violation(const Problem& p, const std::vector<double>& x) {
  double worst = 0.0;
  for (std::size_t j = 0; j < p.num_vars(); ++j) {
    worst = std::max(worst, p.lower[j] - x[j]);
    if (std::isfinite(p.upper[j])) worst = std::max(worst, x[j] - p.upper[j]);
  }
  for (const auto& r : p.rows) {
    double a = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) a += r.coef[j] * x[j];
    const double g = a - r.rhs;
    if (r.sense == Sense::LessEqual) worst = std::max(worst, g);
    if (r.sense == Sense::GreaterEqual) worst = std::max(worst, -g);
    if (r.sense == Sense::Equal) worst = std::max(worst, std::abs(g));
  }
  return std::max(worst, 0.0);
}

}  // namespace flexact::lp
