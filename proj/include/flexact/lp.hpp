#pragma once

#include <limits>
#include <memory>
#include <string>
#include <vector>

namespace flexact::lp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Sense { LessEqual, GreaterEqual, Equal };

struct Row {
  std::vector<double> coef;  // dense, one entry per variable
  Sense sense = Sense::LessEqual;
  double rhs = 0.0;
};

/// minimize cost·x subject to rows and lower <= x <= upper (lower finite).
struct Problem {
  std::vector<double> cost;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<Row> rows;

  std::size_t num_vars() const { return cost.size(); }
  /// Appends a variable and returns its index.
  std::size_t add_var(double c, double lo = 0.0, double up = kInf);
  /// Appends a row sized to the current variable count.
  Row& add_row(Sense sense, double rhs);
};

enum class Status { Optimal, Infeasible, Unbounded, IterationLimit };

const char* to_string(Status s);

struct Solution {
  Status status = Status::Infeasible;
  std::vector<double> x;
  double objective = 0.0;
  int iterations = 0;
  bool used_bland = false;
};

struct Options {
  double pivot_tol = 1e-9;
  double cost_tol = 1e-9;
  double feas_tol = 1e-7;
  /// Consecutive degenerate pivots before switching to Bland's rule.
  int degenerate_switch = 50;
  int max_iterations = 0;  // 0: 50·(rows + columns)
};

class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string name() const = 0;
  virtual Solution solve(const Problem& problem) const = 0;
};

/// Dense tableau, bounded-variable, two-phase primal simplex. Dantzig
/// pricing with lowest-index tie-breaks; Bland's rule after a run of
/// degenerate pivots.
class DenseSimplex : public Backend {
 public:
  explicit DenseSimplex(Options options = {}) : options_(options) {}
  std::string name() const override { return "dense-simplex"; }
  Solution solve(const Problem& problem) const override;

 private:
  Options options_;
};

std::unique_ptr<Backend> make_backend(const std::string& name);

/// Largest row or bound violation of `x`.
double max_violation(const Problem& problem, const std::vector<double>& x);

}  // namespace flexact::lp
