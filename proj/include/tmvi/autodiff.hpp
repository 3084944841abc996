#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tmvi/math_util.hpp"

namespace tmvi::ad {

// Raised when a recorded primitive yields a non-finite value; carries the
// primitive's name so callers can report where a computation blew up.
class NonFiniteError : public std::runtime_error {
 public:
  explicit NonFiniteError(const char* primitive)
      : std::runtime_error(std::string("non-finite value in primitive '") + primitive + "'"),
        primitive_(primitive) {}
  NonFiniteError(const std::string& message, const char* primitive)
      : std::runtime_error(message), primitive_(primitive) {}
  const char* primitive() const { return primitive_; }

 private:
  const char* primitive_;
};

class Tape;

// Handle to a recorded scalar. Cheap to copy; valid until the tape is cleared.
struct Var {
  Tape* tape = nullptr;
  std::int32_t id = -1;
  double val = 0.0;
};

// Expression record for one scalar evaluation. Each node stores its parents
// and the local partial derivatives, so the backward sweep is a single
// multiply-accumulate pass independent of the operation that made the node.
class Tape {
 public:
  Tape() { nodes_.reserve(1 << 14); }

  Var input(double value) { return push("input", value, -1, 0.0, -1, 0.0); }
  Var constant(double value) { return push("constant", value, -1, 0.0, -1, 0.0); }

  Var push(const char* primitive, double value, std::int32_t pa, double da,
           std::int32_t pb, double db) {
    if (!std::isfinite(value)) {
      throw NonFiniteError(primitive);
    }
    nodes_.push_back(Node{da, db, pa, pb});
    return Var{this, static_cast<std::int32_t>(nodes_.size()) - 1, value};
  }

  // Adjoints of `inputs` with respect to `output`, by reverse accumulation.
  std::vector<double> gradient(const Var& output, std::span<const Var> inputs) const {
    std::vector<double> adj(nodes_.size(), 0.0);
    adj[static_cast<std::size_t>(output.id)] = 1.0;
    for (std::int32_t i = output.id; i >= 0; --i) {
      const Node& n = nodes_[static_cast<std::size_t>(i)];
      const double a = adj[static_cast<std::size_t>(i)];
      if (a == 0.0) {
        continue;
      }
      if (n.pa >= 0) {
        adj[static_cast<std::size_t>(n.pa)] += n.da * a;
      }
      if (n.pb >= 0) {
        adj[static_cast<std::size_t>(n.pb)] += n.db * a;
      }
    }
    std::vector<double> out(inputs.size());
    for (std::size_t k = 0; k < inputs.size(); ++k) {
      out[k] = adj[static_cast<std::size_t>(inputs[k].id)];
    }
    return out;
  }

  void clear() { nodes_.clear(); }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    double da, db;
    std::int32_t pa, pb;
  };
  std::vector<Node> nodes_;
};

inline double scalar_value(double x) { return x; }
inline double scalar_value(const Var& x) { return x.val; }

// ---- arithmetic -----------------------------------------------------------

inline Var operator+(const Var& x, const Var& y) {
  return x.tape->push("add", x.val + y.val, x.id, 1.0, y.id, 1.0);
}
inline Var operator+(const Var& x, double c) {
  return x.tape->push("add", x.val + c, x.id, 1.0, -1, 0.0);
}
inline Var operator+(double c, const Var& y) { return y + c; }

inline Var operator-(const Var& x, const Var& y) {
  return x.tape->push("sub", x.val - y.val, x.id, 1.0, y.id, -1.0);
}
inline Var operator-(const Var& x, double c) {
  return x.tape->push("sub", x.val - c, x.id, 1.0, -1, 0.0);
}
inline Var operator-(double c, const Var& y) {
  return y.tape->push("sub", c - y.val, y.id, -1.0, -1, 0.0);
}
inline Var operator-(const Var& x) {
  return x.tape->push("neg", -x.val, x.id, -1.0, -1, 0.0);
}

inline Var operator*(const Var& x, const Var& y) {
  return x.tape->push("mul", x.val * y.val, x.id, y.val, y.id, x.val);
}
inline Var operator*(const Var& x, double c) {
  return x.tape->push("mul", x.val * c, x.id, c, -1, 0.0);
}
inline Var operator*(double c, const Var& y) { return y * c; }

inline Var operator/(const Var& x, const Var& y) {
  const double inv = 1.0 / y.val;
  return x.tape->push("div", x.val * inv, x.id, inv, y.id, -x.val * inv * inv);
}
inline Var operator/(const Var& x, double c) { return x * (1.0 / c); }
inline Var operator/(double c, const Var& y) {
  const double inv = 1.0 / y.val;
  return y.tape->push("div", c * inv, y.id, -c * inv * inv, -1, 0.0);
}

// ---- elementary functions -------------------------------------------------

inline Var exp(const Var& x) {
  const double e = std::exp(x.val);
  return x.tape->push("exp", e, x.id, e, -1, 0.0);
}

inline Var log(const Var& x) {
  return x.tape->push("log", std::log(x.val), x.id, 1.0 / x.val, -1, 0.0);
}

inline Var sigmoid(const Var& x) {
  const double s = tmvi::sigmoid(x.val);
  return x.tape->push("sigmoid", s, x.id, s * (1.0 - s), -1, 0.0);
}

inline Var softplus(const Var& x) {
  return x.tape->push("softplus", tmvi::softplus(x.val), x.id, tmvi::sigmoid(x.val), -1, 0.0);
}

inline Var tanh(const Var& x) {
  const double t = std::tanh(x.val);
  return x.tape->push("tanh", t, x.id, 1.0 - t * t, -1, 0.0);
}

// x^n for integer n; derivative n*x^(n-1) with the x = 0 cases handled so the
// Bernstein endpoint evaluations stay exact.
inline Var pow_int(const Var& x, int n) {
  if (n == 0) {
    return x.tape->constant(1.0);
  }
  if (n == 1) {
    return x;
  }
  double d;
  if (x.val == 0.0) {
    d = (n == 1) ? 1.0 : 0.0;
  } else {
    d = double(n) * std::pow(x.val, double(n - 1));
  }
  return x.tape->push("pow_int", std::pow(x.val, double(n)), x.id, d, -1, 0.0);
}

// Saturating clamp; zero derivative outside [lo, hi].
inline Var clamp(const Var& x, double lo, double hi) {
  const double v = tmvi::clamp(x.val, lo, hi);
  const double d = (x.val > lo && x.val < hi) ? 1.0 : 0.0;
  return x.tape->push("clamp", v, x.id, d, -1, 0.0);
}

inline Var log_sigmoid_deriv(const Var& x) { return -x - 2.0 * softplus(-x); }

inline Var norm_logpdf(const Var& x) { return -0.5 * x * x - 0.5 * tmvi::kLogTwoPi; }

// ---- gradient driver ------------------------------------------------------

struct GradientResult {
  double value = 0.0;
  std::vector<double> gradient;
};

using ScalarFn = std::function<Var(Tape&, std::span<const Var>)>;

inline double evaluate(const ScalarFn& f, std::span<const double> x) {
  Tape tape;
  std::vector<Var> vars;
  vars.reserve(x.size());
  for (double v : x) {
    vars.push_back(tape.input(v));
  }
  return f(tape, vars).val;
}

inline GradientResult grad(const ScalarFn& f, std::span<const double> x) {
  Tape tape;
  std::vector<Var> vars;
  vars.reserve(x.size());
  for (double v : x) {
    vars.push_back(tape.input(v));
  }
  const Var out = f(tape, vars);
  GradientResult result{out.val, tape.gradient(out, vars)};
  for (double g : result.gradient) {
    if (!std::isfinite(g)) {
      throw NonFiniteError("gradient");
    }
  }
  return result;
}

// Max over coordinates of |analytic - central difference| / max(1, |analytic|).
inline double check_gradient(const ScalarFn& f, std::span<const double> x, double h) {
  if (h <= 0.0) {
    throw std::invalid_argument("check_gradient: step must be positive");
  }
  const GradientResult analytic = grad(f, x);
  std::vector<double> probe(x.begin(), x.end());
  double worst = 0.0;
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const double saved = probe[i];
    probe[i] = saved + h;
    const double fp = evaluate(f, probe);
    probe[i] = saved - h;
    const double fm = evaluate(f, probe);
    probe[i] = saved;
    const double fd = (fp - fm) / (2.0 * h);
    const double denom = std::fmax(1.0, std::fabs(analytic.gradient[i]));
    worst = std::fmax(worst, std::fabs(analytic.gradient[i] - fd) / denom);
  }
  return worst;
}

}  // namespace tmvi::ad
