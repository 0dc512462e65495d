#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace mkv {

/// Raised when a jet operation leaves its domain (log of a nonpositive
/// value, division by zero, fractional power of a negative base, ...).
struct JetDomainError : std::runtime_error {
  explicit JetDomainError(const std::string& what) : std::runtime_error(what) {}
};

/// Truncated multivariate Taylor expansion of a scalar field at a point:
/// value plus all partial derivatives up to `order` (at most 3) with
/// respect to `dim` chart coordinates. Slots above `order` stay zero.
///
/// Second and third derivative blocks are stored dense; symmetry under
/// index permutation is maintained by construction.
class Jet {
 public:
  Jet() = default;
  Jet(int dim, int order, double value = 0.0);

  /// Jet of the i-th coordinate function at a point where it equals `value`.
  static Jet variable(int dim, int order, int index, double value);
  static Jet constant(int dim, int order, double value) { return Jet(dim, order, value); }

  int dim() const { return n_; }
  int order() const { return order_; }

  double value() const { return v_; }
  double d(int i) const { return order_ >= 1 ? g_[static_cast<size_t>(i)] : 0.0; }
  double d2(int i, int j) const { return order_ >= 2 ? h_[static_cast<size_t>(i * n_ + j)] : 0.0; }
  double d3(int i, int j, int k) const {
    return order_ >= 3 ? t_[static_cast<size_t>((i * n_ + j) * n_ + k)] : 0.0;
  }

  double& value_ref() { return v_; }
  double& d_ref(int i) { return g_[static_cast<size_t>(i)]; }
  double& d2_ref(int i, int j) { return h_[static_cast<size_t>(i * n_ + j)]; }
  double& d3_ref(int i, int j, int k) { return t_[static_cast<size_t>((i * n_ + j) * n_ + k)]; }

  /// True when every derivative slot is exactly zero (a constant jet).
  bool is_constant() const;

  Jet operator-() const;
  Jet& operator+=(const Jet& o);
  Jet& operator-=(const Jet& o);

  friend Jet operator+(const Jet& a, const Jet& b);
  friend Jet operator-(const Jet& a, const Jet& b);
  friend Jet operator*(const Jet& a, const Jet& b);
  friend Jet operator/(const Jet& a, const Jet& b);

  friend Jet operator+(const Jet& a, double s);
  friend Jet operator+(double s, const Jet& a);
  friend Jet operator-(const Jet& a, double s);
  friend Jet operator-(double s, const Jet& a);
  friend Jet operator*(const Jet& a, double s);
  friend Jet operator*(double s, const Jet& a);
  friend Jet operator/(const Jet& a, double s);

  /// Composition with a univariate function given its derivatives
  /// f(u), f'(u), f''(u), f'''(u) evaluated at this jet's value.
  Jet compose(const double f[4]) const;

 private:
  int n_ = 0;
  int order_ = 0;
  double v_ = 0.0;
  std::vector<double> g_;  // n
  std::vector<double> h_;  // n*n, symmetric
  std::vector<double> t_;  // n*n*n, fully symmetric
};

Jet exp(const Jet& u);
Jet log(const Jet& u);
Jet sin(const Jet& u);
Jet cos(const Jet& u);
Jet tan(const Jet& u);
Jet sinh(const Jet& u);
Jet cosh(const Jet& u);
Jet tanh(const Jet& u);
Jet sqrt(const Jet& u);
Jet pow(const Jet& base, long long k);
Jet pow(const Jet& base, const Jet& exponent);

}  // namespace mkv
