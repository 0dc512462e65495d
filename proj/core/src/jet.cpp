#include "mkv/jet.hpp"

#include <cmath>
#include <cstdlib>

namespace mkv {

namespace {

void check_compatible(const Jet& a, const Jet& b) {
  if (a.dim() != b.dim() || a.order() != b.order())
    throw std::logic_error("jet dimension/order mismatch");
}

}  // namespace

Jet::Jet(int dim, int order, double value) : n_(dim), order_(order), v_(value) {
  const size_t n = static_cast<size_t>(dim);
  if (order_ >= 1) g_.assign(n, 0.0);
  if (order_ >= 2) h_.assign(n * n, 0.0);
  if (order_ >= 3) t_.assign(n * n * n, 0.0);
}

Jet Jet::variable(int dim, int order, int index, double value) {
  Jet j(dim, order, value);
  if (order >= 1) j.g_[static_cast<size_t>(index)] = 1.0;
  return j;
}

bool Jet::is_constant() const {
  for (double x : g_)
    if (x != 0.0) return false;
  for (double x : h_)
    if (x != 0.0) return false;
  for (double x : t_)
    if (x != 0.0) return false;
  return true;
}

Jet Jet::operator-() const {
  Jet r = *this;
  r.v_ = -r.v_;
  for (double& x : r.g_) x = -x;
  for (double& x : r.h_) x = -x;
  for (double& x : r.t_) x = -x;
  return r;
}

Jet& Jet::operator+=(const Jet& o) {
  check_compatible(*this, o);
  v_ += o.v_;
  for (size_t i = 0; i < g_.size(); ++i) g_[i] += o.g_[i];
  for (size_t i = 0; i < h_.size(); ++i) h_[i] += o.h_[i];
  for (size_t i = 0; i < t_.size(); ++i) t_[i] += o.t_[i];
  return *this;
}

Jet& Jet::operator-=(const Jet& o) {
  check_compatible(*this, o);
  v_ -= o.v_;
  for (size_t i = 0; i < g_.size(); ++i) g_[i] -= o.g_[i];
  for (size_t i = 0; i < h_.size(); ++i) h_[i] -= o.h_[i];
  for (size_t i = 0; i < t_.size(); ++i) t_[i] -= o.t_[i];
  return *this;
}

Jet operator+(const Jet& a, const Jet& b) {
  Jet r = a;
  r += b;
  return r;
}

Jet operator-(const Jet& a, const Jet& b) {
  Jet r = a;
  r -= b;
  return r;
}

Jet operator*(const Jet& a, const Jet& b) {
  check_compatible(a, b);
  const int n = a.n_;
  Jet r(n, a.order_);
  r.v_ = a.v_ * b.v_;
  if (a.order_ >= 1) {
    for (int i = 0; i < n; ++i) r.d_ref(i) = a.d(i) * b.v_ + a.v_ * b.d(i);
  }
  if (a.order_ >= 2) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        r.d2_ref(i, j) =
            a.d2(i, j) * b.v_ + a.d(i) * b.d(j) + a.d(j) * b.d(i) + a.v_ * b.d2(i, j);
  }
  if (a.order_ >= 3) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          r.d3_ref(i, j, k) = a.d3(i, j, k) * b.v_ + a.v_ * b.d3(i, j, k) +
                              a.d(i) * b.d2(j, k) + a.d(j) * b.d2(i, k) + a.d(k) * b.d2(i, j) +
                              a.d2(j, k) * b.d(i) + a.d2(i, k) * b.d(j) + a.d2(i, j) * b.d(k);
  }
  return r;
}

Jet operator/(const Jet& a, const Jet& b) {
  if (b.value() == 0.0) throw JetDomainError("division by zero");
  const double u = b.value();
  const double f[4] = {1.0 / u, -1.0 / (u * u), 2.0 / (u * u * u), -6.0 / (u * u * u * u)};
  return a * b.compose(f);
}

Jet operator+(const Jet& a, double s) {
  Jet r = a;
  r.v_ += s;
  return r;
}
Jet operator+(double s, const Jet& a) { return a + s; }
Jet operator-(const Jet& a, double s) { return a + (-s); }
Jet operator-(double s, const Jet& a) { return (-a) + s; }

Jet operator*(const Jet& a, double s) {
  Jet r = a;
  r.v_ *= s;
  for (double& x : r.g_) x *= s;
  for (double& x : r.h_) x *= s;
  for (double& x : r.t_) x *= s;
  return r;
}
Jet operator*(double s, const Jet& a) { return a * s; }
Jet operator/(const Jet& a, double s) {
  if (s == 0.0) throw JetDomainError("division by zero");
  return a * (1.0 / s);
}

Jet Jet::compose(const double f[4]) const {
  const int n = n_;
  Jet r(n, order_, f[0]);
  if (order_ >= 1) {
    for (int i = 0; i < n; ++i) r.d_ref(i) = f[1] * d(i);
  }
  if (order_ >= 2) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) r.d2_ref(i, j) = f[1] * d2(i, j) + f[2] * d(i) * d(j);
  }
  if (order_ >= 3) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          r.d3_ref(i, j, k) = f[1] * d3(i, j, k) +
                              f[2] * (d(i) * d2(j, k) + d(j) * d2(i, k) + d(k) * d2(i, j)) +
                              f[3] * d(i) * d(j) * d(k);
  }
  return r;
}

Jet exp(const Jet& u) {
  const double e = std::exp(u.value());
  const double f[4] = {e, e, e, e};
  return u.compose(f);
}

Jet log(const Jet& u) {
  const double x = u.value();
  if (x <= 0.0) throw JetDomainError("log of nonpositive value");
  const double f[4] = {std::log(x), 1.0 / x, -1.0 / (x * x), 2.0 / (x * x * x)};
  return u.compose(f);
}

Jet sin(const Jet& u) {
  const double s = std::sin(u.value()), c = std::cos(u.value());
  const double f[4] = {s, c, -s, -c};
  return u.compose(f);
}

Jet cos(const Jet& u) {
  const double s = std::sin(u.value()), c = std::cos(u.value());
  const double f[4] = {c, -s, -c, s};
  return u.compose(f);
}

Jet tan(const Jet& u) {
  const double t = std::tan(u.value());
  const double s = 1.0 + t * t;  // sec^2
  const double f[4] = {t, s, 2.0 * t * s, 2.0 * s * (1.0 + 3.0 * t * t)};
  return u.compose(f);
}

Jet sinh(const Jet& u) {
  const double s = std::sinh(u.value()), c = std::cosh(u.value());
  const double f[4] = {s, c, s, c};
  return u.compose(f);
}

Jet cosh(const Jet& u) {
  const double s = std::sinh(u.value()), c = std::cosh(u.value());
  const double f[4] = {c, s, c, s};
  return u.compose(f);
}

Jet tanh(const Jet& u) {
  const double t = std::tanh(u.value());
  const double s = 1.0 - t * t;
  const double f[4] = {t, s, -2.0 * t * s, s * (6.0 * t * t - 2.0)};
  return u.compose(f);
}

Jet sqrt(const Jet& u) {
  const double x = u.value();
  if (x < 0.0) throw JetDomainError("sqrt of negative value");
  if (x == 0.0 && u.order() >= 1 && !u.is_constant())
    throw JetDomainError("sqrt not differentiable at zero");
  const double r = std::sqrt(x);
  double f[4] = {r, 0.0, 0.0, 0.0};
  if (x > 0.0) {
    f[1] = 0.5 / r;
    f[2] = -0.25 / (x * r);
    f[3] = 0.375 / (x * x * r);
  }
  return u.compose(f);
}

Jet pow(const Jet& base, long long k) {
  const double u = base.value();
  double f[4] = {0.0, 0.0, 0.0, 0.0};
  for (int m = 0; m <= 3; ++m) {
    double coef = 1.0;
    for (int q = 0; q < m; ++q) coef *= static_cast<double>(k - q);
    if (coef == 0.0) continue;  // avoids 0 * u^(negative) at u = 0
    const long long e = k - m;
    if (u == 0.0 && e < 0) throw JetDomainError("zero raised to negative power");
    f[m] = coef * std::pow(u, static_cast<double>(e));
  }
  return base.compose(f);
}

Jet pow(const Jet& base, const Jet& exponent) {
  if (exponent.is_constant()) {
    const double w = exponent.value();
    const double rounded = std::nearbyint(w);
    if (std::abs(w - rounded) < 1e-12 && std::abs(rounded) < 1e15)
      return pow(base, static_cast<long long>(rounded));
    if (base.value() <= 0.0) throw JetDomainError("fractional power of nonpositive base");
    const double u = base.value();
    double f[4];
    f[0] = std::pow(u, w);
    f[1] = w * std::pow(u, w - 1.0);
    f[2] = w * (w - 1.0) * std::pow(u, w - 2.0);
    f[3] = w * (w - 1.0) * (w - 2.0) * std::pow(u, w - 3.0);
    return base.compose(f);
  }
  if (base.value() <= 0.0) throw JetDomainError("variable power of nonpositive base");
  return exp(exponent * log(base));
}

}  // namespace mkv
