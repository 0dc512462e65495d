#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <vector>

namespace mkv {

/// Dense rank-R array with equal extent `n` per axis. The workhorse for
/// pointwise tensor components; indices are chart-coordinate slots.
template <int R>
class Nd {
 public:
  Nd() = default;
  explicit Nd(int n) : n_(n), v_(total(n), 0.0) {}

  int extent() const { return n_; }

  template <class... I>
  double& operator()(I... idx) {
    static_assert(sizeof...(I) == R);
    return v_[flat(idx...)];
  }
  template <class... I>
  double operator()(I... idx) const {
    static_assert(sizeof...(I) == R);
    return v_[flat(idx...)];
  }

  std::vector<double>& data() { return v_; }
  const std::vector<double>& data() const { return v_; }

  double max_abs() const {
    double m = 0.0;
    for (double x : v_) m = std::max(m, std::abs(x));
    return m;
  }

  friend Nd operator+(const Nd& a, const Nd& b) {
    Nd r(a.n_);
    for (size_t i = 0; i < r.v_.size(); ++i) r.v_[i] = a.v_[i] + b.v_[i];
    return r;
  }
  friend Nd operator-(const Nd& a, const Nd& b) {
    Nd r(a.n_);
    for (size_t i = 0; i < r.v_.size(); ++i) r.v_[i] = a.v_[i] - b.v_[i];
    return r;
  }
  friend Nd operator*(double s, const Nd& a) {
    Nd r(a.n_);
    for (size_t i = 0; i < r.v_.size(); ++i) r.v_[i] = s * a.v_[i];
    return r;
  }

 private:
  static size_t total(int n) {
    size_t t = 1;
    for (int i = 0; i < R; ++i) t *= static_cast<size_t>(n);
    return t;
  }
  template <class... I>
  size_t flat(I... idx) const {
    size_t f = 0;
    ((f = f * static_cast<size_t>(n_) + static_cast<size_t>(idx)), ...);
    return f;
  }

  int n_ = 0;
  std::vector<double> v_;
};

using Vec = std::vector<double>;

inline double max_abs(const Vec& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

/// Components of a type-(r,s) tensor at a base point.
struct TensorValue {
  int contravariant = 0;
  int covariant = 0;
  int dim = 0;
  std::vector<double> components;  // row-major, contravariant slots first
  std::vector<double> point;

  int rank() const { return contravariant + covariant; }
  double max_abs() const {
    double m = 0.0;
    for (double x : components) m = std::max(m, std::abs(x));
    return m;
  }
};

template <int R>
TensorValue to_tensor(const Nd<R>& a, int contravariant, const Vec& point) {
  TensorValue t;
  t.contravariant = contravariant;
  t.covariant = R - contravariant;
  t.dim = a.extent();
  t.components = a.data();
  t.point = point;
  return t;
}

}  // namespace mkv
