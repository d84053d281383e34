#ifndef HYRQL_AMPLITUDE_HPP
#define HYRQL_AMPLITUDE_HPP

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <gmpxx.h>

namespace hyrql {

// Element of Q(zeta8): c0 + c1*z + c2*z^2 + c3*z^3 with z = e^{i pi/4}, z^4 = -1.
class Amplitude {
public:
  Amplitude() = default;
  Amplitude(long v) { c_[0] = v; }
  explicit Amplitude(const mpq_class& q) { c_[0] = q; c_[0].canonicalize(); }
  Amplitude(mpq_class c0, mpq_class c1, mpq_class c2, mpq_class c3);

  static Amplitude zeta(int k);
  static Amplitude i() { return zeta(2); }
  static Amplitude sqrt2();
  static Amplitude inv_sqrt2();
  static Amplitude rational(long num, long den);

  const mpq_class& coeff(int k) const { return c_[static_cast<std::size_t>(k)]; }

  Amplitude operator+(const Amplitude& o) const;
  Amplitude operator-(const Amplitude& o) const;
  Amplitude operator*(const Amplitude& o) const;
  Amplitude operator/(const Amplitude& o) const { return *this * o.inverse(); }
  Amplitude operator-() const { return negate(); }
  Amplitude& operator+=(const Amplitude& o) { return *this = *this + o; }
  Amplitude& operator*=(const Amplitude& o) { return *this = *this * o; }

  bool operator==(const Amplitude& o) const;
  bool operator!=(const Amplitude& o) const { return !(*this == o); }

  Amplitude negate() const;
  Amplitude conj() const;
  // The Galois automorphism z -> z^k for odd k.
  Amplitude galois(int k) const;
  Amplitude norm_sq() const { return *this * conj(); }
  Amplitude inverse() const;

  bool is_zero() const;
  bool is_one() const { return *this == Amplitude(1); }
  bool is_rational() const;

  // Total order used for deterministic sorting; lexicographic on coefficients.
  int compare(const Amplitude& o) const;

  // Parseable rendering in terms of 1, i, sqrt2 and i*sqrt2.
  std::string str() const;

private:
  std::array<mpq_class, 4> c_{};
};

Amplitude add(const Amplitude& a, const Amplitude& b);
Amplitude mul(const Amplitude& a, const Amplitude& b);
Amplitude conj(const Amplitude& a);
Amplitude norm_sq(const Amplitude& a);
Amplitude negate(const Amplitude& a);
bool is_zero(const Amplitude& a);

struct AmplitudeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

} // namespace hyrql

#endif
