#include "hyrql/amplitude.hpp"

#include <sstream>
#include <vector>

namespace hyrql {

Amplitude::Amplitude(mpq_class c0, mpq_class c1, mpq_class c2, mpq_class c3)
    : c_{std::move(c0), std::move(c1), std::move(c2), std::move(c3)} {
  for (auto& q : c_) q.canonicalize();
}

Amplitude Amplitude::zeta(int k) {
  k %= 8;
  if (k < 0) k += 8;
  Amplitude a;
  if (k < 4) a.c_[static_cast<std::size_t>(k)] = 1;
  else a.c_[static_cast<std::size_t>(k - 4)] = -1;
  return a;
}

Amplitude Amplitude::sqrt2() { return zeta(1) - zeta(3); }

Amplitude Amplitude::inv_sqrt2() {
  return Amplitude(0, mpq_class(1, 2), 0, mpq_class(-1, 2));
}

Amplitude Amplitude::rational(long num, long den) {
  if (den == 0) throw AmplitudeError("zero denominator");
  mpq_class q(num, den);
  q.canonicalize();
  return Amplitude(q);
}

Amplitude Amplitude::operator+(const Amplitude& o) const {
  Amplitude r;
  for (std::size_t k = 0; k < 4; ++k) r.c_[k] = c_[k] + o.c_[k];
  return r;
}

Amplitude Amplitude::operator-(const Amplitude& o) const {
  Amplitude r;
  for (std::size_t k = 0; k < 4; ++k) r.c_[k] = c_[k] - o.c_[k];
  return r;
}

Amplitude Amplitude::operator*(const Amplitude& o) const {
  Amplitude r;
  for (std::size_t i = 0; i < 4; ++i) {
    if (sgn(c_[i]) == 0) continue;
    for (std::size_t j = 0; j < 4; ++j) {
      if (sgn(o.c_[j]) == 0) continue;
      mpq_class p = c_[i] * o.c_[j];
      std::size_t k = i + j;
      if (k >= 4) r.c_[k - 4] -= p;
      else r.c_[k] += p;
    }
  }
  return r;
}

bool Amplitude::operator==(const Amplitude& o) const {
  for (std::size_t k = 0; k < 4; ++k)
    if (c_[k] != o.c_[k]) return false;
  return true;
}

Amplitude Amplitude::negate() const {
  Amplitude r;
  for (std::size_t k = 0; k < 4; ++k) r.c_[k] = -c_[k];
  return r;
}

Amplitude Amplitude::galois(int k) const {
  Amplitude r;
  for (int j = 0; j < 4; ++j) {
    const auto& c = c_[static_cast<std::size_t>(j)];
    if (sgn(c) == 0) continue;
    r = r + zeta(j * k) * Amplitude(c);
  }
  return r;
}

Amplitude Amplitude::conj() const { return galois(7); }

Amplitude Amplitude::inverse() const {
  if (is_zero()) throw AmplitudeError("inverse of zero amplitude");
  Amplitude others = galois(3) * galois(5) * galois(7);
  Amplitude n = *this * others;
  // n is rational: the field norm down to Q.
  return others * Amplitude(mpq_class(1) / n.c_[0]);
}

bool Amplitude::is_zero() const {
  for (const auto& q : c_)
    if (sgn(q) != 0) return false;
  return true;
}

bool Amplitude::is_rational() const {
  return sgn(c_[1]) == 0 && sgn(c_[2]) == 0 && sgn(c_[3]) == 0;
}

int Amplitude::compare(const Amplitude& o) const {
  for (std::size_t k = 0; k < 4; ++k) {
    int c = cmp(c_[k], o.c_[k]);
    if (c != 0) return c < 0 ? -1 : 1;
  }
  return 0;
}

std::string Amplitude::str() const {
  // a = r1 + r2*i + r3*sqrt2 + r4*i*sqrt2
  mpq_class r3 = (c_[1] - c_[3]) / 2;
  mpq_class r4 = (c_[1] + c_[3]) / 2;
  r3.canonicalize();
  r4.canonicalize();
  const std::vector<std::pair<mpq_class, std::string>> parts = {
      {c_[0], ""}, {c_[2], "i"}, {r3, "sqrt2"}, {r4, "i*sqrt2"}};
  std::ostringstream os;
  bool first = true;
  for (const auto& [q, basis] : parts) {
    if (sgn(q) == 0) continue;
    mpq_class mag = abs(q);
    if (first) {
      if (sgn(q) < 0) os << "-";
    } else {
      os << (sgn(q) < 0 ? " - " : " + ");
    }
    first = false;
    if (basis.empty()) {
      os << mag.get_str();
    } else if (mag == 1) {
      os << basis;
    } else {
      os << mag.get_str() << "*" << basis;
    }
  }
  if (first) return "0";
  return os.str();
}

Amplitude add(const Amplitude& a, const Amplitude& b) { return a + b; }
Amplitude mul(const Amplitude& a, const Amplitude& b) { return a * b; }
Amplitude conj(const Amplitude& a) { return a.conj(); }
Amplitude norm_sq(const Amplitude& a) { return a.norm_sq(); }
Amplitude negate(const Amplitude& a) { return a.negate(); }
bool is_zero(const Amplitude& a) { return a.is_zero(); }

} // namespace hyrql
