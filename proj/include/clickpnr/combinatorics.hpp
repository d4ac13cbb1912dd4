#ifndef CLICKPNR_COMBINATORICS_HPP
#define CLICKPNR_COMBINATORICS_HPP

#include <boost/multiprecision/cpp_int.hpp>

#include <vector>

namespace clickpnr {

// Exact arbitrary-precision integer. All combinatorics stay exact; conversion to
// floating point happens only when channel matrices are assembled.
using BigInt = boost::multiprecision::cpp_int;
using BigRational = boost::multiprecision::cpp_rational;

// Immutable triangle tables of binomial coefficients and Stirling numbers of both
// kinds, valid for all indices in [0, bound]. Construction recomputes everything
// from the defining recurrences; after that, lookups are safe for unrestricted
// concurrent reads.
class CombinatoricsTable {
  public:
    explicit CombinatoricsTable(int bound);

    // binom(n, k); zero when k > n.
    const BigInt& binomial(int n, int k) const;

    // Stirling numbers of the second kind {n k}: partitions of an n-set into k
    // nonempty blocks. Recurrence {n k} = k*{n-1 k} + {n-1 k-1}.
    const BigInt& stirling_second(int n, int k) const;

    // Signed Stirling numbers of the first kind s(k, m), the coefficients of the
    // falling factorial. Recurrence s(k m) = s(k-1 m-1) - (k-1)*s(k-1 m).
    const BigInt& stirling_first_signed(int k, int m) const;

    int bound() const { return bound_; }

  private:
    std::size_t idx(int a, int b) const { return static_cast<std::size_t>(a) * (bound_ + 1) + b; }
    void check(int a, int b) const;

    int bound_;
    std::vector<BigInt> binom_;
    std::vector<BigInt> s2_;
    std::vector<BigInt> s1_;
};

// Process-wide immutable table cache. Returns a table with bound() >= bound;
// repeated calls share storage. Thread-safe.
const CombinatoricsTable& shared_table(int bound);

// Convenience single-value lookups through the shared cache.
BigInt binomial(int n, int k);
BigInt stirling_second(int n, int k);
BigInt stirling_first_signed(int k, int m);

}  // namespace clickpnr

#endif
