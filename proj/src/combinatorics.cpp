#include "clickpnr/combinatorics.hpp"

#include "clickpnr/errors.hpp"

#include <map>
#include <memory>
#include <mutex>

namespace clickpnr {

CombinatoricsTable::CombinatoricsTable(int bound) : bound_(bound) {
    if (bound < 0) throw validation_error("combinatorics table bound must be >= 0");
    const std::size_t dim = static_cast<std::size_t>(bound + 1);
    binom_.assign(dim * dim, BigInt(0));
    s2_.assign(dim * dim, BigInt(0));
    s1_.assign(dim * dim, BigInt(0));

    for (int n = 0; n <= bound; ++n) {
        binom_[idx(n, 0)] = 1;
        for (int k = 1; k <= n; ++k)
            binom_[idx(n, k)] = binom_[idx(n - 1, k - 1)] + (k <= n - 1 ? binom_[idx(n - 1, k)] : BigInt(0));
    }

    s2_[idx(0, 0)] = 1;
    for (int n = 1; n <= bound; ++n)
        for (int k = 1; k <= n; ++k)
            s2_[idx(n, k)] = k * s2_[idx(n - 1, k)] + s2_[idx(n - 1, k - 1)];

    s1_[idx(0, 0)] = 1;
    for (int k = 1; k <= bound; ++k)
        for (int m = 1; m <= k; ++m)
            s1_[idx(k, m)] = s1_[idx(k - 1, m - 1)] - (k - 1) * s1_[idx(k - 1, m)];
}

void CombinatoricsTable::check(int a, int b) const {
    if (a < 0 || b < 0) throw validation_error("combinatorics indices must be nonnegative");
    if (a > bound_ || b > bound_) throw validation_error("combinatorics index exceeds table bound");
}

const BigInt& CombinatoricsTable::binomial(int n, int k) const {
    check(n, k);
    return binom_[idx(n, k)];
}

const BigInt& CombinatoricsTable::stirling_second(int n, int k) const {
    check(n, k);
    return s2_[idx(n, k)];
}

const BigInt& CombinatoricsTable::stirling_first_signed(int k, int m) const {
    check(k, m);
    return s1_[idx(k, m)];
}

namespace {

std::mutex table_mutex;
std::map<int, std::unique_ptr<const CombinatoricsTable>>& table_cache() {
    static std::map<int, std::unique_ptr<const CombinatoricsTable>> cache;
    return cache;
}

constexpr int kDefaultBound = 64;

}  // namespace

const CombinatoricsTable& shared_table(int bound) {
    if (bound < 0) throw validation_error("combinatorics table bound must be >= 0");
    // Quantize requested bounds so the cache stays small while lookups stay O(1).
    int b = kDefaultBound;
    while (b < bound) b *= 2;
    std::lock_guard<std::mutex> lock(table_mutex);
    auto& cache = table_cache();
    auto it = cache.find(b);
    if (it == cache.end()) it = cache.emplace(b, std::make_unique<const CombinatoricsTable>(b)).first;
    return *it->second;
}

BigInt binomial(int n, int k) {
    if (n < 0 || k < 0) throw validation_error("binomial arguments must be nonnegative");
    if (k > n) return 0;
    return shared_table(n).binomial(n, k);
}

BigInt stirling_second(int n, int k) {
    if (n < 0 || k < 0) throw validation_error("stirling_second arguments must be nonnegative");
    if (k > n) return 0;
    return shared_table(n).stirling_second(n, k);
}

BigInt stirling_first_signed(int k, int m) {
    if (k < 0 || m < 0) throw validation_error("stirling_first_signed arguments must be nonnegative");
    if (m > k) return 0;
    return shared_table(k).stirling_first_signed(k, m);
}

}  // namespace clickpnr
