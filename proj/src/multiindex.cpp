#include "chaoslab/multiindex.hpp"

#include <numeric>
#include <stdexcept>

namespace chaoslab {

MultiIndex::MultiIndex(std::vector<int> entries) : e(std::move(entries)) {
    for (int v : e)
        if (v < 0) throw std::invalid_argument("multi-index entries must be nonnegative");
}

MultiIndex MultiIndex::unit(int d, int i) {
    if (i < 0 || i >= d) throw std::out_of_range("unit multi-index: coordinate out of range");
    MultiIndex m = zero(d);
    m.e[i] = 1;
    return m;
}

MultiIndex MultiIndex::from_labels(int d, const std::vector<int>& labels) {
    MultiIndex m = zero(d);
    for (int l : labels) {
        if (l < 0 || l >= d) throw std::out_of_range("label out of range");
        ++m.e[l];
    }
    return m;
}

int MultiIndex::order() const { return std::accumulate(e.begin(), e.end(), 0); }

std::vector<int> MultiIndex::labels() const {
    std::vector<int> out;
    for (int i = 0; i < dim(); ++i)
        for (int k = 0; k < e[i]; ++k) out.push_back(i);
    return out;
}

double MultiIndex::factorial() const {
    double f = 1.0;
    for (int v : e) f *= chaoslab::factorial(v);
    return f;
}

MultiIndex MultiIndex::operator+(const MultiIndex& o) const {
    if (o.dim() != dim()) throw std::invalid_argument("multi-index dimension mismatch");
    MultiIndex r = *this;
    for (int i = 0; i < dim(); ++i) r.e[i] += o.e[i];
    return r;
}

std::string MultiIndex::str() const {
    std::string s = "(";
    for (int i = 0; i < dim(); ++i) s += (i ? "," : "") + std::to_string(e[i]);
    return s + ")";
}

std::vector<MultiIndex> multi_indices(int d, int n) {
    std::vector<MultiIndex> out;
    std::vector<int> cur(d, 0);
    auto rec = [&](auto&& self, int pos, int left) -> void {
        if (pos == d - 1) {
            cur[pos] = left;
            out.emplace_back(cur);
            return;
        }
        for (int v = left; v >= 0; --v) {
            cur[pos] = v;
            self(self, pos + 1, left - v);
        }
    };
    if (d > 0) rec(rec, 0, n);
    return out;
}

namespace {

std::vector<Partition> build_partitions(int n) {
    std::vector<Partition> out;
    Partition cur;
    auto rec = [&](auto&& self, int k) -> void {
        if (k == n) {
            out.push_back(cur);
            return;
        }
        // by index: the recursion may reallocate cur
        for (std::size_t b = 0; b < cur.size(); ++b) {
            cur[b].push_back(k);
            self(self, k + 1);
            cur[b].pop_back();
        }
        cur.push_back({k});
        self(self, k + 1);
        cur.pop_back();
    };
    rec(rec, 0);
    return out;
}

}  // namespace

const std::vector<Partition>& set_partitions(int n) {
    static const std::vector<std::vector<Partition>> cache = [] {
        std::vector<std::vector<Partition>> c;
        for (int k = 0; k <= 8; ++k) c.push_back(build_partitions(k));
        return c;
    }();
    if (n < 0 || n > 8) throw std::invalid_argument("set partitions supported for n <= 8");
    return cache[n];
}

const std::vector<Partition>& pair_partitions(int n) {
    static const std::vector<std::vector<Partition>> cache = [] {
        std::vector<std::vector<Partition>> c;
        for (int k = 0; k <= 8; ++k) {
            std::vector<Partition> pp;
            for (const auto& p : set_partitions(k)) {
                bool ok = true;
                for (const auto& b : p) ok = ok && b.size() == 2;
                if (ok) pp.push_back(p);
            }
            c.push_back(std::move(pp));
        }
        return c;
    }();
    if (n < 0 || n > 8) throw std::invalid_argument("pair partitions supported for n <= 8");
    return cache[n];
}

double factorial(int n) {
    double f = 1.0;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
}

double binomial(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    double b = 1.0;
    for (int i = 1; i <= k; ++i) b = b * (n - k + i) / i;
    return b;
}

}  // namespace chaoslab
