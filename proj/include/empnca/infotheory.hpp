#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "empnca/errors.hpp"

// Plug-in (maximum-likelihood) discrete estimators in bits. No bias correction;
// zero-probability terms contribute nothing.

namespace empnca {

using SymbolPair = std::pair<int, int>;

class JointHistogram {
  public:
    explicit JointHistogram(int alphabet = 256)
        : k_(alphabet), counts_(static_cast<std::size_t>(alphabet) * alphabet, 0) {
        if (alphabet < 1) {
            throw ConfigError("alphabet size must be positive");
        }
    }

    [[nodiscard]] int alphabet() const noexcept { return k_; }
    [[nodiscard]] std::uint64_t total() const noexcept { return total_; }
    [[nodiscard]] std::uint64_t count(int a, int s) const noexcept { return counts_[index(a, s)]; }

    void add(int a, int s, std::uint64_t n = 1) {
        check_symbol(a);
        check_symbol(s);
        counts_[index(a, s)] += n;
        total_ += n;
    }

    JointHistogram& accumulate(std::span<const SymbolPair> pairs) {
        // Validate first so a bad batch leaves the histogram untouched.
        for (const auto& [a, s] : pairs) {
            check_symbol(a);
            check_symbol(s);
        }
        for (const auto& [a, s] : pairs) {
            ++counts_[index(a, s)];
        }
        total_ += pairs.size();
        return *this;
    }

    JointHistogram& merge(const JointHistogram& other) {
        if (other.k_ != k_) {
            throw ConfigError("cannot merge histograms over different alphabets");
        }
        for (std::size_t i = 0; i < counts_.size(); ++i) {
            counts_[i] += other.counts_[i];
        }
        total_ += other.total_;
        return *this;
    }

    [[nodiscard]] JointHistogram transposed() const {
        JointHistogram t(k_);
        for (int a = 0; a < k_; ++a) {
            for (int s = 0; s < k_; ++s) {
                t.counts_[t.index(s, a)] = counts_[index(a, s)];
            }
        }
        t.total_ = total_;
        return t;
    }

    // Row sums: counts of the first symbol.
    [[nodiscard]] std::vector<std::uint64_t> first_marginal() const {
        std::vector<std::uint64_t> out(static_cast<std::size_t>(k_), 0);
        for (int a = 0; a < k_; ++a) {
            for (int s = 0; s < k_; ++s) {
                out[static_cast<std::size_t>(a)] += counts_[index(a, s)];
            }
        }
        return out;
    }

    // Column sums: counts of the second symbol.
    [[nodiscard]] std::vector<std::uint64_t> second_marginal() const {
        std::vector<std::uint64_t> out(static_cast<std::size_t>(k_), 0);
        for (int a = 0; a < k_; ++a) {
            for (int s = 0; s < k_; ++s) {
                out[static_cast<std::size_t>(s)] += counts_[index(a, s)];
            }
        }
        return out;
    }

  private:
    [[nodiscard]] std::size_t index(int a, int s) const noexcept {
        return static_cast<std::size_t>(a) * static_cast<std::size_t>(k_) + static_cast<std::size_t>(s);
    }

    void check_symbol(int x) const {
        if (x < 0 || x >= k_) {
            throw DataError("symbol " + std::to_string(x) + " outside alphabet [0, " + std::to_string(k_) + ")");
        }
    }

    int k_;
    std::vector<std::uint64_t> counts_;
    std::uint64_t total_ = 0;
};

[[nodiscard]] inline double entropy(std::span<const std::uint64_t> counts) {
    std::uint64_t total = 0;
    for (auto c : counts) {
        total += c;
    }
    if (total == 0) {
        throw EstimatorError("entropy of an empty distribution");
    }
    const double n = static_cast<double>(total);
    double h = 0.0;
    for (auto c : counts) {
        if (c > 0) {
            const double p = static_cast<double>(c) / n;
            h -= p * std::log2(p);
        }
    }
    return std::max(h, 0.0);
}

/// Unfloored plug-in sum, exposed so callers can check how far rounding drifts below 0.
[[nodiscard]] inline double mutual_information_raw(const JointHistogram& hist) {
    if (hist.total() == 0) {
        throw EstimatorError("mutual information of an empty histogram");
    }
    const auto pa = hist.first_marginal();
    const auto ps = hist.second_marginal();
    const double n = static_cast<double>(hist.total());
    double mi = 0.0;
    for (int a = 0; a < hist.alphabet(); ++a) {
        if (pa[static_cast<std::size_t>(a)] == 0) {
            continue;
        }
        for (int s = 0; s < hist.alphabet(); ++s) {
            const auto joint = hist.count(a, s);
            if (joint == 0) {
                continue;
            }
            // p(a,s) / (p(a) p(s)) = n * c(a,s) / (c(a) c(s))
            const double ratio = n * static_cast<double>(joint) /
                                 (static_cast<double>(pa[static_cast<std::size_t>(a)]) *
                                  static_cast<double>(ps[static_cast<std::size_t>(s)]));
            mi += (static_cast<double>(joint) / n) * std::log2(ratio);
        }
    }
    return mi;
}

[[nodiscard]] inline double mutual_information(const JointHistogram& hist) {
    return std::max(mutual_information_raw(hist), 0.0);
}

/// Pointwise term from precomputed marginals (see first_marginal / second_marginal).
[[nodiscard]] inline double pointwise_mi(const JointHistogram& hist, std::span<const std::uint64_t> first,
                                         std::span<const std::uint64_t> second, int a, int s) {
    const auto ca = first[static_cast<std::size_t>(a)];
    const auto cs = second[static_cast<std::size_t>(s)];
    if (ca == 0 || cs == 0) {
        throw EstimatorError("pointwise mutual information queried at a zero-probability marginal");
    }
    const double n = static_cast<double>(hist.total());
    return std::log2(n * static_cast<double>(hist.count(a, s)) / (static_cast<double>(ca) * static_cast<double>(cs)));
}

/// Pointwise term log2[p(a,s) / (p(a) p(s))]. Unobserved pairs with observed marginals
/// give -infinity.
[[nodiscard]] inline double pointwise_mi(const JointHistogram& hist, int a, int s) {
    if (a < 0 || s < 0 || a >= hist.alphabet() || s >= hist.alphabet()) {
        throw DataError("symbol outside alphabet");
    }
    if (hist.total() == 0) {
        throw EstimatorError("pointwise mutual information of an empty histogram");
    }
    std::uint64_t ca = 0;
    std::uint64_t cs = 0;
    for (int x = 0; x < hist.alphabet(); ++x) {
        ca += hist.count(a, x);
        cs += hist.count(x, s);
    }
    if (ca == 0 || cs == 0) {
        throw EstimatorError("pointwise mutual information queried at a zero-probability marginal");
    }
    const double n = static_cast<double>(hist.total());
    return std::log2(n * static_cast<double>(hist.count(a, s)) / (static_cast<double>(ca) * static_cast<double>(cs)));
}

} // namespace empnca
