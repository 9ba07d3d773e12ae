#pragma once

// Brute-force reference implementations, written without reference to the
// library code. Slow on purpose: straight enumeration, ordered containers,
// natural logs.

#include <cmath>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace podforge::oracle {

using Tokens = std::vector<std::string>;
using Span = std::pair<std::size_t, std::size_t>;  // offset, length

inline std::vector<Span> windows(std::size_t len, std::size_t window, std::size_t stride) {
    if (len <= window) return {{0, len}};
    std::vector<Span> out;
    for (std::size_t off = 0; off <= len - window; ++off) {
        if (off % stride == 0) out.emplace_back(off, window);
    }
    return out;
}

inline Tokens slice(const Tokens& t, Span s) {
    return Tokens(t.begin() + static_cast<long>(s.first),
                  t.begin() + static_cast<long>(s.first + s.second));
}

inline double distinct(const Tokens& t, std::size_t n, const std::vector<Span>& ws) {
    double sum = 0.0;
    for (const auto& w : ws) {
        const Tokens s = slice(t, w);
        std::set<Tokens> grams;
        std::size_t total = 0;
        for (std::size_t i = 0; i + n <= s.size(); ++i) {
            grams.insert(Tokens(s.begin() + static_cast<long>(i), s.begin() + static_cast<long>(i + n)));
            ++total;
        }
        sum += static_cast<double>(grams.size()) / static_cast<double>(total);
    }
    return sum / static_cast<double>(ws.size());
}

// -1 when everything is filtered.
inline double entropy(const Tokens& t, const std::set<std::string>& stop) {
    std::map<std::string, int> counts;
    int total = 0;
    for (const auto& w : t) {
        if (stop.count(w)) continue;
        ++counts[w];
        ++total;
    }
    if (total == 0) return -1.0;
    double h = 0.0;
    for (const auto& kv : counts) {
        const double p = static_cast<double>(kv.second) / total;
        h += -p * std::log(p) / std::log(2.0);
    }
    return h;
}

inline std::size_t unique_non_stop(const Tokens& t, const std::set<std::string>& stop) {
    std::set<std::string> u;
    for (const auto& w : t) {
        if (!stop.count(w)) u.insert(w);
    }
    return u.size();
}

// Mean entropy over windows that keep at least one token; -1 if none do.
inline double info_density(const Tokens& t, const std::set<std::string>& stop,
                           const std::vector<Span>& ws) {
    double sum = 0.0;
    int used = 0;
    for (const auto& w : ws) {
        const double h = entropy(slice(t, w), stop);
        if (h < 0) continue;
        sum += h;
        ++used;
    }
    return used == 0 ? -1.0 : sum / used;
}

// Back-to-back windows; a short tail counts when it is at least half a window.
inline std::vector<Span> semantic_spans(std::size_t len, std::size_t window) {
    std::vector<Span> out;
    std::size_t off = 0;
    while (off < len) {
        const std::size_t rest = len - off;
        if (rest >= window) {
            out.emplace_back(off, window);
        } else if (2 * rest >= window) {
            out.emplace_back(off, rest);
        }
        off += window;
    }
    return out;
}

inline double mean_pairwise_cosine_distance(const std::vector<std::vector<double>>& e) {
    double sum = 0.0;
    int pairs = 0;
    for (std::size_t i = 0; i < e.size(); ++i) {
        for (std::size_t j = 0; j < e.size(); ++j) {
            if (j <= i) continue;
            double dot = 0, na = 0, nb = 0;
            for (std::size_t k = 0; k < e[i].size(); ++k) {
                dot += e[i][k] * e[j][k];
                na += e[i][k] * e[i][k];
                nb += e[j][k] * e[j][k];
            }
            sum += 1.0 - dot / std::sqrt(na * nb);
            ++pairs;
        }
    }
    return sum / pairs;
}

}  // namespace podforge::oracle
