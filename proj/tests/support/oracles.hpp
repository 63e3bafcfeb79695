#pragma once

// Independent reimplementations used as test oracles. Kept deliberately naive:
// ASCII-only tokenization, quadratic counting, full sorts.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

namespace oracle {

inline std::vector<std::string> ascii_tokens(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : s) {
        if (ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r' || ch == '\v' || ch == '\f') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

// Counts each distinct n-gram by rescanning the whole sequence.
inline double ngram_entropy(const std::string& s, int n) {
    const auto t = ascii_tokens(s);
    if (static_cast<int>(t.size()) < n) return 0.0;
    const std::size_t windows = t.size() - static_cast<std::size_t>(n) + 1;
    std::vector<std::vector<std::string>> grams;
    for (std::size_t i = 0; i < windows; ++i) grams.emplace_back(t.begin() + i, t.begin() + i + n);
    std::vector<bool> done(windows, false);
    double h = 0.0;
    for (std::size_t i = 0; i < windows; ++i) {
        if (done[i]) continue;
        std::size_t count = 0;
        for (std::size_t j = i; j < windows; ++j) {
            if (grams[j] == grams[i]) {
                ++count;
                done[j] = true;
            }
        }
        const double p = static_cast<double>(count) / static_cast<double>(windows);
        h -= p * std::log(p) / std::log(2.0);
    }
    return h;
}

inline double fluency(const std::string& s, double w2 = 0.5, double w3 = 0.5) {
    return w2 * ngram_entropy(s, 2) + w3 * ngram_entropy(s, 3);
}

inline std::uint64_t fnv1a(const std::string& s, std::uint64_t seed = 0) {
    std::uint64_t h = 14695981039346656037ULL ^ seed;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

// Reference embedding restricted to ASCII input.
inline std::vector<double> embed_ascii(const std::string& text, std::size_t dim, std::uint64_t seed = 0) {
    std::string lower = text;
    for (auto& c : lower)
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    const auto t = ascii_tokens(lower);
    std::vector<std::string> feats(t.begin(), t.end());
    for (std::size_t i = 0; i + 1 < t.size(); ++i) feats.push_back(t[i] + '\x1f' + t[i + 1]);
    std::string joined;
    for (std::size_t i = 0; i < t.size(); ++i) joined += (i ? " " : "") + t[i];
    for (std::size_t i = 0; i + 3 <= joined.size(); ++i) feats.push_back(joined.substr(i, 3));
    std::vector<double> v(dim, 0.0);
    for (const auto& f : feats) {
        const auto h = fnv1a(f, seed);
        v[h % dim] += (h >> 63) ? -1.0 : 1.0;
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm > 0)
        for (auto& x : v) x /= norm;
    return v;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// Indices of the top-k rows by score, ties by smaller index.
inline std::vector<std::size_t> top_k(const std::vector<std::vector<double>>& rows, const std::vector<double>& q,
                                      std::size_t k) {
    std::vector<std::size_t> idx(rows.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::vector<double> score(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) score[i] = dot(rows[i], q);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
    idx.resize(std::min(k, idx.size()));
    return idx;
}

} // namespace oracle
