// Copyright 2026 The Thrillette Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <thrillette/common/hash.hpp>
#include <thrillette/thrillette.hpp>

#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <limits>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace thrillette::bench {

/// Deterministic uniform double in [0, 1) from a 64-bit hash.
inline double unit(std::uint64_t h) { return static_cast<double>(h >> 11) * 0x1.0p-53; }

inline std::uint64_t h3(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
    return mix64(hash_combine(hash_combine(seed, a), b));
}

// ------------------------------------------------------------------
// WordCount

/// Word number `id` of the vocabulary: 2 to 9 lowercase letters.
inline std::string vocab_word(std::uint64_t seed, std::uint64_t id) {
    std::uint64_t h = h3(seed, 0x766f63, id);
    std::string w(2 + h % 8, 'a');
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = static_cast<char>('a' + h3(seed, id, i + 1) % 26);
    return w;
}

/// Line `i` of the generated text: 4 to 15 words drawn uniformly from the
/// vocabulary, separated by single spaces.
inline std::string text_line(std::uint64_t seed, std::size_t vocab, std::uint64_t i) {
    std::uint64_t h = h3(seed, 0x6c696e65, i);
    const std::size_t words = 4 + h % 12;
    std::string line;
    for (std::size_t j = 0; j < words; ++j) {
        if (j) line += ' ';
        line += vocab_word(seed, h3(seed, i, j + 1) % vocab);
    }
    return line;
}

/// Average generated line length in bytes, newline included.
inline constexpr std::size_t kAverageLineBytes = 62;

inline std::size_t text_lines_for(std::size_t n_bytes) { return n_bytes / kAverageLineBytes; }

/// Writes about n_bytes of text as part files under `dir`.
inline std::size_t gen_text(Context& ctx, const std::string& dir, std::size_t n_bytes, std::size_t vocab,
                            std::uint64_t seed) {
    return write_lines(generate(ctx, text_lines_for(n_bytes), [=](std::size_t i) { return text_line(seed, vocab, i); }),
                       dir);
}

using WordCountPair = std::pair<std::string, std::uint64_t>;

inline std::uint64_t word_count_item_hash(const WordCountPair& p) {
    return mix64(hash_combine(hash_bytes(p.first.data(), p.first.size()), p.second));
}

template <typename S>
DIA<WordCountPair> word_count(const DIA<std::string, S>& lines) {
    auto words = lines.template flat_map<WordCountPair>([](const std::string& line, auto emit) {
        std::size_t i = 0;
        while (i < line.size()) {
            while (i < line.size() && line[i] == ' ') ++i;
            std::size_t j = i;
            while (j < line.size() && line[j] != ' ') ++j;
            if (j > i) emit(WordCountPair(line.substr(i, j - i), 1));
            i = j;
        }
    });
    return reduce_pair(words, [](std::uint64_t a, std::uint64_t b) { return a + b; });
}

struct WordCountResult
{
    std::uint64_t digest = 0;
    std::uint64_t distinct = 0;
    std::uint64_t total = 0;
};

/// Order-independent digest of (word, count) pairs.
template <typename S>
WordCountResult word_count_digest(const DIA<WordCountPair, S>& counts) {
    auto digest = sum_future(counts.map(word_count_item_hash));
    auto total = sum_future(counts.map([](const WordCountPair& p) { return p.second; }));
    auto distinct = size_future(counts);
    return { digest.get(), distinct.get(), total.get() };
}

// ------------------------------------------------------------------
// PageRank

using Edge = std::pair<std::uint64_t, std::uint64_t>;

inline constexpr double kDamping = 0.85;
/// Ranks are fixed-point numbers with this many fraction bits, so sums
/// are exact and independent of the worker count.
inline constexpr int kRankBits = 60;
inline constexpr std::uint64_t kRankOne = std::uint64_t(1) << kRankBits;

inline double rank_to_double(std::uint64_t r) { return std::ldexp(static_cast<double>(r), -kRankBits); }

/// Out-degree of vertex v: uniform in [0, 2 * avg_degree].
inline std::uint64_t out_degree(std::uint64_t seed, double avg_degree, std::uint64_t v) {
    const auto span = static_cast<std::uint64_t>(std::llround(2 * avg_degree)) + 1;
    return h3(seed, 0x646567, v) % span;
}

/// Edges of vertex v with uniformly random targets.
template <typename Emit>
void vertex_edges(std::uint64_t seed, std::uint64_t vertices, double avg_degree, std::uint64_t v, Emit&& emit) {
    const std::uint64_t d = out_degree(seed, avg_degree, v);
    for (std::uint64_t j = 0; j < d; ++j) emit(Edge(v, h3(seed, v, j + 1) % vertices));
}

inline auto gen_graph(Context& ctx, std::uint64_t vertices, double avg_degree, std::uint64_t seed) {
    return generate(ctx, vertices).template flat_map<Edge>([=](std::size_t v, auto emit) {
        vertex_edges(seed, vertices, avg_degree, v, emit);
    });
}

/// Ranks of all vertices after `iterations` rounds of
///   r'(v) = (1 - d) / n + d * sum over edges (u, v) of r(u) / outdeg(u).
/// Vertices without out-edges pass on nothing.
template <typename S>
DIA<std::uint64_t> page_rank(const DIA<Edge, S>& edges, std::uint64_t vertices, std::size_t iterations) {
    Context& ctx = edges.context();
    using Adjacency = std::vector<std::uint64_t>;
    auto links = group_to_index(
        edges, [](const Edge& e) { return static_cast<std::size_t>(e.first); },
        [](std::size_t, auto& items) {
            Adjacency out;
            while (items.has_next()) out.push_back(items.next().second);
            return out;
        },
        vertices, Adjacency());
    links.keep(iterations);

    const std::uint64_t base = vertices ? static_cast<std::uint64_t>(std::llround((1 - kDamping) / double(vertices) * double(kRankOne))) : 0;
    const std::uint64_t initial = vertices ? kRankOne / vertices : 0;
    DIA<std::uint64_t> ranks = collapse(generate(ctx, vertices, [initial](std::size_t) { return initial; }));
    using Contribution = std::pair<std::uint64_t, std::uint64_t>;
    for (std::size_t it = 0; it < iterations; ++it) {
        auto contribs = zip(links, ranks, [](const Adjacency& out, std::uint64_t r) { return std::make_pair(out, r); })
                            .template flat_map<Contribution>([](const std::pair<Adjacency, std::uint64_t>& x, auto emit) {
                                if (x.first.empty()) return;
                                const std::uint64_t share = x.second / x.first.size();
                                for (auto v : x.first) emit(Contribution(v, share));
                            });
        auto sums = reduce_to_index(
            contribs, [](const Contribution& c) { return static_cast<std::size_t>(c.first); },
            [](const Contribution& a, const Contribution& b) { return Contribution(a.first, a.second + b.second); },
            vertices, Contribution(0, 0));
        ranks = collapse(sums.map([base](const Contribution& c) {
            const auto damped = static_cast<std::uint64_t>((static_cast<unsigned __int128>(c.second) * 85) / 100);
            return base + damped;
        }));
    }
    return ranks;
}

template <typename S>
std::uint64_t page_rank_digest(const DIA<std::uint64_t, S>& ranks) {
    return sum(zip_with_index(ranks, [](std::uint64_t r, std::size_t i) { return mix64(hash_combine(i, r)); }));
}

// ------------------------------------------------------------------
// TeraSort

inline constexpr std::size_t kRecordBytes = 100;
inline constexpr std::size_t kKeyBytes = 10;
using Record = std::array<std::uint8_t, kRecordBytes>;

struct RecordKeyLess
{
    bool operator()(const Record& a, const Record& b) const { return std::memcmp(a.data(), b.data(), kKeyBytes) < 0; }
};

/// Record i: 10 random key bytes, then its index and filler bytes.
inline Record make_record(std::uint64_t seed, std::uint64_t i) {
    Record r{};
    std::uint64_t a = h3(seed, 0x6b6579, i), b = h3(seed, 0x6b657932, i);
    std::memcpy(r.data(), &a, 8);
    std::memcpy(r.data() + 8, &b, 2);
    for (std::size_t j = 0; j < 8; ++j) r[kKeyBytes + j] = static_cast<std::uint8_t>(i >> (8 * j));
    for (std::size_t j = kKeyBytes + 8; j < kRecordBytes; ++j) r[j] = static_cast<std::uint8_t>('A' + (i + j) % 26);
    return r;
}

inline std::size_t gen_records(Context& ctx, const std::string& dir, std::size_t n, std::uint64_t seed) {
    return write_binary(generate(ctx, n, [seed](std::size_t i) { return make_record(seed, i); }), dir);
}

inline std::uint64_t record_hash(const Record& r) { return mix64(hash_bytes(r.data(), r.size())); }

struct SortCheck
{
    std::uint64_t items = 0;
    std::uint64_t multiset_hash = 0;
    std::uint64_t misordered = 0;
};

/// Item count, order-independent hash and number of adjacent pairs out of
/// key order.
template <typename S>
SortCheck check_records(const DIA<Record, S>& d) {
    auto n = size_future(d);
    auto h = sum_future(d.map(record_hash));
    auto bad = sum_future(window(d, 2, [](std::size_t, std::span<const Record> w) {
        return std::uint64_t(RecordKeyLess()(w[1], w[0]) ? 1 : 0);
    }));
    return { n.get(), h.get(), bad.get() };
}

// ------------------------------------------------------------------
// KMeans

inline constexpr std::size_t kDims = 3;
using Point = std::array<double, kDims>;
/// Coordinates are summed in fixed point with this many fraction bits.
inline constexpr int kCoordBits = 30;

inline std::int64_t to_fixed(double x) { return static_cast<std::int64_t>(std::llround(std::ldexp(x, kCoordBits))); }

/// Point i: a random one of `clusters` centers in [0, 100)^3 plus noise
/// in [-5, 5) per coordinate.
inline Point make_point(std::uint64_t seed, std::size_t clusters, std::uint64_t i) {
    const std::uint64_t c = h3(seed, 0x636c, i) % clusters;
    Point p;
    for (std::size_t d = 0; d < kDims; ++d)
        p[d] = 100.0 * unit(h3(seed, 0x63656e + c, d)) + 10.0 * (unit(h3(seed, i, 0x6e6f + d)) - 0.5);
    return p;
}

inline std::size_t gen_points(Context& ctx, const std::string& dir, std::size_t n, std::size_t clusters,
                              std::uint64_t seed) {
    return write_binary(generate(ctx, n, [=](std::size_t i) { return make_point(seed, clusters, i); }), dir);
}

/// Nearest centroid; ties go to the lowest id.
inline std::size_t nearest(const Point& p, const std::vector<Point>& centroids) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centroids.size(); ++c) {
        double d = 0;
        for (std::size_t k = 0; k < kDims; ++k) d += (p[k] - centroids[c][k]) * (p[k] - centroids[c][k]);
        if (d < best_d) best = c, best_d = d;
    }
    return best;
}

/// Lloyd's algorithm from the given initial centroids. A centroid without
/// points keeps its previous position.
template <typename S>
std::vector<Point> k_means(const DIA<Point, S>& points, std::vector<Point> centroids, std::size_t iterations) {
    using Sum = std::tuple<std::uint64_t, std::array<std::int64_t, kDims>, std::uint64_t>;
    auto pts = collapse(points);
    pts.keep(iterations);
    const std::size_t k = centroids.size();
    for (std::size_t it = 0; it < iterations; ++it) {
        auto sums = reduce_to_index(
            pts.map([centroids](const Point& p) {
                Sum s{ nearest(p, centroids), {}, 1 };
                for (std::size_t d = 0; d < kDims; ++d) std::get<1>(s)[d] = to_fixed(p[d]);
                return s;
            }),
            [](const Sum& s) { return static_cast<std::size_t>(std::get<0>(s)); },
            [](const Sum& a, const Sum& b) {
                Sum r = a;
                for (std::size_t d = 0; d < kDims; ++d) std::get<1>(r)[d] += std::get<1>(b)[d];
                std::get<2>(r) += std::get<2>(b);
                return r;
            },
            k, Sum{ 0, {}, 0 });
        auto all = all_gather(sums);
        for (std::size_t c = 0; c < k; ++c) {
            const auto& [id, s, n] = all[c];
            (void)id;
            if (n == 0) continue;
            for (std::size_t d = 0; d < kDims; ++d)
                centroids[c][d] = std::ldexp(static_cast<double>(s[d]), -kCoordBits) / static_cast<double>(n);
        }
    }
    return centroids;
}

/// The first k points in global order.
template <typename S>
std::vector<Point> first_points(const DIA<Point, S>& points, std::size_t k) {
    auto head = zip_with_index(points)
                    .filter([k](const std::pair<std::size_t, Point>& x) { return x.first < k; })
                    .map([](const std::pair<std::size_t, Point>& x) { return x.second; });
    return all_gather(head);
}

inline std::uint64_t centroid_digest(const std::vector<Point>& centroids) {
    std::uint64_t h = 0;
    for (const auto& c : centroids)
        for (double x : c) {
            std::uint64_t bits;
            std::memcpy(&bits, &x, 8);
            h = hash_combine(h, bits);
        }
    return h;
}

// ------------------------------------------------------------------
// Sleep

inline void sleep_kernel(Context& ctx, double seconds) {
    std::this_thread::sleep_for(std::chrono::duration<double>(seconds));
    ctx.net().barrier();
}

} // namespace thrillette::bench
