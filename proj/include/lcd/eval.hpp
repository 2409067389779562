#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "error.hpp"
#include "graph.hpp"
#include "rng.hpp"

namespace lcd {

/// Precision, recall and F1 of `found` against `truth` with the seed removed
/// from both sets.
struct SetScores {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t overlap = 0;
    std::size_t found = 0; // |found \ {seed}|
    std::size_t truth = 0; // |truth \ {seed}|
    bool both_empty = false;
};

inline SetScores seed_excluded_scores(std::span<const node> found, std::span<const node> truth, node seed) {
    std::vector<node> f(found.begin(), found.end());
    std::vector<node> t(truth.begin(), truth.end());
    std::sort(f.begin(), f.end());
    std::sort(t.begin(), t.end());
    f.erase(std::unique(f.begin(), f.end()), f.end());
    t.erase(std::unique(t.begin(), t.end()), t.end());
    auto drop_seed = [seed](std::vector<node> &s, const char *which) {
        auto it = std::lower_bound(s.begin(), s.end(), seed);
        if (it == s.end() || *it != seed)
            throw DomainError(std::string("seed is not in the ") + which + " community");
        s.erase(it);
    };
    drop_seed(f, "found");
    drop_seed(t, "truth");

    SetScores s;
    s.found = f.size();
    s.truth = t.size();
    std::vector<node> common;
    std::set_intersection(f.begin(), f.end(), t.begin(), t.end(), std::back_inserter(common));
    s.overlap = common.size();
    if (s.found == 0 && s.truth == 0) {
        s.both_empty = true;
        return s;
    }
    const double i = static_cast<double>(s.overlap);
    s.precision = s.found ? i / static_cast<double>(s.found) : 0.0;
    s.recall = s.truth ? i / static_cast<double>(s.truth) : 0.0;
    s.f1 = 2.0 * i / static_cast<double>(s.found + s.truth);
    return s;
}

inline double f1_excluding_seed(std::span<const node> found, std::span<const node> truth, node seed) {
    return seed_excluded_scores(found, truth, seed).f1;
}

/// Plain F1 of two node sets.
inline double set_f1(std::span<const node> a, std::span<const node> b) {
    if (a.empty() && b.empty())
        return 1.0;
    std::vector<node> x(a.begin(), a.end()), y(b.begin(), b.end());
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    std::vector<node> common;
    std::set_intersection(x.begin(), x.end(), y.begin(), y.end(), std::back_inserter(common));
    return 2.0 * static_cast<double>(common.size()) / static_cast<double>(x.size() + y.size());
}

/**
 * Best-match F1 between two collections of communities, averaged in both
 * directions: ½ (mean over truth of the best F1 against found + mean over
 * found of the best F1 against truth).
 */
inline double partition_f1(const std::vector<std::vector<node>> &found, const std::vector<std::vector<node>> &truth) {
    if (found.empty() || truth.empty())
        throw DomainError("partition_f1 needs non-empty collections");
    std::size_t universe = 0;
    for (const auto *side : {&found, &truth})
        for (const auto &c : *side)
            for (node u : c)
                universe = std::max<std::size_t>(universe, u + 1);
    // Overlap counts via a node -> found-community index.
    std::vector<std::vector<std::uint32_t>> owner(universe);
    for (std::uint32_t i = 0; i < found.size(); ++i)
        for (node u : found[i])
            owner[u].push_back(i);
    std::vector<double> best_found(found.size(), 0.0);
    double truth_side = 0.0;
    std::map<std::uint32_t, std::size_t> overlap;
    for (const auto &t : truth) {
        overlap.clear();
        for (node u : t)
            for (auto i : owner[u])
                ++overlap[i];
        double best = 0.0;
        for (auto [i, k] : overlap) {
            const double f = 2.0 * static_cast<double>(k) / static_cast<double>(t.size() + found[i].size());
            best = std::max(best, f);
            best_found[i] = std::max(best_found[i], f);
        }
        truth_side += best;
    }
    const double found_side = std::accumulate(best_found.begin(), best_found.end(), 0.0);
    return 0.5 * (truth_side / static_cast<double>(truth.size()) + found_side / static_cast<double>(found.size()));
}

/// Cut and volume of a node set.
struct CutVolume {
    std::uint64_t cut = 0;
    std::uint64_t volume = 0;
    std::uint64_t within = 0;
};

inline CutVolume cut_volume(const Graph &g, std::span<const node> c) {
    MemberSet set(g.node_count());
    for (node u : c)
        set.insert(u);
    CutVolume r;
    std::uint64_t inside = 0;
    for (node u : set.members()) {
        r.volume += g.degree(u);
        inside += edges_into(g, u, set);
    }
    r.within = inside / 2;
    r.cut = r.volume - inside;
    return r;
}

/// cut / volume = (v - 2w) / v.
inline double conductance(const Graph &g, std::span<const node> c) {
    if (c.empty())
        throw DomainError("conductance of an empty set");
    const CutVolume cv = cut_volume(g, c);
    if (cv.volume == 0)
        throw DomainError("conductance of a zero-volume set");
    return static_cast<double>(cv.cut) / static_cast<double>(cv.volume);
}

struct TTest {
    double t = 0.0;
    double p = 1.0;
    bool zero_variance = false;
};

/// Two-sided paired t-test on a - b.
inline TTest paired_t(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw DomainError("paired_t: samples differ in length");
    if (a.size() < 2)
        throw DomainError("paired_t: need at least two pairs");
    const auto n = static_cast<double>(a.size());
    double mean = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        mean += a[i] - b[i];
    mean /= n;
    double ss = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i] - mean;
        ss += d * d;
    }
    TTest r;
    const double var = ss / (n - 1.0);
    if (!(var > 0.0)) {
        r.zero_variance = true;
        if (mean == 0.0) {
            r.t = 0.0;
            r.p = 1.0;
        } else {
            r.t = std::copysign(std::numeric_limits<double>::infinity(), mean);
            r.p = 0.0;
        }
        return r;
    }
    r.t = mean / std::sqrt(var / n);
    const boost::math::students_t dist(n - 1.0);
    r.p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t)));
    return r;
}

// ---------------------------------------------------------------------------
// Protocol

/// One evaluation draw: a ground-truth community and a seed inside it.
struct EvalTask {
    std::size_t community = 0;
    node seed = 0;
};

/// Draws `samples` communities uniformly without replacement until the pool
/// is exhausted, then with replacement; one uniform seed per community.
inline std::vector<EvalTask> sample_tasks(const std::vector<std::vector<node>> &truths, std::size_t samples, Rng &rng) {
    if (truths.empty())
        throw DomainError("no ground-truth communities to sample from");
    std::vector<std::size_t> pool(truths.size());
    std::iota(pool.begin(), pool.end(), 0);
    rng.shuffle(std::span<std::size_t>(pool));
    std::vector<EvalTask> tasks;
    tasks.reserve(samples);
    for (std::size_t i = 0; i < samples; ++i) {
        const std::size_t c = i < pool.size() ? pool[i] : static_cast<std::size_t>(rng.below(truths.size()));
        const auto &members = truths[c];
        if (members.empty())
            throw DomainError("empty ground-truth community");
        tasks.push_back({c, members[rng.below(members.size())]});
    }
    return tasks;
}

/// Search seed used for sample i of a run seeded with rng_seed.
inline std::uint64_t sample_search_seed(std::uint64_t rng_seed, std::size_t i) {
    Rng r = Rng::stream(rng_seed, 0x5EED000000000000ULL + i);
    return r();
}

struct EvalRow {
    std::string method;
    label_t seed = 0;
    std::size_t truth_size = 0;
    std::size_t found_size = 0;
    double precision = std::numeric_limits<double>::quiet_NaN();
    double recall = std::numeric_limits<double>::quiet_NaN();
    double f1 = std::numeric_limits<double>::quiet_NaN();
    double conductance = std::numeric_limits<double>::quiet_NaN();
    double elapsed = 0.0;
    std::string error; // empty for successful rows

    bool ok() const noexcept { return error.empty(); }
};

/// Returns the recovered community (containing the seed) for a seed node and
/// sample index.
using Detector = std::function<std::vector<node>(node seed, std::size_t sample)>;

inline std::vector<EvalRow> run_protocol(const Graph &g, const std::vector<std::vector<node>> &truths,
                                         std::span<const EvalTask> tasks, const std::string &method,
                                         const Detector &detector) {
    std::vector<EvalRow> rows;
    rows.reserve(tasks.size());
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        const EvalTask &task = tasks[i];
        const auto &truth = truths.at(task.community);
        EvalRow row;
        row.method = method;
        row.seed = g.label(task.seed);
        row.truth_size = truth.size();
        try {
            const auto start = std::chrono::steady_clock::now();
            const std::vector<node> found = detector(task.seed, i);
            row.elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            row.found_size = found.size();
            const SetScores s = seed_excluded_scores(found, truth, task.seed);
            row.precision = s.precision;
            row.recall = s.recall;
            row.f1 = s.f1;
            const CutVolume cv = cut_volume(g, found);
            if (cv.volume > 0)
                row.conductance = static_cast<double>(cv.cut) / static_cast<double>(cv.volume);
        } catch (const Error &e) {
            row.error = e.what();
            std::replace_if(
                row.error.begin(), row.error.end(), [](char ch) { return ch == '\t' || ch == '\n'; }, ' ');
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

struct MeanSe {
    double mean = std::numeric_limits<double>::quiet_NaN();
    double se = std::numeric_limits<double>::quiet_NaN();
};

inline MeanSe mean_se(const std::vector<double> &xs) {
    MeanSe r;
    if (xs.empty())
        return r;
    const auto n = static_cast<double>(xs.size());
    r.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs)
            ss += (x - r.mean) * (x - r.mean);
        r.se = std::sqrt(ss / (n - 1.0) / n);
    }
    return r;
}

struct EvalSummary {
    std::string method;
    std::size_t samples = 0;
    std::size_t failed = 0;
    MeanSe size, precision, recall, f1, conductance, elapsed;
    bool best = false; // best mean F1 or not significantly worse than it
};

inline EvalSummary summarize(const std::string &method, const std::vector<EvalRow> &rows) {
    EvalSummary s;
    s.method = method;
    std::vector<double> size, p, r, f, c, t;
    for (const auto &row : rows) {
        if (row.method != method)
            continue;
        ++s.samples;
        if (!row.ok()) {
            ++s.failed;
            continue;
        }
        size.push_back(static_cast<double>(row.found_size));
        p.push_back(row.precision);
        r.push_back(row.recall);
        f.push_back(row.f1);
        if (std::isfinite(row.conductance))
            c.push_back(row.conductance);
        t.push_back(row.elapsed);
    }
    s.size = mean_se(size);
    s.precision = mean_se(p);
    s.recall = mean_se(r);
    s.f1 = mean_se(f);
    s.conductance = mean_se(c);
    s.elapsed = mean_se(t);
    return s;
}

/**
 * Marks the method with the best mean F1, and every method whose per-sample
 * F1 is not significantly different from it under a paired t-test at
 * `level`. `rows_by_method` holds rows in the same sample order per method;
 * only samples where both methods succeeded are paired.
 */
inline void mark_best(std::vector<EvalSummary> &summaries,
                      const std::map<std::string, std::vector<EvalRow>> &rows_by_method, double level = 0.01) {
    if (summaries.empty())
        return;
    auto best = summaries.begin();
    for (auto it = summaries.begin(); it != summaries.end(); ++it)
        if (std::isfinite(it->f1.mean) && (!std::isfinite(best->f1.mean) || it->f1.mean > best->f1.mean))
            best = it;
    if (!std::isfinite(best->f1.mean))
        return;
    best->best = true;
    const auto &ref = rows_by_method.at(best->method);
    for (auto &s : summaries) {
        if (&s == &*best || !std::isfinite(s.f1.mean))
            continue;
        const auto &other = rows_by_method.at(s.method);
        std::vector<double> a, b;
        for (std::size_t i = 0; i < std::min(ref.size(), other.size()); ++i)
            if (ref[i].ok() && other[i].ok()) {
                a.push_back(ref[i].f1);
                b.push_back(other[i].f1);
            }
        if (a.size() < 2)
            continue;
        s.best = paired_t(a, b).p >= level;
    }
}

namespace detail {

inline void put_real(std::ostream &out, double x, int precision = 6) {
    if (std::isnan(x)) {
        out << "nan";
        return;
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", precision, x);
    out << buf;
}

} // namespace detail

inline constexpr const char *kRowHeader =
    "method\tseed\ttruth_size\tfound_size\tprecision\trecall\tf1\tconductance\telapsed_s\tstatus";
inline constexpr const char *kSummaryHeader =
    "method\tsamples\tfailed\tmean_size\tprecision\tprecision_se\trecall\trecall_se\tf1\tf1_se\tconductance\t"
    "conductance_se\telapsed_s\tbest";
inline constexpr int kTsvVersion = 1;

inline void write_rows(std::ostream &out, const std::vector<EvalRow> &rows, bool timing = true) {
    out << kRowHeader << '\n';
    for (const auto &r : rows) {
        out << r.method << '\t' << r.seed << '\t' << r.truth_size << '\t' << r.found_size << '\t';
        detail::put_real(out, r.precision);
        out << '\t';
        detail::put_real(out, r.recall);
        out << '\t';
        detail::put_real(out, r.f1);
        out << '\t';
        detail::put_real(out, r.conductance);
        out << '\t';
        detail::put_real(out, timing ? r.elapsed : 0.0);
        out << '\t' << (r.ok() ? "ok" : r.error) << '\n';
    }
}

inline void write_summary(std::ostream &out, const std::vector<EvalSummary> &summaries, bool timing = true) {
    out << kSummaryHeader << '\n';
    for (const auto &s : summaries) {
        out << s.method << '\t' << s.samples << '\t' << s.failed << '\t';
        detail::put_real(out, s.size.mean, 2);
        for (const MeanSe *m : {&s.precision, &s.recall, &s.f1, &s.conductance}) {
            out << '\t';
            detail::put_real(out, m->mean, 4);
            out << '\t';
            detail::put_real(out, m->se, 4);
        }
        out << '\t';
        detail::put_real(out, timing ? s.elapsed.mean : 0.0);
        out << '\t' << (s.best ? "*" : "") << '\n';
    }
}

} // namespace lcd
