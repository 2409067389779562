#pragma once

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lcd.hpp"

namespace lcd::cli {

inline constexpr const char *kVersion = "0.1.0";

enum Exit : int { kOk = 0, kIoError = 1, kUsageError = 2 };

/// File-open failure; reported with exit code 1.
class IoError : public Error {
public:
    using Error::Error;
};

namespace detail {

struct PriorFlags {
    double gamma = 2.0;
    double alpha = 1.0;
    double theta = 1.0;
    double alpha_plus = 1.0;
    double alpha_minus = 1.0;
    std::string shape_rule;

    SbmPriors sbm() const { return {alpha_plus, alpha_minus, gamma}; }
    /// Local scores default to the alpha-1 shape offset, global VB to alpha.
    DcbmPriors dcbm(ShapeRule fallback) const {
        ShapeRule rule = fallback;
        if (shape_rule == "mode")
            rule = ShapeRule::Mode;
        else if (shape_rule == "conjugate")
            rule = ShapeRule::Conjugate;
        return {alpha, theta, gamma, rule};
    }
};

inline void add_prior_flags(CLI::App *sub, PriorFlags &p) {
    sub->add_option("--gamma", p.gamma, "power-law exponent of the community-size prior")->capture_default_str();
    sub->add_option("--alpha", p.alpha, "DC-SBM Gamma prior shape")->capture_default_str();
    sub->add_option("--theta", p.theta, "DC-SBM Gamma prior scale")->capture_default_str();
    sub->add_option("--alpha-plus", p.alpha_plus, "SBM Beta prior a")->capture_default_str();
    sub->add_option("--alpha-minus", p.alpha_minus, "SBM Beta prior b")->capture_default_str();
    sub->add_option("--shape-rule", p.shape_rule, "DC-SBM shape offset: mode (alpha-1+count, local default) or conjugate (alpha+count, global default)")
        ->check(CLI::IsMember({"conjugate", "mode"}));
}

inline std::ifstream open_in(const std::string &path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open '" + path + "' for reading");
    return in;
}

inline std::ofstream open_out(const std::string &path) {
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot open '" + path + "' for writing");
    return out;
}

inline Graph read_graph(const std::string &path, nlohmann::json &manifest) {
    auto in = open_in(path);
    LoadReport report;
    Graph g = load_edge_list(in, &report);
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(fingerprint(g)));
    manifest["graph_checksum"] = hex;
    manifest["graph"] = {{"path", path},
                         {"nodes", g.node_count()},
                         {"edges", g.edge_count()},
                         {"dropped_self_loops", report.self_loops},
                         {"dropped_duplicates", report.duplicates}};
    return g;
}

inline std::string real(double x, int digits = 10) {
    if (std::isnan(x))
        return "nan";
    if (std::isinf(x))
        return x > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, x);
    return buf;
}

inline node seed_index(const Graph &g, label_t seed) {
    auto idx = g.index_of(seed);
    if (!idx)
        throw DomainError("seed id " + std::to_string(seed) + " is not in the graph");
    return *idx;
}

inline std::vector<std::string> split_list(const std::string &s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty())
            out.push_back(item);
    return out;
}

/// Pre-computed communities of an external method: each line is a seed id
/// followed by the ids of the community found for it.
inline std::map<node, std::vector<node>> load_external(std::istream &in, const Graph &g) {
    std::map<node, std::vector<node>> out;
    std::string line;
    std::vector<label_t> ids;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto body = lcd::detail::trim(line);
        if (body.empty() || body.front() == '#')
            continue;
        if (!lcd::detail::parse_ids(body, ids) || ids.empty())
            throw ParseError("malformed external result line", lineno);
        std::vector<node> members;
        for (label_t id : ids) {
            auto idx = g.index_of(id);
            if (!idx)
                throw ParseError("node id " + std::to_string(id) + " is not in the graph", lineno);
            members.push_back(*idx);
        }
        const node seed = members.front();
        std::sort(members.begin(), members.end());
        members.erase(std::unique(members.begin(), members.end()), members.end());
        out[seed] = std::move(members);
    }
    return out;
}

struct EvalFlags {
    std::string graph, communities;
    std::string methods = "asbm";
    std::size_t samples = 1000;
    std::size_t min_size = 3;
    std::uint64_t rng_seed = 0;
    std::optional<std::uint64_t> formal_n;
    std::vector<std::string> external;
    int restarts = 10;
    bool drop_unknown = false;
    PriorFlags priors;
};

/// Builds the detector for a named method. Global methods partition the
/// graph once; `setup_time` receives that cost.
inline Detector make_detector(const std::string &method, const Graph &g, const EvalFlags &f,
                              std::shared_ptr<std::vector<double>> setup_time) {
    SearchConfig cfg;
    cfg.restarts = f.restarts;
    cfg.sbm = f.priors.sbm();
    cfg.dcbm = f.priors.dcbm(ShapeRule::Mode);
    if (method == "asbm" || method == "adcbm" || method == "adcbm-1k") {
        cfg.method = method == "asbm" ? LocalMethod::Asbm : LocalMethod::Adcbm;
        if (method == "adcbm-1k")
            cfg.formal_n = 1000;
        else
            cfg.formal_n = f.formal_n;
        cfg.validate();
        const std::uint64_t seed = f.rng_seed;
        return [&g, cfg, seed](node s, std::size_t i) mutable {
            cfg.rng_seed = sample_search_seed(seed, i);
            return detect(g, s, cfg).members;
        };
    }
    if (method == "gsbm" || method == "gdcbm") {
        GlobalConfig gc;
        gc.objective = method == "gsbm" ? GlobalObjective::Gsbm : GlobalObjective::Gdcbm;
        gc.sbm = cfg.sbm;
        gc.dcbm = f.priors.dcbm(ShapeRule::Conjugate);
        const auto start = std::chrono::steady_clock::now();
        Rng rng(f.rng_seed);
        auto parts = std::make_shared<Partition>(louvain(g, gc, rng).partition);
        setup_time->push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
        auto comms = std::make_shared<std::vector<std::vector<node>>>(parts->communities());
        return [parts, comms](node s, std::size_t) { return (*comms)[(*parts)[s]]; };
    }
    throw DomainError("unknown method '" + method + "'");
}

inline void write_manifest(const nlohmann::json &manifest, const std::string &path, std::ostream &err) {
    if (path.empty()) {
        err << "manifest " << manifest.dump() << '\n';
        return;
    }
    auto out = open_out(path);
    out << manifest.dump(2) << '\n';
}

} // namespace detail

/**
 * Runs the command line `args` (without the program name). Regular output
 * goes to `out`; diagnostics and, unless --manifest is given, the run
 * manifest go to `err`. Returns the process exit code.
 */
inline int run(std::vector<std::string> args, std::ostream &out, std::ostream &err) {
    using nlohmann::json;
    CLI::App app{"Local community detection with approximate block models", "lcd"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    std::string manifest_path;
    bool no_timing = false;
    auto common = [&](CLI::App *sub) {
        sub->add_option("--manifest", manifest_path, "write the run manifest to this file instead of stderr");
        sub->add_flag("--no-timing", no_timing, "report all timings as 0 (byte-reproducible output)");
    };

    // detect
    auto *det = app.add_subcommand("detect", "find the community of a seed node");
    std::string graph_path;
    label_t seed_id = 0;
    std::string local_method;
    std::optional<std::uint64_t> formal_n;
    int restarts = 10;
    int max_passes = 100;
    std::uint64_t rng_seed = 0;
    bool as_json = false;
    detail::PriorFlags priors;
    det->add_option("--graph", graph_path, "edge-list file")->required();
    det->add_option("--seed", seed_id, "seed node id")->required();
    det->add_option("--method", local_method, "asbm or adcbm")->required()->check(CLI::IsMember({"asbm", "adcbm"}));
    det->add_option("--formal-n", formal_n, "formal graph size N (average degree kept)")->check(CLI::PositiveNumber);
    det->add_option("--restarts", restarts, "greedy restarts")->capture_default_str()->check(CLI::PositiveNumber);
    det->add_option("--max-passes", max_passes, "passes per restart")->capture_default_str()->check(CLI::PositiveNumber);
    det->add_option("--rng-seed", rng_seed, "random seed")->capture_default_str();
    det->add_flag("--json", as_json, "print the result as JSON");
    detail::add_prior_flags(det, priors);
    common(det);

    // global
    auto *glob = app.add_subcommand("global", "partition the whole graph with Louvain");
    std::string global_method, out_path;
    glob->add_option("--graph", graph_path, "edge-list file")->required();
    glob->add_option("--method", global_method, "gsbm or gdcbm")->required()->check(CLI::IsMember({"gsbm", "gdcbm"}));
    glob->add_option("--out", out_path, "partition file to write")->required();
    glob->add_option("--rng-seed", rng_seed, "random seed")->capture_default_str();
    detail::add_prior_flags(glob, priors);
    common(glob);

    // generate
    auto *gen = app.add_subcommand("generate", "sample a planted-partition graph");
    std::string model;
    PlantedSpec spec;
    std::string prefix;
    gen->add_option("--model", model, "sbm or dcbm")->required()->check(CLI::IsMember({"sbm", "dcbm"}));
    gen->add_option("--communities", spec.communities, "number of communities")->required();
    gen->add_option("--size", spec.size, "nodes per community")->required();
    gen->add_option("--lambda-in", spec.lambda_in, "within-community probability or rate")->required();
    gen->add_option("--lambda-out", spec.lambda_out, "between-community probability or rate")->required();
    gen->add_option("--alpha", spec.dcbm_alpha, "propensity Gamma shape (dcbm)")->capture_default_str();
    gen->add_option("--theta", spec.dcbm_theta, "propensity Gamma scale (dcbm)")->capture_default_str();
    gen->add_option("--out", prefix, "output prefix; writes PREFIX.edges and PREFIX.cmty")->required();
    gen->add_option("--rng-seed", rng_seed, "random seed")->required();
    common(gen);

    // eval
    auto *ev = app.add_subcommand("eval", "score methods against ground-truth communities");
    detail::EvalFlags ef;
    std::string rows_path, summary_path, summary_json_path, seeds_out;
    ev->add_option("--graph", ef.graph, "edge-list file")->required();
    ev->add_option("--communities", ef.communities, "ground-truth community file")->required();
    ev->add_option("--method", ef.methods, "comma-separated: asbm, adcbm, adcbm-1k, gsbm, gdcbm")->capture_default_str();
    ev->add_option("--samples", ef.samples, "number of (community, seed) draws")->capture_default_str();
    ev->add_option("--min-size", ef.min_size, "smallest ground-truth community kept")->capture_default_str();
    ev->add_option("--rng-seed", ef.rng_seed, "random seed")->capture_default_str();
    ev->add_option("--formal-n", ef.formal_n, "formal N for asbm/adcbm")->check(CLI::PositiveNumber);
    ev->add_option("--restarts", ef.restarts, "greedy restarts")->capture_default_str()->check(CLI::PositiveNumber);
    ev->add_option("--external-results", ef.external, "NAME=FILE of pre-computed communities (seed id first on each line)");
    ev->add_option("--rows", rows_path, "per-sample TSV (default: stdout)");
    ev->add_option("--summary", summary_path, "summary TSV (default: stdout after the rows)");
    ev->add_option("--summary-json", summary_json_path, "summary as JSON");
    ev->add_option("--seeds-out", seeds_out, "write the sampled seed ids, one per line");
    ev->add_flag("--drop-unknown", ef.drop_unknown, "ignore community ids absent from the graph");
    detail::add_prior_flags(ev, ef.priors);
    common(ev);

    // nsweep
    auto *sw = app.add_subcommand("nsweep", "mean F1 and size as a function of the formal N");
    std::string n_values;
    std::string sweep_method = "adcbm";
    sw->add_option("--graph", ef.graph, "edge-list file")->required();
    sw->add_option("--communities", ef.communities, "ground-truth community file")->required();
    sw->add_option("--n-values", n_values, "comma-separated formal N values")->required();
    sw->add_option("--samples", ef.samples, "number of draws")->capture_default_str();
    sw->add_option("--min-size", ef.min_size, "smallest ground-truth community kept")->capture_default_str();
    sw->add_option("--rng-seed", ef.rng_seed, "random seed")->capture_default_str();
    sw->add_option("--method", sweep_method, "asbm or adcbm")->capture_default_str()->check(CLI::IsMember({"asbm", "adcbm"}));
    sw->add_option("--restarts", ef.restarts, "greedy restarts")->capture_default_str()->check(CLI::PositiveNumber);
    sw->add_flag("--drop-unknown", ef.drop_unknown, "ignore community ids absent from the graph");
    detail::add_prior_flags(sw, ef.priors);
    common(sw);

    // replay
    auto *rep = app.add_subcommand("replay", "re-run the command recorded in a manifest");
    std::string replay_path;
    rep->add_option("manifest", replay_path, "manifest JSON file")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError &e) {
        std::ostringstream o, x;
        const int code = app.exit(e, o, x);
        out << o.str();
        err << x.str();
        return code == 0 ? kOk : kUsageError;
    }

    const auto started = std::chrono::steady_clock::now();
    json manifest;
    manifest["tool"] = "lcd";
    manifest["version"] = kVersion;
    manifest["argv"] = args;
    manifest["tsv_version"] = kTsvVersion;
    CLI::App *active = app.get_subcommands().front();
    manifest["command"] = active->get_name();
    json flags = json::object();
    for (const CLI::Option *opt : active->get_options()) {
        if (opt->get_name() == "--help" || opt->get_name().empty())
            continue;
        const auto &res = opt->results();
        if (opt->count() > 0)
            flags[opt->get_name()] = res.size() == 1 ? json(res.front()) : json(res);
        else if (!opt->get_default_str().empty())
            flags[opt->get_name()] = opt->get_default_str();
    }
    manifest["flags"] = flags;
    auto finish = [&] {
        manifest["wall_time_s"] =
            no_timing ? 0.0 : std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        detail::write_manifest(manifest, manifest_path, err);
    };

    try {
        if (active == rep) {
            auto in = detail::open_in(replay_path);
            json recorded;
            try {
                recorded = json::parse(in);
            } catch (const json::exception &e) {
                throw ParseError(std::string("manifest: ") + e.what());
            }
            return run(recorded.at("argv").get<std::vector<std::string>>(), out, err);
        }

        if (active == det) {
            manifest["rng_seed"] = rng_seed;
            const Graph g = detail::read_graph(graph_path, manifest);
            const node seed = detail::seed_index(g, seed_id);
            SearchConfig cfg;
            cfg.method = local_method == "asbm" ? LocalMethod::Asbm : LocalMethod::Adcbm;
            cfg.restarts = restarts;
            cfg.rng_seed = rng_seed;
            cfg.formal_n = formal_n;
            cfg.max_passes = max_passes;
            cfg.sbm = priors.sbm();
            cfg.dcbm = priors.dcbm(ShapeRule::Mode);
            const DetectionResult r = detect(g, seed, cfg);
            std::vector<label_t> ids;
            for (node u : r.members)
                ids.push_back(g.label(u));
            const CutVolume cv = cut_volume(g, r.members);
            const double phi = cv.volume ? static_cast<double>(cv.cut) / static_cast<double>(cv.volume)
                                         : std::numeric_limits<double>::quiet_NaN();
            const double elapsed = no_timing ? 0.0 : r.elapsed;
            if (r.isolated_seed)
                err << "warning: seed " << seed_id << " has no neighbors\n";
            if (as_json) {
                json j = {{"seed", seed_id},       {"method", local_method},  {"members", ids},
                          {"log_score", r.log_score}, {"n", r.stats.n},        {"w", r.stats.w},
                          {"v", r.stats.v},         {"restart", r.restart_index}, {"passes", r.passes},
                          {"elapsed_s", elapsed}};
                j["conductance"] = std::isfinite(phi) ? json(phi) : json(nullptr);
                out << j.dump() << '\n';
            } else {
                out << "members\t";
                for (std::size_t i = 0; i < ids.size(); ++i)
                    out << (i ? " " : "") << ids[i];
                out << "\nlog_score\t" << detail::real(r.log_score) << "\nn\t" << r.stats.n << "\nw\t" << r.stats.w
                    << "\nv\t" << r.stats.v << "\nconductance\t" << detail::real(phi) << "\nrestart\t"
                    << r.restart_index << "\npasses\t" << r.passes << "\nelapsed_s\t" << detail::real(elapsed, 6)
                    << '\n';
            }
            finish();
            return kOk;
        }

        if (active == glob) {
            manifest["rng_seed"] = rng_seed;
            const Graph g = detail::read_graph(graph_path, manifest);
            GlobalConfig gc;
            gc.objective = global_method == "gsbm" ? GlobalObjective::Gsbm : GlobalObjective::Gdcbm;
            gc.sbm = priors.sbm();
            gc.dcbm = priors.dcbm(ShapeRule::Conjugate);
            Rng rng(rng_seed);
            const LouvainResult res = louvain(g, gc, rng);
            auto file = detail::open_out(out_path);
            write_communities(file, g, res.partition.communities());
            out << "objective\t" << detail::real(res.objective) << "\ncommunities\t"
                << res.partition.community_count() << "\nlevels\t" << res.levels << '\n';
            finish();
            return kOk;
        }

        if (active == gen) {
            manifest["rng_seed"] = rng_seed;
            spec.model = model == "sbm" ? PlantedModel::Sbm : PlantedModel::Dcbm;
            Rng rng(rng_seed);
            const PlantedGraph pg = sample_planted(spec, rng);
            {
                auto edges = detail::open_out(prefix + ".edges");
                write_edge_list(edges, pg.graph);
                auto cmty = detail::open_out(prefix + ".cmty");
                write_communities(cmty, pg.graph, pg.truth);
            }
            std::size_t isolated = 0;
            for (node u = 0; u < pg.graph.node_count(); ++u)
                isolated += pg.graph.degree(u) == 0;
            out << "nodes\t" << pg.graph.node_count() << "\nedges\t" << pg.graph.edge_count() << "\nisolated\t"
                << isolated << '\n';
            if (isolated)
                manifest["notes"].push_back(std::to_string(isolated) +
                                            " isolated nodes are absent from the edge list; use --drop-unknown "
                                            "when evaluating against the community file");
            finish();
            return kOk;
        }

        if (active == ev || active == sw) {
            manifest["rng_seed"] = ef.rng_seed;
            const Graph g = detail::read_graph(ef.graph, manifest);
            auto cin = detail::open_in(ef.communities);
            const auto truths =
                load_communities(cin, g, ef.min_size, ef.drop_unknown ? UnknownIds::Drop : UnknownIds::Error);
            manifest["ground_truth"] = {{"path", ef.communities}, {"communities", truths.size()}};
            Rng rng(ef.rng_seed);
            const std::vector<EvalTask> tasks = sample_tasks(truths, ef.samples, rng);
            if (ef.samples > truths.size())
                manifest["notes"].push_back("samples exceed the " + std::to_string(truths.size()) +
                                            " communities; the first " + std::to_string(truths.size()) +
                                            " draws are without replacement, the rest with replacement");

            if (active == sw) {
                out << "formal_n\tsamples\tfailed\tmean_f1\tf1_se\tmean_size\n";
                for (const auto &item : detail::split_list(n_values)) {
                    std::uint64_t nv = 0;
                    try {
                        nv = std::stoull(item);
                    } catch (const std::exception &) {
                        throw DomainError("bad --n-values entry '" + item + "'");
                    }
                    detail::EvalFlags f = ef;
                    f.formal_n = nv;
                    auto setup = std::make_shared<std::vector<double>>();
                    const auto det_fn = detail::make_detector(sweep_method, g, f, setup);
                    const auto rows = run_protocol(g, truths, tasks, sweep_method, det_fn);
                    const EvalSummary s = summarize(sweep_method, rows);
                    out << nv << '\t' << s.samples << '\t' << s.failed << '\t' << detail::real(s.f1.mean, 6) << '\t'
                        << detail::real(s.f1.se, 6) << '\t' << detail::real(s.size.mean, 6) << '\n';
                }
                finish();
                return kOk;
            }

            if (!seeds_out.empty()) {
                auto so = detail::open_out(seeds_out);
                for (const auto &t : tasks)
                    so << g.label(t.seed) << '\n';
            }
            std::vector<std::string> order;
            std::map<std::string, std::vector<EvalRow>> by_method;
            for (const auto &m : detail::split_list(ef.methods)) {
                auto setup = std::make_shared<std::vector<double>>();
                const auto det_fn = detail::make_detector(m, g, ef, setup);
                auto rows = run_protocol(g, truths, tasks, m, det_fn);
                if (!setup->empty())
                    for (auto &r : rows)
                        r.elapsed += setup->front();
                order.push_back(m);
                by_method[m] = std::move(rows);
            }
            for (const auto &spec_str : ef.external) {
                const auto eq = spec_str.find('=');
                const std::string name = eq == std::string::npos ? "external" : spec_str.substr(0, eq);
                const std::string path = eq == std::string::npos ? spec_str : spec_str.substr(eq + 1);
                auto xin = detail::open_in(path);
                auto found = std::make_shared<std::map<node, std::vector<node>>>(detail::load_external(xin, g));
                Detector det_fn = [found, &g](node s, std::size_t) {
                    auto it = found->find(s);
                    if (it == found->end())
                        throw DomainError("no external result for seed " + std::to_string(g.label(s)));
                    return it->second;
                };
                order.push_back(name);
                by_method[name] = run_protocol(g, truths, tasks, name, det_fn);
            }

            std::vector<EvalRow> all;
            std::vector<EvalSummary> summaries;
            for (const auto &m : order) {
                const auto &rows = by_method[m];
                all.insert(all.end(), rows.begin(), rows.end());
                summaries.push_back(summarize(m, rows));
            }
            mark_best(summaries, by_method);

            if (rows_path.empty()) {
                write_rows(out, all, !no_timing);
            } else {
                auto f = detail::open_out(rows_path);
                write_rows(f, all, !no_timing);
            }
            if (summary_path.empty()) {
                if (rows_path.empty())
                    out << '\n';
                write_summary(out, summaries, !no_timing);
            } else {
                auto f = detail::open_out(summary_path);
                write_summary(f, summaries, !no_timing);
            }
            if (!summary_json_path.empty()) {
                json js = json::array();
                auto ms = [](const MeanSe &m) {
                    return json{{"mean", std::isfinite(m.mean) ? json(m.mean) : json(nullptr)},
                                {"se", std::isfinite(m.se) ? json(m.se) : json(nullptr)}};
                };
                for (const auto &s : summaries)
                    js.push_back({{"method", s.method},
                                  {"samples", s.samples},
                                  {"failed", s.failed},
                                  {"size", ms(s.size)},
                                  {"precision", ms(s.precision)},
                                  {"recall", ms(s.recall)},
                                  {"f1", ms(s.f1)},
                                  {"conductance", ms(s.conductance)},
                                  {"elapsed_s", no_timing ? json(0.0) : ms(s.elapsed)["mean"]},
                                  {"best", s.best}});
                auto f = detail::open_out(summary_json_path);
                f << js.dump(2) << '\n';
            }
            finish();
            return kOk;
        }
    } catch (const IoError &e) {
        err << "error: " << e.what() << '\n';
        return kIoError;
    } catch (const ParseError &e) {
        err << "error: " << e.what() << '\n';
        return kIoError;
    } catch (const DomainError &e) {
        err << "error: " << e.what() << '\n';
        return kUsageError;
    } catch (const Error &e) {
        err << "error: " << e.what() << '\n';
        return kUsageError;
    } catch (const nlohmann::json::exception &e) {
        err << "error: manifest: " << e.what() << '\n';
        return kIoError;
    }
    return kUsageError;
}

} // namespace lcd::cli
