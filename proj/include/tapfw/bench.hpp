#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "tapfw/errors.hpp"
#include "tapfw/network.hpp"
#include "tapfw/solver.hpp"
#include "tapfw/tntp.hpp"
#include "tapfw/validate.hpp"

namespace tapfw {

constexpr const char* kTraceCsvHeader = "iter,elapsed_sec,psi,fw_gap,lb,blb,rel_gap,gamma,reset";

// Environment variable naming a directory that dataset paths are resolved
// against when they do not exist as given.
constexpr const char* kDataRootEnv = "TNTP_DATA_ROOT";

struct AlgorithmSpec {
    std::string label;
    SolverConfig config;
};

// One benchmark invocation: a dataset, the algorithm entries to run under
// a shared budget, and where the traces go. The seed is reserved; all
// solvers here are deterministic.
struct RunSpec {
    std::string dataset;
    std::string net_path;
    std::string trips_path;
    std::vector<AlgorithmSpec> algorithms;
    long max_iter = 100000;
    double time_budget_sec = std::numeric_limits<double>::infinity();
    double rgap_tol = 1e-6;
    std::string out_path;  // file for solve, directory for compare
    unsigned long seed = 0;
};

namespace detail {

inline std::string format_param(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

}  // namespace detail

inline std::string algorithm_label(const SolverConfig& cfg) {
    switch (cfg.algorithm) {
        case Algorithm::fw: return "fw";
        case Algorithm::cfw: return "cfw";
        case Algorithm::nfw: return "nfw(n=" + std::to_string(cfg.n_conjugate) + ")";
        case Algorithm::ffw: return "ffw(l=" + std::to_string(cfg.ffw_memory) + ")";
        case Algorithm::wffw:
            return "wffw(w=" + detail::format_param(cfg.smoothing_weight) + ")";
    }
    return "?";
}

// Parses one entry of an --algs list: a name optionally followed by
// colon-separated parameters, e.g. "nfw:n=3" or "wffw:w=0.15". Budget
// fields come from `base`.
inline AlgorithmSpec parse_algorithm_spec(std::string_view text, const SolverConfig& base) {
    AlgorithmSpec spec;
    spec.config = base;

    std::vector<std::string> parts;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t colon = text.find(':', start);
        if (colon == std::string_view::npos) {
            parts.emplace_back(text.substr(start));
            break;
        }
        parts.emplace_back(text.substr(start, colon - start));
        start = colon + 1;
    }
    if (parts.empty() || parts[0].empty())
        throw std::invalid_argument("empty algorithm name in '" + std::string(text) + "'");

    const std::string& name = parts[0];
    if (name == "fw")
        spec.config.algorithm = Algorithm::fw;
    else if (name == "cfw")
        spec.config.algorithm = Algorithm::cfw;
    else if (name == "ffw")
        spec.config.algorithm = Algorithm::ffw;
    else if (name == "wffw")
        spec.config.algorithm = Algorithm::wffw;
    else if (name == "nfw")
        spec.config.algorithm = Algorithm::nfw;
    else
        throw std::invalid_argument("unknown algorithm '" + name + "'");

    for (std::size_t i = 1; i < parts.size(); ++i) {
        const std::string& kv = parts[i];
        auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("expected key=value, got '" + kv + "'");
        std::string key = kv.substr(0, eq);
        std::string val = kv.substr(eq + 1);
        try {
            if (key == "n")
                spec.config.n_conjugate = std::stoi(val);
            else if (key == "w")
                spec.config.smoothing_weight = std::stod(val);
            else if (key == "l")
                spec.config.ffw_memory = std::stoi(val);
            else if (key == "gamma_max" || key == "gamma-max")
                spec.config.gamma_max = std::stod(val);
            else if (key == "step")
                spec.config.step_policy =
                    val == "harmonic" ? StepPolicy::harmonic : StepPolicy::exact_linesearch;
            else
                throw std::invalid_argument("unknown parameter '" + key + "'");
        } catch (const std::invalid_argument&) {
            throw;
        } catch (const std::exception&) {
            throw std::invalid_argument("bad value for '" + key + "' in '" + std::string(text) +
                                        "'");
        }
    }

    spec.label = algorithm_label(spec.config);
    return spec;
}

inline void write_trace_csv(std::ostream& os, const std::vector<ConvergenceRecord>& trace) {
    os << kTraceCsvHeader << '\n';
    char buf[256];
    for (const ConvergenceRecord& r : trace) {
        std::snprintf(buf, sizeof(buf), "%ld,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d\n",
                      r.iter, r.elapsed_sec, r.psi, r.fw_gap, r.lb, r.blb, r.rel_gap, r.gamma,
                      r.reset ? 1 : 0);
        os << buf;
    }
}

// --- SVG convergence plot ---------------------------------------------

struct PlotSeries {
    std::string label;
    bool failed = false;
    std::vector<std::pair<double, double>> points;  // (elapsed sec, relative gap)
};

namespace detail {

inline std::string xml_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

inline std::string format_coord(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

}  // namespace detail

// Relative gap (log scale) against wall-clock seconds, one polyline per
// series, decade ticks on the y axis. Self-contained, no external assets.
inline std::string render_compare_svg(const std::string& title,
                                      const std::vector<PlotSeries>& series) {
    constexpr double width = 860, height = 540;
    constexpr double ml = 80, mr = 190, mt = 46, mb = 58;
    const double pw = width - ml - mr, ph = height - mt - mb;

    double xmax = 0.0;
    double ymin = std::numeric_limits<double>::infinity(), ymax = 0.0;
    for (const auto& s : series) {
        for (auto [x, y] : s.points) {
            xmax = std::max(xmax, x);
            if (y > 0.0) {
                ymin = std::min(ymin, y);
                ymax = std::max(ymax, y);
            }
        }
    }
    if (xmax <= 0.0) xmax = 1.0;
    if (!(ymin < ymax)) {
        ymin = 1e-8;
        ymax = 1.0;
    }
    int dec_lo = static_cast<int>(std::floor(std::log10(ymin)));
    int dec_hi = static_cast<int>(std::ceil(std::log10(ymax)));
    if (dec_hi == dec_lo) ++dec_hi;

    auto x_of = [&](double x) { return ml + x / xmax * pw; };
    auto y_of = [&](double y) {
        double t = (std::log10(y) - dec_lo) / double(dec_hi - dec_lo);
        return mt + ph - t * ph;
    };

    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

    std::ostringstream svg;
    svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    svg << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height
        << "\" fill=\"white\"/>\n";
    svg << "<text x=\"" << ml << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"15\">"
        << detail::xml_escape(title) << "</text>\n";

    // decade gridlines and y labels
    for (int d = dec_lo; d <= dec_hi; ++d) {
        double y = y_of(std::pow(10.0, d));
        svg << "<line x1=\"" << ml << "\" y1=\"" << detail::format_coord(y) << "\" x2=\""
            << ml + pw << "\" y2=\"" << detail::format_coord(y)
            << "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
        svg << "<text x=\"" << ml - 8 << "\" y=\"" << detail::format_coord(y + 4)
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">1e"
            << d << "</text>\n";
    }

    // x ticks: a nice step close to xmax / 6
    double raw = xmax / 6.0;
    double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double mult : {1.0, 2.0, 5.0, 10.0})
        if (mag * mult >= raw) {
            step = mag * mult;
            break;
        }
    for (double x = 0.0; x <= xmax * (1 + 1e-9); x += step) {
        double px = x_of(x);
        svg << "<line x1=\"" << detail::format_coord(px) << "\" y1=\"" << mt + ph << "\" x2=\""
            << detail::format_coord(px) << "\" y2=\"" << mt + ph + 5
            << "\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
        svg << "<text x=\"" << detail::format_coord(px) << "\" y=\"" << mt + ph + 20
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
            << detail::format_param(x) << "</text>\n";
    }

    // axes
    svg << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << mt + ph
        << "\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
    svg << "<line x1=\"" << ml << "\" y1=\"" << mt + ph << "\" x2=\"" << ml + pw << "\" y2=\""
        << mt + ph << "\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
    svg << "<text x=\"" << ml + pw / 2 << "\" y=\"" << height - 16
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">elapsed "
           "seconds</text>\n";
    svg << "<text x=\"20\" y=\"" << mt + ph / 2
        << "\" font-family=\"sans-serif\" font-size=\"13\" transform=\"rotate(-90 20 "
        << mt + ph / 2 << ")\" text-anchor=\"middle\">relative gap</text>\n";

    // series
    for (std::size_t i = 0; i < series.size(); ++i) {
        const auto& s = series[i];
        const char* color = palette[i % (sizeof(palette) / sizeof(palette[0]))];
        std::string pts;
        for (auto [x, y] : s.points) {
            if (!(y > 0.0)) continue;  // log scale: skip exhausted-gap records
            pts += detail::format_coord(x_of(x)) + "," + detail::format_coord(y_of(y)) + " ";
        }
        if (!pts.empty()) {
            pts.pop_back();
            svg << "<polyline fill=\"none\" stroke=\"" << color
                << "\" stroke-width=\"1.5\" points=\"" << pts << "\"/>\n";
        }
        // legend entry
        double ly = mt + 14 + 20.0 * i;
        svg << "<line x1=\"" << ml + pw + 14 << "\" y1=\"" << ly << "\" x2=\"" << ml + pw + 40
            << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        svg << "<text x=\"" << ml + pw + 46 << "\" y=\"" << ly + 4
            << "\" font-family=\"sans-serif\" font-size=\"12\">"
            << detail::xml_escape(s.label + (s.failed ? " (failed)" : "")) << "</text>\n";
    }

    svg << "</svg>\n";
    return svg.str();
}

// --- command drivers ----------------------------------------------------

namespace detail {

inline std::string resolve_data_path(const std::string& path) {
    namespace fs = std::filesystem;
    if (fs::exists(path)) return path;
    if (const char* root = std::getenv(kDataRootEnv)) {
        fs::path candidate = fs::path(root) / path;
        if (fs::exists(candidate)) return candidate.string();
    }
    return path;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(resolve_data_path(path), std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::string dataset_name(const std::string& net_path) {
    std::string stem = std::filesystem::path(net_path).stem().string();
    if (stem.size() > 4 && stem.substr(stem.size() - 4) == "_net")
        stem.resize(stem.size() - 4);
    return stem.empty() ? "dataset" : stem;
}

inline std::string sanitize_filename(const std::string& label) {
    std::string out;
    for (char c : label) {
        if (std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-')
            out += c;
        else if (c == '(')
            out += '_';
        // other punctuation dropped
    }
    return out.empty() ? "run" : out;
}

inline std::string format_summary(const std::string& label, const std::string& dataset,
                                  long iters, double rgap, double seconds) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%s %s iters=%ld rgap=%.6g time=%.3f", label.c_str(),
                  dataset.c_str(), iters, rgap, seconds);
    return buf;
}

struct LoadedProblem {
    Network net;
    DemandMatrix dm;
    std::vector<std::string> warnings;
};

inline LoadedProblem load_problem(const std::string& net_path, const std::string& trips_path) {
    LoadedProblem p;
    try {
        p.net = parse_net(read_file(net_path));
    } catch (const ParseError& e) {
        throw std::runtime_error(net_path + ": " + e.what());
    }
    try {
        p.dm = parse_trips(read_file(trips_path), &p.warnings);
    } catch (const ParseError& e) {
        throw std::runtime_error(trips_path + ": " + e.what());
    }
    return p;
}

}  // namespace detail

// `solve` subcommand: run one algorithm, write the trace CSV, print one
// summary line. A solver abort keeps the partial CSV and returns 1.
inline int run_solve(const RunSpec& spec, std::ostream& out, std::ostream& err) {
    if (spec.algorithms.size() != 1) {
        err << "solve expects exactly one algorithm\n";
        return 1;
    }
    detail::LoadedProblem problem;
    try {
        problem = detail::load_problem(spec.net_path, spec.trips_path);
    } catch (const std::exception& e) {
        err << e.what() << '\n';
        return 1;
    }
    for (const auto& w : problem.warnings) err << "warning: " << w << '\n';

    const AlgorithmSpec& alg = spec.algorithms[0];
    SolverConfig cfg = alg.config;
    cfg.max_iter = spec.max_iter;
    cfg.time_budget_sec = spec.time_budget_sec;
    cfg.rgap_tol = spec.rgap_tol;

    auto write_csv = [&](const std::vector<ConvergenceRecord>& trace) {
        std::ofstream os(spec.out_path);
        if (!os) throw std::runtime_error("cannot write '" + spec.out_path + "'");
        write_trace_csv(os, trace);
    };

    try {
        AlgorithmResult res = solve(problem.net, problem.dm, cfg);
        write_csv(res.trace);
        double seconds = res.trace.empty() ? 0.0 : res.trace.back().elapsed_sec;
        out << detail::format_summary(alg.label, spec.dataset, res.iterations, res.final_rgap,
                                      seconds)
            << '\n';
        return 0;
    } catch (const SolverAbort& e) {
        write_csv(e.partial_trace);
        err << "solver aborted: " << e.what() << " (partial trace retained)\n";
        return 1;
    } catch (const std::exception& e) {
        err << e.what() << '\n';
        return 1;
    }
}

// `compare` subcommand: run every algorithm entry under the identical
// budget, write one CSV per run plus compare.svg. A failing run is marked
// in the legend; the others still complete. Runs go sequentially unless
// `parallel` is set (parallel timings share hardware; the output says so).
inline int run_compare(const RunSpec& spec, bool parallel, std::ostream& out, std::ostream& err) {
    if (spec.algorithms.empty()) {
        err << "compare expects at least one algorithm\n";
        return 1;
    }
    detail::LoadedProblem problem;
    try {
        problem = detail::load_problem(spec.net_path, spec.trips_path);
    } catch (const std::exception& e) {
        err << e.what() << '\n';
        return 1;
    }
    for (const auto& w : problem.warnings) err << "warning: " << w << '\n';

    namespace fs = std::filesystem;
    fs::path out_dir(spec.out_path.empty() ? "." : spec.out_path);
    std::error_code ec;
    fs::create_directories(out_dir, ec);

    struct RunOutcome {
        std::vector<ConvergenceRecord> trace;
        long iterations = 0;
        double final_rgap = std::numeric_limits<double>::quiet_NaN();
        bool failed = false;
        std::string error;
    };

    auto run_one = [&](const AlgorithmSpec& alg) {
        SolverConfig cfg = alg.config;
        cfg.max_iter = spec.max_iter;
        cfg.time_budget_sec = spec.time_budget_sec;
        cfg.rgap_tol = spec.rgap_tol;
        RunOutcome o;
        try {
            AlgorithmResult res = solve(problem.net, problem.dm, cfg);
            o.trace = std::move(res.trace);
            o.iterations = res.iterations;
            o.final_rgap = res.final_rgap;
        } catch (const SolverAbort& e) {
            o.trace = e.partial_trace;
            o.failed = true;
            o.error = e.what();
        } catch (const std::exception& e) {
            o.failed = true;
            o.error = e.what();
        }
        return o;
    };

    std::vector<RunOutcome> outcomes(spec.algorithms.size());
    if (parallel) {
        out << "note: parallel runs share hardware; per-run timings are not comparable to "
               "sequential mode\n";
        std::vector<std::future<RunOutcome>> futures;
        futures.reserve(spec.algorithms.size());
        for (const auto& alg : spec.algorithms)
            futures.push_back(std::async(std::launch::async, run_one, alg));
        for (std::size_t i = 0; i < futures.size(); ++i) outcomes[i] = futures[i].get();
    } else {
        for (std::size_t i = 0; i < spec.algorithms.size(); ++i)
            outcomes[i] = run_one(spec.algorithms[i]);
    }

    std::vector<PlotSeries> series;
    std::vector<std::string> used_names;
    for (std::size_t i = 0; i < spec.algorithms.size(); ++i) {
        const auto& alg = spec.algorithms[i];
        auto& o = outcomes[i];

        std::string base = detail::sanitize_filename(alg.label);
        std::string name = base;
        int suffix = 2;
        while (std::find(used_names.begin(), used_names.end(), name) != used_names.end())
            name = base + "_" + std::to_string(suffix++);
        used_names.push_back(name);

        fs::path csv_path = out_dir / (name + ".csv");
        std::ofstream os(csv_path);
        if (!os) {
            err << "cannot write '" << csv_path.string() << "'\n";
            return 1;
        }
        write_trace_csv(os, o.trace);

        PlotSeries s;
        s.label = alg.label;
        s.failed = o.failed;
        for (const auto& r : o.trace)
            if (!std::isnan(r.rel_gap)) s.points.emplace_back(r.elapsed_sec, r.rel_gap);
        series.push_back(std::move(s));

        if (o.failed) {
            err << alg.label << " failed: " << o.error << '\n';
        } else {
            double seconds = o.trace.empty() ? 0.0 : o.trace.back().elapsed_sec;
            out << detail::format_summary(alg.label, spec.dataset, o.iterations, o.final_rgap,
                                          seconds)
                << '\n';
        }
    }

    fs::path svg_path = out_dir / "compare.svg";
    std::ofstream svg_os(svg_path);
    if (!svg_os) {
        err << "cannot write '" << svg_path.string() << "'\n";
        return 1;
    }
    svg_os << render_compare_svg(spec.dataset, series);
    out << "wrote " << svg_path.string() << '\n';
    return 0;
}

// `validate` subcommand: parse both files, check reachability, print the
// report. Exit 0 iff nothing fatal was found.
inline int run_validate(const std::string& net_path, const std::string& trips_path,
                        std::ostream& out, std::ostream& err) {
    detail::LoadedProblem problem;
    try {
        problem = detail::load_problem(net_path, trips_path);
    } catch (const std::exception& e) {
        err << e.what() << '\n';
        return 1;
    }
    for (const auto& w : problem.warnings) out << "warning: " << w << '\n';

    ValidationReport report = validate(problem.net, problem.dm);
    for (const auto& e : report.errors) err << "error: " << e << '\n';
    for (const auto& u : report.unreachable)
        err << "error: demand pair (" << u.origin << ", " << u.destination << ") with volume "
            << u.demand << " is unreachable\n";
    for (const auto& s : report.skipped_self_demand)
        out << "note: self-demand at zone " << s.origin << " (volume " << s.demand
            << ") is skipped in assignment\n";

    out << problem.net.node_count << " nodes, " << problem.net.edge_count() << " edges, "
        << problem.net.zone_count << " zones; " << problem.dm.entries.size()
        << " demand entries, total " << detail::format_param(problem.dm.total_demand) << '\n';
    if (report.fatal()) {
        err << "validation failed\n";
        return 1;
    }
    out << "validation passed\n";
    return 0;
}

}  // namespace tapfw
