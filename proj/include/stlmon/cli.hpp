#pragma once

// Command-line front end: verify, batch and trace.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include <json.hpp>

#include "integrator.hpp"
#include "model.hpp"
#include "monitor.hpp"
#include "report.hpp"
#include "stl.hpp"

namespace stlmon::cli {

enum ExitCode : int {
    exit_valid = 0,
    exit_unsat = 1,
    exit_unknown = 2,
    exit_integration = 3,
    exit_usage = 64,
    exit_io = 66,
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot read " + path);
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Model source from a file, or a bundled model name when no such file exists.
inline ContinuousSystem load_model(const std::string& spec)
{
    std::ifstream probe(spec);
    if (probe) {
        return parse_model(read_file(spec));
    }
    if (const auto text = builtin_model(spec)) {
        return parse_model(*text);
    }
    throw IoError("no model file or bundled model named '" + spec + "'");
}

/// Applies NAME=LO or NAME=LO,HI to the parameter domain.
inline void apply_param(ContinuousSystem& sys, const std::string& assignment)
{
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) {
        throw std::invalid_argument("--param expects NAME=LO[,HI], got '" + assignment + "'");
    }
    const std::string name = assignment.substr(0, eq);
    const std::string rest = assignment.substr(eq + 1);
    const auto it = std::find(sys.names.params.begin(), sys.names.params.end(), name);
    if (it == sys.names.params.end()) {
        throw std::invalid_argument("unknown parameter '" + name + "'");
    }
    const auto comma = rest.find(',');
    Interval v;
    try {
        if (comma == std::string::npos) {
            v = decimal_enclosure(rest);
        } else {
            const Interval lo = decimal_enclosure(rest.substr(0, comma));
            const Interval hi = decimal_enclosure(rest.substr(comma + 1));
            if (lo.lo() > hi.hi()) {
                throw std::invalid_argument("empty range");
            }
            v = Interval{lo.lo(), hi.hi()};
        }
    } catch (const std::invalid_argument&) {
        throw std::invalid_argument("bad value in --param '" + assignment + "'");
    }
    sys.set_param(static_cast<int>(it - sys.names.params.begin()), v);
}

// ---------------------------------------------------------------------------
// Batch experiments

inline constexpr const char* rng_name = "mt19937_64/splitmix64-seeded/v1";

inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Point parameter for run `run`, uniform over `domain`. Independent of
/// thread scheduling and of the standard library's distributions.
inline std::vector<double> sample_params(const IntervalBox& domain, std::uint64_t seed, std::uint64_t run)
{
    std::mt19937_64 gen(splitmix64(seed + run));
    std::vector<double> u;
    u.reserve(domain.size());
    for (const auto& d : domain) {
        const double r = static_cast<double>(gen() >> 11) * 0x1.0p-53;
        u.push_back(std::clamp(d.lo() + r * (d.hi() - d.lo()), d.lo(), d.hi()));
    }
    return u;
}

struct BatchSpec {
    ContinuousSystem system;
    Formula formula;
    std::uint64_t runs = 1;
    std::uint64_t seed = 0;
    /// Full width of the parameter box around each sample; 0 samples points.
    double widen = 0.0;
    MonitorConfig config{};
    unsigned threads = 1;
};

struct RunRecord {
    std::vector<double> sample;
    IntervalBox box;
    Outcome outcome = Outcome::Unknown;
    std::optional<UnknownCause> cause;
    double seconds = 0.0;
};

struct BatchResult {
    std::vector<RunRecord> runs;
    std::uint64_t n_valid = 0;
    std::uint64_t n_unsat = 0;
    std::uint64_t n_unknown = 0;
    std::map<std::string, std::uint64_t> unknown_by_cause;
    double mean_valid_seconds = 0.0;
    double total_seconds = 0.0;
};

inline IntervalBox widened_box(const std::vector<double>& u, double widen)
{
    IntervalBox box;
    for (double v : u) {
        if (widen == 0.0) {
            box.emplace_back(v);
        } else {
            const double h = widen / 2;
            box.emplace_back(rounding::sub_down(v, h), rounding::add_up(v, h));
        }
    }
    return box;
}

inline RunRecord run_one(const BatchSpec& spec, std::uint64_t i)
{
    RunRecord rec;
    rec.sample = sample_params(spec.system.param_domain, spec.seed, i);
    rec.box = widened_box(rec.sample, spec.widen);
    ContinuousSystem sys = spec.system;
    for (int k = 0; k < sys.n_params(); ++k) {
        sys.set_param(k, rec.box[k]);
    }
    const auto t0 = std::chrono::steady_clock::now();
    const Verdict v = monitor_stl(sys, spec.formula, spec.config);
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rec.outcome = v.outcome;
    rec.cause = v.unknown_cause;
    return rec;
}

inline BatchResult run_batch(const BatchSpec& spec)
{
    if (spec.runs < 1) {
        throw std::invalid_argument("batch needs at least one run");
    }
    if (!(spec.widen >= 0.0)) {
        throw std::invalid_argument("widen must be non-negative");
    }
    BatchResult res;
    res.runs.resize(spec.runs);
    std::atomic<std::uint64_t> next{0};
    std::mutex err_mu;
    std::exception_ptr failure;
    auto worker = [&] {
        for (;;) {
            const std::uint64_t i = next++;
            if (i >= spec.runs) {
                return;
            }
            try {
                res.runs[i] = run_one(spec, i);
            } catch (...) {
                std::lock_guard lock(err_mu);
                if (!failure) {
                    failure = std::current_exception();
                }
            }
        }
    };
    const unsigned n = std::max(1u, std::min<unsigned>(spec.threads, static_cast<unsigned>(spec.runs)));
    if (n == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned k = 0; k < n; ++k) {
            pool.emplace_back(worker);
        }
        for (auto& t : pool) {
            t.join();
        }
    }
    if (failure) {
        std::rethrow_exception(failure);
    }

    for (const char* c : {"SearchZeroError", "PropagationError", "IntegrationError", "InitialSignError"}) {
        res.unknown_by_cause[c] = 0;
    }
    double valid_time = 0.0;
    for (const auto& r : res.runs) {
        res.total_seconds += r.seconds;
        switch (r.outcome) {
        case Outcome::Valid:
            ++res.n_valid;
            valid_time += r.seconds;
            break;
        case Outcome::Unsat: ++res.n_unsat; break;
        case Outcome::Unknown:
            ++res.n_unknown;
            ++res.unknown_by_cause[to_string(r.cause.value_or(UnknownCause::SearchZeroError))];
            break;
        }
    }
    res.mean_valid_seconds = res.n_valid ? valid_time / static_cast<double>(res.n_valid) : 0.0;
    return res;
}

inline nlohmann::json batch_json(const BatchSpec& spec, const BatchResult& res, bool timing, bool per_run)
{
    nlohmann::json out;
    out["rng"] = rng_name;
    out["seed"] = spec.seed;
    out["runs"] = spec.runs;
    out["widen"] = spec.widen;
    out["n_valid"] = res.n_valid;
    out["n_unsat"] = res.n_unsat;
    out["n_unknown"] = res.n_unknown;
    out["n_unknown_by_cause"] = res.unknown_by_cause;
    if (timing) {
        out["timing"] = {{"mean_valid_time_s", res.mean_valid_seconds}, {"total_time_s", res.total_seconds}};
    }
    if (per_run) {
        nlohmann::json runs = nlohmann::json::array();
        for (const auto& r : res.runs) {
            nlohmann::json box = nlohmann::json::array();
            for (const auto& b : r.box) {
                box.push_back({b.lo(), b.hi()});
            }
            nlohmann::json item{{"sample", r.sample}, {"box", box}, {"outcome", to_string(r.outcome)}};
            item["unknown_cause"] = r.cause ? nlohmann::json(to_string(*r.cause)) : nlohmann::json(nullptr);
            if (timing) {
                item["time_s"] = r.seconds;
            }
            runs.push_back(std::move(item));
        }
        out["per_run"] = std::move(runs);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Entry point

struct CommonOptions {
    std::string model;
    std::vector<std::string> params;
};

struct MonitorOptions {
    std::string formula;
    std::string formula_file;
    double epsilon = 1e-14;
    double theta = 0.01;
    double tmin = 1e-14;
    int order = 15;
};

inline void add_monitor_options(CLI::App* app, MonitorOptions& o)
{
    auto* f = app->add_option("--formula", o.formula, "STL formula");
    auto* ff = app->add_option("--formula-file", o.formula_file, "File holding the STL formula");
    f->excludes(ff);
    app->add_option("--epsilon", o.epsilon, "Inflation of the uniqueness test")->capture_default_str();
    app->add_option("--theta", o.theta, "Minimum progress of the zero search")->capture_default_str();
    app->add_option("--tmin", o.tmin, "Smallest integration step")->capture_default_str();
    app->add_option("--order", o.order, "Taylor order of the integrator")->capture_default_str()->check(
        CLI::Range(2, 40));
}

inline MonitorConfig make_config(const MonitorOptions& o)
{
    MonitorConfig cfg;
    cfg.epsilon = o.epsilon;
    cfg.theta = o.theta;
    cfg.t_min = o.tmin;
    cfg.integrator.t_min = o.tmin;
    cfg.integrator.order = o.order;
    return cfg;
}

inline Formula load_formula(const MonitorOptions& o, const ContinuousSystem& sys)
{
    if (o.formula.empty() && o.formula_file.empty()) {
        throw std::invalid_argument("one of --formula or --formula-file is required");
    }
    const std::string text = o.formula_file.empty() ? o.formula : read_file(o.formula_file);
    return parse_formula(text, sys.names);
}

inline ContinuousSystem load_system(const CommonOptions& c)
{
    ContinuousSystem sys = load_model(c.model);
    for (const auto& p : c.params) {
        apply_param(sys, p);
    }
    return sys;
}

inline int exit_for(Outcome o)
{
    switch (o) {
    case Outcome::Valid: return exit_valid;
    case Outcome::Unsat: return exit_unsat;
    case Outcome::Unknown: return exit_unknown;
    }
    return exit_unknown;
}

inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Rigorous monitoring of STL properties over parameterized ODE systems", "stlmon"};
    app.require_subcommand(1);

    CommonOptions vc;
    MonitorOptions vm;
    std::string trace_path;
    bool dump_sets = false;
    bool verify_no_timing = false;
    auto* verify = app.add_subcommand("verify", "Verify a formula over every signal of a model");
    verify->add_option("--model", vc.model, "Model file or bundled model name")->required();
    verify->add_option("--param", vc.params, "Parameter domain override NAME=LO[,HI]");
    add_monitor_options(verify, vm);
    verify->add_option("--trace", trace_path, "Write the enclosure CSV to this file");
    verify->add_flag("--dump-sets", dump_sets, "Include atom and subformula sets in the report");
    verify->add_flag("--no-timing", verify_no_timing, "Omit wall-clock time from the report");

    CommonOptions bc;
    MonitorOptions bm;
    std::uint64_t runs = 100;
    std::uint64_t seed = 0;
    double widen = 0.0;
    unsigned threads = 1;
    bool per_run = false;
    bool batch_no_timing = false;
    auto* batch = app.add_subcommand("batch", "Verify many sampled parameter instances");
    batch->add_option("--model", bc.model, "Model file or bundled model name")->required();
    batch->add_option("--param", bc.params, "Sampling domain override NAME=LO[,HI]");
    add_monitor_options(batch, bm);
    batch->add_option("--runs", runs, "Number of runs")->capture_default_str()->check(CLI::PositiveNumber);
    batch->add_option("--seed", seed, "RNG seed")->capture_default_str();
    batch->add_option("--widen", widen, "Width of the parameter box around each sample")
        ->capture_default_str()
        ->check(CLI::NonNegativeNumber);
    batch->add_option("--threads", threads, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
    batch->add_flag("--per-run", per_run, "List every run");
    batch->add_flag("--no-timing", batch_no_timing, "Omit wall-clock times");

    CommonOptions tc;
    double horizon = 0.0;
    std::string output;
    int trace_order = 15;
    auto* trace = app.add_subcommand("trace", "Write the signal enclosure as CSV");
    trace->add_option("--model", tc.model, "Model file or bundled model name")->required();
    trace->add_option("--param", tc.params, "Parameter domain override NAME=LO[,HI]");
    trace->add_option("--horizon", horizon, "End time")->required()->check(CLI::NonNegativeNumber);
    trace->add_option("--order", trace_order, "Taylor order")->capture_default_str()->check(CLI::Range(2, 40));
    trace->add_option("--output", output, "Output file (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : exit_usage;
    }

    try {
        if (*verify) {
            const ContinuousSystem sys = load_system(vc);
            const Formula phi = load_formula(vm, sys);
            MonitorConfig cfg = make_config(vm);
            cfg.keep_sets = dump_sets;
            cfg.keep_enclosure = !trace_path.empty();
            const auto t0 = std::chrono::steady_clock::now();
            const Verdict v = monitor_stl(sys, phi, cfg);
            const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            nlohmann::json j = to_json(v, dump_sets);
            j["formula"] = to_string(phi, sys.names);
            if (!verify_no_timing) {
                j["time_s"] = secs;
            }
            out << j.dump(2) << '\n';
            if (!trace_path.empty() && v.enclosure) {
                std::ofstream f(trace_path);
                if (!f) {
                    throw IoError("cannot write " + trace_path);
                }
                v.enclosure->write_trace(f);
            }
            return exit_for(v.outcome);
        }
        if (*batch) {
            BatchSpec spec{load_system(bc), Formula::truth()};
            spec.formula = load_formula(bm, spec.system);
            spec.runs = runs;
            spec.seed = seed;
            spec.widen = widen;
            spec.config = make_config(bm);
            spec.threads = threads;
            const BatchResult res = run_batch(spec);
            out << batch_json(spec, res, !batch_no_timing, per_run).dump(2) << '\n';
            return 0;
        }
        if (*trace) {
            const ContinuousSystem sys = load_system(tc);
            IntegratorConfig icfg;
            icfg.order = trace_order;
            SignalEnclosure enc(sys, icfg);
            std::ofstream file;
            if (!output.empty()) {
                file.open(output);
                if (!file) {
                    throw IoError("cannot write " + output);
                }
            }
            std::ostream& os = output.empty() ? out : file;
            try {
                enc.extend(horizon);
            } catch (const IntegrationError& e) {
                enc.write_trace(os);
                err << "integration failed: " << e.what() << '\n';
                err << "reached horizon: " << format_double(e.reached()) << '\n';
                return exit_integration;
            }
            enc.write_trace(os);
            return 0;
        }
    } catch (const ParseError& e) {
        err << "parse error: " << e.what() << '\n';
        return exit_usage;
    } catch (const IoError& e) {
        err << "error: " << e.what() << '\n';
        return exit_io;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return exit_usage;
    }
    return exit_usage;
}

} // namespace stlmon::cli
