#include "cli.hpp"

#include <array>
#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <optional>
#include <ostream>
#include <sstream>
#include <variant>

#include "pbs/black_scholes.hpp"
#include "pbs/errors.hpp"
#include "pbs/pricing.hpp"
#include "pbs/simulator.hpp"
#include "pbs/surface.hpp"
#include "pbs/utility.hpp"
#include "verify.hpp"

namespace pbs::cli {
namespace {

using Json = nlohmann::ordered_json;
using Cell = std::variant<double, long long, bool, std::string>;

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
};

struct RunConfig {
    std::string command;
    std::optional<double> spot, strike, mat, vol, gamma, bias, eps, h1, h2, rsd, alpha;
    std::optional<std::string> rr;
    std::string format = "csv";
    std::optional<std::string> out;
    std::uint64_t seed = 7;
    int n_paths = 20000;
    int n_steps = 512;
    int n_draws = 2000;
    int threads = 0;
    double k_lo = 0.5;
    double k_hi = 2.0;
    int n_strikes = 41;
    std::vector<double> maturities;
    std::string utility = "normal-half";
    double x_lo = 0.1;
    double x_hi = 2.0;
    int n_x = 20;
    double sigma2 = 1.0;
    std::string suite = "all";
};

// Collected before anything runs so that every problem is reported at once.
class Problems {
public:
    void add(std::string p) { list_.push_back(std::move(p)); }
    bool empty() const { return list_.empty(); }
    const std::vector<std::string>& list() const { return list_; }

private:
    std::vector<std::string> list_;
};

std::string fmt15(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.15g", v);
    return buf;
}

// 15 significant digits; the shortest round-trip printer then emits no more.
Json json_number(double v) {
    if (!std::isfinite(v)) return nullptr;
    return std::stod(fmt15(v));
}

std::string csv_field(const Cell& c) {
    return std::visit(
        [](const auto& v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, double>) {
                return fmt15(v);
            } else if constexpr (std::is_same_v<T, bool>) {
                return v ? "true" : "false";
            } else if constexpr (std::is_same_v<T, long long>) {
                return std::to_string(v);
            } else {
                if (v.find_first_of(",\"\n") == std::string::npos) return v;
                std::string q = "\"";
                for (char ch : v) {
                    if (ch == '"') q += '"';
                    q += ch;
                }
                return q + "\"";
            }
        },
        c);
}

Json json_cell(const Cell& c) {
    return std::visit(
        [](const auto& v) -> Json {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, double>) {
                return json_number(v);
            } else {
                return v;
            }
        },
        c);
}

std::string render(const RunConfig& cfg, const Json& config, const Table& t) {
    std::ostringstream os;
    if (cfg.format == "json") {
        Json doc;
        doc["command"] = cfg.command;
        doc["config"] = config;
        Json rows = Json::array();
        for (const auto& r : t.rows) {
            Json obj = Json::object();
            for (std::size_t i = 0; i < t.columns.size(); ++i) obj[t.columns[i]] = json_cell(r[i]);
            rows.push_back(std::move(obj));
        }
        doc["results"] = std::move(rows);
        os << doc.dump(2) << '\n';
    } else {
        for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
        os << '\n';
        for (const auto& r : t.rows) {
            for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << csv_field(r[i]);
            os << '\n';
        }
    }
    return os.str();
}

void write_atomically(const std::string& path, const std::string& text) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        f << text;
        f.flush();
        if (!f) throw NumericError("cannot write " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw NumericError("cannot move output into " + path);
    }
}

// ---------------------------------------------------------------------------
// Resolution of the flag set into module inputs.

struct Inputs {
    MarketSpec<> market;
    ErrorStructure<> es_cum;  // on sigma * sqrt(T)
    HFunction h;
};

bool needs_market(const std::string& c) {
    return c == "price" || c == "quote" || c == "smile" || c == "localvol" || c == "simulate";
}

void require(const std::optional<double>& v, const char* flag, Problems& p) {
    if (!v) p.add(std::string("missing ") + flag);
}

void positive(const std::optional<double>& v, const char* flag, Problems& p) {
    if (v && !(*v > 0.0 && std::isfinite(*v))) p.add(std::string(flag) + " must be positive");
}

Inputs resolve(const RunConfig& c, Problems& p) {
    Inputs in;
    const bool strict = needs_market(c.command);
    if (strict) {
        require(c.spot, "--spot", p);
        if (c.command == "price" || c.command == "quote" || c.command == "simulate") require(c.strike, "--strike", p);
        require(c.mat, "--mat", p);
        require(c.vol, "--vol", p);
        require(c.gamma, "--gamma", p);
        require(c.eps, "--eps", p);
        if (c.command == "quote") require(c.alpha, "--alpha", p);
    }
    positive(c.spot, "--spot", p);
    positive(c.strike, "--strike", p);
    positive(c.mat, "--mat", p);
    positive(c.vol, "--vol", p);
    if (c.gamma && !(*c.gamma >= 0.0 && std::isfinite(*c.gamma))) p.add("--gamma must be non-negative");
    if (c.eps && !(*c.eps >= 0.0 && std::isfinite(*c.eps))) p.add("--eps must be non-negative");
    if (c.alpha && !(*c.alpha > 0.0 && *c.alpha < 0.5)) p.add("--alpha must lie in (0, 0.5)");

    const verify::Options defaults;
    const double spot = c.spot.value_or(defaults.market.spot);
    in.market = {spot, c.strike.value_or(c.spot ? spot : defaults.market.strike),
                 c.mat.value_or(defaults.market.maturity), c.vol.value_or(defaults.market.sigma0)};
    const double cum = in.market.sigma0 * std::sqrt(std::fabs(in.market.maturity));
    const double gamma = c.gamma.value_or(defaults.es.variance * in.market.maturity);
    double bias = c.bias.value_or(0.0);

    if (c.rr) {
        double rr = 0.0;
        if (*c.rr == "smile-threshold") {
            rr = bias_sign_bound(in.market.total_variance());
        } else {
            std::size_t used = 0;
            try {
                rr = std::stod(*c.rr, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used != c.rr->size() || !std::isfinite(rr)) p.add("--rr must be a number or smile-threshold");
        }
        const double from_rr = cum > 0.0 ? rr * gamma / (2.0 * cum) : 0.0;
        if (c.bias && std::fabs(*c.bias - from_rr) > 1e-12 * std::max(1.0, std::fabs(*c.bias))) {
            p.add("--bias contradicts --rr: r_r implies A = " + fmt15(from_rr));
        }
        bias = from_rr;
    }
    in.es_cum = {cum, bias, gamma, c.eps.value_or(defaults.es.epsilon)};

    in.h.h1 = c.h1.value_or(1.0);
    in.h.h2 = c.h2.value_or(0.0);
    if (c.rsd) {
        const double h2 = *c.rsd * in.h.h1;
        if (c.h2 && std::fabs(*c.h2 - h2) > 1e-12 * std::max(1.0, std::fabs(*c.h2))) {
            p.add("--h2 contradicts --rsd");
        }
        in.h.h2 = h2;
    }
    if (!(std::isfinite(in.h.h1) && in.h.h1 != 0.0 && std::isfinite(in.h.h2))) p.add("--h1 must be non-zero");

    if (c.format != "csv" && c.format != "json") p.add("--format must be csv or json");
    if (c.n_paths <= 0 || c.n_steps <= 0 || c.n_draws <= 0) p.add("--n-paths, --n-steps, --n-draws must be positive");
    if (c.threads < 0) p.add("--threads must be non-negative");
    if (!(c.k_lo > 0.0 && c.k_hi > c.k_lo) || c.n_strikes < 2) p.add("strike grid: need 0 < k-lo < k-hi, n >= 2");
    if (!(c.x_hi > c.x_lo) || c.n_x < 2) p.add("utility grid: need x-lo < x-hi, n >= 2");
    for (double t : c.maturities) {
        if (!(t > 0.0 && std::isfinite(t))) p.add("--maturities must be positive");
    }
    return in;
}

Json echo(const RunConfig& c, const Inputs& in) {
    Json j;
    j["spot"] = json_number(in.market.spot);
    j["strike"] = json_number(in.market.strike);
    j["mat"] = json_number(in.market.maturity);
    j["vol"] = json_number(in.market.sigma0);
    j["gamma"] = json_number(in.es_cum.variance);
    j["bias"] = json_number(in.es_cum.bias);
    j["rr"] = in.es_cum.variance > 0.0 ? json_number(relative_index(in.es_cum)) : Json(nullptr);
    j["eps"] = json_number(in.es_cum.epsilon);
    j["h1"] = json_number(in.h.h1);
    j["h2"] = json_number(in.h.h2);
    j["alpha"] = c.alpha ? json_number(*c.alpha) : Json(nullptr);
    j["seed"] = c.seed;
    j["n_paths"] = c.n_paths;
    j["n_steps"] = c.n_steps;
    j["n_draws"] = c.n_draws;
    j["k_lo"] = json_number(c.k_lo);
    j["k_hi"] = json_number(c.k_hi);
    j["n_strikes"] = c.n_strikes;
    Json mats = Json::array();
    for (double t : c.maturities) mats.push_back(json_number(t));
    j["maturities"] = mats;
    j["utility"] = c.utility;
    j["x_lo"] = json_number(c.x_lo);
    j["x_hi"] = json_number(c.x_hi);
    j["n_x"] = c.n_x;
    j["sigma2"] = json_number(c.sigma2);
    j["suite"] = c.suite;
    return j;
}

// ---------------------------------------------------------------------------
// Commands.

Table cmd_price(const Inputs& in) {
    const auto g = bs_greeks(in.market);
    const auto es_sigma = to_volatility(in.es_cum, in.market.maturity);
    const auto pm = pnl_moments(es_sigma, in.market, in.h);
    const double a = call_bias(in.es_cum, in.market);
    return {{"spot", "strike", "maturity", "sigma0", "bs_price", "vega", "vomma", "vanna", "dual_gamma",
             "call_bias", "perturbed_price", "pnl_bias", "pnl_variance"},
            {{in.market.spot, in.market.strike, in.market.maturity, in.market.sigma0, g.premium, g.vega, g.vomma,
              g.vanna, g.dual_gamma, a, g.premium + in.es_cum.epsilon * a, pm.bias, pm.variance}}};
}

Table cmd_quote(const RunConfig& c, const Inputs& in) {
    const auto q = quote(to_volatility(in.es_cum, in.market.maturity), in.market, in.h, *c.alpha);
    return {{"strike", "maturity", "bid", "mid", "ask", "spread", "alpha"},
            {{in.market.strike, in.market.maturity, q.bid, q.mid, q.ask, q.spread(), q.alpha}}};
}

Table cmd_smile(const RunConfig& c, const Inputs& in) {
    const auto strikes = geometric_strikes(in.market.spot, c.k_lo, c.k_hi, c.n_strikes);
    Table t{{"strike", "maturity", "mid_price", "implied_vol", "bias_contribution", "band_violation", "error"}, {}};
    for (const auto& p : implied_smile(in.es_cum, in.market, strikes)) {
        t.rows.push_back({p.strike, p.maturity, p.mid_price, p.implied_vol, p.bias_contribution, p.band_violation,
                          p.error});
    }
    return t;
}

Table cmd_localvol(const RunConfig& c, const Inputs& in) {
    const auto strikes = geometric_strikes(in.market.spot, c.k_lo, c.k_hi, c.n_strikes);
    std::vector<double> mats = c.maturities;
    if (mats.empty()) mats.push_back(in.market.maturity);
    Table t{{"strike", "maturity", "local_variance", "local_vol", "positivity_margin"}, {}};
    for (double tm : mats) {
        const double margin = positivity_margin(rescale_maturity(in.es_cum, in.market.maturity, tm));
        for (double k : strikes) {
            const auto p = local_vol(in.es_cum, in.market, k, tm);
            t.rows.push_back({p.strike, p.maturity, p.local_variance,
                              p.local_variance >= 0.0 ? std::sqrt(p.local_variance) : NAN, margin});
        }
    }
    return t;
}

Table checks_table(const std::vector<verify::Check>& checks) {
    Table t{{"suite", "check", "value", "std_error", "target", "tolerance", "pass"}, {}};
    for (const auto& k : checks) t.rows.push_back({k.suite, k.name, k.value, k.std_error, k.target, k.tolerance, k.pass});
    return t;
}

verify::Options verify_options(const RunConfig& c, const Inputs& in) {
    verify::Options o;
    o.market = in.market;
    o.es = to_volatility(in.es_cum, in.market.maturity);
    o.h = in.h;
    if (c.alpha) o.alpha = *c.alpha;
    o.seed = c.seed;
    o.n_paths = c.n_paths;
    o.n_steps = c.n_steps;
    o.n_draws = c.n_draws;
    o.threads = c.threads;
    return o;
}

Table cmd_utility(const RunConfig& c) {
    const auto u = utilities::parse(c.utility);
    Table t{{"x", "u", "u1", "u2", "rho", "r_a", "r_r"}, {}};
    for (int i = 0; i < c.n_x; ++i) {
        const double x = c.x_lo + (c.x_hi - c.x_lo) * i / (c.n_x - 1);
        const auto r = aversion_indices(u, x, c.sigma2);
        t.rows.push_back({x, u.u(x), u.u1(x), u.u2(x), r.rho, r.r_a, r.r_r});
    }
    return t;
}

void add_common(CLI::App* s, RunConfig& c) {
    s->add_option("--spot", c.spot, "Spot x");
    s->add_option("--strike", c.strike, "Strike K");
    s->add_option("--mat", c.mat, "Maturity T (years)");
    s->add_option("--vol", c.vol, "True volatility sigma0");
    s->add_option("--gamma", c.gamma, "Gamma[sigma sqrt T]");
    s->add_option("--bias", c.bias, "A[sigma sqrt T]");
    s->add_option("--rr", c.rr, "Relative index 2XA/Gamma, or smile-threshold");
    s->add_option("--eps", c.eps, "Error size epsilon");
    s->add_option("--h1", c.h1, "h'(0)");
    s->add_option("--h2", c.h2, "h''(0)");
    s->add_option("--rsd", c.rsd, "Supply/demand index h''(0)/h'(0)");
    s->add_option("--alpha", c.alpha, "Risk level in (0, 0.5)");
    s->add_option("--format", c.format, "csv or json");
    s->add_option("--out", c.out, "Output file (written atomically)");
    s->add_option("--seed", c.seed, "Random seed");
    s->add_option("--n-paths", c.n_paths, "Monte Carlo paths");
    s->add_option("--n-steps", c.n_steps, "Hedging steps per path");
    s->add_option("--n-draws", c.n_draws, "Volatility draws");
    s->add_option("--threads", c.threads, "Worker threads (0: PBS_THREADS or all cores)");
    s->add_option("--k-lo", c.k_lo, "Lowest strike / spot");
    s->add_option("--k-hi", c.k_hi, "Highest strike / spot");
    s->add_option("--n-strikes", c.n_strikes, "Strikes in the grid");
    s->add_option("--maturities", c.maturities, "Maturities for localvol")->delimiter(',');
    s->add_option("--utility", c.utility, "normal-half, linear, cara:a, crra:c");
    s->add_option("--x-lo", c.x_lo, "Lowest wealth");
    s->add_option("--x-hi", c.x_hi, "Highest wealth");
    s->add_option("--n-x", c.n_x, "Wealth grid points");
    s->add_option("--sigma2", c.sigma2, "Wealth variance for the risk price");
    s->add_option("--suite", c.suite, "greeks, theorem41, upsilon2, quote, lemma or all");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    RunConfig cfg;
    CLI::App app{"Perturbed Black-Scholes pricing engine", "pbs"};
    app.require_subcommand(1);
    const std::array<std::pair<const char*, const char*>, 7> commands{{
        {"price", "Greeks, call bias, perturbed price and P&L moments"},
        {"quote", "Bid, mid and ask at risk level alpha"},
        {"smile", "Implied volatility across strikes"},
        {"localvol", "Local variance surface"},
        {"simulate", "Monte Carlo P&L against the closed forms"},
        {"utility", "Aversion indices over a wealth grid"},
        {"verify", "Run a verification suite"},
    }};
    for (const auto& [name, description] : commands) {
        auto* sub = app.add_subcommand(name, description);
        add_common(sub, cfg);
        sub->callback([&cfg, name] { cfg.command = name; });
    }

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kValidation;
    }

    Problems problems;
    const Inputs in = resolve(cfg, problems);
    if (!problems.empty()) {
        for (const auto& p : problems.list()) err << "error: " << p << '\n';
        return kValidation;
    }

    try {
        Table table;
        bool verify_failed = false;
        const auto& c = cfg.command;
        if (c == "price") {
            table = cmd_price(in);
        } else if (c == "quote") {
            table = cmd_quote(cfg, in);
        } else if (c == "smile") {
            table = cmd_smile(cfg, in);
        } else if (c == "localvol") {
            table = cmd_localvol(cfg, in);
        } else if (c == "simulate") {
            table = checks_table(verify::theorem41(verify_options(cfg, in)));
        } else if (c == "utility") {
            table = cmd_utility(cfg);
        } else {
            const auto checks = verify::run_suite(cfg.suite, verify_options(cfg, in));
            verify_failed = !verify::all_pass(checks);
            table = checks_table(checks);
        }

        const std::string text = render(cfg, echo(cfg, in), table);
        if (cfg.out) {
            write_atomically(*cfg.out, text);
        } else {
            out << text;
        }
        return verify_failed ? kVerifyFailed : kOk;
    } catch (const PositivityError& e) {
        err << "error: " << e.what() << " (margin " << fmt15(e.margin()) << ")\n";
        return kNumeric;
    } catch (const ArgumentError& e) {
        err << "error: " << e.what() << '\n';
        return kValidation;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kNumeric;
    }
}

}  // namespace pbs::cli
