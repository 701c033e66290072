#include "pbs/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <string>
#include <thread>

#include "hedge_kernel.hpp"
#include "pbs/random.hpp"

namespace pbs {
namespace {

// Counter word 3 separates the independent random streams.
constexpr std::uint32_t kPathStream = 1;
constexpr std::uint32_t kDrawStream = 2;
constexpr std::uint32_t kUpsilonStream = 3;
constexpr std::uint32_t kLemmaStream = 4;

constexpr int kBlockPaths = 128;

class NeumaierSum {
public:
    void add(double x) {
        const double t = sum_ + x;
        if (std::fabs(sum_) >= std::fabs(x)) {
            comp_ += (sum_ - t) + x;
        } else {
            comp_ += (x - t) + sum_;
        }
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

double mean_of(std::span<const double> xs) {
    NeumaierSum s;
    for (double x : xs) s.add(x);
    return s.value() / static_cast<double>(xs.size());
}

// Sample variance, two-pass.
double variance_of(std::span<const double> xs, double mean) {
    if (xs.size() < 2) return 0.0;
    NeumaierSum s;
    for (double x : xs) s.add((x - mean) * (x - mean));
    return s.value() / static_cast<double>(xs.size() - 1);
}

// Runs body(block) for every block; blocks are claimed dynamically but each
// writes only its own slot, so the result does not depend on the schedule.
// Returns the number of blocks completed before the deadline.
template <typename Body>
int run_blocks(int n_blocks, int threads, std::optional<std::chrono::milliseconds> budget, Body body,
               std::vector<char>& done) {
    const auto deadline = budget ? std::chrono::steady_clock::now() + *budget
                                 : std::chrono::steady_clock::time_point::max();
    std::atomic<int> next{0};
    std::atomic<bool> expired{false};
    done.assign(static_cast<std::size_t>(n_blocks), 0);

    auto worker = [&] {
        while (!expired.load(std::memory_order_relaxed)) {
            const int b = next.fetch_add(1);
            if (b >= n_blocks) return;
            body(b);
            done[static_cast<std::size_t>(b)] = 1;
            if (std::chrono::steady_clock::now() > deadline) expired = true;
        }
    };

    const int n_workers = std::max(1, std::min(threads, n_blocks));
    if (n_workers == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(static_cast<std::size_t>(n_workers));
        for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    }
    return static_cast<int>(std::count(done.begin(), done.end(), 1));
}

void require_positive(int v, const char* what) {
    if (v <= 0) throw ArgumentError(std::string(what) + " must be positive");
}

}  // namespace

bool Estimate::within(double target, double n_se) const {
    return std::fabs(value - target) <= n_se * std_error;
}

void validate(const SimConfig& cfg) {
    validate(cfg.market);
    validate(cfg.es);
    validate(cfg.h);
    require_positive(cfg.n_paths, "n_paths");
    require_positive(cfg.n_steps, "n_steps");
    require_positive(cfg.n_sigma_draws, "n_sigma_draws");
    if (cfg.threads < 0) throw ArgumentError("threads must be non-negative");
    if (std::fabs(cfg.es.value - cfg.market.sigma0) > 1e-12 * std::max(1.0, cfg.market.sigma0)) {
        throw ArgumentError("simulation: error structure must sit at sigma0");
    }
    if (cfg.time_budget && cfg.time_budget->count() <= 0) {
        throw ArgumentError("simulation: time budget must be positive");
    }
}

int resolve_thread_count(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("PBS_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<int>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

SimResult simulate_pnl(const SimConfig& cfg) {
    validate(cfg);
    const auto& m = cfg.market;
    const int n_steps = cfg.n_steps;
    const int n_paths = cfg.n_paths;
    const int n_draws = cfg.n_sigma_draws;
    const double dt = m.maturity / n_steps;

    std::vector<double> sigmas(static_cast<std::size_t>(n_draws));
    std::vector<double> premia(sigmas.size());
    for (int j = 0; j < n_draws; ++j) {
        const auto [z, unused] = normal_pair(cfg.seed, {static_cast<std::uint32_t>(j), 0, 0, kDrawStream});
        const double s = perturbed_sample(cfg.es, z);
        if (!(s > 0.0)) {
            throw DomainError("simulation: non-positive volatility draw; reduce eps * Gamma");
        }
        sigmas[static_cast<std::size_t>(j)] = s;
        premia[static_cast<std::size_t>(j)] = bs_price(MarketSpec<>{m.spot, m.strike, m.maturity, s});
    }

    std::vector<double> inv_sqrt_tau(static_cast<std::size_t>(n_steps));
    std::vector<double> half_sqrt_tau(inv_sqrt_tau.size());
    for (int i = 0; i < n_steps; ++i) {
        const double tau = m.maturity - i * dt;
        inv_sqrt_tau[static_cast<std::size_t>(i)] = 1.0 / std::sqrt(tau);
        half_sqrt_tau[static_cast<std::size_t>(i)] = 0.5 * std::sqrt(tau);
    }

    const int n_blocks = (n_paths + kBlockPaths - 1) / kBlockPaths;
    // Per block: sum and sum of squares of h(P&L) for every draw.
    std::vector<double> block_sum(static_cast<std::size_t>(n_blocks) * n_draws);
    std::vector<double> block_sq(block_sum.size());
    std::vector<double> row_means(static_cast<std::size_t>(n_paths));

    const double drift = -0.5 * m.sigma0 * m.sigma0 * dt;
    const double diffusion = m.sigma0 * std::sqrt(dt);
    const double log_moneyness0 = std::log(m.spot / m.strike);

    auto body = [&](int b) {
        std::vector<double> lm(static_cast<std::size_t>(n_steps));
        std::vector<double> ds(lm.size());
        std::vector<double> gains(sigmas.size());
        double* bsum = block_sum.data() + static_cast<std::size_t>(b) * n_draws;
        double* bsq = block_sq.data() + static_cast<std::size_t>(b) * n_draws;
        const int p_end = std::min(n_paths, (b + 1) * kBlockPaths);
        for (int p = b * kBlockPaths; p < p_end; ++p) {
            double x = log_moneyness0;
            double spot = m.spot;
            for (int i = 0; i < n_steps; i += 2) {
                const auto [z0, z1] =
                    normal_pair(cfg.seed, {static_cast<std::uint32_t>(i / 2), static_cast<std::uint32_t>(p), 0,
                                           kPathStream});
                for (int k = 0; k < 2 && i + k < n_steps; ++k) {
                    const auto idx = static_cast<std::size_t>(i + k);
                    lm[idx] = x;
                    x += drift + diffusion * (k == 0 ? z0 : z1);
                    const double next = m.strike * std::exp(x);
                    ds[idx] = next - spot;
                    spot = next;
                }
            }
            const double payoff = std::max(spot - m.strike, 0.0);
            detail::hedge_gains(lm, ds, inv_sqrt_tau, half_sqrt_tau, sigmas, gains);
            double row = 0.0;
            for (int j = 0; j < n_draws; ++j) {
                const double v = cfg.h(premia[static_cast<std::size_t>(j)] + gains[static_cast<std::size_t>(j)] - payoff);
                bsum[j] += v;
                bsq[j] += v * v;
                row += v;
            }
            row_means[static_cast<std::size_t>(p)] = row / n_draws;
        }
    };

    std::vector<char> done;
    const int completed =
        run_blocks(n_blocks, resolve_thread_count(cfg.threads), cfg.time_budget, body, done);
    if (completed < n_blocks) {
        int paths_done = 0;
        for (int b = 0; b < n_blocks; ++b) {
            if (done[static_cast<std::size_t>(b)]) paths_done += std::min(n_paths, (b + 1) * kBlockPaths) - b * kBlockPaths;
        }
        throw PartialResultError("simulation: time budget exhausted after " + std::to_string(paths_done) + " of " +
                                     std::to_string(n_paths) + " paths",
                                 paths_done, n_paths);
    }

    SimResult out;
    out.time_step = dt;
    out.n_paths = n_paths;
    out.n_steps = n_steps;
    out.n_sigma_draws = n_draws;
    out.draws.resize(sigmas.size());

    std::vector<double> cond_means(sigmas.size());
    const double P = n_paths;
    for (int j = 0; j < n_draws; ++j) {
        NeumaierSum s, q;
        for (int b = 0; b < n_blocks; ++b) {
            s.add(block_sum[static_cast<std::size_t>(b) * n_draws + j]);
            q.add(block_sq[static_cast<std::size_t>(b) * n_draws + j]);
        }
        const double mean = s.value() / P;
        const double var = n_paths > 1 ? std::max(0.0, (q.value() - P * mean * mean) / (P - 1.0)) : 0.0;
        const auto ju = static_cast<std::size_t>(j);
        cond_means[ju] = mean;
        out.draws[ju] = {sigmas[ju], mean, std::sqrt(var / P)};
    }

    const double J = n_draws;
    const double bias = mean_of(cond_means);
    const double var_draws = variance_of(cond_means, bias);
    const double var_rows = variance_of(row_means, mean_of(row_means));
    // Draw and path noise enter the grand mean as two independent components.
    out.bias_est = {bias, std::sqrt((n_draws > 1 ? var_draws / J : 0.0) + var_rows / P)};

    // Standard error of the sample variance from the fourth central moment.
    double se_var = 0.0;
    if (n_draws > 3) {
        NeumaierSum m4;
        for (double c : cond_means) m4.add(std::pow(c - bias, 4));
        const double mu4 = m4.value() / J;
        se_var = std::sqrt(std::max(0.0, (mu4 - var_draws * var_draws * (J - 3.0) / (J - 1.0)) / J));
    }
    out.variance_est = {var_draws, se_var};
    return out;
}

Estimate estimate_upsilon2(const SimConfig& cfg) {
    validate(cfg);
    const auto& m = cfg.market;
    const double vega = bs_greeks(m).vega;
    const double T = m.maturity;
    const double s0 = m.sigma0;
    const int n = cfg.n_paths;

    const int n_blocks = (n + kBlockPaths - 1) / kBlockPaths;
    std::vector<double> samples(static_cast<std::size_t>(n));
    auto body = [&](int b) {
        const int p_end = std::min(n, (b + 1) * kBlockPaths);
        for (int p = b * kBlockPaths; p < p_end; ++p) {
            const PhiloxCounter ctr{static_cast<std::uint32_t>(p), 0, 0, kUpsilonStream};
            const double u = uniform(cfg.seed, {static_cast<std::uint32_t>(p), 1, 0, kUpsilonStream});
            const double t = T * (p + u) / n;
            const double z = normal_pair(cfg.seed, ctr).first;
            const double st = m.spot * std::exp(-0.5 * s0 * s0 * t + s0 * std::sqrt(t) * z);
            const double vanna = bs_greeks(MarketSpec<>{st, m.strike, T - t, s0}).vanna;
            samples[static_cast<std::size_t>(p)] = vega * vega + T * s0 * s0 * st * st * vanna * vanna;
        }
    };
    std::vector<char> done;
    const int completed = run_blocks(n_blocks, resolve_thread_count(cfg.threads), std::nullopt, body, done);
    (void)completed;

    const double mean = mean_of(samples);
    // The plain iid error overstates the stratified one; kept as a safe bound.
    const double se = std::sqrt(variance_of(samples, mean) / n);
    return {mean * cfg.es.variance, se * cfg.es.variance};
}

std::vector<LemmaRow> lemma_small_t_check(const DiffusionSpec<>& spec, const SmoothFunctionProbe<>& probe,
                                          std::span<const double> t_grid, const LemmaConfig& cfg) {
    require_positive(cfg.n_paths, "n_paths");
    require_positive(cfg.n_steps, "n_steps");
    if (!spec.a || !spec.b || !probe.f1) throw ArgumentError("lemma: diffusion and probe must be set");
    for (std::size_t k = 0; k < t_grid.size(); ++k) {
        if (!(t_grid[k] > 0.0) || !std::isfinite(t_grid[k])) throw ArgumentError("lemma: horizons must be positive");
        if (k > 0 && !(t_grid[k] < t_grid[k - 1])) throw ArgumentError("lemma: horizons must be decreasing");
    }

    const double slope0 = probe.f1(spec.x0) * spec.a(spec.x0);
    std::vector<LemmaRow> rows;
    rows.reserve(t_grid.size());
    for (std::size_t k = 0; k < t_grid.size(); ++k) {
        const double t = t_grid[k];
        const double dt = t / cfg.n_steps;
        const double sdt = std::sqrt(dt);
        std::vector<double> samples(static_cast<std::size_t>(cfg.n_paths));
        const int n_blocks = (cfg.n_paths + kBlockPaths - 1) / kBlockPaths;
        auto body = [&](int b) {
            const int p_end = std::min(cfg.n_paths, (b + 1) * kBlockPaths);
            for (int p = b * kBlockPaths; p < p_end; ++p) {
                double x = spec.x0;
                double mart = 0.0;
                double brown = 0.0;
                for (int i = 0; i < cfg.n_steps; i += 2) {
                    const auto [z0, z1] = normal_pair(
                        cfg.seed, {static_cast<std::uint32_t>(i / 2), static_cast<std::uint32_t>(p),
                                   static_cast<std::uint32_t>(k), kLemmaStream});
                    for (int j = 0; j < 2 && i + j < cfg.n_steps; ++j) {
                        const double db = sdt * (j == 0 ? z0 : z1);
                        const double ax = spec.a(x);
                        mart += probe.f1(x) * ax * db;
                        brown += db;
                        x += ax * db + spec.b(x) * dt;
                    }
                }
                const double gap = mart - slope0 * brown;
                samples[static_cast<std::size_t>(p)] = gap * gap / t;
            }
        };
        std::vector<char> done;
        run_blocks(n_blocks, resolve_thread_count(cfg.threads), std::nullopt, body, done);
        const double mean = mean_of(samples);
        rows.push_back({t, {mean, std::sqrt(variance_of(samples, mean) / cfg.n_paths)}});
    }
    return rows;
}

bool decreasing_within(std::span<const LemmaRow> rows, double n_se) {
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& prev = rows[i - 1].statistic;
        const auto& cur = rows[i].statistic;
        const double slack = n_se * std::hypot(prev.std_error, cur.std_error);
        if (cur.value > prev.value + slack) return false;
    }
    return true;
}

}  // namespace pbs
