#pragma once

#include "delayoco/base_olo.hpp"
#include "delayoco/common.hpp"
#include "delayoco/losses.hpp"
#include "delayoco/timeline.hpp"
#include "delayoco/wrappers.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace delayoco::harness {

enum class DelayKind { Zero, Constant, Uniform, Spike, Geometric, Fixed };

struct DelayGenerator {
    DelayKind kind = DelayKind::Zero;
    std::int64_t d = 0;    // constant
    std::int64_t dmax = 0; // uniform 0..dmax
    double p = 0.5;        // geometric success probability
    std::uint64_t seed = 0;
    timeline::DelaySchedule fixed; // kind == Fixed

    // Clipped to d_t <= T - t.
    timeline::DelaySchedule generate(std::int64_t T, std::uint64_t episode_seed) const;
};

DelayKind parse_delay_kind(const std::string &name);
std::string to_string(DelayKind k);
timeline::DelaySchedule spike_schedule(std::int64_t T);

struct Environment {
    losses::LossFamily family;
    DelayGenerator delays;
    std::int64_t T = 1;
    losses::ComparatorOptions comparator;
};

struct EpisodeOptions {
    bool audit = false;       // online-vs-offline dual audit
    bool diagnostics = false; // per-term ledger arrays
    bool keep_rounds = false; // per-round arrays in the trace
    bool validate = true;     // sample G, M, lambda before running
};

struct RoundRecord {
    Vector x;
    std::optional<Vector> x2;
    double loss = 0.0;
    double comparator_loss = 0.0;
    std::int32_t arrivals = 0;
};

struct RegretTrace {
    std::uint64_t seed = 0;
    std::string fingerprint;
    std::int64_t T = 0;
    std::vector<RoundRecord> rounds; // when keep_rounds

    double total_loss = 0.0;
    double comparator_total = 0.0;
    double regret = 0.0;
    Vector x_star;
    bool comparator_converged = false;
    double eps_opt = 0.0;

    // diagnostics of the innermost base learner, against x*
    double lin_regret = 0.0;
    double drift = 0.0;
    double h_eta = 0.0;
    std::int64_t updates = 0;
    std::int64_t d_tot = 0;
    std::int64_t sigma_max = 0;
    std::int64_t skips = 0;
    std::int64_t dprime_tot = 0;
    double delta_tot = 0.0; // sum of delta_t, bandit wrappers
    double delta_min = 0.0;
    std::int64_t packets = 0;

    timeline::DelaySchedule schedule;
    std::optional<wrappers::SkipStats> skip;
    std::optional<wrappers::SkipInvariants> skip_invariants;
    std::optional<wrappers::DualAudit> dual_audit;

    // decomposition audit, W_OCO without skipping
    bool decomposition_checked = false;
    double decomposition_lhs = 0.0;
    double decomposition_rhs = 0.0;
    bool decomposition_pass = true;

    // the base learner's ledger (z history etc.) when diagnostics are on
    std::optional<olo::DriftRegretLedger> ledger;
};

// Builds the wrapper context (constants, seeds) for an environment.
wrappers::WrapperContext make_context(const Environment &env, std::uint64_t seed,
                                      const EpisodeOptions &opt);
// Completes the smoothing parameters (r, nu, k, T) of a spec.
wrappers::PlayerSpec complete_spec(wrappers::PlayerSpec spec, const Environment &env);

RegretTrace run_episode(const Environment &env, const wrappers::PlayerSpec &player,
                        std::uint64_t seed, const EpisodeOptions &opt = {});

// Episode row in the CSV layout
// T,seed,regret,d_tot,sigma_max,skips,dprime_tot,drift,lin_regret,H_eta
struct EpisodeRow {
    std::int64_t T = 0;
    std::uint64_t seed = 0;
    double regret = 0.0;
    std::int64_t d_tot = 0;
    std::int64_t sigma_max = 0;
    std::int64_t skips = 0;
    std::int64_t dprime_tot = 0;
    double drift = 0.0;
    double lin_regret = 0.0;
    double h_eta = 0.0;
};

EpisodeRow to_row(const RegretTrace &t);

struct SweepRow {
    std::int64_t T = 0;
    double mean = 0.0;
    double std = 0.0; // sample standard deviation
    double min = 0.0;
    double max = 0.0;
    std::int64_t n = 0;
};

struct SweepResult {
    std::vector<EpisodeRow> episodes; // sorted by (T, seed)
    std::vector<SweepRow> table;      // one row per T
};

// Episodes for every (T, seed); `threads` workers, merged in (T, seed) order.
SweepResult sweep(const std::vector<std::int64_t> &T_grid,
                  const std::vector<std::uint64_t> &seeds, const Environment &env,
                  const wrappers::PlayerSpec &player, int threads = 1,
                  const EpisodeOptions &opt = {});

std::vector<std::uint64_t> seed_list(std::uint64_t base, int reps);

struct ScalingFit {
    double slope = 0.0;
    double intercept = 0.0;
    double residual = 0.0; // RMS of log residuals
};

ScalingFit fit_scaling(const std::vector<SweepRow> &table);
ScalingFit fit_scaling(const std::vector<double> &T, const std::vector<double> &y);

// Regret bound forms with explicit constants.
double bound_oco_general(double G, double D, double d_tot, double T);
double bound_sc_pftrl(double G, double lambda, double sigma_max, double d_tot, double T);
double bound_sc_omd(double G, double lambda, double sigma_max, double T);
double bound_bco_convex(double G, double D, double T, double d_tot, double nu, int k,
                        double r, double delta_T, double delta_tot);
double bound_2p_convex(double G, double D, double T, double d_tot, int k,
                       double r, double delta_tot, double moment_c = 10.0);

// CSV text for episode rows (fixed header) and sweep tables.
std::string episodes_csv(const std::vector<EpisodeRow> &rows);
std::string table_csv(const std::vector<SweepRow> &rows);
std::string rounds_csv(const RegretTrace &t);
// Shortest round-trip decimal form.
std::string fmt_double(double v);

} // namespace delayoco::harness
