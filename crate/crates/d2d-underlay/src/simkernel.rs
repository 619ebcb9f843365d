//! Monte Carlo engine.
//!
//! One trial is one TTI: sample a deployment (CUEs, PPP of D2D pairs with an
//! out-of-cell annulus, all fading), allocate links to CUE groups, apply a
//! power-control scheme, and record coverage indicators over a SINR-threshold
//! grid. Trials are independent; trial `t` draws from RNG stream `t`, so the
//! parallel and sequential paths visit identical randomness and results are
//! reduced in trial order either way.
//!
//! Out-of-cell links participate in allocation and power control exactly
//! like in-cell links but are excluded from coverage and rate statistics;
//! they exist to supply interference at the cell border.

use rayon::prelude::*;

use crate::allocation::{allocate, AllocationResult};
use crate::channel::MIN_DISTANCE_M;
use crate::config::{linear_to_db, SystemConfig};
use crate::geometry::{distance, sample_ppp_disk, sample_uniform_disk, Point2D, RngStream};
use crate::powerctl::{
    dppc_decide, dppc_threshold, edppc_decide, maxpower_decide, optimal_tx_probability,
    sddpc_run, PcDecision,
};

/// Power-control scheme selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Dppc,
    Edppc,
    Sddpc,
    MaxPower,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Dppc => "dppc",
            Scheme::Edppc => "edppc",
            Scheme::Sddpc => "sddpc",
            Scheme::MaxPower => "maxpower",
        }
    }

    pub fn parse(s: &str) -> Option<Scheme> {
        match s.to_ascii_lowercase().as_str() {
            "dppc" => Some(Scheme::Dppc),
            "edppc" => Some(Scheme::Edppc),
            "sddpc" => Some(Scheme::Sddpc),
            "maxpower" | "max-power" => Some(Scheme::MaxPower),
            _ => None,
        }
    }
}

/// One sampled realization: positions and every fading gain the SINR
/// equations need.
#[derive(Debug, Clone)]
pub struct Deployment {
    /// CUE positions, uniform in the cell disk.
    pub cues: Vec<Point2D>,
    /// D2D transmitters, PPP in the disk of radius `R_C + outer_margin`.
    pub d2d_tx: Vec<Point2D>,
    /// Each receiver is area-uniform within `R_D` of its transmitter.
    pub d2d_rx: Vec<Point2D>,
    /// Transmitter within `R_C` of the eNB.
    pub in_cell: Vec<bool>,
    /// `|h_kk|^2` per link.
    pub h_direct: Vec<f64>,
    /// `|h_0k|^2`, link transmitter to eNB.
    pub h_tx_enb: Vec<f64>,
    /// `|h_0cm|^2`, CUE to eNB.
    pub h_cue_enb: Vec<f64>,
    /// `[k][m]`: CUE `m` to receiver `k`.
    pub h_cue_rx: Vec<Vec<f64>>,
    /// `[k][l]`: transmitter `l` to receiver `k` (diagonal unused).
    pub h_lateral: Vec<Vec<f64>>,
}

impl Deployment {
    pub fn len(&self) -> usize {
        self.d2d_tx.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d2d_tx.is_empty()
    }

    /// Link length `d_kk`, clamped away from zero.
    pub fn d_kk(&self, k: usize) -> f64 {
        distance(self.d2d_tx[k], self.d2d_rx[k]).max(MIN_DISTANCE_M)
    }

    /// Transmitter-to-eNB distance `d_0k`.
    pub fn d_0k(&self, k: usize) -> f64 {
        distance(self.d2d_tx[k], Point2D::ORIGIN).max(MIN_DISTANCE_M)
    }

    pub fn d_cue_enb(&self, m: usize) -> f64 {
        distance(self.cues[m], Point2D::ORIGIN).max(MIN_DISTANCE_M)
    }

    pub fn d_cue_rx(&self, k: usize, m: usize) -> f64 {
        distance(self.cues[m], self.d2d_rx[k]).max(MIN_DISTANCE_M)
    }

    /// Transmitter `l` to receiver `k`.
    pub fn d_lateral(&self, k: usize, l: usize) -> f64 {
        distance(self.d2d_tx[l], self.d2d_rx[k]).max(MIN_DISTANCE_M)
    }
}

/// Samples one deployment with all fading drawn i.i.d. exp(1).
pub fn build_deployment(cfg: &SystemConfig, rng: &mut RngStream) -> Deployment {
    use crate::channel::sample_fading;
    let total_radius = cfg.cell_radius_m + cfg.outer_margin_m;
    let cues: Vec<Point2D> = (0..cfg.num_cues)
        .map(|_| sample_uniform_disk(Point2D::ORIGIN, cfg.cell_radius_m, rng))
        .collect();
    let d2d_tx = sample_ppp_disk(cfg.density_per_m2, total_radius, Point2D::ORIGIN, rng);
    let d2d_rx: Vec<Point2D> = d2d_tx
        .iter()
        .map(|tx| sample_uniform_disk(*tx, cfg.d2d_max_range_m, rng))
        .collect();
    let in_cell: Vec<bool> = d2d_tx
        .iter()
        .map(|tx| distance(*tx, Point2D::ORIGIN) <= cfg.cell_radius_m)
        .collect();
    let k = d2d_tx.len();
    let h_direct = (0..k).map(|_| sample_fading(rng)).collect();
    let h_tx_enb = (0..k).map(|_| sample_fading(rng)).collect();
    let h_cue_enb = (0..cfg.num_cues).map(|_| sample_fading(rng)).collect();
    let h_cue_rx = (0..k)
        .map(|_| (0..cfg.num_cues).map(|_| sample_fading(rng)).collect())
        .collect();
    let h_lateral = (0..k)
        .map(|_| (0..k).map(|_| sample_fading(rng)).collect())
        .collect();
    Deployment {
        cues,
        d2d_tx,
        d2d_rx,
        in_cell,
        h_direct,
        h_tx_enb,
        h_cue_enb,
        h_cue_rx,
        h_lateral,
    }
}

/// Aggregates for one trial at one threshold.
#[derive(Debug, Clone, Default)]
pub struct BetaStats {
    pub cue_covered: usize,
    pub cue_total: usize,
    pub d2d_covered: usize,
    /// Coverage denominator: active in-cell links (or all in-cell links when
    /// `coverage_all_links` is set).
    pub d2d_total: usize,
    /// Sum over active in-cell links of `log2(1 + SINR)`.
    pub sum_rate_bits: f64,
    /// Total transmit power of active in-cell links, watts.
    pub total_power_w: f64,
    pub active_links: usize,
    /// Uplink SINR per CUE.
    pub cue_sinr: Vec<f64>,
    /// D2D SINR per link; inactive links hold 0.
    pub d2d_sinr: Vec<f64>,
    /// Per-link decisions at this threshold.
    pub decisions: Vec<PcDecision>,
}

/// Everything recorded from one trial.
#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub assignment: AllocationResult,
    /// Aligned with the threshold grid passed to [`run_trial`].
    pub per_beta: Vec<BetaStats>,
    /// SDDPC rounds per group (empty for other schemes).
    pub sddpc_iterations: Vec<usize>,
    /// SDDPC per-link update counts, in-cell links only.
    pub sddpc_link_updates: Vec<usize>,
}

fn decisions_for(
    dep: &Deployment,
    alloc: &AllocationResult,
    scheme: Scheme,
    beta: f64,
    cfg: &SystemConfig,
    sddpc_cache: &mut Option<(Vec<PcDecision>, Vec<usize>, Vec<usize>)>,
) -> (Vec<PcDecision>, Vec<usize>, Vec<usize>) {
    let k = dep.len();
    match scheme {
        Scheme::MaxPower => ((0..k).map(|_| maxpower_decide(cfg)).collect(), vec![], vec![]),
        Scheme::Edppc => (
            (0..k)
                .map(|i| edppc_decide(dep.h_direct[i], dep.d_kk(i), dep.d_0k(i), cfg))
                .collect(),
            vec![],
            vec![],
        ),
        Scheme::Dppc => {
            // The gate is tuned per threshold: Gamma_min* follows the
            // sum-rate-optimal transmit probability at this beta.
            let ptx = optimal_tx_probability(
                cfg.q(),
                cfg.density_per_m2,
                beta,
                cfg.pathloss_exponent,
                cfg.d2d_max_range_m,
            );
            let gamma = dppc_threshold(ptx, cfg.pathloss_exponent, cfg.d2d_max_range_m);
            (
                (0..k)
                    .map(|i| dppc_decide(dep.h_direct[i], dep.d_kk(i), gamma, cfg))
                    .collect(),
                vec![],
                vec![],
            )
        }
        Scheme::Sddpc => {
            // beta-independent; run once per trial and reuse across the grid.
            if let Some(cached) = sddpc_cache {
                return cached.clone();
            }
            let mut decisions = vec![PcDecision::OFF; k];
            let mut rounds = Vec::with_capacity(cfg.num_cues);
            let mut updates = Vec::new();
            for m in 0..cfg.num_cues {
                let group = alloc.group(m);
                if group.is_empty() {
                    continue;
                }
                let state = sddpc_run(dep, &group, m, cfg);
                rounds.push(state.iterations);
                for (j, &link) in group.iter().enumerate() {
                    decisions[link] = PcDecision {
                        active: true,
                        power_w: state.powers_w[j],
                    };
                    if dep.in_cell[link] {
                        updates.push(state.link_updates[j]);
                    }
                }
            }
            let result = (decisions, rounds, updates);
            *sddpc_cache = Some(result.clone());
            result
        }
    }
}

/// Runs one trial against a threshold grid (linear SINR values).
pub fn run_trial(
    dep: &Deployment,
    scheme: Scheme,
    cfg: &SystemConfig,
    beta_grid: &[f64],
) -> TrialOutcome {
    let alloc = allocate(&dep.d2d_rx, &dep.cues);
    let alpha = cfg.pathloss_exponent;
    let noise = cfg.effective_noise_w();
    let p0 = cfg.cue_tx_power_w;
    let k = dep.len();

    let mut sddpc_cache = None;
    let mut per_beta = Vec::with_capacity(beta_grid.len());
    let mut sddpc_iterations = Vec::new();
    let mut sddpc_link_updates = Vec::new();

    for &beta in beta_grid {
        let (decisions, rounds, updates) =
            decisions_for(dep, &alloc, scheme, beta, cfg, &mut sddpc_cache);
        if !rounds.is_empty() && sddpc_iterations.is_empty() {
            sddpc_iterations = rounds;
            sddpc_link_updates = updates;
        }

        let mut stats = BetaStats {
            cue_total: cfg.num_cues,
            cue_sinr: Vec::with_capacity(cfg.num_cues),
            d2d_sinr: vec![0.0; k],
            ..Default::default()
        };

        // uplink SINR per CUE against its own group's active transmitters
        for m in 0..cfg.num_cues {
            let signal = p0 * dep.h_cue_enb[m] * dep.d_cue_enb(m).powf(-alpha);
            let mut denom = noise;
            for l in 0..k {
                if alloc.assignment[l] == m && decisions[l].active {
                    denom += decisions[l].power_w * dep.h_tx_enb[l] * dep.d_0k(l).powf(-alpha);
                }
            }
            // zero noise with an empty group means an interference-free
            // uplink; treat as infinite SINR rather than 0/0
            let sinr = if denom > 0.0 {
                signal / denom
            } else {
                f64::INFINITY
            };
            stats.cue_sinr.push(sinr);
            if sinr >= beta {
                stats.cue_covered += 1;
            }
        }

        // D2D SINR per in-cell active link: same-group D2D interference plus
        // the sharing CUE's uplink signal plus noise
        for i in 0..k {
            if !decisions[i].active {
                continue;
            }
            let m = alloc.assignment[i];
            let signal = decisions[i].power_w * dep.h_direct[i] * dep.d_kk(i).powf(-alpha);
            let mut denom = noise
                + p0 * dep.h_cue_rx[i][m] * dep.d_cue_rx(i, m).powf(-alpha);
            for l in 0..k {
                if l != i && alloc.assignment[l] == m && decisions[l].active {
                    denom +=
                        decisions[l].power_w * dep.h_lateral[i][l] * dep.d_lateral(i, l).powf(-alpha);
                }
            }
            let sinr = if denom > 0.0 {
                signal / denom
            } else {
                f64::INFINITY
            };
            stats.d2d_sinr[i] = sinr;
            if dep.in_cell[i] {
                stats.active_links += 1;
                stats.total_power_w += decisions[i].power_w;
                stats.sum_rate_bits += (1.0 + sinr).log2();
                if sinr >= beta {
                    stats.d2d_covered += 1;
                }
            }
        }
        stats.d2d_total = if cfg.coverage_all_links {
            dep.in_cell.iter().filter(|&&c| c).count()
        } else {
            stats.active_links
        };
        stats.decisions = decisions;
        per_beta.push(stats);
    }

    TrialOutcome {
        assignment: alloc,
        per_beta,
        sddpc_iterations,
        sddpc_link_updates,
    }
}

/// One row of sweep output: estimates with 95% confidence half-widths.
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub scheme: Scheme,
    pub num_cues: usize,
    pub lambda: f64,
    pub beta: f64,
    pub cellular_coverage: f64,
    pub cellular_ci: f64,
    pub d2d_coverage: f64,
    pub d2d_ci: f64,
    /// Mean per-trial sum of `log2(1 + SINR)` over active in-cell links.
    pub sum_rate_bps_hz: f64,
    /// Mean transmit power per active in-cell link, watts.
    pub avg_tx_power_w: f64,
    /// Sum rate divided by mean total transmit power.
    pub power_efficiency: f64,
    /// Mean number of active in-cell links.
    pub active_link_count: f64,
    pub trials: usize,
    pub seed: u64,
}

impl SweepResult {
    pub const CSV_HEADER: &'static str = "scheme,M,lambda,beta_db,cell_cov,cell_cov_ci,d2d_cov,d2d_cov_ci,sum_rate,avg_power_w,power_eff,active_links,trials,seed";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{:e},{:.2},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6e},{:.6e},{:.3},{},{}",
            self.scheme.name(),
            self.num_cues,
            self.lambda,
            linear_to_db(self.beta),
            self.cellular_coverage,
            self.cellular_ci,
            self.d2d_coverage,
            self.d2d_ci,
            self.sum_rate_bps_hz,
            self.avg_tx_power_w,
            self.power_efficiency,
            self.active_link_count,
            self.trials,
            self.seed
        )
    }
}

/// Kahan-compensated accumulator.
#[derive(Clone, Copy, Default)]
struct Kahan {
    sum: f64,
    c: f64,
}

impl Kahan {
    fn add(&mut self, x: f64) {
        let y = x - self.c;
        let t = self.sum + y;
        self.c = (t - self.sum) - y;
        self.sum = t;
    }
}

/// Mean and 95% normal-approximation CI half-width over per-trial values.
fn mean_ci(values: impl Iterator<Item = f64> + Clone, n: usize) -> (f64, f64) {
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mut sum = Kahan::default();
    for v in values.clone() {
        sum.add(v);
    }
    let mean = sum.sum / n as f64;
    let mut var = Kahan::default();
    for v in values {
        var.add((v - mean) * (v - mean));
    }
    let sd = if n > 1 {
        (var.sum / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    (mean, 1.96 * sd / (n as f64).sqrt())
}

/// Runs `num_trials` trials and reduces them to one [`SweepResult`] per grid
/// threshold. `parallel` toggles rayon; both paths reduce in trial order, so
/// results are identical.
///
/// ```
/// use d2d_underlay::config::{db_to_linear, SystemConfig};
/// use d2d_underlay::simkernel::{estimate, Scheme};
///
/// let cfg = SystemConfig {
///     density_per_m2: 5e-5,
///     num_cues: 2,
///     num_trials: 100,
///     ..SystemConfig::default()
/// }
/// .validate()
/// .unwrap();
/// let grid: Vec<f64> = [-6.0, 0.0, 6.0].iter().map(|&d| db_to_linear(d)).collect();
/// let rows = estimate(&cfg, Scheme::Edppc, &grid, cfg.num_trials, true);
/// assert_eq!(rows.len(), 3);
/// assert!(rows[0].d2d_coverage >= rows[2].d2d_coverage); // harder threshold, less coverage
/// ```
pub fn estimate(
    cfg: &SystemConfig,
    scheme: Scheme,
    beta_grid: &[f64],
    num_trials: usize,
    parallel: bool,
) -> Vec<SweepResult> {
    let trial = |t: u64| -> TrialOutcome {
        let mut rng = RngStream::new(cfg.rng_seed, t);
        let dep = build_deployment(cfg, &mut rng);
        run_trial(&dep, scheme, cfg, beta_grid)
    };
    let outcomes: Vec<TrialOutcome> = if parallel {
        (0..num_trials as u64).into_par_iter().map(trial).collect()
    } else {
        (0..num_trials as u64).map(trial).collect()
    };
    reduce(cfg, scheme, beta_grid, &outcomes)
}

/// Deterministic reduction of per-trial outcomes.
pub fn reduce(
    cfg: &SystemConfig,
    scheme: Scheme,
    beta_grid: &[f64],
    outcomes: &[TrialOutcome],
) -> Vec<SweepResult> {
    beta_grid
        .iter()
        .enumerate()
        .map(|(bi, &beta)| {
            // per-trial coverage fractions; trials with an empty denominator
            // are skipped for that statistic
            let cell: Vec<f64> = outcomes
                .iter()
                .filter(|o| o.per_beta[bi].cue_total > 0)
                .map(|o| o.per_beta[bi].cue_covered as f64 / o.per_beta[bi].cue_total as f64)
                .collect();
            let d2d: Vec<f64> = outcomes
                .iter()
                .filter(|o| o.per_beta[bi].d2d_total > 0)
                .map(|o| o.per_beta[bi].d2d_covered as f64 / o.per_beta[bi].d2d_total as f64)
                .collect();
            let (cell_mean, cell_ci) = mean_ci(cell.iter().copied(), cell.len());
            let (d2d_mean, d2d_ci) = mean_ci(d2d.iter().copied(), d2d.len());

            let n = outcomes.len().max(1) as f64;
            let mut rate = Kahan::default();
            let mut power = Kahan::default();
            let mut active = Kahan::default();
            for o in outcomes {
                let s = &o.per_beta[bi];
                rate.add(s.sum_rate_bits);
                power.add(s.total_power_w);
                active.add(s.active_links as f64);
            }
            let mean_rate = rate.sum / n;
            let mean_power_total = power.sum / n;
            let mean_active = active.sum / n;
            SweepResult {
                scheme,
                num_cues: cfg.num_cues,
                lambda: cfg.density_per_m2,
                beta,
                cellular_coverage: cell_mean,
                cellular_ci: cell_ci,
                d2d_coverage: d2d_mean,
                d2d_ci: d2d_ci,
                sum_rate_bps_hz: mean_rate,
                avg_tx_power_w: if active.sum > 0.0 {
                    power.sum / active.sum
                } else {
                    0.0
                },
                power_efficiency: if mean_power_total > 0.0 {
                    mean_rate / mean_power_total
                } else {
                    0.0
                },
                active_link_count: mean_active,
                trials: outcomes.len(),
                seed: cfg.rng_seed,
            }
        })
        .collect()
}

/// Iteration statistics for SDDPC across trials.
#[derive(Debug, Clone)]
pub struct IterStats {
    /// Mean synchronous rounds per group run.
    pub mean_rounds: f64,
    /// Mean per-link update count (in-cell links).
    pub mean_link_updates: f64,
    /// Histogram of per-link update counts.
    pub update_histogram: Vec<usize>,
    /// Fraction of group runs that converged within the round cap.
    pub converged_fraction: f64,
}

/// Runs SDDPC over `num_trials` deployments and aggregates iteration counts.
pub fn sddpc_iteration_stats(cfg: &SystemConfig, num_trials: usize, parallel: bool) -> IterStats {
    let beta = [1.0];
    let trial = |t: u64| -> TrialOutcome {
        let mut rng = RngStream::new(cfg.rng_seed, t);
        let dep = build_deployment(cfg, &mut rng);
        run_trial(&dep, Scheme::Sddpc, cfg, &beta)
    };
    let outcomes: Vec<TrialOutcome> = if parallel {
        (0..num_trials as u64).into_par_iter().map(trial).collect()
    } else {
        (0..num_trials as u64).map(trial).collect()
    };
    let mut rounds_sum = 0usize;
    let mut rounds_n = 0usize;
    let mut upd_sum = 0usize;
    let mut hist = Vec::new();
    let mut upd_n = 0usize;
    let mut converged = 0usize;
    for o in &outcomes {
        for &r in &o.sddpc_iterations {
            rounds_sum += r;
            rounds_n += 1;
            if r < cfg.sddpc_max_iters {
                converged += 1;
            }
        }
        for &u in &o.sddpc_link_updates {
            upd_sum += u;
            upd_n += 1;
            if u >= hist.len() {
                hist.resize(u + 1, 0);
            }
            hist[u] += 1;
        }
    }
    IterStats {
        mean_rounds: rounds_sum as f64 / rounds_n.max(1) as f64,
        mean_link_updates: upd_sum as f64 / upd_n.max(1) as f64,
        update_histogram: hist,
        converged_fraction: converged as f64 / rounds_n.max(1) as f64,
    }
}
