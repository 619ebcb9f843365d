//! Distributed power control for the D2D links.
//!
//! Four schemes share the [`PcDecision`] interface:
//!
//! - **DPPC**: channel-inversion power `rho_rx * d^alpha * (1+eps)` behind a
//!   channel-quality gate `|h|^2 d^-alpha >= Gamma_min`, with the gate
//!   threshold chosen to maximize D2D sum rate ([`optimal_tx_probability`],
//!   [`dppc_threshold`]).
//! - **EDPPC**: the same inversion capped by an eNB-protection term,
//!   `min(U d_kk^alpha, V d_0k^alpha)`, gated on a fixed `G_min`.
//! - **SDDPC**: iterative per-link updates toward a distance-dependent target
//!   SINR that decays from `beta_max` (at `R_min_D`) to `beta_min` (at
//!   `R_D`); the soft-dropping update concedes throughput on long links
//!   instead of dropping them.
//! - **MaxPower**: the no-control baseline, always `P_max_D`.
//!
//! All powers are clamped into the hardware range; decisions are pure
//! per-link functions except for [`sddpc_run`], which iterates one allocation
//! group to a fixed point with fading frozen.

use crate::analytic::sinc_norm;
use crate::config::SystemConfig;
use crate::simkernel::Deployment;

/// Per-link power-control outcome.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PcDecision {
    pub active: bool,
    /// Transmit power in watts; zero when inactive.
    pub power_w: f64,
}

impl PcDecision {
    pub const OFF: PcDecision = PcDecision {
        active: false,
        power_w: 0.0,
    };
}

/// Sum-rate-optimal transmit probability
/// `P_tx* = min(2 sinc(2/alpha) / (pi q lambda beta^(2/alpha) R_D^2), 1)`.
///
/// Equals 1 exactly when `beta <= beta_tilde` (see [`beta_tilde`]).
///
/// ```
/// use d2d_underlay::powerctl::optimal_tx_probability;
/// let p = optimal_tx_probability(0.5, 5e-5, 100.0, 4.0, 50.0);
/// assert!((p - 0.6484).abs() < 1e-4);
/// assert_eq!(optimal_tx_probability(0.5, 5e-5, 1e-6, 4.0, 50.0), 1.0);
/// ```
pub fn optimal_tx_probability(q: f64, lambda: f64, beta: f64, alpha: f64, r_d: f64) -> f64 {
    assert!(alpha > 2.0 && beta > 0.0 && r_d > 0.0);
    let raw = 2.0 * sinc_norm(2.0 / alpha)
        / (std::f64::consts::PI * q * lambda * beta.powf(2.0 / alpha) * r_d * r_d);
    raw.min(1.0)
}

/// Threshold `beta_tilde = (2 sinc(2/alpha) / (pi q lambda R_D^2))^(alpha/2)`
/// below which every link transmits (`P_tx* = 1`). Infinite for an empty
/// deployment. Scales as `(q lambda)^(-alpha/2)`.
///
/// ```
/// use d2d_underlay::powerctl::{beta_tilde, dppc_threshold, optimal_tx_probability};
///
/// // one group at density 5e-5: below the knee everyone transmits
/// let knee = beta_tilde(5e-5, 4.0, 50.0);
/// assert!((knee - 10.51).abs() < 0.01);
/// assert_eq!(optimal_tx_probability(1.0, 5e-5, 0.5 * knee, 4.0, 50.0), 1.0);
///
/// // above it the gate closes gradually
/// let ptx = optimal_tx_probability(1.0, 5e-5, 4.0 * knee, 4.0, 50.0);
/// assert!(ptx < 1.0 && ptx > 0.0);
/// let gamma = dppc_threshold(ptx, 4.0, 50.0);
/// assert!(gamma > 0.0);
/// ```
pub fn beta_tilde(q_lambda: f64, alpha: f64, r_d: f64) -> f64 {
    assert!(alpha > 2.0 && q_lambda >= 0.0 && r_d > 0.0);
    if q_lambda == 0.0 {
        return f64::INFINITY;
    }
    (2.0 * sinc_norm(2.0 / alpha) / (std::f64::consts::PI * q_lambda * r_d * r_d))
        .powf(alpha / 2.0)
}

/// Gate threshold achieving a target transmit probability:
/// `Gamma_min* = -ln(P_tx*) * (2+alpha)/2 * R_D^-alpha`, the inverse of
/// `P_tx = exp(-Gamma_min E[d^alpha])` with `E[d^alpha] = 2 R_D^alpha/(2+alpha)`.
///
/// ```
/// use d2d_underlay::powerctl::dppc_threshold;
/// assert_eq!(dppc_threshold(1.0, 4.0, 50.0), 0.0);
/// let g = dppc_threshold(0.5, 4.0, 50.0);
/// assert!((g - 3.3271e-7).abs() < 1e-11);
/// // round trip through the mean-distance form
/// let e_d4 = 2.0 * 50f64.powi(4) / 6.0;
/// assert!(((-g * e_d4).exp() - 0.5).abs() < 1e-12);
/// ```
pub fn dppc_threshold(ptx_star: f64, alpha: f64, r_d: f64) -> f64 {
    assert!(ptx_star > 0.0 && ptx_star <= 1.0);
    -ptx_star.ln() * (2.0 + alpha) / 2.0 * r_d.powf(-alpha)
}

/// DPPC decision: active iff the channel quality clears `gamma_min` and the
/// link is within D2D range; power inverts the path loss with margin.
pub fn dppc_decide(fading: f64, d_kk: f64, gamma_min: f64, cfg: &SystemConfig) -> PcDecision {
    assert!(d_kk > 0.0);
    let alpha = cfg.pathloss_exponent;
    let active = fading * d_kk.powf(-alpha) >= gamma_min && d_kk <= cfg.d2d_max_range_m;
    if !active {
        return PcDecision::OFF;
    }
    let power = cfg.rho_rx() * d_kk.powf(alpha) * (1.0 + cfg.estimation_margin);
    PcDecision {
        active: true,
        power_w: power.min(cfg.d2d_max_power_w),
    }
}

/// EDPPC decision: fixed gate `G_min`; power `min(U d_kk^a, V d_0k^a)` with
/// `U = rho_rx (1+eps)`, `V = mu U`, capped at `P_max_D`. The second term lets
/// cell-edge links (large `d_0k`) spend more power while protecting the eNB.
pub fn edppc_decide(fading: f64, d_kk: f64, d_0k: f64, cfg: &SystemConfig) -> PcDecision {
    assert!(d_kk > 0.0 && d_0k > 0.0);
    let alpha = cfg.pathloss_exponent;
    let active =
        fading * d_kk.powf(-alpha) >= cfg.edppc_gate && d_kk <= cfg.d2d_max_range_m;
    if !active {
        return PcDecision::OFF;
    }
    let u = cfg.rho_rx() * (1.0 + cfg.estimation_margin);
    let v = cfg.edppc_mu * u;
    let power = (u * d_kk.powf(alpha)).min(v * d_0k.powf(alpha));
    PcDecision {
        active: true,
        power_w: power.min(cfg.d2d_max_power_w),
    }
}

/// Always-on baseline at `P_max_D`.
pub fn maxpower_decide(cfg: &SystemConfig) -> PcDecision {
    PcDecision {
        active: true,
        power_w: cfg.d2d_max_power_w,
    }
}

/// Exponent of the distance-decaying SDDPC target,
/// `upsilon = log10(beta_min/beta_max) / log10(R_D/R_min_D)` (non-positive).
pub fn sddpc_upsilon(cfg: &SystemConfig) -> f64 {
    (cfg.sddpc_beta_min / cfg.sddpc_beta_max).log10()
        / (cfg.d2d_max_range_m / cfg.d2d_min_range_m).log10()
}

/// Target SINR for a link of length `d_kk`: `beta_max` up to `R_min_D`,
/// `beta_max (d/R_min_D)^upsilon` between, `beta_min` beyond `R_D`;
/// continuous at both breakpoints.
///
/// ```
/// use d2d_underlay::config::SystemConfig;
/// use d2d_underlay::powerctl::sddpc_target;
/// let cfg = SystemConfig {
///     sddpc_beta_max: 10.0,
///     sddpc_beta_min: 1.0,
///     ..SystemConfig::default()
/// };
/// assert_eq!(sddpc_target(5.0, &cfg), 10.0);
/// assert!((sddpc_target(25.0, &cfg) - 2.0).abs() < 1e-12); // upsilon = -1
/// assert!((sddpc_target(50.0, &cfg) - 1.0).abs() < 1e-12);
/// ```
pub fn sddpc_target(d_kk: f64, cfg: &SystemConfig) -> f64 {
    assert!(d_kk > 0.0);
    if d_kk <= cfg.d2d_min_range_m {
        return cfg.sddpc_beta_max;
    }
    if d_kk >= cfg.d2d_max_range_m {
        return cfg.sddpc_beta_min;
    }
    cfg.sddpc_beta_max * (d_kk / cfg.d2d_min_range_m).powf(sddpc_upsilon(cfg))
}

/// Outcome of one SDDPC group run.
#[derive(Debug, Clone)]
pub struct SddpcState {
    /// Final per-link powers, aligned with the group's link order.
    pub powers_w: Vec<f64>,
    /// Per-link target SINRs (linear).
    pub targets: Vec<f64>,
    /// Synchronous update rounds executed.
    pub iterations: usize,
    /// Number of updates each link performed (for iteration statistics).
    pub link_updates: Vec<usize>,
    /// True when every link ended satisfied or power-capped before the
    /// round cap.
    pub converged: bool,
}

/// Runs SDDPC on one allocation group of `dep` sharing CUE `cue_index`.
///
/// Positions and fading stay frozen (one link-maintenance episode). Each
/// round, every unsatisfied link applies
/// `p <- clamp(p * (target/SINR)^eta)` with `eta = (1 - upsilon)^-1`,
/// synchronously against the previous round's powers. A link is satisfied
/// once `SINR >= target * (1 - sddpc_tol)`; links at `P_max_D` stop updating.
/// Powers never leave `[P_min_D, P_max_D]` and never decrease while
/// unsatisfied, so the run terminates.
pub fn sddpc_run(
    dep: &Deployment,
    group_links: &[usize],
    cue_index: usize,
    cfg: &SystemConfig,
) -> SddpcState {
    let n = group_links.len();
    let alpha = cfg.pathloss_exponent;
    let eta = 1.0 / (1.0 - sddpc_upsilon(cfg));
    let noise = cfg.effective_noise_w();

    let targets: Vec<f64> = group_links
        .iter()
        .map(|&k| sddpc_target(dep.d_kk(k), cfg))
        .collect();
    // direct-channel qualities and static external interference (CUE + noise)
    let direct: Vec<f64> = group_links
        .iter()
        .map(|&k| dep.h_direct[k] * dep.d_kk(k).powf(-alpha))
        .collect();
    let ext: Vec<f64> = group_links
        .iter()
        .map(|&k| {
            cfg.cue_tx_power_w
                * dep.h_cue_rx[k][cue_index]
                * dep.d_cue_rx(k, cue_index).powf(-alpha)
                + noise
        })
        .collect();
    // lateral gains within the group, row = receiver, column = transmitter
    let lateral: Vec<Vec<f64>> = group_links
        .iter()
        .map(|&k| {
            group_links
                .iter()
                .map(|&l| {
                    if l == k {
                        0.0
                    } else {
                        dep.h_lateral[k][l] * dep.d_lateral(k, l).powf(-alpha)
                    }
                })
                .collect()
        })
        .collect();

    let p_init = (cfg.rho_rx()
        * cfg.d2d_min_range_m.powf(alpha)
        * (1.0 + cfg.estimation_margin))
        .clamp(cfg.d2d_min_power_w, cfg.d2d_max_power_w);
    let mut powers = vec![p_init; n];
    let mut link_updates = vec![0usize; n];
    let mut iterations = 0usize;
    let mut converged = false;

    for _ in 0..cfg.sddpc_max_iters {
        let sinr: Vec<f64> = (0..n)
            .map(|i| {
                let interference: f64 = lateral[i]
                    .iter()
                    .zip(&powers)
                    .map(|(g, p)| g * p)
                    .sum::<f64>()
                    + ext[i];
                powers[i] * direct[i] / interference
            })
            .collect();
        let unsat: Vec<bool> = (0..n)
            .map(|i| {
                sinr[i] < targets[i] * (1.0 - cfg.sddpc_tol)
                    && powers[i] < cfg.d2d_max_power_w
            })
            .collect();
        if !unsat.iter().any(|&u| u) {
            converged = true;
            break;
        }
        iterations += 1;
        for i in 0..n {
            if unsat[i] {
                let next = powers[i] * (targets[i] / sinr[i]).powf(eta);
                powers[i] = next.clamp(cfg.d2d_min_power_w, cfg.d2d_max_power_w);
                link_updates[i] += 1;
            }
        }
    }

    SddpcState {
        powers_w: powers,
        targets,
        iterations,
        link_updates,
        converged,
    }
}
