//! System configuration, unit conversions, and validation.
//!
//! All internal computation uses SI linear units (meters, watts, linear SINR
//! ratios). Decibel values appear only at the boundary, through
//! [`db_to_linear`] / [`linear_to_db`] / [`dbm_to_watts`].

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

/// Every physical and experiment parameter of the model.
///
/// Defaults follow the usual evaluation setup for this model family:
/// a 500 m cell, D2D range 5..50 m, path-loss exponent 4, CUE power 100 mW,
/// D2D power 0.2 uW..0.1 mW, noise -112.4 dBm, estimation margin 0.5.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    /// Cell radius `R_C` in meters.
    pub cell_radius_m: f64,
    /// Maximum D2D link length `R_D` in meters.
    pub d2d_max_range_m: f64,
    /// Minimum D2D link length `R_min_D` in meters.
    pub d2d_min_range_m: f64,
    /// PPP density of D2D transmitters, per square meter.
    pub density_per_m2: f64,
    /// Path-loss exponent `alpha` (> 2).
    pub pathloss_exponent: f64,
    /// Number of CUEs `M` (one shared resource block per CUE).
    pub num_cues: usize,
    /// CUE transmit power `P_max_C` in watts.
    pub cue_tx_power_w: f64,
    /// Maximum D2D transmit power `P_max_D` in watts.
    pub d2d_max_power_w: f64,
    /// Minimum D2D transmit power `P_min_D` in watts.
    pub d2d_min_power_w: f64,
    /// Thermal noise power `sigma^2` in watts.
    pub noise_power_w: f64,
    /// Channel-estimation margin `epsilon` in [0, 1].
    pub estimation_margin: f64,
    /// EDPPC eNB-protection weight `mu` (> 0).
    pub edppc_mu: f64,
    /// EDPPC activation gate `G_min` on the channel quality `|h|^2 d^-alpha`
    /// (linear).
    pub edppc_gate: f64,
    /// SDDPC target SINR at `d <= R_min_D` (linear).
    pub sddpc_beta_max: f64,
    /// SDDPC target SINR at `d >= R_D` (linear).
    pub sddpc_beta_min: f64,
    /// Safety cap on SDDPC update rounds.
    pub sddpc_max_iters: usize,
    /// SDDPC satisfaction tolerance: a link counts as converged once
    /// `SINR >= target * (1 - sddpc_tol)`. The multiplicative update
    /// approaches its fixed point from below, so exact satisfaction is
    /// asymptotic and a tolerance is required for termination.
    pub sddpc_tol: f64,
    /// Width of the out-of-cell deployment annulus beyond `R_C`, meters.
    pub outer_margin_m: f64,
    /// Treat `sigma^2` as zero (pure SIR), matching the closed forms.
    pub interference_limited: bool,
    /// Average D2D coverage over all in-cell links instead of active ones.
    pub coverage_all_links: bool,
    /// Monte Carlo trials per estimate.
    pub num_trials: usize,
    /// Base RNG seed; trial `t` uses stream `t` of this seed.
    pub rng_seed: u64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            cell_radius_m: 500.0,
            d2d_max_range_m: 50.0,
            d2d_min_range_m: 5.0,
            density_per_m2: 5e-5,
            pathloss_exponent: 4.0,
            num_cues: 2,
            cue_tx_power_w: 0.1,
            d2d_max_power_w: 1e-4,
            d2d_min_power_w: 2e-7,
            noise_power_w: dbm_to_watts(-112.4),
            estimation_margin: 0.5,
            edppc_mu: 5e-4,
            edppc_gate: dbm_to_watts(-40.0), // -40 dBm gate, 1e-7 linear
            sddpc_beta_max: db_to_linear(18.0),
            sddpc_beta_min: db_to_linear(-18.0),
            sddpc_max_iters: 100,
            sddpc_tol: 0.05,
            outer_margin_m: 250.0,
            interference_limited: false,
            coverage_all_links: false,
            num_trials: 1000,
            rng_seed: 42,
        }
    }
}

/// Validation failure, naming the first violated invariant.
#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("config file: {0}")]
    Io(String),
    #[error("config line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unknown config key '{0}'")]
    UnknownKey(String),
}

impl SystemConfig {
    /// Checks every invariant, returning the config unchanged on success.
    ///
    /// ```
    /// use d2d_underlay::config::SystemConfig;
    /// let cfg = SystemConfig::default().validate().unwrap();
    /// assert!((cfg.rho_rx() - 1.6e-11).abs() < 1e-24);
    /// let bad = SystemConfig { pathloss_exponent: 2.0, ..cfg };
    /// assert!(bad.validate().is_err());
    /// ```
    pub fn validate(self) -> Result<Self, ConfigError> {
        let fail = |msg: &str| Err(ConfigError::Invariant(msg.to_string()));
        if !(self.d2d_min_range_m > 0.0) {
            return fail("d2d_min_range_m must be positive");
        }
        if !(self.d2d_min_range_m < self.d2d_max_range_m) {
            return fail("d2d_min_range_m must be below d2d_max_range_m");
        }
        if !(self.d2d_max_range_m <= self.cell_radius_m) {
            return fail("d2d_max_range_m must not exceed cell_radius_m");
        }
        if !(self.density_per_m2 >= 0.0) {
            return fail("density_per_m2 must be non-negative");
        }
        if self.num_cues < 1 {
            return fail("num_cues must be at least 1");
        }
        // alpha = 2 is a genuine singularity: sinc(2/alpha) vanishes and the
        // interference Laplace exponent diverges.
        if !(self.pathloss_exponent > 2.0) {
            return fail("pathloss_exponent must exceed 2");
        }
        if !(self.d2d_min_power_w > 0.0) {
            return fail("d2d_min_power_w must be positive");
        }
        if !(self.d2d_min_power_w <= self.d2d_max_power_w) {
            return fail("d2d_min_power_w must not exceed d2d_max_power_w");
        }
        if !(self.d2d_max_power_w <= self.cue_tx_power_w) {
            return fail("d2d_max_power_w must not exceed cue_tx_power_w");
        }
        if !(self.noise_power_w >= 0.0) {
            return fail("noise_power_w must be non-negative");
        }
        if !(0.0..=1.0).contains(&self.estimation_margin) {
            return fail("estimation_margin must lie in [0, 1]");
        }
        if !(self.edppc_mu > 0.0) {
            return fail("edppc_mu must be positive");
        }
        if !(self.edppc_gate >= 0.0) {
            return fail("edppc_gate must be non-negative");
        }
        if !(self.sddpc_beta_min <= self.sddpc_beta_max) {
            return fail("sddpc_beta_min must not exceed sddpc_beta_max");
        }
        if !(self.sddpc_beta_min > 0.0) {
            return fail("sddpc_beta_min must be positive");
        }
        if !(self.sddpc_tol >= 0.0 && self.sddpc_tol < 1.0) {
            return fail("sddpc_tol must lie in [0, 1)");
        }
        if self.sddpc_max_iters == 0 {
            return fail("sddpc_max_iters must be at least 1");
        }
        if !(self.outer_margin_m >= 0.0) {
            return fail("outer_margin_m must be non-negative");
        }
        if !(self.rho_rx() > 0.0) {
            return fail("derived rho_rx must be positive");
        }
        Ok(self)
    }

    /// Receiver sensitivity `rho_rx = P_max_D * R_D^-alpha`.
    pub fn rho_rx(&self) -> f64 {
        self.d2d_max_power_w * self.d2d_max_range_m.powf(-self.pathloss_exponent)
    }

    /// Mean number of in-cell D2D links, `E[K] = pi * lambda * R_C^2`.
    pub fn expected_links(&self) -> f64 {
        std::f64::consts::PI * self.density_per_m2 * self.cell_radius_m.powi(2)
    }

    /// Mean group size `E[K'] = E[K] / M`.
    pub fn expected_group_links(&self) -> f64 {
        self.expected_links() / self.num_cues as f64
    }

    /// Allocation probability `q = 1/M`.
    pub fn q(&self) -> f64 {
        1.0 / self.num_cues as f64
    }

    /// Noise power actually used in SINR denominators.
    pub fn effective_noise_w(&self) -> f64 {
        if self.interference_limited {
            0.0
        } else {
            self.noise_power_w
        }
    }

    /// Parses a plain-text `key = value` config file. Keys mirror field
    /// names; `#` starts a comment; omitted keys keep their defaults.
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| ConfigError::Io(e.to_string()))?;
        Self::from_str_keys(&text)
    }

    /// Same as [`SystemConfig::from_file`] but on an in-memory string.
    ///
    /// ```
    /// use d2d_underlay::config::SystemConfig;
    /// let cfg = SystemConfig::from_str_keys("density_per_m2 = 2e-5\nnum_cues = 3\n").unwrap();
    /// assert_eq!(cfg.num_cues, 3);
    /// ```
    pub fn from_str_keys(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = SystemConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(ConfigError::Parse {
                line: i + 1,
                msg: "expected 'key = value'".to_string(),
            })?;
            cfg.set_key(key.trim(), value.trim()).map_err(|e| match e {
                ConfigError::UnknownKey(k) => ConfigError::UnknownKey(k),
                other => ConfigError::Parse {
                    line: i + 1,
                    msg: other.to_string(),
                },
            })?;
        }
        Ok(cfg)
    }

    fn set_key(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        fn num(v: &str) -> Result<f64, ConfigError> {
            v.parse()
                .map_err(|_| ConfigError::Invariant(format!("bad number '{v}'")))
        }
        fn int(v: &str) -> Result<u64, ConfigError> {
            v.parse()
                .map_err(|_| ConfigError::Invariant(format!("bad integer '{v}'")))
        }
        fn flag(v: &str) -> Result<bool, ConfigError> {
            match v {
                "true" | "1" | "yes" => Ok(true),
                "false" | "0" | "no" => Ok(false),
                _ => Err(ConfigError::Invariant(format!("bad flag '{v}'"))),
            }
        }
        match key {
            "cell_radius_m" => self.cell_radius_m = num(value)?,
            "d2d_max_range_m" => self.d2d_max_range_m = num(value)?,
            "d2d_min_range_m" => self.d2d_min_range_m = num(value)?,
            "density_per_m2" => self.density_per_m2 = num(value)?,
            "pathloss_exponent" => self.pathloss_exponent = num(value)?,
            "num_cues" => self.num_cues = int(value)? as usize,
            "cue_tx_power_w" => self.cue_tx_power_w = num(value)?,
            "d2d_max_power_w" => self.d2d_max_power_w = num(value)?,
            "d2d_min_power_w" => self.d2d_min_power_w = num(value)?,
            "noise_power_w" => self.noise_power_w = num(value)?,
            "estimation_margin" => self.estimation_margin = num(value)?,
            "edppc_mu" => self.edppc_mu = num(value)?,
            "edppc_gate" => self.edppc_gate = num(value)?,
            "sddpc_beta_max" => self.sddpc_beta_max = num(value)?,
            "sddpc_beta_min" => self.sddpc_beta_min = num(value)?,
            "sddpc_max_iters" => self.sddpc_max_iters = int(value)? as usize,
            "sddpc_tol" => self.sddpc_tol = num(value)?,
            "outer_margin_m" => self.outer_margin_m = num(value)?,
            "interference_limited" => self.interference_limited = flag(value)?,
            "coverage_all_links" => self.coverage_all_links = flag(value)?,
            "num_trials" => self.num_trials = int(value)? as usize,
            "rng_seed" => self.rng_seed = int(value)?,
            other => return Err(ConfigError::UnknownKey(other.to_string())),
        }
        Ok(())
    }

    /// Renders the config back to `key = value` text (round-trips through
    /// [`SystemConfig::from_str_keys`]).
    pub fn to_key_value_string(&self) -> String {
        let mut pairs: BTreeMap<&str, String> = BTreeMap::new();
        pairs.insert("cell_radius_m", format!("{}", self.cell_radius_m));
        pairs.insert("d2d_max_range_m", format!("{}", self.d2d_max_range_m));
        pairs.insert("d2d_min_range_m", format!("{}", self.d2d_min_range_m));
        pairs.insert("density_per_m2", format!("{:e}", self.density_per_m2));
        pairs.insert("pathloss_exponent", format!("{}", self.pathloss_exponent));
        pairs.insert("num_cues", format!("{}", self.num_cues));
        pairs.insert("cue_tx_power_w", format!("{:e}", self.cue_tx_power_w));
        pairs.insert("d2d_max_power_w", format!("{:e}", self.d2d_max_power_w));
        pairs.insert("d2d_min_power_w", format!("{:e}", self.d2d_min_power_w));
        pairs.insert("noise_power_w", format!("{:e}", self.noise_power_w));
        pairs.insert("estimation_margin", format!("{}", self.estimation_margin));
        pairs.insert("edppc_mu", format!("{:e}", self.edppc_mu));
        pairs.insert("edppc_gate", format!("{:e}", self.edppc_gate));
        pairs.insert("sddpc_beta_max", format!("{}", self.sddpc_beta_max));
        pairs.insert("sddpc_beta_min", format!("{}", self.sddpc_beta_min));
        pairs.insert("sddpc_max_iters", format!("{}", self.sddpc_max_iters));
        pairs.insert("sddpc_tol", format!("{}", self.sddpc_tol));
        pairs.insert("outer_margin_m", format!("{}", self.outer_margin_m));
        pairs.insert(
            "interference_limited",
            format!("{}", self.interference_limited),
        );
        pairs.insert("coverage_all_links", format!("{}", self.coverage_all_links));
        pairs.insert("num_trials", format!("{}", self.num_trials));
        pairs.insert("rng_seed", format!("{}", self.rng_seed));
        let mut out = String::new();
        for (k, v) in pairs {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }
}

/// `10^(x/10)`.
///
/// ```
/// use d2d_underlay::config::db_to_linear;
/// assert_eq!(db_to_linear(0.0), 1.0);
/// assert_eq!(db_to_linear(10.0), 10.0);
/// ```
pub fn db_to_linear(x_db: f64) -> f64 {
    10f64.powf(x_db / 10.0)
}

/// `10 * log10(x)`; requires `x > 0`.
pub fn linear_to_db(x: f64) -> f64 {
    assert!(x > 0.0, "linear_to_db requires a positive argument");
    10.0 * x.log10()
}

/// dBm referenced to 1 mW, returned in watts.
///
/// ```
/// use d2d_underlay::config::dbm_to_watts;
/// assert!((dbm_to_watts(-112.4) - 5.7544e-15).abs() < 1e-18);
/// assert_eq!(dbm_to_watts(0.0), 1e-3);
/// ```
pub fn dbm_to_watts(x_dbm: f64) -> f64 {
    db_to_linear(x_dbm) * 1e-3
}
