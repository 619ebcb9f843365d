//! Fading, path loss, and SINR assembly.
//!
//! Channels are flat Rayleigh block-fading: every power gain `|h|^2` is a
//! unit-mean exponential draw, redrawn independently per Monte Carlo trial,
//! and path loss is the unbounded power law `d^-alpha`. Distances below
//! [`MIN_DISTANCE_M`] are clamped; point processes can place an interferer
//! arbitrarily close to a receiver and the far-field model has no answer
//! there.

use rand::Rng;

use crate::geometry::RngStream;

/// Minimum distance fed into `d^-alpha`, meters.
pub const MIN_DISTANCE_M: f64 = 1e-3;

/// One channel: fading power `|h|^2`, distance, and path-loss exponent.
#[derive(Debug, Clone, Copy)]
pub struct LinkGain {
    /// `|h|^2`, unit-mean exponential.
    pub fading_power: f64,
    pub distance_m: f64,
    pub pathloss_exponent: f64,
}

impl LinkGain {
    pub fn new(fading_power: f64, distance_m: f64, pathloss_exponent: f64) -> Self {
        assert!(fading_power >= 0.0);
        LinkGain {
            fading_power,
            distance_m: distance_m.max(MIN_DISTANCE_M),
            pathloss_exponent,
        }
    }

    /// `|h|^2 * d^-alpha`, the channel quality the activation gates test.
    pub fn quality(&self) -> f64 {
        self.fading_power * self.distance_m.powf(-self.pathloss_exponent)
    }
}

/// A transmitter seen by some receiver: power times channel.
#[derive(Debug, Clone, Copy)]
pub struct InterferenceTerm {
    pub tx_power_w: f64,
    pub gain: LinkGain,
}

/// Unit-mean exponential fading draw.
pub fn sample_fading(rng: &mut RngStream) -> f64 {
    // inverse cdf; gen() is in [0,1) so the argument stays positive
    -(1.0 - rng.gen::<f64>()).ln()
}

/// Received power `p * |h|^2 * d^-alpha`.
///
/// ```
/// use d2d_underlay::channel::{received_power, LinkGain};
/// let g = LinkGain::new(1.0, 50.0, 4.0);
/// assert!((received_power(1e-4, &g) - 1.6e-11).abs() < 1e-24);
/// ```
pub fn received_power(p_w: f64, g: &LinkGain) -> f64 {
    assert!(p_w >= 0.0);
    p_w * g.quality()
}

/// `SINR = W / (I + N)`: intended received power over summed interference
/// plus noise. Panics if the denominator is zero (no interferers and no
/// noise).
///
/// ```
/// use d2d_underlay::channel::{sinr, InterferenceTerm, LinkGain};
/// let signal = InterferenceTerm {
///     tx_power_w: 1e-4,
///     gain: LinkGain::new(1.0, 30.0, 4.0),
/// };
/// let interferer = InterferenceTerm {
///     tx_power_w: 1e-4,
///     gain: LinkGain::new(0.5, 200.0, 4.0),
/// };
/// let s = sinr(&signal, &[interferer], 5.7544e-15);
/// assert!(s > 1.0);
/// ```
pub fn sinr(signal: &InterferenceTerm, interferers: &[InterferenceTerm], noise_w: f64) -> f64 {
    assert!(noise_w >= 0.0);
    let mut denom = noise_w;
    for term in interferers {
        denom += received_power(term.tx_power_w, &term.gain);
    }
    assert!(denom > 0.0, "SINR denominator must be positive");
    received_power(signal.tx_power_w, &signal.gain) / denom
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::RngStream;

    fn term(p: f64, h: f64, d: f64) -> InterferenceTerm {
        InterferenceTerm {
            tx_power_w: p,
            gain: LinkGain::new(h, d, 4.0),
        }
    }

    #[test]
    fn fading_is_unit_mean_exponential() {
        let mut rng = RngStream::new(2, 0);
        let n = 1_000_000;
        let mut sum = 0.0;
        let mut above_one = 0usize;
        for _ in 0..n {
            let x = sample_fading(&mut rng);
            sum += x;
            if x >= 1.0 {
                above_one += 1;
            }
        }
        let mean = sum / n as f64;
        assert!((mean - 1.0).abs() < 0.005, "mean {mean}");
        // P(X >= 1) = e^-1
        let frac = above_one as f64 / n as f64;
        assert!((frac - (-1.0f64).exp()).abs() < 0.002, "tail {frac}");
    }

    #[test]
    fn received_power_cases() {
        assert_eq!(received_power(1.0, &LinkGain::new(1.0, 1.0, 4.0)), 1.0);
        assert_eq!(received_power(0.0, &LinkGain::new(2.0, 10.0, 4.0)), 0.0);
        let rho = received_power(1e-4, &LinkGain::new(1.0, 50.0, 4.0));
        assert!((rho - 1.6e-11).abs() / 1.6e-11 < 1e-12);
    }

    #[test]
    fn sub_millimeter_distance_clamped() {
        let g = LinkGain::new(1.0, 0.0, 4.0);
        assert_eq!(g.distance_m, MIN_DISTANCE_M);
    }

    #[test]
    fn sinr_symmetry_and_noise_only() {
        let s = term(1e-3, 1.0, 10.0);
        let i = term(1e-3, 1.0, 10.0);
        assert!((sinr(&s, &[i], 0.0) - 1.0).abs() < 1e-12);

        // signal received power 1e-12 W over thermal noise only
        let s = term(1e-12, 1.0, 1.0);
        let v = sinr(&s, &[], 5.7544e-15);
        assert!((v - 173.78).abs() < 0.01, "noise-only SINR {v}");
    }

    #[test]
    fn sinr_scale_invariant_and_monotone() {
        let s = term(1e-3, 0.7, 20.0);
        let ints = [term(1e-4, 1.3, 35.0), term(5e-5, 0.2, 12.0)];
        let base = sinr(&s, &ints, 1e-13);
        let scaled = sinr(
            &term(1e-1, 0.7, 20.0),
            &[term(1e-2, 1.3, 35.0), term(5e-3, 0.2, 12.0)],
            1e-11,
        );
        assert!((base - scaled).abs() / base < 1e-12);

        let stronger = [term(2e-4, 1.3, 35.0), term(5e-5, 0.2, 12.0)];
        assert!(sinr(&s, &stronger, 1e-13) < base);
        assert!(sinr(&s, &ints, 2e-13) < base);
    }

    #[test]
    #[should_panic]
    fn zero_denominator_rejected() {
        let s = term(1e-3, 1.0, 10.0);
        sinr(&s, &[], 0.0);
    }
}
