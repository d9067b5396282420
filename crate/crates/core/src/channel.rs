//! Wireless link math: Rayleigh gains, SINR, Shannon rate and the transmit
//! power needed to sustain a chosen data rate.
//!
//! Every function is generic over [`Scalar`] so the same code runs in `f32`
//! and `f64`. Units are SI throughout: watts, metres, hertz, bits/second.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("distance must be positive, got {0} m")]
    ZeroDistance(f64),
    #[error("channel gain must be positive (deep fade), got {0}")]
    ZeroGain(f64),
    #[error("{what} must be non-negative, got {value}")]
    Negative { what: &'static str, value: f64 },
}

/// Physical-layer constants of one access point / resource block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadioParams<T = f64> {
    /// Bandwidth of the single resource block a user occupies.
    pub bandwidth_hz: T,
    pub noise_w: T,
    pub pathloss_exp: T,
    /// Transmit power of every (interfering) base station.
    pub bs_power_w: T,
}

impl Default for RadioParams<f64> {
    fn default() -> Self {
        Self { bandwidth_hz: 2.0e6, noise_w: 1e-11, pathloss_exp: 4.0, bs_power_w: 0.1 }
    }
}

impl<T: Scalar> RadioParams<T> {
    pub fn cast<U: Scalar>(&self) -> RadioParams<U> {
        RadioParams {
            bandwidth_hz: U::of(self.bandwidth_hz.as_f64()),
            noise_w: U::of(self.noise_w.as_f64()),
            pathloss_exp: U::of(self.pathloss_exp.as_f64()),
            bs_power_w: U::of(self.bs_power_w.as_f64()),
        }
    }

    pub fn is_valid(&self) -> bool {
        let two = T::of(2.0);
        self.bandwidth_hz > T::zero()
            && self.noise_w > T::zero()
            && self.bs_power_w > T::zero()
            && self.pathloss_exp >= two
    }
}

/// One complex Gaussian draw `sqrt(1/2)(t + t'J)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelSample {
    pub h_real: f64,
    pub h_imag: f64,
}

impl ChannelSample {
    pub fn draw<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self { h_real: rng.sample(StandardNormal), h_imag: rng.sample(StandardNormal) }
    }

    /// Magnitude `|H|`; its square is Exp(1) distributed.
    pub fn gain(&self) -> f64 {
        (0.5f64).sqrt() * self.h_real.hypot(self.h_imag)
    }
}

/// Received-power factor `H^2 d^-a`.
pub fn path_gain<T: Scalar>(gain: T, dist_m: T, pathloss_exp: T) -> Result<T, ChannelError> {
    if dist_m <= T::zero() {
        return Err(ChannelError::ZeroDistance(dist_m.as_f64()));
    }
    Ok(gain * gain * dist_m.powf(-pathloss_exp))
}

/// Interference power `sum_i P_i H_i^2 d_i^-a` from a set of `(gain, distance)` links.
pub fn interference_w<T, I>(links: I, params: &RadioParams<T>) -> Result<T, ChannelError>
where
    T: Scalar,
    I: IntoIterator<Item = (T, T)>,
{
    links.into_iter().try_fold(T::zero(), |acc, (gain, dist)| {
        Ok(acc + params.bs_power_w * path_gain(gain, dist, params.pathloss_exp)?)
    })
}

/// `P_tran H^2 d^-a / (N + I)`.
pub fn sinr<T: Scalar>(
    p_tran_w: T,
    gain: T,
    dist_m: T,
    params: &RadioParams<T>,
    interference: T,
) -> Result<T, ChannelError> {
    if p_tran_w < T::zero() {
        return Err(ChannelError::Negative { what: "transmit power", value: p_tran_w.as_f64() });
    }
    let received = p_tran_w * path_gain(gain, dist_m, params.pathloss_exp)?;
    Ok(received / (params.noise_w + interference))
}

/// `B log2(1 + sinr)` in bits/second.
pub fn shannon_rate<T: Scalar>(bandwidth_hz: T, sinr: T) -> T {
    bandwidth_hz * (T::one() + sinr).log2()
}

/// `2^(g/B) - 1`: the SINR needed for rate `g` on bandwidth `B`.
pub fn required_sinr<T: Scalar>(rate_bps: T, bandwidth_hz: T) -> T {
    (rate_bps / bandwidth_hz).exp2() - T::one()
}

/// Transmit power that makes the Shannon rate of the link equal `rate_bps`.
pub fn transmit_power<T: Scalar>(
    rate_bps: T,
    params: &RadioParams<T>,
    gain: T,
    dist_m: T,
    interference: T,
) -> Result<T, ChannelError> {
    if rate_bps < T::zero() {
        return Err(ChannelError::Negative { what: "rate", value: rate_bps.as_f64() });
    }
    if gain <= T::zero() {
        return Err(ChannelError::ZeroGain(gain.as_f64()));
    }
    let rx = path_gain(gain, dist_m, params.pathloss_exp)?;
    Ok((params.noise_w + interference) / rx * required_sinr(rate_bps, params.bandwidth_hz))
}

/// `2^(g e / B)` for a binary selector `e`, written in the linear form
/// `(1 - e) + e 2^(g/B)`.
pub fn selected_rate_factor<T: Scalar>(rate_bps: T, bandwidth_hz: T, selected: bool) -> T {
    let e = if selected { T::one() } else { T::zero() };
    (T::one() - e) + e * (rate_bps / bandwidth_hz).exp2()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn unit_noise() -> RadioParams {
        RadioParams { bandwidth_hz: 1e6, noise_w: 1.0, pathloss_exp: 4.0, bs_power_w: 0.1 }
    }

    fn narrowband() -> RadioParams {
        RadioParams { bandwidth_hz: 1e6, noise_w: 1e-11, pathloss_exp: 4.0, bs_power_w: 0.1 }
    }

    #[test]
    fn sinr_unit_cancellation() {
        assert_eq!(sinr(1.0, 1.0, 1.0, &unit_noise(), 0.0).unwrap(), 1.0);
    }

    #[test]
    fn sinr_ten_metres() {
        let v = sinr(1.0, 1.0, 10.0, &narrowband(), 0.0).unwrap();
        assert!((v - 1e7).abs() / 1e7 < 1e-12, "{v}");
    }

    #[test]
    fn sinr_decreases_with_interference() {
        let p = narrowband();
        let a = sinr(0.5, 0.8, 120.0, &p, 2e-11).unwrap();
        let b = sinr(0.5, 0.8, 120.0, &p, 4e-11).unwrap();
        assert!(b < a);
    }

    #[test]
    fn sinr_rejects_zero_distance() {
        assert_eq!(sinr(1.0, 1.0, 0.0, &narrowband(), 0.0), Err(ChannelError::ZeroDistance(0.0)));
    }

    #[test]
    fn shannon_examples() {
        assert_eq!(shannon_rate(1e6, 0.0), 0.0);
        assert_eq!(shannon_rate(1e6, 1.0), 1e6);
        assert_eq!(shannon_rate(1e6, 3.0), 2e6);
    }

    #[test]
    fn transmit_power_examples() {
        let p = narrowband();
        assert_eq!(transmit_power(0.0, &p, 1.0, 100.0, 0.0).unwrap(), 0.0);
        let w = transmit_power(2e6, &p, 1.0, 100.0, 0.0).unwrap();
        assert!((w - 3e-3).abs() / 3e-3 < 1e-12, "{w}");
        let back = shannon_rate(p.bandwidth_hz, sinr(w, 1.0, 100.0, &p, 0.0).unwrap());
        assert!((back - 2e6).abs() / 2e6 < 1e-9);
    }

    #[test]
    fn transmit_power_rejects_deep_fade() {
        assert!(matches!(transmit_power(2e6, &narrowband(), 0.0, 100.0, 0.0), Err(ChannelError::ZeroGain(_))));
    }

    #[test]
    fn selector_identity_both_branches() {
        for &(g, b) in &[(2e6, 1e6), (8e6, 2e6), (3e6, 1.8e5)] {
            assert_eq!(selected_rate_factor(g, b, false), 1.0);
            assert_eq!(selected_rate_factor(g, b, true), (g / b as f64).exp2());
            assert_eq!(selected_rate_factor(g, b, false), (g * 0.0 / b as f64).exp2());
        }
    }

    #[test]
    fn rayleigh_power_has_unit_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 100_000;
        let mean = (0..n).map(|_| ChannelSample::draw(&mut rng).gain().powi(2)).sum::<f64>() / n as f64;
        assert!((0.98..=1.02).contains(&mean), "{mean}");
    }

    #[test]
    fn f32_matches_f64() {
        let p64 = narrowband();
        let p32: RadioParams<f32> = p64.cast();
        let a = transmit_power(5e6, &p64, 0.7, 180.0, 3e-11).unwrap();
        let b = transmit_power(5e6f32, &p32, 0.7, 180.0, 3e-11).unwrap() as f64;
        assert!((a - b).abs() / a < 1e-5);
    }

    proptest! {
        #[test]
        fn power_increasing_and_convex_in_rate(
            gain in 0.05f64..3.0, dist in 5.0f64..250.0, g in 1e5f64..8e6, step in 1e4f64..5e5,
        ) {
            let p = RadioParams { bandwidth_hz: 2e6, ..narrowband() };
            let f = |r: f64| transmit_power(r, &p, gain, dist, 1e-11).unwrap();
            let (lo, mid, hi) = (f(g), f(g + step), f(g + 2.0 * step));
            prop_assert!(mid > lo);
            prop_assert!(hi - mid >= (mid - lo) * (1.0 - 1e-9));
        }

        #[test]
        fn inversion_round_trip(
            gain in 0.01f64..4.0, dist in 1.0f64..300.0, g in 1e5f64..8e6, i in 0.0f64..1e-9,
        ) {
            let p = RadioParams { bandwidth_hz: 2e6, ..narrowband() };
            let w = transmit_power(g, &p, gain, dist, i).unwrap();
            let back = shannon_rate(p.bandwidth_hz, sinr(w, gain, dist, &p, i).unwrap());
            prop_assert!((back - g).abs() / g < 1e-9);
        }
    }
}
