//! Scalar kernels: inverse Gaussian tail, SINR, channel dispersion and the
//! normal approximation of the finite-blocklength maximum rate.

use std::f64::consts::{LOG2_E, PI, SQRT_2};

use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::scenario::{NetworkScenario, RateTuple};

/// `(log2 e)^2 / 2`, the supremum of the dispersion.
pub const DISPERSION_LIMIT: f64 = LOG2_E * LOG2_E / 2.0;

/// Standard normal complementary CDF, `Q(x) = P(Z > x)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * erfc(x / SQRT_2)
}

// Coefficients of Acklam's rational approximation to the normal quantile.
const A: [f64; 6] = [
    -3.969_683_028_665_376e1,
    2.209_460_984_245_205e2,
    -2.759_285_104_469_687e2,
    1.383_577_518_672_69e2,
    -3.066_479_806_614_716e1,
    2.506_628_277_459_239,
];
const B: [f64; 5] = [
    -5.447_609_879_822_406e1,
    1.615_858_368_580_409e2,
    -1.556_989_798_598_866e2,
    6.680_131_188_771_972e1,
    -1.328_068_155_288_572e1,
];
const C: [f64; 6] = [
    -7.784_894_002_430_293e-3,
    -3.223_964_580_411_365e-1,
    -2.400_758_277_161_838,
    -2.549_732_539_343_734,
    4.374_664_141_464_968,
    2.938_163_982_698_783,
];
const D: [f64; 4] = [
    7.784_695_709_041_462e-3,
    3.224_671_290_700_398e-1,
    2.445_134_137_142_996,
    3.754_408_661_907_416,
];
const P_LOW: f64 = 0.024_25;

/// Lower-tail normal quantile `Φ^{-1}(p)`, rational initializer only.
fn quantile_initial(p: f64) -> f64 {
    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -quantile_initial(1.0 - p)
    }
}

/// Inverse of the standard normal complementary CDF: returns `x` with `Q(x) = p`.
///
/// A rational initializer is polished by two Halley steps against `erfc`,
/// which brings the absolute error well below 1e-10 over the open unit interval.
pub fn inverse_q(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(format!(
            "inverse_q needs a probability in (0, 1), got {p}"
        )));
    }
    if p > 0.5 {
        return inverse_q(1.0 - p).map(|x| -x);
    }
    // Solve Q(x) = p for x >= 0, i.e. Φ(-x) = p.
    let mut z = quantile_initial(p);
    for _ in 0..2 {
        let e = 0.5 * erfc(-z / SQRT_2) - p;
        let u = e * (2.0 * PI).sqrt() * (z * z / 2.0).exp();
        z -= u / (1.0 + z * u / 2.0);
    }
    Ok(-z)
}

/// Signal-to-interference-plus-noise ratio of pair `n` under power tuple `s`,
/// treating interference as noise.
pub fn sinr(scenario: &NetworkScenario, s: &[f64], n: usize) -> f64 {
    let signal = scenario.gain(n, n) * s[n];
    if signal == 0.0 {
        return 0.0;
    }
    let interference: f64 = (0..scenario.n_pairs())
        .filter(|&m| m != n)
        .map(|m| scenario.gain(m, n) * s[m])
        .sum();
    signal / (scenario.noise(n) + interference)
}

/// Channel dispersion `V(γ) = (log2² e / 2)(1 − 1/(1+γ)²)`.
pub fn dispersion(gamma: f64) -> f64 {
    let d = 1.0 + gamma;
    DISPERSION_LIMIT * (1.0 - 1.0 / (d * d))
}

/// Maximum rate with a precomputed `Q^{-1}(ε)`; clamped below at zero.
pub fn max_rate_with_qinv(gamma: f64, blocklength: u64, q_inv: f64) -> f64 {
    if gamma <= 0.0 {
        return 0.0;
    }
    let capacity = 0.5 * (1.0 + gamma).log2();
    let penalty = (dispersion(gamma) / blocklength as f64).sqrt() * q_inv;
    (capacity - penalty).max(0.0)
}

/// Normal-approximation maximum rate in bits per channel use, clamped at zero.
pub fn max_rate(gamma: f64, blocklength: u64, eps: f64) -> Result<f64> {
    if !(gamma >= 0.0) {
        return Err(Error::domain(format!("SINR must be non-negative, got {gamma}")));
    }
    if blocklength == 0 {
        return Err(Error::domain("blocklength must be at least 1"));
    }
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::domain(format!(
            "error probability must lie in (0, 0.5), got {eps}"
        )));
    }
    Ok(max_rate_with_qinv(gamma, blocklength, inverse_q(eps)?))
}

/// Per-pair maximum rates under power tuple `s`.
pub fn max_rate_tuple(scenario: &NetworkScenario, s: &[f64]) -> RateTuple {
    let l = scenario.blocklength();
    let qi = scenario.q_inv();
    (0..scenario.n_pairs())
        .map(|n| max_rate_with_qinv(sinr(scenario, s, n), l, qi))
        .collect::<Vec<_>>()
        .into()
}

/// Rate of pair `n` at its largest power with every other transmitter silent.
pub fn interference_free_rate(scenario: &NetworkScenario, n: usize) -> f64 {
    let gamma = scenario.gain(n, n) * scenario.max_power(n) / scenario.noise(n);
    max_rate_with_qinv(gamma, scenario.blocklength(), scenario.q_inv())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Independent high-precision Q: Taylor series of erf near the origin and
    /// a Lentz continued fraction for the tail.
    fn q_reference(x: f64) -> f64 {
        if x < 0.0 {
            return 1.0 - q_reference(-x);
        }
        if x < 3.0 {
            // Q(x) = 1/2 - φ-series: ∫0^x φ = φ(x) Σ x^(2k+1)/(1·3·…·(2k+1))
            let phi = (-x * x / 2.0).exp() / (2.0 * PI).sqrt();
            let mut term = x;
            let mut sum = x;
            let mut k = 1.0;
            while term.abs() > 1e-20 * sum.abs().max(1e-300) {
                term *= x * x / (2.0 * k + 1.0);
                sum += term;
                k += 1.0;
            }
            0.5 - phi * sum
        } else {
            // Q(x) = φ(x) / (x + 1/(x + 2/(x + 3/(x + ...))))
            let phi = (-x * x / 2.0).exp() / (2.0 * PI).sqrt();
            let mut f = x;
            let tiny = 1e-300;
            let mut c = f;
            let mut d = 0.0;
            for k in 1..500 {
                let a = k as f64;
                d = x + a * d;
                if d.abs() < tiny {
                    d = tiny;
                }
                c = x + a / c;
                if c.abs() < tiny {
                    c = tiny;
                }
                d = 1.0 / d;
                let delta = c * d;
                f *= delta;
                if (delta - 1.0).abs() < 1e-16 {
                    break;
                }
            }
            phi / f
        }
    }

    fn bisect_inverse(p: f64) -> f64 {
        let (mut lo, mut hi) = (-40.0, 40.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if q_reference(mid) > p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn reference_q_is_sane() {
        assert!((q_reference(0.0) - 0.5).abs() < 1e-15);
        assert!((q_reference(1.0) - 0.158_655_253_931_457).abs() < 1e-14);
        assert!((q_reference(3.5) - 2.326_290_790_355_25e-4).abs() < 1e-16);
    }

    #[test]
    fn inverse_q_examples() {
        assert_eq!(inverse_q(0.5).unwrap(), 0.0);
        // Frozen from the bisection oracle above.
        let x = inverse_q(0.001).unwrap();
        assert!((x - bisect_inverse(0.001)).abs() < 1e-10);
        assert!((x - 3.090_232_306_167_813).abs() < 1e-10);
        let y = inverse_q(0.158_655).unwrap();
        assert!((y - bisect_inverse(0.158_655)).abs() < 1e-10);
        assert!((y - 1.0).abs() < 1e-5);
    }

    #[test]
    fn inverse_q_domain() {
        for p in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(matches!(inverse_q(p), Err(Error::Domain(_))));
        }
    }

    #[test]
    fn inverse_q_grid_accuracy() {
        let mut p = 1e-12;
        while p < 1.0 {
            let x = inverse_q(p).unwrap();
            let err = (q_reference(x) - p).abs();
            assert!(err <= 1e-10, "p={p} x={x} err={err}");
            assert!((x - bisect_inverse(p)).abs() < 1e-8 * x.abs().max(1.0), "p={p}");
            p *= 1.7;
        }
    }

    proptest! {
        #[test]
        fn inverse_q_round_trip(p in 1e-9f64..(1.0 - 1e-9)) {
            let x = inverse_q(p).unwrap();
            prop_assert!((q_reference(x) - p).abs() <= 1e-10);
            let y = inverse_q(1.0 - p).unwrap();
            prop_assert!((x + y).abs() < 1e-7);
        }

        #[test]
        fn dispersion_in_range(g in 0.0f64..1e6) {
            let v = dispersion(g);
            prop_assert!(v >= 0.0 && v < DISPERSION_LIMIT);
        }

        // Beyond ~1e8 the bracket rounds to 1 and V saturates at the limit.
        #[test]
        fn dispersion_never_exceeds_limit(g in 0.0f64..1e300) {
            prop_assert!(dispersion(g) <= DISPERSION_LIMIT);
        }
    }

    #[test]
    fn dispersion_examples() {
        assert_eq!(dispersion(0.0), 0.0);
        assert!((DISPERSION_LIMIT - 1.040_68).abs() < 1e-5);
        assert!((dispersion(3.0) - 0.9375 * DISPERSION_LIMIT).abs() < 1e-15);
        assert!((dispersion(3.0) - 0.975_64).abs() < 1e-5);
        assert!((dispersion(1e12) - DISPERSION_LIMIT).abs() < 1e-10);
    }

    /// Evaluates the rate formula with the bisection inverse as an oracle.
    fn rate_oracle(gamma: f64, l: u64, eps: f64) -> f64 {
        let v = LOG2_E * LOG2_E / 2.0 * (1.0 - 1.0 / ((1.0 + gamma) * (1.0 + gamma)));
        (0.5 * (1.0 + gamma).log2() - (v / l as f64).sqrt() * bisect_inverse(eps)).max(0.0)
    }

    #[test]
    fn max_rate_examples() {
        assert_eq!(max_rate(0.0, 100, 1e-3).unwrap(), 0.0);
        assert_eq!(max_rate(0.0, 7, 0.2).unwrap(), 0.0);
        let r30 = max_rate(30.0, 100, 1e-3).unwrap();
        assert!((r30 - rate_oracle(30.0, 100, 1e-3)).abs() < 1e-9);
        assert!((r30 - 2.162).abs() < 5e-4);
        let r3 = max_rate(3.0, 100, 1e-3).unwrap();
        assert!((r3 - rate_oracle(3.0, 100, 1e-3)).abs() < 1e-9);
        assert!((r3 - 0.695).abs() < 5e-4);
    }

    #[test]
    fn max_rate_clamps_at_low_sinr() {
        // Unclamped value is negative here.
        assert_eq!(max_rate(1e-3, 100, 1e-3).unwrap(), 0.0);
        assert!(max_rate(-1.0, 100, 1e-3).is_err());
        assert!(max_rate(1.0, 0, 1e-3).is_err());
        assert!(max_rate(1.0, 100, 0.7).is_err());
    }

    #[test]
    fn max_rate_monotone_in_gamma_and_blocklength() {
        let ls = [50u64, 100, 200, 400];
        let mut prev_l = vec![0.0; 400];
        for &l in &ls {
            let mut prev = 0.0;
            for (i, slot) in prev_l.iter_mut().enumerate() {
                let g = 0.05 * i as f64 + 1e-3 * (i * i) as f64;
                let r = max_rate(g, l, 1e-3).unwrap();
                assert!(r >= prev, "gamma monotonicity at {g}");
                assert!(r >= *slot, "blocklength monotonicity at {g}, L={l}");
                prev = r;
                *slot = r;
            }
        }
    }

    fn fig2() -> NetworkScenario {
        NetworkScenario::new(
            vec![vec![1.0, 0.3], vec![0.3, 1.0]],
            vec![0.1, 0.1],
            vec![vec![0.0, 3.0], vec![0.0, 3.0]],
            100,
            1e-3,
        )
        .unwrap()
    }

    #[test]
    fn sinr_examples() {
        let s = fig2();
        assert!((sinr(&s, &[3.0, 0.0], 0) - 30.0).abs() < 1e-12);
        assert!((sinr(&s, &[3.0, 3.0], 0) - 3.0).abs() < 1e-12);
        assert_eq!(sinr(&s, &[0.0, 3.0], 0), 0.0);
        // Interferers silent: exactly h_nn s / W_n.
        assert_eq!(sinr(&s, &[0.0, 3.0], 1), 1.0 * 3.0 / 0.1);
    }

    #[test]
    fn max_rate_tuple_examples() {
        let s = fig2();
        let a = max_rate_tuple(&s, &[3.0, 0.0]);
        assert!((a[0] - rate_oracle(30.0, 100, 1e-3)).abs() < 1e-9);
        assert_eq!(a[1], 0.0);
        assert_eq!(max_rate_tuple(&s, &[0.0, 0.0]).0, vec![0.0, 0.0]);
        let b = max_rate_tuple(&s, &[3.0, 3.0]);
        assert!((b[0] - rate_oracle(3.0, 100, 1e-3)).abs() < 1e-9);
        assert!((b[0] - b[1]).abs() < 1e-15);
        assert!((interference_free_rate(&s, 0) - a[0]).abs() < 1e-15);
    }
}
