//! Frequencies on the dual circle and accurate character evaluation.
//!
//! A frequency θ ∈ [0, 1) stands for the character χ_θ(t) = e^{2πiθt} on the
//! integer lattice. All coefficient kernels use the conjugated character
//! e^{-2πiθt}, so `conj_character` is the workhorse here.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::fmt;

/// A point of the dual circle, reduced into [0, 1).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Frequency(f64);

impl Frequency {
    pub fn new(theta: f64) -> Self {
        let mut t = theta.rem_euclid(1.0);
        // rem_euclid can return 1.0 when theta is a tiny negative number.
        if t >= 1.0 {
            t = 0.0;
        }
        Frequency(t)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Grid frequency k/m. Exact for power-of-two m.
    pub fn from_bin(k: usize, m: usize) -> Self {
        Frequency::new(k as f64 / m as f64)
    }

    /// The reflected frequency 1 - θ (conjugate partner for real signals).
    pub fn reflected(self) -> Self {
        Frequency::new(-self.0)
    }

    /// Distance on the circle.
    pub fn circle_distance(self, other: Frequency) -> f64 {
        let d = (self.0 - other.0).rem_euclid(1.0);
        d.min(1.0 - d)
    }
}

impl fmt::Display for Frequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// e^{-2πiθt}, with the phase reduced mod 1 before scaling by 2π.
///
/// The product θ·t is split with an fma so the fractional part is accurate to
/// a few ulp even for |t| ~ 2^20; scaling the reduced phase keeps the
/// sin/cos argument small. Without the reduction the O(|θt|·ε) rounding of
/// the raw angle would dominate every tolerance in this crate.
pub fn conj_character(theta: Frequency, t: i64) -> Complex64 {
    let tf = t as f64;
    let p = theta.0 * tf;
    let p_lo = theta.0.mul_add(tf, -p);
    let angle = TAU * (p.fract() + p_lo);
    let (s, c) = angle.sin_cos();
    Complex64::new(c, -s)
}

/// e^{+2πiθt}.
pub fn character(theta: Frequency, t: i64) -> Complex64 {
    conj_character(theta, t).conj()
}

/// Phasors e^{-2πiθt} for t in `lo..lo+len`, evaluated by a stepped
/// recurrence that resynchronizes against `conj_character` every
/// `RESYNC` samples.
///
/// The recurrence multiplies by a unit step phasor, so within a block the
/// drift is below RESYNC·ε; the resync pins long-range accuracy to the
/// reduced-phase evaluation. This is the fast path for direct coefficient
/// sums; it is deterministic for a fixed (θ, lo, len).
pub fn conj_character_run(theta: Frequency, lo: i64, len: usize) -> Vec<Complex64> {
    const RESYNC: usize = 64;
    let step = conj_character(theta, 1);
    let mut out = Vec::with_capacity(len);
    let mut current = Complex64::new(1.0, 0.0);
    for i in 0..len {
        if i % RESYNC == 0 {
            current = conj_character(theta, lo + i as i64);
        } else {
            current *= step;
        }
        out.push(current);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduces_into_unit_interval() {
        assert_eq!(Frequency::new(1.25).value(), 0.25);
        assert_eq!(Frequency::new(-0.25).value(), 0.75);
        assert_eq!(Frequency::new(0.0).value(), 0.0);
        assert_eq!(Frequency::new(1.0).value(), 0.0);
        assert!(Frequency::new(-1e-320).value() < 1.0);
    }

    #[test]
    fn character_is_unimodular_and_conjugate() {
        let theta = Frequency::new(0.3141592);
        for &t in &[-100_000i64, -7, 0, 3, 65_537] {
            let z = conj_character(theta, t);
            assert!((z.norm() - 1.0).abs() < 1e-14);
            let w = character(theta, t);
            assert!((z.conj() - w).norm() < 1e-15);
        }
    }

    #[test]
    fn dyadic_phase_is_exact() {
        // theta = k/M with M a power of two: theta*t is exactly representable,
        // so the phasor must agree with the exact small-angle evaluation.
        let theta = Frequency::from_bin(1287, 4096);
        for t in 0..512i64 {
            let j = (1287 * t).rem_euclid(4096);
            let angle = -TAU * (j as f64) / 4096.0;
            let exact = Complex64::new(angle.cos(), angle.sin());
            assert!((conj_character(theta, t) - exact).norm() < 1e-15);
        }
    }

    #[test]
    fn large_argument_accuracy() {
        // Compare against 256-step split evaluation at a non-dyadic theta.
        let theta = Frequency::new(0.6180339887498949);
        let t = 1_048_575i64;
        let z = conj_character(theta, t);
        // frac(theta * t) computed in integer-ish pieces: theta*t =
        // theta*(2^20 - 1); 2^20*theta = 648772.0 + frac part.
        let exact_frac = (theta.value() * t as f64).rem_euclid(1.0);
        let p = theta.value() * t as f64;
        let p_lo = theta.value().mul_add(t as f64, -p);
        let refined = (exact_frac + p_lo).rem_euclid(1.0);
        let angle = -TAU * refined;
        let exact = Complex64::new(angle.cos(), angle.sin());
        assert!((z - exact).norm() < 1e-12);
    }

    #[test]
    fn run_matches_pointwise() {
        let theta = Frequency::new(0.2718281828);
        let lo = -1000i64;
        let run = conj_character_run(theta, lo, 5000);
        for (i, z) in run.iter().enumerate() {
            let exact = conj_character(theta, lo + i as i64);
            assert!((z - exact).norm() < 5e-14, "drift at offset {i}");
        }
    }
}
