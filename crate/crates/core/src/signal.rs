//! Orbit signals: finite-window materializations of a coding f_x(t) = f(t.x).

use crate::error::{Error, Result};
use crate::freq::{character, Frequency};
use crate::observable::CylinderObservable;
use crate::source::PointSource;
use crate::window::Window;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A complex signal over a window, tagged with where it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitSignal {
    pub window: Window,
    pub values: Vec<Complex64>,
    pub source_label: String,
    pub observable_label: String,
}

impl OrbitSignal {
    pub fn new(
        window: Window,
        values: Vec<Complex64>,
        source_label: impl Into<String>,
        observable_label: impl Into<String>,
    ) -> Self {
        debug_assert_eq!(values.len() as i64, window.len());
        OrbitSignal {
            window,
            values,
            source_label: source_label.into(),
            observable_label: observable_label.into(),
        }
    }

    pub fn value_at(&self, t: i64) -> Complex64 {
        debug_assert!(self.window.contains(t));
        self.values[(t - self.window.lo) as usize]
    }

    /// The contiguous slice of values over a sub-window.
    pub fn slice(&self, window: Window) -> Result<&[Complex64]> {
        if !self.window.covers(&window) {
            return Err(Error::WindowCoverage { signal: self.window, requested: window });
        }
        let start = (window.lo - self.window.lo) as usize;
        Ok(&self.values[start..start + window.len() as usize])
    }

    /// True when every imaginary part is negligible.
    pub fn is_effectively_real(&self) -> bool {
        self.values.iter().all(|z| z.im.abs() < 1e-12)
    }
}

/// The coding of `obs` on the orbit of the source point, over `window`.
///
/// values[i] = obs(local word of x centered at lo+i), where the local word is
/// read from the window inflated by the observable radius.
pub fn orbit_signal(
    obs: &CylinderObservable,
    source: &PointSource,
    window: Window,
) -> Result<OrbitSignal> {
    let r = obs.radius();
    let symbols = source.symbols(window.inflated(r))?;
    let width = (2 * r + 1) as usize;
    let values = (0..window.len() as usize)
        .map(|i| obs.eval(&symbols[i..i + width]))
        .collect();
    Ok(OrbitSignal::new(window, values, source.label(), obs.label()))
}

/// Anything that can materialize a signal over a requested window.
///
/// Detection, certification and diffraction all run against this trait so
/// the same kernels serve symbol codings, weighted combs, and synthetic
/// test signals.
pub trait SignalProvider: Sync {
    fn sample(&self, window: Window) -> Result<OrbitSignal>;
    fn label(&self) -> String;
    /// A finite upper bound on |signal|.
    fn sup_norm(&self) -> f64;
}

/// A point source observed through a cylinder observable.
#[derive(Debug, Clone)]
pub struct CodedSystem {
    pub source: PointSource,
    pub observable: CylinderObservable,
}

impl CodedSystem {
    pub fn new(source: PointSource, observable: CylinderObservable) -> Self {
        CodedSystem { source, observable }
    }

    pub fn with_offset(&self, s: i64) -> Self {
        CodedSystem { source: self.source.with_offset(s), observable: self.observable.clone() }
    }
}

impl SignalProvider for CodedSystem {
    fn sample(&self, window: Window) -> Result<OrbitSignal> {
        orbit_signal(&self.observable, &self.source, window)
    }

    fn label(&self) -> String {
        format!("{}/{}", self.source.label(), self.observable.label())
    }

    fn sup_norm(&self) -> f64 {
        self.observable.sup_norm()
    }
}

/// A finite sum of characters plus optional seeded noise; the ground-truth
/// generator for detector soundness checks.
#[derive(Debug, Clone)]
pub struct SyntheticSignal {
    pub components: Vec<(Frequency, Complex64)>,
    pub noise_eps: f64,
    pub seed: u64,
}

impl SyntheticSignal {
    pub fn pure(components: Vec<(Frequency, Complex64)>) -> Self {
        SyntheticSignal { components, noise_eps: 0.0, seed: 0 }
    }

    fn noise_at(&self, t: i64) -> Complex64 {
        let zigzag = ((t << 1) ^ (t >> 63)) as u64;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_word_pos(zigzag as u128 * 4);
        let re: f64 = rng.gen_range(-1.0..1.0);
        let im: f64 = rng.gen_range(-1.0..1.0);
        Complex64::new(re, im)
    }
}

impl SignalProvider for SyntheticSignal {
    fn sample(&self, window: Window) -> Result<OrbitSignal> {
        let values = window
            .iter()
            .map(|t| {
                let mut z = Complex64::new(0.0, 0.0);
                for &(theta, c) in &self.components {
                    z += c * character(theta, t);
                }
                if self.noise_eps > 0.0 {
                    z += self.noise_eps * self.noise_at(t);
                }
                z
            })
            .collect();
        Ok(OrbitSignal::new(window, values, self.label(), "synthetic"))
    }

    fn label(&self) -> String {
        format!("synthetic({} tones, eps={})", self.components.len(), self.noise_eps)
    }

    fn sup_norm(&self) -> f64 {
        let tone_mass: f64 = self.components.iter().map(|(_, c)| c.norm()).sum();
        tone_mass + self.noise_eps * std::f64::consts::SQRT_2
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn value_observable_on_step() {
        // Value-at-origin coding of the step point over [-2, 3).
        let source = PointSource::step();
        let obs = CylinderObservable::value_at_origin();
        let sig = orbit_signal(&obs, &source, Window::new(-2, 3).unwrap()).unwrap();
        let values: Vec<f64> = sig.values.iter().map(|z| z.re).collect();
        assert_eq!(values, vec![0.0, 0.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn constant_observable_anywhere() {
        let source = PointSource::fibonacci();
        let obs = CylinderObservable::one();
        let sig = orbit_signal(&obs, &source, Window::new(-5, 5).unwrap()).unwrap();
        assert!(sig.values.iter().all(|z| *z == Complex64::new(1.0, 0.0)));
    }

    #[test]
    fn letter_indicator_on_periodic() {
        let source = PointSource::periodic("ab").unwrap();
        let obs = CylinderObservable::letter(b'a');
        let sig = orbit_signal(&obs, &source, Window::one_sided(4)).unwrap();
        let values: Vec<f64> = sig.values.iter().map(|z| z.re).collect();
        assert_eq!(values, vec![1.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn shift_covariance_is_exact() {
        // Signal of s.x over [lo, hi) equals signal of x over [lo+s, hi+s).
        let source = PointSource::fibonacci();
        let obs = CylinderObservable::word("a.a").unwrap();
        for s in [1i64, 7, -13, 1001] {
            let w = Window::new(-64, 64).unwrap();
            let shifted = orbit_signal(&obs, &source.with_offset(s), w).unwrap();
            let base = orbit_signal(&obs, &source, w.shifted(s)).unwrap();
            assert_eq!(shifted.values, base.values, "offset {s}");
        }
    }

    #[test]
    fn signal_bounded_by_sup_norm() {
        let source = PointSource::thue_morse();
        let obs = CylinderObservable::plus_minus(b'a');
        let sig = orbit_signal(&obs, &source, Window::one_sided(256)).unwrap();
        let bound = obs.sup_norm();
        assert!(sig.values.iter().all(|z| z.norm() <= bound + 1e-12));
    }

    #[test]
    fn slice_errors_outside_window() {
        let source = PointSource::step();
        let obs = CylinderObservable::one();
        let sig = orbit_signal(&obs, &source, Window::one_sided(8)).unwrap();
        assert!(sig.slice(Window::new(-1, 4).unwrap()).is_err());
        assert_eq!(sig.slice(Window::new(2, 5).unwrap()).unwrap().len(), 3);
    }

    #[test]
    fn synthetic_signal_is_window_consistent() {
        let synth = SyntheticSignal {
            components: vec![(Frequency::new(0.3), Complex64::new(1.0, 0.5))],
            noise_eps: 0.1,
            seed: 42,
        };
        let small = synth.sample(Window::new(10, 20).unwrap()).unwrap();
        let large = synth.sample(Window::new(0, 40).unwrap()).unwrap();
        for t in 10..20 {
            assert_eq!(small.value_at(t), large.value_at(t));
        }
    }
}
