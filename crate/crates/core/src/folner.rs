//! Følner schedules and their audits: defects, the Shulman temperedness
//! ratio, derived intersection/union schedules, and boundary energies.
//!
//! All set computations are exact integer interval arithmetic. Temperedness
//! is undecidable from finitely many scales, so verdicts are explicitly
//! "up to the audited range".

use crate::error::{Error, Result};
use crate::reduction::pairwise_map_sum;
use crate::signal::OrbitSignal;
use crate::window::{IntervalSet, Window};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleKind {
    Symmetric,
    OneSided,
    Custom,
}

/// A nested family of integer windows A_1 ⊂ A_2 ⊂ … used for averaging.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FolnerSchedule {
    kind: ScheduleKind,
    scales: Vec<i64>,
    windows: Vec<Window>,
}

impl FolnerSchedule {
    /// Windows [-N, N] for each scale N.
    pub fn symmetric(scales: &[i64]) -> Result<Self> {
        check_scales(scales)?;
        Ok(FolnerSchedule {
            kind: ScheduleKind::Symmetric,
            scales: scales.to_vec(),
            windows: scales.iter().map(|&n| Window::symmetric(n)).collect(),
        })
    }

    /// Windows [0, N) for each scale N.
    pub fn one_sided(scales: &[i64]) -> Result<Self> {
        check_scales(scales)?;
        Ok(FolnerSchedule {
            kind: ScheduleKind::OneSided,
            scales: scales.to_vec(),
            windows: scales.iter().map(|&n| Window::one_sided(n)).collect(),
        })
    }

    pub fn custom(windows: Vec<Window>) -> Result<Self> {
        if windows.is_empty() {
            return Err(Error::InvalidInput("custom schedule needs at least one window".into()));
        }
        for w in &windows {
            if w.is_empty() {
                return Err(Error::EmptyWindow { lo: w.lo, hi: w.hi });
            }
        }
        let scales = windows.iter().map(Window::len).collect();
        Ok(FolnerSchedule { kind: ScheduleKind::Custom, scales, windows })
    }

    /// The default averaging scales 2^12, 2^14, …, 2^20.
    pub fn default_one_sided() -> Self {
        FolnerSchedule::one_sided(&[1 << 12, 1 << 14, 1 << 16, 1 << 18, 1 << 20])
            .expect("default scales are strictly increasing")
    }

    pub fn default_symmetric() -> Self {
        FolnerSchedule::symmetric(&[1 << 12, 1 << 14, 1 << 16, 1 << 18, 1 << 20])
            .expect("default scales are strictly increasing")
    }

    /// Powers of two 2^lo, 2^(lo+step), …, capped at 2^hi.
    pub fn geometric(kind: ScheduleKind, lo_exp: u32, hi_exp: u32, step: u32) -> Result<Self> {
        if lo_exp > hi_exp || step == 0 {
            return Err(Error::InvalidInput(format!("bad scale range 2^{lo_exp}..2^{hi_exp}")));
        }
        let scales: Vec<i64> = (lo_exp..=hi_exp).step_by(step as usize).map(|e| 1i64 << e).collect();
        match kind {
            ScheduleKind::Symmetric => FolnerSchedule::symmetric(&scales),
            ScheduleKind::OneSided => FolnerSchedule::one_sided(&scales),
            ScheduleKind::Custom => Err(Error::InvalidInput("custom schedules take explicit windows".into())),
        }
    }

    pub fn kind(&self) -> ScheduleKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    pub fn window(&self, index: usize) -> Result<Window> {
        self.windows
            .get(index)
            .copied()
            .ok_or(Error::ScaleIndexOutOfRange { index, len: self.windows.len() })
    }

    pub fn windows(&self) -> &[Window] {
        &self.windows
    }

    pub fn largest(&self) -> Window {
        *self.windows.last().expect("schedules are nonempty")
    }

    /// Indices of the last `count` scales (fewer if the schedule is short).
    pub fn top_indices(&self, count: usize) -> Vec<usize> {
        let n = self.windows.len();
        (n.saturating_sub(count)..n).collect()
    }
}

fn check_scales(scales: &[i64]) -> Result<()> {
    if scales.is_empty() || scales[0] <= 0 {
        return Err(Error::InvalidInput("scales must be positive".into()));
    }
    if scales.windows(2).any(|p| p[0] >= p[1]) {
        return Err(Error::NonIncreasingScales);
    }
    Ok(())
}

/// |A_n △ (t + A_n)| / |A_n|, exact for interval windows.
pub fn folner_defect(schedule: &FolnerSchedule, t: i64, n: usize) -> Result<f64> {
    let w = schedule.window(n)?;
    let overlap = (w.len() - t.abs()).max(0);
    Ok(2.0 * (w.len() - overlap) as f64 / w.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TemperednessVerdict {
    TemperedUpToRange,
    RatioDiverging,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleRatio {
    /// 1-based scale index n.
    pub n: usize,
    pub window_size: i64,
    pub rho: f64,
}

/// The Shulman-condition audit: ρ_n = |∪_{k<n}(A_n − A_k)| / |A_n|.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemperednessReport {
    pub ratios: Vec<ScaleRatio>,
    /// max_n ρ_n over the audited range.
    pub constant: f64,
    pub verdict: TemperednessVerdict,
}

/// Audit scales 2..=n_max. The verdict is declared ratio-diverging when ρ_n
/// strictly increases over the last ⌈n_max/2⌉ audited scales and
/// ρ_{n_max} > 2·ρ_{⌈n_max/2⌉}; otherwise the family is tempered as far as
/// the audit can see.
pub fn shulman_trace(schedule: &FolnerSchedule, n_max: usize) -> Result<TemperednessReport> {
    if n_max < 2 || n_max > schedule.len() {
        return Err(Error::ScaleIndexOutOfRange { index: n_max, len: schedule.len() });
    }
    let mut ratios = Vec::with_capacity(n_max - 1);
    for n in 2..=n_max {
        let a_n = schedule.window(n - 1)?;
        let mut union = IntervalSet::new();
        for k in 1..n {
            union.insert(a_n.minkowski_difference(&schedule.window(k - 1)?));
        }
        ratios.push(ScaleRatio {
            n,
            window_size: a_n.len(),
            rho: union.measure() as f64 / a_n.len() as f64,
        });
    }
    let constant = ratios.iter().map(|r| r.rho).fold(f64::NEG_INFINITY, f64::max);

    let half = n_max.div_ceil(2);
    let verdict = if half >= 2 && n_max > half {
        let tail: Vec<f64> = ratios.iter().filter(|r| r.n >= half).map(|r| r.rho).collect();
        let strictly_increasing = tail.windows(2).all(|p| p[0] < p[1]);
        let rho_half = ratios.iter().find(|r| r.n == half).map(|r| r.rho).unwrap_or(f64::MAX);
        let rho_last = ratios.last().map(|r| r.rho).unwrap_or(0.0);
        if strictly_increasing && rho_last > 2.0 * rho_half {
            TemperednessVerdict::RatioDiverging
        } else {
            TemperednessVerdict::TemperedUpToRange
        }
    } else {
        TemperednessVerdict::TemperedUpToRange
    };
    Ok(TemperednessReport { ratios, constant, verdict })
}

/// The intersection and union families B_n = A_n ∩ (s+A_n) and
/// C_n = A_n ∪ (s+A_n), as custom schedules.
pub fn derived_sequences(
    schedule: &FolnerSchedule,
    s: i64,
) -> Result<(FolnerSchedule, FolnerSchedule)> {
    let mut intersections = Vec::with_capacity(schedule.len());
    let mut unions = Vec::with_capacity(schedule.len());
    for (index, w) in schedule.windows().iter().enumerate() {
        let shifted = w.shifted(s);
        let b = w
            .intersect(&shifted)
            .ok_or(Error::EmptyDerivedWindow { index, shift: s })?;
        intersections.push(b);
        unions.push(Window { lo: w.lo.min(shifted.lo), hi: w.hi.max(shifted.hi) });
    }
    Ok((FolnerSchedule::custom(intersections)?, FolnerSchedule::custom(unions)?))
}

/// (1/|A_n|) Σ_{t ∈ A_n △ (A_n+s)} |signal(t)|², the boundary term of the
/// genericity definition.
pub fn boundary_energy(
    signal: &OrbitSignal,
    schedule: &FolnerSchedule,
    s: i64,
    n: usize,
) -> Result<f64> {
    let w = schedule.window(n)?;
    let mut total = 0.0;
    for part in w.symmetric_difference_with_shift(s) {
        let slice = signal.slice(part)?;
        total += pairwise_map_sum(slice, |z| z.norm_sqr());
    }
    Ok(total / w.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observable::CylinderObservable;
    use crate::signal::orbit_signal;
    use crate::source::PointSource;

    fn squares_schedule(n_max: i64) -> FolnerSchedule {
        FolnerSchedule::custom(
            (1..=n_max).map(|n| Window { lo: n * n, hi: n * n + n }).collect(),
        )
        .unwrap()
    }

    #[test]
    fn defect_closed_forms() {
        let one_sided = FolnerSchedule::one_sided(&[4, 8, 16]).unwrap();
        assert_eq!(folner_defect(&one_sided, 1, 1).unwrap(), 2.0 / 8.0);
        let symmetric = FolnerSchedule::symmetric(&[10, 20]).unwrap();
        assert_eq!(folner_defect(&symmetric, 3, 1).unwrap(), 6.0 / 41.0);
        let squares = squares_schedule(10);
        assert_eq!(folner_defect(&squares, 1, 4).unwrap(), 2.0 / 5.0);
        assert!(folner_defect(&squares, 1, 10).is_err());
    }

    #[test]
    fn defect_tends_to_zero() {
        for schedule in [
            FolnerSchedule::symmetric(&(1..=40).collect::<Vec<_>>()).unwrap(),
            FolnerSchedule::one_sided(&(1..=40).collect::<Vec<_>>()).unwrap(),
        ] {
            for t in [1i64, 3, 7] {
                let first = folner_defect(&schedule, t, 4).unwrap();
                let last = folner_defect(&schedule, t, 39).unwrap();
                assert!(last < first && last <= 2.0 * t.abs() as f64 / 40.0);
            }
        }
    }

    #[test]
    fn shulman_symmetric_closed_form() {
        // A_n = [-n, n]: rho_n = (4n-1)/(2n+1), tempered with constant -> 2.
        let schedule = FolnerSchedule::symmetric(&(1..=20).collect::<Vec<_>>()).unwrap();
        let report = shulman_trace(&schedule, 20).unwrap();
        for r in &report.ratios {
            let n = r.n as f64;
            assert!((r.rho - (4.0 * n - 1.0) / (2.0 * n + 1.0)).abs() < 1e-14, "n={}", r.n);
            assert!(r.rho >= 1.0);
        }
        assert_eq!(report.verdict, TemperednessVerdict::TemperedUpToRange);
        assert!((report.constant - 79.0 / 41.0).abs() < 1e-14);
    }

    #[test]
    fn shulman_dyadic_telescopes() {
        // A_n = [0, 2^n): the union telescopes, rho_n -> 3/2.
        let scales: Vec<i64> = (1..=20).map(|e| 1i64 << e).collect();
        let schedule = FolnerSchedule::one_sided(&scales).unwrap();
        let report = shulman_trace(&schedule, 20).unwrap();
        for r in &report.ratios {
            let size = r.window_size as f64;
            let expected = (size + size / 2.0 - 1.0) / size;
            assert!((r.rho - expected).abs() < 1e-12, "n={}", r.n);
        }
        assert_eq!(report.verdict, TemperednessVerdict::TemperedUpToRange);
        let last = report.ratios.last().unwrap().rho;
        assert!((last - 1.5).abs() < 1e-5);
    }

    #[test]
    fn shulman_flags_squares_family() {
        // A_n = [n^2, n^2+n): the difference sets pile up, rho_n ~ n.
        let report = shulman_trace(&squares_schedule(20), 20).unwrap();
        assert_eq!(report.verdict, TemperednessVerdict::RatioDiverging);
        for r in &report.ratios {
            let n = r.n as f64;
            // Union is the contiguous block [n+1, n^2+n-1).
            assert!((r.rho - (n * n - 2.0) / n).abs() < 1e-12, "n={}", r.n);
        }
    }

    #[test]
    fn derived_interval_examples() {
        let one_sided = FolnerSchedule::one_sided(&[8, 16]).unwrap();
        let (b, c) = derived_sequences(&one_sided, 3).unwrap();
        assert_eq!(b.window(0).unwrap(), Window { lo: 3, hi: 8 });
        assert_eq!(c.window(0).unwrap(), Window { lo: 0, hi: 11 });

        let symmetric = FolnerSchedule::symmetric(&[5, 9]).unwrap();
        let (b0, c0) = derived_sequences(&symmetric, 0).unwrap();
        assert_eq!(b0.windows(), symmetric.windows());
        assert_eq!(c0.windows(), symmetric.windows());

        let (b2, c2) = derived_sequences(&symmetric, 2).unwrap();
        assert_eq!(b2.window(0).unwrap(), Window { lo: -3, hi: 6 });
        assert_eq!(c2.window(0).unwrap(), Window { lo: -5, hi: 8 });

        // Shift exceeding the smallest scale empties B_1.
        assert!(matches!(
            derived_sequences(&FolnerSchedule::one_sided(&[2, 4]).unwrap(), 3),
            Err(Error::EmptyDerivedWindow { index: 0, shift: 3 })
        ));
    }

    #[test]
    fn union_family_obeys_lemma_bound() {
        // rho_n(C) <= 4 * C(A) for tempered interval schedules, n <= 20.
        for (schedule, s) in [
            (FolnerSchedule::symmetric(&(1..=20).collect::<Vec<_>>()).unwrap(), 2i64),
            (FolnerSchedule::one_sided(&(4..=23).collect::<Vec<_>>()).unwrap(), 3),
            (FolnerSchedule::one_sided(&(3..=22).map(|e| 1i64 << e).collect::<Vec<_>>()).unwrap(), 5),
        ] {
            let base = shulman_trace(&schedule, 20).unwrap();
            let (_, unions) = derived_sequences(&schedule, s).unwrap();
            let derived = shulman_trace(&unions, 20).unwrap();
            for r in &derived.ratios {
                assert!(
                    r.rho <= 4.0 * base.constant + 1e-12,
                    "rho_n(C)={} exceeds 4C={} at n={}",
                    r.rho,
                    4.0 * base.constant,
                    r.n
                );
            }
        }
    }

    #[test]
    fn intersection_family_ratio_bound() {
        // B_n ⊆ A_n forces rho_n(B) <= rho_n(A) * |A_n| / |B_n|.
        let schedule = FolnerSchedule::symmetric(&(4..=23).collect::<Vec<_>>()).unwrap();
        let (intersections, _) = derived_sequences(&schedule, 3).unwrap();
        let base = shulman_trace(&schedule, 20).unwrap();
        let derived = shulman_trace(&intersections, 20).unwrap();
        for (rb, ra) in derived.ratios.iter().zip(&base.ratios) {
            let scale_factor = ra.window_size as f64 / rb.window_size as f64;
            assert!(rb.rho <= ra.rho * scale_factor + 1e-12, "n={}", rb.n);
        }
    }

    #[test]
    fn boundary_energy_examples() {
        let schedule = FolnerSchedule::one_sided(&[8, 16]).unwrap();
        let ones = orbit_signal(
            &CylinderObservable::one(),
            &PointSource::periodic("a").unwrap(),
            Window::new(-4, 20).unwrap(),
        )
        .unwrap();
        assert!((boundary_energy(&ones, &schedule, 1, 1).unwrap() - 2.0 / 16.0).abs() < 1e-15);

        let zeros = orbit_signal(
            &CylinderObservable::constant(num_complex::Complex64::new(0.0, 0.0)),
            &PointSource::periodic("a").unwrap(),
            Window::new(-4, 20).unwrap(),
        )
        .unwrap();
        assert_eq!(boundary_energy(&zeros, &schedule, 1, 1).unwrap(), 0.0);

        // Step coding on [-N, N] with s=1: only t = N+1 contributes.
        let n = 50i64;
        let schedule = FolnerSchedule::symmetric(&[10, n]).unwrap();
        let step = orbit_signal(
            &CylinderObservable::value_at_origin(),
            &PointSource::step(),
            Window::new(-n - 2, n + 3).unwrap(),
        )
        .unwrap();
        let expected = 1.0 / (2 * n + 1) as f64;
        assert!((boundary_energy(&step, &schedule, 1, 1).unwrap() - expected).abs() < 1e-15);
    }
}
