use num_complex::Complex64;
use ww_spectra::folner::FolnerSchedule;
use ww_spectra::spectrum::*;
use ww_spectra::wwpoint::*;
use ww_spectra::*;

fn main() {
    let which = std::env::args().nth(1).unwrap_or_default();
    match which.as_str() {
        "tm" => {
            let schedule = FolnerSchedule::one_sided(&[1 << 14, 1 << 16, 1 << 18]).unwrap();
            let obs = CylinderObservable::plus_minus(b'a');
            let systems: Vec<CodedSystem> = [0i64, 1001, 65537]
                .iter()
                .map(|&s| CodedSystem::new(PointSource::thue_morse().with_offset(s), obs.clone()))
                .collect();
            let providers: Vec<&dyn SignalProvider> =
                systems.iter().map(|s| s as &dyn SignalProvider).collect();
            let band = spectrum::FrequencyBand::new(0.10, 0.40).unwrap();
            let trace =
                uniform_vanishing_check(&providers, &schedule, band, 1 << 18, &[]).unwrap();
            for s in &trace.scales {
                println!("scale {} sup {:.6} per-source {:?}", s.scale, s.sup,
                    s.per_source.iter().map(|v| (v*1e4).round()/1e4).collect::<Vec<_>>());
            }
            println!("nonincreasing: {}", trace.nonincreasing);
        }
        "fibpars" => {
            let source = PointSource::fibonacci();
            let obs = CylinderObservable::letter(b'a');
            let schedule = FolnerSchedule::one_sided(&[1 << 12, 1 << 14, 1 << 16, 1 << 18]).unwrap();
            let sys = CodedSystem::new(source.clone(), obs.clone());
            let report = detect_for(&sys, &schedule, 1 << 18, Threshold::Absolute(0.01),
                DetectionConfig::default()).unwrap();
            println!("candidates: {}", report.candidates.len());
            let trace = parseval_defect(&source, &obs, &report, &schedule, 20.min(report.candidates.len())).unwrap();
            for s in &trace.per_scale {
                println!("scale {} d1 {:.6} d2 {:.6} gap {:.2e}", s.scale, s.d1, s.d2, s.gap);
            }
            println!("mp {:.6}, 0.05 mp = {:.6}", report.mean_power, 0.05 * report.mean_power);
        }
        "phase" => {
            for desc in ["fibonacci", "rotation:golden"] {
                let source = PointSource::from_descriptor(desc).unwrap();
                let obs = CylinderObservable::letter(b'a');
                let schedule = FolnerSchedule::one_sided(&[1 << 14, 1 << 16, 1 << 18]).unwrap();
                let sys = CodedSystem::new(source.clone(), obs.clone());
                let report = detect_for(&sys, &schedule, 1 << 18, Threshold::RelativeToRms(0.05),
                    DetectionConfig::default()).unwrap();
                let w = schedule.largest();
                let base = sys.sample(w).unwrap();
                let mut worst = (0.0f64, 0.0f64);
                for c in &report.candidates {
                    let a0 = averaging::fourier_bohr_at(&base, w, c.theta).unwrap();
                    for s in [1001i64, 65537] {
                        let shifted = sys.with_offset(s).sample(w).unwrap();
                        let a_s = averaging::fourier_bohr_at(&shifted, w, c.theta).unwrap();
                        let expected = freq::character(c.theta, s) * a0;
                        worst.0 = worst.0.max((a_s - expected).norm());
                        worst.1 = worst.1.max((a_s.norm() - a0.norm()).abs());
                    }
                }
                println!("{desc}: {} candidates, worst phase residual {:.5}, worst amp dev {:.5}",
                    report.candidates.len(), worst.0, worst.1);
            }
        }
        "fibap" | "rotap" => {
            let source = if which == "fibap" { PointSource::fibonacci() } else { PointSource::golden_rotation() };
            let core = default_core(&source, 1).unwrap();
            let schedule = FolnerSchedule::one_sided(&[1 << 14, 1 << 16, 1 << 18]).unwrap();
            for obs in &core {
                let sys = CodedSystem::new(source.clone(), obs.clone());
                let (rep, spec) = ap_test_for(&sys, &schedule, 0.05, 160,
                    Threshold::RelativeToRms(0.005),
                    DetectionConfig { refine: false, oversample: 8, ..DetectionConfig::default() },
                    1 << 18).unwrap();
                println!("{:<12} ap={} terms={} dist={:.4} second={:.4} cands={}",
                    obs.label(), rep.almost_periodic, rep.n_terms_used, rep.final_dist,
                    rep.second_dist, spec.candidates.len());
            }
        }
        "bern" => {
            let source = PointSource::bernoulli(0.5, 0x5eed).unwrap();
            let core = vec![CylinderObservable::one(), CylinderObservable::plus_minus(b'a'),
                CylinderObservable::letter(b'a')];
            let schedule = FolnerSchedule::one_sided(&[1 << 12, 1 << 14, 1 << 16, 1 << 18]).unwrap();
            let mut params = CertifyParams::for_schedule(&schedule);
            params.offsets = vec![0, 1001, 65537];
            let report = ww_certify(&source, &core, &schedule, &params).unwrap();
            println!("verdict {:?}", report.verdict);
            for ap in &report.ap {
                println!("  {:<10} ap={} dist={:.4}", ap.observable, ap.almost_periodic, ap.final_dist);
            }
            println!("genericity pass {}", report.genericity.pass);
        }
        "synth" => {
            // 20 seeded synthetic trials.
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(20260809);
            let n = 1i64 << 14;
            let schedule = FolnerSchedule::one_sided(&[1 << 12, 1 << 13, 1 << 14]).unwrap();
            let mut failures = 0;
            for trial in 0..20 {
                let mut thetas: Vec<f64> = Vec::new();
                while thetas.len() < 5 {
                    let t: f64 = rng.gen();
                    if thetas.iter().all(|&u: &f64| {
                        let d = (t - u).rem_euclid(1.0);
                        d.min(1.0 - d) >= 10.0 / n as f64
                    }) {
                        thetas.push(t);
                    }
                }
                let comps: Vec<(Frequency, Complex64)> = thetas.iter().map(|&t| {
                    let amp = 0.5 + 0.5 * rng.gen::<f64>();
                    let ph = std::f64::consts::TAU * rng.gen::<f64>();
                    (Frequency::new(t), Complex64::from_polar(amp, ph))
                }).collect();
                let synth = SyntheticSignal { components: comps.clone(), noise_eps: 0.02, seed: trial };
                let report = detect_for(&synth, &schedule, 1 << 15, Threshold::Absolute(0.25),
                    DetectionConfig::default()).unwrap();
                let ok = comps.iter().all(|(t, c)| {
                    report.candidates.iter().any(|cand|
                        cand.theta.circle_distance(*t) < 2.0 / n as f64
                        && (cand.amplitude - c.norm()).abs() / c.norm() < 0.05)
                }) && report.candidates.len() == 5;
                if !ok { failures += 1; println!("trial {trial}: FAIL ({} cands)", report.candidates.len()); }
            }
            println!("failures: {failures}/20");
        }
        _ => eprintln!("usage: dbg_accept tm|fibpars|phase|rotap|bern|synth"),
    }
}
