use ww_spectra::*;
use ww_spectra::folner::FolnerSchedule;
use ww_spectra::spectrum::*;

fn main() {
    let source = PointSource::step();
    let obs = CylinderObservable::value_at_origin();
    let schedule = FolnerSchedule::symmetric(&[1 << 10, 1 << 12, 1 << 14]).unwrap();
    let sys = CodedSystem::new(source, obs);
    let report = detect_for(&sys, &schedule, 1 << 16, Threshold::RelativeToRms(0.01), DetectionConfig::default()).unwrap();
    println!("threshold = {}", report.threshold);
    for c in &report.candidates {
        println!("theta={:.9} amp={:.6} stab={:.4} warn={}", c.theta.value(), c.amplitude, c.stability, c.refinement_warning);
    }
}
