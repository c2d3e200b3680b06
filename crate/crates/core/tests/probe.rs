// Temporary development probe; replaced by the acceptance suite.
use pulseinfer::solver::{simulate, SimulationConfig};
use pulseinfer::units::pa_to_mmhg;
use pulseinfer::vessel::ArterialNetwork;

#[test]
fn probe_bundled_networks() {
    for name in ["single_tube", "bifurcation3", "aorta7"] {
        let path = format!("{}/../../networks/{name}.json", env!("CARGO_MANIFEST_DIR"));
        let net = ArterialNetwork::from_file(&path).unwrap();
        let t0 = std::time::Instant::now();
        let out = simulate(&net, &SimulationConfig::default()).unwrap();
        let dt = t0.elapsed().as_secs_f64();
        println!(
            "== {name}: cycles {} residual {:.3e} converged {} ({dt:.2} s)",
            out.diagnostics.cycles_run, out.diagnostics.residual, out.diagnostics.converged
        );
        for rec in &out.records {
            let min = rec.samples.iter().cloned().fold(f64::INFINITY, f64::min);
            let max = rec.samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            match rec.site.kind {
                pulseinfer::vessel::SignalKind::Pressure => println!(
                    "   {} @{:.2} pressure: {:.1}..{:.1} mmHg ({} samples)",
                    rec.site.segment,
                    rec.site.position,
                    pa_to_mmhg(min),
                    pa_to_mmhg(max),
                    rec.samples.len()
                ),
                pulseinfer::vessel::SignalKind::PpgProxy => println!(
                    "   {} @{:.2} ppg: {:.3}..{:.3} ({} samples)",
                    rec.site.segment, rec.site.position, min, max, rec.samples.len()
                ),
            }
        }
        for w in &out.diagnostics.warnings {
            println!("   warning: {w}");
        }
    }
}
