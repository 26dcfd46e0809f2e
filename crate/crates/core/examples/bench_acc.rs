use dressedsim::config::{ParamValue, Params, RunConfig};
use dressedsim::experiments::{run_experiment, Experiment};
use std::time::Instant;

fn main() {
    // Criterion 4 scale: dressed_rabi noiseless, 40 pts, 200 shots.
    let mut cfg = RunConfig::default();
    cfg.detector = dressedsim::measure::DetectorModel::ideal();
    cfg.shots = 200;
    cfg.seed = 1;
    let t = Instant::now();
    let r = run_experiment(Experiment::DressedRabi, &cfg, &Params::new()).unwrap();
    let omega = r.fit.as_ref().unwrap().param("omega").unwrap().value;
    println!("dressed_rabi: {:?}, omega/2pi = {:.2} Hz (expect 1900)", t.elapsed(), omega / std::f64::consts::TAU);

    // Criterion 8b scale: one shot of 40 ms rf drive under quasi-static noise.
    cfg.noise.quasi_static_sigma = 4.0251e-6;
    cfg.shots = 12;
    let mut p = Params::new();
    p.insert("t_min".into(), ParamValue::Number(40e-3));
    p.insert("t_max".into(), ParamValue::Number(40.55e-3));
    p.insert("points".into(), ParamValue::Number(4.0));
    let t = Instant::now();
    let r = run_experiment(Experiment::DressedRabi, &cfg, &p).unwrap();
    println!("40ms windowed rabi 4pts x 12 shots: {:?} (scale to 12pts x 150 = {:.0}x)", t.elapsed(), (12.0*150.0)/(4.0*12.0));
    let _ = r;
}
