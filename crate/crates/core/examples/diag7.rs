use abco_core::simgen::{generate, Scenario, ScenarioKind};
use abco_core::detect::cp_probability;
use abco_core::gibbs::{calibrate_gamma_bounds, gamma_bounds};
use abco_core::{GibbsChain, ModelConfig};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let kind = ScenarioKind::from_name(&args[1]).unwrap();
    let t: usize = args[2].parse().unwrap();
    let rep: u64 = args[3].parse().unwrap();
    let out: bool = args.get(4).map(|s| s.parse().unwrap()).unwrap_or(false);
    let sc = Scenario::new(kind, t, 100 + rep);
    let (series, truth) = generate(&sc);
    let cfg = ModelConfig { d: kind.default_d(), iters: 4000, burn: 1500, seed: 100 + rep, use_outliers: out, ..ModelConfig::default() };
    let raw = gamma_bounds(&series.values, cfg.d).unwrap();
    let cal = calibrate_gamma_bounds(&series, &cfg).unwrap();
    println!("{} rep {rep}: true cps {:?}; raw bounds ({:.2},{:.2}) calibrated ({:.2},{:.2})",
        kind.name(), truth.changepoints, raw.0, raw.1, cal.0, cal.1);
    let draws = GibbsChain::new(&series, &cfg).unwrap().run().unwrap();
    let probs = cp_probability(&draws.log_omega2, &draws.gamma);
    let gm = draws.gamma.iter().sum::<f64>() / draws.gamma.len() as f64;
    let mut top: Vec<(usize, f64)> = probs.iter().cloned().enumerate().collect();
    top.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
    println!("  gamma_mean {gm:.2}; top8 {:?}", &top[..8].iter().map(|(i,p)| format!("{}:{:.2}", i + cfg.d, p)).collect::<Vec<_>>());
}
