use abco_core::simgen::{generate, Scenario, ScenarioKind};
use abco_core::state::PosteriorDraws;
use abco_core::{GibbsChain, ModelConfig};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let kind = ScenarioKind::from_name(&args[1]).unwrap();
    let t: usize = args[2].parse().unwrap();
    let rep: u64 = args[3].parse().unwrap();
    let sc = Scenario::new(kind, t, 100 + rep);
    let (series, truth) = generate(&sc);
    let d = kind.default_d();
    let cfg = ModelConfig { d, iters: 1000, burn: 500, seed: 100 + rep, use_outliers: false, ..ModelConfig::default() };
    // Emulate the DHS pre-run directly: horseshoe-off? Use full chain in dhs mode is private;
    // instead fit the plain model with huge gamma via horseshoe=false but bounds raw — just look at z profile of a longer fit.
    let draws = GibbsChain::new(&series, &cfg).unwrap().run().unwrap();
    let prof = PosteriorDraws::column_means(&draws.log_omega2);
    let n = prof.len();
    let mean = prof.iter().sum::<f64>() / n as f64;
    let sd = (prof.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64).sqrt();
    let (amax, vmax) = prof.iter().enumerate().fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
    let cp = truth.changepoints[0];
    println!("{} rep {rep}: cp {cp} (inc {}); profile mean {mean:.2} sd {sd:.2} max {vmax:.2} at inc {amax}", kind.name(), cp - d);
    println!("  first5 {:?} last5 {:?}", &prof[..5].iter().map(|v| format!("{v:.1}")).collect::<Vec<_>>(), &prof[n-5..].iter().map(|v| format!("{v:.1}")).collect::<Vec<_>>());
    let k0 = (cp - d).saturating_sub(3);
    println!("  around cp {:?}", &prof[k0..(cp - d + 4).min(n)].iter().map(|v| format!("{v:.1}")).collect::<Vec<_>>());
}
