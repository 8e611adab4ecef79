use abco_core::simgen::{generate, Scenario, ScenarioKind};
use abco_core::detect::cp_probability;
use abco_core::{GibbsChain, ModelConfig};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let lo: f64 = args[1].parse().unwrap();
    let hi: f64 = args[2].parse().unwrap();
    let rep = 0u64;
    let sc = Scenario::new(ScenarioKind::LinearMeetupOutliers, 100, 100 + rep);
    let (series, truth) = generate(&sc);
    let cp = truth.changepoints[0];
    let cfg = ModelConfig { d: 2, iters: 4000, burn: 1500, seed: 100 + rep, ..ModelConfig::default() };
    let mut chain = GibbsChain::new(&series, &cfg).unwrap();
    chain.set_gamma_range(lo, hi);
    let draws = chain.run().unwrap();
    let probs = cp_probability(&draws.log_omega2, &draws.gamma);
    let mut top: Vec<(usize, f64)> = probs.iter().cloned().enumerate().collect();
    top.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
    println!("bounds ({lo},{hi}): true cp {cp}; top5 {:?}",
        &top[..5].iter().map(|(i,p)| format!("{}:{:.2}", i+2, p)).collect::<Vec<_>>());
}
