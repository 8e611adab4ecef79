use abco_core::simgen::{generate, Scenario, ScenarioKind};
use abco_core::state::PosteriorDraws;
use abco_core::detect::cp_probability;
use abco_core::{GibbsChain, ModelConfig};

fn main() {
    let rep = 0u64;
    let sc = Scenario::new(ScenarioKind::LinearMeetupOutliers, 100, 100 + rep);
    let (series, truth) = generate(&sc);
    let cp = truth.changepoints[0];
    let cfg = ModelConfig {
        d: 2, iters: 4000, burn: 1500, seed: 100 + rep,
        ..ModelConfig::default()
    };
    let chain = GibbsChain::new(&series, &cfg).unwrap();
    println!("gamma bounds {:?} anchor {:.2}", chain.gamma_range(), chain.mu_anchor());
    let draws = chain.run().unwrap();
    let z_mean = PosteriorDraws::column_means(&draws.log_omega2);
    let probs = cp_probability(&draws.log_omega2, &draws.gamma);
    let gamma_mean = draws.gamma.iter().sum::<f64>() / draws.gamma.len() as f64;
    let mu_mean = draws.mu.iter().sum::<f64>() / draws.mu.len() as f64;
    let phi1_mean = draws.phi1.iter().sum::<f64>() / draws.phi1.len() as f64;
    let phi2_mean = draws.phi2.iter().sum::<f64>() / draws.phi2.len() as f64;
    let tr = &truth.true_trend;
    let slope_gap = (tr[cp+1] - tr[cp]) - (tr[cp-1] - tr[cp-2]);
    println!("cp {cp} slope_gap {slope_gap:.2}; gamma_mean {gamma_mean:.2} mu {mu_mean:.2} phi1 {phi1_mean:.2} phi2 {phi2_mean:.2}");
    let mut top: Vec<(usize, f64)> = probs.iter().cloned().enumerate().collect();
    top.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
    println!("top5 probs {:?}", &top[..5].iter().map(|(i,p)| format!("{}:{:.2}", i+2, p)).collect::<Vec<_>>());
    for k in cp.saturating_sub(5)..(cp+4) {
        let ki = k - 2;
        println!("inc@obs {k}: z_mean {:>6.2} prob {:.3}", z_mean[ki], probs[ki]);
    }
}
