use abco_core::simgen::{generate, Scenario, ScenarioKind};
use abco_core::state::PosteriorDraws;
use abco_core::{GibbsChain, ModelConfig};

fn main() {
    let rep = 3u64;
    let sc = Scenario::new(ScenarioKind::LinearOneCp, 100, 100 + rep);
    let (series, truth) = generate(&sc);
    let cp = truth.changepoints[0];
    let cfg = ModelConfig {
        d: 2, iters: 4000, burn: 1500, seed: 100 + rep,
        ..ModelConfig::default()
    };
    let draws = GibbsChain::new(&series, &cfg).unwrap().run().unwrap();
    let beta_mean = PosteriorDraws::column_means(&draws.beta);
    let z_mean = PosteriorDraws::column_means(&draws.log_omega2);
    let zeta_mean = PosteriorDraws::column_means(&draws.zeta);
    let sig_mean = PosteriorDraws::column_means(&draws.sigma_eps2);
    let gamma_mean = draws.gamma.iter().sum::<f64>() / draws.gamma.len() as f64;
    println!("true cp at {cp}; gamma_mean {gamma_mean:.2}");
    println!("  t |      y |  truth | beta_mean | zeta_mean | sig2 | z_mean(inc t-2)");
    for t in cp.saturating_sub(6)..(cp + 6).min(series.len()) {
        let z = if t >= 2 { z_mean[t - 2] } else { f64::NAN };
        println!(
            "{t:>4} | {:>6.2} | {:>6.2} | {:>9.2} | {:>9.2} | {:>4.1} | {:>6.2}",
            series.values[t], truth.true_trend[t], beta_mean[t], zeta_mean[t], sig_mean[t], z
        );
    }
    // max |zeta| anywhere
    let max_zeta = zeta_mean.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    println!("max |zeta_mean| = {max_zeta:.2}");
}
