use abco_core::detect::cp_probability;
use abco_core::simgen::{generate, Scenario, ScenarioKind};
use abco_core::{GibbsChain, ModelConfig};

fn main() {
    for rep in [3u64, 4] {
        let sc = Scenario::new(ScenarioKind::LinearOneCp, 100, 100 + rep);
        let (series, truth) = generate(&sc);
        let cp = truth.changepoints[0];
        let tr = &truth.true_trend;
        let jump = (tr[cp] - tr[cp - 1]) - (tr[cp] - tr[cp - 1]).signum() * 0.0;
        let slope1 = tr[cp - 1] - tr[cp - 2];
        let slope2 = tr[cp + 1] - tr[cp];
        let noise_sd = {
            let resid: Vec<f64> = series.values.iter().zip(tr.iter()).map(|(y, m)| y - m).collect();
            (resid.iter().map(|e| e * e).sum::<f64>() / resid.len() as f64).sqrt()
        };
        println!("rep {rep}: cp={cp} level-jump={jump:.2} slope1={slope1:.3} slope2={slope2:.3} noise={noise_sd:.2}");
        for (sv, out) in [(true, true), (false, false), (true, false), (false, true)] {
            let cfg = ModelConfig {
                d: 2, iters: 4000, burn: 1500, seed: 100 + rep,
                use_sv_noise: sv, use_outliers: out,
                ..ModelConfig::default()
            };
            let draws = GibbsChain::new(&series, &cfg).unwrap().run().unwrap();
            let probs = cp_probability(&draws.log_omega2, &draws.gamma);
            let mut top: Vec<(usize, f64)> = probs.iter().cloned().enumerate().collect();
            top.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
            let mean_phi1 = draws.phi1.iter().sum::<f64>() / draws.phi1.len() as f64;
            let mean_phi2 = draws.phi2.iter().sum::<f64>() / draws.phi2.len() as f64;
            let mean_mu = draws.mu.iter().sum::<f64>() / draws.mu.len() as f64;
            let mean_gamma = draws.gamma.iter().sum::<f64>() / draws.gamma.len() as f64;
            let mean_sig: f64 = draws.sigma_eps2.iter().map(|r| r.iter().sum::<f64>() / r.len() as f64).sum::<f64>() / draws.sigma_eps2.len() as f64;
            println!("  sv={sv} out={out}: top probs {:?} phi1={mean_phi1:.2} phi2={mean_phi2:.2} mu={mean_mu:.2} gamma={mean_gamma:.2} mean_sig2={mean_sig:.2}",
                &top[..4.min(top.len())].iter().map(|(i, p)| format!("{}:{:.2}", i + 2, p)).collect::<Vec<_>>());
        }
    }
}
