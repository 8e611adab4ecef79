use abco_core::detect::{cp_probability, declare_changepoints};
use abco_core::dist::{chain_rng, randn};
use abco_core::{GibbsChain, ModelConfig, TimeSeries};

fn main() {
    let mut zero_runs = 0;
    let reps = 20;
    for rep in 0..reps {
        let mut rng = chain_rng(900 + rep, 3);
        let y: Vec<f64> = (0..200).map(|_| randn(&mut rng)).collect();
        let cfg = ModelConfig {
            d: 1, iters: 2000, burn: 800, seed: 900 + rep,
            ..ModelConfig::default()
        };
        let draws = GibbsChain::new(&TimeSeries::new(y), &cfg).unwrap().run().unwrap();
        let probs = cp_probability(&draws.log_omega2, &draws.gamma);
        let cps = declare_changepoints(&probs, cfg.cp_prob_cutoff, cfg.min_cp_separation);
        if cps.is_empty() { zero_runs += 1; } else { println!("rep {rep}: cps {cps:?}"); }
    }
    println!("null data: {zero_runs}/{reps} runs with zero changepoints");
}
