use abco_core::eval::run_regression_benchmark;
use abco_core::simgen::{Scenario, ScenarioKind};
use abco_core::ModelConfig;

fn main() {
    let sc = Scenario::new(ScenarioKind::RegressionThreePred, 100, 100);
    let cfg = ModelConfig {
        d: 2, iters: 3000, burn: 1000, seed: 100,
        ..ModelConfig::default()
    };
    let start = std::time::Instant::now();
    let bench = run_regression_benchmark(&sc, 10, &cfg).unwrap();
    println!("rand_avg {:?}", bench.rand_avg);
    println!("adj_rand {:?}", bench.adj_rand_avg);
    println!("avg_no_cp {:?}", bench.avg_no_cp);
    println!("failures {}; elapsed {:.1}s", bench.n_failures, start.elapsed().as_secs_f64());
}
