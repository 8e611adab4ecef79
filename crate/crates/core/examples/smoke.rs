use abco_core::eval::{fit_method, score_replicate, Method};
use abco_core::simgen::{generate, Scenario, ScenarioKind};
use abco_core::ModelConfig;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let kind = ScenarioKind::from_name(args.get(1).map(|s| s.as_str()).unwrap_or("linear-one-cp")).unwrap();
    let t: usize = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(100);
    let reps: usize = args.get(3).map(|s| s.parse().unwrap()).unwrap_or(5);
    let iters: usize = args.get(4).map(|s| s.parse().unwrap()).unwrap_or(4000);
    let burn: usize = args.get(5).map(|s| s.parse().unwrap()).unwrap_or(1500);
    let method = Method::from_name(args.get(6).map(|s| s.as_str()).unwrap_or("abco")).unwrap();
    let sv: bool = args.get(7).map(|s| s.parse().unwrap()).unwrap_or(true);
    let out: bool = args.get(8).map(|s| s.parse().unwrap()).unwrap_or(true);

    let mut aris = Vec::new();
    let mut rands = Vec::new();
    let mut zeros = 0;
    let start = std::time::Instant::now();
    for rep in 0..reps {
        let base: u64 = std::env::var("SEED_BASE").ok().and_then(|v| v.parse().ok()).unwrap_or(100);
        let sc = Scenario::new(kind, t, base + rep as u64);
        let (series, truth) = generate(&sc);
        let cfg = ModelConfig {
            d: kind.default_d(),
            iters,
            burn,
            seed: base + rep as u64,
            use_sv_noise: sv,
            use_outliers: out,
            ..ModelConfig::default()
        };
        let (cps, flagged) = fit_method(method, &series, kind, &cfg).unwrap();
        let score = score_replicate(&cps, &flagged, &truth.changepoints, &truth.outliers, series.len()).unwrap();
        println!(
            "rep {rep}: true={:?} pred={:?} ari={:.3} rand={:.3} tpr={:?} fpr={:?}",
            truth.changepoints, cps, score.adj_rand, score.rand, score.tpr, score.fpr
        );
        if cps.is_empty() { zeros += 1; }
        aris.push(score.adj_rand);
        rands.push(score.rand);
    }
    let mean_ari = aris.iter().sum::<f64>() / aris.len() as f64;
    let mean_rand = rands.iter().sum::<f64>() / rands.len() as f64;
    println!("== {} T={t} reps={reps}: mean ARI {mean_ari:.3}, mean Rand {mean_rand:.3}, zero-CP {zeros}, elapsed {:.1}s", kind.name(), start.elapsed().as_secs_f64());
}
