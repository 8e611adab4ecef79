use abco_core::regression::fit_regression;
use abco_core::simgen::{generate, Scenario, ScenarioKind};
use abco_core::ModelConfig;

fn main() {
    let rep = 0u64;
    let sc = Scenario::new(ScenarioKind::RegressionThreePred, 100, 100 + rep);
    let (series, truth) = generate(&sc);
    let cfg = ModelConfig { d: 2, iters: 3000, burn: 1000, seed: 100 + rep, ..ModelConfig::default() };
    let fit = fit_regression(&series, &cfg).unwrap();
    let pc = truth.predictor_changepoints.as_ref().unwrap();
    println!("true cps pred1: {:?}; declared: {:?}", pc[0], fit.changepoints[0]);
    // fitted coefficient profile for pred 1
    let m = fit.beta[0].len();
    let t_len = series.len();
    let mut bmean = vec![0.0; t_len];
    for row in &fit.beta[0] { for (a, b) in bmean.iter_mut().zip(row) { *a += b; } }
    for v in bmean.iter_mut() { *v /= m as f64; }
    let mut zmean = vec![0.0; t_len - 2];
    for row in &fit.log_omega2[0] { for (a, b) in zmean.iter_mut().zip(row) { *a += b; } }
    for v in zmean.iter_mut() { *v /= m as f64; }
    let gm = fit.gamma[0].iter().sum::<f64>() / m as f64;
    println!("gamma mean {gm:.2}");
    let mut top: Vec<(usize, f64)> = fit.cp_prob[0].iter().cloned().enumerate().collect();
    top.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
    println!("top6 probs {:?}", &top[..6].iter().map(|(i,p)| format!("{}:{:.2}", i+2, p)).collect::<Vec<_>>());
    for &cp in &pc[0] {
        println!("around true cp {cp}:");
        for t in cp.saturating_sub(2)..(cp+3).min(t_len) {
            let z = if t >= 2 { zmean[t-2] } else { f64::NAN };
            println!("  t {t}: truth {:.2} betamean {:.2} zmean {:.2}", truth.true_trend[t], bmean[t], z);
        }
    }
}
