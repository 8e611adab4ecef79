use abco_core::series::diff;
use abco_core::simgen::{generate, Scenario, ScenarioKind};
use abco_core::detect::cp_probability;
use abco_core::{GibbsChain, ModelConfig, C_OFFSET};

fn main() {
    let rep = 3u64;
    let sc = Scenario::new(ScenarioKind::LinearOneCp, 100, 100 + rep);
    let (series, truth) = generate(&sc);
    let cp = truth.changepoints[0];
    let cfg = ModelConfig {
        d: 2, iters: 4000, burn: 1500, seed: 100 + rep,
        use_sv_noise: true, use_outliers: false,
        ..ModelConfig::default()
    };
    let mut chain = GibbsChain::new(&series, &cfg).unwrap();
    // Plant the crisp state: exact trend, spiky h, gamma in the gap.
    {
        let st = chain.state_mut();
        st.beta = truth.true_trend.clone();
        let om = diff(&st.beta, 2).unwrap();
        st.omega = om;
        for t in 0..st.omega.len() {
            st.z[t] = (st.omega[t] * st.omega[t] + C_OFFSET).ln();
        }
        st.mu = -6.0;
        for t in 0..st.h.len() {
            st.h[t] = (st.z[t] + 1.27).max(st.mu);
        }
        st.gamma = -2.0;
        for t in 0..st.z.len() {
            st.s[t] = st.z[t] > st.gamma;
        }
        st.phi1 = 0.9;
        st.phi2 = -1.0;
        let resid_var = series.values.iter().zip(st.beta.iter()).map(|(y, b)| (y - b) * (y - b)).sum::<f64>() / series.len() as f64;
        let lv = resid_var.ln();
        st.sigma_eps2 = vec![resid_var; series.len()];
        st.obs_sv.log_var = vec![lv; series.len()];
        st.obs_sv.mu_eps = lv;
    }
    let draws = chain.run().unwrap();
    let probs = cp_probability(&draws.log_omega2, &draws.gamma);
    let mut top: Vec<(usize, f64)> = probs.iter().cloned().enumerate().collect();
    top.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
    println!("spike-start: true cp {cp}; top6 {:?}", &top[..6].iter().map(|(i,p)| format!("{}:{:.2}", i + 2, p)).collect::<Vec<_>>());
    let gm = draws.gamma.iter().sum::<f64>() / draws.gamma.len() as f64;
    let mm = draws.mu.iter().sum::<f64>() / draws.mu.len() as f64;
    println!("gamma_mean {gm:.2} mu_mean {mm:.2}");
}
