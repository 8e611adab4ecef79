use abco_core::simgen::{generate, Scenario, ScenarioKind};
use abco_core::{GibbsChain, ModelConfig};

fn main() {
    let rep = 3u64;
    let sc = Scenario::new(ScenarioKind::LinearOneCp, 100, 100 + rep);
    let (series, truth) = generate(&sc);
    let cp = truth.changepoints[0]; // 62 -> increments 60, 61
    let cfg = ModelConfig {
        d: 2, iters: 300, burn: 100, seed: 100 + rep,
        use_sv_noise: false, use_outliers: false,
        ..ModelConfig::default()
    };
    let mut chain = GibbsChain::new(&series, &cfg).unwrap();
    println!("sweep |  z[cp-2]  z[cp-1] |  h[cp-2]  h[cp-1] |    mu  phi1  phi2 gamma |  sig2 | nflag");
    for i in 0..200 {
        chain.sweep().unwrap();
        if i % 10 == 0 || i < 15 {
            let st = chain.state();
            let k = cp - 2;
            let nflag = st.s.iter().filter(|&&b| b).count();
            println!(
                "{i:>5} | {:>8.2} {:>8.2} | {:>8.2} {:>8.2} | {:>5.2} {:>5.2} {:>5.2} {:>5.2} | {:>5.2} | {nflag}",
                st.z[k], st.z[k + 1], st.h[k], st.h[k + 1], st.mu, st.phi1, st.phi2, st.gamma,
                st.sigma_eps2[0]
            );
        }
    }
}
