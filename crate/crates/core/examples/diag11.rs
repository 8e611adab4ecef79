use abco_core::simgen::{generate, Scenario, ScenarioKind};
use abco_core::{GibbsChain, ModelConfig};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let kind = ScenarioKind::from_name(&args[1]).unwrap();
    let t: usize = args[2].parse().unwrap();
    let rep: u64 = args[3].parse().unwrap();
    let sc = Scenario::new(kind, t, 100 + rep);
    let (series, truth) = generate(&sc);
    let d = kind.default_d();
    let out = kind == ScenarioKind::LinearMeetupOutliers;
    let cfg = ModelConfig { d, iters: 4000, burn: 1500, seed: 100 + rep, use_outliers: out, ..ModelConfig::default() };
    let cp = truth.changepoints[0];
    let k = cp - d;
    let mut chain = GibbsChain::new(&series, &cfg).unwrap();
    println!("{} rep {rep}: cp {cp}; bounds {:?}", kind.name(), chain.gamma_range());
    println!("sweep | z[k-1] z[k] z[k+1] | gamma | flag(k) | mu phi1 phi2");
    let mut flag_count = 0usize;
    let mut above = 0usize;
    for i in 0..4000 {
        chain.sweep().unwrap();
        let st = chain.state();
        if st.s.get(k).copied().unwrap_or(false) { flag_count += 1; }
        let zmax = st.z[k.saturating_sub(1)..(k + 2).min(st.z.len())].iter().cloned().fold(f64::MIN, f64::max);
        if zmax > st.gamma { above += 1; }
        if i % 500 == 0 || i == 3999 {
            println!("{i:>5} | {:>6.1} {:>6.1} {:>6.1} | {:>5.1} | {} | {:.1} {:.2} {:.2}",
                st.z[k.saturating_sub(1)], st.z[k], st.z[(k + 1).min(st.z.len()-1)], st.gamma,
                st.s[k], st.mu, st.phi1, st.phi2);
        }
    }
    println!("flag rate at k: {:.2}; window-max above gamma rate: {:.2}", flag_count as f64 / 4000.0, above as f64 / 4000.0);
}
