use abco_core::dist::{chain_rng, sample_polya_gamma};

fn main() {
    for z in [0.0f64, 2.0, 8.0, 15.0, 20.0, 40.0, 80.0] {
        let mut rng = chain_rng(9, 0);
        let n = 200_000;
        let mean = (0..n).map(|_| sample_polya_gamma(&mut rng, z)).sum::<f64>() / n as f64;
        let expect = if z == 0.0 { 0.25 } else { (z / 2.0).tanh() / (2.0 * z) };
        println!("z={z:>5}: mean {mean:.6} expect {expect:.6} rel err {:.4}", (mean - expect).abs() / expect);
    }
}
