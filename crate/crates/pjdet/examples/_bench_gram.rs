use pjdet::channel::{generate_iid, ChannelConfig};
use pjdet::numerics::{gram, SeededRng, draw_complex_gaussian, adjoint_matvec, CholeskyFactor};
use std::time::Instant;

fn main() {
    let mut rng = SeededRng::new(1, 0);
    let cfg = ChannelConfig::iid(512, 512, 1.0);
    let t0 = Instant::now();
    let r = generate_iid(&cfg, &mut rng).unwrap();
    println!("channel gen 512x512: {:?}", t0.elapsed());
    let t0 = Instant::now();
    let g = gram(&r.h, 0.0).unwrap();
    let dt = t0.elapsed();
    let macs = 512.0f64 * 512.0 * 513.0 / 2.0;
    println!("gram 512: {:?}  ({:.2} GMAC/s, {:.2} GFLOP/s)", dt, macs / dt.as_secs_f64() / 1e9, 8.0 * macs / dt.as_secs_f64() / 1e9);
    let mut g2 = g.clone();
    g2.add_real_diagonal(0.1);
    let t0 = Instant::now();
    let f = CholeskyFactor::factor(&g2).unwrap();
    println!("cholesky 512: {:?} ({} macs)", t0.elapsed(), f.factor_macs());
    let y = draw_complex_gaussian(&mut rng, 512, 1.0).unwrap();
    let t0 = Instant::now();
    let b = adjoint_matvec(&r.h, &y).unwrap();
    println!("adjoint 512: {:?} (b[0]={})", t0.elapsed(), b[0]);
}
