use num_complex::Complex64;
use pjdet::channel::{generate_iid, ChannelConfig};
use pjdet::modem::{self, Constellation};
use pjdet::numerics::{self, SeededRng};
use pjdet::sim::{self, ExperimentConfig};

fn main() {
    let cfg = ExperimentConfig::from_toml_str(r#"
schema_version = 1
seed = 20260810
snr_db = [22.0, 24.0, 25.0]

[channel]
model = "iid"
m = 128
n = 64

[modulation]
j = 64

[[detectors]]
kind = "mfb"

[[detectors]]
kind = "rzf"
rho = "zf"

[[detectors]]
kind = "pj"
label = "pj-t1"
t = 1
init = { kind = "rzf", rho = "zf", solver = { kind = "direct" } }

[[detectors]]
kind = "pj"
label = "pj-t3"
t = 3
init = { kind = "rzf", rho = "zf", solver = { kind = "direct" } }

[trials]
min_trials = 100
max_trials = 20000
min_errors = 120

[theory]
realizations = 24
"#).unwrap();
    let (result, _) = sim::run_sweep(&cfg, None).unwrap();
    let curves = sim::theory_curves(&cfg, 24).unwrap();
    println!("snr    zf_sim       zf_theory    pj1_sim      pj3_sim      pj_theory(psi)");
    for (i, &snr) in cfg.snr_db.iter().enumerate() {
        let find = |lbl: &str| result.points.iter().find(|p| p.detector == lbl && p.snr_db == snr).unwrap().ser();
        let zf_th = curves.iter().find(|c| c.detector == "zf").unwrap().ser[i];
        println!("{:5} {:.4e}  {:.4e}  {:.4e}  {:.4e}  {:.4e}", snr, find("zf"), zf_th, find("pj-t1"), find("pj-t3"),
            curves.iter().find(|c| c.detector == "pj-t3").map(|c| c.ser[i]).unwrap_or(f64::NAN));
    }

    // Independent projected-Jacobi reimplementation (literal t in 1..T
    // candidates, raw loops) on paired trials at 24 dB.
    let c = Constellation::make_qam(64, 1.0).unwrap();
    let chan = ChannelConfig::iid(128, 64, 1.0);
    let sigma_v_sq = 10f64.powf(-2.4);
    let trials = 4000u64;
    let (mut lib_err, mut ind_err) = (0u64, 0u64);
    for trial in 0..trials {
        let mut rng = SeededRng::new(777, trial);
        let real = generate_iid(&chan, &mut rng).unwrap();
        let x = modem::draw_symbols(&c, 64, &mut rng);
        let v = numerics::draw_complex_gaussian(&mut rng, 128, sigma_v_sq).unwrap();
        let xv = x.values(&c);
        let hx = numerics::matvec(&real.h, &xv).unwrap();
        let y: Vec<Complex64> = hx.iter().zip(&v).map(|(a, b)| a + b).collect();
        // library path
        let sys = pjdet::detectors::System::new(&real.h, &y, 0.0).unwrap();
        let pj = pjdet::detectors::detect_pj(&sys, &c, &pjdet::detectors::DetectorConfig::pj(3,
            pjdet::detectors::InitKind::Rzf { rho: 0.0, solver: pjdet::detectors::RzfSolver::Direct })).unwrap();
        lib_err += modem::count_symbol_errors(&x, &pj.decision).unwrap().0;
        // independent path: raw loops
        let n = 64usize;
        let a = numerics::gram(&real.h, 0.0).unwrap();
        let b = numerics::adjoint_matvec(&real.h, &y).unwrap();
        let soft0 = numerics::solve_hermitian(&a, &b).unwrap();
        let z0 = modem::slice(&c, &soft0).unwrap();
        let mut z = z0.values(&c);
        let mut best: Option<(f64, Vec<usize>)> = None;
        for _t in 1..=3usize {
            let az = numerics::matvec(&a, &z).unwrap();
            let r: Vec<Complex64> = b.iter().zip(&az).map(|(p, q)| p - q).collect();
            let xnext: Vec<Complex64> = (0..n).map(|i| z[i] + r[i] / a.get(i, i).re).collect();
            let znext = modem::slice(&c, &xnext).unwrap();
            // residual of the new candidate z_t
            let az2 = numerics::matvec(&a, &znext.values(&c)).unwrap();
            let r2: f64 = b.iter().zip(&az2).map(|(p, q)| (p - q).norm_sqr()).sum();
            if best.as_ref().map_or(true, |(m, _)| r2 < *m) {
                best = Some((r2, znext.indices.clone()));
            }
            z = znext.values(&c);
        }
        let dec = best.unwrap().1;
        ind_err += x.indices.iter().zip(&dec).filter(|(a, b)| a != b).count() as u64;
    }
    println!("\npaired 24 dB, {} trials: library pj(T=3, z0 in candidates) SER {:.4e}; independent literal pj SER {:.4e}",
        trials, lib_err as f64 / (trials as f64 * 64.0), ind_err as f64 / (trials as f64 * 64.0));
}
