use pjdet::sim::{self, ExperimentConfig};

fn main() {
    let cfg = ExperimentConfig::from_toml_str(r#"
schema_version = 1
seed = 20260810
snr_db = [18.0, 20.0, 22.0, 24.0, 25.0, 26.0]

[channel]
model = "iid"
m = 128
n = 64

[modulation]
j = 64

[[detectors]]
kind = "mfb"

[[detectors]]
kind = "pj"
t = 3
init = { kind = "rzf", rho = "zf", solver = { kind = "direct" } }

[trials]
min_trials = 100
max_trials = 20000
min_errors = 120

[theory]
realizations = 24
"#).unwrap();
    let (result, _) = sim::run_sweep_with_progress(&cfg, None, |p| {
        eprintln!("n={} snr={} {}: trials={} errors={} ser={:.4e}", p.n_users, p.snr_db, p.detector, p.trials, p.symbol_errors, p.ser());
    }).unwrap();
    let curves = sim::theory_curves(&cfg, 24).unwrap();
    println!("\nsnr    mfb_sim      pj_sim       mfb_theory   pj_theory    zf_ratio_check");
    for (i, &snr) in cfg.snr_db.iter().enumerate() {
        let mfb_sim = result.points.iter().find(|p| p.detector == "mfb" && p.snr_db == snr).unwrap();
        let pj_sim = result.points.iter().find(|p| p.detector == "pj-zf" && p.snr_db == snr).unwrap();
        let mfb_th = curves.iter().find(|c| c.detector == "mfb").unwrap().ser[i];
        let pj_th = curves.iter().find(|c| c.detector == "pj-zf").unwrap().ser[i];
        println!("{:5} {:.4e} ({:>6}) {:.4e} ({:>6}) {:.4e}  {:.4e}  t/s mfb {:.2} pj {:.2}",
            snr, mfb_sim.ser(), mfb_sim.symbol_errors, pj_sim.ser(), pj_sim.symbol_errors,
            mfb_th, pj_th, mfb_th / mfb_sim.ser().max(1e-12), pj_th / pj_sim.ser().max(1e-12));
    }
}
