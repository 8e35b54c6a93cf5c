use pjdet::sim::{self, ExperimentConfig};

fn main() {
    for model in ["iid", "ind"] {
        let extra = if model == "ind" { "subarrays = 16" } else { "" };
        let cfg = ExperimentConfig::from_toml_str(&format!(r#"
schema_version = 1
seed = 20260811
snr_db = [11.0]
load_sweep = [256, 512]

[channel]
model = "{model}"
m = 512
n = 512
{extra}

[modulation]
j = 4

[[detectors]]
kind = "mfb"

[[detectors]]
kind = "rzf"
rho = "lmmse"
solver = {{ kind = "cg" }}

[[detectors]]
kind = "pj"
t = 5
init = {{ kind = "rzf", rho = "lmmse", solver = {{ kind = "cg" }} }}

[trials]
min_trials = 64
max_trials = 600
min_errors = 60
"#)).unwrap();
        let t0 = std::time::Instant::now();
        let (result, _) = sim::run_sweep(&cfg, None).unwrap();
        println!("--- {model} ({:?}) ---", t0.elapsed());
        for n in [256usize, 512] {
            let find = |lbl: &str| result.points.iter().find(|p| p.detector == lbl && p.n_users == n).unwrap();
            let mfb = find("mfb"); let lmmse = find("lmmse"); let pj = find("pj-lmmse");
            println!("N={n}: mfb {:.3e} ({} err/{} tr), lmmse {:.3e}, pj {:.3e}  | pj/mfb = {:.2}, lmmse/mfb = {:.1}",
                mfb.ser(), mfb.symbol_errors, mfb.trials, lmmse.ser(), pj.ser(),
                pj.ser() / mfb.ser(), lmmse.ser() / mfb.ser());
        }
    }
}
