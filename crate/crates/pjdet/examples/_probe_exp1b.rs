use pjdet::sim::{self, ExperimentConfig};

fn run(m: usize, variants: &[(&str, &str)], trials: u64) {
    let dets: String = variants.iter().map(|(label, body)| format!(
        "[[detectors]]\nkind = \"pj\"\nlabel = \"{label}\"\n{body}\n")).collect();
    let cfg = ExperimentConfig::from_toml_str(&format!(r#"
schema_version = 1
seed = 20260812
snr_db = [11.0]

[channel]
model = "iid"
m = {m}
n = {m}

[modulation]
j = 4

[[detectors]]
kind = "mfb"

{dets}
[trials]
min_trials = {trials}
max_trials = {trials}
min_errors = 1
"#)).unwrap();
    let t0 = std::time::Instant::now();
    let (result, _) = sim::run_sweep(&cfg, None).unwrap();
    let mfb = result.points.iter().find(|p| p.detector == "mfb").unwrap().ser();
    print!("M=N={m} ({:.0?}): mfb {:.3e}", t0.elapsed(), mfb);
    for (label, _) in variants {
        let p = result.points.iter().find(|p| p.detector == *label).unwrap();
        print!(" | {} {:.3e} ({:.1}x)", label, p.ser(), p.ser() / mfb);
    }
    println!();
}

fn main() {
    let init = r#"init = { kind = "rzf", rho = "lmmse", solver = { kind = "direct" } }"#;
    run(512, &[
        ("t5", &format!("t = 5\n{init}")),
        ("t20", &format!("t = 20\n{init}")),
        ("t60", &format!("t = 60\n{init}")),
        ("t5-rho", &format!("t = 5\nrho = \"lmmse\"\n{init}")),
        ("t20-rho", &format!("t = 20\nrho = \"lmmse\"\n{init}")),
    ], 250);
    run(1024, &[
        ("t5", &format!("t = 5\n{init}")),
        ("t20", &format!("t = 20\n{init}")),
    ], 120);
}
