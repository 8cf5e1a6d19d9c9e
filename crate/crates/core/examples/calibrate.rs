//! Prints the profile × brightness grid with detector diagnostics, for
//! tuning detector profiles. `cargo run --release --example calibrate [trials]`
//! with optional `PROFILES=<toml>` and `DENSITY=<craters per Mkm²>`.

use crater_trn::catalog::SyntheticCatalog;
use crater_trn::detect::ProfileSet;
use crater_trn::sim::{compare_profiles, SimEnv, StepFlag, TrialConfig};

fn main() {
    let trials: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20);
    let profiles = match std::env::var("PROFILES") {
        Ok(p) => ProfileSet::from_toml(&std::fs::read_to_string(p).unwrap()).unwrap(),
        Err(_) => ProfileSet::presets(),
    };
    let env = SimEnv::new(
        SyntheticCatalog {
            density_per_mkm2: std::env::var("DENSITY").map(|d| d.parse().unwrap()).unwrap_or(SyntheticCatalog::default().density_per_mkm2),
            ..Default::default()
        }
        .generate(),
        profiles,
    );
    let cfg = TrialConfig::default();
    let t0 = std::time::Instant::now();
    let cells = compare_profiles(&cfg, &["lunanet".into(), "trinary".into()], &[0.0, 0.3, -0.3], trials, true, &env).unwrap();
    for c in &cells {
        let s = &c.run.summary;
        let wrong: usize = c.run.trials.iter().map(|t| t.wrong_matches).sum();
        let lowc: usize = c.run.trials.iter().flat_map(|t| &t.records).filter(|r| r.flag == StepFlag::LowConfidence).count();
        let vis: f64 = c.run.trials.iter().flat_map(|t| &t.records).map(|r| r.n_visible as f64).sum::<f64>() / c.run.trials.iter().map(|t| t.records.len()).sum::<usize>() as f64;
        println!(
            "{:8} {:+.1}  pos {:10.2} ± {:9.2}  vel {:7.3}  track {:6.2}  craters {:6.2}  div {:2}  wrong {:5}  lowconf {:5} vis/frame {:.2}",
            s.profile, s.brightness, s.final_pos_err_mean_m, s.final_pos_err_sigma_m, s.final_vel_err_mean_mps, s.mean_track_len, s.mean_craters, s.diverged, wrong, lowc, vis
        );
    }
    eprintln!("{:?}", t0.elapsed());
}
