use std::io::Write;

use super::{McSummary, TrialResult};

pub const STEPS_HEADER: [&str; 8] = ["trial", "t_s", "pos_err_m", "vel_err_mps", "n_matched", "n_rejected", "state_dim", "flag"];

pub const SUMMARY_HEADER: [&str; 9] = [
    "profile",
    "brightness",
    "trials",
    "final_pos_err_mean_m",
    "final_pos_err_sigma_m",
    "final_vel_err_mean_mps",
    "final_vel_err_sigma_mps",
    "mean_track_len",
    "mean_craters",
];

fn f6(x: f64) -> String {
    format!("{x:.6}")
}

pub fn write_steps_csv<W: Write>(w: W, trials: &[TrialResult]) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(STEPS_HEADER)?;
    for t in trials {
        for r in &t.records {
            out.write_record([
                t.trial.to_string(),
                f6(r.t_s),
                f6(r.pos_err_m),
                f6(r.vel_err_mps),
                r.n_matched.to_string(),
                r.n_rejected.to_string(),
                r.state_dim.to_string(),
                r.flag.to_string(),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn write_summary_csv<W: Write>(w: W, summaries: &[McSummary]) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(SUMMARY_HEADER)?;
    for s in summaries {
        out.write_record([
            s.profile.clone(),
            format!("{:.2}", s.brightness),
            s.trials.to_string(),
            f6(s.final_pos_err_mean_m),
            f6(s.final_pos_err_sigma_m),
            f6(s.final_vel_err_mean_mps),
            f6(s.final_vel_err_sigma_mps),
            f6(s.mean_track_len),
            f6(s.mean_craters),
        ])?;
    }
    out.flush()?;
    Ok(())
}
