use super::{run_trial, SimEnv, SimError, TrialConfig, TrialResult};

/// Cross-trial statistics at one step index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepStats {
    pub t_s: f64,
    /// Trials that reached this step.
    pub trials: usize,
    pub pos_err_mean_m: f64,
    pub pos_err_sigma_m: f64,
    pub vel_err_mean_mps: f64,
    pub vel_err_sigma_mps: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McSummary {
    pub profile: String,
    pub brightness: f64,
    /// Trials executed.
    pub trials: usize,
    /// Trials stopped at the bail-out threshold.
    pub diverged: usize,
    /// Trials contributing to the statistics below.
    pub included: usize,
    pub steps: Vec<StepStats>,
    pub final_pos_err_mean_m: f64,
    pub final_pos_err_sigma_m: f64,
    pub final_vel_err_mean_mps: f64,
    pub final_vel_err_sigma_mps: f64,
    /// Mean frames matched per crater, pooled over all trials.
    pub mean_track_len: f64,
    /// Mean distinct craters matched per trial.
    pub mean_craters: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloRun {
    pub trials: Vec<TrialResult>,
    pub summary: McSummary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonCell {
    pub profile: String,
    pub brightness: f64,
    pub run: MonteCarloRun,
}

/// Mean and population standard deviation; NaN for an empty sample.
fn mean_sigma(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = xs.clone().count();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.clone().sum::<f64>() / n as f64;
    let var = xs.map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
    (mean, var.sqrt())
}

/// Pure fold over trial outputs.
pub fn summarize(profile: &str, brightness: f64, trials: &[TrialResult], include_diverged: bool) -> McSummary {
    let used: Vec<&TrialResult> = trials.iter().filter(|t| include_diverged || !t.diverged).collect();
    let longest = used.iter().map(|t| t.records.len()).max().unwrap_or(0);
    let steps = (0..longest)
        .map(|k| {
            let at: Vec<_> = used.iter().filter_map(|t| t.records.get(k)).collect();
            let (pm, ps) = mean_sigma(at.iter().map(|r| r.pos_err_m));
            let (vm, vs) = mean_sigma(at.iter().map(|r| r.vel_err_mps));
            StepStats {
                t_s: at[0].t_s,
                trials: at.len(),
                pos_err_mean_m: pm,
                pos_err_sigma_m: ps,
                vel_err_mean_mps: vm,
                vel_err_sigma_mps: vs,
            }
        })
        .collect();
    let (fpm, fps) = mean_sigma(used.iter().map(|t| t.final_pos_err_m));
    let (fvm, fvs) = mean_sigma(used.iter().map(|t| t.final_vel_err_mps));
    let (mean_track_len, _) = mean_sigma(used.iter().flat_map(|t| t.track_lengths.iter().map(|&l| l as f64)));
    let (mean_craters, _) = mean_sigma(used.iter().map(|t| t.craters as f64));
    McSummary {
        profile: profile.to_string(),
        brightness,
        trials: trials.len(),
        diverged: trials.iter().filter(|t| t.diverged).count(),
        included: used.len(),
        steps,
        final_pos_err_mean_m: fpm,
        final_pos_err_sigma_m: fps,
        final_vel_err_mean_mps: fvm,
        final_vel_err_sigma_mps: fvs,
        mean_track_len: if mean_track_len.is_nan() { 0.0 } else { mean_track_len },
        mean_craters,
    }
}

fn check_trials(n_trials: usize) -> Result<(), SimError> {
    if n_trials == 0 {
        return Err(super::invalid("trials", "must be at least 1"));
    }
    Ok(())
}

/// Runs trials `0..n_trials` one after another.
pub fn monte_carlo_sequential(cfg: &TrialConfig, n_trials: usize, include_diverged: bool, env: &SimEnv) -> Result<MonteCarloRun, SimError> {
    check_trials(n_trials)?;
    cfg.validate()?;
    let trials = (0..n_trials).map(|i| run_trial(cfg, i, env)).collect::<Result<Vec<_>, _>>()?;
    let summary = summarize(&cfg.profile, cfg.brightness, &trials, include_diverged);
    Ok(MonteCarloRun { trials, summary })
}

/// Runs trials on the rayon pool; results are identical to the sequential
/// version because every trial owns its random streams.
#[cfg(feature = "parallel")]
pub fn monte_carlo_parallel(cfg: &TrialConfig, n_trials: usize, include_diverged: bool, env: &SimEnv) -> Result<MonteCarloRun, SimError> {
    use rayon::prelude::*;
    check_trials(n_trials)?;
    cfg.validate()?;
    let trials = (0..n_trials).into_par_iter().map(|i| run_trial(cfg, i, env)).collect::<Result<Vec<_>, _>>()?;
    let summary = summarize(&cfg.profile, cfg.brightness, &trials, include_diverged);
    Ok(MonteCarloRun { trials, summary })
}

pub fn monte_carlo(cfg: &TrialConfig, n_trials: usize, include_diverged: bool, env: &SimEnv) -> Result<MonteCarloRun, SimError> {
    #[cfg(feature = "parallel")]
    return monte_carlo_parallel(cfg, n_trials, include_diverged, env);
    #[cfg(not(feature = "parallel"))]
    return monte_carlo_sequential(cfg, n_trials, include_diverged, env);
}

/// Profile × brightness grid, row-major by profile. All cells share trial
/// seeds, so differences between cells are paired.
pub fn compare_profiles(
    template: &TrialConfig,
    profiles: &[String],
    brightness: &[f64],
    n_trials: usize,
    include_diverged: bool,
    env: &SimEnv,
) -> Result<Vec<ComparisonCell>, SimError> {
    for p in profiles {
        env.profiles.get(p)?;
    }
    let mut cells = Vec::with_capacity(profiles.len() * brightness.len());
    for p in profiles {
        for &b in brightness {
            let cfg = TrialConfig { profile: p.clone(), brightness: b, ..template.clone() };
            let run = monte_carlo(&cfg, n_trials, include_diverged, env)?;
            cells.push(ComparisonCell { profile: p.clone(), brightness: b, run });
        }
    }
    Ok(cells)
}
