//! Batch runs: TOML configuration, output files and reproducibility
//! manifests.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{load_catalog, CatalogError, CatalogSource, CraterCatalog, SyntheticCatalog};
use crate::detect::ProfileSet;
use crate::sim::{compare_profiles, monte_carlo, write_steps_csv, write_summary_csv, McSummary, SimEnv, SimError, TrialConfig};

pub const STEPS_FILE: &str = "steps.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const MANIFEST_FILE: &str = "manifest.toml";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot parse config: {0}")]
    Parse(String),
    #[error("invalid value for `{key}`: {msg}")]
    Invalid { key: String, msg: String },
}

fn invalid(key: impl Into<String>, msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { key: key.into(), msg: msg.into() }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Sim(SimError),
    #[error("catalog checksum {actual} does not match manifest {expected}")]
    ChecksumMismatch { expected: String, actual: String },
    #[error("all {0} trials diverged")]
    AllDiverged(usize),
}

impl From<SimError> for RunError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Config { key, msg } => RunError::Config(ConfigError::Invalid { key: format!("trial.{key}"), msg }),
            other => RunError::Sim(other),
        }
    }
}

impl RunError {
    /// 1 configuration, 2 I/O, 3 every trial diverged.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Io { .. } | RunError::Catalog(CatalogError::Io { .. }) => 2,
            RunError::AllDiverged(_) => 3,
            _ => 1,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io { path: path.to_path_buf(), source }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Run,
    Compare,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum CatalogSpec {
    Synthetic(SyntheticCatalog),
    File {
        path: PathBuf,
        #[serde(default = "default_file_kind")]
        kind: CatalogSource,
    },
}

fn default_file_kind() -> CatalogSource {
    CatalogSource::SmallDb
}

impl Default for CatalogSpec {
    fn default() -> Self {
        CatalogSpec::Synthetic(SyntheticCatalog::default())
    }
}

impl CatalogSpec {
    pub fn load(&self) -> Result<CraterCatalog, RunError> {
        match self {
            CatalogSpec::Synthetic(s) => Ok(s.generate()),
            CatalogSpec::File { path, kind } => Ok(load_catalog(path, *kind)?),
        }
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if let CatalogSpec::Synthetic(s) = self {
            if !(s.density_per_mkm2 > 0.0 && s.density_per_mkm2.is_finite()) {
                return Err(invalid("catalog.density_per_mkm2", "must be > 0"));
            }
            if !(s.min_diameter_km > 0.0 && s.max_diameter_km > s.min_diameter_km && s.max_diameter_km.is_finite()) {
                return Err(invalid("catalog.min_diameter_km", "need 0 < min_diameter_km < max_diameter_km"));
            }
            if !(s.slope > 0.0 && s.slope.is_finite()) {
                return Err(invalid("catalog.slope", "must be > 0"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompareSpec {
    pub profiles: Vec<String>,
    pub brightness: Vec<f64>,
}

impl Default for CompareSpec {
    fn default() -> Self {
        Self { profiles: vec!["lunanet".into(), "trinary".into()], brightness: vec![0.0, 0.3, -0.3] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub trials: usize,
    /// Keep trials stopped at the bail-out threshold in the statistics.
    pub include_diverged: bool,
    pub trial: TrialConfig,
    pub catalog: CatalogSpec,
    pub compare: CompareSpec,
    /// Detector profiles added to, or replacing, the built-in presets.
    pub profiles: ProfileSet,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            trials: 20,
            include_diverged: true,
            trial: TrialConfig::default(),
            catalog: CatalogSpec::default(),
            compare: CompareSpec::default(),
            profiles: ProfileSet::default(),
        }
    }
}

/// Command-line overrides applied on top of a loaded configuration.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub profile: Option<String>,
    pub brightness: Option<f64>,
    pub catalog: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }

    /// Built-in presets overlaid with the configured profiles.
    pub fn profile_set(&self) -> ProfileSet {
        let mut set = ProfileSet::presets();
        for (name, p) in &self.profiles.0 {
            set.insert(name.clone(), p.clone());
        }
        set
    }

    /// Materializes every default so the result is self-contained.
    pub fn resolved(&self) -> Self {
        Self { profiles: self.profile_set(), ..self.clone() }
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(t) = o.trials {
            self.trials = t;
        }
        if let Some(s) = o.seed {
            self.trial.seed = s;
        }
        if let Some(p) = &o.profile {
            self.trial.profile = p.clone();
            self.compare.profiles = vec![p.clone()];
        }
        if let Some(b) = o.brightness {
            self.trial.brightness = b;
            self.compare.brightness = vec![b];
        }
        if let Some(path) = &o.catalog {
            self.catalog = CatalogSpec::File { path: path.clone(), kind: CatalogSource::SmallDb };
        }
    }

    /// Relative catalog paths are taken relative to `base`.
    pub fn rebase_paths(&mut self, base: &Path) {
        if let CatalogSpec::File { path, .. } = &mut self.catalog {
            if path.is_relative() {
                *path = base.join(&*path);
            }
        }
    }

    pub fn validate(&self, command: Command) -> Result<(), ConfigError> {
        if self.trials == 0 {
            return Err(invalid("trials", "must be at least 1"));
        }
        self.trial.validate().map_err(|e| match RunError::from(e) {
            RunError::Config(c) => c,
            other => invalid("trial", other.to_string()),
        })?;
        self.catalog.validate()?;
        let set = self.profile_set();
        for (name, p) in &set.0 {
            p.validate(name).map_err(|e| invalid(format!("profiles.{name}"), e.to_string()))?;
        }
        match command {
            Command::Run => {
                set.get(&self.trial.profile).map_err(|e| invalid("trial.profile", e.to_string()))?;
            }
            Command::Compare => {
                if self.compare.profiles.is_empty() {
                    return Err(invalid("compare.profiles", "list is empty"));
                }
                for p in &self.compare.profiles {
                    set.get(p).map_err(|e| invalid("compare.profiles", e.to_string()))?;
                }
                if self.compare.brightness.is_empty() {
                    return Err(invalid("compare.brightness", "list is empty"));
                }
                if let Some(b) = self.compare.brightness.iter().find(|b| !b.is_finite() || **b <= -1.0) {
                    return Err(invalid("compare.brightness", format!("{b} must be a finite offset above -1")));
                }
            }
        }
        Ok(())
    }
}

/// Everything needed to reproduce an output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: Command,
    pub seed: u64,
    pub catalog_checksum: String,
    /// Output file names, relative to the manifest's directory.
    pub outputs: Vec<String>,
    pub config: RunConfig,
}

impl RunManifest {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest serializes")
    }
}

/// A configuration file or a manifest written by a previous run.
#[derive(Debug, Clone, PartialEq)]
pub enum RunInput {
    Config(RunConfig),
    Manifest(RunManifest),
}

impl RunInput {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        if table.contains_key("tool_version") && table.contains_key("config") {
            let m: RunManifest = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
            Ok(RunInput::Manifest(m))
        } else {
            Ok(RunInput::Config(RunConfig::from_toml(text)?))
        }
    }

    /// Reads `path`; relative catalog paths resolve against its directory.
    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        let mut input = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        match &mut input {
            RunInput::Config(c) => c.rebase_paths(base),
            RunInput::Manifest(m) => m.config.rebase_paths(base),
        }
        Ok(input)
    }

    pub fn config(&self) -> &RunConfig {
        match self {
            RunInput::Config(c) => c,
            RunInput::Manifest(m) => &m.config,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub summaries: Vec<McSummary>,
    pub outputs: Vec<PathBuf>,
    pub manifest: RunManifest,
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<fs::File>) -> Result<(), RunError>) -> Result<(), RunError> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    f(&mut w)?;
    std::io::Write::flush(&mut w).map_err(io_err(path))
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> RunError + '_ {
    move |e| RunError::Io { path: path.to_path_buf(), source: std::io::Error::other(e) }
}

/// Runs `command` and writes its CSVs and manifest into `out_dir`. When
/// `expected_checksum` is given the catalog must match it.
pub fn execute(cfg: &RunConfig, command: Command, out_dir: &Path, expected_checksum: Option<&str>) -> Result<RunOutcome, RunError> {
    cfg.validate(command)?;
    let cfg = cfg.resolved();
    let catalog = cfg.catalog.load()?;
    let checksum = catalog.checksum();
    if let Some(expected) = expected_checksum {
        if expected != checksum {
            return Err(RunError::ChecksumMismatch { expected: expected.to_string(), actual: checksum });
        }
    }
    let env = SimEnv::new(catalog, cfg.profiles.clone());

    let (summaries, trials_run, diverged, steps) = match command {
        Command::Run => {
            let run = monte_carlo(&cfg.trial, cfg.trials, cfg.include_diverged, &env)?;
            let d = run.summary.diverged;
            (vec![run.summary], cfg.trials, d, Some(run.trials))
        }
        Command::Compare => {
            let cells = compare_profiles(&cfg.trial, &cfg.compare.profiles, &cfg.compare.brightness, cfg.trials, cfg.include_diverged, &env)?;
            let summaries: Vec<McSummary> = cells.into_iter().map(|c| c.run.summary).collect();
            let n = summaries.iter().map(|s| s.trials).sum();
            let d = summaries.iter().map(|s| s.diverged).sum();
            (summaries, n, d, None)
        }
    };

    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let mut names = Vec::new();
    if let Some(trials) = &steps {
        let path = out_dir.join(STEPS_FILE);
        write_file(&path, |w| write_steps_csv(w, trials).map_err(csv_err(&path)))?;
        names.push(STEPS_FILE.to_string());
    }
    let path = out_dir.join(SUMMARY_FILE);
    write_file(&path, |w| write_summary_csv(w, &summaries).map_err(csv_err(&path)))?;
    names.push(SUMMARY_FILE.to_string());

    let manifest = RunManifest {
        tool_version: TOOL_VERSION.to_string(),
        command,
        seed: cfg.trial.seed,
        catalog_checksum: checksum,
        outputs: names.clone(),
        config: cfg,
    };
    let mpath = out_dir.join(MANIFEST_FILE);
    fs::write(&mpath, manifest.to_toml()).map_err(io_err(&mpath))?;

    if diverged == trials_run {
        return Err(RunError::AllDiverged(trials_run));
    }
    Ok(RunOutcome { summaries, outputs: names.iter().map(|n| out_dir.join(n)).collect(), manifest })
}

/// Re-executes a manifest, checking the catalog checksum.
pub fn replay(manifest: &RunManifest, out_dir: &Path) -> Result<RunOutcome, RunError> {
    execute(&manifest.config, manifest.command, out_dir, Some(&manifest.catalog_checksum))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> RunConfig {
        let mut c = RunConfig { trials: 2, ..Default::default() };
        c.trial.duration_s = 25.0;
        c
    }

    #[test]
    fn empty_config_is_all_defaults() {
        assert_eq!(RunConfig::from_toml("").unwrap(), RunConfig::default());
    }

    #[test]
    fn unknown_key_is_named() {
        let e = RunConfig::from_toml("[trial]\nbogus = 1").unwrap_err().to_string();
        assert!(e.contains("bogus"), "{e}");
    }

    #[test]
    fn zero_dt_names_dt() {
        let c = RunConfig::from_toml("[trial]\ndT = 0.0").unwrap();
        let e = c.validate(Command::Run).unwrap_err().to_string();
        assert!(e.contains("`trial.dT`"), "{e}");
    }

    #[test]
    fn unknown_profile_rejected() {
        let c = RunConfig::from_toml("[compare]\nprofiles = [\"lunanet\", \"mystery\"]").unwrap();
        assert!(c.validate(Command::Run).is_ok());
        let e = c.validate(Command::Compare).unwrap_err().to_string();
        assert!(e.contains("compare.profiles") && e.contains("mystery"), "{e}");
    }

    #[test]
    fn catalog_spec_forms() {
        let c = RunConfig::from_toml("[catalog]\nsource = \"file\"\npath = \"craters.csv\"").unwrap();
        assert_eq!(c.catalog, CatalogSpec::File { path: "craters.csv".into(), kind: CatalogSource::SmallDb });
        let c = RunConfig::from_toml("[catalog]\nsource = \"synthetic\"\nseed = 4").unwrap();
        assert_eq!(c.catalog, CatalogSpec::Synthetic(SyntheticCatalog { seed: 4, ..Default::default() }));
        let mut f = RunConfig::from_toml("[catalog]\nsource = \"file\"\npath = \"a.csv\"").unwrap();
        f.rebase_paths(Path::new("/x"));
        assert_eq!(f.catalog, CatalogSpec::File { path: "/x/a.csv".into(), kind: CatalogSource::SmallDb });
    }

    #[test]
    fn resolved_config_round_trips() {
        let mut c = small().resolved();
        c.trial.measurement_noise_px = Some(0.75);
        let back = RunConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(back, c);
        assert!(back.profiles.get("trinary").is_ok());
    }

    #[test]
    fn overrides_apply() {
        let mut c = RunConfig::default();
        c.apply(&Overrides { trials: Some(3), seed: Some(8), profile: Some("trinary".into()), brightness: Some(0.3), catalog: None });
        assert_eq!((c.trials, c.trial.seed, c.trial.profile.as_str(), c.trial.brightness), (3, 8, "trinary", 0.3));
        assert_eq!(c.compare.profiles, vec!["trinary".to_string()]);
    }

    #[test]
    fn run_writes_outputs_and_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let out = execute(&small(), Command::Run, dir.path(), None).unwrap();
        for f in [STEPS_FILE, SUMMARY_FILE, MANIFEST_FILE] {
            assert!(dir.path().join(f).is_file(), "{f}");
        }
        let text = fs::read_to_string(dir.path().join(MANIFEST_FILE)).unwrap();
        let RunInput::Manifest(m) = RunInput::parse(&text).unwrap() else { panic!("not a manifest") };
        assert_eq!(m, out.manifest);
        assert_eq!(m.outputs, vec![STEPS_FILE.to_string(), SUMMARY_FILE.to_string()]);
    }

    #[test]
    fn compare_writes_grid() {
        let dir = tempfile::tempdir().unwrap();
        let out = execute(&small(), Command::Compare, dir.path(), None).unwrap();
        assert_eq!(out.summaries.len(), 6);
        assert!(!dir.path().join(STEPS_FILE).exists());
        let text = fs::read_to_string(dir.path().join(SUMMARY_FILE)).unwrap();
        assert_eq!(text.lines().count(), 7);
    }

    #[test]
    fn checksum_mismatch_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let e = execute(&small(), Command::Run, dir.path(), Some("00")).unwrap_err();
        assert!(matches!(e, RunError::ChecksumMismatch { .. }));
        assert_eq!(e.exit_code(), 1);
    }

    #[test]
    fn all_diverged_exits_three() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = small();
        c.trial.bailout_m = 1e-9;
        let e = execute(&c, Command::Run, dir.path(), None).unwrap_err();
        assert_eq!(e.exit_code(), 3);
        assert!(dir.path().join(STEPS_FILE).is_file());
    }

    #[test]
    fn missing_catalog_is_io() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = small();
        c.catalog = CatalogSpec::File { path: dir.path().join("absent.csv"), kind: CatalogSource::SmallDb };
        assert_eq!(execute(&c, Command::Run, dir.path(), None).unwrap_err().exit_code(), 2);
    }
}
