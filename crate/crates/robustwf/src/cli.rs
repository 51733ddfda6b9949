//! Reproducible experiment driver behind the thin binary: JSON design
//! configs in, JSON results and CSV curves out, every artifact accompanied by
//! a manifest naming the exact config hash and seed.
//!
//! Exit-code contract (stable for scripting): 0 success, 2 configuration or
//! usage error, 3 solver failure, 4 input mismatch (e.g. a result file
//! evaluated against a different scenario than it was designed for).

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::annular::{design_annular, AnnularSet, DmdsdrConfig, IterationTrace};
use crate::eval::{antenna_pattern, default_azimuth_grid, sample_annular, sample_spherical, sinr};
use crate::linalg::{to_db, CVector};
use crate::result::{DesignError, DesignResult};
use crate::scenario::{ArrayGeometry, NoiseStructure, PathSpec, ScenarioConfig};
use crate::spherical::{design_spherical, DmsdrConfig, SphericalSet};

/// Command failure with its process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Unreadable, unparsable, or invalid configuration / usage (exit 2).
    #[error("configuration error: {0}")]
    Config(String),
    /// A design subproblem failed to certify optimality (exit 3).
    #[error("solver failure: {0}")]
    Solver(String),
    /// Inputs that do not belong together, e.g. scenario hash mismatch
    /// between a result file and the supplied config (exit 4).
    #[error("input mismatch: {0}")]
    Mismatch(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Mismatch(_) => 4,
        }
    }
}

fn design_err(e: DesignError) -> CliError {
    match e {
        DesignError::Scenario(_) | DesignError::Invalid(_) => CliError::Config(e.to_string()),
        DesignError::Conic(_)
        | DesignError::SolverFailed { .. }
        | DesignError::Diverged { .. } => CliError::Solver(e.to_string()),
    }
}

/// Command-line overrides applied on top of the JSON config.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    /// Randomization trials for designs; sample count for `eval sinr-samples`.
    pub trials: Option<usize>,
    pub quiet: bool,
}

/// Design input for the spherical algorithm.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SphericalRunConfig {
    pub scenario: ScenarioConfig,
    pub uncertainty: SphericalSet,
    #[serde(default)]
    pub design: DmsdrConfig,
}

/// Design input for the annular algorithm.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnnularRunConfig {
    pub scenario: ScenarioConfig,
    pub uncertainty: AnnularSet,
    #[serde(default)]
    pub design: DmdsdrConfig,
}

/// Saved design plus enough provenance to validate later evaluations.
#[derive(Debug, Serialize, Deserialize)]
pub struct ResultFile {
    pub algorithm: String,
    pub scenario_sha256: String,
    pub result: DesignResult,
}

/// Provenance record written atomically next to every command's outputs.
#[derive(Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub algorithm: String,
    pub config_sha256: String,
    pub rng_seed: u64,
    pub sdp_tolerance: f64,
    pub wall_time_seconds: f64,
    pub outputs: Vec<String>,
}

/// SHA-256 of the canonical JSON form of a scenario.
pub fn scenario_hash(scenario: &ScenarioConfig) -> String {
    let text = serde_json::to_string(scenario).expect("scenario serializes");
    hex::encode(Sha256::digest(text.as_bytes()))
}

fn hash_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Atomic write: temp file in the target directory, then rename.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| CliError::Config(format!("create {dir:?}: {e}")))?;
    let tmp = dir.join(format!(
        ".{}.tmp",
        path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or("out".into())
    ));
    fs::write(&tmp, contents).map_err(|e| CliError::Config(format!("write {tmp:?}: {e}")))?;
    fs::rename(&tmp, path).map_err(|e| CliError::Config(format!("rename to {path:?}: {e}")))?;
    Ok(())
}

fn read_config(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Config(format!("read {path:?}: {e}")))
}

fn parse<T: serde::de::DeserializeOwned>(text: &str, what: &str) -> Result<T, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Config(format!("parse {what}: {e}")))
}

fn write_manifest(
    manifest_path: &Path,
    command: &str,
    algorithm: &str,
    config_sha256: &str,
    rng_seed: u64,
    sdp_tolerance: f64,
    started: Instant,
    outputs: &[PathBuf],
) -> Result<(), CliError> {
    let manifest = RunManifest {
        command: command.into(),
        algorithm: algorithm.into(),
        config_sha256: config_sha256.into(),
        rng_seed,
        sdp_tolerance,
        wall_time_seconds: started.elapsed().as_secs_f64(),
        outputs: outputs.iter().map(|p| p.to_string_lossy().into_owned()).collect(),
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write_atomic(manifest_path, &text)
}

fn manifest_path_for(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    name.push_str(".manifest.json");
    out.with_file_name(name)
}

/// Runs one design and writes the result JSON, a manifest, and (annular) the
/// iteration-trace CSV.
pub fn cmd_design(
    kind: &str,
    config_path: &Path,
    out_path: &Path,
    ov: &Overrides,
) -> Result<(), CliError> {
    let started = Instant::now();
    let text = read_config(config_path)?;
    let config_sha = hash_bytes(text.as_bytes());
    let mut outputs = vec![out_path.to_path_buf()];
    let (algorithm, scenario, seed, tol) = match kind {
        "spherical" => {
            let mut cfg: SphericalRunConfig = parse(&text, "spherical design config")?;
            apply_spherical_overrides(&mut cfg.design, ov);
            cfg.uncertainty.validate(&cfg.scenario).map_err(design_err)?;
            cfg.design.validate().map_err(design_err)?;
            let result =
                design_spherical(&cfg.scenario, &cfg.uncertainty, &cfg.design).map_err(design_err)?;
            write_result(out_path, "spherical", &cfg.scenario, &result)?;
            ("spherical".to_string(), cfg.scenario, cfg.design.rng_seed, cfg.design.sdp_tolerance)
        }
        "annular" => {
            let mut cfg: AnnularRunConfig = parse(&text, "annular design config")?;
            apply_annular_overrides(&mut cfg.design, ov);
            cfg.uncertainty.validate(&cfg.scenario).map_err(design_err)?;
            cfg.design.validate().map_err(design_err)?;
            let (result, trace) =
                design_annular(&cfg.scenario, &cfg.uncertainty, &cfg.design).map_err(design_err)?;
            write_result(out_path, "annular", &cfg.scenario, &result)?;
            let trace_path = out_path.with_file_name(format!(
                "{}_trace.csv",
                out_path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or("out".into())
            ));
            write_atomic(&trace_path, &trace.to_csv())?;
            outputs.push(trace_path);
            ("annular".to_string(), cfg.scenario, cfg.design.rng_seed, cfg.design.sdp_tolerance)
        }
        other => return Err(CliError::Config(format!("unknown design algorithm '{other}'"))),
    };
    let _ = scenario;
    write_manifest(
        &manifest_path_for(out_path),
        &format!("design {kind}"),
        &algorithm,
        &config_sha,
        seed,
        tol,
        started,
        &outputs,
    )?;
    if !ov.quiet {
        eprintln!("design {kind}: wrote {}", out_path.display());
    }
    Ok(())
}

fn apply_spherical_overrides(cfg: &mut DmsdrConfig, ov: &Overrides) {
    if let Some(s) = ov.seed {
        cfg.rng_seed = s;
    }
    if let Some(t) = ov.tol {
        cfg.sdp_tolerance = t;
    }
    if let Some(q) = ov.trials {
        cfg.randomization_trials = q;
    }
}

fn apply_annular_overrides(cfg: &mut DmdsdrConfig, ov: &Overrides) {
    if let Some(s) = ov.seed {
        cfg.rng_seed = s;
    }
    if let Some(t) = ov.tol {
        cfg.sdp_tolerance = t;
    }
    if let Some(q) = ov.trials {
        cfg.randomization_trials = q;
    }
}

fn write_result(
    out_path: &Path,
    algorithm: &str,
    scenario: &ScenarioConfig,
    result: &DesignResult,
) -> Result<(), CliError> {
    let file = ResultFile {
        algorithm: algorithm.into(),
        scenario_sha256: scenario_hash(scenario),
        result: result.clone(),
    };
    write_atomic(out_path, &serde_json::to_string_pretty(&file).expect("result serializes"))
}

/// Evaluates a saved design: antenna pattern or sampled-SINR dominance CSV.
pub fn cmd_eval(
    kind: &str,
    result_path: &Path,
    config_path: &Path,
    out_csv: &Path,
    ov: &Overrides,
) -> Result<(), CliError> {
    let started = Instant::now();
    let result_text = fs::read_to_string(result_path)
        .map_err(|e| CliError::Mismatch(format!("read {result_path:?}: {e}")))?;
    let saved: ResultFile = serde_json::from_str(&result_text)
        .map_err(|e| CliError::Mismatch(format!("parse result file: {e}")))?;
    let config_text = read_config(config_path)?;
    let config_sha = hash_bytes(config_text.as_bytes());

    // the scenario inside the config must be the one the design was built for
    let (scenario, seed, tol, samples): (ScenarioConfig, u64, f64, Option<Vec<CVector>>) =
        match saved.algorithm.as_str() {
            "spherical" => {
                let cfg: SphericalRunConfig = parse(&config_text, "spherical design config")?;
                let count = ov.trials.unwrap_or(50);
                let seed = ov.seed.unwrap_or(cfg.design.rng_seed);
                let samples = sample_spherical(&cfg.uncertainty, count, seed);
                (cfg.scenario, seed, cfg.design.sdp_tolerance, Some(samples))
            }
            "annular" => {
                let cfg: AnnularRunConfig = parse(&config_text, "annular design config")?;
                let count = ov.trials.unwrap_or(50);
                let seed = ov.seed.unwrap_or(cfg.design.rng_seed);
                let samples = sample_annular(&cfg.uncertainty, count, seed);
                (cfg.scenario, seed, cfg.design.sdp_tolerance, Some(samples))
            }
            other => return Err(CliError::Mismatch(format!("unknown algorithm '{other}' in result"))),
        };
    if scenario_hash(&scenario) != saved.scenario_sha256 {
        return Err(CliError::Mismatch(
            "config scenario hash differs from the one recorded in the result file".into(),
        ));
    }

    let csv = match kind {
        "pattern" => {
            let grid = default_azimuth_grid();
            antenna_pattern(&saved.result.filter, &saved.result.waveform, &scenario, &grid)
                .map_err(design_err)?
                .to_csv()
        }
        "sinr-samples" => {
            let mut out = String::from("sample,actual_sinr,worst_case_sinr,dominates\n");
            for (i, u) in samples.expect("samplers ran").iter().enumerate() {
                let actual = sinr(&saved.result.filter, &saved.result.waveform, u, &scenario)
                    .map_err(design_err)?;
                let worst = saved.result.worst_case_sinr;
                let _ = write!(
                    out,
                    "{},{:.12e},{:.12e},{}\n",
                    i,
                    actual,
                    worst,
                    u8::from(actual >= worst - 1e-9 * worst.abs().max(1.0))
                );
            }
            out
        }
        other => return Err(CliError::Config(format!("unknown eval subcommand '{other}'"))),
    };
    write_atomic(out_csv, &csv)?;
    write_manifest(
        &manifest_path_for(out_csv),
        &format!("eval {kind}"),
        &saved.algorithm,
        &config_sha,
        seed,
        tol,
        started,
        &[out_csv.to_path_buf()],
    )?;
    if !ov.quiet {
        eprintln!("eval {kind}: wrote {}", out_csv.display());
    }
    Ok(())
}

/// Reference experiment scenario: 4x4 arrays (transmit spacing one
/// wavelength, receive half), 16-sample code, target at 30°, two scatterers,
/// correlated noise (power 10, lag coefficient 0.8).
pub fn reference_scenario_spherical() -> ScenarioConfig {
    ScenarioConfig {
        geometry: ArrayGeometry { num_tx: 4, num_rx: 4, tx_spacing: 1.0, rx_spacing: 0.5 },
        code_length: 16,
        target_azimuth: 30f64.to_radians(),
        scatterers: vec![
            PathSpec { azimuth: (-10f64).to_radians(), delay: 7 },
            PathSpec { azimuth: (-30f64).to_radians(), delay: 5 },
        ],
        noise_power: 10.0,
        noise_correlation: 0.8,
        noise_structure: NoiseStructure::TimeBlock,
    }
}

/// Nominal coefficients and radius used with the spherical reference
/// scenario: u₀ = [0.8, 0.6 e^{jπ/3}, 0.2 e^{−jπ/6}], r = 0.5.
pub fn reference_set_spherical() -> SphericalSet {
    use num_complex::Complex64;
    use std::f64::consts::PI;
    SphericalSet {
        center: CVector::from_vec(vec![
            Complex64::new(0.8, 0.0),
            Complex64::from_polar(0.6, PI / 3.0),
            Complex64::from_polar(0.2, -PI / 6.0),
        ]),
        radius: 0.5,
    }
}

/// Reference scenario for the annular experiments: same arrays and noise,
/// scatterers at −30° (delay 3) and −10° (delay 7).
pub fn reference_scenario_annular() -> ScenarioConfig {
    ScenarioConfig {
        scatterers: vec![
            PathSpec { azimuth: (-30f64).to_radians(), delay: 3 },
            PathSpec { azimuth: (-10f64).to_radians(), delay: 7 },
        ],
        ..reference_scenario_spherical()
    }
}

/// Four-parameter annular band family: lower = (a, b, c), upper = lower + d.
pub fn theta_set(a: f64, b: f64, c: f64, d: f64) -> AnnularSet {
    AnnularSet::new(&[a, b, c], &[a + d, b + d, c + d])
}

/// Runs one of the canned desk-scale experiments, writing CSVs plus a
/// manifest into `out_dir`.
pub fn cmd_experiment(name: &str, out_dir: &Path, ov: &Overrides) -> Result<(), CliError> {
    let started = Instant::now();
    fs::create_dir_all(out_dir).map_err(|e| CliError::Config(format!("create {out_dir:?}: {e}")))?;
    let seed = ov.seed.unwrap_or(0);
    let (algorithm, config_json, outputs) = match name {
        "fig3" => experiment_fig3(out_dir, seed, ov)?,
        "fig4" => experiment_fig4(out_dir, seed, ov)?,
        "fig6" => experiment_fig6(out_dir, seed, ov)?,
        "fig7" => experiment_fig7(out_dir, seed, ov)?,
        "fig8" => experiment_fig8(out_dir, seed, ov)?,
        other => return Err(CliError::Config(format!("unknown experiment '{other}'"))),
    };
    let tol = ov.tol.unwrap_or(1e-7);
    write_manifest(
        &out_dir.join(format!("{name}.manifest.json")),
        &format!("experiment {name}"),
        &algorithm,
        &hash_bytes(config_json.as_bytes()),
        seed,
        tol,
        started,
        &outputs,
    )?;
    if !ov.quiet {
        eprintln!("experiment {name}: wrote {} file(s) in {}", outputs.len(), out_dir.display());
    }
    Ok(())
}

fn spherical_cfg(ov: &Overrides, seed: u64) -> DmsdrConfig {
    let mut cfg = DmsdrConfig { rng_seed: seed, ..DmsdrConfig::default() };
    apply_spherical_overrides(&mut cfg, &Overrides { seed: None, ..*ov });
    cfg
}

fn annular_cfg(ov: &Overrides, seed: u64) -> DmdsdrConfig {
    let mut cfg = DmdsdrConfig { rng_seed: seed, ..DmdsdrConfig::default() };
    apply_annular_overrides(&mut cfg, &Overrides { seed: None, ..*ov });
    cfg
}

/// Sampled-SINR dominance for the spherical reference design.
fn experiment_fig3(
    out_dir: &Path,
    seed: u64,
    ov: &Overrides,
) -> Result<(String, String, Vec<PathBuf>), CliError> {
    let scenario = reference_scenario_spherical();
    let set = reference_set_spherical();
    let cfg = spherical_cfg(ov, seed);
    let config_json = serde_json::to_string(&SphericalRunConfig {
        scenario: scenario.clone(),
        uncertainty: set.clone(),
        design: cfg.clone(),
    })
    .expect("config serializes");
    let result = design_spherical(&scenario, &set, &cfg).map_err(design_err)?;
    let mut csv = String::from("sample,actual_sinr,worst_case_sinr,dominates\n");
    for (i, u) in sample_spherical(&set, 50, seed).iter().enumerate() {
        let actual = sinr(&result.filter, &result.waveform, u, &scenario).map_err(design_err)?;
        let _ = write!(
            csv,
            "{},{:.12e},{:.12e},{}\n",
            i,
            actual,
            result.worst_case_sinr,
            u8::from(actual >= result.worst_case_sinr * (1.0 - 1e-9))
        );
    }
    let path = out_dir.join("fig3_samples.csv");
    write_atomic(&path, &csv)?;
    Ok((("spherical").into(), config_json, vec![path]))
}

/// Worst-case SINR versus uncertainty radius, shared seed across radii.
fn experiment_fig4(
    out_dir: &Path,
    seed: u64,
    ov: &Overrides,
) -> Result<(String, String, Vec<PathBuf>), CliError> {
    use rayon::prelude::*;
    let scenario = reference_scenario_spherical();
    let cfg = spherical_cfg(ov, seed);
    let radii: Vec<f64> = (1..=9).map(|i| i as f64 / 10.0).collect();
    let config_json = serde_json::to_string(&(&scenario, &radii)).expect("config serializes");
    let results: Vec<Result<(f64, DesignResult), DesignError>> = radii
        .par_iter()
        .map(|&r| {
            let set = SphericalSet { radius: r, ..reference_set_spherical() };
            design_spherical(&scenario, &set, &cfg).map(|res| (r, res))
        })
        .collect();
    let mut csv = String::from("radius,worst_case_sinr,sdr_bound,worst_case_sinr_db\n");
    for entry in results {
        let (r, res) = entry.map_err(design_err)?;
        let _ = write!(
            csv,
            "{:.1},{:.12e},{:.12e},{:.6}\n",
            r,
            res.worst_case_sinr,
            res.sdr_bound,
            to_db(res.worst_case_sinr)
        );
    }
    let path = out_dir.join("fig4_radius_sweep.csv");
    write_atomic(&path, &csv)?;
    Ok((("spherical").into(), config_json, vec![path]))
}

fn annular_reference_design(
    set: &AnnularSet,
    seed: u64,
    ov: &Overrides,
) -> Result<(DesignResult, IterationTrace, ScenarioConfig, String), CliError> {
    let scenario = reference_scenario_annular();
    let cfg = annular_cfg(ov, seed);
    let config_json = serde_json::to_string(&AnnularRunConfig {
        scenario: scenario.clone(),
        uncertainty: set.clone(),
        design: cfg.clone(),
    })
    .expect("config serializes");
    let (result, trace) = design_annular(&scenario, set, &cfg).map_err(design_err)?;
    Ok((result, trace, scenario, config_json))
}

/// Annular reference design: antenna pattern plus sampled-SINR dominance.
fn experiment_fig6(
    out_dir: &Path,
    seed: u64,
    ov: &Overrides,
) -> Result<(String, String, Vec<PathBuf>), CliError> {
    let set = theta_set(2.0, 1.0, 0.5, 2.0);
    let (result, _, scenario, config_json) = annular_reference_design(&set, seed, ov)?;
    let pattern = antenna_pattern(
        &result.filter,
        &result.waveform,
        &scenario,
        &default_azimuth_grid(),
    )
    .map_err(design_err)?;
    let pattern_path = out_dir.join("fig6_pattern.csv");
    write_atomic(&pattern_path, &pattern.to_csv())?;

    let mut csv = String::from("sample,actual_sinr,worst_case_sinr,dominates\n");
    for (i, u) in sample_annular(&set, 50, seed).iter().enumerate() {
        let actual = sinr(&result.filter, &result.waveform, u, &scenario).map_err(design_err)?;
        let _ = write!(
            csv,
            "{},{:.12e},{:.12e},{}\n",
            i,
            actual,
            result.worst_case_sinr,
            u8::from(actual >= result.worst_case_sinr * (1.0 - 1e-9))
        );
    }
    let samples_path = out_dir.join("fig6_samples.csv");
    write_atomic(&samples_path, &csv)?;
    Ok((("annular").into(), config_json, vec![pattern_path, samples_path]))
}

/// Iteration traces for two annular parameter sets.
fn experiment_fig7(
    out_dir: &Path,
    seed: u64,
    ov: &Overrides,
) -> Result<(String, String, Vec<PathBuf>), CliError> {
    let sets = [
        ("fig7_theta_2_1_05_2.csv", theta_set(2.0, 1.0, 0.5, 2.0)),
        ("fig7_theta_2_05_1_2.csv", theta_set(2.0, 0.5, 1.0, 2.0)),
    ];
    let mut outputs = Vec::new();
    let mut config_json = String::new();
    for (file, set) in &sets {
        let (_, trace, _, cfg_json) = annular_reference_design(set, seed, ov)?;
        config_json.push_str(&cfg_json);
        let path = out_dir.join(file);
        write_atomic(&path, &trace.to_csv())?;
        outputs.push(path);
    }
    Ok((("annular").into(), config_json, outputs))
}

/// Mainlobe tracking: patterns before and after swapping the two largest
/// lower-bound amplitudes.
fn experiment_fig8(
    out_dir: &Path,
    seed: u64,
    ov: &Overrides,
) -> Result<(String, String, Vec<PathBuf>), CliError> {
    let sets = [
        ("fig8_pattern_base.csv", theta_set(2.0, 1.0, 0.5, 2.0)),
        ("fig8_pattern_swapped.csv", theta_set(1.0, 2.0, 0.5, 2.0)),
    ];
    let mut outputs = Vec::new();
    let mut config_json = String::new();
    for (file, set) in &sets {
        let (result, _, scenario, cfg_json) = annular_reference_design(set, seed, ov)?;
        config_json.push_str(&cfg_json);
        let pattern = antenna_pattern(
            &result.filter,
            &result.waveform,
            &scenario,
            &default_azimuth_grid(),
        )
        .map_err(design_err)?;
        let path = out_dir.join(file);
        write_atomic(&path, &pattern.to_csv())?;
        outputs.push(path);
    }
    Ok((("annular").into(), config_json, outputs))
}

/// Installs the global thread pool honoring `ROBUSTWF_THREADS`; a no-op when
/// unset or already installed.
pub fn init_threads() {
    if let Ok(v) = std::env::var("ROBUSTWF_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annular::tests::small_scenario;

    fn small_spherical_config() -> SphericalRunConfig {
        use num_complex::Complex64;
        SphericalRunConfig {
            scenario: small_scenario(),
            uncertainty: SphericalSet {
                center: CVector::from_vec(vec![
                    Complex64::new(0.9, 0.0),
                    Complex64::new(0.3, 0.4),
                ]),
                radius: 0.2,
            },
            design: DmsdrConfig { randomization_trials: 8, ..DmsdrConfig::default() },
        }
    }

    #[test]
    fn design_eval_round_trip_with_manifests() {
        let dir = tempfile::tempdir().unwrap();
        let config_path = dir.path().join("cfg.json");
        let out_path = dir.path().join("design.json");
        let cfg = small_spherical_config();
        std::fs::write(&config_path, serde_json::to_string_pretty(&cfg).unwrap()).unwrap();
        let ov = Overrides { quiet: true, ..Overrides::default() };
        cmd_design("spherical", &config_path, &out_path, &ov).unwrap();
        assert!(out_path.exists());
        assert!(manifest_path_for(&out_path).exists());

        let csv_path = dir.path().join("samples.csv");
        cmd_eval("sinr-samples", &out_path, &config_path, &csv_path, &ov).unwrap();
        let csv = std::fs::read_to_string(&csv_path).unwrap();
        assert_eq!(csv.lines().count(), 51);
        assert!(csv.lines().skip(1).all(|l| l.ends_with(",1")), "dominance violated:\n{csv}");

        let pattern_path = dir.path().join("pattern.csv");
        cmd_eval("pattern", &out_path, &config_path, &pattern_path, &ov).unwrap();
        assert_eq!(std::fs::read_to_string(&pattern_path).unwrap().lines().count(), 722);
    }

    #[test]
    fn eval_rejects_mismatched_scenario() {
        let dir = tempfile::tempdir().unwrap();
        let config_path = dir.path().join("cfg.json");
        let out_path = dir.path().join("design.json");
        let cfg = small_spherical_config();
        std::fs::write(&config_path, serde_json::to_string_pretty(&cfg).unwrap()).unwrap();
        let ov = Overrides { quiet: true, ..Overrides::default() };
        cmd_design("spherical", &config_path, &out_path, &ov).unwrap();

        let mut other = cfg.clone();
        other.scenario.noise_power = 5.0;
        let other_path = dir.path().join("other.json");
        std::fs::write(&other_path, serde_json::to_string_pretty(&other).unwrap()).unwrap();
        let err = cmd_eval(
            "sinr-samples",
            &out_path,
            &other_path,
            &dir.path().join("x.csv"),
            &ov,
        )
        .unwrap_err();
        assert_eq!(err.exit_code(), 4);
    }

    #[test]
    fn malformed_config_is_a_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let config_path = dir.path().join("cfg.json");
        std::fs::write(&config_path, "{ not json").unwrap();
        let err = cmd_design(
            "spherical",
            &config_path,
            &dir.path().join("out.json"),
            &Overrides { quiet: true, ..Overrides::default() },
        )
        .unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn unknown_names_are_config_errors() {
        let ov = Overrides { quiet: true, ..Overrides::default() };
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(
            cmd_design("circular", &dir.path().join("c.json"), &dir.path().join("o.json"), &ov)
                .map(|_| ())
                .unwrap_err()
                .exit_code(),
            2
        );
        assert_eq!(cmd_experiment("fig99", dir.path(), &ov).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn design_outputs_are_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let config_path = dir.path().join("cfg.json");
        let cfg = small_spherical_config();
        std::fs::write(&config_path, serde_json::to_string_pretty(&cfg).unwrap()).unwrap();
        let ov = Overrides { quiet: true, ..Overrides::default() };
        let a = dir.path().join("a.json");
        let b = dir.path().join("b.json");
        cmd_design("spherical", &config_path, &a, &ov).unwrap();
        cmd_design("spherical", &config_path, &b, &ov).unwrap();
        assert_eq!(std::fs::read_to_string(a).unwrap(), std::fs::read_to_string(b).unwrap());
    }
}
