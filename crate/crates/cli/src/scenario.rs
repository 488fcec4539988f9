//! Scenario resolution and the run configuration.

use anyhow::{bail, Context, Result};
use serde::Deserialize;
use std::path::{Path, PathBuf};
use symindex_core::presets::{self, PresetScenario, SyntheticVariant};
use symindex_core::report::{compute_report, IndexReport, PipelineOptions};

/// Output format of `symindex run`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    Csv,
    Text,
}

impl std::str::FromStr for OutputFormat {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            "text" => Ok(OutputFormat::Text),
            other => bail!("unknown format {other:?} (expected json, csv or text)"),
        }
    }
}

/// A scenario: a named preset (with documented validity ranges) or a path
/// to an `orbit_v1` file.
#[derive(Debug, Clone)]
pub enum Scenario {
    Preset(String),
    File(PathBuf),
}

impl Scenario {
    pub fn parse(input: &str) -> Scenario {
        let known = matches!(
            input,
            "flat_torus"
                | "circle_free_particle"
                | "harmonic_loop"
                | "kepler_circular"
                | "negative_P_synthetic"
                | "negative_P_synthetic:drift"
                | "negative_P_synthetic:well"
        );
        if known {
            Scenario::Preset(input.to_string())
        } else {
            Scenario::File(PathBuf::from(input))
        }
    }

    pub fn name(&self) -> String {
        match self {
            Scenario::Preset(name) => name.clone(),
            Scenario::File(path) => path.display().to_string(),
        }
    }

    fn build_preset(name: &str) -> Result<PresetScenario> {
        Ok(match name {
            "flat_torus" => presets::flat_torus(0.5),
            "circle_free_particle" => presets::circle_free_particle(0.5),
            "harmonic_loop" => presets::harmonic_loop(1.0),
            "kepler_circular" => presets::kepler_circular(-0.5),
            // The synthetic preset defaults to the drift variant; the
            // well variant reaches the κ < 0, T'(h) < 0 branch.
            "negative_P_synthetic" | "negative_P_synthetic:drift" => {
                presets::negative_p_synthetic(SyntheticVariant::Drift, -0.5)
            }
            "negative_P_synthetic:well" => {
                presets::negative_p_synthetic(SyntheticVariant::Well, 0.5)
            }
            other => bail!("unknown preset {other:?}"),
        })
    }

    /// Runs the pipeline on this scenario.
    pub fn run(&self, opts: &PipelineOptions) -> Result<IndexReport, symindex_core::Error> {
        match self {
            Scenario::Preset(name) => {
                let scenario = Scenario::build_preset(name).map_err(|e| {
                    symindex_core::Error::InvalidOrbitData { detail: e.to_string() }
                })?;
                compute_report(
                    &scenario.name,
                    &scenario.orbit,
                    scenario.callbacks.as_ref(),
                    scenario.family.as_ref(),
                    opts,
                )
            }
            Scenario::File(path) => {
                let orbit = crate::orbit_file::load(path).map_err(|e| {
                    symindex_core::Error::InvalidOrbitData { detail: format!("{e:#}") }
                })?;
                let name = path
                    .file_stem()
                    .map(|s| s.to_string_lossy().to_string())
                    .unwrap_or_else(|| "orbit".to_string());
                compute_report(&name, &orbit, None, None, opts)
            }
        }
    }
}

/// Configuration file (`TOML`); flags override file values, file values
/// override defaults.
#[derive(Debug, Clone, Default, Deserialize)]
pub struct ConfigFile {
    pub scenario: Option<Vec<String>>,
    pub steps: Option<usize>,
    pub galerkin_n: Option<usize>,
    pub format: Option<String>,
    pub out: Option<String>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<ConfigFile> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

/// Fully resolved run settings after precedence resolution.
#[derive(Debug, Clone)]
pub struct RunSettings {
    pub scenarios: Vec<Scenario>,
    pub format: OutputFormat,
    pub out: Option<PathBuf>,
    pub pipeline: PipelineOptions,
}

pub fn resolve(
    flag_scenarios: &[String],
    flag_steps: Option<usize>,
    flag_galerkin: Option<usize>,
    flag_format: Option<OutputFormat>,
    flag_out: Option<PathBuf>,
    config: Option<&ConfigFile>,
) -> Result<RunSettings> {
    let mut pipeline = PipelineOptions::default();
    let mut format = OutputFormat::Json;
    let mut out = None;
    let mut scenarios: Vec<String> = Vec::new();

    if let Some(cfg) = config {
        if let Some(s) = &cfg.scenario {
            scenarios = s.clone();
        }
        if let Some(steps) = cfg.steps {
            pipeline.steps = steps;
        }
        if let Some(n) = cfg.galerkin_n {
            pipeline.galerkin_level = n;
        }
        if let Some(f) = &cfg.format {
            format = f.parse()?;
        }
        if let Some(o) = &cfg.out {
            out = Some(PathBuf::from(o));
        }
    }
    if !flag_scenarios.is_empty() {
        scenarios = flag_scenarios.to_vec();
    }
    if let Some(steps) = flag_steps {
        pipeline.steps = steps;
    }
    if let Some(n) = flag_galerkin {
        pipeline.galerkin_level = n;
    }
    if let Some(f) = flag_format {
        format = f;
    }
    if let Some(o) = flag_out {
        out = Some(o);
    }
    if scenarios.is_empty() {
        bail!("no scenario given (use --scenario <name|file> or a config file)");
    }
    Ok(RunSettings {
        scenarios: scenarios.iter().map(|s| Scenario::parse(s)).collect(),
        format,
        out,
        pipeline,
    })
}

/// Exit code classification per the CLI contract: 2 for data-contract
/// failures, 3 for numerical failures.
pub fn exit_code_for(err: &symindex_core::Error) -> i32 {
    use symindex_core::Error::*;
    match err {
        Stage { source, .. } => exit_code_for(source),
        NotNonNull | MissingTprime => 2,
        IrregularCrossing { .. } | EpsExhausted | S0Exhausted | SingularA { .. }
        | SingularP { .. } | SplitResidualTooLarge { .. } | LedgerMismatch { .. }
        | DecompositionMismatch { .. } | NoCylinderBlock { .. } | NotSymplectic { .. }
        | NotBlockTriangular { .. } | NotLinearlyStable => 3,
        _ => 2,
    }
}
