//! Config-driven experiments with deterministic CSV and JSON output.

mod config;
mod experiments;

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

pub use config::{
    ExperimentConfig, ExperimentKind, FrameChoice, FupSpec, NumerologySpec, OutputSpec, PorositySpec, SplittingSpec, Sweep, SystemSpec, Tolerances,
};

/// Rows of one CSV file; the hash and seed columns are prepended on write.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, headers: &[&str]) -> Self {
        Self {
            name: name.into(),
            headers: headers.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }
}

/// Formats a float in shortest round-trip form.
pub(crate) fn f(v: f64) -> String {
    format!("{v:?}")
}

/// Problems found before running.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// (key, message) pairs; any entry blocks the run.
    pub errors: Vec<(String, String)>,
    pub warnings: Vec<String>,
}

impl Diagnostics {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }

    fn error(&mut self, key: &str, msg: impl Into<String>) {
        self.errors.push((key.into(), msg.into()));
    }

    pub fn into_result(self) -> Result<Vec<String>> {
        if self.errors.is_empty() {
            return Ok(self.warnings);
        }
        let list: Vec<String> = self.errors.iter().map(|(k, m)| format!("{k}: {m}")).collect();
        Err(LabError::Config(format!("invalid keys: {}", list.join("; "))))
    }
}

/// Checks a config without running it.
pub fn validate(cfg: &ExperimentConfig) -> Diagnostics {
    let mut d = Diagnostics::default();
    let Some(kind) = cfg.kind else {
        d.error("kind", "missing");
        return d;
    };
    let sw = &cfg.sweep;
    let lists: [(&str, Option<usize>); 5] = [
        ("sweep.h", sw.h.as_ref().map(Vec::len)),
        ("sweep.n", sw.n.as_ref().map(Vec::len)),
        ("sweep.k", sw.k.as_ref().map(Vec::len)),
        ("sweep.s", sw.s.as_ref().map(Vec::len)),
        ("sweep.powers", sw.powers.as_ref().map(Vec::len)),
    ];
    for (key, len) in lists {
        if len == Some(0) {
            d.error(key, "empty sweep list");
        }
    }
    if let Some(h) = &sw.h {
        if h.iter().any(|v| !(*v > 0.0 && *v < 1.0)) {
            d.error("sweep.h", "values must lie in (0, 1)");
        }
    }
    if let Some(n) = &sw.n {
        if n.iter().any(|v| *v < 2) {
            d.error("sweep.n", "values must be at least 2");
        }
    }
    if let Some(s) = &sw.s {
        if s.iter().any(|v| !v.is_finite()) {
            d.error("sweep.s", "values must be finite");
        }
    }
    if sw.powers.as_ref().is_some_and(|p| p.contains(&0)) {
        d.error("sweep.powers", "powers must be at least 1");
    }
    if let Some([lo, hi]) = sw.scales {
        if !(lo > 0.0 && lo <= hi) {
            d.error("sweep.scales", "need 0 < min <= max");
        }
    }
    if sw.n_max == Some(0) {
        d.error("sweep.n_max", "must be at least 1");
    }
    if sw.grid.is_some_and(|g| g < 4) {
        d.error("sweep.grid", "must be at least 4");
    }
    if !(cfg.tolerance.root > 0.0 && cfg.tolerance.slope > 0.0) {
        d.error("tolerance", "tolerances must be positive");
    }

    let needs_system = matches!(
        kind,
        ExperimentKind::Classical
            | ExperimentKind::Splitting
            | ExperimentKind::Pressure
            | ExperimentKind::Dimension
            | ExperimentKind::Spectrum
    ) || (kind == ExperimentKind::Porosity && cfg.porosity.as_ref().is_some_and(|p| p.set.is_none()));
    match &cfg.system {
        None if needs_system => d.error("system", "required for this kind"),
        Some(spec) => {
            let model = matches!(spec, SystemSpec::Model { .. });
            if model && kind != ExperimentKind::Spectrum {
                d.error("system.type", "the model system is only available for spectrum runs");
            }
            if let SystemSpec::Model { cutoff: Some(c) } = spec {
                if let Err(e) = c.validate() {
                    d.error("system.cutoff", e.to_string());
                }
            }
            if !model {
                match spec.build() {
                    Ok(sys) => d.warnings.extend(sys.meta.warnings.iter().cloned()),
                    Err(e) => d.error("system", e.to_string()),
                }
            }
        }
        None => {}
    }

    match kind {
        ExperimentKind::Spectrum => match &cfg.system {
            Some(SystemSpec::Model { .. }) if sw.h.is_none() => d.error("sweep.h", "required for the model"),
            Some(SystemSpec::Baker { shear, .. }) => {
                if *shear != 0.0 {
                    d.error("system.shear", "only the unsheared baker is quantized");
                }
                if sw.n.is_none() && sw.k.is_none() {
                    d.error("sweep.n", "give sweep.n or sweep.k");
                }
            }
            Some(SystemSpec::Model { .. }) | None => {}
            Some(_) => d.error("system.type", "spectrum needs the model or a baker"),
        },
        ExperimentKind::Dimension => {
            if let Some(spec) = &cfg.system {
                if !(spec.is_baker() || spec.is_disks()) {
                    d.error("system.type", "dimension needs a baker or a disk system");
                }
            }
        }
        ExperimentKind::Porosity => match &cfg.porosity {
            None => d.error("porosity", "section required"),
            Some(p) => {
                if !(p.nu > 0.0 && p.nu <= 1.0) {
                    d.error("porosity.nu", "must lie in (0, 1]");
                }
                if p.scale_ratio <= 1.0 {
                    d.error("porosity.scale_ratio", "must exceed 1");
                }
                if sw.scales.is_none() {
                    d.error("sweep.scales", "required for porosity scans");
                }
                if let Some(crate::fup::FractalSetSpec::Explicit { .. }) = p.set {
                    d.error("porosity.set", "explicit index sets cannot be scanned");
                }
                if let Some(spec) = &cfg.system {
                    if p.set.is_none() && !(spec.is_baker() || spec.is_disks()) {
                        d.error("system.type", "porosity needs a baker or a disk system");
                    }
                }
            }
        },
        ExperimentKind::Fup => {
            if cfg.fup.is_none() {
                d.error("fup", "section required");
            }
            if sw.k.is_none() {
                d.error("sweep.k", "required for fup runs");
            }
            if cfg.fup.as_ref().is_some_and(|f| f.base < 2) {
                d.error("fup.base", "must be at least 2");
            }
        }
        ExperimentKind::Numerology => match &cfg.numerology {
            None => d.error("numerology", "section required"),
            Some(n) => {
                if let Err(e) = crate::thermo::numerology(n.lambda0, n.lambda1, n.beta) {
                    d.error("numerology", e.to_string());
                }
                if n.h.iter().any(|v| !(*v > 0.0 && *v < 1.0)) {
                    d.error("numerology.h", "values must lie in (0, 1)");
                }
            }
        },
        ExperimentKind::Classical | ExperimentKind::Splitting | ExperimentKind::Pressure => {}
    }
    d
}

/// Overrides applied on top of a config file.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub workers: Option<usize>,
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

/// Record of one run; wall-clock times live here and never in the CSVs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub kind: ExperimentKind,
    pub config_hash: String,
    pub artifact_version: String,
    pub seed: u64,
    pub workers: usize,
    pub stages: Vec<StageTiming>,
    pub outputs: Vec<String>,
    pub warnings: Vec<String>,
}

/// What an experiment hands to the collector.
#[derive(Debug, Default)]
pub(crate) struct Outcome {
    pub tables: Vec<Table>,
    pub reports: Vec<(String, serde_json::Value)>,
    pub warnings: Vec<String>,
}

/// Validates, runs and writes one experiment.
pub fn run(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunManifest> {
    let mut cfg = cfg.clone();
    if let Some(seed) = opts.seed {
        cfg.seed = seed;
    }
    let t0 = Instant::now();
    let mut warnings = validate(&cfg).into_result()?;
    let kind = cfg.kind()?;
    let hash = cfg.hash();
    let out_dir = opts
        .out_dir
        .clone()
        .or_else(|| cfg.output.dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    let workers = opts.workers.unwrap_or(1).max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| LabError::Config(format!("worker pool: {e}")))?;
    let mut stages = vec![StageTiming {
        stage: "validate".into(),
        seconds: t0.elapsed().as_secs_f64(),
    }];

    let t1 = Instant::now();
    let outcome = pool.install(|| experiments::execute(kind, &cfg))?;
    stages.push(StageTiming {
        stage: kind.name().into(),
        seconds: t1.elapsed().as_secs_f64(),
    });
    warnings.extend(outcome.warnings.iter().cloned());

    let t2 = Instant::now();
    std::fs::create_dir_all(&out_dir)?;
    let prefix = cfg.output.prefix.clone().unwrap_or_else(|| kind.name().to_string());
    let mut outputs = Vec::new();
    for table in &outcome.tables {
        let name = format!("{prefix}_{}.csv", table.name);
        write_table(&out_dir.join(&name), table, &hash, cfg.seed)?;
        outputs.push(name);
    }
    for (label, value) in &outcome.reports {
        let name = format!("{prefix}_{label}.json");
        let mut value = value.clone();
        if let serde_json::Value::Object(map) = &mut value {
            map.insert("config_hash".into(), hash.clone().into());
            map.insert("seed".into(), cfg.seed.into());
        }
        std::fs::write(out_dir.join(&name), serde_json::to_string_pretty(&value)?)?;
        outputs.push(name);
    }
    stages.push(StageTiming {
        stage: "write".into(),
        seconds: t2.elapsed().as_secs_f64(),
    });
    let manifest_name = format!("{prefix}_manifest.json");
    outputs.push(manifest_name.clone());
    let manifest = RunManifest {
        kind,
        config_hash: hash,
        artifact_version: env!("CARGO_PKG_VERSION").into(),
        seed: cfg.seed,
        workers,
        stages,
        outputs,
        warnings,
    };
    std::fs::write(out_dir.join(manifest_name), serde_json::to_string_pretty(&manifest)?)?;
    Ok(manifest)
}

fn write_table(path: &Path, table: &Table, hash: &str, seed: u64) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["config_hash".to_string(), "seed".to_string()];
    header.extend(table.headers.iter().cloned());
    w.write_record(&header)?;
    let seed = seed.to_string();
    for row in &table.rows {
        let mut rec = vec![hash.to_string(), seed.clone()];
        rec.extend(row.iter().cloned());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// One catalog line per experiment kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub kind: ExperimentKind,
    pub summary: String,
    pub anchor: String,
}

pub fn list_experiments() -> Vec<CatalogEntry> {
    let entry = |kind, summary: &str, anchor: &str| CatalogEntry {
        kind,
        summary: summary.into(),
        anchor: anchor.into(),
    };
    vec![
        entry(
            ExperimentKind::Classical,
            "trapped-set sample, unstable Jacobians and Monte-Carlo escape rate",
            "trapped set T = T+ ∩ T-, escape rate of F",
        ),
        entry(
            ExperimentKind::Splitting,
            "unstable slope field as the fixed point of the graph transform",
            "T is a contraction on slope fields",
        ),
        entry(
            ExperimentKind::Pressure,
            "pressure P(-s log J_u) from word sums, Bowen root and classical decay rate",
            "P(s phi_u) = lim (1/n) log c_n(s)",
        ),
        entry(
            ExperimentKind::Dimension,
            "box-counting dimension of the trapped set trace with its constant C",
            "N(eps) <= C eps^{-delta}",
        ),
        entry(
            ExperimentKind::Porosity,
            "porosity certificate or refutation on a range of scales",
            "nu-porous on scales alpha0..alpha1",
        ),
        entry(
            ExperimentKind::Spectrum,
            "spectral radius and power norms of the model map or the open quantum baker",
            "||M^{2n+1}|| = O(h^{1/4} log h)",
        ),
        entry(
            ExperimentKind::Fup,
            "restricted DFT norms on fractal sets and the fitted decay exponent",
            "||1_{Omega-} F_h 1_{Omega+}|| <= C h^{gamma beta}",
        ),
        entry(
            ExperimentKind::Numerology,
            "exponents b, delta0, tau and the logarithmic times N0, N1",
            "b + delta0 < 1, b < tau < 1, delta0 lambda0/lambda1 + tau > 1",
        ),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> ExperimentConfig {
        ExperimentConfig::from_toml(text).unwrap()
    }

    #[test]
    fn catalog_covers_every_kind() {
        let cat = list_experiments();
        assert!(cat.len() >= 8);
        for k in ExperimentKind::ALL {
            assert!(cat.iter().any(|e| e.kind == k));
        }
    }

    #[test]
    fn unknown_key_is_named() {
        let err = ExperimentConfig::from_toml("kind = \"pressure\"\n[sweep]\nnmax = 3\n").unwrap_err();
        assert!(err.to_string().contains("nmax"), "{err}");
        assert!(err.is_validation());
    }

    #[test]
    fn empty_sweep_is_named() {
        let cfg = parse("kind = \"fup\"\n[sweep]\nk = []\n[fup]\nminus = { kind = \"cantor\", base = 3, alphabet = [0, 2], depth = 0 }\nplus = { kind = \"cantor\", base = 3, alphabet = [0, 2], depth = 0 }\n");
        let d = validate(&cfg);
        assert!(d.errors.iter().any(|(k, _)| k == "sweep.k"));
        let err = d.into_result().unwrap_err();
        assert!(err.to_string().contains("sweep.k"));
    }

    #[test]
    fn closed_baker_warns() {
        let cfg = parse("kind = \"pressure\"\n[system]\ntype = \"baker\"\nbase = 3\nkept = [0, 1, 2]\n");
        let d = validate(&cfg);
        assert!(d.is_ok());
        assert!(d.warnings.iter().any(|w| w.contains("(Fractal) fails")));
    }

    #[test]
    fn missing_system_rejected() {
        let d = validate(&parse("kind = \"pressure\"\n"));
        assert!(d.errors.iter().any(|(k, _)| k == "system"));
    }

    #[test]
    fn hash_tracks_content() {
        let a = parse("kind = \"numerology\"\n[numerology]\nlambda0 = 0.5\nlambda1 = 0.7\nbeta = 1.0\n");
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.seed = 9;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 16);
    }

    #[test]
    fn config_round_trips() {
        let a = parse("kind = \"spectrum\"\nseed = 3\n[system]\ntype = \"model\"\n[sweep]\nh = [0.01, 0.005]\n");
        let b = ExperimentConfig::from_toml(&a.to_toml().unwrap()).unwrap();
        assert_eq!(a, b);
    }
}
