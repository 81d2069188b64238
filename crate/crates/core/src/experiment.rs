//! Reproducible sweeps: configuration, orchestration and result files.
//!
//! A sweep visits every (d, eta, p) cell, samples one shot batch per cell and
//! hands the same batch to every decoder, so decoder comparisons are paired.
//! Each cell's seed is derived from the run seed and the cell's parameters.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::circuit::Basis;
use crate::code::Deformation;
use crate::decoder::{Cell, CellSpec, DecoderKind, NoiseModel};
use crate::error::{Error, Result};
use crate::gap::GapRecord;
use crate::noise::{format_eta, NoiseParams};
use crate::stats::{decoder_gain, estimate_rate, fit_threshold, FitOptions, GainRecord, PointLabel, RatePoint, ThresholdFit};
use crate::svg;

fn default_deformation() -> Deformation {
    Deformation::Css
}
fn default_basis() -> Basis {
    Basis::Z
}
fn default_decoders() -> Vec<DecoderKind> {
    vec![DecoderKind::Mwpm]
}
fn default_window() -> f64 {
    0.3
}
fn default_bootstrap() -> usize {
    200
}
fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub d: Vec<usize>,
    pub ell: usize,
    #[serde(default = "default_deformation")]
    pub deformation: Deformation,
    pub noise: NoiseModel,
    pub p: Vec<f64>,
    #[serde(with = "crate::noise::eta_list")]
    pub eta: Vec<f64>,
    #[serde(default = "default_basis")]
    pub basis: Basis,
    /// Syndrome rounds for circuit noise; defaults to `d`.
    #[serde(default)]
    pub rounds: Option<usize>,
    pub shots: usize,
    pub seed: u64,
    #[serde(default = "default_decoders")]
    pub decoders: Vec<DecoderKind>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default = "default_window")]
    pub fit_window: f64,
    #[serde(default = "default_bootstrap")]
    pub bootstrap: usize,
    #[serde(default = "default_true")]
    pub plots: bool,
}

impl ExperimentConfig {
    /// Parses a JSON document; unknown keys and missing mandatory keys
    /// (including `seed`) are config errors.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::config(json_path(&e, text), e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::config(path.display().to_string(), e.to_string()))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d.is_empty() {
            return Err(Error::config("d", "at least one distance is required"));
        }
        for (i, &d) in self.d.iter().enumerate() {
            if d < 3 || d % 2 == 0 {
                return Err(Error::config(format!("d[{i}]"), format!("distance must be odd and >= 3, got {d}")));
            }
        }
        if self.ell < 2 {
            return Err(Error::config("ell", format!("elongation must be >= 2, got {}", self.ell)));
        }
        if self.p.is_empty() {
            return Err(Error::config("p", "at least one error rate is required"));
        }
        for (i, &p) in self.p.iter().enumerate() {
            if !(0.0..0.5).contains(&p) {
                return Err(Error::config(format!("p[{i}]"), format!("must lie in [0, 0.5), got {p}")));
            }
        }
        if self.eta.is_empty() {
            return Err(Error::config("eta", "at least one bias is required"));
        }
        for (i, &eta) in self.eta.iter().enumerate() {
            if !(eta > 0.0) {
                return Err(Error::config(format!("eta[{i}]"), format!("must be positive, got {eta}")));
            }
        }
        if self.shots == 0 {
            return Err(Error::config("shots", "must be positive"));
        }
        if self.rounds == Some(0) {
            return Err(Error::config("rounds", "must be positive"));
        }
        if self.decoders.is_empty() {
            return Err(Error::config("decoders", "at least one decoder is required"));
        }
        for (i, k) in self.decoders.iter().enumerate() {
            if k.is_css() && (self.noise != NoiseModel::CodeCapacity || self.deformation != Deformation::Css) {
                return Err(Error::config(format!("decoders[{i}]"), format!("{k} needs an undeformed code under code_capacity noise")));
            }
        }
        if !(self.fit_window > 0.0) {
            return Err(Error::config("fit_window", "must be positive"));
        }
        Ok(())
    }

    pub fn cell_spec(&self, d: usize, p: f64, eta: f64) -> Result<CellSpec> {
        Ok(CellSpec {
            d,
            ell: self.ell,
            deformation: self.deformation,
            model: self.noise,
            params: NoiseParams::new(p, eta)?,
            basis: self.basis,
            rounds: self.rounds.unwrap_or(d),
        })
    }

    fn output_dir(&self) -> Result<&Path> {
        self.output.as_deref().ok_or_else(|| Error::config("output", "an output directory is required"))
    }
}

/// Best-effort top-level key for a serde error: the key named in the message,
/// or the line of the error.
fn json_path(e: &serde_json::Error, _text: &str) -> String {
    let msg = e.to_string();
    for marker in ["field `", "variant `"] {
        if let Some(start) = msg.find(marker) {
            let rest = &msg[start + marker.len()..];
            if let Some(end) = rest.find('`') {
                return rest[..end].to_string();
            }
        }
    }
    format!("line {}", e.line())
}

/// Seed of one cell: SHA-256 of the run seed and the cell parameters.
pub fn cell_seed(run_seed: u64, spec: &CellSpec) -> u64 {
    let mut h = Sha256::new();
    h.update(run_seed.to_le_bytes());
    h.update(serde_json::to_vec(spec).expect("cell spec serializes"));
    let out = h.finalize();
    u64::from_le_bytes(out[..8].try_into().unwrap())
}

/// One row of `rates.csv`. The column order is part of the file format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub d: usize,
    pub ell: usize,
    pub deformation: Deformation,
    pub noise: NoiseModel,
    pub basis: Basis,
    pub rounds: usize,
    pub eta: String,
    pub p: f64,
    pub decoder: DecoderKind,
    pub shots: u64,
    pub failures: u64,
    pub rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

pub const RATE_COLUMNS: [&str; 14] =
    ["d", "ell", "deformation", "noise", "basis", "rounds", "eta", "p", "decoder", "shots", "failures", "rate", "ci_low", "ci_high"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub d: usize,
    #[serde(serialize_with = "crate::noise::ser_eta", deserialize_with = "crate::noise::de_eta")]
    pub eta: f64,
    pub p: f64,
    pub seed: u64,
    pub shots: usize,
    /// SHA-256 of the shot batch every decoder in this cell consumed.
    pub batch_digest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitEntry {
    #[serde(serialize_with = "crate::noise::ser_eta", deserialize_with = "crate::noise::de_eta")]
    pub eta: f64,
    pub decoder: DecoderKind,
    pub fit: Option<ThresholdFit>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainEntry {
    #[serde(serialize_with = "crate::noise::ser_eta", deserialize_with = "crate::noise::de_eta")]
    pub eta: f64,
    pub decoder: DecoderKind,
    pub baseline: DecoderKind,
    pub gain: GainRecord,
}

pub const MANIFEST_FORMAT: &str = "compass-experiment-v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub version: String,
    pub config: ExperimentConfig,
    pub cells: Vec<CellRecord>,
    /// SHA-256 of each result file.
    pub files: BTreeMap<String, String>,
    pub status: String,
}

impl Manifest {
    pub fn read(path: &Path) -> Result<Manifest> {
        let m: Manifest = serde_json::from_str(&fs::read_to_string(path)?)?;
        if m.format != MANIFEST_FORMAT {
            return Err(Error::Parse(format!("unknown manifest format `{}`", m.format)));
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub rates: Vec<RatePoint>,
    pub fits: Vec<FitEntry>,
    pub gains: Vec<GainEntry>,
    pub manifest: Manifest,
}

fn sha256_file(path: &Path) -> Result<String> {
    Ok(hex::encode(Sha256::digest(fs::read(path)?)))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse(format!("{other:?}")),
    }
}

/// Decodes one sampled cell with every decoder; returns the rates in decoder order.
pub fn run_cell(cfg: &ExperimentConfig, d: usize, p: f64, eta: f64) -> Result<(CellRecord, Vec<RatePoint>)> {
    let spec = cfg.cell_spec(d, p, eta)?;
    let cell = Cell::new(spec)?;
    let seed = cell_seed(cfg.seed, &spec);
    let batch = cell.sample(cfg.shots, seed);
    let truth: Vec<u64> = (0..batch.shots()).map(|s| batch.observable_mask(s)).collect();
    let mut rates = Vec::with_capacity(cfg.decoders.len());
    for &kind in &cfg.decoders {
        let predicted = cell.predict_batch(kind, &batch)?;
        let label = PointLabel { d, ell: cfg.ell, deformation: cfg.deformation, eta, p, decoder: kind.name().into() };
        rates.push(estimate_rate(label, &predicted, &truth)?);
    }
    let record = CellRecord { d, eta, p, seed, shots: cfg.shots, batch_digest: batch.digest() };
    Ok((record, rates))
}

/// Threshold fits per (eta, decoder) over all distances and error rates.
pub fn fit_all(cfg: &ExperimentConfig, rates: &[RatePoint]) -> Vec<FitEntry> {
    let mut out = Vec::new();
    for &eta in &cfg.eta {
        for &kind in &cfg.decoders {
            let pts: Vec<RatePoint> = rates.iter().filter(|r| r.eta == eta && r.decoder == kind.name()).cloned().collect();
            let opts = FitOptions { bootstrap: cfg.bootstrap, window: cfg.fit_window, seed: cfg.seed };
            let (fit, error) = match fit_threshold(&pts, opts) {
                Ok(f) => (Some(f), None),
                Err(e) => (None, Some(e.to_string())),
            };
            out.push(FitEntry { eta, decoder: kind, fit, error });
        }
    }
    out
}

/// Gains of every non-MWPM decoder over MWPM wherever both fits exist.
pub fn gains_from(fits: &[FitEntry]) -> Vec<GainEntry> {
    let mut out = Vec::new();
    for base in fits.iter().filter(|f| f.decoder == DecoderKind::Mwpm) {
        let Some(bf) = &base.fit else { continue };
        for other in fits.iter().filter(|f| f.eta == base.eta && f.decoder != DecoderKind::Mwpm) {
            if let Some(of) = &other.fit {
                out.push(GainEntry { eta: base.eta, decoder: other.decoder, baseline: DecoderKind::Mwpm, gain: decoder_gain(of, bf) });
            }
        }
    }
    out
}

fn rate_plot(cfg: &ExperimentConfig, rates: &[RatePoint], eta: f64, kind: DecoderKind, fit: Option<&ThresholdFit>) -> String {
    let series: Vec<svg::Series> = cfg
        .d
        .iter()
        .map(|&d| svg::Series {
            name: format!("d={d}"),
            points: rates
                .iter()
                .filter(|r| r.d == d && r.eta == eta && r.decoder == kind.name())
                .map(|r| (r.p, r.rate, r.ci_low, r.ci_high))
                .collect(),
        })
        .collect();
    let marker = fit.map(|f| (f.p_th, format!("p_th = {:.4}", f.p_th)));
    let title = format!("{kind}, eta = {}, ell = {}, {:?}", format_eta(eta), cfg.ell, cfg.deformation);
    svg::line_plot(&title, "p", "logical error rate", &series, true, true, marker.as_ref().map(|m| (m.0, m.1.as_str())))
}

/// Runs the whole sweep and writes `rates.csv`, `fits.json`, `gains.json`,
/// `manifest.json` and, if enabled, one rate plot per (eta, decoder). Rates
/// are flushed row by row; on failure the manifest records the error.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let dir = cfg.output_dir()?.to_path_buf();
    fs::create_dir_all(&dir)?;
    let mut manifest = Manifest {
        format: MANIFEST_FORMAT.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: cfg.clone(),
        cells: Vec::new(),
        files: BTreeMap::new(),
        status: "running".into(),
    };
    let mut rates = Vec::new();
    let sweep = (|| -> Result<()> {
        let mut w = csv::Writer::from_path(dir.join("rates.csv")).map_err(csv_error)?;
        for &eta in &cfg.eta {
            for &d in &cfg.d {
                for &p in &cfg.p {
                    let (record, points) = run_cell(cfg, d, p, eta)?;
                    for (r, &kind) in points.iter().zip(&cfg.decoders) {
                        w.serialize(RateRow {
                            d,
                            ell: cfg.ell,
                            deformation: cfg.deformation,
                            noise: cfg.noise,
                            basis: cfg.basis,
                            rounds: cfg.rounds.unwrap_or(d),
                            eta: format_eta(eta),
                            p,
                            decoder: kind,
                            shots: r.shots,
                            failures: r.failures,
                            rate: r.rate,
                            ci_low: r.ci_low,
                            ci_high: r.ci_high,
                        })
                        .map_err(csv_error)?;
                    }
                    w.flush()?;
                    manifest.cells.push(record);
                    rates.extend(points);
                }
            }
        }
        Ok(())
    })();
    if let Err(e) = sweep {
        manifest.status = format!("failed: {e}");
        manifest.files.insert("rates.csv".into(), sha256_file(&dir.join("rates.csv")).unwrap_or_default());
        write_json(&dir.join("manifest.json"), &manifest)?;
        return Err(e);
    }

    let fits = fit_all(cfg, &rates);
    let gains = gains_from(&fits);
    write_json(&dir.join("fits.json"), &fits)?;
    write_json(&dir.join("gains.json"), &gains)?;
    let mut files = vec!["rates.csv".to_string(), "fits.json".into(), "gains.json".into()];
    if cfg.plots {
        for f in &fits {
            let name = format!("rates_{}_eta_{}.svg", f.decoder, format_eta(f.eta));
            fs::write(dir.join(&name), rate_plot(cfg, &rates, f.eta, f.decoder, f.fit.as_ref()))?;
            files.push(name);
        }
    }
    for name in files {
        let hash = sha256_file(&dir.join(&name))?;
        manifest.files.insert(name, hash);
    }
    manifest.status = "ok".into();
    write_json(&dir.join("manifest.json"), &manifest)?;
    Ok(ExperimentResult { rates, fits, gains, manifest })
}

/// Reads `rates.csv` back.
pub fn read_rates(path: &Path) -> Result<Vec<RateRow>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_error)?;
    r.deserialize().map(|row| row.map_err(csv_error)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapRow {
    pub eta: String,
    pub decoder: DecoderKind,
    pub shot: usize,
    pub signed_gap: f64,
    pub gap_db: f64,
    pub decoder_correct: bool,
    pub w_min: f64,
    pub w_comp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapSummary {
    #[serde(serialize_with = "crate::noise::ser_eta", deserialize_with = "crate::noise::de_eta")]
    pub eta: f64,
    pub decoder: DecoderKind,
    pub shots: usize,
    /// Shots whose memory observable the decoder mispredicted.
    pub failures: usize,
    pub negative_gaps: usize,
    pub mean_signed_gap: f64,
    /// Standard error of the mean signed gap.
    pub sem_signed_gap: f64,
    pub mean_gap_db: f64,
}

/// Per-shot complementary gaps for one cell.
pub fn gap_records(cell: &Cell, kind: DecoderKind, shots: usize, seed: u64) -> Result<(Vec<GapRecord>, usize)> {
    let gg = cell.gap_graph()?;
    let batch = cell.sample(shots, seed);
    let records: Vec<GapRecord> = crate::exec::map_indexed(shots, |s| cell.gap(&gg, kind, &batch, s)).into_iter().collect::<Result<_>>()?;
    let target = cell.target_mask();
    let predicted = cell.predict_batch(kind, &batch)?;
    let failures = (0..shots).filter(|&s| (predicted[s] ^ batch.observable_mask(s)) & target != 0).count();
    Ok((records, failures))
}

/// Gap sweep over the configured biases at a single distance and error rate.
/// Writes `gaps.csv`, `gap_summary.json`, `manifest.json` and one histogram
/// per decoder.
pub fn run_gap(cfg: &ExperimentConfig) -> Result<Vec<GapSummary>> {
    cfg.validate()?;
    if cfg.d.len() != 1 {
        return Err(Error::config("d", "gap runs take exactly one distance"));
    }
    if cfg.p.len() != 1 {
        return Err(Error::config("p", "gap runs take exactly one error rate"));
    }
    if cfg.p[0] == 0.0 {
        return Err(Error::config("p[0]", "gaps need a positive error rate"));
    }
    for (i, k) in cfg.decoders.iter().enumerate() {
        if !matches!(k, DecoderKind::Mwpm | DecoderKind::Corr) {
            return Err(Error::config(format!("decoders[{i}]"), format!("gaps are computed for mwpm and corr, not {k}")));
        }
    }
    let dir = cfg.output_dir()?.to_path_buf();
    fs::create_dir_all(&dir)?;
    let (d, p) = (cfg.d[0], cfg.p[0]);
    let mut w = csv::Writer::from_path(dir.join("gaps.csv")).map_err(csv_error)?;
    let mut summaries = Vec::new();
    let mut cells = Vec::new();
    let mut per_decoder: BTreeMap<DecoderKind, Vec<(String, Vec<f64>)>> = BTreeMap::new();
    for &eta in &cfg.eta {
        let spec = cfg.cell_spec(d, p, eta)?;
        let cell = Cell::new(spec)?;
        let seed = cell_seed(cfg.seed, &spec);
        cells.push(CellRecord { d, eta, p, seed, shots: cfg.shots, batch_digest: cell.sample(cfg.shots, seed).digest() });
        for &kind in &cfg.decoders {
            let (records, failures) = gap_records(&cell, kind, cfg.shots, seed)?;
            for r in &records {
                w.serialize(GapRow {
                    eta: format_eta(eta),
                    decoder: kind,
                    shot: r.shot,
                    signed_gap: r.signed_gap,
                    gap_db: r.gap_db,
                    decoder_correct: r.decoder_correct,
                    w_min: r.w_min,
                    w_comp: r.w_comp,
                })
                .map_err(csv_error)?;
            }
            w.flush()?;
            let n = records.len() as f64;
            let mean = records.iter().map(|r| r.signed_gap).sum::<f64>() / n;
            let var = records.iter().map(|r| (r.signed_gap - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
            summaries.push(GapSummary {
                eta,
                decoder: kind,
                shots: records.len(),
                failures,
                negative_gaps: records.iter().filter(|r| !r.decoder_correct).count(),
                mean_signed_gap: mean,
                sem_signed_gap: (var / n).sqrt(),
                mean_gap_db: records.iter().map(|r| r.gap_db).sum::<f64>() / n,
            });
            per_decoder.entry(kind).or_default().push((format!("eta={}", format_eta(eta)), records.iter().map(|r| r.gap_db).collect()));
        }
    }
    drop(w);
    write_json(&dir.join("gap_summary.json"), &summaries)?;
    let mut files = vec!["gaps.csv".to_string(), "gap_summary.json".into()];
    if cfg.plots {
        for (kind, series) in &per_decoder {
            let name = format!("gaps_{kind}.svg");
            let title = format!("signed complementary gap, {kind}, d = {d}, p = {p}");
            fs::write(dir.join(&name), svg::histogram(&title, "signed gap (dB)", series, 40))?;
            files.push(name);
        }
    }
    let mut manifest = Manifest {
        format: MANIFEST_FORMAT.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: cfg.clone(),
        cells,
        files: BTreeMap::new(),
        status: "ok".into(),
    };
    for name in files {
        let hash = sha256_file(&dir.join(&name))?;
        manifest.files.insert(name, hash);
    }
    write_json(&dir.join("manifest.json"), &manifest)?;
    Ok(summaries)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"d": [3], "ell": 2, "noise": "hbd", "p": [0.0], "eta": [1], "shots": 100, "seed": 1}"#;

    #[test]
    fn seed_is_mandatory() {
        let err = ExperimentConfig::from_json(r#"{"d": [3], "ell": 2, "noise": "hbd", "p": [0.01], "eta": [1], "shots": 10}"#).unwrap_err();
        assert!(err.is_config_error());
        assert!(err.to_string().contains("seed"), "{err}");
    }

    #[test]
    fn validation_reports_field_paths() {
        let bad = MINIMAL.replace("\"p\": [0.0]", "\"p\": [0.01, 0.7]");
        let err = ExperimentConfig::from_json(&bad).unwrap_err();
        assert!(err.to_string().contains("p[1]"), "{err}");
        let bad = MINIMAL.replace("\"seed\": 1", "\"seed\": 1, \"colour\": 2");
        assert!(ExperimentConfig::from_json(&bad).unwrap_err().is_config_error());
        let bad = MINIMAL.replace("}", ", \"decoders\": [\"css-zx\"]}");
        assert!(ExperimentConfig::from_json(&bad).unwrap_err().to_string().contains("decoders[0]"));
    }

    #[test]
    fn eta_accepts_infinity() {
        let cfg = ExperimentConfig::from_json(&MINIMAL.replace("[1]", "[0.5, \"inf\"]")).unwrap();
        assert_eq!(cfg.eta, vec![0.5, f64::INFINITY]);
        let back: ExperimentConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn minimal_zero_noise_run() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = ExperimentConfig::from_json(MINIMAL).unwrap();
        cfg.output = Some(dir.path().to_path_buf());
        let res = run_experiment(&cfg).unwrap();
        assert!(res.rates.iter().all(|r| r.failures == 0));
        assert!(dir.path().join("manifest.json").exists());
        let rows = read_rates(&dir.path().join("rates.csv")).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].failures, 0);
        let header = fs::read_to_string(dir.path().join("rates.csv")).unwrap();
        assert_eq!(header.lines().next().unwrap(), RATE_COLUMNS.join(","));
    }
}
