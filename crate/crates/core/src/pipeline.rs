//! End-to-end runs: zeros, traces, strips, statistics and artifacts.
//!
//! Expensive stages (zero scan, contour traces, zero classification) are
//! cached under `<output_dir>/.stages/` in files named by a SHA-256 of
//! everything the stage depends on, so an interrupted run resumes where
//! it stopped and a changed configuration never picks up stale data.
//!
//! Artifacts are written to a staging directory first. On success they
//! replace the previous artifacts in `output_dir`; on failure whatever was
//! produced is moved to `<output_dir>/quarantine/<run hash>/`.

use crate::artifacts::{self, FigureFile};
use crate::contour::{ContourTrace, Terminus, TraceConfig, TraceError, TraceKind, Tracer, ZeroContourClass};
use crate::stats::{self, FitResult, HalvesReport, Moments, ScatterReport, SeriesId, StatsError};
use crate::strips::{build_strips, primary_agreement, PrimaryAgreement, Strip, StripError};
use crate::zeros::{CountCheck, CriticalZero, ZeroError, ZeroFinder, ZeroFinderConfig};
use crate::zeta::{strip_asymptote, AsymptoteKind, ComplexPoint, Zeta, ZetaError};
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use thiserror::Error;

const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Lowest scanned height. The first zero is at 14.13 and the smooth
/// counting formula is only used from 10 up.
pub const ZERO_SCAN_FLOOR: f64 = 10.0;
/// Scan margin above the last boundary asymptote.
const ZERO_SCAN_MARGIN: f64 = 5.0;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("zero scan failed")]
    Zeros(#[from] ZeroError),
    #[error("seeding failed")]
    Seed(#[source] TraceError),
    #[error("trace k = {k} failed")]
    Trace { k: u32, source: TraceError },
    #[error("classifying zero {ordinal} at t = {t} failed")]
    Classify { ordinal: u64, t: f64, source: TraceError },
    #[error(transparent)]
    Strip(#[from] StripError),
    #[error("statistics failed")]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Zeta(#[from] ZetaError),
    #[error("stage `{0}` is not cached for this configuration; run the earlier stages first")]
    MissingStage(&'static str),
    #[error("{path}")]
    Io { path: PathBuf, source: io::Error },
    #[error("worker pool: {0}")]
    Pool(String),
}

pub type Result<T> = std::result::Result<T, PipelineError>;

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub m_max: u32,
    pub sigma_right: f64,
    pub sigma_left: f64,
    pub measurement_sigma: f64,
    pub rounding_emulation: bool,
    pub output_dir: PathBuf,
    pub scan_step: f64,
    /// Worker threads; 0 means one per available core.
    pub worker_count: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            m_max: 200,
            sigma_right: 8.0,
            sigma_left: -3.0,
            measurement_sigma: 0.5,
            rounding_emulation: true,
            output_dir: PathBuf::from("zeta-out"),
            scan_step: 0.05,
            worker_count: 0,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.sigma_left, self.measurement_sigma, self.sigma_right, self.scan_step]
            .iter()
            .all(|x| x.is_finite());
        if !finite {
            return Err(PipelineError::Config("real-valued settings must be finite".into()));
        }
        if !(self.sigma_left < self.measurement_sigma && self.measurement_sigma < self.sigma_right) {
            return Err(PipelineError::Config(format!(
                "need sigma_left < measurement_sigma < sigma_right, got {} < {} < {}",
                self.sigma_left, self.measurement_sigma, self.sigma_right
            )));
        }
        if !(self.sigma_left < 0.5 && 0.5 < self.sigma_right) {
            return Err(PipelineError::Config(format!(
                "the traced region [{}, {}] must contain the critical line",
                self.sigma_left, self.sigma_right
            )));
        }
        if self.m_max < 1 {
            return Err(PipelineError::Config("m_max must be at least 1".into()));
        }
        if !(self.scan_step > 0.0) {
            return Err(PipelineError::Config(format!("scan_step must be positive, got {}", self.scan_step)));
        }
        Ok(())
    }

    /// Height range scanned for zeros when strips `1..=m_hi` are wanted.
    pub fn zero_range(m_hi: u32) -> Result<(f64, f64)> {
        let top = strip_asymptote(m_hi as i64 + 1, AsymptoteKind::Boundary)?;
        Ok((ZERO_SCAN_FLOOR, top + ZERO_SCAN_MARGIN))
    }

    fn tracer(&self) -> Result<Tracer> {
        let config = TraceConfig {
            sigma_right: self.sigma_right,
            sigma_left: self.sigma_left,
            ..TraceConfig::default()
        };
        Tracer::new(Zeta::default(), config).map_err(|e| PipelineError::Config(e.to_string()))
    }

    fn finder(&self) -> Result<ZeroFinder> {
        let config = ZeroFinderConfig {
            scan_step: self.scan_step,
            ..ZeroFinderConfig::default()
        };
        Ok(ZeroFinder::new(Zeta::default(), config)?)
    }

    /// Hash of every setting that affects results.
    pub fn run_hash(&self) -> String {
        digest(&(
            "run",
            VERSION,
            self.m_max,
            self.sigma_right,
            self.sigma_left,
            self.measurement_sigma,
            self.rounding_emulation,
            self.scan_step,
        ))
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.worker_count)
            .build()
            .map_err(|e| PipelineError::Pool(e.to_string()))
    }
}

fn digest<T: Serialize>(key: &T) -> String {
    let bytes = serde_json::to_vec(key).expect("stage keys serialize");
    hex::encode(Sha256::digest(bytes))
}

/// A cached stage result together with the key it was computed for.
#[derive(Serialize, Deserialize)]
struct StageFile<K, T> {
    stage: String,
    version: String,
    key: K,
    data: T,
}

struct StageCache {
    dir: PathBuf,
}

impl StageCache {
    fn new(output_dir: &Path) -> Self {
        Self {
            dir: output_dir.join(".stages"),
        }
    }

    fn path(&self, stage: &str, hash: &str) -> PathBuf {
        self.dir.join(format!("{stage}-{hash}.json"))
    }

    fn load<K, T>(&self, stage: &str, key: &K) -> Option<T>
    where
        K: Serialize + DeserializeOwned + PartialEq,
        T: DeserializeOwned,
    {
        let path = self.path(stage, &digest(&(stage, VERSION, key)));
        let text = fs::read(&path).ok()?;
        match serde_json::from_slice::<StageFile<K, T>>(&text) {
            Ok(file) if file.stage == stage && file.version == VERSION && &file.key == key => {
                log::info!("reusing cached {stage} stage from {}", path.display());
                Some(file.data)
            }
            _ => {
                log::warn!("ignoring unreadable or mismatched cache file {}", path.display());
                None
            }
        }
    }

    fn store<K: Serialize, T: Serialize>(&self, stage: &str, key: &K, data: &T) -> Result<()> {
        fs::create_dir_all(&self.dir).map_err(io_err(&self.dir))?;
        let path = self.path(stage, &digest(&(stage, VERSION, key)));
        let file = StageFile {
            stage: stage.to_string(),
            version: VERSION.to_string(),
            key,
            data,
        };
        // write then rename so an interrupted write never leaves a torn file
        let tmp = path.with_extension("json.partial");
        let bytes = serde_json::to_vec(&file).expect("stage data serializes");
        fs::write(&tmp, bytes).map_err(io_err(&tmp))?;
        fs::rename(&tmp, &path).map_err(io_err(&path))
    }
}

#[derive(Serialize, Deserialize, PartialEq)]
struct ZerosKey {
    t_min: f64,
    t_max: f64,
    scan_step: f64,
}

#[derive(Serialize, Deserialize, PartialEq)]
struct TracesKey {
    m_lo: u32,
    m_hi: u32,
    sigma_right: f64,
    sigma_left: f64,
    zeros: String,
}

#[derive(Serialize, Deserialize, PartialEq)]
struct ClassesKey {
    sigma_right: f64,
    sigma_left: f64,
    ordinals: Vec<u64>,
    zeros: String,
}

/// What a pipeline invocation should produce.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Target {
    /// `zeros.csv` only, over the strips' height range or an explicit one.
    Zeros { range: Option<(f64, f64)> },
    /// Contours bounding strips `m_lo..=m_hi`, plus the zeros they need.
    Traces { m_lo: u32, m_hi: u32 },
    /// Zeros, contours and `strips.csv`.
    Strips,
    /// Everything, including figures and `report.json`.
    Report,
    /// Like `Report`, but zeros and traces must already be cached.
    ReportFromCache,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceManifestEntry {
    pub k: u32,
    pub kind: TraceKind,
    pub start: ComplexPoint,
    pub terminus: Terminus,
    pub points: usize,
    pub file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceManifest {
    pub sigma_right: f64,
    pub sigma_left: f64,
    pub traces: Vec<TraceManifestEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundingEffect {
    pub slope_rounded: f64,
    pub slope_exact: f64,
    pub slope_change: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreSummary {
    pub mean: f64,
    pub std_error: f64,
    /// Distance of the mean from 1/2 in standard errors.
    pub z_from_half: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogGrowth {
    pub first_half_mean_zeros: f64,
    pub second_half_mean_zeros: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fits {
    /// Rounded (or exact, without emulation) bottoms against `m`.
    pub bottoms: Option<FitResult>,
    /// Same data against `m - 1`.
    pub bottoms_from_zero: Option<FitResult>,
    pub tops: Option<FitResult>,
    pub primary_score: Option<FitResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Census {
    pub strips: usize,
    pub zeros_in_strips: usize,
    /// Lowest and highest boundary crossings of the critical line, the
    /// lower one raised to the scan floor if needed.
    pub t_low: f64,
    pub t_high: f64,
    pub count: CountCheck,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub version: String,
    pub config_hash: String,
    pub m_max: u32,
    pub sigma_right: f64,
    pub sigma_left: f64,
    pub measurement_sigma: f64,
    pub rounding_emulation: bool,
    pub scan_step: f64,
    pub fits: Fits,
    pub rounding_effect: Option<RoundingEffect>,
    pub primary_score: ScoreSummary,
    pub halves: Option<HalvesReport>,
    /// Zeros per strip (a) against zeros per unit width (b).
    pub scatter: Option<ScatterReport>,
    pub log_growth: Option<LogGrowth>,
    pub census: Census,
    pub agreement: PrimaryAgreement,
    pub series: Vec<FigureFile>,
}

/// Headline numbers of a finished run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub output_dir: PathBuf,
    pub config_hash: String,
    pub zeros: usize,
    pub traces: usize,
    pub strips: usize,
    pub files: Vec<String>,
    pub bottoms_fit: Option<FitResult>,
    pub tops_fit: Option<FitResult>,
    pub mean_primary_score: Option<f64>,
    pub primaries_agree: Option<bool>,
}

/// Everything computed by a run, before it is written out.
#[derive(Debug, Clone, Default)]
pub struct RunData {
    pub zeros: Vec<CriticalZero>,
    pub traces: Vec<ContourTrace>,
    pub strips: Vec<Strip>,
    pub classes: BTreeMap<u64, ZeroContourClass>,
    pub report: Option<Report>,
}

/// Runs the full pipeline and writes every artifact.
pub fn run(config: &RunConfig) -> Result<RunSummary> {
    execute(config, Target::Report)
}

pub fn execute(config: &RunConfig, target: Target) -> Result<RunSummary> {
    config.validate()?;
    let out = &config.output_dir;
    fs::create_dir_all(out).map_err(io_err(out))?;
    let hash = config.run_hash();
    let staging = out.join(format!(".staging-{hash}"));
    if staging.exists() {
        fs::remove_dir_all(&staging).map_err(io_err(&staging))?;
    }
    fs::create_dir_all(&staging).map_err(io_err(&staging))?;

    let pool = config.pool()?;
    let mut files = Vec::new();
    let result = pool.install(|| produce(config, target, &staging, &mut files));
    match result {
        Ok(data) => {
            promote(&staging, out, &files)?;
            let stale = out.join("quarantine").join(&hash);
            if stale.exists() {
                fs::remove_dir_all(&stale).map_err(io_err(&stale))?;
            }
            Ok(RunSummary {
                output_dir: out.clone(),
                config_hash: hash,
                zeros: data.zeros.len(),
                traces: data.traces.len(),
                strips: data.strips.len(),
                files,
                bottoms_fit: data.report.as_ref().and_then(|r| r.fits.bottoms),
                tops_fit: data.report.as_ref().and_then(|r| r.fits.tops),
                mean_primary_score: data.report.as_ref().map(|r| r.primary_score.mean),
                primaries_agree: data.report.as_ref().map(|r| r.agreement.all_agree()),
            })
        }
        Err(e) => {
            let quarantine = out.join("quarantine").join(&hash);
            if let Err(q) = quarantine_partial(&staging, &quarantine, &e) {
                log::error!("could not quarantine partial output: {}", error_chain(&q));
            } else {
                log::error!("run failed, partial output kept in {}", quarantine.display());
            }
            Err(e)
        }
    }
}

fn quarantine_partial(staging: &Path, quarantine: &Path, error: &PipelineError) -> Result<()> {
    if quarantine.exists() {
        fs::remove_dir_all(quarantine).map_err(io_err(quarantine))?;
    }
    let parent = quarantine.parent().expect("quarantine has a parent");
    fs::create_dir_all(parent).map_err(io_err(parent))?;
    fs::rename(staging, quarantine).map_err(io_err(quarantine))?;
    let note = quarantine.join("error.txt");
    fs::write(&note, format!("{}\n", error_chain(error))).map_err(io_err(&note))
}

/// The error and its sources, joined by `: `.
pub fn error_chain(error: &dyn std::error::Error) -> String {
    let mut text = error.to_string();
    let mut source = error.source();
    while let Some(e) = source {
        text.push_str(": ");
        text.push_str(&e.to_string());
        source = e.source();
    }
    text
}

fn promote(staging: &Path, out: &Path, files: &[String]) -> Result<()> {
    let mut tops: Vec<&str> = files.iter().map(|f| f.split('/').next().unwrap_or(f)).collect();
    tops.dedup();
    for name in tops {
        let target = out.join(name);
        if target.is_dir() {
            fs::remove_dir_all(&target).map_err(io_err(&target))?;
        } else if target.exists() {
            fs::remove_file(&target).map_err(io_err(&target))?;
        }
        fs::rename(staging.join(name), &target).map_err(io_err(&target))?;
    }
    fs::remove_dir_all(staging).map_err(io_err(staging))
}

/// Computes the requested stages, writing artifacts into `dir` and
/// recording their relative paths in `files`.
fn produce(config: &RunConfig, target: Target, dir: &Path, files: &mut Vec<String>) -> Result<RunData> {
    let cache = StageCache::new(&config.output_dir);
    let cached_only = target == Target::ReportFromCache;
    let (m_lo, m_hi) = match target {
        Target::Traces { m_lo, m_hi } => (m_lo, m_hi),
        _ => (1, config.m_max),
    };
    if m_lo < 1 || m_hi < m_lo {
        return Err(PipelineError::Config(format!("strip range {m_lo}..={m_hi} is empty")));
    }

    let range = match target {
        Target::Zeros { range: Some(range) } => range,
        _ => RunConfig::zero_range(m_hi)?,
    };
    let (zeros, zeros_hash) = zeros_stage(config, &cache, range, cached_only)?;
    let path = dir.join("zeros.csv");
    artifacts::write_zeros(&path, &zeros).map_err(io_err(&path))?;
    files.push("zeros.csv".into());
    let mut data = RunData {
        zeros,
        ..RunData::default()
    };
    if matches!(target, Target::Zeros { .. }) {
        return Ok(data);
    }

    let tracer = config.tracer()?;
    let (traces, traces_hash) = traces_stage(config, &cache, &tracer, &data.zeros, &zeros_hash, m_lo, m_hi, cached_only)?;
    write_traces(config, dir, &traces, files)?;
    data.traces = traces;
    if matches!(target, Target::Traces { .. }) {
        return Ok(data);
    }
    log::debug!("traces stage {traces_hash}");

    data.strips = build_strips(&tracer, &data.traces, &data.zeros, config.m_max, config.measurement_sigma)?;
    let path = dir.join("strips.csv");
    artifacts::write_strips(&path, &data.strips).map_err(io_err(&path))?;
    files.push("strips.csv".into());
    if target == Target::Strips {
        return Ok(data);
    }

    data.classes = classes_stage(config, &cache, &tracer, &data, &zeros_hash)?;
    let figures = artifacts::write_figures(dir, &data.strips, config.rounding_emulation).map_err(io_err(dir))?;
    files.extend(figures.iter().map(|f| f.file.clone()));
    let report = build_report(config, &tracer, &data, figures)?;
    let path = dir.join("report.json");
    artifacts::write_json(&path, &report).map_err(io_err(&path))?;
    files.push("report.json".into());
    data.report = Some(report);
    Ok(data)
}

fn zeros_stage(
    config: &RunConfig,
    cache: &StageCache,
    (t_min, t_max): (f64, f64),
    cached_only: bool,
) -> Result<(Vec<CriticalZero>, String)> {
    let key = ZerosKey {
        t_min,
        t_max,
        scan_step: config.scan_step,
    };
    let hash = digest(&("zeros", VERSION, &key));
    if let Some(zeros) = cache.load("zeros", &key) {
        return Ok((zeros, hash));
    }
    if cached_only {
        return Err(PipelineError::MissingStage("zeros"));
    }
    log::info!("scanning for zeros on [{t_min}, {t_max:.3}]");
    let zeros = config.finder()?.find_critical_zeros(t_min, t_max)?;
    log::info!("found {} zeros", zeros.len());
    cache.store("zeros", &key, &zeros)?;
    Ok((zeros, hash))
}

#[allow(clippy::too_many_arguments)]
fn traces_stage(
    config: &RunConfig,
    cache: &StageCache,
    tracer: &Tracer,
    zeros: &[CriticalZero],
    zeros_hash: &str,
    m_lo: u32,
    m_hi: u32,
    cached_only: bool,
) -> Result<(Vec<ContourTrace>, String)> {
    let key = TracesKey {
        m_lo,
        m_hi,
        sigma_right: config.sigma_right,
        sigma_left: config.sigma_left,
        zeros: zeros_hash.to_string(),
    };
    let hash = digest(&("traces", VERSION, &key));
    if let Some(traces) = cache.load("traces", &key) {
        return Ok((traces, hash));
    }
    if cached_only {
        return Err(PipelineError::MissingStage("traces"));
    }
    let seeds = tracer.seed_range(m_lo, m_hi).map_err(PipelineError::Seed)?;
    log::info!("tracing {} contours", seeds.len());
    let traces: Vec<ContourTrace> = seeds
        .par_iter()
        .map(|seed| {
            tracer
                .trace_im_zero(seed, zeros)
                .map_err(|source| PipelineError::Trace { k: seed.k, source })
        })
        .collect::<Result<_>>()?;
    cache.store("traces", &key, &traces)?;
    Ok((traces, hash))
}

fn classes_stage(
    config: &RunConfig,
    cache: &StageCache,
    tracer: &Tracer,
    data: &RunData,
    zeros_hash: &str,
) -> Result<BTreeMap<u64, ZeroContourClass>> {
    let ordinals: Vec<u64> = data.strips.iter().flat_map(|s| s.zeros.iter().copied()).collect();
    let key = ClassesKey {
        sigma_right: config.sigma_right,
        sigma_left: config.sigma_left,
        ordinals,
        zeros: zeros_hash.to_string(),
    };
    if let Some(classes) = cache.load::<_, Vec<(u64, ZeroContourClass)>>("classes", &key) {
        return Ok(classes.into_iter().collect());
    }
    let wanted: Vec<&CriticalZero> = data
        .zeros
        .iter()
        .filter(|z| key.ordinals.binary_search(&z.ordinal).is_ok())
        .collect();
    log::info!("classifying {} zeros", wanted.len());
    let classes: Vec<(u64, ZeroContourClass)> = wanted
        .par_iter()
        .map(|z| {
            tracer
                .classify_zero_contour(z)
                .map(|class| (z.ordinal, class))
                .map_err(|source| PipelineError::Classify {
                    ordinal: z.ordinal,
                    t: z.t,
                    source,
                })
        })
        .collect::<Result<_>>()?;
    cache.store("classes", &key, &classes)?;
    Ok(classes.into_iter().collect())
}

fn write_traces(config: &RunConfig, dir: &Path, traces: &[ContourTrace], files: &mut Vec<String>) -> Result<()> {
    let contours = dir.join("contours");
    fs::create_dir_all(&contours).map_err(io_err(&contours))?;
    let mut entries = Vec::with_capacity(traces.len());
    for trace in traces {
        let name = artifacts::trace_file_name(trace);
        let path = contours.join(&name);
        artifacts::write_trace(&path, trace).map_err(io_err(&path))?;
        entries.push(TraceManifestEntry {
            k: trace.k,
            kind: trace.kind,
            start: trace.start,
            terminus: trace.terminus.clone(),
            points: trace.points.len(),
            file: format!("contours/{name}"),
        });
    }
    files.push("contours".into());
    let manifest = TraceManifest {
        sigma_right: config.sigma_right,
        sigma_left: config.sigma_left,
        traces: entries,
    };
    let path = dir.join("traces.json");
    artifacts::write_json(&path, &manifest).map_err(io_err(&path))?;
    files.push("traces.json".into());
    Ok(())
}

/// Fits with fewer than three strips are reported as absent.
fn optional<T>(r: stats::Result<T>) -> Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(StatsError::TooFew { .. }) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

pub fn build_report(config: &RunConfig, tracer: &Tracer, data: &RunData, series: Vec<FigureFile>) -> Result<Report> {
    let strips = &data.strips;
    let rounded = config.rounding_emulation;
    let column = |id, rounded| stats::series(strips, id, rounded);

    let bottoms = column(SeriesId::Bottoms, rounded);
    let fits = Fits {
        bottoms: optional(stats::fit_series(&bottoms, 0.0))?,
        bottoms_from_zero: optional(stats::fit_series(&bottoms, -1.0))?,
        tops: optional(stats::fit_series(&column(SeriesId::Tops, rounded), 0.0))?,
        primary_score: optional(stats::fit_series(&column(SeriesId::PrimaryScore, rounded), 0.0))?,
    };
    let rounding_effect = match (
        optional(stats::fit_series(&column(SeriesId::Bottoms, true), 0.0))?,
        optional(stats::fit_series(&column(SeriesId::Bottoms, false), 0.0))?,
    ) {
        (Some(r), Some(e)) => Some(RoundingEffect {
            slope_rounded: r.slope,
            slope_exact: e.slope,
            slope_change: (r.slope - e.slope).abs(),
        }),
        _ => None,
    };

    let scores: Vec<f64> = column(SeriesId::PrimaryScore, rounded).iter().map(|r| r.value).collect();
    let moments = Moments::of(&scores);
    let std_error = moments.std_error();
    let primary_score = ScoreSummary {
        mean: moments.mean,
        std_error,
        z_from_half: if std_error > 0.0 {
            (moments.mean - 0.5) / std_error
        } else {
            0.0
        },
    };
    let halves = optional(stats::dispersion_compare(&scores))?;

    let zeros_per_strip = column(SeriesId::Zeros, rounded);
    let scatter = optional(stats::scatter_dispersion(
        &zeros_per_strip,
        &column(SeriesId::ZerosPerWidth, rounded),
    ))?;
    let log_growth = (strips.len() >= 2).then(|| {
        let counts: Vec<f64> = zeros_per_strip.iter().map(|r| r.value).collect();
        let (a, b) = counts.split_at(counts.len() / 2);
        LogGrowth {
            first_half_mean_zeros: mean(a),
            second_half_mean_zeros: mean(b),
        }
    });

    let census = census(config, tracer, data)?;
    Ok(Report {
        version: VERSION.to_string(),
        config_hash: config.run_hash(),
        m_max: config.m_max,
        sigma_right: config.sigma_right,
        sigma_left: config.sigma_left,
        measurement_sigma: config.measurement_sigma,
        rounding_emulation: config.rounding_emulation,
        scan_step: config.scan_step,
        fits,
        rounding_effect,
        primary_score,
        halves,
        scatter,
        log_growth,
        census,
        agreement: primary_agreement(strips, &data.classes),
        series,
    })
}

/// Zeros between the lowest and highest boundary crossings of the critical
/// line, checked against the exact counting function.
fn census(config: &RunConfig, tracer: &Tracer, data: &RunData) -> Result<Census> {
    let crossing = |k: u32| -> Result<f64> {
        let trace = data
            .traces
            .iter()
            .find(|t| t.k == k)
            .ok_or(StripError::MissingTrace {
                k,
                kind: TraceKind::Boundary,
            })?;
        tracer
            .crossing_at_sigma(trace, 0.5)
            .map_err(|source| PipelineError::Trace { k, source })
    };
    // the counting function starts at the scan floor; there are no zeros
    // between the first boundary and it
    let t_low = crossing(2)?.max(ZERO_SCAN_FLOOR);
    let t_high = crossing(2 * config.m_max + 2)?;
    let inside: Vec<CriticalZero> = data.zeros.iter().copied().filter(|z| t_low < z.t && z.t < t_high).collect();
    let count = config.finder()?.verify_count(&inside, t_low, t_high)?;
    Ok(Census {
        strips: data.strips.len(),
        zeros_in_strips: data.strips.iter().map(Strip::n_zeros).sum(),
        t_low,
        t_high,
        count,
    })
}

/// Runs the stages in memory without writing artifacts.
pub fn compute(config: &RunConfig) -> Result<RunData> {
    config.validate()?;
    config.pool()?.install(|| {
        let tracer = config.tracer()?;
        let (t_min, t_max) = RunConfig::zero_range(config.m_max)?;
        let zeros = config.finder()?.find_critical_zeros(t_min, t_max)?;
        let seeds = tracer.seed_starts(config.m_max).map_err(PipelineError::Seed)?;
        let traces = seeds
            .par_iter()
            .map(|seed| {
                tracer
                    .trace_im_zero(seed, &zeros)
                    .map_err(|source| PipelineError::Trace { k: seed.k, source })
            })
            .collect::<Result<Vec<_>>>()?;
        let strips = build_strips(&tracer, &traces, &zeros, config.m_max, config.measurement_sigma)?;
        let mut data = RunData {
            zeros,
            traces,
            strips,
            ..RunData::default()
        };
        data.classes = classify_strip_zeros(&tracer, &data)?;
        let report = build_report(config, &tracer, &data, Vec::new())?;
        data.report = Some(report);
        Ok(data)
    })
}

fn classify_strip_zeros(tracer: &Tracer, data: &RunData) -> Result<BTreeMap<u64, ZeroContourClass>> {
    let ordinals: std::collections::BTreeSet<u64> = data.strips.iter().flat_map(|s| s.zeros.iter().copied()).collect();
    data.zeros
        .par_iter()
        .filter(|z| ordinals.contains(&z.ordinal))
        .map(|z| {
            tracer
                .classify_zero_contour(z)
                .map(|class| (z.ordinal, class))
                .map_err(|source| PipelineError::Classify {
                    ordinal: z.ordinal,
                    t: z.t,
                    source,
                })
        })
        .collect::<Result<Vec<_>>>()
        .map(|v| v.into_iter().collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &str, pass: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.to_string(),
            pass,
            detail: detail.into(),
        }
    }

    fn failed(name: &str, error: impl std::fmt::Display) -> Self {
        Self::new(name, false, error.to_string())
    }
}

/// Deterministic grid of `n_sigma * n_t` points.
fn grid(sigmas: (f64, f64), ts: (f64, f64), n_sigma: usize, n_t: usize) -> Vec<ComplexPoint> {
    let lerp = |(a, b): (f64, f64), i: usize, n: usize| {
        if n == 1 {
            a
        } else {
            a + (b - a) * i as f64 / (n - 1) as f64
        }
    };
    (0..n_sigma)
        .flat_map(|i| (0..n_t).map(move |j| ComplexPoint::new(lerp(sigmas, i, n_sigma), lerp(ts, j, n_t))))
        .collect()
}

fn worst<F>(points: &[ComplexPoint], f: F) -> std::result::Result<(f64, ComplexPoint), ZetaError>
where
    F: Fn(ComplexPoint) -> std::result::Result<f64, ZetaError> + Sync,
{
    let values = points.par_iter().map(|&p| f(p).map(|v| (v, p))).collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(values.into_iter().fold((0.0, points[0]), |a, b| if b.0 > a.0 { b } else { a }))
}

fn tolerance_check<F>(name: &str, points: &[ComplexPoint], tol: f64, f: F) -> CheckResult
where
    F: Fn(ComplexPoint) -> std::result::Result<f64, ZetaError> + Sync,
{
    match worst(points, f) {
        Ok((err, at)) => CheckResult::new(
            name,
            err < tol,
            format!("{} points, worst {err:.3e} at {at} (tolerance {tol:e})", points.len()),
        ),
        Err(e) => CheckResult::failed(name, e),
    }
}

/// Numerical self-checks of the zeta evaluator.
pub fn numerics_checks() -> Vec<CheckResult> {
    let zeta = Zeta::default();
    let plane = grid((-2.5, 3.5), (5.0, 1000.0), 10, 10);
    let strip = grid((0.05, 0.95), (10.0, 2000.0), 10, 10);
    let mut checks = vec![
        tolerance_check("functional-equation", &strip, 1e-8, |s| zeta.functional_eq_residual(s)),
        tolerance_check("conjugate-symmetry", &plane, 1e-12, |s| {
            let a = zeta.eval(s)?.value;
            let b = zeta.eval(s.conj())?.value;
            Ok((a - b.conj()).norm() / a.norm().max(1.0))
        }),
        tolerance_check("derivative-finite-difference", &strip, 1e-5, |s| {
            let h = 1e-5;
            let up = zeta.eval(ComplexPoint::new(s.sigma, s.t + h))?.value;
            let down = zeta.eval(ComplexPoint::new(s.sigma, s.t - h))?.value;
            // d/dt zeta(sigma + i t) = i zeta'(s)
            let fd = (up - down) / (2.0 * h) / num_complex::Complex64::i();
            let exact = zeta.eval_deriv(s)?.value;
            Ok((fd - exact).norm())
        }),
    ];
    let line = grid((0.5, 0.5), (10.0, 2000.0), 1, 100);
    checks.push(tolerance_check("hardy-z-modulus", &line, 1e-9, |s| {
        let z = zeta.hardy_z(s.t)?;
        let modulus = zeta.eval(s)?.value.norm();
        Ok((z.abs() - modulus).abs() / modulus.max(1.0))
    }));
    checks.push(first_zeros_check());
    checks
}

fn first_zeros_check() -> CheckResult {
    const KNOWN: [f64; 3] = [14.134725, 21.022040, 25.010858];
    match crate::zeros::find_critical_zeros(ZERO_SCAN_FLOOR, 26.0) {
        Ok(zeros) => {
            let heights: Vec<f64> = zeros.iter().map(|z| z.t).collect();
            let pass = heights.len() == 3 && heights.iter().zip(KNOWN).all(|(t, k)| (t - k).abs() < 5e-7);
            CheckResult::new("first-zeros", pass, format!("{heights:?}"))
        }
        Err(e) => CheckResult::failed("first-zeros", e),
    }
}

/// Cross-module checks for a configuration. Never fails: problems are
/// reported as failed checks, and a check whose inputs could not be
/// produced is reported as failed with the reason.
pub fn validate(config: &RunConfig) -> Vec<CheckResult> {
    if let Err(e) = config.validate() {
        return vec![CheckResult::failed("config", e)];
    }
    let mut checks = vec![CheckResult::new("config", true, "ok")];
    let pool = match config.pool() {
        Ok(pool) => pool,
        Err(e) => {
            checks.push(CheckResult::failed("worker-pool", e));
            return checks;
        }
    };
    pool.install(|| {
        checks.extend(numerics_checks());
        checks.extend(pipeline_checks(config));
    });
    checks
}

fn pipeline_checks(config: &RunConfig) -> Vec<CheckResult> {
    let mut checks = Vec::new();
    let skipped = |name: &str, why: &str| CheckResult::new(name, false, format!("not run: {why}"));
    let later = ["zero-count", "traces", "tiling", "census", "primary-agreement"];

    let tracer = match config.tracer() {
        Ok(t) => t,
        Err(e) => {
            checks.push(CheckResult::failed("seeds", e));
            checks.extend(later.iter().map(|n| skipped(n, "no tracer")));
            return checks;
        }
    };
    let seeds = match tracer.seed_starts(config.m_max) {
        Ok(seeds) => {
            checks.push(CheckResult::new("seeds", true, format!("{} seeds", seeds.len())));
            seeds
        }
        Err(e) => {
            checks.push(CheckResult::failed("seeds", e));
            checks.extend(later.iter().map(|n| skipped(n, "seeding failed")));
            return checks;
        }
    };

    let zeros = match RunConfig::zero_range(config.m_max).and_then(|(lo, hi)| {
            let finder = config.finder()?;
            let zeros = finder.find_critical_zeros(lo, hi)?;
            let check = finder.verify_count(&zeros, lo, hi)?;
            Ok((zeros, check))
        }) {
        Ok((zeros, check)) => {
            checks.push(CheckResult::new(
                "zero-count",
                check.pass,
                format!("found {}, expected {}", check.found, check.expected),
            ));
            zeros
        }
        Err(e) => {
            checks.push(CheckResult::failed("zero-count", e));
            checks.extend(later[1..].iter().map(|n| skipped(n, "zero scan failed")));
            return checks;
        }
    };

    let traces = match seeds
        .par_iter()
        .map(|seed| {
            tracer
                .trace_im_zero(seed, &zeros)
                .map_err(|source| PipelineError::Trace { k: seed.k, source })
        })
        .collect::<Result<Vec<_>>>()
    {
        Ok(traces) => {
            let bad: Vec<u32> = traces
                .iter()
                .filter(|t| {
                    !matches!(
                        (t.kind, &t.terminus),
                        (TraceKind::Boundary, Terminus::LeftBoundary { .. })
                            | (TraceKind::PrimaryCandidate, Terminus::Zero { .. })
                    )
                })
                .map(|t| t.k)
                .collect();
            checks.push(CheckResult::new(
                "traces",
                bad.is_empty(),
                if bad.is_empty() {
                    format!("{} traces end where expected", traces.len())
                } else {
                    format!("unexpected termini for k = {bad:?}")
                },
            ));
            traces
        }
        Err(e) => {
            checks.push(CheckResult::failed("traces", e));
            checks.extend(later[2..].iter().map(|n| skipped(n, "tracing failed")));
            return checks;
        }
    };

    let strips = match build_strips(&tracer, &traces, &zeros, config.m_max, config.measurement_sigma) {
        Ok(strips) => strips,
        Err(e) => {
            checks.push(CheckResult::failed("tiling", e));
            checks.extend(later[3..].iter().map(|n| skipped(n, "strips could not be built")));
            return checks;
        }
    };
    checks.push(tiling_check(&strips));

    let mut data = RunData {
        zeros,
        traces,
        strips,
        ..RunData::default()
    };
    match census(config, &tracer, &data) {
        Ok(c) => checks.push(CheckResult::new(
            "census",
            c.count.pass && c.zeros_in_strips as i64 == c.count.expected,
            format!("{} zeros in strips, counting function gives {}", c.zeros_in_strips, c.count.expected),
        )),
        Err(e) => checks.push(CheckResult::failed("census", e)),
    }
    match classify_strip_zeros(&tracer, &data) {
        Ok(classes) => {
            data.classes = classes;
            let a = primary_agreement(&data.strips, &data.classes);
            checks.push(CheckResult::new(
                "primary-agreement",
                a.all_agree(),
                format!(
                    "{}/{} strips agree, {} with a single right-escaping zero",
                    a.agreeing, a.strips, a.single_right
                ),
            ));
        }
        Err(e) => checks.push(CheckResult::failed("primary-agreement", e)),
    }
    checks
}

/// Strips share their boundaries and each zero belongs to exactly one.
fn tiling_check(strips: &[Strip]) -> CheckResult {
    let gaps: Vec<u32> = strips
        .windows(2)
        .filter(|w| w[0].top_t != w[1].bottom_t)
        .map(|w| w[0].m)
        .collect();
    let ordinals: Vec<u64> = strips.iter().flat_map(|s| s.zeros.iter().copied()).collect();
    let consecutive = ordinals.windows(2).all(|w| w[1] == w[0] + 1);
    let empty: Vec<u32> = strips.iter().filter(|s| s.zeros.is_empty()).map(|s| s.m).collect();
    let pass = gaps.is_empty() && consecutive && empty.is_empty();
    CheckResult::new(
        "tiling",
        pass,
        format!(
            "{} strips, {} zeros, gaps after {gaps:?}, empty {empty:?}, consecutive ordinals: {consecutive}",
            strips.len(),
            ordinals.len()
        ),
    )
}
