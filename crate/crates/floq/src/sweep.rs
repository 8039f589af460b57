//! Parameter-sweep orchestration and deterministic data export.
//!
//! One record per grid point per requested output; a JSON manifest lists
//! every file with the config hash of the point that produced it.
//! Per-point numerical failures are recorded in the manifest without
//! aborting the rest of the grid. Points run on a bounded worker pool
//! (`FLOQ_WORKERS`) and results are merged in grid order, so repeat runs
//! produce byte-identical files regardless of worker count.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::analysis;
use crate::config::{FloquetSettings, RunParams};
use crate::dynloc;
use crate::floquet::{self, FloquetSpectrum};
use crate::markovian::{self, HarmonicParams, NoiseSpectrum};
use crate::model::{ModulationProfile, SystemConfig};
use crate::propagator::{self, AmplitudeTrace};

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("invalid sweep: {0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("worker pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputKind {
    Trace,
    Spectrum,
    Fbm,
    Markovian,
    Dynloc,
}

impl OutputKind {
    pub fn name(self) -> &'static str {
        match self {
            OutputKind::Trace => "trace",
            OutputKind::Spectrum => "spectrum",
            OutputKind::Fbm => "fbm",
            OutputKind::Markovian => "markovian",
            OutputKind::Dynloc => "dynloc",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SweepAxis {
    #[serde(rename = "a")]
    A,
    #[serde(rename = "omega")]
    Omega,
    #[serde(rename = "delta")]
    Delta,
    #[serde(rename = "Z")]
    ZPeriod,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::A => "a",
            SweepAxis::Omega => "omega",
            SweepAxis::Delta => "delta",
            SweepAxis::ZPeriod => "Z",
        }
    }
}

/// Sweep description as it comes out of the config file.
#[derive(Debug, Clone)]
pub struct SweepSettings {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub outputs: Vec<OutputKind>,
}

impl SweepSettings {
    pub fn check_against(&self, system: &SystemConfig) -> Result<(), String> {
        if self.values.is_empty() {
            return Err("sweep grid is empty".into());
        }
        if self.values.windows(2).any(|w| w[1] <= w[0]) {
            return Err("sweep grid must be strictly ascending".into());
        }
        let harmonic = matches!(system.modulation, ModulationProfile::HarmonicCoupling { .. });
        let step = matches!(system.modulation, ModulationProfile::StepIndex { .. });
        match self.axis {
            SweepAxis::A | SweepAxis::Omega if !harmonic => Err(format!(
                "axis '{}' needs a harmonic coupling profile",
                self.axis.name()
            )),
            SweepAxis::Delta | SweepAxis::ZPeriod if !step => Err(format!(
                "axis '{}' needs a step-index profile",
                self.axis.name()
            )),
            _ => {
                if matches!(self.axis, SweepAxis::Omega | SweepAxis::ZPeriod)
                    && self.values.first().copied().unwrap_or(0.0) <= 0.0
                {
                    Err(format!("axis '{}' requires strictly positive values", self.axis.name()))
                } else {
                    Ok(())
                }
            }
        }
    }
}

/// Fully resolved sweep: base config, grid, outputs, run parameters.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub base: SystemConfig,
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub outputs: Vec<OutputKind>,
    pub run: RunParams,
    pub floquet: FloquetSettings,
}

/// Base config with the sweep axis set to `value`.
///
/// A period sweep keeps the duty ratio Z′/Z of the base profile fixed.
pub fn apply_axis(base: &SystemConfig, axis: SweepAxis, value: f64) -> SystemConfig {
    let mut cfg = base.clone();
    match (axis, &base.modulation) {
        (SweepAxis::A, ModulationProfile::HarmonicCoupling { omega, b, .. }) => {
            cfg.modulation =
                ModulationProfile::HarmonicCoupling { a: value, omega: *omega, b: *b };
        }
        (SweepAxis::Omega, ModulationProfile::HarmonicCoupling { a, b, .. }) => {
            cfg.modulation = ModulationProfile::HarmonicCoupling { a: *a, omega: value, b: *b };
        }
        (SweepAxis::Delta, ModulationProfile::StepIndex { beta0, period, duty, .. }) => {
            cfg.modulation = ModulationProfile::StepIndex {
                beta0: *beta0,
                delta: value,
                period: *period,
                duty: *duty,
            };
        }
        (SweepAxis::ZPeriod, ModulationProfile::StepIndex { beta0, delta, period, duty }) => {
            let ratio = duty / period;
            cfg.modulation = ModulationProfile::StepIndex {
                beta0: *beta0,
                delta: *delta,
                period: value,
                duty: ratio * value,
            };
        }
        _ => unreachable!("axis/profile compatibility checked at validation"),
    }
    cfg
}

#[derive(Debug, Clone, Serialize)]
pub struct ManifestEntry {
    pub index: usize,
    pub param_value: f64,
    pub kind: OutputKind,
    pub path: String,
    pub config_hash: String,
    pub status: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub outputs: Vec<OutputKind>,
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn failed_entries(&self) -> usize {
        self.entries.iter().filter(|e| e.status != "ok").count()
    }
}

fn worker_count() -> usize {
    std::env::var("FLOQ_WORKERS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

// ---------------------------------------------------------------------------
// writers

fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

pub fn write_trace_csv(path: &Path, trace: &AmplitudeTrace) -> std::io::Result<()> {
    let n = trace.amplitudes.first().map(|a| a.len()).unwrap_or(0);
    let mut out = String::new();
    out.push('z');
    for j in 1..=n {
        let _ = write!(out, ",re_A{j},im_A{j}");
    }
    out.push('\n');
    for (k, z) in trace.zgrid.iter().enumerate() {
        out.push_str(&fmt_f64(*z));
        for a in &trace.amplitudes[k] {
            let _ = write!(out, ",{},{}", fmt_f64(a.re), fmt_f64(a.im));
        }
        out.push('\n');
    }
    fs::write(path, out)
}

pub fn write_intensity_csv(path: &Path, trace: &AmplitudeTrace) -> std::io::Result<()> {
    let n = trace.amplitudes.first().map(|a| a.len()).unwrap_or(0);
    let mut out = String::new();
    out.push('z');
    for j in 1..=n {
        let _ = write!(out, ",I{j}");
    }
    out.push('\n');
    for (k, z) in trace.zgrid.iter().enumerate() {
        out.push_str(&fmt_f64(*z));
        for a in &trace.amplitudes[k] {
            let _ = write!(out, ",{}", fmt_f64(a.norm_sqr()));
        }
        out.push('\n');
    }
    fs::write(path, out)
}

pub fn spectrum_csv_header(n_modes: usize) -> String {
    let mut h = String::from("param_value");
    for j in 1..=n_modes {
        let _ = write!(h, ",eps_{j}");
    }
    h.push('\n');
    h
}

pub fn spectrum_csv_row(param: f64, eps: &[f64]) -> String {
    let mut row = fmt_f64(param);
    for e in eps {
        let _ = write!(row, ",{}", fmt_f64(*e));
    }
    row.push('\n');
    row
}

pub fn write_markovian_csv(
    path: &Path,
    zgrid: &[f64],
    markov: &[f64],
    exact: &[f64],
) -> std::io::Result<()> {
    let mut out = String::from("z,markov_intensity,exact_intensity\n");
    for k in 0..zgrid.len() {
        let _ = writeln!(
            out,
            "{},{},{}",
            fmt_f64(zgrid[k]),
            fmt_f64(markov[k]),
            fmt_f64(exact[k])
        );
    }
    fs::write(path, out)
}

pub fn dynloc_csv_header() -> &'static str {
    "Z,absF0sq,eff_intensity_longz,exact_intensity_longz,fbm_count\n"
}

pub fn dynloc_csv_row(cmp: &dynloc::MethodComparison) -> String {
    format!(
        "{},{},{},{},{}\n",
        fmt_f64(cmp.z_period),
        fmt_f64(cmp.abs_f0_sq),
        fmt_f64(cmp.eff_intensity_longz),
        fmt_f64(cmp.exact_intensity_longz),
        cmp.fbm_count
    )
}

/// Long-format principal-intensity heatmap rows, downsampled in z to at
/// most `max_rows` samples per grid point.
pub fn heatmap_rows(param: f64, trace: &AmplitudeTrace, max_rows: usize) -> String {
    let stride = (trace.len() / max_rows.max(1)).max(1);
    let mut out = String::new();
    for k in (0..trace.len()).step_by(stride) {
        let _ = writeln!(
            out,
            "{},{},{}",
            fmt_f64(param),
            fmt_f64(trace.zgrid[k]),
            fmt_f64(trace.principal_intensity(k))
        );
    }
    out
}

/// Per-mode Fourier components in a stable JSON layout.
#[derive(Serialize)]
struct ModeDump {
    omega: f64,
    n_harmonics: usize,
    quasienergies: Vec<f64>,
    /// modes[alpha].components[h] is ũ(m = h − N_F) as [re, im] pairs.
    modes: Vec<ModeEntry>,
}

#[derive(Serialize)]
struct ModeEntry {
    eps: f64,
    components: Vec<Vec<[f64; 2]>>,
}

pub fn write_mode_dump(path: &Path, spectrum: &FloquetSpectrum) -> std::io::Result<()> {
    let nf = spectrum.n_harmonics as i64;
    let dump = ModeDump {
        omega: spectrum.omega,
        n_harmonics: spectrum.n_harmonics,
        quasienergies: spectrum.quasienergies.clone(),
        modes: (0..spectrum.n_modes())
            .map(|alpha| ModeEntry {
                eps: spectrum.quasienergies[alpha],
                components: (-nf..=nf)
                    .map(|m| {
                        spectrum
                            .mode_fourier(alpha, m)
                            .unwrap()
                            .iter()
                            .map(|c| [c.re, c.im])
                            .collect()
                    })
                    .collect(),
            })
            .collect(),
    };
    write_json(path, &dump)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> std::io::Result<()> {
    let mut file = fs::File::create(path)?;
    let text = serde_json::to_string_pretty(value).expect("serializable");
    file.write_all(text.as_bytes())?;
    file.write_all(b"\n")
}

// ---------------------------------------------------------------------------
// plot scripts

fn gnuplot_header(title: &str) -> String {
    format!("set datafile separator ','\nset title '{title}'\nset grid\n")
}

pub fn write_plot_scripts(dir: &Path, spec: &SweepSpec, n_modes: usize) -> std::io::Result<()> {
    let axis = spec.axis.name();
    if spec.outputs.contains(&OutputKind::Trace) {
        let mut s = gnuplot_header("principal-waveguide intensity");
        s.push_str("set xlabel 'param'\nset ylabel 'z'\nset view map\n");
        s.push_str("splot 'heatmap.csv' using 1:2:3 with points pointtype 5 palette notitle\n");
        fs::write(dir.join("heatmap.gp"), s)?;
    }
    if spec.outputs.contains(&OutputKind::Spectrum) {
        let mut s = gnuplot_header("quasienergy spectrum");
        s.push_str(&format!("set xlabel '{axis}'\nset ylabel 'quasienergy'\n"));
        s.push_str(&format!(
            "plot for [i=2:{}] 'spectrum.csv' using 1:i with points pointtype 7 pointsize 0.2 notitle\n",
            n_modes + 1
        ));
        fs::write(dir.join("spectrum.gp"), s)?;
    }
    if spec.outputs.contains(&OutputKind::Markovian) {
        let mut s = gnuplot_header("spectral filtering vs exact");
        s.push_str("set xlabel 'z'\nset ylabel 'intensity'\n");
        s.push_str(
            "plot 'markovian_000.csv' using 1:2 with lines title 'markov', \\\n     'markovian_000.csv' using 1:3 with lines title 'exact'\n",
        );
        fs::write(dir.join("markovian.gp"), s)?;
    }
    if spec.outputs.contains(&OutputKind::Dynloc) {
        let mut s = gnuplot_header("dynamic localization comparison");
        s.push_str("set xlabel 'Z'\n");
        s.push_str(
            "plot 'dynloc.csv' using 1:2 with lines title '|F0|^2', \\\n     'dynloc.csv' using 1:3 with lines title 'effective', \\\n     'dynloc.csv' using 1:4 with lines title 'exact'\n",
        );
        fs::write(dir.join("dynloc.gp"), s)?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// per-point computation

struct PointOutput {
    kind: OutputKind,
    /// File written for this point, when the output produces one per point.
    file: Option<(String, String)>,
    /// Row(s) destined for an aggregated file.
    aggregate: Option<String>,
}

struct PointResult {
    index: usize,
    value: f64,
    config_hash: String,
    outputs: Vec<PointOutput>,
    error: Option<String>,
}

fn run_point(spec: &SweepSpec, dir: &Path, index: usize, value: f64) -> PointResult {
    let cfg = apply_axis(&spec.base, spec.axis, value);
    let hash = cfg.config_hash();
    let dz = spec.run.dz.unwrap_or_else(|| propagator::default_dz(&cfg));
    let mut outputs = Vec::new();
    let mut error: Option<String> = None;

    // one spectrum serves all spectral outputs of the point
    let needs_spectrum = spec
        .outputs
        .iter()
        .any(|k| matches!(k, OutputKind::Spectrum | OutputKind::Fbm | OutputKind::Dynloc));
    let spectrum = if needs_spectrum {
        match spec.floquet.n_harmonics {
            Some(nf) => floquet::solve_spectrum(&cfg, nf),
            None => floquet::solve_spectrum_converged(&cfg),
        }
        .map_err(|e| e.to_string())
    } else {
        Err("unused".into())
    };

    let mut trace_cache: Option<AmplitudeTrace> = None;
    let mut get_trace = |error: &mut Option<String>| -> Option<AmplitudeTrace> {
        if trace_cache.is_none() {
            match propagator::propagate(&cfg, spec.run.z_max, dz) {
                Ok(t) => trace_cache = Some(t),
                Err(e) => {
                    *error = Some(e.to_string());
                    return None;
                }
            }
        }
        trace_cache.clone()
    };

    for &kind in &spec.outputs {
        match kind {
            OutputKind::Trace => {
                if let Some(trace) = get_trace(&mut error) {
                    let tname = format!("trace_{index:03}.csv");
                    let iname = format!("intensity_{index:03}.csv");
                    let t = dir.join(&tname);
                    let i = dir.join(&iname);
                    let res = write_trace_csv(&t, &trace).and_then(|_| write_intensity_csv(&i, &trace));
                    match res {
                        Ok(()) => outputs.push(PointOutput {
                            kind,
                            file: Some((tname, iname)),
                            aggregate: Some(heatmap_rows(value, &trace, 1024)),
                        }),
                        Err(e) => error = Some(e.to_string()),
                    }
                }
            }
            OutputKind::Spectrum => match &spectrum {
                Ok(s) => outputs.push(PointOutput {
                    kind,
                    file: None,
                    aggregate: Some(spectrum_csv_row(value, &s.quasienergies)),
                }),
                Err(e) => error = Some(e.clone()),
            },
            OutputKind::Fbm => match &spectrum {
                Ok(s) => match analysis::detect_fbm(s, &cfg) {
                    Ok(report) => {
                        let record = report.to_record(value);
                        outputs.push(PointOutput {
                            kind,
                            file: None,
                            aggregate: Some(
                                serde_json::to_string(&record).expect("serializable"),
                            ),
                        });
                    }
                    Err(e) => error = Some(e.to_string()),
                },
                Err(e) => error = Some(e.clone()),
            },
            OutputKind::Markovian => {
                let params = HarmonicParams::try_from(&cfg.modulation).map_err(|e| e.to_string());
                match (params, get_trace(&mut error)) {
                    (Ok(p), Some(trace)) => {
                        let ns = NoiseSpectrum::for_config(&cfg);
                        let markov: Vec<f64> = trace
                            .zgrid
                            .iter()
                            .map(|&z| markovian::markovian_intensity(&ns, &p, cfg.beta1, z))
                            .collect();
                        let exact: Vec<f64> =
                            (0..trace.len()).map(|k| trace.principal_intensity(k)).collect();
                        let name = format!("markovian_{index:03}.csv");
                        match write_markovian_csv(&dir.join(&name), &trace.zgrid, &markov, &exact) {
                            Ok(()) => outputs.push(PointOutput {
                                kind,
                                file: Some((name.clone(), name)),
                                aggregate: None,
                            }),
                            Err(e) => error = Some(e.to_string()),
                        }
                    }
                    (Err(e), _) => error = Some(e),
                    _ => {}
                }
            }
            OutputKind::Dynloc => match dynloc::compare_methods(&cfg, spec.run.z_max) {
                Ok(cmp) => outputs.push(PointOutput {
                    kind,
                    file: None,
                    aggregate: Some(dynloc_csv_row(&cmp)),
                }),
                Err(e) => error = Some(e.to_string()),
            },
        }
        if error.is_some() {
            break;
        }
    }

    PointResult { index, value, config_hash: hash, outputs, error }
}

/// Run the whole grid and write every output plus `manifest.json`.
pub fn run_sweep(spec: &SweepSpec, out_dir: &Path) -> Result<Manifest, SweepError> {
    let settings = SweepSettings {
        axis: spec.axis,
        values: spec.values.clone(),
        outputs: spec.outputs.clone(),
    };
    settings.check_against(&spec.base).map_err(SweepError::Invalid)?;
    fs::create_dir_all(out_dir)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count())
        .build()
        .map_err(|e| SweepError::Pool(e.to_string()))?;
    let results: Vec<PointResult> = pool.install(|| {
        spec.values
            .par_iter()
            .enumerate()
            .map(|(index, &value)| run_point(spec, out_dir, index, value))
            .collect()
    });

    // aggregated files, grid order
    let mut spectrum_csv: Option<String> = None;
    let mut heatmap_csv: Option<String> = None;
    let mut fbm_records: Vec<String> = Vec::new();
    let mut dynloc_csv: Option<String> = None;
    let mut n_modes = 0usize;
    let mut entries = Vec::new();

    for res in &results {
        let status = match &res.error {
            None => "ok".to_string(),
            Some(e) => format!("error: {e}"),
        };
        if res.outputs.is_empty() {
            // total failure of the point still leaves a manifest record
            entries.push(ManifestEntry {
                index: res.index,
                param_value: res.value,
                kind: *spec.outputs.first().unwrap_or(&OutputKind::Trace),
                path: String::new(),
                config_hash: res.config_hash.clone(),
                status: status.clone(),
            });
        }
        for out in &res.outputs {
            let mut path = String::new();
            match out.kind {
                OutputKind::Trace => {
                    if let Some((t, i)) = &out.file {
                        path = format!("{t};{i}");
                    }
                    if let Some(rows) = &out.aggregate {
                        heatmap_csv
                            .get_or_insert_with(|| "param_value,z,I1\n".to_string())
                            .push_str(rows);
                    }
                }
                OutputKind::Spectrum => {
                    if let Some(row) = &out.aggregate {
                        n_modes = n_modes.max(row.split(',').count() - 1);
                        spectrum_csv.get_or_insert_with(String::new).push_str(row);
                        path = "spectrum.csv".into();
                    }
                }
                OutputKind::Fbm => {
                    if let Some(rec) = &out.aggregate {
                        fbm_records.push(rec.clone());
                        path = "fbm.json".into();
                    }
                }
                OutputKind::Markovian => {
                    if let Some((f, _)) = &out.file {
                        path = f.clone();
                    }
                }
                OutputKind::Dynloc => {
                    if let Some(row) = &out.aggregate {
                        dynloc_csv
                            .get_or_insert_with(|| dynloc_csv_header().to_string())
                            .push_str(row);
                        path = "dynloc.csv".into();
                    }
                }
            }
            entries.push(ManifestEntry {
                index: res.index,
                param_value: res.value,
                kind: out.kind,
                path,
                config_hash: res.config_hash.clone(),
                status: status.clone(),
            });
        }
    }

    if let Some(body) = spectrum_csv {
        fs::write(out_dir.join("spectrum.csv"), format!("{}{body}", spectrum_csv_header(n_modes)))?;
    }
    if let Some(body) = heatmap_csv {
        fs::write(out_dir.join("heatmap.csv"), body)?;
    }
    if !fbm_records.is_empty() {
        let mut body = String::from("[\n");
        body.push_str(&fbm_records.join(",\n"));
        body.push_str("\n]\n");
        fs::write(out_dir.join("fbm.json"), body)?;
    }
    if let Some(body) = dynloc_csv {
        fs::write(out_dir.join("dynloc.csv"), body)?;
    }
    write_plot_scripts(out_dir, spec, n_modes)?;

    let manifest = Manifest {
        tool: "floq".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        axis: spec.axis,
        values: spec.values.clone(),
        outputs: spec.outputs.clone(),
        entries,
    };
    write_json(&out_dir.join("manifest.json"), &manifest)?;
    Ok(manifest)
}
