//! Command-line front end: single-point runs and parameter sweeps.
//!
//! Exit codes: 0 success, 1 configuration error, 2 numerical failure
//! (including sweeps with failed points recorded in the manifest).

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use floq::analysis;
use floq::config::{self, ParsedConfig};
use floq::dynloc;
use floq::floquet;
use floq::markovian::{HarmonicParams, NoiseSpectrum};
use floq::propagator;
use floq::sweep::{self, SweepSpec};

#[derive(Parser)]
#[command(name = "floq", version, about = "Floquet analysis of a modulated waveguide coupled to a waveguide array")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Configuration file (key = value sections; see README)
    #[arg(long)]
    config: PathBuf,
    /// Output directory; created if missing
    #[arg(long)]
    out: PathBuf,
    /// Override a config key, e.g. --set modulation.a=6.5 (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the propagation equation and export the amplitude trace
    Propagate(CommonArgs),
    /// Solve the quasienergy spectrum
    Spectrum {
        #[command(flatten)]
        common: CommonArgs,
        /// Also dump per-mode Fourier components as JSON
        #[arg(long)]
        modes: bool,
    },
    /// Detect bound modes in the quasienergy gap
    Fbm(CommonArgs),
    /// Spectral-filtering (Markovian) intensity next to the exact one
    Markovian(CommonArgs),
    /// Conventional dynamic-localization comparison at one configuration
    Dynloc(CommonArgs),
    /// Run the sweep described by the [sweep] section
    Sweep(CommonArgs),
}

fn load_config(common: &CommonArgs) -> Result<ParsedConfig, ExitCode> {
    let text = match fs::read_to_string(&common.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", common.config.display());
            return Err(ExitCode::from(1));
        }
    };
    let mut overrides = Vec::new();
    for raw in &common.set {
        match config::parse_override(raw) {
            Ok(kv) => overrides.push(kv),
            Err(e) => {
                eprintln!("error: {e}");
                return Err(ExitCode::from(1));
            }
        }
    }
    match config::validate_config(&text, &overrides) {
        Ok(parsed) => Ok(parsed),
        Err(errors) => {
            for e in &errors {
                eprintln!("error: {}: {e}", common.config.display());
            }
            Err(ExitCode::from(1))
        }
    }
}

fn ensure_out(dir: &Path) -> Result<(), ExitCode> {
    fs::create_dir_all(dir).map_err(|e| {
        eprintln!("error: cannot create {}: {e}", dir.display());
        ExitCode::from(1)
    })
}

fn numerical(e: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(2)
}

fn solve_spectrum(parsed: &ParsedConfig) -> Result<floquet::FloquetSpectrum, ExitCode> {
    match parsed.floquet.n_harmonics {
        Some(nf) => floquet::solve_spectrum(&parsed.system, nf),
        None => floquet::solve_spectrum_converged(&parsed.system),
    }
    .map_err(numerical)
}

fn run_propagate(parsed: &ParsedConfig, out: &Path) -> Result<(), ExitCode> {
    let dz = parsed.run.dz.unwrap_or_else(|| propagator::default_dz(&parsed.system));
    let trace =
        propagator::propagate(&parsed.system, parsed.run.z_max, dz).map_err(numerical)?;
    sweep::write_trace_csv(&out.join("trace.csv"), &trace).map_err(numerical)?;
    sweep::write_intensity_csv(&out.join("intensity.csv"), &trace).map_err(numerical)?;
    println!(
        "propagated to z = {} in {} samples; final |A1|^2 = {:.6}",
        parsed.run.z_max,
        trace.len(),
        trace.principal_intensity(trace.len() - 1)
    );
    Ok(())
}

fn run_spectrum(parsed: &ParsedConfig, out: &Path, modes: bool) -> Result<(), ExitCode> {
    let spectrum = solve_spectrum(parsed)?;
    let param = axis_value(parsed);
    let mut body = sweep::spectrum_csv_header(spectrum.n_modes());
    body.push_str(&sweep::spectrum_csv_row(param, &spectrum.quasienergies));
    fs::write(out.join("spectrum.csv"), body).map_err(numerical)?;
    if modes {
        sweep::write_mode_dump(&out.join("modes.json"), &spectrum).map_err(numerical)?;
    }
    println!(
        "solved {} quasienergies at N_F = {} (omega = {})",
        spectrum.n_modes(),
        spectrum.n_harmonics,
        spectrum.omega
    );
    Ok(())
}

/// Value of the natural sweep axis of the active profile, used as the
/// param column for single-point spectrum exports.
fn axis_value(parsed: &ParsedConfig) -> f64 {
    match parsed.system.modulation {
        floq::ModulationProfile::None => 0.0,
        floq::ModulationProfile::HarmonicCoupling { a, .. } => a,
        floq::ModulationProfile::StepIndex { delta, .. } => delta,
    }
}

fn run_fbm(parsed: &ParsedConfig, out: &Path) -> Result<(), ExitCode> {
    let spectrum = solve_spectrum(parsed)?;
    let report = analysis::detect_fbm(&spectrum, &parsed.system).map_err(numerical)?;
    let record = report.to_record(axis_value(parsed));
    sweep::write_json(&out.join("fbm.json"), &record).map_err(numerical)?;
    println!(
        "M = {} bound mode(s); gap width {}; eps = {:?}",
        report.count_m, report.gap_width, report.quasienergies
    );
    Ok(())
}

fn run_markovian(parsed: &ParsedConfig, out: &Path) -> Result<(), ExitCode> {
    let params = HarmonicParams::try_from(&parsed.system.modulation).map_err(numerical)?;
    let dz = parsed.run.dz.unwrap_or_else(|| propagator::default_dz(&parsed.system));
    let trace =
        propagator::propagate(&parsed.system, parsed.run.z_max, dz).map_err(numerical)?;
    let ns = NoiseSpectrum::for_config(&parsed.system);
    let markov: Vec<f64> = trace
        .zgrid
        .iter()
        .map(|&z| floq::markovian::markovian_intensity(&ns, &params, parsed.system.beta1, z))
        .collect();
    let exact: Vec<f64> = (0..trace.len()).map(|k| trace.principal_intensity(k)).collect();
    sweep::write_markovian_csv(&out.join("markovian.csv"), &trace.zgrid, &markov, &exact)
        .map_err(numerical)?;
    println!(
        "markovian |alpha|^2 at z = {}: {:.6}; exact |A1|^2: {:.6}",
        parsed.run.z_max,
        markov.last().unwrap(),
        exact.last().unwrap()
    );
    Ok(())
}

fn run_dynloc(parsed: &ParsedConfig, out: &Path) -> Result<(), ExitCode> {
    let cmp = dynloc::compare_methods(&parsed.system, parsed.run.z_max).map_err(numerical)?;
    let mut body = sweep::dynloc_csv_header().to_string();
    body.push_str(&sweep::dynloc_csv_row(&cmp));
    fs::write(out.join("dynloc.csv"), body).map_err(numerical)?;
    println!(
        "Z = {}: |F0|^2 = {:.6}, effective tail = {:.4}, exact tail = {:.4}, M = {}",
        cmp.z_period, cmp.abs_f0_sq, cmp.eff_intensity_longz, cmp.exact_intensity_longz, cmp.fbm_count
    );
    Ok(())
}

fn run_sweep_cmd(parsed: &ParsedConfig, out: &Path) -> Result<(), ExitCode> {
    let Some(settings) = &parsed.sweep else {
        eprintln!("error: config has no [sweep] section");
        return Err(ExitCode::from(1));
    };
    let spec = SweepSpec {
        base: parsed.system.clone(),
        axis: settings.axis,
        values: settings.values.clone(),
        outputs: settings.outputs.clone(),
        run: parsed.run.clone(),
        floquet: parsed.floquet.clone(),
    };
    let manifest = sweep::run_sweep(&spec, out).map_err(numerical)?;
    let failed = manifest.failed_entries();
    println!(
        "swept {} over {} points; {} entries, {} failed; manifest at {}",
        spec.axis.name(),
        spec.values.len(),
        manifest.entries.len(),
        failed,
        out.join("manifest.json").display()
    );
    if failed > 0 {
        return Err(ExitCode::from(2));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (common, action): (&CommonArgs, fn(&ParsedConfig, &Path) -> Result<(), ExitCode>) =
        match &cli.command {
            Command::Propagate(c) => (c, run_propagate),
            Command::Spectrum { common, modes } => {
                let parsed = match load_config(common) {
                    Ok(p) => p,
                    Err(code) => return code,
                };
                if ensure_out(&common.out).is_err() {
                    return ExitCode::from(1);
                }
                return match run_spectrum(&parsed, &common.out, *modes) {
                    Ok(()) => ExitCode::SUCCESS,
                    Err(code) => code,
                };
            }
            Command::Fbm(c) => (c, run_fbm),
            Command::Markovian(c) => (c, run_markovian),
            Command::Dynloc(c) => (c, run_dynloc),
            Command::Sweep(c) => (c, run_sweep_cmd),
        };
    let parsed = match load_config(common) {
        Ok(p) => p,
        Err(code) => return code,
    };
    if ensure_out(&common.out).is_err() {
        return ExitCode::from(1);
    }
    match action(&parsed, &common.out) {
        Ok(()) => ExitCode::SUCCESS,
        Err(code) => code,
    }
}
