//! Flat key–value configuration files with per-module sections.
//!
//! ```text
//! [system]
//! L = 200
//! beta = 0.2
//! beta1 = 6.5
//!
//! [modulation]
//! kind = harmonic        # none | harmonic | step
//! a = 3.0
//! omega = 8.0
//! b = 0.6
//!
//! [run]
//! z_max = 100.0
//! dz = auto
//!
//! [sweep]
//! axis = a
//! values = 0:0.05:8
//! outputs = trace,spectrum,fbm
//! ```
//!
//! Validation collects every problem with its source line instead of
//! stopping at the first; command-line overrides (`--set section.key=value`)
//! are applied before typed extraction and report as line 0.

use std::collections::BTreeMap;
use std::fmt;

use crate::model::{ModulationProfile, SystemConfig};
use crate::sweep::{OutputKind, SweepAxis, SweepSettings};

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "override: {}", self.message)
        } else {
            write!(f, "line {}: {}", self.line, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone)]
pub struct RunParams {
    pub z_max: f64,
    /// None means "auto": the propagator default for the configuration.
    pub dz: Option<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct FloquetSettings {
    /// None means the solver's default truncation.
    pub n_harmonics: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct ParsedConfig {
    pub system: SystemConfig,
    pub run: RunParams,
    pub floquet: FloquetSettings,
    pub sweep: Option<SweepSettings>,
}

/// Raw key store: `section.key` → (value, source line).
#[derive(Debug, Default)]
struct RawMap {
    entries: BTreeMap<String, (String, usize)>,
}

impl RawMap {
    fn get(&self, key: &str) -> Option<(&str, usize)> {
        self.entries.get(key).map(|(v, l)| (v.as_str(), *l))
    }
}

const KNOWN_KEYS: &[&str] = &[
    "system.L",
    "system.beta",
    "system.beta1",
    "system.kappa",
    "system.kappa12",
    "system.lambdabar",
    "modulation.kind",
    "modulation.a",
    "modulation.omega",
    "modulation.b",
    "modulation.beta0",
    "modulation.delta",
    "modulation.Z",
    "modulation.Zprime",
    "run.z_max",
    "run.dz",
    "floquet.n_harmonics",
    "sweep.axis",
    "sweep.values",
    "sweep.outputs",
];

fn lex(text: &str, errors: &mut Vec<ConfigError>) -> RawMap {
    let mut map = RawMap::default();
    let mut section = String::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            section = name.trim().to_string();
            if !["system", "modulation", "run", "floquet", "sweep"].contains(&section.as_str()) {
                errors.push(ConfigError {
                    line: line_no,
                    message: format!("unknown section '[{section}]'"),
                });
            }
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            errors.push(ConfigError {
                line: line_no,
                message: format!("expected 'key = value', got '{line}'"),
            });
            continue;
        };
        if section.is_empty() {
            errors.push(ConfigError {
                line: line_no,
                message: "key appears before any [section] header".into(),
            });
            continue;
        }
        let full = format!("{section}.{}", key.trim());
        if !KNOWN_KEYS.contains(&full.as_str()) {
            errors.push(ConfigError { line: line_no, message: format!("unknown key '{full}'") });
            continue;
        }
        if map.entries.contains_key(&full) {
            errors.push(ConfigError { line: line_no, message: format!("duplicate key '{full}'") });
            continue;
        }
        map.entries.insert(full, (value.trim().to_string(), line_no));
    }
    map
}

fn apply_overrides(map: &mut RawMap, overrides: &[(String, String)], errors: &mut Vec<ConfigError>) {
    for (key, value) in overrides {
        if !KNOWN_KEYS.contains(&key.as_str()) {
            errors.push(ConfigError { line: 0, message: format!("unknown key '{key}'") });
            continue;
        }
        map.entries.insert(key.clone(), (value.clone(), 0));
    }
}

fn get_f64(map: &RawMap, key: &str, default: f64, errors: &mut Vec<ConfigError>) -> f64 {
    match map.get(key) {
        None => default,
        Some((v, line)) => match v.parse::<f64>() {
            Ok(x) if x.is_finite() => x,
            _ => {
                errors.push(ConfigError {
                    line,
                    message: format!("{key}: expected a finite number, got '{v}'"),
                });
                default
            }
        },
    }
}

fn require_f64(map: &RawMap, key: &str, errors: &mut Vec<ConfigError>) -> Option<(f64, usize)> {
    match map.get(key) {
        None => {
            errors.push(ConfigError { line: 0, message: format!("missing required key '{key}'") });
            None
        }
        Some((v, line)) => match v.parse::<f64>() {
            Ok(x) if x.is_finite() => Some((x, line)),
            _ => {
                errors.push(ConfigError {
                    line,
                    message: format!("{key}: expected a finite number, got '{v}'"),
                });
                None
            }
        },
    }
}

/// Grid syntax: either `start:step:stop` (inclusive, step > 0) or a
/// comma-separated ascending list.
fn parse_values(v: &str, line: usize, errors: &mut Vec<ConfigError>) -> Vec<f64> {
    let bad = |errors: &mut Vec<ConfigError>, msg: String| {
        errors.push(ConfigError { line, message: msg });
        Vec::new()
    };
    if v.contains(':') {
        let parts: Vec<&str> = v.split(':').collect();
        if parts.len() != 3 {
            return bad(errors, format!("values: expected 'start:step:stop', got '{v}'"));
        }
        let nums: Option<Vec<f64>> = parts.iter().map(|p| p.trim().parse::<f64>().ok()).collect();
        let Some(nums) = nums else {
            return bad(errors, format!("values: non-numeric component in '{v}'"));
        };
        let (start, step, stop) = (nums[0], nums[1], nums[2]);
        if step <= 0.0 || stop < start {
            return bad(errors, "values: need step > 0 and stop >= start".into());
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize;
        return (0..=n).map(|k| start + k as f64 * step).collect();
    }
    let mut out = Vec::new();
    for piece in v.split(',') {
        match piece.trim().parse::<f64>() {
            Ok(x) if x.is_finite() => out.push(x),
            _ => return bad(errors, format!("values: bad number '{}'", piece.trim())),
        }
    }
    if out.windows(2).any(|w| w[1] <= w[0]) {
        return bad(errors, "values: grid must be strictly ascending".into());
    }
    out
}

fn parse_modulation(map: &RawMap, errors: &mut Vec<ConfigError>) -> ModulationProfile {
    let kind = map.get("modulation.kind").map(|(v, l)| (v.to_string(), l));
    match kind.as_ref().map(|(v, _)| v.as_str()) {
        None | Some("none") => ModulationProfile::None,
        Some("harmonic") => {
            let a = require_f64(map, "modulation.a", errors);
            let omega = require_f64(map, "modulation.omega", errors);
            let b = get_f64(map, "modulation.b", 0.0, errors);
            let (Some((a, _)), Some((omega, omega_line))) = (a, omega) else {
                return ModulationProfile::None;
            };
            if omega <= 0.0 {
                errors.push(ConfigError { line: omega_line, message: "omega must be > 0".into() });
            }
            if b < 0.0 {
                let line = map.get("modulation.b").map(|(_, l)| l).unwrap_or(0);
                errors.push(ConfigError { line, message: "b must be >= 0".into() });
            }
            ModulationProfile::HarmonicCoupling { a, omega, b }
        }
        Some("step") => {
            let beta0 = require_f64(map, "modulation.beta0", errors);
            let delta = require_f64(map, "modulation.delta", errors);
            let period = require_f64(map, "modulation.Z", errors);
            let duty = require_f64(map, "modulation.Zprime", errors);
            let (Some((beta0, _)), Some((delta, _)), Some((period, z_line)), Some((duty, zp_line))) =
                (beta0, delta, period, duty)
            else {
                return ModulationProfile::None;
            };
            if period <= 0.0 {
                errors.push(ConfigError { line: z_line, message: "Z must be > 0".into() });
            }
            // strict at ingestion: degenerate duty lengths are reserved for
            // internal sweep continuity, not for configuration files
            if duty >= period {
                errors.push(ConfigError { line: zp_line, message: "Zprime must be < Z".into() });
            }
            if duty <= 0.0 {
                errors.push(ConfigError { line: zp_line, message: "Zprime must be > 0".into() });
            }
            ModulationProfile::StepIndex { beta0, delta, period, duty }
        }
        Some(other) => {
            let line = kind.as_ref().map(|(_, l)| *l).unwrap_or(0);
            errors.push(ConfigError {
                line,
                message: format!("modulation.kind: expected none|harmonic|step, got '{other}'"),
            });
            ModulationProfile::None
        }
    }
}

/// Parse and validate a configuration, collecting every error.
pub fn validate_config(
    text: &str,
    overrides: &[(String, String)],
) -> Result<ParsedConfig, Vec<ConfigError>> {
    let mut errors = Vec::new();
    let mut map = lex(text, &mut errors);
    apply_overrides(&mut map, overrides, &mut errors);

    // [system]
    let l = match map.get("system.L") {
        None => {
            errors.push(ConfigError { line: 0, message: "missing required key 'system.L'".into() });
            1
        }
        Some((v, line)) => match v.parse::<usize>() {
            Ok(x) if x >= 1 => x,
            Ok(_) => {
                errors.push(ConfigError { line, message: "L must be >= 1".into() });
                1
            }
            Err(_) => {
                errors.push(ConfigError {
                    line,
                    message: format!("L: expected a positive integer, got '{v}'"),
                });
                1
            }
        },
    };
    let beta = get_f64(&map, "system.beta", 0.0, &mut errors);
    let beta1 = get_f64(&map, "system.beta1", 0.0, &mut errors);
    let kappa = get_f64(&map, "system.kappa", 1.0, &mut errors);
    let kappa12 = get_f64(&map, "system.kappa12", 1.0, &mut errors);
    let lambdabar = get_f64(&map, "system.lambdabar", 1.0, &mut errors);
    if kappa <= 0.0 {
        let line = map.get("system.kappa").map(|(_, l)| l).unwrap_or(0);
        errors.push(ConfigError { line, message: "kappa must be > 0".into() });
    }
    if lambdabar <= 0.0 {
        let line = map.get("system.lambdabar").map(|(_, l)| l).unwrap_or(0);
        errors.push(ConfigError { line, message: "lambdabar must be > 0".into() });
    }

    let modulation = parse_modulation(&map, &mut errors);
    let system = SystemConfig { l, beta, beta1, kappa, kappa12, modulation, lambdabar };

    // [run]
    let z_max = get_f64(&map, "run.z_max", 100.0, &mut errors);
    if z_max <= 0.0 {
        let line = map.get("run.z_max").map(|(_, l)| l).unwrap_or(0);
        errors.push(ConfigError { line, message: "z_max must be > 0".into() });
    }
    let dz = match map.get("run.dz") {
        None => None,
        Some(("auto", _)) => None,
        Some((v, line)) => match v.parse::<f64>() {
            Ok(x) if x > 0.0 && x.is_finite() => Some(x),
            _ => {
                errors.push(ConfigError {
                    line,
                    message: format!("dz: expected 'auto' or a positive number, got '{v}'"),
                });
                None
            }
        },
    };

    // [floquet]
    let n_harmonics = match map.get("floquet.n_harmonics") {
        None => None,
        Some(("auto", _)) => None,
        Some((v, line)) => match v.parse::<usize>() {
            Ok(x) if x >= 1 => Some(x),
            _ => {
                errors.push(ConfigError {
                    line,
                    message: format!("n_harmonics: expected 'auto' or an integer >= 1, got '{v}'"),
                });
                None
            }
        },
    };

    // [sweep]
    let sweep = match map.get("sweep.axis") {
        None => None,
        Some((axis_str, axis_line)) => {
            let axis = match axis_str {
                "a" => Some(SweepAxis::A),
                "omega" => Some(SweepAxis::Omega),
                "delta" => Some(SweepAxis::Delta),
                "Z" => Some(SweepAxis::ZPeriod),
                other => {
                    errors.push(ConfigError {
                        line: axis_line,
                        message: format!("axis: expected a|omega|delta|Z, got '{other}'"),
                    });
                    None
                }
            };
            let values = match map.get("sweep.values") {
                None => {
                    errors.push(ConfigError {
                        line: 0,
                        message: "missing required key 'sweep.values'".into(),
                    });
                    Vec::new()
                }
                Some((v, line)) => parse_values(v, line, &mut errors),
            };
            let outputs = match map.get("sweep.outputs") {
                None => {
                    errors.push(ConfigError {
                        line: 0,
                        message: "missing required key 'sweep.outputs'".into(),
                    });
                    Vec::new()
                }
                Some((v, line)) => {
                    let mut out = Vec::new();
                    for piece in v.split(',') {
                        match piece.trim() {
                            "trace" => out.push(OutputKind::Trace),
                            "spectrum" => out.push(OutputKind::Spectrum),
                            "fbm" => out.push(OutputKind::Fbm),
                            "markovian" => out.push(OutputKind::Markovian),
                            "dynloc" => out.push(OutputKind::Dynloc),
                            other => errors.push(ConfigError {
                                line,
                                message: format!(
                                    "outputs: expected trace|spectrum|fbm|markovian|dynloc, got '{other}'"
                                ),
                            }),
                        }
                    }
                    out
                }
            };
            axis.map(|axis| SweepSettings { axis, values, outputs })
        }
    };

    // semantic invariants that survived typed extraction
    if errors.is_empty() {
        if let Err(e) = system.validate() {
            errors.push(ConfigError { line: 0, message: e.to_string() });
        }
        if let Some(sw) = &sweep {
            if let Err(msg) = sw.check_against(&system) {
                errors.push(ConfigError { line: 0, message: msg });
            }
        }
    }

    if errors.is_empty() {
        Ok(ParsedConfig {
            system,
            run: RunParams { z_max, dz },
            floquet: FloquetSettings { n_harmonics },
            sweep,
        })
    } else {
        Err(errors)
    }
}

/// Split a `--set section.key=value` argument.
pub fn parse_override(arg: &str) -> Result<(String, String), String> {
    let (key, value) = arg
        .split_once('=')
        .ok_or_else(|| format!("--set expects 'section.key=value', got '{arg}'"))?;
    if !key.contains('.') {
        return Err(format!("--set key must be qualified as 'section.key', got '{key}'"));
    }
    Ok((key.trim().to_string(), value.trim().to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIG2: &str = "\
[system]
L = 200
beta = 0.2
beta1 = 6.5
kappa = 1.0
kappa12 = 1.0

[modulation]
kind = harmonic
a = 3.0
omega = 8.0
b = 0.6

[run]
z_max = 100.0
dz = auto
";

    #[test]
    fn parses_reference_config() {
        let parsed = validate_config(FIG2, &[]).unwrap();
        assert_eq!(parsed.system.l, 200);
        assert_eq!(parsed.system.beta1, 6.5);
        assert!(matches!(
            parsed.system.modulation,
            ModulationProfile::HarmonicCoupling { a, omega, b }
                if a == 3.0 && omega == 8.0 && b == 0.6
        ));
        assert_eq!(parsed.run.z_max, 100.0);
        assert!(parsed.run.dz.is_none());
    }

    #[test]
    fn rejects_duty_equal_to_period() {
        let text = "\
[system]
L = 10

[modulation]
kind = step
beta0 = 0.5
delta = 1.0
Z = 0.785
Zprime = 0.785
";
        let errs = validate_config(text, &[]).unwrap_err();
        assert!(errs.iter().any(|e| e.message == "Zprime must be < Z"), "{errs:?}");
        // anchored at the Zprime line
        let e = errs.iter().find(|e| e.message == "Zprime must be < Z").unwrap();
        assert_eq!(e.line, 9);
    }

    #[test]
    fn rejects_negative_l() {
        let text = "[system]\nL = -5\n";
        let errs = validate_config(text, &[]).unwrap_err();
        assert!(errs.iter().any(|e| e.message.contains("positive integer")));
    }

    #[test]
    fn rejects_unknown_key_and_type_mismatch() {
        let text = "\
[system]
L = 10
betta = 0.2
beta = fast
";
        let errs = validate_config(text, &[]).unwrap_err();
        assert!(errs.iter().any(|e| e.line == 3 && e.message.contains("unknown key")));
        assert!(errs.iter().any(|e| e.line == 4 && e.message.contains("expected a finite number")));
    }

    #[test]
    fn collects_multiple_errors() {
        let text = "\
[system]
L = 0
kappa = -1.0
";
        let errs = validate_config(text, &[]).unwrap_err();
        assert!(errs.len() >= 2, "{errs:?}");
    }

    #[test]
    fn overrides_take_effect() {
        let ov = vec![("modulation.a".to_string(), "6.5".to_string())];
        let parsed = validate_config(FIG2, &ov).unwrap();
        assert!(matches!(
            parsed.system.modulation,
            ModulationProfile::HarmonicCoupling { a, .. } if a == 6.5
        ));
    }

    #[test]
    fn sweep_grid_syntax() {
        let text = format!(
            "{FIG2}\n[sweep]\naxis = a\nvalues = 0:0.5:2\noutputs = fbm,spectrum\n"
        );
        let parsed = validate_config(&text, &[]).unwrap();
        let sw = parsed.sweep.unwrap();
        assert_eq!(sw.values, vec![0.0, 0.5, 1.0, 1.5, 2.0]);
        assert_eq!(sw.outputs, vec![OutputKind::Fbm, OutputKind::Spectrum]);
    }

    #[test]
    fn sweep_axis_must_match_profile() {
        let text = format!("{FIG2}\n[sweep]\naxis = delta\nvalues = 0,1\noutputs = fbm\n");
        let errs = validate_config(&text, &[]).unwrap_err();
        assert!(errs.iter().any(|e| e.message.contains("axis")), "{errs:?}");
    }

    #[test]
    fn override_parsing() {
        assert!(parse_override("modulation.a=3").is_ok());
        assert!(parse_override("a=3").is_err());
        assert!(parse_override("noequals").is_err());
    }
}
