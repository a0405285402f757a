//! Sectioned key-value run configuration.
//!
//! The file format is plain text: `[section]` headers, `key = value` lines,
//! full-line comments starting with `#`, and blank lines. Unknown sections
//! and keys are rejected with their line number. Command line flags overlay
//! file values before validation. Example:
//!
//! ```text
//! [run]
//! mode = study-spatial
//! dim = 1
//! n = 16, 32, 64
//! nt = 1000
//! alpha = 0.01
//! T = 0.1
//!
//! [solver]
//! tol = 1e-12
//! maxit = 100000
//!
//! [output]
//! dir = out
//! threads = 0
//! seed = 24181
//! ```
//!
//! The `[run]` section accepts either `nt` (step counts) or `k` (step
//! sizes); step sizes must divide the final time to an integer count. The
//! `[probe]` section configures the solvability probe and is ignored by the
//! other modes.

use llg_core::mms::MmsSolution;
use std::fmt;
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Single,
    StudySpatial,
    StudyTemporal,
    StudyCoupled,
    Probe,
}

impl Mode {
    pub fn parse(text: &str) -> Result<Mode, String> {
        match text {
            "single" => Ok(Mode::Single),
            "study-spatial" => Ok(Mode::StudySpatial),
            "study-temporal" => Ok(Mode::StudyTemporal),
            "study-coupled" => Ok(Mode::StudyCoupled),
            "probe" => Ok(Mode::Probe),
            other => Err(format!(
                "unknown mode {other:?}; expected single, study-spatial, study-temporal, \
                 study-coupled, or probe"
            )),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Mode::Single => "single",
            Mode::StudySpatial => "study-spatial",
            Mode::StudyTemporal => "study-temporal",
            Mode::StudyCoupled => "study-coupled",
            Mode::Probe => "probe",
        }
    }
}

#[derive(Debug)]
pub enum ConfigError {
    Parse { line: usize, message: String },
    Validation { key: String, message: String },
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Parse { line, message } => write!(f, "line {line}: {message}"),
            ConfigError::Validation { key, message } => write!(f, "{key}: {message}"),
        }
    }
}

impl std::error::Error for ConfigError {}

fn parse_err(line: usize, message: impl Into<String>) -> ConfigError {
    ConfigError::Parse {
        line,
        message: message.into(),
    }
}

fn invalid(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Validation {
        key: key.into(),
        message: message.into(),
    }
}

/// Partially specified configuration. Files and flag sets both parse into
/// drafts; overlaying and validation happen afterwards.
#[derive(Debug, Default, Clone)]
pub struct Draft {
    pub mode: Option<Mode>,
    pub dim: Option<usize>,
    pub solution: Option<String>,
    pub n: Option<Vec<usize>>,
    pub nt: Option<Vec<usize>>,
    pub k: Option<Vec<f64>>,
    pub alpha: Option<f64>,
    pub t_final: Option<f64>,
    pub tol: Option<f64>,
    pub maxit: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub threads: Option<usize>,
    pub seed: Option<u64>,
    pub probe_trials: Option<usize>,
    pub probe_k: Option<Vec<f64>>,
    pub probe_alpha: Option<Vec<f64>>,
}

/// Validated configuration ready for dispatch.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub dim: usize,
    pub solution: MmsSolution,
    pub n: Vec<usize>,
    pub nt: Vec<usize>,
    pub alpha: f64,
    pub t_final: f64,
    pub tol: f64,
    pub maxit: usize,
    pub out_dir: PathBuf,
    pub threads: usize,
    pub seed: u64,
    pub probe_trials: usize,
    pub probe_k: Vec<f64>,
    pub probe_alpha: Vec<f64>,
}

pub fn parse_usize_list(text: &str) -> Result<Vec<usize>, String> {
    text.split(',')
        .map(|item| {
            let item = item.trim();
            item.parse::<usize>()
                .map_err(|_| format!("{item:?} is not a nonnegative integer"))
        })
        .collect()
}

pub fn parse_f64_list(text: &str) -> Result<Vec<f64>, String> {
    text.split(',')
        .map(|item| {
            let item = item.trim();
            item.parse::<f64>()
                .map_err(|_| format!("{item:?} is not a number"))
        })
        .collect()
}

fn parse_scalar<T: std::str::FromStr>(
    text: &str,
    line: usize,
    what: &str,
) -> Result<T, ConfigError> {
    text.parse::<T>()
        .map_err(|_| parse_err(line, format!("{text:?} is not {what}")))
}

/// Parses the sectioned key-value text of a configuration file.
pub fn parse_file(text: &str) -> Result<Draft, ConfigError> {
    let mut draft = Draft::default();
    let mut section: Option<String> = None;
    for (index, raw) in text.lines().enumerate() {
        let line = index + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if let Some(header) = trimmed.strip_prefix('[') {
            let name = header
                .strip_suffix(']')
                .ok_or_else(|| parse_err(line, "unterminated section header"))?
                .trim();
            if !matches!(name, "run" | "solver" | "probe" | "output") {
                return Err(parse_err(line, format!("unknown section [{name}]")));
            }
            section = Some(name.to_string());
            continue;
        }
        let (key, value) = trimmed
            .split_once('=')
            .ok_or_else(|| parse_err(line, "expected key = value"))?;
        let key = key.trim();
        let value = value.trim();
        let section_name = section
            .as_deref()
            .ok_or_else(|| parse_err(line, format!("key {key:?} appears outside any section")))?;
        match (section_name, key) {
            ("run", "mode") => {
                draft.mode = Some(Mode::parse(value).map_err(|m| parse_err(line, m))?)
            }
            ("run", "dim") => draft.dim = Some(parse_scalar(value, line, "an integer")?),
            ("run", "solution") => draft.solution = Some(value.to_string()),
            ("run", "n") => {
                draft.n = Some(parse_usize_list(value).map_err(|m| parse_err(line, m))?)
            }
            ("run", "nt") => {
                draft.nt = Some(parse_usize_list(value).map_err(|m| parse_err(line, m))?)
            }
            ("run", "k") => draft.k = Some(parse_f64_list(value).map_err(|m| parse_err(line, m))?),
            ("run", "alpha") => draft.alpha = Some(parse_scalar(value, line, "a number")?),
            ("run", "T") => draft.t_final = Some(parse_scalar(value, line, "a number")?),
            ("solver", "tol") => draft.tol = Some(parse_scalar(value, line, "a number")?),
            ("solver", "maxit") => draft.maxit = Some(parse_scalar(value, line, "an integer")?),
            ("output", "dir") => draft.out_dir = Some(PathBuf::from(value)),
            ("output", "threads") => draft.threads = Some(parse_scalar(value, line, "an integer")?),
            ("output", "seed") => draft.seed = Some(parse_scalar(value, line, "an integer")?),
            ("probe", "trials") => {
                draft.probe_trials = Some(parse_scalar(value, line, "an integer")?)
            }
            ("probe", "k") => {
                draft.probe_k = Some(parse_f64_list(value).map_err(|m| parse_err(line, m))?)
            }
            ("probe", "alpha") => {
                draft.probe_alpha = Some(parse_f64_list(value).map_err(|m| parse_err(line, m))?)
            }
            (s, k) => {
                return Err(parse_err(
                    line,
                    format!("unknown key {k:?} in section [{s}]"),
                ))
            }
        }
    }
    Ok(draft)
}

impl Draft {
    /// Overlays `other` on top of `self`; present fields in `other` win.
    pub fn overlay(mut self, other: Draft) -> Draft {
        macro_rules! take {
            ($field:ident) => {
                if other.$field.is_some() {
                    self.$field = other.$field;
                }
            };
        }
        take!(mode);
        take!(dim);
        take!(solution);
        take!(n);
        take!(nt);
        take!(k);
        take!(alpha);
        take!(t_final);
        take!(tol);
        take!(maxit);
        take!(out_dir);
        take!(threads);
        take!(seed);
        take!(probe_trials);
        take!(probe_k);
        take!(probe_alpha);
        self
    }

    /// Validates the draft into a runnable configuration.
    pub fn build(self) -> Result<RunConfig, ConfigError> {
        let mode = self.mode.ok_or_else(|| invalid("mode", "required"))?;
        let dim = self.dim.ok_or_else(|| invalid("dim", "required"))?;
        if dim != 1 && dim != 3 {
            return Err(invalid("dim", format!("must be 1 or 3, got {dim}")));
        }
        let solution = match self.solution.as_deref().unwrap_or("auto") {
            "auto" => MmsSolution::for_dim(dim),
            "dim1" => MmsSolution::Dim1,
            "dim3" => MmsSolution::Dim3,
            other => {
                return Err(invalid(
                    "solution",
                    format!("unknown solution {other:?}; expected auto, dim1, or dim3"),
                ))
            }
        };
        if solution.dim() != dim {
            return Err(invalid(
                "solution",
                format!("solution is {}-dimensional but dim = {dim}", solution.dim()),
            ));
        }

        let n = self.n.ok_or_else(|| invalid("n", "required"))?;
        if n.is_empty() || n.contains(&0) {
            return Err(invalid("n", "needs at least one positive cell count"));
        }

        let tol = self.tol.unwrap_or(1e-12);
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(invalid("tol", format!("must be positive, got {tol}")));
        }
        let maxit = self.maxit.unwrap_or(100_000);
        if maxit == 0 {
            return Err(invalid("maxit", "must be at least 1"));
        }
        let out_dir = self.out_dir.unwrap_or_else(|| PathBuf::from("out"));
        let threads = self.threads.unwrap_or(0);
        let seed = self.seed.unwrap_or(24_181);

        let probe_trials = self.probe_trials.unwrap_or(100);
        let probe_k = self.probe_k.unwrap_or_else(|| vec![1e-3, 1e-1, 10.0]);
        let probe_alpha = self.probe_alpha.unwrap_or_else(|| vec![0.01, 1.0]);

        if mode == Mode::Probe {
            if n.len() != 1 {
                return Err(invalid("n", "probe mode takes exactly one cell count"));
            }
            if probe_trials == 0 {
                return Err(invalid("trials", "must be at least 1"));
            }
            if probe_k.is_empty() || probe_k.iter().any(|k| !(*k > 0.0 && k.is_finite())) {
                return Err(invalid("k", "probe step sizes must be positive"));
            }
            if probe_alpha.is_empty() || probe_alpha.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
                return Err(invalid("alpha", "probe damping values must be positive"));
            }
            return Ok(RunConfig {
                mode,
                dim,
                solution,
                n,
                nt: Vec::new(),
                alpha: probe_alpha[0],
                t_final: 0.0,
                tol,
                maxit,
                out_dir,
                threads,
                seed,
                probe_trials,
                probe_k,
                probe_alpha,
            });
        }

        let alpha = self.alpha.ok_or_else(|| invalid("alpha", "required"))?;
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(invalid("alpha", format!("must be positive, got {alpha}")));
        }
        let t_final = self.t_final.ok_or_else(|| invalid("T", "required"))?;
        if !(t_final > 0.0 && t_final.is_finite()) {
            return Err(invalid("T", format!("must be positive, got {t_final}")));
        }

        let nt = match (self.nt, self.k) {
            (Some(_), Some(_)) => {
                return Err(invalid("nt", "give either nt or k, not both"));
            }
            (Some(nt), None) => nt,
            (None, Some(k)) => {
                let mut nt = Vec::with_capacity(k.len());
                for (case, &step) in k.iter().enumerate() {
                    if !(step > 0.0 && step.is_finite()) {
                        return Err(invalid("k", format!("case {case}: must be positive")));
                    }
                    let count = t_final / step;
                    let rounded = count.round();
                    if (count - rounded).abs() > 1e-9 * rounded.max(1.0) {
                        return Err(invalid(
                            "k",
                            format!(
                                "case {case}: T = {t_final} is not an integer multiple of \
                                 k = {step}"
                            ),
                        ));
                    }
                    nt.push(rounded as usize);
                }
                nt
            }
            (None, None) => return Err(invalid("nt", "required (or give k)")),
        };
        if nt.is_empty() || nt.iter().any(|count| *count < 3) {
            return Err(invalid("nt", "every step count must be at least 3"));
        }

        let strictly_increasing = |list: &[usize]| list.windows(2).all(|w| w[0] < w[1]);
        match mode {
            Mode::Single => {
                if n.len() != 1 || nt.len() != 1 {
                    return Err(invalid("n", "single mode takes one n and one nt"));
                }
            }
            Mode::StudySpatial => {
                if nt.len() != 1 {
                    return Err(invalid("nt", "spatial study takes a single step count"));
                }
                if n.len() < 2 || !strictly_increasing(&n) {
                    return Err(invalid(
                        "n",
                        "spatial study needs strictly refining cell counts",
                    ));
                }
            }
            Mode::StudyTemporal => {
                if n.len() != 1 {
                    return Err(invalid("n", "temporal study takes a single cell count"));
                }
                if nt.len() < 2 || !strictly_increasing(&nt) {
                    return Err(invalid(
                        "nt",
                        "temporal study needs strictly refining step counts",
                    ));
                }
            }
            Mode::StudyCoupled => {
                if n.len() != nt.len() {
                    return Err(invalid("n", "coupled study needs matching n and nt lists"));
                }
                if n.len() < 2 || !strictly_increasing(&n) || !strictly_increasing(&nt) {
                    return Err(invalid("n", "coupled study needs strictly refining pairs"));
                }
            }
            Mode::Probe => unreachable!("probe returned above"),
        }

        Ok(RunConfig {
            mode,
            dim,
            solution,
            n,
            nt,
            alpha,
            t_final,
            tol,
            maxit,
            out_dir,
            threads,
            seed,
            probe_trials,
            probe_k,
            probe_alpha,
        })
    }
}

/// The four ready-to-run study configurations, as (file name, contents).
pub fn reproduction_suite() -> [(&'static str, String); 4] {
    let table1 = "\
# 1d spatial refinement at a fixed fine time step.
# The step count keeps k times the top Laplacian eigenvalue (16 n^2 / 3)
# below the small-alpha stability window on the finest grid.

[run]
mode = study-spatial
dim = 1
n = 16, 32, 64, 128, 256
nt = 100000
alpha = 0.01
T = 0.1

[solver]
tol = 1e-13
maxit = 10000

[output]
dir = out/table1
threads = 0
seed = 24181
";
    let table2 = "\
# 1d temporal refinement on a fine grid. The spatial error floor sits near
# 6e-14, below every measured error; the solver tolerance stays above the
# residual evaluation floor of the n = 2000 grid.

[run]
mode = study-temporal
dim = 1
n = 2000
nt = 8, 12, 16, 24, 32
alpha = 0.01
T = 0.1

[solver]
tol = 5e-13
maxit = 10000

[output]
dir = out/table2
threads = 0
seed = 24181
";
    let table3 = "\
# 3d spatial refinement at a fixed fine time step; the step count keeps the
# finest grid below the small-alpha stability window (top eigenvalue 16 n^2).

[run]
mode = study-spatial
dim = 3
n = 4, 6, 8, 10, 12
nt = 10000
alpha = 0.01
T = 1

[solver]
tol = 1e-12
maxit = 50000

[output]
dir = out/table3
threads = 0
seed = 24181
";
    let table4 = "\
# 3d coupled refinement with k^3 matched to h^4; orders are reported against
# the time step.

[run]
mode = study-coupled
dim = 3
n = 6, 8, 10, 12, 16
nt = 10, 15, 21, 27, 40
alpha = 0.01
T = 1

[solver]
tol = 1e-12
maxit = 200000

[output]
dir = out/table4
threads = 0
seed = 24181
";
    [
        ("table1.cfg", table1.to_string()),
        ("table2.cfg", table2.to_string()),
        ("table3.cfg", table3.to_string()),
        ("table4.cfg", table4.to_string()),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> &'static str {
        "[run]\nmode = single\ndim = 1\nn = 64\nnt = 100\nalpha = 0.01\nT = 0.1\n"
    }

    #[test]
    fn minimal_single_run_file_builds() {
        let config = parse_file(minimal()).unwrap().build().unwrap();
        assert_eq!(config.mode, Mode::Single);
        assert_eq!(config.dim, 1);
        assert_eq!(config.n, vec![64]);
        assert_eq!(config.nt, vec![100]);
        assert_eq!(config.alpha, 0.01);
        assert_eq!(config.t_final, 0.1);
        assert_eq!(config.tol, 1e-12);
        assert_eq!(config.out_dir, PathBuf::from("out"));
    }

    #[test]
    fn flag_draft_overrides_file_values() {
        let flags = Draft {
            alpha: Some(0.8),
            ..Draft::default()
        };
        let config = parse_file(minimal())
            .unwrap()
            .overlay(flags)
            .build()
            .unwrap();
        assert_eq!(config.alpha, 0.8);
    }

    #[test]
    fn unknown_key_is_rejected_with_its_line_number() {
        let text = "[run]\nmode = single\nfoo = 1\n";
        match parse_file(text) {
            Err(ConfigError::Parse { line, message }) => {
                assert_eq!(line, 3);
                assert!(message.contains("foo"), "{message}");
            }
            other => panic!("expected a parse error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_section_is_rejected() {
        let text = "[run]\nmode = single\n\n[extras]\nx = 1\n";
        match parse_file(text) {
            Err(ConfigError::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("expected a parse error, got {other:?}"),
        }
    }

    #[test]
    fn key_outside_section_is_rejected() {
        match parse_file("mode = single\n") {
            Err(ConfigError::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("expected a parse error, got {other:?}"),
        }
    }

    #[test]
    fn step_sizes_must_divide_the_final_time() {
        let text = "[run]\nmode = study-temporal\ndim = 1\nn = 64\nk = 0.05, 0.03\nalpha = 0.01\nT = 0.1\n";
        match parse_file(text).unwrap().build() {
            Err(ConfigError::Validation { key, message }) => {
                assert_eq!(key, "k");
                assert!(message.contains("case 1"), "{message}");
            }
            other => panic!("expected a validation error, got {other:?}"),
        }
    }

    #[test]
    fn step_sizes_expand_to_counts() {
        let text = "[run]\nmode = study-temporal\ndim = 1\nn = 64\nk = 0.025, 0.0125\nalpha = 0.01\nT = 0.1\n";
        let config = parse_file(text).unwrap().build().unwrap();
        assert_eq!(config.nt, vec![4, 8]);
    }

    #[test]
    fn giving_both_nt_and_k_is_rejected() {
        let text = "[run]\nmode = single\ndim = 1\nn = 8\nnt = 10\nk = 0.01\nalpha = 1\nT = 0.1\n";
        assert!(matches!(
            parse_file(text).unwrap().build(),
            Err(ConfigError::Validation { .. })
        ));
    }

    #[test]
    fn refinement_lists_must_strictly_refine() {
        let text =
            "[run]\nmode = study-spatial\ndim = 1\nn = 32, 32\nnt = 100\nalpha = 0.01\nT = 0.1\n";
        assert!(matches!(
            parse_file(text).unwrap().build(),
            Err(ConfigError::Validation { .. })
        ));
    }

    #[test]
    fn probe_mode_needs_no_time_parameters() {
        let text = "[run]\nmode = probe\ndim = 1\nn = 32\n";
        let config = parse_file(text).unwrap().build().unwrap();
        assert_eq!(config.probe_trials, 100);
        assert_eq!(config.probe_k, vec![1e-3, 1e-1, 10.0]);
        assert_eq!(config.probe_alpha, vec![0.01, 1.0]);
    }

    #[test]
    fn reproduction_suite_files_parse_back_to_their_configs() {
        for (name, text) in reproduction_suite() {
            let config = parse_file(&text)
                .unwrap_or_else(|e| panic!("{name}: {e}"))
                .build()
                .unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(config.alpha, 0.01, "{name}");
            assert_eq!(config.threads, 0, "{name}");
            assert_eq!(config.seed, 24_181, "{name}");
        }

        let table4 = parse_file(&reproduction_suite()[3].1)
            .unwrap()
            .build()
            .unwrap();
        assert_eq!(table4.mode, Mode::StudyCoupled);
        assert_eq!(table4.n, vec![6, 8, 10, 12, 16]);
        assert_eq!(table4.nt, vec![10, 15, 21, 27, 40]);
        assert_eq!(table4.t_final, 1.0);

        let table1 = parse_file(&reproduction_suite()[0].1)
            .unwrap()
            .build()
            .unwrap();
        assert_eq!(table1.mode, Mode::StudySpatial);
        assert_eq!(table1.n, vec![16, 32, 64, 128, 256]);
        assert_eq!(table1.nt, vec![100_000]);
    }
}
