//! Shared parsing of model/distribution specifications and the
//! flag-over-file precedence used by every subcommand.
//!
//! Config files are flat TOML whose keys mirror the command's flags; a flag
//! given on the command line overrides the file value, which overrides the
//! built-in default.

use mphase::dist::ErrorDist;
use mphase::loss::LossSpec;
use mphase::model::SegmentFamily;
use mphase::montecarlo::XDist;

pub type CliResult<T> = Result<T, CliError>;

/// Error with the process exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<mphase::Error> for CliError {
    fn from(e: mphase::Error) -> Self {
        let code = match &e {
            mphase::Error::InvalidArgument(_) => 2,
            mphase::Error::Infeasible(_) => 3,
            mphase::Error::Identifiability(_) => 4,
            mphase::Error::Numeric(_) => 3,
            mphase::Error::FailureBudget(_) => 5,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

/// Flag value wins over file value wins over default.
pub fn pick<T: Clone>(flag: &Option<T>, file: &Option<T>, default: Option<T>) -> Option<T> {
    flag.clone().or_else(|| file.clone()).or(default)
}

pub fn require<T>(v: Option<T>, what: &str) -> CliResult<T> {
    v.ok_or_else(|| CliError::config(format!("missing required option: {what}")))
}

pub fn parse_family(s: &str) -> CliResult<SegmentFamily> {
    match s {
        "constant" => Ok(SegmentFamily::Constant),
        "linear" => Ok(SegmentFamily::Linear),
        "exponential" => Ok(SegmentFamily::Exponential),
        "logistic" => Ok(SegmentFamily::Logistic),
        _ => Err(CliError::config(format!(
            "unknown family '{s}' (expected constant|linear|exponential|logistic)"
        ))),
    }
}

/// `gaussian:SD`, `laplace:SCALE`, `student_t:DOF,SCALE`, or `none`.
pub fn parse_err_dist(s: &str) -> CliResult<Option<ErrorDist>> {
    if s == "none" {
        return Ok(None);
    }
    let (kind, args) = s
        .split_once(':')
        .ok_or_else(|| CliError::config(format!("error distribution '{s}' needs parameters, e.g. gaussian:1.0")))?;
    let nums: Vec<f64> = args
        .split(',')
        .map(|a| {
            a.trim()
                .parse::<f64>()
                .map_err(|_| CliError::config(format!("bad number '{a}' in '{s}'")))
        })
        .collect::<CliResult<_>>()?;
    let dist = match (kind, nums.as_slice()) {
        ("gaussian", [sd]) => ErrorDist::gaussian(*sd)?,
        ("laplace", [scale]) => ErrorDist::laplace(*scale)?,
        ("student_t", [dof, scale]) => ErrorDist::student_t(*dof, *scale)?,
        _ => {
            return Err(CliError::config(format!(
                "unknown error distribution '{s}' (expected gaussian:SD, laplace:SCALE, student_t:DOF,SCALE or none)"
            )))
        }
    };
    Ok(Some(dist))
}

/// `uniform:A,B` or `gaussian:MEAN,SD`.
pub fn parse_x_dist(s: &str) -> CliResult<XDist> {
    let (kind, args) = s
        .split_once(':')
        .ok_or_else(|| CliError::config(format!("x distribution '{s}' needs parameters, e.g. uniform:-1,1")))?;
    let nums: Vec<f64> = args
        .split(',')
        .map(|a| {
            a.trim()
                .parse::<f64>()
                .map_err(|_| CliError::config(format!("bad number '{a}' in '{s}'")))
        })
        .collect::<CliResult<_>>()?;
    match (kind, nums.as_slice()) {
        ("uniform", [a, b]) => Ok(XDist::uniform(*a, *b)?),
        ("gaussian", [mean, sd]) => Ok(XDist::gaussian(*mean, *sd)?),
        _ => Err(CliError::config(format!(
            "unknown x distribution '{s}' (expected uniform:A,B or gaussian:MEAN,SD)"
        ))),
    }
}

/// Loss from its name plus the relevant parameters.
pub fn parse_loss(
    name: &str,
    huber_delta: Option<f64>,
    err_for_nll: Option<&ErrorDist>,
) -> CliResult<LossSpec> {
    match name {
        "squared" => Ok(LossSpec::Squared),
        "absolute" => Ok(LossSpec::Absolute),
        "huber" => Ok(LossSpec::huber(
            huber_delta.unwrap_or(mphase::loss::HUBER_DEFAULT_DELTA),
        )?),
        "nll" => {
            let err = err_for_nll.ok_or_else(|| {
                CliError::config("loss 'nll' needs --err to name the density")
            })?;
            Ok(LossSpec::neg_log_lik(*err)?)
        }
        _ => Err(CliError::config(format!(
            "unknown loss '{name}' (expected squared|absolute|huber|nll)"
        ))),
    }
}

/// Segment parameter vectors: rows split by ';', coordinates by ','.
pub fn parse_alphas(s: &str) -> CliResult<Vec<Vec<f64>>> {
    s.split(';')
        .map(|row| {
            row.split(',')
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|_| CliError::config(format!("bad alpha value '{v}'")))
                })
                .collect()
        })
        .collect()
}

pub fn parse_f64_list(s: &str) -> CliResult<Vec<f64>> {
    if s.trim().is_empty() {
        return Ok(vec![]);
    }
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| CliError::config(format!("bad number '{v}' in list")))
        })
        .collect()
}

pub fn parse_usize_list(s: &str) -> CliResult<Vec<usize>> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<usize>()
                .map_err(|_| CliError::config(format!("bad integer '{v}' in list")))
        })
        .collect()
}

/// Strict two-column CSV: header `x,y`, one pair of finite decimal numbers
/// per line, LF or CRLF. Any malformed row is a hard error naming its line.
pub fn read_xy_csv(path: &std::path::Path) -> CliResult<(Vec<f64>, Vec<f64>)> {
    let raw = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (i, line) in raw.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if i == 0 {
            if line != "x,y" {
                return Err(CliError::config(format!(
                    "{}: line 1: expected header 'x,y', got '{line}'",
                    path.display()
                )));
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let (a, b) = line.split_once(',').ok_or_else(|| {
            CliError::config(format!(
                "{}: line {}: expected two comma-separated values",
                path.display(),
                i + 1
            ))
        })?;
        let parse = |v: &str, what: &str| -> CliResult<f64> {
            let parsed: f64 = v.trim().parse().map_err(|_| {
                CliError::config(format!(
                    "{}: line {}: {what} value '{v}' is not a number",
                    path.display(),
                    i + 1
                ))
            })?;
            if !parsed.is_finite() {
                return Err(CliError::config(format!(
                    "{}: line {}: {what} value '{v}' is not finite",
                    path.display(),
                    i + 1
                )));
            }
            Ok(parsed)
        };
        xs.push(parse(a, "x")?);
        ys.push(parse(b, "y")?);
    }
    Ok((xs, ys))
}

/// Loads a flat TOML config file into the given deserializable options type.
pub fn load_config_file<T: serde::de::DeserializeOwned + Default>(
    path: &Option<std::path::PathBuf>,
) -> CliResult<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let raw = std::fs::read_to_string(p)
                .map_err(|e| CliError::config(format!("cannot read config {}: {e}", p.display())))?;
            toml::from_str(&raw)
                .map_err(|e| CliError::config(format!("config {}: {e}", p.display())))
        }
    }
}
