//! Input parsing, report types and command runners for the `tridiag` binary.

use std::fmt;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use tridiag_core::degree::{self, DegreeOptions, DegreeReport};
use tridiag_core::generate::{self, MatrixKind};
use tridiag_core::genericity::{classify, GenericityReport};
use tridiag_core::pencil::SweepOptions;
use tridiag_core::tridiag::{tridiagonalize, verify, TridiagOptions, TridiagResult, VerifyReport};
use tridiag_core::{CMatrix, Error, C64};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_UNSOLVED: i32 = 2;

pub const MAX_N: usize = 4;

/// The JSON input format.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixInput {
    pub n: usize,
    pub entries: Vec<Vec<[f64; 2]>>,
}

impl MatrixInput {
    pub fn from_matrix(a: &CMatrix) -> Self {
        Self {
            n: a.rows(),
            entries: (0..a.rows())
                .map(|i| (0..a.cols()).map(|j| [a[(i, j)].re, a[(i, j)].im]).collect())
                .collect(),
        }
    }

    pub fn to_matrix(&self) -> Result<CMatrix, ParseError> {
        let n = self.n;
        if !(1..=MAX_N).contains(&n) {
            return Err(ParseError::new(format!("n must be between 1 and {MAX_N}, got {n}")));
        }
        if self.entries.len() != n {
            return Err(ParseError::new(format!("expected {n} rows, got {}", self.entries.len())));
        }
        for (i, row) in self.entries.iter().enumerate() {
            if row.len() != n {
                return Err(ParseError::new(format!("row {} has {} entries, expected {n}", i + 1, row.len())));
            }
            if row.iter().flatten().any(|x| !x.is_finite()) {
                return Err(ParseError::new(format!("row {} has a non-finite entry", i + 1)));
            }
        }
        Ok(CMatrix::from_fn(n, n, |i, j| {
            let [re, im] = self.entries[i][j];
            C64::new(re, im)
        }))
    }

    /// One row per line, entries as `a+bi` tokens.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for row in &self.entries {
            let tokens: Vec<String> = row.iter().map(|&[re, im]| format_complex(re, im)).collect();
            out.push_str(&tokens.join(" "));
            out.push('\n');
        }
        out
    }
}

fn format_complex(re: f64, im: f64) -> String {
    // `{:?}` prints the shortest representation that reads back exactly
    if im.is_sign_negative() {
        format!("{re:?}-{:?}i", -im)
    } else {
        format!("{re:?}+{im:?}i")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParseError {
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub message: String,
}

impl ParseError {
    fn new(message: impl Into<String>) -> Self {
        Self {
            line: None,
            column: None,
            message: message.into(),
        }
    }

    fn at(line: usize, column: usize, message: impl Into<String>) -> Self {
        Self {
            line: Some(line),
            column: Some(column),
            message: message.into(),
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, self.column) {
            (Some(l), Some(c)) => write!(f, "parse error at line {l}, column {c}: {}", self.message),
            _ => write!(f, "parse error: {}", self.message),
        }
    }
}

impl std::error::Error for ParseError {}

/// Parses either format; JSON is recognised by a leading `{`.
pub fn parse_matrix(text: &str) -> Result<CMatrix, ParseError> {
    if text.trim_start().starts_with('{') {
        let input: MatrixInput =
            serde_json::from_str(text).map_err(|e| ParseError::at(e.line(), e.column(), e.to_string()))?;
        input.to_matrix()
    } else {
        parse_text(text)
    }
}

fn parse_text(text: &str) -> Result<CMatrix, ParseError> {
    let mut rows: Vec<Vec<C64>> = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let body = line.split('#').next().unwrap_or("");
        let mut row = Vec::new();
        let mut start = None;
        // tokens are separated by whitespace or commas
        for (col, ch) in body.char_indices().chain(std::iter::once((body.len(), ' '))) {
            let sep = ch.is_whitespace() || ch == ',';
            match (sep, start) {
                (false, None) => start = Some(col),
                (true, Some(s)) => {
                    let column = body[..s].chars().count() + 1;
                    let z = parse_complex(&body[s..col])
                        .ok_or_else(|| ParseError::at(ln + 1, column, format!("cannot read `{}` as a complex number", &body[s..col])))?;
                    row.push(z);
                    start = None;
                }
                _ => {}
            }
        }
        if !row.is_empty() {
            rows.push(row);
        }
    }
    let n = rows.len();
    if n == 0 {
        return Err(ParseError::new("empty input"));
    }
    let input = MatrixInput {
        n,
        entries: rows.iter().map(|r| r.iter().map(|z| [z.re, z.im]).collect()).collect(),
    };
    input.to_matrix()
}

/// Reads `3`, `-2.5e-3`, `4i`, `-i`, `1+2i`, `1.5e2-3j`.
pub fn parse_complex(token: &str) -> Option<C64> {
    let unit = |s: &str| -> Option<f64> {
        match s {
            "" | "+" => Some(1.0),
            "-" => Some(-1.0),
            _ => s.parse().ok(),
        }
    };
    let finite = |z: C64| z.is_finite().then_some(z);
    let Some(body) = token.strip_suffix('i').or_else(|| token.strip_suffix('j')) else {
        return finite(C64::new(token.parse().ok()?, 0.0));
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    match split {
        Some(k) => finite(C64::new(body[..k].parse().ok()?, unit(&body[k..])?)),
        None => finite(C64::new(0.0, unit(body)?)),
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Timings {
    pub classify_ms: Option<f64>,
    pub tridiag_ms: f64,
    pub verify_ms: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunReport {
    pub input: MatrixInput,
    pub result: TridiagResult,
    pub genericity: Option<GenericityReport>,
    pub verify: Option<VerifyReport>,
    pub timings: Timings,
    pub seed: u64,
}

/// Diagnostics emitted when no unitary is found.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FailureReport {
    pub input: MatrixInput,
    pub error: String,
    pub genericity: Option<GenericityReport>,
    pub seed: u64,
}

#[derive(Clone, Debug, Default)]
pub struct TridiagArgs {
    pub options: TridiagOptions,
    /// Skip the genericity classification.
    pub skip_screen: bool,
    pub verify: bool,
}

fn ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

/// Exit code for an error from the core crate.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidInput(_) => EXIT_INPUT,
        _ => EXIT_UNSOLVED,
    }
}

pub fn run_tridiag(a: &CMatrix, args: &TridiagArgs) -> Result<RunReport, (Error, Box<FailureReport>)> {
    let mut timings = Timings::default();
    let genericity = if args.skip_screen {
        None
    } else {
        let start = Instant::now();
        let g = classify(a).ok();
        timings.classify_ms = Some(ms(start));
        g
    };
    let start = Instant::now();
    let result = tridiagonalize(a, &args.options);
    timings.tridiag_ms = ms(start);
    let result = match result {
        Ok(r) => r,
        Err(e) => {
            let failure = Box::new(FailureReport {
                input: MatrixInput::from_matrix(a),
                error: e.to_string(),
                genericity,
                seed: args.options.seed,
            });
            return Err((e, failure));
        }
    };
    let check = args.verify.then(|| {
        let start = Instant::now();
        let v = verify(&result, a);
        timings.verify_ms = Some(ms(start));
        v
    });
    Ok(RunReport {
        input: MatrixInput::from_matrix(a),
        result,
        genericity,
        verify: check,
        timings,
        seed: args.options.seed,
    })
}

pub fn run_degrees(a: &CMatrix, trials: usize, seed: u64, force: bool, sweep: SweepOptions) -> tridiag_core::Result<DegreeReport> {
    let opts = DegreeOptions {
        trials,
        seed,
        force,
        sweep,
    };
    degree::run_experiments(a, &opts)
}

pub fn generate_input(kind: MatrixKind, n: usize, seed: u64) -> MatrixInput {
    MatrixInput::from_matrix(&generate::generate(kind, n, seed))
}

fn fmt_c(z: C64) -> String {
    format!("{:+.6e}{:+.6e}i", z.re, z.im)
}

pub fn matrix_text(m: &CMatrix) -> String {
    let mut s = String::new();
    for i in 0..m.rows() {
        let row: Vec<String> = (0..m.cols()).map(|j| fmt_c(m[(i, j)])).collect();
        s.push_str("  ");
        s.push_str(&row.join("  "));
        s.push('\n');
    }
    s
}

pub fn human_report(r: &RunReport) -> String {
    let res = &r.result;
    let mut s = format!(
        "path: {:?}\noff-tridiagonal residual: {:.3e}\nunitarity residual: {:.3e}\n",
        res.provenance, res.off_residual, res.unitarity_residual
    );
    if res.perturbation_used > 0.0 {
        s.push_str(&format!("perturbation used: {:.0e}\n", res.perturbation_used));
    }
    if let Some(s4) = res.section_sigma4 {
        s.push_str(&format!("section zero sigma4: {s4:.3e}\n"));
    }
    if let Some(g) = &r.genericity {
        s.push_str(&format!("generic: {} ({})\n", g.in_s(), g.details));
    }
    if let Some(v) = &r.verify {
        s.push_str(&format!(
            "verify: similarity {:.3e}, spectrum gap {:.3e}\n",
            v.similarity_residual, v.spectrum_gap
        ));
    }
    s.push_str(&format!("U =\n{}T = U A U* =\n{}", matrix_text(&res.u), matrix_text(&res.t)));
    if !res.all_flags.is_empty() {
        s.push_str(&format!("{} flags collected\n", res.all_flags.len()));
    }
    s
}

pub fn human_genericity(g: &GenericityReport) -> String {
    format!(
        "nonsingular (s1): {}\ndistinct eigenvalues (s2): {}\npencil rank >= n-1 off the origin (s3): {}\ncommon eigenvectors: {}\nin S: {}\n{}\n",
        g.nonsingular,
        g.distinct_eigenvalues,
        g.pencil_rank_ok,
        g.common_eigenvectors.len(),
        g.in_s(),
        g.details
    )
}

pub fn human_degrees(r: &DegreeReport) -> String {
    if let Some(why) = &r.skipped {
        return format!("experiments skipped: {why}\n");
    }
    let show = |x: Option<usize>| x.map_or("-".to_string(), |v| v.to_string());
    let mut s = format!(
        "deg D: observed {} (expected {})\ndeg C: observed {} (expected {})\nsection zeros: {} (at most {})\n",
        show(r.deg_d_observed),
        r.expected_deg_d,
        show(r.deg_c_observed),
        r.expected_deg_c,
        show(r.section_zero_count),
        r.max_section_zeros
    );
    if let (Some(d), Some(c)) = (&r.deg_d, &r.deg_c) {
        s.push_str(&format!("line counts {:?}\nhyperplane counts {:?}\n", d.counts, c.counts));
    }
    s
}

/// JSON text for any report.
pub fn to_json<T: Serialize>(value: &T, pretty: bool) -> String {
    if pretty {
        serde_json::to_string_pretty(value)
    } else {
        serde_json::to_string(value)
    }
    .expect("reports serialise")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_tokens() {
        let c = |re, im| Some(C64::new(re, im));
        assert_eq!(parse_complex("3"), c(3.0, 0.0));
        assert_eq!(parse_complex("-2.5e-3"), c(-2.5e-3, 0.0));
        assert_eq!(parse_complex("4i"), c(0.0, 4.0));
        assert_eq!(parse_complex("-i"), c(0.0, -1.0));
        assert_eq!(parse_complex("i"), c(0.0, 1.0));
        assert_eq!(parse_complex("1+2i"), c(1.0, 2.0));
        assert_eq!(parse_complex("1-i"), c(1.0, -1.0));
        assert_eq!(parse_complex("1.5e2-3e-1j"), c(150.0, -0.3));
        assert_eq!(parse_complex("-1e+2+1e-2i"), c(-100.0, 0.01));
        assert_eq!(parse_complex("abc"), None);
        assert_eq!(parse_complex("1+2"), None);
        assert_eq!(parse_complex("inf"), None);
    }

    #[test]
    fn text_round_trip_is_exact() {
        let a = generate::generate(MatrixKind::Gaussian, 4, 7);
        let input = MatrixInput::from_matrix(&a);
        assert_eq!(parse_matrix(&input.to_text()).unwrap(), a);
    }

    #[test]
    fn text_errors_carry_position() {
        let e = parse_matrix("1 2\n3 x+\n").unwrap_err();
        assert_eq!((e.line, e.column), (Some(2), Some(3)));
        assert!(parse_matrix("1 2\n3\n").is_err());
        assert!(parse_matrix("\n# only a comment\n").is_err());
    }

    #[test]
    fn json_errors_carry_position() {
        let e = parse_matrix("{\"n\": 1,\n \"entries\": [[[1, 0]]]\n,}").unwrap_err();
        assert_eq!(e.line, Some(3));
        assert!(e.column.is_some());
    }

    #[test]
    fn json_shape_is_checked() {
        assert!(parse_matrix(r#"{"n": 2, "entries": [[[1, 0]]]}"#).is_err());
        assert!(parse_matrix(r#"{"n": 5, "entries": []}"#).is_err());
        assert!(parse_matrix(r#"{"n": 1, "entries": [[[1, 0]]], "extra": 1}"#).is_err());
        let a = parse_matrix(r#"{"n": 1, "entries": [[[1, -2]]]}"#).unwrap();
        assert_eq!(a[(0, 0)], C64::new(1.0, -2.0));
    }

    #[test]
    fn comments_and_commas() {
        let a = parse_matrix("# header\n1, 2i  # trailing\n-i, 4\n").unwrap();
        assert_eq!(a[(0, 1)], C64::new(0.0, 2.0));
        assert_eq!(a[(1, 0)], C64::new(0.0, -1.0));
    }

    #[test]
    fn unsolved_maps_to_two() {
        assert_eq!(exit_code(&Error::Unsolved("x".into())), EXIT_UNSOLVED);
        assert_eq!(exit_code(&Error::InvalidInput("x".into())), EXIT_INPUT);
    }
}
