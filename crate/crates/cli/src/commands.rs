//! Command dispatch. Each command returns an [`Outcome`]; [`run_command`]
//! wraps it into a [`Report`].

use std::sync::Arc;
use std::time::Instant;

use apsigma_core::{
    certify_infimum, complete_matrix_with, exp_order_for, exp_truncated, hull_membership_test, invert_with_degree,
    logarithm_with, solve_bezout, verify_completion, APMatrix, APPolynomial, CoordinateModel, CoronaCertificate,
    CoronaConfig, Error, Frequency, FrequencyBasis, InverseMethod, LogConfig, Membership, SampleGrid, Saturation,
    Semigroup, SpectrumCheck, UpperHalfPoint,
};
use clap::Subcommand;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::SessionConfig;
use crate::expr::{
    parse_ap_expression, parse_basis, parse_complex, parse_frequency, parse_frequency_list, render,
    require_nonnegative, ParseError,
};
use crate::report::{ErrorInfo, Report, Status, SCHEMA};

#[derive(Clone, Debug, PartialEq, Serialize, Subcommand)]
#[serde(untagged)]
pub enum Command {
    /// Spectrum of a polynomial, checked against Σ.
    Spectrum {
        #[arg(long)]
        f: String,
    },
    /// Membership certificate for a frequency.
    Member {
        #[arg(long)]
        target: String,
    },
    /// Whether Σ is the nonnegative part of the group it generates.
    Saturate {
        /// Search bound for irrational generators.
        #[arg(long)]
        bound: Option<f64>,
    },
    /// Semi-decision for a point of the polynomial hull of the embedded half-plane.
    HullTest {
        /// Extra tracked frequencies besides the generators.
        #[arg(long)]
        extra: Option<String>,
        /// Coordinates `freq=value; freq=value; ...`.
        #[arg(long, conflicts_with = "z")]
        point: Option<String>,
        /// Embed the half-plane point `x,y`.
        #[arg(long)]
        z: Option<String>,
        #[arg(long, default_value_t = 3)]
        max_degree: u32,
    },
    /// Certified lower bound for Σ|f_j| over the closed upper half-plane.
    CoronaCertify {
        #[arg(long, required = true)]
        f: Vec<String>,
    },
    /// Solve Σ f_j g_j = 1 within Σ.
    CoronaSolve {
        #[arg(long, required = true)]
        f: Vec<String>,
        /// Random half-plane points used to spot-check the identity.
        #[arg(long, default_value_t = 64)]
        samples: usize,
    },
    /// Inverse of a polynomial.
    Invert {
        #[arg(long)]
        f: String,
    },
    /// Logarithm along the contraction path.
    Log {
        #[arg(long)]
        f: String,
    },
    /// Truncated exponential.
    Exp {
        #[arg(long)]
        g: String,
        /// Series order; chosen from the tolerance when absent.
        #[arg(long)]
        order: Option<usize>,
    },
    /// Complete an n x (n-1) matrix to determinant one.
    Complete {
        /// JSON array of rows of expression strings, or `@file`.
        #[arg(long)]
        matrix: String,
    },
    /// Check a completion.
    Verify {
        #[arg(long)]
        matrix: String,
        #[arg(long)]
        completed: String,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Spectrum { .. } => "spectrum",
            Command::Member { .. } => "member",
            Command::Saturate { .. } => "saturate",
            Command::HullTest { .. } => "hull-test",
            Command::CoronaCertify { .. } => "corona-certify",
            Command::CoronaSolve { .. } => "corona-solve",
            Command::Invert { .. } => "invert",
            Command::Log { .. } => "log",
            Command::Exp { .. } => "exp",
            Command::Complete { .. } => "complete",
            Command::Verify { .. } => "verify",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CliError {
    pub code: String,
    pub message: String,
}

impl CliError {
    fn new(code: &str, message: impl Into<String>) -> Self {
        CliError { code: code.into(), message: message.into() }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::new(e.code(), e.to_string())
    }
}

impl From<ParseError> for CliError {
    fn from(e: ParseError) -> Self {
        CliError::new(e.code, e.to_string())
    }
}

/// Error codes that are definitive mathematical answers rather than failures.
const NEGATIVE_CODES: &[&str] = &["infimum-zero", "not-invertible"];

pub struct Outcome {
    pub status: Status,
    pub mode: Option<String>,
    pub result: Value,
    pub residuals: Value,
}

impl Outcome {
    fn ok(result: Value) -> Self {
        Outcome { status: Status::Ok, mode: None, result, residuals: json!({}) }
    }

    fn with_status(mut self, status: Status) -> Self {
        self.status = status;
        self
    }

    fn with_mode(mut self, mode: &str) -> Self {
        self.mode = Some(mode.to_string());
        self
    }

    fn with_residuals(mut self, residuals: Value) -> Self {
        self.residuals = residuals;
        self
    }
}

struct Session {
    basis: Arc<FrequencyBasis>,
    sigma: Semigroup,
    cfg: SessionConfig,
}

impl Session {
    fn new(cfg: &SessionConfig) -> Result<Self, CliError> {
        cfg.validate().map_err(|e| CliError::new("config-error", e.to_string()))?;
        let basis = Arc::new(parse_basis(&cfg.basis)?);
        let gens = match &cfg.gens {
            Some(text) => parse_frequency_list(text, &basis)?,
            None => (0..basis.dim())
                .map(|i| {
                    let mut coords = basis.zero().coords().to_vec();
                    coords[i] = 1.into();
                    basis.from_coords(coords)
                })
                .collect(),
        };
        let sigma = Semigroup::new(&basis, gens)?;
        Ok(Session { basis, sigma, cfg: cfg.clone() })
    }

    fn poly(&self, text: &str) -> Result<APPolynomial, CliError> {
        Ok(parse_ap_expression(text, &self.basis)?)
    }

    /// Parses and checks the spectrum against Σ.
    fn member_poly(&self, text: &str) -> Result<APPolynomial, CliError> {
        let p = self.poly(text)?;
        self.sigma.require_spectrum(&p)?;
        Ok(p)
    }

    fn corona_config(&self) -> CoronaConfig {
        CoronaConfig {
            grid_step: self.cfg.grid_step,
            strip_width: self.cfg.strip_width,
            tail_height: self.cfg.tail_height,
            max_grid_points: self.cfg.max_grid_points,
            ..CoronaConfig::default()
        }
    }

    fn freq_json(&self, f: &Frequency) -> Value {
        json!({ "frequency": self.basis.render(f), "value": self.basis.value(f) })
    }

    fn poly_json(&self, p: &APPolynomial) -> Value {
        let terms: Vec<Value> = p
            .terms()
            .map(|(f, c)| {
                json!({ "frequency": self.basis.render(f), "value": self.basis.value(f), "re": c.re, "im": c.im })
            })
            .collect();
        json!({ "expr": render(p), "terms": terms, "coef_sum": p.coef_sum() })
    }

    /// Rows of expressions from inline JSON or `@file`.
    fn read_rows(&self, source: &str) -> Result<Vec<Vec<APPolynomial>>, CliError> {
        let text = match source.strip_prefix('@') {
            Some(path) => std::fs::read_to_string(path)
                .map_err(|e| CliError::new("io-error", format!("cannot read {path}: {e}")))?,
            None => source.to_string(),
        };
        let rows: Vec<Vec<String>> = serde_json::from_str(&text)
            .map_err(|e| CliError::new("json-error", format!("matrix must be an array of arrays of strings: {e}")))?;
        rows.iter().map(|row| row.iter().map(|s| self.poly(s)).collect()).collect()
    }

    fn matrix(&self, source: &str) -> Result<APMatrix, CliError> {
        Ok(APMatrix::from_rows(&self.sigma, self.read_rows(source)?)?)
    }

    fn matrix_json(&self, m: &APMatrix) -> Value {
        let rows: Vec<Vec<String>> = (0..m.rows()).map(|i| m.row(i).iter().map(render).collect()).collect();
        json!(rows)
    }
}

fn cert_json(c: &CoronaCertificate) -> Value {
    json!({
        "lower_bound": c.lower_bound,
        "certified": c.lower_bound > 0.0,
        "tail_height": c.tail_height,
        "strip_width": c.strip_width,
        "grid_step": c.grid_step,
        "lipschitz": c.lipschitz,
        "grid_minimum": c.grid_minimum,
        "grid_argmin": [c.grid_argmin.0, c.grid_argmin.1],
        "tail_bound": c.tail_bound,
        "constant_mass": c.constant_mass,
        "grid_points": c.grid_points,
    })
}

fn spectrum(s: &Session, f: &str) -> Result<Outcome, CliError> {
    let p = s.poly(f)?;
    let freqs = p.spectrum()?;
    let list: Vec<Value> = freqs.iter().map(|x| s.freq_json(x)).collect();
    let out = match s.sigma.validate_spectrum(&p)? {
        SpectrumCheck::Contained => Outcome::ok(json!({ "spectrum": list, "contained": true })),
        SpectrumCheck::Violation(v) => {
            Outcome::ok(json!({ "spectrum": list, "contained": false, "violation": s.freq_json(&v) }))
                .with_status(Status::Negative)
        }
    };
    Ok(out.with_mode("exact"))
}

fn member(s: &Session, target: &str) -> Result<Outcome, CliError> {
    let t = parse_frequency(target, &s.basis)?;
    require_nonnegative(&t, &s.basis)?;
    let cert = s.sigma.membership(&t)?;
    let gens: Vec<String> = s.sigma.generators().iter().map(|g| s.basis.render(g)).collect();
    let out = match &cert.membership {
        Membership::Member { combo } => Outcome::ok(json!({
            "target": s.freq_json(&t),
            "member": true,
            "generators": gens,
            "combination": combo,
            "verified": cert.verify(&s.sigma),
        })),
        Membership::Refused { search_bounds } => Outcome::ok(json!({
            "target": s.freq_json(&t),
            "member": false,
            "generators": gens,
            "search_bounds": search_bounds,
        }))
        .with_status(Status::Negative),
    };
    Ok(out.with_mode("exact"))
}

fn saturate(s: &Session, bound: Option<f64>) -> Result<Outcome, CliError> {
    let bound = bound.unwrap_or_else(|| s.sigma.default_saturation_bound());
    let mut result = json!({ "search_bound": bound, "commensurable": s.sigma.is_commensurable() });
    if let Ok(fd) = s.sigma.frobenius_data() {
        result["frobenius"] = json!({
            "denominator": fd.denominator,
            "gcd": fd.gcd,
            "reduced_generators": fd.reduced_generators,
            "frobenius_number": fd.frobenius,
            "apery": fd.apery,
        });
    }
    let status = match s.sigma.saturation_check(bound)? {
        Saturation::Saturated => {
            result["saturated"] = json!(true);
            Status::Ok
        }
        Saturation::Witness(w) => {
            result["saturated"] = json!(false);
            result["witness"] = s.freq_json(&w);
            Status::Negative
        }
        Saturation::Inconclusive { height } => {
            result["saturated"] = Value::Null;
            result["searched_height"] = json!(height);
            Status::Inconclusive
        }
    };
    let mode = if s.sigma.is_commensurable() { "exact" } else { "bounded-search" };
    Ok(Outcome::ok(result).with_status(status).with_mode(mode))
}

fn parse_z(text: &str) -> Result<UpperHalfPoint, CliError> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let bad = || CliError::new("parse-error", format!("expected `x,y`, got `{text}`"));
    if parts.len() != 2 {
        return Err(bad());
    }
    let x: f64 = parts[0].parse().map_err(|_| bad())?;
    let y: f64 = parts[1].parse().map_err(|_| bad())?;
    Ok(UpperHalfPoint::new(x, y)?)
}

fn hull_test(
    s: &Session,
    extra: Option<&str>,
    point: Option<&str>,
    z: Option<&str>,
    max_degree: u32,
) -> Result<Outcome, CliError> {
    let extra = match extra {
        Some(text) => parse_frequency_list(text, &s.basis)?,
        None => Vec::new(),
    };
    let model = CoordinateModel::new(s.sigma.clone(), extra)?;
    let v = match (point, z) {
        (Some(text), _) => {
            let mut values = vec![None; model.tracked().len()];
            for entry in text.split(';').map(str::trim).filter(|e| !e.is_empty()) {
                let (f, val) = entry
                    .split_once('=')
                    .ok_or_else(|| CliError::new("parse-error", format!("expected `freq=value`, got `{entry}`")))?;
                let f = parse_frequency(f, &s.basis)?;
                let i = model.tracked().iter().position(|t| *t == f).ok_or_else(|| {
                    CliError::new("untracked-coordinate", format!("{} is not tracked", s.basis.render(&f)))
                })?;
                values[i] = Some(parse_complex(val, &s.basis)?);
            }
            let values = values
                .into_iter()
                .zip(model.tracked())
                .map(|(v, f)| {
                    v.ok_or_else(|| CliError::new("parse-error", format!("no value for {}", s.basis.render(f))))
                })
                .collect::<Result<Vec<Complex64>, _>>()?;
            model.point(&values)
        }
        (None, Some(text)) => model.embed_j(parse_z(text)?),
        (None, None) => return Err(CliError::new("missing-argument", "give --point or --z")),
    };
    let family = model.default_test_family(max_degree);
    let verdict = hull_membership_test(&v, &family, &SampleGrid::default())?;
    let tracked: Vec<Value> = model.tracked().iter().map(|f| s.freq_json(f)).collect();
    let coords: Vec<Value> = model
        .tracked()
        .iter()
        .map(|f| {
            let c = v.get(f).unwrap_or_default();
            json!([c.re, c.im])
        })
        .collect();
    let mut result = json!({
        "tracked": tracked,
        "point": coords,
        "multiplicativity_defect": v.multiplicativity_defect(),
        "tested": family.len(),
    });
    let status = match verdict {
        apsigma_core::HullVerdict::NoWitnessFound { tested } => {
            result["rejected"] = json!(false);
            result["tested"] = json!(tested);
            Status::Ok
        }
        apsigma_core::HullVerdict::Rejected { witness, value, sup_upper, sup_lower } => {
            result["rejected"] = json!(true);
            result["witness"] = json!({
                "polynomial": witness.display(&s.basis).to_string(),
                "value": value,
                "sup_upper": sup_upper,
                "sup_lower": sup_lower,
            });
            Status::Negative
        }
    };
    Ok(Outcome::ok(result).with_status(status).with_mode("exact"))
}

fn corona_certify(s: &Session, f: &[String]) -> Result<Outcome, CliError> {
    let fs = f.iter().map(|t| s.member_poly(t)).collect::<Result<Vec<_>, _>>()?;
    let cert = certify_infimum(&fs, &s.sigma, &s.corona_config())?;
    Ok(Outcome::ok(cert_json(&cert)).with_mode(cert.mode.as_str()))
}

fn corona_solve(s: &Session, f: &[String], samples: usize) -> Result<Outcome, CliError> {
    let fs = f.iter().map(|t| s.member_poly(t)).collect::<Result<Vec<_>, _>>()?;
    let cert = certify_infimum(&fs, &s.sigma, &s.corona_config())?;
    if !(cert.lower_bound > 0.0) {
        return Err(Error::CoronaNotCertified { lower_bound: cert.lower_bound }.into());
    }
    let sol = solve_bezout(&fs, &s.sigma, s.cfg.degree, s.cfg.tol)?;

    // Spot check of |Σ f_j g_j - 1| at seeded points of the strip.
    let mut rng = ChaCha8Rng::seed_from_u64(s.cfg.seed);
    let mut sampled = 0.0f64;
    for _ in 0..samples {
        let z = UpperHalfPoint::new(
            rng.gen_range(-cert.strip_width..=cert.strip_width),
            rng.gen_range(0.0..=cert.tail_height.max(1.0)),
        )?;
        let v: Complex64 = fs.iter().zip(&sol.g).map(|(a, b)| a.eval_upper(z) * b.eval_upper(z)).sum();
        sampled = sampled.max((v - 1.0).norm());
    }
    let g: Vec<Value> = sol.g.iter().map(|p| s.poly_json(p)).collect();
    let truncation: Vec<String> = sol.truncation.iter().map(|x| s.basis.render(x)).collect();
    Ok(Outcome::ok(json!({
        "g": g,
        "truncation": truncation,
        "neumann_terms": sol.neumann_terms,
        "certificate": cert_json(&cert),
    }))
    .with_mode(cert.mode.as_str())
    .with_residuals(json!({
        "residual_upper": sol.residual_upper,
        "pre_correction_residual": sol.pre_correction_residual,
        "sampled_max_error": sampled,
        "samples": samples,
        "tol": s.cfg.tol,
    })))
}

fn invert(s: &Session, f: &str) -> Result<Outcome, CliError> {
    let p = s.member_poly(f)?;
    let inv = invert_with_degree(&p, &s.sigma, s.cfg.tol, s.cfg.degree)?;
    let method = match inv.method {
        InverseMethod::Neumann => "neumann",
        InverseMethod::Bezout => "bezout",
    };
    Ok(Outcome::ok(json!({ "inverse": s.poly_json(&inv.u), "method": method, "terms": inv.terms }))
        .with_mode("exact")
        .with_residuals(json!({ "residual_upper": inv.residual_upper, "tol": s.cfg.tol })))
}

fn log(s: &Session, f: &str) -> Result<Outcome, CliError> {
    let p = s.member_poly(f)?;
    let cert = certify_infimum(std::slice::from_ref(&p), &s.sigma, &s.corona_config())?;
    let lg = logarithm_with(&p, &s.sigma, &cert, s.cfg.tol, &LogConfig::default())?;
    let stages = &lg.path.stages;
    Ok(Outcome::ok(json!({
        "log": s.poly_json(&lg.g),
        "constant_log": [lg.path.constant_log.re, lg.path.constant_log.im],
        "t_schedule": lg.path.t_schedule,
        "stage_t": stages.iter().map(|st| st.t).collect::<Vec<_>>(),
        "stage_previous_t": stages.iter().map(|st| st.previous_t).collect::<Vec<_>>(),
        "stage_defect": stages.iter().map(|st| st.defect).collect::<Vec<_>>(),
        "stage_series_terms": stages.iter().map(|st| st.series_terms).collect::<Vec<_>>(),
        "exp_order": lg.exp_order,
        "certificate": cert_json(&cert),
    }))
    .with_mode(cert.mode.as_str())
    .with_residuals(json!({ "residual_upper": lg.residual_upper, "tol": s.cfg.tol })))
}

fn exp(s: &Session, g: &str, order: Option<usize>) -> Result<Outcome, CliError> {
    let p = s.member_poly(g)?;
    let order = order.unwrap_or_else(|| {
        let c0 = p.constant_term();
        exp_order_for(p.without_constant().coef_sum(), c0.re.exp(), s.cfg.tol * 0.5)
    });
    let e = exp_truncated(&p, &s.sigma, order, s.cfg.tol)?;
    Ok(Outcome::ok(json!({ "exp": s.poly_json(&e.value), "order": e.order }))
        .with_mode("exact")
        .with_residuals(json!({ "tail_bound": e.tail_bound, "tol": s.cfg.tol })))
}

fn complete(s: &Session, matrix: &str) -> Result<Outcome, CliError> {
    let a = s.matrix(matrix)?;
    let res = complete_matrix_with(&a, s.cfg.tol, s.cfg.degree, &s.corona_config())?;
    let minors: Vec<String> = res.minors.iter().map(render).collect();
    let column: Vec<String> = res.bezout.g.iter().map(render).collect();
    Ok(Outcome::ok(json!({
        "completed": s.matrix_json(&res.completed),
        "appended_column": column,
        "minors": minors,
        "certificate": cert_json(&res.certificate),
    }))
    .with_mode(res.certificate.mode.as_str())
    .with_residuals(json!({
        "det_residual": res.det_residual,
        "bezout_residual_upper": res.bezout.residual_upper,
        "tol": s.cfg.tol,
    })))
}

fn verify(s: &Session, matrix: &str, completed: &str) -> Result<Outcome, CliError> {
    let a = s.matrix(matrix)?;
    let rows = s.read_rows(completed)?;
    let (r, c) = (rows.len(), rows.first().map_or(0, Vec::len));
    if rows.iter().any(|row| row.len() != c) {
        return Err(CliError::new("shape-mismatch", "ragged matrix"));
    }
    // Spectrum violations are reported by the check, not rejected here.
    let b = APMatrix::new_unchecked(&s.sigma, r, c, rows.into_iter().flatten().collect())?;
    let report = verify_completion(&a, &b, s.cfg.tol);
    let checks: Vec<Value> =
        report.checks().iter().map(|(name, passed)| json!({ "check": name, "passed": passed })).collect();
    let status = if report.passed() { Status::Ok } else { Status::Negative };
    Ok(Outcome::ok(json!({
        "passed": report.passed(),
        "checks": checks,
        "determinant": report.determinant.as_ref().map(render),
    }))
    .with_status(status)
    .with_mode("exact")
    .with_residuals(json!({ "det_residual": report.det_residual, "tol": report.tol })))
}

fn dispatch(cmd: &Command, cfg: &SessionConfig) -> Result<Outcome, CliError> {
    let s = Session::new(cfg)?;
    match cmd {
        Command::Spectrum { f } => spectrum(&s, f),
        Command::Member { target } => member(&s, target),
        Command::Saturate { bound } => saturate(&s, *bound),
        Command::HullTest { extra, point, z, max_degree } => {
            hull_test(&s, extra.as_deref(), point.as_deref(), z.as_deref(), *max_degree)
        }
        Command::CoronaCertify { f } => corona_certify(&s, f),
        Command::CoronaSolve { f, samples } => corona_solve(&s, f, *samples),
        Command::Invert { f } => invert(&s, f),
        Command::Log { f } => log(&s, f),
        Command::Exp { g, order } => exp(&s, g, *order),
        Command::Complete { matrix } => complete(&s, matrix),
        Command::Verify { matrix, completed } => verify(&s, matrix, completed),
    }
}

/// Runs one command and builds its report. The exit status is
/// [`Report::exit_code`].
pub fn run_command(cmd: &Command, cfg: &SessionConfig) -> Report {
    let start = Instant::now();
    let outcome = dispatch(cmd, cfg);
    let wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    let inputs = json!({ "args": cmd, "session": cfg });
    let (status, mode, result, residuals, error) = match outcome {
        Ok(o) => (o.status, o.mode, o.result, o.residuals, None),
        Err(e) => {
            let status = if NEGATIVE_CODES.contains(&e.code.as_str()) { Status::Negative } else { Status::Error };
            (status, None, json!({}), json!({}), Some(ErrorInfo { code: e.code, message: e.message }))
        }
    };
    Report {
        schema: SCHEMA,
        command: cmd.name().to_string(),
        inputs,
        status,
        mode,
        result,
        residuals,
        error,
        wall_time_ms,
    }
}
