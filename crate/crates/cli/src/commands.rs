use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{anyhow, Context, Result};
use measure_balancer_core::sphere::point_to_sphere;
use measure_balancer_core::{
    balance, center_of_mass, classify, hersch_balance, lambda_via_flow, maximal_weight, random,
    torus_solve, AtomicMeasure, BalanceMethod, BalanceOptions, BalanceResult, BalanceVerdict,
    CMatrix, Error, SpectralDirection, StabilityKind, StabilityVerdict, Subspace, TorusOptions,
    C64,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::io::{self, matrix_json, sci, MeasureFile};
use crate::{exit, BalanceArgs, ClassifyArgs, Cli, Command, Method, SphereBalanceArgs, SphereCommand, TorusArgs, WeightArgs};

/// An error together with the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub error: anyhow::Error,
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure { code: exit::INPUT_ERROR, error: e.into() }
    }
}

pub type Outcome = std::result::Result<i32, Failure>;

pub fn run(cli: &Cli, out: &mut dyn Write) -> Outcome {
    match &cli.command {
        Command::Classify(args) => cmd_classify(args, args.decompose, out),
        Command::Decompose(args) => cmd_classify(args, true, out),
        Command::Weight(args) => cmd_weight(args, out),
        Command::Balance(args) => cmd_balance(args, out),
        Command::Sphere { command: SphereCommand::Balance(args) } => cmd_sphere_balance(args, out),
        Command::Sphere { command: SphereCommand::Com { measure } } => cmd_sphere_com(measure, out),
        Command::Torus(args) => cmd_torus(args, out),
    }
}

fn positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(anyhow!("{name} must be positive, got {x}"))
    }
}

fn finite_or_null(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

fn print_json(out: &mut dyn Write, value: &Value) -> Result<()> {
    serde_json::to_writer(&mut *out, value)?;
    writeln!(out)?;
    Ok(())
}

fn kind_code(kind: StabilityKind) -> i32 {
    match kind {
        StabilityKind::Stable => exit::STABLE,
        StabilityKind::PolystableNotStable => exit::POLYSTABLE,
        StabilityKind::SemistableNotPolystable => exit::SEMISTABLE,
        StabilityKind::Unstable => exit::UNSTABLE,
    }
}

fn subspace_json(s: &Subspace) -> Value {
    json!({
        "dim": s.dim(),
        "mass": s.mass(),
        "atoms": s.atoms(),
        "basis": matrix_json(s.basis()),
    })
}

fn classify_json(verdict: &StabilityVerdict, tol_eq: f64, strict: bool, detailed: bool) -> Value {
    let boundary = verdict.margin.abs() <= tol_eq;
    let reported = if strict && boundary { "boundary" } else { verdict.kind.as_str() };
    let show_blocks = detailed || verdict.kind == StabilityKind::PolystableNotStable;
    let decomposition = verdict.decomposition.as_ref().filter(|_| show_blocks).map(|split| {
        split
            .blocks
            .iter()
            .map(|b| {
                let mut block = json!({
                    "dim": b.basis.ncols() - 1,
                    "mass": b.mass,
                    "atoms": b.atoms,
                });
                if detailed {
                    block["basis"] = json!(matrix_json(&b.basis));
                    block["measure"] = serde_json::to_value(MeasureFile::from_measure(&b.measure))
                        .expect("measures serialize");
                }
                block
            })
            .collect::<Vec<_>>()
    });
    json!({
        "kind": verdict.kind.as_str(),
        "verdict": reported,
        "margin": finite_or_null(verdict.margin),
        "boundary": boundary,
        "tol_eq": tol_eq,
        "certificate": verdict.certificate.as_ref().map(subspace_json),
        "decomposition": decomposition,
    })
}

fn fmt_complex(z: C64) -> String {
    format!("{}{:+}i", z.re, z.im)
}

fn write_basis(out: &mut dyn Write, basis: &CMatrix, indent: &str) -> Result<()> {
    for col in basis.column_iter() {
        let entries: Vec<String> = col.iter().map(|z| fmt_complex(*z)).collect();
        writeln!(out, "{indent}[{}]", entries.join(", "))?;
    }
    Ok(())
}

fn classify_text(
    out: &mut dyn Write,
    verdict: &StabilityVerdict,
    tol_eq: f64,
    strict: bool,
    detailed: bool,
) -> Result<()> {
    let boundary = verdict.margin.abs() <= tol_eq;
    if strict && boundary {
        writeln!(out, "kind: boundary (within tol_eq; {} otherwise)", verdict.kind.as_str())?;
    } else {
        writeln!(out, "kind: {}", verdict.kind.as_str())?;
    }
    writeln!(out, "margin: {}", verdict.margin)?;
    if let Some(cert) = &verdict.certificate {
        writeln!(out, "certificate: dim {} mass {} atoms {:?}", cert.dim(), cert.mass(), cert.atoms())?;
        write_basis(out, cert.basis(), "  ")?;
    }
    let show_blocks = detailed || verdict.kind == StabilityKind::PolystableNotStable;
    if let Some(split) = verdict.decomposition.as_ref().filter(|_| show_blocks) {
        writeln!(out, "decomposition: {} blocks", split.blocks.len())?;
        for (j, b) in split.blocks.iter().enumerate() {
            writeln!(out, "  block {j}: dim {} mass {} atoms {:?}", b.basis.ncols() - 1, b.mass, b.atoms)?;
            if detailed {
                write_basis(out, &b.basis, "    ")?;
                for atom in b.measure.atoms() {
                    let z: Vec<String> = atom.point.coeffs().iter().map(|z| fmt_complex(*z)).collect();
                    writeln!(out, "    atom [{}] weight {}", z.join(", "), atom.weight)?;
                }
            }
        }
    }
    Ok(())
}

pub fn cmd_classify(args: &ClassifyArgs, detailed: bool, out: &mut dyn Write) -> Outcome {
    positive("tol-eq", args.tol_eq)?;
    let nu = io::read_measure(&args.measure)?;
    let verdict = classify(&nu, args.tol_eq)?;
    if args.json {
        print_json(out, &classify_json(&verdict, args.tol_eq, args.strict, detailed))?;
    } else {
        classify_text(out, &verdict, args.tol_eq, args.strict, detailed)?;
    }
    Ok(kind_code(verdict.kind))
}

struct WeightRow {
    eigenvalues: Vec<f64>,
    multiplicities: Vec<usize>,
    masses: Vec<f64>,
    lambda: f64,
    flow: Option<f64>,
}

fn weight_row(nu: &AtomicMeasure, d: &SpectralDirection, flow_t: Option<f64>) -> Result<WeightRow> {
    let report = maximal_weight(nu, d)?;
    let flow = flow_t.map(|t| lambda_via_flow(nu, d, t)).transpose()?;
    Ok(WeightRow {
        eigenvalues: d.eigenvalues().to_vec(),
        multiplicities: d.multiplicities(),
        masses: report.strata.iter().map(|s| s.mass).collect(),
        lambda: report.lambda,
        flow,
    })
}

fn join<T>(xs: &[T], f: impl Fn(&T) -> String) -> String {
    xs.iter().map(f).collect::<Vec<_>>().join(";")
}

pub fn cmd_weight(args: &WeightArgs, out: &mut dyn Write) -> Outcome {
    if let Some(t) = args.flow_check {
        positive("flow-check", t)?;
    }
    let nu = io::read_measure(&args.measure)?;
    let directions = match (&args.direction, args.random) {
        (Some(path), _) => {
            let d = SpectralDirection::new(io::read_matrix(path)?).context("invalid direction")?;
            if d.dim() != nu.dim() {
                return Err(Error::DimensionMismatch { expected: nu.dim(), found: d.dim() }.into());
            }
            vec![d]
        }
        (None, Some(0)) | (None, None) => return Err(anyhow!("--random needs k > 0").into()),
        (None, Some(k)) => {
            let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
            (0..k).map(|_| random::direction(nu.dim(), &mut rng)).collect()
        }
    };
    let rows: Vec<WeightRow> = directions
        .par_iter()
        .map(|d| weight_row(&nu, d, args.flow_check))
        .collect::<Result<_>>()?;

    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["direction", "eigenvalues", "multiplicities", "stratum_masses", "lambda"];
    if args.flow_check.is_some() {
        header.extend(["flow", "discrepancy"]);
    }
    w.write_record(&header)?;
    for (k, row) in rows.iter().enumerate() {
        let mut record = vec![
            k.to_string(),
            join(&row.eigenvalues, |x| sci(*x)),
            join(&row.multiplicities, |m| m.to_string()),
            join(&row.masses, |x| sci(*x)),
            sci(row.lambda),
        ];
        if let Some(flow) = row.flow {
            record.push(sci(flow));
            record.push(sci((row.lambda - flow).abs()));
        }
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(exit::STABLE)
}

fn write_trace_file(path: &Path, result: &BalanceResult) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    io::write_trace(BufWriter::new(file), &result.trace)
}

fn verdict_parts(verdict: &BalanceVerdict) -> (&'static str, i32, Option<&Subspace>) {
    match verdict {
        BalanceVerdict::Converged => ("converged", exit::CONVERGED, None),
        BalanceVerdict::DivergedWithCertificate(s) => ("diverged", exit::DIVERGED, Some(s)),
        BalanceVerdict::MaxIterations => ("max_iterations", exit::MAX_ITERATIONS, None),
    }
}

pub fn cmd_balance(args: &BalanceArgs, out: &mut dyn Write) -> Outcome {
    positive("tol", args.tol)?;
    let nu = io::read_measure(&args.measure)?;
    let target = args.target.as_deref().map(io::read_matrix).transpose()?;
    let method = match args.method {
        Method::FixedPoint => BalanceMethod::FixedPoint,
        Method::Descent => BalanceMethod::GeodesicDescent,
    };
    let options = BalanceOptions { method, tol: args.tol, max_iter: args.max_iter, start: None };
    let result = balance(&nu, target.as_ref(), &options)?;
    if let Some(path) = &args.trace {
        write_trace_file(path, &result)?;
    }
    let (name, code, cert) = verdict_parts(&result.verdict);
    print_json(
        out,
        &json!({
            "verdict": name,
            "residual": result.residual,
            "iterations": result.iterations,
            "g": matrix_json(result.g.matrix()),
            "certificate": cert.map(subspace_json),
        }),
    )?;
    Ok(code)
}

pub fn cmd_sphere_balance(args: &SphereBalanceArgs, out: &mut dyn Write) -> Outcome {
    positive("tol", args.tol)?;
    let sm = io::read_sphere(&args.measure)?;
    let h = hersch_balance(&sm, args.tol, args.max_iter)?;
    if let Some(path) = &args.trace {
        write_trace_file(path, &h.result)?;
    }
    let (name, code, cert) = verdict_parts(&h.result.verdict);
    let g = h.mobius.matrix();
    let (a, b, c, d) = (g[(0, 0)], g[(0, 1)], g[(1, 0)], g[(1, 1)]);
    let certificate = cert.map(|s| {
        let mut v = subspace_json(s);
        v["points"] = json!(s.basis_points().iter().map(|p| point_to_sphere(p).as_slice().to_vec()).collect::<Vec<_>>());
        v
    });
    print_json(
        out,
        &json!({
            "kind": h.kind.as_str(),
            "verdict": name,
            "residual": h.result.residual,
            "iterations": h.result.iterations,
            "mobius": matrix_json(g),
            "map": {
                "coordinate": "w = (x + iy)/(1 + z)",
                "formula": format!(
                    "w -> (({}) w + ({})) / (({}) w + ({}))",
                    fmt_complex(d), fmt_complex(c), fmt_complex(b), fmt_complex(a)
                ),
                "numerator": [io::complex(d), io::complex(c)],
                "denominator": [io::complex(b), io::complex(a)],
            },
            "final_com": h.final_com.as_slice(),
            "certificate": certificate,
        }),
    )?;
    Ok(code)
}

pub fn cmd_sphere_com(path: &Path, out: &mut dyn Write) -> Outcome {
    let sm = io::read_sphere(path)?;
    let com = center_of_mass(&sm);
    print_json(out, &json!({ "com": com.as_slice(), "norm": com.norm() }))?;
    Ok(exit::STABLE)
}

pub fn cmd_torus(args: &TorusArgs, out: &mut dyn Write) -> Outcome {
    positive("tol", args.tol)?;
    let nu = io::read_measure(&args.measure)?;
    let beta = args.beta.clone().unwrap_or_else(|| vec![0.0; nu.dim() + 1]);
    let options = TorusOptions { tol: args.tol, max_iter: args.max_iter };
    let result = match torus_solve(&nu, &beta, &options) {
        Ok(r) => r,
        Err(Error::TargetOutsidePolytope) => {
            return Err(Failure { code: exit::OUTSIDE_POLYTOPE, error: Error::TargetOutsidePolytope.into() })
        }
        Err(e) => return Err(e.into()),
    };
    print_json(
        out,
        &json!({
            "theta": result.theta,
            "residual": result.residual,
            "iterations": result.iterations,
            "converged": result.converged,
        }),
    )?;
    Ok(if result.converged { exit::CONVERGED } else { exit::MAX_ITERATIONS })
}
