//! The `finslervol` command line. Every subcommand prints one JSON document
//! `{command, inputs, result, diagnostics, version}` on stdout; failures
//! print `{error: {code, message}, command, version}` on stderr and exit
//! with 1 (computational) or 2 (usage).

use std::io::Write;
use std::path::Path;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use crate::action::{evaluate_action, ActionSpec, Weighting};
use crate::catalog::{self, CatalogEntry};
use crate::error::{Error, Result};
use crate::finsler::{cartan_form, classify, metric_at, norm_f};
use crate::metric_spec::MetricSpec;
use crate::orientation::{find_privileged, orientation_at, SolverOptions};
use crate::quadrature::QuadOptions;
use crate::validate::{validate, ValidateOptions};
use crate::volume::{density, integrate_volume, BoxDomain, Form, VolumeOptions};
use crate::VERSION;

#[derive(Parser, Debug)]
#[command(name = "finslervol", version, about = "Volume forms of Lorentz-Finsler Lagrangians")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, default_value_t = 0)]
    rng_seed: u64,
    /// Random timelike seeds per point for the orientation search.
    #[arg(long, global = true, default_value_t = 16)]
    seeds: usize,
    #[arg(long, global = true, default_value_t = 300)]
    max_iters: usize,
    /// Convergence threshold on the Cartan form (default 1e-8·n).
    #[arg(long, global = true)]
    tol_residual: Option<f64>,
    #[arg(long, global = true)]
    quad_radial: Option<usize>,
    #[arg(long, global = true)]
    quad_angular: Option<usize>,
    /// Quasi-random samples for classical densities.
    #[arg(long, global = true, default_value_t = 100_000)]
    samples: usize,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// L, F, metric, signature, causal class and Cartan form at (x, y).
    Inspect {
        #[arg(long)]
        metric: String,
        #[arg(long)]
        point: String,
        #[arg(long)]
        direction: String,
    },
    /// Privileged time orientation at a point.
    Orient {
        #[arg(long)]
        metric: String,
        #[arg(long)]
        point: String,
    },
    /// Volume density at a point.
    Volume {
        #[arg(long)]
        metric: String,
        /// bh, ht, classical-bh or classical-ht
        #[arg(long, default_value = "bh")]
        form: String,
        #[arg(long)]
        point: String,
        /// Use this direction as the orientation instead of searching
        /// (it must be a critical direction).
        #[arg(long)]
        direction: Option<String>,
    },
    /// Integral of a volume density over a box.
    Integrate {
        #[arg(long)]
        metric: String,
        #[arg(long, default_value = "bh")]
        form: String,
        /// Box as "lo,hi;lo,hi;...".
        #[arg(long)]
        domain: String,
        /// Cells per axis: one number or one per axis.
        #[arg(long, default_value = "1")]
        res: String,
        /// Write per-cell densities to this CSV file.
        #[arg(long)]
        csv: Option<String>,
    },
    /// Action integral of a density over a box.
    Action {
        #[arg(long)]
        metric: String,
        /// Expression in x, y, L and the fields.
        #[arg(long)]
        density: String,
        /// Field definition "name=expr"; repeatable.
        #[arg(long = "field")]
        fields: Vec<String>,
        #[arg(long)]
        domain: String,
        #[arg(long, default_value = "1")]
        res: String,
        /// detg or fallback
        #[arg(long, default_value = "detg")]
        weighting: String,
    },
    /// Run the invariant suite and print a pass/fail table.
    Validate {
        #[arg(long)]
        metric: String,
        #[arg(long, default_value_t = 2)]
        points: usize,
        #[arg(long, default_value_t = 20)]
        directions: usize,
    },
    /// List the built-in metrics.
    Catalog {
        /// Show a single entry, including its Lagrangian.
        #[arg(long)]
        name: Option<String>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Inspect { .. } => "inspect",
            Command::Orient { .. } => "orient",
            Command::Volume { .. } => "volume",
            Command::Integrate { .. } => "integrate",
            Command::Action { .. } => "action",
            Command::Validate { .. } => "validate",
            Command::Catalog { .. } => "catalog",
        }
    }
}

/// Comma-separated decimals.
pub fn parse_vector(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|p| {
            let p = p.trim();
            p.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::InvalidArgument(format!("`{p}` is not a finite number in `{s}`")))
        })
        .collect()
}

/// `"lo,hi;lo,hi;..."`.
pub fn parse_domain(s: &str) -> Result<BoxDomain> {
    let mut lo = Vec::new();
    let mut hi = Vec::new();
    for part in s.split(';') {
        let v = parse_vector(part)?;
        if v.len() != 2 {
            return Err(Error::InvalidArgument(format!("domain interval `{part}` must be `lo,hi`")));
        }
        lo.push(v[0]);
        hi.push(v[1]);
    }
    BoxDomain::new(lo, hi)
}

fn parse_res(s: &str, n: usize) -> Result<Vec<usize>> {
    let v: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|_| Error::InvalidArgument(format!("bad resolution `{s}`"))))
        .collect::<Result<_>>()?;
    match v.len() {
        1 => Ok(vec![v[0]; n]),
        k if k == n => Ok(v),
        k => Err(Error::InvalidArgument(format!("resolution has {k} entries, expected 1 or {n}"))),
    }
}

/// A catalog name or a spec file path.
pub fn load_metric(s: &str) -> Result<(MetricSpec, Option<CatalogEntry>)> {
    match catalog::builtin(s) {
        Ok(e) => Ok((e.spec.clone(), Some(e))),
        Err(Error::UnknownMetric(_)) if Path::new(s).is_file() => Ok((MetricSpec::load(s)?, None)),
        Err(e) => Err(e),
    }
}

fn check_len(v: &[f64], n: usize, what: &str) -> Result<()> {
    if v.len() != n {
        return Err(Error::InvalidArgument(format!("{what} has {} components, expected {n}", v.len())));
    }
    Ok(())
}

impl Common {
    fn solver(&self) -> SolverOptions {
        SolverOptions {
            seeds: self.seeds,
            max_iters: self.max_iters,
            tol_residual: self.tol_residual,
            rng_seed: self.rng_seed,
            ..Default::default()
        }
    }

    fn volume(&self, n: usize) -> Result<VolumeOptions> {
        let d = QuadOptions::defaults(n);
        let quad = QuadOptions {
            radial: self.quad_radial.unwrap_or(d.radial),
            angular: self.quad_angular.unwrap_or(d.angular),
        };
        if quad.radial == 0 || quad.angular == 0 {
            return Err(Error::InvalidArgument("quadrature node counts must be positive".into()));
        }
        Ok(VolumeOptions {
            solver: self.solver(),
            quad: Some(quad),
            samples: self.samples,
            rng_seed: self.rng_seed,
            ..Default::default()
        })
    }
}

struct Output {
    inputs: Value,
    result: Value,
    residual: Option<f64>,
    singular_nodes: usize,
    status: String,
    /// Exit code on success paths (validate reports failures with 1).
    code: i32,
}

impl Output {
    fn ok(inputs: Value, result: Value) -> Self {
        Output { inputs, result, residual: None, singular_nodes: 0, status: "ok".into(), code: 0 }
    }
}

fn run(cmd: &Command, common: &Common) -> Result<Output> {
    match cmd {
        Command::Inspect { metric, point, direction } => {
            let (spec, _) = load_metric(metric)?;
            let (x, y) = (parse_vector(point)?, parse_vector(direction)?);
            check_len(&x, spec.dim, "point")?;
            check_len(&y, spec.dim, "direction")?;
            let g = metric_at(&spec, &x, &y)?;
            let cartan = if g.is_degenerate() { None } else { Some(cartan_form(&spec, &x, &y)?) };
            let result = json!({
                "metric": spec.name,
                "L": spec.lagrangian_at(&x, &y)?,
                "F": norm_f(&spec, &x, &y)?,
                "g": g.rows(),
                "det": g.det,
                "signature": g.signature,
                "class": classify(&spec, &x, &y),
                "cartan": cartan,
            });
            Ok(Output::ok(json!({"metric": metric, "point": x, "direction": y}), result))
        }
        Command::Orient { metric, point } => {
            let (spec, _) = load_metric(metric)?;
            let x = parse_vector(point)?;
            check_len(&x, spec.dim, "point")?;
            let o = find_privileged(&spec, &x, &common.solver())?;
            let mut out = Output::ok(json!({"metric": metric, "point": x}), serde_json::to_value(&o).expect("orientation serializes"));
            out.residual = Some(o.residual);
            out.status = format!("{:?}", o.status);
            Ok(out)
        }
        Command::Volume { metric, form, point, direction } => {
            let (spec, _) = load_metric(metric)?;
            let form: Form = form.parse()?;
            let x = parse_vector(point)?;
            check_len(&x, spec.dim, "point")?;
            let opts = common.volume(spec.dim)?;
            let t0 = match direction {
                Some(d) if !form.is_classical() => {
                    let t = parse_vector(d)?;
                    check_len(&t, spec.dim, "direction")?;
                    Some(orientation_at(&spec, &x, &t, &opts.solver)?)
                }
                _ => None,
            };
            let d = density(&spec, &x, form, t0.as_ref(), &opts)?;
            let residual = d.orientation_used.as_ref().map(|o| o.residual);
            let status = d.orientation_used.as_ref().map_or("ok".to_string(), |o| format!("{:?}", o.status));
            let result = json!({
                "x": d.x,
                "sigma": d.sigma,
                "form": form.cli_name(),
                "orientation": d.orientation_used.as_ref().map(|o| &o.direction),
                "residual": residual,
                "standard_error": d.diagnostics.standard_error,
                "ht_lower_bound": d.diagnostics.ht_lower_bound,
                "rule_discrepancy": d.diagnostics.rule_discrepancy,
            });
            let mut out = Output::ok(
                json!({"metric": metric, "form": form.cli_name(), "point": x, "direction": direction}),
                result,
            );
            out.residual = residual;
            out.singular_nodes = d.diagnostics.singular_nodes;
            out.status = status;
            Ok(out)
        }
        Command::Integrate { metric, form, domain, res, csv } => {
            let (spec, _) = load_metric(metric)?;
            let form: Form = form.parse()?;
            let dom = parse_domain(domain)?;
            let res = parse_res(res, spec.dim)?;
            let v = integrate_volume(&spec, &dom, form, &res, &common.volume(spec.dim)?)?;
            if let Some(path) = csv {
                std::fs::write(path, v.cells_csv())?;
            }
            let result = json!({
                "value": v.value,
                "form": form.cli_name(),
                "cells": v.cells.len(),
                "smoothness": v.smoothness,
                "csv": csv,
            });
            let mut out = Output::ok(
                json!({"metric": metric, "form": form.cli_name(), "domain": dom, "res": res}),
                result,
            );
            out.residual = v.max_residual;
            out.singular_nodes = v.singular_nodes;
            Ok(out)
        }
        Command::Action { metric, density, fields, domain, res, weighting } => {
            let (spec, _) = load_metric(metric)?;
            let weighting: Weighting = weighting.parse()?;
            let dom = parse_domain(domain)?;
            let res = parse_res(res, spec.dim)?;
            let fields: Vec<(String, String)> = fields
                .iter()
                .map(|f| {
                    f.split_once('=')
                        .map(|(a, b)| (a.trim().to_string(), b.to_string()))
                        .ok_or_else(|| Error::InvalidArgument(format!("field `{f}` must be `name=expr`")))
                })
                .collect::<Result<_>>()?;
            let n = spec.dim;
            let a = ActionSpec::new(spec, density, &fields, dom.clone(), weighting)?;
            let v = evaluate_action(&a, &res, &common.volume(n)?)?;
            let mut out = Output::ok(
                json!({"metric": metric, "density": density, "fields": fields, "domain": dom, "res": res,
                       "weighting": format!("{weighting:?}")}),
                json!({"value": v.value, "cells": v.cells}),
            );
            out.residual = Some(v.max_residual);
            out.singular_nodes = v.singular_nodes;
            Ok(out)
        }
        Command::Validate { metric, points, directions } => {
            let (spec, entry) = load_metric(metric)?;
            let opts = ValidateOptions {
                points: *points,
                directions: *directions,
                rng_seed: common.rng_seed,
                volume: common.volume(spec.dim)?,
            };
            let report = validate(&spec, entry.as_ref(), &opts);
            let passed = report.all_passed();
            let mut out = Output::ok(
                json!({"metric": metric}),
                json!({"passed": passed, "checks": report.checks, "table": report.to_string()}),
            );
            out.status = if passed { "pass" } else { "fail" }.into();
            out.code = if passed { 0 } else { 1 };
            Ok(out)
        }
        Command::Catalog { name } => {
            let entries = match name {
                Some(n) => vec![catalog::builtin(n)?],
                None => catalog::all(),
            };
            let list: Vec<Value> = entries
                .iter()
                .map(|e| {
                    json!({
                        "name": e.name,
                        "dim": e.spec.dim,
                        "kind": e.kind,
                        "lagrangian": e.spec.lagrangian.to_string(),
                        "truth": e.truth,
                    })
                })
                .collect();
            Ok(Output::ok(json!({"name": name}), Value::Array(list)))
        }
    }
}

fn error_json(e: &Error, command: Option<&str>) -> Value {
    json!({
        "error": {"code": e.code(), "message": e.to_string()},
        "command": command,
        "version": VERSION,
    })
}

/// Runs the CLI with explicit output streams; returns the exit code.
pub fn run_cli_with<I, S>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{e}");
                return 0;
            }
            let body = json!({
                "error": {"code": "UsageError", "message": e.to_string()},
                "command": null,
                "version": VERSION,
            });
            let _ = writeln!(err, "{body}");
            return 2;
        }
    };
    let name = cli.command.name();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cli.common.threads.unwrap_or(0)).build();
    let result = match pool {
        Ok(p) => p.install(|| run(&cli.command, &cli.common)),
        Err(e) => Err(Error::InvalidArgument(format!("cannot start thread pool: {e}"))),
    };
    match result {
        Ok(o) => {
            let doc = json!({
                "command": name,
                "inputs": o.inputs,
                "result": o.result,
                "diagnostics": {"residual": o.residual, "singular_nodes": o.singular_nodes, "status": o.status},
                "version": VERSION,
            });
            let _ = writeln!(out, "{}", serde_json::to_string_pretty(&doc).expect("json"));
            o.code
        }
        Err(e) => {
            let _ = writeln!(err, "{}", error_json(&e, Some(name)));
            if e.is_usage() {
                2
            } else {
                1
            }
        }
    }
}

pub fn run_cli<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    run_cli_with(argv, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}
