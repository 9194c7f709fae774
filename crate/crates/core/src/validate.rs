//! Invariant checks run against a metric: derivative consistency,
//! homogeneity, signature, orientation, density routes and, for catalog
//! entries, the recorded reference values.

use std::fmt;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::autodiff::hessian_y;
use crate::catalog::{CatalogEntry, GroundTruth, Kind};
use crate::error::{Error, Result};
use crate::expr::parse_with;
use crate::expr::ParseOptions;
use crate::finsler::{cartan_form, metric_at, metric_tensor, Signature};
use crate::linalg::{angle, determinant, norm, normalized, to_matrix};
use crate::metric_spec::MetricSpec;
use crate::orientation::{find_privileged, orientation_at, SolverOptions, Status};
use crate::volume::{classical_density, holmes_thompson_density, minimal_riemannian_density, Form, VolumeOptions};

/// Largest gap between the autodiff Hessian of `L` and second central
/// differences of `L`, relative to `max(1, max|∂²L|)`.
pub fn hessian_fd_error(spec: &MetricSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    let n = y.len();
    let h = 1e-4 * norm(y);
    let ad = hessian_y(&spec.lagrangian, x, y)?;
    let l = |v: &[f64]| -> Result<f64> { Ok(spec.lagrangian.eval_checked::<f64>(x, v)?) };
    let shifted = |i: usize, a: f64, j: usize, b: f64| -> Result<f64> {
        let mut v = y.to_vec();
        v[i] += a;
        v[j] += b;
        l(&v)
    };
    let mut worst = 0.0_f64;
    let scale = ad.hess.iter().flatten().fold(1.0_f64, |m, v| m.max(v.abs()));
    for i in 0..n {
        for j in i..n {
            let fd = if i == j {
                (shifted(i, h, i, 0.0)? - 2.0 * l(y)? + shifted(i, -h, i, 0.0)?) / (h * h)
            } else {
                (shifted(i, h, j, h)? - shifted(i, h, j, -h)? - shifted(i, -h, j, h)? + shifted(i, -h, j, -h)?)
                    / (4.0 * h * h)
            };
            worst = worst.max((fd - ad.hess[i][j]).abs() / scale);
        }
    }
    Ok(worst)
}

/// Largest gap between `C_i` and `½ ∂ log|det g| / ∂y^i` by central
/// differences, relative to `max(1, ‖C‖)·‖y‖⁻¹`.
pub fn cartan_fd_error(spec: &MetricSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    let c = cartan_form(spec, x, y)?;
    let h = 1e-6 * norm(y);
    let log_det = |v: &[f64]| -> Result<f64> { Ok(determinant(&metric_tensor(spec, x, v)?).abs().ln()) };
    let scale = norm(&c).max(1.0 / norm(y));
    let mut worst = 0.0_f64;
    for i in 0..y.len() {
        let mut yp = y.to_vec();
        let mut ym = y.to_vec();
        yp[i] += h;
        ym[i] -= h;
        let fd = 0.5 * (log_det(&yp)? - log_det(&ym)?) / (2.0 * h);
        worst = worst.max((fd - c[i]).abs() / scale);
    }
    Ok(worst)
}

/// Unit direction with `|L(x, y)| ≥ margin` (away from the light cone and
/// from any non-smooth set inside it) and a nondegenerate metric; with
/// `timelike` set, `L ≥ margin`.
pub fn sample_regular_direction(
    spec: &MetricSpec,
    x: &[f64],
    margin: f64,
    timelike: bool,
    rng: &mut impl Rng,
) -> Option<Vec<f64>> {
    for _ in 0..10_000 {
        let y: Vec<f64> = (0..spec.dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        if norm(&y) < 1e-3 {
            continue;
        }
        let y = normalized(&y);
        if !spec.is_admissible(x, &y) {
            continue;
        }
        match (spec.lagrangian_at(x, &y), metric_tensor(spec, x, &y)) {
            (Ok(l), Ok(g)) if (if timelike { l } else { l.abs() }) >= margin && determinant(&g).abs() > 1e-8 => return Some(y),
            _ => {}
        }
    }
    None
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub metric: String,
    pub kind: Kind,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn push(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check { name: name.into(), passed, detail: detail.into() });
    }

    fn push_result(&mut self, name: &str, r: Result<String>) {
        match r {
            Ok(d) => self.push(name, true, d),
            Err(e) => self.push(name, false, e.to_string()),
        }
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let w = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
        for c in &self.checks {
            writeln!(f, "{:<w$}  {}  {}", c.name, if c.passed { "PASS" } else { "FAIL" }, c.detail)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct ValidateOptions {
    pub points: usize,
    pub directions: usize,
    pub rng_seed: u64,
    pub volume: VolumeOptions,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        ValidateOptions { points: 2, directions: 20, rng_seed: 0, volume: VolumeOptions::default() }
    }
}

/// Positive-definite when `L > 0` with Riemannian signature at every
/// sampled direction, Lorentz-Finsler otherwise.
pub fn infer_kind(spec: &MetricSpec, x: &[f64], seed: u64) -> Kind {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..64 {
        let y: Vec<f64> = (0..spec.dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let pd = matches!(spec.lagrangian_at(x, &y), Ok(l) if l > 0.0)
            && matches!(metric_at(spec, x, &y), Ok(g) if g.signature == Signature::riemannian(spec.dim));
        if !pd {
            return Kind::LorentzFinsler;
        }
    }
    Kind::PositiveDefinite
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

/// Runs the suite on a spec; `entry` adds the catalog reference values.
pub fn validate(spec: &MetricSpec, entry: Option<&CatalogEntry>, opts: &ValidateOptions) -> Report {
    let n = spec.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.rng_seed);
    let points: Vec<Vec<f64>> = (0..opts.points.max(1)).map(|_| (0..n).map(|_| rng.random::<f64>()).collect()).collect();
    let kind = entry.map(|e| e.kind).unwrap_or_else(|| infer_kind(spec, &points[0], opts.rng_seed));
    let mut report = Report { metric: spec.name.clone(), kind, checks: Vec::new() };

    report.push_result("expression round-trip", round_trip(spec, &points, &mut rng));

    let mut dirs = Vec::new();
    for x in &points {
        for k in 0..opts.directions {
            if let Some(y) = sample_regular_direction(spec, x, 0.05, k % 2 == 1, &mut rng) {
                dirs.push((x.clone(), y));
            }
        }
    }
    if dirs.is_empty() {
        report.push("regular directions", false, "no direction with |L| ≥ 0.05 and det g ≠ 0 found");
        return report;
    }
    report.push_result("homogeneity", homogeneity(spec, &dirs));
    report.push_result("hessian vs finite differences", worst_of(&dirs, 1e-4, |x, y| hessian_fd_error(spec, x, y)));
    report.push_result("cartan vs log-det gradient", worst_of(&dirs, 1e-4, |x, y| cartan_fd_error(spec, x, y)));
    report.push_result("determinant consistency", worst_of(&dirs, 1e-10, |x, y| Ok(metric_at(spec, x, y)?.det_consistency())));
    report.push_result("signature", signature(spec, kind, &dirs));
    if let Some(t) = entry.and_then(|e| e.truth.constant_det) {
        report.push_result(
            "constant determinant",
            worst_of(&dirs, 1e-10, |x, y| Ok((metric_at(spec, x, y)?.det - t).abs() / t.abs())),
        );
    }
    let truth = entry.map(|e| &e.truth);
    match kind {
        Kind::LorentzFinsler => lorentzian_checks(spec, entry, truth, &points, opts, &mut report),
        Kind::PositiveDefinite => classical_checks(spec, truth, &points, opts, &mut report),
    }
    report
}

fn round_trip(spec: &MetricSpec, points: &[Vec<f64>], rng: &mut ChaCha8Rng) -> Result<String> {
    let text = spec.lagrangian.to_string();
    let again = parse_with(&text, &ParseOptions { dim: Some(spec.dim), symbols: vec![] })
        .map_err(|source| Error::Parse { field: "lagrangian".into(), source })?;
    for x in points {
        let y: Vec<f64> = (0..spec.dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (a, b) = (spec.lagrangian.eval::<f64>(x, &y)?, again.eval::<f64>(x, &y)?);
        if !(a == b || (a.is_nan() && b.is_nan())) {
            return Err(Error::RouteMismatch(format!("printed form evaluates to {b}, original to {a}")));
        }
    }
    Ok(format!("{} bytes", text.len()))
}

fn homogeneity(spec: &MetricSpec, dirs: &[(Vec<f64>, Vec<f64>)]) -> Result<String> {
    let mut worst = 0.0_f64;
    for (x, y) in dirs {
        let l = spec.lagrangian_at(x, y)?;
        for lam in [0.5, 3.0] {
            let scaled: Vec<f64> = y.iter().map(|v| lam * v).collect();
            let ls = spec.lagrangian_at(x, &scaled)?;
            worst = worst.max((ls - lam * lam * l).abs() / (lam * lam * l.abs()));
        }
    }
    if worst > 1e-12 {
        return Err(Error::RouteMismatch(format!("L(λy) deviates from λ²L(y) by {worst:.3e}")));
    }
    Ok(format!("max relative gap {worst:.1e}"))
}

fn worst_of(
    dirs: &[(Vec<f64>, Vec<f64>)],
    tol: f64,
    f: impl Fn(&[f64], &[f64]) -> Result<f64>,
) -> Result<String> {
    let mut worst = 0.0_f64;
    for (x, y) in dirs {
        worst = worst.max(f(x, y)?);
    }
    if !(worst <= tol) {
        return Err(Error::RouteMismatch(format!("max gap {worst:.3e} exceeds {tol:.0e}")));
    }
    Ok(format!("max gap {worst:.1e} over {} samples", dirs.len()))
}

fn signature(spec: &MetricSpec, kind: Kind, dirs: &[(Vec<f64>, Vec<f64>)]) -> Result<String> {
    let n = spec.dim;
    let mut checked = 0;
    for (x, y) in dirs {
        let l = spec.lagrangian_at(x, y)?;
        let expect = match kind {
            Kind::PositiveDefinite => Signature::riemannian(n),
            Kind::LorentzFinsler if l > 0.0 => Signature::lorentzian(n),
            Kind::LorentzFinsler => continue,
        };
        let g = metric_at(spec, x, y)?;
        if g.signature != expect {
            return Err(Error::RouteMismatch(format!("signature {:?} at y = {y:?}", g.signature)));
        }
        checked += 1;
    }
    if checked == 0 {
        return Err(Error::NoTimelikeSeed { attempts: dirs.len() });
    }
    Ok(format!("{checked} samples"))
}

fn lorentzian_checks(
    spec: &MetricSpec,
    entry: Option<&CatalogEntry>,
    truth: Option<&GroundTruth>,
    points: &[Vec<f64>],
    opts: &ValidateOptions,
    report: &mut Report,
) {
    let solver = &opts.volume.solver;
    let x = &points[0];
    let t0 = if truth.is_some_and(|t| t.all_directions_privileged) {
        entry.map_or_else(|| find_privileged(spec, x, solver), |e| orientation_at(spec, x, &e.sample_direction, solver))
    } else {
        find_privileged(spec, x, solver)
    };
    let t0 = match t0 {
        Ok(t) if t.status.is_success() => {
            report.push("privileged orientation", true, format!("residual {:.1e}, {:?}", t.residual, t.status));
            t
        }
        Ok(t) => {
            report.push("privileged orientation", false, format!("residual {:.1e}", t.residual));
            return;
        }
        Err(e) => {
            report.push("privileged orientation", false, e.to_string());
            return;
        }
    };
    if let Some(d) = truth.and_then(|t| t.privileged_direction.as_ref()) {
        let a = angle(&t0.direction, d);
        report.push("reference direction", a < 1e-6, format!("angle {a:.1e}"));
    }
    let bh = match minimal_riemannian_density(spec, x, &t0) {
        Ok(bh) => {
            report.push("bh density routes", true, format!("sigma {:.12}", bh.sigma));
            bh
        }
        Err(e) => {
            report.push("bh density routes", false, e.to_string());
            return;
        }
    };
    if let Some(t) = truth.and_then(|t| t.abs_det_t0) {
        report.push("reference |det g(t0)|", close(t0.critical_value, t, 1e-8), format!("{}", t0.critical_value));
    }
    if let Some(s) = truth.and_then(|t| t.sigma_bh) {
        report.push("reference sigma_bh", close(bh.sigma, s, 1e-8), format!("{}", bh.sigma));
    }
    let prolongable = truth.is_none_or(|t| t.ht_prolongable);
    match holmes_thompson_density(spec, x, &t0, &opts.volume) {
        Ok(ht) => {
            let lower = ht.diagnostics.ht_lower_bound.unwrap_or(0.0);
            report.push("ht lower bound", ht.sigma >= lower, format!("{} ≥ {}", ht.sigma, lower));
            if let Some(s) = truth.and_then(|t| t.sigma_ht) {
                report.push("reference sigma_ht", close(ht.sigma, s, 1e-6), format!("{}", ht.sigma));
            }
            if !prolongable {
                report.push("ht not prolongable", false, "expected DetNotProlongable");
            }
        }
        Err(Error::DetNotProlongable { discrepancy, .. }) if !prolongable => {
            report.push("ht not prolongable", true, format!("rule discrepancy {discrepancy:.1e}"));
        }
        Err(e) => report.push("ht lower bound", false, e.to_string()),
    }
    if t0.status == Status::MultipleMinima || truth.is_some_and(|t| t.all_directions_privileged) {
        report.push_result("orientation independence", orientation_independence(spec, x, &t0.direction, bh.sigma, opts));
    }
    report.push_result("coordinate covariance", covariance(spec, x, &t0.direction, bh.sigma, solver));
}

/// The BH density from a second privileged direction must agree.
fn orientation_independence(spec: &MetricSpec, x: &[f64], t: &[f64], sigma: f64, opts: &ValidateOptions) -> Result<String> {
    let other = SolverOptions { rng_seed: opts.rng_seed.wrapping_add(1), ..opts.volume.solver.clone() };
    let t1 = find_privileged(spec, x, &other)?;
    let s1 = minimal_riemannian_density(spec, x, &t1)?.sigma;
    let a = angle(t, &t1.direction);
    if !close(s1, sigma, 1e-8) {
        return Err(Error::RouteMismatch(format!("{s1} vs {sigma} at directions {a:.2e} rad apart")));
    }
    Ok(format!("directions {a:.2e} rad apart"))
}

/// Under `y = S·ỹ` the density picks up the factor `det S`.
fn covariance(spec: &MetricSpec, x: &[f64], t: &[f64], sigma: f64, solver: &SolverOptions) -> Result<String> {
    let n = spec.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let s: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 } + rng.random_range(-0.2..0.2)).collect())
        .collect();
    let sm = to_matrix(&s);
    let det_s = determinant(&sm);
    let inv: DMatrix<f64> = sm.try_inverse().ok_or(Error::DegenerateMetric)?;
    let t_new: Vec<f64> = (0..n).map(|i| (0..n).map(|j| inv[(i, j)] * t[j]).sum()).collect();
    let rebased = spec.change_basis(&s);
    let t1 = orientation_at(&rebased, x, &t_new, solver)?;
    let s1 = minimal_riemannian_density(&rebased, x, &t1)?.sigma;
    if !close(s1, det_s.abs() * sigma, 1e-9) {
        return Err(Error::RouteMismatch(format!("{s1} vs det S · sigma = {}", det_s.abs() * sigma)));
    }
    Ok(format!("det S = {det_s:.4}"))
}

fn classical_checks(
    spec: &MetricSpec,
    truth: Option<&GroundTruth>,
    points: &[Vec<f64>],
    opts: &ValidateOptions,
    report: &mut Report,
) {
    let x = &points[0];
    for (form, name, reference) in [
        (Form::ClassicalBH, "classical bh", truth.and_then(|t| t.sigma_classical_bh)),
        (Form::ClassicalHT, "classical ht", truth.and_then(|t| t.sigma_classical_ht)),
    ] {
        match classical_density(spec, x, form, &opts.volume) {
            Ok(d) => {
                let se = d.diagnostics.standard_error.unwrap_or(0.0);
                match reference {
                    Some(r) => report.push(
                        name,
                        (d.sigma - r).abs() <= 3.0 * se + 1e-12,
                        format!("{:.8} ± {se:.1e} (reference {r:.8})", d.sigma),
                    ),
                    None => report.push(name, d.sigma > 0.0, format!("{:.8} ± {se:.1e}", d.sigma)),
                }
            }
            Err(e) => report.push(name, false, e.to_string()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    fn fast() -> ValidateOptions {
        let mut o = ValidateOptions { points: 1, directions: 5, ..Default::default() };
        o.volume.solver.seeds = 4;
        o.volume.samples = 16_000;
        o
    }

    #[test]
    fn catalog_entries_validate() {
        for name in ["minkowski4", "berwald-moor", "bogoslovsky-toy", "riemannian-diag", "euclidean-n", "pd-quartic"] {
            let e = catalog::builtin(name).unwrap();
            let r = validate(&e.spec, Some(&e), &fast());
            assert!(r.all_passed(), "{name}\n{r}");
        }
    }

    #[test]
    fn inferred_kinds() {
        let e = catalog::builtin("pd-quartic").unwrap().spec;
        assert_eq!(infer_kind(&e, &[0.0, 0.0], 0), Kind::PositiveDefinite);
        let m = catalog::builtin("minkowski4").unwrap().spec;
        assert_eq!(infer_kind(&m, &[0.0; 4], 0), Kind::LorentzFinsler);
    }

    #[test]
    fn wrong_reference_fails() {
        let mut e = catalog::builtin("minkowski4").unwrap();
        e.truth.sigma_bh = Some(2.0);
        let r = validate(&e.spec, Some(&e), &fast());
        assert!(!r.all_passed());
        assert!(r.to_string().contains("FAIL"));
    }

    #[test]
    fn finite_difference_checks_are_small() {
        let spec = catalog::builtin("linearized-quartic").unwrap().spec;
        let y = [0.9, 0.1, -0.2, 0.3];
        assert!(hessian_fd_error(&spec, &[0.0; 4], &y).unwrap() < 1e-6);
        assert!(cartan_fd_error(&spec, &[0.0; 4], &y).unwrap() < 1e-6);
    }
}
