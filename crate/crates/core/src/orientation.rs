//! Osculating metrics and privileged time orientations.
//!
//! A privileged orientation at `x` is a timelike zero of the Cartan form
//! with the smallest value of `f(t) = |det g(x, t)|` among all such zeros.
//! Since `f` is 0-homogeneous, the search runs on the Euclidean unit sphere.
//! Each seed first descends `log f` (spectral step sizes with Armijo
//! backtracking); if that drifts to the light cone or stalls, a damped
//! Gauss-Newton iteration on the tangential residual `2C` is run from the
//! same seed so that critical points which are not local minima are found
//! as well.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::finsler::{cartan_unchecked, classify, metric_at, norm_f, CausalClass, MetricMatrix, Signature};
use crate::linalg::{angle, dot, norm, normalized, symmetric_eigenvalues, tangent_basis};
use crate::metric_spec::MetricSpec;

#[derive(Clone, Debug)]
pub struct SolverOptions {
    /// Number of random timelike seeds per point.
    pub seeds: usize,
    pub max_iters: usize,
    /// Convergence threshold on `‖C‖`; `None` means `1e-8·n`.
    pub tol_residual: Option<f64>,
    pub rng_seed: u64,
    /// Runs whose iterate has `L(t) < eps_cone·‖t‖²` are aborted.
    pub eps_cone: f64,
    /// Directions closer than this (radians) count as the same orientation.
    pub tol_angle: f64,
    /// Relative tolerance on critical values when comparing candidates.
    pub tol_value: f64,
    /// Extra seeds tried before the random ones.
    pub initial: Vec<Vec<f64>>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            seeds: 16,
            max_iters: 300,
            tol_residual: None,
            rng_seed: 0,
            eps_cone: 1e-6,
            tol_angle: 1e-6,
            tol_value: 1e-9,
            initial: Vec::new(),
        }
    }
}

impl SolverOptions {
    pub fn residual_tolerance(&self, n: usize) -> f64 {
        self.tol_residual.unwrap_or(1e-8 * n as f64)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Status {
    Converged,
    /// Several distinct directions attain the minimal critical value.
    MultipleMinima,
    NotFound,
}

impl Status {
    pub fn is_success(self) -> bool {
        matches!(self, Status::Converged | Status::MultipleMinima)
    }
}

/// Kind of critical point, from the tangential Hessian of `|det g|`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CriticalKind {
    Minimum,
    Maximum,
    Saddle,
    /// Hessian vanishes up to round-off (e.g. constant determinant).
    Flat,
}

#[derive(Clone, Debug, Serialize)]
pub struct TimeOrientation {
    pub x: Vec<f64>,
    /// Euclidean unit vector.
    pub direction: Vec<f64>,
    /// `|det g(x, t)|`.
    pub critical_value: f64,
    /// `‖C(x, t)‖`.
    pub residual: f64,
    pub status: Status,
    pub kind: CriticalKind,
    /// Smallest eigenvalue of the tangential Hessian of `|det g|`.
    pub hessian_min_eigenvalue: f64,
    /// Seeds that converged to a critical direction.
    pub converged_runs: usize,
}

#[derive(Clone, Debug)]
pub struct OsculatingPair {
    pub g_t: MetricMatrix,
    pub g_t_plus: MetricMatrix,
    /// `t / F(t)`.
    pub t_prime: Vec<f64>,
}

/// `g^t = g(x, t)` and the positive-definite `g^{t,+} = 2 t′_i t′_j − g^t_ij`.
pub fn osculating(spec: &MetricSpec, x: &[f64], t: &[f64]) -> Result<OsculatingPair> {
    if classify(spec, x, t) != CausalClass::Timelike {
        return Err(Error::NotTimelike);
    }
    let g_t = metric_at(spec, x, t)?;
    if g_t.is_degenerate() {
        return Err(Error::DegenerateMetric);
    }
    let f = norm_f(spec, x, t)?;
    let t_prime: Vec<f64> = t.iter().map(|v| v / f).collect();
    let lowered = g_t.lower(&t_prime);
    let n = spec.dim;
    let plus = DMatrix::from_fn(n, n, |i, j| 2.0 * lowered[i] * lowered[j] - g_t.get(i, j));
    let plus = (&plus + plus.transpose()) * 0.5;
    Ok(OsculatingPair { g_t, g_t_plus: MetricMatrix::new(plus), t_prime })
}

#[derive(Clone, Debug)]
struct Probe {
    lagrangian: f64,
    log_f: f64,
    /// Euclidean gradient of `log f`, i.e. `2C`.
    grad: Vec<f64>,
    residual: f64,
}

fn probe(spec: &MetricSpec, x: &[f64], t: &[f64]) -> Option<Probe> {
    if !spec.admits_everything() && !spec.is_admissible(x, t) {
        return None;
    }
    let p = cartan_unchecked(spec, x, t).ok()?;
    let grad: Vec<f64> = p.cartan.iter().map(|c| 2.0 * c).collect();
    let log_f = p.det.abs().ln();
    if !log_f.is_finite() || !p.lagrangian.is_finite() {
        return None;
    }
    Some(Probe { lagrangian: p.lagrangian, log_f, residual: norm(&p.cartan), grad })
}

fn tangential(grad: &[f64], t: &[f64]) -> Vec<f64> {
    let s = dot(grad, t);
    grad.iter().zip(t).map(|(g, ti)| g - s * ti).collect()
}

/// Moves along the great circle through `t` with tangent step `step`.
fn retract(t: &[f64], step: &[f64]) -> Vec<f64> {
    normalized(&t.iter().zip(step).map(|(a, b)| a + b).collect::<Vec<_>>())
}

#[derive(Debug)]
enum RunOutcome {
    Converged { t: Vec<f64>, log_f: f64, residual: f64 },
    LightCone { residual: f64 },
    Stalled { residual: f64 },
}

struct Run<'a> {
    spec: &'a MetricSpec,
    x: &'a [f64],
    tol: f64,
    eps_cone: f64,
    max_iters: usize,
}

const MAX_ANGLE_STEP: f64 = 0.3;

impl Run<'_> {
    fn near_cone(&self, p: &Probe) -> bool {
        p.lagrangian < self.eps_cone
    }

    /// Tangential Jacobian of `2C` by central differences, in the basis `b`.
    fn jacobian(&self, t: &[f64], b: &DMatrix<f64>) -> Option<DMatrix<f64>> {
        let m = b.ncols();
        let h = 1e-6;
        let mut jac = DMatrix::zeros(m, m);
        for c in 0..m {
            let dir: Vec<f64> = b.column(c).iter().copied().collect();
            let tp: Vec<f64> = t.iter().zip(&dir).map(|(a, d)| a + h * d).collect();
            let tm: Vec<f64> = t.iter().zip(&dir).map(|(a, d)| a - h * d).collect();
            let (gp, gm) = (probe(self.spec, self.x, &tp)?, probe(self.spec, self.x, &tm)?);
            for r in 0..m {
                let br: Vec<f64> = b.column(r).iter().copied().collect();
                jac[(r, c)] = (dot(&gp.grad, &br) - dot(&gm.grad, &br)) / (2.0 * h);
            }
        }
        Some((&jac + jac.transpose()) * 0.5)
    }

    fn descend(&self, seed: &[f64]) -> RunOutcome {
        let mut t = normalized(seed);
        let Some(mut p) = probe(self.spec, self.x, &t) else {
            return RunOutcome::Stalled { residual: f64::INFINITY };
        };
        let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
        let mut alpha = 0.1 / norm(&p.grad).max(1e-12);
        for _ in 0..self.max_iters {
            if p.residual <= self.tol {
                return RunOutcome::Converged { t, log_f: p.log_f, residual: p.residual };
            }
            let rg = tangential(&p.grad, &t);
            let rg_norm = norm(&rg);
            if let Some((t_old, rg_old)) = &prev {
                let s: Vec<f64> = t.iter().zip(t_old).map(|(a, b)| a - b).collect();
                let y: Vec<f64> = rg.iter().zip(rg_old).map(|(a, b)| a - b).collect();
                let sy = dot(&s, &y);
                alpha = if sy > 0.0 { dot(&s, &s) / sy } else { MAX_ANGLE_STEP / rg_norm };
            }
            alpha = alpha.min(MAX_ANGLE_STEP / rg_norm);
            let mut accepted = None;
            for _ in 0..50 {
                let step: Vec<f64> = rg.iter().map(|g| -alpha * g).collect();
                let trial = retract(&t, &step);
                if let Some(q) = probe(self.spec, self.x, &trial) {
                    if q.log_f <= p.log_f - 1e-4 * alpha * rg_norm * rg_norm {
                        accepted = Some((trial, q));
                        break;
                    }
                }
                alpha *= 0.5;
            }
            let Some((trial, q)) = accepted else {
                return RunOutcome::Stalled { residual: p.residual };
            };
            if self.near_cone(&q) {
                return RunOutcome::LightCone { residual: q.residual };
            }
            prev = Some((t, rg));
            t = trial;
            p = q;
        }
        RunOutcome::Stalled { residual: p.residual }
    }

    /// Damped Gauss-Newton on the tangential residual `2C = 0`; finds
    /// critical directions of any index.
    fn newton(&self, seed: &[f64]) -> RunOutcome {
        let mut t = normalized(seed);
        let Some(mut p) = probe(self.spec, self.x, &t) else {
            return RunOutcome::Stalled { residual: f64::INFINITY };
        };
        let mut mu: Option<f64> = None;
        for _ in 0..self.max_iters {
            if p.residual <= self.tol {
                return RunOutcome::Converged { t, log_f: p.log_f, residual: p.residual };
            }
            let b = tangent_basis(&t);
            let r = b.transpose() * DVector::from_column_slice(&p.grad);
            let Some(jac) = self.jacobian(&t, &b) else {
                return RunOutcome::Stalled { residual: p.residual };
            };
            let jtj = jac.transpose() * &jac;
            let jtr = jac.transpose() * &r;
            let m = jtj.nrows();
            let mut lambda = mu.unwrap_or_else(|| 1e-6 * jtj.diagonal().amax().max(1e-300));
            let mut accepted = None;
            for _ in 0..40 {
                let lhs = &jtj + DMatrix::<f64>::identity(m, m) * lambda;
                if let Some(d) = lhs.cholesky().map(|c| c.solve(&(-&jtr))) {
                    let mut step: Vec<f64> = (&b * &d).iter().copied().collect();
                    let len = norm(&step);
                    if len > MAX_ANGLE_STEP {
                        step.iter_mut().for_each(|s| *s *= MAX_ANGLE_STEP / len);
                    }
                    let trial = retract(&t, &step);
                    if let Some(q) = probe(self.spec, self.x, &trial) {
                        if q.residual < p.residual {
                            accepted = Some((trial, q));
                            break;
                        }
                    }
                }
                lambda *= 4.0;
            }
            let Some((trial, q)) = accepted else {
                return RunOutcome::Stalled { residual: p.residual };
            };
            mu = Some(lambda / 3.0);
            if self.near_cone(&q) {
                return RunOutcome::LightCone { residual: q.residual };
            }
            t = trial;
            p = q;
        }
        RunOutcome::Stalled { residual: p.residual }
    }

    fn solve(&self, seed: &[f64]) -> RunOutcome {
        match self.descend(seed) {
            done @ RunOutcome::Converged { .. } => done,
            first => match self.newton(seed) {
                done @ RunOutcome::Converged { .. } => done,
                second => {
                    let r1 = match first {
                        RunOutcome::LightCone { residual } | RunOutcome::Stalled { residual } => residual,
                        RunOutcome::Converged { .. } => unreachable!(),
                    };
                    match second {
                        RunOutcome::LightCone { residual } => RunOutcome::LightCone { residual: residual.min(r1) },
                        RunOutcome::Stalled { residual } => RunOutcome::Stalled { residual: residual.min(r1) },
                        RunOutcome::Converged { .. } => unreachable!(),
                    }
                }
            },
        }
    }
}

fn sample_seeds(spec: &MetricSpec, x: &[f64], opts: &SolverOptions) -> Result<Vec<Vec<f64>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.rng_seed);
    let n = spec.dim;
    let budget = 10_000 * opts.seeds.max(1);
    let mut out = Vec::with_capacity(opts.seeds);
    let mut attempts = 0;
    while out.len() < opts.seeds && attempts < budget {
        attempts += 1;
        let v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let v = normalized(&v);
        if classify(spec, x, &v) != CausalClass::Timelike {
            continue;
        }
        if matches!(spec.lagrangian_at(x, &v), Ok(l) if l >= opts.eps_cone) {
            out.push(v);
        }
    }
    if out.is_empty() && opts.seeds > 0 {
        return Err(Error::NoTimelikeSeed { attempts });
    }
    Ok(out)
}

/// Tangential Hessian of `f = |det g|` at a critical direction.
fn critical_kind(spec: &MetricSpec, x: &[f64], t: &[f64], f: f64) -> (CriticalKind, f64) {
    let run = Run { spec, x, tol: 0.0, eps_cone: 0.0, max_iters: 0 };
    let b = tangent_basis(t);
    let Some(jac) = run.jacobian(t, &b) else {
        return (CriticalKind::Flat, 0.0);
    };
    // at a critical point Hess f = f·∇(2C) restricted to the tangent space
    let ev = symmetric_eigenvalues(&(jac * f));
    let (lo, hi) = (ev[0], ev[ev.len() - 1]);
    let tol = 1e-8 * f.max(1.0);
    let kind = if lo >= -tol && hi <= tol {
        CriticalKind::Flat
    } else if lo >= -tol {
        CriticalKind::Minimum
    } else if hi <= tol {
        CriticalKind::Maximum
    } else {
        CriticalKind::Saddle
    };
    (kind, lo)
}

/// Timelike critical direction of `|det g(x, ·)|` with the smallest critical
/// value over all converged runs.
pub fn find_privileged(spec: &MetricSpec, x: &[f64], opts: &SolverOptions) -> Result<TimeOrientation> {
    if x.len() != spec.dim {
        return Err(Error::InvalidArgument(format!("point has dimension {}, expected {}", x.len(), spec.dim)));
    }
    let n = spec.dim;
    let mut seeds: Vec<Vec<f64>> = opts
        .initial
        .iter()
        .filter(|s| s.len() == n && classify(spec, x, s) == CausalClass::Timelike)
        .map(|s| normalized(s))
        .collect();
    match sample_seeds(spec, x, opts) {
        Ok(s) => seeds.extend(s),
        Err(e) if seeds.is_empty() => return Err(e),
        Err(_) => {}
    }
    if seeds.is_empty() {
        return Err(Error::NoTimelikeSeed { attempts: 0 });
    }
    let run = Run { spec, x, tol: opts.residual_tolerance(n), eps_cone: opts.eps_cone, max_iters: opts.max_iters };
    let outcomes: Vec<RunOutcome> = seeds.par_iter().map(|s| run.solve(s)).collect();

    let mut best_residual = f64::INFINITY;
    let mut candidates = Vec::new();
    for o in outcomes {
        match o {
            RunOutcome::Converged { t, log_f, residual } => {
                if classify(spec, x, &t) == CausalClass::Timelike {
                    candidates.push((t, log_f.exp(), residual));
                }
            }
            RunOutcome::LightCone { residual } | RunOutcome::Stalled { residual } => {
                best_residual = best_residual.min(residual);
            }
        }
    }
    if candidates.is_empty() {
        return Err(Error::NoConvergence { best_residual });
    }
    let v_min = candidates.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
    let tied: Vec<&(Vec<f64>, f64, f64)> =
        candidates.iter().filter(|c| c.1 - v_min <= opts.tol_value * v_min).collect();
    let chosen = tied[0];
    let multiple = tied.iter().any(|c| angle(&c.0, &chosen.0) > opts.tol_angle);
    let (kind, min_eig) = critical_kind(spec, x, &chosen.0, chosen.1);
    Ok(TimeOrientation {
        x: x.to_vec(),
        direction: chosen.0.clone(),
        critical_value: chosen.1,
        residual: chosen.2,
        status: if multiple { Status::MultipleMinima } else { Status::Converged },
        kind,
        hessian_min_eigenvalue: min_eig,
        converged_runs: candidates.len(),
    })
}

/// Orientation certified at a given direction without searching: valid when
/// `t` is itself a critical direction (e.g. any `t` for a Riemannian or
/// Berwald-Moor metric).
pub fn orientation_at(spec: &MetricSpec, x: &[f64], t: &[f64], opts: &SolverOptions) -> Result<TimeOrientation> {
    if classify(spec, x, t) != CausalClass::Timelike {
        return Err(Error::NotTimelike);
    }
    let t = normalized(t);
    let p = cartan_unchecked(spec, x, &t)?;
    let residual = norm(&p.cartan);
    let f = p.det.abs();
    let (kind, min_eig) = critical_kind(spec, x, &t, f);
    let converged = residual <= opts.residual_tolerance(spec.dim);
    Ok(TimeOrientation {
        x: x.to_vec(),
        direction: t,
        critical_value: f,
        residual,
        status: if converged { Status::Converged } else { Status::NotFound },
        kind,
        hessian_min_eigenvalue: min_eig,
        converged_runs: usize::from(converged),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct OrientationField {
    pub orientations: Vec<TimeOrientation>,
    /// Largest angle (radians) between a point's direction and that of the
    /// neighbour it was continued from.
    pub smoothness: f64,
}

/// Solves every grid point in order, seeding each from its nearest already
/// solved neighbour.
pub fn orientation_field(spec: &MetricSpec, grid: &[Vec<f64>], opts: &SolverOptions) -> Result<OrientationField> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty grid".into()));
    }
    let mut out: Vec<TimeOrientation> = Vec::with_capacity(grid.len());
    let mut smoothness = 0.0_f64;
    for (index, x) in grid.iter().enumerate() {
        let neighbour = out
            .iter()
            .enumerate()
            .map(|(k, o)| (k, squared_distance(&o.x, x)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(k, _)| k);
        let mut local = opts.clone();
        if let Some(k) = neighbour {
            local.initial.insert(0, out[k].direction.clone());
        }
        let o = find_privileged(spec, x, &local).map_err(|e| Error::AtPoint { index, source: Box::new(e) })?;
        if let Some(k) = neighbour {
            smoothness = smoothness.max(angle(&o.direction, &out[k].direction));
        }
        out.push(o);
    }
    Ok(OrientationField { orientations: out, smoothness })
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum()
}

/// Whether `g^{t,+}` has Riemannian signature.
pub fn is_positive_definite(pair: &OsculatingPair) -> bool {
    pair.g_t_plus.signature == Signature::riemannian(pair.g_t_plus.dim())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    fn oracle_det_via_lemma(pair: &OsculatingPair) -> f64 {
        // det(Q + CCᵀ) = (1 + CᵀQ⁻¹C) det Q with Q = g^t, C = i√2 t′ (lowered)
        let q = pair.g_t.entries();
        let c = DVector::from_vec(pair.g_t.lower(&pair.t_prime));
        let qinv = q.clone().try_inverse().unwrap();
        let quad = (c.transpose() * qinv * &c)[(0, 0)];
        let n = q.nrows() as i32;
        (-1f64).powi(n) * (1.0 - 2.0 * quad) * pair.g_t.det
    }

    #[test]
    fn minkowski_osculating_pair() {
        let spec = catalog::builtin("minkowski4").unwrap().spec;
        let pair = osculating(&spec, &[0.0; 4], &[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(pair.g_t_plus.rows(), DMatrix::<f64>::identity(4, 4).row_iter().map(|r| r.iter().copied().collect()).collect::<Vec<Vec<f64>>>());
        assert!((pair.g_t_plus.det - 1.0).abs() < 1e-15);
    }

    #[test]
    fn bogoslovsky_osculating_pair() {
        let spec = catalog::builtin("bogoslovsky-toy").unwrap().spec;
        let pair = osculating(&spec, &[0.0, 0.0], &[1.0, 0.0]).unwrap();
        let expect_plus = [[1.0, 0.0], [0.0, 0.5]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((pair.g_t_plus.get(i, j) - expect_plus[i][j]).abs() < 1e-15);
            }
        }
        assert!((pair.g_t_plus.det - 0.5).abs() < 1e-15);
        assert!(is_positive_definite(&pair));
    }

    #[test]
    fn berwald_moor_osculating_det() {
        let spec = catalog::builtin("berwald-moor").unwrap().spec;
        let pair = osculating(&spec, &[0.0; 4], &[1.0; 4]).unwrap();
        assert!((pair.g_t_plus.det - 2f64.powi(-8)).abs() < 1e-16);
        assert!((oracle_det_via_lemma(&pair) - 2f64.powi(-8)).abs() < 1e-16);
    }

    #[test]
    fn spacelike_direction_is_rejected() {
        let spec = catalog::builtin("minkowski4").unwrap().spec;
        assert!(matches!(osculating(&spec, &[0.0; 4], &[0.0, 1.0, 0.0, 0.0]), Err(Error::NotTimelike)));
    }

    #[test]
    fn riemannian_returns_first_seed_with_multiple_minima() {
        let spec = catalog::builtin("riemannian-diag").unwrap().spec;
        let opts = SolverOptions { initial: vec![vec![2.0, 0.1, 0.0, 0.0]], ..Default::default() };
        let o = find_privileged(&spec, &[0.0; 4], &opts).unwrap();
        assert_eq!(o.status, Status::MultipleMinima);
        assert!(angle(&o.direction, &[2.0, 0.1, 0.0, 0.0]) < 1e-15);
        assert!((o.critical_value - 4.0).abs() < 1e-12);
        assert_eq!(o.kind, CriticalKind::Flat);
    }

    #[test]
    fn berwald_moor_any_direction_is_privileged() {
        let spec = catalog::builtin("berwald-moor").unwrap().spec;
        let o = find_privileged(&spec, &[0.3, 0.0, -1.0, 2.0], &SolverOptions::default()).unwrap();
        assert_eq!(o.status, Status::MultipleMinima);
        assert!((o.critical_value - 2f64.powi(-8)).abs() < 1e-14);
    }

    #[test]
    fn bogoslovsky_privileged_direction() {
        let spec = catalog::builtin("bogoslovsky-toy").unwrap().spec;
        let o = find_privileged(&spec, &[0.0, 0.0], &SolverOptions::default()).unwrap();
        assert_eq!(o.status, Status::Converged);
        assert!(angle(&o.direction, &[1.0, 0.0]) < 1e-6, "{:?}", o.direction);
        assert!((o.critical_value - 0.5).abs() < 1e-12);
        assert_eq!(o.kind, CriticalKind::Minimum);
    }

    #[test]
    fn linearized_minimum_sits_on_the_unperturbed_null_cone() {
        // reference values from an independent JAX evaluation of |det g|
        let axis_value = 0.999_291_394_986_080_3;
        let null_value = 0.998_365_177_585_627_2;
        let spec = catalog::builtin("linearized-quartic").unwrap().spec;
        let o = find_privileged(&spec, &[0.5; 4], &SolverOptions::default()).unwrap();
        assert!(o.status.is_success());
        assert!(o.residual <= 4e-8);
        assert!((o.critical_value - null_value).abs() < 1e-9, "{}", o.critical_value);
        let d = &o.direction;
        assert!((d[0].abs() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-5, "{d:?}");
        let axis = orientation_at(&spec, &[0.5; 4], &[1.0, 0.0, 0.0, 0.0], &SolverOptions::default()).unwrap();
        assert_eq!(axis.status, Status::Converged);
        assert!((axis.critical_value - axis_value).abs() < 1e-9);
        assert_eq!(axis.kind, CriticalKind::Maximum);
    }

    #[test]
    fn seed_scaling_does_not_change_result() {
        let spec = catalog::builtin("bogoslovsky-toy").unwrap().spec;
        let a = SolverOptions { seeds: 0, initial: vec![vec![1.0, 0.3]], ..Default::default() };
        let b = SolverOptions { seeds: 0, initial: vec![vec![7.0, 2.1]], ..Default::default() };
        let (oa, ob) = (find_privileged(&spec, &[0.0, 0.0], &a).unwrap(), find_privileged(&spec, &[0.0, 0.0], &b).unwrap());
        assert!(angle(&oa.direction, &ob.direction) < 1e-12);
    }

    #[test]
    fn no_timelike_seed() {
        let spec = catalog::builtin("euclidean-n").unwrap().spec;
        let spacelike = MetricSpec::new("neg", 2, "-(y0^2 + y1^2)", None).unwrap();
        assert!(matches!(
            find_privileged(&spacelike, &[0.0, 0.0], &SolverOptions { seeds: 4, ..Default::default() }),
            Err(Error::NoTimelikeSeed { .. })
        ));
        // every direction of a positive-definite metric is "timelike" here
        assert!(find_privileged(&spec, &[0.0, 0.0], &SolverOptions { seeds: 2, ..Default::default() }).is_ok());
    }

    #[test]
    fn field_along_a_line() {
        let spec = catalog::builtin("bogoslovsky-toy").unwrap().spec;
        let grid: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64 / 9.0, 0.0]).collect();
        let field = orientation_field(&spec, &grid, &SolverOptions { seeds: 4, ..Default::default() }).unwrap();
        for o in &field.orientations {
            assert!(angle(&o.direction, &[1.0, 0.0]) < 1e-6);
        }
        assert!(field.smoothness < 1e-6);
    }

    #[test]
    fn minkowski_field_is_constant() {
        let spec = catalog::builtin("minkowski4").unwrap().spec;
        let mut grid = Vec::new();
        for a in 0..5 {
            for b in 0..5 {
                for c in 0..5 {
                    for d in 0..5 {
                        grid.push(vec![a as f64, b as f64, c as f64, d as f64]);
                    }
                }
            }
        }
        let field = orientation_field(&spec, &grid, &SolverOptions { seeds: 2, ..Default::default() }).unwrap();
        assert_eq!(field.smoothness, 0.0);
    }
}
