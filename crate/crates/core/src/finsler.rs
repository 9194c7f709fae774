//! Metric tensor, Finslerian norm, causal character and Cartan form.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::autodiff::{hessian_y, metric_and_derivative};
use crate::error::{Error, Result};
use crate::linalg::{determinant, norm, symmetric_eigenvalues, to_matrix, to_rows};
use crate::metric_spec::MetricSpec;

/// Counts of positive, negative and (numerically) zero eigenvalues.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Signature {
    pub positives: usize,
    pub negatives: usize,
    pub zeros: usize,
}

impl Signature {
    pub fn lorentzian(n: usize) -> Self {
        Signature { positives: 1, negatives: n - 1, zeros: 0 }
    }

    pub fn riemannian(n: usize) -> Self {
        Signature { positives: n, negatives: 0, zeros: 0 }
    }

    /// Classifies eigenvalues; those within `1e-10·max|λ|` count as zero.
    pub fn of_eigenvalues(ev: &[f64]) -> Self {
        let scale = ev.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let tol = 1e-10 * scale;
        let mut s = Signature { positives: 0, negatives: 0, zeros: 0 };
        for &v in ev {
            if v.abs() <= tol || scale == 0.0 {
                s.zeros += 1;
            } else if v > 0.0 {
                s.positives += 1;
            } else {
                s.negatives += 1;
            }
        }
        s
    }
}

/// Symmetric metric matrix at one point together with its signature and
/// determinant.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricMatrix {
    entries: DMatrix<f64>,
    pub signature: Signature,
    pub det: f64,
    pub eigenvalues: Vec<f64>,
}

impl MetricMatrix {
    pub fn new(entries: DMatrix<f64>) -> Self {
        assert!(entries.is_square());
        let det = determinant(&entries);
        let eigenvalues = symmetric_eigenvalues(&entries);
        let signature = Signature::of_eigenvalues(&eigenvalues);
        MetricMatrix { entries, signature, det, eigenvalues }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        Self::new(to_matrix(rows))
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        to_rows(&self.entries)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    pub fn is_degenerate(&self) -> bool {
        self.signature.zeros > 0
    }

    /// Relative gap between the LU determinant and the eigenvalue product.
    pub fn det_consistency(&self) -> f64 {
        let prod: f64 = self.eigenvalues.iter().product();
        (prod - self.det).abs() / self.det.abs().max(f64::MIN_POSITIVE)
    }

    /// `g(v, w)`.
    pub fn apply(&self, v: &[f64], w: &[f64]) -> f64 {
        let n = self.dim();
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += self.entries[(i, j)] * v[i] * w[j];
            }
        }
        s
    }

    /// Index lowering `v_i = g_ij v^j`.
    pub fn lower(&self, v: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n).map(|i| (0..n).map(|j| self.entries[(i, j)] * v[j]).sum()).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CausalClass {
    Timelike,
    Lightlike,
    Spacelike,
    Inadmissible,
}

fn check_input(spec: &MetricSpec, x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != spec.dim || y.len() != spec.dim {
        return Err(Error::InvalidArgument(format!(
            "expected point and direction of dimension {}, got {} and {}",
            spec.dim,
            x.len(),
            y.len()
        )));
    }
    if y.iter().all(|v| *v == 0.0) || !spec.is_admissible(x, y) {
        return Err(Error::InadmissibleInput);
    }
    Ok(())
}

/// `g_ij(x, y)` as a bare matrix, without admissibility checks or
/// eigendecomposition. Used in quadrature inner loops.
pub fn metric_tensor(spec: &MetricSpec, x: &[f64], y: &[f64]) -> Result<DMatrix<f64>> {
    let h = hessian_y(&spec.lagrangian, x, y)?;
    let n = y.len();
    Ok(DMatrix::from_fn(n, n, |i, j| 0.5 * h.hess[i][j]))
}

/// `|det g(x, y)|`, or NaN where the metric is undefined.
pub fn abs_det_or_nan(spec: &MetricSpec, x: &[f64], y: &[f64]) -> f64 {
    if !spec.admits_everything() && !spec.is_admissible(x, y) {
        return f64::NAN;
    }
    match metric_tensor(spec, x, y) {
        Ok(g) => determinant(&g).abs(),
        Err(_) => f64::NAN,
    }
}

/// Metric tensor at `(x, y)`. A degenerate result is returned, not raised;
/// check [`MetricMatrix::is_degenerate`].
pub fn metric_at(spec: &MetricSpec, x: &[f64], y: &[f64]) -> Result<MetricMatrix> {
    check_input(spec, x, y)?;
    Ok(MetricMatrix::new(metric_tensor(spec, x, y)?))
}

/// `F = √|L|`.
pub fn norm_f(spec: &MetricSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    check_input(spec, x, y)?;
    Ok(spec.lagrangian.eval_checked::<f64>(x, y)?.abs().sqrt())
}

/// Threshold below which `|L|` counts as lightlike; scales with `‖y‖²`.
pub fn lightlike_tolerance(y: &[f64]) -> f64 {
    let n2 = norm(y).powi(2);
    1e-12 * n2.max(1.0)
}

pub fn classify(spec: &MetricSpec, x: &[f64], y: &[f64]) -> CausalClass {
    if check_input(spec, x, y).is_err() {
        return CausalClass::Inadmissible;
    }
    let Ok(l) = spec.lagrangian.eval_checked::<f64>(x, y) else {
        return CausalClass::Inadmissible;
    };
    let tau = lightlike_tolerance(y);
    if l > tau {
        CausalClass::Timelike
    } else if l < -tau {
        CausalClass::Spacelike
    } else {
        CausalClass::Lightlike
    }
}

/// Cartan form `C_i = ½ g^{jk} ∂g_ij/∂y^k`.
pub fn cartan_form(spec: &MetricSpec, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    check_input(spec, x, y)?;
    Ok(cartan_unchecked(spec, x, y)?.cartan)
}

pub(crate) struct CartanProbe {
    pub lagrangian: f64,
    pub det: f64,
    pub cartan: Vec<f64>,
}

pub(crate) fn cartan_unchecked(spec: &MetricSpec, x: &[f64], y: &[f64]) -> Result<CartanProbe> {
    let (l, g, dg) = metric_and_derivative(&spec.lagrangian, x, y)?;
    let gm = to_matrix(&g);
    let det = determinant(&gm);
    let scale = gm.amax();
    if scale == 0.0 || !(det.abs() > 1e-14 * scale.powi(y.len() as i32)) {
        return Err(Error::DegenerateMetric);
    }
    let inv = gm.try_inverse().ok_or(Error::DegenerateMetric)?;
    let n = y.len();
    let cartan = (0..n)
        .map(|i| {
            let mut s = 0.0;
            for j in 0..n {
                for k in 0..n {
                    s += inv[(j, k)] * dg[i][j][k];
                }
            }
            0.5 * s
        })
        .collect();
    Ok(CartanProbe { lagrangian: l, det, cartan })
}

/// Largest relative gap between `∂√|det g|/∂y^i` (central differences) and
/// `C_i √|det g|`. Diagnostic for the Cartan/determinant identity.
pub fn cartan_det_identity_gap(spec: &MetricSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    let c = cartan_form(spec, x, y)?;
    let sqrt_det = |v: &[f64]| -> Result<f64> { Ok(determinant(&metric_tensor(spec, x, v)?).abs().sqrt()) };
    let s0 = sqrt_det(y)?;
    let h = 1e-6 * norm(y);
    let mut worst = 0.0_f64;
    let scale = c.iter().fold(1.0 / norm(y), |m, v| m.max(v.abs())) * s0;
    for i in 0..y.len() {
        let mut yp = y.to_vec();
        let mut ym = y.to_vec();
        yp[i] += h;
        ym[i] -= h;
        let fd = (sqrt_det(&yp)? - sqrt_det(&ym)?) / (2.0 * h);
        worst = worst.max((fd - c[i] * s0).abs() / scale);
    }
    Ok(worst)
}
