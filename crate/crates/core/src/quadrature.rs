//! Product quadrature on the Euclidean unit sphere and ball, and the affine
//! map from the unit ball onto the ellipsoid `{g⁺(y, y) ≤ 1}`.
//!
//! Sphere rules are built recursively from `S^{n-1} ∋ u = (c, √(1-c²)·v)`
//! with `v ∈ S^{n-2}`, so each polar angle is a Gauss-Jacobi rule in
//! `c = cos θ` for the weight `(1-c²)^{(n-3)/2}` and the last angle is a
//! trapezoid rule. The radial factor of ball rules is Gauss-Jacobi for the
//! weight `r^{n-1}` on `[0, 1]`.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::Serialize;
use statrs::function::gamma::gamma;

use crate::autodiff::MAX_DIM;
use crate::error::{Error, Result};
use crate::finsler::MetricMatrix;
use crate::linalg::{normalized, pairwise_sum, to_rows};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum RuleKind {
    Sphere,
    Ball,
}

#[derive(Clone, Debug)]
pub struct QuadratureRule {
    pub dim: usize,
    pub nodes: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub kind: RuleKind,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn weight_sum(&self) -> f64 {
        pairwise_sum(&self.weights)
    }

    /// `Σ w_i f(node_i)`, evaluated sequentially.
    pub fn integrate(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        let terms: Vec<f64> = self.nodes.iter().zip(&self.weights).map(|(u, w)| w * f(u)).collect();
        pairwise_sum(&terms)
    }
}

/// Area of `S^{n-1}`.
pub fn sphere_area(n: usize) -> f64 {
    2.0 * std::f64::consts::PI.powf(n as f64 / 2.0) / gamma(n as f64 / 2.0)
}

/// Volume of the unit ball `𝔹 ⊂ ℝⁿ`.
pub fn ball_volume(n: usize) -> f64 {
    std::f64::consts::PI.powf(n as f64 / 2.0) / gamma(n as f64 / 2.0 + 1.0)
}

/// Gauss-Jacobi nodes and weights on `[-1, 1]` for `(1-s)^α (1+s)^β`,
/// by the Golub-Welsch eigenvalue method.
pub fn gauss_jacobi(m: usize, alpha: f64, beta: f64) -> (Vec<f64>, Vec<f64>) {
    assert!(m >= 1 && alpha > -1.0 && beta > -1.0);
    let ab = alpha + beta;
    let mut jm = DMatrix::<f64>::zeros(m, m);
    for k in 0..m {
        let kf = k as f64;
        jm[(k, k)] = if k == 0 {
            (beta - alpha) / (ab + 2.0)
        } else {
            (beta * beta - alpha * alpha) / ((2.0 * kf + ab) * (2.0 * kf + ab + 2.0))
        };
        if k + 1 < m {
            let j = kf + 1.0;
            let s = 2.0 * j + ab;
            let b2 = if j == 1.0 {
                // the (j+α+β)/(2j+α+β-1) factor is 1 here; avoids 0/0 when α+β = -1
                4.0 * (1.0 + alpha) * (1.0 + beta) / (s * s * (s + 1.0))
            } else {
                4.0 * j * (j + alpha) * (j + beta) * (j + ab) / (s * s * (s + 1.0) * (s - 1.0))
            };
            jm[(k, k + 1)] = b2.sqrt();
            jm[(k + 1, k)] = b2.sqrt();
        }
    }
    let mu0 = 2f64.powf(ab + 1.0) * gamma(alpha + 1.0) * gamma(beta + 1.0) / gamma(ab + 2.0);
    let eig = SymmetricEigen::new(jm);
    let mut pairs: Vec<(f64, f64)> = (0..m)
        .map(|i| (eig.eigenvalues[i], mu0 * eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    // symmetric weights give exactly symmetric nodes
    if alpha == beta {
        for i in 0..m / 2 {
            let j = m - 1 - i;
            let x = 0.5 * (pairs[j].0 - pairs[i].0);
            let w = 0.5 * (pairs[i].1 + pairs[j].1);
            pairs[i] = (-x, w);
            pairs[j] = (x, w);
        }
        if m % 2 == 1 {
            pairs[m / 2].0 = 0.0;
        }
    }
    pairs.into_iter().unzip()
}

fn check_dim(n: usize) -> Result<()> {
    if n == 0 || n > MAX_DIM {
        return Err(Error::UnsupportedDimension(n));
    }
    Ok(())
}

/// Product rule on `S^{n-1}` with `polar` Gauss points per polar angle and
/// `periodic` equispaced points in the last angle (offset by half a step
/// when `shift` is set).
pub fn sphere(n: usize, polar: usize, periodic: usize, shift: bool) -> Result<QuadratureRule> {
    check_dim(n)?;
    if polar == 0 || periodic == 0 {
        return Err(Error::InvalidArgument("quadrature node counts must be positive".into()));
    }
    let (mut nodes, mut weights) = if n == 1 {
        (vec![vec![-1.0], vec![1.0]], vec![1.0, 1.0])
    } else {
        let h = 2.0 * std::f64::consts::PI / periodic as f64;
        let off = if shift { 0.5 } else { 0.0 };
        let nodes = (0..periodic)
            .map(|k| {
                let phi = h * (k as f64 + off);
                vec![phi.cos(), phi.sin()]
            })
            .collect();
        (nodes, vec![h; periodic])
    };
    for d in 3..=n {
        let a = (d as f64 - 3.0) / 2.0;
        let (cs, ws) = gauss_jacobi(polar, a, a);
        let mut next_nodes = Vec::with_capacity(cs.len() * nodes.len());
        let mut next_weights = Vec::with_capacity(next_nodes.capacity());
        for (c, wc) in cs.iter().zip(&ws) {
            let s = (1.0 - c * c).sqrt();
            for (v, wv) in nodes.iter().zip(&weights) {
                let mut u = Vec::with_capacity(d);
                u.push(*c);
                u.extend(v.iter().map(|vi| s * vi));
                next_nodes.push(u);
                next_weights.push(wc * wv);
            }
        }
        nodes = next_nodes;
        weights = next_weights;
    }
    Ok(QuadratureRule { dim: n, nodes, weights, kind: RuleKind::Sphere })
}

/// Spherical-radial product rule on `𝔹 ⊂ ℝⁿ`.
pub fn ball(n: usize, radial: usize, polar: usize, periodic: usize) -> Result<QuadratureRule> {
    if radial == 0 {
        return Err(Error::InvalidArgument("quadrature node counts must be positive".into()));
    }
    let s = sphere(n, polar, periodic, false)?;
    let (xs, ws) = gauss_jacobi(radial, 0.0, n as f64 - 1.0);
    let scale = 2f64.powi(-(n as i32));
    let mut nodes = Vec::with_capacity(xs.len() * s.len());
    let mut weights = Vec::with_capacity(nodes.capacity());
    for (x, w) in xs.iter().zip(&ws) {
        let r = 0.5 * (1.0 + x);
        for (u, wu) in s.nodes.iter().zip(&s.weights) {
            nodes.push(u.iter().map(|ui| r * ui).collect());
            weights.push(scale * w * wu);
        }
    }
    Ok(QuadratureRule { dim: n, nodes, weights, kind: RuleKind::Ball })
}

/// Ball rule exact for polynomials of total degree `≤ order`.
pub fn ball_rule(n: usize, order: usize) -> Result<QuadratureRule> {
    if order == 0 {
        return Err(Error::InvalidArgument("quadrature order must be at least 1".into()));
    }
    let m = order / 2 + 1;
    ball(n, m, m, order + 1)
}

/// Sphere rule exact for polynomials of total degree `≤ order`.
pub fn sphere_rule(n: usize, order: usize) -> Result<QuadratureRule> {
    if order == 0 {
        return Err(Error::InvalidArgument("quadrature order must be at least 1".into()));
    }
    sphere(n, order / 2 + 1, order + 1, false)
}

/// Node counts per direction.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct QuadOptions {
    pub radial: usize,
    /// Gauss points per polar angle; the periodic angle gets twice as many.
    pub angular: usize,
}

impl QuadOptions {
    pub fn defaults(n: usize) -> Self {
        match n {
            0..=4 => QuadOptions { radial: 16, angular: 32 },
            5..=6 => QuadOptions { radial: 8, angular: 16 },
            _ => QuadOptions { radial: 4, angular: 8 },
        }
    }

    pub fn sphere(&self, n: usize, shift: bool) -> Result<QuadratureRule> {
        sphere(n, self.angular, 2 * self.angular, shift)
    }

    pub fn ball(&self, n: usize) -> Result<QuadratureRule> {
        ball(n, self.radial, self.angular, 2 * self.angular)
    }
}

/// `u ↦ A·u` with `A` lower triangular and `A·Aᵀ = (g⁺)⁻¹`.
#[derive(Clone, Debug, Serialize)]
pub struct EllipsoidMap {
    pub factor: Vec<Vec<f64>>,
    /// `det A = (det g⁺)^{-1/2}`.
    pub jac: f64,
}

impl EllipsoidMap {
    pub fn identity(n: usize) -> Self {
        EllipsoidMap { factor: to_rows(&DMatrix::identity(n, n)), jac: 1.0 }
    }

    pub fn dim(&self) -> usize {
        self.factor.len()
    }

    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        self.factor.iter().enumerate().map(|(i, row)| (0..=i).map(|j| row[j] * u[j]).sum()).collect()
    }

    /// `Vol(E) = jac · Vol(𝔹)`.
    pub fn volume(&self) -> f64 {
        self.jac * ball_volume(self.dim())
    }
}

pub fn ellipsoid_map(g_plus: &MetricMatrix) -> Result<EllipsoidMap> {
    let g = g_plus.entries();
    let inv = g.clone().cholesky().ok_or(Error::NotPositiveDefinite)?.inverse();
    let inv = (&inv + inv.transpose()) * 0.5;
    let l = inv.cholesky().ok_or(Error::NotPositiveDefinite)?.l();
    let jac = l.diagonal().iter().product::<f64>();
    if !(jac > 0.0 && jac.is_finite()) {
        return Err(Error::NotPositiveDefinite);
    }
    Ok(EllipsoidMap { factor: to_rows(&l), jac })
}

/// What to do when the integrand is not finite at a node.
#[derive(Clone, Copy, Debug)]
pub struct NodePolicy {
    pub delta: f64,
    pub retries: usize,
    /// Largest tolerated fraction of skipped nodes.
    pub max_skip_fraction: f64,
}

impl Default for NodePolicy {
    fn default() -> Self {
        NodePolicy { delta: 1e-9, retries: 4, max_skip_fraction: 0.01 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Integral {
    pub value: f64,
    /// Nodes that needed a perturbation to evaluate.
    pub perturbed_nodes: usize,
    /// Nodes dropped after all retries.
    pub skipped_nodes: usize,
    pub total_nodes: usize,
    /// Extremes of the integrand over the evaluated nodes.
    pub min_value: f64,
    pub max_value: f64,
}

impl Integral {
    pub fn singular_nodes(&self) -> usize {
        self.perturbed_nodes + self.skipped_nodes
    }
}

enum NodeValue {
    Clean(f64),
    Perturbed(f64),
    Skipped,
}

fn eval_node(f: &(dyn Fn(&[f64]) -> f64 + Sync), map: &EllipsoidMap, u: &[f64], policy: &NodePolicy) -> NodeValue {
    let v = f(&map.apply(u));
    if v.is_finite() {
        return NodeValue::Clean(v);
    }
    let n = u.len();
    for r in 0..policy.retries {
        let mut p = u.to_vec();
        p[r % n] += policy.delta;
        let p = if u.len() > 1 { normalized(&p) } else { p };
        let v = f(&map.apply(&p));
        if v.is_finite() {
            return NodeValue::Perturbed(v);
        }
    }
    NodeValue::Skipped
}

/// Integrand values at the mapped nodes of `rule`; `None` marks a node
/// skipped after all retries.
pub(crate) struct NodeValues {
    pub values: Vec<Option<f64>>,
    pub perturbed: usize,
    pub skipped: usize,
}

pub(crate) fn evaluate_nodes(
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    map: &EllipsoidMap,
    rule: &QuadratureRule,
    policy: &NodePolicy,
) -> Result<NodeValues> {
    let raw: Vec<NodeValue> = rule.nodes.par_iter().map(|u| eval_node(f, map, u, policy)).collect();
    let (mut perturbed, mut skipped) = (0, 0);
    let values: Vec<Option<f64>> = raw
        .into_iter()
        .map(|v| match v {
            NodeValue::Clean(x) => Some(x),
            NodeValue::Perturbed(x) => {
                perturbed += 1;
                Some(x)
            }
            NodeValue::Skipped => {
                skipped += 1;
                None
            }
        })
        .collect();
    let total = rule.len();
    if skipped as f64 > policy.max_skip_fraction * total as f64 || skipped == total {
        return Err(Error::SingularNodes { count: skipped, total });
    }
    Ok(NodeValues { values, perturbed, skipped })
}

impl NodeValues {
    /// `Σ w_i f_i` over kept nodes, rescaled to the full weight sum.
    pub fn weighted_sum(&self, weights: &[f64]) -> f64 {
        let mut terms = Vec::with_capacity(weights.len());
        let mut kept = Vec::with_capacity(weights.len());
        for (v, w) in self.values.iter().zip(weights) {
            if let Some(x) = v {
                terms.push(w * x);
                kept.push(*w);
            }
        }
        let sum = pairwise_sum(&terms);
        if self.skipped > 0 {
            sum * pairwise_sum(weights) / pairwise_sum(&kept)
        } else {
            sum
        }
    }
}

/// `∫_E f dⁿy` over the ellipsoid image of `𝔹` for `f` positively
/// `k`-homogeneous, as `jac/(n+k) · ∫_{S^{n-1}} f(A·u) dλ(u)`.
pub fn integrate_homogeneous(
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    k: f64,
    map: &EllipsoidMap,
    rule: &QuadratureRule,
    policy: &NodePolicy,
) -> Result<Integral> {
    if rule.kind != RuleKind::Sphere || rule.dim != map.dim() {
        return Err(Error::InvalidArgument("integrate_homogeneous needs a sphere rule of matching dimension".into()));
    }
    let n = rule.dim as f64;
    if n + k <= 0.0 {
        return Err(Error::InvalidArgument(format!("homogeneity degree {k} too small")));
    }
    let nv = evaluate_nodes(f, map, rule, policy)?;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for x in nv.values.iter().flatten() {
        lo = lo.min(*x);
        hi = hi.max(*x);
    }
    Ok(Integral {
        value: map.jac * nv.weighted_sum(&rule.weights) / (n + k),
        perturbed_nodes: nv.perturbed,
        skipped_nodes: nv.skipped,
        total_nodes: rule.len(),
        min_value: lo,
        max_value: hi,
    })
}
