//! Action integrals `S_D(q) = (1/Vol(𝔹)) ∫_D ∫_{E_x^{t₀}} 𝔏(x, y)·w(x, y) dⁿy dⁿx`
//! of direction-dependent densities, with the weight `w = |det g(x, y)|` or
//! its fallback `|det g(x, t₀)|`.
//!
//! Densities are expressions in `x`, `y`, the symbol `L` (the metric's
//! Lagrangian) and any field names defined as closed-form expressions.

use std::collections::BTreeMap;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{parse_with, Expr, ParseOptions};
use crate::finsler::abs_det_or_nan;
use crate::linalg::pairwise_sum;
use crate::metric_spec::MetricSpec;
use crate::orientation::{orientation_field, osculating};
use crate::quadrature::{ball_volume, ellipsoid_map, evaluate_nodes, gauss_jacobi, QuadratureRule};
use crate::volume::{ht_integral, BoxDomain, VolumeOptions};

/// Symbol standing for the metric's Lagrangian in densities and fields.
pub const LAGRANGIAN_SYMBOL: &str = "L";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Weighting {
    DetG,
    /// `|det g(x, t₀)|` in place of `|det g(x, y)|`, for metrics whose
    /// determinant does not extend over the ellipsoid.
    DetGt0Fallback,
}

impl FromStr for Weighting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "detg" => Ok(Weighting::DetG),
            "fallback" => Ok(Weighting::DetGt0Fallback),
            other => Err(Error::InvalidArgument(format!("unknown weighting `{other}` (expected detg or fallback)"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ActionSpec {
    pub metric: MetricSpec,
    /// Density with fields and `L` already substituted.
    pub density: Expr,
    pub domain: BoxDomain,
    pub weighting: Weighting,
}

impl ActionSpec {
    /// Parses `density` and the `fields` (name, expression) against the
    /// metric. Fields may use `L` and earlier fields.
    pub fn new(
        metric: MetricSpec,
        density: &str,
        fields: &[(String, String)],
        domain: BoxDomain,
        weighting: Weighting,
    ) -> Result<Self> {
        if domain.dim() != metric.dim {
            return Err(Error::InvalidArgument(format!(
                "domain has dimension {}, expected {}",
                domain.dim(),
                metric.dim
            )));
        }
        let mut known: BTreeMap<String, Expr> = BTreeMap::new();
        known.insert(LAGRANGIAN_SYMBOL.into(), metric.lagrangian.clone());
        for (name, src) in fields {
            if known.contains_key(name) || !is_identifier(name) {
                return Err(Error::InvalidArgument(format!("invalid or duplicate field name `{name}`")));
            }
            let e = parse_field(src, &known, metric.dim, &format!("field {name}"))?;
            known.insert(name.clone(), e);
        }
        let density = parse_field(density, &known, metric.dim, "density")?;
        Ok(ActionSpec { metric, density, domain, weighting })
    }
}

fn is_identifier(s: &str) -> bool {
    let mut c = s.chars();
    matches!(c.next(), Some(f) if f.is_ascii_alphabetic() || f == '_')
        && c.all(|ch| ch.is_ascii_alphanumeric() || ch == '_')
        && crate::expr::Func::from_name(s).is_none()
        && !is_coordinate(s)
}

fn is_coordinate(s: &str) -> bool {
    (s.starts_with('x') || s.starts_with('y')) && s.len() > 1 && s[1..].bytes().all(|b| b.is_ascii_digit())
}

fn parse_field(src: &str, known: &BTreeMap<String, Expr>, dim: usize, what: &str) -> Result<Expr> {
    let opts = ParseOptions { dim: Some(dim), symbols: known.keys().cloned().collect() };
    let e = parse_with(src, &opts).map_err(|source| Error::Parse { field: what.into(), source })?;
    Ok(e.substitute(&|s| known.get(s).cloned()))
}

#[derive(Clone, Debug, Serialize)]
pub struct ActionCell {
    pub center: Vec<f64>,
    /// `(1/Vol(𝔹)) ∫_E 𝔏·w dⁿy` at the cell centre.
    pub density: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ActionValue {
    pub value: f64,
    pub cells: Vec<ActionCell>,
    pub max_residual: f64,
    pub singular_nodes: usize,
}

/// Radial Gauss rule for `r^{n-1} dr` on `[0, 1]`.
fn radial_rule(n: usize, m: usize) -> (Vec<f64>, Vec<f64>) {
    let (xs, ws) = gauss_jacobi(m, 0.0, n as f64 - 1.0);
    let scale = 2f64.powi(-(n as i32));
    (xs.iter().map(|x| 0.5 * (1.0 + x)).collect(), ws.iter().map(|w| scale * w).collect())
}

fn inner_integral(
    a: &ActionSpec,
    x: &[f64],
    t0: &[f64],
    sphere: &QuadratureRule,
    radial: &(Vec<f64>, Vec<f64>),
    opts: &VolumeOptions,
) -> Result<(f64, usize)> {
    let spec = &a.metric;
    let pair = osculating(spec, x, t0)?;
    let map = ellipsoid_map(&pair.g_t_plus)?;
    let (weights, singular) = match a.weighting {
        Weighting::DetG => {
            ht_integral(spec, x, &map, opts)?;
            // |det g| is 0-homogeneous: one value per sphere direction serves every radius
            let nv = evaluate_nodes(&|y: &[f64]| abs_det_or_nan(spec, x, y), &map, sphere, &opts.policy)
                .map_err(|e| match e {
                    Error::SingularNodes { count, .. } => {
                        Error::DetNotProlongable { singular_nodes: count, discrepancy: f64::NAN }
                    }
                    other => other,
                })?;
            let kept: f64 = pairwise_sum(
                &nv.values.iter().zip(&sphere.weights).filter(|(v, _)| v.is_some()).map(|(_, w)| *w).collect::<Vec<_>>(),
            );
            let rescale = sphere.weight_sum() / kept;
            let w: Vec<Option<f64>> = nv
                .values
                .iter()
                .zip(&sphere.weights)
                .map(|(v, w)| v.map(|d| d * w * rescale))
                .collect();
            (w, nv.perturbed + nv.skipped)
        }
        Weighting::DetGt0Fallback => {
            let d = pair.g_t.det.abs();
            (sphere.weights.iter().map(|w| Some(d * w)).collect(), 0)
        }
    };
    let (rs, rw) = radial;
    let terms: Result<Vec<f64>> = sphere
        .nodes
        .par_iter()
        .zip(&weights)
        .map(|(u, w)| {
            let Some(w) = w else { return Ok(0.0) };
            let dir = map.apply(u);
            let mut acc = Vec::with_capacity(rs.len());
            for (r, wr) in rs.iter().zip(rw) {
                let y: Vec<f64> = dir.iter().map(|v| r * v).collect();
                acc.push(wr * a.density.eval_checked::<f64>(x, &y)?);
            }
            Ok(w * pairwise_sum(&acc))
        })
        .collect();
    let value = map.jac * pairwise_sum(&terms?) / ball_volume(spec.dim);
    Ok((value, singular))
}

/// Midpoint rule over the box with `res` cells per axis; the inner integral
/// uses the spherical-radial rule from `opts.quad` on the osculating
/// ellipsoid of a privileged orientation.
pub fn evaluate_action(a: &ActionSpec, res: &[usize], opts: &VolumeOptions) -> Result<ActionValue> {
    let n = a.metric.dim;
    let centers = a.domain.midpoints(res)?;
    let cell_volume = a.domain.cell_volume(res);
    let field = orientation_field(&a.metric, &centers, &opts.solver)?;
    let quad = opts.quad_for(n);
    let sphere = quad.sphere(n, false)?;
    let radial = radial_rule(n, quad.radial);
    let mut cells = Vec::with_capacity(centers.len());
    let mut singular = 0;
    for (index, t0) in field.orientations.iter().enumerate() {
        let (density, s) = inner_integral(a, &t0.x, &t0.direction, &sphere, &radial, opts)
            .map_err(|e| Error::AtPoint { index, source: Box::new(e) })?;
        singular += s;
        cells.push(ActionCell { center: t0.x.clone(), density });
    }
    let terms: Vec<f64> = cells.iter().map(|c| c.density * cell_volume).collect();
    Ok(ActionValue {
        value: pairwise_sum(&terms),
        cells,
        max_residual: field.orientations.iter().map(|o| o.residual).fold(0.0, f64::max),
        singular_nodes: singular,
    })
}
