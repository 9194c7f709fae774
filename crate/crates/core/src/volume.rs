//! Volume densities: the minimal Riemannian (Busemann-Hausdorff type) and
//! Holmes-Thompson densities of a Lorentz-Finsler structure, and the
//! classical ones of a positive-definite Finsler structure.

use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::finsler::{abs_det_or_nan, metric_at, metric_tensor, Signature};
use crate::linalg::{determinant, normalized, pairwise_sum};
use crate::metric_spec::MetricSpec;
use crate::orientation::{find_privileged, orientation_field, osculating, SolverOptions, TimeOrientation};
use crate::quadrature::{ball_volume, ellipsoid_map, integrate_homogeneous, EllipsoidMap, Integral, NodePolicy, QuadOptions};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Form {
    MinimalRiemannian,
    HolmesThompson,
    ClassicalBH,
    ClassicalHT,
}

impl Form {
    pub fn is_classical(self) -> bool {
        matches!(self, Form::ClassicalBH | Form::ClassicalHT)
    }

    pub fn cli_name(self) -> &'static str {
        match self {
            Form::MinimalRiemannian => "bh",
            Form::HolmesThompson => "ht",
            Form::ClassicalBH => "classical-bh",
            Form::ClassicalHT => "classical-ht",
        }
    }
}

impl FromStr for Form {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bh" => Ok(Form::MinimalRiemannian),
            "ht" => Ok(Form::HolmesThompson),
            "classical-bh" => Ok(Form::ClassicalBH),
            "classical-ht" => Ok(Form::ClassicalHT),
            other => Err(Error::InvalidArgument(format!(
                "unknown form `{other}` (expected bh, ht, classical-bh or classical-ht)"
            ))),
        }
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct DensityDiagnostics {
    pub singular_nodes: usize,
    /// `g_min · Vol(E)/Vol(𝔹)` with `g_min` taken over the quadrature nodes.
    pub ht_lower_bound: Option<f64>,
    /// Relative gap between the integral on shifted and unshifted rules.
    pub rule_discrepancy: Option<f64>,
    /// Monte Carlo standard error of `sigma` (classical forms).
    pub standard_error: Option<f64>,
    pub samples: Option<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct VolumeDensity {
    pub x: Vec<f64>,
    pub sigma: f64,
    pub form: Form,
    pub orientation_used: Option<TimeOrientation>,
    pub diagnostics: DensityDiagnostics,
}

#[derive(Clone, Debug)]
pub struct VolumeOptions {
    pub solver: SolverOptions,
    /// `None` picks [`QuadOptions::defaults`] for the dimension.
    pub quad: Option<QuadOptions>,
    pub policy: NodePolicy,
    /// Largest tolerated relative gap between shifted and unshifted rules
    /// before the determinant is declared not prolongable.
    pub max_rule_discrepancy: f64,
    /// Quasi-random samples for the classical forms.
    pub samples: usize,
    pub rng_seed: u64,
}

impl Default for VolumeOptions {
    fn default() -> Self {
        VolumeOptions {
            solver: SolverOptions::default(),
            quad: None,
            policy: NodePolicy::default(),
            max_rule_discrepancy: 1e-6,
            samples: 100_000,
            rng_seed: 0,
        }
    }
}

impl VolumeOptions {
    pub fn quad_for(&self, n: usize) -> QuadOptions {
        self.quad.unwrap_or_else(|| QuadOptions::defaults(n))
    }
}

fn require_converged(t0: &TimeOrientation) -> Result<()> {
    if !t0.status.is_success() {
        return Err(Error::NotConverged);
    }
    Ok(())
}

/// Ellipsoid map of `g^{t₀,+}` at `x`.
pub fn osculating_ellipsoid(spec: &MetricSpec, x: &[f64], t: &[f64]) -> Result<EllipsoidMap> {
    let pair = osculating(spec, x, t)?;
    ellipsoid_map(&pair.g_t_plus)
}

/// `σ_bh = √|det g^{t₀}(x)|`, cross-checked against `Vol(𝔹)/Vol(E_x^{t₀})`.
pub fn minimal_riemannian_density(spec: &MetricSpec, x: &[f64], t0: &TimeOrientation) -> Result<VolumeDensity> {
    require_converged(t0)?;
    let pair = osculating(spec, x, &t0.direction)?;
    let direct = pair.g_t.det.abs().sqrt();
    let map = ellipsoid_map(&pair.g_t_plus)?;
    let via_ellipsoid = ball_volume(spec.dim) / map.volume();
    if (direct - via_ellipsoid).abs() > 1e-10 * direct {
        return Err(Error::RouteMismatch(format!("√|det g^t| = {direct}, Vol(𝔹)/Vol(E) = {via_ellipsoid}")));
    }
    Ok(VolumeDensity {
        x: x.to_vec(),
        sigma: direct,
        form: Form::MinimalRiemannian,
        orientation_used: Some(t0.clone()),
        diagnostics: DensityDiagnostics::default(),
    })
}

/// `∫_{E_x^{t₀}} |det g(x, y)| dⁿy` together with the shifted-rule check.
pub(crate) fn ht_integral(spec: &MetricSpec, x: &[f64], map: &EllipsoidMap, opts: &VolumeOptions) -> Result<(Integral, f64)> {
    let n = spec.dim;
    let quad = opts.quad_for(n);
    let f = |y: &[f64]| abs_det_or_nan(spec, x, y);
    let not_prolongable = |singular_nodes, discrepancy| Error::DetNotProlongable { singular_nodes, discrepancy };
    let run = |shift| {
        let rule = quad.sphere(n, shift)?;
        integrate_homogeneous(&f, 0.0, map, &rule, &opts.policy).map_err(|e| match e {
            Error::SingularNodes { count, .. } => not_prolongable(count, f64::NAN),
            other => other,
        })
    };
    let main = run(false)?;
    let shifted = run(true)?;
    let discrepancy = (main.value - shifted.value).abs() / main.value.abs();
    if !discrepancy.is_finite() || discrepancy > opts.max_rule_discrepancy {
        return Err(not_prolongable(main.singular_nodes(), discrepancy));
    }
    Ok((main, discrepancy))
}

/// `σ_ht = (1/Vol(𝔹)) ∫_{E_x^{t₀}} |det g(x, y)| dⁿy`.
pub fn holmes_thompson_density(
    spec: &MetricSpec,
    x: &[f64],
    t0: &TimeOrientation,
    opts: &VolumeOptions,
) -> Result<VolumeDensity> {
    require_converged(t0)?;
    let map = osculating_ellipsoid(spec, x, &t0.direction)?;
    let (integral, discrepancy) = ht_integral(spec, x, &map, opts)?;
    let sigma = integral.value / ball_volume(spec.dim);
    let lower = integral.min_value * map.jac;
    if sigma < lower * (1.0 - 1e-12) {
        return Err(Error::RouteMismatch(format!("σ_ht = {sigma} below its lower bound {lower}")));
    }
    Ok(VolumeDensity {
        x: x.to_vec(),
        sigma,
        form: Form::HolmesThompson,
        orientation_used: Some(t0.clone()),
        diagnostics: DensityDiagnostics {
            singular_nodes: integral.singular_nodes(),
            ht_lower_bound: Some(lower),
            rule_discrepancy: Some(discrepancy),
            ..Default::default()
        },
    })
}

const PRIMES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let (mut inv, mut f) = (0.0, 1.0 / base as f64);
    while i > 0 {
        inv += f * (i % base) as f64;
        i /= base;
        f /= base as f64;
    }
    inv
}

fn halton_point(i: u64, n: usize) -> Vec<f64> {
    (0..n).map(|d| radical_inverse(i + 1, PRIMES[d])).collect()
}

const REPLICATES: usize = 16;
const BOX_DIRECTIONS: u64 = 512;
const BOX_MARGIN: f64 = 1.1;

/// Signature `(n, 0, 0)` at generic directions. Axes are avoided since
/// norms like `(Σ y_i⁴)^{1/4}` are degenerate there.
fn check_positive_definite(spec: &MetricSpec, x: &[f64]) -> Result<()> {
    let n = spec.dim;
    for i in 0..32 {
        let y: Vec<f64> = halton_point(i, n).iter().map(|v| 2.0 * v - 1.0).collect();
        if y.iter().any(|v| v.abs() < 1e-3) {
            continue;
        }
        let g = metric_at(spec, x, &y).map_err(|_| Error::NotPositiveDefinite)?;
        if g.signature != Signature::riemannian(n) || spec.lagrangian_at(x, &y)? <= 0.0 {
            return Err(Error::NotPositiveDefinite);
        }
    }
    Ok(())
}

/// Axis-aligned box containing `B_x = {L(x, y) ≤ 1}`: the boundary point in
/// direction `d` is `d/F(d)` by homogeneity.
fn bounding_box(spec: &MetricSpec, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = spec.dim;
    let mut dirs: Vec<Vec<f64>> = Vec::new();
    for i in 0..n {
        for s in [1.0, -1.0] {
            let mut e = vec![0.0; n];
            e[i] = s;
            dirs.push(e);
        }
    }
    for mask in 0..(1u32 << n) {
        dirs.push((0..n).map(|i| if mask >> i & 1 == 1 { -1.0 } else { 1.0 }).collect());
    }
    dirs.extend((0..BOX_DIRECTIONS).map(|i| halton_point(i, n).iter().map(|v| 2.0 * v - 1.0).collect()));
    let (mut lo, mut hi) = (vec![0.0; n], vec![0.0; n]);
    for d in dirs {
        let d = normalized(&d);
        if !d.iter().all(|v| v.is_finite()) {
            continue;
        }
        let l = spec.lagrangian_at(x, &d)?;
        if !(l > 0.0) {
            return Err(Error::NotPositiveDefinite);
        }
        let r = 1.0 / l.sqrt();
        for i in 0..n {
            lo[i] = f64::min(lo[i], r * d[i]);
            hi[i] = f64::max(hi[i], r * d[i]);
        }
    }
    Ok((lo.iter().map(|v| v * BOX_MARGIN).collect(), hi.iter().map(|v| v * BOX_MARGIN).collect()))
}

fn mean_and_error(v: &[f64]) -> (f64, f64) {
    let m = v.len() as f64;
    let mean = pairwise_sum(v) / m;
    let var = v.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (m - 1.0);
    (mean, (var / m).sqrt())
}

/// Classical densities of a positive-definite structure by randomized
/// quasi-Monte Carlo over a box containing the unit ball `B_x`: a Halton
/// sequence shifted by independent random offsets in each of the replicates.
pub fn classical_density(spec: &MetricSpec, x: &[f64], form: Form, opts: &VolumeOptions) -> Result<VolumeDensity> {
    if !form.is_classical() {
        return Err(Error::InvalidArgument("classical_density needs classical-bh or classical-ht".into()));
    }
    if opts.samples < 2 * REPLICATES {
        return Err(Error::InvalidArgument(format!("at least {} samples are needed", 2 * REPLICATES)));
    }
    let n = spec.dim;
    check_positive_definite(spec, x)?;
    let (lo, hi) = bounding_box(spec, x)?;
    let box_volume: f64 = lo.iter().zip(&hi).map(|(a, b)| b - a).product();
    let per = opts.samples / REPLICATES;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.rng_seed);
    let shifts: Vec<Vec<f64>> = (0..REPLICATES).map(|_| (0..n).map(|_| rng.random::<f64>()).collect()).collect();
    let want_det = form == Form::ClassicalHT;
    let estimates: Vec<Result<(f64, f64)>> = shifts
        .par_iter()
        .map(|shift| {
            let mut inside = 0usize;
            let mut dets = Vec::new();
            for i in 0..per as u64 {
                let h = halton_point(i, n);
                let y: Vec<f64> = (0..n).map(|d| lo[d] + (hi[d] - lo[d]) * (h[d] + shift[d]).fract()).collect();
                if spec.lagrangian_at(x, &y)? <= 1.0 {
                    inside += 1;
                    if want_det && y.iter().any(|v| *v != 0.0) {
                        dets.push(determinant(&metric_tensor(spec, x, &y)?));
                    }
                }
            }
            let vol = box_volume * inside as f64 / per as f64;
            Ok((vol, box_volume * pairwise_sum(&dets) / per as f64))
        })
        .collect();
    let estimates = estimates.into_iter().collect::<Result<Vec<_>>>()?;
    let vb = ball_volume(n);
    let (sigma, se) = if want_det {
        let ints: Vec<f64> = estimates.iter().map(|e| e.1).collect();
        let (m, se) = mean_and_error(&ints);
        (m / vb, se / vb)
    } else {
        let vols: Vec<f64> = estimates.iter().map(|e| e.0).collect();
        let (m, se) = mean_and_error(&vols);
        (vb / m, vb * se / (m * m))
    };
    if !(sigma > 0.0) {
        return Err(Error::NotPositiveDefinite);
    }
    Ok(VolumeDensity {
        x: x.to_vec(),
        sigma,
        form,
        orientation_used: None,
        diagnostics: DensityDiagnostics {
            standard_error: Some(se),
            samples: Some(per * REPLICATES),
            ..Default::default()
        },
    })
}

/// Density at `x`, using `t0` when given and otherwise solving for a
/// privileged orientation.
pub fn density(
    spec: &MetricSpec,
    x: &[f64],
    form: Form,
    t0: Option<&TimeOrientation>,
    opts: &VolumeOptions,
) -> Result<VolumeDensity> {
    if form.is_classical() {
        return classical_density(spec, x, form, opts);
    }
    let solved;
    let t0 = match t0 {
        Some(t) => t,
        None => {
            solved = find_privileged(spec, x, &opts.solver)?;
            &solved
        }
    };
    match form {
        Form::MinimalRiemannian => minimal_riemannian_density(spec, x, t0),
        _ => holmes_thompson_density(spec, x, t0, opts),
    }
}

/// Axis-aligned box `Π [lo_i, hi_i]`.
#[derive(Clone, Debug, Serialize)]
pub struct BoxDomain {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::InvalidArgument("box bounds must have equal, nonzero length".into()));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a.is_finite() && b.is_finite() && a < b)) {
            return Err(Error::InvalidArgument("box bounds must be finite with lo < hi".into()));
        }
        Ok(BoxDomain { lo, hi })
    }

    pub fn unit(n: usize) -> Self {
        BoxDomain { lo: vec![0.0; n], hi: vec![1.0; n] }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }

    /// Cell midpoints of a grid with `res[i]` cells along axis `i`, in
    /// row-major order (last axis fastest).
    pub fn midpoints(&self, res: &[usize]) -> Result<Vec<Vec<f64>>> {
        if res.len() != self.dim() || res.contains(&0) {
            return Err(Error::InvalidArgument("grid resolution must be positive for every axis".into()));
        }
        let total: usize = res.iter().product();
        Ok((0..total)
            .map(|mut k| {
                let mut p = vec![0.0; res.len()];
                for i in (0..res.len()).rev() {
                    let j = k % res[i];
                    k /= res[i];
                    let h = (self.hi[i] - self.lo[i]) / res[i] as f64;
                    p[i] = self.lo[i] + (j as f64 + 0.5) * h;
                }
                p
            })
            .collect())
    }

    pub fn cell_volume(&self, res: &[usize]) -> f64 {
        self.volume() / res.iter().product::<usize>() as f64
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Cell {
    pub center: Vec<f64>,
    pub sigma: f64,
    pub volume: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct VolumeIntegral {
    pub value: f64,
    pub form: Form,
    pub cells: Vec<Cell>,
    /// Largest direction jump of the orientation field between neighbours.
    pub smoothness: Option<f64>,
    pub max_residual: Option<f64>,
    pub singular_nodes: usize,
}

impl VolumeIntegral {
    pub fn cells_csv(&self) -> String {
        let n = self.cells.first().map_or(0, |c| c.center.len());
        let mut out: Vec<String> = (0..n).map(|i| format!("x{i}")).collect();
        out.extend(["sigma".to_string(), "cell_volume".to_string()]);
        let mut s = out.join(",") + "\n";
        for c in &self.cells {
            let mut row: Vec<String> = c.center.iter().map(|v| format!("{v:?}")).collect();
            row.push(format!("{:?}", c.sigma));
            row.push(format!("{:?}", c.volume));
            s += &(row.join(",") + "\n");
        }
        s
    }
}

/// `∫_D σ(x) dⁿx` by the midpoint rule on a `res` grid.
pub fn integrate_volume(
    spec: &MetricSpec,
    domain: &BoxDomain,
    form: Form,
    res: &[usize],
    opts: &VolumeOptions,
) -> Result<VolumeIntegral> {
    if domain.dim() != spec.dim {
        return Err(Error::InvalidArgument(format!("domain has dimension {}, expected {}", domain.dim(), spec.dim)));
    }
    let centers = domain.midpoints(res)?;
    let cell_volume = domain.cell_volume(res);
    let (densities, smoothness, max_residual) = if form.is_classical() {
        let d: Result<Vec<VolumeDensity>> = centers
            .par_iter()
            .enumerate()
            .map(|(index, x)| {
                classical_density(spec, x, form, opts).map_err(|e| Error::AtPoint { index, source: Box::new(e) })
            })
            .collect();
        (d?, None, None)
    } else {
        let field = orientation_field(spec, &centers, &opts.solver)?;
        let d: Result<Vec<VolumeDensity>> = field
            .orientations
            .par_iter()
            .enumerate()
            .map(|(index, t0)| {
                density(spec, &t0.x, form, Some(t0), opts).map_err(|e| Error::AtPoint { index, source: Box::new(e) })
            })
            .collect();
        let max_res = field.orientations.iter().map(|o| o.residual).fold(0.0, f64::max);
        (d?, Some(field.smoothness), Some(max_res))
    };
    let terms: Vec<f64> = densities.iter().map(|d| d.sigma * cell_volume).collect();
    Ok(VolumeIntegral {
        value: pairwise_sum(&terms),
        form,
        singular_nodes: densities.iter().map(|d| d.diagnostics.singular_nodes).sum(),
        cells: densities
            .into_iter()
            .map(|d| Cell { center: d.x, sigma: d.sigma, volume: cell_volume })
            .collect(),
        smoothness,
        max_residual,
    })
}
