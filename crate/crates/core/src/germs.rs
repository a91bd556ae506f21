//! Germs at the centre, their analytic continuation along paths, and the
//! convolution `φ⊛ψ` transported along an endpoint path by a deformation.
//!
//! ```text
//! (φ⊛ψ)(ζ) = ∫_{H_t} φ(η) ψ(ζ + ω − η) dη,   ζ = γ(t) = H_t(1)
//! ```

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::deformation::{deform, DeformConfig, DeformError, DeformationGrid};
use crate::filtered_set::{FilteredSet, SetError};
use crate::paths::{local_radius, Path, PathError};
use crate::scalar::{segment_distance, unit, Cx, Scalar};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GermError {
    #[error("germ parameter coincides with the centre")]
    ParameterAtCentre,
    #[error("series radius must be positive and finite")]
    BadRadius,
    #[error("coefficient list is empty")]
    NoCoefficients,
    #[error("germ data is not finite")]
    NonFinite,
    #[error("point at distance {distance} from the centre is outside the disc of radius {radius}")]
    OutOfDisc { distance: f64, radius: f64 },
    #[error("path does not start at the centre of the germ")]
    WrongStart,
    #[error("path meets the singular point ({0}, {1})")]
    HitsParameter(f64, f64),
    #[error("series step {step:e} at prefix length {s} is below the minimum; the path runs too close to the set")]
    StepUnderflow { s: f64, step: f64 },
    #[error("re-expansion tail estimate {estimate:e} at prefix length {s} exceeds the tolerance")]
    Tail { s: f64, estimate: f64 },
    #[error("quadrature produced a non-finite value at t-index {0}")]
    NonFiniteQuadrature(usize),
    #[error("probe radius {0} must be positive and smaller than the candidate distance")]
    BadProbe(f64),
    #[error(transparent)]
    Path(#[from] PathError),
    #[error(transparent)]
    Set(#[from] SetError),
    #[error(transparent)]
    Deform(#[from] DeformError),
}

/// Holomorphic germ at `centre`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", bound = "T: Scalar", try_from = "GermDoc<T>")]
pub enum Germ<T: Scalar> {
    /// `Σ cₙ (ζ − centre)ⁿ`, entire.
    Poly { centre: Cx<T>, coeffs: Vec<Cx<T>> },
    /// `1/(a − ζ)`.
    Pole { centre: Cx<T>, a: Cx<T> },
    /// `log(1 − (ζ − centre)/(a − centre))`, zero at the centre.
    LogPole { centre: Cx<T>, a: Cx<T> },
    /// `Σ cₙ (ζ − centre)ⁿ` converging at least on the disc of radius `radius`.
    Series { centre: Cx<T>, coeffs: Vec<Cx<T>>, radius: T },
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", bound = "T: Scalar")]
enum GermDoc<T: Scalar> {
    Poly {
        #[serde(default)]
        centre: Cx<T>,
        coeffs: Vec<Cx<T>>,
    },
    Pole {
        #[serde(default)]
        centre: Cx<T>,
        a: Cx<T>,
    },
    LogPole {
        #[serde(default)]
        centre: Cx<T>,
        a: Cx<T>,
    },
    Series {
        #[serde(default)]
        centre: Cx<T>,
        coeffs: Vec<Cx<T>>,
        radius: T,
    },
}

impl<T: Scalar> TryFrom<GermDoc<T>> for Germ<T> {
    type Error = GermError;

    fn try_from(doc: GermDoc<T>) -> Result<Self, GermError> {
        let g = match doc {
            GermDoc::Poly { centre, coeffs } => Germ::Poly { centre, coeffs },
            GermDoc::Pole { centre, a } => Germ::Pole { centre, a },
            GermDoc::LogPole { centre, a } => Germ::LogPole { centre, a },
            GermDoc::Series { centre, coeffs, radius } => Germ::Series { centre, coeffs, radius },
        };
        g.validated()
    }
}

fn finite<T: Scalar>(z: Cx<T>) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

fn horner<T: Scalar>(coeffs: &[Cx<T>], u: Cx<T>) -> Cx<T> {
    coeffs.iter().rev().fold(Cx::new(T::zero(), T::zero()), |acc, c| acc * u + c)
}

fn real<T: Scalar>(x: T) -> Cx<T> {
    Cx::new(x, T::zero())
}

impl<T: Scalar> Germ<T> {
    pub fn poly(coeffs: Vec<Cx<T>>) -> Result<Self, GermError> {
        Germ::Poly { centre: real(T::zero()), coeffs }.validated()
    }

    /// The constant germ `1`.
    pub fn one() -> Self {
        Germ::Poly { centre: real(T::zero()), coeffs: vec![real(T::one())] }
    }

    /// `ζⁿ/n!` at the origin.
    pub fn monomial(n: usize) -> Self {
        let mut coeffs = vec![real(T::zero()); n + 1];
        let fact = (1..=n).fold(T::one(), |f, k| f * T::from_usize_lossy(k));
        coeffs[n] = real(T::one() / fact);
        Germ::Poly { centre: real(T::zero()), coeffs }
    }

    pub fn pole(a: Cx<T>) -> Result<Self, GermError> {
        Germ::Pole { centre: real(T::zero()), a }.validated()
    }

    pub fn log_pole(a: Cx<T>) -> Result<Self, GermError> {
        Germ::LogPole { centre: real(T::zero()), a }.validated()
    }

    pub fn series(coeffs: Vec<Cx<T>>, radius: T) -> Result<Self, GermError> {
        Germ::Series { centre: real(T::zero()), coeffs, radius }.validated()
    }

    /// Same germ re-anchored at another centre (parameters unchanged).
    pub fn at_centre(mut self, c: Cx<T>) -> Result<Self, GermError> {
        match &mut self {
            Germ::Poly { centre, .. }
            | Germ::Pole { centre, .. }
            | Germ::LogPole { centre, .. }
            | Germ::Series { centre, .. } => *centre = c,
        }
        self.validated()
    }

    fn validated(self) -> Result<Self, GermError> {
        let centre = self.centre();
        if !finite(centre) {
            return Err(GermError::NonFinite);
        }
        match &self {
            Germ::Poly { coeffs, .. } | Germ::Series { coeffs, .. } => {
                if coeffs.is_empty() {
                    return Err(GermError::NoCoefficients);
                }
                if !coeffs.iter().all(|c| finite(*c)) {
                    return Err(GermError::NonFinite);
                }
            }
            Germ::Pole { a, .. } | Germ::LogPole { a, .. } => {
                if !finite(*a) {
                    return Err(GermError::NonFinite);
                }
                if (*a - centre).norm() <= T::point_tol() {
                    return Err(GermError::ParameterAtCentre);
                }
            }
        }
        if let Germ::Series { radius, .. } = &self {
            if !(*radius > T::zero() && radius.is_finite()) {
                return Err(GermError::BadRadius);
            }
        }
        Ok(self)
    }

    pub fn centre(&self) -> Cx<T> {
        match self {
            Germ::Poly { centre, .. }
            | Germ::Pole { centre, .. }
            | Germ::LogPole { centre, .. }
            | Germ::Series { centre, .. } => *centre,
        }
    }

    /// Radius of the disc around the centre on which [`Germ::eval_local`]
    /// is defined.
    pub fn radius(&self) -> T {
        match self {
            Germ::Poly { .. } => T::infinity(),
            Germ::Pole { centre, a } | Germ::LogPole { centre, a } => (*a - *centre).norm(),
            Germ::Series { radius, .. } => *radius,
        }
    }

    /// Principal value on the disc of convergence at the centre.
    pub fn eval_local(&self, z: Cx<T>) -> Result<Cx<T>, GermError> {
        let c = self.centre();
        let d = (z - c).norm();
        if !(d < self.radius()) {
            return Err(GermError::OutOfDisc { distance: d.to_f64().unwrap(), radius: self.radius().to_f64().unwrap() });
        }
        Ok(match self {
            Germ::Poly { coeffs, .. } | Germ::Series { coeffs, .. } => horner(coeffs, z - c),
            Germ::Pole { a, .. } => (*a - z).inv(),
            Germ::LogPole { a, .. } => ((*a - z) / (*a - c)).ln(),
        })
    }
}

/// Numerical knobs of series continuation.
#[derive(Clone, Copy, Debug)]
pub struct ContinuationConfig<T: Scalar> {
    /// Truncation degree `N_ser` of the local expansions.
    pub n_ser: usize,
    /// Step length as a fraction of the local radius.
    pub step_factor: T,
    /// Largest admissible truncation error, relative to the local value, on
    /// the disc reached by the next step.
    pub tail_tol: T,
    /// Smallest admissible step, relative to `max(1, 𝓛(λ))`.
    pub min_step: T,
}

impl<T: Scalar> Default for ContinuationConfig<T> {
    fn default() -> Self {
        Self { n_ser: 64, step_factor: T::lit(0.5), tail_tol: T::lit(1e-7), min_step: T::lit(1e-9) }
    }
}

/// One point of a continuation: parameter, position, value and the radius
/// of the disc on which the local representation is trusted.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct TraceSample<T: Scalar> {
    pub t: T,
    pub z: Cx<T>,
    pub value: Cx<T>,
    pub radius: T,
}

#[derive(Clone, Debug)]
enum Local<T: Scalar> {
    Direct(Germ<T>),
    /// Logarithm of `(a − ζ)/(a − centre)`; sample values fix the branch.
    Log { a: Cx<T>, base: Cx<T> },
    /// Taylor coefficients around each sample.
    Series(Vec<Vec<Cx<T>>>),
    /// Values only.
    Sampled,
}

/// Values of a germ along a path. Samples are ordered in `t`; every vertex
/// of the path is a sample.
#[derive(Clone, Debug)]
pub struct ContinuationTrace<T: Scalar> {
    path: Path<T>,
    samples: Vec<TraceSample<T>>,
    vertex_sample: Vec<usize>,
    local: Local<T>,
}

impl<T: Scalar> ContinuationTrace<T> {
    pub fn path(&self) -> &Path<T> {
        &self.path
    }

    pub fn samples(&self) -> &[TraceSample<T>] {
        &self.samples
    }

    /// Sample index of each vertex of the path.
    pub fn vertex_samples(&self) -> &[usize] {
        &self.vertex_sample
    }

    pub fn end_value(&self) -> Cx<T> {
        self.samples.last().unwrap().value
    }

    /// Net number of turns around the singular point of a `log_pole`
    /// germ, `None` for other kinds.
    pub fn winding(&self) -> Option<i64> {
        match &self.local {
            Local::Log { a, base } => {
                let last = self.samples.last().unwrap();
                let principal = ((*a - last.z) / *base).arg();
                ((last.value.im - principal) / T::TAU()).round().to_i64()
            }
            _ => None,
        }
    }

    /// Value at `z` from the local representation at sample `k`; `z` must
    /// lie in the disc of radius `samples[k].radius`.
    pub fn eval_near(&self, k: usize, z: Cx<T>) -> Cx<T> {
        let smp = &self.samples[k];
        match &self.local {
            Local::Direct(g) => match g {
                Germ::Poly { centre, coeffs } => horner(coeffs, z - *centre),
                Germ::Pole { a, .. } => (*a - z).inv(),
                _ => unreachable!("only entire and pole germs are evaluated directly"),
            },
            Local::Log { a, .. } => smp.value + ((*a - z) / (*a - smp.z)).ln(),
            Local::Series(exps) => horner(&exps[k], z - smp.z),
            Local::Sampled => smp.value,
        }
    }

    /// Value at `z` near segment `seg` of the path, from the closest sample
    /// on that segment.
    pub fn eval_on_segment(&self, seg: usize, z: Cx<T>) -> Cx<T> {
        let last = self.vertex_sample.len() - 1;
        let lo = self.vertex_sample[seg.min(last)];
        let hi = self.vertex_sample[(seg + 1).min(last)];
        let k = (lo..=hi)
            .min_by(|&i, &j| {
                let (di, dj) = ((self.samples[i].z - z).norm(), (self.samples[j].z - z).norm());
                di.partial_cmp(&dj).unwrap()
            })
            .unwrap();
        self.eval_near(k, z)
    }
}

/// Continues `g` along `λ` with default numerical settings.
pub fn continue_along<T: Scalar>(
    g: &Germ<T>,
    lambda: &Path<T>,
    set: &FilteredSet<T>,
) -> Result<ContinuationTrace<T>, GermError> {
    continue_along_with(g, lambda, set, &ContinuationConfig::default())
}

pub fn continue_along_with<T: Scalar>(
    g: &Germ<T>,
    lambda: &Path<T>,
    set: &FilteredSet<T>,
    cfg: &ContinuationConfig<T>,
) -> Result<ContinuationTrace<T>, GermError> {
    if (lambda.start() - g.centre()).norm() > T::point_tol() {
        return Err(GermError::WrongStart);
    }
    let levels = lambda.admissible_levels(set)?;
    if levels.is_empty() {
        return Err(PathError::NotAllowed {
            length: lambda.length().to_f64().unwrap(),
            bound: levels.upper.to_f64().unwrap(),
        }
        .into());
    }
    if let Germ::Pole { a, .. } | Germ::LogPole { a, .. } = g {
        let v = lambda.vertices();
        let touches = if v.len() == 1 {
            (v[0] - *a).norm() <= T::point_tol()
        } else {
            v.windows(2).any(|w| segment_distance(w[0], w[1], *a).0 <= T::point_tol())
        };
        if touches {
            return Err(GermError::HitsParameter(a.re.to_f64().unwrap(), a.im.to_f64().unwrap()));
        }
    }
    let params = lambda.vertex_params();
    let vertices = lambda.vertices();
    let closed = |values: Vec<Cx<T>>, radii: Vec<T>, local: Local<T>| ContinuationTrace {
        path: lambda.clone(),
        samples: (0..vertices.len())
            .map(|k| TraceSample { t: params[k], z: vertices[k], value: values[k], radius: radii[k] })
            .collect(),
        vertex_sample: (0..vertices.len()).collect(),
        local,
    };
    match g {
        Germ::Poly { centre, coeffs } => {
            let values = vertices.iter().map(|z| horner(coeffs, *z - *centre)).collect();
            Ok(closed(values, vec![T::infinity(); vertices.len()], Local::Direct(g.clone())))
        }
        Germ::Pole { a, .. } => {
            let values = vertices.iter().map(|z| (*a - *z).inv()).collect();
            let radii = vertices.iter().map(|z| (*a - *z).norm()).collect();
            Ok(closed(values, radii, Local::Direct(g.clone())))
        }
        Germ::LogPole { centre, a } => {
            let base = *a - *centre;
            let mut values = Vec::with_capacity(vertices.len());
            let mut acc = ((*a - vertices[0]) / base).ln();
            values.push(acc);
            // Along a segment `a − ζ` moves on a line missing 0, so the
            // swept angle is the principal argument of the ratio.
            for w in vertices.windows(2) {
                acc += ((*a - w[1]) / (*a - w[0])).ln();
                values.push(acc);
            }
            let radii = vertices.iter().map(|z| (*a - *z).norm()).collect();
            Ok(closed(values, radii, Local::Log { a: *a, base }))
        }
        Germ::Series { coeffs, radius, .. } => continue_series(coeffs, *radius, lambda, set, cfg),
    }
}

/// Coefficients of `p(u + d)` from those of `p(u)`.
fn taylor_shift<T: Scalar>(c: &mut [Cx<T>], d: Cx<T>) {
    let n = c.len();
    for i in 0..n.saturating_sub(1) {
        for j in (i..n - 1).rev() {
            let next = c[j + 1];
            c[j] += d * next;
        }
    }
}

/// Truncation error `M (d/r₀)^N / (1 − d/r₀)` of the coefficient data at
/// distance `d` from its centre, with the Cauchy majorant `M = max |cₙ| r₀ⁿ`.
/// A re-expanded truncated series is the same polynomial around a new
/// centre, so this bounds every local expansion of the trace.
fn data_tail<T: Scalar>(coeffs: &[Cx<T>], r0: T, d: T) -> T {
    let q = d / r0;
    if !(q < T::one()) {
        return T::infinity();
    }
    let m = coeffs.iter().enumerate().map(|(n, c)| c.norm() * r0.powi(n as i32)).fold(T::zero(), T::max);
    m * q.powi(coeffs.len() as i32) / (T::one() - q)
}

/// Largest `ρ ≤ cap` such that the data tail on the disc of radius `ρ`
/// around a point at distance `d` from the data centre stays below `tol`.
fn trusted_radius<T: Scalar>(coeffs: &[Cx<T>], r0: T, d: T, cap: T, tol: T) -> T {
    if data_tail(coeffs, r0, d + cap) <= tol {
        return cap;
    }
    let (mut lo, mut hi) = (T::zero(), cap);
    for _ in 0..60 {
        let mid = (lo + hi) * T::lit(0.5);
        if data_tail(coeffs, r0, d + mid) <= tol {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Steps of length at most the trusted radius `ρ_k`: the smaller of
/// `c·r̂(z_k)` and the radius on which the truncated data stays within
/// tolerance. Each step re-expands the local series at the new point.
fn continue_series<T: Scalar>(
    coeffs: &[Cx<T>],
    r0: T,
    lambda: &Path<T>,
    set: &FilteredSet<T>,
    cfg: &ContinuationConfig<T>,
) -> Result<ContinuationTrace<T>, GermError> {
    let n = cfg.n_ser.max(1);
    let mut c: Vec<Cx<T>> = coeffs.iter().copied().take(n).collect();
    c.resize(n, real(T::zero()));
    let data = c.clone();
    let len = lambda.length();
    let min_step = cfg.min_step * T::one().max(len);
    let vertices = lambda.vertices();
    let prefix = lambda.prefix_lengths();
    let t_of = |s: T| if len > T::zero() { s / len } else { T::zero() };
    let origin = vertices[0];

    let trust = |z: Cx<T>, s: T, value: Cx<T>| -> Result<T, GermError> {
        let d = (z - origin).norm();
        let tol = cfg.tail_tol * value.norm().max(T::min_positive_value());
        let here = data_tail(&data, r0, d);
        if !(here <= tol) {
            return Err(GermError::Tail { s: s.to_f64().unwrap(), estimate: (here / tol * cfg.tail_tol).to_f64().unwrap() });
        }
        let cap = cfg.step_factor * local_radius(set, z, s).min(if s == T::zero() { r0 } else { T::infinity() });
        Ok(trusted_radius(&data, r0, d, cap, tol))
    };

    let mut z = origin;
    let mut s = T::zero();
    let mut rho = trust(z, s, c[0])?;
    let mut samples = vec![TraceSample { t: T::zero(), z, value: c[0], radius: rho }];
    let mut exps = vec![c.clone()];
    let mut vertex_sample = vec![0];

    for k in 0..lambda.segment_count() {
        let dir = lambda.direction(k);
        let end = prefix[k + 1];
        while s < end {
            let last = end - s <= rho;
            if !last && rho < min_step {
                return Err(GermError::StepUnderflow { s: s.to_f64().unwrap(), step: rho.to_f64().unwrap() });
            }
            let z_next = if last { vertices[k + 1] } else { z + dir * rho };
            taylor_shift(&mut c, z_next - z);
            s = if last { end } else { s + rho };
            z = z_next;
            rho = trust(z, s, c[0])?;
            samples.push(TraceSample { t: t_of(s), z, value: c[0], radius: rho });
            exps.push(c.clone());
        }
        vertex_sample.push(samples.len() - 1);
    }
    Ok(ContinuationTrace { path: lambda.clone(), samples, vertex_sample, local: Local::Series(exps) })
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[−1, 1]`.
pub fn gauss_legendre<T: Scalar>(n: usize) -> (Vec<T>, Vec<T>) {
    let mut nodes = vec![T::zero(); n];
    let mut weights = vec![T::zero(); n];
    let nn = T::from_usize_lossy(n);
    let legendre = |x: T| {
        let (mut p0, mut p1) = (T::one(), x);
        for k in 2..=n {
            let kk = T::from_usize_lossy(k);
            let p2 = ((kk + kk - T::one()) * x * p1 - (kk - T::one()) * p0) / kk;
            p0 = p1;
            p1 = p2;
        }
        let p = if n == 0 { T::one() } else { p1 };
        let dp = nn * (x * p - p0) / (x * x - T::one());
        (p, dp)
    };
    for i in 0..n {
        let mut x = (T::PI() * (T::from_usize_lossy(i) + T::lit(0.75)) / (nn + T::lit(0.5))).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() <= T::epsilon() {
                break;
            }
        }
        let (_, dp) = legendre(x);
        nodes[n - 1 - i] = x;
        weights[n - 1 - i] = T::lit(2.0) / ((T::one() - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// Numerical settings of the convolution engine.
#[derive(Clone, Copy, Debug)]
pub struct ConvolveConfig<T: Scalar> {
    /// Gauss–Legendre order per `s`-cell.
    pub n_q: usize,
    pub continuation: ContinuationConfig<T>,
    pub deform: DeformConfig<T>,
    /// Threshold on the relative loop defect of [`singularity_probe`].
    pub tol_mono: T,
    /// Chords of the probe loop.
    pub probe_chords: usize,
    /// `t`-nodes per probe chord; a power of two.
    pub probe_nodes_per_chord: usize,
}

impl<T: Scalar> Default for ConvolveConfig<T> {
    fn default() -> Self {
        Self {
            n_q: 16,
            continuation: ContinuationConfig::default(),
            deform: DeformConfig { n_s: 128, ..DeformConfig::default() },
            tol_mono: T::lit(1e-4),
            probe_chords: 64,
            probe_nodes_per_chord: 8,
        }
    }
}

/// Polyline through `nodes` with repeats removed, and the vertex index of
/// every node.
fn column_path<T: Scalar>(nodes: &[Cx<T>]) -> Result<(Path<T>, Vec<usize>), PathError> {
    let mut verts = Vec::with_capacity(nodes.len());
    let mut map = Vec::with_capacity(nodes.len());
    for z in nodes {
        if verts.last() != Some(z) {
            verts.push(*z);
        }
        map.push(verts.len() - 1);
    }
    Ok((Path::new(verts)?, map))
}

/// Cubic Lagrange weights and their derivatives at `x` for nodes
/// `x0, x0 + 1, x0 + 2, x0 + 3`.
fn lagrange4<T: Scalar>(x: T, x0: T) -> ([T; 4], [T; 4]) {
    let xs = [x0, x0 + T::one(), x0 + T::lit(2.0), x0 + T::lit(3.0)];
    let mut l = [T::zero(); 4];
    let mut dl = [T::zero(); 4];
    for k in 0..4 {
        let mut denom = T::one();
        for m in 0..4 {
            if m != k {
                denom *= xs[k] - xs[m];
            }
        }
        let mut prod = T::one();
        let mut dprod = T::zero();
        for m in 0..4 {
            if m != k {
                dprod = dprod * (x - xs[m]) + prod;
                prod *= x - xs[m];
            }
        }
        l[k] = prod / denom;
        dl[k] = dprod / denom;
    }
    (l, dl)
}

struct Rule<T: Scalar> {
    nodes: Vec<T>,
    weights: Vec<T>,
}

impl<T: Scalar> Rule<T> {
    fn new(n_q: usize) -> Self {
        let (x, w) = gauss_legendre::<T>(n_q.max(1));
        let half = T::lit(0.5);
        Self { nodes: x.iter().map(|&x| (x + T::one()) * half).collect(), weights: w.iter().map(|&w| w * half).collect() }
    }
}

fn convolve_column<T: Scalar>(
    phi: &Germ<T>,
    psi: &Germ<T>,
    grid: &DeformationGrid<T>,
    j: usize,
    rule: &Rule<T>,
    cont: &ContinuationConfig<T>,
) -> Result<Cx<T>, GermError> {
    let n_s = grid.n_s();
    let col = grid.column(j);
    let (path_a, map_a) = column_path(&col)?;
    let (path_b, map_b) = column_path(&grid.mirror_column(j))?;
    let trace_a = continue_along_with(phi, &path_a, grid.set_a(), cont)?;
    let trace_b = continue_along_with(psi, &path_b, grid.set_b(), cont)?;
    let shift = col[n_s] + grid.centre();
    let mut total = Cx::new(T::zero(), T::zero());
    for i in 0..n_s {
        let first = i.max(1) - 1;
        let first = first.min(n_s - 3);
        let window = [col[first], col[first + 1], col[first + 2], col[first + 3]];
        let x0 = T::from_usize_lossy(first);
        let xi = T::from_usize_lossy(i);
        for (u, w) in rule.nodes.iter().zip(&rule.weights) {
            let (l, dl) = lagrange4(xi + *u, x0);
            let mut z = Cx::new(T::zero(), T::zero());
            let mut dz = Cx::new(T::zero(), T::zero());
            for k in 0..4 {
                z += window[k] * l[k];
                dz += window[k] * dl[k];
            }
            let f = trace_a.eval_on_segment(map_a[i], z);
            let g = trace_b.eval_on_segment(map_b[n_s - i - 1], shift - z);
            total += f * g * dz * *w;
        }
    }
    if !finite(total) {
        return Err(GermError::NonFiniteQuadrature(j));
    }
    Ok(total)
}

/// `(φ⊛ψ)(γ(t_j))` by composite Gauss–Legendre quadrature of order `n_q`
/// on the contour `H_{t_j}`, interpolated by piecewise cubics through the
/// grid nodes. `∂_s H` is the derivative of the interpolant, so the
/// quadrature is exact for a polynomial integrand on the interpolated
/// contour, which shares its endpoints with `H_{t_j}`.
pub fn convolve_at<T: Scalar>(
    phi: &Germ<T>,
    psi: &Germ<T>,
    grid: &DeformationGrid<T>,
    j: usize,
    n_q: usize,
) -> Result<Cx<T>, GermError> {
    convolve_column(phi, psi, grid, j, &Rule::new(n_q), &ContinuationConfig::default())
}

/// [`convolve_at`] on every `t`-node, in parallel.
pub fn convolve_on_grid<T: Scalar>(
    phi: &Germ<T>,
    psi: &Germ<T>,
    grid: &DeformationGrid<T>,
    cfg: &ConvolveConfig<T>,
) -> Result<Vec<Cx<T>>, GermError> {
    let rule = Rule::new(cfg.n_q);
    (0..=grid.n_t()).into_par_iter().map(|j| convolve_column(phi, psi, grid, j, &rule, &cfg.continuation)).collect()
}

/// Largest level at which `λ₀γ` is allowed for `A ∗ B`, the default
/// working level of [`convolve_along`].
pub fn default_level<T: Scalar>(gamma: &Path<T>, a: &FilteredSet<T>, b: &FilteredSet<T>) -> Result<T, GermError> {
    let seeded = Path::segment(a.centre(), gamma.start())?.concat(gamma)?;
    Ok(seeded.admissible_levels(&a.fine_sum(b)?)?.upper)
}

/// Deformation grid and the trace of `φ⊛ψ` along `γ`.
#[derive(Clone, Debug)]
pub struct Convolution<T: Scalar> {
    pub grid: DeformationGrid<T>,
    pub trace: ContinuationTrace<T>,
}

/// Runs [`deform`] at `level` (default: [`default_level`]) and convolves
/// on every `t`-node.
pub fn convolve_run<T: Scalar>(
    phi: &Germ<T>,
    psi: &Germ<T>,
    gamma: &Path<T>,
    a: &FilteredSet<T>,
    b: &FilteredSet<T>,
    level: Option<T>,
    cfg: &ConvolveConfig<T>,
) -> Result<Convolution<T>, GermError> {
    let level = match level {
        Some(l) => l,
        None => default_level(gamma, a, b)?,
    };
    let grid = deform(gamma, a, b, level, &cfg.deform)?;
    let values = convolve_on_grid(phi, psi, &grid, cfg)?;
    let sum = a.fine_sum(b)?;
    let offset = (gamma.start() - a.centre()).norm();
    let samples: Vec<TraceSample<T>> = values
        .into_iter()
        .enumerate()
        .map(|(j, value)| {
            let t = grid.t(j);
            let z = grid.h(grid.n_s(), j);
            TraceSample { t, z, value, radius: local_radius(&sum, z, offset + t * gamma.length()) }
        })
        .collect();
    let vertex_sample = gamma
        .vertex_params()
        .iter()
        .map(|&tv| (tv * T::from_usize_lossy(grid.n_t())).round().to_usize().unwrap().min(grid.n_t()))
        .collect();
    let trace = ContinuationTrace { path: gamma.clone(), samples, vertex_sample, local: Local::Sampled };
    Ok(Convolution { grid, trace })
}

/// The trace of `φ⊛ψ` along `γ`; see [`convolve_run`].
pub fn convolve_along<T: Scalar>(
    phi: &Germ<T>,
    psi: &Germ<T>,
    gamma: &Path<T>,
    a: &FilteredSet<T>,
    b: &FilteredSet<T>,
    cfg: &ConvolveConfig<T>,
) -> Result<ContinuationTrace<T>, GermError> {
    convolve_run(phi, psi, gamma, a, b, None, cfg).map(|c| c.trace)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Regular,
    SingularLike,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub candidate: [f64; 2],
    pub radius: f64,
    /// `|f(end) − f(start)|` around the loop.
    pub monodromy: f64,
    /// `|∮ f dζ| / (2π r)`.
    pub cauchy: f64,
    pub max_abs: f64,
    /// `max(monodromy, cauchy) / max_abs`.
    pub defect: f64,
    pub classification: Classification,
}

/// Endpoint path of a probe: a parallel approach at offset `y` to the left
/// of the ray through the candidate, a descent to the loop, and a
/// counter-clockwise inscribed polygon of radius `r` around the candidate.
/// Returns the path and the number of approach steps `k`; with
/// `n_t = k + chords · m` the `t`-grid hits every loop vertex.
fn probe_path<T: Scalar>(
    centre: Cx<T>,
    candidate: Cx<T>,
    r: T,
    y_max: T,
    chords: usize,
    m: usize,
) -> Result<(Path<T>, usize), GermError> {
    let d = (candidate - centre).norm();
    let e = (candidate - centre) / d;
    let left = e * Cx::new(T::zero(), T::one());
    let chord = T::lit(2.0) * r * (T::PI() / T::from_usize_lossy(chords)).sin();
    let h = chord / T::from_usize_lossy(m);
    let y_min = r + T::lit(0.25) * (y_max - r);
    let k = ((d + y_min - r) / h).ceil();
    let y = k * h - d + r;
    if !(y < y_max) {
        return Err(GermError::BadProbe(r.to_f64().unwrap()));
    }
    let start_angle = left.arg();
    let mut v = vec![centre + left * y, candidate + left * y, candidate + left * r];
    for q in 1..=chords {
        v.push(candidate + unit(start_angle + T::TAU() * T::from_usize_lossy(q) / T::from_usize_lossy(chords)) * r);
    }
    let last = v.len() - 1;
    v[last] = candidate + left * r;
    Ok((Path::new(v)?, k.to_usize().unwrap()))
}

/// Romberg extrapolation from `2^p + 1` equally spaced samples on `[0, 1]`.
fn romberg<T: Scalar>(f: &[Cx<T>]) -> Cx<T> {
    let n = f.len() - 1;
    let mut table: Vec<Cx<T>> = Vec::new();
    let mut stride = n;
    while stride >= 1 {
        let h = T::from_usize_lossy(stride) / T::from_usize_lossy(n);
        let mut s = (f[0] + f[n]) * T::lit(0.5);
        for i in (stride..n).step_by(stride) {
            s += f[i];
        }
        table.push(s * h);
        stride /= 2;
        if stride == 0 {
            break;
        }
    }
    let mut factor = T::lit(4.0);
    while table.len() > 1 {
        table = table.windows(2).map(|w| w[1] + (w[1] - w[0]) / (factor - T::one())).collect();
        factor *= T::lit(4.0);
    }
    table[0]
}

/// Continues `φ⊛ψ` once around a small loop of radius `r` about
/// `candidate` and measures the defect of single-valued holomorphy: the
/// monodromy and the Cauchy integral over the loop, relative to the size
/// of the function there.
pub fn singularity_probe<T: Scalar>(
    phi: &Germ<T>,
    psi: &Germ<T>,
    a: &FilteredSet<T>,
    b: &FilteredSet<T>,
    candidate: Cx<T>,
    r: T,
    cfg: &ConvolveConfig<T>,
) -> Result<ProbeReport, GermError> {
    let centre = a.centre();
    let d = (candidate - centre).norm();
    let y_max = a.rho().min(b.rho()).min(d);
    if !(r > T::zero() && r < y_max) {
        return Err(GermError::BadProbe(r.to_f64().unwrap()));
    }
    let chords = cfg.probe_chords.max(8);
    let m = cfg.probe_nodes_per_chord.max(1).next_power_of_two();
    let (gamma, k) = probe_path(centre, candidate, r, y_max, chords, m)?;
    let mut local = *cfg;
    local.deform.n_t = k + chords * m;
    let run = convolve_run(phi, psi, &gamma, a, b, None, &local)?;
    let f: Vec<Cx<T>> = run.trace.samples().iter().map(|s| s.value).collect();
    let z: Vec<Cx<T>> = run.trace.samples().iter().map(|s| s.z).collect();
    let mut integral = Cx::new(T::zero(), T::zero());
    for q in 0..chords {
        let lo = k + q * m;
        integral += romberg(&f[lo..=lo + m]) * (z[lo + m] - z[lo]);
    }
    let max_abs = f[k..].iter().map(|v| v.norm()).fold(T::zero(), T::max);
    let monodromy = (f[f.len() - 1] - f[k]).norm();
    let cauchy = integral.norm() / (T::TAU() * r);
    let defect = monodromy.max(cauchy) / max_abs.max(T::min_positive_value());
    let g = |x: T| x.to_f64().unwrap();
    Ok(ProbeReport {
        candidate: [g(candidate.re), g(candidate.im)],
        radius: g(r),
        monodromy: g(monodromy),
        cauchy: g(cauchy),
        max_abs: g(max_abs),
        defect: g(defect),
        classification: if defect > cfg.tol_mono { Classification::SingularLike } else { Classification::Regular },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Cx<f64> {
        Cx::new(re, im)
    }

    #[test]
    fn local_values() {
        let pole = Germ::pole(c(1.0, 0.0)).unwrap();
        assert_eq!(pole.eval_local(c(0.0, 0.0)).unwrap(), c(1.0, 0.0));
        let id = Germ::poly(vec![c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert_eq!(id.eval_local(c(0.3, -2.0)).unwrap(), c(0.3, -2.0));
        let log = Germ::log_pole(c(1.0, 0.0)).unwrap();
        assert_eq!(log.eval_local(c(0.0, 0.0)).unwrap(), c(0.0, 0.0));
        assert!(matches!(pole.eval_local(c(1.5, 0.0)), Err(GermError::OutOfDisc { .. })));
    }

    #[test]
    fn invalid_germs() {
        assert_eq!(Germ::pole(c(0.0, 0.0)), Err(GermError::ParameterAtCentre));
        assert_eq!(Germ::series(vec![c(1.0, 0.0)], 0.0), Err(GermError::BadRadius));
        assert_eq!(Germ::<f64>::poly(vec![]), Err(GermError::NoCoefficients));
    }

    #[test]
    fn json_round_trip() {
        let g = Germ::log_pole(c(2.0, 0.5)).unwrap();
        let s = serde_json::to_string(&g).unwrap();
        assert!(s.contains("\"kind\":\"log_pole\""));
        assert_eq!(serde_json::from_str::<Germ<f64>>(&s).unwrap(), g);
        let parsed: Germ<f64> = serde_json::from_str(r#"{"kind":"pole","a":[1.0,0.0]}"#).unwrap();
        assert_eq!(parsed, Germ::pole(c(1.0, 0.0)).unwrap());
        assert!(serde_json::from_str::<Germ<f64>>(r#"{"kind":"pole","a":[0.0,0.0]}"#).is_err());
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre::<f64>(16);
        for deg in 0..32 {
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg)).sum();
            let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
            assert!((q - exact).abs() < 1e-14, "degree {deg}: {q} vs {exact}");
        }
    }

    #[test]
    fn taylor_shift_matches_reexpansion() {
        let mut p = vec![c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0)];
        taylor_shift(&mut p, c(1.0, 0.0));
        assert_eq!(p, vec![c(6.0, 0.0), c(8.0, 0.0), c(3.0, 0.0)]);
    }

    #[test]
    fn lagrange_reproduces_cubics() {
        let f = |x: f64| 2.0 * x * x * x - x + 0.5;
        let df = |x: f64| 6.0 * x * x - 1.0;
        let (l, dl) = lagrange4(3.7, 2.0);
        let v: f64 = (0..4).map(|k| l[k] * f(2.0 + k as f64)).sum();
        let dv: f64 = (0..4).map(|k| dl[k] * f(2.0 + k as f64)).sum();
        assert!((v - f(3.7)).abs() < 1e-12);
        assert!((dv - df(3.7)).abs() < 1e-11);
    }

    #[test]
    fn romberg_is_exact_for_low_degree() {
        let f: Vec<Cx<f64>> = (0..=8).map(|i| {
            let x = i as f64 / 8.0;
            c(x.powi(5), 1.0)
        }).collect();
        let v = romberg(&f);
        assert!((v - c(1.0 / 6.0, 1.0)).norm() < 1e-14);
    }
}
