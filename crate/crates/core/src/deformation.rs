//! Contour deformation by a non-autonomous flow.
//!
//! Given two filtered sets `A`, `B` with common centre `ω`, a working level
//! `L` and an endpoint path `γ`, the flow of
//!
//! ```text
//! X(ζ, t) = η_A(ζ) / (η_A(ζ) + η_B(γ(t) − ζ + ω)) · γ′(t)
//! ```
//!
//! (with `η_A`, `η_B` the Euclidean distances to `A_L`, `B_L`) drags the
//! seed segment `H_0(s) = ω + s(γ(0) − ω)` into a family of contours `H_t`
//! from `ω` to `γ(t)`. Points of `A_L` are frozen while points `ζ` with
//! `γ(t) − ζ + ω ∈ B_L` travel with `γ`, so every `H_t` avoids `A_L` and
//! every mirror contour `H⋆_t(s) = H_t(1) + ω − H_t(1 − s)` avoids `B_L`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::filtered_set::{FilteredSet, SetError};
use crate::paths::{Path, PathError};
use crate::scalar::{Cx, Scalar};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DeformError {
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("flow denominator {chi:e} too small at t = {t} near ({re}, {im}): the path passes too close to a sum point")]
    Guard { t: f64, re: f64, im: f64, chi: f64 },
    #[error("length identity violated at s = {s}: {total} exceeds {allowed}; refine the t-grid")]
    LengthIdentity { s: f64, total: f64, allowed: f64 },
    #[error(transparent)]
    Set(#[from] SetError),
    #[error(transparent)]
    Path(#[from] PathError),
}

/// `η(ζ)`: distance from `ζ` to a finite point set, `+∞` for the empty set.
pub fn eta<T: Scalar>(points: &[Cx<T>], z: Cx<T>) -> T {
    points.iter().map(|p| (*p - z).norm()).fold(T::infinity(), T::min)
}

#[derive(Clone, Copy, Debug)]
pub struct DeformConfig<T: Scalar> {
    pub n_s: usize,
    pub n_t: usize,
    /// Guard threshold relative to `max(1, |γ′|)`.
    pub guard_rel: T,
    /// Allowed excess of `𝓛(F^s) + 𝓛(F⋆^{1−s})` over `𝓛(λ₀γ)`, relative.
    pub length_rel: T,
}

impl<T: Scalar> Default for DeformConfig<T> {
    fn default() -> Self {
        Self { n_s: 64, n_t: 512, guard_rel: T::lit(1e-8), length_rel: T::lit(1e-4) }
    }
}

/// The vector field `X` for a fixed endpoint path and level.
#[derive(Clone, Debug)]
pub struct FlowField<T: Scalar> {
    gamma: Path<T>,
    centre: Cx<T>,
    points_a: Vec<Cx<T>>,
    points_b: Vec<Cx<T>>,
    guard: T,
}

impl<T: Scalar> FlowField<T> {
    pub fn new(
        gamma: &Path<T>,
        a: &FilteredSet<T>,
        b: &FilteredSet<T>,
        level: T,
        guard_rel: T,
    ) -> Result<Self, DeformError> {
        if (a.centre() - b.centre()).norm() > T::point_tol() {
            return Err(SetError::CentreMismatch.into());
        }
        Ok(Self {
            gamma: gamma.clone(),
            centre: a.centre(),
            points_a: a.at_level(level)?,
            points_b: b.at_level(level)?,
            guard: guard_rel * T::one().max(gamma.length()),
        })
    }

    fn gamma_on(&self, k: usize, t: T) -> (Cx<T>, Cx<T>) {
        if self.gamma.is_constant() {
            return (self.gamma.start(), Cx::new(T::zero(), T::zero()));
        }
        let len = self.gamma.length();
        let dir = self.gamma.direction(k);
        (self.gamma.vertices()[k] + dir * (t * len - self.gamma.prefix_lengths()[k]), dir * len)
    }

    /// Nearest points of `A_L` to `ζ` and of `B_L` to `γ(t) − ζ + ω`.
    fn branch(&self, z: Cx<T>, t: T, k: usize) -> Branch {
        let (g, _) = self.gamma_on(k, t);
        (nearest(&self.points_a, z), nearest(&self.points_b, g - z + self.centre))
    }

    /// `X` with the nearest points frozen to `br`, smooth in `ζ` and `t`.
    fn eval(&self, z: Cx<T>, t: T, k: usize, br: Option<Branch>) -> Result<(Cx<T>, T), DeformError> {
        let (g, dg) = self.gamma_on(k, t);
        let w = g - z + self.centre;
        let chi = eta(&self.points_a, z) + eta(&self.points_b, w);
        if !(chi > self.guard) {
            return Err(DeformError::Guard {
                t: t.to_f64().unwrap(),
                re: z.re.to_f64().unwrap(),
                im: z.im.to_f64().unwrap(),
                chi: chi.to_f64().unwrap(),
            });
        }
        let (ia, ib) = br.unwrap_or_else(|| (nearest(&self.points_a, z), nearest(&self.points_b, w)));
        let num = (z - self.points_a[ia]).norm();
        let x = dg * (num / (num + (w - self.points_b[ib]).norm()));
        Ok((x, chi))
    }

    /// `X(ζ, t)`; at a vertex of `γ` the forward one-sided derivative is used.
    pub fn value(&self, z: Cx<T>, t: T) -> Result<Cx<T>, DeformError> {
        let k = self.gamma.locate(t).0;
        self.eval(z, t, k, None).map(|r| r.0)
    }

    /// `χ(ζ, t)`.
    pub fn chi(&self, z: Cx<T>, t: T) -> T {
        let (g, _) = self.gamma_on(self.gamma.locate(t).0, t);
        eta(&self.points_a, z) + eta(&self.points_b, g - z + self.centre)
    }

    fn rk4(&self, z: Cx<T>, a: T, b: T, k: usize, br: Branch, min_chi: &mut T) -> Result<Cx<T>, DeformError> {
        let h = b - a;
        let half = T::lit(0.5);
        let mid = a + h * half;
        let mut stage = |zz: Cx<T>, tt: T| -> Result<Cx<T>, DeformError> {
            let (x, chi) = self.eval(zz, tt, k, Some(br))?;
            *min_chi = min_chi.min(chi);
            Ok(x)
        };
        let k1 = stage(z, a)?;
        let k2 = stage(z + k1 * (h * half), mid)?;
        let k3 = stage(z + k2 * (h * half), mid)?;
        let k4 = stage(z + k3 * h, b)?;
        Ok(z + (k1 + (k2 + k3) * T::lit(2.0) + k4) * (h / T::lit(6.0)))
    }

    /// One RK4 step over `[a, b]` on segment `k` of `γ`. `X` is only
    /// Lipschitz across the bisectors where a nearest point changes, so a
    /// step that changes branch is split at the crossing, located by
    /// bisection to relative width `ε`.
    fn step(&self, mut z: Cx<T>, mut a: T, b: T, k: usize, min_chi: &mut T) -> Result<Cx<T>, DeformError> {
        let width_tol = T::epsilon() * T::lit(16.0) * T::one().max(b.abs());
        for _ in 0..64 {
            let br = self.branch(z, a, k);
            let zb = self.rk4(z, a, b, k, br, min_chi)?;
            if self.branch(zb, b, k) == br || b - a <= width_tol {
                return Ok(zb);
            }
            let (mut lo, mut hi) = (a, b);
            let mut z_hi = zb;
            while hi - lo > width_tol {
                let mid = lo + (hi - lo) * T::lit(0.5);
                if mid <= lo || mid >= hi {
                    break;
                }
                let zm = self.rk4(z, a, mid, k, br, min_chi)?;
                if self.branch(zm, mid, k) == br {
                    lo = mid;
                } else {
                    hi = mid;
                    z_hi = zm;
                }
            }
            z = z_hi;
            a = hi;
            if a >= b {
                return Ok(z);
            }
        }
        let br = self.branch(z, a, k);
        self.rk4(z, a, b, k, br, min_chi)
    }

    /// Trajectory `t ↦ H^s(t)` from `z0` on a uniform grid of `n_t` steps.
    /// Steps are split at the vertices of `γ`, where `γ′` jumps.
    pub fn trajectory(&self, z0: Cx<T>, n_t: usize) -> Result<(Vec<Cx<T>>, T), DeformError> {
        let mut out = Vec::with_capacity(n_t + 1);
        let mut min_chi = T::infinity();
        let mut z = z0;
        out.push(z);
        let nseg = self.gamma.segment_count();
        if nseg == 0 {
            min_chi = self.chi(z, T::zero());
            if !(min_chi > self.guard) {
                self.eval(z, T::zero(), 0, None)?;
            }
            out.resize(n_t + 1, z);
            return Ok((out, min_chi));
        }
        let taus = self.gamma.vertex_params();
        let nt = T::from_usize_lossy(n_t);
        let mut k = 0;
        for j in 0..n_t {
            let t0 = T::from_usize_lossy(j) / nt;
            let t1 = T::from_usize_lossy(j + 1) / nt;
            let mut a = t0;
            while a < t1 {
                while k + 1 < nseg && taus[k + 1] <= a {
                    k += 1;
                }
                let b = if k + 1 < nseg { t1.min(taus[k + 1]) } else { t1 };
                if b > a {
                    z = self.step(z, a, b, k, &mut min_chi)?;
                }
                a = b;
            }
            out.push(z);
        }
        Ok((out, min_chi))
    }
}

type Branch = (usize, usize);

fn nearest<T: Scalar>(points: &[Cx<T>], z: Cx<T>) -> usize {
    let mut best = 0;
    let mut d = T::infinity();
    for (i, p) in points.iter().enumerate() {
        let di = (*p - z).norm();
        if di < d {
            d = di;
            best = i;
        }
    }
    best
}

/// Sampled deformation `H[i][j] ≈ H_{t_j}(s_i)` and its mirror.
#[derive(Clone, Debug)]
pub struct DeformationGrid<T: Scalar> {
    gamma: Path<T>,
    set_a: FilteredSet<T>,
    set_b: FilteredSet<T>,
    level: T,
    n_s: usize,
    n_t: usize,
    h: Vec<Cx<T>>,
    h_star: Vec<Cx<T>>,
    min_chi: T,
    richardson_error: T,
}

impl<T: Scalar> DeformationGrid<T> {
    pub fn gamma(&self) -> &Path<T> {
        &self.gamma
    }

    pub fn set_a(&self) -> &FilteredSet<T> {
        &self.set_a
    }

    pub fn set_b(&self) -> &FilteredSet<T> {
        &self.set_b
    }

    pub fn level(&self) -> T {
        self.level
    }

    pub fn centre(&self) -> Cx<T> {
        self.set_a.centre()
    }

    pub fn n_s(&self) -> usize {
        self.n_s
    }

    pub fn n_t(&self) -> usize {
        self.n_t
    }

    pub fn s(&self, i: usize) -> T {
        T::from_usize_lossy(i) / T::from_usize_lossy(self.n_s)
    }

    pub fn t(&self, j: usize) -> T {
        T::from_usize_lossy(j) / T::from_usize_lossy(self.n_t)
    }

    /// `H_{t_j}(s_i)`.
    pub fn h(&self, i: usize, j: usize) -> Cx<T> {
        self.h[i * (self.n_t + 1) + j]
    }

    /// `H⋆_{t_j}(s_i)`.
    pub fn h_star(&self, i: usize, j: usize) -> Cx<T> {
        self.h_star[i * (self.n_t + 1) + j]
    }

    /// The contour `s ↦ H_{t_j}(s)` at the grid nodes.
    pub fn column(&self, j: usize) -> Vec<Cx<T>> {
        (0..=self.n_s).map(|i| self.h(i, j)).collect()
    }

    pub fn mirror_column(&self, j: usize) -> Vec<Cx<T>> {
        (0..=self.n_s).map(|i| self.h_star(i, j)).collect()
    }

    /// The trajectory `t ↦ H^{s_i}(t)`.
    pub fn trajectory(&self, i: usize) -> Vec<Cx<T>> {
        (0..=self.n_t).map(|j| self.h(i, j)).collect()
    }

    pub fn min_chi(&self) -> T {
        self.min_chi
    }

    /// Half-step Richardson estimate of the RK4 error on the grid.
    pub fn richardson_error(&self) -> T {
        self.richardson_error
    }

    /// `H⋆_t(s) = H_t(1) + ω − H_t(1 − s)`, recomputed from `H`.
    pub fn mirror(&self) -> Vec<Cx<T>> {
        mirror_of(&self.h, self.n_s, self.n_t, self.centre())
    }

    /// Same grid checked against other sets; `validate` then reports whether
    /// the sampled contours are still admissible for them.
    pub fn with_sets(mut self, a: FilteredSet<T>, b: FilteredSet<T>) -> Self {
        self.set_a = a;
        self.set_b = b;
        self
    }

    /// `F^{s_i} = H_0|[0,s_i] · H^{s_i}` as a polyline.
    pub fn factor_path(&self, i: usize) -> Path<T> {
        let mut v = vec![self.centre()];
        v.extend((0..=self.n_t).map(|j| self.h(i, j)));
        polyline(v)
    }

    /// `F⋆^{1−s_i} = H_0|[0,1−s_i] · H⋆^{1−s_i}` as a polyline.
    pub fn mirror_factor_path(&self, i: usize) -> Path<T> {
        let mut v = vec![self.centre()];
        v.extend((0..=self.n_t).map(|j| self.h_star(self.n_s - i, j)));
        polyline(v)
    }
}

fn polyline<T: Scalar>(mut v: Vec<Cx<T>>) -> Path<T> {
    v.dedup();
    Path::new(v).expect("deduplicated finite vertices")
}

fn mirror_of<T: Scalar>(h: &[Cx<T>], n_s: usize, n_t: usize, centre: Cx<T>) -> Vec<Cx<T>> {
    let w = n_t + 1;
    let mut out = vec![Cx::new(T::zero(), T::zero()); h.len()];
    for i in 0..=n_s {
        for j in 0..w {
            out[i * w + j] = if i == 0 { centre } else { h[n_s * w + j] + centre - h[(n_s - i) * w + j] };
        }
    }
    out
}

fn check_preconditions<T: Scalar>(
    gamma: &Path<T>,
    a: &FilteredSet<T>,
    b: &FilteredSet<T>,
    level: T,
    cfg: &DeformConfig<T>,
) -> Result<(), DeformError> {
    if (a.centre() - b.centre()).norm() > T::point_tol() {
        return Err(SetError::CentreMismatch.into());
    }
    if cfg.n_s < 3 || cfg.n_t < 1 {
        return Err(DeformError::Precondition(format!("grid too small: n_s = {}, n_t = {}", cfg.n_s, cfg.n_t)));
    }
    let centre = a.centre();
    let start = (gamma.start() - centre).norm();
    let rho = a.rho().min(b.rho());
    if !(start < rho) {
        return Err(DeformError::Precondition(format!(
            "|γ(0) − ω| = {start} must be below min(ρ_A, ρ_B) = {rho}"
        )));
    }
    if start <= T::point_tol() {
        return Err(DeformError::Precondition("γ must start away from the centre".into()));
    }
    let seeded = Path::segment(centre, gamma.start())?.concat(gamma)?;
    let levels = seeded.admissible_levels(&a.fine_sum(b)?)?;
    if !levels.contains(level) {
        return Err(DeformError::Precondition(format!(
            "λ₀γ is not allowed for the fine sum at level {level}: admissible levels are ({}, {}]",
            levels.lower, levels.upper
        )));
    }
    Ok(())
}

fn integrate_grid<T: Scalar>(
    field: &FlowField<T>,
    seed: Cx<T>,
    centre: Cx<T>,
    n_s: usize,
    n_t: usize,
) -> Result<(Vec<Cx<T>>, T), DeformError> {
    let rows: Vec<(Vec<Cx<T>>, T)> = (0..=n_s)
        .into_par_iter()
        .map(|i| {
            let s = T::from_usize_lossy(i) / T::from_usize_lossy(n_s);
            field.trajectory(centre + (seed - centre) * s, n_t)
        })
        .collect::<Result<_, _>>()?;
    let min_chi = rows.iter().map(|r| r.1).fold(T::infinity(), T::min);
    Ok((rows.into_iter().flat_map(|r| r.0).collect(), min_chi))
}

/// Builds the deformation with endpoint path `γ` and initial contour the
/// seed segment `[ω, γ(0)]`.
pub fn deform<T: Scalar>(
    gamma: &Path<T>,
    a: &FilteredSet<T>,
    b: &FilteredSet<T>,
    level: T,
    cfg: &DeformConfig<T>,
) -> Result<DeformationGrid<T>, DeformError> {
    check_preconditions(gamma, a, b, level, cfg)?;
    let field = FlowField::new(gamma, a, b, level, cfg.guard_rel)?;
    let centre = a.centre();
    let (n_s, n_t) = (cfg.n_s, cfg.n_t);
    let (h, min_chi) = integrate_grid(&field, gamma.start(), centre, n_s, n_t)?;
    let (fine, _) = integrate_grid(&field, gamma.start(), centre, n_s, 2 * n_t)?;
    let richardson_error = (0..=n_s)
        .flat_map(|i| (0..=n_t).map(move |j| (i, j)))
        .map(|(i, j)| (h[i * (n_t + 1) + j] - fine[i * (2 * n_t + 1) + 2 * j]).norm())
        .fold(T::zero(), T::max)
        / T::lit(15.0);
    let h_star = mirror_of(&h, n_s, n_t, centre);
    let grid = DeformationGrid {
        gamma: gamma.clone(),
        set_a: a.clone(),
        set_b: b.clone(),
        level,
        n_s,
        n_t,
        h,
        h_star,
        min_chi,
        richardson_error,
    };
    let total = (gamma.start() - centre).norm() + gamma.length();
    let allowed = total * (T::one() + cfg.length_rel);
    for i in 0..=n_s {
        let sum = grid.factor_path(i).length() + grid.mirror_factor_path(i).length();
        if sum > allowed {
            return Err(DeformError::LengthIdentity {
                s: grid.s(i).to_f64().unwrap(),
                total: sum.to_f64().unwrap(),
                allowed: allowed.to_f64().unwrap(),
            });
        }
    }
    Ok(grid)
}

/// Level budgets `L₁ + L₂ ≤ L` under which `F^s` is `A`-allowed and
/// `F⋆^{1−s}` is `B`-allowed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelSplit {
    pub s: f64,
    pub level_a: f64,
    pub level_b: f64,
}

/// Contract checks on a deformation grid. Every field is a plain `f64` so
/// the report serializes as a flat JSON summary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub level: f64,
    pub n_s: usize,
    pub n_t: usize,
    pub endpoint_error: f64,
    pub speed_residual: f64,
    pub seeded_length: f64,
    pub max_length_excess: f64,
    pub min_chi: f64,
    pub richardson_error: f64,
    pub admissible: bool,
    pub level_splits: Vec<LevelSplit>,
    pub failures: Vec<String>,
    pub endpoint_ok: bool,
    pub speed_ok: bool,
    pub lengths_ok: bool,
    pub passed: bool,
}

/// Tolerances applied by [`validate`].
#[derive(Clone, Copy, Debug)]
pub struct ValidationTolerances {
    pub endpoint: f64,
    pub speed_rel: f64,
    pub length_rel: f64,
}

impl Default for ValidationTolerances {
    fn default() -> Self {
        Self { endpoint: 1e-6, speed_rel: 1e-3, length_rel: 1e-4 }
    }
}

pub fn validate<T: Scalar>(grid: &DeformationGrid<T>) -> ValidationReport {
    validate_with(grid, &ValidationTolerances::default())
}

pub fn validate_with<T: Scalar>(grid: &DeformationGrid<T>, tol: &ValidationTolerances) -> ValidationReport {
    let f = |x: T| x.to_f64().unwrap();
    let (n_s, n_t) = (grid.n_s, grid.n_t);
    let gamma = &grid.gamma;
    let mut failures = Vec::new();

    let endpoint_error =
        (0..=n_t).map(|j| f((grid.h(n_s, j) - gamma.at(grid.t(j))).norm())).fold(0.0, f64::max);

    // Forward differences on each t-interval that does not straddle a vertex of γ.
    let taus = gamma.vertex_params();
    let mut speed_residual: f64 = 0.0;
    for j in 0..n_t {
        let (t0, t1) = (grid.t(j), grid.t(j + 1));
        if taus.iter().any(|&tau| tau > t0 && tau < t1) {
            continue;
        }
        let dg = gamma.at(t1) - gamma.at(t0);
        if dg.norm() == T::zero() {
            continue;
        }
        for i in 0..=n_s {
            let dh = grid.h(i, j + 1) - grid.h(i, j);
            let dhs = grid.h_star(n_s - i, j + 1) - grid.h_star(n_s - i, j);
            let r = ((dh.norm() + dhs.norm() - dg.norm()) / dg.norm()).abs();
            speed_residual = speed_residual.max(f(r));
        }
    }

    let centre = grid.centre();
    let seeded_length = f((gamma.start() - centre).norm() + gamma.length());
    let level = f(grid.level);
    let mut max_length_excess = f64::NEG_INFINITY;
    let mut level_splits = Vec::with_capacity(n_s + 1);
    let mut admissible = true;
    for i in 0..=n_s {
        let fa = grid.factor_path(i);
        let fb = grid.mirror_factor_path(i);
        max_length_excess = max_length_excess.max(f(fa.length() + fb.length()) - seeded_length);
        let split = match (fa.admissible_levels(&grid.set_a), fb.admissible_levels(&grid.set_b)) {
            (Ok(ia), Ok(ib)) if !ia.is_empty() && !ib.is_empty() && ia.lower + ib.lower < grid.level => {
                let slack = grid.level - ia.lower - ib.lower;
                let la = ia.upper.min(ia.lower + slack / T::lit(2.0));
                let lb = ib.upper.min(grid.level - la);
                Some(LevelSplit { s: f(grid.s(i)), level_a: f(la), level_b: f(lb) })
            }
            _ => None,
        };
        match split {
            Some(sp) => level_splits.push(sp),
            None => {
                admissible = false;
                failures.push(format!("no admissible level split at s = {}", f(grid.s(i))));
            }
        }
    }

    let endpoint_ok = endpoint_error <= tol.endpoint;
    let speed_ok = speed_residual <= tol.speed_rel;
    let lengths_ok = max_length_excess <= tol.length_rel * seeded_length;
    if !endpoint_ok {
        failures.push(format!("endpoint error {endpoint_error:e} exceeds {:e}", tol.endpoint));
    }
    if !speed_ok {
        failures.push(format!("speed identity residual {speed_residual:e} exceeds {:e}", tol.speed_rel));
    }
    if !lengths_ok {
        failures.push(format!("length excess {max_length_excess:e} exceeds tolerance"));
    }
    ValidationReport {
        level,
        n_s,
        n_t,
        endpoint_error,
        speed_residual,
        seeded_length,
        max_length_excess,
        min_chi: f(grid.min_chi),
        richardson_error: f(grid.richardson_error),
        admissible,
        level_splits,
        passed: endpoint_ok && speed_ok && lengths_ok && admissible,
        failures,
        endpoint_ok,
        speed_ok,
        lengths_ok,
    }
}

/// Errors of the grid against a reference integrated with `16·n_t` steps.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelfConvergence {
    pub coarse_error: f64,
    pub fine_error: f64,
    pub factor: f64,
}

/// Measures the order of the time integration by comparing `n_t` and
/// `2·n_t` steps against a `16·n_t` reference at the common grid nodes.
pub fn self_convergence<T: Scalar>(
    gamma: &Path<T>,
    a: &FilteredSet<T>,
    b: &FilteredSet<T>,
    level: T,
    cfg: &DeformConfig<T>,
) -> Result<SelfConvergence, DeformError> {
    check_preconditions(gamma, a, b, level, cfg)?;
    let field = FlowField::new(gamma, a, b, level, cfg.guard_rel)?;
    let centre = a.centre();
    let (n_s, n_t) = (cfg.n_s, cfg.n_t);
    let run = |m: usize| integrate_grid(&field, gamma.start(), centre, n_s, m * n_t).map(|r| r.0);
    let (coarse, fine, reference) = (run(1)?, run(2)?, run(16)?);
    let err = |grid: &[Cx<T>], m: usize| {
        let mut e = T::zero();
        for i in 0..=n_s {
            for j in 0..=n_t {
                let r = reference[i * (16 * n_t + 1) + 16 * j];
                e = e.max((grid[i * (m * n_t + 1) + m * j] - r).norm());
            }
        }
        e.to_f64().unwrap()
    };
    let (coarse_error, fine_error) = (err(&coarse, 1), err(&fine, 2));
    Ok(SelfConvergence { coarse_error, fine_error, factor: coarse_error / fine_error })
}
