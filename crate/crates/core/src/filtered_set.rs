//! Finite truncations of discrete filtered sets.
//!
//! A discrete filtered set centred at `ω` is an increasing family of finite
//! sets `Ω_L ⊂ D(ω, L)`. It is stored here as a list of entries, each point
//! carrying the level `ℓ(p)` at which it enters the filtration, up to a
//! horizon beyond which nothing is known.
//!
//! Membership is strict everywhere: `p ∈ Ω_L` iff `p = ω` or `ℓ(p) < L`.
//! With the levels `k|ω₁|` for the points `±kω₁` this gives
//! `Ω_L = {0, ±ω₁, …, ±nω₁}` on every block `L ∈ ]n|ω₁|, (n+1)|ω₁|]`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{unit, wrap_angle, Cx, Scalar};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SetError {
    #[error("horizon must be positive and finite, got {0}")]
    BadHorizon(f64),
    #[error("entry {index} has a non-finite point or level")]
    NonFinite { index: usize },
    #[error("entry {index} coincides with the centre")]
    AtCentre { index: usize },
    #[error("entry {index}: level {level} is below its distance {distance} to the centre")]
    LevelBelowDistance { index: usize, level: f64, distance: f64 },
    #[error("level {requested} is beyond the horizon {horizon}")]
    BeyondHorizon { requested: f64, horizon: f64 },
    #[error("level must be positive, got {0}")]
    NonPositiveLevel(f64),
    #[error("filtered sets have different centres")]
    CentreMismatch,
}

/// A point of the filtration together with the level at which it appears.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Entry<T: Scalar> {
    pub z: Cx<T>,
    pub level: T,
}

#[derive(Deserialize)]
#[serde(bound = "T: Scalar")]
struct FilteredSetDoc<T: Scalar> {
    centre: Cx<T>,
    #[serde(default)]
    entries: Vec<Entry<T>>,
    horizon: T,
}

impl<T: Scalar> TryFrom<FilteredSetDoc<T>> for FilteredSet<T> {
    type Error = SetError;

    fn try_from(doc: FilteredSetDoc<T>) -> Result<Self, SetError> {
        FilteredSet::new(doc.centre, doc.entries.into_iter().map(|e| (e.z, e.level)), doc.horizon)
    }
}

/// Truncation of a discrete filtered set up to `horizon`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar", try_from = "FilteredSetDoc<T>")]
pub struct FilteredSet<T: Scalar> {
    centre: Cx<T>,
    entries: Vec<Entry<T>>,
    horizon: T,
}

/// Merges candidate points that coincide within the point tolerance,
/// keeping the smallest level.
struct Accumulator<T: Scalar> {
    centre: Cx<T>,
    cells: HashMap<(i64, i64), Vec<usize>>,
    entries: Vec<Entry<T>>,
}

impl<T: Scalar> Accumulator<T> {
    fn new(centre: Cx<T>) -> Self {
        Self { centre, cells: HashMap::new(), entries: Vec::new() }
    }

    fn key(z: Cx<T>) -> (i64, i64) {
        let tol = T::point_tol();
        let k = |x: T| (x / tol).floor().to_i64().unwrap_or(i64::MAX);
        (k(z.re), k(z.im))
    }

    fn find(&self, z: Cx<T>) -> Option<usize> {
        let (kx, ky) = Self::key(z);
        for dx in -1..=1 {
            for dy in -1..=1 {
                let cell = (kx.saturating_add(dx), ky.saturating_add(dy));
                if let Some(ids) = self.cells.get(&cell) {
                    for &i in ids {
                        if (self.entries[i].z - z).norm() <= T::point_tol() {
                            return Some(i);
                        }
                    }
                }
            }
        }
        None
    }

    /// Returns false when `z` is the centre (never stored as an entry).
    fn insert(&mut self, z: Cx<T>, level: T) -> bool {
        if (z - self.centre).norm() <= T::point_tol() {
            return false;
        }
        match self.find(z) {
            Some(i) => {
                if level < self.entries[i].level {
                    self.entries[i].level = level;
                }
            }
            None => {
                self.cells.entry(Self::key(z)).or_default().push(self.entries.len());
                self.entries.push(Entry { z, level });
            }
        }
        true
    }

    fn finish(self, horizon: T) -> FilteredSet<T> {
        let mut entries: Vec<_> = self.entries.into_iter().filter(|e| e.level < horizon).collect();
        sort_entries(&mut entries);
        FilteredSet { centre: self.centre, entries, horizon }
    }
}

fn sort_entries<T: Scalar>(entries: &mut [Entry<T>]) {
    entries.sort_by(|a, b| {
        let key = |e: &Entry<T>| (e.level.to_f64().unwrap(), e.z.re.to_f64().unwrap(), e.z.im.to_f64().unwrap());
        let (ka, kb) = (key(a), key(b));
        ka.0.total_cmp(&kb.0).then(ka.1.total_cmp(&kb.1)).then(ka.2.total_cmp(&kb.2))
    });
}

impl<T: Scalar> FilteredSet<T> {
    /// Builds a truncation, dropping entries at or beyond the horizon and
    /// merging duplicate points with the smaller level.
    pub fn new<I>(centre: Cx<T>, entries: I, horizon: T) -> Result<Self, SetError>
    where
        I: IntoIterator<Item = (Cx<T>, T)>,
    {
        if !(horizon.is_finite() && horizon > T::zero()) || !centre.re.is_finite() || !centre.im.is_finite() {
            return Err(SetError::BadHorizon(horizon.to_f64().unwrap_or(f64::NAN)));
        }
        let mut acc = Accumulator::new(centre);
        for (index, (z, level)) in entries.into_iter().enumerate() {
            if !(z.re.is_finite() && z.im.is_finite() && level.is_finite()) {
                return Err(SetError::NonFinite { index });
            }
            let distance = (z - centre).norm();
            if distance <= T::point_tol() {
                return Err(SetError::AtCentre { index });
            }
            if level + T::point_tol() < distance {
                return Err(SetError::LevelBelowDistance {
                    index,
                    level: level.to_f64().unwrap(),
                    distance: distance.to_f64().unwrap(),
                });
            }
            acc.insert(z, level.max(distance));
        }
        Ok(acc.finish(horizon))
    }

    /// The set reduced to its centre: `Ω_L = {ω}` for every `L` up to the horizon.
    pub fn trivial(centre: Cx<T>, horizon: T) -> Result<Self, SetError> {
        Self::new(centre, std::iter::empty(), horizon)
    }

    pub fn centre(&self) -> Cx<T> {
        self.centre
    }

    /// Entries sorted by level, then by position.
    pub fn entries(&self) -> &[Entry<T>] {
        &self.entries
    }

    pub fn horizon(&self) -> T {
        self.horizon
    }

    pub fn is_trivial(&self) -> bool {
        self.entries.is_empty()
    }

    /// `ℓ(p)`: zero at the centre, `None` for points that never enter the
    /// truncated filtration.
    pub fn level_of(&self, p: Cx<T>) -> Option<T> {
        if (p - self.centre).norm() <= T::point_tol() {
            return Some(T::zero());
        }
        self.entries.iter().find(|e| (e.z - p).norm() <= T::point_tol()).map(|e| e.level)
    }

    fn check_level(&self, level: T) -> Result<(), SetError> {
        if !(level > T::zero()) {
            return Err(SetError::NonPositiveLevel(level.to_f64().unwrap_or(f64::NAN)));
        }
        if level > self.horizon {
            return Err(SetError::BeyondHorizon {
                requested: level.to_f64().unwrap(),
                horizon: self.horizon.to_f64().unwrap(),
            });
        }
        Ok(())
    }

    /// `Ω_L`, centre first.
    pub fn at_level(&self, level: T) -> Result<Vec<Cx<T>>, SetError> {
        self.check_level(level)?;
        let mut pts = vec![self.centre];
        pts.extend(self.entries.iter().filter(|e| e.level < level).map(|e| e.z));
        Ok(pts)
    }

    /// `Ω_L ∖ {ω}`.
    pub fn punctured_at_level(&self, level: T) -> Result<Vec<Cx<T>>, SetError> {
        let mut pts = self.at_level(level)?;
        pts.remove(0);
        Ok(pts)
    }

    /// `ρ(ω) = sup {L : Ω_L ∖ {ω} = ∅}`, the horizon when there are no entries.
    pub fn rho(&self) -> T {
        self.entries.iter().map(|e| e.level).fold(self.horizon, T::min)
    }

    fn members(&self) -> impl Iterator<Item = (Cx<T>, T)> + '_ {
        std::iter::once((self.centre, T::zero())).chain(self.entries.iter().map(|e| (e.z, e.level)))
    }

    fn same_centre(&self, other: &Self) -> Result<(), SetError> {
        if (self.centre - other.centre).norm() <= T::point_tol() {
            Ok(())
        } else {
            Err(SetError::CentreMismatch)
        }
    }

    /// `(Ω ∪ Ω′)_L = Ω_L ∪ Ω′_L`.
    pub fn union(&self, other: &Self) -> Result<Self, SetError> {
        self.same_centre(other)?;
        let mut acc = Accumulator::new(self.centre);
        for e in self.entries.iter().chain(other.entries.iter()) {
            acc.insert(e.z, e.level);
        }
        Ok(acc.finish(self.horizon.min(other.horizon)))
    }

    fn combine(&self, other: &Self, rule: impl Fn(T, T, T) -> T) -> Result<Self, SetError> {
        self.same_centre(other)?;
        let horizon = self.horizon.min(other.horizon);
        let mut acc = Accumulator::new(self.centre);
        for (p, lp) in self.members() {
            for (q, lq) in other.members() {
                let c = p + q - self.centre;
                let dist = (c - self.centre).norm();
                let level = rule(lp, lq, dist).max(dist);
                if level < horizon {
                    acc.insert(c, level);
                }
            }
        }
        Ok(acc.finish(horizon))
    }

    /// `(Ω + Ω′)_L = {−ω + Ω_L + Ω′_L} ∩ D(ω, L)`.
    ///
    /// A candidate `c = p + q − ω` enters at `min max(ℓ(p), ℓ(q), |c − ω|)`
    /// over its representations.
    pub fn sum(&self, other: &Self) -> Result<Self, SetError> {
        self.combine(other, |lp, lq, d| lp.max(lq).max(d))
    }

    /// Fine sum: `c = p + q − ω` with `p ∈ Ω_{L₁}`, `q ∈ Ω′_{L₂}`, `L₁ + L₂ = L`,
    /// which enters at `min (ℓ(p) + ℓ(q))` over its representations.
    pub fn fine_sum(&self, other: &Self) -> Result<Self, SetError> {
        self.combine(other, |lp, lq, _| lp + lq)
    }

    /// Number of fine-sum iterations after which the saturation is stable:
    /// an iterated point with `k` non-centre summands has level at least `k·ρ`.
    pub fn saturation_bound(&self) -> usize {
        if self.entries.is_empty() {
            return 0;
        }
        (self.horizon / self.rho()).ceil().to_usize().unwrap_or(usize::MAX)
    }

    /// Direct limit of the iterated fine sums `Ω ∗ ⋯ ∗ Ω`, within the horizon.
    pub fn saturate(&self) -> Self {
        let bound = self.saturation_bound();
        let mut acc = self.clone();
        for _ in 0..=bound {
            let next = acc.fine_sum(self).expect("same centre");
            if next.approx_eq(&acc) {
                return next;
            }
            acc = next;
        }
        debug_assert!(false, "saturation did not stabilise within {bound} iterations");
        acc
    }

    /// Same centre, horizon and entries up to the point tolerance.
    pub fn approx_eq(&self, other: &Self) -> bool {
        let level_tol = |a: T| T::lit(1e-12) * T::one().max(a.abs());
        (self.centre - other.centre).norm() <= T::point_tol()
            && self.horizon == other.horizon
            && self.entries.len() == other.entries.len()
            && self.entries.iter().all(|e| {
                other.entries.iter().any(|f| {
                    (e.z - f.z).norm() <= T::point_tol() && (e.level - f.level).abs() <= level_tol(e.level)
                })
            })
    }

    /// Position of `p` relative to the ray from the centre in direction
    /// `theta`: `Some(distance)` when `p` lies on the open ray.
    pub fn ray_distance(&self, p: Cx<T>, theta: T) -> Option<T> {
        let rel = (p - self.centre) * unit(-theta);
        (rel.re > T::point_tol() && rel.im.abs() <= T::point_tol()).then(|| (p - self.centre).norm())
    }

    fn ray_entries(&self, theta: T) -> Vec<(T, Entry<T>)> {
        let mut on_ray: Vec<_> =
            self.entries.iter().filter_map(|e| self.ray_distance(e.z, theta).map(|d| (d, *e))).collect();
        on_ray.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        on_ray
    }

    /// Glimpsed points in direction `theta`: the ray points entering the
    /// filtration no later than their distance to the centre. A point with
    /// `ℓ(p) = |p − ω|` counts as glimpsed.
    pub fn glimpsed(&self, theta: T) -> DirectionalGlimpse<T> {
        let points = self
            .ray_entries(theta)
            .into_iter()
            .filter(|(d, e)| e.level <= *d + T::point_tol())
            .map(|(_, e)| e)
            .collect();
        DirectionalGlimpse { theta, centre: self.centre, points }
    }

    /// The seen point: first glimpsed point along the ray.
    pub fn seen(&self, theta: T) -> Option<Cx<T>> {
        self.glimpsed(theta).points.first().map(|e| e.z)
    }

    /// Largest half-opening `α < π/2`, up to `resolution`, of a sector around
    /// direction `theta` that meets `Ω_L` only along the ray.
    pub fn glimpse_angle(&self, theta: T, level: T, resolution: T) -> Result<T, SetError> {
        let pts = self.punctured_at_level(level)?;
        let min_offset = pts
            .iter()
            .filter(|p| self.ray_distance(**p, theta).is_none())
            .map(|p| wrap_angle((*p - self.centre).arg() - theta).abs())
            .fold(T::FRAC_PI_2(), T::min);
        let alpha = min_offset - resolution;
        Ok(if alpha > T::zero() { alpha } else { min_offset / T::lit(2.0) })
    }
}

/// Ordered glimpsed points on the ray `]ω, ω + e^{iθ}∞[`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct DirectionalGlimpse<T: Scalar> {
    pub theta: T,
    pub centre: Cx<T>,
    pub points: Vec<Entry<T>>,
}

impl<T: Scalar> DirectionalGlimpse<T> {
    pub fn seen(&self) -> Option<Cx<T>> {
        self.points.first().map(|e| e.z)
    }

    /// The completed set: centre followed by the glimpsed points.
    pub fn completed(&self) -> Vec<Cx<T>> {
        std::iter::once(self.centre).chain(self.points.iter().map(|e| e.z)).collect()
    }
}

/// Reference construction of the glimpsed points by induction over the
/// breakpoints `L₀ < L₁ < …` of the directional filtration.
///
/// At each block `]L_{i−1}, L_i]` the points of `Ω⋆_{L_i}(θ)` are scanned and
/// the one located exactly at `ω + L_{i−1}e^{iθ}` (if any) is added; every
/// other newly appearing point is removable. Used to cross-check
/// [`FilteredSet::glimpsed`].
pub fn glimpsed_inductive<T: Scalar>(set: &FilteredSet<T>, theta: T) -> Vec<Cx<T>> {
    let ray: Vec<Entry<T>> = set.ray_entries(theta).into_iter().map(|(_, e)| e).collect();
    if ray.is_empty() {
        return Vec::new();
    }
    let mut breaks: Vec<T> = ray.iter().map(|e| e.level).collect();
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breaks.dedup_by(|a, b| (*a - *b).abs() <= T::lit(1e-12) * T::one().max(b.abs()));
    // L_0 is the first breakpoint; the last block closes at the horizon.
    breaks.push(set.horizon());

    let direction = unit(theta);
    let mut glimp: Vec<Cx<T>> = Vec::new();
    for i in 1..breaks.len() {
        let (prev, cur) = (breaks[i - 1], breaks[i]);
        let block: Vec<Cx<T>> = ray.iter().filter(|e| e.level < cur).map(|e| e.z).collect();
        let target = set.centre() + direction * prev;
        for w in block {
            if (w - target).norm() <= T::point_tol() && !glimp.iter().any(|g| (*g - w).norm() <= T::point_tol()) {
                glimp.push(w);
            }
        }
    }
    glimp
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::cx;

    fn set(entries: &[((f64, f64), f64)], horizon: f64) -> FilteredSet<f64> {
        FilteredSet::new(cx(0.0, 0.0), entries.iter().map(|&((x, y), l)| (cx(x, y), l)), horizon).unwrap()
    }

    #[test]
    fn construction_rejects_invalid_entries() {
        let c = cx(0.0, 0.0);
        assert_eq!(FilteredSet::new(c, [(c, 1.0)], 5.0), Err(SetError::AtCentre { index: 0 }));
        assert!(matches!(
            FilteredSet::new(c, [(cx(2.0, 0.0), 1.0)], 5.0),
            Err(SetError::LevelBelowDistance { index: 0, .. })
        ));
        assert!(matches!(FilteredSet::<f64>::new(c, [], 0.0), Err(SetError::BadHorizon(_))));
        assert!(matches!(
            FilteredSet::new(c, [(cx(f64::NAN, 0.0), 1.0)], 5.0),
            Err(SetError::NonFinite { index: 0 })
        ));
    }

    #[test]
    fn construction_drops_beyond_horizon_and_merges_duplicates() {
        let s = set(&[((1.0, 0.0), 2.0), ((1.0, 0.0), 1.5), ((3.0, 0.0), 4.0)], 4.0);
        assert_eq!(s.entries(), &[Entry { z: cx(1.0, 0.0), level: 1.5 }]);
    }

    #[test]
    fn at_level_uses_strict_rule() {
        let s = set(&[((1.0, 0.0), 1.0), ((0.0, 1.0), 1.2)], 5.0);
        assert_eq!(s.at_level(1.1).unwrap(), vec![cx(0.0, 0.0), cx(1.0, 0.0)]);
        assert_eq!(s.at_level(1.0).unwrap(), vec![cx(0.0, 0.0)]);
        assert!(matches!(s.at_level(6.0), Err(SetError::BeyondHorizon { .. })));
    }

    #[test]
    fn glimpse_angle_cases() {
        let pi = std::f64::consts::PI;
        let res = 1e-6;
        let s = FilteredSet::new(cx(0.0, 0.0), [(cx(0.0, pi / 4.0).exp(), 1.0)], 5.0).unwrap();
        assert!((s.glimpse_angle(0.0, 2.0, res).unwrap() - (pi / 4.0 - res)).abs() < 1e-12);
        let ray_only = set(&[((1.0, 0.0), 1.0), ((2.0, 0.0), 3.0)], 5.0);
        assert!((ray_only.glimpse_angle(0.0, 4.0, res).unwrap() - (pi / 2.0 - res)).abs() < 1e-12);
        let vertical = set(&[((0.0, 1.0), 1.0), ((0.0, -1.0), 1.0)], 5.0);
        assert!((vertical.glimpse_angle(0.0, 2.0, res).unwrap() - (pi / 2.0 - res)).abs() < 1e-12);
        // below the level of the off-ray point the sector may open fully
        let s2 = FilteredSet::new(cx(0.0, 0.0), [(cx(0.0, 0.1).exp(), 1.5)], 5.0).unwrap();
        assert!((s2.glimpse_angle(0.0, 1.0, res).unwrap() - (pi / 2.0 - res)).abs() < 1e-12);
        assert!((s2.glimpse_angle(0.0, 2.0, res).unwrap() - (0.1 - res)).abs() < 1e-12);
    }

    #[test]
    fn saturation_bound_covers_generators() {
        let s = set(&[((1.0, 0.0), 1.0)], 3.5);
        assert_eq!(s.saturation_bound(), 4);
        assert_eq!(FilteredSet::<f64>::trivial(cx(0.0, 0.0), 3.0).unwrap().saturation_bound(), 0);
    }

    #[test]
    fn nonzero_centre_is_respected() {
        let c = cx(1.0, 1.0);
        let a = FilteredSet::new(c, [(c + cx(1.0, 0.0), 1.0)], 5.0).unwrap();
        let f = a.fine_sum(&a).unwrap();
        assert_eq!(f.level_of(c + cx(2.0, 0.0)), Some(2.0));
        assert_eq!(f.level_of(c), Some(0.0));
        assert_eq!(a.seen(0.0), Some(c + cx(1.0, 0.0)));
    }
}
