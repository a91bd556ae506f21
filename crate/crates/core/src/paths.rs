//! Polyline paths in the Borel plane and their admissibility with respect to
//! a filtered set.
//!
//! Paths are parametrized by normalized arclength `t ∈ [0, 1]`; the prefix
//! length at `t` is `s(t) = t·𝓛`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::filtered_set::FilteredSet;
use crate::scalar::{segment_distance, unit, wrap_angle, Cx, Scalar};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PathError {
    #[error("a path needs at least one vertex")]
    Empty,
    #[error("vertex {index} is not finite")]
    NonFinite { index: usize },
    #[error("vertices {index} and {} coincide", index + 1)]
    RepeatedVertex { index: usize },
    #[error("cannot concatenate: first path ends at ({0}, {1}), second starts at ({2}, {3})")]
    EndpointMismatch(f64, f64, f64, f64),
    #[error("path does not start at the centre of the filtered set")]
    NotAtCentre,
    #[error("path is not allowed: length {length} is not below the admissible bound {bound}")]
    NotAllowed { length: f64, bound: f64 },
}

#[derive(Deserialize)]
#[serde(bound = "T: Scalar")]
struct PathDoc<T: Scalar> {
    vertices: Vec<Cx<T>>,
}

impl<T: Scalar> TryFrom<PathDoc<T>> for Path<T> {
    type Error = PathError;

    fn try_from(doc: PathDoc<T>) -> Result<Self, PathError> {
        Path::new(doc.vertices)
    }
}

/// Piecewise-linear path with consecutive vertices distinct.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar", try_from = "PathDoc<T>")]
pub struct Path<T: Scalar> {
    vertices: Vec<Cx<T>>,
    #[serde(skip)]
    prefix: Vec<T>,
}

impl<T: Scalar> Path<T> {
    pub fn new(vertices: Vec<Cx<T>>) -> Result<Self, PathError> {
        if vertices.is_empty() {
            return Err(PathError::Empty);
        }
        if let Some(index) = vertices.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(PathError::NonFinite { index });
        }
        if let Some(index) = vertices.windows(2).position(|w| w[0] == w[1]) {
            return Err(PathError::RepeatedVertex { index });
        }
        let mut prefix = Vec::with_capacity(vertices.len());
        let mut acc = T::zero();
        prefix.push(acc);
        for w in vertices.windows(2) {
            acc += (w[1] - w[0]).norm();
            prefix.push(acc);
        }
        Ok(Self { vertices, prefix })
    }

    /// Constant path at `z`.
    pub fn point(z: Cx<T>) -> Self {
        Self { vertices: vec![z], prefix: vec![T::zero()] }
    }

    pub fn segment(a: Cx<T>, b: Cx<T>) -> Result<Self, PathError> {
        Self::new(vec![a, b])
    }

    /// Regular `n`-gon inscribed in the circle of radius `radius` around
    /// `centre`, from angle `start` sweeping `sweep` radians (signed).
    pub fn arc(centre: Cx<T>, radius: T, start: T, sweep: T, n: usize) -> Result<Self, PathError> {
        let n = n.max(1);
        let step = sweep / T::from_usize_lossy(n);
        let vertices =
            (0..=n).map(|k| centre + unit(start + step * T::from_usize_lossy(k)) * radius).collect();
        Self::new(vertices)
    }

    pub fn vertices(&self) -> &[Cx<T>] {
        &self.vertices
    }

    /// Cumulative arclength at each vertex.
    pub fn prefix_lengths(&self) -> &[T] {
        &self.prefix
    }

    pub fn length(&self) -> T {
        *self.prefix.last().unwrap()
    }

    pub fn start(&self) -> Cx<T> {
        self.vertices[0]
    }

    pub fn end(&self) -> Cx<T> {
        *self.vertices.last().unwrap()
    }

    pub fn is_constant(&self) -> bool {
        self.vertices.len() == 1
    }

    pub fn segment_count(&self) -> usize {
        self.vertices.len() - 1
    }

    /// Normalized parameters of the vertices.
    pub fn vertex_params(&self) -> Vec<T> {
        let len = self.length();
        if len == T::zero() {
            return vec![T::zero()];
        }
        self.prefix.iter().map(|&s| s / len).collect()
    }

    /// Segment index and local arclength for normalized parameter `t`.
    pub fn locate(&self, t: T) -> (usize, T) {
        if self.is_constant() {
            return (0, T::zero());
        }
        let s = t.max(T::zero()).min(T::one()) * self.length();
        let k = match self.prefix.binary_search_by(|p| p.partial_cmp(&s).unwrap()) {
            Ok(i) => i.min(self.segment_count() - 1),
            Err(i) => i.saturating_sub(1).min(self.segment_count() - 1),
        };
        (k, s - self.prefix[k])
    }

    /// Unit tangent of segment `k`.
    pub fn direction(&self, k: usize) -> Cx<T> {
        let d = self.vertices[k + 1] - self.vertices[k];
        d / d.norm()
    }

    /// Point at normalized arclength `t`.
    pub fn at(&self, t: T) -> Cx<T> {
        if self.is_constant() {
            return self.vertices[0];
        }
        let (k, ds) = self.locate(t);
        self.vertices[k] + self.direction(k) * ds
    }

    pub fn concat(&self, other: &Self) -> Result<Self, PathError> {
        let join_tol = T::point_tol() * T::lit(1e-3);
        let (a, b) = (self.end(), other.start());
        if (a - b).norm() > join_tol {
            return Err(PathError::EndpointMismatch(
                a.re.to_f64().unwrap(),
                a.im.to_f64().unwrap(),
                b.re.to_f64().unwrap(),
                b.im.to_f64().unwrap(),
            ));
        }
        if other.is_constant() {
            return Ok(self.clone());
        }
        let mut vertices = self.vertices.clone();
        vertices.extend_from_slice(&other.vertices[1..]);
        Self::new(vertices)
    }

    pub fn reverse(&self) -> Self {
        let mut vertices = self.vertices.clone();
        vertices.reverse();
        Self::new(vertices).expect("reversal keeps vertices distinct")
    }

    /// Uniform samples in `t` merged with the vertex parameters, as
    /// `(t, point, prefix length)`.
    pub fn sample(&self, n: usize) -> Vec<(T, Cx<T>, T)> {
        let len = self.length();
        let mut ts: Vec<T> = (0..=n.max(1)).map(|k| T::from_usize_lossy(k) / T::from_usize_lossy(n.max(1))).collect();
        ts.extend(self.vertex_params());
        ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ts.dedup_by(|a, b| (*a - *b).abs() <= T::epsilon());
        ts.into_iter().map(|t| (t, self.at(t), t * len)).collect()
    }

    /// Levels `L` for which the path belongs to the allowed paths of length
    /// budget `L`: the interval `(𝓛, min(h, horizon)]`, where `h` is the
    /// smallest level of an entry met by the path after leaving the centre.
    /// A return to the centre makes the interval empty.
    pub fn admissible_levels(&self, set: &FilteredSet<T>) -> Result<AdmissibleLevelInterval<T>, PathError> {
        let tol = T::point_tol();
        if (self.start() - set.centre()).norm() > tol {
            return Err(PathError::NotAtCentre);
        }
        let mut hit = set.horizon();
        for (k, w) in self.vertices.windows(2).enumerate() {
            let (d, u) = segment_distance(w[0], w[1], set.centre());
            let departing = k == 0 && u * (w[1] - w[0]).norm() <= tol;
            if d <= tol && !departing {
                hit = T::zero();
            }
            for e in set.entries() {
                if segment_distance(w[0], w[1], e.z).0 <= tol {
                    hit = hit.min(e.level);
                }
            }
        }
        Ok(AdmissibleLevelInterval { lower: self.length(), upper: hit.min(set.horizon()) })
    }

    fn require_allowed(&self, set: &FilteredSet<T>) -> Result<(), PathError> {
        let levels = self.admissible_levels(set)?;
        if levels.is_empty() {
            return Err(PathError::NotAllowed {
                length: levels.lower.to_f64().unwrap(),
                bound: levels.upper.to_f64().unwrap(),
            });
        }
        Ok(())
    }

    /// Lower bound for the distance of the path to the filtered set: the
    /// infimum along the path of [`local_radius`], minimized exactly on each
    /// segment.
    pub fn distance_to_set(&self, set: &FilteredSet<T>) -> Result<T, PathError> {
        self.require_allowed(set)?;
        Ok(self.distance_bound(set))
    }

    pub(crate) fn distance_bound(&self, set: &FilteredSet<T>) -> T {
        let mut best = set.horizon() - self.length();
        if self.is_constant() {
            return best.min(local_radius(set, self.start(), T::zero()));
        }
        let two = T::lit(2.0);
        for (k, w) in self.vertices.windows(2).enumerate() {
            let (a, b) = (w[0], w[1]);
            let len = (b - a).norm();
            let u = (b - a) / len;
            let s0 = self.prefix[k];
            for e in set.entries() {
                let off = a - e.z;
                let m = e.level - s0;
                let proj = (off * u.conj()).re;
                let g = |sigma: T| (off + u * sigma).norm().max(m - sigma);
                let mut cands = vec![T::zero(), len, (-proj).max(T::zero()).min(len)];
                let denom = two * (proj + m);
                if denom != T::zero() {
                    let cross = (m * m - off.norm_sqr()) / denom;
                    if cross >= T::zero() && cross <= len {
                        cands.push(cross);
                    }
                }
                for sigma in cands {
                    best = best.min(g(sigma));
                }
            }
        }
        best
    }

    /// Sampled profile `(t, s(t), local radius)` of the distance bound.
    pub fn distance_profile(&self, set: &FilteredSet<T>, n_samples: usize) -> Result<Vec<(T, T, T)>, PathError> {
        self.require_allowed(set)?;
        Ok(self.sample(n_samples).into_iter().map(|(t, z, s)| (t, s, local_radius(set, z, s))).collect())
    }

    /// Every segment direction lies in the open arc `]θ − α, θ + α[`.
    /// A constant path has no direction and is never directional.
    pub fn is_directional(&self, theta: T, alpha: T) -> bool {
        !self.is_constant()
            && self.vertices.windows(2).all(|w| wrap_angle((w[1] - w[0]).arg() - theta).abs() < alpha)
    }
}

/// Radius of a disc around the point `z` reached at prefix length `s` that
/// contains no constraining entry: every entry within distance `r` must
/// enter the filtration at level `≥ s + r`, and `s + r` may not exceed the
/// horizon.
pub fn local_radius<T: Scalar>(set: &FilteredSet<T>, z: Cx<T>, s: T) -> T {
    set.entries()
        .iter()
        .map(|e| (e.z - z).norm().max(e.level - s))
        .fold(set.horizon() - s, T::min)
}

/// `{L : λ is allowed at budget L}` = `(lower, upper]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct AdmissibleLevelInterval<T: Scalar> {
    pub lower: T,
    pub upper: T,
}

impl<T: Scalar> AdmissibleLevelInterval<T> {
    pub fn is_empty(&self) -> bool {
        !(self.lower < self.upper)
    }

    pub fn contains(&self, level: T) -> bool {
        self.lower < level && level <= self.upper
    }
}
