//! Cutting planes and the working model built from them.
//!
//! A plane is stored as a pair `(a, g)` relative to the serious iterate `x`
//! it is anchored at, and evaluates as `a + g^T (y - x)`. A [`Bundle`] is the
//! pointwise maximum of its planes and always holds at least one exactness
//! plane, i.e. a plane with `a = f(x)`.

use crate::error::{check_dim, Error, Result};
use crate::feasible::dot;

#[derive(Debug, Clone, PartialEq)]
pub enum PlaneOrigin {
    /// Drawn at the serious iterate itself.
    Exactness,
    /// Drawn at the rejected trial point `z`.
    NullStep(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CuttingPlane {
    pub a: f64,
    pub g: Vec<f64>,
    pub origin: PlaneOrigin,
    /// Inner-loop counter at which the plane entered the bundle.
    pub birth: usize,
}

impl CuttingPlane {
    pub fn new(a: f64, g: Vec<f64>, origin: PlaneOrigin, birth: usize) -> Self {
        Self { a, g, origin, birth }
    }

    pub fn exactness(f_anchor: f64, g: Vec<f64>) -> Self {
        Self::new(f_anchor, g, PlaneOrigin::Exactness, 0)
    }

    pub fn is_exactness(&self) -> bool {
        matches!(self.origin, PlaneOrigin::Exactness)
    }

    /// Value `a + g^T (y - x)` of the plane anchored at `x`.
    pub fn eval(&self, y: &[f64], x: &[f64]) -> Result<f64> {
        check_dim(self.g.len(), y.len())?;
        check_dim(self.g.len(), x.len())?;
        Ok(self.eval_unchecked(y, x))
    }

    pub(crate) fn eval_unchecked(&self, y: &[f64], x: &[f64]) -> f64 {
        self.a
            + self
                .g
                .iter()
                .zip(y.iter().zip(x))
                .map(|(g, (y, x))| g * (y - x))
                .sum::<f64>()
    }

    /// The same affine function re-expressed at a new anchor.
    pub fn reanchor(&self, old_anchor: &[f64], new_anchor: &[f64]) -> CuttingPlane {
        let a = self.eval_unchecked(new_anchor, old_anchor);
        CuttingPlane {
            a,
            g: self.g.clone(),
            origin: self.origin.clone(),
            birth: 0,
        }
    }
}

/// Free function form of [`CuttingPlane::eval`].
pub fn plane_eval(p: &CuttingPlane, y: &[f64], x: &[f64]) -> Result<f64> {
    p.eval(y, x)
}

#[derive(Debug, Clone)]
pub struct Bundle {
    anchor: Vec<f64>,
    f_anchor: f64,
    planes: Vec<CuttingPlane>,
    /// Activity flags from the last tangent-program solve, aligned with `planes`.
    active: Vec<bool>,
    max_planes: usize,
}

impl Bundle {
    /// A bundle holding only the exactness plane `exactness`.
    pub fn new(
        anchor: Vec<f64>,
        f_anchor: f64,
        exactness: CuttingPlane,
        max_planes: usize,
    ) -> Result<Self> {
        check_dim(anchor.len(), exactness.g.len())?;
        if !exactness.is_exactness() {
            return Err(Error::InvalidInput(
                "first plane of a bundle must be an exactness plane".into(),
            ));
        }
        if max_planes < 2 {
            return Err(Error::InvalidConfig("max_bundle must be at least 2".into()));
        }
        Ok(Self {
            anchor,
            f_anchor,
            planes: vec![exactness],
            active: vec![true],
            max_planes,
        })
    }

    /// Builds a bundle from an arbitrary plane list. Used by tests and by
    /// callers that assemble planes themselves.
    pub fn from_planes(
        anchor: Vec<f64>,
        f_anchor: f64,
        planes: Vec<CuttingPlane>,
        max_planes: usize,
    ) -> Result<Self> {
        if planes.is_empty() {
            return Err(Error::EmptyBundle);
        }
        for p in &planes {
            check_dim(anchor.len(), p.g.len())?;
        }
        let active = vec![true; planes.len()];
        Ok(Self {
            anchor,
            f_anchor,
            planes,
            active,
            max_planes: max_planes.max(2),
        })
    }

    pub fn anchor(&self) -> &[f64] {
        &self.anchor
    }

    pub fn f_anchor(&self) -> f64 {
        self.f_anchor
    }

    pub fn planes(&self) -> &[CuttingPlane] {
        &self.planes
    }

    pub fn len(&self) -> usize {
        self.planes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.planes.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.anchor.len()
    }

    pub fn max_planes(&self) -> usize {
        self.max_planes
    }

    pub fn has_exactness_plane(&self) -> bool {
        self.planes.iter().any(CuttingPlane::is_exactness)
    }

    /// Working model `phi_k(y, x) = max_i a_i + g_i^T (y - x)`.
    pub fn eval(&self, y: &[f64]) -> Result<f64> {
        if self.planes.is_empty() {
            return Err(Error::EmptyBundle);
        }
        check_dim(self.anchor.len(), y.len())?;
        Ok(self
            .planes
            .iter()
            .map(|p| p.eval_unchecked(y, &self.anchor))
            .fold(f64::NEG_INFINITY, f64::max))
    }

    /// Adds a plane anchored at this bundle's anchor. Exact duplicates of an
    /// existing `(a, g)` only refresh that plane's metadata. Returns `true`
    /// when the plane count grew.
    pub fn add(&mut self, plane: CuttingPlane, anchor: &[f64]) -> Result<bool> {
        if anchor != self.anchor.as_slice() {
            return Err(Error::AnchorMismatch);
        }
        check_dim(self.anchor.len(), plane.g.len())?;
        if let Some(i) = self
            .planes
            .iter()
            .position(|p| p.a == plane.a && p.g == plane.g)
        {
            // keep the older birth, but remember the latest origin so the
            // newest-plane protection applies to it
            if !self.planes[i].is_exactness() {
                self.planes[i].origin = plane.origin;
            }
            self.active[i] = true;
            return Ok(false);
        }
        self.planes.push(plane);
        self.active.push(true);
        if self.planes.len() > self.max_planes {
            self.prune();
        }
        Ok(true)
    }

    /// Records which planes were active at the last tangent-program solution.
    pub fn mark_active(&mut self, active_indices: &[usize]) {
        self.active.iter_mut().for_each(|a| *a = false);
        for &i in active_indices {
            if let Some(a) = self.active.get_mut(i) {
                *a = true;
            }
        }
    }

    pub fn is_active(&self, i: usize) -> bool {
        self.active.get(i).copied().unwrap_or(false)
    }

    /// Removes planes until the bundle fits `max_planes`: first inactive ones,
    /// oldest first, then active ones, oldest first. Exactness planes and the
    /// most recently added plane are never removed.
    pub fn prune(&mut self) {
        let newest = self.planes.len().saturating_sub(1);
        let protected = |i: usize, p: &CuttingPlane| p.is_exactness() || i == newest;
        for pass_inactive_only in [true, false] {
            while self.planes.len() > self.max_planes {
                let mut victim: Option<usize> = None;
                for (i, p) in self.planes.iter().enumerate() {
                    if protected(i, p) {
                        continue;
                    }
                    if pass_inactive_only && self.active[i] {
                        continue;
                    }
                    match victim {
                        None => victim = Some(i),
                        Some(v) if p.birth < self.planes[v].birth => victim = Some(i),
                        _ => {}
                    }
                }
                match victim {
                    Some(v) => {
                        self.planes.remove(v);
                        self.active.remove(v);
                    }
                    None => break,
                }
            }
        }
    }

    /// Moves every plane to `new_anchor`, keeping the represented affine
    /// functions. Only meaningful when planes are global minorants of `f`.
    pub fn recycled_planes(&self, new_anchor: &[f64]) -> Vec<CuttingPlane> {
        self.planes
            .iter()
            .map(|p| p.reanchor(&self.anchor, new_anchor))
            .collect()
    }
}

/// Free function form of [`Bundle::eval`].
pub fn working_model_eval(b: &Bundle, y: &[f64]) -> Result<f64> {
    b.eval(y)
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
