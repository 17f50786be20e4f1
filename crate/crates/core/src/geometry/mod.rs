//! Phase-boundary geometry of spin fields.
//!
//! Conventions:
//!
//! - The jump set consists of the unit lattice edges separating two cells of
//!   the box with opposite spins. Each edge carries the unit normal pointing
//!   from its `−1` cell to its `+1` cell, so `∫∇m` over a region is the sum of
//!   `2 · length · normal` over its edges (a `±1` jump has height 2).
//! - A [`LineConfig`] is `+1` on the closed half-plane `(p − anchor)·ν ≥ 0`
//!   and is compared with spin fields at cell centres.
//! - Balls are discrete: the cells whose centres lie within the radius.

mod excess;
mod jumpset;
mod lemmas;

pub use excess::{
    best_line_fit, campanato_step, few_jumps_radius, l1_excess, strong_excess, CampanatoStep, Excess,
    FewJumps, LineFit, BOUNDARY_MARKOV_CONSTANT,
};
pub use jumpset::{
    bubble_detect, extract_jump_set, phase_components, BoundaryCurve, Bubble, CurveComponent,
};
pub use lemmas::{
    averaged_normal, density_check, eta_audit, eta_audit_balls, height_bound_check, modulus_table,
    normal_tilt_check, BallAudit, DensityCheck, EtaAudit, HeightBound, ModulusRow, ModulusTable,
    NormalEstimate, TiltCheck, TILT_CONSTANT,
};

use crate::error::{invalid, Result};
use crate::groundstate::SpinField;
use crate::lattice::{Cell, Extent, Point};
use crate::maxflow::{Boundary, Exterior};

/// Half-plane configuration `m_line`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineConfig {
    pub anchor: Point,
    pub normal: Point,
}

impl LineConfig {
    /// Normalizes `normal`; errors if it vanishes.
    pub fn new(anchor: Point, normal: Point) -> Result<Self> {
        match normal.normalized() {
            Some(n) => Ok(Self { anchor, normal: n }),
            None => invalid("line normal must be nonzero"),
        }
    }

    pub fn from_angle(anchor: Point, theta: f64) -> Self {
        Self { anchor, normal: Point::from_angle(theta) }
    }

    /// Signed distance of `p` from the line, positive on the `+1` side.
    pub fn signed_distance(&self, p: Point) -> f64 {
        (p - self.anchor).dot(self.normal)
    }

    pub fn spin_at(&self, p: Point) -> i8 {
        if self.signed_distance(p) >= 0.0 {
            1
        } else {
            -1
        }
    }

    pub fn cell_spin(&self, c: Cell) -> i8 {
        self.spin_at(c.center())
    }

    /// The same line with the opposite orientation.
    pub fn flipped(&self) -> Self {
        Self { anchor: self.anchor, normal: -self.normal }
    }

    pub fn distance_to_origin(&self, origin: Point) -> f64 {
        self.signed_distance(origin).abs()
    }

    /// The line rasterized on `extent`, with the same line prescribing the
    /// exterior frame.
    pub fn rasterize(&self, extent: Extent) -> Result<SpinField> {
        let ext = Exterior::from_fn(extent, 2, |c| self.cell_spin(c))?;
        SpinField::from_fn(extent, Boundary::Spins(ext), |c| self.cell_spin(c))
    }
}

/// A unit jump edge between two horizontally or vertically adjacent cells.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JumpEdge {
    /// The two cells, `lo` before `hi` in the axis direction.
    pub lo: Cell,
    pub hi: Cell,
    pub midpoint: Point,
    /// Unit normal from the `−1` cell to the `+1` cell.
    pub normal: Point,
}

pub(crate) const EDGE_LENGTH: f64 = 1.0;

/// Jump edge between `c` and its neighbour `c + (dx, dy)`, axis offsets only.
fn jump_between(spin: &SpinField, c: Cell, dx: i64, dy: i64) -> Option<JumpEdge> {
    let d = c.offset(dx, dy);
    let (a, b) = (spin.get(c)?, spin.get(d)?);
    if a == b {
        return None;
    }
    let axis = Point::new(dx as f64, dy as f64);
    let normal = if b > 0 { axis } else { -axis };
    Some(JumpEdge { lo: c, hi: d, midpoint: (c.center() + d.center()) * 0.5, normal })
}

/// All jump edges of the box in row-major order of their `lo` cell,
/// horizontal neighbour first.
pub fn jump_edges(spin: &SpinField) -> Vec<JumpEdge> {
    let mut out = Vec::new();
    for c in spin.extent().cells() {
        out.extend(jump_between(spin, c, 1, 0));
        out.extend(jump_between(spin, c, 0, 1));
    }
    out
}

/// Jump edges whose midpoints lie within `radius` of `center`.
pub fn jump_edges_in_ball(spin: &SpinField, center: Point, radius: f64) -> Vec<JumpEdge> {
    let ext = spin.extent();
    let x0 = ((center.x - radius).floor() as i64 - 1).max(ext.x0);
    let y0 = ((center.y - radius).floor() as i64 - 1).max(ext.y0);
    let x1 = ((center.x + radius).ceil() as i64 + 1).min(ext.x0 + ext.width as i64 - 1);
    let y1 = ((center.y + radius).ceil() as i64 + 1).min(ext.y0 + ext.height as i64 - 1);
    let r2 = radius * radius + 1e-9;
    let mut out = Vec::new();
    for y in y0..=y1 {
        for x in x0..=x1 {
            let c = Cell::new(x, y);
            for (dx, dy) in [(1, 0), (0, 1)] {
                if let Some(e) = jump_between(spin, c, dx, dy) {
                    if (e.midpoint - center).norm2() <= r2 {
                        out.push(e);
                    }
                }
            }
        }
    }
    out
}

/// Distance from `p` to the nearest jump edge segment, searching within
/// `max_radius`; `None` if there is none that close.
pub fn distance_to_jump_set(spin: &SpinField, p: Point, max_radius: f64) -> Option<f64> {
    jump_edges_in_ball(spin, p, max_radius + 0.5)
        .iter()
        .map(|e| {
            // the edge is the unit segment through the midpoint orthogonal to the normal
            let t = e.normal.perp();
            let q = p - e.midpoint;
            let along = q.dot(t).clamp(-0.5, 0.5);
            (q - t * along).norm()
        })
        .filter(|&d| d <= max_radius + 1e-12)
        .min_by(f64::total_cmp)
}

/// Discrete ball cells, checked to lie inside the spin field's box.
pub(crate) fn ball_in_box(spin: &SpinField, center: Point, radius: f64) -> Result<Vec<Cell>> {
    let cells = crate::lattice::disc_cells(center, radius);
    let ext = spin.extent();
    if cells.is_empty() || cells.iter().any(|&c| !ext.contains(c)) {
        return invalid(format!(
            "ball of radius {radius} at ({}, {}) is empty or leaves the box",
            center.x, center.y
        ));
    }
    Ok(cells)
}
