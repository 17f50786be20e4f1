//! Neighbourhood stencils approximating the isotropic perimeter.
//!
//! A stencil is a set of undirected cell offsets with one weight per
//! symmetry class. The cut length of a set `M` is the sum of the weights of
//! all stencil pairs with exactly one cell in `M`. For a half-plane with unit
//! normal `ν` the number of cut pairs with offset `e` per unit interface
//! length is `|e·ν|`, so the weights below are the solutions of
//! `Σ_e w_e |e·ν| = 1` at every stencil direction:
//!
//! | stencil     | axis `(1,0)` | diagonal `(1,1)` | knight `(1,2)` |
//! |-------------|--------------|------------------|----------------|
//! | `lattice4`  | `1`          | –                | –              |
//! | `crofton8`  | `√2 − 1`     | `1 − 1/√2`       | –              |
//! | `crofton16` | `√5 − 2`     | `√5 − 3/√2`      | `(1 + √2 − √5)/2` |
//!
//! `lattice4` measures the `ℓ¹` length `|ν₁| + |ν₂|`; the Crofton stencils are
//! exact along axes and diagonals (and knight directions for `crofton16`).

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StencilKind {
    Lattice4,
    Crofton8,
    Crofton16,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EdgeClass {
    Axis = 0,
    Diagonal = 1,
    Knight = 2,
}

use EdgeClass::{Axis, Diagonal, Knight};

const HALF4: [(i64, i64, EdgeClass); 2] = [(1, 0, Axis), (0, 1, Axis)];
const HALF8: [(i64, i64, EdgeClass); 4] =
    [(1, 0, Axis), (0, 1, Axis), (1, 1, Diagonal), (1, -1, Diagonal)];
const HALF16: [(i64, i64, EdgeClass); 8] = [
    (1, 0, Axis),
    (0, 1, Axis),
    (1, 1, Diagonal),
    (1, -1, Diagonal),
    (1, 2, Knight),
    (2, 1, Knight),
    (1, -2, Knight),
    (2, -1, Knight),
];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Stencil {
    kind: StencilKind,
    weights: [f64; 3],
}

impl Stencil {
    pub fn new(kind: StencilKind) -> Self {
        let s2 = std::f64::consts::SQRT_2;
        let s5 = 5f64.sqrt();
        let weights = match kind {
            StencilKind::Lattice4 => [1.0, 0.0, 0.0],
            StencilKind::Crofton8 => [s2 - 1.0, 1.0 - 1.0 / s2, 0.0],
            StencilKind::Crofton16 => [s5 - 2.0, s5 - 3.0 / s2, (1.0 + s2 - s5) / 2.0],
        };
        Self { kind, weights }
    }

    pub fn lattice4() -> Self {
        Self::new(StencilKind::Lattice4)
    }

    pub fn crofton8() -> Self {
        Self::new(StencilKind::Crofton8)
    }

    pub fn crofton16() -> Self {
        Self::new(StencilKind::Crofton16)
    }

    pub fn kind(&self) -> StencilKind {
        self.kind
    }

    /// One representative offset per undirected pair direction.
    pub fn half_offsets(&self) -> &'static [(i64, i64, EdgeClass)] {
        match self.kind {
            StencilKind::Lattice4 => &HALF4,
            StencilKind::Crofton8 => &HALF8,
            StencilKind::Crofton16 => &HALF16,
        }
    }

    /// All offsets in both directions with their weights.
    pub fn offsets(&self) -> impl Iterator<Item = (i64, i64, f64)> + '_ {
        self.half_offsets().iter().flat_map(move |&(dx, dy, c)| {
            let w = self.weight(c);
            [(dx, dy, w), (-dx, -dy, w)]
        })
    }

    pub fn weight(&self, class: EdgeClass) -> f64 {
        self.weights[class as usize]
    }

    /// Largest coordinate of any offset.
    pub fn reach(&self) -> i64 {
        match self.kind {
            StencilKind::Lattice4 | StencilKind::Crofton8 => 1,
            StencilKind::Crofton16 => 2,
        }
    }

    /// Cut length of a single isolated cell.
    pub fn cell_perimeter(&self) -> f64 {
        self.half_offsets().iter().map(|&(_, _, c)| 2.0 * self.weight(c)).sum()
    }

    pub fn length(&self, counts: &CutCounts) -> f64 {
        // Multiplying class counts keeps equal configurations bit-identical.
        (0..3).map(|k| counts.0[k] as f64 * self.weights[k]).sum()
    }

    /// Cut length per unit interface length of a half-plane with normal `nu`.
    pub fn half_plane_density(&self, nu: crate::Point) -> f64 {
        self.half_offsets()
            .iter()
            .map(|&(dx, dy, c)| self.weight(c) * (dx as f64 * nu.x + dy as f64 * nu.y).abs())
            .sum()
    }
}

impl Default for Stencil {
    fn default() -> Self {
        Self::lattice4()
    }
}

/// Number of cut pairs per edge class.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct CutCounts(pub [u64; 3]);

impl CutCounts {
    pub fn add(&mut self, class: EdgeClass) {
        self.0[class as usize] += 1;
    }

    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }
}

impl std::ops::AddAssign for CutCounts {
    fn add_assign(&mut self, o: Self) {
        for k in 0..3 {
            self.0[k] += o.0[k];
        }
    }
}

impl fmt::Display for StencilKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StencilKind::Lattice4 => "lattice4",
            StencilKind::Crofton8 => "crofton8",
            StencilKind::Crofton16 => "crofton16",
        })
    }
}

impl FromStr for StencilKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lattice4" => Ok(StencilKind::Lattice4),
            "crofton8" => Ok(StencilKind::Crofton8),
            "crofton16" => Ok(StencilKind::Crofton16),
            other => Err(Error::InvalidArgument(format!("unknown stencil `{other}`"))),
        }
    }
}

impl fmt::Display for Stencil {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.kind.fmt(f)
    }
}

impl FromStr for Stencil {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(Stencil::new(s.parse()?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Point;

    fn all() -> [Stencil; 3] {
        [Stencil::lattice4(), Stencil::crofton8(), Stencil::crofton16()]
    }

    #[test]
    fn weights_are_positive() {
        for s in all() {
            for &(_, _, c) in s.half_offsets() {
                assert!(s.weight(c) > 0.0, "{s} {c:?}");
            }
        }
    }

    #[test]
    fn unit_density_along_stencil_directions() {
        for s in all() {
            for &(dx, dy, _) in s.half_offsets() {
                // normal of a line running along the offset direction
                let nu = Point::new(-(dy as f64), dx as f64).normalized().unwrap();
                let d = s.half_plane_density(nu);
                assert!((d - 1.0).abs() < 1e-12, "{s} ({dx},{dy}) density {d}");
            }
        }
    }

    #[test]
    fn crofton_anisotropy_is_bounded() {
        for (s, tol) in [(Stencil::crofton8(), 0.09), (Stencil::crofton16(), 0.03)] {
            for k in 0..720 {
                let nu = Point::from_angle(k as f64 * std::f64::consts::PI / 360.0);
                let d = s.half_plane_density(nu);
                assert!((d - 1.0).abs() < tol, "{s} angle {k}: {d}");
            }
        }
    }

    #[test]
    fn rasterized_half_plane_cut_matches_density() {
        // count cut pairs of a discrete half-plane over a wide window
        for s in all() {
            for &(dx, dy) in &[(1i64, 0i64), (1, 1), (2, 1)] {
                let nu = Point::new(dx as f64, dy as f64).normalized().unwrap();
                let inside = |x: i64, y: i64| (x as f64 * nu.x + y as f64 * nu.y) >= 0.0;
                let n = 200i64;
                let mut counts = CutCounts::default();
                for y in -n..n {
                    for x in -n..n {
                        for &(ox, oy, c) in s.half_offsets() {
                            if inside(x, y) != inside(x + ox, y + oy) {
                                counts.add(c);
                            }
                        }
                    }
                }
                // length of the line {x·ν = 0} inside the square window
                let tan = Point::new(-nu.y, nu.x);
                let t = (n as f64 - 0.5) / tan.x.abs().max(tan.y.abs());
                let per_len = s.length(&counts) / (2.0 * t);
                let expect = s.half_plane_density(nu);
                assert!((per_len - expect).abs() < 0.02, "{s} ({dx},{dy}) {per_len} vs {expect}");
            }
        }
    }

    #[test]
    fn names_round_trip() {
        for s in all() {
            assert_eq!(s.to_string().parse::<Stencil>().unwrap(), s);
        }
        assert!("hex6".parse::<Stencil>().is_err());
    }
}
