//! Exhaustive ground truths for small instances.
//!
//! Everything here is evaluated by brute force over all configurations and
//! shares no code with the cut builders or the ratio solver. Configurations
//! are visited in Gray-code order so each step flips one cell and updates the
//! running energy locally; near-optimal candidates are then re-evaluated from
//! scratch before ties are decided.

use ndarray::Array2;

use crate::error::{invalid, Result};
use crate::lattice::Cell;
use crate::maxflow::{Boundary, EnergyMode};
use crate::noise::NoiseField;
use crate::stencil::Stencil;

pub const MAX_GROUND_STATE_CELLS: usize = 25;
pub const MAX_SR_CELLS: usize = 16;
pub const MAX_PERIMETER_CELLS: usize = 25;

/// Relative tolerance for declaring two optimal values tied.
const TIE: f64 = 1e-9;
/// Slack for keeping Gray-code candidates before exact re-evaluation.
const CANDIDATE_SLACK: f64 = 1e-6;

/// A binary labeling problem on `n` cells: `cost(x) = Σ_i unary[i][x_i] +
/// Σ_{(i,j,w)} w·1[x_i ≠ x_j]`, with bit 1 meaning spin `+1`.
struct Labeling {
    unary: Vec<[f64; 2]>,
    pairs: Vec<(usize, usize, f64)>,
    adj: Vec<Vec<(usize, f64)>>,
}

impl Labeling {
    fn new(unary: Vec<[f64; 2]>, pairs: Vec<(usize, usize, f64)>) -> Self {
        let mut adj = vec![Vec::new(); unary.len()];
        for &(i, j, w) in &pairs {
            adj[i].push((j, w));
            adj[j].push((i, w));
        }
        Self { unary, pairs, adj }
    }

    fn cost(&self, mask: u64) -> f64 {
        let bit = |i: usize| ((mask >> i) & 1) as usize;
        let mut e: f64 = (0..self.unary.len()).map(|i| self.unary[i][bit(i)]).sum();
        for &(i, j, w) in &self.pairs {
            if bit(i) != bit(j) {
                e += w;
            }
        }
        e
    }

    /// Minimum cost and all minimizing masks.
    fn minimize(&self) -> (f64, Vec<u64>) {
        let n = self.unary.len();
        let mut mask = 0u64;
        let mut e = self.cost(0);
        let mut best = e;
        let mut cands = vec![0u64];
        for step in 1u64..(1u64 << n) {
            let i = step.trailing_zeros() as usize;
            let old = ((mask >> i) & 1) as usize;
            let new = 1 - old;
            let mut delta = self.unary[i][new] - self.unary[i][old];
            for &(j, w) in &self.adj[i] {
                let bj = ((mask >> j) & 1) as usize;
                delta += w * ((bj != new) as i32 - (bj != old) as i32) as f64;
            }
            mask ^= 1 << i;
            e += delta;
            if e < best - CANDIDATE_SLACK {
                best = e;
                cands.clear();
            }
            if e <= best + CANDIDATE_SLACK {
                best = best.min(e);
                cands.push(mask);
            }
        }
        let exact: Vec<(u64, f64)> = cands.into_iter().map(|m| (m, self.cost(m))).collect();
        let min = exact.iter().map(|&(_, e)| e).fold(f64::INFINITY, f64::min);
        let tol = TIE * min.abs().max(1.0);
        let mut arg: Vec<u64> = exact.into_iter().filter(|&(_, e)| e <= min + tol).map(|(m, _)| m).collect();
        arg.sort_unstable();
        (min, arg)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnumeratedGroundState {
    pub min_energy: f64,
    pub argmins: Vec<Array2<i8>>,
}

/// Exact minimum of the boxed energy over all `2ⁿ` configurations.
pub fn enumerate_ground_state(
    noise: &NoiseField,
    epsilon: f64,
    bc: &Boundary,
    stencil: Stencil,
    mode: EnergyMode,
) -> Result<EnumeratedGroundState> {
    let (w, h) = (noise.width(), noise.height());
    let n = w * h;
    if n > MAX_GROUND_STATE_CELLS {
        return invalid(format!("{n} cells exceed the enumeration limit of {MAX_GROUND_STATE_CELLS}"));
    }
    let k = match mode {
        EnergyMode::Rfim => 4.0,
        EnergyMode::ContinuumBV => 2.0,
    };
    let o = noise.origin();
    let index = |c: Cell| {
        let (dx, dy) = (c.x - o.x, c.y - o.y);
        (dx >= 0 && dy >= 0 && (dx as usize) < w && (dy as usize) < h).then(|| dy as usize * w + dx as usize)
    };
    let mut unary = Vec::with_capacity(n);
    let mut pairs = Vec::new();
    for i in 0..n {
        let c = Cell::new(o.x + (i % w) as i64, o.y + (i / w) as i64);
        let f = epsilon * noise.at(c);
        // [cost as −1, cost as +1]
        let mut u = [f, -f];
        for (dx, dy, wt) in stencil.offsets() {
            let nb = c.offset(dx, dy);
            match index(nb) {
                Some(j) => {
                    if j > i {
                        pairs.push((i, j, k * wt));
                    }
                }
                None => match bc.spin_at(nb) {
                    Some(1) => u[0] += k * wt,
                    Some(_) => u[1] += k * wt,
                    None => {}
                },
            }
        }
        unary.push(u);
    }
    let (min_energy, masks) = Labeling::new(unary, pairs).minimize();
    let argmins = masks
        .into_iter()
        .map(|m| Array2::from_shape_fn((h, w), |(r, c)| if (m >> (r * w + c)) & 1 == 1 { 1 } else { -1 }))
        .collect();
    Ok(EnumeratedGroundState { min_energy, argmins })
}

/// Cut length of a cell set in the whole plane.
fn set_perimeter(cells: &[Cell], mask: u64, stencil: Stencil) -> f64 {
    let inside = |c: Cell| cells.iter().enumerate().any(|(i, &d)| d == c && (mask >> i) & 1 == 1);
    let mut counts = [0u64; 3];
    for (i, &c) in cells.iter().enumerate() {
        if (mask >> i) & 1 == 0 {
            continue;
        }
        for &(dx, dy, class) in stencil.half_offsets() {
            for nb in [c.offset(dx, dy), c.offset(-dx, -dy)] {
                if !inside(nb) {
                    counts[class as usize] += 1;
                }
            }
        }
    }
    stencil.length(&crate::stencil::CutCounts(counts))
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnumeratedRatio {
    pub value: f64,
    pub argmax: Vec<Vec<Cell>>,
}

/// `max |∫_M ξ| / per(M)` over all nonempty subsets `M` of `cells`.
pub fn enumerate_sr(noise: &NoiseField, cells: &[Cell], stencil: Stencil) -> Result<EnumeratedRatio> {
    let n = cells.len();
    if n == 0 {
        return invalid("cell set is empty");
    }
    if n > MAX_SR_CELLS {
        return invalid(format!("{n} cells exceed the enumeration limit of {MAX_SR_CELLS}"));
    }
    let mut values = Vec::with_capacity(n);
    for &c in cells {
        match noise.get(c) {
            Some(v) => values.push(v),
            None => return invalid(format!("cell ({}, {}) outside the noise extent", c.x, c.y)),
        }
    }
    let mut ratios = Vec::with_capacity(1 << n);
    for mask in 1u64..(1u64 << n) {
        let integral: f64 = (0..n).filter(|&i| (mask >> i) & 1 == 1).map(|i| values[i]).sum();
        ratios.push((mask, integral.abs() / set_perimeter(cells, mask, stencil)));
    }
    let value = ratios.iter().map(|&(_, r)| r).fold(0.0, f64::max);
    let tol = TIE * value.max(1e-300);
    let argmax = ratios
        .into_iter()
        .filter(|&(_, r)| r >= value - tol)
        .map(|(m, _)| (0..n).filter(|&i| (m >> i) & 1 == 1).map(|i| cells[i]).collect())
        .collect();
    Ok(EnumeratedRatio { value, argmax })
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnumeratedPerimeter {
    pub min_perimeter: f64,
    /// Minimizing spins of the free cells, in input order.
    pub argmins: Vec<Vec<i8>>,
}

/// Minimal cut length of pairs touching `free` over all spin assignments of
/// `free`, with the exterior frozen to `exterior` (absent cells are skipped).
pub fn enumerate_constrained_perimeter(
    free: &[Cell],
    exterior: impl Fn(Cell) -> Option<i8>,
    stencil: Stencil,
) -> Result<EnumeratedPerimeter> {
    let n = free.len();
    if n > MAX_PERIMETER_CELLS {
        return invalid(format!("{n} cells exceed the enumeration limit of {MAX_PERIMETER_CELLS}"));
    }
    let index = |c: Cell| free.iter().position(|&d| d == c);
    let mut unary = vec![[0.0; 2]; n];
    let mut pairs = Vec::new();
    for (i, &c) in free.iter().enumerate() {
        for (dx, dy, wt) in stencil.offsets() {
            let nb = c.offset(dx, dy);
            match index(nb) {
                Some(j) => {
                    if j > i {
                        pairs.push((i, j, wt));
                    }
                }
                None => match exterior(nb) {
                    Some(1) => unary[i][0] += wt,
                    Some(_) => unary[i][1] += wt,
                    None => {}
                },
            }
        }
    }
    let (min_perimeter, masks) = Labeling::new(unary, pairs).minimize();
    let argmins = masks
        .into_iter()
        .map(|m| (0..n).map(|i| if (m >> i) & 1 == 1 { 1 } else { -1 }).collect())
        .collect();
    Ok(EnumeratedPerimeter { min_perimeter, argmins })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Extent;
    use crate::noise::NoiseKind;

    fn field(h: usize, w: usize, v: Vec<f64>) -> NoiseField {
        NoiseField::from_values(Array2::from_shape_vec((h, w), v).unwrap(), NoiseKind::DiscretizedWN, 0).unwrap()
    }

    #[test]
    fn zero_field_plus_boundary() {
        let noise = NoiseField::zeros(3, 3).unwrap();
        let r = enumerate_ground_state(&noise, 1.0, &Boundary::Plus, Stencil::lattice4(), EnergyMode::Rfim).unwrap();
        assert_eq!(r.min_energy, 0.0);
        assert_eq!(r.argmins, vec![Array2::from_elem((3, 3), 1)]);
    }

    #[test]
    fn single_cell_two_state_evaluation() {
        let noise = field(1, 1, vec![-10.0]);
        let r = enumerate_ground_state(&noise, 1.0, &Boundary::Plus, Stencil::lattice4(), EnergyMode::Rfim).unwrap();
        assert_eq!(r.min_energy, 6.0);
        assert_eq!(r.argmins, vec![Array2::from_elem((1, 1), -1)]);
    }

    #[test]
    fn ratio_examples() {
        let noise = field(2, 2, vec![1.0; 4]);
        let cells: Vec<Cell> = noise.extent().cells().collect();
        let r = enumerate_sr(&noise, &cells, Stencil::lattice4()).unwrap();
        assert_eq!(r.value, 0.5);
        assert_eq!(r.argmax, vec![cells.clone()]);

        let mut v = vec![0.0; 16];
        v[5] = -3.0;
        let noise = field(4, 4, v);
        let cells: Vec<Cell> = noise.extent().cells().collect();
        let r = enumerate_sr(&noise, &cells, Stencil::lattice4()).unwrap();
        assert_eq!(r.value, 0.75);
        assert_eq!(r.argmax, vec![vec![Cell::new(1, 1)]]);

        let zero = NoiseField::zeros(3, 3).unwrap();
        let cells: Vec<Cell> = zero.extent().cells().collect();
        assert_eq!(enumerate_sr(&zero, &cells, Stencil::crofton8()).unwrap().value, 0.0);
    }

    #[test]
    fn constrained_perimeter_examples() {
        let ball: Vec<Cell> = Extent::new(0, 0, 4, 4).cells().collect();
        let r = enumerate_constrained_perimeter(&ball, |_| Some(1), Stencil::lattice4()).unwrap();
        assert_eq!(r.min_perimeter, 0.0);
        assert_eq!(r.argmins, vec![vec![1; 16]]);

        // half-plane trace x ≥ 2 is +1: the straight crossing cuts four unit edges
        let r = enumerate_constrained_perimeter(&ball, |c| Some(if c.x >= 2 { 1 } else { -1 }), Stencil::lattice4())
            .unwrap();
        assert_eq!(r.min_perimeter, 4.0);
        let straight: Vec<i8> = ball.iter().map(|c| if c.x >= 2 { 1 } else { -1 }).collect();
        assert_eq!(r.argmins, vec![straight]);
    }

    #[test]
    fn size_limits() {
        let big = NoiseField::zeros(6, 5).unwrap();
        assert!(enumerate_ground_state(&big, 1.0, &Boundary::Plus, Stencil::lattice4(), EnergyMode::Rfim).is_err());
        let cells: Vec<Cell> = big.extent().cells().take(17).collect();
        assert!(enumerate_sr(&big, &cells, Stencil::lattice4()).is_err());
    }
}
