//! The weak norm `S_R(x) = sup_M |∫_M ξ| / per(M)` and its pinned suprema.
//!
//! `M` ranges over nonempty unions of cells of the discrete ball `B_R(x)`;
//! `per(M)` is the stencil cut length of `M` in the whole plane. For each sign
//! `s = ±1` the ratio `∫_M sξ / per(M)` is maximized by Dinkelbach's
//! iteration: at parameter `λ` the problem `max_M ∫_M sξ − λ per(M)` is a
//! minimum cut, and `λ` is replaced by the ratio of its optimizer until the
//! optimum drops to `≤ 10⁻¹²`. The canonical cut returns the smallest
//! optimizer, so a zero optimum yields the empty set and stops the iteration.
//! The iteration starts from the best single cell (or a supplied warm set),
//! so every `λ` in the trace is the ratio of an actual set.

use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::lattice::{disc_cells, Cell, Extent, Point};
use crate::maxflow::{default_solver, solve_region, FrozenEncoding, RegionProblem};
use crate::noise::{self, NoiseField, NoiseKind};
use crate::rng::derive_seed;
use crate::stats::Summary;
use crate::stencil::{CutCounts, Stencil};

/// Stop once `max_M ∫_M sξ − λ per(M)` is at most this.
pub const DINKELBACH_TOL: f64 = 1e-12;
/// Relative margin by which threshold tests err towards "exceeds".
const THRESHOLD_MARGIN: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct WeakNormResult {
    pub value: f64,
    pub optimizer: Vec<Cell>,
    pub perimeter: f64,
    /// `∫_M ξ` of the optimizer (signed).
    pub integral: f64,
    pub iterations: usize,
    pub sign: i8,
    /// Dinkelbach parameters of the attaining sign, strictly increasing.
    pub lambdas: Vec<f64>,
}

/// Membership test over a bounding box of the ball.
struct BallIndex {
    extent: Extent,
    member: Vec<bool>,
}

impl BallIndex {
    fn new(ball: &[Cell], pad: i64) -> Self {
        let x0 = ball.iter().map(|c| c.x).min().unwrap() - pad;
        let y0 = ball.iter().map(|c| c.y).min().unwrap() - pad;
        let x1 = ball.iter().map(|c| c.x).max().unwrap() + pad;
        let y1 = ball.iter().map(|c| c.y).max().unwrap() + pad;
        let extent = Extent::new(x0, y0, (x1 - x0 + 1) as usize, (y1 - y0 + 1) as usize);
        Self { extent, member: vec![false; extent.len()] }
    }

    fn set(&mut self, cells: &[Cell], v: bool) {
        for &c in cells {
            let i = self.extent.index(c).unwrap();
            self.member[i] = v;
        }
    }

    fn contains(&self, c: Cell) -> bool {
        self.extent.index(c).is_some_and(|i| self.member[i])
    }
}

/// Stencil cut length of a cell set in the plane.
pub fn set_perimeter(cells: &[Cell], stencil: Stencil) -> f64 {
    if cells.is_empty() {
        return 0.0;
    }
    let mut idx = BallIndex::new(cells, stencil.reach());
    idx.set(cells, true);
    perimeter_indexed(cells, &idx, stencil)
}

fn perimeter_indexed(cells: &[Cell], idx: &BallIndex, stencil: Stencil) -> f64 {
    let mut counts = CutCounts::default();
    for &c in cells {
        for &(dx, dy, class) in stencil.half_offsets() {
            if !idx.contains(c.offset(dx, dy)) {
                counts.add(class);
            }
            if !idx.contains(c.offset(-dx, -dy)) {
                counts.add(class);
            }
        }
    }
    stencil.length(&counts)
}

struct SignedRatio {
    value: f64,
    set: Vec<Cell>,
    integral: f64,
    perimeter: f64,
    lambdas: Vec<f64>,
}

struct Ball<'a> {
    noise: &'a NoiseField,
    cells: Vec<Cell>,
    stencil: Stencil,
    scratch: BallIndex,
}

impl<'a> Ball<'a> {
    fn new(noise: &'a NoiseField, cells: Vec<Cell>, stencil: Stencil) -> Result<Self> {
        if cells.is_empty() {
            return invalid("ball is empty");
        }
        let extent = noise.extent();
        if let Some(c) = cells.iter().find(|&&c| !extent.contains(c)) {
            return invalid(format!("ball cell ({}, {}) lies outside the noise extent", c.x, c.y));
        }
        let scratch = BallIndex::new(&cells, stencil.reach());
        Ok(Self { noise, cells, stencil, scratch })
    }

    fn measure(&mut self, set: &[Cell], sign: f64) -> (f64, f64) {
        let integral: f64 = set.iter().map(|&c| sign * self.noise.at(c)).sum();
        self.scratch.set(set, true);
        let per = perimeter_indexed(set, &self.scratch, self.stencil);
        self.scratch.set(set, false);
        (integral, per)
    }

    /// Optimizer of `max_M ∫_M sξ − λ per(M)`, smallest among ties.
    fn linearized(&self, sign: f64, lambda: f64) -> Result<Vec<Cell>> {
        let unary = |c: Cell| (-sign * self.noise.at(c), 0.0);
        let frozen = |_: Cell| Some(-1i8);
        let problem = RegionProblem {
            free: &self.cells,
            stencil: self.stencil,
            pair_weight: lambda,
            unary: &unary,
            frozen: &frozen,
            encoding: FrozenEncoding::Folded,
        };
        let sol = solve_region(&problem, default_solver())?;
        Ok(self.cells.iter().zip(&sol.spins).filter(|(_, &s)| s > 0).map(|(&c, _)| c).collect())
    }

    fn dinkelbach(&mut self, sign: f64, warm: Option<&[Cell]>) -> Result<Option<SignedRatio>> {
        let cell_per = self.stencil.cell_perimeter();
        let mut best: Option<(f64, Vec<Cell>, f64, f64)> = None;
        for &c in &self.cells {
            let v = sign * self.noise.at(c);
            if v > 0.0 && best.as_ref().is_none_or(|b| v / cell_per > b.0) {
                best = Some((v / cell_per, vec![c], v, cell_per));
            }
        }
        if let Some(w) = warm {
            let w: Vec<Cell> = w.iter().copied().filter(|&c| self.scratch.extent.contains(c)).collect();
            let inside: Vec<Cell> = {
                self.scratch.set(&self.cells, true);
                let v = w.iter().copied().filter(|&c| self.scratch.contains(c)).collect();
                self.scratch.set(&self.cells, false);
                v
            };
            if !inside.is_empty() {
                let (i, p) = self.measure(&inside, sign);
                if i > 0.0 && best.as_ref().is_none_or(|b| i / p > b.0) {
                    best = Some((i / p, inside, i, p));
                }
            }
        }
        let Some((mut lambda, mut set, mut integral, mut perimeter)) = best else {
            return Ok(None);
        };
        let mut lambdas = vec![lambda];
        loop {
            let m = self.linearized(sign, lambda)?;
            if m.is_empty() {
                break;
            }
            let (i, p) = self.measure(&m, sign);
            if i - lambda * p <= DINKELBACH_TOL {
                break;
            }
            let r = i / p;
            if r <= lambda {
                break;
            }
            lambda = r;
            lambdas.push(r);
            set = m;
            integral = i;
            perimeter = p;
        }
        Ok(Some(SignedRatio { value: lambda, set, integral, perimeter, lambdas }))
    }

    /// Whether some nonempty `M` has `∫_M sξ > θ(1 − 10⁻⁹) per(M)` for either sign.
    fn exceeds(&mut self, theta: f64) -> Result<bool> {
        let theta = theta * (1.0 - THRESHOLD_MARGIN);
        for sign in [1.0, -1.0] {
            if theta <= 0.0 {
                if self.cells.iter().any(|&c| sign * self.noise.at(c) > 0.0) {
                    return Ok(true);
                }
                continue;
            }
            let m = self.linearized(sign, theta)?;
            if !m.is_empty() {
                let (i, p) = self.measure(&m, sign);
                if i - theta * p > 0.0 {
                    return Ok(true);
                }
            }
        }
        Ok(false)
    }

    fn s_r(&mut self, warm: Option<&[Cell]>) -> Result<WeakNormResult> {
        let pos = self.dinkelbach(1.0, warm)?;
        let neg = self.dinkelbach(-1.0, warm)?;
        let pick = match (pos, neg) {
            (Some(p), Some(n)) => Some(if n.value > p.value { (n, -1) } else { (p, 1) }),
            (Some(p), None) => Some((p, 1)),
            (None, Some(n)) => Some((n, -1)),
            (None, None) => None,
        };
        Ok(match pick {
            Some((r, sign)) => WeakNormResult {
                value: r.value,
                iterations: r.lambdas.len(),
                optimizer: r.set,
                perimeter: r.perimeter,
                integral: sign as f64 * r.integral,
                sign,
                lambdas: r.lambdas,
            },
            None => {
                // ξ ≡ 0 on the ball: report the cell nearest the centre
                let c = self.cells[self.cells.len() / 2];
                WeakNormResult {
                    value: 0.0,
                    optimizer: vec![c],
                    perimeter: self.stencil.cell_perimeter(),
                    integral: 0.0,
                    iterations: 0,
                    sign: 1,
                    lambdas: Vec::new(),
                }
            }
        })
    }
}

/// Exact `S_R` on the ball `B_R(center)`.
pub fn s_r(noise: &NoiseField, radius: f64, center: Cell, stencil: Stencil) -> Result<WeakNormResult> {
    s_r_warm(noise, radius, center, stencil, None)
}

/// [`s_r`] with the Dinkelbach iteration seeded by a known set.
pub fn s_r_warm(
    noise: &NoiseField,
    radius: f64,
    center: Cell,
    stencil: Stencil,
    warm: Option<&[Cell]>,
) -> Result<WeakNormResult> {
    if !(radius >= 1.0) {
        return invalid(format!("radius must be at least 1, got {radius}"));
    }
    Ball::new(noise, disc_cells(center.center(), radius), stencil)?.s_r(warm)
}

/// Exact maximal ratio over nonempty subsets of an arbitrary cell set.
pub fn max_ratio(noise: &NoiseField, cells: &[Cell], stencil: Stencil) -> Result<WeakNormResult> {
    Ball::new(noise, cells.to_vec(), stencil)?.s_r(None)
}

/// Whether `S_r` on the ball of radius `radius` around the point `center`
/// exceeds `theta`. Values within a relative `10⁻⁹` of `theta` count as
/// exceeding.
pub fn exceeds(noise: &NoiseField, radius: f64, center: Point, stencil: Stencil, theta: f64) -> Result<bool> {
    Ball::new(noise, disc_cells(center, radius), stencil)?.exceeds(theta)
}

/// Dyadic scales `2, 4, …, ≤ r_max`.
pub fn dyadic_scales(r_max: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut r = 2.0;
    while r <= r_max {
        out.push(r);
        r *= 2.0;
    }
    out
}

pub fn scale_weight(r: f64) -> f64 {
    r.ln().powf(-0.75)
}

/// `(ln |x|₊)^{-1/2}` with `|x|₊ = max(|x|, 2)`.
pub fn space_weight(dist: f64) -> f64 {
    dist.max(2.0).ln().powf(-0.5)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScaleValue {
    pub radius: f64,
    pub s_r: f64,
    pub weighted: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PinnedScales {
    pub value: f64,
    pub per_scale: Vec<ScaleValue>,
}

/// `sup_R (ln R)^{-3/4} S_R(center)` over dyadic `R ≤ r_max`.
pub fn pinned_sup_scales(noise: &NoiseField, center: Cell, r_max: f64, stencil: Stencil) -> Result<PinnedScales> {
    if !(r_max >= 2.0) {
        return invalid("r_max must be at least 2");
    }
    let mut per_scale = Vec::new();
    let mut warm: Option<Vec<Cell>> = None;
    for r in dyadic_scales(r_max) {
        let res = s_r_warm(noise, r, center, stencil, warm.as_deref())?;
        per_scale.push(ScaleValue { radius: r, s_r: res.value, weighted: scale_weight(r) * res.value });
        warm = Some(res.optimizer);
    }
    let value = per_scale.iter().map(|s| s.weighted).fold(0.0, f64::max);
    Ok(PinnedScales { value, per_scale })
}

#[derive(Clone, Debug, PartialEq)]
pub struct PinnedSpace {
    pub value: f64,
    /// Base point and scale attaining the supremum.
    pub argmax: (Cell, f64),
    /// Number of exact `S_R` evaluations.
    pub exact_evaluations: usize,
    pub threshold_tests: usize,
}

/// Side of the square tiles used for group bounds.
const TILE: i64 = 4;

/// `sup_{|x| ≤ W} (ln|x|₊)^{-1/2} sup_R (ln R)^{-3/4} S_R(center + x)` over
/// lattice offsets `x` and dyadic `R ≤ r_max`.
///
/// The supremum is exact. Most `(x, R)` pairs are discarded by a threshold
/// test against the running maximum; whole `4 × 4` tiles of base points are
/// discarded at once through `S_R(x) ≤ S_{R+ρ}(y)` for the tile centre `y`,
/// `ρ` the tile radius, whenever that larger ball fits in the field.
pub fn pinned_sup_space(noise: &NoiseField, center: Cell, r_max: f64, half_width: usize, stencil: Stencil) -> Result<PinnedSpace> {
    if !(r_max >= 2.0) {
        return invalid("r_max must be at least 2");
    }
    let w = half_width as i64;
    let extent = noise.extent();
    let fits = |p: Point, r: f64| disc_cells(p, r).iter().all(|&c| extent.contains(c));
    let points: Vec<Cell> = disc_cells(Point::new(0.0, 0.0), half_width as f64)
        .into_iter()
        .map(|o| center.offset(o.x, o.y))
        .collect();
    for &x in &points {
        if !fits(x.center(), r_max.floor().max(2.0)) {
            return invalid("noise extent too small for the requested supremum");
        }
    }
    let scales = dyadic_scales(r_max);
    let weight = |x: Cell| space_weight((x.center() - center.center()).norm());

    // seed the running maximum with the full scale profile at the centre
    let base = pinned_sup_scales(noise, center, r_max, stencil)?;
    let mut best = weight(center) * base.value;
    let best_scale = base.per_scale.iter().fold((0.0, 2.0), |acc, s| if s.weighted > acc.0 { (s.weighted, s.radius) } else { acc });
    let mut argmax = (center, best_scale.1);
    let mut exact = scales.len();
    let mut tests = 0;

    let mut tiles: Vec<(Point, Vec<Cell>)> = Vec::new();
    let mut ty = -w;
    while ty <= w {
        let mut tx = -w;
        while tx <= w {
            let members: Vec<Cell> = points
                .iter()
                .copied()
                .filter(|p| {
                    let (dx, dy) = (p.x - center.x, p.y - center.y);
                    dx >= tx && dx < tx + TILE && dy >= ty && dy < ty + TILE && *p != center
                })
                .collect();
            if !members.is_empty() {
                let mid = TILE as f64 / 2.0 - 0.5;
                let y = Point::new((center.x + tx) as f64 + mid, (center.y + ty) as f64 + mid);
                tiles.push((y, members));
            }
            tx += TILE;
        }
        ty += TILE;
    }

    for &r in &scales {
        let u = scale_weight(r);
        for (y, members) in &tiles {
            let rho = members.iter().map(|m| (m.center() - *y).norm()).fold(0.0, f64::max);
            let wmax = members.iter().map(|&m| weight(m)).fold(0.0, f64::max);
            if fits(*y, r + rho) {
                tests += 1;
                if !exceeds(noise, r + rho, *y, stencil, best / (wmax * u))? {
                    continue;
                }
            }
            for &x in members {
                let wx = weight(x);
                tests += 1;
                if !exceeds(noise, r, x.center(), stencil, best / (wx * u))? {
                    continue;
                }
                exact += 1;
                let v = wx * u * s_r(noise, r, x, stencil)?.value;
                if v > best {
                    best = v;
                    argmax = (x, r);
                }
            }
        }
    }
    Ok(PinnedSpace { value: best, argmax, exact_evaluations: exact, threshold_tests: tests })
}

/// Side length of the square field used for a ball of radius `r`.
pub fn field_side(r: f64) -> usize {
    2 * r.ceil() as usize + 1
}

#[derive(Clone, Debug, PartialEq)]
pub struct MonteCarloSr {
    pub samples: Vec<f64>,
    pub summary: Summary,
    /// `mean / (ln R)^{3/4}`.
    pub normalized_mean: f64,
}

/// `S_R` at the centre of independent square fields; sample `i` uses the
/// seed `derive_seed(master_seed, i)`, so the result does not depend on the
/// number of worker threads.
pub fn montecarlo_sr(radius: f64, n_samples: usize, kind: NoiseKind, master_seed: u64, stencil: Stencil) -> Result<MonteCarloSr> {
    if n_samples < 2 {
        return invalid("Monte Carlo needs at least two samples");
    }
    let side = field_side(radius);
    let samples: Vec<f64> = (0..n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let f = noise::sample(kind, side, side, derive_seed(master_seed, i))?;
            Ok(s_r(&f, radius, f.extent().center_cell(), stencil)?.value)
        })
        .collect::<Result<_>>()?;
    let summary = Summary::from_samples(&samples)?;
    let normalized_mean = summary.mean / radius.ln().powf(0.75);
    Ok(MonteCarloSr { samples, summary, normalized_mean })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn field(w: usize, h: usize, f: impl Fn(usize, usize) -> f64) -> NoiseField {
        NoiseField::from_values(Array2::from_shape_fn((h, w), |(r, c)| f(c, r)), NoiseKind::DiscretizedWN, 0).unwrap()
    }

    #[test]
    fn single_bump_gives_quarter() {
        let f = field(9, 9, |x, y| if (x, y) == (4, 5) { 1.0 } else { 0.0 });
        let r = s_r(&f, 3.0, Cell::new(4, 4), Stencil::lattice4()).unwrap();
        assert_eq!(r.value, 0.25);
        assert_eq!(r.optimizer, vec![Cell::new(4, 5)]);
        assert_eq!(r.perimeter, 4.0);
    }

    #[test]
    fn block_gives_half() {
        let f = field(9, 9, |x, y| if (3..5).contains(&x) && (3..5).contains(&y) { 1.0 } else { 0.0 });
        let r = s_r(&f, 3.0, Cell::new(4, 4), Stencil::lattice4()).unwrap();
        assert_eq!(r.value, 0.5);
        assert_eq!(r.optimizer.len(), 4);
    }

    #[test]
    fn negative_block_is_found_with_sign() {
        let f = field(9, 9, |x, y| if (3..5).contains(&x) && (3..5).contains(&y) { -2.0 } else { 0.1 });
        let r = s_r(&f, 3.0, Cell::new(4, 4), Stencil::lattice4()).unwrap();
        assert_eq!(r.sign, -1);
        assert!((r.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_field() {
        let f = NoiseField::zeros(7, 7).unwrap();
        let r = s_r(&f, 2.0, Cell::new(3, 3), Stencil::crofton8()).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(r.optimizer.len(), 1);
    }

    #[test]
    fn ball_must_fit() {
        let f = NoiseField::zeros(5, 5).unwrap();
        assert!(s_r(&f, 3.0, Cell::new(2, 2), Stencil::lattice4()).is_err());
        assert!(s_r(&f, 0.5, Cell::new(2, 2), Stencil::lattice4()).is_err());
    }

    #[test]
    fn dyadic_list() {
        assert_eq!(dyadic_scales(64.0), vec![2.0, 4.0, 8.0, 16.0, 32.0, 64.0]);
        assert_eq!(dyadic_scales(3.0), vec![2.0]);
    }
}
