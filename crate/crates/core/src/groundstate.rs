//! Zero-temperature ground states, the order parameter and local audits.
//!
//! The boxed energy of a configuration `σ` on a box `Q` with exterior
//! spins `τ` is
//!
//! ```text
//! E(σ) = k · Σ_{stencil pairs touching Q} w_xy · 1[σ_x ≠ σ_y] − ε Σ_{x∈Q} ξ_x σ_x
//! ```
//!
//! with `k = 4` in RFIM mode and `k = 2` in continuum mode (see
//! [`EnergyMode`]). Pairs reaching outside the box use `τ`; with a free
//! boundary they are dropped. Ground states are the canonical minimum cuts of
//! [`build_energy_graph`], so they are deterministic and the plus-boundary
//! state dominates the minus-boundary state cell by cell.

use ndarray::Array2;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::lattice::{disc_cells, Cell, Extent};
use crate::maxflow::{
    build_energy_graph, default_solver, region_energy, solve_min_cut_with, solve_region,
    Boundary, EnergyMode, FrozenEncoding, MaxFlowSolver, RegionProblem,
};
use crate::noise::{self, NoiseField, NoiseKind};
use crate::rng::{derive_seed, stream_rng, STREAM_AUDIT};
use crate::stencil::Stencil;

/// Energy improvements above this count as violations of local minimality.
pub const VIOLATION_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Provenance {
    pub seed: u64,
    pub noise_kind: NoiseKind,
    pub epsilon: f64,
    pub stencil: Stencil,
    pub mode: EnergyMode,
}

/// A `±1` configuration on a box together with its exterior.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinField {
    values: Array2<i8>,
    origin: Cell,
    boundary: Boundary,
    provenance: Option<Provenance>,
}

impl SpinField {
    pub fn new(values: Array2<i8>, boundary: Boundary) -> Result<Self> {
        if values.is_empty() {
            return invalid("spin field must be nonempty");
        }
        if values.iter().any(|&s| s != 1 && s != -1) {
            return invalid("spins must be ±1");
        }
        Ok(Self { values, origin: Cell::new(0, 0), boundary, provenance: None })
    }

    pub fn from_fn(extent: Extent, boundary: Boundary, f: impl Fn(Cell) -> i8) -> Result<Self> {
        let values = Array2::from_shape_fn((extent.height, extent.width), |(r, c)| {
            f(Cell::new(extent.x0 + c as i64, extent.y0 + r as i64))
        });
        Ok(Self::new(values, boundary)?.with_origin(Cell::new(extent.x0, extent.y0)))
    }

    pub fn with_origin(mut self, origin: Cell) -> Self {
        self.origin = origin;
        self
    }

    pub fn with_provenance(mut self, p: Provenance) -> Self {
        self.provenance = Some(p);
        self
    }

    pub fn values(&self) -> &Array2<i8> {
        &self.values
    }

    pub fn boundary(&self) -> &Boundary {
        &self.boundary
    }

    pub fn provenance(&self) -> Option<&Provenance> {
        self.provenance.as_ref()
    }

    /// Stencil of the provenance, `lattice4` if unknown.
    pub fn stencil(&self) -> Stencil {
        self.provenance.map_or_else(Stencil::lattice4, |p| p.stencil)
    }

    pub fn width(&self) -> usize {
        self.values.ncols()
    }

    pub fn height(&self) -> usize {
        self.values.nrows()
    }

    pub fn extent(&self) -> Extent {
        Extent::new(self.origin.x, self.origin.y, self.width(), self.height())
    }

    /// Central cell of the box.
    pub fn center_cell(&self) -> Cell {
        self.extent().center_cell()
    }

    /// Spin inside the box.
    pub fn get(&self, c: Cell) -> Option<i8> {
        self.extent().contains(c).then(|| self.at(c))
    }

    #[inline]
    pub fn at(&self, c: Cell) -> i8 {
        self.values[[(c.y - self.origin.y) as usize, (c.x - self.origin.x) as usize]]
    }

    /// Spin inside the box or, outside it, the boundary spin.
    pub fn spin(&self, c: Cell) -> Option<i8> {
        self.get(c).or_else(|| self.boundary.spin_at(c))
    }

    pub fn set(&mut self, c: Cell, s: i8) {
        assert!(s == 1 || s == -1);
        let (r, col) = ((c.y - self.origin.y) as usize, (c.x - self.origin.x) as usize);
        self.values[[r, col]] = s;
    }

    /// Global spin flip, including the exterior.
    pub fn negated(&self) -> Self {
        let mut out = self.clone();
        out.values.mapv_inplace(|s| -s);
        out.boundary = self.boundary.negated();
        out
    }

    pub fn dominates(&self, other: &SpinField) -> bool {
        self.values.iter().zip(other.values.iter()).all(|(a, b)| a >= b)
    }
}

/// Boxed energy of `spin` evaluated term by term.
pub fn energy(spin: &SpinField, noise: &NoiseField, epsilon: f64, stencil: Stencil, mode: EnergyMode) -> Result<f64> {
    if spin.extent() != noise.extent() {
        return invalid("spin and noise extents differ");
    }
    let mut field = 0.0;
    let mut pairs = 0.0;
    for c in spin.extent().cells() {
        let s = spin.at(c);
        field += noise.at(c) * s as f64;
        for &(dx, dy, class) in stencil.half_offsets() {
            let w = stencil.weight(class);
            let fwd = c.offset(dx, dy);
            if let Some(t) = spin.spin(fwd) {
                if t != s {
                    pairs += w;
                }
            }
            let back = c.offset(-dx, -dy);
            if spin.get(back).is_none() {
                if let Some(t) = spin.boundary.spin_at(back) {
                    if t != s {
                        pairs += w;
                    }
                }
            }
        }
    }
    Ok(mode.pair_factor() * pairs - epsilon * field)
}

pub fn ground_state(
    noise: &NoiseField,
    epsilon: f64,
    bc: &Boundary,
    stencil: Stencil,
    mode: EnergyMode,
) -> Result<SpinField> {
    ground_state_with(default_solver(), noise, epsilon, bc, stencil, mode)
}

pub fn ground_state_with(
    solver: &dyn MaxFlowSolver,
    noise: &NoiseField,
    epsilon: f64,
    bc: &Boundary,
    stencil: Stencil,
    mode: EnergyMode,
) -> Result<SpinField> {
    let eg = build_energy_graph(noise, epsilon, bc, stencil, mode)?;
    let cut = solve_min_cut_with(solver, eg.graph())?;
    if !cut.value.is_finite() {
        return Err(Error::Precondition("boundary constraints are infeasible".into()));
    }
    let values = eg.decode(&cut);
    Ok(SpinField::new(values, bc.clone())?
        .with_origin(noise.origin())
        .with_provenance(Provenance { seed: noise.seed(), noise_kind: noise.kind(), epsilon, stencil, mode }))
}

/// Ground states for the plus and minus boundary on the same noise.
///
/// # Panics
///
/// If the plus state fails to dominate the minus state, which would mean the
/// solver returned a non-canonical cut.
pub fn paired_ground_states(
    solver: &dyn MaxFlowSolver,
    noise: &NoiseField,
    epsilon: f64,
    stencil: Stencil,
    mode: EnergyMode,
) -> Result<(SpinField, SpinField)> {
    let plus = ground_state_with(solver, noise, epsilon, &Boundary::Plus, stencil, mode)?;
    let minus = ground_state_with(solver, noise, epsilon, &Boundary::Minus, stencil, mode)?;
    assert!(plus.dominates(&minus), "monotone coupling violated (seed {})", noise.seed());
    Ok((plus, minus))
}

/// Model choices for order-parameter runs.
#[derive(Clone, Copy)]
pub struct ModelConfig {
    pub noise_kind: NoiseKind,
    pub stencil: Stencil,
    pub mode: EnergyMode,
    pub solver: &'static dyn MaxFlowSolver,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            noise_kind: NoiseKind::DiscretizedWN,
            stencil: Stencil::lattice4(),
            mode: EnergyMode::Rfim,
            solver: default_solver(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrderParameter {
    pub m_hat: f64,
    pub std_err: f64,
    pub n_samples: usize,
}

impl OrderParameter {
    pub fn from_count(hits: usize, n: usize) -> Self {
        let m = hits as f64 / n as f64;
        Self { m_hat: m, std_err: (m * (1.0 - m) / n as f64).sqrt(), n_samples: n }
    }
}

/// Whether the central spin of an `L × L` box depends on the boundary for
/// the noise drawn from `seed`.
pub fn origin_differs(cfg: &ModelConfig, epsilon: f64, l: usize, seed: u64) -> Result<bool> {
    let noise = noise::sample(cfg.noise_kind, l, l, seed)?;
    let (plus, minus) = paired_ground_states(cfg.solver, &noise, epsilon, cfg.stencil, cfg.mode)?;
    let o = plus.center_cell();
    Ok(plus.at(o) != minus.at(o))
}

pub fn order_parameter(epsilon: f64, l: usize, n_samples: usize, master_seed: u64) -> Result<OrderParameter> {
    order_parameter_with(&ModelConfig::default(), epsilon, l, n_samples, master_seed)
}

/// `m̂(L)`: fraction of samples whose central spin differs between the plus
/// and minus boundary, with its binomial standard error. Sample `i` uses the
/// seed `derive_seed(master_seed, i)`.
pub fn order_parameter_with(
    cfg: &ModelConfig,
    epsilon: f64,
    l: usize,
    n_samples: usize,
    master_seed: u64,
) -> Result<OrderParameter> {
    if n_samples == 0 {
        return invalid("order parameter needs at least one sample");
    }
    if l == 0 {
        return invalid("box size must be positive");
    }
    let flags: Vec<bool> = (0..n_samples as u64)
        .into_par_iter()
        .map(|i| origin_differs(cfg, epsilon, l, derive_seed(master_seed, i)))
        .collect::<Result<_>>()?;
    Ok(OrderParameter::from_count(flags.iter().filter(|&&f| f).count(), n_samples))
}

#[derive(Clone, Debug, PartialEq)]
pub enum CorrelationLength {
    Reached { l_star: usize, table: Vec<(usize, OrderParameter)> },
    NotReached { table: Vec<(usize, OrderParameter)> },
}

impl CorrelationLength {
    pub fn table(&self) -> &[(usize, OrderParameter)] {
        match self {
            CorrelationLength::Reached { table, .. } | CorrelationLength::NotReached { table } => table,
        }
    }

    /// First row of an increasing table with `m̂ + 2·se < p₀`.
    pub fn from_table(table: Vec<(usize, OrderParameter)>, p0: f64) -> Self {
        match table.iter().find(|(_, m)| m.m_hat + 2.0 * m.std_err < p0) {
            Some(&(l_star, _)) => CorrelationLength::Reached { l_star, table },
            None => CorrelationLength::NotReached { table },
        }
    }

    pub fn l_star(&self) -> Option<usize> {
        match self {
            CorrelationLength::Reached { l_star, .. } => Some(*l_star),
            CorrelationLength::NotReached { .. } => None,
        }
    }
}

/// Smallest box size of the grid with `m̂ + 2·se < p₀`. The sample count
/// must be large enough for the standard error to resolve `p₀`; that is left
/// to the caller. The full table is always computed.
pub fn correlation_length(
    cfg: &ModelConfig,
    epsilon: f64,
    p0: f64,
    l_grid: &[usize],
    n_samples: usize,
    master_seed: u64,
) -> Result<CorrelationLength> {
    if l_grid.is_empty() {
        return invalid("box-size grid is empty");
    }
    if l_grid.windows(2).any(|w| w[0] >= w[1]) {
        return invalid("box-size grid must be increasing");
    }
    if !(p0 > 0.0 && p0 < 1.0) {
        return invalid("threshold must lie in (0, 1)");
    }
    let mut table = Vec::with_capacity(l_grid.len());
    for &l in l_grid {
        table.push((l, order_parameter_with(cfg, epsilon, l, n_samples, master_seed)?));
    }
    Ok(CorrelationLength::from_table(table, p0))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub center: Cell,
    pub radius: f64,
    /// Energy decrease achieved by re-optimizing inside the ball.
    pub improvement: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct AuditReport {
    pub violations: Vec<Violation>,
    pub checked: usize,
    pub skipped: usize,
}

/// Largest energy decrease available by changing `spin` inside the ball
/// `B_radius(center)` with everything else frozen. Errors if the ball leaves
/// the box.
pub fn ball_improvement(
    spin: &SpinField,
    noise: &NoiseField,
    epsilon: f64,
    stencil: Stencil,
    mode: EnergyMode,
    center: Cell,
    radius: f64,
) -> Result<f64> {
    let ball = disc_cells(center.center(), radius);
    let extent = spin.extent();
    if ball.iter().any(|&c| !extent.contains(c)) {
        return invalid("ball leaves the box");
    }
    let unary = |c: Cell| {
        let h = epsilon * noise.at(c);
        (-h, h)
    };
    let frozen = |c: Cell| spin.spin(c);
    let problem = RegionProblem {
        free: &ball,
        stencil,
        pair_weight: mode.pair_factor(),
        unary: &unary,
        frozen: &frozen,
        encoding: FrozenEncoding::Folded,
    };
    let current: Vec<i8> = ball.iter().map(|&c| spin.at(c)).collect();
    let before = region_energy(&problem, &current)?;
    let best = solve_region(&problem, default_solver())?;
    let after = region_energy(&problem, &best.spins)?;
    Ok(before - after)
}

/// Re-optimizes `spin` inside `n_balls` random balls (radius uniform in
/// `[1, max(1, min(w, h)/4)]`, centre uniform in the box) and reports every
/// strict improvement above [`VIOLATION_TOL`]. Balls leaving the box are
/// skipped and counted.
pub fn local_minimality_audit(
    spin: &SpinField,
    noise: &NoiseField,
    epsilon: f64,
    n_balls: usize,
    seed: u64,
) -> Result<AuditReport> {
    let (stencil, mode) = spin.provenance().map_or((Stencil::lattice4(), EnergyMode::Rfim), |p| (p.stencil, p.mode));
    let extent = spin.extent();
    let r_max = ((extent.width.min(extent.height) / 4) as f64).max(1.0);
    let mut rng = stream_rng(seed, STREAM_AUDIT);
    let mut report = AuditReport::default();
    for _ in 0..n_balls {
        let radius = rng.random_range(1.0..=r_max);
        let center = extent.cell_at(rng.random_range(0..extent.len()));
        let inside = disc_cells(center.center(), radius).iter().all(|&c| extent.contains(c));
        if !inside {
            report.skipped += 1;
            continue;
        }
        report.checked += 1;
        let gain = ball_improvement(spin, noise, epsilon, stencil, mode, center, radius)?;
        if gain > VIOLATION_TOL {
            report.violations.push(Violation { center, radius, improvement: gain });
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::sample_discretized_wn;

    #[test]
    fn zero_noise_plus_boundary() {
        let noise = NoiseField::zeros(6, 6).unwrap();
        let s = ground_state(&noise, 1.0, &Boundary::Plus, Stencil::crofton8(), EnergyMode::ContinuumBV).unwrap();
        assert!(s.values().iter().all(|&v| v == 1));
    }

    #[test]
    fn energy_of_single_cell_states() {
        let noise = NoiseField::from_values(Array2::from_elem((1, 1), -10.0), NoiseKind::DiscretizedWN, 0).unwrap();
        let plus = SpinField::new(Array2::from_elem((1, 1), 1), Boundary::Plus).unwrap();
        let minus = plus.clone().negated();
        let minus = SpinField::new(minus.values().clone(), Boundary::Plus).unwrap();
        let ep = energy(&plus, &noise, 1.0, Stencil::lattice4(), EnergyMode::Rfim).unwrap();
        let em = energy(&minus, &noise, 1.0, Stencil::lattice4(), EnergyMode::Rfim).unwrap();
        assert_eq!((ep, em), (10.0, 6.0));
    }

    #[test]
    fn cut_energy_matches_direct_energy() {
        for seed in 0..20 {
            let noise = sample_discretized_wn(7, 6, seed).unwrap();
            for stencil in [Stencil::lattice4(), Stencil::crofton8(), Stencil::crofton16()] {
                for bc in [Boundary::Plus, Boundary::Minus, Boundary::Free] {
                    let eg = build_energy_graph(&noise, 0.9, &bc, stencil, EnergyMode::ContinuumBV).unwrap();
                    let cut = crate::maxflow::solve_min_cut(eg.graph()).unwrap();
                    let s = SpinField::new(eg.decode(&cut), bc.clone()).unwrap();
                    let e = energy(&s, &noise, 0.9, stencil, EnergyMode::ContinuumBV).unwrap();
                    assert!((cut.value + eg.offset() - e).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn huge_field_fixes_spins_to_field_sign() {
        let noise = sample_discretized_wn(10, 10, 4).unwrap();
        let stencil = Stencil::crofton16();
        let s = ground_state(&noise, 1e6, &Boundary::Plus, stencil, EnergyMode::Rfim).unwrap();
        let incident = 4.0 * stencil.cell_perimeter();
        for c in s.extent().cells() {
            let xi = noise.at(c);
            if 2.0 * 1e6 * xi.abs() > incident {
                assert_eq!(s.at(c), if xi > 0.0 { 1 } else { -1 });
            }
        }
    }

    #[test]
    fn order_parameter_at_zero_disorder_is_one() {
        let m = order_parameter(0.0, 8, 5, 1).unwrap();
        assert_eq!(m.m_hat, 1.0);
        assert_eq!(m.std_err, 0.0);
    }

    #[test]
    fn audit_of_ground_state_is_clean_and_flip_is_caught() {
        let noise = sample_discretized_wn(16, 16, 9).unwrap();
        let s = ground_state(&noise, 0.8, &Boundary::Plus, Stencil::lattice4(), EnergyMode::Rfim).unwrap();
        let rep = local_minimality_audit(&s, &noise, 0.8, 30, 2).unwrap();
        assert!(rep.violations.is_empty());
        assert_eq!(rep.checked + rep.skipped, 30);
        assert_eq!(local_minimality_audit(&s, &noise, 0.8, 0, 2).unwrap(), AuditReport::default());

        let mut flipped = s.clone();
        let c = Cell::new(8, 8);
        flipped.set(c, -s.at(c));
        let gain = ball_improvement(&flipped, &noise, 0.8, Stencil::lattice4(), EnergyMode::Rfim, c, 2.0).unwrap();
        assert!(gain > VIOLATION_TOL);
    }

    #[test]
    fn free_boundary_zero_field_has_zero_energy() {
        let noise = NoiseField::zeros(4, 3).unwrap();
        let s = ground_state(&noise, 0.0, &Boundary::Free, Stencil::lattice4(), EnergyMode::Rfim).unwrap();
        assert_eq!(energy(&s, &noise, 0.0, Stencil::lattice4(), EnergyMode::Rfim).unwrap(), 0.0);
    }
}
