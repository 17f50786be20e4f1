//! Encoding of lattice energies as cut problems.
//!
//! A [`RegionProblem`] has a set of free cells carrying spins `σ ∈ {±1}`
//! and frozen cells around them. Its energy is
//!
//! ```text
//! E(σ) = Σ_x cost_x(σ_x) + k · Σ_{stencil pairs {x,y}, ≥1 free} w_xy · 1[σ_x ≠ σ_y]
//! ```
//!
//! where pairs with an absent frozen end (free boundary) are dropped. A free
//! cell on the source side of the cut has spin `+1`. Unary costs become
//! terminal arcs after subtracting `min(cost(+1), cost(−1))`; the sum of those
//! minima is the returned `offset`, so `cut value + offset = E(σ)`.
//!
//! Frozen neighbours are either ghost nodes pinned to their terminal by hard
//! arcs ([`FrozenEncoding::HardArcs`]) or folded into the unary costs of the
//! adjacent free cell ([`FrozenEncoding::Folded`]); both give identical
//! energies.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use ndarray::Array2;

use super::{solve_min_cut_with, CutGraph, MaxFlowSolver, MinCut, NodeId, SINK, SOURCE};
use crate::error::{invalid, Error, Result};
use crate::lattice::{Cell, Extent};
use crate::noise::NoiseField;
use crate::stencil::Stencil;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EnergyMode {
    /// Each disagreeing pair costs `4w`, i.e. `w·|σ_x − σ_y|²`.
    Rfim,
    /// Each disagreeing pair costs `2w`, so the pair term is `∫|∇m|`.
    ContinuumBV,
}

impl EnergyMode {
    pub fn pair_factor(self) -> f64 {
        match self {
            EnergyMode::Rfim => 4.0,
            EnergyMode::ContinuumBV => 2.0,
        }
    }
}

impl fmt::Display for EnergyMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EnergyMode::Rfim => "rfim",
            EnergyMode::ContinuumBV => "continuum-bv",
        })
    }
}

impl FromStr for EnergyMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rfim" => Ok(EnergyMode::Rfim),
            "continuum-bv" => Ok(EnergyMode::ContinuumBV),
            other => Err(Error::InvalidArgument(format!("unknown energy mode `{other}`"))),
        }
    }
}

/// Spins prescribed on a frame of `pad` cells around a box.
#[derive(Clone, Debug, PartialEq)]
pub struct Exterior {
    inner: Extent,
    outer: Extent,
    values: Vec<i8>,
}

impl Exterior {
    pub fn from_fn(inner: Extent, pad: usize, f: impl Fn(Cell) -> i8) -> Result<Self> {
        let p = pad as i64;
        let outer = Extent::new(inner.x0 - p, inner.y0 - p, inner.width + 2 * pad, inner.height + 2 * pad);
        let mut values = Vec::with_capacity(outer.len());
        for c in outer.cells() {
            let s = if inner.contains(c) { 0 } else { f(c) };
            if !inner.contains(c) && s != 1 && s != -1 {
                return invalid(format!("exterior spin {s} at ({}, {}) is not ±1", c.x, c.y));
            }
            values.push(s);
        }
        Ok(Self { inner, outer, values })
    }

    pub fn inner(&self) -> Extent {
        self.inner
    }

    /// Spin of an exterior cell; `None` inside the box or beyond the frame.
    pub fn spin(&self, c: Cell) -> Option<i8> {
        if self.inner.contains(c) {
            return None;
        }
        self.outer.index(c).map(|i| self.values[i])
    }

    pub fn negated(&self) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v = -*v);
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Boundary {
    Plus,
    Minus,
    Free,
    Spins(Exterior),
}

impl Boundary {
    /// Spin of a cell outside the box, `None` for free boundaries.
    pub fn spin_at(&self, c: Cell) -> Option<i8> {
        match self {
            Boundary::Plus => Some(1),
            Boundary::Minus => Some(-1),
            Boundary::Free => None,
            Boundary::Spins(ext) => ext.spin(c),
        }
    }

    pub fn negated(&self) -> Self {
        match self {
            Boundary::Plus => Boundary::Minus,
            Boundary::Minus => Boundary::Plus,
            Boundary::Free => Boundary::Free,
            Boundary::Spins(ext) => Boundary::Spins(ext.negated()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Boundary::Plus => "plus",
            Boundary::Minus => "minus",
            Boundary::Free => "free",
            Boundary::Spins(_) => "spins",
        }
    }

    /// Checks that a `Spins` frame matches `extent` and covers `reach`.
    pub fn check(&self, extent: Extent, reach: i64) -> Result<()> {
        if let Boundary::Spins(ext) = self {
            if ext.inner != extent {
                return invalid("boundary spins were built for a different box");
            }
            if ext.inner.x0 - ext.outer.x0 < reach {
                return invalid("boundary frame is thinner than the stencil reach");
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum FrozenEncoding {
    #[default]
    HardArcs,
    Folded,
}

pub struct RegionProblem<'a> {
    pub free: &'a [Cell],
    pub stencil: Stencil,
    pub pair_weight: f64,
    /// `(cost if +1, cost if −1)` of a free cell.
    pub unary: &'a (dyn Fn(Cell) -> (f64, f64) + 'a),
    /// Spin of a non-free cell, `None` if it is absent.
    pub frozen: &'a (dyn Fn(Cell) -> Option<i8> + 'a),
    pub encoding: FrozenEncoding,
}

/// Dense lookup from cells near the free set to their free index.
struct SlotMap {
    extent: Extent,
    slot: Vec<u32>,
}

const NO_SLOT: u32 = u32::MAX;

impl SlotMap {
    fn new(free: &[Cell], pad: i64) -> Result<Self> {
        let (mut x0, mut y0, mut x1, mut y1) = (i64::MAX, i64::MAX, i64::MIN, i64::MIN);
        for c in free {
            x0 = x0.min(c.x);
            y0 = y0.min(c.y);
            x1 = x1.max(c.x);
            y1 = y1.max(c.y);
        }
        if free.is_empty() {
            (x0, y0, x1, y1) = (0, 0, -1, -1);
        }
        let extent = Extent::new(
            x0 - pad,
            y0 - pad,
            (x1 - x0 + 1 + 2 * pad).max(0) as usize,
            (y1 - y0 + 1 + 2 * pad).max(0) as usize,
        );
        let mut slot = vec![NO_SLOT; extent.len()];
        for (i, &c) in free.iter().enumerate() {
            let k = extent.index(c).unwrap();
            if slot[k] != NO_SLOT {
                return invalid(format!("free cell ({}, {}) listed twice", c.x, c.y));
            }
            slot[k] = i as u32;
        }
        Ok(Self { extent, slot })
    }

    #[inline]
    fn get(&self, c: Cell) -> Option<usize> {
        self.extent
            .index(c)
            .and_then(|k| (self.slot[k] != NO_SLOT).then_some(self.slot[k] as usize))
    }
}

pub struct RegionGraph {
    pub graph: CutGraph,
    pub offset: f64,
    /// Node of each free cell, in the order of `RegionProblem::free`.
    pub nodes: Vec<NodeId>,
}

impl RegionGraph {
    pub fn decode(&self, cut: &MinCut) -> Vec<i8> {
        self.nodes.iter().map(|&u| if cut.in_source(u) { 1 } else { -1 }).collect()
    }
}

pub fn build_region_graph(p: &RegionProblem<'_>) -> Result<RegionGraph> {
    if !(p.pair_weight.is_finite() && p.pair_weight >= 0.0) {
        return invalid("pair weight must be finite and nonnegative");
    }
    let slots = SlotMap::new(p.free, p.stencil.reach())?;
    let mut graph = CutGraph::with_nodes(p.free.len());
    let nodes: Vec<NodeId> = (0..p.free.len()).map(|i| i + 2).collect();
    for (i, &c) in p.free.iter().enumerate() {
        graph.set_cell(nodes[i], c);
    }
    let mut plus_cost = Vec::with_capacity(p.free.len());
    let mut minus_cost = Vec::with_capacity(p.free.len());
    for &c in p.free {
        let (a, b) = (p.unary)(c);
        if !(a.is_finite() && b.is_finite()) {
            return invalid(format!("unary cost at ({}, {}) is not finite", c.x, c.y));
        }
        plus_cost.push(a);
        minus_cost.push(b);
    }
    let mut ghosts: HashMap<Cell, NodeId> = HashMap::new();
    for (i, &c) in p.free.iter().enumerate() {
        for &(dx, dy, class) in p.stencil.half_offsets() {
            let w = p.pair_weight * p.stencil.weight(class);
            for (sign, nb) in [(1, c.offset(dx, dy)), (-1, c.offset(-dx, -dy))] {
                if slots.get(nb).is_some() {
                    // free–free pairs are added once, from the forward end
                    if sign == 1 {
                        let j = slots.get(nb).unwrap();
                        graph.add_edge(nodes[i], nodes[j], w, w);
                    }
                    continue;
                }
                let Some(tau) = (p.frozen)(nb) else { continue };
                match p.encoding {
                    FrozenEncoding::Folded => {
                        if tau > 0 {
                            minus_cost[i] += w;
                        } else {
                            plus_cost[i] += w;
                        }
                    }
                    FrozenEncoding::HardArcs => {
                        let g = *ghosts.entry(nb).or_insert_with(|| {
                            let g = graph.add_node(Some(nb));
                            if tau > 0 {
                                graph.add_hard(SOURCE, g);
                            } else {
                                graph.add_hard(g, SINK);
                            }
                            g
                        });
                        graph.add_edge(nodes[i], g, w, w);
                    }
                }
            }
        }
    }
    let mut offset = 0.0;
    for i in 0..p.free.len() {
        let m = plus_cost[i].min(minus_cost[i]);
        offset += m;
        graph.add_terminal(nodes[i], minus_cost[i] - m, plus_cost[i] - m);
    }
    Ok(RegionGraph { graph, offset, nodes })
}

/// Energy of a labeling of the free cells, evaluated term by term.
pub fn region_energy(p: &RegionProblem<'_>, spins: &[i8]) -> Result<f64> {
    if spins.len() != p.free.len() {
        return invalid("labeling length differs from the free set");
    }
    let slots = SlotMap::new(p.free, p.stencil.reach())?;
    let mut unary = 0.0;
    let mut pairs = 0.0;
    for (i, &c) in p.free.iter().enumerate() {
        let (a, b) = (p.unary)(c);
        unary += if spins[i] > 0 { a } else { b };
        for &(dx, dy, class) in p.stencil.half_offsets() {
            let w = p.stencil.weight(class);
            for (sign, nb) in [(1, c.offset(dx, dy)), (-1, c.offset(-dx, -dy))] {
                let other = match slots.get(nb) {
                    Some(j) if sign == 1 => spins[j],
                    Some(_) => continue,
                    None => match (p.frozen)(nb) {
                        Some(t) => t,
                        None => continue,
                    },
                };
                if other != spins[i] {
                    pairs += w;
                }
            }
        }
    }
    Ok(unary + p.pair_weight * pairs)
}

pub struct RegionSolution {
    /// Spins of the free cells in input order.
    pub spins: Vec<i8>,
    /// `cut value + offset`.
    pub energy: f64,
    pub cut: MinCut,
}

pub fn solve_region(p: &RegionProblem<'_>, solver: &dyn MaxFlowSolver) -> Result<RegionSolution> {
    let rg = build_region_graph(p)?;
    let cut = solve_min_cut_with(solver, &rg.graph)?;
    let spins = rg.decode(&cut);
    Ok(RegionSolution { spins, energy: cut.value + rg.offset, cut })
}

/// Cut graph of a boxed energy together with its decoding data.
pub struct EnergyGraph {
    pub region: RegionGraph,
    pub extent: Extent,
}

impl EnergyGraph {
    pub fn graph(&self) -> &CutGraph {
        &self.region.graph
    }

    pub fn offset(&self) -> f64 {
        self.region.offset
    }

    /// Spin array `[[row, col]]` from a cut of this graph.
    pub fn decode(&self, cut: &MinCut) -> Array2<i8> {
        let spins = self.region.decode(cut);
        Array2::from_shape_vec((self.extent.height, self.extent.width), spins).unwrap()
    }
}

/// Graph whose minimum cuts minimize
/// `k Σ w·1[σ_x ≠ σ_y] − ε Σ ξ_x σ_x` on the noise extent with boundary `bc`.
pub fn build_energy_graph(
    noise: &NoiseField,
    epsilon: f64,
    bc: &Boundary,
    stencil: Stencil,
    mode: EnergyMode,
) -> Result<EnergyGraph> {
    if !(epsilon.is_finite() && epsilon >= 0.0) {
        return invalid(format!("epsilon must be finite and nonnegative, got {epsilon}"));
    }
    let extent = noise.extent();
    bc.check(extent, stencil.reach())?;
    let free: Vec<Cell> = extent.cells().collect();
    let unary = |c: Cell| {
        let h = epsilon * noise.at(c);
        (-h, h)
    };
    let frozen = |c: Cell| bc.spin_at(c);
    let problem = RegionProblem {
        free: &free,
        stencil,
        pair_weight: mode.pair_factor(),
        unary: &unary,
        frozen: &frozen,
        encoding: FrozenEncoding::HardArcs,
    };
    let region = build_region_graph(&problem)?;
    Ok(EnergyGraph { region, extent })
}
