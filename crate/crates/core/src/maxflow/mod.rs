//! Max-flow / min-cut on capacitated s–t networks.
//!
//! A [`CutGraph`] is assembled with real capacities and optional hard
//! constraint arcs. Solving quantizes it into an integer [`Residual`]
//! network: every finite capacity is multiplied by a power of two `scale`
//! and rounded, and hard arcs receive the sentinel `Σ quantized + 1`, which
//! is strictly larger than any finite cut. The scale is the largest power of
//! two keeping `(hard arcs + 1) · sentinel ≤ 2⁶²`, so no flow or excess can
//! overflow `i64`.
//!
//! After a solver saturates the network the canonical cut is read off as the
//! set of nodes reachable from the source in the residual graph, which is the
//! unique source-minimal minimum cut of the quantized problem. The reported
//! `value` re-sums the original real capacities across that cut.
//!
//! Solvers implement [`MaxFlowSolver`] and are registered by name:
//! `bk` (Boykov–Kolmogorov search trees, the default), `dinic` and
//! `push-relabel` (FIFO with global relabelling).
//!
//! Text dump format, one record per line:
//!
//! ```text
//! p cut <nodes> <records>
//! a <from> <to> <capacity>
//! e <u> <v> <cap u→v> <cap v→u>
//! h <from> <to>
//! ```
//!
//! Node `0` is the source and node `1` the sink; capacities are printed with
//! round-trip precision.

mod bk;
mod dinic;
pub mod energy;
mod push_relabel;

use std::collections::HashSet;
use std::io::{BufRead, Write};

pub use bk::BoykovKolmogorov;
pub use dinic::Dinic;
pub use energy::{
    build_energy_graph, build_region_graph, region_energy, solve_region, Boundary, EnergyGraph, EnergyMode,
    Exterior, FrozenEncoding, RegionGraph, RegionProblem, RegionSolution,
};
pub use push_relabel::PushRelabel;

use crate::error::{invalid, Error, Result};
use crate::lattice::Cell;

pub type NodeId = usize;

pub const SOURCE: NodeId = 0;
pub const SINK: NodeId = 1;

const BUDGET: i128 = 1 << 62;

#[derive(Clone, Copy, Debug, PartialEq)]
struct EdgeSpec {
    u: NodeId,
    v: NodeId,
    cap_uv: f64,
    cap_vu: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CutGraph {
    cells: Vec<Option<Cell>>,
    edges: Vec<EdgeSpec>,
    hard: Vec<(NodeId, NodeId)>,
}

impl CutGraph {
    /// A graph holding only the source and sink.
    pub fn new() -> Self {
        Self { cells: vec![None, None], edges: Vec::new(), hard: Vec::new() }
    }

    pub fn with_nodes(n: usize) -> Self {
        let mut g = Self::new();
        g.cells.resize(n + 2, None);
        g
    }

    pub fn add_node(&mut self, cell: Option<Cell>) -> NodeId {
        self.cells.push(cell);
        self.cells.len() - 1
    }

    pub fn set_cell(&mut self, node: NodeId, cell: Cell) {
        self.cells[node] = Some(cell);
    }

    pub fn cell(&self, node: NodeId) -> Option<Cell> {
        self.cells.get(node).copied().flatten()
    }

    /// Total node count including the two terminals.
    pub fn node_count(&self) -> usize {
        self.cells.len()
    }

    pub fn add_arc(&mut self, from: NodeId, to: NodeId, cap: f64) {
        self.edges.push(EdgeSpec { u: from, v: to, cap_uv: cap, cap_vu: 0.0 });
    }

    /// A pair of opposite arcs sharing one residual slot.
    pub fn add_edge(&mut self, u: NodeId, v: NodeId, cap_uv: f64, cap_vu: f64) {
        self.edges.push(EdgeSpec { u, v, cap_uv, cap_vu });
    }

    /// Terminal arcs `s → u` and `u → t`.
    pub fn add_terminal(&mut self, u: NodeId, cap_source: f64, cap_sink: f64) {
        if cap_source > 0.0 {
            self.add_arc(SOURCE, u, cap_source);
        }
        if cap_sink > 0.0 {
            self.add_arc(u, SINK, cap_sink);
        }
    }

    /// An arc that no finite cut may sever.
    pub fn add_hard(&mut self, from: NodeId, to: NodeId) {
        self.hard.push((from, to));
    }

    pub fn arc_count(&self) -> usize {
        self.edges.len() + self.hard.len()
    }

    pub fn hard_count(&self) -> usize {
        self.hard.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.node_count();
        let check = |a: NodeId, b: NodeId| {
            if a >= n || b >= n {
                return invalid(format!("arc ({a}, {b}) references a missing node"));
            }
            if a == b {
                return invalid(format!("self-loop at node {a}"));
            }
            Ok(())
        };
        for e in &self.edges {
            check(e.u, e.v)?;
            for c in [e.cap_uv, e.cap_vu] {
                if !(c.is_finite() && c >= 0.0) {
                    return invalid(format!("capacity {c} on ({}, {}) is not finite and nonnegative", e.u, e.v));
                }
            }
        }
        for &(a, b) in &self.hard {
            check(a, b)?;
        }
        let mut seen = HashSet::new();
        for c in self.cells.iter().flatten() {
            if !seen.insert(*c) {
                return invalid(format!("cell ({}, {}) mapped to two nodes", c.x, c.y));
            }
        }
        Ok(())
    }

    /// Quantizes into an integer residual network.
    pub fn compile(&self) -> Result<Residual> {
        self.validate()?;
        let total: f64 = self.edges.iter().map(|e| e.cap_uv + e.cap_vu).sum();
        let limit = (BUDGET / (self.hard.len() as i128 + 1)) as f64 / 2.0;
        let scale = if total > 0.0 {
            (limit / total).log2().floor().min(1000.0).exp2()
        } else {
            1.0
        };
        let q = |c: f64| (c * scale).round() as i64;
        let quantized: i128 = self.edges.iter().map(|e| (q(e.cap_uv) + q(e.cap_vu)) as i128).sum();
        let sentinel = quantized + 1;
        if sentinel * (self.hard.len() as i128 + 1) > BUDGET {
            return invalid("capacities too large to quantize");
        }
        let sentinel = sentinel as i64;

        let n = self.node_count();
        let m = self.edges.len() + self.hard.len();
        let mut deg = vec![0usize; n + 1];
        let pairs = self
            .edges
            .iter()
            .map(|e| (e.u, e.v, q(e.cap_uv), q(e.cap_vu)))
            .chain(self.hard.iter().map(|&(a, b)| (a, b, sentinel, 0)));
        for (u, v, _, _) in pairs.clone() {
            deg[u + 1] += 1;
            deg[v + 1] += 1;
        }
        for i in 0..n {
            deg[i + 1] += deg[i];
        }
        let first = deg;
        let mut fill = first.clone();
        let mut head = vec![0u32; 2 * m];
        let mut rev = vec![0u32; 2 * m];
        let mut cap = vec![0i64; 2 * m];
        for (u, v, cuv, cvu) in pairs {
            let a = fill[u];
            let b = fill[v];
            fill[u] += 1;
            fill[v] += 1;
            head[a] = v as u32;
            head[b] = u as u32;
            rev[a] = b as u32;
            rev[b] = a as u32;
            cap[a] = cuv;
            cap[b] = cvu;
        }
        let cap0 = cap.clone();
        Ok(Residual { first, head, rev, cap, cap0, scale, sentinel })
    }
}

/// Integer residual network in compressed adjacency form. Arc `a` leaves the
/// node whose range `first[u]..first[u + 1]` contains it; `rev[a]` is its
/// partner.
#[derive(Clone, Debug)]
pub struct Residual {
    pub(crate) first: Vec<usize>,
    pub(crate) head: Vec<u32>,
    pub(crate) rev: Vec<u32>,
    pub(crate) cap: Vec<i64>,
    cap0: Vec<i64>,
    scale: f64,
    sentinel: i64,
}

impl Residual {
    pub fn node_count(&self) -> usize {
        self.first.len() - 1
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn sentinel(&self) -> i64 {
        self.sentinel
    }

    #[inline]
    pub(crate) fn arcs(&self, u: usize) -> std::ops::Range<usize> {
        self.first[u]..self.first[u + 1]
    }

    /// Nodes reachable from the source through arcs with residual capacity.
    pub fn source_reachable(&self) -> Vec<bool> {
        let mut seen = vec![false; self.node_count()];
        let mut stack = vec![SOURCE];
        seen[SOURCE] = true;
        while let Some(u) = stack.pop() {
            for a in self.arcs(u) {
                let v = self.head[a] as usize;
                if self.cap[a] > 0 && !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen
    }

    /// Quantized capacity of the cut `(side, ¬side)`.
    pub fn cut_capacity(&self, side: &[bool]) -> i128 {
        let mut sum = 0i128;
        for u in 0..self.node_count() {
            if side[u] {
                for a in self.arcs(u) {
                    if !side[self.head[a] as usize] {
                        sum += self.cap0[a] as i128;
                    }
                }
            }
        }
        sum
    }
}

/// Result of a min-cut solve.
#[derive(Clone, Debug, PartialEq)]
pub struct MinCut {
    /// Sum of the real capacities across the cut; infinite if a hard arc is cut.
    pub value: f64,
    /// Quantized max-flow value.
    pub flow: i64,
    pub scale: f64,
    /// `source_side[u]` for every node, terminals included.
    pub source_side: Vec<bool>,
}

impl MinCut {
    pub fn in_source(&self, u: NodeId) -> bool {
        self.source_side[u]
    }
}

pub trait MaxFlowSolver: Send + Sync {
    fn name(&self) -> &'static str;
    /// Saturates `g` and returns the flow value.
    fn max_flow(&self, g: &mut Residual) -> i64;
}

static SOLVERS: [&dyn MaxFlowSolver; 3] = [&BoykovKolmogorov, &Dinic, &PushRelabel];

pub fn solvers() -> &'static [&'static dyn MaxFlowSolver] {
    &SOLVERS
}

pub fn solver(name: &str) -> Result<&'static dyn MaxFlowSolver> {
    SOLVERS
        .iter()
        .copied()
        .find(|s| s.name() == name)
        .ok_or_else(|| Error::InvalidArgument(format!("unknown max-flow solver `{name}`")))
}

pub fn default_solver() -> &'static dyn MaxFlowSolver {
    &BoykovKolmogorov
}

pub fn solve_min_cut(graph: &CutGraph) -> Result<MinCut> {
    solve_min_cut_with(default_solver(), graph)
}

pub fn solve_min_cut_with(solver: &dyn MaxFlowSolver, graph: &CutGraph) -> Result<MinCut> {
    let mut res = graph.compile()?;
    let flow = solver.max_flow(&mut res);
    let side = res.source_reachable();
    debug_assert!(!side[SINK], "{} left an augmenting path", solver.name());
    debug_assert_eq!(res.cut_capacity(&side), flow as i128, "{} violates strong duality", solver.name());
    let mut value = 0.0;
    for e in &graph.edges {
        if side[e.u] && !side[e.v] {
            value += e.cap_uv;
        } else if side[e.v] && !side[e.u] {
            value += e.cap_vu;
        }
    }
    if graph.hard.iter().any(|&(a, b)| side[a] && !side[b]) {
        value = f64::INFINITY;
    }
    Ok(MinCut { value, flow, scale: res.scale, source_side: side })
}

impl CutGraph {
    pub fn write_text(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "p cut {} {}", self.node_count(), self.arc_count())?;
        for e in &self.edges {
            if e.cap_vu == 0.0 {
                writeln!(w, "a {} {} {:?}", e.u, e.v, e.cap_uv)?;
            } else {
                writeln!(w, "e {} {} {:?} {:?}", e.u, e.v, e.cap_uv, e.cap_vu)?;
            }
        }
        for &(a, b) in &self.hard {
            writeln!(w, "h {a} {b}")?;
        }
        Ok(())
    }

    /// Parses the text dump; cell mappings are not stored and come back empty.
    pub fn read_text(r: impl BufRead) -> Result<Self> {
        let bad = |line: usize, msg: &str| Error::Format(format!("line {line}: {msg}"));
        let mut g: Option<CutGraph> = None;
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            let lineno = i + 1;
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.is_empty() || f[0] == "c" {
                continue;
            }
            let node = |s: &str| s.parse::<usize>().map_err(|_| bad(lineno, "bad node id"));
            let capv = |s: &str| s.parse::<f64>().map_err(|_| bad(lineno, "bad capacity"));
            match (f[0], g.as_mut()) {
                ("p", None) if f.len() == 4 && f[1] == "cut" => {
                    let n = node(f[2])?;
                    if n < 2 {
                        return Err(bad(lineno, "fewer than two nodes"));
                    }
                    g = Some(CutGraph::with_nodes(n - 2));
                }
                ("a", Some(g)) if f.len() == 4 => g.add_arc(node(f[1])?, node(f[2])?, capv(f[3])?),
                ("e", Some(g)) if f.len() == 5 => {
                    g.add_edge(node(f[1])?, node(f[2])?, capv(f[3])?, capv(f[4])?)
                }
                ("h", Some(g)) if f.len() == 3 => g.add_hard(node(f[1])?, node(f[2])?),
                _ => return Err(bad(lineno, "unexpected record")),
            }
        }
        let g = g.ok_or_else(|| Error::Format("missing problem line".into()))?;
        g.validate()?;
        Ok(g)
    }
}
