//! Tracing the jump set into curves, and finite phase clusters.

use std::collections::{HashMap, VecDeque};
use std::io::Write;

use super::{jump_edges, JumpEdge};
use crate::error::Result;
use crate::groundstate::SpinField;
use crate::lattice::{Cell, Point};
use crate::noise::NoiseField;
use crate::stencil::{CutCounts, Stencil};

/// Corner `(x + ½, y + ½)` keyed by `(x, y)`.
type Corner = (i64, i64);

fn corner_point(k: Corner) -> Point {
    Point::new(k.0 as f64 + 0.5, k.1 as f64 + 0.5)
}

/// One maximal path of jump edges, oriented with the `+1` phase on its left.
#[derive(Clone, Debug, PartialEq)]
pub struct CurveComponent {
    pub vertices: Vec<Point>,
    pub edges: Vec<JumpEdge>,
    pub closed: bool,
    /// Number of unit edges.
    pub lattice_length: f64,
    /// Cut length in the spin field's stencil.
    pub stencil_length: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryCurve {
    pub components: Vec<CurveComponent>,
    pub stencil: Stencil,
}

impl BoundaryCurve {
    pub fn lattice_length(&self) -> f64 {
        self.components.iter().map(|c| c.lattice_length).sum()
    }

    pub fn stencil_length(&self) -> f64 {
        self.components.iter().map(|c| c.stencil_length).sum()
    }

    pub fn edge_count(&self) -> usize {
        self.components.iter().map(|c| c.edges.len()).sum()
    }

    /// CSV `component,x,y` listing each component's vertices in order.
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "component,x,y")?;
        for (i, c) in self.components.iter().enumerate() {
            for v in &c.vertices {
                writeln!(w, "{i},{},{}", v.x, v.y)?;
            }
        }
        Ok(())
    }
}

/// Oriented endpoints of an edge: the `+1` cell lies to the left.
fn orient(e: &JumpEdge, plus_is_lo: bool) -> (Corner, Corner) {
    let (x, y) = (e.lo.x, e.lo.y);
    if e.hi.x > e.lo.x {
        // vertical edge at x + ½; travelling up keeps `lo` on the left
        if plus_is_lo {
            ((x, y - 1), (x, y))
        } else {
            ((x, y), (x, y - 1))
        }
    } else {
        // horizontal edge at y + ½; travelling right keeps `hi` on the left
        if plus_is_lo {
            ((x, y), (x - 1, y))
        } else {
            ((x - 1, y), (x, y))
        }
    }
}

fn edge_key(e: &JumpEdge) -> (i64, i64, bool) {
    (e.lo.x, e.lo.y, e.hi.x > e.lo.x)
}

/// Traces all jump edges into maximal paths and loops. At corners where four
/// edges meet, paths turn left.
pub fn extract_jump_set(spin: &SpinField) -> BoundaryCurve {
    let edges = jump_edges(spin);
    let oriented: Vec<(Corner, Corner)> = edges.iter().map(|e| orient(e, spin.at(e.lo) > 0)).collect();
    let mut out_of: HashMap<Corner, Vec<usize>> = HashMap::new();
    let mut indeg: HashMap<Corner, usize> = HashMap::new();
    for (i, &(a, b)) in oriented.iter().enumerate() {
        out_of.entry(a).or_default().push(i);
        *indeg.entry(b).or_default() += 1;
    }
    let mut used = vec![false; edges.len()];
    let mut paths: Vec<Vec<usize>> = Vec::new();

    let follow = |start: usize, used: &mut Vec<bool>| {
        let mut path = vec![start];
        used[start] = true;
        let mut cur = start;
        loop {
            let (a, b) = oriented[cur];
            let d = (b.0 - a.0, b.1 - a.1);
            let Some(cands) = out_of.get(&b) else { break };
            let free: Vec<usize> = cands.iter().copied().filter(|&i| !used[i]).collect();
            if free.is_empty() {
                break;
            }
            let turn = |i: usize| {
                let (p, q) = oriented[i];
                let nd = (q.0 - p.0, q.1 - p.1);
                if nd == (-d.1, d.0) {
                    0
                } else if nd == d {
                    1
                } else {
                    2
                }
            };
            let next = *free.iter().min_by_key(|&&i| (turn(i), i)).unwrap();
            used[next] = true;
            path.push(next);
            cur = next;
        }
        path
    };

    // open paths start where a corner emits more edges than it receives
    for i in 0..edges.len() {
        let a = oriented[i].0;
        let outs = out_of.get(&a).map_or(0, Vec::len);
        if !used[i] && outs > indeg.get(&a).copied().unwrap_or(0) {
            paths.push(follow(i, &mut used));
        }
    }
    for i in 0..edges.len() {
        if !used[i] {
            paths.push(follow(i, &mut used));
        }
    }

    let mut component_of: HashMap<(i64, i64, bool), usize> = HashMap::new();
    for (k, p) in paths.iter().enumerate() {
        for &i in p {
            component_of.insert(edge_key(&edges[i]), k);
        }
    }
    let stencil = spin.stencil();
    let mut counts = vec![CutCounts::default(); paths.len()];
    for c in spin.extent().cells() {
        let s = spin.at(c);
        for &(dx, dy, class) in stencil.half_offsets() {
            let d = c.offset(dx, dy);
            if spin.get(d).is_some_and(|t| t != s) {
                let e = first_crossing(spin, c, dx, dy);
                counts[component_of[&e]].add(class);
            }
        }
    }

    let components = paths
        .into_iter()
        .zip(counts)
        .map(|(p, cnt)| {
            let mut vertices = vec![corner_point(oriented[p[0]].0)];
            vertices.extend(p.iter().map(|&i| corner_point(oriented[i].1)));
            let closed = oriented[p[0]].0 == oriented[*p.last().unwrap()].1;
            CurveComponent {
                vertices,
                lattice_length: p.len() as f64 * super::EDGE_LENGTH,
                stencil_length: stencil.length(&cnt),
                edges: p.into_iter().map(|i| edges[i]).collect(),
                closed,
            }
        })
        .collect();
    BoundaryCurve { components, stencil }
}

/// First unit edge with a spin change on the staircase from `c` to
/// `c + (dx, dy)` that moves along x first. Requires a change to exist.
fn first_crossing(spin: &SpinField, c: Cell, dx: i64, dy: i64) -> (i64, i64, bool) {
    let mut p = c;
    let mut steps = Vec::new();
    for _ in 0..dx.abs() {
        steps.push((dx.signum(), 0));
    }
    for _ in 0..dy.abs() {
        steps.push((0, dy.signum()));
    }
    for (sx, sy) in steps {
        let q = p.offset(sx, sy);
        if spin.at(p) != spin.at(q) {
            let lo = if sx + sy > 0 { p } else { q };
            return (lo.x, lo.y, sx != 0);
        }
        p = q;
    }
    unreachable!("endpoints of a disagreeing pair must differ somewhere on the path")
}

/// Maximal same-spin clusters under stencil connectivity.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseComponent {
    pub spin: i8,
    pub cells: Vec<Cell>,
    /// Some cell has a stencil neighbour outside the box.
    pub touches_frame: bool,
}

pub fn phase_components(spin: &SpinField) -> Vec<PhaseComponent> {
    let ext = spin.extent();
    let stencil = spin.stencil();
    let mut label = vec![u32::MAX; ext.len()];
    let mut out = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..ext.len() {
        if label[start] != u32::MAX {
            continue;
        }
        let id = out.len() as u32;
        let s = spin.at(ext.cell_at(start));
        let mut comp = PhaseComponent { spin: s, cells: Vec::new(), touches_frame: false };
        label[start] = id;
        queue.push_back(start);
        while let Some(i) = queue.pop_front() {
            let c = ext.cell_at(i);
            comp.cells.push(c);
            for (dx, dy, _) in stencil.offsets() {
                match ext.index(c.offset(dx, dy)) {
                    None => comp.touches_frame = true,
                    Some(j) => {
                        if label[j] == u32::MAX && spin.at(ext.cell_at(j)) == s {
                            label[j] = id;
                            queue.push_back(j);
                        }
                    }
                }
            }
        }
        out.push(comp);
    }
    out
}

/// A finite cluster of one phase enclosed by the other.
#[derive(Clone, Debug, PartialEq)]
pub struct Bubble {
    pub spin: i8,
    pub cells: Vec<Cell>,
    pub area: f64,
    /// Stencil cut length of the cluster.
    pub perimeter: f64,
    pub lattice_length: f64,
}

impl Bubble {
    pub fn field_integral(&self, noise: &NoiseField) -> Result<f64> {
        noise.field_integral(&self.cells)
    }

    /// `per(B) ≤ 2ε |∫_B ξ|`, which every bubble of a local minimizer obeys.
    pub fn energy_inequality_holds(&self, noise: &NoiseField, epsilon: f64) -> Result<bool> {
        Ok(self.perimeter <= 2.0 * epsilon * self.field_integral(noise)?.abs() + 1e-9)
    }
}

/// Phase clusters lying entirely in `B_R(center)` and away from the box frame.
pub fn bubble_detect(spin: &SpinField, center: Point, radius: f64) -> Vec<Bubble> {
    let stencil = spin.stencil();
    let r2 = radius * radius + 1e-9;
    phase_components(spin)
        .into_iter()
        .filter(|p| !p.touches_frame && p.cells.iter().all(|c| (c.center() - center).norm2() <= r2))
        .map(|p| {
            let mut counts = CutCounts::default();
            let mut lattice = 0.0;
            for &c in &p.cells {
                for &(dx, dy, class) in stencil.half_offsets() {
                    for nb in [c.offset(dx, dy), c.offset(-dx, -dy)] {
                        if spin.at(nb) != p.spin {
                            counts.add(class);
                        }
                    }
                }
                for (dx, dy) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
                    if spin.at(c.offset(dx, dy)) != p.spin {
                        lattice += 1.0;
                    }
                }
            }
            Bubble {
                spin: p.spin,
                area: p.cells.len() as f64,
                perimeter: stencil.length(&counts),
                lattice_length: lattice,
                cells: p.cells,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::LineConfig;
    use crate::lattice::Extent;
    use crate::maxflow::Boundary;

    fn field(w: usize, h: usize, f: impl Fn(Cell) -> i8) -> SpinField {
        SpinField::from_fn(Extent::new(0, 0, w, h), Boundary::Plus, f).unwrap()
    }

    #[test]
    fn all_plus_has_no_curve() {
        let s = field(5, 5, |_| 1);
        assert!(extract_jump_set(&s).components.is_empty());
        assert!(bubble_detect(&s, Point::new(2.0, 2.0), 10.0).is_empty());
    }

    #[test]
    fn half_plane_gives_one_open_path() {
        let l = 8;
        let line = LineConfig::new(Point::new(4.0, 0.0), Point::new(1.0, 0.0)).unwrap();
        let s = line.rasterize(Extent::new(0, 0, l, l)).unwrap();
        let curve = extract_jump_set(&s);
        assert_eq!(curve.components.len(), 1);
        let c = &curve.components[0];
        assert!(!c.closed);
        assert_eq!(c.lattice_length, l as f64);
        assert_eq!(c.vertices.len(), l + 1);
        // + lies at x ≥ 4, on the left of a downward path
        assert_eq!(c.vertices[0], Point::new(3.5, 7.5));
    }

    #[test]
    fn single_cell_is_a_closed_loop_and_a_bubble() {
        let s = field(5, 5, |c| if c == Cell::new(2, 2) { -1 } else { 1 });
        let curve = extract_jump_set(&s);
        assert_eq!(curve.components.len(), 1);
        assert!(curve.components[0].closed);
        assert_eq!(curve.components[0].lattice_length, 4.0);
        let b = bubble_detect(&s, Point::new(2.0, 2.0), 1.0);
        assert_eq!(b.len(), 1);
        assert_eq!((b[0].area, b[0].perimeter, b[0].spin), (1.0, 4.0, -1));
    }

    #[test]
    fn checkerboard_saddles_conserve_edges() {
        let s = field(6, 5, |c| if (c.x / 2 + c.y) % 2 == 0 { 1 } else { -1 });
        let curve = extract_jump_set(&s);
        assert_eq!(curve.edge_count(), super::super::jump_edges(&s).len());
        for comp in &curve.components {
            for w in comp.vertices.windows(2) {
                assert!((w[1] - w[0]).norm() == 1.0);
            }
        }
    }

    #[test]
    fn stencil_lengths_add_up() {
        let mut s = field(9, 9, |c| if (c.x - 4).pow(2) + (c.y - 4).pow(2) <= 5 { -1 } else { 1 });
        s = s.with_provenance(crate::groundstate::Provenance {
            seed: 0,
            noise_kind: crate::noise::NoiseKind::DiscretizedWN,
            epsilon: 0.0,
            stencil: Stencil::crofton16(),
            mode: crate::maxflow::EnergyMode::ContinuumBV,
        });
        let curve = extract_jump_set(&s);
        let b = bubble_detect(&s, Point::new(4.0, 4.0), 4.0);
        assert_eq!(b.len(), 1);
        assert!((curve.stencil_length() - b[0].perimeter).abs() < 1e-12);
    }
}
