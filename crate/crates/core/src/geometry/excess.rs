//! Flatness of the phase boundary: L¹ and strong excess, line fits, and the
//! radius selection and line update of one Campanato step.

use std::f64::consts::PI;

use super::{ball_in_box, jump_edges_in_ball, LineConfig};
use crate::error::{invalid, Error, Result};
use crate::groundstate::SpinField;
use crate::lattice::{Cell, Point};

/// Markov constant in the admissibility test of [`few_jumps_radius`].
pub const BOUNDARY_MARKOV_CONSTANT: f64 = 32.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Excess {
    /// `(1/R²) Σ_{B_R} |m − m_line|`.
    pub l1_excess: f64,
    /// [`strong_excess`] against the line normal.
    pub strong_excess: f64,
    pub center: Point,
    pub radius: f64,
}

fn l1_sum(spin: &SpinField, line: &LineConfig, cells: &[Cell]) -> f64 {
    cells.iter().map(|&c| f64::from((spin.at(c) - line.cell_spin(c)).abs())).sum()
}

/// `(1/R²) Σ_{cells in B_R} |m(c) − m_line(c)|`, with unit cell area.
pub fn l1_excess(spin: &SpinField, line: &LineConfig, center: Point, radius: f64) -> Result<f64> {
    let cells = ball_in_box(spin, center, radius)?;
    Ok(l1_sum(spin, line, &cells) / (radius * radius))
}

/// `(1/r) Σ |ν_e − ν̄|² · 2` over jump edges with midpoint in `B_r`.
pub fn strong_excess(spin: &SpinField, nu_bar: Point, center: Point, radius: f64) -> f64 {
    jump_edges_in_ball(spin, center, radius)
        .iter()
        .map(|e| (e.normal - nu_bar).norm2() * 2.0 * super::EDGE_LENGTH)
        .sum::<f64>()
        / radius
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineFit {
    pub line: LineConfig,
    pub excess: Excess,
    pub angle_index: usize,
    /// Offset index in `−n_d..=n_d`.
    pub offset_index: i64,
    /// The spin field is constant on the ball.
    pub no_interface: bool,
}

/// Exhaustive fit over angles `πi/n_θ`, offsets `R·j/n_d` (`|j| ≤ n_d`) and
/// both orientations. Ties keep the first candidate in (angle, offset,
/// orientation) order.
pub fn best_line_fit(spin: &SpinField, center: Point, radius: f64, n_theta: usize, n_d: usize) -> Result<LineFit> {
    if n_theta == 0 || n_d == 0 {
        return invalid("line fit grids must be nonempty");
    }
    let cells = ball_in_box(spin, center, radius)?;
    let n_d = n_d as i64;
    let mut best: Option<(f64, LineConfig, usize, i64)> = None;
    for i in 0..n_theta {
        let nu = Point::from_angle(PI * i as f64 / n_theta as f64);
        for j in -n_d..=n_d {
            let anchor = center + nu * (radius * j as f64 / n_d as f64);
            let plus = LineConfig { anchor, normal: nu };
            for line in [plus, plus.flipped()] {
                let v = l1_sum(spin, &line, &cells);
                if best.is_none_or(|b| v < b.0) {
                    best = Some((v, line, i, j));
                }
            }
        }
    }
    let (v, line, angle_index, offset_index) = best.expect("grid is nonempty");
    let first = spin.at(cells[0]);
    Ok(LineFit {
        line,
        excess: Excess {
            l1_excess: v / (radius * radius),
            strong_excess: strong_excess(spin, line.normal, center, radius),
            center,
            radius,
        },
        angle_index,
        offset_index,
        no_interface: cells.iter().all(|&c| spin.at(c) == first),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FewJumps {
    pub radius: f64,
    /// Sign changes of `m` around the discrete circle.
    pub crossings: usize,
    /// `Σ |m − m_line|` along the circle, weighted by arc length.
    pub boundary_l1: f64,
    /// `C · (1/R) Σ_{B_R} |m − m_line|`.
    pub bound: f64,
}

/// Samples of the circle `∂B_r(center)`: the angles, and the cell under each.
fn circle_samples(r: f64) -> usize {
    ((16.0 * PI * r).ceil() as usize).max(64)
}

fn circle_point(center: Point, r: f64, theta: f64) -> Point {
    center + Point::from_angle(theta) * r
}

fn spin_on(spin: &SpinField, p: Point) -> Result<i8> {
    spin.get(p.cell())
        .ok_or_else(|| Error::InvalidArgument(format!("circle point ({}, {}) leaves the box", p.x, p.y)))
}

struct Circle {
    thetas: Vec<f64>,
    spins: Vec<i8>,
    crossings: usize,
    boundary_l1: f64,
}

fn scan_circle(spin: &SpinField, line: &LineConfig, center: Point, r: f64) -> Result<Circle> {
    let n = circle_samples(r);
    let mut thetas = Vec::with_capacity(n);
    let mut spins = Vec::with_capacity(n);
    let mut boundary_l1 = 0.0;
    for k in 0..n {
        let theta = 2.0 * PI * k as f64 / n as f64;
        let p = circle_point(center, r, theta);
        let s = spin_on(spin, p)?;
        boundary_l1 += f64::from((s - line.cell_spin(p.cell())).abs());
        thetas.push(theta);
        spins.push(s);
    }
    let crossings = (0..n).filter(|&k| spins[k] != spins[(k + 1) % n]).count();
    Ok(Circle { thetas, spins, crossings, boundary_l1: boundary_l1 * 2.0 * PI * r / n as f64 })
}

/// Integer radii strictly between `R/16` and `15R/16`, increasing.
fn candidate_radii(radius: f64) -> impl DoubleEndedIterator<Item = f64> {
    let lo = (radius / 16.0).floor() as i64 + 1;
    let hi = (15.0 * radius / 16.0).ceil() as i64 - 1;
    (lo.max(1)..=hi).map(|r| r as f64)
}

fn admissible(
    spin: &SpinField,
    line: &LineConfig,
    center: Point,
    r: f64,
    bound: f64,
) -> Result<Option<(Circle, FewJumps)>> {
    let c = scan_circle(spin, line, center, r)?;
    let ok = (c.crossings == 0 || c.crossings == 2) && c.boundary_l1 <= bound;
    let fj = FewJumps { radius: r, crossings: c.crossings, boundary_l1: c.boundary_l1, bound };
    Ok(ok.then_some((c, fj)))
}

/// First radius in `(R/16, 15R/16)` whose circle is crossed by the jump set
/// zero or two times and carries little L¹ mismatch. `Ok(None)` when no
/// radius qualifies.
pub fn few_jumps_radius(spin: &SpinField, line: &LineConfig, center: Point, radius: f64) -> Result<Option<FewJumps>> {
    let bound = BOUNDARY_MARKOV_CONSTANT * radius * l1_excess(spin, line, center, radius)?;
    for r in candidate_radii(radius) {
        if let Some((_, fj)) = admissible(spin, line, center, r, bound)? {
            return Ok(Some(fj));
        }
    }
    Ok(None)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CampanatoStep {
    pub radius: f64,
    pub crossings: [Point; 2],
    pub new_line: LineConfig,
    /// `|ν − ν′|`.
    pub tilt: f64,
    /// L¹ excess of `new_line` on `B_r`.
    pub excess_out: f64,
}

/// Angle in `[a, b]` where the spin along the circle changes, by bisection.
fn refine_crossing(spin: &SpinField, center: Point, r: f64, mut a: f64, mut b: f64) -> Result<f64> {
    let sa = spin_on(spin, circle_point(center, r, a))?;
    while b - a > 1e-12 {
        let m = 0.5 * (a + b);
        if spin_on(spin, circle_point(center, r, m))? == sa {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Replaces `line` by the line through the two points where the jump set
/// crosses `∂B_r`, at the largest admissible radius with two crossings.
pub fn campanato_step(spin: &SpinField, center: Point, radius: f64, line: &LineConfig) -> Result<CampanatoStep> {
    let bound = BOUNDARY_MARKOV_CONSTANT * radius * l1_excess(spin, line, center, radius)?;
    for r in candidate_radii(radius).rev() {
        let Some((c, _)) = admissible(spin, line, center, r, bound)? else { continue };
        if c.crossings != 2 {
            continue;
        }
        let n = c.thetas.len();
        let mut pts = Vec::with_capacity(2);
        for k in 0..n {
            if c.spins[k] != c.spins[(k + 1) % n] {
                let b = if k + 1 == n { 2.0 * PI } else { c.thetas[k + 1] };
                let theta = refine_crossing(spin, center, r, c.thetas[k], b)?;
                pts.push(circle_point(center, r, theta));
            }
        }
        let (p, q) = (pts[0], pts[1]);
        let Some(dir) = (q - p).normalized() else { continue };
        let mut normal = dir.perp();
        if normal.dot(line.normal) < 0.0 {
            normal = -normal;
        }
        let new_line = LineConfig { anchor: (p + q) * 0.5, normal };
        return Ok(CampanatoStep {
            radius: r,
            crossings: [p, q],
            new_line,
            tilt: (line.normal - normal).norm(),
            excess_out: l1_excess(spin, &new_line, center, r)?,
        });
    }
    Err(Error::Precondition("no admissible radius with exactly two crossings".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Extent;
    use crate::maxflow::Boundary;

    fn line_field(l: usize, theta: f64) -> (SpinField, LineConfig, Point) {
        let c = Point::new((l / 2) as f64 + 0.3, (l / 2) as f64 - 0.2);
        let line = LineConfig::from_angle(c, theta);
        (line.rasterize(Extent::new(0, 0, l, l)).unwrap(), line, c)
    }

    #[test]
    fn exact_line_has_zero_excess() {
        let (s, line, c) = line_field(41, 0.4);
        assert_eq!(l1_excess(&s, &line, c, 16.0).unwrap(), 0.0);
        let flipped = s.negated();
        assert_eq!(
            l1_excess(&s, &LineConfig::from_angle(c, 1.1), c, 16.0).unwrap(),
            l1_excess(&flipped, &LineConfig::from_angle(c, 1.1).flipped(), c, 16.0).unwrap()
        );
    }

    #[test]
    fn constant_field_against_line_through_center() {
        let s = SpinField::from_fn(Extent::new(0, 0, 201, 201), Boundary::Plus, |_| 1).unwrap();
        let c = Point::new(100.0, 100.0);
        let e = l1_excess(&s, &LineConfig::from_angle(c, 0.3), c, 80.0).unwrap();
        assert!((e - PI).abs() < 0.05, "{e}");
        let fit = best_line_fit(&s, c, 20.0, 4, 2).unwrap();
        assert!(fit.no_interface);
    }

    #[test]
    fn axis_interface_strong_excess() {
        let (s, _, c) = line_field(41, 0.0);
        let r = 10.0;
        assert_eq!(strong_excess(&s, Point::new(1.0, 0.0), c, r), 0.0);
        let rotated = strong_excess(&s, Point::new(0.0, 1.0), c, r);
        let n = jump_edges_in_ball(&s, c, r).len() as f64;
        assert!((rotated - 4.0 * n / r).abs() < 1e-12);
        assert!((rotated - 8.0).abs() <= 4.0 / r);
    }

    #[test]
    fn fit_recovers_line_on_grid() {
        let l = 33;
        let c = Point::new(16.0, 16.0);
        let line = LineConfig::from_angle(c + Point::from_angle(PI / 4.0) * 3.0, PI / 4.0);
        let s = line.rasterize(Extent::new(0, 0, l, l)).unwrap();
        let fit = best_line_fit(&s, c, 12.0, 8, 4).unwrap();
        assert_eq!(fit.excess.l1_excess, 0.0);
        assert!(fit.line.normal.dot(line.normal) > 0.99);
        let finer = best_line_fit(&s, c, 12.0, 16, 8).unwrap();
        assert!(finer.excess.l1_excess <= fit.excess.l1_excess);
    }

    #[test]
    fn exact_line_few_jumps_and_step() {
        let (s, line, c) = line_field(81, 0.7);
        let fj = few_jumps_radius(&s, &line, c, 32.0).unwrap().unwrap();
        assert_eq!(fj.crossings, 2);
        assert_eq!(fj.boundary_l1, 0.0);
        let step = campanato_step(&s, c, 32.0, &line).unwrap();
        assert!(step.tilt <= 4.0 / 32.0, "{}", step.tilt);
        let flipped = campanato_step(&s.negated(), c, 32.0, &line.flipped()).unwrap();
        assert!((flipped.tilt - step.tilt).abs() < 1e-12);
    }

    #[test]
    fn all_plus_has_no_crossings() {
        let s = SpinField::from_fn(Extent::new(0, 0, 41, 41), Boundary::Plus, |_| 1).unwrap();
        let c = Point::new(20.0, 20.0);
        let line = LineConfig::from_angle(Point::new(100.0, 0.0), 0.0).flipped();
        let fj = few_jumps_radius(&s, &line, c, 16.0).unwrap().unwrap();
        assert_eq!(fj.crossings, 0);
        assert!(matches!(campanato_step(&s, c, 16.0, &line), Err(Error::Precondition(_))));
    }
}
