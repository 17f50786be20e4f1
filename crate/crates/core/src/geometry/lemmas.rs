//! Deterministic checks on phase boundaries: averaged normals, η-minimality,
//! density, height and tilt bounds, and the modulus of continuity of normals.

use std::collections::HashSet;
use std::f64::consts::PI;

use rand::Rng;

use super::{ball_in_box, distance_to_jump_set, jump_edges_in_ball, LineConfig};
use crate::error::{invalid, Error, Result};
use crate::groundstate::SpinField;
use crate::lattice::{disc_cells, Cell, Point};
use crate::maxflow::{default_solver, solve_region, FrozenEncoding, RegionProblem};
use crate::rng::{stream_rng, STREAM_AUDIT};
use crate::stencil::{CutCounts, Stencil};

/// Constant in the tilt bound `|ν − ν′| ≤ C·d`.
pub const TILT_CONSTANT: f64 = 8.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NormalEstimate {
    Unique(Point),
    /// `∫∇m` vanishes on the ball.
    NonUnique,
}

impl NormalEstimate {
    pub fn unique(self) -> Option<Point> {
        match self {
            NormalEstimate::Unique(p) => Some(p),
            NormalEstimate::NonUnique => None,
        }
    }
}

/// `∫_{B_r(x)} ∇m` normalized. Errors if `x` is farther than `radius` from
/// the jump set.
pub fn averaged_normal(spin: &SpinField, x: Point, radius: f64) -> Result<NormalEstimate> {
    if distance_to_jump_set(spin, x, radius).is_none() {
        return invalid(format!("({}, {}) is not within {radius} of the jump set", x.x, x.y));
    }
    let sum = jump_edges_in_ball(spin, x, radius)
        .iter()
        .fold(Point::default(), |acc, e| acc + e.normal * (2.0 * super::EDGE_LENGTH));
    if sum.norm() < 1e-9 {
        Ok(NormalEstimate::NonUnique)
    } else {
        Ok(NormalEstimate::Unique(sum * (1.0 / sum.norm())))
    }
}

/// Stencil cut counts of `spins` on the pairs touching `ball`, reading the
/// rest from `outside`. Pairs with an absent end are dropped.
fn touching_counts(
    ball: &[Cell],
    inside: &HashSet<Cell>,
    stencil: Stencil,
    spin_of: impl Fn(Cell) -> i8,
    outside: impl Fn(Cell) -> Option<i8>,
) -> CutCounts {
    let mut counts = CutCounts::default();
    for &c in ball {
        let s = spin_of(c);
        for &(dx, dy, class) in stencil.half_offsets() {
            for (fwd, nb) in [(true, c.offset(dx, dy)), (false, c.offset(-dx, -dy))] {
                let t = if inside.contains(&nb) {
                    if !fwd {
                        continue;
                    }
                    spin_of(nb)
                } else {
                    match outside(nb) {
                        Some(t) => t,
                        None => continue,
                    }
                };
                if t != s {
                    counts.add(class);
                }
            }
        }
    }
    counts
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BallAudit {
    pub center: Cell,
    pub radius: f64,
    /// `per(m; B̄)`.
    pub per: f64,
    /// Least perimeter on `B̄` with the exterior of the ball frozen.
    pub per_star: f64,
    /// `per/per* − 1`, zero when both vanish.
    pub eta: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EtaAudit {
    pub eta_hat: f64,
    pub balls: Vec<BallAudit>,
}

fn audit_ball(spin: &SpinField, center: Cell, radius: f64) -> Result<BallAudit> {
    let ball = ball_in_box(spin, center.center(), radius)?;
    let inside: HashSet<Cell> = ball.iter().copied().collect();
    let stencil = spin.stencil();
    let outside = |c: Cell| spin.spin(c);
    let current = touching_counts(&ball, &inside, stencil, |c| spin.at(c), outside);
    let zero = |_: Cell| (0.0, 0.0);
    let problem = RegionProblem {
        free: &ball,
        stencil,
        pair_weight: 1.0,
        unary: &zero,
        frozen: &outside,
        encoding: FrozenEncoding::Folded,
    };
    let sol = solve_region(&problem, default_solver())?;
    let index: std::collections::HashMap<Cell, i8> = ball.iter().copied().zip(sol.spins).collect();
    let best = touching_counts(&ball, &inside, stencil, |c| index[&c], outside);
    let per = stencil.length(&current);
    // equal counts give equal lengths, so a current minimizer reports η = 0 exactly
    let per_star = if best == current { per } else { stencil.length(&best).min(per) };
    let eta = if per == per_star {
        0.0
    } else if per_star == 0.0 {
        f64::INFINITY
    } else {
        per / per_star - 1.0
    };
    Ok(BallAudit { center, radius, per, per_star, eta })
}

/// η-audit on explicit balls `(centre, radius)`.
pub fn eta_audit_balls(spin: &SpinField, balls: &[(Cell, f64)]) -> Result<EtaAudit> {
    let balls = balls.iter().map(|&(c, r)| audit_ball(spin, c, r)).collect::<Result<Vec<_>>>()?;
    let eta_hat = balls.iter().map(|b| b.eta).fold(0.0, f64::max);
    Ok(EtaAudit { eta_hat, balls })
}

/// η-audit on `n_balls` random balls inside `B_R(center)`: radius uniform in
/// `[2, max(2, R/2)]`, then a cell centre uniform among those keeping the ball
/// inside `B_R`.
pub fn eta_audit(spin: &SpinField, center: Point, radius: f64, n_balls: usize, seed: u64) -> Result<EtaAudit> {
    ball_in_box(spin, center, radius)?;
    if radius < 2.0 {
        return invalid("audit radius must be at least 2");
    }
    let mut rng = stream_rng(seed, STREAM_AUDIT);
    let mut balls = Vec::with_capacity(n_balls);
    for _ in 0..n_balls {
        let r = rng.random_range(2.0..=(radius / 2.0).max(2.0));
        let centres = disc_cells(center, radius - r);
        if centres.is_empty() {
            continue;
        }
        balls.push((centres[rng.random_range(0..centres.len())], r));
    }
    eta_audit_balls(spin, &balls)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityCheck {
    pub plus_fraction: f64,
    pub minus_fraction: f64,
    /// `1/(2+η)²`.
    pub volume_lo: f64,
    pub volume_hi: f64,
    /// `∫_{B_r}|∇m|`, twice the stencil cut length inside the ball.
    pub perimeter: f64,
    pub perimeter_lo: f64,
    pub perimeter_hi: f64,
    pub volume_lo_ok: bool,
    pub volume_hi_ok: bool,
    pub perimeter_lo_ok: bool,
    pub perimeter_hi_ok: bool,
}

impl DensityCheck {
    pub fn all_ok(&self) -> bool {
        self.volume_lo_ok && self.volume_hi_ok && self.perimeter_lo_ok && self.perimeter_hi_ok
    }
}

/// Lower density constant `c` in `∫_{B_r}|∇m| ≥ c·r/(2+η)`.
const DENSITY_LOWER: f64 = 1.0;

/// Volume and perimeter density bounds on `B_r(x)` for `x` on the jump set.
pub fn density_check(spin: &SpinField, x: Point, radius: f64, eta: f64) -> Result<DensityCheck> {
    if radius < 2.0 {
        return invalid("density radius must be at least 2");
    }
    if distance_to_jump_set(spin, x, 0.5).is_none() {
        return Err(Error::Precondition(format!("({}, {}) is not on the jump set", x.x, x.y)));
    }
    let ball = ball_in_box(spin, x, radius)?;
    let inside: HashSet<Cell> = ball.iter().copied().collect();
    let n = ball.len() as f64;
    let plus = ball.iter().filter(|&&c| spin.at(c) > 0).count() as f64;
    let counts = touching_counts(&ball, &inside, spin.stencil(), |c| spin.at(c), |_| None);
    let perimeter = 2.0 * spin.stencil().length(&counts);
    let volume_lo = 1.0 / ((2.0 + eta) * (2.0 + eta));
    let volume_hi = 1.0 - volume_lo;
    let (pf, mf) = (plus / n, 1.0 - plus / n);
    let perimeter_lo = DENSITY_LOWER * radius / (2.0 + eta);
    let perimeter_hi = 2.0 * (1.0 + eta) * 2.0 * PI * radius;
    Ok(DensityCheck {
        plus_fraction: pf,
        minus_fraction: mf,
        volume_lo,
        volume_hi,
        perimeter,
        perimeter_lo,
        perimeter_hi,
        volume_lo_ok: pf.min(mf) >= volume_lo,
        volume_hi_ok: pf.max(mf) <= volume_hi,
        perimeter_lo_ok: perimeter >= perimeter_lo,
        perimeter_hi_ok: perimeter <= perimeter_hi,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HeightBound {
    /// Largest distance from the polyline to the segment `[A, B]`.
    pub h: f64,
    /// `√(η² + 2η)·|A − B|`.
    pub bound: f64,
    pub ok: bool,
}

fn segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = b - a;
    let len2 = ab.norm2();
    let t = if len2 == 0.0 { 0.0 } else { ((p - a).dot(ab) / len2).clamp(0.0, 1.0) };
    (p - (a + ab * t)).norm()
}

/// Relative slack on the length budget, admitted and then charged to `η`.
const LENGTH_SLACK: f64 = 1e-12;

/// Height of a curve from `A` to `B` of length at most `(1+η)|A−B|`, up to
/// [`LENGTH_SLACK`].
pub fn height_bound_check(a: Point, b: Point, eta: f64, polyline: &[Point]) -> Result<HeightBound> {
    if !(0.0..=1.0).contains(&eta) {
        return invalid("eta must lie in [0, 1]");
    }
    let (Some(&first), Some(&last)) = (polyline.first(), polyline.last()) else {
        return invalid("polyline is empty");
    };
    if first.dist(a) > 1e-12 || last.dist(b) > 1e-12 {
        return invalid("polyline must run from A to B");
    }
    let chord = a.dist(b);
    let length: f64 = polyline.windows(2).map(|w| w[0].dist(w[1])).sum();
    if length > (1.0 + eta) * chord * (1.0 + LENGTH_SLACK) + LENGTH_SLACK {
        return invalid(format!("polyline length {length} exceeds (1+η)|A−B| = {}", (1.0 + eta) * chord));
    }
    let h = polyline.iter().map(|&p| segment_distance(p, a, b)).fold(0.0, f64::max);
    let height = |e: f64| (e * e + 2.0 * e).sqrt() * chord;
    let bound = height(eta);
    Ok(HeightBound { h, bound, ok: h <= height(eta + LENGTH_SLACK) + 1e-9 })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TiltCheck {
    Checked { d: f64, tilt: f64, ok: bool },
    /// The pair misses the hypotheses.
    Skipped,
}

/// Angles where a line meets the unit circle, if it cuts it.
fn circle_hits(line: &LineConfig) -> Option<[f64; 2]> {
    let s = line.signed_distance(Point::default());
    let foot = line.normal * line.anchor.dot(line.normal);
    if s.abs() >= 1.0 {
        return None;
    }
    let half = (1.0 - foot.norm2()).max(0.0).sqrt();
    let t = line.normal.perp();
    let (p, q) = (foot + t * half, foot - t * half);
    Some([p.y.atan2(p.x), q.y.atan2(q.x)])
}

fn arc(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

/// Tilt between two lines whose traces on the unit circle are `d`-close.
pub fn normal_tilt_check(line_a: &LineConfig, line_b: &LineConfig) -> TiltCheck {
    if line_a.distance_to_origin(Point::default()) > 0.25 {
        return TiltCheck::Skipped;
    }
    let (Some(ha), Some(hb)) = (circle_hits(line_a), circle_hits(line_b)) else {
        return TiltCheck::Skipped;
    };
    let straight = arc(ha[0], hb[0]).max(arc(ha[1], hb[1]));
    let crossed = arc(ha[0], hb[1]).max(arc(ha[1], hb[0]));
    let d = straight.min(crossed);
    if d > 0.25 {
        return TiltCheck::Skipped;
    }
    let nb = if line_a.normal.dot(line_b.normal) < 0.0 { -line_b.normal } else { line_b.normal };
    let tilt = (line_a.normal - nb).norm();
    TiltCheck::Checked { d, tilt, ok: tilt <= TILT_CONSTANT * d + 1e-12 }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModulusRow {
    pub x: Point,
    pub y: Point,
    pub separation: f64,
    /// `|ν̄₁(x) − ν̄₁(y)|`.
    pub difference: f64,
    /// `(ε (ln(|x|₊ + |y|₊))^{1/2} (ln|x−y|₊)^{11/4})^{1/2}`.
    pub shape: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ModulusTable {
    pub rows: Vec<ModulusRow>,
    /// Pairs dropped because a normal was not unique.
    pub excluded_nonunique: usize,
}

impl ModulusTable {
    pub fn max_difference(&self) -> f64 {
        self.rows.iter().map(|r| r.difference).fold(0.0, f64::max)
    }
}

fn plus2(v: f64) -> f64 {
    v.max(2.0)
}

/// Normal differences on scale one for pairs of jump-set points. Positions
/// `|x|` are measured from the centre of the box.
pub fn modulus_table(spin: &SpinField, pairs: &[(Point, Point)], epsilon: f64) -> Result<ModulusTable> {
    let ext = spin.extent();
    let origin = Point::new(
        ext.x0 as f64 + (ext.width as f64 - 1.0) / 2.0,
        ext.y0 as f64 + (ext.height as f64 - 1.0) / 2.0,
    );
    let mut table = ModulusTable::default();
    for &(x, y) in pairs {
        let (Some(nx), Some(ny)) = (averaged_normal(spin, x, 1.0)?.unique(), averaged_normal(spin, y, 1.0)?.unique())
        else {
            table.excluded_nonunique += 1;
            continue;
        };
        let difference = (nx - ny).norm();
        let separation = x.dist(y);
        let pos = (plus2((x - origin).norm()) + plus2((y - origin).norm())).ln();
        let shape = (epsilon * pos.sqrt() * plus2(separation).ln().powf(2.75)).sqrt();
        let ratio = if shape > 0.0 {
            difference / shape
        } else if difference > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        table.rows.push(ModulusRow { x, y, separation, difference, shape, ratio });
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Extent;
    use crate::maxflow::Boundary;

    fn plus_sea_with(cells: &[Cell]) -> SpinField {
        SpinField::from_fn(Extent::new(0, 0, 9, 9), Boundary::Plus, |c| if cells.contains(&c) { -1 } else { 1 }).unwrap()
    }

    #[test]
    fn normals_of_simple_interfaces() {
        let s = LineConfig::new(Point::new(4.0, 0.0), Point::new(1.0, 0.0)).unwrap().rasterize(Extent::new(0, 0, 9, 9)).unwrap();
        assert_eq!(averaged_normal(&s, Point::new(3.5, 4.0), 1.0).unwrap(), NormalEstimate::Unique(Point::new(1.0, 0.0)));
        let bubble = plus_sea_with(&[Cell::new(4, 4)]);
        assert_eq!(averaged_normal(&bubble, Point::new(4.0, 4.0), 1.0).unwrap(), NormalEstimate::NonUnique);
        assert!(averaged_normal(&bubble, Point::new(1.0, 1.0), 1.0).is_err());
        // + on the quadrant x ≥ 4, y ≥ 4, corner at (3.5, 3.5)
        let corner = SpinField::from_fn(Extent::new(0, 0, 9, 9), Boundary::Free, |c| if c.x >= 4 && c.y >= 4 { 1 } else { -1 }).unwrap();
        let n = averaged_normal(&corner, Point::new(3.5, 3.5), 1.0).unwrap().unique().unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((n - Point::new(h, h)).norm() < 1e-12);
    }

    #[test]
    fn eta_of_straight_interface_is_zero() {
        let s = LineConfig::new(Point::new(10.0, 0.0), Point::new(1.0, 0.0)).unwrap().rasterize(Extent::new(0, 0, 21, 21)).unwrap();
        let audit = eta_audit(&s, Point::new(10.0, 10.0), 8.0, 20, 3).unwrap();
        assert_eq!(audit.eta_hat, 0.0);
        assert_eq!(audit.balls.len(), 20);
        let sub = eta_audit_balls(&s, &[(Cell::new(10, 10), 3.0)]).unwrap();
        assert!(sub.eta_hat <= audit.eta_hat);
    }

    #[test]
    fn eta_of_a_bump_is_positive() {
        let s = SpinField::from_fn(Extent::new(0, 0, 15, 15), Boundary::Free, |c| {
            if c.x >= 7 || (c.x == 6 && c.y == 7) { 1 } else { -1 }
        })
        .unwrap();
        let a = eta_audit_balls(&s, &[(Cell::new(7, 7), 3.0)]).unwrap();
        assert_eq!(a.balls[0].per, 9.0);
        assert_eq!(a.balls[0].per_star, 7.0);
        assert!((a.eta_hat - 2.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn density_of_a_line() {
        let s = LineConfig::new(Point::new(10.0, 0.0), Point::new(1.0, 0.0)).unwrap().rasterize(Extent::new(0, 0, 21, 21)).unwrap();
        let d = density_check(&s, Point::new(9.5, 10.0), 5.0, 0.0).unwrap();
        assert_eq!(d.plus_fraction, 0.5);
        assert!(d.all_ok());
        let bubble = plus_sea_with(&[Cell::new(1, 1)]);
        assert!(matches!(density_check(&bubble, Point::new(5.0, 5.0), 2.0, 0.0), Err(Error::Precondition(_))));
    }

    #[test]
    fn height_closed_form() {
        let (a, b) = (Point::new(-1.0, 0.0), Point::new(1.0, 0.0));
        let apex = Point::new(0.0, 0.5 * 5f64.sqrt());
        let h = height_bound_check(a, b, 0.5, &[a, apex, b]).unwrap();
        assert!((h.h - 0.5 * 5f64.sqrt()).abs() < 1e-12);
        assert!((h.bound - 2.0 * 1.25f64.sqrt()).abs() < 1e-12);
        assert!(h.ok);
        assert_eq!(height_bound_check(a, b, 0.0, &[a, b]).unwrap().h, 0.0);
        assert!(height_bound_check(a, b, 0.1, &[a, apex, b]).is_err());
    }

    #[test]
    fn tilt_of_identical_and_parallel_lines() {
        let l = LineConfig::from_angle(Point::new(0.1, 0.0), 0.3);
        assert_eq!(normal_tilt_check(&l, &l), TiltCheck::Checked { d: 0.0, tilt: 0.0, ok: true });
        let p = LineConfig { anchor: l.anchor + l.normal * 0.01, normal: -l.normal };
        match normal_tilt_check(&l, &p) {
            TiltCheck::Checked { d, tilt, ok } => assert!(ok && tilt == 0.0 && d > 0.0, "{d} {tilt}"),
            TiltCheck::Skipped => panic!("pair satisfies the hypotheses"),
        }
        let far = LineConfig::from_angle(Point::new(0.5, 0.0), 0.0);
        assert_eq!(normal_tilt_check(&far, &l), TiltCheck::Skipped);
    }

    #[test]
    fn modulus_on_axis_line() {
        let s = LineConfig::new(Point::new(10.0, 0.0), Point::new(1.0, 0.0)).unwrap().rasterize(Extent::new(0, 0, 21, 21)).unwrap();
        let x = Point::new(9.5, 3.0);
        let t = modulus_table(&s, &[(x, x), (x, Point::new(9.5, 15.0))], 0.1).unwrap();
        assert_eq!(t.rows.len(), 2);
        assert_eq!(t.max_difference(), 0.0);
        assert!(t.rows[1].shape > 0.0);
    }
}
