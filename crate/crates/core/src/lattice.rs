//! Cells, points and discrete balls.
//!
//! Cell `(x, y)` is the unit square centred at the point `(x, y)`; its four
//! corners sit at half-integer coordinates. A discrete ball `B_r(c)` is the set
//! of cells whose centres lie within Euclidean distance `r` of `c`.

use std::ops::{Add, Mul, Neg, Sub};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell {
    pub x: i64,
    pub y: i64,
}

impl Cell {
    pub const fn new(x: i64, y: i64) -> Self {
        Self { x, y }
    }

    pub fn center(self) -> Point {
        Point::new(self.x as f64, self.y as f64)
    }

    pub fn offset(self, dx: i64, dy: i64) -> Self {
        Self::new(self.x + dx, self.y + dy)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm2(self) -> f64 {
        self.dot(self)
    }

    /// Counter-clockwise rotation by a right angle.
    pub fn perp(self) -> Point {
        Point::new(-self.y, self.x)
    }

    pub fn dist(self, o: Point) -> f64 {
        (self - o).norm()
    }

    pub fn normalized(self) -> Option<Point> {
        let n = self.norm();
        (n > 0.0).then(|| self * (1.0 / n))
    }

    pub fn from_angle(theta: f64) -> Point {
        Point::new(theta.cos(), theta.sin())
    }

    /// The cell containing this point (ties at cell faces round up).
    pub fn cell(self) -> Cell {
        Cell::new((self.x + 0.5).floor() as i64, (self.y + 0.5).floor() as i64)
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

const BALL_SLACK: f64 = 1e-9;

pub fn in_ball(cell: Cell, center: Point, radius: f64) -> bool {
    (cell.center() - center).norm2() <= radius * radius + BALL_SLACK
}

/// Cells of the discrete ball, ordered by row then column.
pub fn disc_cells(center: Point, radius: f64) -> Vec<Cell> {
    if radius < 0.0 {
        return Vec::new();
    }
    let y0 = (center.y - radius).floor() as i64;
    let y1 = (center.y + radius).ceil() as i64;
    let x0 = (center.x - radius).floor() as i64;
    let x1 = (center.x + radius).ceil() as i64;
    let mut out = Vec::new();
    for y in y0..=y1 {
        for x in x0..=x1 {
            let c = Cell::new(x, y);
            if in_ball(c, center, radius) {
                out.push(c);
            }
        }
    }
    out
}

/// Run-length encoding of a cell set: sorted by row then column, each
/// horizontal run written as `y:x+len`, runs separated by `;`.
pub fn encode_cells_rle(cells: &[Cell]) -> String {
    let mut sorted: Vec<Cell> = cells.to_vec();
    sorted.sort_by_key(|c| (c.y, c.x));
    sorted.dedup();
    let mut runs: Vec<(i64, i64, i64)> = Vec::new();
    for c in sorted {
        match runs.last_mut() {
            Some((y, x, len)) if *y == c.y && *x + *len == c.x => *len += 1,
            _ => runs.push((c.y, c.x, 1)),
        }
    }
    runs.iter().map(|(y, x, len)| format!("{y}:{x}+{len}")).collect::<Vec<_>>().join(";")
}

pub fn decode_cells_rle(s: &str) -> crate::Result<Vec<Cell>> {
    let bad = || crate::Error::Format(format!("malformed cell run list `{s}`"));
    let mut out = Vec::new();
    for run in s.split(';').filter(|r| !r.is_empty()) {
        let (y, rest) = run.split_once(':').ok_or_else(bad)?;
        let (x, len) = rest.split_once('+').ok_or_else(bad)?;
        let (y, x, len): (i64, i64, i64) =
            (y.parse().map_err(|_| bad())?, x.parse().map_err(|_| bad())?, len.parse().map_err(|_| bad())?);
        if len < 1 {
            return Err(bad());
        }
        out.extend((x..x + len).map(|x| Cell::new(x, y)));
    }
    Ok(out)
}

/// Axis-aligned rectangle of cells `[x0, x0 + width) × [y0, y0 + height)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Extent {
    pub x0: i64,
    pub y0: i64,
    pub width: usize,
    pub height: usize,
}

impl Extent {
    pub fn new(x0: i64, y0: i64, width: usize, height: usize) -> Self {
        Self { x0, y0, width, height }
    }

    pub fn contains(&self, c: Cell) -> bool {
        c.x >= self.x0
            && c.y >= self.y0
            && c.x < self.x0 + self.width as i64
            && c.y < self.y0 + self.height as i64
    }

    /// Row-major index of a contained cell.
    pub fn index(&self, c: Cell) -> Option<usize> {
        self.contains(c)
            .then(|| (c.y - self.y0) as usize * self.width + (c.x - self.x0) as usize)
    }

    pub fn cell_at(&self, index: usize) -> Cell {
        Cell::new(
            self.x0 + (index % self.width) as i64,
            self.y0 + (index / self.width) as i64,
        )
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.len()).map(|i| self.cell_at(i))
    }

    /// Centre cell (for even sizes the upper-right of the four central cells).
    pub fn center_cell(&self) -> Cell {
        Cell::new(
            self.x0 + (self.width / 2) as i64,
            self.y0 + (self.height / 2) as i64,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_ball_is_a_plus_sign() {
        let cells = disc_cells(Point::new(0.0, 0.0), 1.0);
        assert_eq!(cells.len(), 5);
        assert!(cells.contains(&Cell::new(0, -1)));
        assert!(!cells.contains(&Cell::new(1, 1)));
    }

    #[test]
    fn disc_area_tracks_pi_r_squared() {
        let r = 40.0;
        let n = disc_cells(Point::new(0.0, 0.0), r).len() as f64;
        assert!((n / (std::f64::consts::PI * r * r) - 1.0).abs() < 0.01);
    }

    #[test]
    fn extent_index_round_trips() {
        let e = Extent::new(-3, 2, 5, 4);
        for i in 0..e.len() {
            assert_eq!(e.index(e.cell_at(i)), Some(i));
        }
        assert_eq!(e.index(Cell::new(2, 2)), None);
    }

    #[test]
    fn rle_round_trips() {
        let cells = disc_cells(Point::new(0.5, -1.0), 2.5);
        let s = encode_cells_rle(&cells);
        assert_eq!(decode_cells_rle(&s).unwrap(), cells);
        assert_eq!(encode_cells_rle(&[Cell::new(3, 1), Cell::new(2, 1)]), "1:2+2");
        assert!(decode_cells_rle("1:2").is_err());
        assert!(decode_cells_rle("").unwrap().is_empty());
    }

    #[test]
    fn point_to_cell_rounds_to_nearest_centre() {
        assert_eq!(Point::new(0.49, -0.49).cell(), Cell::new(0, 0));
        assert_eq!(Point::new(1.6, -1.6).cell(), Cell::new(2, -2));
    }
}
