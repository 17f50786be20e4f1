//! Pieces shared by several experiments.

use rand::Rng;
use rfcurve::geometry::{jump_edges, LineConfig};
use rfcurve::groundstate::{ground_state_with, SpinField};
use rfcurve::lattice::{Extent, Point};
use rfcurve::maxflow::{self, Boundary, EnergyMode, Exterior, MaxFlowSolver};
use rfcurve::noise::{self, NoiseKind};
use rfcurve::Stencil;

use crate::config::ensure;
use crate::error::{CliError, Result};
use crate::record::Scalars;

/// Stream for experiment-side sampling of points, radii and angles, apart
/// from the noise streams.
pub const SAMPLING_STREAM: u64 = 11;

pub fn sampling_rng(seed: u64) -> impl Rng {
    rfcurve::rng::stream_rng(seed, SAMPLING_STREAM)
}

/// Noise, stencil, energy and solver choices.
#[derive(Clone, Copy)]
pub struct Model {
    pub noise: NoiseKind,
    pub stencil: Stencil,
    pub mode: EnergyMode,
    pub solver: &'static dyn MaxFlowSolver,
}

impl Model {
    /// Parses the four names, reporting errors at `params.<field>`.
    pub fn parse(noise: &str, stencil: &str, mode: &str, solver: &str) -> Result<Self> {
        fn named<T: std::str::FromStr>(field: &str, v: &str) -> Result<T>
        where
            T::Err: std::fmt::Display,
        {
            v.parse().map_err(|e: T::Err| CliError::config(format!("params.{field}"), e.to_string()))
        }
        Ok(Self {
            noise: named("noise", noise)?,
            stencil: named("stencil", stencil)?,
            mode: named("mode", mode)?,
            solver: maxflow::solver(solver).map_err(|e| CliError::config("params.solver", e.to_string()))?,
        })
    }

    pub fn tag(&self, unit: super::Unit) -> super::Unit {
        unit.with("noise", self.noise.to_string())
            .with("stencil", self.stencil.to_string())
            .with("mode", self.mode.to_string())
    }
}

/// Central spins under the plus and minus boundary on common noise.
pub fn paired_origin(model: &Model, epsilon: f64, l: usize, seed: u64) -> Result<Scalars> {
    let field = noise::sample(model.noise, l, l, seed)?;
    let plus = ground_state_with(model.solver, &field, epsilon, &Boundary::Plus, model.stencil, model.mode)?;
    let minus = ground_state_with(model.solver, &field, epsilon, &Boundary::Minus, model.stencil, model.mode)?;
    let o = plus.center_cell();
    let mut s = Scalars::default();
    s.int("plus_origin", plus.at(o).into())
        .int("minus_origin", minus.at(o).into())
        .int("differs", i64::from(plus.at(o) != minus.at(o)))
        .flag("coupling_ok", plus.dominates(&minus));
    Ok(s)
}

/// Boundary fixed by the half-plane through the box centre with normal angle
/// `angle`.
pub fn dobrushin(extent: Extent, angle: f64) -> Result<(LineConfig, Boundary)> {
    let c = extent.center_cell().center();
    let line = LineConfig::from_angle(c, angle);
    let ext = Exterior::from_fn(extent, 2, |x| line.cell_spin(x))?;
    Ok((line, Boundary::Spins(ext)))
}

/// Jump-edge midpoints at least `margin` inside the box.
pub fn jump_points(spin: &SpinField, margin: f64) -> Vec<Point> {
    let e = spin.extent();
    let (x0, y0) = (e.x0 as f64 - 0.5, e.y0 as f64 - 0.5);
    let (x1, y1) = (x0 + e.width as f64, y0 + e.height as f64);
    jump_edges(spin)
        .into_iter()
        .map(|j| j.midpoint)
        .filter(|p| p.x - x0 >= margin && x1 - p.x >= margin && p.y - y0 >= margin && y1 - p.y >= margin)
        .collect()
}

/// Random pairs of jump points at distance in `(0, max_sep]`.
pub fn jump_pairs(points: &[Point], n_pairs: usize, max_sep: f64, rng: &mut impl Rng) -> Vec<(Point, Point)> {
    let mut out = Vec::with_capacity(n_pairs);
    if points.len() < 2 {
        return out;
    }
    for _ in 0..n_pairs {
        let x = points[rng.random_range(0..points.len())];
        let near: Vec<Point> = points.iter().copied().filter(|y| y.dist(x) > 0.0 && y.dist(x) <= max_sep).collect();
        if !near.is_empty() {
            out.push((x, near[rng.random_range(0..near.len())]));
        }
    }
    out
}

/// Mean, standard error and maximum; non-finite values propagate.
#[derive(Clone, Copy, Debug)]
pub struct Stat {
    pub n: usize,
    pub mean: f64,
    pub se: f64,
    pub max: f64,
}

pub fn stat(values: &[f64]) -> Stat {
    let n = values.len();
    if n == 0 {
        return Stat { n, mean: f64::NAN, se: f64::NAN, max: f64::NAN };
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let se = if n > 1 && mean.is_finite() {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64 / n as f64).sqrt()
    } else {
        f64::NAN
    };
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Stat { n, mean, se, max }
}

pub fn positive(path: &str, v: usize) -> Result<()> {
    ensure(v > 0, path, "must be positive")
}

pub fn nonempty<T>(path: &str, v: &[T]) -> Result<()> {
    ensure(!v.is_empty(), path, "must not be empty")
}

pub fn increasing(path: &str, v: &[f64]) -> Result<()> {
    ensure(v.windows(2).all(|w| w[0] < w[1]), path, "must be strictly increasing")
}

pub fn default_t_grid() -> Vec<f64> {
    vec![0.5, 1.0, 1.5, 2.0, 3.0]
}

pub fn four_pi() -> f64 {
    4.0 * std::f64::consts::PI
}
