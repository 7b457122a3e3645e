//! Uniform time grids and sampled vector-valued functions on them.

use crate::error::{Error, Result};

/// Uniform discretization of a time interval [a, b] into `n_steps` steps
/// (`n_steps + 1` nodes).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    a: f64,
    b: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(a: f64, b: f64, n_steps: usize) -> Result<Self> {
        if !a.is_finite() || !b.is_finite() || !(a < b) {
            return Err(Error::InvalidInput(format!(
                "time grid needs finite a < b, got a={a}, b={b}"
            )));
        }
        if n_steps < 2 {
            return Err(Error::InvalidInput(format!(
                "time grid needs at least 2 steps, got {n_steps}"
            )));
        }
        Ok(TimeGrid { a, b, n_steps })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// Number of nodes, `n_steps + 1`.
    pub fn len(&self) -> usize {
        self.n_steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Step size h = (b − a)/n_steps.
    pub fn h(&self) -> f64 {
        (self.b - self.a) / self.n_steps as f64
    }

    /// Node t_i = a + i·h.
    pub fn node(&self, i: usize) -> f64 {
        debug_assert!(i <= self.n_steps);
        self.a + i as f64 * self.h()
    }

    /// All nodes in order.
    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(move |i| self.node(i))
    }

    /// Index of the last node at or before time t (clamped into range).
    pub fn index_at(&self, t: f64) -> usize {
        let raw = ((t - self.a) / self.h()).floor();
        (raw.max(0.0) as usize).min(self.n_steps)
    }
}

/// A sampled function [a,b] → ℝ^dim: one row of `dim` values per grid node,
/// stored row-major in a flat buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    grid: TimeGrid,
    dim: usize,
    values: Vec<f64>,
}

impl Trajectory {
    /// All-zero samples.
    pub fn zeros(grid: TimeGrid, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("trajectory dimension must be positive".into()));
        }
        Ok(Trajectory {
            grid,
            dim,
            values: vec![0.0; grid.len() * dim],
        })
    }

    /// Every node set to the same row.
    pub fn constant(grid: TimeGrid, row: &[f64]) -> Result<Self> {
        let mut tr = Self::zeros(grid, row.len())?;
        for i in 0..grid.len() {
            tr.row_mut(i).copy_from_slice(row);
        }
        Ok(tr)
    }

    /// Samples `f(t_i)` at every node.
    pub fn from_fn(grid: TimeGrid, dim: usize, mut f: impl FnMut(f64) -> Vec<f64>) -> Result<Self> {
        let mut tr = Self::zeros(grid, dim)?;
        for i in 0..grid.len() {
            let row = f(grid.node(i));
            if row.len() != dim {
                return Err(Error::InvalidInput(format!(
                    "sampler returned {} components, expected {dim}",
                    row.len()
                )));
            }
            tr.row_mut(i).copy_from_slice(&row);
        }
        Ok(tr)
    }

    /// Wraps a flat row-major buffer of `(n_steps + 1) × dim` values.
    pub fn from_flat(grid: TimeGrid, dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("trajectory dimension must be positive".into()));
        }
        if values.len() != grid.len() * dim {
            return Err(Error::InvalidInput(format!(
                "flat buffer has {} values, expected {} nodes x {dim}",
                values.len(),
                grid.len()
            )));
        }
        Ok(Trajectory { grid, dim, values })
    }

    /// Wraps an existing scalar sample vector (dim = 1).
    pub fn from_scalar_samples(grid: TimeGrid, samples: Vec<f64>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::InvalidInput(format!(
                "sample count {} does not match node count {}",
                samples.len(),
                grid.len()
            )));
        }
        Ok(Trajectory {
            grid,
            dim: 1,
            values: samples,
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.values[i * self.dim..(i + 1) * self.dim]
    }

    /// Single entry (node i, component d).
    pub fn get(&self, i: usize, d: usize) -> f64 {
        self.values[i * self.dim + d]
    }

    pub fn set(&mut self, i: usize, d: usize, v: f64) {
        self.values[i * self.dim + d] = v;
    }

    /// The samples of one component as a contiguous vector.
    pub fn component(&self, d: usize) -> Vec<f64> {
        (0..self.grid.len()).map(|i| self.get(i, d)).collect()
    }

    /// Scalar shortcut for dim-1 trajectories.
    pub fn scalar(&self, i: usize) -> f64 {
        debug_assert_eq!(self.dim, 1);
        self.values[i]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Max-norm difference against another trajectory on the same grid/shape.
    pub fn max_abs_diff(&self, other: &Trajectory) -> Result<f64> {
        if self.grid != other.grid || self.dim != other.dim {
            return Err(Error::InvalidInput(
                "trajectories live on different grids or dimensions".into(),
            ));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max))
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    /// Errors if any entry is NaN or infinite.
    pub fn validate_finite(&self) -> Result<()> {
        match self.values.iter().position(|v| !v.is_finite()) {
            None => Ok(()),
            Some(flat) => Err(Error::InvalidInput(format!(
                "non-finite trajectory entry at node {}, component {}",
                flat / self.dim,
                flat % self.dim
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn grid_nodes_are_uniform_and_increasing() {
        let g = TimeGrid::new(1.0, 5.0, 8).unwrap();
        assert_eq!(g.len(), 9);
        assert_relative_eq!(g.h(), 0.5);
        assert_relative_eq!(g.node(0), 1.0);
        assert_relative_eq!(g.node(8), 5.0);
        let nodes: Vec<f64> = g.nodes().collect();
        assert!(nodes.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn grid_rejects_bad_intervals() {
        assert!(TimeGrid::new(1.0, 1.0, 10).is_err());
        assert!(TimeGrid::new(2.0, 1.0, 10).is_err());
        assert!(TimeGrid::new(0.0, f64::NAN, 10).is_err());
        assert!(TimeGrid::new(0.0, 1.0, 1).is_err());
    }

    #[test]
    fn index_at_clamps_and_floors() {
        let g = TimeGrid::new(0.0, 1.0, 10).unwrap();
        assert_eq!(g.index_at(0.0), 0);
        assert_eq!(g.index_at(0.349), 3);
        assert_eq!(g.index_at(2.0), 10);
        assert_eq!(g.index_at(-1.0), 0);
    }

    #[test]
    fn trajectory_round_trips_rows() {
        let g = TimeGrid::new(0.0, 1.0, 4).unwrap();
        let mut tr = Trajectory::zeros(g, 2).unwrap();
        tr.row_mut(3).copy_from_slice(&[1.5, -2.5]);
        assert_eq!(tr.row(3), &[1.5, -2.5]);
        assert_eq!(tr.get(3, 1), -2.5);
        assert_eq!(tr.component(1), vec![0.0, 0.0, 0.0, -2.5, 0.0]);
    }

    #[test]
    fn trajectory_shape_checks() {
        let g = TimeGrid::new(0.0, 1.0, 4).unwrap();
        assert!(Trajectory::zeros(g, 0).is_err());
        assert!(Trajectory::from_scalar_samples(g, vec![0.0; 3]).is_err());
        let g2 = TimeGrid::new(0.0, 1.0, 5).unwrap();
        let a = Trajectory::zeros(g, 1).unwrap();
        let b = Trajectory::zeros(g2, 1).unwrap();
        assert!(a.max_abs_diff(&b).is_err());
    }

    #[test]
    fn finite_validation_reports_position() {
        let g = TimeGrid::new(0.0, 1.0, 4).unwrap();
        let mut tr = Trajectory::zeros(g, 2).unwrap();
        tr.set(2, 1, f64::NAN);
        let err = tr.validate_finite().unwrap_err();
        assert!(err.to_string().contains("node 2"));
    }
}
