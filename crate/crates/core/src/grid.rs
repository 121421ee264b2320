//! Lattice shortest paths for the conformal distance in four dimensions.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::PotentialField;

/// Node budget for a single grid.
pub const GRID_BUDGET: usize = 41 * 41 * 41 * 41;

const DIM: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Stencil {
    /// All 80 neighbours in `{-1, 0, 1}^4`.
    #[default]
    #[serde(rename = "axis_diagonal", alias = "axis+diagonal")]
    AxisDiagonal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub half_width: f64,
    pub nodes_per_axis: usize,
    #[serde(default)]
    pub stencil: Stencil,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            half_width: 4.0,
            nodes_per_axis: 25,
            stencil: Stencil::AxisDiagonal,
        }
    }
}

impl GridConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.half_width > 0.0 && self.half_width.is_finite()) {
            return Err(Error::config("grid.half_width must be positive"));
        }
        if self.nodes_per_axis < 11 || self.nodes_per_axis % 2 == 0 {
            return Err(Error::config("grid.nodes_per_axis must be odd and >= 11"));
        }
        self.check_budget()
    }

    fn check_budget(&self) -> Result<()> {
        let nodes = self.nodes_per_axis.pow(DIM as u32);
        if nodes > GRID_BUDGET {
            return Err(Error::GridBudget {
                nodes,
                budget: GRID_BUDGET,
            });
        }
        Ok(())
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.nodes_per_axis - 1) as f64
    }

    /// Same box with roughly half the nodes per axis (kept odd).
    pub fn coarsened(&self) -> GridConfig {
        let m = (self.nodes_per_axis - 1) / 2;
        GridConfig {
            nodes_per_axis: if m % 2 == 0 { m + 1 } else { m + 2 },
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridDistance {
    pub distance: f64,
    /// Same query on the coarsened grid.
    pub coarse_distance: f64,
    /// `|fine - coarse|`.
    pub error_estimate: f64,
    /// Flat lattice length over Euclidean length between the snapped nodes.
    pub lattice_stretch: f64,
    /// `distance / lattice_stretch`; exact in the flat case.
    pub corrected: f64,
}

#[derive(Clone, Copy, PartialEq)]
struct Entry {
    dist: f64,
    node: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    // Min-heap on distance; ties go to the lexicographically smaller node.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// `e^u` sampled on a cubic lattice `[-w, w]^4`.
#[derive(Debug, Clone)]
pub struct DistanceGrid {
    config: GridConfig,
    weights: Vec<f64>,
    offsets: Vec<([i64; DIM], f64)>,
}

impl DistanceGrid {
    pub fn new(field: &PotentialField, config: GridConfig) -> Result<Self> {
        if field.dimension() != DIM {
            return Err(Error::contract("grid distance is implemented for n = 4 only"));
        }
        config.check_budget()?;
        let m = config.nodes_per_axis;
        let total = m.pow(DIM as u32);
        let h = config.spacing();
        let w = config.half_width;
        let weights: Vec<f64> = (0..total)
            .into_par_iter()
            .map(|idx| {
                let c = coords(idx, m);
                let x: Vec<f64> = c.iter().map(|&k| -w + k as f64 * h).collect();
                field.eval_u(&x).exp()
            })
            .collect();
        let mut offsets = Vec::with_capacity(80);
        for code in 0..81usize {
            let mut o = [0i64; DIM];
            let mut c = code;
            for slot in o.iter_mut() {
                *slot = (c % 3) as i64 - 1;
                c /= 3;
            }
            if o.iter().any(|&v| v != 0) {
                let len = (o.iter().map(|v| v * v).sum::<i64>() as f64).sqrt() * h;
                offsets.push((o, len));
            }
        }
        Ok(DistanceGrid {
            config,
            weights,
            offsets,
        })
    }

    pub fn config(&self) -> &GridConfig {
        &self.config
    }

    /// Nearest lattice node, or an error outside the box.
    pub fn snap(&self, x: &[f64]) -> Result<usize> {
        let m = self.config.nodes_per_axis;
        let w = self.config.half_width;
        let h = self.config.spacing();
        if x.len() != DIM {
            return Err(Error::contract("grid points must have 4 coordinates"));
        }
        let mut idx = 0;
        for &xi in x.iter().rev() {
            if !(xi.abs() <= w * (1.0 + 1e-12)) {
                return Err(Error::OutOfRange(format!(
                    "point coordinate {xi} outside grid half-width {w}"
                )));
            }
            let k = (((xi + w) / h).round() as usize).min(m - 1);
            idx = idx * m + k;
        }
        Ok(idx)
    }

    pub fn node_position(&self, node: usize) -> Vec<f64> {
        let h = self.config.spacing();
        coords(node, self.config.nodes_per_axis)
            .iter()
            .map(|&k| -self.config.half_width + k as f64 * h)
            .collect()
    }

    /// Dijkstra from one node to every node.
    pub fn distances_from(&self, source: usize) -> Vec<f64> {
        let m = self.config.nodes_per_axis as i64;
        let mut dist = vec![f64::INFINITY; self.weights.len()];
        let mut done = vec![false; self.weights.len()];
        let mut heap = BinaryHeap::new();
        dist[source] = 0.0;
        heap.push(Entry {
            dist: 0.0,
            node: source,
        });
        while let Some(Entry { dist: d, node }) = heap.pop() {
            if done[node] {
                continue;
            }
            done[node] = true;
            let c = coords(node, m as usize);
            'edges: for (o, len) in &self.offsets {
                let mut next = 0i64;
                for axis in (0..DIM).rev() {
                    let k = c[axis] as i64 + o[axis];
                    if k < 0 || k >= m {
                        continue 'edges;
                    }
                    next = next * m + k;
                }
                let next = next as usize;
                if done[next] {
                    continue;
                }
                let nd = d + len * 0.5 * (self.weights[node] + self.weights[next]);
                if nd < dist[next] {
                    dist[next] = nd;
                    heap.push(Entry { dist: nd, node: next });
                }
            }
        }
        dist
    }

    pub fn distance(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let (a, b) = (self.snap(x)?, self.snap(y)?);
        Ok(self.distances_from(a)[b])
    }
}

fn coords(mut idx: usize, m: usize) -> [usize; DIM] {
    let mut c = [0; DIM];
    for slot in c.iter_mut() {
        *slot = idx % m;
        idx /= m;
    }
    c
}

/// Shortest flat lattice length for a displacement in grid steps: peel off
/// four-, three-, two- and one-axis diagonal moves.
pub fn flat_lattice_length(steps: &[i64]) -> f64 {
    let mut a: Vec<i64> = steps.iter().map(|s| s.abs()).collect();
    a.sort_unstable_by(|x, y| y.cmp(x));
    let mut len = 0.0;
    for k in 0..a.len() {
        let next = a.get(k + 1).copied().unwrap_or(0);
        len += (a[k] - next) as f64 * ((k + 1) as f64).sqrt();
    }
    len
}

pub fn lattice_stretch(grid: &DistanceGrid, a: usize, b: usize) -> f64 {
    let m = grid.config.nodes_per_axis;
    let (ca, cb) = (coords(a, m), coords(b, m));
    let steps: Vec<i64> = (0..DIM).map(|i| cb[i] as i64 - ca[i] as i64).collect();
    let eucl = (steps.iter().map(|s| s * s).sum::<i64>() as f64).sqrt();
    if eucl == 0.0 {
        1.0
    } else {
        flat_lattice_length(&steps) / eucl
    }
}

/// Grid geodesic distance with a one-refinement error estimate.
pub fn geodesic_distance_grid(
    field: &PotentialField,
    x: &[f64],
    y: &[f64],
    config: GridConfig,
) -> Result<GridDistance> {
    config.validate()?;
    let fine = DistanceGrid::new(field, config)?;
    let coarse = DistanceGrid::new(field, config.coarsened())?;
    let (a, b) = (fine.snap(x)?, fine.snap(y)?);
    let d = fine.distances_from(a)[b];
    let dc = coarse.distance(x, y)?;
    let stretch = lattice_stretch(&fine, a, b);
    Ok(GridDistance {
        distance: d,
        coarse_distance: dc,
        error_estimate: (d - dc).abs(),
        lattice_stretch: stretch,
        corrected: d / stretch,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_lattice_lengths() {
        assert_eq!(flat_lattice_length(&[3, 0, 0, 0]), 3.0);
        assert!((flat_lattice_length(&[2, 2, 0, 0]) - 2.0 * 2f64.sqrt()).abs() < 1e-15);
        assert!((flat_lattice_length(&[3, 1, 0, 0]) - (2.0 + 2f64.sqrt())).abs() < 1e-15);
        assert!((flat_lattice_length(&[1, 1, 1, 1]) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn config_validation() {
        assert!(GridConfig::default().validate().is_ok());
        let even = GridConfig {
            nodes_per_axis: 12,
            ..GridConfig::default()
        };
        assert!(even.validate().is_err());
        let huge = GridConfig {
            nodes_per_axis: 43,
            ..GridConfig::default()
        };
        assert!(matches!(huge.validate(), Err(Error::GridBudget { .. })));
        assert_eq!(GridConfig::default().coarsened().nodes_per_axis, 13);
    }
}
