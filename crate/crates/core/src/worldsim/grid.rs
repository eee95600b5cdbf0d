use serde::Serialize;

use super::sense::OrientedRect;
use super::Bounds;
use crate::error::{Error, Result};
use crate::image::Image;

pub const DEFAULT_GRID_RESOLUTION: f64 = 0.5;

/// Binary occupancy over the scenario bounds; cell (i, j) has its center at
/// `origin + ((i + 0.5) r, (j + 0.5) r)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OccupancyGrid {
    pub resolution: f64,
    pub origin: [f64; 2],
    pub cols: usize,
    pub rows: usize,
    cells: Vec<bool>,
}

impl OccupancyGrid {
    pub fn new(bounds: &Bounds, resolution: f64) -> Result<Self> {
        if !(resolution.is_finite() && resolution > 0.0) {
            return Err(Error::Domain(format!("grid resolution must be > 0, got {resolution}")));
        }
        let cols = ((bounds.max[0] - bounds.min[0]) / resolution).ceil().max(1.0) as usize;
        let rows = ((bounds.max[1] - bounds.min[1]) / resolution).ceil().max(1.0) as usize;
        Ok(OccupancyGrid { resolution, origin: bounds.min, cols, rows, cells: vec![false; cols * rows] })
    }

    pub fn cell_center(&self, i: usize, j: usize) -> [f64; 2] {
        [
            self.origin[0] + (i as f64 + 0.5) * self.resolution,
            self.origin[1] + (j as f64 + 0.5) * self.resolution,
        ]
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.cells[j * self.cols + i]
    }

    pub fn count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    /// Occupied cell indices `(i, j)` in row-major order.
    pub fn occupied(&self) -> Vec<(usize, usize)> {
        (0..self.rows)
            .flat_map(|j| (0..self.cols).map(move |i| (i, j)))
            .filter(|&(i, j)| self.get(i, j))
            .collect()
    }

    /// Mark every cell whose center lies inside `rect` (boundary inclusive).
    pub fn rasterize(&mut self, rect: &OrientedRect) {
        let (min, max) = rect.aabb();
        let r = self.resolution;
        let lo = |v: f64, o: f64| (((v - o) / r - 0.5).floor().max(0.0)) as usize;
        let hi = |v: f64, o: f64, n: usize| ((((v - o) / r - 0.5).ceil()).max(-1.0) as i64).min(n as i64 - 1);
        let (i0, j0) = (lo(min[0], self.origin[0]), lo(min[1], self.origin[1]));
        let (i1, j1) = (hi(max[0], self.origin[0], self.cols), hi(max[1], self.origin[1], self.rows));
        for j in j0 as i64..=j1 {
            for i in i0 as i64..=i1 {
                let (i, j) = (i as usize, j as usize);
                if rect.contains(self.cell_center(i, j)) {
                    self.cells[j * self.cols + i] = true;
                }
            }
        }
    }

    pub fn union_with(&mut self, other: &OccupancyGrid) -> Result<()> {
        self.check_geometry(other)?;
        self.cells.iter_mut().zip(&other.cells).for_each(|(a, &b)| *a |= b);
        Ok(())
    }

    fn check_geometry(&self, other: &OccupancyGrid) -> Result<()> {
        if self.cols == other.cols && self.rows == other.rows && self.resolution == other.resolution && self.origin == other.origin {
            Ok(())
        } else {
            Err(Error::Format("occupancy grids differ in geometry".into()))
        }
    }

    /// Grayscale rendering, +y up: occupied cells white.
    pub fn to_image(&self) -> Image {
        Image::from_fn(self.cols, self.rows, 1, |_, x, y| if self.get(x, self.rows - 1 - y) { 255.0 } else { 0.0 })
            .expect("grid has at least one cell")
    }
}

/// `|a ∧ b| / |a ∨ b|`, defined as 1 when both are empty.
pub fn iou(a: &OccupancyGrid, b: &OccupancyGrid) -> Result<f64> {
    a.check_geometry(b)?;
    let (mut inter, mut union) = (0usize, 0usize);
    for (&x, &y) in a.cells.iter().zip(&b.cells) {
        inter += (x && y) as usize;
        union += (x || y) as usize;
    }
    Ok(if union == 0 { 1.0 } else { inter as f64 / union as f64 })
}
