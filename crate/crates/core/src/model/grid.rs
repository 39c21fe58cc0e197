use serde::{Deserialize, Serialize};

use super::Point;
use crate::error::{invalid, Result};

/// Axis-aligned rectangle, closed on all sides.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl Rect {
    pub fn new(min: [f64; 2], max: [f64; 2]) -> Self {
        Self { min, max }
    }

    pub fn width(&self) -> f64 {
        self.max[0] - self.min[0]
    }

    pub fn height(&self) -> f64 {
        self.max[1] - self.min[1]
    }

    pub fn contains(&self, p: &Point) -> bool {
        p.x >= self.min[0] && p.x <= self.max[0] && p.y >= self.min[1] && p.y <= self.max[1]
    }
}

/// Regular square-cell grid covering the environment.
///
/// Cell `m` sits at `(row, col) = (m / width, m % width)`; row 0 is the row
/// with the smallest y coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatialGrid {
    origin: [f64; 2],
    cell_size: f64,
    width: usize,
    height: usize,
}

impl SpatialGrid {
    pub fn new(origin: [f64; 2], cell_size: f64, width: usize, height: usize) -> Result<Self> {
        if !(cell_size > 0.0 && cell_size.is_finite()) {
            return Err(invalid("cell_size", format!("must be positive, got {cell_size}")));
        }
        if width == 0 || height == 0 {
            return Err(invalid("width/height", "grid needs at least one cell"));
        }
        if !origin.iter().all(|v| v.is_finite()) {
            return Err(invalid("origin", "must be finite"));
        }
        Ok(Self {
            origin,
            cell_size,
            width,
            height,
        })
    }

    /// Smallest grid of `cell_size` cells that covers `rect`.
    pub fn covering(rect: &Rect, cell_size: f64) -> Result<Self> {
        let w = (rect.width() / cell_size).ceil().max(1.0) as usize;
        let h = (rect.height() / cell_size).ceil().max(1.0) as usize;
        Self::new(rect.min, cell_size, w, h)
    }

    pub fn origin(&self) -> [f64; 2] {
        self.origin
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Number of cells `M`.
    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn bounds(&self) -> Rect {
        Rect::new(
            self.origin,
            [
                self.origin[0] + self.width as f64 * self.cell_size,
                self.origin[1] + self.height as f64 * self.cell_size,
            ],
        )
    }

    pub fn index(&self, row: usize, col: usize) -> usize {
        debug_assert!(row < self.height && col < self.width);
        row * self.width + col
    }

    pub fn row_col(&self, m: usize) -> (usize, usize) {
        (m / self.width, m % self.width)
    }

    pub fn cell_center(&self, m: usize) -> Point {
        let (row, col) = self.row_col(m);
        Point::new(
            self.origin[0] + (col as f64 + 0.5) * self.cell_size,
            self.origin[1] + (row as f64 + 0.5) * self.cell_size,
        )
    }

    pub fn cell_centers(&self) -> Vec<Point> {
        (0..self.len()).map(|m| self.cell_center(m)).collect()
    }

    /// Cell containing `pos`, or `None` outside the bounds.
    ///
    /// Points on a shared edge belong to the cell with the lower index.
    pub fn locate_cell(&self, pos: &Point) -> Option<usize> {
        if !pos.x.is_finite() || !pos.y.is_finite() || !self.bounds().contains(pos) {
            return None;
        }
        let col = Self::axis_bin((pos.x - self.origin[0]) / self.cell_size, self.width);
        let row = Self::axis_bin((pos.y - self.origin[1]) / self.cell_size, self.height);
        Some(self.index(row, col))
    }

    // ceil(u) - 1 sends an exact edge coordinate to the lower bin.
    fn axis_bin(u: f64, n: usize) -> usize {
        let bin = u.ceil() as i64 - 1;
        bin.clamp(0, n as i64 - 1) as usize
    }

    /// 4-neighbours of cell `m`.
    pub fn neighbors4(&self, m: usize) -> impl Iterator<Item = usize> + '_ {
        let (row, col) = self.row_col(m);
        let candidates = [
            (row > 0).then(|| m - self.width),
            (col > 0).then(|| m - 1),
            (col + 1 < self.width).then(|| m + 1),
            (row + 1 < self.height).then(|| m + self.width),
        ];
        candidates.into_iter().flatten()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_grid() -> SpatialGrid {
        SpatialGrid::new([0.0, 0.0], 1.0, 4, 3).unwrap()
    }

    #[test]
    fn locates_interior_point() {
        let g = unit_grid();
        assert_eq!(g.locate_cell(&Point::new(0.5, 0.5)), Some(0));
        assert_eq!(g.row_col(g.locate_cell(&Point::new(2.5, 1.5)).unwrap()), (1, 2));
    }

    #[test]
    fn outside_bounds_is_none() {
        let g = unit_grid();
        assert_eq!(g.locate_cell(&Point::new(-0.1, 0.5)), None);
        assert_eq!(g.locate_cell(&Point::new(4.01, 0.5)), None);
        assert_eq!(g.locate_cell(&Point::new(1.0, 3.5)), None);
        assert_eq!(g.locate_cell(&Point::new(f64::NAN, 0.5)), None);
    }

    #[test]
    fn edge_goes_to_lower_index() {
        let g = unit_grid();
        assert_eq!(g.locate_cell(&Point::new(1.0, 0.5)), Some(0));
        assert_eq!(g.locate_cell(&Point::new(0.5, 1.0)), Some(0));
        assert_eq!(g.locate_cell(&Point::new(2.0, 2.0)), Some(g.index(1, 1)));
        // outer boundary stays inside
        assert_eq!(g.locate_cell(&Point::new(0.0, 0.0)), Some(0));
        assert_eq!(g.locate_cell(&Point::new(4.0, 3.0)), Some(g.len() - 1));
    }

    #[test]
    fn centers_lie_in_own_cell() {
        let g = SpatialGrid::new([-3.0, 2.0], 0.5, 7, 5).unwrap();
        for m in 0..g.len() {
            let c = g.cell_center(m);
            assert!(g.bounds().contains(&c));
            assert_eq!(g.locate_cell(&c), Some(m));
            let (r, col) = g.row_col(m);
            assert_eq!(g.index(r, col), m);
        }
    }

    #[test]
    fn rejects_degenerate_grids() {
        assert!(SpatialGrid::new([0.0, 0.0], 0.0, 2, 2).is_err());
        assert!(SpatialGrid::new([0.0, 0.0], 1.0, 0, 2).is_err());
    }

    #[test]
    fn neighbours_on_corner_and_interior() {
        let g = unit_grid();
        let mut n: Vec<_> = g.neighbors4(0).collect();
        n.sort();
        assert_eq!(n, vec![1, 4]);
        assert_eq!(g.neighbors4(g.index(1, 1)).count(), 4);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn locate_is_total_and_idempotent(x in 0.0f64..=4.0, y in 0.0f64..=3.0) {
                let g = unit_grid();
                let p = Point::new(x, y);
                let m = g.locate_cell(&p);
                prop_assert!(m.is_some());
                prop_assert_eq!(m, g.locate_cell(&p));
                let m = m.unwrap();
                let c = g.cell_center(m);
                prop_assert!((c.x - x).abs() <= 0.5 + 1e-12);
                prop_assert!((c.y - y).abs() <= 0.5 + 1e-12);
            }
        }
    }
}
