use std::io::{Read, Write};

use super::{SpatialGrid, Velocity};
use crate::error::{Error, Result};

/// Expected velocity over the grid with per-channel predictive variance.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityField {
    pub grid: SpatialGrid,
    pub mean: Vec<Velocity>,
    /// `(var_vx, var_vy)` per cell, (m/s)².
    pub variance: Vec<[f64; 2]>,
    /// `true` where the data gave sufficient evidence; `false` cells are
    /// masked out of zoning.
    pub evidence: Vec<bool>,
}

impl VelocityField {
    pub fn new(
        grid: SpatialGrid,
        mean: Vec<Velocity>,
        variance: Vec<[f64; 2]>,
        evidence: Vec<bool>,
    ) -> Result<Self> {
        let m = grid.len();
        if mean.len() != m || variance.len() != m || evidence.len() != m {
            return Err(Error::DimensionMismatch(format!(
                "field arrays must have {m} cells (mean {}, variance {}, evidence {})",
                mean.len(),
                variance.len(),
                evidence.len()
            )));
        }
        if variance.iter().flatten().any(|v| !(*v >= 0.0)) {
            return Err(Error::Format("negative or NaN variance in field".into()));
        }
        Ok(Self {
            grid,
            mean,
            variance,
            evidence,
        })
    }

    pub fn is_masked(&self, m: usize) -> bool {
        !self.evidence[m]
    }

    pub fn unmasked_cells(&self) -> impl Iterator<Item = usize> + '_ {
        self.evidence
            .iter()
            .enumerate()
            .filter_map(|(m, e)| e.then_some(m))
    }

    pub fn unmasked_count(&self) -> usize {
        self.evidence.iter().filter(|e| **e).count()
    }

    /// CSV `row,col,mean_vx,mean_vy,var_vx,var_vy,masked`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["row", "col", "mean_vx", "mean_vy", "var_vx", "var_vy", "masked"])?;
        for m in 0..self.grid.len() {
            let (row, col) = self.grid.row_col(m);
            wtr.write_record([
                row.to_string(),
                col.to_string(),
                self.mean[m].x.to_string(),
                self.mean[m].y.to_string(),
                self.variance[m][0].to_string(),
                self.variance[m][1].to_string(),
                u8::from(self.is_masked(m)).to_string(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// Reads a field written by [`write_csv`](Self::write_csv) onto `grid`.
    pub fn read_csv<R: Read>(reader: R, grid: SpatialGrid) -> Result<Self> {
        let m = grid.len();
        let mut mean = vec![Velocity::zeros(); m];
        let mut variance = vec![[0.0; 2]; m];
        let mut evidence = vec![false; m];
        let mut seen = vec![false; m];
        let mut rdr = csv::Reader::from_reader(reader);
        for rec in rdr.records() {
            let rec = rec?;
            if rec.len() != 7 {
                return Err(Error::Format(format!("field row has {} columns", rec.len())));
            }
            let num = |i: usize| -> Result<f64> {
                rec[i]
                    .parse()
                    .map_err(|e| Error::Format(format!("bad field value {:?}: {e}", &rec[i])))
            };
            let idx = |i: usize| -> Result<usize> {
                rec[i]
                    .parse()
                    .map_err(|e| Error::Format(format!("bad field index {:?}: {e}", &rec[i])))
            };
            let (row, col) = (idx(0)?, idx(1)?);
            if row >= grid.height() || col >= grid.width() {
                return Err(Error::Format(format!("field cell ({row},{col}) outside grid")));
            }
            let c = grid.index(row, col);
            mean[c] = Velocity::new(num(2)?, num(3)?);
            variance[c] = [num(4)?, num(5)?];
            evidence[c] = match &rec[6] {
                "0" => true,
                "1" => false,
                other => return Err(Error::Format(format!("bad masked flag {other:?}"))),
            };
            seen[c] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::Format("field CSV does not cover every cell".into()));
        }
        Self::new(grid, mean, variance, evidence)
    }
}
