use std::collections::VecDeque;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{SpatialGrid, Velocity, VelocityField};
use crate::error::{Error, Result};

/// 1-based zone identifier.
pub type ZoneId = usize;

/// Motion pattern of a zone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ZoneGroup {
    Straight,
    Curve,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Zone {
    pub id: ZoneId,
    /// Sorted cell indices.
    pub cells: Vec<usize>,
    /// Mean of the field's mean velocity over `cells`.
    pub u: Velocity,
    pub group: ZoneGroup,
}

/// Partition of the unmasked grid cells into zones.
#[derive(Debug, Clone, PartialEq)]
pub struct ZoneMap {
    zones: Vec<Zone>,
    cell_to_zone: Vec<Option<ZoneId>>,
}

impl ZoneMap {
    /// Zone ids must be `1..=N` in order; zones must not overlap.
    pub fn new(zones: Vec<Zone>, n_cells: usize) -> Result<Self> {
        let mut cell_to_zone = vec![None; n_cells];
        for (i, z) in zones.iter().enumerate() {
            if z.id != i + 1 {
                return Err(Error::Format(format!(
                    "zone ids must be consecutive from 1; found {} at position {i}",
                    z.id
                )));
            }
            if z.cells.is_empty() {
                return Err(Error::Format(format!("zone {} is empty", z.id)));
            }
            for &c in &z.cells {
                match cell_to_zone.get_mut(c) {
                    None => return Err(Error::Format(format!("zone {} cell {c} off grid", z.id))),
                    Some(Some(other)) => {
                        return Err(Error::Format(format!(
                            "cell {c} claimed by zones {other} and {}",
                            z.id
                        )))
                    }
                    Some(slot) => *slot = Some(z.id),
                }
            }
        }
        Ok(Self {
            zones,
            cell_to_zone,
        })
    }

    pub fn zones(&self) -> &[Zone] {
        &self.zones
    }

    pub fn len(&self) -> usize {
        self.zones.len()
    }

    pub fn is_empty(&self) -> bool {
        self.zones.is_empty()
    }

    pub fn zone(&self, id: ZoneId) -> Option<&Zone> {
        id.checked_sub(1).and_then(|i| self.zones.get(i))
    }

    pub fn zone_of_cell(&self, m: usize) -> Option<ZoneId> {
        self.cell_to_zone.get(m).copied().flatten()
    }

    pub fn cell_to_zone(&self) -> &[Option<ZoneId>] {
        &self.cell_to_zone
    }

    pub fn ids_in_group(&self, group: ZoneGroup) -> Vec<ZoneId> {
        self.zones
            .iter()
            .filter(|z| z.group == group)
            .map(|z| z.id)
            .collect()
    }

    /// Checks the structural invariants against the field the map was built
    /// from: exact partition of the unmasked cells, 4-connected zones and
    /// `u` equal to the member mean within `tol`.
    pub fn check_invariants(&self, field: &VelocityField, tol: f64) -> Result<(), String> {
        let grid = &field.grid;
        if self.cell_to_zone.len() != grid.len() {
            return Err("zone map and field cover different grids".into());
        }
        for m in 0..grid.len() {
            match (field.evidence[m], self.cell_to_zone[m]) {
                (true, None) => return Err(format!("unmasked cell {m} has no zone")),
                (false, Some(z)) => return Err(format!("masked cell {m} assigned to zone {z}")),
                _ => {}
            }
        }
        for z in &self.zones {
            if !is_connected(grid, &z.cells) {
                return Err(format!("zone {} is not 4-connected", z.id));
            }
            let mean = member_mean(field, &z.cells);
            if (mean - z.u).norm() > tol {
                return Err(format!(
                    "zone {} u={:?} differs from member mean {:?}",
                    z.id, z.u, mean
                ));
            }
        }
        Ok(())
    }

    /// CSV `row,col,zone_id`; cells without a zone get an empty id.
    pub fn write_csv<W: Write>(&self, grid: &SpatialGrid, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["row", "col", "zone_id"])?;
        for (m, z) in self.cell_to_zone.iter().enumerate() {
            let (row, col) = grid.row_col(m);
            wtr.write_record([
                row.to_string(),
                col.to_string(),
                z.map(|z| z.to_string()).unwrap_or_default(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// Reads the cell assignment written by [`write_csv`](Self::write_csv).
    pub fn read_assignment<R: Read>(reader: R, grid: &SpatialGrid) -> Result<Vec<Option<ZoneId>>> {
        let mut out = vec![None; grid.len()];
        let mut rdr = csv::Reader::from_reader(reader);
        for rec in rdr.records() {
            let rec = rec?;
            let parse = |s: &str| -> Result<usize> {
                s.parse()
                    .map_err(|e| Error::Format(format!("bad zone row value {s:?}: {e}")))
            };
            let (row, col) = (parse(&rec[0])?, parse(&rec[1])?);
            if row >= grid.height() || col >= grid.width() {
                return Err(Error::Format(format!("zone cell ({row},{col}) outside grid")));
            }
            let id = match rec.get(2) {
                None | Some("") => None,
                Some(s) => Some(parse(s)?),
            };
            out[grid.index(row, col)] = id;
        }
        Ok(out)
    }
}

/// Arithmetic mean of the field's mean velocity over `cells`.
pub(crate) fn member_mean(field: &VelocityField, cells: &[usize]) -> Velocity {
    let sum = cells
        .iter()
        .fold(Velocity::zeros(), |acc, &c| acc + field.mean[c]);
    sum / cells.len() as f64
}

pub(crate) fn is_connected(grid: &SpatialGrid, cells: &[usize]) -> bool {
    let Some(&start) = cells.first() else {
        return false;
    };
    let mut member = vec![false; grid.len()];
    for &c in cells {
        member[c] = true;
    }
    let mut seen = vec![false; grid.len()];
    seen[start] = true;
    let mut queue = VecDeque::from([start]);
    let mut reached = 1;
    while let Some(c) = queue.pop_front() {
        for n in grid.neighbors4(c) {
            if member[n] && !seen[n] {
                seen[n] = true;
                reached += 1;
                queue.push_back(n);
            }
        }
    }
    reached == cells.len()
}
