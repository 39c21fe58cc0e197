use std::io::{Read, Write};
use std::path::Path;

use super::{Point, Velocity};
use crate::error::{invalid, Error, Result};

const TIME_TOLERANCE: f64 = 1e-9;

/// One observation of the agent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub k: u64,
    pub t: f64,
    pub pos: Point,
    pub frame_id: Option<u64>,
}

impl Sample {
    pub fn new(k: u64, t: f64, pos: Point) -> Self {
        Self {
            k,
            t,
            pos,
            frame_id: None,
        }
    }
}

/// Time-ordered, uniformly sampled positions of a single agent.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    samples: Vec<Sample>,
    dt: f64,
}

impl Trajectory {
    pub fn new(samples: Vec<Sample>, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(invalid("dt", format!("must be positive, got {dt}")));
        }
        for (i, w) in samples.windows(2).enumerate() {
            if w[1].k <= w[0].k {
                return Err(Error::InvalidTrajectory(format!(
                    "time index not strictly increasing at row {}",
                    i + 1
                )));
            }
            if ((w[1].t - w[0].t) - dt).abs() > TIME_TOLERANCE {
                return Err(Error::InvalidTrajectory(format!(
                    "time step {} at row {} differs from dt={dt}",
                    w[1].t - w[0].t,
                    i + 1
                )));
            }
        }
        if let Some(s) = samples
            .iter()
            .find(|s| !(s.t.is_finite() && s.pos.x.is_finite() && s.pos.y.is_finite()))
        {
            return Err(Error::InvalidTrajectory(format!("non-finite value at k={}", s.k)));
        }
        Ok(Self { samples, dt })
    }

    /// Builds a trajectory with `k = 0..n`, `t = k * dt`.
    pub fn from_positions(positions: &[Point], dt: f64) -> Result<Self> {
        let samples = positions
            .iter()
            .enumerate()
            .map(|(k, p)| Sample::new(k as u64, k as f64 * dt, *p))
            .collect();
        Self::new(samples, dt)
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn positions(&self) -> impl Iterator<Item = Point> + '_ {
        self.samples.iter().map(|s| s.pos)
    }

    /// Reads `k,t,x,y[,frame_id]`. When `dt` is `None` it is taken from the
    /// first two rows.
    pub fn read_csv<R: Read>(reader: R, dt: Option<f64>) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let col = |name: &str| headers.iter().position(|h| h == name);
        let (k_i, t_i, x_i, y_i) = match (col("k"), col("t"), col("x"), col("y")) {
            (Some(a), Some(b), Some(c), Some(d)) => (a, b, c, d),
            _ => {
                return Err(Error::Format(
                    "trajectory CSV needs columns k,t,x,y".to_string(),
                ))
            }
        };
        let frame_i = col("frame_id");

        let mut samples = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let field = |i: usize| rec.get(i).unwrap_or("");
            let num = |i: usize| -> Result<f64> {
                field(i)
                    .parse::<f64>()
                    .map_err(|e| Error::Format(format!("bad number {:?}: {e}", field(i))))
            };
            let k = field(k_i)
                .parse::<u64>()
                .map_err(|e| Error::Format(format!("bad index {:?}: {e}", field(k_i))))?;
            let frame_id = match frame_i.map(field) {
                None | Some("") => None,
                Some(s) => Some(
                    s.parse::<u64>()
                        .map_err(|e| Error::Format(format!("bad frame_id {s:?}: {e}")))?,
                ),
            };
            samples.push(Sample {
                k,
                t: num(t_i)?,
                pos: Point::new(num(x_i)?, num(y_i)?),
                frame_id,
            });
        }
        let dt = match dt {
            Some(dt) => dt,
            None if samples.len() >= 2 => samples[1].t - samples[0].t,
            None => {
                return Err(Error::InsufficientSamples {
                    needed: 2,
                    got: samples.len(),
                })
            }
        };
        Self::new(samples, dt)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let with_frames = self.samples.iter().any(|s| s.frame_id.is_some());
        let mut wtr = csv::Writer::from_writer(writer);
        if with_frames {
            wtr.write_record(["k", "t", "x", "y", "frame_id"])?;
        } else {
            wtr.write_record(["k", "t", "x", "y"])?;
        }
        for s in &self.samples {
            let mut row = vec![
                s.k.to_string(),
                s.t.to_string(),
                s.pos.x.to_string(),
                s.pos.y.to_string(),
            ];
            if with_frames {
                row.push(s.frame_id.map(|f| f.to_string()).unwrap_or_default());
            }
            wtr.write_record(&row)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?, None)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.write_csv(std::io::BufWriter::new(std::fs::File::create(path)?))
    }
}

/// Forward-difference velocities: `vel_k = (pos_{k+1} - pos_k) / dt`.
///
/// Each velocity is paired with the position where the step starts, so the
/// output has one element fewer than the trajectory.
pub fn derive_velocities(traj: &Trajectory) -> Result<Vec<(Point, Velocity)>> {
    if traj.len() < 2 {
        return Err(Error::InsufficientSamples {
            needed: 2,
            got: traj.len(),
        });
    }
    let dt = traj.dt();
    Ok(traj
        .samples()
        .windows(2)
        .map(|w| (w[0].pos, (w[1].pos - w[0].pos) / dt))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn traj(points: &[(f64, f64)], dt: f64) -> Trajectory {
        let pts: Vec<Point> = points.iter().map(|&(x, y)| Point::new(x, y)).collect();
        Trajectory::from_positions(&pts, dt).unwrap()
    }

    #[test]
    fn two_samples_one_velocity() {
        let v = derive_velocities(&traj(&[(0.0, 0.0), (1.0, 0.0)], 1.0)).unwrap();
        assert_eq!(v, vec![(Point::new(0.0, 0.0), Velocity::new(1.0, 0.0))]);
    }

    #[test]
    fn stationary_agent_has_zero_velocity() {
        let v = derive_velocities(&traj(&[(0.0, 0.0); 3], 0.5)).unwrap();
        assert_eq!(v.len(), 2);
        assert!(v.iter().all(|(_, vel)| *vel == Velocity::zeros()));
    }

    #[test]
    fn hand_arithmetic_velocities() {
        let v = derive_velocities(&traj(&[(0.0, 0.0), (2.0, 1.0), (4.0, 2.0)], 2.0)).unwrap();
        let vels: Vec<_> = v.iter().map(|(_, v)| *v).collect();
        assert_eq!(vels, vec![Velocity::new(1.0, 0.5), Velocity::new(1.0, 0.5)]);
    }

    #[test]
    fn single_sample_is_insufficient() {
        let err = derive_velocities(&traj(&[(0.0, 0.0)], 1.0)).unwrap_err();
        assert!(matches!(err, Error::InsufficientSamples { got: 1, .. }));
        assert!(err.to_string().contains("insufficient samples"));
    }

    #[test]
    fn rejects_irregular_time() {
        let s = vec![
            Sample::new(0, 0.0, Point::zeros()),
            Sample::new(1, 0.5, Point::zeros()),
            Sample::new(2, 1.2, Point::zeros()),
        ];
        assert!(Trajectory::new(s, 0.5).is_err());
        let s = vec![
            Sample::new(3, 0.0, Point::zeros()),
            Sample::new(3, 0.5, Point::zeros()),
        ];
        assert!(Trajectory::new(s, 0.5).is_err());
    }

    #[test]
    fn csv_with_frame_ids() {
        let text = "k,t,x,y,frame_id\n0,0,1.5,2,0\n1,0.25,1.75,2,1\n";
        let t = Trajectory::read_csv(text.as_bytes(), None).unwrap();
        assert_eq!(t.dt(), 0.25);
        assert_eq!(t.samples()[1].frame_id, Some(1));
        let mut out = Vec::new();
        t.write_csv(&mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), text);
    }

    #[test]
    fn csv_missing_column() {
        assert!(Trajectory::read_csv("k,t,x\n0,0,1\n".as_bytes(), None).is_err());
    }

    proptest! {
        #[test]
        fn cumulative_sum_recovers_positions(
            steps in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 1..60),
            dt in 0.01f64..2.0,
        ) {
            let mut pts = vec![Point::new(0.3, -1.2)];
            for (dx, dy) in &steps {
                let last = *pts.last().unwrap();
                pts.push(last + Point::new(*dx, *dy));
            }
            let t = Trajectory::from_positions(&pts, dt).unwrap();
            let vels = derive_velocities(&t).unwrap();
            prop_assert_eq!(vels.len(), pts.len() - 1);
            let mut acc = pts[0];
            for (i, (p, v)) in vels.iter().enumerate() {
                prop_assert!((p - pts[i]).norm() < 1e-9);
                acc += v * dt;
                prop_assert!((acc - pts[i + 1]).norm() < 1e-9);
            }
        }

        #[test]
        fn csv_round_trip(
            coords in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 2..20),
        ) {
            let pts: Vec<Point> = coords.iter().map(|&(x, y)| Point::new(x, y)).collect();
            let t = Trajectory::from_positions(&pts, 0.1).unwrap();
            let mut buf = Vec::new();
            t.write_csv(&mut buf).unwrap();
            let back = Trajectory::read_csv(buf.as_slice(), Some(0.1)).unwrap();
            prop_assert_eq!(back, t);
        }
    }
}
