use std::path::{Path, PathBuf};

use image::{GrayImage, Luma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::SceneSpec;
use crate::error::{Error, Result};
use crate::model::{derive_velocities, Point, Trajectory};

pub const OBSTACLE_SHADE: u8 = 25;
const SKY_SHADE: u8 = 245;
const GROUND_SHADES: [u8; 2] = [70, 150];
const WALL_SHADES: [u8; 2] = [190, 215];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenderParams {
    pub width: u32,
    pub height: u32,
    /// Horizontal field of view, degrees.
    pub fov_deg: f64,
    pub camera_height: f64,
    pub wall_height: f64,
    /// Side of the ground checker squares, meters.
    pub checker: f64,
}

impl Default for RenderParams {
    fn default() -> Self {
        Self {
            width: 64,
            height: 64,
            fov_deg: 70.0,
            camera_height: 1.0,
            wall_height: 2.0,
            checker: 1.0,
        }
    }
}

/// Camera position and heading (radians, counter-clockwise from +x).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub pos: Point,
    pub heading: f64,
    pub k: u64,
}

/// Heading of every sample from the forward-difference velocity. The last
/// sample and zero-velocity samples keep the previous heading.
pub fn heading_sequence(traj: &Trajectory) -> Result<Vec<Pose>> {
    let vels = derive_velocities(traj)?;
    let mut poses = Vec::with_capacity(traj.len());
    let mut heading: Option<f64> = None;
    for (s, (_, v)) in traj.samples().iter().zip(&vels) {
        if v.norm() > 1e-12 {
            heading = Some(v.y.atan2(v.x));
        }
        let h = heading.ok_or(Error::HeadingUndefined)?;
        poses.push(Pose { pos: s.pos, heading: h, k: s.k });
    }
    let last = traj.samples().last().expect("at least two samples");
    poses.push(Pose {
        pos: last.pos,
        heading: heading.expect("set above"),
        k: last.k,
    });
    Ok(poses)
}

/// Ray-cast view from `pose`: checkered ground, arena walls and the
/// obstacles present at `pose.k`. The nearest surface along each pixel ray
/// wins.
pub fn render_frame(pose: &Pose, scene: &SceneSpec, params: &RenderParams) -> GrayImage {
    let (w, h) = (params.width, params.height);
    let focal = 0.5 * f64::from(w) / (0.5 * params.fov_deg.to_radians()).tan();
    let cx = 0.5 * (f64::from(w) - 1.0);
    let cy = 0.5 * (f64::from(h) - 1.0);
    let fwd = Point::new(pose.heading.cos(), pose.heading.sin());
    let right = Point::new(fwd.y, -fwd.x);
    let arena = &scene.arena;
    let obstacles: Vec<_> = scene.obstacles.iter().filter(|o| o.is_present(pose.k)).collect();

    GrayImage::from_fn(w, h, |u, v| {
        let xc = (f64::from(u) - cx) / focal;
        let yc = (f64::from(v) - cy) / focal;
        // horizontal direction with unit forward component: λ is depth
        let d = fwd + right * xc;
        let height_at = |depth: f64| params.camera_height - depth * yc;

        let wall_depth = [
            (d.x > 0.0).then(|| (arena.max[0] - pose.pos.x) / d.x),
            (d.x < 0.0).then(|| (arena.min[0] - pose.pos.x) / d.x),
            (d.y > 0.0).then(|| (arena.max[1] - pose.pos.y) / d.y),
            (d.y < 0.0).then(|| (arena.min[1] - pose.pos.y) / d.y),
        ]
        .into_iter()
        .flatten()
        .fold(f64::INFINITY, f64::min);

        let mut best = (f64::INFINITY, SKY_SHADE);
        if yc > 0.0 {
            let depth = params.camera_height / yc;
            if depth <= wall_depth {
                let g = pose.pos + d * depth;
                let parity = ((g.x / params.checker).floor() + (g.y / params.checker).floor()) as i64;
                best = (depth, GROUND_SHADES[parity.rem_euclid(2) as usize]);
            }
        }
        if wall_depth.is_finite() && wall_depth < best.0 {
            let z = height_at(wall_depth);
            if (0.0..=params.wall_height).contains(&z) {
                let hit = pose.pos + d * wall_depth;
                let along = if (hit.x - arena.min[0]).abs() < 1e-9 || (hit.x - arena.max[0]).abs() < 1e-9 {
                    hit.y
                } else {
                    hit.x
                };
                best = (wall_depth, WALL_SHADES[(along.floor() as i64).rem_euclid(2) as usize]);
            }
        }
        for o in &obstacles {
            let c = Point::new(o.pos[0], o.pos[1]);
            let oc = pose.pos - c;
            let a = d.norm_squared();
            let b = 2.0 * d.dot(&oc);
            let cc = oc.norm_squared() - o.radius * o.radius;
            let disc = b * b - 4.0 * a * cc;
            if cc <= 0.0 || disc < 0.0 {
                continue;
            }
            let depth = (-b - disc.sqrt()) / (2.0 * a);
            if depth > 0.0 && depth < best.0 && (0.0..=o.height).contains(&height_at(depth)) {
                best = (depth, OBSTACLE_SHADE);
            }
        }
        Luma([best.1])
    })
}

/// One frame per trajectory sample.
pub fn render_fpv(traj: &Trajectory, scene: &SceneSpec, params: &RenderParams) -> Result<Vec<GrayImage>> {
    let poses = heading_sequence(traj)?;
    Ok(poses.par_iter().map(|p| render_frame(p, scene, params)).collect())
}

/// Renders and writes `frame_%06d.png` (numbered by time index) into `dir`.
pub fn save_frames(
    traj: &Trajectory,
    scene: &SceneSpec,
    params: &RenderParams,
    dir: &Path,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let poses = heading_sequence(traj)?;
    poses
        .par_iter()
        .map(|p| {
            let path = dir.join(format!("frame_{:06}.png", p.k));
            render_frame(p, scene, params).save_with_format(&path, image::ImageFormat::Png)?;
            Ok(path)
        })
        .collect()
}
