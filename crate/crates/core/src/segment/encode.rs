use std::path::Path;

use image::{Rgb, RgbImage};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Velocity, VelocityField};

/// Affine map between a velocity component and a byte.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelNorm {
    pub v_min: f64,
    pub v_max: f64,
}

impl ChannelNorm {
    /// Round-half-up onto 0..=255.
    pub fn encode(&self, v: f64) -> u8 {
        let x = (v - self.v_min) / (self.v_max - self.v_min) * 255.0;
        (x + 0.5).floor().clamp(0.0, 255.0) as u8
    }

    pub fn decode(&self, b: u8) -> f64 {
        self.v_min + f64::from(b) / 255.0 * (self.v_max - self.v_min)
    }

    /// Width of one byte step in m/s.
    pub fn step(&self) -> f64 {
        (self.v_max - self.v_min) / 255.0
    }
}

/// The velocity field as an RGB image: R carries ẋ, B carries ẏ, G is 0.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityImage {
    pub width: usize,
    pub height: usize,
    /// Row-major, same indexing as the grid. Masked cells hold `[0, 0, 0]`.
    pub pixels: Vec<[u8; 3]>,
    /// `false` for masked cells.
    pub valid: Vec<bool>,
    pub norm_r: ChannelNorm,
    pub norm_b: ChannelNorm,
}

impl VelocityImage {
    pub fn decode(&self, m: usize) -> Option<Velocity> {
        self.valid[m].then(|| {
            let [r, _, b] = self.pixels[m];
            Velocity::new(self.norm_r.decode(r), self.norm_b.decode(b))
        })
    }

    /// Image with row 0 of the grid at the bottom, so it reads like a map.
    pub fn to_rgb(&self) -> RgbImage {
        RgbImage::from_fn(self.width as u32, self.height as u32, |x, y| {
            let row = self.height - 1 - y as usize;
            Rgb(self.pixels[row * self.width + x as usize])
        })
    }

    pub fn save_png(&self, path: &Path) -> Result<()> {
        self.to_rgb().save_with_format(path, image::ImageFormat::Png)?;
        Ok(())
    }
}

/// Encodes the unmasked cells of `field`.
///
/// Both channels share the symmetric range `[-V, V]` with
/// `V = max |component|` over the unmasked cells, so zero motion sits at
/// mid-gray and color distance is proportional to velocity distance.
pub fn encode_image(field: &VelocityField) -> Result<VelocityImage> {
    if field.unmasked_count() == 0 {
        return Err(Error::AllMasked);
    }
    let v = field
        .unmasked_cells()
        .map(|m| field.mean[m].x.abs().max(field.mean[m].y.abs()))
        .fold(0.0, f64::max);
    // A motionless field still needs a non-degenerate map.
    let v = if v > 1e-12 { v } else { 1.0 };
    let norm = ChannelNorm {
        v_min: -v,
        v_max: v,
    };
    let pixels = field
        .mean
        .iter()
        .zip(&field.evidence)
        .map(|(vel, ok)| {
            if *ok {
                [norm.encode(vel.x), 0, norm.encode(vel.y)]
            } else {
                [0, 0, 0]
            }
        })
        .collect();
    Ok(VelocityImage {
        width: field.grid.width(),
        height: field.grid.height(),
        pixels,
        valid: field.evidence.clone(),
        norm_r: norm,
        norm_b: norm,
    })
}
