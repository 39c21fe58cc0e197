use std::f64::consts::FRAC_PI_2;

use crate::model::{Point, Rect};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentKind {
    Straight,
    Curve,
}

#[derive(Debug, Clone, Copy)]
enum Piece {
    Line { from: Point, dir: Point, len: f64 },
    Arc { center: Point, start_angle: f64, len: f64 },
}

/// Counter-clockwise rounded-rectangle outline parametrized by arc length.
/// Arc length 0 is the entry of the bottom-right corner; the lap ends with
/// the bottom straight.
#[derive(Debug, Clone)]
pub struct PatrolPath {
    track: Rect,
    radius: f64,
    pieces: Vec<Piece>,
    length: f64,
}

impl PatrolPath {
    pub fn new(track: Rect, radius: f64) -> Self {
        let [x0, y0] = track.min;
        let [x1, y1] = track.max;
        let r = radius;
        let a = track.width() - 2.0 * r;
        let b = track.height() - 2.0 * r;
        let arc = FRAC_PI_2 * r;
        let pieces = vec![
            Piece::Arc { center: Point::new(x1 - r, y0 + r), start_angle: -FRAC_PI_2, len: arc },
            Piece::Line { from: Point::new(x1, y0 + r), dir: Point::new(0.0, 1.0), len: b },
            Piece::Arc { center: Point::new(x1 - r, y1 - r), start_angle: 0.0, len: arc },
            Piece::Line { from: Point::new(x1 - r, y1), dir: Point::new(-1.0, 0.0), len: a },
            Piece::Arc { center: Point::new(x0 + r, y1 - r), start_angle: FRAC_PI_2, len: arc },
            Piece::Line { from: Point::new(x0, y1 - r), dir: Point::new(0.0, -1.0), len: b },
            Piece::Arc { center: Point::new(x0 + r, y0 + r), start_angle: 2.0 * FRAC_PI_2, len: arc },
            Piece::Line { from: Point::new(x0 + r, y0), dir: Point::new(1.0, 0.0), len: a },
        ];
        let length = pieces
            .iter()
            .map(|p| match p {
                Piece::Line { len, .. } | Piece::Arc { len, .. } => *len,
            })
            .sum();
        Self {
            track,
            radius,
            pieces,
            length,
        }
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Length of the horizontal straights.
    pub fn straight_len_x(&self) -> f64 {
        self.track.width() - 2.0 * self.radius
    }

    /// `(start arc length, length)` of the bottom straight.
    pub fn bottom_straight(&self) -> (f64, f64) {
        let len = self.straight_len_x();
        (self.length - len, len)
    }

    /// Position, unit tangent and segment kind at arc length `s`
    /// (taken modulo the lap length).
    pub fn point(&self, s: f64) -> (Point, Point, SegmentKind) {
        let mut s = s.rem_euclid(self.length);
        for piece in &self.pieces {
            match *piece {
                Piece::Line { from, dir, len } => {
                    if s < len {
                        return (from + dir * s, dir, SegmentKind::Straight);
                    }
                    s -= len;
                }
                Piece::Arc { center, start_angle, len } => {
                    if s < len {
                        let phi = start_angle + s / self.radius;
                        let pos = center + Point::new(phi.cos(), phi.sin()) * self.radius;
                        return (pos, Point::new(-phi.sin(), phi.cos()), SegmentKind::Curve);
                    }
                    s -= len;
                }
            }
        }
        // s == length after rounding: wrap to the start.
        self.point(0.0)
    }

    /// Euclidean distance from `p` to the outline.
    pub fn distance_to(&self, p: &Point) -> f64 {
        let c = Point::new(
            0.5 * (self.track.min[0] + self.track.max[0]),
            0.5 * (self.track.min[1] + self.track.max[1]),
        );
        let half = Point::new(
            0.5 * self.track.width() - self.radius,
            0.5 * self.track.height() - self.radius,
        );
        let q = (p - c).abs() - half;
        let outside = Point::new(q.x.max(0.0), q.y.max(0.0)).norm();
        let inside = q.x.max(q.y).min(0.0);
        (outside + inside - self.radius).abs()
    }
}
