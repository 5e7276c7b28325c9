//! Coordinate unification: pixel → 0–1000 relative grid → unit interval,
//! and element box → click point.
//!
//! Everything here is integer arithmetic. Rounding is half away from zero
//! (all quantities are non-negative, so this is half-up).

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{BBox, NormPoint, PixelPoint, ScreenSize, GRID};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::X => "x",
            Axis::Y => "y",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeometryError {
    #[error("{axis} = {value} is outside the screen (must be < {limit})")]
    OutOfBounds { axis: Axis, value: u32, limit: u32 },
    #[error("relative coordinate {0} is outside [0, {GRID}]")]
    RelativeOutOfRange(u32),
}

/// A point on the 0–1000 relative grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RelPoint {
    x: u16,
    y: u16,
}

impl RelPoint {
    pub fn new(x: u32, y: u32) -> Result<Self, GeometryError> {
        for v in [x, y] {
            if v > GRID {
                return Err(GeometryError::RelativeOutOfRange(v));
            }
        }
        Ok(Self {
            x: x as u16,
            y: y as u16,
        })
    }

    pub fn x(&self) -> u32 {
        u32::from(self.x)
    }

    pub fn y(&self) -> u32 {
        u32::from(self.y)
    }
}

/// `round(num / den)` for non-negative operands, ties rounded up.
fn div_round(num: u64, den: u64) -> u64 {
    (2 * num + den) / (2 * den)
}

fn axis_to_relative(v: u32, dim: u32, axis: Axis) -> Result<u16, GeometryError> {
    if v >= dim {
        return Err(GeometryError::OutOfBounds {
            axis,
            value: v,
            limit: dim,
        });
    }
    let r = div_round(u64::from(v) * u64::from(GRID), u64::from(dim));
    Ok(r.min(u64::from(GRID)) as u16)
}

pub fn to_relative(p: PixelPoint, s: ScreenSize) -> Result<RelPoint, GeometryError> {
    Ok(RelPoint {
        x: axis_to_relative(p.x, s.width(), Axis::X)?,
        y: axis_to_relative(p.y, s.height(), Axis::Y)?,
    })
}

pub fn to_unit(r: RelPoint) -> NormPoint {
    NormPoint::from_milli(r.x(), r.y()).expect("relative grid and unit grid share bounds")
}

pub fn normalize_point(p: PixelPoint, s: ScreenSize) -> Result<NormPoint, GeometryError> {
    to_relative(p, s).map(to_unit)
}

fn axis_to_pixel(m: u16, dim: u32) -> u32 {
    let px = div_round(u64::from(m) * u64::from(dim), u64::from(GRID));
    px.min(u64::from(dim - 1)) as u32
}

/// Maps a unit point back to a pixel, clamping `1.0` onto the last pixel.
pub fn denormalize(n: NormPoint, s: ScreenSize) -> PixelPoint {
    PixelPoint::new(axis_to_pixel(n.x_milli(), s.width()), axis_to_pixel(n.y_milli(), s.height()))
}

/// Center of a box; odd spans are floored.
pub fn box_center(b: BBox) -> PixelPoint {
    let mid = |a: u32, b: u32| ((u64::from(a) + u64::from(b)) / 2) as u32;
    PixelPoint::new(mid(b.x1(), b.x2()), mid(b.y1(), b.y2()))
}

/// Whether `n`, projected onto `s`, falls inside `b` (inclusive).
pub fn point_in_box(n: NormPoint, b: BBox, s: ScreenSize) -> bool {
    b.contains(denormalize(n, s))
}
