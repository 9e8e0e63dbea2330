use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BBox, Point};

/// Bounded open planar domains the soup can live in.
///
/// * `UnitSquare`: (0,1)².
/// * `UnitDisk`: open unit disk at the origin.
/// * `Rectangle`: (x0, x0+width) × (y0, y0+height).
/// * `HalfPlaneBox`: the truncation of the upper half plane
///   {|Re z| < width/2, 0 < Im z < height} used by the chordal experiments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    UnitSquare,
    UnitDisk,
    Rectangle {
        #[serde(default)]
        x0: f64,
        #[serde(default)]
        y0: f64,
        width: f64,
        height: f64,
    },
    HalfPlaneBox { width: f64, height: f64 },
}

impl Domain {
    pub fn rectangle(width: f64, height: f64) -> Self {
        Domain::Rectangle { x0: 0.0, y0: 0.0, width, height }
    }

    pub fn rectangle_at(x0: f64, y0: f64, width: f64, height: f64) -> Self {
        Domain::Rectangle { x0, y0, width, height }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Domain::UnitSquare | Domain::UnitDisk => true,
            Domain::Rectangle { x0, y0, width, height } => {
                x0.is_finite() && y0.is_finite() && width > 0.0 && height > 0.0 && width.is_finite() && height.is_finite()
            }
            Domain::HalfPlaneBox { width, height } => width > 0.0 && height > 0.0 && width.is_finite() && height.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!("{self:?} must have finite positive extent")))
        }
    }

    pub fn bbox(&self) -> BBox {
        match *self {
            Domain::UnitSquare => BBox::new(Point::new(0.0, 0.0), Point::new(1.0, 1.0)),
            Domain::UnitDisk => BBox::new(Point::new(-1.0, -1.0), Point::new(1.0, 1.0)),
            Domain::Rectangle { x0, y0, width, height } => {
                BBox::new(Point::new(x0, y0), Point::new(x0 + width, y0 + height))
            }
            Domain::HalfPlaneBox { width, height } => {
                BBox::new(Point::new(-0.5 * width, 0.0), Point::new(0.5 * width, height))
            }
        }
    }

    pub fn area(&self) -> f64 {
        match self {
            Domain::UnitDisk => std::f64::consts::PI,
            _ => {
                let b = self.bbox();
                b.width() * b.height()
            }
        }
    }

    pub fn is_rectangular(&self) -> bool {
        !matches!(self, Domain::UnitDisk)
    }

    /// Membership in the open domain.
    pub fn contains(&self, p: Point) -> bool {
        match self {
            Domain::UnitDisk => p.x * p.x + p.y * p.y < 1.0,
            _ => {
                let b = self.bbox();
                p.x > b.min.x && p.x < b.max.x && p.y > b.min.y && p.y < b.max.y
            }
        }
    }

    fn closure_contains(&self, p: Point) -> bool {
        match self {
            Domain::UnitDisk => p.x * p.x + p.y * p.y <= 1.0,
            _ => self.bbox().contains(p),
        }
    }

    /// Whether `sub` is geometrically contained in `self`.
    pub fn contains_domain(&self, sub: &Domain) -> bool {
        match (self, sub) {
            (Domain::UnitDisk, Domain::UnitDisk) => true,
            (_, Domain::UnitDisk) => {
                let b = sub.bbox();
                self.closure_contains(b.min) && self.closure_contains(b.max)
            }
            _ => {
                let b = sub.bbox();
                [b.min, b.max, Point::new(b.min.x, b.max.y), Point::new(b.max.x, b.min.y)]
                    .into_iter()
                    .all(|c| self.closure_contains(c))
            }
        }
    }
}
