//! Spatial primitives: positions, rectangles, zones and reference grids.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative slack used when deciding whether a grid point falls inside its bounds.
const GRID_EPS: f64 = 1e-9;

/// A point in the serving area, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn distance_to(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn sub(&self, other: &Position) -> Position {
        Position::new(self.x - other.x, self.y - other.y)
    }

    pub fn dot(&self, other: &Position) -> f64 {
        self.x * other.x + self.y * other.y
    }
}

/// Axis-aligned rectangle. A rectangle may be flat (zero extent on one or
/// both axes); [`Rect::area`] tells callers whether it can serve as a zone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl Rect {
    pub fn new(min_x: f64, min_y: f64, max_x: f64, max_y: f64) -> Result<Self> {
        let finite = [min_x, min_y, max_x, max_y].iter().all(|v| v.is_finite());
        if !finite || max_x < min_x || max_y < min_y {
            return Err(Error::InvalidGeometry(format!(
                "degenerate bounds [{min_x}, {min_y}] .. [{max_x}, {max_y}]"
            )));
        }
        Ok(Self {
            min_x,
            min_y,
            max_x,
            max_y,
        })
    }

    pub fn width(&self) -> f64 {
        self.max_x - self.min_x
    }

    pub fn height(&self) -> f64 {
        self.max_y - self.min_y
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn centroid(&self) -> Position {
        Position::new(0.5 * (self.min_x + self.max_x), 0.5 * (self.min_y + self.max_y))
    }

    /// Closed containment test.
    pub fn contains(&self, p: &Position) -> bool {
        p.x >= self.min_x && p.x <= self.max_x && p.y >= self.min_y && p.y <= self.max_y
    }

    /// Distance from an inside point to the nearest edge; `None` when outside.
    pub fn distance_to_border(&self, p: &Position) -> Option<f64> {
        if !self.contains(p) {
            return None;
        }
        let d = (p.x - self.min_x)
            .min(self.max_x - p.x)
            .min(p.y - self.min_y)
            .min(self.max_y - p.y);
        Some(d)
    }

    /// True when the interiors overlap (touching edges do not count).
    pub fn interiors_overlap(&self, other: &Rect) -> bool {
        self.min_x < other.max_x && other.min_x < self.max_x && self.min_y < other.max_y && other.min_y < self.max_y
    }

    /// True when the two rectangles share a border segment of positive length.
    pub fn shares_border_with(&self, other: &Rect) -> bool {
        let overlap_x = self.max_x.min(other.max_x) - self.min_x.max(other.min_x);
        let overlap_y = self.max_y.min(other.max_y) - self.min_y.max(other.min_y);
        let touch_x = self.max_x == other.min_x || other.max_x == self.min_x;
        let touch_y = self.max_y == other.min_y || other.max_y == self.min_y;
        (touch_x && overlap_y > 0.0) || (touch_y && overlap_x > 0.0)
    }
}

/// A geographic zone served by one MN-facing channel.
#[derive(Debug, Clone, PartialEq)]
pub struct Zone {
    pub id: u32,
    pub rect: Rect,
    pub anchor_ids: Vec<u32>,
    pub head_anchor_id: u32,
}

impl Zone {
    pub fn new(id: u32, rect: Rect, anchor_ids: Vec<u32>, head_anchor_id: u32) -> Result<Self> {
        if rect.area() <= 0.0 {
            return Err(Error::InvalidGeometry(format!("zone {id} has non-positive area")));
        }
        if !anchor_ids.contains(&head_anchor_id) {
            return Err(Error::InvalidGeometry(format!(
                "zone {id}: head anchor {head_anchor_id} is not one of its anchors"
            )));
        }
        Ok(Self {
            id,
            rect,
            anchor_ids,
            head_anchor_id,
        })
    }

    pub fn contains(&self, p: &Position) -> bool {
        self.rect.contains(p)
    }
}

/// Checks that no two zones overlap in their interiors.
pub fn check_disjoint(zones: &[Zone]) -> Result<()> {
    for (i, a) in zones.iter().enumerate() {
        for b in &zones[i + 1..] {
            if a.id == b.id {
                return Err(Error::InvalidGeometry(format!("duplicate zone id {}", a.id)));
            }
            if a.rect.interiors_overlap(&b.rect) {
                return Err(Error::InvalidGeometry(format!("zones {} and {} overlap", a.id, b.id)));
            }
        }
    }
    Ok(())
}

/// Pairs `(a, b)` with `a < b` of zones sharing a border.
pub fn zone_adjacency(zones: &[Zone]) -> Vec<(u32, u32)> {
    let mut pairs = Vec::new();
    for (i, a) in zones.iter().enumerate() {
        for b in &zones[i + 1..] {
            if a.rect.shares_border_with(&b.rect) {
                pairs.push((a.id.min(b.id), a.id.max(b.id)));
            }
        }
    }
    pairs.sort_unstable();
    pairs
}

/// One reference location of the offline survey. Indices start at 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub index: u32,
    pub position: Position,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceGrid {
    pub points: Vec<GridPoint>,
    pub spacing: f64,
}

impl ReferenceGrid {
    /// Builds a grid from explicit points, checking index contiguity.
    pub fn from_points(points: Vec<GridPoint>, spacing: f64) -> Result<Self> {
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::InvalidGeometry(format!("grid spacing {spacing}")));
        }
        if points.is_empty() {
            return Err(Error::InvalidGeometry("empty reference grid".into()));
        }
        for (k, p) in points.iter().enumerate() {
            if p.index as usize != k + 1 {
                return Err(Error::InconsistentMap(format!(
                    "grid index {} found where {} was expected",
                    p.index,
                    k + 1
                )));
            }
            if !p.position.is_finite() {
                return Err(Error::InvalidGeometry(format!("grid point {} is not finite", p.index)));
            }
        }
        Ok(Self { points, spacing })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

fn axis_count(extent: f64, spacing: f64) -> usize {
    (extent / spacing + GRID_EPS).floor() as usize + 1
}

/// Lays reference points row-major (x fastest) from the minimum corner of
/// `bounds` at `spacing` intervals.
pub fn make_reference_grid(bounds: Rect, spacing: f64) -> Result<ReferenceGrid> {
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(Error::InvalidGeometry(format!("grid spacing {spacing}")));
    }
    let nx = axis_count(bounds.width(), spacing);
    let ny = axis_count(bounds.height(), spacing);
    let mut points = Vec::with_capacity(nx * ny);
    for row in 0..ny {
        for col in 0..nx {
            points.push(GridPoint {
                index: (points.len() + 1) as u32,
                position: Position::new(bounds.min_x + col as f64 * spacing, bounds.min_y + row as f64 * spacing),
            });
        }
    }
    ReferenceGrid::from_points(points, spacing)
}
