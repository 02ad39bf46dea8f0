//! Planar geometry for scene tracing: points, axis-aligned rectangles, and
//! the mirror construction behind image-source reflections.

use crate::taxonomy::Material;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub fn new(x: f64, y: f64) -> Vec2 {
        Vec2 { x, y }
    }

    pub fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn dist(self, o: Vec2) -> f64 {
        self.sub(o).norm()
    }

    pub fn unit(self) -> Vec2 {
        let n = self.norm();
        Vec2::new(self.x / n, self.y / n)
    }

    /// Signed angle from `from` to `self`, counter-clockwise positive,
    /// in (−π, π].
    pub fn angle_from(self, from: Vec2) -> f64 {
        (from.x * self.y - from.y * self.x).atan2(from.dot(self))
    }
}

/// Axis-aligned rectangle, `min` corner to `max` corner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Rect {
        assert!(x0 < x1 && y0 < y1, "degenerate rectangle");
        Rect { x0, y0, x1, y1 }
    }

    pub fn center(&self) -> Vec2 {
        Vec2::new((self.x0 + self.x1) / 2.0, (self.y0 + self.y1) / 2.0)
    }

    pub fn contains(&self, p: Vec2) -> bool {
        self.x0 <= p.x && p.x <= self.x1 && self.y0 <= p.y && p.y <= self.y1
    }

    pub fn overlaps(&self, o: &Rect) -> bool {
        self.x0 < o.x1 && o.x0 < self.x1 && self.y0 < o.y1 && o.y0 < self.y1
    }

    /// True when the closed segment a–b meets the closed rectangle
    /// (boundary touch counts). Liang-Barsky clipping.
    pub fn intersects_segment(&self, a: Vec2, b: Vec2) -> bool {
        let d = b.sub(a);
        let mut t0 = 0.0_f64;
        let mut t1 = 1.0_f64;
        for (p, q) in [
            (-d.x, a.x - self.x0),
            (d.x, self.x1 - a.x),
            (-d.y, a.y - self.y0),
            (d.y, self.y1 - a.y),
        ] {
            if p == 0.0 {
                if q < 0.0 {
                    return false;
                }
            } else {
                let t = q / p;
                if p < 0.0 {
                    t0 = t0.max(t);
                } else {
                    t1 = t1.min(t);
                }
            }
        }
        t0 <= t1
    }

    /// The four sides as reflective facades with outward normals.
    pub fn facades(&self, material: Material) -> [Facade; 4] {
        [
            Facade { axis: Axis::Horizontal, coord: self.y0, lo: self.x0, hi: self.x1, outward: -1.0, material },
            Facade { axis: Axis::Horizontal, coord: self.y1, lo: self.x0, hi: self.x1, outward: 1.0, material },
            Facade { axis: Axis::Vertical, coord: self.x0, lo: self.y0, hi: self.y1, outward: -1.0, material },
            Facade { axis: Axis::Vertical, coord: self.x1, lo: self.y0, hi: self.y1, outward: 1.0, material },
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    /// Facade lies along a line of constant y.
    Horizontal,
    /// Facade lies along a line of constant x.
    Vertical,
}

/// One axis-aligned reflective surface: the line `axis = coord` restricted
/// to `[lo, hi]` on the other axis, with `outward` the sign of the normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Facade {
    pub axis: Axis,
    pub coord: f64,
    pub lo: f64,
    pub hi: f64,
    pub outward: f64,
    pub material: Material,
}

impl Facade {
    /// Signed distance of `p` from the facade line, positive on the outward
    /// side.
    pub fn side(&self, p: Vec2) -> f64 {
        match self.axis {
            Axis::Horizontal => (p.y - self.coord) * self.outward,
            Axis::Vertical => (p.x - self.coord) * self.outward,
        }
    }

    /// Mirror image of `p` across the facade line.
    pub fn mirror(&self, p: Vec2) -> Vec2 {
        match self.axis {
            Axis::Horizontal => Vec2::new(p.x, 2.0 * self.coord - p.y),
            Axis::Vertical => Vec2::new(2.0 * self.coord - p.x, p.y),
        }
    }

    pub fn normal(&self) -> Vec2 {
        match self.axis {
            Axis::Horizontal => Vec2::new(0.0, self.outward),
            Axis::Vertical => Vec2::new(self.outward, 0.0),
        }
    }

    /// Specular reflection point for a transmitter at `tx` and receiver at
    /// `rx`, or `None` when no valid bounce exists. Valid means: both
    /// endpoints strictly on the outward side, and the mirrored ray crosses
    /// the facade within its span.
    pub fn specular_point(&self, tx: Vec2, rx: Vec2) -> Option<Vec2> {
        if self.side(tx) <= 0.0 || self.side(rx) <= 0.0 {
            return None;
        }
        let m = self.mirror(tx);
        // m and rx sit on opposite sides of the line, so the crossing
        // parameter is strictly inside (0, 1).
        let (t, along) = match self.axis {
            Axis::Horizontal => {
                let t = (self.coord - m.y) / (rx.y - m.y);
                (t, m.x + t * (rx.x - m.x))
            }
            Axis::Vertical => {
                let t = (self.coord - m.x) / (rx.x - m.x);
                (t, m.y + t * (rx.y - m.y))
            }
        };
        if !(self.lo..=self.hi).contains(&along) || !t.is_finite() {
            return None;
        }
        Some(match self.axis {
            Axis::Horizontal => Vec2::new(along, self.coord),
            Axis::Vertical => Vec2::new(self.coord, along),
        })
    }
}
