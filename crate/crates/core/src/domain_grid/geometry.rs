use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub type Point = [f64; 2];

#[inline]
pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[inline]
pub fn dist(x: &Point, y: &Point) -> f64 {
    (x[0] - y[0]).hypot(x[1] - y[1])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainKind {
    Ball {
        center: Point,
        radius: f64,
    },
    /// Counter-clockwise vertex list.
    StarPolygon {
        vertices: Vec<Point>,
    },
}

/// A planar domain that is star-shaped with respect to the ball `B(star_center, star_radius)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub kind: DomainKind,
    pub star_center: Point,
    pub star_radius: f64,
    pub dimension: usize,
}

impl Domain {
    /// A ball is star-shaped with respect to itself.
    pub fn ball(center: Point, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::Parameter(format!(
                "ball radius must be positive, got {radius}"
            )));
        }
        Ok(Self {
            kind: DomainKind::Ball { center, radius },
            star_center: center,
            star_radius: radius,
            dimension: 2,
        })
    }

    pub fn unit_disk() -> Self {
        Self::ball([0.0, 0.0], 1.0).expect("unit disk is valid")
    }

    /// Polygon star-shaped with respect to `B(star_center, star_radius)`. The
    /// ball must lie in the kernel of the polygon, i.e. on the inner side of
    /// every edge line at distance at least `star_radius`.
    pub fn star_polygon(
        vertices: Vec<Point>,
        star_center: Point,
        star_radius: f64,
    ) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::Parameter(
                "polygon needs at least three vertices".into(),
            ));
        }
        if !(star_radius > 0.0) {
            return Err(Error::Parameter("star radius must be positive".into()));
        }
        let n = vertices.len();
        for i in 0..n {
            let a = vertices[i];
            let b = vertices[(i + 1) % n];
            let e = [b[0] - a[0], b[1] - a[1]];
            let len = norm(&e);
            if len == 0.0 {
                return Err(Error::Parameter(format!("repeated polygon vertex {i}")));
            }
            // inward normal of a counter-clockwise polygon
            let signed = (e[0] * (star_center[1] - a[1]) - e[1] * (star_center[0] - a[0])) / len;
            if signed < star_radius {
                return Err(Error::Parameter(format!(
                    "ball B(x0, {star_radius}) is not in the kernel of the polygon (edge {i}, distance {signed})"
                )));
            }
        }
        Ok(Self {
            kind: DomainKind::StarPolygon { vertices },
            star_center,
            star_radius,
            dimension: 2,
        })
    }

    pub fn diameter(&self) -> f64 {
        match &self.kind {
            DomainKind::Ball { radius, .. } => 2.0 * radius,
            DomainKind::StarPolygon { vertices } => {
                let mut d: f64 = 0.0;
                for a in vertices {
                    for b in vertices {
                        d = d.max(dist(a, b));
                    }
                }
                d
            }
        }
    }

    pub fn contains(&self, x: &Point) -> bool {
        match &self.kind {
            DomainKind::Ball { center, radius } => dist(x, center) < *radius,
            DomainKind::StarPolygon { vertices } => {
                let n = vertices.len();
                (0..n).all(|i| {
                    let a = vertices[i];
                    let b = vertices[(i + 1) % n];
                    (b[0] - a[0]) * (x[1] - a[1]) - (b[1] - a[1]) * (x[0] - a[0]) > 0.0
                })
            }
        }
    }

    /// Distance from the star center to the boundary along direction `theta`.
    pub fn boundary_radius(&self, theta: f64) -> f64 {
        match &self.kind {
            DomainKind::Ball { radius, .. } => *radius,
            DomainKind::StarPolygon { vertices } => {
                let c = self.star_center;
                let d = [theta.cos(), theta.sin()];
                let n = vertices.len();
                let mut best = f64::INFINITY;
                for i in 0..n {
                    let a = [vertices[i][0] - c[0], vertices[i][1] - c[1]];
                    let b = [
                        vertices[(i + 1) % n][0] - c[0],
                        vertices[(i + 1) % n][1] - c[1],
                    ];
                    let e = [b[0] - a[0], b[1] - a[1]];
                    let den = d[0] * e[1] - d[1] * e[0];
                    if den.abs() < 1e-300 {
                        continue;
                    }
                    let t = (a[0] * e[1] - a[1] * e[0]) / den;
                    let s = (a[0] * d[1] - a[1] * d[0]) / den;
                    if t > 0.0 && (-1e-12..=1.0 + 1e-12).contains(&s) {
                        best = best.min(t);
                    }
                }
                best
            }
        }
    }

    /// Distance from `x` to the boundary, for `x` inside the domain.
    pub fn boundary_distance(&self, x: &Point) -> f64 {
        match &self.kind {
            DomainKind::Ball { center, radius } => (radius - dist(x, center)).max(0.0),
            DomainKind::StarPolygon { vertices } => {
                let n = vertices.len();
                (0..n)
                    .map(|i| {
                        let a = vertices[i];
                        let b = vertices[(i + 1) % n];
                        let e = [b[0] - a[0], b[1] - a[1]];
                        let t = (((x[0] - a[0]) * e[0] + (x[1] - a[1]) * e[1])
                            / (e[0] * e[0] + e[1] * e[1]))
                            .clamp(0.0, 1.0);
                        dist(x, &[a[0] + t * e[0], a[1] + t * e[1]])
                    })
                    .fold(f64::INFINITY, f64::min)
            }
        }
    }

    pub fn area(&self) -> f64 {
        match &self.kind {
            DomainKind::Ball { radius, .. } => std::f64::consts::PI * radius * radius,
            DomainKind::StarPolygon { vertices } => {
                let n = vertices.len();
                0.5 * (0..n)
                    .map(|i| {
                        let a = vertices[i];
                        let b = vertices[(i + 1) % n];
                        a[0] * b[1] - a[1] * b[0]
                    })
                    .sum::<f64>()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_distances() {
        assert!((Domain::unit_disk().boundary_distance(&[0.3, 0.4]) - 0.5).abs() < 1e-15);
        let sq = Domain::star_polygon(
            vec![[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]],
            [0.0, 0.0],
            1.0,
        )
        .unwrap();
        assert!((sq.boundary_distance(&[0.5, 0.25]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn ball_diameter() {
        let d = Domain::ball([1.0, 2.0], 0.75).unwrap();
        assert_eq!(d.diameter(), 1.5);
        assert!(d.contains(&[1.0, 2.5]));
        assert!(!d.contains(&[1.8, 2.0]));
    }

    #[test]
    fn square_is_star_shaped_about_inner_ball() {
        let sq = vec![[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]];
        let d = Domain::star_polygon(sq.clone(), [0.0, 0.0], 0.9).unwrap();
        assert!((d.area() - 4.0).abs() < 1e-14);
        assert!((d.boundary_radius(0.0) - 1.0).abs() < 1e-12);
        assert!((d.boundary_radius(std::f64::consts::FRAC_PI_4) - 2f64.sqrt()).abs() < 1e-12);
        assert!(Domain::star_polygon(sq, [0.5, 0.0], 0.9).is_err());
    }
}
