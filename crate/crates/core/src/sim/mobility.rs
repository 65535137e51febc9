//! Piecewise-linear waypoint routes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Position;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Route {
    pub waypoints: Vec<Position>,
    /// Speed on each segment, m/s; one fewer than the waypoints.
    pub speeds: Vec<f64>,
    /// Walk back along the same path at the end, and so on.
    pub repeat: bool,
}

impl Route {
    pub fn stationary(at: Position) -> Self {
        Self {
            waypoints: vec![at],
            speeds: Vec::new(),
            repeat: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.waypoints.is_empty() {
            return Err(Error::InvalidScenario("route has no waypoints".into()));
        }
        if self.speeds.len() + 1 != self.waypoints.len() {
            return Err(Error::InvalidScenario(format!(
                "route has {} waypoints but {} segment speeds",
                self.waypoints.len(),
                self.speeds.len()
            )));
        }
        if let Some(p) = self.waypoints.iter().find(|p| !p.is_finite()) {
            return Err(Error::InvalidScenario(format!("non-finite waypoint {p:?}")));
        }
        if let Some(v) = self.speeds.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidScenario(format!("segment speed {v} must be positive")));
        }
        Ok(())
    }

    /// Time to walk the route once.
    pub fn traverse_time(&self) -> f64 {
        self.waypoints
            .windows(2)
            .zip(&self.speeds)
            .map(|(w, v)| w[0].distance_to(&w[1]) / v)
            .sum()
    }

    /// Points spaced at most `step` apart along every segment, endpoints included.
    pub fn sample_path(&self, step: f64) -> Vec<Position> {
        let mut out = vec![self.waypoints[0]];
        for w in self.waypoints.windows(2) {
            let len = w[0].distance_to(&w[1]);
            let n = (len / step).ceil().max(1.0) as usize;
            for k in 1..=n {
                let f = k as f64 / n as f64;
                out.push(Position::new(
                    w[0].x + f * (w[1].x - w[0].x),
                    w[0].y + f * (w[1].y - w[0].y),
                ));
            }
        }
        out
    }
}

/// Position and instantaneous speed at time `t` after the route starts.
/// Holds the final waypoint once a non-repeating route ends.
pub fn mobility_position(route: &Route, t: f64) -> Result<(Position, f64)> {
    route.validate()?;
    if !(t >= 0.0) {
        return Err(Error::InvalidDuration(t));
    }
    let total = route.traverse_time();
    if route.waypoints.len() == 1 || total == 0.0 {
        return Ok((route.waypoints[0], 0.0));
    }
    let (mut local, backwards) = if route.repeat {
        let lap = (t / total).floor();
        (t - lap * total, lap as u64 % 2 == 1)
    } else if t >= total {
        return Ok((*route.waypoints.last().unwrap(), 0.0));
    } else {
        (t, false)
    };
    if backwards {
        local = total - local;
    }
    for (w, &v) in route.waypoints.windows(2).zip(&route.speeds) {
        let len = w[0].distance_to(&w[1]);
        let dt = len / v;
        if local <= dt {
            let f = if dt > 0.0 { local / dt } else { 0.0 };
            let p = Position::new(w[0].x + f * (w[1].x - w[0].x), w[0].y + f * (w[1].y - w[0].y));
            return Ok((p, if len > 0.0 { v } else { 0.0 }));
        }
        local -= dt;
    }
    Ok((*route.waypoints.last().unwrap(), 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn route(points: &[(f64, f64)], speeds: &[f64]) -> Route {
        Route {
            waypoints: points.iter().map(|&(x, y)| Position::new(x, y)).collect(),
            speeds: speeds.to_vec(),
            repeat: false,
        }
    }

    #[test]
    fn single_waypoint_is_still() {
        let r = route(&[(3.0, 4.0)], &[]);
        assert_eq!(mobility_position(&r, 17.0).unwrap(), (Position::new(3.0, 4.0), 0.0));
    }

    #[test]
    fn linear_segment() {
        let r = route(&[(0.0, 0.0), (10.0, 0.0)], &[1.0]);
        let (p, v) = mobility_position(&r, 4.0).unwrap();
        assert!((p.x - 4.0).abs() < 1e-12 && p.y == 0.0);
        assert_eq!(v, 1.0);
        assert_eq!(mobility_position(&r, 50.0).unwrap(), (Position::new(10.0, 0.0), 0.0));
    }

    #[test]
    fn continuous_at_speed_change() {
        // 30 m: 18 m at 0.9 then 12 m at 0.5
        let r = route(&[(0.0, 0.0), (18.0, 0.0), (18.0, 12.0)], &[0.9, 0.5]);
        let dt = 1e-3;
        let mut prev = mobility_position(&r, 0.0).unwrap().0;
        let mut t = dt;
        while t < r.traverse_time() + 1.0 {
            let (p, v) = mobility_position(&r, t).unwrap();
            // dense sampling oracle: no jump larger than the top speed allows
            assert!(p.distance_to(&prev) <= 0.9 * dt + 1e-9, "jump at t={t}");
            assert!(v == 0.9 || v == 0.5 || v == 0.0);
            prev = p;
            t += dt;
        }
        let (p, _) = mobility_position(&r, 20.0).unwrap();
        assert!(p.distance_to(&Position::new(18.0, 0.0)) < 1e-9);
    }

    #[test]
    fn repeat_walks_back() {
        let mut r = route(&[(0.0, 0.0), (10.0, 0.0)], &[2.0]);
        r.repeat = true;
        let (p, _) = mobility_position(&r, 7.0).unwrap();
        assert!((p.x - 6.0).abs() < 1e-12);
        let (p, _) = mobility_position(&r, 10.0).unwrap();
        assert!(p.x.abs() < 1e-12);
    }

    #[test]
    fn invalid_routes() {
        assert!(mobility_position(&route(&[], &[]), 0.0).is_err());
        assert!(mobility_position(&route(&[(0.0, 0.0), (1.0, 0.0)], &[0.0]), 0.0).is_err());
        assert!(mobility_position(&route(&[(0.0, 0.0), (1.0, 0.0)], &[]), 0.0).is_err());
    }

    proptest! {
        #[test]
        fn speed_bound_between_samples(
            pts in proptest::collection::vec((-20.0f64..20.0, -20.0f64..20.0), 2..6),
            v in 0.1f64..2.0,
            t in 0.0f64..100.0,
            repeat: bool,
        ) {
            let mut r = route(&pts, &vec![v; pts.len() - 1]);
            r.repeat = repeat;
            let (a, _) = mobility_position(&r, t).unwrap();
            let (b, _) = mobility_position(&r, t + 0.5).unwrap();
            prop_assert!(a.distance_to(&b) <= v * 0.5 + 1e-9);
        }
    }
}
