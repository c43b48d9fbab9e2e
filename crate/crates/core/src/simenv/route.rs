use serde::{Deserialize, Serialize};

use crate::domain::RoadGeometry;

/// How far behind and ahead of the last known arc length a projection may
/// land. Keeps progress from jumping across self-approaching routes.
const WINDOW_BACK_M: f64 = 10.0;
const WINDOW_AHEAD_M: f64 = 30.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteSpec {
    pub waypoints: Vec<[f64; 2]>,
    /// One tag per segment; missing tags default to straight.
    #[serde(default)]
    pub geometry: Vec<RoadGeometry>,
}

/// Polyline route with cumulative arc length.
#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    waypoints: Vec<[f64; 2]>,
    geometry: Vec<RoadGeometry>,
    cum: Vec<f64>,
}

impl Route {
    pub fn new(spec: &RouteSpec) -> Result<Self, String> {
        let wp = &spec.waypoints;
        if wp.len() < 2 {
            return Err("route needs at least two waypoints".into());
        }
        if !spec.geometry.is_empty() && spec.geometry.len() != wp.len() - 1 {
            return Err(format!(
                "route has {} segments but {} geometry tags",
                wp.len() - 1,
                spec.geometry.len()
            ));
        }
        let mut cum = vec![0.0];
        for (i, w) in wp.windows(2).enumerate() {
            if !(w[0].iter().chain(w[1].iter()).all(|v| v.is_finite())) {
                return Err(format!("waypoint {i} is not finite"));
            }
            let len = (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]);
            if len < 1e-6 {
                return Err(format!("waypoints {i} and {} coincide", i + 1));
            }
            cum.push(cum[i] + len);
        }
        let geometry = if spec.geometry.is_empty() {
            vec![RoadGeometry::Straight; wp.len() - 1]
        } else {
            spec.geometry.clone()
        };
        Ok(Route {
            waypoints: wp.clone(),
            geometry,
            cum,
        })
    }

    pub fn length(&self) -> f64 {
        *self.cum.last().expect("non-empty")
    }

    pub fn waypoints(&self) -> &[[f64; 2]] {
        &self.waypoints
    }

    fn segment_at(&self, s: f64) -> usize {
        let n = self.waypoints.len() - 1;
        match self.cum.binary_search_by(|c| c.total_cmp(&s)) {
            Ok(i) => i.min(n - 1),
            Err(i) => i.saturating_sub(1).min(n - 1),
        }
    }

    fn direction(&self, seg: usize) -> (f64, f64) {
        let (a, b) = (self.waypoints[seg], self.waypoints[seg + 1]);
        let len = self.cum[seg + 1] - self.cum[seg];
        ((b[0] - a[0]) / len, (b[1] - a[1]) / len)
    }

    /// Point at arc length `s`. Beyond either end the first or last segment
    /// is extended, so look-ahead targets stay well defined.
    pub fn point_at(&self, s: f64) -> [f64; 2] {
        let seg = self.segment_at(s);
        let (ux, uy) = self.direction(seg);
        let a = self.waypoints[seg];
        let d = s - self.cum[seg];
        [a[0] + ux * d, a[1] + uy * d]
    }

    pub fn heading_at(&self, s: f64) -> f64 {
        let (ux, uy) = self.direction(self.segment_at(s));
        uy.atan2(ux)
    }

    pub fn geometry_at(&self, s: f64) -> RoadGeometry {
        self.geometry[self.segment_at(s)]
    }

    /// Arc length of the closest route point to `p`, searched near `hint`.
    pub fn project(&self, p: [f64; 2], hint: f64) -> f64 {
        let (lo, hi) = (hint - WINDOW_BACK_M, hint + WINDOW_AHEAD_M);
        let mut best: Option<(f64, f64)> = None;
        for seg in 0..self.waypoints.len() - 1 {
            if self.cum[seg + 1] < lo || self.cum[seg] > hi {
                continue;
            }
            let a = self.waypoints[seg];
            let (ux, uy) = self.direction(seg);
            let len = self.cum[seg + 1] - self.cum[seg];
            let t = ((p[0] - a[0]) * ux + (p[1] - a[1]) * uy).clamp(0.0, len);
            let s = if t >= len { self.cum[seg + 1] } else { self.cum[seg] + t };
            let q = [a[0] + ux * t, a[1] + uy * t];
            let d = (p[0] - q[0]).hypot(p[1] - q[1]);
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, s));
            }
        }
        best.map(|(_, s)| s).unwrap_or(hint.clamp(0.0, self.length()))
    }
}

/// Monotone progress along a route.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ProgressTracker {
    pub s: f64,
    pub max_s: f64,
}

impl ProgressTracker {
    pub fn update(&mut self, route: &Route, p: [f64; 2]) {
        self.s = route.project(p, self.s);
        self.max_s = self.max_s.max(self.s);
    }
}
