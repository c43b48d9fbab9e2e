#![allow(dead_code)]

pub mod fuzz;

use rand::Rng;
use rco_core::domain::*;

pub fn nb(x0: f64, y0: f64, x1: f64, y1: f64) -> NormBox {
    NormBox::new(x0, y0, x1, y1).unwrap()
}

pub fn navi() -> Navi {
    Navi {
        target_point: [6.0, 0.0],
        current_direction: 0.0,
        road_geometry: RoadGeometry::Straight,
    }
}

/// Front-view frame with the given deficit and road-user boxes.
pub fn frame(tick: u64, deficits: &[NormBox], objects: &[NormBox]) -> EnvironmentSnapshot {
    let mut perception = Perception::empty();
    perception.front.deficits = deficits
        .iter()
        .map(|&bbox| DeficitRegion {
            view: ViewId::Front,
            bbox,
            masked_object_id: None,
        })
        .collect();
    perception.front.visible_objects = objects
        .iter()
        .map(|&bbox| VisibleObject {
            class: ObjectClass::Car,
            bbox,
            range_m: 10.0,
            light_state: None,
        })
        .collect();
    EnvironmentSnapshot {
        tick,
        perception,
        navi: navi(),
        surrounding: Surrounding::default(),
    }
}

pub fn random_box<R: Rng>(rng: &mut R, max_side: f64) -> NormBox {
    let w = rng.random_range(0.005..max_side);
    let h = rng.random_range(0.005..max_side);
    let x0 = rng.random_range(0.0..1.0 - w);
    let y0 = rng.random_range(0.0..1.0 - h);
    nb(x0, y0, x0 + w, y0 + h)
}

/// Union area by counting covered cell centers on an n×n grid.
pub fn raster_union(boxes: &[NormBox], n: usize) -> f64 {
    let cell = 1.0 / n as f64;
    let mut covered = 0usize;
    for j in 0..n {
        let y = (j as f64 + 0.5) * cell;
        let mut row = vec![false; n];
        for b in boxes.iter().filter(|b| b.y0() <= y && y < b.y1()) {
            let lo = ((b.x0() / cell) - 0.5).ceil().max(0.0) as usize;
            let hi = ((b.x1() / cell) - 0.5).ceil().min(n as f64) as usize;
            for c in row.iter_mut().take(hi).skip(lo) {
                *c = true;
            }
        }
        covered += row.iter().filter(|c| **c).count();
    }
    covered as f64 / (n * n) as f64
}

/// Straight-line transcription of the constraint table: each triggered
/// row adjusts its field, then every field is clamped once.
pub fn constraint_oracle(
    a: (f64, f64, f64),
    m: &VehicleMeasurements,
    sc: &SafetyConstraints,
    dt: f64,
    db: f64,
) -> (f64, f64, f64) {
    let (mut throttle, mut brake, mut steer) = a;
    if m.v >= sc.v_max {
        throttle = throttle - dt;
    }
    if m.d_follow < sc.d_min {
        throttle = throttle - dt;
    }
    if m.a_x > sc.ac_max {
        throttle = throttle - dt * (m.a_x - sc.ac_max);
    }
    if m.v * m.v / (2.0 * sc.de_max) > sc.d_brake {
        brake = brake + db;
    }
    if m.a_x < -sc.de_max {
        brake = brake - db * (-sc.de_max - m.a_x);
    }
    if m.omega_z.abs() > sc.psi_max {
        steer = steer * (sc.psi_max / m.omega_z.abs());
    }
    let clamp = |v: f64, lo: f64, hi: f64| if v < lo { lo } else if v > hi { hi } else { v };
    (clamp(throttle, 0.0, 1.0), clamp(brake, 0.0, 1.0), clamp(steer, -1.0, 1.0))
}

/// The speed-token table, written out row by row.
pub fn speed_table(speed: SpeedControl, prev: f64) -> (f64, f64) {
    match speed {
        SpeedControl::ConstantSpeed => (0.7, 0.0),
        SpeedControl::Deceleration => (f64::max(0.0, prev - 0.2), 0.2),
        SpeedControl::QuickDeceleration => (f64::max(0.0, prev - 0.4), 0.4),
        SpeedControl::DecelerationToZero => (0.0, 0.8),
        SpeedControl::Acceleration => (f64::min(1.0, prev + 0.2), 0.0),
        SpeedControl::QuickAcceleration => (f64::min(1.0, prev + 0.4), 0.0),
    }
}

/// Random sample spread so that every trigger fires for a good share of
/// draws.
pub fn random_constraint_case<R: Rng>(
    rng: &mut R,
) -> (Action, VehicleMeasurements, SafetyConstraints, f64, f64) {
    let a = Action::new(
        rng.random_range(0.0..=1.0),
        rng.random_range(0.0..=1.0),
        rng.random_range(-1.0..=1.0),
    )
    .unwrap();
    let m = VehicleMeasurements {
        v: rng.random_range(0.0..25.0),
        a_x: rng.random_range(-12.0..12.0),
        omega_z: rng.random_range(-1.5..1.5),
        d_follow: if rng.random_bool(0.2) {
            VehicleMeasurements::NO_LEAD
        } else {
            rng.random_range(0.0..40.0)
        },
    };
    let sc = SafetyConstraints::new(
        rng.random_range(1.0..20.0),
        rng.random_range(0.5..20.0),
        rng.random_range(0.5..6.0),
        rng.random_range(0.5..10.0),
        rng.random_range(0.05..1.0),
        rng.random_range(0.5..40.0),
    )
    .unwrap();
    let dt = rng.random_range(0.001..=1.0);
    let db = rng.random_range(0.001..=1.0);
    (a, m, sc, dt, db)
}
