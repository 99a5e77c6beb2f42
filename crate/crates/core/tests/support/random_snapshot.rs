//! Random valid world snapshots for builder tests.

use rand::RngExt;
use rand_chacha::ChaCha8Rng;
use scenekg::builder::{
    Actor, ConnectorGeometry, CrosswalkGeometry, EgoState, LaneGeometry, Link, MapData, Road, WorldSnapshot,
};
use scenekg::geometry::Point;

/// Lanes of one road: a wandering reference line offset sideways per lane.
fn road(rng: &mut ChaCha8Rng, index: usize) -> Road {
    let lanes = rng.random_range(1..=3);
    let mut p = Point(rng.random_range(-90.0..90.0), rng.random_range(-90.0..90.0));
    let mut heading: f64 = rng.random_range(-3.14..3.14);
    let mut reference = vec![p];
    for _ in 0..rng.random_range(1..=4) {
        heading += rng.random_range(-0.3..0.3);
        let step = rng.random_range(2.0..18.0);
        p = Point(p.0 + step * heading.cos(), p.1 + step * heading.sin());
        reference.push(p);
    }
    let lanes: Vec<LaneGeometry> = (0..lanes)
        .map(|l| {
            let offset = 3.5 * l as f64;
            let centerline = (0..reference.len())
                .map(|i| {
                    let (a, b) = if i + 1 < reference.len() {
                        (reference[i], reference[i + 1])
                    } else {
                        (reference[i - 1], reference[i])
                    };
                    let h = (b.1 - a.1).atan2(b.0 - a.0);
                    Point(reference[i].0 + offset * h.sin(), reference[i].1 - offset * h.cos())
                })
                .collect();
            LaneGeometry {
                id: format!("r{index}_l{l}"),
                centerline,
                speed_limit: [8.3, 13.9, 22.2][rng.random_range(0..3)],
                width: if rng.random_bool(0.2) { Some(3.0) } else { None },
            }
        })
        .collect();
    let boundary_types = if rng.random_bool(0.5) {
        Vec::new()
    } else {
        (0..=lanes.len())
            .map(|_| ["solid", "dashed"][rng.random_range(0..2)].to_owned())
            .collect()
    };
    Road {
        id: format!("r{index}"),
        lanes,
        boundary_types,
    }
}

pub fn random_snapshot(rng: &mut ChaCha8Rng, scene_id: &str) -> WorldSnapshot {
    let roads: Vec<Road> = (0..rng.random_range(1..=6)).map(|i| road(rng, i)).collect();
    let all: Vec<&LaneGeometry> = roads.iter().flat_map(|r| &r.lanes).collect();
    let mut successors = Vec::new();
    for a in &all {
        for b in &all {
            if a.id != b.id && rng.random_bool(0.05) {
                successors.push(Link {
                    from: a.id.clone(),
                    to: b.id.clone(),
                });
            }
        }
    }
    let connectors = (0..rng.random_range(0..=3))
        .map(|i| {
            let from = all[rng.random_range(0..all.len())];
            let to = all[rng.random_range(0..all.len())];
            let a = *from.centerline.last().unwrap();
            let b = to.centerline[0];
            let mid = Point(
                (a.0 + b.0) / 2.0 + rng.random_range(-5.0..5.0),
                (a.1 + b.1) / 2.0 + rng.random_range(-5.0..5.0),
            );
            ConnectorGeometry {
                id: format!("c{i}"),
                from: from.id.clone(),
                to: to.id.clone(),
                turn_type: ["left", "right", "straight"][rng.random_range(0..3)].into(),
                centerline: vec![a, mid, b],
                width: None,
            }
        })
        .collect();
    let crosswalks = (0..rng.random_range(0..=2))
        .map(|i| {
            let lane = all[rng.random_range(0..all.len())];
            let c = lane.centerline[rng.random_range(0..lane.centerline.len())];
            let h: f64 = rng.random_range(-3.14..3.14);
            let (l, w) = (rng.random_range(2.0..4.0), rng.random_range(5.0..12.0));
            let (cos, sin) = (h.cos(), h.sin());
            let polygon = [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)]
                .iter()
                .map(|&(u, v)| {
                    let (dx, dy) = (u * l / 2.0, v * w / 2.0);
                    Point(c.0 + cos * dx - sin * dy, c.1 + sin * dx + cos * dy)
                })
                .collect();
            CrosswalkGeometry {
                id: format!("x{i}"),
                polygon,
            }
        })
        .collect();

    // the ego stands on a lane centerline, so some lane always hosts it
    let lane = all[rng.random_range(0..all.len())];
    let seg = rng.random_range(0..lane.centerline.len() - 1);
    let (a, b) = (lane.centerline[seg], lane.centerline[seg + 1]);
    let t: f64 = rng.random();
    let ego_pos = Point(a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1));
    let ego = EgoState {
        position: ego_pos,
        heading: (b.1 - a.1).atan2(b.0 - a.0),
        speed: rng.random_range(0.0..20.0),
        length: 4.5,
        width: 1.9,
    };
    let actors = (0..rng.random_range(0..=8))
        .map(|i| {
            let r = rng.random_range(0.0..80.0);
            let phi: f64 = rng.random_range(-3.14..3.14);
            Actor {
                id: format!("a{i:02}"),
                actor_type: ["vehicle", "pedestrian", "bicycle", "traffic_cone"][rng.random_range(0..4)].into(),
                position: Point(ego_pos.0 + r * phi.cos(), ego_pos.1 + r * phi.sin()),
                heading: rng.random_range(-3.14..3.14),
                speed: rng.random_range(0.0..15.0),
                length: rng.random_range(0.5..5.0),
                width: rng.random_range(0.5..2.0),
            }
        })
        .collect();
    WorldSnapshot {
        scene_id: scene_id.into(),
        timestamp_us: 0,
        ego,
        actors,
        map: MapData {
            roads,
            successors,
            connectors,
            crosswalks,
        },
    }
}
