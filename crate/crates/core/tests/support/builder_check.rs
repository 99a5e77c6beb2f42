//! Independent checks of the segmentation, radius and root rules on a built
//! scene. Geometry is recomputed here rather than taken from the library.

use std::collections::BTreeMap;

use scenekg::builder::{BuildOutput, WorldSnapshot};
use scenekg::geometry::Point;
use scenekg::model::{EdgeKind, NodeKind};

const RADIUS: f64 = 50.0;
const MAX_SEGMENT: f64 = 10.0;

fn dist(a: Point, b: Point) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}

fn length(line: &[Point]) -> f64 {
    line.windows(2).map(|w| dist(w[0], w[1])).sum()
}

fn arclength_midpoint(line: &[Point]) -> Point {
    let mut left = length(line) / 2.0;
    for w in line.windows(2) {
        let d = dist(w[0], w[1]);
        if left <= d && d > 0.0 {
            let t = left / d;
            return Point(w[0].0 + t * (w[1].0 - w[0].0), w[0].1 + t * (w[1].1 - w[0].1));
        }
        left -= d;
    }
    *line.last().unwrap()
}

fn area_centroid(poly: &[Point]) -> Point {
    let (mut a, mut cx, mut cy) = (0.0, 0.0, 0.0);
    for i in 0..poly.len() {
        let (p, q) = (poly[i], poly[(i + 1) % poly.len()]);
        let cross = p.0 * q.1 - q.0 * p.1;
        a += cross;
        cx += (p.0 + q.0) * cross;
        cy += (p.1 + q.1) * cross;
    }
    Point(cx / (3.0 * a), cy / (3.0 * a))
}

/// Distances this close to the radius are not judged either way.
fn clearly(d: f64, inside: bool) -> bool {
    if inside {
        d < RADIUS - 1e-9
    } else {
        d > RADIUS + 1e-9
    }
}

pub fn check(snapshot: &WorldSnapshot, out: &BuildOutput) -> Result<(), String> {
    let g = &out.graph;
    let ego = snapshot.ego.position;

    // segments per original lane
    let mut pieces: BTreeMap<&str, Vec<(usize, f64)>> = BTreeMap::new();
    for &i in g.nodes_of_kind(NodeKind::Lane) {
        let node = g.node(i);
        let (lane, idx) = node.id.rsplit_once('/').ok_or(format!("bad segment id {}", node.id))?;
        let len = node.attr("length").and_then(|v| v.as_num()).ok_or("segment without length")?;
        if !(len > 0.0 && len <= MAX_SEGMENT + 1e-9) {
            return Err(format!("segment {} has length {len}", node.id));
        }
        pieces.entry(lane).or_default().push((idx.parse().map_err(|_| "bad index")?, len));
    }

    for road in &snapshot.map.roads {
        let kept: Vec<bool> = road.lanes.iter().map(|l| pieces.contains_key(l.id.as_str())).collect();
        for (lane, &k) in road.lanes.iter().zip(&kept) {
            let d = dist(arclength_midpoint(&lane.centerline), ego);
            if (k && clearly(d, false)) || (!k && clearly(d, true)) {
                return Err(format!("lane {} at distance {d} kept={k}", lane.id));
            }
        }
        // contiguous runs of kept lanes share one segment count
        let mut i = 0;
        while i < road.lanes.len() {
            if !kept[i] {
                i += 1;
                continue;
            }
            let start = i;
            while i < road.lanes.len() && kept[i] {
                i += 1;
            }
            let run = &road.lanes[start..i];
            let longest = run.iter().map(|l| length(&l.centerline)).fold(0.0, f64::max);
            let expected = (longest / MAX_SEGMENT).ceil() as usize;
            for lane in run {
                let segs = &pieces[lane.id.as_str()];
                let near_multiple = ((longest / MAX_SEGMENT) - (longest / MAX_SEGMENT).round()).abs() < 1e-9;
                if segs.len() != expected && !near_multiple {
                    return Err(format!("lane {} has {} segments, expected {expected}", lane.id, segs.len()));
                }
                if segs.len() != pieces[run[0].id.as_str()].len() {
                    return Err(format!("unequal segment counts in road {}", road.id));
                }
                let mut idx: Vec<usize> = segs.iter().map(|s| s.0).collect();
                idx.sort_unstable();
                if idx != (0..segs.len()).collect::<Vec<_>>() {
                    return Err(format!("lane {} segment indices {idx:?}", lane.id));
                }
                let total: f64 = segs.iter().map(|s| s.1).sum();
                let own = length(&lane.centerline);
                if (total - own).abs() > 1e-6 {
                    return Err(format!("lane {} chain length {total} vs {own}", lane.id));
                }
            }
        }
    }

    for c in &snapshot.map.connectors {
        let k = g.get(&c.id).is_some_and(|n| n.kind == NodeKind::Connector);
        let d = dist(arclength_midpoint(&c.centerline), ego);
        if (k && clearly(d, false)) || (!k && clearly(d, true)) {
            return Err(format!("connector {} at distance {d} kept={k}", c.id));
        }
    }
    for cw in &snapshot.map.crosswalks {
        let k = g.get(&cw.id).is_some_and(|n| n.kind == NodeKind::Crosswalk);
        let d = dist(area_centroid(&cw.polygon), ego);
        if (k && clearly(d, false)) || (!k && clearly(d, true)) {
            return Err(format!("crosswalk {} at distance {d} kept={k}", cw.id));
        }
    }
    for a in &snapshot.actors {
        let k = g.get(&a.id).is_some_and(|n| n.kind == NodeKind::Object);
        let dropped = out.report.dropped_actors.contains(&a.id);
        let d = dist(a.position, ego);
        if (k && clearly(d, false)) || (!k && !dropped && clearly(d, true)) {
            return Err(format!("actor {} at distance {d} kept={k}", a.id));
        }
    }

    let egos = g.nodes_of_kind(NodeKind::Ego);
    if egos.len() != 1 {
        return Err(format!("{} ego nodes", egos.len()));
    }
    let on: Vec<usize> = g
        .edges()
        .iter()
        .filter(|e| e.source == egos[0] && e.kind == EdgeKind::On)
        .map(|e| e.target)
        .collect();
    if on.len() != 1 || on[0] != g.root_index() || !g.node(on[0]).kind.is_drivable() {
        return Err(format!("ego On targets {on:?}, root {}", g.root_index()));
    }
    Ok(())
}
