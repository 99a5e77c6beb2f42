//! Builds [`SceneGraph`]s from world-model snapshots.
//!
//! The pipeline is: drop elements outside the radius around the ego, cut every
//! lane of a road into the same number of segments, wire successor links and
//! intersection connectors with `Next` edges, attach crosswalks and finally
//! place the ego and every actor on the segment its bounding box overlaps most.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{self, Footprint, Point, Polygon};
use crate::model::{Attributes, EdgeKind, ModelError, Node, NodeKind, SceneGraph, SceneGraphBuilder};

pub const EGO_ID: &str = "ego";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EgoState {
    pub position: Point,
    pub heading: f64,
    pub speed: f64,
    pub length: f64,
    pub width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Actor {
    pub id: String,
    pub actor_type: String,
    pub position: Point,
    pub heading: f64,
    pub speed: f64,
    pub length: f64,
    pub width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaneGeometry {
    pub id: String,
    pub centerline: Vec<Point>,
    pub speed_limit: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,
}

/// Parallel lanes of one road, ordered left to right in driving direction.
///
/// `boundary_types` is either empty (no lane markers) or has one entry per lane
/// boundary: entry `i` is the left boundary of lane `i`, the last entry the right
/// boundary of the rightmost lane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Road {
    pub id: String,
    pub lanes: Vec<LaneGeometry>,
    #[serde(default)]
    pub boundary_types: Vec<String>,
}

/// Direct `Next` relation between two drivable elements (lanes or connectors).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub from: String,
    pub to: String,
}

/// One legal movement through an intersection or along a roundabout ring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConnectorGeometry {
    pub id: String,
    pub from: String,
    pub to: String,
    pub turn_type: String,
    pub centerline: Vec<Point>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrosswalkGeometry {
    pub id: String,
    pub polygon: Vec<Point>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MapData {
    #[serde(default)]
    pub roads: Vec<Road>,
    #[serde(default)]
    pub successors: Vec<Link>,
    #[serde(default)]
    pub connectors: Vec<ConnectorGeometry>,
    #[serde(default)]
    pub crosswalks: Vec<CrosswalkGeometry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldSnapshot {
    pub scene_id: String,
    pub timestamp_us: i64,
    pub ego: EgoState,
    #[serde(default)]
    pub actors: Vec<Actor>,
    #[serde(default)]
    pub map: MapData,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BuildConfig {
    pub radius: f64,
    pub max_segment: f64,
    pub default_lane_width: f64,
}

impl Default for BuildConfig {
    fn default() -> Self {
        BuildConfig {
            radius: 50.0,
            max_segment: 10.0,
            default_lane_width: 3.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BuildError {
    #[error("invalid build configuration: {0}")]
    InvalidConfig(String),
    #[error("lane or connector `{0}` has fewer than two points or zero length")]
    DegenerateLane(String),
    #[error("`{element}` references unknown element `{reference}`")]
    UnknownReference { element: String, reference: String },
    #[error("road `{road}` declares {found} boundary types for {lanes} lanes")]
    InvalidBoundaries { road: String, lanes: usize, found: usize },
    #[error("crosswalk `{0}` must be a convex polygon with at least three vertices")]
    InvalidPolygon(String),
    #[error("invalid actor `{0}`: non-finite pose or non-positive dimensions")]
    InvalidActor(String),
    #[error("no lane or connector segments to place actors on")]
    NoInfrastructure,
    #[error("ego bounding box overlaps no lane or connector segment")]
    NoEgoPlacement,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// A lane piece produced by [`segment_lanes`].
#[derive(Debug, Clone, PartialEq)]
pub struct LaneSegment {
    pub id: String,
    pub lane_id: String,
    pub index: usize,
    pub centerline: Vec<Point>,
    pub length: f64,
    pub speed_limit: f64,
    pub width: f64,
}

pub fn segment_id(lane_id: &str, index: usize) -> String {
    format!("{lane_id}/{index:03}")
}

pub fn marker_id(road_id: &str, boundary: usize, index: usize) -> String {
    format!("{road_id}/b{boundary}/{index:03}")
}

/// Number of pieces every lane of a group is cut into.
pub fn group_segment_count(lengths: impl IntoIterator<Item = f64>, max_segment: f64) -> usize {
    let longest = lengths.into_iter().fold(0.0_f64, f64::max);
    // tolerance absorbs arclength rounding on exact multiples
    ((longest / max_segment) * (1.0 - 1e-12)).ceil().max(1.0) as usize
}

/// Cuts every lane of `road` into the same number of equal-length pieces.
/// Returns one chain per lane, in the road's lane order.
pub fn segment_lanes(
    road: &Road,
    max_segment: f64,
    default_width: f64,
) -> Result<Vec<Vec<LaneSegment>>, BuildError> {
    let mut lengths = Vec::with_capacity(road.lanes.len());
    for lane in &road.lanes {
        let len = geometry::polyline_length(&lane.centerline);
        if lane.centerline.len() < 2 || !(len > 0.0) || !len.is_finite() {
            return Err(BuildError::DegenerateLane(lane.id.clone()));
        }
        lengths.push(len);
    }
    let parts = group_segment_count(lengths.iter().copied(), max_segment);
    Ok(road
        .lanes
        .iter()
        .map(|lane| {
            geometry::split_equal(&lane.centerline, parts)
                .into_iter()
                .enumerate()
                .map(|(index, centerline)| LaneSegment {
                    id: segment_id(&lane.id, index),
                    lane_id: lane.id.clone(),
                    index,
                    length: geometry::polyline_length(&centerline),
                    centerline,
                    speed_limit: lane.speed_limit,
                    width: lane.width.unwrap_or(default_width),
                })
                .collect()
        })
        .collect())
}

/// Keeps the map elements and actors whose center lies within `radius` of the
/// ego position. Lanes are centred at their arclength midpoint, crosswalks at
/// their area centroid. Roads that lose an inner lane are split into contiguous
/// runs; links touching a dropped lane are removed.
pub fn filter_radius(snapshot: &WorldSnapshot, radius: f64) -> WorldSnapshot {
    let ego = snapshot.ego.position;
    let within = |p: Point| p.distance(ego) <= radius;

    let mut roads = Vec::new();
    for road in &snapshot.map.roads {
        let keep: Vec<bool> = road
            .lanes
            .iter()
            .map(|l| l.centerline.len() >= 2 && within(geometry::polyline_center(&l.centerline)))
            .collect();
        let mut run = 0;
        let mut i = 0;
        while i < road.lanes.len() {
            if !keep[i] {
                i += 1;
                continue;
            }
            let start = i;
            while i < road.lanes.len() && keep[i] {
                i += 1;
            }
            let boundary_types = if road.boundary_types.len() == road.lanes.len() + 1 {
                road.boundary_types[start..=i].to_vec()
            } else {
                road.boundary_types.clone()
            };
            run += 1;
            roads.push(Road {
                id: if run == 1 { road.id.clone() } else { format!("{}~{run}", road.id) },
                lanes: road.lanes[start..i].to_vec(),
                boundary_types,
            });
        }
    }

    let connectors: Vec<ConnectorGeometry> = snapshot
        .map
        .connectors
        .iter()
        .filter(|c| c.centerline.len() >= 2 && within(geometry::polyline_center(&c.centerline)))
        .cloned()
        .collect();

    let drivable: BTreeSet<&str> = roads
        .iter()
        .flat_map(|r| r.lanes.iter().map(|l| l.id.as_str()))
        .chain(connectors.iter().map(|c| c.id.as_str()))
        .collect();
    let successors = snapshot
        .map
        .successors
        .iter()
        .filter(|l| drivable.contains(l.from.as_str()) && drivable.contains(l.to.as_str()))
        .cloned()
        .collect();
    let crosswalks = snapshot
        .map
        .crosswalks
        .iter()
        .filter(|c| !c.polygon.is_empty() && within(geometry::centroid(&c.polygon)))
        .cloned()
        .collect();
    let actors = snapshot
        .actors
        .iter()
        .filter(|a| within(a.position))
        .cloned()
        .collect();

    WorldSnapshot {
        scene_id: snapshot.scene_id.clone(),
        timestamp_us: snapshot.timestamp_us,
        ego: snapshot.ego.clone(),
        actors,
        map: MapData {
            roads,
            successors,
            connectors,
            crosswalks,
        },
    }
}

/// Something an actor can stand on.
#[derive(Debug, Clone)]
pub struct PlacementTarget {
    pub id: String,
    pub footprint: Footprint,
    bounds: (Point, Point),
}

impl PlacementTarget {
    pub fn new(id: impl Into<String>, centerline: &[Point], width: f64) -> Self {
        let footprint = Footprint::new(centerline, width);
        let bounds = bounds_of(footprint.quads().iter().flatten().copied());
        PlacementTarget {
            id: id.into(),
            footprint,
            bounds,
        }
    }
}

fn bounds_of(points: impl Iterator<Item = Point>) -> (Point, Point) {
    points.fold(
        (Point(f64::INFINITY, f64::INFINITY), Point(f64::NEG_INFINITY, f64::NEG_INFINITY)),
        |(lo, hi), p| (Point(lo.0.min(p.0), lo.1.min(p.1)), Point(hi.0.max(p.0), hi.1.max(p.1))),
    )
}

fn bounds_overlap(a: (Point, Point), b: (Point, Point)) -> bool {
    a.0 .0 <= b.1 .0 && b.0 .0 <= a.1 .0 && a.0 .1 <= b.1 .1 && b.0 .1 <= a.1 .1
}

const OVERLAP_EPS: f64 = 1e-9;

/// Picks the target whose footprint overlaps `shape` (convex, counter-clockwise)
/// the most. Near-equal overlaps resolve to the smallest id. Returns `None` when
/// nothing overlaps.
pub fn place_actor(shape: &[Point], targets: &[PlacementTarget]) -> Result<Option<String>, BuildError> {
    if targets.is_empty() {
        return Err(BuildError::NoInfrastructure);
    }
    let shape_bounds = bounds_of(shape.iter().copied());
    let mut ordered: Vec<&PlacementTarget> = targets.iter().collect();
    ordered.sort_by(|a, b| a.id.cmp(&b.id));
    let mut best: Option<(&str, f64)> = None;
    for target in ordered {
        if !bounds_overlap(shape_bounds, target.bounds) {
            continue;
        }
        let overlap = target.footprint.overlap(shape);
        if overlap <= OVERLAP_EPS {
            continue;
        }
        match best {
            Some((_, area)) if overlap <= area + OVERLAP_EPS => {}
            _ => best = Some((&target.id, overlap)),
        }
    }
    Ok(best.map(|(id, _)| id.to_owned()))
}

/// Actors that could not be attached to any segment.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PlacementReport {
    pub scene_id: String,
    pub dropped_actors: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct BuildOutput {
    pub graph: SceneGraph,
    pub report: PlacementReport,
}

fn validate(snapshot: &WorldSnapshot, config: &BuildConfig) -> Result<(), BuildError> {
    if !(config.radius > 0.0) || !(config.max_segment > 0.0) || !(config.default_lane_width > 0.0) {
        return Err(BuildError::InvalidConfig(format!(
            "radius, max_segment and default_lane_width must be positive (got {}, {}, {})",
            config.radius, config.max_segment, config.default_lane_width
        )));
    }
    let e = &snapshot.ego;
    let finite = e.position.0.is_finite() && e.position.1.is_finite() && e.heading.is_finite();
    if !finite || !(e.speed >= 0.0) || !(e.length > 0.0) || !(e.width > 0.0) {
        return Err(BuildError::InvalidActor(EGO_ID.to_owned()));
    }
    for a in &snapshot.actors {
        let finite = a.position.0.is_finite() && a.position.1.is_finite() && a.heading.is_finite();
        if !finite || !(a.speed >= 0.0) || !(a.length > 0.0) || !(a.width > 0.0) {
            return Err(BuildError::InvalidActor(a.id.clone()));
        }
    }
    let map = &snapshot.map;
    let mut drivable = BTreeSet::new();
    for road in &map.roads {
        if !road.boundary_types.is_empty() && road.boundary_types.len() != road.lanes.len() + 1 {
            return Err(BuildError::InvalidBoundaries {
                road: road.id.clone(),
                lanes: road.lanes.len(),
                found: road.boundary_types.len(),
            });
        }
        for lane in &road.lanes {
            let len = geometry::polyline_length(&lane.centerline);
            if lane.centerline.len() < 2 || !(len > 0.0) || !len.is_finite() {
                return Err(BuildError::DegenerateLane(lane.id.clone()));
            }
            drivable.insert(lane.id.as_str());
        }
    }
    for c in &map.connectors {
        let len = geometry::polyline_length(&c.centerline);
        if c.centerline.len() < 2 || !(len > 0.0) || !len.is_finite() {
            return Err(BuildError::DegenerateLane(c.id.clone()));
        }
        drivable.insert(c.id.as_str());
    }
    for c in &map.connectors {
        for r in [&c.from, &c.to] {
            if !drivable.contains(r.as_str()) {
                return Err(BuildError::UnknownReference {
                    element: c.id.clone(),
                    reference: r.clone(),
                });
            }
        }
    }
    for l in &map.successors {
        for r in [&l.from, &l.to] {
            if !drivable.contains(r.as_str()) {
                return Err(BuildError::UnknownReference {
                    element: format!("{}->{}", l.from, l.to),
                    reference: r.clone(),
                });
            }
        }
    }
    for cw in &map.crosswalks {
        if cw.polygon.len() < 3 || !geometry::is_convex(&cw.polygon) {
            return Err(BuildError::InvalidPolygon(cw.id.clone()));
        }
    }
    Ok(())
}

/// Builds the scene graph for one snapshot.
pub fn build_scene(snapshot: &WorldSnapshot, config: &BuildConfig) -> Result<BuildOutput, BuildError> {
    validate(snapshot, config)?;
    let snap = filter_radius(snapshot, config.radius);
    let mut b = SceneGraphBuilder::new();
    let mut targets = Vec::new();
    // first / last segment of every lane, for link wiring
    let mut entry: BTreeMap<&str, String> = BTreeMap::new();
    let mut exit: BTreeMap<&str, String> = BTreeMap::new();

    for road in &snap.map.roads {
        let chains = segment_lanes(road, config.max_segment, config.default_lane_width)?;
        let parts = chains.first().map_or(0, Vec::len);
        if !road.boundary_types.is_empty() {
            for (boundary, kind) in road.boundary_types.iter().enumerate() {
                for j in 0..parts {
                    b.add_node(
                        Node::new(marker_id(&road.id, boundary, j), NodeKind::LaneMarker)
                            .with("boundary_type", kind.as_str()),
                    )?;
                }
            }
        }
        for (lane_idx, chain) in chains.iter().enumerate() {
            for seg in chain {
                b.add_node(
                    Node::new(seg.id.clone(), NodeKind::Lane)
                        .with("speed_limit", seg.speed_limit)
                        .with("length", seg.length),
                )?;
                targets.push(PlacementTarget::new(seg.id.clone(), &seg.centerline, seg.width));
                if !road.boundary_types.is_empty() {
                    for (boundary, side) in [(lane_idx, "left"), (lane_idx + 1, "right")] {
                        let mut attrs = Attributes::new();
                        attrs.insert("side".into(), side.into());
                        b.add_edge(
                            &seg.id,
                            EdgeKind::ConnectedTo,
                            &marker_id(&road.id, boundary, seg.index),
                            attrs,
                        )?;
                    }
                }
            }
            for w in chain.windows(2) {
                b.add_edge(&w[0].id, EdgeKind::Next, &w[1].id, Attributes::new())?;
            }
            let lane_id = road.lanes[lane_idx].id.as_str();
            entry.insert(lane_id, chain[0].id.clone());
            exit.insert(lane_id, chain[chain.len() - 1].id.clone());
        }
    }

    for c in &snap.map.connectors {
        b.add_node(
            Node::new(c.id.clone(), NodeKind::Connector)
                .with("turn_type", c.turn_type.as_str())
                .with("length", geometry::polyline_length(&c.centerline)),
        )?;
        targets.push(PlacementTarget::new(
            c.id.clone(),
            &c.centerline,
            c.width.unwrap_or(config.default_lane_width),
        ));
        entry.insert(&c.id, c.id.clone());
        exit.insert(&c.id, c.id.clone());
    }

    // a link may be stated both as a successor and by a connector's ends
    let links: BTreeSet<(&str, &str)> = snap
        .map
        .successors
        .iter()
        .map(|l| (l.from.as_str(), l.to.as_str()))
        .chain(snap.map.connectors.iter().flat_map(|c| {
            [(c.from.as_str(), c.id.as_str()), (c.id.as_str(), c.to.as_str())]
        }))
        .collect();
    for (from, to) in links {
        if let (Some(src), Some(dst)) = (exit.get(from), entry.get(to)) {
            b.add_edge(src, EdgeKind::Next, dst, Attributes::new())?;
        }
    }

    for cw in &snap.map.crosswalks {
        b.add_node(Node::new(cw.id.clone(), NodeKind::Crosswalk))?;
        let polygon = geometry::ccw(cw.polygon.clone());
        let mut hit: Vec<&str> = targets
            .iter()
            .filter(|t| t.footprint.overlap(&polygon) > OVERLAP_EPS)
            .map(|t| t.id.as_str())
            .collect();
        hit.sort_unstable();
        for id in hit {
            b.add_edge(&cw.id, EdgeKind::On, id, Attributes::new())?;
        }
    }

    if targets.is_empty() {
        return Err(BuildError::NoInfrastructure);
    }
    let ego = &snap.ego;
    let ego_box: Polygon = geometry::oriented_box(ego.position, ego.heading, ego.length, ego.width);
    let root = place_actor(&ego_box, &targets)?.ok_or(BuildError::NoEgoPlacement)?;
    b.add_node(
        Node::new(EGO_ID, NodeKind::Ego)
            .with("velocity", ego.speed)
            .with("dimensions", (ego.length, ego.width)),
    )?;
    b.add_edge(EGO_ID, EdgeKind::On, &root, Attributes::new())?;

    let (sin, cos) = (libm::sin(ego.heading), libm::cos(ego.heading));
    let mut report = PlacementReport {
        scene_id: snap.scene_id.clone(),
        dropped_actors: Vec::new(),
    };
    let mut actors: Vec<&Actor> = snap.actors.iter().collect();
    actors.sort_by(|a, b| a.id.cmp(&b.id));
    for actor in actors {
        let shape = geometry::oriented_box(actor.position, actor.heading, actor.length, actor.width);
        let Some(target) = place_actor(&shape, &targets)? else {
            report.dropped_actors.push(actor.id.clone());
            continue;
        };
        let (dx, dy) = (actor.position.0 - ego.position.0, actor.position.1 - ego.position.1);
        let longitudinal = cos * dx + sin * dy;
        let lateral = -sin * dx + cos * dy;
        b.add_node(
            Node::new(actor.id.clone(), NodeKind::Object)
                .with("object_type", actor.actor_type.as_str())
                .with("distance", (longitudinal, lateral))
                .with("velocity", actor.speed)
                .with("dimensions", (actor.length, actor.width)),
        )?;
        b.add_edge(&actor.id, EdgeKind::On, &target, Attributes::new())?;
    }

    let graph = b.build(snap.scene_id.clone(), snap.timestamp_us)?;
    Ok(BuildOutput { graph, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Direction;

    fn ego_at(x: f64, y: f64, heading: f64) -> EgoState {
        EgoState {
            position: Point(x, y),
            heading,
            speed: 5.0,
            length: 4.5,
            width: 1.9,
        }
    }

    fn straight_lane(id: &str, x0: f64, x1: f64, y: f64) -> LaneGeometry {
        LaneGeometry {
            id: id.into(),
            centerline: vec![Point(x0, y), Point(x1, y)],
            speed_limit: 13.9,
            width: None,
        }
    }

    fn snapshot(roads: Vec<Road>, actors: Vec<Actor>, ego: EgoState) -> WorldSnapshot {
        WorldSnapshot {
            scene_id: "t".into(),
            timestamp_us: 0,
            ego,
            actors,
            map: MapData {
                roads,
                ..MapData::default()
            },
        }
    }

    fn vehicle(id: &str, x: f64, y: f64) -> Actor {
        Actor {
            id: id.into(),
            actor_type: "vehicle".into(),
            position: Point(x, y),
            heading: 0.0,
            speed: 3.0,
            length: 4.5,
            width: 1.9,
        }
    }

    fn road(id: &str, lanes: Vec<LaneGeometry>) -> Road {
        Road {
            id: id.into(),
            lanes,
            boundary_types: Vec::new(),
        }
    }

    #[test]
    fn radius_boundary() {
        let snap = snapshot(
            vec![
                road("a", vec![straight_lane("in", 49.9 - 1.0, 49.9 + 1.0, 0.0)]),
                road("b", vec![straight_lane("out", 50.1 - 1.0, 50.1 + 1.0, 0.0)]),
            ],
            vec![],
            ego_at(0.0, 0.0, 0.0),
        );
        let kept = filter_radius(&snap, 50.0);
        let ids: Vec<&str> = kept.map.roads.iter().map(|r| r.lanes[0].id.as_str()).collect();
        assert_eq!(ids, ["in"]);
    }

    #[test]
    fn radius_keeps_two_of_three_lanes() {
        let lanes = [10.0, 40.0, 80.0];
        let roads = lanes
            .iter()
            .enumerate()
            .map(|(i, d)| road(&format!("r{i}"), vec![straight_lane(&format!("l{i}"), *d - 2.0, *d + 2.0, 0.0)]))
            .collect();
        let snap = snapshot(roads, vec![], ego_at(0.0, 0.0, 0.0));
        // oracle: lane centres sit at the listed distances
        let expected = lanes.iter().filter(|d| **d <= 50.0).count();
        assert_eq!(filter_radius(&snap, 50.0).map.roads.len(), expected);
        assert_eq!(expected, 2);
    }

    #[test]
    fn single_lane_segmentation() {
        let r = road("r", vec![straight_lane("l", 0.0, 25.0, 0.0)]);
        let chains = segment_lanes(&r, 10.0, 3.5).unwrap();
        assert_eq!(chains[0].len(), 3);
        for s in &chains[0] {
            assert!((s.length - 25.0 / 3.0).abs() < 1e-9);
        }
    }

    #[test]
    fn group_count_follows_longest_lane() {
        let r = road(
            "r",
            vec![straight_lane("a", 0.0, 25.0, 0.0), straight_lane("b", 0.0, 18.0, -3.5)],
        );
        let chains = segment_lanes(&r, 10.0, 3.5).unwrap();
        assert_eq!(chains[0].len(), 3);
        assert_eq!(chains[1].len(), 3);
        assert!((chains[1][0].length - 6.0).abs() < 1e-9);
    }

    #[test]
    fn exact_ten_metre_lane_is_one_segment() {
        let r = road("r", vec![straight_lane("l", 0.0, 10.0, 0.0)]);
        let chains = segment_lanes(&r, 10.0, 3.5).unwrap();
        assert_eq!(chains[0].len(), 1);
        assert_eq!(chains[0][0].length, 10.0);
    }

    #[test]
    fn degenerate_lane_is_rejected() {
        let mut lane = straight_lane("l", 0.0, 0.0, 0.0);
        assert_eq!(
            segment_lanes(&road("r", vec![lane.clone()]), 10.0, 3.5),
            Err(BuildError::DegenerateLane("l".into()))
        );
        lane.centerline.truncate(1);
        assert!(segment_lanes(&road("r", vec![lane]), 10.0, 3.5).is_err());
    }

    fn targets_for(chain: &[(&str, f64, f64)]) -> Vec<PlacementTarget> {
        chain
            .iter()
            .map(|(id, x0, x1)| PlacementTarget::new(*id, &[Point(*x0, 0.0), Point(*x1, 0.0)], 3.5))
            .collect()
    }

    #[test]
    fn place_inside_single_segment() {
        let t = targets_for(&[("S3", 0.0, 10.0), ("S4", 10.0, 20.0)]);
        let shape = geometry::oriented_box(Point(5.0, 0.0), 0.0, 4.5, 1.9);
        assert_eq!(place_actor(&shape, &t).unwrap().as_deref(), Some("S3"));
    }

    #[test]
    fn place_straddling_prefers_larger_share() {
        let t = targets_for(&[("S3", 0.0, 10.0), ("S4", 10.0, 20.0)]);
        // 5 m box centred 1 m before the boundary: 3.5 m in S3, 1.5 m in S4
        let shape = geometry::oriented_box(Point(9.0, 0.0), 0.0, 5.0, 1.9);
        let shares: Vec<f64> = t.iter().map(|x| x.footprint.overlap(&shape)).collect();
        assert!((shares[0] / (shares[0] + shares[1]) - 0.7).abs() < 1e-9);
        assert_eq!(place_actor(&shape, &t).unwrap().as_deref(), Some("S3"));
    }

    #[test]
    fn place_tie_goes_to_smallest_id() {
        let t = targets_for(&[("S4", 10.0, 20.0), ("S3", 0.0, 10.0)]);
        let shape = geometry::oriented_box(Point(10.0, 0.0), 0.0, 4.0, 1.0);
        assert_eq!(place_actor(&shape, &t).unwrap().as_deref(), Some("S3"));
    }

    #[test]
    fn place_off_road_is_none() {
        let t = targets_for(&[("S3", 0.0, 10.0)]);
        let shape = geometry::oriented_box(Point(5.0, 30.0), 0.0, 4.5, 1.9);
        assert_eq!(place_actor(&shape, &t).unwrap(), None);
        assert_eq!(place_actor(&shape, &[]), Err(BuildError::NoInfrastructure));
    }

    #[test]
    fn minimal_scene() {
        let snap = snapshot(
            vec![road("r", vec![straight_lane("l", 0.0, 10.0, 0.0)])],
            vec![],
            ego_at(5.0, 0.0, 0.0),
        );
        let out = build_scene(&snap, &BuildConfig::default()).unwrap();
        let g = &out.graph;
        assert_eq!(g.nodes_of_kind(NodeKind::Lane).len(), 1);
        assert_eq!(g.nodes_of_kind(NodeKind::Ego).len(), 1);
        assert_eq!(g.edges().len(), 1);
        assert_eq!(g.root_id(), "l/000");
    }

    #[test]
    fn lead_vehicle_is_ahead_in_chain_order() {
        let snap = snapshot(
            vec![road("r", vec![straight_lane("l", 0.0, 40.0, 0.0)])],
            vec![vehicle("lead", 25.0, 0.0), vehicle("gone", 25.0, 30.0)],
            ego_at(5.0, 0.0, 0.0),
        );
        let out = build_scene(&snap, &BuildConfig::default()).unwrap();
        let g = &out.graph;
        assert_eq!(out.report.dropped_actors, ["gone"]);
        let lead_on = g.neighbors("lead", Direction::Out, Some(EdgeKind::On)).unwrap()[0].1.id.clone();
        // walk Next from the root until the lead's segment shows up
        let mut cur = g.root_id().to_owned();
        let mut hops = 0;
        while cur != lead_on {
            let next = g.neighbors(&cur, Direction::Out, Some(EdgeKind::Next)).unwrap();
            assert_eq!(next.len(), 1, "lead not reachable ahead of root");
            cur = next[0].1.id.clone();
            hops += 1;
        }
        assert_eq!(hops, 2);
        let d = g.get("lead").unwrap().attr("distance").unwrap().as_pair().unwrap();
        assert!((d.0 - 20.0).abs() < 1e-9 && d.1.abs() < 1e-9);
    }

    #[test]
    fn lateral_distance_sign_is_left_positive() {
        let snap = snapshot(
            vec![road(
                "r",
                vec![straight_lane("a", -20.0, 20.0, 3.5), straight_lane("b", -20.0, 20.0, 0.0)],
            )],
            vec![vehicle("left", 0.0, 3.5)],
            ego_at(0.0, 0.0, 0.0),
        );
        let out = build_scene(&snap, &BuildConfig::default()).unwrap();
        let d = out.graph.get("left").unwrap().attr("distance").unwrap().as_pair().unwrap();
        assert!(d.0.abs() < 1e-9 && (d.1 - 3.5).abs() < 1e-9);
    }

    #[test]
    fn markers_connect_adjacent_lanes() {
        let mut r = road(
            "r",
            vec![straight_lane("a", 0.0, 20.0, 3.5), straight_lane("b", 0.0, 20.0, 0.0)],
        );
        r.boundary_types = vec!["solid".into(), "dashed".into(), "solid".into()];
        let snap = snapshot(vec![r], vec![], ego_at(5.0, 0.0, 0.0));
        let g = build_scene(&snap, &BuildConfig::default()).unwrap().graph;
        assert_eq!(g.nodes_of_kind(NodeKind::LaneMarker).len(), 6);
        let shared = g.neighbors("r/b1/000", Direction::In, Some(EdgeKind::ConnectedTo)).unwrap();
        let ids: Vec<&str> = shared.iter().map(|(_, n)| n.id.as_str()).collect();
        assert_eq!(ids, ["a/000", "b/000"]);
        let sides: Vec<&str> = shared
            .iter()
            .map(|(e, _)| e.attrs["side"].as_text().unwrap())
            .collect();
        assert_eq!(sides, ["right", "left"]);
    }

    #[test]
    fn connectors_and_crosswalks_are_wired() {
        let mut snap = snapshot(
            vec![
                road("in", vec![straight_lane("in", -30.0, -8.0, 0.0)]),
                road("out", vec![straight_lane("out", 8.0, 30.0, 0.0)]),
            ],
            vec![],
            ego_at(-20.0, 0.0, 0.0),
        );
        snap.map.connectors.push(ConnectorGeometry {
            id: "c".into(),
            from: "in".into(),
            to: "out".into(),
            turn_type: "straight".into(),
            centerline: vec![Point(-8.0, 0.0), Point(8.0, 0.0)],
            width: None,
        });
        snap.map.crosswalks.push(CrosswalkGeometry {
            id: "cw".into(),
            polygon: vec![Point(-12.0, -4.0), Point(-10.0, -4.0), Point(-10.0, 4.0), Point(-12.0, 4.0)],
        });
        let g = build_scene(&snap, &BuildConfig::default()).unwrap().graph;
        let into = g.neighbors("c", Direction::In, Some(EdgeKind::Next)).unwrap();
        assert_eq!(into[0].1.id, "in/002");
        let from = g.neighbors("c", Direction::Out, Some(EdgeKind::Next)).unwrap();
        assert_eq!(from[0].1.id, "out/000");
        let cw = g.neighbors("cw", Direction::Out, Some(EdgeKind::On)).unwrap();
        assert_eq!(cw.len(), 1);
        assert_eq!(cw[0].1.id, "in/002");
    }

    #[test]
    fn ego_off_road_fails() {
        let snap = snapshot(
            vec![road("r", vec![straight_lane("l", 0.0, 10.0, 0.0)])],
            vec![],
            ego_at(5.0, 20.0, 0.0),
        );
        assert!(matches!(
            build_scene(&snap, &BuildConfig::default()),
            Err(BuildError::NoEgoPlacement)
        ));
        let empty = snapshot(vec![], vec![], ego_at(0.0, 0.0, 0.0));
        assert!(matches!(
            build_scene(&empty, &BuildConfig::default()),
            Err(BuildError::NoInfrastructure)
        ));
    }

    #[test]
    fn unknown_link_reference_is_rejected() {
        let mut snap = snapshot(
            vec![road("r", vec![straight_lane("l", 0.0, 10.0, 0.0)])],
            vec![],
            ego_at(5.0, 0.0, 0.0),
        );
        snap.map.successors.push(Link {
            from: "l".into(),
            to: "ghost".into(),
        });
        assert!(matches!(
            build_scene(&snap, &BuildConfig::default()),
            Err(BuildError::UnknownReference { .. })
        ));
    }

    #[test]
    fn split_road_keeps_boundaries_of_surviving_runs() {
        let mut r = road(
            "r",
            vec![
                straight_lane("a", -5.0, 5.0, 0.0),
                straight_lane("b", -5.0, 5.0, 60.0),
                straight_lane("c", -5.0, 5.0, 3.5),
            ],
        );
        r.boundary_types = vec!["s0".into(), "s1".into(), "s2".into(), "s3".into()];
        let snap = snapshot(vec![r], vec![], ego_at(0.0, 0.0, 0.0));
        let kept = filter_radius(&snap, 50.0);
        assert_eq!(kept.map.roads.len(), 2);
        assert_eq!(kept.map.roads[0].boundary_types, ["s0", "s1"]);
        assert_eq!(kept.map.roads[1].id, "r~2");
        assert_eq!(kept.map.roads[1].boundary_types, ["s2", "s3"]);
    }

    #[test]
    fn build_is_deterministic() {
        let snap = snapshot(
            vec![road("r", vec![straight_lane("l", 0.0, 40.0, 0.0)])],
            vec![vehicle("v2", 25.0, 0.0), vehicle("v1", 15.0, 0.0)],
            ego_at(5.0, 0.0, 0.0),
        );
        let a = build_scene(&snap, &BuildConfig::default()).unwrap().graph;
        let b = build_scene(&snap, &BuildConfig::default()).unwrap().graph;
        assert_eq!(a, b);
    }
}
