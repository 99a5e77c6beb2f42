//! Seeded synthetic scenes with a ground-truth manifest.
//!
//! Each scene comes from a template (straight road, T or four-way
//! intersection, roundabout, crosswalk, parking lot) laid out in a local frame,
//! randomly rotated and translated, and run through [`build_scene`]. Alongside
//! the geometry the generator keeps its own segment-level topology and derives
//! the intended signature from it by breadth-first search, without the pattern
//! matcher or the builder.
//!
//! Layouts keep everything that should survive the radius filter within 45 m
//! of the ego and place actors at segment centres, so that placement by
//! maximum overlap is never ambiguous.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::f64::consts::{PI, TAU};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::builder::{
    build_scene, Actor, BuildConfig, BuildError, ConnectorGeometry, CrosswalkGeometry, EgoState, LaneGeometry, Link,
    MapData, PlacementReport, Road, WorldSnapshot,
};
use crate::catalog::{CatalogConfig, SubsceneSignature, ROUNDABOUT_TURN};
use crate::geometry::{self, Point};
use crate::model::SceneGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Template {
    Straight,
    TIntersection,
    FourWay,
    Roundabout,
    Crosswalk,
    ParkingLot,
}

impl Template {
    pub const ALL: [Template; 6] = [
        Template::Straight,
        Template::TIntersection,
        Template::FourWay,
        Template::Roundabout,
        Template::Crosswalk,
        Template::ParkingLot,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Template::Straight => "straight",
            Template::TIntersection => "t_intersection",
            Template::FourWay => "four_way",
            Template::Roundabout => "roundabout",
            Template::Crosswalk => "crosswalk",
            Template::ParkingLot => "parking_lot",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorSpec {
    pub seed: u64,
    /// Number of scenes when templates are drawn by weight.
    pub scenes: usize,
    pub weights: BTreeMap<Template, f64>,
    /// Exact scene count per template. Overrides `scenes` and `weights`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counts: Option<BTreeMap<Template, usize>>,
    pub max_vehicles: usize,
    pub max_other_actors: usize,
    /// Ego speed range, m/s.
    pub ego_speed: [f64; 2],
    /// Vehicle speed range, m/s.
    pub vehicle_speed: [f64; 2],
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        GeneratorSpec {
            seed: 0,
            scenes: 100,
            weights: Template::ALL.iter().map(|&t| (t, 1.0)).collect(),
            counts: None,
            max_vehicles: 3,
            max_other_actors: 3,
            ego_speed: [0.0, 15.0],
            vehicle_speed: [0.0, 15.0],
        }
    }
}

#[derive(Debug, Error)]
pub enum GeneratorError {
    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),
    #[error("scene `{scene_id}`: {source}")]
    Build {
        scene_id: String,
        #[source]
        source: BuildError,
    },
}

impl GeneratorSpec {
    pub fn validate(&self) -> Result<(), GeneratorError> {
        let bad = |m: String| Err(GeneratorError::InvalidSpec(m));
        for (name, [lo, hi]) in [("ego_speed", self.ego_speed), ("vehicle_speed", self.vehicle_speed)] {
            if !(lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo <= hi) {
                return bad(format!("{name} must be a range [min, max] with 0 <= min <= max"));
            }
        }
        match &self.counts {
            Some(counts) => {
                if counts.values().sum::<usize>() == 0 {
                    return bad("template counts sum to zero".into());
                }
            }
            None => {
                if self.weights.values().any(|w| !w.is_finite() || *w < 0.0) {
                    return bad("weights must be finite and non-negative".into());
                }
                if !(self.weights.values().sum::<f64>() > 0.0) {
                    return bad("weights must have a positive sum".into());
                }
            }
        }
        Ok(())
    }

    /// Template of every scene, in scene order.
    pub fn assignments(&self) -> Result<Vec<Template>, GeneratorError> {
        self.validate()?;
        if let Some(counts) = &self.counts {
            let mut out: Vec<Template> = Template::ALL
                .iter()
                .flat_map(|t| std::iter::repeat_n(*t, counts.get(t).copied().unwrap_or(0)))
                .collect();
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
            rng.set_stream(u64::MAX);
            out.shuffle(&mut rng);
            return Ok(out);
        }
        let weights: Vec<f64> = Template::ALL.iter().map(|t| self.weights.get(t).copied().unwrap_or(0.0)).collect();
        let dist = WeightedIndex::new(&weights).map_err(|e| GeneratorError::InvalidSpec(e.to_string()))?;
        Ok((0..self.scenes)
            .map(|i| Template::ALL[dist.sample(&mut scene_rng(self.seed, i))])
            .collect())
    }
}

fn scene_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub scene_id: String,
    pub template: Template,
    pub signature: String,
    pub dropped_actors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub spec: GeneratorSpec,
    pub catalog: CatalogConfig,
    pub scenes: Vec<ManifestEntry>,
    pub template_counts: BTreeMap<Template, usize>,
    pub signature_counts: BTreeMap<String, usize>,
}

#[derive(Debug, Clone)]
pub struct GeneratedScene {
    pub snapshot: WorldSnapshot,
    pub graph: SceneGraph,
    pub report: PlacementReport,
    pub entry: ManifestEntry,
}

#[derive(Debug, Clone)]
pub struct Generated {
    pub scenes: Vec<GeneratedScene>,
    pub manifest: Manifest,
}

/// Generates the corpus described by `spec`. Planted signatures follow the hop
/// limits and vehicle types of `catalog`.
pub fn generate(spec: &GeneratorSpec, catalog: &CatalogConfig) -> Result<Generated, GeneratorError> {
    let templates = spec.assignments()?;
    let scenes: Vec<GeneratedScene> = templates
        .par_iter()
        .enumerate()
        .map(|(i, &t)| generate_scene(spec, catalog, t, i))
        .collect::<Result<_, _>>()?;
    let mut template_counts = BTreeMap::new();
    let mut signature_counts = BTreeMap::new();
    for s in &scenes {
        *template_counts.entry(s.entry.template).or_insert(0) += 1;
        *signature_counts.entry(s.entry.signature.clone()).or_insert(0) += 1;
    }
    let manifest = Manifest {
        spec: spec.clone(),
        catalog: catalog.clone(),
        scenes: scenes.iter().map(|s| s.entry.clone()).collect(),
        template_counts,
        signature_counts,
    };
    Ok(Generated { scenes, manifest })
}

pub fn scene_id(index: usize) -> String {
    format!("scene_{index:06}")
}

/// One scene of template `template` at position `index` of the corpus.
pub fn generate_scene(
    spec: &GeneratorSpec,
    catalog: &CatalogConfig,
    template: Template,
    index: usize,
) -> Result<GeneratedScene, GeneratorError> {
    let mut rng = scene_rng(spec.seed, index);
    // first draw is the template pick of weighted mode; keep streams aligned
    let _: f64 = rng.random();
    let mut d = Draft::new(rng, spec);
    match template {
        Template::Straight => d.straight(),
        Template::TIntersection => d.intersection(false),
        Template::FourWay => d.intersection(true),
        Template::Roundabout => d.roundabout(),
        Template::Crosswalk => d.crosswalk(),
        Template::ParkingLot => d.parking_lot(),
    }
    d.distant_road();
    let signature = d.topology.signature(catalog);
    let id = scene_id(index);
    let snapshot = d.finish(&id, index as i64 * 500_000);
    let out = build_scene(&snapshot, &BuildConfig::default()).map_err(|source| GeneratorError::Build {
        scene_id: id.clone(),
        source,
    })?;
    Ok(GeneratedScene {
        entry: ManifestEntry {
            scene_id: id,
            template,
            signature: signature.key(),
            dropped_actors: planted_drops(&snapshot),
        },
        snapshot,
        graph: out.graph,
        report: out.report,
    })
}

/// Ids of actors deliberately placed off the road.
fn planted_drops(snapshot: &WorldSnapshot) -> Vec<String> {
    let mut ids: Vec<String> = snapshot
        .actors
        .iter()
        .filter(|a| a.id.starts_with(OFFROAD_PREFIX))
        .map(|a| a.id.clone())
        .collect();
    ids.sort();
    ids
}

const OFFROAD_PREFIX: &str = "x";
const MAX_SEGMENT: f64 = 10.0;
const LANE_WIDTH: f64 = 3.5;
const HALF_LANE: f64 = 1.75;
/// Everything meant to survive the radius filter stays this close to the ego.
const NEAR: f64 = 45.0;
const BOX_HALF: f64 = 8.0;
const RING_RADIUS: f64 = 15.0;
const RING_GAP: f64 = 12.0 * PI / 180.0;

type Slot = (usize, usize);

#[derive(Debug, Clone)]
struct Element {
    turn: Option<String>,
    segments: usize,
    line: Vec<Point>,
}

/// Segment-level road graph of a scene as the generator laid it out.
#[derive(Debug, Clone, Default)]
struct Topology {
    elements: Vec<Element>,
    links: BTreeSet<(usize, usize)>,
    ego: Slot,
    vehicles: BTreeSet<Slot>,
    crossings: BTreeSet<Slot>,
}

impl Topology {
    fn successors(&self, (e, j): Slot) -> Vec<Slot> {
        if j + 1 < self.elements[e].segments {
            return vec![(e, j + 1)];
        }
        self.links.iter().filter(|l| l.0 == e).map(|l| (l.1, 0)).collect()
    }

    fn predecessors(&self, (e, j): Slot) -> Vec<Slot> {
        if j > 0 {
            return vec![(e, j - 1)];
        }
        self.links
            .iter()
            .filter(|l| l.1 == e)
            .map(|l| (l.0, self.elements[l.0].segments - 1))
            .collect()
    }

    /// Slots reachable from the ego slot in at most `limit` steps, with distances.
    fn within(&self, limit: usize, forward: bool) -> BTreeMap<Slot, usize> {
        let mut seen = BTreeMap::from([(self.ego, 0)]);
        let mut queue = VecDeque::from([self.ego]);
        while let Some(s) = queue.pop_front() {
            let dist = seen[&s];
            if dist == limit {
                continue;
            }
            let next = if forward { self.successors(s) } else { self.predecessors(s) };
            for n in next {
                seen.entry(n).or_insert_with(|| {
                    queue.push_back(n);
                    dist + 1
                });
            }
        }
        seen
    }

    fn is_lane(&self, s: Slot) -> bool {
        self.elements[s.0].turn.is_none()
    }

    fn is_ring(&self, s: Slot) -> bool {
        self.elements[s.0].turn.as_deref() == Some(ROUNDABOUT_TURN)
    }

    fn signature(&self, catalog: &CatalogConfig) -> SubsceneSignature {
        let hops = &catalog.hops;
        let root = self.ego;
        let next = self.successors(root);
        let prev = self.predecessors(root);
        let mut names = Vec::new();
        if self.is_lane(root) && next.iter().chain(&prev).any(|&s| self.is_lane(s)) {
            names.push("straight_road");
        }
        if !self.is_lane(root) {
            names.push("on_intersection");
        }
        if self.is_lane(root) && next.iter().any(|&s| self.is_ring(s)) {
            names.push("enter_roundabout");
        }
        if self.is_ring(root) && next.iter().any(|&s| self.is_lane(s)) {
            names.push("leave_roundabout");
        }
        if self.is_ring(root) && next.iter().any(|&s| self.is_ring(s)) {
            names.push("on_roundabout");
        }
        if self.is_lane(root)
            && self
                .within(hops.approach_intersection, true)
                .keys()
                .any(|&s| !self.is_lane(s))
        {
            names.push("approach_intersection");
        }
        if self.within(hops.approach_crossing, true).keys().any(|s| self.crossings.contains(s)) {
            names.push("approach_crossing");
        }
        let counted = catalog.vehicle_types.iter().any(|t| t == VEHICLE);
        if counted && self.within(hops.vehicle_ahead, true).keys().any(|s| self.vehicles.contains(s)) {
            names.push("vehicle_ahead");
        }
        if counted && self.within(hops.vehicle_behind, false).keys().any(|s| self.vehicles.contains(s)) {
            names.push("vehicle_behind");
        }
        SubsceneSignature::new(names)
    }
}

fn pt(x: f64, y: f64) -> Point {
    Point(x, y)
}

fn add(a: Point, b: Point) -> Point {
    Point(a.0 + b.0, a.1 + b.1)
}

fn scale(a: Point, s: f64) -> Point {
    Point(a.0 * s, a.1 * s)
}

fn unit(angle: f64) -> Point {
    Point(libm::cos(angle), libm::sin(angle))
}

fn heading_of(v: Point) -> f64 {
    libm::atan2(v.1, v.0)
}

const VEHICLE: &str = "vehicle";
const OTHER_TYPES: [&str; 5] = ["pedestrian", "bicycle", "traffic_cone", "barrier", "generic_object"];

struct Draft<'a> {
    rng: ChaCha8Rng,
    spec: &'a GeneratorSpec,
    map: MapData,
    topology: Topology,
    ids: BTreeMap<String, usize>,
    ego: Option<EgoState>,
    actors: Vec<Actor>,
    occupied: BTreeSet<Slot>,
    free_spots: Vec<Point>,
    lane_slots: Vec<Slot>,
}

impl<'a> Draft<'a> {
    fn new(rng: ChaCha8Rng, spec: &'a GeneratorSpec) -> Self {
        Draft {
            rng,
            spec,
            map: MapData::default(),
            topology: Topology::default(),
            ids: BTreeMap::new(),
            ego: None,
            actors: Vec::new(),
            occupied: BTreeSet::new(),
            free_spots: Vec::new(),
            lane_slots: Vec::new(),
        }
    }

    fn range(&mut self, lo: f64, hi: f64) -> f64 {
        if lo >= hi {
            lo
        } else {
            self.rng.random_range(lo..hi)
        }
    }

    fn element(&mut self, id: &str, turn: Option<&str>, segments: usize, line: Vec<Point>) -> usize {
        let idx = self.topology.elements.len();
        self.topology.elements.push(Element {
            turn: turn.map(str::to_owned),
            segments,
            line,
        });
        self.ids.insert(id.to_owned(), idx);
        idx
    }

    /// One road of straight, equally long parallel lanes, ordered left to right.
    fn road(&mut self, id: &str, lanes: &[(String, Point, Point)], speed_limit: f64) -> Vec<usize> {
        let longest = lanes.iter().map(|(_, a, b)| a.distance(*b)).fold(0.0, f64::max);
        let k = (longest / MAX_SEGMENT).ceil().max(1.0) as usize;
        let mut boundary_types = vec!["solid".to_owned()];
        boundary_types.extend((1..lanes.len()).map(|_| "dashed".to_owned()));
        boundary_types.push("solid".to_owned());
        self.map.roads.push(Road {
            id: id.to_owned(),
            lanes: lanes
                .iter()
                .map(|(lid, a, b)| LaneGeometry {
                    id: lid.clone(),
                    centerline: vec![*a, *b],
                    speed_limit,
                    width: None,
                })
                .collect(),
            boundary_types,
        });
        lanes
            .iter()
            .map(|(lid, a, b)| {
                let e = self.element(lid, None, k, vec![*a, *b]);
                self.lane_slots.extend((0..k).map(|j| (e, j)));
                e
            })
            .collect()
    }

    fn connector(&mut self, id: &str, from: &str, to: &str, turn: &str, line: Vec<Point>) -> usize {
        self.map.connectors.push(ConnectorGeometry {
            id: id.to_owned(),
            from: from.to_owned(),
            to: to.to_owned(),
            turn_type: turn.to_owned(),
            centerline: line.clone(),
            width: None,
        });
        self.element(id, Some(turn), 1, line)
    }

    fn connect(&mut self, from: &str, to: &str) {
        let (f, t) = (self.ids[from], self.ids[to]);
        self.topology.links.insert((f, t));
    }

    fn successor(&mut self, from: &str, to: &str) {
        self.map.successors.push(Link {
            from: from.to_owned(),
            to: to.to_owned(),
        });
        self.connect(from, to);
    }

    fn add_crosswalk(&mut self, id: &str, polygon: Vec<Point>, touches: &[Slot]) {
        self.map.crosswalks.push(CrosswalkGeometry {
            id: id.to_owned(),
            polygon,
        });
        self.topology.crossings.extend(touches.iter().copied());
    }

    /// Centre and heading of segment `j` of a straight lane.
    fn slot_pose(&self, (e, j): Slot) -> (Point, f64) {
        let el = &self.topology.elements[e];
        let (a, b) = (el.line[0], el.line[1]);
        let t = (j as f64 + 0.5) / el.segments as f64;
        (
            pt(a.0 + (b.0 - a.0) * t, a.1 + (b.1 - a.1) * t),
            heading_of(pt(b.0 - a.0, b.1 - a.1)),
        )
    }

    /// Whether every element and crosswalk centre is within [`NEAR`] of `p`.
    fn ego_fits(&self, p: Point) -> bool {
        self.topology
            .elements
            .iter()
            .all(|e| geometry::polyline_center(&e.line).distance(p) <= NEAR)
            && self
                .map
                .crosswalks
                .iter()
                .all(|c| geometry::centroid(&c.polygon).distance(p) <= NEAR)
    }

    fn ego_speed(&mut self) -> f64 {
        let [lo, hi] = self.spec.ego_speed;
        self.range(lo, hi)
    }

    fn set_ego(&mut self, position: Point, heading: f64, root: Slot, speed: f64) {
        self.ego = Some(EgoState {
            position,
            heading,
            speed,
            length: 4.5,
            width: 1.9,
        });
        self.topology.ego = root;
        self.occupied.insert(root);
    }

    /// Puts the ego at the centre of a random fitting slot, preferring `preferred`.
    fn ego_on_slot(&mut self, preferred: &[Slot]) {
        let fits = |d: &Self, s: &Slot| d.ego_fits(d.slot_pose(*s).0);
        let mut options: Vec<Slot> = preferred.iter().copied().filter(|s| fits(self, s)).collect();
        if options.is_empty() {
            options = self.lane_slots.iter().copied().filter(|s| fits(self, s)).collect();
        }
        let slot = options[self.rng.random_range(0..options.len())];
        let (p, h) = self.slot_pose(slot);
        let lateral = self.range(-0.3, 0.3);
        let p = add(p, scale(unit(h + PI / 2.0), lateral));
        let h = h + self.range(-0.05, 0.05);
        let speed = self.ego_speed();
        self.set_ego(p, h, slot, speed);
    }

    fn ego_position(&self) -> Point {
        self.ego.as_ref().expect("ego placed").position
    }

    fn push_actor(&mut self, id: String, actor_type: &str, position: Point, heading: f64, speed: f64) {
        let (length, width) = match actor_type {
            VEHICLE => (self.range(4.2, 5.0), self.range(1.7, 2.0)),
            "pedestrian" => (0.6, 0.6),
            "bicycle" => (1.8, 0.6),
            "traffic_cone" => (0.4, 0.4),
            "barrier" => (1.5, 0.4),
            _ => (0.8, 0.8),
        };
        self.actors.push(Actor {
            id,
            actor_type: actor_type.to_owned(),
            position,
            heading,
            speed,
            length,
            width,
        });
    }

    fn free_slot(&mut self, candidates: &[Slot]) -> Option<Slot> {
        let ego = self.ego_position();
        let open: Vec<Slot> = candidates
            .iter()
            .copied()
            .filter(|s| !self.occupied.contains(s) && self.slot_pose(*s).0.distance(ego) <= NEAR)
            .collect();
        if open.is_empty() {
            return None;
        }
        let s = open[self.rng.random_range(0..open.len())];
        self.occupied.insert(s);
        Some(s)
    }

    fn actor_on_slot(&mut self, id: String, actor_type: &str, slot: Slot, lateral_jitter: f64, speed: f64) {
        let (p, h) = self.slot_pose(slot);
        let lateral = self.range(-lateral_jitter, lateral_jitter);
        let p = add(p, scale(unit(h + PI / 2.0), lateral));
        let h = h + self.range(-0.05, 0.05);
        self.push_actor(id, actor_type, p, h, speed);
    }

    /// Vehicles on `vehicle_slots`, other road users on lanes, off the road or
    /// beyond the radius.
    fn populate(&mut self, vehicle_slots: &[Slot]) {
        let n_vehicles = self.rng.random_range(0..=self.spec.max_vehicles);
        for i in 0..n_vehicles {
            let Some(slot) = self.free_slot(vehicle_slots) else { break };
            let [lo, hi] = self.spec.vehicle_speed;
            let speed = self.range(lo, hi);
            self.actor_on_slot(format!("v{i:02}"), VEHICLE, slot, 0.2, speed);
            self.topology.vehicles.insert(slot);
        }
        let n_other = self.rng.random_range(0..=self.spec.max_other_actors);
        let lanes = self.lane_slots.clone();
        for i in 0..n_other {
            let ty = OTHER_TYPES[self.rng.random_range(0..OTHER_TYPES.len())];
            let speed = match ty {
                "pedestrian" => self.range(0.0, 2.0),
                "bicycle" => self.range(0.0, 6.0),
                _ => 0.0,
            };
            let roll: f64 = self.rng.random();
            if roll < 0.5 {
                if let Some(slot) = self.free_slot(&lanes) {
                    self.actor_on_slot(format!("o{i:02}"), ty, slot, 0.8, speed);
                }
            } else if roll < 0.85 {
                let ego = self.ego_position();
                let spots: Vec<Point> = self.free_spots.iter().copied().filter(|p| p.distance(ego) <= NEAR - 2.0).collect();
                if spots.is_empty() {
                    continue;
                }
                let base = spots[self.rng.random_range(0..spots.len())];
                let p = add(base, pt(self.range(-1.0, 1.0), self.range(-1.0, 1.0)));
                let h = self.range(0.0, TAU);
                self.push_actor(format!("{OFFROAD_PREFIX}{i:02}"), ty, p, h, speed);
            } else {
                let ego = self.ego_position();
                let p = add(ego, scale(unit(self.range(0.0, TAU)), self.range(60.0, 80.0)));
                let h = self.range(0.0, TAU);
                self.push_actor(format!("f{i:02}"), ty, p, h, speed);
            }
        }
    }

    fn straight(&mut self) {
        let n = self.rng.random_range(1..=3usize);
        let speed = self.range(8.0, 20.0);
        let lane_y = |i: usize| -LANE_WIDTH * i as f64;
        let mut preferred = Vec::new();
        if self.rng.random_bool(0.4) {
            let (l1, l2) = (self.range(20.0, 28.0), self.range(20.0, 28.0));
            let a: Vec<_> = (0..n).map(|i| (format!("rA_l{i}"), pt(-l1, lane_y(i)), pt(0.0, lane_y(i)))).collect();
            let b: Vec<_> = (0..n).map(|i| (format!("rB_l{i}"), pt(0.0, lane_y(i)), pt(l2, lane_y(i)))).collect();
            self.road("rA", &a, speed);
            self.road("rB", &b, speed);
            for i in 0..n {
                self.successor(&format!("rA_l{i}"), &format!("rB_l{i}"));
            }
        } else {
            let l = self.range(30.0, 80.0);
            let a: Vec<_> = (0..n).map(|i| (format!("rA_l{i}"), pt(-l / 2.0, lane_y(i)), pt(l / 2.0, lane_y(i)))).collect();
            self.road("rA", &a, speed);
        }
        preferred.extend(self.lane_slots.iter().copied());
        for x in [-30.0, -20.0, -10.0, 0.0, 10.0, 20.0, 30.0] {
            self.free_spots.push(pt(x, 11.0));
            self.free_spots.push(pt(x, lane_y(n - 1) - 11.0));
        }
        self.ego_on_slot(&preferred);
        let lanes = self.lane_slots.clone();
        self.populate(&lanes);
    }

    fn crosswalk(&mut self) {
        let n = self.rng.random_range(1..=2usize);
        let speed = self.range(8.0, 14.0);
        let l = self.range(40.0, 80.0);
        let lanes: Vec<_> = (0..n)
            .map(|i| {
                let y = -LANE_WIDTH * i as f64;
                (format!("rA_l{i}"), pt(-l / 2.0, y), pt(l / 2.0, y))
            })
            .collect();
        let ids = self.road("rA", &lanes, speed);
        let k = self.topology.elements[ids[0]].segments;
        let jc = self.rng.random_range(1..k);
        let xc = -l / 2.0 + (jc as f64 + 0.5) * l / k as f64;
        let (ymax, ymin) = (HALF_LANE + 0.75, -LANE_WIDTH * (n - 1) as f64 - HALF_LANE - 0.75);
        let touches: Vec<Slot> = ids.iter().map(|&e| (e, jc)).collect();
        self.add_crosswalk(
            "cw0",
            vec![pt(xc - 1.5, ymin), pt(xc + 1.5, ymin), pt(xc + 1.5, ymax), pt(xc - 1.5, ymax)],
            &touches,
        );
        for x in [-30.0, -15.0, 0.0, 15.0, 30.0] {
            self.free_spots.push(pt(x, 11.0));
            self.free_spots.push(pt(x, ymin - 10.0));
        }
        let lane = ids[self.rng.random_range(0..n)];
        let preferred: Vec<Slot> = if self.rng.random_bool(0.7) {
            let back = self.rng.random_range(0..=2usize).min(jc);
            vec![(lane, jc - back)]
        } else {
            self.lane_slots.clone()
        };
        self.ego_on_slot(&preferred);
        if self.rng.random_bool(0.5) {
            let on_crossing: Vec<Slot> = touches.clone();
            if let Some(slot) = self.free_slot(&on_crossing) {
                let speed = self.range(0.5, 1.8);
                self.actor_on_slot("p00".into(), "pedestrian", slot, 0.8, speed);
            }
        }
        let all = self.lane_slots.clone();
        self.populate(&all);
    }

    fn intersection(&mut self, four: bool) {
        let mut arms: Vec<usize> = vec![0, 1, 2, 3];
        if !four {
            let drop = self.rng.random_range(0..4usize);
            arms.remove(drop);
        }
        let speed = self.range(8.0, 14.0);
        let dir = |a: usize| unit(a as f64 * PI / 2.0);
        let normal = |a: usize| unit(a as f64 * PI / 2.0 + PI / 2.0);
        let mut incoming = BTreeMap::new();
        let mut outgoing = BTreeMap::new();
        for &a in &arms {
            let (d, n) = (dir(a), normal(a));
            let len = self.range(20.0, 28.0);
            let far = BOX_HALF + len;
            let in_lane = (
                format!("in{a}"),
                add(scale(d, far), scale(n, HALF_LANE)),
                add(scale(d, BOX_HALF), scale(n, HALF_LANE)),
            );
            let out_lane = (
                format!("out{a}"),
                add(scale(d, BOX_HALF), scale(n, -HALF_LANE)),
                add(scale(d, far), scale(n, -HALF_LANE)),
            );
            incoming.insert(a, self.road(&format!("arm{a}_in"), &[in_lane], speed)[0]);
            outgoing.insert(a, self.road(&format!("arm{a}_out"), &[out_lane], speed)[0]);
        }
        let mut own_connectors: BTreeMap<usize, Vec<(String, usize)>> = BTreeMap::new();
        for &i in &arms {
            for &o in &arms {
                if i == o {
                    continue;
                }
                let (di, ni, dout, nout) = (dir(i), normal(i), dir(o), normal(o));
                let p0 = add(scale(di, BOX_HALF), scale(ni, HALF_LANE));
                let p2 = add(scale(dout, BOX_HALF), scale(nout, -HALF_LANE));
                let entering = scale(di, -1.0);
                let cross = entering.0 * dout.1 - entering.1 * dout.0;
                let turn = if cross > 0.5 {
                    "left"
                } else if cross < -0.5 {
                    "right"
                } else {
                    "straight"
                };
                let line = if turn == "straight" {
                    vec![p0, p2]
                } else {
                    // corner where the entry and exit lines meet
                    let (rx, ry) = (p2.0 - p0.0, p2.1 - p0.1);
                    let (a11, a12, a21, a22) = (entering.0, -dout.0, entering.1, -dout.1);
                    let det = a11 * a22 - a12 * a21;
                    let s = (rx * a22 - a12 * ry) / det;
                    let corner = add(p0, scale(entering, s));
                    bezier(p0, corner, p2, 8)
                };
                let id = format!("c{i}{o}");
                let e = self.connector(&id, &format!("in{i}"), &format!("out{o}"), turn, line);
                self.connect(&format!("in{i}"), &id);
                self.connect(&id, &format!("out{o}"));
                own_connectors.entry(i).or_default().push((id, e));
            }
        }
        for (sx, sy) in [(1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0)] {
            self.free_spots.push(pt(sx * (BOX_HALF + 8.0), sy * (BOX_HALF + 8.0)));
        }
        let in_slots: Vec<Slot> = self
            .lane_slots
            .iter()
            .copied()
            .filter(|s| incoming.values().any(|&e| e == s.0))
            .collect();
        let out_slots: Vec<Slot> = self
            .lane_slots
            .iter()
            .copied()
            .filter(|s| outgoing.values().any(|&e| e == s.0))
            .collect();
        let roll: f64 = self.rng.random();
        let on_connector = roll >= 0.7;
        if !on_connector && self.rng.random_bool(0.3) {
            let a = arms[self.rng.random_range(0..arms.len())];
            let (ein, eout) = (incoming[&a], outgoing[&a]);
            let k = self.topology.elements[ein].segments;
            let j = self.rng.random_range(0..k);
            let (centre, _) = self.slot_pose((ein, j));
            let (d, n) = (dir(a), normal(a));
            let along = centre.0 * d.0 + centre.1 * d.1;
            let reach = LANE_WIDTH + 0.75;
            let corner = |s: f64, t: f64| add(scale(d, along + s), scale(n, t));
            let poly = vec![corner(-1.5, -reach), corner(1.5, -reach), corner(1.5, reach), corner(-1.5, reach)];
            self.add_crosswalk("cw0", poly, &[(ein, j), (eout, k - 1 - j)]);
        }
        if on_connector {
            let i = arms[self.rng.random_range(0..arms.len())];
            let (d, n) = (dir(i), normal(i));
            let depth = self.range(1.2, 1.8);
            let p = add(scale(d, BOX_HALF - depth), scale(n, HALF_LANE));
            // every connector leaving this arm contains the ego box; ties go to the smallest id
            let root = own_connectors[&i].iter().min_by(|a, b| a.0.cmp(&b.0)).expect("arm has connectors").1;
            let speed = self.ego_speed();
            self.set_ego(p, heading_of(scale(d, -1.0)), (root, 0), speed);
            self.populate(&in_slots);
        } else {
            let preferred = if roll < 0.45 { in_slots } else { out_slots };
            self.ego_on_slot(&preferred);
            let lanes = self.lane_slots.clone();
            self.populate(&lanes);
        }
    }

    fn roundabout(&mut self) {
        let m = if self.rng.random_bool(0.5) { 3 } else { 4 };
        let spacing = TAU / m as f64;
        let phis: Vec<f64> = (0..m)
            .map(|a| a as f64 * spacing + self.range(-10.0, 10.0) * PI / 180.0)
            .collect();
        // ring nodes counterclockwise: exit then entry of every arm
        let nodes: Vec<f64> = phis.iter().flat_map(|&p| [p - RING_GAP, p + RING_GAP]).collect();
        let count = nodes.len();
        let speed = self.range(6.0, 11.0);
        let mut arcs = Vec::new();
        for k in 0..count {
            let start = nodes[k];
            let mut end = nodes[(k + 1) % count];
            if end <= start {
                end += TAU;
            }
            let steps = ((end - start) / (3.0 * PI / 180.0)).ceil() as usize;
            let line: Vec<Point> = (0..=steps)
                .map(|s| scale(unit(start + (end - start) * s as f64 / steps as f64), RING_RADIUS))
                .collect();
            let id = format!("ring{k}");
            let prev = format!("ring{}", (k + count - 1) % count);
            let next = format!("ring{}", (k + 1) % count);
            arcs.push((id.clone(), start, end, prev, next, line));
        }
        for (id, _, _, prev, next, line) in &arcs {
            self.connector(id, prev, next, ROUNDABOUT_TURN, line.clone());
        }
        for (id, _, _, prev, next, _) in &arcs {
            self.connect(prev, id);
            self.connect(id, next);
        }
        let mut in_slots = Vec::new();
        let mut out_slots = Vec::new();
        for (a, &phi) in phis.iter().enumerate() {
            let d = unit(phi);
            let len = self.range(16.0, 22.0);
            let entry = scale(unit(phi + RING_GAP), RING_RADIUS);
            let exit = scale(unit(phi - RING_GAP), RING_RADIUS);
            let ein = self.road(&format!("arm{a}_in"), &[(format!("in{a}"), add(entry, scale(d, len)), entry)], speed)[0];
            let eout = self.road(&format!("arm{a}_out"), &[(format!("out{a}"), exit, add(exit, scale(d, len)))], speed)[0];
            self.successor(&format!("in{a}"), &format!("ring{}", 2 * a + 1));
            self.successor(&format!("ring{}", (2 * a + count - 1) % count), &format!("out{a}"));
            let k = self.topology.elements[ein].segments;
            in_slots.extend((0..k).map(|j| (ein, j)));
            out_slots.extend((0..self.topology.elements[eout].segments).map(|j| (eout, j)));
            self.free_spots.push(scale(unit(phi + spacing / 2.0), 32.0));
        }
        self.free_spots.push(pt(0.0, 0.0));
        let roll: f64 = self.rng.random();
        if roll < 0.35 {
            self.ego_on_slot(&in_slots);
        } else if roll < 0.65 {
            self.ego_on_slot(&out_slots);
        } else {
            // middle of an arc from an entry to the next exit
            let a = self.rng.random_range(0..m);
            let (id, start, end, ..) = &arcs[2 * a + 1];
            let mid = (start + end) / 2.0;
            let p = scale(unit(mid), RING_RADIUS + self.range(-0.2, 0.2));
            let root = self.ids[id];
            let speed = self.ego_speed();
            self.set_ego(p, mid + PI / 2.0, (root, 0), speed);
        }
        let lanes = self.lane_slots.clone();
        self.populate(&lanes);
    }

    fn parking_lot(&mut self) {
        let bays = self.rng.random_range(4..=8usize);
        let len = self.range(5.5, 9.5);
        let x0 = -4.0 * (bays as f64 - 1.0) / 2.0;
        let mut slots = Vec::new();
        for row in 0..2 {
            for b in 0..bays {
                let x = x0 + 4.0 * b as f64;
                let (a, z) = if row == 0 {
                    (pt(x, 0.0), pt(x, len))
                } else {
                    (pt(x, 2.0 * len + 6.0), pt(x, len + 6.0))
                };
                let e = self.road(&format!("lot{row}_{b}"), &[(format!("bay{row}_{b}"), a, z)], 2.8)[0];
                slots.push((e, 0));
                if row == 0 {
                    self.free_spots.push(pt(x, len + 3.0));
                }
            }
        }
        let slot = slots[self.rng.random_range(0..slots.len())];
        let (p, h) = self.slot_pose(slot);
        let h = if self.rng.random_bool(0.5) { h } else { h + PI };
        let speed = self.range(0.0, self.spec.ego_speed[1].min(2.0));
        self.set_ego(p, h, slot, speed);
        self.populate(&slots);
    }

    /// Sometimes adds a road well beyond the radius; the builder must drop it.
    fn distant_road(&mut self) {
        if !self.rng.random_bool(0.2) {
            return;
        }
        let ego = self.ego_position();
        let centre = add(ego, scale(unit(self.range(0.0, TAU)), self.range(65.0, 90.0)));
        let d = unit(self.range(0.0, TAU));
        self.map.roads.push(Road {
            id: "far_road".into(),
            lanes: vec![LaneGeometry {
                id: "far_l0".into(),
                centerline: vec![add(centre, scale(d, -10.0)), add(centre, scale(d, 10.0))],
                speed_limit: 13.9,
                width: None,
            }],
            boundary_types: Vec::new(),
        });
    }

    /// Applies a random rigid motion and assembles the snapshot.
    fn finish(&mut self, scene_id: &str, timestamp_us: i64) -> WorldSnapshot {
        let theta = self.range(0.0, TAU);
        let offset = pt(self.range(-500.0, 500.0), self.range(-500.0, 500.0));
        let (s, c) = (libm::sin(theta), libm::cos(theta));
        let tf = |p: Point| pt(c * p.0 - s * p.1 + offset.0, s * p.0 + c * p.1 + offset.1);
        let wrap = |h: f64| (h + theta).rem_euclid(TAU);
        let mut map = std::mem::take(&mut self.map);
        for road in &mut map.roads {
            for lane in &mut road.lanes {
                lane.centerline.iter_mut().for_each(|p| *p = tf(*p));
            }
        }
        for con in &mut map.connectors {
            con.centerline.iter_mut().for_each(|p| *p = tf(*p));
        }
        for cw in &mut map.crosswalks {
            cw.polygon.iter_mut().for_each(|p| *p = tf(*p));
        }
        let mut ego = self.ego.clone().expect("ego placed");
        ego.position = tf(ego.position);
        ego.heading = wrap(ego.heading);
        let mut actors = std::mem::take(&mut self.actors);
        for a in &mut actors {
            a.position = tf(a.position);
            a.heading = wrap(a.heading);
        }
        WorldSnapshot {
            scene_id: scene_id.to_owned(),
            timestamp_us,
            ego,
            actors,
            map,
        }
    }
}

fn bezier(p0: Point, p1: Point, p2: Point, steps: usize) -> Vec<Point> {
    (0..=steps)
        .map(|i| {
            let t = i as f64 / steps as f64;
            let (a, b, c) = ((1.0 - t) * (1.0 - t), 2.0 * (1.0 - t) * t, t * t);
            pt(a * p0.0 + b * p1.0 + c * p2.0, a * p0.1 + b * p1.1 + c * p2.1)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::Catalog;

    fn spec_with(counts: &[(Template, usize)], seed: u64) -> GeneratorSpec {
        GeneratorSpec {
            seed,
            counts: Some(counts.iter().copied().collect()),
            ..GeneratorSpec::default()
        }
    }

    fn check_agreement(spec: &GeneratorSpec) -> Generated {
        let cfg = CatalogConfig::default();
        let cat = Catalog::builtin(&cfg);
        let out = generate(spec, &cfg).unwrap();
        for s in &out.scenes {
            assert_eq!(cat.signature(&s.graph).key(), s.entry.signature, "{}: {:?}", s.entry.scene_id, s.snapshot);
            assert_eq!(s.report.dropped_actors, s.entry.dropped_actors, "{}", s.entry.scene_id);
        }
        out
    }

    #[test]
    fn straight_only_without_actors() {
        let spec = GeneratorSpec {
            seed: 1,
            scenes: 10,
            weights: [(Template::Straight, 1.0)].into_iter().collect(),
            max_vehicles: 0,
            max_other_actors: 0,
            ..GeneratorSpec::default()
        };
        let out = check_agreement(&spec);
        assert_eq!(out.scenes.len(), 10);
        assert!(out.scenes.iter().all(|s| s.entry.signature == "straight_road"));
    }

    #[test]
    fn parking_lot_is_unknown() {
        let out = check_agreement(&spec_with(&[(Template::ParkingLot, 30)], 2));
        assert!(out.scenes.iter().all(|s| s.entry.signature == "Unknown"));
    }

    #[test]
    fn every_template_agrees_with_catalog() {
        let counts: Vec<(Template, usize)> = Template::ALL.iter().map(|&t| (t, 60)).collect();
        let out = check_agreement(&spec_with(&counts, 3));
        assert_eq!(out.manifest.template_counts.values().sum::<usize>(), 360);
    }

    #[test]
    fn deterministic() {
        let spec = spec_with(&[(Template::FourWay, 5), (Template::Roundabout, 5)], 9);
        let a = generate(&spec, &CatalogConfig::default()).unwrap();
        let b = generate(&spec, &CatalogConfig::default()).unwrap();
        let lines = |g: &Generated| g.scenes.iter().map(|s| crate::corpus::to_line(&s.graph)).collect::<Vec<_>>();
        assert_eq!(lines(&a), lines(&b));
        assert_eq!(a.manifest, b.manifest);
    }

    #[test]
    fn invalid_specs() {
        let mut spec = GeneratorSpec::default();
        spec.weights.insert(Template::Straight, -1.0);
        assert!(matches!(spec.validate(), Err(GeneratorError::InvalidSpec(_))));
        let spec = GeneratorSpec {
            weights: BTreeMap::new(),
            ..GeneratorSpec::default()
        };
        assert!(spec.validate().is_err());
        let spec = GeneratorSpec {
            ego_speed: [5.0, 1.0],
            ..GeneratorSpec::default()
        };
        assert!(spec.validate().is_err());
    }
}
