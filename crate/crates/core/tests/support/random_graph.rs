//! Small random schema-valid scene graphs.

use rand::RngExt;
use rand_chacha::ChaCha8Rng;
use scenekg::model::{Attributes, EdgeKind, Node, NodeKind, SceneGraph, SceneGraphBuilder};

fn pick<'a>(rng: &mut ChaCha8Rng, items: &[&'a str]) -> &'a str {
    items[rng.random_range(0..items.len())]
}

/// A graph with at most `max_nodes` nodes (at least 2): one ego, some lanes
/// and connectors with random `Next` wiring, and optional markers, crosswalks
/// and objects.
pub fn random_graph(rng: &mut ChaCha8Rng, max_nodes: usize, scene_id: &str) -> SceneGraph {
    let mut b = SceneGraphBuilder::new();
    let budget = max_nodes.max(2) - 1;
    let drivable = rng.random_range(1..=budget.min(7));
    let mut left = budget - drivable;
    let mut take = |rng: &mut ChaCha8Rng, most: usize| {
        let n = rng.random_range(0..=most.min(left));
        left -= n;
        n
    };
    let objects = take(rng, 3);
    let markers = take(rng, 1);
    let crosswalks = take(rng, 1);

    let mut drive_ids = Vec::new();
    for i in 0..drivable {
        let node = if rng.random_bool(0.6) {
            let id = format!("L{i}");
            Node::new(&id, NodeKind::Lane)
                .with("speed_limit", [8.0, 13.9, 22.2][rng.random_range(0..3)])
                .with("length", rng.random_range(0.5..=10.0))
        } else {
            let id = format!("C{i}");
            Node::new(&id, NodeKind::Connector)
                .with("turn_type", pick(rng, &["left", "right", "straight", "roundabout", "roundabout"]))
                .with("length", rng.random_range(1.0..30.0))
        };
        drive_ids.push(node.id.clone());
        b.add_node(node).unwrap();
    }
    let p_next = rng.random_range(0.15..0.6);
    for a in &drive_ids {
        for c in &drive_ids {
            if a != c && rng.random_bool(p_next) {
                b.add_edge(a, EdgeKind::Next, c, Attributes::new()).unwrap();
            }
        }
    }
    for m in 0..markers {
        let id = format!("M{m}");
        b.add_node(Node::new(&id, NodeKind::LaneMarker).with("boundary_type", pick(rng, &["solid", "dashed"])))
            .unwrap();
        for d in &drive_ids {
            if rng.random_bool(0.4) {
                let mut attrs = Attributes::new();
                attrs.insert("side".into(), pick(rng, &["left", "right"]).into());
                b.add_edge(d, EdgeKind::ConnectedTo, &id, attrs).unwrap();
            }
        }
    }
    for c in 0..crosswalks {
        let id = format!("X{c}");
        b.add_node(Node::new(&id, NodeKind::Crosswalk)).unwrap();
        for d in &drive_ids {
            if rng.random_bool(0.3) {
                b.add_edge(&id, EdgeKind::On, d, Attributes::new()).unwrap();
            }
        }
    }
    for o in 0..objects {
        let id = format!("O{o}");
        b.add_node(
            Node::new(&id, NodeKind::Object)
                .with("object_type", pick(rng, &["vehicle", "vehicle", "pedestrian", "traffic_cone"]))
                .with("distance", (rng.random_range(-40.0..40.0), rng.random_range(-10.0..10.0)))
                .with("velocity", rng.random_range(0.0..15.0))
                .with("dimensions", (4.5, 1.9)),
        )
        .unwrap();
        if rng.random_bool(0.9) {
            let d = &drive_ids[rng.random_range(0..drive_ids.len())];
            b.add_edge(&id, EdgeKind::On, d, Attributes::new()).unwrap();
        }
    }
    b.add_node(
        Node::new("ego", NodeKind::Ego)
            .with("velocity", rng.random_range(0.0..20.0))
            .with("dimensions", (4.5, 1.9)),
    )
    .unwrap();
    let root = &drive_ids[rng.random_range(0..drive_ids.len())];
    b.add_edge("ego", EdgeKind::On, root, Attributes::new()).unwrap();
    b.build(scene_id, 0).unwrap()
}
