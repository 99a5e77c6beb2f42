//! 256-bit evaluation of the object-interaction complexity term.

use astro_float::{BigFloat, Consts, RoundingMode};
use scenekg::metrics::ComplexityParams;
use scenekg::model::{NodeKind, SceneGraph};

const P: usize = 256;
const RM: RoundingMode = RoundingMode::ToEven;

fn big(v: f64) -> BigFloat {
    BigFloat::from_f64(v, P)
}

pub fn reference_c3(v_ego: f64, objects: &[(f64, f64, f64)]) -> BigFloat {
    let mut cc = Consts::new().expect("constants cache");
    let one = big(1.0);
    let half = big(0.5);
    let mut sum = big(0.0);
    for &(x, z, k) in objects {
        let ex = big(x).abs().neg().exp(P, RM, &mut cc);
        let ez = big(z).abs().neg().exp(P, RM, &mut cc);
        let w = half.mul(&ex.add(&ez, P, RM), P, RM);
        let sp = one.add(&big(k).exp(P, RM, &mut cc), P, RM).ln(P, RM, &mut cc);
        sum = sum.add(&w.mul(&sp, P, RM), P, RM);
    }
    big(v_ego).mul(&sum, P, RM)
}

pub fn reference_c3_of(graph: &SceneGraph, params: &ComplexityParams) -> BigFloat {
    let v = graph.ego().attr("velocity").and_then(|v| v.as_num()).unwrap();
    let objects: Vec<(f64, f64, f64)> = graph
        .nodes_of_kind(NodeKind::Object)
        .iter()
        .map(|&i| {
            let n = graph.node(i);
            let (x, z) = n.attr("distance").and_then(|v| v.as_pair()).unwrap();
            let t = n.attr("object_type").and_then(|v| v.as_text()).unwrap();
            let k = params.type_constants.get(t).copied().unwrap_or(params.default_type_constant);
            (x, z, k)
        })
        .collect();
    reference_c3(v, &objects)
}

/// `|value - reference| <= tol * |reference|`, decided in extended precision.
pub fn within_relative(value: f64, reference: &BigFloat, tol: f64) -> bool {
    let diff = big(value).sub(reference, P, RM).abs();
    if reference.is_zero() {
        return diff.is_zero();
    }
    let bound = reference.abs().mul(&big(tol), P, RM);
    diff.cmp(&bound).is_some_and(|o| o <= 0)
}
