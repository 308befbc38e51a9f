//! Lattice pruning: beam search pruning and the two max-marginal methods.
//!
//! Beam pruning commits to local decisions during a single forward pass, so
//! it can discard the globally best path. Edge pruning keeps an edge only if
//! the best complete path through it clears a threshold interpolated between
//! the best and the mean edge max-marginal; every surviving edge therefore
//! lies on some path scoring at least the threshold, and the best path always
//! survives. Vertex pruning applies the same rule to vertex max-marginals and
//! then keeps edges whose endpoints both survive.

use std::str::FromStr;

use crate::error::{Error, Result};
use crate::inference::max_marginals;
use crate::lattice::{topological_order, trim, Fst, FstBuilder};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PruneMethod {
    Beam,
    Edge,
    Vertex,
}

impl FromStr for PruneMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "beam" => Ok(PruneMethod::Beam),
            "edge" => Ok(PruneMethod::Edge),
            "vertex" => Ok(PruneMethod::Vertex),
            _ => Err(Error::Config(format!("unknown prune method '{s}'"))),
        }
    }
}

impl PruneMethod {
    pub fn name(&self) -> &'static str {
        match self {
            PruneMethod::Beam => "beam",
            PruneMethod::Edge => "edge",
            PruneMethod::Vertex => "vertex",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PruneParams {
    pub method: PruneMethod,
    /// Interpolation between the maximum (1) and the minimum or mean (0)
    /// of the branching or max-marginal scores.
    pub alpha: f64,
}

impl PruneParams {
    pub fn new(method: PruneMethod, alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::Config(format!("alpha {alpha} outside [0, 1]")));
        }
        Ok(PruneParams { method, alpha })
    }
}

/// Result of a pruning pass. An empty output lattice is a legitimate outcome
/// (`fst.is_empty()`), not an error; callers decide how to react.
#[derive(Clone, Debug)]
pub struct PruneOutcome {
    /// The trimmed surviving lattice; weights are untouched.
    pub fst: Fst,
    /// Global max-marginal threshold for edge and vertex pruning; beam
    /// pruning applies a separate threshold at every visited vertex.
    pub threshold: Option<f64>,
    /// Vertices surviving before the final trim.
    pub pre_trim_vertices: usize,
    /// Edges surviving before the final trim.
    pub pre_trim_edges: usize,
}

pub fn prune(fst: &Fst, params: PruneParams) -> Result<PruneOutcome> {
    PruneParams::new(params.method, params.alpha)?;
    match params.method {
        PruneMethod::Beam => beam_prune(fst, params.alpha),
        PruneMethod::Edge => edge_prune(fst, params.alpha),
        PruneMethod::Vertex => vertex_prune(fst, params.alpha),
    }
}

/// Keeps the edge subset `kept` (a boolean per edge) and trims. A vertex
/// failing `marked` loses its initial/final marks: pruning a vertex removes
/// it outright, so it must not linger as a zero-length path.
fn sub_lattice(fst: &Fst, marked: impl Fn(u32) -> bool, kept: impl Fn(u32) -> bool) -> Fst {
    let mut builder = FstBuilder::new(fst.num_frames());
    for v in fst.vertices() {
        builder.add_vertex(v.time);
    }
    for (id, e) in fst.edges().iter().enumerate() {
        if kept(id as u32) {
            builder
                .add_edge(e.tail, e.head, e.label, e.weight)
                .expect("surviving edge stays valid");
        }
    }
    for &v in fst.initial() {
        if marked(v) {
            builder.mark_initial(v).expect("vertex exists");
        }
    }
    for &v in fst.finals() {
        if marked(v) {
            builder.mark_final(v).expect("vertex exists");
        }
    }
    trim(&builder.build())
}

/// Beam pruning: one forward pass in topological order. At each reachable
/// vertex `v` with prefix score `d(v)`, the branching scores `d(v) + w(e)` of
/// its outgoing edges set a local threshold `alpha * max + (1 - alpha) * min`;
/// only strictly better edges survive and extend the beam.
///
/// There is no optimality guarantee: a prefix that looks locally weak is
/// discarded even when it completes into the globally best path. At
/// `alpha = 1` the strict comparison empties every beam.
pub fn beam_prune(fst: &Fst, alpha: f64) -> Result<PruneOutcome> {
    PruneParams::new(PruneMethod::Beam, alpha)?;
    if fst.num_vertices() == 0 {
        return Ok(PruneOutcome {
            fst: Fst::empty(fst.num_frames()),
            threshold: None,
            pre_trim_vertices: 0,
            pre_trim_edges: 0,
        });
    }
    let order = topological_order(fst)?;
    let n = fst.num_vertices();
    let mut in_beam = vec![false; n];
    let mut d = vec![f64::NEG_INFINITY; n];
    for &v in fst.initial() {
        in_beam[v as usize] = true;
        d[v as usize] = 0.0;
    }
    let mut kept = vec![false; fst.num_edges()];
    for &v in &order {
        if !in_beam[v as usize] {
            continue;
        }
        let out = fst.out_edges(v);
        if out.is_empty() {
            continue;
        }
        let base = d[v as usize];
        let mut s_max = f64::NEG_INFINITY;
        let mut s_min = f64::INFINITY;
        for &e in out {
            let s = base + fst.edge(e).weight;
            s_max = s_max.max(s);
            s_min = s_min.min(s);
        }
        let t = alpha * s_max + (1.0 - alpha) * s_min;
        for &e in out {
            let s = base + fst.edge(e).weight;
            if s > t {
                kept[e as usize] = true;
                let head = fst.edge(e).head as usize;
                if s > d[head] {
                    d[head] = s;
                }
                in_beam[head] = true;
            }
        }
    }
    let pre_trim_edges = kept.iter().filter(|&&k| k).count();
    Ok(PruneOutcome {
        fst: sub_lattice(fst, |_| true, |e| kept[e as usize]),
        threshold: None,
        pre_trim_vertices: n,
        pre_trim_edges,
    })
}

fn marginal_threshold(alpha: f64, gammas: &[f64]) -> f64 {
    let max = gammas.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = gammas.iter().sum::<f64>() / gammas.len() as f64;
    alpha * max + (1.0 - alpha) * mean
}

/// Slack for the keep-comparison against the threshold. Max-marginals of
/// edges on one path are the same sum grouped differently (prefix + weight
/// + suffix), so values that are equal by construction can differ by a few
/// ulps. Comparing bitwise would let rounding order decide whether the best
/// path's own edges survive at `alpha = 1`; the slack is far below any
/// meaningful score separation.
fn keep_tolerance(threshold: f64) -> f64 {
    1e-9 * threshold.abs().max(1.0)
}

/// Edge pruning: keeps edges whose max-marginal reaches
/// `alpha * max + (1 - alpha) * mean` over all edge max-marginals.
/// Ties at the threshold are kept, within a relative slack absorbing
/// summation-order rounding. The input is trimmed first so that every
/// max-marginal is defined.
pub fn edge_prune(fst: &Fst, alpha: f64) -> Result<PruneOutcome> {
    PruneParams::new(PruneMethod::Edge, alpha)?;
    let fst = trim(fst);
    if fst.is_empty() {
        return Ok(PruneOutcome {
            fst: Fst::empty(fst.num_frames()),
            threshold: None,
            pre_trim_vertices: 0,
            pre_trim_edges: 0,
        });
    }
    let mm = max_marginals(&fst)?;
    let t = marginal_threshold(alpha, &mm.edge);
    let cut = t - keep_tolerance(t);
    let kept: Vec<bool> = mm.edge.iter().map(|&g| g >= cut).collect();
    let pre_trim_edges = kept.iter().filter(|&&k| k).count();
    Ok(PruneOutcome {
        fst: sub_lattice(&fst, |_| true, |e| kept[e as usize]),
        threshold: Some(t),
        pre_trim_vertices: fst.num_vertices(),
        pre_trim_edges,
    })
}

/// Vertex pruning: keeps vertices whose max-marginal reaches
/// `alpha * max + (1 - alpha) * mean` over all vertex max-marginals, then
/// keeps edges with both endpoints surviving. Ties at the threshold are
/// kept, within the same rounding slack as edge pruning. A pruned vertex is
/// removed entirely — a below-threshold vertex marked both initial and final
/// does not survive as a zero-length path.
pub fn vertex_prune(fst: &Fst, alpha: f64) -> Result<PruneOutcome> {
    PruneParams::new(PruneMethod::Vertex, alpha)?;
    let fst = trim(fst);
    if fst.is_empty() {
        return Ok(PruneOutcome {
            fst: Fst::empty(fst.num_frames()),
            threshold: None,
            pre_trim_vertices: 0,
            pre_trim_edges: 0,
        });
    }
    let mm = max_marginals(&fst)?;
    let t = marginal_threshold(alpha, &mm.vertex);
    let cut = t - keep_tolerance(t);
    let kept_vertex: Vec<bool> = mm.vertex.iter().map(|&g| g >= cut).collect();
    let kept = |e: u32| {
        let edge = fst.edge(e);
        kept_vertex[edge.tail as usize] && kept_vertex[edge.head as usize]
    };
    let pre_trim_vertices = kept_vertex.iter().filter(|&&k| k).count();
    let pre_trim_edges = (0..fst.num_edges() as u32).filter(|&e| kept(e)).count();
    Ok(PruneOutcome {
        fst: sub_lattice(&fst, |v| kept_vertex[v as usize], kept),
        threshold: Some(t),
        pre_trim_vertices,
        pre_trim_edges,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::best_path;
    use crate::lattice::{build_hypothesis_space, Segment};

    fn two_frame_example() -> Fst {
        let fst = build_hypothesis_space(2, 2, 2).unwrap();
        let weights: Vec<f64> = (0..fst.num_edges() as u32)
            .map(|id| {
                let s = fst.segment(id);
                match (s.start, s.end, s.label) {
                    (0, 1, 0) => 1.0,
                    (0, 1, 1) => 0.0,
                    (1, 2, 0) => 2.0,
                    (1, 2, 1) => 3.0,
                    (0, 2, 0) => 2.5,
                    (0, 2, 1) => 1.0,
                    _ => unreachable!(),
                }
            })
            .collect();
        fst.with_weights(&weights).unwrap()
    }

    fn segment_set(fst: &Fst) -> Vec<(u32, u32, u32)> {
        let mut set: Vec<(u32, u32, u32)> = (0..fst.num_edges() as u32)
            .map(|e| {
                let s = fst.segment(e);
                (s.start, s.end, s.label)
            })
            .collect();
        set.sort_unstable();
        set
    }

    #[test]
    fn beam_at_half_loses_the_best_path() {
        let fst = two_frame_example();
        let (_, best) = best_path(&fst).unwrap();
        assert_eq!(best, 4.0);
        // At the start vertex the branching scores are {1, 0, 2.5, 1}, so the
        // threshold is 0.5 * 2.5 + 0.5 * 0 = 1.25 and only (0,2,a) survives.
        let out = beam_prune(&fst, 0.5).unwrap();
        assert_eq!(segment_set(&out.fst), vec![(0, 2, 0)]);
        let (path, score) = best_path(&out.fst).unwrap();
        assert_eq!(score, 2.5);
        assert_eq!(path.segments(), &[Segment::new(0, 2, 0)]);
    }

    #[test]
    fn beam_at_one_fifth_keeps_four_edges() {
        let fst = two_frame_example();
        let out = beam_prune(&fst, 0.2).unwrap();
        assert_eq!(
            segment_set(&out.fst),
            vec![(0, 1, 0), (0, 2, 0), (0, 2, 1), (1, 2, 1)]
        );
        let (_, score) = best_path(&out.fst).unwrap();
        assert_eq!(score, 4.0);
    }

    #[test]
    fn beam_with_equal_branches_can_empty_the_lattice() {
        // All branching scores equal: the strict comparison keeps nothing.
        let fst = build_hypothesis_space(2, 2, 1).unwrap();
        let out = beam_prune(&fst, 0.0).unwrap();
        assert!(out.fst.is_empty());
        assert_eq!(out.pre_trim_edges, 0);
    }

    #[test]
    fn edge_prune_at_one_keeps_only_best_path_edges() {
        let fst = two_frame_example();
        let out = edge_prune(&fst, 1.0).unwrap();
        assert_eq!(out.threshold, Some(4.0));
        assert_eq!(segment_set(&out.fst), vec![(0, 1, 0), (1, 2, 1)]);
    }

    #[test]
    fn edge_prune_at_zero_uses_the_mean() {
        let fst = two_frame_example();
        let out = edge_prune(&fst, 0.0).unwrap();
        let expected_t = 17.5 / 6.0;
        assert!((out.threshold.unwrap() - expected_t).abs() < 1e-12);
        assert_eq!(
            segment_set(&out.fst),
            vec![(0, 1, 0), (0, 1, 1), (1, 2, 0), (1, 2, 1)]
        );
    }

    #[test]
    fn vertex_prune_keeps_everything_when_marginals_tie() {
        // All three vertex max-marginals are 4, so any alpha keeps all.
        let fst = two_frame_example();
        for alpha in [0.0, 0.5, 1.0] {
            let out = vertex_prune(&fst, alpha).unwrap();
            assert_eq!(out.fst.num_edges(), 6, "alpha {alpha}");
            assert_eq!(out.threshold, Some(4.0));
        }
    }

    #[test]
    fn vertex_prune_drops_a_detour_and_its_incident_edges() {
        use crate::lattice::FstBuilder;
        let mut b = FstBuilder::new(2);
        let v0 = b.add_vertex(0);
        let good = b.add_vertex(1);
        let detour = b.add_vertex(1);
        let v2 = b.add_vertex(2);
        b.add_edge(v0, good, 0, 5.0).unwrap();
        b.add_edge(good, v2, 0, 5.0).unwrap();
        b.add_edge(v0, detour, 1, 1.0).unwrap();
        b.add_edge(detour, v2, 1, 1.0).unwrap();
        b.mark_initial(v0).unwrap();
        b.mark_final(v2).unwrap();
        let fst = b.build();
        let out = vertex_prune(&fst, 1.0).unwrap();
        // Max-marginals: 10 for the vertices on the good path, 2 for the
        // detour; at alpha = 1 only the good path's vertices survive, and
        // pruning the detour removes exactly its two incident edges.
        assert_eq!(out.pre_trim_vertices, 3);
        assert_eq!(out.pre_trim_edges, fst.num_edges() - 2);
        assert_eq!(out.fst.num_edges(), 2);
        let (_, score) = best_path(&out.fst).unwrap();
        assert_eq!(score, 10.0);
    }

    #[test]
    fn vertex_prune_takes_a_pruned_vertexs_marks_with_it() {
        // The middle vertex is marked both initial and final, so it anchors a
        // zero-length path. Its max-marginal (0) falls below the threshold,
        // and pruning it must remove the marks too — not leave the vertex
        // behind as an empty path.
        let mut b = FstBuilder::new(2);
        let v0 = b.add_vertex(0);
        let mid = b.add_vertex(1);
        let v2 = b.add_vertex(2);
        b.add_edge(v0, v2, 0, 10.0).unwrap();
        b.add_edge(v0, mid, 0, 0.0).unwrap();
        b.add_edge(mid, v2, 0, 0.0).unwrap();
        b.mark_initial(v0).unwrap();
        b.mark_final(v2).unwrap();
        b.mark_initial(mid).unwrap();
        b.mark_final(mid).unwrap();
        let fst = b.build();
        // Vertex max-marginals are [10, 0, 10]: t = 0.5 * 10 + 0.5 * 20/3.
        let out = vertex_prune(&fst, 0.5).unwrap();
        assert_eq!(out.pre_trim_vertices, 2);
        assert_eq!(out.fst.num_vertices(), 2);
        assert_eq!(out.fst.num_edges(), 1);
        assert!(out.fst.vertices().iter().all(|v| v.time != 1));
    }

    #[test]
    fn pruning_rejects_alpha_outside_unit_interval() {
        let fst = two_frame_example();
        assert!(edge_prune(&fst, -0.1).is_err());
        assert!(beam_prune(&fst, 1.5).is_err());
        assert!(vertex_prune(&fst, f64::NAN).is_err());
    }

    #[test]
    fn pruning_an_empty_lattice_yields_an_empty_lattice() {
        let empty = Fst::empty(4);
        for method in [PruneMethod::Beam, PruneMethod::Edge, PruneMethod::Vertex] {
            let out = prune(&empty, PruneParams { method, alpha: 0.5 }).unwrap();
            assert!(out.fst.is_empty());
        }
    }

    #[test]
    fn weights_survive_pruning_untouched() {
        let fst = two_frame_example();
        let out = edge_prune(&fst, 0.0).unwrap();
        for e in 0..out.fst.num_edges() as u32 {
            let seg = out.fst.segment(e);
            let w = out.fst.edge(e).weight;
            let expected = match (seg.start, seg.end, seg.label) {
                (0, 1, 0) => 1.0,
                (0, 1, 1) => 0.0,
                (1, 2, 0) => 2.0,
                (1, 2, 1) => 3.0,
                _ => panic!("unexpected survivor {seg:?}"),
            };
            assert_eq!(w, expected);
        }
    }
}
