//! Exact decoding, max-marginals, and evaluation metrics.
//!
//! All lattice sweeps run in topological order over the max-plus semiring,
//! so decoding and max-marginal computation are exact on any acyclic input.

use crate::error::{Error, Result};
use crate::lattice::{topological_order, Fst, Label, SegmentPath};

/// Highest-scoring complete path and its score.
///
/// Ties are broken deterministically: among equal-scoring alternatives the
/// edge relaxed first wins, which selects the in-edge with the earliest
/// (topological tail position, edge id) pair at every vertex, and the
/// lowest-id final vertex.
pub fn best_path(fst: &Fst) -> Result<(SegmentPath, f64)> {
    let (ids, score) = best_path_edges(fst)?;
    Ok((fst.path(&ids)?, score))
}

/// [`best_path`] returning edge ids instead of segments.
pub fn best_path_edges(fst: &Fst) -> Result<(Vec<u32>, f64)> {
    if fst.initial().is_empty() || fst.finals().is_empty() {
        return Err(Error::NoPath);
    }
    let order = topological_order(fst)?;
    let n = fst.num_vertices();
    let mut score = vec![f64::NEG_INFINITY; n];
    let mut back: Vec<Option<u32>> = vec![None; n];
    for &v in fst.initial() {
        score[v as usize] = 0.0;
    }
    for &v in &order {
        let d = score[v as usize];
        if d == f64::NEG_INFINITY {
            continue;
        }
        for &e in fst.out_edges(v) {
            let edge = fst.edge(e);
            let candidate = d + edge.weight;
            if candidate > score[edge.head as usize] {
                score[edge.head as usize] = candidate;
                back[edge.head as usize] = Some(e);
            }
        }
    }
    let mut best: Option<u32> = None;
    for &v in fst.finals() {
        if score[v as usize] > best.map_or(f64::NEG_INFINITY, |b| score[b as usize]) {
            best = Some(v);
        }
    }
    let Some(mut at) = best else { return Err(Error::NoPath) };
    if score[at as usize] == f64::NEG_INFINITY {
        return Err(Error::NoPath);
    }
    let total = score[at as usize];
    // A back pointer of None marks where the path starts: initial vertices
    // keep their base score 0 unless an in-edge strictly improves on it.
    let mut ids = Vec::new();
    while let Some(e) = back[at as usize] {
        ids.push(e);
        at = fst.edge(e).tail;
    }
    ids.reverse();
    Ok((ids, total))
}

/// Max-marginals of every edge and vertex, plus the best complete score.
#[derive(Clone, Debug)]
pub struct MaxMarginals {
    /// For edge `e`: the score of the best complete path using `e`.
    pub edge: Vec<f64>,
    /// For vertex `v`: the score of the best complete path through `v`.
    pub vertex: Vec<f64>,
    /// Score of the best complete path.
    pub best: f64,
}

/// Computes max-marginals with one forward and one backward sweep.
///
/// The input must be trimmed: an edge or vertex on no complete path has no
/// max-marginal and is reported as an error.
pub fn max_marginals(fst: &Fst) -> Result<MaxMarginals> {
    if fst.num_vertices() == 0 {
        return Err(Error::NoPath);
    }
    let order = topological_order(fst)?;
    let n = fst.num_vertices();
    let mut forward = vec![f64::NEG_INFINITY; n];
    let mut backward = vec![f64::NEG_INFINITY; n];
    for &v in fst.initial() {
        forward[v as usize] = 0.0;
    }
    for &v in &order {
        let d = forward[v as usize];
        if d == f64::NEG_INFINITY {
            continue;
        }
        for &e in fst.out_edges(v) {
            let edge = fst.edge(e);
            let c = d + edge.weight;
            if c > forward[edge.head as usize] {
                forward[edge.head as usize] = c;
            }
        }
    }
    for &v in fst.finals() {
        backward[v as usize] = 0.0;
    }
    for &v in order.iter().rev() {
        let d = backward[v as usize];
        if d == f64::NEG_INFINITY {
            continue;
        }
        for &e in fst.in_edges(v) {
            let edge = fst.edge(e);
            let c = edge.weight + d;
            if c > backward[edge.tail as usize] {
                backward[edge.tail as usize] = c;
            }
        }
    }
    let vertex: Vec<f64> = (0..n).map(|v| forward[v] + backward[v]).collect();
    if let Some(v) = vertex.iter().position(|g| !g.is_finite()) {
        return Err(Error::InvalidFst(format!(
            "vertex {v} lies on no complete path; trim the lattice first"
        )));
    }
    let edge: Vec<f64> = fst
        .edges()
        .iter()
        .map(|e| forward[e.tail as usize] + e.weight + backward[e.head as usize])
        .collect();
    let best = fst
        .finals()
        .iter()
        .map(|&v| forward[v as usize])
        .fold(f64::NEG_INFINITY, f64::max);
    if best == f64::NEG_INFINITY {
        return Err(Error::NoPath);
    }
    Ok(MaxMarginals { edge, vertex, best })
}

/// Counts of the cheapest edit script turning `reference` into `hypothesis`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EditCounts {
    pub substitutions: usize,
    /// Hypothesis tokens with no reference counterpart.
    pub insertions: usize,
    /// Reference tokens missing from the hypothesis.
    pub deletions: usize,
}

impl EditCounts {
    pub fn distance(&self) -> usize {
        self.substitutions + self.insertions + self.deletions
    }
}

/// Levenshtein distance between label sequences with unit costs, plus an
/// operation breakdown. Ties between scripts prefer substitutions, then
/// deletions, then insertions; the total is the standard minimum regardless.
pub fn edit_distance(hypothesis: &[Label], reference: &[Label]) -> EditCounts {
    let (n, m) = (reference.len(), hypothesis.len());
    let mut dist = vec![0usize; (n + 1) * (m + 1)];
    let idx = |i: usize, j: usize| i * (m + 1) + j;
    for i in 0..=n {
        dist[idx(i, 0)] = i;
    }
    for j in 0..=m {
        dist[idx(0, j)] = j;
    }
    for i in 1..=n {
        for j in 1..=m {
            let sub = dist[idx(i - 1, j - 1)] + usize::from(reference[i - 1] != hypothesis[j - 1]);
            let del = dist[idx(i - 1, j)] + 1;
            let ins = dist[idx(i, j - 1)] + 1;
            dist[idx(i, j)] = sub.min(del).min(ins);
        }
    }
    let mut counts = EditCounts::default();
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let here = dist[idx(i, j)];
        if i > 0 && j > 0 && here == dist[idx(i - 1, j - 1)] + usize::from(reference[i - 1] != hypothesis[j - 1]) {
            if reference[i - 1] != hypothesis[j - 1] {
                counts.substitutions += 1;
            }
            i -= 1;
            j -= 1;
        } else if i > 0 && here == dist[idx(i - 1, j)] + 1 {
            counts.deletions += 1;
            i -= 1;
        } else {
            counts.insertions += 1;
            j -= 1;
        }
    }
    debug_assert_eq!(counts.distance(), dist[idx(n, m)]);
    counts
}

/// Phone error rate: edit distance divided by reference length.
/// Errors on an empty reference.
pub fn phone_error_rate(hypothesis: &[Label], reference: &[Label]) -> Result<f64> {
    if reference.is_empty() {
        return Err(Error::InvalidInput("empty reference transcription".into()));
    }
    Ok(edit_distance(hypothesis, reference).distance() as f64 / reference.len() as f64)
}

/// The lattice path closest to the reference in edit distance.
#[derive(Clone, Debug)]
pub struct OracleResult {
    pub distance: usize,
    /// `distance / reference length`.
    pub error_rate: f64,
    /// A path attaining the distance.
    pub path: SegmentPath,
}

/// Minimum edit distance between `reference` and any complete lattice path,
/// by dynamic programming over (vertex, reference-position) states. The
/// returned witness path is deterministic across runs.
pub fn oracle_error_rate(fst: &Fst, reference: &[Label]) -> Result<OracleResult> {
    if reference.is_empty() {
        return Err(Error::InvalidInput("empty reference transcription".into()));
    }
    if fst.initial().is_empty() || fst.finals().is_empty() {
        return Err(Error::NoPath);
    }
    let order = topological_order(fst)?;
    let n = fst.num_vertices();
    let m = reference.len();
    let width = m + 1;
    let idx = |v: u32, j: usize| v as usize * width + j;
    // Transition into a state: which edge was consumed, and the prior state.
    #[derive(Clone, Copy)]
    enum Step {
        Start,
        Unreached,
        Delete,
        Edge { edge: u32, from_j: usize },
    }
    let mut dist = vec![usize::MAX; n * width];
    let mut step = vec![Step::Unreached; n * width];
    for &v in fst.initial() {
        dist[idx(v, 0)] = 0;
        step[idx(v, 0)] = Step::Start;
    }
    for &v in &order {
        // Skipping a reference token (deletion) stays at the same vertex.
        for j in 1..=m {
            let prev = dist[idx(v, j - 1)];
            if prev != usize::MAX && prev + 1 < dist[idx(v, j)] {
                dist[idx(v, j)] = prev + 1;
                step[idx(v, j)] = Step::Delete;
            }
        }
        for j in 0..=m {
            let here = dist[idx(v, j)];
            if here == usize::MAX {
                continue;
            }
            for &e in fst.out_edges(v) {
                let edge = fst.edge(e);
                // Consuming the edge with no reference token is an insertion.
                let ins = here + 1;
                if ins < dist[idx(edge.head, j)] {
                    dist[idx(edge.head, j)] = ins;
                    step[idx(edge.head, j)] = Step::Edge { edge: e, from_j: j };
                }
                if j < m {
                    let sub = here + usize::from(edge.label != reference[j]);
                    if sub < dist[idx(edge.head, j + 1)] {
                        dist[idx(edge.head, j + 1)] = sub;
                        step[idx(edge.head, j + 1)] = Step::Edge { edge: e, from_j: j };
                    }
                }
            }
        }
    }
    let mut best: Option<(usize, u32)> = None;
    for &v in fst.finals() {
        let d = dist[idx(v, m)];
        if d != usize::MAX && best.map_or(true, |(bd, _)| d < bd) {
            best = Some((d, v));
        }
    }
    let Some((distance, mut v)) = best else { return Err(Error::NoPath) };
    let mut j = m;
    let mut edges = Vec::new();
    loop {
        match step[idx(v, j)] {
            Step::Start => break,
            Step::Unreached => unreachable!("backtrace through unreached state"),
            Step::Delete => j -= 1,
            Step::Edge { edge, from_j } => {
                edges.push(edge);
                v = fst.edge(edge).tail;
                j = from_j;
            }
        }
    }
    edges.reverse();
    Ok(OracleResult {
        distance,
        error_rate: distance as f64 / m as f64,
        path: fst.path(&edges)?,
    })
}

/// Lattice density: edges per reference label.
pub fn density(fst: &Fst, reference_len: usize) -> Result<f64> {
    if reference_len == 0 {
        return Err(Error::InvalidInput("empty reference transcription".into()));
    }
    Ok(fst.num_edges() as f64 / reference_len as f64)
}

/// Frame rate assumed when converting frame counts to audio time:
/// 10 ms frames, the usual acoustic front-end hop.
pub const FRAMES_PER_SECOND: f64 = 100.0;

/// Audio duration of `num_frames` frames at [`FRAMES_PER_SECOND`].
pub fn audio_seconds(num_frames: usize) -> f64 {
    num_frames as f64 / FRAMES_PER_SECOND
}

/// Real-time factor: processing time over audio time.
pub fn real_time_factor(processing_seconds: f64, audio_seconds: f64) -> Result<f64> {
    if !(audio_seconds > 0.0) {
        return Err(Error::InvalidInput("audio duration must be positive".into()));
    }
    if !processing_seconds.is_finite() || processing_seconds < 0.0 {
        return Err(Error::InvalidInput("processing time must be nonnegative".into()));
    }
    Ok(processing_seconds / audio_seconds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_hypothesis_space, FstBuilder, Segment};

    /// The worked two-frame example used throughout the crate: labels {a, b},
    /// max duration 2, with hand-picked weights.
    pub(crate) fn two_frame_example() -> Fst {
        let fst = build_hypothesis_space(2, 2, 2).unwrap();
        let weights: Vec<f64> = fst
            .edges()
            .iter()
            .enumerate()
            .map(|(id, _)| {
                let seg = fst.segment(id as u32);
                match (seg.start, seg.end, seg.label) {
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

    #[test]
    fn decodes_the_two_frame_example() {
        let fst = two_frame_example();
        let (path, score) = best_path(&fst).unwrap();
        assert_eq!(score, 4.0);
        assert_eq!(
            path.segments(),
            &[Segment::new(0, 1, 0), Segment::new(1, 2, 1)]
        );
    }

    #[test]
    fn all_zero_weights_decode_to_the_deterministic_tie_break() {
        let fst = build_hypothesis_space(2, 2, 2).unwrap();
        let (path, score) = best_path(&fst).unwrap();
        assert_eq!(score, 0.0);
        // Edges are generated by ascending end time, then start time, then
        // label; the duration-2 edge (0,2,a) is relaxed into the final vertex
        // before any path through the middle vertex.
        assert_eq!(path.segments(), &[Segment::new(0, 2, 0)]);
    }

    #[test]
    fn empty_lattice_has_no_path() {
        assert!(matches!(best_path(&Fst::empty(3)), Err(Error::NoPath)));
    }

    #[test]
    fn max_marginals_match_the_two_frame_example() {
        let fst = two_frame_example();
        let mm = max_marginals(&fst).unwrap();
        assert_eq!(mm.best, 4.0);
        let by_segment: Vec<(Segment, f64)> = (0..fst.num_edges() as u32)
            .map(|e| (fst.segment(e), mm.edge[e as usize]))
            .collect();
        for (seg, gamma) in by_segment {
            let expected = match (seg.start, seg.end, seg.label) {
                (0, 1, 0) => 4.0,
                (0, 1, 1) => 3.0,
                (1, 2, 0) => 3.0,
                (1, 2, 1) => 4.0,
                (0, 2, 0) => 2.5,
                (0, 2, 1) => 1.0,
                _ => unreachable!(),
            };
            assert_eq!(gamma, expected, "gamma for {seg:?}");
        }
        assert_eq!(mm.vertex, vec![4.0, 4.0, 4.0]);
    }

    #[test]
    fn max_marginals_reject_untrimmed_input() {
        let mut b = FstBuilder::new(2);
        let v0 = b.add_vertex(0);
        let v1 = b.add_vertex(1);
        let dead = b.add_vertex(1);
        let v2 = b.add_vertex(2);
        b.add_edge(v0, v1, 0, 0.0).unwrap();
        b.add_edge(v1, v2, 0, 0.0).unwrap();
        b.add_edge(v0, dead, 0, 0.0).unwrap();
        b.mark_initial(v0).unwrap();
        b.mark_final(v2).unwrap();
        assert!(max_marginals(&b.build()).is_err());
    }

    #[test]
    fn edit_distance_handles_boundary_cases() {
        assert_eq!(edit_distance(&[], &[]).distance(), 0);
        assert_eq!(edit_distance(&[1, 2], &[]).distance(), 2);
        assert_eq!(edit_distance(&[], &[1, 2, 3]).distance(), 3);
        let counts = edit_distance(&[0, 2], &[0, 1, 2]);
        assert_eq!(counts.distance(), 1);
        assert_eq!(counts.deletions, 1);
        let counts = edit_distance(&[0, 1, 1, 2], &[0, 1, 2]);
        assert_eq!(counts.distance(), 1);
        assert_eq!(counts.insertions, 1);
        let counts = edit_distance(&[0, 3, 2], &[0, 1, 2]);
        assert_eq!(counts.distance(), 1);
        assert_eq!(counts.substitutions, 1);
    }

    #[test]
    fn per_is_distance_over_reference_length() {
        assert_eq!(phone_error_rate(&[0, 2], &[0, 1, 2]).unwrap(), 1.0 / 3.0);
        assert!(phone_error_rate(&[0], &[]).is_err());
    }

    #[test]
    fn oracle_finds_the_closest_path() {
        // Reference (a, b) against the two-frame example: the path a.b exists,
        // so the oracle distance is 0.
        let fst = two_frame_example();
        let oracle = oracle_error_rate(&fst, &[0, 1]).unwrap();
        assert_eq!(oracle.distance, 0);
        assert_eq!(oracle.path.labels(), vec![0, 1]);
        // Reference (b, b): the dense space contains every two-segment
        // labeling, so this also matches exactly.
        let oracle = oracle_error_rate(&fst, &[1, 1]).unwrap();
        assert_eq!(oracle.distance, 0);
        assert_eq!(oracle.path.labels(), vec![1, 1]);
        // A reference no path can match well.
        let oracle = oracle_error_rate(&fst, &[1, 0, 1, 0]).unwrap();
        assert_eq!(oracle.distance, 2);
        assert_eq!(oracle.error_rate, 0.5);
    }

    #[test]
    fn oracle_rejects_empty_reference() {
        let fst = two_frame_example();
        assert!(oracle_error_rate(&fst, &[]).is_err());
    }

    #[test]
    fn density_and_rtf() {
        let fst = two_frame_example();
        assert_eq!(density(&fst, 2).unwrap(), 3.0);
        assert!(density(&fst, 0).is_err());
        assert_eq!(real_time_factor(0.5, 5.0).unwrap(), 0.1);
        assert!(real_time_factor(0.5, 0.0).is_err());
    }
}
