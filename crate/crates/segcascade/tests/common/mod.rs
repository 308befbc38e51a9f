//! Brute-force oracles and random instance generators shared by the
//! integration suites.
//!
//! Every oracle here recomputes its answer by explicit enumeration or from a
//! textbook recursive definition, independently of the library's dynamic
//! programs, so a bug in a sweep cannot hide inside its own check.

#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use segcascade::acoustics::PosteriorMatrix;
use segcascade::lattice::{trim, Fst, FstBuilder, Label, Segment, SegmentPath};

/// One complete initial→final path found by enumeration.
#[derive(Clone, Debug)]
pub struct EnumPath {
    /// Vertex the path starts at (meaningful even for the empty path).
    pub start: u32,
    /// Edge ids in order.
    pub edges: Vec<u32>,
    /// Weights accumulated left to right, the same grouping the decoder uses.
    pub score: f64,
}

impl EnumPath {
    /// Every vertex the path visits.
    pub fn vertices(&self, fst: &Fst) -> Vec<u32> {
        let mut vs = vec![self.start];
        vs.extend(self.edges.iter().map(|&e| fst.edge(e).head));
        vs
    }

    pub fn labels(&self, fst: &Fst) -> Vec<Label> {
        self.edges.iter().map(|&e| fst.edge(e).label).collect()
    }
}

/// All complete paths of the lattice, by depth-first search.
pub fn enumerate_paths(fst: &Fst) -> Vec<EnumPath> {
    fn dfs(
        fst: &Fst,
        start: u32,
        at: u32,
        finals: &BTreeSet<u32>,
        prefix: &mut Vec<u32>,
        score: f64,
        out: &mut Vec<EnumPath>,
    ) {
        if finals.contains(&at) {
            out.push(EnumPath { start, edges: prefix.clone(), score });
        }
        for &e in fst.out_edges(at) {
            let edge = fst.edge(e);
            prefix.push(e);
            dfs(fst, start, edge.head, finals, prefix, score + edge.weight, out);
            prefix.pop();
        }
    }
    let finals: BTreeSet<u32> = fst.finals().iter().copied().collect();
    let mut out = Vec::new();
    for &start in fst.initial() {
        dfs(fst, start, start, &finals, &mut Vec::new(), 0.0, &mut out);
    }
    out
}

/// Best score reachable at each vertex over all enumerated prefixes starting
/// at an initial vertex (0.0 at the initials themselves). Matches the forward
/// Viterbi values bitwise because both accumulate weights left to right.
pub fn brute_forward_scores(fst: &Fst) -> Vec<f64> {
    fn explore(fst: &Fst, at: u32, score: f64, d: &mut [f64]) {
        for &e in fst.out_edges(at) {
            let edge = fst.edge(e);
            let s = score + edge.weight;
            if s > d[edge.head as usize] {
                d[edge.head as usize] = s;
            }
            explore(fst, edge.head, s, d);
        }
    }
    let mut d = vec![f64::NEG_INFINITY; fst.num_vertices()];
    for &v in fst.initial() {
        d[v as usize] = 0.0;
    }
    for &v in fst.initial() {
        explore(fst, v, 0.0, &mut d);
    }
    d
}

/// Brute-force best path replicating the decoder's published tie-break from
/// first principles: the maximal score; among maximizing final vertices the
/// lowest id; then, walking backward, the optimal in-edge relaxed earliest —
/// smallest (tail time, tail id, edge id) — stopping at an initial vertex
/// whose best prefix is the empty one.
pub fn brute_best_path(fst: &Fst) -> Option<(Vec<u32>, f64)> {
    let d = brute_forward_scores(fst);
    let mut best: Option<u32> = None;
    for &f in fst.finals() {
        if d[f as usize] > best.map_or(f64::NEG_INFINITY, |b| d[b as usize]) {
            best = Some(f);
        }
    }
    let f = best?;
    if d[f as usize] == f64::NEG_INFINITY {
        return None;
    }
    let initials: BTreeSet<u32> = fst.initial().iter().copied().collect();
    let mut ids = Vec::new();
    let mut at = f;
    while !(initials.contains(&at) && d[at as usize] == 0.0) {
        let mut pick: Option<(u32, u32, u32)> = None;
        for &e in fst.in_edges(at) {
            let edge = fst.edge(e);
            let dt = d[edge.tail as usize];
            if dt == f64::NEG_INFINITY || dt + edge.weight != d[at as usize] {
                continue;
            }
            let key = (fst.vertex(edge.tail).time, edge.tail, e);
            if pick.is_none_or(|p| key < p) {
                pick = Some(key);
            }
        }
        let (_, tail, e) = pick.expect("a reachable vertex has an optimal in-edge");
        ids.push(e);
        at = tail;
    }
    ids.reverse();
    Some((ids, d[f as usize]))
}

/// Shape of the random lattices the oracles are exercised on.
#[derive(Clone, Copy, Debug)]
pub struct RandomFstConfig {
    pub max_vertices: usize,
    pub max_edges: usize,
    pub num_labels: usize,
    /// Randomly mark interior vertices initial or final too, exercising
    /// multi-source/multi-sink tie-breaking and empty paths.
    pub extra_marks: bool,
}

impl Default for RandomFstConfig {
    fn default() -> Self {
        RandomFstConfig { max_vertices: 8, max_edges: 20, num_labels: 3, extra_marks: true }
    }
}

/// One random trimmed lattice: vertices at times `0..n`, edges over random
/// forward spans with weights uniform in [−5, 5), trimmed to complete paths.
/// Returns `None` when trimming leaves nothing; callers resample.
pub fn random_trimmed_fst(rng: &mut ChaCha8Rng, cfg: &RandomFstConfig) -> Option<Fst> {
    let n = rng.gen_range(2..=cfg.max_vertices) as u32;
    let mut builder = FstBuilder::new(n - 1);
    for t in 0..n {
        builder.add_vertex(t);
    }
    let mut triples = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            for l in 0..cfg.num_labels as Label {
                triples.push((i, j, l));
            }
        }
    }
    triples.shuffle(rng);
    let m = rng.gen_range(1..=cfg.max_edges.min(triples.len()));
    for &(i, j, l) in triples.iter().take(m) {
        builder.add_edge(i, j, l, rng.gen_range(-5.0..5.0)).expect("forward edge");
    }
    builder.mark_initial(0).unwrap();
    builder.mark_final(n - 1).unwrap();
    if cfg.extra_marks {
        for v in 1..n - 1 {
            if rng.gen_bool(0.15) {
                builder.mark_initial(v).unwrap();
            }
            if rng.gen_bool(0.15) {
                builder.mark_final(v).unwrap();
            }
        }
    }
    let fst = trim(&builder.build());
    (fst.num_edges() > 0).then_some(fst)
}

/// `count` random trimmed lattices from a fixed seed.
pub fn standard_instances(seed: u64, count: usize, cfg: &RandomFstConfig) -> Vec<Fst> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        if let Some(fst) = random_trimmed_fst(&mut rng, cfg) {
            out.push(fst);
        }
    }
    out
}

/// Identity of an edge that survives renumbering: vertex times are unique in
/// the generated lattices and pruning never rewrites weights.
pub type EdgeKey = (u32, u32, Label, u64);

pub fn edge_keys(fst: &Fst) -> BTreeSet<EdgeKey> {
    (0..fst.num_edges() as u32)
        .map(|id| {
            let e = fst.edge(id);
            (fst.vertex(e.tail).time, fst.vertex(e.head).time, e.label, e.weight.to_bits())
        })
        .collect()
}

pub fn vertex_times(fst: &Fst) -> BTreeSet<u32> {
    fst.vertices().iter().map(|v| v.time).collect()
}

/// Levenshtein distance from the textbook recursion, memoized on suffix
/// lengths — no tables shared with the library implementation.
pub fn edit_distance_oracle(a: &[Label], b: &[Label]) -> usize {
    fn rec(a: &[Label], b: &[Label], memo: &mut HashMap<(usize, usize), usize>) -> usize {
        if a.is_empty() {
            return b.len();
        }
        if b.is_empty() {
            return a.len();
        }
        let key = (a.len(), b.len());
        if let Some(&d) = memo.get(&key) {
            return d;
        }
        let substitute = rec(&a[1..], &b[1..], memo) + usize::from(a[0] != b[0]);
        let delete = rec(&a[1..], b, memo) + 1;
        let insert = rec(a, &b[1..], memo) + 1;
        let d = substitute.min(delete).min(insert);
        memo.insert(key, d);
        d
    }
    rec(a, b, &mut HashMap::new())
}

/// Fully exhaustive Levenshtein: explores every alignment with no caching.
/// Exponential; only for short sequences.
pub fn edit_distance_exhaustive(a: &[Label], b: &[Label]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let substitute = edit_distance_exhaustive(&a[1..], &b[1..]) + usize::from(a[0] != b[0]);
    let delete = edit_distance_exhaustive(&a[1..], b) + 1;
    let insert = edit_distance_exhaustive(a, &b[1..]) + 1;
    substitute.min(delete).min(insert)
}

/// Every sequence of length ≤ `max_len` over labels `0..num_symbols`, in
/// length-then-lexicographic order.
pub fn all_sequences(num_symbols: usize, max_len: usize) -> Vec<Vec<Label>> {
    let mut out = vec![Vec::new()];
    let mut frontier = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for seq in &frontier {
            for s in 0..num_symbols as Label {
                let mut longer = seq.clone();
                longer.push(s);
                next.push(longer);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// Overlap cost restated from its definition: find the gold segment with the
/// most overlapping frames (the earliest on ties); a label mismatch costs 1,
/// a match costs `1 − overlap / max(durations)`.
pub fn overlap_cost_oracle(seg: Segment, gold: &SegmentPath) -> f64 {
    let overlaps: Vec<u32> = gold
        .segments()
        .iter()
        .map(|g| g.end.min(seg.end).saturating_sub(g.start.max(seg.start)))
        .collect();
    let best = overlaps.iter().copied().max().expect("nonempty gold");
    let idx = overlaps.iter().position(|&o| o == best).unwrap();
    let g = gold.segments()[idx];
    if g.label != seg.label {
        return 1.0;
    }
    1.0 - best as f64 / seg.duration().max(g.duration()) as f64
}

/// Random gold segmentation tiling frames 1..=num_frames.
pub fn random_gold(rng: &mut ChaCha8Rng, num_frames: u32, num_labels: usize) -> SegmentPath {
    let mut segments = Vec::new();
    let mut at = 0u32;
    while at < num_frames {
        let d = rng.gen_range(1..=(num_frames - at).min(3));
        segments.push(Segment::new(at, at + d, rng.gen_range(0..num_labels as Label)));
        at += d;
    }
    SegmentPath::new(segments).expect("boundaries advance")
}

/// Random, exactly log-normalized posteriors.
pub fn random_posteriors(rng: &mut ChaCha8Rng, num_frames: usize, num_labels: usize) -> PosteriorMatrix {
    let mut values = Vec::with_capacity(num_frames * num_labels);
    for _ in 0..num_frames {
        let logits: Vec<f64> = (0..num_labels).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + logits.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        values.extend(logits.iter().map(|v| v - lse));
    }
    PosteriorMatrix::new(num_frames, num_labels, values).expect("normalized rows")
}
