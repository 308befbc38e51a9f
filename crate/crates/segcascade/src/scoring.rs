//! Rescoring lattices with segmental models, and scoring whole paths.
//!
//! For context-free template sets a rescored lattice has exactly the input's
//! structure with each edge weight replaced by the model score of its
//! segment. The bigram template makes edge scores depend on the previous
//! segment's label, so rescoring then performs an exact label-context
//! expansion: each vertex is split by the label of the incoming segment
//! (utterance start counts as its own context), every expanded edge knows its
//! predecessor label, and best paths in the expanded lattice correspond
//! one-to-one to best paths under the context-dependent score. The expansion
//! multiplies vertex count by at most `|L| + 1` and preserves all times, so
//! the result is an ordinary segment lattice.

use crate::acoustics::PosteriorMatrix;
use crate::error::{Error, Result};
use crate::features::{Aux, FeatureTemplate, FeatureVec, History, Model};
use crate::inference::best_path;
use crate::lattice::{topological_order, Fst, FstBuilder, SegmentPath};

/// A lattice whose weights are one model's edge scores.
#[derive(Clone, Debug)]
pub struct Rescored {
    pub fst: Fst,
    /// For label-context expansions, maps each edge of `fst` back to the
    /// input edge it scores; `None` when the structure is unchanged.
    pub orig_edge: Option<Vec<u32>>,
    /// Number of featurize calls spent producing the weights.
    pub featurizations: usize,
}

/// Replaces every edge weight with the model's score for that segment. The
/// input edge weight is offered to the model as the previous-pass lattice
/// score.
pub fn rescore(model: &Model, post: &PosteriorMatrix, fst: &Fst) -> Result<Rescored> {
    rescore_with(model, post, fst, None)
}

/// [`rescore`] plus an additive per-input-edge term (used for cost-augmented
/// decoding, where `extra` carries scaled overlap costs).
pub fn rescore_with(model: &Model, post: &PosteriorMatrix, fst: &Fst, extra: Option<&[f64]>) -> Result<Rescored> {
    if let Some(extra) = extra {
        if extra.len() != fst.num_edges() {
            return Err(Error::DimensionMismatch(format!(
                "{} additive terms for {} edges",
                extra.len(),
                fst.num_edges()
            )));
        }
    }
    if fst.num_frames() as usize != post.num_frames() {
        return Err(Error::DimensionMismatch(format!(
            "lattice over {} frames, posteriors over {}",
            fst.num_frames(),
            post.num_frames()
        )));
    }
    if model.templates().contains(FeatureTemplate::BigramLm) {
        expand_and_score(model, post, fst, extra)
    } else {
        let mut weights = Vec::with_capacity(fst.num_edges());
        for id in 0..fst.num_edges() as u32 {
            let aux = Aux { prev: None, lattice_score: Some(fst.edge(id).weight) };
            let mut w = model.score(post, fst.segment(id), &aux)?;
            if let Some(extra) = extra {
                w += extra[id as usize];
            }
            weights.push(w);
        }
        Ok(Rescored { fst: fst.with_weights(&weights)?, orig_edge: None, featurizations: fst.num_edges() })
    }
}

fn history_rank(h: History) -> usize {
    match h {
        History::Start => 0,
        History::Label(l) => l as usize + 1,
    }
}

fn expand_and_score(model: &Model, post: &PosteriorMatrix, fst: &Fst, extra: Option<&[f64]>) -> Result<Rescored> {
    if fst.num_vertices() == 0 {
        return Ok(Rescored { fst: Fst::empty(fst.num_frames()), orig_edge: Some(Vec::new()), featurizations: 0 });
    }
    let order = topological_order(fst)?;
    let num_histories = model.alphabet().len() + 1;

    // Which label contexts reach each vertex.
    let mut reached = vec![vec![false; num_histories]; fst.num_vertices()];
    for &i in fst.initial() {
        reached[i as usize][history_rank(History::Start)] = true;
    }
    for &u in &order {
        if !reached[u as usize].iter().any(|&r| r) {
            continue;
        }
        for &eid in fst.out_edges(u) {
            let e = fst.edge(eid);
            reached[e.head as usize][history_rank(History::Label(e.label))] = true;
        }
    }

    let mut builder = FstBuilder::new(fst.num_frames());
    // Expanded vertex ids, indexed by original vertex and history rank.
    let mut expanded = vec![vec![u32::MAX; num_histories]; fst.num_vertices()];
    for &v in &order {
        for rank in 0..num_histories {
            if reached[v as usize][rank] {
                expanded[v as usize][rank] = builder.add_vertex(fst.vertex(v).time);
            }
        }
    }
    for &i in fst.initial() {
        let id = expanded[i as usize][history_rank(History::Start)];
        builder.mark_initial(id)?;
    }
    for &f in fst.finals() {
        for rank in 0..num_histories {
            let id = expanded[f as usize][rank];
            if id != u32::MAX {
                builder.mark_final(id)?;
            }
        }
    }

    let mut orig_edge = Vec::new();
    let mut featurizations = 0usize;
    for &u in &order {
        for rank in 0..num_histories {
            let tail = expanded[u as usize][rank];
            if tail == u32::MAX {
                continue;
            }
            let prev = if rank == 0 { History::Start } else { History::Label(rank as u32 - 1) };
            for &eid in fst.out_edges(u) {
                let e = fst.edge(eid);
                let aux = Aux { prev: Some(prev), lattice_score: Some(e.weight) };
                let mut w = model.score(post, fst.segment(eid), &aux)?;
                featurizations += 1;
                if let Some(extra) = extra {
                    w += extra[eid as usize];
                }
                let head = expanded[e.head as usize][history_rank(History::Label(e.label))];
                builder.add_edge(tail, head, e.label, w)?;
                orig_edge.push(eid);
            }
        }
    }
    Ok(Rescored { fst: builder.build(), orig_edge: Some(orig_edge), featurizations })
}

/// A decoded hypothesis with its score and instrumentation.
#[derive(Clone, Debug)]
pub struct Decoded {
    pub path: SegmentPath,
    pub score: f64,
    pub featurizations: usize,
}

/// Rescores the lattice and returns its best path under the model.
pub fn decode(model: &Model, post: &PosteriorMatrix, fst: &Fst) -> Result<Decoded> {
    let rescored = rescore(model, post, fst)?;
    let (path, score) = best_path(&rescored.fst)?;
    Ok(Decoded { path, score, featurizations: rescored.featurizations })
}

fn path_aux<'a>(
    path: &'a SegmentPath,
    lattice_scores: Option<&'a [f64]>,
) -> Result<impl Iterator<Item = (crate::lattice::Segment, Aux)> + 'a> {
    if let Some(scores) = lattice_scores {
        if scores.len() != path.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} lattice scores for a path of {} segments",
                scores.len(),
                path.len()
            )));
        }
    }
    let mut prev = History::Start;
    Ok(path.segments().iter().enumerate().map(move |(i, &seg)| {
        let aux = Aux { prev: Some(prev), lattice_score: lattice_scores.map(|s| s[i]) };
        prev = History::Label(seg.label);
        (seg, aux)
    }))
}

/// Accumulated feature vector `Σ_e φ(e)` of a whole path. `lattice_scores`
/// carries the previous-pass edge weights along the path when the model uses
/// the lattice-score feature.
pub fn path_features(
    model: &Model,
    post: &PosteriorMatrix,
    path: &SegmentPath,
    lattice_scores: Option<&[f64]>,
) -> Result<Vec<(usize, f64)>> {
    let mut vectors: Vec<FeatureVec> = Vec::with_capacity(path.len());
    for (seg, aux) in path_aux(path, lattice_scores)? {
        vectors.push(model.featurize(post, seg, &aux)?);
    }
    Ok(FeatureVec::accumulate(vectors))
}

/// Score of a whole path: the left-to-right sum of its segment scores,
/// matching the summation order of lattice decoding exactly.
pub fn path_score(
    model: &Model,
    post: &PosteriorMatrix,
    path: &SegmentPath,
    lattice_scores: Option<&[f64]>,
) -> Result<f64> {
    let mut total = 0.0;
    for (seg, aux) in path_aux(path, lattice_scores)? {
        total += model.score(post, seg, &aux)?;
    }
    Ok(total)
}
