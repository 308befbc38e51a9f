//! Structured hinge-loss training of segmental models: overlap cost,
//! cost-augmented decoding, subgradients, AdaGrad, and the per-pass training
//! loop with early stopping on development PER.
//!
//! The overlap cost of a hypothesized segment against a gold segmentation is
//! computed against the gold segment it overlaps most (ties broken toward
//! the earliest): zero for an exact boundary-and-label match, one for a
//! label mismatch, and `1 − overlap / max(len, gold_len)` in between. The
//! cost decomposes over edges, so the cost-augmented argmax is an ordinary
//! best-path problem over shifted edge weights and training uses exact
//! loss-augmented inference.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::acoustics::PosteriorMatrix;
use crate::error::{Error, Result};
use crate::features::Model;
use crate::inference::{best_path_edges, edit_distance, oracle_error_rate};
use crate::lattice::{Fst, Segment, SegmentPath};
use crate::scoring::{decode, path_features, path_score, rescore_with};
use crate::ADAGRAD_EPS;

/// Overlap cost of one segment against the gold segmentation, in `[0, 1]`.
/// Zero exactly for segments identical to a gold segment.
pub fn overlap_cost(e: Segment, gold: &SegmentPath) -> Result<f64> {
    let (Some(gstart), Some(gend)) = (gold.start(), gold.end()) else {
        return Err(Error::InvalidInput("empty gold segmentation".into()));
    };
    if e.start < gstart || e.end > gend {
        return Err(Error::InvalidInput(format!(
            "segment ({},{}) outside gold span ({gstart},{gend})",
            e.start, e.end
        )));
    }
    let mut best: Option<(u32, Segment)> = None;
    for &g in gold.segments() {
        let overlap = g.end.min(e.end).saturating_sub(g.start.max(e.start));
        if best.is_none_or(|(b, _)| overlap > b) {
            best = Some((overlap, g));
        }
    }
    let (overlap, g) = best.expect("gold has segments");
    if g.label != e.label {
        return Ok(1.0);
    }
    Ok(1.0 - overlap as f64 / e.duration().max(g.duration()) as f64)
}

/// Per-edge overlap costs for a whole lattice.
#[derive(Clone, Debug)]
pub struct OverlapCostTable {
    costs: Vec<f64>,
}

impl OverlapCostTable {
    /// Requires a gold segmentation tiling the lattice's full frame range.
    pub fn compute(fst: &Fst, gold: &SegmentPath) -> Result<Self> {
        if gold.start() != Some(0) || gold.end() != Some(fst.num_frames()) {
            return Err(Error::InvalidInput(format!(
                "gold segmentation does not cover frames 1..{}",
                fst.num_frames()
            )));
        }
        let costs = (0..fst.num_edges() as u32)
            .map(|id| overlap_cost(fst.segment(id), gold))
            .collect::<Result<_>>()?;
        Ok(OverlapCostTable { costs })
    }

    pub fn costs(&self) -> &[f64] {
        &self.costs
    }

    pub fn get(&self, edge: u32) -> f64 {
        self.costs[edge as usize]
    }

    fn scaled(&self, scale: f64) -> Vec<f64> {
        self.costs.iter().map(|c| c * scale).collect()
    }
}

/// Argmax over lattice paths of `score(y) + cost_scale · cost(y, gold)`,
/// computed exactly as a best path over cost-shifted edge weights.
pub fn cost_augmented_decode(
    model: &Model,
    post: &PosteriorMatrix,
    fst: &Fst,
    gold: &SegmentPath,
    cost_scale: f64,
) -> Result<(SegmentPath, f64)> {
    if !(cost_scale >= 0.0 && cost_scale.is_finite()) {
        return Err(Error::Config(format!("cost scale {cost_scale} must be finite and nonnegative")));
    }
    let costs = OverlapCostTable::compute(fst, gold)?;
    let rescored = rescore_with(model, post, fst, Some(&costs.scaled(cost_scale)))?;
    let (edges, score) = best_path_edges(&rescored.fst)?;
    Ok((rescored.fst.path(&edges)?, score))
}

/// One utterance's hinge loss and subgradient.
#[derive(Clone, Debug)]
pub struct HingeOutcome {
    pub loss: f64,
    /// Sparse `φ(ŷ) − φ(gold)`, empty when the loss is zero.
    pub gradient: Vec<(usize, f64)>,
    /// The cost-augmented argmax path.
    pub augmented_path: SegmentPath,
    /// True when the gold path was absent from the lattice and the lattice's
    /// oracle path stood in as the training target.
    pub gold_substituted: bool,
    pub featurizations: usize,
}

fn sparse_sub(a: &[(usize, f64)], b: &[(usize, f64)]) -> Vec<(usize, f64)> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let (idx, v) = if j >= b.len() || (i < a.len() && a[i].0 < b[j].0) {
            let e = a[i];
            i += 1;
            e
        } else if i >= a.len() || b[j].0 < a[i].0 {
            let e = b[j];
            j += 1;
            (e.0, -e.1)
        } else {
            let e = (a[i].0, a[i].1 - b[j].1);
            i += 1;
            j += 1;
            e
        };
        if v != 0.0 {
            out.push((idx, v));
        }
    }
    out
}

/// Hinge loss `max(0, score(ŷ) + cost(ŷ) − score(gold))` with subgradient
/// `φ(ŷ) − φ(gold)` when positive. A gold path missing from the lattice is
/// replaced by the lattice's oracle path and flagged.
pub fn hinge_subgradient(
    model: &Model,
    post: &PosteriorMatrix,
    fst: &Fst,
    gold: &SegmentPath,
    cost_scale: f64,
) -> Result<HingeOutcome> {
    if !(cost_scale >= 0.0 && cost_scale.is_finite()) {
        return Err(Error::Config(format!("cost scale {cost_scale} must be finite and nonnegative")));
    }
    let costs = OverlapCostTable::compute(fst, gold)?;
    let rescored = rescore_with(model, post, fst, Some(&costs.scaled(cost_scale)))?;
    let mut featurizations = rescored.featurizations;
    let (aug_edges, aug_score) = best_path_edges(&rescored.fst)?;
    // Map expanded edges back to the input lattice so the previous-pass
    // weights along ŷ can feed the lattice-score feature.
    let orig_ids: Vec<u32> = match &rescored.orig_edge {
        Some(map) => aug_edges.iter().map(|&id| map[id as usize]).collect(),
        None => aug_edges,
    };
    let augmented_path = fst.path(&orig_ids)?;
    let yhat_scores: Vec<f64> = orig_ids.iter().map(|&id| fst.edge(id).weight).collect();

    let (target, gold_substituted) = match fst.find_path(gold) {
        Some(_) => (gold.clone(), false),
        None => (oracle_error_rate(fst, &gold.labels())?.path, true),
    };
    let target_ids = fst
        .find_path(&target)
        .ok_or_else(|| Error::InvalidFst("oracle path not found in its own lattice".into()))?;
    let target_scores: Vec<f64> = target_ids.iter().map(|&id| fst.edge(id).weight).collect();

    let target_score = path_score(model, post, &target, Some(&target_scores))?;
    let loss = (aug_score - target_score).max(0.0);
    let gradient = if loss > 0.0 {
        let phi_hat = path_features(model, post, &augmented_path, Some(&yhat_scores))?;
        let phi_gold = path_features(model, post, &target, Some(&target_scores))?;
        featurizations += augmented_path.len() + target.len();
        sparse_sub(&phi_hat, &phi_gold)
    } else {
        Vec::new()
    };
    Ok(HingeOutcome { loss, gradient, augmented_path, gold_substituted, featurizations })
}

/// Per-coordinate AdaGrad state over a fixed-dimension parameter vector.
#[derive(Clone, Debug)]
pub struct AdaGrad {
    step_size: f64,
    accum: Vec<f64>,
}

impl AdaGrad {
    pub fn new(dim: usize, step_size: f64) -> Result<Self> {
        if !(step_size >= 0.0 && step_size.is_finite()) {
            return Err(Error::Config(format!("step size {step_size} must be finite and nonnegative")));
        }
        Ok(AdaGrad { step_size, accum: vec![0.0; dim] })
    }

    /// Applies one sparse gradient: `G_i += g_i²` then
    /// `θ_i −= step · g_i / (√G_i + 1e−8)`. Untouched coordinates keep both
    /// their weight and their accumulator.
    pub fn update(&mut self, theta: &mut [f64], gradient: &[(usize, f64)]) -> Result<()> {
        if theta.len() != self.accum.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} weights for an optimizer over {}",
                theta.len(),
                self.accum.len()
            )));
        }
        for &(i, g) in gradient {
            if !g.is_finite() {
                return Err(Error::NonFinite(format!("gradient component {g} at index {i}")));
            }
            if g == 0.0 {
                continue;
            }
            self.accum[i] += g * g;
            theta[i] -= self.step_size * g / (self.accum[i].sqrt() + ADAGRAD_EPS);
        }
        Ok(())
    }
}

/// One utterance's training inputs: posteriors, its hypothesis lattice, and
/// the gold segmentation.
#[derive(Clone, Copy)]
pub struct TrainUtterance<'a> {
    pub post: &'a PosteriorMatrix,
    pub fst: &'a Fst,
    pub gold: &'a SegmentPath,
}

/// Options for [`train_pass`].
#[derive(Clone, Copy, Debug)]
pub struct TrainConfig {
    /// AdaGrad step size; zero performs a metrics-only run.
    pub step_size: f64,
    pub epochs: u32,
    pub cost_scale: f64,
    /// Return the epoch snapshot with the lowest dev PER instead of the
    /// final weights.
    pub early_stopping: bool,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { step_size: 0.1, epochs: 10, cost_scale: 1.0, early_stopping: true, seed: 0 }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_size >= 0.0 && self.step_size.is_finite()) {
            return Err(Error::Config(format!("step size {} must be finite and nonnegative", self.step_size)));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if !(self.cost_scale >= 0.0 && self.cost_scale.is_finite()) {
            return Err(Error::Config(format!("cost scale {} must be finite and nonnegative", self.cost_scale)));
        }
        Ok(())
    }
}

/// One row of the training log.
#[derive(Clone, Copy, Debug)]
pub struct EpochMetrics {
    pub epoch: u32,
    /// Mean hinge loss per training utterance.
    pub train_loss: f64,
    /// Corpus-level dev PER after this epoch; absent without a dev set.
    pub dev_per: Option<f64>,
    pub seconds: f64,
}

/// Result of training one cascade pass.
#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub model: Model,
    pub metrics: Vec<EpochMetrics>,
    /// Epoch whose snapshot was returned (earliest best dev PER), when early
    /// stopping was active.
    pub best_epoch: Option<u32>,
    /// Training utterances whose gold path was missing from their lattice.
    pub substituted_utterances: usize,
}

/// Corpus-level phone error rate of the model's decodes against gold:
/// total edit distance over total reference length.
pub fn dev_error_rate(model: &Model, utterances: &[TrainUtterance]) -> Result<f64> {
    let mut distance = 0usize;
    let mut total = 0usize;
    for u in utterances {
        let decoded = decode(model, u.post, u.fst)?;
        let reference = u.gold.labels();
        distance += edit_distance(&decoded.path.labels(), &reference).distance();
        total += reference.len();
    }
    if total == 0 {
        return Err(Error::InvalidInput("empty reference in dev set".into()));
    }
    Ok(distance as f64 / total as f64)
}

/// Trains one pass: sequential per-utterance AdaGrad updates on the hinge
/// subgradient in a freshly shuffled order each epoch, recording dev PER
/// between epochs. With early stopping, returns the weights of the epoch
/// with the lowest dev PER (earliest on ties).
pub fn train_pass(
    mut model: Model,
    train: &[TrainUtterance],
    dev: &[TrainUtterance],
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::InvalidInput("empty training corpus".into()));
    }
    if cfg.early_stopping && dev.is_empty() {
        return Err(Error::Config("early stopping requires a dev set".into()));
    }
    let substituted_utterances = train.iter().filter(|u| u.fst.find_path(u.gold).is_none()).count();
    if substituted_utterances == train.len() {
        return Err(Error::InvalidInput(
            "no training utterance's lattice contains its gold path".into(),
        ));
    }

    let mut adagrad = AdaGrad::new(model.dimension(), cfg.step_size)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut metrics = Vec::with_capacity(cfg.epochs as usize);
    let mut best: Option<(f64, Vec<f64>, u32)> = None;

    for epoch in 1..=cfg.epochs {
        let started = Instant::now();
        order.shuffle(&mut rng);
        let mut total_loss = 0.0;
        for &i in &order {
            let u = train[i];
            let outcome = hinge_subgradient(&model, u.post, u.fst, u.gold, cfg.cost_scale)?;
            total_loss += outcome.loss;
            if !outcome.gradient.is_empty() {
                adagrad.update(model.theta_mut(), &outcome.gradient)?;
            }
        }
        let dev_per = if dev.is_empty() { None } else { Some(dev_error_rate(&model, dev)?) };
        if let Some(per) = dev_per {
            if best.as_ref().is_none_or(|(b, _, _)| per < *b) {
                best = Some((per, model.theta().to_vec(), epoch));
            }
        }
        metrics.push(EpochMetrics {
            epoch,
            train_loss: total_loss / train.len() as f64,
            dev_per,
            seconds: started.elapsed().as_secs_f64(),
        });
    }

    let mut best_epoch = None;
    if cfg.early_stopping {
        if let Some((_, theta, epoch)) = best {
            model.theta_mut().copy_from_slice(&theta);
            best_epoch = Some(epoch);
        }
    }
    Ok(TrainOutcome { model, metrics, best_epoch, substituted_utterances })
}
