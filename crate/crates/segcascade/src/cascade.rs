//! Multi-pass orchestration: train pass i on hypothesis space Yᵢ, prune its
//! scored lattice to produce Yᵢ₊₁ with each surviving edge's score stamped
//! as the next pass's lattice-score input, and decode with the final pass.
//!
//! Dense first-pass spaces are built on the fly and shared between
//! utterances of equal length; only pruned lattices are ever serialized.

use std::collections::HashMap;
use std::time::Instant;

use crate::acoustics::{classify, subsample_forward, FrameClassifier, FrameMatrix, Parity, PosteriorMatrix};
use crate::config::{key_value_lines, parse_value};
use crate::error::{Error, Result};
use crate::features::{estimate_bigram_lm, FeatureTemplate, FeatureTemplateSet, Model, TemplateSpec};
use crate::inference::{audio_seconds, best_path_edges, oracle_error_rate, real_time_factor};
use crate::lattice::{build_hypothesis_space, Fst, LabelAlphabet, SegmentPath};
use crate::pruning::{prune, PruneMethod, PruneParams};
use crate::scoring::{decode, rescore};
use crate::training::{train_pass, EpochMetrics, TrainConfig, TrainOutcome, TrainUtterance};

/// One pass: its feature templates, training options, and the pruning
/// applied to its scored lattice. Only the final pass omits pruning.
#[derive(Clone, Debug)]
pub struct PassConfig {
    pub templates: FeatureTemplateSet,
    pub train: TrainConfig,
    pub prune: Option<PruneParams>,
}

#[derive(Clone, Debug)]
pub struct CascadeConfig {
    pub alphabet: LabelAlphabet,
    pub passes: Vec<PassConfig>,
    /// Longest candidate segment in the dense hypothesis space.
    pub max_duration: u32,
    /// Subsampling parity handed to the frame classifier when decoding from
    /// raw frames; `None` evaluates every frame.
    pub subsample: Option<Parity>,
    /// Abort training when a pruning stage empties more than this fraction
    /// of utterance lattices.
    pub abort_fraction: f64,
}

fn default_templates(
    index: usize,
    num_passes: usize,
    num_samples: usize,
    max_duration: u32,
) -> Result<FeatureTemplateSet> {
    use FeatureTemplate::*;
    let entries = if index == 0 {
        // The cheap bootstrap pass: one score feature plus a bias.
        vec![TemplateSpec::plain(LabelPosteriorSum), TemplateSpec::plain(Bias)]
    } else if index + 1 == num_passes {
        // The rescoring pass: previous score, bigram LM, per-label duration
        // indicators, bias.
        vec![
            TemplateSpec::plain(LatticeScore),
            TemplateSpec::plain(BigramLm),
            TemplateSpec::lexicalized(LengthIndicator),
            TemplateSpec::plain(Bias),
        ]
    } else {
        // Rich lexicalized segment features plus the carried-forward score.
        vec![
            TemplateSpec::lexicalized(LabelPosteriorSum),
            TemplateSpec::lexicalized(PosteriorAverage),
            TemplateSpec::lexicalized(PosteriorSamples),
            TemplateSpec::lexicalized(BoundaryPosteriors),
            TemplateSpec::lexicalized(LengthIndicator),
            TemplateSpec::lexicalized(Bias),
            TemplateSpec::plain(LatticeScore),
        ]
    };
    FeatureTemplateSet::new(entries, num_samples, max_duration)
}

fn default_prune(index: usize, num_passes: usize) -> Result<Option<PruneParams>> {
    Ok(if index + 1 == num_passes {
        None
    } else if index == 0 {
        Some(PruneParams::new(PruneMethod::Edge, 0.85)?)
    } else {
        Some(PruneParams::new(PruneMethod::Edge, 0.3)?)
    })
}

impl CascadeConfig {
    /// The stock three-pass recipe: a two-feature bootstrap pass pruned at
    /// α=0.85, a rich lexicalized pass pruned at α=0.3, and a final
    /// bigram-LM rescoring pass.
    pub fn default_recipe(alphabet: LabelAlphabet) -> Result<Self> {
        parse_cascade_config("", alphabet)
    }

    pub fn validate(&self) -> Result<()> {
        if self.alphabet.is_empty() {
            return Err(Error::Config("cascade needs a nonempty label alphabet".into()));
        }
        if self.passes.is_empty() {
            return Err(Error::Config("cascade needs at least one pass".into()));
        }
        if self.max_duration == 0 {
            return Err(Error::Config("max duration must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.abort_fraction) {
            return Err(Error::Config(format!(
                "abort fraction {} outside [0, 1]",
                self.abort_fraction
            )));
        }
        let last = self.passes.len() - 1;
        for (i, pass) in self.passes.iter().enumerate() {
            pass.train.validate()?;
            if i < last && pass.prune.is_none() {
                return Err(Error::Config(format!(
                    "pass {} feeds another pass and must prune",
                    i + 1
                )));
            }
            if i == last && pass.prune.is_some() {
                return Err(Error::Config("the final pass does not prune".into()));
            }
        }
        Ok(())
    }
}

/// Parses a cascade configuration from flat `key value` text. Top-level
/// keys (defaults shown):
///
/// ```text
/// passes 3             number of passes
/// max_duration 8       longest candidate segment, frames
/// num_samples 3        sample positions for the posterior_samples template
/// subsample none       none | even | odd (classifier feed-forward)
/// abort_fraction 0.05  tolerated fraction of empty pruned lattices
/// ```
///
/// Per-pass keys use a `passN.` prefix: `templates` (space-separated names,
/// `:lex` suffix lexicalizes), `epochs`, `step_size`, `cost_scale`, `seed`,
/// `early_stopping`, and `prune` (`<method> <alpha>` or `none`). Unset
/// fields fall back to the stock recipe for the pass's position.
pub fn parse_cascade_config(text: &str, alphabet: LabelAlphabet) -> Result<CascadeConfig> {
    let mut num_passes = 3usize;
    let mut max_duration = 8u32;
    let mut num_samples = 3usize;
    let mut subsample: Option<Parity> = None;
    let mut abort_fraction = 0.05f64;
    let mut pass_fields: Vec<(usize, usize, String, String)> = Vec::new();
    for (lineno, key, value) in key_value_lines(text)? {
        if let Some(rest) = key.strip_prefix("pass") {
            if let Some((num, field)) = rest.split_once('.') {
                if let Ok(index) = num.parse::<usize>() {
                    if index == 0 {
                        return Err(Error::parse(lineno, "passes are numbered from 1"));
                    }
                    pass_fields.push((lineno, index, field.to_string(), value.to_string()));
                    continue;
                }
            }
        }
        match key {
            "passes" => num_passes = parse_value(lineno, key, value)?,
            "max_duration" => max_duration = parse_value(lineno, key, value)?,
            "num_samples" => num_samples = parse_value(lineno, key, value)?,
            "subsample" => {
                subsample = match value {
                    "none" => None,
                    other => Some(
                        other
                            .parse::<Parity>()
                            .map_err(|e| Error::parse(lineno, e.to_string()))?,
                    ),
                }
            }
            "abort_fraction" => abort_fraction = parse_value(lineno, key, value)?,
            _ => return Err(Error::parse(lineno, format!("unknown key '{key}'"))),
        }
    }
    if num_passes == 0 {
        return Err(Error::Config("cascade needs at least one pass".into()));
    }
    let mut passes = Vec::with_capacity(num_passes);
    for i in 0..num_passes {
        passes.push(PassConfig {
            templates: default_templates(i, num_passes, num_samples, max_duration)?,
            train: TrainConfig::default(),
            prune: default_prune(i, num_passes)?,
        });
    }
    for (lineno, index, field, value) in pass_fields {
        if index > num_passes {
            return Err(Error::parse(
                lineno,
                format!("pass {index} exceeds the declared {num_passes} passes"),
            ));
        }
        let pass = &mut passes[index - 1];
        match field.as_str() {
            "templates" => {
                pass.templates = FeatureTemplateSet::parse_list(&value, num_samples, max_duration)
                    .map_err(|e| Error::parse(lineno, e.to_string()))?
            }
            "epochs" => pass.train.epochs = parse_value(lineno, &field, &value)?,
            "step_size" => pass.train.step_size = parse_value(lineno, &field, &value)?,
            "cost_scale" => pass.train.cost_scale = parse_value(lineno, &field, &value)?,
            "seed" => pass.train.seed = parse_value(lineno, &field, &value)?,
            "early_stopping" => pass.train.early_stopping = parse_value(lineno, &field, &value)?,
            "prune" => {
                pass.prune = if value == "none" {
                    None
                } else {
                    let (method, alpha) = value.split_once(char::is_whitespace).ok_or_else(|| {
                        Error::parse(lineno, "expected 'prune <method> <alpha>' or 'prune none'")
                    })?;
                    let method: PruneMethod =
                        method.parse().map_err(|e: Error| Error::parse(lineno, e.to_string()))?;
                    let alpha: f64 = parse_value(lineno, "prune", alpha.trim())?;
                    Some(PruneParams::new(method, alpha).map_err(|e| Error::parse(lineno, e.to_string()))?)
                }
            }
            _ => return Err(Error::parse(lineno, format!("unknown pass field '{field}'"))),
        }
    }
    let config = CascadeConfig { alphabet, passes, max_duration, subsample, abort_fraction };
    config.validate()?;
    Ok(config)
}

/// One utterance's cascade inputs: posteriors plus the gold segmentation.
#[derive(Clone, Debug)]
pub struct CascadeUtterance {
    pub id: String,
    pub post: PosteriorMatrix,
    pub gold: SegmentPath,
}

#[derive(Clone, Debug)]
pub struct CascadeData {
    pub train: Vec<CascadeUtterance>,
    pub dev: Vec<CascadeUtterance>,
}

/// Aggregate statistics for the lattices one pass hands the next.
#[derive(Clone, Debug)]
pub struct PruneStats {
    pub params: PruneParams,
    /// Edges entering the pruner (after any label-context expansion).
    pub edges_before: usize,
    pub edges_after: usize,
    /// Surviving edges per reference label, train and dev combined.
    pub density: f64,
    /// Dev oracle PER over surviving lattices; absent if every dev lattice
    /// was emptied.
    pub dev_oracle: Option<f64>,
    /// Rescore-plus-prune processing time over audio time.
    pub rtf: f64,
    /// Utterances whose lattice pruned to empty (dropped downstream).
    pub dropped: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct PassStats {
    /// 1-based pass number.
    pub pass: usize,
    pub train_seconds: f64,
    pub epochs: Vec<EpochMetrics>,
    pub best_epoch: Option<u32>,
    /// Dev PER of the model this pass settled on.
    pub dev_per: Option<f64>,
    /// Training utterances whose gold path was absent from their lattice.
    pub substituted: usize,
    pub prune: Option<PruneStats>,
}

#[derive(Clone, Debug)]
pub struct CascadeTrainOutcome {
    pub models: Vec<Model>,
    pub passes: Vec<PassStats>,
    /// Lattices produced between passes: `lattices[k]` holds the
    /// `(utterance id, lattice)` pairs pass k+1 wrote for pass k+2, train
    /// set first, then dev.
    pub lattices: Vec<Vec<(String, Fst)>>,
}

fn selected_dev_per(outcome: &TrainOutcome) -> Option<f64> {
    match outcome.best_epoch {
        Some(e) => outcome.metrics.iter().find(|m| m.epoch == e).and_then(|m| m.dev_per),
        None => outcome.metrics.last().and_then(|m| m.dev_per),
    }
}

struct PruneTotals {
    edges_before: usize,
    edges_after: usize,
    frames: usize,
    surviving_ref_len: usize,
}

fn prune_set(
    model: &Model,
    params: PruneParams,
    set: &[CascadeUtterance],
    refs: &[(usize, &Fst)],
    dropped: &mut Vec<String>,
    totals: &mut PruneTotals,
) -> Result<Vec<(usize, Fst)>> {
    let mut survivors = Vec::with_capacity(refs.len());
    for &(idx, fst) in refs {
        let utt = &set[idx];
        let rescored = rescore(model, &utt.post, fst)?;
        let outcome = prune(&rescored.fst, params)?;
        totals.edges_before += rescored.fst.num_edges();
        totals.edges_after += outcome.fst.num_edges();
        totals.frames += utt.post.num_frames();
        if outcome.fst.is_empty() {
            dropped.push(utt.id.clone());
        } else {
            totals.surviving_ref_len += utt.gold.len();
            survivors.push((idx, outcome.fst));
        }
    }
    Ok(survivors)
}

/// Trains every pass in order. Pass 1 trains on dense hypothesis spaces;
/// each later pass trains on the lattices the previous pass pruned, with
/// the previous pass's edge scores available as the lattice-score feature.
pub fn run_cascade_train(config: &CascadeConfig, data: &CascadeData) -> Result<CascadeTrainOutcome> {
    config.validate()?;
    if data.train.is_empty() {
        return Err(Error::InvalidInput("empty training corpus".into()));
    }
    for utt in data.train.iter().chain(&data.dev) {
        if utt.post.num_labels() != config.alphabet.len() {
            return Err(Error::InvalidInput(format!(
                "utterance '{}': posteriors cover {} labels, alphabet has {}",
                utt.id,
                utt.post.num_labels(),
                config.alphabet.len()
            )));
        }
        if utt.gold.start() != Some(0) || utt.gold.end() != Some(utt.post.num_frames() as u32) {
            return Err(Error::InvalidInput(format!(
                "utterance '{}': gold path does not tile its {} frames",
                utt.id,
                utt.post.num_frames()
            )));
        }
    }
    let needs_bigram = config
        .passes
        .iter()
        .any(|p| p.templates.contains(FeatureTemplate::BigramLm));
    let bigram = if needs_bigram {
        let golds: Vec<SegmentPath> = data.train.iter().map(|u| u.gold.clone()).collect();
        Some(estimate_bigram_lm(&golds, config.alphabet.len())?)
    } else {
        None
    };

    // Dense spaces are identical for equal frame counts; share them.
    let mut dense: HashMap<u32, Fst> = HashMap::new();
    for utt in data.train.iter().chain(&data.dev) {
        let frames = utt.post.num_frames() as u32;
        if !dense.contains_key(&frames) {
            dense.insert(frames, build_hypothesis_space(frames, config.alphabet.len(), config.max_duration)?);
        }
    }

    let mut models = Vec::new();
    let mut stats = Vec::new();
    let mut produced: Vec<Vec<(String, Fst)>> = Vec::new();
    let mut train_latt: Option<Vec<(usize, Fst)>> = None;
    let mut dev_latt: Option<Vec<(usize, Fst)>> = None;
    let num_passes = config.passes.len();

    for (pi, pass) in config.passes.iter().enumerate() {
        let train_refs: Vec<(usize, &Fst)> = match &train_latt {
            None => data
                .train
                .iter()
                .enumerate()
                .map(|(i, u)| (i, &dense[&(u.post.num_frames() as u32)]))
                .collect(),
            Some(lattices) => lattices.iter().map(|(i, f)| (*i, f)).collect(),
        };
        let dev_refs: Vec<(usize, &Fst)> = match &dev_latt {
            None => data
                .dev
                .iter()
                .enumerate()
                .map(|(i, u)| (i, &dense[&(u.post.num_frames() as u32)]))
                .collect(),
            Some(lattices) => lattices.iter().map(|(i, f)| (*i, f)).collect(),
        };
        if train_refs.is_empty() {
            return Err(Error::InvalidInput(format!(
                "no training lattices remain entering pass {}",
                pi + 1
            )));
        }
        let train_utts: Vec<TrainUtterance> = train_refs
            .iter()
            .map(|&(i, fst)| TrainUtterance { post: &data.train[i].post, fst, gold: &data.train[i].gold })
            .collect();
        let dev_utts: Vec<TrainUtterance> = dev_refs
            .iter()
            .map(|&(i, fst)| TrainUtterance { post: &data.dev[i].post, fst, gold: &data.dev[i].gold })
            .collect();
        let pass_bigram = pass
            .templates
            .contains(FeatureTemplate::BigramLm)
            .then(|| bigram.clone().expect("estimated above"));
        let initial = Model::new(pass.templates.clone(), config.alphabet.clone(), pass_bigram)?;
        let outcome = train_pass(initial, &train_utts, &dev_utts, &pass.train)?;
        let mut pass_stats = PassStats {
            pass: pi + 1,
            train_seconds: outcome.metrics.iter().map(|m| m.seconds).sum(),
            best_epoch: outcome.best_epoch,
            dev_per: selected_dev_per(&outcome),
            substituted: outcome.substituted_utterances,
            epochs: outcome.metrics,
            prune: None,
        };
        let model = outcome.model;

        let mut next: Option<(Vec<(usize, Fst)>, Vec<(usize, Fst)>)> = None;
        if let Some(params) = pass.prune {
            let started = Instant::now();
            let mut dropped = Vec::new();
            let mut totals =
                PruneTotals { edges_before: 0, edges_after: 0, frames: 0, surviving_ref_len: 0 };
            let next_train =
                prune_set(&model, params, &data.train, &train_refs, &mut dropped, &mut totals)?;
            let next_dev = prune_set(&model, params, &data.dev, &dev_refs, &mut dropped, &mut totals)?;
            let elapsed = started.elapsed().as_secs_f64();
            let processed = train_refs.len() + dev_refs.len();
            if dropped.len() as f64 > config.abort_fraction * processed as f64 {
                let shown = dropped.iter().take(5).cloned().collect::<Vec<_>>().join(", ");
                return Err(Error::InvalidInput(format!(
                    "pass {} pruning emptied {}/{} lattices (tolerated fraction {}): {}",
                    pi + 1,
                    dropped.len(),
                    processed,
                    config.abort_fraction,
                    shown
                )));
            }
            let mut dev_distance = 0usize;
            let mut dev_ref_len = 0usize;
            for (i, fst) in &next_dev {
                let reference = data.dev[*i].gold.labels();
                dev_distance += oracle_error_rate(fst, &reference)?.distance;
                dev_ref_len += reference.len();
            }
            let named = next_train
                .iter()
                .map(|(i, f)| (data.train[*i].id.clone(), f.clone()))
                .chain(next_dev.iter().map(|(i, f)| (data.dev[*i].id.clone(), f.clone())))
                .collect();
            produced.push(named);
            pass_stats.prune = Some(PruneStats {
                params,
                edges_before: totals.edges_before,
                edges_after: totals.edges_after,
                density: totals.edges_after as f64 / totals.surviving_ref_len.max(1) as f64,
                dev_oracle: (dev_ref_len > 0).then(|| dev_distance as f64 / dev_ref_len as f64),
                rtf: real_time_factor(elapsed, audio_seconds(totals.frames))?,
                dropped,
            });
            next = Some((next_train, next_dev));
        }
        drop(train_utts);
        drop(dev_utts);
        drop(train_refs);
        drop(dev_refs);
        if let Some((t, d)) = next {
            train_latt = Some(t);
            dev_latt = Some(d);
        }
        models.push(model);
        stats.push(pass_stats);
        let _ = num_passes;
    }
    Ok(CascadeTrainOutcome { models, passes: stats, lattices: produced })
}

/// One utterance's multi-pass decode.
#[derive(Clone, Debug)]
pub struct CascadeDecode {
    pub path: SegmentPath,
    /// Final-pass score of the returned path.
    pub score: f64,
    /// Wall time per pass: rescore plus prune for intermediate passes, the
    /// final decode for the last. The first pass also carries the cost of
    /// building the dense hypothesis space.
    pub pass_seconds: Vec<f64>,
    /// Classifier feed-forward time; zero when decoding from posteriors.
    pub feed_forward_seconds: f64,
    /// Edge featurizations performed per pass.
    pub featurizations: Vec<usize>,
    /// Set when pruning emptied the lattice after this 1-based pass and its
    /// own best path was returned instead.
    pub fallback_after: Option<usize>,
    pub num_frames: usize,
}

/// Decodes one utterance through every pass: pass 1 scores the dense space
/// and prunes, intermediate passes rescore and prune, the final pass
/// returns its best path.
pub fn run_cascade_decode(
    models: &[Model],
    config: &CascadeConfig,
    post: &PosteriorMatrix,
) -> Result<CascadeDecode> {
    config.validate()?;
    if models.len() != config.passes.len() {
        return Err(Error::Config(format!(
            "cascade declares {} passes but {} models were supplied",
            config.passes.len(),
            models.len()
        )));
    }
    if post.num_labels() != config.alphabet.len() {
        return Err(Error::InvalidInput(format!(
            "posteriors cover {} labels, alphabet has {}",
            post.num_labels(),
            config.alphabet.len()
        )));
    }
    let num_frames = post.num_frames();
    // Building the dense space is charged to the first pass so the per-pass
    // times account for all decoding work.
    let build_started = Instant::now();
    let mut fst = build_hypothesis_space(num_frames as u32, config.alphabet.len(), config.max_duration)?;
    let mut carried_seconds = build_started.elapsed().as_secs_f64();
    let mut pass_seconds = Vec::new();
    let mut featurizations = Vec::new();
    let last = config.passes.len() - 1;
    for (pi, (model, pass)) in models.iter().zip(&config.passes).enumerate() {
        let started = Instant::now();
        let base = std::mem::take(&mut carried_seconds);
        if pi == last {
            let decoded = decode(model, post, &fst)?;
            pass_seconds.push(base + started.elapsed().as_secs_f64());
            featurizations.push(decoded.featurizations);
            return Ok(CascadeDecode {
                path: decoded.path,
                score: decoded.score,
                pass_seconds,
                feed_forward_seconds: 0.0,
                featurizations,
                fallback_after: None,
                num_frames,
            });
        }
        let rescored = rescore(model, post, &fst)?;
        let pruned = prune(&rescored.fst, pass.prune.expect("validated: non-final passes prune"))?;
        featurizations.push(rescored.featurizations);
        if pruned.fst.is_empty() {
            let (edges, score) = best_path_edges(&rescored.fst)?;
            let path = rescored.fst.path(&edges)?;
            pass_seconds.push(base + started.elapsed().as_secs_f64());
            return Ok(CascadeDecode {
                path,
                score,
                pass_seconds,
                feed_forward_seconds: 0.0,
                featurizations,
                fallback_after: Some(pi + 1),
                num_frames,
            });
        }
        pass_seconds.push(base + started.elapsed().as_secs_f64());
        fst = pruned.fst;
    }
    unreachable!("validated: cascade has at least one pass")
}

/// Runs the frame classifier (honoring the configured subsampling parity)
/// and then decodes, reporting the feed-forward time separately.
pub fn run_cascade_decode_frames(
    models: &[Model],
    config: &CascadeConfig,
    clf: &FrameClassifier,
    frames: &FrameMatrix,
) -> Result<CascadeDecode> {
    let started = Instant::now();
    let post = match config.subsample {
        None => classify(clf, frames)?,
        Some(parity) => subsample_forward(clf, frames, parity)?,
    };
    let feed_forward_seconds = started.elapsed().as_secs_f64();
    let mut out = run_cascade_decode(models, config, &post)?;
    out.feed_forward_seconds = feed_forward_seconds;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Label;
    use crate::synth::{generate, DurationModel, GeneratorSpec, TransitionTable};

    fn log_softmax_posteriors(frames: &FrameMatrix, scale: f64) -> PosteriorMatrix {
        let (t, n) = (frames.num_frames(), frames.dim());
        let mut values = Vec::with_capacity(t * n);
        for frame in 1..=t as u32 {
            let row: Vec<f64> = frames.row(frame).iter().map(|v| v * scale).collect();
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
            values.extend(row.iter().map(|v| v - lse));
        }
        PosteriorMatrix::new(t, n, values).unwrap()
    }

    fn synthetic_data(
        num_labels: usize,
        train: u32,
        dev: u32,
        sigma: f64,
        seed: u64,
    ) -> (LabelAlphabet, CascadeData) {
        let spec = GeneratorSpec {
            num_labels,
            duration: DurationModel::new(2, 4, 1.0).unwrap(),
            transitions: TransitionTable::uniform(num_labels).unwrap(),
            sigma,
            min_segments: 2,
            max_segments: 8,
            num_utterances: train + dev,
            seed,
        };
        let utts = generate(&spec).unwrap();
        let alphabet = crate::synth::label_alphabet(num_labels).unwrap();
        let mut data = CascadeData { train: Vec::new(), dev: Vec::new() };
        for (i, (frames, gold)) in utts.into_iter().enumerate() {
            let utt = CascadeUtterance {
                id: format!("u{i:03}"),
                post: log_softmax_posteriors(&frames, 4.0),
                gold,
            };
            if (i as u32) < train {
                data.train.push(utt);
            } else {
                data.dev.push(utt);
            }
        }
        (alphabet, data)
    }

    #[test]
    fn the_default_recipe_is_a_three_pass_cascade() {
        let alphabet = crate::synth::label_alphabet(4).unwrap();
        let config = CascadeConfig::default_recipe(alphabet).unwrap();
        assert_eq!(config.passes.len(), 3);
        let p1 = &config.passes[0];
        assert_eq!(p1.templates.entries().len(), 2);
        assert!(p1.templates.contains(FeatureTemplate::LabelPosteriorSum));
        assert!(p1.templates.contains(FeatureTemplate::Bias));
        assert!(p1.templates.entries().iter().all(|e| !e.lexicalized));
        assert_eq!(p1.prune, Some(PruneParams::new(PruneMethod::Edge, 0.85).unwrap()));
        let p2 = &config.passes[1];
        assert!(p2.templates.contains(FeatureTemplate::LatticeScore));
        assert!(p2.templates.contains(FeatureTemplate::BoundaryPosteriors));
        assert_eq!(p2.prune, Some(PruneParams::new(PruneMethod::Edge, 0.3).unwrap()));
        let p3 = &config.passes[2];
        assert!(p3.templates.contains(FeatureTemplate::BigramLm));
        assert!(p3.prune.is_none());
        assert_eq!(config.max_duration, 8);
        assert!(config.subsample.is_none());
    }

    #[test]
    fn configs_parse_overrides_and_reject_malformed_input() {
        let alphabet = crate::synth::label_alphabet(3).unwrap();
        let text = "passes 2\nmax_duration 4\nsubsample even\nabort_fraction 0.1\n\
                    pass1.epochs 2\npass1.prune edge 0.5\npass2.templates lattice_score bias\npass2.step_size 0.05\n";
        let config = parse_cascade_config(text, alphabet.clone()).unwrap();
        assert_eq!(config.passes.len(), 2);
        assert_eq!(config.max_duration, 4);
        assert_eq!(config.subsample, Some(Parity::Even));
        assert_eq!(config.passes[0].train.epochs, 2);
        assert_eq!(config.passes[0].prune, Some(PruneParams::new(PruneMethod::Edge, 0.5).unwrap()));
        assert_eq!(config.passes[1].templates.entries().len(), 2);
        assert_eq!(config.passes[1].train.step_size, 0.05);
        assert!(config.passes[1].prune.is_none());

        for bad in [
            "passes 0\n",
            "mystery 1\n",
            "pass0.epochs 1\n",
            "pass5.epochs 1\n",
            "pass1.mystery 1\n",
            "pass1.prune edge\n",
            "pass1.prune none\n",     // non-final pass must prune
            "pass3.prune edge 0.5\n", // final pass must not
            "subsample sometimes\n",
            "abort_fraction 1.5\n",
        ] {
            assert!(parse_cascade_config(bad, alphabet.clone()).is_err(), "accepted: {bad}");
        }
    }

    #[test]
    fn a_two_pass_cascade_trains_prunes_and_stamps_scores() {
        let (alphabet, data) = synthetic_data(3, 24, 6, 0.25, 13);
        let text = "passes 2\nmax_duration 4\n\
                    pass1.epochs 2\npass1.prune edge 0.5\n\
                    pass2.templates label_posterior_sum:lex lattice_score bias\npass2.epochs 2\n";
        let config = parse_cascade_config(text, alphabet).unwrap();
        let outcome = run_cascade_train(&config, &data).unwrap();
        assert_eq!(outcome.models.len(), 2);
        assert_eq!(outcome.passes.len(), 2);
        assert_eq!(outcome.lattices.len(), 1);
        let p1 = &outcome.passes[0];
        assert_eq!(p1.epochs.len(), 2);
        assert!(p1.dev_per.is_some());
        let prune_stats = p1.prune.as_ref().unwrap();
        assert!(prune_stats.edges_after < prune_stats.edges_before);
        assert!(prune_stats.dev_oracle.is_some());
        assert!(prune_stats.rtf > 0.0);
        assert!(outcome.passes[1].prune.is_none());

        // Stamped lattices carry the first-pass model's scores as weights.
        let model = &outcome.models[0];
        let by_id = |id: &str| {
            data.train
                .iter()
                .chain(&data.dev)
                .find(|u| u.id == id)
                .unwrap()
        };
        for (id, fst) in &outcome.lattices[0] {
            let utt = by_id(id);
            let rescored = rescore(model, &utt.post, fst).unwrap();
            for e in 0..fst.num_edges() as u32 {
                // Lattice-score inputs differ, but this pass's templates
                // ignore them, so rescoring reproduces the stamped weights.
                let got = rescored.fst.edge(e).weight;
                let want = fst.edge(e).weight;
                assert!((got - want).abs() < 1e-12, "{id} edge {e}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn alpha_one_edge_pruning_reduces_the_cascade_to_pass_one() {
        let (alphabet, data) = synthetic_data(3, 16, 4, 0.3, 29);
        let text = "passes 2\nmax_duration 4\n\
                    pass1.epochs 2\npass1.prune edge 1.0\n\
                    pass2.templates lattice_score bias\npass2.epochs 1\n";
        let config = parse_cascade_config(text, alphabet).unwrap();
        let outcome = run_cascade_train(&config, &data).unwrap();
        let dense = build_hypothesis_space(
            data.dev[0].post.num_frames() as u32,
            config.alphabet.len(),
            config.max_duration,
        )
        .unwrap();
        for utt in &data.dev {
            let cascade = run_cascade_decode(&outcome.models, &config, &utt.post).unwrap();
            let space = if utt.post.num_frames() == dense.num_frames() as usize {
                dense.clone()
            } else {
                build_hypothesis_space(
                    utt.post.num_frames() as u32,
                    config.alphabet.len(),
                    config.max_duration,
                )
                .unwrap()
            };
            let plain = decode(&outcome.models[0], &utt.post, &space).unwrap();
            assert_eq!(cascade.path, plain.path);
        }
    }

    #[test]
    fn a_single_pass_cascade_decodes_like_plain_decoding() {
        let (alphabet, data) = synthetic_data(3, 4, 1, 0.2, 5);
        let config = parse_cascade_config("passes 1\nmax_duration 4\n", alphabet).unwrap();
        let templates = config.passes[0].templates.clone();
        let model = Model::new(templates, config.alphabet.clone(), None).unwrap();
        let dim = model.dimension();
        let model = model.with_theta((0..dim).map(|i| 0.5 + i as f64).collect()).unwrap();
        let utt = &data.train[0];
        let out = run_cascade_decode(std::slice::from_ref(&model), &config, &utt.post).unwrap();
        let dense =
            build_hypothesis_space(utt.post.num_frames() as u32, config.alphabet.len(), 4).unwrap();
        let plain = decode(&model, &utt.post, &dense).unwrap();
        assert_eq!(out.path, plain.path);
        assert_eq!(out.score, plain.score);
        assert_eq!(out.featurizations, vec![dense.num_edges()]);
        assert!(out.fallback_after.is_none());
        assert_eq!(out.pass_seconds.len(), 1);
    }

    #[test]
    fn decoding_falls_back_when_pruning_empties_the_lattice() {
        // Beam pruning at alpha 1 keeps only edges strictly above the
        // per-vertex maximum — nothing survives.
        let (alphabet, data) = synthetic_data(3, 4, 1, 0.2, 31);
        let text = "passes 2\nmax_duration 4\npass1.prune beam 1.0\npass2.templates lattice_score bias\n";
        let config = parse_cascade_config(text, alphabet).unwrap();
        let p1 = Model::new(config.passes[0].templates.clone(), config.alphabet.clone(), None)
            .unwrap()
            .with_theta(vec![1.0, -0.5])
            .unwrap();
        let p2 = Model::new(config.passes[1].templates.clone(), config.alphabet.clone(), None).unwrap();
        let utt = &data.train[0];
        let out = run_cascade_decode(&[p1.clone(), p2], &config, &utt.post).unwrap();
        assert_eq!(out.fallback_after, Some(1));
        let dense =
            build_hypothesis_space(utt.post.num_frames() as u32, config.alphabet.len(), 4).unwrap();
        let plain = decode(&p1, &utt.post, &dense).unwrap();
        assert_eq!(out.path, plain.path);
        assert_eq!(out.score, plain.score);
        assert_eq!(out.pass_seconds.len(), 1);
    }

    #[test]
    fn training_aborts_when_pruning_empties_too_many_lattices() {
        let (alphabet, data) = synthetic_data(3, 6, 2, 0.2, 47);
        let text = "passes 2\nmax_duration 4\npass1.epochs 1\npass1.prune beam 1.0\n\
                    pass2.templates lattice_score bias\n";
        let config = parse_cascade_config(text, alphabet).unwrap();
        let err = run_cascade_train(&config, &data).unwrap_err().to_string();
        assert!(err.contains("emptied"), "unexpected error: {err}");
    }

    #[test]
    fn decode_rejects_mismatched_model_counts() {
        let (alphabet, data) = synthetic_data(3, 2, 1, 0.2, 3);
        let config = parse_cascade_config("passes 1\nmax_duration 4\n", alphabet).unwrap();
        let model =
            Model::new(config.passes[0].templates.clone(), config.alphabet.clone(), None).unwrap();
        let err = run_cascade_decode(&[model.clone(), model], &config, &data.train[0].post);
        assert!(err.is_err());
    }

    #[test]
    fn stamped_lattices_round_trip_through_files_without_changing_decodes() {
        let (alphabet, data) = synthetic_data(3, 12, 3, 0.25, 61);
        let text = "passes 2\nmax_duration 4\npass1.epochs 1\npass1.prune edge 0.5\n\
                    pass2.templates label_posterior_sum lattice_score bias\npass2.epochs 1\n";
        let config = parse_cascade_config(text, alphabet).unwrap();
        let outcome = run_cascade_train(&config, &data).unwrap();
        let model2 = &outcome.models[1];
        for (id, fst) in &outcome.lattices[0] {
            let utt = data.train.iter().chain(&data.dev).find(|u| &u.id == id).unwrap();
            let mut buf = Vec::new();
            crate::lattice::write_lattice(fst, &config.alphabet, &mut buf).unwrap();
            let reread = crate::lattice::read_lattice(buf.as_slice(), &config.alphabet).unwrap();
            let direct = decode(model2, &utt.post, fst).unwrap();
            let roundtrip = decode(model2, &utt.post, &reread).unwrap();
            assert_eq!(direct.path, roundtrip.path);
            assert_eq!(direct.score.to_bits(), roundtrip.score.to_bits());
        }
    }
}
