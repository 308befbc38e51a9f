//! Segment feature functions, feature template sets, linear models, and the
//! smoothed bigram label language model.
//!
//! A template maps a segment (plus per-frame log-posteriors and auxiliary
//! inputs) to a fixed block of feature slots. A template set concatenates its
//! templates' blocks in declaration order into one dense index space; a
//! lexicalized template repeats its block once per label and emits into the
//! copy indexed by the segment's label, giving each label its own weights.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use crate::acoustics::PosteriorMatrix;
use crate::error::{Error, Result};
use crate::lattice::{Label, LabelAlphabet, Segment, SegmentPath};

/// The available segment feature templates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FeatureTemplate {
    /// Sum over the segment's frames of the log posterior of its label.
    LabelPosteriorSum,
    /// Per-alphabet-label mean of log posteriors over the segment's frames.
    PosteriorAverage,
    /// Full log-posterior vectors at fixed relative positions in the segment.
    PosteriorSamples,
    /// Full log-posterior vectors at the first frame, the last frame, and
    /// the frame preceding the segment (zeros when there is no such frame).
    BoundaryPosteriors,
    /// One-hot duration indicator, clamped to the maximum duration.
    LengthIndicator,
    /// Constant 1.
    Bias,
    /// The edge weight stamped on the incoming lattice by the previous pass.
    LatticeScore,
    /// Smoothed bigram log probability of the segment's label given the
    /// previous segment's label (or the start of the utterance).
    BigramLm,
}

impl FeatureTemplate {
    pub const ALL: [FeatureTemplate; 8] = [
        FeatureTemplate::LabelPosteriorSum,
        FeatureTemplate::PosteriorAverage,
        FeatureTemplate::PosteriorSamples,
        FeatureTemplate::BoundaryPosteriors,
        FeatureTemplate::LengthIndicator,
        FeatureTemplate::Bias,
        FeatureTemplate::LatticeScore,
        FeatureTemplate::BigramLm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FeatureTemplate::LabelPosteriorSum => "label_posterior_sum",
            FeatureTemplate::PosteriorAverage => "posterior_average",
            FeatureTemplate::PosteriorSamples => "posterior_samples",
            FeatureTemplate::BoundaryPosteriors => "boundary_posteriors",
            FeatureTemplate::LengthIndicator => "length_indicator",
            FeatureTemplate::Bias => "bias",
            FeatureTemplate::LatticeScore => "lattice_score",
            FeatureTemplate::BigramLm => "bigram_lm",
        }
    }

    /// Slots this template emits before lexicalization.
    fn base_dim(self, num_labels: usize, num_samples: usize, max_duration: u32) -> usize {
        match self {
            FeatureTemplate::LabelPosteriorSum => 1,
            FeatureTemplate::PosteriorAverage => num_labels,
            FeatureTemplate::PosteriorSamples => num_samples * num_labels,
            FeatureTemplate::BoundaryPosteriors => 3 * num_labels,
            FeatureTemplate::LengthIndicator => max_duration as usize,
            FeatureTemplate::Bias => 1,
            FeatureTemplate::LatticeScore => 1,
            FeatureTemplate::BigramLm => 1,
        }
    }
}

impl FromStr for FeatureTemplate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FeatureTemplate::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown feature template '{s}'")))
    }
}

/// A template together with its lexicalization flag.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TemplateSpec {
    pub template: FeatureTemplate,
    pub lexicalized: bool,
}

impl TemplateSpec {
    pub fn plain(template: FeatureTemplate) -> Self {
        TemplateSpec { template, lexicalized: false }
    }

    pub fn lexicalized(template: FeatureTemplate) -> Self {
        TemplateSpec { template, lexicalized: true }
    }
}

impl fmt::Display for TemplateSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.template.name())?;
        if self.lexicalized {
            write!(f, ":lex")?;
        }
        Ok(())
    }
}

impl FromStr for TemplateSpec {
    /// Parses `name` or `name:lex`.
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(':') {
            None => Ok(TemplateSpec::plain(s.parse()?)),
            Some((name, "lex")) => Ok(TemplateSpec::lexicalized(name.parse()?)),
            Some((_, suffix)) => Err(Error::Config(format!("unknown template suffix ':{suffix}'"))),
        }
    }
}

/// An ordered, duplicate-free list of templates plus the parameters their
/// dimensions depend on (sample count and maximum duration). The feature
/// dimension additionally depends on the label alphabet size, passed where
/// needed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FeatureTemplateSet {
    entries: Vec<TemplateSpec>,
    num_samples: usize,
    max_duration: u32,
}

impl FeatureTemplateSet {
    pub fn new(entries: Vec<TemplateSpec>, num_samples: usize, max_duration: u32) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Config("empty feature template set".into()));
        }
        for (i, e) in entries.iter().enumerate() {
            if entries[..i].iter().any(|p| p.template == e.template) {
                return Err(Error::Config(format!("duplicate feature template '{}'", e.template.name())));
            }
        }
        if num_samples == 0 {
            return Err(Error::Config("posterior sample count must be at least 1".into()));
        }
        if max_duration == 0 {
            return Err(Error::Config("maximum duration must be at least 1".into()));
        }
        Ok(FeatureTemplateSet { entries, num_samples, max_duration })
    }

    /// Parses a whitespace-separated list of `name` / `name:lex` entries.
    pub fn parse_list(list: &str, num_samples: usize, max_duration: u32) -> Result<Self> {
        let entries: Vec<TemplateSpec> = list
            .split_ascii_whitespace()
            .map(TemplateSpec::from_str)
            .collect::<Result<_>>()?;
        FeatureTemplateSet::new(entries, num_samples, max_duration)
    }

    pub fn entries(&self) -> &[TemplateSpec] {
        &self.entries
    }

    pub fn num_samples(&self) -> usize {
        self.num_samples
    }

    pub fn max_duration(&self) -> u32 {
        self.max_duration
    }

    pub fn contains(&self, template: FeatureTemplate) -> bool {
        self.entries.iter().any(|e| e.template == template)
    }

    fn block_dim(&self, spec: TemplateSpec, num_labels: usize) -> usize {
        let base = spec.template.base_dim(num_labels, self.num_samples, self.max_duration);
        if spec.lexicalized {
            base * num_labels
        } else {
            base
        }
    }

    /// Total feature dimension for an alphabet of `num_labels` labels.
    pub fn dimension(&self, num_labels: usize) -> usize {
        self.entries.iter().map(|&e| self.block_dim(e, num_labels)).sum()
    }

    /// Relative positions (in `[0, 1]`) at which posterior samples are taken.
    pub fn sample_positions(&self) -> Vec<f64> {
        if self.num_samples == 1 {
            vec![0.0]
        } else {
            (0..self.num_samples)
                .map(|k| k as f64 / (self.num_samples - 1) as f64)
                .collect()
        }
    }
}

impl fmt::Display for FeatureTemplateSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.entries.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

/// Sparse feature vector: (index, value) pairs with strictly increasing
/// indices.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FeatureVec {
    entries: Vec<(usize, f64)>,
}

impl FeatureVec {
    pub fn new() -> Self {
        Self::default()
    }

    fn push(&mut self, index: usize, value: f64) {
        debug_assert!(self.entries.last().is_none_or(|&(i, _)| i < index));
        self.entries.push((index, value));
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.entries.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn dot(&self, theta: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, v)| theta[i] * v).sum()
    }

    /// Adds `scale` times this vector into `dense`.
    pub fn add_scaled_into(&self, scale: f64, dense: &mut [f64]) {
        for &(i, v) in &self.entries {
            dense[i] += scale * v;
        }
    }

    /// Merges two sparse vectors (used to accumulate path features).
    pub fn accumulate(vectors: impl IntoIterator<Item = Self>) -> Vec<(usize, f64)> {
        let mut all: Vec<(usize, f64)> = vectors.into_iter().flat_map(|v| v.entries).collect();
        all.sort_by_key(|&(i, _)| i);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(all.len());
        for (i, v) in all {
            match merged.last_mut() {
                Some((j, acc)) if *j == i => *acc += v,
                _ => merged.push((i, v)),
            }
        }
        merged
    }
}

/// The label context preceding a segment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum History {
    /// The segment starts the utterance.
    Start,
    /// The previous segment carried this label.
    Label(Label),
}

/// Auxiliary per-edge inputs consumed by context-dependent templates.
/// `None` means "not supplied": featurizing with an active template whose
/// auxiliary input is absent is an error, never a silent zero.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Aux {
    pub prev: Option<History>,
    pub lattice_score: Option<f64>,
}

impl Aux {
    pub fn with_prev(prev: History) -> Self {
        Aux { prev: Some(prev), ..Default::default() }
    }
}

/// Sum over the segment's frames of the log posterior of its label.
pub fn phi_label_posterior(post: &PosteriorMatrix, seg: Segment) -> Result<f64> {
    check_segment(post, seg)?;
    Ok((seg.start + 1..=seg.end).map(|k| post.log_prob(k, seg.label)).sum())
}

fn check_segment(post: &PosteriorMatrix, seg: Segment) -> Result<()> {
    if seg.end <= seg.start || seg.end as usize > post.num_frames() {
        return Err(Error::InvalidInput(format!(
            "segment ({},{}) outside utterance of {} frames",
            seg.start,
            seg.end,
            post.num_frames()
        )));
    }
    if seg.label as usize >= post.num_labels() {
        return Err(Error::UnknownLabel(format!("label id {}", seg.label)));
    }
    Ok(())
}

/// Computes the sparse feature vector of one segment under a template set.
///
/// Deterministic and pure: identical inputs produce bitwise-identical
/// output. Lexicalized templates emit into the block indexed by the
/// segment's label.
pub fn featurize(
    templates: &FeatureTemplateSet,
    post: &PosteriorMatrix,
    seg: Segment,
    aux: &Aux,
    bigram: Option<&BigramTable>,
) -> Result<FeatureVec> {
    check_segment(post, seg)?;
    let num_labels = post.num_labels();
    let mut out = FeatureVec::new();
    let mut offset = 0usize;
    for &spec in &templates.entries {
        let base = spec.template.base_dim(num_labels, templates.num_samples, templates.max_duration);
        let slot0 = if spec.lexicalized {
            offset + seg.label as usize * base
        } else {
            offset
        };
        match spec.template {
            FeatureTemplate::LabelPosteriorSum => {
                out.push(slot0, phi_label_posterior(post, seg)?);
            }
            FeatureTemplate::PosteriorAverage => {
                let dur = seg.duration() as f64;
                for l in 0..num_labels {
                    let sum: f64 = (seg.start + 1..=seg.end).map(|k| post.log_prob(k, l as Label)).sum();
                    out.push(slot0 + l, sum / dur);
                }
            }
            FeatureTemplate::PosteriorSamples => {
                let span = (seg.duration() - 1) as f64;
                for (j, p) in templates.sample_positions().into_iter().enumerate() {
                    let frame = seg.start + 1 + (p * span).round() as u32;
                    for l in 0..num_labels {
                        out.push(slot0 + j * num_labels + l, post.log_prob(frame, l as Label));
                    }
                }
            }
            FeatureTemplate::BoundaryPosteriors => {
                // First frame inside, last frame inside, frame just before.
                let frames = [Some(seg.start + 1), Some(seg.end), (seg.start > 0).then_some(seg.start)];
                for (j, frame) in frames.into_iter().enumerate() {
                    let Some(frame) = frame else { continue };
                    for l in 0..num_labels {
                        out.push(slot0 + j * num_labels + l, post.log_prob(frame, l as Label));
                    }
                }
            }
            FeatureTemplate::LengthIndicator => {
                let bucket = seg.duration().min(templates.max_duration);
                out.push(slot0 + bucket as usize - 1, 1.0);
            }
            FeatureTemplate::Bias => {
                out.push(slot0, 1.0);
            }
            FeatureTemplate::LatticeScore => {
                let score = aux.lattice_score.ok_or(Error::MissingAux("previous-pass lattice score"))?;
                out.push(slot0, score);
            }
            FeatureTemplate::BigramLm => {
                let prev = aux.prev.ok_or(Error::MissingAux("previous segment label"))?;
                let table = bigram.ok_or(Error::MissingAux("bigram language model table"))?;
                if table.num_labels != num_labels {
                    return Err(Error::DimensionMismatch(format!(
                        "bigram table over {} labels, posteriors over {num_labels}",
                        table.num_labels
                    )));
                }
                out.push(slot0, table.log_prob(prev, seg.label));
            }
        }
        offset += templates.block_dim(spec, num_labels);
    }
    Ok(out)
}

/// Add-one-smoothed bigram label model including a sentence-boundary symbol.
///
/// Conditionals are `p(next | prev)` where `prev` ranges over labels plus
/// utterance-start and `next` over labels plus utterance-end, so each row is
/// a distribution over `|L| + 1` outcomes.
#[derive(Clone, Debug, PartialEq)]
pub struct BigramTable {
    num_labels: usize,
    /// `(|L| + 1) × (|L| + 1)` row-major log probabilities; row `|L|` is the
    /// start history, column `|L|` the end symbol.
    log_probs: Vec<f64>,
}

impl BigramTable {
    /// Estimates the table from gold label sequences with add-one smoothing.
    pub fn estimate<'a, I>(sequences: I, num_labels: usize) -> Result<Self>
    where
        I: IntoIterator<Item = &'a [Label]>,
    {
        if num_labels == 0 {
            return Err(Error::InvalidInput("empty label alphabet".into()));
        }
        let rows = num_labels + 1;
        let cols = num_labels + 1;
        let mut counts = vec![0u64; rows * cols];
        let mut seen = false;
        for seq in sequences {
            seen = true;
            let mut prev = num_labels; // start history
            for &l in seq {
                if l as usize >= num_labels {
                    return Err(Error::UnknownLabel(format!("label id {l}")));
                }
                counts[prev * cols + l as usize] += 1;
                prev = l as usize;
            }
            counts[prev * cols + num_labels] += 1; // end symbol
        }
        if !seen {
            return Err(Error::InvalidInput("empty corpus for bigram estimation".into()));
        }
        let mut log_probs = vec![0.0; rows * cols];
        for r in 0..rows {
            let row = &counts[r * cols..(r + 1) * cols];
            let total: u64 = row.iter().sum();
            let denom = (total + cols as u64) as f64;
            for c in 0..cols {
                log_probs[r * cols + c] = ((row[c] + 1) as f64 / denom).ln();
            }
        }
        Ok(BigramTable { num_labels, log_probs })
    }

    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    fn row_index(&self, prev: History) -> usize {
        match prev {
            History::Start => self.num_labels,
            History::Label(l) => l as usize,
        }
    }

    /// Log conditional probability of `next` given the history.
    pub fn log_prob(&self, prev: History, next: Label) -> f64 {
        self.log_probs[self.row_index(prev) * (self.num_labels + 1) + next as usize]
    }

    /// Log conditional probability of the utterance ending after `prev`.
    pub fn log_end_prob(&self, prev: History) -> f64 {
        self.log_probs[self.row_index(prev) * (self.num_labels + 1) + self.num_labels]
    }

    fn row(&self, r: usize) -> &[f64] {
        let cols = self.num_labels + 1;
        &self.log_probs[r * cols..(r + 1) * cols]
    }
}

/// Estimates the bigram language model from gold segmentations.
pub fn estimate_bigram_lm(corpus: &[SegmentPath], num_labels: usize) -> Result<BigramTable> {
    let sequences: Vec<Vec<Label>> = corpus.iter().map(|p| p.labels()).collect();
    BigramTable::estimate(sequences.iter().map(Vec::as_slice), num_labels)
}

/// A linear segmental model: weights over a template set's index space,
/// bound to a label alphabet, plus the bigram table when the set uses it.
#[derive(Clone, Debug)]
pub struct Model {
    templates: FeatureTemplateSet,
    alphabet: LabelAlphabet,
    theta: Vec<f64>,
    bigram: Option<BigramTable>,
}

impl Model {
    /// A zero-weight model. The bigram table is required exactly when the
    /// template set contains the bigram feature.
    pub fn new(templates: FeatureTemplateSet, alphabet: LabelAlphabet, bigram: Option<BigramTable>) -> Result<Self> {
        if alphabet.is_empty() {
            return Err(Error::InvalidInput("empty label alphabet".into()));
        }
        if templates.contains(FeatureTemplate::BigramLm) && bigram.is_none() {
            return Err(Error::MissingAux("bigram language model table"));
        }
        if let Some(t) = &bigram {
            if t.num_labels != alphabet.len() {
                return Err(Error::DimensionMismatch(format!(
                    "bigram table over {} labels, alphabet has {}",
                    t.num_labels,
                    alphabet.len()
                )));
            }
        }
        let dim = templates.dimension(alphabet.len());
        Ok(Model { templates, alphabet, theta: vec![0.0; dim], bigram })
    }

    pub fn with_theta(mut self, theta: Vec<f64>) -> Result<Self> {
        if theta.len() != self.dimension() {
            return Err(Error::DimensionMismatch(format!(
                "{} weights for a model of dimension {}",
                theta.len(),
                self.dimension()
            )));
        }
        if let Some(v) = theta.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("model weight {v}")));
        }
        self.theta = theta;
        Ok(self)
    }

    pub fn templates(&self) -> &FeatureTemplateSet {
        &self.templates
    }

    pub fn alphabet(&self) -> &LabelAlphabet {
        &self.alphabet
    }

    pub fn bigram(&self) -> Option<&BigramTable> {
        self.bigram.as_ref()
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn theta_mut(&mut self) -> &mut [f64] {
        &mut self.theta
    }

    pub fn dimension(&self) -> usize {
        self.templates.dimension(self.alphabet.len())
    }

    pub fn featurize(&self, post: &PosteriorMatrix, seg: Segment, aux: &Aux) -> Result<FeatureVec> {
        self.check_posteriors(post)?;
        featurize(&self.templates, post, seg, aux, self.bigram.as_ref())
    }

    /// Linear score of one segment: `θ · φ(segment)`.
    pub fn score(&self, post: &PosteriorMatrix, seg: Segment, aux: &Aux) -> Result<f64> {
        Ok(self.featurize(post, seg, aux)?.dot(&self.theta))
    }

    fn check_posteriors(&self, post: &PosteriorMatrix) -> Result<()> {
        if post.num_labels() != self.alphabet.len() {
            return Err(Error::DimensionMismatch(format!(
                "posteriors over {} labels, model alphabet has {}",
                post.num_labels(),
                self.alphabet.len()
            )));
        }
        Ok(())
    }
}

fn write_bigram_rows<W: Write>(table: &BigramTable, alphabet: &LabelAlphabet, out: &mut W) -> Result<()> {
    let rows = table.num_labels + 1;
    for r in 0..rows {
        let name = if r == table.num_labels { "<s>" } else { alphabet.name(r as Label) };
        write!(out, "h {name}")?;
        for v in table.row(r) {
            write!(out, " {v:.16e}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

fn read_bigram_rows<I>(lines: &mut I, alphabet: &LabelAlphabet) -> Result<BigramTable>
where
    I: Iterator<Item = Result<(usize, String)>>,
{
    let n = alphabet.len();
    let cols = n + 1;
    let mut log_probs = Vec::with_capacity((n + 1) * cols);
    for r in 0..=n {
        let (lineno, line) = lines
            .next()
            .unwrap_or_else(|| Err(Error::parse(0, "truncated bigram table")))?;
        let mut fields = line.split_ascii_whitespace();
        if fields.next() != Some("h") {
            return Err(Error::parse(lineno, "expected bigram history row"));
        }
        let expect = if r == n { "<s>" } else { alphabet.name(r as Label) };
        let name = fields.next().ok_or_else(|| Error::parse(lineno, "missing history name"))?;
        if name != expect {
            return Err(Error::parse(lineno, format!("history row '{name}', expected '{expect}'")));
        }
        let row: Vec<f64> = fields
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|_| Error::parse(lineno, format!("bad value '{s}'")))
            })
            .collect::<Result<_>>()?;
        if row.len() != cols {
            return Err(Error::parse(lineno, format!("{} values, expected {cols}", row.len())));
        }
        if let Some(v) = row.iter().find(|v| !v.is_finite()) {
            return Err(Error::parse(lineno, format!("non-finite value {v}")));
        }
        log_probs.extend(row);
    }
    Ok(BigramTable { num_labels: n, log_probs })
}

/// Writes a standalone bigram table file, one row per history.
pub fn write_bigram_table<W: Write>(table: &BigramTable, alphabet: &LabelAlphabet, out: &mut W) -> Result<()> {
    if alphabet.len() != table.num_labels {
        return Err(Error::DimensionMismatch(format!(
            "alphabet of {} labels for a table over {}",
            alphabet.len(),
            table.num_labels
        )));
    }
    writeln!(out, "#bigram-lm")?;
    write!(out, "labels {}", alphabet.len())?;
    for name in alphabet.names() {
        write!(out, " {name}")?;
    }
    writeln!(out)?;
    write_bigram_rows(table, alphabet, out)
}

/// Reads the [`write_bigram_table`] format.
pub fn read_bigram_table<R: BufRead>(input: R) -> Result<(BigramTable, LabelAlphabet)> {
    let mut lines = nonempty_lines(input);
    let (lineno, magic) = next_line(&mut lines)?;
    if magic.trim() != "#bigram-lm" {
        return Err(Error::parse(lineno, "missing #bigram-lm header"));
    }
    let (lineno, labels_line) = next_line(&mut lines)?;
    let alphabet = parse_labels_line(lineno, &labels_line)?;
    let table = read_bigram_rows(&mut lines, &alphabet)?;
    Ok((table, alphabet))
}

/// Writes a model file: template set, lexicalization flags, alphabet, the
/// dimension parameters, dense weights, and the bigram table when present.
pub fn write_model<W: Write>(model: &Model, out: &mut W) -> Result<()> {
    writeln!(out, "#segmental-model")?;
    write!(out, "labels {}", model.alphabet.len())?;
    for name in model.alphabet.names() {
        write!(out, " {name}")?;
    }
    writeln!(out)?;
    writeln!(out, "max_duration {}", model.templates.max_duration)?;
    writeln!(out, "num_samples {}", model.templates.num_samples)?;
    writeln!(out, "templates {}", model.templates)?;
    writeln!(out, "dim {}", model.dimension())?;
    write!(out, "theta")?;
    for v in &model.theta {
        write!(out, " {v:.16e}")?;
    }
    writeln!(out)?;
    match &model.bigram {
        None => writeln!(out, "bigram none")?,
        Some(table) => {
            writeln!(out, "bigram table")?;
            write_bigram_rows(table, &model.alphabet, out)?;
        }
    }
    Ok(())
}

fn nonempty_lines<R: BufRead>(input: R) -> impl Iterator<Item = Result<(usize, String)>> {
    input.lines().enumerate().filter_map(|(i, l)| match l {
        Ok(s) if s.trim().is_empty() => None,
        Ok(s) => Some(Ok((i + 1, s))),
        Err(e) => Some(Err(Error::from(e))),
    })
}

fn next_line<I>(lines: &mut I) -> Result<(usize, String)>
where
    I: Iterator<Item = Result<(usize, String)>>,
{
    lines.next().unwrap_or_else(|| Err(Error::parse(0, "unexpected end of file")))
}

fn parse_labels_line(lineno: usize, line: &str) -> Result<LabelAlphabet> {
    let mut fields = line.split_ascii_whitespace();
    if fields.next() != Some("labels") {
        return Err(Error::parse(lineno, "expected labels line"));
    }
    let n: usize = fields
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::parse(lineno, "bad label count"))?;
    let alphabet = LabelAlphabet::from_names(fields)?;
    if alphabet.len() != n {
        return Err(Error::parse(lineno, "label count does not match names"));
    }
    Ok(alphabet)
}

/// Reads the [`write_model`] format.
pub fn read_model<R: BufRead>(input: R) -> Result<Model> {
    let mut lines = nonempty_lines(input);
    let (lineno, magic) = next_line(&mut lines)?;
    if magic.trim() != "#segmental-model" {
        return Err(Error::parse(lineno, "missing #segmental-model header"));
    }
    let (lineno, labels_line) = next_line(&mut lines)?;
    let alphabet = parse_labels_line(lineno, &labels_line)?;

    let scalar = |lines: &mut dyn Iterator<Item = Result<(usize, String)>>, key: &str| -> Result<(usize, String)> {
        let (lineno, line) = lines.next().unwrap_or_else(|| Err(Error::parse(0, "unexpected end of file")))?;
        let rest = line
            .strip_prefix(key)
            .ok_or_else(|| Error::parse(lineno, format!("expected {key} line")))?;
        Ok((lineno, rest.trim().to_string()))
    };
    let (lineno, v) = scalar(&mut lines, "max_duration")?;
    let max_duration: u32 = v.parse().map_err(|_| Error::parse(lineno, "bad max_duration"))?;
    let (lineno, v) = scalar(&mut lines, "num_samples")?;
    let num_samples: usize = v.parse().map_err(|_| Error::parse(lineno, "bad num_samples"))?;
    let (lineno, list) = scalar(&mut lines, "templates")?;
    let templates = FeatureTemplateSet::parse_list(&list, num_samples, max_duration)
        .map_err(|e| Error::parse(lineno, e.to_string()))?;
    let (lineno, v) = scalar(&mut lines, "dim")?;
    let dim: usize = v.parse().map_err(|_| Error::parse(lineno, "bad dim"))?;
    if dim != templates.dimension(alphabet.len()) {
        return Err(Error::parse(
            lineno,
            format!("dim {dim} does not match template set dimension {}", templates.dimension(alphabet.len())),
        ));
    }
    let (lineno, v) = scalar(&mut lines, "theta")?;
    let theta: Vec<f64> = v
        .split_ascii_whitespace()
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| Error::parse(lineno, format!("bad weight '{s}'")))
        })
        .collect::<Result<_>>()?;
    let (lineno, v) = scalar(&mut lines, "bigram")?;
    let bigram = match v.as_str() {
        "none" => None,
        "table" => Some(read_bigram_rows(&mut lines, &alphabet)?),
        other => return Err(Error::parse(lineno, format!("bad bigram marker '{other}'"))),
    };
    Model::new(templates, alphabet, bigram)?.with_theta(theta)
}
