//! Frame-level acoustic modeling: a log-linear frame classifier over context
//! windows, frame subsampling, and the posterior and frame-feature file
//! formats.
//!
//! Frames are numbered 1 to `T` throughout; matrix accessors take those
//! 1-based frame numbers. Posterior entries are log probabilities, so every
//! entry is nonpositive and each row log-sum-exps to 0.
//!
//! Subsampling halves classifier work: only every other frame is evaluated
//! and the skipped neighbor reuses the same output row. Even parity evaluates
//! frames 2, 4, ... and copies each result to the preceding odd frame (a
//! trailing odd frame is evaluated directly); odd parity evaluates frames
//! 1, 3, ... and copies each result to the following even frame. Either way
//! exactly `ceil(T / 2)` evaluations happen. During training the loss still
//! covers all frames, so an evaluated frame's gradient accumulates both its
//! own term and the copied frame's.

use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::lattice::{Label, LabelAlphabet};
use crate::ADAGRAD_EPS;

/// Which frames the classifier evaluates when subsampling.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

impl FromStr for Parity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "even" => Ok(Parity::Even),
            "odd" => Ok(Parity::Odd),
            _ => Err(Error::Config(format!("unknown parity '{s}'"))),
        }
    }
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Dense per-frame feature vectors, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameMatrix {
    num_frames: usize,
    dim: usize,
    values: Vec<f64>,
}

impl FrameMatrix {
    pub fn new(num_frames: usize, dim: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != num_frames * dim {
            return Err(Error::DimensionMismatch(format!(
                "{} values for {num_frames} frames of dimension {dim}",
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("frame feature {v}")));
        }
        Ok(FrameMatrix { num_frames, dim, values })
    }

    pub fn num_frames(&self) -> usize {
        self.num_frames
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Features of `frame` (1-based).
    pub fn row(&self, frame: u32) -> &[f64] {
        let i = frame as usize - 1;
        &self.values[i * self.dim..(i + 1) * self.dim]
    }
}

/// Per-frame label log-posteriors, row-major; rows log-sum-exp to 0.
#[derive(Clone, Debug, PartialEq)]
pub struct PosteriorMatrix {
    num_frames: usize,
    num_labels: usize,
    values: Vec<f64>,
}

impl PosteriorMatrix {
    /// Validates shape, finiteness, nonpositive entries, and normalization
    /// (each row's log-sum-exp within 1e-6 of 0).
    pub fn new(num_frames: usize, num_labels: usize, values: Vec<f64>) -> Result<Self> {
        let m = Self::new_unchecked(num_frames, num_labels, values)?;
        for frame in 1..=num_frames as u32 {
            let row = m.row(frame);
            if row.iter().any(|&v| v > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "frame {frame} has a positive log-posterior"
                )));
            }
            let lse = log_sum_exp(row);
            if lse.abs() > 1e-6 {
                return Err(Error::InvalidInput(format!(
                    "frame {frame} posteriors are not normalized (log-sum-exp {lse:.2e})"
                )));
            }
        }
        Ok(m)
    }

    /// Shape and finiteness checks only; used by the lenient file reader.
    fn new_unchecked(num_frames: usize, num_labels: usize, values: Vec<f64>) -> Result<Self> {
        if num_labels == 0 {
            return Err(Error::InvalidInput("empty label alphabet".into()));
        }
        if values.len() != num_frames * num_labels {
            return Err(Error::DimensionMismatch(format!(
                "{} values for {num_frames} frames over {num_labels} labels",
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("log-posterior {v}")));
        }
        Ok(PosteriorMatrix { num_frames, num_labels, values })
    }

    pub fn num_frames(&self) -> usize {
        self.num_frames
    }

    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    /// Log-posteriors of `frame` (1-based).
    pub fn row(&self, frame: u32) -> &[f64] {
        let i = frame as usize - 1;
        &self.values[i * self.num_labels..(i + 1) * self.num_labels]
    }

    /// Log-posterior of `label` at `frame` (1-based).
    pub fn log_prob(&self, frame: u32, label: Label) -> f64 {
        self.row(frame)[label as usize]
    }
}

/// Multinomial logistic regression over a window of `2r + 1` consecutive
/// frames, zero-padded at utterance edges.
#[derive(Clone, Debug)]
pub struct FrameClassifier {
    num_labels: usize,
    input_dim: usize,
    context_radius: usize,
    /// `num_labels` rows of `(2r + 1) * input_dim` weights.
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl FrameClassifier {
    pub fn new(num_labels: usize, input_dim: usize, context_radius: usize) -> Result<Self> {
        if num_labels == 0 || input_dim == 0 {
            return Err(Error::InvalidInput("classifier needs labels and input features".into()));
        }
        let window = (2 * context_radius + 1) * input_dim;
        Ok(FrameClassifier {
            num_labels,
            input_dim,
            context_radius,
            weights: vec![0.0; num_labels * window],
            bias: vec![0.0; num_labels],
        })
    }

    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn context_radius(&self) -> usize {
        self.context_radius
    }

    /// Weight matrix, `num_labels` rows of `(2r + 1) * input_dim` entries.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    /// Mutable parameter access for external optimizers.
    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn bias_mut(&mut self) -> &mut [f64] {
        &mut self.bias
    }

    fn window_dim(&self) -> usize {
        (2 * self.context_radius + 1) * self.input_dim
    }

    fn check_input(&self, frames: &FrameMatrix) -> Result<()> {
        if frames.dim() != self.input_dim {
            return Err(Error::DimensionMismatch(format!(
                "classifier expects frame dimension {}, got {}",
                self.input_dim,
                frames.dim()
            )));
        }
        if frames.num_frames() == 0 {
            return Err(Error::InvalidInput("empty utterance".into()));
        }
        Ok(())
    }

    /// The concatenated context window feeding `frame` (1-based).
    fn window(&self, frames: &FrameMatrix, frame: u32) -> Vec<f64> {
        let r = self.context_radius as i64;
        let t = frames.num_frames() as i64;
        let mut z = vec![0.0; self.window_dim()];
        for (slot, off) in (-r..=r).enumerate() {
            let k = frame as i64 + off;
            if k >= 1 && k <= t {
                z[slot * self.input_dim..(slot + 1) * self.input_dim].copy_from_slice(frames.row(k as u32));
            }
        }
        z
    }

    fn logits(&self, z: &[f64]) -> Vec<f64> {
        let w = self.window_dim();
        (0..self.num_labels)
            .map(|l| {
                self.bias[l]
                    + self.weights[l * w..(l + 1) * w]
                        .iter()
                        .zip(z)
                        .map(|(a, b)| a * b)
                        .sum::<f64>()
            })
            .collect()
    }

    fn log_posteriors(&self, frames: &FrameMatrix, frame: u32) -> Vec<f64> {
        let mut row = self.logits(&self.window(frames, frame));
        let lse = log_sum_exp(&row);
        for v in &mut row {
            *v -= lse;
        }
        row
    }
}

/// Frames (1-based) the classifier evaluates for `parity` over `T` frames;
/// `copies[i]` lists each evaluated frame together with the frames that
/// reuse its output row (itself included).
fn subsample_groups(num_frames: usize, parity: Parity) -> Vec<(u32, Vec<u32>)> {
    let t = num_frames as u32;
    let mut groups = Vec::new();
    match parity {
        Parity::Even => {
            let mut i = 2;
            while i <= t {
                groups.push((i, vec![i - 1, i]));
                i += 2;
            }
            if t % 2 == 1 {
                groups.push((t, vec![t]));
            }
        }
        Parity::Odd => {
            let mut i = 1;
            while i <= t {
                let mut frames = vec![i];
                if i + 1 <= t {
                    frames.push(i + 1);
                }
                groups.push((i, frames));
                i += 2;
            }
        }
    }
    groups
}

/// Log-posteriors for every frame of the utterance.
pub fn classify(clf: &FrameClassifier, frames: &FrameMatrix) -> Result<PosteriorMatrix> {
    clf.check_input(frames)?;
    let mut values = Vec::with_capacity(frames.num_frames() * clf.num_labels);
    for frame in 1..=frames.num_frames() as u32 {
        values.extend(clf.log_posteriors(frames, frame));
    }
    PosteriorMatrix::new(frames.num_frames(), clf.num_labels, values)
}

/// Subsampled forward pass: evaluates `ceil(T / 2)` frames and fills the
/// remaining rows by copying, as described at module level.
pub fn subsample_forward(clf: &FrameClassifier, frames: &FrameMatrix, parity: Parity) -> Result<PosteriorMatrix> {
    Ok(subsample_forward_counted(clf, frames, parity)?.0)
}

/// [`subsample_forward`] plus the number of classifier evaluations, for
/// instrumentation.
pub fn subsample_forward_counted(
    clf: &FrameClassifier,
    frames: &FrameMatrix,
    parity: Parity,
) -> Result<(PosteriorMatrix, usize)> {
    clf.check_input(frames)?;
    let t = frames.num_frames();
    let mut values = vec![0.0; t * clf.num_labels];
    let groups = subsample_groups(t, parity);
    for (eval_frame, members) in &groups {
        let row = clf.log_posteriors(frames, *eval_frame);
        for &m in members {
            let i = m as usize - 1;
            values[i * clf.num_labels..(i + 1) * clf.num_labels].copy_from_slice(&row);
        }
    }
    let evaluations = groups.len();
    debug_assert_eq!(evaluations, t.div_ceil(2));
    Ok((PosteriorMatrix::new(t, clf.num_labels, values)?, evaluations))
}

/// Gradient of the summed per-frame log loss with respect to classifier
/// parameters.
#[derive(Clone, Debug)]
pub struct ClassifierGradient {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

/// Log loss over all `T` frames of one utterance and its gradient. With
/// `parity` set, outputs come from the subsampled forward pass, so a copied
/// frame's loss term differentiates through the frame actually evaluated.
pub fn log_loss_and_gradient(
    clf: &FrameClassifier,
    frames: &FrameMatrix,
    labels: &[Label],
    parity: Option<Parity>,
) -> Result<(f64, ClassifierGradient)> {
    clf.check_input(frames)?;
    if labels.len() != frames.num_frames() {
        return Err(Error::DimensionMismatch(format!(
            "{} labels for {} frames",
            labels.len(),
            frames.num_frames()
        )));
    }
    if let Some(&l) = labels.iter().find(|&&l| l as usize >= clf.num_labels) {
        return Err(Error::InvalidInput(format!("frame label {l} out of range")));
    }
    let groups = match parity {
        Some(p) => subsample_groups(frames.num_frames(), p),
        None => (1..=frames.num_frames() as u32).map(|i| (i, vec![i])).collect(),
    };
    let mut loss = 0.0;
    let mut grad = ClassifierGradient {
        weights: vec![0.0; clf.weights.len()],
        bias: vec![0.0; clf.bias.len()],
    };
    let w = clf.window_dim();
    for (eval_frame, members) in &groups {
        let z = clf.window(frames, *eval_frame);
        let mut row = clf.logits(&z);
        let lse = log_sum_exp(&row);
        for v in &mut row {
            *v = (*v - lse).exp();
        }
        // d(loss)/d(logit_l) summed over the frames sharing this output row.
        let mut glogit: Vec<f64> = row.iter().map(|p| p * members.len() as f64).collect();
        for &m in members {
            let y = labels[m as usize - 1] as usize;
            glogit[y] -= 1.0;
            loss -= (row[y].max(f64::MIN_POSITIVE)).ln();
        }
        for l in 0..clf.num_labels {
            if glogit[l] == 0.0 {
                continue;
            }
            grad.bias[l] += glogit[l];
            let dst = &mut grad.weights[l * w..(l + 1) * w];
            for (d, zk) in dst.iter_mut().zip(&z) {
                *d += glogit[l] * zk;
            }
        }
    }
    Ok((loss, grad))
}

/// Training options for [`train_frame_classifier`].
#[derive(Clone, Copy, Debug)]
pub struct ClassifierTrainConfig {
    pub epochs: u32,
    pub step_size: f64,
    /// Alternate even/odd subsampled epochs (starting even) instead of
    /// evaluating every frame.
    pub subsample: bool,
    pub seed: u64,
}

impl Default for ClassifierTrainConfig {
    fn default() -> Self {
        ClassifierTrainConfig { epochs: 10, step_size: 0.01, subsample: false, seed: 0 }
    }
}

/// Trains the classifier with per-utterance AdaGrad updates on the log loss,
/// shuffling utterances every epoch. Returns the mean per-utterance loss of
/// each epoch.
pub fn train_frame_classifier(
    clf: &mut FrameClassifier,
    corpus: &[(&FrameMatrix, &[Label])],
    cfg: &ClassifierTrainConfig,
) -> Result<Vec<f64>> {
    if corpus.is_empty() {
        return Err(Error::InvalidInput("empty training corpus".into()));
    }
    if !(cfg.step_size > 0.0) {
        return Err(Error::Config("step size must be positive".into()));
    }
    let mut accum_w = vec![0.0; clf.weights.len()];
    let mut accum_b = vec![0.0; clf.bias.len()];
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    let mut epoch_losses = Vec::with_capacity(cfg.epochs as usize);
    for epoch in 0..cfg.epochs {
        let parity = if cfg.subsample {
            Some(if epoch % 2 == 0 { Parity::Even } else { Parity::Odd })
        } else {
            None
        };
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for &i in &order {
            let (frames, labels) = corpus[i];
            let (loss, grad) = log_loss_and_gradient(clf, frames, labels, parity)?;
            total += loss;
            adagrad_step(&mut clf.weights, &mut accum_w, &grad.weights, cfg.step_size);
            adagrad_step(&mut clf.bias, &mut accum_b, &grad.bias, cfg.step_size);
        }
        epoch_losses.push(total / corpus.len() as f64);
    }
    Ok(epoch_losses)
}

fn adagrad_step(params: &mut [f64], accum: &mut [f64], grad: &[f64], step: f64) {
    for ((p, a), &g) in params.iter_mut().zip(accum).zip(grad) {
        if g == 0.0 {
            continue;
        }
        *a += g * g;
        *p -= step * g / (a.sqrt() + ADAGRAD_EPS);
    }
}

/// Fraction of frames whose argmax posterior disagrees with the gold label.
pub fn frame_error_rate(
    clf: &FrameClassifier,
    corpus: &[(&FrameMatrix, &[Label])],
    parity: Option<Parity>,
) -> Result<f64> {
    let mut errors = 0usize;
    let mut total = 0usize;
    for (frames, labels) in corpus {
        let post = match parity {
            Some(p) => subsample_forward(clf, frames, p)?,
            None => classify(clf, frames)?,
        };
        for frame in 1..=frames.num_frames() as u32 {
            let row = post.row(frame);
            let argmax = row
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .map(|(i, _)| i as Label)
                .expect("nonempty row");
            errors += usize::from(argmax != labels[frame as usize - 1]);
            total += 1;
        }
    }
    if total == 0 {
        return Err(Error::InvalidInput("empty corpus".into()));
    }
    Ok(errors as f64 / total as f64)
}

/// Writes log-posteriors: `#frames`, `#labels <n> <names...>`, then one row
/// per frame with 17 significant digits.
pub fn write_posteriors<W: Write>(post: &PosteriorMatrix, alphabet: &LabelAlphabet, out: &mut W) -> Result<()> {
    if alphabet.len() != post.num_labels() {
        return Err(Error::DimensionMismatch(format!(
            "alphabet of {} labels for posteriors over {}",
            alphabet.len(),
            post.num_labels()
        )));
    }
    writeln!(out, "#frames {}", post.num_frames())?;
    write!(out, "#labels {}", alphabet.len())?;
    for name in alphabet.names() {
        write!(out, " {name}")?;
    }
    writeln!(out)?;
    for frame in 1..=post.num_frames() as u32 {
        let row = post.row(frame);
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                write!(out, " ")?;
            }
            write!(out, "{v:.16e}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Reads the [`write_posteriors`] format. Malformed structure is an error;
/// denormalized rows (log-sum-exp beyond 1e-4) and positive entries only
/// produce warnings, since externally computed posteriors are often sloppy.
/// Returns the matrix, its alphabet, and any warnings.
pub fn read_posteriors<R: BufRead>(input: R) -> Result<(PosteriorMatrix, LabelAlphabet, Vec<String>)> {
    let mut lines = input.lines().enumerate();
    let mut header = |tag: &str| -> Result<(usize, String)> {
        loop {
            let (idx, line) = lines
                .next()
                .ok_or_else(|| Error::parse(0, format!("missing {tag} header")))?;
            let line = line?;
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            let (got, rest) = t.split_once(char::is_whitespace).unwrap_or((t, ""));
            if got != tag {
                return Err(Error::parse(idx + 1, format!("expected {tag} header, got '{got}'")));
            }
            return Ok((idx + 1, rest.trim().to_string()));
        }
    };
    let (line_no, frames_field) = header("#frames")?;
    let num_frames: usize = frames_field
        .parse()
        .map_err(|_| Error::parse(line_no, format!("bad frame count '{frames_field}'")))?;
    let (line_no, labels_field) = header("#labels")?;
    let mut fields = labels_field.split_ascii_whitespace();
    let count_field = fields.next().ok_or_else(|| Error::parse(line_no, "missing label count"))?;
    let num_labels: usize = count_field
        .parse()
        .map_err(|_| Error::parse(line_no, format!("bad label count '{count_field}'")))?;
    let names: Vec<&str> = fields.collect();
    if names.len() != num_labels {
        return Err(Error::parse(
            line_no,
            format!("label count {num_labels} but {} names", names.len()),
        ));
    }
    let alphabet = LabelAlphabet::from_names(names)?;
    if alphabet.len() != num_labels {
        return Err(Error::parse(line_no, "duplicate label names"));
    }

    let mut values = Vec::with_capacity(num_frames * num_labels);
    let mut warnings = Vec::new();
    let mut rows = 0usize;
    for (idx, line) in lines {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let row: Vec<f64> = t
            .split_ascii_whitespace()
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|_| Error::parse(idx + 1, format!("bad value '{s}'")))
            })
            .collect::<Result<_>>()?;
        if row.len() != num_labels {
            return Err(Error::parse(
                idx + 1,
                format!("row of {} values, expected {num_labels}", row.len()),
            ));
        }
        if let Some(v) = row.iter().find(|v| !v.is_finite()) {
            return Err(Error::parse(idx + 1, format!("non-finite value {v}")));
        }
        rows += 1;
        if rows > num_frames {
            return Err(Error::parse(idx + 1, format!("more than {num_frames} rows")));
        }
        if row.iter().any(|&v| v > 0.0) {
            warnings.push(format!("frame {rows}: positive log-posterior"));
        }
        let lse = log_sum_exp(&row);
        if lse.abs() > 1e-4 {
            warnings.push(format!(
                "frame {rows}: posteriors not normalized (log-sum-exp {lse:.3e})"
            ));
        }
        values.extend(row);
    }
    if rows != num_frames {
        return Err(Error::parse(0, format!("{rows} rows, expected {num_frames}")));
    }
    Ok((PosteriorMatrix::new_unchecked(num_frames, num_labels, values)?, alphabet, warnings))
}

/// Writes frame features: `#frames`, `#dim`, then one row per frame.
pub fn write_frames<W: Write>(frames: &FrameMatrix, out: &mut W) -> Result<()> {
    writeln!(out, "#frames {}", frames.num_frames())?;
    writeln!(out, "#dim {}", frames.dim())?;
    for frame in 1..=frames.num_frames() as u32 {
        let row = frames.row(frame);
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                write!(out, " ")?;
            }
            write!(out, "{v:.16e}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Reads the [`write_frames`] format.
pub fn read_frames<R: BufRead>(input: R) -> Result<FrameMatrix> {
    let mut num_frames: Option<usize> = None;
    let mut dim: Option<usize> = None;
    let mut values = Vec::new();
    let mut rows = 0usize;
    for (idx, line) in input.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        if let Some(rest) = t.strip_prefix("#frames") {
            num_frames = Some(
                rest.trim()
                    .parse()
                    .map_err(|_| Error::parse(lineno, "bad frame count"))?,
            );
            continue;
        }
        if let Some(rest) = t.strip_prefix("#dim") {
            dim = Some(rest.trim().parse().map_err(|_| Error::parse(lineno, "bad dimension"))?);
            continue;
        }
        let (Some(n), Some(d)) = (num_frames, dim) else {
            return Err(Error::parse(lineno, "expected #frames and #dim headers first"));
        };
        let row: Vec<f64> = t
            .split_ascii_whitespace()
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|_| Error::parse(lineno, format!("bad value '{s}'")))
            })
            .collect::<Result<_>>()?;
        if row.len() != d {
            return Err(Error::parse(lineno, format!("row of {} values, expected {d}", row.len())));
        }
        rows += 1;
        if rows > n {
            return Err(Error::parse(lineno, format!("more than {n} rows")));
        }
        values.extend(row);
    }
    let (Some(n), Some(d)) = (num_frames, dim) else {
        return Err(Error::parse(0, "missing #frames or #dim header"));
    };
    if rows != n {
        return Err(Error::parse(0, format!("{rows} rows, expected {n}")));
    }
    FrameMatrix::new(n, d, values)
}

/// Writes the classifier with its label alphabet.
pub fn write_classifier<W: Write>(clf: &FrameClassifier, alphabet: &LabelAlphabet, out: &mut W) -> Result<()> {
    if alphabet.len() != clf.num_labels {
        return Err(Error::DimensionMismatch(format!(
            "alphabet of {} labels for classifier over {}",
            alphabet.len(),
            clf.num_labels
        )));
    }
    writeln!(out, "#frame-classifier")?;
    write!(out, "labels {}", alphabet.len())?;
    for name in alphabet.names() {
        write!(out, " {name}")?;
    }
    writeln!(out)?;
    writeln!(out, "input_dim {}", clf.input_dim)?;
    writeln!(out, "radius {}", clf.context_radius)?;
    write!(out, "bias")?;
    for v in &clf.bias {
        write!(out, " {v:.16e}")?;
    }
    writeln!(out)?;
    let w = clf.window_dim();
    for l in 0..clf.num_labels {
        write!(out, "w")?;
        for v in &clf.weights[l * w..(l + 1) * w] {
            write!(out, " {v:.16e}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Reads the [`write_classifier`] format.
pub fn read_classifier<R: BufRead>(input: R) -> Result<(FrameClassifier, LabelAlphabet)> {
    let mut lines = input.lines().enumerate().filter_map(|(i, l)| match l {
        Ok(s) if s.trim().is_empty() => None,
        Ok(s) => Some(Ok((i + 1, s))),
        Err(e) => Some(Err(Error::from(e))),
    });
    let mut next = || -> Result<(usize, String)> {
        lines.next().unwrap_or_else(|| Err(Error::parse(0, "truncated classifier file")))
    };
    let (lineno, magic) = next()?;
    if magic.trim() != "#frame-classifier" {
        return Err(Error::parse(lineno, "missing #frame-classifier header"));
    }
    let (lineno, labels_line) = next()?;
    let mut fields = labels_line.split_ascii_whitespace();
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
    let field_line = |lineno: usize, line: &str, key: &str| -> Result<usize> {
        line.strip_prefix(key)
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| Error::parse(lineno, format!("expected {key} line")))
    };
    let (lineno, line) = next()?;
    let input_dim = field_line(lineno, &line, "input_dim")?;
    let (lineno, line) = next()?;
    let radius = field_line(lineno, &line, "radius")?;
    let mut clf = FrameClassifier::new(n, input_dim, radius)?;
    let parse_row = |lineno: usize, line: &str, key: &str, expect: usize| -> Result<Vec<f64>> {
        let rest = line
            .strip_prefix(key)
            .ok_or_else(|| Error::parse(lineno, format!("expected {key} line")))?;
        let row: Vec<f64> = rest
            .split_ascii_whitespace()
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|_| Error::parse(lineno, format!("bad value '{s}'")))
            })
            .collect::<Result<_>>()?;
        if row.len() != expect {
            return Err(Error::parse(lineno, format!("{} values, expected {expect}", row.len())));
        }
        Ok(row)
    };
    let (lineno, line) = next()?;
    clf.bias = parse_row(lineno, &line, "bias", n)?;
    let w = clf.window_dim();
    for l in 0..n {
        let (lineno, line) = next()?;
        let row = parse_row(lineno, &line, "w", w)?;
        clf.weights[l * w..(l + 1) * w].copy_from_slice(&row);
    }
    Ok((clf, alphabet))
}
