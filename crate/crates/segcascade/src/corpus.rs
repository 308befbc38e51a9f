//! Corpus file conventions: reference transcriptions, label inventories,
//! and the on-disk layout shared by the command-line tools.
//!
//! A corpus directory contains:
//!
//! ```text
//! labels.txt            one label name per line (defines label ids)
//! train.trans           reference transcriptions of the training set
//! dev.trans             reference transcriptions of the development set
//! frames/<id>.feat      per-frame feature vectors
//! posteriors/<id>.post  per-frame label log-posteriors (optional)
//! lattices/pass<k>/<id>.lat   lattices produced by cascade pass k
//! ```
//!
//! A transcription file holds one section per utterance: a header line
//! `utterance <id> <num-frames>` followed by one `<start> <end> <label>`
//! line per gold segment (frame boundaries, so segment lines tile 0..T).

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::acoustics::{read_frames, read_posteriors, FrameMatrix, PosteriorMatrix};
use crate::error::{Error, Result};
use crate::lattice::{LabelAlphabet, Segment, SegmentPath};

pub const LABELS_FILE: &str = "labels.txt";
pub const TRAIN_FILE: &str = "train.trans";
pub const DEV_FILE: &str = "dev.trans";
pub const FRAMES_DIR: &str = "frames";
pub const POSTERIORS_DIR: &str = "posteriors";
pub const LATTICES_DIR: &str = "lattices";

pub fn frames_path(root: &Path, id: &str) -> PathBuf {
    root.join(FRAMES_DIR).join(format!("{id}.feat"))
}

pub fn posteriors_path(root: &Path, id: &str) -> PathBuf {
    root.join(POSTERIORS_DIR).join(format!("{id}.post"))
}

pub fn lattices_dir(root: &Path, pass: usize) -> PathBuf {
    root.join(LATTICES_DIR).join(format!("pass{pass}"))
}

pub fn lattice_path(root: &Path, pass: usize, id: &str) -> PathBuf {
    lattices_dir(root, pass).join(format!("{id}.lat"))
}

/// One utterance's reference: identifier, frame count, gold segmentation.
#[derive(Clone, Debug, PartialEq)]
pub struct Transcription {
    pub id: String,
    pub num_frames: u32,
    pub path: SegmentPath,
}

impl Transcription {
    /// Validates that the segmentation tiles frames `1..=num_frames`.
    pub fn new(id: String, num_frames: u32, path: SegmentPath) -> Result<Self> {
        if id.is_empty() || id.chars().any(char::is_whitespace) {
            return Err(Error::InvalidInput(format!(
                "utterance id '{id}' is empty or contains whitespace"
            )));
        }
        if path.start() != Some(0) || path.end() != Some(num_frames) {
            return Err(Error::InvalidInput(format!(
                "utterance '{id}': segmentation does not tile frames 1..{num_frames}"
            )));
        }
        Ok(Transcription { id, num_frames, path })
    }

    pub fn labels(&self) -> Vec<crate::lattice::Label> {
        self.path.labels()
    }
}

/// Writes one label name per line.
pub fn write_labels<W: Write>(alphabet: &LabelAlphabet, out: &mut W) -> Result<()> {
    for name in alphabet.names() {
        writeln!(out, "{name}")?;
    }
    Ok(())
}

/// Reads a label inventory; ids follow line order.
pub fn read_labels<R: BufRead>(input: R) -> Result<LabelAlphabet> {
    let mut alphabet = LabelAlphabet::new();
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        let name = line.trim();
        if name.is_empty() {
            continue;
        }
        let before = alphabet.len();
        alphabet.intern(name)?;
        if alphabet.len() == before {
            return Err(Error::parse(idx + 1, format!("duplicate label '{name}'")));
        }
    }
    if alphabet.is_empty() {
        return Err(Error::InvalidInput("empty label inventory".into()));
    }
    Ok(alphabet)
}

/// Writes transcriptions in the sectioned format described at module level.
pub fn write_transcriptions<W: Write>(
    transcriptions: &[Transcription],
    alphabet: &LabelAlphabet,
    out: &mut W,
) -> Result<()> {
    for t in transcriptions {
        writeln!(out, "utterance {} {}", t.id, t.num_frames)?;
        for seg in t.path.segments() {
            writeln!(out, "{} {} {}", seg.start, seg.end, alphabet.name(seg.label))?;
        }
    }
    Ok(())
}

/// Reads the [`write_transcriptions`] format. Labels must already exist in
/// the alphabet; utterance ids must be unique.
pub fn read_transcriptions<R: BufRead>(input: R, alphabet: &LabelAlphabet) -> Result<Vec<Transcription>> {
    let mut out: Vec<Transcription> = Vec::new();
    let mut current: Option<(usize, String, u32, Vec<Segment>)> = None;
    let finish = |current: Option<(usize, String, u32, Vec<Segment>)>, out: &mut Vec<Transcription>| -> Result<()> {
        if let Some((lineno, id, num_frames, segments)) = current {
            let path = SegmentPath::new(segments).map_err(|e| Error::parse(lineno, e.to_string()))?;
            let t = Transcription::new(id, num_frames, path).map_err(|e| Error::parse(lineno, e.to_string()))?;
            if out.iter().any(|p| p.id == t.id) {
                return Err(Error::parse(lineno, format!("duplicate utterance id '{}'", t.id)));
            }
            out.push(t);
        }
        Ok(())
    };
    for (idx, line) in input.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        let fields: Vec<&str> = text.split_ascii_whitespace().collect();
        if fields[0] == "utterance" {
            if fields.len() != 3 {
                return Err(Error::parse(lineno, "expected 'utterance <id> <frames>'"));
            }
            let num_frames: u32 = fields[2]
                .parse()
                .map_err(|_| Error::parse(lineno, format!("bad frame count '{}'", fields[2])))?;
            finish(current.take(), &mut out)?;
            current = Some((lineno, fields[1].to_string(), num_frames, Vec::new()));
        } else {
            let Some((_, _, _, segments)) = current.as_mut() else {
                return Err(Error::parse(lineno, "segment line before any utterance header"));
            };
            if fields.len() != 3 {
                return Err(Error::parse(lineno, "expected '<start> <end> <label>'"));
            }
            let start: u32 = fields[0]
                .parse()
                .map_err(|_| Error::parse(lineno, format!("bad start boundary '{}'", fields[0])))?;
            let end: u32 = fields[1]
                .parse()
                .map_err(|_| Error::parse(lineno, format!("bad end boundary '{}'", fields[1])))?;
            let label = alphabet
                .require(fields[2])
                .map_err(|_| Error::parse(lineno, format!("unknown label '{}'", fields[2])))?;
            segments.push(Segment::new(start, end, label));
        }
    }
    finish(current, &mut out)?;
    Ok(out)
}

/// An in-memory corpus: label inventory plus train and dev references.
#[derive(Clone, Debug)]
pub struct Corpus {
    pub alphabet: LabelAlphabet,
    pub train: Vec<Transcription>,
    pub dev: Vec<Transcription>,
}

/// Loads `labels.txt`, `train.trans`, and `dev.trans` from a corpus
/// directory.
pub fn load_corpus(root: &Path) -> Result<Corpus> {
    let alphabet = read_labels(BufReader::new(File::open(root.join(LABELS_FILE))?))?;
    let train = read_transcriptions(BufReader::new(File::open(root.join(TRAIN_FILE))?), &alphabet)?;
    let dev = read_transcriptions(BufReader::new(File::open(root.join(DEV_FILE))?), &alphabet)?;
    Ok(Corpus { alphabet, train, dev })
}

/// Loads one utterance's frame features from the corpus layout.
pub fn load_frames(root: &Path, id: &str) -> Result<FrameMatrix> {
    read_frames(BufReader::new(File::open(frames_path(root, id))?))
}

/// Loads one utterance's posteriors, checking the alphabet matches.
/// Normalization warnings are returned, not printed.
pub fn load_posteriors(root: &Path, id: &str, alphabet: &LabelAlphabet) -> Result<(PosteriorMatrix, Vec<String>)> {
    let (post, file_alphabet, warnings) = read_posteriors(BufReader::new(File::open(posteriors_path(root, id))?))?;
    let matches = file_alphabet.len() == alphabet.len()
        && file_alphabet.names().zip(alphabet.names()).all(|(a, b)| a == b);
    if !matches {
        return Err(Error::InvalidInput(format!(
            "utterance '{id}': posterior file alphabet does not match the corpus inventory"
        )));
    }
    Ok((post, warnings))
}

/// Creates the file at `path`, creating parent directories as needed, and
/// hands a buffered writer to `write`.
pub fn write_file<F>(path: &Path, write: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> Result<()>,
{
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut out = BufWriter::new(File::create(path)?);
    write(&mut out)?;
    out.flush()?;
    Ok(())
}

/// Reads a TIMIT-style alignment file: lines of
/// `<begin-sample> <end-sample> <phone>`, converting sample spans to frame
/// boundaries by rounding `sample / samples_per_frame`.
///
/// This reader is a thin interoperability shim and has not been exercised
/// against the real TIMIT corpus. Alignments whose segments collapse to
/// zero frames at the chosen frame rate are rejected.
pub fn read_phn_alignment<R: BufRead>(
    input: R,
    samples_per_frame: u32,
    alphabet: &mut LabelAlphabet,
) -> Result<(SegmentPath, u32)> {
    if samples_per_frame == 0 {
        return Err(Error::Config("samples_per_frame must be positive".into()));
    }
    let to_frame = |sample: u64| ((sample as f64 / samples_per_frame as f64).round()) as u32;
    let mut segments = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        let fields: Vec<&str> = text.split_ascii_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::parse(lineno, "expected '<begin> <end> <phone>'"));
        }
        let begin: u64 = fields[0]
            .parse()
            .map_err(|_| Error::parse(lineno, format!("bad sample index '{}'", fields[0])))?;
        let end: u64 = fields[1]
            .parse()
            .map_err(|_| Error::parse(lineno, format!("bad sample index '{}'", fields[1])))?;
        let (fb, fe) = (to_frame(begin), to_frame(end));
        if fe <= fb {
            return Err(Error::parse(
                lineno,
                format!("segment [{begin},{end}) collapses at {samples_per_frame} samples per frame"),
            ));
        }
        segments.push(Segment::new(fb, fe, alphabet.intern(fields[2])?));
    }
    let path = SegmentPath::new(segments)?;
    let num_frames = path.end().unwrap_or(0);
    Ok((path, num_frames))
}
