//! Command-line front end: corpus generation, frame-classifier training and
//! posterior generation, lattice pruning, single-pass training, cascade
//! orchestration, and evaluation. All heavy lifting lives in the library;
//! this binary is file plumbing.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use segcascade::acoustics::{
    classify, frame_error_rate, read_classifier, read_posteriors, subsample_forward,
    train_frame_classifier, write_classifier, write_posteriors, ClassifierTrainConfig,
    FrameClassifier, FrameMatrix, Parity, PosteriorMatrix,
};
use segcascade::cascade::{
    parse_cascade_config, run_cascade_decode, run_cascade_train, CascadeData, CascadeUtterance,
};
use segcascade::corpus::{
    lattice_path, lattices_dir, load_corpus, load_frames, posteriors_path, read_labels,
    read_transcriptions, write_file, Transcription,
};
use segcascade::features::{
    estimate_bigram_lm, read_model, write_model, FeatureTemplate, FeatureTemplateSet, Model,
};
use segcascade::inference::{
    audio_seconds, density, edit_distance, oracle_error_rate, real_time_factor,
};
use segcascade::lattice::{
    build_hypothesis_space, read_lattice, write_lattice, Fst, Label, LabelAlphabet, SegmentPath,
};
use segcascade::pruning::{prune, PruneMethod, PruneParams};
use segcascade::scoring::decode;
use segcascade::synth::{generate_corpus, parse_corpus_spec, write_corpus};
use segcascade::training::{train_pass, TrainConfig, TrainUtterance};

#[derive(Parser)]
#[command(
    name = "segcascade",
    version,
    about = "Discriminative segmental cascades for phonetic recognition"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthetic corpora with known ground truth
    #[command(subcommand)]
    Synth(SynthCommand),
    /// Frame classifier: training and posterior generation
    #[command(subcommand)]
    Acoustics(AcousticsCommand),
    /// Prune a lattice file
    Prune(PruneArgs),
    /// Train a single cascade pass from lattices and posteriors
    Train(TrainArgs),
    /// Per-utterance error, oracle, density, and timing report
    Eval(EvalArgs),
    /// Multi-pass training and decoding
    #[command(subcommand)]
    Cascade(CascadeCommand),
}

#[derive(Subcommand)]
enum SynthCommand {
    /// Sample a corpus and write it in the standard directory layout
    Generate {
        /// Flat key-value generator spec
        #[arg(long)]
        spec: PathBuf,
        /// Corpus directory to create
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum AcousticsCommand {
    /// Train the linear frame classifier on a corpus directory
    Train(AcousticsTrainArgs),
    /// Write per-utterance log-posterior files for a corpus directory
    Classify(AcousticsClassifyArgs),
}

#[derive(Args)]
struct AcousticsTrainArgs {
    /// Corpus directory (labels.txt, train.trans, dev.trans, frames/)
    #[arg(long)]
    data: PathBuf,
    /// Classifier file to write
    #[arg(long)]
    out: PathBuf,
    /// Frames of context on each side of the classified frame
    #[arg(long, default_value_t = 1)]
    radius: usize,
    #[arg(long, default_value_t = 5)]
    epochs: u32,
    #[arg(long, default_value_t = 0.1)]
    step_size: f64,
    /// Alternate even/odd frame subsampling between epochs while training
    #[arg(long, default_value_t = false)]
    subsample: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum SubsampleArg {
    None,
    Even,
    Odd,
}

impl SubsampleArg {
    fn parity(self) -> Option<Parity> {
        match self {
            SubsampleArg::None => None,
            SubsampleArg::Even => Some(Parity::Even),
            SubsampleArg::Odd => Some(Parity::Odd),
        }
    }
}

#[derive(Args)]
struct AcousticsClassifyArgs {
    /// Corpus directory; posteriors land in its posteriors/ subdirectory
    #[arg(long)]
    data: PathBuf,
    /// Classifier file from `acoustics train`
    #[arg(long)]
    classifier: PathBuf,
    /// Evaluate only alternate frames and copy their outputs
    #[arg(long, value_enum, default_value_t = SubsampleArg::None)]
    subsample: SubsampleArg,
}

#[derive(Args)]
struct PruneArgs {
    /// beam, edge, or vertex
    #[arg(long)]
    method: String,
    #[arg(long)]
    alpha: f64,
    /// Input lattice file
    #[arg(long, value_name = "LATTICE")]
    r#in: PathBuf,
    /// Output lattice file
    #[arg(long)]
    out: PathBuf,
    /// Label inventory file (one name per line)
    #[arg(long)]
    labels: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    /// Flat key-value pass configuration
    #[arg(long)]
    pass_config: PathBuf,
    /// Directory of <id>.lat lattices; missing ids use the dense space
    #[arg(long)]
    lattices: PathBuf,
    /// Directory of <id>.post posterior files
    #[arg(long)]
    posteriors: PathBuf,
    /// Training reference transcriptions
    #[arg(long)]
    gold: PathBuf,
    /// Development reference transcriptions
    #[arg(long)]
    dev: PathBuf,
    /// Model file to write
    #[arg(long)]
    out_model: PathBuf,
    /// Append per-epoch metrics (TSV) to this file as well as stdout
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// Trained segmental model
    #[arg(long)]
    model: PathBuf,
    /// Directory of <id>.post posterior files
    #[arg(long)]
    posteriors: PathBuf,
    /// Directory of <id>.lat lattices; missing ids use the dense space
    #[arg(long)]
    lattices: PathBuf,
    /// Reference transcriptions
    #[arg(long)]
    refs: PathBuf,
    /// Dense-space segment length bound for missing lattices
    #[arg(long, default_value_t = 8)]
    max_duration: u32,
}

#[derive(Subcommand)]
enum CascadeCommand {
    /// Train every pass; writes models, lattices, and stat tables
    Train {
        /// Flat key-value cascade configuration
        #[arg(long)]
        config: PathBuf,
        /// Corpus directory with labels, transcriptions, and posteriors
        #[arg(long)]
        data: PathBuf,
    },
    /// Decode one utterance through every pass
    Decode {
        #[arg(long)]
        config: PathBuf,
        /// Directory of pass<k>.model files from `cascade train`
        #[arg(long)]
        models: PathBuf,
        /// Posterior file of the utterance to decode
        #[arg(long, value_name = "POSTERIORS")]
        r#in: PathBuf,
        /// Also write the timing table to this file
        #[arg(long)]
        timing: Option<PathBuf>,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Synth(SynthCommand::Generate { spec, out }) => synth_generate(&spec, &out),
        Command::Acoustics(AcousticsCommand::Train(args)) => acoustics_train(&args),
        Command::Acoustics(AcousticsCommand::Classify(args)) => acoustics_classify(&args),
        Command::Prune(args) => prune_lattice(&args),
        Command::Train(args) => train_one_pass(&args),
        Command::Eval(args) => eval_model(&args),
        Command::Cascade(CascadeCommand::Train { config, data }) => cascade_train(&config, &data),
        Command::Cascade(CascadeCommand::Decode { config, models, r#in, timing }) => {
            cascade_decode(&config, &models, &r#in, timing.as_deref())
        }
    }
}

fn read_to_string(path: &Path) -> Result<String> {
    let mut text = String::new();
    File::open(path)
        .with_context(|| format!("opening {}", path.display()))?
        .read_to_string(&mut text)?;
    Ok(text)
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(
        File::open(path).with_context(|| format!("opening {}", path.display()))?,
    ))
}

fn synth_generate(spec_path: &Path, out: &Path) -> Result<()> {
    let spec = parse_corpus_spec(&read_to_string(spec_path)?)?;
    let corpus = generate_corpus(&spec)?;
    write_corpus(&corpus, out)?;
    let frames: usize = corpus
        .train
        .iter()
        .chain(&corpus.dev)
        .map(|u| u.frames.num_frames())
        .sum();
    println!(
        "wrote {} train / {} dev utterances ({} labels, {} frames) to {}",
        corpus.train.len(),
        corpus.dev.len(),
        corpus.alphabet.len(),
        frames,
        out.display()
    );
    Ok(())
}

/// Loads a corpus directory's frame features and per-frame gold labels.
fn load_frame_corpus(
    root: &Path,
    transcriptions: &[Transcription],
) -> Result<Vec<(FrameMatrix, Vec<Label>)>> {
    transcriptions
        .iter()
        .map(|t| {
            let frames = load_frames(root, &t.id)
                .with_context(|| format!("loading frames for utterance '{}'", t.id))?;
            if frames.num_frames() != t.num_frames as usize {
                bail!(
                    "utterance '{}': transcription covers {} frames, feature file has {}",
                    t.id,
                    t.num_frames,
                    frames.num_frames()
                );
            }
            Ok((frames, t.path.frame_labels()?))
        })
        .collect()
}

fn acoustics_train(args: &AcousticsTrainArgs) -> Result<()> {
    let corpus = load_corpus(&args.data)?;
    let train = load_frame_corpus(&args.data, &corpus.train)?;
    let dev = load_frame_corpus(&args.data, &corpus.dev)?;
    let input_dim = train.first().context("empty training set")?.0.dim();
    let mut clf = FrameClassifier::new(corpus.alphabet.len(), input_dim, args.radius)?;
    let cfg = ClassifierTrainConfig {
        epochs: args.epochs,
        step_size: args.step_size,
        subsample: args.subsample,
        seed: args.seed,
    };
    let train_refs: Vec<(&FrameMatrix, &[Label])> =
        train.iter().map(|(f, l)| (f, l.as_slice())).collect();
    let losses = train_frame_classifier(&mut clf, &train_refs, &cfg)?;
    println!("epoch\ttrain_log_loss");
    for (i, loss) in losses.iter().enumerate() {
        println!("{}\t{loss:.6}", i + 1);
    }
    let dev_refs: Vec<(&FrameMatrix, &[Label])> =
        dev.iter().map(|(f, l)| (f, l.as_slice())).collect();
    if !dev_refs.is_empty() {
        let err = frame_error_rate(&clf, &dev_refs, None)?;
        println!("dev_frame_error\t{err:.4}");
    }
    write_file(&args.out, |w| write_classifier(&clf, &corpus.alphabet, w))?;
    println!("wrote classifier to {}", args.out.display());
    Ok(())
}

fn acoustics_classify(args: &AcousticsClassifyArgs) -> Result<()> {
    let corpus = load_corpus(&args.data)?;
    let (clf, clf_alphabet) = read_classifier(open(&args.classifier)?)?;
    if clf_alphabet.len() != corpus.alphabet.len() {
        bail!(
            "classifier covers {} labels, corpus has {}",
            clf_alphabet.len(),
            corpus.alphabet.len()
        );
    }
    let parity = args.subsample.parity();
    let mut elapsed = 0.0f64;
    let mut total_frames = 0usize;
    for t in corpus.train.iter().chain(&corpus.dev) {
        let frames = load_frames(&args.data, &t.id)
            .with_context(|| format!("loading frames for utterance '{}'", t.id))?;
        let started = Instant::now();
        let post = match parity {
            None => classify(&clf, &frames)?,
            Some(p) => subsample_forward(&clf, &frames, p)?,
        };
        elapsed += started.elapsed().as_secs_f64();
        total_frames += frames.num_frames();
        write_file(&posteriors_path(&args.data, &t.id), |w| {
            write_posteriors(&post, &corpus.alphabet, w)
        })?;
    }
    let rtf = real_time_factor(elapsed, audio_seconds(total_frames))?;
    println!(
        "classified {} utterances ({} frames) feed_forward_rtf={rtf:.6}",
        corpus.train.len() + corpus.dev.len(),
        total_frames
    );
    Ok(())
}

fn prune_lattice(args: &PruneArgs) -> Result<()> {
    let method: PruneMethod = args.method.parse()?;
    let params = PruneParams::new(method, args.alpha)?;
    let alphabet = read_labels(open(&args.labels)?)?;
    let fst = read_lattice(open(&args.r#in)?, &alphabet)?;
    let started = Instant::now();
    let outcome = prune(&fst, params)?;
    let elapsed = started.elapsed().as_secs_f64();
    write_file(&args.out, |w| write_lattice(&outcome.fst, &alphabet, w))?;
    let threshold = outcome.threshold.map_or("-".to_string(), |t| format!("{t:.6}"));
    println!(
        "method={} alpha={} threshold={threshold} vertices_before={} edges_before={} vertices_after={} edges_after={} empty={} elapsed_seconds={elapsed:.6}",
        method.name(),
        args.alpha,
        fst.num_vertices(),
        fst.num_edges(),
        outcome.fst.num_vertices(),
        outcome.fst.num_edges(),
        outcome.fst.is_empty(),
    );
    Ok(())
}

/// First `.post` file in a directory (sorted by name), used to discover the
/// label inventory when no corpus directory is at hand.
fn posterior_alphabet(dir: &Path) -> Result<LabelAlphabet> {
    let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "post"))
        .collect();
    entries.sort();
    let first = entries
        .first()
        .with_context(|| format!("no .post files in {}", dir.display()))?;
    let (_, alphabet, _) = read_posteriors(open(first)?)?;
    Ok(alphabet)
}

struct LoadedUtterance {
    id: String,
    post: PosteriorMatrix,
    fst: Fst,
    gold: SegmentPath,
}

/// Loads posteriors and a lattice for every transcription; utterances with
/// no lattice file get the dense hypothesis space.
fn load_pass_utterances(
    transcriptions: &[Transcription],
    posteriors_dir: &Path,
    lattices_dir: &Path,
    alphabet: &LabelAlphabet,
    max_duration: u32,
) -> Result<Vec<LoadedUtterance>> {
    transcriptions
        .iter()
        .map(|t| {
            let post_path = posteriors_dir.join(format!("{}.post", t.id));
            let (post, post_alphabet, warnings) = read_posteriors(open(&post_path)?)?;
            for w in warnings {
                eprintln!("{}: {w}", post_path.display());
            }
            if post_alphabet.len() != alphabet.len() {
                bail!("utterance '{}': posterior labels do not match", t.id);
            }
            if post.num_frames() != t.num_frames as usize {
                bail!(
                    "utterance '{}': transcription covers {} frames, posteriors have {}",
                    t.id,
                    t.num_frames,
                    post.num_frames()
                );
            }
            let lattice_file = lattices_dir.join(format!("{}.lat", t.id));
            let fst = if lattice_file.exists() {
                read_lattice(open(&lattice_file)?, alphabet)?
            } else {
                build_hypothesis_space(t.num_frames, alphabet.len(), max_duration)?
            };
            Ok(LoadedUtterance { id: t.id.clone(), post, fst, gold: t.path.clone() })
        })
        .collect()
}

fn as_train_refs(set: &[LoadedUtterance]) -> Vec<TrainUtterance<'_>> {
    set.iter()
        .map(|u| TrainUtterance { post: &u.post, fst: &u.fst, gold: &u.gold })
        .collect()
}

/// Flat key-value options for the standalone `train` command.
struct PassFileConfig {
    templates: FeatureTemplateSet,
    train: TrainConfig,
    max_duration: u32,
}

fn parse_pass_config(text: &str) -> Result<PassFileConfig> {
    use segcascade::config::{key_value_lines, parse_value};
    let mut templates = "label_posterior_sum bias".to_string();
    let mut num_samples = 3usize;
    let mut max_duration = 8u32;
    let mut train = TrainConfig::default();
    for (lineno, key, value) in key_value_lines(text)? {
        match key {
            "templates" => templates = value.to_string(),
            "num_samples" => num_samples = parse_value(lineno, key, value)?,
            "max_duration" => max_duration = parse_value(lineno, key, value)?,
            "epochs" => train.epochs = parse_value(lineno, key, value)?,
            "step_size" => train.step_size = parse_value(lineno, key, value)?,
            "cost_scale" => train.cost_scale = parse_value(lineno, key, value)?,
            "seed" => train.seed = parse_value(lineno, key, value)?,
            "early_stopping" => train.early_stopping = parse_value(lineno, key, value)?,
            _ => bail!("line {lineno}: unknown key '{key}'"),
        }
    }
    Ok(PassFileConfig {
        templates: FeatureTemplateSet::parse_list(&templates, num_samples, max_duration)?,
        train,
        max_duration,
    })
}

fn train_one_pass(args: &TrainArgs) -> Result<()> {
    let cfg = parse_pass_config(&read_to_string(&args.pass_config)?)?;
    let alphabet = posterior_alphabet(&args.posteriors)?;
    let gold = read_transcriptions(open(&args.gold)?, &alphabet)?;
    let dev = read_transcriptions(open(&args.dev)?, &alphabet)?;
    let train_data =
        load_pass_utterances(&gold, &args.posteriors, &args.lattices, &alphabet, cfg.max_duration)?;
    let dev_data =
        load_pass_utterances(&dev, &args.posteriors, &args.lattices, &alphabet, cfg.max_duration)?;
    let bigram = if cfg.templates.contains(FeatureTemplate::BigramLm) {
        let golds: Vec<SegmentPath> = train_data.iter().map(|u| u.gold.clone()).collect();
        Some(estimate_bigram_lm(&golds, alphabet.len())?)
    } else {
        None
    };
    let model = Model::new(cfg.templates.clone(), alphabet.clone(), bigram)?;
    let train_refs = as_train_refs(&train_data);
    let dev_refs = as_train_refs(&dev_data);
    let outcome = train_pass(model, &train_refs, &dev_refs, &cfg.train)?;
    let mut log: Box<dyn Write> = match &args.log {
        Some(path) => Box::new(BufWriter::new(
            std::fs::OpenOptions::new().create(true).append(true).open(path)?,
        )),
        None => Box::new(std::io::sink()),
    };
    println!("epoch\ttrain_loss\tdev_per\tseconds");
    for m in &outcome.metrics {
        let dev_per = m.dev_per.map_or("-".to_string(), |p| format!("{p:.4}"));
        let line = format!("{}\t{:.6}\t{}\t{:.3}", m.epoch, m.train_loss, dev_per, m.seconds);
        println!("{line}");
        writeln!(log, "{line}")?;
    }
    log.flush()?;
    if let Some(best) = outcome.best_epoch {
        println!("selected epoch {best}");
    }
    if outcome.substituted_utterances > 0 {
        eprintln!(
            "{} utterances trained against oracle paths (gold unreachable in their lattices)",
            outcome.substituted_utterances
        );
    }
    write_file(&args.out_model, |w| write_model(&outcome.model, w))?;
    println!("wrote model to {}", args.out_model.display());
    Ok(())
}

fn eval_model(args: &EvalArgs) -> Result<()> {
    let model = read_model(open(&args.model)?)?;
    let alphabet = model.alphabet().clone();
    let refs = read_transcriptions(open(&args.refs)?, &alphabet)?;
    let utterances =
        load_pass_utterances(&refs, &args.posteriors, &args.lattices, &alphabet, args.max_duration)?;
    println!("utterance\tper\toracle\tdensity\trtf");
    let mut total_distance = 0usize;
    let mut total_oracle = 0usize;
    let mut total_edges = 0usize;
    let mut total_len = 0usize;
    let mut total_seconds = 0.0f64;
    let mut total_audio = 0.0f64;
    for u in &utterances {
        let reference = u.gold.labels();
        let started = Instant::now();
        let decoded = decode(&model, &u.post, &u.fst)?;
        let seconds = started.elapsed().as_secs_f64();
        let distance = edit_distance(&decoded.path.labels(), &reference).distance();
        let oracle = oracle_error_rate(&u.fst, &reference)?;
        let audio = audio_seconds(u.post.num_frames());
        let rtf = real_time_factor(seconds, audio)?;
        println!(
            "{}\t{:.4}\t{:.4}\t{:.2}\t{rtf:.6}",
            u.id,
            distance as f64 / reference.len() as f64,
            oracle.error_rate,
            density(&u.fst, reference.len())?,
        );
        total_distance += distance;
        total_oracle += oracle.distance;
        total_edges += u.fst.num_edges();
        total_len += reference.len();
        total_seconds += seconds;
        total_audio += audio;
    }
    if total_len == 0 {
        bail!("no reference labels to evaluate");
    }
    println!(
        "ALL\t{:.4}\t{:.4}\t{:.2}\t{:.6}",
        total_distance as f64 / total_len as f64,
        total_oracle as f64 / total_len as f64,
        total_edges as f64 / total_len as f64,
        total_seconds / total_audio,
    );
    Ok(())
}

fn load_cascade_set(
    root: &Path,
    transcriptions: &[Transcription],
    alphabet: &LabelAlphabet,
) -> Result<Vec<CascadeUtterance>> {
    transcriptions
        .iter()
        .map(|t| {
            let path = posteriors_path(root, &t.id);
            let (post, post_alphabet, warnings) = read_posteriors(open(&path).with_context(
                || "missing posteriors; run `segcascade acoustics classify` first",
            )?)?;
            for w in warnings {
                eprintln!("{}: {w}", path.display());
            }
            if post_alphabet.len() != alphabet.len() {
                bail!("utterance '{}': posterior labels do not match", t.id);
            }
            Ok(CascadeUtterance { id: t.id.clone(), post, gold: t.path.clone() })
        })
        .collect()
}

fn cascade_train(config_path: &Path, data_dir: &Path) -> Result<()> {
    let corpus = load_corpus(data_dir)?;
    let alphabet = corpus.alphabet.clone();
    let config = parse_cascade_config(&read_to_string(config_path)?, alphabet.clone())?;
    let data = CascadeData {
        train: load_cascade_set(data_dir, &corpus.train, &alphabet)?,
        dev: load_cascade_set(data_dir, &corpus.dev, &alphabet)?,
    };
    let outcome = run_cascade_train(&config, &data)?;
    for (i, model) in outcome.models.iter().enumerate() {
        let path = data_dir.join("models").join(format!("pass{}.model", i + 1));
        write_file(&path, |w| write_model(model, w))?;
    }
    for (k, lattices) in outcome.lattices.iter().enumerate() {
        // lattices[k] feeds pass k+2.
        for (id, fst) in lattices {
            write_file(&lattice_path(data_dir, k + 2, id), |w| write_lattice(fst, &alphabet, w))?;
        }
    }
    println!("pass\tdev_per\tbest_epoch\ttrain_hours\tsubstituted");
    for stats in &outcome.passes {
        println!(
            "{}\t{}\t{}\t{:.6}\t{}",
            stats.pass,
            stats.dev_per.map_or("-".into(), |p| format!("{p:.4}")),
            stats.best_epoch.map_or("-".into(), |e| e.to_string()),
            stats.train_seconds / 3600.0,
            stats.substituted,
        );
    }
    println!();
    println!("pass\tprune\talpha\tedges_before\tedges_after\tdensity\tdev_oracle\tprune_rtf\tdropped");
    for stats in &outcome.passes {
        if let Some(p) = &stats.prune {
            println!(
                "{}\t{}\t{}\t{}\t{}\t{:.2}\t{}\t{:.6}\t{}",
                stats.pass,
                p.params.method.name(),
                p.params.alpha,
                p.edges_before,
                p.edges_after,
                p.density,
                p.dev_oracle.map_or("-".into(), |o| format!("{o:.4}")),
                p.rtf,
                p.dropped.len(),
            );
        }
    }
    write_file(&data_dir.join("timing_train.tsv"), |w| {
        writeln!(w, "pass\ttrain_hours")?;
        let mut total = 0.0;
        for stats in &outcome.passes {
            writeln!(w, "pass{}\t{:.6}", stats.pass, stats.train_seconds / 3600.0)?;
            total += stats.train_seconds;
        }
        writeln!(w, "total\t{:.6}", total / 3600.0)?;
        Ok(())
    })?;
    println!("\nwrote models to {}", data_dir.join("models").display());
    if !outcome.lattices.is_empty() {
        println!("wrote lattices under {}", lattices_dir(data_dir, 2).display());
    }
    Ok(())
}

fn cascade_decode(
    config_path: &Path,
    models_dir: &Path,
    input: &Path,
    timing: Option<&Path>,
) -> Result<()> {
    let (post, alphabet, warnings) = read_posteriors(open(input)?)?;
    for w in warnings {
        eprintln!("{}: {w}", input.display());
    }
    let config = parse_cascade_config(&read_to_string(config_path)?, alphabet.clone())?;
    let mut models = Vec::with_capacity(config.passes.len());
    for i in 1..=config.passes.len() {
        let path = models_dir.join(format!("pass{i}.model"));
        models.push(read_model(open(&path)?)?);
    }
    let started = Instant::now();
    let out = run_cascade_decode(&models, &config, &post)?;
    let wall = started.elapsed().as_secs_f64();
    for seg in out.path.segments() {
        println!("{} {} {}", seg.start, seg.end, alphabet.name(seg.label));
    }
    let audio = audio_seconds(out.num_frames);
    let mut table = String::from("stage\trtf\n");
    for (i, s) in out.pass_seconds.iter().enumerate() {
        table.push_str(&format!("pass{}\t{:.6}\n", i + 1, s / audio));
    }
    table.push_str(&format!("feed_forward\t{:.6}\n", out.feed_forward_seconds / audio));
    table.push_str(&format!("total\t{:.6}\n", wall / audio));
    eprint!("{table}");
    if let Some(flag) = out.fallback_after {
        eprintln!("note: lattice emptied after pass {flag}; returned that pass's best path");
    }
    eprintln!("score\t{:.6}", out.score);
    if let Some(path) = timing {
        write_file(path, |w| Ok(w.write_all(table.as_bytes())?))?;
    }
    Ok(())
}
