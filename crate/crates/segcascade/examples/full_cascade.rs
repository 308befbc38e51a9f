//! Runs the whole pipeline in memory: synthetic corpus, frame classifier,
//! three-pass cascade training with pruning between passes, and a decode of
//! every dev utterance with per-pass timing.

use anyhow::Result;
use segcascade::acoustics::{classify, train_frame_classifier, ClassifierTrainConfig, FrameClassifier, FrameMatrix};
use segcascade::cascade::{
    run_cascade_decode, run_cascade_train, CascadeConfig, CascadeData, CascadeUtterance,
};
use segcascade::inference::{audio_seconds, edit_distance};
use segcascade::lattice::Label;
use segcascade::synth::{generate_corpus, CorpusSpec, TransitionTable};

fn main() -> Result<()> {
    let mut spec = CorpusSpec::default();
    spec.generator.num_labels = 8;
    spec.generator.transitions = TransitionTable::uniform(8)?;
    spec.generator.num_utterances = 80;
    spec.generator.sigma = 0.35;
    spec.dev_utterances = 20;
    let corpus = generate_corpus(&spec)?;

    let frame_pairs: Vec<(FrameMatrix, Vec<Label>)> = corpus
        .train
        .iter()
        .map(|u| Ok((u.frames.clone(), u.gold.frame_labels()?)))
        .collect::<Result<_>>()?;
    let refs: Vec<(&FrameMatrix, &[Label])> =
        frame_pairs.iter().map(|(f, l)| (f, l.as_slice())).collect();
    let num_labels = corpus.alphabet.len();
    let mut clf = FrameClassifier::new(num_labels, num_labels, 1)?;
    train_frame_classifier(&mut clf, &refs, &ClassifierTrainConfig::default())?;

    let to_utterances = |set: &[segcascade::synth::SyntheticUtterance]| -> Result<Vec<CascadeUtterance>> {
        set.iter()
            .map(|u| {
                Ok(CascadeUtterance {
                    id: u.id.clone(),
                    post: classify(&clf, &u.frames)?,
                    gold: u.gold.clone(),
                })
            })
            .collect()
    };
    let data = CascadeData { train: to_utterances(&corpus.train)?, dev: to_utterances(&corpus.dev)? };

    // The stock recipe: a cheap two-feature pass pruned hard, a rich
    // lexicalized pass pruned gently, and a final pass that adds the bigram
    // language model on top of the surviving lattice.
    let config = CascadeConfig::default_recipe(corpus.alphabet.clone())?;
    let outcome = run_cascade_train(&config, &data)?;
    println!("pass  dev-per  pruned-to");
    for stats in &outcome.passes {
        let pruned = stats.prune.as_ref().map_or("-".to_string(), |p| {
            format!("{}/{} edges", p.edges_after, p.edges_before)
        });
        println!(
            "{:<5} {:<8} {pruned}",
            stats.pass,
            stats.dev_per.map_or("-".to_string(), |p| format!("{p:.4}"))
        );
    }
    let mut errors = 0usize;
    let mut len = 0usize;
    let mut seconds = 0.0f64;
    let mut audio = 0.0f64;
    for u in &data.dev {
        let decoded = run_cascade_decode(&outcome.models, &config, &u.post)?;
        errors += edit_distance(&decoded.path.labels(), &u.gold.labels()).distance();
        len += u.gold.len();
        seconds += decoded.pass_seconds.iter().sum::<f64>();
        audio += audio_seconds(decoded.num_frames);
    }
    println!(
        "cascade decode of {} dev utterances: PER {:.4}, search RTF {:.5}",
        data.dev.len(),
        errors as f64 / len as f64,
        seconds / audio
    );
    Ok(())
}
