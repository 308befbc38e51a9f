//! Trains a first-pass segmental model end to end on synthetic data: sample
//! a corpus, fit the frame classifier, turn frames into log-posteriors, build
//! dense hypothesis spaces, and run structured hinge training with the
//! two-feature model (posterior sum + bias) that the first cascade pass uses.

use anyhow::Result;
use segcascade::acoustics::{
    classify, train_frame_classifier, ClassifierTrainConfig, FrameClassifier, FrameMatrix,
    PosteriorMatrix,
};
use segcascade::features::{FeatureTemplateSet, Model};
use segcascade::lattice::{build_hypothesis_space, Fst, Label};
use segcascade::synth::{generate_corpus, CorpusSpec, TransitionTable};
use segcascade::training::{train_pass, TrainConfig, TrainUtterance};

const MAX_DURATION: u32 = 8;

fn prepare(
    clf: &FrameClassifier,
    set: &[segcascade::synth::SyntheticUtterance],
    num_labels: usize,
) -> Result<Vec<(PosteriorMatrix, Fst, segcascade::lattice::SegmentPath)>> {
    set.iter()
        .map(|u| {
            let post = classify(clf, &u.frames)?;
            let fst =
                build_hypothesis_space(u.frames.num_frames() as u32, num_labels, MAX_DURATION)?;
            Ok((post, fst, u.gold.clone()))
        })
        .collect()
}

fn main() -> Result<()> {
    let mut spec = CorpusSpec::default();
    spec.generator.num_labels = 8;
    spec.generator.transitions = TransitionTable::uniform(8)?;
    spec.generator.num_utterances = 80;
    spec.generator.sigma = 0.35;
    spec.dev_utterances = 20;
    let corpus = generate_corpus(&spec)?;
    let num_labels = corpus.alphabet.len();

    let frame_pairs: Vec<(FrameMatrix, Vec<Label>)> = corpus
        .train
        .iter()
        .map(|u| Ok((u.frames.clone(), u.gold.frame_labels()?)))
        .collect::<Result<_>>()?;
    let refs: Vec<(&FrameMatrix, &[Label])> =
        frame_pairs.iter().map(|(f, l)| (f, l.as_slice())).collect();
    let mut clf = FrameClassifier::new(num_labels, num_labels, 1)?;
    train_frame_classifier(&mut clf, &refs, &ClassifierTrainConfig::default())?;

    let train_data = prepare(&clf, &corpus.train, num_labels)?;
    let dev_data = prepare(&clf, &corpus.dev, num_labels)?;
    fn to_refs(
        data: &[(PosteriorMatrix, Fst, segcascade::lattice::SegmentPath)],
    ) -> Vec<TrainUtterance<'_>> {
        data.iter().map(|(post, fst, gold)| TrainUtterance { post, fst, gold }).collect()
    }

    let templates = FeatureTemplateSet::parse_list("label_posterior_sum bias", 3, MAX_DURATION)?;
    let model = Model::new(templates, corpus.alphabet.clone(), None)?;
    let cfg = TrainConfig { epochs: 5, ..TrainConfig::default() };
    let outcome = train_pass(model, &to_refs(&train_data), &to_refs(&dev_data), &cfg)?;

    println!("epoch  train-loss  dev-per");
    for m in &outcome.metrics {
        println!(
            "{:<6} {:<11.4} {}",
            m.epoch,
            m.train_loss,
            m.dev_per.map_or("-".to_string(), |p| format!("{p:.4}"))
        );
    }
    if let Some(best) = outcome.best_epoch {
        println!("kept weights from epoch {best}");
    }
    println!("learned weights: {:?}", outcome.model.theta());
    Ok(())
}
