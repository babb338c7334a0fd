//! Analytic gradients of the ranking loss against central differences for
//! three head biases, in evaluation mode.

use indicator_re::indicator::IndicatorConfig;
use indicator_re::model::{EncoderConfig, LossConfig, ModelConfig};
use indicator_re::pipeline::{assemble_all, prepare_all, word_vocabulary};
use indicator_re::sequencing::InputMode;
use indicator_re::synthetic::synthetic_corpus;
use indicator_re::tensor::gradcheck::{numeric_gradient, relative_error};
use indicator_re::training::build_model;
use rand_chacha::ChaCha8Rng;

fn main() {
    let prepared = prepare_all(&synthetic_corpus(1, 5), &IndicatorConfig::default());
    let vocab = word_vocabulary(&prepared);
    let batch = assemble_all(&prepared, InputMode::Both, &vocab, 32).unwrap();
    let mut encoder = EncoderConfig::toy();
    encoder.max_positions = 32;
    let mut model = build_model(ModelConfig::new(encoder, InputMode::Both, vocab.len()), 1).unwrap();
    let loss = LossConfig::default();

    let out = model
        .batch_gradients(&batch, &loss, None::<&mut ChaCha8Rng>)
        .unwrap();
    let heads = model.heads().unwrap().clone();
    let network = model.network().clone();
    for id in [heads.classifier.b, heads.entity.b, heads.fuse_out.b] {
        let analytic = out.grads.get(id).unwrap().clone();
        let numeric = numeric_gradient(&mut model.params, id, 1e-4, |store| {
            network.batch_loss(store, &batch, &loss).unwrap()
        });
        println!(
            "{:<22} relative error {:.2e}",
            model.params.name(id),
            relative_error(&analytic, &numeric)
        );
    }
}
