//! Trains the toy transformer on the synthetic set until it fits.

use indicator_re::indicator::IndicatorConfig;
use indicator_re::model::{EncoderConfig, ModelConfig};
use indicator_re::pipeline::{assemble_all, prepare_all, word_vocabulary};
use indicator_re::sequencing::InputMode;
use indicator_re::synthetic::synthetic_corpus;
use indicator_re::training::{accuracy, build_model, TrainConfig, Trainer};

fn main() {
    let epochs: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(30);
    let prepared = prepare_all(&synthetic_corpus(50, 11), &IndicatorConfig::default());
    let vocab = word_vocabulary(&prepared);
    let data = assemble_all(&prepared, InputMode::Both, &vocab, 64).unwrap();

    let mut encoder = EncoderConfig::toy();
    encoder.max_positions = 64;
    let cfg = TrainConfig {
        learning_rate: 1e-3,
        batch_size: 8,
        ..TrainConfig::default()
    };
    let mut model = build_model(ModelConfig::new(encoder, InputMode::Both, vocab.len()), cfg.seed).unwrap();
    println!("{} parameters", model.params.numel());
    let mut trainer = Trainer::new(&mut model, &cfg).unwrap();
    for _ in 0..epochs {
        let m = trainer.run_epoch(&data).unwrap();
        let acc = accuracy(trainer.model(), &data).unwrap();
        println!("epoch {:>3}  loss {:>8.4}  accuracy {acc:.3}", m.epoch, m.loss);
        if acc >= 0.95 {
            break;
        }
    }
}
