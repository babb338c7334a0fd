//! Input ablation of the toy transformer on a train/test split of the
//! synthetic set.

use indicator_re::evaluation::run_ablation;
use indicator_re::indicator::IndicatorConfig;
use indicator_re::model::EncoderConfig;
use indicator_re::pipeline::{prepare_all, word_vocabulary};
use indicator_re::synthetic::synthetic_corpus;
use indicator_re::training::TrainConfig;

fn main() {
    let cfg = IndicatorConfig::default();
    let train = prepare_all(&synthetic_corpus(20, 1), &cfg);
    let test = prepare_all(&synthetic_corpus(10, 2), &cfg);
    let vocab = word_vocabulary(&train);
    let mut encoder = EncoderConfig::toy();
    encoder.max_positions = 64;
    let train_cfg = TrainConfig {
        epochs: 25.0,
        learning_rate: 1e-3,
        batch_size: 8,
        max_len: 64,
        ..TrainConfig::default()
    };
    let report = run_ablation(&encoder, &train_cfg, &vocab, &train, &test).unwrap();
    print!("{}", report.render());
}
