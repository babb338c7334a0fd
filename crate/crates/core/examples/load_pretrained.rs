//! Loads BERT-layout safetensors weights into the encoder and prints the
//! `[CLS]` state of one instance.
//!
//! Usage: `load_pretrained [model.safetensors config.json vocab.txt]`;
//! defaults to the tiny test fixture.

use std::path::PathBuf;

use indicator_re::corpus::from_tagged_text;
use indicator_re::indicator::IndicatorConfig;
use indicator_re::model::{load_pretrained, EncoderConfig, ModelConfig, RelationModel};
use indicator_re::pipeline::PreparedInstance;
use indicator_re::sequencing::{InputMode, Vocabulary};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let fixture = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/tiny_bert");
    let args: Vec<PathBuf> = std::env::args().skip(1).map(PathBuf::from).collect();
    let (weights, config, vocab_path) = match args.as_slice() {
        [w, c, v] => (w.clone(), c.clone(), v.clone()),
        _ => (
            fixture.join("model.safetensors"),
            fixture.join("config.json"),
            fixture.join("vocab.txt"),
        ),
    };
    let vocab = Vocabulary::from_file(&vocab_path).unwrap();
    let encoder = EncoderConfig::pretrained(&weights, &config).unwrap();
    let mut model = RelationModel::new(
        ModelConfig::new(encoder, InputMode::Both, vocab.len()),
        &mut ChaCha8Rng::seed_from_u64(0),
    )
    .unwrap();
    let report = load_pretrained(&mut model, &weights).unwrap();
    println!(
        "loaded {} tensors (prefix {:?}, {} new vocabulary rows)",
        report.tensors, report.prefix, report.new_vocab_rows
    );

    let inst = from_tagged_text(
        1,
        "The/DT <e1> boss/NN </e1> moved/VBD into/IN the/DT <e2> office/NN </e2>",
        "Entity-Destination(e1,e2)".parse().unwrap(),
    )
    .unwrap();
    let seq = PreparedInstance::new(&inst, &IndicatorConfig::default())
        .assemble(InputMode::Both, &vocab, 32)
        .unwrap();
    let h = &model.encode(std::slice::from_ref(&seq)).unwrap()[0];
    println!("tokens: {}", vocab.decode(seq.content_ids()).join(" "));
    println!("[CLS]:  {:.4}", h.0.row(0));
    let p = model.predict_proba(&[seq]).unwrap();
    println!("sum of class probabilities {:.6}", p[0].iter().sum::<f64>());
}
