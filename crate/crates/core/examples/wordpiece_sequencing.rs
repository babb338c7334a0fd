//! Marker insertion, WordPiece segmentation and the aggregate sequence for
//! every input mode.

use indicator_re::corpus::from_tagged_text;
use indicator_re::indicator::IndicatorConfig;
use indicator_re::pipeline::PreparedInstance;
use indicator_re::sequencing::{InputMode, Vocabulary};

fn main() {
    let vocab = Vocabulary::from_tokens(
        "[PAD] [UNK] [CLS] [SEP] my new boss move ##d into his office yesterday ."
            .split(' '),
    );
    let inst = from_tagged_text(
        1,
        "My/PRP$ new/JJ <e1> boss/NN </e1> moved/VBD into/IN his/PRP$ <e2> office/NN </e2> yesterday/NN ./.",
        "Entity-Destination(e1,e2)".parse().unwrap(),
    )
    .unwrap();
    let p = PreparedInstance::new(&inst, &IndicatorConfig::default());
    println!("sentence:  {}", p.sentence.join(" "));
    println!("indicator: {}", p.indicator.join(" "));
    for mode in [InputMode::Both, InputMode::Sentence, InputMode::Indicator] {
        let seq = p.assemble(mode, &vocab, 24).unwrap();
        let pieces = vocab.decode(seq.content_ids());
        println!("\n{:<10} {}", mode.name(), pieces.join(" "));
        println!("{:<10} segments {:?}", "", &seq.segment_ids[..seq.content_len()]);
        println!("{:<10} markers {:?} indicator {:?}", "", seq.markers, seq.indicator);
    }
}
