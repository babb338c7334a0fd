//! Syntactic indicators for a few POS-tagged sentences, with the removal trace.

use indicator_re::corpus::{from_tagged_text, RelationLabel};
use indicator_re::indicator::{extract_indicator, IndicatorConfig};

const SENTENCES: [&str; 3] = [
    "The/DT <e1> shock/NN </e1> and/CC anger/NN caused/VBN by/IN the/DT surprise/NN <e2> attack/NN </e2> were/VBD overwhelming/JJ ./.",
    "The/DT <e1> coins/NNS </e1> are/VBP enclosed/VBN in/IN a/DT clear/JJ hard/JJ plastic/NN <e2> case/NN </e2> ./.",
    "The/DT <e1> analyzer/NN </e1> first/RB identifies/VBZ the/DT infeasible/JJ paths/NNS using/VBG the/DT constraint/NN propagation/NN <e2> method/NN </e2> ./.",
];

fn main() {
    let cfg = IndicatorConfig::default();
    for (i, text) in SENTENCES.iter().enumerate() {
        let inst = from_tagged_text(i as u32 + 1, text, RelationLabel::OTHER).unwrap();
        let ind = extract_indicator(&inst, &cfg);
        println!("{}\t{}", inst.id(), ind.text());
        for r in &ind.trace {
            println!("    removed {:<14} by {:?}", inst.tokens[r.token_index].surface, r.rule);
        }
    }
}
