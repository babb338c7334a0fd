//! Official-style scoring of a handful of predictions, and a comparison of
//! two runs.

use indicator_re::corpus::parse_label;
use indicator_re::evaluation::{score_official, Comparison};

fn main() {
    let l = |s: &str| parse_label(s).unwrap();
    let gold = [
        l("Cause-Effect(e1,e2)"),
        l("Cause-Effect(e1,e2)"),
        l("Content-Container(e1,e2)"),
        l("Other"),
        l("Message-Topic(e2,e1)"),
    ];
    let run_a = [
        l("Cause-Effect(e1,e2)"),
        l("Cause-Effect(e2,e1)"),
        l("Content-Container(e1,e2)"),
        l("Cause-Effect(e1,e2)"),
        l("Other"),
    ];
    let run_b = [
        l("Cause-Effect(e1,e2)"),
        l("Cause-Effect(e1,e2)"),
        l("Content-Container(e1,e2)"),
        l("Other"),
        l("Message-Topic(e1,e2)"),
    ];
    let a = score_official(&gold, &run_a).unwrap();
    let b = score_official(&gold, &run_b).unwrap();
    print!("{}", a.render());
    println!();
    print!("{}", Comparison::new("a", &a, "b", &b).render());
}
