//! Syntactic indicator extraction.
//!
//! The indicator of an instance is what remains of the text from the first
//! token of `e1` through the last token of `e2` after three removal passes:
//!
//! 1. entity disambiguation: coordinated conjuncts and the left members of
//!    compound nouns are dropped, keeping entity heads;
//! 2. principal components: modifiers (adjectives, adverbs, determiners,
//!    numbers, possessive pronouns) between the entities are dropped;
//! 3. unrelated entities: every other noun group between the entity heads is
//!    dropped together with the verb that governs it.
//!
//! Every dropped token is recorded once, with the rule that dropped it.

use serde::{Deserialize, Serialize};

use crate::corpus::{AnnotatedInstance, AnnotatedToken};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct IndicatorConfig {
    /// Tags removed by the principal-component pass.
    pub modifier_tags: Vec<String>,
    pub noun_tags: Vec<String>,
    pub conjunctions: Vec<String>,
    /// Be- and have-forms, never removed as governing actions.
    pub auxiliaries: Vec<String>,
    /// Treat NER-positive tokens as members of noun groups in the last pass.
    pub ner_as_noun: bool,
}

fn strings(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

impl Default for IndicatorConfig {
    fn default() -> Self {
        IndicatorConfig {
            modifier_tags: strings(&[
                "JJ", "JJR", "JJS", "RB", "RBR", "RBS", "DT", "PDT", "CD", "PRP$",
            ]),
            noun_tags: strings(&["NN", "NNS", "NNP", "NNPS"]),
            conjunctions: strings(&["and", "or"]),
            auxiliaries: strings(&[
                "be", "am", "is", "are", "was", "were", "been", "being", "'s", "'re", "'m",
                "have", "has", "had", "having", "'ve", "'d",
            ]),
            ner_as_noun: true,
        }
    }
}

impl IndicatorConfig {
    fn is_noun(&self, t: &AnnotatedToken) -> bool {
        self.noun_tags.contains(&t.pos)
    }

    fn is_modifier(&self, t: &AnnotatedToken) -> bool {
        self.modifier_tags.contains(&t.pos)
    }

    fn is_conjunction(&self, t: &AnnotatedToken) -> bool {
        let w = t.surface.to_lowercase();
        self.conjunctions.contains(&w)
    }

    fn is_group_member(&self, t: &AnnotatedToken) -> bool {
        self.is_noun(t) || (self.ner_as_noun && t.ner != "O")
    }

    fn is_verb(&self, t: &AnnotatedToken) -> bool {
        t.pos.starts_with("VB")
    }

    fn is_auxiliary(&self, t: &AnnotatedToken) -> bool {
        let w = t.surface.to_lowercase();
        self.auxiliaries.contains(&w)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    Entity1,
    Between,
    Entity2,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SliceToken {
    pub token: AnnotatedToken,
    pub region: Region,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RemovalRule {
    EntityDisambiguation,
    PrincipalComponent,
    UnrelatedEntity,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RemovalRecord {
    /// Sentence position of the removed token.
    pub token_index: usize,
    pub rule: RemovalRule,
}

/// Result of one removal pass.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RuleOutput {
    pub tokens: Vec<SliceToken>,
    pub removed: Vec<RemovalRecord>,
}

/// The extracted indicator: retained tokens of `e1`, the interior, and `e2`,
/// plus the removal trace.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndicatorSequence {
    pub tokens: Vec<AnnotatedToken>,
    /// Leading tokens that belong to `e1`.
    pub e1_len: usize,
    /// Trailing tokens that belong to `e2`.
    pub e2_len: usize,
    pub trace: Vec<RemovalRecord>,
}

impl IndicatorSequence {
    pub fn entity1(&self) -> &[AnnotatedToken] {
        &self.tokens[..self.e1_len]
    }

    pub fn interior(&self) -> &[AnnotatedToken] {
        &self.tokens[self.e1_len..self.tokens.len() - self.e2_len]
    }

    pub fn entity2(&self) -> &[AnnotatedToken] {
        &self.tokens[self.tokens.len() - self.e2_len..]
    }

    pub fn surfaces(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.surface.as_str()).collect()
    }

    /// Space-joined surfaces.
    pub fn text(&self) -> String {
        self.surfaces().join(" ")
    }
}

/// Tokens from the first token of `e1` through the last token of `e2`.
pub fn slice_between_entities(instance: &AnnotatedInstance) -> Vec<SliceToken> {
    let (e1, e2) = (instance.raw.e1, instance.raw.e2);
    instance.tokens[e1.start..e2.end]
        .iter()
        .enumerate()
        .map(|(k, t)| {
            let i = e1.start + k;
            let region = if e1.contains(i) {
                Region::Entity1
            } else if e2.contains(i) {
                Region::Entity2
            } else {
                Region::Between
            };
            SliceToken {
                token: t.clone(),
                region,
            }
        })
        .collect()
}

/// Positions of the entity heads: the rightmost noun of each entity region,
/// or its last token when the region has no noun.
fn entity_heads(tokens: &[SliceToken], cfg: &IndicatorConfig) -> [Option<usize>; 2] {
    let head = |region: Region| {
        let mut last = None;
        let mut last_noun = None;
        for (i, t) in tokens.iter().enumerate().filter(|(_, t)| t.region == region) {
            last = Some(i);
            if cfg.is_noun(&t.token) {
                last_noun = Some(i);
            }
        }
        last_noun.or(last)
    };
    [head(Region::Entity1), head(Region::Entity2)]
}

fn finish(tokens: &[SliceToken], removed: Vec<Option<RemovalRule>>) -> RuleOutput {
    let mut kept = Vec::new();
    let mut records = Vec::new();
    for (t, r) in tokens.iter().zip(removed) {
        match r {
            Some(rule) => records.push(RemovalRecord {
                token_index: t.token.index,
                rule,
            }),
            None => kept.push(t.clone()),
        }
    }
    RuleOutput {
        tokens: kept,
        removed: records,
    }
}

/// Rule 1: collapses coordinations onto the conjunct holding an entity head
/// (or the first conjunct) and compound nouns onto their rightmost noun.
/// Entity heads are never removed.
pub fn disambiguate_entities(tokens: &[SliceToken], cfg: &IndicatorConfig) -> RuleOutput {
    const RULE: RemovalRule = RemovalRule::EntityDisambiguation;
    let n = tokens.len();
    let heads = entity_heads(tokens, cfg);
    let is_head = |i: usize| heads.contains(&Some(i));
    let noun = |i: usize| cfg.is_noun(&tokens[i].token);
    let mut removed: Vec<Option<RemovalRule>> = vec![None; n];

    for k in 1..n {
        if removed[k].is_some() || !cfg.is_conjunction(&tokens[k].token) || !noun(k - 1) {
            continue;
        }
        let mut left = k - 1;
        while left > 0 && noun(left - 1) && removed[left - 1].is_none() {
            left -= 1;
        }
        let mut j = k + 1;
        while j < n && !noun(j) && cfg.is_modifier(&tokens[j].token) {
            j += 1;
        }
        if j >= n || !noun(j) {
            continue;
        }
        let mut right_end = j;
        while right_end + 1 < n && noun(right_end + 1) {
            right_end += 1;
        }
        let left_has_head = (left..k).any(is_head);
        let right_has_head = (j..=right_end).any(is_head);
        let drop = match (left_has_head, right_has_head) {
            (true, true) => continue,
            (false, true) => left..=k,
            _ => k..=right_end,
        };
        for i in drop {
            if !is_head(i) {
                removed[i] = Some(RULE);
            }
        }
    }

    let live: Vec<usize> = (0..n).filter(|&i| removed[i].is_none()).collect();
    let mut a = 0;
    while a < live.len() {
        if !noun(live[a]) {
            a += 1;
            continue;
        }
        let mut b = a;
        while b + 1 < live.len() && noun(live[b + 1]) {
            b += 1;
        }
        for &i in &live[a..b] {
            if !is_head(i) {
                removed[i] = Some(RULE);
            }
        }
        a = b + 1;
    }

    finish(tokens, removed)
}

/// Rule 2: drops modifier-tagged tokens outside the entity spans.
pub fn extract_principal_components(tokens: &[SliceToken], cfg: &IndicatorConfig) -> RuleOutput {
    let removed = tokens
        .iter()
        .map(|t| {
            (t.region == Region::Between && cfg.is_modifier(&t.token))
                .then_some(RemovalRule::PrincipalComponent)
        })
        .collect();
    finish(tokens, removed)
}

/// Rule 3: drops each noun group between the entity heads along with its
/// governing action, the nearest preceding verb with no noun in between.
/// Be/have forms are never dropped as governing actions.
pub fn remove_unrelated_entities(tokens: &[SliceToken], cfg: &IndicatorConfig) -> RuleOutput {
    const RULE: RemovalRule = RemovalRule::UnrelatedEntity;
    let n = tokens.len();
    let mut removed: Vec<Option<RemovalRule>> = vec![None; n];
    let [Some(h1), Some(h2)] = entity_heads(tokens, cfg) else {
        return finish(tokens, removed);
    };
    let member = |i: usize| tokens[i].region == Region::Between && cfg.is_group_member(&tokens[i].token);

    let mut i = h1 + 1;
    while i < h2 {
        if !member(i) {
            i += 1;
            continue;
        }
        let start = i;
        while i < h2 && member(i) {
            removed[i] = Some(RULE);
            i += 1;
        }
        for q in (h1 + 1..start).rev() {
            let t = &tokens[q].token;
            if cfg.is_group_member(t) {
                break;
            }
            if cfg.is_verb(t) {
                if !cfg.is_auxiliary(t) && tokens[q].region == Region::Between {
                    removed[q] = Some(RULE);
                }
                break;
            }
        }
    }
    finish(tokens, removed)
}

/// Runs the three passes over the entity slice of `instance`.
pub fn extract_indicator(instance: &AnnotatedInstance, cfg: &IndicatorConfig) -> IndicatorSequence {
    let slice = slice_between_entities(instance);
    let mut trace = Vec::new();
    let mut tokens = slice;
    for pass in [
        disambiguate_entities as fn(&[SliceToken], &IndicatorConfig) -> RuleOutput,
        extract_principal_components,
        remove_unrelated_entities,
    ] {
        let out = pass(&tokens, cfg);
        trace.extend(out.removed);
        tokens = out.tokens;
    }
    trace.sort_by_key(|r| r.token_index);
    let e1_len = tokens.iter().take_while(|t| t.region == Region::Entity1).count();
    let e2_len = tokens.iter().rev().take_while(|t| t.region == Region::Entity2).count();
    IndicatorSequence {
        tokens: tokens.into_iter().map(|t| t.token).collect(),
        e1_len,
        e2_len,
        trace,
    }
}
