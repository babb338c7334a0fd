use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Number of distinct directed labels: nine relations in two directions plus `Other`.
pub const NUM_LABELS: usize = 19;

/// Label id reserved for the artificial `Other` class.
pub const OTHER_ID: usize = 18;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Relation {
    CauseEffect,
    InstrumentAgency,
    ProductProducer,
    ContentContainer,
    EntityOrigin,
    EntityDestination,
    ComponentWhole,
    MemberCollection,
    MessageTopic,
    Other,
}

impl Relation {
    /// The nine real relations, in label-id order.
    pub const REAL: [Relation; 9] = [
        Relation::CauseEffect,
        Relation::InstrumentAgency,
        Relation::ProductProducer,
        Relation::ContentContainer,
        Relation::EntityOrigin,
        Relation::EntityDestination,
        Relation::ComponentWhole,
        Relation::MemberCollection,
        Relation::MessageTopic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Relation::CauseEffect => "Cause-Effect",
            Relation::InstrumentAgency => "Instrument-Agency",
            Relation::ProductProducer => "Product-Producer",
            Relation::ContentContainer => "Content-Container",
            Relation::EntityOrigin => "Entity-Origin",
            Relation::EntityDestination => "Entity-Destination",
            Relation::ComponentWhole => "Component-Whole",
            Relation::MemberCollection => "Member-Collection",
            Relation::MessageTopic => "Message-Topic",
            Relation::Other => "Other",
        }
    }

    pub fn from_name(name: &str) -> Option<Relation> {
        Relation::REAL
            .iter()
            .copied()
            .chain(std::iter::once(Relation::Other))
            .find(|r| r.name() == name)
    }

    /// Position among the nine real relations; `None` for `Other`.
    pub fn index(self) -> Option<usize> {
        Relation::REAL.iter().position(|&r| r == self)
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    E1ToE2,
    E2ToE1,
    None,
}

/// A directed relation label. `Other` is the only label without a direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RelationLabel {
    relation: Relation,
    direction: Direction,
}

impl RelationLabel {
    pub const OTHER: RelationLabel = RelationLabel {
        relation: Relation::Other,
        direction: Direction::None,
    };

    pub fn new(relation: Relation, direction: Direction) -> Result<Self> {
        let ok = (relation == Relation::Other) == (direction == Direction::None);
        if !ok {
            return Err(Error::Label(format!("{relation} with direction {direction:?}")));
        }
        Ok(RelationLabel {
            relation,
            direction,
        })
    }

    pub fn relation(self) -> Relation {
        self.relation
    }

    pub fn direction(self) -> Direction {
        self.direction
    }

    pub fn is_other(self) -> bool {
        self.relation == Relation::Other
    }

    /// Dense id in `0..19`: relation `k` gets `2k` for (e1,e2) and `2k+1` for (e2,e1).
    pub fn id(self) -> usize {
        match (self.relation.index(), self.direction) {
            (Some(k), Direction::E1ToE2) => 2 * k,
            (Some(k), Direction::E2ToE1) => 2 * k + 1,
            _ => OTHER_ID,
        }
    }

    pub fn from_id(id: usize) -> Option<Self> {
        match id {
            OTHER_ID => Some(RelationLabel::OTHER),
            i if i < OTHER_ID => Some(RelationLabel {
                relation: Relation::REAL[i / 2],
                direction: if i % 2 == 0 {
                    Direction::E1ToE2
                } else {
                    Direction::E2ToE1
                },
            }),
            _ => None,
        }
    }

    pub fn all() -> impl Iterator<Item = RelationLabel> {
        (0..NUM_LABELS).filter_map(RelationLabel::from_id)
    }

    /// Same relation with the opposite direction; `Other` maps to itself.
    pub fn flipped(self) -> Self {
        let direction = match self.direction {
            Direction::E1ToE2 => Direction::E2ToE1,
            Direction::E2ToE1 => Direction::E1ToE2,
            Direction::None => Direction::None,
        };
        RelationLabel {
            relation: self.relation,
            direction,
        }
    }
}

/// Parses a label string such as `Cause-Effect(e2,e1)` or `Other`.
pub fn parse_label(text: &str) -> Result<RelationLabel> {
    let text = text.trim();
    if text == "Other" {
        return Ok(RelationLabel::OTHER);
    }
    let (name, rest) = text
        .split_once('(')
        .ok_or_else(|| Error::Label(text.to_string()))?;
    let relation = match Relation::from_name(name) {
        Some(r) if r != Relation::Other => r,
        _ => return Err(Error::Label(text.to_string())),
    };
    let direction = match rest {
        "e1,e2)" => Direction::E1ToE2,
        "e2,e1)" => Direction::E2ToE1,
        _ => return Err(Error::Label(text.to_string())),
    };
    RelationLabel::new(relation, direction)
}

impl FromStr for RelationLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_label(s)
    }
}

impl fmt::Display for RelationLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.direction {
            Direction::E1ToE2 => write!(f, "{}(e1,e2)", self.relation),
            Direction::E2ToE1 => write!(f, "{}(e2,e1)", self.relation),
            Direction::None => f.write_str(self.relation.name()),
        }
    }
}

impl Serialize for RelationLabel {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for RelationLabel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        parse_label(&s).map_err(serde::de::Error::custom)
    }
}
