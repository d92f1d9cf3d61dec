use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// The six body-part classes. Declaration order is the canonical iteration
/// order used everywhere a deterministic ordering is needed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BodyPart {
    Head,
    Ear,
    Hand,
    Arm,
    Leg,
    Foot,
}

impl BodyPart {
    pub const ALL: [BodyPart; 6] = [
        BodyPart::Head,
        BodyPart::Ear,
        BodyPart::Hand,
        BodyPart::Arm,
        BodyPart::Leg,
        BodyPart::Foot,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BodyPart::Head => "head",
            BodyPart::Ear => "ear",
            BodyPart::Hand => "hand",
            BodyPart::Arm => "arm",
            BodyPart::Leg => "leg",
            BodyPart::Foot => "foot",
        }
    }

    /// How many of this part an intact human body has.
    pub fn canonical_count(self) -> usize {
        match self {
            BodyPart::Head => 1,
            _ => 2,
        }
    }
}

impl fmt::Display for BodyPart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BodyPart {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BodyPart::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| format!("unknown body part `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AbnormalityKind {
    Absent,
    Redundant,
}

impl AbnormalityKind {
    pub const ALL: [AbnormalityKind; 2] = [AbnormalityKind::Absent, AbnormalityKind::Redundant];

    pub fn name(self) -> &'static str {
        match self {
            AbnormalityKind::Absent => "absent",
            AbnormalityKind::Redundant => "redundant",
        }
    }
}

impl fmt::Display for AbnormalityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AbnormalityKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "absent" => Ok(AbnormalityKind::Absent),
            "redundant" => Ok(AbnormalityKind::Redundant),
            _ => Err(format!("unknown abnormality kind `{s}`")),
        }
    }
}

/// One of the twelve (kind, part) abnormality classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AbnormalityLabel {
    pub kind: AbnormalityKind,
    pub part: BodyPart,
}

impl AbnormalityLabel {
    pub const fn new(kind: AbnormalityKind, part: BodyPart) -> Self {
        Self { kind, part }
    }

    pub const fn absent(part: BodyPart) -> Self {
        Self::new(AbnormalityKind::Absent, part)
    }

    pub const fn redundant(part: BodyPart) -> Self {
        Self::new(AbnormalityKind::Redundant, part)
    }

    /// All twelve labels, kind-major then part order.
    pub fn all() -> impl Iterator<Item = AbnormalityLabel> {
        AbnormalityKind::ALL.into_iter().flat_map(|kind| {
            BodyPart::ALL
                .into_iter()
                .map(move |part| Self::new(kind, part))
        })
    }
}

impl fmt::Display for AbnormalityLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.kind, self.part)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn twelve_distinct_labels_in_stable_order() {
        let labels: Vec<_> = AbnormalityLabel::all().collect();
        assert_eq!(labels.len(), 12);
        assert_eq!(labels.iter().collect::<BTreeSet<_>>().len(), 12);
        let mut sorted = labels.clone();
        sorted.sort();
        assert_eq!(labels, sorted);
        assert_eq!(labels[0], AbnormalityLabel::absent(BodyPart::Head));
        assert_eq!(labels[11], AbnormalityLabel::redundant(BodyPart::Foot));
    }

    #[test]
    fn part_order_and_names() {
        assert!(BodyPart::Head < BodyPart::Ear && BodyPart::Leg < BodyPart::Foot);
        for p in BodyPart::ALL {
            assert_eq!(p.name().parse::<BodyPart>().unwrap(), p);
        }
        assert!("tail".parse::<BodyPart>().is_err());
        let json = serde_json::to_string(&AbnormalityLabel::absent(BodyPart::Hand)).unwrap();
        assert_eq!(json, r#"{"kind":"absent","part":"hand"}"#);
    }
}
