use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{AbnormalityKind, AbnormalityLabel, BodyPart};
use crate::error::{Error, Result};

pub const PART_PLACEHOLDER: &str = "{part}";

/// Which of the three template tables a prompt came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptFamily {
    AbsentRepair,
    RedundantRemoval,
    Regeneration,
}

/// Inpainting prompt templates keyed by body part.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PromptTemplateSet {
    pub absent_repair: BTreeMap<BodyPart, String>,
    pub redundant_removal: BTreeMap<BodyPart, String>,
    pub regeneration: BTreeMap<BodyPart, String>,
}

impl Default for PromptTemplateSet {
    fn default() -> Self {
        Self::uniform(
            "a natural human {part}, correct anatomy, seamless with surroundings",
            "plain background, empty area, no {part}, no human body part",
            "a human {part}",
        )
    }
}

impl PromptTemplateSet {
    /// One template per family, shared by every part.
    pub fn uniform(absent_repair: &str, redundant_removal: &str, regeneration: &str) -> Self {
        let table = |t: &str| {
            BodyPart::ALL
                .into_iter()
                .map(|p| (p, t.to_owned()))
                .collect()
        };
        Self {
            absent_repair: table(absent_repair),
            redundant_removal: table(redundant_removal),
            regeneration: table(regeneration),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, table) in self.tables() {
            for part in BodyPart::ALL {
                let t = table.get(&part).ok_or_else(|| {
                    Error::Config(format!("template table `{name}` has no entry for `{part}`"))
                })?;
                if t.matches(PART_PLACEHOLDER).count() > 1 {
                    return Err(Error::Config(format!(
                        "template `{name}.{part}` has more than one {PART_PLACEHOLDER} placeholder"
                    )));
                }
            }
        }
        Ok(())
    }

    fn tables(&self) -> [(&'static str, &BTreeMap<BodyPart, String>); 3] {
        [
            ("absent_repair", &self.absent_repair),
            ("redundant_removal", &self.redundant_removal),
            ("regeneration", &self.regeneration),
        ]
    }

    fn table(&self, family: PromptFamily) -> &BTreeMap<BodyPart, String> {
        match family {
            PromptFamily::AbsentRepair => &self.absent_repair,
            PromptFamily::RedundantRemoval => &self.redundant_removal,
            PromptFamily::Regeneration => &self.regeneration,
        }
    }

    pub fn render_family(&self, family: PromptFamily, part: BodyPart) -> String {
        self.table(family)
            .get(&part)
            .map(|t| t.replace(PART_PLACEHOLDER, part.name()))
            .unwrap_or_default()
    }

    /// Repair prompt for a label: completion for absent parts, removal for
    /// redundant ones.
    pub fn render(&self, label: AbnormalityLabel) -> String {
        let family = match label.kind {
            AbnormalityKind::Absent => PromptFamily::AbsentRepair,
            AbnormalityKind::Redundant => PromptFamily::RedundantRemoval,
        };
        self.render_family(family, label.part)
    }

    /// Reverse lookup of a rendered prompt. Returns the first match in
    /// (absent_repair, redundant_removal, regeneration) x part order.
    pub fn identify(&self, prompt: &str) -> Option<(PromptFamily, BodyPart)> {
        [
            PromptFamily::AbsentRepair,
            PromptFamily::RedundantRemoval,
            PromptFamily::Regeneration,
        ]
        .into_iter()
        .flat_map(|f| BodyPart::ALL.into_iter().map(move |p| (f, p)))
        .find(|&(f, p)| self.render_family(f, p) == prompt)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_snapshots() {
        let t = PromptTemplateSet::default();
        assert_eq!(
            t.render(AbnormalityLabel::absent(BodyPart::Hand)),
            "a natural human hand, correct anatomy, seamless with surroundings"
        );
        assert_eq!(
            t.render(AbnormalityLabel::redundant(BodyPart::Arm)),
            "plain background, empty area, no arm, no human body part"
        );
        assert_eq!(
            t.render_family(PromptFamily::Regeneration, BodyPart::Ear),
            "a human ear"
        );
        t.validate().unwrap();
    }

    #[test]
    fn constant_templates_render_verbatim() {
        let t = PromptTemplateSet::uniform("X", "X", "X");
        for label in AbnormalityLabel::all() {
            assert_eq!(t.render(label), "X");
        }
    }

    #[test]
    fn identify_round_trips_defaults() {
        let t = PromptTemplateSet::default();
        for f in [
            PromptFamily::AbsentRepair,
            PromptFamily::RedundantRemoval,
            PromptFamily::Regeneration,
        ] {
            for p in BodyPart::ALL {
                assert_eq!(t.identify(&t.render_family(f, p)), Some((f, p)));
            }
        }
        assert_eq!(t.identify("a sunny beach"), None);
    }

    #[test]
    fn validation_catches_gaps() {
        let mut t = PromptTemplateSet::default();
        t.regeneration.remove(&BodyPart::Foot);
        assert!(t.validate().is_err());
        let mut t = PromptTemplateSet::default();
        t.absent_repair
            .insert(BodyPart::Leg, "{part} and {part}".into());
        assert!(t.validate().is_err());
    }
}
