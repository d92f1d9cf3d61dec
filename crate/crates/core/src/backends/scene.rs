use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::domain::{BBox, BodyPart};
use crate::error::{Error, Result};

/// Expected count of each part on an intact human body.
#[derive(Debug, Clone, Copy, Default)]
pub struct CanonicalAnatomy;

impl CanonicalAnatomy {
    pub const TABLE: [(BodyPart, usize); 6] = [
        (BodyPart::Head, 1),
        (BodyPart::Ear, 2),
        (BodyPart::Hand, 2),
        (BodyPart::Arm, 2),
        (BodyPart::Leg, 2),
        (BodyPart::Foot, 2),
    ];

    pub fn expected_count(part: BodyPart) -> usize {
        part.canonical_count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartNode {
    pub part: BodyPart,
    #[serde(rename = "box")]
    pub bbox: BBox,
    #[serde(default)]
    pub occluded: bool,
}

/// Where a missing part would be, for the mock absent detector.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AbsentSlot {
    pub part: BodyPart,
    #[serde(rename = "box")]
    pub bbox: BBox,
}

/// A person in the mock world.
///
/// Within each class, the first `expected_count` parts in list order occupy
/// the anatomical slots; any further parts of that class are surplus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PersonNode {
    pub person_id: String,
    pub body_box: BBox,
    pub parts: Vec<PartNode>,
    #[serde(default)]
    pub absent_slots: Vec<AbsentSlot>,
}

impl PersonNode {
    pub fn count(&self, part: BodyPart) -> usize {
        self.parts.iter().filter(|p| p.part == part).count()
    }

    /// Rank of `parts[index]` among the person's parts of the same class.
    pub fn rank_of(&self, index: usize) -> usize {
        let class = self.parts[index].part;
        self.parts[..index]
            .iter()
            .filter(|p| p.part == class)
            .count()
    }
}

/// Deterministic stand-in for an image: people, their parts, loose parts
/// and occluding objects, all as pixel boxes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneGraph {
    pub width: u32,
    pub height: u32,
    pub persons: Vec<PersonNode>,
    #[serde(default)]
    pub floating_parts: Vec<PartNode>,
    #[serde(default)]
    pub occluders: Vec<BBox>,
}

/// A box counts as hidden when occluders cover at least half of it.
pub(crate) const OCCLUSION_COVERAGE: f64 = 0.5;

impl SceneGraph {
    pub fn empty(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            persons: Vec::new(),
            floating_parts: Vec::new(),
            occluders: Vec::new(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let scene: SceneGraph =
            serde_json::from_str(&text).map_err(|e| Error::json(path.display().to_string(), e))?;
        scene
            .validate()
            .map_err(|msg| Error::Data(format!("{}: {msg}", path.display())))?;
        Ok(scene)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::json(path.display().to_string(), e))?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.width == 0 || self.height == 0 {
            return Err("scene has zero extent".into());
        }
        let in_bounds = |b: &BBox, what: &str| {
            if b.fits_within(self.width, self.height) {
                Ok(())
            } else {
                Err(format!(
                    "{what} box {b} exceeds {}x{}",
                    self.width, self.height
                ))
            }
        };
        for person in &self.persons {
            in_bounds(&person.body_box, &person.person_id)?;
            for part in &person.parts {
                in_bounds(&part.bbox, &format!("{}/{}", person.person_id, part.part))?;
                if !part.bbox.intersects(&person.body_box) {
                    return Err(format!(
                        "{}/{} at {} lies outside the body box",
                        person.person_id, part.part, part.bbox
                    ));
                }
                self.check_occlusion_flag(part)?;
            }
            for slot in &person.absent_slots {
                in_bounds(&slot.bbox, &format!("{} absent slot", person.person_id))?;
            }
        }
        for part in &self.floating_parts {
            in_bounds(&part.bbox, &format!("floating {}", part.part))?;
            self.check_occlusion_flag(part)?;
        }
        for occ in &self.occluders {
            in_bounds(occ, "occluder")?;
        }
        Ok(())
    }

    fn check_occlusion_flag(&self, part: &PartNode) -> std::result::Result<(), String> {
        if part.occluded && !self.is_occluded(&part.bbox) {
            return Err(format!(
                "{} at {} is flagged occluded but no occluder covers it",
                part.part, part.bbox
            ));
        }
        Ok(())
    }

    /// Whether some occluder hides at least half of `b`.
    pub fn is_occluded(&self, b: &BBox) -> bool {
        self.occluders
            .iter()
            .any(|o| b.coverage_by(o) >= OCCLUSION_COVERAGE)
    }

    /// All parts in scene order: persons' parts first, then floating parts.
    pub fn parts(&self) -> impl Iterator<Item = &PartNode> {
        self.persons
            .iter()
            .flat_map(|p| p.parts.iter())
            .chain(self.floating_parts.iter())
    }

    pub fn part_count(&self) -> usize {
        self.parts().count()
    }

    /// Every coordinate multiplied by `factor`.
    pub fn scaled(&self, factor: u32) -> SceneGraph {
        let scale_part = |p: &PartNode| PartNode {
            part: p.part,
            bbox: p.bbox.scaled(factor),
            occluded: p.occluded,
        };
        SceneGraph {
            width: self.width * factor,
            height: self.height * factor,
            persons: self
                .persons
                .iter()
                .map(|person| PersonNode {
                    person_id: person.person_id.clone(),
                    body_box: person.body_box.scaled(factor),
                    parts: person.parts.iter().map(scale_part).collect(),
                    absent_slots: person
                        .absent_slots
                        .iter()
                        .map(|s| AbsentSlot {
                            part: s.part,
                            bbox: s.bbox.scaled(factor),
                        })
                        .collect(),
                })
                .collect(),
            floating_parts: self.floating_parts.iter().map(scale_part).collect(),
            occluders: self.occluders.iter().map(|o| o.scaled(factor)).collect(),
        }
    }
}
