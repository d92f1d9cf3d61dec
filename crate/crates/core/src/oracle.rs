//! Brute-force anatomy oracle for the mock world.
//!
//! Counts parts per person against the canonical table without going
//! through any backend. Used only by tests.

use crate::backends::SceneGraph;
use crate::domain::{AbnormalityLabel, BBox, BodyPart};

fn hidden(scene: &SceneGraph, b: &BBox) -> bool {
    scene
        .occluders
        .iter()
        .any(|o| 2 * b.intersection_area(o) >= b.area())
}

/// Every abnormality in the scene as (label, box), sorted.
///
/// Surplus parts are the ones past the canonical count in list order, plus
/// every loose part. Missing parts are reported at their authored slot
/// unless the slot is hidden or already holds a part of that class.
pub fn abnormalities(scene: &SceneGraph) -> Vec<(AbnormalityLabel, BBox)> {
    let mut out = Vec::new();
    for person in &scene.persons {
        for class in BodyPart::ALL {
            let expected = match class {
                BodyPart::Head => 1,
                _ => 2,
            };
            let boxes: Vec<BBox> = person
                .parts
                .iter()
                .filter(|p| p.part == class)
                .map(|p| p.bbox)
                .collect();
            if boxes.len() > expected {
                out.extend(
                    boxes[expected..]
                        .iter()
                        .map(|b| (AbnormalityLabel::redundant(class), *b)),
                );
            }
            let missing = expected.saturating_sub(boxes.len());
            let open_slots = person
                .absent_slots
                .iter()
                .filter(|s| s.part == class && !hidden(scene, &s.bbox))
                .filter(|s| {
                    !boxes
                        .iter()
                        .any(|b| 2 * s.bbox.intersection_area(b) >= s.bbox.area())
                });
            out.extend(
                open_slots
                    .take(missing)
                    .map(|s| (AbnormalityLabel::absent(class), s.bbox)),
            );
        }
    }
    out.extend(
        scene
            .floating_parts
            .iter()
            .map(|p| (AbnormalityLabel::redundant(p.part), p.bbox)),
    );
    out.sort();
    out
}

pub fn is_clean(scene: &SceneGraph) -> bool {
    abnormalities(scene).is_empty()
}

/// Missing parts whose slots are visible.
pub fn absent_deficit(scene: &SceneGraph) -> usize {
    abnormalities(scene)
        .iter()
        .filter(|(l, _)| l.kind == crate::domain::AbnormalityKind::Absent)
        .count()
}

/// Parts of `before` that no region touches but that are missing or altered
/// in `after`, described for test output. Occluder changes are reported too.
pub fn locality_violations(
    before: &SceneGraph,
    after: &SceneGraph,
    regions: &[BBox],
) -> Vec<String> {
    let untouched = |b: &BBox| !regions.iter().any(|r| r.intersects(b));
    let mut out = Vec::new();
    for person in &before.persons {
        let Some(twin) = after
            .persons
            .iter()
            .find(|p| p.person_id == person.person_id)
        else {
            out.push(format!("person {} disappeared", person.person_id));
            continue;
        };
        for part in person.parts.iter().filter(|p| untouched(&p.bbox)) {
            if !twin.parts.contains(part) {
                out.push(format!(
                    "{} {} of {} changed",
                    part.part, part.bbox, person.person_id
                ));
            }
        }
    }
    for part in before.floating_parts.iter().filter(|p| untouched(&p.bbox)) {
        if !after.floating_parts.contains(part) {
            out.push(format!("loose {} {} changed", part.part, part.bbox));
        }
    }
    if before.occluders != after.occluders {
        out.push("occluders changed".to_owned());
    }
    out
}
