//! Seeded random mock-world scenes.
//!
//! People stand side by side, each in a 320x448 body box divided into a
//! 5x7 grid of 64px cells; every part is a 40x40 box centred in its own
//! cell, and loose parts sit in a 64px strip below the people. Keeping
//! parts one cell apart means an expanded repair box never reaches a
//! neighbouring part.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::backends::{AbsentSlot, PartNode, PersonNode, SceneGraph};
use crate::domain::{BBox, BodyPart};

pub const CELL: u32 = 64;
const MARGIN: u32 = 12;
const COLS: u32 = 5;
const ROWS: u32 = 7;
pub const PERSON_WIDTH: u32 = COLS * CELL;
pub const BODY_HEIGHT: u32 = ROWS * CELL;
pub const SCENE_HEIGHT: u32 = BODY_HEIGHT + CELL;

/// Grid cells of an intact body, in list order.
const ANATOMY: [(BodyPart, u32, u32); 11] = [
    (BodyPart::Head, 2, 0),
    (BodyPart::Ear, 1, 0),
    (BodyPart::Ear, 3, 0),
    (BodyPart::Hand, 0, 3),
    (BodyPart::Hand, 4, 3),
    (BodyPart::Arm, 0, 2),
    (BodyPart::Arm, 4, 2),
    (BodyPart::Leg, 1, 5),
    (BodyPart::Leg, 3, 5),
    (BodyPart::Foot, 1, 6),
    (BodyPart::Foot, 3, 6),
];

#[derive(Debug, Clone)]
pub struct SceneGenConfig {
    pub min_persons: usize,
    pub max_persons: usize,
    /// Upper bound on injected abnormalities per person (inclusive).
    pub max_abnormalities: usize,
    /// Chance that a removed part's slot is hidden behind an occluder.
    pub occluded_slot_prob: f64,
    /// Chance that a person has one present part behind an occluder.
    pub occluded_part_prob: f64,
    /// Share of injected abnormalities that are loose parts off any body.
    pub floating_prob: f64,
    /// Share of injected abnormalities that are missing parts.
    pub absent_prob: f64,
}

impl Default for SceneGenConfig {
    fn default() -> Self {
        Self {
            min_persons: 1,
            max_persons: 3,
            max_abnormalities: 3,
            occluded_slot_prob: 0.2,
            occluded_part_prob: 0.2,
            floating_prob: 0.15,
            absent_prob: 0.5,
        }
    }
}

fn cell_box(origin_x: u32, col: u32, row: u32) -> BBox {
    let x = origin_x + col * CELL;
    let y = row * CELL;
    BBox::new(x + MARGIN, y + MARGIN, x + CELL - MARGIN, y + CELL - MARGIN).expect("cell box")
}

fn cell_of(b: &BBox) -> (u32, u32) {
    (b.x_min() / CELL, b.y_min() / CELL)
}

fn cover(b: &BBox) -> BBox {
    let (c, r) = cell_of(b);
    BBox::new(c * CELL, r * CELL, (c + 1) * CELL, (r + 1) * CELL).expect("cell")
}

/// A canonical person standing in column block `index`.
pub fn canonical_person(index: usize) -> PersonNode {
    let x0 = index as u32 * PERSON_WIDTH;
    PersonNode {
        person_id: format!("person{index}"),
        body_box: BBox::new(x0, 0, x0 + PERSON_WIDTH, BODY_HEIGHT).expect("body"),
        parts: ANATOMY
            .iter()
            .map(|&(part, c, r)| PartNode {
                part,
                bbox: cell_box(x0, c, r),
                occluded: false,
            })
            .collect(),
        absent_slots: Vec::new(),
    }
}

/// Scene of `persons` canonical people and nothing else.
pub fn canonical_scene(persons: usize) -> SceneGraph {
    let mut scene = SceneGraph::empty(PERSON_WIDTH * persons.max(1) as u32, SCENE_HEIGHT);
    scene.persons = (0..persons).map(canonical_person).collect();
    scene
}

pub fn generate(seed: u64) -> SceneGraph {
    generate_with(
        &mut ChaCha8Rng::seed_from_u64(seed),
        &SceneGenConfig::default(),
    )
}

pub fn generate_with<R: Rng>(rng: &mut R, cfg: &SceneGenConfig) -> SceneGraph {
    let n = rng.random_range(cfg.min_persons.max(1)..=cfg.max_persons.max(cfg.min_persons).max(1));
    let mut scene = canonical_scene(n);
    let mut free_strip: Vec<u32> = (0..scene.width / CELL).collect();
    free_strip.shuffle(rng);

    for pi in 0..n {
        let x0 = pi as u32 * PERSON_WIDTH;
        let mut free_cells: Vec<(u32, u32)> = (0..COLS)
            .flat_map(|c| (0..ROWS).map(move |r| (c, r)))
            .filter(|cell| !ANATOMY.iter().any(|&(_, c, r)| (c, r) == *cell))
            .collect();
        free_cells.shuffle(rng);

        let k = rng.random_range(0..=cfg.max_abnormalities);
        for _ in 0..k {
            let roll: f64 = rng.random();
            if roll < cfg.floating_prob {
                if let Some(col) = free_strip.pop() {
                    let part = *BodyPart::ALL.choose(rng).expect("parts");
                    let bbox = BBox::new(
                        col * CELL + MARGIN,
                        BODY_HEIGHT + MARGIN,
                        (col + 1) * CELL - MARGIN,
                        BODY_HEIGHT + CELL - MARGIN,
                    )
                    .expect("strip cell");
                    scene.floating_parts.push(PartNode {
                        part,
                        bbox,
                        occluded: false,
                    });
                }
            } else if roll < cfg.floating_prob + cfg.absent_prob {
                remove_part(&mut scene, pi, rng, cfg);
            } else if let Some((c, r)) = free_cells.pop() {
                add_surplus(&mut scene.persons[pi], cell_box(x0, c, r), rng);
            }
        }

        if rng.random_bool(cfg.occluded_part_prob) && !scene.persons[pi].parts.is_empty() {
            let i = rng.random_range(0..scene.persons[pi].parts.len());
            let occ = cover(&scene.persons[pi].parts[i].bbox);
            scene.occluders.push(occ);
            scene.persons[pi].parts[i].occluded = true;
        }
    }
    debug_assert_eq!(scene.validate(), Ok(()));
    scene
}

fn remove_part<R: Rng>(scene: &mut SceneGraph, pi: usize, rng: &mut R, cfg: &SceneGenConfig) {
    let person = &scene.persons[pi];
    // only classes without surplus, so a class is never both short and over
    let candidates: Vec<usize> = (0..person.parts.len())
        .filter(|&i| {
            let part = person.parts[i].part;
            person.count(part) <= part.canonical_count() && !person.parts[i].occluded
        })
        .collect();
    let Some(&i) = candidates.choose(rng) else {
        return;
    };
    let removed = scene.persons[pi].parts.remove(i);
    if rng.random_bool(cfg.occluded_slot_prob) {
        scene.occluders.push(cover(&removed.bbox));
    }
    scene.persons[pi].absent_slots.push(AbsentSlot {
        part: removed.part,
        bbox: removed.bbox,
    });
}

fn add_surplus<R: Rng>(person: &mut PersonNode, bbox: BBox, rng: &mut R) {
    let options: Vec<BodyPart> = BodyPart::ALL
        .into_iter()
        .filter(|&p| person.count(p) >= p.canonical_count())
        .collect();
    if let Some(&part) = options.choose(rng) {
        person.parts.push(PartNode {
            part,
            bbox,
            occluded: false,
        });
    }
}
