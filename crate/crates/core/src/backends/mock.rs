//! Deterministic mock world.
//!
//! All six backend roles are implemented as pure functions over
//! [`SceneGraph`] payloads:
//!
//! * grounding returns every part of a requested class with score 1.0;
//! * inpainting deletes parts covered at least half by the region, then
//!   regenerates a part only where an anatomical slot was vacated or a
//!   nearby person is short of that class;
//! * the absent detector reports the first visible empty slot of the first
//!   under-count class, in (person, class) order;
//! * embeddings are hash-seeded Gaussian vectors summed over scene content.

use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use sha2::{Digest, Sha256};

use super::{
    AbsentDetector, BackendError, BackendResult, Embedder, Embedding, Grounder, ImageOps,
    Inpainter, PartNode, PersonNode, PromptRewriter, SceneGraph,
};
use crate::domain::{BBox, BodyPart, ImageRef, PartDetection, PromptFamily, PromptTemplateSet};

pub const DEFAULT_EMBEDDING_DIM: usize = 64;

/// Part coverage at or above which an inpainting region erases the part.
pub const ERASE_COVERAGE: f64 = 0.5;

#[derive(Debug, Clone)]
pub struct MockWorld {
    templates: PromptTemplateSet,
    dim: usize,
}

impl Default for MockWorld {
    fn default() -> Self {
        Self::new(PromptTemplateSet::default())
    }
}

impl MockWorld {
    pub fn new(templates: PromptTemplateSet) -> Self {
        Self {
            templates,
            dim: DEFAULT_EMBEDDING_DIM,
        }
    }

    pub fn with_dim(mut self, dim: usize) -> Self {
        assert!(dim > 0);
        self.dim = dim;
        self
    }

    fn scene_of(image: &ImageRef, op: &'static str) -> BackendResult<std::sync::Arc<SceneGraph>> {
        image
            .scene()
            .map_err(|e| BackendError::precondition(op, e.to_string()))
    }

    fn hashed_vector(&self, key: &str) -> Vec<f64> {
        let digest = Sha256::digest(key.as_bytes());
        let mut seed = [0u8; 32];
        seed.copy_from_slice(&digest);
        let mut rng = ChaCha8Rng::from_seed(seed);
        (0..self.dim)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect()
    }

    fn accumulate(&self, acc: &mut [f64], key: &str, weight: f64) {
        for (a, v) in acc.iter_mut().zip(self.hashed_vector(key)) {
            *a += weight * v;
        }
    }

    fn embed_scene(&self, scene: &SceneGraph) -> Vec<f64> {
        // Coarse 32px cells so that small box changes keep most of the vector.
        let cell = |b: &BBox| ((b.x_min() + b.x_max()) / 64, (b.y_min() + b.y_max()) / 64);
        let mut acc = vec![0.0; self.dim];
        self.accumulate(
            &mut acc,
            &format!("canvas:{}x{}", scene.width, scene.height),
            2.0,
        );
        for part in scene.parts() {
            let (cx, cy) = cell(&part.bbox);
            self.accumulate(&mut acc, &format!("part:{}:{cx}:{cy}", part.part), 0.5);
        }
        for occ in &scene.occluders {
            let (cx, cy) = cell(occ);
            self.accumulate(&mut acc, &format!("occluder:{cx}:{cy}"), 0.5);
        }
        acc
    }
}

impl Grounder for MockWorld {
    fn ground(
        &self,
        image: &ImageRef,
        vocabulary: &[BodyPart],
        threshold: f64,
    ) -> BackendResult<Vec<PartDetection>> {
        if vocabulary.is_empty() {
            return Err(BackendError::precondition("ground", "empty vocabulary"));
        }
        let scene = Self::scene_of(image, "ground")?;
        const SCORE: f64 = 1.0;
        if SCORE < threshold {
            return Ok(Vec::new());
        }
        Ok(scene
            .parts()
            .filter(|p| vocabulary.contains(&p.part))
            .map(|p| PartDetection::new(p.part, p.bbox, SCORE))
            .collect())
    }
}

impl Inpainter for MockWorld {
    fn inpaint(&self, image: &ImageRef, region: BBox, prompt: &str) -> BackendResult<ImageRef> {
        if prompt.trim().is_empty() {
            return Err(BackendError::precondition("inpaint", "empty prompt"));
        }
        if !region.fits_within(image.width(), image.height()) {
            return Err(BackendError::precondition(
                "inpaint",
                format!(
                    "region {region} outside {}x{}",
                    image.width(),
                    image.height()
                ),
            ));
        }
        let scene = Self::scene_of(image, "inpaint")?;
        let edited = inpaint_scene(&scene, region, self.templates.identify(prompt));
        Ok(ImageRef::from_scene(next_id(image.id(), "e"), edited))
    }
}

/// Applies the mock inpainting rules to a scene.
fn inpaint_scene(
    scene: &SceneGraph,
    region: BBox,
    intent: Option<(PromptFamily, BodyPart)>,
) -> SceneGraph {
    let erased = |p: &PartNode| p.bbox.coverage_by(&region) >= ERASE_COVERAGE;
    let regenerates = match intent {
        Some((PromptFamily::AbsentRepair | PromptFamily::Regeneration, part)) => Some(part),
        _ => None,
    };

    let mut out = scene.clone();
    // (person index, position in the surviving list) of the first vacated
    // anatomical slot of the regenerated class.
    let mut vacated: Option<(usize, usize)> = None;
    for (pi, person) in scene.persons.iter().enumerate() {
        let mut kept = Vec::with_capacity(person.parts.len());
        for (i, part) in person.parts.iter().enumerate() {
            if !erased(part) {
                kept.push(part.clone());
                continue;
            }
            let anatomical = person.rank_of(i) < part.part.canonical_count();
            if vacated.is_none() && anatomical && regenerates == Some(part.part) {
                vacated = Some((pi, kept.len()));
            }
        }
        out.persons[pi].parts = kept;
    }
    out.floating_parts.retain(|p| !erased(p));

    if let Some(part) = regenerates {
        let node = PartNode {
            part,
            bbox: region,
            occluded: scene.is_occluded(&region),
        };
        if let Some((pi, pos)) = vacated {
            out.persons[pi].parts.insert(pos, node);
        } else if let Some(person) = out
            .persons
            .iter_mut()
            .find(|p| p.body_box.intersects(&region) && p.count(part) < part.canonical_count())
        {
            person.parts.push(node);
        }
    }
    out
}

impl AbsentDetector for MockWorld {
    fn detect_absent(&self, image: &ImageRef) -> BackendResult<Option<(BodyPart, BBox)>> {
        let scene = Self::scene_of(image, "detect_absent")?;
        Ok(scene
            .persons
            .iter()
            .find_map(|person| first_visible_deficit(&scene, person)))
    }
}

fn first_visible_deficit(scene: &SceneGraph, person: &PersonNode) -> Option<(BodyPart, BBox)> {
    BodyPart::ALL.into_iter().find_map(|class| {
        if person.count(class) >= class.canonical_count() {
            return None;
        }
        person
            .absent_slots
            .iter()
            .filter(|s| s.part == class)
            .filter(|s| !scene.is_occluded(&s.bbox))
            .find(|s| {
                !person
                    .parts
                    .iter()
                    .any(|p| p.part == class && s.bbox.coverage_by(&p.bbox) >= ERASE_COVERAGE)
            })
            .map(|s| (class, s.bbox))
    })
}

impl Embedder for MockWorld {
    fn embed_image(&self, image: &ImageRef) -> BackendResult<Embedding> {
        let values = match image.scene() {
            Ok(scene) => self.embed_scene(&scene),
            Err(_) => self.hashed_vector(&format!(
                "file:{}:{}x{}",
                image
                    .path()
                    .map(|p| p.display().to_string())
                    .unwrap_or_default(),
                image.width(),
                image.height()
            )),
        };
        Embedding::new(values).map_err(|m| BackendError::precondition("embed", m))
    }

    fn embed_text(&self, text: &str) -> BackendResult<Embedding> {
        let words: Vec<String> = text
            .split(|c: char| !c.is_alphanumeric())
            .filter(|w| !w.is_empty())
            .map(str::to_lowercase)
            .collect();
        if words.is_empty() {
            return Err(BackendError::precondition("embed", "text has no words"));
        }
        let mut acc = vec![0.0; self.dim];
        for w in &words {
            self.accumulate(&mut acc, &format!("word:{w}"), 1.0);
        }
        Embedding::new(acc).map_err(|m| BackendError::precondition("embed", m))
    }
}

impl ImageOps for MockWorld {
    fn upscale(&self, image: &ImageRef, factor: u32) -> BackendResult<ImageRef> {
        if factor == 0 {
            return Err(BackendError::precondition("upscale", "factor must be >= 1"));
        }
        let scene = Self::scene_of(image, "upscale")?;
        Ok(ImageRef::from_scene(
            next_id(image.id(), "u"),
            scene.scaled(factor),
        ))
    }

    fn interpolate_video(
        &self,
        first: &ImageRef,
        last: &ImageRef,
        prompt: &str,
        frame_count: usize,
    ) -> BackendResult<Vec<ImageRef>> {
        if frame_count < 2 {
            return Err(BackendError::precondition(
                "interpolate",
                "frame_count must be >= 2",
            ));
        }
        if prompt.trim().is_empty() {
            return Err(BackendError::precondition("interpolate", "empty prompt"));
        }
        let a = Self::scene_of(first, "interpolate")?;
        let b = Self::scene_of(last, "interpolate")?;
        if (a.width, a.height) != (b.width, b.height) {
            return Err(BackendError::precondition(
                "interpolate",
                "first and last frames differ in size",
            ));
        }
        let n = frame_count - 1;
        let mut frames = Vec::with_capacity(frame_count);
        frames.push(first.clone());
        for k in 1..n {
            let t = k as f64 / n as f64;
            frames.push(ImageRef::from_scene(
                format!("{}.f{k}", first.id()),
                interpolate_scene(&a, &b, t),
            ));
        }
        frames.push(last.clone());
        Ok(frames)
    }
}

fn lerp_box(a: &BBox, b: &BBox, t: f64) -> BBox {
    let l = |x: u32, y: u32| (f64::from(x) + (f64::from(y) - f64::from(x)) * t).round() as u32;
    BBox::new(
        l(a.x_min(), b.x_min()),
        l(a.y_min(), b.y_min()),
        l(a.x_max(), b.x_max()),
        l(a.y_max(), b.y_max()),
    )
    .expect("interpolation of two valid boxes is valid")
}

/// Matches parts by (class, rank within class); unmatched parts belong to
/// whichever endpoint is nearer in time.
fn lerp_parts(a: &[PartNode], b: &[PartNode], t: f64) -> Vec<PartNode> {
    let keyed = |parts: &[PartNode]| {
        let mut seen: HashMap<BodyPart, usize> = HashMap::new();
        parts
            .iter()
            .map(|p| {
                let r = seen.entry(p.part).or_default();
                *r += 1;
                ((p.part, *r - 1), p.clone())
            })
            .collect::<Vec<_>>()
    };
    let ka = keyed(a);
    let kb = keyed(b);
    let mut out = Vec::new();
    for (key, pa) in &ka {
        match kb.iter().find(|(k, _)| k == key) {
            Some((_, pb)) => out.push(PartNode {
                part: pa.part,
                bbox: lerp_box(&pa.bbox, &pb.bbox, t),
                occluded: false,
            }),
            None if t < 0.5 => out.push(pa.clone()),
            None => {}
        }
    }
    if t >= 0.5 {
        out.extend(
            kb.iter()
                .filter(|(k, _)| !ka.iter().any(|(ka_key, _)| ka_key == k))
                .map(|(_, p)| p.clone()),
        );
    }
    out
}

fn interpolate_scene(a: &SceneGraph, b: &SceneGraph, t: f64) -> SceneGraph {
    let mut persons = Vec::new();
    for pa in &a.persons {
        match b.persons.iter().find(|pb| pb.person_id == pa.person_id) {
            Some(pb) => persons.push(PersonNode {
                person_id: pa.person_id.clone(),
                body_box: lerp_box(&pa.body_box, &pb.body_box, t),
                parts: lerp_parts(&pa.parts, &pb.parts, t),
                absent_slots: if t < 0.5 {
                    pa.absent_slots.clone()
                } else {
                    pb.absent_slots.clone()
                },
            }),
            None if t < 0.5 => persons.push(pa.clone()),
            None => {}
        }
    }
    if t >= 0.5 {
        persons.extend(
            b.persons
                .iter()
                .filter(|pb| !a.persons.iter().any(|pa| pa.person_id == pb.person_id))
                .cloned(),
        );
    }
    let shared = a.occluders.len().min(b.occluders.len());
    let mut occluders: Vec<BBox> = (0..shared)
        .map(|i| lerp_box(&a.occluders[i], &b.occluders[i], t))
        .collect();
    let longer = if t < 0.5 { &a.occluders } else { &b.occluders };
    occluders.extend(longer.iter().skip(shared).copied());

    let mut scene = SceneGraph {
        width: a.width,
        height: a.height,
        persons,
        floating_parts: lerp_parts(&a.floating_parts, &b.floating_parts, t),
        occluders,
    };
    let occluded: Vec<Vec<bool>> = scene
        .persons
        .iter()
        .map(|p| p.parts.iter().map(|n| scene.is_occluded(&n.bbox)).collect())
        .collect();
    for (person, flags) in scene.persons.iter_mut().zip(occluded) {
        for (part, flag) in person.parts.iter_mut().zip(flags) {
            part.occluded = flag;
        }
    }
    let floating: Vec<bool> = scene
        .floating_parts
        .iter()
        .map(|n| scene.is_occluded(&n.bbox))
        .collect();
    for (part, flag) in scene.floating_parts.iter_mut().zip(floating) {
        part.occluded = flag;
    }
    scene
}

/// Nouns that mark a clause as being about a person.
const PERSON_WORDS: &[&str] = &[
    "person",
    "people",
    "human",
    "humans",
    "man",
    "men",
    "woman",
    "women",
    "girl",
    "girls",
    "boy",
    "boys",
    "child",
    "children",
    "kid",
    "kids",
    "baby",
    "lady",
    "ladies",
    "gentleman",
    "guy",
    "he",
    "she",
    "dancer",
    "singer",
    "player",
    "athlete",
    "worker",
    "soldier",
    "teenager",
    "student",
    "mother",
    "father",
    "couple",
    "family",
    "crowd",
    "individual",
];

impl PromptRewriter for MockWorld {
    fn rewrite_human_prompt(&self, prompt: &str) -> BackendResult<String> {
        if prompt.trim().is_empty() {
            return Err(BackendError::precondition("rewrite", "empty prompt"));
        }
        Ok(keep_human_clauses(prompt))
    }
}

/// Keeps the comma-separated clauses that mention a person; sentences with
/// no such clause are dropped. Falls back to the whole prompt when nothing
/// qualifies.
pub fn keep_human_clauses(prompt: &str) -> String {
    let mentions_person = |clause: &str| {
        clause
            .split(|c: char| !c.is_alphanumeric())
            .any(|w| PERSON_WORDS.contains(&w.to_lowercase().as_str()))
    };
    let sentences: Vec<String> = prompt
        .split(['.', '!', '?'])
        .filter_map(|sentence| {
            let kept: Vec<&str> = sentence
                .split([',', ';'])
                .map(str::trim)
                .filter(|c| !c.is_empty() && mentions_person(c))
                .collect();
            (!kept.is_empty()).then(|| kept.join(", "))
        })
        .collect();
    if sentences.is_empty() {
        prompt.trim().to_owned()
    } else {
        format!("{}.", sentences.join(". "))
    }
}

/// `img` -> `img#e1` -> `img#e2` ...; the suffix letter records the last op.
fn next_id(id: &str, op: &str) -> String {
    let (base, n) = match id.rsplit_once('#') {
        Some((base, tail)) => (
            base,
            tail.trim_start_matches(|c: char| c.is_ascii_alphabetic())
                .parse::<u32>()
                .unwrap_or(0),
        ),
        None => (id, 0),
    };
    format!("{base}#{op}{}", n + 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::AbsentSlot;
    use crate::scenegen::canonical_scene;

    fn world() -> MockWorld {
        MockWorld::default()
    }

    fn img(scene: SceneGraph) -> ImageRef {
        ImageRef::from_scene("img", scene)
    }

    fn b(x0: u32, y0: u32, x1: u32, y1: u32) -> BBox {
        BBox::new(x0, y0, x1, y1).unwrap()
    }

    #[test]
    fn grounding_filters_by_vocabulary_and_threshold() {
        let i = img(canonical_scene(1));
        assert_eq!(
            world().ground(&i, &[BodyPart::Hand], 0.35).unwrap().len(),
            2
        );
        assert_eq!(world().ground(&i, &BodyPart::ALL, 0.0).unwrap().len(), 11);
        assert!(world()
            .ground(&i, &[BodyPart::Hand], 1.5)
            .unwrap()
            .is_empty());
        assert!(world().ground(&i, &[], 0.0).is_err());
    }

    #[test]
    fn regeneration_restores_an_anatomical_part_in_place() {
        let scene = canonical_scene(1);
        let hand = scene.persons[0].parts[3].clone();
        let t = PromptTemplateSet::default();
        let out = world()
            .inpaint(
                &img(scene.clone()),
                hand.bbox,
                &t.render_family(PromptFamily::Regeneration, BodyPart::Hand),
            )
            .unwrap()
            .scene()
            .unwrap();
        assert_eq!(out.persons[0].parts, scene.persons[0].parts);
    }

    #[test]
    fn regeneration_of_a_surplus_part_leaves_background() {
        let mut scene = canonical_scene(1);
        let extra = b(140, 204, 180, 244);
        scene.persons[0].parts.push(PartNode {
            part: BodyPart::Hand,
            bbox: extra,
            occluded: false,
        });
        let t = PromptTemplateSet::default();
        let out = world()
            .inpaint(
                &img(scene),
                extra,
                &t.render_family(PromptFamily::Regeneration, BodyPart::Hand),
            )
            .unwrap()
            .scene()
            .unwrap();
        assert_eq!(out.persons[0].count(BodyPart::Hand), 2);
        assert!(!out.parts().any(|p| p.bbox == extra));
    }

    #[test]
    fn removal_prompt_erases_without_regenerating() {
        let scene = canonical_scene(1);
        let head = scene.persons[0].parts[0].bbox;
        let t = PromptTemplateSet::default();
        let out = world()
            .inpaint(
                &img(scene),
                head,
                &t.render_family(PromptFamily::RedundantRemoval, BodyPart::Head),
            )
            .unwrap()
            .scene()
            .unwrap();
        assert_eq!(out.persons[0].count(BodyPart::Head), 0);
    }

    #[test]
    fn barely_touched_parts_survive() {
        let scene = canonical_scene(1);
        let head = scene.persons[0].parts[0].bbox;
        let sliver = b(head.x_min(), head.y_min(), head.x_min() + 10, head.y_max());
        let out = world()
            .inpaint(&img(scene), sliver, "anything")
            .unwrap()
            .scene()
            .unwrap();
        assert_eq!(out.persons[0].count(BodyPart::Head), 1);
    }

    #[test]
    fn inpaint_preconditions() {
        let i = img(canonical_scene(1));
        assert!(world().inpaint(&i, b(0, 0, 10, 10), " ").is_err());
        assert!(world().inpaint(&i, b(0, 0, 1000, 10), "x").is_err());
    }

    #[test]
    fn detector_skips_filled_and_occluded_slots() {
        let mut scene = canonical_scene(1);
        let ear = scene.persons[0].parts.remove(1);
        scene.persons[0].absent_slots.push(AbsentSlot {
            part: BodyPart::Ear,
            bbox: ear.bbox,
        });
        assert_eq!(
            world().detect_absent(&img(scene.clone())).unwrap(),
            Some((BodyPart::Ear, ear.bbox))
        );
        scene.occluders.push(ear.bbox);
        assert_eq!(world().detect_absent(&img(scene)).unwrap(), None);
    }

    #[test]
    fn embeddings_are_deterministic() {
        let w = world();
        let a = w.embed_image(&img(canonical_scene(1))).unwrap();
        let b2 = w
            .embed_image(&img(canonical_scene(1)).with_id("other"))
            .unwrap();
        assert_eq!(a, b2);
        assert_eq!(a.dim(), DEFAULT_EMBEDDING_DIM);
        assert_eq!(
            w.embed_text("a Person").unwrap(),
            w.embed_text("a person").unwrap()
        );
        assert!(w.embed_text("...").is_err());
    }

    #[test]
    fn upscale_scales_boxes() {
        let i = img(canonical_scene(1));
        let up = world().upscale(&i, 2).unwrap();
        assert_eq!((up.width(), up.height()), (i.width() * 2, i.height() * 2));
        assert!(world().upscale(&i, 0).is_err());
    }

    #[test]
    fn interpolation_keeps_endpoints() {
        let a = img(canonical_scene(1));
        let frames = world()
            .interpolate_video(&a, &a, "a person walking", 5)
            .unwrap();
        assert_eq!(frames.len(), 5);
        assert_eq!(frames[0], a);
        assert_eq!(
            frames[2].scene().unwrap().persons,
            a.scene().unwrap().persons
        );
        assert!(world().interpolate_video(&a, &a, "x", 1).is_err());
    }

    #[test]
    fn rewriter_keeps_person_clauses() {
        let p =
            "A girl with long hair is walking on the avenue in the forest, with a gentle breeze, \
                 falling leaves fluttering in the wind. The girl looks melancholy in the distance.";
        assert_eq!(
            keep_human_clauses(p),
            "A girl with long hair is walking on the avenue in the forest. The girl looks melancholy in the distance."
        );
        assert_eq!(
            keep_human_clauses("a sunset over hills"),
            "a sunset over hills"
        );
    }

    #[test]
    fn derived_ids() {
        assert_eq!(next_id("img", "e"), "img#e1");
        assert_eq!(next_id("img#e1", "u"), "img#u2");
    }
}
