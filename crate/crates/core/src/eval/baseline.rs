use serde::{Deserialize, Serialize};

use crate::domain::{AbnormalityKind, AbnormalityLabel, BodyPart};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelFamily {
    ClipStyle,
    LlavaStyle,
    InternvlStyle,
    Gpt4oStyle,
}

/// Single-word question used for the masked-part evaluation split.
pub const COCO_SINGLE_WORD_PROMPT: &str = "Are there any absent body parts in the person shown in the image? \
If yes, please answer from 'head', 'arm', 'leg', 'foot', 'hand', or 'ear'; otherwise, please answer 'no'. \
Answer the question using a single word:";

const NO_ABNORMALITY: &str = "The person in the image has no abnormalities.";

/// Part order of the classification texts.
const CLASSIFICATION_ORDER: [BodyPart; 6] = [
    BodyPart::Head,
    BodyPart::Ear,
    BodyPart::Arm,
    BodyPart::Hand,
    BodyPart::Foot,
    BodyPart::Leg,
];

const COMMON_SENSE: &str = "It is a common sense that all human being has one head, two ears, two hands, two arms, two legs and two foots, are there any";

fn cue(kind: AbnormalityKind) -> &'static str {
    match kind {
        AbnormalityKind::Absent => "missing",
        AbnormalityKind::Redundant => "extra",
    }
}

/// The sentence a classification baseline scores for `label`, or the
/// no-abnormality sentence.
pub fn canonical_sentence(label: Option<AbnormalityLabel>) -> String {
    match label {
        Some(l) => format!("The person in the picture has {} {}.", l.kind, l.part),
        None => NO_ABNORMALITY.to_owned(),
    }
}

/// Baseline prompts for one model family. Classification families return
/// one text per candidate class (restricted to `part` when given) followed
/// by the no-abnormality text; generative families return one question.
pub fn baseline_prompt(
    family: ModelFamily,
    kind: AbnormalityKind,
    part: Option<BodyPart>,
) -> Vec<String> {
    let c = cue(kind);
    match family {
        ModelFamily::ClipStyle => {
            let parts: Vec<BodyPart> = part.map_or(CLASSIFICATION_ORDER.to_vec(), |p| vec![p]);
            parts
                .into_iter()
                .map(|p| canonical_sentence(Some(AbnormalityLabel::new(kind, p))))
                .chain(std::iter::once(NO_ABNORMALITY.to_owned()))
                .collect()
        }
        ModelFamily::LlavaStyle => vec![format!(
            "Are there any {c} body parts in the person shown in the image? If so, please answer the precise part:"
        )],
        ModelFamily::InternvlStyle => vec![format!(
            "According to the human anatomical structure, are there any {c} body parts in the person shown in the image? If so, please answer the precise part:"
        )],
        ModelFamily::Gpt4oStyle => vec![format!(
            "{COMMON_SENSE} {c} body parts which I discussed in the person shown in the image? If so, please answer the precise part:"
        )],
    }
}

/// Labels extracted from a free-text answer. `unrecognized` is set when the
/// text yielded nothing and did not read as a negative answer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Normalized {
    pub labels: Vec<AbnormalityLabel>,
    pub unrecognized: bool,
}

fn part_word(w: &str) -> Option<BodyPart> {
    Some(match w {
        "head" | "heads" => BodyPart::Head,
        "ear" | "ears" => BodyPart::Ear,
        "hand" | "hands" => BodyPart::Hand,
        "arm" | "arms" => BodyPart::Arm,
        "leg" | "legs" => BodyPart::Leg,
        "foot" | "feet" | "foots" => BodyPart::Foot,
        _ => return None,
    })
}

fn kind_cue(w: &str) -> Option<AbnormalityKind> {
    match w {
        "missing" | "absent" | "lacks" | "lacking" | "lack" | "without" | "lost" | "amputated" => {
            Some(AbnormalityKind::Absent)
        }
        "extra" | "redundant" | "additional" | "supernumerary" | "surplus" | "duplicate"
        | "duplicated" => Some(AbnormalityKind::Redundant),
        _ => None,
    }
}

fn number_word(w: &str) -> Option<usize> {
    Some(match w {
        "two" | "2" => 2,
        "three" | "3" => 3,
        "four" | "4" => 4,
        "five" | "5" => 5,
        "six" | "6" => 6,
        _ => return None,
    })
}

fn is_negation(w: &str) -> bool {
    matches!(
        w,
        "not"
            | "no"
            | "none"
            | "neither"
            | "nor"
            | "never"
            | "isn't"
            | "aren't"
            | "doesn't"
            | "don't"
            | "t"
    )
}

const FILLERS: [&str; 8] = ["a", "an", "the", "one", "any", "his", "her", "their"];

/// Rule-based mapping from a model's free-text answer to labels.
pub fn normalize_response(text: &str) -> Normalized {
    let lower = text.to_lowercase();
    let mut labels = Vec::new();
    let mut negative_answer = false;

    for clause in lower.split(['.', ',', ';', '!', '?', ':', '\n']) {
        let words: Vec<&str> = clause
            .split(|c: char| !(c.is_alphanumeric() || c == '\''))
            .filter(|w| !w.is_empty())
            .collect();
        let mut kind: Option<AbnormalityKind> = None;
        let mut negated = false;
        let mut saw_negation = false;
        let mut pending: Vec<BodyPart> = Vec::new();
        let mut found: Vec<(AbnormalityKind, BodyPart)> = Vec::new();

        for (i, w) in words.iter().enumerate() {
            let prev = words[..i]
                .iter()
                .rev()
                .find(|p| !FILLERS.contains(p))
                .copied();
            if let Some(part) = part_word(w) {
                if prev == Some("no") || prev == Some("without") {
                    found.push((AbnormalityKind::Absent, part));
                } else if prev
                    .and_then(number_word)
                    .is_some_and(|n| n > part.canonical_count())
                {
                    found.push((AbnormalityKind::Redundant, part));
                } else if let Some(k) = kind {
                    found.push((k, part));
                } else {
                    pending.push(part);
                }
            } else if let Some(k) = kind_cue(w) {
                if saw_negation || prev.is_some_and(is_negation) {
                    negated = true;
                }
                kind = Some(k);
                found.extend(pending.drain(..).map(|p| (k, p)));
            } else if is_negation(w) || w.ends_with("n't") {
                let next_is_part = words.get(i + 1).and_then(|n| part_word(n)).is_some();
                if !next_is_part {
                    negative_answer = true;
                    saw_negation = true;
                    if kind.is_some() {
                        negated = true;
                    }
                }
            } else if matches!(*w, "normal" | "complete" | "intact") {
                negative_answer = true;
            }
        }
        if negated {
            negative_answer = true;
        } else {
            labels.extend(found.into_iter().map(|(k, p)| AbnormalityLabel::new(k, p)));
        }
    }
    labels.sort();
    labels.dedup();
    let unrecognized = labels.is_empty() && !negative_answer;
    Normalized {
        labels,
        unrecognized,
    }
}
