use std::collections::BTreeMap;

use serde::Serialize;

use super::fid::fid;
use super::metrics::{AccFdr, CategoryScore, ScoreTable};
use super::scores::{clip_score, human_clip_score, human_concept_score, latent_consistency};
use crate::backends::Backends;
use crate::domain::{AbnormalityKind, AbnormalityLabel, BodyPart, ImageRef};
use crate::error::{Error, Result};

/// One row group of the detection table.
#[derive(Debug, Clone, Serialize)]
pub struct TypeTable {
    #[serde(rename = "type")]
    pub kind: AbnormalityKind,
    pub per_part: BTreeMap<BodyPart, CategoryScore>,
    /// Instance-weighted over all parts of this kind.
    pub avg: AccFdr,
    /// Unweighted mean over parts that have ground truth.
    pub avg_unweighted: AccFdr,
}

impl TypeTable {
    pub fn from_scores(scores: &ScoreTable) -> Vec<TypeTable> {
        AbnormalityKind::ALL
            .into_iter()
            .map(|kind| TypeTable {
                kind,
                per_part: BodyPart::ALL
                    .into_iter()
                    .map(|p| (p, scores.per_label[&AbnormalityLabel::new(kind, p)]))
                    .collect(),
                avg: scores.micro[&kind],
                avg_unweighted: scores.macro_[&kind],
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairScore {
    pub original: f64,
    pub repaired: f64,
}

/// Repair quality and consistency, comparing originals to repairs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QualityBlock {
    pub human_concept: PairScore,
    pub clip: PairScore,
    pub human_clip: PairScore,
    /// `None` with fewer than two pairs.
    pub fid: Option<f64>,
    pub latent_consistency: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    pub detection: Vec<TypeTable>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quality: Option<QualityBlock>,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Scores (original, repaired, generation prompt) triples.
pub fn quality_block(
    pairs: &[(ImageRef, ImageRef, String)],
    backends: &Backends,
) -> Result<QualityBlock> {
    if pairs.is_empty() {
        return Err(Error::Precondition(
            "quality scoring needs at least one image pair".into(),
        ));
    }
    let mut cols: [Vec<f64>; 7] = Default::default();
    let (mut emb_a, mut emb_b) = (Vec::new(), Vec::new());
    for (orig, rep, prompt) in pairs {
        let ctx = format!("scoring `{}`", orig.id());
        let scored = (|| -> Result<()> {
            cols[0].push(human_concept_score(orig, backends)?);
            cols[1].push(human_concept_score(rep, backends)?);
            cols[2].push(clip_score(orig, prompt, backends)?);
            cols[3].push(clip_score(rep, prompt, backends)?);
            cols[4].push(human_clip_score(orig, prompt, backends)?);
            cols[5].push(human_clip_score(rep, prompt, backends)?);
            cols[6].push(latent_consistency(orig, rep, backends)?);
            emb_a.push(
                backends
                    .embedder
                    .embed_image(orig)
                    .map_err(|e| Error::backend("embedding", e))?,
            );
            emb_b.push(
                backends
                    .embedder
                    .embed_image(rep)
                    .map_err(|e| Error::backend("embedding", e))?,
            );
            Ok(())
        })();
        scored.map_err(|e| e.context(ctx))?;
    }
    let pair = |i: usize| PairScore {
        original: mean(&cols[i]),
        repaired: mean(&cols[i + 1]),
    };
    Ok(QualityBlock {
        human_concept: pair(0),
        clip: pair(2),
        human_clip: pair(4),
        fid: if pairs.len() >= 2 {
            Some(fid(&emb_a, &emb_b)?)
        } else {
            None
        },
        latent_consistency: mean(&cols[6]),
    })
}
