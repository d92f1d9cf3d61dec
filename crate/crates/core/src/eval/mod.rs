//! Detection metrics, embedding-space quality scores, and the baseline
//! prompt harness.

mod baseline;
mod fid;
mod metrics;
mod report;
mod scores;
mod tally;

pub use baseline::{
    baseline_prompt, canonical_sentence, normalize_response, ModelFamily, Normalized,
    COCO_SINGLE_WORD_PROMPT,
};
pub use fid::fid;
pub use metrics::{acc_fdr, AccFdr, CategoryScore, ScoreTable};
pub use report::{quality_block, EvalReport, PairScore, QualityBlock, TypeTable};
pub use scores::{
    clip_score, human_clip_score, human_concept_score, latent_consistency, HUMAN_CONCEPT_PROMPT,
};
pub use tally::{tally, ConfusionTally, Counts, EvalLabel, EvalRecord, TallyMode};
