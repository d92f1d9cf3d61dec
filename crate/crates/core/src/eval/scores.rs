use crate::backends::{Backends, Embedding};
use crate::domain::ImageRef;
use crate::error::{Error, Result};

pub const HUMAN_CONCEPT_PROMPT: &str = "an image contains human";

fn cosine(a: &Embedding, b: &Embedding) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::Precondition(format!(
            "embedding dimensions differ: {} vs {}",
            a.dim(),
            b.dim()
        )));
    }
    Ok(a.cosine(b))
}

/// 100 x cosine between image and prompt embeddings.
pub fn clip_score(image: &ImageRef, prompt: &str, backends: &Backends) -> Result<f64> {
    if prompt.trim().is_empty() {
        return Err(Error::Precondition(
            "clip score needs a non-empty prompt".into(),
        ));
    }
    let img = backends
        .embedder
        .embed_image(image)
        .map_err(|e| Error::backend("embedding image", e))?;
    let txt = backends
        .embedder
        .embed_text(prompt)
        .map_err(|e| Error::backend("embedding prompt", e))?;
    Ok(100.0 * cosine(&img, &txt)?)
}

/// Clip score against the prompt reduced to its human-related clauses.
pub fn human_clip_score(image: &ImageRef, prompt: &str, backends: &Backends) -> Result<f64> {
    if prompt.trim().is_empty() {
        return Err(Error::Precondition(
            "human clip score needs a non-empty prompt".into(),
        ));
    }
    let rewritten = backends
        .rewriter
        .rewrite_human_prompt(prompt)
        .map_err(|e| Error::backend("rewriting prompt", e))?;
    clip_score(image, &rewritten, backends)
}

pub fn human_concept_score(image: &ImageRef, backends: &Backends) -> Result<f64> {
    clip_score(image, HUMAN_CONCEPT_PROMPT, backends)
}

/// Cosine between the two image embeddings, in [-1, 1].
pub fn latent_consistency(a: &ImageRef, b: &ImageRef, backends: &Backends) -> Result<f64> {
    let ea = backends
        .embedder
        .embed_image(a)
        .map_err(|e| Error::backend("embedding image", e))?;
    let eb = backends
        .embedder
        .embed_image(b)
        .map_err(|e| Error::backend("embedding image", e))?;
    cosine(&ea, &eb)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::{BackendResult, Embedder, SceneGraph};
    use std::sync::Arc;

    struct Fixed(Vec<f64>, Vec<f64>);

    impl Embedder for Fixed {
        fn embed_image(&self, _: &ImageRef) -> BackendResult<Embedding> {
            Ok(Embedding::new(self.0.clone()).unwrap())
        }
        fn embed_text(&self, _: &str) -> BackendResult<Embedding> {
            Ok(Embedding::new(self.1.clone()).unwrap())
        }
    }

    fn with(image: Vec<f64>, text: Vec<f64>) -> Backends {
        let mut b = Backends::mock();
        b.embedder = Arc::new(Fixed(image, text));
        b
    }

    fn img() -> ImageRef {
        ImageRef::from_scene("x", SceneGraph::empty(64, 64))
    }

    #[test]
    fn identical_vectors_score_100() {
        let b = with(vec![1.0, 2.0], vec![1.0, 2.0]);
        assert!((clip_score(&img(), "a person", &b).unwrap() - 100.0).abs() < 1e-9);
    }

    #[test]
    fn orthogonal_vectors_score_0() {
        let b = with(vec![1.0, 0.0], vec![0.0, 3.0]);
        assert_eq!(clip_score(&img(), "a person", &b).unwrap(), 0.0);
        assert_eq!(human_concept_score(&img(), &b).unwrap(), 0.0);
    }

    #[test]
    fn empty_prompt_rejected() {
        assert!(matches!(
            clip_score(&img(), "  ", &Backends::mock()),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn self_consistency_is_one() {
        let b = Backends::mock();
        let scene = crate::scenegen::generate(3);
        let x = ImageRef::from_scene("s", scene);
        assert!((latent_consistency(&x, &x, &b).unwrap() - 1.0).abs() < 1e-9);
    }
}
