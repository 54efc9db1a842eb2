use std::fmt::Write;

use serde::{Deserialize, Serialize};

/// Annotation attached to every large-model request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptAugmentation {
    pub sample_id: u64,
    pub small_model_confidence: f64,
    /// `(class name, probability)`, probability nonincreasing.
    pub small_model_top_classes: Vec<(String, f64)>,
    pub template_text: String,
}

/// Classes ranked by probability; ties broken by ascending class index.
pub fn rank_classes(distribution: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..distribution.len()).collect();
    idx.sort_by(|&a, &b| distribution[b].total_cmp(&distribution[a]).then(a.cmp(&b)));
    idx
}

/// Renders the large-model prompt carrying the small model's confidence
/// and its `top_k` ranked guesses.
pub fn build_prompt(
    sample_id: u64,
    small_distribution: &[f64],
    small_confidence: f64,
    label_names: &[String],
    top_k: usize,
) -> PromptAugmentation {
    let top: Vec<(String, f64)> = rank_classes(small_distribution)
        .into_iter()
        .take(top_k)
        .map(|c| (label_names.get(c).cloned().unwrap_or_else(|| c.to_string()), small_distribution[c]))
        .collect();

    let mut text = String::new();
    let _ = writeln!(text, "Classify the input as exactly one of: {}.", label_names.join(", "));
    let _ = writeln!(text, "Note: the confidence of the small model is {small_confidence:.4}.");
    if !top.is_empty() {
        let ranked: Vec<String> = top.iter().map(|(n, p)| format!("{n} ({p:.4})")).collect();
        let _ = writeln!(text, "Small model ranking: {}.", ranked.join(", "));
    }
    let _ = writeln!(
        text,
        "The small model declined this input, so it likely lies outside the classes it handles well; \
         weigh its ranking accordingly."
    );

    PromptAugmentation {
        sample_id,
        small_model_confidence: small_confidence,
        small_model_top_classes: top,
        template_text: text,
    }
}
