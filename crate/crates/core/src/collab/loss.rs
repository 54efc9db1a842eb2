use serde::{Deserialize, Serialize};

use super::CollabError;

/// Smallest value a reference probability takes inside a logarithm.
pub const Q_FLOOR: f64 = 1e-12;

const SUM_TOL: f64 = 1e-9;

/// Argument order of the distillation divergence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KlDirection {
    /// `KL(student || teacher)`.
    StudentFirst,
    /// `KL(teacher || student)`, the usual soft-target loss.
    TeacherFirst,
}

fn check_distribution(v: &[f64], name: &str) -> Result<(), CollabError> {
    if v.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(CollabError::InvalidInput(format!("{name} has negative or non-finite entries")));
    }
    let s: f64 = v.iter().sum();
    if (s - 1.0).abs() > SUM_TOL {
        return Err(CollabError::InvalidInput(format!("{name} sums to {s}, not 1")));
    }
    Ok(())
}

/// `sum_i p_i ln(p_i / max(q_i, 1e-12))`, with `0 ln 0 = 0`.
pub fn kl_loss(p: &[f64], q: &[f64]) -> Result<f64, CollabError> {
    if p.len() != q.len() || p.is_empty() {
        return Err(CollabError::InvalidInput(format!("length mismatch {} vs {}", p.len(), q.len())));
    }
    check_distribution(p, "p")?;
    check_distribution(q, "q")?;
    Ok(kl_unchecked(p, q).max(0.0))
}

fn kl_unchecked(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(pi, _)| **pi > 0.0)
        .map(|(pi, qi)| pi * (pi.ln() - qi.max(Q_FLOOR).ln()))
        .sum()
}

/// Divergence between the student softmax `student` (already normalized)
/// and `teacher`, plus its gradient with respect to the student logits.
pub fn kl_logit_grad(student: &[f64], teacher: &[f64], direction: KlDirection) -> (f64, Vec<f64>) {
    match direction {
        KlDirection::StudentFirst => {
            // d/dz_j KL(p||q) = p_j (ln p_j - ln q_j - KL)
            let kl = kl_unchecked(student, teacher);
            let g = student
                .iter()
                .zip(teacher)
                .map(|(p, q)| if *p > 0.0 { p * (p.ln() - q.max(Q_FLOOR).ln() - kl) } else { 0.0 })
                .collect();
            (kl, g)
        }
        KlDirection::TeacherFirst => {
            let floored: Vec<f64> = student.iter().map(|p| p.max(Q_FLOOR)).collect();
            let kl = kl_unchecked(teacher, &floored);
            let g = student.iter().zip(teacher).map(|(p, q)| p - q).collect();
            (kl, g)
        }
    }
}
