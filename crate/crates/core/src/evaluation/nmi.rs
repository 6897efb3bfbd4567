use std::collections::HashMap;

use crate::clustering::ClusterAssignment;
use crate::error::{Error, Result};

/// Normalized mutual information `I(a; b) / √(H(a) H(b))` with natural-log
/// entropies.
///
/// When either partition has zero entropy the result is 1 if both are the
/// single-cluster partition and 0 otherwise.
pub fn nmi(a: &ClusterAssignment, b: &ClusterAssignment) -> Result<f64> {
    nmi_labels(a.labels(), b.labels())
}

pub fn nmi_labels(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::InvalidInput(format!(
            "partitions have different lengths ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::InvalidInput("partitions are empty".into()));
    }
    let n = a.len() as f64;
    let mut joint: HashMap<(usize, usize), usize> = HashMap::new();
    let mut ca: HashMap<usize, usize> = HashMap::new();
    let mut cb: HashMap<usize, usize> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *joint.entry((x, y)).or_default() += 1;
        *ca.entry(x).or_default() += 1;
        *cb.entry(y).or_default() += 1;
    }
    let entropy = |counts: &HashMap<usize, usize>| -> f64 {
        counts
            .values()
            .map(|&c| {
                let p = c as f64 / n;
                -p * p.ln()
            })
            .sum()
    };
    let (ha, hb) = (entropy(&ca), entropy(&cb));
    if ca.len() == 1 || cb.len() == 1 {
        return Ok(if ca.len() == 1 && cb.len() == 1 {
            1.0
        } else {
            0.0
        });
    }
    let mut mi = 0.0;
    for (&(x, y), &c) in &joint {
        let pxy = c as f64 / n;
        let px = ca[&x] as f64 / n;
        let py = cb[&y] as f64 / n;
        mi += pxy * (pxy / (px * py)).ln();
    }
    Ok((mi / (ha * hb).sqrt()).clamp(0.0, 1.0))
}
