use crate::error::{Error, Result};
use crate::timecourse::TimeCourse;

fn require_same_grid(a: &TimeCourse, b: &TimeCourse) -> Result<()> {
    if a.same_grid(b) {
        Ok(())
    } else {
        Err(Error::IncompatibleGrids(format!(
            "{} ({} points) and {} ({} points) are not sampled at the same times",
            a.id(),
            a.len(),
            b.id(),
            b.len()
        )))
    }
}

/// Point-to-point ℓ² distance between two courses on the same grid.
pub fn euclidean(a: &TimeCourse, b: &TimeCourse) -> Result<f64> {
    require_same_grid(a, b)?;
    Ok(a.values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt())
}

/// `1 − r` with `r` the Pearson correlation of the two value vectors.
pub fn correlation_distance(a: &TimeCourse, b: &TimeCourse) -> Result<f64> {
    require_same_grid(a, b)?;
    let (xa, xb) = (a.values(), b.values());
    let n = xa.len() as f64;
    let ma = xa.iter().sum::<f64>() / n;
    let mb = xb.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in xa.iter().zip(xb) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    for (c, s) in [(a, saa), (b, sbb)] {
        if !(s > 0.0) {
            return Err(Error::DegenerateInput(format!(
                "course {} has zero variance",
                c.id()
            )));
        }
    }
    let r = sab / (saa * sbb).sqrt();
    Ok((1.0 - r).clamp(0.0, 2.0))
}

/// Dynamic time warping over the value sequences: squared local cost,
/// unconstrained window, symmetric steps; returns the square root of the
/// optimal accumulated cost.
pub fn dtw(a: &TimeCourse, b: &TimeCourse) -> Result<f64> {
    Ok(dtw_values(a.values(), b.values()))
}

pub(crate) fn dtw_values(a: &[f64], b: &[f64]) -> f64 {
    let m = b.len();
    let mut prev = vec![f64::INFINITY; m + 1];
    let mut curr = vec![f64::INFINITY; m + 1];
    prev[0] = 0.0;
    for x in a {
        curr[0] = f64::INFINITY;
        for j in 1..=m {
            let d = x - b[j - 1];
            let best = prev[j - 1].min(prev[j]).min(curr[j - 1]);
            curr[j] = d * d + best;
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[m].sqrt()
}
