use crate::error::{Error, Result};

/// One observed series: sampling times and the values measured at them.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeCourse {
    id: String,
    times: Vec<f64>,
    values: Vec<f64>,
}

impl TimeCourse {
    /// Builds a course, checking that times are finite and strictly increasing
    /// and that every time has a finite value.
    ///
    /// Single-point courses are accepted so that scalar cases of the GP
    /// machinery can be expressed; readers of data files require two points.
    pub fn new(id: impl Into<String>, times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let id = id.into();
        if times.len() != values.len() {
            return Err(Error::InvalidInput(format!(
                "course {id}: {} times but {} values",
                times.len(),
                values.len()
            )));
        }
        if times.is_empty() {
            return Err(Error::InvalidInput(format!("course {id} is empty")));
        }
        if let Some(k) = times
            .iter()
            .chain(values.iter())
            .position(|v| !v.is_finite())
        {
            return Err(Error::InvalidInput(format!(
                "course {id}: non-finite entry at position {k}"
            )));
        }
        if let Some(k) = times.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput(format!(
                "course {id}: times not strictly increasing at index {}",
                k + 1
            )));
        }
        Ok(Self { id, times, values })
    }

    /// Builds a course from (time, value) pairs in any order.
    pub fn from_pairs(id: impl Into<String>, mut pairs: Vec<(f64, f64)>) -> Result<Self> {
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (times, values) = pairs.into_iter().unzip();
        Self::new(id, times, values)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// True when both courses were sampled at bitwise-identical times.
    pub fn same_grid(&self, other: &TimeCourse) -> bool {
        grid_key(&self.times) == grid_key(&other.times)
    }

    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.id.clone(), self.times.clone(), values)
    }

    /// Subtracts the course mean from its values.
    pub fn centered(&self) -> Self {
        let mean = self.values.iter().sum::<f64>() / self.values.len() as f64;
        Self {
            id: self.id.clone(),
            times: self.times.clone(),
            values: self.values.iter().map(|v| v - mean).collect(),
        }
    }

    /// Applies `t -> (t - offset) * scale` to the time axis.
    pub fn rescaled_time(&self, offset: f64, scale: f64) -> Result<Self> {
        Self::new(
            self.id.clone(),
            self.times.iter().map(|t| (t - offset) * scale).collect(),
            self.values.clone(),
        )
    }
}

/// Hashable identity of a sampling grid.
pub type GridKey = Vec<u64>;

pub fn grid_key(times: &[f64]) -> GridKey {
    times.iter().map(|t| t.to_bits()).collect()
}

/// True when every course shares the first course's grid.
pub fn is_synchronous(courses: &[TimeCourse]) -> bool {
    match courses.first() {
        Some(first) => courses.iter().all(|c| c.same_grid(first)),
        None => true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_unsorted_and_non_finite() {
        assert!(TimeCourse::new("a", vec![0.0, 0.0], vec![1.0, 2.0]).is_err());
        assert!(TimeCourse::new("a", vec![1.0, 0.0], vec![1.0, 2.0]).is_err());
        assert!(TimeCourse::new("a", vec![0.0, 1.0], vec![f64::NAN, 2.0]).is_err());
        assert!(TimeCourse::new("a", vec![0.0, 1.0], vec![1.0]).is_err());
        assert!(TimeCourse::new("a", vec![], vec![]).is_err());
    }

    #[test]
    fn from_pairs_sorts() {
        let c = TimeCourse::from_pairs("a", vec![(1.0, 2.0), (0.0, 5.0)]).unwrap();
        assert_eq!(c.times(), &[0.0, 1.0]);
        assert_eq!(c.values(), &[5.0, 2.0]);
    }

    #[test]
    fn centering_removes_mean() {
        let c = TimeCourse::new("a", vec![0.0, 1.0, 2.0], vec![1.0, 2.0, 6.0]).unwrap();
        let m: f64 = c.centered().values().iter().sum();
        assert!(m.abs() < 1e-12);
    }
}
