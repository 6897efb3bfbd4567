use crate::error::{Error, Result};

/// Squared-exponential GP hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyperparams {
    lengthscale: f64,
    signal_std: f64,
    noise_std: f64,
}

impl Hyperparams {
    pub fn new(lengthscale: f64, signal_std: f64, noise_std: f64) -> Result<Self> {
        for (name, v) in [
            ("lengthscale", lengthscale),
            ("signal_std", signal_std),
            ("noise_std", noise_std),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(Self {
            lengthscale,
            signal_std,
            noise_std,
        })
    }

    /// Builds from `(ln ℓ, ln σ_f, ln σ_n)`.
    pub fn from_log(log: [f64; 3]) -> Result<Self> {
        Self::new(log[0].exp(), log[1].exp(), log[2].exp())
    }

    pub fn to_log(&self) -> [f64; 3] {
        [
            self.lengthscale.ln(),
            self.signal_std.ln(),
            self.noise_std.ln(),
        ]
    }

    pub fn lengthscale(&self) -> f64 {
        self.lengthscale
    }

    pub fn signal_std(&self) -> f64 {
        self.signal_std
    }

    pub fn noise_std(&self) -> f64 {
        self.noise_std
    }

    pub fn signal_var(&self) -> f64 {
        self.signal_std * self.signal_std
    }

    pub fn noise_var(&self) -> f64 {
        self.noise_std * self.noise_std
    }

    pub fn with_noise_std(&self, noise_std: f64) -> Result<Self> {
        Self::new(self.lengthscale, self.signal_std, noise_std)
    }
}
