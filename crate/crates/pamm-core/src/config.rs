use crate::error::{Error, Result};

/// Rows or generators with Euclidean norm at or below this are treated as
/// zero vectors: they carry no direction, their exact representative is the
/// zero vector, and dividing by their norm is never attempted.
pub const DEFAULT_NORM_GUARD: f64 = 1e-12;

/// How many generators to draw: a fraction of the row count, rounded up,
/// or an explicit count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GeneratorBudget {
    /// Effective k becomes `ceil(ratio * b)`; ratio must lie in (0, 1].
    Ratio(f64),
    /// Explicit k in `[1, b]`.
    Count(usize),
}

/// Compression parameters. `epsilon` is the relative residual tolerance of
/// the drop condition; `f64::INFINITY` (the default) disables dropping
/// entirely. `epsilon = 0` keeps only rows with an exactly representing
/// generator, which reduces the scheme to plain uniform row sampling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PammConfig {
    pub budget: GeneratorBudget,
    pub epsilon: f64,
    pub seed: u64,
    pub norm_guard: f64,
}

impl PammConfig {
    pub fn with_ratio(ratio: f64, seed: u64) -> Self {
        Self {
            budget: GeneratorBudget::Ratio(ratio),
            epsilon: f64::INFINITY,
            seed,
            norm_guard: DEFAULT_NORM_GUARD,
        }
    }

    pub fn with_count(k: usize, seed: u64) -> Self {
        Self {
            budget: GeneratorBudget::Count(k),
            epsilon: f64::INFINITY,
            seed,
            norm_guard: DEFAULT_NORM_GUARD,
        }
    }

    pub fn epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn validate(&self) -> Result<()> {
        match self.budget {
            GeneratorBudget::Ratio(r) => {
                if !(r > 0.0 && r <= 1.0) {
                    return Err(Error::Argument(alloc::format!(
                        "ratio must lie in (0, 1], got {r}"
                    )));
                }
            }
            GeneratorBudget::Count(k) => {
                if k == 0 {
                    return Err(Error::Argument("generator count must be at least 1".into()));
                }
            }
        }
        if self.epsilon.is_nan() || self.epsilon < 0.0 {
            return Err(Error::Argument(alloc::format!(
                "epsilon must be non-negative or infinite, got {}",
                self.epsilon
            )));
        }
        if !(self.norm_guard >= 0.0) {
            return Err(Error::Argument("norm_guard must be non-negative".into()));
        }
        Ok(())
    }

    /// Generator count for a matrix with `b` rows.
    pub fn effective_k(&self, b: usize) -> Result<usize> {
        self.validate()?;
        if b == 0 {
            return Err(Error::Argument("cannot compress an empty matrix".into()));
        }
        let k = match self.budget {
            GeneratorBudget::Ratio(r) => {
                (num_traits::Float::ceil(r * b as f64) as usize).max(1)
            }
            GeneratorBudget::Count(k) => k,
        };
        if k > b {
            return Err(Error::Argument(alloc::format!(
                "generator count {k} exceeds row count {b}"
            )));
        }
        Ok(k)
    }
}
