//! Heavy-tailed sampling of the code-change percentage.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct FastMutation {
    pub beta: f64,
    pub max_rate: u32,
}

impl Default for FastMutation {
    fn default() -> Self {
        Self { beta: 1.5, max_rate: 50 }
    }
}

impl FastMutation {
    /// P(k) for k = 1..=max_rate, normalized.
    pub fn probabilities(&self) -> Vec<f64> {
        let w: Vec<f64> = (1..=self.max_rate).map(|k| (k as f64).powf(-self.beta)).collect();
        let total: f64 = w.iter().sum();
        w.into_iter().map(|v| v / total).collect()
    }

    /// A rate in percent, drawn from {1, ..., max_rate}.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        let dist = WeightedIndex::new(self.probabilities()).expect("positive weights");
        dist.sample(rng) as u32 + 1
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.max_rate == 0 || self.max_rate > 100 {
            return Err(format!("mutation max rate must be in 1..=100, got {}", self.max_rate));
        }
        if !self.beta.is_finite() || self.beta <= 0.0 {
            return Err(format!("mutation beta must be positive, got {}", self.beta));
        }
        Ok(())
    }
}

/// How the line quota in the mutation prompt is computed from n lines and rate x.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QuotaRule {
    /// min(floor(n x / 100), 1) as printed in the template, never below one line.
    #[default]
    Printed,
    /// max(floor(n x / 100), 1).
    AtLeastOne,
}

impl QuotaRule {
    pub fn quota(self, n: usize, x: u32) -> usize {
        match self {
            // min(raw, 1) floored at one line is always a single line.
            QuotaRule::Printed => 1,
            QuotaRule::AtLeastOne => (n * x as usize / 100).max(1),
        }
        .min(n.max(1))
    }
}

impl std::str::FromStr for QuotaRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "printed" | "min" => Ok(Self::Printed),
            "at-least-one" | "max" => Ok(Self::AtLeastOne),
            _ => Err(format!("unknown quota rule `{s}` (expected printed or at-least-one)")),
        }
    }
}
