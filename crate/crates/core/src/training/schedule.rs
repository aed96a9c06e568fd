use serde::{Deserialize, Serialize};

use super::TrainingError;

/// Piecewise-constant dense-loss weight indexed by optimizer step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AlphaSchedule {
    /// `(first step, alpha)` pairs with strictly increasing steps, the first at 0.
    breakpoints: Vec<(u64, f64)>,
}

impl Default for AlphaSchedule {
    fn default() -> Self {
        Self {
            breakpoints: vec![
                (0, 0.01),
                (5_000, 0.1),
                (15_000, 0.5),
                (30_000, 1.0),
                (50_000, 5.0),
            ],
        }
    }
}

impl AlphaSchedule {
    pub fn new(breakpoints: Vec<(u64, f64)>) -> Result<Self, TrainingError> {
        let s = Self { breakpoints };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), TrainingError> {
        let bad = |m: &str| Err(TrainingError::InvalidConfig(format!("alpha schedule: {m}")));
        match self.breakpoints.first() {
            None => return bad("needs at least one breakpoint"),
            Some((s, _)) if *s != 0 => return bad("first breakpoint must start at step 0"),
            _ => {}
        }
        for w in self.breakpoints.windows(2) {
            if w[1].0 <= w[0].0 {
                return bad("steps must be strictly increasing");
            }
            if w[1].1 < w[0].1 {
                return bad("alpha must be non-decreasing");
            }
        }
        if self.breakpoints.iter().any(|(_, a)| !(*a >= 0.0) || !a.is_finite()) {
            return bad("alpha values must be finite and non-negative");
        }
        Ok(())
    }

    pub fn breakpoints(&self) -> &[(u64, f64)] {
        &self.breakpoints
    }

    /// Alpha in effect at `step`.
    pub fn alpha(&self, step: u64) -> f64 {
        self.breakpoints
            .iter()
            .take_while(|(s, _)| *s <= step)
            .last()
            .map(|(_, a)| *a)
            .unwrap_or(self.breakpoints[0].1)
    }

    /// Same stage values with every breakpoint step multiplied by `factor`.
    pub fn rescaled(&self, factor: f64) -> Self {
        let mut out: Vec<(u64, f64)> = Vec::new();
        for &(s, a) in &self.breakpoints {
            let step = (s as f64 * factor).round() as u64;
            match out.last_mut() {
                Some(last) if last.0 >= step => last.1 = a,
                _ => out.push((step, a)),
            }
        }
        Self { breakpoints: out }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints_and_lookup() {
        let s = AlphaSchedule::default();
        assert_eq!(s.alpha(0), 0.01);
        assert_eq!(s.alpha(4_999), 0.01);
        assert_eq!(s.alpha(20_000), 0.5);
        assert_eq!(s.alpha(50_000), 5.0);
        assert_eq!(s.alpha(10_000_000), 5.0);
    }

    #[test]
    fn monotone_within_range() {
        let s = AlphaSchedule::default();
        let mut prev = 0.0;
        for step in (0..60_000).step_by(250) {
            let a = s.alpha(step);
            assert!(a >= prev);
            assert!((0.01..=5.0).contains(&a));
            prev = a;
        }
    }

    #[test]
    fn invalid_schedules_rejected() {
        assert!(AlphaSchedule::new(vec![]).is_err());
        assert!(AlphaSchedule::new(vec![(5, 0.1)]).is_err());
        assert!(AlphaSchedule::new(vec![(0, 1.0), (10, 0.5)]).is_err());
        assert!(AlphaSchedule::new(vec![(0, 0.1), (0, 0.5)]).is_err());
    }

    #[test]
    fn rescale_keeps_values() {
        let s = AlphaSchedule::default().rescaled(0.02);
        assert_eq!(
            s.breakpoints(),
            &[(0, 0.01), (100, 0.1), (300, 0.5), (600, 1.0), (1000, 5.0)]
        );
        s.validate().unwrap();
    }
}
