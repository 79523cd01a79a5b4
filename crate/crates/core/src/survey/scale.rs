use serde::{Deserialize, Serialize};

use super::{Result, SurveyError};

/// Integer response scale. `reversed` scales map their floor to unit 1.0,
/// which is how binary affirm/reject items (affirm = 1) are coded.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScaleSpec {
    pub min: i64,
    pub max: i64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub anchor_labels: Vec<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub reversed: bool,
}

impl ScaleSpec {
    pub fn new(min: i64, max: i64) -> Result<Self> {
        let s = Self { min, max, anchor_labels: Vec::new(), reversed: false };
        s.validate()?;
        Ok(s)
    }

    pub fn with_labels(mut self, labels: &[&str]) -> Self {
        self.anchor_labels = labels.iter().map(|s| s.to_string()).collect();
        self
    }

    pub fn reversed(mut self) -> Self {
        self.reversed = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.min >= self.max {
            return Err(SurveyError::Schema(format!(
                "scale floor {} must be below ceiling {}",
                self.min, self.max
            )));
        }
        if !self.anchor_labels.is_empty() && self.anchor_labels.len() != self.levels() {
            return Err(SurveyError::Schema(format!(
                "scale {}–{} has {} anchor labels",
                self.min,
                self.max,
                self.anchor_labels.len()
            )));
        }
        Ok(())
    }

    pub fn levels(&self) -> usize {
        (self.max - self.min + 1) as usize
    }

    pub fn contains(&self, raw: i64) -> bool {
        (self.min..=self.max).contains(&raw)
    }

    pub fn check(&self, raw: i64) -> Result<()> {
        if self.contains(raw) {
            Ok(())
        } else {
            Err(SurveyError::OutOfScale { raw, min: self.min, max: self.max })
        }
    }

    pub fn label_for(&self, raw: i64) -> Option<&str> {
        if !self.contains(raw) {
            return None;
        }
        self.anchor_labels.get((raw - self.min) as usize).map(String::as_str)
    }

    /// "1–7" style bounds string used in composite prompts.
    pub fn bounds_string(&self) -> String {
        format!("{}–{}", self.min, self.max)
    }

    /// Raw value sitting at susceptibility level `k` (0 = least susceptible).
    pub fn raw_at_level(&self, k: usize) -> i64 {
        if self.reversed {
            self.max - k as i64
        } else {
            self.min + k as i64
        }
    }
}

/// Min–max normalization onto `[0, 1]`.
pub fn normalize_response(raw: i64, scale: &ScaleSpec) -> Result<f64> {
    scale.check(raw)?;
    let span = (scale.max - scale.min) as f64;
    let unit = if scale.reversed {
        (scale.max - raw) as f64 / span
    } else {
        (raw - scale.min) as f64 / span
    };
    Ok(unit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn endpoints_and_interior() {
        let s = ScaleSpec::new(1, 7).unwrap();
        assert_eq!(normalize_response(7, &s).unwrap(), 1.0);
        assert_eq!(normalize_response(1, &s).unwrap(), 0.0);
        let s4 = ScaleSpec::new(1, 4).unwrap();
        assert!((normalize_response(2, &s4).unwrap() - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn out_of_bounds_rejected() {
        let s = ScaleSpec::new(1, 7).unwrap();
        assert_eq!(
            normalize_response(9, &s),
            Err(SurveyError::OutOfScale { raw: 9, min: 1, max: 7 })
        );
    }

    #[test]
    fn binary_affirm_codes_high() {
        let s = ScaleSpec::new(1, 2).unwrap().reversed();
        assert_eq!(normalize_response(1, &s).unwrap(), 1.0);
        assert_eq!(normalize_response(2, &s).unwrap(), 0.0);
        assert_eq!(s.raw_at_level(1), 1);
    }

    #[test]
    fn degenerate_scale_rejected() {
        assert!(ScaleSpec::new(3, 3).is_err());
    }

    proptest! {
        #[test]
        fn order_preserving(min in -5i64..5, width in 1i64..12, a in 0i64..12, b in 0i64..12) {
            let s = ScaleSpec::new(min, min + width).unwrap();
            let (a, b) = (min + a.min(width), min + b.min(width));
            let (ua, ub) = (normalize_response(a, &s).unwrap(), normalize_response(b, &s).unwrap());
            prop_assert!((0.0..=1.0).contains(&ua));
            if a < b { prop_assert!(ua < ub); }
            let r = s.clone().reversed();
            if a < b { prop_assert!(normalize_response(a, &r).unwrap() > normalize_response(b, &r).unwrap()); }
        }
    }
}
