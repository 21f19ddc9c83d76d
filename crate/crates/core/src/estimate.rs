//! Level/verdict bookkeeping shared by slope and modulus estimators.
//!
//! Estimators refine a scale (radius, band width, ...) over a fixed schedule
//! and record one estimate per level. The verdict summarizes how the level
//! sequence behaved; `value` is the estimate at the finest usable level, or
//! `+∞` when the levels grow without stabilizing.

use serde::Serialize;

/// Two consecutive levels within this relative gap count as stabilized.
pub const STABLE_REL: f64 = 0.05;
/// Levels this close to zero are compared absolutely, not relatively.
pub const STABLE_ABS: f64 = 1e-9;
/// Overall growth factor (last/first) beyond which a monotone increasing
/// level sequence is declared diverging.
pub const DIVERGE_FACTOR: f64 = 3.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Converged,
    Diverging,
    Inconclusive,
}

/// One refinement level: the scale it was computed at and the estimate.
/// `estimate` may be `+∞` (serialized as `null`).
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Level {
    pub scale: f64,
    pub estimate: f64,
}

/// Join a level sequence into (value, verdict).
///
/// Rules, in order: any infinite level ⇒ diverging with value `+∞`;
/// last two levels within 5% (or both below the absolute floor) ⇒ converged
/// with the finest value; monotone growth by ≥ `DIVERGE_FACTOR` overall ⇒
/// diverging with value `+∞`; otherwise inconclusive with the finest value.
pub fn summarize(levels: &[Level]) -> (f64, Verdict) {
    if levels.is_empty() {
        return (f64::INFINITY, Verdict::Inconclusive);
    }
    if levels.iter().any(|l| !l.estimate.is_finite()) {
        return (f64::INFINITY, Verdict::Diverging);
    }
    let last = levels[levels.len() - 1].estimate;
    if levels.len() == 1 {
        return (last, Verdict::Inconclusive);
    }
    let prev = levels[levels.len() - 2].estimate;
    let gap = (last - prev).abs();
    if gap <= STABLE_ABS || gap <= STABLE_REL * last.abs().max(prev.abs()) {
        return (last, Verdict::Converged);
    }
    let first = levels[0].estimate;
    let monotone = levels
        .windows(2)
        .all(|w| w[1].estimate >= w[0].estimate - STABLE_ABS);
    if monotone && first > 0.0 && last >= DIVERGE_FACTOR * first {
        return (f64::INFINITY, Verdict::Diverging);
    }
    (last, Verdict::Inconclusive)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lv(vals: &[f64]) -> Vec<Level> {
        vals.iter()
            .enumerate()
            .map(|(i, &v)| Level {
                scale: 0.1 / (i + 1) as f64,
                estimate: v,
            })
            .collect()
    }

    #[test]
    fn stabilized_levels_converge() {
        let (v, verdict) = summarize(&lv(&[1.2, 1.05, 1.0, 1.0]));
        assert_eq!(verdict, Verdict::Converged);
        assert_eq!(v, 1.0);
    }

    #[test]
    fn zero_levels_converge_absolutely() {
        let (v, verdict) = summarize(&lv(&[0.0, 0.0, 0.0]));
        assert_eq!(verdict, Verdict::Converged);
        assert_eq!(v, 0.0);
    }

    #[test]
    fn growing_levels_diverge() {
        // 1/sqrt(delta) growth across a decade schedule.
        let (v, verdict) = summarize(&lv(&[3.16, 5.77, 10.0, 18.3, 31.6]));
        assert_eq!(verdict, Verdict::Diverging);
        assert!(v.is_infinite());
    }

    #[test]
    fn infinite_level_diverges_immediately() {
        let (v, verdict) = summarize(&lv(&[1.0, f64::INFINITY]));
        assert_eq!(verdict, Verdict::Diverging);
        assert!(v.is_infinite());
    }

    #[test]
    fn drifting_levels_are_inconclusive() {
        let (_, verdict) = summarize(&lv(&[1.0, 0.5, 0.25, 0.12]));
        assert_eq!(verdict, Verdict::Inconclusive);
    }
}
