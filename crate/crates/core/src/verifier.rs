//! Rule-based action condition verifier: deficit consistency across the
//! history window, then the hazard-proximity ratio of the latest frame.

use num_bigint::BigInt;
use num_rational::Ratio;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{ConditionActionPair, EnvironmentSnapshot, ExecutionCondition, NormBox, ViewId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VerifyError {
    #[error("need at least 2 frames of history, got {0}")]
    InsufficientHistory(usize),
    #[error("history ticks must be strictly increasing ({prev} then {next})")]
    NonMonotonicHistory { prev: u64, next: u64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid verifier config: {0}")]
pub struct ConfigError(pub String);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConsistencyReason {
    QuantityMismatch,
    SpatialShiftExceeded,
    DeficitDisappeared,
    Consistent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConsistencyVerdict {
    pub consistent: bool,
    pub reason: ConsistencyReason,
}

impl ConsistencyVerdict {
    pub fn from_reason(reason: ConsistencyReason) -> Self {
        ConsistencyVerdict {
            consistent: reason == ConsistencyReason::Consistent,
            reason,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VerifierConfig {
    /// Largest centroid move between consecutive frames, as a fraction of
    /// the image width.
    pub shift_threshold: f64,
    /// Strict threshold on the hazard-proximity ratio.
    pub hazard_ratio_threshold: f64,
    pub history_len: usize,
    /// Take the largest per-view ratio instead of the front view alone.
    pub all_views: bool,
}

impl Default for VerifierConfig {
    fn default() -> Self {
        VerifierConfig {
            shift_threshold: 0.10,
            hazard_ratio_threshold: 0.05,
            history_len: 5,
            all_views: false,
        }
    }
}

impl VerifierConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let unit = |v: f64| v > 0.0 && v < 1.0;
        if !unit(self.shift_threshold) {
            return Err(ConfigError(format!("shift_threshold {} not in (0,1)", self.shift_threshold)));
        }
        if !unit(self.hazard_ratio_threshold) {
            return Err(ConfigError(format!(
                "hazard_ratio_threshold {} not in (0,1)",
                self.hazard_ratio_threshold
            )));
        }
        if self.history_len < 2 {
            return Err(ConfigError(format!("history_len {} < 2", self.history_len)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Replan,
    ConsistentNoImmediateHazard,
    ConsistentImmediateHazard,
}

impl Classification {
    pub fn as_condition(self) -> Option<ExecutionCondition> {
        match self {
            Classification::Replan => None,
            Classification::ConsistentNoImmediateHazard => Some(ExecutionCondition::ConsistentNoImmediateHazard),
            Classification::ConsistentImmediateHazard => Some(ExecutionCondition::ConsistentImmediateHazard),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Execute,
    Deny,
}

fn window<'a>(
    history: &'a [EnvironmentSnapshot],
    cfg: &VerifierConfig,
) -> Result<&'a [EnvironmentSnapshot], VerifyError> {
    let k = cfg.history_len.max(2);
    let w = &history[history.len().saturating_sub(k)..];
    if w.len() < 2 {
        return Err(VerifyError::InsufficientHistory(w.len()));
    }
    for pair in w.windows(2) {
        if pair[1].tick <= pair[0].tick {
            return Err(VerifyError::NonMonotonicHistory {
                prev: pair[0].tick,
                next: pair[1].tick,
            });
        }
    }
    Ok(w)
}

/// Pairs each previous centroid with a next one, closest pairs first.
/// Returns the matched distances, or `None` if some centroid is left over.
fn greedy_match(prev: &[(f64, f64)], next: &[(f64, f64)]) -> Option<Vec<f64>> {
    let mut candidates: Vec<(f64, usize, usize)> = Vec::with_capacity(prev.len() * next.len());
    for (i, a) in prev.iter().enumerate() {
        for (j, b) in next.iter().enumerate() {
            candidates.push(((a.0 - b.0).hypot(a.1 - b.1), i, j));
        }
    }
    candidates.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut used_prev = vec![false; prev.len()];
    let mut used_next = vec![false; next.len()];
    let mut dists = Vec::new();
    for (d, i, j) in candidates {
        if !used_prev[i] && !used_next[j] {
            used_prev[i] = true;
            used_next[j] = true;
            dists.push(d);
        }
    }
    if used_prev.iter().all(|&u| u) && used_next.iter().all(|&u| u) {
        Some(dists)
    } else {
        None
    }
}

fn frame_pair_reason(
    a: &EnvironmentSnapshot,
    b: &EnvironmentSnapshot,
    cfg: &VerifierConfig,
) -> ConsistencyReason {
    for view in ViewId::ALL {
        let da = &a.perception.view(view).deficits;
        let db = &b.perception.view(view).deficits;
        if !da.is_empty() && db.is_empty() {
            return ConsistencyReason::DeficitDisappeared;
        }
        if da.len() != db.len() {
            return ConsistencyReason::QuantityMismatch;
        }
        let ca: Vec<_> = da.iter().map(|d| d.bbox.centroid()).collect();
        let cb: Vec<_> = db.iter().map(|d| d.bbox.centroid()).collect();
        match greedy_match(&ca, &cb) {
            None => return ConsistencyReason::QuantityMismatch,
            Some(dists) => {
                if dists.iter().any(|&d| d > cfg.shift_threshold) {
                    return ConsistencyReason::SpatialShiftExceeded;
                }
            }
        }
    }
    ConsistencyReason::Consistent
}

/// Compares deficit counts and positions across consecutive frames of the
/// last `history_len` snapshots.
pub fn check_deficit_consistency(
    history: &[EnvironmentSnapshot],
    cfg: &VerifierConfig,
) -> Result<ConsistencyVerdict, VerifyError> {
    let w = window(history, cfg)?;
    for pair in w.windows(2) {
        let reason = frame_pair_reason(&pair[0], &pair[1], cfg);
        if reason != ConsistencyReason::Consistent {
            return Ok(ConsistencyVerdict::from_reason(reason));
        }
    }
    Ok(ConsistencyVerdict::from_reason(ConsistencyReason::Consistent))
}

/// Mantissa and exponent of a finite non-negative float, `x = m · 2^e`.
fn dyadic(x: f64) -> (u64, i32) {
    let bits = x.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i32;
    let frac = bits & ((1u64 << 52) - 1);
    if exp == 0 {
        (frac, -1074)
    } else {
        (frac | (1u64 << 52), exp - 1075)
    }
}

/// Area of the union of axis-aligned boxes, by slab decomposition along x.
///
/// Box coordinates are scaled to exact integers, so the sweep is exact and
/// the only rounding is the final conversion. The result therefore depends
/// only on the set of boxes and never drops when a box is added.
pub fn union_area(boxes: &[NormBox]) -> f64 {
    if boxes.is_empty() {
        return 0.0;
    }
    let coords = || boxes.iter().flat_map(|b| [b.x0(), b.y0(), b.x1(), b.y1()]);
    // every coordinate is in [0, 1], so every exponent is at most -52
    let Some(emin) = coords().filter(|&c| c > 0.0).map(|c| dyadic(c).1).min() else {
        return 0.0;
    };
    let exact = |c: f64| {
        if c > 0.0 {
            let (m, e) = dyadic(c);
            BigInt::from(m) << ((e - emin) as usize)
        } else {
            BigInt::zero()
        }
    };
    let scaled: Vec<[BigInt; 4]> = boxes
        .iter()
        .map(|b| [exact(b.x0()), exact(b.y0()), exact(b.x1()), exact(b.y1())])
        .collect();

    let mut xs: Vec<&BigInt> = scaled.iter().flat_map(|b| [&b[0], &b[2]]).collect();
    xs.sort();
    xs.dedup();

    let mut area = BigInt::zero();
    let mut spans: Vec<(&BigInt, &BigInt)> = Vec::with_capacity(boxes.len());
    for slab in xs.windows(2) {
        let (left, right) = (slab[0], slab[1]);
        spans.clear();
        spans.extend(
            scaled
                .iter()
                .filter(|b| &b[0] <= left && &b[2] >= right)
                .map(|b| (&b[1], &b[3])),
        );
        if spans.is_empty() {
            continue;
        }
        spans.sort();
        let mut covered = BigInt::zero();
        let (mut lo, mut hi) = spans[0];
        for &(s, e) in &spans[1..] {
            if s > hi {
                covered += hi - lo;
                lo = s;
                hi = e;
            } else if e > hi {
                hi = e;
            }
        }
        covered += hi - lo;
        area += (right - left) * covered;
    }
    let denom = BigInt::one() << ((-2 * emin) as usize);
    Ratio::new_raw(area, denom).to_f64().unwrap_or(0.0).clamp(0.0, 1.0)
}

fn view_ratio(snapshot: &EnvironmentSnapshot, view: ViewId) -> f64 {
    let v = snapshot.perception.view(view);
    let boxes: Vec<NormBox> = v
        .deficits
        .iter()
        .map(|d| d.bbox)
        .chain(
            v.visible_objects
                .iter()
                .filter(|o| o.class.is_traffic_object())
                .map(|o| o.bbox),
        )
        .collect();
    union_area(&boxes)
}

/// Union area of deficit regions and road-user boxes, as a fraction of the
/// image. Front view only unless `all_views`, which takes the largest view.
pub fn hazard_proximity_ratio(snapshot: &EnvironmentSnapshot, all_views: bool) -> f64 {
    if all_views {
        ViewId::ALL
            .iter()
            .map(|&v| view_ratio(snapshot, v))
            .fold(0.0, f64::max)
    } else {
        view_ratio(snapshot, ViewId::Front)
    }
}

pub fn classify_condition(
    history: &[EnvironmentSnapshot],
    cfg: &VerifierConfig,
) -> Result<Classification, VerifyError> {
    let verdict = check_deficit_consistency(history, cfg)?;
    if !verdict.consistent {
        return Ok(Classification::Replan);
    }
    let latest = history.last().expect("window checked non-empty");
    if hazard_proximity_ratio(latest, cfg.all_views) > cfg.hazard_ratio_threshold {
        Ok(Classification::ConsistentImmediateHazard)
    } else {
        Ok(Classification::ConsistentNoImmediateHazard)
    }
}

/// Executes only when the live classification equals the pair's guard.
pub fn verify(
    pair: &ConditionActionPair,
    history: &[EnvironmentSnapshot],
    cfg: &VerifierConfig,
) -> Result<Verdict, VerifyError> {
    Ok(verdict_for(pair, classify_condition(history, cfg)?))
}

/// [`verify`] against an already computed classification.
pub fn verdict_for(pair: &ConditionActionPair, classification: Classification) -> Verdict {
    if classification.as_condition() == Some(pair.condition) {
        Verdict::Execute
    } else {
        Verdict::Deny
    }
}
