use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::MetricsError;

/// Absolute error lines, meters.
pub const ABS_ERROR_LINES: [f64; 4] = [0.5, 1.0, 2.0, 5.0];
/// Relative error lines, fractions of ground truth.
pub const REL_ERROR_LINES: [f64; 3] = [0.10, 0.20, 0.30];

/// Inclusive acceptance interval in percent of the ground-truth distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceBand {
    pub low: f64,
    pub high: f64,
}

impl DistanceBand {
    pub const STRICT: DistanceBand = DistanceBand { low: 80.0, high: 120.0 };
    pub const LOOSE: DistanceBand = DistanceBand { low: 50.0, high: 200.0 };

    pub fn new(low: f64, high: f64) -> Result<Self, MetricsError> {
        if low > 0.0 && low <= 100.0 && high >= 100.0 && high.is_finite() {
            Ok(DistanceBand { low, high })
        } else {
            Err(MetricsError::InvalidBand(low, high))
        }
    }

    pub fn defaults() -> [DistanceBand; 2] {
        [Self::STRICT, Self::LOOSE]
    }

    pub fn contains(&self, gt: f64, pred: f64) -> bool {
        self.low * gt / 100.0 <= pred && pred <= self.high * gt / 100.0
    }
}

const UNITS: &[(&str, f64)] = &[
    ("m", 1.0),
    ("meter", 1.0),
    ("meters", 1.0),
    ("metre", 1.0),
    ("metres", 1.0),
    ("cm", 0.01),
    ("centimeter", 0.01),
    ("centimeters", 0.01),
    ("centimetre", 0.01),
    ("centimetres", 0.01),
    ("ft", 0.3048),
    ("feet", 0.3048),
    ("foot", 0.3048),
];

/// First distance in `text`, converted to meters. Bare numbers are meters.
pub fn parse_distance_answer(text: &str) -> Option<f64> {
    scan(text).next()
}

/// Every distance in `text`, in order of appearance.
pub fn parse_distance_answers(text: &str) -> Vec<f64> {
    scan(text).collect()
}

fn scan(text: &str) -> impl Iterator<Item = f64> + '_ {
    let bytes = text.as_bytes();
    let mut i = 0;
    core::iter::from_fn(move || {
        while i < bytes.len() {
            let starts_number = bytes[i].is_ascii_digit()
                || (bytes[i] == b'.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit));
            if !starts_number {
                i += 1;
                continue;
            }
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if i + 1 < bytes.len() && bytes[i] == b'.' && bytes[i + 1].is_ascii_digit() {
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
            }
            let value: f64 = text[start..i].parse().ok()?;
            let mut j = i;
            while j < bytes.len() && bytes[j] == b' ' {
                j += 1;
            }
            let word_end = bytes[j..]
                .iter()
                .position(|b| !b.is_ascii_alphabetic())
                .map_or(bytes.len(), |p| j + p);
            let word = &text[j..word_end];
            let factor = UNITS
                .iter()
                .find(|(u, _)| u.eq_ignore_ascii_case(word))
                .map_or(1.0, |(_, f)| *f);
            return Some(value * factor);
        }
        None
    })
}

/// Pair each ground-truth distance with the answer's k-th number. Missing
/// numbers are `None` (counted as unparsed for that pair).
pub fn pair_answers(gts: &[f64], answer: &str) -> Vec<(f64, Option<f64>)> {
    let preds = parse_distance_answers(answer);
    gts.iter()
        .enumerate()
        .map(|(k, gt)| (*gt, preds.get(k).copied()))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandAccuracy {
    pub low: f64,
    pub high: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceReport {
    pub count: usize,
    /// Fraction of pairs with a parseable number.
    pub number_rate: f64,
    pub bands: Vec<BandAccuracy>,
    /// Per parsed pair, meters.
    pub abs_errors: Vec<f64>,
    /// Per parsed pair, `|pred - gt| / gt`.
    pub rel_errors: Vec<f64>,
}

/// Score free-text distance answers against ground truth.
pub fn eval_distance_batch<'a, I>(pairs: I, bands: &[DistanceBand]) -> Result<DistanceReport, MetricsError>
where
    I: IntoIterator<Item = (f64, &'a str)>,
{
    let parsed: Vec<(f64, Option<f64>)> = pairs
        .into_iter()
        .map(|(gt, text)| (gt, parse_distance_answer(text)))
        .collect();
    eval_distance_predictions(&parsed, bands)
}

/// Same as [`eval_distance_batch`] for already-extracted predictions.
pub fn eval_distance_predictions(
    pairs: &[(f64, Option<f64>)],
    bands: &[DistanceBand],
) -> Result<DistanceReport, MetricsError> {
    if pairs.is_empty() {
        return Err(MetricsError::EmptyBatch);
    }
    if let Some((gt, _)) = pairs.iter().find(|(gt, _)| gt.is_nan() || *gt <= 0.0) {
        return Err(MetricsError::NonPositiveGroundTruth(*gt));
    }
    let n = pairs.len() as f64;
    let mut abs_errors = Vec::new();
    let mut rel_errors = Vec::new();
    for (gt, pred) in pairs {
        if let Some(p) = pred {
            let e = libm::fabs(p - gt);
            abs_errors.push(e);
            rel_errors.push(e / gt);
        }
    }
    let bands = bands
        .iter()
        .map(|b| {
            let hits = pairs
                .iter()
                .filter(|(gt, pred)| pred.is_some_and(|p| b.contains(*gt, p)))
                .count();
            BandAccuracy {
                low: b.low,
                high: b.high,
                accuracy: hits as f64 / n,
            }
        })
        .collect();
    Ok(DistanceReport {
        count: pairs.len(),
        number_rate: abs_errors.len() as f64 / n,
        bands,
        abs_errors,
        rel_errors,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdFraction {
    pub threshold: f64,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorStats {
    pub count: usize,
    /// Fraction with absolute error strictly below each line.
    pub abs_under: Vec<ThresholdFraction>,
    /// Fraction with relative error strictly below each line.
    pub rel_under: Vec<ThresholdFraction>,
    pub mean_abs: f64,
    pub median_abs: f64,
    pub mean_rel: f64,
    pub median_rel: f64,
}

/// Error histogram summary over `(gt, pred)` meter pairs.
pub fn error_stats(pairs: &[(f64, f64)]) -> Result<ErrorStats, MetricsError> {
    if pairs.is_empty() {
        return Err(MetricsError::EmptyBatch);
    }
    if let Some((gt, _)) = pairs.iter().find(|(gt, _)| gt.is_nan() || *gt <= 0.0) {
        return Err(MetricsError::NonPositiveGroundTruth(*gt));
    }
    let abs: Vec<f64> = pairs.iter().map(|(g, p)| libm::fabs(p - g)).collect();
    let rel: Vec<f64> = pairs.iter().zip(&abs).map(|((g, _), e)| e / g).collect();
    let under = |values: &[f64], lines: &[f64]| {
        lines
            .iter()
            .map(|t| ThresholdFraction {
                threshold: *t,
                fraction: values.iter().filter(|v| **v < *t).count() as f64 / values.len() as f64,
            })
            .collect()
    };
    Ok(ErrorStats {
        count: pairs.len(),
        abs_under: under(&abs, &ABS_ERROR_LINES),
        rel_under: under(&rel, &REL_ERROR_LINES),
        mean_abs: mean(&abs),
        median_abs: median(&abs),
        mean_rel: mean(&rel),
        median_rel: median(&rel),
    })
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len() / 2;
    if s.len() % 2 == 1 {
        s[m]
    } else {
        (s[m - 1] + s[m]) / 2.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_units() {
        assert_eq!(parse_distance_answer("2.1m"), Some(2.1));
        assert_eq!(parse_distance_answer("about 150 cm apart"), Some(1.5));
        let close = |a: Option<f64>, b: f64| (a.unwrap() - b).abs() < 1e-12;
        assert!(close(parse_distance_answer("roughly 10 feet"), 3.048));
        assert!(close(parse_distance_answer("3 ft."), 0.9144));
        assert_eq!(parse_distance_answer("It is 2 meters away"), Some(2.0));
        assert_eq!(parse_distance_answer("I cannot determine distances."), None);
        assert_eq!(parse_distance_answer("0.5"), Some(0.5));
        assert_eq!(parse_distance_answer("about .8 m"), Some(0.8));
    }

    #[test]
    fn unit_must_be_whole_word() {
        // "2 mugs" is a bare number, not 2 m of something.
        assert_eq!(parse_distance_answer("2 mugs"), Some(2.0));
        assert_eq!(parse_distance_answer("4 cmx"), Some(4.0));
    }

    #[test]
    fn multiple_answers_in_order() {
        assert_eq!(parse_distance_answers("2.1m, 0.8m and 300 cm"), [2.1, 0.8, 3.0]);
        assert_eq!(
            pair_answers(&[2.0, 1.0, 4.0], "2.0m and 1.1m"),
            [(2.0, Some(2.0)), (1.0, Some(1.1)), (4.0, None)]
        );
    }

    #[test]
    fn bands_inclusive() {
        let b = DistanceBand::LOOSE;
        assert!(b.contains(2.0, 1.0));
        assert!(b.contains(2.0, 4.0));
        assert!(!b.contains(2.0, 4.5));
        assert!(!DistanceBand::STRICT.contains(2.0, 1.0));
        assert!(DistanceBand::STRICT.contains(2.0, 2.0));
        assert!(DistanceBand::new(120.0, 150.0).is_err());
        assert!(DistanceBand::new(0.0, 150.0).is_err());
    }

    #[test]
    fn band_accuracy_example() {
        let r = eval_distance_batch(
            [(2.0, "2.0m"), (2.0, "1.0m"), (2.0, "4.5m")],
            &DistanceBand::defaults(),
        )
        .unwrap();
        assert_eq!(r.number_rate, 1.0);
        assert!((r.bands[0].accuracy - 1.0 / 3.0).abs() < 1e-12);
        assert!((r.bands[1].accuracy - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn unparsed_counts_against_everything() {
        let r = eval_distance_batch([(2.0, "2.0m"), (2.0, "no idea")], &DistanceBand::defaults()).unwrap();
        assert_eq!(r.number_rate, 0.5);
        assert_eq!(r.bands[1].accuracy, 0.5);
        assert_eq!(r.abs_errors, [0.0]);
        assert!(eval_distance_batch([(0.0, "1m")], &[]).is_err());
        assert_eq!(
            eval_distance_batch(core::iter::empty::<(f64, &str)>(), &[]),
            Err(MetricsError::EmptyBatch)
        );
    }

    #[test]
    fn error_stat_examples() {
        let s = error_stats(&[(2.0, 2.0)]).unwrap();
        assert!(s.abs_under.iter().chain(&s.rel_under).all(|t| t.fraction == 1.0));

        let s = error_stats(&[(2.0, 3.9)]).unwrap();
        let abs = |t: f64| s.abs_under.iter().find(|x| x.threshold == t).unwrap().fraction;
        assert_eq!(abs(2.0), 1.0);
        assert_eq!(abs(1.0), 0.0);

        let pairs: Vec<(f64, f64)> = (1..=100).map(|i| {
            let gt = 0.25 * i as f64;
            (gt, gt * 1.15)
        }).collect();
        let s = error_stats(&pairs).unwrap();
        let rel = |t: f64| s.rel_under.iter().find(|x| x.threshold == t).unwrap().fraction;
        assert_eq!(rel(0.20), 1.0);
        assert_eq!(rel(0.10), 0.0);
        assert!((s.median_rel - 0.15).abs() < 1e-9);
    }
}
