//! Verification threshold selection by grid search on empirical accuracy.

use serde::{Deserialize, Serialize};

use super::{cosine, RankError, Result};

pub const DEFAULT_GRID_SIZE: usize = 1001;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdCalibration {
    pub tau: f64,
    /// Mean over all pairs of `verify` on genuine pairs and `1 - verify` on
    /// impostor pairs, at `tau`.
    pub accuracy: f64,
    pub grid_size: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct VerificationPair<'a> {
    pub probe: &'a [f64],
    pub reference: &'a [f64],
    pub genuine: bool,
}

pub fn calibrate_threshold(pairs: &[VerificationPair<'_>], grid_size: usize) -> Result<ThresholdCalibration> {
    let scored = pairs
        .iter()
        .map(|p| Ok((cosine(p.probe, p.reference)?, p.genuine)))
        .collect::<Result<Vec<_>>>()?;
    calibrate_scores(&scored, grid_size)
}

/// Grid search over `tau_i = i / (grid_size - 1)`. Returns the smallest
/// `tau` attaining the best accuracy.
pub fn calibrate_scores(scored: &[(f64, bool)], grid_size: usize) -> Result<ThresholdCalibration> {
    if grid_size < 2 {
        return Err(RankError::InvalidGrid(grid_size));
    }
    let mut genuine: Vec<f64> = scored.iter().filter(|s| s.1).map(|s| s.0).collect();
    let mut impostor: Vec<f64> = scored.iter().filter(|s| !s.1).map(|s| s.0).collect();
    if genuine.is_empty() {
        return Err(RankError::MissingPairs("genuine"));
    }
    if impostor.is_empty() {
        return Err(RankError::MissingPairs("impostor"));
    }
    genuine.sort_unstable_by(f64::total_cmp);
    impostor.sort_unstable_by(f64::total_cmp);

    // correct(tau) = #{genuine > tau} + #{impostor <= tau}
    let correct_at = |tau: f64| {
        let accepted_genuine = genuine.len() - genuine.partition_point(|&s| s <= tau);
        let rejected_impostor = impostor.partition_point(|&s| s <= tau);
        accepted_genuine + rejected_impostor
    };
    let last = (grid_size - 1) as f64;
    let (best_i, best_correct) = (1..grid_size)
        .map(|i| (i, correct_at(i as f64 / last)))
        .fold((0, correct_at(0.0)), |best, cur| if cur.1 > best.1 { cur } else { best });
    Ok(ThresholdCalibration {
        tau: best_i as f64 / last,
        accuracy: best_correct as f64 / scored.len() as f64,
        grid_size,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Straight transcription of the objective: loop over grid and pairs.
    fn brute(scored: &[(f64, bool)], grid: usize) -> (f64, f64) {
        let mut best = (0.0, -1.0);
        for i in 0..grid {
            let tau = i as f64 / (grid - 1) as f64;
            let acc = scored
                .iter()
                .map(|&(s, g)| if (s > tau) == g { 1.0 } else { 0.0 })
                .sum::<f64>()
                / scored.len() as f64;
            if acc > best.1 {
                best = (tau, acc);
            }
        }
        best
    }

    #[test]
    fn separable_scores_pick_first_perfect_grid_point() {
        let scored = [(0.9, true), (0.9, true), (0.1, false), (0.1, false)];
        let cal = calibrate_scores(&scored, 11).unwrap();
        assert_eq!(cal.tau, 0.1);
        assert_eq!(cal.accuracy, 1.0);
        assert_eq!(cal.grid_size, 11);
    }

    #[test]
    fn all_perfect_genuine_pick_zero() {
        let v = [0.6, 0.8];
        let pairs = [
            VerificationPair { probe: &v, reference: &v, genuine: true },
            VerificationPair { probe: &v, reference: &v, genuine: true },
        ];
        // one impostor is required; an orthogonal one keeps tau = 0 optimal
        let w = [0.8, -0.6];
        let mut with_impostor = pairs.to_vec();
        with_impostor.push(VerificationPair { probe: &v, reference: &w, genuine: false });
        let cal = calibrate_threshold(&with_impostor, 11).unwrap();
        assert_eq!(cal.tau, 0.0);
        assert_eq!(cal.accuracy, 1.0);
        assert_eq!(calibrate_threshold(&pairs, 11), Err(RankError::MissingPairs("impostor")));
    }

    #[test]
    fn order_invariant_and_matches_brute_force() {
        let scored: Vec<(f64, bool)> = (0..200)
            .map(|i| {
                let x = ((i * 7919) % 1000) as f64 / 1000.0;
                (x * 2.0 - 1.0, (i * 31) % 3 != 0 && x > 0.3)
            })
            .collect();
        let a = calibrate_scores(&scored, 101).unwrap();
        let mut rev = scored.clone();
        rev.reverse();
        assert_eq!(a, calibrate_scores(&rev, 101).unwrap());
        let (tau, acc) = brute(&scored, 101);
        assert_eq!(a.tau, tau);
        assert!((a.accuracy - acc).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_grid() {
        assert_eq!(calibrate_scores(&[(0.5, true), (0.1, false)], 1), Err(RankError::InvalidGrid(1)));
    }
}
