//! Generalized advantage estimation.

use crate::env::PriceVector;
use crate::{Error, Result};

/// One collected day, as seen by the learner.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    /// Network input the action was sampled from.
    pub obs: Vec<f64>,
    /// Pre-squash Gaussian sample.
    pub raw_action: Vec<f64>,
    pub action: PriceVector,
    /// Behavior log-density of `raw_action`.
    pub logprob: f64,
    pub value: f64,
    pub r_combined: f64,
    pub r_energy: f64,
    pub r_smirl: f64,
    pub done: bool,
}

/// Backward recursion over the trajectory, training on `r_combined`.
///
/// `last_value` bootstraps the step after the final transition and is ignored
/// when that transition ends an episode. Returns `(advantages, returns)`.
pub fn compute_gae(
    traj: &[Transition],
    last_value: f64,
    gamma: f64,
    lambda: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if traj.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    let n = traj.len();
    let mut advantages = vec![0.0; n];
    let mut next_value = last_value;
    let mut next_adv = 0.0;
    for t in (0..n).rev() {
        let tr = &traj[t];
        let cont = if tr.done { 0.0 } else { 1.0 };
        let delta = tr.r_combined + gamma * next_value * cont - tr.value;
        next_adv = delta + gamma * lambda * cont * next_adv;
        advantages[t] = next_adv;
        next_value = tr.value;
    }
    let returns = advantages.iter().zip(traj).map(|(a, tr)| a + tr.value).collect();
    Ok((advantages, returns))
}

/// Shifts to zero mean and, unless the batch is constant, scales to unit
/// population standard deviation.
pub fn normalize_advantages(adv: &mut [f64]) {
    if adv.is_empty() {
        return;
    }
    let n = adv.len() as f64;
    let mean = adv.iter().sum::<f64>() / n;
    let std = (adv.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n).sqrt();
    let scale = if std > 1e-12 { 1.0 / std } else { 1.0 };
    adv.iter_mut().for_each(|a| *a = (*a - mean) * scale);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tr(r: f64, v: f64, done: bool) -> Transition {
        Transition {
            obs: vec![],
            raw_action: vec![],
            action: PriceVector(vec![]),
            logprob: 0.0,
            value: v,
            r_combined: r,
            r_energy: r,
            r_smirl: 0.0,
            done,
        }
    }

    #[test]
    fn empty_is_an_error() {
        assert_eq!(compute_gae(&[], 0.0, 0.99, 0.95), Err(Error::EmptyTrajectory));
    }

    #[test]
    fn single_step_episode() {
        let (a, ret) = compute_gae(&[tr(1.5, 0.25, true)], 100.0, 0.99, 0.95).unwrap();
        assert_eq!(a, vec![1.25]);
        assert_eq!(ret, vec![1.5]);
    }

    #[test]
    fn zeros_give_zeros() {
        let traj: Vec<_> = (0..7).map(|i| tr(0.0, 0.0, i == 3)).collect();
        let (a, _) = compute_gae(&traj, 0.0, 0.99, 0.95).unwrap();
        assert!(a.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn thirty_step_trajectory_matches_summation_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..20 {
            let traj: Vec<_> = (0..30)
                .map(|_| {
                    tr(
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-2.0..2.0),
                        rng.gen_bool(0.1),
                    )
                })
                .collect();
            let boot = rng.gen_range(-2.0..2.0);
            let (a, ret) = compute_gae(&traj, boot, 0.99, 0.95).unwrap();
            let want = oracle::gae_by_summation(
                &traj.iter().map(|t| t.r_combined).collect::<Vec<_>>(),
                &traj.iter().map(|t| t.value).collect::<Vec<_>>(),
                &traj.iter().map(|t| t.done).collect::<Vec<_>>(),
                boot,
                0.99,
                0.95,
            );
            for t in 0..30 {
                assert!((a[t] - want[t]).abs() <= 1e-10);
                assert_eq!(ret[t], a[t] + traj[t].value);
            }
        }
    }

    #[test]
    fn constant_advantages_only_shift() {
        let mut a = vec![2.0; 5];
        normalize_advantages(&mut a);
        assert_eq!(a, vec![0.0; 5]);
    }

    proptest! {
        #[test]
        fn normalized_advantages_are_standardized(mut a in prop::collection::vec(-50.0..50.0f64, 8..256)) {
            let spread = a.iter().cloned().fold(f64::MIN, f64::max) - a.iter().cloned().fold(f64::MAX, f64::min);
            prop_assume!(spread > 1e-3);
            normalize_advantages(&mut a);
            let (mean, std) = oracle::mean_std_population(&a);
            prop_assert!(mean.abs() <= 1e-9);
            prop_assert!((std - 1.0).abs() <= 1e-6);
        }
    }
}
