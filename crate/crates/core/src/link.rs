//! Receiver-side link budget.
//!
//! Composes the per-path DC gains of a [`GainTensor`](crate::channel::GainTensor)
//! into one received gain per (user, branch, AP), converts it to electrical
//! SNR under intensity modulation with direct detection, and selects the
//! best ADR branch. The received optical power is
//! `P_t * (O*H_los + H_diff + sum of assigned mirror gains)`: blockage
//! gates the line-of-sight term only.

use serde::{Deserialize, Serialize};

use crate::channel::GainTensor;
use crate::float::Real;

/// Additive white Gaussian receiver noise, variance `N0 * B`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel<F> {
    pub noise_psd_a2_per_hz: F,
    pub bandwidth_hz: F,
}

/// Composite received DC gain for one (user, branch, AP).
///
/// `assigned_mirrors` are the mirrors serving this user; their gains are
/// taken toward `ap`, the user's serving AP. `los_open` is the blockage
/// bit (true = LoS unobstructed).
pub fn received_gain<F: Real>(
    tensor: &GainTensor<F>,
    user: usize,
    branch: usize,
    ap: usize,
    assigned_mirrors: &[usize],
    los_open: bool,
) -> F {
    let mut gain = tensor.diffuse(user, branch, ap);
    if los_open {
        gain += tensor.los(user, branch, ap);
    }
    for &m in assigned_mirrors {
        gain += tensor.irs(user, branch, ap, m);
    }
    gain
}

/// Electrical SNR of an IM/DD link: `(R * P_t * gain)^2 / (N0 * B)`.
pub fn snr<F: Real>(
    gain: F,
    transmit_power_w: F,
    responsivity_a_per_w: F,
    noise: &NoiseModel<F>,
) -> F {
    let photocurrent = responsivity_a_per_w * transmit_power_w * gain;
    photocurrent * photocurrent / (noise.noise_psd_a2_per_hz * noise.bandwidth_hz)
}

/// Shannon spectral efficiency `log2(1 + snr)` in bps/Hz.
pub fn spectral_efficiency<F: Real>(snr_linear: F) -> F {
    (F::one() + snr_linear).log2()
}

/// Branch with the highest composite received gain; ties go to the lowest
/// branch index. Returns `(branch, gain)`.
pub fn best_branch<F: Real>(
    tensor: &GainTensor<F>,
    user: usize,
    ap: usize,
    assigned_mirrors: &[usize],
    los_open: bool,
) -> (usize, F) {
    let mut best = (0, F::neg_infinity());
    for b in 0..tensor.n_branches() {
        let g = received_gain(tensor, user, b, ap, assigned_mirrors, los_open);
        if g > best.1 {
            best = (b, g);
        }
    }
    best
}

/// Full budget for one user served by one AP.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinkBudget<F> {
    pub chosen_branch: usize,
    pub received_gain: F,
    pub received_optical_power_w: F,
    pub photocurrent_a: F,
    pub snr_linear: F,
    pub spectral_efficiency_bps_per_hz: F,
}

/// Evaluates the best-branch link budget for `user` served by `ap`.
pub fn link_budget<F: Real>(
    tensor: &GainTensor<F>,
    user: usize,
    ap: usize,
    assigned_mirrors: &[usize],
    los_open: bool,
    transmit_power_w: F,
    responsivity_a_per_w: F,
    noise: &NoiseModel<F>,
) -> LinkBudget<F> {
    let (chosen_branch, gain) = best_branch(tensor, user, ap, assigned_mirrors, los_open);
    let received_optical_power_w = transmit_power_w * gain;
    let photocurrent_a = responsivity_a_per_w * received_optical_power_w;
    let snr_linear = snr(gain, transmit_power_w, responsivity_a_per_w, noise);
    LinkBudget {
        chosen_branch,
        received_gain: gain,
        received_optical_power_w,
        photocurrent_a,
        snr_linear,
        spectral_efficiency_bps_per_hz: spectral_efficiency(snr_linear),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::GainTensor;
    use approx::assert_abs_diff_eq;

    /// 1 user, 2 branches, 1 AP, 2 mirrors with simple distinct gains.
    fn tiny_tensor() -> GainTensor<f64> {
        GainTensor::from_parts(
            1,
            2,
            1,
            vec![1.0, 2.0],               // los[b0], los[b1]
            vec![0.25, 0.5],              // diffuse
            vec![0.1, 0.2, 0.01, 0.02],   // irs[b][m]
            vec![0, 0],
        )
    }

    #[test]
    fn received_gain_composes_per_blockage_and_mirrors() {
        let t = tiny_tensor();
        assert_eq!(received_gain(&t, 0, 0, 0, &[], false), 0.25);
        assert_eq!(received_gain(&t, 0, 0, 0, &[], true), 1.25);
        assert_eq!(received_gain(&t, 0, 0, 0, &[0, 1], true), 1.25 + 0.3);
        // Blockage removes exactly the LoS term.
        let open = received_gain(&t, 0, 1, 0, &[1], true);
        let blocked = received_gain(&t, 0, 1, 0, &[1], false);
        assert_eq!(open - blocked, 2.0);
    }

    #[test]
    fn snr_matches_hand_budget() {
        let noise = NoiseModel {
            noise_psd_a2_per_hz: 1e-21,
            bandwidth_hz: 2e7,
        };
        let gain = 1.5915e-6;
        let s = snr(gain, 2.0, 0.4, &noise);
        let photocurrent = 0.4 * 2.0 * gain;
        assert_abs_diff_eq!(photocurrent, 1.2732e-6, epsilon = 1e-10);
        assert_abs_diff_eq!(s, photocurrent * photocurrent / 2e-14, epsilon = 1e-9);
        assert_abs_diff_eq!(s, 81.05, epsilon = 0.01);
        assert_eq!(snr(0.0, 2.0, 0.4, &noise), 0.0);
        // IM/DD square law: doubling optical power quadruples SNR.
        assert_abs_diff_eq!(snr(gain, 4.0, 0.4, &noise), 4.0 * s, epsilon = 1e-9);
    }

    #[test]
    fn spectral_efficiency_follows_shannon_form() {
        assert_eq!(spectral_efficiency(0.0), 0.0);
        assert_eq!(spectral_efficiency(1.0), 1.0);
        assert_abs_diff_eq!(spectral_efficiency(81.05), 6.358, epsilon = 1e-3);
        assert!(spectral_efficiency(2.0) < spectral_efficiency(3.0));
    }

    #[test]
    fn best_branch_maximizes_and_breaks_ties_low() {
        let t = tiny_tensor();
        assert_eq!(best_branch(&t, 0, 0, &[], true), (1, 2.5));
        // Equal branches: lowest index wins.
        let tie = GainTensor::from_parts(1, 3, 1, vec![1.0; 3], vec![0.0; 3], vec![], vec![]);
        assert_eq!(best_branch(&tie, 0, 0, &[], true).0, 0);
        // All-zero gains still return branch 0.
        let zero = GainTensor::from_parts(1, 2, 1, vec![0.0; 2], vec![0.0; 2], vec![], vec![]);
        assert_eq!(best_branch(&zero, 0, 0, &[], true), (0, 0.0));
    }

    #[test]
    fn best_branch_is_scale_invariant() {
        let t = tiny_tensor();
        let scaled = t.scaled(4.0);
        assert_eq!(
            best_branch(&t, 0, 0, &[0], true).0,
            best_branch(&scaled, 0, 0, &[0], true).0
        );
    }

    #[test]
    fn mirrors_never_reduce_best_branch_gain() {
        let t = tiny_tensor();
        let without = best_branch(&t, 0, 0, &[], true).1;
        let with = best_branch(&t, 0, 0, &[0], true).1;
        assert!(with >= without);
    }

    #[test]
    fn link_budget_is_consistent() {
        let t = tiny_tensor();
        let noise = NoiseModel {
            noise_psd_a2_per_hz: 1e-21,
            bandwidth_hz: 2e7,
        };
        let lb = link_budget(&t, 0, 0, &[0], true, 2.0, 0.4, &noise);
        assert_eq!(lb.chosen_branch, 1);
        assert_eq!(lb.received_gain, 2.51);
        assert_eq!(lb.received_optical_power_w, 2.0 * 2.51);
        assert_eq!(lb.photocurrent_a, 0.4 * 2.0 * 2.51);
        assert_eq!(
            lb.spectral_efficiency_bps_per_hz,
            spectral_efficiency(lb.snr_linear)
        );
    }
}
