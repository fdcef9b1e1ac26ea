//! Proportional-fair assignment of APs and mirrors to users.
//!
//! Users served by the same AP share its airtime; with a log-rate
//! utility the optimal split is exactly equal shares, so the solver
//! searches only over discrete maps. Stage one assigns each user an AP
//! by exhaustive enumeration (mirrors unassigned); stage two assigns
//! each mirror to at most one user, either greedily to a fixed point or
//! exhaustively when the space is small. A mirror credits only its
//! user's serving AP, and per-link LoS blockage gates the LoS term only;
//! diffuse and mirror paths always contribute.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::{build_gain_tensor, GainTensor};
use crate::float::Real;
use crate::link::{best_branch, snr, spectral_efficiency};
use crate::scene::{MirrorStage, ScenarioConfig, ScenarioError};

/// Upper bound on exhaustive-search spaces, as a combination count.
pub const SEARCH_GUARD: f64 = 1e7;

/// Allocation-stage failures.
#[derive(Debug)]
pub enum AllocationError {
    /// Blockage ratio outside [0, 1].
    RatioOutOfRange { ratio: f64 },
    /// An exhaustive stage was asked to enumerate too many maps.
    SearchSpaceExceeded { combinations: f64 },
    /// Scenario construction failed while building the gain tensor.
    Scenario(ScenarioError),
}

impl fmt::Display for AllocationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::RatioOutOfRange { ratio } => {
                write!(f, "blockage ratio {ratio} lies outside [0, 1]")
            }
            Self::SearchSpaceExceeded { combinations } => write!(
                f,
                "exhaustive search over {combinations:.3e} maps exceeds the {SEARCH_GUARD:.0e} guard"
            ),
            Self::Scenario(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for AllocationError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Self::Scenario(e) => Some(e),
            _ => None,
        }
    }
}

impl From<ScenarioError> for AllocationError {
    fn from(e: ScenarioError) -> Self {
        Self::Scenario(e)
    }
}

/// Per-(user, AP) LoS availability: `true` means the direct path is
/// unobstructed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockageMask {
    n_users: usize,
    n_aps: usize,
    open: Vec<bool>,
}

impl BlockageMask {
    /// Mask with every LoS link available.
    pub fn all_open(n_users: usize, n_aps: usize) -> Self {
        Self {
            n_users,
            n_aps,
            open: vec![true; n_users * n_aps],
        }
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    pub fn n_aps(&self) -> usize {
        self.n_aps
    }

    pub fn is_open(&self, user: usize, ap: usize) -> bool {
        debug_assert!(user < self.n_users && ap < self.n_aps);
        self.open[user * self.n_aps + ap]
    }

    /// Fraction of blocked links.
    pub fn blocked_fraction(&self) -> f64 {
        if self.open.is_empty() {
            return 0.0;
        }
        self.open.iter().filter(|&&o| !o).count() as f64 / self.open.len() as f64
    }
}

/// Draws an independent Bernoulli blockage state per (user, AP) link:
/// blocked with probability `ratio`. Deterministic in the seed; the
/// endpoints 0 and 1 are exact. The draw stream is decorrelated from
/// user placement, which uses the same per-trial seed.
pub fn sample_blockage(
    ratio: f64,
    n_users: usize,
    n_aps: usize,
    rng_seed: u64,
) -> Result<BlockageMask, AllocationError> {
    if !(0.0..=1.0).contains(&ratio) {
        return Err(AllocationError::RatioOutOfRange { ratio });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    rng.set_stream(1);
    let open = (0..n_users * n_aps)
        .map(|_| rng.random::<f64>() >= ratio)
        .collect();
    Ok(BlockageMask {
        n_users,
        n_aps,
        open,
    })
}

/// One solved resource map.
#[derive(Clone, Debug, PartialEq)]
pub struct Assignment<F> {
    /// Serving AP per user.
    pub ap_of_user: Vec<usize>,
    /// Owning user per mirror; `None` leaves the mirror dark.
    pub user_of_mirror: Vec<Option<usize>>,
    /// Airtime share per user on its serving AP.
    pub time_fraction: Vec<F>,
}

/// Rates and utility of one assignment.
#[derive(Clone, Debug, PartialEq)]
pub struct UtilityReport<F> {
    /// Airtime-weighted spectral efficiency per user (bps/Hz).
    pub per_user_rate: Vec<F>,
    pub sum_rate: F,
    /// Sum of `ln(rate + epsilon)` over users.
    pub log_utility: F,
    /// Best receiver branch per user toward its serving AP.
    pub chosen_branch: Vec<usize>,
}

/// Equal airtime shares: each user gets `1/n` of its AP, `n` being that
/// AP's user count. Under the log utility the equal split is the exact
/// per-AP maximizer of the airtime allocation.
pub fn time_fractions<F: Real>(ap_of_user: &[usize]) -> Vec<F> {
    ap_of_user
        .iter()
        .map(|&l| {
            let n = ap_of_user.iter().filter(|&&other| other == l).count();
            F::one() / F::from_usize(n).unwrap()
        })
        .collect()
}

/// Mirror lists per user, from the inverse map.
fn mirrors_of_users(user_of_mirror: &[Option<usize>], n_users: usize) -> Vec<Vec<usize>> {
    let mut per_user = vec![Vec::new(); n_users];
    for (m, owner) in user_of_mirror.iter().enumerate() {
        if let Some(k) = owner {
            per_user[*k].push(m);
        }
    }
    per_user
}

/// Airtime-weighted rate and chosen branch of one user.
fn user_rate<F: Real>(
    tensor: &GainTensor<F>,
    mask: &BlockageMask,
    scenario: &ScenarioConfig<F>,
    user: usize,
    ap: usize,
    mirrors: &[usize],
    fraction: F,
) -> (usize, F) {
    let (branch, gain) = best_branch(tensor, user, ap, mirrors, mask.is_open(user, ap));
    let s = snr(
        gain,
        scenario.aps[ap].transmit_power_w,
        scenario.adr.responsivity_a_per_w,
        &scenario.noise,
    );
    (branch, fraction * spectral_efficiency(s))
}

/// Log utility of a candidate map with equal airtime splits.
fn utility_of<F: Real>(
    tensor: &GainTensor<F>,
    mask: &BlockageMask,
    scenario: &ScenarioConfig<F>,
    ap_of_user: &[usize],
    user_of_mirror: &[Option<usize>],
) -> F {
    let fractions = time_fractions::<F>(ap_of_user);
    let per_user = mirrors_of_users(user_of_mirror, ap_of_user.len());
    let eps = scenario.solver.utility_epsilon;
    let mut utility = F::zero();
    for (k, &l) in ap_of_user.iter().enumerate() {
        let (_, rate) = user_rate(tensor, mask, scenario, k, l, &per_user[k], fractions[k]);
        utility += (rate + eps).ln();
    }
    utility
}

/// Rates, sum rate, and log utility of a finished assignment.
pub fn evaluate<F: Real>(
    assignment: &Assignment<F>,
    tensor: &GainTensor<F>,
    mask: &BlockageMask,
    scenario: &ScenarioConfig<F>,
) -> UtilityReport<F> {
    let n_users = assignment.ap_of_user.len();
    let per_user = mirrors_of_users(&assignment.user_of_mirror, n_users);
    let eps = scenario.solver.utility_epsilon;
    let mut report = UtilityReport {
        per_user_rate: Vec::with_capacity(n_users),
        sum_rate: F::zero(),
        log_utility: F::zero(),
        chosen_branch: Vec::with_capacity(n_users),
    };
    for (k, &l) in assignment.ap_of_user.iter().enumerate() {
        let (branch, rate) = user_rate(
            tensor,
            mask,
            scenario,
            k,
            l,
            &per_user[k],
            assignment.time_fraction[k],
        );
        report.per_user_rate.push(rate);
        report.chosen_branch.push(branch);
        report.sum_rate += rate;
        report.log_utility += (rate + eps).ln();
    }
    report
}

fn guard_search_space(base: usize, digits: usize) -> Result<(), AllocationError> {
    let combinations = (base as f64).powi(digits as i32);
    if combinations > SEARCH_GUARD {
        return Err(AllocationError::SearchSpaceExceeded { combinations });
    }
    Ok(())
}

/// Advances `digits` (most-significant first) through base-`base`
/// counting; `false` once the space is exhausted.
fn next_map(digits: &mut [usize], base: usize) -> bool {
    for d in digits.iter_mut().rev() {
        *d += 1;
        if *d < base {
            return true;
        }
        *d = 0;
    }
    false
}

/// Stage one: the AP map maximizing log utility under equal splits with
/// every mirror unassigned. Enumerates all `L^K` maps in lexicographic
/// order; strict improvement keeps the lexicographically smallest
/// maximizer.
pub fn allocate_aps_exhaustive<F: Real>(
    tensor: &GainTensor<F>,
    mask: &BlockageMask,
    scenario: &ScenarioConfig<F>,
) -> Result<Vec<usize>, AllocationError> {
    let n_users = tensor.n_users();
    let n_aps = tensor.n_aps();
    guard_search_space(n_aps, n_users)?;
    // Mirrorless spectral efficiency per (user, AP), fixed across maps.
    let eps = scenario.solver.utility_epsilon;
    let se: Vec<Vec<F>> = (0..n_users)
        .map(|k| {
            (0..n_aps)
                .map(|l| user_rate(tensor, mask, scenario, k, l, &[], F::one()).1)
                .collect()
        })
        .collect();
    let mut map = vec![0usize; n_users];
    let mut best_map = map.clone();
    let mut best_utility = F::neg_infinity();
    let mut counts = vec![0usize; n_aps];
    loop {
        counts.iter_mut().for_each(|c| *c = 0);
        for &l in &map {
            counts[l] += 1;
        }
        let mut utility = F::zero();
        for (k, &l) in map.iter().enumerate() {
            utility += (se[k][l] / F::from_usize(counts[l]).unwrap() + eps).ln();
        }
        if utility > best_utility {
            best_utility = utility;
            best_map.copy_from_slice(&map);
        }
        if !next_map(&mut map, n_aps) {
            break;
        }
    }
    Ok(best_map)
}

/// Stage two, greedy: sweep mirrors in index order, moving each to the
/// user giving the strictly largest utility gain (ties to the smallest
/// user index); repeat sweeps until none moves. Each accepted move
/// strictly increases the utility, so the finite state space guarantees
/// a fixed point. Mirrors dark toward every user's serving AP stay
/// unassigned.
pub fn allocate_mirrors_greedy<F: Real>(
    tensor: &GainTensor<F>,
    mask: &BlockageMask,
    ap_of_user: &[usize],
    scenario: &ScenarioConfig<F>,
) -> Vec<Option<usize>> {
    let n_users = ap_of_user.len();
    let mut user_of_mirror: Vec<Option<usize>> = vec![None; tensor.n_mirrors()];
    if n_users == 0 || user_of_mirror.is_empty() {
        return user_of_mirror;
    }
    let mut current = utility_of(tensor, mask, scenario, ap_of_user, &user_of_mirror);
    loop {
        let mut moved = false;
        for m in 0..user_of_mirror.len() {
            let incumbent = user_of_mirror[m];
            let mut best = (incumbent, current);
            for k in 0..n_users {
                if incumbent == Some(k) {
                    continue;
                }
                user_of_mirror[m] = Some(k);
                let utility = utility_of(tensor, mask, scenario, ap_of_user, &user_of_mirror);
                if utility > best.1 {
                    best = (Some(k), utility);
                }
            }
            user_of_mirror[m] = best.0;
            if best.0 != incumbent {
                current = best.1;
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }
    user_of_mirror
}

/// Stage two, exhaustive: the utility-maximizing mirror map over all
/// `(K+1)^M` possibilities (digit 0 leaves a mirror unassigned), in
/// lexicographic order with "unassigned" ordered before user 0. Test
/// oracle for the greedy stage; guarded against large spaces.
pub fn allocate_mirrors_exhaustive<F: Real>(
    tensor: &GainTensor<F>,
    mask: &BlockageMask,
    ap_of_user: &[usize],
    scenario: &ScenarioConfig<F>,
) -> Result<Vec<Option<usize>>, AllocationError> {
    let n_users = ap_of_user.len();
    let n_mirrors = tensor.n_mirrors();
    guard_search_space(n_users + 1, n_mirrors)?;
    let decode = |digit: usize| -> Option<usize> { digit.checked_sub(1) };
    let mut digits = vec![0usize; n_mirrors];
    let mut best_digits = digits.clone();
    let mut best_utility = F::neg_infinity();
    loop {
        let candidate: Vec<Option<usize>> = digits.iter().map(|&d| decode(d)).collect();
        let utility = utility_of(tensor, mask, scenario, ap_of_user, &candidate);
        if utility > best_utility {
            best_utility = utility;
            best_digits.copy_from_slice(&digits);
        }
        if !next_map(&mut digits, n_users + 1) {
            break;
        }
    }
    Ok(best_digits.iter().map(|&d| decode(d)).collect())
}

/// Two-stage solve on a prebuilt tensor: exhaustive AP stage, then the
/// configured mirror stage (`Auto` picks exhaustive when its space fits
/// the guard). Deterministic throughout.
pub fn solve_with_tensor<F: Real>(
    tensor: &GainTensor<F>,
    mask: &BlockageMask,
    scenario: &ScenarioConfig<F>,
) -> Result<(Assignment<F>, UtilityReport<F>), AllocationError> {
    assert_eq!(mask.n_users(), tensor.n_users(), "mask user dimension");
    assert_eq!(mask.n_aps(), tensor.n_aps(), "mask AP dimension");
    let ap_of_user = allocate_aps_exhaustive(tensor, mask, scenario)?;
    let user_of_mirror = match scenario.solver.mirror_stage {
        MirrorStage::Greedy => allocate_mirrors_greedy(tensor, mask, &ap_of_user, scenario),
        MirrorStage::Exhaustive => {
            allocate_mirrors_exhaustive(tensor, mask, &ap_of_user, scenario)?
        }
        MirrorStage::Auto => {
            if guard_search_space(tensor.n_users() + 1, tensor.n_mirrors()).is_ok() {
                allocate_mirrors_exhaustive(tensor, mask, &ap_of_user, scenario)?
            } else {
                allocate_mirrors_greedy(tensor, mask, &ap_of_user, scenario)
            }
        }
    };
    let time_fraction = time_fractions::<F>(&ap_of_user);
    let assignment = Assignment {
        ap_of_user,
        user_of_mirror,
        time_fraction,
    };
    let report = evaluate(&assignment, tensor, mask, scenario);
    Ok((assignment, report))
}

/// Builds the scenario's gain tensor and solves on it.
pub fn solve<F: Real>(
    scenario: &ScenarioConfig<F>,
    mask: &BlockageMask,
) -> Result<(Assignment<F>, UtilityReport<F>), AllocationError> {
    let tensor = build_gain_tensor(scenario)?;
    solve_with_tensor(&tensor, mask, scenario)
}
