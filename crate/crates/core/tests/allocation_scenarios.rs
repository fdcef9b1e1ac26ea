//! End-to-end allocation behavior on compiled scenes.

use owcsim_core::allocation::{evaluate, solve, solve_with_tensor, BlockageMask};
use owcsim_core::channel::CompiledScene;
use owcsim_core::scene::{default_scenario, MirrorStage, UserPlacement};
use owcsim_core::Vec3f;

/// Small scene: two users near the front wall, 1x2 mirrors per array so
/// the exhaustive mirror stage stays cheap.
fn small_scenario() -> owcsim_core::ScenarioConfigf {
    let mut s = default_scenario::<f64>();
    s.users = UserPlacement::Explicit(vec![
        Vec3f::new(1.8, 1.0, 1.0),
        Vec3f::new(3.2, 4.0, 1.0),
    ]);
    for arr in &mut s.mirror_arrays {
        arr.rows = 1;
        arr.cols = 2;
    }
    s.solver.mirror_stage = MirrorStage::Exhaustive;
    s
}

#[test]
fn extra_array_never_reduces_utility() {
    let s = small_scenario();
    let scene = CompiledScene::compile(&s).unwrap();
    let tensor = scene.gain_tensor();
    let mask = BlockageMask::all_open(tensor.n_users(), tensor.n_aps());

    let (_, full) = solve_with_tensor(&tensor, &mask, &s).unwrap();
    let (_, one) = solve_with_tensor(&tensor.with_single_array(0), &mask, &s).unwrap();
    let (_, none) = solve_with_tensor(&tensor.without_mirrors(), &mask, &s).unwrap();

    // Leaving the second array (or all mirrors) unassigned reproduces the
    // smaller search space, so utility is monotone in the option set.
    assert!(full.log_utility >= one.log_utility - 1e-12);
    assert!(one.log_utility >= none.log_utility - 1e-12);
}

#[test]
fn solve_report_matches_reevaluation() {
    let s = default_scenario::<f64>();
    let mask = BlockageMask::all_open(4, 4);
    let (assignment, report) = solve(&s, &mask).unwrap();

    let scene = CompiledScene::compile(&s).unwrap();
    let tensor = scene.gain_tensor();
    let again = evaluate(&assignment, &tensor, &mask, &s);
    assert_eq!(report.sum_rate, again.sum_rate);
    assert_eq!(report.log_utility, again.log_utility);
    assert_eq!(report.per_user_rate, again.per_user_rate);
}
