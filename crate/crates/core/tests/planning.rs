use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trajopt_core::*;

fn swarm(seed: u64) -> SwarmConfig {
    SwarmConfig {
        population: 20,
        max_iterations: 40,
        seed,
        workers: Some(1),
        ..SwarmConfig::default()
    }
}

fn random_problem(rng: &mut ChaCha8Rng, joints: usize) -> PlanningProblem {
    let specs = (0..joints)
        .map(|_| {
            let mut q = [0.0; 4];
            q[0] = rng.random_range(-2.0..2.0);
            for k in 1..4 {
                q[k] = q[k - 1] + rng.random_range(-1.0..1.0);
            }
            let limits = KinematicLimits::new(rng.random_range(0.5..3.0), rng.random_range(1.0..6.0)).unwrap();
            JointSpec::rest_to_rest(q, limits)
        })
        .collect();
    PlanningProblem::new(specs, Bounds::uniform(3, 0.1, 6.0).unwrap(), SyncMode::Shared).unwrap()
}

#[test]
fn planned_trajectories_respect_the_limits() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for case in 0..10 {
        let problem = random_problem(&mut rng, 3);
        let outcome = plan(&problem, &swarm(case)).unwrap();
        for (traj, joint) in outcome.trajectory.per_joint.iter().zip(problem.joints()) {
            let ext = traj.derivative_extrema();
            assert!(ext.max_abs_velocity <= joint.limits.v_max() + 1e-9, "case {case}");
            assert!(ext.max_abs_acceleration <= joint.limits.a_max() + 1e-9, "case {case}");
        }
    }
}

#[test]
fn sampled_output_has_bounded_differences() {
    let problem = reference_instance();
    let outcome = plan(&problem, &swarm(1)).unwrap();
    let dt = 0.01;
    let samples = sample(&outcome.trajectory, dt).unwrap();
    let total = outcome.trajectory.total_duration();
    for (series, joint) in samples.iter().zip(problem.joints()) {
        assert_eq!(series.len(), (total / dt).ceil() as usize + 1);
        assert_eq!(series.last().unwrap().t, total);
        for w in series.windows(2) {
            let h = w[1].t - w[0].t;
            assert!(h > 0.0 && h <= dt * (1.0 + 1e-9));
            assert!((w[1].q - w[0].q).abs() <= joint.limits.v_max() * h * 1.01);
            assert!((w[1].v - w[0].v).abs() <= joint.limits.a_max() * h * 1.01);
        }
    }
}

#[test]
fn shared_times_are_no_worse_than_per_joint_maximum() {
    // Same shape at three amplitudes with proportional limits, so every joint
    // has the same feasible set of segment times.
    let base = [0.0, 0.5, 1.1, 1.4];
    let joints = [1.0, 0.7, 0.4]
        .iter()
        .map(|&s| {
            let limits = KinematicLimits::new(1.5 * s, 3.0 * s).unwrap();
            JointSpec::rest_to_rest(base.map(|q| q * s), limits)
        })
        .collect();
    let problem =
        PlanningProblem::new(joints, Bounds::uniform(3, 0.1, 6.0).unwrap(), SyncMode::Shared).unwrap();
    let cfg = SwarmConfig { seed: 2, workers: Some(1), ..SwarmConfig::default() };
    let shared = plan(&problem, &cfg).unwrap();
    let per_joint = plan(&problem.clone().with_sync_mode(SyncMode::PerJointMax), &cfg).unwrap();
    assert_eq!(per_joint.histories.len(), 3);
    let (s, m) = (shared.trajectory.total_duration(), per_joint.trajectory.total_duration());
    assert!(s <= m * 1.02, "shared {s} per-joint {m}");
}

#[test]
fn stationary_joints_go_to_the_time_floor() {
    let limits = KinematicLimits::new(1.0, 1.0).unwrap();
    let problem = PlanningProblem::new(
        vec![
            JointSpec::rest_to_rest([0.2; 4], limits),
            JointSpec::rest_to_rest([-1.0; 4], limits),
        ],
        Bounds::uniform(3, 0.1, 6.0).unwrap(),
        SyncMode::Shared,
    )
    .unwrap();
    for seed in 0..3 {
        let total = plan(&problem, &swarm(seed)).unwrap().trajectory.total_duration();
        assert!(total <= 0.3 * 1.02, "seed {seed}: {total}");
    }
}

#[test]
fn infeasible_bounds_are_reported() {
    let limits = KinematicLimits::new(0.1, 0.1).unwrap();
    let problem = PlanningProblem::new(
        vec![JointSpec::rest_to_rest([0.0, 5.0, 10.0, 20.0], limits)],
        Bounds::uniform(3, 0.1, 0.5).unwrap(),
        SyncMode::Shared,
    )
    .unwrap();
    assert!(matches!(plan(&problem, &swarm(0)), Err(Error::NoFeasibleSolution)));
}
