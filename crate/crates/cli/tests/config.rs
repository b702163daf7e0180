use std::path::PathBuf;

use proptest::prelude::*;
use tail_lab::evolve::{InitialData, Profile};
use tail_lab::geometry::Trajectory;
use tail_lab::spectrum::Problem;
use tail_lab_cli::config::{GridOverrides, RunConfig, TrajectoryConfig, WindowOverrides, SCHEMA_VERSION};

fn trajectory() -> impl Strategy<Value = Trajectory> {
    prop_oneof![(0.1..10.0f64).prop_map(Trajectory::FixedR), (0.01..0.99f64).prop_map(Trajectory::Ray)]
}

fn config() -> impl Strategy<Value = RunConfig> {
    (
        3u32..7,
        -0.2..5.0f64,
        prop::collection::btree_set(0i32..6, 1..4),
        1.0..500.0f64,
        prop::option::of(0.01..0.05f64),
        prop::collection::vec(trajectory(), 1..4),
        1e-3..1.0f64,
        prop::option::of((1.0..20.0f64, 0.5..3.0f64)),
        prop::option::of(0.5..2.0f64),
    )
        .prop_map(|(n, parameter, modes, t_max, h, trajs, tolerance, bump, min_decades)| RunConfig {
            schema_version: SCHEMA_VERSION,
            problem: Problem::Wave,
            n,
            parameter,
            modes: modes.into_iter().collect(),
            grid: GridOverrides { h, dt: h.map(|h| 0.25 * h), t_max },
            initial_data: bump.map(|(center, width)| InitialData {
                profile: Profile::GaussianBump { center: center + 6.0 * width, width, amplitude: 1.0 },
                weights: [1.0, 0.5],
            }),
            trajectories: trajs
                .into_iter()
                .enumerate()
                .map(|(i, trajectory)| TrajectoryConfig { id: format!("t{i}"), trajectory })
                .collect(),
            output_dir: PathBuf::from("runs/x"),
            tolerance,
            sample_interval: 0.04,
            window: min_decades.map(|m| WindowOverrides { start: None, end: Some(t_max), min_decades: Some(m) }),
        })
}

proptest! {
    #[test]
    fn config_round_trips(c in config()) {
        let parsed = RunConfig::from_json(&c.to_json()).unwrap();
        prop_assert_eq!(parsed, c);
    }
}

fn base() -> RunConfig {
    RunConfig::from_json(include_str!("../../../configs/wave-bimodal.json")).unwrap()
}

fn rejected(c: RunConfig) -> String {
    RunConfig::from_json(&c.to_json()).unwrap_err().to_string()
}

#[test]
fn validation_names_the_offending_field() {
    let mut c = base();
    c.grid.dt = Some(0.5);
    assert!(rejected(c).contains("field `grid.dt`"));

    let mut c = base();
    c.schema_version = 7;
    assert!(rejected(c).contains("field `schema_version`"));

    let mut c = base();
    c.parameter = -1.0;
    assert!(rejected(c).contains("field `modes[0]`"));

    let mut c = base();
    c.trajectories[1].trajectory = Trajectory::Ray(1.5);
    assert!(rejected(c).contains("field `trajectories[1].trajectory`"));

    let mut c = base();
    c.trajectories[1].id = c.trajectories[0].id.clone();
    assert!(rejected(c).contains("duplicate id"));

    let mut c = base();
    c.problem = Problem::Dirac;
    c.modes = vec![0];
    assert!(rejected(c).contains("field `modes[0]`"));

    assert!(RunConfig::from_json("{\"schema_version\": 1, \"bogus\": 2}").is_err());
}

#[test]
fn shipped_configs_are_valid() {
    for text in [
        include_str!("../../../configs/wave-bimodal.json"),
        include_str!("../../../configs/wave-exceptional.json"),
        include_str!("../../../configs/wave-negative.json"),
        include_str!("../../../configs/dirac-coulomb.json"),
    ] {
        RunConfig::from_json(text).unwrap();
    }
}
