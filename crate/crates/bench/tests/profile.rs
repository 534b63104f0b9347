use hfnewton_bench::profile::{
    betas_grid, performance_profile, read_times_tsv, subsample, taus_grid, write_times_tsv, TimesFile, FAILURE_TIME,
};
use proptest::prelude::*;

#[test]
fn grids_have_fifty_evenly_spaced_points() {
    let betas = betas_grid();
    assert_eq!(betas.len(), 50);
    assert!((betas[0] - 0.01).abs() < 1e-15);
    assert!((betas[1] - 0.02).abs() < 1e-12);
    assert!((betas[49] - 0.5).abs() < 1e-12);
    let taus = taus_grid();
    assert_eq!(taus.len(), 50);
    assert!((taus[7] - 1.571429).abs() < 1e-6);
    assert!((taus[49] - 5.0).abs() < 1e-12);
}

#[test]
fn two_solver_example_reproduces_exactly() {
    let t = performance_profile(
        vec!["A".into(), "B".into()],
        vec!["p1".into(), "p2".into()],
        vec![vec![1.0, 2.0], vec![2.0, 1.0]],
        &[1.0, 2.0],
    )
    .unwrap();
    assert_eq!(t.ratios, vec![vec![1.0, 2.0], vec![2.0, 1.0]]);
    assert_eq!(t.curves, vec![vec![0.5, 1.0], vec![0.5, 1.0]]);
}

#[test]
fn failures_never_count_as_solved() {
    let t = performance_profile(
        vec!["A".into(), "B".into()],
        vec!["p1".into(), "p2".into()],
        vec![vec![1.0, FAILURE_TIME], vec![3.0, 1.0]],
        &taus_grid(),
    )
    .unwrap();
    assert_eq!(*t.curves[1].last().unwrap(), 0.5);
    assert_eq!(*t.curves[0].last().unwrap(), 1.0);
}

#[test]
fn malformed_tables_are_rejected() {
    let names = vec!["A".to_string(), "B".to_string()];
    assert!(performance_profile(names.clone(), vec!["p".into()], vec![vec![1.0]], &[1.0]).is_err());
    assert!(performance_profile(names.clone(), vec!["p".into()], vec![vec![1.0, 0.0]], &[1.0]).is_err());
    assert!(performance_profile(names, vec![], vec![], &[1.0]).is_err());
}

#[test]
fn times_table_round_trips() {
    let t = TimesFile {
        solvers: vec!["adn-fd".into(), "cnm-fd".into()],
        problems: vec!["beta00".into(), "beta01".into()],
        times: vec![vec![0.25, 1.5], vec![FAILURE_TIME, 0.125]],
    };
    let mut buf = Vec::new();
    write_times_tsv(&t, &mut buf).unwrap();
    let back = read_times_tsv(buf.as_slice()).unwrap();
    assert_eq!(back.solvers, t.solvers);
    assert_eq!(back.problems, t.problems);
    assert_eq!(back.times, t.times);
}

#[test]
fn subsample_spans_the_grid() {
    let g = betas_grid();
    let s = subsample(&g, 5);
    assert_eq!(s.len(), 5);
    assert_eq!(s[0], g[0]);
    assert_eq!(s[4], g[49]);
    assert_eq!(subsample(&g, 80).len(), 50);
}

proptest! {
    #[test]
    fn profile_invariants_hold(
        times in prop::collection::vec(prop::collection::vec(1e-3f64..1e3, 3), 1..30),
        fail in prop::collection::vec((0usize..30, 0usize..3), 0..10),
    ) {
        let mut times = times;
        for (p, s) in fail {
            if p < times.len() && times[p].iter().filter(|&&v| v == FAILURE_TIME).count() < 2 {
                times[p][s] = FAILURE_TIME;
            }
        }
        let problems = (0..times.len()).map(|p| format!("p{p}")).collect();
        let t = performance_profile(vec!["a".into(), "b".into(), "c".into()], problems, times, &taus_grid()).unwrap();
        prop_assert!(t.check_invariants().is_empty(), "{:?}", t.check_invariants());
        for curve in &t.curves {
            prop_assert!(curve.windows(2).all(|w| w[0] <= w[1]));
        }
        let at_one: f64 = (0..3).map(|s| t.fraction_within(s, 1.0)).sum();
        prop_assert!(at_one >= 1.0 - 1e-12);
    }
}
