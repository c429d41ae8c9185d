use proptest::prelude::*;
use slopewalk::control::RobotModel;
use slopewalk::gait::GaitSchedule;
use slopewalk::sim::{run_walk, SimError, SimLog, SimWorld, CSV_HEADER};

fn stand() -> GaitSchedule<f64> {
    GaitSchedule {
        duty_factor: 1.0,
        ..GaitSchedule::static_walk()
    }
}

fn walk(world: &SimWorld<f64>, schedule: &GaitSchedule<f64>, v: f64, duration: f64) -> SimLog<f64> {
    run_walk(world, &RobotModel::default(), schedule, v, duration, 7).unwrap()
}

#[test]
fn flat_stand_settles_at_hip_height() {
    let log = walk(&SimWorld::default(), &stand(), 0.0, 5.0);
    assert!(log.fall_time.is_none());
    assert!(
        (log.final_height() - 0.38).abs() <= 0.01,
        "height {}",
        log.final_height()
    );
    assert_eq!(log.total_slip(), 0.0);
    assert_eq!(log.min_contacts(), 4);
}

#[test]
fn stepping_in_place_does_not_slip() {
    let log = walk(&SimWorld::default(), &GaitSchedule::static_walk(), 0.0, 5.0);
    assert!((log.final_height() - 0.38).abs() <= 0.01);
    assert!(log.total_slip() <= 1e-6);
    assert!(log.min_contacts() >= 3);
}

#[test]
fn fifteen_degree_static_walk_tracks_pitch() {
    let world = SimWorld::incline(15.0);
    let log = walk(&world, &GaitSchedule::static_walk(), 0.05, 7.5);
    assert!(log.fall_time.is_none());
    // the expected pitch is the incline itself when walking straight up
    assert!((log.expected_pitch.to_degrees() + 15.0).abs() < 1e-9);
    let err = log.max_pitch_error_after(0.0).to_degrees();
    assert!(err <= 3.0, "pitch error {err} deg");
    assert!(log.min_contacts() >= 3);
    assert!(log.distance > 0.2, "distance {}", log.distance);
    assert_eq!(log.counters.qp_violations, 0);
}

#[test]
fn commanded_forces_satisfy_the_qp_constraints() {
    let model = RobotModel::<f64>::default();
    let log = run_walk(
        &SimWorld::incline(15.0),
        &model,
        &GaitSchedule::static_walk(),
        0.05,
        2.5,
        3,
    )
    .unwrap();
    let mut checked = 0;
    for s in &log.samples {
        for (lambda, tau) in s.commanded.iter().zip(&s.torques) {
            let Some(f) = lambda else { continue };
            assert!(f.y >= model.f_min_normal - 1e-6, "normal {} at t={}", f.y, s.time);
            assert!(f.x.abs() <= model.mu * f.y + 1e-6, "cone {:?} at t={}", f, s.time);
            assert!(tau.x.abs() <= model.tau_max + 1e-6 && tau.y.abs() <= model.tau_max + 1e-6);
            checked += 1;
        }
    }
    assert!(checked > 3 * log.samples.len());
}

#[test]
fn sheared_soil_slips_more_than_fifteen_degrees() {
    let firm = walk(&SimWorld::incline(15.0), &GaitSchedule::static_walk(), 0.05, 7.5);
    let mut sheared = SimWorld::incline(25.0);
    sheared.ground_mu = 35f64.to_radians().tan() * 0.5;
    let loose = walk(&sheared, &GaitSchedule::static_walk(), 0.05, 7.5);
    assert!(
        loose.slip_per_cycle() > firm.slip_per_cycle(),
        "{} vs {}",
        loose.slip_per_cycle(),
        firm.slip_per_cycle()
    );
}

#[test]
fn flat_work_is_positive_and_bounded_per_meter() {
    let world = SimWorld::default();
    let schedule = GaitSchedule::static_walk_lateral();
    let slow = walk(&world, &schedule, 0.2, 2.0 * schedule.cycle_time);
    let fast = walk(&world, &schedule, 0.4, 2.0 * schedule.cycle_time);
    for log in [&slow, &fast] {
        assert!(log.fall_time.is_none());
        assert!(log.work() > 0.0 && log.work().is_finite());
        assert!(log.distance > 0.1);
    }
    let per_m = |l: &SimLog<f64>| l.work() / l.distance;
    let ratio = per_m(&fast) / per_m(&slow);
    assert!((0.5..=2.0).contains(&ratio), "work per meter ratio {ratio}");
}

#[test]
fn csv_has_header_and_one_row_per_tick() {
    let log = walk(&SimWorld::default(), &stand(), 0.0, 2.5);
    let mut buf = Vec::new();
    log.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    let columns = CSV_HEADER.split(',').count();
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), log.samples.len());
    assert!(rows.iter().all(|r| r.split(',').count() == columns));
}

#[test]
fn invalid_inputs_are_rejected() {
    let model = RobotModel::<f64>::default();
    let s = GaitSchedule::static_walk();
    let short = run_walk(&SimWorld::default(), &model, &s, 0.0, 1.0, 0);
    assert!(matches!(short, Err(SimError::Invalid(_))));
    let steep = run_walk(&SimWorld::incline(40.0), &model, &s, 0.0, 5.0, 0);
    assert!(matches!(steep, Err(SimError::Invalid(_))));
    let w = SimWorld {
        tick: 0.0,
        ..SimWorld::default()
    };
    assert!(run_walk(&w, &model, &s, 0.0, 5.0, 0).is_err());
}

#[test]
fn runs_are_deterministic_per_seed() {
    let world = SimWorld {
        contact_noise: 0.005,
        ..SimWorld::default()
    };
    let model = RobotModel::default();
    let s = GaitSchedule::static_walk();
    let a = run_walk(&world, &model, &s, 0.05, 2.5, 11).unwrap();
    let b = run_walk(&world, &model, &s, 0.05, 2.5, 11).unwrap();
    assert_eq!(a.samples, b.samples);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn time_is_monotone_and_work_never_decreases(incl in -20.0f64..20.0, v in 0.0f64..0.1) {
        let log = walk(&SimWorld::incline(incl), &GaitSchedule::static_walk(), v, 2.5);
        for w in log.samples.windows(2) {
            prop_assert!(w[1].time > w[0].time);
            prop_assert!(w[1].work >= w[0].work);
        }
    }
}
