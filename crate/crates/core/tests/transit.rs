mod support;

use navi_core::transit_nav::*;
use proptest::prelude::*;

const FIXTURE: &[u8] = include_bytes!("fixtures/three_step.json");

fn coord() -> impl Strategy<Value = GeoCoord> {
    (-89.0..89.0f64, -179.0..179.0f64).prop_map(|(lat, lon)| GeoCoord::new(lat, lon).unwrap())
}

/// Local flat-earth distance; good to well under a meter over a few km.
fn flat_distance(a: GeoCoord, b: GeoCoord) -> f64 {
    let k = EARTH_RADIUS_M * std::f64::consts::PI / 180.0;
    let dy = (b.lat - a.lat) * k;
    let dx = (b.lon - a.lon) * k * ((a.lat + b.lat) / 2.0).to_radians().cos();
    dx.hypot(dy)
}

#[test]
fn scripted_track_triggers_each_waypoint_once_in_order() {
    let plan = parse_plan(FIXTURE).unwrap();
    assert_eq!(plan.steps.len(), 3);
    let track = support::scripted_track(&plan, 4.0);
    let mut state = TriggerState::new(plan.clone(), DEFAULT_TRIGGER_RADIUS_M);
    let mut emitted = Vec::new();
    for (i, fix) in track.iter().enumerate() {
        if let Some((text, next)) = next_instruction(&state, *fix) {
            assert_eq!(next.current_step, state.current_step + 1);
            // fired near the right waypoint
            assert!(flat_distance(*fix, plan.steps[state.current_step].waypoint) <= DEFAULT_TRIGGER_RADIUS_M + 0.5);
            emitted.push((i, state.current_step, text));
            state = next;
        }
    }
    assert_eq!(emitted.iter().map(|e| e.1).collect::<Vec<_>>(), vec![0, 1, 2]);
    assert!(emitted.windows(2).all(|w| w[0].0 < w[1].0));
    assert!(state.is_finished());
    assert!(emitted[0].2.starts_with("Walk north-east, 180 meters, 3 minutes."), "{}", emitted[0].2);
    assert!(emitted[1].2.starts_with("Take line 7 from Central at 10:15, 1900 meters, 7 minutes."), "{}", emitted[1].2);
    assert!(emitted[2].2.contains("then walk north-east, 210 meters, 3 minutes."), "{}", emitted[2].2);
}

#[test]
fn gps_feed_drives_the_trigger() {
    let plan = parse_plan(FIXTURE).unwrap();
    let feed: String = support::scripted_track(&plan, 4.0)
        .iter()
        .enumerate()
        .map(|(i, c)| format!("{:.7},{:.7},{}\n", c.lat, c.lon, i))
        .collect();
    let fixes = parse_gps_feed(&feed).unwrap();
    let mut state = TriggerState::new(plan, DEFAULT_TRIGGER_RADIUS_M);
    let mut count = 0;
    for f in fixes {
        if let Some((_, next)) = next_instruction(&state, f.coord) {
            state = next;
            count += 1;
        }
    }
    assert_eq!(count, 3);
}

#[test]
fn bad_feed_line_is_reported() {
    match parse_gps_feed("47.1,8.5,0\n47.1;8.5;1\n") {
        Err(TransitError::Feed { line, .. }) => assert_eq!(line, 2),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn fixture_provider_reads_by_destination() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    let provider = FixtureProvider { dir };
    let plan = provider.directions(GeoCoord::new(47.372, 8.543).unwrap(), "three_step").unwrap();
    assert_eq!(plan, parse_plan(FIXTURE).unwrap());
    assert!(provider.directions(GeoCoord::new(0.0, 0.0).unwrap(), "nowhere").is_err());
}

#[test]
fn fixture_round_trips() {
    let plan = parse_plan(FIXTURE).unwrap();
    assert_eq!(parse_plan(&serialize_plan(&plan)).unwrap(), plan);
}

fn step() -> impl Strategy<Value = Step> {
    (
        any::<bool>(),
        "[a-zA-Z ,.]{0,30}",
        coord(),
        coord(),
        0.0..50_000.0f64,
        0u64..20_000,
        prop::option::of(("[A-Z0-9]{1,3}", "[a-zA-Z ]{1,12}", "[0-2][0-9]:[0-5][0-9]")),
    )
        .prop_map(|(walk, instruction, waypoint, end, distance_m, duration_s, transit)| {
            let transit = if walk { None } else { transit };
            Step {
                mode: if transit.is_some() { TravelMode::Transit } else { TravelMode::Walk },
                instruction,
                line: transit.as_ref().map(|t| t.0.clone()),
                departure_stop: transit.as_ref().map(|t| t.1.clone()),
                departure_time: transit.as_ref().map(|t| t.2.clone()),
                waypoint,
                end,
                distance_m,
                duration_s,
            }
        })
}

proptest! {
    #[test]
    fn parse_serialize_round_trip(steps in prop::collection::vec(step(), 1..6)) {
        let plan = TransitPlan { steps };
        prop_assert_eq!(parse_plan(&serialize_plan(&plan)).unwrap(), plan);
    }

    #[test]
    fn haversine_is_a_metric(a in coord(), b in coord(), c in coord()) {
        let (ab, bc, ac) = (haversine(a, b), haversine(b, c), haversine(a, c));
        prop_assert!(ab >= 0.0);
        prop_assert!((ab - haversine(b, a)).abs() <= 1e-6 * ab.max(1.0));
        prop_assert!(ac <= (ab + bc) * (1.0 + 1e-6) + 1e-6);
    }

    #[test]
    fn progress_is_monotonic(fixes in prop::collection::vec(coord(), 0..50), near in prop::collection::vec(any::<bool>(), 50)) {
        let plan = parse_plan(FIXTURE).unwrap();
        let mut state = TriggerState::new(plan.clone(), DEFAULT_TRIGGER_RADIUS_M);
        let mut emitted = vec![0; plan.steps.len()];
        for (fix, snap) in fixes.iter().zip(near) {
            // mix random fixes with ones sitting on the current waypoint
            let fix = match (snap, plan.steps.get(state.current_step)) {
                (true, Some(s)) => s.waypoint,
                _ => *fix,
            };
            match next_instruction(&state, fix) {
                Some((_, next)) => {
                    prop_assert_eq!(next.current_step, state.current_step + 1);
                    emitted[state.current_step] += 1;
                    state = next;
                }
                None => {}
            }
        }
        prop_assert!(emitted.iter().all(|&n| n <= 1));
        let done = TriggerState { current_step: 3, ..state };
        let after_end = next_instruction(&done, plan.steps[0].waypoint);
        prop_assert!(after_end.is_none());
    }
}

#[test]
fn far_fix_triggers_nothing() {
    let plan = parse_plan(FIXTURE).unwrap();
    let state = TriggerState::new(plan.clone(), 15.0);
    let w = plan.steps[0].waypoint;
    // ~500 m north
    let far = GeoCoord::new(w.lat + 500.0 / 111_195.0, w.lon).unwrap();
    assert!(next_instruction(&state, far).is_none());
    let (_, next) = next_instruction(&state, w).unwrap();
    assert_eq!(next.current_step, 1);
}
