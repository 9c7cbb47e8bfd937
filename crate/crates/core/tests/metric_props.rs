use drive_audit_core::geometry::{box_distance, normalize_angle, Vec2};
use drive_audit_core::metrics::{
    compute_acc, compute_all, compute_dtx, compute_pet, compute_slc, compute_ttc, compute_vel,
    derive_conflict_area, MetricConfig, MetricId, MetricSample, TtcConfig,
};
use drive_audit_core::scenario::{AgentCategory, AgentState, AgentTrack, Scenario};
use drive_audit_core::synthgen::{generate, CaseParams, SynthCase};
use proptest::prelude::*;

const DT: f64 = 0.1;
const FRAMES: usize = 110;

fn track(id: &str, category: AgentCategory, pos: impl Fn(f64) -> Vec2, heading: f64) -> AgentTrack {
    AgentTrack {
        agent_id: id.into(),
        category,
        length: 4.0,
        width: 2.0,
        states: (0..FRAMES)
            .map(|f| AgentState {
                position: pos(f as f64 * DT),
                heading,
                speed: None,
            })
            .collect(),
        valid: vec![true; FRAMES],
    }
}

fn quadratic(v: f64, a: f64) -> impl Fn(f64) -> Vec2 {
    move |t| Vec2::new(v * t + 0.5 * a * t * t, 0.0)
}

fn values(s: &[MetricSample]) -> Vec<Option<f64>> {
    s.iter().map(MetricSample::value).collect()
}

fn ttc_or_inf(s: MetricSample) -> f64 {
    s.value().unwrap_or(f64::INFINITY)
}

fn synth(params: CaseParams) -> Scenario {
    generate(&SynthCase {
        scenario_id: "p".into(),
        params,
        background: 3,
        noise_sigma: 0.0,
        seed: 9,
    })
    .unwrap()
    .scenario
}

fn rigid(s: &Scenario, theta: f64, shift: Vec2) -> Scenario {
    let mut out = s.clone();
    let tf = |p: Vec2| p.rotate(theta) + shift;
    for a in &mut out.agents {
        for st in &mut a.states {
            st.position = tf(st.position);
            st.heading = normalize_angle(st.heading + theta);
        }
    }
    for l in &mut out.map.lanes {
        l.centerline.iter_mut().for_each(|p| *p = tf(*p));
    }
    for b in &mut out.map.boundaries {
        b.polyline.iter_mut().for_each(|p| *p = tf(*p));
    }
    for c in &mut out.map.crosswalks {
        c.polygon.iter_mut().for_each(|p| *p = tf(*p));
    }
    out
}

fn pick(samples: &[MetricSample], metrics: &[MetricId]) -> Vec<MetricSample> {
    samples.iter().filter(|s| metrics.contains(&s.metric)).cloned().collect()
}

fn reversed(t: &AgentTrack) -> AgentTrack {
    let mut r = t.clone();
    r.states.reverse();
    r.valid.reverse();
    r
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn forward_difference_midpoint_identity(v in 0.0..20.0f64, a in -6.0..6.0f64, h in -3.0..3.0f64) {
        prop_assume!(v + a * (FRAMES as f64 * DT) >= 0.0);
        let t = track("ego", AgentCategory::Ego, |t| quadratic(v, a)(t).rotate(h), h);
        let vel = compute_vel(&t, DT);
        let acc = compute_acc(&vel, DT);
        for f in 0..FRAMES - 1 {
            let expect = v + a * (f as f64 * DT + DT / 2.0);
            prop_assert!((vel[f].value - expect).abs() <= 1e-9, "vel[{f}] = {} vs {expect}", vel[f].value);
        }
        for s in &acc {
            prop_assert!(s.defined && (s.value - a).abs() <= 1e-9, "acc {} vs {a}", s.value);
        }
    }

    #[test]
    fn speed_nonnegative_and_acc_flips_under_reversal(steps in prop::collection::vec((-2.0..2.0f64, -2.0..2.0f64), FRAMES)) {
        let mut p = Vec2::ZERO;
        let pts: Vec<Vec2> = steps.iter().map(|&(dx, dy)| { p = p + Vec2::new(dx, dy); p }).collect();
        let t = track("x", AgentCategory::Vehicle, |tt| pts[(tt / DT).round() as usize], 0.0);
        let r = reversed(&t);
        let vel = compute_vel(&t, DT);
        prop_assert!(vel.iter().all(|s| !s.defined || s.value >= 0.0));
        let acc = compute_acc(&vel, DT);
        let acc_r = compute_acc(&compute_vel(&r, DT), DT);
        let n = FRAMES;
        // genuine second differences only; the tail frames carry values
        for k in 0..n - 2 {
            let (x, y) = (acc_r[k].value, acc[n - 3 - k].value);
            prop_assert!((x + y).abs() <= 1e-9 * (1.0 + x.abs()), "{x} vs {y}");
        }
    }

    #[test]
    fn larger_gap_never_shortens_ttc(
        v in 0.0..20.0f64, a in -6.0..6.0f64, vl in 0.0..20.0f64, al in -6.0..6.0f64,
        gap in 2.0..60.0f64, extra in 0.0..20.0f64,
    ) {
        let cfg = TtcConfig::default();
        let ego = track("ego", AgentCategory::Ego, |t| Vec2::new(drive_audit_core::metrics::displacement(v, a, t), 0.0), 0.0);
        let lead = |g: f64| track("lead", AgentCategory::Vehicle, move |t| Vec2::new(4.0 + g + drive_audit_core::metrics::displacement(vl, al, t), 0.0), 0.0);
        let near = ttc_or_inf(compute_ttc(&ego, &lead(gap), 0, DT, &cfg));
        let far = ttc_or_inf(compute_ttc(&ego, &lead(gap + extra), 0, DT, &cfg));
        prop_assert!(far >= near, "gap {gap}: {near}, gap {}: {far}", gap + extra);
    }

    #[test]
    fn dtx_components_recompose_distance(
        x in -8.0..8.0f64, y in -8.0..8.0f64, hv in -3.2..3.2f64, hb in -3.2..3.2f64, ped in any::<bool>(),
    ) {
        let veh = track("v", AgentCategory::Vehicle, |_| Vec2::ZERO, hv);
        let mut tgt = track("t", AgentCategory::Bicycle, move |_| Vec2::new(x, y), hb);
        tgt.length = 1.8;
        tgt.width = 0.6;
        if ped {
            tgt.category = AgentCategory::Pedestrian;
            tgt.length = 0.0;
            tgt.width = 0.0;
        }
        let (lat, lon) = compute_dtx(&veh, &tgt, 0).unwrap();
        let d = box_distance(&veh.footprint(0), &tgt.footprint(0));
        prop_assert_eq!(lat.defined, d <= 5.0);
        if lat.defined {
            let sq = lat.value * lat.value + lon.value * lon.value;
            prop_assert!(sq >= d * d - 1e-6);
            prop_assert!(sq <= (d + 0.005) * (d + 0.005));
        }
    }

    #[test]
    fn rigid_motion_leaves_distances_unchanged(
        gap in 2.0..40.0f64, v in 3.0..12.0f64, clearance in 0.5..2.5f64,
        theta in -3.2..3.2f64, sx in -500.0..500.0f64, sy in -500.0..500.0f64,
    ) {
        let cases = [
            CaseParams::CarFollowing { gap, v_ego: v, a_ego: 0.0, v_lead: 2.0, a_lead: 0.0 },
            CaseParams::CyclistOvertake { clearance, v_ego: v + 2.0, v_bike: 3.0, lead: gap / 2.0 },
        ];
        let kept = [MetricId::Gap, MetricId::Vel, MetricId::Acc, MetricId::Ladtb, MetricId::Lodtb];
        let cfg = MetricConfig::default();
        for params in cases {
            let s = synth(params);
            let base = pick(&compute_all(&s, &cfg).samples, &kept);
            let moved = pick(&compute_all(&rigid(&s, theta, Vec2::new(sx, sy)), &cfg).samples, &kept);
            prop_assert_eq!(base.len(), moved.len());
            for (p, q) in base.iter().zip(&moved) {
                prop_assert_eq!((p.metric, &p.subject, &p.other, p.frame), (q.metric, &q.subject, &q.other, q.frame));
                prop_assert!((p.value - q.value).abs() <= 1e-6, "{:?}: {} vs {}", p.metric, p.value, q.value);
            }
        }
    }

    #[test]
    fn pet_is_reversal_symmetric(da in 5.0..60.0f64, va in 2.0..15.0f64, db in 5.0..60.0f64, vb in 2.0..15.0f64) {
        let a = track("a", AgentCategory::Vehicle, move |t| Vec2::new(-da + va * t, 0.0), 0.0);
        let b = track("b", AgentCategory::Vehicle, move |t| Vec2::new(0.0, -db + vb * t), std::f64::consts::FRAC_PI_2);
        let Some(area) = derive_conflict_area(&a, &b) else { return Ok(()); };
        let fwd = compute_pet(&b, &a, &area.polygon, DT).unwrap();
        let rev = compute_pet(&reversed(&a), &reversed(&b), &area.polygon, DT).unwrap();
        if fwd.defined && rev.defined {
            prop_assert!((fwd.value - rev.value).abs() <= 1e-12);
        }
    }

    #[test]
    fn slc_zero_inside_solid_lines(width in 1.0..2.5f64, line_y in 1.0..3.0f64, frac in 0.0..1.0f64, v in 0.0..13.0f64) {
        // left edge anywhere between the lane centre and the solid line
        let offset = (line_y - width / 2.0) * frac;
        prop_assume!(offset >= -1.0 && offset + width / 2.0 <= line_y);
        let offset = (offset * 100.0).floor() / 100.0;
        let s = synth(CaseParams::SolidLineDrift { offset, width: (width * 100.0).floor() / 100.0, line_y: (line_y * 100.0).ceil() / 100.0, v: (v * 100.0).round() / 100.0 });
        let ego = s.ego().unwrap();
        for f in [0, 50, FRAMES - 1] {
            prop_assert_eq!(compute_slc(ego, &s.map, f).value(), Some(0.0));
        }
    }
}

#[test]
fn compute_all_is_deterministic() {
    let s = synth(CaseParams::CrossingPaths { d_ego: 20.0, v_ego: 8.0, d_other: 30.0, v_other: 6.0 });
    let cfg = MetricConfig::default();
    let a = compute_all(&s, &cfg);
    let b = compute_all(&s, &cfg);
    assert_eq!(format!("{:?}", a.samples), format!("{:?}", b.samples));
    assert_eq!(values(&a.samples), values(&b.samples));
}
