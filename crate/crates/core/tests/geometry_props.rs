use drive_audit_core::geometry::{box_distance, boxes_intersect, OrientedBox, PathParam, Vec2};
use proptest::prelude::*;

fn arb_box() -> impl Strategy<Value = OrientedBox> {
    (-20.0..20.0f64, -20.0..20.0f64, -3.2..3.2f64, 0.2..6.0f64, 0.2..3.0f64)
        .prop_map(|(x, y, h, l, w)| OrientedBox::new(Vec2::new(x, y), h, l, w))
}

proptest! {
    #[test]
    fn distance_is_symmetric(a in arb_box(), b in arb_box()) {
        prop_assert_eq!(box_distance(&a, &b), box_distance(&b, &a));
    }

    #[test]
    fn zero_distance_iff_intersecting(a in arb_box(), b in arb_box()) {
        prop_assert_eq!(box_distance(&a, &b) == 0.0, boxes_intersect(&a, &b));
    }

    #[test]
    fn distance_survives_common_translation(a in arb_box(), b in arb_box(), dx in -1e3..1e3f64, dy in -1e3..1e3f64) {
        let t = Vec2::new(dx, dy);
        let shift = |o: &OrientedBox| OrientedBox::new(o.center + t, o.heading, o.length, o.width);
        let d0 = box_distance(&a, &b);
        let d1 = box_distance(&shift(&a), &shift(&b));
        prop_assert!((d0 - d1).abs() <= 1e-9, "{d0} vs {d1}");
    }

    #[test]
    fn arclength_hits_vertices_exactly(steps in prop::collection::vec((0.05..5.0f64, -3.2..3.2f64), 1..20)) {
        let mut pts = vec![Vec2::ZERO];
        for (len, h) in steps {
            let last = *pts.last().unwrap();
            pts.push(last + Vec2::from_heading(h) * len);
        }
        let p = PathParam::new(pts.clone()).unwrap();
        for (i, &s) in p.cumulative().iter().enumerate() {
            let (q, _) = p.point_at_arclength(s).unwrap();
            prop_assert_eq!(q, pts[i]);
        }
    }
}
