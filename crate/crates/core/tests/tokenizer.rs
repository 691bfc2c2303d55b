use std::f64::consts::PI;

use proptest::prelude::*;

use tabletop::tokenizer::{ActionCodec, DimRange, BINS, LAYOUT};
use tabletop::world::{Action, Pose};

fn codec() -> ActionCodec {
    ActionCodec::default()
}

fn arb_action() -> impl Strategy<Value = Action> {
    (0.0f64..=1.0, 0.0f64..=0.5, -PI..=PI, 0.0f64..=1.0, 0.0f64..=0.5, -PI..=PI)
        .prop_map(|(a, b, c, d, e, f)| Action::new(Pose::new(a, b, c), Pose::new(d, e, f)))
}

/// Values on and right next to every bin edge, where rounding matters most.
fn edge_values(c: &ActionCodec, dim: usize) -> Vec<f64> {
    let r = c.range(dim);
    (0..=BINS)
        .flat_map(|i| {
            let e = r.lo + r.width() * f64::from(i) / f64::from(BINS);
            [e.next_down(), e, e.next_up()]
        })
        .filter(|v| (r.lo..=r.hi).contains(v))
        .collect()
}

#[test]
fn every_bin_edge_round_trips_within_half_a_bin() {
    let c = codec();
    for (dim, name) in LAYOUT.iter().enumerate() {
        for v in edge_values(&c, dim) {
            let id = c.encode_value(dim, v).unwrap();
            let err = (c.bin_center(dim, id) - v).abs();
            assert!(err <= c.half_bin(dim), "{name} = {v}: bin {id}, error {err}");
        }
    }
}

#[test]
fn centers_stay_within_a_few_ulps_of_the_formula() {
    let c = codec();
    for dim in 0..3 {
        let r = c.range(dim);
        for id in 0..BINS {
            let formula = r.lo + (f64::from(id) + 0.5) / f64::from(BINS) * r.width();
            let got = c.bin_center(dim, id);
            assert!((got - formula).abs() <= 8.0 * f64::EPSILON * r.hi.abs().max(r.lo.abs()), "dim {dim} bin {id}");
            assert_eq!(c.encode_value(dim, got).unwrap(), id, "a center encodes to its own bin");
        }
    }
}

#[test]
fn yaw_zero_sits_next_to_the_middle_bin() {
    let c = codec();
    let id = c.encode_value(2, 0.0).unwrap();
    assert_eq!(id, BINS / 2);
    assert!(c.bin_center(2, id).abs() <= c.half_bin(2));
}

#[test]
fn codec_metadata_round_trips_through_json() {
    let c = codec();
    let json = serde_json::to_string(&c).unwrap();
    let back: ActionCodec = serde_json::from_str(&json).unwrap();
    assert_eq!(back, c);
    assert_eq!(back.bins, BINS);
    assert_eq!(back.layout, LAYOUT);
    assert_eq!(back.bin_center(1, 7), c.bin_center(1, 7));
}

#[test]
fn custom_ranges_get_their_own_table() {
    let mut c = codec();
    // warm the default table first: a changed range must not reuse it
    c.bin_center(0, 0);
    c.x = DimRange { lo: -0.3, hi: 0.7 };
    for v in edge_values(&c, 0) {
        let id = c.encode_value(0, v).unwrap();
        assert!((c.bin_center(0, id) - v).abs() <= c.half_bin(0), "{v}");
    }
    assert!(c.encode_value(0, -0.2).is_ok());
    assert!(c.encode_value(0, 0.8).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn reconstruction_error_is_at_most_half_a_bin(a in arb_action()) {
        let c = codec();
        let q = c.quantize(&a).unwrap().to_array();
        for (d, v) in a.to_array().iter().enumerate() {
            prop_assert!((q[d] - v).abs() <= c.half_bin(d), "{}: {} vs {}", LAYOUT[d], v, q[d]);
        }
    }

    #[test]
    fn encode_decode_encode_is_idempotent(a in arb_action()) {
        let c = codec();
        let ids = c.encode(&a).unwrap();
        prop_assert_eq!(c.encode(&c.decode_ids(&ids)).unwrap(), ids);
        let q = c.quantize(&a).unwrap();
        prop_assert_eq!(c.quantize(&q).unwrap(), q);
    }

    #[test]
    fn encoding_is_monotone(dim in 0usize..6, u in 0.0f64..=1.0, w in 0.0f64..=1.0) {
        let c = codec();
        let r = c.range(dim);
        let (lo, hi) = (u.min(w), u.max(w));
        let (a, b) = (r.lo + lo * r.width(), r.lo + hi * r.width());
        prop_assert!(c.encode_value(dim, a.min(r.hi)).unwrap() <= c.encode_value(dim, b.min(r.hi)).unwrap());
    }

    #[test]
    fn decode_accepts_exactly_the_in_range_tokens(tokens in prop::collection::vec(-5i64..1030, 0..8)) {
        let c = codec();
        let ok = tokens.len() == 6 && tokens.iter().all(|&t| (0..i64::from(BINS)).contains(&t));
        prop_assert_eq!(c.decode(&tokens).is_ok(), ok);
    }
}
