use vlcsim::channel::{channel_response, ChannelSettings};
use vlcsim::geometry::{Room, RoomConfig, Vec3};
use vlcsim::receivers::{Adr, AdrParams};
use vlcsim::sources::{build_wide_units, coalesce, UnitKind, WideUnitParams};

/// Reflected power on every receiver branch for a given mesh side.
fn reflected(side: f64, order: u8) -> Vec<f64> {
    let cfg = RoomConfig {
        first_order_side: side,
        second_order_side: side,
        ..RoomConfig::default()
    };
    let room = Room::build(&cfg).unwrap();
    let units = build_wide_units(&WideUnitParams::default(), UnitKind::Illumination).unwrap();
    let beams: Vec<_> = coalesce(
        &units
            .iter()
            .flat_map(|u| u.all_beams().copied())
            .collect::<Vec<_>>(),
    );
    let adr = Adr::new(Vec3::new(1.0, 2.0, 1.0), &AdrParams::default()).unwrap();
    let settings = ChannelSettings {
        max_order: order,
        ..ChannelSettings::default()
    };
    let r = channel_response(&beams, &adr, &room, &settings);
    r.per_branch
        .iter()
        .map(|l| l.power_of_order(order))
        .collect()
}

/// Branches that see no lit surface carry no reflected power at any
/// resolution and are skipped.
fn assert_converged(coarse: &[f64], fine: &[f64]) {
    let lit: Vec<_> = coarse.iter().zip(fine).filter(|(_, f)| **f > 0.0).collect();
    assert!(!lit.is_empty());
    for (c, f) in lit {
        let change = (c - f).abs() / f;
        assert!(change < 0.05, "coarse {c:e} fine {f:e} change {change}");
    }
}

#[test]
fn first_order_converges_on_halving() {
    assert_converged(&reflected(0.05, 1), &reflected(0.025, 1));
}

#[test]
fn second_order_converges_on_halving() {
    assert_converged(&reflected(0.2, 2), &reflected(0.1, 2));
}
