use pa_stein::metrics::{mean_band, spread};
use pa_stein::PAParams;

fn grid() -> Vec<usize> {
    (0..14).map(|e| 1usize << e).collect()
}

#[test]
fn band_is_stable_over_the_grid() {
    for (m, delta) in [(1, 0.0), (2, 1.0)] {
        let pts = mean_band(PAParams::new(m, delta).unwrap(), &grid()).unwrap();
        let s = spread(pts.iter().map(|p| p.value));
        assert!(s < 4.0, "({m}, {delta}): {s}");
    }
}

#[test]
fn band_for_negative_delta_away_from_the_root() {
    // The oldest vertex sits outside the asymptotic regime when δ < 0.
    let pts = mean_band(PAParams::new(3, -1.0).unwrap(), &grid()).unwrap();
    let s = spread(pts.iter().filter(|p| p.i >= 2).map(|p| p.value));
    assert!(s < 4.0, "{s}");
    let root = spread(pts.iter().map(|p| p.value));
    assert!(root > s);
}
