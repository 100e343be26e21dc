use trmode_web::{mode_trace_native, skin_profiles_native, stability_explorer_native};

#[test]
fn skin_profiles_are_flat_rows() {
    let v = skin_profiles_native(0.5, 0.41, 30.0, 1.0, 0.1).unwrap();
    assert_eq!(v.len(), 11 * 5);
    assert_eq!(&v[..3], &[0.0, 0.5, 0.41]);
    for row in v.chunks(5) {
        assert!(row[2] < row[1]);
        assert!(row[4] < row[3]);
    }
    assert!(skin_profiles_native(0.5, 0.41, -1.0, 1.0, 0.1).is_err());
}

#[test]
fn mode_trace_follows_threshold() {
    let v = mode_trace_native(3, 300, -99.0, -99.0, 0.0).unwrap();
    assert_eq!(v.len(), 900);
    let mut saw_tr = false;
    let mut saw_am = false;
    for row in v.chunks(3) {
        let (ss, tr) = (row[0], row[1] > 0.5);
        assert_eq!(tr, ss < -99.0, "ss {ss}");
        saw_tr |= tr;
        saw_am |= !tr;
        assert!(row[2] > 0.0);
    }
    assert!(saw_tr && saw_am);
    assert_eq!(v, mode_trace_native(3, 300, -99.0, -99.0, 0.0).unwrap());
}

#[test]
fn stability_explorer_dichotomy() {
    let stable = stability_explorer_native(1.0, 0.0, 300).unwrap();
    assert!(stable[1] <= 1.0 + 1e-12);
    let hist = &stable[2..];
    assert!(hist.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));

    let unstable = stability_explorer_native(1.1, 0.0, 2000).unwrap();
    assert!(unstable[1] > 1.0);
    let last = *unstable.last().unwrap();
    assert!(last > 1e3 * unstable[2]);
}
