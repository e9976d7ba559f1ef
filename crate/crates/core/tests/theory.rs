use bicog::theory::{
    epsilon_from, lemma1_holds, noise_ratio, pac_sample_bound, sufficient_condition_holds,
    PacParams,
};
use bicog::Exact;
use num_bigint::BigInt;

fn frac(n: u64, d: u64) -> Exact {
    Exact::new(BigInt::from(n), BigInt::from(d))
}

#[test]
fn pac_bound_example() {
    let direct = 2.0 / (0.01 * 0.64) * 4000f64.ln();
    assert!((direct - 2591.9).abs() < 0.1);
    assert_eq!(
        pac_sample_bound(0.1, 0.1, 100, 0.05),
        Ok(direct.ceil() as u64)
    );
    assert_eq!(direct.ceil() as u64, 2592);
}

#[test]
fn epsilon_round_trip_never_exceeds_target() {
    let mut points = 0;
    for eps in [0.02, 0.05, 0.1, 0.2, 0.3] {
        for eta in [0.0, 0.1, 0.25, 0.4, 0.49] {
            for (f, delta) in [(10, 0.1), (100, 0.05), (1000, 0.01), (1 << 20, 0.001)] {
                let params = PacParams::new(eps, eta, f, delta).unwrap();
                let m = params.sample_bound().unwrap();
                let back = epsilon_from(m, eta, params.c()).unwrap();
                assert!(back <= eps, "eps {eps} eta {eta} |F| {f}: {back}");
                points += 1;
            }
        }
    }
    assert_eq!(points, 100);
}

#[test]
fn noise_ratio_example() {
    assert!((noise_ratio(0.1f64, 100, 50) - 10.0 / 150.0).abs() < 1e-15);
    assert_eq!(noise_ratio(frac(1, 10), 100, 50), frac(1, 15));
    assert_eq!(noise_ratio(0.3f64, 0, 0), 0.0);
}

#[test]
fn lemma_example() {
    assert!(lemma1_holds(0.1, 0.2, 150, 100));
    assert!(sufficient_condition_holds(0.1, 0.2, 150, 100, 40).holds);
    assert!(!lemma1_holds(0.1, 0.2, 250, 100));
    assert!(!lemma1_holds(0.1, 0.2, 100, 100));
}

/// `0 < e_t / e_prev < L_prev / L_t < 1` by direct division.
fn lemma_by_division(e_t: &Exact, e_prev: &Exact, l_t: u64, l_prev: u64) -> bool {
    let left = e_t / e_prev;
    let mid = frac(l_prev, l_t);
    left > frac(0, 1) && left < mid && mid < frac(1, 1)
}

#[test]
fn lemma_forms_agree_on_a_grid() {
    let labeled = 40;
    let mut improving = 0;
    for a in 1..=10u64 {
        for b in 1..=10u64 {
            let (e_t, e_prev) = (frac(a, 20), frac(b, 20));
            for l_t in 1..=10u64 {
                for l_prev in 1..=10u64 {
                    let want = lemma_by_division(&e_t, &e_prev, l_t, l_prev);
                    assert_eq!(lemma1_holds(e_t.clone(), e_prev.clone(), l_t, l_prev), want);
                    let w = sufficient_condition_holds(
                        e_t.clone(),
                        e_prev.clone(),
                        l_t,
                        l_prev,
                        labeled,
                    );
                    assert_eq!(w.holds, want);
                    let wf = sufficient_condition_holds(
                        a as f64 / 20.0,
                        b as f64 / 20.0,
                        l_t,
                        l_prev,
                        labeled,
                    );
                    assert_eq!(wf.holds, want);
                    if want {
                        improving += 1;
                        assert!(w.inequality_holds(), "{a}/20 {b}/20 {l_t} {l_prev}");
                        assert!(wf.lhs > wf.rhs * (1.0 - 1e-12));
                    }
                }
            }
        }
    }
    assert!(improving > 0);
}
