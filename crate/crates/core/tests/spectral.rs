use bravl::channel_operator::{AssemblyOptions, DiagonalRule};
use bravl::spectral::{bound_states, refine, SpectralOptions, DEFAULT_SEQUENCE};
use bravl::virial::{z_sweep, Verdict};
use bravl::{Channel, PhysicalParams, Spin};

/// Finest-grid ground state of `(0, +1/2)` at `ν = 1/2`, frozen from the
/// default pipeline (N = 100, 200, 400, σ = 1, subtraction diagonal).
const GROUND_STATE_NU_HALF: f64 = 0.862_193_391_129_779_1;

fn up0() -> Channel {
    Channel::new(0, Spin::Up).unwrap()
}

#[test]
fn ground_state_regression() {
    let params = PhysicalParams::natural(0.5).unwrap();
    let set = bound_states(up0(), &params, &DEFAULT_SEQUENCE, SpectralOptions::default()).unwrap();
    let g = set.ground_state().expect("stable ground state");
    assert_eq!(g.index, 0);
    assert!((g.value - GROUND_STATE_NU_HALF).abs() <= 1e-10, "{}", g.value);
    // below the Dirac value sqrt(1 - ν²) and above (1 - Z/Z_c) mc²
    assert!(g.value < (1.0f64 - 0.25).sqrt());
    assert!(g.value > set.lower_bound);
    let history: Vec<f64> = set.history.iter().map(|h| h.below_threshold[0]).collect();
    assert!(history.windows(2).all(|w| w[1] < w[0]));
    assert!((history[1] - history[2]).abs() < 1e-5);
}

#[test]
fn diagonal_rules_agree_on_the_ground_state() {
    let params = PhysicalParams::natural(0.5).unwrap();
    let cell = SpectralOptions {
        assembly: AssemblyOptions {
            rule: DiagonalRule::CellAverage,
            ..AssemblyOptions::default()
        },
        ..SpectralOptions::default()
    };
    let a = refine(up0(), &params, &DEFAULT_SEQUENCE, SpectralOptions::default()).unwrap();
    let b = refine(up0(), &params, &DEFAULT_SEQUENCE, cell).unwrap();
    let (la, lb) = (a.finest().1.eigenvalues[0], b.finest().1.eigenvalues[0]);
    assert!((la - lb).abs() < 1e-3, "{la} vs {lb}");
}

#[test]
fn sweep_is_monotone_in_the_coupling() {
    let base = PhysicalParams::natural(0.0).unwrap();
    for ch in [up0(), Channel::new(1, Spin::Down).unwrap()] {
        let table = z_sweep(
            ch,
            &[0.25, 0.5, 0.75],
            &base,
            &DEFAULT_SEQUENCE,
            SpectralOptions::default(),
        )
        .unwrap();
        assert_eq!(table.rows.len(), 9);
        assert!(table
            .rows
            .iter()
            .all(|r| r.embedded_verdict == Verdict::Pass && r.lower_bound_ok));
        for n in DEFAULT_SEQUENCE {
            let rows: Vec<_> = table.rows.iter().filter(|r| r.nodes == n).collect();
            let lambdas: Vec<f64> = rows.iter().map(|r| r.lambda_min_over_mc2.unwrap()).collect();
            assert!(lambdas.windows(2).all(|w| w[1] < w[0]), "{ch} N={n}: {lambdas:?}");
            assert!(rows
                .windows(2)
                .all(|w| w[1].stable_bound_states >= w[0].stable_bound_states));
        }
    }
}
