use ipstop::ipm::{alpha_tilde, lemma1_inequalities};
use proptest::prelude::*;

#[derive(Debug, Clone)]
struct Sample {
    x: Vec<f64>,
    s: Vec<f64>,
    dx: Vec<f64>,
    ds: Vec<f64>,
    gamma: f64,
    sigma_min: f64,
    sigma_max: f64,
    sigma: f64,
    delta: f64,
    m: f64,
    alpha_frac: f64,
}

/// A state in the neighbourhood (`γμ ≤ x_js_j ≤ μ/γ`, which holds when every
/// product lies in `[1, 1/γ]`) and a direction with
/// `SΔx + XΔs = σμe − XSe` and `|Δx/x|, |Δs/s| ≤ M`.
fn sample() -> impl Strategy<Value = Sample> {
    (2usize..25, 0.01f64..0.9, 0.02f64..0.5, 0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0, 0.5f64..30.0, 0.0f64..=1.0)
        .prop_flat_map(|(n, gamma, sigma_min, span, pos, dfrac, m_extra, alpha_frac)| {
            let sigma_max = sigma_min + span * (0.98 - sigma_min);
            let sigma = sigma_min + pos * (sigma_max - sigma_min);
            let delta = (0.01 + 0.98 * dfrac) * sigma_min;
            (
                prop::collection::vec(-3.0f64..3.0, n),
                prop::collection::vec(0.0f64..=1.0, n),
                prop::collection::vec(0.0f64..=1.0, n),
                Just((gamma, sigma_min, sigma_max, sigma, delta, m_extra, alpha_frac)),
            )
        })
        .prop_map(|(logx, pfrac, split, (gamma, sigma_min, sigma_max, sigma, delta, m_extra, alpha_frac))| {
            let n = logx.len();
            let x: Vec<f64> = logx.iter().map(|l| l.exp()).collect();
            let prods: Vec<f64> = pfrac.iter().map(|f| 1.0 + f * (1.0 / gamma - 1.0)).collect();
            let s: Vec<f64> = (0..n).map(|j| prods[j] / x[j]).collect();
            let mu = prods.iter().sum::<f64>() / n as f64;
            // u + v = t with u = Δx/x, v = Δs/s
            let t: Vec<f64> = prods.iter().map(|p| sigma * mu / p - 1.0).collect();
            let tmax = t.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
            let m = tmax.max(1e-3) * (1.0 + m_extra / 30.0) + m_extra;
            let (mut dx, mut ds) = (vec![0.0; n], vec![0.0; n]);
            for j in 0..n {
                let lo = (-m).max(t[j] - m);
                let hi = m.min(t[j] + m);
                let u = lo + split[j] * (hi - lo);
                dx[j] = u * x[j];
                ds[j] = (t[j] - u) * s[j];
            }
            Sample { x, s, dx, ds, gamma, sigma_min, sigma_max, sigma, delta, m, alpha_frac }
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn steps_below_alpha_tilde_satisfy_all_four(sm in sample()) {
        let n = sm.x.len();
        for j in 0..n {
            prop_assert!((sm.dx[j] / sm.x[j]).abs() <= sm.m * (1.0 + 1e-12));
            prop_assert!((sm.ds[j] / sm.s[j]).abs() <= sm.m * (1.0 + 1e-12));
        }
        let mu = sm.x.iter().zip(&sm.s).map(|(a, b)| a * b).sum::<f64>() / n as f64;
        for j in 0..n {
            let lhs = sm.s[j] * sm.dx[j] + sm.x[j] * sm.ds[j];
            let rhs = sm.sigma * mu - sm.x[j] * sm.s[j];
            prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + rhs.abs()));
        }
        let at = alpha_tilde(sm.sigma_min, sm.sigma_max, sm.gamma, sm.delta, sm.m).unwrap();
        let alpha = sm.alpha_frac * at;
        let omega = 1.0 - sm.sigma + sm.delta;
        let checks = lemma1_inequalities(&sm.x, &sm.s, &sm.dx, &sm.ds, alpha, sm.gamma, omega);
        prop_assert_eq!(checks, [true; 4], "α = {} of α̃ = {}", alpha, at);
    }
}

#[test]
fn alpha_tilde_hand_value() {
    let v = alpha_tilde(0.1, 0.9, 0.1, 0.05, 10.0).unwrap();
    assert!((v - 8.9109e-5).abs() <= 1e-9);
}

#[test]
fn zero_step_satisfies_everything() {
    let x = [1.0, 2.0, 0.5];
    let s = [0.5, 0.4, 1.5];
    let d = [10.0, -10.0, 3.0];
    assert_eq!(lemma1_inequalities(&x, &s, &d, &d, 0.0, 0.2, 0.9), [true; 4]);
}

#[test]
fn oversized_direction_breaks_an_inequality() {
    // Δx/x = −10M with M = 1 at a long step drives a product negative.
    let x = [1.0, 1.0];
    let s = [1.0, 1.0];
    let dx = [-10.0, 0.0];
    let ds = [0.0, -1.0];
    let at = alpha_tilde(0.2, 0.5, 0.5, 0.1, 1.0).unwrap();
    assert!(lemma1_inequalities(&x, &s, &dx, &ds, 0.5, 0.5, 0.6).contains(&false));
    assert!(at < 0.5);
}
