//! Instance builders and property checks shared by the integration tests
//! and the acceptance runner.
#![allow(dead_code)]

use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};

use sepnmf::linalg::{norm_sq_after_projection, project_out, simplex_project, singular_values, WGeometry};
use sepnmf::rng::{tags, Stream};
use sepnmf::{DenseMatrix, SelectorSpec};

/// `W [I_r, H']` with uniform `W` (`m x r`) and `mixtures` columns drawn
/// from a Dirichlet on `r + 1` coordinates with the last one dropped, so
/// every mixture lies strictly inside the unit simplex. Columns are shuffled;
/// the second value lists the positions of the pure columns in `W` order.
pub fn noiseless_separable(
    m: usize,
    r: usize,
    mixtures: usize,
    seed: u64,
) -> (DenseMatrix, Vec<usize>, DenseMatrix) {
    let mut rng = Stream::new(seed);
    let w = DenseMatrix::new(m, r, (0..m * r).map(|_| rng.uniform()).collect()).unwrap();
    let mut cols: Vec<Vec<f64>> = (0..r).map(|k| w.col(k).to_vec()).collect();
    for _ in 0..mixtures {
        let h = rng.dirichlet(&vec![1.0; r + 1]);
        let mut c = vec![0.0; m];
        for k in 0..r {
            c.iter_mut().zip(w.col(k)).for_each(|(a, b)| *a += h[k] * b);
        }
        cols.push(c);
    }
    shuffle(cols, r, &mut Stream::derived(seed, &[tags::LAYOUT]), w)
}

fn shuffle(
    cols: Vec<Vec<f64>>,
    pure: usize,
    rng: &mut Stream,
    w: DenseMatrix,
) -> (DenseMatrix, Vec<usize>, DenseMatrix) {
    let perm = rng.permutation(cols.len());
    // column `j` of the output is input column `perm[j]`
    let out: Vec<&Vec<f64>> = perm.iter().map(|&i| &cols[i]).collect();
    let mut position = vec![0; cols.len()];
    for (j, &i) in perm.iter().enumerate() {
        position[i] = j;
    }
    (
        DenseMatrix::from_columns(&out).unwrap(),
        position[..pure].to_vec(),
        w,
    )
}

/// Separable data with outliers: `[W, T, W H']` with uniform `W`
/// (`m x r`) and `T` (`m x t`), and `mixtures` Dirichlet columns in the
/// simplex whose rows each sum to at least `min_row_sum`. Columns are
/// shuffled; returns `(M, positions of W, positions of T)`.
pub fn outlier_instance(
    m: usize,
    r: usize,
    t: usize,
    mixtures: usize,
    min_row_sum: f64,
    seed: u64,
) -> (DenseMatrix, Vec<usize>, Vec<usize>) {
    let mut rng = Stream::new(seed);
    let w = DenseMatrix::new(m, r, (0..m * r).map(|_| rng.uniform()).collect()).unwrap();
    let outliers: Vec<Vec<f64>> = (0..t).map(|_| (0..m).map(|_| rng.uniform()).collect()).collect();
    let weights = loop {
        let hs: Vec<Vec<f64>> = (0..mixtures).map(|_| rng.dirichlet(&vec![1.0; r])).collect();
        if (0..r).all(|k| hs.iter().map(|h| h[k]).sum::<f64>() >= min_row_sum) {
            break hs;
        }
    };
    let mut cols: Vec<Vec<f64>> = (0..r).map(|k| w.col(k).to_vec()).collect();
    cols.extend(outliers);
    for h in &weights {
        let mut c = vec![0.0; m];
        for (k, hk) in h.iter().enumerate() {
            c.iter_mut().zip(w.col(k)).for_each(|(a, b)| *a += hk * b);
        }
        cols.push(c);
    }
    let (mat, pos, _) = shuffle(cols, r + t, &mut Stream::derived(seed, &[tags::LAYOUT]), w);
    (mat, pos[..r].to_vec(), pos[r..].to_vec())
}

pub fn sorted(mut v: Vec<usize>) -> Vec<usize> {
    v.sort_unstable();
    v
}

fn runner(cases: u32) -> TestRunner {
    TestRunner::new_with_rng(
        Config {
            cases,
            failure_persistence: None,
            ..Config::default()
        },
        TestRng::deterministic_rng(RngAlgorithm::ChaCha),
    )
}

fn run<S: Strategy>(
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String>
where
    S::Value: std::fmt::Debug,
{
    runner(cases).run(&strategy, test).map_err(|e| e.to_string())
}

fn matrix(max_rows: usize, max_cols: usize) -> impl Strategy<Value = DenseMatrix> {
    (1..=max_rows, 1..=max_cols).prop_flat_map(|(r, c)| {
        prop::collection::vec(-10.0..10.0f64, r * c).prop_map(move |d| DenseMatrix::new(r, c, d).unwrap())
    })
}

fn vec_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Projecting out a direction never increases a column norm and leaves
/// columns orthogonal to it.
pub fn projection_monotone(cases: u32) -> Result<(), String> {
    let strat = matrix(8, 8).prop_flat_map(|m| {
        let rows = m.rows();
        (Just(m), prop::collection::vec(-10.0..10.0f64, rows))
    });
    run(cases, strat, |(m, u)| {
        prop_assume!(vec_norm(&u) > 1e-3);
        let p = project_out(&m, &u).unwrap();
        for (before, after) in m.columns().zip(p.columns()) {
            let scale = 1.0 + vec_norm(before);
            prop_assert!(vec_norm(after) <= vec_norm(before) + 1e-12 * scale);
            let along: f64 = after.iter().zip(&u).map(|(a, b)| a * b).sum();
            prop_assert!(along.abs() <= 1e-10 * scale * vec_norm(&u));
        }
        Ok(())
    })
}

/// `‖(I - uuᵀ/‖u‖²) v‖² = ‖v‖² - (uᵀv)²/‖u‖²`.
pub fn norm_update_identity(cases: u32) -> Result<(), String> {
    let strat = (1usize..12).prop_flat_map(|n| {
        (
            prop::collection::vec(-10.0..10.0f64, n),
            prop::collection::vec(-10.0..10.0f64, n),
        )
    });
    run(cases, strat, |(u, v)| {
        let uu: f64 = u.iter().map(|x| x * x).sum();
        prop_assume!(uu > 1e-6);
        let uv: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
        let vv: f64 = v.iter().map(|x| x * x).sum();
        let direct: f64 = v
            .iter()
            .zip(&u)
            .map(|(vi, ui)| vi - uv / uu * ui)
            .map(|x| x * x)
            .sum();
        let updated = norm_sq_after_projection(vv, uv, uu).unwrap();
        prop_assert!(updated >= 0.0);
        prop_assert!(
            (updated - direct).abs() <= 1e-10 * (1.0 + vv),
            "{updated} vs {direct}"
        );
        Ok(())
    })
}

fn padded(mut s: Vec<f64>, len: usize) -> Vec<f64> {
    s.resize(len, 0.0);
    s
}

/// Deleting a column interlaces the singular values.
pub fn cauchy_interlacing(cases: u32) -> Result<(), String> {
    let strat = matrix(8, 8).prop_flat_map(|m| {
        let cols = m.cols();
        (Just(m), 0..cols)
    });
    run(cases, strat, |(m, k)| {
        prop_assume!(m.cols() >= 2);
        let keep: Vec<usize> = (0..m.cols()).filter(|&j| j != k).collect();
        let sub = m.select_columns(&keep).unwrap();
        let len = m.rows().max(m.cols()) + 1;
        let s = padded(singular_values(&m).unwrap(), len);
        let t = padded(singular_values(&sub).unwrap(), len);
        let tol = 1e-9 * (1.0 + s[0]);
        for i in 0..len - 1 {
            prop_assert!(s[i] + tol >= t[i] && t[i] + tol >= s[i + 1], "i={i} {s:?} {t:?}");
        }
        Ok(())
    })
}

/// `|σ_i(A + E) - σ_i(A)| <= ‖E‖₂`.
pub fn weyl(cases: u32) -> Result<(), String> {
    let strat = (1usize..8, 1usize..8).prop_flat_map(|(r, c)| {
        (
            prop::collection::vec(-10.0..10.0f64, r * c),
            prop::collection::vec(-1.0..1.0f64, r * c),
        )
            .prop_map(move |(a, e)| {
                (
                    DenseMatrix::new(r, c, a).unwrap(),
                    DenseMatrix::new(r, c, e).unwrap(),
                )
            })
    });
    run(cases, strat, |(a, e)| {
        let sa = singular_values(&a).unwrap();
        let sb = singular_values(&a.add(&e).unwrap()).unwrap();
        let norm_e = singular_values(&e).unwrap()[0];
        let tol = 1e-9 * (1.0 + sa[0]);
        for (x, y) in sa.iter().zip(&sb) {
            prop_assert!((x - y).abs() <= norm_e + tol);
        }
        Ok(())
    })
}

/// `min(ν, γ/√2) >= σ_r` for full column rank `W`.
pub fn omega_bounds_sigma_r(cases: u32) -> Result<(), String> {
    let strat = (2usize..8).prop_flat_map(|r| {
        (r..10).prop_flat_map(move |m| {
            prop::collection::vec(-10.0..10.0f64, m * r).prop_map(move |d| DenseMatrix::new(m, r, d).unwrap())
        })
    });
    run(cases, strat, |w| {
        let g = WGeometry::of(&w).unwrap();
        prop_assume!(g.sigma_min > 1e-8);
        prop_assert!(g.omega + 1e-10 * g.sigma_max >= g.sigma_min, "{g:?}");
        Ok(())
    })
}

/// Projection onto `{x >= 0, Σx <= 1}` is idempotent, feasible and
/// non-expansive.
pub fn simplex_projection(cases: u32) -> Result<(), String> {
    let strat = (1usize..12).prop_flat_map(|n| {
        (
            prop::collection::vec(-5.0..5.0f64, n),
            prop::collection::vec(-5.0..5.0f64, n),
        )
    });
    run(cases, strat, |(x, y)| {
        let px = simplex_project(&x);
        let py = simplex_project(&y);
        prop_assert!(px.iter().all(|&v| v >= 0.0));
        prop_assert!(px.iter().sum::<f64>() <= 1.0 + 1e-12);
        let again = simplex_project(&px);
        prop_assert!(dist(&again, &px) <= 1e-12);
        prop_assert!(dist(&px, &py) <= dist(&x, &y) + 1e-12);
        Ok(())
    })
}

#[derive(Debug, Clone, Copy)]
enum Family {
    L2,
    Robust,
    PNorm,
}

fn selector(family: Family, param: f64) -> SelectorSpec {
    match family {
        Family::L2 => SelectorSpec::squared_l2(),
        Family::Robust => SelectorSpec::robust(param),
        Family::PNorm => SelectorSpec::pnorm(param),
    }
}

/// A point in the ball of radius `radius`.
fn in_ball(raw: Vec<f64>, fraction: f64, radius: f64) -> Vec<f64> {
    let n = vec_norm(&raw);
    if n == 0.0 {
        return raw;
    }
    raw.iter().map(|v| v / n * fraction * radius).collect()
}

fn selector_case(
    p_range: std::ops::Range<f64>,
) -> impl Strategy<Value = (SelectorSpec, f64, Vec<f64>, Vec<f64>)> {
    let family = prop_oneof![Just(Family::L2), Just(Family::Robust), Just(Family::PNorm)];
    (family, 0.0..1.0f64, 0.5..10.0f64, 1usize..10).prop_flat_map(move |(f, t, radius, n)| {
        let param = match f {
            Family::Robust => 0.1 + 4.9 * t,
            Family::PNorm => p_range.start + (p_range.end - p_range.start) * t,
            Family::L2 => 2.0,
        };
        (
            Just(selector(f, param)),
            Just(radius),
            (prop::collection::vec(-1.0..1.0f64, n), 0.0..=1.0f64)
                .prop_map(move |(v, s)| in_ball(v, s, radius)),
            (prop::collection::vec(-1.0..1.0f64, n), 0.0..=1.0f64)
                .prop_map(move |(v, s)| in_ball(v, s, radius)),
        )
    })
}

/// `μ/2 ‖x‖² <= f(x) <= L/2 ‖x‖²` inside the ball.
pub fn selector_sandwich(cases: u32) -> Result<(), String> {
    run(cases, selector_case(1.1..6.0), |(f, radius, x, _)| {
        prop_assert!(f.sandwich_check(&x, radius), "{f} at {x:?}");
        Ok(())
    })
}

/// `f((x+y)/2) <= (f(x)+f(y))/2 - μ/8 ‖x-y‖²`; the ℓp family is
/// restricted to `p <= 2`, where `μ` is a strong-convexity modulus.
pub fn selector_midpoint_convexity(cases: u32) -> Result<(), String> {
    run(cases, selector_case(1.1..2.0), |(f, radius, x, y)| {
        let mu = f.constants(radius, x.len()).mu;
        let mid: Vec<f64> = x.iter().zip(&y).map(|(a, b)| (a + b) / 2.0).collect();
        let d = dist(&x, &y);
        let lhs = f.evaluate(&mid);
        let rhs = (f.evaluate(&x) + f.evaluate(&y)) / 2.0 - mu / 8.0 * d * d;
        prop_assert!(lhs <= rhs + 1e-10 * (1.0 + radius * radius), "{f}: {lhs} > {rhs}");
        Ok(())
    })
}

/// The analytic gradient agrees with central differences and is
/// `L`-Lipschitz; the ℓp family is restricted to `p >= 2`, where `L` is a
/// gradient-Lipschitz constant.
pub fn selector_gradient_lipschitz(cases: u32) -> Result<(), String> {
    run(cases, selector_case(2.0..6.0), |(f, radius, x, y)| {
        let lip = f.constants(radius, x.len()).lipschitz;
        let gx = f.gradient(&x);
        let gy = f.gradient(&y);
        prop_assert!(dist(&gx, &gy) <= lip * dist(&x, &y) + 1e-10 * (1.0 + radius));
        let h = 1e-6 * (1.0 + radius);
        for i in 0..x.len() {
            let mut plus = x.clone();
            let mut minus = x.clone();
            plus[i] += h;
            minus[i] -= h;
            let fd = (f.evaluate(&plus) - f.evaluate(&minus)) / (2.0 * h);
            prop_assert!(
                (fd - gx[i]).abs() <= 1e-5 * (1.0 + gx[i].abs() + radius),
                "{f} {i}"
            );
            let ratio = dist(&f.gradient(&plus), &gx) / h;
            prop_assert!(ratio <= lip * (1.0 + 1e-6) + 1e-6);
        }
        Ok(())
    })
}

pub const PROPERTY_SUITES: &[(&str, fn(u32) -> Result<(), String>)] = &[
    ("projection monotonicity", projection_monotone),
    ("norm-update identity", norm_update_identity),
    ("Cauchy interlacing", cauchy_interlacing),
    ("Weyl perturbation", weyl),
    ("omega >= sigma_r", omega_bounds_sigma_r),
    ("simplex projection", simplex_projection),
    ("selector sandwich", selector_sandwich),
    ("selector midpoint convexity", selector_midpoint_convexity),
    ("selector gradient Lipschitz", selector_gradient_lipschitz),
];
