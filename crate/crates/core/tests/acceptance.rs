//! Acceptance gate: one line per criterion, nonzero exit if any fails.

mod common;

use std::time::Instant;

use common::*;
use coupled_decay::decay::{certified_ceiling, measure_polynomial_decay, InitRecipe};
use coupled_decay::energy::{
    energy_e, energy_e_derivative, k_energy, k_energy_case, simpson, tilde_e, tilde_e_case, tilde_e_derivative,
    u_prime_norm_sq, BetaCase,
};
use coupled_decay::linalg::Mat4;
use coupled_decay::lyapunov::{
    certify, default_lambda_grid, h_eps, h_eps_derivative, CertificateReport, DEFAULT_GRID_MAX_FACTOR,
    DEFAULT_GRID_PER_DECADE,
};
use coupled_decay::propagator::{expm4, propagate, run_trajectory, ModalState};
use coupled_decay::scalar::{
    oracle_rate, scalar_c1_c2_eps1, scalar_decay_check, scalar_energy, scalar_h_eps, simulate_scalar,
    slowest_mode_init, ScalarParams,
};
use coupled_decay::spectral::coupling_bound;
use coupled_decay::{Spectrum, SystemParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

const BETAS: [f64; 5] = [0.0, 0.5, 1.0, 1.25, 1.5];

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e<E: std::fmt::Display>(x: E) -> String {
    x.to_string()
}

fn grid(spectrum: &Spectrum) -> Vec<f64> {
    default_lambda_grid(spectrum.lambda1(), DEFAULT_GRID_MAX_FACTOR, DEFAULT_GRID_PER_DECADE)
}

fn half_bound(spectrum: &Spectrum, beta: f64) -> SystemParams {
    SystemParams::new(0.5 * coupling_bound(spectrum, beta).unwrap(), beta, 1.0, 0.0).unwrap()
}

fn scalar_exponential_decay() -> Outcome {
    let start = Instant::now();
    let p = ScalarParams::new(2.0, 3.0, 1.0).map_err(e)?;
    let generic = [1.0, -0.4, 0.3, 0.7];
    let check = scalar_decay_check(&p, &generic, 40.0, 4000).map_err(e)?;
    let elapsed = start.elapsed().as_secs_f64();
    ensure(check.oracle_rate < 0.0 && check.measured_rate < 0.0, || format!("rates not negative: {check:?}"))?;
    ensure(check.relative_error() <= 0.05, || format!("generic init off by {:.3e}", check.relative_error()))?;
    ensure(elapsed < 1.0, || format!("took {elapsed:.3} s"))?;

    let slow = scalar_decay_check(&p, &slowest_mode_init(&p), 40.0, 4000).map_err(e)?;
    ensure(slow.relative_error() <= 0.01, || format!("slowest-mode init off by {:.3e}", slow.relative_error()))?;
    ensure(oracle_rate(1.0, 1.0, 1.1) >= 0.0, || "c^2 > lambda*mu control decays".into())?;
    Ok(format!(
        "measured {:.6} vs 2*abscissa {:.6} (rel {:.2e}); slowest-mode rel {:.2e}; {:.0} ms",
        check.measured_rate,
        check.oracle_rate,
        check.relative_error(),
        slow.relative_error(),
        1e3 * elapsed
    ))
}

fn sandwich_inequalities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut scalar_checked, mut abstract_checked) = (0usize, 0usize);
    for _ in 0..20 {
        let beta: f64 = rng.gen_range(0.0..=1.5);
        let lambda1: f64 = rng.gen_range(0.2..=5.0);
        let bound = lambda1.powf((3.0 - 2.0 * beta) / 2.0);
        let alpha = rng.gen_range(0.02..0.98) * bound * if rng.gen::<bool>() { 1.0 } else { -1.0 };

        // scalar problem as the first mode of the abstract one
        let sp = ScalarParams::new(lambda1, lambda1 * lambda1, alpha * lambda1.powf(beta)).map_err(e)?;
        let k1 = scalar_c1_c2_eps1(&sp, 0.0).eps1;
        let consts = scalar_c1_c2_eps1(&sp, 0.5 * k1);
        for _ in 0..10_000 {
            let x = random_vec4(&mut rng);
            let k = scalar_energy(&x, &sp).1;
            let h = scalar_h_eps(&x, &sp, 0.5 * k1).map_err(e)?;
            ensure(consts.c1 * k <= h + 1e-12 && h <= consts.c2 * k + 1e-12, || {
                format!("scalar sandwich broken at {x:?}: {} <= {h} <= {}", consts.c1 * k, consts.c2 * k)
            })?;
            scalar_checked += 1;
        }

        let spectrum = scaled_dirichlet(lambda1, 8);
        let params = SystemParams::new(alpha, beta, 1.0, 0.0).map_err(e)?;
        let lo = (bound - alpha.abs()) / (2.0 * bound);
        let hi = (bound + alpha.abs()) / (2.0 * bound);
        for _ in 0..10_000 {
            // random support so single modes are exercised too
            let active = 1 + rng.gen_range(0..8);
            let mut coeffs = random_state(&mut rng, active).coeffs;
            coeffs.resize(8, [0.0; 4]);
            let s = ModalState::new(0.0, coeffs).map_err(e)?;
            let k = k_energy(&s, &params, &spectrum).map_err(e)?;
            let te = tilde_e(&s, &params, &spectrum).map_err(e)?;
            ensure(lo * k <= te + 1e-12 && te <= hi * k + 1e-12, || {
                format!("abstract sandwich broken (alpha {alpha}, beta {beta}, lambda1 {lambda1}): {} <= {te} <= {}", lo * k, hi * k)
            })?;
            abstract_checked += 1;
        }
    }
    Ok(format!("{scalar_checked} scalar and {abstract_checked} abstract states over 20 triples, no violations"))
}

fn energy_identities() -> Outcome {
    let spectrum = dirichlet(32);
    let mut worst_fd = 0.0f64;
    let mut worst_quad = 0.0f64;
    let cells = [(0.5, InitRecipe::SpreadOneOverN), (1.25, InitRecipe::SpreadOneOverN), (1.0, InitRecipe::SpreadOneOverN)];
    for (beta, recipe) in cells {
        let params = SystemParams::new(0.5 * coupling_bound(&spectrum, beta).unwrap(), beta, 1.3, 0.0).map_err(e)?;
        let init = recipe.build(32).map_err(e)?;

        // central differences at a few times
        let h = 1e-5;
        for &t in &[0.7, 2.3, 5.1] {
            let x = propagate(&init, &params, &spectrum, t).map_err(e)?;
            let xp = propagate(&x, &params, &spectrum, h).map_err(e)?;
            let xm = propagate(&init, &params, &spectrum, t - h).map_err(e)?;
            let fd_e = (energy_e(&xp, &params, &spectrum).map_err(e)? - energy_e(&xm, &params, &spectrum).map_err(e)?)
                / (2.0 * h);
            let ex_e = energy_e_derivative(&x, &params, &spectrum).map_err(e)?;
            let fd_t = (tilde_e(&xp, &params, &spectrum).map_err(e)? - tilde_e(&xm, &params, &spectrum).map_err(e)?)
                / (2.0 * h);
            let ex_t = tilde_e_derivative(&x, &params, &spectrum).map_err(e)?;
            let r = rel_err(fd_e, ex_e).max(rel_err(fd_t, ex_t));
            worst_fd = worst_fd.max(r);
            ensure(r <= 1e-7, || format!("beta {beta}, t {t}: E' fd {fd_e} vs {ex_e}, tildeE' fd {fd_t} vs {ex_t}"))?;
        }

        // integrated identities
        let t_end = 4.0;
        let n = 40_000;
        let traj = run_trajectory(&init, &params, &spectrum, t_end, n).map_err(e)?;
        let dt = traj.dt();
        let upsq: Vec<f64> =
            traj.states.iter().map(|s| u_prime_norm_sq(s, &spectrum)).collect::<Result<_, _>>().map_err(e)?;
        let rate: Vec<f64> = traj
            .states
            .iter()
            .map(|s| tilde_e_derivative(s, &params, &spectrum))
            .collect::<Result<_, _>>()
            .map_err(e)?;
        let e0 = energy_e(&traj.states[0], &params, &spectrum).map_err(e)?;
        let e1 = energy_e(traj.final_state(), &params, &spectrum).map_err(e)?;
        let t0 = tilde_e(&traj.states[0], &params, &spectrum).map_err(e)?;
        let t1 = tilde_e(traj.final_state(), &params, &spectrum).map_err(e)?;
        let r1 = rel_err(e1 - e0, -params.damping_b * simpson(&upsq, dt));
        let r2 = rel_err(t1 - t0, simpson(&rate, dt));
        worst_quad = worst_quad.max(r1).max(r2);
        ensure(r1 <= 1e-6 && r2 <= 1e-6, || format!("beta {beta}: integrated identity rel errors {r1:.2e}, {r2:.2e}"))?;
    }
    Ok(format!("worst central-difference rel {worst_fd:.2e}, worst quadrature rel {worst_quad:.2e} (N = 32)"))
}

fn certify_cell(spectrum: &Spectrum, beta: f64) -> Result<CertificateReport, String> {
    certify(&half_bound(spectrum, beta), spectrum, &grid(spectrum), None).map_err(e)
}

fn lyapunov_certificate() -> Outcome {
    let spectrum = dirichlet(16);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut gammas = Vec::new();
    for &beta in &BETAS {
        let params = half_bound(&spectrum, beta);
        let report = certify_cell(&spectrum, beta)?;
        ensure(report.passed && report.uniform_gamma > 0.0, || format!("beta {beta}: {:?}", report.reason))?;
        let lyap = report.lyapunov.expect("passing report carries parameters");
        let gamma = report.uniform_gamma;
        gammas.push(gamma);
        for _ in 0..100 {
            let init = random_state(&mut rng, spectrum.n_modes());
            let traj = run_trajectory(&init, &params, &spectrum, 20.0, 200).map_err(e)?;
            let mut prev = f64::INFINITY;
            for s in &traj.states {
                let h = h_eps(s, &params, &lyap, &spectrum).map_err(e)?;
                let dh = h_eps_derivative(s, &params, &lyap, &spectrum).map_err(e)?;
                let k = k_energy(s, &params, &spectrum).map_err(e)?;
                ensure(h < prev, || format!("beta {beta}: H_eps not decreasing at t = {}", s.time))?;
                ensure(-dh / k >= gamma - 1e-9, || {
                    format!("beta {beta}: -H'/K = {} < gamma* = {gamma} at t = {}", -dh / k, s.time)
                })?;
                prev = h;
            }
        }

        let over = SystemParams { alpha: 1.01 * coupling_bound(&spectrum, beta).unwrap(), ..params };
        let fail = certify(&over, &spectrum, &grid(&spectrum), None).map_err(e)?;
        ensure(!fail.passed && fail.failing_lambda == Some(spectrum.lambda1()), || {
            format!("beta {beta}: 1.01*bound gave passed={} failing={:?}", fail.passed, fail.failing_lambda)
        })?;
    }
    let g: Vec<String> = gammas.iter().map(|g| format!("{g:.3e}")).collect();
    Ok(format!("gamma* = [{}], 100 trajectories per cell, 1.01*bound fails at lambda_1", g.join(", ")))
}

fn sup_tk(spectrum: &Spectrum, params: &SystemParams, t_end: f64, n_steps: usize) -> Result<(f64, f64), String> {
    let init = InitRecipe::SpreadOneOverN.build(spectrum.n_modes()).map_err(e)?;
    let report = certify(params, spectrum, &grid(spectrum), None).map_err(e)?;
    let ceiling = certified_ceiling(params, spectrum, &init, &report)
        .map_err(e)?
        .ok_or_else(|| format!("beta {}: no certificate", params.beta))?;
    let traj = run_trajectory(&init, params, spectrum, t_end, n_steps).map_err(e)?;
    let r = measure_polynomial_decay(&traj, 1.0, ceiling).map_err(e)?;
    Ok((r.sup_tk, r.ceiling))
}

fn polynomial_bound() -> Outcome {
    let s64 = dirichlet(64);
    let s128 = dirichlet(128);
    let mut worst_use = 0.0f64;
    let mut worst_drift = 0.0f64;
    for &beta in &BETAS {
        let params = half_bound(&s64, beta);
        let (sup, ceiling) = sup_tk(&s64, &params, 200.0, 2000)?;
        ensure(sup <= ceiling, || format!("beta {beta}: sup tK = {sup} above ceiling {ceiling}"))?;
        worst_use = worst_use.max(sup / ceiling);
        for (s, t_end, steps) in [(&s64, 400.0, 4000), (&s128, 200.0, 2000), (&s64, 200.0, 4000)] {
            let (other, _) = sup_tk(s, &params, t_end, steps)?;
            let drift = (other - sup).abs() / sup;
            worst_drift = worst_drift.max(drift);
            ensure(drift <= 0.1, || format!("beta {beta}: sup tK moved by {drift:.3} under refinement"))?;
        }
    }

    // α = 0 with v-only data: K is conserved and the verdict is fail
    let params = SystemParams::new(0.0, 1.0, 1.0, 0.0).map_err(e)?;
    let init = InitRecipe::VOnlySpread.build(64).map_err(e)?;
    let traj = run_trajectory(&init, &params, &s64, 200.0, 2000).map_err(e)?;
    let k0 = k_energy(&traj.states[0], &params, &s64).map_err(e)?;
    let mut drift = 0.0f64;
    for s in &traj.states {
        drift = drift.max(rel_err(k_energy(s, &params, &s64).map_err(e)?, k0));
    }
    ensure(drift < 1e-9, || format!("alpha = 0 control: K drifts by {drift:.2e}"))?;
    let control = measure_polynomial_decay(&traj, 1.0, f64::NAN).map_err(e)?;
    ensure(!control.pass, || "alpha = 0 control passed".into())?;
    Ok(format!(
        "sup tK / ceiling <= {worst_use:.2e} over 5 cells; refinement drift <= {worst_drift:.2e}; control K drift {drift:.1e}, fail"
    ))
}

fn case_boundary() -> Outcome {
    let spectrum = scaled_dirichlet(0.7, 12);
    let params = SystemParams::new(0.3, 1.0, 1.0, 0.0).map_err(e)?;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let s = random_state(&mut rng, 12);
        let kl = k_energy_case(&s, 1.0, &spectrum, BetaCase::Low).map_err(e)?;
        let kh = k_energy_case(&s, 1.0, &spectrum, BetaCase::High).map_err(e)?;
        let tl = tilde_e_case(&s, &params, &spectrum, BetaCase::Low).map_err(e)?;
        let th = tilde_e_case(&s, &params, &spectrum, BetaCase::High).map_err(e)?;
        let r = rel_err(kl, kh).max(rel_err(tl, th));
        worst = worst.max(r);
        ensure(r <= 1e-12, || format!("case formulas disagree by {r:.2e}"))?;
    }
    Ok(format!("K and tildeE agree at beta = 1 to {worst:.1e} over 1000 states"))
}

fn propagator_soundness() -> Outcome {
    let spectrum = dirichlet(16);
    let params = half_bound(&spectrum, 0.75);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let x = random_state(&mut rng, 16);
    let y = random_state(&mut rng, 16);

    // semigroup: k steps vs m steps over the same interval
    let a = run_trajectory(&x, &params, &spectrum, 3.0, 7).map_err(e)?;
    let b = run_trajectory(&x, &params, &spectrum, 3.0, 40).map_err(e)?;
    let semi = max_abs_diff(&flat(a.final_state()), &flat(b.final_state())) / max_abs(&flat(b.final_state()));
    ensure(semi <= 1e-10, || format!("semigroup mismatch {semi:.2e}"))?;

    // linearity
    let c = 2.75;
    let sum = ModalState::new(
        0.0,
        x.coeffs.iter().zip(&y.coeffs).map(|(p, q)| [0, 1, 2, 3].map(|i| p[i] + c * q[i])).collect(),
    )
    .map_err(e)?;
    let px = propagate(&x, &params, &spectrum, 1.3).map_err(e)?;
    let py = propagate(&y, &params, &spectrum, 1.3).map_err(e)?;
    let psum = propagate(&sum, &params, &spectrum, 1.3).map_err(e)?;
    let combo: Vec<f64> = flat(&px).iter().zip(flat(&py)).map(|(p, q)| p + c * q).collect();
    let lin = max_abs_diff(&flat(&psum), &combo) / max_abs(&combo);
    ensure(lin <= 1e-9, || format!("linearity mismatch {lin:.2e}"))?;

    // expm against Richardson-extrapolated RK4 on random matrices with ‖M‖ <= 100
    let mut worst = 0.0f64;
    for trial in 0..50 {
        let scale = [1.0, 10.0, 100.0][trial % 3];
        let raw = Mat4::from_fn(|_, _| rng.gen_range(-1.0..=1.0));
        let m = raw * (scale / raw.norm());
        let t = 2.0 / scale;
        let x0 = random_vec4(&mut rng);
        let exact = expm4(&m, t).map_err(e)? * nalgebra::Vector4::from(x0);
        let oracle = rk4_richardson(&m, &x0, t, 400);
        let err = max_abs_diff(exact.as_slice(), &oracle) / max_abs(&oracle);
        worst = worst.max(err);
    }
    ensure(worst <= 1e-9, || format!("expm vs RK4 Richardson {worst:.2e}"))?;
    Ok(format!("semigroup {semi:.1e}, linearity {lin:.1e}, expm vs RK4 {worst:.1e}"))
}

fn scalar_single_mode_equivalence() -> Outcome {
    let mut worst = 0.0f64;
    for &(lambda, beta) in &[(1.0, 0.5), (2.0, 1.0), (0.5, 1.5)] {
        let spectrum = Spectrum::new(vec![lambda], "single").map_err(e)?;
        let bound = coupling_bound(&spectrum, beta).map_err(e)?;
        let alpha = 0.6 * bound;
        let params = SystemParams::new(alpha, beta, 1.0, 0.0).map_err(e)?;
        let sp = ScalarParams::new(lambda, lambda * lambda, alpha * lambda.powf(beta)).map_err(e)?;
        let x0 = [0.8, -0.3, 0.1, 0.5];
        let a = simulate_scalar(&sp, &x0, 50.0, 5000).map_err(e)?;
        let b = run_trajectory(&ModalState::new(0.0, vec![x0]).map_err(e)?, &params, &spectrum, 50.0, 5000)
            .map_err(e)?;
        for (sa, sb) in a.states.iter().zip(&b.states) {
            worst = worst.max(max_abs_diff(sa, &sb.coeffs[0]));
        }
    }
    ensure(worst <= 1e-10, || format!("scalar and single-mode states differ by {worst:.2e}"))?;
    Ok(format!("max state difference {worst:.1e} over t in [0, 50]"))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 8] = [
        ("1 scalar exponential decay", scalar_exponential_decay),
        ("2 sandwich inequalities", sandwich_inequalities),
        ("3 energy identities", energy_identities),
        ("4 Lyapunov certificate", lyapunov_certificate),
        ("5 polynomial bound", polynomial_bound),
        ("6 case-boundary consistency", case_boundary),
        ("7 propagator soundness", propagator_soundness),
        ("8 scalar as single mode", scalar_single_mode_equivalence),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let outcome = check();
        let ms = 1e3 * start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail} [{ms:.0} ms]"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why} [{ms:.0} ms]");
            }
        }
    }
    println!("acceptance: {}/8 criteria passed", 8 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
