//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::process::{Command, ExitCode};
use std::time::Instant;

use cvqkd::gaussian::{entropy_function, two_mode_squeezed_cm};
use cvqkd::keyrate::{
    quantum_bob_rate, secret_key_rate, sweep_thresholds, KeyRateParams, SweepCell, Tolerances,
};
use cvqkd::protocol::{
    channel_output_cm, ChannelParams, ModulationVariance, Protocol, ReconciliationDirection,
};
use cvqkd::simulation::{estimate_covariance, key_rate_from_estimate, simulate_protocol};
use cvqkd::verification::{
    check_gaussification_invariance, check_holevo_inequality, check_product_additivity,
    check_super_additivity, CheckReport, PassiveNetwork, RandomStateSpec,
};
use cvqkd::{CovarianceMatrix64, Precise, Real};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ReconciliationDirection::{Direct, Reverse};

// Criterion 1
const DR_ONSET_NOISE: f64 = 1e-4;
const DR_ONSET_MIN: f64 = 0.49;
const DR_ONSET_MAX: f64 = 0.51;
const SWEEP_SECONDS: f64 = 60.0;
// Criterion 2
const RR_MONOTONE_TOL: f64 = 1e-3;
const RR_LOWEST_POINTS: usize = 5;
// Criterion 3
const DECOUPLED_CHI_TOL: f64 = 1e-9;
const DECOUPLED_RATE_TOL: f64 = 1e-9;
// Criterion 4
const ENTROPY_TOL: f64 = 1e-12;
const SPECTRUM_TOL: f64 = 1e-10;
// Criteria 5 to 7
const SUITE_SEED: u64 = 1;
const SUITE_NU_MAX: f64 = 5.0;
const HOLEVO_DRAWS: usize = 500;
const SUPER_ADDITIVITY_DRAWS: usize = 200;
const PRODUCT_DRAWS: usize = 50;
const GAUSSIFICATION_DRAWS: usize = 100;
// Criterion 8
const BETA_DRAWS: usize = 100;
const BETA_SEED: u64 = 8;
const AFFINE_TOL: f64 = 1e-12;
const QUANTUM_BOB_TOL: f64 = 1e-9;
// Criterion 9
const SIM_SEED: u64 = 1;
const SIM_ROUNDS: usize = 1_000_000;
const SIM_SE_MULTIPLE: f64 = 5.0;
const SIM_RATE_TOL: f64 = 0.02;
const SIM_SCALING_ROUNDS: [usize; 3] = [10_000, 100_000, 1_000_000];
const SIM_SLOPE_FACTOR: f64 = 3.0;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn channel(t: f64, eps: f64) -> ChannelParams {
    ChannelParams::new(t, eps).expect("valid channel")
}

fn variance(v: f64) -> ModulationVariance {
    ModulationVariance::new(v).expect("valid variance")
}

fn rate(
    p: Protocol,
    d: ReconciliationDirection,
    v: f64,
    ch: ChannelParams,
    beta: f64,
) -> cvqkd::Result<cvqkd::keyrate::KeyRateResult> {
    secret_key_rate(&KeyRateParams::new(p, d, variance(v), ch, beta)?)
}

/// Full 100-point grid T = 0.01, 0.02, …, 1.00, all protocols, both directions.
struct Sweep {
    grid: Vec<f64>,
    cells: Vec<SweepCell>,
    seconds: f64,
}

impl Sweep {
    fn run() -> cvqkd::Result<Self> {
        let grid: Vec<f64> = (1..=100).map(|k| k as f64 / 100.0).collect();
        let start = Instant::now();
        let cells = sweep_thresholds(
            &grid,
            &Protocol::ALL,
            &ReconciliationDirection::ALL,
            1.0,
            &Tolerances::default(),
            0,
        )?;
        Ok(Self {
            grid,
            cells,
            seconds: start.elapsed().as_secs_f64(),
        })
    }

    /// `(T, ε_max)` along the grid for one curve; `None` for failed cells.
    fn curve(&self, p: Protocol, d: ReconciliationDirection) -> Vec<(f64, Option<f64>)> {
        self.cells
            .iter()
            .filter(|c| c.protocol == p && c.direction == d)
            .map(|c| {
                (
                    c.transmittance,
                    c.outcome.as_ref().ok().map(|t| t.excess_noise),
                )
            })
            .collect()
    }
}

fn criterion_1(sweep: &Sweep) -> Outcome {
    let mut ok = sweep.seconds < SWEEP_SECONDS;
    let mut in_window = false;
    let mut parts = Vec::new();
    for p in Protocol::ALL {
        let curve = sweep.curve(p, Direct);
        if curve.iter().any(|(_, e)| e.is_none()) {
            ok = false;
            parts.push(format!("{p}: failed cells"));
            continue;
        }
        let onset = curve
            .iter()
            .find(|(_, e)| e.unwrap() > DR_ONSET_NOISE)
            .map(|(t, _)| *t);
        match onset {
            Some(t) => {
                ok &= t >= DR_ONSET_MIN;
                in_window |= (DR_ONSET_MIN..=DR_ONSET_MAX).contains(&t);
                parts.push(format!("{p}={t}"));
            }
            None => parts.push(format!("{p}=none")),
        }
    }
    outcome(
        ok && in_window,
        format!(
            "DR onsets {}; {} grid points in {:.2} s",
            parts.join(" "),
            sweep.grid.len(),
            sweep.seconds
        ),
    )
}

fn criterion_2(sweep: &Sweep) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for p in Protocol::ALL {
        let curve = sweep.curve(p, Reverse);
        let coarse: Vec<Option<f64>> = curve
            .iter()
            .filter(|(t, _)| {
                let k = (t * 100.0).round() as i64;
                k % 5 == 0 && (5..=95).contains(&k)
            })
            .map(|(_, e)| *e)
            .collect();
        let positive = coarse.len() == 19 && coarse.iter().all(|e| e.is_some_and(|e| e > 0.0));
        let lowest: Vec<f64> = curve[..RR_LOWEST_POINTS]
            .iter()
            .filter_map(|(_, e)| *e)
            .collect();
        let monotone = lowest.len() == RR_LOWEST_POINTS
            && lowest.windows(2).all(|w| w[1] >= w[0] - RR_MONOTONE_TOL);
        ok &= positive && monotone;
        parts.push(format!(
            "{p}: eps(0.05)={:.4} eps(0.01..0.05)={:?}",
            coarse[0].unwrap_or(f64::NAN),
            lowest
                .iter()
                .map(|e| (e * 1e4).round() / 1e4)
                .collect::<Vec<_>>()
        ));
    }
    outcome(ok, parts.join("; "))
}

fn criterion_3() -> Outcome {
    let mut ok = true;
    let mut worst_chi: f64 = 0.0;
    let mut worst_gap: f64 = 0.0;
    let perfect = channel(1.0, 0.0);
    for p in Protocol::ALL {
        for d in ReconciliationDirection::ALL {
            for v in [2.0, 10.0, 1e4] {
                for beta in [1.0, 0.9] {
                    match rate(p, d, v, perfect, beta) {
                        Ok(r) => {
                            worst_chi = worst_chi.max(r.eve_holevo.abs());
                            worst_gap =
                                worst_gap.max((r.key_rate - beta * r.mutual_information).abs());
                        }
                        Err(_) => ok = false,
                    }
                }
            }
        }
    }
    ok &= worst_chi < DECOUPLED_CHI_TOL && worst_gap < DECOUPLED_RATE_TOL;
    let fixture = rate(Protocol::COHERENT_HOMODYNE, Direct, 2.0, perfect, 1.0)
        .map(|r| r.key_rate)
        .unwrap_or(f64::NAN);
    ok &= (fixture - 0.5).abs() < DECOUPLED_RATE_TOL;
    outcome(
        ok,
        format!("max chi_E={worst_chi:e} max |K-beta*I|={worst_gap:e} coherent-homodyne V=2 K={fixture}"),
    )
}

fn criterion_4() -> Outcome {
    let g1 = entropy_function(1.0f64);
    let g3 = entropy_function(3.0f64);
    let mut ok = g1.abs() < ENTROPY_TOL && (g3 - 2.0).abs() < ENTROPY_TOL;
    let mut worst: f64 = 0.0;
    for v in [1.0, 2.0, 10.0] {
        match two_mode_squeezed_cm(v).and_then(|cm: CovarianceMatrix64| cm.symplectic_eigenvalues())
        {
            Ok(nu) => worst = nu.iter().fold(worst, |w, n| w.max((n - 1.0).abs())),
            Err(_) => ok = false,
        }
    }
    // V = 10⁴ needs more than double precision to resolve ν = 1 to 1e-10
    match two_mode_squeezed_cm(Precise::lit(1e4)).and_then(|cm| cm.symplectic_eigenvalues()) {
        Ok(nu) => {
            worst = nu
                .iter()
                .fold(worst, |w, n| w.max((n.to_f64_lossy() - 1.0).abs()))
        }
        Err(_) => ok = false,
    }
    ok &= worst < SPECTRUM_TOL;
    outcome(
        ok,
        format!("g(1)={g1:e} g(3)-2={:e} max |nu-1|={worst:e}", g3 - 2.0),
    )
}

fn report_outcome(reports: &[cvqkd::Result<CheckReport>]) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for r in reports {
        match r {
            Ok(r) => {
                ok &= r.passed();
                parts.push(format!(
                    "{} trials={} violations={} errors={} worst_margin={:e}",
                    r.name, r.trials, r.violations, r.errors, r.worst_margin
                ));
            }
            Err(e) => {
                ok = false;
                parts.push(format!("error: {e}"));
            }
        }
    }
    outcome(ok, parts.join("; "))
}

fn suite_spec(n_modes: usize) -> RandomStateSpec {
    RandomStateSpec::new(n_modes, SUITE_NU_MAX, SUITE_SEED).expect("valid spec")
}

fn criterion_5() -> Outcome {
    report_outcome(&[check_holevo_inequality(HOLEVO_DRAWS, &suite_spec(2))])
}

fn criterion_6() -> Outcome {
    report_outcome(&[
        check_super_additivity(SUPER_ADDITIVITY_DRAWS, &suite_spec(4)),
        check_product_additivity(PRODUCT_DRAWS, &suite_spec(2)),
    ])
}

fn criterion_7() -> Outcome {
    report_outcome(&[check_gaussification_invariance(
        GAUSSIFICATION_DRAWS,
        &suite_spec(2),
        &PassiveNetwork::balanced_pair(),
    )])
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(BETA_SEED);
    let mut worst_affine: f64 = 0.0;
    let mut worst_dominance = f64::INFINITY;
    let mut errors = 0;
    for _ in 0..BETA_DRAWS {
        let p = Protocol::ALL[rng.gen_range(0..4)];
        let d = ReconciliationDirection::ALL[rng.gen_range(0..2)];
        let ch = channel(rng.gen_range(0.05..=1.0), rng.gen_range(0.0..0.2));
        let v = 10f64.powf(rng.gen_range(0.1..3.0));
        let (b1, b2) = (rng.gen_range(0.0..=1.0), rng.gen_range(0.0..=1.0));
        let (Ok(r1), Ok(r2), Ok(full), Ok(qb)) = (
            rate(p, d, v, ch, b1),
            rate(p, d, v, ch, b2),
            rate(p, Direct, v, ch, 1.0),
            quantum_bob_rate(p, variance(v), ch),
        ) else {
            errors += 1;
            continue;
        };
        let slope_err = (r1.key_rate - r2.key_rate) - (b1 - b2) * r1.mutual_information;
        worst_affine = worst_affine.max(slope_err.abs());
        worst_dominance = worst_dominance.min(qb.key_rate - full.key_rate);
    }
    outcome(
        errors == 0 && worst_affine < AFFINE_TOL && worst_dominance >= -QUANTUM_BOB_TOL,
        format!(
            "draws={BETA_DRAWS} errors={errors} max affine residual={worst_affine:e} min(K_quantum_bob - K_dr)={worst_dominance:e}"
        ),
    )
}

fn max_entry_error(
    est: &cvqkd::simulation::EstimatedCovariance,
    truth: &CovarianceMatrix64,
) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            worst = worst.max((est.cm.matrix()[(i, j)] - truth.matrix()[(i, j)]).abs());
        }
    }
    worst
}

/// Least-squares slope of `log err` against `log n`.
fn log_log_slope(points: &[(usize, f64)]) -> f64 {
    let xs: Vec<f64> = points.iter().map(|(n, _)| (*n as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|(_, e)| e.ln()).collect();
    let mx = xs.iter().sum::<f64>() / xs.len() as f64;
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn criterion_9() -> Outcome {
    let (t, eps, v, beta) = (0.8, 0.01, 10.0, 0.95);
    let ch = channel(t, eps);
    let truth: CovarianceMatrix64 = channel_output_cm(variance(v), ch);
    let mut ok = true;
    let mut parts = Vec::new();
    for p in Protocol::ALL {
        let mut run = || -> cvqkd::Result<String> {
            let batch = simulate_protocol(p, ch, variance(v), SIM_ROUNDS, SIM_SEED)?;
            let est = estimate_covariance(&batch)?;
            let mut worst_z: f64 = 0.0;
            for i in 0..4 {
                for j in 0..4 {
                    let z = (est.cm.matrix()[(i, j)] - truth.matrix()[(i, j)]).abs()
                        / est.standard_errors[(i, j)];
                    worst_z = worst_z.max(z);
                }
            }
            let k_est = key_rate_from_estimate(&est, &batch, Reverse, beta)?.key_rate;
            let k_true = rate(p, Reverse, v, ch, beta)?.key_rate;
            let scaling = SIM_SCALING_ROUNDS
                .iter()
                .map(|&n| {
                    let b = simulate_protocol(p, ch, variance(v), n, SIM_SEED)?;
                    Ok((n, max_entry_error(&estimate_covariance(&b)?, &truth)))
                })
                .collect::<cvqkd::Result<Vec<_>>>()?;
            let slope = log_log_slope(&scaling);
            let slope_ok = (-0.5 * SIM_SLOPE_FACTOR..=-0.5 / SIM_SLOPE_FACTOR).contains(&slope);
            let pass =
                worst_z <= SIM_SE_MULTIPLE && (k_est - k_true).abs() <= SIM_RATE_TOL && slope_ok;
            ok &= pass;
            Ok(format!(
                "{p}: max z={worst_z:.2} K_est-K={:+.4} slope={slope:.3}",
                k_est - k_true
            ))
        };
        match run() {
            Ok(s) => parts.push(s),
            Err(e) => {
                ok = false;
                parts.push(format!("{p}: error {e}"));
            }
        }
    }
    outcome(ok, parts.join("; "))
}

fn cli_output(args: &[&str]) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_cvqkd"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!(
            "{args:?} exited with {}: {}",
            out.status,
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    Ok(out.stdout)
}

fn criterion_10() -> Outcome {
    let dir = match tempfile::tempdir() {
        Ok(d) => d,
        Err(e) => return outcome(false, e.to_string()),
    };
    let batch = |k: usize| dir.path().join(format!("batch{k}.csv"));
    let runs: Vec<Vec<String>> = vec![
        ["sweep", "--grid", "0.05:0.95:0.05"]
            .map(String::from)
            .to_vec(),
        [
            "simulate",
            "--protocol",
            "squeezed-homodyne",
            "--T",
            "0.8",
            "--eps",
            "0.01",
            "--V",
            "10",
            "--n",
            "200000",
            "--seed",
            "3",
            "--beta",
            "0.95",
        ]
        .map(String::from)
        .to_vec(),
        ["verify", "--seed", "5", "--trials", "20"]
            .map(String::from)
            .to_vec(),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for args in &runs {
        let variants: Vec<Vec<String>> = [None, Some("1"), Some("3")]
            .iter()
            .map(|jobs| {
                let mut a = args.clone();
                if let Some(j) = jobs {
                    a.extend(["--jobs".to_string(), j.to_string()]);
                }
                a
            })
            .collect();
        let outputs: Vec<Result<Vec<u8>, String>> = variants
            .iter()
            .map(|a| cli_output(&a.iter().map(String::as_str).collect::<Vec<_>>()))
            .collect();
        let same = match &outputs[0] {
            Ok(first) => outputs.iter().all(|o| o.as_ref().is_ok_and(|o| o == first)),
            Err(_) => false,
        };
        ok &= same;
        parts.push(format!(
            "{}: {}",
            args[0],
            if same { "identical" } else { "differs" }
        ));
    }
    let sim = |k: usize| {
        cli_output(&[
            "simulate",
            "--protocol",
            "coherent-heterodyne",
            "--T",
            "0.5",
            "--V",
            "4",
            "--n",
            "100000",
            "--seed",
            "9",
            "--batch-out",
            batch(k).to_str().unwrap(),
        ])
        .and_then(|_| std::fs::read(batch(k)).map_err(|e| e.to_string()))
    };
    let batches_same = matches!((sim(0), sim(1)), (Ok(a), Ok(b)) if a == b);
    ok &= batches_same;
    parts.push(format!(
        "batch csv: {}",
        if batches_same { "identical" } else { "differs" }
    ));
    outcome(ok, parts.join("; "))
}

fn main() -> ExitCode {
    let sweep = Sweep::run();
    let mut results: Vec<(&str, Outcome)> = Vec::new();
    match &sweep {
        Ok(s) => {
            results.push(("1 DR boundary", criterion_1(s)));
            results.push(("2 RR behaviour", criterion_2(s)));
        }
        Err(e) => {
            results.push(("1 DR boundary", outcome(false, e.to_string())));
            results.push(("2 RR behaviour", outcome(false, e.to_string())));
        }
    }
    results.push(("3 decoupled Eve", criterion_3()));
    results.push(("4 entropy and spectrum", criterion_4()));
    results.push(("5 Holevo bound", criterion_5()));
    results.push(("6 super-additivity", criterion_6()));
    results.push(("7 Gaussification invariance", criterion_7()));
    results.push(("8 beta properties", criterion_8()));
    results.push(("9 simulation and estimation", criterion_9()));
    results.push(("10 determinism", criterion_10()));

    let failed = results.iter().filter(|(_, o)| !o.passed).count();
    for (name, o) in &results {
        println!(
            "{} {name}: {}",
            if o.passed { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        results.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
