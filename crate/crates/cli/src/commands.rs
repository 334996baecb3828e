use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use cvqkd::keyrate::{
    asymptotic_key_rate, quantum_bob_rate, secret_key_rate, sweep_thresholds, KeyRateParams,
    KeyRateResult, SweepCell, Tolerances,
};
use cvqkd::protocol::{ChannelParams, ModulationVariance, ReconciliationDirection};
use cvqkd::simulation::{
    estimate_covariance_with, key_rate_from_estimate, sift, simulate_protocol, EstimationOptions,
};
use cvqkd::verification::{run_suite, CheckReport, SuiteConfig};

use crate::args::{EvalArgs, SelectionArgs, SimulateArgs, SweepArgs, ThresholdArgs, VerifyArgs};
use crate::table::{num, write_preamble, Table};
use crate::CliError;

const NOISE_NOTE: &str =
    "excess noise in shot-noise units referred to the channel input; rates in bits per retained symbol";

fn tolerances(rate: f64, noise: f64) -> Result<Tolerances, CliError> {
    Ok(Tolerances { rate, noise }.validate()?)
}

/// Writes to `--out` when given, otherwise to `stdout`.
fn emit(
    path: Option<&Path>,
    stdout: &mut dyn Write,
    body: impl FnOnce(&mut dyn Write) -> io::Result<()>,
) -> Result<(), CliError> {
    match path {
        Some(p) => {
            let file = File::create(p).map_err(|e| CliError::io(p, e))?;
            let mut w = BufWriter::new(file);
            body(&mut w)
                .and_then(|_| w.flush())
                .map_err(|e| CliError::io(p, e))
        }
        None => body(stdout).map_err(|e| CliError::io(Path::new("<stdout>"), e)),
    }
}

fn rate_row(protocol: &str, direction: &str, t: f64, eps: f64, r: &KeyRateResult) -> Vec<String> {
    vec![
        protocol.to_string(),
        direction.to_string(),
        num(t),
        num(eps),
        num(r.variance_used),
        num(r.beta),
        num(r.mutual_information),
        num(r.eve_holevo),
        num(r.key_rate),
        r.converged.to_string(),
    ]
}

pub fn eval(a: &EvalArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let channel = ChannelParams::new(a.transmittance, a.eps)?;
    let tol = tolerances(a.tol.rate_tol, a.tol.noise_tol)?;
    let result = if a.quantum_bob {
        if a.direction != ReconciliationDirection::Direct {
            return Err(CliError::Domain(
                "--quantum-bob bounds Alice's variable: use --direction dr".into(),
            ));
        }
        let Some(v) = a.variance else {
            return Err(CliError::Domain("--quantum-bob needs a finite --V".into()));
        };
        quantum_bob_rate(a.protocol, ModulationVariance::new(v)?, channel)?
    } else if let Some(v) = a.variance {
        let params = KeyRateParams::new(
            a.protocol,
            a.direction,
            ModulationVariance::new(v)?,
            channel,
            a.beta,
        )?;
        secret_key_rate(&params)?
    } else {
        asymptotic_key_rate(a.protocol, a.direction, channel, a.beta, &tol)?
    };
    let info = if a.quantum_bob { "chi_aB" } else { "I_ab" };
    let mut t = Table::new(
        "rate",
        [
            "protocol",
            "direction",
            "T",
            "eps",
            "V_used",
            "beta",
            info,
            "chi_E",
            "K",
            "converged",
        ]
        .map(String::from)
        .to_vec(),
    );
    t.config = vec![
        ("command", "eval".into()),
        ("protocol", a.protocol.name().into()),
        ("direction", a.direction.name().into()),
        ("T", num(a.transmittance)),
        ("eps", num(a.eps)),
        (
            "V",
            a.variance.map(num).unwrap_or_else(|| "asymptotic".into()),
        ),
        ("beta", num(a.beta)),
        ("quantum_bob", a.quantum_bob.to_string()),
        ("rate_tol", num(tol.rate)),
    ];
    t.notes.push(NOISE_NOTE.into());
    t.rows.push(rate_row(
        a.protocol.name(),
        a.direction.name(),
        a.transmittance,
        a.eps,
        &result,
    ));
    emit(a.output.out.as_deref(), stdout, |w| t.write(w))
}

fn threshold_table(
    command: &'static str,
    grid_echo: (&'static str, String),
    grid: &[f64],
    select: &SelectionArgs,
    tol: Tolerances,
) -> Result<Table, CliError> {
    let cells = sweep_thresholds(
        grid,
        &select.protocols.0,
        &select.directions.0,
        select.beta,
        &tol,
        0,
    )?;
    let protocols: Vec<&str> = select.protocols.0.iter().map(|p| p.name()).collect();
    let directions: Vec<&str> = select.directions.0.iter().map(|d| d.name()).collect();
    let mut t = if select.long {
        Table::new(
            "thresholds-long",
            [
                "T",
                "protocol",
                "direction",
                "eps_max",
                "K_at_zero_noise",
                "converged",
                "error",
            ]
            .map(String::from)
            .to_vec(),
        )
    } else {
        let mut header = vec!["T".to_string()];
        for p in &select.protocols.0 {
            for d in &select.directions.0 {
                header.push(format!("eps_max_{}_{}", p.name(), d.name()));
            }
        }
        Table::new("thresholds", header)
    };
    t.config = vec![
        ("command", command.into()),
        grid_echo,
        ("protocols", protocols.join(",")),
        ("directions", directions.join(",")),
        ("beta", num(select.beta)),
        ("V", "asymptotic".into()),
        ("rate_tol", num(tol.rate)),
        ("noise_tol", num(tol.noise)),
    ];
    t.notes.push(NOISE_NOTE.into());
    t.notes.push("eps_max is the largest excess noise with a strictly positive rate; 0 means no key even at zero noise".into());
    let label =
        |c: &SweepCell| format!("T={} {} {}", num(c.transmittance), c.protocol, c.direction);
    let mut unconverged = Vec::new();
    for c in &cells {
        match &c.outcome {
            Ok(th) if !th.converged => unconverged.push(label(c)),
            Err(e) => t.notes.push(format!("error at {}: {e}", label(c))),
            _ => {}
        }
    }
    if !unconverged.is_empty() {
        t.notes.push(format!(
            "{} cell(s) used the largest ladder variance without meeting rate_tol: {}",
            unconverged.len(),
            unconverged.join("; ")
        ));
    }
    if select.long {
        for c in &cells {
            let mut row = vec![
                num(c.transmittance),
                c.protocol.name().into(),
                c.direction.name().into(),
            ];
            match &c.outcome {
                Ok(th) => row.extend([
                    num(th.excess_noise),
                    num(th.rate_at_zero_noise),
                    th.converged.to_string(),
                    String::new(),
                ]),
                Err(e) => row.extend([
                    String::new(),
                    String::new(),
                    String::new(),
                    format!("\"{e}\""),
                ]),
            }
            t.rows.push(row);
        }
    } else {
        let width = select.protocols.0.len() * select.directions.0.len();
        for chunk in cells.chunks(width) {
            let mut row = vec![num(chunk[0].transmittance)];
            row.extend(chunk.iter().map(|c| match &c.outcome {
                Ok(th) => num(th.excess_noise),
                Err(_) => "error".into(),
            }));
            t.rows.push(row);
        }
    }
    Ok(t)
}

pub fn threshold(a: &ThresholdArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let tol = tolerances(a.tol.rate_tol, a.tol.noise_tol)?;
    let t = threshold_table(
        "threshold",
        ("T", num(a.transmittance)),
        &[a.transmittance],
        &a.select,
        tol,
    )?;
    emit(a.output.out.as_deref(), stdout, |w| t.write(w))
}

pub fn sweep(a: &SweepArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let tol = tolerances(a.tol.rate_tol, a.tol.noise_tol)?;
    let t = threshold_table(
        "sweep",
        ("grid", a.grid.spec.clone()),
        &a.grid.points,
        &a.select,
        tol,
    )?;
    emit(a.output.out.as_deref(), stdout, |w| t.write(w))
}

pub fn simulate(a: &SimulateArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let channel = ChannelParams::new(a.transmittance, a.eps)?;
    let variance = ModulationVariance::new(a.variance)?;
    let batch = simulate_protocol(a.protocol, channel, variance, a.n, a.seed)?;
    let config: Vec<(&'static str, String)> = vec![
        ("command", "simulate".into()),
        ("protocol", a.protocol.name().into()),
        ("T", num(a.transmittance)),
        ("eps", num(a.eps)),
        ("V", num(a.variance)),
        ("n", a.n.to_string()),
        ("seed", a.seed.to_string()),
        ("beta", num(a.beta)),
        ("fraction", num(a.fraction)),
    ];
    if let Some(path) = &a.batch_out {
        emit(Some(path), stdout, |w| {
            write_preamble(w, "batch", &config, &[NOISE_NOTE.to_string()])?;
            batch.write_csv(w)
        })?;
    }
    let sifted = sift(&batch);
    let est = estimate_covariance_with(
        &sifted,
        &EstimationOptions {
            fraction: a.fraction,
        },
    )?;
    let mut t = Table::new(
        "simulation",
        [
            "protocol",
            "direction",
            "rounds",
            "sifted",
            "used",
            "beta",
            "I_ab_est",
            "chi_E_est",
            "K_est",
            "I_ab_exact",
            "chi_E_exact",
            "K_exact",
        ]
        .map(String::from)
        .to_vec(),
    );
    t.config = config;
    t.notes.push(NOISE_NOTE.into());
    let g = est.cm.matrix();
    let se = &est.standard_errors;
    for i in 0..4 {
        let row: Vec<String> = (0..4)
            .map(|j| format!("{}±{}", num(g[(i, j)]), num(se[(i, j)])))
            .collect();
        t.notes
            .push(format!("gamma_hat row {i}: {}", row.join(" ")));
    }
    t.notes.push(format!(
        "smallest symplectic eigenvalue of gamma_hat: {}",
        num(est.min_symplectic_eigenvalue())
    ));
    for &d in &a.directions.0 {
        let r = key_rate_from_estimate(&est, &batch, d, a.beta)?;
        let exact = secret_key_rate(&KeyRateParams::new(
            a.protocol, d, variance, channel, a.beta,
        )?)?;
        t.rows.push(vec![
            a.protocol.name().into(),
            d.name().into(),
            batch.len().to_string(),
            sifted.len().to_string(),
            est.rounds.to_string(),
            num(a.beta),
            num(r.mutual_information),
            num(r.eve_holevo),
            num(r.key_rate),
            num(exact.mutual_information),
            num(exact.eve_holevo),
            num(exact.key_rate),
        ]);
    }
    emit(a.output.out.as_deref(), stdout, |w| t.write(w))
}

fn report_line(r: &CheckReport) -> String {
    format!(
        "{:<26} trials={} evaluations={} violations={} errors={} worst_margin={:e} worst_trial={} tolerance={:e} {}",
        r.name,
        r.trials,
        r.evaluations,
        r.violations,
        r.errors,
        r.worst_margin,
        r.worst_trial,
        r.tolerance,
        if r.passed() { "PASS" } else { "FAIL" }
    )
}

pub fn verify(a: &VerifyArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let mut config = SuiteConfig::new(a.seed);
    config.nu_max = a.nu_max;
    if let Some(n) = a.trials {
        config = config.with_trials(n);
    }
    let reports = run_suite(&config)?;
    let failed = reports.iter().filter(|r| !r.passed()).count();
    let violations: usize = reports.iter().map(|r| r.violations).sum();
    let errors: usize = reports.iter().map(|r| r.errors).sum();
    emit(a.output.out.as_deref(), stdout, |w| {
        writeln!(
            w,
            "# cvqkd {} verification seed={} nu_max={}",
            env!("CARGO_PKG_VERSION"),
            a.seed,
            num(a.nu_max)
        )?;
        for r in &reports {
            writeln!(w, "{}", report_line(r))?;
        }
        writeln!(
            w,
            "summary checks={} failed={failed} violations={violations} errors={errors} seed={} status={}",
            reports.len(),
            a.seed,
            if failed == 0 { "pass" } else { "fail" }
        )
    })?;
    if failed > 0 {
        return Err(CliError::Violation(format!(
            "{failed} verification check(s) failed"
        )));
    }
    Ok(())
}
