//! `mmc` — command-line front end: closed-loop runs, harmonic-analysis
//! tables, open-loop model verification and amplitude sweeps.
//!
//! Exit codes: 0 success, 1 configuration error, 2 diverged simulation,
//! 3 infeasible operating point, 4 verification threshold breach.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use mmc_core::controller::constant_reference_for;
use mmc_core::harmonic;
use mmc_core::sim::{self, compare_traces, seeded_gate_sequence};
use mmc_core::{analysis, sweep};
use mmc_core::{
    load_scenario, run_closed_loop, ConverterParams, Error, FullState, ReferenceMode, Scenario,
    Trace,
};

#[derive(Parser)]
#[command(name = "mmc", about = "Modular multilevel converter simulator and control toolkit")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a closed-loop scenario and write trace + metrics files.
    Run(RunArgs),
    /// Print the closed-form harmonic-analysis table for an operating point.
    Analyze(AnalyzeArgs),
    /// Verify the switched model against the high-resolution oracle.
    Verify(VerifyArgs),
    /// Sweep load-current amplitudes and compare reference modes.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file; omit for the built-in default scenario.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Reference mode: optimal, constant:VALUE, or both (paired comparison).
    #[arg(long)]
    reference: Option<String>,
    /// Override the run duration [s].
    #[arg(long)]
    duration: Option<f64>,
    /// Override the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Scenario file providing the converter parameters.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Also write harmonic_table.txt into this directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Load-current amplitude IaM [A].
    #[arg(long, default_value_t = 1.5)]
    ia_m: f64,
    /// Circulating-voltage amplitude VdM [V].
    #[arg(long, default_value_t = 0.0)]
    vd_m: f64,
    /// Circulating-voltage offset Vd0 [V]; defaults to the boundary Vd0-.
    #[arg(long)]
    vd0: Option<f64>,
    /// Circulating-voltage phase alphaVd [rad].
    #[arg(long, default_value_t = 0.0)]
    alpha_vd: f64,
    /// Use the most effective phase alphaVd = -gamma.
    #[arg(long)]
    at_gamma: bool,
}

#[derive(Args)]
struct VerifyArgs {
    /// Scenario file providing parameters; omit for the verification setup
    /// (3 capacitors per arm, 110 V initial).
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long, default_value_t = 0.5)]
    duration: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Oracle refinement (inner steps per control period).
    #[arg(long, default_value_t = 100)]
    refinement: usize,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Comma-separated amplitudes [A].
    #[arg(long, default_value = "0.75,1.5,3,6,9")]
    amplitudes: String,
    /// Constant-mode reference [V]; defaults to the optimal value at the
    /// largest swept amplitude.
    #[arg(long)]
    constant_ref: Option<f64>,
    /// Force the sequential runner.
    #[arg(long)]
    serial: bool,
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Diverged { .. } => 2,
        Error::InfeasibleOperatingPoint { .. } => 3,
        _ => 1,
    }
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Run(a) => cmd_run(a),
        Cmd::Analyze(a) => cmd_analyze(a),
        Cmd::Verify(a) => cmd_verify(a),
        Cmd::Sweep(a) => cmd_sweep(a),
    };
    match result {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(exit_code(&e));
        }
    }
}

fn load_or_default(path: &Option<PathBuf>) -> Result<Scenario, Error> {
    match path {
        Some(p) => load_scenario(p),
        None => Ok(Scenario::table2()),
    }
}

/// One metric window per schedule segment: the last whole period before the
/// segment (or run) ends.
fn metric_windows(sc: &Scenario) -> Vec<(String, f64, f64)> {
    let period = 2.0 * std::f64::consts::PI / sc.params.omega;
    let mut out = Vec::new();
    for (i, &(start, amp)) in sc.schedule.entries.iter().enumerate() {
        let end = sc
            .schedule
            .entries
            .get(i + 1)
            .map_or(sc.duration, |e| e.0)
            .min(sc.duration);
        let t1 = (end / period).floor() * period;
        let t0 = t1 - period;
        if t0 >= start - 1e-12 && t0 >= 0.0 {
            out.push((format!("IaM={amp}A"), t0, t1));
        }
    }
    out
}

fn run_one(sc: &Scenario, mode: ReferenceMode) -> Result<Trace, Error> {
    let mut sc = sc.clone();
    sc.reference_mode = mode;
    run_closed_loop(&sc)
}

fn append_metrics(
    txt: &mut String,
    csv: &mut String,
    label: &str,
    sc: &Scenario,
    trace: &Trace,
) -> Result<Vec<analysis::MetricReport>, Error> {
    let mut reports = Vec::new();
    for (seg, t0, t1) in metric_windows(sc) {
        let m = analysis::report(trace, t0, t1, sc.params.omega)?;
        writeln!(
            txt,
            "{label:<10} {seg:<12} window [{t0:.3}, {t1:.3}) s  RMS(eIa) = {:.3} mA  \
             max|eIa| = {:.3} mA  A1 = {:.4} A  THD = {:.5}  avg(spec) = {:.5} A",
            m.rms_e_ia * 1e3,
            m.max_abs_e_ia * 1e3,
            m.fundamental_amplitude,
            m.thd,
            m.avg_spectrum
        )
        .unwrap();
        writeln!(
            csv,
            "{label},{seg},{t0},{t1},{},{},{},{},{}",
            m.rms_e_ia, m.max_abs_e_ia, m.fundamental_amplitude, m.thd, m.avg_spectrum
        )
        .unwrap();
        reports.push(m);
    }
    Ok(reports)
}

fn cmd_run(args: RunArgs) -> Result<i32, Error> {
    let mut sc = load_or_default(&args.scenario)?;
    if let Some(d) = args.duration {
        sc.duration = d;
    }
    if let Some(s) = args.seed {
        sc.seed = s;
    }
    std::fs::create_dir_all(&args.out)?;

    let mut txt = String::new();
    let mut csv = String::from(
        "mode,segment,window_start,window_end,rms_e_ia,max_abs_e_ia,fundamental,thd,avg_spectrum\n",
    );

    let reference = args.reference.as_deref().unwrap_or("scenario");
    if reference == "both" {
        let constant =
            constant_reference_for(&sc.params, sc.schedule.max_amplitude())?;
        let opt_trace = run_one(&sc, ReferenceMode::Optimal)?;
        let con_trace = run_one(&sc, ReferenceMode::Constant(constant))?;
        opt_trace.write_csv(&args.out.join("trace_optimal.csv"))?;
        con_trace.write_csv(&args.out.join("trace_constant.csv"))?;
        writeln!(txt, "reference comparison (constant mode pinned at {constant:.2} V)\n").unwrap();
        let opt = append_metrics(&mut txt, &mut csv, "optimal", &sc, &opt_trace)?;
        let con = append_metrics(&mut txt, &mut csv, "constant", &sc, &con_trace)?;
        txt.push('\n');
        for ((o, c), (seg, ..)) in opt.iter().zip(&con).zip(metric_windows(&sc)) {
            writeln!(
                txt,
                "{seg:<12} RMS change {:+.2} %  max change {:+.2} %",
                (o.rms_e_ia / c.rms_e_ia - 1.0) * 100.0,
                (o.max_abs_e_ia / c.max_abs_e_ia - 1.0) * 100.0
            )
            .unwrap();
        }
    } else {
        if reference != "scenario" {
            sc.reference_mode = mmc_core::scenario::parse_reference_mode(reference)?;
        }
        let trace = run_closed_loop(&sc)?;
        trace.write_csv(&args.out.join("trace.csv"))?;
        let label = match sc.reference_mode {
            ReferenceMode::Optimal => "optimal",
            ReferenceMode::Constant(_) => "constant",
        };
        append_metrics(&mut txt, &mut csv, label, &sc, &trace)?;
    }

    std::fs::write(args.out.join("metrics.txt"), &txt)?;
    std::fs::write(args.out.join("metrics.csv"), &csv)?;
    print!("{txt}");
    Ok(0)
}

fn cmd_analyze(args: AnalyzeArgs) -> Result<i32, Error> {
    let sc = load_or_default(&args.scenario)?;
    let p = sc.params;
    let mut spec = mmc_core::HarmonicSpec {
        vd0: args.vd0.unwrap_or(0.0),
        vd_m: args.vd_m,
        alpha_vd: args.alpha_vd,
        ia_m: args.ia_m,
        va_m: p.va_m,
        alpha_va: p.alpha_va,
        omega: p.omega,
    };
    // Two-pass: the boundary and gamma depend only on (IaM, VdM), so they
    // can seed the defaults.
    let first = harmonic::analyze(&p, &spec)?;
    if args.vd0.is_none() {
        spec.vd0 = first.vd0_minus;
    }
    if args.at_gamma {
        spec.alpha_vd = harmonic::normalize_phase(-first.gamma);
    }
    let a = harmonic::analyze(&p, &spec)?;

    let mut table = String::new();
    writeln!(table, "operating point: IaM = {} A, VdM = {} V, Vd0 = {} V, alphaVd = {} rad",
        spec.ia_m, spec.vd_m, spec.vd0, spec.alpha_vd).unwrap();
    let rows: [(&str, f64); 12] = [
        ("fM [V]", a.f_m),
        ("alphaF [rad]", a.alpha_f),
        ("alphaLR [rad]", a.alpha_lr),
        ("IdM [A]", a.id_m),
        ("Id0 [A]", a.id0),
        ("C0 [V^2]", a.c0),
        ("Vd0- [V]", a.vd0_minus),
        ("Vd0+ [V]", a.vd0_plus),
        ("gamma [rad]", a.gamma),
        ("beta [rad]", a.beta),
        ("P10 [W]", a.p10),
        ("P20 [W]", a.p20),
    ];
    for (name, value) in rows {
        writeln!(table, "{name:<14} {value:>14.6}").unwrap();
    }
    if let Some(out) = &args.out {
        std::fs::create_dir_all(out)?;
        std::fs::write(out.join("harmonic_table.txt"), &table)?;
    }
    print!("{table}");
    Ok(0)
}

fn verify_params(path: &Option<PathBuf>) -> Result<(ConverterParams, f64), Error> {
    match path {
        Some(p) => {
            let sc = load_scenario(p)?;
            Ok((sc.params, sc.initial.vc1_mean()))
        }
        None => Ok((ConverterParams::table1(), 110.0)),
    }
}

fn cmd_verify(args: VerifyArgs) -> Result<i32, Error> {
    let (params, vc0) = verify_params(&args.scenario)?;
    let steps = (args.duration / params.ts).round() as usize;
    let gates = seeded_gate_sequence(&params, vc0, steps, args.seed)?;
    let initial = FullState::uniform(params.n, vc0);
    let main_run = sim::run_open_loop(&params, &gates, &initial)?;
    let oracle = sim::run_oracle(&params, &gates, &initial, args.refinement)?;
    let d = compare_traces(&main_run, &oracle)?;

    const VC_LIMIT: f64 = 15e-3;
    const CURRENT_LIMIT: f64 = 20e-3;
    const ARM_LIMIT: f64 = 40e-3;
    println!(
        "open-loop verification over {} s, seed {}, oracle refinement {}x",
        args.duration, args.seed, args.refinement
    );
    println!("max |dVc|    = {:.3e} V (limit {VC_LIMIT} V)", d.vc);
    println!("max |dI|     = {:.3e} A (limit {CURRENT_LIMIT} A)", d.current);
    println!("max |dV1,V2| = {:.3e} V (limit {ARM_LIMIT} V)", d.arm_voltage);

    let breaches: Vec<(&str, f64, f64)> = [
        ("capacitor voltage", d.vc, VC_LIMIT),
        ("current", d.current, CURRENT_LIMIT),
        ("arm voltage", d.arm_voltage, ARM_LIMIT),
    ]
    .into_iter()
    .filter(|(_, v, lim)| v > lim)
    .collect();
    if let Some((name, v, lim)) = breaches
        .iter()
        .max_by(|a, b| (a.1 / a.2).partial_cmp(&(b.1 / b.2)).unwrap())
    {
        println!("FAIL: worst signal is {name}: {v:.3e} exceeds {lim} by {:.1}x", v / lim);
        return Ok(4);
    }
    println!("PASS");
    Ok(0)
}

fn cmd_sweep(args: SweepArgs) -> Result<i32, Error> {
    let sc = load_or_default(&args.scenario)?;
    let amplitudes: Vec<f64> = args
        .amplitudes
        .split(',')
        .map(|s| {
            s.trim().parse().map_err(|e| Error::Parse {
                context: "amplitudes".into(),
                message: format!("bad amplitude {s:?}: {e}"),
            })
        })
        .collect::<Result<_, _>>()?;
    if amplitudes.is_empty() {
        return Err(Error::InvalidInput("amplitude list is empty".into()));
    }
    let max = amplitudes.iter().cloned().fold(0.0, f64::max);
    let constant = match args.constant_ref {
        Some(v) => v,
        None => constant_reference_for(&sc.params, max)?,
    };
    let points = sweep::amplitude_grid(&amplitudes, constant);
    let rows = if args.serial {
        sweep::run_sweep_serial(&sc, &points)?
    } else {
        sweep::run_sweep(&sc, &points)?
    };

    std::fs::create_dir_all(&args.out)?;
    let mut csv = String::from("amplitude,reference,rms_e_ia,max_abs_e_ia,thd\n");
    for r in &rows {
        let mode = match r.point.reference {
            ReferenceMode::Optimal => "optimal".to_string(),
            ReferenceMode::Constant(v) => format!("constant:{v:.2}"),
        };
        println!(
            "IaM = {:>5.2} A  {mode:<16} RMS(eIa) = {:7.3} mA  max|eIa| = {:7.3} mA  THD = {:.5}",
            r.point.amplitude,
            r.rms_e_ia * 1e3,
            r.max_abs_e_ia * 1e3,
            r.thd
        );
        writeln!(
            csv,
            "{},{mode},{},{},{}",
            r.point.amplitude, r.rms_e_ia, r.max_abs_e_ia, r.thd
        )
        .unwrap();
    }
    std::fs::write(args.out.join("sweep.csv"), &csv)?;
    Ok(0)
}
