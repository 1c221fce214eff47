//! One function per subcommand. Each validates its inputs, runs, and
//! returns the rendered output together with any verification failure.

use std::f64::consts::PI;

use qframe_core::basis::{basis_report, describe_entry, pauli_string_basis, StructureEntry};
use qframe_core::bounds::{bounds, sequence_bounds_valid};
use qframe_core::extraction::{compile_decoherence, run_extraction_with, ExtractionOptions};
use qframe_core::frame::{run_protocol, ProtocolConfig};
use qframe_core::spin::{conservation_residual, TripleProduct};
use qframe_core::{Axis, Spin};
use serde_json::{json, Map, Value};

use crate::cli::{BasisArgs, BoundsArgs, Command, ConserveArgs, ExtractArgs, Format, PartArg, RotateArgs, SweepArgs};
use crate::error::AppResult;
use crate::report::{bounds_json, ledger_json, matrix_json, sweep_csv, vec3_json, verdict_json, Report};
use crate::sweep::{error_slope, run_sweep, SweepConfig};

/// Extraction conservation and conservation-command tolerances.
pub const EXTRACTION_CONSERVATION_TOL: f64 = 1e-8;
pub const CONSERVATION_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct Output {
    pub text: String,
    pub warnings: Vec<String>,
    /// Set when a checked bound failed although its preconditions held.
    pub failure: Option<String>,
}

pub fn run(command: &Command) -> AppResult<Output> {
    match command {
        Command::Rotate(args) => rotate(args),
        Command::Sweep(args) => sweep(args),
        Command::Extract(args) => extract(args),
        Command::Bounds(args) => bounds_cmd(args),
        Command::Basis(args) => basis(args),
        Command::Conserve(args) => conserve(args),
    }
}

fn parse_spin(s: f64) -> AppResult<Spin> {
    Ok(Spin::new(s)?)
}

fn check_iterations(n: usize) -> AppResult<()> {
    if n == 0 {
        return Err(qframe_core::Error::ZeroIterations.into());
    }
    Ok(())
}

fn sequence_warning(n: usize) -> Option<String> {
    (!sequence_bounds_valid(n))
        .then(|| format!("N = {n} is below 36*pi (~113.1); the whole-protocol bounds are not guaranteed"))
}

fn render(report: &Report, format: Format) -> String {
    match format {
        Format::Json => report.to_json_string(),
        Format::Csv => report.to_kv_csv(),
    }
}

fn failed_flags(passes: &Value) -> Vec<String> {
    passes
        .as_object()
        .map(|m| m.iter().filter(|(_, v)| **v == Value::Bool(false)).map(|(k, _)| k.clone()).collect())
        .unwrap_or_default()
}

pub fn rotate(args: &RotateArgs) -> AppResult<Output> {
    let spin = parse_spin(args.spin)?;
    check_iterations(args.iterations)?;
    let config = ProtocolConfig {
        spin,
        iterations: args.iterations,
        alpha: args.alpha,
        initial_state: args.state.resolve(spin, args.seed)?,
    };
    config.validate()?;
    let result = run_protocol(&config)?;

    let report = Report {
        command: "rotate",
        config: json!({
            "s": spin.value(),
            "alpha": args.alpha,
            "N": args.iterations,
            "state": args.state.to_string(),
            "seed": args.seed,
        }),
        results: json!({
            "error_trace_norm": result.error_trace_norm,
            "system_delta": vec3_json(result.system_delta),
            "ledger": ledger_json(&result.ledger),
            "separation": {
                "diagonal": vec3_json(result.separation.diagonal),
                "off": result.separation.off,
            },
            "rho_final": matrix_json(result.rho_final.matrix()),
        }),
        bounds: bounds_json(&result.bounds),
        passes: verdict_json(&result.passes),
    };
    let text = match args.output.format.unwrap_or(Format::Json) {
        Format::Json => report.to_json_string(),
        Format::Csv => {
            sweep_csv(&[crate::report::SweepRow::from_result(args.iterations, args.seed, &result)], None)
        }
    };
    let preconditions = result.bounds.step_valid && result.bounds.sequence_valid;
    let failure = (preconditions && !result.passes.all())
        .then(|| format!("bound exceeded: {}", failed_flags(&report.passes).join(", ")));
    Ok(Output { text, warnings: sequence_warning(args.iterations).into_iter().collect(), failure })
}

pub fn sweep(args: &SweepArgs) -> AppResult<Output> {
    let config = SweepConfig {
        spin: parse_spin(args.spin)?,
        alpha: args.alpha,
        iterations: args.iterations.clone(),
        seeds: args.seeds.clone(),
        state: args.state.clone(),
    };
    let points = run_sweep(&config)?;
    let slope = error_slope(&points);
    let rows: Vec<_> = points.iter().map(|p| p.row()).collect();

    let failing: Vec<String> = points
        .iter()
        .filter(|p| p.result.bounds.step_valid && p.result.bounds.sequence_valid && !p.result.passes.all())
        .map(|p| format!("N={} seed={}", p.iterations, p.seed))
        .collect();
    let text = match args.output.format.unwrap_or(Format::Csv) {
        Format::Csv => sweep_csv(&rows, slope),
        Format::Json => {
            let results: Vec<Value> = points
                .iter()
                .map(|p| {
                    json!({
                        "N": p.iterations,
                        "seed": p.seed,
                        "error_trace_norm": p.result.error_trace_norm,
                        "separation": {
                            "diagonal": vec3_json(p.result.separation.diagonal),
                            "off": p.result.separation.off,
                        },
                        "ledger": ledger_json(&p.result.ledger),
                    })
                })
                .collect();
            let bound_list: Vec<Value> = points
                .iter()
                .filter(|p| p.seed == config.seeds[0])
                .map(|p| {
                    let mut b = bounds_json(&p.result.bounds);
                    b["N"] = json!(p.iterations);
                    b
                })
                .collect();
            let pass_list: Vec<Value> = points
                .iter()
                .map(|p| json!({"N": p.iterations, "seed": p.seed, "flags": verdict_json(&p.result.passes)}))
                .collect();
            Report {
                command: "sweep",
                config: json!({
                    "s": config.spin.value(),
                    "alpha": config.alpha,
                    "N": config.iterations,
                    "seeds": config.seeds,
                    "state": config.state.to_string(),
                }),
                results: json!({ "runs": results, "slope": slope }),
                bounds: json!(bound_list),
                passes: json!(pass_list),
            }
            .to_json_string()
        }
    };
    let warnings = config.iterations.iter().filter_map(|&n| sequence_warning(n)).take(1).collect();
    let failure = (!failing.is_empty()).then(|| format!("bound exceeded at {}", failing.join("; ")));
    Ok(Output { text, warnings, failure })
}

fn part(arg: PartArg) -> Axis {
    match arg {
        PartArg::X => Axis::X,
        PartArg::Y => Axis::Y,
        PartArg::Z => Axis::Z,
    }
}

pub fn extract(args: &ExtractArgs) -> AppResult<Output> {
    check_iterations(args.iterations)?;
    let rho = args.state.resolve(Spin::HALF, args.seed)?;
    let options = ExtractionOptions { iterations: args.iterations, ancilla_part: part(args.ancilla_part) };
    let result = run_extraction_with(&rho, &options)?;
    let gates = compile_decoherence()?;

    let total = result.ledger.total();
    let conservation = (0..3).map(|k| (result.system_delta[k] + total[k]).abs()).fold(0.0, f64::max);
    let mut targets = Map::new();
    for p in Axis::ALL {
        targets.insert(p.label().to_string(), vec3_json(result.target_gains[p.index()]));
    }
    let report = Report {
        command: "extract",
        config: json!({
            "N": args.iterations,
            "state": args.state.to_string(),
            "seed": args.seed,
            "ancilla_part": options.ancilla_part.label().to_string(),
            "gates": gates.len(),
        }),
        results: json!({
            "ledger": ledger_json(&result.ledger),
            "target_gains": Value::Object(targets),
            "designated_deviation": result.designated_deviation(),
            "off_target_max": result.off_target_max(),
            "system_marginal_distance": result.marginal_distance()?,
            "ancilla_marginal_distance": result.ancilla_distance()?,
            "system_delta": vec3_json(result.system_delta),
            "ancilla_delta": vec3_json(result.ancilla_delta),
            "conservation_residual": conservation,
            "system_marginal": matrix_json(result.system_marginal.matrix()),
        }),
        bounds: json!({ "conservation": EXTRACTION_CONSERVATION_TOL }),
        passes: json!({ "conservation": conservation <= EXTRACTION_CONSERVATION_TOL }),
    };
    let failure = (conservation > EXTRACTION_CONSERVATION_TOL)
        .then(|| format!("spin not conserved (residual {conservation:e})"));
    Ok(Output {
        text: render(&report, args.output.format.unwrap_or(Format::Json)),
        warnings: Vec::new(),
        failure,
    })
}

pub fn bounds_cmd(args: &BoundsArgs) -> AppResult<Output> {
    check_iterations(args.iterations)?;
    if let Some(&value) = args.alpha.iter().find(|a| a.abs() > PI) {
        return Err(qframe_core::Error::AngleOutOfRange { value }.into());
    }
    let b = bounds(args.alpha, args.iterations);
    let report = Report {
        command: "bounds",
        config: json!({ "alpha": args.alpha, "N": args.iterations }),
        results: json!({ "step_valid": b.step_valid, "sequence_valid": b.sequence_valid }),
        bounds: bounds_json(&b),
        passes: json!({}),
    };
    Ok(Output {
        text: render(&report, args.output.format.unwrap_or(Format::Json)),
        warnings: sequence_warning(args.iterations).into_iter().collect(),
        failure: None,
    })
}

pub fn basis(args: &BasisArgs) -> AppResult<Output> {
    let basis = pauli_string_basis(args.qubits)?;
    let (report, table) = basis_report(&basis);
    let k = basis.len();
    let mut zero = 0;
    let mut proportional = 0;
    let mut structure = Vec::new();
    for (a, b, entry) in table.pairs() {
        match entry {
            StructureEntry::Zero => zero += 1,
            StructureEntry::Proportional { .. } => proportional += 1,
            StructureEntry::Expansion(_) => {}
        }
        structure.push(describe_entry(&basis, a, b, entry));
    }
    let norms: Vec<f64> = (0..k).map(|i| basis.norm(i)).collect::<Result<_, _>>()?;
    let etas: Vec<f64> = (0..k).map(|i| basis.eta(i)).collect::<Result<_, _>>()?;
    let labels: Vec<&str> = (0..k).map(|i| basis.label(i)).collect();
    let passes = json!({
        "hermitian": report.hermitian,
        "traceless": report.traceless,
        "orthogonal": report.orthogonal,
        "closed": report.closed,
        "index_exclusion": report.index_exclusion,
    });
    let out = Report {
        command: "basis",
        config: json!({ "n": args.qubits }),
        results: json!({
            "dim": basis.dim(),
            "K": k,
            "labels": labels,
            "norms": norms,
            "etas": etas,
            "max_trace": report.max_trace,
            "max_overlap": report.max_overlap,
            "pairs": zero + proportional + report.closure_violations.len(),
            "zero_pairs": zero,
            "proportional_pairs": proportional,
            "closure_violations": report.closure_violations,
            "structure": structure,
        }),
        bounds: json!({
            "zero": qframe_core::basis::ZERO_TOL,
            "proportional": qframe_core::basis::PROPORTIONAL_TOL,
        }),
        passes: passes.clone(),
    };
    let failure = (!report.all()).then(|| format!("basis properties: {}", failed_flags(&passes).join(", ")));
    Ok(Output { text: render(&out, args.output.format.unwrap_or(Format::Json)), warnings: Vec::new(), failure })
}

pub fn conserve(args: &ConserveArgs) -> AppResult<Output> {
    let spin = parse_spin(args.spin)?;
    check_iterations(args.iterations)?;
    let t = TripleProduct::new(spin);
    let mut rows = Vec::with_capacity(args.alpha.len());
    let mut worst = 0.0f64;
    for &alpha in &args.alpha {
        let v = t.step_unitary(alpha, args.iterations)?;
        let mut entry = Map::new();
        entry.insert("alpha".into(), json!(alpha));
        for axis in Axis::ALL {
            let r = conservation_residual(&v, axis)?;
            worst = worst.max(r);
            entry.insert(axis.label().to_string(), json!(r));
        }
        rows.push(Value::Object(entry));
    }
    let ok = worst <= CONSERVATION_TOL;
    let report = Report {
        command: "conserve",
        config: json!({ "s": spin.value(), "alpha": args.alpha, "N": args.iterations }),
        results: json!({ "residuals": rows, "max_residual": worst }),
        bounds: json!({ "conservation": CONSERVATION_TOL }),
        passes: json!({ "conservation": ok }),
    };
    Ok(Output {
        text: render(&report, args.output.format.unwrap_or(Format::Json)),
        warnings: Vec::new(),
        failure: (!ok).then(|| format!("largest commutator {worst:e}")),
    })
}
