use std::fs;

use modent::battery::{self, BatteryConfig, PropertyRow};
use modent::bogoliubov::{
    bogoliubov_report, donsker_varadhan_sup, free_energy_routes, gibbs_variational_inf, DvConfig, Initializer,
    ModelSpec, OptimizerConfig, PartitionedSystem,
};
use modent::entropy::{
    araki_on_subalgebra, araki_spectral, conditioning_warning, default_uhlmann_times, kl_divergence,
    support_condition, trace_distance, uhlmann_limit, umegaki, EntropyValue,
};
use modent::kms::{
    gibbs_state, golden_thompson_peierls_report, kms_boundary_check, perturb_state, perturbation_entropy_report,
    standard_liouvillian, trotter_check, KMS_TOL, PERTURBATION_TOL,
};
use modent::algebra::generate_star_algebra;
use modent::numkit::max_abs;
use modent::{random, CMatrix, DensityMatrix, HermitianMatrix};
use serde_json::{json, Value};

use crate::io::{self, num, read_matrix, render, SCHEMA};
use crate::{resolve_seed, BogoliubovArgs, CliError, EntropyArgs, InitName, KmsArgs, ModelName, SuiteArgs, SuiteFormat};

/// Agreement required between the Araki and Umegaki routes, relative to `1 + |S|`.
const CROSS_TOL: f64 = 1e-8;
/// Agreement with the classical divergence on commuting inputs.
const KL_TOL: f64 = 1e-10;
const MONOTONE_SLACK: f64 = 1e-8;
/// Above this dimension the `n² × n²` Liouvillian section is skipped.
const LIOUVILLIAN_MAX_DIM: usize = 16;
const TROTTER_STEPS: [usize; 4] = [8, 16, 32, 64];

fn entropy_value(v: EntropyValue) -> Value {
    num(v.to_f64())
}

fn is_diagonal(a: &CMatrix) -> bool {
    let mut off = a.clone();
    off.fill_diagonal(modent::numkit::ZERO);
    max_abs(&off) <= 1e-14
}

fn diagonal(a: &CMatrix) -> Vec<f64> {
    a.diagonal().iter().map(|z| z.re).collect()
}

fn agree(a: EntropyValue, b: EntropyValue, tol: f64) -> bool {
    match (a, b) {
        (EntropyValue::Infinite, EntropyValue::Infinite) => true,
        (EntropyValue::Finite(x), EntropyValue::Finite(y)) => (x - y).abs() <= tol * (1.0 + y.abs()),
        _ => false,
    }
}

fn load_state(path: &std::path::Path) -> Result<DensityMatrix, CliError> {
    DensityMatrix::new(read_matrix(path)?).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn load_hermitian(path: &std::path::Path) -> Result<HermitianMatrix, CliError> {
    HermitianMatrix::new(read_matrix(path)?).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn emit(report: &Value, format: io::Format) {
    print!("{}", render(report, format));
}

pub fn entropy(args: &EntropyArgs) -> Result<bool, CliError> {
    let (rho, sigma) = match (&args.rho, &args.sigma, args.random) {
        (Some(r), Some(s), None) => (load_state(r)?, load_state(s)?),
        (None, None, Some(n)) if n >= 1 => {
            let mut rng = random::stream(resolve_seed(args.seed)?, random::tag("cli/entropy"), 0);
            (random::density(n, &mut rng), random::density(n, &mut rng))
        }
        _ => return Err(CliError::Usage("give --rho and --sigma, or --random N with N ≥ 1".into())),
    };
    if rho.dim() != sigma.dim() {
        return Err(CliError::Data(format!("state dimensions differ: {} and {}", rho.dim(), sigma.dim())));
    }
    let (p, q) = (rho.positive(), sigma.positive());
    let s_umegaki = umegaki(p, q)?;
    let s_araki = araki_spectral(p, q)?;
    let mut pass = agree(s_araki, s_umegaki, CROSS_TOL);
    pass &= s_umegaki.finite().is_none_or(|s| s >= -MONOTONE_SLACK);

    let mut report = json!({
        "schema": SCHEMA,
        "command": "entropy",
        "n": rho.dim(),
        "umegaki": entropy_value(s_umegaki),
        "araki": entropy_value(s_araki),
        "cross_residual": match (s_araki, s_umegaki) {
            (EntropyValue::Finite(a), EntropyValue::Finite(u)) => num((a - u).abs()),
            _ => Value::Null,
        },
        "support": {
            "rho_in_sigma": support_condition(p, q)?,
            "sigma_in_rho": support_condition(q, p)?,
        },
        "trace_distance": num(trace_distance(p, q)?),
        "warning": conditioning_warning(p, q)?,
    });

    if is_diagonal(rho.matrix()) && is_diagonal(sigma.matrix()) {
        let kl = kl_divergence(&diagonal(rho.matrix()), &diagonal(sigma.matrix()))?;
        pass &= agree(kl, s_umegaki, KL_TOL);
        report["kl"] = entropy_value(kl);
    }

    if s_umegaki.is_finite() {
        let times = default_uhlmann_times();
        let values = uhlmann_limit(p, q, &times)?;
        let monotone = values.windows(2).all(|w| w[1] >= w[0] - 1e-12 * (1.0 + w[0].abs()));
        pass &= monotone;
        report["uhlmann"] = json!({
            "monotone": monotone,
            "table": times.iter().zip(&values).map(|(&t, &f)| json!({"t": t, "value": num(f)})).collect::<Vec<_>>(),
        });
    }

    if !args.generators.is_empty() {
        let gens = args.generators.iter().map(|g| read_matrix(g)).collect::<Result<Vec<_>, _>>()?;
        if let Some(g) = gens.iter().find(|g| g.nrows() != rho.dim()) {
            return Err(CliError::Data(format!("generator has dimension {}, states have {}", g.nrows(), rho.dim())));
        }
        let m = generate_star_algebra(&gens, rho.dim())?;
        let restricted = araki_on_subalgebra(&m, p, q)?;
        let monotone = restricted.le_within(&s_umegaki, MONOTONE_SLACK * (1.0 + s_umegaki.finite().unwrap_or(0.0).abs()));
        pass &= monotone;
        report["subalgebra"] = json!({
            "dim": m.dim(),
            "relative_entropy": entropy_value(restricted),
            "monotone": monotone,
        });
    }
    report["pass"] = json!(pass);
    emit(&report, args.format);
    Ok(pass)
}

fn model_spec(args: &BogoliubovArgs) -> Result<ModelSpec, CliError> {
    let blocks = || args.blocks.iter().map(|b| load_hermitian(b)).collect::<Result<Vec<_>, _>>();
    Ok(match args.model {
        ModelName::Ising2 => ModelSpec::IsingChain { sites: 2, field: args.field, coupling: args.coupling },
        ModelName::Ising => ModelSpec::IsingChain { sites: args.sites, field: args.field, coupling: args.coupling },
        ModelName::TwoLevel => ModelSpec::TwoLevelPair { gap_a: args.gap_a, gap_b: args.gap_b, coupling: args.coupling },
        ModelName::Heisenberg => ModelSpec::HeisenbergPair { j: args.coupling },
        ModelName::Uncoupled if args.blocks.is_empty() => ModelSpec::Uncoupled {
            blocks: vec![
                HermitianMatrix::from_real_diagonal(&[0.0, args.gap_a]),
                HermitianMatrix::from_real_diagonal(&[0.0, args.gap_b]),
            ],
        },
        ModelName::Uncoupled => ModelSpec::Uncoupled { blocks: blocks()? },
        ModelName::Custom => {
            let Some(u) = &args.coupling_file else {
                return Err(CliError::Usage("--model custom needs --coupling-file".into()));
            };
            if args.blocks.is_empty() {
                return Err(CliError::Usage("--model custom needs at least one --block".into()));
            }
            ModelSpec::Custom { blocks: blocks()?, coupling: load_hermitian(u)? }
        }
    })
}

pub fn bogoliubov(args: &BogoliubovArgs) -> Result<bool, CliError> {
    if !(args.beta.is_finite() && args.beta > 0.0) {
        return Err(CliError::Usage(format!("--beta must be positive and finite, got {}", args.beta)));
    }
    let sys = PartitionedSystem::from_spec(&model_spec(args)?, args.beta)?;
    let routes = free_energy_routes(&sys)?;
    let b = bogoliubov_report(&sys)?;
    let mut pass = b.pass;
    let mut report = json!({
        "schema": SCHEMA,
        "command": "bogoliubov",
        "model": format!("{:?}", args.model).to_lowercase(),
        "beta": args.beta,
        "dim": sys.dim(),
        "lower": num(b.lower),
        "delta_f": num(b.delta_f),
        "upper": num(b.upper),
        "golden_thompson_lower": num(b.gt_lower),
        "margins": {"lower": num(b.lower_margin), "upper": num(b.upper_margin), "golden_thompson": num(b.gt_margin)},
        "routes": {
            "partition": num(routes.partition),
            "vector": num(routes.vector),
            "entropy": num(routes.entropy),
            "spread": num(routes.spread),
        },
        "entropies": {
            "reference_full": num(b.s_reference_full),
            "full_reference": num(b.s_full_reference),
            "identity_residual": num(b.identity_residual),
        },
    });
    if args.variational {
        let init = match args.init {
            InitName::Cold => Initializer::MaximallyMixed,
            InitName::Warm => Initializer::Warm,
            InitName::Random => Initializer::Random,
        };
        let config = OptimizerConfig { init, max_iter: args.max_iter, seed: resolve_seed(args.seed)?, ..Default::default() };
        let g = gibbs_variational_inf(&sys, &config)?;
        let dv = donsker_varadhan_sup(&sys, &DvConfig::default())?;
        pass &= g.pass && dv.pass;
        report["gibbs_variational"] = json!({
            "best_value": num(g.best_value),
            "gap": num(g.best_value - g.delta_f),
            "iterations": g.iterations,
            "converged": g.converged,
            "min_gap": num(g.min_gap),
            "gradient_mismatch": num(g.gradient_mismatch),
            "pass": g.pass,
            "log": g.trajectory.iter().enumerate().map(|(k, &v)| json!({"iter": k, "value": num(v)})).collect::<Vec<_>>(),
        });
        report["donsker_varadhan"] = json!({
            "best_value": num(dv.best_value),
            "best_s": num(dv.best_s),
            "best_c": num(dv.best_c),
            "gap": num(dv.delta_f - dv.best_value),
            "max_excess": num(dv.max_excess),
            "shift_residual": num(dv.shift_residual),
            "pass": dv.pass,
            "log": dv.trajectory.iter().map(|&(s, v)| json!({"s": num(s), "value": num(v)})).collect::<Vec<_>>(),
        });
    }
    report["pass"] = json!(pass);
    emit(&report, args.format);
    Ok(pass)
}

pub fn kms(args: &KmsArgs) -> Result<bool, CliError> {
    if !(args.beta.is_finite() && args.beta > 0.0) {
        return Err(CliError::Usage(format!("--beta must be positive and finite, got {}", args.beta)));
    }
    let seed = resolve_seed(args.seed)?;
    let (h, v) = match (&args.h, args.random) {
        (Some(path), None) => {
            let h = load_hermitian(path)?;
            let v = match &args.v {
                Some(p) => load_hermitian(p)?,
                None => HermitianMatrix::zeros(h.dim()),
            };
            (h, v)
        }
        (None, Some(n)) if n >= 1 => {
            let mut rng = random::stream(seed, random::tag("cli/kms"), 0);
            let h = random::hermitian_with_norm(n, 1.0, &mut rng);
            let v = match &args.v {
                Some(p) => load_hermitian(p)?,
                None => random::hermitian_with_norm(n, 1.0, &mut rng),
            };
            (h, v)
        }
        _ => return Err(CliError::Usage("give --h FILE or --random N with N ≥ 1".into())),
    };
    if v.dim() != h.dim() {
        return Err(CliError::Data(format!("V has dimension {}, H has {}", v.dim(), h.dim())));
    }
    let n = h.dim();
    let sys = gibbs_state(&h, args.beta)?;
    if let Some(path) = &args.emit_state {
        io::write_matrix(path, sys.rho.matrix())?;
    }

    let boundary = kms_boundary_check(&sys, args.trials, seed)?;
    let mut pass = boundary.pass;
    let mut report = json!({
        "schema": SCHEMA,
        "command": "kms",
        "n": n,
        "beta": args.beta,
        "log_partition": num(sys.ln_z),
        "boundary": {
            "trials": boundary.trials,
            "max_residual": num(boundary.max_residual),
            "tolerance": KMS_TOL,
            "probe_max_residual": num(boundary.probe_max_residual),
            "probe_detects_failure": boundary.probe_detects_failure,
            "pass": boundary.pass,
        },
    });

    report["liouvillian"] = if n <= LIOUVILLIAN_MAX_DIM {
        let rep = standard_liouvillian(&sys)?;
        let omega = rep.omega_residual();
        let j = rep.j_anticommutator();
        let modular = rep.modular_residual(&sys)?;
        let ok = omega <= PERTURBATION_TOL && j <= PERTURBATION_TOL && modular <= PERTURBATION_TOL;
        pass &= ok;
        json!({
            "kernel_residual": num(omega),
            "j_anticommutator": num(j),
            "modular_residual": num(modular),
            "pass": ok,
        })
    } else {
        json!({"skipped": format!("dimension above {LIOUVILLIAN_MAX_DIM}")})
    };

    let pert = perturb_state(&sys, &v)?;
    if let Some(path) = &args.emit_perturbed {
        io::write_matrix(path, pert.state.matrix())?;
    }
    let ent = perturbation_entropy_report(&sys, &v)?;
    let gibbs_ok = pert.gibbs_residual <= KMS_TOL;
    pass &= gibbs_ok && ent.pass;
    report["perturbation"] = json!({
        "norm_sq": num(pert.norm_sq),
        "dual_path_residual": num(pert.dual_path_residual),
        "gibbs_residual": num(pert.gibbs_residual),
        "invariance_residual": num(pert.invariance_residual()),
        "s_forward": num(ent.s_fwd),
        "s_backward": num(ent.s_bwd),
        "entropy_residual": num(ent.entropy_residual),
        "log_forward_residual": num(ent.log_forward_residual),
        "log_backward_residual": num(ent.log_backward_residual),
        "identities_residual": num(ent.identities_residual),
        "pass": gibbs_ok && ent.pass,
    });

    let gt = golden_thompson_peierls_report(&sys, &v)?;
    pass &= gt.pass;
    report["golden_thompson"] = json!({
        "perturbed_trace": num(gt.perturbed_trace),
        "product_trace": num(gt.product_trace),
        "norm_sq": num(gt.norm_sq),
        "vector_bound": num(gt.vector_bound),
        "peierls_lower": num(gt.peierls_lower),
        "worst_margin": num(gt.worst_margin),
        "pass": gt.pass,
    });

    if args.trotter {
        let tr = trotter_check(&h, &v, args.trotter_time, &TROTTER_STEPS)?;
        pass &= tr.pass;
        let rows: Vec<Value> = tr
            .steps
            .iter()
            .zip(&tr.errors)
            .enumerate()
            .map(|(i, (&steps, &err))| json!({"steps": steps, "error": num(err), "ratio": tr.ratios.get(i).filter(|r| r.is_finite()).map(|&r| num(r))}))
            .collect();
        report["trotter"] = json!({"time": args.trotter_time, "table": rows, "pass": tr.pass});
    }
    report["pass"] = json!(pass);
    emit(&report, args.format);
    Ok(pass)
}

fn suite_csv(rows: &[PropertyRow]) -> String {
    let mut out = String::from("module,property,trials,worst_margin,pass\n");
    for r in rows {
        out.push_str(&format!("{},{},{},{:.6e},{}\n", r.module, r.property, r.trials, r.worst_margin, r.pass));
    }
    out
}

fn suite_json(rows: &[PropertyRow], seed: u64) -> String {
    let rows: Vec<Value> = rows
        .iter()
        .map(|r| {
            json!({
                "module": r.module,
                "property": r.property,
                "trials": r.trials,
                "worst_margin": num(r.worst_margin),
                "worst_trial": r.worst_trial,
                "error": r.error,
                "pass": r.pass,
            })
        })
        .collect();
    let pass = rows.iter().all(|r| r["pass"] == true);
    serde_json::to_string_pretty(&json!({"schema": SCHEMA, "seed": seed, "rows": rows, "pass": pass})).unwrap() + "\n"
}

pub fn suite(args: &SuiteArgs) -> Result<bool, CliError> {
    let seed = resolve_seed(args.seed)?;
    if args.trials == Some(0) {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    let config = BatteryConfig {
        seed,
        trials: args.trials,
        filter: args.property.clone(),
        trial: args.trial,
        inject_fault: args.inject_fault,
    };
    let rows = battery::run_battery(&config);
    if rows.is_empty() {
        return Err(CliError::Usage(format!("no property matches {:?}", args.property.as_deref().unwrap_or(""))));
    }
    let text = match args.format {
        SuiteFormat::Csv => suite_csv(&rows),
        SuiteFormat::Json => suite_json(&rows, seed),
    };
    print!("{text}");
    if let Some(path) = &args.output {
        fs::write(path, &text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    }
    for r in rows.iter().filter(|r| !r.pass) {
        match &r.error {
            Some(e) => eprintln!("FAIL {}/{} trial {}: {e}", r.module, r.property, r.worst_trial),
            None => eprintln!("FAIL {}/{} trial {}: margin {:.6e}", r.module, r.property, r.worst_trial, r.worst_margin),
        }
        let fault = if args.inject_fault { " --inject-fault" } else { "" };
        eprintln!("{}{fault}", r.replay_line(seed));
    }
    Ok(rows.iter().all(|r| r.pass))
}
