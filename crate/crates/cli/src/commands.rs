//! Implementations of the CLI subcommands.

use std::fs;

use microgen_core::compose::{star_numeric, star_series};
use microgen_core::dynamics::{
    energy_drift, fiber_decomposition, recover_flow, reference_flow_with, symplecticity_defect,
    FlowMap, PhasePoint,
};
use microgen_core::error::Error as CoreError;
use microgen_core::expr;
use microgen_core::genfun::{CoreMap, GenFunJson, GeneratingFunction};
use microgen_core::hamjac::{core_form_check, hj_series, Hamiltonian};
use microgen_core::jet::Jet;
use microgen_core::liegroup::{
    assoc_defect, bch, so3_action, so3_momentum_map, symmetry_lagrangian_defect,
    symmetry_relation_sampler, CoAlgebraElement, LieBasis, MatLieElement,
};
use microgen_core::morse::{lagrangian_defect, morse_bott_check, SampleVerdict};
use microgen_core::{genfun, seeded_rng};
use nalgebra::DMatrix;
use rand::Rng;
use serde_json::{json, Value};

use crate::output::{csv_cell, to_json_string};
use crate::{Command, HamiltonianArgs};

/// CLI failure with its exit code: 1 check, 2 usage, 3 numeric.
pub enum CliError {
    Usage(String),
    Check(String),
    Numeric(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Check(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }

    pub fn to_json(&self) -> String {
        let (kind, detail) = match self {
            CliError::Usage(d) => ("usage", d),
            CliError::Check(d) => ("check_failure", d),
            CliError::Numeric(d) => ("numeric_failure", d),
        };
        to_json_string(&json!({"error": kind, "detail": detail}))
    }
}

fn classify(e: CoreError) -> CliError {
    match e {
        CoreError::NewtonNonConvergence { .. }
        | CoreError::SingularJacobian { .. }
        | CoreError::Degenerate { .. }
        | CoreError::NotCritical { .. }
        | CoreError::DomainViolation { .. }
        | CoreError::Internal(_) => CliError::Numeric(e.to_string()),
        _ => CliError::Usage(e.to_string()),
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn parse_names(csv: &str) -> Vec<String> {
    csv.split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect()
}

fn parse_f64_csv(csv: &str) -> Result<Vec<f64>, CliError> {
    csv.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| usage(format!("bad number `{s}`: {e}")))
        })
        .collect()
}

/// Parses "a,b;c,d" into two blocks.
fn parse_point_pair(src: &str) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    let parts: Vec<&str> = src.split(';').collect();
    if parts.len() != 2 {
        return Err(usage(format!(
            "expected two `;`-separated blocks in `{src}`"
        )));
    }
    Ok((parse_f64_csv(parts[0])?, parse_f64_csv(parts[1])?))
}

/// Parses "start:stop:count" or "v1;v2;..." into a list of 1d grid values.
fn parse_grid_1d(src: &str) -> Result<Vec<f64>, CliError> {
    if src.contains(':') {
        let parts: Vec<&str> = src.split(':').collect();
        if parts.len() != 3 {
            return Err(usage(format!("expected start:stop:count in `{src}`")));
        }
        let start: f64 = parts[0]
            .parse()
            .map_err(|e| usage(format!("bad grid start: {e}")))?;
        let stop: f64 = parts[1]
            .parse()
            .map_err(|e| usage(format!("bad grid stop: {e}")))?;
        let count: usize = parts[2]
            .parse()
            .map_err(|e| usage(format!("bad grid count: {e}")))?;
        if count < 2 {
            return Ok(vec![start]);
        }
        let step = (stop - start) / (count - 1) as f64;
        Ok((0..count).map(|i| start + step * i as f64).collect())
    } else {
        src.split(';')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| usage(format!("bad grid value `{s}`: {e}")))
            })
            .collect()
    }
}

fn emit(out: &Option<String>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text.as_bytes())
            .map_err(|e| usage(format!("cannot write `{path}`: {e}"))),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn build_hamiltonian(args: &HamiltonianArgs, space_order: usize) -> Result<Hamiltonian, CliError> {
    let parsed = expr::parse(&args.hamiltonian).map_err(classify)?;
    let p_vars = parse_names(&args.p_vars);
    let q_vars = parse_names(&args.q_vars);
    if p_vars.len() != q_vars.len() {
        return Err(usage(format!(
            "{} momentum vs {} position identifiers",
            p_vars.len(),
            q_vars.len()
        )));
    }
    let base = match &args.base {
        Some(b) => parse_f64_csv(b)?,
        None => vec![0.0; q_vars.len()],
    };
    if args.time_dependent {
        Hamiltonian::from_expr_time_dependent(
            &parsed,
            &args.t_var,
            &p_vars,
            &q_vars,
            &base,
            space_order,
        )
        .map_err(classify)
    } else {
        Hamiltonian::from_expr(&parsed, &p_vars, &q_vars, &base, space_order).map_err(classify)
    }
}

/// Variable names `(t, p.., Q..)` for serialized evolution series.
fn evolution_names(args: &HamiltonianArgs) -> Vec<String> {
    let mut names = vec![args.t_var.clone()];
    names.extend(parse_names(&args.p_vars));
    for q in parse_names(&args.q_vars) {
        let mut cs = q.chars();
        let up = match cs.next() {
            Some(c) => c.to_ascii_uppercase().to_string() + cs.as_str(),
            None => q.clone(),
        };
        names.push(up);
    }
    names
}

fn load_genfun(path: &str) -> Result<GeneratingFunction, CliError> {
    let text =
        fs::read_to_string(path).map_err(|e| usage(format!("cannot read `{path}`: {e}")))?;
    let parsed: GenFunJson =
        serde_json::from_str(&text).map_err(|e| usage(format!("bad genfun json: {e}")))?;
    GeneratingFunction::from_json(&parsed).map_err(classify)
}

fn relation_point_json(pt: &genfun::RelationPoint) -> Value {
    json!({"p1": pt.p1, "x1": pt.x1, "p2": pt.p2, "x2": pt.x2})
}

pub fn dispatch(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Hj {
            ham,
            order,
            space_order,
            out,
        } => {
            let space = space_order.unwrap_or(order.max(4)).max(order);
            let h = build_hamiltonian(&ham, space)?;
            let s = hj_series(&h, order).map_err(classify)?;
            let residual = s.residual_max(&h).map_err(classify)?;
            let names = evolution_names(&ham);
            let report = json!({
                "S": s.as_total_jet().to_json(&names),
                "residual": {"max_residual_coeff": residual, "order": order},
            });
            emit(&out, &to_json_string(&report))
        }

        Command::Compose {
            f_json,
            g_json,
            order,
            at,
            tol,
            max_iter,
            out,
        } => {
            let f = load_genfun(&f_json)?;
            let g = load_genfun(&g_json)?;
            if order.is_none() && at.is_none() {
                return Err(usage("compose needs --order and/or --at"));
            }
            let mut report = serde_json::Map::new();
            if let Some(order) = order {
                let composed = star_series(&f, &g, order).map_err(classify)?;
                report.insert(
                    "genfun".into(),
                    serde_json::to_value(composed.to_json())
                        .map_err(|e| usage(e.to_string()))?,
                );
            }
            if let Some(at) = at {
                let (p1, x3) = parse_point_pair(&at)?;
                let sv = star_numeric(&f, &g, &p1, &x3, tol, max_iter).map_err(classify)?;
                report.insert("value".into(), json!(sv.value));
                report.insert("p2_bar".into(), json!(sv.critical.p2_bar));
                report.insert("x2_bar".into(), json!(sv.critical.x2_bar));
                report.insert("residual".into(), json!(sv.critical.residual));
                report.insert("iterations".into(), json!(sv.critical.iterations));
            }
            emit(&out, &to_json_string(&Value::Object(report)))
        }

        Command::Flow {
            ham,
            order,
            space_order,
            t,
            z,
            steps,
            time_reversed,
            out,
        } => {
            let space = space_order.unwrap_or(order.max(4)).max(order);
            let h = build_hamiltonian(&ham, space)?;
            let s = hj_series(&h, order).map_err(classify)?;
            let (p, q) = parse_point_pair(&z)?;
            let z0 = PhasePoint::new(p, q);
            let rec = recover_flow(&s, t, &z0, 1e-12, 50).map_err(classify)?;
            let reference = reference_flow_with(&h, &z0, t, steps, time_reversed);
            let gap = rec
                .flat()
                .iter()
                .zip(reference.flat())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0_f64, f64::max);
            let flow = FlowMap::from_genfun(&s, 1e-12, 50);
            let sympl = symplecticity_defect(&flow, t, &z0, 1e-4).map_err(classify)?;
            let drift = energy_drift(&h, &flow, t, &z0).map_err(classify)?;
            let mut csv = String::from(
                "t,p0,q0,P_rec,Q_rec,P_ref,Q_ref,gap,sympl_defect,energy_drift\n",
            );
            csv.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                csv_cell(&[t]),
                csv_cell(&z0.p),
                csv_cell(&z0.q),
                csv_cell(&rec.p),
                csv_cell(&rec.q),
                csv_cell(&reference.p),
                csv_cell(&reference.q),
                csv_cell(&[gap]),
                csv_cell(&[sympl]),
                csv_cell(&[drift]),
            ));
            emit(&out, csv.trim_end())
        }

        Command::Lift {
            phi,
            x_vars,
            order,
            at,
            out,
        } => {
            let x_names = parse_names(&x_vars);
            let components: Vec<_> = phi
                .split(';')
                .map(|src| expr::parse(src).map_err(classify))
                .collect::<Result<_, _>>()?;
            let base = vec![0.0; x_names.len()];
            let core =
                CoreMap::from_exprs(&components, &x_names, &base, order).map_err(classify)?;
            let lift = GeneratingFunction::cotangent_lift(&core);
            let samples: Vec<Value> = at
                .iter()
                .map(|s| {
                    let (p1, x2) = parse_point_pair(s)?;
                    Ok(relation_point_json(&lift.sample_relation(&p1, &x2)))
                })
                .collect::<Result<_, CliError>>()?;
            let report = json!({
                "genfun": serde_json::to_value(lift.to_json()).map_err(|e| usage(e.to_string()))?,
                "samples": samples,
            });
            emit(&out, &to_json_string(&report))
        }

        Command::Decompose {
            f_json,
            x2,
            p1_grid,
            out,
        } => {
            let f = load_genfun(&f_json)?;
            let x2 = parse_f64_csv(&x2)?;
            if f.dim_p() != 1 {
                return Err(usage("decompose supports one-dimensional fibers"));
            }
            let grid: Vec<Vec<f64>> = parse_grid_1d(&p1_grid)?
                .into_iter()
                .map(|v| vec![v])
                .collect();
            let fiber = fiber_decomposition(&f, &x2, grid);
            let points: Vec<Value> = fiber
                .graph()
                .iter()
                .map(|g| {
                    json!({
                        "fiber": {"p1": g.fiber.0, "x1": g.fiber.1},
                        "image": {"p2": g.image.0, "x2": g.image.1},
                    })
                })
                .collect();
            let report = json!({"x2": x2, "points": points});
            emit(&out, &to_json_string(&report))
        }

        Command::CheckSemigroup {
            ham,
            t1,
            t2,
            order,
            space_order,
            grid_max,
            grid_n,
            tol,
            out,
        } => {
            let space = space_order.unwrap_or(order.max(4)).max(order);
            let h = build_hamiltonian(&ham, space)?;
            if h.dim() != 1 {
                return Err(usage("check-semigroup grids are one-dimensional"));
            }
            let s = hj_series(&h, order).map_err(classify)?;
            let axis: Vec<f64> = if grid_n < 2 {
                vec![0.0]
            } else {
                (0..grid_n)
                    .map(|i| -grid_max + 2.0 * grid_max * i as f64 / (grid_n - 1) as f64)
                    .collect()
            };
            let grid: Vec<(Vec<f64>, Vec<f64>)> = axis
                .iter()
                .flat_map(|&p| axis.iter().map(move |&q| (vec![p], vec![q])))
                .collect();
            let defect =
                microgen_core::hamjac::semigroup_defect_of(&s, t1, t2, &grid).map_err(classify)?;
            let pass = defect < tol;
            let report = json!({"defect": defect, "tol": tol, "t1": t1, "t2": t2, "pass": pass});
            emit(&out, &to_json_string(&report))?;
            if pass {
                Ok(())
            } else {
                Err(CliError::Check(format!(
                    "semigroup defect {defect:.3e} exceeds {tol:.1e}"
                )))
            }
        }

        Command::CheckModuleCore {
            hamiltonian,
            f_json,
            p_vars,
            q_vars,
            order,
            samples,
            out,
        } => {
            let gf = match (hamiltonian, f_json) {
                (Some(src), None) => {
                    let args = HamiltonianArgs {
                        hamiltonian: src,
                        p_vars,
                        q_vars,
                        base: None,
                        time_dependent: false,
                        t_var: "t".into(),
                    };
                    let h = build_hamiltonian(&args, order.max(4))?;
                    let s = hj_series(&h, order).map_err(classify)?;
                    s.to_genfun().map_err(classify)?
                }
                (None, Some(path)) => load_genfun(&path)?,
                _ => return Err(usage("check-module-core needs exactly one of --H, --f-json")),
            };
            let n = gf.dim_x();
            let sample_points: Vec<Vec<f64>> = match samples {
                Some(s) => s
                    .split(';')
                    .map(parse_f64_csv)
                    .collect::<Result<_, _>>()?,
                None => (0..5)
                    .map(|i| vec![-0.5 + 0.25 * i as f64; n])
                    .collect(),
            };
            let check = core_form_check(&gf, &sample_points).map_err(classify)?;
            let u_samples: Vec<Value> = sample_points
                .iter()
                .map(|q| json!({"q": q, "U": check.u_at(q)}))
                .collect();
            let report = json!({
                "pass": check.pass,
                "max_defect": check.max_defect,
                "u_samples": u_samples,
            });
            emit(&out, &to_json_string(&report))?;
            if check.pass {
                Ok(())
            } else {
                Err(CliError::Check(format!(
                    "core is not of module form: defect {:.3e}",
                    check.max_defect
                )))
            }
        }

        Command::CheckMonoidGroup {
            algebra,
            trials,
            norm_cap,
            tol,
            seed,
            out,
        } => {
            let bases: Vec<LieBasis> = match algebra.as_str() {
                "so3" => vec![LieBasis::so3()],
                "sl2" => vec![LieBasis::sl2()],
                "both" => vec![LieBasis::so3(), LieBasis::sl2()],
                other => return Err(usage(format!("unknown algebra `{other}`"))),
            };
            let mut rng = seeded_rng(seed);
            let mut max_defect = 0.0_f64;
            for basis in &bases {
                let mu = CoAlgebraElement::new(
                    (0..basis.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                );
                for _ in 0..trials {
                    let mut element = || -> Result<MatLieElement, CliError> {
                        loop {
                            let coeffs: Vec<f64> = (0..basis.dim())
                                .map(|_| rng.gen_range(-norm_cap..norm_cap))
                                .collect();
                            let e = basis.element(&coeffs).map_err(classify)?;
                            if e.norm() <= norm_cap {
                                return Ok(e);
                            }
                        }
                    };
                    let (u, v, w) = (element()?, element()?, element()?);
                    let d = assoc_defect(&u, &v, &w, &mu, basis).map_err(classify)?;
                    max_defect = max_defect.max(d);
                }
            }
            let pass = max_defect < tol;
            let report = json!({
                "max_assoc_defect": max_defect,
                "tol": tol,
                "trials": trials,
                "pass": pass,
            });
            emit(&out, &to_json_string(&report))?;
            if pass {
                Ok(())
            } else {
                Err(CliError::Check(format!(
                    "associativity defect {max_defect:.3e} exceeds {tol:.1e}"
                )))
            }
        }

        Command::Bch {
            v,
            w,
            algebra,
            v_coeffs,
            w_coeffs,
            out,
        } => {
            let basis = match algebra.as_deref() {
                Some("so3") => Some(LieBasis::so3()),
                Some("sl2") => Some(LieBasis::sl2()),
                Some(other) => return Err(usage(format!("unknown algebra `{other}`"))),
                None => None,
            };
            let parse_matrix = |src: &str| -> Result<DMatrix<f64>, CliError> {
                let rows: Vec<Vec<f64>> = serde_json::from_str(src)
                    .map_err(|e| usage(format!("bad matrix json: {e}")))?;
                let n = rows.len();
                if rows.iter().any(|r| r.len() != n) {
                    return Err(usage("matrix rows must form a square"));
                }
                Ok(DMatrix::from_fn(n, n, |r, c| rows[r][c]))
            };
            let element = |mat: Option<&str>,
                           coeffs: Option<&str>|
             -> Result<MatLieElement, CliError> {
                match (mat, coeffs, &basis) {
                    (Some(m), _, _) => {
                        let m = parse_matrix(m)?;
                        MatLieElement::new(m, microgen_core::liegroup::AlgebraTag::Generic)
                            .map_err(classify)
                    }
                    (None, Some(c), Some(b)) => {
                        b.element(&parse_f64_csv(c)?).map_err(classify)
                    }
                    _ => Err(usage(
                        "each element needs --v/--w (matrix) or --algebra with coefficients",
                    )),
                }
            };
            let ev = element(v.as_deref(), v_coeffs.as_deref())?;
            let ew = element(w.as_deref(), w_coeffs.as_deref())?;
            let z = bch(&ev, &ew).map_err(classify)?;
            let rows: Vec<Vec<f64>> = (0..z.dim())
                .map(|r| (0..z.dim()).map(|c| z.mat()[(r, c)]).collect())
                .collect();
            let mut report = serde_json::Map::new();
            report.insert("bch".into(), json!(rows));
            if let Some(b) = &basis {
                report.insert(
                    "coeffs".into(),
                    json!(b.expand(z.mat()).map_err(classify)?),
                );
            }
            emit(&out, &to_json_string(&Value::Object(report)))
        }

        Command::MorseBott {
            function,
            vars,
            critical,
            c_vars,
            samples,
            tol,
            out,
        } => {
            let f_expr = expr::parse(&function).map_err(classify)?;
            let var_names = match vars {
                Some(v) => parse_names(&v),
                None => f_expr.free_vars(),
            };
            let n = var_names.len();
            let c_names = parse_names(&c_vars);
            let c_dim = c_names.len();
            let c_exprs: Vec<_> = critical
                .split(',')
                .map(|src| expr::parse(src).map_err(classify))
                .collect::<Result<_, _>>()?;
            if c_exprs.len() != n {
                return Err(usage(format!(
                    "--C has {} components but --f has {} variables",
                    c_exprs.len(),
                    n
                )));
            }
            let sample_points: Vec<Vec<f64>> = match samples {
                Some(s) => s
                    .split(';')
                    .map(parse_f64_csv)
                    .collect::<Result<_, _>>()?,
                None if c_dim == 0 => vec![vec![]],
                None if c_dim == 1 => vec![vec![-0.5], vec![0.0], vec![0.5]],
                None => return Err(usage("--samples required for c-dim > 1")),
            };
            let f_eval = {
                let names = var_names.clone();
                move |x: &[f64]| -> f64 {
                    let mut env = std::collections::HashMap::new();
                    for (name, &v) in names.iter().zip(x) {
                        env.insert(name.clone(), v);
                    }
                    f_expr.eval(&env).unwrap_or(f64::NAN)
                }
            };
            let param = {
                let names = c_names.clone();
                move |u: &[f64]| -> Vec<f64> {
                    let mut env = std::collections::HashMap::new();
                    for (name, &v) in names.iter().zip(u) {
                        env.insert(name.clone(), v);
                    }
                    c_exprs
                        .iter()
                        .map(|e| e.eval(&env).unwrap_or(f64::NAN))
                        .collect()
                }
            };
            let report =
                morse_bott_check(&f_eval, n, &param, c_dim, &sample_points, tol)
                    .map_err(classify)?;
            let samples_json: Vec<Value> = report
                .samples
                .iter()
                .map(|s| {
                    json!({
                        "point": s.point,
                        "verdict": match s.verdict {
                            SampleVerdict::Clean => "clean",
                            SampleVerdict::Degenerate => "degenerate",
                        },
                        "kernel_dim": s.kernel_dim,
                    })
                })
                .collect();
            let json_report = json!({
                "verdict": if report.clean { "clean" } else { "degenerate" },
                "samples": samples_json,
            });
            emit(&out, &to_json_string(&json_report))?;
            if report.clean {
                Ok(())
            } else {
                Err(CliError::Check("critical submanifold is degenerate".into()))
            }
        }

        Command::LagrangianCheck {
            case,
            h,
            trials,
            tol,
            seed,
            out,
        } => run_lagrangian_check(&case, h, trials, tol, seed, &out),
    }
}

struct LagrangianCase {
    name: &'static str,
    defect: f64,
    threshold: f64,
    /// corrupted controls must *exceed* the threshold
    expect_above: bool,
}

impl LagrangianCase {
    fn pass(&self) -> bool {
        if self.expect_above {
            self.defect > self.threshold
        } else {
            self.defect < self.threshold
        }
    }
}

fn run_lagrangian_check(
    case: &str,
    h: f64,
    trials: usize,
    tol: f64,
    seed: u64,
    out: &Option<String>,
) -> Result<(), CliError> {
    let wanted = |name: &str| case == "all" || case == name;
    let mut cases: Vec<LagrangianCase> = Vec::new();

    let frozen = |src: &str, space: usize| -> Result<GeneratingFunction, CliError> {
        let parsed = expr::parse(src).map_err(classify)?;
        let ham = Hamiltonian::from_expr(
            &parsed,
            &["p".to_string()],
            &["q".to_string()],
            &[0.0],
            space,
        )
        .map_err(classify)?;
        let s = hj_series(&ham, 10).map_err(classify)?;
        s.freeze_time(0.05).map_err(classify)
    };
    let defect_of = |gf: &GeneratingFunction, base: &[f64]| -> f64 {
        let sampler = genfun::relation_sampler(gf);
        let mut rng = seeded_rng(seed);
        lagrangian_defect(&|u| sampler(u), base, h, trials, &mut rng)
    };

    if wanted("identity") {
        let e = microgen_core::compose::identity_genfun(1, 8);
        cases.push(LagrangianCase {
            name: "identity",
            defect: defect_of(&e, &[0.1, 0.2]),
            threshold: tol,
            expect_above: false,
        });
    }
    if wanted("lift-square") {
        let phi = CoreMap::from_jets(
            vec![Jet::from_terms(1, 8, &[(&[2], 1.0)]).map_err(classify)?],
            vec![0.0],
        )
        .map_err(classify)?;
        let lift = GeneratingFunction::cotangent_lift(&phi);
        cases.push(LagrangianCase {
            name: "lift-square",
            defect: defect_of(&lift, &[0.3, 0.5]),
            threshold: tol,
            expect_above: false,
        });
    }
    if wanted("p2x") {
        let phi = CoreMap::zero_map(1, 1, 8);
        let rem = Jet::from_terms(2, 8, &[(&[2, 1], 1.0)]).map_err(classify)?;
        let gf = GeneratingFunction::new(
            phi,
            rem,
            microgen_core::genfun::Chart::default_names(1, 1),
        )
        .map_err(classify)?;
        cases.push(LagrangianCase {
            name: "p2x",
            defect: defect_of(&gf, &[0.2, 0.4]),
            threshold: tol,
            expect_above: false,
        });
    }
    if wanted("frozen-harmonic") {
        let gf = frozen("(p^2+q^2)/2", 10)?;
        cases.push(LagrangianCase {
            name: "frozen-harmonic",
            defect: defect_of(&gf, &[0.1, 0.2]),
            threshold: tol,
            expect_above: false,
        });
    }
    if wanted("frozen-pendulum") {
        let gf = frozen("p^2/2 + cos(q)", 16)?;
        cases.push(LagrangianCase {
            name: "frozen-pendulum",
            defect: defect_of(&gf, &[0.1, 0.2]),
            threshold: tol,
            expect_above: false,
        });
    }
    if wanted("so3") {
        let basis = LieBasis::so3();
        let sampler = symmetry_relation_sampler(
            &basis,
            so3_action,
            |z: &PhasePoint| so3_momentum_map(z, false),
            3,
        );
        let base = [0.02, -0.03, 0.04, 0.5, -0.2, 0.3, 0.1, 0.4, -0.3];
        let mut rng = seeded_rng(seed);
        let defect =
            symmetry_lagrangian_defect(&basis, &|u| sampler(u), &base, h, trials, &mut rng)
                .map_err(classify)?;
        cases.push(LagrangianCase {
            name: "so3",
            defect,
            threshold: tol,
            expect_above: false,
        });
    }
    if wanted("corrupted") {
        let e = microgen_core::compose::identity_genfun(1, 8);
        let sampler = genfun::relation_sampler(&e);
        let corrupted = move |u: &[f64]| {
            let mut pt = sampler(u);
            for p in pt.p2.iter_mut() {
                *p = -*p;
            }
            pt
        };
        let mut rng = seeded_rng(seed);
        let defect = lagrangian_defect(&corrupted, &[0.1, 0.2], h, trials, &mut rng);
        cases.push(LagrangianCase {
            name: "corrupted",
            defect,
            threshold: 1e-2,
            expect_above: true,
        });
    }
    if cases.is_empty() {
        return Err(usage(format!("unknown case `{case}`")));
    }

    let all_pass = cases.iter().all(LagrangianCase::pass);
    let case_json: Vec<Value> = cases
        .iter()
        .map(|c| {
            json!({
                "name": c.name,
                "defect": c.defect,
                "threshold": c.threshold,
                "expect": if c.expect_above { "above" } else { "below" },
                "pass": c.pass(),
            })
        })
        .collect();
    let report = json!({"cases": case_json, "pass": all_pass});
    emit(out, &to_json_string(&report))?;
    if all_pass {
        Ok(())
    } else {
        Err(CliError::Check("lagrangian suite failed".into()))
    }
}
