use std::path::Path;
use std::time::Instant;

use pca_core::{domains, kernels, parse_rule_file, AffineRule, FiniteRule, InitialLaw, NoiseSource, StateSpace, StreamId, TransitionRule};
use pca_engine::{simulate, EmpiricalMeasure, Projection, RuleMap, SystemState, TreeFamily, DEFAULT_BUDGET};
use pca_gaussian::{distance_recurrence_oracle, AffineParams, CovState};
use pca_graphs::{erdos_renyi, random_regular, truncated_regular_tree, unimodular_offspring, FiniteGraph, OffspringDistribution};
use pca_localfield::{GaussianLocalField, GwEnsemble, KeyMissPolicy, NuTable, RegularEnsemble, StepStats, UgwEnsemble};
use pca_verify::acceptance::{self, Mode, Status};
use pca_verify::{
    convergence_experiment, exchangeability_check, functionals, gaussian_counterexample_suite, limit_law, mass_transport_check, mrf_matrix,
    path7_vs_path5, rerooting_check, GraphFamily,
};
use serde_json::json;

use crate::config::{
    require_files, AffineArgs, ConvergeArgs, GaussianArgs, LocalfieldArgs, RuleArgs, RunConfig, SelftestArgs, SimulateArgs, VerifyArgs,
};
use crate::error::{invalid, CliError};
use crate::output::{num, Sink, Table};

fn parse_num<T: std::str::FromStr>(s: &str, what: &str) -> Result<T, CliError> {
    s.parse().map_err(|_| invalid(format!("bad {what} `{s}`")))
}

fn load_rule(path: &Path) -> Result<TransitionRule, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    parse_rule_file(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

/// The rule named by `--rule` or `--rule-file`, falling back to `default`.
fn any_rule(r: &RuleArgs, default: &str) -> Result<TransitionRule, CliError> {
    match (&r.rule, &r.rule_file) {
        (Some(_), Some(_)) => Err(invalid("give either rule or rule_file, not both")),
        (_, Some(p)) => load_rule(p),
        (name, None) => {
            let name = name.as_deref().unwrap_or(default);
            kernels::builtin(name).map(TransitionRule::Finite).ok_or_else(|| invalid(format!("unknown built-in rule `{name}`")))
        }
    }
}

fn finite_rule(r: &RuleArgs, default: &str) -> Result<FiniteRule, CliError> {
    match any_rule(r, default)? {
        TransitionRule::Finite(f) => Ok(f),
        _ => Err(invalid("this command needs a finite-state rule")),
    }
}

/// `--pmf`, defaulting to uniform on the alphabet.
fn initial_pmf(r: &RuleArgs, space: &StateSpace) -> Result<Vec<f64>, CliError> {
    let q = space.size() - space.has_cemetery() as usize;
    let pmf = r.pmf.clone().unwrap_or_else(|| vec![1.0 / q as f64; q]);
    if pmf.len() != q {
        return Err(invalid(format!("pmf has {} entries for an alphabet of {q}", pmf.len())));
    }
    InitialLaw::Finite(pmf.clone()).validate()?;
    Ok(pmf)
}

fn affine(args: &AffineArgs, file: Option<&Path>) -> Result<AffineRule, CliError> {
    if let Some(p) = file {
        return match load_rule(p)? {
            TransitionRule::Affine(a) => Ok(a),
            _ => Err(invalid(format!("{}: not a gaussian-affine rule", p.display()))),
        };
    }
    match (args.a, args.b, args.c) {
        (Some(a), Some(b), Some(c)) => Ok(AffineRule::new(a, b, c)),
        _ => Err(invalid("a Gaussian run needs a, b and c (or a gaussian-affine rule file)")),
    }
}

fn root_marginal(m: &EmpiricalMeasure, q: usize) -> Vec<f64> {
    let mut p = vec![0.0; q];
    for (atom, w) in m.iter() {
        let root = atom.split('|').next().unwrap_or(atom);
        if let Some(s) = root.chars().last().and_then(|c| c.to_digit(36)) {
            if (s as usize) < q {
                p[s as usize] += w;
            }
        }
    }
    p
}

fn marginal_headers(base: &[&str], q: usize) -> Vec<String> {
    base.iter().map(|s| s.to_string()).chain((0..q).map(|s| format!("p{s}"))).collect()
}

pub fn simulate_cmd(cfg: &RunConfig, a: &SimulateArgs) -> Result<(), CliError> {
    require_files([&a.graph_file, &a.rule.rule_file])?;
    let noise = NoiseSource::new(cfg.seed()?);
    let k = a.k.unwrap_or(10);
    let replicas = a.replicas.unwrap_or(1);
    if replicas == 0 {
        return Err(invalid("replicas must be positive"));
    }
    let graph = match (&a.graph, &a.graph_file) {
        (Some(_), Some(_)) => return Err(invalid("give either graph or graph_file, not both")),
        (None, Some(p)) => FiniteGraph::parse_edge_list(&std::fs::read_to_string(p)?, None)?,
        (spec, None) => build_graph(spec.as_deref().unwrap_or("cycle:10"), &noise)?,
    };
    let proj = match a.projection.as_deref().unwrap_or("neighborhood") {
        "neighborhood" => Projection::Neighborhood,
        "trajectory" => Projection::RootTrajectory,
        p => return Err(invalid(format!("unknown projection `{p}`"))),
    };
    let sink = Sink::open(cfg)?;
    match any_rule(&a.rule, "voter:0.25")? {
        TransitionRule::Finite(rule) => {
            let pmf = initial_pmf(&a.rule, rule.space())?;
            let states = simulate(&graph, RuleMap::Same(&rule), &InitialLaw::Finite(pmf), k, replicas, &noise)?;
            let q = rule.alphabet_size();
            let mut steps = Table::new(&[]);
            steps.headers = marginal_headers(&["time"], q);
            let total = (graph.n() * replicas) as f64;
            for t in 0..=k {
                let mut counts = vec![0usize; q];
                for s in &states {
                    for v in 0..graph.n() {
                        let x = s.trajectory(v)[t] as usize;
                        if x < q {
                            counts[x] += 1;
                        }
                    }
                }
                steps.push(std::iter::once(t.to_string()).chain(counts.iter().map(|&c| num(c as f64 / total))).collect());
            }
            let parts: Vec<EmpiricalMeasure> =
                states.iter().map(|s| EmpiricalMeasure::vertex_sweep(s, &graph, proj)).collect::<Result<_, _>>()?;
            sink.table("steps", &steps)?;
            sink.table("trajectories", &trajectory_table(&states, |x| rule.space().symbol_name(*x)))?;
            sink.table("measure", &Table::from_measure(&EmpiricalMeasure::mixture(&parts)?))?;
        }
        TransitionRule::Affine(rule) => {
            let states = simulate(&graph, RuleMap::Same(&rule), &InitialLaw::Gaussian { mean: 0.0, var: 1.0 }, k, replicas, &noise)?;
            let mut steps = Table::new(&["time", "mean", "var"]);
            for t in 0..=k {
                let xs: Vec<f64> = states.iter().flat_map(|s| (0..graph.n()).map(move |v| s.trajectory(v)[t])).collect();
                let n = xs.len() as f64;
                let m = xs.iter().sum::<f64>() / n;
                let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
                steps.push(vec![t.to_string(), num(m), num(var)]);
            }
            sink.table("steps", &steps)?;
            sink.table("trajectories", &trajectory_table(&states, |x| num(*x)))?;
        }
        TransitionRule::Custom(_) => return Err(invalid("custom rules cannot be loaded from files")),
    }
    Ok(())
}

fn trajectory_table<S>(states: &[SystemState<S>], show: impl Fn(&S) -> String) -> Table
where
    S: pca_engine::Simulable,
{
    let mut t = Table::new(&["replica", "vertex", "time", "state"]);
    for (r, s) in states.iter().enumerate() {
        for (v, tr) in s.trajectories().iter().enumerate() {
            for (time, x) in tr.iter().enumerate() {
                t.push(vec![r.to_string(), v.to_string(), time.to_string(), show(x)]);
            }
        }
    }
    t
}

/// Named graphs; the random ones draw from the graph noise domain.
pub fn build_graph(spec: &str, noise: &NoiseSource) -> Result<FiniteGraph, CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    let int = |i: usize| -> Result<usize, CliError> { parse_num(parts.get(i).copied().unwrap_or(""), "graph size") };
    let mut rng = noise.derive(domains::GRAPH).stream(StreamId::new(0, 0, 0));
    Ok(match (parts[0], parts.len()) {
        ("path", 2) => FiniteGraph::path(int(1)?),
        ("cycle", 2) => FiniteGraph::cycle(int(1)?)?,
        ("star", 2) => FiniteGraph::star(int(1)?),
        ("complete", 2) => FiniteGraph::complete(int(1)?),
        ("tree", 3) => truncated_regular_tree(int(1)?, int(2)?)?.to_graph(),
        ("er", 3) => erdos_renyi(int(1)?, parse_num(parts[2], "mean degree")?, &mut rng)?,
        ("rr", 3) => random_regular(int(1)?, int(2)?, &mut rng)?,
        _ => return Err(invalid(format!("unknown graph `{spec}`"))),
    })
}

fn offspring(p: &Option<Vec<f64>>, what: &str) -> Result<OffspringDistribution, CliError> {
    let p = p.clone().ok_or_else(|| invalid(format!("{what} is required for this engine")))?;
    Ok(OffspringDistribution::new(p)?)
}

fn stats_row(s: &StepStats, m: &EmpiricalMeasure, q: usize) -> Vec<String> {
    [s.time, s.keys, s.phantoms, s.rematched].iter().map(|x| x.to_string()).chain(root_marginal(m, q).into_iter().map(num)).collect()
}

pub fn localfield_cmd(cfg: &RunConfig, a: &LocalfieldArgs) -> Result<(), CliError> {
    require_files([&a.rule.rule_file])?;
    let engine = a.engine.as_deref().ok_or_else(|| invalid("engine is required"))?;
    let k = a.k.unwrap_or(3);
    let replicas = a.replicas.unwrap_or(10_000);
    let kappa = a.kappa.unwrap_or(2);
    let policy = match (a.policy.as_deref().unwrap_or("strict"), a.window) {
        ("strict", None) => KeyMissPolicy::Strict,
        ("windowed", Some(w)) if w > 0 => KeyMissPolicy::Windowed(w),
        ("windowed", _) => return Err(invalid("the windowed policy needs a positive window")),
        ("strict", Some(_)) => return Err(invalid("window only applies to the windowed policy")),
        (p, _) => return Err(invalid(format!("unknown key-miss policy `{p}`"))),
    };
    if engine == "regular-gaussian" {
        return gaussian_localfield(cfg, a, kappa, k, replicas);
    }
    let rule = finite_rule(&a.rule, "voter:0.25")?;
    let pmf = initial_pmf(&a.rule, rule.space())?;
    let q = rule.alphabet_size();
    let stochastic = engine != "regular-exact";
    let noise = NoiseSource::new(if stochastic { cfg.seed()? } else { cfg.seed.unwrap_or(0) });
    let mut steps = Table::new(&[]);
    let law = match engine {
        "regular-exact" => {
            steps.headers = marginal_headers(&["time", "atoms"], q);
            let mut nu = NuTable::initial(kappa, &pmf)?;
            let row = |nu: &NuTable| -> Result<Vec<String>, CliError> {
                let m = nu.neighborhood_measure()?;
                Ok([nu.horizon().to_string(), m.len().to_string()].into_iter().chain(root_marginal(&m, q).into_iter().map(num)).collect())
            };
            steps.push(row(&nu)?);
            for _ in 0..k {
                nu = nu.step(&rule, DEFAULT_BUDGET)?;
                steps.push(row(&nu)?);
            }
            nu.neighborhood_measure()?
        }
        "regular-ensemble" => {
            steps.headers = marginal_headers(&["time", "keys", "phantoms", "rematched"], q);
            let mut e = RegularEnsemble::new(kappa, &pmf, replicas, &noise)?;
            steps.push(stats_row(&StepStats::default(), &e.neighborhood_measure()?, q));
            for _ in 0..k {
                let s = e.step(&rule, &noise, policy)?;
                steps.push(stats_row(&s, &e.neighborhood_measure()?, q));
            }
            e.neighborhood_measure()?
        }
        "gw" => {
            steps.headers = marginal_headers(&["time", "keys", "phantoms", "rematched"], q);
            let root = offspring(&a.root_pmf, "root_pmf")?;
            let rest = offspring(&a.rest_pmf, "rest_pmf")?;
            let mut e = GwEnsemble::new(&root, &rest, &pmf, replicas, &noise)?;
            steps.push(stats_row(&StepStats::default(), &e.neighborhood_measure()?, q));
            for _ in 0..k {
                let s = e.step(&rule, &noise, policy)?;
                steps.push(stats_row(&s, &e.neighborhood_measure()?, q));
            }
            e.neighborhood_measure()?
        }
        "ugw" => {
            steps.headers = marginal_headers(&["time", "keys", "phantoms", "rematched"], q);
            if a.rest_pmf.is_some() {
                return Err(invalid("ugw derives the non-root law from root_pmf; drop rest_pmf"));
            }
            let root = offspring(&a.root_pmf, "root_pmf")?;
            unimodular_offspring(&root)?;
            let mut e = UgwEnsemble::new(&root, &pmf, replicas, &noise)?;
            steps.push(stats_row(&StepStats::default(), &e.neighborhood_measure()?, q));
            for _ in 0..k {
                let s = e.step(&rule, &noise, policy)?;
                steps.push(stats_row(&s, &e.neighborhood_measure()?, q));
            }
            e.neighborhood_measure()?
        }
        other => return Err(invalid(format!("unknown engine `{other}`"))),
    };
    let sink = Sink::open(cfg)?;
    sink.table("steps", &steps)?;
    sink.table("law", &Table::from_measure(&law))?;
    Ok(())
}

fn gaussian_localfield(cfg: &RunConfig, a: &LocalfieldArgs, kappa: usize, k: usize, replicas: usize) -> Result<(), CliError> {
    let r = affine(&a.affine, a.rule.rule_file.as_deref())?;
    let p = AffineParams::new(kappa, r.a, r.b, r.c).map_err(|e| invalid(e.to_string()))?;
    let noise = NoiseSource::new(cfg.seed()?);
    let mut g = GaussianLocalField::new(p, replicas, &noise)?;
    let mut steps = Table::new(&["time", "mean", "var", "exact_mean", "exact_var"]);
    let mf = replicas as f64;
    for t in 0..=k {
        if t > 0 {
            g.step(&noise)?;
        }
        let x = g.root_values(t);
        let m = x.iter().sum::<f64>() / mf;
        let v = x.iter().map(|y| (y - m).powi(2)).sum::<f64>() / (mf - 1.0);
        steps.push(vec![t.to_string(), num(m), num(v), num(g.cov().means()[t]), num(g.cov().a_scalar(0))]);
    }
    Sink::open(cfg)?.table("steps", &steps)
}

pub fn gaussian_cmd(cfg: &RunConfig, a: &GaussianArgs) -> Result<(), CliError> {
    require_files([&a.rule_file])?;
    let sink = Sink::open(cfg)?;
    if a.counterexamples.unwrap_or(false) {
        let s = gaussian_counterexample_suite()?;
        let mut t = Table::new(&["name", "value", "expected", "error", "status"]);
        for r in &s.rows {
            t.push(vec![r.name.clone(), format!("{:.13}", r.value), format!("{:.13}", r.expected), num(r.error), status(r.pass).into()]);
        }
        sink.table("counterexamples", &t)?;
        eprintln!("{}", status(s.pass));
        return if s.pass { Ok(()) } else { Err(CliError::Gate("counterexample values off".into())) };
    }
    let r = affine(&a.affine, a.rule_file.as_deref())?;
    let kappa = a.kappa.unwrap_or(3);
    let k = a.k.unwrap_or(20);
    let p = AffineParams::new(kappa, r.a, r.b, r.c).map_err(|e| invalid(e.to_string()))?;
    let timing = a.timing.unwrap_or(false);
    let oracle = a.oracle.unwrap_or(false).then(|| distance_recurrence_oracle(r.a, r.b, kappa, k));
    let mut headers = vec!["k", "A0", "A1", "A2", "A3", "A4", "m"];
    if oracle.is_some() {
        headers.push("oracle_max_dev");
    }
    if timing {
        headers.push("step_seconds");
    }
    let mut t = Table::new(&headers);
    let mut s = CovState::new(p);
    for step in 0..=k {
        let mut secs = 0.0;
        if step > 0 {
            let start = Instant::now();
            s.advance()?;
            secs = start.elapsed().as_secs_f64();
        }
        let rec = s.record();
        let mut row: Vec<String> = std::iter::once(rec.k.to_string()).chain(rec.a.iter().map(|&x| num(x))).chain([num(rec.m)]).collect();
        if let Some(o) = &oracle {
            row.push(num((0..5).map(|n| (rec.a[n] - o[step][n]).abs()).fold(0.0, f64::max)));
        }
        if timing {
            row.push(num(secs));
        }
        t.push(row);
    }
    sink.table("sweep", &t)
}

fn status(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

pub fn verify_cmd(cfg: &RunConfig, a: &VerifyArgs) -> Result<(), CliError> {
    require_files([&a.rule.rule_file])?;
    let suite = a.suite.as_deref().unwrap_or("all");
    let all = ["mrf", "consistency", "exchangeability", "transport", "rerooting"];
    let selected: Vec<&str> = if suite == "all" {
        all.to_vec()
    } else if all.contains(&suite) {
        vec![suite]
    } else {
        return Err(invalid(format!("unknown suite `{suite}`")));
    };
    let rule = finite_rule(&a.rule, "contact:0.3")?;
    let pmf = initial_pmf(&a.rule, rule.space())?;
    let law = InitialLaw::Finite(pmf);
    let k = a.k.unwrap_or(2);
    let replicas = a.replicas.unwrap_or(100_000);
    let tol = a.tolerance.unwrap_or(1e-12);
    let needs_seed = selected.iter().any(|s| !matches!(*s, "mrf" | "consistency"));
    let noise = NoiseSource::new(if needs_seed { cfg.seed()? } else { cfg.seed.unwrap_or(0) });
    let sink = Sink::open(cfg)?;
    let mut summary = Table::new(&["suite", "statistic", "value", "status"]);
    for (i, s) in selected.iter().enumerate() {
        let n = noise.derive(i as u64 + 1);
        match *s {
            "mrf" => {
                let r = mrf_matrix(k, tol)?;
                summary.push(vec!["mrf".into(), "max_residual".into(), num(r.max_residual), status(r.pass).into()]);
                sink.report("mrf", &r)?;
            }
            "consistency" => {
                let edge = kernels::builtin(a.edge_rule.as_deref().unwrap_or("majority:0.2"))
                    .ok_or_else(|| invalid("unknown edge rule"))?;
                let r = path7_vs_path5(&rule, &edge, k)?;
                summary.push(vec!["consistency".into(), "max_tv".into(), num(r.max_tv), status(r.pass).into()]);
                sink.report("consistency", &r)?;
            }
            "exchangeability" => {
                let u = OffspringDistribution::uniform(2);
                let r = exchangeability_check(&u, &u, &rule, &law, k, 2, replicas, &n, functionals::lag_agreement)?;
                summary.push(vec!["exchangeability".into(), "functional_z".into(), num(z(r.functional.value, r.functional.se)), status(r.pass).into()]);
                sink.report("exchangeability", &r)?;
            }
            "transport" => {
                let fam = TreeFamily::Ugw { root: OffspringDistribution::poisson(2.0)? };
                let r = mass_transport_check(&fam, &rule, &law, k, 1, k + 2, replicas, &n, functionals::occupied_neighbor)?;
                summary.push(vec!["transport".into(), "diff_z".into(), num(z(r.diff.value, r.diff.se)), status(r.diff.pass).into()]);
                sink.report("transport", &r)?;
            }
            "rerooting" => {
                let root = OffspringDistribution::poisson_truncated(2.0, 4)?;
                let rest = unimodular_offspring(&root)?;
                let r = rerooting_check(&root, &rest, &rule, &law, k.min(1), replicas, 100, &n, functionals::two_others)?;
                let worst = r.atoms.iter().map(|x| z(x.lhs - x.rhs, x.se)).fold(0.0, f64::max);
                summary.push(vec!["rerooting".into(), "worst_z".into(), num(worst), status(r.pass).into()]);
                sink.report("rerooting", &r)?;
            }
            _ => unreachable!(),
        }
    }
    sink.table("summary", &summary)
}

fn z(v: f64, se: f64) -> f64 {
    if se > 0.0 {
        v.abs() / se
    } else if v == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

fn family(spec: &str) -> Result<GraphFamily, CliError> {
    let (name, arg) = spec.split_once(':').ok_or_else(|| invalid(format!("family `{spec}` needs a parameter")))?;
    Ok(match name {
        "er" => GraphFamily::ErdosRenyi { lambda: parse_num(arg, "mean degree")? },
        "rr" => GraphFamily::RandomRegular { kappa: parse_num(arg, "degree")? },
        "config" => {
            let p: Vec<f64> = arg.split(',').map(|x| parse_num(x, "probability")).collect::<Result<_, _>>()?;
            GraphFamily::Configuration { degrees: OffspringDistribution::new(p)? }
        }
        _ => return Err(invalid(format!("unknown family `{name}`"))),
    })
}

pub fn converge_cmd(cfg: &RunConfig, a: &ConvergeArgs) -> Result<(), CliError> {
    require_files([&a.rule.rule_file])?;
    let fam = family(a.family.as_deref().unwrap_or("er:2"))?;
    let rule = finite_rule(&a.rule, "contact:0.25")?;
    let pmf = initial_pmf(&a.rule, rule.space())?;
    let sizes = a.sizes.clone().unwrap_or_else(|| vec![200, 1000, 5000]);
    let k = a.k.unwrap_or(3);
    let noise = NoiseSource::new(cfg.seed()?);
    let limit = limit_law(&fam, &rule, &pmf, k, a.lf_replicas.unwrap_or(200_000), &noise)?;
    let rep = convergence_experiment(&fam, &rule, &pmf, &sizes, k, a.seeds.unwrap_or(20), &limit, a.tolerance.unwrap_or(0.05), &noise)?;
    let sink = Sink::open(cfg)?;
    let mut t = Table::new(&["family", "n", "seeds", "tv", "se", "pass"]);
    for r in &rep.rows {
        t.push(vec![r.family.clone(), r.n.to_string(), r.seeds.to_string(), num(r.tv), num(r.se), r.pass.to_string()]);
    }
    sink.table("convergence", &t)?;
    sink.table("limit", &Table::from_measure(&limit))?;
    sink.report("summary", &json!({ "monotone": rep.monotone, "final_tv": rep.final_tv, "final_pass": rep.final_pass, "tolerance": rep.tolerance, "pass": rep.pass() }))
}

pub fn selftest_cmd(cfg: &RunConfig, a: &SelftestArgs) -> Result<(), CliError> {
    let mode = if a.quick.unwrap_or(false) { Mode::Quick } else { Mode::Full };
    let results = match a.only {
        Some(id) => vec![acceptance::run_one(id, mode).ok_or_else(|| invalid(format!("no criterion {id}")))?],
        None => acceptance::run_all(mode, |r| eprintln!("{}", r.line())),
    };
    if a.only.is_some() {
        eprintln!("{}", results[0].line());
    }
    let sink = Sink::open(cfg)?;
    let mut t = Table::new(&["id", "title", "status", "detail"]);
    for r in &results {
        let s = match r.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skip => "SKIP",
        };
        t.push(vec![r.id.to_string(), r.title.into(), s.into(), r.detail.clone()]);
    }
    sink.table("acceptance", &t)?;
    let failed: Vec<String> = results.iter().filter(|r| r.status == Status::Fail).map(|r| r.id.to_string()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Gate(format!("criteria {} failed", failed.join(", "))))
    }
}
