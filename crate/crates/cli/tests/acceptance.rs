//! Acceptance gate. Runs without the libtest harness so that every criterion
//! prints exactly one PASS or FAIL line; exits non-zero if any fails.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use facplan::algorithms::{
    greedy_cardinality, la_single_step, multistep_planning, AdviceChain, GreedyMode, PlanOptions, PlanResult,
};
use facplan::model::{Element, PROPORTION_SCALE};
use facplan::objective::{ModularFunction, TableEntry, TableFunction};
use facplan::oracle::fixtures::{read_fixtures, read_json, AdviceFixture, InstanceSpec, ObjectiveSpec, OracleFixture};
use facplan::oracle::random::{random_coverage_instance, RandomSpec};
use facplan::oracle::{brute_force_opt, check_submodular_monotone, reference_type_counts, ConstraintClass};
use facplan::pipeline::{self, PlanRequest, RefineRequest};
use facplan::proportionality::{is_sigma_type_feasible, min_ratio_sequence};
use facplan::scenario::{PolicyMode, Scenario};
use facplan::{Cell, ElementId, Instance, Policy};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Rational upper bound on `1 - 1/e` (0.63212055882855767...), scaled by 1e16.
/// Using an upper bound makes every `(1 - 1/e)` lower-bound check stricter.
const ONE_MINUS_INV_E_NUM: i128 = 6_321_205_588_285_577;
const ONE_MINUS_INV_E_DEN: i128 = 10_000_000_000_000_000;

type Outcome = Result<String, String>;

fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn planning_fixtures() -> Vec<OracleFixture> {
    read_fixtures(&fixtures_dir().join("oracle_planning.json")).expect("oracle_planning.json")
}

fn advice_fixtures() -> Vec<AdviceFixture> {
    read_json(&fixtures_dir().join("oracle_advice.json")).expect("oracle_advice.json")
}

fn scenario(name: &str) -> Scenario {
    Scenario::load(&fixtures_dir().join(name)).expect(name)
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Integer value of an objective on integer-weight instances.
fn int(v: f64) -> Result<i128, String> {
    ensure(v.fract() == 0.0 && v.abs() < 1e15, || format!("{v} is not an exact integer"))?;
    Ok(v as i128)
}

fn plan(instance: &Instance, mode: GreedyMode) -> Result<PlanResult, String> {
    multistep_planning(instance, PlanOptions { mode, ..Default::default() }, None).map_err(|e| e.to_string())
}

fn sigma_feasibility() -> Outcome {
    let fixtures = planning_fixtures();
    let mut prefixes = 0;
    for fx in &fixtures {
        let instance = fx.instance.build().map_err(|e| e.to_string())?;
        let result = plan(&instance, GreedyMode::Lazy)?;
        let report = is_sigma_type_feasible(&result.selection(), &instance).map_err(|e| e.to_string())?;
        ensure(report.feasible, || format!("{}: {report:?}", fx.name))?;
        for r in &result.rounds {
            ensure(r.sigma_feasible, || format!("{} round {} flagged infeasible", fx.name, r.round))?;
        }
        prefixes += instance.horizon();
    }
    Ok(format!("{} instances, {prefixes} prefixes feasible", fixtures.len()))
}

fn half_approximation() -> Outcome {
    let fixtures = planning_fixtures();
    let mut worst = f64::INFINITY;
    for fx in &fixtures {
        let instance = fx.instance.build().map_err(|e| e.to_string())?;
        let result = plan(&instance, GreedyMode::Lazy)?;
        for (t, (&got, &opt)) in result.trajectory().iter().zip(&fx.sigma_prefix_optima).enumerate() {
            let (got_i, opt_i) = (int(got)?, int(opt)?);
            ensure(2 * got_i >= opt_i, || format!("{} prefix {}: {got} < 0.5 * {opt}", fx.name, t + 1))?;
            if opt > 0.0 {
                worst = worst.min(got / opt);
            }
        }
        ensure(result.total == fx.multistep_value, || {
            format!("{}: planner value {} drifted from frozen {}", fx.name, result.total, fx.multistep_value)
        })?;
    }
    Ok(format!("{} instances, worst prefix ratio {worst:.4}", fixtures.len()))
}

fn budget_trap(x: i64, eps: i64) -> Instance {
    let (a, b, c) = (ElementId(0), ElementId(1), ElementId(2));
    let (x, eps) = (x as f64, eps as f64);
    let entries = [
        (vec![], 0.0),
        (vec![a], x + eps),
        (vec![b], x),
        (vec![c], x + 2.0 * eps),
        (vec![a, b], 2.0 * x + eps),
        (vec![a, c], x + 2.0 * eps),
        (vec![b, c], 2.0 * x + 2.0 * eps),
        (vec![a, b, c], 2.0 * x + 2.0 * eps),
    ]
    .map(|(set, value)| TableEntry { set, value });
    let f = TableFunction::new(vec![a, b, c], &entries).unwrap();
    let element = |id: u32, round: usize| Element {
        id: ElementId(id),
        cell: Cell::new(0, id as usize),
        round,
        type_id: 1,
    };
    let elements = vec![element(0, 1), element(1, 1), element(2, 2)];
    Instance::new(2, 1, elements, vec![1, 1], Policy::unconstrained(1), Arc::new(f))
}

fn tightness_budget() -> Outcome {
    // x = 100 and eps = 10^-k are scaled by 10^k so the table is integral.
    let mut ratios = Vec::new();
    for k in 1..=4u32 {
        let scale = 10i64.pow(k);
        let (x, eps) = (100 * scale, 1);
        let instance = budget_trap(x, eps);
        let property = check_submodular_monotone(instance.objective(), &[ElementId(0), ElementId(1), ElementId(2)])
            .map_err(|e| e.to_string())?;
        ensure(property.holds(), || format!("table is not monotone submodular: {property:?}"))?;
        let result = plan(&instance, GreedyMode::Lazy)?;
        ensure(
            result.selection().rounds() == [vec![ElementId(0)], vec![ElementId(2)]],
            || format!("eps=1e-{k}: planner chose {:?}", result.selection().rounds()),
        )?;
        let opt = brute_force_opt(&instance, &ConstraintClass::SigmaTypeFeasible).map_err(|e| e.to_string())?;
        let (got, best) = (int(result.total)?, int(opt.value)?);
        ensure(got as i64 == x + 2 * eps && best as i64 == 2 * x + 2 * eps, || {
            format!("eps=1e-{k}: values {got} / {best}")
        })?;
        ratios.push((k, got as f64 / best as f64));
    }
    ensure(ratios.windows(2).all(|w| w[1].1 < w[0].1), || format!("ratios not decreasing: {ratios:?}"))?;
    // x = 100, eps = 0.001: exactly 100.002 / 200.002 = 0.50000499995...
    let at_3 = ratios[2].1;
    ensure(at_3 == 100_002.0 / 200_002.0 && at_3 < 0.51, || format!("x=100, eps=0.001 gives {at_3}"))?;
    ensure(ratios[3].1 - 0.5 < 1e-5, || format!("eps=1e-4 gives {}", ratios[3].1))?;
    let listed: Vec<String> = ratios.iter().map(|(k, r)| format!("1e-{k}:{r:.9}")).collect();
    Ok(listed.join(" "))
}

fn tightness_sigma() -> Outcome {
    let (types, k) = (3usize, 2usize);
    let budget = types * k + 1;
    let per_type = budget + 1;
    let elements: Vec<Element> = (0..types * per_type)
        .map(|i| Element {
            id: ElementId(i as u32),
            cell: Cell::new(i / per_type, i % per_type),
            round: 1,
            type_id: 1 + i / per_type,
        })
        .collect();
    let f = ModularFunction::new(elements.iter().map(|e| (e.id, if e.type_id == types { 1.0 } else { 0.0 })));
    let micro = vec![PROPORTION_SCALE / types as u64; types];
    let policy = Policy::from_micro(micro, (1..=types).collect());
    let instance = Instance::new(1, types, elements, vec![budget], policy, Arc::new(f));
    let result = plan(&instance, GreedyMode::Lazy)?;
    let counts = instance.type_counts_of(&result.selection().all()).map_err(|e| e.to_string())?;
    ensure(counts == [k + 1, k, k], || format!("planner type counts {counts:?}"))?;
    let opt = brute_force_opt(&instance, &ConstraintClass::TypeFeasible).map_err(|e| e.to_string())?;
    let (got, best) = (int(result.total)?, int(opt.value)?);
    ensure(got == k as i128 && best == k as i128 + 1, || format!("values {got} vs {best}"))?;
    ensure(got * (k as i128 + 1) == best * k as i128, || "ratio is not k/(k+1)".into())?;
    Ok(format!("r={types} k={k}: planner {got}, oracle {best}, ratio {got}/{best}"))
}

fn learning_augmented() -> Outcome {
    let fixtures = advice_fixtures();
    let mut checks = 0;
    for fx in &fixtures {
        let instance = fx.instance.build().map_err(|e| e.to_string())?;
        let f = instance.objective();
        let ground = instance.round_elements(1).to_vec();
        let budget = instance.budget(1);
        let out = la_single_step(&ground, budget, f, &fx.advice, &AdviceChain::Prefixes, &[], GreedyMode::Lazy)
            .map_err(|e| e.to_string())?;
        let opt = brute_force_opt(&instance, &ConstraintClass::Cardinality).map_err(|e| e.to_string())?;
        ensure(opt.value == fx.optimum, || format!("{}: optimum {} drifted from {}", fx.name, opt.value, fx.optimum))?;
        let opt_set = opt.selection.all();
        let (fu, fu0, fa, fopt) = (int(out.value)?, int(out.values[0])?, int(f.value(&fx.advice))?, int(opt.value)?);
        ensure(fu >= fu0.max(fa), || format!("{}: f(U)={fu} below max(f(U0)={fu0}, f(A)={fa})", fx.name))?;
        ensure(fu0 * ONE_MINUS_INV_E_DEN >= ONE_MINUS_INV_E_NUM * fopt, || {
            format!("{}: f(U0)={fu0} below (1-1/e)*{fopt}", fx.name)
        })?;
        for i in 0..=budget {
            let prefix = &fx.advice[..i];
            let f_prefix = int(f.value(prefix))?;
            let missing = opt_set.iter().filter(|e| !prefix.contains(e)).count();
            let ok = if i == budget || missing == 0 {
                fu >= f_prefix
            } else {
                let blocks = missing.div_ceil(budget - i) as i128;
                let mut union = prefix.to_vec();
                union.extend(opt_set.iter().filter(|e| !prefix.contains(e)));
                let lift = int(f.value(&union))? - f_prefix;
                (fu - f_prefix) * blocks * ONE_MINUS_INV_E_DEN >= ONE_MINUS_INV_E_NUM * lift
            };
            ensure(ok, || format!("{}: bound fails at chain index {i}", fx.name))?;
            checks += 1;
        }
    }
    Ok(format!("{} instances, {checks} chain-index bounds", fixtures.len()))
}

fn random_policy(rng: &mut ChaCha8Rng) -> Policy {
    let types = rng.gen_range(1..=5);
    let raw: Vec<u64> = (0..types).map(|_| if rng.gen_bool(0.2) { 0 } else { rng.gen_range(1..=20) }).collect();
    let total = raw.iter().sum::<u64>().max(1);
    let mass = rng.gen_range(1..=PROPORTION_SCALE);
    let micro: Vec<u64> = raw.iter().map(|&x| x * mass / total).collect();
    let mut sigma: Vec<usize> = (1..=types).collect();
    rand::seq::SliceRandom::shuffle(sigma.as_mut_slice(), rng);
    Policy::from_micro(micro, sigma)
}

fn sequence_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..500 {
        let policy = random_policy(&mut rng);
        let b = rng.gen_range(0..40);
        let (d1, d2) = (rng.gen_range(1..500), rng.gen_range(1..500));
        let s1 = min_ratio_sequence(&policy, b, d1);
        let s2 = min_ratio_sequence(&policy, b, d2);
        ensure(s1.entries == s2.entries, || format!("case {case}: d={d1} and d={d2} disagree"))?;
        if policy.is_constrained() {
            for len in 0..=b {
                let prefix = facplan::proportionality::TypeSequence {
                    entries: s1.entries[..len].to_vec(),
                    denominator: d1,
                };
                ensure(prefix.counts(policy.num_types()) == reference_type_counts(&policy, len), || {
                    format!("case {case}: prefix {len} differs from the reference counts")
                })?;
            }
        }
    }
    let fixtures = planning_fixtures();
    let mut compared = 0;
    for fx in &fixtures {
        let instance = fx.instance.build().map_err(|e| e.to_string())?;
        if !instance.policy().is_constrained() {
            continue;
        }
        let result = plan(&instance, GreedyMode::Lazy)?;
        let selection = result.selection();
        for t in 1..=instance.horizon() {
            let counts = instance.type_counts_of(&selection.cumulative(t)).map_err(|e| e.to_string())?;
            let expected = reference_type_counts(instance.policy(), instance.cumulative_budget(t));
            ensure(counts == expected, || format!("{} prefix {t}: {counts:?} vs {expected:?}", fx.name))?;
            compared += 1;
        }
    }
    Ok(format!("500 denominator cases; {compared} planner prefixes match the sequence multisets"))
}

fn objective_properties() -> Outcome {
    let spec = RandomSpec {
        max_round_size: 4,
        ..RandomSpec::default()
    };
    let mut largest = 0;
    for seed in 0..50 {
        let mut rng = ChaCha8Rng::seed_from_u64(5000 + seed);
        let inst = random_coverage_instance(&mut rng, &spec).build().map_err(|e| e.to_string())?;
        let ground: Vec<ElementId> = inst.elements().iter().map(|e| e.id).collect();
        ensure(ground.len() <= 12, || format!("seed {seed}: {} elements", ground.len()))?;
        largest = largest.max(ground.len());
        let report = check_submodular_monotone(inst.objective(), &ground).map_err(|e| e.to_string())?;
        ensure(report.holds(), || format!("seed {seed}: {report:?}"))?;
    }
    let ground: Vec<ElementId> = (0..4).map(ElementId).collect();
    let square = TableFunction::from_fn(ground.clone(), |s| (s.len() * s.len()) as f64).map_err(|e| e.to_string())?;
    let report = check_submodular_monotone(&square, &ground).map_err(|e| e.to_string())?;
    let witness = report.submodularity_violation.clone().ok_or("|S|^2 passed the submodularity check")?;
    ensure(!report.holds() && witness.gain_b > witness.gain_a, || format!("bad witness {witness:?}"))?;
    Ok(format!(
        "50 instances (up to {largest} elements) pass; |S|^2 witness: gain {} at {:?} < {} at {:?}",
        witness.gain_a, witness.a, witness.gain_b, witness.b
    ))
}

/// Coverage fixture with every population weight scaled by a factor drawn
/// from `[1 - eps, 1 + eps]`.
fn perturbed(spec: &InstanceSpec, eps: f64, rng: &mut ChaCha8Rng) -> InstanceSpec {
    let mut out = spec.clone();
    if let ObjectiveSpec::Coverage { population, .. } = &mut out.objective {
        for w in population.iter_mut().flatten() {
            *w *= 1.0 + rng.gen_range(-eps..=eps);
        }
    }
    out
}

fn proxy_degradation() -> Outcome {
    let fixtures = planning_fixtures();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst = f64::INFINITY;
    // eps = num / den.
    for (num, den) in [(1i128, 100i128), (1, 10)] {
        let eps = num as f64 / den as f64;
        for fx in &fixtures {
            let truth = fx.instance.build().map_err(|e| e.to_string())?;
            let proxy = perturbed(&fx.instance, eps, &mut rng).build().map_err(|e| e.to_string())?;
            let result = plan(&proxy, GreedyMode::Lazy)?;
            let achieved = int(truth.objective().value(&result.selection().all()))?;
            let opt = int(*fx.sigma_prefix_optima.last().unwrap())?;
            // achieved >= 1/2 * (1 - eps) / (1 + eps) * opt
            ensure(2 * achieved * (den + num) >= (den - num) * opt, || {
                format!("{} eps={eps}: true value {achieved} vs optimum {opt}", fx.name)
            })?;
            if opt > 0 {
                worst = worst.min(achieved as f64 / opt as f64);
            }
        }
    }
    Ok(format!(
        "{} instances x eps in {{0.01, 0.1}}, worst true ratio {worst:.4}",
        fixtures.len()
    ))
}

fn type_feasible_gap() -> Outcome {
    let mut summary = Vec::new();
    for k in [1usize, 2] {
        let spec = RandomSpec {
            max_horizon: 2,
            max_types: if k == 1 { 3 } else { 2 },
            max_budget: if k == 1 { 3 } else { 4 },
            max_round_size: 8,
            zero_proportion: 0.0,
            all_types_each_round: true,
            ..RandomSpec::default()
        };
        let mut qualifying = 0;
        let mut tried = 0;
        let mut worst: f64 = 0.0;
        while qualifying < 25 && tried < 600 {
            let mut rng = ChaCha8Rng::seed_from_u64(9000 + 1000 * k as u64 + tried);
            tried += 1;
            let instance = random_coverage_instance(&mut rng, &spec).build().map_err(|e| e.to_string())?;
            let sigma = brute_force_opt(&instance, &ConstraintClass::SigmaTypeFeasible).map_err(|e| e.to_string())?;
            let enough = (1..=instance.horizon()).all(|t| {
                instance
                    .type_counts_of(sigma.selection.round(t))
                    .map(|c| c.iter().all(|&n| n >= k))
                    .unwrap_or(false)
            });
            if !enough {
                continue;
            }
            qualifying += 1;
            let free = brute_force_opt(&instance, &ConstraintClass::TypeFeasible).map_err(|e| e.to_string())?;
            let (opt, opt_sigma) = (int(free.value)?, int(sigma.value)?);
            ensure(k as i128 * opt <= (k as i128 + 1) * opt_sigma, || {
                format!("k={k} seed {}: {opt} > (k+1)/k * {opt_sigma}", tried - 1)
            })?;
            if opt_sigma > 0 {
                worst = worst.max(opt as f64 / opt_sigma as f64);
            }
        }
        ensure(qualifying >= 25, || format!("k={k}: only {qualifying} of {tried} instances qualify"))?;
        summary.push(format!("k={k}: {qualifying} instances, max gap {worst:.4}"));
    }
    Ok(summary.join("; "))
}

fn lazy_matches_naive() -> Outcome {
    for fx in planning_fixtures() {
        let instance = fx.instance.build().map_err(|e| e.to_string())?;
        let (lazy, naive) = (plan(&instance, GreedyMode::Lazy)?, plan(&instance, GreedyMode::Naive)?);
        ensure(lazy.selection() == naive.selection() && lazy.total == naive.total, || {
            format!("{}: lazy and naive disagree", fx.name)
        })?;
    }
    for fx in advice_fixtures() {
        let instance = fx.instance.build().map_err(|e| e.to_string())?;
        let ground = instance.round_elements(1);
        let run = |mode| greedy_cardinality(ground, instance.budget(1), instance.objective(), &[], mode);
        let (lazy, naive) = (run(GreedyMode::Lazy).map_err(|e| e.to_string())?, run(GreedyMode::Naive).map_err(|e| e.to_string())?);
        ensure(lazy.picks == naive.picks, || format!("{}: lazy and naive disagree", fx.name))?;
    }
    let golden = scenario("golden_50.scn");
    let budgets = golden.file.budgets.clone();
    ensure(budgets == [12; 5], || format!("golden_50 budgets are {budgets:?}"))?;
    let start = Instant::now();
    let lazy = pipeline::plan(&golden, &PlanRequest::default(), None).map_err(|e| e.to_string())?;
    let lazy_time = start.elapsed();
    let naive_request = PlanRequest {
        mode: GreedyMode::Naive,
        ..PlanRequest::default()
    };
    let naive = pipeline::plan(&golden, &naive_request, None).map_err(|e| e.to_string())?;
    ensure(lazy.selection() == naive.selection(), || "golden_50: lazy and naive plans differ".into())?;
    ensure(2 * lazy.evaluations <= naive.evaluations, || {
        format!("golden_50: lazy {} vs naive {} evaluations", lazy.evaluations, naive.evaluations)
    })?;
    ensure(lazy_time < Duration::from_secs(10), || format!("golden_50 lazy plan took {lazy_time:?}"))?;
    Ok(format!(
        "all fixtures identical; golden_50 lazy {} / naive {} evaluations ({:.1}%), lazy plan {:.2}s",
        lazy.evaluations,
        naive.evaluations,
        100.0 * lazy.evaluations as f64 / naive.evaluations as f64,
        lazy_time.as_secs_f64()
    ))
}

fn experiment_shape() -> Outcome {
    let golden = scenario("golden_16.scn");
    let policies = [PolicyMode::Dp1, PolicyMode::Dp2];
    let sweep = pipeline::budget_sweep(&golden, &[1, 2, 3, 4, 5], &policies, GreedyMode::Lazy).map_err(|e| e.to_string())?;
    let mut ratios = Vec::new();
    for row in sweep.rows.iter().filter(|r| r.policy != PolicyMode::Dp0) {
        let ratio = row.ratio.ok_or_else(|| format!("no ratio at budget {}", row.budget_per_year))?;
        ensure(ratio >= 1.0, || format!("{} at budget {}: ratio {ratio}", row.policy, row.budget_per_year))?;
        ratios.push(format!("{}@{}={ratio:.4}", row.policy, row.budget_per_year));
    }
    let equity = pipeline::equity(&golden, &[PolicyMode::Dp0, PolicyMode::Dp1, PolicyMode::Dp2], GreedyMode::Lazy)
        .map_err(|e| e.to_string())?;
    let mut alphas = Vec::new();
    for p in policies {
        let own = equity.score(p, p).ok_or_else(|| format!("no alpha for {p} under {p}"))?;
        let base = equity.score(PolicyMode::Dp0, p).ok_or_else(|| format!("no alpha for dp0 under {p}"))?;
        ensure(own >= base, || format!("under {p}: own plan {own} < dp0 plan {base}"))?;
        alphas.push(format!("{p}: {own:.4} vs dp0 {base:.4}"));
    }
    let retro = scenario("retrospective_district.scn");
    let request = RefineRequest {
        round: 1,
        district: Some(1),
        ..RefineRequest::default()
    };
    let refined = pipeline::refine(&retro, &request).map_err(|e| e.to_string())?;
    let (u, g, a) = (refined.refined_value, refined.greedy_value, refined.advice_value);
    ensure(u > g && g > a, || format!("retrospective ordering is {}", refined.ordering))?;
    Ok(format!(
        "ratios [{}]; alpha_min [{}]; retrospective U={u} > G={g} > A={a}",
        ratios.join(" "),
        alphas.join("; ")
    ))
}

fn cli_service_parity() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let golden = fixtures_dir().join("golden_16.scn");
    let cli_out = dir.path().join("cli.json");
    let status = std::process::Command::new(env!("CARGO_BIN_EXE_facplan"))
        .arg("plan")
        .arg(&golden)
        .arg("--out")
        .arg(&cli_out)
        .stdout(std::process::Stdio::null())
        .status()
        .map_err(|e| e.to_string())?;
    ensure(status.success(), || format!("facplan plan exited with {status}"))?;
    let cli_bytes = std::fs::read(&cli_out).map_err(|e| e.to_string())?;

    let data = dir.path().join("data");
    std::fs::create_dir(&data).map_err(|e| e.to_string())?;
    let runtime = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
    let service_bytes = runtime.block_on(service_plan(&data, &golden))?;
    ensure(cli_bytes == service_bytes, || "CLI and service results differ".into())?;
    Ok(format!("{} identical bytes", cli_bytes.len()))
}

async fn service_plan(data: &Path, scenario: &Path) -> Result<Vec<u8>, String> {
    use facplan_service::{serve, AppState, ServiceConfig};
    let state = AppState::open(&ServiceConfig::new(data)).map_err(|e| e.to_string())?;
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.map_err(|e| e.to_string())?;
    let base = format!("http://{}", listener.local_addr().map_err(|e| e.to_string())?);
    let (stop, stopped) = tokio::sync::oneshot::channel::<()>();
    let server = tokio::spawn(serve(listener, state, async {
        let _ = stopped.await;
    }));
    let client = reqwest::Client::new();
    let err = |e: reqwest::Error| e.to_string();
    let text = std::fs::read_to_string(scenario).map_err(|e| e.to_string())?;
    let created: serde_json::Value =
        client.post(format!("{base}/scenarios")).body(text).send().await.map_err(err)?.json().await.map_err(err)?;
    let id = created["id"].as_str().ok_or("no scenario id")?;
    let job: serde_json::Value = client
        .post(format!("{base}/scenarios/{id}/plan"))
        .json(&serde_json::json!({}))
        .send()
        .await
        .map_err(err)?
        .json()
        .await
        .map_err(err)?;
    let job_id = job["id"].as_str().ok_or("no job id")?;
    let mut state = String::new();
    for _ in 0..1200 {
        let status: serde_json::Value =
            client.get(format!("{base}/jobs/{job_id}")).send().await.map_err(err)?.json().await.map_err(err)?;
        state = status["state"].as_str().unwrap_or_default().to_string();
        if state == "done" || state == "failed" {
            break;
        }
        tokio::time::sleep(Duration::from_millis(25)).await;
    }
    if state != "done" {
        return Err(format!("job ended in state `{state}`"));
    }
    let body = client.get(format!("{base}/jobs/{job_id}/result")).send().await.map_err(err)?.bytes().await.map_err(err)?;
    let _ = stop.send(());
    let _ = server.await;
    Ok(body.to_vec())
}

type Criterion = (&'static str, u64, fn() -> Outcome);

fn main() {
    let criteria: Vec<Criterion> = vec![
        ("sigma-type feasibility of every prefix", 10, sigma_feasibility),
        ("half-approximation of every prefix", 60, half_approximation),
        ("tightness under budget uncertainty", 1, tightness_budget),
        ("tightness under sigma ordering", 1, tightness_sigma),
        ("learning-augmented single step", 60, learning_augmented),
        ("min-ratio sequence properties", 10, sequence_properties),
        ("objective is monotone submodular", 30, objective_properties),
        ("proxy objective degradation", 60, proxy_degradation),
        ("type-feasible versus sigma-feasible optimum", 60, type_feasible_gap),
        ("lazy greedy equals naive and saves evaluations", 60, lazy_matches_naive),
        ("experiment shape on the golden region", 120, experiment_shape),
        ("CLI and service parity", 60, cli_service_parity),
    ];
    let total = criteria.len();
    let mut failed = 0;
    for (i, (name, limit, check)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let outcome = outcome.and_then(|detail| {
            if elapsed > Duration::from_secs(limit) {
                Err(format!("took {:.2}s, limit {limit}s ({detail})", elapsed.as_secs_f64()))
            } else {
                Ok(detail)
            }
        });
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("{tag} [{:>2}] {name} ({:.2}s): {detail}", i + 1, elapsed.as_secs_f64());
    }
    println!("acceptance: {} passed, {failed} failed", total - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
