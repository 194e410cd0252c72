//! Checks shared by the focused integration tests and the acceptance
//! report. Each returns a one-line detail on success and a reason on
//! failure.
#![allow(dead_code)]

pub mod oracle;

use std::path::PathBuf;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sipg_core::energy::{PetroleumDecision, ReservoirStock};
use sipg_core::federation::local::{replay, Frame};
use sipg_core::federation::{run_federated, Body, Coordinator, Message};
use sipg_core::fom::{
    self, ObjectClass, AQUIFER_STOCK, AQUIFER_WITHDRAWAL, CAPITAL_EXPENSES, CURRENCY_FLOW, FOOD_IN, FOOD_PRODUCTION,
    RESERVOIR_STOCK, RESERVOIR_WITHDRAWAL,
};
use sipg_core::kernel::{closure_gaps, run_mono};
use sipg_core::ledger::{FlowLedger, Publication};
use sipg_core::objectives::{Evaluator, ObjectiveReport, MAX_SCORE};
use sipg_core::scenario::{ElementInstance, NodeId, Plan, Role, Scenario, Sector};
use sipg_core::sector::Resolved;
use sipg_core::session::{compute_process_metrics, Session, SessionLog, Variant};
use sipg_core::societal::{self, Resource};
use sipg_core::water::{AquiferStock, WaterDecision};

pub type Check = Result<String, String>;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn element(id: &str, template: &str, origin: NodeId, destination: Option<NodeId>, year: i32) -> ElementInstance {
    ElementInstance {
        id: id.into(),
        template: template.into(),
        origin,
        destination,
        commission_start: year,
    }
}

fn ensure(ok: bool, reason: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(reason())
    }
}

// ------------------------------------------------------------- LP oracle

pub const ORACLE_SECTORS: [Sector; 4] = [Sector::Agriculture, Sector::Water, Sector::Petroleum, Sector::Electrical];

/// Compares the solver against the exhaustive vertex reference on
/// `per_sector` random instances of every sector LP, with the grid spot
/// check on every `grid_every`-th single-capacity instance.
pub fn lp_oracle(per_sector: usize, grid_every: usize, seed: u64) -> Check {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut grid_checked = 0;
    let mut grid_exact = 0;
    for sector in ORACLE_SECTORS {
        for i in 0..per_sector {
            let instance = oracle::random_instance(&mut rng, sector);
            let c = oracle::compare(&instance, i % grid_every == 0)?;
            let gap = oracle::relative_gap(c.solver, c.reference);
            worst = worst.max(gap);
            ensure(gap <= oracle::OBJECTIVE_TOLERANCE, || {
                format!("{sector:?} instance {i}: solver {} vs reference {} (gap {gap:e})", c.solver, c.reference)
            })?;
            if let Some(g) = c.grid {
                grid_checked += 1;
                let tol = oracle::OBJECTIVE_TOLERANCE * c.solver.abs().max(1.0);
                ensure(g >= c.solver - tol, || {
                    format!("{sector:?} instance {i}: grid point {g} beats solver {}", c.solver)
                })?;
                if oracle::relative_gap(g, c.solver) <= oracle::OBJECTIVE_TOLERANCE {
                    grid_exact += 1;
                }
            }
        }
    }
    let elapsed = started.elapsed();
    ensure(elapsed < Duration::from_secs(60), || format!("took {elapsed:?}"))?;
    Ok(format!(
        "{} instances, worst gap {worst:.1e}, grid spot checks {grid_exact}/{grid_checked} exact, {:.1}s",
        per_sector * ORACLE_SECTORS.len(),
        elapsed.as_secs_f64()
    ))
}

// ------------------------------------------------- federated vs single process

/// Ten scripted plans over the default scenario.
pub fn plan_sets() -> Vec<Plan> {
    use NodeId::*;
    let sets: Vec<Vec<ElementInstance>> = vec![
        vec![],
        vec![element("urban-solar-p1", "large_solar", Urban, None, 1985)],
        vec![
            element("urban-desal-p2", "large_desalination", Urban, None, 1990),
            element("rural-field-p2", "small_field", Rural, None, 1983),
        ],
        vec![
            element("rural-well-p3", "small_well", Rural, None, 1984),
            element("rural-industrial-pipe-p3", "small_pipeline", Rural, Some(Industrial), 1988),
        ],
        vec![
            element("rural-field-p4", "large_field", Rural, None, 1982),
            element("rural-urban-road-p4", "large_road", Rural, Some(Urban), 1983),
        ],
        vec![
            element("industrial-desal-p5", "huge_desalination", Industrial, None, 1995),
            element("urban-thermal-p5", "small_thermal", Urban, None, 1986),
        ],
        vec![
            element("industrial-well-p6", "large_well", Industrial, None, 1981),
            element("industrial-urban-pipe-p6", "large_pipeline", Industrial, Some(Urban), 1985),
            element("industrial-thermal-p6", "large_thermal", Industrial, None, 1990),
        ],
        vec![
            element("urban-solar-p7", "small_solar", Urban, None, 1980),
            element("rural-solar-p7", "small_solar", Rural, None, 1990),
            element("industrial-solar-p7", "small_solar", Industrial, None, 2000),
        ],
        vec![
            element("urban-field-p8", "small_field", Urban, None, 1980),
            element("urban-industrial-road-p8", "small_road", Urban, Some(Industrial), 1981),
            element("rural-desal-p8", "small_desalination", Rural, None, 1982),
        ],
        vec![
            element("rural-field-p9", "large_field", Rural, None, 1984),
            element("urban-desal-p9", "small_desalination", Urban, None, 1986),
            element("rural-well-p9", "large_well", Rural, None, 1988),
            element("industrial-thermal-p9", "small_thermal", Industrial, None, 1992),
            element("urban-solar-p9", "large_solar", Urban, None, 1998),
        ],
    ];
    sets.into_iter().map(Plan::new).collect()
}

pub fn federated_matches_mono() -> Check {
    let base = Scenario::default_scenario();
    let mut slowest = Duration::ZERO;
    let plans = plan_sets();
    for (i, plan) in plans.iter().enumerate() {
        let s = base.with_plan(plan).map_err(|e| format!("plan {i}: {e}"))?;
        let mono = run_mono(&s).map_err(|e| format!("plan {i}: {e}"))?;
        let started = Instant::now();
        let fed = run_federated(&s).map_err(|e| format!("plan {i}: {e}"))?;
        let elapsed = started.elapsed();
        slowest = slowest.max(elapsed);
        ensure(elapsed < Duration::from_secs(10), || format!("plan {i} took {elapsed:?}"))?;
        ensure(fed.ledger.to_csv() == mono.ledger.to_csv(), || format!("plan {i}: ledgers differ"))?;
        ensure(fed.years == mono.years, || format!("plan {i}: yearly summaries differ"))?;
        let bits = |r: &ObjectiveReport| {
            [
                r.agriculture.security,
                r.agriculture.financial,
                r.agriculture.political,
                r.water.security,
                r.water.financial,
                r.water.political,
                r.energy.security,
                r.energy.financial,
                r.energy.political,
                r.joint_financial,
                r.joint,
            ]
            .map(f64::to_bits)
        };
        let same = fed.reports().len() == mono.reports().len()
            && fed.reports().iter().zip(mono.reports()).all(|(a, b)| bits(a) == bits(b));
        ensure(same, || format!("plan {i}: objective reports differ"))?;
    }
    Ok(format!("{} plan sets identical, slowest federated run {:.2}s", plans.len(), slowest.as_secs_f64()))
}

// -------------------------------------------------------------- logistic

pub fn logistic() -> Check {
    let s = Scenario::default_scenario();
    let mut curves = 0;
    for node in &s.nodes {
        let p = &node.societal.population;
        let at_datum = societal::population(p, p.datum_year);
        ensure(at_datum == p.datum, || format!("{:?}: P(t0) = {at_datum}, expected {}", node.id, p.datum))?;
        let late = societal::population(p, p.datum_year + 200.0);
        ensure((late - p.max).abs() < 1e-3 * p.max, || format!("{:?}: P(t0 + 200) = {late}, cap {}", node.id, p.max))?;
        let trace: Vec<f64> = (1950..=2010).map(|y| societal::population(p, f64::from(y))).collect();
        ensure(trace.windows(2).all(|w| w[1] >= w[0]), || format!("{:?}: population not monotone", node.id))?;
        curves += 1;
        for resource in Resource::ALL {
            let d = societal::demand_params(node, resource);
            let trace: Vec<f64> = (1950..=2010).map(|y| societal::per_capita_demand(d, f64::from(y))).collect();
            let rising = trace.windows(2).all(|w| w[1] >= w[0]);
            let falling = trace.windows(2).all(|w| w[1] <= w[0]);
            ensure(rising || falling, || format!("{:?}: {resource:?} demand not monotone", node.id))?;
            ensure(trace.iter().all(|v| *v >= d.min.min(d.max) && *v <= d.max.max(d.min)), || {
                format!("{:?}: {resource:?} demand leaves its bounds", node.id)
            })?;
            curves += 1;
        }
    }
    Ok(format!("{curves} curves over {} nodes", s.nodes.len()))
}

// ------------------------------------------------------ objective bounds

fn value(rng: &mut ChaCha8Rng, signed: bool) -> f64 {
    let v = match rng.gen_range(0..6) {
        0 => 0.0,
        1 => rng.gen_range(0.0..1e-6),
        2 => 10f64.powf(rng.gen_range(-3.0..12.0)),
        _ => rng.gen_range(0.0..1e3),
    };
    if signed && rng.gen_bool(0.4) {
        -v
    } else {
        v
    }
}

/// A ledger with random stocks, withdrawals, food flows, revenues and
/// capital spending from the planning start through `end`.
pub fn random_ledger(rng: &mut ChaCha8Rng, plan_start: i32, end: i32, iteration: u32) -> FlowLedger {
    let mut l = FlowLedger::new();
    let unsigned = [
        (ObjectClass::AgricultureSystem, FOOD_PRODUCTION),
        (ObjectClass::SocietalSystem, FOOD_IN),
        (ObjectClass::WaterSystem, AQUIFER_STOCK),
        (ObjectClass::WaterSystem, AQUIFER_WITHDRAWAL),
        (ObjectClass::PetroleumSystem, RESERVOIR_STOCK),
        (ObjectClass::PetroleumSystem, RESERVOIR_WITHDRAWAL),
    ];
    let sectors = [
        ObjectClass::AgricultureSystem,
        ObjectClass::WaterSystem,
        ObjectClass::PetroleumSystem,
        ObjectClass::ElectricalSystem,
    ];
    for year in plan_start..=end {
        for n in NodeId::ALL {
            for (class, attribute) in unsigned {
                l.insert(year, iteration, &Publication::new(class, attribute, n.as_str(), value(rng, false)))
                    .expect("fresh key");
            }
            for class in sectors {
                l.insert(year, iteration, &Publication::new(class, CURRENCY_FLOW, n.as_str(), 1e6 * value(rng, true)))
                    .expect("fresh key");
                l.insert(year, iteration, &Publication::new(class, CAPITAL_EXPENSES, n.as_str(), 1e6 * value(rng, false)))
                    .expect("fresh key");
            }
        }
    }
    l
}

fn scores(r: &ObjectiveReport) -> [f64; 11] {
    [
        r.agriculture.security,
        r.agriculture.financial,
        r.agriculture.political,
        r.water.security,
        r.water.financial,
        r.water.political,
        r.energy.security,
        r.energy.financial,
        r.energy.political,
        r.joint_financial,
        r.joint,
    ]
}

fn constant_ledger(end: i32, iteration: u32, rows: &[(ObjectClass, &'static str, f64)]) -> FlowLedger {
    let mut l = FlowLedger::new();
    for year in 1980..=end {
        for &(class, attribute, v) in rows {
            l.insert(year, iteration, &Publication::new(class, attribute, "urban", v)).expect("fresh key");
        }
    }
    l
}

/// The analytic anchors, as (name, computed, expected).
pub fn objective_anchors(s: &Scenario) -> Vec<(&'static str, f64, f64)> {
    let it = s.horizon.iterations_per_year;
    let mut out = Vec::new();
    let [lo, hi] = s.objectives.aquifer_band;
    let mid = 0.5 * (lo + hi);
    let l = constant_ledger(2000, it, &[(ObjectClass::WaterSystem, AQUIFER_STOCK, mid), (ObjectClass::WaterSystem, AQUIFER_WITHDRAWAL, 1.0)]);
    out.push(("aquifer lifetime at band midpoint", Evaluator::new(s, &l).aquifer_security(2000).unwrap(), 500.0));
    let [lo, hi] = s.objectives.reservoir_band;
    let mid = 0.5 * (lo + hi);
    let l = constant_ledger(
        2000,
        it,
        &[(ObjectClass::PetroleumSystem, RESERVOIR_STOCK, mid), (ObjectClass::PetroleumSystem, RESERVOIR_WITHDRAWAL, 1.0)],
    );
    out.push(("reservoir lifetime at band midpoint", Evaluator::new(s, &l).reservoir_security(2000).unwrap(), 500.0));
    let l = constant_ledger(
        1995,
        it,
        &[(ObjectClass::AgricultureSystem, FOOD_PRODUCTION, 750.0), (ObjectClass::SocietalSystem, FOOD_IN, 1000.0)],
    );
    out.push(("food supply at target", Evaluator::new(s, &l).food_security(1995).unwrap(), 1000.0));
    let l = constant_ledger(
        1995,
        it,
        &[(ObjectClass::AgricultureSystem, FOOD_PRODUCTION, 375.0), (ObjectClass::SocietalSystem, FOOD_IN, 1000.0)],
    );
    out.push(("food supply at half target", Evaluator::new(s, &l).food_security(1995).unwrap(), 500.0));
    let l = constant_ledger(1995, it, &[(ObjectClass::SocietalSystem, FOOD_IN, 1000.0)]);
    out.push(("no food supply", Evaluator::new(s, &l).food_security(1995).unwrap(), 0.0));
    let l = constant_ledger(1995, it, &[(ObjectClass::WaterSystem, AQUIFER_STOCK, 5.0)]);
    out.push(("no aquifer withdrawal", Evaluator::new(s, &l).aquifer_security(1995).unwrap(), 1000.0));
    let l = constant_ledger(
        1995,
        it,
        &[
            (ObjectClass::AgricultureSystem, FOOD_PRODUCTION, 800.0),
            (ObjectClass::SocietalSystem, FOOD_IN, 1000.0),
            (ObjectClass::WaterSystem, AQUIFER_STOCK, 5.0),
            (ObjectClass::PetroleumSystem, RESERVOIR_STOCK, 5.0),
            (ObjectClass::WaterSystem, CURRENCY_FLOW, 1e15),
            (ObjectClass::AgricultureSystem, CURRENCY_FLOW, 1e15),
        ],
    );
    let report = Evaluator::new(s, &l).report(1995).unwrap();
    out.push(("joint with every component saturated", report.joint, 1000.0));
    out
}

pub fn objective_bounds(ledgers: usize, seed: u64) -> Check {
    let s = Scenario::default_scenario();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let it = s.horizon.iterations_per_year;
    let plan_start = s.horizon.plan_start;
    for i in 0..ledgers {
        let end = rng.gen_range(plan_start..=s.horizon.end);
        let l = random_ledger(&mut rng, plan_start, end, it);
        let t = rng.gen_range(plan_start..=end);
        let report = Evaluator::new(&s, &l).report(t).map_err(|e| format!("ledger {i}: {e}"))?;
        for v in scores(&report) {
            ensure(v.is_finite() && (0.0..=MAX_SCORE).contains(&v), || format!("ledger {i}: score {v} out of range"))?;
        }
    }
    let anchors = objective_anchors(&s);
    for (name, got, want) in &anchors {
        ensure((got - want).abs() <= 1e-9, || format!("{name}: {got}, expected {want}"))?;
    }
    Ok(format!("{ledgers} random ledgers in range, {} anchors exact", anchors.len()))
}

// --------------------------------------------------------- demand closure

pub fn demand_closure() -> Check {
    let s = Scenario::default_scenario();
    let run = run_mono(&s).map_err(|e| e.to_string())?;
    let gaps = closure_gaps(&s, &run.ledger);
    ensure(!gaps.is_empty(), || "no pairings checked".into())?;
    let mut worst: f64 = 0.0;
    for (year, node, attribute, supply, demand) in &gaps {
        let gap = (supply - demand).abs() / demand.abs().max(1e-12);
        ensure(gap <= 1e-6 || (supply - demand).abs() <= 1e-12, || {
            format!("{year} {node:?} {attribute}: supply {supply}, demand {demand}")
        })?;
        if demand.abs() > 1e-12 {
            worst = worst.max(gap);
        }
    }
    Ok(format!("{} pairings, worst relative gap {worst:.1e}", gaps.len()))
}

// ----------------------------------------------------------------- stocks

fn stock_trace(s: &Scenario, ledger: &FlowLedger, class: ObjectClass, attribute: &'static str, node: NodeId) -> Vec<f64> {
    s.horizon
        .years()
        .filter_map(|y| ledger.get(y, s.horizon.iterations_per_year, class, attribute, node.as_str()))
        .collect()
}

/// Constant withdrawals from both stocks, sized to use half of each
/// stock over `years`, compared with linear depletion.
pub fn linear_depletion(years: i32) -> Result<(f64, f64), String> {
    let s = Scenario::default_scenario();
    let aquifer_node = s
        .nodes
        .iter()
        .max_by(|a, b| a.water.initial_aquifer.total_cmp(&b.water.initial_aquifer))
        .expect("nodes");
    let node = aquifer_node.id;
    let mut aquifer = AquiferStock::initial(&s);
    let v0 = aquifer.volume[&node];
    let per_year = 0.5 * v0 / f64::from(years);
    // km³/year -> MCM lifted per year
    let lift = per_year * 1e3 / aquifer_node.water.lift_aquifer_intensity;
    let decision = WaterDecision {
        lift: [(node, lift)].into_iter().collect(),
        ..WaterDecision::default()
    };
    let mut worst_aquifer: f64 = 0.0;
    for k in 1..=years {
        aquifer = aquifer.update(&s, &decision, 1980 + k).map_err(|e| e.to_string())?;
        let expected = v0 - f64::from(k) * per_year;
        worst_aquifer = worst_aquifer.max((aquifer.volume[&node] - expected).abs());
    }

    let node = s
        .nodes
        .iter()
        .max_by(|a, b| a.energy.initial_reservoir.total_cmp(&b.energy.initial_reservoir))
        .expect("nodes")
        .id;
    let well = element("well-fixture", "small_well", node, None, 1950);
    let resolved = [Resolved {
        element: &well,
        template: s.template("small_well").expect("template"),
    }];
    let intensity = match s.template("small_well").expect("template").spec {
        sipg_core::scenario::TemplateSpec::Well { reservoir_intensity, .. } => reservoir_intensity,
        _ => unreachable!("small_well is a well"),
    };
    let mut reservoir = ReservoirStock::initial(&s);
    let q0 = reservoir.volume[&node];
    let per_year = 0.5 * q0 / f64::from(years);
    // Gtoe/year -> Mtoe produced per year
    let produced = PetroleumDecision {
        production: [(well.id.clone(), per_year * 1e3 / intensity)].into_iter().collect(),
        ..PetroleumDecision::default()
    };
    let mut worst_reservoir: f64 = 0.0;
    for k in 1..=years {
        reservoir = reservoir.update(&s, &resolved, &produced, 1980 + k).map_err(|e| e.to_string())?;
        let expected = q0 - f64::from(k) * per_year;
        worst_reservoir = worst_reservoir.max((reservoir.volume[&node] - expected).abs());
    }
    Ok((worst_aquifer, worst_reservoir))
}

pub fn stocks() -> Check {
    let base = Scenario::default_scenario();
    let drilled = base.with_plan(&plan_sets()[9]).map_err(|e| e.to_string())?;
    let mut traces = 0;
    for s in [&base, &drilled] {
        let run = run_mono(s).map_err(|e| e.to_string())?;
        for node in s.node_ids() {
            for (class, attribute) in [(ObjectClass::WaterSystem, AQUIFER_STOCK), (ObjectClass::PetroleumSystem, RESERVOIR_STOCK)] {
                let trace = stock_trace(s, &run.ledger, class, attribute, node);
                ensure(!trace.is_empty(), || format!("{node:?} {attribute}: no trace"))?;
                if let Some(w) = trace.windows(2).find(|w| w[1] > w[0]) {
                    return Err(format!("{node:?} {attribute} rises from {} to {}", w[0], w[1]));
                }
                traces += 1;
            }
        }
    }
    let (aquifer, reservoir) = linear_depletion(40)?;
    ensure(aquifer <= 1e-9 && reservoir <= 1e-9, || {
        format!("linear depletion off by {aquifer:e} (aquifer), {reservoir:e} (reservoir)")
    })?;
    Ok(format!("{traces} traces non-increasing, linear depletion within {:.1e}", aquifer.max(reservoir)))
}

// --------------------------------------------------------------- protocol

pub fn one_year() -> Scenario {
    let mut s = Scenario::default_scenario();
    s.horizon.start = 1980;
    s.horizon.end = 1980;
    s
}

/// A coordinator past gating with the first sub-step granted.
pub fn started_coordinator() -> Coordinator {
    let mut c = Coordinator::new(one_year());
    for (i, r) in Role::ALL.into_iter().enumerate() {
        c.handle(
            i as u64,
            Message::new(
                r.as_str(),
                Body::Join {
                    role: r.into(),
                    publications: fom::publications(r),
                    subscriptions: fom::subscriptions(r),
                },
            ),
        );
    }
    for body in [Body::Init, Body::Execute] {
        for (i, r) in Role::ALL.into_iter().enumerate() {
            c.handle(i as u64, Message::new(r.as_str(), body.clone()));
        }
    }
    for (i, r) in Role::ALL.into_iter().enumerate() {
        c.handle(i as u64, Message::new(r.as_str(), Body::TimeRequest { year: 1980, iteration: 1 }));
    }
    c
}

pub const STALE_UPDATE_FRAME: &str = r#"{"protocolVersion":1,"federateId":"water","kind":"error","code":"stale_update","message":"update for (1979, 4) does not match the current sub-step Some((1980, 1))"}"#;
pub const OUT_OF_ORDER_FRAME: &str = r#"{"protocolVersion":1,"federateId":"agriculture","kind":"error","code":"out_of_order","message":"request for (1980, 6) is out of order; expected (1980, 2)"}"#;

pub fn protocol() -> Check {
    let text = std::fs::read_to_string(fixture("golden_transcript.txt")).map_err(|e| e.to_string())?;
    let golden: Vec<Frame> = text
        .lines()
        .map(|l| Frame::parse(l).ok_or_else(|| format!("unreadable transcript line: {l}")))
        .collect::<Result<_, _>>()?;
    let replayed = replay(&mut Coordinator::new(one_year()), &golden);
    ensure(replayed.len() == golden.len(), || format!("{} frames replayed, {} expected", replayed.len(), golden.len()))?;
    if let Some(i) = replayed.iter().zip(&golden).position(|(a, b)| a != b) {
        return Err(format!("frame {i} differs"));
    }

    let mut c = started_coordinator();
    let stale = c.handle(
        1,
        Message::new(
            "water",
            Body::AttrUpdate {
                year: 1979,
                iteration: 4,
                updates: vec![],
            },
        ),
    );
    ensure(stale.len() == 1 && stale[0].message.to_json() == STALE_UPDATE_FRAME, || "stale update frame differs".into())?;
    let early = c.handle(0, Message::new("agriculture", Body::TimeRequest { year: 1980, iteration: 6 }));
    ensure(early.len() == 1 && early[0].message.to_json() == OUT_OF_ORDER_FRAME, || {
        "out-of-order frame differs".into()
    })?;
    Ok(format!("{} golden frames replayed byte-for-byte, 2 error frames exact", golden.len()))
}

// ---------------------------------------------------- exchange accounting

pub fn synchronous_session() -> Result<Session, String> {
    let mut s = Session::new("sync", Variant::V1A, Scenario::default_scenario());
    let mut t = 0;
    let plans = [
        (Role::Energy, element("urban-solar-x", "large_solar", NodeId::Urban, None, 1985)),
        (Role::Water, element("urban-desal-x", "large_desalination", NodeId::Urban, None, 1990)),
        (Role::Agriculture, element("rural-field-x", "large_field", NodeId::Rural, None, 1983)),
        (Role::Energy, element("rural-industrial-pipe-x", "small_pipeline", NodeId::Rural, Some(NodeId::Industrial), 1988)),
    ];
    let err = |e: sipg_core::session::SessionError| e.to_string();
    for (role, e) in plans {
        t += 10;
        s.add_element(t, role, e).map_err(err)?;
        for r in Role::ALL {
            t += 1;
            s.initialize(t, r).map_err(err)?;
        }
        t += 1;
        s.execute(t, None).map_err(err)?;
    }
    t += 1;
    s.remove_element(t, Role::Water, "urban-desal-x").map_err(err)?;
    t += 1;
    s.execute(t, None).map_err(err)?;
    t += 1;
    s.close(t).map_err(err)?;
    Ok(s)
}

/// Exchange counts after each step of a scripted asynchronous session.
pub fn asynchronous_counts() -> Result<Vec<u32>, String> {
    let mut scenario = Scenario::default_scenario();
    scenario.horizon.start = 1978;
    scenario.horizon.end = 1982;
    let mut s = Session::new("async", Variant::V2, scenario);
    let mut t = 0;
    let mut counts = Vec::new();
    for role in [Role::Agriculture, Role::Agriculture, Role::Water, Role::Water, Role::Energy, Role::Agriculture, Role::Water] {
        t += 1;
        s.execute(t, Some(role)).map_err(|e| e.to_string())?;
        t += 1;
        s.export(t, role).map_err(|e| e.to_string())?;
        counts.push(s.metrics().num_exchanges);
    }
    Ok(counts)
}

pub fn exchange_accounting() -> Check {
    let sync = synchronous_session()?;
    let n = sync.metrics().num_exchanges;
    ensure(n == 5, || format!("synchronous session counted {n} exchanges, expected 5"))?;
    let counts = asynchronous_counts()?;
    ensure(counts == [0, 0, 0, 0, 1, 1, 1], || format!("asynchronous counts {counts:?}"))?;
    let text = std::fs::read_to_string(fixture("session11.ndjson")).map_err(|e| e.to_string())?;
    let log = SessionLog::from_ndjson(&text).map_err(|e| e.to_string())?;
    let m = compute_process_metrics(&log);
    ensure(m.num_exchanges == 7 && m.joint_executions == 0, || {
        format!("fixture counted {} exchanges and {} joint executions", m.num_exchanges, m.joint_executions)
    })?;
    Ok("5 joint executions -> 5; asynchronous exchange only after all three refresh; fixture -> 7".into())
}

// ----------------------------------------------------------------- budget

/// Limit above every legacy year's spending; the plan overlaps a large
/// well (1984–1986) with a large solar plant (1985–1987), so only 1985
/// and 1986 exceed it.
pub fn budget_scenario() -> Result<Scenario, String> {
    let mut s = Scenario::default_scenario();
    s.budget_limit = 1e9;
    let plan = Plan::new(vec![
        element("rural-well-b", "large_well", NodeId::Rural, None, 1984),
        element("urban-solar-b", "large_solar", NodeId::Urban, None, 1985),
    ]);
    s.with_plan(&plan).map_err(|e| e.to_string())
}

pub fn budget() -> Check {
    let s = budget_scenario()?;
    let run = run_mono(&s).map_err(|e| e.to_string())?;
    let violations = run.budget_violations();
    ensure(violations == [1985, 1986], || format!("violation years {violations:?}"))?;
    let last = run.years.last().map(|y| y.year);
    ensure(last == Some(s.horizon.end), || format!("run stopped at {last:?}"))?;
    ensure(run.report(s.horizon.end).is_some(), || "no final report".into())?;
    Ok(format!("violations {violations:?}, run completed through {}", s.horizon.end))
}
