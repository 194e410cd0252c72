//! Brute-force reference solutions for the sector dispatch LPs.
//!
//! The exact reference enumerates every basic solution: all equality rows
//! are held tight and every choice of the remaining active constraints
//! (inequality rows and variable bounds) is solved as a square system.
//! The cheapest feasible vertex is the LP optimum whenever the feasible
//! region is bounded, which the generated instances guarantee by giving
//! open-ended variables a generous artificial cap.
//!
//! A coarser grid search over element capacities is kept as a spot check:
//! no grid point may beat the solver, and the grid optimum must close in on
//! the solver's objective as the grid resolution allows.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use sipg_core::agriculture;
use sipg_core::energy;
use sipg_core::lp::{self, LinearProgram, LpStatus, Sense};
use sipg_core::scenario::{ElementInstance, NodeId, Scenario, Sector, TemplateSpec};
use sipg_core::sector::Resolved;
use sipg_core::water;

/// Relative agreement required between the solver and the reference.
pub const OBJECTIVE_TOLERANCE: f64 = 1e-6;

/// Grid points per capacity in the spot check.
pub const GRID_STEPS: u32 = 1000;

pub fn relative_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

struct Constraint {
    a: Vec<f64>,
    sense: Sense,
    b: f64,
}

/// Cheapest feasible basic solution, with a flag set when it sits on an
/// artificial cap (meaning the true LP would be unbounded).
pub fn vertex_minimum(problem: &LinearProgram) -> Option<(f64, bool)> {
    let n = problem.num_vars();
    let scale = problem
        .rows
        .iter()
        .map(|r| r.bound.abs())
        .chain(problem.upper.iter().flatten().map(|u| u.abs()))
        .sum::<f64>();
    let cap = 1e3 * (scale + 1.0);

    let mut equalities = Vec::new();
    let mut inequalities = Vec::new();
    for r in &problem.rows {
        let c = Constraint {
            a: r.coefficients.clone(),
            sense: r.sense,
            b: r.bound,
        };
        if r.sense == Sense::Eq {
            equalities.push(c);
        } else {
            inequalities.push(c);
        }
    }
    let mut artificial = Vec::new();
    for i in 0..n {
        let mut a = vec![0.0; n];
        a[i] = 1.0;
        inequalities.push(Constraint {
            a: a.clone(),
            sense: Sense::Ge,
            b: problem.lower[i],
        });
        artificial.push(false);
        inequalities.push(Constraint {
            a,
            sense: Sense::Le,
            b: problem.upper[i].unwrap_or(cap),
        });
        artificial.push(problem.upper[i].is_none());
    }
    let offset = inequalities.len() - artificial.len();
    if equalities.len() > n {
        return None;
    }

    let k = n - equalities.len();
    let mut best: Option<(f64, bool)> = None;
    let mut chosen = Vec::with_capacity(k);
    combinations(inequalities.len(), k, 0, &mut chosen, &mut |active| {
        let rows: Vec<&Constraint> = equalities.iter().chain(active.iter().map(|&i| &inequalities[i])).collect();
        let Some(x) = solve_square(&rows) else { return };
        let feasible = equalities.iter().chain(&inequalities).all(|c| {
            let lhs: f64 = c.a.iter().zip(&x).map(|(a, x)| a * x).sum();
            let tol = 1e-7 * (1.0 + c.b.abs());
            match c.sense {
                Sense::Le => lhs <= c.b + tol,
                Sense::Ge => lhs >= c.b - tol,
                Sense::Eq => (lhs - c.b).abs() <= tol,
            }
        });
        if !feasible {
            return;
        }
        let value = problem.evaluate(&x);
        let on_cap = active.iter().any(|&i| i >= offset && artificial[i - offset]);
        if best.map_or(true, |(b, _)| value < b) {
            best = Some((value, on_cap));
        }
    });
    best
}

fn combinations(n: usize, k: usize, start: usize, chosen: &mut Vec<usize>, visit: &mut impl FnMut(&[usize])) {
    if chosen.len() == k {
        visit(chosen);
        return;
    }
    for i in start..n {
        if n - i < k - chosen.len() {
            break;
        }
        chosen.push(i);
        combinations(n, k, i + 1, chosen, visit);
        chosen.pop();
    }
}

/// Gaussian elimination with partial pivoting; `None` when singular.
fn solve_square(rows: &[&Constraint]) -> Option<Vec<f64>> {
    let n = rows.len();
    let mut m: Vec<Vec<f64>> = rows
        .iter()
        .map(|c| {
            let mut r = c.a.clone();
            r.push(c.b);
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        let norm = m[pivot][..n].iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
        if m[pivot][col].abs() <= 1e-12 * norm.max(1.0) {
            return None;
        }
        m.swap(col, pivot);
        for r in 0..n {
            if r != col {
                let f = m[r][col] / m[col][col];
                if f != 0.0 {
                    for c in col..=n {
                        m[r][c] -= f * m[col][c];
                    }
                }
            }
        }
    }
    Some((0..n).map(|i| m[i][n] / m[i][i]).collect())
}

/// Grid search over the capped variables of `problem`: each is fixed at
/// multiples of 1/`steps` of its capacity and the remaining variables are
/// optimised exactly.
pub fn grid_minimum(problem: &LinearProgram, steps: u32) -> Option<f64> {
    let capped: Vec<usize> = (0..problem.num_vars()).filter(|&i| problem.upper[i].is_some()).collect();
    let mut best: Option<f64> = None;
    let mut point = vec![0u32; capped.len()];
    loop {
        let mut fixed = problem.clone();
        for (&v, &k) in capped.iter().zip(&point) {
            let u = problem.upper[v].expect("capped variable");
            let x = problem.lower[v] + (u - problem.lower[v]) * f64::from(k) / f64::from(steps);
            fixed.lower[v] = x;
            fixed.upper[v] = Some(x);
        }
        if let Some((value, _)) = vertex_minimum(&fixed) {
            best = Some(best.map_or(value, |b: f64| b.min(value)));
        }
        let mut i = 0;
        loop {
            if i == point.len() {
                return best;
            }
            point[i] += 1;
            if point[i] <= steps {
                break;
            }
            point[i] = 0;
            i += 1;
        }
    }
}

/// One randomised sector instance: the LP as built by the sector
/// controller for 1–2 nodes and 1–3 operating elements.
pub struct Instance {
    pub sector: Sector,
    pub nodes: usize,
    pub elements: usize,
    pub lp: LinearProgram,
}

fn jitter(rng: &mut ChaCha8Rng, v: &mut f64) {
    *v *= rng.gen_range(0.5..1.5);
}

fn jitter_template(rng: &mut ChaCha8Rng, spec: &mut TemplateSpec) {
    match spec {
        TemplateSpec::Field {
            variable_cost,
            max_land,
            water_intensity,
            food_yield,
            labor_intensity,
        } => {
            for v in [variable_cost, max_land, water_intensity, food_yield, labor_intensity] {
                jitter(rng, v);
            }
        }
        TemplateSpec::Road {
            variable_cost,
            max_throughput,
            efficiency,
        } => {
            jitter(rng, variable_cost);
            jitter(rng, max_throughput);
            *efficiency = rng.gen_range(0.7..1.0);
        }
        TemplateSpec::Desalination {
            variable_cost,
            max_production,
            electricity_intensity,
        } => {
            for v in [variable_cost, max_production, electricity_intensity] {
                jitter(rng, v);
            }
        }
        TemplateSpec::Well {
            variable_cost,
            max_production,
            reservoir_intensity,
        } => {
            for v in [variable_cost, max_production, reservoir_intensity] {
                jitter(rng, v);
            }
        }
        TemplateSpec::Pipeline {
            variable_cost,
            max_throughput,
            electricity_intensity,
            efficiency,
        } => {
            for v in [variable_cost, max_throughput, electricity_intensity] {
                jitter(rng, v);
            }
            *efficiency = rng.gen_range(0.7..1.0);
        }
        TemplateSpec::PowerPlant {
            variable_cost,
            max_production,
            oil_intensity,
        } => {
            for v in [variable_cost, max_production, oil_intensity] {
                jitter(rng, v);
            }
        }
    }
}

/// Demand drawn around the operating capacity so that capacity, stock
/// and import limits all bind in some instances.
fn demand(rng: &mut ChaCha8Rng, typical: f64) -> f64 {
    if rng.gen_bool(0.1) {
        0.0
    } else {
        typical * rng.gen_range(0.0..2.0)
    }
}

pub fn random_instance(rng: &mut ChaCha8Rng, sector: Sector) -> Instance {
    let mut scenario = Scenario::default_scenario();
    let node_count = rng.gen_range(1..=2);
    let mut nodes = NodeId::ALL.to_vec();
    while nodes.len() > node_count {
        nodes.remove(rng.gen_range(0..nodes.len()));
    }
    scenario.nodes.retain(|n| nodes.contains(&n.id));
    for n in &mut scenario.nodes {
        let a = &mut n.agriculture;
        jitter(rng, &mut a.import_price);
        a.export_price = a.import_price * rng.gen_range(0.1..0.9);
        jitter(rng, &mut a.arable_land);
        jitter(rng, &mut a.labor_fraction);
        let w = &mut n.water;
        jitter(rng, &mut w.import_price);
        jitter(rng, &mut w.local_price);
        jitter(rng, &mut w.lift_aquifer_intensity);
        jitter(rng, &mut w.lift_electricity_intensity);
        w.coastal = u8::from(rng.gen_bool(0.7));
        let e = &mut n.energy;
        jitter(rng, &mut e.oil_import_price);
        e.oil_export_price = e.oil_import_price * rng.gen_range(0.1..0.9);
        jitter(rng, &mut e.oil_local_price);
        jitter(rng, &mut e.electricity_price);
        jitter(rng, &mut e.private_oil_intensity);
    }
    for t in scenario.templates.values_mut() {
        jitter_template(rng, &mut t.spec);
    }

    let candidates: Vec<String> = scenario
        .templates
        .iter()
        .filter(|(_, t)| t.spec.sector() == sector)
        .filter(|(_, t)| node_count == 2 || t.spec.kind() == sipg_core::scenario::ElementKind::Production)
        .map(|(k, _)| k.clone())
        .collect();
    let element_count = rng.gen_range(1..=3);
    let elements: Vec<ElementInstance> = (0..element_count)
        .map(|i| {
            let template = candidates[rng.gen_range(0..candidates.len())].clone();
            let origin = nodes[rng.gen_range(0..node_count)];
            let distribution = scenario.templates[&template].spec.kind() == sipg_core::scenario::ElementKind::Distribution;
            let destination = distribution.then(|| *nodes.iter().find(|&&n| n != origin).expect("two nodes"));
            ElementInstance {
                id: format!("{}-{template}-{i}", origin.as_str()),
                template,
                origin,
                destination,
                commission_start: 1950,
            }
        })
        .collect();
    let operating: Vec<Resolved<'_>> = elements
        .iter()
        .map(|e| Resolved {
            element: e,
            template: &scenario.templates[&e.template],
        })
        .collect();
    let capacity: f64 = operating.iter().map(|r| r.template.spec.capacity()).sum();

    let mut per_node = |typical: f64| -> BTreeMap<NodeId, f64> { nodes.iter().map(|&n| (n, demand(rng, typical))).collect() };
    let lp = match sector {
        Sector::Agriculture => {
            // food demand in GJ, population in millions
            let food = per_node(2e7);
            let population = per_node(2.0);
            agriculture::build_lp(&scenario, &operating, &food, &population).lp
        }
        Sector::Water => {
            let water_demand = per_node(capacity.max(100.0));
            let aquifer = per_node(0.2);
            water::build_lp(&scenario, &operating, &water_demand, &aquifer).lp
        }
        Sector::Petroleum => {
            let oil = per_node(5.0);
            let reservoir = per_node(0.01);
            energy::build_petroleum_lp(&scenario, &operating, &oil, &reservoir).lp
        }
        Sector::Electrical => {
            let electricity = per_node(capacity.max(1.0));
            energy::build_electricity_lp(&scenario, &operating, &electricity).lp
        }
    };
    Instance {
        sector,
        nodes: node_count,
        elements: element_count,
        lp,
    }
}

/// Solver and reference objectives for one instance.
pub struct Comparison {
    pub solver: f64,
    pub reference: f64,
    pub grid: Option<f64>,
}

/// The grid spot check runs only when `with_grid` is set and the instance
/// has a single capped variable, which keeps it exhaustive.
pub fn compare(instance: &Instance, with_grid: bool) -> Result<Comparison, String> {
    let solution = lp::solve(&instance.lp).map_err(|e| format!("{:?}: solver error {e}", instance.sector))?;
    let reference = vertex_minimum(&instance.lp);
    match (solution.status, reference) {
        (LpStatus::Optimal, Some((reference, false))) => {
            let capped = instance.lp.upper.iter().filter(|u| u.is_some()).count();
            let grid = (with_grid && capped == 1).then(|| grid_minimum(&instance.lp, GRID_STEPS)).flatten();
            Ok(Comparison {
                solver: solution.objective_value,
                reference,
                grid,
            })
        }
        (status, reference) => Err(format!(
            "{:?} with {} node(s) and {} element(s): solver {status:?}, reference {reference:?}",
            instance.sector, instance.nodes, instance.elements
        )),
    }
}
