//! Dense two-phase simplex for the small linear programs posed by the
//! sector controllers.
//!
//! Problems are stated as `minimize c·x` subject to linear rows and simple
//! variable bounds. Pivoting follows Bland's rule in both phases, so the
//! same input always walks the same sequence of bases and returns the same
//! vertex.

use thiserror::Error;

/// Pivot and feasibility tolerance, applied to row-normalised data.
const EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub coefficients: Vec<f64>,
    pub sense: Sense,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    /// Objective coefficients (minimised).
    pub objective: Vec<f64>,
    pub rows: Vec<Row>,
    pub lower: Vec<f64>,
    pub upper: Vec<Option<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective_value: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum LpError {
    #[error("row {row} has {found} coefficients, expected {expected}")]
    DimensionMismatch {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("non-finite coefficient in {0}")]
    NonFinite(&'static str),
    #[error("variable {0} has upper bound below its lower bound")]
    EmptyBounds(usize),
}

impl LinearProgram {
    pub fn new(num_vars: usize) -> Self {
        Self {
            objective: vec![0.0; num_vars],
            rows: Vec::new(),
            lower: vec![0.0; num_vars],
            upper: vec![None; num_vars],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_row(&mut self, coefficients: Vec<f64>, sense: Sense, bound: f64) {
        self.rows.push(Row {
            coefficients,
            sense,
            bound,
        });
    }

    /// Adds a row from sparse `(variable, coefficient)` terms. Repeated
    /// variables accumulate.
    pub fn add_sparse_row(&mut self, terms: &[(usize, f64)], sense: Sense, bound: f64) {
        let mut coefficients = vec![0.0; self.num_vars()];
        for &(j, a) in terms {
            coefficients[j] += a;
        }
        self.add_row(coefficients, sense, bound);
    }

    pub fn set_upper(&mut self, var: usize, bound: f64) {
        self.upper[var] = Some(bound);
    }

    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        if self.lower.len() != n {
            return Err(LpError::DimensionMismatch {
                row: usize::MAX,
                expected: n,
                found: self.lower.len(),
            });
        }
        if self.upper.len() != n {
            return Err(LpError::DimensionMismatch {
                row: usize::MAX,
                expected: n,
                found: self.upper.len(),
            });
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(LpError::NonFinite("objective"));
        }
        for (i, row) in self.rows.iter().enumerate() {
            if row.coefficients.len() != n {
                return Err(LpError::DimensionMismatch {
                    row: i,
                    expected: n,
                    found: row.coefficients.len(),
                });
            }
            if !row.bound.is_finite() || row.coefficients.iter().any(|a| !a.is_finite()) {
                return Err(LpError::NonFinite("constraint row"));
            }
        }
        for j in 0..n {
            if !self.lower[j].is_finite() {
                return Err(LpError::NonFinite("lower bound"));
            }
            if let Some(u) = self.upper[j] {
                if !u.is_finite() {
                    return Err(LpError::NonFinite("upper bound"));
                }
                if u < self.lower[j] {
                    return Err(LpError::EmptyBounds(j));
                }
            }
        }
        Ok(())
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        dot(&self.objective, x)
    }

    /// Largest violation of any row or bound at `x`, each scaled by
    /// `max(1, |bound|)`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for row in &self.rows {
            let lhs = dot(&row.coefficients, x);
            let scale = 1.0_f64.max(row.bound.abs());
            let v = match row.sense {
                Sense::Le => lhs - row.bound,
                Sense::Ge => row.bound - lhs,
                Sense::Eq => (lhs - row.bound).abs(),
            };
            worst = worst.max(v / scale);
        }
        for (j, &xj) in x.iter().enumerate() {
            worst = worst.max((self.lower[j] - xj) / 1.0_f64.max(self.lower[j].abs()));
            if let Some(u) = self.upper[j] {
                worst = worst.max((xj - u) / 1.0_f64.max(u.abs()));
            }
        }
        worst
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `lp`. Infeasible and unbounded problems are reported through
/// [`LpSolution::status`]; only malformed input is an `Err`.
pub fn solve(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    lp.validate()?;
    let n = lp.num_vars();

    // Shift x = lower + y so every structural variable is y >= 0, and turn
    // finite upper bounds into explicit rows.
    let mut rows: Vec<(Vec<f64>, Sense, f64)> = Vec::with_capacity(lp.rows.len() + n);
    for row in &lp.rows {
        let shift = dot(&row.coefficients, &lp.lower);
        rows.push((row.coefficients.clone(), row.sense, row.bound - shift));
    }
    for j in 0..n {
        if let Some(u) = lp.upper[j] {
            let mut a = vec![0.0; n];
            a[j] = 1.0;
            rows.push((a, Sense::Le, u - lp.lower[j]));
        }
    }

    // Normalise: nonnegative right-hand side, unit max coefficient.
    for (a, sense, b) in rows.iter_mut() {
        if *b < 0.0 {
            a.iter_mut().for_each(|v| *v = -*v);
            *b = -*b;
            *sense = match *sense {
                Sense::Le => Sense::Ge,
                Sense::Ge => Sense::Le,
                Sense::Eq => Sense::Eq,
            };
        }
        let scale = a.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if scale > 0.0 {
            a.iter_mut().for_each(|v| *v /= scale);
            *b /= scale;
        }
    }

    let mut tableau = Tableau::build(n, &rows);

    // Phase one.
    if tableau.num_artificial > 0 {
        let mut phase_one = vec![0.0; tableau.num_cols];
        for c in tableau.artificial_start..tableau.num_cols {
            phase_one[c] = 1.0;
        }
        tableau.set_objective(&phase_one);
        let outcome = tableau.iterate(tableau.num_cols);
        debug_assert!(outcome, "phase one is bounded below by zero");
        let rhs_scale = rows.iter().fold(1.0_f64, |m, r| m.max(r.2));
        if tableau.objective_value() > EPS * rhs_scale {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                x: vec![f64::NAN; n],
                objective_value: f64::NAN,
            });
        }
        tableau.drive_out_artificials();
    }

    // Phase two over structural and slack columns only.
    let mut costs = vec![0.0; tableau.num_cols];
    costs[..n].copy_from_slice(&lp.objective);
    tableau.set_objective(&costs);
    if !tableau.iterate(tableau.artificial_start) {
        return Ok(LpSolution {
            status: LpStatus::Unbounded,
            x: vec![f64::NAN; n],
            objective_value: f64::NEG_INFINITY,
        });
    }

    let mut x = lp.lower.clone();
    for (r, &col) in tableau.basis.iter().enumerate() {
        if col < n {
            x[col] += tableau.rhs(r).max(0.0);
        }
    }
    // Snap values that rounding left a hair outside their bounds.
    for j in 0..n {
        if x[j] < lp.lower[j] {
            x[j] = lp.lower[j];
        }
        if let Some(u) = lp.upper[j] {
            if x[j] > u {
                x[j] = u;
            }
        }
    }
    let objective_value = lp.evaluate(&x);
    Ok(LpSolution {
        status: LpStatus::Optimal,
        x,
        objective_value,
    })
}

/// Row-major dense tableau. The last column holds the right-hand side and
/// the last row holds reduced costs.
struct Tableau {
    data: Vec<f64>,
    width: usize,
    num_rows: usize,
    num_cols: usize,
    artificial_start: usize,
    num_artificial: usize,
    basis: Vec<usize>,
}

impl Tableau {
    fn build(n: usize, rows: &[(Vec<f64>, Sense, f64)]) -> Self {
        let num_slack = rows.iter().filter(|r| r.1 != Sense::Eq).count();
        let num_artificial = rows.iter().filter(|r| r.1 != Sense::Le).count();
        let num_cols = n + num_slack + num_artificial;
        let width = num_cols + 1;
        let num_rows = rows.len();
        let mut data = vec![0.0; (num_rows + 1) * width];
        let mut basis = Vec::with_capacity(num_rows);
        let mut slack = n;
        let mut artificial = n + num_slack;
        for (i, (a, sense, b)) in rows.iter().enumerate() {
            let base = i * width;
            data[base..base + n].copy_from_slice(a);
            data[base + num_cols] = *b;
            match sense {
                Sense::Le => {
                    data[base + slack] = 1.0;
                    basis.push(slack);
                    slack += 1;
                }
                Sense::Ge => {
                    data[base + slack] = -1.0;
                    slack += 1;
                    data[base + artificial] = 1.0;
                    basis.push(artificial);
                    artificial += 1;
                }
                Sense::Eq => {
                    data[base + artificial] = 1.0;
                    basis.push(artificial);
                    artificial += 1;
                }
            }
        }
        Self {
            data,
            width,
            num_rows,
            num_cols,
            artificial_start: n + num_slack,
            num_artificial,
            basis,
        }
    }

    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.width + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.num_cols)
    }

    fn objective_value(&self) -> f64 {
        -self.at(self.num_rows, self.num_cols)
    }

    /// Loads cost vector `c` into the reduced-cost row, priced out against
    /// the current basis.
    fn set_objective(&mut self, c: &[f64]) {
        let obj = self.num_rows * self.width;
        for col in 0..self.width {
            self.data[obj + col] = if col < self.num_cols { c[col] } else { 0.0 };
        }
        for r in 0..self.num_rows {
            let cb = c[self.basis[r]];
            if cb != 0.0 {
                for col in 0..self.width {
                    self.data[obj + col] -= cb * self.data[r * self.width + col];
                }
            }
        }
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.width;
        let p = self.data[pr * w + pc];
        for col in 0..w {
            self.data[pr * w + col] /= p;
        }
        self.data[pr * w + pc] = 1.0;
        for r in 0..=self.num_rows {
            if r == pr {
                continue;
            }
            let f = self.data[r * w + pc];
            if f != 0.0 {
                for col in 0..w {
                    self.data[r * w + col] -= f * self.data[pr * w + col];
                }
                self.data[r * w + pc] = 0.0;
            }
        }
        self.basis[pr] = pc;
    }

    /// Bland's rule iterations over columns `< col_limit`. Returns `false`
    /// when an improving column has no blocking row (unbounded).
    fn iterate(&mut self, col_limit: usize) -> bool {
        loop {
            let obj = self.num_rows;
            let entering = (0..col_limit).find(|&c| self.at(obj, c) < -EPS);
            let Some(pc) = entering else {
                return true;
            };
            let mut leaving: Option<(usize, f64)> = None;
            for r in 0..self.num_rows {
                let a = self.at(r, pc);
                if a > EPS {
                    let ratio = self.rhs(r) / a;
                    leaving = match leaving {
                        None => Some((r, ratio)),
                        Some((lr, lratio)) => {
                            if ratio < lratio - EPS
                                || (ratio <= lratio + EPS && self.basis[r] < self.basis[lr])
                            {
                                Some((r, ratio))
                            } else {
                                Some((lr, lratio))
                            }
                        }
                    };
                }
            }
            match leaving {
                None => return false,
                Some((pr, _)) => self.pivot(pr, pc),
            }
        }
    }

    /// After phase one, pivots zero-level artificials out of the basis;
    /// rows with no eligible pivot are redundant and dropped.
    fn drive_out_artificials(&mut self) {
        let mut r = 0;
        while r < self.num_rows {
            if self.basis[r] >= self.artificial_start {
                let col = (0..self.artificial_start).find(|&c| self.at(r, c).abs() > EPS);
                match col {
                    Some(c) => {
                        self.pivot(r, c);
                        r += 1;
                    }
                    None => self.remove_row(r),
                }
            } else {
                r += 1;
            }
        }
    }

    fn remove_row(&mut self, r: usize) {
        let w = self.width;
        self.data.drain(r * w..(r + 1) * w);
        self.basis.remove(r);
        self.num_rows -= 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_binding_row() {
        let mut lp = LinearProgram::new(1);
        lp.objective[0] = 1.0;
        lp.add_row(vec![1.0], Sense::Ge, 5.0);
        let s = solve(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.x[0] - 5.0).abs() < 1e-12);
        assert!((s.objective_value - 5.0).abs() < 1e-12);
    }

    #[test]
    fn unbounded_is_reported() {
        let mut lp = LinearProgram::new(1);
        lp.objective[0] = -1.0;
        let s = solve(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Unbounded);
    }

    #[test]
    fn infeasible_is_reported() {
        let mut lp = LinearProgram::new(1);
        lp.objective[0] = 1.0;
        lp.add_row(vec![1.0], Sense::Ge, 5.0);
        lp.set_upper(0, 3.0);
        let s = solve(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Infeasible);
    }

    #[test]
    fn mismatched_row_is_malformed() {
        let mut lp = LinearProgram::new(2);
        lp.add_row(vec![1.0], Sense::Le, 1.0);
        assert!(matches!(
            solve(&lp),
            Err(LpError::DimensionMismatch { row: 0, .. })
        ));
    }

    #[test]
    fn equality_with_lower_bounds() {
        // min x + 2y, x + y = 10, x in [2, 6], y >= 1
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![1.0, 2.0];
        lp.add_row(vec![1.0, 1.0], Sense::Eq, 10.0);
        lp.lower = vec![2.0, 1.0];
        lp.set_upper(0, 6.0);
        let s = solve(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.x[0] - 6.0).abs() < 1e-12);
        assert!((s.x[1] - 4.0).abs() < 1e-12);
        assert!((s.objective_value - 14.0).abs() < 1e-12);
    }

    #[test]
    fn merit_order_dispatch() {
        // Three sources with costs 1 < 3 < 9, first two capped, demand 12.
        let mut lp = LinearProgram::new(3);
        lp.objective = vec![3.0, 1.0, 9.0];
        lp.set_upper(0, 5.0);
        lp.set_upper(1, 4.0);
        lp.add_row(vec![1.0, 1.0, 1.0], Sense::Eq, 12.0);
        let s = solve(&lp).unwrap();
        assert_eq!(s.x, vec![5.0, 4.0, 3.0]);
    }

    #[test]
    fn degenerate_redundant_equalities() {
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![1.0, 1.0];
        lp.add_row(vec![1.0, 1.0], Sense::Eq, 4.0);
        lp.add_row(vec![2.0, 2.0], Sense::Eq, 8.0);
        lp.add_row(vec![1.0, 0.0], Sense::Ge, 1.0);
        let s = solve(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective_value - 4.0).abs() < 1e-12);
        assert!(lp.max_violation(&s.x) < 1e-12);
    }

    #[test]
    fn repeated_solves_are_identical() {
        let mut lp = LinearProgram::new(3);
        lp.objective = vec![2.0, 2.0, 1.0];
        lp.add_row(vec![1.0, 1.0, 0.0], Sense::Ge, 3.0);
        lp.add_row(vec![0.0, 1.0, 1.0], Sense::Ge, 2.0);
        let a = solve(&lp).unwrap();
        let b = solve(&lp).unwrap();
        assert_eq!(a, b);
    }
}
