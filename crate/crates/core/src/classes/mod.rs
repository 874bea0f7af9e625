//! Semi-decision predicates for the structured tensor classes.
//!
//! Verdicts are three-valued. `CertifiedHolds` is issued only through exact
//! coefficient arguments (sign scans, the positive-diagonal characterization
//! on nonnegative tensors). `Falsified` always carries a witness that has
//! survived an independent replay through `apply`/`apply_scalar`. Everything
//! else is `Unfalsified` with effort counters; it is evidence, not proof.

mod replay;
mod search;

pub use replay::replay_witness;

use itertools::Itertools;
use rand::Rng;

use crate::budget::{SearchBudget, PAIR_TOL};
use crate::error::CheckError;
use crate::solver::{solve, SolveStatus, TCPInstance};
use crate::tensor::{embed, IndexSet, Tensor};

/// The tensor classes this crate can test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Class {
    Nonnegative,
    Q,
    R0,
    R,
    Er,
    SemiPositive,
    P0,
    P0Prime,
    Sp0,
    Copositive,
}

impl Class {
    pub const ALL: [Class; 10] = [
        Class::Nonnegative,
        Class::Q,
        Class::R0,
        Class::R,
        Class::Er,
        Class::SemiPositive,
        Class::P0,
        Class::P0Prime,
        Class::Sp0,
        Class::Copositive,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Class::Nonnegative => "nonnegative",
            Class::Q => "Q",
            Class::R0 => "R0",
            Class::R => "R",
            Class::Er => "ER",
            Class::SemiPositive => "semipositive",
            Class::P0 => "P0",
            Class::P0Prime => "P0prime",
            Class::Sp0 => "SP0",
            Class::Copositive => "copositive",
        }
    }

    /// Case-insensitive parse accepting the common spellings.
    pub fn parse(s: &str) -> Option<Class> {
        match s.to_ascii_lowercase().as_str() {
            "nonnegative" => Some(Class::Nonnegative),
            "q" => Some(Class::Q),
            "r0" => Some(Class::R0),
            "r" => Some(Class::R),
            "er" => Some(Class::Er),
            "semipositive" | "semi-positive" => Some(Class::SemiPositive),
            "p0" => Some(Class::P0),
            "p0prime" | "p0'" => Some(Class::P0Prime),
            "sp0" => Some(Class::Sp0),
            "copositive" => Some(Class::Copositive),
            _ => None,
        }
    }
}

impl std::fmt::Display for Class {
    fmt_name!();
}

macro_rules! fmt_name {
    () => {
        fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
            f.write_str(self.name())
        }
    };
}
use fmt_name;

/// What a falsification points at.
#[derive(Debug, Clone, PartialEq)]
pub enum WitnessKind {
    /// A single point violating the class condition.
    Point(Vec<f64>),
    /// A pair violating the componentwise monotonicity condition.
    Pair(Vec<f64>, Vec<f64>),
    /// A point with the scalar multiplier of the coupled system.
    PointScalar(Vec<f64>, f64),
    /// A coefficient address (full tuple) or a component index (singleton).
    Index(Vec<usize>),
    /// A constant vector whose instance is certified unsolvable.
    QVector(Vec<f64>),
}

impl std::fmt::Display for WitnessKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let join = |v: &[f64]| v.iter().map(f64::to_string).join(", ");
        match self {
            WitnessKind::Point(x) => write!(f, "point ({})", join(x)),
            WitnessKind::Pair(x, y) => write!(f, "pair ({}) / ({})", join(x), join(y)),
            WitnessKind::PointScalar(x, t) => write!(f, "point ({}) t {t}", join(x)),
            WitnessKind::Index(idx) => {
                write!(f, "index ({})", idx.iter().map(usize::to_string).join(","))
            }
            WitnessKind::QVector(q) => write!(f, "q ({})", join(q)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub kind: WitnessKind,
    /// Magnitude by which the defining inequality is violated; positive.
    pub violation: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    CertifiedHolds,
    Falsified,
    Unfalsified,
}

impl Status {
    pub fn token(self) -> &'static str {
        match self {
            Status::CertifiedHolds => "CERTIFIED",
            Status::Falsified => "FALSIFIED",
            Status::Unfalsified => "UNFALSIFIED",
        }
    }
}

/// Search effort behind a verdict.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Effort {
    pub samples: usize,
    pub searches: usize,
    pub seed: u64,
    pub note: Option<String>,
}

impl Effort {
    fn new(seed: u64) -> Self {
        Effort {
            seed,
            ..Effort::default()
        }
    }

    /// No search ran; the answer came from an exact scan.
    fn exact() -> Self {
        Effort::default()
    }
}

/// Three-valued classification result.
#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub class: Class,
    pub status: Status,
    /// Names the exactness argument behind a certified or exact verdict.
    pub certificate: Option<String>,
    pub witness: Option<Witness>,
    pub effort: Effort,
}

impl Verdict {
    fn certified(class: Class, certificate: &str, effort: Effort) -> Self {
        Verdict {
            class,
            status: Status::CertifiedHolds,
            certificate: Some(certificate.to_string()),
            witness: None,
            effort,
        }
    }

    fn falsified(class: Class, witness: Witness, certificate: Option<&str>, effort: Effort) -> Self {
        debug_assert!(witness.violation > 0.0);
        Verdict {
            class,
            status: Status::Falsified,
            certificate: certificate.map(str::to_string),
            witness: Some(witness),
            effort,
        }
    }

    fn unfalsified(class: Class, effort: Effort) -> Self {
        Verdict {
            class,
            status: Status::Unfalsified,
            certificate: None,
            witness: None,
            effort,
        }
    }

    fn with_note(mut self, note: impl Into<String>) -> Self {
        self.effort.note = Some(note.into());
        self
    }

    pub fn is_falsified(&self) -> bool {
        self.status == Status::Falsified
    }

    pub fn is_certified(&self) -> bool {
        self.status == Status::CertifiedHolds
    }

    /// Certified or unfalsified; what a `Holds` expectation accepts.
    pub fn not_falsified(&self) -> bool {
        !self.is_falsified()
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} {}", self.class, self.status.token())?;
        if let Some(w) = &self.witness {
            write!(f, " witness {} violation {}", w.kind, w.violation)?;
        }
        if let Some(c) = &self.certificate {
            write!(f, " certificate {c}")?;
        }
        Ok(())
    }
}

pub const CERT_COEFF_SCAN: &str = "coefficient-scan";
pub const CERT_NONNEG_DIAGONAL: &str = "nonnegative-diagonal";
pub const CERT_ZERO_DIAGONAL: &str = "zero-diagonal";
pub const CERT_NONNEG_COEFFS: &str = "nonnegative-coefficients";
pub const CERT_COEFF_DEPENDENCE: &str = "coefficient-dependence";

/// Note tag set when every grid q of the empirical Q check was solved.
pub const NOTE_Q_GRID_SOLVED: &str = "q-grid-all-solved";
/// Note tag set when some instance came back unresolved.
pub const NOTE_SOLVER_INCOMPLETE: &str = "solver-incomplete";

fn unit_vector(j: usize, n: usize) -> Vec<f64> {
    let mut e = vec![0.0; n];
    e[j - 1] = 1.0;
    e
}

fn nonempty_supports(n: usize) -> Vec<IndexSet> {
    let mut out = Vec::new();
    for k in 1..=n {
        for combo in (1..=n).combinations(k) {
            out.push(IndexSet::new(combo).expect("valid combination"));
        }
    }
    out
}

/// Zeroes components at or below the support threshold.
fn snap_point(x: &mut [f64], tol: f64) {
    for v in x.iter_mut() {
        if v.abs() <= tol {
            *v = 0.0;
        }
    }
}

/// Ties pair coordinates that differ by at most the pair tolerance.
fn snap_pair(x: Vec<f64>, mut y: Vec<f64>) -> (Vec<f64>, Vec<f64>) {
    for (xi, yi) in x.iter().zip(y.iter_mut()) {
        if (xi - *yi).abs() <= PAIR_TOL {
            *yi = *xi;
        }
    }
    (x, y)
}

// stream tag bases, one per randomized search family
const TAG_R0: u64 = 1 << 44;
const TAG_R: u64 = 2 << 44;
const TAG_ER: u64 = 3 << 44;
const TAG_SEMIPOS: u64 = 4 << 44;
const TAG_POINT_PRODUCT: u64 = 5 << 44;
const TAG_SP0: u64 = 6 << 44;
const TAG_COPOSITIVE: u64 = 7 << 44;
const TAG_QGRID: u64 = 8 << 44;

/// Exact coefficient scan.
pub fn is_nonnegative(t: &Tensor) -> Verdict {
    match t.first_negative() {
        None => Verdict::certified(Class::Nonnegative, CERT_COEFF_SCAN, Effort::exact()),
        Some((tuple, c)) => Verdict::falsified(
            Class::Nonnegative,
            Witness {
                kind: WitnessKind::Index(tuple),
                violation: -c,
            },
            Some(CERT_COEFF_SCAN),
            Effort::exact(),
        ),
    }
}

/// Exact scan of the `n` diagonal coefficients.
pub fn has_positive_diagonal(t: &Tensor) -> bool {
    t.diagonal().iter().all(|&d| d > 0.0)
}

/// Exact Q decision for nonnegative tensors: membership is equivalent to a
/// strictly positive diagonal. A zero diagonal entry `j` yields `e_j` as a
/// re-checkable witness (its homogeneous system is satisfied exactly).
pub fn check_q_nonnegative(t: &Tensor) -> Result<Verdict, CheckError> {
    if let Some((tuple, _)) = t.first_negative() {
        return Err(CheckError::NotNonnegative(tuple));
    }
    match t.diagonal().iter().position(|&d| !(d > 0.0)) {
        None => Ok(Verdict::certified(
            Class::Q,
            CERT_NONNEG_DIAGONAL,
            Effort::exact(),
        )),
        Some(idx) => {
            let e = unit_vector(idx + 1, t.dim());
            let violation =
                replay_witness(t, Class::Q, &WitnessKind::Point(e.clone()), &SearchBudget::default())
                    .expect("unit witness at a zero diagonal always re-verifies");
            Ok(Verdict::falsified(
                Class::Q,
                Witness {
                    kind: WitnessKind::Point(e),
                    violation,
                },
                Some(CERT_ZERO_DIAGONAL),
                Effort::exact(),
            ))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum HomSystem {
    R0,
    R,
    Er,
}

impl HomSystem {
    fn class(self) -> Class {
        match self {
            HomSystem::R0 => Class::R0,
            HomSystem::R => Class::R,
            HomSystem::Er => Class::Er,
        }
    }

    fn tag(self) -> u64 {
        match self {
            HomSystem::R0 => TAG_R0,
            HomSystem::R => TAG_R,
            HomSystem::Er => TAG_ER,
        }
    }
}

/// Tries a candidate point (with an induced multiplier where the system has
/// one) as a witness for the homogeneous system of `kind`.
fn try_system_witness(
    t: &Tensor,
    point: &[f64],
    kind: HomSystem,
    budget: &SearchBudget,
) -> Option<Witness> {
    let mut x = point.to_vec();
    snap_point(&mut x, budget.support_tol);
    if x.iter().all(|&v| v == 0.0) {
        return None;
    }
    let kind_and_replay = |kind_w: WitnessKind| {
        replay_witness(t, kind.class(), &kind_w, budget)
            .ok()
            .map(|violation| Witness {
                kind: kind_w,
                violation,
            })
    };
    match kind {
        HomSystem::R0 => kind_and_replay(WitnessKind::Point(x)),
        HomSystem::R | HomSystem::Er => {
            let ax = t.apply(&x).ok()?;
            let mut sum = 0.0;
            let mut count = 0usize;
            for (&xi, &fi) in x.iter().zip(&ax) {
                if xi > 0.0 {
                    sum += match kind {
                        HomSystem::R => -fi,
                        HomSystem::Er => -fi / xi,
                        HomSystem::R0 => unreachable!(),
                    };
                    count += 1;
                }
            }
            if count == 0 {
                return None;
            }
            let mut tval = sum / count as f64;
            if tval < 0.0 {
                if tval < -budget.feas_tol {
                    return None;
                }
                tval = 0.0;
            }
            if tval.abs() <= budget.feas_tol {
                tval = 0.0;
            }
            kind_and_replay(WitnessKind::PointScalar(x, tval))
        }
    }
}

/// Shared driver for the R0 / R / ER checks: certified fast path on
/// nonnegative tensors, unit-vector hints, then per-support searches with the
/// simplex normalization valid under the stated homogeneity.
fn check_homogeneous_system(t: &Tensor, budget: &SearchBudget, kind: HomSystem) -> Verdict {
    let class = kind.class();
    let mut effort = Effort::new(budget.seed);
    if t.first_negative().is_none() && has_positive_diagonal(t) {
        return Verdict::certified(class, CERT_NONNEG_DIAGONAL, effort);
    }
    let n = t.dim();
    // hints first: witnesses found at low budget are found at every budget
    for j in 1..=n {
        effort.searches += 1;
        if let Some(w) = try_system_witness(t, &unit_vector(j, n), kind, budget) {
            return Verdict::falsified(class, w, None, effort);
        }
    }
    let forms = t.monomial_forms();
    for support in nonempty_supports(n) {
        effort.searches += 1;
        // strictly one-signed equations cannot vanish on the open orthant
        let blocked = support.iter().any(|i| {
            let p = forms[i - 1].restrict(&support);
            match kind {
                HomSystem::R0 => p.all_coeffs_positive() || p.all_coeffs_negative(),
                HomSystem::R | HomSystem::Er => p.all_coeffs_positive(),
            }
        });
        if blocked {
            continue;
        }
        let k = support.len();
        let members: Vec<usize> = support.iter().collect();
        let mut rng = budget.stream(kind.tag() | support.bitmask());
        match kind {
            HomSystem::R0 => {
                let eval = |u: &[f64], r: &mut [f64]| {
                    let full = embed(u, &support, n);
                    for (row, &i) in members.iter().enumerate() {
                        r[row] = forms[i - 1].eval(&full);
                    }
                    r[k] = u.iter().sum::<f64>() - 1.0;
                };
                let jac = |u: &[f64], jm: &mut [f64]| {
                    let full = embed(u, &support, n);
                    for (row, &i) in members.iter().enumerate() {
                        for (col, &l) in members.iter().enumerate() {
                            jm[row * k + col] = forms[i - 1].eval_grad(&full, l);
                        }
                    }
                    for col in 0..k {
                        jm[k * k + col] = 1.0;
                    }
                };
                let mut starts = vec![vec![1.0 / k as f64; k]];
                for _ in 0..budget.multistarts {
                    starts.push(search::random_simplex(&mut rng, k));
                }
                for start in starts {
                    effort.samples += 1;
                    let (u, _) = search::levenberg_marquardt(&start, k + 1, &eval, &jac, true, 150);
                    let full = embed(&u, &support, n);
                    if let Some(w) = try_system_witness(t, &full, kind, budget) {
                        return Verdict::falsified(class, w, None, effort);
                    }
                }
            }
            HomSystem::R | HomSystem::Er => {
                let eval = |v: &[f64], r: &mut [f64]| {
                    let full = embed(&v[..k], &support, n);
                    let tval = v[k];
                    for (row, &i) in members.iter().enumerate() {
                        let fi = forms[i - 1].eval(&full);
                        r[row] = match kind {
                            HomSystem::R => fi + tval,
                            HomSystem::Er => fi + tval * full[i - 1],
                            HomSystem::R0 => unreachable!(),
                        };
                    }
                    r[k] = v[..k].iter().sum::<f64>() - 1.0;
                };
                let dim = k + 1;
                let jac = |v: &[f64], jm: &mut [f64]| {
                    let full = embed(&v[..k], &support, n);
                    let tval = v[k];
                    for (row, &i) in members.iter().enumerate() {
                        for (col, &l) in members.iter().enumerate() {
                            let mut g = forms[i - 1].eval_grad(&full, l);
                            if kind == HomSystem::Er && l == i {
                                g += tval;
                            }
                            jm[row * dim + col] = g;
                        }
                        jm[row * dim + k] = match kind {
                            HomSystem::R => 1.0,
                            HomSystem::Er => full[i - 1],
                            HomSystem::R0 => unreachable!(),
                        };
                    }
                    for col in 0..k {
                        jm[k * dim + col] = 1.0;
                    }
                    jm[k * dim + k] = 0.0;
                };
                let uniform = vec![1.0 / k as f64; k];
                let mut starts = Vec::new();
                for t0 in [0.0, 1.0] {
                    let mut s = uniform.clone();
                    s.push(t0);
                    starts.push(s);
                }
                for _ in 0..budget.multistarts {
                    let mut s = search::random_simplex(&mut rng, k);
                    s.push(10f64.powf(rng.random_range(-2.0..1.0)));
                    starts.push(s);
                }
                for start in starts {
                    effort.samples += 1;
                    let run =
                        crate::solver::newton_for_search(&start, budget.newton_max_iter, &eval, &jac);
                    let Some(v) = run else { continue };
                    let (u, tval) = (&v[..k], v[k]);
                    if tval < -budget.feas_tol {
                        continue;
                    }
                    if u.iter().any(|&ui| ui < -budget.feas_tol) {
                        continue;
                    }
                    let clamped: Vec<f64> = u.iter().map(|&ui| ui.max(0.0)).collect();
                    let mut full = embed(&clamped, &support, n);
                    snap_point(&mut full, budget.support_tol);
                    let mut tv = tval.max(0.0);
                    if tv <= budget.feas_tol {
                        tv = 0.0;
                    }
                    let kind_w = WitnessKind::PointScalar(full, tv);
                    if let Ok(violation) = replay_witness(t, class, &kind_w, budget) {
                        return Verdict::falsified(
                            class,
                            Witness {
                                kind: kind_w,
                                violation,
                            },
                            None,
                            effort,
                        );
                    }
                }
            }
        }
    }
    Verdict::unfalsified(class, effort)
}

/// Searches for a nonzero nonnegative `x` whose homogeneous system holds
/// exactly; certified via the diagonal characterization on nonnegative input.
pub fn check_r0(t: &Tensor, budget: &SearchBudget) -> Verdict {
    check_homogeneous_system(t, budget, HomSystem::R0)
}

/// As [`check_r0`] with the extra multiplier `t >= 0` added to every
/// component.
pub fn check_r(t: &Tensor, budget: &SearchBudget) -> Verdict {
    check_homogeneous_system(t, budget, HomSystem::R)
}

/// As [`check_r`] with the multiplier coupled through `t * x_i` on the
/// support and plain slack off it.
pub fn check_er(t: &Tensor, budget: &SearchBudget) -> Verdict {
    check_homogeneous_system(t, budget, HomSystem::Er)
}

/// Looks for a nonzero `x >= 0` whose every active slack is strictly
/// negative. Nonnegative tensors hold trivially.
pub fn check_semipositive(t: &Tensor, budget: &SearchBudget) -> Verdict {
    let class = Class::SemiPositive;
    let mut effort = Effort::new(budget.seed);
    if t.first_negative().is_none() {
        return Verdict::certified(class, CERT_NONNEG_COEFFS, effort);
    }
    let n = t.dim();
    let mut try_point = |x: &[f64], effort: &Effort| -> Option<Verdict> {
        let mut snapped = x.to_vec();
        snap_point(&mut snapped, budget.support_tol);
        let kind_w = WitnessKind::Point(snapped);
        replay_witness(t, class, &kind_w, budget).ok().map(|violation| {
            Verdict::falsified(
                class,
                Witness {
                    kind: kind_w.clone(),
                    violation,
                },
                None,
                effort.clone(),
            )
        })
    };
    for j in 1..=n {
        effort.searches += 1;
        if let Some(v) = try_point(&unit_vector(j, n), &effort) {
            return v;
        }
    }
    if let Some(v) = try_point(&vec![1.0 / n as f64; n], &effort) {
        return v;
    }
    let forms = t.monomial_forms();
    for support in nonempty_supports(n) {
        effort.searches += 1;
        let k = support.len();
        let members: Vec<usize> = support.iter().collect();
        let value = |u: &[f64], comp: usize| {
            let full = embed(u, &support, n);
            forms[members[comp] - 1].eval(&full)
        };
        let grad = |u: &[f64], comp: usize| {
            let full = embed(u, &support, n);
            members
                .iter()
                .map(|&l| forms[members[comp] - 1].eval_grad(&full, l))
                .collect()
        };
        let mut rng = budget.stream(TAG_SEMIPOS | support.bitmask());
        let mut starts = vec![vec![1.0 / k as f64; k]];
        for _ in 0..budget.multistarts {
            starts.push(search::random_simplex(&mut rng, k));
        }
        for start in starts {
            effort.samples += 1;
            let (u, fmin) =
                search::minimize_max(&start, k, &value, &grad, &search::project_simplex, 150);
            if fmin < -budget.falsify_tol {
                let full = embed(&u, &support, n);
                if let Some(v) = try_point(&full, &effort) {
                    return v;
                }
            }
        }
    }
    Verdict::unfalsified(class, effort)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum PointProduct {
    P0,
    P0Prime,
}

impl PointProduct {
    fn class(self) -> Class {
        match self {
            PointProduct::P0 => Class::P0,
            PointProduct::P0Prime => Class::P0Prime,
        }
    }

    fn factor(self, xi: f64, order: usize) -> f64 {
        match self {
            PointProduct::P0 => xi,
            PointProduct::P0Prime => xi.powi(order as i32 - 1),
        }
    }

    fn factor_derivative(self, xi: f64, order: usize) -> f64 {
        match self {
            PointProduct::P0 => 1.0,
            PointProduct::P0Prime => (order as f64 - 1.0) * xi.powi(order as i32 - 2),
        }
    }
}

/// Sign-pattern-by-support search on the unit sphere for a point whose every
/// active product is strictly negative.
fn check_point_product(t: &Tensor, budget: &SearchBudget, product: PointProduct) -> Verdict {
    let class = product.class();
    let mut effort = Effort::new(budget.seed);
    let n = t.dim();
    let m = t.order();
    let try_point = |x: &[f64], effort: &Effort| -> Option<Verdict> {
        let mut snapped = x.to_vec();
        snap_point(&mut snapped, budget.support_tol);
        let kind_w = WitnessKind::Point(snapped);
        replay_witness(t, class, &kind_w, budget).ok().map(|violation| {
            Verdict::falsified(
                class,
                Witness {
                    kind: kind_w.clone(),
                    violation,
                },
                None,
                effort.clone(),
            )
        })
    };
    // hints: every sign pattern of the scaled all-ones vector, then units
    if n <= 12 {
        let scale = 1.0 / (n as f64).sqrt();
        for bits in 0..(1u32 << n) {
            effort.searches += 1;
            let x: Vec<f64> = (0..n)
                .map(|i| if bits >> i & 1 == 1 { -scale } else { scale })
                .collect();
            if let Some(v) = try_point(&x, &effort) {
                return v;
            }
        }
    }
    for j in 1..=n {
        for sign in [1.0, -1.0] {
            effort.searches += 1;
            let mut e = unit_vector(j, n);
            e[j - 1] = sign;
            if let Some(v) = try_point(&e, &effort) {
                return v;
            }
        }
    }
    let forms = t.monomial_forms();
    for support in nonempty_supports(n) {
        let k = support.len();
        let members: Vec<usize> = support.iter().collect();
        for bits in 0..(1u32 << k) {
            effort.searches += 1;
            let signs: Vec<f64> = (0..k)
                .map(|l| if bits >> l & 1 == 1 { -1.0 } else { 1.0 })
                .collect();
            let to_x = |u: &[f64]| {
                let signed: Vec<f64> = u.iter().zip(&signs).map(|(ui, s)| ui * s).collect();
                embed(&signed, &support, n)
            };
            let value = |u: &[f64], comp: usize| {
                let x = to_x(u);
                let i = members[comp];
                product.factor(x[i - 1], m) * forms[i - 1].eval(&x)
            };
            let grad = |u: &[f64], comp: usize| {
                let x = to_x(u);
                let i = members[comp];
                let fi = forms[i - 1].eval(&x);
                (0..k)
                    .map(|col| {
                        let l = members[col];
                        let mut g = product.factor(x[i - 1], m) * forms[i - 1].eval_grad(&x, l);
                        if l == i {
                            g += product.factor_derivative(x[i - 1], m) * fi;
                        }
                        g * signs[col]
                    })
                    .collect()
            };
            let mut rng =
                budget.stream(TAG_POINT_PRODUCT | (support.bitmask() << 20) | bits as u64);
            let mut starts = vec![vec![1.0 / (k as f64).sqrt(); k]];
            for _ in 0..budget.multistarts {
                starts.push(search::random_nonneg_sphere(&mut rng, k));
            }
            for start in starts {
                effort.samples += 1;
                let (u, fmin) = search::minimize_max(
                    &start,
                    k,
                    &value,
                    &grad,
                    &search::project_nonneg_sphere,
                    150,
                );
                if fmin < -budget.falsify_tol {
                    if let Some(v) = try_point(&to_x(&u), &effort) {
                        return v;
                    }
                }
            }
        }
    }
    Verdict::unfalsified(class, effort)
}

/// Looks for a nonzero `x` with `x_i (A x^{m-1})_i < 0` on every active
/// component.
pub fn check_p0(t: &Tensor, budget: &SearchBudget) -> Verdict {
    check_point_product(t, budget, PointProduct::P0)
}

/// The `x_i^{m-1}` product variant. For even order the class coincides with
/// P0, so the search is delegated and the witness re-validated against the
/// P0' product.
pub fn check_p0_prime(t: &Tensor, budget: &SearchBudget) -> Verdict {
    if t.order() % 2 == 0 {
        let delegated = check_point_product(t, budget, PointProduct::P0);
        match delegated.status {
            Status::Falsified => {
                let w = delegated.witness.as_ref().expect("falsified carries witness");
                if let Ok(violation) = replay_witness(t, Class::P0Prime, &w.kind, budget) {
                    return Verdict::falsified(
                        Class::P0Prime,
                        Witness {
                            kind: w.kind.clone(),
                            violation,
                        },
                        None,
                        delegated.effort,
                    )
                    .with_note("delegated-even-order");
                }
                // the delegated witness did not carry over; search directly
                check_point_product(t, budget, PointProduct::P0Prime)
            }
            _ => Verdict::unfalsified(Class::P0Prime, delegated.effort)
                .with_note("delegated-even-order"),
        }
    } else {
        check_point_product(t, budget, PointProduct::P0Prime)
    }
}

/// Exact necessary condition for odd order: every component must be
/// identically zero or independent of its own variable. Falsification here
/// is a proof of non-membership; passing is not a proof of membership.
pub fn sp0_odd_necessary(t: &Tensor) -> Result<Verdict, CheckError> {
    if t.order() % 2 == 0 {
        return Err(CheckError::EvenOrder(t.order()));
    }
    for i in 1..=t.dim() {
        let mf = t.monomial_form(i).expect("component in range");
        if !mf.is_zero() && mf.depends_on(i) {
            let violation = mf.max_abs_coeff_on(i);
            return Ok(Verdict::falsified(
                Class::Sp0,
                Witness {
                    kind: WitnessKind::Index(vec![i]),
                    violation,
                },
                Some(CERT_COEFF_DEPENDENCE),
                Effort::exact(),
            ));
        }
    }
    Ok(Verdict::unfalsified(Class::Sp0, Effort::exact()).with_note("necessary-condition-only"))
}

/// Pair search for a violation of componentwise monotonicity, run on every
/// principal sub-tensor (witnesses embed with zeros). Never certifies.
pub fn check_sp0(t: &Tensor, budget: &SearchBudget) -> Verdict {
    let class = Class::Sp0;
    let mut effort = Effort::new(budget.seed);
    let n = t.dim();
    for support in nonempty_supports(n) {
        effort.searches += 1;
        let sub = t
            .principal_sub_tensor(&support)
            .expect("support within dimension");
        if let Some((xs, ys)) = pair_search(&sub, budget, support.bitmask(), &mut effort) {
            let (x, y) = snap_pair(embed(&xs, &support, n), embed(&ys, &support, n));
            let kind_w = WitnessKind::Pair(x, y);
            if let Ok(violation) = replay_witness(t, class, &kind_w, budget) {
                return Verdict::falsified(
                    class,
                    Witness {
                        kind: kind_w,
                        violation,
                    },
                    None,
                    effort,
                );
            }
        }
    }
    Verdict::unfalsified(class, effort)
}

/// Searches one tensor for a pair whose every differing coordinate has a
/// strictly negative product. Grid pairs differing in one coordinate come
/// first (guided by the own-variable dependence condition when the order is
/// odd), then random structured pairs, then coordinate-descent refinement of
/// the best candidate.
fn pair_search(
    t: &Tensor,
    budget: &SearchBudget,
    tag: u64,
    effort: &mut Effort,
) -> Option<(Vec<f64>, Vec<f64>)> {
    let r = t.dim();
    let m = t.order();
    let forms = t.monomial_forms();
    let objective = |x: &[f64], y: &[f64]| -> f64 {
        let mut worst = f64::NEG_INFINITY;
        let mut any = false;
        for i in 0..r {
            let d = x[i] - y[i];
            if d.abs() > PAIR_TOL {
                any = true;
                let diff = forms[i].eval(x) - forms[i].eval(y);
                worst = worst.max(d * diff);
            }
        }
        if any {
            worst
        } else {
            f64::INFINITY
        }
    };

    // singleton order: components that depend on their own variable first
    // (for odd order that dependence already refutes membership)
    let mut singles: Vec<usize> = (0..r).collect();
    if m % 2 == 1 {
        singles.sort_by_key(|&c| !(!forms[c].is_zero() && forms[c].depends_on(c + 1)));
    }

    if r <= 3 {
        let values = [-2.0, -1.0, 0.0, 1.0, 2.0];
        let bases: Vec<Vec<f64>> = std::iter::repeat_n(values.to_vec(), r)
            .multi_cartesian_product()
            .collect();
        for base in &bases {
            for &c in &singles {
                for alt in values {
                    if alt == base[c] {
                        continue;
                    }
                    effort.samples += 1;
                    let mut y = base.clone();
                    y[c] = alt;
                    if objective(base, &y) < -budget.falsify_tol {
                        return Some((base.clone(), y));
                    }
                }
            }
        }
    }

    let mut rng = budget.stream(TAG_SP0 | tag);
    let mut best: Option<(Vec<f64>, Vec<f64>, Vec<bool>, f64)> = None;
    for trial in 0..budget.samples {
        effort.samples += 1;
        let size = 1 + trial % r;
        let x: Vec<f64> = (0..r).map(|_| rng.random_range(-2.5..2.5)).collect();
        let mut in_diff = vec![false; r];
        // random subset, guided singles first on early trials
        if size == 1 && trial < 2 * r {
            in_diff[singles[trial % r]] = true;
        } else {
            let mut picked = 0;
            while picked < size {
                let c = rng.random_range(0..r);
                if !in_diff[c] {
                    in_diff[c] = true;
                    picked += 1;
                }
            }
        }
        let mut y = x.clone();
        for (c, flag) in in_diff.iter().enumerate() {
            if *flag {
                let mut delta = rng.random_range(-2.0..2.0f64);
                if delta.abs() < 0.05 {
                    delta = 0.05f64.copysign(delta);
                }
                y[c] += delta;
            }
        }
        let v = objective(&x, &y);
        if v < -budget.falsify_tol {
            return Some((x, y));
        }
        if v.is_finite() && best.as_ref().is_none_or(|(_, _, _, bv)| v < *bv) {
            best = Some((x, y, in_diff, v));
        }
    }

    if let Some((mut x, mut y, diff, _)) = best {
        let refined = search::refine_pair(&mut x, &mut y, &diff, &objective, 25);
        if refined < -budget.falsify_tol {
            return Some((x, y));
        }
    }
    None
}

/// Minimizes the scalar form over the unit simplex; nonnegative tensors are
/// certified directly. The best minimum found is recorded in the note.
pub fn check_copositive(t: &Tensor, budget: &SearchBudget) -> Verdict {
    let class = Class::Copositive;
    let mut effort = Effort::new(budget.seed);
    if t.first_negative().is_none() {
        return Verdict::certified(class, CERT_NONNEG_COEFFS, effort);
    }
    let n = t.dim();
    let forms = t.monomial_forms();
    let value = |x: &[f64], _: usize| {
        x.iter()
            .enumerate()
            .map(|(i, xi)| xi * forms[i].eval(x))
            .sum::<f64>()
    };
    let grad = |x: &[f64], _: usize| {
        (1..=n)
            .map(|l| {
                forms[l - 1].eval(x)
                    + x.iter()
                        .enumerate()
                        .map(|(i, xi)| xi * forms[i].eval_grad(x, l))
                        .sum::<f64>()
            })
            .collect::<Vec<f64>>()
    };
    let try_point = |x: &[f64], effort: &Effort| -> Option<Verdict> {
        let mut snapped = x.to_vec();
        snap_point(&mut snapped, budget.support_tol);
        let kind_w = WitnessKind::Point(snapped);
        replay_witness(t, class, &kind_w, budget).ok().map(|violation| {
            Verdict::falsified(
                class,
                Witness {
                    kind: kind_w.clone(),
                    violation,
                },
                None,
                effort.clone(),
            )
        })
    };
    let mut minimum = f64::INFINITY;
    let mut starts: Vec<Vec<f64>> = vec![vec![1.0 / n as f64; n]];
    for j in 1..=n {
        starts.push(unit_vector(j, n));
    }
    let mut rng = budget.stream(TAG_COPOSITIVE);
    for _ in 0..budget.multistarts {
        starts.push(search::random_simplex(&mut rng, n));
    }
    for start in starts {
        effort.samples += 1;
        let (x, fmin) = search::minimize_max(&start, 1, &value, &grad, &search::project_simplex, 200);
        minimum = minimum.min(fmin);
        if fmin < -budget.falsify_tol {
            if let Some(v) = try_point(&x, &effort) {
                return v;
            }
        }
    }
    effort.searches += 1;
    Verdict::unfalsified(class, effort).with_note(format!("simplex-minimum {minimum:e}"))
}

/// Builds the deterministic probe-and-grid list of constant vectors for the
/// empirical Q check: negated unit vectors, then every sign pattern times
/// per-component magnitudes `{0.5, 1, 2}` (shared magnitudes when the full
/// grid would be too large).
fn q_grid(n: usize) -> Vec<Vec<f64>> {
    let mut qs: Vec<Vec<f64>> = (1..=n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j - 1] = -1.0;
            e
        })
        .collect();
    let magnitudes = [-2.0, -1.0, -0.5, 0.5, 1.0, 2.0];
    if 6f64.powi(n as i32) <= 1296.0 {
        qs.extend(
            std::iter::repeat_n(magnitudes.to_vec(), n)
                .multi_cartesian_product(),
        );
    } else if n <= 10 {
        for bits in 0..(1u32 << n) {
            for mag in [0.5, 1.0, 2.0] {
                qs.push(
                    (0..n)
                        .map(|i| if bits >> i & 1 == 1 { -mag } else { mag })
                        .collect(),
                );
            }
        }
    }
    qs
}

/// Tests solvability over the probe/grid/random q vectors. `Falsified` only
/// on a certified unsolvable instance; all-grid-solved is recorded in the
/// note as evidence (not proof) of membership.
pub fn check_q_empirical(t: &Tensor, budget: &SearchBudget) -> Verdict {
    if t.first_negative().is_none() {
        return check_q_nonnegative(t).expect("nonnegativity just checked");
    }
    let mut effort = Effort::new(budget.seed);
    let n = t.dim();
    if n > 20 {
        return Verdict::unfalsified(Class::Q, effort)
            .with_note("dimension exceeds the support-enumeration limit");
    }
    let grid = q_grid(n);
    let grid_len = grid.len();
    let mut qs = grid;
    let mut rng = budget.stream(TAG_QGRID);
    for _ in 0..budget.samples {
        qs.push((0..n).map(|_| rng.random_range(-3.0..3.0)).collect());
    }
    let mut grid_all_solved = true;
    let mut any_unresolved = false;
    for (idx, q) in qs.into_iter().enumerate() {
        effort.searches += 1;
        if idx >= grid_len {
            effort.samples += 1;
        }
        let inst = TCPInstance::new(t.clone(), q.clone()).expect("grid length matches dim");
        let outcome = match solve(&inst, budget) {
            Ok(o) => o,
            Err(_) => {
                any_unresolved = true;
                if idx < grid_len {
                    grid_all_solved = false;
                }
                continue;
            }
        };
        match outcome.status {
            SolveStatus::Solved(_) => {}
            SolveStatus::CertifiedNoSolution(cert) => {
                if cert.min_margin > 0.0 {
                    return Verdict::falsified(
                        Class::Q,
                        Witness {
                            kind: WitnessKind::QVector(q),
                            violation: cert.min_margin,
                        },
                        None,
                        effort,
                    );
                }
                any_unresolved = true;
            }
            SolveStatus::NoSolutionFound => {
                any_unresolved = true;
                if idx < grid_len {
                    grid_all_solved = false;
                }
            }
        }
    }
    let mut tags: Vec<&str> = Vec::new();
    if grid_all_solved {
        tags.push(NOTE_Q_GRID_SOLVED);
    }
    if any_unresolved {
        tags.push(NOTE_SOLVER_INCOMPLETE);
    }
    Verdict::unfalsified(Class::Q, effort).with_note(tags.join(";"))
}

/// True when the empirical Q check came back unfalsified with every grid q
/// solved ("Q-grid-positive": evidence for membership, not proof).
pub fn is_q_grid_positive(v: &Verdict) -> bool {
    v.class == Class::Q
        && v.status == Status::Unfalsified
        && v.effort
            .note
            .as_deref()
            .is_some_and(|s| s.contains(NOTE_Q_GRID_SOLVED))
}

/// Dispatches to the checker for `class`.
pub fn check(class: Class, t: &Tensor, budget: &SearchBudget) -> Verdict {
    match class {
        Class::Nonnegative => is_nonnegative(t),
        Class::Q => check_q_empirical(t, budget),
        Class::R0 => check_r0(t, budget),
        Class::R => check_r(t, budget),
        Class::Er => check_er(t, budget),
        Class::SemiPositive => check_semipositive(t, budget),
        Class::P0 => check_p0(t, budget),
        Class::P0Prime => check_p0_prime(t, budget),
        Class::Sp0 => check_sp0(t, budget),
        Class::Copositive => check_copositive(t, budget),
    }
}

#[cfg(test)]
mod tests;
