//! Dense state vectors over a tensor product of small sites.
//!
//! Amplitudes are stored in mixed-radix order with the leftmost site most
//! significant, so `|01⟩` on two qubits sits at index 1 and `|10⟩` at index 2.
//! A [`SiteBasis`] may span a group of sites (for instance a qubit together
//! with the memory of the observer who premeasured it); its vectors then live
//! in the joint space of the group, indexed in the order the sites are listed.

use num_complex::Complex64;
use thiserror::Error;

/// Tolerance on squared norms and on orthonormality of basis vectors.
pub const EPS_NORM: f64 = 1e-9;
/// Tolerance used when comparing distributions (no-disturbance, invariants).
pub const EPS_ND: f64 = 1e-9;
/// Probabilities below this are treated as impossible branches.
pub const EPS_ZERO: f64 = 1e-12;

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QStateError {
    #[error("state has {got} amplitudes, expected {expected} for site dimensions {dims:?}")]
    LengthMismatch {
        dims: Vec<usize>,
        expected: usize,
        got: usize,
    },
    #[error("site dimension {0} is below 2")]
    SiteTooSmall(usize),
    #[error("state is not normalized (squared norm {0})")]
    NotNormalized(f64),
    #[error("zero vector cannot be normalized")]
    ZeroVector,
    #[error("site {site} does not exist in a state with {sites} sites")]
    InvalidSite { site: usize, sites: usize },
    #[error("site {0} is measured more than once")]
    DuplicateSite(usize),
    #[error("basis vector has dimension {got}, sites {sites:?} span dimension {expected}")]
    DimensionMismatch {
        sites: Vec<usize>,
        expected: usize,
        got: usize,
    },
    #[error("basis on sites {sites:?} has {got} vectors but must span dimension {expected}")]
    IncompleteBasis {
        sites: Vec<usize>,
        expected: usize,
        got: usize,
    },
    #[error("basis vectors {0} and {1} are not orthonormal")]
    NotOrthonormal(usize, usize),
    #[error("basis label `{0}` is repeated")]
    DuplicateLabel(String),
    #[error("basis has {vectors} vectors but {labels} labels")]
    LabelCount { vectors: usize, labels: usize },
    #[error("unknown outcome `{label}` for basis on sites {sites:?}")]
    UnknownOutcome { label: String, sites: Vec<usize> },
    #[error("outcome tuple has {got} entries, basis measures {expected} factors")]
    OutcomeArity { expected: usize, got: usize },
}

pub type Result<T> = std::result::Result<T, QStateError>;

/// A normalized pure state over `dims.len()` sites.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    dims: Vec<usize>,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// Builds a state, rejecting it unless the squared norm is 1 within [`EPS_NORM`].
    pub fn new(dims: Vec<usize>, amps: Vec<Complex64>) -> Result<Self> {
        let state = Self::unchecked(dims, amps)?;
        let n = state.norm_sqr();
        if (n - 1.0).abs() > EPS_NORM {
            return Err(QStateError::NotNormalized(n));
        }
        Ok(state)
    }

    /// Builds a state and rescales it to unit norm.
    pub fn normalized(dims: Vec<usize>, amps: Vec<Complex64>) -> Result<Self> {
        let mut state = Self::unchecked(dims, amps)?;
        let n = state.norm_sqr();
        if n <= EPS_ZERO {
            return Err(QStateError::ZeroVector);
        }
        let scale = 1.0 / n.sqrt();
        state.amps.iter_mut().for_each(|a| *a *= scale);
        Ok(state)
    }

    fn unchecked(dims: Vec<usize>, amps: Vec<Complex64>) -> Result<Self> {
        if let Some(&d) = dims.iter().find(|&&d| d < 2) {
            return Err(QStateError::SiteTooSmall(d));
        }
        let expected: usize = dims.iter().product();
        if amps.len() != expected {
            return Err(QStateError::LengthMismatch {
                dims,
                expected,
                got: amps.len(),
            });
        }
        Ok(Self { dims, amps })
    }

    /// The computational basis state with the given per-site labels.
    pub fn basis_state(dims: Vec<usize>, digits: &[usize]) -> Result<Self> {
        let len = dims.iter().product();
        let mut amps = vec![Complex64::new(0.0, 0.0); len];
        let layout = Layout::new(&dims);
        amps[layout.index(digits)] = Complex64::new(1.0, 0.0);
        Self::new(dims, amps)
    }

    /// `alpha|0⟩ + beta|1⟩`.
    pub fn qubit(alpha: Complex64, beta: Complex64) -> Result<Self> {
        Self::new(vec![2], vec![alpha, beta])
    }

    /// `(|0⟩ + |1⟩)/√2`.
    pub fn plus() -> Self {
        let a = Complex64::new(FRAC_1_SQRT_2, 0.0);
        Self {
            dims: vec![2],
            amps: vec![a, a],
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn site_count(&self) -> usize {
        self.dims.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    /// Amplitude of the basis state with per-site labels `digits`.
    pub fn amplitude(&self, digits: &[usize]) -> Complex64 {
        self.amps[Layout::new(&self.dims).index(digits)]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    /// Largest componentwise modulus of the difference, or `None` when the site layouts differ.
    pub fn distance(&self, other: &StateVector) -> Option<f64> {
        if self.dims != other.dims {
            return None;
        }
        Some(
            self.amps
                .iter()
                .zip(&other.amps)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max),
        )
    }
}

/// Mixed-radix index arithmetic, leftmost site most significant.
#[derive(Debug, Clone)]
pub(crate) struct Layout {
    dims: Vec<usize>,
    strides: Vec<usize>,
}

impl Layout {
    pub(crate) fn new(dims: &[usize]) -> Self {
        let mut strides = vec![1; dims.len()];
        for k in (0..dims.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * dims[k + 1];
        }
        Self {
            dims: dims.to_vec(),
            strides,
        }
    }

    pub(crate) fn index(&self, digits: &[usize]) -> usize {
        digits.iter().zip(&self.strides).map(|(d, s)| d * s).sum()
    }

    pub(crate) fn digit(&self, index: usize, site: usize) -> usize {
        (index / self.strides[site]) % self.dims[site]
    }

    /// Index of the sub-tuple formed by `sites` (in the listed order).
    pub(crate) fn group_index(&self, index: usize, sites: &[usize]) -> usize {
        sites
            .iter()
            .fold(0, |acc, &s| acc * self.dims[s] + self.digit(index, s))
    }

    pub(crate) fn group_dim(&self, sites: &[usize]) -> usize {
        sites.iter().map(|&s| self.dims[s]).product()
    }
}

/// Orthonormal vectors on one site or a group of sites, one label per vector.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteBasis {
    sites: Vec<usize>,
    vectors: Vec<Vec<Complex64>>,
    labels: Vec<String>,
}

impl SiteBasis {
    pub fn new(sites: Vec<usize>, vectors: Vec<Vec<Complex64>>, labels: Vec<String>) -> Result<Self> {
        if vectors.len() != labels.len() {
            return Err(QStateError::LabelCount {
                vectors: vectors.len(),
                labels: labels.len(),
            });
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(QStateError::DuplicateLabel(l.clone()));
            }
        }
        for (i, s) in sites.iter().enumerate() {
            if sites[..i].contains(s) {
                return Err(QStateError::DuplicateSite(*s));
            }
        }
        let dim = vectors.first().map_or(0, Vec::len);
        for v in &vectors {
            if v.len() != dim {
                return Err(QStateError::DimensionMismatch {
                    sites: sites.clone(),
                    expected: dim,
                    got: v.len(),
                });
            }
        }
        for i in 0..vectors.len() {
            for j in 0..=i {
                let ip: Complex64 = vectors[i].iter().zip(&vectors[j]).map(|(a, b)| a.conj() * b).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                if (ip - target).norm() > EPS_NORM {
                    return Err(QStateError::NotOrthonormal(j, i));
                }
            }
        }
        Ok(Self { sites, vectors, labels })
    }

    /// Computational basis of one site, labeled `0..dim`.
    pub fn computational(site: usize, dim: usize) -> Self {
        Self::computational_group(vec![site], &[dim])
    }

    /// Computational basis over a group of sites, labeled by concatenated digits.
    pub fn computational_group(sites: Vec<usize>, dims: &[usize]) -> Self {
        let layout = Layout::new(dims);
        let total: usize = dims.iter().product();
        let vectors = (0..total).map(|i| unit(total, i)).collect();
        let labels = (0..total)
            .map(|i| (0..dims.len()).map(|k| layout.digit(i, k).to_string()).collect())
            .collect();
        Self { sites, vectors, labels }
    }

    /// Computational basis of one site with custom labels, as used for memories.
    pub fn labeled_computational(site: usize, labels: Vec<String>) -> Result<Self> {
        let dim = labels.len();
        Self::new(vec![site], (0..dim).map(|i| unit(dim, i)).collect(), labels)
    }

    /// `{|+⟩, |−⟩}` on a qubit, labeled `+` and `-`.
    pub fn diagonal(site: usize) -> Self {
        let h = FRAC_1_SQRT_2;
        Self {
            sites: vec![site],
            vectors: vec![real(&[h, h]), real(&[h, -h])],
            labels: vec!["+".into(), "-".into()],
        }
    }

    /// The Bell basis `Φ+, Φ−, Ψ+, Ψ−` on two qubits.
    pub fn bell(first: usize, second: usize) -> Self {
        let h = FRAC_1_SQRT_2;
        Self {
            sites: vec![first, second],
            vectors: vec![
                real(&[h, 0.0, 0.0, h]),
                real(&[h, 0.0, 0.0, -h]),
                real(&[0.0, h, h, 0.0]),
                real(&[0.0, h, -h, 0.0]),
            ],
            labels: ["Phi+", "Phi-", "Psi+", "Psi-"].map(String::from).to_vec(),
        }
    }

    /// Observer basis on a (system, memory) qubit pair: `|00⟩, |11⟩` carry the
    /// agreed outcome, `|01⟩, |10⟩` are the inconsistent records.
    pub fn observer(system: usize, memory: usize) -> Self {
        Self {
            sites: vec![system, memory],
            vectors: vec![
                real(&[1.0, 0.0, 0.0, 0.0]),
                real(&[0.0, 0.0, 0.0, 1.0]),
                real(&[0.0, 1.0, 0.0, 0.0]),
                real(&[0.0, 0.0, 1.0, 0.0]),
            ],
            labels: ["0", "1", "01", "10"].map(String::from).to_vec(),
        }
    }

    /// Meta-observer basis on a (system, memory) pair: `(|00⟩ ± |11⟩)/√2`
    /// completed by the inconsistent records `|01⟩, |10⟩`.
    pub fn meta(system: usize, memory: usize) -> Self {
        let h = FRAC_1_SQRT_2;
        Self {
            sites: vec![system, memory],
            vectors: vec![
                real(&[h, 0.0, 0.0, h]),
                real(&[h, 0.0, 0.0, -h]),
                real(&[0.0, 1.0, 0.0, 0.0]),
                real(&[0.0, 0.0, 1.0, 0.0]),
            ],
            labels: ["+", "-", "01", "10"].map(String::from).to_vec(),
        }
    }

    pub fn sites(&self) -> &[usize] {
        &self.sites
    }

    pub fn vectors(&self) -> &[Vec<Complex64>] {
        &self.vectors
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Same vectors acting on different sites.
    pub fn on_sites(&self, sites: Vec<usize>) -> Self {
        Self { sites, ..self.clone() }
    }

    /// Checks that the basis fits `dims` and spans its sites completely.
    pub fn check_against(&self, dims: &[usize]) -> Result<()> {
        for &s in &self.sites {
            if s >= dims.len() {
                return Err(QStateError::InvalidSite {
                    site: s,
                    sites: dims.len(),
                });
            }
        }
        let expected: usize = self.sites.iter().map(|&s| dims[s]).product();
        let got = self.vectors.first().map_or(0, Vec::len);
        if got != expected {
            return Err(QStateError::DimensionMismatch {
                sites: self.sites.clone(),
                expected,
                got,
            });
        }
        if self.vectors.len() != expected {
            return Err(QStateError::IncompleteBasis {
                sites: self.sites.clone(),
                expected,
                got: self.vectors.len(),
            });
        }
        Ok(())
    }
}

fn unit(dim: usize, i: usize) -> Vec<Complex64> {
    let mut v = vec![Complex64::new(0.0, 0.0); dim];
    v[i] = Complex64::new(1.0, 0.0);
    v
}

fn real(xs: &[f64]) -> Vec<Complex64> {
    xs.iter().map(|&x| Complex64::new(x, 0.0)).collect()
}

/// One basis per measured site group; every other site is traced out.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductBasis {
    factors: Vec<SiteBasis>,
}

impl ProductBasis {
    pub fn new(factors: Vec<SiteBasis>) -> Result<Self> {
        let mut seen = Vec::new();
        for f in &factors {
            for &s in f.sites() {
                if seen.contains(&s) {
                    return Err(QStateError::DuplicateSite(s));
                }
                seen.push(s);
            }
        }
        Ok(Self { factors })
    }

    pub fn single(basis: SiteBasis) -> Self {
        Self { factors: vec![basis] }
    }

    pub fn factors(&self) -> &[SiteBasis] {
        &self.factors
    }

    pub fn measured_sites(&self) -> Vec<usize> {
        self.factors.iter().flat_map(|f| f.sites().iter().copied()).collect()
    }

    /// Sites of a `site_count`-site state that this basis leaves unmeasured.
    pub fn unmeasured_sites(&self, site_count: usize) -> Vec<usize> {
        let measured = self.measured_sites();
        (0..site_count).filter(|s| !measured.contains(s)).collect()
    }

    fn outcome_count(&self) -> usize {
        self.factors.iter().map(SiteBasis::len).product()
    }

    fn outcome_digits(&self, mut index: usize) -> Vec<usize> {
        let mut digits = vec![0; self.factors.len()];
        for k in (0..self.factors.len()).rev() {
            let n = self.factors[k].len();
            digits[k] = index % n;
            index /= n;
        }
        digits
    }

    fn resolve(&self, outcome: &[&str]) -> Result<Vec<usize>> {
        if outcome.len() != self.factors.len() {
            return Err(QStateError::OutcomeArity {
                expected: self.factors.len(),
                got: outcome.len(),
            });
        }
        self.factors
            .iter()
            .zip(outcome)
            .map(|(f, l)| {
                f.label_index(l).ok_or_else(|| QStateError::UnknownOutcome {
                    label: l.to_string(),
                    sites: f.sites().to_vec(),
                })
            })
            .collect()
    }

    fn check_against(&self, dims: &[usize]) -> Result<()> {
        self.factors.iter().try_for_each(|f| f.check_against(dims))
    }
}

/// Probabilities of joint outcome labels, in the basis' mixed-radix order.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    outcomes: Vec<Vec<String>>,
    probs: Vec<f64>,
}

impl Distribution {
    pub fn outcomes(&self) -> &[Vec<String>] {
        &self.outcomes
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    pub fn get(&self, outcome: &[&str]) -> Option<f64> {
        self.outcomes
            .iter()
            .position(|o| o.iter().map(String::as_str).eq(outcome.iter().copied()))
            .map(|i| self.probs[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[String], f64)> {
        self.outcomes.iter().map(Vec::as_slice).zip(self.probs.iter().copied())
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Half the L1 distance; `None` when the outcome lists differ.
    pub fn total_variation(&self, other: &Distribution) -> Option<f64> {
        if self.outcomes != other.outcomes {
            return None;
        }
        Some(
            0.5 * self
                .probs
                .iter()
                .zip(&other.probs)
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>(),
        )
    }

    /// Weighted mixture of distributions over the same outcomes.
    pub fn mixture<'a>(parts: impl IntoIterator<Item = (f64, &'a Distribution)>) -> Option<Self> {
        let mut out: Option<Distribution> = None;
        for (w, d) in parts {
            match &mut out {
                None => {
                    out = Some(Distribution {
                        outcomes: d.outcomes.clone(),
                        probs: d.probs.iter().map(|p| w * p).collect(),
                    })
                }
                Some(acc) => {
                    if acc.outcomes != d.outcomes {
                        return None;
                    }
                    acc.probs.iter_mut().zip(&d.probs).for_each(|(a, p)| *a += w * p);
                }
            }
        }
        out
    }
}

/// Residual amplitudes on the unmeasured sites after contracting every
/// measured factor with the conjugate of its outcome vector.
fn residual(state: &StateVector, basis: &ProductBasis, digits: &[usize], unmeasured: &[usize]) -> Vec<Complex64> {
    let layout = Layout::new(&state.dims);
    let mut out = vec![Complex64::new(0.0, 0.0); layout.group_dim(unmeasured)];
    for (idx, amp) in state.amps.iter().enumerate() {
        if amp.norm_sqr() == 0.0 {
            continue;
        }
        let mut coeff = *amp;
        for (f, &d) in basis.factors.iter().zip(digits) {
            coeff *= f.vectors[d][layout.group_index(idx, &f.sites)].conj();
        }
        out[layout.group_index(idx, unmeasured)] += coeff;
    }
    out
}

/// `|a⟩ ⊗ |b⟩`.
pub fn tensor(a: &StateVector, b: &StateVector) -> Result<StateVector> {
    for s in [a, b] {
        let n = s.norm_sqr();
        if (n - 1.0).abs() > EPS_NORM {
            return Err(QStateError::NotNormalized(n));
        }
    }
    let dims = a.dims.iter().chain(&b.dims).copied().collect();
    let amps = a.amps.iter().flat_map(|x| b.amps.iter().map(move |y| x * y)).collect();
    StateVector::new(dims, amps)
}

/// Born-rule distribution of the joint outcomes of `basis`.
pub fn born(state: &StateVector, basis: &ProductBasis) -> Result<Distribution> {
    basis.check_against(&state.dims)?;
    let unmeasured = basis.unmeasured_sites(state.site_count());
    let count = basis.outcome_count();
    let mut outcomes = Vec::with_capacity(count);
    let mut probs = Vec::with_capacity(count);
    for o in 0..count {
        let digits = basis.outcome_digits(o);
        let r = residual(state, basis, &digits, &unmeasured);
        probs.push(r.iter().map(|a| a.norm_sqr()).sum::<f64>().clamp(0.0, 1.0));
        outcomes.push(
            basis
                .factors
                .iter()
                .zip(&digits)
                .map(|(f, &d)| f.labels[d].clone())
                .collect(),
        );
    }
    Ok(Distribution { outcomes, probs })
}

/// Result of a projective measurement onto one joint outcome.
#[derive(Debug, Clone, PartialEq)]
pub enum Projection {
    /// The outcome occurs; `state` is the renormalized post-measurement state.
    Branch { probability: f64, state: StateVector },
    /// The outcome has probability below [`EPS_ZERO`].
    Impossible { probability: f64 },
}

impl Projection {
    pub fn probability(&self) -> f64 {
        match self {
            Projection::Branch { probability, .. } | Projection::Impossible { probability } => *probability,
        }
    }

    pub fn state(&self) -> Option<&StateVector> {
        match self {
            Projection::Branch { state, .. } => Some(state),
            Projection::Impossible { .. } => None,
        }
    }

    pub fn is_impossible(&self) -> bool {
        matches!(self, Projection::Impossible { .. })
    }
}

/// Projects onto the joint outcome with labels `outcome`.
pub fn project(state: &StateVector, basis: &ProductBasis, outcome: &[&str]) -> Result<Projection> {
    basis.check_against(&state.dims)?;
    let digits = basis.resolve(outcome)?;
    project_digits(state, basis, &digits)
}

pub(crate) fn project_digits(state: &StateVector, basis: &ProductBasis, digits: &[usize]) -> Result<Projection> {
    let unmeasured = basis.unmeasured_sites(state.site_count());
    let r = residual(state, basis, digits, &unmeasured);
    let probability: f64 = r.iter().map(|a| a.norm_sqr()).sum();
    if probability < EPS_ZERO {
        return Ok(Projection::Impossible { probability });
    }
    let layout = Layout::new(&state.dims);
    let scale = 1.0 / probability.sqrt();
    let amps = (0..state.amps.len())
        .map(|idx| {
            let mut c = r[layout.group_index(idx, &unmeasured)] * scale;
            for (f, &d) in basis.factors.iter().zip(digits) {
                c *= f.vectors[d][layout.group_index(idx, &f.sites)];
            }
            c
        })
        .collect();
    Ok(Projection::Branch {
        probability,
        state: StateVector::normalized(state.dims.clone(), amps)?,
    })
}

/// Every outcome of `basis` with its probability and post-measurement state.
pub fn branches(state: &StateVector, basis: &ProductBasis) -> Result<Vec<(Vec<String>, Projection)>> {
    basis.check_against(&state.dims)?;
    (0..basis.outcome_count())
        .map(|o| {
            let digits = basis.outcome_digits(o);
            let labels = basis
                .factors
                .iter()
                .zip(&digits)
                .map(|(f, &d)| f.labels[d].clone())
                .collect();
            Ok((labels, project_digits(state, basis, &digits)?))
        })
        .collect()
}

/// Premeasurement: the isometry `|b_i⟩ ↦ |b_i⟩|M_i⟩` for the vectors of
/// `basis`. The memory site has one level per basis vector and is inserted
/// right after the last site of the measured group; its levels carry the
/// basis labels (see [`memory_basis`]).
pub fn premeasure(state: &StateVector, basis: &SiteBasis) -> Result<StateVector> {
    premeasure_at(state, basis, memory_site(basis))
}

/// [`premeasure`] with the memory inserted at site index `memory_at`
/// (`state.site_count()` appends it).
pub fn premeasure_at(state: &StateVector, basis: &SiteBasis, memory_at: usize) -> Result<StateVector> {
    let n = state.norm_sqr();
    if (n - 1.0).abs() > EPS_NORM {
        return Err(QStateError::NotNormalized(n));
    }
    basis.check_against(&state.dims)?;
    if memory_at > state.site_count() {
        return Err(QStateError::InvalidSite {
            site: memory_at,
            sites: state.site_count() + 1,
        });
    }
    let mut dims = state.dims.clone();
    dims.insert(memory_at, basis.len());
    let old = Layout::new(&state.dims);
    let new = Layout::new(&dims);
    let rest: Vec<usize> = (0..state.site_count()).filter(|s| !basis.sites.contains(s)).collect();
    let mut amps = vec![Complex64::new(0.0, 0.0); dims.iter().product()];
    let single = ProductBasis::single(basis.clone());
    for (i, v) in basis.vectors.iter().enumerate() {
        let r = residual(state, &single, &[i], &rest);
        for idx in 0..state.amps.len() {
            let c = v[old.group_index(idx, &basis.sites)] * r[old.group_index(idx, &rest)];
            if c.norm_sqr() == 0.0 {
                continue;
            }
            let mut digits: Vec<usize> = (0..state.site_count()).map(|s| old.digit(idx, s)).collect();
            digits.insert(memory_at, i);
            amps[new.index(&digits)] += c;
        }
    }
    StateVector::new(dims, amps)
}

/// Site index of the memory created by `premeasure(_, basis)`.
pub fn memory_site(basis: &SiteBasis) -> usize {
    basis.sites.iter().max().map_or(0, |m| m + 1)
}

/// Basis reading the memory created by `premeasure(_, basis)` in its own labels.
pub fn memory_basis(basis: &SiteBasis) -> SiteBasis {
    memory_basis_at(basis, memory_site(basis))
}

/// Basis reading a memory of `basis` that sits at site `memory`.
pub fn memory_basis_at(basis: &SiteBasis, memory: usize) -> SiteBasis {
    let dim = basis.len();
    SiteBasis {
        sites: vec![memory],
        vectors: (0..dim).map(|i| unit(dim, i)).collect(),
        labels: basis.labels.clone(),
    }
}
