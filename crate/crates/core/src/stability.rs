//! Exact stability classification of atomic measures on `ℙⁿ`.
//!
//! A measure is stable (semi-stable) iff every proper linear subspace `L`
//! satisfies `ν(L) < (dim L + 1)/(n+1)` (resp. `≤`). Shrinking `L` to the
//! span of the atoms it contains keeps `ν(L)` and does not increase
//! `dim L`, so it suffices to test the spans of atom subsets. Those spans
//! are enumerated as *flats*: atom sets that already contain every atom
//! lying in their span.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::ProjectivePoint;
use crate::linalg::{self, CMatrix, CVector};
use crate::measure::AtomicMeasure;
use crate::SPAN_RANK_TOL;

/// Atom-count cap for subspace enumeration.
pub const DEFAULT_ENUMERATION_CAP: usize = 16;
/// Atom-count cap for the polystable partition search.
pub const DEFAULT_PARTITION_CAP: usize = 12;

/// A linear subspace of `ℂⁿ⁺¹` spanned by atoms, with the atoms it contains.
#[derive(Debug, Clone)]
pub struct Subspace {
    basis: CMatrix,
    atoms: Vec<usize>,
    mass: f64,
}

impl Subspace {
    pub(crate) fn new(basis: CMatrix, atoms: Vec<usize>, mass: f64) -> Self {
        Subspace { basis, atoms, mass }
    }

    /// Orthonormal basis as columns.
    pub fn basis(&self) -> &CMatrix {
        &self.basis
    }

    /// Basis vectors as projective points.
    pub fn basis_points(&self) -> Vec<ProjectivePoint> {
        (0..self.basis.ncols())
            .map(|j| {
                ProjectivePoint::new(self.basis.column(j).into_owned())
                    .expect("basis columns have unit norm")
            })
            .collect()
    }

    /// Indices of the atoms lying in the subspace.
    pub fn atoms(&self) -> &[usize] {
        &self.atoms
    }

    /// `ν(ℙ(L))`.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// Linear dimension of the subspace.
    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    /// Projective dimension `dim ℙ(L) = rank − 1`.
    pub fn dim(&self) -> usize {
        self.rank() - 1
    }

    /// Projective dimension `n` of the ambient space.
    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows() - 1
    }

    /// `(dim L + 1)/(n+1) − ν(L)`; negative values witness instability.
    pub fn slack(&self) -> f64 {
        self.rank() as f64 / self.basis.nrows() as f64 - self.mass
    }

    /// Distance from `z` to the subspace.
    pub fn residual(&self, z: &CVector) -> f64 {
        linalg::residual_norm(&self.basis, z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StabilityKind {
    Stable,
    PolystableNotStable,
    SemistableNotPolystable,
    Unstable,
}

impl StabilityKind {
    pub fn is_semistable(self) -> bool {
        !matches!(self, StabilityKind::Unstable)
    }

    pub fn is_polystable(self) -> bool {
        matches!(self, StabilityKind::Stable | StabilityKind::PolystableNotStable)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            StabilityKind::Stable => "stable",
            StabilityKind::PolystableNotStable => "polystable",
            StabilityKind::SemistableNotPolystable => "semistable",
            StabilityKind::Unstable => "unstable",
        }
    }
}

#[derive(Debug, Clone)]
pub struct StabilityVerdict {
    pub kind: StabilityKind,
    /// Minimum of `(dim L + 1)/(n+1) − ν(L)` over candidate subspaces;
    /// `+∞` on `ℙ⁰`, which has no proper subspaces.
    pub margin: f64,
    /// The minimizing subspace; present whenever the verdict is not stable.
    pub certificate: Option<Subspace>,
    /// Present for stable and polystable verdicts.
    pub decomposition: Option<PolystableSplitting>,
}

/// One summand `V_j` of a polystable splitting.
#[derive(Debug, Clone)]
pub struct SplittingBlock {
    /// Orthonormal basis of `V_j` as columns.
    pub basis: CMatrix,
    /// Indices of the atoms of `ν` in `ℙ(V_j)`.
    pub atoms: Vec<usize>,
    /// Restricted measure `ν_j` on `ℙ(V_j)` in the coordinates of `basis`.
    pub measure: AtomicMeasure,
    /// `ν(ℙ(V_j))`, equal to `dim V_j/(n+1)`.
    pub mass: f64,
}

/// `ℂⁿ⁺¹ = V₀ ⊕ … ⊕ V_r` with `ν = Σ (dim V_j/(n+1))·ν_j`, each `ν_j` stable.
#[derive(Debug, Clone)]
pub struct PolystableSplitting {
    pub blocks: Vec<SplittingBlock>,
}

#[derive(Debug, Clone)]
pub enum Polystability {
    Polystable(PolystableSplitting),
    NotPolystable,
}

/// Spans of atom subsets with projective dimension at most `n − 1`, one per
/// flat, in increasing order of the atom bitmask.
pub fn candidate_subspaces(nu: &AtomicMeasure) -> Result<Vec<Subspace>> {
    candidate_subspaces_with_cap(nu, DEFAULT_ENUMERATION_CAP)
}

pub fn candidate_subspaces_with_cap(nu: &AtomicMeasure, cap: usize) -> Result<Vec<Subspace>> {
    if nu.dim() == 1 {
        return Ok(line_points(nu));
    }
    check_cap(nu, cap)?;
    Ok(flats(nu, false))
}

/// On `ℙ¹` the proper flats are the points themselves, so no enumeration
/// is needed and the atom count is unbounded.
fn line_points(nu: &AtomicMeasure) -> Vec<Subspace> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, atom) in nu.atoms().iter().enumerate() {
        let z = atom.point.coeffs();
        match groups.iter_mut().find(|g| {
            let basis = CMatrix::from_columns(&[nu.atoms()[g[0]].point.coeffs().clone()]);
            linalg::residual_norm(&basis, z) <= SPAN_RANK_TOL
        }) {
            Some(g) => g.push(i),
            None => groups.push(alloc::vec![i]),
        }
    }
    groups.sort_by_key(|g| g[g.len() - 1]);
    groups
        .into_iter()
        .map(|members| {
            let basis = CMatrix::from_columns(&[nu.atoms()[members[0]].point.coeffs().clone()]);
            let mass = nu.mass_of(&members);
            Subspace::new(basis, members, mass)
        })
        .collect()
}

fn check_cap(nu: &AtomicMeasure, cap: usize) -> Result<()> {
    // masks are u32 and the rank table has 2^m entries
    let cap = cap.min(24);
    if nu.len() > cap {
        return Err(Error::TooManyAtoms { count: nu.len(), cap });
    }
    Ok(())
}

fn flats(nu: &AtomicMeasure, include_full: bool) -> Vec<Subspace> {
    let m = nu.len();
    let full_rank = nu.dim() + 1;
    let all: u32 = if m == 32 { u32::MAX } else { (1u32 << m) - 1 };
    let vectors: Vec<&CVector> = nu.points().map(|p| p.coeffs()).collect();
    let mut rank = alloc::vec![0u8; 1usize << m];
    let mut out = Vec::new();
    for mask in 1..=all {
        let rest = mask & (mask - 1);
        if rest != 0 && rank[rest as usize] as usize >= full_rank {
            rank[mask as usize] = full_rank as u8;
            if !(include_full && mask == all) {
                continue;
            }
        }
        let members: Vec<usize> = (0..m).filter(|&i| mask & (1 << i) != 0).collect();
        let span: Vec<CVector> = members.iter().map(|&i| vectors[i].clone()).collect();
        let basis = linalg::orthonormal_basis(&span, SPAN_RANK_TOL);
        let r = basis.ncols();
        rank[mask as usize] = r.min(full_rank) as u8;
        if r >= full_rank && !(include_full && mask == all) {
            continue;
        }
        let closure = (0..m)
            .filter(|&j| linalg::residual_norm(&basis, vectors[j]) <= SPAN_RANK_TOL)
            .fold(0u32, |acc, j| acc | (1 << j));
        if closure != mask {
            continue;
        }
        let mass = nu.mass_of(&members);
        out.push(Subspace::new(basis, members, mass));
    }
    out
}

/// Smallest slack over `candidates`, keeping the first minimizer.
fn tightest(candidates: &[Subspace]) -> Option<&Subspace> {
    let mut best: Option<&Subspace> = None;
    for s in candidates {
        if best.is_none_or(|b| s.slack() < b.slack()) {
            best = Some(s);
        }
    }
    best
}

/// Classifies `ν` as stable, polystable, semi-stable or unstable.
pub fn classify(nu: &AtomicMeasure, tol_eq: f64) -> Result<StabilityVerdict> {
    if !(tol_eq > 0.0) || !tol_eq.is_finite() {
        return Err(Error::InvalidParameter("tol_eq must be positive"));
    }
    if nu.dim() == 0 {
        return Ok(StabilityVerdict {
            kind: StabilityKind::Stable,
            margin: f64::INFINITY,
            certificate: None,
            decomposition: Some(trivial_splitting(nu)),
        });
    }
    let candidates = candidate_subspaces(nu)?;
    let worst = tightest(&candidates).cloned();
    let margin = worst.as_ref().map_or(f64::INFINITY, Subspace::slack);

    if margin > tol_eq {
        return Ok(StabilityVerdict {
            kind: StabilityKind::Stable,
            margin,
            certificate: None,
            decomposition: Some(trivial_splitting(nu)),
        });
    }
    if margin < -tol_eq {
        return Ok(StabilityVerdict {
            kind: StabilityKind::Unstable,
            margin,
            certificate: worst,
            decomposition: None,
        });
    }
    let (kind, decomposition) = match search_splitting(nu, tol_eq, DEFAULT_PARTITION_CAP)? {
        Polystability::Polystable(s) => (StabilityKind::PolystableNotStable, Some(s)),
        Polystability::NotPolystable => (StabilityKind::SemistableNotPolystable, None),
    };
    Ok(StabilityVerdict { kind, margin, certificate: worst, decomposition })
}

/// Splits a semi-stable measure into stable pieces on complementary
/// subspaces, if such a splitting exists.
pub fn polystable_decompose(nu: &AtomicMeasure, tol_eq: f64) -> Result<Polystability> {
    if !(tol_eq > 0.0) || !tol_eq.is_finite() {
        return Err(Error::InvalidParameter("tol_eq must be positive"));
    }
    check_cap(nu, DEFAULT_PARTITION_CAP)?;
    if nu.dim() == 0 {
        return Ok(Polystability::Polystable(trivial_splitting(nu)));
    }
    let candidates = candidate_subspaces(nu)?;
    let margin = tightest(&candidates).map_or(f64::INFINITY, Subspace::slack);
    if margin < -tol_eq {
        return Err(Error::NotSemistable);
    }
    if margin > tol_eq {
        return Ok(Polystability::Polystable(trivial_splitting(nu)));
    }
    search_splitting(nu, tol_eq, DEFAULT_PARTITION_CAP)
}

fn trivial_splitting(nu: &AtomicMeasure) -> PolystableSplitting {
    PolystableSplitting {
        blocks: alloc::vec![SplittingBlock {
            basis: linalg::identity(nu.dim() + 1),
            atoms: (0..nu.len()).collect(),
            measure: nu.clone(),
            mass: 1.0,
        }],
    }
}

fn search_splitting(nu: &AtomicMeasure, tol_eq: f64, cap: usize) -> Result<Polystability> {
    check_cap(nu, cap)?;
    let dim = (nu.dim() + 1) as f64;
    let balanced: Vec<Subspace> = flats(nu, true)
        .into_iter()
        .filter(|s| (s.mass() - s.rank() as f64 / dim).abs() <= tol_eq)
        .collect();
    let masks: Vec<u32> =
        balanced.iter().map(|s| s.atoms().iter().fold(0u32, |acc, &i| acc | (1 << i))).collect();

    let mut chosen = Vec::new();
    let found = extend(nu, tol_eq, &balanced, &masks, 0, &mut chosen)?;
    Ok(match found {
        Some(blocks) => Polystability::Polystable(PolystableSplitting { blocks }),
        None => Polystability::NotPolystable,
    })
}

/// Depth-first search over disjoint balanced flats covering all atoms.
fn extend(
    nu: &AtomicMeasure,
    tol_eq: f64,
    flats: &[Subspace],
    masks: &[u32],
    used: u32,
    chosen: &mut Vec<usize>,
) -> Result<Option<Vec<SplittingBlock>>> {
    let m = nu.len();
    let Some(first) = (0..m).find(|&i| used & (1 << i) == 0) else {
        return finish(nu, tol_eq, flats, chosen);
    };
    for (k, &mask) in masks.iter().enumerate() {
        if mask & (1 << first) == 0 || mask & used != 0 {
            continue;
        }
        chosen.push(k);
        if independent(flats, chosen) {
            if let Some(blocks) = extend(nu, tol_eq, flats, masks, used | mask, chosen)? {
                return Ok(Some(blocks));
            }
        }
        chosen.pop();
    }
    Ok(None)
}

fn independent(flats: &[Subspace], chosen: &[usize]) -> bool {
    let total: usize = chosen.iter().map(|&k| flats[k].rank()).sum();
    let dim = flats[chosen[0]].basis().nrows();
    if total > dim {
        return false;
    }
    let mut joined = CMatrix::zeros(dim, total);
    let mut col = 0;
    for &k in chosen {
        let b = flats[k].basis();
        for j in 0..b.ncols() {
            joined.set_column(col, &b.column(j));
            col += 1;
        }
    }
    linalg::orthonormal_columns(&joined, SPAN_RANK_TOL).ncols() == total
}

fn finish(
    nu: &AtomicMeasure,
    tol_eq: f64,
    flats: &[Subspace],
    chosen: &[usize],
) -> Result<Option<Vec<SplittingBlock>>> {
    let total: usize = chosen.iter().map(|&k| flats[k].rank()).sum();
    // a single block is `ν` itself, which is only reached when it is not stable
    if total != nu.dim() + 1 || chosen.len() < 2 {
        return Ok(None);
    }
    let mut blocks = Vec::with_capacity(chosen.len());
    for &k in chosen {
        let flat = &flats[k];
        let measure = restrict(nu, flat)?;
        if measure.dim() > 0 && classify(&measure, tol_eq)?.kind != StabilityKind::Stable {
            return Ok(None);
        }
        blocks.push(SplittingBlock {
            basis: flat.basis().clone(),
            atoms: flat.atoms().to_vec(),
            measure,
            mass: flat.mass(),
        });
    }
    Ok(Some(blocks))
}

/// `ν` restricted to `ℙ(L)`, renormalized and written in the coordinates of
/// the orthonormal basis of `L`.
fn restrict(nu: &AtomicMeasure, flat: &Subspace) -> Result<AtomicMeasure> {
    let atoms = flat
        .atoms()
        .iter()
        .map(|&i| {
            let atom = &nu.atoms()[i];
            let coords = flat.basis().adjoint() * atom.point.coeffs();
            Ok((ProjectivePoint::new(coords)?, atom.weight / flat.mass()))
        })
        .collect::<Result<Vec<_>>>()?;
    AtomicMeasure::new(flat.rank() - 1, atoms)
}

/// Builds `Σ (dim V_j/(n+1))·ν_j` from blocks `(basis of V_j, ν_j)`. The
/// bases need not be orthonormal or mutually orthogonal, only jointly
/// independent.
pub fn assemble_splitting(blocks: &[(CMatrix, AtomicMeasure)]) -> Result<AtomicMeasure> {
    let Some((first, _)) = blocks.first() else {
        return Err(Error::EmptyMeasure);
    };
    let dim = first.nrows();
    let total: usize = blocks.iter().map(|(b, _)| b.ncols()).sum();
    if total != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: total });
    }
    let mut atoms = Vec::new();
    for (basis, measure) in blocks {
        if basis.nrows() != dim || measure.dim() + 1 != basis.ncols() {
            return Err(Error::DimensionMismatch { expected: basis.ncols(), found: measure.dim() + 1 });
        }
        let share = basis.ncols() as f64 / dim as f64;
        for atom in measure.atoms() {
            atoms.push((ProjectivePoint::new(basis * atom.point.coeffs())?, share * atom.weight));
        }
    }
    AtomicMeasure::new(dim - 1, atoms)
}

/// Sufficient conditions for stability in terms of subspace masses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DonaldsonConditions {
    /// Every hyperplane has measure zero. Never holds for a nonempty
    /// atomic measure on `ℙⁿ`, `n ≥ 1`.
    pub null_hyperplanes: bool,
    /// `ν(L)/(dim L + 1) < 1/(n+1)` for every proper subspace `L`.
    pub strict_subspace_bound: bool,
}

pub fn donaldson_conditions(nu: &AtomicMeasure) -> Result<DonaldsonConditions> {
    if nu.dim() == 0 {
        return Ok(DonaldsonConditions { null_hyperplanes: true, strict_subspace_bound: true });
    }
    let candidates = candidate_subspaces(nu)?;
    // each candidate lies in a hyperplane, which then carries its mass
    let null_hyperplanes = candidates.iter().all(|s| s.mass() == 0.0);
    let bound = 1.0 / (nu.dim() + 1) as f64;
    let strict_subspace_bound =
        candidates.iter().all(|s| s.mass() / ((s.dim() + 1) as f64) < bound);
    Ok(DonaldsonConditions { null_hyperplanes, strict_subspace_bound })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pt(x: &[f64]) -> ProjectivePoint {
        ProjectivePoint::from_real(x).unwrap()
    }

    #[test]
    fn candidate_examples() {
        let dirac = AtomicMeasure::dirac(pt(&[1.0, 2.0, 3.0]));
        assert_eq!(candidate_subspaces(&dirac).unwrap().len(), 1);

        let two = AtomicMeasure::uniform(2, alloc::vec![pt(&[1.0, 0.0, 0.0]), pt(&[1.0, 1.0, 1.0])])
            .unwrap();
        let c = candidate_subspaces(&two).unwrap();
        assert_eq!(c.len(), 3);
        assert_eq!(c.iter().filter(|s| s.rank() == 2).count(), 1);

        let mut rng = ChaCha8Rng::seed_from_u64(30);
        let generic = random::uniform_measure(3, 6, &mut rng);
        // C(6,1) + C(6,2) + C(6,3)
        assert_eq!(candidate_subspaces(&generic).unwrap().len(), 6 + 15 + 20);
    }

    #[test]
    fn collinear_atoms_share_one_flat() {
        // three points on a line in P^2 plus one off it
        let nu = AtomicMeasure::uniform(
            2,
            alloc::vec![
                pt(&[1.0, 0.0, 0.0]),
                pt(&[0.0, 1.0, 0.0]),
                pt(&[1.0, 1.0, 0.0]),
                pt(&[0.0, 0.0, 1.0])
            ],
        )
        .unwrap();
        let c = candidate_subspaces(&nu).unwrap();
        let line = c.iter().find(|s| s.atoms() == [0, 1, 2]).unwrap();
        assert_eq!(line.rank(), 2);
        assert!(c.iter().all(|s| s.atoms() != [0, 1]));
        let verdict = classify(&nu, 1e-9).unwrap();
        assert_eq!(verdict.kind, StabilityKind::Unstable);
        assert_eq!(verdict.certificate.unwrap().atoms(), &[0, 1, 2]);
    }

    #[test]
    fn too_many_atoms() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let nu = random::uniform_measure(2, 17, &mut rng);
        assert!(matches!(candidate_subspaces(&nu), Err(Error::TooManyAtoms { count: 17, cap: 16 })));
        let nu = random::uniform_measure(1, 13, &mut rng);
        assert!(matches!(polystable_decompose(&nu, 1e-9), Err(Error::TooManyAtoms { .. })));
    }

    #[test]
    fn classify_examples() {
        let dirac = AtomicMeasure::dirac(pt(&[1.0, 2.0]));
        let v = classify(&dirac, 1e-9).unwrap();
        assert_eq!(v.kind, StabilityKind::Unstable);
        assert!(v.certificate.unwrap().basis_points()[0].approx_eq(&pt(&[1.0, 2.0]), 1e-14));

        let two = AtomicMeasure::uniform(1, alloc::vec![pt(&[1.0, 3.0]), pt(&[2.0, -1.0])]).unwrap();
        let v = classify(&two, 1e-9).unwrap();
        assert_eq!(v.kind, StabilityKind::PolystableNotStable);
        assert!(v.certificate.is_some());

        let three =
            AtomicMeasure::uniform(1, alloc::vec![pt(&[1.0, 0.0]), pt(&[0.0, 1.0]), pt(&[1.0, 1.0])])
                .unwrap();
        let v = classify(&three, 1e-9).unwrap();
        assert_eq!(v.kind, StabilityKind::Stable);
        assert!((v.margin - 1.0 / 6.0).abs() < 1e-15);
        assert!(v.certificate.is_none());
    }

    #[test]
    fn semistable_not_polystable() {
        let nu = AtomicMeasure::new(
            1,
            alloc::vec![(pt(&[1.0, 0.0]), 0.5), (pt(&[0.0, 1.0]), 0.25), (pt(&[1.0, 1.0]), 0.25)],
        )
        .unwrap();
        assert!(matches!(polystable_decompose(&nu, 1e-9).unwrap(), Polystability::NotPolystable));
        assert_eq!(classify(&nu, 1e-9).unwrap().kind, StabilityKind::SemistableNotPolystable);
    }

    #[test]
    fn decompose_examples() {
        let half = AtomicMeasure::uniform(1, alloc::vec![pt(&[1.0, 0.0]), pt(&[0.0, 1.0])]).unwrap();
        let Polystability::Polystable(split) = polystable_decompose(&half, 1e-9).unwrap() else {
            panic!("expected a splitting");
        };
        assert_eq!(split.blocks.len(), 2);
        assert_eq!(split.blocks[0].mass, 0.5);
        assert_eq!(split.blocks[1].mass, 0.5);
        assert_eq!(split.blocks[0].atoms, [0]);

        let three =
            AtomicMeasure::uniform(1, alloc::vec![pt(&[1.0, 0.0]), pt(&[0.0, 1.0]), pt(&[1.0, 1.0])])
                .unwrap();
        let Polystability::Polystable(split) = polystable_decompose(&three, 1e-9).unwrap() else {
            panic!("stable measures are polystable");
        };
        assert_eq!(split.blocks.len(), 1);

        let dirac = AtomicMeasure::dirac(pt(&[1.0, 0.0]));
        assert!(matches!(polystable_decompose(&dirac, 1e-9), Err(Error::NotSemistable)));
    }

    #[test]
    fn non_orthogonal_splitting_in_p2() {
        // the pair on the line is only polystable, so the splitting refines
        // into three points
        let p = pt(&[1.0, 1.0, 1.0]);
        let third = 1.0 / 3.0;
        let nu = AtomicMeasure::new(
            2,
            alloc::vec![(p, third), (pt(&[1.0, 0.0, 0.0]), third), (pt(&[0.0, 1.0, 0.0]), third)],
        )
        .unwrap();
        let v = classify(&nu, 1e-9).unwrap();
        assert_eq!(v.kind, StabilityKind::PolystableNotStable);
        assert_eq!(v.decomposition.unwrap().blocks.len(), 3);

        // point p with mass 1/3 and a stable triple on a line not
        // orthogonal to p
        let nu = AtomicMeasure::new(
            2,
            alloc::vec![
                (pt(&[1.0, 1.0, 1.0]), third),
                (pt(&[1.0, 0.0, 0.0]), 2.0 / 9.0),
                (pt(&[0.0, 1.0, 0.0]), 2.0 / 9.0),
                (pt(&[1.0, 2.0, 0.0]), 2.0 / 9.0)
            ],
        )
        .unwrap();
        let v = classify(&nu, 1e-9).unwrap();
        assert_eq!(v.kind, StabilityKind::PolystableNotStable);
        let split = v.decomposition.unwrap();
        let mut ranks: Vec<usize> = split.blocks.iter().map(|b| b.basis.ncols()).collect();
        ranks.sort();
        assert_eq!(ranks, [1, 2]);
    }

    #[test]
    fn donaldson_examples() {
        let three =
            AtomicMeasure::uniform(1, alloc::vec![pt(&[1.0, 0.0]), pt(&[0.0, 1.0]), pt(&[1.0, 1.0])])
                .unwrap();
        let c = donaldson_conditions(&three).unwrap();
        assert!(!c.null_hyperplanes);
        assert!(c.strict_subspace_bound);

        let dirac = AtomicMeasure::dirac(pt(&[1.0, 0.0]));
        let c = donaldson_conditions(&dirac).unwrap();
        assert!(!c.null_hyperplanes);
        assert!(!c.strict_subspace_bound);
    }

    #[test]
    fn assemble_rejects_wrong_dimensions() {
        let block = (linalg::identity(2), AtomicMeasure::dirac(pt(&[1.0])));
        assert!(assemble_splitting(&[block]).is_err());
        assert!(assemble_splitting(&[]).is_err());
    }

    /// All set partitions of `0..m`, as block lists.
    fn set_partitions(m: usize) -> Vec<Vec<Vec<usize>>> {
        let mut out = Vec::new();
        fn go(i: usize, m: usize, cur: &mut Vec<Vec<usize>>, out: &mut Vec<Vec<Vec<usize>>>) {
            if i == m {
                out.push(cur.clone());
                return;
            }
            for b in 0..cur.len() {
                cur[b].push(i);
                go(i + 1, m, cur, out);
                cur[b].pop();
            }
            cur.push(alloc::vec![i]);
            go(i + 1, m, cur, out);
            cur.pop();
        }
        go(0, m, &mut Vec::new(), &mut out);
        out
    }

    /// Brute-force polystability on `ℙ¹`: some set partition with
    /// independent block spans, ranks summing to 2, block masses
    /// rank/2, and each rank-2 block stable (no point of mass ≥ half the
    /// block).
    fn brute_force_polystable_p1(nu: &AtomicMeasure) -> bool {
        let tol = 1e-9;
        for partition in set_partitions(nu.len()) {
            let mut ok = true;
            let mut ranks = 0;
            let mut vectors = Vec::new();
            for block in &partition {
                let span: Vec<_> = block.iter().map(|&i| nu.atoms()[i].point.coeffs().clone()).collect();
                let rank = linalg::orthonormal_basis(&span, SPAN_RANK_TOL).ncols();
                let mass = nu.mass_of(block);
                ranks += rank;
                vectors.extend(span.iter().take(rank).cloned());
                if (mass - rank as f64 / 2.0).abs() > tol {
                    ok = false;
                }
                if rank == 2 && block.iter().any(|&i| nu.atoms()[i].weight / mass >= 0.5 - tol) {
                    ok = false;
                }
            }
            if ranks == 2 && ok && linalg::orthonormal_basis(&vectors, SPAN_RANK_TOL).ncols() == 2 {
                return true;
            }
        }
        false
    }

    #[test]
    fn partition_search_matches_brute_force_on_p1() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let weight_sets: &[&[f64]] = &[
            &[1.0],
            &[0.5, 0.5],
            &[0.6, 0.4],
            &[0.5, 0.25, 0.25],
            &[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
            &[0.25, 0.25, 0.25, 0.25],
            &[0.5, 0.2, 0.2, 0.1],
            &[0.4, 0.3, 0.2, 0.1],
        ];
        for weights in weight_sets {
            for _ in 0..4 {
                let atoms = weights.iter().map(|&w| (random::point(1, &mut rng), w)).collect();
                let nu = AtomicMeasure::new(1, atoms).unwrap();
                let expected = brute_force_polystable_p1(&nu);
                let verdict = classify(&nu, 1e-9).unwrap();
                assert_eq!(verdict.kind.is_polystable(), expected, "weights {weights:?}");
            }
        }
    }
}
