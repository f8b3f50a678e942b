use crate::error::{check_dim, Error, Result};
use crate::filters::KrrStepInfo;
use crate::linalg::{axpy, dot, norm, sub, BasisMatrix, DenseVector, HalfSpace};
use crate::tolerances;

use super::phi::PhiMap;

/// `g(h) = ‖Uᵀh − d‖² − ρ` for a full-length data matrix `U = [u_1, …, u_r]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PropertySet {
    pub columns: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
    pub weight: f64,
}

impl PropertySet {
    /// `e = Uᵀh − d`.
    pub fn residual(&self, h: &[f64]) -> Vec<f64> {
        self.columns.iter().zip(&self.targets).map(|(u, d)| dot(u, h) - d).collect()
    }

    pub fn value(&self, h: &[f64], rho: f64) -> f64 {
        let e = self.residual(h);
        dot(&e, &e) - rho
    }

    /// `∇g(h) = 2 U e`.
    pub fn gradient(&self, h: &[f64]) -> Vec<f64> {
        let e = self.residual(h);
        let mut out = vec![0.0; h.len()];
        for (u, ei) in self.columns.iter().zip(&e) {
            axpy(2.0 * ei, u, &mut out);
        }
        out
    }

    /// The supporting half-space `H⁻(anchor) = {x : ⟨x − anchor, ∇g⟩ + g ≤ 0}`.
    pub fn half_space(&self, anchor: &[f64], rho: f64) -> Result<HalfSpace> {
        HalfSpace::new(
            DenseVector::new(self.gradient(anchor))?,
            self.value(anchor, rho),
            DenseVector::new(anchor.to_vec())?,
        )
    }
}

/// Rebuilds the full-space property sets of a recorded KRR-APSP step.
pub fn property_sets_of(info: &KrrStepInfo) -> Result<Vec<PropertySet>> {
    info.sets
        .iter()
        .enumerate()
        .map(|(j, set)| {
            let r = set.columns.len();
            let rows = info
                .regressors
                .get(j..j + r)
                .ok_or_else(|| Error::Inconsistent("step was not recorded with its regressors".into()))?;
            Ok(PropertySet {
                columns: rows.iter().map(|(u, _)| u.clone()).collect(),
                targets: rows.iter().map(|(_, d)| *d).collect(),
                weight: set.weight,
            })
        })
        .collect()
}

/// Result of projecting onto `H⁻ ∩ R(S)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RestrictedProjection {
    pub point: Vec<f64>,
    pub distance: f64,
    /// Alternating-projection sweeps; zero for the closed form.
    pub iterations: usize,
}

/// The objective `Θ_k` built from `q` half-spaces, a basis and weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaInstance {
    pub half_spaces: Vec<HalfSpace>,
    pub basis: BasisMatrix,
    pub weights: Vec<f64>,
    pub anchor: DenseVector,
}

impl ThetaInstance {
    pub fn new(half_spaces: Vec<HalfSpace>, basis: BasisMatrix, weights: Vec<f64>, anchor: DenseVector) -> Result<Self> {
        check_dim(basis.dim(), anchor.len())?;
        check_dim(half_spaces.len(), weights.len())?;
        for h in &half_spaces {
            check_dim(basis.dim(), h.dim())?;
        }
        if weights.iter().any(|&w| !(w > 0.0)) {
            return Err(Error::param("weights", "weights must be positive"));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > tolerances::EXACT {
            return Err(Error::param("weights", format!("weights sum to {sum}, not 1")));
        }
        let off = out_of_range(&basis, &anchor)?;
        if off > 1e-9 * (1.0 + anchor.norm()) {
            return Err(Error::Inconsistent(format!("anchor is {off:e} away from the basis range")));
        }
        Ok(Self {
            half_spaces,
            basis,
            weights,
            anchor,
        })
    }

    /// Half-spaces of `sets` supporting at `anchor`.
    pub fn from_sets(basis: BasisMatrix, anchor: DenseVector, sets: &[PropertySet], rho: f64) -> Result<Self> {
        let half_spaces = sets
            .iter()
            .map(|s| s.half_space(&anchor, rho))
            .collect::<Result<Vec<_>>>()?;
        let weights = sets.iter().map(|s| s.weight).collect();
        Self::new(half_spaces, basis, weights, anchor)
    }

    /// The instance a recorded KRR-APSP step worked on.
    pub fn from_krr_step(info: &KrrStepInfo, rho: f64) -> Result<Self> {
        let basis = info
            .basis_before
            .clone()
            .ok_or_else(|| Error::Inconsistent("step was not recorded".into()))?;
        let anchor = DenseVector::new(basis.lift(&info.h_tilde_before)?)?;
        Self::from_sets(basis, anchor, &property_sets_of(info)?, rho)
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    /// `P_{H⁻ ∩ R(S)}(h)` for `h ∈ R(S)`:
    /// `h − (g/‖Qs‖²) Q s` when `h` violates the half-space, `h` otherwise.
    /// `None` when the intersection is empty (`Qs = 0` with a violation).
    pub fn project_in_range(&self, i: usize, h: &[f64]) -> Result<Option<Vec<f64>>> {
        let hs = &self.half_spaces[i];
        let viol = hs.violation(h);
        if viol <= 0.0 {
            return Ok(Some(h.to_vec()));
        }
        let qs = self.basis.project(hs.normal.as_slice())?;
        let qs2 = dot(&qs, &qs);
        if qs2 == 0.0 {
            return Ok(None);
        }
        let mut p = h.to_vec();
        axpy(-viol / qs2, &qs, &mut p);
        Ok(Some(p))
    }

    /// `P_{H⁻ ∩ R(S)}(h)` for any `h`, by Dykstra's alternating projections
    /// between the half-space and the subspace. The result is certified by
    /// the optimality conditions: the point is in both sets, and the
    /// in-range part of `h − P` is a nonnegative multiple of `Qs` that
    /// vanishes unless the constraint is active.
    pub fn project_restricted(&self, i: usize, h: &[f64]) -> Result<Option<RestrictedProjection>> {
        check_dim(self.dim(), h.len())?;
        let hs = &self.half_spaces[i];
        let qs = self.basis.project(hs.normal.as_slice())?;
        let qs2 = dot(&qs, &qs);
        let b = hs.rhs();
        if qs2 == 0.0 {
            // R(S) lies in a hyperplane parallel to the boundary.
            let inside = dot(&self.anchor, hs.normal.as_slice()) <= b;
            if !inside {
                return Ok(None);
            }
        }
        let tol = tolerances::ALT_PROJ * (1.0 + norm(h));
        let normal = hs.normal.as_slice();
        let n2 = dot(normal, normal);
        let mut x = h.to_vec();
        let mut p = vec![0.0; h.len()];
        let mut q = vec![0.0; h.len()];
        for it in 1..=tolerances::ALT_PROJ_MAX_ITERS {
            let xp: Vec<f64> = x.iter().zip(&p).map(|(a, b)| a + b).collect();
            let v = dot(&xp, normal) - b;
            let mut y = xp.clone();
            if v > 0.0 && n2 > 0.0 {
                axpy(-v / n2, normal, &mut y);
            }
            p = sub(&xp, &y);
            let yq: Vec<f64> = y.iter().zip(&q).map(|(a, b)| a + b).collect();
            let x_next = self.basis.project(&yq)?;
            q = sub(&yq, &x_next);
            let moved = norm(&sub(&x_next, &x));
            x = x_next;
            if moved <= tol && self.certify(i, h, &x, tol)? {
                return Ok(Some(RestrictedProjection {
                    distance: norm(&sub(h, &x)),
                    point: x,
                    iterations: it,
                }));
            }
        }
        Err(Error::Inconsistent(format!(
            "alternating projections did not certify within {} sweeps",
            tolerances::ALT_PROJ_MAX_ITERS
        )))
    }

    fn certify(&self, i: usize, h: &[f64], x: &[f64], tol: f64) -> Result<bool> {
        let hs = &self.half_spaces[i];
        let s_norm = hs.normal.norm();
        if out_of_range(&self.basis, x)? > tol || hs.violation(x) > tol * s_norm.max(1.0) {
            return Ok(false);
        }
        let qs = self.basis.project(hs.normal.as_slice())?;
        let qs2 = dot(&qs, &qs);
        let g = self.basis.project(&sub(h, x))?;
        if qs2 == 0.0 {
            return Ok(norm(&g) <= tol);
        }
        let mu = dot(&g, &qs) / qs2;
        let mut res = g.clone();
        axpy(-mu, &qs, &mut res);
        let active = hs.violation(x).abs() <= tol * s_norm.max(1.0);
        Ok(norm(&res) <= tol && mu >= -tol && (active || mu * qs2.sqrt() <= tol))
    }

    fn anchor_distances(&self) -> Result<Vec<Option<f64>>> {
        let a = self.anchor.as_slice();
        (0..self.half_spaces.len())
            .map(|i| Ok(self.project_in_range(i, a)?.map(|p| norm(&sub(a, &p)))))
            .collect()
    }

    /// `L_k = Σ w_ι d(anchor, H⁻_ι ∩ R(S))`. Sets with an empty restriction
    /// are left out, as the filter skips them.
    pub fn normalizer(&self) -> Result<f64> {
        Ok(self
            .anchor_distances()?
            .iter()
            .zip(&self.weights)
            .filter_map(|(d, w)| d.map(|d| w * d))
            .sum())
    }

    /// `d(h, H⁻_ι ∩ R(S))` for any `h`, or `None` when the set is empty.
    ///
    /// Since the set lies in `R(S)`,
    /// `d(h, ·)² = ‖(I − Q)h‖² + d(Qh, ·)²` with the closed form applied to
    /// `Qh`. [`Self::project_restricted`] computes the same distance
    /// iteratively.
    pub fn distance(&self, i: usize, h: &[f64]) -> Result<Option<f64>> {
        check_dim(self.dim(), h.len())?;
        let qh = self.basis.project(h)?;
        let off = norm(&sub(h, &qh));
        Ok(self
            .project_in_range(i, &qh)?
            .map(|p| off.hypot(norm(&sub(&qh, &p)))))
    }

    /// `Θ_k(h) = (1/L_k) Σ w_ι d(anchor, C_ι) d(h, C_ι)` with
    /// `C_ι = H⁻_ι ∩ R(S)`, or zero when `L_k = 0`.
    pub fn theta_value(&self, h: &[f64]) -> Result<f64> {
        check_dim(self.dim(), h.len())?;
        let da = self.anchor_distances()?;
        let l: f64 = da.iter().zip(&self.weights).filter_map(|(d, w)| d.map(|d| w * d)).sum();
        if l == 0.0 {
            return Ok(0.0);
        }
        let mut acc = 0.0;
        for (i, (d, w)) in da.iter().zip(&self.weights).enumerate() {
            let Some(d) = d else { continue };
            if *d == 0.0 {
                continue;
            }
            let dh = self.distance(i, h)?.expect("nonempty: anchor distance is finite");
            acc += w * d * dh;
        }
        Ok(acc / l)
    }

    /// One R-APSM step from `h ∈ R(S)`:
    /// `Φ[h + λ M Σ w_ι (P_ι(h) − h)]` with
    /// `M = Σ w_ι ‖P_ι(h) − h‖² / ‖Σ w_ι (P_ι(h) − h)‖²`,
    /// or `Φh` when `h` lies in every set.
    pub fn rapsm_step(&self, h: &[f64], phi: &PhiMap, lambda: f64) -> Result<Vec<f64>> {
        if !(0.0..=2.0).contains(&lambda) {
            return Err(Error::param("lambda", format!("{lambda} is outside [0, 2]")));
        }
        check_dim(self.dim(), h.len())?;
        let off = out_of_range(&self.basis, h)?;
        if off > 1e-9 * (1.0 + norm(h)) {
            return Err(Error::Inconsistent(format!("h is {off:e} away from the basis range")));
        }
        let mut f = vec![0.0; h.len()];
        let mut num = 0.0;
        for (i, w) in self.weights.iter().enumerate() {
            let Some(p) = self.project_in_range(i, h)? else { continue };
            let step = sub(&p, h);
            num += w * dot(&step, &step);
            axpy(*w, &step, &mut f);
        }
        let f2 = dot(&f, &f);
        if num == 0.0 || f2 <= tolerances::CANCELLATION_REL * tolerances::CANCELLATION_REL * num {
            return phi.apply(h);
        }
        let mut next = h.to_vec();
        axpy(lambda * num / f2, &f, &mut next);
        phi.apply(&next)
    }
}

/// `‖(I − SSᵀ) x‖`.
pub fn out_of_range(basis: &BasisMatrix, x: &[f64]) -> Result<f64> {
    Ok(norm(&sub(x, &basis.project(x)?)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plane() -> BasisMatrix {
        BasisMatrix::from_columns(3, &[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]], 0).unwrap()
    }

    fn instance(normal: Vec<f64>, offset: f64) -> ThetaInstance {
        let anchor = DenseVector::new(vec![1.0, 1.0, 0.0]).unwrap();
        let hs = HalfSpace::new(DenseVector::new(normal).unwrap(), offset, anchor.clone()).unwrap();
        ThetaInstance::new(vec![hs], plane(), vec![1.0], anchor).unwrap()
    }

    #[test]
    fn feasible_anchor_gives_zero() {
        let inst = instance(vec![1.0, 0.0, 0.0], -1.0);
        assert_eq!(inst.theta_value(&[5.0, 5.0, 5.0]).unwrap(), 0.0);
    }

    #[test]
    fn dykstra_matches_pythagoras() {
        let inst = instance(vec![1.0, 0.5, 2.0], 1.0);
        let h = [3.0, -1.0, 2.0];
        let proj = inst.project_restricted(0, &h).unwrap().unwrap();
        let in_plane = inst.project_in_range(0, &[3.0, -1.0, 0.0]).unwrap().unwrap();
        assert!(norm(&sub(&proj.point, &in_plane)) < 1e-9);
        assert!((inst.distance(0, &h).unwrap().unwrap() - proj.distance).abs() < 1e-9);
    }

    #[test]
    fn anchor_off_range_rejected() {
        let anchor = DenseVector::new(vec![0.0, 0.0, 1.0]).unwrap();
        let hs = HalfSpace::new(DenseVector::unit(3, 0), 1.0, anchor.clone()).unwrap();
        assert!(ThetaInstance::new(vec![hs], plane(), vec![1.0], anchor).is_err());
    }
}
