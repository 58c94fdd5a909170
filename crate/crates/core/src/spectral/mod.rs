//! Galerkin discretization of `−Δ_μ` on circle domains and the generalized
//! eigenproblem `K x = λ M x`.

pub mod linalg;
mod mesh;

pub use mesh::{build_mesh, Domain, Mesh1D};

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ChartPoint;
use crate::measure::DiscreteMeasure;

/// Tolerance for locating an atom on a mesh node.
pub const ATOM_NODE_TOL: f64 = 1e-12;

/// Relative cut separating finite eigenvalues from the massless modes.
pub const NU_CUT: f64 = 1e-8;

/// Eigenvalues below this magnitude are set to exactly zero.
pub const ZERO_SNAP: f64 = 1e-9;

/// Stiffness and measure-mass matrices over the free nodes.
#[derive(Debug, Clone)]
pub struct PencilMatrices {
    pub k: DMatrix<f64>,
    pub m: DMatrix<f64>,
    /// Mesh index of each free degree of freedom.
    pub free_nodes: Vec<usize>,
    /// Distinct atom-carrying free dofs with their aggregated weights.
    pub atom_dofs: Vec<(usize, f64)>,
}

impl PencilMatrices {
    pub fn dim(&self) -> usize {
        self.k.nrows()
    }

    /// Rank of `M`: the number of distinct atom nodes.
    pub fn mass_rank(&self) -> usize {
        self.atom_dofs.len()
    }
}

/// Assembles `K_ij = ∫ φ_i′ φ_j′ dθ` and `M_ij = Σ w φ_i(atom) φ_j(atom)` for the
/// hat basis. Atoms on Dirichlet endpoints do not contribute.
pub fn assemble(mesh: &Mesh1D, mu: &DiscreteMeasure) -> Result<PencilMatrices> {
    let n_nodes = mesh.nodes.len();
    let free = mesh.free_nodes();
    let mut dof_of = vec![usize::MAX; n_nodes];
    for (d, &i) in free.iter().enumerate() {
        dof_of[i] = d;
    }
    let n = free.len();
    if n == 0 {
        return Err(Error::Assembly("mesh has no free nodes".into()));
    }
    let mut k = DMatrix::<f64>::zeros(n, n);
    for e in 0..mesh.element_count() {
        let (a, b, h) = mesh.element(e);
        if !(h > 0.0) {
            return Err(Error::Assembly(format!(
                "element {e} has nonpositive length {h}"
            )));
        }
        let s = 1.0 / h;
        let (da, db) = (dof_of[a], dof_of[b]);
        if da != usize::MAX {
            k[(da, da)] += s;
        }
        if db != usize::MAX {
            k[(db, db)] += s;
        }
        if da != usize::MAX && db != usize::MAX {
            k[(da, db)] -= s;
            k[(db, da)] -= s;
        }
    }
    let mut m = DMatrix::<f64>::zeros(n, n);
    let mut weights = vec![0.0; n];
    for (idx, atom) in mu.atoms().iter().enumerate() {
        let theta = match atom.point {
            ChartPoint::Circle { theta } => theta,
            other => {
                return Err(Error::Domain(format!(
                    "Galerkin assembly needs a circle measure, atom {idx} lies on {:?}",
                    other.manifold()
                )))
            }
        };
        if !mesh.contains(theta, ATOM_NODE_TOL) {
            return Err(Error::Assembly(format!(
                "atom {idx} at θ = {theta} lies outside the domain"
            )));
        }
        let node = mesh.find_node(theta, ATOM_NODE_TOL).ok_or_else(|| {
            Error::Assembly(format!(
                "atom {idx} at θ = {theta} is not a mesh node; list it among the required nodes"
            ))
        })?;
        let d = dof_of[node];
        if d != usize::MAX {
            weights[d] += atom.weight;
        }
    }
    let mut atom_dofs = Vec::new();
    for (d, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            m[(d, d)] = w;
            atom_dofs.push((d, w));
        }
    }
    if atom_dofs.is_empty() {
        return Err(Error::Assembly("measure has no mass on free nodes".into()));
    }
    Ok(PencilMatrices {
        k,
        m,
        free_nodes: free,
        atom_dofs,
    })
}

/// Eigenvalues (ascending) and `M`-orthonormal eigenvectors over the free
/// nodes, together with the mesh and pencil they came from.
#[derive(Debug, Clone)]
pub struct SpectralBasis {
    pub mesh: Mesh1D,
    pub pencil: PencilMatrices,
    pub eigenvalues: Arc<[f64]>,
    /// `vectors[k][d]` is the value of `x_k` at free dof `d`.
    pub vectors: Vec<Vec<f64>>,
}

fn inf_norm(a: &DMatrix<f64>) -> f64 {
    (0..a.nrows())
        .map(|i| (0..a.ncols()).map(|j| a[(i, j)].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn m_dot(p: &PencilMatrices, x: &[f64], y: &[f64]) -> f64 {
    p.atom_dofs.iter().map(|&(d, w)| w * x[d] * y[d]).sum()
}

fn k_dot(p: &PencilMatrices, x: &[f64], y: &[f64]) -> f64 {
    let n = p.dim();
    let mut s = 0.0;
    for i in 0..n {
        let mut r = 0.0;
        for j in 0..n {
            r += p.k[(i, j)] * y[j];
        }
        s += x[i] * r;
    }
    s
}

/// Flips `x` so its largest-magnitude entry is positive; ties (within 1e−9
/// relative) go to the lowest index.
pub fn fix_sign(x: &mut [f64]) {
    let big = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if big == 0.0 {
        return;
    }
    if let Some(i) = x.iter().position(|v| v.abs() >= big * (1.0 - 1e-9)) {
        if x[i] < 0.0 {
            for v in x.iter_mut() {
                *v = -*v;
            }
        }
    }
}

/// Solves `K x = λ M x` through the shifted reduction
/// `B = L⁻¹ M L⁻ᵀ`, `K + σM = L Lᵀ`, keeping the finite eigenvalues.
pub fn solve_pencil(mesh: &Mesh1D, pencil: PencilMatrices, sigma: f64) -> Result<SpectralBasis> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::Config(format!(
            "shift σ must be positive, got {sigma}"
        )));
    }
    let n = pencil.dim();
    let a = &pencil.k + &pencil.m * sigma;
    let l = linalg::cholesky(&a)?;
    // B = L⁻¹ M L⁻ᵀ
    let mut c = pencil.m.clone();
    linalg::solve_lower(&l, &mut c);
    let mut b = c.transpose();
    linalg::solve_lower(&l, &mut b);
    let (nu, y) = linalg::jacobi_eigen(&b, 1e-13, 100)?;
    let nu_max = nu.iter().cloned().fold(0.0f64, f64::max);
    if !(nu_max > 0.0) {
        return Err(Error::Diagnostic(
            "reduced matrix has no positive eigenvalue".into(),
        ));
    }
    let cut = NU_CUT * nu_max;
    let rank = pencil.mass_rank();
    let mut keep: Vec<usize> = (0..n).filter(|&i| nu[i] > cut).collect();
    let ambiguous = nu
        .iter()
        .filter(|&&v| v > cut * 1e-2 && v < cut * 1e2)
        .count();
    if ambiguous > 0 {
        return Err(Error::Diagnostic(format!(
            "{ambiguous} reduced eigenvalue(s) within two decades of the cut {cut:e}"
        )));
    }
    if keep.len() != rank {
        return Err(Error::Diagnostic(format!(
            "found {} finite eigenvalues but the mass matrix has rank {rank}",
            keep.len()
        )));
    }
    // ascending λ ⇔ descending ν
    keep.sort_by(|&i, &j| nu[j].total_cmp(&nu[i]).then(i.cmp(&j)));
    let mut ymat = DMatrix::<f64>::zeros(n, keep.len());
    for (col, &i) in keep.iter().enumerate() {
        ymat.set_column(col, &y.column(i));
    }
    linalg::solve_lower_transpose(&l, &mut ymat);
    let mut vectors = Vec::with_capacity(keep.len());
    let mut values = Vec::with_capacity(keep.len());
    for col in 0..keep.len() {
        let mut x: Vec<f64> = ymat.column(col).iter().cloned().collect();
        let norm = m_dot(&pencil, &x, &x).sqrt();
        for v in &mut x {
            *v /= norm;
        }
        let mut lam = k_dot(&pencil, &x, &x);
        if lam.abs() < ZERO_SNAP {
            lam = 0.0;
        }
        values.push(lam);
        vectors.push(x);
    }
    // re-orthonormalize clusters of (numerically) equal eigenvalues in order
    let mut start = 0;
    while start < values.len() {
        let mut end = start + 1;
        while end < values.len()
            && (values[end] - values[start]).abs() <= 1e-9 * values[start].abs().max(1.0)
        {
            end += 1;
        }
        if end - start > 1 {
            for i in start..end {
                for j in start..i {
                    let proj = m_dot(&pencil, &vectors[i], &vectors[j]);
                    let (head, tail) = vectors.split_at_mut(i);
                    for (v, u) in tail[0].iter_mut().zip(&head[j]) {
                        *v -= proj * u;
                    }
                }
                let nrm = m_dot(&pencil, &vectors[i], &vectors[i]).sqrt();
                for v in &mut vectors[i] {
                    *v /= nrm;
                }
            }
        }
        start = end;
    }
    for x in &mut vectors {
        fix_sign(x);
    }
    let basis = SpectralBasis {
        mesh: mesh.clone(),
        pencil,
        eigenvalues: values.into(),
        vectors,
    };
    let worst = basis.max_residual();
    let bound = 1e-9 * inf_norm(&basis.pencil.k);
    if worst > bound {
        return Err(Error::Diagnostic(format!(
            "pencil residual {worst:e} exceeds {bound:e}"
        )));
    }
    Ok(basis)
}

/// Full pipeline: mesh refined at the atoms, assembly and eigensolve.
pub fn eigenbasis(
    domain: Domain,
    resolution: usize,
    mu: &DiscreteMeasure,
    sigma: f64,
) -> Result<SpectralBasis> {
    let mut required = Vec::new();
    for a in mu.atoms() {
        match a.point {
            ChartPoint::Circle { theta } => required.push(theta),
            other => {
                return Err(Error::Domain(format!(
                    "eigenproblems are posed on the circle, got a measure on {:?}",
                    other.manifold()
                )))
            }
        }
    }
    // atoms outside an arc are reported by assembly, not by meshing
    let mesh = match domain {
        Domain::Arc { .. } => {
            let probe = build_mesh(domain, resolution, &[])?;
            let inside: Vec<f64> = required
                .iter()
                .cloned()
                .filter(|&t| probe.contains(t, ATOM_NODE_TOL))
                .collect();
            build_mesh(domain, resolution, &inside)?
        }
        Domain::FullCircle => build_mesh(domain, resolution, &required)?,
    };
    let pencil = assemble(&mesh, mu)?;
    solve_pencil(&mesh, pencil, sigma)
}

/// Eigenbasis export document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EigenbasisFile {
    pub eigenvalues: Vec<f64>,
    /// Eigenvectors sampled at every mesh node (zero at Dirichlet ends).
    pub vectors: Vec<Vec<f64>>,
    pub mesh_nodes: Vec<f64>,
    pub domain: Domain,
}

impl SpectralBasis {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// `‖K x_k − λ_k M x_k‖_∞`, maximized over `k`.
    pub fn max_residual(&self) -> f64 {
        let p = &self.pencil;
        let n = p.dim();
        let mut worst = 0.0f64;
        for (x, &lam) in self.vectors.iter().zip(self.eigenvalues.iter()) {
            for i in 0..n {
                let mut r = 0.0;
                for j in 0..n {
                    r += (p.k[(i, j)] - lam * p.m[(i, j)]) * x[j];
                }
                worst = worst.max(r.abs());
            }
        }
        worst
    }

    /// Relative residual bound reference `‖K‖_∞`.
    pub fn stiffness_norm(&self) -> f64 {
        inf_norm(&self.pencil.k)
    }

    /// `max |x_iᵀ M x_j − δ_ij|`.
    pub fn orthonormality_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.len() {
            for j in 0..self.len() {
                let d = m_dot(&self.pencil, &self.vectors[i], &self.vectors[j]);
                let want = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((d - want).abs());
            }
        }
        worst
    }

    /// Eigenvector `k` at every mesh node.
    pub fn nodal_vector(&self, k: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.mesh.nodes.len()];
        for (d, &node) in self.pencil.free_nodes.iter().enumerate() {
            out[node] = self.vectors[k][d];
        }
        out
    }

    /// `a_k = x_kᵀ M g` for nodal values `g` given at every mesh node.
    pub fn project(&self, nodal: &[Complex64]) -> Result<Vec<Complex64>> {
        if nodal.len() != self.mesh.nodes.len() {
            return Err(Error::Invalid(format!(
                "expected {} nodal values, got {}",
                self.mesh.nodes.len(),
                nodal.len()
            )));
        }
        Ok(self
            .vectors
            .iter()
            .map(|x| {
                self.pencil
                    .atom_dofs
                    .iter()
                    .map(|&(d, w)| nodal[self.pencil.free_nodes[d]] * (w * x[d]))
                    .sum()
            })
            .collect())
    }

    /// Projection of values given only at the atom dofs (in `atom_dofs` order).
    pub fn project_atoms(&self, values: &[Complex64]) -> Vec<Complex64> {
        self.vectors
            .iter()
            .map(|x| {
                self.pencil
                    .atom_dofs
                    .iter()
                    .zip(values)
                    .map(|(&(d, w), v)| v * (w * x[d]))
                    .sum()
            })
            .collect()
    }

    /// `Σ a_k x_k` at every mesh node.
    pub fn reconstruct(&self, coeffs: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.mesh.nodes.len()];
        for (x, a) in self.vectors.iter().zip(coeffs) {
            for (d, &node) in self.pencil.free_nodes.iter().enumerate() {
                out[node] += a * x[d];
            }
        }
        out
    }

    /// `Σ a_k x_k` at the atom dofs (in `atom_dofs` order).
    pub fn reconstruct_atoms(&self, coeffs: &[Complex64]) -> Vec<Complex64> {
        self.pencil
            .atom_dofs
            .iter()
            .map(|&(d, _)| self.vectors.iter().zip(coeffs).map(|(x, a)| a * x[d]).sum())
            .collect()
    }

    pub fn export(&self) -> EigenbasisFile {
        EigenbasisFile {
            eigenvalues: self.eigenvalues.to_vec(),
            vectors: (0..self.len()).map(|k| self.nodal_vector(k)).collect(),
            mesh_nodes: self.mesh.nodes.clone(),
            domain: self.mesh.domain,
        }
    }
}
