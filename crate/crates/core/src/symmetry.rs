//! Vertex permutations induced by the mirror symmetries of the annulus and
//! projection of nodal vectors onto symmetric subspaces.
//!
//! Solutions on a symmetric mesh are symmetric only up to roundoff and
//! solver tolerance. Averaging over the group orbit of each vertex makes the
//! symmetry exact while changing values by no more than that error, which
//! is reported beforehand.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::mesh::GradedMesh;

/// Parity of a field under `(x, y) ↦ (y, x)` on a square annulus.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SwapParity {
    Even,
    Odd,
    /// No swap symmetry is imposed.
    None,
}

impl SwapParity {
    fn sign(self) -> Option<f64> {
        match self {
            SwapParity::Even => Some(1.0),
            SwapParity::Odd => Some(-1.0),
            SwapParity::None => None,
        }
    }
}

/// Largest violations of `v(gp) = χ(g)v(p)` over the vertices.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SymmetryResidual {
    pub mirror_x: f64,
    pub mirror_y: f64,
    pub point: f64,
    /// `None` unless a swap parity was requested on a square.
    pub swap: Option<f64>,
}

impl SymmetryResidual {
    pub fn max(&self) -> f64 {
        self.mirror_x
            .max(self.mirror_y)
            .max(self.point)
            .max(self.swap.unwrap_or(0.0))
    }
}

#[derive(Debug, Clone)]
pub struct MeshSymmetry {
    mirror_x: Vec<usize>,
    mirror_y: Vec<usize>,
    swap: Option<Vec<usize>>,
}

impl MeshSymmetry {
    pub fn new(mesh: &GradedMesh) -> Result<Self> {
        let index = mesh.vertex_index();
        let perm = |f: fn(Point) -> Point| -> Result<Vec<usize>> {
            mesh.vertices
                .iter()
                .map(|p| {
                    GradedMesh::find_vertex(&index, f(*p)).ok_or(Error::MeshAudit {
                        what: "mesh is not mirror symmetric",
                        value: p.x,
                    })
                })
                .collect()
        };
        let mirror_x = perm(Point::mirror_x)?;
        let mirror_y = perm(Point::mirror_y)?;
        let swap = if mesh.domain().is_square() {
            Some(perm(Point::swap)?)
        } else {
            None
        };
        Ok(Self {
            mirror_x,
            mirror_y,
            swap,
        })
    }

    pub fn has_swap(&self) -> bool {
        self.swap.is_some()
    }

    /// Group elements as vertex maps with their characters.
    fn elements(&self, parity: SwapParity) -> Vec<(Vec<usize>, f64)> {
        let compose = |a: &[usize], b: &[usize]| -> Vec<usize> { b.iter().map(|&i| a[i]).collect() };
        let id: Vec<usize> = (0..self.mirror_x.len()).collect();
        let both = compose(&self.mirror_x, &self.mirror_y);
        let mut out = alloc::vec![
            (id, 1.0),
            (self.mirror_x.clone(), 1.0),
            (self.mirror_y.clone(), 1.0),
            (both, 1.0),
        ];
        if let (Some(s), Some(sign)) = (&self.swap, parity.sign()) {
            let with_swap: Vec<(Vec<usize>, f64)> = out.iter().map(|(g, _)| (compose(s, g), sign)).collect();
            out.extend(with_swap);
        }
        out
    }

    pub fn residual(&self, values: &[f64], parity: SwapParity) -> SymmetryResidual {
        let dev = |perm: &[usize], sign: f64| {
            values
                .iter()
                .enumerate()
                .map(|(i, v)| (values[perm[i]] - sign * v).abs())
                .fold(0.0, f64::max)
        };
        let point: Vec<usize> = self.mirror_y.iter().map(|&i| self.mirror_x[i]).collect();
        SymmetryResidual {
            mirror_x: dev(&self.mirror_x, 1.0),
            mirror_y: dev(&self.mirror_y, 1.0),
            point: dev(&point, 1.0),
            swap: match (&self.swap, parity.sign()) {
                (Some(s), Some(sign)) => Some(dev(s, sign)),
                _ => None,
            },
        }
    }

    /// Replaces `values` by their orbit averages. Each orbit value is
    /// computed once and written back with the character sign, so the
    /// result is symmetric bit for bit.
    pub fn project(&self, values: &mut [f64], parity: SwapParity) {
        let group = self.elements(parity);
        let order = group.len() as f64;
        let mut done = alloc::vec![false; values.len()];
        for r in 0..values.len() {
            if done[r] {
                continue;
            }
            let mean = group.iter().map(|(g, chi)| chi * values[g[r]]).sum::<f64>() / order;
            // A vertex fixed by an element of character −1 must vanish.
            let vanishes = group.iter().any(|(g, chi)| g[r] == r && *chi < 0.0);
            let mut assigned: Vec<(usize, f64)> = Vec::with_capacity(group.len());
            for (g, chi) in &group {
                let j = g[r];
                let v = if vanishes { 0.0 } else { chi * mean };
                if let Some(slot) = assigned.iter_mut().find(|(k, _)| *k == j) {
                    if slot.1 != v {
                        slot.1 = 0.0;
                    }
                } else {
                    assigned.push((j, v));
                }
            }
            for (j, v) in assigned {
                values[j] = v;
                done[j] = true;
            }
        }
    }
}
