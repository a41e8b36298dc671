use crate::assembly::{BlockField, DiscreteOperator};
use crate::geometry::SurfaceKind;
use crate::linalg::{pcg, TripletBuilder};
use crate::Result;

/// Variational recovery of the conormal flux jump across the interface.
///
/// For every free interface node with hat function `φ` the residual
/// `t_bulk(u, φ) − (f_Ω, φ)` is computed and the resulting functional is
/// converted to nodal values with the interface `L²` mass matrix. The
/// value is the net conormal flux leaving the interface into both sides,
/// `ν·μ∇u|₋ − ν·μ∇u|₊` for any unit normal `ν` pointing from the `−` side
/// to the `+` side, so it does not depend on the orientation of the
/// interface edges. The tent `u = min(y, 1 − y)` across `y = 1/2` gives `+2`.
///
/// `f` carries the bulk source as nodal values; `None` means no source.
/// Returns one value per free interface node, in the order of the `Σ`
/// block.
pub fn recover_interface_flux(
    op: &DiscreteOperator,
    u: &[f64],
    f: Option<&BlockField>,
) -> Result<Vec<f64>> {
    let dofs = op.dofs();
    let nodes = dofs.surface_bulk_dofs(SurfaceKind::Interface)?;
    if nodes.is_empty() {
        return Ok(Vec::new());
    }
    let mut residual = op.t_bulk.mul_vec(u);
    if let Some(f) = f {
        f.validate(dofs)?;
        let load = op.l2_bulk.mul_vec(&f.bulk);
        residual.iter_mut().zip(load).for_each(|(r, l)| *r -= l);
    }
    let rhs: Vec<f64> = nodes.iter().map(|&b| residual[b]).collect();

    let mut position = vec![None; dofs.n_bulk()];
    for (k, &b) in nodes.iter().enumerate() {
        position[b] = Some(k);
    }
    let mut builder = TripletBuilder::new(nodes.len(), nodes.len());
    for &b in &nodes {
        for (c, v) in op.l2_sigma.row(b) {
            if let Some(l) = position[c] {
                builder.push(position[b].unwrap(), l, v);
            }
        }
    }
    let mass = builder.build();
    Ok(pcg(&mass, &rhs, None, 1e-14, 10 * nodes.len() + 100)?.x)
}
