//! CSV and JSON output for eigenpairs.

use serde::Serialize;
use std::io::Write;

use super::eigen::TraceEigenpair;
use crate::geometry::TriMesh;
use crate::measures::MeasureId;
use crate::{Error, Result};

/// `node,x,y,u` with full precision.
pub fn write_eigenpair_csv<W: Write>(pair: &TraceEigenpair, mesh: &TriMesh, mut w: W) -> Result<()> {
    if pair.u.len() != mesh.num_nodes() {
        return Err(Error::Shape { expected: mesh.num_nodes(), got: pair.u.len() });
    }
    writeln!(w, "node,x,y,u")?;
    for (i, (p, u)) in mesh.nodes.iter().zip(&pair.u).enumerate() {
        writeln!(w, "{i},{:.12e},{:.12e},{:.12e}", p[0], p[1], u)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct Summary<'a> {
    lambda: f64,
    p: f64,
    alpha: Option<f64>,
    measure: &'a MeasureId,
    iterations: usize,
    residual: f64,
}

pub fn write_eigenpair_summary<W: Write>(pair: &TraceEigenpair, alpha: Option<f64>, w: W) -> Result<()> {
    let s = Summary {
        lambda: pair.lambda,
        p: pair.p,
        alpha,
        measure: &pair.measure_id,
        iterations: pair.iterations,
        residual: pair.residual,
    };
    serde_json::to_writer_pretty(w, &s)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_base_domain, generate_mesh, ChartFn, DomainKind};

    #[test]
    fn csv_has_one_line_per_node() {
        let d = build_base_domain(DomainKind::SquareTopChart, ChartFn::flat(1.0), 0.5).unwrap();
        let m = generate_mesh(&d, 0.5).unwrap();
        let pair = TraceEigenpair::new_for_tests(vec![0.5; m.num_nodes()]);
        let mut buf = Vec::new();
        write_eigenpair_csv(&pair, &m, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), m.num_nodes() + 1);
        assert!(text.starts_with("node,x,y,u\n0,"));
        let mut js = Vec::new();
        write_eigenpair_summary(&pair, Some(0.3), &mut js).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&js).unwrap();
        assert_eq!(v["alpha"], 0.3);
        assert_eq!(v["measure"]["kind"], "surface");
    }
}
