//! Checkpoints: magic "MLABCK1", t as f64, step index as u64 (both
//! little-endian), then the u and v field snapshots in the mesh format.

use std::io::{Read, Write};

use super::SimState;
use crate::helmholtz::HelmholtzSolver;
use crate::mesh::{read_snapshot, write_snapshot, ScalarField};
use crate::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 7] = b"MLABCK1";

pub fn write_checkpoint<W: Write>(w: &mut W, h: &HelmholtzSolver, state: &SimState) -> Result<()> {
    w.write_all(CHECKPOINT_MAGIC)?;
    w.write_all(&state.t.to_le_bytes())?;
    w.write_all(&state.step.to_le_bytes())?;
    write_snapshot(w, h.grid(), &state.u)?;
    write_snapshot(w, h.grid(), &state.v)?;
    Ok(())
}

/// Loads a checkpoint written on the grid of `h`.
pub fn read_checkpoint<R: Read>(r: &mut R, h: &HelmholtzSolver) -> Result<SimState> {
    let mut magic = [0u8; 7];
    r.read_exact(&mut magic)?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(Error::Format("bad checkpoint magic".into()));
    }
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    let t = f64::from_le_bytes(b);
    r.read_exact(&mut b)?;
    let step = u64::from_le_bytes(b);
    let mut field = |name: &str| -> Result<ScalarField> {
        let (header, values) = read_snapshot(r)?;
        if !header.matches(h.grid()) {
            return Err(Error::Format(format!("checkpoint {name} was written on a different grid")));
        }
        ScalarField::new(h.grid(), values)
    };
    let u = field("u")?;
    let v = field("v")?;
    SimState::from_parts(h, t, step, u, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_grid, GridSpec};
    use crate::motility::{Family, Motility};
    use crate::stepper::{init_state, run, run_from, StepperConfig};
    use std::sync::Arc;

    #[test]
    fn resume_matches_uninterrupted_run() {
        let h = HelmholtzSolver::new(Arc::new(build_grid(&GridSpec::interval(2.0, 24)).unwrap())).unwrap();
        let m = Motility::new(Family::Power { k: 1.0 }, 0.1).unwrap();
        let u = ScalarField::from_fn(h.grid(), |x| 1.0 + (-(x[0] - 0.5).powi(2) * 20.0).exp());
        let full = run(&h, &u, &m, &StepperConfig::new(0.01, 0.2), &mut []).unwrap();

        let half = run(&h, &u, &m, &StepperConfig::new(0.01, 0.1), &mut []).unwrap();
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &h, &half.state).unwrap();
        let loaded = read_checkpoint(&mut buf.as_slice(), &h).unwrap();
        assert_eq!(loaded, half.state);
        let resumed = run_from(&h, loaded, &m, &StepperConfig::new(0.01, 0.2), &mut []).unwrap();
        assert_eq!(resumed.state.step, full.state.step);
        assert!(resumed.state.u.max_abs_diff(&full.state.u).unwrap() < 1e-13);
    }

    #[test]
    fn rejects_foreign_grid_and_bad_magic() {
        let h1 = HelmholtzSolver::new(Arc::new(build_grid(&GridSpec::interval(1.0, 8)).unwrap())).unwrap();
        let h2 = HelmholtzSolver::new(Arc::new(build_grid(&GridSpec::interval(1.0, 9)).unwrap())).unwrap();
        let s = init_state(&h1, &ScalarField::constant(h1.grid(), 1.0)).unwrap();
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &h1, &s).unwrap();
        assert!(matches!(read_checkpoint(&mut buf.as_slice(), &h2), Err(Error::Format(_))));
        buf[0] = b'X';
        assert!(matches!(read_checkpoint(&mut buf.as_slice(), &h1), Err(Error::Format(_))));
    }
}
