//! CSV renderings of conservation logs and error tables. Floats use the
//! shortest round-trip form; undefined relative errors are written as `nan`.

use std::fmt::Write as _;

use nlsfem::convergence::EocTable;
use nlsfem::stepper::ConservationLog;

pub fn conservation_csv(log: &ConservationLog) -> String {
    let mut out = String::new();
    writeln!(out, "{}", ConservationLog::CSV_HEADER).unwrap();
    for r in &log.rows {
        writeln!(out, "{},{:?},{:?},{:?},{},{:?}", r.step, r.time, r.mass, r.energy, r.fp_iters, r.residual).unwrap();
    }
    out
}

pub fn eoc_csv(table: &EocTable) -> String {
    let mut out = String::new();
    writeln!(out, "{}", EocTable::CSV_HEADER).unwrap();
    for r in &table.rows {
        write!(out, "{:?},{:?}", r.h_rel, r.tau_rel).unwrap();
        for e in r.errors.as_array() {
            match e {
                Some(v) => write!(out, ",{v:?}").unwrap(),
                None => out.push_str(",nan"),
            }
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use nlsfem::convergence::{EocRow, RelativeErrors};
    use nlsfem::stepper::LogRow;

    #[test]
    fn headers_and_rows() {
        let log = ConservationLog {
            rows: vec![LogRow { step: 0, time: 0.0, mass: 1.0, energy: 2.5, fp_iters: 0, residual: 0.0 }],
        };
        assert_eq!(conservation_csv(&log), "step,time,mass,energy,fp_iters,residual\n0,0.0,1.0,2.5,0,0.0\n");

        let row = EocRow {
            h_rel: 0.25,
            tau_rel: 0.25,
            errors: RelativeErrors { re_l2: Some(0.5), im_l2: None, re_h1: Some(1e-3), im_h1: Some(2.0) },
        };
        let t = EocTable::new(vec![row], true);
        assert_eq!(
            eoc_csv(&t),
            "h_rel,tau_rel,err_re_l2,err_im_l2,err_re_h1,err_im_h1\n0.25,0.25,0.5,nan,0.001,2.0\n"
        );
    }
}
