//! CSV sinks. Floats use Rust's shortest round-trip formatting.

use std::fs;
use std::io::Write;
use std::path::Path;

use ncmac_core::gradcheck::FdReport;
use ncmac_core::optimizer::TraceRow;
use ncmac_core::sim::SerCurve;

use crate::CliError;

/// Shortest round-trip text; exponent form outside `[1e-4, 1e15)`.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-4..1e15).contains(&a) || !a.is_finite() {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}

pub fn ser_header(k: usize) -> Vec<String> {
    let mut h = vec!["snr_db".to_string(), "blocks".to_string()];
    h.extend((1..=k).map(|u| format!("errors_{u}")));
    h.extend((1..=k).map(|u| format!("ser_{u}")));
    h.push("avg_ser".into());
    h
}

pub fn write_ser<W: Write>(out: W, curve: &SerCurve, k: usize) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(ser_header(k))?;
    for p in &curve.points {
        let mut rec = vec![fmt_f64(p.snr_db), p.blocks.to_string()];
        rec.extend(p.errors.iter().map(u64::to_string));
        rec.extend(p.ser.iter().copied().map(fmt_f64));
        rec.push(fmt_f64(p.avg_ser));
        w.write_record(rec)?;
    }
    w.flush().map_err(|e| CliError::io(Path::new("<csv>"), e))
}

pub fn write_trace<W: Write>(out: W, rows: &[TraceRow]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["iteration", "cost", "h", "gradnorm"])?;
    for r in rows {
        w.write_record([
            r.iteration.to_string(),
            fmt_f64(r.cost),
            fmt_f64(r.step),
            fmt_f64(r.grad_norm),
        ])?;
    }
    w.flush().map_err(|e| CliError::io(Path::new("<csv>"), e))
}

pub fn write_gradcheck<W: Write>(out: W, report: &FdReport) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["user", "index", "max_abs", "max_rel", "proj_max_abs", "proj_max_rel"])?;
    for (a, p) in report.ambient.iter().zip(&report.projected) {
        w.write_record([
            (a.user + 1).to_string(),
            (a.index + 1).to_string(),
            fmt_f64(a.max_abs),
            fmt_f64(a.max_rel),
            fmt_f64(p.max_abs),
            fmt_f64(p.max_rel),
        ])?;
    }
    w.flush().map_err(|e| CliError::io(Path::new("<csv>"), e))
}

/// One `x,y` curve file.
pub fn write_curve(path: &Path, points: impl IntoIterator<Item = (f64, f64)>) -> Result<(), CliError> {
    let file = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(["x", "y"])?;
    for (x, y) in points {
        w.write_record([fmt_f64(x), fmt_f64(y)])?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Writes into `path`, creating the file.
pub fn to_file<F>(path: &Path, write: F) -> Result<(), CliError>
where
    F: FnOnce(fs::File) -> Result<(), CliError>,
{
    let file = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    write(file)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ncmac_core::sim::SerPoint;

    #[test]
    fn ser_columns() {
        let curve = SerCurve {
            points: vec![SerPoint {
                snr_db: 16.0,
                blocks: 4,
                errors: vec![1, 0],
                ser: vec![0.25, 0.0],
                avg_ser: 0.125,
            }],
        };
        let mut buf = Vec::new();
        write_ser(&mut buf, &curve, 2).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "snr_db,blocks,errors_1,errors_2,ser_1,ser_2,avg_ser\n16,4,1,0,0.25,0,0.125\n"
        );
    }

    #[test]
    fn trace_columns() {
        let rows = [TraceRow {
            iteration: 0,
            cost: 1.5,
            step: 0.0,
            grad_norm: 2.0,
        }];
        let mut buf = Vec::new();
        write_trace(&mut buf, &rows).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "iteration,cost,h,gradnorm\n0,1.5,0,2\n");
    }
}
