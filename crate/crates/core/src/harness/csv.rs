use std::io::{self, Write};

use super::{PointResult, TransientRow};

pub const SWEEP_HEADER: &str =
    "distance_cm,method,scheme,ber,throughput_bps,zero_high,multi_high,theta_final";
pub const TRANSIENT_HEADER: &str = "time_s,distance_cm,window_ber,theta_v";

/// One row per point, header first.
pub fn write_sweep_csv<W: Write>(mut w: W, rows: &[PointResult]) -> io::Result<()> {
    writeln!(w, "{SWEEP_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            r.distance,
            r.method,
            r.scheme,
            r.ber,
            r.throughput,
            r.zero_high,
            r.multi_high,
            r.theta_final
        )?;
    }
    w.flush()
}

pub fn write_transient_csv<W: Write>(mut w: W, rows: &[TransientRow]) -> io::Result<()> {
    writeln!(w, "{TRANSIENT_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{}",
            r.time_s, r.distance_cm, r.window_ber, r.theta_v
        )?;
    }
    w.flush()
}
