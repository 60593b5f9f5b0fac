//! Trace records, CSV serialization and the run summary.
//!
//! Traces are written with a fixed column order and 9 significant digits so
//! that identical runs produce byte-identical files.

use std::fmt::Write as _;

use crate::control::ControlCommand;
use crate::motor::N_TEETH;

/// Sticky per-record event flags.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TraceFlags {
    /// A controller output hit its limit during the record interval.
    pub saturation: bool,
    /// The rotor reached the clamp radius; the run ends at this record.
    pub touchdown: bool,
    /// Some tooth gap was clamped at the floor during the interval.
    pub gap_clamp: bool,
}

/// One row per control period.
#[derive(Debug, Clone)]
pub struct TraceRecord {
    /// s
    pub t: f64,
    /// True rotor position, m.
    pub x: f64,
    pub y: f64,
    /// Calibrated estimates, m.
    pub x_hat: f64,
    pub y_hat: f64,
    /// Demodulator outputs before calibration, V.
    pub x_raw: f64,
    pub y_raw: f64,
    /// A
    pub currents: [f64; N_TEETH],
    /// V
    pub voltages: [f64; N_TEETH],
    /// N
    pub fx: f64,
    pub fy: f64,
    pub command: ControlCommand,
    pub flags: TraceFlags,
}

/// Header matching [`record_to_csv_row`].
pub fn csv_header() -> String {
    let mut h = String::from("t,x,y,x_hat,y_hat,x_raw,y_raw");
    for k in 1..=N_TEETH {
        let _ = write!(h, ",i_{k}");
    }
    for k in 1..=N_TEETH {
        let _ = write!(h, ",v_{k}");
    }
    h.push_str(",fx,fy,e_x,e_y,u_x,u_y,u_d,u_q,i_u,i_v,i_w");
    h.push_str(",flag_saturation,flag_touchdown,flag_gap_clamp");
    h
}

fn push_field(row: &mut String, value: f64) {
    let _ = write!(row, ",{value:.8e}");
}

/// Serialize one record: floats at 9 significant digits, flags as 0/1.
pub fn record_to_csv_row(r: &TraceRecord) -> String {
    let mut row = format!("{:.8e}", r.t);
    for v in [r.x, r.y, r.x_hat, r.y_hat, r.x_raw, r.y_raw] {
        push_field(&mut row, v);
    }
    for v in r.currents {
        push_field(&mut row, v);
    }
    for v in r.voltages {
        push_field(&mut row, v);
    }
    for v in [
        r.fx,
        r.fy,
        r.command.e_x,
        r.command.e_y,
        r.command.u_x,
        r.command.u_y,
        r.command.u_d,
        r.command.u_q,
        r.command.i_u,
        r.command.i_v,
        r.command.i_w,
    ] {
        push_field(&mut row, v);
    }
    let _ = write!(
        row,
        ",{},{},{}",
        r.flags.saturation as u8, r.flags.touchdown as u8, r.flags.gap_clamp as u8
    );
    row
}

/// Full CSV document for a trace.
pub fn trace_to_csv(records: &[TraceRecord]) -> String {
    let mut out = csv_header();
    out.push('\n');
    for r in records {
        out.push_str(&record_to_csv_row(r));
        out.push('\n');
    }
    out
}

/// Aggregate figures of one time-domain run.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub scenario: String,
    pub feedback: String,
    /// s, simulated time actually covered (shorter than requested on touchdown)
    pub duration: f64,
    pub records: usize,
    /// s, first time after which both |x| and |y| stay below the threshold;
    /// infinity when the run never settles.
    pub settling_time: f64,
    /// m, threshold used for the settling test
    pub settle_threshold: f64,
    /// m, largest excursion past center opposite the initial offset
    pub overshoot: f64,
    /// m, RMS of (x_hat - x, y_hat - y) after the demodulation window filled
    pub estimation_error_rms: f64,
    pub touchdown: bool,
    pub final_x: f64,
    pub final_y: f64,
    pub max_abs_x: f64,
    pub max_abs_y: f64,
}

impl RunSummary {
    /// Flat `key = value` block.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "scenario = {}", self.scenario);
        let _ = writeln!(s, "feedback = {}", self.feedback);
        let _ = writeln!(s, "duration_s = {}", self.duration);
        let _ = writeln!(s, "records = {}", self.records);
        let _ = writeln!(s, "settling_time_s = {}", self.settling_time);
        let _ = writeln!(s, "settle_threshold_m = {}", self.settle_threshold);
        let _ = writeln!(s, "overshoot_m = {}", self.overshoot);
        let _ = writeln!(s, "estimation_error_rms_m = {}", self.estimation_error_rms);
        let _ = writeln!(s, "touchdown = {}", self.touchdown);
        let _ = writeln!(s, "final_x_m = {}", self.final_x);
        let _ = writeln!(s, "final_y_m = {}", self.final_y);
        let _ = writeln!(s, "max_abs_x_m = {}", self.max_abs_x);
        let _ = writeln!(s, "max_abs_y_m = {}", self.max_abs_y);
        s
    }
}

/// One row of a static-sweep table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    /// Imposed rotor displacement on the swept axis, m.
    pub position: f64,
    /// Raw demodulated outputs at that position, V.
    pub x_raw: f64,
    pub y_raw: f64,
}

/// CSV document for a sweep table (`x_true,x_hat_raw,y_hat_raw`).
pub fn sweep_to_csv(points: &[SweepPoint]) -> String {
    let mut out = String::from("x_true,x_hat_raw,y_hat_raw\n");
    for p in points {
        let _ = writeln!(out, "{:.8e},{:.8e},{:.8e}", p.position, p.x_raw, p.y_raw);
    }
    out
}
