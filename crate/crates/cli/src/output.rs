//! CSV and JSON emission of run records.

use std::io::{self, Write};

use crate::run::Record;

/// Shortest decimal string that parses back to the same `f64`.
pub fn format_number(x: f64) -> String {
    format!("{x:?}")
}

fn format_opt(x: Option<f64>) -> String {
    x.map(format_number).unwrap_or_default()
}

const USER_COLUMNS: [&str; 5] = ["a", "f_u_Hz", "f_s_Hz", "T_off_s", "P_b_W"];

/// Sweep labels joined with `;` when a point has two coordinates.
fn sweep_cells(r: &Record) -> (String, String) {
    let params: Vec<&str> = r.sweep.iter().map(|c| c.param.as_str()).collect();
    let values: Vec<String> = r.sweep.iter().map(|c| format_number(c.value)).collect();
    (params.join(";"), values.join(";"))
}

/// Fixed leading columns, then one group of user columns per user (`a_0, …, P_b_W_0, a_1, …`).
///
/// Rows of records with fewer users, or without a solution, leave the
/// missing cells empty.
pub fn write_csv(records: &[Record], out: &mut impl Write) -> io::Result<()> {
    let width = records.iter().map(|r| r.users.len()).max().unwrap_or(0);
    let mut header: Vec<String> =
        ["sweep_param", "sweep_value", "scheme", "status", "E_total_J", "E_wpt_J", "E_comp_J", "E_cool_J"]
            .iter()
            .map(|s| s.to_string())
            .collect();
    for i in 0..width {
        header.extend(USER_COLUMNS.iter().map(|c| format!("{c}_{i}")));
    }
    writeln!(out, "{}", header.join(","))?;
    for r in records {
        let (param, value) = sweep_cells(r);
        let e = r.energy;
        let mut row = vec![
            param,
            value,
            r.scheme.clone(),
            r.status.as_str().to_string(),
            format_opt(e.map(|e| e.total)),
            format_opt(e.map(|e| e.wpt)),
            format_opt(e.map(|e| e.comp)),
            format_opt(e.map(|e| e.cool)),
        ];
        for i in 0..width {
            match r.users.get(i) {
                Some(u) => row.extend([u.a, u.f_u, u.f_s, u.t_off, u.p_b].map(format_number)),
                None => row.extend(std::iter::repeat_n(String::new(), USER_COLUMNS.len())),
            }
        }
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

/// Dual-iteration traces, one row per iteration, keyed by record index.
pub fn write_trace_csv(records: &[Record], out: &mut impl Write) -> io::Result<()> {
    writeln!(out, "record,sweep_value,scheme,solve,iteration,dual_value,gap,subgradient_norm,residual")?;
    for (k, r) in records.iter().enumerate() {
        let (_, value) = sweep_cells(r);
        for t in &r.traces {
            writeln!(
                out,
                "{k},{value},{},{},{},{},{},{},{}",
                r.scheme,
                t.solve,
                t.iteration,
                format_opt(t.dual_value),
                format_opt(t.gap),
                format_opt(t.subgradient_norm),
                format_opt(t.residual)
            )?;
        }
    }
    Ok(())
}

pub fn write_json(records: &[Record], out: &mut impl Write) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut *out, records).map_err(io::Error::other)?;
    writeln!(out)
}

pub fn parse_json(text: &str) -> serde_json::Result<Vec<Record>> {
    serde_json::from_str(text)
}
