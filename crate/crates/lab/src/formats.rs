//! Text and binary artifact formats. Every writer renders into a `String`
//! or `Vec<u8>` so digests can be taken before anything touches the disk.
//! Floats are written with Rust's shortest round-trip formatting, so
//! parsing a written value gives back the same bits.

use std::fmt::Write as _;

use meanfield_core::metrics::GapReport;
use meanfield_core::observables::Observable;
use meanfield_core::particles::ParticleState;
use meanfield_core::pde::ConservationLedger;
use meanfield_core::rearrange::ModulusRow;
use meanfield_core::{FiberedDensity, LabeledTree, ScalingReport, SparseWeights};

#[derive(Debug, thiserror::Error, PartialEq)]
#[error("line {line}: {message}")]
pub struct FormatError {
    pub line: usize,
    pub message: String,
}

fn ferr<T>(line: usize, message: impl Into<String>) -> Result<T, FormatError> {
    Err(FormatError {
        line,
        message: message.into(),
    })
}

/// `N <n>` header, then one `i j w` line per stored entry (1-based).
pub fn write_edge_list(w: &SparseWeights) -> String {
    let mut s = format!("N {}\n", w.n_agents());
    for (i, j, v) in w.entries() {
        let _ = writeln!(s, "{} {} {:?}", i + 1, j + 1, v);
    }
    s
}

pub fn read_edge_list(text: &str) -> Result<SparseWeights, FormatError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (no, header) = match lines.next() {
        Some(h) => h,
        None => return ferr(1, "missing `N <n_agents>` header"),
    };
    let n: usize = match header.split_whitespace().collect::<Vec<_>>()[..] {
        ["N", n] => match n.parse() {
            Ok(n) => n,
            Err(_) => return ferr(no, "agent count is not an integer"),
        },
        _ => return ferr(no, "expected `N <n_agents>`"),
    };
    let mut triplets = Vec::new();
    for (no, line) in lines {
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != 3 {
            return ferr(no, "expected `i j w`");
        }
        let i: usize = parts[0].parse().or_else(|_| ferr(no, "row index is not an integer"))?;
        let j: usize = parts[1].parse().or_else(|_| ferr(no, "column index is not an integer"))?;
        let v: f64 = parts[2].parse().or_else(|_| ferr(no, "weight is not a number"))?;
        if i == 0 || j == 0 || i > n || j > n {
            return ferr(no, format!("index out of range 1..={n}"));
        }
        triplets.push((i - 1, j - 1, v));
    }
    SparseWeights::from_triplets(n, triplets).or_else(|e| ferr(0, e.to_string()))
}

pub fn read_tree(text: &str) -> Result<LabeledTree, FormatError> {
    let parts: Vec<&str> = text.trim().split(',').map(str::trim).collect();
    if parts.first() != Some(&"-") {
        return ferr(1, "tree text starts with `-` for the root");
    }
    let parents: Vec<usize> = parts[1..]
        .iter()
        .map(|p| p.parse::<usize>().or_else(|_| ferr(1, format!("bad parent `{p}`"))))
        .collect::<Result<_, _>>()?;
    LabeledTree::from_parents(&parents).or_else(|e| ferr(1, e.to_string()))
}

pub fn write_scaling(r: &ScalingReport) -> String {
    format!(
        "max_row_abs_sum,max_col_abs_sum,max_entry_abs,density\n{:?},{:?},{:?},{:?}\n",
        r.max_row_abs_sum, r.max_col_abs_sum, r.max_entry_abs, r.density
    )
}

/// `t,agent,coord0..coord{d-1}`, agents 1-based.
pub fn write_trajectory(states: &[ParticleState]) -> String {
    let d = states.first().map_or(1, ParticleState::dim);
    let mut s = String::from("t,agent");
    for k in 0..d {
        let _ = write!(s, ",coord{k}");
    }
    s.push('\n');
    for x in states {
        for i in 0..x.n_agents() {
            let _ = write!(s, "{:?},{}", x.time, i + 1);
            for v in x.position(i) {
                let _ = write!(s, ",{v:?}");
            }
            s.push('\n');
        }
    }
    s
}

/// Parses a trajectory back into `(t, agent, coordinates)` rows.
pub fn read_trajectory(text: &str) -> Result<Vec<(f64, usize, Vec<f64>)>, FormatError> {
    let mut lines = text.lines().enumerate();
    let header = lines.next().map(|(_, h)| h).unwrap_or("");
    if !header.starts_with("t,agent") {
        return ferr(1, "expected `t,agent,coord0..` header");
    }
    let d = header.split(',').count() - 2;
    let mut rows = Vec::new();
    for (k, line) in lines {
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != d + 2 {
            return ferr(k + 1, "wrong column count");
        }
        let t: f64 = parts[0].parse().or_else(|_| ferr(k + 1, "bad time"))?;
        let agent: usize = parts[1].parse().or_else(|_| ferr(k + 1, "bad agent"))?;
        let coords = parts[2..]
            .iter()
            .map(|p| p.parse::<f64>().or_else(|_| ferr(k + 1, "bad coordinate")))
            .collect::<Result<_, _>>()?;
        rows.push((t, agent, coords));
    }
    Ok(rows)
}

/// `t,fiber,cell,x_center,value`, fibers and cells 0-based.
pub fn write_density_csv(snapshots: &[FiberedDensity]) -> String {
    let mut s = String::from("t,fiber,cell,x_center,value\n");
    for f in snapshots {
        let grid = f.grid();
        for i in 0..f.n_fibers() {
            for (c, v) in f.fiber(i).iter().enumerate() {
                let _ = writeln!(s, "{:?},{},{},{:?},{:?}", f.time, i, c, grid.center(c), v);
            }
        }
    }
    s
}

pub const DENSITY_MAGIC: [u8; 4] = *b"MFDN";
pub const OBSERVABLE_MAGIC: [u8; 4] = *b"MFOB";
pub const FORMAT_VERSION: u32 = 1;

/// One density snapshot: 16-byte header (magic, version, n_fibers, G as
/// little-endian u32), then `t` as f64 and the values column-major (the
/// fiber index runs fastest), all little-endian.
pub fn write_density_bin(f: &FiberedDensity) -> Vec<u8> {
    let n = f.n_fibers();
    let g = f.grid().n_cells;
    let mut out = Vec::with_capacity(24 + 8 * n * g);
    out.extend_from_slice(&DENSITY_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(n as u32).to_le_bytes());
    out.extend_from_slice(&(g as u32).to_le_bytes());
    out.extend_from_slice(&f.time.to_le_bytes());
    for c in 0..g {
        for i in 0..n {
            out.extend_from_slice(&f.fiber(i)[c].to_le_bytes());
        }
    }
    out
}

/// Decodes [`write_density_bin`] output into `(t, n_fibers, G, values)`
/// with values fiber-major.
pub fn read_density_bin(bytes: &[u8]) -> Result<(f64, usize, usize, Vec<f64>), FormatError> {
    let (n, g, body) = read_header(bytes, DENSITY_MAGIC)?;
    let g = g as usize;
    let n = n as usize;
    if body.len() != 8 + 8 * n * g {
        return ferr(0, "payload length does not match the header");
    }
    let t = f64::from_le_bytes(body[..8].try_into().unwrap());
    let mut values = vec![0.0; n * g];
    for (k, chunk) in body[8..].chunks_exact(8).enumerate() {
        let (c, i) = (k / n, k % n);
        values[i * g + c] = f64::from_le_bytes(chunk.try_into().unwrap());
    }
    Ok((t, n, g, values))
}

fn read_header(bytes: &[u8], magic: [u8; 4]) -> Result<(u32, u32, &[u8]), FormatError> {
    if bytes.len() < 16 || bytes[..4] != magic {
        return ferr(0, "bad magic");
    }
    let word = |k: usize| u32::from_le_bytes(bytes[k..k + 4].try_into().unwrap());
    if word(4) != FORMAT_VERSION {
        return ferr(0, format!("unsupported version {}", word(4)));
    }
    Ok((word(8), word(12), &bytes[16..]))
}

/// Order 1 or 2: `x1[,x2],value` with cell centers.
pub fn write_observable_csv(o: &Observable) -> String {
    let m = o.order();
    assert!(m <= 2, "CSV export is for order <= 2");
    let g = o.grid.n_cells;
    let mut s = String::from(if m == 1 { "x1,value\n" } else { "x1,x2,value\n" });
    for (idx, v) in o.values.iter().enumerate() {
        if m == 1 {
            let _ = writeln!(s, "{:?},{:?}", o.grid.center(idx), v);
        } else {
            let _ = writeln!(s, "{:?},{:?},{:?}", o.grid.center(idx / g), o.grid.center(idx % g), v);
        }
    }
    s
}

/// Lattice dump: 16-byte header (magic, version, order, G as little-endian
/// u32) followed by the `G^order` values with `x1` most significant.
pub fn write_observable_bin(o: &Observable) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + 8 * o.values.len());
    out.extend_from_slice(&OBSERVABLE_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(o.order() as u32).to_le_bytes());
    out.extend_from_slice(&(o.grid.n_cells as u32).to_le_bytes());
    for v in &o.values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Decodes a lattice dump into `(order, G, values)`.
pub fn read_observable_bin(bytes: &[u8]) -> Result<(usize, usize, Vec<f64>), FormatError> {
    let (m, g, body) = read_header(bytes, OBSERVABLE_MAGIC)?;
    let len = (g as usize).checked_pow(m).unwrap_or(usize::MAX);
    if body.len() != 8 * len {
        return ferr(0, "payload length does not match the header");
    }
    let values = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Ok((m as usize, g as usize, values))
}

/// One 0-based index per line.
pub fn write_permutation(perm: &[usize]) -> String {
    let mut s = String::with_capacity(perm.len() * 6);
    for p in perm {
        let _ = writeln!(s, "{p}");
    }
    s
}

pub fn read_permutation(text: &str) -> Result<Vec<usize>, FormatError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(k, l)| l.trim().parse().or_else(|_| ferr(k + 1, "not an index")))
        .collect()
}

pub fn write_modulus(rows: &[ModulusRow]) -> String {
    let mut s = String::from("shift,tau,modulus\n");
    for r in rows {
        let _ = writeln!(s, "{},{:?},{:?}", r.shift, r.tau, r.value);
    }
    s
}

/// `t,gap,bound,stderr,seeds`.
pub fn write_gap_reports(reports: &[GapReport]) -> String {
    let mut s = String::from("t,gap,bound,stderr,seeds\n");
    for r in reports {
        let _ = writeln!(s, "{:?},{:?},{:?},{:?},{}", r.t, r.gap, r.bound, r.stderr, r.seeds);
    }
    s
}

pub fn read_gap_reports(text: &str) -> Result<Vec<(f64, f64, f64, f64, usize)>, FormatError> {
    let mut out = Vec::new();
    for (k, line) in text.lines().enumerate().skip(1) {
        let p: Vec<&str> = line.split(',').collect();
        if p.len() != 5 {
            return ferr(k + 1, "expected 5 columns");
        }
        let num = |s: &str| s.parse::<f64>().or_else(|_| ferr(k + 1, "bad number"));
        out.push((
            num(p[0])?,
            num(p[1])?,
            num(p[2])?,
            num(p[3])?,
            p[4].parse().or_else(|_| ferr(k + 1, "bad seed count"))?,
        ));
    }
    Ok(out)
}

pub fn write_ledger(l: &ConservationLedger) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "steps = {}", l.steps);
    let _ = writeln!(s, "max_mass_drift = {:?}", l.max_mass_drift);
    let _ = writeln!(s, "total_leakage = {:?}", l.total_leakage());
    let _ = writeln!(s, "clamped = {:?}", l.clamped);
    let _ = writeln!(s, "max_speed = {:?}", l.max_speed);
    let _ = writeln!(s, "speed_bound_violations = {}", l.speed_bound_violations);
    s
}
