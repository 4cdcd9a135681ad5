//! CSV and JSON artifacts. Floats are written as `{:.16e}` so files round
//! trip exactly and are byte-identical across runs.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::dynamics::{PropagationResult, WaveFunction};
use crate::error::{Error, Result};
use crate::mapping::{PhysicalSchedule, ScheduleFixed};
use crate::model2l::{ControlCurve, CurveKind};
use crate::spectral::{EigenSolution, SpatialGrid};

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Sidecar path: same stem, `.json` extension.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

fn writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    Ok(csv::WriterBuilder::new().from_writer(BufWriter::new(File::create(path)?)))
}

fn write_rows<I>(path: &Path, header: &[String], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = writer(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

fn read_columns(path: &Path, expected: &[&str]) -> Result<Vec<Vec<String>>> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header.len() < expected.len() || header.iter().zip(expected).any(|(h, e)| h != e) {
        return Err(Error::Parse(format!("{}: expected header {:?}, found {:?}", path.display(), expected, header)));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        rows.push(rec?.iter().map(str::to_string).collect());
    }
    Ok(rows)
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim().parse().map_err(|_| Error::Parse(format!("not a number: {s:?}")))
}

fn parse_bool(s: &str) -> Result<bool> {
    match s.trim() {
        "true" | "1" => Ok(true),
        "false" | "0" => Ok(false),
        _ => Err(Error::Parse(format!("not a boolean: {s:?}"))),
    }
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    f.flush()?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(std::io::BufReader::new(File::open(path)?))?)
}

/// `t,delta,lambda`.
pub fn write_curve_csv(path: &Path, curve: &ControlCurve) -> Result<()> {
    let header = ["t", "delta", "lambda"].map(String::from);
    let rows = (0..curve.len()).map(|i| vec![fmt_f64(curve.times[i]), fmt_f64(curve.delta[i]), fmt_f64(curve.lambda[i])]);
    write_rows(path, &header, rows)
}

pub fn read_curve_csv(path: &Path, kind: CurveKind) -> Result<ControlCurve> {
    let rows = read_columns(path, &["t", "delta", "lambda"])?;
    let mut cols = [Vec::new(), Vec::new(), Vec::new()];
    for r in &rows {
        for (c, v) in cols.iter_mut().zip(r) {
            c.push(parse_f64(v)?);
        }
    }
    let [t, d, l] = cols;
    ControlCurve::new(t, d, l, kind)
}

/// Fixed parameters stored next to a schedule CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleHeader {
    pub mass: f64,
    pub d_l: f64,
    pub dx_shift: f64,
    pub grid: SpatialGrid,
}

/// `t,V0,omega,residual,saturated`, plus a `dx` column when the
/// displacement moves, and the fixed parameters in a JSON sidecar.
pub fn write_schedule(path: &Path, s: &PhysicalSchedule) -> Result<()> {
    let mut header: Vec<String> = ["t", "V0", "omega", "residual", "saturated"].map(String::from).to_vec();
    if s.dx_ramp.is_some() {
        header.push("dx".into());
    }
    let rows = (0..s.len()).map(|i| {
        let mut r = vec![
            fmt_f64(s.times[i]),
            fmt_f64(s.v0[i]),
            fmt_f64(s.omega[i]),
            fmt_f64(s.residuals[i]),
            s.saturated[i].to_string(),
        ];
        if let Some(d) = &s.dx_ramp {
            r.push(fmt_f64(d[i]));
        }
        r
    });
    write_rows(path, &header, rows)?;
    let f = s.fixed;
    write_json(&sidecar_path(path), &ScheduleHeader { mass: f.mass, d_l: f.d_l, dx_shift: f.dx_shift, grid: f.grid })
}

pub fn read_schedule(path: &Path) -> Result<PhysicalSchedule> {
    let rows = read_columns(path, &["t", "V0", "omega", "residual", "saturated"])?;
    let header: ScheduleHeader = read_json(&sidecar_path(path))?;
    let has_dx = rows.first().is_some_and(|r| r.len() > 5);
    let mut s = PhysicalSchedule {
        times: Vec::with_capacity(rows.len()),
        v0: Vec::new(),
        omega: Vec::new(),
        residuals: Vec::new(),
        saturated: Vec::new(),
        fixed: ScheduleFixed { mass: header.mass, d_l: header.d_l, dx_shift: header.dx_shift, grid: header.grid },
        dx_ramp: has_dx.then(Vec::new),
    };
    for r in &rows {
        if r.len() != if has_dx { 6 } else { 5 } {
            return Err(Error::Parse(format!("{}: ragged row {r:?}", path.display())));
        }
        s.times.push(parse_f64(&r[0])?);
        s.v0.push(parse_f64(&r[1])?);
        s.omega.push(parse_f64(&r[2])?);
        s.residuals.push(parse_f64(&r[3])?);
        s.saturated.push(parse_bool(&r[4])?);
        if let Some(d) = s.dx_ramp.as_mut() {
            d.push(parse_f64(&r[5])?);
        }
    }
    s.validate()?;
    Ok(s)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenHeader {
    /// Level energies (J).
    pub energies: Vec<f64>,
    pub grid: SpatialGrid,
}

/// `x,phi0,phi1,...` with energies in a JSON sidecar.
pub fn write_eigen_csv(path: &Path, sol: &EigenSolution) -> Result<()> {
    let mut header = vec!["x".to_string()];
    header.extend((0..sol.states.len()).map(|k| format!("phi{k}")));
    let rows = (0..sol.grid.n_points).map(|i| {
        let mut r = vec![fmt_f64(sol.grid.x(i))];
        r.extend(sol.states.iter().map(|s| fmt_f64(s[i])));
        r
    });
    write_rows(path, &header, rows)?;
    write_json(&sidecar_path(path), &EigenHeader { energies: sol.energies.clone(), grid: sol.grid })
}

/// `t,P0,P1,...`.
pub fn write_populations_csv(path: &Path, r: &PropagationResult) -> Result<()> {
    let k = r.populations.first().map_or(0, Vec::len);
    let mut header = vec!["t".to_string()];
    header.extend((0..k).map(|n| format!("P{n}")));
    let rows = r.times.iter().zip(&r.populations).map(|(t, p)| {
        let mut row = vec![fmt_f64(*t)];
        row.extend(p.iter().map(|v| fmt_f64(*v)));
        row
    });
    write_rows(path, &header, rows)
}

/// `x,re,im`.
pub fn write_wavefunction_csv(path: &Path, psi: &WaveFunction) -> Result<()> {
    let header = ["x", "re", "im"].map(String::from);
    let rows = psi
        .amplitudes
        .iter()
        .enumerate()
        .map(|(i, a)| vec![fmt_f64(psi.grid.x(i)), fmt_f64(a.re), fmt_f64(a.im)]);
    write_rows(path, &header, rows)
}

/// Scalar summary of a propagation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropagationSummary {
    pub fidelities: std::collections::BTreeMap<String, f64>,
    /// `None` when the energy spread vanished and the bound is infinite.
    pub aa_min_time: Option<f64>,
    pub duration: f64,
    pub norm_drift: f64,
    pub max_populations: Vec<f64>,
    pub min_populations: Vec<f64>,
    pub steps: usize,
    pub dt: f64,
}

impl PropagationSummary {
    pub fn of(r: &PropagationResult) -> Self {
        let k = r.populations.first().map_or(0, Vec::len);
        Self {
            fidelities: r.fidelities.clone(),
            aa_min_time: r.aa_min_time.is_finite().then_some(r.aa_min_time),
            duration: r.times[r.times.len() - 1] - r.times[0],
            norm_drift: r.norm_drift,
            max_populations: (0..k).map(|n| r.max_population(n)).collect(),
            min_populations: (0..k).map(|n| r.min_population(n)).collect(),
            steps: r.steps,
            dt: r.dt,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::linear_ramp_schedule;
    use crate::units::RB87_MASS;

    #[test]
    fn seventeen_significant_digits() {
        let v = std::f64::consts::PI * 1e-30;
        let s = fmt_f64(v);
        assert_eq!(s.parse::<f64>().unwrap(), v);
        assert_eq!(s.split('e').next().unwrap().replace(['.', '-'], "").len(), 17);
    }

    #[test]
    fn curve_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.csv");
        let c = ControlCurve::new(vec![0.0, 0.1, 0.25], vec![490.1, 1.0 / 3.0, 0.0], vec![0.0, 2.5, 10.0], CurveKind::InvariantDesigned)
            .unwrap();
        write_curve_csv(&p, &c).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("t,delta,lambda\n"));
        assert_eq!(read_curve_csv(&p, CurveKind::InvariantDesigned).unwrap(), c);
    }

    #[test]
    fn schedule_round_trip_with_and_without_dx() {
        let dir = tempfile::tempdir().unwrap();
        let fixed = ScheduleFixed { mass: RB87_MASS, d_l: 5.18e-6, dx_shift: 1e-7, grid: SpatialGrid::default() };
        let mut s = linear_ramp_schedule(1e-31, 490.0, 0.1, 5, fixed).unwrap();
        s.saturated[4] = true;
        s.residuals[2] = 1.234e-3;
        let p = dir.path().join("s.csv");
        write_schedule(&p, &s).unwrap();
        assert!(std::fs::read_to_string(&p).unwrap().starts_with("t,V0,omega,residual,saturated\n"));
        assert_eq!(read_schedule(&p).unwrap(), s);
        s.dx_ramp = Some(vec![1e-7, 5e-8, 0.0, -5e-8, -1e-7]);
        write_schedule(&p, &s).unwrap();
        assert_eq!(read_schedule(&p).unwrap(), s);
    }

    #[test]
    fn malformed_inputs_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.csv");
        std::fs::write(&p, "t,delta\n0,1\n").unwrap();
        assert!(matches!(read_curve_csv(&p, CurveKind::InvariantDesigned), Err(Error::Parse(_))));
        std::fs::write(&p, "t,delta,lambda\n0,x,1\n").unwrap();
        assert!(matches!(read_curve_csv(&p, CurveKind::InvariantDesigned), Err(Error::Parse(_))));
        assert!(read_schedule(&dir.path().join("missing.csv")).is_err());
    }
}
