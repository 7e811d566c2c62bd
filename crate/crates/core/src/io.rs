//! File formats: trajectory readers (delimited text and pen-capture
//! streams), the versioned plan format, and report rows.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{KttError, Result};
use crate::geom::Point;
use crate::kernels::{KernelKind, KernelParams, KernelShape};
use crate::links::{LinkKind, LinkSpec};
use crate::reconstruct::{ActionPlan, Stroke};
use crate::trajectory::{Sample, Trajectory};

pub const PLAN_FORMAT: &str = "ktt-plan/1";

/// Input trajectory file layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrajectoryFormat {
    /// Header `t,x,y`, then one `t,x,y` sample per line. Seconds.
    DelimitedText,
    /// First line: sample count. Then `x y t_ms button azimuth altitude
    /// pressure` per line; button 0 means pen-up and splits trajectories.
    PenCapture,
}

impl TrajectoryFormat {
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "csv" | "delimited" => Ok(TrajectoryFormat::DelimitedText),
            "pen" | "pen-capture" => Ok(TrajectoryFormat::PenCapture),
            other => Err(KttError::UnsupportedKind(format!(
                "trajectory format {other}"
            ))),
        }
    }
}

fn parse_f64(field: &str, line: usize) -> Result<f64> {
    field.trim().parse::<f64>().map_err(|_| KttError::Parse {
        line,
        message: format!("expected a number, got {field:?}"),
    })
}

/// Parse delimited `t,x,y` text into one trajectory.
pub fn parse_delimited(text: &str, name: &str) -> Result<Trajectory> {
    let mut samples = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if i == 0 {
            let header: Vec<&str> = line.split(',').map(str::trim).collect();
            if header != ["t", "x", "y"] {
                return Err(KttError::Parse {
                    line: line_no,
                    message: format!("expected header 't,x,y', got {line:?}"),
                });
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(KttError::Parse {
                line: line_no,
                message: format!("expected 3 fields, got {}", fields.len()),
            });
        }
        samples.push(Sample::new(
            parse_f64(fields[0], line_no)?,
            parse_f64(fields[1], line_no)?,
            parse_f64(fields[2], line_no)?,
        ));
    }
    Trajectory::new(samples, name)
}

/// Parse a pen-capture stream, splitting at pen-up rows.
pub fn parse_pen_capture(text: &str, name: &str) -> Result<Vec<Trajectory>> {
    let mut lines = text.lines().enumerate();
    let (_, first) = lines.next().ok_or(KttError::Parse {
        line: 1,
        message: "empty file".into(),
    })?;
    let declared: usize = first.trim().parse().map_err(|_| KttError::Parse {
        line: 1,
        message: format!("expected sample count, got {first:?}"),
    })?;
    let mut out = Vec::new();
    let mut run: Vec<Sample> = Vec::new();
    let mut rows = 0usize;
    let flush = |run: &mut Vec<Sample>, out: &mut Vec<Trajectory>| -> Result<()> {
        if run.len() >= 4 {
            let part = out.len();
            out.push(Trajectory::from_raw_samples(
                std::mem::take(run),
                &format!("{name}#{part}"),
            )?);
        } else if !run.is_empty() {
            log::warn!("dropping pen-down run of {} samples (< 4)", run.len());
            run.clear();
        }
        Ok(())
    };
    for (i, raw) in lines {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 7 {
            return Err(KttError::Parse {
                line: line_no,
                message: format!("expected 7 fields, got {}", fields.len()),
            });
        }
        rows += 1;
        let x = parse_f64(fields[0], line_no)?;
        let y = parse_f64(fields[1], line_no)?;
        let t_ms = parse_f64(fields[2], line_no)?;
        let button: i64 = fields[3].trim().parse().map_err(|_| KttError::Parse {
            line: line_no,
            message: format!("expected integer button state, got {:?}", fields[3]),
        })?;
        if button == 0 {
            flush(&mut run, &mut out)?;
        } else {
            run.push(Sample::new(t_ms / 1000.0, x, y));
        }
    }
    flush(&mut run, &mut out)?;
    if rows != declared {
        return Err(KttError::Parse {
            line: 1,
            message: format!("declared {declared} samples, found {rows}"),
        });
    }
    Ok(out)
}

/// Read one or more trajectories from a file.
pub fn read_trajectories(path: &Path, format: TrajectoryFormat) -> Result<Vec<Trajectory>> {
    let text = std::fs::read_to_string(path)?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "input".into());
    match format {
        TrajectoryFormat::DelimitedText => Ok(vec![parse_delimited(&text, &name)?]),
        TrajectoryFormat::PenCapture => parse_pen_capture(&text, &name),
    }
}

/// Write a trajectory in the delimited `t,x,y` format.
pub fn write_delimited(traj: &Trajectory) -> String {
    let mut s = String::from("t,x,y\n");
    for smp in traj.samples() {
        let _ = writeln!(s, "{:?},{:?},{:?}", smp.t, smp.x, smp.y);
    }
    s
}

/// One stroke of a plan in serializable form.
#[derive(Debug, Clone, PartialEq)]
pub struct StrokeRecord {
    pub kernel_kind: KernelKind,
    pub t0: f64,
    pub d: f64,
    /// Shape parameters as ordered (name, value) pairs.
    pub shape_params: Vec<(String, f64)>,
    pub link_kind: LinkKind,
    pub tp_start: Point,
    pub tp_end: Point,
    pub theta_s: f64,
    pub theta_e: f64,
}

/// The serializable view of an action plan.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanDocument {
    pub version: String,
    pub start_point: Point,
    pub strokes: Vec<StrokeRecord>,
}

fn shape_fields(shape: &KernelShape) -> Vec<(String, f64)> {
    let f = |pairs: &[(&str, f64)]| {
        pairs
            .iter()
            .map(|&(k, v)| (k.to_string(), v))
            .collect::<Vec<_>>()
    };
    match *shape {
        KernelShape::Gaussian { mu, sigma2 } => f(&[("mu", mu), ("sigma2", sigma2)]),
        KernelShape::Lognormal { mu, sigma2 } => f(&[("mu", mu), ("sigma2", sigma2)]),
        KernelShape::Gamma { alpha, beta } => f(&[("alpha", alpha), ("beta", beta)]),
        KernelShape::Beta { alpha, beta } => f(&[("alpha", alpha), ("beta", beta)]),
        KernelShape::DoubleBoundedLognormal { mu, sigma2, te } => {
            f(&[("mu", mu), ("sigma2", sigma2), ("te", te)])
        }
        KernelShape::Gev { xi, mu, sigma } => f(&[("xi", xi), ("mu", mu), ("sigma", sigma)]),
    }
}

fn shape_from_fields(kind: KernelKind, fields: &[(String, f64)]) -> Result<KernelShape> {
    let get = |name: &str| -> Result<f64> {
        fields
            .iter()
            .find(|(k, _)| k == name)
            .map(|&(_, v)| v)
            .ok_or_else(|| KttError::InvalidInput(format!("missing shape parameter {name}")))
    };
    Ok(match kind {
        KernelKind::Gaussian => KernelShape::Gaussian {
            mu: get("mu")?,
            sigma2: get("sigma2")?,
        },
        KernelKind::Lognormal => KernelShape::Lognormal {
            mu: get("mu")?,
            sigma2: get("sigma2")?,
        },
        KernelKind::Gamma => KernelShape::Gamma {
            alpha: get("alpha")?,
            beta: get("beta")?,
        },
        KernelKind::Beta => KernelShape::Beta {
            alpha: get("alpha")?,
            beta: get("beta")?,
        },
        KernelKind::DoubleBoundedLognormal => KernelShape::DoubleBoundedLognormal {
            mu: get("mu")?,
            sigma2: get("sigma2")?,
            te: get("te")?,
        },
        KernelKind::Gev => KernelShape::Gev {
            xi: get("xi")?,
            mu: get("mu")?,
            sigma: get("sigma")?,
        },
    })
}

/// Convert a plan to its document form.
pub fn plan_to_document(plan: &ActionPlan) -> PlanDocument {
    PlanDocument {
        version: PLAN_FORMAT.to_string(),
        start_point: plan.start_point,
        strokes: plan
            .strokes
            .iter()
            .map(|s| StrokeRecord {
                kernel_kind: s.kernel.kind(),
                t0: s.kernel.t0,
                d: s.kernel.d,
                shape_params: shape_fields(&s.kernel.shape),
                link_kind: s.link.kind,
                tp_start: s.link.p_start,
                tp_end: s.link.p_end,
                theta_s: s.link.theta_s,
                theta_e: s.link.theta_e,
            })
            .collect(),
    }
}

/// Rebuild an action plan from a document (links are re-fitted).
pub fn document_to_plan(doc: &PlanDocument) -> Result<ActionPlan> {
    if doc.version != PLAN_FORMAT {
        return Err(KttError::UnsupportedVersion(doc.version.clone()));
    }
    let mut strokes = Vec::with_capacity(doc.strokes.len());
    for r in &doc.strokes {
        let shape = shape_from_fields(r.kernel_kind, &r.shape_params)?;
        let kernel = KernelParams::new(r.t0, r.d, shape)?;
        let link = LinkSpec::new(r.link_kind, r.tp_start, r.tp_end, r.theta_s, r.theta_e)?;
        strokes.push(Stroke::new(kernel, link)?);
    }
    ActionPlan::new(doc.start_point, strokes)
}

/// Serialize a plan document. Floats are written in Rust's shortest
/// round-trip form, so parsing the output recovers them bit-exactly.
pub fn write_plan(doc: &PlanDocument) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "format {}", doc.version);
    let _ = writeln!(s, "start {:?} {:?}", doc.start_point.x, doc.start_point.y);
    let _ = writeln!(s, "strokes {}", doc.strokes.len());
    for r in &doc.strokes {
        let _ = writeln!(s, "stroke");
        let _ = writeln!(s, "  kernel {}", r.kernel_kind.name());
        let _ = writeln!(s, "  t0 {:?}", r.t0);
        let _ = writeln!(s, "  d {:?}", r.d);
        for (k, v) in &r.shape_params {
            let _ = writeln!(s, "  shape.{k} {v:?}");
        }
        let _ = writeln!(s, "  link {}", r.link_kind.name());
        let _ = writeln!(s, "  tp_start {:?} {:?}", r.tp_start.x, r.tp_start.y);
        let _ = writeln!(s, "  tp_end {:?} {:?}", r.tp_end.x, r.tp_end.y);
        let _ = writeln!(s, "  theta_s {:?}", r.theta_s);
        let _ = writeln!(s, "  theta_e {:?}", r.theta_e);
    }
    s
}

/// Parse the plan format produced by `write_plan`.
pub fn read_plan(text: &str) -> Result<PlanDocument> {
    let mut version: Option<String> = None;
    let mut start: Option<Point> = None;
    let mut declared: Option<usize> = None;
    let mut strokes: Vec<StrokeRecord> = Vec::new();
    let mut current: Option<StrokeRecord> = None;

    let err = |line: usize, message: String| KttError::Parse { line, message };

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, rest) = match line.split_once(char::is_whitespace) {
            Some((k, r)) => (k, r.trim()),
            None => (line, ""),
        };
        match key {
            "format" => {
                if rest != PLAN_FORMAT {
                    return Err(KttError::UnsupportedVersion(rest.to_string()));
                }
                version = Some(rest.to_string());
            }
            "start" => {
                let f: Vec<&str> = rest.split_whitespace().collect();
                if f.len() != 2 {
                    return Err(err(line_no, "start needs two coordinates".into()));
                }
                start = Some(Point::new(
                    parse_f64(f[0], line_no)?,
                    parse_f64(f[1], line_no)?,
                ));
            }
            "strokes" => {
                declared = Some(rest.parse().map_err(|_| {
                    err(line_no, format!("bad stroke count {rest:?}"))
                })?);
            }
            "stroke" => {
                if version.is_none() {
                    return Err(err(line_no, "stroke before format line".into()));
                }
                if let Some(r) = current.take() {
                    strokes.push(r);
                }
                current = Some(StrokeRecord {
                    kernel_kind: KernelKind::Gaussian,
                    t0: 0.0,
                    d: 0.0,
                    shape_params: Vec::new(),
                    link_kind: LinkKind::Arc,
                    tp_start: Point::ORIGIN,
                    tp_end: Point::ORIGIN,
                    theta_s: 0.0,
                    theta_e: 0.0,
                });
            }
            _ => {
                let r = current
                    .as_mut()
                    .ok_or_else(|| err(line_no, format!("unexpected key {key:?}")))?;
                let two = |rest: &str| -> Result<Point> {
                    let f: Vec<&str> = rest.split_whitespace().collect();
                    if f.len() != 2 {
                        return Err(err(line_no, format!("{key} needs two values")));
                    }
                    Ok(Point::new(
                        parse_f64(f[0], line_no)?,
                        parse_f64(f[1], line_no)?,
                    ))
                };
                match key {
                    "kernel" => r.kernel_kind = KernelKind::from_name(rest)?,
                    "t0" => r.t0 = parse_f64(rest, line_no)?,
                    "d" => r.d = parse_f64(rest, line_no)?,
                    "link" => r.link_kind = LinkKind::from_name(rest)?,
                    "tp_start" => r.tp_start = two(rest)?,
                    "tp_end" => r.tp_end = two(rest)?,
                    "theta_s" => r.theta_s = parse_f64(rest, line_no)?,
                    "theta_e" => r.theta_e = parse_f64(rest, line_no)?,
                    _ => {
                        if let Some(name) = key.strip_prefix("shape.") {
                            r.shape_params
                                .push((name.to_string(), parse_f64(rest, line_no)?));
                        } else {
                            return Err(err(line_no, format!("unknown key {key:?}")));
                        }
                    }
                }
            }
        }
    }
    if let Some(r) = current.take() {
        strokes.push(r);
    }
    let version = version.ok_or(KttError::UnsupportedVersion("missing format line".into()))?;
    let start_point = start.ok_or_else(|| err(0, "missing start line".into()))?;
    if let Some(n) = declared {
        if n != strokes.len() {
            return Err(err(0, format!("declared {n} strokes, found {}", strokes.len())));
        }
    }
    Ok(PlanDocument {
        version,
        start_point,
        strokes,
    })
}

/// One row of a batch report.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub source: String,
    pub config: String,
    pub snr_t: f64,
    pub snr_v: f64,
    pub n_strokes: usize,
    pub passes: usize,
    pub warnings: usize,
}

pub const REPORT_HEADER: &str = "source,config,snr_t,snr_v,n,snr_t_per_n,snr_v_per_n,passes,warnings";

/// Serialize report rows as delimited text with a fixed header.
pub fn write_report(rows: &[ReportRow]) -> String {
    let mut s = String::from(REPORT_HEADER);
    s.push('\n');
    for r in rows {
        let n = r.n_strokes.max(1) as f64;
        let _ = writeln!(
            s,
            "{},{},{:.4},{:.4},{},{:.4},{:.4},{},{}",
            r.source,
            r.config,
            r.snr_t,
            r.snr_v,
            r.n_strokes,
            r.snr_t / n,
            r.snr_v / n,
            r.passes,
            r.warnings
        );
    }
    s
}

/// Parse a numeric column from report text by header name.
pub fn report_column(text: &str, column: &str) -> Result<Vec<f64>> {
    let mut lines = text.lines();
    let header = lines.next().ok_or(KttError::Parse {
        line: 1,
        message: "empty report".into(),
    })?;
    let idx = header
        .split(',')
        .position(|c| c.trim() == column)
        .ok_or_else(|| KttError::InvalidInput(format!("no column {column:?}")))?;
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() <= idx {
            return Err(KttError::Parse {
                line: i + 2,
                message: format!("row has {} fields, need {}", fields.len(), idx + 1),
            });
        }
        out.push(parse_f64(fields[idx], i + 2)?);
    }
    Ok(out)
}
