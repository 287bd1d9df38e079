use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use mocomp_core::embed::EmbeddingParams;
use mocomp_core::io::{export_series_csv, load_motion, save_motion, LoadOptions, LoadedMotion, MotionFormat, RobotSpec};
use mocomp_core::series::ScalarSeries;
use mocomp_core::warp::LocalCost;
use mocomp_service::api::{
    self, AlignRequest, DiffAlignment, DiffRequest, LimitsQuery, MetricsQuery, SeriesSpec, TraceQuery,
};
use mocomp_service::{ApiError, Config};
use serde_json::Value;

use crate::table::{num, pairs, render};
use crate::{AlignmentArg, Command, FixtureCommand, Output, RobotArgs, SeriesArgs};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Engine(ApiError),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Engine(_) | CliError::Runtime(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "error: {m}"),
            CliError::Runtime(m) => write!(f, "error: {m}"),
            CliError::Engine(e) => {
                write!(f, "error[{}]: {}", e.code, e.message)?;
                if let Some(p) = &e.path {
                    write!(f, " (at {p})")?;
                }
                if !e.missing.is_empty() {
                    write!(f, " [missing: {}]", e.missing.join(", "))?;
                }
                Ok(())
            }
        }
    }
}

impl From<ApiError> for CliError {
    fn from(e: ApiError) -> Self {
        CliError::Engine(e)
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

fn load(path: &Path, robot: &RobotArgs, name: Option<&str>) -> Result<LoadedMotion> {
    let bytes = read(path)?;
    let is_csv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    let sidecar = match (&robot.robot, &robot.ee_link) {
        (Some(urdf), Some(ee_link)) => Some(RobotSpec {
            urdf: String::from_utf8(read(urdf)?)
                .map_err(|_| CliError::Usage(format!("{} is not UTF-8", urdf.display())))?,
            ee_link: ee_link.clone(),
        }),
        (None, None) => None,
        _ => return Err(CliError::Usage("--robot and --ee-link go together".into())),
    };
    if is_csv && sidecar.is_none() {
        return Err(CliError::Usage(format!(
            "{} is CSV; give its robot with --robot URDF --ee-link LINK",
            path.display()
        )));
    }
    let default_name = path.file_stem().map(|s| s.to_string_lossy().into_owned());
    let options = LoadOptions {
        sidecar,
        base_dir: Some(path.parent().map_or_else(|| PathBuf::from("."), Path::to_path_buf)),
        name: name.map(str::to_owned).or(default_name),
    };
    let format = if is_csv { MotionFormat::Csv } else { MotionFormat::Json };
    load_motion(&bytes, format, &options).map_err(|e| CliError::Engine(e.into()))
}

fn write_target(target: &Path, bytes: &[u8]) -> Result<()> {
    if target == Path::new("-") {
        io::stdout()
            .write_all(bytes)
            .map_err(|e| CliError::Runtime(format!("cannot write to stdout: {e}")))
    } else {
        fs::write(target, bytes).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", target.display())))
    }
}

fn to_stdout(target: &Option<PathBuf>) -> bool {
    target.as_deref() == Some(Path::new("-"))
}

type CsvRender<'a> = &'a dyn Fn(&Value) -> Result<Vec<u8>>;

/// Writes the requested JSON/CSV outputs, then the human-readable text unless
/// one of the outputs went to stdout.
fn emit(output: &Output, body: &[u8], csv: Option<CsvRender>, human: impl Fn(&Value) -> String) -> Result<()> {
    if to_stdout(&output.json) && to_stdout(&output.csv) {
        return Err(CliError::Usage("--json and --csv cannot both go to stdout".into()));
    }
    let value: Value = serde_json::from_slice(body).expect("bodies are JSON");
    if let Some(target) = &output.json {
        write_target(target, body)?;
    }
    if let Some(target) = &output.csv {
        let render = csv.ok_or_else(|| CliError::Usage("--csv is not available for this command".into()))?;
        write_target(target, &render(&value)?)?;
    }
    if !to_stdout(&output.json) && !to_stdout(&output.csv) {
        print!("{}", human(&value));
    }
    Ok(())
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap_or(f64::NAN)
}

fn series_from(v: &Value) -> Result<ScalarSeries<f64>> {
    let nums = |key: &str| -> Vec<f64> { v[key].as_array().map(|a| a.iter().map(f).collect()).unwrap_or_default() };
    ScalarSeries::new(
        v["name"].as_str().unwrap_or_default(),
        v["unit"].as_str().unwrap_or_default(),
        nums("timestamps"),
        nums("values"),
    )
    .map_err(|e| CliError::Engine(e.into()))
}

fn csv_rows(headers: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| CliError::Runtime(format!("CSV export failed: {e}"));
    w.write_record(headers).map_err(fail)?;
    for r in rows {
        w.write_record(&r).map_err(fail)?;
    }
    w.into_inner().map_err(|e| CliError::Runtime(format!("CSV export failed: {e}")))
}

fn series_stats(v: &Value) -> String {
    let values: Vec<f64> = v["values"].as_array().map(|a| a.iter().map(f).collect()).unwrap_or_default();
    let n = values.len();
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let rms = (values.iter().map(|x| x * x).sum::<f64>() / n.max(1) as f64).sqrt();
    pairs(&[
        ("series", v["name"].as_str().unwrap_or_default().to_owned()),
        ("unit", v["unit"].as_str().unwrap_or_default().to_owned()),
        ("samples", n.to_string()),
        ("min", num(min)),
        ("max", num(max)),
        ("rms", num(rms)),
    ])
}

fn series_spec(args: &SeriesArgs, motion: Option<String>) -> SeriesSpec {
    SeriesSpec {
        motion,
        quantity: args.quantity.into(),
        joint: args.joint,
        axis: args.axis.map(Into::into),
        frame: args.frame.clone(),
        deriv: args.deriv,
        smooth: args.smooth.clone(),
    }
}

fn series_csv(v: &Value) -> Result<Vec<u8>> {
    Ok(export_series_csv(&[series_from(&v["series"])?]))
}

pub fn run(command: Command, output: &Output) -> Result<()> {
    match command {
        Command::Ingest { file, robot, name, out } => {
            let m = load(&file, &robot, name.as_deref())?;
            if let Some(out) = out {
                write_target(&out, &save_motion(&m))?;
            }
            emit(output, &api::summary_body(&m), None, |v| {
                let joints: Vec<&str> = v["joint_names"]
                    .as_array()
                    .map(|a| a.iter().filter_map(Value::as_str).collect())
                    .unwrap_or_default();
                let tracks: Vec<&str> = v["object_tracks"]
                    .as_array()
                    .map(|a| a.iter().filter_map(Value::as_str).collect())
                    .unwrap_or_default();
                pairs(&[
                    ("id", v["id"].as_str().unwrap_or_default().to_owned()),
                    ("name", v["name"].as_str().unwrap_or_default().to_owned()),
                    ("robot", v["robot"].as_str().unwrap_or_default().to_owned()),
                    ("ee_link", v["ee_link"].as_str().unwrap_or_default().to_owned()),
                    ("samples", v["n_samples"].to_string()),
                    ("duration", format!("{} s", num(f(&v["duration"])))),
                    ("joints", joints.join(", ")),
                    ("object_tracks", if tracks.is_empty() { "-".into() } else { tracks.join(", ") }),
                ])
            })
        }
        Command::Align { a, b, cost, window, robot } => {
            let (ma, mb) = (load(&a, &robot, None)?, load(&b, &robot, None)?);
            let req = AlignRequest {
                a: ma.motion.id.clone(),
                b: mb.motion.id.clone(),
                cost: LocalCost::Single(cost.into()),
                window,
            };
            let body = api::align_body(&ma, &mb, &req)?;
            let csv = |v: &Value| {
                let ta = v["path"]["timestamps_a"].as_array().cloned().unwrap_or_default();
                let tb = v["path"]["timestamps_b"].as_array().cloned().unwrap_or_default();
                let rows = v["path"]["pairs"].as_array().into_iter().flatten().map(|p| {
                    let (i, j) = (p[0].as_u64().unwrap_or(0) as usize, p[1].as_u64().unwrap_or(0) as usize);
                    vec![i.to_string(), j.to_string(), ta[i].to_string(), tb[j].to_string()]
                });
                csv_rows(&["i", "j", "t_a", "t_b"], rows)
            };
            emit(output, &body, Some(&csv), |v| {
                let ratios = |side: &str| -> f64 {
                    let r: Vec<f64> = v["relative_speed"][side]["ratio"]
                        .as_array()
                        .map(|a| a.iter().map(f).collect())
                        .unwrap_or_default();
                    r.iter().sum::<f64>() / r.len().max(1) as f64
                };
                pairs(&[
                    ("a", format!("{} ({})", ma.motion.name, ma.motion.id)),
                    ("b", format!("{} ({})", mb.motion.name, mb.motion.id)),
                    ("cost", v["cost"].to_string()),
                    ("total_cost", num(f(&v["total_cost"]))),
                    ("path_pairs", v["path"]["pairs"].as_array().map_or(0, Vec::len).to_string()),
                    ("curve", v["warping_curve"]["side"].as_str().unwrap_or_default().to_owned()),
                    ("mean_speed_a_vs_b", num(ratios("a"))),
                ])
            })
        }
        Command::Diff {
            a,
            b,
            series,
            alignment,
            cost,
            window,
            robot,
        } => {
            let (ma, mb) = (load(&a, &robot, None)?, load(&b, &robot, None)?);
            let req = DiffRequest {
                a: series_spec(&series, Some(ma.motion.id.clone())),
                b: series_spec(&series, Some(mb.motion.id.clone())),
                alignment: match alignment {
                    AlignmentArg::Resampled => DiffAlignment::Resampled,
                    AlignmentArg::Dtw => DiffAlignment::Dtw {
                        cost: LocalCost::Single(cost.into()),
                        window,
                    },
                },
            };
            let body = api::diff_body(&ma, &mb, &req)?;
            emit(output, &body, Some(&series_csv), |v| {
                let mut out = series_stats(&v["series"]);
                if let Some(c) = v["total_cost"].as_f64() {
                    out += &pairs(&[("dtw_cost", num(c))]);
                }
                out
            })
        }
        Command::Series { motion, series, robot } => {
            let m = load(&motion, &robot, None)?;
            let body = api::series_body(&m, &series_spec(&series, None))?;
            emit(output, &body, Some(&series_csv), |v| series_stats(&v["series"]))
        }
        Command::Trace {
            motion,
            kind,
            frame,
            stride,
            robot,
        } => {
            let m = load(&motion, &robot, None)?;
            let q = TraceQuery {
                kind: kind.into(),
                frame,
                stride,
            };
            let body = api::trace_body(&m, &q)?;
            let csv = |v: &Value| {
                let ts = v["polyline"]["timestamps"].as_array().cloned().unwrap_or_default();
                let rows = v["polyline"]["points"].as_array().into_iter().flatten().zip(ts).map(|(p, t)| {
                    vec![t.to_string(), p[0].to_string(), p[1].to_string(), p[2].to_string()]
                });
                csv_rows(&["t", "x", "y", "z"], rows)
            };
            emit(output, &body, Some(&csv), |v| {
                let mut items = vec![
                    ("motion", m.motion.name.clone()),
                    ("kind", v["kind"].as_str().unwrap_or_default().to_owned()),
                    ("frame", v["frame"].as_str().unwrap_or_default().to_owned()),
                    ("points", v["polyline"]["points"].as_array().map_or(0, Vec::len).to_string()),
                    ("arc_length", num(f(&v["arc_length"]))),
                ];
                if let Some(c) = v["cones"].as_array() {
                    items.push(("cones", c.len().to_string()));
                }
                pairs(&items)
            })
        }
        Command::Embed {
            motions,
            seed,
            method,
            neighbors,
            min_dist,
            epochs,
            robot,
        } => {
            let loaded = motions
                .iter()
                .map(|p| load(p, &robot, None))
                .collect::<Result<Vec<_>>>()?;
            let defaults = EmbeddingParams::default();
            let params = EmbeddingParams {
                n_neighbors: neighbors.unwrap_or(defaults.n_neighbors),
                min_dist: min_dist.unwrap_or(defaults.min_dist),
                n_epochs: epochs.unwrap_or(defaults.n_epochs),
                seed,
                method: method.into(),
                deduplicate: defaults.deduplicate,
            };
            let refs: Vec<&LoadedMotion> = loaded.iter().collect();
            let body = api::embed_body(&refs, &params)?;
            let csv = |v: &Value| {
                let mut rows = Vec::new();
                for tr in v["joint_traces"].as_array().into_iter().flatten() {
                    let id = tr["motion"].as_str().unwrap_or_default();
                    let ts = tr["timestamps"].as_array().cloned().unwrap_or_default();
                    for (p, t) in tr["points"].as_array().into_iter().flatten().zip(ts) {
                        rows.push(vec![id.to_owned(), t.to_string(), p[0].to_string(), p[1].to_string()]);
                    }
                }
                csv_rows(&["motion", "t", "x", "y"], rows)
            };
            emit(output, &body, Some(&csv), |v| {
                let rows: Vec<Vec<String>> = v["joint_traces"]
                    .as_array()
                    .into_iter()
                    .flatten()
                    .zip(&loaded)
                    .map(|(tr, m)| {
                        let pts: Vec<(f64, f64)> = tr["points"]
                            .as_array()
                            .into_iter()
                            .flatten()
                            .map(|p| (f(&p[0]), f(&p[1])))
                            .collect();
                        let n = pts.len().max(1) as f64;
                        let cx = pts.iter().map(|p| p.0).sum::<f64>() / n;
                        let cy = pts.iter().map(|p| p.1).sum::<f64>() / n;
                        vec![m.motion.name.clone(), m.motion.id.clone(), pts.len().to_string(), num(cx), num(cy)]
                    })
                    .collect();
                render(&["motion", "id", "points", "centroid_x", "centroid_y"], &rows)
                    + &pairs(&[("unique_points", v["embedding"]["unique_points"].to_string())])
            })
        }
        Command::Metrics { motion, reference, robot } => {
            let m = load(&motion, &robot, None)?;
            let body = api::metrics_body(&m, &MetricsQuery { reference })?;
            let csv = |v: &Value| {
                let rows = v["metrics"]
                    .as_object()
                    .into_iter()
                    .flatten()
                    .map(|(k, x)| vec![k.clone(), if x.is_null() { String::new() } else { x.to_string() }]);
                csv_rows(&["metric", "value"], rows)
            };
            emit(output, &body, Some(&csv), |v| {
                let mt = &v["metrics"];
                let mut items = vec![
                    ("duration", format!("{} s", num(f(&mt["duration"])))),
                    ("ee_path_length", format!("{} m", num(f(&mt["ee_path_length"])))),
                    ("jerk_rms", format!("{} m/s^3", num(f(&mt["jerk_rms"])))),
                ];
                if let Some(e) = mt["tracking_error_rms"].as_f64() {
                    items.push(("tracking_error_rms", format!("{} m", num(e))));
                }
                pairs(&items)
            })
        }
        Command::Limits { motion, margin, robot } => {
            let m = load(&motion, &robot, None)?;
            let body = api::limits_body(&m, &LimitsQuery { margin })?;
            let rows = |v: &Value| -> Vec<Vec<String>> {
                v["violations"]
                    .as_array()
                    .into_iter()
                    .flatten()
                    .map(|s| {
                        vec![
                            s["joint"].as_str().unwrap_or_default().to_owned(),
                            s["kind"].as_str().unwrap_or_default().to_owned(),
                            num(f(&s["start"])),
                            num(f(&s["end"])),
                            s["start_sample"].to_string(),
                            s["end_sample"].to_string(),
                        ]
                    })
                    .collect()
            };
            const HEADERS: [&str; 6] = ["joint", "kind", "start", "end", "start_sample", "end_sample"];
            let csv = |v: &Value| {
                let raw = v["violations"].as_array().into_iter().flatten().map(|s| {
                    let text = |k: &str| s[k].as_str().map_or_else(|| s[k].to_string(), str::to_owned);
                    HEADERS.iter().map(|k| text(k)).collect()
                });
                csv_rows(&HEADERS, raw)
            };
            emit(output, &body, Some(&csv), |v| {
                let r = rows(v);
                if r.is_empty() {
                    "no joint rests on a limit\n".to_owned()
                } else {
                    render(&HEADERS, &r)
                }
            })
        }
        Command::Fixtures {
            command: FixtureCommand::Gen { case, out },
        } => {
            if output.json.is_some() || output.csv.is_some() {
                return Err(CliError::Usage("fixtures gen writes motion files only".into()));
            }
            fs::create_dir_all(&out)
                .map_err(|e| CliError::Usage(format!("cannot create {}: {e}", out.display())))?;
            for c in case.cases() {
                for (name, bytes) in c.files() {
                    let path = out.join(name);
                    write_target(&path, &bytes)?;
                    println!("{}", path.display());
                }
            }
            Ok(())
        }
        Command::Serve {
            addr,
            data_dir,
            max_upload,
            default_seed,
            ui_dir,
        } => {
            tracing_subscriber::fmt().with_writer(io::stderr).init();
            let config = Config {
                addr,
                data_dir,
                max_upload,
                default_seed,
                ui_dir,
            };
            let runtime = tokio::runtime::Runtime::new()
                .map_err(|e| CliError::Runtime(format!("cannot start runtime: {e}")))?;
            runtime
                .block_on(mocomp_service::serve(config))
                .map_err(|e| CliError::Runtime(format!("service stopped: {e}")))
        }
    }
}
