//! Turns a parsed scenario into library objects, evaluates every sweep point
//! and collects fixed-schema records.

use rayon::prelude::*;

use wvkit::channels::{
    apply_to_w, bit_flip_channel, kraus_from_dilation, EnvironmentDilation, KrausPair, WChannel,
};
use wvkit::geomphase::{
    bit_flip_phase_closed_form, geometric_phase_channel, geometric_phase_pure, PathSpec,
};
use wvkit::twostate::weak_value_with_tolerance;
use wvkit::weakmeas::{
    averaged_shifts, exact_shifts, first_order_shifts_with_tolerance, CouplingSpec, EnsembleEntry,
    GaussianProbe, WeightedEnvEnsemble,
};
use wvkit::{ComplexMatrix, HermitianObservable, Ket, Tolerances, WOperator, C64};

use crate::config::{
    ChannelSpec, Cx, Kind, MatrixLit, NamedObservable, ObservableSpec, Preset, ScenarioConfig,
    SweepParameter,
};
use crate::error::CliError;

/// Run-wide numerical settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Settings {
    /// Vanishing threshold for `|Tr W|` in weak-value denominators.
    pub tolerance: f64,
    pub grid_points: usize,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            tolerance: Tolerances::default().trace,
            grid_points: 4096,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Field {
    Index(usize),
    Real(f64),
    /// Radians; may be shown in degrees.
    Angle(f64),
    Complex(C64),
    Null,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub fields: Vec<(&'static str, Field)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioResult {
    pub kind: Kind,
    pub settings: Settings,
    pub records: Vec<Record>,
}

/// Parameter values at one sweep point; `None` where the scenario has no
/// such parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub index: usize,
    pub p: Option<f64>,
    pub phi: Option<f64>,
    pub g: Option<f64>,
}

fn config<T>(msg: impl Into<String>) -> Result<T, CliError> {
    Err(CliError::Config(msg.into()))
}

fn cx(z: &Cx) -> C64 {
    C64::new(z[0], z[1])
}

fn ket(what: &str, amps: &[Cx]) -> Result<Ket, CliError> {
    if amps.is_empty() {
        return config(format!("{what}: state has no amplitudes"));
    }
    if amps.iter().all(|z| z[0] == 0.0 && z[1] == 0.0) {
        return config(format!("{what}: state is the zero vector"));
    }
    Ket::normalize(amps.iter().map(cx).collect())
        .map_err(|e| CliError::Config(format!("{what}: {e}")))
}

fn matrix(what: &str, rows: &MatrixLit) -> Result<ComplexMatrix, CliError> {
    let rows: Vec<Vec<C64>> = rows.iter().map(|r| r.iter().map(cx).collect()).collect();
    ComplexMatrix::from_rows(&rows).map_err(|e| CliError::Config(format!("{what}: {e}")))
}

fn observable(spec: &ObservableSpec) -> Result<HermitianObservable, CliError> {
    let m = match spec {
        ObservableSpec::Named(NamedObservable::X) => ComplexMatrix::pauli_x(),
        ObservableSpec::Named(NamedObservable::Y) => ComplexMatrix::pauli_y(),
        ObservableSpec::Named(NamedObservable::Z) => ComplexMatrix::pauli_z(),
        ObservableSpec::Named(NamedObservable::P0) => {
            ComplexMatrix::outer(Ket::basis(2, 0).amplitudes(), Ket::basis(2, 0).amplitudes())
        }
        ObservableSpec::Matrix(rows) => matrix("observable", rows)?,
    };
    HermitianObservable::new(m).map_err(|e| CliError::Config(format!("observable: {e}")))
}

/// Pre-selected, post-selected and (optional) intermediate states.
struct Boundary {
    i: Ket,
    f: Ket,
    intermediate: Option<Ket>,
}

fn boundary(cfg: &ScenarioConfig, phi: Option<f64>) -> Result<Boundary, CliError> {
    let Some(states) = &cfg.states else {
        return config("states: required");
    };
    match states.preset {
        Some(Preset::PaperQubitPath) => {
            if states.pre.is_some() || states.post.is_some() || states.intermediate.is_some() {
                return config("states: a preset cannot be combined with explicit amplitudes");
            }
            let phi =
                phi.ok_or_else(|| CliError::Config("states.phi: required by the preset".into()))?;
            if !phi.is_finite() {
                return config("states.phi: must be finite");
            }
            let h = std::f64::consts::FRAC_1_SQRT_2;
            Ok(Boundary {
                i: Ket::normalized(vec![C64::new(h, 0.0), C64::new(-h, 0.0)])?,
                f: Ket::normalized(vec![C64::new(h, 0.0), -C64::from_polar(h, -phi)])?,
                intermediate: Some(Ket::basis(2, 0)),
            })
        }
        None => {
            if states.phi.is_some() {
                return config("states.phi: only meaningful with a preset");
            }
            let (Some(pre), Some(post)) = (&states.pre, &states.post) else {
                return config("states: need both pre and post, or a preset");
            };
            let i = ket("states.pre", pre)?;
            let f = ket("states.post", post)?;
            if i.dim() != f.dim() {
                return config(format!(
                    "states.post: dimension {} does not match pre {}",
                    f.dim(),
                    i.dim()
                ));
            }
            let intermediate = match &states.intermediate {
                Some(amps) => {
                    let k = ket("states.intermediate", amps)?;
                    if k.dim() != i.dim() {
                        return config("states.intermediate: dimension does not match pre");
                    }
                    Some(k)
                }
                None => None,
            };
            Ok(Boundary { i, f, intermediate })
        }
    }
}

fn dilation(spec: &ChannelSpec) -> Result<Option<EnvironmentDilation>, CliError> {
    let ChannelSpec::Dilation {
        dim_s,
        dim_e,
        u,
        v,
        e_i,
        e_f,
        env_basis,
    } = spec
    else {
        return Ok(None);
    };
    let basis = match env_basis {
        Some(b) => b
            .iter()
            .enumerate()
            .map(|(k, amps)| ket(&format!("channel.env_basis[{k}]"), amps))
            .collect::<Result<Vec<_>, _>>()?,
        None => (0..*dim_e).map(|k| Ket::basis(*dim_e, k)).collect(),
    };
    EnvironmentDilation::new(
        *dim_s,
        *dim_e,
        matrix("channel.u", u)?,
        matrix("channel.v", v)?,
        ket("channel.e_i", e_i)?,
        ket("channel.e_f", e_f)?,
        basis,
    )
    .map(Some)
    .map_err(|e| CliError::Config(format!("channel: {e}")))
}

fn channel(spec: &ChannelSpec, p_override: Option<f64>) -> Result<WChannel, CliError> {
    let wrap = |e: wvkit::Error| CliError::Config(format!("channel: {e}"));
    match spec {
        ChannelSpec::Bitflip { p } => bit_flip_channel(p_override.unwrap_or(*p)).map_err(wrap),
        ChannelSpec::Kraus { pairs } => {
            let pairs = pairs
                .iter()
                .enumerate()
                .map(|(k, pair)| {
                    let e = matrix(&format!("channel.pairs[{k}].e"), &pair.e)?;
                    let f = match &pair.f {
                        Some(f) => matrix(&format!("channel.pairs[{k}].f"), f)?,
                        None => e.clone(),
                    };
                    KrausPair::new(e, f).map_err(wrap)
                })
                .collect::<Result<Vec<_>, _>>()?;
            WChannel::new(pairs).map_err(wrap)
        }
        ChannelSpec::Dilation { .. } => {
            let d = dilation(spec)?.expect("dilation spec");
            kraus_from_dilation(&d).map_err(wrap)
        }
    }
}

fn check_fields(cfg: &ScenarioConfig) -> Result<(), CliError> {
    let kind = cfg.kind;
    let unused = |field: &str| config(format!("{field}: not used by kind {}", kind.name()));
    if kind == Kind::WeakValue && cfg.channel.is_some() {
        return unused("channel");
    }
    if !kind.uses_coupling() {
        if cfg.coupling.is_some() {
            return unused("coupling");
        }
        if cfg.probe_width.is_some() {
            return unused("probe_width");
        }
    }
    if kind != Kind::AveragedShift && cfg.ensemble.is_some() {
        return unused("ensemble");
    }
    if matches!(kind, Kind::GeometricPhase | Kind::BitflipSweep) && cfg.observable.is_some() {
        return unused("observable");
    }
    if matches!(kind, Kind::ChannelWeakValue | Kind::AveragedShift) && cfg.channel.is_none() {
        return config(format!("channel: required by kind {}", kind.name()));
    }
    if kind == Kind::AveragedShift && !matches!(cfg.channel, Some(ChannelSpec::Dilation { .. })) {
        return config("channel: averaged-shift needs a dilation block");
    }
    if kind == Kind::BitflipSweep
        && matches!(
            cfg.channel,
            Some(ChannelSpec::Kraus { .. } | ChannelSpec::Dilation { .. })
        )
    {
        return config("channel: bitflip-sweep only accepts a bitflip channel");
    }
    if let Some(sweep) = &cfg.sweep {
        if sweep.steps == 0 {
            return config("sweep.steps: must be at least 1");
        }
        if !(sweep.start.is_finite() && sweep.stop.is_finite()) {
            return config("sweep: start and stop must be finite");
        }
        match sweep.parameter {
            SweepParameter::P => {
                let bitflip = matches!(cfg.channel, Some(ChannelSpec::Bitflip { .. }))
                    || (kind == Kind::BitflipSweep && cfg.channel.is_none());
                if !bitflip || kind == Kind::WeakValue {
                    return config("sweep.parameter: p needs a bitflip channel");
                }
            }
            SweepParameter::Phi => {
                if cfg.states.as_ref().and_then(|s| s.preset).is_none() {
                    return config("sweep.parameter: phi needs a state preset");
                }
            }
            SweepParameter::G => {
                if !kind.uses_coupling() {
                    return config(format!(
                        "sweep.parameter: g is not used by kind {}",
                        kind.name()
                    ));
                }
            }
        }
    }
    Ok(())
}

/// Parameter values for every sweep point, validated for presence.
pub fn sweep_points(cfg: &ScenarioConfig) -> Result<Vec<Point>, CliError> {
    check_fields(cfg)?;
    let base_p = match &cfg.channel {
        Some(ChannelSpec::Bitflip { p }) => Some(*p),
        _ => None,
    };
    let base_phi = cfg.states.as_ref().and_then(|s| s.preset.and(s.phi));
    let base_g = cfg.coupling;
    let values = cfg.sweep.as_ref().map(|s| (s.parameter, s.values()));
    let n = values.as_ref().map_or(1, |(_, v)| v.len());
    let points: Vec<Point> = (0..n)
        .map(|index| {
            let mut pt = Point {
                index,
                p: base_p,
                phi: base_phi,
                g: base_g,
            };
            if let Some((param, v)) = &values {
                match param {
                    SweepParameter::P => pt.p = Some(v[index]),
                    SweepParameter::Phi => pt.phi = Some(v[index]),
                    SweepParameter::G => pt.g = Some(v[index]),
                }
            }
            pt
        })
        .collect();
    let first = points[0];
    if cfg.kind == Kind::BitflipSweep && first.p.is_none() {
        return config("channel: bitflip-sweep needs p, from a bitflip channel or a p sweep");
    }
    if cfg.kind.uses_coupling() && first.g.is_none() {
        return config(format!("coupling: required by kind {}", cfg.kind.name()));
    }
    Ok(points)
}

/// Everything a sweep point needs, built from the scenario.
struct Instance {
    boundary: Boundary,
    channel: Option<WChannel>,
    observable: Option<HermitianObservable>,
    coupling: Option<CouplingSpec>,
    probe: Option<GaussianProbe>,
    template: Option<EnvironmentDilation>,
    ensemble: Option<WeightedEnvEnsemble>,
}

fn instance(cfg: &ScenarioConfig, pt: &Point, settings: &Settings) -> Result<Instance, CliError> {
    let boundary = boundary(cfg, pt.phi)?;
    let dim = boundary.i.dim();
    let channel = match (&cfg.channel, cfg.kind) {
        (Some(spec), _) => Some(channel(spec, pt.p)?),
        (None, Kind::BitflipSweep) => Some(channel(&ChannelSpec::Bitflip { p: 0.0 }, pt.p)?),
        (None, _) => None,
    };
    if let Some(ch) = &channel {
        if ch.dim() != dim {
            return config(format!(
                "channel: dimension {} does not match states {dim}",
                ch.dim()
            ));
        }
    }
    let observable = match (&cfg.observable, cfg.kind) {
        (Some(spec), _) => Some(observable(spec)?),
        (None, Kind::GeometricPhase | Kind::BitflipSweep) => None,
        (None, kind) => return config(format!("observable: required by kind {}", kind.name())),
    };
    if let Some(a) = &observable {
        if a.dim() != dim {
            return config(format!(
                "observable: dimension {} does not match states {dim}",
                a.dim()
            ));
        }
    }
    if matches!(cfg.kind, Kind::GeometricPhase | Kind::BitflipSweep)
        && boundary.intermediate.is_none()
    {
        return config("states.intermediate: required for a geometric phase");
    }
    let (coupling, probe) = if cfg.kind.uses_coupling() {
        let a = observable.clone().expect("checked above");
        let g = pt.g.expect("checked in sweep_points");
        let coupling =
            CouplingSpec::new(g, a).map_err(|e| CliError::Config(format!("coupling: {e}")))?;
        let probe = GaussianProbe::new(cfg.probe_width.unwrap_or(1.0))
            .and_then(|p| p.with_points(settings.grid_points))
            .map_err(|e| CliError::Config(format!("probe_width: {e}")))?;
        (Some(coupling), Some(probe))
    } else {
        (None, None)
    };
    let (template, ensemble) = if cfg.kind == Kind::AveragedShift {
        let template = dilation(cfg.channel.as_ref().expect("checked"))?.expect("checked");
        let Some(entries) = &cfg.ensemble else {
            return config("ensemble: required by kind averaged-shift");
        };
        let entries = entries
            .iter()
            .enumerate()
            .map(|(k, e)| {
                Ok(EnsembleEntry {
                    e_i: ket(&format!("ensemble[{k}].e_i"), &e.e_i)?,
                    e_f: ket(&format!("ensemble[{k}].e_f"), &e.e_f)?,
                    weight: e.weight,
                })
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        let ensemble = WeightedEnvEnsemble::new(entries)
            .map_err(|e| CliError::Config(format!("ensemble: {e}")))?;
        (Some(template), Some(ensemble))
    } else {
        (None, None)
    };
    Ok(Instance {
        boundary,
        channel,
        observable,
        coupling,
        probe,
        template,
        ensemble,
    })
}

fn opt(x: Option<f64>) -> Field {
    x.map_or(Field::Null, Field::Real)
}

fn opt_angle(x: Option<f64>) -> Field {
    x.map_or(Field::Null, Field::Angle)
}

fn evaluate(cfg: &ScenarioConfig, pt: &Point, settings: &Settings) -> Result<Record, CliError> {
    let inst = instance(cfg, pt, settings)?;
    let b = &inst.boundary;
    let w = WOperator::from_states(&b.i, &b.f)?;
    let ew = match &inst.channel {
        Some(ch) => apply_to_w(ch, &w)?,
        None => w.clone(),
    };
    let p = if matches!(cfg.channel, Some(ChannelSpec::Bitflip { .. }))
        || cfg.kind == Kind::BitflipSweep
    {
        pt.p
    } else {
        None
    };
    let mut fields: Vec<(&'static str, Field)> = vec![("index", Field::Index(pt.index))];
    match cfg.kind {
        Kind::WeakValue | Kind::ChannelWeakValue => {
            let wv = weak_value_with_tolerance(
                &ew,
                inst.observable.as_ref().expect("built"),
                settings.tolerance,
            )?;
            if cfg.kind == Kind::ChannelWeakValue {
                fields.push(("p", opt(p)));
            }
            fields.push(("phi", opt_angle(pt.phi)));
            fields.push(("weak_value", Field::Complex(wv.value)));
            fields.push(("conditioning", Field::Real(wv.conditioning)));
            if cfg.kind == Kind::ChannelWeakValue {
                fields.push(("trace", Field::Complex(ew.trace())));
            }
        }
        Kind::ProbeShift => {
            let c = inst.coupling.as_ref().expect("built");
            let probe = inst.probe.as_ref().expect("built");
            let wv = weak_value_with_tolerance(&ew, &c.observable, settings.tolerance)?;
            let out = first_order_shifts_with_tolerance(&ew, c, probe, settings.tolerance)?;
            fields.extend([
                ("p", opt(p)),
                ("phi", opt_angle(pt.phi)),
                ("g", Field::Real(c.g)),
                ("weak_value", Field::Complex(wv.value)),
                ("delta_q", Field::Real(out.delta_q)),
                ("delta_p", Field::Real(out.delta_p)),
                ("norm", Field::Real(out.norm)),
            ]);
        }
        Kind::ProbeShiftExact => {
            let c = inst.coupling.as_ref().expect("built");
            let probe = inst.probe.as_ref().expect("built");
            let out = exact_shifts(&ew, c, probe)?;
            let first = first_order_shifts_with_tolerance(&ew, c, probe, settings.tolerance)?;
            fields.extend([
                ("p", opt(p)),
                ("phi", opt_angle(pt.phi)),
                ("g", Field::Real(c.g)),
                ("delta_q", Field::Real(out.delta_q)),
                ("delta_p", Field::Real(out.delta_p)),
                ("norm", Field::Real(out.norm)),
                ("first_order_delta_q", Field::Real(first.delta_q)),
                ("first_order_delta_p", Field::Real(first.delta_p)),
            ]);
        }
        Kind::AveragedShift => {
            let c = inst.coupling.as_ref().expect("built");
            let out = averaged_shifts(
                inst.ensemble.as_ref().expect("built"),
                inst.template.as_ref().expect("built"),
                &b.i,
                &b.f,
                c,
                inst.probe.as_ref().expect("built"),
            )?;
            fields.extend([
                ("phi", opt_angle(pt.phi)),
                ("g", Field::Real(c.g)),
                ("delta_q", Field::Real(out.delta_q)),
                ("delta_p", Field::Real(out.delta_p)),
                ("norm", Field::Real(out.norm)),
            ]);
        }
        Kind::GeometricPhase | Kind::BitflipSweep => {
            let path = PathSpec::new(
                b.i.clone(),
                b.f.clone(),
                b.intermediate.clone().expect("checked"),
            )?;
            let phase = match &inst.channel {
                Some(ch) => geometric_phase_channel(&path, ch)?,
                None => geometric_phase_pure(&path)?,
            };
            fields.extend([
                ("p", opt(p)),
                ("phi", opt_angle(pt.phi)),
                ("phase", Field::Angle(phase)),
            ]);
            if cfg.kind == Kind::BitflipSweep {
                let preset = cfg.states.as_ref().and_then(|s| s.preset).is_some();
                let closed = match (preset, p, pt.phi) {
                    (true, Some(p), Some(phi)) => Field::Angle(bit_flip_phase_closed_form(p, phi)?),
                    _ => Field::Null,
                };
                let proj =
                    HermitianObservable::projector(b.intermediate.as_ref().expect("checked"))?;
                let wv = weak_value_with_tolerance(&ew, &proj, settings.tolerance)?;
                fields.push(("closed_form_phase", closed));
                fields.push(("weak_value", Field::Complex(wv.value)));
            }
        }
    }
    for (name, field) in &fields {
        let finite = match field {
            Field::Real(x) | Field::Angle(x) => x.is_finite(),
            Field::Complex(z) => z.re.is_finite() && z.im.is_finite(),
            Field::Index(_) | Field::Null => true,
        };
        if !finite {
            return Err(CliError::NonFinite(name));
        }
    }
    Ok(Record { fields })
}

/// Builds every sweep point without evaluating it; returns the point count.
pub fn validate(cfg: &ScenarioConfig, settings: &Settings) -> Result<usize, CliError> {
    let points = sweep_points(cfg)?;
    for pt in &points {
        instance(cfg, pt, settings)?;
    }
    Ok(points.len())
}

/// Evaluates all sweep points (in parallel) and returns records in sweep
/// order. The first failing point, by index, decides the error.
pub fn run_scenario(cfg: &ScenarioConfig, settings: &Settings) -> Result<ScenarioResult, CliError> {
    let points = sweep_points(cfg)?;
    let records = points
        .par_iter()
        .map(|pt| evaluate(cfg, pt, settings))
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ScenarioResult {
        kind: cfg.kind,
        settings: *settings,
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{demo_bitflip, parse_config};

    fn run(text: &str) -> Result<ScenarioResult, CliError> {
        run_scenario(&parse_config(text).unwrap(), &Settings::default())
    }

    fn get(r: &Record, name: &str) -> Field {
        r.fields.iter().find(|(n, _)| *n == name).unwrap().1
    }

    #[test]
    fn z_on_ground_state() {
        let out = run(r#"{"kind": "weak-value", "states": {"pre": [[1,0],[0,0]], "post": [[1,0],[0,0]]}, "observable": "Z"}"#)
            .unwrap();
        assert_eq!(out.records.len(), 1);
        assert_eq!(
            get(&out.records[0], "weak_value"),
            Field::Complex(C64::new(1.0, 0.0))
        );
    }

    #[test]
    fn demo_phase_column_is_arctan() {
        let out = run_scenario(&demo_bitflip(), &Settings::default()).unwrap();
        assert_eq!(out.records.len(), 11);
        for (k, r) in out.records.iter().enumerate() {
            let p = k as f64 / 10.0;
            let Field::Angle(phase) = get(r, "phase") else {
                panic!()
            };
            assert!((phase - (1.0 - 2.0 * p).atan()).abs() < 1e-12, "p={p}");
        }
    }

    #[test]
    fn orthogonal_postselection_is_a_physics_error() {
        let err = run(r#"{"kind": "weak-value", "states": {"pre": [[1,0],[0,0]], "post": [[0,0],[1,0]]}, "observable": "X"}"#)
            .unwrap_err();
        assert_eq!(err.exit_code(), 3);
        assert!(err.to_string().starts_with("OrthogonalPostselection"));
    }

    #[test]
    fn invalid_inputs_are_config_errors() {
        for text in [
            r#"{"kind": "weak-value", "states": {"pre": [[0,0],[0,0]], "post": [[1,0],[0,0]]}, "observable": "Z"}"#,
            r#"{"kind": "weak-value", "states": {"pre": [[1,0]], "post": [[1,0],[0,0]]}, "observable": "Z"}"#,
            r#"{"kind": "weak-value", "states": {"pre": [[1,0],[0,0]], "post": [[1,0],[0,0]]}, "observable": [[[0,1],[0,0]],[[0,0],[1,0]]]}"#,
            r#"{"kind": "channel-weak-value", "states": {"preset": "paper-qubit-path", "phi": 1}, "observable": "Z", "channel": {"type": "bitflip", "p": 1.5}}"#,
            r#"{"kind": "bitflip-sweep", "states": {"preset": "paper-qubit-path", "phi": 1}, "sweep": {"parameter": "p", "start": 0, "stop": 1, "steps": 0}}"#,
            r#"{"kind": "weak-value", "states": {"preset": "paper-qubit-path", "phi": 1}, "observable": "Z", "coupling": 0.1}"#,
            r#"{"kind": "probe-shift", "states": {"preset": "paper-qubit-path", "phi": 1}, "observable": "P0"}"#,
            r#"{"kind": "probe-shift", "states": {"preset": "paper-qubit-path", "phi": 1}, "observable": "P0", "coupling": 0.1, "probe_width": -1}"#,
        ] {
            let err = run(text).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{text}: {err}");
        }
    }

    #[test]
    fn sweep_of_phi_and_g() {
        let out = run(
            r#"{"kind": "probe-shift", "states": {"preset": "paper-qubit-path", "phi": 0.5}, "observable": "P0",
                "coupling": 0.01, "sweep": {"parameter": "g", "start": 0.01, "stop": 0.05, "steps": 5}}"#,
        )
        .unwrap();
        assert_eq!(out.records.len(), 5);
        for r in &out.records {
            let (Field::Real(g), Field::Real(dq)) = (get(r, "g"), get(r, "delta_q")) else {
                panic!()
            };
            assert!((dq - g / 2.0).abs() < 1e-15);
        }
        let out = run(
            r#"{"kind": "geometric-phase", "states": {"preset": "paper-qubit-path"},
                "sweep": {"parameter": "phi", "start": -1, "stop": 1, "steps": 3}}"#,
        )
        .unwrap();
        let Field::Angle(phase) = get(&out.records[0], "phase") else {
            panic!()
        };
        assert!((phase - 0.5).abs() < 1e-12);
    }

    #[test]
    fn records_share_a_schema_per_kind() {
        let out = run(
            r#"{"kind": "channel-weak-value", "states": {"preset": "paper-qubit-path", "phi": 0.3}, "observable": "P0",
                "channel": {"type": "bitflip", "p": 0.2}, "sweep": {"parameter": "p", "start": 0, "stop": 1, "steps": 4}}"#,
        )
        .unwrap();
        let names: Vec<_> = out.records[0].fields.iter().map(|(n, _)| *n).collect();
        assert_eq!(
            names,
            ["index", "p", "phi", "weak_value", "conditioning", "trace"]
        );
        assert!(out.records.iter().all(|r| r
            .fields
            .iter()
            .map(|(n, _)| *n)
            .eq(names.iter().copied())));
    }

    #[test]
    fn parallel_evaluation_is_order_stable() {
        let cfg = parse_config(
            r#"{"kind": "probe-shift-exact", "states": {"preset": "paper-qubit-path", "phi": 1.0}, "observable": "P0",
                "coupling": 0.1, "channel": {"type": "bitflip", "p": 0.3},
                "sweep": {"parameter": "g", "start": 0.001, "stop": 0.2, "steps": 16}}"#,
        )
        .unwrap();
        let a = run_scenario(&cfg, &Settings::default()).unwrap();
        let b = run_scenario(&cfg, &Settings::default()).unwrap();
        assert_eq!(a, b);
        for (k, r) in a.records.iter().enumerate() {
            assert_eq!(get(r, "index"), Field::Index(k));
        }
    }

    #[test]
    fn averaged_shift_from_config() {
        let id4 = r#"[[[1,0],[0,0],[0,0],[0,0]],[[0,0],[1,0],[0,0],[0,0]],[[0,0],[0,0],[1,0],[0,0]],[[0,0],[0,0],[0,0],[1,0]]]"#;
        let text = format!(
            r#"{{"kind": "averaged-shift", "states": {{"preset": "paper-qubit-path", "phi": 0.7}}, "observable": "P0",
                "coupling": 0.01,
                "channel": {{"type": "dilation", "dim_s": 2, "dim_e": 2, "u": {id4}, "v": {id4},
                            "e_i": [[1,0],[0,0]], "e_f": [[1,0],[0,0]]}},
                "ensemble": [{{"e_i": [[1,0],[0,0]], "e_f": [[1,0],[0,0]], "weight": 2}}]}}"#
        );
        let out = run(&text).unwrap();
        let Field::Real(dq) = get(&out.records[0], "delta_q") else {
            panic!()
        };
        assert!((dq - 0.005).abs() < 1e-15);
    }
}
