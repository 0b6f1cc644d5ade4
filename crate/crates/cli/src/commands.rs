use std::fmt;

use hingelab_core::geodesic_space::{self, OrientedGeodesic, SEA_URCHIN_TOL};
use hingelab_core::hinge::{self, curve_hausdorff_profile, default_scale_samples};
use hingelab_core::json::{
    array_of, field, is_exact_document, rationals_from_json, rationals_to_json, scalars_from_json, scalars_to_json,
    usize_field, FromJson, ToJson,
};
use hingelab_core::relation::{induced_operator, quadratic_form, scale};
use hingelab_core::satake::{flag_forms_to_hinge, hinge_to_flag_forms, is_positive_hinge, spd_cartan_limit};
use hingelab_core::sky::{self, apartment_chambers, common_apartment, connecting_flag, simplex_intersection, Vertex};
use hingelab_core::velocity::{self, face_of, face_closure_leq, lambda_map, simplex_project, VelocityLimit};
use hingelab_core::{
    classify, hybrid, relation_parts, Error, Flag, GeodesicFromBase, Hinge, LinearRelation, Matrix, PathDescriptor,
    PolySequence, Rational, Scalar, SkyPoint, SpdPoint, Subspace, TreePartition,
};
use serde_json::{json, Value};

pub const USAGE: &str = "\
usage: hinge-lab <verb> <action> [--in FILE]... [--out FILE] [--format json|text|dot] [--tol X] [--exact]

  relation  parts | classify | scale | operator | form | transpose
  hinge     validate | admissible | limit | hausdorff | estimate
  satake    limit | positive | flag-forms | hinge
  velocity  limit | karpelevich | trees | face | leq | project
  sky       from-geodesic | connect | position | apartment | chambers | intersection | angle | tits | graph
  hybrid    do-limit | project | geodesic | check | karpelevich
  geodesic  stratum | dimension | limit | urchin

Two-operand actions take two --in files or one object {\"p\": ..., \"q\": ...}.
Exit codes: 0 success, 1 domain error, 2 input, schema or usage error.";

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
    Schema(String),
    Domain(Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Domain(_) => 1,
            _ => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(s) => write!(f, "{s}"),
            CliError::Io(s) => write!(f, "{s}"),
            CliError::Schema(s) => write!(f, "schema: {s}"),
            CliError::Domain(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse(s) => CliError::Schema(s),
            other => CliError::Domain(other),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

pub struct Context {
    pub tol: f64,
    pub exact: bool,
}

pub struct Output {
    pub value: Value,
    pub dot: Option<String>,
}

impl From<Value> for Output {
    fn from(value: Value) -> Self {
        Output { value, dot: None }
    }
}

const ACTIONS: &[(&str, &[&str])] = &[
    ("relation", &["parts", "classify", "scale", "operator", "form", "transpose"]),
    ("hinge", &["validate", "admissible", "limit", "hausdorff", "estimate"]),
    ("satake", &["limit", "positive", "flag-forms", "hinge"]),
    ("velocity", &["limit", "karpelevich", "trees", "face", "leq", "project"]),
    (
        "sky",
        &["from-geodesic", "connect", "position", "apartment", "chambers", "intersection", "angle", "tits", "graph"],
    ),
    ("hybrid", &["do-limit", "project", "geodesic", "check", "karpelevich"]),
    ("geodesic", &["stratum", "dimension", "limit", "urchin"]),
];

pub fn check(verb: &str, action: &str) -> CliResult<()> {
    let actions = ACTIONS
        .iter()
        .find(|(v, _)| *v == verb)
        .map(|(_, a)| *a)
        .ok_or_else(|| CliError::Usage(format!("unknown verb \"{verb}\"")))?;
    if !actions.contains(&action) {
        return Err(CliError::Usage(format!("unknown action \"{action}\" for {verb}")));
    }
    Ok(())
}

pub fn dispatch(verb: &str, action: &str, inputs: &[Value], ctx: &Context) -> CliResult<Output> {
    check(verb, action)?;
    let exact = inputs.iter().all(is_exact_document);
    if ctx.exact && !exact {
        return Err(CliError::Schema("--exact given but the input has non-integral numbers".into()));
    }
    if exact {
        run::<Rational>(verb, action, inputs, ctx)
    } else {
        run::<f64>(verb, action, inputs, ctx)
    }
}

fn run<F: Scalar>(verb: &str, action: &str, inputs: &[Value], ctx: &Context) -> CliResult<Output> {
    match verb {
        "relation" => relation_cmd::<F>(action, one(inputs)?),
        "hinge" => hinge_cmd::<F>(action, one(inputs)?, ctx),
        "satake" => satake_cmd::<F>(action, one(inputs)?),
        "velocity" => velocity_cmd::<F>(action, inputs),
        "sky" => sky_cmd::<F>(action, inputs),
        "hybrid" => hybrid_cmd::<F>(action, one(inputs)?),
        "geodesic" => geodesic_cmd::<F>(action, one(inputs)?, ctx),
        _ => unreachable!("verbs are checked in dispatch"),
    }
}

fn one(inputs: &[Value]) -> CliResult<&Value> {
    match inputs {
        [v] => Ok(v),
        _ => Err(CliError::Usage(format!("expected one input, got {}", inputs.len()))),
    }
}

fn two(inputs: &[Value]) -> CliResult<(&Value, &Value)> {
    match inputs {
        [p, q] => Ok((p, q)),
        [v] => Ok((field(v, "p")?, field(v, "q")?)),
        _ => Err(CliError::Usage(format!("expected two operands, got {} inputs", inputs.len()))),
    }
}

fn decode<T: FromJson>(v: &Value) -> CliResult<T> {
    Ok(T::from_json(v)?)
}

/// Reads `key` if present, otherwise the whole document.
fn inner<'a>(v: &'a Value, key: &str) -> &'a Value {
    v.get(key).unwrap_or(v)
}

fn f64_list(v: &Value, key: &str, default: Vec<f64>) -> CliResult<Vec<f64>> {
    match v.get(key) {
        Some(x) => Ok(scalars_from_json(x)?),
        None => Ok(default),
    }
}

fn relation_cmd<F: Scalar>(action: &str, v: &Value) -> CliResult<Output> {
    let p: LinearRelation<F> = decode(inner(v, "relation"))?;
    let out = match action {
        "parts" => relation_parts(&p)?.to_json(),
        "classify" => classify(&p).to_json(),
        "scale" => {
            let lambda = F::from_json(field(v, "lambda")?)?;
            scale(&lambda, &p)?.to_json()
        }
        "operator" => induced_operator(&p)?.to_json(),
        "form" => quadratic_form(&p)?.to_json(),
        "transpose" => p.transpose()?.to_json(),
        _ => unreachable!(),
    };
    Ok(out.into())
}

fn hinge_cmd<F: Scalar>(action: &str, v: &Value, ctx: &Context) -> CliResult<Output> {
    let out = match action {
        "validate" => decode::<Hinge<F>>(v)?.to_json(),
        "admissible" => {
            let h: Hinge<F> = decode(v)?;
            let set = hinge::admissible_set(&h)?;
            let seq: Vec<Value> = set.sequence().iter().map(|r| r.to_json()).collect();
            json!({"size": set.len(), "relations": seq})
        }
        "limit" => {
            let path: hinge::CartanPath<F> = decode(inner(v, "path"))?;
            hinge::cartan_limit(&path)?.to_json()
        }
        "hausdorff" => {
            let path: hinge::CartanPath<F> = decode(field(v, "path")?)?;
            let h = hinge::cartan_limit(&path)?;
            let times = f64_list(v, "times", vec![5.0, 10.0, 20.0, 40.0])?;
            let scales = f64_list(v, "scales", default_scale_samples())?;
            let prof = curve_hausdorff_profile(&h, &path, &times, &scales)?;
            json!({"hinge": h.to_json(), "times": times, "distances": prof})
        }
        "estimate" => {
            let samples = array_of(field(v, "samples")?)?
                .iter()
                .map(Matrix::<f64>::from_json)
                .collect::<Result<Vec<_>, _>>()?;
            hinge::numeric_hinge_estimate(&samples, ctx.tol)?.to_json()
        }
        _ => unreachable!(),
    };
    Ok(out.into())
}

fn satake_cmd<F: Scalar>(action: &str, v: &Value) -> CliResult<Output> {
    let out = match action {
        "limit" => {
            let frame: Matrix<F> = decode(field(v, "frame")?)?;
            let lambda = rationals_from_json(field(v, "lambda")?)?;
            spd_cartan_limit(&frame, &lambda)?.to_json()
        }
        "positive" => json!({"positive": is_positive_hinge(&decode::<Hinge<F>>(v)?)}),
        "flag-forms" => hinge_to_flag_forms(&decode::<Hinge<F>>(v)?)?.to_json(),
        "hinge" => flag_forms_to_hinge::<F>(&decode(v)?)?.to_json(),
        _ => unreachable!(),
    };
    Ok(out.into())
}

fn velocity_cmd<F: Scalar>(action: &str, inputs: &[Value]) -> CliResult<Output> {
    let out = match action {
        "limit" => match velocity::simple_velocity_limit(&decode(one(inputs)?)?) {
            VelocityLimit::Point(p) => json!({"kind": "point", "mu": rationals_to_json(&p.mu)}),
            VelocityLimit::Bounded => json!({"kind": "bounded"}),
        },
        "karpelevich" => {
            let seq: PolySequence = decode(one(inputs)?)?;
            let point = velocity::karpelevich_limit(&seq);
            let tree = point.tree();
            json!({"tree": tree.to_json(), "face": face_of(&tree).to_json(), "point": point.to_json()})
        }
        "trees" => {
            let v = one(inputs)?;
            let trees = velocity::enumerate_tree_partitions(usize_field(v, "k")?, usize_field(v, "l")?)?;
            let list: Vec<Value> = trees
                .iter()
                .map(|t| json!({"tree": t.to_json(), "face": face_of(t).to_json()}))
                .collect();
            json!({"count": trees.len(), "trees": list})
        }
        "face" => face_of(&decode::<TreePartition>(one(inputs)?)?).to_json(),
        "leq" => {
            let (p, q) = two(inputs)?;
            json!({"leq": face_closure_leq(&decode(p)?, &decode(q)?)?})
        }
        "project" => {
            let v = one(inputs)?;
            let a: SpdPoint<F> = decode(inner(v, "point"))?;
            let s = lambda_map(&a)?;
            json!({"spectrum": s.to_json(), "velocity": simplex_project(&s)?.to_json()})
        }
        _ => unreachable!(),
    };
    Ok(out.into())
}

fn sky_cmd<F: Scalar>(action: &str, inputs: &[Value]) -> CliResult<Output> {
    let out: Output = match action {
        "from-geodesic" => sky::sky_from_geodesic(&decode::<GeodesicFromBase<F>>(one(inputs)?)?)?
            .to_json()
            .into(),
        "connect" => {
            let v = one(inputs)?;
            let a: Matrix<F> = decode(field(v, "matrix")?)?;
            let lambda = rationals_from_json(field(v, "lambda")?)?;
            let flag = connecting_flag(&a, &lambda)?;
            let g = sky::connecting_geodesic_limit(&a.to_f64(), &lambda)?;
            json!({"flag": flag.to_json(), "geodesic": g.to_json()}).into()
        }
        "position" => {
            let (p, q) = two(inputs)?;
            let w = sky::relative_position(&decode::<Flag<F>>(p)?, &decode::<Flag<F>>(q)?)?;
            json!({"permutation": w}).into()
        }
        "apartment" => {
            let (p, q) = two(inputs)?;
            let a = common_apartment(&decode::<Flag<F>>(p)?, &decode::<Flag<F>>(q)?)?;
            json!({"frame": a.frame().to_json()}).into()
        }
        "chambers" => {
            let frame: Matrix<F> = decode(inner(one(inputs)?, "frame"))?;
            let flags: Vec<Value> = apartment_chambers(&frame)?.iter().map(|f| f.to_json()).collect();
            json!({"count": flags.len(), "chambers": flags}).into()
        }
        "intersection" => {
            let (p, q) = two(inputs)?;
            match simplex_intersection(&decode::<Flag<F>>(p)?, &decode::<Flag<F>>(q)?)? {
                Some(face) => json!({"breaks": face.breaks, "dim": face.dim}),
                None => Value::Null,
            }
            .into()
        }
        "angle" => {
            let (p, q) = two(inputs)?;
            let a = sky::angle_at_base(&decode::<GeodesicFromBase<F>>(p)?, &decode::<GeodesicFromBase<F>>(q)?)?;
            json!({"angle": a}).into()
        }
        "tits" => {
            let (p, q) = two(inputs)?;
            let d = sky::tits_distance(&decode::<SkyPoint<F>>(p)?, &decode::<SkyPoint<F>>(q)?)?;
            json!({"distance": d}).into()
        }
        "graph" => graph_cmd(one(inputs)?)?,
        _ => unreachable!(),
    };
    Ok(out)
}

fn graph_cmd(v: &Value) -> CliResult<Output> {
    if !is_exact_document(v) {
        return Err(CliError::Schema("the incidence graph needs exact line and plane spans".into()));
    }
    let spans = |key: &str, dim: usize| -> CliResult<Vec<Subspace<Rational>>> {
        array_of(field(v, key)?)?
            .iter()
            .map(|s| {
                let vs = array_of(s)?
                    .iter()
                    .map(rationals_from_json)
                    .collect::<Result<Vec<_>, _>>()?;
                let sub = Subspace::span(3, &vs)?;
                if sub.dim() != dim {
                    return Err(CliError::Schema(format!("a {key} entry spans dimension {}", sub.dim())));
                }
                Ok(sub)
            })
            .collect()
    };
    let g = sky::n3_incidence_graph(&spans("lines", 1)?, &spans("planes", 2)?)?;
    let mut value = g.to_json();
    let verts = g.vertices();
    let mut dist = Vec::new();
    for (i, &a) in verts.iter().enumerate() {
        for &b in &verts[i + 1..] {
            if let Some(d) = sky::chain_infimum_on_graph(&g, a, b) {
                dist.push(json!({"a": vertex_json(a), "b": vertex_json(b), "distance": d}));
            }
        }
    }
    value["distances"] = Value::Array(dist);
    Ok(Output {
        value,
        dot: Some(g.to_dot()),
    })
}

fn vertex_json(v: Vertex) -> Value {
    match v {
        Vertex::Line(i) => json!(["line", i]),
        Vertex::Plane(i) => json!(["plane", i]),
    }
}

fn hybrid_cmd<F: Scalar>(action: &str, v: &Value) -> CliResult<Output> {
    let out = match action {
        "do-limit" => match hybrid::do_limit(&decode::<hybrid::HybridInput<F>>(v)?)? {
            hybrid::DoLimit::Boundary(p) => {
                let mut o = p.to_json();
                o["kind"] = json!("boundary");
                o
            }
            hybrid::DoLimit::Interior(x) => json!({"kind": "interior", "point": x.to_json()}),
        },
        "project" => {
            let p: hybrid::DynkinOlshanetskyPoint<F> = decode(v)?;
            let data = hybrid::do_project_to_sky(&p)?;
            json!({"data": data.to_json(), "sky": data.to_sky_point()?.to_json()})
        }
        "geodesic" => {
            let p = hybrid::geodesic_do_limit(&decode::<GeodesicFromBase<F>>(v)?)?;
            p.to_json()
        }
        "check" => json!({"geodesic_limit": hybrid::is_geodesic_limit(&decode::<hybrid::DynkinOlshanetskyPoint<F>>(v)?)}),
        "karpelevich" => {
            let frame: Matrix<F> = decode(field(v, "frame")?)?;
            let seq: PolySequence = decode(field(v, "exponents")?)?;
            hybrid::karpelevich_limit_point(&frame, &seq)?.to_json()
        }
        _ => unreachable!(),
    };
    Ok(out.into())
}

fn geodesic_cmd<F: Scalar>(action: &str, v: &Value, ctx: &Context) -> CliResult<Output> {
    let out = match action {
        "stratum" => {
            let mu: Vec<Rational> = rationals_from_json(inner(v, "mu"))?;
            let s = geodesic_space::stratum_of(&velocity::VelocityPoint { mu }, 0.0)?;
            stratum_json(&s)?
        }
        "dimension" => stratum_json(&decode(v)?)?,
        "limit" => {
            let path: PathDescriptor<F> = decode(v)?;
            let n = path.lambda().len();
            let base = match v.get("base") {
                Some(b) => decode::<SpdPoint<f64>>(b)?,
                None => SpdPoint::new(Matrix::identity(n))?,
            };
            let times = f64_list(v, "times", vec![10.0, 20.0, 40.0])?;
            let lim = geodesic_space::sequence_to_geodesic_limit(&path, &base, &times, ctx.tol)?;
            json!({
                "geodesic": lim.geodesic.to_json(),
                "endpoint": lim.geodesic.endpoint().to_json(),
                "step1_residuals": lim.step1_residuals,
                "step2_residuals": lim.step2_residuals,
            })
        }
        "urchin" => {
            let g: OrientedGeodesic<f64> = decode(inner(v, "geodesic"))?;
            let max_den = v.get("max_den").and_then(Value::as_u64).unwrap_or(1_000_000);
            let tol = v.get("tol").and_then(Value::as_f64).unwrap_or(SEA_URCHIN_TOL);
            let exact_input = is_exact_document(inner(v, "geodesic"));
            let pass = exact_input || geodesic_space::is_sea_urchin_point(&g, max_den, tol);
            json!({"sea_urchin": pass, "mu": scalars_to_json(&g.velocity().mu)})
        }
        _ => unreachable!(),
    };
    Ok(out.into())
}

fn stratum_json(s: &geodesic_space::StratumDescriptor) -> CliResult<Value> {
    Ok(json!({
        "stratum": s.to_json(),
        "block_sizes": s.block_sizes(),
        "stabilizer": geodesic_space::stabilizer(s).to_json(),
        "dimension": geodesic_space::stratum_dimension(s)?,
    }))
}
