use std::fs;
use std::path::Path;

use serde_json::{json, Value};

use dirinfo::compression::{build_code, decode, encode, expected_length, from_bytes, to_bytes};
use dirinfo::gambling::{
    growth, growth_increase_after, growth_mc, lookahead_delta, mismatched_growth_penalty, optimal_bets, MarginalBets,
    Odds, OddsFile,
};
use dirinfo::hyptest::{
    di_rate, error_probs, error_probs_mc, exponent_estimates, neyman_pearson_alpha, neyman_pearson_beta,
    ExponentPoint,
};
use dirinfo::info::{self, info_report, Direction, Quantity, RateOptions};
use dirinfo::portfolio::{growth_gap_vs_directed_info, MarketFile, StockMarketModel};
use dirinfo::{fixtures, Error, JointProcessModel, SequencePair};

use crate::output::{append_csv, config_hash, to_json_text, write_atomic, Cell, Table};
use crate::{
    Cli, CliError, Command, CompressArgs, DirectionArg, Example1Args, GambleArgs, HyptestArgs, InfoArgs, ModeArg,
    PortfolioArgs,
};

type Res<T> = Result<T, CliError>;

/// Everything a subcommand produced, written only after it all succeeded.
struct Outcome {
    json: Value,
    table: Option<Table>,
    /// Input files, for the config hash.
    inputs: Vec<(String, Vec<u8>)>,
}

pub fn run(cli: &Cli) -> Res<()> {
    if !(cli.tol > 0.0) {
        return Err(Error::Argument(format!("--tol must be positive, got {}", cli.tol)).into());
    }
    let out = match &cli.command {
        Command::Info(a) => info_cmd(cli, a)?,
        Command::Gamble(a) => gamble_cmd(cli, a)?,
        Command::Portfolio(a) => portfolio_cmd(a)?,
        Command::Compress(a) => compress_cmd(a)?,
        Command::Hyptest(a) => hyptest_cmd(cli, a)?,
        Command::Example1(a) => example1_cmd(a)?,
    };
    if let Some(path) = &cli.csv {
        let table = out.table.as_ref().ok_or_else(|| Error::Argument("this subcommand has no CSV output".into()))?;
        let config = json!({ "command": &cli.command, "seed": cli.seed, "tol": cli.tol });
        append_csv(path, table, &config_hash(&config, &out.inputs))?;
    }
    let text = to_json_text(&out.json);
    if let Some(path) = &cli.json {
        write_atomic(path, text.as_bytes())?;
    }
    if !cli.quiet {
        print!("{text}");
    }
    Ok(())
}

fn read(path: &Path) -> Res<Vec<u8>> {
    fs::read(path).map_err(|e| CliError::Io { path: path.display().to_string(), message: e.to_string() })
}

fn input(path: &Path, inputs: &mut Vec<(String, Vec<u8>)>) -> Res<String> {
    let bytes = read(path)?;
    let text = String::from_utf8(bytes.clone()).map_err(|_| Error::Parse(format!("{} is not UTF-8", path.display())))?;
    inputs.push((path.display().to_string(), bytes));
    Ok(text)
}

fn load_model(path: &Path, inputs: &mut Vec<(String, Vec<u8>)>) -> Res<(JointProcessModel, Option<Value>)> {
    let text = input(path, inputs)?;
    let model = JointProcessModel::from_json(&text)?;
    let meta = serde_json::from_str::<Value>(&text).ok().and_then(|v| v.get("meta").cloned());
    Ok((model, meta))
}

/// Whitespace- or comma-separated symbol indices.
fn parse_symbols(text: &str, what: &Path) -> Res<Vec<usize>> {
    text.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().map_err(|_| Error::Parse(format!("{}: bad symbol {t:?}", what.display())).into()))
        .collect()
}

fn one_or_many(mut v: Vec<Value>) -> Value {
    if v.len() == 1 {
        v.pop().unwrap()
    } else {
        Value::Array(v)
    }
}

fn direction(d: DirectionArg) -> Direction {
    match d {
        DirectionArg::XToY => Direction::XToY,
        DirectionArg::YToX => Direction::YToX,
    }
}

fn info_cmd(cli: &Cli, a: &InfoArgs) -> Res<Outcome> {
    let mut inputs = Vec::new();
    let (model, _) = load_model(&a.model, &mut inputs)?;
    let dir = direction(a.direction);
    let quantities: Vec<(String, Quantity)> = a
        .quantity
        .iter()
        .map(|q| Ok((q.clone(), Quantity::parse(q, dir, a.delay)?)))
        .collect::<Res<_>>()?;
    let mut rates = serde_json::Map::new();
    let mut rate_of = Vec::new();
    for (name, q) in &quantities {
        let r = if a.rate { Some(info::rate(&model, *q, RateOptions { tol: cli.tol, ..RateOptions::default() })?) } else { None };
        if let Some(r) = r {
            rates.insert(name.clone(), serde_json::to_value(r).expect("rate serializes"));
        }
        rate_of.push(r.map(|r| r.value));
    }
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    for &n in &a.n {
        let report = info_report(&model, n)?;
        let mut values = serde_json::Map::new();
        for ((name, q), rate) in quantities.iter().zip(&rate_of) {
            let v = q.evaluate(&model, n)?;
            values.insert(name.clone(), json!(v));
            rows.push(vec![
                Cell::Int(n),
                Cell::Text(name.clone()),
                Cell::Text(serde_json::to_value(dir).unwrap().as_str().unwrap().to_string()),
                Cell::Int(a.delay),
                Cell::Float(v),
                Cell::from(*rate),
            ]);
        }
        let mut obj = serde_json::to_value(&report).expect("report serializes");
        obj["conservation_residual"] = json!(report.conservation_residual());
        obj["quantities"] = Value::Object(values);
        reports.push(obj);
    }
    let mut json = one_or_many(reports);
    if a.rate {
        json = json!({ "reports": json, "rates": rates });
    }
    Ok(Outcome {
        json,
        table: Some(Table { header: &["n", "quantity", "direction", "delay", "value", "rate"], rows }),
        inputs,
    })
}

fn gamble_cmd(cli: &Cli, a: &GambleArgs) -> Res<Outcome> {
    let mut inputs = Vec::new();
    let (model, meta) = load_model(&a.model, &mut inputs)?;
    let meta_warmup = meta.as_ref().and_then(|m| m.get("warmup")).and_then(Value::as_u64).map(|w| w as usize);
    let warmup = a.warmup.or(meta_warmup).unwrap_or(0);
    let target = meta.as_ref().and_then(|m| m.get("target_rate")).and_then(Value::as_f64);
    let custom_odds = if a.odds == "fair" {
        None
    } else {
        let text = input(Path::new(&a.odds), &mut inputs)?;
        let file: OddsFile = serde_json::from_str(&text).map_err(|e| Error::Parse(format!("odds JSON: {e}")))?;
        Some(Odds::from_file(&file)?)
    };
    if custom_odds.is_some() && warmup > 0 {
        return Err(
            Error::Unsupported("custom odds are evaluated from the first race; pass --warmup 0".into()).into()
        );
    }
    let odds = custom_odds.clone().unwrap_or_else(|| Odds::fair(model.x_size()));
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    for &n in &a.n {
        let (with, without, di_rate, penalty, std_error) = match a.mode {
            ModeArg::Exact if custom_odds.is_none() => {
                let g = growth_increase_after(&model, warmup, n)?;
                let p = mismatched_growth_penalty(&model, n)?.penalty;
                (g.w_star_with_si, g.w_star_no_si, g.di_rate, Some(p), None)
            }
            ModeArg::Exact => {
                let w = growth(&model, &optimal_bets(&model), &odds, n)?.growth;
                let wo = growth(&model, &MarginalBets::exact(&model, n)?, &odds, n)?.growth;
                let di = info::directed_info(&model, n, Direction::YToX, 0)? / n as f64;
                (w, wo, di, Some(mismatched_growth_penalty(&model, n)?.penalty), None)
            }
            ModeArg::Mc => {
                // Both gamblers see the same sampled paths.
                let w = growth_mc(&model, &optimal_bets(&model), &odds, n, a.replicas, cli.seed)?;
                let wo = growth_mc(&model, &MarginalBets::filtered(&model), &odds, n, a.replicas, cli.seed)?;
                let q = Quantity::DirectedInfo { direction: Direction::YToX, delay: 0 };
                let di = info::rate(&model, q, RateOptions { tol: cli.tol, ..RateOptions::default() })?.value;
                (w.growth, wo.growth, di, None, w.std_error.zip(wo.std_error))
            }
        };
        let delta = (with - without) / n as f64;
        rows.push(vec![
            Cell::Int(n),
            Cell::Float(with),
            Cell::Float(without),
            Cell::Float(delta),
            Cell::Float(di_rate),
            Cell::from(penalty),
        ]);
        reports.push(json!({
            "n": n,
            "mode": a.mode,
            "warmup": if a.mode == ModeArg::Exact { warmup } else { 0 },
            "w_star_with_si": with,
            "w_star_no_si": without,
            "delta_w": delta,
            "di_rate": di_rate,
            "penalty": penalty,
            "std_errors": std_error.map(|(a, b)| json!([a, b])),
            "target_rate": target,
        }));
    }
    let mut json = one_or_many(reports);
    if let Some(k) = a.lookahead {
        json = json!({ "reports": json, "lookahead": { "k": k, "delta_w": lookahead_delta(&model, k)? } });
    }
    Ok(Outcome {
        json,
        table: Some(Table {
            header: &["n", "W_star_with_si", "W_star_no_si", "delta_W", "di_rate", "penalty"],
            rows,
        }),
        inputs,
    })
}

fn portfolio_cmd(a: &PortfolioArgs) -> Res<Outcome> {
    let mut inputs = Vec::new();
    let text = input(&a.market, &mut inputs)?;
    let file: MarketFile = serde_json::from_str(&text).map_err(|e| Error::Parse(format!("market JSON: {e}")))?;
    let market = StockMarketModel::from_file(&file)?;
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    for &n in &a.n {
        let r = growth_gap_vs_directed_info(&market, n)?;
        rows.push(vec![
            Cell::Int(n),
            Cell::Float(r.w_with_si),
            Cell::Float(r.w_no_si),
            Cell::Float(r.gap),
            Cell::Float(r.directed_info),
            Cell::Bool(r.bound_ok),
        ]);
        reports.push(serde_json::to_value(r).expect("report serializes"));
    }
    Ok(Outcome {
        json: one_or_many(reports),
        table: Some(Table { header: &["n", "W_with_si", "W_no_si", "gap", "directed_info", "bound_ok"], rows }),
        inputs,
    })
}

fn single_n(a: &CompressArgs) -> Res<usize> {
    match a.n.as_slice() {
        [n] => Ok(*n),
        _ => Err(Error::Argument("--encode and --decode take a single --n".into()).into()),
    }
}

fn compress_cmd(a: &CompressArgs) -> Res<Outcome> {
    let mut inputs = Vec::new();
    let (model, _) = load_model(&a.model, &mut inputs)?;
    if let Some(files) = &a.encode {
        let n = single_n(a)?;
        let x = parse_symbols(&input(&files[0], &mut inputs)?, &files[0])?;
        let y = parse_symbols(&input(&files[1], &mut inputs)?, &files[1])?;
        let pair = SequencePair::new(x, y)?;
        if pair.len() != n {
            return Err(Error::Argument(format!("sequences have length {}, --n is {n}", pair.len())).into());
        }
        let bits = encode(&build_code(&model, n)?, &pair)?;
        let bytes = to_bytes(&bits);
        write_atomic(a.out.as_ref().expect("clap requires --out"), &bytes)?;
        return Ok(Outcome { json: json!({ "n": n, "bits": bits.len(), "bytes": bytes.len() }), table: None, inputs });
    }
    if let Some(files) = &a.decode {
        let n = single_n(a)?;
        let bits = from_bytes(&read(&files[0])?)?;
        let y = parse_symbols(&input(&files[1], &mut inputs)?, &files[1])?;
        if y.len() != n {
            return Err(Error::Argument(format!("side information has length {}, --n is {n}", y.len())).into());
        }
        let x = decode(&build_code(&model, n)?, &bits, &y)?;
        let mut text = x.iter().map(usize::to_string).collect::<Vec<_>>().join(" ");
        text.push('\n');
        write_atomic(a.out.as_ref().expect("clap requires --out"), text.as_bytes())?;
        return Ok(Outcome { json: json!({ "n": n, "x": x }), table: None, inputs });
    }
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    for &n in &a.n {
        let r = expected_length(&model, &build_code(&model, n)?, n)?;
        rows.push(vec![
            Cell::Int(n),
            Cell::Float(r.expected_length_bits),
            Cell::Float(r.entropy_bound_bits),
            Cell::Float(r.redundancy_bits),
            Cell::Bool(r.dyadic_exact),
        ]);
        reports.push(serde_json::to_value(r).expect("report serializes"));
    }
    Ok(Outcome {
        json: one_or_many(reports),
        table: Some(Table { header: &["n", "expected_len", "entropy_bound", "redundancy", "dyadic_exact"], rows }),
        inputs,
    })
}

fn per_symbol(err: f64, n: usize) -> f64 {
    -err.log2() / n as f64
}

fn hyptest_cmd(cli: &Cli, a: &HyptestArgs) -> Res<Outcome> {
    let mut inputs = Vec::new();
    let (model, _) = load_model(&a.model, &mut inputs)?;
    let mut ns = a.n_list.clone();
    ns.sort_unstable();
    ns.dedup();
    let rate = di_rate(&model, cli.tol)?;
    // Neyman-Pearson optima need the enumeration; in Monte Carlo mode they
    // are left blank beyond the guard.
    let np_point = |n: usize| -> Res<Option<ExponentPoint>> {
        let b = neyman_pearson_beta(&model, n, a.epsilon);
        let b = match (b, a.mode) {
            (Err(Error::Capacity { .. }), ModeArg::Mc) => return Ok(None),
            (b, _) => b?,
        };
        let al = neyman_pearson_alpha(&model, n, a.epsilon)?;
        Ok(Some(ExponentPoint {
            n,
            beta_np: b.optimum,
            beta_np_randomized: b.optimum_randomized,
            alpha_np: al.optimum,
            alpha_np_randomized: al.optimum_randomized,
        }))
    };
    let exponents = if ns.len() >= 2 && a.mode == ModeArg::Exact {
        Some(exponent_estimates(&model, &ns, a.epsilon, cli.tol)?)
    } else {
        None
    };
    let l2_rate = match &exponents {
        Some(e) => e.target_l2_rate,
        None => {
            let q = Quantity::Lautum2 { direction: Direction::XToY, delay: 0 };
            match info::rate(&model, q, RateOptions { tol: cli.tol, ..RateOptions::default() }) {
                Ok(r) => Some(r.value),
                Err(Error::SupportViolation(_)) => None,
                Err(e) => return Err(e.into()),
            }
        }
    };
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    for (k, &n) in ns.iter().enumerate() {
        let test = match a.mode {
            ModeArg::Exact => error_probs(&model, n, a.delta, &rate)?,
            ModeArg::Mc => error_probs_mc(&model, n, a.delta, &rate, a.samples, cli.seed)?,
        };
        let point = match &exponents {
            Some(e) => Some(e.points[k]),
            None => np_point(n)?,
        };
        rows.push(vec![
            Cell::Int(n),
            Cell::Float(test.alpha),
            Cell::Float(test.beta),
            Cell::from(point.map(|p| p.beta_np)),
            Cell::from(point.map(|p| per_symbol(p.beta_np_randomized, n))),
            Cell::Float(rate.value),
            Cell::from(point.map(|p| per_symbol(p.alpha_np_randomized, n))),
            Cell::from(l2_rate),
        ]);
        reports.push(json!({ "test": test, "neyman_pearson": point.map(|p| json!({
            "beta": p.beta_np,
            "beta_randomized": p.beta_np_randomized,
            "alpha": p.alpha_np,
            "alpha_randomized": p.alpha_np_randomized,
        })) }));
    }
    let json = json!({
        "epsilon": a.epsilon,
        "delta": a.delta,
        "target_di_rate": rate.value,
        "rate_converged": rate.converged,
        "target_l2_rate": l2_rate,
        "fit": exponents.as_ref().map(|e| json!({
            "beta_exponent": e.beta_exponent,
            "alpha_exponent": e.alpha_exponent,
            "fit_ns": e.fit_ns,
        })),
        "points": reports,
    });
    Ok(Outcome {
        json,
        table: Some(Table {
            header: &[
                "n",
                "alpha",
                "beta",
                "beta_np",
                "exponent_beta",
                "target_di_rate",
                "exponent_alpha",
                "target_l2_rate",
            ],
            rows,
        }),
        inputs,
    })
}

fn example1_cmd(a: &Example1Args) -> Res<Outcome> {
    let model = fixtures::example1(a.p, a.q)?;
    let target = fixtures::example1_rate(a.p, a.q)?;
    let mut file = model.to_file();
    file.meta = Some(json!({
        "generator": "example1",
        "p": a.p,
        "q": a.q,
        "target_rate": target,
        "warmup": 1,
    }));
    let json = serde_json::to_value(&file).expect("model serializes");
    if let Some(path) = &a.out {
        write_atomic(path, to_json_text(&json).as_bytes())?;
    }
    Ok(Outcome { json, table: None, inputs: Vec::new() })
}
