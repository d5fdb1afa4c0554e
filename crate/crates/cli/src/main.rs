mod args;
mod commands;
mod input;
mod output;

use std::io::Write;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::Parser;
use serde_json::{Map, Value};

use args::{Cli, Command};
use commands::Output;
use output::{to_json_string, Envelope, SCHEMA_VERSION};

/// Splits a serialized command into its space-separated name and the leaf
/// argument object, e.g. `{"glm":{"fit":{..}}}` into ("glm fit", {..}).
fn split_command(value: Value) -> (String, Value) {
    let mut path = Vec::new();
    let mut current = value;
    loop {
        match current {
            Value::Object(ref map) if map.len() == 1 && map.values().all(Value::is_object) => {
                let (key, inner) = map.iter().next().map(|(k, v)| (k.clone(), v.clone())).expect("one entry");
                path.push(key);
                current = inner;
            }
            _ => break,
        }
    }
    (path.join(" "), current)
}

fn join_command(name: &str, inputs: Value) -> Value {
    name.split(' ').rev().fold(inputs, |acc, key| {
        let mut map = Map::new();
        map.insert(key.to_string(), acc);
        Value::Object(map)
    })
}

fn replay(path: &std::path::Path) -> Result<Command> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let envelope: Value = serde_json::from_str(&text).with_context(|| format!("{}: not JSON", path.display()))?;
    let name = envelope
        .get("command")
        .and_then(Value::as_str)
        .ok_or_else(|| anyhow!("{}: missing `command`", path.display()))?;
    let inputs = envelope
        .get("inputs")
        .cloned()
        .ok_or_else(|| anyhow!("{}: missing `inputs` (was it written with --quiet?)", path.display()))?;
    serde_json::from_value(join_command(name, inputs)).with_context(|| format!("{}: inputs do not match `{name}`", path.display()))
}

fn execute(cli: Cli) -> Result<()> {
    let mut command = match (cli.command, &cli.from_json) {
        (Some(_), Some(_)) => bail!("--from-json cannot be combined with a subcommand"),
        (Some(c), None) => c,
        (None, Some(path)) => replay(path)?,
        (None, None) => bail!("a subcommand or --from-json is required (see --help)"),
    };
    let out = commands::run(&mut command)?;
    let (name, inputs) = split_command(serde_json::to_value(&command)?);
    let text = match out {
        Output::Text(text) => text,
        Output::Json(result) => {
            let envelope = Envelope {
                schema_version: SCHEMA_VERSION,
                command: &name,
                inputs: (!cli.quiet).then_some(&inputs),
                result,
            };
            to_json_string(&envelope)? + "\n"
        }
    };
    let mut stdout = std::io::stdout().lock();
    stdout.write_all(text.as_bytes())?;
    stdout.flush()?;
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let numerical = err
        .chain()
        .filter_map(|e| e.downcast_ref::<compatkit::Error>())
        .any(compatkit::Error::is_numerical);
    if numerical {
        3
    } else {
        2
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
