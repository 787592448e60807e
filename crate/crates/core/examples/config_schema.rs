//! Prints the JSON schema of the run configuration accepted by `qamem --config`.

fn main() {
    let schema = qamem::harness::config_schema();
    println!("{}", serde_json::to_string_pretty(&schema).expect("schema serializes"));
}
