use std::env;
use std::path::PathBuf;

fn main() {
    let dir = PathBuf::from(env::var("CARGO_MANIFEST_DIR").unwrap());
    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");
    cbindgen::Builder::new()
        .with_crate(&dir)
        .with_config(cbindgen::Config::from_file(dir.join("cbindgen.toml")).expect("read cbindgen.toml"))
        .generate()
        .expect("generate C bindings")
        .write_to_file(dir.join("include/hawkes_queue.h"));
}
