use std::env;
use std::path::PathBuf;

fn main() {
    let crate_dir = PathBuf::from(env::var("CARGO_MANIFEST_DIR").expect("set by cargo"));
    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");

    let header = crate_dir.join("include").join("qlbe.h");
    match cbindgen::generate(&crate_dir) {
        Ok(bindings) => {
            bindings.write_to_file(header);
        }
        // Parse errors abort the build; transient failures (e.g. an
        // expansion step racing a concurrent build) keep the old header.
        Err(cbindgen::Error::ParseSyntaxError { .. }) => panic!("cbindgen parse error"),
        Err(e) => println!("cargo:warning=header not regenerated: {e}"),
    }
}
