use std::path::PathBuf;

fn main() {
    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");

    let crate_dir = PathBuf::from(std::env::var("CARGO_MANIFEST_DIR").unwrap());
    let config = cbindgen::Config::from_file(crate_dir.join("cbindgen.toml"))
        .expect("cbindgen.toml parses");
    let bindings = cbindgen::Builder::new()
        .with_crate(&crate_dir)
        .with_config(config)
        .generate()
        .expect("cbindgen generates the C header");

    // The committed header; only rewritten when the surface changes so
    // incremental builds stay quiet.
    let header = crate_dir.join("include").join("portopt.h");
    std::fs::create_dir_all(header.parent().unwrap()).unwrap();
    let mut fresh = Vec::new();
    bindings.write(&mut fresh);
    if std::fs::read(&header).ok().as_deref() != Some(fresh.as_slice()) {
        std::fs::write(&header, &fresh).expect("write include/portopt.h");
    }
}
