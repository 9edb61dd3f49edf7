fn main() {
    #[cfg(feature = "generate-header")]
    {
        let crate_dir = std::env::var("CARGO_MANIFEST_DIR").unwrap();
        cbindgen::Builder::new()
            .with_crate(&crate_dir)
            .with_language(cbindgen::Language::C)
            .with_include_guard("TWOSTEP_CAPI_H")
            .with_cpp_compat(true)
            .with_documentation(true)
            .generate()
            .expect("cbindgen failed")
            .write_to_file(format!("{crate_dir}/include/twostep.h"));
    }
    println!("cargo:rerun-if-changed=src/lib.rs");
}
